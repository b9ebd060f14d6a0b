use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::{ResultRow, ResultsTable};
use super::ExperimentError;
use crate::stats::{
    bonferroni_alpha, delta_percent, friedman, median, wilcoxon_signed_rank, Direction, FriedmanPValue, PairedMatrix,
    TestResult, ZeroMethod,
};
use crate::topology::Scenario;

/// A per-run quantity that can be compared across configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Objective,
    IterationFound,
    TimeFound,
    TotalIterations,
    TimePerIteration,
    /// `F_X` of the overall best design.
    ScenarioValue(Scenario),
    ScenarioMin(Scenario),
    ScenarioMean(Scenario),
    /// Best standalone `F_X` seen during the run.
    ScenarioBest(Scenario),
}

impl Metric {
    /// The five run metrics, in report order.
    pub const RUN: [Metric; 5] = [
        Metric::Objective,
        Metric::IterationFound,
        Metric::TimeFound,
        Metric::TotalIterations,
        Metric::TimePerIteration,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Metric::IterationFound | Metric::TimeFound | Metric::TotalIterations | Metric::TimePerIteration => {
                Direction::LowerIsBetter
            }
            _ => Direction::HigherIsBetter,
        }
    }

    pub fn title(self) -> String {
        match self {
            Metric::Objective => "Best Objective Value".into(),
            Metric::IterationFound => "Iteration Found".into(),
            Metric::TimeFound => "Time Found (ms)".into(),
            Metric::TotalIterations => "Total Iterations".into(),
            Metric::TimePerIteration => "Time per Iteration (ms)".into(),
            Metric::ScenarioValue(s) => format!("F_{s}"),
            Metric::ScenarioMin(s) => format!("F_{s} min"),
            Metric::ScenarioMean(s) => format!("F_{s} mean"),
            Metric::ScenarioBest(s) => format!("Best F_{s}"),
        }
    }

    pub fn value(self, r: &ResultRow) -> Option<f64> {
        let pick = |s: Scenario, a: Option<f64>, b: Option<f64>, c: Option<f64>| match s {
            Scenario::A => a,
            Scenario::B => b,
            Scenario::C => c,
        };
        match self {
            Metric::Objective => r.best_objective,
            Metric::IterationFound => r.iteration_found.map(|v| v as f64),
            Metric::TimeFound => r.time_found_ms,
            Metric::TotalIterations => r.total_iterations.map(|v| v as f64),
            Metric::TimePerIteration => r.time_per_iteration_ms,
            Metric::ScenarioValue(s) => pick(s, r.fa, r.fb, r.fc),
            Metric::ScenarioMin(s) => pick(s, r.fa_min, r.fb_min, r.fc_min),
            Metric::ScenarioMean(s) => pick(s, r.fa_mean, r.fb_mean, r.fc_mean),
            Metric::ScenarioBest(s) => pick(s, r.best_a, r.best_b, r.best_c),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lower = |s: &Scenario| s.to_string().to_lowercase();
        match self {
            Metric::Objective => f.write_str("objective"),
            Metric::IterationFound => f.write_str("iteration_found"),
            Metric::TimeFound => f.write_str("time_found_ms"),
            Metric::TotalIterations => f.write_str("total_iterations"),
            Metric::TimePerIteration => f.write_str("time_per_iteration_ms"),
            Metric::ScenarioValue(s) => write!(f, "f{}", lower(s)),
            Metric::ScenarioMin(s) => write!(f, "f{}_min", lower(s)),
            Metric::ScenarioMean(s) => write!(f, "f{}_mean", lower(s)),
            Metric::ScenarioBest(s) => write!(f, "best_{}", lower(s)),
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut all: Vec<Metric> = Metric::RUN.to_vec();
        for sc in Scenario::ALL {
            all.extend([
                Metric::ScenarioValue(sc),
                Metric::ScenarioMin(sc),
                Metric::ScenarioMean(sc),
                Metric::ScenarioBest(sc),
            ]);
        }
        all.into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| format!("unknown metric '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub alpha: f64,
    pub friedman: FriedmanPValue,
    pub zero: ZeroMethod,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            friedman: FriedmanPValue::default(),
            zero: ZeroMethod::Discard,
        }
    }
}

/// One configuration against the baseline inside a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label: String,
    pub wilcoxon: TestResult,
    pub median: f64,
    /// Median over instances of the per-instance relative change.
    pub delta_median_of_ratios: Option<f64>,
    /// Relative change of the two medians.
    pub delta_ratio_of_medians: Option<f64>,
    /// Set only when the difference is significant.
    pub best: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    /// Instance size, or `GLOBAL` for the pooled sizes.
    pub group: String,
    pub instances: usize,
    pub labels: Vec<String>,
    pub friedman: TestResult,
    pub median_baseline: f64,
    /// Median of every configuration, in `labels` order.
    pub medians: Vec<f64>,
    /// Empty when the Friedman gate is not passed.
    pub comparisons: Vec<Comparison>,
    /// `label -> config hash` for provenance.
    pub hashes: BTreeMap<String, String>,
}

impl GroupReport {
    pub fn median_of(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.medians[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub metric: Metric,
    pub direction: Direction,
    pub baseline: String,
    pub alpha: f64,
    /// Groups in size order, `GLOBAL` last.
    pub groups: Vec<GroupReport>,
    /// Groups that could not be analysed, with the reason.
    pub gaps: Vec<String>,
}

impl StatReport {
    pub fn group(&self, name: &str) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.group == name)
    }
}

struct Cells {
    /// instance -> label -> values over seeds
    values: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    size_of: BTreeMap<String, usize>,
    hashes: BTreeMap<String, String>,
}

fn collect(rt: &ResultsTable, metric: Metric) -> Cells {
    let mut cells = Cells {
        values: BTreeMap::new(),
        size_of: BTreeMap::new(),
        hashes: BTreeMap::new(),
    };
    for r in &rt.rows {
        cells.size_of.insert(r.instance_id.clone(), r.size);
        let entry = cells.values.entry(r.instance_id.clone()).or_default();
        let slot = entry.entry(r.config_label.clone()).or_default();
        cells.hashes.entry(r.config_label.clone()).or_insert_with(|| r.config_hash.clone());
        if r.is_ok() {
            if let Some(v) = metric.value(r) {
                slot.push(v);
            }
        }
    }
    cells
}

fn better(direction: Direction, a: f64, b: f64) -> bool {
    match direction {
        Direction::HigherIsBetter => a > b,
        Direction::LowerIsBetter => a < b,
    }
}

fn analyze_group(
    name: String,
    instances: &[String],
    labels: &[String],
    baseline: &str,
    cells: &Cells,
    metric: Metric,
    opts: &AnalysisOptions,
) -> Result<GroupReport, String> {
    let b = labels
        .iter()
        .position(|l| l == baseline)
        .ok_or_else(|| format!("{name}: baseline '{baseline}' has no runs"))?;
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    for inst in instances {
        let mut row = Vec::new();
        for l in labels {
            match cells.values[inst].get(l).filter(|v| !v.is_empty()) {
                // repeated seeds collapse to their median
                Some(v) => row.push(median(v).expect("nonempty")),
                None => missing.push(format!("{inst}/{l}")),
            }
        }
        rows.push(row);
    }
    if !missing.is_empty() {
        return Err(format!("{name}: incomplete grid, missing {}", missing.join(", ")));
    }
    let m = PairedMatrix::new(labels.to_vec(), rows, b).map_err(|e| format!("{name}: {e}"))?;
    let f = friedman(&m, opts.alpha, opts.friedman);
    let medians: Vec<f64> = (0..labels.len()).map(|j| median(&m.column(j)).expect("nonempty")).collect();
    let base_col = m.column(b);
    let alpha_post = bonferroni_alpha(labels.len(), opts.alpha);
    let direction = metric.direction();
    let mut comparisons = Vec::new();
    if f.significant() {
        for (j, l) in labels.iter().enumerate() {
            if j == b {
                continue;
            }
            let col = m.column(j);
            let w = wilcoxon_signed_rank(&col, &base_col, alpha_post, opts.zero).map_err(|e| format!("{name}: {e}"))?;
            let ratios: Option<Vec<f64>> = col.iter().zip(&base_col).map(|(s, b)| delta_percent(*s, *b).ok()).collect();
            let best = w.significant().then(|| {
                let (ms, mb) = (medians[j], medians[b]);
                let s_wins = if ms != mb {
                    better(direction, ms, mb)
                } else {
                    let diff: f64 = col.iter().zip(&base_col).map(|(s, b)| s - b).sum();
                    better(direction, diff, 0.0)
                };
                if s_wins { l.clone() } else { baseline.to_string() }
            });
            comparisons.push(Comparison {
                label: l.clone(),
                wilcoxon: w,
                median: medians[j],
                delta_median_of_ratios: ratios.map(|r| median(&r).expect("nonempty")),
                delta_ratio_of_medians: delta_percent(medians[j], medians[b]).ok(),
                best,
            });
        }
    }
    Ok(GroupReport {
        group: name,
        instances: instances.len(),
        labels: labels.to_vec(),
        friedman: f,
        median_baseline: medians[b],
        medians,
        comparisons,
        hashes: labels
            .iter()
            .filter_map(|l| cells.hashes.get(l).map(|h| (l.clone(), h.clone())))
            .collect(),
    })
}

/// Friedman gate, then Wilcoxon against `baseline` at the Bonferroni level,
/// per instance size and for the pooled sizes.
///
/// Failed runs count as missing cells; a group with any missing cell is
/// skipped and listed in `gaps`. The pooled group only uses configurations
/// present at every size.
pub fn analyze(
    rt: &ResultsTable,
    metric: Metric,
    baseline: &str,
    opts: &AnalysisOptions,
) -> Result<StatReport, ExperimentError> {
    if rt.rows.is_empty() {
        return Err(ExperimentError::Analysis("no result rows".into()));
    }
    let order = rt.labels();
    if !order.iter().any(|l| l == baseline) {
        return Err(ExperimentError::Analysis(format!("baseline '{baseline}' not in results")));
    }
    let cells = collect(rt, metric);
    let mut by_size: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (inst, size) in &cells.size_of {
        by_size.entry(*size).or_default().push(inst.clone());
    }
    let labels_at = |insts: &[String]| -> Vec<String> {
        let present: BTreeSet<&String> = insts.iter().flat_map(|i| cells.values[i].keys()).collect();
        order.iter().filter(|l| present.contains(l)).cloned().collect()
    };
    let mut groups = Vec::new();
    let mut gaps = Vec::new();
    let mut common: Option<Vec<String>> = None;
    for (size, insts) in &by_size {
        let labels = labels_at(insts);
        common = Some(match common {
            None => labels.clone(),
            Some(c) => c.into_iter().filter(|l| labels.contains(l)).collect(),
        });
        match analyze_group(size.to_string(), insts, &labels, baseline, &cells, metric, opts) {
            Ok(g) => groups.push(g),
            Err(e) => gaps.push(e),
        }
    }
    if by_size.len() > 1 {
        let all: Vec<String> = by_size.values().flatten().cloned().collect();
        let labels = common.unwrap_or_default();
        match analyze_group("GLOBAL".into(), &all, &labels, baseline, &cells, metric, opts) {
            Ok(g) => groups.push(g),
            Err(e) => gaps.push(e),
        }
    }
    Ok(StatReport {
        metric,
        direction: metric.direction(),
        baseline: baseline.to_string(),
        alpha: opts.alpha,
        groups,
        gaps,
    })
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::analysis::{Metric, StatReport};
use super::sweep::ResultsTable;
use super::ExperimentError;
use crate::stats::box_summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format '{other}' (markdown|csv)")),
        }
    }
}

fn num(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "n/a".into())
}

fn yn(b: bool) -> &'static str {
    if b {
        "Y"
    } else {
        "N"
    }
}

const DELTA_NOTE: &str = "Δ%(ratios) is the median over instances of the per-instance change \
relative to the baseline; Δ%(medians) is the change of MedianS relative to MedianB. The two \
aggregations can differ and both are shown.";

/// One section per metric: group, Ftest, Wtest, configuration, medians,
/// both Δ% aggregations and Best. A group whose Friedman test is not
/// significant gets a single `N` row.
pub fn report_markdown(title: &str, reports: &[StatReport]) -> String {
    let mut s = format!("# {title}\n\n");
    for rep in reports {
        let _ = writeln!(s, "## {}\n", rep.metric.title());
        let _ = writeln!(
            s,
            "Baseline `{}`, α = {}, post-hoc α' = α / (k(k-1)/2).\n",
            rep.baseline, rep.alpha
        );
        s.push_str("| Group | Ftest | Wtest | Config | MedianB | MedianS | Δ%(ratios) | Δ%(medians) | Best |\n");
        s.push_str("|---|---|---|---|---:|---:|---:|---:|---|\n");
        for g in &rep.groups {
            let sig = g.friedman.significant();
            if !sig {
                let _ = writeln!(s, "| {} | N | | | | | | | |", g.group);
                continue;
            }
            let _ = writeln!(s, "| {} | Y | | | {} | | | | |", g.group, num(g.median_baseline));
            for c in &g.comparisons {
                let _ = writeln!(
                    s,
                    "| | | {} | {} | | {} | {} | {} | {} |",
                    yn(c.wilcoxon.significant()),
                    c.label,
                    num(c.median),
                    opt(c.delta_median_of_ratios),
                    opt(c.delta_ratio_of_medians),
                    c.best.as_deref().unwrap_or("")
                );
            }
        }
        if !rep.gaps.is_empty() {
            s.push_str("\nNot analysed:\n\n");
            for gap in &rep.gaps {
                let _ = writeln!(s, "- {gap}");
            }
        }
        s.push('\n');
    }
    let _ = writeln!(s, "Note: {DELTA_NOTE}");
    s
}

/// Flat CSV of the same content, one row per (metric, group, configuration).
pub fn report_csv(reports: &[StatReport]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "metric",
        "group",
        "ftest_p",
        "ftest",
        "config",
        "wtest_p",
        "wtest",
        "median_baseline",
        "median",
        "delta_ratios",
        "delta_medians",
        "best",
    ])?;
    for rep in reports {
        for g in &rep.groups {
            let f = g.friedman.significant();
            let head = [rep.metric.to_string(), g.group.clone(), g.friedman.p_value.to_string(), yn(f).to_string()];
            if g.comparisons.is_empty() {
                let mut rec = head.to_vec();
                rec.extend(["".into(), "".into(), "".into(), g.median_baseline.to_string()]);
                rec.extend(["".into(), "".into(), "".into(), "".into()]);
                w.write_record(&rec)?;
            }
            for c in &g.comparisons {
                let mut rec = head.to_vec();
                rec.extend([
                    c.label.clone(),
                    c.wilcoxon.p_value.to_string(),
                    yn(c.wilcoxon.significant()).to_string(),
                    g.median_baseline.to_string(),
                    c.median.to_string(),
                    c.delta_median_of_ratios.map(|v| v.to_string()).unwrap_or_default(),
                    c.delta_ratio_of_medians.map(|v| v.to_string()).unwrap_or_default(),
                    c.best.clone().unwrap_or_default(),
                ]);
                w.write_record(&rec)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per-instance values: one row per instance, one column per
/// (metric, configuration). Repeated seeds show their first value.
pub fn per_instance_markdown(rt: &ResultsTable, metrics: &[Metric]) -> String {
    let labels = rt.labels();
    let mut by_inst: BTreeMap<(usize, String), BTreeMap<&str, &super::sweep::ResultRow>> = BTreeMap::new();
    for r in &rt.rows {
        by_inst
            .entry((r.size, r.instance_id.clone()))
            .or_default()
            .entry(r.config_label.as_str())
            .or_insert(r);
    }
    let mut s = String::from("| Size | Instance |");
    for m in metrics {
        for l in &labels {
            let _ = write!(s, " {} [{}] |", m.title(), l);
        }
    }
    s.push_str("\n|---|---|");
    for _ in 0..metrics.len() * labels.len() {
        s.push_str("---:|");
    }
    s.push('\n');
    for ((size, inst), cells) in &by_inst {
        let _ = write!(s, "| {size} | {inst} |");
        for m in metrics {
            for l in &labels {
                let v = cells.get(l.as_str()).filter(|r| r.is_ok()).and_then(|r| m.value(r));
                match v {
                    Some(v) => {
                        let _ = write!(s, " {v:.4} |");
                    }
                    None => s.push_str(" - |"),
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Box-plot statistics per configuration and size group (plus `GLOBAL`).
/// Outliers are `;`-separated.
pub fn boxplot_csv(rt: &ResultsTable, metric: Metric) -> Result<String, ExperimentError> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut sizes: Vec<usize> = rt.rows.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for r in rt.rows.iter().filter(|r| r.is_ok()) {
        if let Some(v) = metric.value(r) {
            groups.entry((r.config_label.clone(), format!("{:>6}", r.size))).or_default().push(v);
            if sizes.len() > 1 {
                groups.entry((r.config_label.clone(), "GLOBAL".into())).or_default().push(v);
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "group", "n", "min", "q1", "median", "q3", "max", "outliers"])?;
    for label in rt.labels() {
        for ((l, g), vals) in groups.iter().filter(|((l, _), _)| *l == label) {
            let b = box_summary(vals).map_err(|e| ExperimentError::Analysis(e.to_string()))?;
            let outliers: Vec<String> = b.outliers.iter().map(|v| v.to_string()).collect();
            w.write_record([
                l.clone(),
                g.trim().to_string(),
                vals.len().to_string(),
                b.min.to_string(),
                b.q1.to_string(),
                b.median.to_string(),
                b.q3.to_string(),
                b.max.to_string(),
                outliers.join(";"),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes the report (`report.md` or `report.csv`), the per-instance table
/// and one `boxplot_<metric>.csv` per analysed metric into `dir`.
pub fn emit_report(
    title: &str,
    reports: &[StatReport],
    rt: &ResultsTable,
    dir: &Path,
    format: ReportFormat,
) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<(), ExperimentError> {
        let p = dir.join(name);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    match format {
        ReportFormat::Markdown => put("report.md".into(), report_markdown(title, reports))?,
        ReportFormat::Csv => put("report.csv".into(), report_csv(reports)?)?,
    }
    let metrics: Vec<Metric> = reports.iter().map(|r| r.metric).collect();
    put("per_instance.md".into(), per_instance_markdown(rt, &metrics))?;
    for m in metrics {
        put(format!("boxplot_{m}.csv"), boxplot_csv(rt, m)?)?;
    }
    Ok(written)
}

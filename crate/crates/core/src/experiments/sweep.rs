use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::hubselect::HubStrategy;
use crate::instance::Instance;
use crate::objective::{builtin_weight_configs, WeightConfig};
use crate::radio::AntennaModel;
use crate::search::{tabu_search, SearchConfig};
use crate::topology::StructureLimits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    HubStrategy,
    PmpLimit,
    BeamWidth,
    AntennaTech,
    Weights,
    Lambda,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::HubStrategy,
        SweepKind::PmpLimit,
        SweepKind::BeamWidth,
        SweepKind::AntennaTech,
        SweepKind::Weights,
        SweepKind::Lambda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::HubStrategy => "hub",
            SweepKind::PmpLimit => "pmp",
            SweepKind::BeamWidth => "beams",
            SweepKind::AntennaTech => "antenna",
            SweepKind::Weights => "weights",
            SweepKind::Lambda => "lambda",
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown sweep kind '{s}' (hub|pmp|beams|antenna|weights|lambda)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BeamOption {
    /// Always directional with this many sectors.
    Directional(u32),
    /// 24 sectors with omni fallback above 7 active beams.
    OmniSwitch24,
}

/// One configuration of a sweep: the swept parameter's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    Hub(HubStrategy),
    Pmp(usize),
    Beams(BeamOption),
    SingleBeam(bool),
    Weights(WeightConfig),
    Lambda(f64),
}

impl Variant {
    pub fn label(&self) -> String {
        match self {
            Variant::Hub(h) => h.to_string(),
            Variant::Pmp(l) => l.to_string(),
            Variant::Beams(BeamOption::Directional(m)) => m.to_string(),
            Variant::Beams(BeamOption::OmniSwitch24) => "24-omni".into(),
            Variant::SingleBeam(true) => "single".into(),
            Variant::SingleBeam(false) => "multi".into(),
            Variant::Weights(w) => w.name.clone(),
            Variant::Lambda(l) => l.to_string(),
        }
    }

    /// `base` with only the swept parameter replaced.
    pub fn apply(&self, base: &SearchConfig) -> SearchConfig {
        let mut cfg = base.clone();
        match self {
            Variant::Hub(h) => cfg.hub_strategy = *h,
            Variant::Pmp(l) => cfg.design.limits = StructureLimits { pmp_limit: *l },
            Variant::Beams(BeamOption::Directional(m)) => {
                cfg.design.antenna = AntennaModel {
                    beam_count: *m,
                    omni_fallback: false,
                    ..base.design.antenna
                }
            }
            Variant::Beams(BeamOption::OmniSwitch24) => {
                cfg.design.antenna = AntennaModel {
                    beam_count: 24,
                    omni_fallback: true,
                    ..base.design.antenna
                }
            }
            Variant::SingleBeam(single) => {
                let a = &mut cfg.design.antenna;
                a.mode = if *single {
                    crate::radio::BeamMode::SingleBeam
                } else {
                    crate::radio::BeamMode::MultiBeam
                };
            }
            Variant::Weights(w) => cfg.design.weights = w.clone(),
            Variant::Lambda(l) => cfg.design.lambda = *l,
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub variants: Vec<Variant>,
    /// Index into `variants`.
    pub baseline: usize,
    /// Instance sizes to include; empty means all.
    pub sizes: Vec<usize>,
    pub seeds_per_cell: usize,
}

impl SweepSpec {
    /// The configuration lists studied for each sweep kind.
    pub fn standard(kind: SweepKind) -> Self {
        let (variants, baseline) = match kind {
            SweepKind::HubStrategy => (HubStrategy::ALL.iter().map(|h| Variant::Hub(*h)).collect(), 0),
            SweepKind::PmpLimit => ([5, 8, 10, 12, 15, 20, 25].iter().map(|l| Variant::Pmp(*l)).collect(), 2),
            SweepKind::BeamWidth => (
                vec![
                    Variant::Beams(BeamOption::Directional(4)),
                    Variant::Beams(BeamOption::Directional(6)),
                    Variant::Beams(BeamOption::Directional(12)),
                    Variant::Beams(BeamOption::Directional(24)),
                    Variant::Beams(BeamOption::OmniSwitch24),
                ],
                4,
            ),
            SweepKind::AntennaTech => (vec![Variant::SingleBeam(false), Variant::SingleBeam(true)], 0),
            SweepKind::Weights => (builtin_weight_configs().into_iter().map(Variant::Weights).collect(), 0),
            SweepKind::Lambda => ([0.0, 0.5, 1.0, 1.5, 2.0].iter().map(|l| Variant::Lambda(*l)).collect(), 2),
        };
        Self {
            kind,
            variants,
            baseline,
            sizes: Vec::new(),
            seeds_per_cell: 1,
        }
    }

    pub fn check(&self) -> Result<(), ExperimentError> {
        if self.variants.len() < 2 {
            return Err(ExperimentError::Spec("a sweep needs at least two configurations".into()));
        }
        if self.baseline >= self.variants.len() {
            return Err(ExperimentError::Spec("baseline index out of range".into()));
        }
        if self.seeds_per_cell == 0 {
            return Err(ExperimentError::Spec("seeds_per_cell must be positive".into()));
        }
        Ok(())
    }

    pub fn baseline_label(&self) -> String {
        self.variants[self.baseline].label()
    }

    /// Keeps only the variants whose labels are listed (baseline always kept).
    pub fn restrict(mut self, labels: &[String]) -> Result<Self, ExperimentError> {
        let base = self.baseline_label();
        for l in labels {
            if !self.variants.iter().any(|v| &v.label() == l) {
                return Err(ExperimentError::Spec(format!("no configuration labelled '{l}' in the {} sweep", self.kind)));
            }
        }
        self.variants.retain(|v| v.label() == base || labels.contains(&v.label()));
        self.baseline = self.variants.iter().position(|v| v.label() == base).expect("baseline retained");
        Ok(self)
    }
}

/// Variants applicable to an instance of `size` nodes: PMP limits above the
/// size are dropped, other sweeps pass through.
pub fn feasible_configs(spec: &SweepSpec, size: usize) -> Vec<Variant> {
    spec.variants
        .iter()
        .filter(|v| !matches!(v, Variant::Pmp(l) if *l > size))
        .cloned()
        .collect()
}

/// First 16 hex digits of the SHA-256 of the configuration's JSON.
pub fn config_hash(cfg: &SearchConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(&digest[..8])
}

/// One (instance, configuration, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub size: usize,
    pub sweep: String,
    pub config_label: String,
    pub config_hash: String,
    pub seed: u64,
    /// `ok`, or the error that ended the run.
    pub status: String,
    pub best_objective: Option<f64>,
    pub iteration_found: Option<usize>,
    pub time_found_ms: Option<f64>,
    pub total_iterations: Option<usize>,
    pub time_per_iteration_ms: Option<f64>,
    pub fa_min: Option<f64>,
    pub fa_mean: Option<f64>,
    pub fa: Option<f64>,
    pub fb_min: Option<f64>,
    pub fb_mean: Option<f64>,
    pub fb: Option<f64>,
    pub fc_min: Option<f64>,
    pub fc_mean: Option<f64>,
    pub fc: Option<f64>,
    /// Best standalone scenario values over every design the run evaluated.
    pub best_a: Option<f64>,
    pub best_b: Option<f64>,
    pub best_c: Option<f64>,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn write_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, ExperimentError> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.config_label) {
                out.push(r.config_label.clone());
            }
        }
        out
    }
}

fn run_cell(inst: &Instance, kind: SweepKind, variant: &Variant, base: &SearchConfig, seed: u64) -> ResultRow {
    let mut cfg = variant.apply(base);
    cfg.seed = seed;
    let mut row = ResultRow {
        instance_id: inst.id.clone(),
        size: inst.size(),
        sweep: kind.to_string(),
        config_label: variant.label(),
        config_hash: config_hash(&cfg),
        seed,
        status: "ok".into(),
        best_objective: None,
        iteration_found: None,
        time_found_ms: None,
        total_iterations: None,
        time_per_iteration_ms: None,
        fa_min: None,
        fa_mean: None,
        fa: None,
        fb_min: None,
        fb_mean: None,
        fb: None,
        fc_min: None,
        fc_mean: None,
        fc: None,
        best_a: None,
        best_b: None,
        best_c: None,
    };
    match tabu_search::<f64>(inst, &cfg) {
        Ok(out) => {
            let t = &out.trace;
            let c = &out.best.objective.components;
            let v = &out.best.objective.scenario_values;
            row.best_objective = Some(t.best_objective);
            row.iteration_found = Some(t.iteration_found);
            row.time_found_ms = Some(t.time_found_ms);
            row.total_iterations = Some(t.total_iterations);
            row.time_per_iteration_ms = Some(t.time_per_iteration_ms);
            (row.fa_min, row.fa_mean, row.fa) = (Some(c[0].f_min), Some(c[0].f_mean), Some(v[0]));
            (row.fb_min, row.fb_mean, row.fb) = (Some(c[1].f_min), Some(c[1].f_mean), Some(v[1]));
            (row.fc_min, row.fc_mean, row.fc) = (Some(c[2].f_min), Some(c[2].f_mean), Some(v[2]));
            row.best_a = Some(t.scenario_best[0].value);
            row.best_b = Some(t.scenario_best[1].value);
            row.best_c = Some(t.scenario_best[2].value);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Every instance x feasible configuration x seed, run on `jobs` threads.
/// Rows come back in (instance, configuration, seed) order whatever the
/// thread count. Failed runs are kept as rows with a non-`ok` status.
pub fn run_sweep(
    spec: &SweepSpec,
    suite: &[Instance],
    base: &SearchConfig,
    jobs: usize,
) -> Result<ResultsTable, ExperimentError> {
    spec.check()?;
    if suite.is_empty() {
        return Err(ExperimentError::Spec("empty instance suite".into()));
    }
    let mut cells = Vec::new();
    for inst in suite {
        if !spec.sizes.is_empty() && !spec.sizes.contains(&inst.size()) {
            continue;
        }
        for v in feasible_configs(spec, inst.size()) {
            for s in 0..spec.seeds_per_cell {
                cells.push((inst, v.clone(), base.seed + s as u64));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|(inst, v, seed)| run_cell(inst, spec.kind, v, base, *seed))
            .collect()
    });
    Ok(ResultsTable { rows })
}

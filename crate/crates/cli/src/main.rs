//! `tacnet`: generate instances, solve them, run sensitivity sweeps and
//! analyse the results.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tacnet::design::{DesignError, NetworkDesign};
use tacnet::experiments::{
    analyze, config_hash, emit_report, feasible_configs, run_sweep, AnalysisOptions, ExperimentError, Metric,
    ReportFormat, ResultsTable, StatReport, SweepKind, SweepSpec,
};
use tacnet::hubselect::HubStrategy;
use tacnet::instance::{generate_suite, load_instance, load_suite, save_instance, InstanceError, DEFAULT_AREA_KM};
use tacnet::objective::{fit_p, WeightConfig};
use tacnet::radio::BeamMode;
use tacnet::search::{tabu_search, SearchConfig, SearchError};
use tacnet::stats::{FriedmanPValue, ZeroMethod};
use tacnet::topology::{Scenario, StructureLimits};

#[derive(Parser)]
#[command(name = "tacnet", version, about = "Tactical tree network optimizer and sensitivity workbench")]
struct Cli {
    /// Print the fully resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark suite of random instances.
    Gen(GenArgs),
    /// Run tabu search on one instance.
    Solve(SolveArgs),
    /// Run a sensitivity sweep over a suite.
    Sweep(SweepArgs),
    /// Statistical comparison of a sweep's results.
    Analyze(AnalyzeArgs),
    /// Re-emit a stored analysis in another format.
    Report(ReportArgs),
    /// Least-squares p from (F, F_min, F_mean) rows.
    FitP(FitPArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,15,20,30")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    per_size: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_AREA_KM)]
    area_km: f64,
    #[arg(long, env = "TACNET_OUT_DIR", default_value = "instances")]
    out: PathBuf,
}

/// Search parameters shared by `solve` and `sweep`; flags override `--config`.
#[derive(Args)]
struct ConfigArgs {
    /// JSON search configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hub_strategy: Option<HubStrategy>,
    #[arg(long)]
    pmp: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Builtin weight set (baseline, balanced, a-dominant, ...).
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    beams: Option<u32>,
    #[arg(long)]
    single_beam: bool,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    stagnation_limit: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, env = "TACNET_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// hub | pmp | beams | antenna | weights | lambda
    #[arg(long)]
    kind: SweepKind,
    /// Directory of instance JSON files.
    #[arg(long)]
    instances: PathBuf,
    /// Only instances of these sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Only these configuration labels (the baseline is always kept).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seeds_per_cell: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, env = "TACNET_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct StatArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Chi-square Friedman p-values instead of the permutation test.
    #[arg(long)]
    chi_square: bool,
    #[arg(long, default_value_t = 100_000)]
    permutations: usize,
    /// Pratt's treatment of zero differences in the Wilcoxon test.
    #[arg(long)]
    pratt: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    results: PathBuf,
    /// Defaults to the five run metrics.
    #[arg(long, value_delimiter = ',')]
    metric: Vec<Metric>,
    /// Defaults to the baseline recorded in `configs.json` next to the results.
    #[arg(long)]
    baseline: Option<String>,
    #[command(flatten)]
    stat: StatArgs,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long, env = "TACNET_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// `analysis.json` written by `analyze`.
    #[arg(long)]
    analysis: PathBuf,
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long, env = "TACNET_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct FitPArgs {
    /// CSV with columns f, f_min, f_mean (and optionally scenario).
    #[arg(long)]
    csv: PathBuf,
    /// Keep only rows of these scenarios.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<Scenario>,
    /// Keep only rows of these instance sizes (needs a size column).
    #[arg(long, value_delimiter = ',')]
    size: Vec<usize>,
}

enum Failure {
    Usage(String),
    Infeasible(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) | Failure::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::Io(e) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Infeasible(_) | SearchError::Design(DesignError::Infeasible(_)) => Failure::Infeasible(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Io(_) | ExperimentError::Csv(_) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn with_context<T, E: std::fmt::Display>(r: Result<T, E>, path: &Path) -> Result<T, Failure> {
    r.map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn resolve_config(a: &ConfigArgs) -> Result<SearchConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = with_context(fs::read_to_string(p), p)?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => SearchConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(h) = a.hub_strategy {
        cfg.hub_strategy = h;
    }
    if let Some(l) = a.pmp {
        if l == 0 {
            return Err(Failure::Usage("--pmp must be at least 1".into()));
        }
        cfg.design.limits = StructureLimits::new(l);
    }
    if let Some(l) = a.lambda {
        cfg.design.lambda = l;
    }
    if let Some(w) = &a.weights {
        cfg.design.weights = WeightConfig::builtin(w).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(m) = a.beams {
        cfg.design.antenna.beam_count = m;
        cfg.design.antenna.omni_fallback = false;
    }
    if a.single_beam {
        cfg.design.antenna.mode = BeamMode::SingleBeam;
    }
    if let Some(m) = a.max_iterations {
        cfg.max_iterations = m;
    }
    if let Some(m) = a.stagnation_limit {
        cfg.stagnation_limit = m;
    }
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    cfg.check().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

fn gen(a: GenArgs, print_config: bool) -> CliResult {
    if print_config {
        print_json(&json!({"sizes": a.sizes, "per_size": a.per_size, "seed": a.seed, "area_km": a.area_km, "out": a.out}));
        return Ok(());
    }
    let suite = generate_suite(&a.sizes, a.per_size, a.seed, a.area_km)?;
    fs::create_dir_all(&a.out)?;
    for inst in &suite {
        save_instance(inst, &a.out.join(format!("{}.json", inst.id)))?;
    }
    println!("wrote {} instances to {}", suite.len(), a.out.display());
    Ok(())
}

const TRACE_HEADER: &str =
    "instance_id,config_hash,seed,best_objective,iteration_found,time_found_ms,total_iterations,time_per_iteration_ms";

fn solve(a: SolveArgs, print_config: bool) -> CliResult {
    let cfg = resolve_config(&a.cfg)?;
    if print_config {
        print_json(&serde_json::to_value(&cfg).expect("config serializes"));
        return Ok(());
    }
    let inst = load_instance(&a.instance).map_err(|e| match e {
        InstanceError::Io(e) => Failure::Io(format!("{}: {e}", a.instance.display())),
        other => Failure::Usage(format!("{}: {other}", a.instance.display())),
    })?;
    let out = tabu_search::<f64>(&inst, &cfg)?;
    fs::create_dir_all(&a.out)?;
    let w = &cfg.design.weights;
    fs::write(a.out.join("design.json"), NetworkDesign::from_evaluation(&inst.id, &out.best, w).to_json())?;
    for (s, ev) in Scenario::ALL.iter().zip(&out.scenario_best) {
        let doc = NetworkDesign::from_evaluation(&inst.id, ev, w);
        fs::write(a.out.join(format!("best_{s}.json")), doc.to_json())?;
    }
    let t = &out.trace;
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        inst.id,
        config_hash(&cfg),
        cfg.seed,
        t.best_objective,
        t.iteration_found,
        t.time_found_ms,
        t.total_iterations,
        t.time_per_iteration_ms
    );
    fs::write(a.out.join("trace.csv"), format!("{TRACE_HEADER}\n{row}\n"))?;
    let series: String = t.best_so_far.iter().map(|v| format!("{v}\n")).collect();
    fs::write(a.out.join("best_so_far.csv"), format!("best_so_far\n{series}"))?;
    println!(
        "{}: objective {:.4} (hub {}, found at iteration {} of {})",
        inst.id,
        t.best_objective,
        out.best.hub(),
        t.iteration_found,
        t.total_iterations
    );
    Ok(())
}

fn sweep(a: SweepArgs, print_config: bool) -> CliResult {
    let base = resolve_config(&a.cfg)?;
    let mut spec = SweepSpec::standard(a.kind);
    if !a.only.is_empty() {
        spec = spec.restrict(&a.only)?;
    }
    spec.sizes = a.sizes.clone();
    spec.seeds_per_cell = a.seeds_per_cell;
    let variants: Vec<serde_json::Value> = spec
        .variants
        .iter()
        .map(|v| {
            let c = v.apply(&base);
            json!({"label": v.label(), "hash": config_hash(&c), "config": c})
        })
        .collect();
    let manifest = json!({
        "kind": spec.kind,
        "baseline": spec.baseline_label(),
        "sizes": spec.sizes,
        "seeds_per_cell": spec.seeds_per_cell,
        "base": base,
        "variants": variants,
    });
    if print_config {
        print_json(&manifest);
        return Ok(());
    }
    let suite = load_suite(&a.instances)?;
    for inst in &suite {
        if spec.sizes.is_empty() || spec.sizes.contains(&inst.size()) {
            let n = feasible_configs(&spec, inst.size()).len();
            if n < 2 {
                eprintln!("{}: fewer than two feasible configurations, skipped", inst.id);
            }
        }
    }
    let rt = run_sweep(&spec, &suite, &base, a.jobs)?;
    fs::create_dir_all(&a.out)?;
    rt.write_csv(&a.out.join("results.csv"))?;
    fs::write(a.out.join("configs.json"), serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    let failed = rt.rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} runs ({} failed) written to {}", rt.rows.len(), failed, a.out.display());
    Ok(())
}

fn stat_options(s: &StatArgs) -> Result<AnalysisOptions, Failure> {
    if !(s.alpha > 0.0 && s.alpha < 1.0) {
        return Err(Failure::Usage("--alpha must lie in (0, 1)".into()));
    }
    Ok(AnalysisOptions {
        alpha: s.alpha,
        friedman: match (s.chi_square, FriedmanPValue::default()) {
            (false, FriedmanPValue::Permutation { seed, .. }) => FriedmanPValue::Permutation {
                draws: s.permutations,
                seed,
            },
            _ => FriedmanPValue::ChiSquare,
        },
        zero: if s.pratt { ZeroMethod::Pratt } else { ZeroMethod::Discard },
    })
}

fn recorded_baseline(results: &Path) -> Result<String, Failure> {
    let manifest = results.with_file_name("configs.json");
    let text = fs::read_to_string(&manifest)
        .map_err(|_| Failure::Usage(format!("no --baseline given and {} is missing", manifest.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", manifest.display())))?;
    v["baseline"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| Failure::Usage(format!("{}: no baseline field", manifest.display())))
}

fn title_of(results: &Path) -> String {
    let kind = results
        .with_file_name("configs.json")
        .exists()
        .then(|| fs::read_to_string(results.with_file_name("configs.json")).ok())
        .flatten()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v["kind"].as_str().map(str::to_string));
    match kind {
        Some(k) => format!("Sensitivity analysis: {k} sweep"),
        None => "Sensitivity analysis".into(),
    }
}

fn analyze_cmd(a: AnalyzeArgs, print_config: bool) -> CliResult {
    let opts = stat_options(&a.stat)?;
    let metrics = if a.metric.is_empty() { Metric::RUN.to_vec() } else { a.metric.clone() };
    let baseline = match &a.baseline {
        Some(b) => b.clone(),
        None => recorded_baseline(&a.results)?,
    };
    if print_config {
        print_json(&json!({"results": a.results, "baseline": baseline, "metrics": metrics, "options": opts}));
        return Ok(());
    }
    let rt = ResultsTable::read_csv(&a.results)?;
    let reports: Vec<StatReport> = metrics
        .iter()
        .map(|m| analyze(&rt, *m, &baseline, &opts))
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("analysis.json"), serde_json::to_string_pretty(&reports).expect("reports serialize"))?;
    let files = emit_report(&title_of(&a.results), &reports, &rt, &a.out, a.format)?;
    for r in &reports {
        for g in &r.gaps {
            eprintln!("{}: {g}", r.metric);
        }
    }
    println!("wrote {} files to {}", files.len() + 1, a.out.display());
    Ok(())
}

fn report_cmd(a: ReportArgs, print_config: bool) -> CliResult {
    if print_config {
        print_json(&json!({"analysis": a.analysis, "results": a.results, "out": a.out}));
        return Ok(());
    }
    let text = with_context(fs::read_to_string(&a.analysis), &a.analysis)?;
    let reports: Vec<StatReport> =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.analysis.display())))?;
    let rt = ResultsTable::read_csv(&a.results)?;
    let files = emit_report(&title_of(&a.results), &reports, &rt, &a.out, a.format)?;
    println!("wrote {} files to {}", files.len(), a.out.display());
    Ok(())
}

fn read_fit_rows(path: &Path, scenarios: &[Scenario], sizes: &[usize]) -> Result<Vec<(f64, f64, f64)>, Failure> {
    let mut r = with_context(csv::Reader::from_path(path), path)?;
    let headers = with_context(r.headers(), path)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (f, fmin, fmean) = match (col("f"), col("f_min"), col("f_mean")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Failure::Usage(format!("{}: need columns f, f_min, f_mean", path.display()))),
    };
    let sc = col("scenario");
    if !scenarios.is_empty() && sc.is_none() {
        return Err(Failure::Usage(format!("{}: --scenario needs a scenario column", path.display())));
    }
    let sz = col("size");
    if !sizes.is_empty() && sz.is_none() {
        return Err(Failure::Usage(format!("{}: --size needs a size column", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = with_context(rec, path)?;
        if let Some(c) = sc {
            let s: Scenario = rec[c].parse().map_err(|e| Failure::Usage(format!("row {}: {e}", i + 1)))?;
            if !scenarios.is_empty() && !scenarios.contains(&s) {
                continue;
            }
        }
        if let (Some(c), false) = (sz, sizes.is_empty()) {
            let n: usize = rec[c].trim().parse().map_err(|_| Failure::Usage(format!("row {}: bad size '{}'", i + 1, &rec[c])))?;
            if !sizes.contains(&n) {
                continue;
            }
        }
        let num = |j: usize| -> Result<f64, Failure> {
            rec[j].trim().parse().map_err(|_| Failure::Usage(format!("row {}: bad number '{}'", i + 1, &rec[j])))
        };
        rows.push((num(f)?, num(fmin)?, num(fmean)?));
    }
    Ok(rows)
}

fn fit_p_cmd(a: FitPArgs, print_config: bool) -> CliResult {
    if print_config {
        let scenarios: Vec<String> = a.scenario.iter().map(|s| s.to_string()).collect();
        print_json(&json!({"csv": a.csv, "scenario": scenarios, "size": a.size}));
        return Ok(());
    }
    let rows = read_fit_rows(&a.csv, &a.scenario, &a.size)?;
    let fit = fit_p(&rows).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("p = {:.6}", fit.p);
    println!("1/p = {:.3}", 1.0 / fit.p);
    println!("rows = {}", fit.rows);
    println!("per-row sd = {:.6}", fit.residual_sd);
    println!("F residual sd = {:.6}", fit.f_residual_sd);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pc = cli.print_config;
    let res = match cli.cmd {
        Command::Gen(a) => gen(a, pc),
        Command::Solve(a) => solve(a, pc),
        Command::Sweep(a) => sweep(a, pc),
        Command::Analyze(a) => analyze_cmd(a, pc),
        Command::Report(a) => report_cmd(a, pc),
        Command::FitP(a) => fit_p_cmd(a, pc),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

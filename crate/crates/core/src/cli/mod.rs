//! Command-line interface: `fit`, `test`, `simulate` and `diagnose`.
//!
//! Every command writes JSON-lines records. The first record describes the
//! run (version, resolved configuration, seed). With `--out-dir` the records
//! go to `<out-dir>/<command>.jsonl` and long-format tables to CSV files
//! next to it; otherwise records go to standard output.

mod config;
mod input;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::debias::{full_pipeline, DebiasedInference, PipelineConfig, SlackRule};
use crate::diagnostics::{self, GridSettings};
use crate::error::LmmError;
use crate::model::GroupedDesign;
use crate::rng;
use crate::simulate::{self, DesignModel, ScenarioConfig, TableRow};

pub use config::{AnalysisConfig, ConfigFile, Fwer, RidgeLambda};
pub use input::{design_from_dataset, parse_csv, parse_group, read_csv, Dataset};
pub use report::write_record;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Model(#[from] LmmError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 usage, 2 data, 3 numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
            CliError::Model(e) if e.is_numerical() => 3,
            CliError::Model(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ridge-lmm", version, about = "De-biased ridge inference for grouped high-dimensional data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-coefficient p-values and confidence intervals.
    Fit(AnalysisArgs),
    /// Group p-values.
    Test(AnalysisArgs),
    /// Simulation study on generated data.
    Simulate(SimulateArgs),
    /// Proportions of designs satisfying the irrepresentability and projection conditions.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV with columns group, response, covariates…
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Positive number or `auto` (1/N).
    #[arg(long)]
    pub lambda_ridge: Option<RidgeLambda>,
    #[arg(long)]
    pub n_mc: Option<usize>,
    /// `none` or `bonferroni`.
    #[arg(long)]
    pub fwer: Option<Fwer>,
    /// Covariate indices (0-based, ranges inclusive) or names, e.g. `0-9,14`. Repeatable.
    #[arg(long)]
    pub group: Vec<String>,
    /// Comma-separated random-effect columns; `intercept` or covariate names.
    #[arg(long)]
    pub random_effects: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `m1` (Toeplitz 0.2^|j-k|) or `m2` (identity); comma lists run a grid.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_mc: Option<usize>,
    /// Run the coverage comparison against the random-effects-ignoring baseline.
    #[arg(long)]
    pub comparison: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma list of dimensions.
    #[arg(long)]
    pub p: Option<String>,
    /// Comma list of active-set sizes; default `t·p/8` for `t = 1..7`.
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(&args, stdout),
        Command::Test(args) => cmd_test(&args, stdout),
        Command::Simulate(args) => cmd_simulate(&args, stdout),
        Command::Diagnose(args) => cmd_diagnose(&args, stdout),
    }
}

/// Destination for records and tables.
struct Sink<'a> {
    records: Box<dyn Write + 'a>,
    out_dir: Option<PathBuf>,
}

impl<'a> Sink<'a> {
    fn open(out_dir: Option<&Path>, command: &str, stdout: &'a mut dyn Write) -> Result<Self, CliError> {
        match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let file = std::fs::File::create(dir.join(format!("{command}.jsonl")))?;
                Ok(Sink {
                    records: Box::new(std::io::BufWriter::new(file)),
                    out_dir: Some(dir.to_path_buf()),
                })
            }
            None => Ok(Sink {
                records: Box::new(stdout),
                out_dir: None,
            }),
        }
    }

    fn record<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        write_record(&mut self.records, value)?;
        Ok(())
    }

    fn table(&mut self, name: &str, rows: &[TableRow]) -> Result<(), CliError> {
        for row in rows {
            self.record(&Tagged {
                record: "table_row",
                body: row,
            })?;
        }
        if let Some(dir) = &self.out_dir {
            let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            w.write_record(["scenario", "metric", "value", "stderr"])
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            for r in rows {
                w.write_record([
                    r.scenario.clone(),
                    r.metric.clone(),
                    format!("{:.16e}", r.value),
                    format!("{:.16e}", r.stderr),
                ])
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            }
            w.flush()?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.records.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    record: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct RunRecord<'a, C: Serialize> {
    record: &'static str,
    command: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a C,
}

fn run_record<'a, C: Serialize>(command: &'static str, seed: u64, config: &'a C) -> RunRecord<'a, C> {
    RunRecord {
        record: "run",
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config,
    }
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile, CliError> {
    match &common.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve_analysis(args: &AnalysisArgs, file: &ConfigFile) -> Result<(AnalysisConfig, PathBuf), CliError> {
    let alpha = file.pick(args.alpha, "alpha")?.unwrap_or(0.05);
    config::check_unit_interval("alpha", alpha)?;
    let eta = file.pick(args.eta, "eta")?.unwrap_or(0.005);
    if !(eta > 0.0 && eta < 0.5) {
        return Err(CliError::Usage(format!("eta must lie in (0, 1/2), got {eta}")));
    }
    let lambda_ridge = file.pick(args.lambda_ridge, "lambda_ridge")?.unwrap_or(RidgeLambda::Auto);
    let n_mc = file.pick(args.n_mc, "n_mc")?.unwrap_or(100_000);
    if n_mc < 1000 {
        return Err(CliError::Usage(format!("n_mc must be at least 1000, got {n_mc}")));
    }
    let seed = config::require_seed(file.pick(args.common.seed, "seed")?)?;
    let fwer = file.pick(args.fwer, "fwer")?.unwrap_or(Fwer::None);
    let groups = if args.group.is_empty() {
        file.get("group").map(config::split_list).unwrap_or_default()
    } else {
        args.group.clone()
    };
    let random_effects = args
        .random_effects
        .clone()
        .or_else(|| file.get("random_effects").map(String::from))
        .unwrap_or_else(|| "intercept".into())
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let input = args
        .input
        .clone()
        .or_else(|| file.get("input").map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    Ok((
        AnalysisConfig {
            alpha,
            eta,
            lambda_ridge,
            n_mc,
            seed,
            fwer,
            groups,
            random_effects,
        },
        input,
    ))
}

fn analyze(cfg: &AnalysisConfig, design: &GroupedDesign) -> Result<DebiasedInference, CliError> {
    let pipeline = PipelineConfig {
        alpha: cfg.alpha,
        lambda_ridge: match cfg.lambda_ridge {
            RidgeLambda::Auto => None,
            RidgeLambda::Value(v) => Some(v),
        },
        slack: SlackRule::Corollary { eta: cfg.eta },
        ..PipelineConfig::default()
    };
    Ok(full_pipeline(design, &pipeline)?)
}

#[derive(Serialize)]
struct ResolvedAnalysis<'a> {
    #[serde(flatten)]
    analysis: &'a AnalysisConfig,
    input: String,
}

#[derive(Serialize)]
struct CoefficientRecord<'a> {
    record: &'static str,
    index: usize,
    name: &'a str,
    /// Interval center on the original covariate scale.
    estimate: f64,
    ci_lower: f64,
    ci_upper: f64,
    /// Standardized-scale quantities.
    beta_corr: f64,
    beta_ridge: f64,
    pxt_diag: f64,
    omega_diag: f64,
    c_slack: f64,
    p_value: f64,
    p_adjusted: Option<f64>,
    reject: bool,
    reportable: bool,
    selected: bool,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    record: &'static str,
    n_obs: usize,
    n_groups: usize,
    n_covariates: usize,
    response_mean: f64,
    sigma2_hat: f64,
    tau2_hat: f64,
    tau2_raw: f64,
    sigma_scaled: f64,
    lambda_l: f64,
    rho_z: f64,
    lambda_ridge: f64,
    support_size: usize,
    support: Vec<&'a str>,
    alpha: f64,
    fwer: Fwer,
    /// Per-coefficient p-value threshold after the correction.
    threshold: f64,
    discoveries: Vec<&'a str>,
}

fn cmd_fit(args: &AnalysisArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let (cfg, input) = resolve_analysis(args, &file)?;
    let data = read_csv(&input)?;
    let design = design_from_dataset(&data, &cfg.random_effects)?;
    let inf = analyze(&cfg, &design)?;

    let mut sink = Sink::open(args.common.out_dir.as_deref(), "fit", stdout)?;
    let resolved = ResolvedAnalysis {
        analysis: &cfg,
        input: input.display().to_string(),
    };
    sink.record(&run_record("fit", cfg.seed, &resolved))?;

    let p = design.n_fixed();
    let threshold = match cfg.fwer {
        Fwer::None => cfg.alpha,
        Fwer::Bonferroni => cfg.alpha / p as f64,
    };
    let vc = inf.audit.variance.expect("estimated variance components");
    let names = &data.covariate_names;
    let mut discoveries = Vec::new();
    for (j, name) in names.iter().enumerate().take(p) {
        let scale = design.x_scaling().scale[j];
        let d = inf.pxt_diag[j];
        let reportable = inf.ci.reportable[j];
        let p_adjusted = match cfg.fwer {
            Fwer::None => None,
            Fwer::Bonferroni => Some((inf.p_single[j] * p as f64).min(1.0)),
        };
        let reject = inf.p_single[j] <= threshold;
        if reject {
            discoveries.push(name.as_str());
        }
        sink.record(&CoefficientRecord {
            record: "coefficient",
            index: j,
            name,
            estimate: if reportable { inf.beta_corr[j] / d / scale } else { f64::NAN },
            ci_lower: inf.ci.lower[j] / scale,
            ci_upper: inf.ci.upper[j] / scale,
            beta_corr: inf.beta_corr[j],
            beta_ridge: inf.beta_ridge[j],
            pxt_diag: d,
            omega_diag: inf.omega_diag[j],
            c_slack: inf.c_slack[j],
            p_value: inf.p_single[j],
            p_adjusted,
            reject,
            reportable,
            selected: inf.audit.support_hat.contains(&j),
        })?;
    }
    sink.record(&FitSummary {
        record: "summary",
        n_obs: design.n_obs(),
        n_groups: design.n_groups(),
        n_covariates: p,
        response_mean: data.response_mean(),
        sigma2_hat: vc.sigma2_hat,
        tau2_hat: vc.tau2_hat,
        tau2_raw: vc.tau2_raw,
        sigma_scaled: inf.audit.sigma_scaled,
        lambda_l: inf.audit.lambda_l,
        rho_z: inf.audit.rho_z,
        lambda_ridge: inf.audit.lambda_ridge,
        support_size: inf.audit.support_hat.len(),
        support: inf.audit.support_hat.iter().map(|&j| names[j].as_str()).collect(),
        alpha: cfg.alpha,
        fwer: cfg.fwer,
        threshold,
        discoveries,
    })?;
    sink.finish()
}

#[derive(Serialize)]
struct GroupRecord<'a> {
    record: &'static str,
    spec: &'a str,
    indices: &'a [usize],
    seed: u64,
    #[serde(flatten)]
    result: crate::debias::GroupPValue,
    reject: bool,
}

fn cmd_test(args: &AnalysisArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let (cfg, input) = resolve_analysis(args, &file)?;
    if cfg.groups.is_empty() {
        return Err(CliError::Usage("at least one --group is required".into()));
    }
    let data = read_csv(&input)?;
    let groups = cfg
        .groups
        .iter()
        .map(|g| parse_group(g, &data))
        .collect::<Result<Vec<_>, _>>()?;
    let design = design_from_dataset(&data, &cfg.random_effects)?;
    let inf = analyze(&cfg, &design)?;

    let mut sink = Sink::open(args.common.out_dir.as_deref(), "test", stdout)?;
    let resolved = ResolvedAnalysis {
        analysis: &cfg,
        input: input.display().to_string(),
    };
    sink.record(&run_record("test", cfg.seed, &resolved))?;
    let threshold = match cfg.fwer {
        Fwer::None => cfg.alpha,
        Fwer::Bonferroni => cfg.alpha / groups.len() as f64,
    };
    for (g, (spec, idx)) in cfg.groups.iter().zip(&groups).enumerate() {
        let seed = rng::derive_seed(cfg.seed, &[g as u64]);
        let result = inf.group_p_value(&design, idx, cfg.n_mc, seed)?;
        sink.record(&GroupRecord {
            record: "group",
            spec,
            indices: idx,
            seed,
            reject: result.p_value <= threshold,
            result,
        })?;
    }
    sink.finish()
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    models: Vec<DesignModel>,
    p: Vec<usize>,
    q: Vec<usize>,
    b: Vec<f64>,
    d: Vec<usize>,
    replicates: usize,
    alpha: f64,
    n_mc: usize,
    comparison: bool,
}

fn list_or<T: std::str::FromStr + Clone>(
    flag: &Option<String>,
    file: &ConfigFile,
    key: &str,
    default: &[T],
) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag.as_deref().or_else(|| file.get(key)) {
        Some(raw) => {
            let v = config::parse_list(raw, key)?;
            if v.is_empty() {
                return Err(CliError::Usage(format!("{key}: empty list")));
            }
            Ok(v)
        }
        None => Ok(default.to_vec()),
    }
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let seed = config::require_seed(file.pick(args.common.seed, "seed")?)?;
    let models: Vec<DesignModel> = list_or::<String>(&args.model, &file, "model", &["m1".into()])?
        .iter()
        .map(|m| m.parse().map_err(|e: LmmError| CliError::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    let comparison = args.comparison
        || file
            .get("comparison")
            .map(|v| v.eq_ignore_ascii_case("true"))
            .unwrap_or(false);
    let sc = SimulateConfig {
        models,
        p: list_or(&args.p, &file, "p", &[300])?,
        q: list_or(&args.q, &file, "q", &[1])?,
        b: list_or(&args.b, &file, "b", &[1.0])?,
        d: list_or(&args.d, &file, "d", &[5])?,
        replicates: file.pick(args.replicates, "replicates")?.unwrap_or(200),
        alpha: file.pick(args.alpha, "alpha")?.unwrap_or(0.05),
        n_mc: file.pick(args.n_mc, "n_mc")?.unwrap_or(10_000),
        comparison,
    };
    config::check_unit_interval("alpha", sc.alpha)?;

    let mut sink = Sink::open(args.common.out_dir.as_deref(), "simulate", stdout)?;
    sink.record(&run_record("simulate", seed, &sc))?;

    let mut rows = Vec::new();
    for &model in &sc.models {
        for &p in &sc.p {
            for &q in &sc.q {
                for &b in &sc.b {
                    for &d in &sc.d {
                        let cfg = ScenarioConfig {
                            model,
                            p,
                            q,
                            d,
                            b,
                            n_replicates: sc.replicates,
                            seed,
                            alpha: sc.alpha,
                            n_mc: sc.n_mc,
                            ..ScenarioConfig::default()
                        };
                        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                        let name = format!("{model:?}_p{p}_q{q}_b{b}_d{d}");
                        if sc.comparison {
                            let mut cfg = cfg;
                            let mut beta = vec![0.0; p];
                            for (k, v) in [0.05, 2.0, 4.0, 3.0, 0.1].into_iter().enumerate().take(p) {
                                beta[k] = v;
                            }
                            cfg.beta_star = Some(beta);
                            let report = simulate::run_comparison(&cfg)?;
                            rows.extend(comparison_rows(&name, &report));
                            sink.record(&ScenarioRecord {
                                record: "comparison",
                                scenario: &name,
                                config: &cfg,
                                report: &report,
                            })?;
                        } else {
                            let report = if p >= 200 {
                                simulate::run_group_tests(&cfg)?
                            } else {
                                simulate::run_single_tests(&cfg)?
                            };
                            rows.extend(report.long_table(&name));
                            sink.record(&ScenarioRecord {
                                record: "scenario",
                                scenario: &name,
                                config: &cfg,
                                report: &report,
                            })?;
                        }
                    }
                }
            }
        }
    }
    sink.table("simulate_table", &rows)?;
    sink.finish()
}

#[derive(Serialize)]
struct ScenarioRecord<'a, R: Serialize> {
    record: &'static str,
    scenario: &'a str,
    config: &'a ScenarioConfig,
    report: &'a R,
}

fn comparison_rows(name: &str, r: &simulate::ComparisonReport) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for (label, cov) in [("ours", &r.ours), ("baseline", &r.baseline)] {
        for (j, c) in cov.iter().enumerate().take(5) {
            rows.push(TableRow {
                scenario: name.to_string(),
                metric: format!("{label}_coverage_{j}"),
                value: c.value,
                stderr: c.stderr,
            });
        }
    }
    rows.push(TableRow {
        scenario: name.to_string(),
        metric: "coverage_gap".into(),
        value: r.gap.value,
        stderr: r.gap.stderr,
    });
    rows
}

#[derive(Debug, Serialize)]
struct DiagnoseConfig {
    p: Vec<usize>,
    d: Option<Vec<usize>>,
    settings: GridSettings,
}

fn cmd_diagnose(args: &DiagnoseArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_config(&args.common)?;
    let seed = config::require_seed(file.pick(args.common.seed, "seed")?)?;
    let settings = GridSettings {
        q: file.pick(args.q, "q")?.unwrap_or(2),
        replicates: file.pick(args.replicates, "replicates")?.unwrap_or(300),
        seed,
        ..GridSettings::default()
    };
    if settings.replicates == 0 || settings.q == 0 {
        return Err(CliError::Usage("replicates and q must be positive".into()));
    }
    let dc = DiagnoseConfig {
        p: list_or(&args.p, &file, "p", &[8, 16, 32, 64, 128, 256])?,
        d: match args.d.as_deref().or_else(|| file.get("d")) {
            Some(raw) => Some(config::parse_list(raw, "d")?),
            None => None,
        },
        settings,
    };
    let cells_wanted: Vec<(usize, usize)> = dc
        .p
        .iter()
        .flat_map(|&p| match &dc.d {
            Some(ds) => ds.iter().map(|&d| (p, d)).collect::<Vec<_>>(),
            None => (1..8).map(|t| (p, t * p / 8)).collect(),
        })
        .collect();
    if let Some(&(p, d)) = cells_wanted.iter().find(|&&(p, d)| d == 0 || d > p) {
        return Err(CliError::Usage(format!("invalid cell p={p}, d={d}")));
    }

    let mut sink = Sink::open(args.common.out_dir.as_deref(), "diagnose", stdout)?;
    sink.record(&run_record("diagnose", seed, &dc))?;
    let mut cells = Vec::new();
    for (p, d) in cells_wanted {
        let cell = diagnostics::run_cell(p, d, &dc.settings);
        sink.record(&Tagged {
            record: "cell",
            body: &cell,
        })?;
        cells.push(cell);
    }
    sink.table("diagnose_table", &diagnostics::long_table(&cells))?;
    sink.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (code, _, err) = run_args(&["ridge-lmm", "fit", "--bogus"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
    }

    #[test]
    fn missing_seed_is_usage_error() {
        let (code, _, err) = run_args(&["ridge-lmm", "diagnose", "--p", "8", "--d", "1"]);
        assert_eq!(code, 1);
        assert!(err.contains("seed"));
    }

    #[test]
    fn missing_file_is_data_error() {
        let (code, _, _) = run_args(&["ridge-lmm", "fit", "--seed", "1", "--input", "/nonexistent.csv"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = run_args(&["ridge-lmm", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn numerical_errors_map_to_three() {
        let e = CliError::Model(LmmError::Confounded { trace: 0.0 }.at("henderson_m3"));
        assert_eq!(e.exit_code(), 3);
        assert_eq!(CliError::Model(LmmError::EmptyGroup(0)).exit_code(), 2);
    }
}

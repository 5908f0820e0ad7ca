//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use asus_core::{estimators, theory, tuner, FitResult, SearchConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{AsusError, Result};
use crate::format::{self, EstimateReport, InputTable};
use crate::harness::{self, RiskReport};
use crate::sim::{Family, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(
    name = "asus",
    version,
    about = "Group-wise SURE thresholding with side information"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an estimator to a coordinate CSV.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo risk experiment.
    Simulate(SimulateArgs),
    /// Minimized two-group SURE at every grid breakpoint.
    Sweep(SweepArgs),
    /// Evaluate closed-form risk quantities.
    Theory {
        #[command(subcommand)]
        quantity: TheoryCommand,
    },
    /// SURE for K = 1..kmax and the selected group count.
    ChooseK(ChooseKArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Asus,
    Sureshrink,
    Auxscr,
    Ejs,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Grid density: ceil(mn_factor * ln n) breakpoint candidates.
    #[arg(long, default_value_t = 50.0)]
    pub mn_factor: f64,
    /// Use the universal threshold in groups that look like pure noise.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub hybrid: bool,
}

impl TuningArgs {
    fn config(&self, k: usize) -> SearchConfig {
        SearchConfig::new(k)
            .with_mn_factor(self.mn_factor)
            .with_hybrid(self.hybrid)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Coordinate CSV with `y`, `sigma` and `s` columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Estimates CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON report; defaults to the estimates path with a `.json` extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Asus)]
    pub method: Method,
    /// Number of groups (asus only).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment config; flags given explicitly override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Design name, e.g. `one-sample-s1` or `toy`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Number of coordinates; defaults to the design's own.
    #[arg(long)]
    pub n: Option<usize>,
    /// Samples per coordinate for the one-sample designs.
    #[arg(long)]
    pub m: Option<usize>,
    /// Evaluate a single auxiliary sequence (1-based).
    #[arg(long)]
    pub aux_variant: Option<usize>,
    /// Replications [default: 1].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated estimator labels.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// JSON risk report; per-replication losses go to `<stem>.losses.csv`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Coordinate CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Sweep CSV, one row per breakpoint.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct ChooseKArgs {
    /// Coordinate CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Largest group count to fit.
    #[arg(long)]
    pub kmax: usize,
    /// CSV of SURE per group count.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// Optimal-threshold expansion f(t).
    F { t: f64 },
    /// h(t) = f(t)^2 + 5.
    H { t: f64 },
    /// Leading-order risk gap without versus with ideal side information.
    Gap {
        alpha: f64,
        beta: f64,
        pi1: f64,
        sigma_bar_sq: f64,
        n: usize,
    },
    /// Risk improvement and efficiency ratio.
    Diagnostics { r_ns: f64, r_as: f64, r_os: f64 },
}

/// Experiment config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub aux_variant: Option<usize>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub estimators: Option<Vec<String>>,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Estimate(a) => estimate(&a, out),
        Command::Simulate(a) => simulate(&a, out),
        Command::Sweep(a) => sweep(&a, out),
        Command::Theory { quantity } => theory_cmd(&quantity, out),
        Command::ChooseK(a) => choose_k(&a, out),
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{line}").map_err(|source| AsusError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{ext}"))
}

pub fn fit_method(
    table: &InputTable,
    method: Method,
    k: usize,
    tuning: &TuningArgs,
) -> Result<FitResult> {
    let cfg = tuning.config(k);
    let b = &table.batch;
    Ok(match method {
        Method::Asus => tuner::fit_asus(b, &cfg)?,
        Method::Sureshrink => tuner::fit_sureshrink_with(b, &cfg)?,
        Method::Auxscr => estimators::fit_auxscr(b)?,
        Method::Ejs => estimators::fit_ejs(b)?,
    })
}

fn estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let table = format::read_input(&a.input)?;
    let fit = fit_method(&table, a.method, a.k, &a.tuning)?;
    let report = EstimateReport::new(&fit, table.batch.len(), a.tuning.mn_factor, a.tuning.hybrid);
    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| with_extension(&a.output, "json"));
    format::write_all_atomic(&[
        (a.output.clone(), format::estimates_csv(&table, &fit)?),
        (report_path, format::to_json(&report)),
    ])?;
    let sure = fit
        .sure_value
        .map_or_else(|| "-".to_string(), |s| s.to_string());
    say(
        out,
        format_args!(
            "{}: n={} groups={:?} sure={}",
            fit.estimator, report.n, report.group_sizes, sure
        ),
    )
}

fn read_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read(path).map_err(|source| AsusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&text).map_err(|source| AsusError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Merges the config file with explicit flags into a spec, estimator list
/// and replication count.
pub fn resolve_simulation(a: &SimulateArgs) -> Result<(ScenarioSpec, Vec<String>, usize)> {
    let cfg = match &a.config {
        Some(p) => read_config(p)?,
        None => SimulationConfig::default(),
    };
    let scenario = a
        .scenario
        .clone()
        .or(cfg.scenario)
        .ok_or_else(|| AsusError::Usage("--scenario is required".into()))?;
    let family: Family = scenario.parse()?;
    let seed = a
        .seed
        .or(cfg.seed)
        .ok_or_else(|| AsusError::Usage("--seed is required for simulations".into()))?;
    let mut spec = ScenarioSpec::new(family, seed);
    if let Some(n) = a.n.or(cfg.n) {
        spec.n = n;
    }
    if let Some(m) = a.m.or(cfg.m) {
        spec.m = Some(m);
    }
    spec.aux_variant = a.aux_variant.or(cfg.aux_variant);
    let reps = a.reps.or(cfg.reps).unwrap_or(1);
    let estimators = a
        .estimators
        .clone()
        .or(cfg.estimators)
        .unwrap_or_else(|| family.default_estimators());
    Ok((spec, estimators, reps))
}

pub fn losses_csv(report: &RiskReport) -> Vec<u8> {
    let mut text = String::from("rep");
    for e in &report.estimators {
        text.push(',');
        text.push_str(&e.estimator);
    }
    text.push('\n');
    for r in 0..report.reps {
        text.push_str(&r.to_string());
        for col in &report.records {
            text.push(',');
            text.push_str(&col[r].loss.to_string());
        }
        text.push('\n');
    }
    text.into_bytes()
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (spec, labels, reps) = resolve_simulation(a)?;
    let ests = harness::parse_estimators(&labels, spec.family)?;
    let report = harness::run_risk_experiment(&spec, &ests, reps)?;
    format::write_all_atomic(&[
        (a.output.clone(), format::to_json(&report)),
        (with_extension(&a.output, "losses.csv"), losses_csv(&report)),
    ])?;
    for e in &report.estimators {
        let se = e.se.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        say(
            out,
            format_args!("{:<12} risk={:.4} se={}", e.estimator, e.risk, se),
        )?;
    }
    Ok(())
}

fn sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let table = format::read_input(&a.input)?;
    let cfg = a.tuning.config(2);
    let curve = tuner::sweep_tau(&table.batch, &cfg)?;
    let single = tuner::fit_sureshrink_with(&table.batch, &cfg)?;
    let t_single = single.hp.as_ref().expect("thresholding fit").t()[0];
    let mut text = String::from("kind,tau,sure,t1,t2,n1,n2\n");
    for i in 0..curve.tau_values.len() {
        text.push_str(&format!(
            "grid,{},{},{},{},{},{}\n",
            curve.tau_values[i],
            curve.sure_values[i],
            curve.thresholds[i][0],
            curve.thresholds[i][1],
            curve.group_sizes[i][0],
            curve.group_sizes[i][1]
        ));
    }
    text.push_str(&format!(
        "reference,,{},{},,{},\n",
        curve.single_group_sure,
        t_single,
        table.batch.len()
    ));
    format::write_all_atomic(&[(a.output.clone(), text.into_bytes())])?;
    let j = curve.argmin().expect("sweep has at least one point");
    say(
        out,
        format_args!(
            "min sure={} at tau={} (single group {})",
            curve.sure_values[j], curve.tau_values[j], curve.single_group_sure
        ),
    )
}

fn choose_k(a: &ChooseKArgs, out: &mut dyn Write) -> Result<()> {
    let table = format::read_input(&a.input)?;
    let sel = tuner::select_k(&table.batch, a.kmax, &a.tuning.config(1))?;
    let mut text = String::from("k,sure,selected,elbow\n");
    for (i, s) in sel.sure_per_k.iter().enumerate() {
        let k = i + 1;
        text.push_str(&format!("{k},{s},{},{}\n", k == sel.k, k == sel.elbow));
    }
    format::write_all_atomic(&[(a.output.clone(), text.into_bytes())])?;
    say(
        out,
        format_args!("selected K={} (elbow K={})", sel.k, sel.elbow),
    )
}

/// Fixed-point decimal with `digits` significant digits.
pub fn decimal(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let after = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.after$}")
}

const DIGITS: usize = 12;

fn theory_cmd(q: &TheoryCommand, out: &mut dyn Write) -> Result<()> {
    match *q {
        TheoryCommand::F { t } => {
            let v = theory::opt_threshold_f(t)?;
            say(out, format_args!("{}", decimal(v, DIGITS)))
        }
        TheoryCommand::H { t } => {
            let v = theory::opt_threshold_h(t)?;
            say(out, format_args!("{}", decimal(v, DIGITS)))
        }
        TheoryCommand::Gap {
            alpha,
            beta,
            pi1,
            sigma_bar_sq,
            n,
        } => {
            let rp = theory::RegimeParams::new(alpha, beta, pi1, sigma_bar_sq, n)?;
            let v = theory::risk_gap_first_order(&rp)?;
            say(out, format_args!("{}", decimal(v, DIGITS)))
        }
        TheoryCommand::Diagnostics { r_ns, r_as, r_os } => {
            let d = theory::efficiency_diagnostics(r_ns, r_as, r_os)?;
            let show =
                |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| decimal(x, DIGITS));
            say(out, format_args!("RI={}", show(d.ri)))?;
            say(out, format_args!("E={}", show(d.e)))?;
            if d.clamped {
                say(
                    out,
                    format_args!("note: r_as below r_os was clamped to r_os"),
                )?;
            }
            Ok(())
        }
    }
}

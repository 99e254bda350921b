//! Command-line driver.
//!
//! Exit codes: 0 success or admit, 2 configuration error, 3 runtime
//! diagnostic failure, 4 reject.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::admission::TenantRegistry;
use crate::bounds::{self, BoundResult, LogMgf, Method};
use crate::curves::BurstinessCurve;
use crate::error::Error;
use crate::estimator::{self, VirtualQueueBank};
use crate::quadrature::QuadDiagnostics;
use crate::service_time::ServiceTimeModel;
use crate::simulator::{self, Scenario, Servers};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_REJECT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "overbook", version, about = "Server provisioning and admission bounds for token-bucket-regulated functions")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Deterministic,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    NoBlocking,
    Chernoff,
    Multiclass,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum server counts and overflow bounds.
    Bound {
        /// Server counts at which to report Ω.
        #[arg(long, value_delimiter = ',')]
        k: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
    },
    /// Simulate a scenario and export its occupancy tail.
    Simulate {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Finite server count; infinite when omitted.
        #[arg(long)]
        servers: Option<u64>,
    },
    /// Minimum servers for both reference arrival processes.
    Table1 {
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Estimate an envelope from a `timestamp,count` trace.
    Estimate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = estimator::DEFAULT_RATES)]
        rates: usize,
        /// Largest rate on the grid; defaults to 4x the trace's mean rate.
        #[arg(long)]
        peak_rate: Option<f64>,
        /// Backlog sampling step; defaults to a tenth of the mean gap.
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Decide whether a new tenant fits.
    Admit {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        tier: u32,
        #[arg(long, value_enum, default_value = "chernoff")]
        policy: Policy,
        /// Server count; falls back to the registry's `k`.
        #[arg(long)]
        k: Option<f64>,
        /// Candidate split weights for the multiclass policy.
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        /// Rewrite the registry file when the tenant is admitted.
        #[arg(long)]
        write: bool,
    },
}

/// Optional settings read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,
    pub curve: Option<BurstinessCurve>,
    pub model: Option<ServiceTimeModel>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub ks: Vec<f64>,
    #[serde(default)]
    pub methods: Vec<Method>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Fit { .. } | Error::State(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command printed and which exit code it asks for.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

/// Reads JSON from a file, reporting the failing field path and position.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        format!("field `{path}`: {inner}")
    })
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable record") + "\n"
}

fn check_epsilon(eps: f64) -> CliResult<f64> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(CliError::Config(format!("ε must lie in (0, 1), got {eps}")))
    }
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let config: ExperimentConfig = match &cli.common.config {
        Some(p) => read_json(p)?,
        None => ExperimentConfig::default(),
    };
    let out = cli.common.out.clone().or(config.out.clone());
    let seed = cli.common.seed.or(config.seed);
    let reps = cli.common.reps.or(config.reps).unwrap_or(1);
    let epsilons: Vec<f64> = match cli.common.epsilon {
        Some(e) => vec![e],
        None if !config.epsilons.is_empty() => config.epsilons.clone(),
        None => vec![0.01],
    };
    for e in &epsilons {
        check_epsilon(*e)?;
    }
    match &cli.command {
        Command::Bound { k, method } => {
            let ks = if k.is_empty() { config.ks.clone() } else { k.clone() };
            let methods = if !method.is_empty() {
                method.clone()
            } else if !config.methods.is_empty() {
                config.methods.clone()
            } else {
                vec![Method::Chernoff, Method::Markov, Method::NoBlocking]
            };
            let (curve, model) = curve_and_model(&config);
            let report = bound_report(&curve, &model, &methods, &epsilons, &ks)?;
            let text = to_json(&report);
            if let Some(dir) = &out {
                write_file(dir, "bound.json", text.as_bytes())?;
            }
            Ok(Outcome { stdout: text, code: 0 })
        }
        Command::Simulate {
            preset,
            horizon,
            servers,
        } => {
            let mut scenario = match (preset, &config.scenario) {
                (Some(Preset::Deterministic), _) => Scenario::reference_deterministic(),
                (Some(Preset::Poisson), _) => Scenario::reference_poisson(),
                (None, Some(s)) => s.clone(),
                (None, None) => Scenario::reference_poisson(),
            };
            if let Some(h) = horizon {
                scenario.horizon = *h;
            }
            if let Some(k) = servers {
                scenario.servers = Servers::Finite(*k);
            }
            if let Some(s) = seed {
                scenario.seed = s;
            }
            simulate(&scenario, reps, epsilons[0], out.as_deref())
        }
        Command::Table1 { horizon } => {
            let rows = table1(epsilons[0], seed.unwrap_or(0), reps, *horizon)?;
            let text = format_table1(&rows);
            if let Some(dir) = &out {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &rows {
                    w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
                write_file(dir, "table1.csv", &bytes)?;
            }
            Ok(Outcome { stdout: text, code: 0 })
        }
        Command::Estimate {
            trace,
            delta,
            rates,
            peak_rate,
            resolution,
        } => {
            let events = read_trace(trace)?;
            let report = estimate(&events, *delta, *rates, *peak_rate, *resolution)?;
            let text = to_json(&report);
            if let Some(dir) = &out {
                write_file(dir, "estimate.json", text.as_bytes())?;
            }
            Ok(Outcome { stdout: text, code: 0 })
        }
        Command::Admit {
            registry,
            tier,
            policy,
            k,
            weights,
            write,
        } => {
            let mut reg: TenantRegistry = read_json(registry)?;
            if let Some(e) = cli.common.epsilon {
                reg.epsilon = e;
            }
            reg.validate()?;
            let k = k.or(reg.k.map(|k| k as f64));
            let need_k = || k.ok_or_else(|| CliError::Config("no server count: pass --k or set `k` in the registry".into()));
            let decision = match policy {
                Policy::NoBlocking => reg.admit_no_blocking(*tier, need_k()?)?,
                Policy::Chernoff => reg.admit_chernoff(*tier, need_k()?)?,
                Policy::Multiclass => reg.admit_multiclass(*tier, weights)?,
            };
            if decision.admitted() && *write {
                let text = serde_json::to_string_pretty(&reg).expect("serializable registry") + "\n";
                fs::write(registry, text).map_err(|e| CliError::Config(format!("{}: {e}", registry.display())))?;
            }
            Ok(Outcome {
                stdout: to_json(&decision),
                code: if decision.admitted() { 0 } else { EXIT_REJECT },
            })
        }
    }
}

fn curve_and_model(config: &ExperimentConfig) -> (BurstinessCurve, ServiceTimeModel) {
    let reference = Scenario::reference_deterministic();
    let base = config.scenario.clone().unwrap_or(reference);
    (
        config.curve.clone().unwrap_or(base.regulator),
        config.model.clone().unwrap_or(base.model),
    )
}

/// One bound evaluated at one `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRecord {
    pub method: &'static str,
    #[serde(rename = "K")]
    pub k: f64,
    pub bound: f64,
    pub theta_star: Option<f64>,
    pub exponent: Option<f64>,
    pub diagnostics: Option<QuadDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinServers {
    pub method: &'static str,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub expected_g_of_s: f64,
    pub no_blocking_requirement: f64,
    pub min_servers: Vec<MinServers>,
    pub bounds: Vec<BoundRecord>,
}

pub fn bound_report(
    curve: &BurstinessCurve,
    model: &ServiceTimeModel,
    methods: &[Method],
    epsilons: &[f64],
    ks: &[f64],
) -> CliResult<BoundReport> {
    let mgf = LogMgf::new(curve, model);
    let eg = mgf.expected();
    let mut min_servers = Vec::new();
    let mut records = Vec::new();
    for m in methods {
        for e in epsilons {
            min_servers.push(MinServers {
                method: m.name(),
                epsilon: *e,
                k: bounds::min_servers(curve, model, *e, *m)?,
            });
        }
        for k in ks {
            let rec = match m {
                Method::Chernoff => {
                    let b: BoundResult = bounds::chernoff_with(&mgf, *k)?;
                    BoundRecord {
                        method: m.name(),
                        k: *k,
                        bound: b.probability_bound,
                        theta_star: b.theta_star.is_finite().then_some(b.theta_star),
                        exponent: b.exponent.is_finite().then_some(b.exponent),
                        diagnostics: Some(b.diagnostics),
                    }
                }
                Method::Markov => BoundRecord {
                    method: m.name(),
                    k: *k,
                    bound: if *k > 0.0 { (eg / k).min(1.0) } else { 1.0 },
                    theta_star: None,
                    exponent: None,
                    diagnostics: None,
                },
                Method::NoBlocking => BoundRecord {
                    method: m.name(),
                    k: *k,
                    bound: if mgf.ceiling() <= k + 1e-9 { 0.0 } else { 1.0 },
                    theta_star: None,
                    exponent: None,
                    diagnostics: None,
                },
            };
            records.push(rec);
        }
    }
    Ok(BoundReport {
        expected_g_of_s: eg,
        no_blocking_requirement: mgf.ceiling(),
        min_servers,
        bounds: records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub mean_q: f64,
    pub mean_q_std_error: f64,
    pub var_q: f64,
    pub admitted_rate: f64,
    pub avg_admitted_batch: f64,
    pub dropped_by_regulator: u64,
    pub blocked_at_servers: u64,
    pub total_time: f64,
    pub epsilon: f64,
    pub min_servers_simulated: u64,
    pub reps: usize,
    pub bound_violations: Vec<u64>,
    pub warnings: Vec<String>,
}

fn simulate(scenario: &Scenario, reps: usize, epsilon: f64, out: Option<&Path>) -> CliResult<Outcome> {
    let stats = simulator::run(scenario)?;
    let mut rows = simulator::tail_rows(&stats, &scenario.regulator, &scenario.model)?;
    let mut mean_q = stats.mean_estimate();
    let mut warnings = Vec::new();
    let mut errors: Vec<f64> = rows.iter().map(|r| stats.tail_estimate(r.k).std_error).collect();
    if reps >= 2 {
        let agg = simulator::replicate(scenario, reps)?;
        mean_q = agg.mean_q;
        for (row, err) in rows.iter_mut().zip(errors.iter_mut()) {
            let est = agg.tail.get(row.k as usize).copied().unwrap_or(simulator::Estimate {
                value: 0.0,
                std_error: 0.0,
            });
            row.p_q_gt_k = est.value;
            *err = est.std_error;
        }
    }
    let tails: Vec<f64> = rows.iter().map(|r| r.p_q_gt_k).collect();
    let sim_min = tails.iter().position(|p| *p < epsilon).unwrap_or(tails.len()) as u64;
    if let Some(w) = simulator::min_servers_from(&stats, epsilon)?.warning {
        warnings.push(w);
    }
    let violations: Vec<u64> = rows
        .iter()
        .zip(&errors)
        .filter(|(r, e)| r.p_q_gt_k > r.omega + 3.0 * e.max(0.0))
        .map(|(r, _)| r.k)
        .collect();
    let summary = SimulationSummary {
        mean_q: mean_q.value,
        mean_q_std_error: mean_q.std_error,
        var_q: stats.var_q,
        admitted_rate: stats.admitted_rate,
        avg_admitted_batch: stats.avg_admitted_batch,
        dropped_by_regulator: stats.dropped_by_regulator,
        blocked_at_servers: stats.blocked_at_servers,
        total_time: stats.total_time,
        epsilon,
        min_servers_simulated: sim_min,
        reps: reps.max(1),
        bound_violations: violations.clone(),
        warnings,
    };
    if let Some(dir) = out {
        let mut csv_bytes = Vec::new();
        simulator::write_tail_csv(&rows, &mut csv_bytes)?;
        write_file(dir, "tail.csv", &csv_bytes)?;
        write_file(dir, "summary.json", to_json(&summary).as_bytes())?;
    }
    let code = if violations.is_empty() { 0 } else { EXIT_RUNTIME };
    Ok(Outcome {
        stdout: to_json(&summary),
        code,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub arrivals: &'static str,
    pub simulated: u64,
    pub chernoff: u64,
    pub no_blocking: u64,
}

/// Minimum server counts for the two reference scenarios.
pub fn table1(epsilon: f64, seed: u64, reps: usize, horizon: Option<f64>) -> CliResult<Vec<Table1Row>> {
    check_epsilon(epsilon)?;
    let mut rows = Vec::new();
    for (name, mut s) in [
        ("deterministic", Scenario::reference_deterministic()),
        ("poisson", Scenario::reference_poisson()),
    ] {
        s.seed = seed;
        if let Some(h) = horizon {
            s.horizon = h;
        }
        let simulated = if reps >= 2 {
            let agg = simulator::replicate(&s, reps)?;
            agg.tail.iter().position(|e| e.value < epsilon).unwrap_or(agg.tail.len()) as u64
        } else {
            simulator::min_servers_simulated(&s, epsilon)?.k
        };
        rows.push(Table1Row {
            arrivals: name,
            simulated,
            chernoff: bounds::min_servers(&s.regulator, &s.model, epsilon, Method::Chernoff)?,
            no_blocking: bounds::min_servers(&s.regulator, &s.model, epsilon, Method::NoBlocking)?,
        });
    }
    Ok(rows)
}

pub fn format_table1(rows: &[Table1Row]) -> String {
    let mut s = format!("{:<15}{:>11}{:>10}{:>13}\n", "arrivals", "simulated", "chernoff", "no_blocking");
    for r in rows {
        let _ = writeln!(s, "{:<15}{:>11}{:>10}{:>13}", r.arrivals, r.simulated, r.chernoff, r.no_blocking);
    }
    s
}

/// Reads a `timestamp,count` CSV, rejecting unsorted or malformed lines.
pub fn read_trace(path: &Path) -> CliResult<Vec<(f64, u64)>> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_trace(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}

pub fn parse_trace(text: &str) -> Result<Vec<(f64, u64)>, String> {
    #[derive(Deserialize)]
    struct Row {
        timestamp: f64,
        count: u64,
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out: Vec<(f64, u64)> = Vec::new();
    for rec in reader.deserialize::<Row>() {
        let row = rec.map_err(|e| e.to_string())?;
        let line = out.len() + 2;
        if !(row.timestamp.is_finite() && row.timestamp >= 0.0) {
            return Err(format!("line {line}: invalid timestamp {}", row.timestamp));
        }
        if let Some(prev) = out.last() {
            if row.timestamp < prev.0 {
                return Err(format!(
                    "line {line}: timestamp {} precedes the previous {}; trace must be sorted",
                    row.timestamp, prev.0
                ));
            }
        }
        out.push((row.timestamp, row.count));
    }
    if out.is_empty() {
        return Err("trace has no events".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaRow {
    pub rate: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub curve: BurstinessCurve,
    pub sigmas: Vec<SigmaRow>,
    pub delta: f64,
    pub coverage_violation: f64,
    pub resolution: f64,
}

pub fn estimate(
    events: &[(f64, u64)],
    delta: f64,
    n_rates: usize,
    peak_rate: Option<f64>,
    resolution: Option<f64>,
) -> CliResult<EstimateReport> {
    if events.is_empty() {
        return Err(CliError::Config("trace has no events".into()));
    }
    let total: u64 = events.iter().map(|e| e.1).sum();
    let span = events[events.len() - 1].0 - events[0].0;
    let peak = match peak_rate {
        Some(p) => p,
        None if span > 0.0 => 4.0 * total as f64 / span,
        None => (total as f64).max(1.0),
    };
    let resolution = resolution
        .or_else(|| estimator::default_resolution(events))
        .unwrap_or(1.0);
    let mut bank = VirtualQueueBank::new(estimator::geometric_rates(peak, n_rates)?, delta, resolution)?;
    for &(t, n) in events {
        bank.observe(t, n)?;
    }
    let sigmas = bank.sigmas()?;
    let curve = bank.empirical_curve()?;
    Ok(EstimateReport {
        coverage_violation: estimator::coverage_violation(events, &curve),
        sigmas: bank
            .rates()
            .iter()
            .zip(&sigmas)
            .map(|(r, s)| SigmaRow { rate: *r, sigma: *s })
            .collect(),
        curve,
        delta,
        resolution,
    })
}

/// Parses arguments, runs the command, prints its output and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            outcome.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_parsing() {
        assert_eq!(parse_trace("timestamp,count\n0,3\n0.5,2\n").unwrap(), vec![(0.0, 3), (0.5, 2)]);
        let err = parse_trace("timestamp,count\n1,3\n0.5,2\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        assert!(parse_trace("timestamp,count\n").is_err());
        assert!(parse_trace("timestamp,count\nx,1\n").is_err());
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = parse_json::<ExperimentConfig>(r#"{"curve": [[5, 100]], "model": {"family": "weibull", "scale": -1, "shape": 5, "s_max": 1.4}}"#)
            .unwrap_err();
        assert!(err.contains("model"), "{err}");
        let err = parse_json::<ExperimentConfig>("{\n  \"epsilons\": [0.01],\n  \"bogus\": 1\n}").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn single_arrival_estimate() {
        let r = estimate(&[(2.0, 6)], 0.01, 8, None, None).unwrap();
        assert!(r.curve.at_zero() >= 6.0);
        assert!(estimate(&[], 0.01, 8, None, None).is_err());
    }

    #[test]
    fn bound_report_reference() {
        let s = Scenario::reference_deterministic();
        let r = bound_report(&s.regulator, &s.model, &[Method::NoBlocking, Method::Markov], &[0.01], &[145.0]).unwrap();
        assert_eq!(r.min_servers[0].k, 145);
        assert_eq!(r.min_servers[1].k, (r.expected_g_of_s / 0.01).ceil() as u64);
        assert_eq!(r.bounds[0].bound, 0.0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["overbook", "bound", "--epsilon", "2"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["overbook", "estimate", "--trace", "/nonexistent.csv"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["overbook", "bound", "--method", "no_blocking"]), 0);
    }
}

//! Command-line front end: `analyze`, `simulate` and `sweep`.
//!
//! Exit codes: 0 on success (a detected contradiction is a result, not an
//! error), 2 on invalid input, 3 when sampling or postselection fails.

pub mod report;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::builtin;
use crate::document::{self, LoadedScenario};
use crate::error::Error;
use crate::meter::exact_readouts;
use crate::montecarlo::{check_g_list, convergence_sweep, estimate_with, EstimateConfig, Experiment, SweepMode};
use crate::scenario::{prob_intermediate, prob_transition, prob_via_channel, transition_amplitude};
use crate::weakvalues::{
    channel_decomposition, paradox_report, presence_verdict, statistical_verdict, weak_value, WeakValue,
    DEFAULT_SIGMA_K, DEFAULT_ZERO_TOL,
};

use report::{
    ChannelEntry, MeterEstimateEntry, MeterSummary, MonteCarloEntry, ParadoxEntry, Report, ScenarioSummary,
    WeakValueEntry, SCHEMA,
};

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "weakvalue", version, about = "Weak values and postselected Gaussian-pointer meters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic weak values, channel amplitudes and the pair test.
    Analyze(AnalyzeArgs),
    /// Monte Carlo estimate of every window meter.
    Simulate(SimulateArgs),
    /// Weak-limit sweep of one meter over decreasing couplings.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Sampled,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Scenario document (JSON).
    #[arg(required_unless_present = "builtin")]
    pub scenario: Option<PathBuf>,
    /// Use a built-in scenario instead of a document.
    #[arg(long, conflicts_with = "scenario")]
    pub builtin: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Two orthogonal projectors, by basis or projector label.
    #[arg(long, num_args = 2, value_names = ["K1", "K2"])]
    pub pair: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub meter: String,
    /// Strictly decreasing couplings, comma separated.
    #[arg(long, default_value = "0.2,0.1,0.05,0.025")]
    pub g_list: String,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials per coupling in sampled mode.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_statistical() { EXIT_STATISTICAL } else { EXIT_INVALID };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

impl Command {
    fn input(&self) -> &InputArgs {
        match self {
            Command::Analyze(a) => &a.input,
            Command::Simulate(a) => &a.input,
            Command::Sweep(a) => &a.input,
        }
    }
}

fn load_input(input: &InputArgs) -> Result<LoadedScenario, CliError> {
    match (&input.builtin, &input.scenario) {
        (Some(name), _) => builtin::lookup(name).ok_or_else(|| {
            invalid(format!(
                "unknown built-in scenario {name:?} (available: {})",
                builtin::NAMES.join(", ")
            ))
        }),
        (None, Some(path)) => Ok(document::load(path)?),
        (None, None) => Err(invalid("a scenario document or --builtin is required")),
    }
}

fn summary(loaded: &LoadedScenario) -> ScenarioSummary {
    let s = &loaded.scenario;
    let amp = transition_amplitude(s);
    ScenarioSummary {
        name: loaded.name.clone(),
        dim: s.dim(),
        transition_amplitude_re: amp.re,
        transition_amplitude_im: amp.im,
        prob_transition: prob_transition(s),
        meters: s
            .meters()
            .iter()
            .map(|m| MeterSummary {
                label: m.label().to_owned(),
                g: m.g(),
                sigma: m.sigma(),
            })
            .collect(),
    }
}

fn wv_entry(wv: &WeakValue, zero_tol: f64) -> WeakValueEntry {
    WeakValueEntry {
        label: wv.operator_label.clone(),
        re: wv.value.re,
        im: wv.value.im,
        verdict: presence_verdict(wv, zero_tol),
    }
}

/// Weak values of every basis projector, named projector and meter
/// observable, first occurrence of each label kept.
fn weak_value_entries(loaded: &LoadedScenario, zero_tol: f64) -> Result<Vec<WeakValueEntry>, CliError> {
    let s = &loaded.scenario;
    let mut ops = Vec::new();
    for (label, p) in loaded
        .basis_labels
        .iter()
        .zip(loaded.basis().projectors())
        .chain(loaded.projectors.iter().map(|(l, p)| (l, p)))
    {
        ops.push((label.clone(), p.as_operator().clone()));
    }
    for m in s.meters() {
        ops.push((m.label().to_owned(), m.observable().reconstruct()));
    }
    let mut entries: Vec<WeakValueEntry> = Vec::new();
    for (label, op) in ops {
        if entries.iter().any(|e| e.label == label) {
            continue;
        }
        entries.push(wv_entry(&weak_value(&op, s)?.labeled(label), zero_tol));
    }
    Ok(entries)
}

fn analyze(args: &AnalyzeArgs, loaded: &LoadedScenario) -> Result<Report, CliError> {
    if !(args.zero_tol > 0.0) {
        return Err(invalid(format!("--zero-tol must be positive, got {}", args.zero_tol)));
    }
    let s = &loaded.scenario;
    let basis = loaded.basis();
    let decomposition = channel_decomposition(s, &basis)?.with_labels(loaded.basis_labels.clone())?;
    let channels = decomposition
        .labels
        .iter()
        .zip(&decomposition.channel_amplitudes)
        .enumerate()
        .map(|(k, (label, amp))| {
            Ok(ChannelEntry {
                label: label.clone(),
                amplitude_re: amp.re,
                amplitude_im: amp.im,
                prob_intermediate: prob_intermediate(s, k, &basis)?,
                prob_via_channel: prob_via_channel(s, k, &basis)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let paradox = match &args.pair {
        Some(pair) => {
            let lookup = |label: &String| {
                loaded
                    .projector(label)
                    .ok_or_else(|| invalid(format!("--pair: no basis ket or projector labeled {label:?}")))
            };
            let (p0, p1) = (lookup(&pair[0])?, lookup(&pair[1])?);
            let r = paradox_report(s, &p0, &p1, args.zero_tol)?.with_labels(&pair[0], &pair[1]);
            Some(ParadoxEntry {
                zero_tol: args.zero_tol,
                first: wv_entry(&r.wv_o, args.zero_tol),
                second: wv_entry(&r.wv_1, args.zero_tol),
                sum: wv_entry(&r.wv_sum, args.zero_tol),
                contradiction: r.contradiction,
            })
        }
        None => None,
    };

    Ok(Report {
        schema: SCHEMA.to_owned(),
        command: "analyze".to_owned(),
        scenario: summary(loaded),
        weak_values: weak_value_entries(loaded, args.zero_tol)?,
        channels: Some(channels),
        paradox,
        monte_carlo: None,
        sweep: None,
    })
}

fn simulate(args: &SimulateArgs, loaded: &LoadedScenario) -> Result<Report, CliError> {
    let s = &loaded.scenario;
    let cfg = EstimateConfig {
        n_trials: args.trials,
        seed: args.seed,
        workers: args.workers,
    };
    let estimates = estimate_with(s, &cfg)?;
    let analytic_acceptance = Experiment::prepare(s)?.acceptance_probability();
    let exact = exact_readouts(s)?;
    let entries = estimates
        .iter()
        .zip(&exact)
        .map(|(e, x)| MeterEstimateEntry {
            label: e.label.clone(),
            g: e.g,
            mean_q: e.mean_q,
            std_error: e.std_error,
            weak_value_estimate: e.weak_value_estimate,
            weak_value_std_error: e.weak_value_std_error(),
            exact_mean_q_over_g: x.real_estimate(),
            verdict: statistical_verdict(e.weak_value_estimate, e.weak_value_std_error(), DEFAULT_SIGMA_K),
        })
        .collect();
    Ok(Report {
        schema: SCHEMA.to_owned(),
        command: "simulate".to_owned(),
        scenario: summary(loaded),
        weak_values: weak_value_entries(loaded, DEFAULT_ZERO_TOL)?,
        channels: None,
        paradox: None,
        monte_carlo: Some(MonteCarloEntry {
            trials: args.trials,
            seed: args.seed,
            n_accepted: estimates[0].n_accepted,
            acceptance_rate: estimates[0].acceptance_rate,
            analytic_acceptance,
            verdict_sigma_k: DEFAULT_SIGMA_K,
            estimates: entries,
        }),
        sweep: None,
    })
}

/// Parses a comma-separated coupling list and checks it is usable.
pub fn parse_g_list(text: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("--g-list: cannot parse {t:?} as a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_g_list(&values).map_err(|e| invalid(format!("--g-list: {e}")))?;
    Ok(values)
}

fn sweep(args: &SweepArgs, loaded: &LoadedScenario) -> Result<Report, CliError> {
    let g_list = parse_g_list(&args.g_list)?;
    let mode = match args.mode {
        Mode::Exact => SweepMode::Exact,
        Mode::Sampled => SweepMode::Sampled { trials: args.trials },
    };
    let result = convergence_sweep(&loaded.scenario, &args.meter, &g_list, mode, args.seed)?;
    Ok(Report {
        schema: SCHEMA.to_owned(),
        command: "sweep".to_owned(),
        scenario: summary(loaded),
        weak_values: Vec::new(),
        channels: None,
        paradox: None,
        monte_carlo: None,
        sweep: Some(result),
    })
}

/// Builds the report for a parsed command line.
pub fn build_report(cli: &Cli) -> Result<Report, CliError> {
    let loaded = load_input(cli.command.input())?;
    match &cli.command {
        Command::Analyze(a) => analyze(a, &loaded),
        Command::Simulate(a) => simulate(a, &loaded),
        Command::Sweep(a) => sweep(a, &loaded),
    }
}

/// Runs a parsed command line and returns the rendered output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let report = build_report(cli)?;
    let input = cli.command.input();
    let rendered = match input.format {
        Format::Machine => report.to_machine(),
        Format::Text => {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            report.to_text(now)
        }
    };
    match &input.out {
        Some(path) => {
            std::fs::write(path, &rendered)
                .map_err(|e| invalid(format!("--out: cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(rendered),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("weakvalue").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn analyze_three_box_pair() {
        let report = build_report(&parse(&["analyze", "--builtin", "three-box", "--pair", "A", "C"])).unwrap();
        let p = report.paradox.unwrap();
        assert!(p.contradiction);
        assert!((p.first.re - 1.0).abs() < 1e-12);
        assert!((p.second.re + 1.0).abs() < 1e-12);
        assert!(p.sum.re.abs() < 1e-12);
        assert_eq!(p.sum.label, "A+C");
    }

    #[test]
    fn g_list_parsing() {
        assert_eq!(parse_g_list("0.2, 0.1,0.05").unwrap(), vec![0.2, 0.1, 0.05]);
        assert_eq!(parse_g_list("0.1,0.1").unwrap_err().code, EXIT_INVALID);
        assert_eq!(parse_g_list("0.2,x,0.1").unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn unknown_builtin() {
        let err = build_report(&parse(&["analyze", "--builtin", "nope"])).unwrap_err();
        assert_eq!(err.code, EXIT_INVALID);
        assert!(err.message.contains("three-box"));
    }

    #[test]
    fn unknown_pair_label() {
        let err = build_report(&parse(&["analyze", "--builtin", "three-box", "--pair", "A", "Z"])).unwrap_err();
        assert_eq!(err.code, EXIT_INVALID);
    }
}

//! Command-line flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use resqu_core::empirics::BlockFilter;
use resqu_core::sdt::{absolute_cutoff, PayoffMatrix};
use resqu_core::simulator::{AgentPolicy, Experiment};
use resqu_core::theory::ContingentPolicy;

#[derive(Debug, Parser)]
#[command(name = "resqu", version, about = "Responsibility in aided binary decisions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal policy, responsibility and trust measures for one condition.
    Theory(TheoryArgs),
    /// Seeded simulated participants; writes one log per condition.
    Simulate(SimulateArgs),
    /// Empirical measures from trial logs, optionally against theory.
    Analyze(AnalyzeArgs),
    /// HTTP session service for the live experiment.
    Serve(ServeArgs),
}

/// Signal prior and payoffs shared by several commands.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    /// Prior probability of a signal.
    #[arg(long, default_value_t = 0.4)]
    pub p_signal: f64,
    /// Payoffs as v_tp,v_tn,v_fp,v_fn.
    #[arg(long, default_value = "1,1,-1,-2", value_parser = parse_payoffs, allow_hyphen_values = true)]
    pub payoffs: PayoffMatrix,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Human sensitivity d'.
    #[arg(long, required_unless_present = "surface")]
    pub dh: Option<f64>,
    /// System sensitivity d'; 0 is an uninformative system.
    #[arg(long, required_unless_present = "surface")]
    pub da: Option<f64>,
    /// System criterion beta.
    #[arg(long, default_value_t = 1.0)]
    pub beta_a: f64,
    /// Print a responsibility surface over start:stop:step for both d' axes
    /// as CSV instead of a single report.
    #[arg(long, value_parser = parse_grid)]
    pub surface: Option<GridSpec>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("design").required(true).args(["trials", "schedule"])))]
pub struct SimulateArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// optimal | ignore[:c] | cutoffs:cr,cg[:jitter], cutoffs centered.
    #[arg(long, default_value = "optimal", allow_hyphen_values = true)]
    pub agent: AgentSpec,
    /// One session of N independent trials in a single block.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Full experiment design: two blocks of 50 trials per condition.
    #[arg(long, value_enum)]
    pub schedule: Option<Design>,
    /// Simulated participants per system order.
    #[arg(long, default_value_t = 15)]
    pub sessions: usize,
    /// Human d' for --trials.
    #[arg(long, requires = "trials")]
    pub dh: Option<f64>,
    /// System d' for --trials.
    #[arg(long, requires = "trials")]
    pub da: Option<f64>,
    /// System beta for --trials.
    #[arg(long, default_value_t = 1.0)]
    pub beta_a: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Design {
    Exp1,
    Exp2,
}

impl From<Design> for Experiment {
    fn from(d: Design) -> Self {
        match d {
            Design::Exp1 => Experiment::Exp1,
            Design::Exp2 => Experiment::Exp2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Blocks {
    SecondOnly,
    All,
}

impl From<Blocks> for BlockFilter {
    fn from(b: Blocks) -> Self {
        match b {
            Blocks::SecondOnly => BlockFilter::SecondOnly,
            Blocks::All => BlockFilter::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    /// Trial logs (line-delimited JSON).
    #[arg(long = "log", required = true, num_args = 1..)]
    pub logs: Vec<PathBuf>,
    /// Which blocks enter the analysis.
    #[arg(long, value_enum, default_value = "second-only")]
    pub blocks: Blocks,
    /// Compare against theory. Without a value the condition is read from
    /// each log's condition id; `dh,da,beta_a` forces one condition.
    #[arg(long, num_args = 0..=1, default_missing_value = "auto", value_parser = parse_theory_spec)]
    pub theory: Option<TheorySpec>,
    /// Questionnaire logs to score.
    #[arg(long = "questionnaire", num_args = 1..)]
    pub questionnaires: Vec<PathBuf>,
    /// `csv` prints the theory comparison table (needs --theory).
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write report.json (and comparison.csv with --theory) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Session files live under <data-dir>/sessions.
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    /// TOML service configuration; see the README for the schema.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in design used when no --config is given.
    #[arg(long, value_enum, default_value = "exp2")]
    pub preset: Design,
}

/// `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

fn parse_floats(s: &str, sep: char) -> Result<Vec<f64>, String> {
    s.split(sep)
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_payoffs(s: &str) -> Result<PayoffMatrix, String> {
    match parse_floats(s, ',')?[..] {
        [tp, tn, fp, fne] => PayoffMatrix::new(tp, tn, fp, fne).map_err(|e| e.to_string()),
        _ => Err("expected four values v_tp,v_tn,v_fp,v_fn".into()),
    }
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    match parse_floats(s, ':')?[..] {
        [start, stop, step] => Ok(GridSpec { start, stop, step }),
        _ => Err("expected start:stop:step".into()),
    }
}

/// Where the comparison's theory comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TheorySpec {
    FromConditionIds,
    Fixed { d_h: f64, d_a: f64, beta_a: f64 },
}

fn parse_theory_spec(s: &str) -> Result<TheorySpec, String> {
    if s == "auto" {
        return Ok(TheorySpec::FromConditionIds);
    }
    match parse_floats(s, ',')?[..] {
        [d_h, d_a, beta_a] => Ok(TheorySpec::Fixed { d_h, d_a, beta_a }),
        _ => Err("expected `auto` or dh,da,beta_a".into()),
    }
}

/// Simulated participant, with cutoffs in centered units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentSpec {
    Optimal,
    Ignore(Option<f64>),
    Cutoffs { red: f64, green: f64, jitter: f64 },
}

impl AgentSpec {
    /// The policy for a human of sensitivity `d_h`.
    pub fn policy(&self, d_h: f64) -> AgentPolicy {
        match *self {
            AgentSpec::Optimal => AgentPolicy::OptimalContingent,
            AgentSpec::Ignore(c) => AgentPolicy::IgnoreSystem {
                cutoff: c.map(|c| absolute_cutoff(d_h, c)),
            },
            AgentSpec::Cutoffs { red, green, jitter } => {
                let base = AgentPolicy::Configured(ContingentPolicy::from_centered(d_h, red, green));
                if jitter > 0.0 {
                    AgentPolicy::Jittered {
                        base: Box::new(base),
                        sd: jitter,
                    }
                } else {
                    base
                }
            }
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AgentSpec::Optimal => f.write_str("optimal"),
            AgentSpec::Ignore(None) => f.write_str("ignore"),
            AgentSpec::Ignore(Some(c)) => write!(f, "ignore:{c}"),
            AgentSpec::Cutoffs { red, green, jitter: 0.0 } => write!(f, "cutoffs:{red},{green}"),
            AgentSpec::Cutoffs { red, green, jitter } => write!(f, "cutoffs:{red},{green}:{jitter}"),
        }
    }
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{what} must be finite"))
            }
        };
        let (kind, rest) = s.split_once(':').map_or((s, None), |(k, r)| (k, Some(r)));
        match (kind, rest) {
            ("optimal", None) => Ok(AgentSpec::Optimal),
            ("ignore", None) => Ok(AgentSpec::Ignore(None)),
            ("ignore", Some(c)) => {
                let c = c.parse::<f64>().map_err(|e| format!("ignore cutoff {c:?}: {e}"))?;
                Ok(AgentSpec::Ignore(Some(finite(c, "cutoff")?)))
            }
            ("cutoffs", Some(rest)) => {
                let (pair, jitter) = rest.split_once(':').map_or((rest, None), |(p, j)| (p, Some(j)));
                let [red, green] = parse_floats(pair, ',')?[..] else {
                    return Err("cutoffs take two values: cutoffs:cr,cg[:jitter]".into());
                };
                let jitter = match jitter {
                    Some(j) => j.parse::<f64>().map_err(|e| format!("jitter {j:?}: {e}"))?,
                    None => 0.0,
                };
                if !(jitter >= 0.0 && jitter.is_finite()) {
                    return Err(format!("jitter must be finite and >= 0, got {jitter}"));
                }
                Ok(AgentSpec::Cutoffs {
                    red: finite(red, "red cutoff")?,
                    green: finite(green, "green cutoff")?,
                    jitter,
                })
            }
            _ => Err(format!("unknown agent {s:?}; use optimal, ignore[:c] or cutoffs:cr,cg[:jitter]")),
        }
    }
}

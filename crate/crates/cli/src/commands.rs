//! The `theory`, `simulate` and `analyze` commands.
//!
//! Each command returns what it prints so tests can check it without a
//! subprocess. Output never contains timings or other run-dependent values.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use resqu_core::empirics::{
    comparison_csv, comparison_row, empirical_report, filter_blocks, group_by_condition,
    measured_responsibility, parse_log, parse_questionnaires, questionnaire_scores,
    reports_by_session, trust_deviations, write_log, BlockFilter, ComparisonRow, EmpiricalReport,
    QuestionnaireRecord, SubjectiveReport, TrialRecord, TrustDeviations,
};
use resqu_core::sdt::{DetectorParams, Environment, PayoffMatrix};
use resqu_core::simulator::{
    run_experiment, run_session, CellSummary, Experiment, Schedule, SessionSpec, SessionSummary,
};
use resqu_core::theory::{
    responsibility_surface, theoretical_responsibility, theory_report, AidedProblem, GridAxis,
    TheoryReport,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, EnvArgs, Format, SimulateArgs, TheoryArgs, TheorySpec};
use crate::error::{usage, CliError};

type Result<T> = std::result::Result<T, CliError>;

fn problem(env: &EnvArgs, d_h: f64, d_a: f64, beta_a: f64) -> Result<AidedProblem> {
    AidedProblem::new(
        Environment::new(env.p_signal).map_err(usage)?,
        d_h,
        DetectorParams::new(d_a, beta_a).map_err(usage)?,
        env.payoffs,
    )
    .map_err(usage)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn theory(args: &TheoryArgs) -> Result<String> {
    if let Some(g) = args.surface {
        let axis = GridAxis::new(g.start, g.stop, g.step).map_err(usage)?;
        let env = Environment::new(args.env.p_signal).map_err(usage)?;
        let surface = responsibility_surface(&axis, &axis, &env, &args.env.payoffs, args.beta_a).map_err(usage)?;
        return Ok(surface.to_csv());
    }
    let (Some(d_h), Some(d_a)) = (args.dh, args.da) else {
        return Err(CliError::Usage("--dh and --da are required without --surface".into()));
    };
    let report = theory_report(&problem(&args.env, d_h, d_a, args.beta_a)?).map_err(usage)?;
    Ok(to_json(&report))
}

/// Per-condition line of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition_id: String,
    pub log: String,
    pub sessions: usize,
    pub trials: usize,
    pub total_score: i64,
    /// Optimal-policy responsibility; `None` when it is undefined.
    pub theoretical_responsibility: Option<f64>,
    /// Over every logged trial, all blocks.
    pub measured_responsibility: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub agent: String,
    pub schedule: Schedule,
    pub conditions: Vec<ConditionSummary>,
    pub sessions: Vec<SessionSummary>,
    /// Per condition and system order; empty for single-condition runs.
    pub cells: Vec<CellSummary>,
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(CliError::io(path))
}

/// Runs the simulation, writes the logs and `summary.json`, and returns the
/// text printed to stdout. Warnings go to `warn`.
pub fn simulate(args: &SimulateArgs, warn: &mut dyn Write) -> Result<String> {
    let mut logs: BTreeMap<String, Vec<TrialRecord>> = BTreeMap::new();
    let mut problems: BTreeMap<String, AidedProblem> = BTreeMap::new();
    let (schedule, sessions, cells) = match (args.trials, args.schedule) {
        (Some(trials), None) => {
            let (Some(d_h), Some(d_a)) = (args.dh, args.da) else {
                return Err(CliError::Usage("--trials needs --dh and --da".into()));
            };
            let p = problem(&args.env, d_h, d_a, args.beta_a)?;
            if trials == 0 {
                writeln!(warn, "warning: --trials 0 writes an empty log").ok();
            }
            let schedule = Schedule::iid(trials);
            let spec = SessionSpec {
                session_id: "sim-000".into(),
                stream: 0,
            };
            let log = run_session(&p, &args.agent.policy(d_h), &schedule, args.seed, &spec).map_err(usage)?;
            logs.insert(p.condition_id(), log.records);
            problems.insert(p.condition_id(), p);
            (schedule, vec![log.summary], Vec::new())
        }
        (None, Some(design)) => {
            let experiment = Experiment::from(design);
            let policies = experiment
                .problems()
                .iter()
                .map(|p| (p.condition_id(), args.agent.policy(p.d_h)))
                .collect();
            let schedule = Schedule::two_blocks_of_fifty();
            let run = run_experiment(experiment, &policies, &schedule, args.sessions, args.seed).map_err(usage)?;
            if args.sessions == 0 {
                writeln!(warn, "warning: --sessions 0 writes empty logs").ok();
            }
            problems = run.problems;
            for id in problems.keys() {
                logs.insert(id.clone(), run.logs.get(id).cloned().unwrap_or_default());
            }
            (schedule, run.sessions, run.cells)
        }
        _ => return Err(CliError::Usage("give exactly one of --trials and --schedule".into())),
    };

    fs::create_dir_all(&args.out).map_err(CliError::io(&args.out))?;
    let mut conditions = Vec::new();
    for (id, records) in &logs {
        let name = format!("{id}.jsonl");
        let path = args.out.join(&name);
        write_file(&path, |w| write_log(w, records).map_err(std::io::Error::other))?;
        conditions.push(ConditionSummary {
            condition_id: id.clone(),
            log: name,
            sessions: sessions.iter().filter(|s| &s.condition_id == id).count(),
            trials: records.len(),
            total_score: records.iter().map(|t| t.payoff).sum(),
            theoretical_responsibility: theoretical_responsibility(&problems[id]).ok(),
            measured_responsibility: measured_responsibility(records).ok(),
        });
    }
    let summary = SimulationSummary {
        seed: args.seed,
        agent: args.agent.to_string(),
        schedule,
        conditions,
        sessions,
        cells,
    };
    let path = args.out.join("summary.json");
    write_file(&path, |w| w.write_all(to_json(&summary).as_bytes()))?;

    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    let mut out = String::new();
    for c in &summary.conditions {
        out.push_str(&format!(
            "{}: {} trials, score {}, responsibility theory {} measured {}\n",
            c.condition_id,
            c.trials,
            c.total_score,
            fmt(c.theoretical_responsibility),
            fmt(c.measured_responsibility)
        ));
    }
    Ok(out)
}

/// Inverse of [`AidedProblem::condition_id`]: `dh1-da2.3-ba0.03`.
pub fn parse_condition_id(id: &str) -> Option<(f64, f64, f64)> {
    let mut parts = id.split('-');
    let mut field = |prefix: &str| parts.next()?.strip_prefix(prefix)?.parse::<f64>().ok();
    let parsed = (field("dh")?, field("da")?, field("ba")?);
    parts.next().is_none().then_some(parsed)
}

/// Everything `analyze` knows about one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionAnalysis {
    pub report: EmpiricalReport,
    pub sessions: BTreeMap<String, EmpiricalReport>,
    pub theory: Option<TheoryReport>,
    pub deviations: Option<TrustDeviations>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub blocks: &'static str,
    pub conditions: BTreeMap<String, ConditionAnalysis>,
    pub comparison: Vec<ComparisonRow>,
    pub subjective: Vec<SubjectiveReport>,
}

fn read_trials(paths: &[impl AsRef<Path>], payoffs: &PayoffMatrix) -> Result<Vec<TrialRecord>> {
    let mut all = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(CliError::io(path))?;
        let records = parse_log(BufReader::new(file), payoffs).map_err(|source| CliError::Input {
            path: path.to_path_buf(),
            source,
        })?;
        all.extend(records);
    }
    Ok(all)
}

fn read_questionnaires(paths: &[impl AsRef<Path>]) -> Result<Vec<QuestionnaireRecord>> {
    let mut all = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path).map_err(CliError::io(path))?;
        all.extend(parse_questionnaires(BufReader::new(file)).map_err(|source| CliError::Input {
            path: path.to_path_buf(),
            source,
        })?);
    }
    Ok(all)
}

fn theory_for(spec: TheorySpec, condition_id: &str, env: &EnvArgs) -> Result<TheoryReport> {
    let (d_h, d_a, beta_a) = match spec {
        TheorySpec::Fixed { d_h, d_a, beta_a } => (d_h, d_a, beta_a),
        TheorySpec::FromConditionIds => parse_condition_id(condition_id).ok_or_else(|| {
            CliError::Usage(format!(
                "condition id {condition_id:?} does not name its parameters; pass --theory dh,da,beta_a"
            ))
        })?,
    };
    Ok(theory_report(&problem(env, d_h, d_a, beta_a)?)?)
}

pub fn analyze_trials(
    trials: &[TrialRecord],
    filter: BlockFilter,
    theory: Option<TheorySpec>,
    env: &EnvArgs,
    questionnaires: &[QuestionnaireRecord],
) -> Result<Analysis> {
    let kept = filter_blocks(trials, filter);
    if kept.is_empty() {
        let hint = if filter == BlockFilter::SecondOnly && !trials.is_empty() {
            "; the logs have only block 1, use --blocks all"
        } else {
            ""
        };
        return Err(resqu_core::Error::InsufficientData(format!("no trials left to analyze{hint}")).into());
    }
    let mut conditions = BTreeMap::new();
    let mut comparison = Vec::new();
    for (id, group) in group_by_condition(&kept) {
        let report = empirical_report(&group)?;
        let (theory, deviations) = match theory {
            Some(spec) => {
                let t = theory_for(spec, &id, env)?;
                comparison.push(comparison_row(&report, &t)?);
                let d = trust_deviations(&report, &t)?;
                (Some(t), Some(d))
            }
            None => (None, None),
        };
        conditions.insert(
            id,
            ConditionAnalysis {
                sessions: reports_by_session(&group)?,
                report,
                theory,
                deviations,
            },
        );
    }
    Ok(Analysis {
        blocks: match filter {
            BlockFilter::SecondOnly => "second-only",
            BlockFilter::All => "all",
        },
        conditions,
        comparison,
        subjective: questionnaire_scores(questionnaires)?,
    })
}

pub fn analyze(args: &AnalyzeArgs) -> Result<String> {
    if args.format == Format::Csv && args.theory.is_none() {
        return Err(CliError::Usage("--format csv needs --theory".into()));
    }
    let trials = read_trials(&args.logs, &args.env.payoffs)?;
    let questionnaires = read_questionnaires(&args.questionnaires)?;
    let analysis = analyze_trials(&trials, args.blocks.into(), args.theory, &args.env, &questionnaires)?;
    let json = to_json(&analysis);
    let csv = comparison_csv(&analysis.comparison);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        write_file(&dir.join("report.json"), |w| w.write_all(json.as_bytes()))?;
        if args.theory.is_some() {
            write_file(&dir.join("comparison.csv"), |w| w.write_all(csv.as_bytes()))?;
        }
    }
    Ok(match args.format {
        Format::Json => json,
        Format::Csv => csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_ids_roundtrip() {
        for (d_h, d_a, beta) in [(1.0, 2.3, 1.0), (2.3, 1.0, 0.03), (0.5, 0.0, 10.0)] {
            let p = AidedProblem::quality_control(d_h, d_a, beta).unwrap();
            assert_eq!(parse_condition_id(&p.condition_id()), Some((d_h, d_a, beta)));
        }
        for bad in ["", "syn", "dh1-da2", "dh1-da2-ba1-x", "dhx-da1-ba1"] {
            assert_eq!(parse_condition_id(bad), None, "{bad}");
        }
    }
}

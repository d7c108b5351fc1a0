//! One participant's session: the plan, the cursor and the durable logs.
//!
//! A session directory holds `session.json` (plan, seed key and a cached
//! cursor), `trials.jsonl` and `questionnaires.jsonl` (append-only, synced
//! before a request is acknowledged) and `flags.jsonl` (display timeouts).
//! The logs are the source of truth: loading a session replays them and
//! drops a torn final line, which by construction was never acknowledged.
//!
//! Every stimulus is a pure function of the session key and the trial index,
//! so a replayed session shows exactly the stimulus it showed before.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use resqu_core::empirics::{
    empirical_report, filter_blocks, parse_log, parse_questionnaires, BlockFilter, EmpiricalReport,
    QuestionnaireRecord, TrialRecord,
};
use resqu_core::sdt::{DetectorParams, Environment, PayoffMatrix};
use resqu_core::simulator::{deck_rng, sample_trial, sample_trial_with_state, stratified_deck, stream_seed, trial_rng, Schedule};
use resqu_core::theory::AidedProblem;
use resqu_core::types::{Indication, Response, TrueState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Rendering, ServiceConfig};

const SNAPSHOT: &str = "session.json";
const TRIALS: &str = "trials.jsonl";
const QUESTIONNAIRES: &str = "questionnaires.jsonl";
const FLAGS: &str = "flags.jsonl";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Gone(String),
    #[error("{0}")]
    Invalid(String),
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error("corrupt session {0}: {1}")]
    Corrupt(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedCondition {
    pub condition_id: String,
    pub d_h: f64,
    pub d_a: f64,
    pub beta_a: f64,
}

/// What a participant will go through; sent to the client on creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Index of the counterbalancing order.
    pub order: usize,
    pub conditions: Vec<PlannedCondition>,
    pub schedule: Schedule,
    pub trials_per_condition: u64,
    pub p_signal: f64,
    pub payoffs: PayoffMatrix,
    pub rendering: Rendering,
    pub display_timeout_ms: u64,
}

impl Plan {
    pub fn from_config(config: &ServiceConfig, order: usize) -> Self {
        let conditions = config.orders[order]
            .conditions
            .iter()
            .map(|c| PlannedCondition {
                condition_id: config.problem(c).expect("validated config").condition_id(),
                d_h: c.d_h,
                d_a: c.d_a,
                beta_a: c.beta_a,
            })
            .collect();
        Self {
            order,
            conditions,
            schedule: config.schedule,
            trials_per_condition: config.schedule.total_trials(),
            p_signal: config.p_signal,
            payoffs: config.payoffs,
            rendering: config.rendering,
            display_timeout_ms: config.display_timeout_ms,
        }
    }

    fn problem(&self, condition: usize) -> AidedProblem {
        let c = &self.conditions[condition];
        AidedProblem {
            env: Environment { p_signal: self.p_signal },
            d_h: c.d_h,
            system: DetectorParams {
                d_prime: c.d_a,
                beta: c.beta_a,
            },
            payoffs: self.payoffs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Snapshot {
    session_id: String,
    participant_id: String,
    /// Seed of every draw in the session; never sent to the client.
    key: u64,
    plan: Plan,
    answered: u64,
    questionnaires: usize,
    total: i64,
    complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub x_px: u32,
    pub y_px: u32,
}

/// The client's view of a trial. It carries no trace of the true state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    /// 0-based across the whole session.
    pub trial_index: u64,
    /// 1-based within the current condition.
    pub block: u32,
    pub indicator: Indication,
    pub height_px: u32,
    pub position: Position,
}

#[derive(Debug, Clone, Copy)]
struct Drawn {
    stimulus: Stimulus,
    true_state: TrueState,
    observation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Trial { condition: usize, trial_index: u64 },
    Questionnaire { condition: usize },
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRequest {
    pub trial_index: u64,
    pub response: Response,
    #[serde(default)]
    pub rt_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feedback {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseReply {
    pub correct: bool,
    /// Points for this trial.
    pub payoff: i64,
    /// Running session total.
    pub total: i64,
    pub feedback: Feedback,
    /// The "Last Trial" value; equal to `payoff`.
    pub delta: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireItems {
    pub q1: u8,
    pub q2: u8,
    pub q3: u8,
    pub q4: u8,
    pub q5: u8,
    pub q6: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireReply {
    pub condition_id: String,
    /// Whether the last condition has now been completed.
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
struct FlagRecord<'a> {
    session_id: &'a str,
    condition_id: &'a str,
    trial_index: u64,
    kind: &'static str,
    timeout_ms: u64,
    shown_ms: Option<u64>,
    rt_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition_id: String,
    pub trials: usize,
    pub total_score: i64,
    pub block_scores: Vec<i64>,
    pub questionnaire: Option<QuestionnaireRecord>,
    /// Measures over blocks 2 and later; `None` before any such trial.
    pub measures: Option<EmpiricalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub session_id: String,
    pub participant_id: String,
    pub complete: bool,
    pub trials_answered: u64,
    pub total_score: i64,
    pub conditions: Vec<ConditionReport>,
}

pub struct Session {
    dir: PathBuf,
    snap: Snapshot,
    /// Trial index and time of the first display of the pending stimulus.
    shown: Option<(u64, Instant)>,
}

fn append_line(path: &Path, line: &str) -> std::io::Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(format!("{line}\n").as_bytes())?;
    file.sync_data()
}

/// Contents up to the last newline. A trailing partial line is cut off the
/// file as well, so later appends start on a fresh line.
fn read_complete_lines(path: &Path) -> std::io::Result<String> {
    let mut text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(String::new()),
        Err(e) => return Err(e),
    };
    if !text.is_empty() && !text.ends_with('\n') {
        let keep = text.rfind('\n').map_or(0, |i| i + 1);
        text.truncate(keep);
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(keep as u64)?;
        file.sync_data()?;
    }
    Ok(text)
}

impl Session {
    pub fn create(dir: PathBuf, session_id: String, participant_id: String, key: u64, plan: Plan) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        for name in [TRIALS, QUESTIONNAIRES, FLAGS] {
            File::create(dir.join(name))?.sync_all()?;
        }
        let session = Self {
            dir,
            snap: Snapshot {
                session_id,
                participant_id,
                key,
                plan,
                answered: 0,
                questionnaires: 0,
                total: 0,
                complete: false,
            },
            shown: None,
        };
        session.write_snapshot()?;
        Ok(session)
    }

    /// Rebuilds a session from its directory by replaying the logs.
    pub fn load(dir: PathBuf) -> Result<Self, SessionError> {
        let corrupt = |msg: String| SessionError::Corrupt(dir.display().to_string(), msg);
        let mut snap: Snapshot = serde_json::from_str(&fs::read_to_string(dir.join(SNAPSHOT))?)
            .map_err(|e| corrupt(format!("{SNAPSHOT}: {e}")))?;
        let trials = read_complete_lines(&dir.join(TRIALS))?;
        let records = parse_log(trials.as_bytes(), &snap.plan.payoffs).map_err(|e| corrupt(format!("{TRIALS}: {e}")))?;
        for (i, r) in records.iter().enumerate() {
            if r.trial_index != i as u64 || r.session_id != snap.session_id {
                return Err(corrupt(format!("{TRIALS}: unexpected record {} at position {i}", r.trial_index)));
            }
        }
        let questionnaires = read_complete_lines(&dir.join(QUESTIONNAIRES))?;
        let answers = parse_questionnaires(questionnaires.as_bytes()).map_err(|e| corrupt(format!("{QUESTIONNAIRES}: {e}")))?;
        read_complete_lines(&dir.join(FLAGS))?;

        let n = snap.plan.trials_per_condition;
        let answered = records.len() as u64;
        let q = answers.len();
        if q > snap.plan.conditions.len() || answered > (q as u64 + 1) * n || answered < q as u64 * n {
            return Err(corrupt(format!("{answered} trials and {q} questionnaires do not fit the plan")));
        }
        snap.answered = answered;
        snap.questionnaires = q;
        snap.total = records.iter().map(|r| r.payoff).sum();
        snap.complete = q == snap.plan.conditions.len();
        let session = Self { dir, snap, shown: None };
        session.write_snapshot()?;
        Ok(session)
    }

    fn write_snapshot(&self) -> std::io::Result<()> {
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let mut file = File::create(&tmp)?;
        file.write_all(serde_json::to_string_pretty(&self.snap).expect("snapshot serializes").as_bytes())?;
        file.sync_all()?;
        fs::rename(tmp, self.dir.join(SNAPSHOT))
    }

    pub fn id(&self) -> &str {
        &self.snap.session_id
    }

    pub fn plan(&self) -> &Plan {
        &self.snap.plan
    }

    pub fn total(&self) -> i64 {
        self.snap.total
    }

    pub fn phase(&self) -> Phase {
        let n = self.snap.plan.trials_per_condition;
        let q = self.snap.questionnaires;
        if q == self.snap.plan.conditions.len() {
            Phase::Complete
        } else if self.snap.answered >= (q as u64 + 1) * n {
            Phase::Questionnaire { condition: q }
        } else {
            Phase::Trial {
                condition: q,
                trial_index: self.snap.answered,
            }
        }
    }

    fn draw(&self, condition: usize, trial_index: u64) -> Drawn {
        let plan = &self.snap.plan;
        let problem = plan.problem(condition);
        let key = stream_seed(self.snap.key, &[condition as u64]);
        let local = trial_index - condition as u64 * plan.trials_per_condition;
        let per_block = plan.schedule.trials_per_block() as u64;
        let block = (local / per_block) as u32 + 1;
        let mut rng = trial_rng(key, local);
        let trial = match plan.schedule {
            Schedule::Stratified {
                trials_per_block,
                signals_per_block,
                ..
            } => {
                let deck = stratified_deck(&mut deck_rng(key, block), trials_per_block, signals_per_block);
                sample_trial_with_state(&problem, deck[(local % per_block) as usize], &mut rng)
            }
            Schedule::Iid { .. } => sample_trial(&problem, &mut rng),
        };
        let r = &plan.rendering;
        let height_px = r.height_px(trial.human_observation);
        let position = Position {
            x_px: rng.random_range(0..=r.square_px - r.width_px),
            y_px: rng.random_range(0..=r.square_px - height_px),
        };
        Drawn {
            stimulus: Stimulus {
                trial_index,
                block,
                indicator: trial.indication,
                height_px,
                position,
            },
            true_state: trial.true_state,
            observation: trial.human_observation,
        }
    }

    fn blocked(&self, phase: Phase) -> SessionError {
        match phase {
            Phase::Questionnaire { condition } => SessionError::Conflict(format!(
                "questionnaire for condition {} is pending",
                self.snap.plan.conditions[condition].condition_id
            )),
            Phase::Complete => SessionError::Gone("session is complete".into()),
            Phase::Trial { trial_index, .. } => SessionError::Conflict(format!("trial {trial_index} is pending")),
        }
    }

    /// The pending stimulus. Repeated calls return the same stimulus.
    pub fn next(&mut self, now: Instant) -> Result<Stimulus, SessionError> {
        let Phase::Trial { condition, trial_index } = self.phase() else {
            return Err(self.blocked(self.phase()));
        };
        if self.shown.map(|(i, _)| i) != Some(trial_index) {
            self.shown = Some((trial_index, now));
        }
        Ok(self.draw(condition, trial_index).stimulus)
    }

    /// Records a response durably, then reports the outcome.
    pub fn respond(&mut self, req: ResponseRequest, now: Instant) -> Result<ResponseReply, SessionError> {
        let phase = self.phase();
        let Phase::Trial { condition, trial_index } = phase else {
            return Err(match phase {
                Phase::Complete => SessionError::Conflict("session is complete".into()),
                _ => self.blocked(phase),
            });
        };
        if req.trial_index != trial_index {
            let what = if req.trial_index < trial_index { "already answered" } else { "not reached yet" };
            return Err(SessionError::Conflict(format!(
                "trial {} is {what}; the pending trial is {trial_index}",
                req.trial_index
            )));
        }
        let drawn = self.draw(condition, trial_index);
        let plan = &self.snap.plan;
        let condition_id = &plan.conditions[condition].condition_id;
        let payoff = plan.payoffs.value(drawn.true_state, req.response) as i64;
        let record = TrialRecord {
            session_id: self.snap.session_id.clone(),
            condition_id: condition_id.clone(),
            block: drawn.stimulus.block,
            trial_index,
            true_state: drawn.true_state,
            indication: drawn.stimulus.indicator,
            stimulus_value: drawn.observation,
            response: req.response,
            payoff,
            rt_ms: req.rt_ms,
        };
        append_line(&self.dir.join(TRIALS), &serde_json::to_string(&record).expect("record serializes"))?;

        let shown_ms = self
            .shown
            .filter(|(i, _)| *i == trial_index)
            .map(|(_, t)| now.saturating_duration_since(t).as_millis() as u64);
        let timeout = plan.display_timeout_ms;
        if shown_ms.is_some_and(|ms| ms > timeout) || req.rt_ms.is_some_and(|ms| ms > timeout) {
            let flag = FlagRecord {
                session_id: &self.snap.session_id,
                condition_id,
                trial_index,
                kind: "display-timeout",
                timeout_ms: timeout,
                shown_ms,
                rt_ms: req.rt_ms,
            };
            append_line(&self.dir.join(FLAGS), &serde_json::to_string(&flag).expect("flag serializes"))?;
        }

        self.snap.answered += 1;
        self.snap.total += payoff;
        self.shown = None;
        self.write_snapshot()?;
        let correct = record.is_correct();
        Ok(ResponseReply {
            correct,
            payoff,
            total: self.snap.total,
            feedback: if correct { Feedback::Correct } else { Feedback::Incorrect },
            delta: payoff,
        })
    }

    pub fn submit_questionnaire(&mut self, items: QuestionnaireItems) -> Result<QuestionnaireReply, SessionError> {
        let phase = self.phase();
        let Phase::Questionnaire { condition } = phase else {
            return Err(match phase {
                Phase::Trial { trial_index, .. } => {
                    SessionError::Conflict(format!("no questionnaire is due; trial {trial_index} is pending"))
                }
                _ => SessionError::Conflict("session is complete".into()),
            });
        };
        let QuestionnaireItems { q1, q2, q3, q4, q5, q6 } = items;
        let condition_id = self.snap.plan.conditions[condition].condition_id.clone();
        let record = QuestionnaireRecord {
            session_id: self.snap.session_id.clone(),
            condition_id: condition_id.clone(),
            q1,
            q2,
            q3,
            q4,
            q5,
            q6,
        };
        record.validate().map_err(|e| SessionError::Invalid(e.to_string()))?;
        append_line(&self.dir.join(QUESTIONNAIRES), &serde_json::to_string(&record).expect("record serializes"))?;
        self.snap.questionnaires += 1;
        self.snap.complete = self.snap.questionnaires == self.snap.plan.conditions.len();
        self.write_snapshot()?;
        Ok(QuestionnaireReply {
            condition_id,
            complete: self.snap.complete,
        })
    }

    pub fn report(&self) -> Result<SessionReport, SessionError> {
        let plan = &self.snap.plan;
        let corrupt = |e: resqu_core::Error| SessionError::Corrupt(self.snap.session_id.clone(), e.to_string());
        let trials = parse_log(BufReader::new(File::open(self.dir.join(TRIALS))?), &plan.payoffs).map_err(corrupt)?;
        let answers = parse_questionnaires(BufReader::new(File::open(self.dir.join(QUESTIONNAIRES))?)).map_err(corrupt)?;
        let n = plan.trials_per_condition;
        let conditions = plan
            .conditions
            .iter()
            .enumerate()
            .map(|(c, pc)| {
                let range = c as u64 * n..(c as u64 + 1) * n;
                let mine: Vec<TrialRecord> = trials.iter().filter(|t| range.contains(&t.trial_index)).cloned().collect();
                let mut block_scores = vec![0; plan.schedule.blocks() as usize];
                for t in &mine {
                    block_scores[t.block as usize - 1] += t.payoff;
                }
                ConditionReport {
                    condition_id: pc.condition_id.clone(),
                    trials: mine.len(),
                    total_score: mine.iter().map(|t| t.payoff).sum(),
                    block_scores,
                    questionnaire: answers.get(c).cloned(),
                    measures: empirical_report(&filter_blocks(&mine, BlockFilter::SecondOnly)).ok(),
                }
            })
            .collect();
        Ok(SessionReport {
            session_id: self.snap.session_id.clone(),
            participant_id: self.snap.participant_id.clone(),
            complete: self.snap.complete,
            trials_answered: self.snap.answered,
            total_score: self.snap.total,
            conditions,
        })
    }
}

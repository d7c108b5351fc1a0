//! Seeded Monte Carlo trials under the two-detector model.
//!
//! Randomness is split into named streams so results never depend on
//! generation order. A session key is derived from the master seed and the
//! session's stream number. Each block deck is shuffled by a ChaCha8
//! generator keyed by `(session key, block)`. Each trial draws from ChaCha8
//! stream number `trial_index` of the session's trial key. Sessions can
//! therefore be generated in parallel and any single trial can be replayed
//! on its own.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::empirics::TrialRecord;
use crate::error::{Error, Result};
use crate::sdt::{DetectorParams, Environment, PayoffMatrix};
use crate::theory::{optimal_contingent_policy, AidedProblem, ContingentPolicy};
use crate::types::{Indication, Response, TrueState};

const DECK_TAG: u64 = 0x6465_636b;
const TRIAL_TAG: u64 = 0x7472_6961;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed for the stream named by `path`.
pub fn stream_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for one trial of a session.
pub fn trial_rng(session_key: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(session_key, &[TRIAL_TAG]));
    rng.set_stream(trial_index);
    rng
}

/// Generator for the deck of one block.
pub fn deck_rng(session_key: u64, block: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(session_key, &[DECK_TAG, block as u64]))
}

/// A shuffled block with exactly `signals` signal trials.
pub fn stratified_deck<R: Rng + ?Sized>(rng: &mut R, trials: u32, signals: u32) -> Vec<TrueState> {
    let mut deck: Vec<TrueState> = (0..trials)
        .map(|i| if i < signals { TrueState::Signal } else { TrueState::Noise })
        .collect();
    deck.shuffle(rng);
    deck
}

/// What both detectors saw on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledTrial {
    pub true_state: TrueState,
    pub system_observation: f64,
    pub indication: Indication,
    pub human_observation: f64,
}

pub fn sample_trial<R: Rng + ?Sized>(problem: &AidedProblem, rng: &mut R) -> SampledTrial {
    let state = if rng.random::<f64>() < problem.env.p_signal {
        TrueState::Signal
    } else {
        TrueState::Noise
    };
    sample_trial_with_state(problem, state, rng)
}

/// Draws both observations, independent given `state`.
pub fn sample_trial_with_state<R: Rng + ?Sized>(
    problem: &AidedProblem,
    state: TrueState,
    rng: &mut R,
) -> SampledTrial {
    let shift = |d: f64| if state == TrueState::Signal { d } else { 0.0 };
    let system_observation = shift(problem.system.d_prime) + rng.sample::<f64, _>(StandardNormal);
    let human_observation = shift(problem.d_h) + rng.sample::<f64, _>(StandardNormal);
    let indication = if system_observation > problem.system_cutoff() {
        Indication::Red
    } else {
        Indication::Green
    };
    SampledTrial {
        true_state: state,
        system_observation,
        indication,
        human_observation,
    }
}

/// How a simulated human picks a cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentPolicy {
    /// Payoff-maximizing cutoff for each indication.
    OptimalContingent,
    /// One absolute cutoff whatever the indication; `None` uses the unaided
    /// optimum.
    IgnoreSystem { cutoff: Option<f64> },
    /// Fixed absolute cutoffs.
    Configured(ContingentPolicy),
    /// The base policy with `N(0, sd²)` noise added to the active cutoff on
    /// every trial.
    Jittered { base: Box<AgentPolicy>, sd: f64 },
}

impl AgentPolicy {
    pub fn resolve(&self, problem: &AidedProblem) -> Result<Agent> {
        match self {
            AgentPolicy::OptimalContingent => Ok(Agent::new(optimal_contingent_policy(problem)?, 0.0)),
            AgentPolicy::IgnoreSystem { cutoff } => {
                let c = cutoff.unwrap_or_else(|| problem.unaided_cutoff());
                if !c.is_finite() {
                    return Err(Error::InvalidParameter(format!("cutoff must be finite, got {c}")));
                }
                Ok(Agent::new(ContingentPolicy::single(c), 0.0))
            }
            AgentPolicy::Configured(policy) => {
                if !(policy.cutoff_red.is_finite() && policy.cutoff_green.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "configured cutoffs must be finite, got {policy:?}"
                    )));
                }
                Ok(Agent::new(*policy, 0.0))
            }
            AgentPolicy::Jittered { base, sd } => {
                if !(*sd >= 0.0 && sd.is_finite()) {
                    return Err(Error::InvalidParameter(format!("jitter sd must be >= 0, got {sd}")));
                }
                let inner = base.resolve(problem)?;
                Ok(Agent::new(inner.policy, inner.jitter_sd + sd))
            }
        }
    }
}

/// A resolved decision rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    pub policy: ContingentPolicy,
    pub jitter_sd: f64,
}

impl Agent {
    pub fn new(policy: ContingentPolicy, jitter_sd: f64) -> Self {
        Self { policy, jitter_sd }
    }

    /// Rejects iff the observation is above the active cutoff.
    pub fn decide<R: Rng + ?Sized>(&self, indication: Indication, observation: f64, rng: &mut R) -> Response {
        let mut cutoff = self.policy.cutoff(indication);
        if self.jitter_sd > 0.0 {
            cutoff += self.jitter_sd * rng.sample::<f64, _>(StandardNormal);
        }
        if observation > cutoff {
            Response::Reject
        } else {
            Response::Accept
        }
    }
}

/// Block structure of a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// States drawn independently with the environment prior.
    Iid { blocks: u32, trials_per_block: u32 },
    /// Exactly `signals_per_block` signals per block, shuffled.
    Stratified {
        blocks: u32,
        trials_per_block: u32,
        signals_per_block: u32,
    },
}

impl Schedule {
    /// Two blocks of 50 trials with 20 signals each.
    pub fn two_blocks_of_fifty() -> Self {
        Schedule::Stratified {
            blocks: 2,
            trials_per_block: 50,
            signals_per_block: 20,
        }
    }

    pub fn iid(trials: u32) -> Self {
        Schedule::Iid {
            blocks: 1,
            trials_per_block: trials,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Schedule::Stratified {
            trials_per_block,
            signals_per_block,
            ..
        } = self
        {
            if signals_per_block > trials_per_block {
                return Err(Error::InvalidParameter(format!(
                    "{signals_per_block} signals do not fit in {trials_per_block} trials"
                )));
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> u32 {
        match *self {
            Schedule::Iid { blocks, .. } | Schedule::Stratified { blocks, .. } => blocks,
        }
    }

    pub fn trials_per_block(&self) -> u32 {
        match *self {
            Schedule::Iid { trials_per_block, .. } | Schedule::Stratified { trials_per_block, .. } => {
                trials_per_block
            }
        }
    }

    pub fn total_trials(&self) -> u64 {
        self.blocks() as u64 * self.trials_per_block() as u64
    }
}

/// Identity of one simulated session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub session_id: String,
    /// Stream number; distinct sessions need distinct streams.
    pub stream: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub condition_id: String,
    pub trials: u64,
    pub total_score: i64,
    pub block_scores: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub records: Vec<TrialRecord>,
    pub summary: SessionSummary,
}

fn integer_payoffs(payoffs: &PayoffMatrix) -> Result<()> {
    for v in [payoffs.v_tp, payoffs.v_tn, payoffs.v_fp, payoffs.v_fn] {
        if v.fract() != 0.0 || v.abs() > i64::MAX as f64 {
            return Err(Error::InvalidParameter(format!(
                "logged payoffs are integers, got {v}"
            )));
        }
    }
    Ok(())
}

pub fn run_session(
    problem: &AidedProblem,
    policy: &AgentPolicy,
    schedule: &Schedule,
    seed: u64,
    spec: &SessionSpec,
) -> Result<SessionLog> {
    problem.validate()?;
    schedule.validate()?;
    integer_payoffs(&problem.payoffs)?;
    let agent = policy.resolve(problem)?;
    let key = stream_seed(seed, &[spec.stream]);
    let condition_id = problem.condition_id();

    let mut records = Vec::with_capacity(schedule.total_trials() as usize);
    let mut block_scores = Vec::with_capacity(schedule.blocks() as usize);
    let mut trial_index = 0u64;
    for block in 1..=schedule.blocks() {
        let deck = match *schedule {
            Schedule::Stratified {
                trials_per_block,
                signals_per_block,
                ..
            } => Some(stratified_deck(&mut deck_rng(key, block), trials_per_block, signals_per_block)),
            Schedule::Iid { .. } => None,
        };
        let mut score = 0;
        for i in 0..schedule.trials_per_block() {
            let mut rng = trial_rng(key, trial_index);
            let trial = match &deck {
                Some(deck) => sample_trial_with_state(problem, deck[i as usize], &mut rng),
                None => sample_trial(problem, &mut rng),
            };
            let response = agent.decide(trial.indication, trial.human_observation, &mut rng);
            let payoff = problem.payoffs.value(trial.true_state, response) as i64;
            score += payoff;
            records.push(TrialRecord {
                session_id: spec.session_id.clone(),
                condition_id: condition_id.clone(),
                block,
                trial_index,
                true_state: trial.true_state,
                indication: trial.indication,
                stimulus_value: trial.human_observation,
                response,
                payoff,
                rt_ms: None,
            });
            trial_index += 1;
        }
        block_scores.push(score);
    }
    let summary = SessionSummary {
        session_id: spec.session_id.clone(),
        condition_id,
        trials: trial_index,
        total_score: block_scores.iter().sum(),
        block_scores,
    };
    Ok(SessionLog { records, summary })
}

/// The two experimental designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    /// Human d′ 1 and 2.3, each with systems of d′ 1 and 2.3 at β = 1.
    Exp1,
    /// Human d′ 1 with a d′ 2.3 system at β = 1 and at β = 0.03.
    Exp2,
}

impl Experiment {
    /// Participant groups: the human d′ and the systems in first order.
    pub fn groups(self) -> Vec<(f64, [DetectorParams; 2])> {
        let sys = |d_prime, beta| DetectorParams { d_prime, beta };
        match self {
            Experiment::Exp1 => vec![
                (1.0, [sys(1.0, 1.0), sys(2.3, 1.0)]),
                (2.3, [sys(1.0, 1.0), sys(2.3, 1.0)]),
            ],
            Experiment::Exp2 => vec![(1.0, [sys(2.3, 1.0), sys(2.3, 0.03)])],
        }
    }

    /// Every condition, in a stable order.
    pub fn problems(self) -> Vec<AidedProblem> {
        let env = Environment { p_signal: 0.4 };
        self.groups()
            .into_iter()
            .flat_map(|(d_h, systems)| {
                systems.map(|system| AidedProblem {
                    env,
                    d_h,
                    system,
                    payoffs: PayoffMatrix::quality_control(),
                })
            })
            .collect()
    }

    fn tag(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
        }
    }
}

/// Which system a participant met first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub condition_id: String,
    pub order: Order,
    pub sessions: usize,
    pub trials: u64,
    pub total_score: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    /// Trial logs keyed by condition id.
    pub logs: BTreeMap<String, Vec<TrialRecord>>,
    pub problems: BTreeMap<String, AidedProblem>,
    pub sessions: Vec<SessionSummary>,
    /// One entry per condition and order.
    pub cells: Vec<CellSummary>,
}

/// Runs every participant group with both system orders.
///
/// `policies` maps condition ids to agents. Sessions are generated on
/// separate threads and assembled in a fixed order.
pub fn run_experiment(
    experiment: Experiment,
    policies: &BTreeMap<String, AgentPolicy>,
    schedule: &Schedule,
    sessions_per_order: usize,
    seed: u64,
) -> Result<ExperimentRun> {
    let problems = experiment.problems();
    for p in &problems {
        if !policies.contains_key(&p.condition_id()) {
            return Err(Error::MissingPolicy(p.condition_id()));
        }
    }

    // (group, order, participant, position) -> problem
    let mut jobs = Vec::new();
    for (g, (d_h, systems)) in experiment.groups().into_iter().enumerate() {
        for (o, order) in [Order::Forward, Order::Reverse].into_iter().enumerate() {
            for s in 0..sessions_per_order {
                let session_id = format!("{}-dh{d_h}-{}-{s:03}", experiment.tag(), order_tag(order));
                for pos in 0..2 {
                    let system = if order == Order::Forward { systems[pos] } else { systems[1 - pos] };
                    let problem = AidedProblem {
                        env: Environment { p_signal: 0.4 },
                        d_h,
                        system,
                        payoffs: PayoffMatrix::quality_control(),
                    };
                    let stream = stream_seed(experiment as u64, &[g as u64, o as u64, s as u64, pos as u64]);
                    jobs.push((order, problem, SessionSpec { session_id: session_id.clone(), stream }));
                }
            }
        }
    }

    let results: Vec<Result<SessionLog>> = std::thread::scope(|scope| {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
        let chunk = jobs.len().div_ceil(workers).max(1);
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(_, problem, spec)| {
                            run_session(problem, &policies[&problem.condition_id()], schedule, seed, spec)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("session worker panicked"))
            .collect()
    });

    let mut run = ExperimentRun {
        logs: BTreeMap::new(),
        problems: problems.iter().map(|p| (p.condition_id(), *p)).collect(),
        sessions: Vec::new(),
        cells: Vec::new(),
    };
    let mut cells: BTreeMap<(String, Order), CellSummary> = BTreeMap::new();
    for ((order, _, _), result) in jobs.iter().zip(results) {
        let log = result?;
        let s = &log.summary;
        let cell = cells
            .entry((s.condition_id.clone(), *order))
            .or_insert_with(|| CellSummary {
                condition_id: s.condition_id.clone(),
                order: *order,
                sessions: 0,
                trials: 0,
                total_score: 0,
            });
        cell.sessions += 1;
        cell.trials += s.trials;
        cell.total_score += s.total_score;
        run.logs.entry(s.condition_id.clone()).or_default().extend(log.records);
        run.sessions.push(log.summary);
    }
    run.cells = cells.into_values().collect();
    Ok(run)
}

fn order_tag(order: Order) -> &'static str {
    match order {
        Order::Forward => "fwd",
        Order::Reverse => "rev",
    }
}

/// The same policy for every condition of `experiment`.
pub fn uniform_policies(experiment: Experiment, policy: &AgentPolicy) -> BTreeMap<String, AgentPolicy> {
    experiment
        .problems()
        .into_iter()
        .map(|p| (p.condition_id(), policy.clone()))
        .collect()
}

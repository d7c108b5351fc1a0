//! The aided decision as two detectors working in sequence.
//!
//! The system classifies each item, then the human observes the item with
//! their own sensitivity and applies a cutoff chosen for the indication
//! shown. Human and system observations are independent given the world
//! state. The optimal contingent policy plugs the indication's posterior
//! into the optimal-criterion formula and converts the result to a cutoff on
//! the human axis.
//!
//! A system with `d' = 0` is handled as the limit of a vanishing
//! sensitivity: its hit and false-alarm rates coincide, so the indication
//! carries no information and both posteriors equal the prior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{responsibility, JointPmf2x2};
use crate::sdt::{
    centered_cutoff, criterion_for_probability, d_eff_approx, phi, phi_inv,
    posterior_given_indication, DetectorParams, DetectorRates, Environment, PayoffMatrix,
};
use crate::types::{Indication, TrueState};

/// Full parameterization of one experimental condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AidedProblem {
    pub env: Environment,
    /// Human sensitivity in SD units.
    pub d_h: f64,
    pub system: DetectorParams,
    pub payoffs: PayoffMatrix,
}

impl AidedProblem {
    pub fn new(
        env: Environment,
        d_h: f64,
        system: DetectorParams,
        payoffs: PayoffMatrix,
    ) -> Result<Self> {
        let problem = Self {
            env,
            d_h,
            system,
            payoffs,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Signal prior 0.4 with the +1/+1/−1/−2 payoff scheme.
    pub fn quality_control(d_h: f64, d_a: f64, beta_a: f64) -> Result<Self> {
        Self::new(
            Environment::new(0.4)?,
            d_h,
            DetectorParams::new(d_a, beta_a)?,
            PayoffMatrix::quality_control(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.system.validate()?;
        self.payoffs.validate()?;
        if !(self.d_h > 0.0 && self.d_h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "human d' must be finite and > 0, got {}",
                self.d_h
            )));
        }
        Ok(())
    }

    /// Stable identifier, e.g. `dh1-da2.3-ba0.03`.
    pub fn condition_id(&self) -> String {
        format!(
            "dh{}-da{}-ba{}",
            self.d_h, self.system.d_prime, self.system.beta
        )
    }

    pub fn is_uninformative(&self) -> bool {
        self.system.d_prime == 0.0
    }

    /// Absolute cutoff of the system on its own observation axis.
    pub fn system_cutoff(&self) -> f64 {
        let DetectorParams { d_prime, beta } = self.system;
        if d_prime == 0.0 {
            // Limit of ln(beta)/d + d/2 as d -> 0+.
            match beta.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => f64::INFINITY,
                Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
                _ => 0.0,
            }
        } else {
            beta.ln() / d_prime + d_prime / 2.0
        }
    }

    pub fn system_rates(&self) -> DetectorRates {
        let c = self.system_cutoff();
        DetectorRates {
            hit_rate: phi(self.system.d_prime - c),
            false_alarm_rate: phi(-c),
        }
    }

    /// `P(indication | state)`.
    pub fn indication_likelihood(&self, indication: Indication, state: TrueState) -> f64 {
        let rates = self.system_rates();
        let p_red = match state {
            TrueState::Signal => rates.hit_rate,
            TrueState::Noise => rates.false_alarm_rate,
        };
        match indication {
            Indication::Red => p_red,
            Indication::Green => 1.0 - p_red,
        }
    }

    pub fn indication_probs(&self) -> IndicationProbs {
        let rates = self.system_rates();
        let ps = self.env.p_signal;
        let red = ps * rates.hit_rate + (1.0 - ps) * rates.false_alarm_rate;
        IndicationProbs {
            red,
            green: 1.0 - red,
        }
    }

    /// `P(signal | indication)`; the prior for an uninformative system.
    pub fn posterior(&self, indication: Indication) -> Result<f64> {
        if self.is_uninformative() {
            return Ok(self.env.p_signal);
        }
        posterior_given_indication(&self.env, &self.system_rates(), indication)
    }

    /// Absolute cutoff that maximizes payoff for a signal probability.
    pub fn human_cutoff_for(&self, p_signal: f64) -> f64 {
        criterion_for_probability(p_signal, &self.payoffs).ln() / self.d_h + self.d_h / 2.0
    }

    /// Optimal cutoff when the human works without the aid.
    pub fn unaided_cutoff(&self) -> f64 {
        self.human_cutoff_for(self.env.p_signal)
    }

    fn p_state(&self, state: TrueState) -> f64 {
        match state {
            TrueState::Signal => self.env.p_signal,
            TrueState::Noise => 1.0 - self.env.p_signal,
        }
    }

    /// `P(reject | state)` for a human applying `cutoff`.
    fn p_reject(&self, state: TrueState, cutoff: f64) -> f64 {
        match state {
            TrueState::Signal => phi(self.d_h - cutoff),
            TrueState::Noise => phi(-cutoff),
        }
    }
}

/// `P(red)` and `P(green)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicationProbs {
    pub red: f64,
    pub green: f64,
}

/// Human cutoffs on the absolute observation axis, one per indication. The
/// human rejects an item when the observation is above the active cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContingentPolicy {
    pub cutoff_red: f64,
    pub cutoff_green: f64,
}

impl ContingentPolicy {
    /// One cutoff regardless of the indication.
    pub fn single(cutoff: f64) -> Self {
        Self {
            cutoff_red: cutoff,
            cutoff_green: cutoff,
        }
    }

    pub fn from_centered(d_h: f64, red: f64, green: f64) -> Self {
        Self {
            cutoff_red: red + d_h / 2.0,
            cutoff_green: green + d_h / 2.0,
        }
    }

    pub fn cutoff(&self, indication: Indication) -> f64 {
        match indication {
            Indication::Red => self.cutoff_red,
            Indication::Green => self.cutoff_green,
        }
    }

    /// `(red, green)` in centered units.
    pub fn centered(&self, d_h: f64) -> (f64, f64) {
        (
            centered_cutoff(d_h, self.cutoff_red),
            centered_cutoff(d_h, self.cutoff_green),
        )
    }
}

pub fn optimal_contingent_policy(problem: &AidedProblem) -> Result<ContingentPolicy> {
    problem.validate()?;
    Ok(ContingentPolicy {
        cutoff_red: problem.human_cutoff_for(problem.posterior(Indication::Red)?),
        cutoff_green: problem.human_cutoff_for(problem.posterior(Indication::Green)?),
    })
}

/// Joint law of the human's action and the system's indication under `policy`.
pub fn aided_joint_distribution(
    problem: &AidedProblem,
    policy: &ContingentPolicy,
) -> Result<JointPmf2x2> {
    let probs = problem.indication_probs();
    let mut cells = [[0.0; 2]; 2];
    for (indication, p_y) in [(Indication::Red, probs.red), (Indication::Green, probs.green)] {
        if p_y <= 0.0 {
            continue;
        }
        let post = problem.posterior(indication)?;
        let c = policy.cutoff(indication);
        let p_reject = post * problem.p_reject(TrueState::Signal, c)
            + (1.0 - post) * problem.p_reject(TrueState::Noise, c);
        cells[0][indication.index()] = p_y * p_reject;
        cells[1][indication.index()] = p_y * (1.0 - p_reject);
    }
    JointPmf2x2::new(cells)
}

/// Responsibility of a human who follows the optimal contingent policy.
pub fn theoretical_responsibility(problem: &AidedProblem) -> Result<f64> {
    let policy = optimal_contingent_policy(problem)?;
    responsibility(&aided_joint_distribution(problem, &policy)?)
}

/// Hit and false-alarm rates of the final (human) decision under `policy`.
pub fn policy_rates(problem: &AidedProblem, policy: &ContingentPolicy) -> DetectorRates {
    let mut rates = DetectorRates {
        hit_rate: 0.0,
        false_alarm_rate: 0.0,
    };
    for y in Indication::ALL {
        let c = policy.cutoff(y);
        rates.hit_rate += problem.indication_likelihood(y, TrueState::Signal)
            * problem.p_reject(TrueState::Signal, c);
        rates.false_alarm_rate += problem.indication_likelihood(y, TrueState::Noise)
            * problem.p_reject(TrueState::Noise, c);
    }
    rates
}

/// Sensitivity of the combined decision, `z(HR) − z(FAR)`.
pub fn policy_d_eff(problem: &AidedProblem, policy: &ContingentPolicy) -> Result<f64> {
    let rates = policy_rates(problem, policy);
    Ok(phi_inv(rates.hit_rate)? - phi_inv(rates.false_alarm_rate)?)
}

/// Expected points per trial.
pub fn expected_payoff(problem: &AidedProblem, policy: &ContingentPolicy) -> f64 {
    let v = &problem.payoffs;
    let mut total = 0.0;
    for state in TrueState::ALL {
        let (v_reject, v_accept) = match state {
            TrueState::Signal => (v.v_tp, v.v_fn),
            TrueState::Noise => (v.v_fp, v.v_tn),
        };
        for y in Indication::ALL {
            let mass = problem.p_state(state) * problem.indication_likelihood(y, state);
            if mass == 0.0 {
                continue;
            }
            let p_reject = problem.p_reject(state, policy.cutoff(y));
            total += mass * (p_reject * v_reject + (1.0 - p_reject) * v_accept);
        }
    }
    total
}

/// One theoretical row: responsibility plus the SDT trust measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub condition_id: String,
    pub problem: AidedProblem,
    pub responsibility: f64,
    pub policy: ContingentPolicy,
    /// `(red, green)` in centered units.
    pub centered_cutoffs: (f64, f64),
    /// Green minus red, centered units.
    pub cutoff_difference: f64,
    pub d_eff_policy: f64,
    pub d_eff_approx: f64,
    pub expected_payoff: f64,
    pub joint: JointPmf2x2,
    pub indication_probs: IndicationProbs,
}

pub fn theory_report(problem: &AidedProblem) -> Result<TheoryReport> {
    let policy = optimal_contingent_policy(problem)?;
    let joint = aided_joint_distribution(problem, &policy)?;
    let centered = policy.centered(problem.d_h);
    Ok(TheoryReport {
        condition_id: problem.condition_id(),
        problem: *problem,
        responsibility: responsibility(&joint)?,
        policy,
        centered_cutoffs: centered,
        cutoff_difference: centered.1 - centered.0,
        d_eff_policy: policy_d_eff(problem, &policy)?,
        d_eff_approx: d_eff_approx(problem.d_h, problem.system.d_prime)?,
        expected_payoff: expected_payoff(problem, &policy),
        joint,
        indication_probs: problem.indication_probs(),
    })
}

/// Evenly spaced grid values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let axis = Self { start, stop, step };
        if !(start > 0.0 && stop <= 5.0 && start <= stop) {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy 0 < start <= stop <= 5, got {start}..{stop}"
            )));
        }
        if !(step > 0.0) && start != stop {
            return Err(Error::InvalidParameter(format!("grid step must be > 0, got {step}")));
        }
        Ok(axis)
    }

    pub fn single(value: f64) -> Result<Self> {
        Self::new(value, value, 1.0)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.start == self.stop {
            return vec![self.start];
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }
}

/// Theoretical responsibility over a `d_h × d_a` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub d_h: Vec<f64>,
    pub d_a: Vec<f64>,
    /// Row-major: `values[i][j]` is at `(d_h[i], d_a[j])`.
    pub values: Vec<Vec<f64>>,
}

impl Surface {
    /// Rectangular CSV, `d_h` rows ascending, `d_a` columns ascending.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d_h\\d_a");
        for d_a in &self.d_a {
            out.push_str(&format!(",{d_a}"));
        }
        out.push('\n');
        for (d_h, row) in self.d_h.iter().zip(&self.values) {
            out.push_str(&d_h.to_string());
            for v in row {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn responsibility_surface(
    d_h_axis: &GridAxis,
    d_a_axis: &GridAxis,
    env: &Environment,
    payoffs: &PayoffMatrix,
    beta_a: f64,
) -> Result<Surface> {
    let d_h = d_h_axis.values();
    let d_a = d_a_axis.values();
    let values = std::thread::scope(|scope| {
        let handles: Vec<_> = d_h
            .iter()
            .map(|&dh| {
                let d_a = &d_a;
                scope.spawn(move || {
                    d_a.iter()
                        .map(|&da| {
                            let problem = AidedProblem::new(
                                *env,
                                dh,
                                DetectorParams::new(da, beta_a)?,
                                *payoffs,
                            )?;
                            theoretical_responsibility(&problem)
                        })
                        .collect::<Result<Vec<f64>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("surface worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Surface { d_h, d_a, values })
}

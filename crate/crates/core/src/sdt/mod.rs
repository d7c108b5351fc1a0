//! Equal-variance Gaussian signal detection.
//!
//! Noise observations are `N(0, 1)` and signal observations `N(d', 1)`. The
//! likelihood ratio at `x` is `exp(d'·x − d'²/2)`, so a criterion `β` sits at
//! the absolute cutoff `ln(β)/d' + d'/2`. Reports use the centered cutoff
//! `ln(β)/d'`, measured from the midpoint between the two means. An
//! observation strictly above the cutoff is classified as a signal.

mod normal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Indication, Response, TrueState};

pub use normal::{pdf, phi, phi_inv};

/// Sensitivity and likelihood-ratio criterion of one detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub d_prime: f64,
    pub beta: f64,
}

impl DetectorParams {
    pub fn new(d_prime: f64, beta: f64) -> Result<Self> {
        let params = Self { d_prime, beta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_prime.is_finite() && self.d_prime >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "d' must be finite and >= 0, got {}",
                self.d_prime
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Utilities of the four decision outcomes, in points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub v_tp: f64,
    pub v_tn: f64,
    pub v_fp: f64,
    pub v_fn: f64,
}

impl PayoffMatrix {
    pub fn new(v_tp: f64, v_tn: f64, v_fp: f64, v_fn: f64) -> Result<Self> {
        let payoffs = Self {
            v_tp,
            v_tn,
            v_fp,
            v_fn,
        };
        payoffs.validate()?;
        Ok(payoffs)
    }

    /// +1 for either correct decision, −1 for rejecting an intact item and
    /// −2 for accepting a defective one.
    pub fn quality_control() -> Self {
        Self {
            v_tp: 1.0,
            v_tn: 1.0,
            v_fp: -1.0,
            v_fn: -2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.v_tp, self.v_tn, self.v_fp, self.v_fn];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("payoffs must be finite".into()));
        }
        if !(self.v_tp > self.v_fn && self.v_tn > self.v_fp) {
            return Err(Error::InvalidParameter(format!(
                "payoffs need v_tp > v_fn and v_tn > v_fp, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `(v_tn − v_fp) / (v_tp − v_fn)`: the payoff factor of the optimal criterion.
    pub fn ratio(&self) -> f64 {
        (self.v_tn - self.v_fp) / (self.v_tp - self.v_fn)
    }

    /// Points earned for `response` when the true state is `state`.
    pub fn value(&self, state: TrueState, response: Response) -> f64 {
        match (state, response) {
            (TrueState::Signal, Response::Reject) => self.v_tp,
            (TrueState::Signal, Response::Accept) => self.v_fn,
            (TrueState::Noise, Response::Reject) => self.v_fp,
            (TrueState::Noise, Response::Accept) => self.v_tn,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            v_tp: self.v_tp * factor,
            v_tn: self.v_tn * factor,
            v_fp: self.v_fp * factor,
            v_fn: self.v_fn * factor,
        }
    }
}

/// Prior probability of a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub p_signal: f64,
}

impl Environment {
    pub fn new(p_signal: f64) -> Result<Self> {
        let env = Self { p_signal };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_signal > 0.0 && self.p_signal < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_signal must lie in (0, 1), got {}",
                self.p_signal
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorRates {
    pub hit_rate: f64,
    pub false_alarm_rate: f64,
}

/// Outcome probabilities of an alerting system in a given environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemOutcomeProfile {
    pub hit_rate: f64,
    pub false_alarm_rate: f64,
    /// P(signal | red).
    pub ppv: f64,
    /// P(noise | green).
    pub npv: f64,
    /// P(red).
    pub p_alarm: f64,
}

impl SystemOutcomeProfile {
    pub fn rates(&self) -> DetectorRates {
        DetectorRates {
            hit_rate: self.hit_rate,
            false_alarm_rate: self.false_alarm_rate,
        }
    }
}

/// Absolute cutoff for criterion `beta` at sensitivity `d`.
pub fn cutoff_from_beta(d: f64, beta: f64) -> Result<f64> {
    if d == 0.0 {
        return Err(Error::NoDiscrimination);
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain {
            what: "sensitivity",
            value: d,
        });
    }
    if !(beta > 0.0) {
        return Err(Error::Domain {
            what: "beta",
            value: beta,
        });
    }
    Ok(beta.ln() / d + d / 2.0)
}

/// Likelihood ratio at an absolute cutoff.
pub fn beta_from_cutoff(d: f64, cutoff: f64) -> f64 {
    (d * cutoff - d * d / 2.0).exp()
}

pub fn centered_cutoff(d: f64, absolute: f64) -> f64 {
    absolute - d / 2.0
}

pub fn absolute_cutoff(d: f64, centered: f64) -> f64 {
    centered + d / 2.0
}

pub fn detector_rates(d: f64, cutoff: f64) -> DetectorRates {
    DetectorRates {
        hit_rate: phi(d - cutoff),
        false_alarm_rate: phi(-cutoff),
    }
}

/// Criterion that maximizes expected payoff when the signal probability is
/// `p_signal`. Accepts the closed interval: a certain signal gives 0 and a
/// certain noise gives +∞.
pub fn criterion_for_probability(p_signal: f64, payoffs: &PayoffMatrix) -> f64 {
    (1.0 - p_signal) / p_signal * payoffs.ratio()
}

pub fn optimal_beta(env: &Environment, payoffs: &PayoffMatrix) -> f64 {
    criterion_for_probability(env.p_signal, payoffs)
}

/// Probability of a signal given the system's indication.
pub fn posterior_given_indication(
    env: &Environment,
    rates: &DetectorRates,
    indication: Indication,
) -> Result<f64> {
    let ps = env.p_signal;
    let (signal_mass, noise_mass) = match indication {
        Indication::Red => (ps * rates.hit_rate, (1.0 - ps) * rates.false_alarm_rate),
        Indication::Green => (
            ps * (1.0 - rates.hit_rate),
            (1.0 - ps) * (1.0 - rates.false_alarm_rate),
        ),
    };
    let total = signal_mass + noise_mass;
    if total <= 0.0 {
        return Err(Error::ImpossibleIndication(indication));
    }
    Ok(signal_mass / total)
}

pub fn system_outcome_profile(
    env: &Environment,
    system: &DetectorParams,
) -> Result<SystemOutcomeProfile> {
    let cutoff = cutoff_from_beta(system.d_prime, system.beta)?;
    let rates = detector_rates(system.d_prime, cutoff);
    let ppv = posterior_given_indication(env, &rates, Indication::Red)?;
    let npv = 1.0 - posterior_given_indication(env, &rates, Indication::Green)?;
    Ok(SystemOutcomeProfile {
        hit_rate: rates.hit_rate,
        false_alarm_rate: rates.false_alarm_rate,
        ppv,
        npv,
        p_alarm: env.p_signal * rates.hit_rate + (1.0 - env.p_signal) * rates.false_alarm_rate,
    })
}

/// Which interaction term to use in the effective-d' approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeffForm {
    /// `sqrt(dh² + da² − 0.3·dh·da)`.
    #[default]
    Product,
    /// `sqrt(dh² + da² − 0.3·dh²·da²)`, kept only for comparison. It does
    /// not reproduce the tabulated theoretical values.
    AsPrinted,
}

/// Approximate upper bound on the sensitivity of the combined decision.
pub fn d_eff_approx(d_h: f64, d_a: f64) -> Result<f64> {
    d_eff_approx_with(d_h, d_a, DeffForm::Product)
}

pub fn d_eff_approx_with(d_h: f64, d_a: f64, form: DeffForm) -> Result<f64> {
    for (what, d) in [("human sensitivity", d_h), ("system sensitivity", d_a)] {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::Domain { what, value: d });
        }
    }
    let interaction = match form {
        DeffForm::Product => 0.3 * d_h * d_a,
        DeffForm::AsPrinted => 0.3 * d_h * d_h * d_a * d_a,
    };
    let radicand = d_h * d_h + d_a * d_a - interaction;
    if radicand < 0.0 {
        return Err(Error::Domain {
            what: "d_eff radicand",
            value: radicand,
        });
    }
    Ok(radicand.sqrt())
}

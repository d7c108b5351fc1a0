//! Service configuration: conditions, counterbalanced orders and rendering.

use std::path::Path;

use resqu_core::sdt::{DetectorParams, Environment, PayoffMatrix};
use resqu_core::simulator::{Experiment, Schedule};
use resqu_core::theory::AidedProblem;
use serde::{Deserialize, Serialize};

/// Maps an observation in SD units to a rectangle on the task square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rendering {
    pub base_px: f64,
    pub px_per_sd: f64,
    pub min_px: u32,
    pub max_px: u32,
    /// Side of the square the rectangle is drawn in.
    pub square_px: u32,
    pub width_px: u32,
}

impl Default for Rendering {
    fn default() -> Self {
        Self {
            base_px: 300.0,
            px_per_sd: 60.0,
            min_px: 20,
            max_px: 720,
            square_px: 756,
            width_px: 60,
        }
    }
}

impl Rendering {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.px_per_sd.is_finite() && self.px_per_sd > 0.0 && self.base_px.is_finite()) {
            return Err("rendering needs finite base_px and px_per_sd > 0".into());
        }
        if !(self.min_px < self.max_px && self.max_px <= self.square_px && self.width_px < self.square_px) {
            return Err("rendering needs min_px < max_px <= square_px and width_px < square_px".into());
        }
        Ok(())
    }

    pub fn height_px(&self, observation: f64) -> u32 {
        let h = (self.base_px + observation * self.px_per_sd).round();
        h.clamp(self.min_px as f64, self.max_px as f64) as u32
    }
}

/// One system a participant works with, by human and system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub d_h: f64,
    pub d_a: f64,
    pub beta_a: f64,
}

/// Conditions in the order one participant meets them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSpec {
    pub conditions: Vec<ConditionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_p_signal")]
    pub p_signal: f64,
    #[serde(default = "PayoffMatrix::quality_control")]
    pub payoffs: PayoffMatrix,
    #[serde(default = "Schedule::two_blocks_of_fifty")]
    pub schedule: Schedule,
    #[serde(default)]
    pub rendering: Rendering,
    #[serde(default = "default_timeout")]
    pub display_timeout_ms: u64,
    /// Fixed master seed; without one every session draws fresh entropy.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Successive participants cycle through these orders.
    pub orders: Vec<OrderSpec>,
}

fn default_p_signal() -> f64 {
    0.4
}

fn default_timeout() -> u64 {
    30_000
}

impl ServiceConfig {
    /// Both system orders for every participant group of `experiment`.
    pub fn preset(experiment: Experiment) -> Self {
        let mut orders = Vec::new();
        for (d_h, [a, b]) in experiment.groups() {
            let spec = |s: DetectorParams| ConditionSpec {
                d_h,
                d_a: s.d_prime,
                beta_a: s.beta,
            };
            orders.push(OrderSpec {
                conditions: vec![spec(a), spec(b)],
            });
            orders.push(OrderSpec {
                conditions: vec![spec(b), spec(a)],
            });
        }
        Self {
            p_signal: default_p_signal(),
            payoffs: PayoffMatrix::quality_control(),
            schedule: Schedule::two_blocks_of_fifty(),
            rendering: Rendering::default(),
            display_timeout_ms: default_timeout(),
            seed: None,
            orders,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = toml::from_str(&text)?;
        config.validate().map_err(anyhow::Error::msg)?;
        Ok(config)
    }

    pub fn problem(&self, c: &ConditionSpec) -> resqu_core::Result<AidedProblem> {
        AidedProblem::new(
            Environment::new(self.p_signal)?,
            c.d_h,
            DetectorParams::new(c.d_a, c.beta_a)?,
            self.payoffs,
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        self.rendering.validate()?;
        self.schedule.validate().map_err(|e| e.to_string())?;
        if self.schedule.total_trials() == 0 {
            return Err("schedule has no trials".into());
        }
        if self.display_timeout_ms == 0 {
            return Err("display_timeout_ms must be > 0".into());
        }
        let p = self.payoffs;
        if [p.v_tp, p.v_tn, p.v_fp, p.v_fn].iter().any(|v| v.fract() != 0.0) {
            return Err("payoffs must be whole points".into());
        }
        if self.orders.is_empty() || self.orders.iter().any(|o| o.conditions.is_empty()) {
            return Err("need at least one order with at least one condition".into());
        }
        for c in self.orders.iter().flat_map(|o| &o.conditions) {
            self.problem(c).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

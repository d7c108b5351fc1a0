//! Causal responsibility of a human operator aided by a binary classifier.
//!
//! The crate models aided decisions as two equal-variance Gaussian detectors
//! (the human and the alerting system) and quantifies the human's share of
//! the final action as `H(X|Y) / H(X)`, where `X` is the human's action and
//! `Y` the system's indication.
//!
//! - [`infotheory`]: entropies and the responsibility ratio over a 2×2 joint.
//! - [`sdt`]: signal detection primitives (rates, criteria, posteriors).
//! - [`theory`]: optimal contingent policies and theoretical responsibility.
//! - [`empirics`]: trial logs, measured responsibility, trust measures,
//!   questionnaires and correlations.
//! - [`simulator`]: seeded Monte Carlo agents and experiment schedules.

pub mod empirics;
pub mod error;
pub mod infotheory;
pub mod sdt;
pub mod simulator;
pub mod theory;
pub mod types;

pub use error::{Error, Result};
pub use infotheory::{binary_entropy, entropy_bundle, responsibility, EntropyBundle, JointPmf2x2};
pub use sdt::{
    d_eff_approx, detector_rates, optimal_beta, phi, phi_inv, posterior_given_indication,
    system_outcome_profile, DetectorParams, DetectorRates, Environment, PayoffMatrix,
    SystemOutcomeProfile,
};
pub use theory::{
    aided_joint_distribution, expected_payoff, optimal_contingent_policy, policy_d_eff,
    responsibility_surface, theoretical_responsibility, theory_report, AidedProblem,
    ContingentPolicy, TheoryReport,
};
pub use types::{Indication, Response, TrueState};

//! Shared fixtures for the benchmarks.

use resqu_core::theory::AidedProblem;

/// The four surface points and the liberal-criterion condition.
pub fn benchmark_problems() -> Vec<AidedProblem> {
    [(1.0, 1.0, 1.0), (1.0, 2.3, 1.0), (2.3, 1.0, 1.0), (2.3, 2.3, 1.0), (1.0, 2.3, 0.03)]
        .into_iter()
        .map(|(d_h, d_a, beta)| AidedProblem::quality_control(d_h, d_a, beta).expect("valid condition"))
        .collect()
}

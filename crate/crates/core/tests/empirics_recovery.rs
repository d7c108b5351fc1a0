use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use resqu_core::empirics::{
    empirical_report, filter_blocks, measured_responsibility, parse_log, per_indication_sdt,
    write_log, BlockFilter, TrialRecord,
};
use resqu_core::sdt::PayoffMatrix;
use resqu_core::simulator::{run_session, AgentPolicy, Schedule, SessionSpec};
use resqu_core::theory::AidedProblem;
use resqu_core::types::{Indication, Response, TrueState};

/// `n` signal and `n` noise trials per indication, answered with known
/// centered cutoffs by a human of sensitivity `d_h`.
fn synthetic_log(d_h: f64, centered: [f64; 2], n: usize, seed: u64) -> Vec<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payoffs = PayoffMatrix::quality_control();
    let mut out = Vec::with_capacity(4 * n);
    for y in Indication::ALL {
        let cutoff = centered[y.index()] + d_h / 2.0;
        for state in TrueState::ALL {
            for _ in 0..n {
                let mean = if state == TrueState::Signal { d_h } else { 0.0 };
                let obs = mean + rng.sample::<f64, _>(StandardNormal);
                let response = if obs > cutoff { Response::Reject } else { Response::Accept };
                out.push(TrialRecord {
                    session_id: "syn".into(),
                    condition_id: "syn".into(),
                    block: 2,
                    trial_index: out.len() as u64,
                    true_state: state,
                    indication: y,
                    stimulus_value: obs,
                    response,
                    payoff: payoffs.value(state, response) as i64,
                    rt_ms: None,
                });
            }
        }
    }
    out
}

#[test]
fn recovers_matched_cutoffs() {
    let log = synthetic_log(1.0, [-1.95, 1.95], 100_000, 1);
    let s = per_indication_sdt(&log).unwrap();
    assert!((s.red.centered_cutoff + 1.95).abs() <= 0.03, "{}", s.red.centered_cutoff);
    assert!((s.green.centered_cutoff - 1.95).abs() <= 0.03, "{}", s.green.centered_cutoff);
    assert!((s.cutoff_difference - 3.9).abs() <= 0.06);
}

#[test]
fn reported_empirical_means_give_their_difference() {
    let log = synthetic_log(1.0, [-1.0, 1.0], 100_000, 2);
    let s = per_indication_sdt(&log).unwrap();
    assert!((s.cutoff_difference - 2.0).abs() <= 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn recovers_generator_parameters(
        d_h in 0.6f64..2.5,
        red in -1.5f64..0.5,
        green in -0.5f64..1.5,
        seed in any::<u64>(),
    ) {
        let log = synthetic_log(d_h, [red, green], 100_000, seed);
        let s = per_indication_sdt(&log).unwrap();
        for (cell, c) in [(s.red, red), (s.green, green)] {
            prop_assert!((cell.d_prime - d_h).abs() <= 0.05, "d' {} vs {d_h}", cell.d_prime);
            prop_assert!((cell.centered_cutoff - c).abs() <= 0.05, "c {} vs {c}", cell.centered_cutoff);
        }
    }

    #[test]
    fn measured_responsibility_is_a_fraction(
        d_h in 0.3f64..3.0,
        d_a in 0.3f64..3.0,
        red in -3.0f64..1.0,
        green in -1.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let p = AidedProblem::quality_control(d_h, d_a, 1.0).unwrap();
        let policy = resqu_core::theory::ContingentPolicy::from_centered(d_h, red, green);
        let spec = SessionSpec { session_id: "p".into(), stream: 0 };
        let log = run_session(&p, &AgentPolicy::Configured(policy), &Schedule::iid(500), seed, &spec).unwrap();
        if let Ok(r) = measured_responsibility(&log.records) {
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}

#[test]
fn golden_simulated_log_roundtrips() {
    let p = AidedProblem::quality_control(1.0, 2.3, 1.0).unwrap();
    let spec = SessionSpec {
        session_id: "golden".into(),
        stream: 0,
    };
    let session = run_session(&p, &AgentPolicy::OptimalContingent, &Schedule::iid(200), 42, &spec).unwrap();
    let mut buf = Vec::new();
    write_log(&mut buf, &session.records).unwrap();
    let parsed = parse_log(&buf[..], &p.payoffs).unwrap();
    assert_eq!(parsed.len(), 200);
    assert_eq!(parsed.iter().map(|t| t.payoff).sum::<i64>(), session.summary.total_score);
    assert_eq!(parsed, session.records);
}

#[test]
fn block_filter_bookkeeping() {
    let p = AidedProblem::quality_control(2.3, 1.0, 1.0).unwrap();
    let spec = SessionSpec {
        session_id: "b".into(),
        stream: 0,
    };
    let session = run_session(&p, &AgentPolicy::OptimalContingent, &Schedule::two_blocks_of_fifty(), 1, &spec).unwrap();
    let all = empirical_report(&filter_blocks(&session.records, BlockFilter::All)).unwrap();
    let second = empirical_report(&filter_blocks(&session.records, BlockFilter::SecondOnly)).unwrap();
    assert_eq!(all.trial_count - second.trial_count, 50);
    assert_eq!(all.total_score - second.total_score, session.summary.block_scores[0]);
}

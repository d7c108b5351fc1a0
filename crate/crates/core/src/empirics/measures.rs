//! Measured responsibility and empirical SDT trust measures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{responsibility, JointPmf2x2};
use crate::sdt::phi_inv;
use crate::theory::{IndicationProbs, TheoryReport};
use crate::types::{Indication, Response, TrueState};

use super::log::TrialRecord;

/// Log-linear rate correction, `(k + 0.5) / (n + 1)`.
pub fn corrected_rate(k: u64, n: u64) -> f64 {
    (k as f64 + 0.5) / (n as f64 + 1.0)
}

/// Counts of `(response, indication)`, indexed like [`JointPmf2x2`].
pub fn joint_counts(trials: &[TrialRecord]) -> [[u64; 2]; 2] {
    let mut counts = [[0u64; 2]; 2];
    for t in trials {
        counts[t.response.index()][t.indication.index()] += 1;
    }
    counts
}

/// Plug-in responsibility from the relative frequencies of responses and
/// indications.
pub fn measured_responsibility(trials: &[TrialRecord]) -> Result<f64> {
    let counts = joint_counts(trials);
    for y in Indication::ALL {
        if counts[0][y.index()] + counts[1][y.index()] == 0 {
            return Err(Error::InsufficientData(format!("no trials with a {y} indication")));
        }
    }
    responsibility(&JointPmf2x2::from_counts(counts)?)
}

/// Hit and false-alarm counts of a set of final decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RateCounts {
    pub signal_trials: u64,
    pub hits: u64,
    pub noise_trials: u64,
    pub false_alarms: u64,
}

impl RateCounts {
    pub fn tally<'a>(trials: impl IntoIterator<Item = &'a TrialRecord>) -> Self {
        let mut c = Self::default();
        for t in trials {
            let reject = t.response == Response::Reject;
            match t.true_state {
                TrueState::Signal => {
                    c.signal_trials += 1;
                    c.hits += reject as u64;
                }
                TrueState::Noise => {
                    c.noise_trials += 1;
                    c.false_alarms += reject as u64;
                }
            }
        }
        c
    }

    pub fn hit_rate(&self) -> f64 {
        corrected_rate(self.hits, self.signal_trials)
    }

    pub fn false_alarm_rate(&self) -> f64 {
        corrected_rate(self.false_alarms, self.noise_trials)
    }
}

/// SDT estimates for the trials that showed one indication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicationSdt {
    pub indication: Indication,
    pub counts: RateCounts,
    /// Corrected.
    pub hit_rate: f64,
    /// Corrected.
    pub false_alarm_rate: f64,
    pub d_prime: f64,
    /// `−(z(HR) + z(FAR)) / 2`.
    pub centered_cutoff: f64,
    /// `−z(FAR)`, on the human observation axis.
    pub absolute_cutoff: f64,
}

pub fn indication_sdt(trials: &[TrialRecord], indication: Indication) -> Result<IndicationSdt> {
    let counts = RateCounts::tally(trials.iter().filter(|t| t.indication == indication));
    if counts.signal_trials == 0 || counts.noise_trials == 0 {
        return Err(Error::InsufficientData(format!(
            "{indication} cell has {} signal and {} noise trials; both must be non-empty",
            counts.signal_trials, counts.noise_trials
        )));
    }
    let hit_rate = counts.hit_rate();
    let false_alarm_rate = counts.false_alarm_rate();
    let zh = phi_inv(hit_rate)?;
    let zf = phi_inv(false_alarm_rate)?;
    Ok(IndicationSdt {
        indication,
        counts,
        hit_rate,
        false_alarm_rate,
        d_prime: zh - zf,
        centered_cutoff: -(zh + zf) / 2.0,
        absolute_cutoff: -zf,
    })
}

/// Both indication cells plus the green-minus-red cutoff difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerIndicationSdt {
    pub red: IndicationSdt,
    pub green: IndicationSdt,
    pub cutoff_difference: f64,
}

pub fn per_indication_sdt(trials: &[TrialRecord]) -> Result<PerIndicationSdt> {
    let red = indication_sdt(trials, Indication::Red)?;
    let green = indication_sdt(trials, Indication::Green)?;
    Ok(PerIndicationSdt {
        red,
        green,
        cutoff_difference: green.centered_cutoff - red.centered_cutoff,
    })
}

/// Sensitivity of the final decisions, ignoring indications.
pub fn d_eff_empirical(trials: &[TrialRecord]) -> Result<f64> {
    let c = RateCounts::tally(trials);
    if c.signal_trials == 0 || c.noise_trials == 0 {
        return Err(Error::InsufficientData(format!(
            "need signal and noise trials, got {} and {}",
            c.signal_trials, c.noise_trials
        )));
    }
    Ok(phi_inv(c.hit_rate())? - phi_inv(c.false_alarm_rate())?)
}

/// Measured responsibility and trust measures for one set of trials.
///
/// Measures whose preconditions fail are `None` and explained in `notes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    /// Shared condition id, or the distinct ids joined by `+`.
    pub condition_id: String,
    pub trial_count: usize,
    pub total_score: i64,
    pub measured_responsibility: Option<f64>,
    pub red: Option<IndicationSdt>,
    pub green: Option<IndicationSdt>,
    pub cutoff_difference: Option<f64>,
    pub d_eff_empirical: Option<f64>,
    /// Observed indication frequencies.
    pub indication_probs: IndicationProbs,
    pub notes: Vec<String>,
}

pub fn empirical_report(trials: &[TrialRecord]) -> Result<EmpiricalReport> {
    if trials.is_empty() {
        return Err(Error::InsufficientData("no trials".into()));
    }
    let mut ids: Vec<&str> = trials.iter().map(|t| t.condition_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();

    let mut notes = Vec::new();
    let mut keep = |r: Result<f64>, what: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            None
        }
    };
    let measured = keep(measured_responsibility(trials), "measured_responsibility");
    let d_eff = keep(d_eff_empirical(trials), "d_eff_empirical");
    let mut cell = |y| match indication_sdt(trials, y) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{y} cutoff: {e}"));
            None
        }
    };
    let red = cell(Indication::Red);
    let green = cell(Indication::Green);
    let n_red = trials.iter().filter(|t| t.indication == Indication::Red).count();
    let p_red = n_red as f64 / trials.len() as f64;

    Ok(EmpiricalReport {
        condition_id: ids.join("+"),
        trial_count: trials.len(),
        total_score: trials.iter().map(|t| t.payoff).sum(),
        measured_responsibility: measured,
        cutoff_difference: red.zip(green).map(|(r, g)| g.centered_cutoff - r.centered_cutoff),
        red,
        green,
        d_eff_empirical: d_eff,
        indication_probs: IndicationProbs {
            red: p_red,
            green: 1.0 - p_red,
        },
        notes,
    })
}

/// One report per session, keyed by session id.
pub fn reports_by_session(trials: &[TrialRecord]) -> Result<BTreeMap<String, EmpiricalReport>> {
    group_by(trials, |t| &t.session_id)
        .into_iter()
        .map(|(k, v)| Ok((k, empirical_report(&v)?)))
        .collect()
}

/// Splits trials by condition id, preserving order within each group.
pub fn group_by_condition(trials: &[TrialRecord]) -> BTreeMap<String, Vec<TrialRecord>> {
    group_by(trials, |t| &t.condition_id)
}

fn group_by(
    trials: &[TrialRecord],
    key: impl Fn(&TrialRecord) -> &String,
) -> BTreeMap<String, Vec<TrialRecord>> {
    let mut groups: BTreeMap<String, Vec<TrialRecord>> = BTreeMap::new();
    for t in trials {
        groups.entry(key(t).clone()).or_default().push(t.clone());
    }
    groups
}

/// Gaps between the optimal and the observed trust measures.
///
/// Cutoff gaps are theory minus empirical: a positive green gap means the
/// human demanded less evidence than optimal before rejecting after a green
/// indication (under-reliance). The d′ and responsibility deviations are
/// empirical minus theory, so a negative d′ deviation is lost sensitivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustDeviations {
    pub condition_id: String,
    pub cutoff_gap_red: Option<f64>,
    pub cutoff_gap_green: Option<f64>,
    pub cutoff_difference_gap: Option<f64>,
    pub d_eff_deviation: Option<f64>,
    pub responsibility_deviation: Option<f64>,
    /// Theoretical `P(red)` and `P(green)`: how often each gap is in play.
    pub weights: IndicationProbs,
    /// `P(red)·|gap_red| + P(green)·|gap_green|`.
    pub weighted_cutoff_gap: Option<f64>,
}

pub fn trust_deviations(report: &EmpiricalReport, theory: &TheoryReport) -> Result<TrustDeviations> {
    if report.condition_id != theory.condition_id {
        return Err(Error::ConditionMismatch(format!(
            "log condition {} vs theory {}",
            report.condition_id, theory.condition_id
        )));
    }
    let (t_red, t_green) = theory.centered_cutoffs;
    let gap_red = report.red.map(|r| t_red - r.centered_cutoff);
    let gap_green = report.green.map(|g| t_green - g.centered_cutoff);
    let w = theory.indication_probs;
    Ok(TrustDeviations {
        condition_id: report.condition_id.clone(),
        cutoff_gap_red: gap_red,
        cutoff_gap_green: gap_green,
        cutoff_difference_gap: report.cutoff_difference.map(|d| theory.cutoff_difference - d),
        d_eff_deviation: report.d_eff_empirical.map(|d| d - theory.d_eff_policy),
        responsibility_deviation: report.measured_responsibility.map(|r| r - theory.responsibility),
        weights: w,
        weighted_cutoff_gap: gap_red
            .zip(gap_green)
            .map(|(r, g)| w.red * r.abs() + w.green * g.abs()),
    })
}

/// Theory, empirical and difference (empirical minus theory) columns for
/// responsibility, d′_eff and the cutoff difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub condition_id: String,
    pub responsibility: Triplet,
    pub d_eff: Triplet,
    pub cutoff_difference: Triplet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub theory: f64,
    pub empirical: Option<f64>,
    pub difference: Option<f64>,
}

impl Triplet {
    fn new(theory: f64, empirical: Option<f64>) -> Self {
        Self {
            theory,
            empirical,
            difference: empirical.map(|e| e - theory),
        }
    }
}

pub fn comparison_row(report: &EmpiricalReport, theory: &TheoryReport) -> Result<ComparisonRow> {
    if report.condition_id != theory.condition_id {
        return Err(Error::ConditionMismatch(format!(
            "log condition {} vs theory {}",
            report.condition_id, theory.condition_id
        )));
    }
    Ok(ComparisonRow {
        condition_id: report.condition_id.clone(),
        responsibility: Triplet::new(theory.responsibility, report.measured_responsibility),
        d_eff: Triplet::new(theory.d_eff_policy, report.d_eff_empirical),
        cutoff_difference: Triplet::new(theory.cutoff_difference, report.cutoff_difference),
    })
}

/// CSV with one row per condition; missing empirical values are empty.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "condition_id,responsibility_theory,responsibility_empirical,responsibility_diff,\
         d_eff_theory,d_eff_empirical,d_eff_diff,\
         cutoff_difference_theory,cutoff_difference_empirical,cutoff_difference_diff\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for row in rows {
        out.push_str(&row.condition_id);
        for t in [row.responsibility, row.d_eff, row.cutoff_difference] {
            out.push_str(&format!(",{:.4},{},{}", t.theory, opt(t.empirical), opt(t.difference)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{theory_report, AidedProblem};

    fn trial(state: TrueState, indication: Indication, response: Response, index: u64) -> TrialRecord {
        TrialRecord {
            session_id: "s".into(),
            condition_id: "c".into(),
            block: 2,
            trial_index: index,
            true_state: state,
            indication,
            stimulus_value: 0.0,
            response,
            payoff: crate::sdt::PayoffMatrix::quality_control().value(state, response) as i64,
            rt_ms: None,
        }
    }

    /// Trials with exactly the given counts per (state, indication, response).
    fn synthetic(cells: &[(TrueState, Indication, Response, u64)]) -> Vec<TrialRecord> {
        let mut out = Vec::new();
        for &(s, y, r, n) in cells {
            for _ in 0..n {
                let i = out.len() as u64;
                out.push(trial(s, y, r, i));
            }
        }
        out
    }

    #[test]
    fn mirror_agent_has_zero_responsibility() {
        use Indication::*;
        use Response::*;
        let t = synthetic(&[
            (TrueState::Signal, Red, Reject, 30),
            (TrueState::Noise, Red, Reject, 10),
            (TrueState::Noise, Green, Accept, 50),
            (TrueState::Signal, Green, Accept, 10),
        ]);
        assert_eq!(measured_responsibility(&t).unwrap(), 0.0);
    }

    #[test]
    fn one_response_is_degenerate() {
        use Indication::*;
        let t = synthetic(&[
            (TrueState::Signal, Red, Response::Accept, 3),
            (TrueState::Noise, Green, Response::Accept, 3),
        ]);
        assert_eq!(measured_responsibility(&t), Err(Error::DegenerateHumanDistribution));
        let t = synthetic(&[(TrueState::Signal, Red, Response::Accept, 3)]);
        assert!(matches!(measured_responsibility(&t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn corrected_rates_stay_inside() {
        assert_eq!(corrected_rate(0, 0), 0.5);
        assert!(corrected_rate(10, 10) < 1.0);
        assert!(corrected_rate(0, 10) > 0.0);
        use Indication::*;
        let t = synthetic(&[
            (TrueState::Signal, Red, Response::Reject, 20),
            (TrueState::Noise, Red, Response::Accept, 20),
        ]);
        let s = indication_sdt(&t, Red).unwrap();
        assert!(s.d_prime.is_finite() && s.centered_cutoff.is_finite());
        assert!(s.centered_cutoff.abs() < 1e-12);
        assert!((s.hit_rate - 20.5 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn empty_cell_names_the_indication() {
        use Indication::*;
        let t = synthetic(&[(TrueState::Signal, Red, Response::Reject, 5)]);
        match per_indication_sdt(&t) {
            Err(Error::InsufficientData(msg)) => assert!(msg.contains("red")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cutoff_identities() {
        use Indication::*;
        let t = synthetic(&[
            (TrueState::Signal, Green, Response::Reject, 7),
            (TrueState::Signal, Green, Response::Accept, 13),
            (TrueState::Noise, Green, Response::Reject, 2),
            (TrueState::Noise, Green, Response::Accept, 40),
        ]);
        let s = indication_sdt(&t, Green).unwrap();
        assert!((s.absolute_cutoff - (s.centered_cutoff + s.d_prime / 2.0)).abs() < 1e-12);
        assert!((s.hit_rate - 7.5 / 21.0).abs() < 1e-15);
        assert!((s.false_alarm_rate - 2.5 / 43.0).abs() < 1e-15);
    }

    fn theory_for(d_h: f64, d_a: f64, beta: f64) -> TheoryReport {
        theory_report(&AidedProblem::quality_control(d_h, d_a, beta).unwrap()).unwrap()
    }

    fn report_with(theory: &TheoryReport, red: f64, green: f64) -> EmpiricalReport {
        let cell = |indication, centered| IndicationSdt {
            indication,
            counts: RateCounts::default(),
            hit_rate: 0.5,
            false_alarm_rate: 0.5,
            d_prime: 1.0,
            centered_cutoff: centered,
            absolute_cutoff: centered + 0.5,
        };
        EmpiricalReport {
            condition_id: theory.condition_id.clone(),
            trial_count: 100,
            total_score: 0,
            measured_responsibility: Some(theory.responsibility),
            red: Some(cell(Indication::Red, red)),
            green: Some(cell(Indication::Green, green)),
            cutoff_difference: Some(green - red),
            d_eff_empirical: Some(theory.d_eff_policy),
            indication_probs: theory.indication_probs,
            notes: vec![],
        }
    }

    #[test]
    fn deviations_for_liberal_system() {
        let theory = theory_for(1.0, 2.3, 0.03);
        let dev = trust_deviations(&report_with(&theory, -0.1, 0.6), &theory).unwrap();
        // Printed theory is (−0.4, 4.6); the model gives (−0.433, 4.550).
        assert!((dev.cutoff_gap_red.unwrap() + 0.33).abs() < 0.05);
        assert!((dev.cutoff_gap_green.unwrap() - 3.95).abs() < 0.05);
        assert!((dev.cutoff_difference_gap.unwrap() - 4.28).abs() < 0.05);
        assert!(dev.weights.red > 0.75);

        let mut printed = theory.clone();
        printed.centered_cutoffs = (-0.4, 4.6);
        printed.cutoff_difference = 5.0;
        let dev = trust_deviations(&report_with(&printed, -0.1, 0.6), &printed).unwrap();
        assert!((dev.cutoff_gap_red.unwrap() + 0.3).abs() < 1e-12);
        assert!((dev.cutoff_gap_green.unwrap() - 4.0).abs() < 1e-12);
        assert!((dev.cutoff_difference_gap.unwrap() - 4.3).abs() < 1e-12);
    }

    #[test]
    fn deviations_for_matched_system() {
        let theory = theory_for(1.0, 2.3, 1.0);
        let dev = trust_deviations(&report_with(&theory, -1.0, 1.0), &theory).unwrap();
        assert!((dev.cutoff_gap_red.unwrap() + 0.95).abs() < 0.01);
        assert!((dev.cutoff_gap_green.unwrap() - 0.95).abs() < 0.01);
        assert!((dev.cutoff_difference_gap.unwrap() - 1.9).abs() < 0.02);
    }

    #[test]
    fn identical_reports_have_no_deviation() {
        let theory = theory_for(2.3, 1.0, 1.0);
        let (r, g) = theory.centered_cutoffs;
        let dev = trust_deviations(&report_with(&theory, r, g), &theory).unwrap();
        for v in [
            dev.cutoff_gap_red,
            dev.cutoff_gap_green,
            dev.cutoff_difference_gap,
            dev.d_eff_deviation,
            dev.responsibility_deviation,
            dev.weighted_cutoff_gap,
        ] {
            assert!(v.unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_condition() {
        let theory = theory_for(1.0, 2.3, 1.0);
        let mut report = report_with(&theory, 0.0, 0.0);
        report.condition_id = "other".into();
        assert!(matches!(trust_deviations(&report, &theory), Err(Error::ConditionMismatch(_))));
        assert!(matches!(comparison_row(&report, &theory), Err(Error::ConditionMismatch(_))));
    }

    #[test]
    fn comparison_csv_shape() {
        let theory = theory_for(1.0, 1.0, 1.0);
        let mut report = report_with(&theory, -0.6, 0.6);
        report.d_eff_empirical = None;
        let row = comparison_row(&report, &theory).unwrap();
        assert!((row.cutoff_difference.difference.unwrap() - (1.2 - theory.cutoff_difference)).abs() < 1e-12);
        let csv = comparison_csv(&[row]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 10);
        assert_eq!(lines[1].split(',').count(), 10);
        assert!(lines[1].contains(",1.3016,,,"));
    }

    #[test]
    fn report_collects_notes() {
        use Indication::*;
        let t = synthetic(&[
            (TrueState::Signal, Red, Response::Reject, 5),
            (TrueState::Noise, Red, Response::Accept, 5),
            (TrueState::Noise, Green, Response::Accept, 5),
        ]);
        let r = empirical_report(&t).unwrap();
        assert_eq!(r.trial_count, 15);
        assert_eq!(r.total_score, 15);
        assert!(r.red.is_some() && r.green.is_none() && r.cutoff_difference.is_none());
        assert!(r.notes.iter().any(|n| n.contains("green")));
        assert!((r.indication_probs.red - 2.0 / 3.0).abs() < 1e-15);
        assert!(empirical_report(&[]).is_err());
    }

    #[test]
    fn reports_per_session() {
        use Indication::*;
        let mut t = synthetic(&[
            (TrueState::Signal, Red, Response::Reject, 4),
            (TrueState::Noise, Green, Response::Accept, 4),
        ]);
        for r in t.iter_mut().skip(4) {
            r.session_id = "t".into();
        }
        let by = reports_by_session(&t).unwrap();
        assert_eq!(by.len(), 2);
        assert_eq!(by["s"].trial_count, 4);
    }
}

//! Subjective responsibility from the six-item questionnaire.
//!
//! Items are rated 1 to 7. Q3 and Q4 attribute the outcome to the system, so
//! they are reversed before averaging with Q5 into the self score. Q6 rates
//! the responsibility of another person in the same role.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LogErrorKind, Result};

use super::log::json_error;
use super::stats::{cronbach_alpha, mean};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireRecord {
    pub session_id: String,
    pub condition_id: String,
    pub q1: u8,
    pub q2: u8,
    pub q3: u8,
    pub q4: u8,
    pub q5: u8,
    pub q6: u8,
}

impl QuestionnaireRecord {
    pub fn items(&self) -> [u8; 6] {
        [self.q1, self.q2, self.q3, self.q4, self.q5, self.q6]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.items().into_iter().enumerate() {
            if !(1..=7).contains(&q) {
                return Err(Error::InvalidParameter(format!("q{} = {q} is outside 1..=7", i + 1)));
            }
        }
        Ok(())
    }

    /// Reversed Q3, reversed Q4 and Q5.
    pub fn self_items(&self) -> [f64; 3] {
        [
            reverse_item(self.q3) as f64,
            reverse_item(self.q4) as f64,
            self.q5 as f64,
        ]
    }

    pub fn subjective_self(&self) -> f64 {
        mean(&self.self_items())
    }
}

/// `8 − item` on a 1..=7 scale.
pub fn reverse_item(item: u8) -> u8 {
    8 - item
}

/// Per-condition subjective scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveReport {
    pub condition_id: String,
    pub respondents: usize,
    /// Mean self score, 1 to 7.
    pub subjective_self: f64,
    /// Mean Q6.
    pub subjective_other: f64,
    /// Internal consistency of the three self items; `None` with fewer than
    /// two respondents or zero total variance.
    pub cronbach_alpha: Option<f64>,
}

pub fn questionnaire_scores(records: &[QuestionnaireRecord]) -> Result<Vec<SubjectiveReport>> {
    let mut by_condition: BTreeMap<&str, Vec<&QuestionnaireRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        by_condition.entry(&r.condition_id).or_default().push(r);
    }
    Ok(by_condition
        .into_iter()
        .map(|(condition_id, rs)| {
            let selfs: Vec<f64> = rs.iter().map(|r| r.subjective_self()).collect();
            let others: Vec<f64> = rs.iter().map(|r| r.q6 as f64).collect();
            let rows: Vec<Vec<f64>> = rs.iter().map(|r| r.self_items().to_vec()).collect();
            SubjectiveReport {
                condition_id: condition_id.to_string(),
                respondents: rs.len(),
                subjective_self: mean(&selfs),
                subjective_other: mean(&others),
                cronbach_alpha: cronbach_alpha(&rows),
            }
        })
        .collect())
}

/// Parses line-delimited questionnaire records with line-numbered errors.
pub fn parse_questionnaires<R: BufRead>(reader: R) -> Result<Vec<QuestionnaireRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| Error::Log {
            line: i + 1,
            kind: LogErrorKind::Schema(msg),
        };
        let record: QuestionnaireRecord =
            serde_json::from_str(&line).map_err(|e| schema(json_error(&e)))?;
        record.validate().map_err(|e| schema(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(items: [u8; 6]) -> QuestionnaireRecord {
        QuestionnaireRecord {
            session_id: "s".into(),
            condition_id: "c".into(),
            q1: items[0],
            q2: items[1],
            q3: items[2],
            q4: items[3],
            q5: items[4],
            q6: items[5],
        }
    }

    #[test]
    fn self_score_extremes() {
        assert_eq!(rec([4, 4, 7, 7, 1, 4]).subjective_self(), 1.0);
        assert_eq!(rec([4, 4, 1, 1, 7, 4]).subjective_self(), 7.0);
    }

    #[test]
    fn reversal_is_an_involution() {
        for q in 1..=7 {
            assert_eq!(reverse_item(reverse_item(q)), q);
        }
    }

    #[test]
    fn perfectly_correlated_items_have_alpha_one() {
        // Self items move together after reversal: q3 = q4 = 8 − q5.
        let records: Vec<_> = (0..20)
            .map(|i| {
                let q5 = 1 + (i % 7) as u8;
                rec([4, 4, 8 - q5, 8 - q5, q5, 3])
            })
            .collect();
        let scores = questionnaire_scores(&records).unwrap();
        assert_eq!(scores.len(), 1);
        assert!((scores[0].cronbach_alpha.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(scores[0].respondents, 20);
        assert_eq!(scores[0].subjective_other, 3.0);
    }

    #[test]
    fn out_of_range_item() {
        assert!(questionnaire_scores(&[rec([4, 4, 8, 4, 4, 4])]).is_err());
        let line = serde_json::to_string(&rec([0, 4, 4, 4, 4, 4])).unwrap();
        let text = format!("\n{line}\n");
        assert!(matches!(
            parse_questionnaires(text.as_bytes()),
            Err(Error::Log { line: 2, .. })
        ));
    }

    #[test]
    fn parse_roundtrip() {
        let records = vec![rec([1, 2, 3, 4, 5, 6]), rec([7, 6, 5, 4, 3, 2])];
        let text: String = records
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect();
        assert_eq!(parse_questionnaires(text.as_bytes()).unwrap(), records);
    }
}

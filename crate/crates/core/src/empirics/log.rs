//! Line-delimited JSON trial logs.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, LogErrorKind, Result};
use crate::sdt::PayoffMatrix;
use crate::types::{Indication, Response, TrueState};

/// One logged trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub session_id: String,
    pub condition_id: String,
    /// 1-based block number.
    pub block: u32,
    /// 0-based, unique within `(session_id, condition_id)`.
    pub trial_index: u64,
    pub true_state: TrueState,
    pub indication: Indication,
    /// Human observation in SD units.
    pub stimulus_value: f64,
    pub response: Response,
    pub payoff: i64,
    #[serde(default)]
    pub rt_ms: Option<u64>,
}

impl TrialRecord {
    pub fn is_correct(&self) -> bool {
        self.response.is_correct(self.true_state)
    }
}

/// A serde_json message with its position rewritten for one-line records.
pub(crate) fn json_error(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    match msg.strip_suffix(&suffix) {
        Some(head) => format!("{head} (column {})", e.column()),
        None => msg,
    }
}

/// Which blocks enter an analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockFilter {
    /// Blocks 2 and later; the first block counts as practice.
    #[default]
    SecondOnly,
    All,
}

impl BlockFilter {
    pub fn keeps(self, block: u32) -> bool {
        match self {
            BlockFilter::SecondOnly => block >= 2,
            BlockFilter::All => true,
        }
    }
}

pub fn filter_blocks(trials: &[TrialRecord], filter: BlockFilter) -> Vec<TrialRecord> {
    trials
        .iter()
        .filter(|t| filter.keeps(t.block))
        .cloned()
        .collect()
}

/// Parses a trial log, checking every record against `payoffs`.
///
/// Blank lines are skipped. Errors carry the 1-based line number.
pub fn parse_log<R: BufRead>(reader: R, payoffs: &PayoffMatrix) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(&line).map_err(|e| Error::Log {
            line: line_no,
            kind: LogErrorKind::Schema(json_error(&e)),
        })?;
        check_record(&record, payoffs).map_err(|kind| Error::Log {
            line: line_no,
            kind,
        })?;
        let key = (
            record.session_id.clone(),
            record.condition_id.clone(),
            record.trial_index,
        );
        if !seen.insert(key) {
            return Err(Error::Log {
                line: line_no,
                kind: LogErrorKind::DuplicateTrial {
                    session_id: record.session_id,
                    condition_id: record.condition_id,
                    trial_index: record.trial_index,
                },
            });
        }
        records.push(record);
    }
    Ok(records)
}

fn check_record(record: &TrialRecord, payoffs: &PayoffMatrix) -> std::result::Result<(), LogErrorKind> {
    if record.block < 1 {
        return Err(LogErrorKind::Schema("block must be >= 1".into()));
    }
    if !record.stimulus_value.is_finite() {
        return Err(LogErrorKind::Schema("stimulus_value must be finite".into()));
    }
    let expected = payoffs.value(record.true_state, record.response);
    if (record.payoff as f64 - expected).abs() > 1e-9 {
        return Err(LogErrorKind::PayoffMismatch {
            state: record.true_state.to_string(),
            response: record.response.to_string(),
            found: record.payoff,
            expected,
        });
    }
    Ok(())
}

/// Writes one JSON object per line.
pub fn write_log<W: Write>(mut writer: W, records: &[TrialRecord]) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

//! Small descriptive statistics: normalization, reliability, correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Min-max scaling to `[0, 1]`.
pub fn normalize_scores(values: &[f64]) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateNormalization);
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Cronbach's α over respondents (rows) and items (columns).
///
/// Returns `None` with fewer than two respondents or items, or when the
/// total score has no variance.
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Option<f64> {
    let k = rows.first()?.len();
    if rows.len() < 2 || k < 2 || rows.iter().any(|r| r.len() != k) {
        return None;
    }
    let item_var: f64 = (0..k)
        .map(|j| sample_variance(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let total_var = sample_variance(&totals);
    if total_var == 0.0 {
        return None;
    }
    let k = k as f64;
    Some(k / (k - 1.0) * (1.0 - item_var / total_var))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson_r: f64,
    pub spearman_rho: f64,
}

/// Pearson and Spearman correlation; ties get average ranks.
pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "correlation needs equal lengths >= 3, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    Ok(Correlation {
        pearson_r: pearson(xs, ys)?,
        spearman_rho: pearson(&ranks(xs), &ranks(ys))?,
    })
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("xs"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("ys"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

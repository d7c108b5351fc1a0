//! Entropies and the responsibility ratio over a binary action × binary
//! indication joint distribution.
//!
//! All logarithms are base 2. Terms with probability below [`ZERO_PROB`] are
//! treated as exact zeros, which implements the `0·log 0 = 0` convention.
//!
//! The responsibility ratio is `H(X|Y) / H(X)` with `H(X|Y) = H(X,Y) − H(Y)`.
//! The alternative expression `(H(X,Y) − H(X)) / H(X)` that sometimes
//! accompanies the definition equals `H(Y|X) / H(X)` and is a different
//! quantity; it is not used here.
//!
//! When `H(X)` is positive but tiny (below about 1e-9 bits) the ratio is
//! numerically fragile: it is returned as computed, without snapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Indication, Response};

/// Probabilities below this are exact zeros for entropy terms.
pub const ZERO_PROB: f64 = 1e-15;

/// Tolerance on the total mass of a joint distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Joint distribution of the human action `X` and system indication `Y`.
///
/// Cells are indexed `[x][y]` with `x` in (reject, accept) and `y` in
/// (red, green), matching [`Response::index`] and [`Indication::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPmf2x2 {
    cells: [[f64; 2]; 2],
}

impl JointPmf2x2 {
    /// Validate and wrap a matrix of probabilities.
    pub fn new(cells: [[f64; 2]; 2]) -> Result<Self> {
        let mut total = 0.0;
        for (x, row) in cells.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidJoint(format!("cell ({x},{y}) = {p}")));
                }
                total += p;
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidJoint(format!("cells sum to {total}")));
        }
        Ok(Self { cells })
    }

    /// Plug-in joint from a contingency table of counts.
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Result<Self> {
        let n: u64 = counts.iter().flatten().sum();
        if n == 0 {
            return Err(Error::InsufficientData("empty contingency table".into()));
        }
        let n = n as f64;
        let cells = counts.map(|row| row.map(|k| k as f64 / n));
        Self::new(cells)
    }

    /// Outer product of two marginals: the joint under independence.
    pub fn independent(p_reject: f64, p_red: f64) -> Result<Self> {
        let px = [p_reject, 1.0 - p_reject];
        let py = [p_red, 1.0 - p_red];
        Self::new([
            [px[0] * py[0], px[0] * py[1]],
            [px[1] * py[0], px[1] * py[1]],
        ])
    }

    pub fn cells(&self) -> [[f64; 2]; 2] {
        self.cells
    }

    pub fn get(&self, response: Response, indication: Indication) -> f64 {
        self.cells[response.index()][indication.index()]
    }

    /// Marginal of the human action: `[p(reject), p(accept)]`.
    pub fn px(&self) -> [f64; 2] {
        [
            self.cells[0][0] + self.cells[0][1],
            self.cells[1][0] + self.cells[1][1],
        ]
    }

    /// Marginal of the indication: `[p(red), p(green)]`.
    pub fn py(&self) -> [f64; 2] {
        [
            self.cells[0][0] + self.cells[1][0],
            self.cells[0][1] + self.cells[1][1],
        ]
    }

    /// Largest absolute departure from the product of the marginals.
    pub fn max_dependence(&self) -> f64 {
        let (px, py) = (self.px(), self.py());
        let mut worst = 0.0_f64;
        for x in 0..2 {
            for y in 0..2 {
                worst = worst.max((self.cells[x][y] - px[x] * py[y]).abs());
            }
        }
        worst
    }

    /// The same distribution with the indication labels swapped.
    pub fn swap_indications(&self) -> Self {
        let c = self.cells;
        Self {
            cells: [[c[0][1], c[0][0]], [c[1][1], c[1][0]]],
        }
    }
}

/// The five entropies of a 2×2 joint, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBundle {
    pub h_x: f64,
    pub h_y: f64,
    pub h_xy: f64,
    pub h_x_given_y: f64,
    pub h_y_given_x: f64,
}

fn surprisal_term(p: f64) -> f64 {
    if p < ZERO_PROB {
        0.0
    } else {
        -p * p.log2()
    }
}

fn entropy_of(ps: &[f64]) -> f64 {
    ps.iter().map(|&p| surprisal_term(p)).sum()
}

/// Entropy of a Bernoulli(p) variable.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            what: "probability",
            value: p,
        });
    }
    Ok(entropy_of(&[p, 1.0 - p]).clamp(0.0, 1.0))
}

/// `-Σ_c p(c) Σ_r p(r|c) log2 p(r|c)` where `groups[c]` holds the joint
/// masses `p(r, c)` of one conditioning value.
fn conditional_entropy(groups: [[f64; 2]; 2]) -> f64 {
    groups
        .iter()
        .map(|g| {
            let pc = g[0] + g[1];
            if pc < ZERO_PROB {
                0.0
            } else {
                pc * entropy_of(&[g[0] / pc, g[1] / pc])
            }
        })
        .sum()
}

pub fn entropy_bundle(joint: &JointPmf2x2) -> EntropyBundle {
    let c = joint.cells;
    let by_indication = [[c[0][0], c[1][0]], [c[0][1], c[1][1]]];
    EntropyBundle {
        h_x: entropy_of(&joint.px()),
        h_y: entropy_of(&joint.py()),
        h_xy: entropy_of(&[c[0][0], c[0][1], c[1][0], c[1][1]]),
        h_x_given_y: conditional_entropy(by_indication),
        h_y_given_x: conditional_entropy(c),
    }
}

/// The human's exclusive share of the action: `H(X|Y) / H(X)`, in `[0, 1]`.
///
/// Returns exactly 1 when the joint factorizes within [`MASS_TOLERANCE`].
pub fn responsibility(joint: &JointPmf2x2) -> Result<f64> {
    let bundle = entropy_bundle(joint);
    if bundle.h_x <= 0.0 {
        return Err(Error::DegenerateHumanDistribution);
    }
    if joint.max_dependence() < MASS_TOLERANCE {
        return Ok(1.0);
    }
    Ok((bundle.h_x_given_y / bundle.h_x).clamp(0.0, 1.0))
}

//! Hit counts, confidence radii, width estimates and the selection index.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::boxes::{CandidatePair, PairIndex, SubBoxKey};
use crate::error::{Error, Result};

/// Error rate, quality, and the constants derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConstants {
    pub epsilon: f64,
    pub gamma: f64,
    pub tau: f64,
    pub nu: f64,
    pub p: usize,
    pub q: usize,
}

impl EngineConstants {
    pub fn new(epsilon: f64, gamma: f64, p: usize, q: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "error rate {epsilon} must lie in (0, 1)"
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quality {gamma} must lie in (0, 1)"
            )));
        }
        if p == 0 || q < 2 {
            return Err(Error::InvalidParameter(format!(
                "need p >= 1 and q >= 2, got p={p}, q={q}"
            )));
        }
        Ok(Self {
            epsilon,
            gamma,
            tau: 4.0 / epsilon,
            nu: 8.0 * (2.0 / gamma).sqrt(),
            p,
            q,
        })
    }

    /// Quality `1 / ln T`, for runs that fix the horizon but not the quality.
    pub fn quality_free(epsilon: f64, horizon: usize, p: usize, q: usize) -> Result<Self> {
        if horizon < 3 {
            return Err(Error::InvalidParameter(format!(
                "quality-free mode needs a horizon of at least 3, got {horizon}"
            )));
        }
        Self::new(epsilon, 1.0 / (horizon as f64).ln(), p, q)
    }

    /// `1 + 2 p ν`, the multiplier of the radius in the index.
    pub fn index_multiplier(&self) -> f64 {
        1.0 + 2.0 * self.p as f64 * self.nu
    }
}

/// Hit count and reward total of one cell.
///
/// The total is kept with Neumaier compensation so long runs keep their means
/// accurate to a few ulps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub hits: u64,
    sum: f64,
    compensation: f64,
}

impl CellStats {
    pub fn from_rewards(rewards: impl IntoIterator<Item = f64>) -> Self {
        let mut s = Self::default();
        for r in rewards {
            s.add(r);
        }
        s
    }

    pub fn add(&mut self, reward: f64) {
        let t = self.sum + reward;
        if self.sum.abs() >= reward.abs() {
            self.compensation += (self.sum - t) + reward;
        } else {
            self.compensation += (reward - t) + self.sum;
        }
        self.sum = t;
        self.hits += 1;
    }

    pub fn reward_sum(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn mean(&self) -> Option<f64> {
        (self.hits > 0).then(|| self.reward_sum() / self.hits as f64)
    }
}

/// `2 sqrt((ln ρ + ln(τ + n)) / n)`, or `+∞` for an unhit cell.
pub fn confidence_radius(n: u64, log_rho: f64, tau: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    2.0 * ((log_rho + (tau + n).ln()) / n).sqrt()
}

/// Lower and upper mean bounds; deliberately not clipped to `[0, 1]`.
pub fn mean_bounds(stats: &CellStats, r: f64) -> Result<(f64, f64)> {
    let mean = stats.mean().ok_or(Error::UndefinedStats)?;
    Ok((mean - r, mean + r))
}

/// Result of maximising `lower(C1) - upper(C2)` over the candidate pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub axis: Option<usize>,
    /// Position of the maximising pair in the pair list.
    pub pair: Option<usize>,
}

impl WidthEstimate {
    pub const EMPTY: WidthEstimate = WidthEstimate {
        value: f64::NEG_INFINITY,
        axis: None,
        pair: None,
    };
}

/// Width estimate over pairs given by index into per-cell arrays.
///
/// Pairs touching an unhit cell contribute `-∞`. The first maximising pair in
/// list order wins ties.
pub fn width_estimate_indexed(
    pairs: &[PairIndex],
    stats: &[CellStats],
    radii: &[f64],
) -> WidthEstimate {
    let mut best = WidthEstimate::EMPTY;
    for (i, pair) in pairs.iter().enumerate() {
        let (a, b) = (&stats[pair.first], &stats[pair.second]);
        let (Some(ma), Some(mb)) = (a.mean(), b.mean()) else {
            continue;
        };
        let value = (ma - radii[pair.first]) - (mb + radii[pair.second]);
        if value > best.value {
            best = WidthEstimate {
                value,
                axis: Some(pair.axis),
                pair: Some(i),
            };
        }
    }
    best
}

/// Key-based width estimate; returns the value, the maximising axis, and the
/// maximising pair.
pub fn width_estimate(
    pairs: &[CandidatePair],
    stats: &HashMap<SubBoxKey, CellStats>,
    radii: &HashMap<SubBoxKey, f64>,
) -> (f64, Option<usize>, Option<CandidatePair>) {
    let mut best = (f64::NEG_INFINITY, None, None);
    for pair in pairs {
        let lookup = |k: &SubBoxKey| {
            let s = stats.get(k)?;
            let m = s.mean()?;
            Some((m, radii.get(k).copied().unwrap_or(f64::INFINITY)))
        };
        let (Some((ma, ra)), Some((mb, rb))) = (lookup(&pair.first), lookup(&pair.second)) else {
            continue;
        };
        let value = (ma - ra) - (mb + rb);
        if value > best.0 {
            best = (value, Some(pair.axis), Some(pair.clone()));
        }
    }
    best
}

/// `μ + (1 + 2pν) r`, or `+∞` for an unhit cell.
pub fn index(stats: &CellStats, r: f64, constants: &EngineConstants) -> f64 {
    match stats.mean() {
        None => f64::INFINITY,
        Some(m) if r == 0.0 => m,
        Some(m) => m + constants.index_multiplier() * r,
    }
}

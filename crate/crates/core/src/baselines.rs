//! Non-adaptive comparison strategies: UCB1 on a fixed grid, and uniform sampling.

use std::time::Instant;

use rand::Rng;

use crate::engine::{regret_row, RunRecord};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::tree::{ArmPoint, CoordinateTree, NodeId};

/// Smallest `K` with `K³ >= T`.
pub fn choose_grid_size(horizon: usize) -> usize {
    let mut k = (horizon as f64).cbrt().round() as usize;
    while k > 1 && (k - 1).pow(3) >= horizon {
        k -= 1;
    }
    while k.pow(3) < horizon {
        k += 1;
    }
    k.max(1)
}

/// Cells per axis of a `K`-cell grid on `[0, 1]^p`, when `K` is a `p`-th power.
pub fn grid_side(k: usize, p: usize) -> Option<usize> {
    let m = (k as f64).powf(1.0 / p as f64).round() as usize;
    (m.max(1) - 1..=m + 1).find(|&s| s >= 1 && s.checked_pow(p as u32) == Some(k))
}

/// Smallest `p`-th power at least `k`.
pub fn round_up_to_power(k: usize, p: usize) -> usize {
    let mut m = (k as f64).powf(1.0 / p as f64).floor().max(1.0) as usize;
    while m.pow(p as u32) < k {
        m += 1;
    }
    m.pow(p as u32)
}

/// Cell midpoints of the `K`-cell grid, in row-major order (last axis fastest).
pub fn grid_centers(k: usize, p: usize) -> Result<Vec<ArmPoint>> {
    let m = grid_side(k, p).ok_or_else(|| {
        Error::InvalidParameter(format!("{k} arms do not form an equal grid in {p} dimensions"))
    })?;
    let mut out = Vec::with_capacity(k);
    for idx in 0..k {
        let mut rest = idx;
        let mut x = vec![0.0; p];
        for xi in x.iter_mut().rev() {
            *xi = ((rest % m) as f64 + 0.5) / m as f64;
            rest /= m;
        }
        out.push(ArmPoint::real(&x));
    }
    Ok(out)
}

fn check_continuum(env: &Environment) -> Result<()> {
    env.reward
        .check_trees(&vec![CoordinateTree::Dyadic; env.dim()])
        .map_err(|_| Error::UnsupportedEnvironment(format!(
            "grid baselines need a continuum arm space, not {}",
            env.reward.family()
        )))
}

/// Classic UCB1 over the grid centres, with index `mean + sqrt(2 ln t / n)`.
///
/// Each arm is played once in order first; ties go to the lowest arm index.
/// Regret is measured against the continuum supremum.
pub fn ucb1_run<R: Rng + ?Sized>(
    env: &Environment,
    k: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<RunRecord> {
    if k == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("K and T must be at least 1".into()));
    }
    check_continuum(env)?;
    let arms = grid_centers(k, env.dim())?;
    let best_center = arms.iter().map(|a| env.mean(a)).fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0u64; k];
    let mut sums = vec![0.0f64; k];
    let mut rows = Vec::with_capacity(horizon);
    let mut step_nanos = Vec::with_capacity(horizon);
    let mut cum = 0.0;
    for t in 1..=horizon {
        let start = Instant::now();
        let (arm, bonus) = if t <= k {
            (t - 1, f64::INFINITY)
        } else {
            let log_t = (t as f64).ln();
            let mut best = (0, f64::NEG_INFINITY, 0.0);
            for i in 0..k {
                let n = counts[i] as f64;
                let bonus = (2.0 * log_t / n).sqrt();
                let value = sums[i] / n + bonus;
                if value > best.1 {
                    best = (i, value, bonus);
                }
            }
            (best.0, best.2)
        };
        let reward = env.sample(&arms[arm], rng);
        counts[arm] += 1;
        sums[arm] += reward;
        step_nanos.push(start.elapsed().as_nanos() as u64);
        let row = regret_row(env, cum, t, format!("k{arm}"), arms[arm].clone(), reward, bonus);
        cum = row.cum_regret;
        rows.push(row);
    }
    // recommend the most played arm
    let (most, _) = counts
        .iter()
        .enumerate()
        .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    let recommendation = arms[most].clone();
    let t_star = rows
        .iter()
        .rposition(|r| r.box_serial == format!("k{most}"))
        .map_or(horizon, |i| i + 1);
    Ok(RunRecord {
        mu_star: env.max_value(),
        recommendation_mean: env.mean(&recommendation),
        recommendation,
        t_star,
        activations: k,
        splits: 0,
        max_active: k,
        approximation_gap: env.max_value() - best_center,
        step_nanos,
        rows,
    })
}

/// Arms drawn independently from `π`; recommends the last arm.
pub fn uniform_random_run<R: Rng + ?Sized>(
    env: &Environment,
    trees: &[CoordinateTree],
    horizon: usize,
    rng: &mut R,
) -> Result<RunRecord> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    env.reward.check_trees(trees)?;
    let root = NodeId::root();
    let mut rows = Vec::with_capacity(horizon);
    let mut step_nanos = Vec::with_capacity(horizon);
    let mut cum = 0.0;
    for t in 1..=horizon {
        let start = Instant::now();
        let coords = trees
            .iter()
            .map(|tree| tree.sample_in_node(&root, rng))
            .collect::<Result<Vec<_>>>()?;
        let arm = ArmPoint::new(coords);
        let reward = env.sample(&arm, rng);
        step_nanos.push(start.elapsed().as_nanos() as u64);
        let row = regret_row(env, cum, t, String::new(), arm, reward, f64::INFINITY);
        cum = row.cum_regret;
        rows.push(row);
    }
    let recommendation = rows[horizon - 1].arm.clone();
    Ok(RunRecord {
        mu_star: env.max_value(),
        recommendation_mean: env.mean(&recommendation),
        recommendation,
        t_star: horizon,
        activations: 1,
        splits: 0,
        max_active: 1,
        approximation_gap: 0.0,
        step_nanos,
        rows,
    })
}

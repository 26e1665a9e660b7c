//! Reward functions, noise models, and the exact box-mean oracle.
//!
//! Continuum families live on `[0, 1]^p` with range `[0, 1]` and a known
//! maximum. Families that are classically written on `[-1, 1]` with a maximum
//! of `0` are mapped through `u = 2x - 1` on the domain and an affine map on
//! the range; neither map changes where the maxima are or how regret ranks
//! strategies.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::boxes::ArmBox;
use crate::error::{Error, Result};
use crate::tree::{dyadic_interval, ArmPoint, Coord, CoordinateTree, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathologicalKind {
    /// `1 / log(u² / 2)`: a sharp peak.
    LogPeak,
    /// `-exp(-1 / u²)`: a very flat peak.
    ExpFlat,
    /// `-|u|` on the left, `-u²` on the right.
    MixedExponent,
}

/// Serialisable description of a reward function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RewardSpec {
    /// `1 - Σ c_i |2(x_i - x*_i)|^α_i / M`.
    Power {
        alphas: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coeffs: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_star: Option<Vec<f64>>,
    },
    /// `1 - ‖A (x - x*)‖^α / M`.
    Elliptical {
        matrix: Vec<Vec<f64>>,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_star: Option<Vec<f64>>,
    },
    Pathological { kind: PathologicalKind },
    /// Nested-plateau hard instance on the first axis.
    Adversarial {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<u32>,
        arm: u64,
        horizon: u64,
        #[serde(default = "one")]
        p: usize,
    },
    Constant {
        value: f64,
        #[serde(default = "one")]
        p: usize,
    },
    /// `μ(x) = x_axis`.
    Linear {
        #[serde(default = "one")]
        p: usize,
        #[serde(default)]
        axis: usize,
    },
    /// Means per leaf of a single finite coordinate tree, keyed by dotted path.
    LeafTable { values: BTreeMap<String, f64> },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Power {
        alphas: Vec<f64>,
        coeffs: Vec<f64>,
        x_star: Vec<f64>,
        scale: f64,
    },
    Elliptical {
        matrix: Vec<Vec<f64>>,
        alpha: f64,
        x_star: Vec<f64>,
        scale: f64,
    },
    Pathological(PathologicalKind),
    Adversarial {
        alpha: f64,
        level: u32,
        arm_bits: Vec<bool>,
        p: usize,
    },
    Constant {
        value: f64,
        p: usize,
    },
    Linear {
        p: usize,
        axis: usize,
    },
    LeafTable {
        values: BTreeMap<NodeId, f64>,
    },
}

/// A reward function `μ` with its disclosed supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardFunction {
    spec: RewardSpec,
    shape: Shape,
}

/// Exact or estimated mean of `μ` over a box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub value: f64,
    /// Zero for closed forms and quadrature; Monte-Carlo standard error otherwise.
    pub std_error: f64,
    pub exact: bool,
}

fn check_unit(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| (0.0..=1.0).contains(x)) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1]")))
    }
}

/// Power-law maximum, written on the `[-1, 1]` scale and mapped onto `[0, 1]^p`.
pub fn make_power(
    alphas: &[f64],
    coeffs: Option<&[f64]>,
    x_star: Option<&[f64]>,
) -> Result<RewardFunction> {
    RewardFunction::from_spec(RewardSpec::Power {
        alphas: alphas.to_vec(),
        coeffs: coeffs.map(<[f64]>::to_vec),
        x_star: x_star.map(<[f64]>::to_vec),
    })
}

pub fn make_elliptical(
    matrix: Vec<Vec<f64>>,
    alpha: f64,
    x_star: Option<&[f64]>,
) -> Result<RewardFunction> {
    RewardFunction::from_spec(RewardSpec::Elliptical {
        matrix,
        alpha,
        x_star: x_star.map(<[f64]>::to_vec),
    })
}

pub fn make_pathological(kind: PathologicalKind) -> RewardFunction {
    RewardFunction {
        spec: RewardSpec::Pathological { kind },
        shape: Shape::Pathological(kind),
    }
}

/// Smallest level `l` with `2^(l (1 + 2/β)) >= 4T`; `1` when `β = 0`.
pub fn adversarial_level(beta: f64, horizon: u64) -> u32 {
    if beta <= 0.0 {
        return 1;
    }
    let target = (4.0 * horizon as f64).log2();
    let per_level = 1.0 + 2.0 / beta;
    let mut l = 1;
    while (l as f64) * per_level < target {
        l += 1;
    }
    l
}

pub fn make_adversarial(beta: f64, level: u32, arm: u64, horizon: u64) -> Result<RewardFunction> {
    RewardFunction::from_spec(RewardSpec::Adversarial {
        beta,
        level: Some(level),
        arm,
        horizon,
        p: 1,
    })
}

/// Nested-plateau indicator sets on the first dyadic axis: `U_{0,1}` is the
/// whole axis, and the two sets below `U_{i,j}` are the left children of its
/// two children. So `U_{i,j}` has path `(b1, 0, b2, 0, …, bi, 0)` where
/// `b1 … bi` is `j - 1` in binary.
pub fn adversarial_node(level: u32, j: u64) -> NodeId {
    let mut path = Vec::with_capacity(2 * level as usize);
    for bit in (0..level).rev() {
        path.push(((j - 1) >> bit) as u32 & 1);
        path.push(0);
    }
    NodeId::from_path(path)
}

impl RewardFunction {
    pub fn from_spec(spec: RewardSpec) -> Result<Self> {
        let shape = match &spec {
            RewardSpec::Power {
                alphas,
                coeffs,
                x_star,
            } => {
                let p = alphas.len();
                if p == 0 {
                    return Err(Error::InvalidParameter("power family needs p >= 1".into()));
                }
                let coeffs = coeffs.clone().unwrap_or_else(|| vec![1.0; p]);
                let x_star = x_star.clone().unwrap_or_else(|| vec![0.5; p]);
                if coeffs.len() != p || x_star.len() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: coeffs.len().min(x_star.len()),
                    });
                }
                if alphas.iter().chain(&coeffs).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter(
                        "exponents and coefficients must be positive".into(),
                    ));
                }
                check_unit("x_star", &x_star)?;
                let scale = alphas
                    .iter()
                    .zip(&coeffs)
                    .zip(&x_star)
                    .map(|((a, c), s)| c * (2.0 * s.max(1.0 - s)).powf(*a))
                    .sum();
                Shape::Power {
                    alphas: alphas.clone(),
                    coeffs,
                    x_star,
                    scale,
                }
            }
            RewardSpec::Elliptical {
                matrix,
                alpha,
                x_star,
            } => {
                let p = matrix.len();
                if p == 0 || matrix.iter().any(|row| row.len() != p) {
                    return Err(Error::InvalidParameter("matrix must be square".into()));
                }
                if !is_positive_definite(matrix) {
                    return Err(Error::InvalidParameter(
                        "matrix must be symmetric positive definite".into(),
                    ));
                }
                if !(*alpha > 0.0) {
                    return Err(Error::InvalidParameter("alpha must be positive".into()));
                }
                let x_star = x_star.clone().unwrap_or_else(|| vec![0.5; p]);
                if x_star.len() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        got: x_star.len(),
                    });
                }
                check_unit("x_star", &x_star)?;
                // ‖A(x - x*)‖^α is convex-like along segments, so its maximum
                // over the cube sits on a corner
                let scale = (0..1u64 << p)
                    .map(|mask| {
                        let corner: Vec<f64> =
                            (0..p).map(|i| ((mask >> i) & 1) as f64).collect();
                        elliptical_norm(matrix, &x_star, &corner).powf(*alpha)
                    })
                    .fold(0.0, f64::max);
                Shape::Elliptical {
                    matrix: matrix.clone(),
                    alpha: *alpha,
                    x_star,
                    scale,
                }
            }
            RewardSpec::Pathological { kind } => Shape::Pathological(*kind),
            RewardSpec::Adversarial {
                beta,
                level,
                arm,
                horizon,
                p,
            } => {
                if !(*beta >= 0.0) || *p == 0 {
                    return Err(Error::InvalidParameter(
                        "adversarial family needs beta >= 0 and p >= 1".into(),
                    ));
                }
                let level = level.unwrap_or_else(|| adversarial_level(*beta, *horizon));
                if level == 0 || level > 30 || *arm < 1 || *arm > (1u64 << level) {
                    return Err(Error::InvalidParameter(format!(
                        "invalid adversarial instance (level {level}, arm {arm})"
                    )));
                }
                let alpha = if *beta > 0.0 {
                    2f64.powf(-1.0 / beta)
                } else {
                    if *horizon == 0 {
                        return Err(Error::InvalidParameter("horizon must be positive".into()));
                    }
                    1.0 / (2.0 * *horizon as f64).sqrt()
                };
                let arm_bits = adversarial_node(level, *arm)
                    .path()
                    .iter()
                    .map(|&b| b == 1)
                    .collect();
                Shape::Adversarial {
                    alpha,
                    level,
                    arm_bits,
                    p: *p,
                }
            }
            RewardSpec::Constant { value, p } => {
                if !(0.0..=1.0).contains(value) || *p == 0 {
                    return Err(Error::InvalidParameter(
                        "constant reward must lie in [0, 1] with p >= 1".into(),
                    ));
                }
                Shape::Constant {
                    value: *value,
                    p: *p,
                }
            }
            RewardSpec::Linear { p, axis } => {
                if *axis >= *p {
                    return Err(Error::InvalidParameter(format!(
                        "axis {axis} out of range for p={p}"
                    )));
                }
                Shape::Linear { p: *p, axis: *axis }
            }
            RewardSpec::LeafTable { values } => {
                if values.is_empty() || values.values().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::InvalidParameter(
                        "leaf table needs values in [0, 1]".into(),
                    ));
                }
                let values = values
                    .iter()
                    .map(|(k, v)| Ok((NodeId::parse_dotted(k)?, *v)))
                    .collect::<Result<_>>()?;
                Shape::LeafTable { values }
            }
        };
        Ok(Self { spec, shape })
    }

    pub fn spec(&self) -> &RewardSpec {
        &self.spec
    }

    pub fn family(&self) -> &'static str {
        match self.shape {
            Shape::Power { .. } => "power",
            Shape::Elliptical { .. } => "elliptical",
            Shape::Pathological(_) => "pathological",
            Shape::Adversarial { .. } => "adversarial",
            Shape::Constant { .. } => "constant",
            Shape::Linear { .. } => "linear",
            Shape::LeafTable { .. } => "leaf-table",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Power { alphas, .. } => alphas.len(),
            Shape::Elliptical { matrix, .. } => matrix.len(),
            Shape::Pathological(_) | Shape::LeafTable { .. } => 1,
            Shape::Adversarial { p, .. } | Shape::Constant { p, .. } | Shape::Linear { p, .. } => {
                *p
            }
        }
    }

    /// The disclosed supremum `μ*`.
    pub fn max_value(&self) -> f64 {
        match &self.shape {
            Shape::Adversarial { .. } => 2.0 / 3.0,
            Shape::Constant { value, .. } => *value,
            Shape::LeafTable { values } => values.values().copied().fold(0.0, f64::max),
            _ => 1.0,
        }
    }

    /// Infimum over the arm space, where known in closed form.
    pub fn min_value(&self) -> f64 {
        match &self.shape {
            Shape::Adversarial { alpha, .. } => (2.0 - alpha) / 3.0,
            Shape::Constant { value, .. } => *value,
            Shape::LeafTable { values } => values.values().copied().fold(1.0, f64::min),
            _ => 0.0,
        }
    }

    /// Points where `μ*` is attained.
    pub fn maximisers(&self) -> Vec<ArmPoint> {
        match &self.shape {
            Shape::Power { x_star, .. } | Shape::Elliptical { x_star, .. } => {
                vec![ArmPoint::real(x_star)]
            }
            Shape::Pathological(_) => vec![ArmPoint::real(&[0.5])],
            Shape::Adversarial { arm_bits, p, .. } => {
                let node = NodeId::from_path(arm_bits.iter().map(|&b| b as u32).collect());
                let (lo, hi) = dyadic_interval(&node);
                let mut x = vec![0.5; *p];
                x[0] = 0.5 * (lo + hi);
                vec![ArmPoint::real(&x)]
            }
            Shape::Constant { p, .. } => vec![ArmPoint::real(&vec![0.5; *p])],
            Shape::Linear { p, axis } => {
                let mut x = vec![0.5; *p];
                x[*axis] = 1.0;
                vec![ArmPoint::real(&x)]
            }
            Shape::LeafTable { values } => {
                let best = self.max_value();
                values
                    .iter()
                    .filter(|(_, v)| **v == best)
                    .map(|(k, _)| ArmPoint::new(vec![Coord::Leaf(k.clone())]))
                    .collect()
            }
        }
    }

    /// Checks the function is defined on the arm space built from `trees`.
    pub fn check_trees(&self, trees: &[CoordinateTree]) -> Result<()> {
        if trees.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: trees.len(),
            });
        }
        match &self.shape {
            Shape::LeafTable { values } => {
                let CoordinateTree::Finite(t) = &trees[0] else {
                    return Err(Error::UnsupportedEnvironment(
                        "leaf table needs a finite coordinate tree".into(),
                    ));
                };
                for leaf in t.leaves() {
                    if !values.contains_key(&leaf) {
                        return Err(Error::InvalidParameter(format!(
                            "leaf `{leaf}` has no value"
                        )));
                    }
                }
                Ok(())
            }
            _ if trees.iter().all(CoordinateTree::is_dyadic) => Ok(()),
            _ => Err(Error::UnsupportedEnvironment(format!(
                "{} family needs dyadic axes",
                self.family()
            ))),
        }
    }

    /// Evaluates `μ(x)`. Coordinates of the wrong kind evaluate to NaN.
    pub fn eval(&self, x: &ArmPoint) -> f64 {
        if let Shape::LeafTable { values } = &self.shape {
            return x
                .coords
                .first()
                .and_then(Coord::as_leaf)
                .and_then(|leaf| values.get(leaf))
                .copied()
                .unwrap_or(f64::NAN);
        }
        match x.reals() {
            Some(xs) if xs.len() == self.dim() => self.eval_real(&xs),
            _ => f64::NAN,
        }
    }

    pub fn eval_real(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Power {
                alphas,
                coeffs,
                x_star,
                scale,
            } => {
                let s: f64 = x
                    .iter()
                    .zip(alphas)
                    .zip(coeffs)
                    .zip(x_star)
                    .map(|(((xi, a), c), s)| c * (2.0 * (xi - s)).abs().powf(*a))
                    .sum();
                1.0 - s / scale
            }
            Shape::Elliptical {
                matrix,
                alpha,
                x_star,
                scale,
            } => 1.0 - elliptical_norm(matrix, x_star, x).powf(*alpha) / scale,
            Shape::Pathological(kind) => pathological(*kind, 2.0 * x[0] - 1.0),
            Shape::Adversarial {
                alpha,
                level,
                arm_bits,
                ..
            } => {
                let bits = dyadic_bits(x[0], 2 * *level as usize);
                let mut total = 1.0;
                let mut weight = 1.0 - alpha;
                for i in 0..*level as usize {
                    // x in some U_{i,j}: every second bit up to depth 2i is zero
                    if (0..i).all(|m| !bits[2 * m + 1]) {
                        total += weight;
                    }
                    weight *= alpha;
                }
                if bits == *arm_bits {
                    total += alpha.powi(*level as i32);
                }
                total / 3.0
            }
            Shape::Constant { value, .. } => *value,
            Shape::Linear { axis, .. } => x[*axis],
            Shape::LeafTable { .. } => f64::NAN,
        }
    }

    /// `E_π[μ(x) | x ∈ B]`.
    pub fn mean_on_box(&self, b: &ArmBox, trees: &[CoordinateTree]) -> Result<MeanEstimate> {
        self.check_trees(trees)?;
        b.validate(trees)?;
        let exact = |value| MeanEstimate {
            value,
            std_error: 0.0,
            exact: true,
        };
        let intervals: Vec<(f64, f64)> = b.nodes().iter().map(dyadic_interval).collect();
        match &self.shape {
            Shape::Power {
                alphas,
                coeffs,
                x_star,
                scale,
            } => {
                let s: f64 = intervals
                    .iter()
                    .zip(alphas)
                    .zip(coeffs)
                    .zip(x_star)
                    .map(|((((lo, hi), a), c), s)| c * power_interval_mean(*lo, *hi, *s, *a))
                    .sum();
                Ok(exact(1.0 - s / scale))
            }
            Shape::Adversarial {
                alpha,
                level,
                arm_bits,
                ..
            } => {
                let path = b.node(0).path();
                let bit = |pos: usize| path.get(pos).map(|&b| b == 1);
                let mut total = 1.0;
                let mut weight = 1.0 - alpha;
                for i in 0..*level as usize {
                    // constrained positions are the odd indices below 2i
                    let mut frac = 1.0;
                    for m in 0..i {
                        match bit(2 * m + 1) {
                            Some(true) => frac = 0.0,
                            Some(false) => {}
                            None => frac *= 0.5,
                        }
                    }
                    total += weight * frac;
                    weight *= alpha;
                }
                let mut frac = 1.0;
                for (pos, want) in arm_bits.iter().enumerate() {
                    match bit(pos) {
                        Some(b) if b != *want => frac = 0.0,
                        Some(_) => {}
                        None => frac *= 0.5,
                    }
                }
                total += alpha.powi(*level as i32) * frac;
                Ok(exact(total / 3.0))
            }
            Shape::Constant { value, .. } => Ok(exact(*value)),
            Shape::Linear { axis, .. } => {
                let (lo, hi) = intervals[*axis];
                Ok(exact(0.5 * (lo + hi)))
            }
            Shape::LeafTable { values } => {
                Ok(exact(leaf_mean(&trees[0], b.node(0), values)?))
            }
            Shape::Elliptical { x_star, .. } => Ok(self.quadrature_mean(&intervals, x_star)),
            Shape::Pathological(_) => Ok(self.quadrature_mean(&intervals, &[0.5])),
        }
    }

    /// Nested adaptive Simpson for `p <= 3`, Monte-Carlo above.
    fn quadrature_mean(&self, intervals: &[(f64, f64)], kinks: &[f64]) -> MeanEstimate {
        let p = intervals.len();
        if p <= 3 {
            let mut point = vec![0.0; p];
            let integral = nested_integral(self, intervals, kinks, 0, &mut point);
            let volume: f64 = intervals.iter().map(|(lo, hi)| hi - lo).product();
            return MeanEstimate {
                value: integral / volume,
                std_error: 0.0,
                exact: true,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut x = vec![0.0; p];
        for _ in 0..n {
            for (xi, (lo, hi)) in x.iter_mut().zip(intervals) {
                *xi = lo + rng.gen::<f64>() * (hi - lo);
            }
            let v = self.eval_real(&x);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        MeanEstimate {
            value: mean,
            std_error: (var / n as f64).sqrt(),
            exact: false,
        }
    }
}

fn pathological(kind: PathologicalKind, u: f64) -> f64 {
    match kind {
        PathologicalKind::LogPeak => {
            if u == 0.0 {
                1.0
            } else {
                1.0 + std::f64::consts::LN_2 / (0.5 * u * u).ln()
            }
        }
        PathologicalKind::ExpFlat => {
            if u == 0.0 {
                1.0
            } else {
                1.0 - std::f64::consts::E * (-1.0 / (u * u)).exp()
            }
        }
        PathologicalKind::MixedExponent => {
            if u <= 0.0 {
                1.0 + u
            } else {
                1.0 - u * u
            }
        }
    }
}

/// First `n` binary digits of `x ∈ [0, 1]`; `1` is read as `0.111…`.
fn dyadic_bits(x: f64, n: usize) -> Vec<bool> {
    if x >= 1.0 {
        return vec![true; n];
    }
    let mut y = x.max(0.0);
    (0..n)
        .map(|_| {
            y *= 2.0;
            if y >= 1.0 {
                y -= 1.0;
                true
            } else {
                false
            }
        })
        .collect()
}

/// Mean of `|2(x - c)|^α` over `[lo, hi]`.
fn power_interval_mean(lo: f64, hi: f64, c: f64, alpha: f64) -> f64 {
    let antiderivative = |x: f64| {
        let d = x - c;
        d.signum() * (2.0 * d.abs()).powf(alpha + 1.0) / (2.0 * (alpha + 1.0))
    };
    (antiderivative(hi) - antiderivative(lo)) / (hi - lo)
}

fn elliptical_norm(matrix: &[Vec<f64>], x_star: &[f64], x: &[f64]) -> f64 {
    matrix
        .iter()
        .map(|row| {
            row.iter()
                .zip(x.iter().zip(x_star))
                .map(|(a, (xi, si))| a * (xi - si))
                .sum::<f64>()
                .powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn is_positive_definite(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * (1.0 + m[i][j].abs()) {
                return false;
            }
        }
    }
    // Cholesky: fails iff some pivot is not positive
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

fn leaf_mean(tree: &CoordinateTree, node: &NodeId, values: &BTreeMap<NodeId, f64>) -> Result<f64> {
    let kids = tree.children(node)?;
    if kids.is_empty() {
        return values.get(node).copied().ok_or(Error::UnknownNode {
            node: node.dotted(),
        });
    }
    let n = kids.len() as f64;
    let mut total = 0.0;
    for k in &kids {
        total += leaf_mean(tree, k, values)?;
    }
    Ok(total / n)
}

const SIMPSON_TOL: f64 = 1e-9;
const SIMPSON_MAX_DEPTH: u32 = 40;

fn adaptive_simpson(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

/// Integral over a box, splitting each axis at its kink when it falls inside.
fn nested_integral(
    f: &RewardFunction,
    intervals: &[(f64, f64)],
    kinks: &[f64],
    axis: usize,
    point: &mut Vec<f64>,
) -> f64 {
    let (lo, hi) = intervals[axis];
    let kink = kinks.get(axis).copied().filter(|k| *k > lo && *k < hi);
    let pieces: Vec<(f64, f64)> = match kink {
        Some(k) => vec![(lo, k), (k, hi)],
        None => vec![(lo, hi)],
    };
    let width: f64 = intervals[axis + 1..].iter().map(|(a, b)| b - a).product();
    let tol = SIMPSON_TOL * (hi - lo) * width;
    let last = axis + 1 == intervals.len();
    let mut total = 0.0;
    for (a, b) in pieces {
        let mut g = |x: f64| {
            point[axis] = x;
            if last {
                f.eval_real(point)
            } else {
                let mut inner = point.clone();
                nested_integral(f, intervals, kinks, axis + 1, &mut inner)
            }
        };
        total += adaptive_simpson(&mut g, a, b, tol);
    }
    total
}

/// Observation noise around `μ(x)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    Deterministic,
    #[default]
    Bernoulli,
    /// `clip(μ + N(0, σ²), 0, 1)`; biased near the boundary of `[0, 1]`.
    TruncatedGaussian { sigma: f64 },
}

impl NoiseModel {
    /// Whether the conditional mean of the reward equals `μ(x)`.
    pub fn is_unbiased(&self) -> bool {
        !matches!(self, NoiseModel::TruncatedGaussian { .. })
    }
}

pub fn sample_reward<R: Rng + ?Sized>(
    f: &RewardFunction,
    noise: &NoiseModel,
    x: &ArmPoint,
    rng: &mut R,
) -> f64 {
    let mu = f.eval(x);
    match noise {
        NoiseModel::Deterministic => mu,
        NoiseModel::Bernoulli => {
            if rng.gen::<f64>() < mu {
                1.0
            } else {
                0.0
            }
        }
        NoiseModel::TruncatedGaussian { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            (mu + sigma * z).clamp(0.0, 1.0)
        }
    }
}

/// A reward function paired with its noise model.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub reward: RewardFunction,
    pub noise: NoiseModel,
}

/// Serialisable environment: the reward spec fields plus `"noise"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    #[serde(flatten)]
    pub reward: RewardSpec,
    #[serde(default)]
    pub noise: NoiseModel,
}

impl Environment {
    pub fn new(reward: RewardFunction, noise: NoiseModel) -> Result<Self> {
        if matches!(reward.shape, Shape::Adversarial { .. }) && noise != NoiseModel::Bernoulli {
            return Err(Error::InvalidParameter(
                "adversarial instances require Bernoulli noise".into(),
            ));
        }
        if let NoiseModel::TruncatedGaussian { sigma } = noise {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter("sigma must be positive".into()));
            }
        }
        Ok(Self { reward, noise })
    }

    pub fn from_spec(spec: &EnvSpec) -> Result<Self> {
        Self::new(RewardFunction::from_spec(spec.reward.clone())?, spec.noise)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: EnvSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec {
            reward: self.reward.spec.clone(),
            noise: self.noise,
        }
    }

    /// Shorthand environments: `quadratic`, `quartic` and `mixed` (quadratic on
    /// the first axis, quartic on the second), `linear`, `constant`, and the
    /// pathological kinds.
    pub fn named(name: &str, p: usize, noise: NoiseModel) -> Result<Self> {
        let reward = match name {
            "quadratic" => make_power(&vec![2.0; p], None, None)?,
            "quartic" => make_power(&vec![4.0; p], None, None)?,
            "mixed" => {
                if p != 2 {
                    return Err(Error::InvalidParameter("mixed needs p = 2".into()));
                }
                make_power(&[2.0, 4.0], None, None)?
            }
            "linear" => RewardFunction::from_spec(RewardSpec::Linear { p, axis: 0 })?,
            "constant" => RewardFunction::from_spec(RewardSpec::Constant { value: 0.5, p })?,
            "log-peak" => make_pathological(PathologicalKind::LogPeak),
            "exp-flat" => make_pathological(PathologicalKind::ExpFlat),
            "mixed-exponent" => make_pathological(PathologicalKind::MixedExponent),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown environment `{other}`"
                )))
            }
        };
        Self::new(reward, noise)
    }

    pub fn dim(&self) -> usize {
        self.reward.dim()
    }

    pub fn max_value(&self) -> f64 {
        self.reward.max_value()
    }

    pub fn mean(&self, x: &ArmPoint) -> f64 {
        self.reward.eval(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: &ArmPoint, rng: &mut R) -> f64 {
        sample_reward(&self.reward, &self.noise, x, rng)
    }

    /// Whether exact box means are available and rewards are unbiased, as the
    /// clean-execution check requires.
    pub fn supports_exact_oracle(&self) -> Result<()> {
        if !self.noise.is_unbiased() {
            return Err(Error::UnsupportedEnvironment(
                "truncated-gaussian noise biases the conditional mean".into(),
            ));
        }
        if matches!(self.reward.shape, Shape::Elliptical { .. }) && self.dim() > 3 {
            return Err(Error::UnsupportedEnvironment(
                "box means above p = 3 are Monte-Carlo estimates".into(),
            ));
        }
        Ok(())
    }
}

/// Ratio estimates for one neighbourhood scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub epsilon: f64,
    /// Largest ratio found over the probed neighbourhood family.
    pub ratio: f64,
    /// Ratio on `[x* - ε²/2, x* + (ε - ε²)/2]`, the image of the classical
    /// counterexample window `[-ε², ε - ε²]` under `x = (u + 1) / 2`.
    pub witness_ratio: f64,
}

const PROBE_SPLITS: [f64; 7] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];

/// Dense-grid estimate of the zooming-continuity quotient around `x_star`:
/// the largest change of `f` between points within relative distance `ε` of
/// each other in `U`, over the largest drop of `f` from `f(x*)` within `U`.
///
/// A finite family of neighbourhoods is probed, so results are evidence rather
/// than proof.
pub fn zooming_ratio_probe(
    f: &RewardFunction,
    x_star: &[f64],
    eps_schedule: &[f64],
) -> Result<Vec<ProbePoint>> {
    let p = f.dim();
    if x_star.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x_star.len(),
        });
    }
    check_unit("x_star", x_star)?;
    let mut out = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {eps} out of (0, 1)")));
        }
        let axis_width = eps / (p as f64).sqrt();
        let mut best = 0.0f64;
        for scale in [1.0, 0.5] {
            for &a in PROBE_SPLITS.iter().chain([eps].iter()) {
                let bounds: Vec<(f64, f64)> = x_star
                    .iter()
                    .map(|&s| {
                        let w = scale * axis_width;
                        ((s - a * w).max(0.0), (s + (1.0 - a) * w).min(1.0))
                    })
                    .collect();
                if let Some(r) = neighbourhood_ratio(f, x_star, &bounds, eps, &[]) {
                    best = best.max(r);
                }
            }
        }
        let witness_bounds: Vec<(f64, f64)> = x_star
            .iter()
            .map(|&s| {
                let k = 1.0 / (p as f64).sqrt();
                (
                    (s - k * eps * eps / 2.0).max(0.0),
                    (s + k * (eps - eps * eps) / 2.0).min(1.0),
                )
            })
            .collect();
        let extra: Vec<f64> = x_star
            .iter()
            .map(|&s| s + (eps - 2.0 * eps * eps) / 2.0 / (p as f64).sqrt())
            .collect();
        let witness = neighbourhood_ratio(f, x_star, &witness_bounds, eps, &extra).unwrap_or(0.0);
        out.push(ProbePoint {
            epsilon: eps,
            ratio: best.max(witness),
            witness_ratio: witness,
        });
    }
    Ok(out)
}

/// `f(x*) - f(x)` up to a common positive factor. The flat family is handled
/// in the log domain, where its deficits stay representable as `ε → 0`.
fn scaled_deficits(f: &RewardFunction, x_star: &[f64], points: &[Vec<f64>]) -> Vec<f64> {
    if let Shape::Pathological(PathologicalKind::ExpFlat) = f.shape {
        let log_deficit = |x: &[f64]| {
            let u = 2.0 * x[0] - 1.0;
            if u == 0.0 {
                f64::NEG_INFINITY
            } else {
                1.0 - 1.0 / (u * u)
            }
        };
        let base = log_deficit(x_star);
        let logs: Vec<f64> = points.iter().map(|x| log_deficit(x)).collect();
        let top = logs.iter().copied().chain([base]).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return vec![0.0; points.len()];
        }
        let at_star = (base - top).exp();
        return logs.iter().map(|l| (l - top).exp() - at_star).collect();
    }
    let f_star = f.eval_real(x_star);
    points.iter().map(|x| f_star - f.eval_real(x)).collect()
}

fn neighbourhood_ratio(
    f: &RewardFunction,
    x_star: &[f64],
    bounds: &[(f64, f64)],
    eps: f64,
    extra: &[f64],
) -> Option<f64> {
    let p = bounds.len();
    let diams: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();
    if diams.iter().any(|d| *d <= 0.0) {
        return None;
    }
    let per_axis = if p == 1 {
        1201
    } else {
        ((900f64).powf(1.0 / p as f64) as usize).max(5)
    };
    let axes: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let (lo, hi) = bounds[i];
            let mut g: Vec<f64> = (0..per_axis)
                .map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64)
                .collect();
            g.push(x_star[i]);
            if let Some(&e) = extra.get(i) {
                if e > lo && e < hi {
                    g.push(e);
                }
            }
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    let slack = 1.0 + 1e-9;

    if p == 1 {
        let xs = &axes[0];
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let vals = scaled_deficits(f, x_star, &pts);
        let denom = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if denom <= 0.0 {
            return None;
        }
        let reach = eps * diams[0] * slack;
        let mut num = 0.0f64;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                if xs[j] - xs[i] > reach {
                    break;
                }
                num = num.max((vals[i] - vals[j]).abs());
            }
        }
        return Some(num / denom);
    }

    // product grid, brute-force pairs
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        points = points
            .iter()
            .flat_map(|pt| {
                axis.iter().map(move |&x| {
                    let mut q = pt.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    let vals = scaled_deficits(f, x_star, &points);
    let denom = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if denom <= 0.0 {
        return None;
    }
    let mut num = 0.0f64;
    let limit = (eps * slack).powi(2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .zip(&diams)
                .map(|((a, b), d)| ((a - b) / d).powi(2))
                .sum();
            if d2 <= limit {
                num = num.max((vals[i] - vals[j]).abs());
            }
        }
    }
    Some(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> RewardFunction {
        make_power(&[2.0], None, None).unwrap()
    }

    fn node(path: &[u32]) -> NodeId {
        NodeId::from_path(path.to_vec())
    }

    #[test]
    fn power_examples() {
        let f = quad();
        for x in [0.0, 0.1, 0.3, 0.5, 0.77, 1.0] {
            assert!((f.eval_real(&[x]) - (1.0 - (2.0 * x - 1.0f64).powi(2))).abs() < 1e-15);
        }
        assert_eq!(f.eval_real(&[0.5]), 1.0);
        assert_eq!(f.max_value(), 1.0);

        let g = make_power(&[2.0, 4.0], Some(&[1.0, 1.0]), Some(&[0.5, 0.5])).unwrap();
        for (x, y) in [(0.2, 0.9), (0.5, 0.5), (0.7, 0.1)] {
            let want = 1.0 - ((2.0 * x - 1.0f64).powi(2) + (2.0 * y - 1.0f64).powi(4)) / 2.0;
            assert!((g.eval_real(&[x, y]) - want).abs() < 1e-15);
        }
        assert_eq!(g.eval_real(&[0.0, 0.0]), 0.0);
        assert!(make_power(&[0.0], None, None).is_err());
        assert!(make_power(&[2.0], Some(&[-1.0]), None).is_err());
        assert!(make_power(&[2.0], None, Some(&[1.5])).is_err());
    }

    #[test]
    fn elliptical_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let f = make_elliptical(id, 2.0, Some(&[0.5, 0.5])).unwrap();
        assert_eq!(f.eval_real(&[0.5, 0.5]), 1.0);
        assert!(f.eval_real(&[0.0, 0.0]).abs() < 1e-15);
        match &f.shape {
            Shape::Elliptical { scale, .. } => assert!((scale - 0.5).abs() < 1e-15),
            _ => unreachable!(),
        }
        let g = make_elliptical(vec![vec![1.0, 0.0], vec![0.0, 2.0]], 2.0, None).unwrap();
        let d = 0.05;
        assert!(g.eval_real(&[0.5 + d, 0.5]) > g.eval_real(&[0.5, 0.5 + d]));
        assert!(make_elliptical(vec![vec![1.0, 2.0], vec![2.0, 1.0]], 2.0, None).is_err());
        assert!(make_elliptical(vec![vec![1.0, 0.0], vec![1.0, 1.0]], 2.0, None).is_err());
    }

    #[test]
    fn pathological_examples() {
        let exp = make_pathological(PathologicalKind::ExpFlat);
        assert_eq!(exp.eval_real(&[0.5]), 1.0);
        let log = make_pathological(PathologicalKind::LogPeak);
        assert_eq!(log.eval_real(&[0.5]), 1.0);
        assert!(log.eval_real(&[0.5 + 1e-12]) > 0.95);
        assert!(log.eval_real(&[0.5 + 1e-6]) < log.eval_real(&[0.5 + 1e-12]));
        for kind in [PathologicalKind::LogPeak, PathologicalKind::ExpFlat, PathologicalKind::MixedExponent] {
            let f = make_pathological(kind);
            assert!(f.eval_real(&[0.0]).abs() < 1e-12);
            assert!(f.eval_real(&[1.0]).abs() < 1e-12);
        }
        // left branch is |u|, right branch u²: the left side drops faster near x*
        let mixed = make_pathological(PathologicalKind::MixedExponent);
        let d = 0.01;
        assert!(mixed.eval_real(&[0.5 - d]) - mixed.eval_real(&[0.5 + d]) < 0.0);
        assert!((mixed.eval_real(&[0.5 - d]) - (1.0 - 2.0 * d)).abs() < 1e-12);
        assert!((mixed.eval_real(&[0.5 + d]) - (1.0 - 4.0 * d * d)).abs() < 1e-12);
    }

    #[test]
    fn adversarial_nodes_are_nested() {
        assert_eq!(adversarial_node(1, 1), node(&[0, 0]));
        assert_eq!(adversarial_node(1, 2), node(&[1, 0]));
        assert_eq!(adversarial_node(2, 3), node(&[1, 0, 0, 0]));
        for l in 1..5u32 {
            for j in 1..=(1u64 << l) {
                let parent = adversarial_node(l - 1, (j + 1) / 2);
                assert!(parent.is_prefix_of(&adversarial_node(l, j)));
            }
        }
    }

    /// Evaluates the instance on every depth-`depth` dyadic cell's left end.
    fn cell_values(f: &RewardFunction, depth: u32) -> Vec<f64> {
        (0..1u64 << depth)
            .map(|i| f.eval_real(&[i as f64 / (1u64 << depth) as f64]))
            .collect()
    }

    #[test]
    fn adversarial_level_one() {
        let f = make_adversarial(1.0, 1, 1, 100).unwrap();
        let vals = cell_values(&f, 4);
        let sup = vals.iter().copied().fold(0.0, f64::max);
        let inf = vals.iter().copied().fold(1.0, f64::min);
        assert!((sup - 2.0 / 3.0).abs() < 1e-15);
        assert!((inf - 0.5).abs() < 1e-15);
        // sup attained exactly on U_{1,1} = [0, 1/4)
        for (i, v) in vals.iter().enumerate() {
            assert_eq!((*v - 2.0 / 3.0).abs() < 1e-15, i < 4, "cell {i}");
        }
    }

    #[test]
    fn adversarial_exhaustive_structure() {
        for (l, k) in [(2u32, 3u64), (3, 1), (3, 8), (4, 6)] {
            let f = make_adversarial(1.0, l, k, 1000).unwrap();
            let alpha = 0.5;
            let vals = cell_values(&f, 2 * l + 2);
            let sup = vals.iter().copied().fold(0.0, f64::max);
            let inf = vals.iter().copied().fold(1.0, f64::min);
            assert!((sup - 2.0 / 3.0).abs() < 1e-15);
            assert!((inf - (2.0 - alpha) / 3.0).abs() < 1e-15);
            assert_eq!(f.max_value(), sup);
            assert_eq!(f.min_value(), inf);
            // plateau values: after passing level i the value is
            // (1 + (1 - α)(1 + α + … + α^(i-1))) / 3
            let mut levels: Vec<f64> = (1..=l)
                .map(|i| (2.0 - alpha.powi(i as i32)) / 3.0)
                .collect();
            levels.push(2.0 / 3.0);
            for v in &vals {
                assert!(levels.iter().any(|x| (x - v).abs() < 1e-14), "{v}");
            }
        }
    }

    #[test]
    fn adversarial_instances_differ_only_on_their_arms() {
        let l = 3;
        let a = make_adversarial(1.0, l, 2, 1000).unwrap();
        let b = make_adversarial(1.0, l, 7, 1000).unwrap();
        let (ua, ub) = (adversarial_node(l, 2), adversarial_node(l, 7));
        let t = CoordinateTree::Dyadic;
        for i in 0..(1u64 << (2 * l + 2)) {
            let x = i as f64 / (1u64 << (2 * l + 2)) as f64;
            let c = Coord::Real(x);
            let inside = t.node_contains(&ua, &c) || t.node_contains(&ub, &c);
            assert_eq!(a.eval_real(&[x]) != b.eval_real(&[x]), inside, "x={x}");
        }
    }

    #[test]
    fn adversarial_zero_beta_uses_horizon() {
        let f = make_adversarial(0.0, 1, 2, 50).unwrap();
        match f.shape {
            Shape::Adversarial { alpha, .. } => assert!((alpha - 0.1).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert!(make_adversarial(1.0, 2, 5, 10).is_err());
        assert!(make_adversarial(1.0, 2, 0, 10).is_err());
    }

    #[test]
    fn adversarial_level_rule() {
        assert_eq!(adversarial_level(1.0, 4096), 5);
        assert_eq!(adversarial_level(1.0, 1), 1);
        assert_eq!(adversarial_level(2.0, 4096), 7);
        assert_eq!(adversarial_level(0.0, 4096), 1);
    }

    #[test]
    fn box_means() {
        let trees = [CoordinateTree::Dyadic];
        let lin = RewardFunction::from_spec(RewardSpec::Linear { p: 1, axis: 0 }).unwrap();
        let b = ArmBox::new(vec![node(&[0])]);
        assert_eq!(lin.mean_on_box(&b, &trees).unwrap().value, 0.25);
        let c = RewardFunction::from_spec(RewardSpec::Constant { value: 0.3, p: 1 }).unwrap();
        assert_eq!(c.mean_on_box(&b, &trees).unwrap().value, 0.3);
        let m = quad().mean_on_box(&ArmBox::root(1), &trees).unwrap();
        assert!((m.value - 2.0 / 3.0).abs() < 1e-15);
        assert!(m.exact);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        // the power family has a closed form; compare with the Simpson path by
        // evaluating the same function through an elliptical 1x1 matrix
        let trees = [CoordinateTree::Dyadic];
        let ell = make_elliptical(vec![vec![2.0]], 2.0, Some(&[0.5])).unwrap();
        let pow = quad();
        for path in [vec![], vec![0], vec![1, 0, 1], vec![0, 1, 1, 1, 0]] {
            let b = ArmBox::new(vec![NodeId::from_path(path)]);
            let a = pow.mean_on_box(&b, &trees).unwrap().value;
            let q = ell.mean_on_box(&b, &trees).unwrap().value;
            assert!((a - q).abs() < 1e-9, "{a} vs {q}");
        }
    }

    #[test]
    fn leaf_table_mean() {
        let tree = CoordinateTree::from_json(
            r#"{"arity": 3, "nodes": {"": ["a", "b", "c"], "0": ["x", "y"]}}"#,
        )
        .unwrap();
        let values: BTreeMap<String, f64> = [("0.0", 0.2), ("0.1", 0.4), ("1", 0.9), ("2", 0.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let f = RewardFunction::from_spec(RewardSpec::LeafTable { values }).unwrap();
        let trees = [tree];
        f.check_trees(&trees).unwrap();
        let m = f.mean_on_box(&ArmBox::root(1), &trees).unwrap().value;
        assert!((m - (0.3 + 0.9 + 0.0) / 3.0).abs() < 1e-15);
        assert_eq!(f.max_value(), 0.9);
        assert!(f.check_trees(&[CoordinateTree::Dyadic]).is_err());
    }

    #[test]
    fn noise_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = RewardFunction::from_spec(RewardSpec::Constant { value: 0.3, p: 1 }).unwrap();
        let x = ArmPoint::real(&[0.1]);
        assert_eq!(sample_reward(&c, &NoiseModel::Deterministic, &x, &mut rng), 0.3);
        let one = RewardFunction::from_spec(RewardSpec::Constant { value: 1.0, p: 1 }).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_reward(&one, &NoiseModel::Bernoulli, &x, &mut rng), 1.0);
        }
        let half = RewardFunction::from_spec(RewardSpec::Constant { value: 0.5, p: 1 }).unwrap();
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| sample_reward(&half, &NoiseModel::Bernoulli, &x, &mut rng))
            .sum();
        assert!((total / n as f64 - 0.5).abs() < 0.005);
        let tg = NoiseModel::TruncatedGaussian { sigma: 0.3 };
        for _ in 0..1000 {
            let r = sample_reward(&half, &tg, &x, &mut rng);
            assert!((0.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn adversarial_requires_bernoulli() {
        let f = make_adversarial(1.0, 2, 1, 100).unwrap();
        assert!(Environment::new(f.clone(), NoiseModel::Deterministic).is_err());
        assert!(Environment::new(f, NoiseModel::Bernoulli).is_ok());
    }

    #[test]
    fn env_spec_json() {
        let env = Environment::from_json(
            r#"{"family": "power", "alphas": [2.0, 4.0], "noise": {"kind": "deterministic"}}"#,
        )
        .unwrap();
        assert_eq!(env.dim(), 2);
        assert_eq!(env.noise, NoiseModel::Deterministic);
        let text = serde_json::to_string(&env.spec()).unwrap();
        assert_eq!(Environment::from_json(&text).unwrap(), env);
        let adv = Environment::from_json(
            r#"{"family": "adversarial", "beta": 1.0, "arm": 3, "horizon": 4096}"#,
        )
        .unwrap();
        assert_eq!(adv.noise, NoiseModel::Bernoulli);
        assert!(Environment::from_json(r#"{"family": "nope"}"#).is_err());
    }

    #[test]
    fn probe_quadratic_decreases() {
        let probe = zooming_ratio_probe(&quad(), &[0.5], &[0.3, 0.01]).unwrap();
        assert!(probe[1].ratio < probe[0].ratio);
    }

    #[test]
    fn probe_mixed_exponent_witness_is_one() {
        let f = make_pathological(PathologicalKind::MixedExponent);
        for pt in zooming_ratio_probe(&f, &[0.5], &[0.3, 0.1, 0.03, 0.01]).unwrap() {
            assert!((pt.witness_ratio - 1.0).abs() < 1e-6, "{pt:?}");
        }
    }

    #[test]
    fn probe_exp_flat_witness_near_one() {
        let f = make_pathological(PathologicalKind::ExpFlat);
        let pts = zooming_ratio_probe(&f, &[0.5], &[0.3, 0.1, 0.03, 0.01]).unwrap();
        for pt in pts {
            assert!(pt.witness_ratio > 0.999, "{pt:?}");
        }
    }
}

//! Boxes: products of one tree node per axis.
//!
//! A box is the unit the engine partitions, tracks statistics on, and splits.
//! Sub-boxes below a box are addressed by [`SubBoxKey`], a per-axis path
//! relative to the owning box. Relative masses are always of the form `1 / D`
//! for an integer `D`, so comparisons against the quality floor are exact.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{dyadic_interval, interval_contains, ArmPoint, Coord, CoordinateTree, NodeId};

/// A product of one node per coordinate tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ArmBox {
    nodes: Vec<NodeId>,
}

impl ArmBox {
    pub fn root(p: usize) -> Self {
        Self {
            nodes: vec![NodeId::root(); p],
        }
    }

    pub fn new(nodes: Vec<NodeId>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, axis: usize) -> &NodeId {
        &self.nodes[axis]
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Maximum per-axis depth.
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(NodeId::depth).max().unwrap_or(0)
    }

    /// Per-axis dotted paths joined by `|`, e.g. `0.1|0`.
    pub fn serialise(&self) -> String {
        self.nodes
            .iter()
            .map(NodeId::dotted)
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let nodes = s
            .split('|')
            .map(NodeId::parse_dotted)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { nodes })
    }

    /// Membership test honouring the half-open interval convention.
    pub fn contains(&self, trees: &[CoordinateTree], x: &ArmPoint) -> bool {
        x.dim() == self.dim()
            && self
                .nodes
                .iter()
                .zip(trees)
                .zip(&x.coords)
                .all(|((node, tree), c)| tree.node_contains(node, c))
    }

    /// Two boxes are disjoint iff their nodes are disjoint on some axis.
    pub fn overlaps(&self, other: &ArmBox) -> bool {
        self.nodes
            .iter()
            .zip(&other.nodes)
            .all(|(a, b)| a.overlaps(b))
    }

    pub fn mass(&self, trees: &[CoordinateTree]) -> Result<f64> {
        self.nodes
            .iter()
            .zip(trees)
            .map(|(n, t)| t.pi_mass(n))
            .product()
    }

    pub fn validate(&self, trees: &[CoordinateTree]) -> Result<()> {
        if self.dim() != trees.len() {
            return Err(Error::DimensionMismatch {
                expected: trees.len(),
                got: self.dim(),
            });
        }
        for (n, t) in self.nodes.iter().zip(trees) {
            t.child_count(n)?;
        }
        Ok(())
    }

    pub(crate) fn with_axis(&self, axis: usize, node: NodeId) -> Self {
        let mut nodes = self.nodes.clone();
        nodes[axis] = node;
        Self { nodes }
    }
}

impl fmt::Display for ArmBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialise())
    }
}

impl From<ArmBox> for String {
    fn from(b: ArmBox) -> String {
        b.serialise()
    }
}

impl TryFrom<String> for ArmBox {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ArmBox::parse(&s)
    }
}

pub fn box_depth(b: &ArmBox) -> usize {
    b.depth()
}

/// `q^(p (d + 1))`, exact when it fits in 128 bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rho {
    pub exact: Option<u128>,
    pub ln: f64,
}

pub fn rho(depth: usize, q: usize, p: usize) -> Rho {
    let exponent = p * (depth + 1);
    let exact = u32::try_from(exponent)
        .ok()
        .and_then(|e| (q as u128).checked_pow(e));
    Rho {
        exact,
        ln: exponent as f64 * (q as f64).ln(),
    }
}

/// Replaces `b` by one box per child of its node on `axis`.
pub fn split(b: &ArmBox, axis: usize, trees: &[CoordinateTree]) -> Result<Vec<ArmBox>> {
    let tree = trees.get(axis).ok_or(Error::DimensionMismatch {
        expected: trees.len(),
        got: axis + 1,
    })?;
    let children = tree.children(b.node(axis))?;
    if children.is_empty() {
        return Err(Error::CannotSplit {
            serial: b.serialise(),
            axis,
        });
    }
    Ok(children.into_iter().map(|c| b.with_axis(axis, c)).collect())
}

/// Exact test of `1 / denominator >= gamma`.
pub fn mass_at_least(denominator: u64, gamma: f64) -> bool {
    if gamma <= 0.0 {
        return true;
    }
    if gamma > 1.0 || denominator == 0 {
        return false;
    }
    // gamma = mantissa * 2^-shift, exactly
    let bits = gamma.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mantissa, mut shift) = if exp_field == 0 {
        (frac, 1074i64)
    } else {
        (frac | (1u64 << 52), 1075 - exp_field)
    };
    while mantissa & 1 == 0 && shift > 0 {
        mantissa >>= 1;
        shift -= 1;
    }
    if shift >= 127 {
        return true;
    }
    (mantissa as u128) * (denominator as u128) <= 1u128 << shift
}

/// A sub-box of some owning box, given as per-axis relative paths.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SubBoxKey {
    rel: Vec<NodeId>,
}

impl SubBoxKey {
    pub fn whole(p: usize) -> Self {
        Self {
            rel: vec![NodeId::root(); p],
        }
    }

    pub fn new(rel: Vec<NodeId>) -> Self {
        Self { rel }
    }

    pub fn relative(&self) -> &[NodeId] {
        &self.rel
    }

    pub fn is_whole(&self) -> bool {
        self.rel.iter().all(NodeId::is_root)
    }

    pub fn absolute(&self, owner: &ArmBox) -> ArmBox {
        ArmBox::new(
            owner
                .nodes()
                .iter()
                .zip(&self.rel)
                .map(|(n, r)| n.join(r))
                .collect(),
        )
    }

    pub fn serialise(&self) -> String {
        self.rel
            .iter()
            .map(NodeId::dotted)
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Axes on which two keys differ.
    fn differing_axes(&self, other: &SubBoxKey) -> impl Iterator<Item = usize> + '_ {
        let other = other.rel.clone();
        self.rel
            .iter()
            .zip(other)
            .enumerate()
            .filter(|(_, (a, b))| *a != b)
            .map(|(i, _)| i)
    }
}

impl From<SubBoxKey> for String {
    fn from(k: SubBoxKey) -> String {
        k.serialise()
    }
}

impl TryFrom<String> for SubBoxKey {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Ok(SubBoxKey {
            rel: ArmBox::parse(&s)?.nodes,
        })
    }
}

/// An ordered pair of sub-boxes agreeing on every axis except `axis`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidatePair {
    pub first: SubBoxKey,
    pub second: SubBoxKey,
    pub axis: usize,
}

/// Index form of a candidate pair over a [`CellLayout`]'s key list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairIndex {
    pub first: usize,
    pub second: usize,
    pub axis: usize,
}

/// The sub-boxes with relative mass at least `gamma`, in canonical order,
/// together with the candidate pairs over them.
#[derive(Clone, Debug, PartialEq)]
pub struct CellLayout {
    pub keys: Vec<SubBoxKey>,
    /// `1 / π(C | B)` for each key.
    pub denominators: Vec<u64>,
    pub pairs: Vec<PairIndex>,
}

impl CellLayout {
    pub fn build(b: &ArmBox, gamma: f64, trees: &[CoordinateTree]) -> Result<Self> {
        b.validate(trees)?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quality {gamma} must lie in (0, 1)"
            )));
        }
        // per-axis relative paths whose own mass clears the floor
        let mut per_axis: Vec<Vec<(NodeId, u64)>> = Vec::with_capacity(b.dim());
        for (node, tree) in b.nodes().iter().zip(trees) {
            let mut found = Vec::new();
            let mut stack = vec![(NodeId::root(), 1u64)];
            while let Some((rel, denom)) = stack.pop() {
                let n = tree.child_count(&node.join(&rel))? as u64;
                for c in 0..n {
                    let d = denom * n;
                    if mass_at_least(d, gamma) {
                        stack.push((rel.child(c as u32), d));
                    }
                }
                found.push((rel, denom));
            }
            found.sort();
            per_axis.push(found);
        }

        let mut cells: Vec<(SubBoxKey, u64)> = vec![(SubBoxKey { rel: Vec::new() }, 1)];
        for axis in &per_axis {
            let mut next = Vec::new();
            for (key, denom) in &cells {
                for (rel, d) in axis {
                    let combined = denom.saturating_mul(*d);
                    if mass_at_least(combined, gamma) {
                        let mut k = key.rel.clone();
                        k.push(rel.clone());
                        next.push((SubBoxKey { rel: k }, combined));
                    }
                }
            }
            cells = next;
        }
        cells.sort();

        let mut pairs = Vec::new();
        for (i, (a, _)) in cells.iter().enumerate() {
            for (j, (b, _)) in cells.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut diff = a.differing_axes(b);
                if let (Some(axis), None) = (diff.next(), diff.next()) {
                    pairs.push(PairIndex {
                        first: i,
                        second: j,
                        axis,
                    });
                }
            }
        }
        pairs.sort_by_key(|p| (p.axis, p.first, p.second));

        let (keys, denominators) = cells.into_iter().unzip();
        Ok(Self {
            keys,
            denominators,
            pairs,
        })
    }

    pub fn candidate_pairs(&self) -> Vec<CandidatePair> {
        self.pairs
            .iter()
            .map(|p| CandidatePair {
                first: self.keys[p.first].clone(),
                second: self.keys[p.second].clone(),
                axis: p.axis,
            })
            .collect()
    }
}

pub fn subboxes_with_mass(
    b: &ArmBox,
    gamma: f64,
    trees: &[CoordinateTree],
) -> Result<Vec<SubBoxKey>> {
    Ok(CellLayout::build(b, gamma, trees)?.keys)
}

pub fn candidate_pairs(
    b: &ArmBox,
    gamma: f64,
    trees: &[CoordinateTree],
) -> Result<Vec<CandidatePair>> {
    Ok(CellLayout::build(b, gamma, trees)?.candidate_pairs())
}

/// The set of one axis of a box, precomputed for fast membership tests.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum AxisSet {
    Interval { lo: f64, hi: f64 },
    Subtree(NodeId),
}

impl AxisSet {
    fn contains(&self, c: &Coord) -> bool {
        match (self, c) {
            (AxisSet::Interval { lo, hi }, Coord::Real(x)) => interval_contains(*lo, *hi, *x),
            (AxisSet::Subtree(node), Coord::Leaf(leaf)) => node.is_prefix_of(leaf),
            _ => false,
        }
    }
}

/// Geometry of a box with interval endpoints resolved once.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Region {
    axes: Vec<AxisSet>,
}

impl Region {
    pub(crate) fn new(b: &ArmBox, trees: &[CoordinateTree]) -> Self {
        let axes = b
            .nodes()
            .iter()
            .zip(trees)
            .map(|(node, tree)| match tree {
                CoordinateTree::Dyadic => {
                    let (lo, hi) = dyadic_interval(node);
                    AxisSet::Interval { lo, hi }
                }
                CoordinateTree::Finite(_) => AxisSet::Subtree(node.clone()),
            })
            .collect();
        Self { axes }
    }

    pub(crate) fn contains(&self, x: &ArmPoint) -> bool {
        self.axes.len() == x.dim() && self.axes.iter().zip(&x.coords).all(|(a, c)| a.contains(c))
    }
}

//! Coordinate trees: the per-axis subdivision schemes an arm space is built from.
//!
//! Two kinds are supported. A dyadic tree subdivides `[0, 1]` into halves
//! forever; its node at path `b1 … bd` is the interval
//! `[Σ bj 2^-j, Σ bj 2^-j + 2^-d)`, closed on the right when the upper end is
//! `1`. A finite tree is given by an explicit child table whose leaves are the
//! concrete arms on that axis.
//!
//! Every tree carries the uniform-descent distribution: start at the root and
//! repeatedly move to a uniformly chosen child until a leaf is reached. The
//! mass of a node is the product of `1 / #children` over its ancestors.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node addressed by its path of child indices from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct NodeId {
    path: Vec<u32>,
}

impl NodeId {
    pub fn root() -> Self {
        Self { path: Vec::new() }
    }

    pub fn from_path(path: Vec<u32>) -> Self {
        Self { path }
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    pub fn child(&self, index: u32) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self { path }
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, head) = self.path.split_last()?;
        Some(Self {
            path: head.to_vec(),
        })
    }

    /// Appends a relative path below this node.
    pub fn join(&self, relative: &NodeId) -> Self {
        let mut path = self.path.clone();
        path.extend_from_slice(&relative.path);
        Self { path }
    }

    /// True when `self` is an ancestor of, or equal to, `other`.
    pub fn is_prefix_of(&self, other: &NodeId) -> bool {
        other.path.starts_with(&self.path)
    }

    /// Two nodes of the same tree overlap iff one is an ancestor of the other.
    pub fn overlaps(&self, other: &NodeId) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Dotted form, e.g. `0.1.1`; the root is the empty string.
    pub fn dotted(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.path.iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            out.push_str(&c.to_string());
        }
        out
    }

    pub fn parse_dotted(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::root());
        }
        let path = s
            .split('.')
            .map(|part| {
                part.parse::<u32>().map_err(|_| Error::UnknownNode {
                    node: s.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { path })
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dotted())
    }
}

impl From<NodeId> for String {
    fn from(node: NodeId) -> String {
        node.dotted()
    }
}

impl TryFrom<String> for NodeId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        NodeId::parse_dotted(&s)
    }
}

/// One coordinate of an arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Real(f64),
    Leaf(NodeId),
}

impl Coord {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Coord::Real(x) => Some(*x),
            Coord::Leaf(_) => None,
        }
    }

    pub fn as_leaf(&self) -> Option<&NodeId> {
        match self {
            Coord::Leaf(n) => Some(n),
            Coord::Real(_) => None,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Real(x) => write!(f, "{x:.16e}"),
            Coord::Leaf(n) => write!(f, "@{n}"),
        }
    }
}

/// A point of the arm space, one coordinate per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmPoint {
    pub coords: Vec<Coord>,
}

impl ArmPoint {
    pub fn new(coords: Vec<Coord>) -> Self {
        Self { coords }
    }

    pub fn real(xs: &[f64]) -> Self {
        Self {
            coords: xs.iter().map(|&x| Coord::Real(x)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Real coordinates, or `None` when any axis holds a finite-tree leaf.
    pub fn reals(&self) -> Option<Vec<f64>> {
        self.coords.iter().map(Coord::as_real).collect()
    }

    /// `;`-separated coordinates, safe to embed in a CSV field.
    pub fn serialise(&self) -> String {
        self.coords
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let coords = s
            .split(';')
            .map(|part| {
                if let Some(rest) = part.strip_prefix('@') {
                    NodeId::parse_dotted(rest).map(Coord::Leaf)
                } else {
                    part.parse::<f64>()
                        .map(Coord::Real)
                        .map_err(|_| Error::InvalidParameter(format!("bad coordinate `{part}`")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }
}

/// Explicit finite tree: internal nodes map to their child labels.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteTree {
    arity: usize,
    children: BTreeMap<NodeId, Vec<String>>,
}

impl FiniteTree {
    pub fn new(arity: usize, children: BTreeMap<NodeId, Vec<String>>) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidTree(format!("arity {arity} < 2")));
        }
        if !children.contains_key(&NodeId::root()) {
            return Err(Error::InvalidTree("root has no children".into()));
        }
        for (node, labels) in &children {
            if labels.len() < 2 || labels.len() > arity {
                return Err(Error::InvalidTree(format!(
                    "node `{node}` has {} children, expected 2..={arity}",
                    labels.len()
                )));
            }
            if let Some(parent) = node.parent() {
                let last = *node.path().last().unwrap_or(&0) as usize;
                match children.get(&parent) {
                    Some(siblings) if last < siblings.len() => {}
                    _ => {
                        return Err(Error::InvalidTree(format!(
                            "node `{node}` is not reachable from the root"
                        )))
                    }
                }
            }
        }
        let tree = Self { arity, children };
        let mut seen = HashSet::new();
        for leaf in tree.leaves() {
            let label = tree.label(&leaf).unwrap_or_default();
            if label.is_empty() || !seen.insert(label.to_string()) {
                return Err(Error::InvalidTree(format!(
                    "leaf `{leaf}` needs a unique non-empty label"
                )));
            }
        }
        Ok(tree)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn child_count(&self, node: &NodeId) -> Option<usize> {
        if let Some(labels) = self.children.get(node) {
            return Some(labels.len());
        }
        let parent = node.parent()?;
        let last = *node.path().last()? as usize;
        match self.children.get(&parent) {
            Some(siblings) if last < siblings.len() => Some(0),
            _ => None,
        }
    }

    /// Label attached to a non-root node by its parent's child list.
    pub fn label(&self, node: &NodeId) -> Option<&str> {
        let parent = node.parent()?;
        let last = *node.path().last()? as usize;
        self.children
            .get(&parent)
            .and_then(|labels| labels.get(last))
            .map(String::as_str)
    }

    /// All leaves in lexicographic path order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![NodeId::root()];
        while let Some(node) = stack.pop() {
            match self.children.get(&node) {
                Some(labels) => {
                    for i in (0..labels.len()).rev() {
                        stack.push(node.child(i as u32));
                    }
                }
                None => out.push(node),
            }
        }
        out
    }
}

/// The subdivision scheme of one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeDoc", into = "TreeDoc")]
pub enum CoordinateTree {
    Dyadic,
    Finite(FiniteTree),
}

impl CoordinateTree {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn is_dyadic(&self) -> bool {
        matches!(self, CoordinateTree::Dyadic)
    }

    /// Maximum number of children of any node (`q`).
    pub fn max_arity(&self) -> usize {
        match self {
            CoordinateTree::Dyadic => 2,
            CoordinateTree::Finite(t) => t.arity,
        }
    }

    fn unknown(node: &NodeId) -> Error {
        Error::UnknownNode {
            node: node.dotted(),
        }
    }

    pub fn child_count(&self, node: &NodeId) -> Result<usize> {
        match self {
            CoordinateTree::Dyadic => {
                if node.path().iter().all(|&b| b < 2) {
                    Ok(2)
                } else {
                    Err(Self::unknown(node))
                }
            }
            CoordinateTree::Finite(t) => t.child_count(node).ok_or_else(|| Self::unknown(node)),
        }
    }

    pub fn has_node(&self, node: &NodeId) -> bool {
        self.child_count(node).is_ok()
    }

    pub fn is_leaf(&self, node: &NodeId) -> Result<bool> {
        Ok(self.child_count(node)? == 0)
    }

    pub fn children(&self, node: &NodeId) -> Result<Vec<NodeId>> {
        let n = self.child_count(node)?;
        Ok((0..n as u32).map(|i| node.child(i)).collect())
    }

    /// Number of equally likely paths from the root to `node`, i.e. `1 / π(node)`.
    pub fn mass_denominator(&self, node: &NodeId) -> Result<u64> {
        self.relative_denominator(&NodeId::root(), node)
    }

    /// `1 / π(base.join(relative) | base)`, exact.
    pub fn relative_denominator(&self, base: &NodeId, relative: &NodeId) -> Result<u64> {
        let mut node = base.clone();
        let mut denom: u64 = 1;
        for &c in relative.path() {
            let n = self.child_count(&node)?;
            if c as usize >= n {
                return Err(Self::unknown(&node.child(c)));
            }
            denom = denom
                .checked_mul(n as u64)
                .ok_or_else(|| Error::InvalidParameter("node mass underflows".into()))?;
            node = node.child(c);
        }
        Ok(denom)
    }

    /// Mass of `node` under the uniform-descent distribution.
    pub fn pi_mass(&self, node: &NodeId) -> Result<f64> {
        match self {
            CoordinateTree::Dyadic => {
                self.child_count(node)?;
                Ok((0.5f64).powi(node.depth() as i32))
            }
            CoordinateTree::Finite(_) => {
                let mut node_so_far = NodeId::root();
                let mut mass = 1.0;
                for &c in node.path() {
                    mass /= self.child_count(&node_so_far)? as f64;
                    node_so_far = node_so_far.child(c);
                }
                self.child_count(node)?;
                Ok(mass)
            }
        }
    }

    /// Interval `[lo, hi)` of a dyadic node (closed when `hi == 1`).
    pub fn interval(&self, node: &NodeId) -> Option<(f64, f64)> {
        match self {
            CoordinateTree::Dyadic => Some(dyadic_interval(node)),
            CoordinateTree::Finite(_) => None,
        }
    }

    /// Whether coordinate `x` lies in the set of `node`.
    pub fn node_contains(&self, node: &NodeId, x: &Coord) -> bool {
        match (self, x) {
            (CoordinateTree::Dyadic, Coord::Real(x)) => {
                let (lo, hi) = dyadic_interval(node);
                interval_contains(lo, hi, *x)
            }
            (CoordinateTree::Finite(_), Coord::Leaf(leaf)) => node.is_prefix_of(leaf),
            _ => false,
        }
    }

    /// Whether `x` is a valid coordinate of this axis.
    pub fn is_valid_coord(&self, x: &Coord) -> bool {
        match (self, x) {
            (CoordinateTree::Dyadic, Coord::Real(x)) => (0.0..=1.0).contains(x),
            (CoordinateTree::Finite(t), Coord::Leaf(leaf)) => t.child_count(leaf) == Some(0),
            _ => false,
        }
    }

    /// Draws a coordinate from the uniform-descent distribution conditioned on `node`.
    pub fn sample_in_node<R: Rng + ?Sized>(&self, node: &NodeId, rng: &mut R) -> Result<Coord> {
        match self {
            CoordinateTree::Dyadic => {
                self.child_count(node)?;
                let (lo, hi) = dyadic_interval(node);
                let u: f64 = rng.gen();
                Ok(Coord::Real(lo + u * (hi - lo)))
            }
            CoordinateTree::Finite(t) => {
                let mut current = node.clone();
                loop {
                    let n = t.child_count(&current).ok_or_else(|| Self::unknown(&current))?;
                    if n == 0 {
                        return Ok(Coord::Leaf(current));
                    }
                    let c = rng.gen_range(0..n as u32);
                    current = current.child(c);
                }
            }
        }
    }
}

pub(crate) fn dyadic_interval(node: &NodeId) -> (f64, f64) {
    let mut lo = 0.0;
    let mut width = 1.0;
    for &b in node.path() {
        width *= 0.5;
        if b == 1 {
            lo += width;
        }
    }
    (lo, lo + width)
}

pub(crate) fn interval_contains(lo: f64, hi: f64, x: f64) -> bool {
    x >= lo && (x < hi || (hi == 1.0 && x == 1.0))
}

/// Depth of a node; the root has depth 0.
pub fn node_depth(node: &NodeId) -> usize {
    node.depth()
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<BTreeMap<String, Vec<String>>>,
}

impl TryFrom<TreeDoc> for CoordinateTree {
    type Error = Error;

    fn try_from(doc: TreeDoc) -> Result<Self> {
        match (doc.kind.as_deref(), doc.arity, doc.nodes) {
            (Some("dyadic"), None, None) => Ok(CoordinateTree::Dyadic),
            (None | Some("finite"), Some(arity), Some(nodes)) => {
                let mut children = BTreeMap::new();
                for (key, labels) in nodes {
                    children.insert(NodeId::parse_dotted(&key)?, labels);
                }
                Ok(CoordinateTree::Finite(FiniteTree::new(arity, children)?))
            }
            _ => Err(Error::InvalidTree(
                "expected {\"kind\": \"dyadic\"} or {\"arity\": q, \"nodes\": {...}}".into(),
            )),
        }
    }
}

impl From<CoordinateTree> for TreeDoc {
    fn from(tree: CoordinateTree) -> Self {
        match tree {
            CoordinateTree::Dyadic => TreeDoc {
                kind: Some("dyadic".into()),
                arity: None,
                nodes: None,
            },
            CoordinateTree::Finite(t) => TreeDoc {
                kind: None,
                arity: Some(t.arity),
                nodes: Some(
                    t.children
                        .into_iter()
                        .map(|(k, v)| (k.dotted(), v))
                        .collect(),
                ),
            },
        }
    }
}

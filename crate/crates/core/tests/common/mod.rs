//! Straight-line reference for the adaptive engine: no priority queue, no
//! cached statistics. Every step recounts every cell of every active box from
//! the full history and scans all boxes for the index maximum.
#![allow(dead_code)]

use atb::boxes::{candidate_pairs, split, subboxes_with_mass, ArmBox};
use atb::{ArmPoint, CoordinateTree, EngineConstants, Environment};
use rand::Rng;

pub struct RefStep {
    pub box_serial: String,
    pub arm: ArmPoint,
    pub reward: f64,
    pub radius: f64,
}

pub struct Reference {
    pub trees: Vec<CoordinateTree>,
    pub c: EngineConstants,
    pub active: Vec<ArmBox>,
    pub history: Vec<(ArmPoint, f64)>,
    pub best: Option<(usize, f64)>,
    pub splits: usize,
}

/// Count, mean and radius of `cell` over the full history.
pub fn cell_stats(
    trees: &[CoordinateTree],
    c: &EngineConstants,
    history: &[(ArmPoint, f64)],
    cell: &ArmBox,
) -> (u64, Option<f64>, f64) {
    let mut n = 0u64;
    let mut sum = 0.0;
    for (x, y) in history {
        if cell.contains(trees, x) {
            n += 1;
            sum += y;
        }
    }
    if n == 0 {
        return (0, None, f64::INFINITY);
    }
    // ρ = q^(p (d + 1)), τ = 4 / ε
    let ln_rho = (c.p * (cell.depth() + 1)) as f64 * (c.q as f64).ln();
    let tau = 4.0 / c.epsilon;
    let r = 2.0 * ((ln_rho + (tau + n as f64).ln()) / n as f64).sqrt();
    (n, Some(sum / n as f64), r)
}

impl Reference {
    pub fn new(trees: Vec<CoordinateTree>, c: EngineConstants) -> Self {
        let p = trees.len();
        Self {
            trees,
            c,
            active: vec![ArmBox::root(p)],
            history: Vec::new(),
            best: None,
            splits: 0,
        }
    }

    pub fn index_of(&self, b: &ArmBox) -> f64 {
        let (_, mean, r) = cell_stats(&self.trees, &self.c, &self.history, b);
        let nu = 8.0 * (2.0 / self.c.gamma).sqrt();
        match mean {
            None => f64::INFINITY,
            Some(m) => m + (1.0 + 2.0 * self.c.p as f64 * nu) * r,
        }
    }

    /// Returns `(W, axis)` maximising over the candidate pairs in list order.
    pub fn width_of(&self, b: &ArmBox) -> (f64, Option<usize>) {
        let mut best = (f64::NEG_INFINITY, None);
        for pair in candidate_pairs(b, self.c.gamma, &self.trees).unwrap() {
            let (_, m1, r1) =
                cell_stats(&self.trees, &self.c, &self.history, &pair.first.absolute(b));
            let (_, m2, r2) =
                cell_stats(&self.trees, &self.c, &self.history, &pair.second.absolute(b));
            if let (Some(m1), Some(m2)) = (m1, m2) {
                let v = (m1 - r1) - (m2 + r2);
                if v > best.0 {
                    best = (v, Some(pair.axis));
                }
            }
        }
        best
    }

    pub fn select(&self) -> usize {
        let mut best = 0;
        for i in 1..self.active.len() {
            let (a, b) = (&self.active[i], &self.active[best]);
            let (ia, ib) = (self.index_of(a), self.index_of(b));
            let better = ia > ib
                || (ia == ib
                    && (a.depth() < b.depth()
                        || (a.depth() == b.depth() && a.serialise() < b.serialise())));
            if better {
                best = i;
            }
        }
        best
    }

    pub fn step<R: Rng + ?Sized>(&mut self, env: &Environment, rng: &mut R) -> RefStep {
        let i = self.select();
        let b = self.active[i].clone();
        let coords = b
            .nodes()
            .iter()
            .zip(&self.trees)
            .map(|(n, t)| t.sample_in_node(n, rng).unwrap())
            .collect();
        let arm = ArmPoint::new(coords);
        let reward = env.sample(&arm, rng);
        self.history.push((arm.clone(), reward));
        let t = self.history.len();
        let (_, _, radius) = cell_stats(&self.trees, &self.c, &self.history, &b);
        if self.best.map_or(true, |(_, r)| radius < r) {
            self.best = Some((t, radius));
        }
        self.restore();
        RefStep {
            box_serial: b.serialise(),
            arm,
            reward,
            radius,
        }
    }

    fn restore(&mut self) {
        let nu = 8.0 * (2.0 / self.c.gamma).sqrt();
        loop {
            let mut found = None;
            for (i, b) in self.active.iter().enumerate() {
                let (w, axis) = self.width_of(b);
                let (_, _, r) = cell_stats(&self.trees, &self.c, &self.history, b);
                if w >= nu * r {
                    found = Some((i, axis.unwrap()));
                    break;
                }
            }
            let Some((i, axis)) = found else { return };
            let b = self.active.remove(i);
            self.active.extend(split(&b, axis, &self.trees).unwrap());
            self.splits += 1;
        }
    }

    /// Cells of `b` with their full-history statistics.
    pub fn cells_of(&self, b: &ArmBox) -> Vec<(ArmBox, u64, Option<f64>, f64)> {
        subboxes_with_mass(b, self.c.gamma, &self.trees)
            .unwrap()
            .into_iter()
            .map(|k| {
                let cell = k.absolute(b);
                let (n, m, r) = cell_stats(&self.trees, &self.c, &self.history, &cell);
                (cell, n, m, r)
            })
            .collect()
    }
}

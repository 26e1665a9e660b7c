//! The adaptive tree-partition engine: select, sample, update, split.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boxes::{rho, split, ArmBox, CellLayout, Region};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::stats::{
    confidence_radius, index, width_estimate_indexed, CellStats, EngineConstants, WidthEstimate,
};
use crate::tree::{ArmPoint, CoordinateTree, NodeId};

#[derive(Clone, Debug)]
struct BoxRecord {
    arm_box: ArmBox,
    serial: Arc<str>,
    depth: usize,
    region: Region,
    layout: Arc<CellLayout>,
    whole: usize,
    cell_regions: Vec<Region>,
    cell_log_rho: Vec<f64>,
    cells: Vec<CellStats>,
    radii: Vec<f64>,
    points: Vec<(ArmPoint, f64)>,
    width: WidthEstimate,
    index: f64,
    version: u64,
    activated_at: usize,
}

impl BoxRecord {
    fn radius(&self) -> f64 {
        self.radii[self.whole]
    }

    fn violates(&self, nu: f64) -> bool {
        self.width.value >= nu * self.radius()
    }

    /// Adds one observation to every cell containing it; returns those cells.
    fn record(&mut self, arm: &ArmPoint, reward: f64, tau: f64) -> Vec<usize> {
        let mut touched = Vec::new();
        for (i, region) in self.cell_regions.iter().enumerate() {
            if region.contains(arm) {
                self.cells[i].add(reward);
                self.radii[i] = confidence_radius(self.cells[i].hits, self.cell_log_rho[i], tau);
                touched.push(i);
            }
        }
        touched
    }

    fn refresh(&mut self, constants: &EngineConstants) {
        self.width = width_estimate_indexed(&self.layout.pairs, &self.cells, &self.radii);
        self.index = index(&self.cells[self.whole], self.radius(), constants);
        self.version += 1;
    }
}

#[derive(Clone, Debug)]
struct HeapEntry {
    index: f64,
    depth: usize,
    serial: Arc<str>,
    slot: usize,
    version: u64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    /// Larger index first, then shallower, then lexicographically smaller serial.
    fn cmp(&self, other: &Self) -> Ordering {
        self.index
            .total_cmp(&other.index)
            .then_with(|| other.depth.cmp(&self.depth))
            .then_with(|| other.serial.cmp(&self.serial))
            .then_with(|| self.version.cmp(&other.version))
    }
}

/// One step of a run as seen by the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRow {
    pub t: usize,
    pub box_serial: String,
    pub arm: ArmPoint,
    pub reward: f64,
    /// Post-update radius of the selected box.
    pub radius: f64,
    pub splits: usize,
}

/// Read-only view of an active box.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxSummary {
    pub arm_box: ArmBox,
    pub hits: u64,
    pub mean: Option<f64>,
    pub radius: f64,
    pub width: f64,
    pub width_axis: Option<usize>,
    pub index: f64,
    pub activated_at: usize,
}

/// Cells whose statistics changed during one step.
#[derive(Clone, Debug, Default)]
pub struct Touched {
    /// `(box, cell)` pairs of the selected box's updated cells, or of the
    /// cells of boxes created by splits.
    pub cells: Vec<(ArmBox, ArmBox, CellStats, f64)>,
}

/// Running state of one execution.
#[derive(Clone, Debug)]
pub struct Engine {
    trees: Arc<Vec<CoordinateTree>>,
    constants: EngineConstants,
    records: Vec<Option<BoxRecord>>,
    heap: BinaryHeap<HeapEntry>,
    layouts: HashMap<Vec<Option<NodeId>>, Arc<CellLayout>>,
    t: usize,
    best: Option<(usize, f64, ArmPoint)>,
    activations: usize,
    splits: usize,
    active: usize,
    max_active: usize,
    track_touched: bool,
    touched: Touched,
}

impl Engine {
    /// A single active root box with index `+∞`, at `t = 0`.
    pub fn init(trees: Vec<CoordinateTree>, constants: EngineConstants) -> Result<Self> {
        if trees.len() != constants.p {
            return Err(Error::DimensionMismatch {
                expected: constants.p,
                got: trees.len(),
            });
        }
        let q = trees.iter().map(CoordinateTree::max_arity).max().unwrap_or(2);
        if q > constants.q {
            return Err(Error::InvalidParameter(format!(
                "trees have arity {q} but constants assume q = {}",
                constants.q
            )));
        }
        let mut engine = Self {
            trees: Arc::new(trees),
            constants,
            records: Vec::new(),
            heap: BinaryHeap::new(),
            layouts: HashMap::new(),
            t: 0,
            best: None,
            activations: 0,
            splits: 0,
            active: 0,
            max_active: 0,
            track_touched: false,
            touched: Touched::default(),
        };
        let root = ArmBox::root(constants.p);
        engine.activate(root, Vec::new(), 0)?;
        Ok(engine)
    }

    pub fn constants(&self) -> &EngineConstants {
        &self.constants
    }

    pub fn trees(&self) -> &[CoordinateTree] {
        &self.trees
    }

    /// Number of completed steps.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn activations(&self) -> usize {
        self.activations
    }

    pub fn splits(&self) -> usize {
        self.splits
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn max_active(&self) -> usize {
        self.max_active
    }

    /// Records which cells change on each step, for the clean-execution check.
    pub fn set_track_touched(&mut self, on: bool) {
        self.track_touched = on;
    }

    pub fn take_touched(&mut self) -> Touched {
        std::mem::take(&mut self.touched)
    }

    fn layout_for(&mut self, b: &ArmBox) -> Result<Arc<CellLayout>> {
        let key: Vec<Option<NodeId>> = b
            .nodes()
            .iter()
            .zip(self.trees.iter())
            .map(|(n, t)| (!t.is_dyadic()).then(|| n.clone()))
            .collect();
        if let Some(l) = self.layouts.get(&key) {
            return Ok(l.clone());
        }
        let layout = Arc::new(CellLayout::build(b, self.constants.gamma, &self.trees)?);
        self.layouts.insert(key, layout.clone());
        Ok(layout)
    }

    /// Builds a record for `b` from the points that fall inside it.
    fn activate(
        &mut self,
        arm_box: ArmBox,
        points: Vec<(ArmPoint, f64)>,
        activated_at: usize,
    ) -> Result<usize> {
        let layout = self.layout_for(&arm_box)?;
        let whole = layout
            .keys
            .iter()
            .position(|k| k.is_whole())
            .expect("layout always holds the whole box");
        let mut cell_regions = Vec::with_capacity(layout.keys.len());
        let mut cell_log_rho = Vec::with_capacity(layout.keys.len());
        for key in &layout.keys {
            let cell = key.absolute(&arm_box);
            cell_log_rho.push(rho(cell.depth(), self.constants.q, self.constants.p).ln);
            cell_regions.push(Region::new(&cell, &self.trees));
        }
        let n = layout.keys.len();
        let mut record = BoxRecord {
            serial: Arc::from(arm_box.serialise()),
            depth: arm_box.depth(),
            region: Region::new(&arm_box, &self.trees),
            arm_box,
            layout,
            whole,
            cell_regions,
            cell_log_rho,
            cells: vec![CellStats::default(); n],
            radii: vec![f64::INFINITY; n],
            points: Vec::new(),
            width: WidthEstimate::EMPTY,
            index: f64::INFINITY,
            version: 0,
            activated_at,
        };
        for (arm, reward) in &points {
            for (i, region) in record.cell_regions.iter().enumerate() {
                if region.contains(arm) {
                    record.cells[i].add(*reward);
                }
            }
        }
        for i in 0..n {
            record.radii[i] =
                confidence_radius(record.cells[i].hits, record.cell_log_rho[i], self.constants.tau);
        }
        record.points = points;
        record.refresh(&self.constants);

        if self.track_touched {
            for i in 0..n {
                if record.cells[i].hits > 0 {
                    self.touched.cells.push((
                        record.arm_box.clone(),
                        record.layout.keys[i].absolute(&record.arm_box),
                        record.cells[i],
                        record.radii[i],
                    ));
                }
            }
        }

        let slot = self.records.len();
        self.heap.push(HeapEntry {
            index: record.index,
            depth: record.depth,
            serial: record.serial.clone(),
            slot,
            version: record.version,
        });
        self.records.push(Some(record));
        self.activations += 1;
        self.active += 1;
        self.max_active = self.max_active.max(self.active);
        Ok(slot)
    }

    fn select_slot(&mut self) -> usize {
        loop {
            let top = self.heap.peek().expect("the active set is never empty");
            match &self.records[top.slot] {
                Some(r) if r.version == top.version => return top.slot,
                _ => {
                    self.heap.pop();
                }
            }
        }
    }

    /// The active box with the largest index under the deterministic tie-break.
    pub fn select(&mut self) -> ArmBox {
        let slot = self.select_slot();
        self.record(slot).arm_box.clone()
    }

    fn record(&self, slot: usize) -> &BoxRecord {
        self.records[slot].as_ref().expect("live slot")
    }

    /// Samples an arm from `π | B_t`, draws its reward, and updates the state.
    pub fn step<R: Rng + ?Sized>(&mut self, env: &Environment, rng: &mut R) -> Result<StepRow> {
        let slot = self.select_slot();
        let record = self.record(slot);
        let coords = record
            .arm_box
            .nodes()
            .iter()
            .zip(self.trees.iter())
            .map(|(node, tree)| tree.sample_in_node(node, rng))
            .collect::<Result<Vec<_>>>()?;
        let arm = ArmPoint::new(coords);
        let reward = env.sample(&arm, rng);
        self.advance(slot, arm, reward)
    }

    /// Applies an externally chosen observation to the currently selected box.
    pub fn observe(&mut self, arm: ArmPoint, reward: f64) -> Result<StepRow> {
        let slot = self.select_slot();
        if !self.record(slot).region.contains(&arm) {
            return Err(Error::ReplayDiverged {
                t: self.t + 1,
                reason: format!(
                    "arm {} is not in the selected box {}",
                    arm.serialise(),
                    self.record(slot).serial
                ),
            });
        }
        self.advance(slot, arm, reward)
    }

    fn advance(&mut self, slot: usize, arm: ArmPoint, reward: f64) -> Result<StepRow> {
        let t = self.t + 1;
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfRange { t, reward });
        }
        let tau = self.constants.tau;
        let record = self.records[slot].as_mut().expect("live slot");
        let touched = record.record(&arm, reward, tau);
        record.points.push((arm.clone(), reward));
        record.refresh(&self.constants);
        let radius = record.radius();
        let box_serial = record.serial.to_string();
        self.heap.push(HeapEntry {
            index: record.index,
            depth: record.depth,
            serial: record.serial.clone(),
            slot,
            version: record.version,
        });
        if self.track_touched {
            let record = self.record(slot);
            let cells: Vec<_> = touched
                .iter()
                .map(|&i| {
                    (
                        record.arm_box.clone(),
                        record.layout.keys[i].absolute(&record.arm_box),
                        record.cells[i],
                        record.radii[i],
                    )
                })
                .collect();
            self.touched.cells.extend(cells);
        }

        if self.best.as_ref().map_or(true, |(_, r, _)| radius < *r) {
            self.best = Some((t, radius, arm.clone()));
        }
        let splits = self.restore_invariant(slot, t)?;
        self.t = t;
        Ok(StepRow {
            t,
            box_serial,
            arm,
            reward,
            radius,
            splits,
        })
    }

    /// Splits boxes until every active box has `W < ν r`; returns the split count.
    fn restore_invariant(&mut self, start: usize, t: usize) -> Result<usize> {
        let nu = self.constants.nu;
        let mut work = vec![start];
        let mut count = 0;
        while let Some(slot) = work.pop() {
            let violates = self.records[slot].as_ref().is_some_and(|r| r.violates(nu));
            if !violates {
                continue;
            }
            let record = self.records[slot].take().expect("live slot");
            self.active -= 1;
            let axis = record.width.axis.expect("a finite width has an argmax pair");
            let children = split(&record.arm_box, axis, &self.trees)?;
            let mut remaining = record.points;
            for child in children {
                let region = Region::new(&child, &self.trees);
                let (inside, rest): (Vec<_>, Vec<_>) =
                    remaining.into_iter().partition(|(x, _)| region.contains(x));
                remaining = rest;
                work.push(self.activate(child, inside, t)?);
            }
            debug_assert!(remaining.is_empty(), "children partition the parent");
            count += 1;
        }
        self.splits += count;
        debug_assert!(self.check_invariants().is_ok());
        Ok(count)
    }

    /// `x_{T*}` with `T* = argmin_t r_t(B_t)`, earliest `t` on ties.
    pub fn recommend(&self) -> Result<ArmPoint> {
        self.best.as_ref().map(|(_, _, x)| x.clone()).ok_or(Error::NoData)
    }

    /// `(T*, r_{T*}(B_{T*}))`.
    pub fn best_time(&self) -> Option<(usize, f64)> {
        self.best.as_ref().map(|(t, r, _)| (*t, *r))
    }

    pub fn active_boxes(&self) -> Vec<BoxSummary> {
        let mut out: Vec<BoxSummary> = self
            .records
            .iter()
            .flatten()
            .map(|r| BoxSummary {
                arm_box: r.arm_box.clone(),
                hits: r.cells[r.whole].hits,
                mean: r.cells[r.whole].mean(),
                radius: r.radius(),
                width: r.width.value,
                width_axis: r.width.axis,
                index: r.index,
                activated_at: r.activated_at,
            })
            .collect();
        out.sort_by(|a, b| a.arm_box.serialise().cmp(&b.arm_box.serialise()));
        out
    }

    /// Checks Invariant 1 and the per-record consistency conditions.
    pub fn check_invariants(&self) -> Result<()> {
        for r in self.records.iter().flatten() {
            if r.violates(self.constants.nu) {
                return Err(Error::InvalidParameter(format!(
                    "box {} violates W < ν r: W = {}, r = {}",
                    r.serial,
                    r.width.value,
                    r.radius()
                )));
            }
            let whole_hits = r.cells[r.whole].hits;
            if whole_hits != r.points.len() as u64 {
                return Err(Error::InvalidParameter(format!(
                    "box {} has {} points but {} hits",
                    r.serial,
                    r.points.len(),
                    whole_hits
                )));
            }
            if r.cells.iter().any(|c| c.hits > whole_hits) {
                return Err(Error::InvalidParameter(format!(
                    "box {} has a cell with more hits than the box",
                    r.serial
                )));
            }
        }
        Ok(())
    }

    /// Exact partition check: masses sum to one and boxes are pairwise disjoint.
    pub fn verify_partition(&self) -> Result<()> {
        let boxes: Vec<&ArmBox> = self.records.iter().flatten().map(|r| &r.arm_box).collect();
        let mut total = 0.0;
        for b in &boxes {
            total += b.mass(&self.trees)?;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "active masses sum to {total}"
            )));
        }
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::InvalidParameter(format!("{a} overlaps {b}")));
                }
            }
        }
        Ok(())
    }

    /// Counts, for `n` random arms, how many active boxes contain each one;
    /// returns the number of arms not covered exactly once.
    pub fn probe_partition<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<usize> {
        let root = NodeId::root();
        let regions: Vec<&Region> = self.records.iter().flatten().map(|r| &r.region).collect();
        let mut bad = 0;
        for _ in 0..n {
            let coords = self
                .trees
                .iter()
                .map(|t| t.sample_in_node(&root, rng))
                .collect::<Result<Vec<_>>>()?;
            let x = ArmPoint::new(coords);
            if regions.iter().filter(|r| r.contains(&x)).count() != 1 {
                bad += 1;
            }
        }
        Ok(bad)
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        let mut boxes: Vec<BoxSnapshot> = self
            .records
            .iter()
            .flatten()
            .map(|r| BoxSnapshot {
                arm_box: r.arm_box.clone(),
                activated_at: r.activated_at,
                cells: r
                    .layout
                    .keys
                    .iter()
                    .zip(&r.cells)
                    .map(|(k, c)| (k.serialise(), *c))
                    .collect(),
                points: r.points.clone(),
            })
            .collect();
        boxes.sort_by(|a, b| a.arm_box.serialise().cmp(&b.arm_box.serialise()));
        EngineSnapshot {
            constants: self.constants,
            trees: self.trees.as_ref().clone(),
            t: self.t,
            best: self.best.clone(),
            activations: self.activations,
            splits: self.splits,
            max_active: self.max_active,
            boxes,
        }
    }

    /// Rebuilds an engine; cell tables are recomputed from the stored points
    /// and must match the saved ones bit for bit.
    pub fn from_snapshot(s: EngineSnapshot) -> Result<Self> {
        let mut engine = Self::init(s.trees, s.constants)?;
        engine.records.clear();
        engine.heap.clear();
        engine.active = 0;
        engine.max_active = 0;
        for b in s.boxes {
            b.arm_box.validate(&engine.trees)?;
            let slot = engine.activate(b.arm_box, b.points, b.activated_at)?;
            let record = engine.record(slot);
            let rebuilt: Vec<(String, CellStats)> = record
                .layout
                .keys
                .iter()
                .zip(&record.cells)
                .map(|(k, c)| (k.serialise(), *c))
                .collect();
            if rebuilt != b.cells {
                return Err(Error::InvalidConfig(format!(
                    "snapshot cell table of {} does not match its points",
                    record.serial
                )));
            }
        }
        engine.t = s.t;
        engine.best = s.best;
        engine.activations = s.activations;
        engine.splits = s.splits;
        engine.max_active = s.max_active.max(engine.active);
        engine.verify_partition()?;
        Ok(engine)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSnapshot {
    #[serde(rename = "box")]
    pub arm_box: ArmBox,
    pub activated_at: usize,
    pub cells: Vec<(String, CellStats)>,
    pub points: Vec<(ArmPoint, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub constants: EngineConstants,
    pub trees: Vec<CoordinateTree>,
    pub t: usize,
    pub best: Option<(usize, f64, ArmPoint)>,
    pub activations: usize,
    pub splits: usize,
    pub max_active: usize,
    pub boxes: Vec<BoxSnapshot>,
}

/// An engine together with the generator that drives it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub engine: EngineSnapshot,
    pub rng: ChaCha8Rng,
}

pub fn save_checkpoint(path: &Path, engine: &Engine, rng: &ChaCha8Rng) -> Result<()> {
    let c = Checkpoint {
        engine: engine.snapshot(),
        rng: rng.clone(),
    };
    fs::write(path, serde_json::to_string(&c)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Engine, ChaCha8Rng)> {
    let c: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok((Engine::from_snapshot(c.engine)?, c.rng))
}

/// One row of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub box_serial: String,
    pub arm: ArmPoint,
    pub reward: f64,
    pub mu_xt: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Radius of the selected box after the update; for baselines, the
    /// exploration bonus.
    pub radius: f64,
}

/// Output of a complete run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub rows: Vec<TrajectoryRow>,
    pub mu_star: f64,
    pub recommendation: ArmPoint,
    pub t_star: usize,
    pub recommendation_mean: f64,
    pub activations: usize,
    pub splits: usize,
    pub max_active: usize,
    /// Mean over a grid's cells of `μ* - max_k μ(k)`; zero for adaptive runs.
    pub approximation_gap: f64,
    pub step_nanos: Vec<u64>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    /// `μ* - μ(x_{T*})`.
    pub fn simple_regret(&self) -> f64 {
        self.mu_star - self.recommendation_mean
    }

    pub fn total_nanos(&self) -> u64 {
        self.step_nanos.iter().sum()
    }
}

/// Appends the regret columns for one step.
pub(crate) fn regret_row(
    env: &Environment,
    prev_cum: f64,
    t: usize,
    box_serial: String,
    arm: ArmPoint,
    reward: f64,
    radius: f64,
) -> TrajectoryRow {
    let mu_xt = env.mean(&arm);
    let inst_regret = env.max_value() - mu_xt;
    TrajectoryRow {
        t,
        box_serial,
        arm,
        reward,
        mu_xt,
        inst_regret,
        cum_regret: prev_cum + inst_regret,
        radius,
    }
}

/// Runs `horizon` steps from a fresh root box.
pub fn run<R: Rng + ?Sized>(
    trees: Vec<CoordinateTree>,
    constants: EngineConstants,
    env: &Environment,
    horizon: usize,
    rng: &mut R,
) -> Result<RunRecord> {
    env.reward.check_trees(&trees)?;
    let mut engine = Engine::init(trees, constants)?;
    continue_run(&mut engine, env, horizon, rng, Vec::new())
}

/// Continues an engine until it has completed `horizon` steps.
pub fn continue_run<R: Rng + ?Sized>(
    engine: &mut Engine,
    env: &Environment,
    horizon: usize,
    rng: &mut R,
    mut rows: Vec<TrajectoryRow>,
) -> Result<RunRecord> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut step_nanos = Vec::with_capacity(horizon.saturating_sub(engine.t()));
    let mut cum = rows.last().map_or(0.0, |r| r.cum_regret);
    while engine.t() < horizon {
        let start = Instant::now();
        let row = engine.step(env, rng)?;
        step_nanos.push(start.elapsed().as_nanos() as u64);
        let r = regret_row(env, cum, row.t, row.box_serial, row.arm, row.reward, row.radius);
        cum = r.cum_regret;
        rows.push(r);
    }
    let recommendation = engine.recommend()?;
    let (t_star, _) = engine.best_time().ok_or(Error::NoData)?;
    Ok(RunRecord {
        mu_star: env.max_value(),
        recommendation_mean: env.mean(&recommendation),
        recommendation,
        t_star,
        activations: engine.activations(),
        splits: engine.splits(),
        max_active: engine.max_active(),
        approximation_gap: 0.0,
        step_nanos,
        rows,
    })
}

/// Result of replaying a run against the exact box-mean oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    pub clean: bool,
    /// First `(t, cell, |μ_t - μ|, r_t)` breaking `|μ_t(C) - μ(C)| <= r_t(C)`.
    pub first_violation: Option<(usize, String, f64, f64)>,
    pub checks: usize,
    /// Descriptive `r_t(C) / r_t(B)` statistics over proper sub-boxes.
    pub max_radius_ratio: f64,
    pub mean_radius_ratio: f64,
}

/// Replays `run` and checks every cell whenever its statistics change.
pub fn check_clean(
    run: &RunRecord,
    env: &Environment,
    trees: &[CoordinateTree],
    constants: EngineConstants,
) -> Result<CleanReport> {
    env.supports_exact_oracle()?;
    env.reward.check_trees(trees)?;
    let mut engine = Engine::init(trees.to_vec(), constants)?;
    engine.set_track_touched(true);
    engine.take_touched();
    let mut oracle: HashMap<String, f64> = HashMap::new();
    let mut report = CleanReport {
        clean: true,
        first_violation: None,
        checks: 0,
        max_radius_ratio: 0.0,
        mean_radius_ratio: 0.0,
    };
    let (mut ratio_sum, mut ratio_n) = (0.0, 0usize);
    for row in &run.rows {
        let selected = engine.select();
        if selected.serialise() != row.box_serial {
            return Err(Error::ReplayDiverged {
                t: row.t,
                reason: format!("selected {} but the trace has {}", selected, row.box_serial),
            });
        }
        let step = engine.observe(row.arm.clone(), row.reward)?;
        let touched = engine.take_touched();
        for (owner, cell, stats, r) in touched.cells {
            let serial = cell.serialise();
            let truth = match oracle.get(&serial) {
                Some(v) => *v,
                None => {
                    let v = env.reward.mean_on_box(&cell, trees)?.value;
                    oracle.insert(serial.clone(), v);
                    v
                }
            };
            let mean = stats.mean().ok_or(Error::UndefinedStats)?;
            let err = (mean - truth).abs();
            report.checks += 1;
            if err > r && report.first_violation.is_none() {
                report.clean = false;
                report.first_violation = Some((step.t, serial, err, r));
            }
            if cell != owner && step.radius.is_finite() && step.radius > 0.0 {
                let ratio = r / step.radius;
                if ratio.is_finite() {
                    report.max_radius_ratio = report.max_radius_ratio.max(ratio);
                    ratio_sum += ratio;
                    ratio_n += 1;
                }
            }
        }
    }
    if ratio_n > 0 {
        report.mean_radius_ratio = ratio_sum / ratio_n as f64;
    }
    Ok(report)
}

/// Seeds a generator for replication `stream` of a master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{NoiseModel, RewardFunction, RewardSpec};
    use proptest::prelude::*;

    fn dyadic(p: usize) -> Vec<CoordinateTree> {
        vec![CoordinateTree::Dyadic; p]
    }

    fn consts(p: usize) -> EngineConstants {
        EngineConstants::new(0.5, 0.5, p, 2).unwrap()
    }

    fn constant_env(value: f64, p: usize) -> Environment {
        let f = RewardFunction::from_spec(RewardSpec::Constant { value, p }).unwrap();
        Environment::new(f, NoiseModel::Deterministic).unwrap()
    }

    #[test]
    fn init_state() {
        let mut e = Engine::init(dyadic(2), consts(2)).unwrap();
        assert_eq!(e.active_count(), 1);
        let root = &e.active_boxes()[0];
        assert_eq!(root.hits, 0);
        assert_eq!(root.radius, f64::INFINITY);
        assert_eq!(root.index, f64::INFINITY);
        assert_eq!(e.select(), ArmBox::root(2));
        assert!(matches!(e.recommend(), Err(Error::NoData)));
    }

    #[test]
    fn first_step_uses_root() {
        let env = constant_env(0.5, 1);
        let mut e = Engine::init(dyadic(1), consts(1)).unwrap();
        let row = e.step(&env, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(row.t, 1);
        assert_eq!(row.box_serial, "");
        assert_eq!(e.recommend().unwrap(), row.arm);
    }

    #[test]
    fn constant_environment_never_splits() {
        let env = constant_env(0.5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rec = run(dyadic(2), consts(2), &env, 2000, &mut rng).unwrap();
        assert_eq!(rec.splits, 0);
        assert_eq!(rec.cumulative_regret(), 0.0);
        // a single box with strictly decreasing radius: T* = T
        assert_eq!(rec.t_star, 2000);
    }

    #[test]
    fn ties_between_unhit_boxes() {
        let mut e = Engine::init(dyadic(1), consts(1)).unwrap();
        let root_points = Vec::new();
        e.records.clear();
        e.heap.clear();
        e.activate(ArmBox::parse("1").unwrap(), root_points.clone(), 0).unwrap();
        e.activate(ArmBox::parse("0.1").unwrap(), root_points.clone(), 0).unwrap();
        e.activate(ArmBox::parse("0.0").unwrap(), root_points, 0).unwrap();
        assert_eq!(e.select(), ArmBox::parse("1").unwrap());
    }

    #[test]
    fn select_prefers_larger_index() {
        let mut e = Engine::init(dyadic(1), consts(1)).unwrap();
        e.records.clear();
        e.heap.clear();
        let a = e.activate(ArmBox::parse("0").unwrap(), Vec::new(), 0).unwrap();
        let b = e.activate(ArmBox::parse("1").unwrap(), Vec::new(), 0).unwrap();
        for (slot, idx) in [(a, 2.1), (b, 3.8)] {
            let r = e.records[slot].as_mut().unwrap();
            r.index = idx;
            r.version += 1;
            e.heap.push(HeapEntry {
                index: idx,
                depth: r.depth,
                serial: r.serial.clone(),
                slot,
                version: r.version,
            });
        }
        assert_eq!(e.select(), ArmBox::parse("1").unwrap());
    }

    #[test]
    fn linear_function_splits_only_on_its_axis() {
        let f = RewardFunction::from_spec(RewardSpec::Linear { p: 2, axis: 0 }).unwrap();
        let env = Environment::new(f, NoiseModel::Deterministic).unwrap();
        let constants = EngineConstants::new(0.5, 0.5, 2, 2).unwrap();
        let mut e = Engine::init(dyadic(2), constants).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200_000 {
            e.step(&env, &mut rng).unwrap();
        }
        assert!(e.splits() > 0);
        for b in e.active_boxes() {
            assert!(b.arm_box.node(1).is_root(), "{}", b.arm_box);
        }
    }

    #[test]
    fn replay_conserves_points() {
        let env = Environment::named("quadratic", 1, NoiseModel::Bernoulli).unwrap();
        let mut e = Engine::init(dyadic(1), EngineConstants::new(0.9, 0.9, 1, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3000 {
            e.step(&env, &mut rng).unwrap();
            let hits: u64 = e.active_boxes().iter().map(|b| b.hits).sum();
            assert_eq!(hits as usize, e.t());
        }
        e.check_invariants().unwrap();
        e.verify_partition().unwrap();
    }

    #[test]
    fn out_of_range_reward_is_rejected() {
        let mut e = Engine::init(dyadic(1), consts(1)).unwrap();
        let err = e.observe(ArmPoint::real(&[0.3]), 1.5).unwrap_err();
        assert!(matches!(err, Error::RewardOutOfRange { t: 1, .. }));
    }

    #[test]
    fn deterministic_runs_are_clean() {
        let env = Environment::named("quadratic", 1, NoiseModel::Deterministic).unwrap();
        let c = EngineConstants::new(0.2, 0.5, 1, 2).unwrap();
        let rec = run(dyadic(1), c, &env, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let report = check_clean(&rec, &env, &dyadic(1), c).unwrap();
        assert!(report.clean);
        assert!(report.checks >= 500);
    }

    #[test]
    fn corrupted_trace_is_caught() {
        let env = Environment::named("quadratic", 1, NoiseModel::Bernoulli).unwrap();
        let c = EngineConstants::new(0.2, 0.5, 1, 2).unwrap();
        let mut rec = run(dyadic(1), c, &env, 300, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        for row in &mut rec.rows {
            row.reward = 1.0;
        }
        let report = check_clean(&rec, &env, &dyadic(1), c).unwrap();
        assert!(!report.clean);
        assert!(report.first_violation.is_some());
    }

    #[test]
    fn clean_check_rejects_biased_noise() {
        let env = Environment::named("quadratic", 1, NoiseModel::TruncatedGaussian { sigma: 0.1 })
            .unwrap();
        let c = consts(1);
        let rec = run(dyadic(1), c, &env, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(
            check_clean(&rec, &env, &dyadic(1), c),
            Err(Error::UnsupportedEnvironment(_))
        ));
    }

    #[test]
    fn snapshot_resume_is_bit_identical() {
        let env = Environment::named("quadratic", 2, NoiseModel::Bernoulli).unwrap();
        let c = EngineConstants::new(0.9, 0.9, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let full = run(dyadic(2), c, &env, 1500, &mut rng).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut e = Engine::init(dyadic(2), c).unwrap();
        let head = continue_run(&mut e, &env, 700, &mut rng, Vec::new()).unwrap();
        let text = serde_json::to_string(&Checkpoint {
            engine: e.snapshot(),
            rng: rng.clone(),
        })
        .unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        let mut resumed = Engine::from_snapshot(back.engine).unwrap();
        let mut rng = back.rng;
        let tail = continue_run(&mut resumed, &env, 1500, &mut rng, head.rows).unwrap();
        assert_eq!(tail.rows, full.rows);
        assert_eq!(tail.t_star, full.t_star);
        assert_eq!(tail.splits, full.splits);
    }

    #[test]
    fn long_linear_run_splits_and_keeps_invariants() {
        let f = RewardFunction::from_spec(RewardSpec::Linear { p: 1, axis: 0 }).unwrap();
        let env = Environment::new(f, NoiseModel::Deterministic).unwrap();
        let c = EngineConstants::new(0.9, 0.5, 1, 2).unwrap();
        let mut e = Engine::init(dyadic(1), c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200_000 {
            e.step(&env, &mut rng).unwrap();
        }
        assert!(e.splits() > 0);
        e.check_invariants().unwrap();
        e.verify_partition().unwrap();
        assert_eq!(e.probe_partition(1000, &mut rng).unwrap(), 0);
        assert_eq!(e.activations(), 1 + 2 * e.splits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn invariants_hold_along_runs(seed in 0u64..1000, p in 1usize..3, steps in 1usize..600) {
            let env = Environment::named("quadratic", p, NoiseModel::Bernoulli).unwrap();
            let c = EngineConstants::new(0.9, 0.5, p, 2).unwrap();
            let mut e = Engine::init(dyadic(p), c).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut prev_radius = f64::INFINITY;
            for _ in 0..steps {
                e.step(&env, &mut rng).unwrap();
                let (_, r) = e.best_time().unwrap();
                prop_assert!(r <= prev_radius);
                prev_radius = r;
            }
            e.check_invariants().unwrap();
            e.verify_partition().unwrap();
            prop_assert_eq!(e.probe_partition(1000, &mut rng).unwrap(), 0);
            prop_assert!(e.active_count() <= e.t() + 1);
            prop_assert_eq!(e.activations(), 1 + 2 * e.splits());
        }

        #[test]
        fn identical_seeds_give_identical_runs(seed in 0u64..1000) {
            let env = Environment::named("quadratic", 1, NoiseModel::Bernoulli).unwrap();
            let c = consts(1);
            let a = run(dyadic(1), c, &env, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = run(dyadic(1), c, &env, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(a.rows, b.rows);
            prop_assert_eq!(a.t_star, b.t_star);
        }
    }
}

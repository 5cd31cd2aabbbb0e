//! Phase-diagram sweeps over `(x, nu)` planes.
//!
//! Grid nodes hold the global minimum at that parameter point. Boundaries
//! live on grid edges:
//!
//! * NP-SP edges are bisected to the onset and classified by the jump of
//!   `|xi|` sampled at three refinement levels around it;
//! * SP-SP edges carry a boundary only if they contain a genuine jump of
//!   `xi`, detected either by a switch between coexisting local minima or by
//!   bisecting a suspiciously large change down to a tiny interval.
//!
//! Superradiant branches are numbered by continuity: cells joined by
//! jump-free edges share a branch, and crossing a jump towards larger `|xi|`
//! goes one branch up. Where two branches connect around the end of a
//! first-order line the seam is placed where the two sides, grown outward
//! from the line, meet; it is never emitted as a boundary.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::math::{abs, sqrt};
use crate::model::{DriveParams, GroundState, ModelParams, PhaseLabel, ZeemanSet};
use crate::solver::{minimize_driven_with, MinimaReport, SolverOptions};

/// Extrapolated order-parameter jump above which a transition is first order.
pub const J_TOL: f64 = 1e-3;

/// Sampling offset around a located onset, in units of the axis span.
pub const ONSET_STEP: f64 = 1e-7;

/// Density increase of local refinement windows.
pub const REFINE_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisKind {
    Delta,
    Epsilon,
    DriveRatio,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Delta => "delta",
            AxisKind::Epsilon => "epsilon",
            AxisKind::DriveRatio => "drive_ratio",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "delta" => Some(AxisKind::Delta),
            "epsilon" => Some(AxisKind::Epsilon),
            "drive_ratio" => Some(AxisKind::DriveRatio),
            _ => None,
        }
    }
}

/// Uniform node axis `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || !(lo < hi) {
            return Err(Error::InvalidParameter("axis range must be finite with lo < hi"));
        }
        if n < 2 {
            return Err(Error::InvalidParameter("axis needs at least 2 nodes"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Nearest node index of a coordinate (clamped).
    pub fn nearest(&self, v: f64) -> usize {
        let t = ((v - self.lo) / self.step() + 0.5).max(0.0);
        (t as usize).min(self.n - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZeemanTemplate {
    Fixed(ZeemanSet),
    /// `{-eps, 0, eps}` with `eps` taken from the x axis.
    Epsilon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlane {
    pub x_kind: AxisKind,
    pub x: Axis,
    pub nu: Axis,
    /// Used unless the x axis is `delta`.
    pub delta: f64,
    /// Used unless the x axis is `drive_ratio`.
    pub ratio: f64,
    pub zeeman: ZeemanTemplate,
    pub solver: SolverOptions,
    /// Bisect every SP-SP edge with a change above `J_TOL`, not only the
    /// suspicious ones. Used in refinement windows.
    pub exhaustive_jumps: bool,
}

impl ScanPlane {
    pub fn new(
        x_kind: AxisKind,
        x: Axis,
        nu: Axis,
        delta: f64,
        ratio: f64,
        zeeman: ZeemanTemplate,
    ) -> Result<Self> {
        let plane = Self {
            x_kind,
            x,
            nu,
            delta,
            ratio,
            zeeman,
            solver: SolverOptions::grid_only(),
            exhaustive_jumps: false,
        };
        plane.validate()?;
        Ok(plane)
    }

    pub fn validate(&self) -> Result<()> {
        Axis::new(self.x.lo, self.x.hi, self.x.n)?;
        Axis::new(self.nu.lo, self.nu.hi, self.nu.n)?;
        let epsilon_axis = self.x_kind == AxisKind::Epsilon;
        let epsilon_template = self.zeeman == ZeemanTemplate::Epsilon;
        if epsilon_axis != epsilon_template {
            return Err(Error::InvalidParameter("the epsilon template goes with the epsilon axis"));
        }
        // corners cover every parameter combination the scan can produce
        for &x in &[self.x.lo, self.x.hi] {
            for &nu in &[self.nu.lo, self.nu.hi] {
                self.params_at(x, nu)?;
            }
        }
        Ok(())
    }

    pub fn params_at(&self, x: f64, nu: f64) -> Result<(ModelParams, DriveParams)> {
        let (delta, ratio) = match self.x_kind {
            AxisKind::Delta => (x, self.ratio),
            AxisKind::DriveRatio => (self.delta, x),
            AxisKind::Epsilon => (self.delta, self.ratio),
        };
        let zeeman = match &self.zeeman {
            ZeemanTemplate::Fixed(k) => k.clone(),
            ZeemanTemplate::Epsilon => ZeemanSet::epsilon(x)?,
        };
        Ok((ModelParams::new(delta, nu, zeeman)?, DriveParams::new(ratio)?))
    }

    /// Minima at an arbitrary point; a convergence failure is returned as a
    /// flagged report.
    pub fn solve_at(&self, x: f64, nu: f64) -> Result<(MinimaReport, bool)> {
        let (p, d) = self.params_at(x, nu)?;
        match minimize_driven_with(&p, &d, &self.solver) {
            Ok(report) => Ok((report, false)),
            Err(Error::ConvergenceFailure(report)) => Ok((*report, true)),
            Err(e) => Err(e),
        }
    }

    pub(crate) fn global_at(&self, x: f64, nu: f64) -> GroundState {
        // parameters inside the validated rectangle are always valid
        self.solve_at(x, nu).map(|(r, _)| r.global).unwrap_or_else(|_| nan_state())
    }

    /// Sub-plane centred on `(x, nu)` with `REFINE_FACTOR` times the node
    /// density, covering `half_cells` parent cells on each side.
    pub fn window(&self, x: f64, nu: f64, half_cells: usize) -> Result<Self> {
        let hx = half_cells as f64 * self.x.step();
        let hn = half_cells as f64 * self.nu.step();
        let n = 2 * half_cells * REFINE_FACTOR + 1;
        let (xlo, xhi) = clip(x - hx, x + hx, self.x.lo, self.x.hi);
        let (nlo, nhi) = clip(nu - hn, nu + hn, self.nu.lo, self.nu.hi);
        let mut sub = self.clone();
        sub.x = Axis::new(xlo, xhi, n)?;
        sub.nu = Axis::new(nlo, nhi, n)?;
        sub.exhaustive_jumps = true;
        Ok(sub)
    }
}

fn clip(lo: f64, hi: f64, min: f64, max: f64) -> (f64, f64) {
    let width = hi - lo;
    if width >= max - min {
        return (min, max);
    }
    if lo < min {
        (min, min + width)
    } else if hi > max {
        (max - width, max)
    } else {
        (lo, hi)
    }
}

fn nan_state() -> GroundState {
    GroundState {
        xi: f64::NAN,
        x: f64::NAN,
        y: Vec::new(),
        energy_per_atom: f64::NAN,
        spin_x: Vec::new(),
        spin_z: Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: PhaseLabel,
    pub state: GroundState,
    /// `(xi, energy per atom)` of every local minimum, global first.
    pub minima: Vec<(f64, f64)>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionOrder {
    First,
    Second,
    Unresolved,
}

impl TransitionOrder {
    pub fn name(self) -> &'static str {
        match self {
            TransitionOrder::First => "first",
            TransitionOrder::Second => "second",
            TransitionOrder::Unresolved => "unresolved",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "first" => Some(TransitionOrder::First),
            "second" => Some(TransitionOrder::Second),
            "unresolved" => Some(TransitionOrder::Unresolved),
            _ => None,
        }
    }
}

impl fmt::Display for TransitionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    NpSp,
    SpSp,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::NpSp => "NP-SP",
            BoundaryKind::SpSp => "SP-SP",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "NP-SP" => Some(BoundaryKind::NpSp),
            "SP-SP" => Some(BoundaryKind::SpSp),
            _ => None,
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a boundary polyline ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    /// Leaves the scanned rectangle.
    Border,
    /// Stops inside the plane with nothing attached (e.g. at a QCP).
    Terminus,
    /// Continues as a boundary of another order or between other phases.
    Change,
    /// Meets two or more other boundaries; index into `PhaseMap::junctions`.
    Junction(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub kind: BoundaryKind,
    pub order: TransitionOrder,
    /// The two phases, sorted.
    pub phases: (PhaseLabel, PhaseLabel),
    pub points: Vec<(f64, f64)>,
    pub start: EndKind,
    pub end: EndKind,
}

impl Boundary {
    pub fn ends(&self) -> [(EndKind, (f64, f64)); 2] {
        [(self.start, self.points[0]), (self.end, self.points[self.points.len() - 1])]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub x: f64,
    pub nu: f64,
    /// Indices into `PhaseMap::boundaries`.
    pub incident: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    pub plane: ScanPlane,
    /// Row-major: `cells[j * n_x + i]` at `(x_i, nu_j)`.
    pub cells: Vec<Cell>,
    pub boundaries: Vec<Boundary>,
    pub junctions: Vec<Junction>,
}

impl PhaseMap {
    pub fn nx(&self) -> usize {
        self.plane.x.n
    }

    pub fn ny(&self) -> usize {
        self.plane.nu.n
    }

    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.nx() + i]
    }

    /// Label of the node nearest to `(x, nu)`.
    pub fn label_at(&self, x: f64, nu: f64) -> PhaseLabel {
        self.cell(self.plane.x.nearest(x), self.plane.nu.nearest(nu)).label
    }

    /// Every distinct phase present.
    pub fn phases(&self) -> Vec<PhaseLabel> {
        let mut out: Vec<PhaseLabel> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.label) {
                out.push(c.label);
            }
        }
        out.sort();
        out
    }

    /// Interior ends of boundaries of the given kind.
    pub fn termini(&self, kind: BoundaryKind) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for b in self.boundaries.iter().filter(|b| b.kind == kind) {
            for (end, point) in b.ends() {
                if end == EndKind::Terminus {
                    out.push(point);
                }
            }
        }
        out
    }
}

pub fn scan(plane: &ScanPlane) -> Result<PhaseMap> {
    scan_with(plane, &Serial)
}

pub fn scan_with<E: Executor>(plane: &ScanPlane, exec: &E) -> Result<PhaseMap> {
    plane.validate()?;
    let (nx, ny) = (plane.x.n, plane.nu.n);
    let evaluated = exec.map(nx * ny, |idx| {
        let (i, j) = (idx % nx, idx / nx);
        plane.solve_at(plane.x.value(i), plane.nu.value(j)).map(|(report, flagged)| {
            let minima = report.locals.iter().map(|s| (s.xi, s.energy_per_atom)).collect();
            let label = if report.global.is_normal() {
                PhaseLabel::Normal
            } else {
                PhaseLabel::Superradiant(1)
            };
            Cell { label, state: report.global, minima, flagged }
        })
    });
    let mut cells = Vec::with_capacity(nx * ny);
    for c in evaluated {
        cells.push(c?);
    }
    let grid = Grid { nx, ny };
    let jumps = find_jumps(plane, &grid, &cells, exec);
    assign_labels(&grid, &mut cells, &jumps);
    let onsets = classify_onsets(plane, &grid, &cells, exec);
    let mut points: Vec<Option<EdgePoint>> = vec![None; grid.n_edges()];
    for (e, jump) in jumps.iter().enumerate() {
        if let Some(t) = jump {
            let (a, b) = grid.edge_nodes(e);
            points[e] = Some(EdgePoint {
                at: grid.lerp(plane, a, b, *t),
                tag: Tag::new(cells[a].label, cells[b].label, TransitionOrder::First),
            });
        }
    }
    for (e, onset) in onsets {
        let (a, b) = grid.edge_nodes(e);
        points[e] = Some(EdgePoint {
            at: onset.point,
            tag: Tag::new(cells[a].label, cells[b].label, onset.order),
        });
    }
    let (boundaries, junctions) = trace(&grid, &points);
    Ok(PhaseMap { plane: plane.clone(), cells, boundaries, junctions })
}

/// Refined scan around `(x, nu)`; superradiant branch numbers are taken over
/// from the parent map by majority vote of the nearest parent nodes.
pub fn refine_with<E: Executor>(
    parent: &PhaseMap,
    x: f64,
    nu: f64,
    half_cells: usize,
    exec: &E,
) -> Result<PhaseMap> {
    let sub = parent.plane.window(x, nu, half_cells)?;
    let mut map = scan_with(&sub, exec)?;
    relabel_from(parent, &mut map);
    Ok(map)
}

pub fn refine(parent: &PhaseMap, x: f64, nu: f64, half_cells: usize) -> Result<PhaseMap> {
    refine_with(parent, x, nu, half_cells, &Serial)
}

fn relabel_from(parent: &PhaseMap, map: &mut PhaseMap) {
    let mut branches: Vec<u32> = map.cells.iter().filter_map(|c| c.label.branch()).collect();
    branches.sort_unstable();
    branches.dedup();
    let mut mapping = Vec::new();
    for &b in &branches {
        let mut votes: Vec<(u32, usize)> = Vec::new();
        for (idx, c) in map.cells.iter().enumerate() {
            if c.label.branch() != Some(b) {
                continue;
            }
            let (i, j) = (idx % map.nx(), idx / map.nx());
            let here = parent.label_at(map.plane.x.value(i), map.plane.nu.value(j));
            if let Some(pb) = here.branch() {
                match votes.iter_mut().find(|v| v.0 == pb) {
                    Some(v) => v.1 += 1,
                    None => votes.push((pb, 1)),
                }
            }
        }
        let best = votes.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|v| v.0);
        mapping.push((b, best.unwrap_or(b)));
    }
    let remap = |label: PhaseLabel| match label {
        PhaseLabel::Superradiant(b) => {
            PhaseLabel::Superradiant(mapping.iter().find(|m| m.0 == b).map_or(b, |m| m.1))
        }
        other => other,
    };
    for c in &mut map.cells {
        c.label = remap(c.label);
    }
    for boundary in &mut map.boundaries {
        let (a, b) = (remap(boundary.phases.0), remap(boundary.phases.1));
        boundary.phases = if a <= b { (a, b) } else { (b, a) };
    }
}

// ---------------------------------------------------------------------------
// grid topology

struct Grid {
    nx: usize,
    ny: usize,
}

impl Grid {
    fn n_horizontal(&self) -> usize {
        (self.nx - 1) * self.ny
    }

    fn n_edges(&self) -> usize {
        self.n_horizontal() + self.nx * (self.ny - 1)
    }

    fn n_squares(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    fn horizontal(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    fn vertical(&self, i: usize, j: usize) -> usize {
        self.n_horizontal() + j * self.nx + i
    }

    fn is_horizontal(&self, e: usize) -> bool {
        e < self.n_horizontal()
    }

    fn edge_nodes(&self, e: usize) -> (usize, usize) {
        if self.is_horizontal(e) {
            let (i, j) = (e % (self.nx - 1), e / (self.nx - 1));
            (j * self.nx + i, j * self.nx + i + 1)
        } else {
            let v = e - self.n_horizontal();
            (v, v + self.nx)
        }
    }

    /// Edges of square `(i, j)`: bottom, right, top, left.
    fn square_edges(&self, s: usize) -> [usize; 4] {
        let (i, j) = (s % (self.nx - 1), s / (self.nx - 1));
        [
            self.horizontal(i, j),
            self.vertical(i + 1, j),
            self.horizontal(i, j + 1),
            self.vertical(i, j),
        ]
    }

    /// Squares sharing edge `e` (one on the rim, two otherwise).
    fn edge_squares(&self, e: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2);
        if self.is_horizontal(e) {
            let (i, j) = (e % (self.nx - 1), e / (self.nx - 1));
            if j > 0 {
                out.push((j - 1) * (self.nx - 1) + i);
            }
            if j + 1 < self.ny {
                out.push(j * (self.nx - 1) + i);
            }
        } else {
            let v = e - self.n_horizontal();
            let (i, j) = (v % self.nx, v / self.nx);
            if i > 0 {
                out.push(j * (self.nx - 1) + i - 1);
            }
            if i + 1 < self.nx {
                out.push(j * (self.nx - 1) + i);
            }
        }
        out
    }

    /// The collinear neighbours of an edge.
    fn collinear(&self, e: usize) -> [Option<usize>; 2] {
        if self.is_horizontal(e) {
            let (i, j) = (e % (self.nx - 1), e / (self.nx - 1));
            [
                (i > 0).then(|| self.horizontal(i - 1, j)),
                (i + 2 < self.nx).then(|| self.horizontal(i + 1, j)),
            ]
        } else {
            let v = e - self.n_horizontal();
            let (i, j) = (v % self.nx, v / self.nx);
            [
                (j > 0).then(|| self.vertical(i, j - 1)),
                (j + 2 < self.ny).then(|| self.vertical(i, j + 1)),
            ]
        }
    }

    fn coords(&self, plane: &ScanPlane, node: usize) -> (f64, f64) {
        (plane.x.value(node % self.nx), plane.nu.value(node / self.nx))
    }

    fn lerp(&self, plane: &ScanPlane, a: usize, b: usize, t: f64) -> (f64, f64) {
        let (xa, na) = self.coords(plane, a);
        let (xb, nb) = self.coords(plane, b);
        (xa + t * (xb - xa), na + t * (nb - na))
    }

    fn neighbours(&self, node: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (i, j) = (node % self.nx, node / self.nx);
        let left = (i > 0).then(|| (node - 1, self.horizontal(i - 1, j)));
        let right = (i + 1 < self.nx).then(|| (node + 1, self.horizontal(i, j)));
        let down = (j > 0).then(|| (node - self.nx, self.vertical(i, j - 1)));
        let up = (j + 1 < self.ny).then(|| (node + self.nx, self.vertical(i, j)));
        [left, right, down, up].into_iter().flatten()
    }
}

// ---------------------------------------------------------------------------
// SP-SP jumps

/// Position along each SP-SP edge (0..1) of a jump in `xi`, if any.
fn find_jumps<E: Executor>(plane: &ScanPlane, grid: &Grid, cells: &[Cell], exec: &E) -> Vec<Option<f64>> {
    let n = grid.n_edges();
    let delta: Vec<f64> = (0..n)
        .map(|e| {
            let (a, b) = grid.edge_nodes(e);
            abs(cells[a].state.xi - cells[b].state.xi)
        })
        .collect();
    let mut jumps = vec![None; n];
    let mut pending = Vec::new();
    for e in 0..n {
        let (a, b) = grid.edge_nodes(e);
        if cells[a].label.is_normal() || cells[b].label.is_normal() || !(delta[e] > J_TOL) {
            continue;
        }
        if let Some(t) = branch_switch(&cells[a], &cells[b]) {
            jumps[e] = Some(t);
            continue;
        }
        let suspicious = plane.exhaustive_jumps
            || grid.collinear(e).iter().all(|nb| match nb {
                Some(nb) => delta[e] > 3.0 * delta[*nb],
                None => true,
            });
        if suspicious {
            pending.push(e);
        }
    }
    let resolved = exec.map(pending.len(), |k| {
        let (a, b) = grid.edge_nodes(pending[k]);
        resolve_jump(
            |t| {
                let (x, nu) = grid.lerp(plane, a, b, t);
                plane.global_at(x, nu).xi
            },
            cells[a].state.xi,
            cells[b].state.xi,
        )
    });
    for (k, r) in resolved.into_iter().enumerate() {
        if let Some((t, _)) = r {
            jumps[pending[k]] = Some(t);
        }
    }
    jumps
}

/// Detects the global minimum switching between two coexisting local minima
/// along an edge; returns the energy-crossing estimate of the switch.
fn branch_switch(a: &Cell, b: &Cell) -> Option<f64> {
    if a.minima.len() < 2 || b.minima.len() < 2 {
        return None;
    }
    let nearest = |list: &[(f64, f64)], xi: f64| -> usize {
        let mut best = 0;
        for (k, m) in list.iter().enumerate() {
            if abs(m.0 - xi) < abs(list[best].0 - xi) {
                best = k;
            }
        }
        best
    };
    let ga = a.minima[0];
    let gb = b.minima[0];
    let b_of_a = nearest(&b.minima, ga.0);
    let a_of_b = nearest(&a.minima, gb.0);
    if b_of_a == 0 || a_of_b == 0 {
        return None;
    }
    // energy gap between the two branches at each end changes sign
    let gap_a = ga.1 - a.minima[a_of_b].1;
    let gap_b = b.minima[b_of_a].1 - gb.1;
    let t = if gap_a - gap_b != 0.0 { gap_a / (gap_a - gap_b) } else { 0.5 };
    Some(t.clamp(0.0, 1.0))
}

/// Follows the larger half-change of `xi(t)` on `[0, 1]` down to a tiny
/// interval; a remaining change above `J_TOL` is a discontinuity. Returns
/// its position and size.
pub fn resolve_jump(xi: impl Fn(f64) -> f64, xi0: f64, xi1: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (mut vlo, mut vhi) = (xi0, xi1);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        let vm = xi(mid);
        if !vm.is_finite() {
            return None;
        }
        if abs(vm - vlo) >= abs(vhi - vm) {
            hi = mid;
            vhi = vm;
        } else {
            lo = mid;
            vlo = vm;
        }
    }
    let size = abs(vhi - vlo);
    (size > J_TOL).then(|| (0.5 * (lo + hi), size))
}

// ---------------------------------------------------------------------------
// branch labels

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn assign_labels(grid: &Grid, cells: &mut [Cell], jumps: &[Option<f64>]) {
    let n = cells.len();
    let is_sp = |c: &Cell| !c.label.is_normal();
    let jump_edges: Vec<usize> = (0..jumps.len()).filter(|&e| jumps[e].is_some()).collect();

    // connected first-order lines
    let mut lines = Dsu::new(jumps.len());
    for s in 0..grid.n_squares() {
        let on: Vec<usize> = grid.square_edges(s).into_iter().filter(|&e| jumps[e].is_some()).collect();
        for w in on.windows(2) {
            lines.union(w[0], w[1]);
        }
    }

    // grow each side of each line outwards
    let mut side: Vec<Option<(usize, bool)>> = vec![None; n];
    let mut queue = VecDeque::new();
    for &e in &jump_edges {
        let (a, b) = grid.edge_nodes(e);
        let line = lines.find(e);
        let a_high = abs(cells[a].state.xi) > abs(cells[b].state.xi);
        for (node, high) in [(a, a_high), (b, !a_high)] {
            if side[node].is_none() {
                side[node] = Some((line, high));
                queue.push_back(node);
            }
        }
    }
    while let Some(node) = queue.pop_front() {
        for (nb, e) in grid.neighbours(node) {
            if side[nb].is_none() && is_sp(&cells[nb]) && jumps[e].is_none() {
                side[nb] = side[node];
                queue.push_back(nb);
            }
        }
    }

    // continuity components, cut along the seams
    let mut comps = Dsu::new(n);
    for node in 0..n {
        if !is_sp(&cells[node]) {
            continue;
        }
        for (nb, e) in grid.neighbours(node) {
            if nb < node || !is_sp(&cells[nb]) || jumps[e].is_some() {
                continue;
            }
            let seam = matches!((side[node], side[nb]), (Some(s), Some(t)) if s.0 == t.0 && s.1 != t.1);
            if !seam {
                comps.union(node, nb);
            }
        }
    }

    // levels: one up across each jump towards larger |xi|
    let mut links: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for &e in &jump_edges {
        let (a, b) = grid.edge_nodes(e);
        let (ra, rb) = (comps.find(a), comps.find(b));
        if ra == rb {
            continue;
        }
        let step = if abs(cells[b].state.xi) > abs(cells[a].state.xi) { 1 } else { -1 };
        links[ra].push((rb, step));
        links[rb].push((ra, -step));
    }
    let mut level: Vec<Option<i64>> = vec![None; n];
    for node in 0..n {
        if !is_sp(&cells[node]) {
            continue;
        }
        let root = comps.find(node);
        if level[root].is_some() {
            continue;
        }
        let mut piece = vec![root];
        level[root] = Some(0);
        let mut k = 0;
        while k < piece.len() {
            let c = piece[k];
            let here = level[c].unwrap_or(0);
            for &(nb, step) in &links[c] {
                if level[nb].is_none() {
                    level[nb] = Some(here + step);
                    piece.push(nb);
                }
            }
            k += 1;
        }
        let min = piece.iter().filter_map(|&c| level[c]).min().unwrap_or(0);
        for &c in &piece {
            level[c] = level[c].map(|l| l - min);
        }
    }
    for node in 0..n {
        if is_sp(&cells[node]) {
            let root = comps.find(node);
            cells[node].label = PhaseLabel::Superradiant(level[root].unwrap_or(0) as u32 + 1);
        }
    }
}

// ---------------------------------------------------------------------------
// NP-SP onsets

/// Classifies a 3-level refinement of an order-parameter change.
///
/// `deltas[k]` is the change of `|xi|` across the boundary sampled at
/// offsets `h / 2^k`. The jump is extrapolated to `h -> 0` assuming a
/// power-law leak `J + C h^p`; the transition is first order when the
/// extrapolated jump exceeds `J_TOL`.
pub fn classify_levels(deltas: [f64; 3]) -> Result<TransitionOrder> {
    let [d1, d2, d3] = deltas;
    if !deltas.iter().all(|d| d.is_finite() && *d >= 0.0) {
        return Err(Error::Unresolved);
    }
    let (d12, d23) = (d1 - d2, d2 - d3);
    if d1 < J_TOL {
        return Ok(TransitionOrder::Second);
    }
    if d3 > J_TOL && abs(d12) <= 0.05 * d3 && abs(d23) <= 0.05 * d3 {
        return Ok(TransitionOrder::First);
    }
    if !(d12 > 0.0 && d23 > 0.0) {
        return Err(Error::Unresolved);
    }
    let ratio = d12 / d23;
    if !(ratio > 1.0 + 1e-3) {
        return Err(Error::Unresolved);
    }
    let jump = d3 - d23 / (ratio - 1.0);
    Ok(if jump > J_TOL { TransitionOrder::First } else { TransitionOrder::Second })
}

/// Order of a transition from six states at offsets
/// `-h, -h/2, -h/4, +h/4, +h/2, +h` around it, in path order.
pub fn classify_transition(path: &[GroundState]) -> Result<TransitionOrder> {
    if path.len() != 6 {
        return Err(Error::InvalidParameter("path must hold the six refinement samples"));
    }
    let change = |a: &GroundState, b: &GroundState| abs(abs(b.xi) - abs(a.xi));
    classify_levels([change(&path[0], &path[5]), change(&path[1], &path[4]), change(&path[2], &path[3])])
}

/// Normal-to-superradiant crossing found by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    /// First superradiant point of the final bracket.
    pub point: (f64, f64),
    pub order: TransitionOrder,
    /// Change of `|xi|` across the onset at offsets `step`, `step/2`, `step/4`.
    pub deltas: [f64; 3],
}

/// Onset position and order along a segment from a normal point `a` to a
/// superradiant point `b`.
pub fn locate_onset(
    global: impl Fn(f64, f64) -> GroundState,
    a: (f64, f64),
    b: (f64, f64),
    step: f64,
) -> Onset {
    let at = |t: f64| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (x, nu) = at(mid);
        if global(x, nu).is_normal() {
            lo = mid;
        } else {
            hi = mid;
        }
        let p = at(hi);
        let q = at(lo);
        if abs(p.0 - q.0) + abs(p.1 - q.1) <= 4.0 * f64::EPSILON * (1.0 + abs(p.0) + abs(p.1)) {
            break;
        }
    }
    let onset = at(hi);
    let len = sqrt((b.0 - a.0) * (b.0 - a.0) + (b.1 - a.1) * (b.1 - a.1));
    let dir = ((b.0 - a.0) / len, (b.1 - a.1) / len);
    let mut path = Vec::with_capacity(6);
    for &s in &[-1.0, -0.5, -0.25, 0.25, 0.5, 1.0] {
        path.push(global(onset.0 + s * step * dir.0, onset.1 + s * step * dir.1));
    }
    let change = |i: usize, j: usize| abs(abs(path[j].xi) - abs(path[i].xi));
    let deltas = [change(0, 5), change(1, 4), change(2, 3)];
    let order = classify_levels(deltas).unwrap_or(TransitionOrder::Unresolved);
    Onset { point: onset, order, deltas }
}

fn classify_onsets<E: Executor>(
    plane: &ScanPlane,
    grid: &Grid,
    cells: &[Cell],
    exec: &E,
) -> Vec<(usize, Onset)> {
    let edges: Vec<usize> = (0..grid.n_edges())
        .filter(|&e| {
            let (a, b) = grid.edge_nodes(e);
            cells[a].label.is_normal() != cells[b].label.is_normal()
        })
        .collect();
    let results = exec.map(edges.len(), |k| {
        let e = edges[k];
        let (mut a, mut b) = grid.edge_nodes(e);
        if !cells[a].label.is_normal() {
            core::mem::swap(&mut a, &mut b);
        }
        let span = if grid.is_horizontal(e) { plane.x.span() } else { plane.nu.span() };
        locate_onset(
            |x, nu| plane.global_at(x, nu),
            grid.coords(plane, a),
            grid.coords(plane, b),
            ONSET_STEP * span,
        )
    });
    edges.into_iter().zip(results).collect()
}

// ---------------------------------------------------------------------------
// polylines

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Tag {
    phases: (PhaseLabel, PhaseLabel),
    order: TransitionOrder,
}

impl Tag {
    fn new(a: PhaseLabel, b: PhaseLabel, order: TransitionOrder) -> Self {
        Self { phases: if a <= b { (a, b) } else { (b, a) }, order }
    }

    fn kind(&self) -> BoundaryKind {
        if self.phases.0.is_normal() || self.phases.1.is_normal() {
            BoundaryKind::NpSp
        } else {
            BoundaryKind::SpSp
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct EdgePoint {
    at: (f64, f64),
    tag: Tag,
}

/// Chains boundary points through grid squares. Nodes are edge points
/// (`0..n_edges`) and junction centres (`n_edges + square`).
fn trace(grid: &Grid, points: &[Option<EdgePoint>]) -> (Vec<Boundary>, Vec<Junction>) {
    let n_edges = grid.n_edges();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_edges];
    let mut changes = vec![false; n_edges];
    let mut centres: Vec<(usize, (f64, f64))> = Vec::new();
    for s in 0..grid.n_squares() {
        let on: Vec<usize> = grid.square_edges(s).into_iter().filter(|&e| points[e].is_some()).collect();
        match on.len() {
            2 => {
                let (p, q) = (points[on[0]].unwrap(), points[on[1]].unwrap());
                if p.tag == q.tag {
                    adj[on[0]].push(on[1]);
                    adj[on[1]].push(on[0]);
                } else {
                    changes[on[0]] = true;
                    changes[on[1]] = true;
                }
            }
            3 | 4 => {
                let node = n_edges + centres.len();
                let mut cx = 0.0;
                let mut cy = 0.0;
                for &e in &on {
                    let p = points[e].unwrap().at;
                    cx += p.0;
                    cy += p.1;
                    adj[e].push(node);
                }
                let k = on.len() as f64;
                centres.push((s, (cx / k, cy / k)));
                adj.push(on.clone());
            }
            _ => {}
        }
    }
    let n_nodes = adj.len();
    let at = |v: usize| if v < n_edges { points[v].unwrap().at } else { centres[v - n_edges].1 };
    let end_kind = |v: usize| -> EndKind {
        if v >= n_edges {
            EndKind::Junction(v - n_edges)
        } else if grid.edge_squares(v).len() < 2 {
            EndKind::Border
        } else if changes[v] {
            EndKind::Change
        } else {
            EndKind::Terminus
        }
    };
    let mut junctions: Vec<Junction> =
        centres.iter().map(|c| Junction { x: c.1 .0, nu: c.1 .1, incident: Vec::new() }).collect();
    let mut used = vec![false; n_nodes];
    let mut boundaries = Vec::new();
    // an edge node is a chain end unless it has exactly two edge neighbours
    let is_end = |v: usize| v >= n_edges || adj[v].len() != 2;
    let walk = |start: usize, first: Option<usize>, used: &mut Vec<bool>| -> Option<Boundary> {
        let mut chain = vec![start];
        let mut prev = start;
        let mut cur = match first {
            Some(f) => f,
            None => {
                used[start] = true;
                let tag = points[start].unwrap().tag;
                return Some(Boundary {
                    kind: tag.kind(),
                    order: tag.order,
                    phases: tag.phases,
                    points: vec![at(start)],
                    start: end_kind(start),
                    end: end_kind(start),
                });
            }
        };
        if start < n_edges {
            used[start] = true;
        }
        loop {
            chain.push(cur);
            if cur < n_edges {
                used[cur] = true;
            }
            if is_end(cur) && cur != start {
                break;
            }
            if cur == start {
                break;
            }
            let next = adj[cur].iter().copied().find(|&v| v != prev && !(v < n_edges && used[v] && v != start));
            match next {
                Some(v) => {
                    prev = cur;
                    cur = v;
                }
                None => break,
            }
        }
        let tag_node = chain.iter().copied().find(|&v| v < n_edges)?;
        let tag = points[tag_node].unwrap().tag;
        let last = *chain.last().unwrap();
        Some(Boundary {
            kind: tag.kind(),
            order: tag.order,
            phases: tag.phases,
            points: chain.iter().map(|&v| at(v)).collect(),
            start: end_kind(start),
            end: if last == start { end_kind(start) } else { end_kind(last) },
        })
    };
    // chains from ends
    for v in 0..n_nodes {
        if v < n_edges && points[v].is_none() {
            continue;
        }
        if !is_end(v) {
            continue;
        }
        if v < n_edges && adj[v].is_empty() {
            if !used[v] {
                if let Some(b) = walk(v, None, &mut used) {
                    boundaries.push(b);
                }
            }
            continue;
        }
        if v < n_edges && used[v] {
            continue;
        }
        let firsts = adj[v].clone();
        for f in firsts {
            if f < n_edges && used[f] {
                continue;
            }
            if f >= n_edges {
                // edge node straight into a junction: a one-point stub
                if v < n_edges && adj[v].len() == 1 {
                    used[v] = true;
                    let tag = points[v].unwrap().tag;
                    boundaries.push(Boundary {
                        kind: tag.kind(),
                        order: tag.order,
                        phases: tag.phases,
                        points: vec![at(v), at(f)],
                        start: end_kind(v),
                        end: end_kind(f),
                    });
                }
                continue;
            }
            if let Some(b) = walk(v, Some(f), &mut used) {
                boundaries.push(b);
            }
        }
    }
    // closed loops
    for v in 0..n_edges {
        if points[v].is_some() && !used[v] {
            let f = adj[v][0];
            if let Some(mut b) = walk(v, Some(f), &mut used) {
                b.start = EndKind::Border;
                b.end = EndKind::Border;
                boundaries.push(b);
            }
        }
    }
    for (k, b) in boundaries.iter().enumerate() {
        for end in [b.start, b.end] {
            if let EndKind::Junction(j) = end {
                if !junctions[j].incident.contains(&k) {
                    junctions[j].incident.push(k);
                }
            }
        }
    }
    (boundaries, junctions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(xi: f64) -> GroundState {
        GroundState { xi, x: xi, y: vec![], energy_per_atom: 0.0, spin_x: vec![], spin_z: vec![] }
    }

    fn path(f: impl Fn(f64) -> f64, at: f64, h: f64) -> Vec<GroundState> {
        [-1.0, -0.5, -0.25, 0.25, 0.5, 1.0].iter().map(|s| state(f(at + s * h))).collect()
    }

    #[test]
    fn square_root_onset_is_second_order() {
        let f = |nu: f64| if nu < 2.0 { 0.0 } else { (nu - 2.0).sqrt() };
        for &h in &[1e-2, 1e-4, 1e-7] {
            assert_eq!(classify_transition(&path(f, 2.0, h)).unwrap(), TransitionOrder::Second);
        }
    }

    #[test]
    fn quartic_root_onset_is_second_order() {
        let f = |nu: f64| if nu < 2.0 { 0.0 } else { (nu - 2.0).powf(0.25) };
        assert_eq!(classify_transition(&path(f, 2.0, 1e-4)).unwrap(), TransitionOrder::Second);
    }

    #[test]
    fn step_is_first_order() {
        let f = |nu: f64| if nu < 2.0 { 0.0 } else { 0.5 };
        assert_eq!(classify_transition(&path(f, 2.0, 1e-4)).unwrap(), TransitionOrder::First);
        let leaky = |nu: f64| if nu < 2.0 { 0.0 } else { 0.01 + (nu - 2.0).sqrt() };
        assert_eq!(classify_transition(&path(leaky, 2.0, 1e-2)).unwrap(), TransitionOrder::First);
    }

    #[test]
    fn growing_change_is_unresolved() {
        assert!(matches!(classify_levels([0.1, 0.2, 0.3]), Err(Error::Unresolved)));
    }

    #[test]
    fn jump_resolution() {
        let smooth = |t: f64| 3.0 * t;
        assert!(resolve_jump(smooth, 0.0, 3.0).is_none());
        let step = |t: f64| if t < 0.3 { t } else { 1.0 + t };
        let (t, size) = resolve_jump(step, 0.0, 2.0).unwrap();
        assert!((t - 0.3).abs() < 1e-9 && (size - 1.0).abs() < 1e-6);
    }

    #[test]
    fn plane_validation() {
        let k3 = ZeemanTemplate::Fixed(ZeemanSet::k3());
        let x = Axis::new(0.1, 4.0, 10).unwrap();
        let nu = Axis::new(0.1, 6.0, 10).unwrap();
        assert!(ScanPlane::new(AxisKind::Delta, x, nu, 1.0, 0.0, k3.clone()).is_ok());
        assert!(ScanPlane::new(AxisKind::Epsilon, x, nu, 1.0, 0.0, k3.clone()).is_err());
        assert!(ScanPlane::new(AxisKind::Epsilon, x, nu, 1.0, 0.0, ZeemanTemplate::Epsilon).is_ok());
        let bad = Axis { lo: -1.0, hi: 1.0, n: 4 };
        assert!(ScanPlane::new(AxisKind::Delta, bad, nu, 1.0, 0.0, k3.clone()).is_err());
        assert!(Axis::new(1.0, 1.0, 5).is_err());
        assert!(Axis::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn single_cavity_map_has_one_second_order_line() {
        let plane = ScanPlane::new(
            AxisKind::Delta,
            Axis::new(0.5, 2.0, 12).unwrap(),
            Axis::new(0.2, 6.0, 15).unwrap(),
            1.0,
            0.0,
            ZeemanTemplate::Fixed(ZeemanSet::new(vec![0.0]).unwrap()),
        )
        .unwrap();
        let map = scan(&plane).unwrap();
        assert_eq!(map.phases(), vec![PhaseLabel::Normal, PhaseLabel::Superradiant(1)]);
        assert_eq!(map.boundaries.len(), 1);
        let b = &map.boundaries[0];
        assert_eq!((b.kind, b.order), (BoundaryKind::NpSp, TransitionOrder::Second));
        assert_eq!((b.start, b.end), (EndKind::Border, EndKind::Border));
        for &(delta, nu) in &b.points {
            // exact on vertical edges, linear between nodes elsewhere
            assert!((nu - 2.0 * delta).abs() < 0.3, "{delta} {nu}");
        }
        for (idx, c) in map.cells.iter().enumerate() {
            let (i, j) = (idx % 12, idx / 12);
            let normal = plane.nu.value(j) <= 2.0 * plane.x.value(i);
            assert_eq!(c.label.is_normal(), normal);
        }
    }
}

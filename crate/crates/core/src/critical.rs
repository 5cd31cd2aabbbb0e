//! Quantum critical points, tricritical points and Lifshitz-type triple points.
//!
//! A critical point of the undriven model satisfies `nu'(xi) = nu''(xi) = 0`
//! along the stationary coupling `nu(xi) = 2 xi / S(xi)`, with
//! `S(xi) = sum_j u_j / R_j`, `u_j = xi + k_j`, `R_j = sqrt(delta^2 + u_j^2)`.
//! Equivalently `S - xi S' = 0` and `S'' = 0`, solved here in `(delta, xi)`
//! with analytic derivatives. With drive the same cusp is followed in the
//! drive ratio on the reduced profile `P(xi)`: `P' = P'' = P''' = 0`.
//!
//! Points on the normal boundary are found column by column: the onset is
//! bisected in `nu` for each `x`, classified, and probed for a superradiant
//! jump just above it.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::math::{abs, ceil, sqrt};
use crate::model::{eval_f, DriveParams, ModelParams, PhaseLabel, ZeemanSet};
use crate::profile::Profile;
use crate::scan::{locate_onset, resolve_jump, BoundaryKind, ScanPlane, TransitionOrder, J_TOL, ONSET_STEP};
use crate::solver::{minimize_driven_with, minimize_undriven_with, SolverOptions};

/// Residual bound for accepting a critical point.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// SP-SP jump closer than this (in `nu`) to the onset counts as touching it.
pub const LP_GAP_TOL: f64 = 1e-3;
/// `J(d) / J(16 d)` below this means the first-order jump dies at the point.
pub const QTP_JUMP_RATIO: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriticalKind {
    Qcp,
    Qtp,
    Lp,
}

impl CriticalKind {
    pub fn name(self) -> &'static str {
        match self {
            CriticalKind::Qcp => "QCP",
            CriticalKind::Qtp => "QTP",
            CriticalKind::Lp => "LP",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "QCP" => Some(CriticalKind::Qcp),
            "QTP" => Some(CriticalKind::Qtp),
            "LP" => Some(CriticalKind::Lp),
            _ => None,
        }
    }
}

impl fmt::Display for CriticalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incident {
    pub kind: BoundaryKind,
    pub order: TransitionOrder,
    pub phases: (PhaseLabel, PhaseLabel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub kind: CriticalKind,
    /// Plane coordinates; `x` is `delta` for the model-level locators.
    pub x: f64,
    pub nu: f64,
    /// Order parameter at the point (`0` on the normal boundary).
    pub xi: f64,
    pub residuals: Vec<f64>,
    /// Half-width of the final bracket, or the Newton step size.
    pub uncertainty: f64,
    pub method: &'static str,
    /// Boundaries meeting at a triple point.
    pub incident: Vec<Incident>,
}

// ---------------------------------------------------------------------------
// undriven cusp

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    s: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    s_d: f64,
    s1_d: f64,
    s2_d: f64,
}

fn sums(delta: f64, xi: f64, ks: &[f64]) -> Sums {
    let d2 = delta * delta;
    let mut t = Sums::default();
    for &k in ks {
        let u = xi + k;
        let r2 = d2 + u * u;
        let r = sqrt(r2);
        let r3 = r2 * r;
        let r5 = r3 * r2;
        let r7 = r5 * r2;
        t.s += u / r;
        t.s1 += d2 / r3;
        t.s2 -= 3.0 * d2 * u / r5;
        t.s3 += 3.0 * d2 * (4.0 * u * u - d2) / r7;
        t.s_d -= u * delta / r3;
        t.s1_d += 2.0 * delta / r3 - 3.0 * d2 * delta / r5;
        t.s2_d += -6.0 * delta * u / r5 + 15.0 * d2 * delta * u / r7;
    }
    t
}

/// `(nu'(xi), nu''(xi))` along the stationary coupling.
pub fn stationary_derivatives(delta: f64, xi: f64, zeeman: &ZeemanSet) -> (f64, f64) {
    let t = sums(delta, xi, zeeman.values());
    let f1 = t.s - xi * t.s1;
    let d1 = 2.0 * f1 / (t.s * t.s);
    let d2 = 2.0 * (-xi * t.s2 * t.s - 2.0 * t.s1 * f1) / (t.s * t.s * t.s);
    (d1, d2)
}

/// Seed box for the cusp search.
#[derive(Debug, Clone, PartialEq)]
pub struct QcpSearch {
    pub delta: (f64, f64),
    pub xi: (f64, f64),
    /// Seed nodes per axis.
    pub grid: usize,
    /// Also search `xi < 0` (needed when the couplings are not symmetric).
    pub both_signs: bool,
}

impl QcpSearch {
    pub fn for_zeeman(zeeman: &ZeemanSet) -> Self {
        let k = zeeman.max_abs().max(1.0);
        Self { delta: (0.05, 5.0), xi: (0.01 * k, 3.0 * k), grid: 200, both_signs: !zeeman.is_symmetric() }
    }
}

fn newton_qcp(mut delta: f64, mut xi: f64, ks: &[f64]) -> Option<(f64, f64, f64)> {
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let t = sums(delta, xi, ks);
        let f1 = t.s - xi * t.s1;
        let f2 = t.s2;
        let (a, b) = (-xi * t.s2, t.s_d - xi * t.s1_d);
        let (c, d) = (t.s3, t.s2_d);
        let det = a * d - b * c;
        if !(abs(det) > 1e-300) {
            return None;
        }
        let mut dxi = -(d * f1 - b * f2) / det;
        let mut ddelta = -(a * f2 - c * f1) / det;
        let size = abs(dxi) + abs(ddelta);
        let limit = 0.25 * (1.0 + abs(xi) + delta);
        if size > limit {
            dxi *= limit / size;
            ddelta *= limit / size;
        }
        while delta + ddelta <= 0.0 {
            ddelta *= 0.5;
            dxi *= 0.5;
        }
        xi += dxi;
        delta += ddelta;
        let step = abs(dxi) + abs(ddelta);
        if step <= 1e-15 * (1.0 + abs(xi) + delta) || (step >= last && step < 1e-12) {
            return Some((delta, xi, step));
        }
        last = step;
    }
    None
}

/// Ground-state cusps of the undriven model: solutions of
/// `nu' = nu'' = 0` with a minimum-type quartic (`F'''' > 0`) that are the
/// global minimum at their own parameters.
pub fn locate_qcp(zeeman: &ZeemanSet, search: &QcpSearch) -> Vec<CriticalPoint> {
    let ks = zeeman.values();
    let n = search.grid.max(2);
    let node = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut ranges = vec![search.xi];
    if search.both_signs {
        ranges.push((-search.xi.1, -search.xi.0));
    }
    let mut roots: Vec<(f64, f64, f64)> = Vec::new();
    for &(xlo, xhi) in &ranges {
        let values: Vec<[f64; 2]> = (0..n * n)
            .map(|idx| {
                let t = sums(node(search.delta.0, search.delta.1, idx / n), node(xlo, xhi, idx % n), ks);
                let xi = node(xlo, xhi, idx % n);
                [t.s - xi * t.s1, t.s2]
            })
            .collect();
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let corners = [values[i * n + j], values[i * n + j + 1], values[(i + 1) * n + j], values[(i + 1) * n + j + 1]];
                let changes = |c: usize| {
                    let pos = corners.iter().any(|v| v[c] > 0.0);
                    let neg = corners.iter().any(|v| v[c] <= 0.0);
                    pos && neg
                };
                if !(changes(0) && changes(1)) {
                    continue;
                }
                let d0 = 0.5 * (node(search.delta.0, search.delta.1, i) + node(search.delta.0, search.delta.1, i + 1));
                let x0 = 0.5 * (node(xlo, xhi, j) + node(xlo, xhi, j + 1));
                if let Some(root) = newton_qcp(d0, x0, ks) {
                    if !roots.iter().any(|r| abs(r.0 - root.0) + abs(r.1 - root.1) < 1e-8) {
                        roots.push(root);
                    }
                }
            }
        }
    }
    let in_box = |delta: f64, xi: f64| {
        let margin = 0.05 * (search.delta.1 - search.delta.0);
        let ax = abs(xi);
        delta > 0.0
            && delta >= search.delta.0 - margin
            && delta <= search.delta.1 + margin
            && ax >= 0.5 * search.xi.0
            && ax <= search.xi.1 * 1.05
            && (search.both_signs || xi > 0.0)
    };
    let mut points = Vec::new();
    for (delta, xi, step) in roots {
        if !in_box(delta, xi) {
            continue;
        }
        let t = sums(delta, xi, ks);
        let nu = 2.0 * xi / t.s;
        if !(nu > 0.0 && nu.is_finite()) || !(t.s3 < 0.0) {
            continue;
        }
        let (r1, r2) = stationary_derivatives(delta, xi, zeeman);
        if !(abs(r1) < RESIDUAL_TOL && abs(r2) < RESIDUAL_TOL) {
            continue;
        }
        let Ok(p) = ModelParams::new(delta, nu, zeeman.clone()) else { continue };
        let opts = SolverOptions { grid_points: 20_000, ..SolverOptions::grid_only() };
        let global = minimize_undriven_with(&p, &opts).global.scaled_energy();
        let own = eval_f(xi, &p);
        if own > global + 1e-10 * (1.0 + abs(global)) {
            continue;
        }
        points.push(CriticalPoint {
            kind: CriticalKind::Qcp,
            x: delta,
            nu,
            xi,
            residuals: vec![r1, r2],
            uncertainty: step,
            method: "analytic-newton",
            incident: Vec::new(),
        });
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    points
}

// ---------------------------------------------------------------------------
// driven cusp

/// `P', P'', P'''` at `xi` for the given parameters (central stencils on the analytic slope).
fn profile_derivatives(xi: f64, delta: f64, nu: f64, zeeman: &ZeemanSet, ratio: f64) -> Option<[f64; 3]> {
    let p = ModelParams::new(delta, nu, zeeman.clone()).ok()?;
    let d = DriveParams::new(ratio).ok()?;
    let profile = Profile::new(&p, &d);
    let h = 2e-3 * (1.0 + abs(xi));
    let s = |k: f64| profile.slope(xi + k * h);
    let (m2, m1, c, p1, p2) = (s(-2.0), s(-1.0), s(0.0), s(1.0), s(2.0));
    let first = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let second = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
    Some([c, first, second])
}

fn newton_driven(mut u: [f64; 3], zeeman: &ZeemanSet, ratio: f64) -> Option<([f64; 3], [f64; 3], f64)> {
    let eval = |u: &[f64; 3]| profile_derivatives(u[0], u[1], u[2], zeeman, ratio);
    let mut step_size = f64::INFINITY;
    for _ in 0..60 {
        let g = eval(&u)?;
        let mut jac = [[0.0; 3]; 3];
        for v in 0..3 {
            let h = 1e-5 * (1.0 + abs(u[v]));
            let mut up = u;
            let mut dn = u;
            up[v] += h;
            dn[v] -= h;
            let (gp, gm) = (eval(&up)?, eval(&dn)?);
            for e in 0..3 {
                jac[e][v] = (gp[e] - gm[e]) / (2.0 * h);
            }
        }
        let step = solve3(jac, [-g[0], -g[1], -g[2]])?;
        let size: f64 = step.iter().map(|s| abs(*s)).sum();
        let limit = 0.2 * (1.0 + abs(u[0]) + u[1]);
        let scale = if size > limit { limit / size } else { 1.0 };
        let mut next = u;
        for v in 0..3 {
            next[v] += scale * step[v];
        }
        if !(next[1] > 0.0 && next[2] > 0.0) {
            return None;
        }
        u = next;
        let converged = size <= 1e-11 * (1.0 + abs(u[0]) + u[1] + u[2]);
        step_size = size;
        if converged {
            break;
        }
    }
    let g = eval(&u)?;
    let ok = g.iter().all(|r| abs(*r) < 1e-6) && step_size < 1e-6;
    ok.then_some((u, g, step_size))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if !(abs(d) > 1e-300) {
        return None;
    }
    let mut x = [0.0; 3];
    for c in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        x[c] = det(m) / d;
    }
    Some(x)
}

/// A cusp of the driven profile, continued from the undriven one.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenCusp {
    pub point: CriticalPoint,
    pub ratio: f64,
    /// The cusp state is the global minimum at its parameters.
    pub ground: bool,
    /// Fourth derivative of `P` at the cusp is positive.
    pub minimum_type: bool,
}

fn cusp_status(u: [f64; 3], zeeman: &ZeemanSet, ratio: f64) -> Option<(bool, bool)> {
    let (xi, delta, nu) = (u[0], u[1], u[2]);
    let h = 1e-2 * (1.0 + abs(xi));
    let third = |x: f64| profile_derivatives(x, delta, nu, zeeman, ratio).map(|g| g[2]);
    let fourth = (third(xi + h)? - third(xi - h)?) / (2.0 * h);
    let p = ModelParams::new(delta, nu, zeeman.clone()).ok()?;
    let d = DriveParams::new(ratio).ok()?;
    let own = Profile::new(&p, &d).energy_slope(xi).0;
    let opts = SolverOptions { grid_points: 20_000, ..SolverOptions::grid_only() };
    let report = match minimize_driven_with(&p, &d, &opts) {
        Ok(r) => r,
        Err(Error::ConvergenceFailure(r)) => *r,
        Err(_) => return None,
    };
    let global = report.global.scaled_energy();
    Some((own <= global + 1e-9 * (1.0 + abs(global)), fourth > 0.0))
}

/// Follows an undriven cusp to drive ratio `ratio` in steps of at most `max_step`.
pub fn continue_cusp(start: &CriticalPoint, zeeman: &ZeemanSet, ratio: f64, max_step: f64) -> Option<DrivenCusp> {
    let steps = (ceil(ratio / max_step) as usize).max(1);
    let mut u = [start.xi, start.x, start.nu];
    let mut last = None;
    for i in 1..=steps {
        let r = ratio * i as f64 / steps as f64;
        let (next, residual, step) = newton_driven(u, zeeman, r)?;
        u = next;
        last = Some((residual, step));
    }
    let (residual, step) = last?;
    let (ground, minimum_type) = cusp_status(u, zeeman, ratio)?;
    Some(DrivenCusp {
        point: CriticalPoint {
            kind: CriticalKind::Qcp,
            x: u[1],
            nu: u[2],
            xi: u[0],
            residuals: residual.to_vec(),
            uncertainty: step,
            method: "continuation-newton",
            incident: Vec::new(),
        },
        ratio,
        ground,
        minimum_type,
    })
}

/// Ground-state cusps at drive ratio `ratio`, continued from every undriven one.
pub fn locate_qcp_driven(zeeman: &ZeemanSet, ratio: f64, search: &QcpSearch) -> Vec<DrivenCusp> {
    locate_qcp(zeeman, search)
        .iter()
        .filter_map(|start| continue_cusp(start, zeeman, ratio, 0.02))
        .filter(|c| c.ground && c.minimum_type)
        .collect()
}

/// Drive ratio at which the cusp continued from `start` stops being the
/// ground state, bisected on `[lo, hi]` to `tol`. The cusp must be the
/// ground state at `lo` and not at `hi`.
pub fn merge_ratio(start: &CriticalPoint, zeeman: &ZeemanSet, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let ground = |r: f64| continue_cusp(start, zeeman, r, 0.02).is_some_and(|c| c.ground && c.minimum_type);
    if !ground(lo) || ground(hi) {
        return Err(Error::InvalidParameter("merge ratio is not bracketed"));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if ground(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// normal boundary

/// Onset of superradiance in one column of a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnOnset {
    pub x: f64,
    pub nu: f64,
    pub order: TransitionOrder,
    pub deltas: [f64; 3],
    /// Distance in `nu` from the onset to the nearest SP-SP jump above it, if any.
    pub gap: Option<f64>,
}

/// Column-wise tracer of the normal boundary of a plane, assuming the normal
/// phase sits at small `nu`.
#[derive(Debug, Clone)]
pub struct BoundaryTracer<'a> {
    pub plane: &'a ScanPlane,
    /// How far above the onset SP-SP jumps are looked for.
    pub gap_window: f64,
}

impl<'a> BoundaryTracer<'a> {
    pub fn new(plane: &'a ScanPlane) -> Self {
        Self { plane, gap_window: 2.0 * plane.nu.step() }
    }

    fn xi_at(&self, x: f64, nu: f64) -> f64 {
        abs(self.plane.global_at(x, nu).xi)
    }

    pub fn onset(&self, x: f64, with_gap: bool) -> Option<ColumnOnset> {
        let (lo, hi) = (self.plane.nu.lo, self.plane.nu.hi);
        if !self.plane.global_at(x, lo).is_normal() || self.plane.global_at(x, hi).is_normal() {
            return None;
        }
        let onset = locate_onset(|x, nu| self.plane.global_at(x, nu), (x, lo), (x, hi), ONSET_STEP * (hi - lo));
        let nu = onset.point.1;
        let gap = if with_gap { self.gap_above(x, nu) } else { None };
        Some(ColumnOnset { x, nu, order: onset.order, deltas: onset.deltas, gap })
    }

    /// Nearest SP-SP jump in `(nu_c, nu_c + gap_window]`: geometric offsets
    /// towards the onset; an interval whose change stands out against both
    /// neighbours is bisected.
    fn gap_above(&self, x: f64, nu_c: f64) -> Option<f64> {
        const LEVELS: usize = 31;
        let offsets: Vec<f64> = (0..LEVELS).map(|k| self.gap_window / (1u64 << k) as f64).collect();
        let xi: Vec<f64> = offsets.iter().map(|&o| self.xi_at(x, nu_c + o)).collect();
        // change[k] over [offsets[k + 1], offsets[k]]
        let change: Vec<f64> = (0..LEVELS - 1).map(|k| abs(xi[k] - xi[k + 1])).collect();
        let mut best = None;
        for k in 0..change.len() {
            let next = change.get(k + 1).copied().unwrap_or(0.0);
            let prev = if k > 0 { change[k - 1] } else { 0.0 };
            if !(change[k] > J_TOL && change[k] > 2.5 * next && change[k] > 1.25 * prev) {
                continue;
            }
            let (a, b) = (nu_c + offsets[k + 1], nu_c + offsets[k]);
            if let Some((t, _)) = resolve_jump(|t| self.xi_at(x, a + t * (b - a)), xi[k + 1], xi[k]) {
                best = Some(a + t * (b - a) - nu_c);
            }
        }
        best
    }

    pub fn trace<E: Executor>(&self, xs: &[f64], with_gap: bool, exec: &E) -> Vec<Option<ColumnOnset>> {
        exec.map(xs.len(), |i| self.onset(xs[i], with_gap))
    }

    fn onset_jump(&self, x: f64) -> Option<f64> {
        self.onset(x, false).map(|o| o.deltas[2])
    }
}

fn resolved(o: &Option<ColumnOnset>) -> Option<&ColumnOnset> {
    o.as_ref().filter(|o| o.order != TransitionOrder::Unresolved)
}

/// Points on the normal boundary where the onset changes from first to
/// second order and the first-order jump vanishes continuously. `xs` are the
/// columns to trace; brackets are bisected to `tol`.
pub fn locate_qtp<E: Executor>(tracer: &BoundaryTracer, xs: &[f64], tol: f64, exec: &E) -> Vec<CriticalPoint> {
    let columns = tracer.trace(xs, false, exec);
    let mut brackets = Vec::new();
    let mut prev: Option<&ColumnOnset> = None;
    for c in &columns {
        let Some(c) = resolved(c) else { continue };
        if let Some(p) = prev {
            if p.order != c.order {
                brackets.push((*p, *c));
            }
        }
        prev = Some(c);
    }
    let results = exec.map(brackets.len(), |i| qtp_in(tracer, brackets[i].0, brackets[i].1, tol));
    results.into_iter().flatten().collect()
}

fn qtp_in(tracer: &BoundaryTracer, a: ColumnOnset, b: ColumnOnset, tol: f64) -> Option<CriticalPoint> {
    let (mut first, mut second) = if a.order == TransitionOrder::First { (a, b) } else { (b, a) };
    while abs(first.x - second.x) > tol {
        let mid = tracer.onset(0.5 * (first.x + second.x), false)?;
        match mid.order {
            TransitionOrder::First => first = mid,
            TransitionOrder::Second => second = mid,
            TransitionOrder::Unresolved => return None,
        }
    }
    // an SP-SP line touching the boundary makes this a triple point instead
    if tracer.onset(second.x, true)?.gap.is_some_and(|g| g < tracer.gap_window) {
        return None;
    }
    let width = abs(first.x - second.x);
    let dir = if first.x > second.x { 1.0 } else { -1.0 };
    let axis = &tracer.plane.x;
    // the finest onset stencil has a resolution floor, so the reference jump
    // sits at least one column away however tight the bracket
    let reach = (16.0 * width).max(abs(axis.step()));
    let far_x = (first.x + dir * reach).clamp(axis.lo.min(axis.hi), axis.hi.max(axis.lo));
    let far = tracer.onset_jump(far_x)?;
    let near = first.deltas[2];
    if !(far > 0.0) || near / far >= QTP_JUMP_RATIO {
        return None;
    }
    let x = 0.5 * (first.x + second.x);
    let nu = tracer.onset(x, false).map_or(0.5 * (first.nu + second.nu), |o| o.nu);
    Some(CriticalPoint {
        kind: CriticalKind::Qtp,
        x,
        nu,
        xi: 0.0,
        residuals: vec![width, near / far],
        uncertainty: 0.5 * width,
        method: "boundary-bisection",
        incident: Vec::new(),
    })
}

/// Points where an SP-SP first-order line ends on the normal boundary, so
/// that `NP`, `SP-I` and `SP-II` meet. Requires the incident orders to be
/// two first-order lines and one second-order line, or one first-order and
/// two second-order lines.
pub fn locate_lp<E: Executor>(tracer: &BoundaryTracer, xs: &[f64], tol: f64, exec: &E) -> Vec<CriticalPoint> {
    let columns = tracer.trace(xs, true, exec);
    let mut brackets = Vec::new();
    let mut prev: Option<&ColumnOnset> = None;
    for c in columns.iter().flatten() {
        if let Some(p) = prev {
            if p.gap.is_some() != c.gap.is_some() {
                brackets.push((*p, *c));
            }
        }
        prev = Some(c);
    }
    let results = exec.map(brackets.len(), |i| lp_in(tracer, brackets[i].0, brackets[i].1, tol));
    results.into_iter().flatten().collect()
}

fn lp_in(tracer: &BoundaryTracer, a: ColumnOnset, b: ColumnOnset, tol: f64) -> Option<CriticalPoint> {
    let (mut with, mut without) = if a.gap.is_some() { (a, b) } else { (b, a) };
    while abs(with.x - without.x) > tol {
        let mid = tracer.onset(0.5 * (with.x + without.x), true)?;
        if mid.gap.is_some() {
            with = mid;
        } else {
            without = mid;
        }
    }
    let gap = with.gap?;
    if !(gap < LP_GAP_TOL) {
        return None;
    }
    // orders are read at the original columns: close to the point the
    // onset stencil straddles the SP-SP jump
    let (side_with, side_without) = if a.gap.is_some() { (a, b) } else { (b, a) };
    let (with_order, without_order) = (side_with.order, side_without.order);
    let orders = [TransitionOrder::First, with_order, without_order];
    if orders.contains(&TransitionOrder::Unresolved) || orders.iter().all(|o| *o == TransitionOrder::First) {
        return None;
    }
    let np = PhaseLabel::Normal;
    let (sp1, sp2) = (PhaseLabel::Superradiant(1), PhaseLabel::Superradiant(2));
    let width = abs(with.x - without.x);
    Some(CriticalPoint {
        kind: CriticalKind::Lp,
        x: with.x,
        nu: with.nu,
        xi: 0.0,
        residuals: vec![width, gap],
        uncertainty: 0.5 * width + gap,
        method: "boundary-gap",
        incident: vec![
            Incident { kind: BoundaryKind::SpSp, order: TransitionOrder::First, phases: (sp1, sp2) },
            Incident { kind: BoundaryKind::NpSp, order: with_order, phases: (np, sp1) },
            Incident { kind: BoundaryKind::NpSp, order: without_order, phases: (np, sp2) },
        ],
    })
}

/// Every node column of the plane.
pub fn plane_columns(plane: &ScanPlane) -> Vec<f64> {
    (0..plane.x.n).map(|i| plane.x.value(i)).collect()
}

/// `locate_lp` over every node column, serially.
pub fn locate_lp_in_plane(plane: &ScanPlane, tol: f64) -> Vec<CriticalPoint> {
    locate_lp(&BoundaryTracer::new(plane), &plane_columns(plane), tol, &Serial)
}

/// `locate_qtp` over every node column, serially.
pub fn locate_qtp_in_plane(plane: &ScanPlane, tol: f64) -> Vec<CriticalPoint> {
    locate_qtp(&BoundaryTracer::new(plane), &plane_columns(plane), tol, &Serial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{Axis, AxisKind, ZeemanTemplate};

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let k = ZeemanSet::k3();
        let nu = |d: f64, x: f64| crate::model::eval_nu_stationary(d, x, &k).unwrap();
        for &(d, x) in &[(0.7, 1.1), (1.3, 0.4), (0.2, 2.0)] {
            let (d1, d2) = stationary_derivatives(d, x, &k);
            let h = 1e-4;
            let fd1 = (nu(d, x + h) - nu(d, x - h)) / (2.0 * h);
            let fd2 = (nu(d, x + h) - 2.0 * nu(d, x) + nu(d, x - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-7, "{d1} {fd1}");
            assert!((d2 - fd2).abs() < 1e-5, "{d2} {fd2}");
            let t = sums(d, x, k.values());
            let ts = |dd: f64| sums(dd, x, k.values());
            let fd = |f: fn(&Sums) -> f64| (f(&ts(d + h)) - f(&ts(d - h))) / (2.0 * h);
            assert!((t.s_d - fd(|s| s.s)).abs() < 1e-7);
            assert!((t.s1_d - fd(|s| s.s1)).abs() < 1e-7);
            assert!((t.s2_d - fd(|s| s.s2)).abs() < 1e-6);
        }
    }

    #[test]
    fn single_cavity_has_no_cusp() {
        let k = ZeemanSet::new(vec![0.0]).unwrap();
        let search = QcpSearch { grid: 60, ..QcpSearch::for_zeeman(&k) };
        assert!(locate_qcp(&k, &search).is_empty());
    }

    #[test]
    fn three_cavity_cusp() {
        let k = ZeemanSet::k3();
        let search = QcpSearch { grid: 80, ..QcpSearch::for_zeeman(&k) };
        let points = locate_qcp(&k, &search);
        assert_eq!(points.len(), 1);
        let q = &points[0];
        assert!((q.x - 0.715).abs() < 2e-3 && (q.nu - 1.139).abs() < 2e-3, "{q:?}");
    }

    #[test]
    fn zero_ratio_continuation_is_identity() {
        let k = ZeemanSet::k3();
        let search = QcpSearch { grid: 80, ..QcpSearch::for_zeeman(&k) };
        let q = locate_qcp(&k, &search).remove(0);
        let c = continue_cusp(&q, &k, 1e-9, 0.02).unwrap();
        assert!((c.point.x - q.x).abs() < 1e-6 && (c.point.nu - q.nu).abs() < 1e-6);
        assert!(c.ground && c.minimum_type);
    }

    #[test]
    fn single_cavity_boundary_has_no_special_points() {
        let plane = ScanPlane::new(
            AxisKind::Delta,
            Axis::new(0.2, 1.0, 5).unwrap(),
            Axis::new(0.1, 3.0, 20).unwrap(),
            1.0,
            0.0,
            ZeemanTemplate::Fixed(ZeemanSet::new(vec![0.0]).unwrap()),
        )
        .unwrap();
        let tracer = BoundaryTracer::new(&plane);
        let columns = tracer.trace(&plane_columns(&plane), true, &Serial);
        for c in columns.iter().map(|c| c.unwrap()) {
            assert!((c.nu - 2.0 * c.x).abs() < 1e-9);
            assert_eq!(c.order, TransitionOrder::Second);
            assert!(c.gap.is_none());
        }
        assert!(locate_qtp_in_plane(&plane, 1e-3).is_empty());
        assert!(locate_lp_in_plane(&plane, 1e-3).is_empty());
    }
}

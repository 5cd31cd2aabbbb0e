//! Ground-state search.
//!
//! Both solvers share a one-dimensional engine: the (reduced) energy is
//! scanned on a uniform amplitude grid, every `-` to `+` sign change of its
//! slope is bisected to machine precision, and the spin optimum is attached.
//! The driven solver additionally runs damped-Newton descents in the full
//! `(X, Y_1..Y_M)` space from structured and quasi-random starts; minima
//! found there are merged with the grid minima.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Square};
use crate::math::{abs, sqrt};
use crate::model::{
    gradient_into, x_from_xi, xi_from_x, DriveParams, GroundState, ModelParams, XI_TOL, Y_MAX,
};
use crate::profile::Profile;
use crate::sequence::Kronecker;

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Two minima closer than this in `xi` and in every `Y_j` are the same.
pub const DEDUP_TOL: f64 = 1e-6;

/// Gradient-norm target for full-space descents.
pub const GRADIENT_TOL: f64 = 1e-9;

/// Keeps descents away from `|Y| = sqrt 2`, where `dY sqrt(2 - Y^2)` diverges.
const DESCENT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Uniform grid size over `[-xi_max, xi_max]`.
    pub grid_points: usize,
    /// Quasi-random full-space starts (driven solver only).
    pub random_starts: usize,
    /// Adds the `Y = 0`, `Y = sign(-k)` and undriven-minimiser starts.
    pub structured_starts: bool,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_points: 4000,
            random_starts: 64,
            structured_starts: true,
            seed: DEFAULT_SEED,
            max_iterations: 200,
        }
    }
}

impl SolverOptions {
    /// Grid search only, for dense sweeps and bisections.
    pub fn grid_only() -> Self {
        Self { random_starts: 0, structured_starts: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaReport {
    pub global: GroundState,
    /// Sorted by energy; `locals[0] == global`.
    pub locals: Vec<GroundState>,
    pub n_starts: usize,
    pub converged_fraction: f64,
}

impl MinimaReport {
    /// Local minima that are superradiant (`|xi| > XI_TOL`) with `xi >= 0`
    /// whenever the mirror image is also present.
    pub fn superradiant(&self) -> impl Iterator<Item = &GroundState> {
        self.locals.iter().filter(|s| !s.is_normal())
    }
}

/// Half-width of the amplitude window. `F'(xi) > 0` beyond it.
pub fn xi_max(p: &ModelParams, d: &DriveParams) -> f64 {
    let m = p.cavities() as f64;
    let base = p.zeeman.max_abs() + p.nu * m + 10.0;
    if d.is_undriven() {
        return base;
    }
    // |D'| <= delta (2r/g) max|J1|
    let field_slope = p.delta * 2.0 * d.ratio / p.g() * 0.582;
    let bound = 0.5 * p.nu * m * (1.0 + field_slope) + 1.0;
    if bound > base {
        bound
    } else {
        base
    }
}

/// Global and local minima of `F(xi)`.
pub fn minimize_undriven(p: &ModelParams) -> MinimaReport {
    minimize_undriven_with(p, &SolverOptions::default())
}

pub fn minimize_undriven_with(p: &ModelParams, opts: &SolverOptions) -> MinimaReport {
    grid_minima(&Profile::new(p, &DriveParams::UNDRIVEN), opts.grid_points)
}

/// Global and local minima of `e(X, Y)`.
pub fn minimize_driven(p: &ModelParams, d: &DriveParams) -> Result<MinimaReport> {
    minimize_driven_with(p, d, &SolverOptions::default())
}

pub fn minimize_driven_with(
    p: &ModelParams,
    d: &DriveParams,
    opts: &SolverOptions,
) -> Result<MinimaReport> {
    let profile = Profile::new(p, d);
    let mut report = grid_minima(&profile, opts.grid_points);
    let starts = full_space_starts(p, d, opts, &report);
    if starts.is_empty() {
        return Ok(report);
    }
    let x_limit = x_from_xi(xi_max(p, d), p);
    let mut converged = 0usize;
    let mut found = Vec::new();
    for start in &starts {
        if let Some(point) = descend(start, p, d, x_limit, opts.max_iterations) {
            converged += 1;
            found.push(snap_to_profile(&profile, point));
        }
    }
    let mut locals = core::mem::take(&mut report.locals);
    for state in found {
        insert_unique(&mut locals, state);
    }
    sort_by_energy(&mut locals);
    let fraction = converged as f64 / starts.len() as f64;
    let report = MinimaReport {
        global: locals[0].clone(),
        locals,
        n_starts: starts.len(),
        converged_fraction: fraction,
    };
    if fraction < 0.5 {
        return Err(Error::ConvergenceFailure(alloc::boxed::Box::new(report)));
    }
    Ok(report)
}

/// Minima of the reduced functional only.
pub fn minimize_profile(p: &ModelParams, d: &DriveParams, grid_points: usize) -> MinimaReport {
    grid_minima(&Profile::new(p, d), grid_points)
}

/// Bisects a `-` to `+` slope bracket to machine precision.
pub(crate) fn bisect_slope(slope: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut s_lo = slope(lo);
    let mut s_hi = slope(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = slope(mid);
        if s < 0.0 {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
            s_hi = s;
        }
    }
    if abs(s_lo) < abs(s_hi) {
        lo
    } else {
        hi
    }
}

fn grid_minima(profile: &Profile<'_>, grid_points: usize) -> MinimaReport {
    let p = profile.params();
    let d = DriveParams { ratio: profile.ratio() };
    let mirror = p.zeeman.mirror();
    let limit = xi_max(p, &d);
    let n = grid_points.max(16);
    let mut roots = Vec::new();
    let (lo, count) = if mirror.is_some() { (0.0, n / 2 + 1) } else { (-limit, n) };
    let step = (limit - lo) / (count - 1) as f64;
    let mut prev_xi = lo;
    let mut prev = profile.slope(lo);
    if mirror.is_some() {
        // the slope vanishes at 0 by symmetry; its curvature decides
        if profile.curvature(0.0) >= 0.0 {
            roots.push(0.0);
            prev = 0.0;
        } else {
            prev = -1.0;
        }
    }
    let mut brackets = 0usize;
    for i in 1..count {
        let xi = lo + i as f64 * step;
        let s = profile.slope(xi);
        if prev < 0.0 && s >= 0.0 {
            brackets += 1;
            roots.push(bisect_slope(|v| profile.slope(v), prev_xi, xi));
        }
        prev = s;
        prev_xi = xi;
    }
    let mut locals: Vec<GroundState> = Vec::new();
    for &xi in &roots {
        let state = profile.state(xi);
        if let Some(partner) = &mirror {
            if abs(xi) > XI_TOL {
                let image = mirror_state(&state, partner);
                insert_unique(&mut locals, image);
            }
        }
        insert_unique(&mut locals, state);
    }
    if locals.is_empty() {
        // unreachable for valid parameters (coercive functional), kept total
        locals.push(profile.state(0.0));
    }
    sort_by_energy(&mut locals);
    MinimaReport { global: locals[0].clone(), locals, n_starts: brackets, converged_fraction: 1.0 }
}

fn mirror_state(state: &GroundState, partner: &[usize]) -> GroundState {
    let m = partner.len();
    let mut y = vec![0.0; m];
    let mut spin_x = vec![0.0; m];
    let mut spin_z = vec![0.0; m];
    for j in 0..m {
        y[partner[j]] = -state.y[j];
        spin_x[partner[j]] = -state.spin_x[j];
        spin_z[partner[j]] = state.spin_z[j];
    }
    GroundState { xi: -state.xi, x: -state.x, y, energy_per_atom: state.energy_per_atom, spin_x, spin_z }
}

fn same_minimum(a: &GroundState, b: &GroundState) -> bool {
    abs(a.xi - b.xi) < DEDUP_TOL && a.y.iter().zip(&b.y).all(|(u, v)| abs(u - v) < DEDUP_TOL)
}

fn insert_unique(list: &mut Vec<GroundState>, state: GroundState) {
    if !list.iter().any(|s| same_minimum(s, &state)) {
        list.push(state);
    }
}

/// Ascending energy; exact ties prefer the larger `xi`, which makes the
/// `xi >= 0` mirror image the reported global minimum.
fn sort_by_energy(list: &mut [GroundState]) {
    list.sort_by(|a, b| {
        a.energy_per_atom.total_cmp(&b.energy_per_atom).then(b.xi.total_cmp(&a.xi))
    });
}

fn full_space_starts(
    p: &ModelParams,
    d: &DriveParams,
    opts: &SolverOptions,
    grid: &MinimaReport,
) -> Vec<Vec<f64>> {
    let m = p.cavities();
    let mut starts = Vec::new();
    if opts.structured_starts {
        let undriven = if d.is_undriven() {
            grid.global.clone()
        } else {
            minimize_undriven_with(p, &SolverOptions::grid_only()).global
        };
        let mut zero = vec![0.0; m + 1];
        zero[0] = 0.0;
        starts.push(zero);
        let mut aligned = vec![0.0; m + 1];
        for (j, &k) in p.zeeman.values().iter().enumerate() {
            aligned[j + 1] = if k > 0.0 {
                -1.0
            } else if k < 0.0 {
                1.0
            } else {
                0.0
            };
        }
        aligned[0] = undriven.x;
        starts.push(aligned);
        let mut from_undriven = vec![undriven.x];
        from_undriven.extend(undriven.y.iter().map(|v| v.clamp(-1.3, 1.3)));
        starts.push(from_undriven);
    }
    if opts.random_starts > 0 {
        let x_limit = x_from_xi(xi_max(p, d), p);
        // most minima sit at |xi| of order max|k| + sqrt(nu M); sample that window
        let x_window = x_from_xi(p.zeeman.max_abs() + 2.0 * sqrt(p.nu * m as f64) + 1.0, p).min(x_limit);
        for point in Kronecker::new(m + 1, opts.seed).take(opts.random_starts) {
            let mut start = Vec::with_capacity(m + 1);
            start.push((2.0 * point[0] - 1.0) * x_window);
            start.extend(point[1..].iter().map(|&u| (2.0 * u - 1.0) * 1.3));
            starts.push(start);
        }
    }
    starts
}

fn energy_unchecked(v: &[f64], p: &ModelParams, d: &DriveParams) -> f64 {
    crate::model::eval_e_driven(v[0], &v[1..], p, d).unwrap_or(f64::INFINITY)
}

fn gradient(v: &[f64], p: &ModelParams, d: &DriveParams, out: &mut [f64]) {
    gradient_into(v[0], &v[1..], p, d, out);
}

fn norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Central-difference Hessian of the analytic gradient.
pub(crate) fn hessian(v: &[f64], p: &ModelParams, d: &DriveParams, step: f64) -> Square {
    let n = v.len();
    let mut h = Square::zeros(n);
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut probe = v.to_vec();
    for i in 0..n {
        let hi = step * (1.0 + abs(v[i]));
        probe[i] = v[i] + hi;
        gradient(&probe, p, d, &mut plus);
        probe[i] = v[i] - hi;
        gradient(&probe, p, d, &mut minus);
        probe[i] = v[i];
        for j in 0..n {
            h.set(i, j, (plus[j] - minus[j]) / (2.0 * hi));
        }
    }
    h.symmetrize();
    h
}

fn clamp_into_box(v: &mut [f64], x_limit: f64) -> bool {
    let mut touched = false;
    let y_limit = Y_MAX - DESCENT_MARGIN;
    if abs(v[0]) > x_limit {
        v[0] = v[0].clamp(-x_limit, x_limit);
        touched = true;
    }
    for y in &mut v[1..] {
        if abs(*y) > y_limit {
            // `Y = +-sqrt 2` is the same pole for both signs: continue past it
            // on the other branch instead of stalling on the cut
            let back = (2.0 * y_limit - abs(*y)).max(0.0);
            *y = if *y > 0.0 { -back } else { back };
            touched = true;
        }
    }
    touched
}

/// Damped Newton with a Levenberg shift and Armijo backtracking.
/// Returns the converged interior point, if any.
fn descend(
    start: &[f64],
    p: &ModelParams,
    d: &DriveParams,
    x_limit: f64,
    max_iterations: usize,
) -> Option<Vec<f64>> {
    let n = start.len();
    let mut v = start.to_vec();
    clamp_into_box(&mut v, x_limit);
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut energy = energy_unchecked(&v, p, d);
    for _ in 0..max_iterations {
        gradient(&v, p, d, &mut g);
        let gnorm = norm(&g);
        if !gnorm.is_finite() {
            return None;
        }
        if gnorm < GRADIENT_TOL {
            let on_edge = abs(v[0]) >= x_limit
                || v[1..].iter().any(|y| abs(*y) >= Y_MAX - DESCENT_MARGIN);
            if on_edge {
                return None;
            }
            // reject saddles
            let h = hessian(&v, p, d, 1e-5);
            return cholesky_solve(&h, 0.0, &vec![0.0; n]).map(|_| v);
        }
        let h = hessian(&v, p, d, 1e-6);
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let scale = h.data.iter().fold(0.0_f64, |a, b| a.max(abs(*b))).max(1e-12);
        let mut shift = 0.0;
        let mut direction = None;
        for _ in 0..60 {
            if let Some(dir) = cholesky_solve(&h, shift, &rhs) {
                direction = Some(dir);
                break;
            }
            shift = if shift == 0.0 { 1e-10 * scale } else { shift * 4.0 };
        }
        let direction = direction.unwrap_or_else(|| rhs.clone());
        let slope: f64 = direction.iter().zip(&g).map(|(a, b)| a * b).sum();
        let (direction, slope) = if slope < 0.0 {
            (direction, slope)
        } else {
            (rhs.clone(), -gnorm * gnorm)
        };
        let mut t = 1.0;
        let mut accepted = false;
        let mut candidate = v.clone();
        for _ in 0..60 {
            for i in 0..n {
                candidate[i] = v[i] + t * direction[i];
            }
            clamp_into_box(&mut candidate, x_limit);
            let e = energy_unchecked(&candidate, p, d);
            // close to a minimum the energy change drops below rounding;
            // judge the step by the gradient instead
            let flat = gnorm < 1e-6 && e <= energy + 16.0 * f64::EPSILON * (1.0 + abs(energy)) && {
                gradient(&candidate, p, d, &mut trial);
                norm(&trial) < gnorm
            };
            if e <= energy + 1e-4 * t * slope || flat {
                accepted = true;
                energy = e;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // flat to rounding: accept if already nearly stationary
            if gnorm < 1e-7 {
                gradient(&v, p, d, &mut g);
                return if norm(&g) < GRADIENT_TOL { Some(v) } else { None };
            }
            return None;
        }
        core::mem::swap(&mut v, &mut candidate);
    }
    None
}

/// Replaces a descent result by the grid-engine minimum of the same basin
/// when its spins agree with the spin optimum at that amplitude.
fn snap_to_profile(profile: &Profile<'_>, point: Vec<f64>) -> GroundState {
    let p = profile.params();
    let xi = xi_from_x(point[0], p);
    let candidate = profile.state(xi);
    let consistent = candidate.y.iter().zip(&point[1..]).all(|(a, b)| abs(a - b) < 1e-4);
    if consistent {
        if let Some(root) = local_slope_root(profile, xi) {
            return profile.state(root);
        }
    }
    let y = point[1..].to_vec();
    let energy = energy_unchecked(&point, p, &DriveParams { ratio: profile.ratio() });
    GroundState::from_xy(point[0], y, energy, p)
}

fn local_slope_root(profile: &Profile<'_>, xi: f64) -> Option<f64> {
    let s0 = profile.slope(xi);
    if s0 == 0.0 {
        return Some(xi);
    }
    let mut step = 1e-9 * (1.0 + abs(xi));
    for _ in 0..40 {
        let (lo, hi) = if s0 < 0.0 { (xi, xi + step) } else { (xi - step, xi) };
        if profile.slope(lo) < 0.0 && profile.slope(hi) >= 0.0 {
            return Some(bisect_slope(|v| profile.slope(v), lo, hi));
        }
        step *= 2.0;
        if step > 1e-2 {
            break;
        }
    }
    None
}

/// Full-space gradient norm of a state.
pub fn gradient_norm(state: &GroundState, p: &ModelParams, d: &DriveParams) -> f64 {
    let mut v = vec![state.x];
    v.extend_from_slice(&state.y);
    let mut g = vec![0.0; v.len()];
    gradient(&v, p, d, &mut g);
    norm(&g)
}

/// Eigenvalues of the finite-difference Hessian of `e` at a state.
pub fn hessian_eigenvalues(state: &GroundState, p: &ModelParams, d: &DriveParams, step: f64) -> Vec<f64> {
    let mut v = vec![state.x];
    v.extend_from_slice(&state.y);
    crate::linalg::symmetric_eigenvalues(&hessian(&v, p, d, step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_f_derivs, eval_nu_stationary, ZeemanSet};

    fn single() -> ZeemanSet {
        ZeemanSet::new(vec![0.0]).unwrap()
    }

    #[test]
    fn single_cavity_below_threshold_is_normal() {
        let p = ModelParams::new(1.0, 1.0, single()).unwrap();
        let report = minimize_undriven(&p);
        assert_eq!(report.locals.len(), 1);
        assert_eq!(report.global.xi, 0.0);
    }

    #[test]
    fn single_cavity_above_threshold_has_mirror_pair() {
        let p = ModelParams::new(1.0, 4.0, single()).unwrap();
        let report = minimize_undriven(&p);
        assert_eq!(report.locals.len(), 2);
        let xi = report.global.xi;
        assert!(xi > 0.0);
        assert!((report.locals[1].xi + xi).abs() < 1e-12);
        // analytic: sqrt((nu/2)^2 - delta^2) = sqrt(3)
        assert!((xi - 3f64.sqrt()).abs() < 1e-12);
        assert!((eval_nu_stationary(1.0, xi, &single()).unwrap() - 4.0).abs() < 1e-10);
        assert!(eval_f_derivs(xi, &p).0.abs() < 1e-10);
        assert!(eval_f_derivs(xi, &p).1 > 0.0);
    }

    #[test]
    fn asymmetric_set_reports_global_as_found() {
        let p = ModelParams::new(0.7, 1.2, ZeemanSet::k4()).unwrap();
        let report = minimize_undriven(&p);
        for s in &report.locals {
            let (d1, d2) = eval_f_derivs(s.xi, &p);
            assert!(d1.abs() < 1e-10 && d2 > 0.0);
        }
        assert!(report.locals.windows(2).all(|w| w[0].energy_per_atom <= w[1].energy_per_atom));
    }

    #[test]
    fn driven_zero_ratio_matches_undriven() {
        let p = ModelParams::new(0.6, 1.4, ZeemanSet::k3()).unwrap();
        let undriven = minimize_undriven(&p);
        let driven = minimize_driven(&p, &DriveParams::UNDRIVEN).unwrap();
        assert!((undriven.global.xi - driven.global.xi).abs() < 1e-6);
        assert!(driven.converged_fraction >= 0.5);
    }

    #[test]
    fn driven_minima_are_stationary_and_stable() {
        let p = ModelParams::new(1.0, 1.3, ZeemanSet::k3()).unwrap();
        let d = DriveParams::new(0.4).unwrap();
        let report = minimize_driven(&p, &d).unwrap();
        for s in &report.locals {
            assert!(gradient_norm(s, &p, &d) < GRADIENT_TOL, "{}", gradient_norm(s, &p, &d));
            let eig = hessian_eigenvalues(s, &p, &d, 1e-5);
            assert!(eig[0] > -1e-8, "{eig:?}");
        }
    }

    #[test]
    fn deterministic_reports() {
        let p = ModelParams::new(1.0, 1.3, ZeemanSet::k3()).unwrap();
        let d = DriveParams::new(0.3).unwrap();
        let a = minimize_driven(&p, &d).unwrap();
        let b = minimize_driven(&p, &d).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn descents_pass_through_the_pole() {
        // most random starts of this strongly polarized case first run into |Y| = sqrt 2
        let p = ModelParams::new(0.15286871550254447, 2.8141680003736598, ZeemanSet::k5()).unwrap();
        let report = minimize_driven(&p, &DriveParams::UNDRIVEN).unwrap();
        assert!(report.converged_fraction > 0.9, "{}", report.converged_fraction);
        let undriven = minimize_undriven(&p).global;
        assert!((report.global.scaled_energy() - undriven.scaled_energy()).abs() < 1e-9);
    }
}

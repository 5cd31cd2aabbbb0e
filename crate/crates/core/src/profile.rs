//! Reduction of the driven functional to one variable.
//!
//! For fixed photon amplitude the cavity spins only see the local fields
//! `b_j = xi + k_j + 2 c s` (along x) and `D(xi) = delta J0(2 r xi / g)` (along z),
//! coupled through the total polarisation `s = sum_j <J_j^x>`. With
//! `c = r^2 / 4M > 0` the spin problem is convex, so each amplitude has a
//! unique spin optimum determined by a scalar fixed point
//!
//! `s + sum_j b_j(s) / sqrt(D^2 + b_j(s)^2) = 0`,
//!
//! and the scaled energy `P(xi) = 2M e` becomes
//! `xi^2/nu - sum_j sqrt(D^2 + b_j^2) - c s^2`. At zero drive `P = F`.

use alloc::vec::Vec;

use crate::bessel::bessel_j0_j1;
use crate::math::{abs, sqrt};
use crate::model::{x_from_xi, DriveParams, GroundState, ModelParams};

const TINY_FIELD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct Profile<'a> {
    params: &'a ModelParams,
    ratio: f64,
    /// `2 r / g`
    arg_scale: f64,
    /// `r^2 / 4M`
    coupling: f64,
}

/// Spin optimum at one amplitude.
#[derive(Debug, Clone)]
pub struct SpinOptimum {
    pub xi: f64,
    /// `P(xi) = 2M e`
    pub energy: f64,
    /// `dP/dxi`
    pub slope: f64,
    pub polarisation: f64,
    pub spin_x: Vec<f64>,
    pub spin_z: Vec<f64>,
}

impl<'a> Profile<'a> {
    pub fn new(params: &'a ModelParams, drive: &DriveParams) -> Self {
        let m = params.cavities() as f64;
        let r = drive.ratio;
        Self { params, ratio: r, arg_scale: 2.0 * r / params.g(), coupling: r * r / (4.0 * m) }
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// `(D, dD/dxi)`
    fn field(&self, xi: f64) -> (f64, f64) {
        if self.ratio == 0.0 {
            return (self.params.delta, 0.0);
        }
        let (j0, j1) = bessel_j0_j1(self.arg_scale * xi);
        let delta = self.params.delta;
        (delta * j0, -delta * self.arg_scale * j1)
    }

    fn polarisation(&self, xi: f64, field: f64) -> f64 {
        let d2 = field * field;
        let ks = self.params.zeeman.values();
        let residual = |s: f64| -> (f64, f64) {
            let mut h = s;
            let mut dh = 1.0;
            for &k in ks {
                let b = xi + k + 2.0 * self.coupling * s;
                let r2 = (d2 + b * b).max(TINY_FIELD);
                let r = sqrt(r2);
                h += b / r;
                dh += 2.0 * self.coupling * d2 / (r2 * r);
            }
            (h, dh)
        };
        if self.coupling == 0.0 {
            return -residual(0.0).0;
        }
        let m = ks.len() as f64;
        let (mut lo, mut hi) = (-m, m);
        let mut s = -residual(0.0).0;
        s = s.clamp(lo, hi);
        for _ in 0..100 {
            let (h, dh) = residual(s);
            if abs(h) <= 4.0 * f64::EPSILON * (1.0 + abs(s)) {
                return s;
            }
            if h > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - h / dh;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if abs(next - s) <= 1e-16 * (1.0 + abs(s)) {
                return next;
            }
            s = next;
        }
        s
    }

    /// `(P(xi), P'(xi))` without allocating.
    pub fn energy_slope(&self, xi: f64) -> (f64, f64) {
        let (field, dfield) = self.field(xi);
        let s = self.polarisation(xi, field);
        let d2 = field * field;
        let mut energy = xi * xi / self.params.nu - self.coupling * s * s;
        let mut sum_z = 0.0;
        for &k in self.params.zeeman.values() {
            let b = xi + k + 2.0 * self.coupling * s;
            let r = sqrt((d2 + b * b).max(TINY_FIELD));
            energy -= r;
            sum_z -= field / r;
        }
        (energy, 2.0 * xi / self.params.nu + s + dfield * sum_z)
    }

    pub fn slope(&self, xi: f64) -> f64 {
        self.energy_slope(xi).1
    }

    pub fn optimum(&self, xi: f64) -> SpinOptimum {
        let (field, dfield) = self.field(xi);
        let s = self.polarisation(xi, field);
        let d2 = field * field;
        let mut energy = xi * xi / self.params.nu - self.coupling * s * s;
        let mut sum_z = 0.0;
        let m = self.params.cavities();
        let mut spin_x = Vec::with_capacity(m);
        let mut spin_z = Vec::with_capacity(m);
        for &k in self.params.zeeman.values() {
            let b = xi + k + 2.0 * self.coupling * s;
            let r = sqrt((d2 + b * b).max(TINY_FIELD));
            energy -= r;
            sum_z -= field / r;
            spin_x.push(-b / r);
            spin_z.push(-field / r);
        }
        SpinOptimum {
            xi,
            energy,
            slope: 2.0 * xi / self.params.nu + s + dfield * sum_z,
            polarisation: s,
            spin_x,
            spin_z,
        }
    }

    /// Ground-state record for the spin optimum at `xi`.
    pub fn state(&self, xi: f64) -> GroundState {
        let opt = self.optimum(xi);
        let y = opt
            .spin_x
            .iter()
            .zip(&opt.spin_z)
            .map(|(&sx, &sz)| {
                let magnitude = sqrt((1.0 + sz).clamp(0.0, 2.0));
                // spin_x = -Y sqrt(2 - Y^2)
                if sx > 0.0 {
                    -magnitude
                } else {
                    magnitude
                }
            })
            .collect();
        let m = self.params.cavities() as f64;
        let mut state = GroundState::from_xy(x_from_xi(xi, self.params), y, opt.energy / (2.0 * m), self.params);
        state.xi = xi;
        state
    }

    /// `P''(xi)` by central difference of the analytic slope.
    pub fn curvature(&self, xi: f64) -> f64 {
        let h = 1e-5 * (1.0 + abs(xi));
        (self.slope(xi + h) - self.slope(xi - h)) / (2.0 * h)
    }
}

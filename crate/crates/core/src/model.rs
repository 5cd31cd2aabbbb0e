//! Domain types and the mean-field energy functionals.
//!
//! Energies use the cavity frequency as unit. Two normalisations appear:
//! the undriven functional `F(xi)` and the per-atom energy `e(X, Y)` of the
//! driven effective model. For equal photon amplitude they satisfy
//! `F = 2M e` at zero drive; only their minimisers are compared.

use alloc::vec::Vec;
use core::fmt;

use crate::bessel::{bessel_j0, bessel_j1};
use crate::error::{Error, Result};
use crate::math::{abs, sqrt};

/// `|xi|` at or below this is the normal phase.
pub const XI_TOL: f64 = 1e-6;

/// `sqrt(2)`, the edge of the cavity-variable domain.
pub const Y_MAX: f64 = core::f64::consts::SQRT_2;

/// Boundary margin for gradients of `sqrt(2 - Y^2)`.
pub const Y_MARGIN: f64 = 1e-9;

const DEGENERATE_DENOMINATOR: f64 = 1e-14;

/// Per-cavity Zeeman coefficients `k_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeemanSet {
    values: Vec<f64>,
}

impl ZeemanSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("Zeeman set needs at least one cavity"));
        }
        if values.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParameter("Zeeman coefficients must be finite"));
        }
        Ok(Self { values })
    }

    /// `{-1, 1}`
    pub fn k2() -> Self {
        Self { values: alloc::vec![-1.0, 1.0] }
    }

    /// `{-1, 0, 1}`
    pub fn k3() -> Self {
        Self { values: alloc::vec![-1.0, 0.0, 1.0] }
    }

    /// `{-1.5, -0.5, 2, 3}`
    pub fn k4() -> Self {
        Self { values: alloc::vec![-1.5, -0.5, 2.0, 3.0] }
    }

    /// `{-2, -1, 0, 1, 2}`
    pub fn k5() -> Self {
        Self { values: alloc::vec![-2.0, -1.0, 0.0, 1.0, 2.0] }
    }

    /// `{-eps, 0, eps}`
    pub fn epsilon(eps: f64) -> Result<Self> {
        Self::new(alloc::vec![-eps, 0.0, eps])
    }

    /// Looks up `K2`..`K5` by name (case-insensitive).
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "k2" | "K2" => Some(Self::k2()),
            "k3" | "K3" => Some(Self::k3()),
            "k4" | "K4" => Some(Self::k4()),
            "k5" | "K5" => Some(Self::k5()),
            _ => None,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cavity count `M`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &k| if abs(k) > m { abs(k) } else { m })
    }

    /// Involution `j -> j'` with `k_{j'} = -k_j`, if the set is symmetric under `k -> -k`.
    pub fn mirror(&self) -> Option<Vec<usize>> {
        let m = self.values.len();
        let mut partner: Vec<Option<usize>> = alloc::vec![None; m];
        for j in 0..m {
            if partner[j].is_some() {
                continue;
            }
            let target = -self.values[j];
            let found = (0..m).find(|&i| {
                partner[i].is_none() && abs(self.values[i] - target) <= 1e-12 * (1.0 + abs(target))
            })?;
            partner[j] = Some(found);
            partner[found] = Some(j);
        }
        Some(partner.into_iter().map(|p| p.unwrap_or(0)).collect())
    }

    pub fn is_symmetric(&self) -> bool {
        self.mirror().is_some()
    }
}

/// Undriven model parameters. The photon frequency is the unit of energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub delta: f64,
    pub nu: f64,
    pub zeeman: ZeemanSet,
}

impl ModelParams {
    pub fn new(delta: f64, nu: f64, zeeman: ZeemanSet) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be finite and positive"));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter("nu must be finite and positive"));
        }
        Ok(Self { delta, nu, zeeman })
    }

    /// Builds the parameters from the bare coupling, `nu = 2 g^2 / M`.
    pub fn from_coupling(delta: f64, g: f64, zeeman: ZeemanSet) -> Result<Self> {
        let nu = nu_from_g(g, zeeman.len());
        Self::new(delta, nu, zeeman)
    }

    /// Bare coupling `g = sqrt(nu M / 2)`.
    pub fn g(&self) -> f64 {
        g_from_nu(self.nu, self.cavities())
    }

    pub fn cavities(&self) -> usize {
        self.zeeman.len()
    }
}

pub fn g_from_nu(nu: f64, cavities: usize) -> f64 {
    sqrt(0.5 * nu * cavities as f64)
}

pub fn nu_from_g(g: f64, cavities: usize) -> f64 {
    2.0 * g * g / cavities as f64
}

/// Drive strength `A / Omega`; amplitude and frequency never enter separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub ratio: f64,
}

impl DriveParams {
    pub const UNDRIVEN: DriveParams = DriveParams { ratio: 0.0 };

    pub fn new(ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(Error::InvalidParameter("drive ratio must be finite and non-negative"));
        }
        Ok(Self { ratio })
    }

    pub fn is_undriven(&self) -> bool {
        self.ratio == 0.0
    }
}

/// Photon amplitude conversions `xi = 2 g X / sqrt(2M)`.
pub fn xi_from_x(x: f64, p: &ModelParams) -> f64 {
    2.0 * p.g() * x / sqrt(2.0 * p.cavities() as f64)
}

pub fn x_from_xi(xi: f64, p: &ModelParams) -> f64 {
    sqrt(2.0 * p.cavities() as f64) * xi / (2.0 * p.g())
}

/// A mean-field stationary state.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    /// Order parameter `xi`.
    pub xi: f64,
    /// Photon variable `X` of the driven functional.
    pub x: f64,
    /// Cavity variables `Y_j`.
    pub y: Vec<f64>,
    /// Energy per atom `e(X, Y)`.
    pub energy_per_atom: f64,
    /// `<J_j^x> / (N / 2M) = -Y_j sqrt(2 - Y_j^2)`.
    pub spin_x: Vec<f64>,
    /// `<J_j^z> / (N / 2M) = Y_j^2 - 1`.
    pub spin_z: Vec<f64>,
}

impl GroundState {
    pub fn from_xy(x: f64, y: Vec<f64>, energy_per_atom: f64, p: &ModelParams) -> Self {
        let spin_x = y.iter().map(|&v| -v * sqrt((2.0 - v * v).max(0.0))).collect();
        let spin_z = y.iter().map(|&v| v * v - 1.0).collect();
        Self { xi: xi_from_x(x, p), x, y, energy_per_atom, spin_x, spin_z }
    }

    /// `2M e`, which equals `F(xi)` for the undriven model.
    pub fn scaled_energy(&self) -> f64 {
        2.0 * self.y.len() as f64 * self.energy_per_atom
    }

    pub fn is_normal(&self) -> bool {
        abs(self.xi) <= XI_TOL
    }
}

/// Phase of a grid cell. Superradiant branches count from 1 (`SP-I`, weakest radiance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseLabel {
    Normal,
    Superradiant(u32),
}

impl PhaseLabel {
    pub fn is_normal(self) -> bool {
        matches!(self, PhaseLabel::Normal)
    }

    pub fn branch(self) -> Option<u32> {
        match self {
            PhaseLabel::Normal => None,
            PhaseLabel::Superradiant(b) => Some(b),
        }
    }

    /// Inverse of `Display`.
    pub fn parse(text: &str) -> Option<Self> {
        if text == "NP" {
            return Some(PhaseLabel::Normal);
        }
        let rest = text.strip_prefix("SP-")?;
        if let Some(i) = ROMAN.iter().position(|&r| r == rest) {
            return Some(PhaseLabel::Superradiant(i as u32 + 1));
        }
        rest.parse().ok().filter(|&b| b > 0).map(PhaseLabel::Superradiant)
    }
}

const ROMAN: [&str; 10] = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"];

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PhaseLabel::Normal => f.write_str("NP"),
            PhaseLabel::Superradiant(b) if (1..=10).contains(&b) => {
                write!(f, "SP-{}", ROMAN[b as usize - 1])
            }
            PhaseLabel::Superradiant(b) => write!(f, "SP-{b}"),
        }
    }
}

/// Undriven energy functional `F(xi) = xi^2/nu - sum_j sqrt(delta^2 + (xi + k_j)^2)`.
pub fn eval_f(xi: f64, p: &ModelParams) -> f64 {
    let d2 = p.delta * p.delta;
    let sum: f64 = p.zeeman.values().iter().map(|&k| sqrt(d2 + (xi + k) * (xi + k))).sum();
    xi * xi / p.nu - sum
}

/// `(F'(xi), F''(xi))`.
pub fn eval_f_derivs(xi: f64, p: &ModelParams) -> (f64, f64) {
    let d2 = p.delta * p.delta;
    let mut first = 2.0 * xi / p.nu;
    let mut second = 2.0 / p.nu;
    for &k in p.zeeman.values() {
        let u = xi + k;
        let r2 = d2 + u * u;
        let r = sqrt(r2);
        first -= u / r;
        second -= d2 / (r2 * r);
    }
    (first, second)
}

/// Coupling at which `xi` is a stationary point of `F`:
/// `nu = 2 xi / sum_j (k_j + xi) / sqrt(delta^2 + (k_j + xi)^2)`.
pub fn eval_nu_stationary(delta: f64, xi: f64, zeeman: &ZeemanSet) -> Result<f64> {
    let d2 = delta * delta;
    let denominator: f64 =
        zeeman.values().iter().map(|&k| (k + xi) / sqrt(d2 + (k + xi) * (k + xi))).sum();
    if abs(denominator) < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateDenominator { xi });
    }
    Ok(2.0 * xi / denominator)
}

fn check_domain(y: &[f64], limit: f64) -> Result<()> {
    for (index, &value) in y.iter().enumerate() {
        if !(abs(value) <= limit) {
            return Err(Error::Domain { index, value });
        }
    }
    Ok(())
}

fn check_len(y: &[f64], p: &ModelParams) -> Result<()> {
    if y.len() != p.cavities() {
        return Err(Error::InvalidParameter("Y must have one entry per cavity"));
    }
    Ok(())
}

/// Per-atom mean-field energy of the driven effective model,
///
/// `e = X^2/2M - (g X / 2M) sqrt(2/M) S - (1/2M) sum k_j w_j + ((A/W)^2 / 8M^2) S^2
///      + (delta / 2M) J0(2 (A/W) sqrt(2/M) X) sum (Y_j^2 - 1)`
///
/// with `w_j = Y_j sqrt(2 - Y_j^2)` and `S = sum w_j`.
pub fn eval_e_driven(x: f64, y: &[f64], p: &ModelParams, d: &DriveParams) -> Result<f64> {
    check_len(y, p)?;
    check_domain(y, Y_MAX)?;
    let m = p.cavities() as f64;
    let root = sqrt(2.0 / m);
    let r = d.ratio;
    let mut s = 0.0;
    let mut zeeman = 0.0;
    let mut jz = 0.0;
    for (&v, &k) in y.iter().zip(p.zeeman.values()) {
        let w = v * sqrt((2.0 - v * v).max(0.0));
        s += w;
        zeeman += k * w;
        jz += v * v - 1.0;
    }
    let bessel = bessel_j0(2.0 * r * root * x);
    Ok(x * x / (2.0 * m) - p.g() * x / (2.0 * m) * root * s - zeeman / (2.0 * m)
        + r * r / (8.0 * m * m) * s * s
        + p.delta / (2.0 * m) * bessel * jz)
}

/// Analytic gradient of [`eval_e_driven`] with respect to `(X, Y_1..Y_M)`.
pub fn eval_e_gradient(x: f64, y: &[f64], p: &ModelParams, d: &DriveParams) -> Result<Vec<f64>> {
    check_len(y, p)?;
    check_domain(y, Y_MAX - Y_MARGIN)?;
    let mut grad = alloc::vec![0.0; y.len() + 1];
    gradient_into(x, y, p, d, &mut grad);
    Ok(grad)
}

/// Gradient without domain checks; `y` must be strictly inside the domain.
pub(crate) fn gradient_into(x: f64, y: &[f64], p: &ModelParams, d: &DriveParams, out: &mut [f64]) {
    let m = p.cavities() as f64;
    let root = sqrt(2.0 / m);
    let r = d.ratio;
    let beta = 2.0 * r * root;
    let g = p.g();
    let mut s = 0.0;
    let mut jz = 0.0;
    for &v in y {
        s += v * sqrt(2.0 - v * v);
        jz += v * v - 1.0;
    }
    let j0 = bessel_j0(beta * x);
    out[0] = x / m - g / (2.0 * m) * root * s - p.delta / (2.0 * m) * beta * bessel_j1(beta * x) * jz;
    let common = -g * x / (2.0 * m) * root + r * r / (4.0 * m * m) * s;
    for (j, (&v, &k)) in y.iter().zip(p.zeeman.values()).enumerate() {
        let dw = (2.0 - 2.0 * v * v) / sqrt(2.0 - v * v);
        out[j + 1] = (common - k / (2.0 * m)) * dw + p.delta / m * j0 * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params(delta: f64, nu: f64, k: ZeemanSet) -> ModelParams {
        ModelParams::new(delta, nu, k).unwrap()
    }

    #[test]
    fn presets() {
        assert_eq!(ZeemanSet::k2().values(), &[-1.0, 1.0]);
        assert_eq!(ZeemanSet::k3().values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(ZeemanSet::k4().values(), &[-1.5, -0.5, 2.0, 3.0]);
        assert_eq!(ZeemanSet::k5().values(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(ZeemanSet::epsilon(0.7).unwrap().values(), &[-0.7, 0.0, 0.7]);
        assert!(ZeemanSet::new(vec![]).is_err());
        assert!(ZeemanSet::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn mirror_partner() {
        assert_eq!(ZeemanSet::k3().mirror(), Some(vec![2, 1, 0]));
        assert!(ZeemanSet::k5().is_symmetric());
        assert!(!ZeemanSet::k4().is_symmetric());
        assert_eq!(ZeemanSet::new(vec![0.0]).unwrap().mirror(), Some(vec![0]));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 1.0, ZeemanSet::k3()).is_err());
        assert!(ModelParams::new(1.0, -1.0, ZeemanSet::k3()).is_err());
        assert!(DriveParams::new(-0.1).is_err());
    }

    #[test]
    fn coupling_round_trip() {
        for &nu in &[1e-3, 0.5, 1.0, 2.0, 7.3] {
            let p = params(1.0, nu, ZeemanSet::k3());
            let back = ModelParams::from_coupling(1.0, p.g(), ZeemanSet::k3()).unwrap();
            assert!((back.nu - nu).abs() <= 4.0 * f64::EPSILON * nu);
        }
    }

    #[test]
    fn functional_values() {
        let p = params(1.0, 1.0, ZeemanSet::k3());
        assert!((eval_f(0.0, &p) + 1.0 + 2.0 * 2f64.sqrt()).abs() < 1e-14);
        let single = params(1.0, 1.0, ZeemanSet::new(vec![0.0]).unwrap());
        assert_eq!(eval_f(0.0, &single), -1.0);
        let p = params(1.0, 2.0, ZeemanSet::k3());
        let expected = 0.5 - (1.0 + 2f64.sqrt() + 5f64.sqrt());
        assert!((eval_f(1.0, &p) - expected).abs() < 1e-14);
    }

    #[test]
    fn functional_derivatives() {
        let single = params(1.0, 1.0, ZeemanSet::new(vec![0.0]).unwrap());
        assert_eq!(eval_f_derivs(0.0, &single), (0.0, 1.0));
        let critical = params(1.0, 2.0, ZeemanSet::new(vec![0.0]).unwrap());
        assert!(eval_f_derivs(0.0, &critical).1.abs() < 1e-15);
    }

    #[test]
    fn stationary_coupling() {
        let nu = eval_nu_stationary(1.0, 1.0, &ZeemanSet::k3()).unwrap();
        let expected = 2.0 / (0.5f64.sqrt() + 2.0 / 5f64.sqrt());
        assert!((nu - expected).abs() < 1e-14);
        assert!((nu - 1.248_803).abs() < 1e-6);
        let p = params(1.0, nu, ZeemanSet::k3());
        assert!(eval_f_derivs(1.0, &p).0.abs() < 1e-10);

        let limit = eval_nu_stationary(1.0, 1e-7, &ZeemanSet::new(vec![0.0]).unwrap()).unwrap();
        assert!((limit - 2.0).abs() < 1e-12);
        assert!(matches!(
            eval_nu_stationary(1.0, 0.0, &ZeemanSet::k3()),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn driven_energy_values() {
        let p = params(1.3, 0.8, ZeemanSet::k3());
        for &r in &[0.0, 0.4] {
            let e = eval_e_driven(0.0, &[0.0; 3], &p, &DriveParams::new(r).unwrap()).unwrap();
            assert!((e + 0.65).abs() < 1e-15);
        }
        // X = 1, Y = (1, 1, 1), g = 1, delta = 1
        let p = ModelParams::from_coupling(1.0, 1.0, ZeemanSet::k3()).unwrap();
        let e = eval_e_driven(1.0, &[1.0; 3], &p, &DriveParams::UNDRIVEN).unwrap();
        let expected = 1.0 / 6.0 - (2.0f64 / 3.0).sqrt() / 2.0;
        assert!((e - expected).abs() < 1e-15);
        assert!((e - -0.241_581_623_797_196_36).abs() < 1e-15);
        assert!(matches!(
            eval_e_driven(0.0, &[1.5, 0.0, 0.0], &p, &DriveParams::UNDRIVEN),
            Err(Error::Domain { index: 0, .. })
        ));
    }

    #[test]
    fn gradient_at_origin() {
        let p = params(1.0, 1.5, ZeemanSet::k3());
        let d = DriveParams::new(0.35).unwrap();
        let g = eval_e_gradient(0.0, &[0.0; 3], &p, &d).unwrap();
        assert!(g[0].abs() < 1e-15);
        for (j, &k) in ZeemanSet::k3().values().iter().enumerate() {
            assert!((g[j + 1] + k * 2f64.sqrt() / 6.0).abs() < 1e-15);
        }
        assert!(eval_e_gradient(0.0, &[Y_MAX, 0.0, 0.0], &p, &d).is_err());
    }

    #[test]
    fn undriven_energy_matches_functional_at_optimal_spins() {
        // spins anti-aligned with the local field (xi + k_j, delta)
        let p = params(0.9, 1.7, ZeemanSet::k4());
        for &xi in &[-1.2, 0.0, 0.4, 2.5] {
            let y: Vec<f64> = p
                .zeeman
                .values()
                .iter()
                .map(|&k| {
                    let b = xi + k;
                    let r = (p.delta * p.delta + b * b).sqrt();
                    (1.0 - p.delta / r).sqrt().copysign(b)
                })
                .collect();
            let e = eval_e_driven(x_from_xi(xi, &p), &y, &p, &DriveParams::UNDRIVEN).unwrap();
            assert!((2.0 * 4.0 * e - eval_f(xi, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_display_and_parse() {
        for label in [
            PhaseLabel::Normal,
            PhaseLabel::Superradiant(1),
            PhaseLabel::Superradiant(3),
            PhaseLabel::Superradiant(12),
        ] {
            let text = alloc::format!("{label}");
            assert_eq!(PhaseLabel::parse(&text), Some(label));
        }
        assert_eq!(alloc::format!("{}", PhaseLabel::Superradiant(2)), "SP-II");
    }
}

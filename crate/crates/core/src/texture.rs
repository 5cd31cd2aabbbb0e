//! Magnetic order of the per-cavity pseudo-spin texture `m_j = <J_j^x> / (N / 2M)`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::Result;
use crate::math::abs;
use crate::model::{DriveParams, GroundState, ModelParams};
use crate::solver::minimize_driven;

pub const TEXTURE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MagneticOrder {
    Afm,
    Fm,
    Modulated,
    Unpolarized,
}

impl MagneticOrder {
    pub fn name(self) -> &'static str {
        match self {
            MagneticOrder::Afm => "AFM",
            MagneticOrder::Fm => "FM",
            MagneticOrder::Modulated => "Modulated",
            MagneticOrder::Unpolarized => "Unpolarized",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        [MagneticOrder::Afm, MagneticOrder::Fm, MagneticOrder::Modulated, MagneticOrder::Unpolarized]
            .into_iter()
            .find(|o| o.name() == text)
    }
}

impl fmt::Display for MagneticOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// * `Unpolarized`: every `|m_j| < tol`;
/// * `AFM`: antisymmetric under cavity reversal `j -> M + 1 - j` within `tol`
///   (a middle cavity must itself be below `tol`);
/// * `FM`: every `m_j` of one sign with `|m_j| >= tol`;
/// * `Modulated`: anything else.
pub fn classify_order(m: &[f64], tol: f64) -> MagneticOrder {
    if m.iter().all(|v| abs(*v) < tol) {
        return MagneticOrder::Unpolarized;
    }
    let n = m.len();
    let antisymmetric = (0..n).all(|j| {
        let r = n - 1 - j;
        if j == r {
            abs(m[j]) < tol
        } else {
            abs(m[j] + m[r]) < tol
        }
    });
    if antisymmetric {
        return MagneticOrder::Afm;
    }
    let polarized = m.iter().all(|v| abs(*v) >= tol);
    if polarized && (m.iter().all(|v| *v > 0.0) || m.iter().all(|v| *v < 0.0)) {
        return MagneticOrder::Fm;
    }
    MagneticOrder::Modulated
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureReport {
    pub m: Vec<f64>,
    pub order: MagneticOrder,
    pub tol: f64,
    pub state: GroundState,
}

/// Texture of the global minimum (the canonical `xi >= 0` representative for
/// symmetric couplings).
pub fn texture_at(p: &ModelParams, d: &DriveParams) -> Result<TextureReport> {
    let state = minimize_driven(p, d)?.global;
    Ok(texture_of(state, TEXTURE_TOL))
}

pub fn texture_of(state: GroundState, tol: f64) -> TextureReport {
    let m = state.spin_x.clone();
    TextureReport { order: classify_order(&m, tol), m, tol, state }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ZeemanSet;

    #[test]
    fn three_cavity_patterns() {
        assert_eq!(classify_order(&[0.4, 0.0, -0.4], TEXTURE_TOL), MagneticOrder::Afm);
        assert_eq!(classify_order(&[-0.3, -0.3, -0.3], TEXTURE_TOL), MagneticOrder::Fm);
        assert_eq!(classify_order(&[-0.5, -0.1, 0.2], TEXTURE_TOL), MagneticOrder::Modulated);
        assert_eq!(classify_order(&[1e-4, -2e-4, 0.0], TEXTURE_TOL), MagneticOrder::Unpolarized);
        // a polarized middle cavity breaks the antisymmetric pattern
        assert_eq!(classify_order(&[0.4, 0.2, -0.4], TEXTURE_TOL), MagneticOrder::Modulated);
    }

    #[test]
    fn sign_flip_keeps_order() {
        for m in [[0.4, 0.0, -0.4], [-0.3, -0.2, -0.6], [0.7, 0.1, -0.2]] {
            let flipped: Vec<f64> = m.iter().map(|v| -v).collect();
            assert_eq!(classify_order(&m, TEXTURE_TOL), classify_order(&flipped, TEXTURE_TOL));
        }
    }

    #[test]
    fn normal_phase_anti_aligns_with_couplings() {
        let p = ModelParams::new(1.0, 0.3, ZeemanSet::k3()).unwrap();
        let report = texture_at(&p, &DriveParams::UNDRIVEN).unwrap();
        assert!(report.state.is_normal());
        assert_eq!(report.order, MagneticOrder::Afm);
        assert!(report.m[0] > 0.0 && report.m[2] < 0.0);
    }
}

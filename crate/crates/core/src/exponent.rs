//! Power-law fits `xi = A (nu - nu_c)^gamma` with `nu_c` fitted jointly.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, ln, log10, powf, sqrt};

pub const MIN_SAMPLES: usize = 20;
pub const MIN_DECADES: f64 = 1.5;
pub const MIN_R_SQUARED: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// `nu_c` candidates cover `hint +- half_width`, clipped below the first sample.
    pub half_width: f64,
    pub candidates: usize,
}

impl FitOptions {
    /// Bracket of two grid cells of size `cell` around the hint.
    pub fn cells(cell: f64) -> Self {
        Self { half_width: 2.0 * cell, candidates: 400 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub gamma: f64,
    /// One-sigma error of the log-log slope.
    pub gamma_err: f64,
    pub nu_c: f64,
    /// Range of `nu - nu_c` covered by the samples.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n: usize,
}

struct Line {
    slope: f64,
    slope_err: f64,
    /// `1 - r^2`
    unexplained: f64,
}

fn regress(samples: &[(f64, f64)], nu_c: f64) -> Option<Line> {
    let n = samples.len() as f64;
    let mut points = Vec::with_capacity(samples.len());
    for &(nu, xi) in samples {
        let t = nu - nu_c;
        if !(t > 0.0) {
            return None;
        }
        points.push((ln(t), ln(xi)));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|&(x, y)| (y - intercept - slope * x) * (y - intercept - slope * x)).sum();
    let slope_err = sqrt(ssr / (n - 2.0) / sxx);
    Some(Line { slope, slope_err, unexplained: ssr / syy })
}

/// Joint fit of `(gamma, nu_c)`: `nu_c` candidates on a uniform grid around
/// the hint, then golden-section refinement of the best one; the fit with
/// the largest `r^2` of `log xi` against `log(nu - nu_c)` wins (ties go to the
/// smaller `nu_c`).
pub fn fit_exponent(samples: &[(f64, f64)], nu_c_hint: f64, opts: &FitOptions) -> Result<ExponentFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: samples.len(), need: MIN_SAMPLES });
    }
    if !samples.iter().all(|&(nu, xi)| nu.is_finite() && xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter("samples need finite nu and positive xi"));
    }
    if !(opts.half_width >= 0.0) || opts.candidates < 2 {
        return Err(Error::InvalidParameter("fit bracket"));
    }
    let nu_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let nu_max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let lo = nu_c_hint - opts.half_width;
    // the closest candidate stays one part in 1e6 of the smallest offset away
    let hi = (nu_c_hint + opts.half_width).min(nu_min - 1e-6 * (nu_min - lo).max(f64::MIN_POSITIVE));
    if !(hi > lo) {
        return Err(Error::InsufficientRange { decades: 0.0 });
    }
    let score = |c: f64| regress(samples, c).map_or(f64::INFINITY, |l| l.unexplained);
    let n = opts.candidates;
    let node = |i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for i in 0..n {
        let s = score(node(i));
        if s < best_score {
            best_score = s;
            best = i;
        }
    }
    let (mut a, mut b) = (node(best.saturating_sub(1)), node((best + 1).min(n - 1)));
    let phi = 0.5 * (sqrt(5.0) - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * (1.0 + abs(a)) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = score(d);
        }
    }
    let mut nu_c = if fc <= fd { c } else { d };
    if score(nu_c) > best_score {
        nu_c = node(best);
    }
    let line = regress(samples, nu_c).ok_or(Error::InsufficientRange { decades: 0.0 })?;
    let window = (nu_min - nu_c, nu_max - nu_c);
    let decades = log10(window.1 / window.0);
    if decades < MIN_DECADES {
        return Err(Error::InsufficientRange { decades });
    }
    let r_squared = 1.0 - line.unexplained;
    if r_squared < MIN_R_SQUARED {
        return Err(Error::BadFit { r_squared });
    }
    Ok(ExponentFit { gamma: line.slope, gamma_err: line.slope_err, nu_c, window, r_squared, n: samples.len() })
}

/// `count` offsets spaced evenly in `log10` over `[lo, hi]`.
pub fn log_offsets(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (log10(lo), log10(hi));
    (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            powf(10.0, a + t * (b - a))
        })
        .collect()
}

/// `(nu_c + offset, |xi(nu_c + offset)|)` for each offset.
pub fn sample_curve(xi: impl Fn(f64) -> f64, nu_c: f64, offsets: &[f64]) -> Vec<(f64, f64)> {
    offsets.iter().map(|&o| (nu_c + o, abs(xi(nu_c + o)))).collect()
}

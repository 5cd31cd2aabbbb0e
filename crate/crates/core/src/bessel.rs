//! Bessel functions of the first kind, orders zero and one.
//!
//! Three regimes are used:
//! - `|x| <= 8`: direct power series (worst-case cancellation ~1e-14).
//! - `8 < |x| <= 60`: Miller backward recurrence normalised by
//!   `J0 + 2 * sum J_2k = 1`.
//! - `|x| > 60`: Hankel asymptotic expansion.
//!
//! All three agree with each other to better than 1e-13 at the crossovers.

use crate::math::{abs, ceil, cos, powf, sin, sqrt};
use core::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 8.0;
const MILLER_LIMIT: f64 = 60.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = abs(x);
    if ax <= SERIES_LIMIT {
        series(ax, 0)
    } else if ax <= MILLER_LIMIT {
        miller(ax).0
    } else {
        asymptotic(ax, 0)
    }
}

/// Bessel function of the first kind, order one. `J0'(x) = -J1(x)`.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = abs(x);
    let value = if ax <= SERIES_LIMIT {
        series(ax, 1)
    } else if ax <= MILLER_LIMIT {
        miller(ax).1
    } else {
        asymptotic(ax, 1)
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

/// `(J0(x), J1(x))` in one pass.
pub fn bessel_j0_j1(x: f64) -> (f64, f64) {
    let ax = abs(x);
    let (j0, j1) = if ax <= SERIES_LIMIT {
        series_pair(ax)
    } else if ax <= MILLER_LIMIT {
        miller(ax)
    } else {
        (asymptotic(ax, 0), asymptotic(ax, 1))
    };
    (j0, if x < 0.0 { -j1 } else { j1 })
}

fn series_pair(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut t1 = 0.5 * x;
    let mut j0 = term;
    let mut j1 = t1;
    let mut m = 1.0;
    loop {
        term *= q / (m * m);
        j0 += term;
        t1 *= q / (m * (m + 1.0));
        j1 += t1;
        if abs(term) <= 1e-18 * abs(j0) && abs(t1) <= 1e-18 * abs(j1) && m > 2.0 * x {
            break;
        }
        m += 1.0;
        if m > 200.0 {
            break;
        }
    }
    (j0, j1)
}

fn series(x: f64, order: u32) -> f64 {
    let q = -0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= q / (m * (m + order as f64));
        sum += term;
        if abs(term) <= 1e-18 * abs(sum) && m > 2.0 * x {
            break;
        }
        m += 1.0;
        if m > 200.0 {
            break;
        }
    }
    sum
}

/// Returns `(J0(x), J1(x))` for `x > 0` by downward recurrence.
fn miller(x: f64) -> (f64, f64) {
    let start = ceil(x + 30.0 + 10.0 * powf(x, 1.0 / 3.0)) as usize;
    let start = start + (start & 1);
    let two_over_x = 2.0 / x;
    let mut upper = 0.0_f64; // J_{n+1}
    let mut current = 1e-300_f64; // J_n
    let mut norm = 0.0;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    let mut n = start;
    while n > 0 {
        let lower = (n as f64) * two_over_x * current - upper;
        upper = current;
        current = lower;
        n -= 1;
        // current now holds J_n
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * current;
        }
        if n == 1 {
            j1 = current;
        }
        if n == 0 {
            j0 = current;
        }
        if abs(current) > 1e250 {
            current *= 1e-250;
            upper *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

fn asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * (order as f64) * (order as f64);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k(order) / x^k
    let mut previous = f64::INFINITY;
    for k in 0..40 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if abs(a) > previous {
            break;
        }
        previous = abs(a);
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if abs(a) < 1e-17 {
            break;
        }
    }
    let chi = x - (order as f64) * PI / 2.0 - FRAC_PI_4;
    sqrt(2.0 / (PI * x)) * (p * cos(chi) - q * sin(chi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent 30-term power series.
    fn series_oracle(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for m in 0..30 {
            if m > 0 {
                fact *= m as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (x / 2.0).powi(2 * m) / (fact * fact);
        }
        sum
    }

    #[test]
    fn known_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-12);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-12);
        // tabulated J0(10), J0(20), J0(50)
        assert!((bessel_j0(10.0) - (-0.245_935_764_451_348_3)).abs() < 1e-12);
        assert!((bessel_j0(20.0) - 0.167_024_664_340_583_1).abs() < 1e-12);
        assert!((bessel_j0(50.0) - 0.055_812_327_669_251_6).abs() < 1e-12);
        assert!((bessel_j0(100.0) - 0.019_985_850_304_223_1).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_power_series_up_to_eight() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!((bessel_j0(x) - series_oracle(x)).abs() < 1e-10, "x = {x}");
            x += 0.01;
        }
    }

    #[test]
    fn first_zero_by_bisection() {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if series_oracle(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 2.404_825_557_7).abs() < 1e-9);
        assert!(bessel_j0(2.404_825_557_7).abs() < 1e-9);
        assert!(bessel_j0(lo).abs() < 1e-12);
    }

    #[test]
    fn pair_matches_single_orders() {
        for k in -700..700 {
            let x = k as f64 * 0.1 + 0.013;
            let (j0, j1) = bessel_j0_j1(x);
            assert!((j0 - bessel_j0(x)).abs() < 1e-15 && (j1 - bessel_j1(x)).abs() < 1e-15, "{x} {} {}", j0 - bessel_j0(x), j1 - bessel_j1(x));
        }
    }

    #[test]
    fn even_symmetry_is_exact() {
        for &x in &[0.3, 2.7, 7.9, 8.1, 33.3, 59.0, 61.0, 120.0] {
            assert_eq!(bessel_j0(-x), bessel_j0(x));
            assert_eq!(bessel_j1(-x), -bessel_j1(x));
        }
    }

    #[test]
    fn regimes_join_smoothly() {
        for &edge in &[SERIES_LIMIT, MILLER_LIMIT] {
            let below = edge - 1e-9;
            let above = edge + 1e-9;
            // J0' = -J1, so the gap must match the local slope
            let gap0 = bessel_j0(above) - bessel_j0(below);
            assert!((gap0 + 2e-9 * bessel_j1(edge)).abs() < 1e-12, "{edge}: {gap0}");
            let gap1 = bessel_j1(above) - bessel_j1(below);
            let slope1 = bessel_j0(edge) - bessel_j1(edge) / edge;
            assert!((gap1 - 2e-9 * slope1).abs() < 1e-12, "{edge}: {gap1}");
        }
        // Miller against asymptotic away from the crossover
        for &x in &[30.0, 45.0, 55.0] {
            assert!((miller(x).0 - asymptotic(x, 0)).abs() < 1e-13);
            assert!((miller(x).1 - asymptotic(x, 1)).abs() < 1e-13);
        }
    }

    #[test]
    fn j1_is_minus_derivative_of_j0() {
        let h = 1e-5;
        let mut x = -50.0;
        while x <= 50.0 {
            let fd = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            assert!((fd + bessel_j1(x)).abs() < 1e-9, "x = {x}");
            x += 0.37;
        }
    }
}

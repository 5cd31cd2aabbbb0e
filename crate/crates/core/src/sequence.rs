//! Seeded low-discrepancy points in the unit cube (additive recurrence on
//! the generalised golden ratio, shifted by a seed-derived offset).

use alloc::vec::Vec;

use crate::math::{floor, powf};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Kronecker {
    alpha: Vec<f64>,
    offset: Vec<f64>,
    index: u64,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64) -> Self {
        // root of x^(d+1) = x + 1 by fixed-point iteration
        let mut phi = 2.0_f64;
        for _ in 0..64 {
            phi = powf(1.0 + phi, 1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|i| frac(1.0 / powf(phi, i as f64))).collect();
        let mut state = seed;
        let offset =
            (0..dim).map(|_| (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64).collect();
        Self { alpha, offset, index: 0 }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

impl Iterator for Kronecker {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        self.index += 1;
        let n = self.index as f64;
        Some(self.alpha.iter().zip(&self.offset).map(|(&a, &o)| frac(o + n * a)).collect())
    }
}

fn frac(x: f64) -> f64 {
    x - floor(x)
}

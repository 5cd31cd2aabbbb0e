//! Exact diagonalisation of the undriven model at finite `N`.
//!
//! `H = a^+ a + delta sum_j J_j^z + (g / sqrt N)(a + a^+) sum_j J_j^x + sum_j k_j J_j^x`
//!
//! in the basis `|n> (x) |j, m_1> ... |j, m_M>` with one collective spin
//! `j = N / 2M` per cavity and `n <= n_c` photons. For symmetric couplings
//! the ground state is taken from a definite sector of the parity
//! `(-1)^n prod_j (-1)^(m_j + j)` combined with the cavity mirror, so
//! `<a + a^+>` vanishes by construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_eigen;
use crate::math::{abs, sqrt};
use crate::model::ModelParams;

pub const DEFAULT_DIMENSION_GUARD: usize = 200_000;
pub const MIN_CUTOFF: usize = 8;
/// The cutoff check raises `n_c` by this much.
pub const CUTOFF_STEP: usize = 8;
pub const CUTOFF_TOL: f64 = 1e-8;
pub const RESIDUAL_TARGET: f64 = 1e-11;

const KRYLOV: usize = 100;
const RESTARTS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct EdConfig {
    /// Total atom number, a multiple of the cavity count.
    pub n_atoms: usize,
    pub photon_cutoff: usize,
    pub params: ModelParams,
    pub max_dimension: usize,
}

impl EdConfig {
    pub fn new(n_atoms: usize, photon_cutoff: usize, params: ModelParams) -> Result<Self> {
        let cfg = Self { n_atoms, photon_cutoff, params, max_dimension: DEFAULT_DIMENSION_GUARD };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.params.cavities();
        if self.n_atoms == 0 || self.n_atoms % m != 0 {
            return Err(Error::InvalidParameter("atom number must be a positive multiple of the cavity count"));
        }
        if self.photon_cutoff < MIN_CUTOFF {
            return Err(Error::InvalidParameter("photon cutoff must be at least 8"));
        }
        let dimension = self.dimension();
        if dimension > self.max_dimension {
            return Err(Error::DimensionGuard { dimension, limit: self.max_dimension });
        }
        Ok(())
    }

    /// `(N/M + 1)^M (n_c + 1)`, saturating.
    pub fn dimension(&self) -> usize {
        let per = self.n_atoms / self.params.cavities() + 1;
        let spins = (0..self.params.cavities()).try_fold(1usize, |acc, _| acc.checked_mul(per));
        spins.and_then(|s| s.checked_mul(self.photon_cutoff + 1)).unwrap_or(usize::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdResult {
    pub energy: f64,
    /// `<a^+ a>`
    pub photons: f64,
    /// `sqrt(<a^+ a> / N)`
    pub radiance: f64,
    /// `2 g sqrt(<a^+ a>) / sqrt N`, comparable with `|xi|`.
    pub photon_order: f64,
    /// `<a + a^+>`
    pub field: f64,
    /// `<J_j^x> / j`
    pub spin_x: Vec<f64>,
    /// `|H v - E v|` of the returned eigenvector.
    pub residual: f64,
    pub sector: Option<Parity>,
    /// Ground-energy change when the cutoff is raised by `CUTOFF_STEP`.
    pub cutoff_change: f64,
}

struct Basis {
    cavities: usize,
    /// `2j + 1`
    per: usize,
    spins: usize,
    cutoff: usize,
}

impl Basis {
    fn index(&self, n: usize, s: usize) -> usize {
        n * self.spins + s
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut rest = s;
        (0..self.cavities)
            .map(|_| {
                let v = rest % self.per;
                rest /= self.per;
                v
            })
            .collect()
    }

    fn spin_index(&self, levels: &[usize]) -> usize {
        levels.iter().rev().fold(0, |acc, &v| acc * self.per + v)
    }
}

struct Csr {
    start: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut sum = 0.0;
            for k in self.start[row]..self.start[row + 1] {
                sum += self.val[k] * x[self.col[k]];
            }
            *out = sum;
        }
    }
}

fn hamiltonian(basis: &Basis, p: &ModelParams, n_atoms: usize) -> Csr {
    let j = (basis.per - 1) as f64 / 2.0;
    let coupling = p.g() / sqrt(n_atoms as f64);
    let ks = p.zeeman.values();
    let dim = (basis.cutoff + 1) * basis.spins;
    let mut start = Vec::with_capacity(dim + 1);
    let mut col = Vec::new();
    let mut val = Vec::new();
    start.push(0);
    for n in 0..=basis.cutoff {
        for s in 0..basis.spins {
            let levels = basis.levels(s);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mz: f64 = levels.iter().map(|&v| v as f64 - j).sum();
            row.push((basis.index(n, s), n as f64 + p.delta * mz));
            for c in 0..basis.cavities {
                let m = levels[c] as f64 - j;
                for step in [-1i64, 1] {
                    let target = levels[c] as i64 + step;
                    if target < 0 || target >= basis.per as i64 {
                        continue;
                    }
                    let amp = 0.5 * sqrt(j * (j + 1.0) - m * (m + step as f64));
                    let mut moved = levels.clone();
                    moved[c] = target as usize;
                    let t = basis.spin_index(&moved);
                    if ks[c] != 0.0 {
                        row.push((basis.index(n, t), ks[c] * amp));
                    }
                    if n < basis.cutoff {
                        row.push((basis.index(n + 1, t), coupling * amp * sqrt((n + 1) as f64)));
                    }
                    if n > 0 {
                        row.push((basis.index(n - 1, t), coupling * amp * sqrt(n as f64)));
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                col.push(c);
                val.push(v);
            }
            start.push(col.len());
        }
    }
    Csr { start, col, val }
}

/// `(sign, partner)` of every basis state under the parity.
fn parity_map(basis: &Basis, mirror: &[usize]) -> Vec<(f64, usize)> {
    let mut map = Vec::with_capacity((basis.cutoff + 1) * basis.spins);
    for n in 0..=basis.cutoff {
        for s in 0..basis.spins {
            let levels = basis.levels(s);
            // m_j + j = level index
            let exponent = n + levels.iter().sum::<usize>();
            let sign = if exponent % 2 == 0 { 1.0 } else { -1.0 };
            let swapped: Vec<usize> = (0..basis.cavities).map(|c| levels[mirror[c]]).collect();
            map.push((sign, basis.index(n, basis.spin_index(&swapped))));
        }
    }
    map
}

fn project(v: &mut [f64], map: &[(f64, usize)], sector: Parity) {
    let factor = if sector == Parity::Even { 1.0 } else { -1.0 };
    let original = v.to_vec();
    for (i, out) in v.iter_mut().enumerate() {
        let (sign, partner) = map[i];
        *out = 0.5 * (original[i] + factor * sign * original[partner]);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = sqrt(dot(v, v));
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Lowest eigenpair by explicitly restarted Lanczos with full reorthogonalisation.
fn lowest(h: &Csr, mut v: Vec<f64>, constrain: &dyn Fn(&mut [f64])) -> Result<(f64, Vec<f64>, f64)> {
    let dim = v.len();
    let krylov = KRYLOV.min(dim);
    let mut w = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    constrain(&mut v);
    if normalize(&mut v) == 0.0 {
        return Err(Error::EigenNotConverged { residual });
    }
    for _ in 0..RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        for k in 0..krylov {
            h.apply(&basis[k], &mut w);
            constrain(&mut w);
            alpha.push(dot(&basis[k], &w));
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let norm = normalize(&mut w);
            if k + 1 == krylov || norm <= 1e-13 {
                break;
            }
            beta.push(norm);
            basis.push(w.clone());
        }
        let (values, vectors) = tridiagonal_eigen(&alpha, &beta);
        let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
        let mut ritz = vec![0.0; dim];
        for (coeff, b) in vectors[best].iter().zip(&basis) {
            ritz.iter_mut().zip(b).for_each(|(x, y)| *x += coeff * y);
        }
        constrain(&mut ritz);
        normalize(&mut ritz);
        h.apply(&ritz, &mut w);
        let rayleigh = dot(&ritz, &w);
        residual = sqrt(w.iter().zip(&ritz).map(|(hx, x)| (hx - rayleigh * x) * (hx - rayleigh * x)).sum());
        v = ritz;
        if residual < RESIDUAL_TARGET {
            return Ok((rayleigh, v, residual));
        }
    }
    Err(Error::EigenNotConverged { residual })
}

struct Solved {
    energy: f64,
    vector: Vec<f64>,
    residual: f64,
    sector: Option<Parity>,
    basis: Basis,
}

fn solve(n_atoms: usize, cutoff: usize, p: &ModelParams) -> Result<Solved> {
    let cavities = p.cavities();
    let per = n_atoms / cavities + 1;
    let spins = per.pow(cavities as u32);
    let basis = Basis { cavities, per, spins, cutoff };
    let h = hamiltonian(&basis, p, n_atoms);
    let dim = (cutoff + 1) * spins;
    let start = vec![1.0; dim];
    let Some(mirror) = p.zeeman.mirror() else {
        let (energy, vector, residual) = lowest(&h, start, &|_| {})?;
        return Ok(Solved { energy, vector, residual, sector: None, basis });
    };
    let map = parity_map(&basis, &mirror);
    let mut best: Option<Solved> = None;
    for sector in [Parity::Even, Parity::Odd] {
        let constrain = |v: &mut [f64]| project(v, &map, sector);
        let (energy, vector, residual) = lowest(&h, start.clone(), &constrain)?;
        // ties keep the even sector
        if best.as_ref().is_none_or(|b| energy < b.energy - 1e-12 * (1.0 + abs(energy))) {
            best = Some(Solved {
                energy,
                vector,
                residual,
                sector: Some(sector),
                basis: Basis { cavities, per, spins, cutoff },
            });
        }
    }
    Ok(best.unwrap())
}

/// Ground state at the configured cutoff; fails if raising the cutoff by
/// `CUTOFF_STEP` moves the energy by `CUTOFF_TOL` or more.
pub fn ed_ground_state(cfg: &EdConfig) -> Result<EdResult> {
    cfg.validate()?;
    let p = &cfg.params;
    let solved = solve(cfg.n_atoms, cfg.photon_cutoff, p)?;
    let check = solve(cfg.n_atoms, cfg.photon_cutoff + CUTOFF_STEP, p)?;
    let change = abs(check.energy - solved.energy);
    if !(change < CUTOFF_TOL) {
        return Err(Error::CutoffNotConverged { cutoff: cfg.photon_cutoff, change });
    }
    let Solved { energy, vector, residual, sector, basis } = solved;
    let j = (basis.per - 1) as f64 / 2.0;
    let mut photons = 0.0;
    let mut field = 0.0;
    let mut spin_x = vec![0.0; basis.cavities];
    for n in 0..=basis.cutoff {
        for s in 0..basis.spins {
            let amp = vector[basis.index(n, s)];
            if amp == 0.0 {
                continue;
            }
            photons += n as f64 * amp * amp;
            if n < basis.cutoff {
                field += 2.0 * sqrt((n + 1) as f64) * amp * vector[basis.index(n + 1, s)];
            }
            let levels = basis.levels(s);
            for c in 0..basis.cavities {
                if levels[c] + 1 < basis.per {
                    let m = levels[c] as f64 - j;
                    let mut up = levels.clone();
                    up[c] += 1;
                    let t = basis.spin_index(&up);
                    // <J^x> = Re <J^+>, counted once per ordered pair
                    spin_x[c] += sqrt(j * (j + 1.0) - m * (m + 1.0)) * amp * vector[basis.index(n, t)];
                }
            }
        }
    }
    spin_x.iter_mut().for_each(|v| *v /= j);
    let n = cfg.n_atoms as f64;
    Ok(EdResult {
        energy,
        photons,
        radiance: sqrt(photons / n),
        photon_order: 2.0 * p.g() * sqrt(photons / n),
        field,
        spin_x,
        residual,
        sector,
        cutoff_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ZeemanSet;

    #[test]
    fn guards() {
        let p = ModelParams::new(1.0, 1.0, ZeemanSet::k3()).unwrap();
        assert!(matches!(EdConfig::new(10, 20, p.clone()), Err(Error::InvalidParameter(_))));
        assert!(matches!(EdConfig::new(12, 4, p.clone()), Err(Error::InvalidParameter(_))));
        assert!(matches!(EdConfig::new(300, 20, p), Err(Error::DimensionGuard { .. })));
    }

    #[test]
    fn cutoff_too_small_is_reported() {
        let p = ModelParams::new(1.0, 6.0, ZeemanSet::new(vec![0.0]).unwrap()).unwrap();
        let cfg = EdConfig::new(40, 8, p).unwrap();
        assert!(matches!(ed_ground_state(&cfg), Err(Error::CutoffNotConverged { .. })));
    }

    #[test]
    fn basis_round_trip() {
        let basis = Basis { cavities: 3, per: 5, spins: 125, cutoff: 2 };
        for s in 0..basis.spins {
            assert_eq!(basis.spin_index(&basis.levels(s)), s);
        }
    }
}

//! TOML run configuration. Every key has a default; unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dicke_core::critical::QcpSearch;
use dicke_core::ed::EdConfig;
use dicke_core::exponent::FitOptions;
use dicke_core::scan::{Axis, AxisKind, ScanPlane, ZeemanTemplate};
use dicke_core::{DriveParams, ModelParams, SolverOptions, ZeemanSet};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory the CSV files are written to.
    pub output: String,
    pub model: ModelSection,
    pub drive: DriveSection,
    pub scan: ScanSection,
    pub critical: CriticalSection,
    pub fit: FitSection,
    pub ed: EdSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: dicke_core::solver::DEFAULT_SEED,
            output: ".".into(),
            model: ModelSection::default(),
            drive: DriveSection::default(),
            scan: ScanSection::default(),
            critical: CriticalSection::default(),
            fit: FitSection::default(),
            ed: EdSection::default(),
        }
    }
}

/// A preset name (`K2`..`K5`) or explicit couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZeemanSpec {
    Preset(String),
    Values(Vec<f64>),
}

impl ZeemanSpec {
    /// `K3`, or a comma-separated list such as `-1,0,1`.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        if ZeemanSet::preset(text).is_some() {
            return Ok(ZeemanSpec::Preset(text.to_string()));
        }
        text.split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(ZeemanSpec::Values)
            .map_err(|_| RunError::Config(format!("zeeman: expected a preset or a list of numbers, got `{text}`")))
    }

    pub fn resolve(&self) -> Result<ZeemanSet, RunError> {
        match self {
            ZeemanSpec::Preset(name) => {
                ZeemanSet::preset(name).ok_or_else(|| RunError::Config(format!("unknown zeeman preset `{name}`")))
            }
            ZeemanSpec::Values(v) => ZeemanSet::new(v.clone()).map_err(RunError::config),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub zeeman: ZeemanSpec,
    pub delta: f64,
    pub nu: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { zeeman: ZeemanSpec::Preset("K3".into()), delta: 1.0, nu: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// `delta`, `epsilon` or `drive_ratio`.
    pub x_axis: String,
    pub x_range: [f64; 2],
    pub nx: usize,
    pub nu_range: [f64; 2],
    pub ny: usize,
    pub grid_points: usize,
    /// Extra seeded descents per point; 0 keeps the grid-only solver.
    pub random_starts: usize,
    pub exhaustive_jumps: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            x_axis: "delta".into(),
            x_range: [0.1, 5.0],
            nx: 200,
            nu_range: [0.1, 6.0],
            ny: 200,
            grid_points: 4000,
            random_starts: 0,
            exhaustive_jumps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalSection {
    /// Final bracket width along the x axis for QTP/LP bisection.
    pub tol: f64,
    pub qcp_delta: [f64; 2],
    pub qcp_grid: usize,
}

impl Default for CriticalSection {
    fn default() -> Self {
        Self { tol: 1e-3, qcp_delta: [0.05, 5.0], qcp_grid: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// Two-column `nu,xi` CSV with a header row.
    pub input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_c_hint: Option<f64>,
    pub half_width: f64,
    pub candidates: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self { input: String::new(), nu_c_hint: None, half_width: 0.02, candidates: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdSection {
    pub n_atoms: usize,
    pub photon_cutoff: usize,
    pub nu_range: [f64; 2],
    pub steps: usize,
}

impl Default for EdSection {
    fn default() -> Self {
        Self { n_atoms: 12, photon_cutoff: 40, nu_range: [0.4, 2.8], steps: 31 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fails only for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String, RunError> {
        toml::to_string(self).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn model_params(&self) -> Result<ModelParams, RunError> {
        ModelParams::new(self.model.delta, self.model.nu, self.model.zeeman.resolve()?).map_err(RunError::config)
    }

    pub fn drive_params(&self) -> Result<DriveParams, RunError> {
        DriveParams::new(self.drive.ratio).map_err(RunError::config)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            grid_points: self.scan.grid_points,
            random_starts: self.scan.random_starts,
            structured_starts: self.scan.random_starts > 0,
            seed: self.seed,
            ..SolverOptions::default()
        }
    }

    pub fn plane(&self) -> Result<ScanPlane, RunError> {
        let kind = AxisKind::parse(&self.scan.x_axis)
            .ok_or_else(|| RunError::Config(format!("unknown x axis `{}`", self.scan.x_axis)))?;
        let x = Axis::new(self.scan.x_range[0], self.scan.x_range[1], self.scan.nx).map_err(RunError::config)?;
        let nu = Axis::new(self.scan.nu_range[0], self.scan.nu_range[1], self.scan.ny).map_err(RunError::config)?;
        let zeeman = if kind == AxisKind::Epsilon {
            ZeemanTemplate::Epsilon
        } else {
            ZeemanTemplate::Fixed(self.model.zeeman.resolve()?)
        };
        let mut plane =
            ScanPlane::new(kind, x, nu, self.model.delta, self.drive.ratio, zeeman).map_err(RunError::config)?;
        plane.solver = self.solver_options();
        plane.exhaustive_jumps = self.scan.exhaustive_jumps;
        Ok(plane)
    }

    pub fn qcp_search(&self, zeeman: &ZeemanSet) -> Result<QcpSearch, RunError> {
        let [lo, hi] = self.critical.qcp_delta;
        if !(lo > 0.0 && hi > lo) || self.critical.qcp_grid < 2 {
            return Err(RunError::Config("critical.qcp_delta must be 0 < lo < hi and qcp_grid >= 2".into()));
        }
        Ok(QcpSearch { delta: (lo, hi), grid: self.critical.qcp_grid, ..QcpSearch::for_zeeman(zeeman) })
    }

    pub fn fit_options(&self) -> Result<FitOptions, RunError> {
        if !(self.fit.half_width >= 0.0) || self.fit.candidates < 2 {
            return Err(RunError::Config("fit.half_width must be >= 0 and fit.candidates >= 2".into()));
        }
        Ok(FitOptions { half_width: self.fit.half_width, candidates: self.fit.candidates })
    }

    /// ED configuration at coupling `nu`.
    pub fn ed_config(&self, nu: f64) -> Result<EdConfig, RunError> {
        let p = ModelParams::new(self.model.delta, nu, self.model.zeeman.resolve()?).map_err(RunError::config)?;
        EdConfig::new(self.ed.n_atoms, self.ed.photon_cutoff, p).map_err(RunError::config)
    }

    pub fn ed_sweep(&self) -> Result<Vec<f64>, RunError> {
        let [lo, hi] = self.ed.nu_range;
        if !(lo > 0.0 && hi >= lo) || self.ed.steps == 0 {
            return Err(RunError::Config("ed.nu_range must be 0 < lo <= hi with steps >= 1".into()));
        }
        let n = self.ed.steps;
        Ok((0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        assert_eq!(RunConfig::from_toml("").unwrap(), cfg);
        let big = RunConfig { seed: u64::MAX, ..RunConfig::default() };
        assert!(big.to_toml().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sead = 3").is_err());
        assert!(RunConfig::from_toml("[scan]\nnx = 10\nny = 10\nfoo = 1").is_err());
    }

    #[test]
    fn zeeman_forms() {
        let cfg = RunConfig::from_toml("[model]\nzeeman = [-2.0, 0.5]").unwrap();
        assert_eq!(cfg.model.zeeman.resolve().unwrap().values(), &[-2.0, 0.5]);
        let cfg = RunConfig::from_toml("[model]\nzeeman = \"K5\"").unwrap();
        assert_eq!(cfg.model.zeeman.resolve().unwrap().len(), 5);
        assert!(matches!(ZeemanSpec::parse("-1,0,1").unwrap(), ZeemanSpec::Values(v) if v == [-1.0, 0.0, 1.0]));
        assert!(ZeemanSpec::parse("K9").is_err());
        let bad = RunConfig::from_toml("[model]\nzeeman = \"K9\"").unwrap();
        assert!(bad.model_params().is_err());
    }
}

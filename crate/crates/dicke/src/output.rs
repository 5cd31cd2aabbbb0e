//! CSV artifacts. Floats use the shortest representation that parses back
//! to the same value; rows follow the order of the computation.

use std::fs;
use std::path::{Path, PathBuf};

use dicke_core::critical::CriticalPoint;
use dicke_core::exponent::ExponentFit;
use dicke_core::scan::PhaseMap;
use dicke_core::texture::TextureReport;

use crate::RunError;

pub const PHASE_MAP: &str = "phase_map.csv";
pub const BOUNDARIES: &str = "boundaries.csv";
pub const CRITICAL: &str = "critical.csv";
pub const FIT: &str = "fit.csv";
pub const TEXTURE: &str = "texture.csv";
pub const ED: &str = "ed_check.csv";

/// Shortest representation that parses back to the same `f64`; exponent form
/// outside `[1e-5, 1e16)`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // writing to memory cannot fail
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }

    pub fn write(self, dir: &Path, name: &str) -> Result<PathBuf, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(name);
        fs::write(&path, self.into_bytes()).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn phase_map(map: &PhaseMap) -> Table {
    let mut t = Table::new(&["x", "nu", "phase", "xi", "energy"]);
    for j in 0..map.ny() {
        for i in 0..map.nx() {
            let cell = map.cell(i, j);
            t.row([
                num(map.plane.x.value(i)),
                num(map.plane.nu.value(j)),
                cell.label.to_string(),
                num(cell.state.xi),
                num(cell.state.energy_per_atom),
            ]);
        }
    }
    t
}

/// One row per polyline vertex; polylines follow each other in order.
pub fn boundaries(map: &PhaseMap) -> Table {
    let mut t = Table::new(&["x", "nu", "kind", "order"]);
    for b in &map.boundaries {
        for &(x, nu) in &b.points {
            t.row([num(x), num(nu), b.kind.to_string(), b.order.to_string()]);
        }
    }
    t
}

pub fn critical(points: &[CriticalPoint]) -> Table {
    let mut t = Table::new(&["kind", "x", "nu", "uncertainty", "residuals"]);
    for p in points {
        let residuals: Vec<String> = p.residuals.iter().map(|&r| num(r)).collect();
        t.row([p.kind.to_string(), num(p.x), num(p.nu), num(p.uncertainty), residuals.join(";")]);
    }
    t
}

pub fn fit(fit: &ExponentFit) -> Table {
    let mut t = Table::new(&["gamma", "gamma_err", "nu_c", "r2"]);
    t.row([num(fit.gamma), num(fit.gamma_err), num(fit.nu_c), num(fit.r_squared)]);
    t
}

pub fn texture(delta: f64, nu: f64, ratio: f64, report: &TextureReport) -> Table {
    let mut header = vec!["delta".to_string(), "nu".into(), "ratio".into(), "xi".into()];
    header.extend((1..=report.m.len()).map(|j| format!("m_{j}")));
    header.push("order".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header);
    let mut row = vec![num(delta), num(nu), num(ratio), num(report.state.xi)];
    row.extend(report.m.iter().map(|&m| num(m)));
    row.push(report.order.to_string());
    t.row(row);
    t
}

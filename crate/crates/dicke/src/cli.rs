//! Subcommands. Each one loads the configuration, applies flag overrides,
//! computes, and writes its CSV files once at the end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use dicke_core::critical::{self, BoundaryTracer};
use dicke_core::ed::ed_ground_state;
use dicke_core::exponent::fit_exponent;
use dicke_core::scan::scan_with;
use dicke_core::solver::minimize_undriven;
use dicke_core::texture::texture_at;

use crate::config::{RunConfig, ZeemanSpec};
use crate::output::{self, num, Table};
use crate::parallel::Pool;
use crate::RunError;

#[derive(Parser, Debug)]
#[command(name = "dicke", version, about = "Phase diagrams and critical points of a multi-cavity Dicke model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Phase map of a plane: phase_map.csv and boundaries.csv.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        plane: PlaneArgs,
    },
    /// Critical points inside the superradiant region (critical.csv).
    Qcp {
        #[command(flatten)]
        common: Common,
    },
    /// Tricritical points on the normal boundary of the plane (critical.csv).
    Qtp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        plane: PlaneArgs,
    },
    /// Triple points on the normal boundary of the plane (critical.csv).
    Lp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        plane: PlaneArgs,
    },
    /// Power-law fit of a `nu,xi` curve (fit.csv).
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        nu_c_hint: Option<f64>,
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Pseudo-spin texture at one parameter point (texture.csv).
    Texture {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-N exact diagonalisation sweep in nu against the mean field (ed_check.csv).
    EdCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_atoms: Option<usize>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        nu_range: Option<[f64; 2]>,
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Preset (`K2`..`K5`) or comma-separated couplings.
    #[arg(long, allow_hyphen_values = true)]
    zeeman: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Drive ratio `A / Omega`.
    #[arg(long)]
    ratio: Option<f64>,
}

#[derive(Args, Debug)]
struct PlaneArgs {
    /// `delta`, `epsilon` or `drive_ratio`.
    #[arg(long)]
    x_axis: Option<String>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    x_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    nu_range: Option<[f64; 2]>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
}

fn parse_pair(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|_| format!("bad number `{a}`"))?,
            b.trim().parse().map_err(|_| format!("bad number `{b}`"))?,
        ]),
        _ => Err(format!("expected `lo,hi`, got `{text}`")),
    }
}

fn load(common: &Common) -> Result<RunConfig, RunError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &common.output {
        cfg.output = o.to_string_lossy().into_owned();
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(z) = &common.zeeman {
        cfg.model.zeeman = ZeemanSpec::parse(z)?;
    }
    if let Some(d) = common.delta {
        cfg.model.delta = d;
    }
    if let Some(n) = common.nu {
        cfg.model.nu = n;
    }
    if let Some(r) = common.ratio {
        cfg.drive.ratio = r;
    }
    Ok(cfg)
}

fn apply_plane(cfg: &mut RunConfig, args: &PlaneArgs) {
    if let Some(x) = &args.x_axis {
        cfg.scan.x_axis = x.clone();
    }
    if let Some(r) = args.x_range {
        cfg.scan.x_range = r;
    }
    if let Some(r) = args.nu_range {
        cfg.scan.nu_range = r;
    }
    if let Some(n) = args.nx {
        cfg.scan.nx = n;
    }
    if let Some(n) = args.ny {
        cfg.scan.ny = n;
    }
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on
/// domain errors, 2 on configuration errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<Vec<PathBuf>, RunError> {
    match command {
        Command::Scan { common, plane } => {
            let mut cfg = load(&common)?;
            apply_plane(&mut cfg, &plane);
            let plane = cfg.plane()?;
            let pool = Pool::from_env()?;
            let map = scan_with(&plane, &pool)?;
            let dir = Path::new(&cfg.output);
            Ok(vec![
                output::phase_map(&map).write(dir, output::PHASE_MAP)?,
                output::boundaries(&map).write(dir, output::BOUNDARIES)?,
            ])
        }
        Command::Qcp { common } => {
            let cfg = load(&common)?;
            let zeeman = cfg.model.zeeman.resolve()?;
            let search = cfg.qcp_search(&zeeman)?;
            let ratio = cfg.drive_params()?.ratio;
            let points: Vec<_> = if ratio == 0.0 {
                critical::locate_qcp(&zeeman, &search)
            } else {
                critical::locate_qcp_driven(&zeeman, ratio, &search).into_iter().map(|c| c.point).collect()
            };
            Ok(vec![output::critical(&points).write(Path::new(&cfg.output), output::CRITICAL)?])
        }
        Command::Qtp { common, plane } => boundary_points(&common, &plane, false),
        Command::Lp { common, plane } => boundary_points(&common, &plane, true),
        Command::Fit { common, input, nu_c_hint, half_width } => {
            let mut cfg = load(&common)?;
            if let Some(i) = input {
                cfg.fit.input = i.to_string_lossy().into_owned();
            }
            if let Some(h) = nu_c_hint {
                cfg.fit.nu_c_hint = Some(h);
            }
            if let Some(w) = half_width {
                cfg.fit.half_width = w;
            }
            if cfg.fit.input.is_empty() {
                return Err(RunError::Config("fit needs an input file".into()));
            }
            let hint = cfg.fit.nu_c_hint.ok_or_else(|| RunError::Config("fit needs a nu_c hint".into()))?;
            let samples = read_curve(Path::new(&cfg.fit.input))?;
            let fit = fit_exponent(&samples, hint, &cfg.fit_options()?)?;
            Ok(vec![output::fit(&fit).write(Path::new(&cfg.output), output::FIT)?])
        }
        Command::Texture { common } => {
            let cfg = load(&common)?;
            let p = cfg.model_params()?;
            let d = cfg.drive_params()?;
            let report = texture_at(&p, &d)?;
            let table = output::texture(p.delta, p.nu, d.ratio, &report);
            Ok(vec![table.write(Path::new(&cfg.output), output::TEXTURE)?])
        }
        Command::EdCheck { common, n_atoms, cutoff, nu_range, steps } => {
            let mut cfg = load(&common)?;
            if let Some(n) = n_atoms {
                cfg.ed.n_atoms = n;
            }
            if let Some(c) = cutoff {
                cfg.ed.photon_cutoff = c;
            }
            if let Some(r) = nu_range {
                cfg.ed.nu_range = r;
            }
            if let Some(s) = steps {
                cfg.ed.steps = s;
            }
            let sweep = cfg.ed_sweep()?;
            let configs = sweep.iter().map(|&nu| cfg.ed_config(nu)).collect::<Result<Vec<_>, _>>()?;
            let pool = Pool::from_env()?;
            let results = dicke_core::exec::Executor::map(&pool, configs.len(), |i| {
                ed_ground_state(&configs[i]).map(|r| (r, minimize_undriven(&configs[i].params).global.xi))
            });
            let mut table =
                Table::new(&["nu", "energy", "radiance", "photon_order", "field", "residual", "mean_field_xi"]);
            for (nu, result) in sweep.iter().zip(results) {
                let (r, xi) = result?;
                table.row([num(*nu), num(r.energy), num(r.radiance), num(r.photon_order), num(r.field), num(r.residual), num(xi)]);
            }
            Ok(vec![table.write(Path::new(&cfg.output), output::ED)?])
        }
    }
}

fn boundary_points(common: &Common, plane: &PlaneArgs, lp: bool) -> Result<Vec<PathBuf>, RunError> {
    let mut cfg = load(common)?;
    apply_plane(&mut cfg, plane);
    let plane = cfg.plane()?;
    if !(cfg.critical.tol > 0.0) {
        return Err(RunError::Config("critical.tol must be positive".into()));
    }
    let pool = Pool::from_env()?;
    let tracer = BoundaryTracer::new(&plane);
    let columns = critical::plane_columns(&plane);
    let points = if lp {
        critical::locate_lp(&tracer, &columns, cfg.critical.tol, &pool)
    } else {
        critical::locate_qtp(&tracer, &columns, cfg.critical.tol, &pool)
    };
    Ok(vec![output::critical(&points).write(Path::new(&cfg.output), output::CRITICAL)?])
}

fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<f64, RunError> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| RunError::Config(format!("{}: row {} needs two numbers", path.display(), line + 2)))
        };
        samples.push((field(0)?, field(1)?));
    }
    Ok(samples)
}

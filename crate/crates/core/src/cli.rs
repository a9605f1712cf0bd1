//! Subcommand bodies behind the `entrostab` binary: matrix property
//! verification, the flat-plate run, entropy budgets of a saved field, and
//! the skin-friction correlation table.
//!
//! Every CSV starts with one `#` line giving column units, and every float
//! is written in shortest round-trip scientific notation, so identical
//! inputs give byte-identical files.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bl_solver::{
    karman_schoenherr_cf, solve_flat_plate, turbulence_model, Freestream, SolutionField, SolverError, Station,
};
use crate::closure::{eps_from_q1, ClosureEvents, PointClosure, TurbulenceModel};
use crate::config::{ConfigError, RunConfig};
use crate::entropy_audit::{clausius_duhem_budget, plotted_production, EntropyBudget, PlottedProduction};
use crate::flux_jacobians::{
    a0_matrix, ai_matrix, k_global, min_symmetric_eigenvalue, relative_asymmetry, ViscosityAggregates,
};
use crate::sampling::StateSampler;
use crate::variables::PrimitiveState;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("property check failed: {0}")]
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Property(_) => 2,
            CliError::Solver(SolverError::NonConvergence { .. }) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn f(v: f64) -> String {
    // adding zero turns −0 into +0
    format!("{:e}", v + 0.0)
}

/// Writes `# units` followed by a CSV table.
fn write_csv(path: &Path, units: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(io_err(path))?;
    writeln!(file, "# {units}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes the effective configuration next to the outputs.
pub fn echo_config(cfg: &RunConfig, dir: &Path) -> Result<PathBuf, CliError> {
    prepare_dir(dir)?;
    let path = dir.join("effective.cfg");
    std::fs::write(&path, cfg.render()).map_err(io_err(&path))?;
    Ok(path)
}

/// Worst values of one matrix family over the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub family: &'static str,
    pub samples: usize,
    pub worst_asymmetry: f64,
    /// Smallest eigenvalue of the symmetric part.
    pub min_eigenvalue: f64,
    /// Same, divided by the Frobenius norm.
    pub min_eigenvalue_relative: f64,
    pub pass: bool,
}

pub const ASYMMETRY_TOL: f64 = 1e-12;
pub const K_EIGEN_TOL: f64 = 1e-10;

/// Samples admissible states and checks the symmetry and definiteness of
/// `A₀`, `Aᵢ` and the assembled `[K_ij]`.
pub fn verify_matrices(cfg: &RunConfig) -> Vec<FamilyReport> {
    let gas = &cfg.gas;
    let model = &cfg.model;
    let sampler = StateSampler::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names = ["A0", "A1", "A2", "A3", "K"];
    let mut worst = [(0.0f64, f64::INFINITY, f64::INFINITY); 5];
    let mut events = ClosureEvents::default();
    for _ in 0..cfg.samples {
        let y = sampler.state(&mut rng);
        let d = sampler.wall_distance(&mut rng);
        let grads = sampler.gradients(&mut rng);
        let mu_t = model.evaluate(&y, &grads, d, gas, &mut events).mu_t;
        let visc = ViscosityAggregates::new(gas, mu_t, model.diffusivity);
        let mats = [
            nalgebra::DMatrix::from_column_slice(7, 7, a0_matrix(&y, gas).as_slice()),
            nalgebra::DMatrix::from_column_slice(7, 7, ai_matrix(&y, gas, 0).as_slice()),
            nalgebra::DMatrix::from_column_slice(7, 7, ai_matrix(&y, gas, 1).as_slice()),
            nalgebra::DMatrix::from_column_slice(7, 7, ai_matrix(&y, gas, 2).as_slice()),
            k_global(&y, &visc),
        ];
        for (idx, (w, m)) in worst.iter_mut().zip(&mats).enumerate() {
            w.0 = w.0.max(relative_asymmetry(m));
            if idx == 0 || idx == 4 {
                let eig = min_symmetric_eigenvalue(m);
                w.1 = w.1.min(eig);
                let norm = m.norm();
                w.2 = w.2.min(if norm > 0.0 { eig / norm } else { 0.0 });
            }
        }
    }
    names
        .iter()
        .zip(worst)
        .map(|(&family, (asym, eig, rel))| {
            let sym_ok = asym < ASYMMETRY_TOL;
            let pass = match family {
                "A0" => sym_ok && (cfg.samples == 0 || eig > 0.0),
                "K" => sym_ok && (cfg.samples == 0 || rel >= -K_EIGEN_TOL),
                _ => sym_ok,
            };
            let keep = matches!(family, "A0" | "K") && cfg.samples > 0;
            FamilyReport {
                family,
                samples: cfg.samples,
                worst_asymmetry: asym,
                min_eigenvalue: if keep { eig } else { f64::NAN },
                min_eigenvalue_relative: if keep { rel } else { f64::NAN },
                pass,
            }
        })
        .collect()
}

/// Blank for families where the quantity is not computed.
fn optional(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        f(v)
    }
}

pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Vec<FamilyReport>, CliError> {
    echo_config(cfg, out)?;
    let report = verify_matrices(cfg);
    let rows: Vec<Vec<String>> = report
        .iter()
        .map(|r| {
            vec![
                r.family.to_string(),
                r.samples.to_string(),
                f(r.worst_asymmetry),
                optional(r.min_eigenvalue),
                optional(r.min_eigenvalue_relative),
                r.pass.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("verify.csv"),
        "asymmetry = |M - M^T|_F/|M|_F [-]; eigenvalues in the units of each matrix; relative = divided by |M|_F",
        &["family", "samples", "worst_asymmetry", "min_eigenvalue", "min_eigenvalue_relative", "pass"],
        &rows,
    )?;
    Ok(report)
}

/// Property failure for the first failing family, if any.
pub fn verify_status(report: &[FamilyReport]) -> Result<(), CliError> {
    match report.iter().find(|r| !r.pass) {
        Some(bad) => Err(CliError::Property(format!(
            "{} (asymmetry {:e}, min eigenvalue {:e})",
            bad.family, bad.worst_asymmetry, bad.min_eigenvalue
        ))),
        None => Ok(()),
    }
}

/// Point-wise closure and entropy quantities along one station column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBudget {
    pub closure: Vec<PointClosure>,
    pub entropy: Vec<EntropyBudget>,
    pub plotted: Vec<PlottedProduction>,
}

pub fn column_budget(station: &Station, cfg: &RunConfig, model: &TurbulenceModel) -> ColumnBudget {
    let mut events = ClosureEvents::default();
    let mut out = ColumnBudget { closure: Vec::new(), entropy: Vec::new(), plotted: Vec::new() };
    for j in 0..station.y.len() {
        let (s, g) = (&station.states[j], &station.grads[j]);
        let c = model.evaluate(s, g, station.y[j], &cfg.gas, &mut events);
        out.entropy.push(clausius_duhem_budget(s, g, &c, &cfg.gas));
        out.plotted.push(plotted_production(s, g, &c, &cfg.gas));
        out.closure.push(c);
    }
    out
}

fn profile_rows(station: &Station, fs: &Freestream, cfg: &RunConfig, model: &TurbulenceModel) -> Vec<Vec<String>> {
    let ut = station.diagnostics.u_tau;
    let b = column_budget(station, cfg, model);
    (0..station.y.len())
        .map(|j| {
            let s = &station.states[j];
            let c = &b.closure[j];
            let eps = eps_from_q1(s.q1, fs.nu);
            let q0y = station.grads[j].dq0[1];
            let (sink, cross) =
                if s.q0 > 0.0 { (s.rho * eps / s.q0, c.visc.mu_k * q0y * q0y / s.q0) } else { (0.0, 0.0) };
            vec![
                f(station.y[j]),
                f(station.y[j] * ut / fs.nu),
                f(s.u[0] / ut),
                f(s.u[1]),
                f(s.t),
                f(s.q0 / ut),
                f(s.q1),
                f(c.mu_t),
                f(c.sources.p_k),
                f(s.rho * eps),
                f(sink),
                f(cross),
                f(c.sources.s_q0),
                f(c.sources.p_q1),
                f(c.sources.d_q1),
                f(c.sources.r_q1),
                f(c.sources.s_q1),
                (c.sources.d_q1 != c.unclipped.d_q1).to_string(),
                f(b.entropy[j].total),
                f(b.plotted[j].turbulent),
                f(b.plotted[j].total),
            ]
        })
        .collect()
}

const PROFILE_HEADER: [&str; 21] = [
    "y",
    "y_plus",
    "u_plus",
    "v",
    "t",
    "q0_plus",
    "q1",
    "mu_t",
    "p_k",
    "rho_eps",
    "q0_dissipation",
    "q0_cross_diffusion",
    "s_q0",
    "p_q1",
    "d_q1",
    "r_q1",
    "s_q1",
    "clipped",
    "entropy_total",
    "plotted_turbulent",
    "plotted_total",
];
const PROFILE_UNITS: &str = "y [m]; y_plus u_plus q0_plus [-]; v q1 [m/s]; t [K]; mu_t [Pa s]; \
p_k rho_eps [W/m^3]; q0_dissipation q0_cross_diffusion s_q0 p_q1 d_q1 r_q1 s_q1 [kg/(m^2 s^2)]; \
entropy_total [W/(m^3 K)]; plotted_turbulent plotted_total [W/m^3]";

const STATION_HEADER: [&str; 17] = [
    "x",
    "re_theta",
    "cf",
    "cf_correlation",
    "theta",
    "u_tau",
    "tau_w",
    "delta",
    "y_plus_first",
    "cycles",
    "substeps",
    "clips",
    "q0_floor",
    "q1_floor",
    "re_t_floor",
    "f_mu_floor",
    "positivity_resets",
];
const STATION_UNITS: &str = "x theta delta [m]; u_tau [m/s]; tau_w [Pa]; re_theta cf cf_correlation y_plus_first [-]; \
counters [count]";

const FIELD_HEADER: [&str; 9] = ["station", "x", "y", "rho", "u", "v", "t", "q0", "q1"];
const FIELD_UNITS: &str = "station [index]; x y [m]; rho [kg/m^3]; u v q0 q1 [m/s]; t [K]";

/// Summary of a flat-plate run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatPlateReport {
    pub field: SolutionField,
    pub profiles: Vec<(f64, PathBuf)>,
}

fn profile_name(re: f64) -> String {
    format!("profile_{}.csv", re.round() as i64)
}

pub fn run_flatplate(cfg: &RunConfig, out: &Path) -> Result<FlatPlateReport, CliError> {
    echo_config(cfg, out)?;
    let field = solve_flat_plate(&cfg.solver, &cfg.gas, &cfg.model)?;
    let fs = field.freestream;
    let model = turbulence_model(&cfg.model, &fs);

    let rows: Vec<Vec<String>> = field
        .stations
        .iter()
        .map(|s| {
            let d = &s.diagnostics;
            let e = &s.events;
            vec![
                f(d.x),
                f(d.re_theta),
                f(d.cf),
                f(d.cf_correlation),
                f(d.theta),
                f(d.u_tau),
                f(d.tau_w),
                f(d.delta),
                f(d.y_plus_first),
                s.cycles.to_string(),
                s.substeps.to_string(),
                e.clips.to_string(),
                e.q0_floor.to_string(),
                e.q1_floor.to_string(),
                e.re_t_floor.to_string(),
                e.f_mu_floor.to_string(),
                s.positivity_events.to_string(),
            ]
        })
        .collect();
    write_csv(&out.join("stations.csv"), STATION_UNITS, &STATION_HEADER, &rows)?;

    let mut profiles = Vec::new();
    let (lo, hi) = (field.stations[0].diagnostics.re_theta, field.stations.last().unwrap().diagnostics.re_theta);
    for &re in &cfg.profiles {
        if re < lo || re > hi {
            continue;
        }
        let station = field.nearest_station(re);
        let path = out.join(profile_name(re));
        let units = format!("station Re_theta = {:e}; {PROFILE_UNITS}", station.diagnostics.re_theta);
        write_csv(&path, &units, &PROFILE_HEADER, &profile_rows(station, &fs, cfg, &model))?;
        profiles.push((re, path));
    }

    let mut rows = Vec::new();
    for (n, s) in field.stations.iter().enumerate() {
        for (j, p) in s.states.iter().enumerate() {
            rows.push(vec![n.to_string(), f(s.x), f(s.y[j]), f(p.rho), f(p.u[0]), f(p.u[1]), f(p.t), f(p.q0), f(p.q1)]);
        }
    }
    write_csv(&out.join("field.csv"), FIELD_UNITS, &FIELD_HEADER, &rows)?;

    std::fs::write(out.join("summary.txt"), summary(&field, cfg)).map_err(io_err(out))?;
    Ok(FlatPlateReport { field, profiles })
}

fn summary(field: &SolutionField, cfg: &RunConfig) -> String {
    let fs = &field.freestream;
    let e = field.events();
    let marched = &field.stations[1..];
    let cycles: usize = marched.iter().map(|s| s.cycles).sum();
    let max_cycles = marched.iter().map(|s| s.cycles).max().unwrap_or(0);
    let substeps: usize = marched.iter().map(|s| s.substeps).sum();
    let positivity: u64 = field.stations.iter().map(|s| s.positivity_events).sum();
    let last = &field.stations.last().unwrap().diagnostics;
    let mut out = String::new();
    out += &format!("stations = {}\n", field.stations.len());
    out += &format!("wall_normal_nodes = {}\n", field.stations[0].y.len());
    out += &format!("freestream_velocity = {:e} m/s\n", fs.u);
    out += &format!("freestream_density = {:e} kg/m^3\n", fs.rho);
    out += &format!("kinematic_viscosity = {:e} m^2/s\n", fs.nu);
    out += &format!("re_theta_range = {:e} .. {:e}\n", field.stations[0].diagnostics.re_theta, last.re_theta);
    out += &format!("nonlinear_iterations = {cycles}\n");
    out += &format!("max_iterations_per_station = {max_cycles}\n");
    out += &format!("marching_steps = {substeps}\n");
    out += &format!("tolerance = {:e}\n", cfg.solver.tolerance);
    out += &format!("entropy_clips = {}\n", e.clips);
    out += &format!("q0_floor = {}\n", e.q0_floor);
    out += &format!("q1_floor = {}\n", e.q1_floor);
    out += &format!("re_t_floor = {}\n", e.re_t_floor);
    out += &format!("f_mu_floor = {}\n", e.f_mu_floor);
    out += &format!("positivity_resets = {positivity}\n");
    out
}

/// Reads a `field.csv` written by [`run_flatplate`].
pub fn read_field(path: &Path, fs: &Freestream) -> Result<SolutionField, CliError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != FIELD_HEADER {
        return Err(CliError::Input(format!("{}: unexpected columns {:?}", path.display(), headers)));
    }
    let mut columns: Vec<(f64, Vec<f64>, Vec<PrimitiveState>)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = || CliError::Input(format!("{}: record {} is malformed", path.display(), line + 1));
        let n: usize = rec[0].parse().map_err(|_| bad())?;
        let v: Vec<f64> = (1..9).map(|i| rec[i].parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if n == columns.len() {
            columns.push((v[0], Vec::new(), Vec::new()));
        } else if n + 1 != columns.len() {
            return Err(bad());
        }
        let col = columns.last_mut().unwrap();
        col.1.push(v[1]);
        col.2.push(PrimitiveState::new(v[2], [v[3], v[4], 0.0], v[5], v[6], v[7]));
    }
    if columns.is_empty() {
        return Err(CliError::Input(format!("{}: no stations", path.display())));
    }
    let stations = columns.into_iter().map(|(x, y, states)| Station::from_column(x, y, states, fs)).collect();
    Ok(SolutionField { freestream: *fs, stations })
}

const BUDGET_HEADER: [&str; 11] = [
    "y_plus",
    "upsilon_over_t",
    "thermal",
    "rho_eps_over_t",
    "q1_diffusion",
    "dilatation",
    "source_sink",
    "total",
    "plotted_turbulent",
    "plotted_total",
    "y",
];
const BUDGET_UNITS: &str =
    "y_plus [-]; y [m]; upsilon_over_t .. total [W/(m^3 K)]; plotted_turbulent plotted_total [W/m^3]";

/// Entropy budgets of the stations in a saved field. With `re_theta`
/// given, only the stations nearest those values are written.
pub fn run_budget(cfg: &RunConfig, field_path: &Path, re_theta: &[f64], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    echo_config(cfg, out)?;
    cfg.solver.validate()?;
    let fs = Freestream::new(&cfg.solver, &cfg.gas, &cfg.model.constants);
    let model = turbulence_model(&cfg.model, &fs);
    let field = read_field(field_path, &fs)?;
    let mut picks: Vec<usize> = if re_theta.is_empty() {
        (0..field.stations.len()).collect()
    } else {
        re_theta
            .iter()
            .map(|&re| {
                let s = field.nearest_station(re);
                field.stations.iter().position(|t| std::ptr::eq(t, s)).unwrap()
            })
            .collect()
    };
    picks.dedup();
    let mut written = Vec::new();
    for n in picks {
        let s = &field.stations[n];
        let b = column_budget(s, cfg, &model);
        let ut = s.diagnostics.u_tau;
        let rows: Vec<Vec<String>> = (0..s.y.len())
            .map(|j| {
                let e = &b.entropy[j];
                let mut row = vec![f(s.y[j] * ut / fs.nu)];
                row.extend(e.components().iter().map(|v| f(*v)));
                row.push(f(e.total));
                row.push(f(b.plotted[j].turbulent));
                row.push(f(b.plotted[j].total));
                row.push(f(s.y[j]));
                row
            })
            .collect();
        let path = out.join(format!("budget_{n:03}.csv"));
        let units = format!("station {n}, Re_theta = {:e}; {BUDGET_UNITS}", s.diagnostics.re_theta);
        write_csv(&path, &units, &BUDGET_HEADER, &rows)?;
        written.push(path);
    }
    Ok(written)
}

/// Default table: Re_θ from 2000 to 20000 in steps of 1000.
pub fn default_correlation_points() -> Vec<f64> {
    (2..=20).map(|k| k as f64 * 1000.0).collect()
}

pub fn run_correlate(re_theta: &[f64], out: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    prepare_dir(out)?;
    if let Some(r) = re_theta.iter().find(|r| !(**r >= 1.0)) {
        return Err(CliError::Input(format!("Re_theta = {r} is below 1")));
    }
    let table: Vec<(f64, f64)> = re_theta.iter().map(|&r| (r, karman_schoenherr_cf(r))).collect();
    let rows: Vec<Vec<String>> = table.iter().map(|(r, c)| vec![f(*r), f(*c)]).collect();
    write_csv(&out.join("correlate.csv"), "re_theta cf [-]", &["re_theta", "cf"], &rows)?;
    Ok(table)
}

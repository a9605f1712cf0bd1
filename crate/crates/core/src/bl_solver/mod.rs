//! Steady flat-plate turbulent boundary layer, marched downstream.
//!
//! Density and temperature are held at their freestream values (the flow
//! is at `M = 0.1`). Each station solves the wall-normal momentum, q₀ and
//! q₁ equations by Picard iteration, then recovers the wall-normal velocity
//! from continuity.

pub mod diagnose;
pub mod grid;
pub mod inlet;
pub mod march;
pub mod wall_bc;

use thiserror::Error;

use crate::closure::{eps_from_q1, ClosureConstants, ClosureEvents, Floors, TurbulenceModel};
use crate::thermo::GasModel;
use crate::variables::{PrimitiveGradients, PrimitiveState};

pub use diagnose::Diagnostics;
pub use grid::{build_grid, karman_schoenherr_cf, Grid, GridSpec};
pub use inlet::{inlet_profiles, InletColumn};
pub use march::march;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("inlet profile iteration reached Re_theta = {achieved:.1} against target {target:.1}")]
    Inlet { achieved: f64, target: f64 },
    #[error("station {station} did not converge; last relative updates {history:?}")]
    NonConvergence { station: usize, history: Vec<f64> },
}

/// Station solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linearization {
    /// Segregated solves with under-relaxation.
    Picard,
    /// Damped Newton on the coupled column.
    #[default]
    Newton,
}

/// Run parameters of the flat-plate case.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub nx: usize,
    pub ny: usize,
    pub y_plus_first: f64,
    /// Streamwise extent [m]; `None` sizes it from the correlation so the
    /// run reaches `re_theta_target`.
    pub length: Option<f64>,
    /// Inlet column height [m]; `None` uses twice the estimated inlet
    /// boundary-layer thickness.
    pub height: Option<f64>,
    pub re_theta_inlet: f64,
    pub re_theta_target: f64,
    pub mach: f64,
    /// Freestream static temperature [K].
    pub t_inf: f64,
    /// Freestream static pressure [Pa].
    pub p_inf: f64,
    pub linearization: Linearization,
    /// Picard under-relaxation factor.
    pub relaxation: f64,
    pub tolerance: f64,
    pub max_cycles: usize,
    /// Freestream turbulence intensity `√(2k/3)/U` [–].
    pub freestream_intensity: f64,
    /// Freestream `μ_T/μ` [–].
    pub freestream_viscosity_ratio: f64,
    /// Coles wake strength of the inlet profile.
    pub wake_strength: f64,
    /// Wall units below which q₁ follows the wall relation.
    pub penalty_y_plus: f64,
    pub energy_equation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nx: 40,
            ny: 60,
            y_plus_first: 0.01,
            length: None,
            height: None,
            re_theta_inlet: 2300.0,
            re_theta_target: 16000.0,
            mach: 0.1,
            t_inf: 300.0,
            p_inf: 101_325.0,
            linearization: Linearization::Newton,
            relaxation: 0.7,
            tolerance: 1e-8,
            max_cycles: 200,
            freestream_intensity: 1e-3,
            freestream_viscosity_ratio: 1.0,
            wake_strength: 0.5,
            penalty_y_plus: 3.0,
            energy_equation: false,
        }
    }
}

/// Uniform outer flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Freestream {
    pub rho: f64,
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub nu: f64,
    pub q0: f64,
    pub q1: f64,
}

impl Freestream {
    pub fn new(cfg: &SolverConfig, gas: &GasModel, c: &ClosureConstants) -> Self {
        let rho = cfg.p_inf / (gas.r * cfg.t_inf);
        let u = cfg.mach * gas.sound_speed(cfg.t_inf);
        let nu = gas.kinematic_viscosity(rho);
        let k = 1.5 * (cfg.freestream_intensity * u).powi(2);
        let eps = c.c_mu * k * k / (nu * cfg.freestream_viscosity_ratio);
        Freestream { rho, t: cfg.t_inf, u, mu: gas.mu_visc, nu, q0: (2.0 * k).sqrt(), q1: (nu * eps).powf(0.25) }
    }

    pub fn state(&self) -> PrimitiveState {
        PrimitiveState::new(self.rho, [self.u, 0.0, 0.0], self.t, self.q0, self.q1)
    }

    pub fn eps(&self) -> f64 {
        eps_from_q1(self.q1, self.nu)
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |k: &str, v: String| Err(SolverError::Config(format!("{k} = {v} is out of range")));
        if self.nx < 2 {
            return bad("grid.nx", self.nx.to_string());
        }
        if self.ny < 8 {
            return bad("grid.ny", self.ny.to_string());
        }
        if !(self.y_plus_first > 0.0) {
            return bad("grid.y_plus_first", self.y_plus_first.to_string());
        }
        if let Some(l) = self.length {
            if !(l > 0.0) {
                return bad("grid.length", l.to_string());
            }
        }
        if let Some(h) = self.height {
            if !(h > 0.0) {
                return bad("grid.height", h.to_string());
            }
        }
        if !(self.re_theta_inlet > 500.0) {
            return bad("run.re_theta_inlet", self.re_theta_inlet.to_string());
        }
        if !(self.re_theta_target > self.re_theta_inlet) {
            return bad("run.re_theta_target", self.re_theta_target.to_string());
        }
        if !(self.mach > 0.0 && self.mach < 0.3) {
            return bad("run.mach", self.mach.to_string());
        }
        if !(self.t_inf > 0.0) {
            return bad("run.t_inf", self.t_inf.to_string());
        }
        if !(self.p_inf > 0.0) {
            return bad("run.p_inf", self.p_inf.to_string());
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad("run.relaxation", self.relaxation.to_string());
        }
        if !(self.tolerance > 0.0) {
            return bad("run.tolerance", self.tolerance.to_string());
        }
        if self.max_cycles == 0 {
            return bad("run.max_cycles", self.max_cycles.to_string());
        }
        if !(self.freestream_intensity > 0.0) {
            return bad("run.freestream_intensity", self.freestream_intensity.to_string());
        }
        if !(self.freestream_viscosity_ratio > 0.0) {
            return bad("run.freestream_viscosity_ratio", self.freestream_viscosity_ratio.to_string());
        }
        if !(self.wake_strength >= 0.0) {
            return bad("run.wake_strength", self.wake_strength.to_string());
        }
        if !(self.penalty_y_plus >= 0.0) {
            return bad("run.penalty_y_plus", self.penalty_y_plus.to_string());
        }
        Ok(())
    }

    /// Plate length that takes the correlation from the inlet to the
    /// target momentum-thickness Reynolds number, from
    /// `dRe_θ/dRe_x = C_f/2`.
    pub fn resolved_length(&self, fs: &Freestream) -> f64 {
        if let Some(l) = self.length {
            return l;
        }
        let n = 2000;
        let (a, b) = (self.re_theta_inlet, self.re_theta_target);
        let h = (b - a) / n as f64;
        let f = |r: f64| 2.0 / karman_schoenherr_cf(r);
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0 * fs.nu / fs.u
    }

    /// Inlet column height.
    pub fn resolved_height(&self, fs: &Freestream) -> f64 {
        // one-seventh power law: δ = (72/7) θ
        self.height.unwrap_or(2.0 * 72.0 / 7.0 * self.re_theta_inlet * fs.nu / fs.u)
    }

    pub fn grid_spec(&self, fs: &Freestream) -> GridSpec {
        GridSpec {
            nx: self.nx,
            ny: self.ny,
            y_plus_first: self.y_plus_first,
            length: self.resolved_length(fs),
            height: self.resolved_height(fs),
        }
    }
}

/// Builds the closure with floors scaled by the freestream velocity.
pub fn turbulence_model(base: &TurbulenceModel, fs: &Freestream) -> TurbulenceModel {
    let mut m = *base;
    let f = Floors::for_reference_velocity(fs.u);
    m.floors.q0 = f.q0;
    m.floors.q1 = f.q1;
    m
}

/// Converged solution at one station.
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub x: f64,
    pub y: Vec<f64>,
    pub states: Vec<PrimitiveState>,
    pub grads: Vec<PrimitiveGradients>,
    pub diagnostics: Diagnostics,
    /// Nonlinear iterations summed over sub-steps.
    pub cycles: usize,
    /// Marching steps taken to reach this station.
    pub substeps: usize,
    /// Closure floor and clip activations at the converged solution.
    pub events: ClosureEvents,
    /// Nodes reset to a floor after a linear solve.
    pub positivity_events: u64,
}

impl Station {
    /// Station rebuilt from a stored column, with gradients and diagnostics
    /// recomputed.
    pub fn from_column(x: f64, y: Vec<f64>, states: Vec<PrimitiveState>, fs: &Freestream) -> Station {
        march::station_from(x, y, states, fs, (0, ClosureEvents::default(), 0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub freestream: Freestream,
    pub stations: Vec<Station>,
}

impl SolutionField {
    pub fn events(&self) -> ClosureEvents {
        let mut total = ClosureEvents::default();
        for s in &self.stations {
            total += s.events;
        }
        total
    }

    /// Station whose momentum-thickness Reynolds number is closest to `re_theta`.
    pub fn nearest_station(&self, re_theta: f64) -> &Station {
        self.stations
            .iter()
            .min_by(|a, b| {
                let da = (a.diagnostics.re_theta - re_theta).abs();
                let db = (b.diagnostics.re_theta - re_theta).abs();
                da.total_cmp(&db)
            })
            .expect("solution has at least one station")
    }

    /// `C_f` linearly interpolated in `Re_θ`; `None` outside the marched range.
    pub fn cf_at(&self, re_theta: f64) -> Option<f64> {
        self.stations.windows(2).find_map(|w| {
            let (a, b) = (&w[0].diagnostics, &w[1].diagnostics);
            if (a.re_theta - re_theta) * (b.re_theta - re_theta) <= 0.0 && a.re_theta != b.re_theta {
                let s = (re_theta - a.re_theta) / (b.re_theta - a.re_theta);
                Some(a.cf + s * (b.cf - a.cf))
            } else {
                None
            }
        })
    }
}

/// Grid, inlet and march in one call.
pub fn solve_flat_plate(
    cfg: &SolverConfig,
    gas: &GasModel,
    model: &TurbulenceModel,
) -> Result<SolutionField, SolverError> {
    cfg.validate()?;
    gas.validate().map_err(|e| SolverError::Config(e.to_string()))?;
    let fs = Freestream::new(cfg, gas, &model.constants);
    let model = turbulence_model(model, &fs);
    let grid = build_grid(&cfg.grid_spec(&fs), cfg.re_theta_inlet, fs.u, fs.nu)?;
    let inlet = inlet_profiles(cfg.re_theta_inlet, cfg.wake_strength, &fs, &grid.inlet.y, cfg.penalty_y_plus)?;
    march(cfg, &grid, &inlet, &fs, gas, &model)
}

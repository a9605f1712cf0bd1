//! Run configuration from flat `section.key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so an empty file reproduces the reference flat-plate case.
//! [`RunConfig::render`] writes every key back out and parses to the same
//! value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bl_solver::{Linearization, SolverConfig};
use crate::closure::{DissipationForm, TurbulenceModel};
use crate::flux_jacobians::SymmetryAssumption;
use crate::thermo::GasModel;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line {line}: expected `section.key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {key} expects {expected}, found {value:?}")]
    Type { line: usize, key: String, expected: &'static str, value: String },
    #[error("line {line}: {key} given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
}

/// Everything a subcommand needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gas: GasModel,
    pub model: TurbulenceModel,
    pub solver: SolverConfig,
    pub seed: u64,
    /// States drawn by `verify`.
    pub samples: usize,
    pub output_dir: PathBuf,
    /// Momentum-thickness Reynolds numbers at which profiles are written.
    pub profiles: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gas: GasModel::default(),
            model: TurbulenceModel::default(),
            solver: SolverConfig::default(),
            seed: 0,
            samples: 1000,
            output_dir: PathBuf::from("out"),
            profiles: vec![5000.0, 10000.0, 15000.0],
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "on" | "yes" => Some(true),
        "false" | "off" | "no" => Some(false),
        _ => None,
    }
}

fn parse_auto(s: &str) -> Option<Option<f64>> {
    if s == "auto" {
        Some(None)
    } else {
        parse_f64(s).map(Some)
    }
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(|p| parse_f64(p.trim())).collect()
}

fn symmetry_name(s: SymmetryAssumption) -> &'static str {
    match s {
        SymmetryAssumption::EqualEpsQ1 => "i",
        SymmetryAssumption::EqualEpsK => "ii",
        SymmetryAssumption::Off => "off",
    }
}

fn auto_name(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| format!("{v:e}"))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            };
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |expected: &'static str| ConfigError::Type {
            line,
            key: key.to_string(),
            expected,
            value: value.to_string(),
        };
        let num = || parse_f64(value).ok_or_else(|| bad("a finite number"));
        let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let flag = || parse_bool(value).ok_or_else(|| bad("true or false"));
        let (g, m, s) = (&mut self.gas, &mut self.model, &mut self.solver);
        match key {
            "gas.r" => g.r = num()?,
            "gas.gamma" => g.gamma = num()?,
            "gas.mu_visc" => g.mu_visc = num()?,
            "gas.lambda_visc" => g.lambda_visc = num()?,
            "gas.kappa" => g.kappa = num()?,
            "gas.pr_t" => g.pr_t = num()?,
            "gas.pr_q1" => g.pr_q1 = num()?,
            "gas.t_ref" => g.t_ref = num()?,
            "gas.p_ref" => g.p_ref = num()?,

            "closure.c_mu" => m.constants.c_mu = num()?,
            "closure.c_eps1" => m.constants.c_eps1 = num()?,
            "closure.c_eps2" => m.constants.c_eps2 = num()?,
            "closure.pr_k" => {
                m.constants.pr_k = num()?;
                g.pr_k = m.constants.pr_k;
            }
            "closure.pr_eps" => {
                m.constants.pr_eps = num()?;
                g.pr_eps = m.constants.pr_eps;
            }
            "closure.floor_f_mu" => m.floors.f_mu = num()?,
            "closure.floor_re_t" => m.floors.re_t = num()?,
            "closure.kappa_t_uses_cv" => m.diffusivity.kappa_t_uses_cv = flag()?,
            "closure.symmetry_assumption" => {
                m.diffusivity.symmetry = match value {
                    "i" => SymmetryAssumption::EqualEpsQ1,
                    "ii" => SymmetryAssumption::EqualEpsK,
                    "off" => SymmetryAssumption::Off,
                    _ => return Err(bad("i, ii or off")),
                }
            }
            "closure.dissipation" => {
                m.dissipation = match value {
                    "derived" => DissipationForm::Derived,
                    "printed" => DissipationForm::Printed,
                    _ => return Err(bad("derived or printed")),
                }
            }
            "closure.entropy_clip" => m.disable_clip = !flag()?,

            "grid.nx" => s.nx = count()?,
            "grid.ny" => s.ny = count()?,
            "grid.y_plus_first" => s.y_plus_first = num()?,
            "grid.length" => s.length = parse_auto(value).ok_or_else(|| bad("a number or auto"))?,
            "grid.height" => s.height = parse_auto(value).ok_or_else(|| bad("a number or auto"))?,

            "run.re_theta_inlet" => s.re_theta_inlet = num()?,
            "run.re_theta_target" => s.re_theta_target = num()?,
            "run.mach" => s.mach = num()?,
            "run.t_inf" => s.t_inf = num()?,
            "run.p_inf" => s.p_inf = num()?,
            "run.linearization" => {
                s.linearization = match value {
                    "newton" => Linearization::Newton,
                    "picard" => Linearization::Picard,
                    _ => return Err(bad("newton or picard")),
                }
            }
            "run.relaxation" => s.relaxation = num()?,
            "run.tolerance" => s.tolerance = num()?,
            "run.max_cycles" => s.max_cycles = count()?,
            "run.freestream_intensity" => s.freestream_intensity = num()?,
            "run.freestream_viscosity_ratio" => s.freestream_viscosity_ratio = num()?,
            "run.wake_strength" => s.wake_strength = num()?,
            "run.penalty_y_plus" => s.penalty_y_plus = num()?,
            "run.energy_equation" => s.energy_equation = flag()?,
            "run.seed" => self.seed = value.parse().map_err(|_| bad("a non-negative integer"))?,
            "run.samples" => self.samples = count()?,

            "output.directory" => {
                if value.is_empty() {
                    return Err(bad("a path"));
                }
                self.output_dir = PathBuf::from(value);
            }
            "output.profiles" => {
                self.profiles = parse_list(value).ok_or_else(|| bad("comma-separated numbers"))?;
            }
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: String| Err(ConfigError::Invalid { key: key.to_string(), reason });
        if let Err(e) = self.gas.validate() {
            return invalid("gas", e.to_string());
        }
        let c = &self.model.constants;
        for (key, v) in [("closure.c_mu", c.c_mu), ("closure.c_eps1", c.c_eps1), ("closure.c_eps2", c.c_eps2)] {
            if !(v > 0.0) {
                return invalid(key, format!("{v} must be positive"));
            }
        }
        if !(self.model.floors.f_mu > 0.0) {
            return invalid("closure.floor_f_mu", "must be positive".into());
        }
        if !(self.model.floors.re_t > 0.0) {
            return invalid("closure.floor_re_t", "must be positive".into());
        }
        if let Err(e) = self.solver.validate() {
            let msg = e.to_string();
            let key = msg.split_whitespace().find(|w| w.contains('.')).unwrap_or("run").to_string();
            return invalid(&key, msg);
        }
        if let Some(r) = self.profiles.iter().find(|r| !(**r > 0.0)) {
            return invalid("output.profiles", format!("{r} is not a positive Reynolds number"));
        }
        Ok(())
    }

    /// Every key with its effective value.
    pub fn render(&self) -> String {
        let (g, m, s) = (&self.gas, &self.model, &self.solver);
        let mut out = String::from("# effective configuration\n");
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("writing to a String");
        put("gas.r", format!("{:e}", g.r));
        put("gas.gamma", format!("{:e}", g.gamma));
        put("gas.mu_visc", format!("{:e}", g.mu_visc));
        put("gas.lambda_visc", format!("{:e}", g.lambda_visc));
        put("gas.kappa", format!("{:e}", g.kappa));
        put("gas.pr_t", format!("{:e}", g.pr_t));
        put("gas.pr_q1", format!("{:e}", g.pr_q1));
        put("gas.t_ref", format!("{:e}", g.t_ref));
        put("gas.p_ref", format!("{:e}", g.p_ref));
        put("closure.c_mu", format!("{:e}", m.constants.c_mu));
        put("closure.c_eps1", format!("{:e}", m.constants.c_eps1));
        put("closure.c_eps2", format!("{:e}", m.constants.c_eps2));
        put("closure.pr_k", format!("{:e}", m.constants.pr_k));
        put("closure.pr_eps", format!("{:e}", m.constants.pr_eps));
        put("closure.floor_f_mu", format!("{:e}", m.floors.f_mu));
        put("closure.floor_re_t", format!("{:e}", m.floors.re_t));
        put("closure.kappa_t_uses_cv", m.diffusivity.kappa_t_uses_cv.to_string());
        put("closure.symmetry_assumption", symmetry_name(m.diffusivity.symmetry).to_string());
        put(
            "closure.dissipation",
            match m.dissipation {
                DissipationForm::Derived => "derived",
                DissipationForm::Printed => "printed",
            }
            .to_string(),
        );
        put("closure.entropy_clip", (!m.disable_clip).to_string());
        put("grid.nx", s.nx.to_string());
        put("grid.ny", s.ny.to_string());
        put("grid.y_plus_first", format!("{:e}", s.y_plus_first));
        put("grid.length", auto_name(s.length));
        put("grid.height", auto_name(s.height));
        put("run.re_theta_inlet", format!("{:e}", s.re_theta_inlet));
        put("run.re_theta_target", format!("{:e}", s.re_theta_target));
        put("run.mach", format!("{:e}", s.mach));
        put("run.t_inf", format!("{:e}", s.t_inf));
        put("run.p_inf", format!("{:e}", s.p_inf));
        put(
            "run.linearization",
            match s.linearization {
                Linearization::Newton => "newton",
                Linearization::Picard => "picard",
            }
            .to_string(),
        );
        put("run.relaxation", format!("{:e}", s.relaxation));
        put("run.tolerance", format!("{:e}", s.tolerance));
        put("run.max_cycles", s.max_cycles.to_string());
        put("run.freestream_intensity", format!("{:e}", s.freestream_intensity));
        put("run.freestream_viscosity_ratio", format!("{:e}", s.freestream_viscosity_ratio));
        put("run.wake_strength", format!("{:e}", s.wake_strength));
        put("run.penalty_y_plus", format!("{:e}", s.penalty_y_plus));
        put("run.energy_equation", s.energy_equation.to_string());
        put("run.seed", self.seed.to_string());
        put("run.samples", self.samples.to_string());
        put("output.directory", self.output_dir.display().to_string());
        put("output.profiles", self.profiles.iter().map(|r| format!("{r:e}")).collect::<Vec<_>>().join(","));
        out
    }
}

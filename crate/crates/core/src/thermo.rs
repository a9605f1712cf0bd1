//! Divariant-gas thermodynamics.
//!
//! Every thermodynamic quantity is derived from the chemical potential per
//! unit mass `μ(p, T)` and its first and second partial derivatives:
//!
//! ```text
//! s = −(∂μ/∂T)_p        v = (∂μ/∂p)_T
//! h = μ + T s           e = h − p v
//! α_p = μ_pT / v        β_T = −μ_pp / v
//! c_p = −T μ_TT         c_v = c_p − α_p² v T / β_T
//! ```
//!
//! [`DivariantGas`] is the abstraction boundary. [`GasModel`] implements it for a
//! calorically perfect ideal gas, which is all the flat-plate problem needs.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("non-positive {field}: {value}")]
    Domain { field: &'static str, value: f64 },
    #[error("invalid gas parameter {field}: {value}")]
    Parameter { field: &'static str, value: f64 },
}

/// A gas whose state is fixed by two variables, described through `μ(p, T)`.
pub trait DivariantGas {
    /// Pressure from density and temperature.
    fn pressure(&self, rho: f64, t: f64) -> f64;
    /// Density from pressure and temperature.
    fn density(&self, p: f64, t: f64) -> f64;
    /// Chemical potential per unit mass.
    fn chemical_potential(&self, p: f64, t: f64) -> f64;
    /// `(∂μ/∂T)_p`
    fn mu_t(&self, p: f64, t: f64) -> f64;
    /// `(∂μ/∂p)_T`
    fn mu_p(&self, p: f64, t: f64) -> f64;
    /// `(∂²μ/∂T²)_p`
    fn mu_tt(&self, p: f64, t: f64) -> f64;
    /// `(∂²μ/∂p²)_T`
    fn mu_pp(&self, p: f64, t: f64) -> f64;
    /// `∂²μ/∂p∂T`
    fn mu_pt(&self, p: f64, t: f64) -> f64;
}

/// Calorically perfect ideal gas with molecular transport properties and the
/// turbulent Prandtl numbers used by the closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    /// Specific gas constant [J/(kg·K)].
    pub r: f64,
    pub gamma: f64,
    /// Molecular dynamic viscosity [Pa·s].
    pub mu_visc: f64,
    /// Second viscosity coefficient [Pa·s].
    pub lambda_visc: f64,
    /// Molecular thermal conductivity [W/(m·K)].
    pub kappa: f64,
    pub pr_t: f64,
    pub pr_k: f64,
    pub pr_eps: f64,
    pub pr_q1: f64,
    /// Entropy datum temperature [K].
    pub t_ref: f64,
    /// Entropy datum pressure [Pa].
    pub p_ref: f64,
}

impl Default for GasModel {
    /// Air near 300 K.
    fn default() -> Self {
        let mu_visc = 1.846e-5;
        GasModel {
            r: 287.0,
            gamma: 1.4,
            mu_visc,
            lambda_visc: -2.0 / 3.0 * mu_visc,
            kappa: 0.02624,
            pr_t: 0.9,
            pr_k: 1.0,
            pr_eps: 1.3,
            pr_q1: 1.3,
            t_ref: 300.0,
            p_ref: 101_325.0,
        }
    }
}

impl GasModel {
    pub fn validate(&self) -> Result<(), ThermoError> {
        let checks: [(&'static str, f64, bool); 9] = [
            ("R", self.r, self.r > 0.0),
            ("gamma", self.gamma, self.gamma > 1.0),
            ("mu_visc", self.mu_visc, self.mu_visc >= 0.0),
            ("kappa", self.kappa, self.kappa >= 0.0),
            ("Pr_T", self.pr_t, self.pr_t > 0.0),
            ("Pr_k", self.pr_k, self.pr_k > 0.0),
            ("Pr_eps", self.pr_eps, self.pr_eps > 0.0),
            ("Pr_q1", self.pr_q1, self.pr_q1 > 0.0),
            ("T_ref", self.t_ref, self.t_ref > 0.0),
        ];
        for (field, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(ThermoError::Parameter { field, value });
            }
        }
        if !(self.p_ref > 0.0) {
            return Err(ThermoError::Parameter { field: "p_ref", value: self.p_ref });
        }
        Ok(())
    }

    pub fn cv(&self) -> f64 {
        self.r / (self.gamma - 1.0)
    }

    pub fn cp(&self) -> f64 {
        self.gamma * self.r / (self.gamma - 1.0)
    }

    /// Density of the entropy datum state.
    pub fn rho_ref(&self) -> f64 {
        self.p_ref / (self.r * self.t_ref)
    }

    /// Bulk viscosity `λ + (2/3)μ`.
    pub fn mu_bulk(&self) -> f64 {
        self.lambda_visc + 2.0 / 3.0 * self.mu_visc
    }

    pub fn kinematic_viscosity(&self, rho: f64) -> f64 {
        self.mu_visc / rho
    }

    pub fn sound_speed(&self, t: f64) -> f64 {
        (self.gamma * self.r * t).sqrt()
    }

    /// Generalized entropy per unit mass `ŝ(ρ, T)`, zero at the datum.
    pub fn entropy(&self, rho: f64, t: f64) -> f64 {
        self.cv() * (t / self.t_ref).ln() - self.r * (rho / self.rho_ref()).ln()
    }

    /// Internal energy per unit mass, `e = c_v T`.
    pub fn internal_energy(&self, t: f64) -> f64 {
        self.cv() * t
    }
}

impl DivariantGas for GasModel {
    fn pressure(&self, rho: f64, t: f64) -> f64 {
        rho * self.r * t
    }

    fn density(&self, p: f64, t: f64) -> f64 {
        p / (self.r * t)
    }

    fn chemical_potential(&self, p: f64, t: f64) -> f64 {
        let s = self.cp() * (t / self.t_ref).ln() - self.r * (p / self.p_ref).ln();
        self.cp() * t - t * s
    }

    fn mu_t(&self, p: f64, t: f64) -> f64 {
        -(self.cp() * (t / self.t_ref).ln() - self.r * (p / self.p_ref).ln())
    }

    fn mu_p(&self, p: f64, t: f64) -> f64 {
        self.r * t / p
    }

    fn mu_tt(&self, _p: f64, t: f64) -> f64 {
        -self.cp() / t
    }

    fn mu_pp(&self, p: f64, t: f64) -> f64 {
        -self.r * t / (p * p)
    }

    fn mu_pt(&self, p: f64, _t: f64) -> f64 {
        self.r / p
    }
}

/// Full thermodynamic description of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoState {
    pub rho: f64,
    pub p: f64,
    pub t: f64,
    pub e: f64,
    pub h: f64,
    pub s_hat: f64,
    pub mu_chem: f64,
    pub c_p: f64,
    pub c_v: f64,
    pub alpha_p: f64,
    pub beta_t: f64,
    /// `v α_p T / β_T`
    pub d: f64,
    /// `v α_p / (β_T c_v)`
    pub gamma_bar: f64,
}

fn check_positive(field: &'static str, value: f64) -> Result<(), ThermoError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ThermoError::Domain { field, value })
    }
}

/// Evaluates every thermodynamic quantity at `(ρ, T)` through the `μ(p, T)`
/// derivative relations.
pub fn eval_thermo<G: DivariantGas>(gas: &G, rho: f64, t: f64) -> Result<ThermoState, ThermoError> {
    check_positive("rho", rho)?;
    check_positive("T", t)?;
    let p = gas.pressure(rho, t);
    let v = gas.mu_p(p, t);
    let s_hat = -gas.mu_t(p, t);
    let mu_chem = gas.chemical_potential(p, t);
    let h = mu_chem + t * s_hat;
    let e = h - p * v;
    let alpha_p = gas.mu_pt(p, t) / v;
    let beta_t = -gas.mu_pp(p, t) / v;
    let c_p = -t * gas.mu_tt(p, t);
    let c_v = c_p - alpha_p * alpha_p * v * t / beta_t;
    Ok(ThermoState {
        rho,
        p,
        t,
        e,
        h,
        s_hat,
        mu_chem,
        c_p,
        c_v,
        alpha_p,
        beta_t,
        d: v * alpha_p * t / beta_t,
        gamma_bar: v * alpha_p / (beta_t * c_v),
    })
}

/// Central-difference residual of the Gibbs relation `T dŝ = de + p d(1/ρ)`
/// about `(ρ, T)`. Shrinks at least quadratically with the perturbation.
pub fn gibbs_residual(gas: &GasModel, rho: f64, t: f64, drho: f64, dt: f64) -> Result<f64, ThermoError> {
    let base = eval_thermo(gas, rho, t)?;
    let plus = eval_thermo(gas, rho + drho, t + dt)?;
    let minus = eval_thermo(gas, rho - drho, t - dt)?;
    let ds = plus.s_hat - minus.s_hat;
    let de = plus.e - minus.e;
    let dv = 1.0 / plus.rho - 1.0 / minus.rho;
    Ok((base.t * ds - de - base.p * dv).abs())
}

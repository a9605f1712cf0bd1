//! Lam-Bremhorst k-ε closure written in the turbulent velocity scales
//! `q₀ = √(2k)` and `q₁ = (νε)^{1/4}`.
//!
//! The q₁ dissipation is raised where needed so that the q₁ source never
//! produces negative entropy:
//!
//! ```text
//! −S_q₁ + μ_ε q₁,ᵢq₁,ᵢ/q₁ − (1/3) ρ q₁ uᵢ,ᵢ ≥ 0
//! ```

use std::ops::AddAssign;

use crate::flux_jacobians::{DiffusivityOptions, ViscosityAggregates};
use crate::thermo::GasModel;
use crate::variables::{norm2, PrimitiveGradients, PrimitiveState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureConstants {
    pub c_mu: f64,
    pub c_eps1: f64,
    pub c_eps2: f64,
    pub pr_k: f64,
    pub pr_eps: f64,
}

impl Default for ClosureConstants {
    /// Lam-Bremhorst values.
    fn default() -> Self {
        ClosureConstants { c_mu: 0.09, c_eps1: 1.44, c_eps2: 1.92, pr_k: 1.0, pr_eps: 1.3 }
    }
}

impl ClosureConstants {
    /// `Pr_q₁`, tied to `Pr_ε`.
    pub fn pr_q1(&self) -> f64 {
        self.pr_eps
    }
}

/// Lower bounds that keep the singular closure terms finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Floors {
    pub q0: f64,
    pub q1: f64,
    pub f_mu: f64,
    pub re_t: f64,
}

impl Floors {
    /// `1e-8 ×` the reference velocity for both turbulent scales.
    pub fn for_reference_velocity(u_ref: f64) -> Self {
        Floors { q0: 1e-8 * u_ref, q1: 1e-8 * u_ref, f_mu: 1e-6, re_t: 1e-12 }
    }
}

impl Default for Floors {
    fn default() -> Self {
        Floors::for_reference_velocity(1.0)
    }
}

/// Counts of floor and clip activations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClosureEvents {
    pub q0_floor: u64,
    pub q1_floor: u64,
    pub re_t_floor: u64,
    pub f_mu_floor: u64,
    pub clips: u64,
}

impl AddAssign for ClosureEvents {
    fn add_assign(&mut self, o: Self) {
        self.q0_floor += o.q0_floor;
        self.q1_floor += o.q1_floor;
        self.re_t_floor += o.re_t_floor;
        self.f_mu_floor += o.f_mu_floor;
        self.clips += o.clips;
    }
}

fn floored(value: f64, floor: f64, counter: &mut u64) -> f64 {
    if value < floor {
        *counter += 1;
        floor
    } else {
        value
    }
}

/// How the q₁ dissipation `D_q₁` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DissipationForm {
    /// `(C_ε2 f₂/4) ρ q₁⁵ / (ν k)`, obtained from the ε-equation dissipation.
    #[default]
    Derived,
    /// `(C_ε2 f₂/4) q₁⁵ / (ρ ν k)`, the literal printed variant.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingInputs {
    /// `(1/4)(q₀/q₁)⁴`
    pub re_t: f64,
    /// `ρ q₀ y / (√2 μ)`
    pub re_y: f64,
    pub y: f64,
}

impl DampingInputs {
    pub fn from_state(
        y: &PrimitiveState,
        wall_distance: f64,
        gas: &GasModel,
        floors: &Floors,
        events: &mut ClosureEvents,
    ) -> Self {
        let q1 = floored(y.q1, floors.q1, &mut events.q1_floor);
        DampingInputs {
            re_t: 0.25 * (y.q0 / q1).powi(4),
            re_y: y.rho * y.q0 * wall_distance / (std::f64::consts::SQRT_2 * gas.mu_visc),
            y: wall_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Damping {
    pub f_mu: f64,
    pub f1: f64,
    pub f2: f64,
}

pub fn damping_functions(d: &DampingInputs, floors: &Floors, events: &mut ClosureEvents) -> Damping {
    let re_t = if d.re_t <= floors.re_t {
        events.re_t_floor += 1;
        floors.re_t
    } else {
        d.re_t
    };
    let wall = 1.0 - (-0.0165 * d.re_y).exp();
    let f_mu = wall * wall * (1.0 + 20.5 / re_t);
    let f_mu_safe = floored(f_mu, floors.f_mu, &mut events.f_mu_floor);
    Damping { f_mu, f1: 1.0 + (0.05 / f_mu_safe).powi(3), f2: 1.0 - (-re_t * re_t).exp() }
}

/// `μ_T = (C_μ/4) f_μ ρ ν (q₀/q₁)⁴`, identical to `C_μ f_μ ρ k²/ε` with
/// `k = q₀²/2` and `ε = q₁⁴/ν`.
pub fn eddy_viscosity(
    y: &PrimitiveState,
    f_mu: f64,
    c: &ClosureConstants,
    gas: &GasModel,
    floors: &Floors,
    events: &mut ClosureEvents,
) -> f64 {
    if y.q0 == 0.0 {
        return 0.0;
    }
    let q1 = floored(y.q1, floors.q1, &mut events.q1_floor);
    let nu = gas.kinematic_viscosity(y.rho);
    0.25 * c.c_mu * f_mu * y.rho * nu * (y.q0 / q1).powi(4)
}

/// Dissipation `ε = q₁⁴/ν`.
pub fn eps_from_q1(q1: f64, nu: f64) -> f64 {
    q1.powi(4) / nu
}

/// `q₁ = (ν ε)^{1/4}`.
pub fn q1_from_eps(eps: f64, nu: f64) -> f64 {
    (nu * eps).powf(0.25)
}

/// `dq₁/dε = q₁ / (4ε)`.
pub fn dq1_deps(q1: f64, eps: f64) -> f64 {
    q1 / (4.0 * eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceTerms {
    pub s_q0: f64,
    pub s_q1: f64,
    pub p_q1: f64,
    pub d_q1: f64,
    pub r_q1: f64,
    /// Production of k, `2 μ_T S^d_ij S^d_ij`.
    pub p_k: f64,
}

/// Production of k.
pub fn production_k(grads: &PrimitiveGradients, mu_t: f64) -> f64 {
    2.0 * mu_t * grads.deviatoric_contraction()
}

/// q₀-equation source:
///
/// ```text
/// S_q₀ = (2/q₀) μ_T S^d_ij uᵢ,j − (1/3) ρ q₀ uᵢ,ᵢ − ρε/q₀ + μ_k q₀,ᵢq₀,ᵢ/q₀
/// ```
pub fn source_q0(
    y: &PrimitiveState,
    grads: &PrimitiveGradients,
    visc: &ViscosityAggregates,
    gas: &GasModel,
    floors: &Floors,
    events: &mut ClosureEvents,
) -> f64 {
    let q0 = floored(y.q0, floors.q0, &mut events.q0_floor);
    let eps = eps_from_q1(y.q1, gas.kinematic_viscosity(y.rho));
    production_k(grads, visc.mu_t) / q0 - y.rho * y.q0 * grads.divergence() / 3.0 - y.rho * eps / q0
        + visc.mu_k * norm2(&grads.dq0) / q0
}

/// q₁-equation source split into production, dissipation, and the extra
/// gradient term. `s_q0` is left at zero.
#[allow(clippy::too_many_arguments)]
pub fn source_q1(
    y: &PrimitiveState,
    grads: &PrimitiveGradients,
    visc: &ViscosityAggregates,
    c: &ClosureConstants,
    damping: &Damping,
    gas: &GasModel,
    form: DissipationForm,
    floors: &Floors,
    events: &mut ClosureEvents,
) -> SourceTerms {
    let q0 = floored(y.q0, floors.q0, &mut events.q0_floor);
    let q1 = floored(y.q1, floors.q1, &mut events.q1_floor);
    let k = 0.5 * q0 * q0;
    let nu = gas.kinematic_viscosity(y.rho);
    let p_k = production_k(grads, visc.mu_t);
    let p_q1 = 0.25 * c.c_eps1 * damping.f1 * (y.q1 / k) * (p_k + 2.0 / 3.0 * y.rho * grads.divergence() * k);
    let d_q1 = match form {
        DissipationForm::Derived => 0.25 * c.c_eps2 * damping.f2 * y.rho * y.q1.powi(5) / (nu * k),
        DissipationForm::Printed => 0.25 * c.c_eps2 * damping.f2 * y.q1.powi(5) / (y.rho * nu * k),
    };
    let r_q1 = 3.0 * visc.mu_eps * norm2(&grads.dq1) / q1;
    SourceTerms { s_q0: 0.0, s_q1: p_q1 - d_q1 + r_q1, p_q1, d_q1, r_q1, p_k }
}

/// Left side of the strict entropy condition for the q₁ source.
pub fn entropy_slack(
    s: &SourceTerms,
    y: &PrimitiveState,
    grads: &PrimitiveGradients,
    visc: &ViscosityAggregates,
    floors: &Floors,
) -> f64 {
    let q1 = y.q1.max(floors.q1);
    -s.s_q1 + visc.mu_eps * norm2(&grads.dq1) / q1 - y.rho * y.q1 * grads.divergence() / 3.0
}

/// Raises `D_q₁` so that [`entropy_slack`] is non-negative.
pub fn entropy_clip(
    s: &SourceTerms,
    y: &PrimitiveState,
    grads: &PrimitiveGradients,
    visc: &ViscosityAggregates,
    floors: &Floors,
    events: &mut ClosureEvents,
) -> SourceTerms {
    let q1 = y.q1.max(floors.q1);
    let bound = s.p_q1 + s.r_q1 - visc.mu_eps * norm2(&grads.dq1) / q1 + y.rho * y.q1 * grads.divergence() / 3.0;
    if s.d_q1 >= bound {
        return *s;
    }
    events.clips += 1;
    let mut out = *s;
    out.d_q1 = bound;
    out.s_q1 = out.p_q1 - out.d_q1 + out.r_q1;
    // absorb rounding so the condition holds as evaluated
    for _ in 0..4 {
        let slack = entropy_slack(&out, y, grads, visc, floors);
        if slack >= 0.0 {
            break;
        }
        out.d_q1 -= slack * (1.0 + 1e-15) - f64::MIN_POSITIVE;
        out.s_q1 = out.p_q1 - out.d_q1 + out.r_q1;
    }
    out
}

/// Everything the closure provides at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointClosure {
    pub damping: Damping,
    pub mu_t: f64,
    pub visc: ViscosityAggregates,
    /// Sources after entropy clipping (when enabled).
    pub sources: SourceTerms,
    pub unclipped: SourceTerms,
}

/// Closure configuration bundle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TurbulenceModel {
    pub constants: ClosureConstants,
    pub floors: Floors,
    pub dissipation: DissipationForm,
    pub diffusivity: DiffusivityOptions,
    /// Skip the entropy clip (diagnostics only).
    pub disable_clip: bool,
}

impl TurbulenceModel {
    pub fn damping(
        &self,
        y: &PrimitiveState,
        wall_distance: f64,
        gas: &GasModel,
        events: &mut ClosureEvents,
    ) -> Damping {
        let d = DampingInputs::from_state(y, wall_distance, gas, &self.floors, events);
        damping_functions(&d, &self.floors, events)
    }

    pub fn evaluate(
        &self,
        y: &PrimitiveState,
        grads: &PrimitiveGradients,
        wall_distance: f64,
        gas: &GasModel,
        events: &mut ClosureEvents,
    ) -> PointClosure {
        let damping = self.damping(y, wall_distance, gas, events);
        let mu_t = eddy_viscosity(y, damping.f_mu, &self.constants, gas, &self.floors, events);
        let visc = ViscosityAggregates::new(gas, mu_t, self.diffusivity);
        let mut unclipped =
            source_q1(y, grads, &visc, &self.constants, &damping, gas, self.dissipation, &self.floors, events);
        unclipped.s_q0 = source_q0(y, grads, &visc, gas, &self.floors, events);
        let sources =
            if self.disable_clip { unclipped } else { entropy_clip(&unclipped, y, grads, &visc, &self.floors, events) };
        PointClosure { damping, mu_t, visc, sources, unclipped }
    }
}

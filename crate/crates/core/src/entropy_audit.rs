//! Pointwise entropy production.
//!
//! With `H = −ρŝ` the steady entropy balance reads
//! `(H uᵢ),ᵢ − (V·Fᵢ^diff),ᵢ = −V,ᵢ·K_ij V,j + V·S`, so the production
//! `V,ᵢ·K_ij V,j − V·S` must be non-negative. Expanded in primitive
//! gradients it splits into
//!
//! ```text
//! Υ/T + κ̂ T,ᵢT,ᵢ/T² + ρε/T + μ_ε q₁,ᵢq₁,ᵢ/T − ρ q₁² uᵢ,ᵢ/(3T) − q₁ S_q₁/T
//! ```
//!
//! where `Υ` is the molecular dissipation function: the turbulent part of
//! the viscous dissipation cancels against the production inside `S_q₀`.

use crate::closure::PointClosure;
use crate::flux_jacobians::{Vec7, ViscosityAggregates};
use crate::thermo::GasModel;
use crate::variables::{norm2, PrimitiveGradients, PrimitiveState};

/// `Υ = 2μ̂ S^d_ij S^d_ij + μ_b (S_kk)²` for velocity gradients `du[i][j] = ∂uᵢ/∂x_j`.
pub fn dissipation_function(du: &[[f64; 3]; 3], visc: &ViscosityAggregates) -> f64 {
    let g = PrimitiveGradients { du: *du, ..Default::default() };
    let sd = g.deviatoric_strain();
    let contraction: f64 = sd.iter().flatten().map(|s| s * s).sum();
    let div = g.divergence();
    2.0 * visc.mu_hat * contraction + visc.mu_bulk * div * div
}

/// Mathematical entropy per unit volume, `H = −ρŝ`.
pub fn entropy_density(y: &PrimitiveState, gas: &GasModel) -> f64 {
    -y.rho * gas.entropy(y.rho, y.t)
}

/// Source vector `S` of the conservation system at a point: the gradient of
/// the isotropic turbulent pressure `P = ρ(q₀² + q₁²)/3` in the momentum
/// rows, its work in the energy row, and the q₀/q₁ sources.
pub fn source_vector(y: &PrimitiveState, grads: &PrimitiveGradients, s_q0: f64, s_q1: f64) -> Vec7 {
    let qq = y.q0 * y.q0 + y.q1 * y.q1;
    let p_iso = y.rho * qq / 3.0;
    let mut s = Vec7::zeros();
    for i in 0..3 {
        let dp = (grads.drho[i] * qq + 2.0 * y.rho * (y.q0 * grads.dq0[i] + y.q1 * grads.dq1[i])) / 3.0;
        s[1 + i] = -dp;
        s[4] -= dp * y.u[i];
    }
    s[4] -= p_iso * grads.divergence();
    s[5] = s_q0;
    s[6] = s_q1;
    s
}

/// Split of the local entropy production, each term already divided by `T`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyBudget {
    pub upsilon_over_t: f64,
    pub thermal: f64,
    pub rho_eps_over_t: f64,
    pub q1_diffusion: f64,
    pub dilatation: f64,
    pub source_sink: f64,
    pub total: f64,
}

impl EntropyBudget {
    pub fn components(&self) -> [f64; 6] {
        [self.upsilon_over_t, self.thermal, self.rho_eps_over_t, self.q1_diffusion, self.dilatation, self.source_sink]
    }
}

pub fn clausius_duhem_budget(
    y: &PrimitiveState,
    grads: &PrimitiveGradients,
    closure: &PointClosure,
    gas: &GasModel,
) -> EntropyBudget {
    let t = y.t;
    let visc = &closure.visc;
    let eps = y.q1.powi(4) / gas.kinematic_viscosity(y.rho);
    let mut b = EntropyBudget {
        upsilon_over_t: dissipation_function(&grads.du, &ViscosityAggregates::molecular(gas)) / t,
        thermal: visc.kappa_hat * norm2(&grads.dt) / (t * t),
        rho_eps_over_t: y.rho * eps / t,
        q1_diffusion: visc.mu_eps * norm2(&grads.dq1) / t,
        dilatation: -y.rho * y.q1 * y.q1 * grads.divergence() / (3.0 * t),
        source_sink: -y.q1 * closure.sources.s_q1 / t,
        total: 0.0,
    };
    b.total = b.components().iter().sum();
    b
}

/// Production in the form usually plotted across a boundary layer (not
/// divided by `T`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlottedProduction {
    /// `ρε + q₁ (D_q₁ − P_q₁ − (2/3) R_q₁)`
    pub turbulent: f64,
    /// `Υ + turbulent`
    pub total: f64,
}

pub fn plotted_production(
    y: &PrimitiveState,
    grads: &PrimitiveGradients,
    closure: &PointClosure,
    gas: &GasModel,
) -> PlottedProduction {
    let s = &closure.sources;
    let eps = y.q1.powi(4) / gas.kinematic_viscosity(y.rho);
    let turbulent = y.rho * eps + y.q1 * (s.d_q1 - s.p_q1 - 2.0 / 3.0 * s.r_q1);
    let upsilon = dissipation_function(&grads.du, &ViscosityAggregates::molecular(gas));
    PlottedProduction { turbulent, total: upsilon + turbulent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{ClosureEvents, TurbulenceModel};
    use crate::flux_jacobians::k_quadratic_form;
    use crate::sampling::StateSampler;
    use crate::variables::{cons_to_prim, entropy_gradients_from_primitive, prim_to_cons, prim_to_entropy, ConsVars};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_shear_dissipation() {
        let g = GasModel::default();
        let visc = ViscosityAggregates::new(&g, 2e-3, Default::default());
        let mut du = [[0.0; 3]; 3];
        du[0][1] = 250.0;
        let expect = visc.mu_hat * 250.0 * 250.0;
        assert!((dissipation_function(&du, &visc) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn stokes_fluid_has_no_dilatational_dissipation() {
        let g = GasModel::default();
        let visc = ViscosityAggregates::molecular(&g);
        let mut du = [[0.0; 3]; 3];
        for (i, row) in du.iter_mut().enumerate() {
            row[i] = 7.0;
        }
        assert!(dissipation_function(&du, &visc).abs() < 1e-18);
    }

    #[test]
    fn entropy_density_is_convex_in_conservative_variables() {
        let g = GasModel::default();
        let sampler = StateSampler { q0: (0.5, 30.0), q1: (0.5, 30.0), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h_of = |u: &[f64; 7]| entropy_density(&cons_to_prim(&ConsVars(*u), &g).unwrap(), &g);
        for _ in 0..500 {
            let y = sampler.state(&mut rng);
            let u0 = prim_to_cons(&y, &g).0;
            let mut dir = [0.0; 7];
            for (a, d) in dir.iter_mut().enumerate() {
                *d = rng.gen_range(-1.0..1.0) * u0[a].abs().max(1e-3) * 1e-3;
            }
            let at = |s: f64| {
                let mut u = u0;
                for a in 0..7 {
                    u[a] += s * dir[a];
                }
                h_of(&u)
            };
            let second = at(1.0) - 2.0 * at(0.0) + at(-1.0);
            assert!(second > -1e-9 * at(0.0).abs().max(1.0), "{second}");
        }
    }

    #[test]
    fn laminar_limit_reduces_to_viscous_and_thermal() {
        let g = GasModel::default();
        let model = TurbulenceModel::default();
        let y = PrimitiveState::new(1.2, [30.0, 1.0, 0.0], 320.0, 0.0, 0.0);
        let mut grads = PrimitiveGradients::default();
        grads.du[0][1] = 800.0;
        grads.du[1][1] = -3.0;
        grads.dt = [0.0, 50.0, 0.0];
        let mut ev = ClosureEvents::default();
        let pc = model.evaluate(&y, &grads, 1e-3, &g, &mut ev);
        let b = clausius_duhem_budget(&y, &grads, &pc, &g);
        let expect =
            dissipation_function(&grads.du, &ViscosityAggregates::molecular(&g)) / y.t + g.kappa * 2500.0 / (y.t * y.t);
        assert!((b.total - expect).abs() < 1e-12 * expect);
        assert!(b.total > 0.0);
    }

    #[test]
    fn homogeneous_decay_produces_entropy() {
        let g = GasModel::default();
        let model = TurbulenceModel::default();
        let y = PrimitiveState::new(1.0, [5.0, 0.0, 0.0], 300.0, 2.0, 0.4);
        let grads = PrimitiveGradients::default();
        let mut ev = ClosureEvents::default();
        let pc = model.evaluate(&y, &grads, 0.05, &g, &mut ev);
        let b = clausius_duhem_budget(&y, &grads, &pc, &g);
        assert!(b.total > 0.0);
        assert!(b.rho_eps_over_t > 0.0 && b.source_sink > 0.0);
    }

    fn v_dot_s(y: &PrimitiveState, grads: &PrimitiveGradients, pc: &PointClosure, g: &GasModel) -> f64 {
        let v = Vec7::from_column_slice(&prim_to_entropy(y, g).0);
        v.dot(&source_vector(y, grads, pc.sources.s_q0, pc.sources.s_q1))
    }

    #[test]
    fn budget_equals_quadratic_form_minus_source_work() {
        let g = GasModel::default();
        let model = TurbulenceModel::default();
        let sampler = StateSampler { q0: (0.1, 30.0), q1: (0.1, 30.0), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let y = sampler.state(&mut rng);
            let grads = sampler.gradients(&mut rng);
            let d = sampler.wall_distance(&mut rng);
            let mut ev = ClosureEvents::default();
            let pc = model.evaluate(&y, &grads, d, &g, &mut ev);
            let gv = entropy_gradients_from_primitive(&y, &grads, &g);
            let quad = k_quadratic_form(&y, &pc.visc, &gv);
            let vs = v_dot_s(&y, &grads, &pc, &g);
            let b = clausius_duhem_budget(&y, &grads, &pc, &g);
            let scale = quad.abs() + vs.abs();
            assert!((quad - vs - b.total).abs() <= 1e-9 * scale, "{} vs {}", quad - vs, b.total);
        }
    }

    #[test]
    fn clipped_production_is_non_negative() {
        let g = GasModel::default();
        let model = TurbulenceModel::default();
        let sampler = StateSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100_000 {
            let y = sampler.state(&mut rng);
            let grads = sampler.gradients(&mut rng);
            let d = sampler.wall_distance(&mut rng);
            let mut ev = ClosureEvents::default();
            let pc = model.evaluate(&y, &grads, d, &g, &mut ev);
            let b = clausius_duhem_budget(&y, &grads, &pc, &g);
            let mag: f64 = b.components().iter().map(|c| c.abs()).sum();
            assert!(b.total >= -1e-12 * mag, "total {} at {:?}", b.total, y);
        }
    }

    #[test]
    fn plotted_form_matches_budget_terms() {
        // ρ q₁ … / T pieces regroup into the plotted turbulent production
        let g = GasModel::default();
        let model = TurbulenceModel::default();
        let y = PrimitiveState::new(1.1, [20.0, 0.0, 0.0], 300.0, 1.2, 0.3);
        let mut grads = PrimitiveGradients::default();
        grads.du[0][1] = 400.0;
        grads.dq1 = [0.0, 30.0, 0.0];
        let mut ev = ClosureEvents::default();
        let pc = model.evaluate(&y, &grads, 2e-3, &g, &mut ev);
        let b = clausius_duhem_budget(&y, &grads, &pc, &g);
        let p = plotted_production(&y, &grads, &pc, &g);
        let regrouped = (b.rho_eps_over_t + b.source_sink + b.q1_diffusion) * y.t;
        assert!((regrouped - p.turbulent).abs() < 1e-10 * p.turbulent.abs().max(1.0));
    }
}

//! Fluxes and coefficient matrices of the quasi-linear entropy-variable form
//!
//! ```text
//! A₀ V,t + Aᵢ V,ᵢ = (K_ij V,j),ᵢ + S
//! ```
//!
//! with `A₀ = ∂U/∂V`, `Aᵢ = ∂Fᵢ^adv/∂V` and `K_ij V,j = Fᵢ^diff`.
//!
//! Index convention for 7-vectors: `0` mass, `1..=3` momentum, `4` energy,
//! `5` q₀, `6` q₁.

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};

use crate::closure::{ClosureEvents, TurbulenceModel};
use crate::entropy_audit::{dissipation_function, entropy_density};
use crate::thermo::GasModel;
use crate::variables::{norm2, prim_to_cons, prim_to_entropy, PrimitiveGradients, PrimitiveState, NVARS};

pub type Mat7 = SMatrix<f64, NVARS, NVARS>;
pub type Vec7 = SVector<f64, NVARS>;

const ENERGY: usize = 4;

/// Which diffusivity identity makes `[K_ij]` symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetryAssumption {
    /// `μ_q₁ = μ_ε`
    #[default]
    EqualEpsQ1,
    /// `μ_q₁ = μ_k` and `μ_ε = μ_k`
    EqualEpsK,
    /// `μ_q₁ = μ + μ_T/Pr_q₁` and `μ_ε = μ + μ_T/Pr_ε` taken as given.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiffusivityOptions {
    pub symmetry: SymmetryAssumption,
    /// Use `κ_T = c_v μ_T / Pr_T` instead of `c_p μ_T / Pr_T`.
    pub kappa_t_uses_cv: bool,
}

/// Effective transport coefficients at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityAggregates {
    pub mu_visc: f64,
    pub mu_t: f64,
    /// `μ + μ_T`
    pub mu_hat: f64,
    /// `λ − (2/3) μ_T`
    pub lambda_hat: f64,
    /// `λ̂ + 2μ̂`
    pub chi: f64,
    /// `λ + (2/3) μ`
    pub mu_bulk: f64,
    /// `κ + κ_T`
    pub kappa_hat: f64,
    pub mu_k: f64,
    pub mu_q1: f64,
    pub mu_eps: f64,
}

impl ViscosityAggregates {
    pub fn new(gas: &GasModel, mu_t: f64, opts: DiffusivityOptions) -> Self {
        let mu = gas.mu_visc;
        let lambda_hat = gas.lambda_visc - 2.0 / 3.0 * mu_t;
        let mu_hat = mu + mu_t;
        let c = if opts.kappa_t_uses_cv { gas.cv() } else { gas.cp() };
        let mu_k = mu + mu_t / gas.pr_k;
        let (mu_q1, mu_eps) = match opts.symmetry {
            SymmetryAssumption::EqualEpsQ1 => {
                let m = mu + mu_t / gas.pr_eps;
                (m, m)
            }
            SymmetryAssumption::EqualEpsK => (mu_k, mu_k),
            SymmetryAssumption::Off => (mu + mu_t / gas.pr_q1, mu + mu_t / gas.pr_eps),
        };
        ViscosityAggregates {
            mu_visc: mu,
            mu_t,
            mu_hat,
            lambda_hat,
            chi: lambda_hat + 2.0 * mu_hat,
            mu_bulk: gas.mu_bulk(),
            kappa_hat: gas.kappa + c * mu_t / gas.pr_t,
            mu_k,
            mu_q1,
            mu_eps,
        }
    }

    /// Molecular coefficients only (`μ_T = 0`).
    pub fn molecular(gas: &GasModel) -> Self {
        Self::new(gas, 0.0, DiffusivityOptions::default())
    }
}

/// `Fᵢ^adv = uᵢ U + p (0, δ₁ᵢ, δ₂ᵢ, δ₃ᵢ, uᵢ, 0, 0)`
pub fn advective_flux(y: &PrimitiveState, gas: &GasModel, i: usize) -> Vec7 {
    let u = prim_to_cons(y, gas).0;
    let p = y.pressure(gas);
    let mut f = Vec7::from_fn(|a, _| y.u[i] * u[a]);
    f[1 + i] += p;
    f[ENERGY] += p * y.u[i];
    f
}

/// Viscous stress `τ_ij = 2μ̂ S^d_ij + μ_b S_kk δ_ij`.
pub fn stress(grads: &PrimitiveGradients, visc: &ViscosityAggregates) -> [[f64; 3]; 3] {
    let sd = grads.deviatoric_strain();
    let div = grads.divergence();
    let mut tau = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            tau[i][j] = 2.0 * visc.mu_hat * sd[i][j];
        }
        tau[i][i] += visc.mu_bulk * div;
    }
    tau
}

/// Diffusive fluxes `F₁^diff, F₂^diff, F₃^diff`.
pub fn diffusive_flux(y: &PrimitiveState, grads: &PrimitiveGradients, visc: &ViscosityAggregates) -> [Vec7; 3] {
    let tau = stress(grads, visc);
    let mut out = [Vec7::zeros(); 3];
    for (i, f) in out.iter_mut().enumerate() {
        for a in 0..3 {
            f[1 + a] = tau[a][i];
        }
        let work: f64 = (0..3).map(|j| tau[i][j] * y.u[j]).sum();
        f[ENERGY] =
            work + visc.kappa_hat * grads.dt[i] + visc.mu_k * y.q0 * grads.dq0[i] + visc.mu_q1 * y.q1 * grads.dq1[i];
        f[5] = visc.mu_k * grads.dq0[i];
        f[6] = visc.mu_eps * grads.dq1[i];
    }
    out
}

/// `z = (1, u₁, u₂, u₃, e_tot, q₀, q₁)`, i.e. `U/ρ`.
fn unit_cons(y: &PrimitiveState, gas: &GasModel) -> Vec7 {
    Vec7::from_column_slice(&[1.0, y.u[0], y.u[1], y.u[2], y.e_tot(gas), y.q0, y.q1])
}

/// `A₀ = ∂U/∂V` for the ideal gas:
///
/// ```text
/// A₀ = (ρ/R) z zᵀ + ρT M
/// ```
///
/// where `z = U/ρ` and `M` is zero in the mass row/column, the identity on
/// the five velocity-like slots `w = (u, q₀, q₁)`, `w` in the energy
/// row/column, and `|w|² + c_v T` on the energy diagonal.
pub fn a0_matrix(y: &PrimitiveState, gas: &GasModel) -> Mat7 {
    let z = unit_cons(y, gas);
    let rho_t = y.rho * y.t;
    let mut a0 = (y.rho / gas.r) * z * z.transpose();
    let w_slots = [1usize, 2, 3, 5, 6];
    let w = y.w();
    for (&s, &ws) in w_slots.iter().zip(w.iter()) {
        a0[(s, s)] += rho_t;
        a0[(s, ENERGY)] += rho_t * ws;
        a0[(ENERGY, s)] += rho_t * ws;
    }
    a0[(ENERGY, ENERGY)] += rho_t * (2.0 * y.k_tot() + gas.cv() * y.t);
    a0
}

/// `Aᵢ = ∂Fᵢ^adv/∂V`:
///
/// ```text
/// Aᵢ = uᵢ A₀ + ρT (z nᵢᵀ + nᵢ zᵀ) + pT (nᵢ e₅ᵀ + e₅ nᵢᵀ)
/// ```
///
/// with `nᵢ = e_{1+i} + uᵢ e₅` (energy slot `e₅`).
pub fn ai_matrix(y: &PrimitiveState, gas: &GasModel, i: usize) -> Mat7 {
    let z = unit_cons(y, gas);
    let mut n = Vec7::zeros();
    n[1 + i] = 1.0;
    n[ENERGY] = y.u[i];
    let mut e5 = Vec7::zeros();
    e5[ENERGY] = 1.0;
    let rho_t = y.rho * y.t;
    let pt = y.pressure(gas) * y.t;
    y.u[i] * a0_matrix(y, gas)
        + rho_t * (z * n.transpose() + n * z.transpose())
        + pt * (n * e5.transpose() + e5 * n.transpose())
}

/// Derivative of `τ_ai` with respect to `u_b,j`.
fn stress_sensitivity(visc: &ViscosityAggregates, a: usize, i: usize, b: usize, j: usize) -> f64 {
    let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
    visc.mu_hat * (d(a, b) * d(i, j) + d(a, j) * d(i, b)) + visc.lambda_hat * d(a, i) * d(b, j)
}

/// `Σ_b (∂τ_ai/∂u_b,j) u_b`
fn stress_work(visc: &ViscosityAggregates, u: &[f64; 3], a: usize, i: usize, j: usize) -> f64 {
    let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
    visc.mu_hat * (d(i, j) * u[a] + d(a, j) * u[i]) + visc.lambda_hat * (d(a, i) * u[j])
}

/// Diffusivity block `K_ij`, assembled from the diffusive flux through the
/// gradient relations so that `Σ_j K_ij V,j = Fᵢ^diff`.
///
/// Under `μ_q₁ = μ_ε` the diagonal blocks reduce to
///
/// ```text
/// K₁₁ = T [ 0  0     0   0   0       0      0
///           0  χ     0   0   χu₁     0      0
///           0  0     μ̂   0   μ̂u₂     0      0
///           0  0     0   μ̂   μ̂u₃     0      0
///           0  χu₁   μ̂u₂ μ̂u₃ k₅₅     μ_k q₀ μ_ε q₁
///           0  0     0   0   μ_k q₀  μ_k    0
///           0  0     0   0   μ_ε q₁  0      μ_ε ]
/// k₅₅ = χu₁² + μ̂(u₂² + u₃²) + κ̂T + μ_k q₀² + μ_ε q₁²
/// ```
///
/// and off-diagonal blocks carry `λ̂`, `μ̂` and `(λ̂ + μ̂) uᵢu_j`.
pub fn kij_matrix(y: &PrimitiveState, visc: &ViscosityAggregates, i: usize, j: usize) -> Mat7 {
    let t = y.t;
    let u = y.u;
    let mut k = Mat7::zeros();
    for a in 0..3 {
        for b in 0..3 {
            k[(1 + a, 1 + b)] = t * stress_sensitivity(visc, a, i, b, j);
        }
    }
    for a in 0..3 {
        k[(1 + a, ENERGY)] = t * stress_work(visc, &u, a, i, j);
        k[(ENERGY, 1 + a)] = t * stress_work(visc, &u, a, j, i);
    }
    let d = if i == j { 1.0 } else { 0.0 };
    let k55 = visc.mu_hat * (d * norm2(&u) + u[i] * u[j]) + visc.lambda_hat * (u[i] * u[j]);
    k[(ENERGY, ENERGY)] = t * k55;
    if i == j {
        k[(ENERGY, ENERGY)] += t * (visc.kappa_hat * t + visc.mu_k * y.q0 * y.q0 + visc.mu_q1 * y.q1 * y.q1);
        k[(ENERGY, 5)] = t * visc.mu_k * y.q0;
        k[(ENERGY, 6)] = t * visc.mu_q1 * y.q1;
        k[(5, ENERGY)] = t * visc.mu_k * y.q0;
        k[(5, 5)] = t * visc.mu_k;
        k[(6, ENERGY)] = t * visc.mu_eps * y.q1;
        k[(6, 6)] = t * visc.mu_eps;
    }
    k
}

/// The 21×21 block matrix `[K_ij]`.
pub fn k_global(y: &PrimitiveState, visc: &ViscosityAggregates) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(3 * NVARS, 3 * NVARS);
    for i in 0..3 {
        for j in 0..3 {
            k.view_mut((i * NVARS, j * NVARS), (NVARS, NVARS)).copy_from(&kij_matrix(y, visc, i, j));
        }
    }
    k
}

/// All coefficient matrices at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffMatrices {
    pub a0: Mat7,
    pub a: [Mat7; 3],
    pub k: [[Mat7; 3]; 3],
}

impl CoeffMatrices {
    pub fn evaluate(y: &PrimitiveState, gas: &GasModel, visc: &ViscosityAggregates) -> Self {
        CoeffMatrices {
            a0: a0_matrix(y, gas),
            a: [ai_matrix(y, gas, 0), ai_matrix(y, gas, 1), ai_matrix(y, gas, 2)],
            k: [0, 1, 2].map(|i| [0, 1, 2].map(|j| kij_matrix(y, visc, i, j))),
        }
    }
}

/// `‖M − Mᵀ‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = 0.5 * (m + m.transpose());
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// `Σ_ij V,ᵢᵀ K_ij V,j` for entropy-variable gradients indexed `[a][j]`.
pub fn k_quadratic_form(y: &PrimitiveState, visc: &ViscosityAggregates, grad_v: &[[f64; 3]; NVARS]) -> f64 {
    let col = |j: usize| Vec7::from_fn(|a, _| grad_v[a][j]);
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += col(i).dot(&(kij_matrix(y, visc, i, j) * col(j)));
        }
    }
    acc
}

/// Explicit expansion of `V,ᵢ·K_ij V,j` in primitive gradients:
///
/// ```text
/// Υ(μ̂)/T + κ̂ T,ᵢT,ᵢ/T² + μ_k q₀,ᵢq₀,ᵢ/T + μ_ε q₁,ᵢq₁,ᵢ/T + (T,ᵢ/T²)(μ_q₁ − μ_ε) q₁ q₁,ᵢ
/// ```
///
/// Returns `(total, cross_term)`; the cross term vanishes when `μ_q₁ = μ_ε`.
pub fn k_quadratic_expansion(y: &PrimitiveState, grads: &PrimitiveGradients, visc: &ViscosityAggregates) -> (f64, f64) {
    let t = y.t;
    let upsilon = dissipation_function(&grads.du, visc);
    let cross: f64 = (0..3).map(|i| grads.dt[i] / (t * t) * (visc.mu_q1 - visc.mu_eps) * y.q1 * grads.dq1[i]).sum();
    let total = upsilon / t
        + visc.kappa_hat * norm2(&grads.dt) / (t * t)
        + visc.mu_k * norm2(&grads.dq0) / t
        + visc.mu_eps * norm2(&grads.dq1) / t
        + cross;
    (total, cross)
}

/// Conservative and quasi-linear steady residuals at one point of a smooth
/// field, both discretized with central differences of step `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasilinearCheck {
    /// `Fᵢ,ᵢ^adv − Fᵢ,ᵢ^diff − S`
    pub conservative: Vec7,
    /// `Aᵢ V,ᵢ − (K_ij V,j),ᵢ − S`
    pub quasilinear: Vec7,
    pub source: Vec7,
}

fn shifted(x: [f64; 3], dir: usize, h: f64) -> [f64; 3] {
    let mut p = x;
    p[dir] += h;
    p
}

/// Central-difference primitive gradients of a field.
pub fn field_gradients<F: Fn([f64; 3]) -> PrimitiveState>(field: &F, x: [f64; 3], h: f64) -> PrimitiveGradients {
    let mut g = PrimitiveGradients::default();
    for j in 0..3 {
        let p = field(shifted(x, j, h));
        let m = field(shifted(x, j, -h));
        let c = 1.0 / (2.0 * h);
        g.drho[j] = (p.rho - m.rho) * c;
        for i in 0..3 {
            g.du[i][j] = (p.u[i] - m.u[i]) * c;
        }
        g.dt[j] = (p.t - m.t) * c;
        g.dq0[j] = (p.q0 - m.q0) * c;
        g.dq1[j] = (p.q1 - m.q1) * c;
    }
    g
}

fn entropy_gradients<F: Fn([f64; 3]) -> PrimitiveState>(
    field: &F,
    x: [f64; 3],
    h: f64,
    gas: &GasModel,
) -> [[f64; 3]; NVARS] {
    let mut out = [[0.0; 3]; NVARS];
    for j in 0..3 {
        let p = prim_to_entropy(&field(shifted(x, j, h)), gas).0;
        let m = prim_to_entropy(&field(shifted(x, j, -h)), gas).0;
        for a in 0..NVARS {
            out[a][j] = (p[a] - m[a]) / (2.0 * h);
        }
    }
    out
}

/// Evaluates both residual forms at `x`. The turbulence model supplies the
/// eddy viscosity and the q₀/q₁ sources; `wall_distance` feeds its damping.
pub fn quasilinear_residual<F: Fn([f64; 3]) -> PrimitiveState>(
    field: F,
    x: [f64; 3],
    h: f64,
    gas: &GasModel,
    model: &TurbulenceModel,
    wall_distance: f64,
) -> QuasilinearCheck {
    let mut events = ClosureEvents::default();
    let mut visc_at = |p: [f64; 3]| {
        let y = field(p);
        let g = field_gradients(&field, p, h);
        model.evaluate(&y, &g, wall_distance, gas, &mut events)
    };
    let here = visc_at(x);
    let y0 = field(x);

    // S: isotropic turbulent pressure gradients plus the q₀/q₁ sources
    let iso = |p: [f64; 3]| {
        let y = field(p);
        (y.rho * (y.q0 * y.q0 + y.q1 * y.q1) / 3.0, y.u)
    };
    let mut source = Vec7::zeros();
    for i in 0..3 {
        let (qp, up) = iso(shifted(x, i, h));
        let (qm, um) = iso(shifted(x, i, -h));
        source[1 + i] = -(qp - qm) / (2.0 * h);
        source[ENERGY] -= (qp * up[i] - qm * um[i]) / (2.0 * h);
    }
    source[5] = here.sources.s_q0;
    source[6] = here.sources.s_q1;

    let mut conservative = -source;
    let mut quasilinear = -source;
    let grad_v = entropy_gradients(&field, x, h, gas);
    for i in 0..3 {
        let yp = field(shifted(x, i, h));
        let ym = field(shifted(x, i, -h));
        conservative += (advective_flux(&yp, gas, i) - advective_flux(&ym, gas, i)) / (2.0 * h);
        let vi = Vec7::from_fn(|a, _| grad_v[a][i]);
        quasilinear += ai_matrix(&y0, gas, i) * vi;

        let cp = visc_at(shifted(x, i, h));
        let cm = visc_at(shifted(x, i, -h));
        let gp = field_gradients(&field, shifted(x, i, h), h);
        let gm = field_gradients(&field, shifted(x, i, -h), h);
        let fp = diffusive_flux(&yp, &gp, &cp.visc)[i];
        let fm = diffusive_flux(&ym, &gm, &cm.visc)[i];
        conservative -= (fp - fm) / (2.0 * h);

        let gvp = entropy_gradients(&field, shifted(x, i, h), h, gas);
        let gvm = entropy_gradients(&field, shifted(x, i, -h), h, gas);
        let mut kp = Vec7::zeros();
        let mut km = Vec7::zeros();
        for j in 0..3 {
            let vjp = Vec7::from_fn(|a, _| gvp[a][j]);
            let vjm = Vec7::from_fn(|a, _| gvm[a][j]);
            kp += kij_matrix(&yp, &cp.visc, i, j) * vjp;
            km += kij_matrix(&ym, &cm.visc, i, j) * vjm;
        }
        quasilinear -= (kp - km) / (2.0 * h);
    }
    QuasilinearCheck { conservative, quasilinear, source }
}

/// `(V·Fᵢ,ᵢ^adv, (H uᵢ),ᵢ)` by central differences at `x`.
pub fn advective_entropy_identity<F: Fn([f64; 3]) -> PrimitiveState>(
    field: F,
    x: [f64; 3],
    h: f64,
    gas: &GasModel,
) -> (f64, f64) {
    let v = Vec7::from_column_slice(&prim_to_entropy(&field(x), gas).0);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..3 {
        let yp = field(shifted(x, i, h));
        let ym = field(shifted(x, i, -h));
        let df = (advective_flux(&yp, gas, i) - advective_flux(&ym, gas, i)) / (2.0 * h);
        lhs += v.dot(&df);
        rhs += (entropy_density(&yp, gas) * yp.u[i] - entropy_density(&ym, gas) * ym.u[i]) / (2.0 * h);
    }
    (lhs, rhs)
}

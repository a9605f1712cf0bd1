//! Primitive, conservation, and entropy variables for the seven-equation
//! system `(ρ, ρu₁, ρu₂, ρu₃, ρe_tot, ρq₀, ρq₁)`.
//!
//! The turbulent scales `q₀ = √(2k)` and `q₁ = (νε)^{1/4}` enter the total
//! energy exactly like two extra velocity components, which is what makes the
//! entropy-variable form symmetric.

use thiserror::Error;

use crate::thermo::GasModel;

pub const NVARS: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariableError {
    #[error("non-physical conservation state: internal energy {internal_energy} from {components:?}")]
    NonPhysical { internal_energy: f64, components: [f64; NVARS] },
    #[error("inadmissible {field}: {value}")]
    Domain { field: &'static str, value: f64 },
    #[error("entropy variables overflow the primitive range (T = {t}, rho = {rho})")]
    Overflow { t: f64, rho: f64 },
}

/// Point state `(ρ, u, T, q₀, q₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: [f64; 3],
    pub t: f64,
    pub q0: f64,
    pub q1: f64,
}

impl PrimitiveState {
    pub fn new(rho: f64, u: [f64; 3], t: f64, q0: f64, q1: f64) -> Self {
        PrimitiveState { rho, u, t, q0, q1 }
    }

    pub fn check(&self) -> Result<(), VariableError> {
        let fields = [
            ("rho", self.rho, self.rho > 0.0),
            ("T", self.t, self.t > 0.0),
            ("q0", self.q0, self.q0 >= 0.0),
            ("q1", self.q1, self.q1 >= 0.0),
        ];
        for (field, value, ok) in fields {
            if !ok || !value.is_finite() {
                return Err(VariableError::Domain { field, value });
            }
        }
        Ok(())
    }

    /// `(|u|² + q₀² + q₁²) / 2`
    pub fn k_tot(&self) -> f64 {
        0.5 * (self.speed_squared() + self.q0 * self.q0 + self.q1 * self.q1)
    }

    pub fn speed_squared(&self) -> f64 {
        self.u.iter().map(|c| c * c).sum()
    }

    /// Turbulent kinetic energy `k = q₀²/2`.
    pub fn k(&self) -> f64 {
        0.5 * self.q0 * self.q0
    }

    pub fn pressure(&self, gas: &GasModel) -> f64 {
        self.rho * gas.r * self.t
    }

    /// Total energy per unit mass.
    pub fn e_tot(&self, gas: &GasModel) -> f64 {
        gas.internal_energy(self.t) + self.k_tot()
    }

    /// Chemical potential per unit mass `μ̂ = e + p/ρ − Tŝ`.
    pub fn chemical_potential(&self, gas: &GasModel) -> f64 {
        gas.cp() * self.t - self.t * gas.entropy(self.rho, self.t)
    }

    /// The five "velocity-like" components `(u₁, u₂, u₃, q₀, q₁)`.
    pub fn w(&self) -> [f64; 5] {
        [self.u[0], self.u[1], self.u[2], self.q0, self.q1]
    }
}

/// Conservation variables `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsVars(pub [f64; NVARS]);

/// Entropy variables `V = ∂H/∂U` with `H = −ρŝ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyVars(pub [f64; NVARS]);

/// First derivatives of the primitive fields. `du[i][j] = ∂uᵢ/∂x_j`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimitiveGradients {
    pub drho: [f64; 3],
    pub du: [[f64; 3]; 3],
    pub dt: [f64; 3],
    pub dq0: [f64; 3],
    pub dq1: [f64; 3],
}

impl PrimitiveGradients {
    pub fn divergence(&self) -> f64 {
        self.du[0][0] + self.du[1][1] + self.du[2][2]
    }

    /// Strain rate `S_ij = (u_i,j + u_j,i)/2`.
    pub fn strain(&self) -> [[f64; 3]; 3] {
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = 0.5 * (self.du[i][j] + self.du[j][i]);
            }
        }
        s
    }

    /// Deviatoric strain `S^d_ij = S_ij − S_kk δ_ij / 3`.
    pub fn deviatoric_strain(&self) -> [[f64; 3]; 3] {
        let mut s = self.strain();
        let third = self.divergence() / 3.0;
        for (i, row) in s.iter_mut().enumerate() {
            row[i] -= third;
        }
        s
    }

    /// `S^d_ij u_i,j`, equal to `S^d_ij S^d_ij`.
    pub fn deviatoric_contraction(&self) -> f64 {
        let sd = self.deviatoric_strain();
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += sd[i][j] * self.du[i][j];
            }
        }
        acc
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm2(a: &[f64; 3]) -> f64 {
    dot3(a, a)
}

pub fn prim_to_cons(y: &PrimitiveState, gas: &GasModel) -> ConsVars {
    let r = y.rho;
    ConsVars([r, r * y.u[0], r * y.u[1], r * y.u[2], r * y.e_tot(gas), r * y.q0, r * y.q1])
}

pub fn cons_to_prim(u: &ConsVars, gas: &GasModel) -> Result<PrimitiveState, VariableError> {
    let c = u.0;
    if !(c[0] > 0.0) {
        return Err(VariableError::Domain { field: "rho", value: c[0] });
    }
    if c[5] < 0.0 {
        return Err(VariableError::Domain { field: "rho*q0", value: c[5] });
    }
    if c[6] < 0.0 {
        return Err(VariableError::Domain { field: "rho*q1", value: c[6] });
    }
    let rho = c[0];
    let u = [c[1] / rho, c[2] / rho, c[3] / rho];
    let q0 = c[5] / rho;
    let q1 = c[6] / rho;
    let k_tot = 0.5 * (norm2(&u) + q0 * q0 + q1 * q1);
    let e = c[4] / rho - k_tot;
    if !(e > 0.0) {
        return Err(VariableError::NonPhysical { internal_energy: e, components: c });
    }
    Ok(PrimitiveState { rho, u, t: e / gas.cv(), q0, q1 })
}

pub fn prim_to_entropy(y: &PrimitiveState, gas: &GasModel) -> EntropyVars {
    let inv_t = 1.0 / y.t;
    let mu = y.chemical_potential(gas);
    EntropyVars([
        (mu - y.k_tot()) * inv_t,
        y.u[0] * inv_t,
        y.u[1] * inv_t,
        y.u[2] * inv_t,
        -inv_t,
        y.q0 * inv_t,
        y.q1 * inv_t,
    ])
}

/// Closed-form inverse of [`prim_to_entropy`] for the ideal gas.
pub fn entropy_to_prim(v: &EntropyVars, gas: &GasModel) -> Result<PrimitiveState, VariableError> {
    let c = v.0;
    if !(c[4] < 0.0) {
        return Err(VariableError::Domain { field: "V5", value: c[4] });
    }
    let t = -1.0 / c[4];
    let u = [c[1] * t, c[2] * t, c[3] * t];
    let q0 = c[5] * t;
    let q1 = c[6] * t;
    let k_tot = 0.5 * (norm2(&u) + q0 * q0 + q1 * q1);
    let mu = t * c[0] + k_tot;
    // μ = c_p T − T ŝ, ŝ = c_v ln(T/T_ref) − R ln(ρ/ρ_ref)
    let s_hat = gas.cp() - mu / t;
    let ln_rho = ((gas.cv() * (t / gas.t_ref).ln() - s_hat) / gas.r) + gas.rho_ref().ln();
    let rho = ln_rho.exp();
    if !t.is_finite() || !rho.is_finite() || rho <= 0.0 {
        return Err(VariableError::Overflow { t, rho });
    }
    if q0 < 0.0 {
        return Err(VariableError::Domain { field: "q0", value: q0 });
    }
    if q1 < 0.0 {
        return Err(VariableError::Domain { field: "q1", value: q1 });
    }
    Ok(PrimitiveState { rho, u, t, q0, q1 })
}

/// Entropy-variable gradients `∂V_a/∂x_j` (indexed `[a][j]`), mapped to
/// primitive gradients:
///
/// ```text
/// u_i,j = T V_{i+1,j} + T u_i V_{5,j}
/// q_i,j = T V_{i+6,j} + T q_i V_{5,j}
/// T_,j  = T² V_{5,j}
/// ```
///
/// The density gradient is not determined by these relations and is left zero.
pub fn primitive_gradients_from_v(y: &PrimitiveState, grad_v: &[[f64; 3]; NVARS]) -> PrimitiveGradients {
    let t = y.t;
    let mut g = PrimitiveGradients::default();
    for j in 0..3 {
        let v5 = grad_v[4][j];
        for i in 0..3 {
            g.du[i][j] = t * grad_v[i + 1][j] + t * y.u[i] * v5;
        }
        g.dq0[j] = t * grad_v[5][j] + t * y.q0 * v5;
        g.dq1[j] = t * grad_v[6][j] + t * y.q1 * v5;
        g.dt[j] = t * t * v5;
    }
    g
}

/// Inverse of [`primitive_gradients_from_v`] for components 2–7 of `V`.
/// Row 0 (`V₁`) needs the density gradient and is filled using `drho`.
pub fn entropy_gradients_from_primitive(
    y: &PrimitiveState,
    g: &PrimitiveGradients,
    gas: &GasModel,
) -> [[f64; 3]; NVARS] {
    let t = y.t;
    let mut out = [[0.0; 3]; NVARS];
    let mu = y.chemical_potential(gas);
    let w = y.w();
    for j in 0..3 {
        let dw = [g.du[0][j], g.du[1][j], g.du[2][j], g.dq0[j], g.dq1[j]];
        for (a, (&wa, &dwa)) in w.iter().zip(dw.iter()).enumerate() {
            let row = if a < 3 { a + 1 } else { a + 2 };
            out[row][j] = dwa / t - wa * g.dt[j] / (t * t);
        }
        out[4][j] = g.dt[j] / (t * t);
        // dμ = −ŝ dT + v dp, V₁ = (μ − k_tot)/T
        let s_hat = gas.entropy(y.rho, t);
        let dp = gas.r * (g.drho[j] * t + y.rho * g.dt[j]);
        let dmu = -s_hat * g.dt[j] + dp / y.rho;
        let dk: f64 = w.iter().zip(dw.iter()).map(|(a, b)| a * b).sum();
        out[0][j] = (dmu - dk) / t - (mu - y.k_tot()) * g.dt[j] / (t * t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::StateSampler;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gas() -> GasModel {
        GasModel::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn rest_state_conservation_vector() {
        let g = gas();
        let y = PrimitiveState::new(1.0, [0.0; 3], 300.0, 0.0, 0.0);
        let u = prim_to_cons(&y, &g).0;
        assert_eq!(u, [1.0, 0.0, 0.0, 0.0, g.cv() * 300.0, 0.0, 0.0]);
        assert_eq!(cons_to_prim(&ConsVars(u), &g).unwrap(), y);
    }

    #[test]
    fn total_energy_includes_turbulent_scales() {
        let g = gas();
        let y = PrimitiveState::new(2.0, [3.0, 0.0, 0.0], 300.0, 1.0, 2.0);
        let u = prim_to_cons(&y, &g).0;
        let e = g.cv() * 300.0;
        assert!(rel(u[4], 2.0 * (e + 4.5 + 0.5 + 2.0)) < 1e-15);
        let back = cons_to_prim(&ConsVars(u), &g).unwrap();
        assert!(rel(back.t, 300.0) < 1e-12);
        assert_eq!(back.u, [3.0, 0.0, 0.0]);
        assert!(rel(back.q1, 2.0) < 1e-15);
    }

    #[test]
    fn starved_energy_is_non_physical() {
        let g = gas();
        let y = PrimitiveState::new(1.0, [10.0, 0.0, 0.0], 300.0, 0.0, 0.0);
        let mut u = prim_to_cons(&y, &g).0;
        u[4] = 40.0;
        assert!(matches!(cons_to_prim(&ConsVars(u), &g), Err(VariableError::NonPhysical { .. })));
    }

    #[test]
    fn rest_state_entropy_variables() {
        let g = gas();
        let y = PrimitiveState::new(1.0, [0.0; 3], 300.0, 0.0, 0.0);
        let v = prim_to_entropy(&y, &g).0;
        let mu = y.chemical_potential(&g);
        assert!(rel(v[0], mu / 300.0) < 1e-15);
        assert_eq!(&v[1..4], &[0.0, 0.0, 0.0]);
        assert!(rel(v[4], -1.0 / 300.0) < 1e-15);
        assert_eq!(&v[5..], &[0.0, 0.0]);
        let back = entropy_to_prim(&EntropyVars(v), &g).unwrap();
        assert!(rel(back.rho, 1.0) < 1e-12 && rel(back.t, 300.0) < 1e-12);
    }

    #[test]
    fn entropy_variable_scaling_identities() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sampler = StateSampler::default();
        for _ in 0..200 {
            let y = sampler.state(&mut rng);
            let v = prim_to_entropy(&y, &g).0;
            assert!(rel(v[1] / v[4], -y.u[0]) < 1e-12 || y.u[0] == 0.0);
            for i in 0..3 {
                assert!((v[i + 1] * y.t - y.u[i]).abs() <= 1e-12 * y.u[i].abs().max(1.0));
            }
            assert!((v[5] * y.t - y.q0).abs() <= 1e-12 * y.q0.max(1.0));
            assert!((v[6] * y.t - y.q1).abs() <= 1e-12 * y.q1.max(1.0));
        }
    }

    #[test]
    fn round_trips_over_random_states() {
        let g = gas();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sampler = StateSampler::default();
        for _ in 0..1000 {
            let y = sampler.state(&mut rng);
            let yc = cons_to_prim(&prim_to_cons(&y, &g), &g).unwrap();
            let ye = entropy_to_prim(&prim_to_entropy(&y, &g), &g).unwrap();
            for back in [yc, ye] {
                assert!(rel(back.rho, y.rho) < 1e-10);
                assert!(rel(back.t, y.t) < 1e-10);
                for i in 0..3 {
                    assert!((back.u[i] - y.u[i]).abs() <= 1e-10 * y.u[i].abs().max(1.0));
                }
                assert!((back.q0 - y.q0).abs() <= 1e-10 * y.q0.max(1.0));
                assert!((back.q1 - y.q1).abs() <= 1e-10 * y.q1.max(1.0));
            }
        }
    }

    #[test]
    fn vanishing_v5_overflows() {
        let g = gas();
        let y = PrimitiveState::new(1.0, [1.0, 0.0, 0.0], 300.0, 0.0, 0.0);
        let mut v = prim_to_entropy(&y, &g).0;
        v[4] = -1e-320;
        assert!(matches!(entropy_to_prim(&EntropyVars(v), &g), Err(VariableError::Overflow { .. })));
        v[4] = 0.0;
        assert!(matches!(entropy_to_prim(&EntropyVars(v), &g), Err(VariableError::Domain { field: "V5", .. })));
    }

    #[test]
    fn zero_entropy_gradient_gives_zero_primitive_gradient() {
        let y = PrimitiveState::new(1.0, [5.0, 1.0, -2.0], 300.0, 1.0, 0.5);
        let g = primitive_gradients_from_v(&y, &[[0.0; 3]; NVARS]);
        assert_eq!(g, PrimitiveGradients::default());
    }

    #[test]
    fn pure_temperature_gradient() {
        let y = PrimitiveState::new(1.0, [0.0; 3], 250.0, 0.0, 0.0);
        let mut gv = [[0.0; 3]; NVARS];
        gv[4] = [1e-6, -2e-6, 3e-6];
        let g = primitive_gradients_from_v(&y, &gv);
        assert_eq!(g.du, [[0.0; 3]; 3]);
        assert_eq!(g.dq0, [0.0; 3]);
        for j in 0..3 {
            assert!(rel(g.dt[j], 250.0 * 250.0 * gv[4][j]) < 1e-15);
        }
    }

    /// Smooth manufactured primitive field in 3D.
    fn field(x: [f64; 3]) -> PrimitiveState {
        PrimitiveState::new(
            1.1 + 0.2 * (x[0] + 0.5 * x[1]).sin(),
            [30.0 + 5.0 * x[1].cos(), 2.0 * (x[0] * x[2]).sin(), -1.0 + x[0] * x[1]],
            300.0 + 20.0 * (x[2] - x[0]).sin(),
            1.0 + 0.3 * x[1] * x[1],
            0.4 + 0.1 * (x[0] + x[2]).cos(),
        )
    }

    fn fd_gradient<F: Fn([f64; 3]) -> f64>(f: F, x: [f64; 3], h: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            g[j] = (f(xp) - f(xm)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn manufactured_gradients_second_order() {
        let g = gas();
        let x0 = [0.3, -0.2, 0.7];
        let y = field(x0);
        // exact primitive gradients from a very small step (reference)
        let exact_du = |i: usize| fd_gradient(|x| field(x).u[i], x0, 1e-6);
        let err_at = |h: f64| {
            let mut gv = [[0.0; 3]; NVARS];
            for a in 0..NVARS {
                gv[a] = fd_gradient(|x| prim_to_entropy(&field(x), &g).0[a], x0, h);
            }
            let pg = primitive_gradients_from_v(&y, &gv);
            let mut err: f64 = 0.0;
            for i in 0..3 {
                let ex = exact_du(i);
                for j in 0..3 {
                    err = err.max((pg.du[i][j] - ex[j]).abs());
                }
            }
            let ex_t = fd_gradient(|x| field(x).t, x0, 1e-6);
            let ex_q1 = fd_gradient(|x| field(x).q1, x0, 1e-6);
            for j in 0..3 {
                err = err.max((pg.dt[j] - ex_t[j]).abs());
                err = err.max((pg.dq1[j] - ex_q1[j]).abs() * 100.0);
            }
            err
        };
        let e1 = err_at(0.04);
        let e2 = err_at(0.02);
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }

    #[test]
    fn primitive_to_entropy_gradient_round_trip() {
        let g = gas();
        let y = PrimitiveState::new(1.3, [40.0, -3.0, 7.0], 320.0, 2.0, 0.8);
        let pg = PrimitiveGradients {
            drho: [0.1, -0.2, 0.05],
            du: [[1.0, 200.0, -3.0], [0.5, -0.7, 2.0], [4.0, 1.0, 0.3]],
            dt: [5.0, -2.0, 1.0],
            dq0: [0.0, 30.0, 1.0],
            dq1: [0.2, -10.0, 0.0],
        };
        let gv = entropy_gradients_from_primitive(&y, &pg, &g);
        let back = primitive_gradients_from_v(&y, &gv);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.du[i][j] - pg.du[i][j]).abs() < 1e-10);
            }
            assert!((back.dt[i] - pg.dt[i]).abs() < 1e-10);
            assert!((back.dq0[i] - pg.dq0[i]).abs() < 1e-10);
            assert!((back.dq1[i] - pg.dq1[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn v1_gradient_matches_finite_differences() {
        let g = gas();
        let x0 = [0.1, 0.4, -0.3];
        let h = 1e-5;
        let y = field(x0);
        let pg = PrimitiveGradients {
            drho: fd_gradient(|x| field(x).rho, x0, h),
            du: [
                fd_gradient(|x| field(x).u[0], x0, h),
                fd_gradient(|x| field(x).u[1], x0, h),
                fd_gradient(|x| field(x).u[2], x0, h),
            ],
            dt: fd_gradient(|x| field(x).t, x0, h),
            dq0: fd_gradient(|x| field(x).q0, x0, h),
            dq1: fd_gradient(|x| field(x).q1, x0, h),
        };
        let gv = entropy_gradients_from_primitive(&y, &pg, &g);
        let fd = fd_gradient(|x| prim_to_entropy(&field(x), &g).0[0], x0, h);
        for j in 0..3 {
            assert!((gv[0][j] - fd[j]).abs() <= 1e-6 * fd[j].abs().max(1e-3), "{} vs {}", gv[0][j], fd[j]);
        }
    }
}

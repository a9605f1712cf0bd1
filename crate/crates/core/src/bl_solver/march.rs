//! Streamwise marching of the boundary-layer equations.
//!
//! Streamwise derivatives use backward differences (first order on the
//! first step, variable-step BDF2 afterwards). Wall-normal diffusion and
//! convection are second-order central, with convection switching to upwind
//! where the cell Péclet number exceeds two. Each station is solved either
//! by damped Newton on the coupled `(u, v, q₀, q₁)` column or by a
//! segregated Picard iteration with under-relaxation.

use nalgebra::{DMatrix, DVector};

use super::diagnose::diagnose_column;
use super::grid::{solve_stretch_ratio, Column, Grid};
use super::inlet::InletColumn;
use super::wall_bc::{central_weights, column_gradient, penalty_nodes, q1_wall};
use super::{Freestream, Linearization, SolutionField, SolverConfig, SolverError, Station};
use crate::closure::{eps_from_q1, ClosureEvents, PointClosure, TurbulenceModel};
use crate::thermo::GasModel;
use crate::variables::{PrimitiveGradients, PrimitiveState};

/// Thomas algorithm for `a_j x_{j−1} + b_j x_j + c_j x_{j+1} = d_j`.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for j in 1..n {
        let m = b[j] - a[j] * cp[j - 1];
        cp[j] = c[j] / m;
        dp[j] = (d[j] - a[j] * dp[j - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for j in (0..n - 1).rev() {
        x[j] = dp[j] - cp[j] * x[j + 1];
    }
    x
}

/// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes).
/// Points above the last abscissa take the last value.
pub fn pchip(x: &[f64], f: &[f64], xi: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (f[k + 1] - f[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    xi.iter()
        .map(|&t| {
            if t >= x[n - 1] {
                return f[n - 1];
            }
            if t <= x[0] {
                return f[0];
            }
            let k = x.partition_point(|&v| v <= t) - 1;
            let s = (t - x[k]) / h[k];
            let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
            let h10 = s * (1.0 - s) * (1.0 - s);
            let h01 = s * s * (3.0 - 2.0 * s);
            let h11 = s * s * (s - 1.0);
            h00 * f[k] + h10 * h[k] * m[k] + h01 * f[k + 1] + h11 * h[k] * m[k + 1]
        })
        .collect()
}

/// Backward-difference weights `(c₀, c₁, c₂)` for `f_x ≈ c₀f + c₁fₙ + c₂fₙ₋₁`.
pub fn backward_weights(x_new: f64, x_n: f64, x_nm: Option<f64>) -> (f64, f64, f64) {
    let h1 = x_new - x_n;
    match x_nm {
        None => (1.0 / h1, -1.0 / h1, 0.0),
        Some(x_nm) => {
            let w = h1 / (x_n - x_nm);
            ((1.0 + 2.0 * w) / ((1.0 + w) * h1), -(1.0 + w) / h1, w * w / ((1.0 + w) * h1))
        }
    }
}

/// Weights of `ρv f_y − (Γ f_y)_y` at interior node `j`. Convection is
/// central; each face diffusivity is raised to `√(Γ² + (ρv h/2)²)`, which
/// tends to first-order upwinding at large cell Péclet number while staying
/// differentiable for the Newton solver.
fn convection_diffusion(y: &[f64], j: usize, rho_v: f64, gamma: &[f64]) -> (f64, f64, f64) {
    let hm = y[j] - y[j - 1];
    let hp = y[j + 1] - y[j];
    let gm = 0.5 * (gamma[j] + gamma[j - 1]);
    let gp = 0.5 * (gamma[j] + gamma[j + 1]);
    let gm = gm.hypot(0.5 * rho_v * hm);
    let gp = gp.hypot(0.5 * rho_v * hp);
    let (wm, w0, wp) = central_weights(y, j);
    let s = 2.0 / (hm + hp);
    (rho_v * wm - s * gm / hm, rho_v * w0 + s * (gp / hp + gm / hm), rho_v * wp - s * gp / hp)
}

/// One linear wall-normal transport equation
/// `ρU f_x + ρV f_y = (Γ f_y)_y + s_exp − s_imp f`.
struct Transport<'a> {
    y: &'a [f64],
    rho: f64,
    u: &'a [f64],
    v: &'a [f64],
    c0: f64,
    /// `c₁fₙ + c₂fₙ₋₁`
    history: &'a [f64],
    gamma: &'a [f64],
    implicit_sink: &'a [f64],
    explicit_source: &'a [f64],
    /// Dirichlet values; `None` keeps the interior equation.
    fixed: &'a [Option<f64>],
}

impl Transport<'_> {
    fn solve(&self) -> Vec<f64> {
        let n = self.y.len();
        let (mut a, mut b, mut c, mut d) = (vec![0.0; n], vec![1.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..n {
            if let Some(val) = self.fixed[j] {
                d[j] = val;
                continue;
            }
            let (wm, w0, wp) = convection_diffusion(self.y, j, self.rho * self.v[j], self.gamma);
            let ru = self.rho * self.u[j];
            a[j] = wm;
            b[j] = ru * self.c0 + w0 + self.implicit_sink[j];
            c[j] = wp;
            d[j] = -ru * self.history[j] + self.explicit_source[j];
        }
        solve_tridiagonal(&a, &b, &c, &d)
    }
}

fn max_relative_update(new: &[f64], old: &[f64]) -> f64 {
    let scale = old.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    new.iter().zip(old).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

/// Column values of one station.
#[derive(Debug, Clone)]
struct Profiles {
    u: Vec<f64>,
    v: Vec<f64>,
    t: Vec<f64>,
    q0: Vec<f64>,
    q1: Vec<f64>,
}

impl Profiles {
    fn from_states(states: &[PrimitiveState]) -> Self {
        Profiles {
            u: states.iter().map(|s| s.u[0]).collect(),
            v: states.iter().map(|s| s.u[1]).collect(),
            t: states.iter().map(|s| s.t).collect(),
            q0: states.iter().map(|s| s.q0).collect(),
            q1: states.iter().map(|s| s.q1).collect(),
        }
    }

    fn interpolate(&self, y_old: &[f64], y_new: &[f64]) -> Self {
        Profiles {
            u: pchip(y_old, &self.u, y_new),
            v: pchip(y_old, &self.v, y_new),
            t: pchip(y_old, &self.t, y_new),
            q0: pchip(y_old, &self.q0, y_new),
            q1: pchip(y_old, &self.q1, y_new),
        }
    }

    fn states(&self, rho: f64) -> Vec<PrimitiveState> {
        (0..self.u.len())
            .map(|j| PrimitiveState::new(rho, [self.u[j], self.v[j], 0.0], self.t[j], self.q0[j], self.q1[j]))
            .collect()
    }
}

/// Boundary-layer gradients: only wall-normal derivatives are kept.
pub fn column_gradients(y: &[f64], states: &[PrimitiveState]) -> Vec<PrimitiveGradients> {
    let p = Profiles::from_states(states);
    let (uy, ty, q0y, q1y) =
        (column_gradient(y, &p.u), column_gradient(y, &p.t), column_gradient(y, &p.q0), column_gradient(y, &p.q1));
    (0..y.len())
        .map(|j| {
            let mut g = PrimitiveGradients::default();
            g.du[0][1] = uy[j];
            g.dt[1] = ty[j];
            g.dq0[1] = q0y[j];
            g.dq1[1] = q1y[j];
            g
        })
        .collect()
}

fn floor_in_place(f: &mut [f64], floor: f64, count: &mut u64) {
    for v in f.iter_mut().skip(1) {
        if *v < floor {
            *v = floor;
            *count += 1;
        }
    }
}

/// Data shared by both station solvers.
struct StationProblem<'a> {
    y: &'a [f64],
    fs: &'a Freestream,
    gas: &'a GasModel,
    model: &'a TurbulenceModel,
    c0: f64,
    hist: Profiles,
    cfg: &'a SolverConfig,
    /// Nodes below the wall-relation limit, fixed for the station.
    pen: usize,
}

/// Outcome of a station solve.
struct StationSolve {
    profiles: Profiles,
    cycles: usize,
    positivity: u64,
}

const NV: usize = 4;
const IU: usize = 0;
const IV: usize = 1;
const IQ0: usize = 2;
const IQ1: usize = 3;

impl StationProblem<'_> {
    fn closure(&self, p: &Profiles, events: &mut ClosureEvents) -> (Vec<PrimitiveGradients>, Vec<PointClosure>) {
        let states = p.states(self.fs.rho);
        let grads = column_gradients(self.y, &states);
        let closure = (0..self.y.len())
            .map(|j| self.model.evaluate(&states[j], &grads[j], self.y[j], self.gas, events))
            .collect();
        (grads, closure)
    }

    /// Residuals of the coupled column, interleaved per node as `(u, v, q₀, q₁)`.
    fn residual(&self, p: &Profiles, pen: usize, events: &mut ClosureEvents) -> Vec<f64> {
        let y = self.y;
        let ny = y.len();
        let fs = self.fs;
        let rho = fs.rho;
        let (grads, closure) = self.closure(p, events);
        let mut r = vec![0.0; ny * NV];
        r[IU] = p.u[0];
        r[IV] = p.v[0];
        r[IQ0] = p.q0[0];
        r[IQ1] = p.q1[0] - q1_wall(fs.nu, grads[0].dq0[1]);
        let ux = |j: usize| self.c0 * p.u[j] + self.hist.u[j];
        for j in 1..ny {
            let k = j * NV;
            r[k + IV] = (p.v[j] - p.v[j - 1]) / (y[j] - y[j - 1]) + 0.5 * (ux(j) + ux(j - 1));
            if j == ny - 1 {
                r[k + IU] = p.u[j] - fs.u;
                r[k + IQ0] = p.q0[j] - fs.q0;
                r[k + IQ1] = p.q1[j] - fs.q1;
                continue;
            }
            let rho_v = rho * p.v[j];
            let ru = rho * p.u[j];
            let apply = |w: (f64, f64, f64), f: &[f64]| w.0 * f[j - 1] + w.1 * f[j] + w.2 * f[j + 1];

            let gamma: Vec<f64> = closure[j - 1..=j + 1].iter().map(|c| c.visc.mu_hat).collect();
            let w = convection_diffusion(&y[j - 1..=j + 1], 1, rho_v, &gamma);
            r[k + IU] = ru * ux(j) + apply(w, &p.u);

            let gamma: Vec<f64> = closure[j - 1..=j + 1].iter().map(|c| c.visc.mu_k).collect();
            let w = convection_diffusion(&y[j - 1..=j + 1], 1, rho_v, &gamma);
            r[k + IQ0] = ru * (self.c0 * p.q0[j] + self.hist.q0[j]) + apply(w, &p.q0) - closure[j].sources.s_q0;

            r[k + IQ1] = if j < pen {
                p.q1[j] - q1_wall(fs.nu, grads[j].dq0[1])
            } else {
                let gamma: Vec<f64> = closure[j - 1..=j + 1].iter().map(|c| c.visc.mu_eps).collect();
                let w = convection_diffusion(&y[j - 1..=j + 1], 1, rho_v, &gamma);
                ru * (self.c0 * p.q1[j] + self.hist.q1[j]) + apply(w, &p.q1) - closure[j].sources.s_q1
            };
        }
        r
    }

    fn get(p: &Profiles, var: usize, j: usize) -> f64 {
        match var {
            IU => p.u[j],
            IV => p.v[j],
            IQ0 => p.q0[j],
            _ => p.q1[j],
        }
    }

    fn get_mut(p: &mut Profiles, var: usize) -> &mut Vec<f64> {
        match var {
            IU => &mut p.u,
            IV => &mut p.v,
            IQ0 => &mut p.q0,
            _ => &mut p.q1,
        }
    }

    /// Finite-difference Jacobian. Each row couples only to its own node and
    /// the two neighbours (the wall q₁ row also reaches node 2), so nodes
    /// are perturbed three at a time.
    fn jacobian(&self, p: &Profiles, r0: &[f64], pen: usize) -> DMatrix<f64> {
        let ny = self.y.len();
        let n = ny * NV;
        let mut jac = DMatrix::zeros(n, n);
        let mut scratch = ClosureEvents::default();
        for var in 0..NV {
            let vals: Vec<f64> = (0..ny).map(|j| Self::get(p, var, j)).collect();
            let scale = match var {
                IU => self.fs.u,
                IV => 1e-3 * self.fs.u,
                _ => vals.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            };
            for color in 0..3 {
                let mut q = p.clone();
                let mut steps = vec![0.0; ny];
                for j in (color..ny).step_by(3) {
                    steps[j] = 1e-7 * (vals[j].abs() + scale);
                    Self::get_mut(&mut q, var)[j] += steps[j];
                }
                let r = self.residual(&q, pen, &mut scratch);
                for j in (color..ny).step_by(3) {
                    let col = j * NV + var;
                    let lo = j.saturating_sub(1);
                    let hi = (j + 1).min(ny - 1);
                    let rows = (lo * NV..(hi + 1) * NV).chain(if j == 2 { 0..NV } else { 0..0 });
                    for row in rows {
                        jac[(row, col)] = (r[row] - r0[row]) / steps[j];
                    }
                }
            }
        }
        jac
    }

    fn apply(
        cur: &Profiles,
        step: &DVector<f64>,
        alpha: f64,
        floors: &crate::closure::Floors,
        positivity: &mut u64,
    ) -> Profiles {
        let mut next = cur.clone();
        for var in 0..NV {
            for (j, v) in Self::get_mut(&mut next, var).iter_mut().enumerate() {
                *v += alpha * step[j * NV + var];
            }
        }
        next.u[0] = 0.0;
        next.v[0] = 0.0;
        next.q0[0] = 0.0;
        floor_in_place(&mut next.q0, floors.q0, positivity);
        floor_in_place(&mut next.q1, floors.q1, positivity);
        next
    }

    /// Damped Newton iteration. The clip and the damping functions make the
    /// residual only piecewise smooth, so each step is backtracked until the
    /// row-scaled residual norm decreases.
    fn newton(&self, mut cur: Profiles) -> Result<StationSolve, Vec<f64>> {
        let ny = self.y.len();
        let floors = self.model.floors;
        let mut scratch = ClosureEvents::default();
        let mut positivity = 0;
        let mut history = Vec::new();
        for cycle in 1..=self.cfg.max_cycles {
            let r0 = self.residual(&cur, self.pen, &mut scratch);
            let jac = self.jacobian(&cur, &r0, self.pen);
            let row_scale: Vec<f64> =
                (0..jac.nrows()).map(|i| 1.0 / jac.row(i).amax().max(f64::MIN_POSITIVE)).collect();
            let norm = |r: &[f64]| r.iter().zip(&row_scale).map(|(a, s)| (a * s).powi(2)).sum::<f64>().sqrt();
            let r0_norm = norm(&r0);
            let rhs = -DVector::from_vec(r0);
            let Some(step) = jac.lu().solve(&rhs) else {
                history.push(f64::NAN);
                return Err(history);
            };

            let mut res: f64 = 0.0;
            for var in [IU, IQ0, IQ1] {
                let vals: Vec<f64> = (0..ny).map(|j| Self::get(&cur, var, j)).collect();
                let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                let worst = (0..ny).map(|j| step[j * NV + var].abs()).fold(0.0, f64::max);
                res = res.max(worst / scale);
            }
            history.push(res);
            if !res.is_finite() {
                return Err(history);
            }

            // keep q₀ and q₁ from dropping below a fifth of their value in one step
            let mut alpha: f64 = 1.0;
            for j in 1..ny {
                for var in [IQ0, IQ1] {
                    let q = Self::get(&cur, var, j);
                    let d = step[j * NV + var];
                    if d < 0.0 && q + d < 0.2 * q {
                        alpha = alpha.min(0.8 * q / -d);
                    }
                }
            }
            let mut next = Self::apply(&cur, &step, alpha, &floors, &mut positivity);
            for _ in 0..12 {
                if norm(&self.residual(&next, self.pen, &mut scratch)) < r0_norm {
                    break;
                }
                alpha *= 0.5;
                next = Self::apply(&cur, &step, alpha, &floors, &mut positivity);
            }
            cur = next;
            if res < self.cfg.tolerance {
                return Ok(StationSolve { profiles: cur, cycles: cycle, positivity });
            }
        }
        Err(history)
    }

    fn picard(&self, mut cur: Profiles) -> Result<StationSolve, Vec<f64>> {
        let y = self.y;
        let ny = y.len();
        let fs = self.fs;
        let rho = fs.rho;
        let nu = fs.nu;
        let omega = self.cfg.relaxation;
        let floors = self.model.floors;
        let mut events = ClosureEvents::default();
        let mut positivity = 0;
        let mut history = Vec::new();
        for cycle in 1..=self.cfg.max_cycles {
            let (grads, closure) = self.closure(&cur, &mut events);
            let zeros = vec![0.0; ny];

            let gamma: Vec<f64> = closure.iter().map(|c| c.visc.mu_hat).collect();
            let mut fixed = vec![None; ny];
            fixed[0] = Some(0.0);
            fixed[ny - 1] = Some(fs.u);
            let u_star = Transport {
                y,
                rho,
                u: &cur.u,
                v: &cur.v,
                c0: self.c0,
                history: &self.hist.u,
                gamma: &gamma,
                implicit_sink: &zeros,
                explicit_source: &zeros,
                fixed: &fixed,
            }
            .solve();
            let du = max_relative_update(&u_star, &cur.u);
            let u_new: Vec<f64> = (0..ny).map(|j| cur.u[j] + omega * (u_star[j] - cur.u[j])).collect();

            let mut v_new = vec![0.0; ny];
            for j in 1..ny {
                let ux = |i: usize| self.c0 * u_new[i] + self.hist.u[i];
                v_new[j] = v_new[j - 1] - 0.5 * (ux(j) + ux(j - 1)) * (y[j] - y[j - 1]);
            }

            // q₀: sinks implicit, production and cross-diffusion explicit
            let gamma: Vec<f64> = closure.iter().map(|c| c.visc.mu_k).collect();
            let mut sink = vec![0.0; ny];
            let mut src = vec![0.0; ny];
            for j in 1..ny - 1 {
                let q0 = cur.q0[j].max(floors.q0);
                sink[j] = rho * eps_from_q1(cur.q1[j], nu) / (q0 * q0);
                src[j] = (closure[j].sources.p_k + closure[j].visc.mu_k * grads[j].dq0[1].powi(2)) / q0;
            }
            fixed[ny - 1] = Some(fs.q0);
            let q0_star = Transport {
                y,
                rho,
                u: &cur.u,
                v: &cur.v,
                c0: self.c0,
                history: &self.hist.q0,
                gamma: &gamma,
                implicit_sink: &sink,
                explicit_source: &src,
                fixed: &fixed,
            }
            .solve();
            let dq0 = max_relative_update(&q0_star, &cur.q0);
            let mut q0_new: Vec<f64> = (0..ny).map(|j| cur.q0[j] + omega * (q0_star[j] - cur.q0[j])).collect();
            floor_in_place(&mut q0_new, floors.q0, &mut positivity);

            let q0y = column_gradient(y, &q0_new);
            let pen = self.pen;
            let mut fixed_q1 = vec![None; ny];
            for (j, f) in fixed_q1.iter_mut().enumerate().take(pen.min(ny - 1)) {
                *f = Some(q1_wall(nu, q0y[j]));
            }
            fixed_q1[ny - 1] = Some(fs.q1);
            let gamma: Vec<f64> = closure.iter().map(|c| c.visc.mu_eps).collect();
            for j in 1..ny - 1 {
                let s = &closure[j].sources;
                sink[j] = s.d_q1 / cur.q1[j].max(floors.q1);
                src[j] = s.p_q1 + s.r_q1;
            }
            let q1_star = Transport {
                y,
                rho,
                u: &cur.u,
                v: &cur.v,
                c0: self.c0,
                history: &self.hist.q1,
                gamma: &gamma,
                implicit_sink: &sink,
                explicit_source: &src,
                fixed: &fixed_q1,
            }
            .solve();
            let dq1 = max_relative_update(&q1_star, &cur.q1);
            let mut q1_new: Vec<f64> = (0..ny).map(|j| cur.q1[j] + omega * (q1_star[j] - cur.q1[j])).collect();
            floor_in_place(&mut q1_new, floors.q1, &mut positivity);

            cur.u = u_new;
            cur.v = v_new;
            cur.q0 = q0_new;
            cur.q1 = q1_new;
            let res = du.max(dq0).max(dq1);
            history.push(res);
            if !res.is_finite() {
                return Err(history);
            }
            if res < self.cfg.tolerance {
                return Ok(StationSolve { profiles: cur, cycles: cycle, positivity });
            }
        }
        Err(history)
    }

    /// Temperature is passive at constant density, so one linear solve on
    /// the converged flow suffices. The wall is held at the freestream
    /// temperature.
    fn temperature(&self, p: &Profiles) -> Vec<f64> {
        let ny = self.y.len();
        let cp = self.gas.cp();
        let mut scratch = ClosureEvents::default();
        let (grads, closure) = self.closure(p, &mut scratch);
        let gamma: Vec<f64> = closure.iter().map(|c| c.visc.kappa_hat / cp).collect();
        let src: Vec<f64> = (0..ny)
            .map(|j| (self.fs.mu * grads[j].du[0][1].powi(2) + self.fs.rho * eps_from_q1(p.q1[j], self.fs.nu)) / cp)
            .collect();
        let mut fixed = vec![None; ny];
        fixed[0] = Some(self.fs.t);
        fixed[ny - 1] = Some(self.fs.t);
        Transport {
            y: self.y,
            rho: self.fs.rho,
            u: &p.u,
            v: &p.v,
            c0: self.c0,
            history: &self.hist.t,
            gamma: &gamma,
            implicit_sink: &vec![0.0; ny],
            explicit_source: &src,
            fixed: &fixed,
        }
        .solve()
    }
}

pub(crate) fn station_from(
    x: f64,
    y: Vec<f64>,
    states: Vec<PrimitiveState>,
    fs: &Freestream,
    solve: (usize, ClosureEvents, u64),
) -> Station {
    let grads = column_gradients(&y, &states);
    let u: Vec<f64> = states.iter().map(|s| s.u[0]).collect();
    let diagnostics = diagnose_column(x, &y, &u, fs.rho, fs.mu, fs.u);
    Station {
        x,
        y,
        states,
        grads,
        diagnostics,
        cycles: solve.0,
        substeps: 0,
        events: solve.1,
        positivity_events: solve.2,
    }
}

/// Smallest sub-step, as a fraction of the station spacing.
const MIN_SUBSTEP: f64 = 1.0 / 1024.0;

/// Internal marching level, either a station or an intermediate sub-step.
struct Level {
    x: f64,
    y: Vec<f64>,
    profiles: Profiles,
    u_tau: f64,
    delta: f64,
}

impl Level {
    fn from_station(s: &Station) -> Self {
        Level {
            x: s.x,
            y: s.y.clone(),
            profiles: Profiles::from_states(&s.states),
            u_tau: s.diagnostics.u_tau,
            delta: s.diagnostics.delta,
        }
    }
}

/// A converged step, or the residual history of a failed one.
type Attempt = Result<(Level, StationSolve, ClosureEvents), Vec<f64>>;

/// Advances from `prev` to `x`, using `prev2` for the second-order history.
#[allow(clippy::too_many_arguments)]
fn advance(
    cfg: &SolverConfig,
    fs: &Freestream,
    gas: &GasModel,
    model: &TurbulenceModel,
    ny: usize,
    prev: &Level,
    prev2: Option<&Level>,
    x: f64,
) -> Result<Attempt, SolverError> {
    let first = cfg.y_plus_first * fs.nu / prev.u_tau.max(1e-12);
    let height = prev.y.last().unwrap().max(2.0 * prev.delta);
    let ratio = solve_stretch_ratio(first, height, ny)?;
    let y = Column::geometric(first, ratio, ny).y;
    let ny = y.len();

    let p_n = prev.profiles.interpolate(&prev.y, &y);
    let p_nm = prev2.map(|l| l.profiles.interpolate(&l.y, &y));
    let (c0, c1, c2) = backward_weights(x, prev.x, prev2.map(|l| l.x));
    let combine = |a: &[f64], b: Option<&Vec<f64>>| -> Vec<f64> {
        (0..ny).map(|j| c1 * a[j] + b.map_or(0.0, |b| c2 * b[j])).collect()
    };
    let hist = Profiles {
        u: combine(&p_n.u, p_nm.as_ref().map(|p| &p.u)),
        v: vec![0.0; ny],
        t: combine(&p_n.t, p_nm.as_ref().map(|p| &p.t)),
        q0: combine(&p_n.q0, p_nm.as_ref().map(|p| &p.q0)),
        q1: combine(&p_n.q1, p_nm.as_ref().map(|p| &p.q1)),
    };
    let pen = penalty_nodes(&y, prev.u_tau, fs.nu, cfg.penalty_y_plus);
    let problem = StationProblem { y: &y, fs, gas, model, c0, hist, cfg, pen };
    let mut start = p_n;
    start.u[0] = 0.0;
    start.v[0] = 0.0;
    start.q0[0] = 0.0;
    let solved = match cfg.linearization {
        Linearization::Newton => problem.newton(start),
        Linearization::Picard => problem.picard(start),
    };
    let mut solved = match solved {
        Ok(s) => s,
        Err(h) => return Ok(Err(h)),
    };
    solved.profiles.t = if cfg.energy_equation { problem.temperature(&solved.profiles) } else { vec![fs.t; ny] };
    let mut events = ClosureEvents::default();
    problem.closure(&solved.profiles, &mut events);
    let u = &solved.profiles.u;
    let d = diagnose_column(x, &y, u, fs.rho, fs.mu, fs.u);
    let level = Level { x, y, profiles: solved.profiles.clone(), u_tau: d.u_tau, delta: d.delta };
    Ok(Ok((level, solved, events)))
}

/// Marches from the inlet column through every station of `grid`. Each
/// step rebuilds its column so that the first node sits at the target
/// wall units of the previous friction velocity and the top stays above
/// twice the boundary-layer thickness. A step that does not converge is
/// retried as two half steps.
pub fn march(
    cfg: &SolverConfig,
    grid: &Grid,
    inlet: &InletColumn,
    fs: &Freestream,
    gas: &GasModel,
    model: &TurbulenceModel,
) -> Result<SolutionField, SolverError> {
    let inlet_station =
        station_from(grid.x[0], grid.inlet.y.clone(), inlet.states.clone(), fs, (0, ClosureEvents::default(), 0));
    let mut prev = Level::from_station(&inlet_station);
    let mut prev2: Option<Level> = None;
    let mut stations = vec![inlet_station];
    for n in 1..grid.nx {
        let spacing = grid.x[n] - grid.x[n - 1];
        let mut dx = spacing;
        let (mut cycles, mut positivity, mut substeps) = (0, 0, 0);
        let events = loop {
            let x = (prev.x + dx).min(grid.x[n]);
            let last = grid.x[n] - x <= 1e-9 * spacing;
            let x = if last { grid.x[n] } else { x };
            match advance(cfg, fs, gas, model, grid.ny, &prev, prev2.as_ref(), x)? {
                Ok((level, solved, events)) => {
                    cycles += solved.cycles;
                    positivity += solved.positivity;
                    substeps += 1;
                    prev2 = Some(std::mem::replace(&mut prev, level));
                    if last {
                        break events;
                    }
                }
                Err(h) => {
                    dx *= 0.5;
                    if dx < MIN_SUBSTEP * spacing {
                        let tail = h.len().saturating_sub(10);
                        return Err(SolverError::NonConvergence { station: n, history: h[tail..].to_vec() });
                    }
                }
            }
        };
        let states = prev.profiles.states(fs.rho);
        let mut station = station_from(grid.x[n], prev.y.clone(), states, fs, (cycles, events, positivity));
        station.substeps = substeps;
        stations.push(station);
    }
    Ok(SolutionField { freestream: *fs, stations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let a = [0.0, -1.0, -1.0, -1.0];
        let b = [4.0, 4.0, 4.0, 4.0];
        let c = [-1.0, -1.0, -1.0, 0.0];
        let d = [1.0, 2.0, 3.0, 4.0];
        let x = solve_tridiagonal(&a, &b, &c, &d);
        let m = nalgebra::Matrix4::new(
            4.0, -1.0, 0.0, 0.0, -1.0, 4.0, -1.0, 0.0, 0.0, -1.0, 4.0, -1.0, 0.0, 0.0, -1.0, 4.0,
        );
        let oracle = m.lu().solve(&nalgebra::Vector4::new(1.0, 2.0, 3.0, 4.0)).unwrap();
        for j in 0..4 {
            assert!((x[j] - oracle[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn pchip_reproduces_linear_data_and_clamps() {
        let x = [0.0, 0.1, 0.35, 1.0];
        let f: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let out = pchip(&x, &f, &[0.05, 0.2, 0.9, 2.0]);
        for (o, t) in out.iter().zip([0.05, 0.2, 0.9]) {
            assert!((o - (2.0 * t + 1.0)).abs() < 1e-14);
        }
        assert_eq!(out[3], 3.0);
    }

    #[test]
    fn pchip_is_monotone() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let f = [0.0, 0.0, 1.0, 1.0, 1.0];
        let xi: Vec<f64> = (0..401).map(|k| k as f64 * 0.01).collect();
        let out = pchip(&x, &f, &xi);
        assert!(out.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn backward_weights_are_exact() {
        // first order is exact for linear, BDF2 for quadratic data
        let (c0, c1, _) = backward_weights(1.5, 1.0, None);
        assert!((c0 * 3.0 + c1 * 2.0 - 2.0).abs() < 1e-14);
        let f = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x;
        let (c0, c1, c2) = backward_weights(1.7, 1.2, Some(0.5));
        let d = c0 * f(1.7) + c1 * f(1.2) + c2 * f(0.5);
        assert!((d - (2.0 - 6.0 * 1.7)).abs() < 1e-12);
    }
}

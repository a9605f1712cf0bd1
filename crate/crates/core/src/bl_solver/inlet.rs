//! Synthesized inlet column: Spalding's inner law with a Coles wake for the
//! velocity, a q₀⁺ shape peaking at 3 near y⁺ = 20, and q₁ from a blend of
//! the wall value and local equilibrium `ε = u_τ³/(𝒦y)`.

use super::diagnose::momentum_thickness;
use super::wall_bc::{apply_wall_relation, penalty_nodes};
use super::{Freestream, SolverError};
use crate::variables::PrimitiveState;

pub const KAPPA: f64 = 0.41;
pub const B: f64 = 5.2;

/// Peak `q₀⁺` of the inlet shape and its wall-unit location.
const Q0_PEAK: f64 = 3.0;
const Y_PEAK: f64 = 20.0;
/// Log-layer `k⁺ = 1/√C_μ`.
const K_LOG: f64 = 3.333_333_333_333_333;

/// Inverts Spalding's law
/// `y⁺ = u⁺ + e^{−𝒦B}(e^{𝒦u⁺} − 1 − 𝒦u⁺ − (𝒦u⁺)²/2 − (𝒦u⁺)³/6)`.
pub fn spalding_u_plus(y_plus: f64) -> f64 {
    let eb = (-KAPPA * B).exp();
    let f = |u: f64| {
        let ku = KAPPA * u;
        u + eb * (ku.exp() - 1.0 - ku - ku * ku / 2.0 - ku * ku * ku / 6.0) - y_plus
    };
    let (mut lo, mut hi) = (0.0, y_plus.max(0.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Composite `u⁺` with wake strength `pi` inside `δ⁺`.
pub fn composite_u_plus(y_plus: f64, delta_plus: f64, pi: f64) -> f64 {
    let eta = (y_plus / delta_plus).min(1.0);
    spalding_u_plus(y_plus.min(delta_plus)) + 2.0 * pi / KAPPA * (0.5 * std::f64::consts::PI * eta).sin().powi(2)
}

fn k_plus_shape(y_plus: f64) -> f64 {
    let x = y_plus / Y_PEAK;
    let k_peak = 0.5 * Q0_PEAK * Q0_PEAK;
    if x <= 1.0 {
        k_peak * x * x * (2.0 * (1.0 - x)).exp()
    } else {
        K_LOG + (k_peak - K_LOG) * (-(x - 1.0)).exp()
    }
}

fn eps_plus_shape(y_plus: f64) -> f64 {
    // wall value from q₁⁴ = ν² q₀,ᵧ² applied to the k⁺ shape
    let wall_slope = Q0_PEAK * std::f64::consts::E / Y_PEAK;
    (wall_slope * wall_slope).min(1.0 / (KAPPA * y_plus.max(1e-300)))
}

fn outer_taper(eta: f64) -> f64 {
    if eta >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * eta).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InletColumn {
    pub states: Vec<PrimitiveState>,
    pub u_tau: f64,
    pub delta: f64,
    pub wake_strength: f64,
    pub re_theta: f64,
    pub cycles: usize,
}

/// Column for a given friction velocity; `δ` follows from matching the
/// edge velocity.
fn column_for(u_tau: f64, pi: f64, fs: &Freestream, y: &[f64], penalty_y_plus: f64) -> (Vec<PrimitiveState>, f64) {
    let nu = fs.nu;
    let target = fs.u / u_tau - 2.0 * pi / KAPPA;
    // δ⁺ such that the inner law reaches the edge velocity minus the wake
    let (mut lo, mut hi) = (1.0f64.ln(), 1e9f64.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spalding_u_plus(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta_plus = (0.5 * (lo + hi)).exp();
    let delta = delta_plus * nu / u_tau;
    let eps_scale = u_tau.powi(4) / nu;
    let ke = 0.5 * fs.q0 * fs.q0;
    let mut u = Vec::with_capacity(y.len());
    let mut q0 = Vec::with_capacity(y.len());
    let mut q1 = Vec::with_capacity(y.len());
    for &yy in y {
        let yp = yy * u_tau / nu;
        let eta = yy / delta;
        let uu = (u_tau * composite_u_plus(yp, delta_plus, pi)).min(fs.u);
        let taper = outer_taper(eta);
        let k = u_tau * u_tau * k_plus_shape(yp) * taper + ke * (uu / fs.u).powi(2);
        let eps = eps_scale * eps_plus_shape(yp) * taper + fs.eps();
        u.push(uu);
        q0.push((2.0 * k).sqrt());
        q1.push((nu * eps).powf(0.25));
    }
    let nodes = penalty_nodes(y, u_tau, nu, penalty_y_plus);
    apply_wall_relation(y, &q0, &mut q1, nu, nodes);
    let states = (0..y.len()).map(|j| PrimitiveState::new(fs.rho, [u[j], 0.0, 0.0], fs.t, q0[j], q1[j])).collect();
    (states, delta)
}

fn realized_re_theta(states: &[PrimitiveState], y: &[f64], fs: &Freestream) -> f64 {
    let u: Vec<f64> = states.iter().map(|s| s.u[0]).collect();
    momentum_thickness(y, &u, fs.u).0 * fs.u / fs.nu
}

/// Iterates the friction velocity until the momentum-thickness Reynolds
/// number realized on `y` matches `re_theta_in` within 1 %.
pub fn inlet_profiles(
    re_theta_in: f64,
    wake_strength: f64,
    fs: &Freestream,
    y: &[f64],
    penalty_y_plus: f64,
) -> Result<InletColumn, SolverError> {
    if !(re_theta_in > 500.0) {
        return Err(SolverError::Config(format!("inlet Re_theta must exceed 500, got {re_theta_in}")));
    }
    // Re_θ decreases with u_τ; bisect in log u_τ
    let (mut lo, mut hi) = ((1e-3 * fs.u).ln(), (0.2 * fs.u).ln());
    let mut best = None;
    for cycle in 1..=100 {
        let mid = 0.5 * (lo + hi);
        let u_tau = mid.exp();
        let (states, delta) = column_for(u_tau, wake_strength, fs, y, penalty_y_plus);
        let re = realized_re_theta(&states, y, fs);
        let done = (re / re_theta_in - 1.0).abs() < 1e-10;
        best = Some((states, delta, u_tau, re, cycle));
        if done {
            break;
        }
        if re > re_theta_in {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (states, delta, u_tau, re, cycles) = best.expect("at least one cycle");
    if (re / re_theta_in - 1.0).abs() > 0.01 || delta > *y.last().unwrap() {
        return Err(SolverError::Inlet { achieved: re, target: re_theta_in });
    }
    Ok(InletColumn { states, u_tau, delta, wake_strength, re_theta: re, cycles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bl_solver::grid::build_grid;
    use crate::bl_solver::SolverConfig;
    use crate::closure::ClosureConstants;
    use crate::thermo::GasModel;

    fn setup(re: f64) -> (Freestream, Vec<f64>) {
        let cfg = SolverConfig { re_theta_inlet: re, re_theta_target: re * 2.0, ..Default::default() };
        let fs = Freestream::new(&cfg, &GasModel::default(), &ClosureConstants::default());
        let g = build_grid(&cfg.grid_spec(&fs), re, fs.u, fs.nu).unwrap();
        (fs, g.inlet.y)
    }

    #[test]
    fn spalding_limits() {
        assert!((spalding_u_plus(1.0) - 1.0).abs() < 0.05);
        assert!((spalding_u_plus(1000.0) - (1000f64.ln() / 0.41 + 5.2)).abs() < 0.05 * 22.05);
        let up = spalding_u_plus(37.0);
        let eb = (-KAPPA * B).exp();
        let ku = KAPPA * up;
        let back = up + eb * (ku.exp() - 1.0 - ku - ku * ku / 2.0 - ku * ku * ku / 6.0);
        assert!((back - 37.0).abs() < 1e-10);
    }

    #[test]
    fn inlet_matches_target_re_theta() {
        let (fs, y) = setup(2300.0);
        let c = inlet_profiles(2300.0, 0.5, &fs, &y, 3.0).unwrap();
        assert!((c.re_theta / 2300.0 - 1.0).abs() < 0.01);
        assert!(c.cycles <= 100);
        let yp1 = 1.0 * fs.nu / c.u_tau;
        // interpolate u⁺ at y⁺ = 1
        let j = y.iter().position(|&v| v > yp1).unwrap();
        let s = (yp1 - y[j - 1]) / (y[j] - y[j - 1]);
        let u1 = c.states[j - 1].u[0] + s * (c.states[j].u[0] - c.states[j - 1].u[0]);
        assert!((u1 / c.u_tau - 1.0).abs() < 0.05);
    }

    #[test]
    fn inlet_log_region_at_high_re() {
        let (fs, y) = setup(15000.0);
        let c = inlet_profiles(15000.0, 0.5, &fs, &y, 3.0).unwrap();
        let delta_plus = c.delta * c.u_tau / fs.nu;
        let up = composite_u_plus(1000.0, delta_plus, c.wake_strength);
        assert!((up / 22.05 - 1.0).abs() < 0.05, "{up}");
    }

    #[test]
    fn inlet_turbulence_shape() {
        let (fs, y) = setup(2300.0);
        let c = inlet_profiles(2300.0, 0.5, &fs, &y, 3.0).unwrap();
        assert_eq!(c.states[0].q0, 0.0);
        assert_eq!(c.states[0].u[0], 0.0);
        let peak = c.states.iter().zip(&y).max_by(|a, b| a.0.q0.total_cmp(&b.0.q0)).unwrap();
        let yp = peak.1 * c.u_tau / fs.nu;
        assert!(yp > 10.0 && yp < 30.0);
        assert!((peak.0.q0 / c.u_tau - 3.0).abs() < 0.2);
        assert!(c.states.iter().all(|s| s.q0 >= 0.0 && s.q1 >= 0.0));
    }

    #[test]
    fn low_target_rejected() {
        let (fs, y) = setup(2300.0);
        assert!(inlet_profiles(400.0, 0.5, &fs, &y, 3.0).is_err());
    }
}

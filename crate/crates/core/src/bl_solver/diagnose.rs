//! Integral and wall quantities of a converged column.

use super::grid::karman_schoenherr_cf;
use super::wall_bc::one_sided_gradient;

/// Fraction of the edge velocity that defines the boundary-layer edge.
pub const EDGE_FRACTION: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub x: f64,
    /// Momentum thickness [m].
    pub theta: f64,
    pub re_theta: f64,
    /// Wall shear stress [Pa].
    pub tau_w: f64,
    /// Friction velocity [m/s].
    pub u_tau: f64,
    pub cf: f64,
    pub cf_correlation: f64,
    /// Height where `u` first reaches the edge fraction [m].
    pub delta: f64,
    /// False when the profile never reaches the edge fraction.
    pub edge_found: bool,
    /// Wall units of the first off-wall node.
    pub y_plus_first: f64,
}

/// `θ = ∫₀^{y_e} (u/U)(1 − u/U) dy` by the trapezoidal rule up to the
/// 99.5 % edge (constant density). Returns `(θ, y_e, edge_found)`.
pub fn momentum_thickness(y: &[f64], u: &[f64], u_edge: f64) -> (f64, f64, bool) {
    let f = |v: f64| (v / u_edge) * (1.0 - v / u_edge);
    let target = EDGE_FRACTION * u_edge;
    let mut theta = 0.0;
    for j in 1..y.len() {
        if u[j] >= target {
            // stop at the interpolated crossing
            let s = if u[j - 1] >= target { 0.0 } else { ((target - u[j - 1]) / (u[j] - u[j - 1])).clamp(0.0, 1.0) };
            let ye = y[j - 1] + s * (y[j] - y[j - 1]);
            theta += 0.5 * (f(u[j - 1]) + f(target)) * (ye - y[j - 1]);
            return (theta, ye, true);
        }
        theta += 0.5 * (f(u[j - 1]) + f(u[j])) * (y[j] - y[j - 1]);
    }
    (theta, *y.last().unwrap(), false)
}

/// Wall-scaled profile `(y⁺, u⁺)`.
pub fn wall_units(y: &[f64], u: &[f64], u_tau: f64, nu: f64) -> (Vec<f64>, Vec<f64>) {
    (y.iter().map(|v| v * u_tau / nu).collect(), u.iter().map(|v| v / u_tau).collect())
}

/// Least-squares `u⁺ = (1/𝒦) ln y⁺ + B` over nodes with `y⁺` in `[lo, hi]`.
/// Returns `(𝒦, B)`.
pub fn log_law_fit(y_plus: &[f64], u_plus: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> =
        y_plus.iter().zip(u_plus).filter(|(yp, _)| **yp >= lo && **yp <= hi).map(|(yp, up)| (yp.ln(), *up)).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some((1.0 / slope, my - slope * mx))
}

pub fn diagnose_column(x: f64, y: &[f64], u: &[f64], rho: f64, mu: f64, u_edge: f64) -> Diagnostics {
    let (theta, delta, edge_found) = momentum_thickness(y, u, u_edge);
    let re_theta = rho * u_edge * theta / mu;
    let tau_w = mu * one_sided_gradient(y, u);
    let u_tau = (tau_w.max(0.0) / rho).sqrt();
    Diagnostics {
        x,
        theta,
        re_theta,
        tau_w,
        u_tau,
        cf: 2.0 * (u_tau / u_edge).powi(2),
        cf_correlation: karman_schoenherr_cf(re_theta),
        delta,
        edge_found,
        y_plus_first: y[1] * u_tau * rho / mu,
    }
}

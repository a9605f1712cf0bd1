//! Wall treatment of q₁: `q₁⁴ = ν² q₀,ₖq₀,ₖ` at the wall and, as a penalty,
//! at every node below a wall-unit threshold.

/// Second-order one-sided derivative at `y[0]` from the first three nodes.
pub fn one_sided_gradient(y: &[f64], f: &[f64]) -> f64 {
    let h1 = y[1] - y[0];
    let h2 = y[2] - y[1];
    -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2]
}

/// Weights `(w₋, w₀, w₊)` of the second-order central first derivative on
/// a non-uniform grid.
pub fn central_weights(y: &[f64], j: usize) -> (f64, f64, f64) {
    let hm = y[j] - y[j - 1];
    let hp = y[j + 1] - y[j];
    (-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp)))
}

/// Derivative of `f` at every node: one-sided at both ends, central inside.
pub fn column_gradient(y: &[f64], f: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut g = vec![0.0; n];
    g[0] = one_sided_gradient(y, f);
    for j in 1..n - 1 {
        let (a, b, c) = central_weights(y, j);
        g[j] = a * f[j - 1] + b * f[j] + c * f[j + 1];
    }
    let yr: Vec<f64> = [y[n - 1], y[n - 2], y[n - 3]].to_vec();
    let fr: Vec<f64> = [f[n - 1], f[n - 2], f[n - 3]].to_vec();
    g[n - 1] = one_sided_gradient(&yr, &fr);
    g
}

/// `q₁ = (ν² q₀,ᵧ²)^{1/4} = √(ν |q₀,ᵧ|)`
pub fn q1_wall(nu: f64, dq0_dy: f64) -> f64 {
    (nu * dq0_dy.abs()).sqrt()
}

/// Number of leading nodes (wall included) that lie below `y_plus_limit`.
pub fn penalty_nodes(y: &[f64], u_tau: f64, nu: f64, y_plus_limit: f64) -> usize {
    y.iter().take_while(|&&yy| yy * u_tau / nu < y_plus_limit).count().max(1)
}

/// Overwrites q₁ on the wall and penalty nodes from the q₀ gradient.
pub fn apply_wall_relation(y: &[f64], q0: &[f64], q1: &mut [f64], nu: f64, nodes: usize) {
    let g = column_gradient(y, q0);
    for j in 0..nodes.min(y.len() - 1) {
        q1[j] = q1_wall(nu, g[j]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_q0_gives_closed_form() {
        let nu = 1.5e-5;
        let a = 2.0e3;
        let y = [0.0, 1e-6, 2.5e-6, 4.5e-6];
        let q0: Vec<f64> = y.iter().map(|&v| a * v).collect();
        let g = one_sided_gradient(&y, &q0);
        assert!((g - a).abs() < 1e-9 * a);
        let q1 = q1_wall(nu, g);
        assert!((q1 - (nu * a).sqrt()).abs() < 1e-12);
        assert!((q1.powi(4) - nu * nu * a * a).abs() < 1e-9 * nu * nu * a * a);
    }

    #[test]
    fn zero_q0_gives_zero_q1() {
        let y = [0.0, 1.0, 3.0, 4.0];
        let mut q1 = [1.0; 4];
        apply_wall_relation(&y, &[0.0; 4], &mut q1, 1e-5, 2);
        assert_eq!(&q1[..2], &[0.0, 0.0]);
        assert_eq!(q1[2], 1.0);
    }

    #[test]
    fn one_sided_gradient_is_exact_for_quadratics() {
        let y = [0.0, 0.3, 0.75];
        let f: Vec<f64> = y.iter().map(|&v| 2.0 + 3.0 * v - 5.0 * v * v).collect();
        assert!((one_sided_gradient(&y, &f) - 3.0).abs() < 1e-12);
        let (a, b, c) = central_weights(&[0.1, 0.3, 0.75], 1);
        let g = |v: f64| 1.0 - v + 4.0 * v * v;
        let d = a * g(0.1) + b * g(0.3) + c * g(0.75);
        assert!((d - (-1.0 + 8.0 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn penalty_region_counts_nodes() {
        let y = [0.0, 1e-6, 1e-5, 1e-4];
        assert_eq!(penalty_nodes(&y, 1.0, 1e-5, 3.0), 3);
        assert_eq!(penalty_nodes(&y, 1.0, 1e-5, 0.0), 1);
    }
}

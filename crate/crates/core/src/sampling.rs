//! Randomized admissible states for the matrix property suite.

use rand::Rng;

use crate::variables::{PrimitiveGradients, PrimitiveState};

/// Uniform sampling box. Covers the flat-plate regime with margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSampler {
    pub rho: (f64, f64),
    pub speed: (f64, f64),
    pub t: (f64, f64),
    pub q0: (f64, f64),
    pub q1: (f64, f64),
    /// Wall distance used to evaluate damping functions [m].
    pub wall_distance: (f64, f64),
}

impl Default for StateSampler {
    fn default() -> Self {
        StateSampler {
            rho: (0.1, 10.0),
            speed: (0.0, 300.0),
            t: (100.0, 1000.0),
            q0: (0.0, 30.0),
            q1: (0.0, 30.0),
            wall_distance: (1e-5, 1e-1),
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

impl StateSampler {
    pub fn state<R: Rng>(&self, rng: &mut R) -> PrimitiveState {
        let rho = uniform(rng, self.rho);
        let speed = uniform(rng, self.speed);
        // uniform direction on the sphere
        let cos_theta = uniform(rng, (-1.0, 1.0));
        let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
        let phi = uniform(rng, (0.0, std::f64::consts::TAU));
        let u = [speed * sin_theta * phi.cos(), speed * sin_theta * phi.sin(), speed * cos_theta];
        let t = uniform(rng, self.t);
        let q0 = uniform(rng, self.q0);
        let q1 = uniform(rng, self.q1);
        PrimitiveState::new(rho, u, t, q0, q1)
    }

    pub fn wall_distance<R: Rng>(&self, rng: &mut R) -> f64 {
        // log-uniform
        let (lo, hi) = self.wall_distance;
        (lo.ln() + (hi.ln() - lo.ln()) * rng.gen::<f64>()).exp()
    }

    /// Gradients with magnitudes typical of a wall-bounded shear layer.
    pub fn gradients<R: Rng>(&self, rng: &mut R) -> PrimitiveGradients {
        let mut g = PrimitiveGradients::default();
        let mut sym = |scale: f64| scale * uniform(rng, (-1.0, 1.0));
        for j in 0..3 {
            g.drho[j] = sym(10.0);
            for i in 0..3 {
                g.du[i][j] = sym(1e4);
            }
            g.dt[j] = sym(1e3);
            g.dq0[j] = sym(1e3);
            g.dq1[j] = sym(1e3);
        }
        g
    }
}

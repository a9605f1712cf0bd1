//! Wall-normal grids and the Karman-Schönherr skin-friction correlation.

use super::SolverError;

/// `1/C_f = 17.08 (log₁₀Re_θ)² + 25.11 log₁₀Re_θ + 6.012`
pub fn karman_schoenherr_cf(re_theta: f64) -> f64 {
    let l = re_theta.log10();
    1.0 / (17.08 * l * l + 25.11 * l + 6.012)
}

/// Friction velocity implied by the correlation at `re_theta`.
pub fn correlation_u_tau(re_theta: f64, u_edge: f64) -> f64 {
    u_edge * (0.5 * karman_schoenherr_cf(re_theta)).sqrt()
}

/// Geometrically stretched wall-normal column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub y: Vec<f64>,
    pub ratio: f64,
}

impl Column {
    /// `ny` cells starting at `first` and growing by `ratio`.
    pub fn geometric(first: f64, ratio: f64, ny: usize) -> Self {
        let mut y = Vec::with_capacity(ny + 1);
        y.push(0.0);
        let mut dy = first;
        for _ in 0..ny {
            let last = *y.last().unwrap();
            y.push(last + dy);
            dy *= ratio;
        }
        Column { y, ratio }
    }

    pub fn height(&self) -> f64 {
        *self.y.last().unwrap()
    }

    pub fn first_spacing(&self) -> f64 {
        self.y[1]
    }
}

fn geometric_height(first: f64, ratio: f64, ny: usize) -> f64 {
    if (ratio - 1.0).abs() < 1e-12 {
        first * ny as f64
    } else {
        first * (ratio.powi(ny as i32) - 1.0) / (ratio - 1.0)
    }
}

pub const MAX_STRETCH: f64 = 1.5;

/// Stretching ratio that puts `ny` cells of first size `first` under `height`.
pub fn solve_stretch_ratio(first: f64, height: f64, ny: usize) -> Result<f64, SolverError> {
    let uniform = first * ny as f64;
    if (height - uniform).abs() <= 1e-12 * height {
        return Ok(1.0);
    }
    if height < uniform || height > geometric_height(first, MAX_STRETCH, ny) {
        return Err(SolverError::Config(format!(
            "grid stretching needed for first spacing {first:e} m and height {height:e} m with {ny} cells is outside [1, {MAX_STRETCH}]"
        )));
    }
    let (mut lo, mut hi) = (1.0, MAX_STRETCH);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if geometric_height(first, mid, ny) < height {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Stations and the inlet column of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    /// Streamwise station positions measured from the inlet [m].
    pub x: Vec<f64>,
    /// Wall-normal column at the inlet; later stations rebuild theirs.
    pub inlet: Column,
    pub y_plus_first: f64,
}

/// Inputs that fix the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub y_plus_first: f64,
    pub length: f64,
    pub height: f64,
}

/// Builds the station list and the inlet column. The first spacing is
/// `y⁺ ν/u_τ` with `u_τ` from the correlation at `re_theta_in`.
pub fn build_grid(spec: &GridSpec, re_theta_in: f64, u_edge: f64, nu: f64) -> Result<Grid, SolverError> {
    if spec.nx < 2 {
        return Err(SolverError::Config(format!("grid.nx must be at least 2, got {}", spec.nx)));
    }
    if spec.ny < 8 {
        return Err(SolverError::Config(format!("grid.ny must be at least 8, got {}", spec.ny)));
    }
    if !(spec.y_plus_first > 0.0) {
        return Err(SolverError::Config(format!("grid.y_plus_first must be positive, got {}", spec.y_plus_first)));
    }
    let u_tau = correlation_u_tau(re_theta_in, u_edge);
    let first = spec.y_plus_first * nu / u_tau;
    let ratio = solve_stretch_ratio(first, spec.height, spec.ny)?;
    let dx = spec.length / (spec.nx - 1) as f64;
    Ok(Grid {
        nx: spec.nx,
        ny: spec.ny,
        x: (0..spec.nx).map(|i| i as f64 * dx).collect(),
        inlet: Column::geometric(first, ratio, spec.ny),
        y_plus_first: spec.y_plus_first,
    })
}

//! Entropy-stable symmetric form of the compressible Reynolds-averaged
//! equations closed by a Lam-Bremhorst k-ε model in the velocity scales
//! `q₀ = √(2k)` and `q₁ = (νε)^{1/4}`, with a marching flat-plate
//! boundary-layer solver that exercises the closure.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bl_solver;
pub mod cli;
pub mod closure;
pub mod config;
pub mod entropy_audit;
pub mod flux_jacobians;
pub mod sampling;
pub mod thermo;
pub mod variables;

//! Numerical solver and existence certificates for φ-Laplacian boundary value
//! problems
//!
//! ```text
//! (φ(u′))′ = f(t, u, u′),   u(T) = 0 = u′(0)
//! ```
//!
//! Solutions are computed as fixed points of `u ↦ K(φ⁻¹[H(N_f(u))])` on a uniform
//! grid, reached by damped successive substitution and continuation in `λ` from
//! the trivial problem `λ = 0`. The [`certify`] module estimates the constants in
//! the a-priori bounds that guarantee existence, and [`alpha`] is a symbolic
//! calculus for the Kuratowski measure of noncompactness.

pub mod alpha;
pub mod certify;
pub mod error;
pub mod grid;
pub mod operators;
pub mod phi;
pub mod problem;
pub mod quadrature;
pub mod rhs;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Grid, Samples, Trajectory, VectorNorm};
pub use phi::PhiMap;
pub use problem::Problem;
pub use rhs::RhsFunction;

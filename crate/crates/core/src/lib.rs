//! Discontinuous Galerkin (symmetric interior penalty) solver for the 2D
//! Kelvin-Voigt viscoelastic fluid equations
//!
//! ```text
//! u_t + u.grad(u) - kappa lap(u_t) - nu lap(u) + grad(p) = f,   div(u) = 0
//! ```
//!
//! on the unit square, discretized with broken P_k velocity / P_{k-1} or P_k
//! pressure spaces, an upwinded convection form and backward Euler in time.
//!
//! Module map:
//! * [`mesh`]: structured triangulations with edge topology.
//! * [`quadrature`]: tabulated Gauss rules on the reference triangle and edge.
//! * [`space`]: broken Lagrange spaces and discrete fields.
//! * [`forms`]: assembly of mass, SIPG diffusion, divergence and convection operators.
//! * [`linalg`]: CSR storage, ILU(0), restarted GMRES and the saddle-point solve.
//! * [`system`]: the discrete initial projection and the time loop.
//! * [`analysis`]: manufactured solutions, error norms and convergence studies.

pub mod analysis;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod space;
pub mod system;

pub use error::{Error, Result};

/// A point or vector in the plane.
pub type Vec2 = [f64; 2];

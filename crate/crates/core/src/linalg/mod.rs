//! Sparse linear algebra: CSR storage, ILU(0), sparse LU, restarted GMRES and the
//! block saddle-point solve with a zero-mean pressure multiplier.

mod csr;
mod gmres;
mod ilu;
mod lu;
mod saddle;

pub use csr::CsrMatrix;
pub use gmres::{gmres, GmresConfig, GmresOutcome};
pub use ilu::Ilu0;
pub use lu::SparseLu;
pub use saddle::{
    solve_saddle, solve_saddle_with, BlockSaddleSystem, Preconditioning, SaddleMatrix,
    SaddleSolution,
};

/// Square linear operator `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Approximate inverse action `z = M^{-1} r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

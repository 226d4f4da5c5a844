use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use super::{CsrMatrix, Preconditioner};
use crate::{Error, Result};

/// Sparse LU with partial pivoting and a fill-reducing column order.
///
/// The symbolic analysis can be reused for matrices sharing a pattern.
pub struct SparseLu {
    symbolic: SymbolicLu<usize>,
    lu: Lu<usize, f64>,
    pattern: (Vec<usize>, Vec<usize>),
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu")
            .field("n", &(self.pattern.0.len() - 1))
            .finish()
    }
}

fn factor_error(e: impl std::fmt::Debug) -> Error {
    Error::Config(format!("sparse LU factorization failed: {e:?}"))
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Config("LU needs a square matrix".into()));
        }
        // the CSR arrays of A^T are the CSC arrays of A
        let t = a.transpose();
        let n = a.nrows();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, t.row_ptr(), None, t.col_idx());
        let symbolic = SymbolicLu::try_new(sym).map_err(factor_error)?;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), SparseColMatRef::new(sym, t.values()))
            .map_err(factor_error)?;
        Ok(Self {
            symbolic,
            lu,
            pattern: (t.row_ptr().to_vec(), t.col_idx().to_vec()),
        })
    }

    /// Numeric refactorization of a matrix with the pattern used in [`SparseLu::new`].
    pub fn refactor(&mut self, a: &CsrMatrix) -> Result<()> {
        let t = a.transpose();
        if t.row_ptr() != self.pattern.0.as_slice() || t.col_idx() != self.pattern.1.as_slice() {
            return Err(Error::Config(
                "LU refactorization needs an unchanged pattern".into(),
            ));
        }
        let n = a.nrows();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, t.row_ptr(), None, t.col_idx());
        self.lu =
            Lu::try_new_with_symbolic(self.symbolic.clone(), SparseColMatRef::new(sym, t.values()))
                .map_err(factor_error)?;
        Ok(())
    }
}

impl Preconditioner for SparseLu {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        let n = z.len();
        self.lu
            .solve_in_place(MatMut::from_column_major_slice_mut(z, n, 1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_indefinite_system_exactly() {
        // zero diagonal entry forces row pivoting
        let a = CsrMatrix::from_dense(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let lu = SparseLu::new(&a).unwrap();
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let mut z = vec![0.0; 3];
        lu.apply(&b, &mut z);
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi - xi).abs() < 1e-14);
        }
    }

    #[test]
    fn refactor_requires_same_pattern() {
        let a = CsrMatrix::from_dense(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let mut lu = SparseLu::new(&a).unwrap();
        let mut b = a.clone();
        b.scale(2.0);
        lu.refactor(&b).unwrap();
        let mut z = vec![0.0; 2];
        lu.apply(&[12.0, 14.0], &mut z);
        assert!((z[0] - 1.0).abs() < 1e-14 && (z[1] - 2.0).abs() < 1e-14);
        assert!(lu.refactor(&CsrMatrix::identity(2)).is_err());
    }
}

//! Monolithic saddle-point system
//!
//! ```text
//! [ K  B^T  0   ] [U ]   [f]
//! [ B  0    m^T ] [P ] = [g]
//! [ 0  m    0   ] [mu]   [0]
//! ```
//!
//! where `m_q` is the integral of pressure basis function `q`. The last row
//! fixes the pressure mean; `mu` absorbs any inconsistency of `g` with the
//! constant pressure mode.

use super::{gmres, CsrMatrix, GmresConfig, GmresOutcome, Ilu0, SparseLu};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BlockSaddleSystem {
    pub k: CsrMatrix,
    pub b: CsrMatrix,
    pub mean: Vec<f64>,
    pub rhs_v: Vec<f64>,
    pub rhs_p: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub multiplier: f64,
    pub iterations: usize,
    /// True relative residual of the full block system.
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Right preconditioner for the block GMRES solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioning {
    /// ILU(0) of the current block matrix, rebuilt for every solve.
    Ilu0,
    /// Sparse LU of an earlier block matrix. It is refreshed after a solve
    /// that needed more than `refresh_iters` iterations, or failed.
    LaggedLu { refresh_iters: usize },
}

impl Default for Preconditioning {
    fn default() -> Self {
        Preconditioning::LaggedLu { refresh_iters: 10 }
    }
}

/// Assembled block matrix with a fixed pattern; the velocity block can be
/// refreshed in place as long as its pattern does not change.
#[derive(Debug)]
pub struct SaddleMatrix {
    full: CsrMatrix,
    k_row_ptr: Vec<usize>,
    k_col_idx: Vec<usize>,
    mean: Vec<f64>,
    nv: usize,
    np: usize,
    precond: Preconditioning,
    lu: Option<SparseLu>,
    lu_stale: bool,
    factorizations: usize,
}

impl SaddleMatrix {
    pub fn assemble(k: &CsrMatrix, b: &CsrMatrix, mean: &[f64]) -> Result<Self> {
        let nv = k.nrows();
        let np = b.nrows();
        if k.ncols() != nv || b.ncols() != nv || mean.len() != np {
            return Err(Error::Config(format!(
                "inconsistent saddle blocks: K {}x{}, B {}x{}, mean {}",
                k.nrows(),
                k.ncols(),
                b.nrows(),
                b.ncols(),
                mean.len()
            )));
        }
        if mean.iter().all(|&m| m == 0.0) {
            return Err(Error::Config(
                "mean-constraint row is identically zero".into(),
            ));
        }
        let bt = b.transpose();
        let n = nv + np + 1;
        let mut triplets: Vec<(usize, usize, f64)> =
            Vec::with_capacity(k.nnz() + 2 * b.nnz() + 3 * np);
        for i in 0..nv {
            let (cols, vals) = k.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (i, c, v)));
            let (cols, vals) = bt.row(i);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (i, nv + c, v)));
        }
        // explicit zeros on the structural pattern of B B^T give ILU(0) room
        // to build a Schur-complement approximation in the pressure block
        let mut marker = vec![usize::MAX; np];
        for q in 0..np {
            let (cols, vals) = b.row(q);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (nv + q, c, v)));
            for &v in cols {
                for &q2 in bt.row(v).0 {
                    if marker[q2] != q {
                        marker[q2] = q;
                        triplets.push((nv + q, nv + q2, 0.0));
                    }
                }
            }
            if marker[q] != q {
                triplets.push((nv + q, nv + q, 0.0));
            }
            triplets.push((nv + q, n - 1, mean[q]));
            triplets.push((n - 1, nv + q, mean[q]));
        }
        triplets.push((n - 1, n - 1, 0.0));
        let full = CsrMatrix::from_triplets(n, n, &triplets);
        Ok(Self {
            full,
            k_row_ptr: k.row_ptr().to_vec(),
            k_col_idx: k.col_idx().to_vec(),
            mean: mean.to_vec(),
            nv,
            np,
            precond: Preconditioning::default(),
            lu: None,
            lu_stale: false,
            factorizations: 0,
        })
    }

    pub fn with_preconditioning(mut self, precond: Preconditioning) -> Self {
        self.precond = precond;
        self
    }

    /// Number of sparse LU factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    fn refresh_lu(&mut self) -> Result<()> {
        match &mut self.lu {
            Some(lu) => lu.refactor(&self.full)?,
            None => self.lu = Some(SparseLu::new(&self.full)?),
        }
        self.factorizations += 1;
        self.lu_stale = false;
        Ok(())
    }

    fn run_gmres(
        &mut self,
        rhs: &[f64],
        x0: Option<&[f64]>,
        cfg: &GmresConfig,
    ) -> Result<GmresOutcome> {
        match self.precond {
            Preconditioning::Ilu0 => {
                let ilu = Ilu0::new(&self.full)?;
                gmres(&self.full, rhs, x0, &ilu, cfg).into_result()
            }
            Preconditioning::LaggedLu { refresh_iters } => {
                let fresh = self.lu.is_none() || self.lu_stale;
                if fresh {
                    self.refresh_lu()?;
                }
                let mut out = gmres(&self.full, rhs, x0, self.lu.as_ref().unwrap(), cfg);
                if !out.converged && !fresh {
                    self.refresh_lu()?;
                    out = gmres(&self.full, rhs, x0, self.lu.as_ref().unwrap(), cfg);
                }
                self.lu_stale = out.iterations > refresh_iters;
                out.into_result()
            }
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.full
    }

    pub fn velocity_dofs(&self) -> usize {
        self.nv
    }

    pub fn pressure_dofs(&self) -> usize {
        self.np
    }

    /// Overwrites the velocity block with `k`, which must have the pattern
    /// the matrix was assembled with.
    pub fn set_velocity_block(&mut self, k: &CsrMatrix) -> Result<()> {
        if k.row_ptr() != self.k_row_ptr.as_slice() || k.col_idx() != self.k_col_idx.as_slice() {
            return Err(Error::Config("velocity block pattern changed".into()));
        }
        let start: Vec<usize> = self.full.row_ptr()[..self.nv].to_vec();
        let vals = self.full.values_mut();
        for i in 0..self.nv {
            let (ks, ke) = (k.row_ptr()[i], k.row_ptr()[i + 1]);
            vals[start[i]..start[i] + (ke - ks)].copy_from_slice(&k.values()[ks..ke]);
        }
        Ok(())
    }

    pub fn solve(
        &mut self,
        rhs_v: &[f64],
        rhs_p: &[f64],
        guess: Option<(&[f64], &[f64])>,
        cfg: &GmresConfig,
    ) -> Result<SaddleSolution> {
        let (nv, np) = (self.nv, self.np);
        if rhs_v.len() != nv || rhs_p.len() != np {
            return Err(Error::Config(
                "right-hand side does not match the saddle system".into(),
            ));
        }
        let mut rhs = Vec::with_capacity(nv + np + 1);
        rhs.extend_from_slice(rhs_v);
        rhs.extend_from_slice(rhs_p);
        rhs.push(0.0);
        let x0 = guess.map(|(u, p)| {
            let mut x = Vec::with_capacity(nv + np + 1);
            x.extend_from_slice(u);
            x.extend_from_slice(p);
            x.push(0.0);
            x
        });
        let out = self.run_gmres(&rhs, x0.as_deref(), cfg)?;
        let u = out.x[..nv].to_vec();
        let mut p = out.x[nv..nv + np].to_vec();
        // Constant pressures lie in the kernel of B^T, so removing the mean
        // changes neither row block; it only cleans up the solver tolerance.
        let total: f64 = self.mean.iter().sum();
        let shift = super::dot(&self.mean, &p) / total;
        p.iter_mut().for_each(|v| *v -= shift);
        Ok(SaddleSolution {
            u,
            p,
            multiplier: out.x[nv + np],
            iterations: out.iterations,
            residual: out.residual,
            history: out.history,
        })
    }
}

/// One-shot solve of a block system.
pub fn solve_saddle(
    sys: &BlockSaddleSystem,
    cfg: &GmresConfig,
    guess: Option<(&[f64], &[f64])>,
) -> Result<SaddleSolution> {
    SaddleMatrix::assemble(&sys.k, &sys.b, &sys.mean)?.solve(&sys.rhs_v, &sys.rhs_p, guess, cfg)
}

/// One-shot solve with an explicit preconditioner choice.
pub fn solve_saddle_with(
    sys: &BlockSaddleSystem,
    cfg: &GmresConfig,
    precond: Preconditioning,
) -> Result<SaddleSolution> {
    SaddleMatrix::assemble(&sys.k, &sys.b, &sys.mean)?
        .with_preconditioning(precond)
        .solve(&sys.rhs_v, &sys.rhs_p, None, cfg)
}

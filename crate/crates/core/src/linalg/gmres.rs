//! Restarted GMRES with right preconditioning, modified Gram-Schmidt and
//! Givens rotations. Right preconditioning keeps the minimized residual equal
//! to the true residual `b - A x`, which is recomputed at every restart.

use super::{dot, norm2, LinearOperator, Preconditioner};
use crate::Error;

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    /// Relative tolerance on `||b - A x|| / ||b||`.
    pub tol: f64,
    /// Krylov dimension per cycle.
    pub restart: usize,
    /// Total Arnoldi steps across all cycles.
    pub max_iters: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 200,
            max_iters: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    /// Final (or best available) iterate.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual of `x`.
    pub residual: f64,
    /// True relative residual at the start of each cycle and at exit.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl GmresOutcome {
    pub fn into_result(self) -> crate::Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
                residual: self.residual,
                history: self.history,
            })
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

pub fn gmres<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: &M,
    cfg: &GmresConfig,
) -> GmresOutcome {
    let n = a.dim();
    assert_eq!(b.len(), n, "right-hand side length mismatch");
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
            converged: true,
        };
    }
    let m = cfg.restart.max(1);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn, mut g) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut iterations = 0;
    let mut history = Vec::new();

    loop {
        a.apply(&x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let beta = norm2(&r);
        let rel = beta / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            return GmresOutcome {
                x,
                iterations,
                residual: rel,
                history,
                converged: false,
            };
        }
        if rel <= cfg.tol {
            return GmresOutcome {
                x,
                iterations,
                residual: rel,
                history,
                converged: true,
            };
        }
        if iterations >= cfg.max_iters {
            return GmresOutcome {
                x,
                iterations,
                residual: rel,
                history,
                converged: false,
            };
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < cfg.max_iters {
            precond.apply(&basis[k], &mut z);
            a.apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                h[i][k] = hik;
                w.iter_mut().zip(v).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hnext = norm2(&w);
            h[k + 1][k] = hnext;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            iterations += 1;
            k += 1;
            // happy breakdown: the Krylov space is invariant
            if hnext <= f64::EPSILON * beta || g[k].abs() <= cfg.tol * bnorm {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // back substitution for the k x k upper-triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] != 0.0 {
                (g[i] - s) / h[i][i]
            } else {
                0.0
            };
        }
        w.iter_mut().for_each(|v| *v = 0.0);
        for (yi, v) in y.iter().zip(&basis) {
            w.iter_mut().zip(v).for_each(|(wj, vj)| *wj += yi * vj);
        }
        precond.apply(&w, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
}

use super::{CsrMatrix, Preconditioner};
use crate::{Error, Result};

/// Incomplete LU factorization restricted to the stored pattern of `A`.
///
/// `L` (unit lower) and `U` share one value array laid out on `A`'s pattern.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
    shifted_pivots: usize,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Config("ILU(0) needs a square matrix".into()));
        }
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            match a.position(i, i) {
                Some(p) => diag.push(p),
                None => {
                    return Err(Error::Config(format!(
                        "row {i} has no diagonal entry in its pattern (structurally singular)"
                    )))
                }
            }
        }
        let shift = 1e-12 * a.norm_inf().max(f64::MIN_POSITIVE);
        let row_ptr = a.row_ptr().to_vec();
        let cols = a.col_idx().to_vec();
        let mut vals = a.values().to_vec();
        let mut shifted_pivots = 0;
        // marker[c] = storage index of column c in the current row
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                marker[cols[p]] = p;
            }
            for p in start..end {
                let k = cols[p];
                if k >= i {
                    break;
                }
                let lik = vals[p] / vals[diag[k]];
                vals[p] = lik;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let m = marker[cols[q]];
                    if m != usize::MAX {
                        vals[m] -= lik * vals[q];
                    }
                }
            }
            let d = &mut vals[diag[i]];
            if d.abs() < shift {
                *d = if *d < 0.0 { -shift } else { shift };
                shifted_pivots += 1;
            }
            for p in start..end {
                marker[cols[p]] = usize::MAX;
            }
        }
        let mut lu = a.clone();
        lu.values_mut().copy_from_slice(&vals);
        Ok(Self {
            lu,
            diag,
            shifted_pivots,
        })
    }

    /// Number of pivots that had to be replaced by the diagonal shift.
    pub fn shifted_pivots(&self) -> usize {
        self.shifted_pivots
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        let (rp, ci, v) = (self.lu.row_ptr(), self.lu.col_idx(), self.lu.values());
        for i in 0..n {
            let mut s = r[i];
            for p in rp[i]..self.diag[i] {
                s -= v[p] * z[ci[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..rp[i + 1] {
                s -= v[p] * z[ci[p]];
            }
            z[i] = s / v[self.diag[i]];
        }
    }
}

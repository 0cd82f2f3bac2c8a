//! Left-looking threshold incomplete Cholesky factorization.

use super::Preconditioner;
use crate::assembly::CsrMatrix;
use crate::error::SolverError;

/// `L L^T ~ A + shift diag(A)` with `L` stored by columns, diagonal first.
#[derive(Clone, Debug)]
pub struct IncompleteCholesky {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    /// Entries with `|l_ij| < droptol * ||A(j.., j)||_1` are dropped (the
    /// diagonal is always kept). `droptol = 0` gives the exact factor.
    pub fn new(a: &CsrMatrix, droptol: f64, shift: f64) -> Result<Self, SolverError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SolverError::Dimension { expected: n, found: a.ncols() });
        }
        // A is symmetric, so row j of the CSR storage is column j.
        let col_norm: Vec<f64> = (0..n)
            .map(|j| {
                let (c, v) = a.row(j);
                c.iter().zip(v).filter(|(&i, _)| i >= j).map(|(_, x)| x.abs()).sum()
            })
            .collect();

        let mut col_ptr = vec![0usize];
        let mut row_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        // Columns k < j whose next unused row entry is row j.
        let mut head: Vec<Vec<usize>> = vec![Vec::new(); n];
        // Position of that next entry inside column k.
        let mut next_pos = vec![0usize; n];

        let mut work = vec![0.0; n];
        let mut used = vec![false; n];
        let mut pattern: Vec<usize> = Vec::new();

        for j in 0..n {
            pattern.clear();
            let (cols, vals) = a.row(j);
            for (&i, &v) in cols.iter().zip(vals) {
                if i >= j {
                    work[i] += if i == j { v * (1.0 + shift) } else { v };
                    if !used[i] {
                        used[i] = true;
                        pattern.push(i);
                    }
                }
            }
            if !used[j] {
                used[j] = true;
                pattern.push(j);
            }
            let pending = std::mem::take(&mut head[j]);
            for &k in &pending {
                let start = next_pos[k];
                let end = col_ptr[k + 1];
                let ljk = values[start];
                for p in start..end {
                    let i = row_idx[p];
                    work[i] -= values[p] * ljk;
                    if !used[i] {
                        used[i] = true;
                        pattern.push(i);
                    }
                }
                if start + 1 < end {
                    next_pos[k] = start + 1;
                    head[row_idx[start + 1]].push(k);
                }
            }

            let pivot = work[j];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(SolverError::PivotBreakdown { column: j, pivot });
            }
            let d = pivot.sqrt();
            pattern.sort_unstable();
            let col_start = values.len();
            row_idx.push(j);
            values.push(d);
            for &i in &pattern {
                if i > j {
                    let l = work[i] / d;
                    if l.abs() >= droptol * col_norm[j] && l != 0.0 {
                        row_idx.push(i);
                        values.push(l);
                    }
                }
                work[i] = 0.0;
                used[i] = false;
            }
            col_ptr.push(values.len());
            if values.len() > col_start + 1 {
                next_pos[j] = col_start + 1;
                head[row_idx[col_start + 1]].push(j);
            }
        }
        Ok(Self { n, col_ptr, row_idx, values })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Dense copy of `L` (row-major), for tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut l = vec![vec![0.0; self.n]; self.n];
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                l[self.row_idx[p]][j] = self.values[p];
            }
        }
        l
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        for j in 0..self.n {
            let s = self.col_ptr[j];
            z[j] /= self.values[s];
            let zj = z[j];
            for p in s + 1..self.col_ptr[j + 1] {
                z[self.row_idx[p]] -= self.values[p] * zj;
            }
        }
        for j in (0..self.n).rev() {
            let s = self.col_ptr[j];
            let mut acc = z[j];
            for p in s + 1..self.col_ptr[j + 1] {
                acc -= self.values[p] * z[self.row_idx[p]];
            }
            z[j] = acc / self.values[s];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..i {
                if rng.random::<f64>() < 0.2 {
                    let v = rng.random_range(-1.0..1.0);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
        }
        for i in 0..n {
            a[i][i] = a[i].iter().map(|v: &f64| v.abs()).sum::<f64>() + 1.0;
        }
        a
    }

    #[test]
    fn no_drop_gives_exact_factor() {
        let n = 50;
        let a = random_spd(n, 3);
        let shift = 0.1;
        let ic = IncompleteCholesky::new(&CsrMatrix::from_dense(&a), 0.0, shift).unwrap();
        let l = ic.to_dense();
        let mut diff = 0.0;
        let mut norm = 0.0;
        for i in 0..n {
            for j in 0..n {
                let llt: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
                let target = if i == j { a[i][j] * (1.0 + shift) } else { a[i][j] };
                diff += (llt - target).powi(2);
                norm += a[i][j] * a[i][j];
            }
        }
        assert!(diff.sqrt() <= 1e-10 * norm.sqrt());
    }

    #[test]
    fn diagonal_matrix() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 0.0], vec![0.0, 9.0]]);
        let ic = IncompleteCholesky::new(&a, 1e-4, 0.5).unwrap();
        let l = ic.to_dense();
        assert!((l[0][0] - 6f64.sqrt()).abs() < 1e-15);
        assert!((l[1][1] - 13.5f64.sqrt()).abs() < 1e-15);
        let mut z = vec![0.0; 2];
        ic.apply(&[6.0, 13.5], &mut z);
        assert!((z[0] - 1.0).abs() < 1e-15 && (z[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn breakdown_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(IncompleteCholesky::new(&a, 0.0, 0.0), Err(SolverError::PivotBreakdown { column: 1, .. })));
    }

    #[test]
    fn dropping_thins_the_factor() {
        let a = CsrMatrix::from_dense(&random_spd(80, 9));
        let full = IncompleteCholesky::new(&a, 0.0, 0.0).unwrap();
        let thin = IncompleteCholesky::new(&a, 0.05, 0.0).unwrap();
        assert!(thin.nnz() < full.nnz());
    }
}

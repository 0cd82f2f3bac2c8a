//! Compressed sparse row storage and Matrix Market export.

use std::fmt::Write as _;

use crate::exec::Execution;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries; column indices within a row end up sorted.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            order.clear();
            order.extend(counts[i]..counts[i + 1]);
            order.sort_by_key(|&k| cols[k]);
            for &k in &order {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == cols[k] {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let trip: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, &v)| (i, j, v)))
            .collect();
        Self::from_triplets(n, m, &trip)
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y, Execution::Sequential);
        y
    }

    pub fn matvec_with(&self, x: &[f64], exec: Execution) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y, exec);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64], exec: Execution) {
        assert_eq!(x.len(), self.ncols);
        exec.for_each_mut(y, |i, yi| {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        });
    }

    /// `max |A_ij - A_ji| / max |A_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
                scale = scale.max(a.abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                row[j] = a;
            }
        }
        d
    }

    /// Rows and columns selected by `keep` (new index per old index).
    pub fn submatrix(&self, keep: &[Option<usize>], n: usize) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let Some(ni) = keep[i] else { continue };
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if let Some(nj) = keep[j] {
                    trip.push((ni, nj, a));
                }
            }
        }
        Self::from_triplets(n, n, &trip)
    }

    /// Matrix Market coordinate format; symmetric matrices store the lower
    /// triangle only.
    pub fn to_matrix_market(&self, symmetric: bool) -> String {
        let mut s = String::new();
        let kind = if symmetric { "symmetric" } else { "general" };
        writeln!(s, "%%MatrixMarket matrix coordinate real {kind}").unwrap();
        let entries: Vec<(usize, usize, f64)> = (0..self.nrows)
            .flat_map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(move |(&j, &a)| (i, j, a)).collect::<Vec<_>>()
            })
            .filter(|&(i, j, _)| !symmetric || j <= i)
            .collect();
        writeln!(s, "{} {} {}", self.nrows, self.ncols, entries.len()).unwrap();
        for (i, j, a) in entries {
            writeln!(s, "{} {} {:.17e}", i + 1, j + 1, a).unwrap();
        }
        s
    }
}

pub fn vector_to_matrix_market(v: &[f64]) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    writeln!(s, "{} 1", v.len()).unwrap();
    for x in v {
        writeln!(s, "{x:.17e}").unwrap();
    }
    s
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sqrt(sum w_i a_i^2)`.
pub fn weighted_norm(a: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.row(0).0, &[0, 2]);
        assert_eq!(a.get(0, 2), 4.0);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]), vec![14.0, -2.0]);
    }

    #[test]
    fn matrix_market_symmetric_lower_triangle() {
        let a = CsrMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let mm = a.to_matrix_market(true);
        let lines: Vec<&str> = mm.lines().collect();
        assert_eq!(lines[1], "2 2 3");
        assert!(lines[3].starts_with("2 1 -1.0"));
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn parallel_and_sequential_matvec_agree() {
        let n = 200;
        let trip: Vec<_> = (0..n)
            .flat_map(|i| [(i, i, 4.0 + i as f64), (i, (i * 7 + 3) % n, 0.5), ((i * 7 + 3) % n, i, 0.5)])
            .collect();
        let a = CsrMatrix::from_triplets(n, n, &trip);
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut y1 = vec![0.0; n];
        let mut y2 = vec![0.0; n];
        a.matvec_into(&x, &mut y1, Execution::Sequential);
        a.matvec_into(&x, &mut y2, Execution::Parallel);
        assert_eq!(y1, y2);
    }
}

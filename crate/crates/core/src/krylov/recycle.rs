use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::pcg::{axpy, Observer, PcgOptions, Recorder, StopReason};
use super::{IterationTrace, Preconditioner};
use crate::assembly::sparse::{dot, norm2};
use crate::assembly::CsrMatrix;
use crate::error::SolverError;
use crate::exec::Execution;

/// Orthonormal deflation basis `U` (n x k, k <= m) together with `A U`.
#[derive(Clone, Debug)]
pub struct RecycleSpace {
    u: DMatrix<f64>,
    au: DMatrix<f64>,
    pub m: usize,
    pub update_period: usize,
}

impl RecycleSpace {
    pub fn empty(n: usize, m: usize, update_period: usize) -> Self {
        Self { u: DMatrix::zeros(n, 0), au: DMatrix::zeros(n, 0), m, update_period: update_period.max(1) }
    }

    /// Orthonormalizes `basis` and caches `A U`.
    pub fn from_basis(
        a: &CsrMatrix,
        basis: &DMatrix<f64>,
        m: usize,
        update_period: usize,
        exec: Execution,
    ) -> Result<Self, SolverError> {
        let n = a.nrows();
        if basis.nrows() != n {
            return Err(SolverError::Dimension { expected: n, found: basis.nrows() });
        }
        let (u, _) = orthonormalize(basis.clone())?;
        let mut au = DMatrix::zeros(n, u.ncols());
        for j in 0..u.ncols() {
            let col: Vec<f64> = u.column(j).iter().copied().collect();
            let y = a.matvec_with(&col, exec);
            au.column_mut(j).copy_from_slice(&y);
        }
        Ok(Self { u, au, m, update_period: update_period.max(1) })
    }

    pub fn dim(&self) -> usize {
        self.u.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn a_basis(&self) -> &DMatrix<f64> {
        &self.au
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.u.tr_mul(&self.u);
        let k = g.nrows();
        (g - DMatrix::identity(k, k)).amax()
    }
}

/// Thin QR; returns `Q` and `R`, erroring when a column is numerically dependent.
fn orthonormalize(v: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), SolverError> {
    if v.ncols() == 0 {
        return Ok((v, DMatrix::zeros(0, 0)));
    }
    let qr = v.qr();
    let r = qr.r();
    let big = r.diagonal().amax();
    if !(big > 0.0) || r.diagonal().iter().any(|d| d.abs() <= 1e-12 * big) {
        return Err(SolverError::RankDeficient);
    }
    Ok((qr.q(), r))
}

fn hcat(n: usize, left: &DMatrix<f64>, right: &[f64]) -> DMatrix<f64> {
    let kr = right.len() / n;
    let mut z = DMatrix::zeros(n, left.ncols() + kr);
    z.columns_mut(0, left.ncols()).copy_from(left);
    z.columns_mut(left.ncols(), kr).copy_from(&DMatrix::from_column_slice(n, kr, right));
    z
}

struct Builder {
    n: usize,
    m: usize,
    u: DMatrix<f64>,
    au: DMatrix<f64>,
    /// `M^{-1} A U`, carried along so refreshes need no extra preconditioner solves.
    mau: DMatrix<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    map: Vec<f64>,
}

impl Builder {
    fn window(&self) -> usize {
        self.p.len() / self.n
    }

    fn push(&mut self, p: &[f64], ap: &[f64], map: &[f64]) {
        self.p.extend_from_slice(p);
        self.ap.extend_from_slice(ap);
        self.map.extend_from_slice(map);
    }

    /// Harmonic Ritz extraction on `Z = [U, P]` for `M^{-1} A`:
    /// `(AZ)^T M^{-1} (AZ) y = theta (Z^T A Z) y`, keeping the `m` smallest `theta`.
    fn refresh(&mut self) -> Result<(), SolverError> {
        if self.window() == 0 {
            return Ok(());
        }
        let z = hcat(self.n, &self.u, &self.p);
        let az = hcat(self.n, &self.au, &self.ap);
        let maz = hcat(self.n, &self.mau, &self.map);
        self.p.clear();
        self.ap.clear();
        self.map.clear();

        let f = z.tr_mul(&az);
        let f = (&f + f.transpose()) * 0.5;
        let g = az.tr_mul(&maz);
        let g = (&g + g.transpose()) * 0.5;

        let fe = SymmetricEigen::new(f);
        let lmax = fe.eigenvalues.amax();
        let keep: Vec<usize> =
            (0..fe.eigenvalues.len()).filter(|&i| fe.eigenvalues[i] > 1e-12 * lmax).collect();
        if keep.is_empty() {
            return Ok(());
        }
        let mut t = DMatrix::zeros(z.ncols(), keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = fe.eigenvalues[i].sqrt().recip();
            t.column_mut(c).copy_from(&(fe.eigenvectors.column(i) * s));
        }
        let gt = t.tr_mul(&g) * &t;
        let gt = (&gt + gt.transpose()) * 0.5;
        let ge = SymmetricEigen::new(gt);
        let mut order: Vec<usize> = (0..ge.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| ge.eigenvalues[a].total_cmp(&ge.eigenvalues[b]));
        let k = self.m.min(order.len());
        let mut w = DMatrix::zeros(order.len(), k);
        for (c, &i) in order.iter().take(k).enumerate() {
            w.column_mut(c).copy_from(&ge.eigenvectors.column(i));
        }
        let y = t * w;

        let (q, r) = orthonormalize(&z * &y)?;
        let rinv_t = |b: DMatrix<f64>| -> DMatrix<f64> {
            // B R^{-1} = (R^{-T} B^T)^T
            let x = r.transpose().solve_lower_triangular(&b.transpose()).expect("nonsingular R");
            x.transpose()
        };
        self.au = rinv_t(&az * &y);
        self.mau = rinv_t(&maz * &y);
        self.u = q;
        Ok(())
    }
}

/// Deflated PCG with the current recycle basis `W = U`, held fixed during the
/// solve. The initial guess is corrected by `W E^{-1} W^T r_0` with `E = W^T A W`
/// and every direction is A-orthogonalized against `span(W)`. Meanwhile a new
/// basis is accumulated and refreshed every `update_period` iterations; it
/// replaces `recycle` when the solve ends.
pub fn recycling_pcg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    m: &dyn Preconditioner,
    recycle: &mut RecycleSpace,
    observer: &mut dyn Observer,
    opts: &PcgOptions,
) -> Result<IterationTrace, SolverError> {
    let n = b.len();
    if a.nrows() != n {
        return Err(SolverError::Dimension { expected: a.nrows(), found: n });
    }
    if recycle.u.nrows() != n {
        return Err(SolverError::Dimension { expected: n, found: recycle.u.nrows() });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let w = recycle.u.clone();
    let aw = recycle.au.clone();
    let kw = w.ncols();
    let e_chol = if kw > 0 {
        let e = w.tr_mul(&aw);
        let e = (&e + e.transpose()) * 0.5;
        Some(e.cholesky().ok_or(SolverError::RankDeficient)?)
    } else {
        None
    };
    // v <- v - W E^{-1} (AW)^T v
    let project = |v: &mut [f64]| {
        if let Some(ch) = &e_chol {
            let c = ch.solve(&aw.tr_mul(&DVector::from_column_slice(v)));
            let wc = &w * c;
            for (vi, d) in v.iter_mut().zip(wc.iter()) {
                *vi -= d;
            }
        }
    };

    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut r = a.matvec_with(&x, opts.exec);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    // x <- x + W c, r <- r - A W c with c = E^{-1} W^T r. In exact arithmetic
    // this is needed only at the start; repeating it every iteration stops the
    // rounding-level W-component of r, which the deflated directions cannot
    // reduce, from driving the iteration unstable once the rest has converged.
    let correct = |x: &mut [f64], r: &mut [f64]| {
        if let Some(ch) = &e_chol {
            let c = ch.solve(&w.tr_mul(&DVector::from_column_slice(r)));
            axpy(x, 1.0, (&w * &c).as_slice());
            axpy(r, -1.0, (&aw * &c).as_slice());
        }
    };
    correct(&mut x, &mut r);
    correct(&mut x, &mut r);

    let mut builder = (recycle.m > 0).then(|| {
        let mut mau = DMatrix::zeros(n, kw);
        let mut tmp = vec![0.0; n];
        for j in 0..kw {
            let col: Vec<f64> = aw.column(j).iter().copied().collect();
            m.apply(&col, &mut tmp);
            mau.column_mut(j).copy_from_slice(&tmp);
        }
        Builder { n, m: recycle.m, u: w.clone(), au: aw.clone(), mau, p: Vec::new(), ap: Vec::new(), map: Vec::new() }
    });

    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    project(&mut p);
    let mut rz = dot(&r, &z);
    let r0 = norm2(&r);
    let mut q = vec![0.0; n];
    let mut z_new = vec![0.0; n];
    let mut mq = vec![0.0; n];

    let mut rec = Recorder::new(&x, opts.record_iterates);
    rec.push(&x, r0, None);
    let mut stop = if observer.observe(&rec.row(&x, &r)) {
        Some(StopReason::Observer)
    } else if r0 == 0.0 {
        Some(StopReason::ExactSolution)
    } else {
        None
    };
    let mut it = 0;
    while stop.is_none() && it < opts.max_iter {
        it += 1;
        a.matvec_into(&p, &mut q, opts.exec);
        let pap = dot(&p, &q);
        if !(pap > 0.0) {
            return Err(if pap.is_finite() { SolverError::Indefinite(pap) } else { SolverError::NonFinite });
        }
        let gamma = rz / pap;
        axpy(&mut x, gamma, &p);
        axpy(&mut r, -gamma, &q);
        correct(&mut x, &mut r);
        m.apply(&r, &mut z_new);
        let res = norm2(&r);
        rec.push(&x, res, Some((gamma, pap)));
        if let Some(bd) = &mut builder {
            for ((mi, zo), zn) in mq.iter_mut().zip(&z).zip(&z_new) {
                *mi = (zo - zn) / gamma;
            }
            bd.push(&p, &q, &mq);
        }
        if observer.observe(&rec.row(&x, &r)) {
            stop = Some(StopReason::Observer);
        } else if res == 0.0 {
            stop = Some(StopReason::ExactSolution);
        } else if res <= opts.hard_floor * r0 {
            stop = Some(StopReason::HardFloor);
        }
        if let Some(bd) = &mut builder {
            if bd.window() >= recycle.update_period {
                bd.refresh()?;
            }
        }
        if stop.is_some() {
            break;
        }
        let rz_new = dot(&r, &z_new);
        let beta = rz_new / rz;
        rz = rz_new;
        std::mem::swap(&mut z, &mut z_new);
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        project(&mut p);
    }
    if let Some(mut bd) = builder {
        bd.refresh()?;
        recycle.u = bd.u;
        recycle.au = bd.au;
    }
    rec.trace.stop = stop.unwrap_or(StopReason::MaxIter);
    rec.trace.x = x;
    Ok(rec.trace)
}

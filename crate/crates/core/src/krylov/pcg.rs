use super::Preconditioner;
use crate::assembly::sparse::{dot, norm2};
use crate::assembly::CsrMatrix;
use crate::error::SolverError;
use crate::exec::Execution;

#[derive(Clone, Copy, Debug)]
pub struct PcgOptions {
    pub max_iter: usize,
    /// Stop once `||r_k|| <= hard_floor * ||r_0||`.
    pub hard_floor: f64,
    pub exec: Execution,
    /// Keep every iterate in the trace (memory heavy; for checks only).
    pub record_iterates: bool,
}

impl Default for PcgOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, hard_floor: 1e-14, exec: Execution::default(), record_iterates: false }
    }
}

/// State after iteration `k` handed to the observer.
#[derive(Debug)]
pub struct IterationRow<'a> {
    pub k: usize,
    pub x: &'a [f64],
    /// True residual `b - A x_k` (maintained by the recurrence).
    pub r: &'a [f64],
    pub res_norm: f64,
    /// `gamma_{k-1}` and `||p_{k-1}||_A^2` (zero at `k = 0`).
    pub gamma: f64,
    pub p_a_norm2: f64,
    /// Full history of squared increments `||x_{i+1} - x_i||_A^2`, `i < k`.
    pub increments: &'a [f64],
}

pub trait Observer {
    /// Return `true` to stop the iteration.
    fn observe(&mut self, row: &IterationRow<'_>) -> bool;
}

impl<F: FnMut(&IterationRow<'_>) -> bool> Observer for F {
    fn observe(&mut self, row: &IterationRow<'_>) -> bool {
        self(row)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Observer,
    MaxIter,
    HardFloor,
    ExactSolution,
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
    /// `||r_k||` for `k = 0..=iterations`.
    pub res_norms: Vec<f64>,
    /// `gamma_i` and `||p_i||_A^2` for `i < iterations`.
    pub gammas: Vec<f64>,
    pub p_a_norms2: Vec<f64>,
    /// `gamma_i^2 ||p_i||_A^2 = ||x_{i+1} - x_i||_A^2`.
    pub increments: Vec<f64>,
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl IterationTrace {
    pub fn eta_alg(&self, k: usize, d: usize) -> Option<f64> {
        if k + d > self.iterations {
            return None;
        }
        Some(self.increments[k..k + d].iter().sum::<f64>().sqrt())
    }
}

pub(crate) struct Recorder {
    pub trace: IterationTrace,
}

impl Recorder {
    pub fn new(x0: &[f64], record: bool) -> Self {
        Self {
            trace: IterationTrace {
                x: x0.to_vec(),
                iterations: 0,
                stop: StopReason::MaxIter,
                res_norms: Vec::new(),
                gammas: Vec::new(),
                p_a_norms2: Vec::new(),
                increments: Vec::new(),
                iterates: record.then(Vec::new),
            },
        }
    }

    pub fn push(&mut self, x: &[f64], res_norm: f64, step: Option<(f64, f64)>) {
        let t = &mut self.trace;
        if let Some((gamma, pap)) = step {
            t.gammas.push(gamma);
            t.p_a_norms2.push(pap);
            t.increments.push(gamma * gamma * pap);
            t.iterations += 1;
        }
        t.res_norms.push(res_norm);
        if let Some(it) = &mut t.iterates {
            it.push(x.to_vec());
        }
    }

    pub fn row<'a>(&'a self, x: &'a [f64], r: &'a [f64]) -> IterationRow<'a> {
        let t = &self.trace;
        IterationRow {
            k: t.iterations,
            x,
            r,
            res_norm: *t.res_norms.last().unwrap(),
            gamma: t.gammas.last().copied().unwrap_or(0.0),
            p_a_norm2: t.p_a_norms2.last().copied().unwrap_or(0.0),
            increments: &t.increments,
        }
    }
}

pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Preconditioned CG from `x0`. The observer sees `k = 0` and every
/// subsequent iterate.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    m: &dyn Preconditioner,
    observer: &mut dyn Observer,
    opts: &PcgOptions,
) -> Result<IterationTrace, SolverError> {
    let n = b.len();
    if a.nrows() != n {
        return Err(SolverError::Dimension { expected: a.nrows(), found: n });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut r = vec![0.0; n];
    a.matvec_into(&x, &mut r, opts.exec);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let r0 = norm2(&r);

    let mut rec = Recorder::new(&x, opts.record_iterates);
    rec.push(&x, r0, None);
    if observer.observe(&rec.row(&x, &r)) {
        rec.trace.stop = StopReason::Observer;
        rec.trace.x = x;
        return Ok(rec.trace);
    }
    if r0 == 0.0 {
        rec.trace.stop = StopReason::ExactSolution;
        rec.trace.x = x;
        return Ok(rec.trace);
    }
    for _ in 0..opts.max_iter {
        a.matvec_into(&p, &mut q, opts.exec);
        let pap = dot(&p, &q);
        if !(pap > 0.0) {
            if pap.is_finite() {
                return Err(SolverError::Indefinite(pap));
            }
            return Err(SolverError::NonFinite);
        }
        let gamma = rz / pap;
        axpy(&mut x, gamma, &p);
        axpy(&mut r, -gamma, &q);
        let res = norm2(&r);
        rec.push(&x, res, Some((gamma, pap)));
        if observer.observe(&rec.row(&x, &r)) {
            rec.trace.stop = StopReason::Observer;
            break;
        }
        if res == 0.0 {
            rec.trace.stop = StopReason::ExactSolution;
            break;
        }
        if res <= opts.hard_floor * r0 {
            rec.trace.stop = StopReason::HardFloor;
            break;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    rec.trace.x = x;
    Ok(rec.trace)
}

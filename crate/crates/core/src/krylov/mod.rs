//! Preconditioned conjugate gradients with per-iteration observation,
//! incomplete Cholesky preconditioning and deflated (recycling) CG.

mod ichol;
mod pcg;
mod recycle;

pub use ichol::IncompleteCholesky;
pub use pcg::{pcg, IterationRow, IterationTrace, Observer, PcgOptions, StopReason};
pub use recycle::{recycling_pcg, RecycleSpace};

/// `z = M^{-1} r` for a symmetric positive definite `M`.
pub trait Preconditioner: Send + Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Wraps a preconditioner as `P M^{-1} P` with `P` the Euclidean projection
/// onto vectors of zero mean. With `active` set, every search direction stays
/// orthogonal to the constants, which lets CG run on a consistent system whose
/// kernel is spanned by the constants.
#[derive(Clone, Debug)]
pub struct ConstantProjection<P> {
    pub inner: P,
    pub active: bool,
}

impl<P: Preconditioner> Preconditioner for ConstantProjection<P> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        if !self.active {
            return self.inner.apply(r, z);
        }
        let mut rp = r.to_vec();
        crate::assembly::remove_mean(&mut rp);
        self.inner.apply(&rp, z);
        crate::assembly::remove_mean(z);
    }
}

/// `sqrt(sum_{i=k}^{k+d-1} gamma_i^2 ||p_i||_A^2) = ||x_{k+d} - x_k||_A`, or
/// `None` while iteration `k + d` has not been reached.
pub fn eta_alg(trace: &IterationTrace, k: usize, d: usize) -> Option<f64> {
    trace.eta_alg(k, d)
}

//! Orthonormal Jacobi polynomials and the Koornwinder–Dubiner modal basis on
//! the reference triangle `(0,0), (1,0), (0,1)`.

/// `Γ(x)` for positive integer arguments, which is all the Jacobi
/// normalisation below ever needs.
fn gamma_int(x: f64) -> f64 {
    debug_assert!(x >= 1.0 && (x - x.round()).abs() < 1e-12);
    (1..x.round() as u64).fold(1.0, |acc, k| acc * k as f64)
}

/// Orthonormal Jacobi polynomial `P_n^{(alpha, beta)}(x)` on `[-1, 1]`.
pub fn jacobi(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let gamma0 = 2f64.powf(alpha + beta + 1.0) / (alpha + beta + 1.0) * gamma_int(alpha + 1.0)
        * gamma_int(beta + 1.0)
        / gamma_int(alpha + beta + 1.0);
    let p0 = 1.0 / gamma0.sqrt();
    if n == 0 {
        return p0;
    }
    let gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0;
    let p1 = ((alpha + beta + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return p1;
    }
    let mut a_old = 2.0 / (2.0 + alpha + beta)
        * ((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0)).sqrt();
    let (mut pm1, mut p) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + alpha + beta;
        let a_new = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + alpha + beta) * (i + 1.0 + alpha) * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let b_new = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
        let next = (-a_old * pm1 + (x - b_new) * p) / a_new;
        pm1 = p;
        p = next;
        a_old = a_new;
    }
    p
}

/// Derivative of [`jacobi`] with respect to `x`.
pub fn jacobi_derivative(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + alpha + beta + 1.0)).sqrt() * jacobi(x, alpha + 1.0, beta + 1.0, n - 1)
}

/// Legendre polynomial `P_n` (classical normalisation, `P_n(1) = 1`) and its
/// derivative.
pub fn legendre(x: f64, n: usize) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut pm1, mut p) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * p - k * pm1) / (k + 1.0);
        pm1 = p;
        p = next;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-14 {
        let s = if x > 0.0 { 1.0 } else { (-1f64).powi(n as i32 + 1) };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (pm1 - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

/// Legendre polynomial orthonormal on `[0, 1]`.
pub fn shifted_legendre_orthonormal(t: f64, n: usize) -> f64 {
    legendre(2.0 * t - 1.0, n).0 * ((2 * n + 1) as f64).sqrt()
}

/// Koornwinder–Dubiner orthonormal basis of `P_N` on the reference triangle,
/// ordered by total degree so that the first `dim(P_k)` modes span `P_k`.
#[derive(Clone, Debug)]
pub struct ModalBasis {
    degree: usize,
    modes: Vec<(usize, usize)>,
}

pub fn dim_p(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

impl ModalBasis {
    pub fn new(degree: usize) -> Self {
        let mut modes = Vec::with_capacity(dim_p(degree));
        for total in 0..=degree {
            for i in (0..=total).rev() {
                modes.push((i, total - i));
            }
        }
        Self { degree, modes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Mode values and reference gradients `(d/dxi, d/deta)` at `(xi, eta)`.
    pub fn eval(&self, xi: f64, eta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = 2.0 * xi - 1.0;
        let s = 2.0 * eta - 1.0;
        let a = if (1.0 - s).abs() > 1e-14 { 2.0 * (1.0 + r) / (1.0 - s) - 1.0 } else { -1.0 };
        let b = s;
        let n = self.modes.len();
        let (mut v, mut dx, mut dy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (m, &(i, j)) in self.modes.iter().enumerate() {
            let fi = i as f64;
            let fa = jacobi(a, 0.0, 0.0, i);
            let dfa = jacobi_derivative(a, 0.0, 0.0, i);
            let gb = jacobi(b, 2.0 * fi + 1.0, 0.0, j);
            let dgb = jacobi_derivative(b, 2.0 * fi + 1.0, 0.0, j);
            let half = 0.5 * (1.0 - b);
            v[m] = 2f64.sqrt() * fa * gb * (1.0 - b).powi(i as i32);

            let mut dr = dfa * gb;
            if i > 0 {
                dr *= half.powi(i as i32 - 1);
            }
            let mut ds = dfa * (gb * (0.5 * (1.0 + a)));
            if i > 0 {
                ds *= half.powi(i as i32 - 1);
            }
            let mut tmp = dgb * half.powi(i as i32);
            if i > 0 {
                tmp -= 0.5 * fi * gb * half.powi(i as i32 - 1);
            }
            ds += fa * tmp;
            let scale = 2f64.powf(fi + 0.5);
            // chain rule from (r, s) in [-1, 1]^2 to (xi, eta) in [0, 1]^2
            dx[m] = 2.0 * scale * dr;
            dy[m] = 2.0 * scale * ds;
        }
        (v, dx, dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe_basis::quadrature::TriangleRule;

    #[test]
    fn modal_basis_is_orthonormal() {
        let basis = ModalBasis::new(5);
        let rule = TriangleRule::with_exactness(10);
        let n = basis.len();
        let mut gram = vec![0.0; n * n];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let (v, _, _) = basis.eval(p[0], p[1]);
            for i in 0..n {
                for j in 0..n {
                    gram[i * n + j] += w * v[i] * v[j];
                }
            }
        }
        // Orthonormal on the [-1,1] triangle (area 2); ours has area 1/2.
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 0.25 } else { 0.0 };
                assert!((gram[i * n + j] - expect).abs() < 1e-12, "({i},{j}) {}", gram[i * n + j]);
            }
        }
    }

    #[test]
    fn modal_gradients_match_finite_differences() {
        let basis = ModalBasis::new(6);
        let (x, y, h) = (0.21, 0.37, 1e-6);
        let (_, dx, dy) = basis.eval(x, y);
        let (vp, _, _) = basis.eval(x + h, y);
        let (vm, _, _) = basis.eval(x - h, y);
        let (vq, _, _) = basis.eval(x, y + h);
        let (vn, _, _) = basis.eval(x, y - h);
        for m in 0..basis.len() {
            assert!(((vp[m] - vm[m]) / (2.0 * h) - dx[m]).abs() < 1e-6);
            assert!(((vq[m] - vn[m]) / (2.0 * h) - dy[m]).abs() < 1e-6);
        }
    }

    #[test]
    fn legendre_derivative_at_endpoints() {
        for n in 0..8 {
            let (p1, d1) = legendre(1.0, n);
            assert!((p1 - 1.0).abs() < 1e-14);
            assert!((d1 - (n * (n + 1)) as f64 / 2.0).abs() < 1e-12);
        }
    }
}

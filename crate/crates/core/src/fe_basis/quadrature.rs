//! Gauss rules on `[0, 1]` and collapsed (Duffy) Gauss rules on the reference
//! triangle. All weights are positive.

use super::poly::legendre;

#[derive(Clone, Debug)]
pub struct LineRule {
    /// Abscissae in `[0, 1]`, increasing.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(z, n);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(z, n);
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Gauss–Lobatto–Legendre nodes on `[-1, 1]` (`n + 1` points, endpoints
/// included), increasing.
pub fn gauss_lobatto(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![-1.0, 1.0];
    }
    let mut x: Vec<f64> = (0..=n)
        .map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for xi in x.iter_mut() {
            let (p, _) = legendre(*xi, n);
            let (pm1, _) = legendre(*xi, n - 1);
            let next = *xi - (*xi * p - pm1) / ((n + 1) as f64 * p);
            delta = delta.max((next - *xi).abs());
            *xi = next;
        }
        if delta < 1e-16 {
            break;
        }
    }
    x.reverse();
    x
}

impl LineRule {
    /// Gauss rule on `[0, 1]` exact for polynomials of degree `exactness`.
    pub fn with_exactness(exactness: usize) -> Self {
        let n = exactness / 2 + 1;
        let (x, w) = gauss_legendre(n);
        Self {
            points: x.iter().map(|z| 0.5 * (z + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl TriangleRule {
    /// Conical product rule on the reference triangle exact for total degree
    /// `exactness`. The collapse `(s, t) -> (s, (1 - s) t)` adds one degree in
    /// `s` through the Jacobian.
    pub fn with_exactness(exactness: usize) -> Self {
        let s_rule = LineRule::with_exactness(exactness + 1);
        let t_rule = LineRule::with_exactness(exactness);
        let mut points = Vec::with_capacity(s_rule.len() * t_rule.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (s, ws) in s_rule.points.iter().zip(&s_rule.weights) {
            for (t, wt) in t_rule.points.iter().zip(&t_rule.weights) {
                points.push([*s, (1.0 - s) * t]);
                weights.push(ws * wt * (1.0 - s));
            }
        }
        Self { points, weights, exactness }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).fold(1.0, |a, k| a * k as f64)
    }

    /// Closed form: ∫_T x^a y^b = a! b! / (a + b + 2)!.
    fn monomial_moment(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn triangle_rule_integrates_monomials_exactly() {
        for n in 1..=12usize {
            let p = 2 * n + 2;
            let rule = TriangleRule::with_exactness(p);
            assert!(rule.weights.iter().all(|w| *w > 0.0));
            let area: f64 = rule.weights.iter().sum();
            assert!((area - 0.5).abs() < 1e-15);
            for a in 0..=p as u32 {
                for b in 0..=(p as u32 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32))
                        .sum();
                    assert!((q - monomial_moment(a, b)).abs() < 1e-13, "N={n} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn edge_rule_integrates_odd_power() {
        for n in 1..=12usize {
            let rule = LineRule::with_exactness(2 * n + 1);
            let k = 2 * n as i32 + 1;
            let q: f64 = rule.points.iter().zip(&rule.weights).map(|(s, w)| w * s.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn lobatto_nodes_are_symmetric_and_include_endpoints() {
        for n in 1..=12 {
            let x = gauss_lobatto(n);
            assert_eq!(x.len(), n + 1);
            assert_eq!(x[0], -1.0);
            assert_eq!(x[n], 1.0);
            for i in 0..=n {
                assert!((x[i] + x[n - i]).abs() < 1e-14);
            }
        }
    }
}

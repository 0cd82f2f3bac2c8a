use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::assembly::{dense, ProblemSpec};
use crate::mesh::{unit_square_mesh, BoundaryTag, Mesh};

fn solve(p: &FemProblem) -> Vec<f64> {
    let a = dense(&p.system().a);
    let b = DVector::from_column_slice(&p.system().b);
    a.cholesky().unwrap().solve(&b).as_slice().to_vec()
}

fn linear_problem(n: usize, degree: usize) -> FemProblem {
    // u = 1 + 2x - y, Dirichlet on x = 0, Neumann elsewhere.
    let mesh = unit_square_mesh(n)
        .unwrap()
        .with_boundary(|p| if p[0] < 1e-12 { BoundaryTag::Dirichlet } else { BoundaryTag::Neumann });
    let spec = ProblemSpec::new(|_| 0.0)
        .with_dirichlet(|p| 1.0 + 2.0 * p[0] - p[1])
        .with_neumann(|_, n| 2.0 * n[0] - n[1]);
    FemProblem::new(mesh, degree, spec).unwrap()
}

fn random_x(p: &FemProblem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p.num_free()).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn patch_test_all_zero() {
    let p = linear_problem(3, 3);
    let x = solve(&p);
    let suite = EstimatorSuite::new(&p, EstimatorSet::ALL).unwrap();
    let s = suite.sample(&p, 0, &x).unwrap();
    for v in [s.eta_r, s.eta_mr, s.eta_bdm, s.eta_bdm_lb, s.eta_rf_w] {
        assert!(v.unwrap() < 1e-10, "{v:?}");
    }
}

#[test]
fn bdm_square_nonsingular_and_dual_route() {
    for n in 1..=4 {
        let p = linear_problem(2, n);
        let bdm = Bdm::precompute(&p, BdmMode::Verify).unwrap();
        assert_eq!(bdm.local_size(), (n + 1) * (n + 2));
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for (t, l) in bdm.locals.iter().enumerate() {
            assert_eq!(l.size(), Some((n + 1) * (n + 2)));
            for _ in 0..10 {
                let d: Vec<f64> = (0..bdm.data_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = l.rho_by_solve(&d).unwrap();
                let b = l.rho_by_lifting(&d).unwrap();
                assert!((&a - &b).amax() <= 1e-10 * a.amax(), "t={t}");
                let sys = l.system.as_ref().unwrap();
                let r = sys * &b;
                let off = r.len() - d.len();
                for i in 0..r.len() {
                    let want = if i < off { 0.0 } else { d[i - off] };
                    assert!((r[i] - want).abs() < 1e-9);
                }
            }
        }
    }
}

/// Gram matrix of the lifting built column by column from LU solves, then its
/// smallest eigenvalue by inverse iteration from a random start.
fn mu2_oracle(bdm: &Bdm, t: usize, rng: &mut ChaCha8Rng) -> f64 {
    let l = &bdm.locals[t];
    let np = bdm.degree() + 1;
    let cols: Vec<usize> = (0..bdm.data_len()).filter(|c| l.active[c / np]).collect();
    let k = cols.len();
    let rhos: Vec<DVector<f64>> = cols
        .iter()
        .map(|&c| {
            let mut d = vec![0.0; bdm.data_len()];
            d[c] = 1.0;
            l.rho_by_solve(&d).unwrap()
        })
        .collect();
    let g = DMatrix::from_fn(k, k, |i, j| {
        let s = &rhos[i] + &rhos[j];
        let dd = &rhos[i] - &rhos[j];
        0.25 * (bdm.energy(t, &s) - bdm.energy(t, &dd))
    });
    let lu = g.clone().lu();
    let mut v = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
    for _ in 0..200 {
        v = lu.solve(&v).unwrap();
        v /= v.norm();
    }
    v.dot(&(&g * &v))
}

#[test]
fn mu2_matches_inverse_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 2..=4 {
        let p = linear_problem(2, n);
        let bdm = Bdm::precompute(&p, BdmMode::Verify).unwrap();
        for t in 0..bdm.locals.len() {
            let m = bdm.locals[t].mu2;
            let o = mu2_oracle(&bdm, t, &mut rng);
            assert!(m >= 0.0);
            assert!((m - o).abs() <= 0.05 * o, "n={n} t={t} {m} {o}");
        }
    }
}

#[test]
fn mu2_scales_linearly_with_element_size() {
    let spec = || ProblemSpec::new(|_| 0.0);
    let tri = |s: f64| {
        Mesh::new(
            vec![[0.0, 0.0], [s, 0.0], [0.3 * s, 0.8 * s]],
            vec![[0, 1, 2]],
            None,
            &[([0, 1], BoundaryTag::Neumann), ([1, 2], BoundaryTag::Neumann), ([0, 2], BoundaryTag::Neumann)],
        )
        .unwrap()
    };
    let mu = |s: f64| {
        let p = FemProblem::new(tri(s), 3, spec()).unwrap();
        Bdm::precompute(&p, BdmMode::LowerBoundOnly).unwrap().locals[0].mu2
    };
    let (a, b) = (mu(1.0), mu(0.25));
    assert!((b / a - 0.25).abs() < 1e-8, "{}", b / a);
}

#[test]
fn lower_bound_below_bdm() {
    let p = linear_problem(3, 3);
    let suite = EstimatorSuite::new(&p, EstimatorSet::ALL).unwrap();
    for seed in 0..100 {
        let x = random_x(&p, seed);
        let s = suite.sample(&p, 0, &x).unwrap();
        let (lb, full) = (s.eta_bdm_lb.unwrap(), s.eta_bdm.unwrap());
        assert!(lb <= full * (1.0 + 1e-12), "{lb} {full}");
        assert!(s.res_w.unwrap() <= s.eta_rf_w.unwrap() * (1.0 + 1e-14));
    }
}

#[test]
fn eta_r_counts_interior_edges_once() {
    let p = linear_problem(2, 2);
    let x = random_x(&p, 3);
    let res = p.strong_residuals(&x);
    let e = eta_r(&p, &res);
    let d = p.disc();
    let mesh = d.mesh();
    let n = 2.0;
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let h = mesh.diameter(t);
        total += h * h / n / n * element_l2_sq(&p, &res, t);
    }
    for ed in 0..mesh.num_edges() {
        if d.edge_active(ed) {
            total += mesh.edge_length(ed) / n * edge_l2_sq(&p, &res, ed);
        }
    }
    assert!((e.global.powi(2) - total).abs() < 1e-10 * total);
}

#[test]
fn eta_r_single_element_quadratic() {
    // u_h = x^2 on the unit right triangle, f = 0, all Dirichlet: r_E = 2,
    // jumps vanish, so eta_R^2 = h^2 / N^2 * 4 |K| = 2 / 4 * 4 * 0.5.
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        None,
        &[([0, 1], BoundaryTag::Dirichlet), ([1, 2], BoundaryTag::Dirichlet), ([0, 2], BoundaryTag::Dirichlet)],
    )
    .unwrap();
    let p = FemProblem::new(mesh, 2, ProblemSpec::new(|_| 0.0).with_dirichlet(|q| q[0] * q[0])).unwrap();
    let x = vec![0.0; p.num_free()];
    let e = eta_r(&p, &p.strong_residuals(&x));
    assert!((e.global.powi(2) - 1.0).abs() < 1e-12, "{}", e.global);
}

#[test]
fn eta_mr_constant_residual_and_zero_mean() {
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        None,
        &[([0, 1], BoundaryTag::Dirichlet), ([1, 2], BoundaryTag::Dirichlet), ([0, 2], BoundaryTag::Dirichlet)],
    )
    .unwrap();
    let c = 3.0;
    let kappa = 4.0;
    let p = FemProblem::new(mesh.clone(), 2, ProblemSpec::new(move |_| c).with_kappa(0, kappa)).unwrap();
    let x = vec![0.0; p.num_free()];
    let got = eta_mr(&p, &p.strong_residuals(&x));
    let area: f64 = 1.0;
    let want = (area * area * c * c * area / kappa).sqrt();
    assert!((got - want).abs() < 1e-12);

    // zero-mean source: f = x - 2/3 on the same triangle has mean zero
    let p = FemProblem::new(mesh, 2, ProblemSpec::new(|q| q[0] - 2.0 / 3.0)).unwrap();
    let x = vec![0.0; p.num_free()];
    assert!(eta_mr(&p, &p.strong_residuals(&x)) < 1e-12);
}

#[test]
fn masks_partition_weighted_residual() {
    let mesh = crate::mesh::lshape_mesh();
    let spec = ProblemSpec::new(|_| 10.0).with_kappa(1, 1e6).with_kappa(2, 1e6).with_kappa(3, 1e6);
    let p = FemProblem::new(mesh, 2, spec).unwrap();
    let suite = EstimatorSuite::new(&p, EstimatorSet::ALL).unwrap();
    let x = random_x(&p, 5);
    let s = suite.sample(&p, 0, &x).unwrap();
    let sub = s.subdomains.unwrap();
    let sum: f64 = sub.iter().map(|q| q.res_w * q.res_w).sum();
    let rw = s.res_w.unwrap();
    assert!((sum - rw * rw).abs() <= 1e-12 * rw * rw);
    for q in sub {
        assert!(q.res_w <= q.eta_rf_w * (1.0 + 1e-14));
    }
}

#[test]
fn weighted_equals_plain_for_unit_kappa() {
    let p = linear_problem(3, 2);
    let x = random_x(&p, 8);
    let split = p.split_residual(&x);
    let w = p.weight_vector();
    assert!(w.iter().all(|&v| v == 1.0));
    let rf = eta_rf(&split, &w, None);
    let plain = crate::assembly::sparse::norm2(&split.volume) + crate::assembly::sparse::norm2(&split.edge);
    assert!((rf.eta_rf_w - plain).abs() < 1e-14 * plain);
}

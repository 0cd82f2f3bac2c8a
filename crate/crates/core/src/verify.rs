//! Fast self-checks of the core identities, run by `cgstop verify`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::sparse::norm2;
use crate::assembly::{CsrMatrix, FemProblem, ProblemSpec};
use crate::estimators::{Bdm, BdmMode, EstimatorSet, EstimatorSuite};
use crate::experiment::{build, tight_solve, ProblemKind};
use crate::krylov::{pcg, IncompleteCholesky, IterationRow, PcgOptions, Preconditioner};
use crate::mesh::{unit_square_mesh, BoundaryTag, Mesh};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn linear_patch(degree: usize) -> FemProblem {
    let mesh = unit_square_mesh(3)
        .expect("mesh")
        .with_boundary(|p| if p[1] < 1e-12 { BoundaryTag::Dirichlet } else { BoundaryTag::Neumann });
    let spec = ProblemSpec::new(|_| 0.0)
        .with_dirichlet(|p| 0.5 - p[0] + 3.0 * p[1])
        .with_neumann(|_, n| -n[0] + 3.0 * n[1]);
    FemProblem::new(mesh, degree, spec).expect("patch problem")
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn patch_test() -> Check {
    let p = linear_patch(3);
    let pc = crate::experiment::preconditioner(&p, 0.0, 0.0).expect("factor");
    let x = tight_solve(&p, &pc, 1000).expect("solve");
    let suite = EstimatorSuite::new(&p, EstimatorSet::ALL).expect("suite");
    let s = suite.sample(&p, 0, &x).expect("sample");
    let worst = [s.eta_r, s.eta_mr, s.eta_bdm, s.eta_bdm_lb, s.eta_rf_w].iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    check("patch test: estimators vanish", worst <= 1e-9, format!("max = {worst:.2e}"))
}

fn split_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for (n, deg) in [(2, 2), (3, 3), (4, 4)] {
        let p = build(ProblemKind::Test1, crate::experiment::base_mesh(ProblemKind::Test1, n, 1.0).expect("mesh"), deg, Default::default())
            .expect("problem");
        for _ in 0..5 {
            let x = random_vec(p.num_free(), &mut rng);
            let s = p.split_residual(&x);
            let d: Vec<f64> = (0..x.len()).map(|i| s.volume[i] + s.edge[i] - s.residual[i]).collect();
            worst = worst.max(norm2(&d) / norm2(&s.residual));
        }
    }
    check("residual split r = R + F", worst <= 1e-12, format!("max rel = {worst:.2e}"))
}

fn edge_quadrature() -> Check {
    let mesh = Mesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
        None,
        &[
            ([0, 1], BoundaryTag::Neumann),
            ([1, 2], BoundaryTag::Neumann),
            ([2, 3], BoundaryTag::Neumann),
            ([0, 3], BoundaryTag::Neumann),
        ],
    )
    .expect("mesh");
    let p = FemProblem::new(mesh, 3, ProblemSpec::new(|q| q[0] * q[1]).with_neumann(|q, n| q[0] * n[0])).expect("problem");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_vec(p.num_free(), &mut rng);
    let res = p.strong_residuals(&x);
    let split = p.split_from(&x, &res);
    let direct = p.edge_part_direct(&res);
    let d: Vec<f64> = direct.iter().zip(&split.edge).map(|(a, b)| a - b).collect();
    let rel = norm2(&d) / norm2(&split.edge);
    check("edge term by quadrature equals r - R", rel <= 1e-9, format!("rel = {rel:.2e}"))
}

fn bdm_dual_route() -> Check {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for deg in 2..=4 {
        let p = linear_patch(deg);
        let bdm = Bdm::precompute(&p, BdmMode::Verify).expect("bdm");
        for l in &bdm.locals {
            let d = random_vec(bdm.data_len(), &mut rng);
            let a = l.rho_by_solve(&d).expect("solve");
            let b = l.rho_by_lifting(&d).expect("lift");
            worst = worst.max((&a - &b).amax() / a.amax());
        }
    }
    check("BDM lifting equals local solve", worst <= 1e-10, format!("max rel = {worst:.2e}"))
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &g * g.transpose() + DMatrix::identity(n, n) * (n as f64 * 1e-3)
}

fn eta_alg_lower_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 80;
    let a = random_spd(n, &mut rng);
    let b = random_vec(n, &mut rng);
    let xs = a.clone().cholesky().expect("spd").solve(&DVector::from_column_slice(&b));
    let rows: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
    let csr = CsrMatrix::from_dense(&rows);
    let mut errs = Vec::new();
    let mut obs = |row: &IterationRow<'_>| {
        let e = &xs - DVector::from_column_slice(row.x);
        errs.push(e.dot(&(&a * &e)).sqrt());
        false
    };
    let opts = PcgOptions { max_iter: 400, hard_floor: 1e-13, ..Default::default() };
    let t = pcg(&csr, &b, None, &crate::krylov::Identity, &mut obs, &opts).expect("pcg");
    let mut worst = f64::NEG_INFINITY;
    for k in 0..t.iterations.saturating_sub(10) {
        worst = worst.max(t.eta_alg(k, 10).unwrap() - errs[k]);
    }
    check("eta_alg below A-norm error", worst <= 1e-8, format!("max excess = {worst:.2e}"))
}

fn ichol_spd() -> Check {
    let p = build(ProblemKind::Test1, crate::experiment::base_mesh(ProblemKind::Test1, 4, 1.0).expect("mesh"), 4, Default::default())
        .expect("problem");
    let pc = IncompleteCholesky::new(&p.system().a, 1e-4, 0.1).expect("factor");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min = f64::INFINITY;
    let mut z = vec![0.0; p.num_free()];
    for _ in 0..20 {
        let r = random_vec(p.num_free(), &mut rng);
        pc.apply(&r, &mut z);
        min = min.min(crate::assembly::sparse::dot(&r, &z));
    }
    check("incomplete Cholesky is SPD", min > 0.0, format!("min r^T M^-1 r = {min:.2e}"))
}

pub fn run_checks() -> Vec<Check> {
    vec![patch_test(), split_identity(), edge_quadrature(), bdm_dual_route(), eta_alg_lower_bound(), ichol_spd()]
}

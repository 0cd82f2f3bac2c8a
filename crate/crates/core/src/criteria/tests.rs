use super::*;
use crate::assembly::ProblemSpec;
use crate::estimators::{EstimatorSet, SubdomainPair};
use crate::krylov::{pcg, Identity, PcgOptions};
use crate::mesh::{unit_square_mesh, NodeClass};

fn sample(res_w: f64, eta: f64) -> EstimatorSample {
    EstimatorSample { res_w: Some(res_w), eta_rf_w: Some(eta), ..Default::default() }
}

#[test]
fn parse_and_display() {
    assert_eq!("C3".parse::<CriterionKind>().unwrap(), CriterionKind::C3);
    assert_eq!("c7:1e-8".parse::<CriterionKind>().unwrap(), CriterionKind::C7 { tol: 1e-8 });
    assert!("c8".parse::<CriterionKind>().is_err());
    assert!("c7:2".parse::<CriterionKind>().is_err());
    assert_eq!(CriterionKind::C7 { tol: 1e-8 }.to_string(), "C7:1e-8");
    assert!(CriterionConfig::new(CriterionKind::C1).with_tau(1.5).validate().is_err());
}

#[test]
fn c7_fires_at_first_crossing() {
    let cfg = CriterionConfig::new(CriterionKind::C7 { tol: 1e-8 });
    let at = |r: f64| evaluate(&cfg, &Inputs { res_norm: r, r0: 2.0, ..Default::default() });
    assert_eq!(at(2.0e-8 * 1.0000001), Decision::Hold);
    assert_eq!(at(2.0e-8), Decision::Fire);
}

#[test]
fn c5_tight_bound_never_fires() {
    let cfg = CriterionConfig::new(CriterionKind::C5);
    let s = sample(3.0, 3.0);
    assert_eq!(evaluate(&cfg, &Inputs { sample: Some(&s), ..Default::default() }), Decision::Hold);
    let s = sample(0.1, 3.0);
    assert_eq!(evaluate(&cfg, &Inputs { sample: Some(&s), ..Default::default() }), Decision::Fire);
}

#[test]
fn missing_data_holds() {
    for kind in [CriterionKind::C1, CriterionKind::C2, CriterionKind::C3, CriterionKind::C4, CriterionKind::C5, CriterionKind::C6] {
        let cfg = CriterionConfig::new(kind);
        assert_eq!(evaluate(&cfg, &Inputs { eta_alg: Some(0.0), ..Default::default() }), Decision::Hold);
    }
    let s = EstimatorSample { eta_r: Some(1.0), ..Default::default() };
    let cfg = CriterionConfig::new(CriterionKind::C1);
    assert_eq!(evaluate(&cfg, &Inputs { sample: Some(&s), ..Default::default() }), Decision::Hold);
    assert_eq!(evaluate(&cfg, &Inputs { eta_alg: Some(0.01), sample: Some(&s), ..Default::default() }), Decision::Fire);
}

#[test]
fn c6_needs_every_subdomain() {
    let pair = |c, r, e| SubdomainPair { class: c, res_w: r, eta_rf_w: e };
    let mut s = sample(0.0, 1.0);
    s.subdomains = Some([
        pair(NodeClass::Interior, 0.01, 1.0),
        pair(NodeClass::Overlap, 0.01, 1.0),
        pair(NodeClass::Exterior, 0.9, 1.0),
    ]);
    let cfg = CriterionConfig::new(CriterionKind::C6);
    assert_eq!(evaluate(&cfg, &Inputs { sample: Some(&s), ..Default::default() }), Decision::Hold);
    s.subdomains.as_mut().unwrap()[2].res_w = 0.01;
    assert_eq!(evaluate(&cfg, &Inputs { sample: Some(&s), ..Default::default() }), Decision::Fire);
}

#[test]
fn quality_ratio_limits() {
    assert_eq!(quality_ratio(2.0, 0.0), 1.0);
    assert!((quality_ratio(3.0, 4.0) - 5.0 / 3.0).abs() < 1e-15);
    assert_eq!(linspace(3.0, 30.0, 4), vec![3.0, 12.0, 21.0, 30.0]);
}

fn small_problem() -> FemProblem {
    let mesh = unit_square_mesh(4).unwrap();
    let spec = ProblemSpec::new(|p| (3.0 * p[0]).sin() * (2.0 * p[1]).cos() + 1.0);
    FemProblem::new(mesh, 3, spec).unwrap()
}

#[test]
fn online_matches_offline_replay_and_tau_monotone() {
    let p = small_problem();
    let suite = EstimatorSuite::new(&p, EstimatorSet::ALL).unwrap();
    let xref = {
        let a = crate::assembly::dense(&p.system().a);
        a.cholesky().unwrap().solve(&nalgebra::DVector::from_column_slice(&p.system().b)).as_slice().to_vec()
    };
    let configs: Vec<CriterionConfig> = [
        CriterionKind::C1,
        CriterionKind::C2,
        CriterionKind::C3,
        CriterionKind::C4,
        CriterionKind::C5,
        CriterionKind::C7 { tol: 1e-6 },
        CriterionKind::C7 { tol: 1e-8 },
        CriterionKind::C7 { tol: 1e-10 },
    ]
    .map(CriterionConfig::new)
    .to_vec();
    let policy = StopPolicy { run_to_relative_residual: Some(1e-12), stop_when_all_fired: true };
    let mut eng = CriteriaEngine::new(&p, &suite, &configs, 1, Some(&xref), policy);
    let opts = PcgOptions { max_iter: 2000, hard_floor: 1e-14, ..Default::default() };
    let trace = pcg(&p.system().a, &p.system().b, None, &Identity, &mut eng, &opts).unwrap();
    let (verdicts, rows) = eng.finish(Some(1.0));
    for v in &verdicts {
        let off = replay(&v.config, &rows, &trace.increments);
        assert_eq!(v.k_star, off, "{}", v.config.kind);
        assert!(v.fired(), "{}", v.config.kind);
        let k = v.k_star.unwrap();
        let xs = v.x_star.as_ref().unwrap();
        let diff: Vec<f64> = xref.iter().zip(xs).map(|(a, b)| a - b).collect();
        assert!((p.energy_norm(&diff) - rows[k].err_a.unwrap()).abs() < 1e-12);
    }
    let c7: Vec<usize> = verdicts[5..].iter().map(|v| v.k_star.unwrap()).collect();
    assert!(c7[0] <= c7[1] && c7[1] <= c7[2]);

    let kinds = [CriterionKind::C1, CriterionKind::C2, CriterionKind::C3, CriterionKind::C4, CriterionKind::C5];
    let grid = linspace(3.0, 30.0, 28);
    let sweep = tau_sweep(&kinds, &grid, DEFAULT_DELAY, &rows, &trace.increments, 1.0);
    for kind in kinds {
        let ks: Vec<usize> = sweep.iter().filter(|r| r.1 == kind).map(|r| r.2.unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[0] <= w[1]), "{kind}");
    }
}

//! Benchmark experiments: problem setup, reference solutions, the criteria
//! solve, and CSV output.

mod config;
mod output;
mod problems;

pub use config::{parse_criteria, ExperimentConfig};
pub use output::{summary_csv, trace_csv, write_outputs, TRACE_COLUMNS};
pub use problems::{
    base_mesh, build, inclusion_kappa, lshape_source, manufacture_rhs, problem_spec, warmup_source, AnalyticSolution,
    ProblemKind, SmoothBump,
};

use crate::assembly::sparse::dot;
use crate::assembly::FemProblem;
use crate::criteria::{CriteriaEngine, CriterionConfig, StopPolicy, TraceRow, Verdict};
use crate::error::{Error, Result};
use crate::estimators::{eta_r, EstimatorSet, EstimatorSuite};
use crate::exec::Execution;
use crate::krylov::{pcg, recycling_pcg, ConstantProjection, IncompleteCholesky, IterationRow, IterationTrace, PcgOptions, RecycleSpace};
use crate::mesh::{refine_marked, Mesh};

/// Relative residual of the reference solves.
pub const TIGHT_TOL: f64 = 1e-14;
/// Relative residual of solves that only drive marking.
pub const MARK_TOL: f64 = 1e-8;
/// Relative residual of the fine-level solves behind the energy gap; the
/// algebraic part of the gap is then far below the discretization error.
pub const FINE_TOL: f64 = 1e-11;

fn execution(parallel: bool) -> Execution {
    if parallel { Execution::Parallel } else { Execution::Sequential }
}

/// Incomplete Cholesky, projected onto zero-mean vectors for pure Neumann systems.
pub type FemPreconditioner = ConstantProjection<IncompleteCholesky>;

pub fn preconditioner(problem: &FemProblem, droptol: f64, shift: f64) -> Result<FemPreconditioner> {
    let inner = IncompleteCholesky::new(&problem.system().a, droptol, shift)?;
    Ok(ConstantProjection { inner, active: problem.disc().dofs().has_constant_kernel() })
}

/// PCG to [`TIGHT_TOL`] relative residual (or `max_iter`).
pub fn tight_solve(problem: &FemProblem, pc: &FemPreconditioner, max_iter: usize) -> Result<Vec<f64>> {
    solve_to(problem, pc, TIGHT_TOL, max_iter)
}

pub fn solve_to(problem: &FemProblem, pc: &FemPreconditioner, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let sys = problem.system();
    let opts = PcgOptions { max_iter, hard_floor: tol, exec: problem.disc().execution(), record_iterates: false };
    let mut never = |_: &IterationRow<'_>| false;
    Ok(pcg(&sys.a, &sys.b, None, pc, &mut never, &opts)?.x)
}

/// `||u_h||_E^2` through the quadratically accurate `2 b^T x - x^T A x`.
pub fn discrete_energy(problem: &FemProblem, x: &[f64]) -> f64 {
    let ax = problem.system().a.matvec(x);
    2.0 * dot(&problem.system().b, x) - dot(&ax, x)
}

/// Marks elements whose `eta_{R,K}` exceeds the mean.
pub fn mark_above_mean(values: &[f64]) -> Vec<usize> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (0..values.len()).filter(|&t| values[t] > mean).collect()
}

/// One solve-estimate-mark-refine step.
fn refine_once(cfg: &ExperimentConfig, mesh: Mesh, tol: f64) -> Result<(Mesh, FemProblem, Vec<f64>)> {
    let problem = build(cfg.problem.discretized_as(), mesh, cfg.degree, execution(cfg.parallel))?;
    let pc = preconditioner(&problem, cfg.droptol, cfg.shift)?;
    let x = solve_to(&problem, &pc, tol, cfg.max_iter)?;
    let est = eta_r(&problem, &problem.strong_residuals(&x));
    let refined = refine_marked(problem.disc().mesh(), &mark_above_mean(&est.elements));
    Ok((refined, problem, x))
}

/// Adaptive refinement from the base mesh, stopping before `max_elements`
/// would be exceeded. Returns the element count of every mesh visited.
pub fn adaptive_mesh(cfg: &ExperimentConfig) -> Result<(Mesh, Vec<usize>)> {
    let mut mesh = base_mesh(cfg.problem, cfg.n, cfg.ratio)?;
    let mut sizes = vec![mesh.num_triangles()];
    for _ in 0..cfg.refinements {
        let (next, _, _) = refine_once(cfg, mesh.clone(), MARK_TOL)?;
        if next.num_triangles() > cfg.max_elements {
            break;
        }
        mesh = next;
        sizes.push(mesh.num_triangles());
    }
    Ok((mesh, sizes))
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub x: Vec<f64>,
    pub e_dis: f64,
    /// Element counts of the fine meshes behind `e_dis` (empty with an exact solution).
    pub fine_elements: Vec<usize>,
    /// `e_dis` estimated from each fine level in turn.
    pub e_dis_levels: Vec<f64>,
}

/// Tight discrete solution and the discretization error. With an exact
/// solution the error is integrated directly; otherwise it comes from the
/// energy gap `||u_fine||^2 - ||u_h||^2` to nested adaptively refined meshes.
pub fn reference_solution(cfg: &ExperimentConfig, problem: &FemProblem, pc: &FemPreconditioner) -> Result<Reference> {
    let x = tight_solve(problem, pc, cfg.max_iter)?;
    if let Some(e) = problem.energy_error(&x) {
        return Ok(Reference { x, e_dis: e, fine_elements: Vec::new(), e_dis_levels: Vec::new() });
    }
    if cfg.reference_levels == 0 {
        return Err(Error::Config("reference_levels must be positive without an exact solution".into()));
    }
    let energy = discrete_energy(problem, &x);
    let est = eta_r(problem, &problem.strong_residuals(&x));
    let mut mesh = refine_marked(problem.disc().mesh(), &mark_above_mean(&est.elements));
    let mut fine_elements = Vec::new();
    let mut e_dis_levels = Vec::new();
    for _ in 0..cfg.reference_levels {
        let (next, fine, xf) = refine_once(cfg, mesh, FINE_TOL)?;
        fine_elements.push(fine.disc().num_triangles());
        let gap = discrete_energy(&fine, &xf) - energy;
        e_dis_levels.push(gap.max(0.0).sqrt());
        mesh = next;
    }
    let e_dis = *e_dis_levels.last().unwrap();
    if !(e_dis > 0.0) {
        return Err(Error::Config("fine reference did not resolve the discretization error".into()));
    }
    Ok(Reference { x, e_dis, fine_elements, e_dis_levels })
}

#[derive(Clone, Debug)]
pub struct WarmUp {
    pub iterations: usize,
    pub basis_dim: usize,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub problem: FemProblem,
    pub mesh_sizes: Vec<usize>,
    pub reference: Reference,
    pub verdicts: Vec<Verdict>,
    pub rows: Vec<TraceRow>,
    pub trace: IterationTrace,
    pub warmup: Option<WarmUp>,
    /// Estimator invariants that failed while recording (should stay empty).
    pub violations: Vec<String>,
}

impl ExperimentResult {
    pub fn verdict(&self, kind: crate::criteria::CriterionKind) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.config.kind == kind)
    }

    /// `||x - x_k||_A` for every recorded iteration.
    pub fn err_a(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.err_a).collect()
    }
}

/// Checks the upper-bound and ordering laws on every sampled row.
pub fn check_invariants(rows: &[TraceRow]) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows {
        let Some(s) = &r.sample else { continue };
        if let (Some(rw), Some(e)) = (s.res_w, s.eta_rf_w) {
            if rw > e + 1e-14 * e {
                out.push(format!("k={}: ||r||_w = {rw:e} > eta_RF^w = {e:e}", r.k));
            }
        }
        if let (Some(lb), Some(b)) = (s.eta_bdm_lb, s.eta_bdm) {
            if lb > b * (1.0 + 1e-12) {
                out.push(format!("k={}: eta_BDM_lb = {lb:e} > eta_BDM = {b:e}", r.k));
            }
        }
        if let Some(sub) = &s.subdomains {
            for p in sub {
                if p.res_w > p.eta_rf_w * (1.0 + 1e-14) {
                    out.push(format!("k={} {}: subdomain bound violated", r.k, p.class.name()));
                }
            }
        }
    }
    out
}

fn estimator_set(cfg: &ExperimentConfig) -> EstimatorSet {
    use crate::criteria::CriterionKind as C;
    let has = |k: C| cfg.criteria.contains(&k);
    EstimatorSet {
        r: true,
        mr: has(C::C2) || !cfg.problem.is_lshape(),
        bdm: true,
        bdm_lb: true,
        rf: true,
        subdomains: cfg.problem.is_lshape(),
    }
}

/// Mesh, discrete problem, preconditioner and reference; everything a
/// criteria solve needs before it starts. test3_2 and test4 can share one.
pub struct Prepared {
    pub kind: ProblemKind,
    pub mesh_sizes: Vec<usize>,
    pub problem: FemProblem,
    pub pc: FemPreconditioner,
    pub reference: Reference,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let kind = cfg.problem.discretized_as();
    let (mesh, mesh_sizes) = if cfg.problem.is_lshape() {
        adaptive_mesh(cfg)?
    } else {
        let m = base_mesh(kind, cfg.n, cfg.ratio)?;
        let n = m.num_triangles();
        (m, vec![n])
    };
    let problem = build(kind, mesh, cfg.degree, execution(cfg.parallel))?;
    let pc = preconditioner(&problem, cfg.droptol, cfg.shift)?;
    let reference = reference_solution(cfg, &problem, &pc)?;
    Ok(Prepared { kind, mesh_sizes, problem, pc, reference })
}

/// Builds the problem, computes the reference, and runs the criteria solve.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_prepared(cfg, &prepare(cfg)?)
}

/// Criteria solve on an already prepared discretization. The caller keeps
/// the mesh and solver settings of `cfg` consistent with `prep`.
pub fn run_prepared(cfg: &ExperimentConfig, prep: &Prepared) -> Result<ExperimentResult> {
    cfg.validate()?;
    if prep.kind != cfg.problem.discretized_as() || prep.problem.disc().degree() != cfg.degree {
        return Err(Error::Config(format!("prepared {} (N={}) does not match {}", prep.kind, prep.problem.disc().degree(), cfg.problem)));
    }
    let exec = execution(cfg.parallel);
    let mut problem = prep.problem.clone();
    problem.set_execution(exec);
    let (pc, reference, mesh_sizes) = (&prep.pc, prep.reference.clone(), prep.mesh_sizes.clone());
    let suite = EstimatorSuite::new(&problem, estimator_set(cfg))?;
    let configs: Vec<CriterionConfig> =
        cfg.criteria.iter().map(|&k| CriterionConfig { kind: k, tau: cfg.tau, delay: cfg.delay }).collect();
    let policy = StopPolicy { run_to_relative_residual: cfg.run_to, stop_when_all_fired: true };
    let mut engine = CriteriaEngine::new(&problem, &suite, &configs, cfg.sample_every, Some(&reference.x), policy);
    let opts = PcgOptions { max_iter: cfg.max_iter, hard_floor: 0.0, exec, record_iterates: false };
    let sys = problem.system();

    let (trace, warmup) = if cfg.problem == ProblemKind::Test4 {
        let warm = problem.with_source(warmup_source)?;
        let mut space = RecycleSpace::empty(sys.num_free(), cfg.recycle_m, cfg.recycle_period);
        let tol = cfg.warmup_tol;
        let mut r0 = 0.0;
        let mut stop = |row: &IterationRow<'_>| {
            if row.k == 0 {
                r0 = row.res_norm;
            }
            row.k > 0 && row.res_norm <= tol * r0
        };
        let wt = recycling_pcg(&sys.a, &warm.system().b, None, pc, &mut space, &mut stop, &opts)?;
        let warmup = WarmUp { iterations: wt.iterations, basis_dim: space.dim() };
        // The target solve deflates with the warm-up basis and keeps refreshing it.
        let t = recycling_pcg(&sys.a, &sys.b, None, pc, &mut space, &mut engine, &opts)?;
        (t, Some(warmup))
    } else {
        (pcg(&sys.a, &sys.b, None, pc, &mut engine, &opts)?, None)
    };
    if let Some(e) = engine.error() {
        return Err(e.clone().into());
    }
    let (verdicts, rows) = engine.finish(Some(reference.e_dis));
    let violations = check_invariants(&rows);
    Ok(ExperimentResult {
        config: cfg.clone(),
        problem,
        mesh_sizes,
        reference,
        verdicts,
        rows,
        trace,
        warmup,
        violations,
    })
}

/// Number of maximal stretches where `err` drops by less than `rel` over
/// `window` consecutive iterations.
pub fn count_plateaus(err: &[f64], window: usize, rel: f64) -> usize {
    if err.len() <= window {
        return 0;
    }
    let flat: Vec<bool> = (0..err.len() - window).map(|k| err[k + window] > (1.0 - rel) * err[k]).collect();
    let mut count = 0;
    let mut prev = false;
    for f in flat {
        if f && !prev {
            count += 1;
        }
        prev = f;
    }
    count
}

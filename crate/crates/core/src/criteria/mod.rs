//! Stopping criteria C1–C7 driven by the CG observer, with offline replay of
//! a recorded trace and quality-ratio evaluation.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::assembly::FemProblem;
use crate::error::{Error, EstimatorError};
use crate::estimators::{EstimatorSample, EstimatorSuite};
use crate::krylov::{IterationRow, Observer};

pub const DEFAULT_TAU: f64 = 1.0 / 20.0;
pub const DEFAULT_DELAY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriterionKind {
    /// `eta_alg <= tau eta_R`
    C1,
    /// `eta_alg <= tau eta_MR`
    C2,
    /// `eta_alg <= tau eta_BDM`
    C3,
    /// `eta_alg <= tau eta_BDM_lb`
    C4,
    /// `||r||_w <= tau eta_RF^w`
    C5,
    /// the C5 test on every subdomain at once
    C6,
    /// `||r_k|| <= tol ||r_0||`
    C7 { tol: f64 },
}

impl CriterionKind {
    pub fn uses_eta_alg(self) -> bool {
        matches!(self, Self::C1 | Self::C2 | Self::C3 | Self::C4)
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::C1 => "C1".into(),
            Self::C2 => "C2".into(),
            Self::C3 => "C3".into(),
            Self::C4 => "C4".into(),
            Self::C5 => "C5".into(),
            Self::C6 => "C6".into(),
            Self::C7 { tol } => format!("C7:{tol:e}"),
        };
        f.pad(&s)
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    /// `c1`..`c6`, or `c7:<tol>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::Config(format!("unknown criterion `{s}`"));
        Ok(match s.as_str() {
            "c1" => Self::C1,
            "c2" => Self::C2,
            "c3" => Self::C3,
            "c4" => Self::C4,
            "c5" => Self::C5,
            "c6" => Self::C6,
            _ => {
                let tol = s.strip_prefix("c7:").ok_or_else(bad)?;
                let tol: f64 = tol.parse().map_err(|_| bad())?;
                if !(tol > 0.0 && tol < 1.0) {
                    return Err(Error::Config(format!("C7 tolerance {tol} outside (0, 1)")));
                }
                Self::C7 { tol }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionConfig {
    pub kind: CriterionKind,
    pub tau: f64,
    pub delay: usize,
}

impl CriterionConfig {
    pub fn new(kind: CriterionKind) -> Self {
        Self { kind, tau: DEFAULT_TAU, delay: DEFAULT_DELAY }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_delay(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau {} outside (0, 1)", self.tau)));
        }
        if self.kind.uses_eta_alg() && self.delay == 0 {
            return Err(Error::Config("delay must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Fire,
    Hold,
}

/// What a criterion needs at iteration `k`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Inputs<'a> {
    pub eta_alg: Option<f64>,
    pub res_norm: f64,
    pub r0: f64,
    pub sample: Option<&'a EstimatorSample>,
}

/// Fires only when every quantity the criterion needs is present.
pub fn evaluate(cfg: &CriterionConfig, inp: &Inputs<'_>) -> Decision {
    let tau = cfg.tau;
    let s = inp.sample;
    let alg = |est: Option<f64>| match (inp.eta_alg, est) {
        (Some(a), Some(e)) => a <= tau * e,
        _ => false,
    };
    let fire = match cfg.kind {
        CriterionKind::C1 => alg(s.and_then(|s| s.eta_r)),
        CriterionKind::C2 => alg(s.and_then(|s| s.eta_mr)),
        CriterionKind::C3 => alg(s.and_then(|s| s.eta_bdm)),
        CriterionKind::C4 => alg(s.and_then(|s| s.eta_bdm_lb)),
        CriterionKind::C5 => match s.map(|s| (s.res_w, s.eta_rf_w)) {
            Some((Some(r), Some(e))) => r <= tau * e,
            _ => false,
        },
        CriterionKind::C6 => match s.and_then(|s| s.subdomains) {
            Some(sub) => sub.iter().all(|p| p.res_w <= tau * p.eta_rf_w),
            None => false,
        },
        CriterionKind::C7 { tol } => inp.res_norm <= tol * inp.r0,
    };
    if fire { Decision::Fire } else { Decision::Hold }
}

/// One recorded CG iteration.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub k: usize,
    /// `||r_k||` from the CG recurrence.
    pub res_norm: f64,
    /// `||x - x_k||_A` against the reference solution, when one was supplied.
    pub err_a: Option<f64>,
    /// `eta_alg(k, d)` with the engine delay, filled in `d` iterations later.
    pub eta_alg: Option<f64>,
    pub sample: Option<EstimatorSample>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub config: CriterionConfig,
    pub k_star: Option<usize>,
    /// Extra iterations the look-ahead needed beyond `k_star`.
    pub extra_delay_iters: usize,
    pub quality_ratio: Option<f64>,
    /// `x_{k*}` on the free dofs.
    pub x_star: Option<Vec<f64>>,
}

impl Verdict {
    pub fn fired(&self) -> bool {
        self.k_star.is_some()
    }
}

/// Reference data for the quality ratio.
#[derive(Clone, Debug)]
pub struct QualityReference {
    /// Essentially exact discrete solution on the free dofs.
    pub x: Vec<f64>,
    /// `||u - u_h||_E`.
    pub e_dis: f64,
}

/// `||u - u_h^k||_E / ||u - u_h||_E` by the Pythagorean split of the total error.
pub fn quality_ratio(e_dis: f64, err_a: f64) -> f64 {
    (e_dis * e_dis + err_a * err_a).sqrt() / e_dis
}

fn window_eta_alg(increments: &[f64], k: usize, d: usize) -> Option<f64> {
    (k + d <= increments.len()).then(|| increments[k..k + d].iter().sum::<f64>().sqrt())
}

/// First iteration at which `cfg` fires on a frozen trace.
pub fn replay(cfg: &CriterionConfig, rows: &[TraceRow], increments: &[f64]) -> Option<usize> {
    let r0 = rows.first()?.res_norm;
    rows.iter().find_map(|row| {
        let inp = Inputs {
            eta_alg: if cfg.kind.uses_eta_alg() { window_eta_alg(increments, row.k, cfg.delay) } else { None },
            res_norm: row.res_norm,
            r0,
            sample: row.sample.as_ref(),
        };
        (evaluate(cfg, &inp) == Decision::Fire).then_some(row.k)
    })
}

/// Quality ratios of each criterion for each `1/tau` in `inv_tau`, replayed on a
/// frozen trace carrying `err_a`. `None` marks a criterion that did not fire.
pub fn tau_sweep(
    kinds: &[CriterionKind],
    inv_tau: &[f64],
    delay: usize,
    rows: &[TraceRow],
    increments: &[f64],
    e_dis: f64,
) -> Vec<(f64, CriterionKind, Option<usize>, Option<f64>)> {
    let mut out = Vec::new();
    for &it in inv_tau {
        for &kind in kinds {
            let cfg = CriterionConfig { kind, tau: 1.0 / it, delay };
            let k = replay(&cfg, rows, increments);
            let q = k.and_then(|k| rows[k].err_a).map(|e| quality_ratio(e_dis, e));
            out.push((it, kind, k, q));
        }
    }
    out
}

/// Evenly spaced grid from `a` to `b` with `n` points.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// When the engine asks CG to stop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopPolicy {
    /// Keep iterating until this relative residual is reached even if all
    /// criteria fired (for plots and sweeps).
    pub run_to_relative_residual: Option<f64>,
    /// Stop as soon as every criterion has fired.
    pub stop_when_all_fired: bool,
}

impl Default for StopPolicy {
    fn default() -> Self {
        Self { run_to_relative_residual: None, stop_when_all_fired: true }
    }
}

/// PCG observer evaluating all configured criteria on one shared trace.
pub struct CriteriaEngine<'a> {
    problem: &'a FemProblem,
    suite: &'a EstimatorSuite,
    verdicts: Vec<Verdict>,
    delay: usize,
    sample_every: usize,
    reference: Option<&'a [f64]>,
    policy: StopPolicy,
    rows: Vec<TraceRow>,
    window: VecDeque<(usize, Vec<f64>)>,
    r0: f64,
    error: Option<EstimatorError>,
    /// Last iteration seen.
    pub last_k: usize,
}

impl<'a> CriteriaEngine<'a> {
    pub fn new(
        problem: &'a FemProblem,
        suite: &'a EstimatorSuite,
        configs: &[CriterionConfig],
        sample_every: usize,
        reference: Option<&'a [f64]>,
        policy: StopPolicy,
    ) -> Self {
        let delay = configs.iter().filter(|c| c.kind.uses_eta_alg()).map(|c| c.delay).max().unwrap_or(DEFAULT_DELAY);
        let verdicts = configs
            .iter()
            .map(|&config| Verdict {
                config,
                k_star: None,
                extra_delay_iters: if config.kind.uses_eta_alg() { config.delay } else { 0 },
                quality_ratio: None,
                x_star: None,
            })
            .collect();
        Self {
            problem,
            suite,
            verdicts,
            delay,
            sample_every: sample_every.max(1),
            reference,
            policy,
            rows: Vec::new(),
            window: VecDeque::new(),
            r0: 0.0,
            error: None,
            last_k: 0,
        }
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// First estimator failure, if any (the solve is stopped when one occurs).
    pub fn error(&self) -> Option<&EstimatorError> {
        self.error.as_ref()
    }

    /// Fills in quality ratios from `err_a` at each `k*`.
    pub fn finish(mut self, e_dis: Option<f64>) -> (Vec<Verdict>, Vec<TraceRow>) {
        if let Some(e) = e_dis {
            for v in &mut self.verdicts {
                if let Some(k) = v.k_star {
                    v.quality_ratio = self.rows[k].err_a.map(|ea| quality_ratio(e, ea));
                }
            }
        }
        (self.verdicts, self.rows)
    }

    fn err_a(&self, x: &[f64]) -> Option<f64> {
        let xr = self.reference?;
        let diff: Vec<f64> = xr.iter().zip(x).map(|(a, b)| a - b).collect();
        Some(self.problem.energy_norm(&diff))
    }

    fn iterate(&self, k: usize) -> Option<&Vec<f64>> {
        self.window.iter().find(|(j, _)| *j == k).map(|(_, x)| x)
    }
}

impl Observer for CriteriaEngine<'_> {
    fn observe(&mut self, row: &IterationRow<'_>) -> bool {
        let k = row.k;
        self.last_k = k;
        if k == 0 {
            self.r0 = row.res_norm;
        }
        let sample = if k % self.sample_every == 0 {
            match self.suite.sample(self.problem, k, row.x) {
                Ok(mut s) => {
                    s.eta_r_elements = Vec::new();
                    Some(s)
                }
                Err(e) => {
                    self.error = Some(e);
                    return true;
                }
            }
        } else {
            None
        };
        let err_a = self.err_a(row.x);
        self.rows.push(TraceRow { k, res_norm: row.res_norm, err_a, eta_alg: None, sample });
        self.window.push_back((k, row.x.to_vec()));
        while self.window.len() > self.delay + 1 {
            self.window.pop_front();
        }
        if k >= self.delay {
            let j = k - self.delay;
            self.rows[j].eta_alg = window_eta_alg(row.increments, j, self.delay);
        }

        for vi in 0..self.verdicts.len() {
            if self.verdicts[vi].k_star.is_some() {
                continue;
            }
            let cfg = self.verdicts[vi].config;
            let at = if cfg.kind.uses_eta_alg() {
                if k < cfg.delay {
                    continue;
                }
                k - cfg.delay
            } else {
                k
            };
            let target = &self.rows[at];
            let inp = Inputs {
                eta_alg: if cfg.kind.uses_eta_alg() { window_eta_alg(row.increments, at, cfg.delay) } else { None },
                res_norm: target.res_norm,
                r0: self.r0,
                sample: target.sample.as_ref(),
            };
            if evaluate(&cfg, &inp) == Decision::Fire {
                let x = if at == k { Some(row.x.to_vec()) } else { self.iterate(at).cloned() };
                let v = &mut self.verdicts[vi];
                v.k_star = Some(at);
                v.x_star = x;
            }
        }

        let all = self.verdicts.iter().all(|v| v.k_star.is_some());
        match self.policy.run_to_relative_residual {
            Some(t) => row.res_norm <= t * self.r0 && (all || !self.policy.stop_when_all_fired),
            None => self.policy.stop_when_all_fired && all,
        }
    }
}

#[cfg(test)]
mod tests;

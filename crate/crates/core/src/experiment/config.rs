use std::fmt::Write as _;
use std::path::PathBuf;

use super::problems::ProblemKind;
use crate::criteria::{CriterionKind, DEFAULT_DELAY, DEFAULT_TAU};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub degree: usize,
    /// Cells per side of the unit-square mesh.
    pub n: usize,
    /// Aspect ratio of the diamond mesh.
    pub ratio: f64,
    /// Upper bound on adaptive refinement passes (L-shape problems).
    pub refinements: usize,
    /// Refinement stops before the mesh would exceed this many elements.
    pub max_elements: usize,
    /// Extra adaptive passes for the fine reference energy (L-shape problems).
    pub reference_levels: usize,
    pub tau: f64,
    pub delay: usize,
    pub droptol: f64,
    pub shift: f64,
    pub criteria: Vec<CriterionKind>,
    pub sample_every: usize,
    pub max_iter: usize,
    /// Keep iterating until this relative residual even after all criteria fired.
    pub run_to: Option<f64>,
    pub recycle_m: usize,
    pub recycle_period: usize,
    pub warmup_tol: f64,
    pub parallel: bool,
    pub export_matrix: bool,
    pub out_dir: PathBuf,
    /// Seed for randomized checks only; the solves are deterministic.
    pub seed: u64,
}

const KEYS: &[&str] = &[
    "problem",
    "degree",
    "n",
    "ratio",
    "refinements",
    "max_elements",
    "reference_levels",
    "tau",
    "delay",
    "droptol",
    "shift",
    "criteria",
    "sample_every",
    "max_iter",
    "run_to",
    "recycle_m",
    "recycle_period",
    "warmup_tol",
    "parallel",
    "export_matrix",
    "out_dir",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

/// Comma-separated list such as `c1,c3,c5,c7:1e-8`.
pub fn parse_criteria(s: &str) -> Result<Vec<CriterionKind>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

impl ExperimentConfig {
    pub fn defaults(problem: ProblemKind) -> Self {
        let criteria = match problem {
            ProblemKind::Test1 | ProblemKind::Test2 => "c1,c2,c3,c4,c5,c7:1e-6,c7:1e-8,c7:1e-10",
            _ => "c1,c3,c4,c5,c6,c7:1e-6,c7:1e-8,c7:1e-10",
        };
        Self {
            problem,
            degree: if problem == ProblemKind::Test2 { 6 } else { 4 },
            n: 8,
            ratio: 1.0 / 32.0,
            refinements: 20,
            max_elements: 1500,
            reference_levels: 2,
            tau: DEFAULT_TAU,
            delay: DEFAULT_DELAY,
            droptol: 1e-4,
            shift: 0.1,
            criteria: parse_criteria(criteria).expect("static list"),
            sample_every: 1,
            max_iter: 20_000,
            run_to: None,
            recycle_m: 20,
            recycle_period: 20,
            warmup_tol: 1e-10,
            parallel: true,
            export_matrix: false,
            out_dir: PathBuf::from("results").join(problem.name()),
            seed: 0,
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "problem" => {
                let p = parse::<ProblemKind>(key, v)?;
                *self = Self { ..Self::defaults(p) };
            }
            "degree" => self.degree = parse(key, v)?,
            "n" => self.n = parse(key, v)?,
            "ratio" => self.ratio = parse(key, v)?,
            "refinements" => self.refinements = parse(key, v)?,
            "max_elements" => self.max_elements = parse(key, v)?,
            "reference_levels" => self.reference_levels = parse(key, v)?,
            "tau" => self.tau = parse(key, v)?,
            "delay" => self.delay = parse(key, v)?,
            "droptol" => self.droptol = parse(key, v)?,
            "shift" => self.shift = parse(key, v)?,
            "criteria" => self.criteria = parse_criteria(v)?,
            "sample_every" => self.sample_every = parse(key, v)?,
            "max_iter" => self.max_iter = parse(key, v)?,
            "run_to" => {
                self.run_to = match v.trim() {
                    "" | "none" => None,
                    s => Some(parse(key, s)?),
                }
            }
            "recycle_m" => self.recycle_m = parse(key, v)?,
            "recycle_period" => self.recycle_period = parse(key, v)?,
            "warmup_tol" => self.warmup_tol = parse(key, v)?,
            "parallel" => self.parallel = parse(key, v)?,
            "export_matrix" => self.export_matrix = parse(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v.trim()),
            "seed" => self.seed = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. `problem` is applied first so that its
    /// defaults do not override the other keys.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let as_text = |v: &toml::Value| -> Result<String> {
            Ok(match v {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => format!("{f:e}"),
                toml::Value::Boolean(b) => b.to_string(),
                toml::Value::Array(a) => {
                    a.iter().map(|x| x.as_str().map(str::to_owned).unwrap_or_else(|| x.to_string())).collect::<Vec<_>>().join(",")
                }
                other => return Err(Error::Config(format!("unsupported value {other}"))),
            })
        };
        let problem = match table.get("problem") {
            Some(v) => as_text(v)?.parse()?,
            None => ProblemKind::Test1,
        };
        let mut cfg = Self::defaults(problem);
        for (k, v) in &table {
            if k != "problem" {
                cfg.set(k, &as_text(v)?)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.degree == 0 || self.degree > crate::fe_basis::MAX_DEGREE {
            return bad("degree must be in 1..=12");
        }
        if self.n == 0 || self.max_elements == 0 || self.sample_every == 0 || self.max_iter == 0 {
            return bad("n, max_elements, sample_every and max_iter must be positive");
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return bad("ratio must be in (0, 1]");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must be in (0, 1)");
        }
        if self.delay == 0 {
            return bad("delay must be positive");
        }
        if !(self.droptol >= 0.0 && self.shift >= 0.0) {
            return bad("droptol and shift must be nonnegative");
        }
        if self.criteria.is_empty() {
            return bad("no criteria configured");
        }
        if self.recycle_period == 0 || !(self.warmup_tol > 0.0) {
            return bad("recycle_period and warmup_tol must be positive");
        }
        if let Some(r) = self.run_to {
            if !(r > 0.0 && r < 1.0) {
                return bad("run_to must be in (0, 1)");
            }
        }
        Ok(())
    }

    /// Flat `key = value` listing that [`Self::from_toml`] reads back.
    pub fn echo(&self) -> String {
        let crit: Vec<String> = self.criteria.iter().map(|c| c.to_string().to_lowercase()).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            debug_assert!(KEYS.contains(&k));
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("problem", format!("\"{}\"", self.problem));
        kv("degree", self.degree.to_string());
        kv("n", self.n.to_string());
        kv("ratio", format!("{:e}", self.ratio));
        kv("refinements", self.refinements.to_string());
        kv("max_elements", self.max_elements.to_string());
        kv("reference_levels", self.reference_levels.to_string());
        kv("tau", format!("{:e}", self.tau));
        kv("delay", self.delay.to_string());
        kv("droptol", format!("{:e}", self.droptol));
        kv("shift", format!("{:e}", self.shift));
        kv("criteria", format!("\"{}\"", crit.join(",")));
        kv("sample_every", self.sample_every.to_string());
        kv("max_iter", self.max_iter.to_string());
        kv("run_to", format!("\"{}\"", self.run_to.map_or("none".into(), |r| format!("{r:e}"))));
        kv("recycle_m", self.recycle_m.to_string());
        kv("recycle_period", self.recycle_period.to_string());
        kv("warmup_tol", format!("{:e}", self.warmup_tol));
        kv("parallel", self.parallel.to_string());
        kv("export_matrix", self.export_matrix.to_string());
        kv("out_dir", format!("\"{}\"", self.out_dir.display()));
        kv("seed", self.seed.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_roundtrip() {
        let mut c = ExperimentConfig::defaults(ProblemKind::Test3_2);
        c.set("tau", "0.1").unwrap();
        c.set("criteria", "c5,c6,c7:1e-8").unwrap();
        c.set("run_to", "1e-12").unwrap();
        let back = ExperimentConfig::from_toml(&c.echo()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ExperimentConfig::defaults(ProblemKind::Test1);
        assert!(c.set("tau", "abc").is_err());
        assert!(c.set("nope", "1").is_err());
        c.tau = 2.0;
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_toml("problem = \"test9\"").is_err());
    }

    #[test]
    fn problem_defaults() {
        let c = ExperimentConfig::from_toml("problem = \"test2\"\ndroptol = 1e-3").unwrap();
        assert_eq!(c.degree, 6);
        assert_eq!(c.droptol, 1e-3);
        assert_eq!(c.criteria.len(), 8);
    }
}

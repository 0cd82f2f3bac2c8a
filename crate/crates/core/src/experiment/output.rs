use std::fs;
use std::path::Path;

use super::ExperimentResult;
use crate::assembly::sparse::vector_to_matrix_market;
use crate::criteria::{TraceRow, Verdict};
use crate::error::Result;
use crate::mesh::io::write_mesh;
use crate::mesh::NodeClass;

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.12e}"))
}

pub const TRACE_COLUMNS: [&str; 16] = [
    "iter",
    "res_l2",
    "res_w",
    "err_A",
    "eta_alg",
    "eta_R",
    "eta_MR",
    "eta_BDM",
    "eta_BDM_lb",
    "eta_RF_w",
    "res_w_int",
    "eta_RF_w_int",
    "res_w_ovl",
    "eta_RF_w_ovl",
    "res_w_ext",
    "eta_RF_w_ext",
];

/// Per-iteration trace; empty cells mark quantities not evaluated.
pub fn trace_csv(rows: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        let s = r.sample.as_ref();
        let mut rec = vec![
            r.k.to_string(),
            num(Some(r.res_norm)),
            num(s.and_then(|s| s.res_w)),
            num(r.err_a),
            num(r.eta_alg),
            num(s.and_then(|s| s.eta_r)),
            num(s.and_then(|s| s.eta_mr)),
            num(s.and_then(|s| s.eta_bdm)),
            num(s.and_then(|s| s.eta_bdm_lb)),
            num(s.and_then(|s| s.eta_rf_w)),
        ];
        for class in NodeClass::ALL {
            let p = s.and_then(|s| s.subdomains).and_then(|sub| sub.into_iter().find(|p| p.class == class));
            rec.push(num(p.map(|p| p.res_w)));
            rec.push(num(p.map(|p| p.eta_rf_w)));
        }
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

/// One row per criterion: `criterion, N, iterations, quality_ratio, fired, extra_delay_iters`.
pub fn summary_csv(verdicts: &[Verdict], degree: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["criterion", "N", "iterations", "quality_ratio", "fired", "extra_delay_iters"])?;
    for v in verdicts {
        w.write_record([
            v.config.kind.to_string(),
            degree.to_string(),
            v.k_star.map_or_else(String::new, |k| k.to_string()),
            match (v.k_star, v.quality_ratio) {
                (Some(_), Some(q)) => format!("{q:.6}"),
                (Some(_), None) => "n/a".into(),
                (None, _) => "did not fire".into(),
            },
            v.fired().to_string(),
            v.extra_delay_iters.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii"))
}

/// Writes `trace.csv`, `summary.csv`, `mesh.txt`, `config.echo` and, on
/// request, the system in Matrix Market format.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trace.csv"), trace_csv(&result.rows)?)?;
    fs::write(dir.join("summary.csv"), summary_csv(&result.verdicts, result.config.degree)?)?;
    fs::write(dir.join("mesh.txt"), write_mesh(result.problem.disc().mesh()))?;
    fs::write(dir.join("config.echo"), result.config.echo())?;
    if result.config.export_matrix {
        let sys = result.problem.system();
        fs::write(dir.join("A.mtx"), sys.a.to_matrix_market(true))?;
        fs::write(dir.join("b.mtx"), vector_to_matrix_market(&sys.b))?;
    }
    Ok(())
}

//! `report.json`, `sweep.csv` and optional matrix dumps.
//!
//! Everything except the top-level `timing` key is a function of the config
//! and the seed, so two runs compare equal after [`strip_timing`].

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::checks::{CheckRecord, Status};
use crate::cloaking::{approx_envelope, SweepResult};
use crate::config::RunConfig;
use crate::fem::write_matrix_market;
use crate::{Result, C64};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub mesh: [usize; 2],
    pub triangles: usize,
    pub boundary_nodes: usize,
    pub seed: u64,
    pub route: String,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub potentials: Vec<String>,
    pub dropped_potentials: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub provenance: Provenance,
    pub norm_caveat: &'static str,
    pub checks: Vec<CheckRecord>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub checks: BTreeMap<String, f64>,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    /// The report with its timing block under the top-level `timing` key.
    pub fn to_json(&self, timing: &Timing) -> Result<Value> {
        let mut v = serde_json::to_value(self).map_err(|e| crate::Error::Input(e.to_string()))?;
        if let Value::Object(map) = &mut v {
            map.insert(
                "timing".into(),
                serde_json::to_value(timing).map_err(|e| crate::Error::Input(e.to_string()))?,
            );
        }
        Ok(v)
    }

    pub fn write(&self, timing: &Timing, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(&self.to_json(timing)?).map_err(|e| crate::Error::Input(e.to_string()))?;
        fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }
}

/// Drops the top-level `timing` key.
pub fn strip_timing(mut v: Value) -> Value {
    if let Value::Object(map) = &mut v {
        map.remove("timing");
    }
    v
}

/// Writes `sweep.csv`; `envelope` is `(omega0, eta)` when known.
pub fn write_sweep_csv(sweep: &SweepResult, envelope: Option<(f64, f64)>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["omega".to_string()];
    for l in &sweep.labels {
        for col in ["re_F", "im_F", "re_H", "im_H", "envelope"] {
            header.push(format!("{col}[{l}]"));
        }
    }
    w.write_record(&header).map_err(csv_err)?;
    for (k, &omega) in sweep.omegas.iter().enumerate() {
        let mut row = vec![fmt(omega)];
        for p in 0..sweep.labels.len() {
            let f: C64 = sweep.values[p][k];
            let h = f * omega * omega;
            row.extend([fmt(f.re), fmt(f.im), fmt(h.re), fmt(h.im)]);
            row.push(match (envelope, sweep.f_inf[p]) {
                (Some((w0, eta)), Some(fi)) => fmt(approx_envelope(fi, sweep.g_vac[p], eta, w0, omega)),
                _ => String::new(),
            });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `dtn_eps.mtx` and `dtn_vac.mtx` at one frequency.
pub fn dump_matrices(problem: &crate::cloaking::CloakProblem, omega: f64, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (le, lv) = problem.dtn_pair(C64::new(omega, 0.0))?;
    for (name, m) in [("dtn_eps.mtx", &le.matrix), ("dtn_vac.mtx", &lv.matrix)] {
        let mut f = std::io::BufWriter::new(fs::File::create(dir.join(name))?);
        write_matrix_market(m, &mut f)?;
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Input(format!("csv: {e}"))
}

/// Overall status: fail if any check failed, otherwise pass.
pub fn overall(records: &[CheckRecord]) -> Status {
    if records.iter().any(|r| r.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn strip_timing_removes_only_timing() {
        let v = json!({ "a": 1, "timing": { "total_seconds": 2.0 } });
        assert_eq!(strip_timing(v), json!({ "a": 1 }));
    }
}

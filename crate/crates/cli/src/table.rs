//! CSV and JSON writers for homogeneous record tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use fdci_core::experiments::{
    ComplexityRecord, ExperimentRecord, PairedSavings, SerRecord, TimingRecord, ValidationRecord,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::CliError;

/// A record with a fixed CSV column order.
pub trait Row: Serialize {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

/// Six significant digits in the shortest plain notation; empty for `None`.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        None => String::new(),
        Some(0.0) => "0".into(),
        Some(v) if !v.is_finite() => v.to_string(),
        Some(v) => {
            let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
            rounded.to_string()
        }
    }
}

fn num(v: f64) -> String {
    fmt_num(Some(v))
}

impl Row for ExperimentRecord {
    fn header() -> &'static [&'static str] {
        &[
            "scheme",
            "lambda1",
            "gamma_dl_db",
            "gamma_ul_db",
            "eps_h",
            "eps_f",
            "eps_g",
            "dl_power_db",
            "ul_power_db",
            "feasible_rate",
            "n_trials",
            "mean_solve_time_s",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            num(self.lambda1),
            num(self.gamma_dl_db),
            num(self.gamma_ul_db),
            num(self.eps_h),
            num(self.eps_f),
            num(self.eps_g),
            fmt_num(self.dl_power_db),
            fmt_num(self.ul_power_db),
            num(self.feasible_rate),
            self.n_trials.to_string(),
            fmt_num(self.mean_solve_time_s),
        ]
    }
}

impl Row for PairedSavings {
    fn header() -> &'static [&'static str] {
        &["baseline", "scheme", "lambda1", "gamma_dl_db", "eps", "dl_saving_db", "ul_saving_db", "n_paired"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.baseline.clone(),
            self.scheme.clone(),
            num(self.lambda1),
            num(self.gamma_dl_db),
            num(self.eps),
            fmt_num(self.dl_saving_db),
            fmt_num(self.ul_saving_db),
            self.n_paired.to_string(),
        ]
    }
}

impl Row for TimingRecord {
    fn header() -> &'static [&'static str] {
        &["k", "scheme", "n_ok", "mean_time_s", "n_coh", "optimizations_per_frame", "frame_time_s"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            self.scheme.clone(),
            self.n_ok.to_string(),
            num(self.mean_time_s),
            self.n_coh.to_string(),
            num(self.optimizations_per_frame),
            num(self.frame_time_s),
        ]
    }
}

impl Row for SerRecord {
    fn header() -> &'static [&'static str] {
        &["gamma_dl_db", "n_symbols", "n_errors", "ser", "n_failed_slots"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            num(self.gamma_dl_db),
            self.n_symbols.to_string(),
            self.n_errors.to_string(),
            num(self.ser),
            self.n_failed_slots.to_string(),
        ]
    }
}

impl Row for ValidationRecord {
    fn header() -> &'static [&'static str] {
        &[
            "trial",
            "scheme",
            "oracle",
            "instance_digest",
            "oracle_value",
            "artifact_value",
            "abs_gap",
            "rel_gap",
            "tolerance",
            "pass",
            "details",
            "warnings",
        ]
    }

    fn cells(&self) -> Vec<String> {
        let r = &self.report;
        let details: Vec<String> = r.details.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect();
        vec![
            self.trial.to_string(),
            self.scheme.clone(),
            r.oracle.clone(),
            r.instance_digest.clone(),
            num(r.oracle_value),
            num(r.artifact_value),
            num(r.abs_gap),
            num(r.rel_gap),
            num(r.tolerance),
            r.pass.to_string(),
            details.join(";"),
            r.warnings.join(";"),
        ]
    }
}

impl Row for ComplexityRecord {
    fn header() -> &'static [&'static str] {
        &["scheme", "n", "k", "j", "order"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            self.n.to_string(),
            self.k.to_string(),
            self.j.to_string(),
            self.order.to_string(),
        ]
    }
}

/// CSV text: optional `# `-prefixed preamble, header, one line per record.
pub fn to_csv<R: Row>(records: &[R], preamble: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(text) = preamble {
        for line in text.lines() {
            out.push('#');
            if !line.is_empty() {
                out.push(' ');
                out.push_str(line);
            }
            out.push('\n');
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(R::header()).expect("in-memory write");
    for r in records {
        w.write_record(r.cells()).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8"));
    out
}

/// JSON document: the resolved configuration, its seed and the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonTable<R> {
    pub config: RunConfig,
    pub seed: u64,
    pub records: Vec<R>,
}

pub fn to_json<R: Row + Clone>(records: &[R], config: &RunConfig) -> String {
    let doc = JsonTable {
        config: config.clone(),
        seed: config.seed,
        records: records.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("records serialise");
    s.push('\n');
    s
}

pub fn from_json<R: DeserializeOwned>(text: &str) -> Result<JsonTable<R>, CliError> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `records` to `path` in `format`. CSV files carry the resolved
/// configuration (seed included) as a comment preamble when `with_preamble`
/// is set; JSON files always embed it.
pub fn emit_table<R: Row + Clone>(
    records: &[R],
    format: Format,
    path: &Path,
    config: &RunConfig,
    with_preamble: bool,
) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => {
            let preamble = with_preamble.then(|| config.to_toml());
            to_csv(records, preamble.as_deref())
        }
        Format::Json => to_json(records, config),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Write(path.to_path_buf(), e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::Write(path.to_path_buf(), e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::Write(path.to_path_buf(), e))?;
    Ok(())
}

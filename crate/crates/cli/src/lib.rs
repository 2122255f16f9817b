//! Configuration, dispatch and table output for the `fdci` experiment runner.

pub mod config;
pub mod table;

use std::path::PathBuf;

use fdci_core::experiments::{
    complexity_order, run_robust_sweep, run_ser_validation, run_sinr_sweep, run_timing, run_tradeoff, run_validation,
    ComplexityRecord, ExperimentOutput, TimingRecord,
};

pub use config::{parse_config, parse_modulation, read_config, ExperimentKind, Format, Overrides, RunConfig};
pub use table::{emit_table, fmt_num, from_json, to_csv, to_json, JsonTable, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot write {0}: {1}")]
    Write(PathBuf, #[source] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("every scheme was infeasible in every cell")]
    AllInfeasible,
    #[error("{0} oracle checks failed")]
    OracleFailure(usize),
    #[error("{0}")]
    Experiment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::AllInfeasible => 3,
            _ => 1,
        }
    }
}

/// Files written by a run and a short human-readable summary.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl RunSummary {
    fn emit<R: Row + Clone>(&mut self, cfg: &RunConfig, stem: &str, records: &[R]) -> Result<(), CliError> {
        for &format in &cfg.formats {
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let path = cfg.output_dir.join(format!("{stem}.{ext}"));
            emit_table(records, format, &path, cfg, true)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn emit_sweep(&mut self, cfg: &RunConfig, stem: &str, out: &ExperimentOutput) -> Result<(), CliError> {
        self.emit(cfg, stem, &out.records)?;
        self.emit(cfg, &format!("{stem}_savings"), &out.savings)?;
        for s in &out.savings {
            self.lines.push(format!(
                "{} vs {} lambda1={} gamma_dl_db={} eps={}: dl saving {} dB, ul saving {} dB over {} trials",
                s.scheme,
                s.baseline,
                fmt_num(Some(s.lambda1)),
                fmt_num(Some(s.gamma_dl_db)),
                fmt_num(Some(s.eps)),
                fmt_num(s.dl_saving_db),
                fmt_num(s.ul_saving_db),
                s.n_paired
            ));
        }
        if out.all_infeasible() {
            return Err(CliError::AllInfeasible);
        }
        Ok(())
    }
}

/// Mean per-optimisation time of robust CI over robust conventional, per K.
pub fn timing_ratios(records: &[TimingRecord]) -> Vec<(usize, f64)> {
    let mut ks: Vec<usize> = records.iter().map(|r| r.k).collect();
    ks.dedup();
    ks.into_iter()
        .filter_map(|k| {
            let mean = |tag: &str| records.iter().find(|r| r.k == k && r.scheme == tag && r.n_ok > 0).map(|r| r.mean_time_s);
            Some((k, mean("p14")? / mean("p11")?))
        })
        .collect()
}

/// Runs the configured experiment and writes its tables under
/// `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let kind = cfg.experiment.ok_or_else(|| CliError::Config("experiment: missing".into()))?;
    let system = cfg.system()?;
    let opts = cfg.options();
    let mut summary = RunSummary::default();
    let stem = kind.name().replace('-', "_");
    match kind {
        ExperimentKind::Tradeoff => {
            let out = run_tradeoff(&system, &cfg.grids.lambda, cfg.n_trials, cfg.seed, &opts);
            summary.emit_sweep(cfg, &stem, &out)?;
        }
        ExperimentKind::SinrSweep => {
            let out = run_sinr_sweep(&system, &cfg.grids.gamma_dl_db, cfg.lambda1, cfg.n_trials, cfg.seed, &opts);
            summary.emit_sweep(cfg, &stem, &out)?;
        }
        ExperimentKind::RobustSweep => {
            let out = run_robust_sweep(
                &system,
                &cfg.grids.gamma_dl_db,
                &cfg.grids.eps,
                cfg.lambda1,
                cfg.n_trials,
                cfg.seed,
                &opts,
            );
            for r in &out.records {
                summary.lines.push(format!(
                    "{} gamma_dl_db={} eps={}: feasible rate {}",
                    r.scheme,
                    fmt_num(Some(r.gamma_dl_db)),
                    fmt_num(Some(r.eps_h)),
                    fmt_num(Some(r.feasible_rate))
                ));
            }
            summary.emit_sweep(cfg, &stem, &out)?;
        }
        ExperimentKind::Timing => {
            let recs = run_timing(
                &system,
                &cfg.grids.k,
                cfg.n_trials,
                cfg.seed,
                cfg.lambda1,
                cfg.eps,
                &cfg.n_coh,
                &opts,
            );
            summary.emit(cfg, &stem, &recs)?;
            for (k, ratio) in timing_ratios(&recs) {
                summary.lines.push(format!("K={k}: robust CI / robust conventional time ratio {}", fmt_num(Some(ratio))));
            }
        }
        ExperimentKind::Ser => {
            let recs = run_ser_validation(&system, &cfg.grids.gamma_dl_db, &cfg.ser_options(), &opts);
            summary.emit(cfg, &stem, &recs)?;
            for r in &recs {
                summary.lines.push(format!(
                    "gamma_dl_db={}: SER {} ({} errors in {} symbols)",
                    fmt_num(Some(r.gamma_dl_db)),
                    fmt_num(Some(r.ser)),
                    r.n_errors,
                    r.n_symbols
                ));
            }
            if !recs.is_empty() && recs.iter().all(|r| r.n_symbols == 0) {
                return Err(CliError::AllInfeasible);
            }
        }
        ExperimentKind::Validate => {
            let recs = run_validation(&system, cfg.n_trials, cfg.seed, &cfg.validation_options(), &opts);
            summary.emit(cfg, &stem, &recs)?;
            let failed = recs.iter().filter(|r| !r.report.pass).count();
            summary.lines.push(format!("{} of {} oracle checks passed", recs.len() - failed, recs.len()));
            if failed > 0 {
                return Err(CliError::OracleFailure(failed));
            }
        }
        ExperimentKind::Complexity => {
            let recs = cfg
                .schemes
                .iter()
                .map(|s| {
                    let order = complexity_order(s, cfg.n, cfg.k, cfg.j).map_err(|e| CliError::Config(format!("schemes: {e}")))?;
                    Ok(ComplexityRecord {
                        scheme: s.clone(),
                        n: cfg.n,
                        k: cfg.k,
                        j: cfg.j,
                        order,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            summary.emit(cfg, &stem, &recs)?;
        }
    }
    Ok(summary)
}

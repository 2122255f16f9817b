//! Run configuration: a TOML file with flat keys and nested grid, solver and
//! SER sections, overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fdci_core::conic::Tolerances;
use fdci_core::experiments::{ExperimentOptions, SerOptions, ValidationOptions};
use fdci_core::model::{Modulation, SystemConfig};
use fdci_core::robust::{LmiForm, RobustOptions, SiBound};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One experiment per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tradeoff,
    SinrSweep,
    RobustSweep,
    Timing,
    Ser,
    Validate,
    Complexity,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Tradeoff => "tradeoff",
            ExperimentKind::SinrSweep => "sinr-sweep",
            ExperimentKind::RobustSweep => "robust-sweep",
            ExperimentKind::Timing => "timing",
            ExperimentKind::Ser => "ser",
            ExperimentKind::Validate => "validate",
            ExperimentKind::Complexity => "complexity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub lambda: Vec<f64>,
    pub gamma_dl_db: Vec<f64>,
    pub eps: Vec<f64>,
    /// Downlink user counts for timing runs.
    pub k: Vec<usize>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            lambda: (0..=10).map(|i| i as f64 / 10.0).collect(),
            gamma_dl_db: (0..=4).map(|i| 5.0 * i as f64).collect(),
            eps: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            k: vec![2, 4, 6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub feasibility: f64,
    pub gap: f64,
    pub max_iter: u32,
    pub lmi_form: LmiForm,
    pub si_bound: SiBound,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        SolverConfig {
            feasibility: t.feasibility,
            gap: t.gap,
            max_iter: t.max_iter,
            lmi_form: LmiForm::default(),
            si_bound: SiBound::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SerConfig {
    pub n_symbols: usize,
    pub noise_draws: usize,
    pub noise_scale: f64,
}

impl Default for SerConfig {
    fn default() -> Self {
        let s = SerOptions::default();
        SerConfig {
            n_symbols: s.n_symbols,
            noise_draws: s.noise_draws,
            noise_scale: s.noise_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Option<ExperimentKind>,
    #[serde(alias = "N")]
    pub n: usize,
    #[serde(alias = "K")]
    pub k: usize,
    #[serde(alias = "J")]
    pub j: usize,
    /// "bpsk", "qpsk", "8psk", "<M>psk" or "16qam".
    pub modulation: String,
    pub gamma_dl_db: f64,
    pub gamma_ul_db: f64,
    pub sigma_dl: f64,
    pub sigma_ul: f64,
    pub si_variance: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    /// λ₁ for the SINR, robust and timing sweeps.
    pub lambda1: f64,
    /// Error bound used by timing runs.
    pub eps: f64,
    pub n_coh: Vec<usize>,
    /// Schemes evaluated by `complexity`.
    pub schemes: Vec<String>,
    pub n_probes: usize,
    pub probe_step: f64,
    pub grids: Grids,
    pub solver: SolverConfig,
    pub ser: SerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: None,
            n: 9,
            k: 6,
            j: 3,
            modulation: "qpsk".into(),
            gamma_dl_db: 10.0,
            gamma_ul_db: 0.0,
            sigma_dl: 1.0,
            sigma_ul: 1.0,
            si_variance: 1.0,
            n_trials: 100,
            seed: 0,
            output_dir: PathBuf::from("results"),
            formats: vec![Format::Csv, Format::Json],
            lambda1: 0.9,
            eps: 0.1,
            n_coh: vec![14, 70],
            schemes: vec!["p3-sdp".into(), "p6".into(), "p11".into(), "p14".into()],
            n_probes: 100,
            probe_step: 1e-2,
            grids: Grids::default(),
            solver: SolverConfig::default(),
            ser: SerConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub modulation: Option<String>,
    #[arg(long)]
    pub gamma_dl_db: Option<f64>,
    #[arg(long)]
    pub gamma_ul_db: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Output formats (repeatable).
    #[arg(long, value_enum)]
    pub format: Vec<Format>,
}

pub fn parse_modulation(s: &str) -> Result<Modulation, CliError> {
    let lower = s.to_ascii_lowercase();
    let bad = || CliError::Config(format!("modulation: unknown value `{s}`"));
    match lower.as_str() {
        "bpsk" => Ok(Modulation::Psk(2)),
        "qpsk" => Ok(Modulation::Psk(4)),
        "16qam" | "qam16" => Ok(Modulation::Qam16),
        other => {
            let m = other.strip_suffix("psk").ok_or_else(bad)?;
            m.parse::<u32>().map(Modulation::Psk).map_err(|_| bad())
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }

    fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($field:ident, $val:expr) => {
                if let Some(v) = $val.clone() {
                    self.$field = v;
                }
            };
        }
        set!(n, o.n);
        set!(k, o.k);
        set!(j, o.j);
        set!(modulation, o.modulation);
        set!(gamma_dl_db, o.gamma_dl_db);
        set!(gamma_ul_db, o.gamma_ul_db);
        set!(n_trials, o.trials);
        set!(seed, o.seed);
        set!(output_dir, o.out);
        set!(lambda1, o.lambda1);
        set!(eps, o.eps);
        if !o.format.is_empty() {
            self.formats = o.format.clone();
        }
    }

    /// System parameters with every dB value converted exactly as 10^(dB/10).
    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let mut cfg = SystemConfig::uniform(
            self.n,
            self.k,
            self.j,
            self.gamma_dl_db,
            self.gamma_ul_db,
            parse_modulation(&self.modulation)?,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        cfg.sigma_dl = vec![self.sigma_dl; self.k];
        cfg.sigma_ul = self.sigma_ul;
        cfg.si_variance = self.si_variance;
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system()?;
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.grids.lambda.iter().copied().all(unit) || !unit(self.lambda1) {
            return bad("lambda: weights must lie in [0, 1]");
        }
        if self.grids.eps.iter().chain([&self.eps]).any(|e| !e.is_finite() || *e < 0.0) {
            return bad("eps: error bounds must be finite and non-negative");
        }
        if self.grids.k.contains(&0) {
            return bad("grids.k: user counts must be at least 1");
        }
        if self.n_coh.contains(&0) {
            return bad("n_coh: coherence lengths must be at least 1");
        }
        if self.formats.is_empty() {
            return bad("formats: at least one output format is required");
        }
        if !(self.solver.feasibility > 0.0 && self.solver.gap > 0.0) {
            return bad("solver: tolerances must be positive");
        }
        if !(self.ser.noise_scale.is_finite() && self.ser.noise_scale >= 0.0) {
            return bad("ser.noise_scale: must be finite and non-negative");
        }
        Ok(())
    }

    pub fn options(&self) -> ExperimentOptions {
        ExperimentOptions {
            tol: Tolerances {
                feasibility: self.solver.feasibility,
                gap: self.solver.gap,
                max_iter: self.solver.max_iter,
            },
            robust: RobustOptions {
                lmi_form: self.solver.lmi_form,
                si_bound: self.solver.si_bound,
                ..RobustOptions::default()
            },
            record_timing: self.experiment == Some(ExperimentKind::Timing),
        }
    }

    pub fn ser_options(&self) -> SerOptions {
        SerOptions {
            n_symbols: self.ser.n_symbols,
            noise_draws: self.ser.noise_draws,
            noise_scale: self.ser.noise_scale,
            seed: self.seed,
        }
    }

    pub fn validation_options(&self) -> ValidationOptions {
        ValidationOptions {
            lambda1: self.lambda1,
            n_probes: self.n_probes,
            probe_step: self.probe_step,
        }
    }
}

/// Reads the optional file, applies the flags and the experiment kind, and
/// validates the result.
pub fn parse_config(kind: ExperimentKind, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &overrides.config {
        Some(path) => read_config(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(overrides);
    cfg.experiment = Some(kind);
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

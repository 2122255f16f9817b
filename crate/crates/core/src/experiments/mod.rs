//! Monte Carlo harness: trade-off curves, SINR and robustness sweeps, timing
//! and complexity studies, and symbol-error-rate validation without
//! equalisation.
//!
//! Every trial draws its channels and symbols from a stream derived from the
//! run seed and the trial index, solves every scheme on that same draw, and
//! is merged back in trial order, so tables depend only on (config, seed).
//! Powers are averaged in watts over feasible trials and then converted to
//! dB relative to 1 W.

mod complexity;
mod ser;
mod timing;
mod validation;

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use complexity::{complexity_order, ComplexityRecord, COMPLEXITY_SCHEMES};
pub use ser::{run_ser_validation, transmit_vector, SerOptions, SerRecord};
pub use timing::{run_timing, FrameTimingModel, TimingRecord, SYMBOLS_PER_FRAME};
pub use validation::{run_validation, ValidationOptions, ValidationRecord, ANALYTIC_TOL};

use crate::conic::Tolerances;
use crate::formulations::{anchors, solve_scheme, Family, FormulationResult, Goal, Objective, Scheme, TchebycheffParams};
use crate::linear_to_db;
use crate::model::{draw_channels, draw_frame, ChannelSet, ErrorBounds, Modulation, SymbolFrame, SystemConfig};
use crate::robust::{robust_anchors, solve_robust, RobustOptions, RobustScheme};

/// Solver settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExperimentOptions {
    pub tol: Tolerances,
    pub robust: RobustOptions,
    /// Report mean solve times. Off by default because wall-clock times are
    /// the only non-reproducible output.
    pub record_timing: bool,
}

/// A compared scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    /// Conventional SDR trade-off (p3).
    Conventional,
    /// CI trade-off (p6 for PSK, p9 for 16-QAM).
    Ci,
    /// Robust conventional SDR (p11).
    RobustConventional,
    /// Robust CI for PSK (p14).
    RobustCi,
}

impl Arm {
    pub fn tag(&self, modulation: Modulation) -> &'static str {
        match (self, modulation.is_psk()) {
            (Arm::Conventional, _) => "p3",
            (Arm::Ci, true) => "p6",
            (Arm::Ci, false) => "p9",
            (Arm::RobustConventional, _) => "p11",
            (Arm::RobustCi, _) => "p14",
        }
    }
}

/// One point of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lambda1: f64,
    pub gamma_dl_db: f64,
    pub gamma_ul_db: f64,
    /// Bounds on ‖Δh_i‖, ‖Δf_j‖ and ‖ΔG‖_F, applied to every user.
    pub eps: [f64; 3],
}

impl Cell {
    fn config(&self, base: &SystemConfig) -> SystemConfig {
        let mut c = base.with_gamma_dl_db(self.gamma_dl_db);
        c.gamma_ul = vec![crate::db_to_linear(self.gamma_ul_db); base.j];
        c
    }

    fn bounds(&self, base: &SystemConfig) -> ErrorBounds {
        ErrorBounds::uniform(base.k, base.j, self.eps[0], self.eps[1], self.eps[2])
    }

    /// Key of everything the single-objective anchors depend on.
    fn anchor_key(&self) -> [u64; 5] {
        [
            self.gamma_dl_db.to_bits(),
            self.gamma_ul_db.to_bits(),
            self.eps[0].to_bits(),
            self.eps[1].to_bits(),
            self.eps[2].to_bits(),
        ]
    }
}

/// Deployed powers of one solved trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solve {
    /// Power of the transmitted beamformers (watts).
    pub dl_power: f64,
    /// Σ P_j (watts).
    pub ul_power: f64,
    pub solve_time: f64,
    /// Worst replayed constraint margin on the nominal channels.
    pub worst_margin: f64,
}

/// Outcomes of one trial, indexed [cell][arm]; `None` marks an infeasible or
/// failed solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub solves: Vec<Vec<Option<Solve>>>,
}

/// One aggregated table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scheme: String,
    pub lambda1: f64,
    pub gamma_dl_db: f64,
    pub gamma_ul_db: f64,
    pub eps_h: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    /// 10·log₁₀ of the mean feasible downlink power; present iff any trial
    /// was feasible.
    pub dl_power_db: Option<f64>,
    pub ul_power_db: Option<f64>,
    pub feasible_rate: f64,
    pub n_trials: usize,
    pub mean_solve_time_s: Option<f64>,
}

/// Savings of the second arm over the first on trials where both were
/// feasible (ratio of mean powers, in dB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSavings {
    pub baseline: String,
    pub scheme: String,
    pub lambda1: f64,
    pub gamma_dl_db: f64,
    pub eps: f64,
    pub dl_saving_db: Option<f64>,
    pub ul_saving_db: Option<f64>,
    pub n_paired: usize,
}

/// Result of a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub savings: Vec<PairedSavings>,
    pub trials: Vec<TrialOutcome>,
}

impl ExperimentOutput {
    /// Whether no solve of any arm in any cell succeeded.
    pub fn all_infeasible(&self) -> bool {
        self.records.iter().all(|r| r.feasible_rate == 0.0)
    }

    pub fn record(&self, scheme: &str, lambda1: f64, gamma_dl_db: f64, eps: f64) -> Option<&ExperimentRecord> {
        self.records
            .iter()
            .find(|r| r.scheme == scheme && r.lambda1 == lambda1 && r.gamma_dl_db == gamma_dl_db && r.eps_h == eps)
    }
}

/// Seed of trial `t`: the first word of stream `t` of the run seed.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng.next_u64()
}

pub(crate) fn realisation(config: &SystemConfig, seed: u64) -> Option<(ChannelSet, SymbolFrame)> {
    let channels = draw_channels(config, seed).ok()?;
    Some((channels, draw_frame(config.modulation, config.k, seed)))
}

fn deployed(result: &FormulationResult, started: Instant) -> Solve {
    let m = &result.margins;
    Solve {
        dl_power: result.extracted_dl_power.unwrap_or(result.dl_power),
        ul_power: result.p.iter().sum(),
        solve_time: started.elapsed().as_secs_f64(),
        worst_margin: m.worst_ci_margin().min(m.worst_dl_slack()).min(m.worst_ul_slack()),
    }
}

/// Single-objective anchors of an arm on one realisation.
pub(crate) fn arm_anchors(
    arm: Arm,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    bounds: &ErrorBounds,
    opts: &ExperimentOptions,
) -> Option<[f64; 2]> {
    let family = if cfg.modulation.is_psk() { Family::CiPsk } else { Family::CiQam };
    match arm {
        Arm::Conventional => anchors(Family::Conventional, ch, cfg, None, &opts.tol).ok(),
        Arm::Ci => anchors(family, ch, cfg, Some(frame), &opts.tol).ok(),
        Arm::RobustConventional => {
            robust_anchors(RobustScheme::P11, ch, cfg, None, bounds, &opts.robust, &opts.tol).ok()
        }
        Arm::RobustCi => robust_anchors(RobustScheme::P14, ch, cfg, Some(frame), bounds, &opts.robust, &opts.tol).ok(),
    }
}

/// Solves the trade-off problem of `arm` with weights (λ₁, 1 − λ₁).
pub(crate) fn solve_arm(
    arm: Arm,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    bounds: &ErrorBounds,
    tcheby: &TchebycheffParams,
    opts: &ExperimentOptions,
) -> Option<Solve> {
    let started = Instant::now();
    let family = if cfg.modulation.is_psk() { Family::CiPsk } else { Family::CiQam };
    let result = match arm {
        Arm::Conventional => solve_scheme(Scheme::P3, ch, cfg, None, Some(tcheby), &opts.tol),
        Arm::Ci => solve_scheme(Scheme::of(family, Objective::Tradeoff), ch, cfg, Some(frame), Some(tcheby), &opts.tol),
        Arm::RobustConventional => solve_robust(
            RobustScheme::P11,
            ch,
            cfg,
            None,
            bounds,
            Goal::Tchebycheff(*tcheby),
            &opts.robust,
            &opts.tol,
        ),
        Arm::RobustCi => solve_robust(
            RobustScheme::P14,
            ch,
            cfg,
            Some(frame),
            bounds,
            Goal::Tchebycheff(*tcheby),
            &opts.robust,
            &opts.tol,
        ),
    };
    result.ok().map(|r| deployed(&r, started))
}

fn run_trial(
    config: &SystemConfig,
    cells: &[Cell],
    arms: &[Arm],
    seed: u64,
    t: usize,
    opts: &ExperimentOptions,
) -> TrialOutcome {
    let ts = trial_seed(seed, t);
    let mut solves = vec![vec![None; arms.len()]; cells.len()];
    if let Some((ch, frame)) = realisation(config, ts) {
        let mut cache: Vec<([u64; 5], Vec<Option<[f64; 2]>>)> = Vec::new();
        for (c, cell) in cells.iter().enumerate() {
            let cfg = cell.config(config);
            let bounds = cell.bounds(config);
            let key = cell.anchor_key();
            let idx = match cache.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    let a = arms.iter().map(|&arm| arm_anchors(arm, &ch, &cfg, &frame, &bounds, opts)).collect();
                    cache.push((key, a));
                    cache.len() - 1
                }
            };
            for (a, &arm) in arms.iter().enumerate() {
                if let Some(r_star) = cache[idx].1[a] {
                    let tcheby = TchebycheffParams::new(cell.lambda1, r_star);
                    solves[c][a] = solve_arm(arm, &ch, &cfg, &frame, &bounds, &tcheby, opts);
                }
            }
        }
    }
    TrialOutcome { trial: t, seed: ts, solves }
}

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn saving_db(base: &[f64], other: &[f64]) -> Option<f64> {
    let (b, o) = (mean(base)?, mean(other)?);
    Some(linear_to_db(b) - linear_to_db(o))
}

fn aggregate(
    config: &SystemConfig,
    cells: &[Cell],
    arms: &[Arm],
    trials: Vec<TrialOutcome>,
    opts: &ExperimentOptions,
) -> ExperimentOutput {
    let n = trials.len();
    let mut records = Vec::new();
    let mut savings = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        for (a, arm) in arms.iter().enumerate() {
            let ok: Vec<&Solve> = trials.iter().filter_map(|t| t.solves[c][a].as_ref()).collect();
            let dl: Vec<f64> = ok.iter().map(|s| s.dl_power).collect();
            let ul: Vec<f64> = ok.iter().map(|s| s.ul_power).collect();
            let times: Vec<f64> = ok.iter().map(|s| s.solve_time).collect();
            records.push(ExperimentRecord {
                scheme: arm.tag(config.modulation).to_string(),
                lambda1: cell.lambda1,
                gamma_dl_db: cell.gamma_dl_db,
                gamma_ul_db: cell.gamma_ul_db,
                eps_h: cell.eps[0],
                eps_f: cell.eps[1],
                eps_g: cell.eps[2],
                dl_power_db: mean(&dl).map(linear_to_db),
                ul_power_db: mean(&ul).map(linear_to_db),
                feasible_rate: if n == 0 { 0.0 } else { ok.len() as f64 / n as f64 },
                n_trials: n,
                mean_solve_time_s: if opts.record_timing { mean(&times) } else { None },
            });
        }
        for ia in (0..arms.len() / 2).map(|p| 2 * p) {
            let ib = ia + 1;
            let both: Vec<(&Solve, &Solve)> = trials
                .iter()
                .filter_map(|t| Some((t.solves[c][ia].as_ref()?, t.solves[c][ib].as_ref()?)))
                .collect();
            let col = |f: fn(&Solve) -> f64, first: bool| -> Vec<f64> {
                both.iter().map(|(x, y)| if first { f(x) } else { f(y) }).collect()
            };
            savings.push(PairedSavings {
                baseline: arms[ia].tag(config.modulation).to_string(),
                scheme: arms[ib].tag(config.modulation).to_string(),
                lambda1: cell.lambda1,
                gamma_dl_db: cell.gamma_dl_db,
                eps: cell.eps[0],
                dl_saving_db: saving_db(&col(|s| s.dl_power, true), &col(|s| s.dl_power, false)),
                ul_saving_db: saving_db(&col(|s| s.ul_power, true), &col(|s| s.ul_power, false)),
                n_paired: both.len(),
            });
        }
    }
    ExperimentOutput { records, savings, trials }
}

/// Runs `n_trials` paired trials of `arms` over `cells`. Arms are compared
/// pairwise in the order given (first of each pair is the baseline).
pub fn run_cells(
    config: &SystemConfig,
    cells: &[Cell],
    arms: &[Arm],
    n_trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> ExperimentOutput {
    let trials: Vec<TrialOutcome> = (0..n_trials)
        .into_par_iter()
        .map(|t| run_trial(config, cells, arms, seed, t, opts))
        .collect();
    aggregate(config, cells, arms, trials, opts)
}

fn gamma_ul_db(config: &SystemConfig) -> f64 {
    config.gamma_ul.first().copied().map(linear_to_db).unwrap_or(0.0)
}

/// Power trade-off curve of the conventional and CI schemes over a λ₁ grid,
/// with the anchors of each realisation computed once and reused.
pub fn run_tradeoff(
    config: &SystemConfig,
    lambdas: &[f64],
    n_trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> ExperimentOutput {
    let g = linear_to_db(config.gamma_dl[0]);
    let cells: Vec<Cell> = lambdas
        .iter()
        .map(|&l| Cell {
            lambda1: l,
            gamma_dl_db: g,
            gamma_ul_db: gamma_ul_db(config),
            eps: [0.0; 3],
        })
        .collect();
    run_cells(config, &cells, &[Arm::Conventional, Arm::Ci], n_trials, seed, opts)
}

/// Average powers of both schemes against the downlink target at fixed λ.
pub fn run_sinr_sweep(
    config: &SystemConfig,
    gamma_dl_db: &[f64],
    lambda1: f64,
    n_trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> ExperimentOutput {
    let cells: Vec<Cell> = gamma_dl_db
        .iter()
        .map(|&g| Cell {
            lambda1,
            gamma_dl_db: g,
            gamma_ul_db: gamma_ul_db(config),
            eps: [0.0; 3],
        })
        .collect();
    run_cells(config, &cells, &[Arm::Conventional, Arm::Ci], n_trials, seed, opts)
}

/// Robust conventional against robust CI over every (Γ^DL, ε) pair, with ε
/// applied to all three error bounds. 16-QAM runs only the conventional arm.
pub fn run_robust_sweep(
    config: &SystemConfig,
    gamma_dl_db: &[f64],
    eps: &[f64],
    lambda1: f64,
    n_trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> ExperimentOutput {
    let mut cells = Vec::new();
    for &g in gamma_dl_db {
        for &e in eps {
            cells.push(Cell {
                lambda1,
                gamma_dl_db: g,
                gamma_ul_db: gamma_ul_db(config),
                eps: [e; 3],
            });
        }
    }
    let arms: &[Arm] = if config.modulation.is_psk() {
        &[Arm::RobustConventional, Arm::RobustCi]
    } else {
        &[Arm::RobustConventional]
    };
    run_cells(config, &cells, arms, n_trials, seed, opts)
}

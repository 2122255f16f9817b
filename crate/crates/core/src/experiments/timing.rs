use serde::{Deserialize, Serialize};

use super::{arm_anchors, realisation, solve_arm, trial_seed, Arm, ExperimentOptions};
use crate::formulations::TchebycheffParams;
use crate::model::{ErrorBounds, SystemConfig};

/// Symbol slots in one frame (10 subframes of 14 slots).
pub const SYMBOLS_PER_FRAME: usize = 140;

/// Optimisations needed per frame: data-independent designs are recomputed
/// once per coherence block, symbol-level designs once per slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTimingModel {
    pub symbols_per_frame: usize,
    /// Symbol slots per coherence time.
    pub n_coh: usize,
}

impl FrameTimingModel {
    pub fn new(n_coh: usize) -> Self {
        FrameTimingModel {
            symbols_per_frame: SYMBOLS_PER_FRAME,
            n_coh,
        }
    }

    pub fn optimizations_per_frame(&self, symbol_level: bool) -> f64 {
        if symbol_level {
            self.symbols_per_frame as f64
        } else {
            self.symbols_per_frame as f64 / self.n_coh as f64
        }
    }

    pub fn frame_time(&self, per_optimization: f64, symbol_level: bool) -> f64 {
        per_optimization * self.optimizations_per_frame(symbol_level)
    }
}

/// Mean wall time of one trade-off optimisation and the implied frame total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub k: usize,
    pub scheme: String,
    /// Timed solves that succeeded.
    pub n_ok: usize,
    pub mean_time_s: f64,
    pub n_coh: usize,
    pub optimizations_per_frame: f64,
    pub frame_time_s: f64,
}

/// Times the perfect-CSI and robust trade-off problems of both schemes for
/// every K in `k_grid`. Anchors are solved first and not timed. Trials run
/// sequentially so that timings do not compete for cores.
#[allow(clippy::too_many_arguments)]
pub fn run_timing(
    config: &SystemConfig,
    k_grid: &[usize],
    n_trials: usize,
    seed: u64,
    lambda1: f64,
    eps: f64,
    n_coh: &[usize],
    opts: &ExperimentOptions,
) -> Vec<TimingRecord> {
    let mut arms = vec![Arm::Conventional, Arm::Ci, Arm::RobustConventional];
    if config.modulation.is_psk() {
        arms.push(Arm::RobustCi);
    }
    let mut out = Vec::new();
    if n_trials == 0 {
        return out;
    }
    for &k in k_grid {
        let cfg = config.with_k(k);
        let mut times = vec![Vec::new(); arms.len()];
        for t in 0..n_trials {
            let Some((ch, frame)) = realisation(&cfg, trial_seed(seed, t)) else {
                continue;
            };
            for (a, &arm) in arms.iter().enumerate() {
                let bounds = if matches!(arm, Arm::Conventional | Arm::Ci) {
                    ErrorBounds::zero(k, cfg.j)
                } else {
                    ErrorBounds::uniform(k, cfg.j, eps, eps, eps)
                };
                let Some(r_star) = arm_anchors(arm, &ch, &cfg, &frame, &bounds, opts) else {
                    continue;
                };
                let tcheby = TchebycheffParams::new(lambda1, r_star);
                if let Some(s) = solve_arm(arm, &ch, &cfg, &frame, &bounds, &tcheby, opts) {
                    times[a].push(s.solve_time);
                }
            }
        }
        for (a, arm) in arms.iter().enumerate() {
            if times[a].is_empty() {
                continue;
            }
            let mean = times[a].iter().sum::<f64>() / times[a].len() as f64;
            let symbol_level = matches!(arm, Arm::Ci | Arm::RobustCi);
            for &c in n_coh {
                let model = FrameTimingModel::new(c);
                out.push(TimingRecord {
                    k,
                    scheme: arm.tag(cfg.modulation).to_string(),
                    n_ok: times[a].len(),
                    mean_time_s: mean,
                    n_coh: c,
                    optimizations_per_frame: model.optimizations_per_frame(symbol_level),
                    frame_time_s: model.frame_time(mean, symbol_level),
                });
            }
        }
    }
    out
}

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{realisation, trial_seed, ExperimentOptions};
use crate::formulations::{solve_scheme, Scheme};
use crate::model::channel::complex_gaussian;
use crate::model::{Modulation, SymbolFrame, SystemConfig};
use crate::{CVector, C64};

const NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerOptions {
    /// Detected symbols per target (rounded up to whole slots of K users).
    pub n_symbols: usize,
    /// Independent noise draws per solved slot.
    pub noise_draws: usize,
    /// Multiplies every receiver noise variance; 0 gives noiseless reception.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SerOptions {
    fn default() -> Self {
        SerOptions {
            n_symbols: 10_000,
            noise_draws: 1,
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerRecord {
    pub gamma_dl_db: f64,
    pub n_symbols: usize,
    pub n_errors: usize,
    pub ser: f64,
    /// Slots whose precoder could not be computed (excluded).
    pub n_failed_slots: usize,
}

/// Physical transmit vector of a CI precoder: PSK precoders are computed in
/// the symbol frame of user 1 and are rotated onto it by d₁; QAM precoders
/// target γ·d_i directly.
pub fn transmit_vector(w: &CVector, frame: &SymbolFrame) -> CVector {
    match frame.modulation {
        Modulation::Psk(_) => w * frame.symbols[0],
        Modulation::Qam16 => w.clone(),
    }
}

/// Constellation index decided from a received sample, using only the known
/// constellation and target amplitude γ (no channel knowledge).
fn detect(r: C64, modulation: Modulation, gamma: f64) -> u32 {
    match modulation {
        Modulation::Psk(m) => {
            let step = 2.0 * PI / m as f64;
            ((r.arg() / step).round() as i64).rem_euclid(m as i64) as u32
        }
        Modulation::Qam16 => {
            let level = |x: f64| {
                let v = x * 10f64.sqrt() / gamma;
                if v < -2.0 {
                    0
                } else if v < 0.0 {
                    1
                } else if v < 2.0 {
                    2
                } else {
                    3
                }
            };
            4 * level(r.re) + level(r.im)
        }
    }
}

/// Symbol error rate of downlink CI precoding without equalisation: each
/// slot draws channels and symbols, solves the CI downlink-power problem,
/// adds receiver noise to hᵢᴴx and detects by decision region.
pub fn run_ser_validation(
    config: &SystemConfig,
    gamma_dl_db: &[f64],
    ser: &SerOptions,
    opts: &ExperimentOptions,
) -> Vec<SerRecord> {
    let k = config.k;
    let draws = ser.noise_draws.max(1);
    let slots = ser.n_symbols.div_ceil(k * draws);
    let scheme = if config.modulation.is_psk() { Scheme::P4 } else { Scheme::P7 };
    let per_slot: Vec<Vec<Option<usize>>> = (0..slots)
        .into_par_iter()
        .map(|s| {
            let ts = trial_seed(ser.seed, s);
            let Some((ch, frame)) = realisation(config, ts) else {
                return vec![None; gamma_dl_db.len()];
            };
            gamma_dl_db
                .iter()
                .map(|&g| {
                    let cfg = config.with_gamma_dl_db(g);
                    let result = solve_scheme(scheme, &ch, &cfg, Some(&frame), None, &opts.tol).ok()?;
                    let x = transmit_vector(result.w_aggregate.as_ref()?, &frame);
                    let thresholds = cfg.thresholds();
                    // Same noise for every target so the curves are paired.
                    let mut rng = ChaCha8Rng::seed_from_u64(ts);
                    rng.set_stream(NOISE_STREAM);
                    let mut errors = 0;
                    for _ in 0..draws {
                        for (i, h) in ch.h.iter().enumerate() {
                            let noise = complex_gaussian(&mut rng, cfg.sigma_dl[i] * ser.noise_scale);
                            let r = h.dotc(&x) + noise;
                            if detect(r, cfg.modulation, thresholds[i]) != frame.indices[i] % cfg.modulation.order() {
                                errors += 1;
                            }
                        }
                    }
                    Some(errors)
                })
                .collect()
        })
        .collect();
    gamma_dl_db
        .iter()
        .enumerate()
        .map(|(gi, &g)| {
            let ok: Vec<usize> = per_slot.iter().filter_map(|v| v[gi]).collect();
            let n_symbols = ok.len() * k * draws;
            let n_errors: usize = ok.iter().sum();
            SerRecord {
                gamma_dl_db: g,
                n_symbols,
                n_errors,
                ser: if n_symbols == 0 { 0.0 } else { n_errors as f64 / n_symbols as f64 },
                n_failed_slots: slots - ok.len(),
            }
        })
        .collect()
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{realisation, trial_seed, ExperimentOptions};
use crate::formulations::{anchors, solve_scheme, Family, FormulationResult, Objective, Scheme, TchebycheffParams};
use crate::model::{ChannelSet, Modulation, SymbolFrame, SystemConfig};
use crate::oracles::{
    analytic_single_user, constraint_replay, design_of, feasible_point_probe, instance_digest, OracleReport,
    ProbeObjective, ProbeProblem,
};
use crate::CMatrix;

/// Relative tolerance of the single-user closed-form check.
pub const ANALYTIC_TOL: f64 = 1e-7;

/// One oracle verdict of the validation battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub trial: usize,
    pub scheme: String,
    #[serde(flatten)]
    pub report: OracleReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub lambda1: f64,
    pub n_probes: usize,
    pub probe_step: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            lambda1: 0.5,
            n_probes: 100,
            probe_step: 1e-2,
        }
    }
}

fn single_user_checks(ch: &ChannelSet, config: &SystemConfig, opts: &ExperimentOptions) -> Vec<(String, OracleReport)> {
    let n = config.n;
    let mut cfg = config.with_k(1);
    cfg.j = 0;
    cfg.gamma_ul.clear();
    let single = ChannelSet {
        h: vec![ch.h[0].clone()],
        f: CMatrix::zeros(n, 0),
        g: CMatrix::zeros(n, n),
    };
    let (gamma, sigma2) = (cfg.gamma_dl[0], cfg.sigma_dl[0]);
    let mut out = Vec::new();
    let mut check = |scheme: Scheme, frame: Option<&SymbolFrame>, energy: f64| {
        let oracle = analytic_single_user(&single.h[0], gamma, sigma2) * energy;
        let digest = instance_digest(&single, &cfg, frame);
        if let Ok(r) = solve_scheme(scheme, &single, &cfg, frame, None, &opts.tol) {
            let value = r.extracted_dl_power.unwrap_or(r.dl_power);
            let mut rep = OracleReport::compare("analytic_single_user", digest, oracle, value, ANALYTIC_TOL);
            if r.rank_one == Some(false) {
                rep.pass = false;
                rep.warnings.push("relaxation is not rank one".into());
            }
            out.push((scheme.to_string(), rep));
        }
    };
    check(Scheme::P1, None, 1.0);
    match cfg.modulation {
        Modulation::Psk(_) => {
            let frame = SymbolFrame::from_indices(cfg.modulation, vec![0]);
            check(Scheme::P4, Some(&frame), 1.0);
        }
        Modulation::Qam16 => {
            // Interior point at levels (+1, +1): |d|² = 0.2.
            let frame = SymbolFrame::from_indices(Modulation::Qam16, vec![10]);
            check(Scheme::P7, Some(&frame), frame.symbols[0].norm_sqr());
        }
    }
    out
}

fn solved(
    scheme: Scheme,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    frame: &SymbolFrame,
    lambda1: f64,
    opts: &ExperimentOptions,
) -> Option<(FormulationResult, Option<TchebycheffParams>)> {
    let frame = (scheme.family() != Family::Conventional).then_some(frame);
    let tch = match scheme.objective() {
        Objective::Tradeoff => Some(TchebycheffParams::new(lambda1, anchors(scheme.family(), ch, cfg, frame, &opts.tol).ok()?)),
        _ => None,
    };
    let r = solve_scheme(scheme, ch, cfg, frame, tch.as_ref(), &opts.tol).ok()?;
    Some((r, tch))
}

/// Runs the oracle battery on `n_trials` realisations: the single-user
/// closed form, constraint replay of every perfect-CSI scheme matching the
/// modulation, and feasible-point probes on the PSK and conventional optima.
pub fn run_validation(
    config: &SystemConfig,
    n_trials: usize,
    seed: u64,
    validation: &ValidationOptions,
    opts: &ExperimentOptions,
) -> Vec<ValidationRecord> {
    let ci = if config.modulation.is_psk() { Family::CiPsk } else { Family::CiQam };
    let schemes: Vec<Scheme> = [Family::Conventional, ci]
        .iter()
        .flat_map(|&f| [Objective::Downlink, Objective::Uplink, Objective::Tradeoff].map(|o| Scheme::of(f, o)))
        .collect();
    let per_trial: Vec<Vec<ValidationRecord>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::new();
            let ts = trial_seed(seed, t);
            let Some((ch, frame)) = realisation(config, ts) else {
                return out;
            };
            let push = |out: &mut Vec<ValidationRecord>, scheme: String, report| {
                out.push(ValidationRecord { trial: t, scheme, report })
            };
            for (scheme, rep) in single_user_checks(&ch, config, opts) {
                push(&mut out, scheme, rep);
            }
            for &scheme in &schemes {
                let Some((r, tch)) = solved(scheme, &ch, config, &frame, validation.lambda1, opts) else {
                    continue;
                };
                let f = (scheme.family() != Family::Conventional).then_some(&frame);
                let design = design_of(&r);
                if let Ok(rep) = constraint_replay(&design, &ch, config, f) {
                    push(&mut out, scheme.to_string(), rep);
                }
                let projectable = scheme.family() != Family::CiQam;
                if projectable && validation.n_probes > 0 && r.rank_one != Some(false) {
                    let objective = match (scheme.objective(), tch) {
                        (Objective::Downlink, _) => ProbeObjective::Downlink,
                        (Objective::Uplink, _) => ProbeObjective::Uplink,
                        (Objective::Tradeoff, Some(p)) => ProbeObjective::Tchebycheff {
                            lambda: p.lambda,
                            r_star: p.r_star,
                        },
                        (Objective::Tradeoff, None) => continue,
                    };
                    let problem = ProbeProblem {
                        channels: &ch,
                        config,
                        frame: f,
                        objective,
                    };
                    let probe_seed = ts ^ scheme as u64;
                    if let Ok(rep) = feasible_point_probe(&problem, &design, validation.n_probes, validation.probe_step, probe_seed) {
                        push(&mut out, scheme.to_string(), rep);
                    }
                }
            }
            out
        })
        .collect();
    per_trial.into_iter().flatten().collect()
}

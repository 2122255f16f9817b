use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formulations::FormulationResult;
use crate::model::{
    evaluate_design, perturb_channels, zf_receivers, ChannelSet, ConstraintReport, Design, ErrorBounds, ModelError,
    PerturbationMode, SymbolFrame, SystemConfig,
};

/// Outcome of a sampled worst-case check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseReport {
    pub n_samples: usize,
    /// Smallest downlink margin seen: CI margin for CI designs, SINR − Γ for
    /// conventional ones.
    pub min_margin: f64,
    /// Smallest uplink SINR − Γ seen (+∞ without uplink users).
    pub min_sinr_slack: f64,
    /// Largest deviation on pinned QAM components.
    pub max_equality: f64,
    /// Samples with any constraint worse than the tolerance.
    pub violations: usize,
}

/// The design a result deploys.
pub fn deployed_design(result: &FormulationResult) -> Design {
    match &result.w_aggregate {
        Some(w) => Design::Ci {
            w: w.clone(),
            p: result.p.clone(),
        },
        None => Design::Conventional {
            w: result.beamformers.clone(),
            p: result.p.clone(),
        },
    }
}

fn sample_seed(seed: u64, s: usize) -> u64 {
    seed ^ (s as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Re-evaluates a design on `n_samples` perturbed channel sets (alternating
/// uniform-in-ball and on-the-shell errors) with the receivers fixed by the
/// nominal uplink channel.
#[allow(clippy::too_many_arguments)]
pub fn sampled_worst_case_check(
    result: &FormulationResult,
    nominal: &ChannelSet,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
    bounds: &ErrorBounds,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<WorstCaseReport, ModelError> {
    let design = deployed_design(result);
    let u = zf_receivers(&nominal.f)?;
    let reports: Vec<ConstraintReport> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mode = if s % 2 == 0 { PerturbationMode::Shell } else { PerturbationMode::Ball };
            let ch = perturb_channels(nominal, bounds, sample_seed(seed, s), mode);
            evaluate_design(&design, &ch, &u, config, frame)
        })
        .collect::<Result<_, _>>()?;
    let mut out = WorstCaseReport {
        n_samples,
        min_margin: f64::INFINITY,
        min_sinr_slack: f64::INFINITY,
        max_equality: 0.0,
        violations: 0,
    };
    for r in &reports {
        out.min_margin = out.min_margin.min(r.worst_ci_margin()).min(r.worst_dl_slack());
        out.min_sinr_slack = out.min_sinr_slack.min(r.worst_ul_slack());
        out.max_equality = out.max_equality.max(r.worst_equality());
        if !r.passes(tol) {
            out.violations += 1;
        }
    }
    Ok(out)
}

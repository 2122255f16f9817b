//! Correctness oracles that share no code with the problem builders: closed
//! forms, feasible-point probes and constraint replay through the system-model
//! evaluators only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::formulations::FormulationResult;
use crate::model::channel::complex_gaussian;
use crate::model::{
    closed_form_ul_power, evaluate_design, zf_receivers, ChannelSet, CiGeometry, Design, ModelError, SymbolFrame,
    SystemConfig,
};
use crate::{CVector, C64};

/// Margin tolerance of [`constraint_replay`].
pub const REPLAY_MARGIN_TOL: f64 = 1e-6;
/// Tolerance on pinned 16-QAM components in [`constraint_replay`].
pub const REPLAY_EQUALITY_TOL: f64 = 1e-7;
/// Relative objective improvement that counts a probe as improving.
pub const PROBE_IMPROVEMENT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle: String,
    /// SHA-256 of the channels, configuration and symbols.
    pub instance_digest: String,
    pub oracle_value: f64,
    pub artifact_value: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Worst value per constraint family (replay) or probe counters.
    pub details: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl OracleReport {
    /// Report comparing a closed-form value with an artifact value at a
    /// relative tolerance, with an absolute floor of 1e-12.
    pub fn compare(oracle: &str, digest: String, oracle_value: f64, artifact_value: f64, tolerance: f64) -> Self {
        let abs_gap = (artifact_value - oracle_value).abs();
        let rel_gap = if oracle_value == 0.0 { abs_gap } else { abs_gap / oracle_value.abs() };
        OracleReport {
            oracle: oracle.into(),
            instance_digest: digest,
            oracle_value,
            artifact_value,
            abs_gap,
            rel_gap,
            tolerance,
            pass: rel_gap <= tolerance || abs_gap <= 1e-12,
            details: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Hex SHA-256 of an instance.
pub fn instance_digest(channels: &ChannelSet, config: &SystemConfig, frame: Option<&SymbolFrame>) -> String {
    let mut h = Sha256::new();
    h.update(channels.to_bytes());
    h.update(format!("{config:?}").as_bytes());
    if let Some(f) = frame {
        for i in &f.indices {
            h.update(i.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Minimum downlink power of a single user without uplink: Γσ²/‖h‖².
pub fn analytic_single_user(h: &CVector, gamma: f64, sigma2: f64) -> f64 {
    gamma * sigma2 / h.norm_squared()
}

/// Objective a probe is judged on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeObjective {
    Downlink,
    Uplink,
    /// max_a λ_a(R_a − R_a*).
    Tchebycheff { lambda: [f64; 2], r_star: [f64; 2] },
}

impl ProbeObjective {
    fn value(&self, design: &Design) -> f64 {
        let r = [design.dl_power(), design.p().iter().sum()];
        match self {
            ProbeObjective::Downlink => r[0],
            ProbeObjective::Uplink => r[1],
            ProbeObjective::Tchebycheff { lambda, r_star } => {
                (lambda[0] * (r[0] - r_star[0])).max(lambda[1] * (r[1] - r_star[1]))
            }
        }
    }

    /// Magnitude against which improvements are measured.
    fn scale(&self, design: &Design) -> f64 {
        let r = [design.dl_power(), design.p().iter().sum::<f64>()];
        let v = match self {
            ProbeObjective::Downlink => r[0],
            ProbeObjective::Uplink => r[1],
            ProbeObjective::Tchebycheff { lambda, .. } => (lambda[0] * r[0]).max(lambda[1] * r[1]),
        };
        v.abs().max(1e-12)
    }
}

/// Instance and objective of a probe run.
#[derive(Debug, Clone, Copy)]
pub struct ProbeProblem<'a> {
    pub channels: &'a ChannelSet,
    pub config: &'a SystemConfig,
    pub frame: Option<&'a SymbolFrame>,
    pub objective: ProbeObjective,
}

/// The deployed design of a perfect-CSI result.
pub fn design_of(result: &FormulationResult) -> Design {
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

/// Smallest common factor c with every downlink constraint of c·w met with
/// equality at its tightest user; `None` when no positive scaling works.
fn feasibility_scale(design: &Design, problem: &ProbeProblem) -> Option<f64> {
    let cfg = problem.config;
    let ch = problem.channels;
    let mut c2 = 0.0f64;
    match design {
        Design::Conventional { w, .. } => {
            for (i, h) in ch.h.iter().enumerate() {
                let gains: Vec<f64> = w.iter().map(|wk| h.dotc(wk).norm_sqr()).collect();
                let interference: f64 = gains.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, g)| g).sum();
                let room = gains[i] - cfg.gamma_dl[i] * interference;
                if room <= 0.0 {
                    return None;
                }
                c2 = c2.max(cfg.gamma_dl[i] * cfg.sigma_dl[i] / room);
            }
        }
        Design::Ci { w, .. } => {
            let frame = problem.frame?;
            if !frame.modulation.is_psk() {
                return None;
            }
            let geo = CiGeometry::new(cfg);
            for (i, h) in ch.h.iter().enumerate() {
                let y = frame.rotation(i) * h.dotc(w);
                let (need, have) = if geo.is_half_plane() {
                    (geo.thresholds[i], y.re)
                } else {
                    let t = geo.theta.tan();
                    (geo.thresholds[i] * t, y.re * t - y.im.abs())
                };
                if have <= 0.0 {
                    return None;
                }
                let c = need / have;
                c2 = c2.max(c * c);
            }
        }
    }
    Some(c2.sqrt())
}

fn perturb(v: &CVector, step: f64, rng: &mut ChaCha8Rng) -> CVector {
    let d = CVector::from_fn(v.len(), |_, _| complex_gaussian(rng, 1.0));
    let size = step * v.norm().max(f64::MIN_POSITIVE);
    let norm = d.norm();
    v + d * C64::new(size / norm, 0.0)
}

/// Random feasible neighbours of `design`: every beamformer is perturbed by
/// `step`·‖w‖, the result is rescaled onto the downlink constraint boundary
/// and given the minimal zero-forcing uplink powers. The oracle fails when
/// any neighbour beats the design's objective by more than
/// [`PROBE_IMPROVEMENT_TOL`] relative to the powers the objective weighs. 16-QAM designs cannot be projected
/// by rescaling and count as projection failures.
pub fn feasible_point_probe(
    problem: &ProbeProblem,
    design: &Design,
    n_probes: usize,
    step: f64,
    seed: u64,
) -> Result<OracleReport, ModelError> {
    let u = zf_receivers(&problem.channels.f)?;
    let digest = instance_digest(problem.channels, problem.config, problem.frame);
    let artifact = problem.objective.value(design);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let (mut improving, mut failures) = (0usize, 0usize);
    let scale = problem.objective.scale(design);
    for _ in 0..n_probes {
        let moved: Vec<CVector> = design.beamformers().iter().map(|w| perturb(w, step, &mut rng)).collect();
        let candidate = match design {
            Design::Conventional { .. } => Design::Conventional {
                w: moved,
                p: Vec::new(),
            },
            Design::Ci { .. } => Design::Ci {
                w: moved[0].clone(),
                p: Vec::new(),
            },
        };
        let Some(c) = feasibility_scale(&candidate, problem) else {
            failures += 1;
            continue;
        };
        let ws: Vec<CVector> = candidate.beamformers().iter().map(|w| w * C64::new(c, 0.0)).collect();
        let p = closed_form_ul_power(&ws, &problem.channels.g, &u, problem.config);
        let projected = match design {
            Design::Conventional { .. } => Design::Conventional { w: ws, p },
            Design::Ci { .. } => Design::Ci { w: ws[0].clone(), p },
        };
        let report = evaluate_design(&projected, problem.channels, &u, problem.config, problem.frame)?;
        if !report.passes(1e-9 * (1.0 + problem.config.gamma_dl.iter().fold(0.0f64, |a, b| a.max(*b)))) {
            failures += 1;
            continue;
        }
        let value = problem.objective.value(&projected);
        best = best.min(value);
        if artifact - value > PROBE_IMPROVEMENT_TOL * scale {
            improving += 1;
        }
    }
    let mut warnings = Vec::new();
    if n_probes == 0 {
        warnings.push("no probes requested; pass is vacuous".to_string());
    }
    if failures == n_probes && n_probes > 0 {
        warnings.push("every probe failed to project".to_string());
    }
    if !best.is_finite() {
        best = artifact;
    }
    let gap = artifact - best;
    Ok(OracleReport {
        oracle: "feasible_point_probe".into(),
        instance_digest: digest,
        oracle_value: best,
        artifact_value: artifact,
        abs_gap: gap,
        rel_gap: gap / scale,
        tolerance: PROBE_IMPROVEMENT_TOL,
        pass: improving == 0,
        details: vec![
            ("probes".into(), n_probes as f64),
            ("improving".into(), improving as f64),
            ("projection_failures".into(), failures as f64),
        ],
        warnings,
    })
}

/// Re-evaluates every constraint of `design` from the raw channels with
/// freshly computed zero-forcing receivers and reports the worst value per
/// family.
pub fn constraint_replay(
    design: &Design,
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
) -> Result<OracleReport, ModelError> {
    let u = zf_receivers(&channels.f)?;
    let r = evaluate_design(design, channels, &u, config, frame)?;
    let families = [
        ("dl_sinr_slack", r.worst_dl_slack()),
        ("ci_margin", r.worst_ci_margin()),
        ("ul_sinr_slack", r.worst_ul_slack()),
        ("qam_equality", r.worst_equality()),
    ];
    let worst = r.worst_dl_slack().min(r.worst_ci_margin()).min(r.worst_ul_slack());
    let pass = worst >= -REPLAY_MARGIN_TOL && r.worst_equality() <= REPLAY_EQUALITY_TOL;
    Ok(OracleReport {
        oracle: "constraint_replay".into(),
        instance_digest: instance_digest(channels, config, frame),
        oracle_value: worst.min(0.0),
        artifact_value: 0.0,
        abs_gap: (-worst).max(0.0).max(r.worst_equality()),
        rel_gap: (-worst).max(0.0).max(r.worst_equality()),
        tolerance: REPLAY_MARGIN_TOL,
        pass,
        details: families
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        warnings: Vec::new(),
    })
}

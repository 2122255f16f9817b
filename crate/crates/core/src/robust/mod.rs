//! Worst-case robust trade-off problems under norm-bounded CSI errors: the
//! conventional S-procedure SDR (p11) and the real-decomposed CI multicast
//! problem for PSK (p14), plus sampled verification of their designs.
//!
//! The zero-forcing receivers are fixed by the nominal uplink channel, so
//! every block that couples uplink powers with receiver terms is linear in
//! the decision variables.

mod decomposition;
mod lmi;
mod p11;
mod p14;
mod trs;
mod verify;

use serde::{Deserialize, Serialize};

pub use decomposition::{lift_real_decomposition, pi_matrix, RealDecomposition};
pub use p11::{robust_scale_to_feasibility, DownlinkMatrices, P11Vars};
pub use p14::P14Vars;
pub use trs::{max_quadratic_on_ball, min_quadratic_on_ball};
pub use verify::{deployed_design, sampled_worst_case_check, WorstCaseReport};

use crate::conic::{ExtractOptions, Tolerances};
use crate::formulations::{Formulation, FormulationError, FormulationResult, Goal, Instance};
use crate::model::{ChannelSet, ErrorBounds, ModelError, SymbolFrame, SystemConfig};

/// Size of the uplink and self-interference LMIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LmiForm {
    /// (NJ+1) uplink and (N²+1) self-interference blocks over the stacked
    /// and vectorised channels.
    Kronecker,
    /// The congruent (J+1) and (N+1) blocks on the ranges of the rank-one
    /// receiver operators.
    #[default]
    Reduced,
}

/// Growth bound of |u_jᴴ(G + ΔG)w| used by p14.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiBound {
    /// b_j ≥ ‖u_j‖‖w‖, the exact maximum over ‖ΔG‖_F ≤ 1.
    #[default]
    Default,
    /// b_j ≥ |u_jᴴw|.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobustOptions {
    pub lmi_form: LmiForm,
    pub si_bound: SiBound,
    pub extract: ExtractOptions,
}

/// Robust problem family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustScheme {
    P11,
    P14,
}

impl RobustScheme {
    pub fn tag(&self) -> &'static str {
        match self {
            RobustScheme::P11 => "p11",
            RobustScheme::P14 => "p14",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        [RobustScheme::P11, RobustScheme::P14].into_iter().find(|x| x.tag() == s)
    }
}

impl std::fmt::Display for RobustScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Radius of the stacked uplink error [Δf_1; …; Δf_J] when each Δf_j lies in
/// its own ball.
pub(crate) fn effective_uplink_radius(bounds: &ErrorBounds) -> f64 {
    bounds.eps_f.iter().map(|e| e * e).sum::<f64>().sqrt()
}

fn check_bounds(bounds: &ErrorBounds, config: &SystemConfig) -> Result<(), ModelError> {
    if bounds.eps_h.len() != config.k || bounds.eps_f.len() != config.j {
        return Err(ModelError::Dimension(format!(
            "error bounds for {} downlink and {} uplink users, expected {} and {}",
            bounds.eps_h.len(),
            bounds.eps_f.len(),
            config.k,
            config.j
        )));
    }
    let all = bounds.eps_h.iter().chain(&bounds.eps_f).chain(std::iter::once(&bounds.eps_g));
    if all.clone().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(ModelError::InvalidConfig("error bounds must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Robust conventional SDR.
pub fn build_p11(
    channels: &ChannelSet,
    config: &SystemConfig,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
) -> Result<Formulation<P11Vars>, FormulationError> {
    check_bounds(bounds, config)?;
    let inst = Instance::new(channels, config, None)?;
    Ok(p11::build(&inst, bounds, goal, opts, &DownlinkMatrices::Free))
}

/// Robust CI-PSK problem.
pub fn build_p14(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
) -> Result<Formulation<P14Vars>, FormulationError> {
    check_bounds(bounds, config)?;
    if !config.modulation.is_psk() || !frame.modulation.is_psk() {
        return Err(FormulationError::ModulationMismatch("p14".into()));
    }
    let inst = Instance::new(channels, config, Some(frame))?;
    let dec = lift_real_decomposition(channels, frame)?;
    Ok(p14::build(&inst, &dec, bounds, goal, opts))
}

/// Builds, solves and post-processes a robust scheme. p11 designs come from
/// rank-one extraction followed by a power re-optimisation along the
/// recovered directions; `p` holds those deployable uplink powers while
/// `dl_power` and `ul_power` are the relaxation's values.
#[allow(clippy::too_many_arguments)]
pub fn solve_robust(
    scheme: RobustScheme,
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
    tol: &Tolerances,
) -> Result<FormulationResult, FormulationError> {
    check_bounds(bounds, config)?;
    match scheme {
        RobustScheme::P11 => p11::solve(&Instance::new(channels, config, None)?, bounds, goal, opts, tol),
        RobustScheme::P14 => {
            let frame = frame.ok_or_else(|| FormulationError::FrameMissing("p14".into()))?;
            if !config.modulation.is_psk() || !frame.modulation.is_psk() {
                return Err(FormulationError::ModulationMismatch("p14".into()));
            }
            p14::solve(&Instance::new(channels, config, Some(frame))?, bounds, goal, opts, tol)
        }
    }
}

/// Robust single-objective anchors [R₁*, R₂*].
pub fn robust_anchors(
    scheme: RobustScheme,
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
    bounds: &ErrorBounds,
    opts: &RobustOptions,
    tol: &Tolerances,
) -> Result<[f64; 2], FormulationError> {
    let dl = solve_robust(scheme, channels, config, frame, bounds, Goal::Downlink, opts, tol)?;
    let ul = solve_robust(scheme, channels, config, frame, bounds, Goal::Uplink, opts, tol)?;
    Ok([dl.dl_power, ul.ul_power])
}

//! Perfect-CSI problems: conventional SDR beamforming (p1–p3), CI precoding
//! for PSK (p4–p6) and 16-QAM (p7–p9), each as downlink-power, uplink-power and
//! weighted-Tchebycheff variants.

mod ci_psk;
mod ci_qam;
pub(crate) mod common;
mod conventional;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ci_psk::{build_p4, build_p5, build_p6};
pub use ci_qam::{build_p7, build_p8, build_p9};
pub use common::{solve_formulation, CiVars, ConvVars, Formulation, Goal, Solved, LEXICOGRAPHIC_CAP, LEXICOGRAPHIC_WEIGHT};
pub use conventional::{build_p1, build_p2, build_p3, scale_to_feasibility, ConventionalOptions};

use crate::conic::{ConicError, SolveStatus, Tolerances};
use crate::model::{ChannelSet, ConstraintReport, ModelError, SymbolFrame, SystemConfig};
use crate::{CMatrix, CVector};

/// Weighted-Tchebycheff parameters: weights λ on the simplex and the
/// single-objective anchors R* (watts) for downlink and uplink power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TchebycheffParams {
    pub lambda: [f64; 2],
    pub r_star: [f64; 2],
}

impl TchebycheffParams {
    pub fn new(lambda1: f64, r_star: [f64; 2]) -> Self {
        TchebycheffParams {
            lambda: [lambda1, 1.0 - lambda1],
            r_star,
        }
    }
}

/// Problem family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Conventional,
    CiPsk,
    CiQam,
}

/// Scheme tags p1–p9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
}

/// Which objective a scheme minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Downlink,
    Uplink,
    Tradeoff,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::P1,
        Scheme::P2,
        Scheme::P3,
        Scheme::P4,
        Scheme::P5,
        Scheme::P6,
        Scheme::P7,
        Scheme::P8,
        Scheme::P9,
    ];

    pub fn tag(&self) -> &'static str {
        ["p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "p9"][*self as usize]
    }

    pub fn from_tag(s: &str) -> Option<Scheme> {
        Scheme::ALL.iter().copied().find(|x| x.tag() == s)
    }

    pub fn family(&self) -> Family {
        match self {
            Scheme::P1 | Scheme::P2 | Scheme::P3 => Family::Conventional,
            Scheme::P4 | Scheme::P5 | Scheme::P6 => Family::CiPsk,
            _ => Family::CiQam,
        }
    }

    pub fn objective(&self) -> Objective {
        match *self as usize % 3 {
            0 => Objective::Downlink,
            1 => Objective::Uplink,
            _ => Objective::Tradeoff,
        }
    }

    pub fn of(family: Family, objective: Objective) -> Scheme {
        let base = match family {
            Family::Conventional => 0,
            Family::CiPsk => 3,
            Family::CiQam => 6,
        };
        let off = match objective {
            Objective::Downlink => 0,
            Objective::Uplink => 1,
            Objective::Tradeoff => 2,
        };
        Scheme::ALL[base + off]
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("{scheme}: solver returned {status:?}")]
    NotOptimal { scheme: String, status: SolveStatus },
    #[error("{0}: Tchebycheff anchors are required")]
    AnchorMissing(String),
    #[error("{0}: modulation does not match the scheme")]
    ModulationMismatch(String),
    #[error("{0}: a symbol frame is required")]
    FrameMissing(String),
    #[error("unknown scheme {0}")]
    UnknownScheme(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Conic(#[from] ConicError),
}

impl FormulationError {
    pub fn status(&self) -> Option<SolveStatus> {
        match self {
            FormulationError::NotOptimal { status, .. } => Some(*status),
            _ => None,
        }
    }
}

/// Outcome of one scheme on one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulationResult {
    pub scheme: String,
    pub status: SolveStatus,
    /// Aggregate precoder (CI schemes).
    pub w_aggregate: Option<CVector>,
    /// SDR matrices W_i (conventional schemes).
    pub w_matrices: Vec<CMatrix>,
    /// Per-user beamformers recovered from the SDR (conventional schemes).
    pub beamformers: Vec<CVector>,
    /// Whether every W_i was numerically rank one.
    pub rank_one: Option<bool>,
    /// Deployable uplink powers (watts): enough for the self-interference of
    /// the transmitted beamformers.
    pub p: Vec<f64>,
    /// ‖w‖² for CI schemes, Σ tr W_i for conventional ones.
    pub dl_power: f64,
    pub ul_power: f64,
    /// Power of the recovered beamformers (conventional schemes).
    pub extracted_dl_power: Option<f64>,
    /// Optimal objective value of the final solve stage's primary objective.
    pub objective: f64,
    /// Constraints replayed with the physical evaluators.
    pub margins: ConstraintReport,
    pub solve_time: f64,
}

/// Solver-independent context shared by every builder.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub channels: &'a ChannelSet,
    pub config: &'a SystemConfig,
    pub receivers: CMatrix,
    pub frame: Option<&'a SymbolFrame>,
}

impl<'a> Instance<'a> {
    pub fn new(
        channels: &'a ChannelSet,
        config: &'a SystemConfig,
        frame: Option<&'a SymbolFrame>,
    ) -> Result<Self, ModelError> {
        Ok(Instance {
            channels,
            config,
            receivers: crate::model::zf_receivers(&channels.f)?,
            frame,
        })
    }
}

/// Builds, solves and post-processes `scheme`. Tchebycheff schemes need
/// `tcheby`; CI schemes need the symbol frame.
pub fn solve_scheme(
    scheme: Scheme,
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
    tcheby: Option<&TchebycheffParams>,
    tol: &Tolerances,
) -> Result<FormulationResult, FormulationError> {
    let inst = Instance::new(channels, config, frame)?;
    let goal = match scheme.objective() {
        Objective::Downlink => Goal::Downlink,
        Objective::Uplink => Goal::Uplink,
        Objective::Tradeoff => Goal::Tchebycheff(*tcheby.ok_or_else(|| FormulationError::AnchorMissing(scheme.to_string()))?),
    };
    match scheme.family() {
        Family::Conventional => conventional::solve(&inst, scheme, goal, &ConventionalOptions::default(), tol),
        Family::CiPsk => ci_psk::solve(&inst, scheme, goal, tol),
        Family::CiQam => ci_qam::solve(&inst, scheme, goal, tol),
    }
}

/// Single-objective anchors [R₁*, R₂*] for a family on one realisation.
pub fn anchors(
    family: Family,
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
    tol: &Tolerances,
) -> Result<[f64; 2], FormulationError> {
    let dl = solve_scheme(Scheme::of(family, Objective::Downlink), channels, config, frame, None, tol)?;
    let ul = solve_scheme(Scheme::of(family, Objective::Uplink), channels, config, frame, None, tol)?;
    Ok([dl.dl_power, ul.ul_power])
}

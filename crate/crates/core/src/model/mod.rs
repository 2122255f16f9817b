//! System model: configuration, channel draws, symbol frames, zero-forcing
//! receivers and the physical evaluators (SINR, CI margins) that formulations
//! and oracles are checked against.

pub(crate) mod channel;
mod config;
mod evaluate;
mod metrics;
mod receiver;
mod symbols;

pub use channel::{draw_channels, perturb_channels, ChannelSet, ErrorBounds, PerturbationMode};
pub use config::{Modulation, SystemConfig};
pub use evaluate::{evaluate_design, ConstraintReport, Design};
pub use metrics::{ci_margin_psk, closed_form_ul_power, dl_sinr, psk_margin, qam_residuals, si_power, ul_sinr, QamResiduals};
pub use receiver::zf_receivers;
pub use symbols::{
    classify_qam_point, draw_frame, psk_symbol, qam16_points, CiGeometry, SymbolFrame,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("uplink channel matrix is rank deficient (condition number {0:.3e})")]
    RankDeficient(f64),
    #[error("could not draw a full-rank uplink channel after {0} attempts")]
    RegenerationExhausted(usize),
    #[error("symbol {0} is not a point of the normalised 16-QAM grid")]
    NotOnGrid(crate::C64),
    #[error("operation requires PSK modulation")]
    NotPsk,
    #[error("operation requires 16-QAM modulation")]
    NotQam,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Seed used for the frame RNG stream of a trial; channels use `seed` directly.
pub(crate) const FRAME_STREAM: u64 = 1;

use super::metrics::{dl_sinr, psk_margin, qam_residuals, ul_sinr};
use super::{ChannelSet, CiGeometry, ModelError, Modulation, SymbolFrame, SystemConfig};
use crate::{CMatrix, CVector};

/// A candidate transmit design.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    /// One beamformer per downlink user.
    Conventional { w: Vec<CVector>, p: Vec<f64> },
    /// Symbol-level aggregate precoder for the given frame.
    Ci { w: CVector, p: Vec<f64> },
}

impl Design {
    pub fn p(&self) -> &[f64] {
        match self {
            Design::Conventional { p, .. } | Design::Ci { p, .. } => p,
        }
    }

    pub fn beamformers(&self) -> Vec<CVector> {
        match self {
            Design::Conventional { w, .. } => w.clone(),
            Design::Ci { w, .. } => vec![w.clone()],
        }
    }

    pub fn dl_power(&self) -> f64 {
        self.beamformers().iter().map(|w| w.norm_squared()).sum()
    }
}

/// Every constraint of a design re-evaluated from channel data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintReport {
    /// SINR_i − Γ_i (conventional designs).
    pub dl_sinr_slack: Vec<f64>,
    /// CI margins (PSK designs) or outward QAM margins.
    pub ci_margins: Vec<f64>,
    /// Absolute deviation on pinned QAM components.
    pub qam_equality: Vec<f64>,
    /// SINR_j − Γ_j.
    pub ul_sinr_slack: Vec<f64>,
}

impl ConstraintReport {
    fn min(v: &[f64]) -> f64 {
        v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn worst_dl_slack(&self) -> f64 {
        Self::min(&self.dl_sinr_slack)
    }

    pub fn worst_ci_margin(&self) -> f64 {
        Self::min(&self.ci_margins)
    }

    pub fn worst_ul_slack(&self) -> f64 {
        Self::min(&self.ul_sinr_slack)
    }

    pub fn worst_equality(&self) -> f64 {
        self.qam_equality.iter().copied().fold(0.0, f64::max)
    }

    /// Whether every family holds within `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.worst_dl_slack() >= -tol
            && self.worst_ci_margin() >= -tol
            && self.worst_ul_slack() >= -tol
            && self.worst_equality() <= tol
    }
}

/// Evaluates `design` on `channels` with receivers `u`. CI designs need the
/// symbol frame they were built for.
pub fn evaluate_design(
    design: &Design,
    channels: &ChannelSet,
    u: &CMatrix,
    config: &SystemConfig,
    frame: Option<&SymbolFrame>,
) -> Result<ConstraintReport, ModelError> {
    let mut report = ConstraintReport::default();
    let ws = design.beamformers();
    match design {
        Design::Conventional { w, .. } => {
            let s = dl_sinr(&channels.h, w, &config.sigma_dl);
            report.dl_sinr_slack = s.iter().zip(&config.gamma_dl).map(|(s, g)| s - g).collect();
        }
        Design::Ci { w, .. } => {
            let frame = frame.ok_or_else(|| ModelError::Dimension("CI design needs a frame".into()))?;
            let geometry = CiGeometry::new(config);
            for (i, h) in channels.h.iter().enumerate() {
                let y = h.dotc(w);
                match frame.modulation {
                    Modulation::Psk(_) => {
                        let m = psk_margin(frame.rotation(i) * y, geometry.theta, geometry.thresholds[i]);
                        report.ci_margins.push(m);
                    }
                    Modulation::Qam16 => {
                        let r = qam_residuals(y, frame.symbols[i], geometry.thresholds[i])?;
                        if r.margin.is_finite() {
                            report.ci_margins.push(r.margin);
                        }
                        if r.group != 4 {
                            report.qam_equality.push(r.equality);
                        }
                    }
                }
            }
        }
    }
    let s = ul_sinr(&channels.f, u, &channels.g, &ws, design.p(), config.sigma_ul);
    report.ul_sinr_slack = s.iter().zip(&config.gamma_ul).map(|(s, g)| s - g).collect();
    Ok(report)
}

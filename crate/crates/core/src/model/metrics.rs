use super::{classify_qam_point, CiGeometry, ModelError, SystemConfig};
use crate::{CMatrix, CVector, C64};

fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// Downlink SINR |h_iᴴw_i|² / (Σ_{k≠i}|h_iᴴw_k|² + σ_i²) per user.
pub fn dl_sinr(h: &[CVector], w: &[CVector], sigma_dl: &[f64]) -> Vec<f64> {
    h.iter()
        .enumerate()
        .map(|(i, hi)| {
            let gains: Vec<f64> = w.iter().map(|wk| inner(hi, wk).norm_sqr()).collect();
            let interference: f64 = gains
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, g)| g)
                .sum();
            gains[i] / (interference + sigma_dl[i])
        })
        .collect()
}

/// Self-interference power Σ_k |u_jᴴ G w_k|² seen by receiver `u`.
pub fn si_power(u: &CVector, g: &CMatrix, ws: &[CVector]) -> f64 {
    let ug = g.adjoint() * u;
    ws.iter().map(|w| inner(&ug, w).norm_sqr()).sum()
}

/// Uplink SINR per user. `ws` holds the transmitted beamformers: the single
/// aggregate precoder for CI schemes, every w_k for conventional ones.
pub fn ul_sinr(f: &CMatrix, u: &CMatrix, g: &CMatrix, ws: &[CVector], p: &[f64], sigma_ul: f64) -> Vec<f64> {
    (0..f.ncols())
        .map(|j| {
            let uj: CVector = u.column(j).into();
            let gain = |n: usize| inner(&uj, &f.column(n).into()).norm_sqr();
            let cross: f64 = (0..f.ncols()).filter(|&n| n != j).map(|n| p[n] * gain(n)).sum();
            p[j] * gain(j) / (cross + si_power(&uj, g, ws) + sigma_ul * uj.norm_squared())
        })
        .collect()
}

/// Minimal uplink powers P_j = Γ_j(Σ_k|u_jᴴGw_k|² + σ_N²‖u_j‖²) under ZF.
pub fn closed_form_ul_power(ws: &[CVector], g: &CMatrix, u: &CMatrix, config: &SystemConfig) -> Vec<f64> {
    (0..u.ncols())
        .map(|j| {
            let uj: CVector = u.column(j).into();
            config.gamma_ul[j] * (si_power(&uj, g, ws) + config.sigma_ul * uj.norm_squared())
        })
        .collect()
}

/// Margin of a rotated noiseless response ỹ against the constructive sector:
/// (Re ỹ − γ)·tanθ − |Im ỹ|, or Re ỹ − γ for a half-plane sector.
pub fn psk_margin(y_rot: C64, theta: f64, gamma: f64) -> f64 {
    if theta >= std::f64::consts::FRAC_PI_2 - 1e-12 {
        y_rot.re - gamma
    } else {
        (y_rot.re - gamma) * theta.tan() - y_rot.im.abs()
    }
}

/// CI margin of user `i` for aggregate precoder `w`; non-negative iff the
/// noiseless received point lies in the constructive sector of its symbol.
/// `rotation` is e^{j(φ_1−φ_i)} (see [`super::SymbolFrame::rotation`]).
pub fn ci_margin_psk(
    h: &CVector,
    w: &CVector,
    rotation: C64,
    geometry: &CiGeometry,
    i: usize,
) -> Result<f64, ModelError> {
    if !geometry.modulation.is_psk() {
        return Err(ModelError::NotPsk);
    }
    let y = rotation * inner(h, w);
    Ok(psk_margin(y, geometry.theta, geometry.thresholds[i]))
}

/// Constraint residuals of one 16-QAM user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamResiduals {
    pub group: u8,
    /// Largest absolute deviation over the pinned components (0 if none).
    pub equality: f64,
    /// Smallest signed slack over the outward inequalities (+∞ if none).
    pub margin: f64,
}

/// Residuals of the noiseless response `y` against target γ·d.
pub fn qam_residuals(y: C64, d: C64, gamma: f64) -> Result<QamResiduals, ModelError> {
    let group = classify_qam_point(d)?;
    let t = d * gamma;
    let eq = |a: f64, b: f64| (a - b).abs();
    let ineq = |a: f64, b: f64, s: f64| s.signum() * (a - b);
    let (equality, margin) = match group {
        1 => (eq(y.re, t.re).max(eq(y.im, t.im)), f64::INFINITY),
        2 => (eq(y.re, t.re), ineq(y.im, t.im, d.im)),
        3 => (eq(y.im, t.im), ineq(y.re, t.re, d.re)),
        _ => (0.0, ineq(y.re, t.re, d.re).min(ineq(y.im, t.im, d.im))),
    };
    Ok(QamResiduals {
        group,
        equality,
        margin,
    })
}

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::db_to_linear;

/// Downlink modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// M-ary PSK with constellation e^{j2πm/M}.
    Psk(u32),
    /// Unit-average-power 16-QAM.
    Qam16,
}

impl Modulation {
    pub fn order(&self) -> u32 {
        match self {
            Modulation::Psk(m) => *m,
            Modulation::Qam16 => 16,
        }
    }

    pub fn is_psk(&self) -> bool {
        matches!(self, Modulation::Psk(_))
    }
}

/// Antenna/user counts, noise powers, SINR targets and modulation.
///
/// All powers and targets are linear. `j = 0` is accepted as a degenerate
/// downlink-only system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    pub k: usize,
    pub j: usize,
    /// Per-downlink-user noise variance σ_i².
    pub sigma_dl: Vec<f64>,
    /// Base-station noise variance σ_N².
    pub sigma_ul: f64,
    /// Per-downlink-user SINR targets.
    pub gamma_dl: Vec<f64>,
    /// Per-uplink-user SINR targets.
    pub gamma_ul: Vec<f64>,
    /// Variance of the residual self-interference channel entries.
    pub si_variance: f64,
    pub modulation: Modulation,
}

impl SystemConfig {
    /// Same target and unit noise for every user; targets given in dB.
    pub fn uniform(
        n: usize,
        k: usize,
        j: usize,
        gamma_dl_db: f64,
        gamma_ul_db: f64,
        modulation: Modulation,
    ) -> Result<Self, ModelError> {
        let cfg = SystemConfig {
            n,
            k,
            j,
            sigma_dl: vec![1.0; k],
            sigma_ul: 1.0,
            gamma_dl: vec![db_to_linear(gamma_dl_db); k],
            gamma_ul: vec![db_to_linear(gamma_ul_db); j],
            si_variance: 1.0,
            modulation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.n == 0 || self.k == 0 {
            return bad("antenna and downlink user counts must be at least 1");
        }
        if self.j > self.n {
            return bad("ZF requires J ≤ N");
        }
        if self.sigma_dl.len() != self.k || self.gamma_dl.len() != self.k {
            return bad("per-downlink-user vectors must have length K");
        }
        if self.gamma_ul.len() != self.j {
            return bad("per-uplink-user targets must have length J");
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.sigma_dl.iter().copied().all(positive) || !positive(self.sigma_ul) {
            return bad("noise variances must be positive");
        }
        if !self.gamma_dl.iter().chain(&self.gamma_ul).copied().all(positive) {
            return bad("SINR targets must be positive");
        }
        if !(self.si_variance.is_finite() && self.si_variance >= 0.0) {
            return bad("self-interference variance must be non-negative");
        }
        if let Modulation::Psk(m) = self.modulation {
            if m < 2 || !m.is_power_of_two() {
                return bad("PSK order must be a power of two ≥ 2");
            }
        }
        Ok(())
    }

    /// Same configuration with every downlink target set to `db`.
    pub fn with_gamma_dl_db(&self, db: f64) -> Self {
        let mut c = self.clone();
        c.gamma_dl = vec![db_to_linear(db); self.k];
        c
    }

    /// Same configuration with `k` downlink users (targets and noise copied
    /// from the first user).
    pub fn with_k(&self, k: usize) -> Self {
        let mut c = self.clone();
        c.k = k;
        c.sigma_dl = vec![self.sigma_dl[0]; k];
        c.gamma_dl = vec![self.gamma_dl[0]; k];
        c
    }

    /// CI amplitude thresholds γ_i = sqrt(Γ_i σ_i²).
    pub fn thresholds(&self) -> Vec<f64> {
        self.gamma_dl
            .iter()
            .zip(&self.sigma_dl)
            .map(|(g, s)| (g * s).sqrt())
            .collect()
    }
}

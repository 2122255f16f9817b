use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::receiver::zf_receivers;
use super::{ModelError, SystemConfig};
use crate::{CMatrix, CVector, C64};

const MAX_REGENERATIONS: usize = 32;

/// One channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Downlink channels h_i, one per downlink user (length N each).
    pub h: Vec<CVector>,
    /// Uplink channels as columns f_j (N×J).
    pub f: CMatrix,
    /// Residual self-interference channel (N×N).
    pub g: CMatrix,
}

impl ChannelSet {
    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn j(&self) -> usize {
        self.f.ncols()
    }

    /// Flat little-endian byte image of every entry, used for instance digests.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut push = |z: &C64| {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        };
        self.h.iter().flat_map(|h| h.iter()).for_each(&mut push);
        self.f.iter().for_each(&mut push);
        self.g.iter().for_each(&mut push);
        out
    }
}

/// Norm bounds on the CSI errors: ‖Δh_i‖ ≤ eps_h[i], ‖Δf_j‖ ≤ eps_f[j],
/// ‖ΔG‖_F ≤ eps_g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBounds {
    pub eps_h: Vec<f64>,
    pub eps_f: Vec<f64>,
    pub eps_g: f64,
}

impl ErrorBounds {
    pub fn uniform(k: usize, j: usize, eps_h: f64, eps_f: f64, eps_g: f64) -> Self {
        ErrorBounds {
            eps_h: vec![eps_h; k],
            eps_f: vec![eps_f; j],
            eps_g,
        }
    }

    pub fn zero(k: usize, j: usize) -> Self {
        Self::uniform(k, j, 0.0, 0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.eps_h.iter().chain(&self.eps_f).all(|e| *e == 0.0) && self.eps_g == 0.0
    }
}

/// How perturbation radii are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Uniform in the closed norm ball.
    Ball,
    /// Uniform on the sphere of radius ε (worst-case shell).
    Shell,
}

pub(crate) fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Draws iid Rayleigh channels: unit-variance H and F, G with variance
/// `si_variance`. A rank-deficient F is redrawn from the same stream.
pub fn draw_channels(config: &SystemConfig, seed: u64) -> Result<ChannelSet, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k, j) = (config.n, config.k, config.j);
    for _ in 0..MAX_REGENERATIONS {
        let h = (0..k)
            .map(|_| CVector::from_fn(n, |_, _| complex_gaussian(&mut rng, 1.0)))
            .collect();
        let f = CMatrix::from_fn(n, j, |_, _| complex_gaussian(&mut rng, 1.0));
        let g = if config.si_variance == 0.0 {
            CMatrix::zeros(n, n)
        } else {
            CMatrix::from_fn(n, n, |_, _| complex_gaussian(&mut rng, config.si_variance))
        };
        if zf_receivers(&f).is_ok() {
            return Ok(ChannelSet { h, f, g });
        }
    }
    Err(ModelError::RegenerationExhausted(MAX_REGENERATIONS))
}

fn ball_sample<R: Rng>(rng: &mut R, dim: usize, radius: f64, mode: PerturbationMode) -> Vec<C64> {
    if radius == 0.0 || dim == 0 {
        return vec![C64::new(0.0, 0.0); dim];
    }
    let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng, 2.0)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let r = match mode {
        PerturbationMode::Shell => radius,
        // Uniform in a ball of real dimension 2·dim.
        PerturbationMode::Ball => radius * rng.random::<f64>().powf(1.0 / (2 * dim) as f64),
    };
    for z in &mut v {
        *z *= r / norm;
    }
    v
}

/// Returns `nominal + Δ` with every error inside its bound; deterministic in
/// `seed`.
pub fn perturb_channels(
    nominal: &ChannelSet,
    bounds: &ErrorBounds,
    seed: u64,
    mode: PerturbationMode,
) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturb_with(nominal, bounds, &mut rng, mode)
}

pub(crate) fn perturb_with<R: Rng>(
    nominal: &ChannelSet,
    bounds: &ErrorBounds,
    rng: &mut R,
    mode: PerturbationMode,
) -> ChannelSet {
    let n = nominal.n();
    let mut out = nominal.clone();
    for (i, h) in out.h.iter_mut().enumerate() {
        let d = ball_sample(rng, n, bounds.eps_h[i], mode);
        for (a, z) in d.into_iter().enumerate() {
            h[a] += z;
        }
    }
    for jj in 0..nominal.j() {
        let d = ball_sample(rng, n, bounds.eps_f[jj], mode);
        for (a, z) in d.into_iter().enumerate() {
            out.f[(a, jj)] += z;
        }
    }
    let d = ball_sample(rng, n * n, bounds.eps_g, mode);
    for (idx, z) in d.into_iter().enumerate() {
        out.g[idx] += z;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Modulation;

    fn cfg(n: usize, k: usize, j: usize) -> SystemConfig {
        SystemConfig::uniform(n, k, j, 10.0, 0.0, Modulation::Psk(4)).unwrap()
    }

    #[test]
    fn draws_are_deterministic() {
        let c = cfg(4, 2, 2);
        assert_eq!(draw_channels(&c, 7).unwrap(), draw_channels(&c, 7).unwrap());
        assert_ne!(draw_channels(&c, 7).unwrap(), draw_channels(&c, 8).unwrap());
    }

    #[test]
    fn zero_si_variance_gives_zero_matrix() {
        let mut c = cfg(3, 2, 1);
        c.si_variance = 0.0;
        let ch = draw_channels(&c, 1).unwrap();
        assert!(ch.g.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn downlink_entries_have_half_variance_per_component() {
        let c = cfg(4, 2, 2);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0.0;
        for seed in 0..10_000u64 {
            let ch = draw_channels(&c, seed).unwrap();
            for z in ch.h.iter().flat_map(|h| h.iter()) {
                sum += z.re;
                sum_sq += z.re * z.re;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sum_sq / count - mean * mean;
        assert!((var - 0.5).abs() < 0.02, "sample variance {var}");
    }

    #[test]
    fn zero_bounds_leave_channels_unchanged() {
        let c = cfg(3, 2, 2);
        let ch = draw_channels(&c, 3).unwrap();
        let p = perturb_channels(&ch, &ErrorBounds::zero(2, 2), 11, PerturbationMode::Ball);
        assert_eq!(p, ch);
    }

    #[test]
    fn ball_samples_stay_inside_and_reach_the_rim() {
        let c = cfg(3, 1, 1);
        let ch = draw_channels(&c, 3).unwrap();
        let b = ErrorBounds::uniform(1, 1, 0.1, 0.0, 0.0);
        let mut max = 0.0f64;
        for s in 0..1000 {
            let p = perturb_channels(&ch, &b, s, PerturbationMode::Ball);
            max = max.max((&p.h[0] - &ch.h[0]).norm());
        }
        assert!(max <= 0.1 + 1e-15);
        assert!(max > 0.09);
    }

    #[test]
    fn shell_samples_sit_on_the_bound() {
        let c = cfg(3, 2, 2);
        let ch = draw_channels(&c, 5).unwrap();
        let b = ErrorBounds::uniform(2, 2, 0.2, 0.1, 0.3);
        let p = perturb_channels(&ch, &b, 9, PerturbationMode::Shell);
        assert!(((&p.h[1] - &ch.h[1]).norm() - 0.2).abs() < 1e-12);
        assert!(((p.f.column(0) - ch.f.column(0)).norm() - 0.1).abs() < 1e-12);
        assert!(((&p.g - &ch.g).norm() - 0.3).abs() < 1e-12);
    }
}

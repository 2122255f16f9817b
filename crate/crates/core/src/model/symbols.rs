use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, Modulation, SystemConfig, FRAME_STREAM};
use crate::C64;

const GRID_TOL: f64 = 1e-9;

/// The M-PSK point e^{j2πm/M}.
pub fn psk_symbol(m: u32, order: u32) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * m as f64 / order as f64)
}

/// The 16 points {±1, ±3} + j{±1, ±3}, scaled to unit average power.
/// Index `4·a + b` maps to levels (L[a], L[b]) with L = [−3, −1, 1, 3].
pub fn qam16_points() -> [C64; 16] {
    const L: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let s = 10f64.sqrt();
    std::array::from_fn(|idx| C64::new(L[idx / 4] / s, L[idx % 4] / s))
}

fn level(x: f64) -> Option<u8> {
    let v = x * 10f64.sqrt();
    [1.0, 3.0]
        .iter()
        .position(|l| (v.abs() - l).abs() <= GRID_TOL * 10f64.sqrt())
        .map(|p| p as u8)
}

/// Detection-region group of a 16-QAM point: 1 interior, 2 when only the
/// imaginary part is an outer level, 3 when only the real part is, 4 corner.
pub fn classify_qam_point(d: C64) -> Result<u8, ModelError> {
    match (level(d.re), level(d.im)) {
        (Some(0), Some(0)) => Ok(1),
        (Some(0), Some(1)) => Ok(2),
        (Some(1), Some(0)) => Ok(3),
        (Some(1), Some(1)) => Ok(4),
        _ => Err(ModelError::NotOnGrid(d)),
    }
}

/// Detection-region parameters for a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiGeometry {
    pub modulation: Modulation,
    /// Half-angle of the PSK constructive sector, π/M. For 16-QAM this is
    /// unused and set to π/4.
    pub theta: f64,
    /// Amplitude thresholds γ_i = sqrt(Γ_i σ_i²).
    pub thresholds: Vec<f64>,
    /// Group of each 16-QAM point index (see [`qam16_points`]).
    pub qam_groups: [u8; 16],
}

impl CiGeometry {
    pub fn new(config: &SystemConfig) -> Self {
        let theta = match config.modulation {
            Modulation::Psk(m) => PI / m as f64,
            Modulation::Qam16 => PI / 4.0,
        };
        let pts = qam16_points();
        let qam_groups = std::array::from_fn(|i| classify_qam_point(pts[i]).expect("grid point"));
        CiGeometry {
            modulation: config.modulation,
            theta,
            thresholds: config.thresholds(),
            qam_groups,
        }
    }

    /// True when the sector is a half-plane (BPSK).
    pub fn is_half_plane(&self) -> bool {
        self.theta >= PI / 2.0 - 1e-12
    }
}

/// Downlink symbols of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub modulation: Modulation,
    /// Constellation index of each user's symbol.
    pub indices: Vec<u32>,
    pub symbols: Vec<C64>,
}

impl SymbolFrame {
    pub fn from_indices(modulation: Modulation, indices: Vec<u32>) -> Self {
        let symbols = indices
            .iter()
            .map(|&m| match modulation {
                Modulation::Psk(order) => psk_symbol(m % order, order),
                Modulation::Qam16 => qam16_points()[(m % 16) as usize],
            })
            .collect();
        SymbolFrame {
            modulation,
            indices,
            symbols,
        }
    }

    /// Phases φ_i of PSK symbols.
    pub fn phases(&self) -> Vec<f64> {
        self.symbols.iter().map(|d| d.arg()).collect()
    }

    /// Rotation factor e^{j(φ_1−φ_i)} = d_1 / d_i that takes the aggregate
    /// multicast response of user i onto its own symbol axis.
    pub fn rotation(&self, i: usize) -> C64 {
        self.symbols[0] * self.symbols[i].conj()
    }

    pub fn groups(&self) -> Result<Vec<u8>, ModelError> {
        self.symbols.iter().map(|d| classify_qam_point(*d)).collect()
    }
}

pub(crate) fn draw_frame_with<R: Rng>(modulation: Modulation, k: usize, rng: &mut R) -> SymbolFrame {
    let order = modulation.order();
    let indices = (0..k).map(|_| rng.random_range(0..order)).collect();
    SymbolFrame::from_indices(modulation, indices)
}

/// Uniform random symbols for `k` users from the frame stream of `seed`.
pub fn draw_frame(modulation: Modulation, k: usize, seed: u64) -> SymbolFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(FRAME_STREAM);
    draw_frame_with(modulation, k, &mut rng)
}

use nalgebra::{DMatrix, DVector};

use crate::formulations::common::{col, si_direction};
use crate::model::{zf_receivers, ChannelSet, ModelError, SymbolFrame};
use crate::CVector;

/// Real-valued view of the CI multicast problem over w̲ = [Re(w); Im(w)].
#[derive(Debug, Clone, PartialEq)]
pub struct RealDecomposition {
    /// Real representation of multiplication by j.
    pub pi: DMatrix<f64>,
    /// Per downlink user the row [−Im(h̃ᵢ)ᵀ, Re(h̃ᵢ)ᵀ], with h̃ᵢ the rotated
    /// channel, so that row·w̲ = Im(h̃ᵢᴴw) and row·Πw̲ = Re(h̃ᵢᴴw).
    pub h_rows: Vec<DVector<f64>>,
    /// 2×2N maps with Y_j w̲ = [Re, Im] of u_jᴴGw.
    pub y: Vec<DMatrix<f64>>,
    /// 2×2N maps with U_j w̲ = [Re, Im] of u_jᴴw.
    pub u: Vec<DMatrix<f64>>,
}

/// 2×2N matrix taking w̲ to the real and imaginary parts of aᴴw.
pub(crate) fn inner_map(a: &CVector) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(2, 2 * n, |r, c| {
        let k = c % n;
        match (r, c < n) {
            (0, true) => a[k].re,
            (0, false) => a[k].im,
            (_, true) => -a[k].im,
            (_, false) => a[k].re,
        }
    })
}

/// The 2N×2N block matrix [[0, −I], [I, 0]].
pub fn pi_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if r >= n && c + n == r {
            1.0
        } else if r < n && c == r + n {
            -1.0
        } else {
            0.0
        }
    })
}

/// Builds the real decomposition from nominal channels, zero-forcing
/// receivers and the frame's rotations.
pub fn lift_real_decomposition(channels: &ChannelSet, frame: &SymbolFrame) -> Result<RealDecomposition, ModelError> {
    if !frame.modulation.is_psk() {
        return Err(ModelError::NotPsk);
    }
    let n = channels.n();
    let u = zf_receivers(&channels.f)?;
    let h_rows = channels
        .h
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let rotated = h * frame.rotation(i).conj();
            DVector::from_fn(2 * n, |c, _| if c < n { -rotated[c].im } else { rotated[c - n].re })
        })
        .collect();
    Ok(RealDecomposition {
        pi: pi_matrix(n),
        h_rows,
        y: (0..u.ncols()).map(|j| inner_map(&si_direction(&channels.g, &u, j))).collect(),
        u: (0..u.ncols()).map(|j| inner_map(&col(&u, j))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::lift::stack;
    use crate::model::{draw_channels, draw_frame, Modulation, SystemConfig};
    use crate::C64;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn lifted_maps_agree_with_complex_side(seed in 0u64..500, w in proptest::collection::vec(-2.0f64..2.0, 8)) {
            let cfg = SystemConfig::uniform(4, 3, 2, 10.0, 0.0, Modulation::Psk(8)).unwrap();
            let ch = draw_channels(&cfg, seed).unwrap();
            let frame = draw_frame(cfg.modulation, 3, seed);
            let d = lift_real_decomposition(&ch, &frame).unwrap();
            let wz = CVector::from_fn(4, |k, _| C64::new(w[k], w[4 + k]));
            let wr = DVector::from_vec(stack(&wz));
            prop_assert!((&d.pi * (&d.pi * &wr) + &wr).norm() < 1e-15);
            let u = zf_receivers(&ch.f).unwrap();
            for j in 0..2 {
                let uj = col(&u, j);
                let si = (uj.adjoint() * &ch.g * &wz)[(0, 0)];
                prop_assert!(((&d.y[j] * &wr).norm() - si.norm()).abs() < 1e-12);
                prop_assert!(((&d.u[j] * &wr).norm() - uj.dotc(&wz).norm()).abs() < 1e-12);
            }
            for (i, h) in ch.h.iter().enumerate() {
                let y = frame.rotation(i) * h.dotc(&wz);
                prop_assert!((d.h_rows[i].dot(&(&d.pi * &wr)) - y.re).abs() < 1e-12);
                prop_assert!((d.h_rows[i].dot(&wr) - y.im).abs() < 1e-12);
            }
        }
    }
}

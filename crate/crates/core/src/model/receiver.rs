use nalgebra::SymmetricEigen;

use super::ModelError;
use crate::CMatrix;

/// Condition-number cap on FᴴF.
pub const ZF_CONDITION_CAP: f64 = 1e8;

/// Zero-forcing receivers U = F(FᴴF)⁻¹, so that column u_j satisfies
/// u_jᴴ f_n = δ_jn.
pub fn zf_receivers(f: &CMatrix) -> Result<CMatrix, ModelError> {
    let j = f.ncols();
    if j == 0 {
        return Ok(CMatrix::zeros(f.nrows(), 0));
    }
    if j > f.nrows() {
        return Err(ModelError::Dimension(format!(
            "{} uplink users exceed {} antennas",
            j,
            f.nrows()
        )));
    }
    let gram = f.adjoint() * f;
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || max / min > ZF_CONDITION_CAP {
        return Err(ModelError::RankDeficient(if min > 0.0 { max / min } else { f64::INFINITY }));
    }
    let inv = gram
        .try_inverse()
        .ok_or(ModelError::RankDeficient(f64::INFINITY))?;
    Ok(f * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_channel() {
        let f = CMatrix::identity(2, 2);
        let u = zf_receivers(&f).unwrap();
        assert!((u - CMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn scaled_identity_channel() {
        let f = CMatrix::identity(2, 2) * c(2.0);
        let u = zf_receivers(&f).unwrap();
        assert!((u.column(0)[0] - c(0.5)).norm() < 1e-15);
        assert!((u.adjoint() * &f - CMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let f = CMatrix::from_fn(3, 2, |i, _| c(i as f64 + 1.0));
        assert!(matches!(zf_receivers(&f), Err(ModelError::RankDeficient(_))));
    }

    proptest! {
        #[test]
        fn zf_identity_holds(entries in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let f = CMatrix::from_fn(4, 2, |i, j| C64::new(entries[2 * (i * 2 + j)], entries[2 * (i * 2 + j) + 1]));
            if let Ok(u) = zf_receivers(&f) {
                let e = u.adjoint() * &f - CMatrix::identity(2, 2);
                let worst = e.iter().map(|z| z.norm()).fold(0.0, f64::max);
                // Scale-aware: cond ≤ 1e8 on the Gram matrix bounds the error.
                prop_assert!(worst <= 1e-10 * (1.0 + u.norm() * f.norm()));
            }
        }
    }
}

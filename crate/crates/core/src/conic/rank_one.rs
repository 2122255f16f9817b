use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ConicError;
use crate::model::channel::complex_gaussian;
use crate::{CMatrix, CVector, C64};

/// Rank-one extraction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// λ₂/λ₁ at or below which a matrix counts as rank one.
    pub rank_tol: f64,
    pub n_randomizations: usize,
    pub seed: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            rank_tol: 1e-6,
            n_randomizations: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub vectors: Vec<CVector>,
    /// True when every matrix was numerically rank one.
    pub rank_one: bool,
    /// Σ‖w_k‖².
    pub power: f64,
}

/// Principal eigenvector scaled by √λ₁, together with λ₂/λ₁.
pub fn principal_component(w: &CMatrix) -> (CVector, f64) {
    let n = w.nrows();
    let herm = (w + w.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    let l2 = if n > 1 { eig.eigenvalues[order[1]].max(0.0) } else { 0.0 };
    let v: CVector = eig.eigenvectors.column(order[0]).into();
    let ratio = if l1 > 0.0 { l2 / l1 } else { 0.0 };
    (v * C64::new(l1.sqrt(), 0.0), ratio)
}

/// Gaussian-randomised candidate with covariance W: W^{1/2}·ξ, ξ ~ CN(0, I).
fn random_candidate(w: &CMatrix, rng: &mut ChaCha8Rng) -> CVector {
    let n = w.nrows();
    let herm = (w + w.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut out = CVector::zeros(n);
    for k in 0..n {
        let l = eig.eigenvalues[k].max(0.0);
        if l == 0.0 {
            continue;
        }
        let xi = complex_gaussian(rng, 1.0);
        out += eig.eigenvectors.column(k) * (xi * l.sqrt());
    }
    out
}

fn power(v: &[CVector]) -> f64 {
    v.iter().map(|x| x.norm_squared()).sum()
}

/// Recovers beamformers from SDR matrices.
///
/// When every matrix is rank one the scaled principal eigenvectors are
/// returned as is. Otherwise candidates (the principal components first, then
/// `n_randomizations` Gaussian draws) are passed through `repair`, which
/// returns a feasible rescaled version or `None`; the feasible candidate of
/// least power wins.
pub fn extract_rank_one(
    ws: &[CMatrix],
    opts: &ExtractOptions,
    repair: impl Fn(&[CVector]) -> Option<Vec<CVector>>,
) -> Result<Extraction, ConicError> {
    let pcs: Vec<(CVector, f64)> = ws.iter().map(principal_component).collect();
    if pcs.iter().all(|(_, r)| *r <= opts.rank_tol) {
        let vectors: Vec<CVector> = pcs.into_iter().map(|(v, _)| v).collect();
        let power = power(&vectors);
        return Ok(Extraction {
            vectors,
            rank_one: true,
            power,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<Vec<CVector>> = None;
    let consider = |cand: Vec<CVector>, best: &mut Option<Vec<CVector>>| {
        if let Some(fixed) = repair(&cand) {
            if best.as_ref().is_none_or(|b| power(&fixed) < power(b)) {
                *best = Some(fixed);
            }
        }
    };
    consider(pcs.iter().map(|(v, _)| v.clone()).collect(), &mut best);
    for _ in 0..opts.n_randomizations {
        let cand = ws.iter().map(|w| random_candidate(w, &mut rng)).collect();
        consider(cand, &mut best);
    }
    let vectors = best.ok_or(ConicError::ExtractionFailed)?;
    let power = power(&vectors);
    Ok(Extraction {
        vectors,
        rank_one: false,
        power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exact_rank_one_recovered_up_to_phase() {
        let w = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let m = &w * w.adjoint();
        let e = extract_rank_one(&[m], &ExtractOptions::default(), |_| None).unwrap();
        assert!(e.rank_one);
        let v = &e.vectors[0];
        let phase = w.dotc(v) / C64::new(w.dotc(v).norm(), 0.0);
        assert!((v - &w * phase).norm() < 1e-12);
    }

    #[test]
    fn degenerate_eigenpair() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(4.0, 0.0), c(0.0, 0.0)]));
        let e = extract_rank_one(&[m], &ExtractOptions::default(), |_| None).unwrap();
        assert!(e.rank_one);
        assert!((e.vectors[0][0].norm() - 2.0).abs() < 1e-14);
        assert!(e.vectors[0][1].norm() < 1e-14);
    }

    #[test]
    fn full_rank_takes_randomisation_path() {
        let m = CMatrix::identity(2, 2);
        // Accept anything after normalising to unit first entry magnitude.
        let repair = |v: &[CVector]| {
            let s = v[0][0].norm();
            (s > 1e-9).then(|| vec![&v[0] / C64::new(s, 0.0)])
        };
        let e = extract_rank_one(&[m.clone()], &ExtractOptions::default(), repair).unwrap();
        assert!(!e.rank_one);
        assert!(e.power >= 1.0);
        let none = extract_rank_one(&[m], &ExtractOptions::default(), |_| None);
        assert!(matches!(none, Err(ConicError::ExtractionFailed)));
    }
}

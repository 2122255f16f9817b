//! Extremes of a Hermitian quadratic form over a Euclidean ball.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::conic::lift::{lift_hermitian, stack};
use crate::{CMatrix, CVector};

/// min over ‖Δ‖ ≤ r of (h + Δ)ᴴ A (h + Δ) for Hermitian A.
pub fn min_quadratic_on_ball(a: &CMatrix, h: &CVector, r: f64) -> f64 {
    let ar = lift_hermitian(a);
    let hr = DVector::from_vec(stack(h));
    let ah = &ar * &hr;
    let base = hr.dot(&ah);
    if r <= 0.0 {
        return base;
    }
    base + trust_region_min(&ar, &ah, r)
}

/// max over ‖Δ‖ ≤ r of (h + Δ)ᴴ A (h + Δ).
pub fn max_quadratic_on_ball(a: &CMatrix, h: &CVector, r: f64) -> f64 {
    -min_quadratic_on_ball(&(-a), h, r)
}

/// min over ‖y‖ ≤ r of yᵀAy + 2bᵀy for symmetric A.
fn trust_region_min(a: &DMatrix<f64>, b: &DVector<f64>, r: f64) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let lam = eig.eigenvalues;
    let beta = eig.eigenvectors.transpose() * b;
    let value = |z: &[f64]| (0..z.len()).map(|k| lam[k] * z[k] * z[k] + 2.0 * beta[k] * z[k]).sum::<f64>();
    let at = |mu: f64| (0..lam.len()).map(|k| -beta[k] / (lam[k] + mu)).collect::<Vec<f64>>();
    let norm2 = |z: &[f64]| z.iter().map(|v| v * v).sum::<f64>();
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = lam.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let bnorm = beta.norm();
    if lmin > 1e-14 * scale {
        let z = at(0.0);
        if norm2(&z) <= r * r {
            return value(&z);
        }
    }
    let lo = (-lmin).max(0.0);
    let tiny = 1e-12 * scale;
    let singular: Vec<usize> = (0..lam.len()).filter(|&k| lam[k] + lo <= tiny).collect();
    let degenerate = singular.iter().all(|&k| beta[k].abs() <= 1e-12 * bnorm.max(1e-300));
    if degenerate && !singular.is_empty() {
        let z: Vec<f64> = (0..lam.len())
            .map(|k| if singular.contains(&k) { 0.0 } else { -beta[k] / (lam[k] + lo) })
            .collect();
        let rest = r * r - norm2(&z);
        if rest >= 0.0 {
            return value(&z) + lmin * rest;
        }
    }
    let mut lo_mu = lo;
    let mut hi_mu = lo + bnorm / r + scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo_mu + hi_mu);
        if mid <= lo_mu || mid >= hi_mu {
            break;
        }
        if norm2(&at(mid)) > r * r {
            lo_mu = mid;
        } else {
            hi_mu = mid;
        }
    }
    value(&at(hi_mu))
}

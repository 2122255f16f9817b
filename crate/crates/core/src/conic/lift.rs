//! Complex ↔ real conversions and the packed PSD layout.
//!
//! Packing: column-major lower triangle, off-diagonal entries multiplied by
//! √2, so that the packed inner product equals the trace inner product.

use nalgebra::DMatrix;

use crate::{CMatrix, CVector, C64};

/// `[Re(z); Im(z)]`.
pub fn stack(z: &CVector) -> Vec<f64> {
    z.iter().map(|v| v.re).chain(z.iter().map(|v| v.im)).collect()
}

pub fn unstack(x: &[f64]) -> CVector {
    let n = x.len() / 2;
    CVector::from_fn(n, |k, _| C64::new(x[k], x[n + k]))
}

/// [[Re W, −Im W], [Im W, Re W]].
pub fn lift_hermitian(w: &CMatrix) -> DMatrix<f64> {
    let n = w.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = w[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn unlift_hermitian(m: &DMatrix<f64>) -> CMatrix {
    let n = m.nrows() / 2;
    CMatrix::from_fn(n, n, |r, c| C64::new(m[(r, c)], m[(r + n, c)]))
}

/// Hermitian matrix from the n² parameters of a [`super::HermVar`].
pub fn herm_from_params(n: usize, p: &[f64]) -> CMatrix {
    let m = n * (n - 1) / 2;
    let mut w = CMatrix::zeros(n, n);
    let mut off = 0;
    for r in 0..n {
        w[(r, r)] = C64::new(p[r], 0.0);
    }
    for c in 0..n {
        for r in c + 1..n {
            let z = C64::new(p[n + off], p[n + m + off]);
            w[(r, c)] = z;
            w[(c, r)] = z.conj();
            off += 1;
        }
    }
    w
}

pub fn herm_to_params(w: &CMatrix) -> Vec<f64> {
    let n = w.nrows();
    let mut diag: Vec<f64> = (0..n).map(|r| w[(r, r)].re).collect();
    let mut re = Vec::new();
    let mut im = Vec::new();
    for c in 0..n {
        for r in c + 1..n {
            re.push(w[(r, c)].re);
            im.push(w[(r, c)].im);
        }
    }
    diag.extend(re);
    diag.extend(im);
    diag
}

pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

pub fn pack_sym(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(packed_len(d));
    for c in 0..d {
        for r in c..d {
            out.push(if r == c { m[(r, c)] } else { m[(r, c)] * std::f64::consts::SQRT_2 });
        }
    }
    out
}

pub fn unpack_sym(d: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for c in 0..d {
        for r in c..d {
            let x = if r == c { v[k] } else { v[k] / std::f64::consts::SQRT_2 };
            m[(r, c)] = x;
            m[(c, r)] = x;
            k += 1;
        }
    }
    m
}

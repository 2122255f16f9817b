//! S-procedure blocks shared by the robust builders.

use std::ops::Range;

use crate::conic::{CExpr, CMatExpr, LinExpr, ProblemBuilder};
use crate::formulations::common::{col, si_direction};
use crate::formulations::Instance;
use crate::{CMatrix, C64};

use super::LmiForm;

/// Constant matrix times a real scalar expression.
pub(crate) fn times(m: &CMatrix, e: &LinExpr) -> CMatExpr {
    CMatExpr::from_fn(m.nrows(), m.ncols(), |r, c| CExpr {
        re: e.scaled(m[(r, c)].re),
        im: e.scaled(m[(r, c)].im),
    })
}

/// Expected size of an S-procedure multiplier: at least `base`, and growing
/// like `coupling / eps` as the error bound shrinks.
pub(crate) fn multiplier_scale(base: f64, coupling: f64, eps: f64) -> f64 {
    let grow = if eps > 0.0 { coupling / eps } else { 0.0 };
    base.max(grow).max(1e-12)
}

/// [`multiplier_scale`] for the uplink multiplier μ_j given typical powers.
pub(crate) fn uplink_multiplier_scale(inst: &Instance, ps: &[f64], j: usize, eps: f64) -> f64 {
    let nu = col(&inst.receivers, j).norm();
    let base = inst.config.gamma_ul[j] * ps[j] * nu * nu;
    multiplier_scale(base, nu * ps[j], eps)
}

/// Real part of the single entry of a 1×1 expression.
fn scalar_re(m: &CMatExpr) -> LinExpr {
    m.get(0, 0).re.clone()
}

fn column(v: &crate::CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Robust uplink SINR of user `j`: for every stacked uplink error of norm at
/// most `eps`, Σ_n c_n P_n |u_jᴴ(f_n + Δf_n)|² ≥ `rhs`, with c_j = 1 and
/// c_n = −Γ_j otherwise. Returns the LMI side length, or `None` when `eps`
/// is zero and the nominal row is used with μ_j pinned to zero.
pub(crate) fn uplink_constraint(
    b: &mut ProblemBuilder,
    inst: &Instance,
    j: usize,
    p: &Range<usize>,
    mu: usize,
    rhs: LinExpr,
    eps: f64,
    form: LmiForm,
) -> Option<usize> {
    let cfg = inst.config;
    let (n, jj) = (cfg.n, cfg.j);
    let u = col(&inst.receivers, j);
    let coef = |m: usize| if m == j { 1.0 } else { -cfg.gamma_ul[j] };
    let gains: Vec<C64> = (0..jj).map(|m| u.dotc(&col(&inst.channels.f, m))).collect();
    let nominal = LinExpr::sum_of(
        (0..jj)
            .map(|m| LinExpr::term(p.start + m, coef(m) * gains[m].norm_sqr()))
            .collect::<Vec<_>>()
            .iter(),
    );
    if eps == 0.0 {
        b.nonneg(format!("robust uplink {j}"), vec![nominal - rhs]);
        b.zero(format!("mu {j} unused"), vec![LinExpr::var(mu)]);
        return None;
    }
    let corner = (nominal - rhs).axpy(-eps * eps, &LinExpr::var(mu));
    let m = match form {
        LmiForm::Kronecker => {
            let uu = &u * u.adjoint();
            let z = CMatExpr::from_fn(n * jj, n * jj, |r, c| {
                if r / n != c / n {
                    return CExpr::zero();
                }
                let m = r / n;
                let e = LinExpr::term(p.start + m, coef(m));
                CExpr {
                    re: e.scaled(uu[(r % n, c % n)].re),
                    im: e.scaled(uu[(r % n, c % n)].im),
                }
            });
            let f = CMatrix::from_column_slice(n * jj, 1, inst.channels.f.as_slice());
            let zf = z.right_mul(&f);
            let top = z.axpy(1.0, &CMatExpr::scaled_identity(n * jj, &LinExpr::var(mu)));
            CMatExpr::block2(&top, &zf, &zf.adjoint(), &CMatExpr::scalar(CExpr::real(corner)))
        }
        LmiForm::Reduced => {
            // Z_j = V D Vᴴ with V = I ⊗ u_j; on the range of V the block is
            // μI + ‖u‖²D, and its complement only needs μ ≥ 0.
            let nu = u.norm();
            let d = |m: usize| LinExpr::term(p.start + m, coef(m));
            CMatExpr::from_fn(jj + 1, jj + 1, |r, c| match (r < jj, c < jj) {
                (true, true) if r == c => CExpr::real(LinExpr::var(mu).axpy(nu * nu, &d(r))),
                (true, true) => CExpr::zero(),
                (true, false) => CExpr::real(d(r)).mul_const(gains[r] * nu),
                (false, true) => CExpr::real(d(c)).mul_const(gains[c].conj() * nu),
                (false, false) => CExpr::real(corner.clone()),
            })
        }
    };
    let size = m.rows;
    b.psd_hermitian(format!("robust uplink {j}"), &m);
    Some(size)
}

/// Worst-case self-interference of uplink user `j`: for every ‖ΔG‖_F ≤ eps,
/// u_jᴴ(G + ΔG) S (G + ΔG)ᴴu_j ≤ `budget`, where `budget` already has the
/// receiver noise removed. Returns the LMI side length, or `None` when `eps`
/// is zero.
pub(crate) fn si_constraint(
    b: &mut ProblemBuilder,
    inst: &Instance,
    j: usize,
    s: &CMatExpr,
    rho: usize,
    budget: LinExpr,
    eps: f64,
    form: LmiForm,
) -> Option<usize> {
    let n = inst.config.n;
    let u = col(&inst.receivers, j);
    let q = si_direction(&inst.channels.g, &inst.receivers, j);
    let qc = column(&q);
    let nominal = scalar_re(&s.congruence(&qc.adjoint()));
    if eps == 0.0 {
        b.nonneg(format!("robust si {j}"), vec![budget - nominal]);
        return None;
    }
    let rho_e = LinExpr::var(rho);
    let m = match form {
        LmiForm::Kronecker => {
            // ǧ = vec(Gᴴ); u_jᴴ G S Gᴴ u_j = ǧᴴ (conj(U_j) ⊗ S) ǧ.
            let uu = &u * u.adjoint();
            let k = CMatExpr::from_fn(n * n, n * n, |r, c| s.get(r % n, c % n).mul_const(uu[(r / n, c / n)].conj()));
            let g = &inst.channels.g;
            let gv = CMatrix::from_fn(n * n, 1, |r, _| g[(r / n, r % n)].conj());
            let kg = k.right_mul(&gv);
            let corner = (budget - scalar_re(&kg.left_mul(&gv.adjoint()))).axpy(-eps * eps, &rho_e);
            let top = CMatExpr::scaled_identity(n * n, &rho_e).axpy(-1.0, &k);
            CMatExpr::block2(&top, &kg.scaled(-1.0), &kg.adjoint().scaled(-1.0), &CMatExpr::scalar(CExpr::real(corner)))
        }
        LmiForm::Reduced => {
            // conj(U_j) ⊗ S = V S Vᴴ with V = conj(u_j) ⊗ I and Vᴴǧ = Gᴴu_j.
            let nu = u.norm();
            let sq = s.right_mul(&qc);
            let corner = (budget - nominal).axpy(-eps * eps, &rho_e);
            let top = CMatExpr::scaled_identity(n, &rho_e).axpy(-nu * nu, s);
            CMatExpr::block2(&top, &sq.scaled(-nu), &sq.adjoint().scaled(-nu), &CMatExpr::scalar(CExpr::real(corner)))
        }
    };
    let size = m.rows;
    b.psd_hermitian(format!("robust si {j}"), &m);
    Some(size)
}

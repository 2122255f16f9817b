use std::ops::Range;

use super::lmi::{multiplier_scale, si_constraint, times, uplink_constraint, uplink_multiplier_scale};
use super::trs::min_quadratic_on_ball;
use super::{effective_uplink_radius, RobustOptions};
use crate::conic::{extract_rank_one, CExpr, CMatExpr, ConicError, HermVar, LinExpr, ProblemBuilder, SolveStatus, Tolerances};
use crate::formulations::common::{c64, col, finish, magnitudes, si_direction, solve_formulation, Formulation, Goal};
use crate::formulations::{FormulationError, FormulationResult, Instance};
use crate::model::{evaluate_design, Design, ErrorBounds};
use crate::{CMatrix, CVector};

/// How the downlink covariances enter the robust SDR.
#[derive(Debug, Clone, PartialEq)]
pub enum DownlinkMatrices {
    /// Free Hermitian W_i ⪰ 0.
    Free,
    /// W_i = q_i v̂_i v̂_iᴴ for fixed unit directions and scalar powers q_i ≥ 0.
    Fixed(Vec<CVector>),
}

/// Variables of the robust conventional problem.
#[derive(Debug, Clone)]
pub struct P11Vars {
    /// W_i when the covariances are free.
    pub w: Vec<HermVar>,
    /// q_i when the directions are fixed.
    pub q: Range<usize>,
    /// Unit directions when fixed.
    pub directions: Vec<CVector>,
    pub p: Range<usize>,
    pub delta: Range<usize>,
    pub mu: Range<usize>,
    pub rho: usize,
    pub s: Range<usize>,
    /// Side of every Hermitian LMI, downlink first, then uplink, then SI.
    pub lmi_sizes: Vec<usize>,
}

impl P11Vars {
    pub fn w_values(&self, x: &[f64]) -> Vec<CMatrix> {
        if self.directions.is_empty() {
            return self.w.iter().map(|w| w.value(x)).collect();
        }
        self.directions
            .iter()
            .enumerate()
            .map(|(i, v)| v * v.adjoint() * c64(x[self.q.start + i].max(0.0)))
            .collect()
    }
}

pub(crate) fn build(
    inst: &Instance,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
    dl: &DownlinkMatrices,
) -> Formulation<P11Vars> {
    let cfg = inst.config;
    let ch = inst.channels;
    let (n, k, jj) = (cfg.n, cfg.k, cfg.j);
    let (kappa2, ps) = magnitudes(inst);
    let mut b = ProblemBuilder::new();
    let mut scale = Vec::new();
    let (w, q, directions, wexpr): (Vec<HermVar>, Range<usize>, Vec<CVector>, Vec<CMatExpr>) = match dl {
        DownlinkMatrices::Free => {
            let w: Vec<HermVar> = (0..k).map(|i| b.add_herm(format!("W{i}"), n)).collect();
            scale.extend(std::iter::repeat_n(kappa2 / (k * n) as f64, k * n * n));
            for (i, wi) in w.iter().enumerate() {
                b.psd_hermitian(format!("W{i} psd"), &wi.expr());
            }
            let e = w.iter().map(HermVar::expr).collect();
            (w, 0..0, Vec::new(), e)
        }
        DownlinkMatrices::Fixed(v) => {
            let q = b.add_var("q", k);
            scale.extend(std::iter::repeat_n(kappa2 / k as f64, k));
            b.nonneg("q nonneg", q.clone().map(LinExpr::var).collect());
            let dirs: Vec<CVector> = v.iter().map(|x| x / c64(x.norm().max(1e-300))).collect();
            let e = dirs
                .iter()
                .enumerate()
                .map(|(i, d)| times(&(d * d.adjoint()), &LinExpr::var(q.start + i)))
                .collect();
            (Vec::new(), q, dirs, e)
        }
    };
    let p = b.add_var("P", jj);
    scale.extend(&ps);
    let delta = b.add_var("delta", k);
    scale.extend((0..k).map(|i| {
        let base = cfg.gamma_dl[i] * kappa2 / k as f64;
        multiplier_scale(base, base * ch.h[i].norm(), bounds.eps_h[i])
    }));
    let mu = b.add_var("mu", jj);
    let eps_f = effective_uplink_radius(bounds);
    scale.extend((0..jj).map(|j| uplink_multiplier_scale(inst, &ps, j, eps_f)));
    let rho = b.add_scalar("rho");
    scale.push(
        (0..jj)
            .map(|j| {
                let u = col(&inst.receivers, j);
                let q = si_direction(&ch.g, &inst.receivers, j).norm();
                multiplier_scale(u.norm_squared() * kappa2, u.norm() * kappa2 * q, bounds.eps_g)
            })
            .fold(1e-12, f64::max),
    );
    let s = b.add_var("s", jj);
    scale.extend((0..jj).map(|j| ps[j] / cfg.gamma_ul[j]));

    let total = wexpr.iter().skip(1).fold(wexpr[0].clone(), |acc, e| acc.axpy(1.0, e));
    let mut lmi_sizes = Vec::new();
    for (i, h) in ch.h.iter().enumerate() {
        let g = cfg.gamma_dl[i];
        let qi = wexpr[i].scaled(1.0 + g).axpy(-g, &total);
        let hc = CMatrix::from_column_slice(n, 1, h.as_slice());
        let qh = qi.right_mul(&hc);
        let hqh = qh.left_mul(&hc.adjoint()).get(0, 0).re.clone() - g * cfg.sigma_dl[i];
        let eps = bounds.eps_h[i];
        let d = LinExpr::var(delta.start + i);
        if eps == 0.0 {
            b.nonneg(format!("robust downlink {i}"), vec![hqh]);
            b.zero(format!("delta {i} unused"), vec![d]);
            continue;
        }
        let top = qi.axpy(1.0, &CMatExpr::scaled_identity(n, &d));
        let corner = CMatExpr::scalar(CExpr::real(hqh.axpy(-eps * eps, &d)));
        b.psd_hermitian(format!("robust downlink {i}"), &CMatExpr::block2(&top, &qh, &qh.adjoint(), &corner));
        lmi_sizes.push(n + 1);
    }
    for j in 0..jj {
        let rhs = LinExpr::term(s.start + j, cfg.gamma_ul[j]);
        lmi_sizes.extend(uplink_constraint(&mut b, inst, j, &p, mu.start + j, rhs, eps_f, opts.lmi_form));
    }
    for j in 0..jj {
        let budget = LinExpr::var(s.start + j) - cfg.sigma_ul * col(&inst.receivers, j).norm_squared();
        lmi_sizes.extend(si_constraint(&mut b, inst, j, &total, rho, budget, bounds.eps_g, opts.lmi_form));
    }
    if bounds.eps_g == 0.0 || jj == 0 {
        b.zero("rho unused", vec![LinExpr::var(rho)]);
    }
    let mut nonneg: Vec<LinExpr> = p.clone().chain(delta.clone()).chain(mu.clone()).map(LinExpr::var).collect();
    if bounds.eps_g > 0.0 && jj > 0 {
        nonneg.push(LinExpr::var(rho));
    }
    b.nonneg("multipliers and powers nonneg", nonneg);
    let r1 = LinExpr::sum_of(wexpr.iter().map(CMatExpr::trace).collect::<Vec<_>>().iter());
    let r2 = LinExpr::sum(p.clone());
    let vars = P11Vars {
        w,
        q,
        directions,
        p,
        delta,
        mu,
        rho,
        s,
        lmi_sizes,
    };
    finish(b, r1, r2, goal, vars, scale)
}

/// Smallest common scaling of candidate beamformers meeting every downlink
/// SINR target for all channel errors in the bounds, or `None`.
pub fn robust_scale_to_feasibility(v: &[CVector], inst: &Instance, bounds: &ErrorBounds) -> Option<Vec<CVector>> {
    let cfg = inst.config;
    let mut c2: f64 = 0.0;
    for (i, h) in inst.channels.h.iter().enumerate() {
        let g = cfg.gamma_dl[i];
        let mut q = &v[i] * v[i].adjoint();
        for (_, vk) in v.iter().enumerate().filter(|(kk, _)| *kk != i) {
            q -= vk * vk.adjoint() * c64(g);
        }
        let worst = min_quadratic_on_ball(&q, h, bounds.eps_h[i]);
        if worst <= 0.0 {
            return None;
        }
        c2 = c2.max(g * cfg.sigma_dl[i] / worst);
    }
    let c = c64(c2.sqrt());
    Some(v.iter().map(|x| x * c).collect())
}

pub(super) fn solve(
    inst: &Instance,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
    tol: &Tolerances,
) -> Result<FormulationResult, FormulationError> {
    let not_optimal = |status| FormulationError::NotOptimal {
        scheme: "p11".into(),
        status,
    };
    let f = build(inst, bounds, goal, opts, &DownlinkMatrices::Free);
    let solved = solve_formulation(&f, tol).map_err(not_optimal)?;
    let mats = f.vars.w_values(&solved.x);
    let p_sdp: Vec<f64> = solved.x[f.vars.p.clone()].iter().map(|v| v.max(0.0)).collect();
    let ext = extract_rank_one(&mats, &opts.extract, |v| robust_scale_to_feasibility(v, inst, bounds))?;
    // Powers along the recovered directions are re-optimised so that every
    // robust constraint holds exactly for the rank-one design.
    let g = build(inst, bounds, goal, opts, &DownlinkMatrices::Fixed(ext.vectors.clone()));
    let fixed = solve_formulation(&g, tol).map_err(|_| FormulationError::Conic(ConicError::ExtractionFailed))?;
    let beamformers: Vec<CVector> = g
        .vars
        .directions
        .iter()
        .enumerate()
        .map(|(i, d)| d * c64(fixed.x[g.vars.q.start + i].max(0.0).sqrt()))
        .collect();
    let p_design: Vec<f64> = fixed.x[g.vars.p.clone()].iter().map(|v| v.max(0.0)).collect();
    let design = Design::Conventional {
        w: beamformers.clone(),
        p: p_design.clone(),
    };
    let margins = evaluate_design(&design, inst.channels, &inst.receivers, inst.config, None)?;
    Ok(FormulationResult {
        scheme: "p11".into(),
        status: SolveStatus::Optimal,
        w_aggregate: None,
        dl_power: mats.iter().map(|m| m.trace().re).sum(),
        ul_power: p_sdp.iter().sum(),
        w_matrices: mats,
        extracted_dl_power: Some(beamformers.iter().map(|w| w.norm_squared()).sum()),
        beamformers,
        rank_one: Some(ext.rank_one),
        p: p_design,
        objective: solved.objective,
        margins,
        solve_time: solved.solve_time + fixed.solve_time,
    })
}

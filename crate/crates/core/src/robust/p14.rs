use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::decomposition::{lift_real_decomposition, RealDecomposition};
use super::lmi::{uplink_constraint, uplink_multiplier_scale};
use super::{effective_uplink_radius, RobustOptions, SiBound};
use crate::conic::{CVar, LinExpr, ProblemBuilder, SolveStatus, Tolerances};
use crate::formulations::common::{col, finish, magnitudes, power_epigraph, solve_formulation, Formulation, Goal};
use crate::formulations::{FormulationError, FormulationResult, Instance};
use crate::model::{evaluate_design, CiGeometry, Design, ErrorBounds};

/// Variables of the robust CI problem.
#[derive(Debug, Clone)]
pub struct P14Vars {
    pub w: CVar,
    pub p: Range<usize>,
    /// Epigraph of ‖w‖².
    pub s: usize,
    pub mu: Range<usize>,
    /// Worst-case self-interference budgets.
    pub c: Range<usize>,
    /// a_j ≥ |u_jᴴGw|.
    pub a: Range<usize>,
    /// b_j ≥ the growth rate of |u_jᴴ(G + ΔG)w| in ‖ΔG‖_F.
    pub b: Range<usize>,
    /// Side of every Hermitian LMI (uplink).
    pub lmi_sizes: Vec<usize>,
}

/// Rows of M·w̲ as affine forms.
fn apply(m: &DMatrix<f64>, w: &CVar) -> Vec<LinExpr> {
    (0..m.nrows())
        .map(|r| LinExpr::dot(w.range(), m.row(r).transpose().as_slice()))
        .collect()
}

fn dot(v: &DVector<f64>, w: &CVar) -> LinExpr {
    LinExpr::dot(w.range(), v.as_slice())
}

pub(crate) fn build(
    inst: &Instance,
    dec: &RealDecomposition,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
) -> Formulation<P14Vars> {
    let cfg = inst.config;
    let (n, jj) = (cfg.n, cfg.j);
    let (kappa2, ps) = magnitudes(inst);
    let unorm: Vec<f64> = (0..jj).map(|j| col(&inst.receivers, j).norm()).collect();
    let mut b = ProblemBuilder::new();
    let w = b.add_cvec("w", n);
    let mut scale = vec![(kappa2 / n as f64).sqrt(); 2 * n];
    let p = b.add_var("P", jj);
    scale.extend(&ps);
    let s = b.add_scalar("s");
    scale.push(kappa2);
    let mu = b.add_var("mu", jj);
    let eps_f = effective_uplink_radius(bounds);
    scale.extend((0..jj).map(|j| uplink_multiplier_scale(inst, &ps, j, eps_f)));
    let c = b.add_var("c", jj);
    scale.extend((0..jj).map(|j| ps[j] / cfg.gamma_ul[j]));
    let a = b.add_var("a", jj);
    scale.extend((0..jj).map(|j| (ps[j] / cfg.gamma_ul[j]).sqrt()));
    let bv = b.add_var("b", jj);
    scale.extend((0..jj).map(|j| (unorm[j] * kappa2.sqrt()).max(1e-12)));

    let geo = CiGeometry::new(cfg);
    let tan = geo.theta.tan();
    let identity = DMatrix::<f64>::identity(2 * n, 2 * n);
    let mut linear = Vec::new();
    for (i, row) in dec.h_rows.iter().enumerate() {
        let gamma = geo.thresholds[i];
        let eps = bounds.eps_h[i];
        let y_im = dot(row, &w);
        let y_re = dot(&(dec.pi.transpose() * row), &w);
        if geo.is_half_plane() {
            let head = y_re - gamma;
            if eps == 0.0 {
                linear.push(head);
            } else {
                let tail = apply(&(&identity * eps), &w);
                b.soc(format!("robust ci {i}"), head, tail);
            }
            continue;
        }
        for sign in [1.0, -1.0] {
            let head = (y_re.clone() - gamma).scaled(tan).axpy(-sign, &y_im);
            if eps == 0.0 {
                linear.push(head);
            } else {
                let m = (&identity * sign - &dec.pi * tan) * eps;
                b.soc(format!("robust ci {i}"), head, apply(&m, &w));
            }
        }
    }
    if !linear.is_empty() {
        b.nonneg("nominal ci", linear);
    }
    let mut lmi_sizes = Vec::new();
    for j in 0..jj {
        let noise = cfg.sigma_ul * unorm[j] * unorm[j];
        let rhs = (LinExpr::var(c.start + j) + noise).scaled(cfg.gamma_ul[j]);
        lmi_sizes.extend(uplink_constraint(&mut b, inst, j, &p, mu.start + j, rhs, eps_f, opts.lmi_form));
    }
    for j in 0..jj {
        b.soc(format!("si nominal {j}"), LinExpr::var(a.start + j), apply(&dec.y[j], &w));
        let bj = LinExpr::var(bv.start + j);
        if bounds.eps_g == 0.0 {
            b.zero(format!("b {j} unused"), vec![bj.clone()]);
        } else {
            let tail = match opts.si_bound {
                SiBound::Default => apply(&(&identity * unorm[j]), &w),
                SiBound::Printed => apply(&dec.u[j], &w),
            };
            b.soc(format!("si growth {j}"), bj.clone(), tail);
        }
        // (a_j + ε_G b_j)² ≤ c_j with the cone sides balanced.
        let k = (ps[j] / cfg.gamma_ul[j]).sqrt().max(1e-12);
        let x = LinExpr::var(a.start + j).axpy(bounds.eps_g, &bj);
        b.rsoc(format!("si budget {j}"), LinExpr::term(c.start + j, 1.0 / k), LinExpr::constant(k), vec![x]);
    }
    let mut nonneg: Vec<LinExpr> = mu.clone().map(LinExpr::var).collect();
    nonneg.extend(p.clone().map(LinExpr::var));
    if !nonneg.is_empty() {
        b.nonneg("multipliers and powers nonneg", nonneg);
    }
    power_epigraph(&mut b, &w, s, kappa2.sqrt());
    let r1 = LinExpr::var(s);
    let r2 = LinExpr::sum(p.clone());
    let vars = P14Vars {
        w,
        p,
        s,
        mu,
        c,
        a,
        b: bv,
        lmi_sizes,
    };
    finish(b, r1, r2, goal, vars, scale)
}

pub(super) fn solve(
    inst: &Instance,
    bounds: &ErrorBounds,
    goal: Goal,
    opts: &RobustOptions,
    tol: &Tolerances,
) -> Result<FormulationResult, FormulationError> {
    let frame = inst.frame.ok_or_else(|| FormulationError::FrameMissing("p14".into()))?;
    let dec = lift_real_decomposition(inst.channels, frame)?;
    let f = build(inst, &dec, bounds, goal, opts);
    let solved = solve_formulation(&f, tol).map_err(|status| FormulationError::NotOptimal {
        scheme: "p14".into(),
        status,
    })?;
    let x = &solved.x;
    let w = f.vars.w.value(x);
    let p: Vec<f64> = x[f.vars.p.clone()].to_vec();
    let design = Design::Ci { w: w.clone(), p: p.clone() };
    let margins = evaluate_design(&design, inst.channels, &inst.receivers, inst.config, inst.frame)?;
    Ok(FormulationResult {
        scheme: "p14".into(),
        status: SolveStatus::Optimal,
        dl_power: w.norm_squared(),
        ul_power: p.iter().sum(),
        w_aggregate: Some(w),
        w_matrices: Vec::new(),
        beamformers: Vec::new(),
        rank_one: None,
        p,
        extracted_dl_power: None,
        objective: solved.objective,
        margins,
        solve_time: solved.solve_time,
    })
}

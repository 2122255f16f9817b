use std::ops::Range;

use super::TchebycheffParams;
use crate::conic::{solve_scaled, CVar, ConicProblem, HermVar, LinExpr, ProblemBuilder, SolveStatus, Tolerances};
use crate::{CMatrix, CVector, C64};

/// Weight of the secondary objective in the first lexicographic stage.
pub const LEXICOGRAPHIC_WEIGHT: f64 = 1e-8;

/// Relative slack on the primary objective in the second lexicographic stage.
pub const LEXICOGRAPHIC_CAP: f64 = 1e-7;

/// What a built problem minimises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Goal {
    /// Total downlink power R₁.
    Downlink,
    /// Total uplink power R₂.
    Uplink,
    /// max_a λ_a(R_a − R_a*) through an epigraph variable t.
    Tchebycheff(TchebycheffParams),
}

/// A built problem together with its two power objectives.
#[derive(Debug, Clone)]
pub struct Formulation<V> {
    pub problem: ConicProblem,
    /// Downlink power as an affine form of the decision vector.
    pub r1: LinExpr,
    /// Uplink power.
    pub r2: LinExpr,
    pub goal: Goal,
    pub vars: V,
    /// Expected magnitude of each decision variable, used to condition the solve.
    pub scale: Vec<f64>,
}

/// Variables of the conventional SDR problems.
#[derive(Debug, Clone)]
pub struct ConvVars {
    pub w: Vec<HermVar>,
    pub p: Range<usize>,
}

/// Variables of the CI problems.
#[derive(Debug, Clone)]
pub struct CiVars {
    pub w: CVar,
    pub p: Range<usize>,
    /// Epigraph of ‖w‖².
    pub s: usize,
}

/// Sets the objective of `b` according to `goal` and finalises it.
pub(crate) fn finish<V>(
    mut b: ProblemBuilder,
    r1: LinExpr,
    r2: LinExpr,
    goal: Goal,
    vars: V,
    mut scale: Vec<f64>,
) -> Formulation<V> {
    match goal {
        Goal::Downlink => b.minimize(r1.clone()),
        Goal::Uplink => b.minimize(r2.clone()),
        Goal::Tchebycheff(tp) => {
            let t = b.add_scalar("t");
            let typical = |r: &LinExpr| r.terms.iter().map(|(j, c)| c.abs() * scale[*j]).sum::<f64>();
            scale.push((tp.lambda[0] * typical(&r1)).max(tp.lambda[1] * typical(&r2)).max(1.0));
            let rows = [&r1, &r2]
                .iter()
                .enumerate()
                .map(|(a, r)| LinExpr::var(t) - ((*r).clone() - tp.r_star[a]).scaled(tp.lambda[a]))
                .collect();
            b.nonneg("tchebycheff", rows);
            b.minimize(LinExpr::var(t));
        }
    }
    Formulation {
        problem: b.build(),
        r1,
        r2,
        goal,
        vars,
        scale,
    }
}

/// Outcome of [`solve_formulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub x: Vec<f64>,
    /// Value of the goal's objective.
    pub objective: f64,
    pub solve_time: f64,
}

fn secondary<V>(f: &Formulation<V>) -> Option<&LinExpr> {
    let s = match f.goal {
        Goal::Downlink => Some(&f.r2),
        Goal::Uplink => Some(&f.r1),
        Goal::Tchebycheff(tp) if tp.lambda[1] == 0.0 => Some(&f.r2),
        Goal::Tchebycheff(tp) if tp.lambda[0] == 0.0 => Some(&f.r1),
        Goal::Tchebycheff(_) => None,
    };
    s.filter(|e| !e.terms.is_empty())
}

/// Solves a formulation. Goals that leave one power free (single objectives
/// and Tchebycheff endpoints) are solved lexicographically: the primary
/// optimum is found with a tiny secondary weight, then the secondary power is
/// minimised with the primary capped at its optimum.
pub fn solve_formulation<V>(f: &Formulation<V>, tol: &Tolerances) -> Result<Solved, SolveStatus> {
    let primary = f.problem.objective.clone();
    let second = secondary(f);
    let mut time = 0.0;
    let mut status = SolveStatus::NumericalFailure;
    let mut first: Option<Vec<f64>> = None;
    // A secondary weight keeps the iterates bounded on flat optimal faces but
    // can stall the backend or stop it short of the primary optimum, so the
    // bare primary is also solved and the better primary value kept.
    for weight in [LEXICOGRAPHIC_WEIGHT, 0.0] {
        let mut stage1 = f.problem.clone();
        if let (Some(s), true) = (second, weight > 0.0) {
            stage1.objective = primary.axpy(weight, s);
        }
        let sol = solve_scaled(&stage1, &f.scale, tol).map_err(|_| SolveStatus::NumericalFailure)?;
        time += sol.solve_time;
        if let (SolveStatus::Optimal, Some(x)) = (sol.status, sol.x) {
            status = SolveStatus::Optimal;
            if first.as_ref().is_none_or(|x0| primary.eval(&x) < primary.eval(x0)) {
                first = Some(x);
            }
        } else if first.is_none() {
            status = sol.status;
        }
        if matches!(status, SolveStatus::Infeasible) || second.is_none() {
            break;
        }
    }
    let x1 = first.ok_or(status)?;
    let value = primary.eval(&x1);
    let mut x = x1;
    if let Some(s) = second {
        let mut stage2 = f.problem.clone();
        let cap = (1.0 + LEXICOGRAPHIC_CAP) * value + 1e-9;
        stage2.blocks.push(crate::conic::ConeBlock {
            cone: crate::conic::Cone::Nonneg,
            rows: vec![LinExpr::constant(cap) - primary.clone()],
            label: "lexicographic cap".into(),
        });
        stage2.objective = s.clone();
        if let Ok(sol2) = solve_scaled(&stage2, &f.scale, tol) {
            time += sol2.solve_time;
            if let (SolveStatus::Optimal, Some(x2)) = (sol2.status, sol2.x) {
                x = x2;
            }
        }
    }
    Ok(Solved {
        objective: primary.eval(&x),
        x,
        solve_time: time,
    })
}

/// Column j of U as a vector.
pub(crate) fn col(m: &CMatrix, j: usize) -> CVector {
    m.column(j).into()
}

/// Gᴴu_j, so that u_jᴴ G w = (Gᴴu_j)ᴴ w.
pub(crate) fn si_direction(g: &CMatrix, u: &CMatrix, j: usize) -> CVector {
    g.adjoint() * col(u, j)
}

/// Rotated-cone uplink constraint Γ_j(|u_jᴴGw|² + σ_N²‖u_j‖²) ≤ P_j for an
/// aggregate precoder, with the cone sides balanced as (x/c, c).
pub(crate) fn ci_uplink(b: &mut ProblemBuilder, w: &CVar, p: &Range<usize>, inst: &super::Instance) {
    let cfg = inst.config;
    let (_, typical) = magnitudes(inst);
    for j in 0..cfg.j {
        let u = col(&inst.receivers, j);
        let y = w.inner(&si_direction(&inst.channels.g, &inst.receivers, j));
        let c = (typical[j] / cfg.gamma_ul[j]).sqrt();
        let head = LinExpr::term(p.start + j, 1.0 / cfg.gamma_ul[j]) - cfg.sigma_ul * u.norm_squared();
        b.rsoc(format!("B2 uplink {j}"), head.scaled(1.0 / c), LinExpr::constant(c), vec![y.re, y.im]);
    }
}

/// ‖w‖² ≤ s written as ‖(2w, s/c − c)‖ ≤ s/c + c, with c near the expected
/// norm of w.
pub(crate) fn power_epigraph(b: &mut ProblemBuilder, w: &CVar, s: usize, c: f64) {
    let mut tail: Vec<LinExpr> = w.range().map(|i| LinExpr::term(i, 2.0)).collect();
    tail.push(LinExpr::term(s, 1.0 / c) - c);
    b.soc("power epigraph", LinExpr::term(s, 1.0 / c) + c, tail);
}

/// Registers the CI variables and the shared uplink and epigraph blocks.
pub(crate) fn ci_skeleton(b: &mut ProblemBuilder, inst: &super::Instance) -> CiVars {
    let n = inst.config.n;
    let w = b.add_cvec("w", n);
    let p = b.add_var("P", inst.config.j);
    let s = b.add_scalar("s");
    CiVars { w, p, s }
}

/// Expected downlink power (zero-forcing when the users are separable, matched
/// filtering otherwise) and the uplink powers it would induce, midway between
/// the noise floor and unsuppressed self-interference.
pub(crate) fn magnitudes(inst: &super::Instance) -> (f64, Vec<f64>) {
    let cfg = inst.config;
    let h = CMatrix::from_columns(&inst.channels.h);
    let target = |i: usize| cfg.gamma_dl[i] * cfg.sigma_dl[i];
    let zf = (h.adjoint() * &h)
        .try_inverse()
        .map(|g| (0..cfg.k).map(|i| target(i) * g[(i, i)].re).sum::<f64>())
        .filter(|v| v.is_finite() && *v > 0.0);
    let mrt = || {
        (0..cfg.k)
            .map(|i| target(i) / inst.channels.h[i].norm_squared().max(1e-300))
            .sum::<f64>()
    };
    let kappa2 = zf.unwrap_or_else(mrt).max(1e-300);
    let p = (0..cfg.j)
        .map(|j| {
            let noise = cfg.sigma_ul * col(&inst.receivers, j).norm_squared();
            let si = kappa2 * si_direction(&inst.channels.g, &inst.receivers, j).norm_squared();
            (cfg.gamma_ul[j] * (noise * (noise + si)).sqrt()).max(1e-12)
        })
        .collect();
    (kappa2, p)
}

/// Variable scales for the CI layout (w, P, s).
pub(crate) fn ci_scale(inst: &super::Instance) -> Vec<f64> {
    let (kappa2, p) = magnitudes(inst);
    let mut d = vec![kappa2.sqrt() / (inst.config.n as f64).sqrt(); 2 * inst.config.n];
    d.extend(p);
    d.push(kappa2);
    d
}

pub(crate) fn ci_tail(b: &mut ProblemBuilder, vars: &CiVars, inst: &super::Instance) {
    ci_uplink(b, &vars.w, &vars.p, inst);
    power_epigraph(b, &vars.w, vars.s, magnitudes(inst).0.sqrt());
}

pub(crate) fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Solves a CI formulation and replays its constraints.
pub(crate) fn solve_ci(
    inst: &super::Instance,
    scheme: super::Scheme,
    f: &Formulation<CiVars>,
    tol: &Tolerances,
) -> Result<super::FormulationResult, super::FormulationError> {
    let solved = solve_formulation(f, tol).map_err(|status| super::FormulationError::NotOptimal {
        scheme: scheme.to_string(),
        status,
    })?;
    let x = &solved.x;
    let w = f.vars.w.value(x);
    // For a fixed precoder the uplink constraints decouple, so the closed form
    // is the exact minimiser and never exceeds the solver's powers.
    let p = crate::model::closed_form_ul_power(std::slice::from_ref(&w), &inst.channels.g, &inst.receivers, inst.config);
    let design = crate::model::Design::Ci { w: w.clone(), p: p.clone() };
    let margins = crate::model::evaluate_design(&design, inst.channels, &inst.receivers, inst.config, inst.frame)?;
    Ok(super::FormulationResult {
        scheme: scheme.to_string(),
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

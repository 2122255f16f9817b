use super::common::{ci_scale, ci_skeleton, ci_tail, finish, solve_ci, CiVars, Formulation, Goal};
use super::{FormulationError, FormulationResult, Instance, Scheme, TchebycheffParams};
use crate::conic::{LinExpr, ProblemBuilder, Tolerances};
use crate::model::{classify_qam_point, ChannelSet, Modulation, SymbolFrame, SystemConfig};

/// Row pushing `value` outward past `target` on the side of `sign`.
fn outward(value: &LinExpr, target: f64, sign: f64) -> LinExpr {
    (value.clone() - target).scaled(sign.signum())
}

fn build(inst: &Instance, goal: Goal, scheme: Scheme) -> Result<Formulation<CiVars>, FormulationError> {
    let cfg = inst.config;
    let frame = inst.frame.ok_or_else(|| FormulationError::FrameMissing(scheme.to_string()))?;
    if cfg.modulation != Modulation::Qam16 || frame.modulation != Modulation::Qam16 {
        return Err(FormulationError::ModulationMismatch(scheme.to_string()));
    }
    let thresholds = cfg.thresholds();
    let mut b = ProblemBuilder::new();
    let vars = ci_skeleton(&mut b, inst);
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    for (i, h) in inst.channels.h.iter().enumerate() {
        let d = frame.symbols[i];
        let t = d * thresholds[i];
        let y = vars.w.inner(h);
        match classify_qam_point(d)? {
            1 => {
                eq.push(y.re - t.re);
                eq.push(y.im - t.im);
            }
            2 => {
                eq.push(y.re - t.re);
                ineq.push(outward(&y.im, t.im, d.im));
            }
            3 => {
                ineq.push(outward(&y.re, t.re, d.re));
                eq.push(y.im - t.im);
            }
            _ => {
                ineq.push(outward(&y.re, t.re, d.re));
                ineq.push(outward(&y.im, t.im, d.im));
            }
        }
    }
    b.zero("C pinned components", eq);
    b.nonneg("C outward components", ineq);
    ci_tail(&mut b, &vars, inst);
    let r1 = LinExpr::var(vars.s);
    let r2 = LinExpr::sum(vars.p.clone());
    let scale = ci_scale(inst);
    Ok(finish(b, r1, r2, goal, vars, scale))
}

/// CI-QAM downlink power minimisation.
pub fn build_p7(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
) -> Result<Formulation<CiVars>, FormulationError> {
    build(&Instance::new(channels, config, Some(frame))?, Goal::Downlink, Scheme::P7)
}

/// CI-QAM uplink power minimisation.
pub fn build_p8(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
) -> Result<Formulation<CiVars>, FormulationError> {
    build(&Instance::new(channels, config, Some(frame))?, Goal::Uplink, Scheme::P8)
}

/// CI-QAM weighted-Tchebycheff trade-off.
pub fn build_p9(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
    tcheby: &TchebycheffParams,
) -> Result<Formulation<CiVars>, FormulationError> {
    build(&Instance::new(channels, config, Some(frame))?, Goal::Tchebycheff(*tcheby), Scheme::P9)
}

pub(super) fn solve(
    inst: &Instance,
    scheme: Scheme,
    goal: Goal,
    tol: &Tolerances,
) -> Result<FormulationResult, FormulationError> {
    let f = build(inst, goal, scheme)?;
    solve_ci(inst, scheme, &f, tol)
}

use super::common::{ci_scale, ci_skeleton, ci_tail, finish, solve_ci, CiVars, Formulation, Goal};
use super::{FormulationError, FormulationResult, Instance, Scheme, TchebycheffParams};
use crate::conic::{LinExpr, ProblemBuilder, Tolerances};
use crate::model::{CiGeometry, ChannelSet, SymbolFrame, SystemConfig};

fn build(inst: &Instance, goal: Goal, scheme: Scheme) -> Result<Formulation<CiVars>, FormulationError> {
    let cfg = inst.config;
    let frame = inst.frame.ok_or_else(|| FormulationError::FrameMissing(scheme.to_string()))?;
    if !cfg.modulation.is_psk() || !frame.modulation.is_psk() {
        return Err(FormulationError::ModulationMismatch(scheme.to_string()));
    }
    let geo = CiGeometry::new(cfg);
    let mut b = ProblemBuilder::new();
    let vars = ci_skeleton(&mut b, inst);
    let tan = geo.theta.tan();
    let mut rows = Vec::with_capacity(2 * cfg.k);
    for (i, h) in inst.channels.h.iter().enumerate() {
        let y = vars.w.inner(h).mul_const(frame.rotation(i));
        let gamma = geo.thresholds[i];
        if geo.is_half_plane() {
            rows.push(y.re - gamma);
        } else {
            let base = (y.re - gamma).scaled(tan);
            rows.push(&base - &y.im);
            rows.push(&base + &y.im);
        }
    }
    b.nonneg("B1 constructive interference", rows);
    ci_tail(&mut b, &vars, inst);
    let r1 = LinExpr::var(vars.s);
    let r2 = LinExpr::sum(vars.p.clone());
    let scale = ci_scale(inst);
    Ok(finish(b, r1, r2, goal, vars, scale))
}

/// CI-PSK downlink power minimisation.
pub fn build_p4(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
) -> Result<Formulation<CiVars>, FormulationError> {
    build(&Instance::new(channels, config, Some(frame))?, Goal::Downlink, Scheme::P4)
}

/// CI-PSK uplink power minimisation.
pub fn build_p5(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
) -> Result<Formulation<CiVars>, FormulationError> {
    build(&Instance::new(channels, config, Some(frame))?, Goal::Uplink, Scheme::P5)
}

/// CI-PSK weighted-Tchebycheff trade-off.
pub fn build_p6(
    channels: &ChannelSet,
    config: &SystemConfig,
    frame: &SymbolFrame,
    tcheby: &TchebycheffParams,
) -> Result<Formulation<CiVars>, FormulationError> {
    build(&Instance::new(channels, config, Some(frame))?, Goal::Tchebycheff(*tcheby), Scheme::P6)
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

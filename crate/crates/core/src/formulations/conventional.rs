use super::common::{c64, col, finish, magnitudes, si_direction, solve_formulation, ConvVars, Formulation, Goal};
use super::{FormulationError, FormulationResult, Instance, Scheme, TchebycheffParams};
use crate::conic::{extract_rank_one, ExtractOptions, LinExpr, ProblemBuilder, SolveStatus, Tolerances};
use crate::model::{closed_form_ul_power, evaluate_design, ChannelSet, Design, SystemConfig};
use crate::CVector;

/// Builder switches for the conventional problems.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConventionalOptions {
    /// Keep the inter-uplink-user terms Σ_{n≠j} P_n|u_jᴴf_n|² in the uplink
    /// constraint. They vanish for zero-forcing receivers.
    pub general_receivers: bool,
}

pub(crate) fn build(inst: &Instance, goal: Goal, opts: &ConventionalOptions) -> Formulation<ConvVars> {
    let cfg = inst.config;
    let ch = inst.channels;
    let mut b = ProblemBuilder::new();
    let w: Vec<_> = (0..cfg.k).map(|i| b.add_herm(format!("W{i}"), cfg.n)).collect();
    let p = b.add_var("P", cfg.j);
    for (i, wi) in w.iter().enumerate() {
        b.psd_hermitian(format!("W{i} psd"), &wi.expr());
    }
    let a1 = ch
        .h
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let others = LinExpr::sum_of(
                w.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, wk)| wk.quad(h))
                    .collect::<Vec<_>>()
                    .iter(),
            );
            w[i].quad(h).axpy(-cfg.gamma_dl[i], &others) - cfg.gamma_dl[i] * cfg.sigma_dl[i]
        })
        .collect();
    b.nonneg("A1 downlink sinr", a1);
    let a2 = (0..cfg.j)
        .map(|j| {
            let u = col(&inst.receivers, j);
            let q = si_direction(&ch.g, &inst.receivers, j);
            let si = LinExpr::sum_of(w.iter().map(|wk| wk.quad(&q)).collect::<Vec<_>>().iter());
            let mut gain = 1.0;
            let mut row = LinExpr::zero();
            if opts.general_receivers {
                let f = |n: usize| col(&ch.f, n);
                gain = u.dotc(&f(j)).norm_sqr();
                for n in (0..cfg.j).filter(|&n| n != j) {
                    row = row.axpy(-cfg.gamma_ul[j] * u.dotc(&f(n)).norm_sqr(), &LinExpr::var(p.start + n));
                }
            }
            row.axpy(gain, &LinExpr::var(p.start + j)).axpy(-cfg.gamma_ul[j], &si)
                - cfg.gamma_ul[j] * cfg.sigma_ul * u.norm_squared()
        })
        .collect();
    b.nonneg("A2 uplink sinr", a2);
    b.nonneg("P nonneg", p.clone().map(LinExpr::var).collect());
    let r1 = LinExpr::sum_of(w.iter().map(|wi| wi.trace()).collect::<Vec<_>>().iter());
    let r2 = LinExpr::sum(p.clone());
    let (kappa2, ps) = magnitudes(inst);
    let mut scale = vec![kappa2 / (cfg.k * cfg.n).max(1) as f64; cfg.k * cfg.n * cfg.n];
    scale.extend(ps);
    finish(b, r1, r2, goal, ConvVars { w, p }, scale)
}

/// SDR downlink power minimisation.
pub fn build_p1(channels: &ChannelSet, config: &SystemConfig) -> Result<Formulation<ConvVars>, FormulationError> {
    Ok(build(&Instance::new(channels, config, None)?, Goal::Downlink, &ConventionalOptions::default()))
}

/// SDR uplink power minimisation.
pub fn build_p2(channels: &ChannelSet, config: &SystemConfig) -> Result<Formulation<ConvVars>, FormulationError> {
    Ok(build(&Instance::new(channels, config, None)?, Goal::Uplink, &ConventionalOptions::default()))
}

/// SDR weighted-Tchebycheff trade-off.
pub fn build_p3(
    channels: &ChannelSet,
    config: &SystemConfig,
    tcheby: &TchebycheffParams,
) -> Result<Formulation<ConvVars>, FormulationError> {
    Ok(build(
        &Instance::new(channels, config, None)?,
        Goal::Tchebycheff(*tcheby),
        &ConventionalOptions::default(),
    ))
}

/// Rescales candidate beamformers by the smallest common factor meeting every
/// downlink SINR target, or `None` if no scaling can.
pub fn scale_to_feasibility(v: &[CVector], channels: &ChannelSet, config: &SystemConfig) -> Option<Vec<CVector>> {
    let mut c2: f64 = 0.0;
    for (i, h) in channels.h.iter().enumerate() {
        let a = h.dotc(&v[i]).norm_sqr();
        let b: f64 = v.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, vk)| h.dotc(vk).norm_sqr()).sum();
        let margin = a - config.gamma_dl[i] * b;
        if margin <= 0.0 {
            return None;
        }
        c2 = c2.max(config.gamma_dl[i] * config.sigma_dl[i] / margin);
    }
    let c = c64(c2.sqrt());
    Some(v.iter().map(|x| x * c).collect())
}

pub(super) fn solve(
    inst: &Instance,
    scheme: Scheme,
    goal: Goal,
    opts: &ConventionalOptions,
    tol: &Tolerances,
) -> Result<FormulationResult, FormulationError> {
    let f = build(inst, goal, opts);
    let solved = solve_formulation(&f, tol).map_err(|status| FormulationError::NotOptimal {
        scheme: scheme.to_string(),
        status,
    })?;
    let x = &solved.x;
    let mats: Vec<_> = f.vars.w.iter().map(|w| w.value(x)).collect();
    let p_sdp: Vec<f64> = x[f.vars.p.clone()].iter().map(|v| v.max(0.0)).collect();
    let mut ext = extract_rank_one(&mats, &ExtractOptions::default(), |v| {
        scale_to_feasibility(v, inst.channels, inst.config)
    })?;
    // Principal components of a numerically rank-one solution miss the
    // residual eigenvalues; snap them onto the SINR boundary.
    if ext.rank_one {
        if let Some(v) = scale_to_feasibility(&ext.vectors, inst.channels, inst.config) {
            ext.power = v.iter().map(|x| x.norm_squared()).sum();
            ext.vectors = v;
        }
    }
    // Uplink powers must cover the self-interference of the recovered
    // beamformers, which can exceed the relaxed value after randomisation.
    let closed = closed_form_ul_power(&ext.vectors, &inst.channels.g, &inst.receivers, inst.config);
    let p_design: Vec<f64> = p_sdp.iter().zip(&closed).map(|(a, b)| a.max(*b)).collect();
    let design = Design::Conventional {
        w: ext.vectors.clone(),
        p: p_design.clone(),
    };
    let margins = evaluate_design(&design, inst.channels, &inst.receivers, inst.config, None)?;
    Ok(FormulationResult {
        scheme: scheme.to_string(),
        status: SolveStatus::Optimal,
        w_aggregate: None,
        dl_power: mats.iter().map(|m| m.trace().re).sum(),
        ul_power: p_sdp.iter().sum(),
        w_matrices: mats,
        beamformers: ext.vectors,
        rank_one: Some(ext.rank_one),
        p: p_design,
        extracted_dl_power: Some(ext.power),
        objective: solved.objective,
        margins,
        solve_time: solved.solve_time,
    })
}

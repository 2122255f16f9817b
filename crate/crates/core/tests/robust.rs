use fdci_core::conic::{SolveStatus, Tolerances};
use fdci_core::formulations::{anchors, solve_scheme, Family, FormulationError, Goal, Scheme, TchebycheffParams};
use fdci_core::model::{
    draw_channels, draw_frame, zf_receivers, ChannelSet, ErrorBounds, Modulation, SymbolFrame, SystemConfig,
};
use fdci_core::robust::{
    build_p11, build_p14, deployed_design, lift_real_decomposition, robust_anchors, sampled_worst_case_check,
    solve_robust, LmiForm, RobustOptions, RobustScheme,
};
use fdci_core::{CMatrix, CVector, C64};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn instance(n: usize, k: usize, j: usize, seed: u64) -> (ChannelSet, SystemConfig, SymbolFrame) {
    let cfg = SystemConfig::uniform(n, k, j, 10.0, 0.0, Modulation::Psk(4)).unwrap();
    let ch = draw_channels(&cfg, seed).unwrap();
    let frame = draw_frame(cfg.modulation, k, seed);
    (ch, cfg, frame)
}

/// One downlink user with h = [1, 1], no uplink users.
fn single_user() -> (ChannelSet, SystemConfig, SymbolFrame) {
    let ch = ChannelSet {
        h: vec![CVector::from_element(2, C64::new(1.0, 0.0))],
        f: CMatrix::zeros(2, 0),
        g: CMatrix::zeros(2, 2),
    };
    let cfg = SystemConfig::uniform(2, 1, 0, 10.0, 0.0, Modulation::Psk(4)).unwrap();
    (ch, cfg, draw_frame(Modulation::Psk(4), 1, 0))
}

fn opts(form: LmiForm) -> RobustOptions {
    RobustOptions {
        lmi_form: form,
        ..Default::default()
    }
}

fn solve(
    scheme: RobustScheme,
    (ch, cfg, frame): &(ChannelSet, SystemConfig, SymbolFrame),
    bounds: &ErrorBounds,
    goal: Goal,
) -> Result<fdci_core::formulations::FormulationResult, FormulationError> {
    solve_robust(scheme, ch, cfg, Some(frame), bounds, goal, &RobustOptions::default(), &tol())
}

#[test]
fn kronecker_lmi_sizes() {
    let (ch, cfg, frame) = instance(2, 1, 1, 1);
    let bounds = ErrorBounds::uniform(1, 1, 0.1, 0.1, 0.1);
    let f = build_p11(&ch, &cfg, &bounds, Goal::Downlink, &opts(LmiForm::Kronecker)).unwrap();
    assert_eq!(f.vars.lmi_sizes, vec![3, 3, 5]);
    let r = build_p11(&ch, &cfg, &bounds, Goal::Downlink, &opts(LmiForm::Reduced)).unwrap();
    assert_eq!(r.vars.lmi_sizes, vec![3, 2, 3]);
    let g = build_p14(&ch, &cfg, &frame, &bounds, Goal::Downlink, &opts(LmiForm::Kronecker)).unwrap();
    assert_eq!(g.vars.lmi_sizes, vec![3]);
}

#[test]
fn zero_bounds_swap_in_nominal_rows() {
    let (ch, cfg, _) = instance(3, 2, 2, 4);
    let f = build_p11(&ch, &cfg, &ErrorBounds::zero(2, 2), Goal::Downlink, &RobustOptions::default()).unwrap();
    assert!(f.vars.lmi_sizes.is_empty());
}

#[test]
fn reduced_and_kronecker_forms_agree() {
    let inst = instance(3, 2, 2, 5);
    let (ch, cfg, frame) = &inst;
    let bounds = ErrorBounds::uniform(2, 2, 0.05, 0.05, 0.05);
    let r_star = robust_anchors(RobustScheme::P14, ch, cfg, Some(frame), &bounds, &RobustOptions::default(), &tol()).unwrap();
    let goal = Goal::Tchebycheff(TchebycheffParams::new(0.5, r_star));
    for scheme in [RobustScheme::P11, RobustScheme::P14] {
        let a = solve_robust(scheme, ch, cfg, Some(frame), &bounds, goal, &opts(LmiForm::Kronecker), &tol()).unwrap();
        let b = solve_robust(scheme, ch, cfg, Some(frame), &bounds, goal, &opts(LmiForm::Reduced), &tol()).unwrap();
        assert!(rel(a.objective, b.objective) < 1e-5, "{scheme}: {} vs {}", a.objective, b.objective);
    }
}

#[test]
fn single_user_robust_powers_match_closed_forms() {
    let inst = single_user();
    let gs = 10.0;
    let hn = 2f64.sqrt();
    let mut last = [gs / 2.0; 2];
    for eps in [0.05, 0.1, 0.2] {
        let bounds = ErrorBounds::uniform(1, 0, eps, 0.0, 0.0);
        // Conventional: w along h, worst channel ‖h‖ − ε.
        let p11 = solve(RobustScheme::P11, &inst, &bounds, Goal::Downlink).unwrap();
        let want11 = gs / (hn - eps).powi(2);
        assert!(rel(p11.dl_power, want11) < 1e-6, "{} vs {want11}", p11.dl_power);
        // QPSK sector: the error costs ε/sin θ of channel gain.
        let p14 = solve(RobustScheme::P14, &inst, &bounds, Goal::Downlink).unwrap();
        let want14 = gs / (hn - eps * 2f64.sqrt()).powi(2);
        assert!(rel(p14.dl_power, want14) < 1e-6, "{} vs {want14}", p14.dl_power);
        assert!(p11.dl_power > last[0] && p14.dl_power > last[1]);
        last = [p11.dl_power, p14.dl_power];
    }
}

#[test]
fn vanishing_bounds_recover_perfect_csi_tradeoff() {
    let inst = instance(4, 2, 2, 7);
    let (ch, cfg, frame) = &inst;
    let bounds = ErrorBounds::uniform(2, 2, 1e-6, 1e-6, 1e-6);
    for (family, scheme, robust) in [
        (Family::Conventional, Scheme::P3, RobustScheme::P11),
        (Family::CiPsk, Scheme::P6, RobustScheme::P14),
    ] {
        let r_star = anchors(family, ch, cfg, Some(frame), &tol()).unwrap();
        let tp = TchebycheffParams::new(0.5, r_star);
        let nominal = solve_scheme(scheme, ch, cfg, Some(frame), Some(&tp), &tol()).unwrap();
        let r = solve(robust, &inst, &bounds, Goal::Tchebycheff(tp)).unwrap();
        assert!(rel(r.objective, nominal.objective) <= 1e-3, "{robust}: {} vs {}", r.objective, nominal.objective);
        assert!(r.objective >= nominal.objective - 1e-6 * nominal.objective.abs().max(1.0));
    }
}

#[test]
fn robust_optimum_dominates_and_grows_with_each_bound() {
    let inst = instance(4, 2, 2, 11);
    let (ch, cfg, frame) = &inst;
    let r_star = anchors(Family::CiPsk, ch, cfg, Some(frame), &tol()).unwrap();
    let goal = Goal::Tchebycheff(TchebycheffParams::new(0.5, r_star));
    let nominal = solve(RobustScheme::P14, &inst, &ErrorBounds::zero(2, 2), goal).unwrap().objective;
    for which in 0..3 {
        let mut prev = nominal;
        for eps in [0.02, 0.05, 0.1] {
            let mut e = [0.0; 3];
            e[which] = eps;
            let bounds = ErrorBounds::uniform(2, 2, e[0], e[1], e[2]);
            let t = solve(RobustScheme::P14, &inst, &bounds, goal).unwrap().objective;
            assert!(t >= prev - 1e-6 * prev.abs().max(1.0), "bound {which} at {eps}: {t} < {prev}");
            prev = t;
        }
        assert!(prev > nominal);
    }
}

#[test]
fn large_downlink_error_is_infeasible_at_high_target() {
    for seed in 0..3 {
        let (ch, _, frame) = instance(4, 4, 2, seed);
        let cfg = SystemConfig::uniform(4, 4, 2, 20.0, 0.0, Modulation::Psk(4)).unwrap();
        let inst = (ch, cfg, frame);
        let bounds = ErrorBounds::uniform(4, 2, 1.0, 0.0, 0.0);
        for scheme in [RobustScheme::P11, RobustScheme::P14] {
            let err = solve(scheme, &inst, &bounds, Goal::Downlink).unwrap_err();
            assert_eq!(err.status(), Some(SolveStatus::Infeasible), "{scheme} seed {seed}: {err}");
        }
    }
}

#[test]
fn lmi_blocks_hold_at_the_optimum() {
    let inst = instance(3, 2, 2, 13);
    let (ch, cfg, frame) = &inst;
    let bounds = ErrorBounds::uniform(2, 2, 0.1, 0.1, 0.1);
    let f = build_p11(ch, cfg, &bounds, Goal::Downlink, &RobustOptions::default()).unwrap();
    let x = fdci_core::formulations::solve_formulation(&f, &tol()).unwrap().x;
    let worst = f
        .problem
        .residuals(&x)
        .into_iter()
        .filter(|r| r.label.starts_with("robust"))
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    assert!(worst <= 1e-7, "{worst}");
    let g = build_p14(ch, cfg, frame, &bounds, Goal::Downlink, &RobustOptions::default()).unwrap();
    let x = fdci_core::formulations::solve_formulation(&g, &tol()).unwrap().x;
    let worst = g
        .problem
        .residuals(&x)
        .into_iter()
        .filter(|r| r.label.starts_with("robust"))
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    assert!(worst <= 1e-7, "{worst}");
}

#[test]
fn si_budget_covers_the_triangle_bound() {
    let inst = instance(4, 3, 2, 17);
    let (ch, cfg, frame) = &inst;
    let bounds = ErrorBounds::uniform(3, 2, 0.05, 0.05, 0.2);
    let f = build_p14(ch, cfg, frame, &bounds, Goal::Uplink, &RobustOptions::default()).unwrap();
    let x = fdci_core::formulations::solve_formulation(&f, &tol()).unwrap().x;
    let w = f.vars.w.value(&x);
    let u = zf_receivers(&ch.f).unwrap();
    let dec = lift_real_decomposition(ch, frame).unwrap();
    let wr = nalgebra::DVector::from_vec(fdci_core::conic::lift::stack(&w));
    for j in 0..2 {
        let uj: CVector = u.column(j).into();
        // max over ‖ΔG‖_F ≤ ε of |u_jᴴ(G + ΔG)w| is |u_jᴴGw| + ε‖u_j‖‖w‖.
        let worst = (uj.adjoint() * &ch.g * &w)[(0, 0)].norm() + 0.2 * uj.norm() * w.norm();
        let c = x[f.vars.c.start + j];
        assert!(worst * worst <= c * (1.0 + 1e-6) + 1e-9, "{} > {c}", worst * worst);
        let printed = (&dec.y[j] * &wr).norm() + 0.2 * (&dec.u[j] * &wr).norm();
        assert!(printed * printed <= c * (1.0 + 1e-6) + 1e-9);
    }
}

#[test]
fn robust_designs_survive_sampled_errors() {
    let inst = instance(4, 2, 2, 19);
    let (ch, cfg, frame) = &inst;
    let bounds = ErrorBounds::uniform(2, 2, 0.1, 0.1, 0.1);
    for scheme in [RobustScheme::P14, RobustScheme::P11] {
        let r_star = robust_anchors(scheme, ch, cfg, Some(frame), &bounds, &RobustOptions::default(), &tol()).unwrap();
        let r = solve(scheme, &inst, &bounds, Goal::Tchebycheff(TchebycheffParams::new(0.5, r_star))).unwrap();
        let report = sampled_worst_case_check(&r, ch, cfg, Some(frame), &bounds, 1000, 3, 1e-5).unwrap();
        assert_eq!(report.violations, 0, "{scheme}: {report:?}");
        assert!(report.min_margin >= -1e-5 && report.min_sinr_slack >= -1e-5);
    }
}

#[test]
fn zero_bounds_reproduce_nominal_margins() {
    let inst = instance(4, 2, 2, 23);
    let (ch, cfg, frame) = &inst;
    let r = solve_scheme(Scheme::P4, ch, cfg, Some(frame), None, &tol()).unwrap();
    let report = sampled_worst_case_check(&r, ch, cfg, Some(frame), &ErrorBounds::zero(2, 2), 10, 0, 1e-5).unwrap();
    assert_eq!(report.min_margin, r.margins.worst_ci_margin());
    assert_eq!(report.min_sinr_slack, r.margins.worst_ul_slack());
    assert!(matches!(deployed_design(&r), fdci_core::model::Design::Ci { .. }));
}

#[test]
fn nominal_design_breaks_under_errors() {
    let mut broken = 0;
    for seed in 0..4 {
        let inst = instance(4, 2, 2, 29 + seed);
        let (ch, cfg, frame) = &inst;
        let r_star = anchors(Family::CiPsk, ch, cfg, Some(frame), &tol()).unwrap();
        let tp = TchebycheffParams::new(0.5, r_star);
        let r = solve_scheme(Scheme::P6, ch, cfg, Some(frame), Some(&tp), &tol()).unwrap();
        let bounds = ErrorBounds::uniform(2, 2, 0.1, 0.1, 0.1);
        let report = sampled_worst_case_check(&r, ch, cfg, Some(frame), &bounds, 200, seed, 1e-5).unwrap();
        broken += usize::from(report.violations > 0);
    }
    assert!(broken > 0);
}

#[test]
fn p14_rejects_qam() {
    let (ch, _, _) = instance(3, 2, 1, 31);
    let cfg = SystemConfig::uniform(3, 2, 1, 10.0, 0.0, Modulation::Qam16).unwrap();
    let frame = draw_frame(Modulation::Qam16, 2, 0);
    let err = build_p14(&ch, &cfg, &frame, &ErrorBounds::zero(2, 1), Goal::Downlink, &RobustOptions::default()).unwrap_err();
    assert!(matches!(err, FormulationError::ModulationMismatch(_)));
}

use std::sync::Once;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SecondOrderConeT,
    SolverStatus, SupportedConeT, ZeroConeT,
};
use serde::{Deserialize, Serialize};

use super::expr::LinExpr;
use super::problem::{Cone, ConeBlock, ConicProblem};
use super::ConicError;

/// Accuracy requested from a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Per-block primal residual accepted for an optimal point, relative to
    /// max(1, largest absolute term of any row in the block).
    pub feasibility: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub max_iter: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-7,
            gap: 1e-7,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal point; present iff optimal.
    pub x: Option<Vec<f64>>,
    /// Objective at `x`; present iff optimal.
    pub objective: Option<f64>,
    pub solve_time: f64,
    pub iterations: u32,
}

extern "C" {
    fn openblas_set_num_threads(n: i32);
}

static BLAS_INIT: Once = Once::new();

fn blas_single_thread() {
    // Parallelism lives at the trial level; nested BLAS threads only contend.
    BLAS_INIT.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Position of packed-lower entry (r ≥ c) in the solver's packed-upper
/// column-major order: upper entry (c, r) sits at r(r+1)/2 + c.
fn psd_permutation(d: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for c in 0..d {
        for r in c..d {
            out.push(r * (r + 1) / 2 + c);
        }
    }
    out
}

struct Lowered {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn lower(problem: &ConicProblem) -> Lowered {
    let mut rows_i = Vec::new();
    let mut cols_j = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut push_row = |b: &mut Vec<f64>, terms: &[(usize, f64)], scale: f64, constant: f64, rows_i: &mut Vec<usize>| {
        let r = b.len();
        for (j, c) in terms {
            rows_i.push(r);
            cols_j.push(*j);
            // s = b − A x, so A carries the negated coefficients.
            vals.push(-c * scale);
        }
        b.push(constant * scale);
    };
    for block in &problem.blocks {
        let n = block.rows.len();
        match block.cone {
            Cone::Zero | Cone::Nonneg | Cone::Soc => {
                for row in &block.rows {
                    push_row(&mut b, &row.terms, 1.0, row.constant, &mut rows_i);
                }
                cones.push(match block.cone {
                    Cone::Zero => ZeroConeT(n),
                    Cone::Nonneg => NonnegativeConeT(n),
                    _ => SecondOrderConeT(n),
                });
            }
            Cone::Rsoc => {
                // (u, v, x) ↦ (u + v, u − v, 2x) in the standard cone.
                let (u, v) = (&block.rows[0], &block.rows[1]);
                let s = u + v;
                let d = u - v;
                push_row(&mut b, &s.terms, 1.0, s.constant, &mut rows_i);
                push_row(&mut b, &d.terms, 1.0, d.constant, &mut rows_i);
                for row in &block.rows[2..] {
                    push_row(&mut b, &row.terms, 2.0, row.constant, &mut rows_i);
                }
                cones.push(SecondOrderConeT(n));
            }
            Cone::Psd(d) => {
                let perm = psd_permutation(d);
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&k| perm[k]);
                for k in order {
                    let row = &block.rows[k];
                    push_row(&mut b, &row.terms, 1.0, row.constant, &mut rows_i);
                }
                cones.push(PSDTriangleConeT(d));
            }
        }
    }
    let a = CscMatrix::new_from_triplets(b.len(), problem.n_vars, rows_i, cols_j, vals);
    Lowered { a, b, cones }
}

/// Normaliser for a block's residual: the largest absolute term of any row at
/// `x`, constants included, and at least 1.
fn block_scale(block: &super::problem::ConeBlock, x: &[f64]) -> f64 {
    block.rows.iter().fold(1.0f64, |m, r| {
        r.terms.iter().fold(m.max(r.constant.abs()), |m, (j, c)| m.max((c * x[*j]).abs()))
    })
}

/// Symmetric diagonal scaling D·M·D of a packed PSD block so that every
/// matrix row has unit largest coefficient. Leaves the cone membership of
/// every point unchanged.
fn equilibrate_psd(dim: usize, rows: &mut [LinExpr]) {
    let s2 = std::f64::consts::SQRT_2;
    let index: Vec<(usize, usize)> = (0..dim).flat_map(|c| (c..dim).map(move |r| (r, c))).collect();
    for _ in 0..6 {
        let mut norms = vec![0.0f64; dim];
        for (e, &(r, c)) in rows.iter().zip(&index) {
            let w = if r == c { 1.0 } else { 1.0 / s2 };
            let m = e.terms.iter().fold(e.constant.abs(), |m, (_, v)| m.max(v.abs())) * w;
            norms[r] = norms[r].max(m);
            norms[c] = norms[c].max(m);
        }
        let f: Vec<f64> = norms.iter().map(|v| if *v > 0.0 { 1.0 / v.sqrt() } else { 1.0 }).collect();
        if f.iter().all(|v| (v - 1.0).abs() < 1e-3) {
            break;
        }
        for (e, &(r, c)) in rows.iter_mut().zip(&index) {
            *e = e.scaled(f[r] * f[c]);
        }
    }
}

/// Substitutes x = d∘x̃ and divides every block (every row of a linear block)
/// by its largest coefficient or constant.
fn rescale(problem: &ConicProblem, d: &[f64]) -> ConicProblem {
    let sub = |e: &LinExpr| LinExpr {
        terms: e.terms.iter().map(|(j, c)| (*j, c * d[*j])).collect(),
        constant: e.constant,
    };
    let peak = |rows: &[LinExpr]| {
        let m = rows.iter().fold(0.0f64, |m, r| {
            r.terms.iter().fold(m.max(r.constant.abs()), |m, (_, c)| m.max(c.abs()))
        });
        if m > 0.0 {
            1.0 / m
        } else {
            1.0
        }
    };
    let blocks = problem
        .blocks
        .iter()
        .map(|blk| {
            let mut rows: Vec<LinExpr> = blk.rows.iter().map(sub).collect();
            if let Cone::Psd(dim) = blk.cone {
                equilibrate_psd(dim, &mut rows);
            }
            let rows = match blk.cone {
                Cone::Zero | Cone::Nonneg => rows
                    .iter()
                    .map(|r| r.scaled(peak(std::slice::from_ref(r))))
                    .collect(),
                _ => {
                    let f = peak(&rows);
                    rows.iter().map(|r| r.scaled(f)).collect()
                }
            };
            ConeBlock {
                cone: blk.cone,
                rows,
                label: blk.label.clone(),
            }
        })
        .collect();
    let objective = sub(&problem.objective);
    let f = peak(std::slice::from_ref(&LinExpr {
        terms: objective.terms.clone(),
        constant: 0.0,
    }));
    ConicProblem {
        n_vars: problem.n_vars,
        objective: objective.scaled(f),
        blocks,
        registry: problem.registry.clone(),
    }
}

/// Solves `problem` with the embedded interior-point backend.
pub fn solve(problem: &ConicProblem, tol: &Tolerances) -> Result<Solution, ConicError> {
    solve_scaled(problem, &vec![1.0; problem.n_vars], tol)
}

struct Attempt {
    status: SolverStatus,
    x: Vec<f64>,
    gap: f64,
    iterations: u32,
}

/// Backend setting variants tried in turn when a solve stalls.
#[derive(Debug, Clone, Copy)]
enum Profile {
    Standard,
    Unequilibrated,
    Unregularized,
    ShortStep,
}

fn attempt(
    scaled: &ConicProblem,
    d: &[f64],
    tol: &Tolerances,
    inner: f64,
    profile: Profile,
) -> Result<Attempt, ConicError> {
    let Lowered { a, b, cones } = lower(scaled);
    let n = scaled.n_vars;
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for (i, c) in &scaled.objective.terms {
        q[*i] += c;
    }
    let mut builder = DefaultSettingsBuilder::default();
    match profile {
        Profile::Standard => {}
        Profile::Unequilibrated => {
            builder.equilibrate_enable(false);
        }
        Profile::Unregularized => {
            builder.static_regularization_enable(false);
        }
        Profile::ShortStep => {
            builder.max_step_fraction(0.9);
        }
    }
    let settings = builder
        .verbose(false)
        .max_iter(tol.max_iter)
        .tol_feas(inner)
        .tol_gap_abs((tol.gap * 0.1).max(1e-12))
        .tol_gap_rel((tol.gap * 0.1).max(1e-12))
        .tol_infeas_abs(1e-9)
        .tol_infeas_rel(1e-9)
        .build()
        .map_err(|e| ConicError::Backend(e.to_string()))?;
    let mut solver =
        DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| ConicError::Backend(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let gap = (sol.obj_val - sol.obj_val_dual).abs() / sol.obj_val.abs().max(1.0);
    Ok(Attempt {
        status: sol.status,
        x: sol.x.iter().zip(d).map(|(v, s)| v * s).collect(),
        gap,
        iterations: sol.iterations,
    })
}

/// Solves `problem` after substituting x = d∘x̃, where `d` holds the expected
/// magnitude of each variable. Residuals are always checked on the original
/// problem.
pub fn solve_scaled(problem: &ConicProblem, d: &[f64], tol: &Tolerances) -> Result<Solution, ConicError> {
    problem.validate()?;
    if d.len() != problem.n_vars || d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(ConicError::Malformed("variable scales must be positive and one per variable".into()));
    }
    blas_single_thread();
    let start = Instant::now();
    let scaled = rescale(problem, d);
    // Semidefinite blocks are also checked after equilibration, where a
    // violated small corner cannot hide behind large diagonal entries.
    let acceptable = |x: &[f64]| {
        let xs: Vec<f64> = x.iter().zip(d).map(|(v, s)| v / s).collect();
        x.iter().all(|v| v.is_finite())
            && problem
                .blocks
                .iter()
                .all(|blk| blk.residual(x) <= tol.feasibility * block_scale(blk, x))
            && scaled
                .blocks
                .iter()
                .filter(|blk| matches!(blk.cone, Cone::Psd(_)))
                .all(|blk| blk.residual(&xs) <= tol.feasibility * block_scale(blk, &xs))
    };
    let mut status = SolveStatus::NumericalFailure;
    let mut x = Vec::new();
    let mut iterations = 0;
    // The backend's stopping rules act on the scaled data, so the requested
    // accuracy is tightened until the original residuals pass.
    let plan = [
        (0.1, Profile::Standard),
        (0.1, Profile::Unequilibrated),
        (0.1, Profile::Unregularized),
        (0.1, Profile::ShortStep),
        (1.0, Profile::Standard),
    ];
    for (f, profile) in plan {
        let inner = (tol.feasibility * f).max(1e-12);
        let at = attempt(&scaled, d, tol, inner, profile)?;
        iterations += at.iterations;
        status = match at.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved if acceptable(&at.x) => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ if at.gap <= tol.gap * 10.0 && acceptable(&at.x) => SolveStatus::Optimal,
            _ => SolveStatus::NumericalFailure,
        };
        x = at.x;
        if status != SolveStatus::NumericalFailure {
            break;
        }
    }
    let solve_time = start.elapsed().as_secs_f64();
    Ok(if status == SolveStatus::Optimal {
        let objective = problem.objective_value(&x);
        Solution {
            status,
            x: Some(x),
            objective: Some(objective),
            solve_time,
            iterations,
        }
    } else {
        Solution {
            status,
            x: None,
            objective: None,
            solve_time,
            iterations,
        }
    })
}

use std::ops::Range;

use nalgebra::SymmetricEigen;

use super::expr::{CMatExpr, CVar, HermVar, LinExpr};
use super::lift::{packed_len, unpack_sym};
use super::ConicError;

/// Cone of a constraint block. Each block's rows form a vector that must lie
/// in the cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// All rows equal zero.
    Zero,
    /// All rows non-negative.
    Nonneg,
    /// `(t, x)` with ‖x‖ ≤ t.
    Soc,
    /// `(u, v, x)` with ‖x‖² ≤ u·v, u, v ≥ 0.
    Rsoc,
    /// Symmetric d×d matrix in packed layout (see [`super::lift`]) that must
    /// be positive semidefinite.
    Psd(usize),
}

impl Cone {
    pub fn tag(&self) -> &'static str {
        match self {
            Cone::Zero => "zero",
            Cone::Nonneg => "nonneg",
            Cone::Soc => "soc",
            Cone::Rsoc => "rsoc",
            Cone::Psd(_) => "psd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub cone: Cone,
    pub rows: Vec<LinExpr>,
    pub label: String,
}

impl ConeBlock {
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }

    /// Distance-style violation: positive means outside the cone.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let v = self.values(x);
        cone_residual(self.cone, &v)
    }
}

pub fn cone_residual(cone: Cone, v: &[f64]) -> f64 {
    let norm = |s: &[f64]| s.iter().map(|a| a * a).sum::<f64>().sqrt();
    match cone {
        Cone::Zero => v.iter().fold(0.0, |m, a| m.max(a.abs())),
        Cone::Nonneg => v.iter().fold(f64::NEG_INFINITY, |m, a| m.max(-a)),
        Cone::Soc => norm(&v[1..]) - v[0],
        Cone::Rsoc => {
            let mut t: Vec<f64> = v[2..].iter().map(|a| 2.0 * a).collect();
            t.push(v[0] - v[1]);
            norm(&t) - (v[0] + v[1])
        }
        Cone::Psd(d) => {
            if d == 0 {
                return f64::NEG_INFINITY;
            }
            -SymmetricEigen::new(unpack_sym(d, v)).eigenvalues.min()
        }
    }
}

/// A named index range in the decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct VarEntry {
    pub name: String,
    pub range: Range<usize>,
}

/// `minimize objective(x)` subject to every block lying in its cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub n_vars: usize,
    pub objective: LinExpr,
    pub blocks: Vec<ConeBlock>,
    pub registry: Vec<VarEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockResidual {
    pub label: String,
    pub cone: Cone,
    pub residual: f64,
}

impl ConicProblem {
    pub fn var(&self, name: &str) -> Option<Range<usize>> {
        self.registry.iter().find(|e| e.name == name).map(|e| e.range.clone())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    pub fn residuals(&self, x: &[f64]) -> Vec<BlockResidual> {
        self.blocks
            .iter()
            .map(|b| BlockResidual {
                label: b.label.clone(),
                cone: b.cone,
                residual: b.residual(x),
            })
            .collect()
    }

    pub fn max_residual(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| b.residual(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Blocks whose label starts with `prefix`.
    pub fn blocks_labelled<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a ConeBlock> + 'a {
        self.blocks.iter().filter(move |b| b.label.starts_with(prefix))
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let bad = |m: String| Err(ConicError::Malformed(m));
        let mut covered = vec![false; self.n_vars];
        for e in &self.registry {
            if e.range.end > self.n_vars {
                return bad(format!("variable {} exceeds {} columns", e.name, self.n_vars));
            }
            for i in e.range.clone() {
                if covered[i] {
                    return bad(format!("variable {} overlaps another entry", e.name));
                }
                covered[i] = true;
            }
        }
        if covered.iter().any(|c| !c) {
            return bad("registry does not cover every variable".into());
        }
        let in_range = |e: &LinExpr| e.terms.iter().all(|(i, c)| *i < self.n_vars && c.is_finite()) && e.constant.is_finite();
        if !in_range(&self.objective) {
            return bad("objective references an unknown variable".into());
        }
        for b in &self.blocks {
            let n = b.rows.len();
            let ok = match b.cone {
                Cone::Zero | Cone::Nonneg => true,
                Cone::Soc => n >= 1,
                Cone::Rsoc => n >= 2,
                Cone::Psd(d) => n == packed_len(d),
            };
            if !ok {
                return bad(format!("block {} has {} rows for cone {:?}", b.label, n, b.cone));
            }
            if !b.rows.iter().all(in_range) {
                return bad(format!("block {} references an unknown variable", b.label));
            }
        }
        Ok(())
    }
}

/// Incremental construction of a [`ConicProblem`].
#[derive(Debug, Default)]
pub struct ProblemBuilder {
    n_vars: usize,
    registry: Vec<VarEntry>,
    blocks: Vec<ConeBlock>,
    objective: LinExpr,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, len: usize) -> Range<usize> {
        let range = self.n_vars..self.n_vars + len;
        self.n_vars += len;
        self.registry.push(VarEntry {
            name: name.into(),
            range: range.clone(),
        });
        range
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> usize {
        self.add_var(name, 1).start
    }

    pub fn add_cvec(&mut self, name: impl Into<String>, n: usize) -> CVar {
        let r = self.add_var(name, 2 * n);
        CVar { start: r.start, n }
    }

    pub fn add_herm(&mut self, name: impl Into<String>, n: usize) -> HermVar {
        let r = self.add_var(name, HermVar::n_params(n));
        HermVar { start: r.start, n }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn push(&mut self, cone: Cone, label: impl Into<String>, rows: Vec<LinExpr>) {
        if rows.is_empty() && matches!(cone, Cone::Zero | Cone::Nonneg) {
            return;
        }
        self.blocks.push(ConeBlock {
            cone,
            rows,
            label: label.into(),
        });
    }

    pub fn nonneg(&mut self, label: impl Into<String>, rows: Vec<LinExpr>) {
        self.push(Cone::Nonneg, label, rows);
    }

    pub fn zero(&mut self, label: impl Into<String>, rows: Vec<LinExpr>) {
        self.push(Cone::Zero, label, rows);
    }

    /// ‖tail‖ ≤ head.
    pub fn soc(&mut self, label: impl Into<String>, head: LinExpr, tail: Vec<LinExpr>) {
        let mut rows = vec![head];
        rows.extend(tail);
        self.push(Cone::Soc, label, rows);
    }

    /// ‖tail‖² ≤ u·v.
    pub fn rsoc(&mut self, label: impl Into<String>, u: LinExpr, v: LinExpr, tail: Vec<LinExpr>) {
        let mut rows = vec![u, v];
        rows.extend(tail);
        self.push(Cone::Rsoc, label, rows);
    }

    /// Packed real symmetric d×d matrix ⪰ 0.
    pub fn psd_packed(&mut self, label: impl Into<String>, d: usize, rows: Vec<LinExpr>) {
        self.push(Cone::Psd(d), label, rows);
    }

    /// Hermitian matrix expression ⪰ 0. Purely real expressions keep their
    /// size; complex ones are lifted to the 2d real form.
    pub fn psd_hermitian(&mut self, label: impl Into<String>, m: &CMatExpr) {
        assert_eq!(m.rows, m.cols);
        let d = m.rows;
        let s2 = std::f64::consts::SQRT_2;
        let mut rows = Vec::new();
        if m.is_real() {
            for c in 0..d {
                for r in c..d {
                    let e = &m.get(r, c).re;
                    rows.push(if r == c { e.clone() } else { e.scaled(s2) });
                }
            }
            self.psd_packed(label, d, rows);
            return;
        }
        // Entry (r, c) of [[Re, −Im], [Im, Re]].
        let lifted = |r: usize, c: usize| -> LinExpr {
            let e = m.get(r % d, c % d);
            match (r < d, c < d) {
                (true, true) | (false, false) => e.re.clone(),
                (true, false) => -e.im.clone(),
                (false, true) => e.im.clone(),
            }
        };
        for c in 0..2 * d {
            for r in c..2 * d {
                let e = lifted(r, c);
                rows.push(if r == c { e } else { e.scaled(s2) });
            }
        }
        self.psd_packed(label, 2 * d, rows);
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn build(self) -> ConicProblem {
        ConicProblem {
            n_vars: self.n_vars,
            objective: self.objective,
            blocks: self.blocks,
            registry: self.registry,
        }
    }
}

//! Affine expressions over the real decision vector, plus complex and
//! complex-matrix wrappers used by the problem builders.

use std::ops::{Add, AddAssign, Mul, Neg, Range, Sub};

use crate::{CMatrix, CVector, C64};

/// Sparse affine form `constant + Σ coef·x[idx]` with indices strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, c: f64) -> Self {
        LinExpr {
            terms: if c == 0.0 { vec![] } else { vec![(i, c)] },
            constant: 0.0,
        }
    }

    /// Σ_k coefs[k]·x[range.start + k].
    pub fn dot(range: Range<usize>, coefs: &[f64]) -> Self {
        LinExpr {
            terms: range.zip(coefs).filter(|(_, c)| **c != 0.0).map(|(i, c)| (i, *c)).collect(),
            constant: 0.0,
        }
    }

    /// Sum of the variables in `range`.
    pub fn sum(range: Range<usize>) -> Self {
        LinExpr {
            terms: range.map(|i| (i, 1.0)).collect(),
            constant: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == 0.0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(i, c)| c * x[*i]).sum::<f64>()
    }

    pub fn scaled(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(i, c)| (*i, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    /// `self + s·other`, merging sorted term lists.
    pub fn axpy(&self, s: f64, other: &LinExpr) -> Self {
        if s == 0.0 {
            return self.clone();
        }
        let (a, b) = (&self.terms, &other.terms);
        let mut terms = Vec::with_capacity(a.len() + b.len());
        let (mut p, mut q) = (0, 0);
        while p < a.len() || q < b.len() {
            if q == b.len() || (p < a.len() && a[p].0 < b[q].0) {
                terms.push(a[p]);
                p += 1;
            } else if p == a.len() || b[q].0 < a[p].0 {
                terms.push((b[q].0, s * b[q].1));
                q += 1;
            } else {
                let c = a[p].1 + s * b[q].1;
                if c != 0.0 {
                    terms.push((a[p].0, c));
                }
                p += 1;
                q += 1;
            }
        }
        LinExpr {
            terms,
            constant: self.constant + s * other.constant,
        }
    }

    /// Sum of many expressions.
    pub fn sum_of<'a>(items: impl IntoIterator<Item = &'a LinExpr>) -> Self {
        let mut dense: std::collections::BTreeMap<usize, f64> = Default::default();
        let mut constant = 0.0;
        for e in items {
            constant += e.constant;
            for (i, c) in &e.terms {
                *dense.entry(*i).or_default() += c;
            }
        }
        LinExpr {
            terms: dense.into_iter().filter(|(_, c)| *c != 0.0).collect(),
            constant,
        }
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: LinExpr) -> LinExpr {
        self.axpy(1.0, &rhs)
    }
}

impl Add<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        self.axpy(1.0, rhs)
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: f64) -> LinExpr {
        self.constant += rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self.axpy(-1.0, &rhs)
    }
}

impl Sub<&LinExpr> for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        self.axpy(-1.0, rhs)
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: f64) -> LinExpr {
        self.constant -= rhs;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        *self = self.axpy(1.0, rhs);
    }
}

/// Complex affine expression `re + j·im`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(z: C64) -> Self {
        CExpr {
            re: LinExpr::constant(z.re),
            im: LinExpr::constant(z.im),
        }
    }

    pub fn real(re: LinExpr) -> Self {
        CExpr { re, im: LinExpr::zero() }
    }

    pub fn conj(&self) -> Self {
        CExpr {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `self + a·other` for a complex constant `a`.
    pub fn axpy(&self, a: C64, other: &CExpr) -> Self {
        CExpr {
            re: self.re.axpy(a.re, &other.re).axpy(-a.im, &other.im),
            im: self.im.axpy(a.re, &other.im).axpy(a.im, &other.re),
        }
    }

    pub fn mul_const(&self, a: C64) -> Self {
        CExpr::zero().axpy(a, self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        CExpr {
            re: self.re.scaled(s),
            im: self.im.scaled(s),
        }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        C64::new(self.re.eval(x), self.im.eval(x))
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
}

impl Add for &CExpr {
    type Output = CExpr;
    fn add(self, rhs: &CExpr) -> CExpr {
        CExpr {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &CExpr {
    type Output = CExpr;
    fn sub(self, rhs: &CExpr) -> CExpr {
        CExpr {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

/// A complex vector variable stored as `[Re; Im]` in a contiguous range.
#[derive(Debug, Clone, PartialEq)]
pub struct CVar {
    pub start: usize,
    pub n: usize,
}

impl CVar {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + 2 * self.n
    }

    pub fn re(&self, k: usize) -> usize {
        self.start + k
    }

    pub fn im(&self, k: usize) -> usize {
        self.start + self.n + k
    }

    pub fn entry(&self, k: usize) -> CExpr {
        CExpr {
            re: LinExpr::var(self.re(k)),
            im: LinExpr::var(self.im(k)),
        }
    }

    /// The complex inner product aᴴw.
    pub fn inner(&self, a: &CVector) -> CExpr {
        let mut re = Vec::with_capacity(2 * self.n);
        let mut im = Vec::with_capacity(2 * self.n);
        // conj(a_k)(x_k + j y_k) = (a.re x + a.im y) + j(a.re y − a.im x)
        for k in 0..self.n {
            re.push((self.re(k), a[k].re));
            im.push((self.re(k), -a[k].im));
        }
        for k in 0..self.n {
            re.push((self.im(k), a[k].im));
            im.push((self.im(k), a[k].re));
        }
        let clean = |v: Vec<(usize, f64)>| LinExpr {
            terms: v.into_iter().filter(|(_, c)| *c != 0.0).collect(),
            constant: 0.0,
        };
        CExpr {
            re: clean(re),
            im: clean(im),
        }
    }

    pub fn value(&self, x: &[f64]) -> CVector {
        CVector::from_fn(self.n, |k, _| C64::new(x[self.re(k)], x[self.im(k)]))
    }
}

/// A Hermitian n×n matrix variable parameterised by n² reals: the diagonal,
/// then real parts of the strictly lower triangle (column-major), then the
/// matching imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HermVar {
    pub start: usize,
    pub n: usize,
}

impl HermVar {
    pub fn n_params(n: usize) -> usize {
        n * n
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.n * self.n
    }

    fn lower_index(&self, r: usize, c: usize) -> usize {
        // Position of (r, c), r > c, within the strictly-lower column-major list.
        c * (2 * self.n - c - 1) / 2 + (r - c - 1)
    }

    pub fn entry(&self, r: usize, c: usize) -> CExpr {
        let n = self.n;
        if r == c {
            return CExpr::real(LinExpr::var(self.start + r));
        }
        let (lr, lc, sign) = if r > c { (r, c, 1.0) } else { (c, r, -1.0) };
        let off = self.lower_index(lr, lc);
        let m = n * (n - 1) / 2;
        CExpr {
            re: LinExpr::var(self.start + n + off),
            im: LinExpr::term(self.start + n + m + off, sign),
        }
    }

    pub fn trace(&self) -> LinExpr {
        LinExpr::sum(self.start..self.start + self.n)
    }

    pub fn value(&self, x: &[f64]) -> CMatrix {
        super::lift::herm_from_params(self.n, &x[self.range()])
    }

    pub fn expr(&self) -> CMatExpr {
        CMatExpr::from_fn(self.n, self.n, |r, c| self.entry(r, c))
    }

    /// Re(aᴴ W a) as a linear form in the parameters.
    pub fn quad(&self, a: &CVector) -> LinExpr {
        let n = self.n;
        let m = n * (n - 1) / 2;
        let mut coefs = vec![0.0; n * n];
        for r in 0..n {
            coefs[r] = a[r].norm_sqr();
        }
        for c in 0..n {
            for r in c + 1..n {
                // conj(a_r) W_rc a_c + conj(a_c) conj(W_rc) a_r = 2 Re(conj(a_r) a_c W_rc)
                let z = a[r].conj() * a[c];
                let off = self.lower_index(r, c);
                coefs[n + off] = 2.0 * z.re;
                coefs[n + m + off] = -2.0 * z.im;
            }
        }
        LinExpr::dot(self.range(), &coefs)
    }
}

/// Dense matrix of complex affine expressions (column-major).
#[derive(Debug, Clone, PartialEq)]
pub struct CMatExpr {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<CExpr>,
}

impl CMatExpr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatExpr {
            rows,
            cols,
            data: vec![CExpr::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> CExpr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        CMatExpr { rows, cols, data }
    }

    pub fn constant(m: &CMatrix) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| CExpr::constant(m[(r, c)]))
    }

    /// `e·I` for a real scalar expression.
    pub fn scaled_identity(n: usize, e: &LinExpr) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { CExpr::real(e.clone()) } else { CExpr::zero() })
    }

    pub fn scalar(e: CExpr) -> Self {
        CMatExpr {
            rows: 1,
            cols: 1,
            data: vec![e],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> &CExpr {
        &self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, e: CExpr) {
        self.data[c * self.rows + r] = e;
    }

    pub fn axpy(&self, s: f64, other: &CMatExpr) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatExpr {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| CExpr {
                    re: a.re.axpy(s, &b.re),
                    im: a.im.axpy(s, &b.im),
                })
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        CMatExpr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.scaled(s)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// A·self for a constant matrix A.
    pub fn left_mul(&self, a: &CMatrix) -> Self {
        assert_eq!(a.ncols(), self.rows);
        Self::from_fn(a.nrows(), self.cols, |r, c| {
            (0..self.rows)
                .filter(|&k| a[(r, k)] != C64::new(0.0, 0.0))
                .fold(CExpr::zero(), |acc, k| acc.axpy(a[(r, k)], self.get(k, c)))
        })
    }

    /// self·B for a constant matrix B.
    pub fn right_mul(&self, b: &CMatrix) -> Self {
        self.adjoint().left_mul(&b.adjoint()).adjoint()
    }

    /// A·self·Aᴴ.
    pub fn congruence(&self, a: &CMatrix) -> Self {
        self.left_mul(a).right_mul(&a.adjoint())
    }

    /// [[a, b], [c, d]] from conforming blocks.
    pub fn block2(a: &CMatExpr, b: &CMatExpr, c: &CMatExpr, d: &CMatExpr) -> Self {
        assert_eq!(a.rows, b.rows);
        assert_eq!(c.rows, d.rows);
        assert_eq!(a.cols, c.cols);
        assert_eq!(b.cols, d.cols);
        Self::from_fn(a.rows + c.rows, a.cols + b.cols, |r, col| {
            let top = r < a.rows;
            let left = col < a.cols;
            match (top, left) {
                (true, true) => a.get(r, col).clone(),
                (true, false) => b.get(r, col - a.cols).clone(),
                (false, true) => c.get(r - a.rows, col).clone(),
                (false, false) => d.get(r - a.rows, col - a.cols).clone(),
            }
        })
    }

    pub fn trace(&self) -> LinExpr {
        LinExpr::sum_of((0..self.rows.min(self.cols)).map(|i| &self.get(i, i).re))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(CExpr::is_real)
    }

    pub fn eval(&self, x: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c).eval(x))
    }
}

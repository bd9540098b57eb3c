//! Composite objectives `F = f + h` with per-sample oracle access.
//!
//! The smooth part `f` is a finite sum `(1/n) sum_i f_i`; every constructor
//! exposes per-sample value/gradient/Hessian-vector oracles plus their
//! full-batch averages, evaluated in a fixed summation order for
//! reproducibility. The nonsmooth part `h` is prox-friendly.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMat};
use crate::scalar::Scalar;

/// One row of a sparse design matrix (strictly increasing indices).
#[derive(Debug, Clone)]
pub struct SparseRow<S> {
    pub indices: Vec<u32>,
    pub values: Vec<S>,
}

impl<S: Scalar> SparseRow<S> {
    pub fn dense(values: &[S]) -> Self {
        SparseRow {
            indices: (0..values.len() as u32).collect(),
            values: values.to_vec(),
        }
    }

    #[inline]
    pub fn dot(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for (&i, &v) in self.indices.iter().zip(self.values.iter()) {
            acc = acc + v * x[i as usize];
        }
        acc
    }

    /// `out += c * row`
    #[inline]
    pub fn axpy_into(&self, c: S, out: &mut [S]) {
        for (&i, &v) in self.indices.iter().zip(self.values.iter()) {
            out[i as usize] = out[i as usize] + c * v;
        }
    }

    pub fn norm(&self) -> S {
        linalg::norm2(&self.values)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<S> {
        let mut out = vec![S::zero(); dim];
        for (&i, &v) in self.indices.iter().zip(self.values.iter()) {
            out[i as usize] = v;
        }
        out
    }
}

/// Nonsmooth term kinds. `l2_squared(c)` stands for `(c/2)||x||^2`,
/// `l1(lambda)` for `lambda * ||x||_1`, `box_indicator` for the indicator of
/// `[lo, hi]^d`.
#[derive(Debug, Clone)]
pub enum NonsmoothKind<S> {
    Zero,
    L1(S),
    L2Squared(S),
    L1PlusL2(S, S),
    BoxIndicator(S, S),
}

#[derive(Debug, Clone)]
pub struct NonsmoothTerm<S> {
    kind: NonsmoothKind<S>,
}

impl<S: Scalar> NonsmoothTerm<S> {
    pub fn zero() -> Self {
        NonsmoothTerm {
            kind: NonsmoothKind::Zero,
        }
    }

    pub fn l1(lambda: S) -> Self {
        assert!(lambda >= S::zero(), "l1 weight must be nonnegative");
        NonsmoothTerm {
            kind: NonsmoothKind::L1(lambda),
        }
    }

    pub fn l2_squared(c: S) -> Self {
        assert!(c >= S::zero(), "l2 weight must be nonnegative");
        NonsmoothTerm {
            kind: NonsmoothKind::L2Squared(c),
        }
    }

    pub fn l1_plus_l2(lambda: S, c: S) -> Self {
        assert!(lambda >= S::zero() && c >= S::zero());
        NonsmoothTerm {
            kind: NonsmoothKind::L1PlusL2(lambda, c),
        }
    }

    pub fn box_indicator(lo: S, hi: S) -> Self {
        assert!(lo <= hi, "box bounds out of order");
        NonsmoothTerm {
            kind: NonsmoothKind::BoxIndicator(lo, hi),
        }
    }

    pub fn kind(&self) -> &NonsmoothKind<S> {
        &self.kind
    }

    /// Strong convexity modulus of `h` (the `sigma2` of the l2 part).
    pub fn strong_convexity(&self) -> S {
        match self.kind {
            NonsmoothKind::L2Squared(c) | NonsmoothKind::L1PlusL2(_, c) => c,
            _ => S::zero(),
        }
    }

    pub fn eval(&self, x: &[S]) -> S {
        match self.kind {
            NonsmoothKind::Zero => S::zero(),
            NonsmoothKind::L1(lam) => {
                let mut acc = S::zero();
                for &v in x {
                    acc = acc + v.abs();
                }
                lam * acc
            }
            NonsmoothKind::L2Squared(c) => {
                let n = linalg::dot(x, x);
                c * n * S::of(0.5)
            }
            NonsmoothKind::L1PlusL2(lam, c) => {
                let mut acc = S::zero();
                for &v in x {
                    acc = acc + v.abs();
                }
                lam * acc + c * linalg::dot(x, x) * S::of(0.5)
            }
            NonsmoothKind::BoxIndicator(lo, hi) => {
                for &v in x {
                    if v < lo || v > hi {
                        return S::infinity();
                    }
                }
                S::zero()
            }
        }
    }

    /// `argmin_w (q/2) ||w - p||^2 + h(w)` computed coordinatewise.
    pub fn prox(&self, p: &[S], q: S, out: &mut [S]) {
        debug_assert!(q > S::zero());
        debug_assert_eq!(p.len(), out.len());
        match self.kind {
            NonsmoothKind::Zero => out.copy_from_slice(p),
            NonsmoothKind::L1(lam) => {
                let thr = lam / q;
                for (o, &v) in out.iter_mut().zip(p.iter()) {
                    *o = soft_threshold(v, thr);
                }
            }
            NonsmoothKind::L2Squared(c) => {
                let f = q / (q + c);
                for (o, &v) in out.iter_mut().zip(p.iter()) {
                    *o = f * v;
                }
            }
            NonsmoothKind::L1PlusL2(lam, c) => {
                // (q + c) w = q p - lam sign(w)
                let inv = S::one() / (q + c);
                for (o, &v) in out.iter_mut().zip(p.iter()) {
                    let shrunk = soft_threshold(q * v, lam);
                    *o = shrunk * inv;
                }
            }
            NonsmoothKind::BoxIndicator(lo, hi) => {
                for (o, &v) in out.iter_mut().zip(p.iter()) {
                    *o = if v < lo {
                        lo
                    } else if v > hi {
                        hi
                    } else {
                        v
                    };
                }
            }
        }
    }

    /// Returns `h` scaled by a positive factor (indicators are unchanged).
    pub fn scaled(&self, factor: S) -> Self {
        assert!(factor >= S::zero());
        let kind = match self.kind {
            NonsmoothKind::Zero => NonsmoothKind::Zero,
            NonsmoothKind::L1(lam) => NonsmoothKind::L1(lam * factor),
            NonsmoothKind::L2Squared(c) => NonsmoothKind::L2Squared(c * factor),
            NonsmoothKind::L1PlusL2(lam, c) => NonsmoothKind::L1PlusL2(lam * factor, c * factor),
            NonsmoothKind::BoxIndicator(lo, hi) => NonsmoothKind::BoxIndicator(lo, hi),
        };
        NonsmoothTerm { kind }
    }

    /// Euclidean distance from `v` to the subdifferential of `h` at `w`.
    /// Used by optimality checks in tests and diagnostics.
    pub fn subgradient_distance(&self, w: &[S], v: &[S]) -> S {
        let tol = S::epsilon().sqrt();
        let mut acc = S::zero();
        let mut add = |d: S| acc = acc + d * d;
        match self.kind {
            NonsmoothKind::Zero => {
                for &vi in v {
                    add(vi);
                }
            }
            NonsmoothKind::L1(lam) => {
                for (&wi, &vi) in w.iter().zip(v.iter()) {
                    add(l1_coord_distance(wi, vi, lam, tol));
                }
            }
            NonsmoothKind::L2Squared(c) => {
                for (&wi, &vi) in w.iter().zip(v.iter()) {
                    add(vi - c * wi);
                }
            }
            NonsmoothKind::L1PlusL2(lam, c) => {
                for (&wi, &vi) in w.iter().zip(v.iter()) {
                    add(l1_coord_distance(wi, vi - c * wi, lam, tol));
                }
            }
            NonsmoothKind::BoxIndicator(lo, hi) => {
                let btol = tol * (S::one() + lo.abs().max(hi.abs()));
                for (&wi, &vi) in w.iter().zip(v.iter()) {
                    let at_lo = (wi - lo).abs() <= btol;
                    let at_hi = (hi - wi).abs() <= btol;
                    let d = if at_lo && at_hi {
                        S::zero() // degenerate box, any v allowed
                    } else if at_lo {
                        vi.max(S::zero())
                    } else if at_hi {
                        (-vi).max(S::zero())
                    } else {
                        vi
                    };
                    add(d);
                }
            }
        }
        acc.sqrt()
    }
}

#[inline]
fn soft_threshold<S: Scalar>(v: S, thr: S) -> S {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        S::zero()
    }
}

fn l1_coord_distance<S: Scalar>(w: S, v: S, lam: S, tol: S) -> S {
    if w.abs() > tol * (S::one() + w.abs()) && w.abs() > tol {
        v - lam * w.signum()
    } else {
        (v.abs() - lam).max(S::zero())
    }
}

/// Problem constants feeding the error-budget and batch-size schedules.
///
/// `l3` is the Hessian Lipschitz constant, `dist_bound` the iterate-distance
/// bound, `tau1`/`gamma1` the gradient variance/range bounds, `tau2`/`gamma2`
/// the Hessian variance/range bounds, `delta` the overall failure
/// probability, `horizon_t` the declared iteration horizon and `r_bound` the
/// bound on consecutive estimating-sequence minimizer displacements.
#[derive(Debug, Clone)]
pub struct ScheduleConfig<S> {
    pub l3: S,
    pub dist_bound: S,
    pub sigma2: S,
    pub tau1: S,
    pub gamma1: S,
    pub tau2: S,
    pub gamma2: S,
    pub delta: S,
    pub horizon_t: usize,
    pub r_bound: S,
}

impl<S: Scalar> ScheduleConfig<S> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: S, name: &str| -> Result<()> {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
            Ok(())
        };
        pos(self.l3, "l3")?;
        pos(self.dist_bound, "dist_bound")?;
        pos(self.tau1, "tau1")?;
        pos(self.gamma1, "gamma1")?;
        pos(self.tau2, "tau2")?;
        pos(self.gamma2, "gamma2")?;
        pos(self.r_bound, "r_bound")?;
        if !(self.sigma2 >= S::zero()) {
            return Err(Error::InvalidConfig("sigma2 must be nonnegative".into()));
        }
        if !(self.delta > S::zero() && self.delta < S::one()) {
            return Err(Error::InvalidConfig("delta must lie in (0,1)".into()));
        }
        if self.horizon_t < 1 {
            return Err(Error::InvalidConfig("horizon_t must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) enum LinearPart<S> {
    Shared(Vec<S>),
    PerSample(Vec<Vec<S>>),
}

impl<S: Scalar> LinearPart<S> {
    #[inline]
    fn row(&self, i: usize) -> &[S] {
        match self {
            LinearPart::Shared(b) => b,
            LinearPart::PerSample(rows) => &rows[i],
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Smooth<S> {
    /// Per-sample logistic loss `f_i(x) = log(1 + exp(-y_i a_i^T x))`.
    Logistic {
        rows: Vec<SparseRow<S>>,
        labels: Vec<S>,
    },
    /// `f_i(x) = 0.5 (c_i^T x)^2 - b_i^T x + (cubic/3) ||x||^3`
    QuadraticCubic {
        factors: Vec<Vec<S>>,
        linear: LinearPart<S>,
        cubic: S,
    },
}

/// A composite objective `F = (1/n) sum_i f_i + h` with per-sample access.
///
/// Immutable after construction; clones share the smooth-part data.
#[derive(Debug, Clone)]
pub struct CompositeProblem<S> {
    dim: usize,
    n_samples: usize,
    smooth: Arc<Smooth<S>>,
    nonsmooth: NonsmoothTerm<S>,
    constants: ScheduleConfig<S>,
}

impl<S: Scalar> CompositeProblem<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn nonsmooth(&self) -> &NonsmoothTerm<S> {
        &self.nonsmooth
    }

    pub fn constants(&self) -> &ScheduleConfig<S> {
        &self.constants
    }

    /// Overrides schedule constants (the analytic defaults are estimates).
    pub fn constants_mut(&mut self) -> &mut ScheduleConfig<S> {
        &mut self.constants
    }

    pub fn sample_eval(&self, x: &[S], i: usize) -> S {
        debug_assert_eq!(x.len(), self.dim);
        match &*self.smooth {
            Smooth::Logistic { rows, labels } => {
                let z = labels[i] * rows[i].dot(x);
                softplus_neg(z)
            }
            Smooth::QuadraticCubic {
                factors,
                linear,
                cubic,
            } => {
                let cz = linalg::dot(&factors[i], x);
                let mut v = cz * cz * S::of(0.5) - linalg::dot(linear.row(i), x);
                if *cubic > S::zero() {
                    let r = linalg::norm2(x);
                    v = v + *cubic / S::of(3.0) * r * r * r;
                }
                v
            }
        }
    }

    pub fn sample_grad(&self, x: &[S], i: usize, out: &mut [S]) {
        debug_assert_eq!(out.len(), self.dim);
        match &*self.smooth {
            Smooth::Logistic { rows, labels } => {
                let y = labels[i];
                let z = y * rows[i].dot(x);
                let c = (sigmoid(z) - S::one()) * y;
                out.fill(S::zero());
                rows[i].axpy_into(c, out);
            }
            Smooth::QuadraticCubic {
                factors,
                linear,
                cubic,
            } => {
                let cz = linalg::dot(&factors[i], x);
                let b = linear.row(i);
                for j in 0..self.dim {
                    out[j] = cz * factors[i][j] - b[j];
                }
                if *cubic > S::zero() {
                    let r = linalg::norm2(x);
                    linalg::axpy(*cubic * r, x, out);
                }
            }
        }
    }

    pub fn sample_hvp(&self, x: &[S], i: usize, v: &[S], out: &mut [S]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &*self.smooth {
            Smooth::Logistic { rows, labels } => {
                let z = labels[i] * rows[i].dot(x);
                let s = sigmoid_prime(z);
                let av = rows[i].dot(v);
                out.fill(S::zero());
                rows[i].axpy_into(s * av, out);
            }
            Smooth::QuadraticCubic { factors, cubic, .. } => {
                let cv = linalg::dot(&factors[i], v);
                for j in 0..self.dim {
                    out[j] = cv * factors[i][j];
                }
                if *cubic > S::zero() {
                    let r = linalg::norm2(x);
                    if r > S::zero() {
                        let xv = linalg::dot(x, v);
                        for j in 0..self.dim {
                            out[j] = out[j] + *cubic * (r * v[j] + xv / r * x[j]);
                        }
                    }
                }
            }
        }
    }

    /// Dense per-sample Hessian; intended for small `dim`.
    pub fn sample_hess(&self, x: &[S], i: usize) -> DenseMat<S> {
        let d = self.dim;
        let mut m = DenseMat::zeros(d);
        match &*self.smooth {
            Smooth::Logistic { rows, labels } => {
                let z = labels[i] * rows[i].dot(x);
                let s = sigmoid_prime(z);
                let a = rows[i].to_dense(d);
                for r in 0..d {
                    for c in 0..d {
                        m.set(r, c, s * a[r] * a[c]);
                    }
                }
            }
            Smooth::QuadraticCubic { factors, cubic, .. } => {
                let f = &factors[i];
                for r in 0..d {
                    for c in 0..d {
                        m.set(r, c, f[r] * f[c]);
                    }
                }
                if *cubic > S::zero() {
                    let rad = linalg::norm2(x);
                    if rad > S::zero() {
                        for r in 0..d {
                            for c in 0..d {
                                m.add_at(r, c, *cubic * x[r] * x[c] / rad);
                            }
                            m.add_at(r, r, *cubic * rad);
                        }
                    }
                }
            }
        }
        m
    }

    /// Full smooth value `(1/n) sum_i f_i(x)` in fixed summation order.
    pub fn full_eval(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for i in 0..self.n_samples {
            acc = acc + self.sample_eval(x, i);
        }
        acc / S::from_usize(self.n_samples).unwrap()
    }

    pub fn full_grad(&self, x: &[S], out: &mut [S]) {
        out.fill(S::zero());
        let mut buf = vec![S::zero(); self.dim];
        for i in 0..self.n_samples {
            self.sample_grad(x, i, &mut buf);
            for j in 0..self.dim {
                out[j] = out[j] + buf[j];
            }
        }
        let inv = S::one() / S::from_usize(self.n_samples).unwrap();
        linalg::scale(inv, out);
    }

    pub fn full_hvp(&self, x: &[S], v: &[S], out: &mut [S]) {
        out.fill(S::zero());
        let mut buf = vec![S::zero(); self.dim];
        for i in 0..self.n_samples {
            self.sample_hvp(x, i, v, &mut buf);
            for j in 0..self.dim {
                out[j] = out[j] + buf[j];
            }
        }
        let inv = S::one() / S::from_usize(self.n_samples).unwrap();
        linalg::scale(inv, out);
    }

    pub fn full_hess(&self, x: &[S]) -> DenseMat<S> {
        let mut acc = DenseMat::zeros(self.dim);
        let inv = S::one() / S::from_usize(self.n_samples).unwrap();
        for i in 0..self.n_samples {
            let m = self.sample_hess(x, i);
            acc.add_scaled(inv, &m);
        }
        acc
    }

    /// Composite objective `F(x) = f(x) + h(x)`.
    pub fn objective(&self, x: &[S]) -> S {
        self.full_eval(x) + self.nonsmooth.eval(x)
    }

    /// Dense copy of the `i`-th feature/factor row (diagnostics).
    pub fn sample_row_dense(&self, i: usize) -> Vec<S> {
        match &*self.smooth {
            Smooth::Logistic { rows, .. } => rows[i].to_dense(self.dim),
            Smooth::QuadraticCubic { factors, .. } => factors[i].clone(),
        }
    }

    /// Label of the `i`-th sample for logistic problems.
    pub fn sample_label(&self, i: usize) -> Option<S> {
        match &*self.smooth {
            Smooth::Logistic { labels, .. } => Some(labels[i]),
            _ => None,
        }
    }

    /// Exact spectral norm of the `i`-th sample Hessian when available in
    /// closed form (rank-one samples). `None` means "estimate numerically".
    pub(crate) fn sample_hess_norm_hint(&self, x: &[S], i: usize) -> Option<S> {
        match &*self.smooth {
            Smooth::Logistic { rows, labels } => {
                let z = labels[i] * rows[i].dot(x);
                let n = rows[i].norm();
                Some(sigmoid_prime(z) * n * n)
            }
            Smooth::QuadraticCubic { factors, cubic, .. } => {
                if *cubic == S::zero() {
                    let n = linalg::norm2(&factors[i]);
                    Some(n * n)
                } else {
                    None
                }
            }
        }
    }

    /// Curvature coefficient `c` when the `i`-th sample Hessian at `x` is the
    /// rank-one matrix `c a_i a_i^T`; lets operators cache the coefficients.
    pub(crate) fn sample_rank1_curvature(&self, x: &[S], i: usize) -> Option<S> {
        match &*self.smooth {
            Smooth::Logistic { rows, labels } => {
                let z = labels[i] * rows[i].dot(x);
                Some(sigmoid_prime(z))
            }
            Smooth::QuadraticCubic { cubic, .. } => {
                if *cubic == S::zero() {
                    Some(S::one())
                } else {
                    None
                }
            }
        }
    }

    /// `out += coeff * (a_i . v) * a_i` for rank-one sample Hessians.
    #[inline]
    pub(crate) fn rank1_hvp_accumulate(&self, i: usize, coeff: S, v: &[S], out: &mut [S]) {
        match &*self.smooth {
            Smooth::Logistic { rows, .. } => {
                let av = rows[i].dot(v);
                rows[i].axpy_into(coeff * av, out);
            }
            Smooth::QuadraticCubic { factors, .. } => {
                let f = &factors[i];
                let av = linalg::dot(f, v);
                linalg::axpy(coeff * av, f, out);
            }
        }
    }
}

#[inline]
fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

#[inline]
fn sigmoid_prime<S: Scalar>(z: S) -> S {
    let s = sigmoid(z);
    s * (S::one() - s)
}

/// Numerically stable `log(1 + exp(-z))`.
#[inline]
fn softplus_neg<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

fn default_constants<S: Scalar>(sigma2: S) -> ScheduleConfig<S> {
    ScheduleConfig {
        l3: S::one(),
        dist_bound: S::one(),
        sigma2,
        tau1: S::one(),
        gamma1: S::one(),
        tau2: S::one(),
        gamma2: S::one(),
        delta: S::of(0.05),
        horizon_t: 10,
        r_bound: S::of(2.0),
    }
}

const L3_FLOOR: f64 = 1e-9;

/// Builds a regularized logistic regression problem. Labels must be +-1.
///
/// The schedule constants are conservative analytic estimates from the data
/// norms; override them through [`CompositeProblem::constants_mut`] when a
/// tighter value is known.
pub fn make_logistic<S: Scalar>(
    rows: Vec<SparseRow<S>>,
    labels: Vec<S>,
    nonsmooth: NonsmoothTerm<S>,
) -> Result<CompositeProblem<S>> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} labels",
            rows.len(),
            labels.len()
        )));
    }
    for (i, &y) in labels.iter().enumerate() {
        if y != S::one() && y != -S::one() {
            return Err(Error::InvalidInput(format!(
                "label at sample {i} must be +1 or -1"
            )));
        }
    }
    let mut dim = 0usize;
    for (i, r) in rows.iter().enumerate() {
        if r.indices.len() != r.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "row {i}: index/value length mismatch"
            )));
        }
        for w in r.indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(format!(
                    "row {i}: indices must be strictly increasing"
                )));
            }
        }
        if let Some(&last) = r.indices.last() {
            dim = dim.max(last as usize + 1);
        }
        if r.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("row {i}: non-finite value")));
        }
    }
    if dim == 0 {
        return Err(Error::InvalidInput("all rows are empty".into()));
    }

    let n = rows.len();
    let n_s = S::from_usize(n).unwrap();
    let mut max_norm = S::zero();
    let mut mean_sq = S::zero();
    let mut mean_quad = S::zero();
    for r in &rows {
        let nm = r.norm();
        max_norm = max_norm.max(nm);
        mean_sq = mean_sq + nm * nm / n_s;
        mean_quad = mean_quad + nm * nm * nm * nm / n_s;
    }
    let mut constants = default_constants(nonsmooth.strong_convexity());
    // |sigma''| <= 1/(6 sqrt 3) gives the per-sample Hessian Lipschitz bound
    // ||a||^3 / (6 sqrt 3).
    let six_sqrt3 = S::of(6.0) * S::of(3.0).sqrt();
    constants.l3 = (max_norm * max_norm * max_norm / six_sqrt3).max(S::of(L3_FLOOR));
    constants.tau1 = mean_sq.sqrt().max(S::of(1e-12));
    constants.gamma1 = (S::of(2.0) * max_norm).max(S::of(1e-12));
    constants.tau2 = (mean_quad / S::of(16.0)).sqrt().max(S::of(1e-12));
    constants.gamma2 = (max_norm * max_norm / S::of(2.0)).max(S::of(1e-12));

    Ok(CompositeProblem {
        dim,
        n_samples: n,
        smooth: Arc::new(Smooth::Logistic { rows, labels }),
        nonsmooth,
        constants,
    })
}

/// Builds a quadratic problem `f(x) = 0.5 x^T A x - b^T x` from rank-one
/// factors: `A = (1/n) sum_i c_i c_i^T` (PSD by construction), with a shared
/// linear term (`b_i = b` for every sample).
pub fn make_quadratic<S: Scalar>(
    factors: Vec<Vec<S>>,
    b: Vec<S>,
    nonsmooth: NonsmoothTerm<S>,
) -> Result<CompositeProblem<S>> {
    make_quadratic_cubic(factors, LinearSpec::Shared(b), S::zero(), nonsmooth)
}

/// Linear-term layout for quadratic problems.
pub enum LinearSpec<S> {
    Shared(Vec<S>),
    PerSample(Vec<Vec<S>>),
}

/// General constructor for the quadratic-plus-cubic-smooth family:
/// `f_i(x) = 0.5 (c_i^T x)^2 - b_i^T x + (cubic/3) ||x||^3`.
///
/// The cubed-norm term has a 2*cubic-Lipschitz Hessian, giving a genuinely
/// varying curvature for local-rate experiments while staying convex.
pub fn make_quadratic_cubic<S: Scalar>(
    factors: Vec<Vec<S>>,
    linear: LinearSpec<S>,
    cubic: S,
    nonsmooth: NonsmoothTerm<S>,
) -> Result<CompositeProblem<S>> {
    if factors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = factors[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("zero-dimensional factors".into()));
    }
    for (i, f) in factors.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "factor {i} has length {}, expected {dim}",
                f.len()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("factor {i}: non-finite value")));
        }
    }
    if !(cubic >= S::zero()) {
        return Err(Error::InvalidInput("cubic coefficient must be >= 0".into()));
    }
    let n = factors.len();
    let linear = match linear {
        LinearSpec::Shared(b) => {
            if b.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "linear term has length {}, expected {dim}",
                    b.len()
                )));
            }
            LinearPart::Shared(b)
        }
        LinearSpec::PerSample(rows) => {
            if rows.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} linear rows vs {n} factors",
                    rows.len()
                )));
            }
            if rows.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch(
                    "linear row length mismatch".into(),
                ));
            }
            LinearPart::PerSample(rows)
        }
    };

    let n_s = S::from_usize(n).unwrap();
    let mut max_sq = S::zero();
    let mut mean_quad = S::zero();
    for f in &factors {
        let nm = linalg::norm2(f);
        max_sq = max_sq.max(nm * nm);
        mean_quad = mean_quad + nm * nm * nm * nm / n_s;
    }
    let mut constants = default_constants(nonsmooth.strong_convexity());
    constants.l3 = (S::of(2.0) * cubic).max(S::of(L3_FLOOR));
    // nominal unit-radius variance estimates; override for sharper schedules
    constants.tau1 = mean_quad.sqrt().max(S::of(1e-12));
    constants.gamma1 = (S::of(2.0) * max_sq).max(S::of(1e-12));
    constants.tau2 = mean_quad.sqrt().max(S::of(1e-12));
    constants.gamma2 = (S::of(2.0) * max_sq).max(S::of(1e-12));

    Ok(CompositeProblem {
        dim,
        n_samples: n,
        smooth: Arc::new(Smooth::QuadraticCubic {
            factors,
            linear,
            cubic,
        }),
        nonsmooth,
        constants,
    })
}

/// Quadratic problem with a diagonal `A`, split over `n` rank-one samples so
/// the finite-sum structure is genuine. Negative diagonal entries (a non-PSD
/// `A`) are rejected.
pub fn make_quadratic_diag<S: Scalar>(
    diag: &[S],
    b: Vec<S>,
    n: usize,
    nonsmooth: NonsmoothTerm<S>,
) -> Result<CompositeProblem<S>> {
    let d = diag.len();
    if d == 0 || n == 0 {
        return Err(Error::InvalidInput("empty diagonal or n = 0".into()));
    }
    if n < d {
        return Err(Error::InvalidInput(format!(
            "need n >= d to split a rank-{d} matrix over {n} samples"
        )));
    }
    if diag.iter().any(|&v| v < S::zero()) {
        return Err(Error::InvalidInput(
            "diagonal has negative entries; matrix is not PSD".into(),
        ));
    }
    let mut counts = vec![0usize; d];
    for j in 0..n {
        counts[j % d] += 1;
    }
    let n_s = S::from_usize(n).unwrap();
    let mut factors = Vec::with_capacity(n);
    for j in 0..n {
        let k = j % d;
        let mut c = vec![S::zero(); d];
        let w = diag[k] * n_s / S::from_usize(counts[k]).unwrap();
        c[k] = w.sqrt();
        factors.push(c);
    }
    make_quadratic(factors, b, nonsmooth)
}

//! Subsampled gradient and Hessian oracles with concentration-based batch
//! sizing.
//!
//! Batch sizes invert the vector/matrix Bernstein tail bounds: given a target
//! error `eps` and failure probability `delta`, the gradient batch is the
//! smallest `m` with `exp(-m eps^2 / (8 tau1^2) + 1/4) <= delta`, and the
//! Hessian batch the smallest `m` with
//! `2 d exp(-m eps^2 / (4 tau2^2) + 1/4) <= delta`. In the finite-sum setting
//! both clamp to `n`, at which point the estimate is exact.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMat};
use crate::problem::{CompositeProblem, ScheduleConfig};
use crate::scalar::Scalar;

/// Resolved batch size plus clamp/validity flags.
#[derive(Debug, Clone, Copy)]
pub struct BatchSize {
    pub size: usize,
    /// The clamp hit `n`: the estimate will be exact.
    pub exact: bool,
    /// `eps` fell outside the Bernstein validity window; the formula value is
    /// still returned but the event should be surfaced in run logs.
    pub outside_regime: bool,
}

fn check_eps_delta<S: Scalar>(eps: S, fail_prob: S) -> Result<()> {
    if !(eps > S::zero()) || !eps.is_finite() {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    if !(fail_prob > S::zero() && fail_prob < S::one()) {
        return Err(Error::InvalidInput("fail_prob must lie in (0,1)".into()));
    }
    Ok(())
}

fn clamp_batch(m: f64, n: Option<usize>) -> (usize, bool) {
    let m = if m.is_finite() { m.ceil().max(1.0) } else { f64::MAX };
    match n {
        Some(n) => {
            let n = n.max(1);
            if m >= n as f64 {
                (n, true)
            } else {
                (m as usize, false)
            }
        }
        None => (m.min(u64::MAX as f64) as usize, false),
    }
}

/// Gradient batch size for target error `eps` at failure probability
/// `fail_prob`, clamped to `n` when the problem is a finite sum
/// (`n = None` means online / unbounded).
pub fn grad_batch_size<S: Scalar>(
    eps: S,
    fail_prob: S,
    cfg: &ScheduleConfig<S>,
    n: Option<usize>,
) -> Result<BatchSize> {
    check_eps_delta(eps, fail_prob)?;
    let tau1 = cfg.tau1.to_f64_lossy();
    let eps_f = eps.to_f64_lossy();
    let delta = fail_prob.to_f64_lossy();
    let window = tau1 * tau1 / cfg.gamma1.to_f64_lossy();
    let outside = !(eps_f < window);
    let m = 8.0 * tau1 * tau1 * (0.25 + (1.0 / delta).ln()) / (eps_f * eps_f);
    let (size, exact) = clamp_batch(m, n);
    Ok(BatchSize {
        size,
        exact,
        outside_regime: outside,
    })
}

/// Hessian batch size (matrix Bernstein), clamped to `n` as above.
pub fn hess_batch_size<S: Scalar>(
    eps: S,
    fail_prob: S,
    cfg: &ScheduleConfig<S>,
    dim: usize,
    n: Option<usize>,
) -> Result<BatchSize> {
    check_eps_delta(eps, fail_prob)?;
    if dim == 0 {
        return Err(Error::InvalidInput("dim must be positive".into()));
    }
    let tau2 = cfg.tau2.to_f64_lossy();
    let eps_f = eps.to_f64_lossy();
    let delta = fail_prob.to_f64_lossy();
    let window = 2.0 * tau2 * tau2 / cfg.gamma2.to_f64_lossy();
    let outside = !(eps_f < window);
    let m = 4.0 * tau2 * tau2 * (0.25 + (2.0 * dim as f64 / delta).ln()) / (eps_f * eps_f);
    let (size, exact) = clamp_batch(m, n);
    Ok(BatchSize {
        size,
        exact,
        outside_regime: outside,
    })
}

/// A subsampled gradient.
#[derive(Debug, Clone)]
pub struct GradientEstimate<S> {
    pub g: Vec<S>,
    pub batch: usize,
    /// Exact full gradient (batch hit `n`, drawn without replacement).
    pub exact: bool,
    pub target_err: S,
    pub fail_prob: S,
}

/// Mean of `batch` per-sample gradients drawn uniformly with replacement;
/// switches to the exact full gradient (one pass in fixed order) when
/// `batch >= n`.
pub fn sample_gradient<S: Scalar, R: Rng>(
    problem: &CompositeProblem<S>,
    x: &[S],
    batch: usize,
    rng: &mut R,
) -> GradientEstimate<S> {
    assert!(batch >= 1, "batch must be >= 1");
    let n = problem.n_samples();
    let d = problem.dim();
    let mut g = vec![S::zero(); d];
    if batch >= n {
        problem.full_grad(x, &mut g);
        return GradientEstimate {
            g,
            batch: n,
            exact: true,
            target_err: S::zero(),
            fail_prob: S::zero(),
        };
    }
    let mut buf = vec![S::zero(); d];
    for _ in 0..batch {
        let i = rng.random_range(0..n);
        problem.sample_grad(x, i, &mut buf);
        for j in 0..d {
            g[j] = g[j] + buf[j];
        }
    }
    let inv = S::one() / S::from_usize(batch).unwrap();
    linalg::scale(inv, &mut g);
    GradientEstimate {
        g,
        batch,
        exact: false,
        target_err: S::zero(),
        fail_prob: S::zero(),
    }
}

/// A subsampled Hessian, kept as an operator: the average of per-sample
/// Hessian-vector products over a retained index multiset, plus `shift * I`.
///
/// Per-sample access (`sample_apply`, `sample_norm`) is retained so
/// variance-reduced subproblem solvers can exploit the finite-sum structure.
#[derive(Debug, Clone)]
pub struct HessianEstimate<S> {
    problem: CompositeProblem<S>,
    anchor: Vec<S>,
    ids: Vec<usize>,
    shift: S,
    /// Cached rank-one curvature coefficients at the anchor, when the smooth
    /// family supports them (avoids re-evaluating link functions per apply).
    curvatures: Option<Vec<S>>,
    pub exact: bool,
    pub target_err: S,
}

impl<S: Scalar> HessianEstimate<S> {
    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn batch(&self) -> usize {
        self.ids.len()
    }

    pub fn shift(&self) -> S {
        self.shift
    }

    pub fn anchor(&self) -> &[S] {
        &self.anchor
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.ids
    }

    /// `out = H v` where `H = (1/m) sum_k hess(sample ids[k]) + shift I`.
    pub fn apply(&self, v: &[S], out: &mut [S]) {
        let d = self.dim();
        debug_assert_eq!(v.len(), d);
        out.fill(S::zero());
        if let Some(cs) = &self.curvatures {
            for (k, &i) in self.ids.iter().enumerate() {
                self.problem.rank1_hvp_accumulate(i, cs[k], v, out);
            }
        } else {
            let mut buf = vec![S::zero(); d];
            for &i in &self.ids {
                self.problem.sample_hvp(&self.anchor, i, v, &mut buf);
                for j in 0..d {
                    out[j] = out[j] + buf[j];
                }
            }
        }
        let inv = S::one() / S::from_usize(self.ids.len()).unwrap();
        for j in 0..d {
            out[j] = out[j] * inv + self.shift * v[j];
        }
    }

    pub fn apply_vec(&self, v: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim()];
        self.apply(v, &mut out);
        out
    }

    /// `out = H_k v` for the `k`-th retained sample (shift included, so the
    /// average of the per-sample operators equals `apply`).
    pub fn sample_apply(&self, k: usize, v: &[S], out: &mut [S]) {
        if let Some(cs) = &self.curvatures {
            out.fill(S::zero());
            self.problem.rank1_hvp_accumulate(self.ids[k], cs[k], v, out);
        } else {
            self.problem.sample_hvp(&self.anchor, self.ids[k], v, out);
        }
        for j in 0..out.len() {
            out[j] = out[j] + self.shift * v[j];
        }
    }

    /// Spectral norm of the `k`-th per-sample operator. Exact for rank-one
    /// samples, otherwise a power-iteration estimate.
    pub fn sample_norm(&self, k: usize) -> S {
        let i = self.ids[k];
        if let Some(base) = self.problem.sample_hess_norm_hint(&self.anchor, i) {
            return base + self.shift;
        }
        let d = self.dim();
        let base = linalg::operator_spectral_norm(d, 60, |v, out| {
            self.problem.sample_hvp(&self.anchor, i, v, out)
        });
        base + self.shift
    }

    /// Densifies the operator (test-scale only).
    pub fn dense(&self) -> DenseMat<S> {
        DenseMat::from_operator(self.dim(), |v, out| self.apply(v, out))
    }
}

/// Draws a subsampled Hessian operator at `x`. `batch >= n` switches to the
/// exact full-index pass.
pub fn sample_hessian<S: Scalar, R: Rng>(
    problem: &CompositeProblem<S>,
    x: &[S],
    batch: usize,
    shift: S,
    rng: &mut R,
) -> HessianEstimate<S> {
    assert!(batch >= 1, "batch must be >= 1");
    assert!(shift >= S::zero(), "shift must be nonnegative");
    let n = problem.n_samples();
    let (ids, exact) = if batch >= n {
        ((0..n).collect::<Vec<_>>(), true)
    } else {
        ((0..batch).map(|_| rng.random_range(0..n)).collect(), false)
    };
    build_estimate(problem, x, ids, shift, exact)
}

/// Exact Hessian operator at `x` with an optional diagonal shift.
pub fn exact_hessian<S: Scalar>(
    problem: &CompositeProblem<S>,
    x: &[S],
    shift: S,
) -> HessianEstimate<S> {
    let ids = (0..problem.n_samples()).collect();
    build_estimate(problem, x, ids, shift, true)
}

fn build_estimate<S: Scalar>(
    problem: &CompositeProblem<S>,
    x: &[S],
    ids: Vec<usize>,
    shift: S,
    exact: bool,
) -> HessianEstimate<S> {
    let mut curvatures = Some(Vec::with_capacity(ids.len()));
    for &i in &ids {
        match problem.sample_rank1_curvature(x, i) {
            Some(c) => curvatures.as_mut().unwrap().push(c),
            None => {
                curvatures = None;
                break;
            }
        }
    }
    HessianEstimate {
        problem: problem.clone(),
        anchor: x.to_vec(),
        ids,
        shift,
        curvatures,
        exact,
        target_err: S::zero(),
    }
}

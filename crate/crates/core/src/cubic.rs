//! The cubic-regularized second-order model and its prox machinery.
//!
//! For an anchor `y`, inexact gradient `g`, Hessian operator `H` and
//! coefficient `eta`, the model is
//!
//! ```text
//! m(x) = f(y) + <g, x-y> + 0.5 <H (x-y), x-y> + (eta/6) ||x-y||^3 + h(x)
//! ```
//!
//! Internally everything works in the shifted variable `w = x - y`, where the
//! smooth part is the quadratic `<g, w> + 0.5 <H w, w>` and the composite
//! part is `r(w) = (eta/6) ||w||^3 + h(w + y)`. The composite part is
//! `eta/2`-uniformly convex of degree 3, which yields computable optimality
//! gap certificates from the prox-gradient residual; those certificates drive
//! both the high-accuracy reference solver and the stage control of the
//! variance-reduced solver.

use crate::linalg::{self, DenseMat};
use crate::problem::{CompositeProblem, NonsmoothTerm, ScheduleConfig};
use crate::sampling::HessianEstimate;
use crate::scalar::Scalar;

/// Local cubic-regularized model of the smooth part around `anchor`.
#[derive(Debug, Clone)]
pub struct CubicModel<S> {
    pub anchor: Vec<S>,
    pub g: Vec<S>,
    pub hessian: HessianEstimate<S>,
    pub eta: S,
    pub f_at_anchor: S,
    pub nonsmooth: NonsmoothTerm<S>,
}

impl<S: Scalar> CubicModel<S> {
    pub fn new(
        anchor: Vec<S>,
        g: Vec<S>,
        hessian: HessianEstimate<S>,
        eta: S,
        f_at_anchor: S,
        nonsmooth: NonsmoothTerm<S>,
    ) -> Self {
        assert_eq!(anchor.len(), g.len(), "anchor/gradient dimension mismatch");
        assert_eq!(anchor.len(), hessian.dim(), "Hessian dimension mismatch");
        assert!(eta > S::zero(), "eta must be positive");
        CubicModel {
            anchor,
            g,
            hessian,
            eta,
            f_at_anchor,
            nonsmooth,
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Model value at `x` (one Hessian apply).
    pub fn value(&self, x: &[S]) -> S {
        let d = self.dim();
        let mut w = vec![S::zero(); d];
        linalg::sub(x, &self.anchor, &mut w);
        self.value_w(&w)
    }

    /// Model value as a function of `w = x - anchor`.
    pub fn value_w(&self, w: &[S]) -> S {
        let hw = self.hessian.apply_vec(w);
        self.value_w_given_hw(w, &hw)
    }

    /// Model value given a precomputed `H w` (no extra applies).
    pub fn value_w_given_hw(&self, w: &[S], hw: &[S]) -> S {
        let d = self.dim();
        let mut x = vec![S::zero(); d];
        for j in 0..d {
            x[j] = self.anchor[j] + w[j];
        }
        let r = linalg::norm2(w);
        self.f_at_anchor
            + linalg::dot(&self.g, w)
            + linalg::dot(hw, w) * S::of(0.5)
            + self.eta / S::of(6.0) * r * r * r
            + self.nonsmooth.eval(&x)
    }

    /// Gradient of the smooth (quadratic) part at `w`: `g + H w`
    /// (one Hessian apply).
    pub fn smooth_grad_w(&self, w: &[S], out: &mut [S]) {
        self.hessian.apply(w, out);
        for j in 0..out.len() {
            out[j] = out[j] + self.g[j];
        }
    }

    /// Strong convexity modulus known for the model
    /// (nonsmooth part plus the Hessian shift).
    pub fn strong_convexity(&self) -> S {
        self.nonsmooth.strong_convexity() + self.hessian.shift()
    }
}

/// `argmin_w (1/(2 step)) ||w - z||^2 + (eta/6) ||w||^3 + h(w + y_anchor)`.
///
/// Radial reduction: for fixed `rho = ||w||` the minimizer is a prox of `h`
/// with quadratic coefficient `q = 1/step + eta rho / 2` around
/// `p = z / (1 + step eta rho / 2)`; the scalar fixed point
/// `||w(rho)|| = rho` is found by safeguarded secant/bisection. The overall
/// objective is strongly convex, so the fixed point is unique.
pub fn prox_cubic_h<S: Scalar>(
    nonsmooth: &NonsmoothTerm<S>,
    y_anchor: &[S],
    eta: S,
    step: S,
    z: &[S],
) -> Vec<S> {
    assert!(step > S::zero(), "step must be positive");
    assert!(eta >= S::zero(), "eta must be nonnegative");
    let d = z.len();
    let mut shifted = vec![S::zero(); d];
    let mut prox_out = vec![S::zero(); d];
    let mut w = vec![S::zero(); d];

    let mut w_of = |rho: S, w: &mut Vec<S>| -> S {
        let q = S::one() / step + eta * rho * S::of(0.5);
        let denom = S::one() + step * eta * rho * S::of(0.5);
        for j in 0..d {
            shifted[j] = z[j] / denom + y_anchor[j];
        }
        nonsmooth.prox(&shifted, q, &mut prox_out);
        for j in 0..d {
            w[j] = prox_out[j] - y_anchor[j];
        }
        linalg::norm2(w)
    };

    if eta == S::zero() {
        w_of(S::zero(), &mut w);
        return w;
    }

    let norm0 = w_of(S::zero(), &mut w);
    let tol = S::of(1e-12) * (S::one() + linalg::norm2(z));
    let tol = tol.max(S::epsilon() * S::of(8.0) * (S::one() + norm0));
    if norm0 <= tol {
        return w;
    }
    // bracket the root of phi(rho) = ||w(rho)|| - rho
    let mut lo = S::zero();
    let mut phi_lo = norm0;
    let mut hi = norm0;
    let mut phi_hi = w_of(hi, &mut w) - hi;
    let mut guard = 0;
    while phi_hi > S::zero() {
        lo = hi;
        phi_lo = phi_hi;
        hi = hi * S::of(2.0);
        phi_hi = w_of(hi, &mut w) - hi;
        guard += 1;
        assert!(guard < 200, "cubic prox radial bracket failure");
    }
    // secant with bisection fallback
    for _ in 0..240 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * S::of(0.5);
        let mut cand = mid;
        let denom = phi_lo - phi_hi;
        if denom > S::zero() {
            let sec = lo + phi_lo * (hi - lo) / denom;
            let margin = (hi - lo) * S::of(0.01);
            if sec > lo + margin && sec < hi - margin {
                cand = sec;
            }
        }
        let phi = w_of(cand, &mut w) - cand;
        if phi > S::zero() {
            lo = cand;
            phi_lo = phi;
        } else {
            hi = cand;
            phi_hi = phi;
        }
    }
    let rho = (lo + hi) * S::of(0.5);
    w_of(rho, &mut w);
    w
}

/// Solution of a model subproblem with a certified optimality gap.
#[derive(Debug, Clone)]
pub struct ModelSolution<S> {
    pub x: Vec<S>,
    /// Certified upper bound on `m(x) - min m`.
    pub model_gap_bound: S,
    /// Prox-gradient mapping norm of the probe that produced the returned
    /// point.
    pub residual: S,
    /// Norm of an explicit subgradient of the model at the returned point.
    pub stationarity: S,
    pub inner_iters: usize,
    pub hvp_count: u64,
    pub warning: bool,
}

/// Gap certificate produced by one prox-gradient probe step.
#[derive(Debug, Clone)]
pub struct Certificate<S> {
    /// The probed (post prox step) point in `w` coordinates.
    pub post_w: Vec<S>,
    /// Certified gap bound at `post_w`.
    pub gap_at_post: S,
    /// Certified gap bound at the probed input point.
    pub gap_at_point: S,
    pub residual: S,
    pub stationarity: S,
    pub applies: u64,
}

/// Strong-convexity modulus of the quadratic part that is cheap to certify:
/// the exact smallest eigenvalue of the (densified) operator at test-scale
/// dimensions, the diagonal shift otherwise.
pub fn smooth_convexity_floor<S: Scalar>(model: &CubicModel<S>) -> S {
    let d = model.dim();
    let shift = model.hessian.shift();
    if d > 64 {
        return shift;
    }
    let dense = model.hessian.dense();
    let eigs = dense.sym_eigenvalues();
    let scale = eigs
        .iter()
        .fold(S::zero(), |m, &v| m.max(v.abs()));
    let safety = S::epsilon() * S::of(64.0) * (S::one() + scale);
    (eigs[0] - safety).max(shift).max(S::zero())
}

/// Certifies the optimality gap at `w` with one prox-gradient probe of step
/// `probe_step` (two Hessian applies).
///
/// The probe yields an explicit subgradient `xi` of the model at the post
/// point, and degree-3 uniform convexity of the composite part turns it into
/// the bound `gap <= (2/3) sqrt(2/eta) ||xi||^(3/2)`; a strong-convexity
/// bound `||xi||^2 / (2 sigma)` is used as well whenever `sigma > 0`.
/// `smooth_floor` is a certified strong-convexity modulus of the quadratic
/// part (at least the Hessian shift; see [`smooth_convexity_floor`]).
pub fn certify_point<S: Scalar>(
    model: &CubicModel<S>,
    w: &[S],
    probe_step: S,
    smooth_floor: S,
) -> Certificate<S> {
    let d = model.dim();
    let tau = probe_step;
    let mut gw = vec![S::zero(); d];
    model.smooth_grad_w(w, &mut gw);
    let mut hw = vec![S::zero(); d];
    for j in 0..d {
        hw[j] = gw[j] - model.g[j];
    }
    let val_w = model.value_w_given_hw(w, &hw);

    let mut z = vec![S::zero(); d];
    for j in 0..d {
        z[j] = w[j] - tau * gw[j];
    }
    let post = prox_cubic_h(&model.nonsmooth, &model.anchor, model.eta, tau, &z);
    let mut gp = vec![S::zero(); d];
    model.smooth_grad_w(&post, &mut gp);
    let mut hp = vec![S::zero(); d];
    for j in 0..d {
        hp[j] = gp[j] - model.g[j];
    }
    let val_post = model.value_w_given_hw(&post, &hp);

    let mut xi_sq = S::zero();
    let mut diff_sq = S::zero();
    for j in 0..d {
        let dj = w[j] - post[j];
        diff_sq = diff_sq + dj * dj;
        let xj = dj / tau - gw[j] + gp[j];
        xi_sq = xi_sq + xj * xj;
    }
    let stationarity = xi_sq.sqrt();
    let residual = diff_sq.sqrt() / tau;

    let two_thirds = S::of(2.0) / S::of(3.0);
    let mut gap_at_post =
        two_thirds * (S::of(2.0) / model.eta).sqrt() * stationarity.powf(S::of(1.5));
    let sigma = model.nonsmooth.strong_convexity() + smooth_floor.max(model.hessian.shift());
    if sigma > S::zero() {
        gap_at_post = gap_at_post.min(stationarity * stationarity / (S::of(2.0) * sigma));
    }
    let drop = (val_w - val_post).max(S::zero());
    Certificate {
        post_w: post,
        gap_at_post,
        gap_at_point: drop + gap_at_post,
        residual,
        stationarity,
        applies: 2,
    }
}

/// Prox-gradient mapping norm of the model at `x`:
/// `|| x - prox_step(x - probe_step * grad_smooth(x)) || / probe_step`.
/// Zero (to numerical tolerance) iff `x` minimizes the model.
pub fn residual<S: Scalar>(model: &CubicModel<S>, x: &[S], probe_step: S) -> S {
    assert!(probe_step > S::zero());
    let d = model.dim();
    let mut w = vec![S::zero(); d];
    linalg::sub(x, &model.anchor, &mut w);
    let mut gw = vec![S::zero(); d];
    model.smooth_grad_w(&w, &mut gw);
    let mut z = vec![S::zero(); d];
    for j in 0..d {
        z[j] = w[j] - probe_step * gw[j];
    }
    let post = prox_cubic_h(&model.nonsmooth, &model.anchor, model.eta, probe_step, &z);
    linalg::dist2(&w, &post) / probe_step
}

/// Termination targets for [`solve_model`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<S> {
    /// Stop when the certified gap bound is below this.
    pub gap_tol: Option<S>,
    /// Additionally require an explicit model subgradient of at most this
    /// norm at the returned point.
    pub stationarity_tol: Option<S>,
    pub max_iters: usize,
}

impl<S: Scalar> SolveOptions<S> {
    pub fn gap(tol: S) -> Self {
        SolveOptions {
            gap_tol: Some(tol),
            stationarity_tol: None,
            max_iters: 1_000_000,
        }
    }
}

/// High-accuracy model solver: accelerated prox-gradient with backtracking
/// and adaptive restart, terminated by the uniform-convexity gap certificate.
/// This is the trusted oracle realizing the subsolver contract; intended for
/// test-scale dimensions.
pub fn reference_solve<S: Scalar>(model: &CubicModel<S>, tol: S) -> ModelSolution<S> {
    assert!(tol > S::zero());
    solve_model(model, SolveOptions::gap(tol))
}

pub fn solve_model<S: Scalar>(model: &CubicModel<S>, opts: SolveOptions<S>) -> ModelSolution<S> {
    let d = model.dim();
    let batch = model.hessian.batch() as u64;
    let mut applies: u64 = 0;

    // Lipschitz estimate for the quadratic part; backtracking fixes any
    // underestimate.
    let mut l = linalg::operator_spectral_norm(d, 30, |v, out| model.hessian.apply(v, out));
    applies += 30;
    l = (l * S::of(1.05)).max(S::of(1e-12));
    let floor = smooth_convexity_floor(model);
    if d <= 64 {
        applies += d as u64;
    }

    let targets_met = |cert: &Certificate<S>| -> bool {
        let gap_ok = opts.gap_tol.map_or(true, |t| cert.gap_at_post <= t);
        let stat_ok = opts
            .stationarity_tol
            .map_or(true, |t| cert.stationarity <= t);
        gap_ok && stat_ok
    };

    let mut w = vec![S::zero(); d];
    let mut best = certify_point(model, &w, S::of(0.5) / l, floor);
    applies += best.applies;
    if targets_met(&best) {
        let mut x = model.anchor.clone();
        for j in 0..d {
            x[j] = x[j] + best.post_w[j];
        }
        return ModelSolution {
            x,
            model_gap_bound: best.gap_at_post,
            residual: best.residual,
            stationarity: best.stationarity,
            inner_iters: 0,
            hvp_count: applies * batch,
            warning: false,
        };
    }

    let mut w_prev = w.clone();
    let mut yv = w.clone();
    let mut t_mom = S::one();
    let mut gy = vec![S::zero(); d];
    let mut z = vec![S::zero(); d];
    let mut iters = 0usize;
    let mut done = false;
    let cert_every = 10usize;

    while iters < opts.max_iters {
        iters += 1;
        model.smooth_grad_w(&yv, &mut gy);
        applies += 1;
        let mut hy_dot_y = S::zero();
        for j in 0..d {
            hy_dot_y = hy_dot_y + (gy[j] - model.g[j]) * yv[j];
        }
        let s_y = linalg::dot(&model.g, &yv) + hy_dot_y * S::of(0.5);

        // backtracking on the quadratic majorant
        let mut cand;
        loop {
            let step = S::one() / l;
            for j in 0..d {
                z[j] = yv[j] - step * gy[j];
            }
            cand = prox_cubic_h(&model.nonsmooth, &model.anchor, model.eta, step, &z);
            let hc = model.hessian.apply_vec(&cand);
            applies += 1;
            let s_c = linalg::dot(&model.g, &cand) + linalg::dot(&hc, &cand) * S::of(0.5);
            let mut lin = S::zero();
            let mut sq = S::zero();
            for j in 0..d {
                let dj = cand[j] - yv[j];
                lin = lin + gy[j] * dj;
                sq = sq + dj * dj;
            }
            let rhs = s_y + lin + l * S::of(0.5) * sq + S::epsilon() * (S::one() + s_y.abs());
            if s_c <= rhs || l > S::of(1e30) {
                break;
            }
            l = l * S::of(2.0);
        }

        // adaptive restart (gradient-mapping test)
        let mut restart_ip = S::zero();
        for j in 0..d {
            restart_ip = restart_ip + (yv[j] - cand[j]) * (cand[j] - w[j]);
        }
        if restart_ip > S::zero() {
            t_mom = S::one();
        }
        let t_new = (S::one() + (S::one() + S::of(4.0) * t_mom * t_mom).sqrt()) * S::of(0.5);
        let beta = (t_mom - S::one()) / t_new;
        for j in 0..d {
            yv[j] = cand[j] + beta * (cand[j] - w[j]);
        }
        w_prev.copy_from_slice(&w);
        w.copy_from_slice(&cand);
        t_mom = t_new;

        if iters % cert_every == 0 {
            let cert = certify_point(model, &w, S::of(0.5) / l, floor);
            applies += cert.applies;
            if cert.gap_at_post < best.gap_at_post {
                best = cert;
            }
            if targets_met(&best) {
                done = true;
                break;
            }
        }
    }

    if !done {
        let cert = certify_point(model, &w, S::of(0.5) / l, floor);
        applies += cert.applies;
        if cert.gap_at_post < best.gap_at_post {
            best = cert;
        }
        done = targets_met(&best);
    }

    let mut x = model.anchor.clone();
    for j in 0..d {
        x[j] = x[j] + best.post_w[j];
    }
    ModelSolution {
        x,
        model_gap_bound: best.gap_at_post,
        residual: best.residual,
        stationarity: best.stationarity,
        inner_iters: iters,
        hvp_count: applies * batch,
        warning: !done,
    }
}

/// Breakdown of the per-iteration approximation error
/// `E_t = (4/(3 L3^2)) ||H - hess f||^3 + (4/3) sqrt(2/L3) ||g - grad f||^(3/2) + gap`.
#[derive(Debug, Clone, Copy)]
pub struct EtBreakdown<S> {
    pub total: S,
    pub hess_part: S,
    pub grad_part: S,
    pub gap_part: S,
    pub hess_err: S,
    pub grad_err: S,
}

/// The aggregate error formula with given component errors.
pub fn et_from_errors<S: Scalar>(l3: S, hess_err: S, grad_err: S, sub_gap: S) -> EtBreakdown<S> {
    let four_thirds = S::of(4.0) / S::of(3.0);
    let hess_part = four_thirds / (l3 * l3) * hess_err * hess_err * hess_err;
    let grad_part = four_thirds * (S::of(2.0) / l3).sqrt() * grad_err.powf(S::of(1.5));
    EtBreakdown {
        total: hess_part + grad_part + sub_gap,
        hess_part,
        grad_part,
        gap_part: sub_gap,
        hess_err,
        grad_err,
    }
}

/// Measures the realized approximation error at `x_t` against the exact
/// oracles of `problem` (test-scale only). The Hessian error is a spectral
/// norm: dense for small dimensions, power iteration on the difference
/// operator otherwise.
pub fn compute_et<S: Scalar>(
    problem: &CompositeProblem<S>,
    x_t: &[S],
    g: &[S],
    hessian: &HessianEstimate<S>,
    sub_gap: S,
    cfg: &ScheduleConfig<S>,
) -> EtBreakdown<S> {
    let d = problem.dim();
    let mut exact_g = vec![S::zero(); d];
    problem.full_grad(x_t, &mut exact_g);
    let grad_err = linalg::dist2(&exact_g, g);

    let hess_err = if d <= 64 {
        let mut diff: DenseMat<S> = problem.full_hess(x_t);
        let est = hessian.dense();
        diff.add_scaled(-S::one(), &est);
        diff.spectral_norm(300)
    } else {
        let mut buf = vec![S::zero(); d];
        linalg::operator_spectral_norm(d, 120, |v, out| {
            problem.full_hvp(x_t, v, out);
            hessian.apply(v, &mut buf);
            for j in 0..d {
                out[j] = out[j] - buf[j];
            }
        })
    };
    et_from_errors(cfg.l3, hess_err, grad_err, sub_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_quadratic, make_quadratic_diag, NonsmoothTerm};
    use crate::sampling::exact_hessian;

    fn zero_hessian_model(
        g: Vec<f64>,
        eta: f64,
        f0: f64,
        h: NonsmoothTerm<f64>,
    ) -> CubicModel<f64> {
        let d = g.len();
        let p = make_quadratic(vec![vec![0.0; d]], vec![0.0; d], NonsmoothTerm::zero()).unwrap();
        let hess = exact_hessian(&p, &vec![0.0; d], 0.0);
        CubicModel::new(vec![0.0; d], g, hess, eta, f0, h)
    }

    #[test]
    fn value_at_anchor() {
        let h = NonsmoothTerm::l1(0.5);
        let m = zero_hessian_model(vec![1.0, -2.0], 3.0, 7.0, h.clone());
        let v = m.value(&[0.0, 0.0]);
        assert!((v - (7.0 + h.eval(&[0.0, 0.0]))).abs() < 1e-15);
    }

    #[test]
    fn value_simple_substitution() {
        // h = 0, g = e1, H = 0, eta = 6, y = 0, x = e1 -> f(0) + 1 + 1
        let m = zero_hessian_model(vec![1.0, 0.0], 6.0, 5.0, NonsmoothTerm::zero());
        let v = m.value(&[1.0, 0.0]);
        assert!((v - 7.0).abs() < 1e-14);
    }

    #[test]
    fn value_term_by_term() {
        let p = make_quadratic_diag(&[2.0, 3.0], vec![0.0, 0.0], 2, NonsmoothTerm::zero()).unwrap();
        let anchor = vec![0.5f64, -1.0];
        let hess = exact_hessian(&p, &anchor, 0.25);
        let g = vec![0.3, 0.7];
        let eta = 1.7;
        let f0 = -0.9;
        let h = NonsmoothTerm::l1(0.2);
        let m = CubicModel::new(anchor.clone(), g.clone(), hess, eta, f0, h.clone());
        let x = vec![1.25, 0.5];
        let w = [x[0] - anchor[0], x[1] - anchor[1]];
        // independent recomputation: H = diag(2,3) + 0.25 I
        let hw = [2.25 * w[0], 3.25 * w[1]];
        let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let expect = f0
            + g[0] * w[0]
            + g[1] * w[1]
            + 0.5 * (hw[0] * w[0] + hw[1] * w[1])
            + eta / 6.0 * r * r * r
            + h.eval(&x);
        assert!((m.value(&x) - expect).abs() < 1e-13);
    }

    #[test]
    fn prox_identity_when_flat() {
        // eta = 0, h = 0 -> w = z
        let h = NonsmoothTerm::zero();
        let z = vec![1.0f64, -2.0, 0.5];
        let w = prox_cubic_h(&h, &[0.0, 0.0, 0.0], 0.0, 0.7, &z);
        for j in 0..3 {
            assert!((w[j] - z[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn prox_soft_threshold_shifted() {
        // eta = 0, h = lambda ||. + y||_1: soft-threshold of (z + y), shifted back
        let h = NonsmoothTerm::l1(1.0f64);
        let y = vec![0.5, -2.0];
        let z = vec![2.0, 0.25];
        let step = 1.0;
        let w = prox_cubic_h(&h, &y, 0.0, step, &z);
        // u = soft(z + y, lambda*step), w = u - y
        let u = [1.5, -0.75];
        assert!((w[0] - (u[0] - y[0])).abs() < 1e-14);
        assert!((w[1] - (u[1] - y[1])).abs() < 1e-14);
    }

    #[test]
    fn prox_radial_quadratic_root() {
        // h = 0, step = 1, eta = 2, ||z|| = 2: rho (1 + rho) = 2 => rho = 1, w = z/2
        let h = NonsmoothTerm::zero();
        let z = vec![2.0f64, 0.0];
        let w = prox_cubic_h(&h, &[0.0, 0.0], 2.0, 1.0, &z);
        assert!((w[0] - 1.0).abs() < 1e-10, "w = {w:?}");
        assert!(w[1].abs() < 1e-12);
        // eta = 6: rho (1 + 3 rho) = 2 => rho = 2/3, w = z/3
        let w6 = prox_cubic_h(&h, &[0.0, 0.0], 6.0, 1.0, &z);
        assert!((w6[0] - 2.0 / 3.0).abs() < 1e-10, "w6 = {w6:?}");
    }

    #[test]
    fn prox_optimality_inclusion() {
        let kinds: Vec<NonsmoothTerm<f64>> = vec![
            NonsmoothTerm::zero(),
            NonsmoothTerm::l1(0.3),
            NonsmoothTerm::l2_squared(0.7),
            NonsmoothTerm::l1_plus_l2(0.2, 0.4),
            NonsmoothTerm::box_indicator(-0.5, 0.8),
        ];
        let y = vec![0.1, -0.2, 0.3];
        for (k, h) in kinds.iter().enumerate() {
            for t in 0..5 {
                let z: Vec<f64> = (0..3)
                    .map(|j| ((k * 17 + t * 5 + j) as f64 * 0.713).sin() * 2.0)
                    .collect();
                let eta = 0.5 + 0.5 * k as f64;
                let step = 0.3 + 0.2 * t as f64;
                let w = prox_cubic_h(h, &y, eta, step, &z);
                // 0 in (w - z)/step + (eta/2)||w|| w + dh(w + y)
                let r = (w.iter().map(|v| v * v).sum::<f64>()).sqrt();
                let x: Vec<f64> = (0..3).map(|j| w[j] + y[j]).collect();
                let v: Vec<f64> = (0..3)
                    .map(|j| -((w[j] - z[j]) / step + 0.5 * eta * r * w[j]))
                    .collect();
                let viol = h.subgradient_distance(&x, &v);
                assert!(viol < 1e-8, "kind {k} trial {t}: violation {viol}");
            }
        }
    }

    #[test]
    fn reference_solve_quadratic_closed_form() {
        // H = I (full batch on quadratic), g = e1, eta small, h = 0:
        // x ~ y - e1 within tolerance
        let p = make_quadratic_diag(&[1.0f64, 1.0], vec![0.0, 0.0], 2, NonsmoothTerm::zero()).unwrap();
        let anchor = vec![0.3, -0.4];
        let hess = exact_hessian(&p, &anchor, 0.0);
        let m = CubicModel::new(
            anchor.clone(),
            vec![1.0, 0.0],
            hess,
            1e-8,
            0.0,
            NonsmoothTerm::zero(),
        );
        let sol = reference_solve(&m, 1e-12);
        assert!(!sol.warning);
        assert!((sol.x[0] - (anchor[0] - 1.0)).abs() < 1e-5);
        assert!((sol.x[1] - anchor[1]).abs() < 1e-5);
        assert!(sol.model_gap_bound <= 1e-12);
    }

    #[test]
    fn reference_solve_stationary_anchor() {
        // g = 0, h = 0 -> x = y, gap 0
        let p = make_quadratic_diag(&[2.0, 1.0], vec![0.0, 0.0], 2, NonsmoothTerm::zero()).unwrap();
        let anchor = vec![0.0, 0.0];
        let hess = exact_hessian(&p, &anchor, 0.0);
        let m = CubicModel::new(anchor, vec![0.0, 0.0], hess, 3.0, 0.0, NonsmoothTerm::zero());
        let sol = reference_solve(&m, 1e-14);
        assert_eq!(sol.inner_iters, 0);
        assert!(linalg::norm2(&sol.x) < 1e-12);
    }

    #[test]
    fn reference_solve_self_consistency() {
        let p = make_quadratic_diag(&[1.0, 4.0, 0.25], vec![0.2, -0.4, 0.6], 3, NonsmoothTerm::l1(0.1))
            .unwrap();
        let anchor = vec![1.0, -1.0, 0.5];
        let hess = exact_hessian(&p, &anchor, 0.0);
        let mut g = vec![0.0; 3];
        p.full_grad(&anchor, &mut g);
        let m = CubicModel::new(anchor, g, hess, 2.0, 0.0, NonsmoothTerm::l1(0.1));
        let a = reference_solve(&m, 1e-10);
        let b = reference_solve(&m, 1e-10);
        assert!(linalg::dist2(&a.x, &b.x) < 1e-8);
        // residual at the solution is small
        let r = residual(&m, &a.x, 0.5);
        assert!(r < 1e-4, "residual {r}");
    }

    #[test]
    fn residual_positive_away_from_optimum() {
        let m = zero_hessian_model(vec![1.0, 0.0], 6.0, 0.0, NonsmoothTerm::zero());
        let far = residual(&m, &[5.0, 5.0], 0.5);
        assert!(far > 0.1);
    }

    #[test]
    fn et_formula_substitutions() {
        // exact everything -> 0
        let e0 = et_from_errors(1.0f64, 0.0, 0.0, 0.0);
        assert_eq!(e0.total, 0.0);
        // L3 = 1, hess err 1, rest 0 -> 4/3
        let e1 = et_from_errors(1.0f64, 1.0, 0.0, 0.0);
        assert!((e1.total - 4.0 / 3.0).abs() < 1e-15);
        // L3 = 2, grad err 1, rest 0 -> (4/3) * sqrt(2/2) = 4/3
        let e2 = et_from_errors(2.0f64, 0.0, 1.0, 0.0);
        assert!((e2.total - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn compute_et_exact_oracles_zero() {
        let p = make_quadratic_diag(&[1.0, 2.0], vec![0.3, 0.1], 2, NonsmoothTerm::zero()).unwrap();
        let x = vec![0.4, -0.2];
        let mut g = vec![0.0; 2];
        p.full_grad(&x, &mut g);
        let hess = exact_hessian(&p, &x, 0.0);
        let et = compute_et(&p, &x, &g, &hess, 0.0, p.constants());
        assert!(et.total < 1e-10, "Et = {}", et.total);
    }
}

//! Accelerated inexact proximal cubic-regularized Newton method.
//!
//! Maintains an estimating sequence
//!
//! ```text
//! psi_t(x) = const + <s, x> + A_t h(x) + (C1/2)||x - x0||^2 + (C2/3)||x - x0||^3
//! ```
//!
//! updated with fresh unbiased gradients at each new iterate, a momentum
//! point `y_t = (1 - alpha_t) x_t + alpha_t v_t` with `v_t = argmin psi_t`,
//! and cubic models with `eta = 4 L3` whose Hessian estimates carry a
//! diagonal shift placing `H_t - hess f(y_t)` inside `[mu_t/2, mu_t]` on the
//! concentration event (base accuracy `mu_t/4`, shift `3 mu_t/4`).

use rand::Rng;

use crate::cubic::{self, CubicModel, SolveOptions};
use crate::error::{Error, Result};
use crate::ipcnm::SubsolverKind;
use crate::linalg;
use crate::problem::{CompositeProblem, NonsmoothTerm, ScheduleConfig};
use crate::runlog::{DiagCols, RunLog, RunRow};
use crate::sampling::{self, HessianEstimate};
use crate::scalar::Scalar;
use crate::svrg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AipcnmMode {
    Convex,
    StronglyConvex,
}

/// Running lower model of `A_t F` driving the acceleration.
#[derive(Debug, Clone)]
pub struct EstimatingSequence<S> {
    pub x0: Vec<S>,
    pub c1: S,
    pub c2: S,
    /// Accumulated linear coefficients `sum_i a_i g'_{i+1}`.
    pub s: Vec<S>,
    /// Accumulated weight `A_t` (multiplies `h`).
    pub a_weight: S,
    /// Accumulated constants (function values and inner products); only
    /// affects value queries, not the argmin.
    pub constant_part: S,
}

impl<S: Scalar> EstimatingSequence<S> {
    pub fn new(x0: Vec<S>, c1: S, c2: S) -> Self {
        assert!(c1 > S::zero() && c2 > S::zero());
        let d = x0.len();
        EstimatingSequence {
            x0,
            c1,
            c2,
            s: vec![S::zero(); d],
            a_weight: S::zero(),
            constant_part: S::zero(),
        }
    }

    pub fn value(&self, x: &[S], h: &NonsmoothTerm<S>) -> S {
        let r = linalg::dist2(x, &self.x0);
        self.constant_part
            + linalg::dot(&self.s, x)
            + self.a_weight * h.eval(x)
            + self.c1 * S::of(0.5) * r * r
            + self.c2 / S::of(3.0) * r * r * r
    }
}

/// `psi_{t+1} = psi_t + a_t (f(x_{t+1}) + <g', x - x_{t+1}> + h(x))`.
pub fn psi_update<S: Scalar>(
    seq: &EstimatingSequence<S>,
    a_t: S,
    f_at_x: S,
    g_prime: &[S],
    x_next: &[S],
) -> EstimatingSequence<S> {
    assert!(a_t >= S::zero());
    let mut out = seq.clone();
    linalg::axpy(a_t, g_prime, &mut out.s);
    out.a_weight = out.a_weight + a_t;
    out.constant_part = out.constant_part + a_t * (f_at_x - linalg::dot(g_prime, x_next));
    out
}

/// Exact minimizer of the estimating sequence.
///
/// Completing the square in `u = x - x0` reduces the problem to a single
/// cubic prox with quadratic coefficient `C1`:
/// `argmin (C1/2)||u + s/C1||^2 + (C2/3)||u||^3 + A h(u + x0)`, so the
/// composite prox-gradient inner solve collapses to one prox evaluation.
pub fn psi_argmin<S: Scalar>(seq: &EstimatingSequence<S>, h: &NonsmoothTerm<S>) -> Vec<S> {
    let d = seq.x0.len();
    let h_scaled = if seq.a_weight > S::zero() {
        h.scaled(seq.a_weight)
    } else {
        NonsmoothTerm::zero()
    };
    let mut z = vec![S::zero(); d];
    for j in 0..d {
        z[j] = -seq.s[j] / seq.c1;
    }
    let u = cubic::prox_cubic_h(
        &h_scaled,
        &seq.x0,
        S::of(2.0) * seq.c2,
        S::one() / seq.c1,
        &z,
    );
    let mut v = seq.x0.clone();
    for j in 0..d {
        v[j] = v[j] + u[j];
    }
    v
}

#[derive(Debug, Clone)]
pub struct AipcnmConfig<S> {
    pub mode: AipcnmMode,
    /// Cubic coefficient, `4 L3`.
    pub eta: S,
    pub c1: S,
    pub c2: S,
    /// Geometric rate of the strongly convex schedule (0 in convex mode).
    pub rho: S,
    /// Constant Hessian shift scale of the strongly convex schedule.
    pub mu0: S,
    pub cfg: ScheduleConfig<S>,
    pub horizon_t: usize,
    pub subsolver: SubsolverKind,
    pub exact_oracles: bool,
    pub fstar: Option<S>,
    /// Emit per-iteration diagnostics (momentum-point inequality margin,
    /// statistical error terms, psi values); needs exact oracles test-scale.
    pub diagnostics: bool,
    pub subsolver_iter_cap: Option<usize>,
    pub svrg_max_stages: usize,
    /// Subsolver stationarity target in exact-oracle runs.
    pub stat_cap: S,
}

impl<S: Scalar> AipcnmConfig<S> {
    /// `A_t` weight sequence.
    pub fn a_weight(&self, t: usize) -> S {
        match self.mode {
            AipcnmMode::Convex => {
                S::from_usize(t * (t + 1) * (t + 2)).unwrap() / S::of(6.0)
            }
            AipcnmMode::StronglyConvex => {
                if t == 0 {
                    S::zero()
                } else {
                    (S::one() + self.rho).powi(t as i32)
                }
            }
        }
    }

    /// Hessian shift scale `mu_t`.
    pub fn mu(&self, t: usize) -> S {
        match self.mode {
            AipcnmMode::Convex => {
                self.cfg.l3 * self.cfg.dist_bound / S::from_usize(t + 2).unwrap()
            }
            AipcnmMode::StronglyConvex => self.mu0,
        }
    }

    /// Target for the coupled gradient-plus-subsolver error
    /// `||g_i - grad f(y_i) - grad m(x_{i+1})||`.
    pub fn couple_target(&self, i: usize) -> S {
        let t = S::from_usize(self.horizon_t.max(1)).unwrap();
        match self.mode {
            AipcnmMode::Convex => {
                let ip2 = S::from_usize(i + 2).unwrap();
                self.cfg.l3 * self.cfg.dist_bound * self.cfg.dist_bound
                    / ((S::of(2.0) * t).sqrt() * ip2 * ip2)
            }
            AipcnmMode::StronglyConvex => {
                let coeff = (S::one() / self.mu0
                    + S::of(9.0) * self.rho * self.rho / (S::of(4.0) * self.cfg.sigma2))
                .powf(-S::of(0.5));
                let i_s = S::from_usize(i).unwrap();
                coeff
                    * (S::one() + self.rho).powf(-i_s * S::of(0.5) + S::one())
                    * t.powf(-S::of(0.5))
            }
        }
    }

    /// Target for the fresh-gradient error `||g'_{i+1} - grad f(x_{i+1})||`.
    pub fn gprime_target(&self, i: usize) -> S {
        let t = S::from_usize(self.horizon_t.max(1)).unwrap();
        match self.mode {
            AipcnmMode::Convex => {
                let ip2 = S::from_usize(i + 2).unwrap();
                S::of(2.0) * self.cfg.l3 * self.cfg.dist_bound * self.cfg.dist_bound
                    / (t.sqrt() * ip2 * ip2)
            }
            AipcnmMode::StronglyConvex => {
                let i_s = S::from_usize(i).unwrap();
                S::of(2.0) * self.cfg.sigma2.sqrt() / (S::of(3.0) * self.rho)
                    * (S::one() + self.rho).powf(-i_s * S::of(0.5) + S::one())
                    * t.powf(-S::of(0.5))
            }
        }
    }
}

/// Convex schedule: `A_i = i(i+1)(i+2)/6`, `mu_i = L3 D/(i+2)`,
/// `C1 = 7 L3 D`, `C2 = 48 L3`.
pub fn schedule_convex<S: Scalar>(cfg: &ScheduleConfig<S>, horizon_t: usize) -> AipcnmConfig<S> {
    AipcnmConfig {
        mode: AipcnmMode::Convex,
        eta: S::of(4.0) * cfg.l3,
        c1: S::of(7.0) * cfg.l3 * cfg.dist_bound,
        c2: S::of(48.0) * cfg.l3,
        rho: S::zero(),
        mu0: S::zero(),
        cfg: cfg.clone(),
        horizon_t: horizon_t.max(1),
        subsolver: SubsolverKind::Reference,
        exact_oracles: false,
        fstar: None,
        diagnostics: false,
        subsolver_iter_cap: None,
        svrg_max_stages: 200,
        stat_cap: S::of(1e-9),
    }
}

/// Strongly convex schedule:
/// `rho = min(1, (3^(1/3)/2) (sigma2/(L3 R))^(1/3))`, `A_i = (1+rho)^i`
/// (`A_0 = 0`), constant `mu_i = 32 (L3 R)^(2/3) sigma2^(1/3) / (27 * 3^(2/3))`,
/// `C1 = 9 mu0 (1+rho)/2`, `C2 = 32 (1+rho) L3 / 3`.
pub fn schedule_strongly_convex<S: Scalar>(
    cfg: &ScheduleConfig<S>,
    horizon_t: usize,
) -> Result<AipcnmConfig<S>> {
    if !(cfg.sigma2 > S::zero()) {
        return Err(Error::InvalidConfig(
            "strongly convex schedule requires sigma2 > 0".into(),
        ));
    }
    let third = S::one() / S::of(3.0);
    let l3r = cfg.l3 * cfg.r_bound;
    let rho = S::one().min(S::of(3.0).powf(third) * S::of(0.5) * (cfg.sigma2 / l3r).powf(third));
    let mu0 = S::of(32.0) * l3r.powf(S::of(2.0) * third) * cfg.sigma2.powf(third)
        / (S::of(27.0) * S::of(3.0).powf(S::of(2.0) * third));
    Ok(AipcnmConfig {
        mode: AipcnmMode::StronglyConvex,
        eta: S::of(4.0) * cfg.l3,
        c1: S::of(4.5) * mu0 * (S::one() + rho),
        c2: S::of(32.0) * (S::one() + rho) * cfg.l3 / S::of(3.0),
        rho,
        mu0,
        cfg: cfg.clone(),
        horizon_t: horizon_t.max(1),
        subsolver: SubsolverKind::Reference,
        exact_oracles: false,
        fstar: None,
        diagnostics: false,
        subsolver_iter_cap: None,
        svrg_max_stages: 200,
        stat_cap: S::of(1e-9),
    })
}

/// Feasibility margins of the configured `C1`, `C2` against the
/// estimating-sequence requirements over `t <= horizon`:
/// `C1 >= 9 mu_t a_t^2 / (2 A_{t+1}) - (2/3) A_t sigma2` and
/// `C2 >= 32 a_t^3 L3 / (3 A_{t+1}^2) - A_t sigma2 / R`.
/// Both margins must come out nonnegative.
pub fn check_c1_c2<S: Scalar>(config: &AipcnmConfig<S>, horizon: usize) -> (S, S) {
    let mut m1 = S::infinity();
    let mut m2 = S::infinity();
    for t in 0..=horizon {
        let a_t = config.a_weight(t);
        let a_t1 = config.a_weight(t + 1);
        let step = a_t1 - a_t;
        let mu = config.mu(t);
        let need1 = S::of(4.5) * mu * step * step / a_t1
            - S::of(2.0) / S::of(3.0) * a_t * config.cfg.sigma2;
        let need2 = S::of(32.0) * step * step * step * config.cfg.l3
            / (S::of(3.0) * a_t1 * a_t1)
            - a_t * config.cfg.sigma2 / config.cfg.r_bound;
        m1 = m1.min(config.c1 - need1);
        m2 = m2.min(config.c2 - need2);
    }
    (m1, m2)
}

/// Momentum-point inequality report: with `q` the combined gradient/model
/// residual proxy at the new iterate, checks
/// `q^T (y_t - x_{t+1}) >= min(||q||^2/(3 mu_t), sqrt(||q||^3/(4 L3 + 2 eta))) + (mu_t/4)||y_t - x_{t+1}||^2`.
#[derive(Debug, Clone)]
pub struct QResidualReport<S> {
    pub q_norm: S,
    pub lhs: S,
    pub rhs: S,
    pub margin: S,
    pub branch_quadratic: S,
    pub branch_sqrt: S,
    pub mu: S,
}

/// Computes both sides of the inequality with exact problem gradients
/// (test-scale). The nonsmooth subgradient chosen by the final prox step
/// cancels between the objective and model sides, so `q` reduces to
/// `grad f(x+) - grad f(y) - H (x+ - y) - (eta/2)||x+ - y|| (x+ - y)`.
pub fn q_residual_diag<S: Scalar>(
    problem: &CompositeProblem<S>,
    model: &CubicModel<S>,
    x_next: &[S],
    y_t: &[S],
    mu_t: S,
) -> QResidualReport<S> {
    let d = problem.dim();
    let mut w = vec![S::zero(); d];
    linalg::sub(x_next, y_t, &mut w);
    let mut gf_next = vec![S::zero(); d];
    problem.full_grad(x_next, &mut gf_next);
    let mut gf_y = vec![S::zero(); d];
    problem.full_grad(y_t, &mut gf_y);
    let hw = model.hessian.apply_vec(&w);
    let r = linalg::norm2(&w);
    let mut q = vec![S::zero(); d];
    for j in 0..d {
        q[j] = gf_next[j] - gf_y[j] - hw[j] - model.eta * S::of(0.5) * r * w[j];
    }
    let q_norm = linalg::norm2(&q);
    let lhs = -linalg::dot(&q, &w);
    let l3 = problem.constants().l3;
    let branch_quadratic = q_norm * q_norm / (S::of(3.0) * mu_t);
    let branch_sqrt = (q_norm * q_norm * q_norm / (S::of(4.0) * l3 + S::of(2.0) * model.eta)).sqrt();
    let rhs = branch_quadratic.min(branch_sqrt) + mu_t / S::of(4.0) * r * r;
    QResidualReport {
        q_norm,
        lhs,
        rhs,
        margin: lhs - rhs,
        branch_quadratic,
        branch_sqrt,
        mu: mu_t,
    }
}

#[derive(Debug, Clone)]
pub struct AipcnmState<S> {
    pub x: Vec<S>,
    pub v: Vec<S>,
    pub seq: EstimatingSequence<S>,
    pub iter: usize,
    pub grad_samples: u64,
    pub hess_samples: u64,
    pub hvps: u64,
    /// Per-iteration snapshots (x_t, v_t, psi_t) retained when diagnostics
    /// are on; index t.
    pub snapshots: Vec<Snapshot<S>>,
}

#[derive(Debug, Clone)]
pub struct Snapshot<S> {
    pub x: Vec<S>,
    pub v: Vec<S>,
    pub seq: EstimatingSequence<S>,
}

pub struct StepDiag<S> {
    pub q_report: Option<QResidualReport<S>>,
    pub g_i: S,
    pub psi_v: S,
    pub a_next: S,
    pub flags: Vec<String>,
    pub subsolver_iters: usize,
}

/// One accelerated step at iteration index `t`.
pub fn step<S: Scalar, R: Rng>(
    state: &mut AipcnmState<S>,
    problem: &CompositeProblem<S>,
    config: &AipcnmConfig<S>,
    t: usize,
    rng: &mut R,
) -> Result<StepDiag<S>> {
    let d = problem.dim();
    let n = problem.n_samples();
    let cfg = &config.cfg;
    let delta_iter = cfg.delta / S::from_usize(config.horizon_t.max(1)).unwrap();
    let mut flags = Vec::new();

    let a_t = config.a_weight(t);
    let a_t1 = config.a_weight(t + 1);
    let a_step = a_t1 - a_t;
    if !(a_step > S::zero()) {
        return Err(Error::InvalidConfig("A_t must be strictly increasing".into()));
    }
    let alpha = a_step / a_t1;
    let mut y = vec![S::zero(); d];
    for j in 0..d {
        y[j] = (S::one() - alpha) * state.x[j] + alpha * state.v[j];
    }
    let mu_t = config.mu(t);
    let couple = config.couple_target(t);
    let half_couple = couple * S::of(0.5);

    let (g_est, hess): (Vec<S>, HessianEstimate<S>) = if config.exact_oracles {
        let mut g = vec![S::zero(); d];
        problem.full_grad(&y, &mut g);
        state.grad_samples += n as u64;
        state.hess_samples += n as u64;
        (
            g,
            sampling::exact_hessian(problem, &y, S::of(0.75) * mu_t),
        )
    } else {
        let gb = sampling::grad_batch_size(half_couple, delta_iter, cfg, Some(n))?;
        if gb.outside_regime {
            flags.push("grad_outside_bernstein".into());
        }
        let mut ge = sampling::sample_gradient(problem, &y, gb.size, rng);
        ge.target_err = half_couple;
        ge.fail_prob = delta_iter;
        state.grad_samples += ge.batch as u64;
        let hb = sampling::hess_batch_size(mu_t * S::of(0.25), delta_iter, cfg, d, Some(n))?;
        if hb.outside_regime {
            flags.push("hess_outside_bernstein".into());
        }
        let mut he = sampling::sample_hessian(problem, &y, hb.size, S::of(0.75) * mu_t, rng);
        he.target_err = mu_t * S::of(0.25);
        state.hess_samples += he.batch() as u64;
        (ge.g, he)
    };

    let f_y = problem.full_eval(&y);
    let model = CubicModel::new(
        y.clone(),
        g_est.clone(),
        hess,
        config.eta,
        f_y,
        problem.nonsmooth().clone(),
    );
    let stat_tol = if config.exact_oracles {
        config.stat_cap
    } else {
        half_couple
    };
    let gap_from_stat = S::of(2.0 / 3.0) * (S::of(2.0) / config.eta).sqrt()
        * stat_tol.powf(S::of(1.5));
    let solution = match config.subsolver {
        SubsolverKind::Reference => {
            let opts = SolveOptions {
                gap_tol: None,
                stationarity_tol: Some(stat_tol),
                max_iters: config.subsolver_iter_cap.unwrap_or(1_000_000),
            };
            cubic::solve_model(&model, opts)
        }
        SubsolverKind::Svrg => {
            let mut scfg = svrg::SvrgConfig::for_model(&model, gap_from_stat, config.svrg_max_stages);
            scfg.target_stationarity = Some(stat_tol);
            svrg::solve(&model, &scfg, rng)
        }
    };
    if solution.warning {
        flags.push("subsolver_warning".into());
    }
    state.hvps += solution.hvp_count;
    let x_next = solution.x.clone();

    // fresh unbiased gradient at the new iterate
    let gp_target = config.gprime_target(t);
    let g_prime = if config.exact_oracles {
        let mut g = vec![S::zero(); d];
        problem.full_grad(&x_next, &mut g);
        state.grad_samples += n as u64;
        g
    } else {
        let gb = sampling::grad_batch_size(gp_target, delta_iter, cfg, Some(n))?;
        let mut ge = sampling::sample_gradient(problem, &x_next, gb.size, rng);
        ge.target_err = gp_target;
        ge.fail_prob = delta_iter;
        state.grad_samples += ge.batch as u64;
        ge.g
    };

    let f_next = problem.full_eval(&x_next);
    let seq_next = psi_update(&state.seq, a_step, f_next, &g_prime, &x_next);
    let v_next = psi_argmin(&seq_next, problem.nonsmooth());

    let mut diag = StepDiag {
        q_report: None,
        g_i: S::nan(),
        psi_v: S::zero(),
        a_next: a_t1,
        flags,
        subsolver_iters: solution.inner_iters,
    };
    if config.diagnostics {
        let report = q_residual_diag(problem, &model, &x_next, &y, mu_t);
        // measured statistical error term of the convergence bound
        let mut gf_y = vec![S::zero(); d];
        problem.full_grad(&y, &mut gf_y);
        let grad_err = linalg::dist2(&g_est, &gf_y);
        let couple_err = grad_err + solution.stationarity;
        let mut gf_next = vec![S::zero(); d];
        problem.full_grad(&x_next, &mut gf_next);
        let gp_err = linalg::dist2(&g_prime, &gf_next);
        let denom = S::of(2.0)
            * (S::of(3.0) * config.c1 + S::of(2.0) * a_t * config.cfg.sigma2);
        let coeff = S::of(9.0) * a_step * a_step / denom;
        let g_i = (a_t1 / mu_t + coeff) * couple_err * couple_err + coeff * gp_err * gp_err;
        diag.q_report = Some(report);
        diag.g_i = g_i;
        diag.psi_v = seq_next.value(&v_next, problem.nonsmooth());
    }

    state.x = x_next;
    state.v = v_next;
    state.seq = seq_next;
    state.iter = t + 1;
    if config.diagnostics {
        state.snapshots.push(Snapshot {
            x: state.x.clone(),
            v: state.v.clone(),
            seq: state.seq.clone(),
        });
    }
    Ok(diag)
}

/// Runs `t_max` accelerated iterations; row 0 logs the initial point.
pub fn run<S: Scalar, R: Rng>(
    problem: &CompositeProblem<S>,
    config: &AipcnmConfig<S>,
    x0: &[S],
    t_max: usize,
    rng: &mut R,
) -> Result<(RunLog, AipcnmState<S>)> {
    config.cfg.validate()?;
    let seq = EstimatingSequence::new(x0.to_vec(), config.c1, config.c2);
    let mut state = AipcnmState {
        x: x0.to_vec(),
        v: x0.to_vec(),
        seq,
        iter: 0,
        grad_samples: 0,
        hess_samples: 0,
        hvps: 0,
        snapshots: Vec::new(),
    };
    if config.diagnostics {
        state.snapshots.push(Snapshot {
            x: state.x.clone(),
            v: state.v.clone(),
            seq: state.seq.clone(),
        });
    }
    let mut log = RunLog::new();
    let fval0 = problem.objective(x0);
    let gap0 = config
        .fstar
        .map(|f| (fval0 - f).to_f64_lossy())
        .unwrap_or(f64::NAN);
    let mut row0 = RunRow::initial(fval0.to_f64_lossy(), gap0);
    if config.diagnostics {
        row0.diag = Some(DiagCols {
            psi_v: 0.0,
            a_t: 0.0,
            q_margin: f64::NAN,
            g_i: 0.0,
        });
    }
    log.push(row0);

    for t in 0..t_max {
        let diag = step(&mut state, problem, config, t, rng)?;
        let fval = problem.objective(&state.x);
        let gap = config
            .fstar
            .map(|f| (fval - f).to_f64_lossy())
            .unwrap_or(f64::NAN);
        log.push(RunRow {
            iter: t + 1,
            wall_ms: 0.0,
            fval: fval.to_f64_lossy(),
            gap,
            grad_samples_cum: state.grad_samples,
            hess_samples_cum: state.hess_samples,
            hvp_count_cum: state.hvps,
            subsolver_iters: diag.subsolver_iters,
            et_budget: f64::NAN,
            flags: diag.flags.join(";"),
            diag: if config.diagnostics {
                Some(DiagCols {
                    psi_v: diag.psi_v.to_f64_lossy(),
                    a_t: diag.a_next.to_f64_lossy(),
                    q_margin: diag
                        .q_report
                        .as_ref()
                        .map(|r| r.margin.to_f64_lossy())
                        .unwrap_or(f64::NAN),
                    g_i: diag.g_i.to_f64_lossy(),
                })
            } else {
                None
            },
        });
    }
    Ok((log, state))
}

/// Horizon-doubling wrapper for when no iteration budget is declared ahead
/// of time: runs fresh schedules with `T = 1, 2, 4, ...`, warm-starting each
/// segment at the previous output. Heuristic; excluded from the certified
/// schedules.
pub fn run_doubling<S: Scalar, R: Rng>(
    problem: &CompositeProblem<S>,
    base: &AipcnmConfig<S>,
    x0: &[S],
    total_t: usize,
    rng: &mut R,
) -> Result<(RunLog, AipcnmState<S>)> {
    let mut x = x0.to_vec();
    let mut combined = RunLog::new();
    let mut remaining = total_t;
    let mut seg = 1usize;
    let mut last_state = None;
    let mut iter_offset = 0usize;
    let mut grad_offset = 0u64;
    let mut hess_offset = 0u64;
    let mut hvp_offset = 0u64;
    while remaining > 0 {
        let t_seg = seg.min(remaining);
        let mut config = match base.mode {
            AipcnmMode::Convex => schedule_convex(&base.cfg, t_seg),
            AipcnmMode::StronglyConvex => schedule_strongly_convex(&base.cfg, t_seg)?,
        };
        config.subsolver = base.subsolver;
        config.exact_oracles = base.exact_oracles;
        config.fstar = base.fstar;
        let (log, state) = run(problem, &config, &x, t_seg, rng)?;
        for (k, mut row) in log.rows.into_iter().enumerate() {
            if iter_offset > 0 && k == 0 {
                continue; // drop duplicated segment-start rows
            }
            row.iter = iter_offset + k;
            row.grad_samples_cum += grad_offset;
            row.hess_samples_cum += hess_offset;
            row.hvp_count_cum += hvp_offset;
            combined.push(row);
        }
        iter_offset += t_seg;
        grad_offset += state.grad_samples;
        hess_offset += state.hess_samples;
        hvp_offset += state.hvps;
        x = state.x.clone();
        last_state = Some(state);
        remaining -= t_seg;
        seg *= 2;
    }
    Ok((combined, last_state.expect("total_t >= 1 segments")))
}

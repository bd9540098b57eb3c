//! Accelerated-loop properties: exact-trace agreement, shifted-Hessian
//! spectra, estimating-sequence inequalities and the momentum-point
//! diagnostic.

mod common;

use pcnm::aipcnm::{self, psi_argmin, q_residual_diag, AipcnmState, EstimatingSequence};
use pcnm::baseline::reference_minimize;
use pcnm::cubic::{solve_model, CubicModel, SolveOptions};
use pcnm::dataset::{synth_stream, SynthModel};
use pcnm::ipcnm::SubsolverKind;
use pcnm::problem::{make_quadratic_diag, NonsmoothTerm};
use pcnm::sampling::{exact_hessian, hess_batch_size, sample_hessian};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_independent_exact_trace_on_quadratic() {
    // five exact-oracle steps against a dense-algebra reimplementation
    let mut p = make_quadratic_diag(
        &[1.0f64, 2.5, 0.5, 1.5],
        vec![0.4, -0.7, 0.2, 0.9],
        8,
        NonsmoothTerm::zero(),
    )
    .unwrap();
    {
        let c = p.constants_mut();
        c.l3 = 0.8;
        c.dist_bound = 3.0;
        c.horizon_t = 5;
    }
    let x0 = vec![1.0, -1.0, 0.5, 0.0];
    let trace = common::exact_accelerated_trace(&p, &x0, 5);
    let mut config = aipcnm::schedule_convex(p.constants(), 5);
    config.exact_oracles = true;
    config.stat_cap = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut state = AipcnmState {
        x: x0.clone(),
        v: x0.clone(),
        seq: EstimatingSequence::new(x0.clone(), config.c1, config.c2),
        iter: 0,
        grad_samples: 0,
        hess_samples: 0,
        hvps: 0,
        snapshots: Vec::new(),
    };
    for t in 0..5 {
        aipcnm::step(&mut state, &p, &config, t, &mut rng).unwrap();
        let dx = common::l2_dist(&state.x, &trace.xs[t + 1]);
        let dv = common::l2_dist(&state.v, &trace.vs[t + 1]);
        assert!(dx <= 1e-8, "t = {t}: |x - oracle| = {dx}");
        assert!(dv <= 1e-8, "t = {t}: |v - oracle| = {dv}");
    }
}

#[test]
fn shifted_hessian_satisfies_spectral_window() {
    // eigenvalues of H_t - hess f(y_t) land in [mu/2, mu] when the base
    // estimate is accurate to mu/4 and the shift is 3 mu/4
    let p = synth_stream::<f64>(
        17,
        500,
        8,
        SynthModel::LogisticGaussian,
        NonsmoothTerm::zero(),
    )
    .unwrap();
    let y = vec![0.1; 8];
    let exact = p.full_hess(&y);
    let mu = 0.2;
    // exact base: difference is exactly (3 mu / 4) I
    let he = exact_hessian(&p, &y, 0.75 * mu);
    let mut diff = he.dense();
    diff.add_scaled(-1.0, &exact);
    for e in diff.sym_eigenvalues() {
        assert!(e >= mu / 2.0 - 1e-12 && e <= mu + 1e-12, "eig {e}");
    }
    // sampled base at accuracy mu/4, over seeds; count window violations
    let cfg = p.constants();
    let batch = hess_batch_size(mu / 4.0, 0.05, cfg, 8, Some(500)).unwrap();
    let mut failures = 0;
    let trials = 40;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hs = sample_hessian(&p, &y, batch.size, 0.75 * mu, &mut rng);
        let mut d2 = hs.dense();
        d2.add_scaled(-1.0, &exact);
        let eigs = d2.sym_eigenvalues();
        let ok = eigs.iter().all(|&e| e >= mu / 2.0 - 1e-12 && e <= mu + 1e-12);
        if !ok {
            failures += 1;
        }
    }
    assert!(
        (failures as f64) <= 0.05 * trials as f64 + 1.0,
        "{failures}/{trials} outside the window"
    );
}

fn run_diagnostic(
    seed: u64,
    t_max: usize,
) -> (
    pcnm::Problem64,
    aipcnm::AipcnmConfig<f64>,
    pcnm::runlog::RunLog,
    AipcnmState<f64>,
    f64,
    Vec<f64>,
) {
    let mut p = synth_stream::<f64>(
        seed,
        60,
        5,
        SynthModel::LogisticGaussian,
        NonsmoothTerm::l1(0.02),
    )
    .unwrap();
    let x0 = vec![0.0; 5];
    let xstar = reference_minimize(&p, &x0, 1e-13, 200);
    let d0 = common::l2_dist(&x0, &xstar.x);
    {
        let c = p.constants_mut();
        c.dist_bound = (d0 * 1.1).max(0.5);
        c.horizon_t = t_max;
    }
    let mut config = aipcnm::schedule_convex(p.constants(), t_max);
    config.exact_oracles = true;
    config.diagnostics = true;
    config.fstar = Some(xstar.fval);
    config.stat_cap = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 999);
    let (log, state) = aipcnm::run(&p, &config, &x0, t_max, &mut rng).unwrap();
    (p, config, log, state, xstar.fval, xstar.x)
}

#[test]
fn estimating_sequence_inequalities() {
    for seed in 0..3u64 {
        let (p, config, log, state, fstar, xstar) = run_diagnostic(seed, 8);
        assert_eq!(state.snapshots.len(), 9);
        let d0 = common::l2_dist(&state.snapshots[0].x, &xstar);
        for (t, snap) in state.snapshots.iter().enumerate() {
            let a_t = config.a_weight(t);
            // lower-bound chain: A_t F(x_t) <= psi_t(v_t) (exact oracles)
            let psi_v = snap.seq.value(&snap.v, p.nonsmooth());
            let lhs = a_t * p.objective(&snap.x);
            assert!(
                lhs <= psi_v + 1e-9 * (1.0 + psi_v.abs()),
                "seed {seed} t {t}: {lhs} > {psi_v}"
            );
            // upper bound at the optimum
            let psi_star = snap.seq.value(&xstar, p.nonsmooth());
            let cap = a_t * fstar
                + config.c1 / 2.0 * d0 * d0
                + config.c2 / 3.0 * d0 * d0 * d0;
            assert!(
                psi_star <= cap + 1e-9 * (1.0 + cap.abs()),
                "seed {seed} t {t}: {psi_star} > {cap}"
            );
        }
        // diagnostic columns present
        assert!(log.rows[1].diag.is_some());
    }
}

#[test]
fn momentum_point_inequality_margin() {
    // exact quantities: the inequality holds with nonnegative margin; at
    // x_next = y both sides are ~0
    let mut count = 0;
    for seed in 0..4u64 {
        let p = synth_stream::<f64>(
            seed + 60,
            50,
            5,
            SynthModel::LogisticGaussian,
            NonsmoothTerm::l1(0.01),
        )
        .unwrap();
        let l3 = p.constants().l3;
        let eta = 4.0 * l3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for trial in 0..5 {
            let y: Vec<f64> = (0..5).map(|_| rng.random::<f64>() - 0.5).collect();
            let mu = (0.02 + 0.3 * rng.random::<f64>()) * l3;
            let mut g = vec![0.0; 5];
            p.full_grad(&y, &mut g);
            let hess = exact_hessian(&p, &y, 0.75 * mu);
            let f_y = p.full_eval(&y);
            let model = CubicModel::new(y.clone(), g, hess, eta, f_y, p.nonsmooth().clone());
            let sol = solve_model(
                &model,
                SolveOptions {
                    gap_tol: None,
                    stationarity_tol: Some(1e-10),
                    max_iters: 200_000,
                },
            );
            let report = q_residual_diag(&p, &model, &sol.x, &y, mu);
            assert!(
                report.margin >= -1e-8,
                "seed {seed} trial {trial}: margin {}",
                report.margin
            );
            assert!(report.branch_quadratic >= 0.0 && report.branch_sqrt >= 0.0);
            count += 1;
        }
    }
    assert_eq!(count, 20);
    // degenerate check: x_next = y gives both sides ~0
    let p = synth_stream::<f64>(3, 30, 4, SynthModel::LogisticGaussian, NonsmoothTerm::zero())
        .unwrap();
    let y = vec![0.2; 4];
    let mut g = vec![0.0; 4];
    p.full_grad(&y, &mut g);
    let hess = exact_hessian(&p, &y, 0.1);
    let model = CubicModel::new(
        y.clone(),
        g,
        hess,
        4.0 * p.constants().l3,
        0.0,
        NonsmoothTerm::zero(),
    );
    let r = q_residual_diag(&p, &model, &y, &y, 0.1);
    assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12 && r.q_norm < 1e-12);
}

#[test]
fn geometric_rate_strongly_convex() {
    // exact oracles: gap <= (1+rho)^{-(t+1)} (9 mu0/4 D0^2 + 32 L3/9 D0^3 + 2)
    let mut p = make_quadratic_diag(
        &[1.5f64, 0.8, 2.0, 1.0],
        vec![0.5, -0.25, 0.75, 0.1],
        8,
        NonsmoothTerm::l2_squared(0.6),
    )
    .unwrap();
    {
        let c = p.constants_mut();
        c.l3 = 0.5;
        c.sigma2 = 0.6;
    }
    let x0 = vec![1.0, 1.0, -1.0, 0.5];
    let xstar = reference_minimize(&p, &x0, 1e-13, 200);
    let d0 = common::l2_dist(&x0, &xstar.x);
    let t_max = 12usize;
    {
        let c = p.constants_mut();
        c.r_bound = (2.0 * d0).max(1.0);
        c.dist_bound = (1.1 * d0).max(0.5);
        c.horizon_t = t_max;
    }
    let mut config = aipcnm::schedule_strongly_convex(p.constants(), t_max).unwrap();
    config.exact_oracles = true;
    config.fstar = Some(xstar.fval);
    config.stat_cap = 1e-11;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (log, _) = aipcnm::run(&p, &config, &x0, t_max, &mut rng).unwrap();
    let cap = 9.0 * config.mu0 / 4.0 * d0 * d0 + 32.0 * p.constants().l3 / 9.0 * d0.powi(3) + 2.0;
    for (t, row) in log.rows.iter().enumerate().skip(1) {
        let bound = (1.0 + config.rho).powi(-(t as i32 + 1)) * cap;
        assert!(
            row.gap <= bound,
            "t = {t}: gap {} > bound {bound}",
            row.gap
        );
    }
}

#[test]
fn psi_argmin_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let kinds: Vec<NonsmoothTerm<f64>> = vec![
        NonsmoothTerm::zero(),
        NonsmoothTerm::l1(0.3),
        NonsmoothTerm::l2_squared(0.5),
        NonsmoothTerm::box_indicator(-0.4, 0.7),
    ];
    for trial in 0..12 {
        let h = &kinds[trial % kinds.len()];
        let d = 4;
        let x0: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut seq = EstimatingSequence::new(
            x0.clone(),
            0.5 + 2.0 * rng.random::<f64>(),
            0.5 + 2.0 * rng.random::<f64>(),
        );
        seq.s = (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        seq.a_weight = rng.random::<f64>() * 3.0;
        let v = psi_argmin(&seq, h);
        let oracle = common::brute_psi_argmin(
            &x0,
            &seq.s,
            seq.c1,
            seq.c2,
            seq.a_weight,
            h,
            200_000,
        );
        let dist = common::l2_dist(&v, &oracle);
        assert!(dist <= 1e-7, "trial {trial}: dist {dist}");
    }
}

#[test]
fn doubling_wrapper_runs() {
    let p = synth_stream::<f64>(5, 40, 4, SynthModel::LogisticGaussian, NonsmoothTerm::zero())
        .unwrap();
    let base = aipcnm::schedule_convex(p.constants(), 1);
    let mut cfg = base.clone();
    cfg.exact_oracles = true;
    cfg.subsolver = SubsolverKind::Reference;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x0 = vec![0.0; 4];
    let (log, state) = aipcnm::run_doubling(&p, &cfg, &x0, 7, &mut rng).unwrap();
    assert_eq!(log.rows.len(), 8); // initial + 7 iterations
    assert_eq!(state.iter, 4); // last segment had length 4
    let f_first = log.rows[0].fval;
    let f_last = log.rows.last().unwrap().fval;
    assert!(f_last <= f_first);
}

#[test]
fn single_iteration_logs_two_rows() {
    let p = synth_stream::<f64>(8, 30, 4, SynthModel::LogisticGaussian, NonsmoothTerm::zero())
        .unwrap();
    let mut config = aipcnm::schedule_convex(p.constants(), 1);
    config.exact_oracles = true;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (log, _) = aipcnm::run(&p, &config, &vec![0.0; 4], 1, &mut rng).unwrap();
    assert_eq!(log.rows.len(), 2);
}

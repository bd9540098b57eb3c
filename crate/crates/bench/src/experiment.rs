//! Experiment execution: problem construction, method dispatch, output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pcnm::aipcnm;
use pcnm::baseline;
use pcnm::cubic::{self, CubicModel};
use pcnm::dataset::{self, SynthModel};
use pcnm::ipcnm::{self, IpcnmMode, SubsolverKind};
use pcnm::problem::{self, NonsmoothTerm};
use pcnm::runlog::{RunLog, RunRow};
use pcnm::sampling;
use pcnm::svrg;
use pcnm::Problem64;

use crate::config::{
    ExperimentConfig, Method, Mode, NonsmoothSpec, ProblemSpec, SubsolverChoice,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_WARNING: i32 = 3;

fn nonsmooth_from(spec: &NonsmoothSpec) -> NonsmoothTerm<f64> {
    match *spec {
        NonsmoothSpec::Zero => NonsmoothTerm::zero(),
        NonsmoothSpec::L1(l) => NonsmoothTerm::l1(l),
        NonsmoothSpec::L2(s) => NonsmoothTerm::l2_squared(s),
        NonsmoothSpec::L1L2(l, s) => NonsmoothTerm::l1_plus_l2(l, s),
        NonsmoothSpec::Box(lo, hi) => NonsmoothTerm::box_indicator(lo, hi),
    }
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem64> {
    let h = nonsmooth_from(&cfg.nonsmooth);
    let mut p = match &cfg.problem {
        ProblemSpec::SynthLogistic => {
            dataset::synth_stream(cfg.seed, cfg.n, cfg.dim, SynthModel::LogisticGaussian, h)?
        }
        ProblemSpec::SynthQuadratic => {
            dataset::synth_stream(cfg.seed, cfg.n, cfg.dim, SynthModel::LeastSquaresGaussian, h)?
        }
        ProblemSpec::SynthQuadCubic => {
            let base = dataset::synth_stream::<f64>(
                cfg.seed,
                cfg.n,
                cfg.dim,
                SynthModel::LeastSquaresGaussian,
                NonsmoothTerm::zero(),
            )?;
            let factors: Vec<Vec<f64>> =
                (0..base.n_samples()).map(|i| base.sample_row_dense(i)).collect();
            let linear: Vec<Vec<f64>> = (0..base.n_samples())
                .map(|i| {
                    let mut g = vec![0.0; base.dim()];
                    base.sample_grad(&vec![0.0; base.dim()], i, &mut g);
                    g.iter().map(|v| -v).collect()
                })
                .collect();
            problem::make_quadratic_cubic(
                factors,
                problem::LinearSpec::PerSample(linear),
                cfg.cubic_coeff,
                h,
            )?
        }
        ProblemSpec::Dataset(path) => {
            let (rows, labels) = dataset::load_sparse_text::<f64>(path)?;
            problem::make_logistic(rows, labels, h)?
        }
    };
    // default horizon/time-dependent constants, then user overrides
    {
        let c = p.constants_mut();
        c.horizon_t = cfg.t_iters.max(1);
    }
    let x0 = vec![0.0; p.dim()];
    let needs_dist = !cfg.overrides.iter().any(|(k, _)| k == "dist_bound");
    if needs_dist {
        let d_est = baseline::estimate_dist_bound(&p, &x0);
        p.constants_mut().dist_bound = d_est;
    }
    let needs_r = !cfg.overrides.iter().any(|(k, _)| k == "r_bound");
    for (k, v) in &cfg.overrides {
        let c = p.constants_mut();
        match k.as_str() {
            "l3" => c.l3 = *v,
            "dist_bound" => c.dist_bound = *v,
            "sigma2" => c.sigma2 = *v,
            "tau1" => c.tau1 = *v,
            "gamma1" => c.gamma1 = *v,
            "tau2" => c.tau2 = *v,
            "gamma2" => c.gamma2 = *v,
            "delta" => c.delta = *v,
            "r_bound" => c.r_bound = *v,
            _ => unreachable!("override keys are validated at parse time"),
        }
    }
    if needs_r {
        let d = p.constants().dist_bound;
        p.constants_mut().r_bound = 2.0 * d;
    }
    p.constants().validate()?;
    let x0 = vec![0.0; p.dim()];
    if !p.objective(&x0).is_finite() {
        return Err(anyhow!(
            "the origin start point is infeasible for this nonsmooth term"
        ));
    }
    Ok(p)
}

fn subsolver_kind(c: SubsolverChoice) -> SubsolverKind {
    match c {
        SubsolverChoice::Reference => SubsolverKind::Reference,
        SubsolverChoice::Svrg => SubsolverKind::Svrg,
    }
}

fn run_one_method(
    method: Method,
    cfg: &ExperimentConfig,
    problem: &Problem64,
    fstar: Option<f64>,
) -> Result<RunLog> {
    let x0 = vec![0.0; problem.dim()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match method {
        Method::Ipcnm => {
            let mode = match cfg.mode {
                Mode::Convex => IpcnmMode::Convex,
                Mode::StronglyConvex => IpcnmMode::StronglyConvex,
                Mode::SuperlinearTail => IpcnmMode::SuperlinearTail,
            };
            let mut c = ipcnm::IpcnmConfig::new(mode, problem.constants().clone());
            c.subsolver = subsolver_kind(cfg.subsolver);
            c.exact_oracles = cfg.exact_oracles;
            c.fstar = fstar;
            c.f0_gap_estimate = cfg.f0_gap;
            c.subsolver_iter_cap = cfg.subsolver_iter_cap;
            c.svrg_max_stages = cfg.svrg_max_stages;
            let (log, _) = ipcnm::run(problem, &c, &x0, cfg.t_iters, &mut rng)?;
            Ok(log)
        }
        Method::Aipcnm => {
            let mut c = match cfg.mode {
                Mode::Convex => aipcnm::schedule_convex(problem.constants(), cfg.t_iters),
                Mode::StronglyConvex | Mode::SuperlinearTail => {
                    aipcnm::schedule_strongly_convex(problem.constants(), cfg.t_iters)?
                }
            };
            c.subsolver = subsolver_kind(cfg.subsolver);
            c.exact_oracles = cfg.exact_oracles;
            c.fstar = fstar;
            c.subsolver_iter_cap = cfg.subsolver_iter_cap;
            c.svrg_max_stages = cfg.svrg_max_stages;
            let (log, _) = aipcnm::run(problem, &c, &x0, cfg.t_iters, &mut rng)?;
            Ok(log)
        }
        Method::ProxGrad => {
            let (log, _) = baseline::prox_gradient(problem, &x0, cfg.t_iters, fstar);
            Ok(log)
        }
        Method::SvrgSubsolverBench => {
            let d = problem.dim();
            let mut g = vec![0.0; d];
            problem.full_grad(&x0, &mut g);
            let hess = sampling::exact_hessian(problem, &x0, 0.0);
            let eta = 3.0 * problem.constants().l3;
            let f0 = problem.full_eval(&x0);
            let model = CubicModel::new(
                x0.clone(),
                g,
                hess,
                eta,
                f0,
                problem.nonsmooth().clone(),
            );
            let model_star = if cfg.gap_ref {
                Some(cubic::reference_solve(&model, 1e-12))
            } else {
                None
            };
            let mstar_val = model_star.as_ref().map(|s| model.value(&s.x));
            let scfg = svrg::SvrgConfig::for_model(&model, 1e-10, cfg.svrg_max_stages);
            let (sol, state) = svrg::solve_with_state(&model, &scfg, &mut rng);
            let mut log = RunLog::new();
            let v0 = model.value(&x0);
            log.push(RunRow::initial(
                v0,
                mstar_val.map(|m| v0 - m).unwrap_or(f64::NAN),
            ));
            for rec in &state.history {
                let val = model.value_w(&rec.w) ;
                log.push(RunRow {
                    iter: rec.stage,
                    wall_ms: 0.0,
                    fval: val,
                    gap: mstar_val.map(|m| val - m).unwrap_or(f64::NAN),
                    grad_samples_cum: 0,
                    hess_samples_cum: problem.n_samples() as u64,
                    hvp_count_cum: rec.hvp_cum,
                    subsolver_iters: rec.m_s,
                    et_budget: f64::NAN,
                    flags: if rec.stage == state.history.len() && sol.warning {
                        "subsolver_warning".into()
                    } else {
                        String::new()
                    },
                    diag: None,
                });
            }
            Ok(log)
        }
    }
}

fn compute_fstar(cfg: &ExperimentConfig, problem: &Problem64) -> Option<f64> {
    if !cfg.gap_ref {
        return None;
    }
    let x0 = vec![0.0; problem.dim()];
    let sol = baseline::reference_minimize(problem, &x0, 1e-13, 400);
    Some(sol.fval)
}

fn write_outputs(
    dir: &Path,
    log: &RunLog,
    cfg: &ExperimentConfig,
    method: Method,
    runtime_ms: f64,
) -> Result<()> {
    if !log.validate() {
        return Err(anyhow!("run log violates its structural invariants"));
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("log.csv"), log.to_csv(cfg.timing))?;
    let last = log.last().ok_or_else(|| anyhow!("empty run log"))?;
    let summary = serde_json::json!({
        "method": method.name(),
        "seed": cfg.seed,
        "iterations": last.iter,
        "final_fval": last.fval,
        "final_gap": if last.gap.is_nan() { serde_json::Value::Null } else { last.gap.into() },
        "grad_samples": last.grad_samples_cum,
        "hess_samples": last.hess_samples_cum,
        "hvp_count": last.hvp_count_cum,
        "equivalent_evals": last.grad_samples_cum + last.hvp_count_cum,
        "runtime_ms": runtime_ms,
        "warnings": log.has_warnings(),
    });
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(())
}

fn resolve_out(cfg: &ExperimentConfig, cli_out: Option<&Path>) -> Result<PathBuf> {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| anyhow!("no output directory: set `out = ...` in the config or pass --out"))
}

/// `bench run`: one method, writes `<out>/log.csv` and `<out>/summary.json`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    cli_out: Option<&Path>,
    quiet: bool,
) -> Result<i32> {
    if cfg.methods.len() != 1 {
        return Err(anyhow!(
            "`run` expects exactly one method; use `compare` for several"
        ));
    }
    let out = resolve_out(cfg, cli_out)?;
    let method = cfg.methods[0];
    let problem = build_problem(cfg)?;
    let fstar = compute_fstar(cfg, &problem);
    let start = Instant::now();
    let log = run_one_method(method, cfg, &problem, fstar)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    write_outputs(&out, &log, cfg, method, runtime_ms)?;
    if !quiet {
        let last = log.last().unwrap();
        eprintln!(
            "{}: {} iterations, final fval {:.6e}, gap {:.3e}, {} equivalent evals",
            method.name(),
            last.iter,
            last.fval,
            last.gap,
            log.equivalent_evals()
        );
    }
    Ok(if log.has_warnings() {
        EXIT_WARNING
    } else {
        EXIT_OK
    })
}

/// `bench compare`: several methods on one problem; per-method outputs plus a
/// combined gap-vs-evaluations CSV. Per-method failures are isolated.
pub fn compare_methods(
    cfg: &ExperimentConfig,
    cli_out: Option<&Path>,
    quiet: bool,
) -> Result<i32> {
    if cfg.methods.len() < 2 {
        return Err(anyhow!("`compare` needs at least two methods"));
    }
    let out = resolve_out(cfg, cli_out)?;
    let problem = build_problem(cfg)?;
    let fstar = compute_fstar(cfg, &problem);
    let mut combined = String::from("method,iter,equiv_evals,fval,gap\n");
    let mut any_warning = false;
    let mut any_failure = false;
    for &method in &cfg.methods {
        let start = Instant::now();
        match run_one_method(method, cfg, &problem, fstar) {
            Ok(log) => {
                let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
                let mdir = out.join(method.name());
                write_outputs(&mdir, &log, cfg, method, runtime_ms)?;
                any_warning |= log.has_warnings();
                for r in &log.rows {
                    combined.push_str(&format!(
                        "{},{},{},{},{}\n",
                        method.name(),
                        r.iter,
                        r.grad_samples_cum + r.hvp_count_cum,
                        r.fval,
                        if r.gap.is_nan() {
                            "NaN".to_string()
                        } else {
                            format!("{}", r.gap)
                        }
                    ));
                }
                if !quiet {
                    eprintln!("{}: done", method.name());
                }
            }
            Err(e) => {
                any_failure = true;
                eprintln!("{}: failed: {e}", method.name());
            }
        }
    }
    fs::create_dir_all(&out)?;
    fs::write(out.join("combined.csv"), combined)?;
    Ok(if any_failure {
        EXIT_CONFIG
    } else if any_warning {
        EXIT_WARNING
    } else {
        EXIT_OK
    })
}

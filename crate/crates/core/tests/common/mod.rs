//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here re-derives results through a different computational path
//! than the library (finite differences, dense matrix solves, grid search,
//! long-running small-step iterations), so agreement is meaningful.
#![allow(dead_code)]

use pcnm::linalg::DenseMat;
use pcnm::problem::{CompositeProblem, NonsmoothKind, NonsmoothTerm};

/// Central finite differences of the full smooth value.
pub fn fd_full_gradient(problem: &CompositeProblem<f64>, x: &[f64]) -> Vec<f64> {
    let d = problem.dim();
    let mut g = vec![0.0; d];
    let mut xp = x.to_vec();
    for j in 0..d {
        let h = 1e-6 * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = problem.full_eval(&xp);
        xp[j] = x[j] - h;
        let fm = problem.full_eval(&xp);
        xp[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Independent coordinatewise prox of `h` with quadratic coefficient `q`
/// (re-derived formulas, not the library path).
pub fn prox_oracle(h: &NonsmoothTerm<f64>, p: &[f64], q: f64) -> Vec<f64> {
    let soft = |v: f64, t: f64| -> f64 {
        if v > t {
            v - t
        } else if v < -t {
            v + t
        } else {
            0.0
        }
    };
    match *h.kind() {
        NonsmoothKind::Zero => p.to_vec(),
        NonsmoothKind::L1(lam) => p.iter().map(|&v| soft(v, lam / q)).collect(),
        NonsmoothKind::L2Squared(c) => p.iter().map(|&v| q * v / (q + c)).collect(),
        NonsmoothKind::L1PlusL2(lam, c) => {
            p.iter().map(|&v| soft(q * v, lam) / (q + c)).collect()
        }
        NonsmoothKind::BoxIndicator(lo, hi) => p.iter().map(|&v| v.clamp(lo, hi)).collect(),
    }
}

/// Objective of the cubic prox problem:
/// `(1/(2 step))||w - z||^2 + (eta/6)||w||^3 + h(w + y)`.
pub fn cubic_prox_objective(
    h: &NonsmoothTerm<f64>,
    y: &[f64],
    eta: f64,
    step: f64,
    z: &[f64],
    w: &[f64],
) -> f64 {
    let d = w.len();
    let mut quad = 0.0;
    let mut nrm = 0.0;
    let mut x = vec![0.0; d];
    for j in 0..d {
        let diff = w[j] - z[j];
        quad += diff * diff;
        nrm += w[j] * w[j];
        x[j] = w[j] + y[j];
    }
    let r = nrm.sqrt();
    quad / (2.0 * step) + eta / 6.0 * r * r * r + h.eval(&x)
}

/// Grid-plus-bisection oracle for the cubic prox via the radial equation
/// `||w(rho)|| = rho`, with `w(rho)` from the independent prox formulas.
pub fn grid_cubic_prox(
    h: &NonsmoothTerm<f64>,
    y: &[f64],
    eta: f64,
    step: f64,
    z: &[f64],
) -> Vec<f64> {
    let d = z.len();
    let w_of = |rho: f64| -> Vec<f64> {
        let q = 1.0 / step + eta * rho / 2.0;
        let denom = 1.0 + step * eta * rho / 2.0;
        let shifted: Vec<f64> = (0..d).map(|j| z[j] / denom + y[j]).collect();
        let u = prox_oracle(h, &shifted, q);
        (0..d).map(|j| u[j] - y[j]).collect()
    };
    let phi = |rho: f64| -> f64 {
        let w = w_of(rho);
        w.iter().map(|v| v * v).sum::<f64>().sqrt() - rho
    };
    if eta == 0.0 {
        return w_of(0.0);
    }
    // coarse grid to bracket the sign change
    let mut hi = phi(0.0).max(1e-12);
    if hi <= 1e-14 {
        return w_of(0.0);
    }
    while phi(hi) > 0.0 {
        hi *= 2.0;
        assert!(hi < 1e12, "oracle bracket failure");
    }
    let grid = 2048;
    let mut lo = 0.0;
    let mut hi_b = hi;
    for k in 0..grid {
        let a = hi * k as f64 / grid as f64;
        let b = hi * (k + 1) as f64 / grid as f64;
        if phi(a) >= 0.0 && phi(b) < 0.0 {
            lo = a;
            hi_b = b;
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi_b);
        if phi(mid) >= 0.0 {
            lo = mid;
        } else {
            hi_b = mid;
        }
    }
    w_of(0.5 * (lo + hi_b))
}

/// Long small-step prox-gradient oracle for the estimating-sequence argmin:
/// minimize `<s,u> + (c1/2)||u||^2 + (c2/3)||u||^3 + a_weight * h(u + x0)`
/// over `u`, returning `x0 + u`.
pub fn brute_psi_argmin(
    x0: &[f64],
    s: &[f64],
    c1: f64,
    c2: f64,
    a_weight: f64,
    h: &NonsmoothTerm<f64>,
    iters: usize,
) -> Vec<f64> {
    let d = x0.len();
    let mut u = vec![0.0; d];
    // crude radius bound to set the step
    let smax = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radius = (smax / c1).max(1.0);
    let lip = c1 + 2.0 * c2 * radius;
    let tau = 0.05 / lip;
    let q = 1.0 / tau;
    let mut p = vec![0.0; d];
    for _ in 0..iters {
        let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..d {
            let grad = s[j] + c1 * u[j] + c2 * r * u[j];
            p[j] = u[j] - tau * grad + x0[j];
        }
        let hs = if a_weight > 0.0 {
            h.scaled(a_weight)
        } else {
            NonsmoothTerm::zero()
        };
        let prox = prox_oracle(&hs, &p, q);
        for j in 0..d {
            u[j] = prox[j] - x0[j];
        }
    }
    (0..d).map(|j| x0[j] + u[j]).collect()
}

/// Dense-algebra solver for the smooth cubic model
/// `min_w <g,w> + 0.5 w^T H w + (eta/6)||w||^3` via the radial secular
/// equation `(H + (eta/2) rho I) w = -g`, `||w|| = rho`.
pub fn dense_cubic_argmin(hdense: &DenseMat<f64>, g: &[f64], eta: f64) -> Vec<f64> {
    let w_of = |rho: f64| -> Vec<f64> {
        let mut m = hdense.clone();
        m.add_scaled_identity(eta * rho / 2.0);
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        m.solve(&neg).expect("singular shifted system")
    };
    let norm = |w: &[f64]| w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut hi = norm(&w_of(0.0));
    if eta == 0.0 || hi < 1e-300 {
        return w_of(0.0);
    }
    while norm(&w_of(hi)) > hi {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(&w_of(mid)) >= mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    w_of(0.5 * (lo + hi))
}

/// Independent straight-line trace of the exact accelerated method on a
/// quadratic with `h = 0`: dense algebra throughout.
pub struct ExactAcceleratedTrace {
    pub xs: Vec<Vec<f64>>,
    pub vs: Vec<Vec<f64>>,
}

pub fn exact_accelerated_trace(
    problem: &CompositeProblem<f64>,
    x0: &[f64],
    steps: usize,
) -> ExactAcceleratedTrace {
    let d = problem.dim();
    let cfg = problem.constants();
    let l3 = cfg.l3;
    let dist = cfg.dist_bound;
    let eta = 4.0 * l3;
    let c1 = 7.0 * l3 * dist;
    let c2 = 48.0 * l3;
    let a_of = |t: usize| (t * (t + 1) * (t + 2)) as f64 / 6.0;
    // constant quadratic data: H0 = full Hessian anywhere, b from gradient at 0
    let h0 = problem.full_hess(x0);
    let mut b = vec![0.0; d];
    problem.full_grad(&vec![0.0; d], &mut b);
    for v in b.iter_mut() {
        *v = -*v;
    }
    let grad_at = |x: &[f64]| -> Vec<f64> {
        let mut hx = vec![0.0; d];
        h0.matvec(x, &mut hx);
        (0..d).map(|j| hx[j] - b[j]).collect()
    };

    let mut x = x0.to_vec();
    let mut v = x0.to_vec();
    let mut s = vec![0.0; d];
    let mut xs = vec![x.clone()];
    let mut vs = vec![v.clone()];
    for t in 0..steps {
        let a_t = a_of(t);
        let a_t1 = a_of(t + 1);
        let a_step = a_t1 - a_t;
        let alpha = a_step / a_t1;
        let y: Vec<f64> = (0..d)
            .map(|j| (1.0 - alpha) * x[j] + alpha * v[j])
            .collect();
        let mu = l3 * dist / (t + 2) as f64;
        let g = grad_at(&y);
        let mut hshift = h0.clone();
        hshift.add_scaled_identity(0.75 * mu);
        let w = dense_cubic_argmin(&hshift, &g, eta);
        x = (0..d).map(|j| y[j] + w[j]).collect();
        let gp = grad_at(&x);
        for j in 0..d {
            s[j] += a_step * gp[j];
        }
        // v = x0 - s * rho/||s|| with (c1 + c2 rho) rho = ||s||
        let snorm = s.iter().map(|q| q * q).sum::<f64>().sqrt();
        if snorm > 0.0 {
            let rho = (-c1 + (c1 * c1 + 4.0 * c2 * snorm).sqrt()) / (2.0 * c2);
            v = (0..d).map(|j| x0[j] - s[j] * rho / snorm).collect();
        } else {
            v = x0.to_vec();
        }
        xs.push(x.clone());
        vs.push(v.clone());
    }
    ExactAcceleratedTrace { xs, vs }
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Seeded random cubic model on a rank-one quadratic base (for subsolver
/// equivalence and contraction experiments).
pub fn random_cubic_model(seed: u64, d: usize, n: usize, eta: f64) -> pcnm::cubic::CubicModel<f64> {
    use pcnm::problem::make_quadratic;
    use pcnm::sampling::exact_hessian;
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.2 / (d as f64).sqrt();
    let factors: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let u: f64 = rng.random();
                    (u * 2.0 - 1.0) * 1.732 * scale * 2.0
                })
                .collect()
        })
        .collect();
    let h = match seed % 3 {
        0 => NonsmoothTerm::zero(),
        1 => NonsmoothTerm::l1(0.02),
        _ => NonsmoothTerm::l2_squared(0.05),
    };
    let p = make_quadratic(factors, vec![0.0; d], NonsmoothTerm::zero()).unwrap();
    let anchor = vec![0.0; d];
    let hess = exact_hessian(&p, &anchor, 0.0);
    let g: Vec<f64> = (0..d)
        .map(|_| {
            let u: f64 = rng.random();
            u * 2.0 - 1.0
        })
        .collect();
    pcnm::cubic::CubicModel::new(anchor, g, hess, eta, 0.0, h)
}

//! Per-iteration run records and their CSV serialization.

use std::fmt::Write as _;

/// Diagnostic columns emitted by the accelerated solver in test mode.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiagCols {
    /// Estimating-sequence value at its minimizer.
    pub psi_v: f64,
    /// Accumulated weight `A_t`.
    pub a_t: f64,
    /// Margin of the momentum-point inequality diagnostic.
    pub q_margin: f64,
    /// Per-iteration statistical error term.
    pub g_i: f64,
}

#[derive(Debug, Clone)]
pub struct RunRow {
    pub iter: usize,
    pub wall_ms: f64,
    pub fval: f64,
    /// `F(x_t) - F*` when a reference value is available, `NaN` otherwise.
    pub gap: f64,
    pub grad_samples_cum: u64,
    pub hess_samples_cum: u64,
    pub hvp_count_cum: u64,
    pub subsolver_iters: usize,
    pub et_budget: f64,
    pub flags: String,
    pub diag: Option<DiagCols>,
}

impl RunRow {
    pub fn initial(fval: f64, gap: f64) -> Self {
        RunRow {
            iter: 0,
            wall_ms: 0.0,
            fval,
            gap,
            grad_samples_cum: 0,
            hess_samples_cum: 0,
            hvp_count_cum: 0,
            subsolver_iters: 0,
            et_budget: f64::NAN,
            flags: String::new(),
            diag: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub rows: Vec<RunRow>,
}

impl RunLog {
    pub fn new() -> Self {
        RunLog { rows: Vec::new() }
    }

    pub fn push(&mut self, row: RunRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&RunRow> {
        self.rows.last()
    }

    /// True when any row carries a warning-class flag (informational flags
    /// such as `grad_exact` do not count).
    pub fn has_warnings(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.flags.split(';').any(|f| f.contains("warning")))
    }

    /// Structural invariants: strictly increasing iterations, non-decreasing
    /// cumulative counters, finite objective values.
    pub fn validate(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].iter > w[0].iter
                && w[1].grad_samples_cum >= w[0].grad_samples_cum
                && w[1].hess_samples_cum >= w[0].hess_samples_cum
                && w[1].hvp_count_cum >= w[0].hvp_count_cum
        }) && self.rows.iter().all(|r| r.fval.is_finite())
    }

    /// Equivalent stochastic gradient evaluations consumed so far:
    /// gradient samples plus Hessian-vector products.
    pub fn equivalent_evals(&self) -> u64 {
        self.last()
            .map(|r| r.grad_samples_cum + r.hvp_count_cum)
            .unwrap_or(0)
    }

    /// RFC-4180 CSV with a header row. `include_wall` controls whether the
    /// wall-clock column carries measurements (it is zeroed by default so
    /// logs are byte-reproducible for a fixed seed).
    pub fn to_csv(&self, include_wall: bool) -> String {
        let with_diag = self.rows.iter().any(|r| r.diag.is_some());
        let mut out = String::new();
        out.push_str(
            "iter,wall_ms,fval,gap,grad_samples_cum,hess_samples_cum,hvp_count_cum,subsolver_iters,Et_budget,flags",
        );
        if with_diag {
            out.push_str(",psi_v,a_t,q_margin,g_i");
        }
        out.push('\n');
        for r in &self.rows {
            let wall = if include_wall { r.wall_ms } else { 0.0 };
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.iter,
                fmt_f64(wall),
                fmt_f64(r.fval),
                fmt_f64(r.gap),
                r.grad_samples_cum,
                r.hess_samples_cum,
                r.hvp_count_cum,
                r.subsolver_iters,
                fmt_f64(r.et_budget),
                csv_quote(&r.flags)
            );
            if with_diag {
                match &r.diag {
                    Some(d) => {
                        let _ = write!(
                            out,
                            ",{},{},{},{}",
                            fmt_f64(d.psi_v),
                            fmt_f64(d.a_t),
                            fmt_f64(d.q_margin),
                            fmt_f64(d.g_i)
                        );
                    }
                    None => out.push_str(",,,,"),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

/// Minimal RFC-4180 quoting.
fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

//! Flat key-value experiment configuration.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines are ignored. Unknown keys are rejected so typos surface as config
//! errors. The documented keys are listed in the repository README.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ipcnm,
    Aipcnm,
    ProxGrad,
    SvrgSubsolverBench,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ipcnm => "ipcnm",
            Method::Aipcnm => "aipcnm",
            Method::ProxGrad => "prox_grad",
            Method::SvrgSubsolverBench => "svrg_subsolver_bench",
        }
    }

    fn parse(s: &str) -> Result<Method, ConfigError> {
        match s {
            "ipcnm" => Ok(Method::Ipcnm),
            "aipcnm" => Ok(Method::Aipcnm),
            "prox_grad" => Ok(Method::ProxGrad),
            "svrg_subsolver_bench" => Ok(Method::SvrgSubsolverBench),
            other => err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Convex,
    StronglyConvex,
    SuperlinearTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsolverChoice {
    Reference,
    Svrg,
}

#[derive(Debug, Clone)]
pub enum ProblemSpec {
    SynthLogistic,
    SynthQuadratic,
    SynthQuadCubic,
    Dataset(PathBuf),
}

#[derive(Debug, Clone)]
pub enum NonsmoothSpec {
    Zero,
    L1(f64),
    L2(f64),
    L1L2(f64, f64),
    Box(f64, f64),
}

/// Fully parsed experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub problem: ProblemSpec,
    pub nonsmooth: NonsmoothSpec,
    pub mode: Mode,
    pub subsolver: SubsolverChoice,
    pub exact_oracles: bool,
    pub gap_ref: bool,
    pub timing: bool,
    pub n: usize,
    pub dim: usize,
    pub cubic_coeff: f64,
    pub t_iters: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// (key, value) schedule-constant overrides, applied in file order.
    pub overrides: Vec<(String, f64)>,
    pub f0_gap: Option<f64>,
    pub subsolver_iter_cap: Option<usize>,
    pub svrg_max_stages: usize,
}

const OVERRIDE_KEYS: &[&str] = &[
    "l3",
    "dist_bound",
    "sigma2",
    "tau1",
    "gamma1",
    "tau2",
    "gamma2",
    "delta",
    "r_bound",
];

pub fn parse_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected `key = value`", lineno + 1));
        };
        let key = k.trim().to_string();
        let val = v.trim().to_string();
        if map.insert(key.clone(), val).is_some() {
            return err(format!("line {}: duplicate key `{key}`", lineno + 1));
        }
        order.push(key);
    }

    let mut used: BTreeMap<&str, bool> = BTreeMap::new();
    let get = |map: &BTreeMap<String, String>, key: &str| -> Option<String> {
        map.get(key).cloned()
    };
    macro_rules! take {
        ($key:expr) => {{
            used.insert($key, true);
            get(&map, $key)
        }};
    }

    let parse_f64 = |key: &str, v: &str| -> Result<f64, ConfigError> {
        v.parse::<f64>()
            .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a number")))
    };
    let parse_usize = |key: &str, v: &str| -> Result<usize, ConfigError> {
        v.parse::<usize>()
            .map_err(|_| ConfigError(format!("key `{key}`: `{v}` is not a nonnegative integer")))
    };
    let parse_bool = |key: &str, v: &str| -> Result<bool, ConfigError> {
        match v {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => err(format!("key `{key}`: `{v}` is not a boolean")),
        }
    };

    // methods
    let methods: Vec<Method> = if let Some(ms) = take!("methods") {
        let mut v = Vec::new();
        for tok in ms.split(',') {
            v.push(Method::parse(tok.trim())?);
        }
        v
    } else if let Some(m) = take!("method") {
        vec![Method::parse(m.trim())?]
    } else {
        return err("missing required key `method` (or `methods`)");
    };
    if methods.is_empty() {
        return err("no methods listed");
    }

    let problem = match take!("problem").as_deref() {
        Some("synth_logistic") => ProblemSpec::SynthLogistic,
        Some("synth_quadratic") => ProblemSpec::SynthQuadratic,
        Some("synth_quad_cubic") => ProblemSpec::SynthQuadCubic,
        Some("dataset") => {
            let p = take!("dataset_path")
                .ok_or_else(|| ConfigError("problem = dataset requires dataset_path".into()))?;
            let pb = PathBuf::from(p);
            if !pb.is_file() {
                return err(format!("dataset_path `{}` does not exist", pb.display()));
            }
            ProblemSpec::Dataset(pb)
        }
        Some(other) => return err(format!("unknown problem `{other}`")),
        None => return err("missing required key `problem`"),
    };
    used.insert("dataset_path", true);

    let nonsmooth = match take!("nonsmooth").as_deref().unwrap_or("zero") {
        "zero" => NonsmoothSpec::Zero,
        "l1" => {
            let lam = take!("lambda")
                .ok_or_else(|| ConfigError("nonsmooth = l1 requires lambda".into()))?;
            NonsmoothSpec::L1(parse_f64("lambda", &lam)?)
        }
        "l2" => {
            let s = take!("sigma2_h")
                .ok_or_else(|| ConfigError("nonsmooth = l2 requires sigma2_h".into()))?;
            NonsmoothSpec::L2(parse_f64("sigma2_h", &s)?)
        }
        "l1_l2" => {
            let lam = take!("lambda")
                .ok_or_else(|| ConfigError("nonsmooth = l1_l2 requires lambda".into()))?;
            let s = take!("sigma2_h")
                .ok_or_else(|| ConfigError("nonsmooth = l1_l2 requires sigma2_h".into()))?;
            NonsmoothSpec::L1L2(parse_f64("lambda", &lam)?, parse_f64("sigma2_h", &s)?)
        }
        "box" => {
            let lo = take!("box_lo")
                .ok_or_else(|| ConfigError("nonsmooth = box requires box_lo".into()))?;
            let hi = take!("box_hi")
                .ok_or_else(|| ConfigError("nonsmooth = box requires box_hi".into()))?;
            NonsmoothSpec::Box(parse_f64("box_lo", &lo)?, parse_f64("box_hi", &hi)?)
        }
        other => return err(format!("unknown nonsmooth `{other}`")),
    };
    for k in ["lambda", "sigma2_h", "box_lo", "box_hi"] {
        used.insert(k, true);
    }

    let mode = match take!("mode").as_deref().unwrap_or("convex") {
        "convex" => Mode::Convex,
        "strongly_convex" => Mode::StronglyConvex,
        "superlinear_tail" => Mode::SuperlinearTail,
        other => return err(format!("unknown mode `{other}`")),
    };
    let subsolver = match take!("subsolver").as_deref().unwrap_or("reference") {
        "reference" => SubsolverChoice::Reference,
        "svrg" => SubsolverChoice::Svrg,
        other => return err(format!("unknown subsolver `{other}`")),
    };

    let seed = match take!("seed") {
        Some(s) => s
            .parse::<u64>()
            .map_err(|_| ConfigError(format!("key `seed`: `{s}` is not a u64")))?,
        None => return err("missing required key `seed`"),
    };
    let t_iters = match take!("T") {
        Some(s) => parse_usize("T", &s)?,
        None => return err("missing required key `T`"),
    };

    let n = match take!("n") {
        Some(s) => parse_usize("n", &s)?,
        None => 200,
    };
    let dim = match take!("d") {
        Some(s) => parse_usize("d", &s)?,
        None => 10,
    };
    let cubic_coeff = match take!("cubic_coeff") {
        Some(s) => parse_f64("cubic_coeff", &s)?,
        None => 0.5,
    };
    let exact_oracles = match take!("exact_oracles") {
        Some(s) => parse_bool("exact_oracles", &s)?,
        None => false,
    };
    let gap_ref = match take!("gap_ref").as_deref() {
        Some("auto") | None => true,
        Some("none") => false,
        Some(other) => return err(format!("key `gap_ref`: expected auto|none, got `{other}`")),
    };
    let timing = match take!("timing") {
        Some(s) => parse_bool("timing", &s)?,
        None => false,
    };
    let out = take!("out").map(PathBuf::from);
    let f0_gap = match take!("f0_gap") {
        Some(s) => Some(parse_f64("f0_gap", &s)?),
        None => None,
    };
    let subsolver_iter_cap = match take!("subsolver_iter_cap") {
        Some(s) => Some(parse_usize("subsolver_iter_cap", &s)?),
        None => None,
    };
    let svrg_max_stages = match take!("svrg_max_stages") {
        Some(s) => parse_usize("svrg_max_stages", &s)?,
        None => 200,
    };

    let mut overrides = Vec::new();
    for &k in OVERRIDE_KEYS {
        used.insert(k, true);
        if let Some(v) = get(&map, k) {
            overrides.push((k.to_string(), parse_f64(k, &v)?));
        }
    }

    for key in &order {
        if !used.contains_key(key.as_str()) {
            return err(format!("unknown key `{key}`"));
        }
    }

    Ok(ExperimentConfig {
        methods,
        problem,
        nonsmooth,
        mode,
        subsolver,
        exact_oracles,
        gap_ref,
        timing,
        n,
        dim,
        cubic_coeff,
        t_iters,
        seed,
        out,
        overrides,
        f0_gap,
        subsolver_iter_cap,
        svrg_max_stages,
    })
}

//! Dataset ingestion: sparse text loader and seeded synthetic generators.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::{
    make_logistic, make_quadratic_cubic, CompositeProblem, LinearSpec, NonsmoothTerm, SparseRow,
};
use crate::scalar::Scalar;

/// Parses the `label idx:val idx:val` sparse text format (1-based indices,
/// strictly increasing within a line). Blank lines are skipped; `#` starts a
/// comment line.
pub fn load_sparse_text<S: Scalar>(path: impl AsRef<Path>) -> Result<(Vec<SparseRow<S>>, Vec<S>)> {
    let content = fs::read_to_string(path.as_ref())?;
    parse_sparse_text(&content)
}

/// Same as [`load_sparse_text`] but from an in-memory string.
pub fn parse_sparse_text<S: Scalar>(content: &str) -> Result<(Vec<SparseRow<S>>, Vec<S>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = lineno + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut tokens = text.split_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("label `{label_tok}` is not numeric"),
        })?;
        let mut indices: Vec<u32> = Vec::new();
        let mut values: Vec<S> = Vec::new();
        let mut prev: i64 = 0;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected idx:val, got `{tok}`"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("index `{idx_s}` is not a positive integer"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    msg: "indices are 1-based; found 0".into(),
                });
            }
            if (idx as i64) <= prev {
                return Err(Error::Parse {
                    line,
                    msg: format!("indices must be strictly increasing; found {idx} after {prev}"),
                });
            }
            prev = idx as i64;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("value `{val_s}` is not numeric"),
            })?;
            indices.push(idx - 1);
            values.push(S::of(val));
        }
        rows.push(SparseRow { indices, values });
        labels.push(S::of(label));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((rows, labels))
}

/// Generative models for [`synth_stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthModel {
    /// Standard-normal features, labels from a random planted hyperplane
    /// through a logistic link.
    LogisticGaussian,
    /// Standard-normal features with noisy linear targets; yields a
    /// rank-one-sample least-squares problem (quadratic family).
    LeastSquaresGaussian,
}

/// Deterministically generates an i.i.d. sample pool. With `n` chosen large
/// relative to the samples a solver will consume, this doubles as an emulated
/// endless stream.
pub fn synth_stream<S: Scalar>(
    seed: u64,
    n: usize,
    d: usize,
    model: SynthModel,
    nonsmooth: NonsmoothTerm<S>,
) -> Result<CompositeProblem<S>>
where
    StandardNormal: Distribution<S>,
{
    if n < 1 || d < 1 {
        return Err(Error::InvalidInput("need n >= 1 and d >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = S::one() / S::from_usize(d).unwrap().sqrt();
    let planted: Vec<S> = (0..d)
        .map(|_| {
            let v: S = rng.sample(StandardNormal);
            v * scale
        })
        .collect();
    match model {
        SynthModel::LogisticGaussian => {
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let feat: Vec<S> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let z: S = feat
                    .iter()
                    .zip(planted.iter())
                    .map(|(&a, &w)| a * w)
                    .fold(S::zero(), |s, v| s + v);
                let p = S::one() / (S::one() + (-z).exp());
                let u: S = S::of(rng.random::<f64>());
                labels.push(if u < p { S::one() } else { -S::one() });
                rows.push(SparseRow::dense(&feat));
            }
            make_logistic(rows, labels, nonsmooth)
        }
        SynthModel::LeastSquaresGaussian => {
            let mut factors = Vec::with_capacity(n);
            let mut linear = Vec::with_capacity(n);
            let noise = S::of(0.3);
            for _ in 0..n {
                let feat: Vec<S> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let z: S = feat
                    .iter()
                    .zip(planted.iter())
                    .map(|(&a, &w)| a * w)
                    .fold(S::zero(), |s, v| s + v);
                let e: S = rng.sample(StandardNormal);
                let target = z + noise * e;
                linear.push(feat.iter().map(|&a| a * target).collect::<Vec<S>>());
                factors.push(feat);
            }
            make_quadratic_cubic(factors, LinearSpec::PerSample(linear), S::zero(), nonsmooth)
        }
    }
}

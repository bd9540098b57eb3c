//! Small dense linear algebra helpers.
//!
//! Everything here is desk-scale (`d <= 200`); no attempt is made at cache
//! blocking or SIMD. Reductions run in a fixed left-to-right order so results
//! are bit-reproducible for a given input.

use crate::scalar::Scalar;

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        acc = acc + *x * *y;
    }
    acc
}

#[inline]
pub fn norm2<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi = *yi + alpha * *xi;
    }
}

#[inline]
pub fn scale<S: Scalar>(alpha: S, x: &mut [S]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

/// `out = a - b`
#[inline]
pub fn sub<S: Scalar>(a: &[S], b: &[S], out: &mut [S]) {
    debug_assert_eq!(a.len(), b.len());
    for i in 0..a.len() {
        out[i] = a[i] - b[i];
    }
}

pub fn dist2<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc.sqrt()
}

/// Dense symmetric matrix stored row-major (full storage).
#[derive(Debug, Clone)]
pub struct DenseMat<S> {
    pub dim: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> DenseMat<S> {
    pub fn zeros(dim: usize) -> Self {
        DenseMat {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = S::one();
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.dim + j] = self.data[i * self.dim + j] + v;
    }

    pub fn matvec(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = dot(row, x);
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: S, other: &DenseMat<S>) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a = *a + alpha * *b;
        }
    }

    pub fn add_scaled_identity(&mut self, alpha: S) {
        for i in 0..self.dim {
            self.add_at(i, i, alpha);
        }
    }

    /// Builds the matrix by applying a symmetric linear operator to the
    /// standard basis.
    pub fn from_operator(dim: usize, mut op: impl FnMut(&[S], &mut [S])) -> Self {
        let mut m = Self::zeros(dim);
        let mut e = vec![S::zero(); dim];
        let mut col = vec![S::zero(); dim];
        for j in 0..dim {
            e[j] = S::one();
            op(&e, &mut col);
            for i in 0..dim {
                m.set(i, j, col[i]);
            }
            e[j] = S::zero();
        }
        m
    }

    /// Spectral norm (largest |eigenvalue|) of a symmetric matrix via power
    /// iteration with a deterministic start vector.
    pub fn spectral_norm(&self, iters: usize) -> S {
        let d = self.dim;
        let mut v = start_vector::<S>(d);
        let mut w = vec![S::zero(); d];
        let mut lam = S::zero();
        for _ in 0..iters {
            self.matvec(&v, &mut w);
            lam = norm2(&w);
            if lam <= S::zero() {
                return S::zero();
            }
            let inv = S::one() / lam;
            for i in 0..d {
                v[i] = w[i] * inv;
            }
        }
        lam
    }

    /// All eigenvalues of a symmetric matrix via the cyclic Jacobi method,
    /// sorted ascending.
    pub fn sym_eigenvalues(&self) -> Vec<S> {
        let d = self.dim;
        let mut a = self.clone();
        // symmetrize defensively against tiny asymmetries
        for i in 0..d {
            for j in (i + 1)..d {
                let m = (a.get(i, j) + a.get(j, i)) * S::of(0.5);
                a.set(i, j, m);
                a.set(j, i, m);
            }
        }
        let eps = S::epsilon() * S::of(16.0);
        for _sweep in 0..64 {
            let mut off = S::zero();
            for i in 0..d {
                for j in (i + 1)..d {
                    off = off + a.get(i, j) * a.get(i, j);
                }
            }
            let scale_ref: S = (0..d)
                .map(|i| a.get(i, i) * a.get(i, i))
                .fold(S::zero(), |s, v| s + v)
                + off
                + S::min_positive_value();
            if off <= eps * eps * scale_ref {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a.get(p, q);
                    if apq == S::zero() {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(q, q);
                    let theta = (aqq - app) / (S::of(2.0) * apq);
                    let t = if theta >= S::zero() {
                        S::one() / (theta + (S::one() + theta * theta).sqrt())
                    } else {
                        -S::one() / (-theta + (S::one() + theta * theta).sqrt())
                    };
                    let c = S::one() / (S::one() + t * t).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..d {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut eigs: Vec<S> = (0..d).map(|i| a.get(i, i)).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eigs
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// Intended for small well-conditioned test systems.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        let d = self.dim;
        debug_assert_eq!(b.len(), d);
        let mut a = self.data.clone();
        let mut x: Vec<S> = b.to_vec();
        for col in 0..d {
            let mut piv = col;
            let mut best = a[col * d + col].abs();
            for r in (col + 1)..d {
                let v = a[r * d + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == S::zero() {
                return None;
            }
            if piv != col {
                for k in 0..d {
                    a.swap(piv * d + k, col * d + k);
                }
                x.swap(piv, col);
            }
            let inv = S::one() / a[col * d + col];
            for r in (col + 1)..d {
                let f = a[r * d + col] * inv;
                if f == S::zero() {
                    continue;
                }
                for k in col..d {
                    a[r * d + k] = a[r * d + k] - f * a[col * d + k];
                }
                x[r] = x[r] - f * x[col];
            }
        }
        for col in (0..d).rev() {
            let mut acc = x[col];
            for k in (col + 1)..d {
                acc = acc - a[col * d + k] * x[k];
            }
            x[col] = acc / a[col * d + col];
        }
        Some(x)
    }
}

/// Deterministic, generically non-degenerate start vector for power iteration.
pub fn start_vector<S: Scalar>(d: usize) -> Vec<S> {
    let mut v: Vec<S> = (0..d)
        .map(|j| S::of(1.0 + 0.37 * ((j % 11) as f64) + 0.013 * (j as f64)))
        .collect();
    let n = norm2(&v);
    scale(S::one() / n, &mut v);
    v
}

/// Largest |eigenvalue| of a symmetric operator given as a closure.
pub fn operator_spectral_norm<S: Scalar>(
    dim: usize,
    iters: usize,
    mut op: impl FnMut(&[S], &mut [S]),
) -> S {
    let mut v = start_vector::<S>(dim);
    let mut w = vec![S::zero(); dim];
    let mut lam = S::zero();
    for _ in 0..iters {
        op(&v, &mut w);
        lam = norm2(&w);
        if lam <= S::zero() {
            return S::zero();
        }
        let inv = S::one() / lam;
        for i in 0..dim {
            v[i] = w[i] * inv;
        }
    }
    lam
}

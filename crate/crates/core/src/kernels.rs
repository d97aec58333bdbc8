//! Dense kernels the solvers are assembled from.
//!
//! Everything here is a pure function of its inputs.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{orthonormality_defect, Field, Mat};

/// Relative singular-value threshold below which a polar factor is flagged
/// as non-unique.
pub const RANK_TOL: f64 = 1e-12;

/// Relative norm below which a projected column counts as dependent.
pub const DROP_TOL: f64 = 1e-10;

/// Thin polar decomposition `A = factor · hermitian_factor`.
#[derive(Debug, Clone)]
pub struct PolarResult<T: Field> {
    pub factor: Mat<T>,
    pub hermitian_factor: Mat<T>,
    /// Singular values of the input, descending.
    pub singular_values: Vec<f64>,
    pub rank_deficient: bool,
}

impl<T: Field> PolarResult<T> {
    /// `‖A‖_tr`, the sum of the singular values.
    pub fn trace_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }
}

/// Orthonormal polar factor of an `n × k` matrix with `k ≤ n`, via the thin SVD
/// `A = W Σ X^H`, giving `factor = W X^H` and `hermitian_factor = X Σ X^H`.
///
/// When `σ_min < 1e-12 σ_max` the factor is not unique; the completion the SVD
/// produced is kept and `rank_deficient` is set.
pub fn polar_orthonormal_factor<T: Field>(a: &Mat<T>) -> Result<PolarResult<T>> {
    let (n, k) = a.shape();
    if k > n {
        return Err(Error::dims("polar factor", format!("cols <= rows ({n})"), k));
    }
    if k == 0 {
        return Ok(PolarResult {
            factor: Mat::zeros(n, 0),
            hermitian_factor: Mat::zeros(0, 0),
            singular_values: Vec::new(),
            rank_deficient: false,
        });
    }
    let svd = a.clone().svd(true, true);
    let w = svd.u.expect("left singular vectors requested");
    let x_h = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let s_max = sv.first().copied().unwrap_or(0.0);
    let s_min = sv.last().copied().unwrap_or(0.0);
    let rank_deficient = s_max == 0.0 || s_min < RANK_TOL * s_max;

    let mut factor = &w * &x_h;
    if rank_deficient && orthonormality_defect(&factor) > 1e-12 {
        factor = complete_orthonormal(&factor);
    }

    let mut scaled = x_h.clone();
    for (i, s) in sv.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*s);
    }
    let hermitian_factor = hermitian_part(&x_h.ad_mul(&scaled))?;

    Ok(PolarResult {
        factor,
        hermitian_factor,
        singular_values: sv,
        rank_deficient,
    })
}

/// Deterministic repair of a factor whose columns lost orthonormality because
/// the SVD left null directions unnormalized: keep the good columns, then fill
/// from the coordinate axes.
fn complete_orthonormal<T: Field>(p: &Mat<T>) -> Mat<T> {
    let (n, k) = p.shape();
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(k);
    let candidates = (0..k)
        .map(|j| p.column(j).into_owned())
        .chain((0..n).map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = T::one();
            e
        }));
    for mut c in candidates {
        if basis.len() == k {
            break;
        }
        let before = c.norm();
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let coef = b.dotc(&c);
                c.axpy(-coef, b, T::one());
            }
        }
        let after = c.norm();
        if after > 1e-8 * before {
            c.unscale_mut(after);
            basis.push(c);
        }
    }
    Mat::from_columns(&basis)
}

/// `(A + A^H) / 2`.
pub fn hermitian_part<T: Field>(a: &Mat<T>) -> Result<Mat<T>> {
    if !a.is_square() {
        return Err(Error::dims("hermitian part", "square matrix", format!("{:?}", a.shape())));
    }
    let half = T::from_real_f64(0.5);
    Ok((a + a.adjoint()) * half)
}

/// Nuclear norm: sum of all `min(m, n)` singular values.
pub fn trace_norm<T: Field>(a: &Mat<T>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values_unordered().iter().sum()
}

/// Orthonormal basis for the part of `range(extra)` orthogonal to
/// `range(base)`.
///
/// Two rounds of classical Gram-Schmidt against `base`, then a column-by-column
/// orthonormalization (again twice) that drops any column whose remaining norm
/// falls below `1e-10` times its original norm. The result may therefore have
/// fewer columns than `extra`, possibly none.
pub fn orthonormalize_against<T: Field>(base: &Mat<T>, extra: &Mat<T>) -> Result<Mat<T>> {
    let n = base.nrows();
    if extra.nrows() != n {
        return Err(Error::dims("orthonormalize_against", n, extra.nrows()));
    }
    let m = extra.ncols();
    if m == 0 {
        return Ok(Mat::zeros(n, 0));
    }
    let scale = extra.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Mat::zeros(n, 0));
    }
    let floor = f64::EPSILON * scale;

    let mut work = extra.clone();
    for _ in 0..2 {
        if base.ncols() > 0 {
            let coef = base.ad_mul(&work);
            work -= base * coef;
        }
    }

    let mut kept: Vec<DVector<T>> = Vec::with_capacity(m);
    for j in 0..m {
        let reference = extra.column(j).norm().max(floor);
        let mut c = work.column(j).into_owned();
        for _ in 0..2 {
            for b in &kept {
                let coef = b.dotc(&c);
                c.axpy(-coef, b, T::one());
            }
            if base.ncols() > 0 {
                let coef = base.ad_mul(&c);
                c -= base * coef;
            }
        }
        let norm = c.norm();
        if norm > DROP_TOL * reference {
            c.unscale_mut(norm);
            kept.push(c);
        }
    }
    if kept.is_empty() {
        Ok(Mat::zeros(n, 0))
    } else {
        Ok(Mat::from_columns(&kept))
    }
}

/// How the spectral norm of a data matrix is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "steps")]
pub enum NormMode {
    /// Largest singular value from a dense SVD.
    Exact,
    /// `sqrt(‖B‖_1 ‖B‖_∞)`, an upper bound.
    OneInf,
    /// Largest singular value of a Golub-Kahan-Lanczos bidiagonalization with
    /// this many steps, a lower bound.
    Bidiag(usize),
}

impl NormMode {
    /// Exact up to `min(n1, n2) = 500`, the one/infinity bound above.
    pub fn default_for(n1: usize, n2: usize) -> Self {
        if n1.min(n2) <= 500 {
            NormMode::Exact
        } else {
            NormMode::OneInf
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub mode: NormMode,
    /// Set when the bidiagonalization could not start (zero matrix).
    pub degenerate: bool,
}

pub fn spectral_norm_estimate<T: Field>(b: &Mat<T>, mode: NormMode) -> NormEstimate {
    let value = match mode {
        NormMode::Exact => {
            if b.is_empty() {
                0.0
            } else {
                b.clone().singular_values_unordered().iter().copied().fold(0.0, f64::max)
            }
        }
        NormMode::OneInf => {
            let one = b
                .column_iter()
                .map(|c| c.iter().map(|x| x.modulus()).sum::<f64>())
                .fold(0.0, f64::max);
            let inf = b
                .row_iter()
                .map(|r| r.iter().map(|x| x.modulus()).sum::<f64>())
                .fold(0.0, f64::max);
            (one * inf).sqrt()
        }
        NormMode::Bidiag(steps) => match golub_kahan_estimate(b, steps.max(1)) {
            Some(v) => v,
            None => {
                return NormEstimate {
                    value: 0.0,
                    mode,
                    degenerate: true,
                }
            }
        },
    };
    NormEstimate {
        value,
        mode,
        degenerate: false,
    }
}

fn golub_kahan_estimate<T: Field>(b: &Mat<T>, steps: usize) -> Option<f64> {
    let (m, n) = b.shape();
    if m == 0 || n == 0 {
        return None;
    }
    let mut v = DVector::<T>::from_element(n, T::from_real_f64(1.0 / (n as f64).sqrt()));
    let mut p = b * &v;
    if p.norm() == 0.0 {
        // Fixed start is in the null space; fall back to the heaviest column.
        let (j, best) = b
            .column_iter()
            .map(|c| c.norm())
            .enumerate()
            .fold((0, 0.0), |acc, (j, c)| if c > acc.1 { (j, c) } else { acc });
        if best == 0.0 {
            return None;
        }
        v = DVector::zeros(n);
        v[j] = T::one();
        p = b * &v;
    }

    let mut us: Vec<DVector<T>> = Vec::new();
    let mut vs: Vec<DVector<T>> = vec![v];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();

    let steps = steps.min(m.min(n));
    for j in 0..steps {
        for _ in 0..2 {
            for u in &us {
                let c = u.dotc(&p);
                p.axpy(-c, u, T::one());
            }
        }
        let alpha = p.norm();
        if alpha <= f64::EPSILON * b.norm() {
            break;
        }
        p.unscale_mut(alpha);
        alphas.push(alpha);
        us.push(p.clone());
        if j + 1 == steps {
            break;
        }

        let mut q = b.ad_mul(&us[j]) - &vs[j] * T::from_real_f64(alpha);
        for _ in 0..2 {
            for w in &vs {
                let c = w.dotc(&q);
                q.axpy(-c, w, T::one());
            }
        }
        let beta = q.norm();
        if beta <= f64::EPSILON * b.norm() {
            break;
        }
        q.unscale_mut(beta);
        betas.push(beta);
        p = b * &q - &us[j] * T::from_real_f64(beta);
        vs.push(q);
    }

    let s = alphas.len();
    if s == 0 {
        return None;
    }
    let mut bidiag = nalgebra::DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        bidiag[(i, i)] = alphas[i];
        if i + 1 < s {
            bidiag[(i, i + 1)] = betas[i];
        }
    }
    Some(bidiag.singular_values_unordered().iter().copied().fold(0.0, f64::max))
}

/// `‖sin Θ(R(X), R(Y))‖_F` for two orthonormal `n × k` bases.
///
/// Evaluated as `‖Y − X (X^H Y)‖_F`, which equals
/// `sqrt(k − ‖X^H Y‖_F²)` for orthonormal inputs but keeps full accuracy for
/// nearby subspaces.
pub fn sin_theta_gap<T: Field>(x: &Mat<T>, y: &Mat<T>) -> Result<f64> {
    Ok(sin_theta_gap_squared(x, y)?.sqrt())
}

pub fn sin_theta_gap_squared<T: Field>(x: &Mat<T>, y: &Mat<T>) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::dims(
            "sin_theta_gap",
            format!("{:?}", x.shape()),
            format!("{:?}", y.shape()),
        ));
    }
    let proj = y - x * x.ad_mul(y);
    Ok(proj.norm_squared())
}

//! Scalar fields the solvers run over.
//!
//! Real problems stay in `f64` arithmetic throughout (adjoint is the plain
//! transpose); complex problems use `Complex<f64>`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type Mat<T> = DMatrix<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Real,
    Complex,
}

impl FieldKind {
    pub fn tag(self) -> u8 {
        match self {
            FieldKind::Real => 0,
            FieldKind::Complex => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(FieldKind::Real),
            1 => Some(FieldKind::Complex),
            _ => None,
        }
    }
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FieldKind::Real => "real",
            FieldKind::Complex => "complex",
        })
    }
}

impl std::str::FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(FieldKind::Real),
            "complex" | "c" => Ok(FieldKind::Complex),
            other => Err(format!("unknown field `{other}` (expected real|complex)")),
        }
    }
}

/// A scalar type the library can run on.
pub trait Field: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const KIND: FieldKind;

    fn from_parts(re: f64, im: f64) -> Self;

    fn parts(self) -> (f64, f64);

    fn from_real_f64(re: f64) -> Self {
        Self::from_parts(re, 0.0)
    }

    fn is_finite_value(self) -> bool {
        let (re, im) = self.parts();
        re.is_finite() && im.is_finite()
    }
}

impl Field for f64 {
    const KIND: FieldKind = FieldKind::Real;

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Field for Complex64 {
    const KIND: FieldKind = FieldKind::Complex;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

/// Standard-normal matrix in column-major draw order. For complex fields the
/// whole real part is drawn first, then the whole imaginary part, the way
/// `randn(m,n) + 1i*randn(m,n)` consumes a stream.
pub fn random_normal<T: Field, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat<T> {
    let re: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    match T::KIND {
        FieldKind::Real => Mat::from_iterator(rows, cols, re.into_iter().map(T::from_real_f64)),
        FieldKind::Complex => {
            let im: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
            Mat::from_iterator(
                rows,
                cols,
                re.into_iter().zip(im).map(|(a, b)| T::from_parts(a, b)),
            )
        }
    }
}

/// Real part of `tr(A^H B)`, i.e. the real inner product `<B, A>`.
/// `Aᴴ X` routed through the general product kernel; prefer this over
/// `ad_mul` when `A` is large and `X` is thin.
pub fn adjoint_times<T: Field>(a: &Mat<T>, x: &Mat<T>) -> Mat<T> {
    (x.adjoint() * a).adjoint()
}

pub fn re_inner<T: Field>(a: &Mat<T>, b: &Mat<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conjugate() * *y).real()).sum()
}

/// Real part of the trace of a square matrix.
pub fn re_trace<T: Field>(a: &Mat<T>) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].real()).sum()
}

/// `‖P^H P − I‖_F`.
pub fn orthonormality_defect<T: Field>(p: &Mat<T>) -> f64 {
    let g = p.ad_mul(p);
    let k = g.nrows();
    (g - Mat::<T>::identity(k, k)).norm()
}

/// The leading `k` columns of `I_n`.
pub fn leading_identity<T: Field>(n: usize, k: usize) -> Mat<T> {
    Mat::identity(n, k)
}

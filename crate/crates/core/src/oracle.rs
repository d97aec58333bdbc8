//! Slow reference implementations.
//!
//! Nothing here reuses the blockwise products of [`crate::problem`]: every
//! function forms the full `k × k` products and masks them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Mat};
use crate::kernels::trace_norm;
use crate::locg::ReducedProblem;
use crate::problem::{GradientPair, IteratePair, Partition, ProblemSet};

fn mask<T: Field>(a: &Mat<T>, partition: &Partition) -> Mat<T> {
    let mut block_of = Vec::with_capacity(partition.k());
    for (i, &b) in partition.blocks().iter().enumerate() {
        block_of.extend(std::iter::repeat(i).take(b));
    }
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        if block_of[i] == block_of[j] {
            a[(i, j)]
        } else {
            T::zero()
        }
    })
}

fn check_shapes<T: Field>(problem: &ProblemSet<T>, u: &Mat<T>, v: &Mat<T>) -> Result<()> {
    let k = problem.k();
    if u.shape() != (problem.n1(), k) || v.shape() != (problem.n2(), k) {
        return Err(Error::dims(
            "oracle pair",
            format!("{}×{k} and {}×{k}", problem.n1(), problem.n2()),
            format!("{:?} and {:?}", u.shape(), v.shape()),
        ));
    }
    Ok(())
}

fn raw_objective<T: Field>(problem: &ProblemSet<T>, u: &Mat<T>, v: &Mat<T>) -> f64 {
    problem
        .matrices()
        .iter()
        .map(|b| mask(&(u.adjoint() * b * v), problem.partition()).norm_squared())
        .sum()
}

/// `Σ_ℓ ‖BDiag(UᴴB_ℓV)‖_F²` from the full products.
pub fn bruteforce_objective<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>) -> Result<f64> {
    check_shapes(problem, &pair.u, &pair.v)?;
    Ok(raw_objective(problem, &pair.u, &pair.v))
}

/// `H1 = 2 Σ_ℓ B_ℓV BDiag(UᴴB_ℓV)ᴴ`, `H2 = 2 Σ_ℓ B_ℓᴴU BDiag(UᴴB_ℓV)`.
pub fn bruteforce_gradients<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>) -> Result<GradientPair<T>> {
    check_shapes(problem, &pair.u, &pair.v)?;
    let two = T::from_real_f64(2.0);
    let mut h1 = Mat::<T>::zeros(problem.n1(), problem.k());
    let mut h2 = Mat::<T>::zeros(problem.n2(), problem.k());
    for b in problem.matrices() {
        let bv = b * &pair.v;
        let bhu = b.adjoint() * &pair.u;
        let d = mask(&(pair.u.adjoint() * &bv), problem.partition());
        h1 += &bv * d.adjoint() * two;
        h2 += &bhu * &d * two;
    }
    Ok(GradientPair::with_multipliers(h1, h2, pair))
}

/// Default central-difference step `1e-6·(1 + ‖(U, V)‖_F)`.
pub fn default_fd_step<T: Field>(pair: &IteratePair<T>) -> f64 {
    1e-6 * (1.0 + (pair.u.norm_squared() + pair.v.norm_squared()).sqrt())
}

fn fd_block<T: Field>(x: &Mat<T>, h: f64, f: impl Fn(&Mat<T>) -> f64) -> Mat<T> {
    let mut g = Mat::<T>::zeros(x.nrows(), x.ncols());
    let mut work = x.clone();
    let complex = T::KIND == crate::field::FieldKind::Complex;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let orig = work[(i, j)];
            let (re, im) = orig.parts();
            work[(i, j)] = T::from_parts(re + h, im);
            let fp = f(&work);
            work[(i, j)] = T::from_parts(re - h, im);
            let fm = f(&work);
            let d_re = (fp - fm) / (2.0 * h);
            let d_im = if complex {
                work[(i, j)] = T::from_parts(re, im + h);
                let fp = f(&work);
                work[(i, j)] = T::from_parts(re, im - h);
                let fm = f(&work);
                (fp - fm) / (2.0 * h)
            } else {
                0.0
            };
            work[(i, j)] = orig;
            g[(i, j)] = T::from_parts(d_re, d_im);
        }
    }
    g
}

/// Central differences of the ambient objective, one real coordinate at a time.
///
/// The gradient convention is `f(P + E) ≈ f(P) + Re tr(Eᴴ G)`, so complex
/// entries are assembled as `∂/∂Re + i ∂/∂Im`.
pub fn finite_difference_gradient<T: Field>(
    problem: &ProblemSet<T>,
    pair: &IteratePair<T>,
    step: Option<f64>,
) -> Result<GradientPair<T>> {
    check_shapes(problem, &pair.u, &pair.v)?;
    let h = step.unwrap_or_else(|| default_fd_step(pair));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!("finite-difference step must be positive, got {h}")));
    }
    let h1 = fd_block(&pair.u, h, |u| raw_objective(problem, u, &pair.v));
    let h2 = fd_block(&pair.v, h, |v| raw_objective(problem, &pair.u, v));
    Ok(GradientPair::with_multipliers(h1, h2, pair))
}

/// One residual `|lhs − rhs|` with its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub name: &'static str,
    pub residual: f64,
    pub rhs: f64,
}

impl Residual {
    pub fn scaled(&self) -> f64 {
        self.residual / (1.0 + self.rhs.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub residuals: Vec<Residual>,
}

impl ConsistencyReport {
    pub fn worst_scaled(&self) -> f64 {
        self.residuals.iter().map(Residual::scaled).fold(0.0, f64::max)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.residuals.iter().all(|r| r.scaled() <= tol)
    }
}

/// Compares the reduced gradients at the leading-identity pair with the
/// projected outer gradients, and their trace norms and traces.
pub fn reduced_consistency_check<T: Field>(
    problem: &ProblemSet<T>,
    reduced: &ReducedProblem<T>,
    pair: &IteratePair<T>,
) -> Result<ConsistencyReport> {
    let outer = bruteforce_gradients(problem, pair)?;
    let inner = bruteforce_gradients(&reduced.reduced_set, &reduced.init_pair())?;
    let p1 = reduced.s1.adjoint() * &outer.h1;
    let p2 = reduced.s2.adjoint() * &outer.h2;
    let tr = |x: &Mat<T>, h: &Mat<T>| (x.adjoint() * h).trace().real();
    let z1 = &reduced.z1_init;
    let z2 = &reduced.z2_init;
    let pairs = [
        ("gradient_1", (&inner.h1 - &p1).norm(), p1.norm()),
        ("gradient_2", (&inner.h2 - &p2).norm(), p2.norm()),
        ("trace_norm_1", trace_norm(&inner.h1), trace_norm(&outer.h1)),
        ("trace_norm_2", trace_norm(&inner.h2), trace_norm(&outer.h2)),
        ("trace_1", tr(z1, &inner.h1), tr(&pair.u, &outer.h1)),
        ("trace_2", tr(z2, &inner.h2), tr(&pair.v, &outer.h2)),
    ];
    let residuals = pairs
        .iter()
        .enumerate()
        .map(|(i, &(name, a, b))| {
            if i < 2 {
                Residual { name, residual: a, rhs: b }
            } else {
                Residual {
                    name,
                    residual: (a - b).abs(),
                    rhs: b,
                }
            }
        })
        .collect();
    Ok(ConsistencyReport { residuals })
}

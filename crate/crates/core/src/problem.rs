//! The optimization problem: partition bookkeeping, objective, gradients and
//! the normalized KKT residual.
//!
//! For a partition `τ = (k_1, …, k_t)` of `k`, with `U = [U_1 … U_t]` and
//! `V = [V_1 … V_t]` split the same way,
//!
//! ```text
//! f(U, V)  = Σ_ℓ Σ_i ‖U_i^H B_ℓ V_i‖_F²
//! H1 col i = 2 Σ_ℓ (B_ℓ V_i) (V_i^H B_ℓ^H U_i)
//! H2 col i = 2 Σ_ℓ (B_ℓ^H U_i) (U_i^H B_ℓ V_i)
//! ```
//!
//! The small `k_i × k_i` factor is always formed first.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{adjoint_times, orthonormality_defect, re_trace, Field, FieldKind, Mat};
use crate::kernels::{hermitian_part, spectral_norm_estimate, NormEstimate, NormMode};

/// Orthonormality slack accepted when constructing an [`IteratePair`].
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Orthonormality slack accepted by the evaluation routines.
pub const EVAL_FEASIBILITY_TOL: f64 = 1e-8;

/// Block sizes `(k_1, …, k_t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    blocks: Vec<usize>,
    offsets: Vec<usize>,
}

impl Partition {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Input("partition must have at least one block".into()));
        }
        if blocks.iter().any(|&b| b == 0) {
            return Err(Error::Input(format!("partition blocks must be positive: {blocks:?}")));
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b);
        }
        Ok(Self { blocks, offsets })
    }

    /// `(1, …, 1)`: the joint SVD case.
    pub fn all_ones(k: usize) -> Result<Self> {
        Self::new(vec![1; k])
    }

    /// `(k)`: a single block.
    pub fn single(k: usize) -> Result<Self> {
        Self::new(vec![k])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn t(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_all_ones(&self) -> bool {
        self.blocks.iter().all(|&b| b == 1)
    }

    /// Column range of block `i`.
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.t()).map(move |i| self.range(i))
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(blocks: Vec<usize>) -> Result<Self> {
        Partition::new(blocks)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.blocks
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// `BDiag_τ(A)`: keeps the diagonal blocks of a `k × k` matrix.
pub fn block_diag_part<T: Field>(a: &Mat<T>, partition: &Partition) -> Result<Mat<T>> {
    let k = partition.k();
    if a.shape() != (k, k) {
        return Err(Error::dims("block_diag_part", format!("({k}, {k})"), format!("{:?}", a.shape())));
    }
    let mut out = Mat::zeros(k, k);
    for r in partition.ranges() {
        let len = r.len();
        out.view_mut((r.start, r.start), (len, len))
            .copy_from(&a.view((r.start, r.start), (len, len)));
    }
    Ok(out)
}

/// The `N` data matrices together with their partition and cached norms.
#[derive(Debug, Clone)]
pub struct ProblemSet<T: Field> {
    matrices: Vec<Mat<T>>,
    partition: Partition,
    frobenius: Vec<f64>,
    spectral: Vec<NormEstimate>,
    norm_mode: NormMode,
}

impl<T: Field> ProblemSet<T> {
    /// Validated construction with the default spectral-norm mode for the size.
    pub fn new(matrices: Vec<Mat<T>>, partition: Partition) -> Result<Self> {
        let (n1, n2) = matrices.first().map(|m| m.shape()).unwrap_or((0, 0));
        Self::with_norm_mode(matrices, partition, NormMode::default_for(n1, n2))
    }

    pub fn with_norm_mode(matrices: Vec<Mat<T>>, partition: Partition, norm_mode: NormMode) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::Input("a problem needs at least one matrix".into()));
        };
        let (n1, n2) = first.shape();
        for (index, m) in matrices.iter().enumerate() {
            if m.shape() != (n1, n2) {
                return Err(Error::dims("problem matrices", format!("({n1}, {n2})"), format!("{:?}", m.shape())));
            }
            if let Some(pos) = m.iter().position(|x| !x.is_finite_value()) {
                return Err(Error::NonFinite {
                    index,
                    row: pos % n1,
                    col: pos / n1,
                });
            }
        }
        if partition.k() > n1.min(n2) {
            return Err(Error::Input(format!(
                "partition size k = {} exceeds min(n1, n2) = {}",
                partition.k(),
                n1.min(n2)
            )));
        }
        let frobenius = matrices.iter().map(|m| m.norm()).collect();
        let spectral = matrices
            .par_iter()
            .map(|m| spectral_norm_estimate(m, norm_mode))
            .collect();
        Ok(Self {
            matrices,
            partition,
            frobenius,
            spectral,
            norm_mode,
        })
    }

    pub fn matrices(&self) -> &[Mat<T>] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<Mat<T>> {
        self.matrices
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn n1(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn n2(&self) -> usize {
        self.matrices[0].ncols()
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn field(&self) -> FieldKind {
        T::KIND
    }

    pub fn norm_mode(&self) -> NormMode {
        self.norm_mode
    }

    pub fn frobenius_norms(&self) -> &[f64] {
        &self.frobenius
    }

    pub fn spectral_estimates(&self) -> &[NormEstimate] {
        &self.spectral
    }

    /// `2 Σ_ℓ ‖B_ℓ‖_F · est₂(B_ℓ)`, the ε_KKT normalizer.
    pub fn kkt_denominator(&self) -> f64 {
        2.0 * tree_sum_f64(
            self.frobenius
                .iter()
                .zip(&self.spectral)
                .map(|(f, s)| f * s.value)
                .collect(),
        )
    }

    /// Same data and partition, every matrix multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let s = T::from_real_f64(c);
        Self::with_norm_mode(
            self.matrices.iter().map(|m| m * s).collect(),
            self.partition.clone(),
            self.norm_mode,
        )
    }

    pub(crate) fn check_pair(&self, u: &Mat<T>, v: &Mat<T>, tol: f64) -> Result<()> {
        let k = self.k();
        if u.shape() != (self.n1(), k) {
            return Err(Error::dims("U", format!("({}, {k})", self.n1()), format!("{:?}", u.shape())));
        }
        if v.shape() != (self.n2(), k) {
            return Err(Error::dims("V", format!("({}, {k})", self.n2()), format!("{:?}", v.shape())));
        }
        let du = orthonormality_defect(u);
        let dv = orthonormality_defect(v);
        if du > tol || dv > tol {
            return Err(Error::Contract(format!(
                "pair is not orthonormal: ‖UᴴU − I‖ = {du:.3e}, ‖VᴴV − I‖ = {dv:.3e}"
            )));
        }
        Ok(())
    }
}

/// A feasible point `(U, V)` on the product of two Stiefel manifolds.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratePair<T: Field> {
    pub u: Mat<T>,
    pub v: Mat<T>,
}

impl<T: Field> IteratePair<T> {
    /// Checks `‖UᴴU − I‖_F ≤ 1e-10`, likewise for `V`, and equal column counts.
    pub fn new(u: Mat<T>, v: Mat<T>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::dims("pair columns", u.ncols(), v.ncols()));
        }
        let du = orthonormality_defect(&u);
        let dv = orthonormality_defect(&v);
        if du > FEASIBILITY_TOL || dv > FEASIBILITY_TOL {
            return Err(Error::Contract(format!(
                "pair is not orthonormal: ‖UᴴU − I‖ = {du:.3e}, ‖VᴴV − I‖ = {dv:.3e}"
            )));
        }
        Ok(Self { u, v })
    }

    pub(crate) fn new_unchecked(u: Mat<T>, v: Mat<T>) -> Self {
        Self { u, v }
    }

    pub fn k(&self) -> usize {
        self.u.ncols()
    }

    /// `sqrt(‖U‖_F² + ‖V‖_F²)`.
    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.v.norm_squared()).sqrt()
    }
}

/// Partial gradients with their symmetric multipliers.
#[derive(Debug, Clone)]
pub struct GradientPair<T: Field> {
    pub h1: Mat<T>,
    pub h2: Mat<T>,
    pub lambda1: Mat<T>,
    pub lambda2: Mat<T>,
}

impl<T: Field> GradientPair<T> {
    /// Attaches `Λ1 = sym(UᴴH1)` and `Λ2 = sym(VᴴH2)`.
    pub fn with_multipliers(h1: Mat<T>, h2: Mat<T>, pair: &IteratePair<T>) -> Self {
        let lambda1 = hermitian_part(&pair.u.ad_mul(&h1)).expect("square");
        let lambda2 = hermitian_part(&pair.v.ad_mul(&h2)).expect("square");
        Self { h1, h2, lambda1, lambda2 }
    }
}

/// Diagonal blocks `U_i^H B_ℓ V_i` for every ℓ.
pub(crate) type DiagBlocks<T> = Vec<Vec<Mat<T>>>;

// Pairwise summation in a fixed tree shape, so results do not depend on how
// rayon scheduled the per-matrix work.
pub(crate) fn tree_sum_f64(mut items: Vec<f64>) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    while items.len() > 1 {
        items = items.chunks(2).map(|c| c.iter().sum()).collect();
    }
    items[0]
}

pub(crate) fn tree_sum_mat<T: Field>(mut items: Vec<Mat<T>>) -> Option<Mat<T>> {
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// `B_ℓ X` for every ℓ.
pub(crate) fn right_products<T: Field>(matrices: &[Mat<T>], x: &Mat<T>) -> Vec<Mat<T>> {
    matrices.par_iter().map(|b| b * x).collect()
}

/// `B_ℓ^H X` for every ℓ.
pub(crate) fn left_products<T: Field>(matrices: &[Mat<T>], x: &Mat<T>) -> Vec<Mat<T>> {
    matrices.par_iter().map(|b| adjoint_times(b, x)).collect()
}

/// `U_i^H (B_ℓ V)_i` from cached `B_ℓ V`.
pub(crate) fn blocks_from_right<T: Field>(u: &Mat<T>, bv: &[Mat<T>], partition: &Partition) -> DiagBlocks<T> {
    bv.iter()
        .map(|bv| {
            partition
                .ranges()
                .map(|r| {
                    let ui = u.columns(r.start, r.len());
                    ui.ad_mul(&bv.columns(r.start, r.len()))
                })
                .collect()
        })
        .collect()
}

/// `U_i^H B_ℓ V_i = ((B_ℓ^H U)_i)^H V_i` from cached `B_ℓ^H U`.
pub(crate) fn blocks_from_left<T: Field>(bhu: &[Mat<T>], v: &Mat<T>, partition: &Partition) -> DiagBlocks<T> {
    bhu.iter()
        .map(|bhu| {
            partition
                .ranges()
                .map(|r| {
                    let wi = bhu.columns(r.start, r.len());
                    wi.ad_mul(&v.columns(r.start, r.len()))
                })
                .collect()
        })
        .collect()
}

pub(crate) fn objective_from_blocks<T: Field>(blocks: &DiagBlocks<T>) -> f64 {
    tree_sum_f64(
        blocks
            .iter()
            .map(|per_l| per_l.iter().map(|m| m.norm_squared()).sum())
            .collect(),
    )
}

/// `H1` from `B_ℓ V` and the diagonal blocks at the same pair.
pub(crate) fn h1_from<T: Field>(bv: &[Mat<T>], blocks: &DiagBlocks<T>, partition: &Partition) -> Mat<T> {
    let two = T::from_real_f64(2.0);
    let terms: Vec<Mat<T>> = bv
        .par_iter()
        .zip(blocks.par_iter())
        .map(|(bv, per_l)| {
            let mut out = Mat::zeros(bv.nrows(), bv.ncols());
            for (r, m) in partition.ranges().zip(per_l) {
                let prod = bv.columns(r.start, r.len()) * m.adjoint();
                out.columns_mut(r.start, r.len()).copy_from(&prod);
            }
            out
        })
        .collect();
    tree_sum_mat(terms).expect("at least one matrix") * two
}

/// `H2` from `B_ℓ^H U` and the diagonal blocks at the same pair.
pub(crate) fn h2_from<T: Field>(bhu: &[Mat<T>], blocks: &DiagBlocks<T>, partition: &Partition) -> Mat<T> {
    let two = T::from_real_f64(2.0);
    let terms: Vec<Mat<T>> = bhu
        .par_iter()
        .zip(blocks.par_iter())
        .map(|(w, per_l)| {
            let mut out = Mat::zeros(w.nrows(), w.ncols());
            for (r, m) in partition.ranges().zip(per_l) {
                let prod = w.columns(r.start, r.len()) * m;
                out.columns_mut(r.start, r.len()).copy_from(&prod);
            }
            out
        })
        .collect();
    tree_sum_mat(terms).expect("at least one matrix") * two
}

/// `‖H − P sym(PᴴH)‖_F`.
pub(crate) fn polar_residual<T: Field>(p: &Mat<T>, h: &Mat<T>) -> f64 {
    let lambda = hermitian_part(&p.ad_mul(h)).expect("square");
    (h - p * lambda).norm()
}

/// `Re tr(PᴴH)`.
pub(crate) fn re_trace_prod<T: Field>(p: &Mat<T>, h: &Mat<T>) -> f64 {
    re_trace(&p.ad_mul(h))
}

/// `f(U, V) = Σ_ℓ Σ_i ‖U_i^H B_ℓ V_i‖_F²`, evaluated blockwise.
pub fn objective<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>) -> Result<f64> {
    problem.check_pair(&pair.u, &pair.v, EVAL_FEASIBILITY_TOL)?;
    let bv = right_products(problem.matrices(), &pair.v);
    Ok(objective_from_blocks(&blocks_from_right(&pair.u, &bv, problem.partition())))
}

/// Partial Euclidean gradients `H1 = ∇_U f`, `H2 = ∇_V f` with multipliers.
pub fn gradients<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>) -> Result<GradientPair<T>> {
    problem.check_pair(&pair.u, &pair.v, EVAL_FEASIBILITY_TOL)?;
    let partition = problem.partition();
    let bv = right_products(problem.matrices(), &pair.v);
    let bhu = left_products(problem.matrices(), &pair.u);
    let blocks = blocks_from_right(&pair.u, &bv, partition);
    let h1 = h1_from(&bv, &blocks, partition);
    let h2 = h2_from(&bhu, &blocks, partition);
    Ok(GradientPair::with_multipliers(h1, h2, pair))
}

/// Which iterates the two ε_KKT terms refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KktPairing {
    /// Both terms at the current pair.
    Jacobi,
    /// The `H1` term from the `U` half-step and the `H2` term from the `V`
    /// half-step, each measured against the iterate it was evaluated at.
    GaussSeidel,
}

/// A gradient together with the orthonormal iterate it is measured against.
#[derive(Debug, Clone, Copy)]
pub struct KktTerm<'a, T: Field> {
    pub basis: &'a Mat<T>,
    pub gradient: &'a Mat<T>,
}

/// ε_KKT for gradients at the current pair (Jacobi pairing).
pub fn kkt_residual<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>, grads: &GradientPair<T>) -> Result<f64> {
    kkt_residual_terms(
        problem,
        KktTerm {
            basis: &pair.u,
            gradient: &grads.h1,
        },
        KktTerm {
            basis: &pair.v,
            gradient: &grads.h2,
        },
    )
}

/// `ε_KKT = (‖H1 − UΛ1‖_F + ‖H2 − VΛ2‖_F) / (2 Σ_ℓ ‖B_ℓ‖_F est₂(B_ℓ))`.
///
/// Under Gauss-Seidel pairing the two terms are evaluated at different pairs;
/// the caller supplies each gradient with the basis it belongs to. A zero
/// denominator means the data is identically zero, and ε_KKT is defined as 0.
pub fn kkt_residual_terms<T: Field>(
    problem: &ProblemSet<T>,
    first: KktTerm<'_, T>,
    second: KktTerm<'_, T>,
) -> Result<f64> {
    if problem.spectral.len() != problem.len() || problem.frobenius.len() != problem.len() {
        return Err(Error::Contract("problem is missing cached norms".into()));
    }
    let k = problem.k();
    if first.gradient.shape() != (problem.n1(), k) || second.gradient.shape() != (problem.n2(), k) {
        return Err(Error::dims(
            "kkt gradients",
            format!("({}, {k}) and ({}, {k})", problem.n1(), problem.n2()),
            format!("{:?} and {:?}", first.gradient.shape(), second.gradient.shape()),
        ));
    }
    let denom = problem.kkt_denominator();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let num = polar_residual(first.basis, first.gradient) + polar_residual(second.basis, second.gradient);
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_normal;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_problem<T: Field>(seed: u64, n1: usize, n2: usize, n: usize, partition: Partition) -> ProblemSet<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats = (0..n).map(|_| random_normal::<T, _>(&mut rng, n1, n2)).collect();
        ProblemSet::new(mats, partition).unwrap()
    }

    fn random_pair<T: Field>(seed: u64, n1: usize, n2: usize, k: usize) -> IteratePair<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_normal::<T, _>(&mut rng, n1, k).qr().q();
        let v = random_normal::<T, _>(&mut rng, n2, k).qr().q();
        IteratePair::new(u, v).unwrap()
    }

    #[test]
    fn partition_basics() {
        let p = Partition::new(vec![2, 3, 1]).unwrap();
        assert_eq!((p.k(), p.t()), (6, 3));
        assert_eq!(p.range(1), 2..5);
        assert!(Partition::new(vec![]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
        assert!(Partition::all_ones(4).unwrap().is_all_ones());
        assert_eq!(p.to_string(), "2,3,1");
    }

    #[test]
    fn block_diag_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Mat<f64> = random_normal(&mut rng, 4, 4);
        assert_eq!(block_diag_part(&a, &Partition::single(4).unwrap()).unwrap(), a);
        let d = block_diag_part(&a, &Partition::all_ones(4).unwrap()).unwrap();
        assert_eq!(d, Mat::from_diagonal(&a.diagonal()));

        let ones = DMatrix::<f64>::from_element(4, 4, 1.0);
        let b = block_diag_part(&ones, &Partition::new(vec![2, 2]).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i < 2) == (j < 2) { 1.0 } else { 0.0 };
                assert_eq!(b[(i, j)], expected);
            }
        }
        assert!(block_diag_part(&ones, &Partition::single(3).unwrap()).is_err());
    }

    #[test]
    fn objective_of_padded_identity() {
        let (n1, n2, k) = (7, 5, 3);
        let b = Mat::<f64>::identity(n1, n2).columns(0, n2).into_owned();
        let mut b = b;
        for i in k..n2 {
            b[(i, i)] = 0.0;
        }
        for partition in [Partition::single(k).unwrap(), Partition::all_ones(k).unwrap(), Partition::new(vec![1, 2]).unwrap()] {
            let problem = ProblemSet::new(vec![b.clone()], partition).unwrap();
            let pair = IteratePair::new(Mat::identity(n1, k), Mat::identity(n2, k)).unwrap();
            assert!((objective(&problem, &pair).unwrap() - k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_problems_and_pairs() {
        let p = Partition::single(2).unwrap();
        assert!(ProblemSet::<f64>::new(vec![], p.clone()).is_err());
        assert!(ProblemSet::new(vec![Mat::<f64>::zeros(3, 3), Mat::zeros(3, 2)], p.clone()).is_err());
        let mut bad = Mat::<f64>::zeros(3, 3);
        bad[(1, 2)] = f64::NAN;
        assert!(matches!(
            ProblemSet::new(vec![bad], p.clone()),
            Err(Error::NonFinite { index: 0, row: 1, col: 2 })
        ));
        assert!(ProblemSet::new(vec![Mat::<f64>::zeros(3, 1)], p.clone()).is_err());

        let problem = random_problem::<f64>(2, 5, 4, 2, p);
        let skewed = IteratePair::new_unchecked(Mat::identity(5, 2) * 2.0, Mat::identity(4, 2));
        assert!(matches!(objective(&problem, &skewed), Err(Error::Contract(_))));
        assert!(IteratePair::new(Mat::<f64>::identity(5, 2) * 2.0, Mat::identity(4, 2)).is_err());
    }

    #[test]
    fn gradients_are_two_homogeneous() {
        let problem = random_problem::<Complex64>(3, 9, 8, 3, Partition::new(vec![2, 1]).unwrap());
        let pair = random_pair::<Complex64>(4, 9, 8, 3);
        let g = gradients(&problem, &pair).unwrap();
        let g3 = gradients(&problem.scaled(3.0).unwrap(), &pair).unwrap();
        assert!((g3.h1 - g.h1 * Complex64::new(9.0, 0.0)).norm() < 1e-11 * g3.h2.norm());
        assert!((&g3.h2 - &g.h2 * Complex64::new(9.0, 0.0)).norm() < 1e-11 * g3.h2.norm());
    }

    #[test]
    fn gradient_traces_agree_and_equal_twice_objective() {
        // Both traces equal the same quadratic form; that form is 2 f.
        for seed in 0..5 {
            let problem = random_problem::<Complex64>(seed, 12, 10, 4, Partition::new(vec![2, 2, 1]).unwrap());
            let pair = random_pair::<Complex64>(100 + seed, 12, 10, 5);
            let g = gradients(&problem, &pair).unwrap();
            let t1 = re_trace_prod(&pair.u, &g.h1);
            let t2 = re_trace_prod(&pair.v, &g.h2);
            assert!((t1 - t2).abs() <= 1e-10 * t1.abs());
            let f = objective(&problem, &pair).unwrap();
            assert!((t1 - 2.0 * f).abs() <= 1e-10 * f);
        }
    }

    #[test]
    fn multipliers_are_hermitian() {
        let problem = random_problem::<Complex64>(9, 8, 6, 2, Partition::all_ones(3).unwrap());
        let pair = random_pair::<Complex64>(10, 8, 6, 3);
        let g = gradients(&problem, &pair).unwrap();
        assert!((&g.lambda1 - g.lambda1.adjoint()).norm() < 1e-12);
        assert!((&g.lambda2 - g.lambda2.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn kkt_is_scale_invariant_and_nonnegative() {
        let problem = random_problem::<f64>(5, 10, 8, 3, Partition::new(vec![2, 2]).unwrap());
        let pair = random_pair::<f64>(6, 10, 8, 4);
        let e = kkt_residual(&problem, &pair, &gradients(&problem, &pair).unwrap()).unwrap();
        let scaled = problem.scaled(4.0).unwrap();
        let e4 = kkt_residual(&scaled, &pair, &gradients(&scaled, &pair).unwrap()).unwrap();
        assert!(e > 0.0);
        assert!((e - e4).abs() < 1e-12 * e);
    }

    #[test]
    fn kkt_zero_problem_is_zero() {
        let problem = ProblemSet::new(vec![Mat::<f64>::zeros(5, 4); 2], Partition::all_ones(2).unwrap()).unwrap();
        let pair = IteratePair::new(Mat::identity(5, 2), Mat::identity(4, 2)).unwrap();
        let g = gradients(&problem, &pair).unwrap();
        assert_eq!(kkt_residual(&problem, &pair, &g).unwrap(), 0.0);
        assert_eq!(objective(&problem, &pair).unwrap(), 0.0);
    }

    #[test]
    fn tree_sums() {
        assert_eq!(tree_sum_f64(vec![]), 0.0);
        assert_eq!(tree_sum_f64(vec![1.0, 2.0, 3.0, 4.0, 5.0]), 15.0);
        let m = tree_sum_mat(vec![Mat::<f64>::identity(2, 2); 3]).unwrap();
        assert_eq!(m, Mat::identity(2, 2) * 3.0);
    }
}

//! Locally optimal subspace acceleration of the alternating iteration.
//!
//! Each outer step searches `R([U, R1, U_prev]) × R([V, R2, V_prev])` by running
//! the alternating iteration on the projected problem `S1ᴴ B_ℓ S2` and lifting
//! the result back.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ascf::{ascf_solve, IterRecord, SolverConfig, SolverReport, StepGeometry, SubspaceInfo, Updating};
use crate::error::{Error, Result};
use crate::field::{leading_identity, Field, Mat};
use crate::kernels::{hermitian_part, orthonormalize_against, sin_theta_gap_squared, DROP_TOL, RANK_TOL};
use crate::problem::{
    blocks_from_right, gradients, h1_from, h2_from, left_products, objective_from_blocks, polar_residual,
    re_trace_prod, right_products, IteratePair, ProblemSet, FEASIBILITY_TOL,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocgConfig {
    /// Outer tolerance, iteration cap and updating scheme.
    pub outer: SolverConfig,
    /// Updating scheme of the inner solve; `None` follows the outer scheme.
    pub inner_updating: Option<Updating>,
    pub inner_max_iter: usize,
    /// Inner tolerance as a fraction of the current outer ε_KKT.
    pub inner_tol_fraction: f64,
}

impl Default for LocgConfig {
    fn default() -> Self {
        Self {
            outer: SolverConfig::default(),
            inner_updating: None,
            inner_max_iter: 200,
            inner_tol_fraction: 0.125,
        }
    }
}

impl LocgConfig {
    pub fn new(updating: Updating) -> Self {
        Self {
            outer: SolverConfig::new(updating),
            ..Self::default()
        }
    }

    pub fn inner_updating(&self) -> Updating {
        self.inner_updating.unwrap_or(self.outer.updating)
    }

    /// `max(fraction·ε, 0.9·tol)`.
    pub fn inner_tol(&self, outer_kkt: f64) -> f64 {
        (self.inner_tol_fraction * outer_kkt).max(0.9 * self.outer.tol)
    }

    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        if self.inner_max_iter == 0 {
            return Err(Error::Input("inner_max_iter must be at least 1".into()));
        }
        if !(self.inner_tol_fraction > 0.0 && self.inner_tol_fraction < 1.0) {
            return Err(Error::Input(format!(
                "inner_tol_fraction must lie in (0, 1), got {}",
                self.inner_tol_fraction
            )));
        }
        Ok(())
    }
}

/// The projected problem of one outer step.
#[derive(Debug, Clone)]
pub struct ReducedProblem<T: Field> {
    pub s1: Mat<T>,
    pub s2: Mat<T>,
    /// `S1ᴴ B_ℓ S2` with the outer partition.
    pub reduced_set: ProblemSet<T>,
    pub z1_init: Mat<T>,
    pub z2_init: Mat<T>,
    /// `B_ℓ S2`, kept for lifting.
    pub(crate) bs2: Vec<Mat<T>>,
}

impl<T: Field> ReducedProblem<T> {
    pub fn m1(&self) -> usize {
        self.s1.ncols()
    }

    pub fn m2(&self) -> usize {
        self.s2.ncols()
    }

    pub fn init_pair(&self) -> IteratePair<T> {
        IteratePair::new_unchecked(self.z1_init.clone(), self.z2_init.clone())
    }
}

fn residual_of<T: Field>(p: &Mat<T>, h: &Mat<T>) -> Result<Mat<T>> {
    Ok(h - p * hermitian_part(&p.ad_mul(h))?)
}

/// `R1 = H1 − U sym(UᴴH1)` and `R2 = H2 − V sym(VᴴH2)` at `pair`.
pub fn residual_pair<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>) -> Result<(Mat<T>, Mat<T>)> {
    let g = gradients(problem, pair)?;
    Ok((residual_of(&pair.u, &g.h1)?, residual_of(&pair.v, &g.h2)?))
}

fn extend_basis<T: Field>(x: &Mat<T>, r: &Mat<T>, prev: Option<&Mat<T>>) -> Result<Mat<T>> {
    let cand = match prev {
        Some(p) => {
            if p.shape() != x.shape() {
                return Err(Error::dims("previous iterate", format!("{:?}", x.shape()), format!("{:?}", p.shape())));
            }
            let mut c = Mat::<T>::zeros(x.nrows(), 2 * x.ncols());
            c.columns_mut(0, x.ncols()).copy_from(r);
            c.columns_mut(x.ncols(), x.ncols()).copy_from(p);
            c
        }
        None => r.clone(),
    };
    if r.shape() != x.shape() {
        return Err(Error::dims("residual block", format!("{:?}", x.shape()), format!("{:?}", r.shape())));
    }
    let extra = orthonormalize_against(x, &cand)?;
    let k = x.ncols();
    let mut s = Mat::<T>::zeros(x.nrows(), k + extra.ncols());
    s.columns_mut(0, k).copy_from(x);
    s.columns_mut(k, extra.ncols()).copy_from(&extra);
    Ok(s)
}

/// `S1 = [U, orth(U; [R1, U_prev])]`, `S2` likewise; without a previous pair
/// only the residual is appended. The leading `k` columns are copied verbatim.
pub fn build_subspaces<T: Field>(
    pair_now: &IteratePair<T>,
    residuals: (&Mat<T>, &Mat<T>),
    pair_prev: Option<&IteratePair<T>>,
) -> Result<(Mat<T>, Mat<T>)> {
    let s1 = extend_basis(&pair_now.u, residuals.0, pair_prev.map(|p| &p.u))?;
    let s2 = extend_basis(&pair_now.v, residuals.1, pair_prev.map(|p| &p.v))?;
    Ok((s1, s2))
}

/// `B_ℓ S2 = [B_ℓ V | B_ℓ S2_rest]` from the cached `B_ℓ V`.
fn images_from_bv<T: Field>(problem: &ProblemSet<T>, s2: &Mat<T>, bv: &[Mat<T>]) -> Vec<Mat<T>> {
    let k = problem.k();
    let (n1, m2) = (problem.n1(), s2.ncols());
    let rest = s2.columns(k, m2 - k).into_owned();
    problem
        .matrices()
        .par_iter()
        .zip(bv.par_iter())
        .map(|(b, bv)| {
            let mut out = Mat::<T>::zeros(n1, m2);
            out.columns_mut(0, k).copy_from(bv);
            if m2 > k {
                out.columns_mut(k, m2 - k).copy_from(&(b * &rest));
            }
            out
        })
        .collect()
}

fn assemble<T: Field>(problem: &ProblemSet<T>, s1: Mat<T>, s2: Mat<T>, bs2: Vec<Mat<T>>) -> Result<ReducedProblem<T>> {
    let k = problem.k();
    let (n1, n2) = (problem.n1(), problem.n2());
    if s1.nrows() != n1 || s2.nrows() != n2 || s1.ncols() < k || s2.ncols() < k {
        return Err(Error::dims(
            "subspace bases",
            format!("{n1}×(≥{k}) and {n2}×(≥{k})"),
            format!("{:?} and {:?}", s1.shape(), s2.shape()),
        ));
    }
    let s1h = s1.adjoint();
    let reduced: Vec<Mat<T>> = bs2.par_iter().map(|x| &s1h * x).collect();
    let reduced_set = ProblemSet::new(reduced, problem.partition().clone())?;
    let z1_init = leading_identity(s1.ncols(), k);
    let z2_init = leading_identity(s2.ncols(), k);
    Ok(ReducedProblem {
        s1,
        s2,
        reduced_set,
        z1_init,
        z2_init,
        bs2,
    })
}

/// Below this fraction of its original norm a tracked column gets its
/// `B_ℓ`-images recomputed instead of trusting the updated ones.
const RECOMPUTE_RATIO: f64 = 1e-3;

/// [`orthonormalize_against`] that also returns `B_ℓ`-images of the new columns.
///
/// Every column is tracked as a coefficient vector over `[base, extra]`, so the
/// images are one product with the known images of `base` and `extra`. A
/// column that lost most of its norm to the projections has its images
/// recomputed from scratch.
fn orthonormalize_tracked<T: Field>(
    matrices: &[Mat<T>],
    base: &Mat<T>,
    base_img: &[Mat<T>],
    extra: &Mat<T>,
    extra_img: &[Mat<T>],
) -> (Mat<T>, Vec<Mat<T>>) {
    let n = base.nrows();
    let n1 = matrices[0].nrows();
    let (kb, m) = (base.ncols(), extra.ncols());
    let empty = || (Mat::zeros(n, 0), vec![Mat::zeros(n1, 0); matrices.len()]);
    let scale = extra.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if m == 0 || scale == 0.0 {
        return empty();
    }
    let floor = f64::EPSILON * scale;

    // work = [base, extra] · coef
    let mut work = extra.clone();
    let mut coef = Mat::<T>::zeros(kb + m, m);
    coef.view_mut((kb, 0), (m, m)).fill_with_identity();
    for _ in 0..2 {
        let c = base.ad_mul(&work);
        work -= base * &c;
        let mut top = coef.rows_mut(0, kb);
        top -= &c;
    }

    let mut kept: Vec<Mat<T>> = Vec::with_capacity(m);
    let mut kept_coef: Vec<Mat<T>> = Vec::with_capacity(m);
    let mut fresh: Vec<bool> = Vec::with_capacity(m);
    for j in 0..m {
        let reference = extra.column(j).norm().max(floor);
        let mut c = work.columns(j, 1).into_owned();
        let mut cc = coef.columns(j, 1).into_owned();
        for _ in 0..2 {
            for (b, bc) in kept.iter().zip(&kept_coef) {
                let x = b.ad_mul(&c);
                c -= b * &x;
                cc -= bc * &x;
            }
            let x = base.ad_mul(&c);
            c -= base * &x;
            let mut top = cc.rows_mut(0, kb);
            top -= &x;
        }
        let norm = c.norm();
        if norm > DROP_TOL * reference {
            c.unscale_mut(norm);
            cc.unscale_mut(norm);
            fresh.push(norm < RECOMPUTE_RATIO * reference);
            kept.push(c);
            kept_coef.push(cc);
        }
    }
    if kept.is_empty() {
        return empty();
    }
    let q = hcat(&kept.iter().collect::<Vec<_>>());
    let cmat = hcat(&kept_coef.iter().collect::<Vec<_>>());
    let ctop = cmat.rows(0, kb).into_owned();
    let cbot = cmat.rows(kb, m).into_owned();
    let mut q_img: Vec<Mat<T>> = base_img
        .par_iter()
        .zip(extra_img.par_iter())
        .map(|(bi, ei)| bi * &ctop + ei * &cbot)
        .collect();
    for (j, _) in fresh.iter().enumerate().filter(|(_, &f)| f) {
        let col = q.columns(j, 1).into_owned();
        for (img, b) in q_img.iter_mut().zip(matrices) {
            img.columns_mut(j, 1).copy_from(&(b * &col));
        }
    }
    (q, q_img)
}

/// `‖H‖_tr` and `σ_min(H)` of a tall matrix from the triangular factor of a thin QR.
fn tall_singular_summary<T: Field>(h: &Mat<T>) -> (f64, f64) {
    let r = h.clone().qr().r();
    let s = r.singular_values();
    (s.iter().sum(), s.iter().copied().fold(f64::INFINITY, f64::min))
}

fn hcat<T: Field>(parts: &[&Mat<T>]) -> Mat<T> {
    let rows = parts[0].nrows();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Mat::<T>::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.ncols()).copy_from(*p);
        at += p.ncols();
    }
    out
}

fn hcat_images<T: Field>(parts: &[&[Mat<T>]]) -> Vec<Mat<T>> {
    (0..parts[0].len())
        .map(|l| hcat(&parts.iter().map(|p| &p[l]).collect::<Vec<_>>()))
        .collect()
}

/// Search direction carried between outer steps: `P = S_rest Z_rest` on both
/// sides, with `B_ℓ P2` already known from the cached `B_ℓ S2`.
struct Direction<T: Field> {
    p1: Mat<T>,
    p2: Mat<T>,
    bp2: Vec<Mat<T>>,
}

/// Bases for one outer step. With a direction the spans equal those of
/// [`build_subspaces`] with the previous pair, since `R([U, P1]) = R([U, U_prev])`
/// whenever the leading block of the last inner solution is invertible.
fn build_step_bases<T: Field>(
    problem: &ProblemSet<T>,
    now: &IteratePair<T>,
    bv: &[Mat<T>],
    r1: &Mat<T>,
    r2: &Mat<T>,
    dir: Option<&Direction<T>>,
) -> Result<(Mat<T>, Mat<T>, Vec<Mat<T>>)> {
    let mats = problem.matrices();
    let q1 = orthonormalize_against(&now.u, r1)?;
    let q2 = orthonormalize_against(&now.v, r2)?;
    let bq2 = right_products(mats, &q2);
    let base1 = hcat(&[&now.u, &q1]);
    let base2 = hcat(&[&now.v, &q2]);
    let base2_img = hcat_images(&[bv, &bq2]);
    match dir {
        None => Ok((base1, base2, base2_img)),
        Some(d) => {
            let p1 = orthonormalize_against(&base1, &d.p1)?;
            let (p2, bp2) = orthonormalize_tracked(mats, &base2, &base2_img, &d.p2, &d.bp2);
            Ok((hcat(&[&base1, &p1]), hcat(&[&base2, &p2]), hcat_images(&[&base2_img, &bp2])))
        }
    }
}

/// Projects every `B_ℓ` onto the bases. The first `k` columns of the bases
/// must be `pair_now.u` and `pair_now.v`.
pub fn reduce_problem<T: Field>(
    problem: &ProblemSet<T>,
    s1: Mat<T>,
    s2: Mat<T>,
    pair_now: &IteratePair<T>,
) -> Result<ReducedProblem<T>> {
    let k = problem.k();
    if s1.ncols() < k || s2.ncols() < k || s1.columns(0, k) != pair_now.u || s2.columns(0, k) != pair_now.v {
        return Err(Error::Contract(
            "leading columns of the bases must equal the current iterate".into(),
        ));
    }
    let bv = right_products(problem.matrices(), &pair_now.v);
    let bs2 = images_from_bv(problem, &s2, &bv);
    assemble(problem, s1, s2, bs2)
}

fn relative_projection_residual<T: Field>(p: &Mat<T>, h: &Mat<T>) -> f64 {
    let hn = h.norm_squared();
    if hn == 0.0 {
        return 0.0;
    }
    (h - p * p.ad_mul(h)).norm_squared() / hn
}

/// Outer loop with an inner alternating solve on each projected problem.
///
/// The stopping test uses both gradients at the current pair. An inner solve
/// that hits its own iteration cap is accepted as is.
pub fn locg_solve<T: Field>(problem: &ProblemSet<T>, config: &LocgConfig, init: IteratePair<T>) -> Result<SolverReport<T>> {
    config.validate()?;
    problem.check_pair(&init.u, &init.v, FEASIBILITY_TOL)?;
    let start = Instant::now();
    let mats = problem.matrices();
    let part = problem.partition();
    let denom = problem.kkt_denominator();
    let k = problem.k();

    let IteratePair { mut u, mut v } = init;
    let mut bv = right_products(mats, &v);
    let mut blocks = blocks_from_right(&u, &bv, part);
    let mut f = objective_from_blocks(&blocks);
    let initial_objective = f;

    let finish = |u, v, converged, f, kkt, initial_kkt, trace: Vec<IterRecord>| SolverReport {
        pair: IteratePair::new_unchecked(u, v),
        converged,
        iterations: trace.len(),
        updating: config.outer.updating,
        initial_objective,
        initial_kkt,
        final_objective: f,
        final_kkt: kkt,
        trace,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };

    if denom == 0.0 {
        return Ok(finish(u, v, true, f, 0.0, 0.0, Vec::new()));
    }

    let mut h1 = h1_from(&bv, &blocks, part);
    let mut h2 = h2_from(&left_products(mats, &u), &blocks, part);
    let mut kkt = (polar_residual(&u, &h1) + polar_residual(&v, &h2)) / denom;
    let initial_kkt = kkt;
    let mut dir: Option<Direction<T>> = None;
    let mut trace = Vec::new();

    let mut inner_config = SolverConfig::new(config.inner_updating());
    inner_config.max_iter = config.inner_max_iter;
    inner_config.record_diagnostics = false;

    while kkt > config.outer.tol && trace.len() < config.outer.max_iter {
        let now = IteratePair::new_unchecked(u, v);
        let r1 = residual_of(&now.u, &h1)?;
        let r2 = residual_of(&now.v, &h2)?;
        let (s1, s2, bs2) = build_step_bases(problem, &now, &bv, &r1, &r2, dir.as_ref())?;
        let reduced = assemble(problem, s1, s2, bs2)?;

        let (tn1, smin1) = tall_singular_summary(&h1);
        let (tn2, smin2) = tall_singular_summary(&h2);
        let eta_half = tn1 - re_trace_prod(&now.u, &h1);
        let eta_full = tn2 - re_trace_prod(&now.v, &h2);

        inner_config.tol = config.inner_tol(kkt);
        let inner = ascf_solve(&reduced.reduced_set, &inner_config, reduced.init_pair())?;
        let z1 = &inner.pair.u;
        let z2 = &inner.pair.v;

        let u_new = &reduced.s1 * z1;
        let v_new = &reduced.s2 * z2;
        let bt = reduced.reduced_set.matrices();

        // f(U⁺, V) from the first k columns of the projected matrices.
        let bt_v: Vec<Mat<T>> = bt.iter().map(|b| b.columns(0, k).into_owned()).collect();
        let objective_half = objective_from_blocks(&blocks_from_right(z1, &bt_v, part));

        let bt_z2: Vec<Mat<T>> = bt.par_iter().map(|b| b * z2).collect();
        blocks = blocks_from_right(z1, &bt_z2, part);
        bv = reduced.bs2.par_iter().map(|x| x * z2).collect();
        f = objective_from_blocks(&blocks);

        let geom = if config.outer.record_diagnostics {
            Some(StepGeometry {
                sin_theta_u: sin_theta_gap_squared(&u_new, &now.u)?.sqrt(),
                sin_theta_v: sin_theta_gap_squared(&v_new, &now.v)?.sqrt(),
                projection_residual_u: relative_projection_residual(&now.u, &h1),
                projection_residual_v: relative_projection_residual(&now.v, &h2),
            })
        } else {
            None
        };

        h1 = h1_from(&bv, &blocks, part);
        h2 = h2_from(&left_products(mats, &u_new), &blocks, part);
        kkt = (polar_residual(&u_new, &h1) + polar_residual(&v_new, &h2)) / denom;

        trace.push(IterRecord {
            objective: f,
            kkt,
            eta_half,
            eta_full,
            sigma_min_h1: smin1,
            sigma_min_h2: smin2,
            rank_deficient: smin1 <= RANK_TOL * tn1 || smin2 <= RANK_TOL * tn2,
            objective_half,
            objective_other: None,
            geometry: geom,
            subspace: Some(SubspaceInfo {
                dim_u: reduced.m1(),
                dim_v: reduced.m2(),
                inner_iterations: inner.iterations,
                inner_converged: inner.converged,
                inner_tol: inner_config.tol,
            }),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });

        let (m1, m2) = (reduced.m1(), reduced.m2());
        let z1_rest = z1.rows(k, m1 - k).into_owned();
        let z2_rest = z2.rows(k, m2 - k).into_owned();
        let rest2 = |x: &Mat<T>| x.columns(k, m2 - k) * &z2_rest;
        dir = Some(Direction {
            p1: reduced.s1.columns(k, m1 - k) * &z1_rest,
            p2: rest2(&reduced.s2),
            bp2: reduced.bs2.par_iter().map(rest2).collect(),
        });
        u = u_new;
        v = v_new;
    }

    let converged = kkt <= config.outer.tol;
    Ok(finish(u, v, converged, f, kkt, initial_kkt, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ascf::{default_init, InitMode};
    use crate::field::{orthonormality_defect, random_normal};
    use crate::problem::{objective, Partition};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_problem<T: Field>(seed: u64, n1: usize, n2: usize, n: usize, partition: Partition) -> ProblemSet<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats = (0..n).map(|_| random_normal::<T, _>(&mut rng, n1, n2)).collect();
        ProblemSet::new(mats, partition).unwrap()
    }

    #[test]
    fn residuals_have_skew_projection() {
        let p = random_problem::<Complex64>(1, 11, 9, 3, Partition::new(vec![2, 1]).unwrap());
        let pair = default_init(&p, InitMode::Seeded(3));
        let (r1, r2) = residual_pair(&p, &pair).unwrap();
        let a = pair.u.adjoint() * &r1;
        let b = pair.v.adjoint() * &r2;
        assert!((&a + a.adjoint()).norm() <= 1e-12);
        assert!((&b + b.adjoint()).norm() <= 1e-12);
    }

    #[test]
    fn subspace_dimensions() {
        let p = random_problem::<f64>(2, 20, 18, 2, Partition::all_ones(3).unwrap());
        let pair = default_init(&p, InitMode::Seeded(1));
        let prev = default_init(&p, InitMode::Seeded(2));
        let (r1, r2) = residual_pair(&p, &pair).unwrap();
        let (s1, s2) = build_subspaces(&pair, (&r1, &r2), None).unwrap();
        assert_eq!((s1.ncols(), s2.ncols()), (6, 6));
        let (s1, s2) = build_subspaces(&pair, (&r1, &r2), Some(&prev)).unwrap();
        assert_eq!((s1.ncols(), s2.ncols()), (9, 9));
        assert!(orthonormality_defect(&s1) <= 1e-12);
        assert!(orthonormality_defect(&s2) <= 1e-12);
        assert_eq!(s1.columns(0, 3), pair.u);
        assert_eq!(s2.columns(0, 3), pair.v);

        let zero = (Mat::zeros(20, 3), Mat::zeros(18, 3));
        let (s1, s2) = build_subspaces(&pair, (&zero.0, &zero.1), None).unwrap();
        assert_eq!((s1.ncols(), s2.ncols()), (3, 3));
    }

    #[test]
    fn reduced_problem_keeps_objective() {
        let p = random_problem::<Complex64>(3, 15, 13, 4, Partition::new(vec![1, 2]).unwrap());
        let pair = default_init(&p, InitMode::Seeded(5));
        let (r1, r2) = residual_pair(&p, &pair).unwrap();
        let (s1, s2) = build_subspaces(&pair, (&r1, &r2), None).unwrap();
        let red = reduce_problem(&p, s1.clone(), s2.clone(), &pair).unwrap();
        let f = objective(&p, &pair).unwrap();
        let fr = objective(&red.reduced_set, &red.init_pair()).unwrap();
        assert!((f - fr).abs() <= 1e-12 * f);
        let mut wrong = s1.clone();
        wrong[(0, 0)] += 1e-3;
        assert!(reduce_problem(&p, wrong, s2, &pair).is_err());
    }

    #[test]
    fn solve_is_monotone_and_feasible() {
        let p = random_problem::<f64>(4, 30, 27, 5, Partition::new(vec![2, 2]).unwrap());
        let init = default_init(&p, InitMode::Seeded(6));
        let mut cfg = LocgConfig::default();
        cfg.outer.max_iter = 100;
        let r = locg_solve(&p, &cfg, init).unwrap();
        let mut last = r.initial_objective;
        for rec in &r.trace {
            assert!(rec.objective >= last - 1e-12 * (1.0 + last.abs()));
            last = rec.objective;
        }
        assert!(orthonormality_defect(&r.pair.u) <= 1e-10);
        assert!(orthonormality_defect(&r.pair.v) <= 1e-10);
        let f = objective(&p, &r.pair).unwrap();
        assert!((f - r.final_objective).abs() <= 1e-10 * f);
    }

    #[test]
    fn cached_kkt_matches_fresh_evaluation() {
        let p = random_problem::<Complex64>(5, 16, 14, 3, Partition::all_ones(3).unwrap());
        let mut cfg = LocgConfig::default();
        cfg.outer.max_iter = 4;
        cfg.outer.tol = 1e-14;
        let r = locg_solve(&p, &cfg, default_init(&p, InitMode::Seeded(1))).unwrap();
        let g = gradients(&p, &r.pair).unwrap();
        let fresh = crate::problem::kkt_residual(&p, &r.pair, &g).unwrap();
        assert!((fresh - r.final_kkt).abs() <= 1e-9 * fresh.max(1e-300) + 1e-15);
    }

    #[test]
    fn stationary_start_returns_without_iterating() {
        let mut b = Mat::<f64>::zeros(6, 5);
        for i in 0..5 {
            b[(i, i)] = 5.0 - i as f64;
        }
        let p = ProblemSet::new(vec![b], Partition::all_ones(2).unwrap()).unwrap();
        let init = default_init(&p, InitMode::Identity);
        let r = locg_solve(&p, &LocgConfig::default(), init).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn inner_tolerance_floor() {
        let cfg = LocgConfig::default();
        assert_eq!(cfg.inner_tol(1.0), 0.125);
        assert_eq!(cfg.inner_tol(1e-9), 0.9 * 1e-8);
    }
}

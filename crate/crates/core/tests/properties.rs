mod common;

use common::*;
use num_complex::Complex64;
use pjbsvd::ascf::{ascf_solve, ascf_step, default_init, InitMode, SolverConfig, Updating};
use pjbsvd::field::{orthonormality_defect, random_normal};
use pjbsvd::generator::{generate_problem, objective_upper_bound, GeneratorConfig};
use pjbsvd::io::{decode_matrix, encode_matrix};
use pjbsvd::kernels::{orthonormalize_against, polar_orthonormal_factor, sin_theta_gap, trace_norm};
use pjbsvd::locg::{locg_solve, LocgConfig};
use pjbsvd::oracle::bruteforce_gradients;
use pjbsvd::{block_diag_part, gradients, kkt_residual, objective, Field, FieldKind, IteratePair, Mat, Partition};
use proptest::prelude::*;
use std::path::Path;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

prop_compose! {
    fn shape()(k in 1usize..4, extra2 in 0usize..5, extra1 in 0usize..4, n in 1usize..4,
               cuts in proptest::collection::vec(any::<bool>(), 3), seed in any::<u64>())
        -> (usize, usize, usize, Partition, u64) {
        let n2 = k + extra2;
        (n2 + extra1, n2, n, partition_from_cuts(k, &cuts), seed)
    }
}

fn complex_unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn polar_factor_beats_sampled_orthonormal_matrices(n in 2usize..6, k in 1usize..3, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let mut r = rng(seed);
        let a: Mat<Complex64> = random_normal(&mut r, n, k);
        let best = polar_orthonormal_factor(&a).unwrap();
        let value = (best.factor.adjoint() * &a).trace().re;
        prop_assert!((value - best.trace_norm()).abs() <= 1e-12 * (1.0 + value));
        for _ in 0..200 {
            let p: Mat<Complex64> = random_orthonormal(&mut r, n, k);
            prop_assert!((p.adjoint() * &a).trace().re <= value + 1e-12 * (1.0 + value));
        }
    }

    #[test]
    fn trace_norm_is_absolutely_homogeneous(n in 1usize..7, m in 1usize..5, c in -50.0f64..50.0, seed in any::<u64>()) {
        let a: Mat<f64> = random_normal(&mut rng(seed), n, m);
        let lhs = trace_norm(&(&a * c));
        let rhs = c.abs() * trace_norm(&a);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn orthonormalize_against_is_idempotent(n in 4usize..12, kb in 0usize..3, ke in 1usize..4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let base: Mat<Complex64> = random_orthonormal(&mut r, n, kb.min(n - 1));
        let extra: Mat<Complex64> = random_normal(&mut r, n, ke);
        let q = orthonormalize_against(&base, &extra).unwrap();
        let again = orthonormalize_against(&base, &q).unwrap();
        prop_assert_eq!(q.shape(), again.shape());
        prop_assert!((&q - &again).norm() <= 1e-12);
        if base.ncols() > 0 && q.ncols() > 0 {
            prop_assert!((base.adjoint() * &q).norm() <= 1e-12);
        }
    }

    #[test]
    fn sin_theta_is_symmetric_and_unitarily_invariant(n in 3usize..10, k in 1usize..3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x: Mat<Complex64> = random_orthonormal(&mut r, n, k);
        let y: Mat<Complex64> = random_orthonormal(&mut r, n, k);
        let w: Mat<Complex64> = random_orthonormal(&mut r, k, k);
        let g = sin_theta_gap(&x, &y).unwrap();
        prop_assert!((g - sin_theta_gap(&y, &x).unwrap()).abs() <= 1e-12);
        prop_assert!((g - sin_theta_gap(&(&x * &w), &y).unwrap()).abs() <= 1e-12);
        prop_assert!((g - sin_theta_gap(&x, &(&y * &w)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn objective_is_nonnegative_and_block_unitary_invariant((n1, n2, n, part, seed) in shape()) {
        let p = random_problem::<Complex64>(seed, n1, n2, n, part.clone());
        let pair = random_pair::<Complex64>(seed ^ 1, n1, n2, part.k());
        let f = objective(&p, &pair).unwrap();
        prop_assert!(f >= 0.0);
        // Rotate each block of U and V by its own unitary.
        let mut r = rng(seed ^ 2);
        let mut w1 = Mat::<Complex64>::zeros(part.k(), part.k());
        let mut w2 = Mat::<Complex64>::zeros(part.k(), part.k());
        for range in part.ranges() {
            let m = range.len();
            w1.view_mut((range.start, range.start), (m, m)).copy_from(&random_orthonormal::<Complex64>(&mut r, m, m));
            w2.view_mut((range.start, range.start), (m, m)).copy_from(&random_orthonormal::<Complex64>(&mut r, m, m));
        }
        let rotated = IteratePair::new(&pair.u * w1, &pair.v * w2).unwrap();
        let g = objective(&p, &rotated).unwrap();
        prop_assert!((f - g).abs() <= 1e-12 * (1.0 + f));
        prop_assert!(f <= objective_upper_bound(&p) * (1.0 + 1e-12));
    }

    #[test]
    fn gradient_traces_agree((n1, n2, n, part, seed) in shape()) {
        let p = random_problem::<f64>(seed, n1, n2, n, part.clone());
        let pair = random_pair::<f64>(seed ^ 3, n1, n2, part.k());
        let g = gradients(&p, &pair).unwrap();
        let t1 = (pair.u.transpose() * &g.h1).trace();
        let t2 = (pair.v.transpose() * &g.h2).trace();
        prop_assert!((t1 - t2).abs() <= 1e-12 * (1.0 + t1.abs()));
    }

    #[test]
    fn gradients_scale_with_data_and_iterates((n1, n2, n, part, seed) in shape(), c in 0.1f64..10.0, theta in 0.0f64..6.28) {
        let p = random_problem::<Complex64>(seed, n1, n2, n, part.clone());
        let pair = random_pair::<Complex64>(seed ^ 4, n1, n2, part.k());
        let g = gradients(&p, &pair).unwrap();
        let gs = gradients(&p.scaled(c).unwrap(), &pair).unwrap();
        prop_assert!((&gs.h1 - &g.h1 * Complex64::from(c * c)).norm() <= 1e-12 * c * c * (1.0 + g.h1.norm()));
        // A unit phase on U keeps it orthonormal: H1 picks up the phase, H2 does not.
        let z = complex_unit(theta);
        let gu = gradients(&p, &IteratePair::new(&pair.u * z, pair.v.clone()).unwrap()).unwrap();
        prop_assert!((&gu.h1 - &g.h1 * z).norm() <= 1e-12 * (1.0 + g.h1.norm()));
        prop_assert!((&gu.h2 - &g.h2).norm() <= 1e-12 * (1.0 + g.h2.norm()));
        // General scalings through the unconstrained reference formulas.
        let go = bruteforce_gradients(&p, &IteratePair { u: &pair.u * Complex64::from(c), v: pair.v.clone() });
        if let Ok(go) = go {
            prop_assert!((&go.h1 - &g.h1 * Complex64::from(c)).norm() <= 1e-11 * c * (1.0 + g.h1.norm()));
        }
    }

    #[test]
    fn block_diag_part_is_a_projection(k in 1usize..6, cuts in proptest::collection::vec(any::<bool>(), 5), seed in any::<u64>()) {
        let part = partition_from_cuts(k, &cuts);
        let a: Mat<Complex64> = random_normal(&mut rng(seed), k, k);
        let d = block_diag_part(&a, &part).unwrap();
        prop_assert_eq!(&block_diag_part(&d, &part).unwrap(), &d);
        prop_assert!(d.norm() <= a.norm());
    }
}

#[test]
fn objective_vanishes_exactly_when_blocks_do() {
    let mut b = Mat::<f64>::zeros(6, 5);
    b[(4, 0)] = 3.0; // row outside range(U)
    let p = pjbsvd::ProblemSet::new(vec![b], Partition::new(vec![1, 1]).unwrap()).unwrap();
    let pair = IteratePair::new(Mat::identity(6, 2), Mat::identity(5, 2)).unwrap();
    assert_eq!(objective(&p, &pair).unwrap(), 0.0);
    let mut b2 = Mat::<f64>::zeros(6, 5);
    b2[(0, 1)] = 3.0; // off-block entry only
    let p2 = pjbsvd::ProblemSet::new(vec![b2], Partition::new(vec![1, 1]).unwrap()).unwrap();
    assert_eq!(objective(&p2, &pair).unwrap(), 0.0);
    let p3 = pjbsvd::ProblemSet::new(vec![Mat::<f64>::identity(6, 5)], Partition::new(vec![1, 1]).unwrap()).unwrap();
    assert_eq!(objective(&p3, &pair).unwrap(), 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn gauss_seidel_is_monotone_and_feasible((n1, n2, n, part, seed) in shape()) {
        let p = random_problem::<Complex64>(seed, n1, n2, n, part.clone());
        let init = default_init(&p, InitMode::Seeded(seed ^ 5));
        let mut cfg = SolverConfig::new(Updating::GaussSeidel);
        cfg.max_iter = 300;
        let r = ascf_solve(&p, &cfg, init).unwrap();
        let objs: Vec<f64> = std::iter::once(r.initial_objective).chain(r.objectives()).collect();
        for w in objs.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()));
        }
        prop_assert_eq!(r.trace.len(), r.iterations);
        prop_assert!(orthonormality_defect(&r.pair.u) <= 1e-10);
        prop_assert!(orthonormality_defect(&r.pair.v) <= 1e-10);
    }

    #[test]
    fn gauss_seidel_series_are_bounded((n1, n2, n, part, seed) in shape()) {
        let p = random_problem::<f64>(seed, n1, n2, n, part.clone());
        let init = default_init(&p, InitMode::Seeded(seed ^ 6));
        let r = ascf_solve(&p, &SolverConfig::new(Updating::GaussSeidel), init).unwrap();
        prop_assume!(r.converged);
        let bound = 2.0 * (r.final_objective - r.initial_objective) + 1e-8;
        let mut sums = [0.0f64; 4];
        for rec in &r.trace {
            let g = rec.geometry.expect("diagnostics recorded");
            sums[0] += rec.sigma_min_h1 * g.sin_theta_u.powi(2);
            sums[1] += rec.sigma_min_h2 * g.sin_theta_v.powi(2);
            sums[2] += rec.sigma_min_h1 * g.projection_residual_u;
            sums[3] += rec.sigma_min_h2 * g.projection_residual_v;
        }
        for s in sums {
            prop_assert!(s <= bound, "partial sum {} above {}", s, bound);
        }
    }

    #[test]
    fn jacobi_triples_have_nondecreasing_running_max((n1, n2, n, part, seed) in shape()) {
        let p = random_problem::<f64>(seed, n1, n2, n, part.clone());
        let init = default_init(&p, InitMode::Seeded(seed ^ 7));
        let mut cfg = SolverConfig::new(Updating::Jacobi);
        cfg.max_iter = 200;
        let r = ascf_solve(&p, &cfg, init).unwrap();
        let mut running = r.initial_objective;
        let mut last = f64::NEG_INFINITY;
        for rec in &r.trace {
            let triple = rec.objective.max(rec.objective_half).max(rec.objective_other.expect("jacobi logs both halves"));
            running = running.max(triple);
            prop_assert!(running >= last);
            last = running;
        }
        prop_assert!(orthonormality_defect(&r.pair.u) <= 1e-10);
    }

    #[test]
    fn locg_outer_sequence_is_monotone_and_progresses((n1, n2, n, part, seed) in shape()) {
        let p = random_problem::<Complex64>(seed, n1, n2, n, part.clone());
        let init = default_init(&p, InitMode::Seeded(seed ^ 8));
        let mut cfg = LocgConfig::new(Updating::GaussSeidel);
        cfg.outer.max_iter = 200;
        let r = locg_solve(&p, &cfg, init).unwrap();
        let mut prev = r.initial_objective;
        for rec in &r.trace {
            let gain = rec.objective - prev;
            prop_assert!(gain >= -1e-12 * (1.0 + prev));
            prop_assert!(gain >= rec.eta_half.max(rec.eta_full) - 1e-10,
                "gain {} below increments {} / {}", gain, rec.eta_half, rec.eta_full);
            prev = rec.objective;
        }
        prop_assert!(orthonormality_defect(&r.pair.u) <= 1e-10);
        prop_assert!(orthonormality_defect(&r.pair.v) <= 1e-10);
    }

    #[test]
    fn generated_problems_respect_the_bound(n2 in 4usize..16, k in 1usize..4, eta in 0.0f64..1.0, seed in any::<u64>()) {
        prop_assume!(k <= n2);
        let cfg = GeneratorConfig::new(n2, 3, Partition::all_ones(k).unwrap(), eta, seed);
        let (p, _) = generate_problem::<f64>(&cfg).unwrap();
        let bound = objective_upper_bound(&p);
        for i in 0..100u64 {
            let pair = random_pair::<f64>(seed.wrapping_add(i), p.n1(), p.n2(), k);
            prop_assert!(objective(&p, &pair).unwrap() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn matrix_files_round_trip_bits(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>(), complex in any::<bool>()) {
        let path = Path::new("mem");
        if complex {
            let m: Mat<Complex64> = random_normal(&mut rng(seed), rows, cols);
            let back: Mat<Complex64> = decode_matrix(&encode_matrix(&m), path).unwrap();
            prop_assert!(m.iter().zip(back.iter()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
            prop_assert_eq!(m.shape(), back.shape());
        } else {
            let m: Mat<f64> = random_normal(&mut rng(seed), rows, cols);
            let back: Mat<f64> = decode_matrix(&encode_matrix(&m), path).unwrap();
            prop_assert!(m.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(m.shape(), back.shape());
        }
    }
}

fn planted_check<T: Field>(field: FieldKind, part: Partition, seed: u64) {
    let cfg = GeneratorConfig::new(12, 3, part.clone(), 0.0, seed).with_field(field);
    let (p, truth) = generate_problem::<T>(&cfg).unwrap();
    let pair = truth.planted_pair(&truth.top_k()).unwrap();
    for b in p.matrices() {
        let m = pair.u.adjoint() * b * &pair.v;
        let off = &m - block_diag_part(&m, &part).unwrap();
        assert!(off.norm() <= 1e-12 * (1.0 + b.norm()), "off-block mass {}", off.norm());
    }
    // One polar correction of U from the planted pair.
    let g = gradients(&p, &pair).unwrap();
    let u = polar_orthonormal_factor(&g.h1).unwrap().factor;
    let corrected = IteratePair::new(u, pair.v.clone()).unwrap();
    let gc = gradients(&p, &corrected).unwrap();
    assert!(kkt_residual(&p, &corrected, &gc).unwrap() <= 1e-10);
}

#[test]
fn planted_pair_is_block_diagonalizing() {
    for seed in 0..4 {
        planted_check::<f64>(FieldKind::Real, Partition::all_ones(3).unwrap(), seed);
        planted_check::<Complex64>(FieldKind::Complex, Partition::all_ones(3).unwrap(), seed);
        planted_check::<f64>(FieldKind::Real, Partition::new(vec![2, 2]).unwrap(), seed);
        planted_check::<Complex64>(FieldKind::Complex, Partition::new(vec![1, 2]).unwrap(), seed);
    }
}

#[test]
fn fixed_point_stays_put() {
    let p = random_problem::<f64>(21, 12, 10, 3, Partition::new(vec![2, 1]).unwrap());
    let mut cfg = SolverConfig::new(Updating::GaussSeidel);
    cfg.tol = 1e-13;
    cfg.max_iter = 20_000;
    let r = ascf_solve(&p, &cfg, default_init(&p, InitMode::Seeded(2))).unwrap();
    assert!(r.converged, "kkt {}", r.final_kkt);
    assert!(!r.trace.last().unwrap().rank_deficient);
    let (next, _) = ascf_step(&p, &r.pair, Updating::GaussSeidel).unwrap();
    let moved = ((&next.u - &r.pair.u).norm_squared() + (&next.v - &r.pair.v).norm_squared()).sqrt();
    assert!(moved <= 1e-6, "moved {moved}");
}

#![allow(dead_code)]

use pjbsvd::field::random_normal;
use pjbsvd::{Field, IteratePair, Mat, Partition, ProblemSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_problem<T: Field>(seed: u64, n1: usize, n2: usize, n: usize, partition: Partition) -> ProblemSet<T> {
    let mut r = rng(seed);
    let mats = (0..n).map(|_| random_normal::<T, _>(&mut r, n1, n2)).collect();
    ProblemSet::new(mats, partition).unwrap()
}

pub fn random_orthonormal<T: Field>(r: &mut ChaCha8Rng, n: usize, k: usize) -> Mat<T> {
    random_normal::<T, _>(r, n, k).qr().q()
}

pub fn random_pair<T: Field>(seed: u64, n1: usize, n2: usize, k: usize) -> IteratePair<T> {
    let mut r = rng(seed);
    let u = random_orthonormal(&mut r, n1, k);
    let v = random_orthonormal(&mut r, n2, k);
    IteratePair::new(u, v).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Block sizes summing to `k` decoded from a list of cut flags.
pub fn partition_from_cuts(k: usize, cuts: &[bool]) -> Partition {
    let mut blocks = Vec::new();
    let mut run = 1;
    for i in 1..k {
        if cuts.get(i - 1).copied().unwrap_or(false) {
            blocks.push(run);
            run = 1;
        } else {
            run += 1;
        }
    }
    blocks.push(run);
    Partition::new(blocks).unwrap()
}

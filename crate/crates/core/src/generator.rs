//! Planted test problems `B_ℓ = Q1ᴴ D_ℓ Q2 + η C_ℓ`.
//!
//! All randomness comes from a single ChaCha8 stream, consumed in the order
//! `Q1`, `Q2`, then `(C_ℓ, D_ℓ)` for each `ℓ`. `C_ℓ` is drawn even when
//! `η = 0` so the remaining draws do not depend on the noise level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{random_normal, Field, FieldKind, Mat};
use crate::problem::{tree_sum_f64, IteratePair, Partition, ProblemSet};

/// Identifier of the random stream, recorded in manifests.
pub const RNG_ID: &str = "rand_chacha::ChaCha8Rng/seed_from_u64; rand_distr::StandardNormal";

/// Shape of the planted cores `D_ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreStructure {
    /// `n2` normals on the main diagonal.
    Diagonal,
    /// Dense `k_i × k_i` blocks along the diagonal of the top-left `k × k` corner.
    BlockDiagonal,
}

impl CoreStructure {
    pub fn default_for(partition: &Partition) -> Self {
        if partition.is_all_ones() {
            CoreStructure::Diagonal
        } else {
            CoreStructure::BlockDiagonal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n2: usize,
    pub ratio: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub partition: Partition,
    pub eta: f64,
    pub scale: f64,
    pub field: FieldKind,
    pub seed: u64,
    pub core: CoreStructure,
}

impl GeneratorConfig {
    /// Defaults: ratio 1.1, scale 10, real field, core shape from the partition.
    pub fn new(n2: usize, n: usize, partition: Partition, eta: f64, seed: u64) -> Self {
        let core = CoreStructure::default_for(&partition);
        Self {
            n2,
            ratio: 1.1,
            n,
            partition,
            eta,
            scale: 10.0,
            field: FieldKind::Real,
            seed,
            core,
        }
    }

    pub fn with_field(mut self, field: FieldKind) -> Self {
        self.field = field;
        self
    }

    /// `round(ratio·n2)`, halves rounded away from zero.
    pub fn n1(&self) -> usize {
        (self.ratio * self.n2 as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n2 == 0 || self.n == 0 {
            return Err(Error::Input("n2 and N must be positive".into()));
        }
        if !(self.ratio.is_finite() && self.ratio > 0.0) {
            return Err(Error::Input(format!("ratio must be positive, got {}", self.ratio)));
        }
        if self.n1() < self.n2 {
            return Err(Error::Input(format!(
                "round(ratio·n2) = {} is smaller than n2 = {}",
                self.n1(),
                self.n2
            )));
        }
        if self.partition.k() > self.n2 {
            return Err(Error::Input(format!(
                "partition size k = {} exceeds n2 = {}",
                self.partition.k(),
                self.n2
            )));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Input(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Input(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Ground truth behind a generated problem.
#[derive(Debug, Clone)]
pub struct PlantedTruth<T: Field> {
    pub q1: Mat<T>,
    pub q2: Mat<T>,
    /// Scaled cores, `n1 × n2`, real even in complex mode.
    pub d_list: Vec<Mat<f64>>,
    pub core: CoreStructure,
    pub partition: Partition,
}

impl<T: Field> PlantedTruth<T> {
    /// Indices of the `k` planted directions carrying the most mass.
    ///
    /// Diagonal cores: the `k` largest `Σ_ℓ d_{ℓ,i}²`, ties broken by index,
    /// returned in increasing order. Block cores: `0..k`.
    pub fn top_k(&self) -> Vec<usize> {
        let k = self.partition.k();
        match self.core {
            CoreStructure::BlockDiagonal => (0..k).collect(),
            CoreStructure::Diagonal => {
                let weights = self.diagonal_weights();
                let mut idx: Vec<usize> = (0..weights.len()).collect();
                idx.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
                idx.truncate(k);
                idx.sort_unstable();
                idx
            }
        }
    }

    /// `Σ_ℓ d_{ℓ,i}²` for every diagonal position.
    pub fn diagonal_weights(&self) -> Vec<f64> {
        let m = self.d_list.first().map_or(0, |d| d.nrows().min(d.ncols()));
        (0..m)
            .map(|i| tree_sum_f64(self.d_list.iter().map(|d| d[(i, i)] * d[(i, i)]).collect()))
            .collect()
    }

    /// The separable optimum for diagonal cores, and the planted block mass for block cores.
    pub fn top_k_value(&self) -> f64 {
        match self.core {
            CoreStructure::Diagonal => {
                let w = self.diagonal_weights();
                tree_sum_f64(self.top_k().into_iter().map(|i| w[i]).collect())
            }
            CoreStructure::BlockDiagonal => {
                let k = self.partition.k();
                tree_sum_f64(
                    self.d_list
                        .iter()
                        .map(|d| d.view((0, 0), (k, k)).norm_squared())
                        .collect(),
                )
            }
        }
    }

    /// `U = Q1ᴴ[:, S]`, `V = Q2ᴴ[:, S]` so that `UᴴB_ℓV = D_ℓ[S, S]` at `η = 0`.
    pub fn planted_pair(&self, indices: &[usize]) -> Result<IteratePair<T>> {
        let q1h = self.q1.adjoint();
        let q2h = self.q2.adjoint();
        if let Some(&bad) = indices.iter().find(|&&i| i >= q2h.ncols()) {
            return Err(Error::Input(format!("planted index {bad} out of range")));
        }
        let u = q1h.select_columns(indices);
        let v = q2h.select_columns(indices);
        IteratePair::new(u, v)
    }
}

fn square_unitary<T: Field>(rng: &mut ChaCha8Rng, n: usize) -> Mat<T> {
    random_normal::<T, _>(rng, n, n).qr().q()
}

fn draw_core(rng: &mut ChaCha8Rng, config: &GeneratorConfig, n1: usize) -> Mat<f64> {
    let mut d = Mat::<f64>::zeros(n1, config.n2);
    match config.core {
        CoreStructure::Diagonal => {
            for i in 0..config.n2 {
                let x: f64 = StandardNormal.sample(rng);
                d[(i, i)] = config.scale * x;
            }
        }
        CoreStructure::BlockDiagonal => {
            for r in config.partition.ranges() {
                for j in r.clone() {
                    for i in r.clone() {
                        let x: f64 = StandardNormal.sample(rng);
                        d[(i, j)] = config.scale * x;
                    }
                }
            }
        }
    }
    d
}

/// Builds the problem and keeps the unitary factors and cores.
pub fn generate_problem<T: Field>(config: &GeneratorConfig) -> Result<(ProblemSet<T>, PlantedTruth<T>)> {
    config.validate()?;
    if T::KIND != config.field {
        return Err(Error::Input(format!(
            "generator configured for {} data but called for {}",
            config.field,
            T::KIND
        )));
    }
    let n1 = config.n1();
    let n2 = config.n2;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let q1: Mat<T> = square_unitary(&mut rng, n1);
    let q2: Mat<T> = square_unitary(&mut rng, n2);
    let q1h = q1.adjoint();
    let eta = T::from_real_f64(config.eta);

    let mut matrices = Vec::with_capacity(config.n);
    let mut d_list = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let c: Mat<T> = random_normal(&mut rng, n1, n2);
        let d = draw_core(&mut rng, config, n1);
        let dt: Mat<T> = d.map(T::from_real_f64);
        let mut b = &q1h * (dt * &q2);
        if config.eta != 0.0 {
            b += c * eta;
        }
        matrices.push(b);
        d_list.push(d);
    }
    let problem = ProblemSet::new(matrices, config.partition.clone())?;
    Ok((
        problem,
        PlantedTruth {
            q1,
            q2,
            d_list,
            core: config.core,
            partition: config.partition.clone(),
        },
    ))
}

/// `Σ_ℓ Σ_{i≤k} σ_i(B_ℓ)²`, an upper bound on the objective over all feasible pairs.
pub fn objective_upper_bound<T: Field>(problem: &ProblemSet<T>) -> f64 {
    use rayon::prelude::*;
    let k = problem.k();
    let per: Vec<f64> = problem
        .matrices()
        .par_iter()
        .map(|b| {
            let mut s: Vec<f64> = b.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s.iter().take(k).map(|x| x * x).sum()
        })
        .collect();
    tree_sum_f64(per)
}

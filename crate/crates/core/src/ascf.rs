//! Alternating SCF on the two polar equations `H1(U,V) = UΛ1`, `H2(U,V) = VΛ2`.
//!
//! Each sweep replaces `U` by the orthonormal polar factor of `H1` and `V` by
//! that of `H2`, either from the same old pair (Jacobi) or with `H2`
//! re-evaluated at the new `U` (Gauss-Seidel). Gauss-Seidel sweeps never
//! decrease the objective.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{leading_identity, random_normal, Field, Mat};
use crate::kernels::{polar_orthonormal_factor, sin_theta_gap_squared};
use crate::problem::{
    blocks_from_left, blocks_from_right, gradients, h1_from, h2_from, left_products, objective_from_blocks,
    polar_residual, re_trace_prod, right_products, IteratePair, ProblemSet, FEASIBILITY_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Updating {
    GaussSeidel,
    Jacobi,
}

impl std::str::FromStr for Updating {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gs" | "gauss_seidel" | "gauss-seidel" => Ok(Updating::GaussSeidel),
            "jac" | "jacobi" => Ok(Updating::Jacobi),
            other => Err(format!("unknown updating scheme `{other}` (expected gs|jac)")),
        }
    }
}

impl std::fmt::Display for Updating {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Updating::GaussSeidel => "gs",
            Updating::Jacobi => "jac",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub updating: Updating,
    pub tol: f64,
    pub max_iter: usize,
    /// Also compute the subspace-gap diagnostics of every sweep.
    pub record_diagnostics: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            updating: Updating::GaussSeidel,
            tol: 1e-8,
            max_iter: 5000,
            record_diagnostics: true,
        }
    }
}

impl SolverConfig {
    pub fn new(updating: Updating) -> Self {
        Self {
            updating,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Input(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Input("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Initial pair selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Leading `k` columns of the identities.
    Identity,
    /// Orthonormal factors of seeded standard-normal matrices, `U` drawn first.
    Seeded(u64),
}

pub fn default_init<T: Field>(problem: &ProblemSet<T>, mode: InitMode) -> IteratePair<T> {
    let (n1, n2, k) = (problem.n1(), problem.n2(), problem.k());
    match mode {
        InitMode::Identity => IteratePair::new_unchecked(leading_identity(n1, k), leading_identity(n2, k)),
        InitMode::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Mat<T> = random_normal(&mut rng, n1, k);
            let b: Mat<T> = random_normal(&mut rng, n2, k);
            IteratePair::new_unchecked(a.qr().q(), b.qr().q())
        }
    }
}

/// Subspace movement of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepGeometry {
    /// `‖sinΘ(R(U⁺), R(U))‖_F`.
    pub sin_theta_u: f64,
    pub sin_theta_v: f64,
    /// `‖H1 − U(UᴴH1)‖_F² / ‖H1‖_F²` for the gradient that produced `U⁺`.
    pub projection_residual_u: f64,
    pub projection_residual_v: f64,
}

/// Outer-iteration bookkeeping of the subspace-accelerated solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceInfo {
    pub dim_u: usize,
    pub dim_v: usize,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub inner_tol: f64,
}

/// One sweep (or one outer iteration) of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// `f` at the new pair.
    pub objective: f64,
    /// ε_KKT as the stopping test sees it after this sweep.
    pub kkt: f64,
    /// `‖H1‖_tr − Re tr(UᴴH1)`, the guaranteed gain of the `U` update.
    pub eta_half: f64,
    /// The same quantity for the `V` update.
    pub eta_full: f64,
    pub sigma_min_h1: f64,
    pub sigma_min_h2: f64,
    pub rank_deficient: bool,
    /// `f(U⁺, V)`.
    pub objective_half: f64,
    /// Jacobi only: `f(U, V⁺)`.
    pub objective_other: Option<f64>,
    pub geometry: Option<StepGeometry>,
    pub subspace: Option<SubspaceInfo>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolverReport<T: Field> {
    pub pair: IteratePair<T>,
    pub converged: bool,
    pub iterations: usize,
    pub updating: Updating,
    pub initial_objective: f64,
    pub initial_kkt: f64,
    pub final_objective: f64,
    pub final_kkt: f64,
    pub trace: Vec<IterRecord>,
    pub elapsed_seconds: f64,
}

impl<T: Field> SolverReport<T> {
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_objective).chain(self.trace.iter().map(|r| r.objective))
    }
}

/// Diagnostics of a single standalone sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub objective_before: f64,
    pub objective_half: f64,
    /// Jacobi only: `f(U, V⁺)`.
    pub objective_other: Option<f64>,
    pub objective_after: f64,
    pub eta_half: f64,
    pub eta_full: f64,
    pub sigma_min_h1: f64,
    pub sigma_min_h2: f64,
    pub rank_deficient: bool,
}

/// One sweep from `pair`, with every quantity computed fresh.
pub fn ascf_step<T: Field>(
    problem: &ProblemSet<T>,
    pair: &IteratePair<T>,
    updating: Updating,
) -> Result<(IteratePair<T>, StepDiagnostics)> {
    let mats = problem.matrices();
    let part = problem.partition();
    let g = gradients(problem, pair)?;
    let bv = right_products(mats, &pair.v);
    let objective_before = objective_from_blocks(&blocks_from_right(&pair.u, &bv, part));

    let p1 = polar_orthonormal_factor(&g.h1)?;
    let eta_half = p1.trace_norm() - re_trace_prod(&pair.u, &g.h1);
    let objective_half = objective_from_blocks(&blocks_from_right(&p1.factor, &bv, part));

    let (h2, objective_other) = match updating {
        Updating::Jacobi => (g.h2, None),
        Updating::GaussSeidel => {
            let bhu = left_products(mats, &p1.factor);
            let blocks = blocks_from_left(&bhu, &pair.v, part);
            (h2_from(&bhu, &blocks, part), None)
        }
    };
    let p2 = polar_orthonormal_factor(&h2)?;
    let eta_full = p2.trace_norm() - re_trace_prod(&pair.v, &h2);
    let objective_other = match updating {
        Updating::Jacobi => {
            let bhu = left_products(mats, &pair.u);
            Some(objective_from_blocks(&blocks_from_left(&bhu, &p2.factor, part)))
        }
        Updating::GaussSeidel => objective_other,
    };

    let next = IteratePair::new_unchecked(p1.factor, p2.factor);
    let bv_next = right_products(mats, &next.v);
    let objective_after = objective_from_blocks(&blocks_from_right(&next.u, &bv_next, part));
    Ok((
        next,
        StepDiagnostics {
            objective_before,
            objective_half,
            objective_other,
            objective_after,
            eta_half,
            eta_full,
            sigma_min_h1: p1.singular_values.last().copied().unwrap_or(0.0),
            sigma_min_h2: p2.singular_values.last().copied().unwrap_or(0.0),
            rank_deficient: p1.rank_deficient || p2.rank_deficient,
        },
    ))
}

fn relative_projection_residual<T: Field>(p: &Mat<T>, h: &Mat<T>) -> f64 {
    let hn = h.norm_squared();
    if hn == 0.0 {
        return 0.0;
    }
    (h - p * p.ad_mul(h)).norm_squared() / hn
}

fn geometry<T: Field>(u: &Mat<T>, u_new: &Mat<T>, h1: &Mat<T>, v: &Mat<T>, v_new: &Mat<T>, h2: &Mat<T>) -> Result<StepGeometry> {
    Ok(StepGeometry {
        sin_theta_u: sin_theta_gap_squared(u_new, u)?.sqrt(),
        sin_theta_v: sin_theta_gap_squared(v_new, v)?.sqrt(),
        projection_residual_u: relative_projection_residual(u, h1),
        projection_residual_v: relative_projection_residual(v, h2),
    })
}

/// Runs sweeps from `init` until ε_KKT ≤ `config.tol` or `config.max_iter`
/// sweeps have been taken.
///
/// The stopping test reuses gradients the sweep already produced. With
/// Jacobi updating both terms are at the current pair. With Gauss-Seidel the
/// `H1` term is at the current pair and the `H2` term is the one that produced
/// the latest `V`, measured against the `V` it was evaluated at.
pub fn ascf_solve<T: Field>(problem: &ProblemSet<T>, config: &SolverConfig, init: IteratePair<T>) -> Result<SolverReport<T>> {
    config.validate()?;
    problem.check_pair(&init.u, &init.v, FEASIBILITY_TOL)?;
    let start = Instant::now();
    let mats = problem.matrices();
    let part = problem.partition();
    let denom = problem.kkt_denominator();

    let IteratePair { mut u, mut v } = init;
    let mut bv = right_products(mats, &v);
    let mut blocks = blocks_from_right(&u, &bv, part);
    let mut f = objective_from_blocks(&blocks);
    let initial_objective = f;

    if denom == 0.0 {
        return Ok(SolverReport {
            pair: IteratePair::new_unchecked(u, v),
            converged: true,
            iterations: 0,
            updating: config.updating,
            initial_objective,
            initial_kkt: 0.0,
            final_objective: f,
            final_kkt: 0.0,
            trace: Vec::new(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }

    let mut h1 = h1_from(&bv, &blocks, part);
    let mut bhu = left_products(mats, &u);
    let mut h2 = h2_from(&bhu, &blocks, part);
    let mut kkt = (polar_residual(&u, &h1) + polar_residual(&v, &h2)) / denom;
    let initial_kkt = kkt;
    let mut trace = Vec::new();

    while kkt > config.tol && trace.len() < config.max_iter {
        let p1 = polar_orthonormal_factor(&h1)?;
        let eta_half = p1.trace_norm() - re_trace_prod(&u, &h1);
        let u_new = p1.factor;

        let record = match config.updating {
            Updating::GaussSeidel => {
                bhu = left_products(mats, &u_new);
                let blocks_half = blocks_from_left(&bhu, &v, part);
                let objective_half = objective_from_blocks(&blocks_half);
                let h2_hat = h2_from(&bhu, &blocks_half, part);
                let p2 = polar_orthonormal_factor(&h2_hat)?;
                let eta_full = p2.trace_norm() - re_trace_prod(&v, &h2_hat);
                let residual_v = polar_residual(&v, &h2_hat);
                let v_new = p2.factor;
                let geom = if config.record_diagnostics {
                    Some(geometry(&u, &u_new, &h1, &v, &v_new, &h2_hat)?)
                } else {
                    None
                };

                bv = right_products(mats, &v_new);
                blocks = blocks_from_right(&u_new, &bv, part);
                f = objective_from_blocks(&blocks);
                h1 = h1_from(&bv, &blocks, part);
                kkt = (polar_residual(&u_new, &h1) + residual_v) / denom;
                u = u_new;
                v = v_new;

                IterRecord {
                    objective: f,
                    kkt,
                    eta_half,
                    eta_full,
                    sigma_min_h1: p1.singular_values.last().copied().unwrap_or(0.0),
                    sigma_min_h2: p2.singular_values.last().copied().unwrap_or(0.0),
                    rank_deficient: p1.rank_deficient || p2.rank_deficient,
                    objective_half,
                    objective_other: None,
                    geometry: geom,
                    subspace: None,
                    elapsed_seconds: start.elapsed().as_secs_f64(),
                }
            }
            Updating::Jacobi => {
                let p2 = polar_orthonormal_factor(&h2)?;
                let eta_full = p2.trace_norm() - re_trace_prod(&v, &h2);
                let v_new = p2.factor;
                let objective_half = objective_from_blocks(&blocks_from_right(&u_new, &bv, part));
                let objective_other = objective_from_blocks(&blocks_from_left(&bhu, &v_new, part));
                let geom = if config.record_diagnostics {
                    Some(geometry(&u, &u_new, &h1, &v, &v_new, &h2)?)
                } else {
                    None
                };

                bv = right_products(mats, &v_new);
                bhu = left_products(mats, &u_new);
                blocks = blocks_from_right(&u_new, &bv, part);
                f = objective_from_blocks(&blocks);
                h1 = h1_from(&bv, &blocks, part);
                h2 = h2_from(&bhu, &blocks, part);
                kkt = (polar_residual(&u_new, &h1) + polar_residual(&v_new, &h2)) / denom;
                u = u_new;
                v = v_new;

                IterRecord {
                    objective: f,
                    kkt,
                    eta_half,
                    eta_full,
                    sigma_min_h1: p1.singular_values.last().copied().unwrap_or(0.0),
                    sigma_min_h2: p2.singular_values.last().copied().unwrap_or(0.0),
                    rank_deficient: p1.rank_deficient || p2.rank_deficient,
                    objective_half,
                    objective_other: Some(objective_other),
                    geometry: geom,
                    subspace: None,
                    elapsed_seconds: start.elapsed().as_secs_f64(),
                }
            }
        };
        trace.push(record);
    }

    Ok(SolverReport {
        pair: IteratePair::new_unchecked(u, v),
        converged: kkt <= config.tol,
        iterations: trace.len(),
        updating: config.updating,
        initial_objective,
        initial_kkt,
        final_objective: f,
        final_kkt: kkt,
        trace,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

//! Field-erased wrappers used by the command line and the C interface.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ascf::{ascf_solve, default_init, InitMode, IterRecord, SolverConfig, SolverReport, Updating};
use crate::error::{Error, Result};
use crate::field::{Field, FieldKind, Mat};
use crate::generator::{generate_problem, objective_upper_bound, GeneratorConfig};
use crate::io::{load_problem, read_manifest, save_problem, ProblemManifest};
use crate::locg::{locg_solve, LocgConfig};
use crate::problem::{IteratePair, Partition, ProblemSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accel {
    None,
    Locg,
}

impl std::str::FromStr for Accel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Accel::None),
            "locg" => Ok(Accel::Locg),
            other => Err(format!("unknown acceleration `{other}` (expected none|locg)")),
        }
    }
}

impl std::fmt::Display for Accel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Accel::None => "none",
            Accel::Locg => "locg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub updating: Updating,
    pub accel: Accel,
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitMode,
    pub inner_max_iter: usize,
    pub record_diagnostics: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            updating: s.updating,
            accel: Accel::None,
            tol: s.tol,
            max_iter: s.max_iter,
            init: InitMode::Seeded(0),
            inner_max_iter: LocgConfig::default().inner_max_iter,
            record_diagnostics: false,
        }
    }
}

impl SolveOptions {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            updating: self.updating,
            tol: self.tol,
            max_iter: self.max_iter,
            record_diagnostics: self.record_diagnostics,
        }
    }

    pub fn locg_config(&self) -> LocgConfig {
        LocgConfig {
            outer: self.solver_config(),
            inner_max_iter: self.inner_max_iter,
            ..LocgConfig::default()
        }
    }
}

/// Runs the configured method from `init`.
pub fn solve_with<T: Field>(problem: &ProblemSet<T>, options: &SolveOptions, init: IteratePair<T>) -> Result<SolverReport<T>> {
    match options.accel {
        Accel::None => ascf_solve(problem, &options.solver_config(), init),
        Accel::Locg => locg_solve(problem, &options.locg_config(), init),
    }
}

/// `|UᴴB_ℓV|` entrywise.
pub fn heatmap_grid<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>, index: usize) -> Result<Mat<f64>> {
    let b = problem.matrices().get(index).ok_or_else(|| {
        Error::Input(format!("matrix index {index} out of range for a set of {}", problem.len()))
    })?;
    let k = problem.k();
    if pair.u.shape() != (problem.n1(), k) || pair.v.shape() != (problem.n2(), k) {
        return Err(Error::dims(
            "heatmap pair",
            format!("{}×{k} and {}×{k}", problem.n1(), problem.n2()),
            format!("{:?} and {:?}", pair.u.shape(), pair.v.shape()),
        ));
    }
    let m = pair.u.adjoint() * (b * &pair.v);
    Ok(m.map(|x| x.modulus()))
}

#[derive(Debug, Clone)]
pub enum AnyProblem {
    Real(ProblemSet<f64>),
    Complex(ProblemSet<Complex64>),
}

#[derive(Debug, Clone)]
pub enum AnyReport {
    Real(SolverReport<f64>),
    Complex(SolverReport<Complex64>),
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $body:expr) => {
        match $self {
            AnyProblem::Real($p) => $body,
            AnyProblem::Complex($p) => $body,
        }
    };
}

macro_rules! dispatch_report {
    ($self:expr, $r:ident => $body:expr) => {
        match $self {
            AnyReport::Real($r) => $body,
            AnyReport::Complex($r) => $body,
        }
    };
}

impl AnyProblem {
    pub fn generate(config: &GeneratorConfig) -> Result<Self> {
        Ok(match config.field {
            FieldKind::Real => AnyProblem::Real(generate_problem::<f64>(config)?.0),
            FieldKind::Complex => AnyProblem::Complex(generate_problem::<Complex64>(config)?.0),
        })
    }

    pub fn load(dir: &Path) -> Result<(Self, ProblemManifest)> {
        let manifest = read_manifest(dir)?;
        Ok(match manifest.field {
            FieldKind::Real => {
                let (p, m) = load_problem::<f64>(dir)?;
                (AnyProblem::Real(p), m)
            }
            FieldKind::Complex => {
                let (p, m) = load_problem::<Complex64>(dir)?;
                (AnyProblem::Complex(p), m)
            }
        })
    }

    pub fn save(&self, dir: &Path, generator: Option<&GeneratorConfig>) -> Result<ProblemManifest> {
        dispatch!(self, p => save_problem(dir, p, generator))
    }

    pub fn field(&self) -> FieldKind {
        dispatch!(self, p => p.field())
    }

    pub fn n1(&self) -> usize {
        dispatch!(self, p => p.n1())
    }

    pub fn n2(&self) -> usize {
        dispatch!(self, p => p.n2())
    }

    pub fn k(&self) -> usize {
        dispatch!(self, p => p.k())
    }

    pub fn len(&self) -> usize {
        dispatch!(self, p => p.len())
    }

    pub fn is_empty(&self) -> bool {
        dispatch!(self, p => p.is_empty())
    }

    pub fn partition(&self) -> &Partition {
        dispatch!(self, p => p.partition())
    }

    pub fn upper_bound(&self) -> f64 {
        dispatch!(self, p => objective_upper_bound(p))
    }

    pub fn solve(&self, options: &SolveOptions) -> Result<AnyReport> {
        Ok(match self {
            AnyProblem::Real(p) => AnyReport::Real(solve_with(p, options, default_init(p, options.init))?),
            AnyProblem::Complex(p) => AnyReport::Complex(solve_with(p, options, default_init(p, options.init))?),
        })
    }

    pub fn heatmap(&self, report: &AnyReport, index: usize) -> Result<Mat<f64>> {
        match (self, report) {
            (AnyProblem::Real(p), AnyReport::Real(r)) => heatmap_grid(p, &r.pair, index),
            (AnyProblem::Complex(p), AnyReport::Complex(r)) => heatmap_grid(p, &r.pair, index),
            _ => Err(Error::Contract("report and problem have different fields".into())),
        }
    }
}

fn interleave<T: Field>(m: &Mat<T>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len() * if T::KIND == FieldKind::Complex { 2 } else { 1 });
    for &x in m.iter() {
        let (re, im) = x.parts();
        out.push(re);
        if T::KIND == FieldKind::Complex {
            out.push(im);
        }
    }
    out
}

impl AnyReport {
    pub fn field(&self) -> FieldKind {
        match self {
            AnyReport::Real(_) => FieldKind::Real,
            AnyReport::Complex(_) => FieldKind::Complex,
        }
    }

    pub fn converged(&self) -> bool {
        dispatch_report!(self, r => r.converged)
    }

    pub fn iterations(&self) -> usize {
        dispatch_report!(self, r => r.iterations)
    }

    pub fn final_objective(&self) -> f64 {
        dispatch_report!(self, r => r.final_objective)
    }

    pub fn final_kkt(&self) -> f64 {
        dispatch_report!(self, r => r.final_kkt)
    }

    pub fn initial_objective(&self) -> f64 {
        dispatch_report!(self, r => r.initial_objective)
    }

    pub fn elapsed_seconds(&self) -> f64 {
        dispatch_report!(self, r => r.elapsed_seconds)
    }

    pub fn trace(&self) -> &[IterRecord] {
        dispatch_report!(self, r => &r.trace)
    }

    /// Shape of `U` and `V`.
    pub fn shapes(&self) -> ((usize, usize), (usize, usize)) {
        dispatch_report!(self, r => (r.pair.u.shape(), r.pair.v.shape()))
    }

    /// `U` in column-major order, complex entries as (re, im) pairs.
    pub fn u_values(&self) -> Vec<f64> {
        dispatch_report!(self, r => interleave(&r.pair.u))
    }

    pub fn v_values(&self) -> Vec<f64> {
        dispatch_report!(self, r => interleave(&r.pair.v))
    }
}

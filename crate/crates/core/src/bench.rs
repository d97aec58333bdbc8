//! Experiment sweeps and data exports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ascf::{default_init, InitMode, Updating};
use crate::dynamic::{heatmap_grid, solve_with, Accel, SolveOptions};
use crate::error::{Error, Result};
use crate::field::{Field, FieldKind, Mat};
use crate::generator::{generate_problem, GeneratorConfig, RNG_ID};
use crate::io::write_json;
use crate::problem::{IteratePair, Partition, ProblemSet};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "npdo-gs")]
    NpdoGs,
    #[serde(rename = "npdo-jac")]
    NpdoJac,
    #[serde(rename = "accnpdo-gs")]
    AccnpdoGs,
    #[serde(rename = "accnpdo-jac")]
    AccnpdoJac,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::NpdoGs, Method::NpdoJac, Method::AccnpdoGs, Method::AccnpdoJac];

    pub fn name(self) -> &'static str {
        match self {
            Method::NpdoGs => "npdo-gs",
            Method::NpdoJac => "npdo-jac",
            Method::AccnpdoGs => "accnpdo-gs",
            Method::AccnpdoJac => "accnpdo-jac",
        }
    }

    pub fn updating(self) -> Updating {
        match self {
            Method::NpdoGs | Method::AccnpdoGs => Updating::GaussSeidel,
            Method::NpdoJac | Method::AccnpdoJac => Updating::Jacobi,
        }
    }

    pub fn accel(self) -> Accel {
        match self {
            Method::NpdoGs | Method::NpdoJac => Accel::None,
            Method::AccnpdoGs | Method::AccnpdoJac => Accel::Locg,
        }
    }

    /// The unaccelerated method with the same updating scheme.
    pub fn baseline(self) -> Method {
        match self.updating() {
            Updating::GaussSeidel => Method::NpdoGs,
            Updating::Jacobi => Method::NpdoJac,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method `{s}` (expected npdo-gs|npdo-jac|accnpdo-gs|accnpdo-jac)"))
    }
}

/// Offset between a cell's generator seed and the seed of its initial pair,
/// so the two random streams differ.
pub const INIT_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn init_seed(seed: u64) -> u64 {
    seed.wrapping_add(INIT_SEED_OFFSET)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n2_values: Vec<usize>,
    pub eta_values: Vec<f64>,
    pub ratio: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub partition: Partition,
    pub field: FieldKind,
    pub methods: Vec<Method>,
    pub tol: f64,
    pub max_iter: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Input("no methods requested".into()));
        }
        if self.n2_values.is_empty() || self.eta_values.is_empty() || self.seeds.is_empty() {
            return Err(Error::Input("the n2, eta and seed lists must all be non-empty".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Input("tol must be positive and max_iter at least 1".into()));
        }
        for &n2 in &self.n2_values {
            for &eta in &self.eta_values {
                self.generator_config(n2, eta, 0).validate()?;
            }
        }
        Ok(())
    }

    pub fn generator_config(&self, n2: usize, eta: f64, seed: u64) -> GeneratorConfig {
        let mut g = GeneratorConfig::new(n2, self.n, self.partition.clone(), eta, seed).with_field(self.field);
        g.ratio = self.ratio;
        g
    }

    fn options(&self, method: Method, seed: u64) -> SolveOptions {
        SolveOptions {
            updating: method.updating(),
            accel: method.accel(),
            tol: self.tol,
            max_iter: self.max_iter,
            init: InitMode::Seeded(init_seed(seed)),
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub n2: usize,
    pub n1: usize,
    pub eta: f64,
    pub seed: u64,
    pub wall_seconds: f64,
    pub iterations: usize,
    pub kkt_final: f64,
    pub objective_final: f64,
    pub converged: bool,
    /// On accelerated rows: wall time of the matching baseline over this row's.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub spec: ExperimentSpec,
    pub library_version: String,
    pub rng: String,
    pub init_seed_offset: u64,
    pub threads: usize,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub manifest: ExperimentManifest,
    pub csv_path: PathBuf,
}

pub const RESULTS_NAME: &str = "results.csv";
pub const EXPERIMENT_MANIFEST_NAME: &str = "manifest.json";

fn run_cell<T: Field>(spec: &ExperimentSpec, n2: usize, eta: f64, seed: u64, rows: &mut Vec<ResultRow>) -> Result<()> {
    let config = spec.generator_config(n2, eta, seed);
    let (problem, _) = generate_problem::<T>(&config)?;
    let init = default_init(&problem, InitMode::Seeded(init_seed(seed)));
    for &method in &spec.methods {
        let options = spec.options(method, seed);
        let start = Instant::now();
        let report = solve_with(&problem, &options, init.clone())?;
        let wall = start.elapsed().as_secs_f64();
        rows.push(ResultRow {
            method,
            n2,
            n1: problem.n1(),
            eta,
            seed,
            wall_seconds: wall,
            iterations: report.iterations,
            kkt_final: report.final_kkt,
            objective_final: report.final_objective,
            converged: report.converged,
            speedup: None,
        });
    }
    Ok(())
}

fn fill_speedups(rows: &mut [ResultRow]) {
    let lookup: Vec<(Method, usize, u64, u64, f64)> = rows
        .iter()
        .map(|r| (r.method, r.n2, r.eta.to_bits(), r.seed, r.wall_seconds))
        .collect();
    for r in rows.iter_mut() {
        if r.method.accel() != Accel::Locg {
            continue;
        }
        let base = r.method.baseline();
        r.speedup = lookup
            .iter()
            .find(|(m, n2, eta, seed, _)| *m == base && *n2 == r.n2 && *eta == r.eta.to_bits() && *seed == r.seed)
            .map(|&(.., t)| t / r.wall_seconds);
    }
}

/// Generates each cell once, runs every method from the same initial pair
/// and writes `results.csv` plus `manifest.json` into the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let mut rows = Vec::new();
    for &n2 in &spec.n2_values {
        for &eta in &spec.eta_values {
            for &seed in &spec.seeds {
                match spec.field {
                    FieldKind::Real => run_cell::<f64>(spec, n2, eta, seed, &mut rows)?,
                    FieldKind::Complex => run_cell::<Complex64>(spec, n2, eta, seed, &mut rows)?,
                }
            }
        }
    }
    fill_speedups(&mut rows);
    rows.sort_by(|a, b| {
        (a.method, a.n2)
            .cmp(&(b.method, b.n2))
            .then(a.eta.total_cmp(&b.eta))
            .then(a.seed.cmp(&b.seed))
    });

    let csv_path = spec.out_dir.join(RESULTS_NAME);
    write_rows(&csv_path, &rows)?;
    let manifest = ExperimentManifest {
        spec: spec.clone(),
        library_version: crate::VERSION.to_string(),
        rng: RNG_ID.to_string(),
        init_seed_offset: INIT_SEED_OFFSET,
        threads: rayon::current_num_threads(),
        files: vec![RESULTS_NAME.to_string()],
    };
    write_json(&spec.out_dir.join(EXPERIMENT_MANIFEST_NAME), &manifest)?;
    Ok(ExperimentOutput { rows, manifest, csv_path })
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record([
            "method",
            "n2",
            "n1",
            "eta",
            "seed",
            "wall_seconds",
            "iterations",
            "kkt_final",
            "objective_final",
            "converged",
            "speedup",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?)
}

/// Renders a grid as headerless CSV, row-major, shortest round-trip decimals.
pub fn grid_to_csv(grid: &Mat<f64>) -> String {
    let mut out = String::new();
    for i in 0..grid.nrows() {
        let line: Vec<String> = (0..grid.ncols()).map(|j| format!("{}", grid[(i, j)])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes `|UᴴB_ℓV|` for `ℓ = index` to `path`.
pub fn export_heatmap<T: Field>(problem: &ProblemSet<T>, pair: &IteratePair<T>, index: usize, path: &Path) -> Result<Mat<f64>> {
    let grid = heatmap_grid(problem, pair, index)?;
    fs::write(path, grid_to_csv(&grid)).map_err(|e| Error::io(path, e))?;
    Ok(grid)
}

/// Off-diagonal over diagonal Frobenius mass of a square grid.
pub fn off_diagonal_ratio(grid: &Mat<f64>) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for j in 0..grid.ncols() {
        for i in 0..grid.nrows() {
            let x = grid[(i, j)] * grid[(i, j)];
            if i == j {
                diag += x;
            } else {
                off += x;
            }
        }
    }
    if diag == 0.0 {
        return if off == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (off / diag).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dir: &Path) -> ExperimentSpec {
        ExperimentSpec {
            n2_values: vec![20],
            eta_values: vec![1e-2],
            ratio: 1.1,
            n: 3,
            partition: Partition::all_ones(3).unwrap(),
            field: FieldKind::Real,
            methods: Method::ALL.to_vec(),
            tol: 1e-8,
            max_iter: 5000,
            seeds: vec![1],
            out_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("npdo".parse::<Method>().is_err());
        assert_eq!(Method::AccnpdoJac.baseline(), Method::NpdoJac);
    }

    #[test]
    fn empty_methods_rejected_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("never");
        let mut s = spec(&out);
        s.methods.clear();
        assert!(matches!(run_experiment(&s), Err(Error::Input(_))));
        assert!(!out.exists());
    }

    #[test]
    fn small_sweep_writes_rows_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&spec(dir.path())).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert!(out.rows.iter().all(|r| r.converged && r.n1 == 22));
        let back = read_rows(&out.csv_path).unwrap();
        assert_eq!(back, out.rows);
        for r in &back {
            assert_eq!(r.speedup.is_some(), r.method.accel() == Accel::Locg);
        }
        assert!(dir.path().join(EXPERIMENT_MANIFEST_NAME).exists());
    }

    #[test]
    fn grid_csv_layout() {
        let g = Mat::from_row_slice(2, 2, &[1.0, 0.1, 1e-20, 2.5]);
        assert_eq!(grid_to_csv(&g), "1,0.1\n0.00000000000000000001,2.5\n");
        assert!((off_diagonal_ratio(&g) - (0.01f64 / 7.25).sqrt()).abs() < 1e-15);
    }
}

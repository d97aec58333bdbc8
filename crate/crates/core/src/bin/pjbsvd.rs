use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pjbsvd::ascf::{InitMode, IterRecord, Updating};
use pjbsvd::bench::{export_heatmap, init_seed, run_experiment, ExperimentSpec, Method};
use pjbsvd::dynamic::{Accel, AnyProblem, AnyReport, SolveOptions};
use pjbsvd::error::{Error, Result};
use pjbsvd::field::{Field, FieldKind};
use pjbsvd::generator::{GeneratorConfig, RNG_ID};
use pjbsvd::io::{write_json, write_matrix};
use pjbsvd::problem::Partition;

#[derive(Parser)]
#[command(name = "pjbsvd", version, about = "Joint SVD-type block diagonalization of matrix sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random problem and save it to a directory.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        /// Output problem directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a saved or freshly generated problem.
    Solve {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output directory for U, V, the trace and a summary.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a sweep over n2, eta and seeds for a set of methods.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        /// Methods to run.
        #[arg(long, value_delimiter = ',', default_value = "npdo-gs,npdo-jac,accnpdo-gs,accnpdo-jac")]
        methods: Vec<Method>,
        /// Number of seeds per cell, counting up from --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        /// Output directory for results.csv and manifest.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve, then export |UᴴB_ℓV| for one matrix as a headerless CSV grid.
    Heatmap {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Zero-based matrix index ℓ.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Output CSV file; a manifest is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct GenArgs {
    /// Column count n2; a comma list for bench.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n2: Vec<usize>,
    /// n1 = round(ratio·n2).
    #[arg(long, default_value_t = 1.1)]
    ratio: f64,
    /// Number of matrices.
    #[arg(long = "N", default_value_t = 10)]
    n: usize,
    /// Block sizes, or a single k.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    partition: Vec<usize>,
    /// Use the all-ones partition of size k (sum of --partition).
    #[arg(long)]
    pjsvd: bool,
    /// Noise level; a comma list for bench.
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    eta: Vec<f64>,
    #[arg(long, default_value = "real", value_parser = parse_field)]
    field: FieldKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale of the core normals.
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Load this problem directory instead of generating one.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "gs")]
    updating: Updating,
    #[arg(long, default_value = "none")]
    accel: Accel,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long, default_value_t = 200)]
    inner_max_iter: usize,
    /// Seed of the random initial pair; defaults to one derived from --seed.
    #[arg(long)]
    init_seed: Option<u64>,
    /// Start from the leading identity columns instead.
    #[arg(long, conflicts_with = "init_seed")]
    identity_init: bool,
    /// Record per-sweep subspace geometry in the trace.
    #[arg(long)]
    diagnostics: bool,
}

fn parse_field(s: &str) -> std::result::Result<FieldKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "real" => Ok(FieldKind::Real),
        "complex" => Ok(FieldKind::Complex),
        other => Err(format!("unknown field `{other}` (expected real|complex)")),
    }
}

impl GenArgs {
    fn partition(&self) -> Result<Partition> {
        if self.pjsvd {
            Partition::all_ones(self.partition.iter().sum())
        } else {
            Partition::new(self.partition.clone())
        }
    }

    fn single<T: Copy>(values: &[T], name: &str) -> Result<T> {
        match values {
            [x] => Ok(*x),
            _ => Err(Error::Input(format!("--{name} takes a single value here"))),
        }
    }

    fn config(&self) -> Result<GeneratorConfig> {
        let n2 = Self::single(&self.n2, "n2")?;
        let eta = Self::single(&self.eta, "eta")?;
        let mut g = GeneratorConfig::new(n2, self.n, self.partition()?, eta, self.seed).with_field(self.field);
        g.ratio = self.ratio;
        g.scale = self.scale;
        g.validate()?;
        Ok(g)
    }
}

impl SolverArgs {
    fn options(&self, seed: u64) -> SolveOptions {
        let init = if self.identity_init {
            InitMode::Identity
        } else {
            InitMode::Seeded(self.init_seed.unwrap_or_else(|| init_seed(seed)))
        };
        SolveOptions {
            updating: self.updating,
            accel: self.accel,
            tol: self.tol,
            max_iter: self.max_iter,
            init,
            inner_max_iter: self.inner_max_iter,
            record_diagnostics: self.diagnostics,
        }
    }
}

#[derive(Serialize)]
struct ProblemSource {
    directory: Option<PathBuf>,
    generator: Option<GeneratorConfig>,
}

fn obtain(source: &SourceArgs) -> Result<(AnyProblem, ProblemSource)> {
    match &source.problem {
        Some(dir) => {
            let (p, manifest) = AnyProblem::load(dir)?;
            eprintln!("loaded {} matrices of {}×{} from {}", p.len(), p.n1(), p.n2(), dir.display());
            Ok((
                p,
                ProblemSource {
                    directory: Some(dir.clone()),
                    generator: manifest.generator,
                },
            ))
        }
        None => {
            let cfg = source.gen.config()?;
            let p = AnyProblem::generate(&cfg)?;
            eprintln!("generated {} matrices of {}×{}", p.len(), p.n1(), p.n2());
            Ok((
                p,
                ProblemSource {
                    directory: None,
                    generator: Some(cfg),
                },
            ))
        }
    }
}

#[derive(Serialize)]
struct SolveManifest<'a> {
    command: &'static str,
    library_version: &'static str,
    rng: &'static str,
    source: &'a ProblemSource,
    options: &'a SolveOptions,
    field: FieldKind,
    n1: usize,
    n2: usize,
    partition: &'a Partition,
    converged: bool,
    iterations: usize,
    initial_objective: f64,
    final_objective: f64,
    final_kkt: f64,
    objective_upper_bound: f64,
    solve_seconds: f64,
    files: Vec<String>,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    objective: f64,
    kkt: f64,
    eta_half: f64,
    eta_full: f64,
    sigma_min_h1: f64,
    sigma_min_h2: f64,
    rank_deficient: bool,
    objective_half: f64,
    objective_other: Option<f64>,
    inner_iterations: Option<usize>,
    elapsed_seconds: f64,
}

fn write_trace(path: &Path, trace: &[IterRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, r) in trace.iter().enumerate() {
        w.serialize(TraceRow {
            iteration: i + 1,
            objective: r.objective,
            kkt: r.kkt,
            eta_half: r.eta_half,
            eta_full: r.eta_full,
            sigma_min_h1: r.sigma_min_h1,
            sigma_min_h2: r.sigma_min_h2,
            rank_deficient: r.rank_deficient,
            objective_half: r.objective_half,
            objective_other: r.objective_other,
            inner_iterations: r.subspace.map(|s| s.inner_iterations),
            elapsed_seconds: r.elapsed_seconds,
        })?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_pair<T: Field>(dir: &Path, u: &pjbsvd::Mat<T>, v: &pjbsvd::Mat<T>) -> Result<()> {
    write_matrix(&dir.join("U.pjbd"), u)?;
    write_matrix(&dir.join("V.pjbd"), v)
}

fn report_status(report: &AnyReport) {
    eprintln!(
        "{} after {} iterations: f = {:.12e}, kkt = {:.3e}, {:.3} s",
        if report.converged() { "converged" } else { "not converged" },
        report.iterations(),
        report.final_objective(),
        report.final_kkt(),
        report.elapsed_seconds()
    );
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { gen, out } => {
            let cfg = gen.config()?;
            let p = AnyProblem::generate(&cfg)?;
            p.save(&out, Some(&cfg))?;
            eprintln!("wrote {} matrices of {}×{} to {}", p.len(), p.n1(), p.n2(), out.display());
        }
        Command::Solve { source, solver, out } => {
            let (p, src) = obtain(&source)?;
            let options = solver.options(source.gen.seed);
            let report = p.solve(&options)?;
            report_status(&report);
            mkdir(&out)?;
            match &report {
                AnyReport::Real(r) => write_pair(&out, &r.pair.u, &r.pair.v)?,
                AnyReport::Complex(r) => write_pair(&out, &r.pair.u, &r.pair.v)?,
            }
            write_trace(&out.join("trace.csv"), report.trace())?;
            let manifest = SolveManifest {
                command: "solve",
                library_version: pjbsvd::VERSION,
                rng: RNG_ID,
                source: &src,
                options: &options,
                field: p.field(),
                n1: p.n1(),
                n2: p.n2(),
                partition: p.partition(),
                converged: report.converged(),
                iterations: report.iterations(),
                initial_objective: report.initial_objective(),
                final_objective: report.final_objective(),
                final_kkt: report.final_kkt(),
                objective_upper_bound: p.upper_bound(),
                solve_seconds: report.elapsed_seconds(),
                files: vec!["U.pjbd".into(), "V.pjbd".into(), "trace.csv".into()],
            };
            write_json(&out.join("manifest.json"), &manifest)?;
            eprintln!("wrote solution to {}", out.display());
        }
        Command::Bench {
            gen,
            methods,
            seeds,
            tol,
            max_iter,
            out,
        } => {
            let spec = ExperimentSpec {
                n2_values: gen.n2.clone(),
                eta_values: gen.eta.clone(),
                ratio: gen.ratio,
                n: gen.n,
                partition: gen.partition()?,
                field: gen.field,
                methods,
                tol,
                max_iter,
                seeds: (gen.seed..gen.seed.saturating_add(seeds)).collect(),
                out_dir: out,
            };
            let result = run_experiment(&spec)?;
            let failed = result.rows.iter().filter(|r| !r.converged).count();
            if failed > 0 {
                eprintln!("{failed} runs did not converge within max_iter");
            }
            eprintln!("wrote {} rows to {}", result.rows.len(), result.csv_path.display());
        }
        Command::Heatmap {
            source,
            solver,
            index,
            out,
        } => {
            let (p, src) = obtain(&source)?;
            if index >= p.len() {
                return Err(Error::Input(format!("matrix index {index} out of range for a set of {}", p.len())));
            }
            let options = solver.options(source.gen.seed);
            let report = p.solve(&options)?;
            report_status(&report);
            if let Some(parent) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                mkdir(parent)?;
            }
            match (&p, &report) {
                (AnyProblem::Real(q), AnyReport::Real(r)) => export_heatmap(q, &r.pair, index, &out)?,
                (AnyProblem::Complex(q), AnyReport::Complex(r)) => export_heatmap(q, &r.pair, index, &out)?,
                _ => unreachable!("the report field follows the problem field"),
            };
            let manifest = SolveManifest {
                command: "heatmap",
                library_version: pjbsvd::VERSION,
                rng: RNG_ID,
                source: &src,
                options: &options,
                field: p.field(),
                n1: p.n1(),
                n2: p.n2(),
                partition: p.partition(),
                converged: report.converged(),
                iterations: report.iterations(),
                initial_objective: report.initial_objective(),
                final_objective: report.final_objective(),
                final_kkt: report.final_kkt(),
                objective_upper_bound: p.upper_bound(),
                solve_seconds: report.elapsed_seconds(),
                files: vec![out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()],
            };
            let mut manifest_path = out.clone().into_os_string();
            manifest_path.push(".manifest.json");
            write_json(Path::new(&manifest_path), &manifest)?;
            eprintln!("wrote heatmap of matrix {index} to {}", out.display());
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Dimension { .. } | Error::Contract(_) | Error::NonFinite { .. } => 2,
        Error::Io { .. } | Error::Format { .. } | Error::Json(_) | Error::Csv(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `l2`: command-line driver for the l2lab estimators.
//!
//! Exit codes: 0 success, 2 invalid input, 3 dimension cap exceeded,
//! 4 numerical failure. Reports go to `--out` (written to a temporary file
//! and renamed into place) or to standard output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use l2lab::invariants::{
    determinant_class_diagnostic, fk_determinant, l2_betti, l2_torsion, mapping_cone_check, whitehead_det,
    Evaluation, Schedule, Scheme,
};
use l2lab::io::{
    fmt12, parse_chain_map_file, parse_complex_file, parse_laurent, parse_matrix_file, parse_unit_product_file,
    round_json,
};
use l2lab::oracles::{finite_group_det, mahler_report, LaurentPolynomial};
use l2lab::spectral::{eigenvalues, DEFAULT_CAP};
use l2lab::{Error, ErrorClass};

const CAP_ENV: &str = "L2LAB_CAP";

#[derive(Parser)]
#[command(name = "l2", version, about = "L² invariants of cochain complexes over group rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuglede–Kadison determinant of a square matrix.
    Det {
        #[command(flatten)]
        run: RunArgs,
        /// Read the determinant straight off the spectrum (matrix must be self-adjoint and positive).
        #[arg(long)]
        positive: bool,
    },
    /// L² torsion with per-degree convergence tables.
    Torsion(RunArgs),
    /// L² Betti numbers at the top level.
    Betti(RunArgs),
    /// Determinant of a unit given as a product of elementary matrices and ±g units.
    Whitehead(RunArgs),
    /// Mapping-cone consistency check for a chain map.
    Cone {
        #[command(flatten)]
        run: RunArgs,
        /// Use the full regular representation (finite groups only).
        #[arg(long)]
        exact: bool,
    },
    /// Spectral density step function of a self-adjoint matrix as CSV.
    Density {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SchemeArg::Folner)]
        scheme: SchemeArg,
        #[arg(long)]
        level: u64,
    },
    /// Independent oracles.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Load and check a matrix, complex, unit-product or chain-map file.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Mahler measure of a Laurent polynomial over ℤ^d.
    Mahler {
        /// Terms `[[exponents], num, den], ...`.
        #[arg(long, allow_hyphen_values = true)]
        poly: String,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regular-representation determinant over a finite group.
    Finite {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long)]
    input: PathBuf,
    /// Absolute kernel threshold; default is 1e-10 · max(1, λ_max) per level.
    #[arg(long)]
    threshold: Option<f64>,
    /// Maximum compression dimension; overrides L2LAB_CAP.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Folner)]
    scheme: SchemeArg,
    /// Comma-separated, strictly ascending.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<u64>,
    /// Worker threads for independent levels and degrees.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Folner,
    Quotient,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Folner => Scheme::Folner,
            SchemeArg::Quotient => Scheme::Quotient,
        }
    }
}

/// Echoed into every report. The worker count is left out on purpose: it
/// must not change the bytes of the output.
#[derive(Serialize)]
struct RunConfig {
    command: String,
    input: String,
    scheme: Scheme,
    levels: Vec<u64>,
    threshold: Option<f64>,
    cap: usize,
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Input => 2,
        ErrorClass::Resource => 3,
        ErrorClass::Numerical => 4,
    }
}

fn resolve_cap(flag: Option<usize>) -> l2lab::Result<usize> {
    if let Some(cap) = flag {
        return Ok(cap);
    }
    match std::env::var(CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("{CAP_ENV}={v:?} is not a dimension"))),
        Err(_) => Ok(DEFAULT_CAP),
    }
}

fn read(path: &Path) -> l2lab::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl RunArgs {
    fn schedule(&self) -> l2lab::Result<Schedule> {
        let mut s = Schedule::new(self.scheme.into(), self.levels.clone())?.with_cap(resolve_cap(self.common.cap)?);
        if let Some(t) = self.common.threshold {
            s = s.with_threshold(t)?;
        }
        Ok(s)
    }

    fn config(&self, command: &str, sched: &Schedule) -> RunConfig {
        RunConfig {
            command: command.into(),
            input: self.common.input.display().to_string(),
            scheme: sched.scheme,
            levels: sched.levels.clone(),
            threshold: sched.kernel_threshold,
            cap: sched.cap,
            format: self.common.format,
        }
    }

    /// Runs `f` on a pool with exactly `jobs` workers.
    fn pooled<T: Send>(&self, f: impl FnOnce() -> l2lab::Result<T> + Send) -> l2lab::Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs as usize)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
        pool.install(f)
    }
}

fn json_report(config: &impl Serialize, result: &impl Serialize) -> l2lab::Result<String> {
    let mut v = serde_json::json!({ "config": config, "result": result });
    round_json(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn emit(out: Option<&Path>, text: &str) -> l2lab::Result<()> {
    let io_err = |e: std::io::Error| Error::Parse(format!("writing output: {e}"));
    match out {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io_err),
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(text.as_bytes()).map_err(io_err)?;
            tmp.persist(path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}

fn run(command: Command) -> l2lab::Result<()> {
    match command {
        Command::Det { run, positive } => {
            let (_, a) = parse_matrix_file(&read(&run.common.input)?)?;
            let sched = run.schedule()?;
            let evaluation = if positive { Evaluation::Direct } else { Evaluation::Polar };
            let est = run.pooled(|| fk_determinant(&a, &sched, evaluation))?;
            let text = match run.common.format {
                Format::Json => json_report(&run.config("det", &sched), &est)?,
                Format::Csv => est.to_csv(),
            };
            emit(run.common.out.as_deref(), &text)
        }
        Command::Whitehead(run) => {
            let w = parse_unit_product_file(&read(&run.common.input)?)?;
            let sched = run.schedule()?;
            let est = run.pooled(|| whitehead_det(&w, &sched))?;
            let text = match run.common.format {
                Format::Json => json_report(&run.config("whitehead", &sched), &est)?,
                Format::Csv => est.to_csv(),
            };
            emit(run.common.out.as_deref(), &text)
        }
        Command::Torsion(run) => {
            let c = parse_complex_file(&read(&run.common.input)?)?;
            let sched = run.schedule()?;
            let report = run.pooled(|| l2_torsion(&c, &sched))?;
            let text = match run.common.format {
                Format::Json => json_report(&run.config("torsion", &sched), &report)?,
                Format::Csv => report.to_csv(),
            };
            emit(run.common.out.as_deref(), &text)
        }
        Command::Betti(run) => {
            let c = parse_complex_file(&read(&run.common.input)?)?;
            let sched = run.schedule()?;
            let betti = run.pooled(|| l2_betti(&c, &sched))?;
            let text = match run.common.format {
                Format::Json => {
                    let result = serde_json::json!({
                        "betti": betti,
                        "ranks": c.ranks(),
                        "euler_characteristic": c.euler_characteristic(),
                    });
                    json_report(&run.config("betti", &sched), &result)?
                }
                Format::Csv => {
                    let mut s = String::from("degree,rank,betti\n");
                    for (j, (b, n)) in betti.iter().zip(c.ranks()).enumerate() {
                        s.push_str(&format!("{j},{n},{}\n", fmt12(*b)));
                    }
                    s
                }
            };
            emit(run.common.out.as_deref(), &text)
        }
        Command::Cone { run, exact } => {
            let f = parse_chain_map_file(&read(&run.common.input)?)?;
            let sched = run.schedule()?;
            let check = run.pooled(|| mapping_cone_check(&f, &sched, exact))?;
            let text = match run.common.format {
                Format::Json => json_report(&run.config("cone", &sched), &check)?,
                Format::Csv => format!(
                    "exact,log_source,log_target,log_cone,harmonic_term,residual\n{},{},{},{},{},{}\n",
                    check.exact,
                    fmt12(check.log_source),
                    fmt12(check.log_target),
                    fmt12(check.log_cone),
                    fmt12(check.harmonic_term),
                    fmt12(check.residual)
                ),
            };
            emit(run.common.out.as_deref(), &text)
        }
        Command::Density { input, threshold, cap, format, out, scheme, level } => {
            let (_, a) = parse_matrix_file(&read(&input)?)?;
            let mut sched = Schedule::new(scheme.into(), vec![level])?.with_cap(resolve_cap(cap)?);
            if let Some(t) = threshold {
                sched = sched.with_threshold(t)?;
            }
            let c = l2lab::invariants::compress_at(&a, &sched, level, true)?;
            let density = eigenvalues(&c, sched.cap)?;
            let text = match format {
                Format::Csv => density.to_csv(),
                Format::Json => {
                    let threshold = sched.kernel_threshold.unwrap_or_else(|| density.default_threshold());
                    let result = serde_json::json!({
                        "n_m": density.normalization(),
                        "threshold": threshold,
                        "f_at_0": density.eval(threshold),
                        "determinant_class": determinant_class_diagnostic(&density, threshold),
                        "steps": density.steps(),
                    });
                    let config = RunConfig {
                        command: "density".into(),
                        input: input.display().to_string(),
                        scheme: sched.scheme,
                        levels: sched.levels.clone(),
                        threshold: sched.kernel_threshold,
                        cap: sched.cap,
                        format,
                    };
                    json_report(&config, &result)?
                }
            };
            emit(out.as_deref(), &text)
        }
        Command::Oracle(OracleCommand::Mahler { poly, grid, format, out }) => {
            let p = LaurentPolynomial::from_element(&parse_laurent(&poly)?)?;
            let r = mahler_report(&p, grid)?;
            let text = match format {
                Format::Json => {
                    let config = serde_json::json!({ "command": "oracle mahler", "poly": poly, "grid": grid });
                    json_report(&config, &r)?
                }
                Format::Csv => format!(
                    "value,quadrature,jensen,grid,low_precision\n{},{},{},{},{}\n",
                    fmt12(r.value),
                    fmt12(r.quadrature),
                    r.jensen.map(fmt12).unwrap_or_default(),
                    r.grid,
                    r.low_precision
                ),
            };
            emit(out.as_deref(), &text)
        }
        Command::Oracle(OracleCommand::Finite { input, format, out }) => {
            let (_, a) = parse_matrix_file(&read(&input)?)?;
            let r = finite_group_det(&a)?;
            let text = match format {
                Format::Json => {
                    let config = serde_json::json!({ "command": "oracle finite", "input": input.display().to_string() });
                    json_report(&config, &r)?
                }
                Format::Csv => format!(
                    "order,det,positive_part_det,kernel_dim\n{},{},{},{}\n",
                    r.order,
                    r.det.map(fmt12).unwrap_or_default(),
                    fmt12(r.positive_part_det),
                    fmt12(r.kernel_dim)
                ),
            };
            emit(out.as_deref(), &text)
        }
        Command::Validate { input } => {
            let text = read(&input)?;
            let value: Value = serde_json::from_str(&text)?;
            let summary = if value.get("differentials").is_some() {
                let c = parse_complex_file(&text)?;
                format!(
                    "complex over {} with ranks {:?}, euler characteristic {}",
                    c.spec(),
                    c.ranks(),
                    c.euler_characteristic()
                )
            } else if value.get("factors").is_some() && value.get("size").is_some() {
                let w = parse_unit_product_file(&text)?;
                format!("unit product of {} factors in size {} over {}", w.factors().len(), w.size(), w.spec())
            } else if value.get("maps").is_some() {
                let f = parse_chain_map_file(&text)?;
                format!("chain map over {} in {} degrees", f.source().spec(), f.maps().len())
            } else {
                let (spec, m) = parse_matrix_file(&text)?;
                format!("{}x{} matrix over {spec}", m.rows(), m.cols())
            };
            println!("ok: {summary}");
            Ok(())
        }
    }
}

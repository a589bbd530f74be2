//! `jewel`: command-line access to compatibility checks, noise robustness,
//! incompatibility witnesses and the analytic region bounds.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict,
//! 2 usage or I/O error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use jewel_core::bounds::report;
use jewel_core::compat::{joint_feasibility, robustness, zhu_check, COMPAT_TOL};
use jewel_core::io::{read_json, to_canonical_json, write_json};
use jewel_core::povm::{mub_povms, random_set, MeasurementSet, NoiseKind, VALIDATION_TOL};
use jewel_core::scan::region_scan;
use jewel_core::spectra::{cuboid_vertices, jewel_shape_vertices, vertices_csv};
use jewel_core::witness::{apply_witness, classify, exact_slack, Verdict, WitnessCandidate, WITNESS_TOL};
use jewel_core::SdpOptions;

const TOL_ENV: &str = "JEWEL_SOLVER_TOL";

#[derive(Parser)]
#[command(name = "jewel", version, about = "Joint measurability, noise robustness and incompatibility witnesses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that every POVM in a measurement-set file is valid.
    Validate { file: PathBuf },
    /// Compatibility of a measurement set.
    #[command(subcommand)]
    Compat(CompatCommand),
    /// Zhu's necessary criterion for compatibility.
    Zhu { file: PathBuf },
    /// Incompatibility witnesses.
    #[command(subcommand)]
    Witness(WitnessCommand),
    /// Closed-form bounds for symmetric noise.
    Bounds {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        d: usize,
        /// Outcome counts, comma separated; a single value is repeated g times.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Sample the compatibility region along rays.
    #[command(subcommand)]
    Region(RegionCommand),
    /// Matrix jewel base polytope.
    #[command(subcommand)]
    Jewel(VerticesCommand),
    /// Matrix cuboid base polytope.
    #[command(subcommand)]
    Cuboid(VerticesCommand),
    /// Write POVMs of mutually unbiased bases.
    Mub {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate inputs.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Subcommand)]
enum CompatCommand {
    /// Decide joint measurability.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = COMPAT_TOL)]
        tol: f64,
        /// Print the joint POVM as JSON when compatible.
        #[arg(long)]
        emit_joint: bool,
    },
    /// Largest noise scale along a direction that keeps the set compatible.
    Robustness {
        file: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Direction a1,..,ag with entries in [0, 1]; defaults to all ones.
        #[arg(long, value_delimiter = ',')]
        direction: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum WitnessCommand {
    /// Classify a witness candidate.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Inclusion constant for the negative side (binary shapes).
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Evaluate a witness on a measurement set.
    Apply { witness: PathBuf, set: PathBuf },
}

#[derive(Subcommand)]
enum RegionCommand {
    Scan {
        file: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Number of random directions in addition to the axes and diagonal.
        #[arg(long)]
        directions: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VerticesCommand {
    /// Print the vertices as CSV.
    Vertices {
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        k: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random measurement set from a seed.
    Random {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Balanced,
    Linear,
}

impl From<Model> for NoiseKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Balanced => NoiseKind::Balanced,
            Model::Linear => NoiseKind::Linear,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Sdp,
    Both,
}

/// Whether the computed verdict is positive (exit 0) or negative (exit 1).
enum Outcome {
    Positive,
    Negative,
}

fn solver_options() -> Result<SdpOptions> {
    match std::env::var(TOL_ENV) {
        Ok(v) => {
            let tol: f64 = v.trim().parse().with_context(|| format!("{TOL_ENV}={v} is not a number"))?;
            if !(tol > 0.0 && tol < 1.0) {
                bail!("{TOL_ENV} must lie in (0, 1), got {tol}");
            }
            Ok(SdpOptions::with_tol(tol))
        }
        Err(_) => Ok(SdpOptions::default()),
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(path).with_context(|| format!("reading {}", path.display()))
}

fn expand_shape(g: usize, k: &[usize]) -> Result<Vec<usize>> {
    match k.len() {
        1 => Ok(vec![k[0]; g]),
        n if n == g => Ok(k.to_vec()),
        n => bail!("--k has {n} entries but --g is {g}"),
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>().join(", ")
}

fn run(cli: Cli) -> Result<Outcome> {
    let opts = solver_options()?;
    match cli.command {
        Command::Validate { file } => {
            let set: MeasurementSet = load(&file)?;
            let shape: Vec<String> = set.shape().iter().map(|k| k.to_string()).collect();
            println!("g = {}, d = {}, k = ({})", set.len(), set.dim(), shape.join(","));
            let mut ok = true;
            for (i, r) in set.validate(VALIDATION_TOL)?.iter().enumerate() {
                for v in &r.violations {
                    ok = false;
                    println!("povm {i}: {v}");
                }
            }
            println!("{}", if ok { "valid" } else { "invalid" });
            Ok(if ok { Outcome::Positive } else { Outcome::Negative })
        }
        Command::Compat(CompatCommand::Check { file, tol, emit_joint }) => {
            let set: MeasurementSet = load(&file)?;
            let v = joint_feasibility(&set, tol, &opts)?;
            println!("{}", if v.compatible { "compatible" } else { "incompatible" });
            println!("margin = {:.6e}", v.margin);
            if v.compatible {
                println!("marginal error = {:.3e}", v.marginal_error);
            }
            if emit_joint {
                if let Some(joint) = &v.joint {
                    println!("{}", to_canonical_json(joint)?);
                }
            }
            Ok(if v.compatible { Outcome::Positive } else { Outcome::Negative })
        }
        Command::Compat(CompatCommand::Robustness { file, model, direction }) => {
            let set: MeasurementSet = load(&file)?;
            let dir = direction.unwrap_or_else(|| vec![1.0; set.len()]);
            let r = robustness(&set, model.into(), &dir, &opts)?;
            println!("t* = {:.5}", r.t);
            println!("s = ({})", fmt_vec(&r.weights));
            Ok(Outcome::Positive)
        }
        Command::Zhu { file } => {
            let set: MeasurementSet = load(&file)?;
            let z = zhu_check(&set, 1e-6, &opts)?;
            println!("zhu value = {:.5} (1 + value vs d = {})", z.value, set.dim());
            if z.incompatible_certified {
                println!("incompatible (certified)");
                Ok(Outcome::Negative)
            } else {
                println!("inconclusive");
                Ok(Outcome::Positive)
            }
        }
        Command::Witness(WitnessCommand::Check { file, method, theta }) => {
            let w: WitnessCandidate = load(&file)?;
            let mut negative = false;
            if method != Method::Sdp {
                let slack = exact_slack(&w)?;
                let is = slack >= -WITNESS_TOL;
                negative |= !is;
                println!("exact: {} (slack {slack:.3e})", if is { "witness" } else { "not a witness" });
            }
            if method != Method::Exact {
                let c = classify(&w, theta, 1e-6, &opts)?;
                let verdict = match c.verdict {
                    Verdict::Witness => "witness",
                    Verdict::NotWitness => "not a witness",
                    Verdict::Indeterminate => "indeterminate",
                };
                negative |= c.verdict == Verdict::NotWitness;
                println!("rho = {:.5}", c.rho);
                match c.theta_used {
                    Some(th) => println!("sdp: {verdict} (theta = {th:.5})"),
                    None => println!("sdp: {verdict}"),
                }
            }
            Ok(if negative { Outcome::Negative } else { Outcome::Positive })
        }
        Command::Witness(WitnessCommand::Apply { witness, set }) => {
            let w: WitnessCandidate = load(&witness)?;
            let s: MeasurementSet = load(&set)?;
            s.ensure_valid(VALIDATION_TOL)?;
            let r = apply_witness(&w, &s, 1e-9)?;
            println!("max_eig = {:.5}", r.max_eig);
            if r.certified_incompatible {
                println!("incompatible (certified)");
                Ok(Outcome::Negative)
            } else {
                println!("not certified");
                Ok(Outcome::Positive)
            }
        }
        Command::Bounds { g, d, k, json } => {
            let r = report(g, d, &expand_shape(g, &k)?)?;
            if json {
                println!("{}", to_canonical_json(&r)?);
            } else {
                print!("{}", r.to_text());
            }
            Ok(Outcome::Positive)
        }
        Command::Region(RegionCommand::Scan { file, model, directions, out, seed }) => {
            let set: MeasurementSet = load(&file)?;
            let label = file.file_name().map_or_else(|| file.display().to_string(), |n| n.to_string_lossy().into_owned());
            let scan = region_scan(&set, &label, model.into(), directions, seed, &opts)?;
            std::fs::write(&out, scan.to_csv()).with_context(|| format!("writing {}", out.display()))?;
            let failed = scan.rows.iter().filter(|r| r.t.is_none()).count();
            println!("seed = {seed}");
            println!("wrote {} rows to {} ({failed} failed)", scan.rows.len(), out.display());
            Ok(Outcome::Positive)
        }
        Command::Jewel(VerticesCommand::Vertices { k }) => {
            print!("{}", vertices_csv(&jewel_shape_vertices(&k)?));
            Ok(Outcome::Positive)
        }
        Command::Cuboid(VerticesCommand::Vertices { k }) => {
            print!("{}", vertices_csv(&cuboid_vertices(&k)?));
            Ok(Outcome::Positive)
        }
        Command::Mub { d, count, out } => {
            let set = mub_povms(d, count)?;
            write_json(&out, &set).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {count} MUB POVMs in dimension {d} to {}", out.display());
            Ok(Outcome::Positive)
        }
        Command::Gen(GenCommand::Random { g, d, k, seed, out }) => {
            let set = random_set(d, &expand_shape(g, &k)?, seed)?;
            write_json(&out, &set).with_context(|| format!("writing {}", out.display()))?;
            println!("seed = {seed}");
            println!("wrote random set g = {g}, d = {d} to {}", out.display());
            Ok(Outcome::Positive)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Positive) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .chain()
                .any(|c| c.downcast_ref::<jewel_core::Error>().is_some_and(|e| e.is_numerical()));
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}

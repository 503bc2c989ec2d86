use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use convamp::ensembles::{MatrixContainer, MatvecPath};
use convamp::experiment::{
    bench_matvec, run_se_sweep, run_single, run_sweep, svg, verify_permutation, write_se_csv, write_sweep_csv,
    ExperimentConfig, MatrixSpec,
};
use convamp::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "convamp", version, about = "Multi-layer AMP and state evolution for convolutional sensing matrices")]
struct Cli {
    /// Worker threads for trial-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG charts next to the output file.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// AMP trials and SE for every sweep point, aggregated per iteration.
    RunSweep(RunArgs),
    /// Per-layer state-evolution traces for every sweep point.
    RunSe(RunArgs),
    /// One AMP instance at the first sweep point next to its SE prediction.
    RunAmp {
        #[arg(long)]
        config: PathBuf,
        /// Per-iteration CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Samples an MCC matrix and checks its permuted block-circulant layout.
    VerifyPermutation {
        #[arg(value_name = "D")]
        d: usize,
        #[arg(value_name = "P")]
        p: usize,
        q: usize,
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Times dense, sparse and FFT products and cross-checks them.
    BenchMatvec {
        #[arg(value_name = "D")]
        d: usize,
        #[arg(value_name = "P")]
        p: usize,
        q: usize,
        k: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Samples a matrix and writes it as a JSON container.
    GenMatrix(GenArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["mcc", "dense", "config"])))]
struct GenArgs {
    /// MCC dimensions `D,P,q,k`.
    #[arg(long, value_delimiter = ',', value_name = "D,P,q,k")]
    mcc: Option<Vec<usize>>,
    /// Per-tap variances for a structured MCC matrix (sets `k`).
    #[arg(long, value_delimiter = ',', requires = "mcc")]
    profile: Option<Vec<f64>>,
    /// Dense Gaussian dimensions `rows,cols`.
    #[arg(long, value_delimiter = ',', value_name = "ROWS,COLS")]
    dense: Option<Vec<usize>>,
    /// Entry variance of a dense matrix (default `1/cols`).
    #[arg(long, requires = "dense")]
    variance: Option<f64>,
    /// Take the matrix of a layer from an experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Layer index (1 = output layer) when reading from a config.
    #[arg(long, default_value_t = 1, requires = "config")]
    layer: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Diverged { .. } | Error::NumericFailure(_) | Error::Internal(_) => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, msg: e.to_string() }
    }
}

fn config_error(msg: String) -> Failure {
    Failure { code: 2, msg }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// `results.csv` -> `results.<tag>.<ext>` in the same directory.
fn sibling(out: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure { code: 2, msg: format!("cannot create {}: {e}", path.display()) })
}

fn write_svg(path: &Path, body: String) -> Result<(), Failure> {
    std::fs::write(path, body)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_run_sweep(args: RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config, args.seed)?;
    let out = run_sweep(&cfg)?;
    write_sweep_csv(&out.rows, create(&args.out)?)?;
    eprintln!("wrote {} rows to {}", out.rows.len(), args.out.display());
    if let Some(dense) = &out.dense_rows {
        let path = sibling(&args.out, "dense", "csv");
        write_sweep_csv(dense, create(&path)?)?;
        eprintln!("wrote dense twin to {}", path.display());
    }
    if out.diverged_trials > 0 {
        eprintln!("warning: {} trials stopped on a non-finite iterate", out.diverged_trials);
    }
    if args.svg {
        write_svg(&sibling(&args.out, "iterations", "svg"), svg::iteration_chart(&out.rows))?;
        write_svg(&sibling(&args.out, "beta", "svg"), svg::beta_chart(&out.rows))?;
    }
    Ok(())
}

fn cmd_run_se(args: RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config, args.seed)?;
    let rows = run_se_sweep(&cfg)?;
    write_se_csv(&rows, create(&args.out)?)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    if args.svg {
        write_svg(&sibling(&args.out, "se", "svg"), svg::se_chart(&rows))?;
    }
    Ok(())
}

fn cmd_run_amp(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = load_config(config, seed)?;
    let run = run_single(&cfg)?;
    let mut text = String::from("iter,mse_amp,mse_se\n");
    for (i, m) in run.amp.mse.iter().enumerate() {
        let se = run.se.mse[(i + 1).min(run.se.mse.len() - 1)];
        text.push_str(&format!("{},{m:.16e},{se:.16e}\n", i + 1));
    }
    match out {
        Some(path) => {
            std::fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    let last = run.amp.mse.last().copied().unwrap_or(f64::NAN);
    eprintln!(
        "beta={} iterations={} converged={} final mse={last:.4e} (SE {:.4e})",
        run.beta,
        run.amp.iterations_run,
        run.amp.converged,
        run.se.mse.last().copied().unwrap_or(f64::NAN)
    );
    match run.diverged {
        Some(msg) => Err(Failure { code: 3, msg }),
        None => Ok(()),
    }
}

fn cmd_gen_matrix(args: GenArgs) -> Result<(), Failure> {
    let spec = if let Some(dims) = &args.mcc {
        if dims.len() != 4 {
            return Err(config_error(format!("--mcc takes D,P,q,k, got {} values", dims.len())));
        }
        let (d, p, q, k) = (dims[0], dims[1], dims[2], dims[3]);
        if let Some(profile) = &args.profile {
            if profile.len() != k {
                return Err(config_error(format!("profile has {} entries but k = {k}", profile.len())));
            }
        }
        MatrixSpec::Mcc { d, p, q, k, variance_profile: args.profile.clone() }
    } else if let Some(dims) = &args.dense {
        if dims.len() != 2 {
            return Err(config_error(format!("--dense takes ROWS,COLS, got {} values", dims.len())));
        }
        MatrixSpec::Dense { rows: dims[0], cols: dims[1], variance: args.variance }
    } else {
        let path = args.config.as_deref().expect("clap enforces one source");
        let cfg = load_config(path, None)?;
        let point = cfg.points()[0];
        let specs = cfg.matrices_at(&point)?;
        specs
            .get(args.layer.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| config_error(format!("layer {} out of range 1..={}", args.layer, specs.len())))?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let op = spec.sample(MatvecPath::Sparse, &mut rng)?;
    let container = match (op.as_mcc(), &spec) {
        (Some(m), _) => MatrixContainer::from_mcc(m, Some(args.seed)),
        (None, MatrixSpec::Dense { cols, variance, .. }) => {
            MatrixContainer::from_dense(&op.to_dense(), variance.unwrap_or(1.0 / *cols as f64), Some(args.seed))
        }
        (None, _) => unreachable!("MCC specs sample MCC operators"),
    };
    container.save(&args.out)?;
    eprintln!("wrote {}x{} matrix to {}", op.rows(), op.cols(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::RunSweep(args) => cmd_run_sweep(args),
        Command::RunSe(args) => cmd_run_se(args),
        Command::RunAmp { config, out, seed } => cmd_run_amp(&config, out, seed),
        Command::VerifyPermutation { d, p, q, k, seed } => {
            let report = verify_permutation(d, p, q, k, seed)?;
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure { code: 1, msg: "permuted matrix is not block-circulant".into() })
            }
        }
        Command::BenchMatvec { d, p, q, k, reps, seed } => {
            let report = bench_matvec(d, p, q, k, reps, seed)?;
            print!("{report}");
            if report.sparse_rel_err > 1e-10 || report.fft_rel_err > 1e-10 {
                return Err(Failure { code: 1, msg: "matvec paths disagree".into() });
            }
            Ok(())
        }
        Command::GenMatrix(args) => cmd_gen_matrix(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

//! `ldlc`: generate LDLC parity-check matrices and run decoding experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldlc_core::convergence::{appendix_recursion, capacity_snr_db};
use ldlc_core::sim::{
    self, parse_snr_points, run_complexity_report, run_convergence_experiment, run_ser_sweep_with,
    ExperimentConfig,
};
use ldlc_core::{
    generate_parity_check, parse_h, serialize_h, validate_parity_check, Error, SelectionWindow,
    SparseParityCheck, Structure, Variant,
};

#[derive(Parser)]
#[command(name = "ldlc", version, about = "Low density lattice code simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a parity-check matrix and write it in the H text format.
    GenMatrix(GenMatrix),
    /// Symbol error rate sweep over SNR points.
    Ser(Ser),
    /// Average message-variance trace at one SNR.
    Converge(Converge),
    /// Pairwise-product counts per variable node and iteration.
    Complexity(Complexity),
}

#[derive(Args)]
struct GenMatrix {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `triangular` (supports hypercube shaping) or `regular`.
    #[arg(long, default_value = "triangular")]
    structure: Structure,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    /// Matrix file in the H text format.
    #[arg(long)]
    matrix: PathBuf,
    /// Alphabet size per coordinate.
    #[arg(long, default_value_t = 8)]
    m: u32,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Selection window on |h| = 1 edges.
    #[arg(long)]
    eps_unit: Option<f64>,
    /// Selection window on |h| = 1/sqrt(d) edges.
    #[arg(long)]
    eps_light: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Ser {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "proposed")]
    decoder: Variant,
    /// `start:step:stop` or a comma-separated list, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: String,
    /// Maximum frames per SNR point.
    #[arg(long, default_value_t = 1000)]
    frames: u64,
    #[arg(long, default_value_t = 100)]
    target_errors: u64,
    /// Fill the wall_s column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Converge {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "proposed")]
    decoder: Variant,
    /// SNR in dB; defaults to 1.5 dB above the uniform-input capacity at rate log2(M).
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 100)]
    frames: u64,
}

#[derive(Args)]
struct Complexity {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 8)]
    m: u32,
    #[arg(long, default_value_t = 25.0, allow_hyphen_values = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn load_matrix(path: &Path) -> Result<SparseParityCheck, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    parse_h(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_with(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> ldlc_core::Result<()>,
) -> Result<(), Failure> {
    let mut out = output(path)?;
    f(&mut out).map_err(|e| match (e, path) {
        (Error::Io(io), Some(p)) => io_failure(p, io),
        (e, _) => e.into(),
    })?;
    out.flush()
        .map_err(|e| io_failure(path.unwrap_or(Path::new("<stdout>")), e))
}

fn windows(common: &Common, d: usize) -> Option<SelectionWindow> {
    if common.eps_unit.is_none() && common.eps_light.is_none() {
        return None;
    }
    let default = SelectionWindow::default_for(d);
    Some(SelectionWindow {
        unit: common.eps_unit.unwrap_or(default.unit),
        light: common.eps_light.unwrap_or(default.light),
    })
}

fn experiment(
    common: &Common,
    h: &SparseParityCheck,
    variant: Variant,
    snr: Vec<f64>,
) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(common.m, common.iters, variant, snr);
    config.seed = common.seed;
    config.threads = common.threads;
    config.windows = windows(common, h.d());
    config
}

fn gen_matrix(args: GenMatrix) -> Result<(), Failure> {
    let h = generate_parity_check(args.n, args.d, args.seed, args.structure)?;
    let report = validate_parity_check(&h, args.structure);
    if !report.all_passed() {
        return Err(Failure::Config(format!(
            "generated matrix failed validation: {report:?}"
        )));
    }
    let text = serialize_h(&h);
    write_with(args.out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))
}

fn ser(args: Ser) -> Result<(), Failure> {
    let h = load_matrix(&args.common.matrix)?;
    let mut config = experiment(
        &args.common,
        &h,
        args.decoder,
        parse_snr_points(&args.snr_db)?,
    );
    config.max_frames = args.frames;
    config.target_errors = args.target_errors;
    config.timing = args.timing;
    let records = run_ser_sweep_with(&h, &config, |r| {
        eprintln!(
            "snr {} dB: {} errors in {} frames, ser {:.3e}",
            r.snr_db, r.errors, r.frames, r.ser
        )
    })?;
    write_with(args.common.out.as_deref(), |w| {
        sim::write_ser_csv(&records, w)
    })
}

fn converge(args: Converge) -> Result<(), Failure> {
    let h = load_matrix(&args.common.matrix)?;
    let snr = match args.snr_db {
        Some(s) => s,
        None => {
            let capacity = capacity_snr_db(args.common.m, (args.common.m as f64).log2());
            eprintln!("capacity at rate log2(M): {capacity:.3} dB");
            capacity + 1.5
        }
    };
    let config = experiment(&args.common, &h, args.decoder, vec![snr]);
    let trace = run_convergence_experiment(&h, &config, args.frames)?;
    if args.common.iters >= 3 && h.d() >= 5 {
        // the recursion is stated for d >= 5 and starts at iteration 3
        let bounds = appendix_recursion(h.d(), args.common.iters, trace.sigma2)?;
        let violations = (3..=args.common.iters)
            .filter(|&k| trace.iterations[k - 1].v_light > bounds.v_light(k))
            .count();
        eprintln!("iterations above the light-edge recursion bound: {violations}");
    }
    write_with(args.common.out.as_deref(), |w| trace.write_csv(w))
}

fn complexity(args: Complexity) -> Result<(), Failure> {
    let h = load_matrix(&args.matrix)?;
    if args.iters == 0 {
        return Err(Failure::Config("iterations must be at least 1".into()));
    }
    let rows = run_complexity_report(&h, args.iters, args.m, args.snr_db, args.seed)?;
    write_with(args.out.as_deref(), |w| sim::write_complexity_csv(&rows, w))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenMatrix(a) => gen_matrix(a),
        Command::Ser(a) => ser(a),
        Command::Converge(a) => converge(a),
        Command::Complexity(a) => complexity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

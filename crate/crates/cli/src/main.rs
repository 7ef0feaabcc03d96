use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcbf::sim::{results_csv, Experiment, ExperimentConfig, ExperimentKind, Progress};
use qcbf::{
    decode, AffineCoeffs, DecoderSpec, DenseBits, ErrorVector, NcSyndromeTable, QcMdpcCode,
    Variant, MLD_ITER_MAX, OOP_AFFINE_ITER_MAX,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Bit-flipping decoders for QC-MDPC codes, with near-codeword handling.
#[derive(Parser)]
#[command(name = "qcbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random double-circulant code.
    GenCode(GenCodeArgs),
    /// Build the near-codeword syndrome table of a code.
    BuildTable(BuildTableArgs),
    /// Decode one error or syndrome.
    Decode(DecodeArgs),
    /// Run a DFR sweep over error weights.
    Dfr(SweepArgs),
    /// Run a failure-rate sweep over almost near-codewords.
    AlmostNc(SweepArgs),
    /// Histogram the counters of bad and suspicious bits.
    CountersDist(SweepArgs),
}

#[derive(Args)]
struct GenCodeArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    v: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildTableArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderName {
    BfMax,
    Mld,
    OopFixed,
    OopAffine,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    /// Error support as a comma-separated list, or @file.
    #[arg(
        long,
        conflicts_with = "syndrome",
        required_unless_present = "syndrome"
    )]
    error: Option<String>,
    /// Syndrome support as a comma-separated list, or @file.
    #[arg(long)]
    syndrome: Option<String>,
    #[arg(long, value_enum, default_value = "bf-max")]
    decoder: DecoderName,
    #[arg(long)]
    nc_aware: bool,
    /// Also consult the table before the first iteration.
    #[arg(long)]
    check_before_first_iter: bool,
    /// Prebuilt table for --nc-aware; built on the fly when omitted.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget. bf-max defaults to 2t, which needs --t when
    /// decoding a bare syndrome.
    #[arg(long)]
    iter_max: Option<usize>,
    /// Error weight used for the bf-max default budget.
    #[arg(long)]
    t: Option<usize>,
    /// oop-fixed thresholds, comma-separated; Table 1 row for r = 2003 when
    /// omitted.
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<u32>>,
    /// oop-affine coefficients as a,b,min_thr.
    #[arg(long, value_delimiter = ',')]
    affine: Option<Vec<f64>>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "QCBF_WORKERS")]
    workers: Option<usize>,
    /// Override the config's progress interval (trials).
    #[arg(long)]
    progress: Option<u64>,
    /// Print results as JSON on stdout.
    #[arg(long)]
    json: bool,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<qcbf::Error> for CliError {
    fn from(e: qcbf::Error) -> Self {
        use qcbf::Error as E;
        let code = match e {
            E::Io(_) | E::InconsistentSuccess { .. } | E::SamplerExhausted { .. } | E::Stalled => {
                EXIT_RUNTIME
            }
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenCode(a) => gen_code(a),
        Command::BuildTable(a) => build_table(a),
        Command::Decode(a) => decode_cmd(a),
        Command::Dfr(a) => sweep(a, ExperimentKind::DfrSweep),
        Command::AlmostNc(a) => sweep(a, ExperimentKind::AlmostNcSweep),
        Command::CountersDist(a) => sweep(a, ExperimentKind::CounterDist),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn gen_code(a: GenCodeArgs) -> CliResult<u8> {
    let code = QcMdpcCode::random(a.r, a.v, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    match a.out {
        Some(path) => code.save(path)?,
        None => print!("{}", code.to_json()),
    }
    Ok(0)
}

fn build_table(a: BuildTableArgs) -> CliResult<u8> {
    let code = QcMdpcCode::load(&a.code)?;
    let table = NcSyndromeTable::build(&code)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    table.write_to(&mut w)?;
    w.flush()?;
    eprintln!(
        "{} entries, r = {}, v = {}",
        table.len(),
        table.r(),
        table.v()
    );
    Ok(0)
}

/// Parses `1,5,9` or `@path` (whitespace or commas) into a list of indices.
fn parse_support(arg: &str) -> CliResult<Vec<usize>> {
    let text = match arg.strip_prefix('@') {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{path}: {e}")))?
        }
        None => arg.to_string(),
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::usage(format!("bad index {s:?}")))
        })
        .collect()
}

fn decoder_spec(a: &DecodeArgs, code: &QcMdpcCode, t: Option<usize>) -> CliResult<DecoderSpec> {
    let mut spec = match a.decoder {
        DecoderName::BfMax => {
            let budget = a.iter_max.or(t.map(|t| (2 * t).max(1))).ok_or_else(|| {
                CliError::usage("bf-max on a bare syndrome needs --iter-max or --t")
            })?;
            DecoderSpec::new(Variant::BfMax, budget)
        }
        DecoderName::Mld => DecoderSpec::new(Variant::Mld, a.iter_max.unwrap_or(MLD_ITER_MAX)),
        DecoderName::OopFixed => {
            let thresholds = match &a.thresholds {
                Some(t) => t.clone(),
                None => qcbf::oop_thresholds_r2003(code.v())
                    .ok_or_else(|| {
                        CliError::usage(format!("no default thresholds for v = {}", code.v()))
                    })?
                    .to_vec(),
            };
            let budget = a.iter_max.unwrap_or(thresholds.len());
            DecoderSpec::new(Variant::OopFixed { thresholds }, budget)
        }
        DecoderName::OopAffine => {
            let c = a
                .affine
                .as_deref()
                .ok_or_else(|| CliError::usage("oop-affine needs --affine a,b,min_thr"))?;
            if c.len() != 3 {
                return Err(CliError::usage(
                    "--affine takes exactly three values a,b,min_thr",
                ));
            }
            if c[2] < 0.0 || c[2].fract() != 0.0 {
                return Err(CliError::usage("min_thr must be a non-negative integer"));
            }
            let coeffs = AffineCoeffs {
                a: c[0],
                b: c[1],
                min_thr: c[2] as u32,
            };
            DecoderSpec::oop_affine(coeffs, a.iter_max.unwrap_or(OOP_AFFINE_ITER_MAX))
        }
    };
    spec.nc_aware = a.nc_aware;
    spec.check_before_first_iter = a.check_before_first_iter;
    spec.validate(code.v())?;
    Ok(spec)
}

fn decode_cmd(a: DecodeArgs) -> CliResult<u8> {
    let code = QcMdpcCode::load(&a.code)?;
    let r = code.r();
    let (s0, t) = match (&a.error, &a.syndrome) {
        (Some(e), _) => {
            let e = ErrorVector::from_support(r, parse_support(e)?)?;
            (code.syndrome(&e)?, Some(e.weight()))
        }
        (None, Some(s)) => {
            let support = parse_support(s)?;
            if let Some(&bad) = support.iter().find(|&&i| i >= r) {
                return Err(CliError::usage(format!("syndrome index {bad} >= r = {r}")));
            }
            let support: Vec<u32> = support.iter().map(|&i| i as u32).collect();
            let mut bits = DenseBits::zeros(r);
            bits.xor_support(&support);
            if bits.weight() != support.len() {
                return Err(CliError::usage("syndrome support has repeated indices"));
            }
            let t = a.t.or(bits.is_zero().then_some(0));
            (bits, t)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let spec = decoder_spec(&a, &code, t)?;
    let table = if spec.nc_aware {
        Some(match &a.table {
            Some(path) => load_table(path, &code)?,
            None => NcSyndromeTable::build(&code)?,
        })
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let out = decode(&code, &s0, &spec, &mut rng, table.as_ref())?;
    let status = if out.is_success() {
        "success"
    } else {
        "failure"
    };
    let support = out.estimate.support();
    if a.json {
        let doc = serde_json::json!({
            "status": status,
            "iterations": out.iterations_used,
            "nc_hit": out.nc_table_hit,
            "nc_index": out.nc_index_hit,
            "estimate": support,
        });
        println!("{doc}");
    } else {
        println!("{status} after {} iterations", out.iterations_used);
        if let Some(k) = out.nc_index_hit {
            println!("near-codeword table hit at index {k}");
        }
        let list: Vec<String> = support.iter().map(u32::to_string).collect();
        println!("estimate: {}", list.join(","));
    }
    Ok(if out.is_success() { 0 } else { EXIT_FAILURE })
}

fn load_table(path: &Path, code: &QcMdpcCode) -> CliResult<NcSyndromeTable> {
    let table = NcSyndromeTable::read_from(BufReader::new(File::open(path)?))?;
    if !table.matches_code(code) {
        return Err(CliError::usage(format!(
            "{} was built for a different code",
            path.display()
        )));
    }
    Ok(table)
}

fn sweep(a: SweepArgs, kind: ExperimentKind) -> CliResult<u8> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if config.experiment != kind {
        return Err(CliError::usage(format!(
            "{} holds a {} config, not {}",
            a.config.display(),
            config.experiment.name(),
            kind.name()
        )));
    }
    if let Some(w) = a.workers {
        config.workers = w;
    }
    if let Some(p) = a.progress {
        config.progress_interval = p;
    }
    eprint!("{}", config.resolved().to_json_pretty());
    let base = a.config.parent().filter(|p| !p.as_os_str().is_empty());
    let experiment = Experiment::with_base_dir(config, base)?;
    let mut report = |p: &Progress| {
        let nc = if p.nc_aware { "+nc" } else { "" };
        eprintln!(
            "[v={} {}{nc} @ {}] trials {} failures {}",
            p.v, p.decoder, p.sweep_value, p.trials, p.failures
        );
    };
    let (contents, json) = match kind {
        ExperimentKind::CounterDist => {
            let h = experiment.run_counter_dist()?;
            (
                h.to_csv(),
                serde_json::to_string(&h).expect("histogram serializes"),
            )
        }
        _ => {
            let rows = experiment.run_sweep(&mut report)?;
            (
                results_csv(&rows),
                serde_json::to_string(&rows).expect("rows serialize"),
            )
        }
    };
    match experiment.write_output(&contents)? {
        Some(path) => eprintln!("wrote {}", path.display()),
        None if !a.json => print!("{contents}"),
        None => {}
    }
    if a.json {
        println!("{json}");
    }
    Ok(0)
}

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use svcond::bounds::{build_report, ReportContext};
use svcond::condenser::{condense_stream, CondenserMap};
use svcond::sv_models::{iid_biased, PotentialStrongSV, PrefixAdversary};
use svcond::verify::{run_suite, VerifyConfig, SUITES};
use svcond::{attack_condenser, JointDistribution};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "svc", version, about = "Condensers, adversaries and exact entropy analysis for SV sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the blockwise syndrome condenser f_d to a byte stream.
    Condense {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=8))]
        d: u32,
        /// Input file (stdin if omitted).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Output file (stdout if omitted).
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Report entropies and check every applicable bound for a distribution.
    Analyze {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Either a block parameter d or a condenser table file.
        #[arg(long)]
        condenser: Option<String>,
        /// Seed count for slicing the condenser into a seeded extractor.
        #[arg(long = "D", requires = "condenser")]
        seeds: Option<u32>,
    },
    /// Run the greedy SV adversary against a condenser table.
    Attack {
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        delta: f64,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 8)]
        max_n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit JSON instead of one line per property.
        #[arg(long)]
        json: bool,
    },
    /// Write a distribution file.
    GenSource {
        #[arg(long, value_enum)]
        kind: SourceKind,
        #[arg(long)]
        n: Option<u32>,
        /// Pr[bit = 1] for iid sources.
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Adversary file, or an attack report containing one.
        #[arg(long)]
        adversary: Option<PathBuf>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceKind {
    Iid,
    Potential,
    AdversaryFile,
}

/// Failure reported with a message and an exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<svcond::Error> for Failure {
    fn from(e: svcond::Error) -> Self {
        usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        usage(e.to_string())
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: svcond::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn verdict(ok: bool) -> u8 {
    if ok {
        0
    } else {
        EXIT_FAIL
    }
}

fn cmd_condense(d: u32, input: Option<&Path>, output: Option<&Path>) -> Result<u8, Failure> {
    let reader: Box<dyn Read> = match input {
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdin().lock()),
    };
    let writer: Box<dyn Write> = match output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let s = condense_stream(d, reader, writer)?;
    eprintln!(
        "d: {} input_bytes: {} blocks: {} output_bytes: {} dropped: {} input_tail: {} output_tail: {}",
        s.d,
        s.input_bytes,
        s.blocks,
        s.output_bytes,
        s.dropped.total(),
        s.dropped.input_tail,
        s.dropped.output_tail
    );
    Ok(0)
}

fn load_condenser(arg: &str, n: u32) -> Result<CondenserMap, Failure> {
    if let Ok(d) = arg.parse::<u32>() {
        if !(2..=8).contains(&d) {
            return Err(usage(format!("--condenser: d must be in 2..=8, got {d}")));
        }
        let block = (1u32 << d) - 1;
        if !n.is_multiple_of(block) {
            return Err(usage(format!(
                "--condenser {d}: distribution width {n} is not a multiple of the block length {block}"
            )));
        }
        return Ok(CondenserMap::structured(d, n / block)?);
    }
    let path = Path::new(arg);
    with_path(path, CondenserMap::from_json(&read_text(path)?))
}

fn cmd_analyze(dist: &Path, delta: f64, condenser: Option<&str>, seeds: Option<u32>) -> Result<u8, Failure> {
    let mu = with_path(dist, JointDistribution::from_json(&read_text(dist)?))?;
    let context = ReportContext {
        condenser: condenser.map(|c| load_condenser(c, mu.n())).transpose()?,
        seeds,
    };
    let report = build_report(&mu, &context, delta)?;
    println!("{}", report.to_json());
    Ok(verdict(report.all_hold))
}

fn cmd_attack(function: &Path, delta: f64) -> Result<u8, Failure> {
    let f = with_path(function, CondenserMap::from_json(&read_text(function)?))?;
    let result = attack_condenser(&f, delta)?;
    print_json(&result.to_json_value())?;
    Ok(verdict(result.holds()))
}

fn cmd_verify(suite: &str, max_n: u32, seed: u64, json: bool) -> Result<u8, Failure> {
    let outcome = run_suite(suite, &VerifyConfig { max_n, seed })?;
    if json {
        print_json(&outcome)?;
    } else {
        print!("{}", outcome.render());
        println!("{} {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.suite);
    }
    Ok(verdict(outcome.passed))
}

fn load_adversary(path: &Path) -> Result<PrefixAdversary, Failure> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: malformed file: {e}", path.display())))?;
    let inner = match value.get("adversary") {
        Some(a) => a.to_string(),
        None => text,
    };
    with_path(path, PrefixAdversary::from_json(&inner))
}

fn require<T>(value: Option<T>, flag: &str, kind: &str) -> Result<T, Failure> {
    value.ok_or_else(|| usage(format!("--kind {kind} requires --{flag}")))
}

fn cmd_gen_source(
    kind: SourceKind,
    n: Option<u32>,
    p1: Option<f64>,
    delta: Option<f64>,
    seed: u64,
    adversary: Option<&Path>,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let mu = match kind {
        SourceKind::Iid => iid_biased(require(n, "n", "iid")?, require(p1, "p1", "iid")?)?,
        SourceKind::Potential => {
            PotentialStrongSV::random(require(n, "n", "potential")?, require(delta, "delta", "potential")?, seed)?
                .distribution()
        }
        SourceKind::AdversaryFile => load_adversary(require(adversary, "adversary", "adversary-file")?)?.materialize(),
    };
    write_output(output, &mu.to_json())?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Condense { d, input, output } => cmd_condense(d, input.as_deref(), output.as_deref()),
        Command::Analyze {
            dist,
            delta,
            condenser,
            seeds,
        } => cmd_analyze(&dist, delta, condenser.as_deref(), seeds),
        Command::Attack { function, delta } => cmd_attack(&function, delta),
        Command::Verify {
            suite,
            max_n,
            seed,
            json,
        } => cmd_verify(&suite, max_n, seed, json),
        Command::GenSource {
            kind,
            n,
            p1,
            delta,
            seed,
            adversary,
            output,
        } => cmd_gen_source(kind, n, p1, delta, seed, adversary.as_deref(), output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("svc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

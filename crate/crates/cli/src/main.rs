use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use jacored_cli::corpus::{corpus_list, entry_manifest, ENTRIES};
use jacored_cli::manifest::{load_manifest, parse_rat, InputError};
use jacored_cli::report::{exit_code, to_json, to_text, Report};
use jacored_cli::runner::{prequant_fields, run, run_single, RunOptions};
use jacored_core::orbit::{compute_t0, prequant_report, u2_lens, OrbitSpec};
use jacored_core::surd::Surd;

#[derive(Parser)]
#[command(name = "jacored", version, about = "Exact verification of contact groupoid corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a manifest file and emit the report.
    Verify {
        manifest: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run one named reduce task of a manifest file.
    Reduce {
        manifest: PathBuf,
        /// Name of the reduce task to run.
        #[arg(long)]
        task: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Closed-orbit arithmetic, no manifest needed.
    Orbit {
        #[command(subcommand)]
        op: OrbitCmd,
    },
    /// The built-in example corpus.
    Corpus {
        #[command(subcommand)]
        op: CorpusCmd,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Base sampler seed; every task derives its own stream from it.
    #[arg(long, env = "JACORED_SEED", default_value_t = jacored_cli::DEFAULT_SEED)]
    seed: u64,
    /// Sample points per scalar residual.
    #[arg(long, default_value_t = 8)]
    samples: u32,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    parallel: usize,
    /// Record per-task wall times. Timed reports are not byte-reproducible.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Text,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            samples: self.samples,
            parallel: self.parallel,
            timings: self.timings,
            format: match self.format {
                Format::Json => "json".to_string(),
                Format::Text => "text".to_string(),
            },
        }
    }
}

#[derive(Subcommand)]
enum OrbitCmd {
    /// First return time of the rational ray through the given components.
    T0 {
        #[arg(required = true)]
        xi: Vec<String>,
    },
    /// Prequantization report of an integer direction vector.
    Prequant {
        #[arg(required = true)]
        d: Vec<i64>,
    },
    /// Lens invariant of a diagonal weight pair.
    U2lens { m: i64, n: i64 },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// List the entries as machine-readable JSON.
    List,
    /// Run one entry by key, or every entry when none is named.
    Run {
        entry: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Json => print!("{}", to_json(report)),
        Format::Text => print!("{}", to_text(report)),
    }
}

/// 0 = all verified or computed, 1 = some falsification, 2 = inconclusive
/// only, 3 = input error (via the Err path).
fn combine(codes: impl IntoIterator<Item = u8>) -> u8 {
    let mut worst = 0u8;
    for c in codes {
        if c == 1 {
            return 1;
        }
        worst = worst.max(c);
    }
    worst
}

fn dispatch(cli: Cli) -> Result<u8, InputError> {
    match cli.command {
        Command::Verify { manifest, flags } => {
            let man = load_manifest(&manifest)?;
            let report = run(&man, &flags.options(), &manifest.display().to_string())?;
            emit(&report, flags.format);
            Ok(exit_code(&report))
        }
        Command::Reduce { manifest, task, flags } => {
            let man = load_manifest(&manifest)?;
            let report = run_single(&man, &task, &flags.options(), &manifest.display().to_string())?;
            emit(&report, flags.format);
            Ok(exit_code(&report))
        }
        Command::Orbit { op } => {
            let fields = orbit_fields(op)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&fields).expect("string maps serialize infallibly")
            );
            Ok(0)
        }
        Command::Corpus { op } => match op {
            CorpusCmd::List => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&corpus_list())
                        .expect("the listing serializes infallibly")
                );
                Ok(0)
            }
            CorpusCmd::Run { entry: Some(key), flags } => {
                let man = entry_manifest(&key)?;
                let report = run(&man, &flags.options(), &format!("corpus:{key}"))?;
                emit(&report, flags.format);
                Ok(exit_code(&report))
            }
            CorpusCmd::Run { entry: None, flags } => {
                let opts = flags.options();
                let mut reports = Vec::new();
                for e in ENTRIES {
                    let man = entry_manifest(e.key)?;
                    reports.push(run(&man, &opts, &format!("corpus:{}", e.key))?);
                }
                match flags.format {
                    Format::Json => println!(
                        "{}",
                        serde_json::to_string_pretty(&reports)
                            .expect("report serialization is infallible")
                    ),
                    Format::Text => {
                        for r in &reports {
                            print!("{}", to_text(r));
                        }
                    }
                }
                Ok(combine(reports.iter().map(exit_code)))
            }
        },
    }
}

fn orbit_fields(op: OrbitCmd) -> Result<std::collections::BTreeMap<String, String>, InputError> {
    let context = "orbit arguments";
    let mut fields = std::collections::BTreeMap::new();
    match op {
        OrbitCmd::T0 { xi } => {
            let values: Vec<Surd> = xi
                .iter()
                .map(|s| Ok(Surd::from_rat(parse_rat(context, s)?)))
                .collect::<Result<_, InputError>>()?;
            let spec = OrbitSpec::new(values).map_err(|e| InputError::invalid(context, e))?;
            let (t0, period, count) =
                compute_t0(&spec).map_err(|e| InputError::invalid(context, e))?;
            fields.insert("t0".to_string(), t0.to_string());
            fields.insert("period".to_string(), period.to_string());
            fields.insert("count".to_string(), count.to_string());
        }
        OrbitCmd::Prequant { d } => {
            let r = prequant_report(&d).map_err(|e| InputError::invalid(context, e))?;
            fields = prequant_fields(&r);
        }
        OrbitCmd::U2lens { m, n } => {
            let v = u2_lens(m, n).map_err(|e| InputError::invalid(context, e))?;
            fields.insert("lens".to_string(), v.to_string());
        }
    }
    Ok(fields)
}

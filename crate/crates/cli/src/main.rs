use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use humanflow::dataset::{self, GenConfig};
use humanflow::flow::{flow_to_color, read_flo};
use humanflow::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_GENERATION: u8 = 3;

/// Synthetic multi-human optical flow dataset generator.
#[derive(Parser, Debug)]
#[command(name = "humanflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset from a JSON config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Root seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Render threads (0 = all cores); overrides the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-render a saved scene.json.
    Replay {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify hashes and sampling statistics of a generated dataset.
    Audit {
        manifest: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Endpoint error of estimated flow against ground truth, per body part.
    Eval {
        est_dir: PathBuf,
        gt_dir: PathBuf,
        #[arg(long)]
        seg: Option<PathBuf>,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Color-code a .flo file.
    Viz {
        flow: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Magnitude mapped to full saturation; the 99th percentile otherwise.
        #[arg(long)]
        max: Option<f64>,
    },
}

enum Failure {
    Usage(String),
    Audit,
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Generation(_) | Error::Internal(_) => EXIT_GENERATION,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            workers,
        } => {
            let mut cfg = GenConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let out = out
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| Failure::Usage("no output directory: pass --out or set \"out\" in the config".into()))?;
            let m = dataset::generate(&cfg, &out)?;
            println!(
                "generated {} subsequences ({} skipped) into {}",
                m.entries.len(),
                m.skipped.len(),
                out.display()
            );
        }
        Command::Replay { spec, out } => {
            let files = dataset::replay(&spec, &out)?;
            for f in files {
                println!("{}  {}", f.sha256, f.path);
            }
        }
        Command::Audit { manifest, json } => {
            let report = dataset::audit(&manifest)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            } else {
                print!("{}", report.summary());
            }
            if !report.passed() {
                return Err(Failure::Audit);
            }
        }
        Command::Eval {
            est_dir,
            gt_dir,
            seg,
            csv,
        } => {
            let table = dataset::eval_dirs(&est_dir, &gt_dir, seg.as_deref())?;
            dataset::write_csv(&table, &csv)?;
            if let Some(all) = table.overall() {
                println!("{} files, {} pixels, EPE {:.4}", table.files, all.pixels, all.epe);
            }
        }
        Command::Viz { flow, out, max } => {
            let field = read_flo(&flow)?;
            flow_to_color(&field, max).save(&out).map_err(Error::from)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Audit) => {
            eprintln!("audit failed");
            ExitCode::from(EXIT_GENERATION)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

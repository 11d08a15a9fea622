use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wordorder_cli::{cmd_diag, cmd_eval, cmd_gen, cmd_train, cmd_verify, ExperimentConfig, Overrides, RunnerError};

#[derive(Parser)]
#[command(name = "wordorder", version, about = "Word-order learnability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate lexicons, splits, targeted sets, judgment pairs and plans.
    Gen(Common),
    /// Train every pending run.
    Train(Common),
    /// Score checkpoints and write result CSVs, tables and plots.
    Eval(Common),
    /// Check that recorded corpus files and run artifacts are intact.
    Verify(Common),
    /// Write template category and rule counts.
    Diag(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `all` or comma-separated language ids.
    #[arg(long)]
    langs: Option<String>,
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    regime: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, RunnerError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            languages: self.langs.clone(),
            archs: self.arch.clone(),
            regimes: self.regime.clone(),
            seeds: self.seeds.clone(),
            out: self.out.clone(),
            seed: self.seed,
            workers: self.workers,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool, RunnerError> {
    match cli.command {
        Command::Gen(c) => {
            let s = cmd_gen(&c.resolve()?)?;
            println!("generated {}, unchanged {}, files written {}", s.generated.len(), s.unchanged.len(), s.files_written);
            for n in &s.notes {
                println!("note: {n}");
            }
            for (id, e) in &s.failed {
                eprintln!("failed {id}: {e}");
            }
            Ok(s.ok())
        }
        Command::Train(c) => {
            let s = cmd_train(&c.resolve()?)?;
            println!("runs {}, trained {}, already done {}, failed {}", s.runs.len(), s.trained.len(), s.skipped.len(), s.failed.len());
            for (id, e) in &s.failed {
                eprintln!("failed {id}: {e}");
            }
            Ok(s.ok())
        }
        Command::Eval(c) => {
            let s = cmd_eval(&c.resolve()?)?;
            println!("evaluated {}, missing {}, files {}", s.evaluated.len(), s.missing.len(), s.files.len());
            for m in &s.missing {
                eprintln!("missing {m}");
            }
            for f in &s.flags {
                println!("flag: {f}");
            }
            Ok(s.ok())
        }
        Command::Verify(c) => {
            let r = cmd_verify(&c.resolve()?)?;
            println!("corpora {}, done runs {}, problems {}", r.corpora, r.done_runs, r.problems.len());
            for p in &r.problems {
                eprintln!("{p}");
            }
            Ok(r.ok())
        }
        Command::Diag(c) => {
            let s = cmd_diag(&c.resolve()?)?;
            for f in &s.files {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use batchcore::Tracking;
use batchcore_harness::{generate, run, AppKind, GenKind, GenParams, HarnessError, OracleMode, RunConfig, UpdateStream};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "batchcore", version, about = "Generate, run and verify batch-dynamic graph update streams")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated stream to stdout.
    Gen(GenArgs),
    /// Report estimates after every batch.
    Run(RunArgs),
    /// Check invariants and oracle intervals after every batch.
    Verify(RunArgs),
    /// Per-batch wall time and work counters.
    Bench(RunArgs),
    /// Drive an application over the stream.
    App(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 64)]
    window: usize,
    #[arg(long, default_value_t = 0.0)]
    churn: f64,
    #[arg(long, env = "BATCHCORE_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, ValueEnum)]
enum Track {
    Both,
    Coreness,
    Density,
}

#[derive(Args)]
struct RunArgs {
    /// Stream file; `-` or absent reads stdin.
    input: Option<PathBuf>,
    #[arg(long, env = "BATCHCORE_EPSILON", default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long = "c-b", env = "BATCHCORE_C_B")]
    c_b: Option<f64>,
    #[arg(long, env = "BATCHCORE_INNER_EPSILON")]
    inner_epsilon: Option<f64>,
    #[arg(long, env = "BATCHCORE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "BATCHCORE_LADDER_MAX_LEVEL")]
    ladder_max_level: Option<usize>,
    #[arg(long, value_enum, env = "BATCHCORE_ORACLE_MODE", default_value = "peel")]
    oracle_mode: OracleMode,
    #[arg(long, value_enum, default_value = "both")]
    track: Track,
    #[arg(long, env = "BATCHCORE_RHO_MAX", default_value_t = 4.0)]
    rho_max: f64,
    #[arg(long, value_enum, env = "BATCHCORE_APP", default_value = "none")]
    app: AppKind,
    #[arg(long, default_value_t = 8)]
    sample: usize,
    /// Skip one out-degree correction before this batch index.
    #[arg(long, hide = true)]
    inject_fault: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            epsilon: self.epsilon,
            c_b: self.c_b,
            inner_epsilon: self.inner_epsilon,
            seed: self.seed,
            max_level: self.ladder_max_level,
            oracle: self.oracle_mode,
            tracking: match self.track {
                Track::Both => Tracking::Both,
                Track::Coreness => Tracking::Coreness,
                Track::Density => Tracking::Density,
            },
            rho_max: self.rho_max,
            app: self.app,
            sample: self.sample,
            inject_fault: self.inject_fault,
        }
    }

    fn stream(&self) -> Result<UpdateStream, HarnessError> {
        let text = match &self.input {
            Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)?,
            _ => {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s)?;
                s
            }
        };
        UpdateStream::parse(&text)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = dispatch(cli.cmd, &mut out);
    let flushed = out.flush();
    match result {
        Ok(true) if flushed.is_ok() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("batchcore: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> Result<bool, HarnessError> {
    match cmd {
        Cmd::Gen(a) => {
            let p = GenParams {
                n: a.n,
                m: a.m,
                k: a.k,
                batches: a.batches,
                batch_size: a.batch_size,
                window: a.window,
                churn: a.churn,
                seed: a.seed,
            };
            out.write_all(generate(a.kind, &p)?.serialize().as_bytes())?;
            Ok(true)
        }
        Cmd::Run(a) => Ok(run::run(&a.stream()?, &a.config(), out)?.passed()),
        Cmd::Verify(a) => {
            let s = run::verify(&a.stream()?, &a.config(), out)?;
            for (i, v) in &s.violations {
                eprintln!("batch {i}: {v}");
            }
            Ok(s.passed())
        }
        Cmd::Bench(a) => Ok(run::bench(&a.stream()?, &a.config(), out)?.passed()),
        Cmd::App(a) => {
            let s = run::app(&a.stream()?, &a.config(), out)?;
            for (i, v) in &s.violations {
                eprintln!("batch {i}: {v}");
            }
            Ok(s.passed())
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flocksim_core::cli_io::{
    flock_to_dir, kernel_table, parse_config, run_to_dir, stability_to_dir, sweep, verify_with,
    write_kernel_table, Fault, VerifyLevel, STABILITY_FILE, SWEEP_SUMMARY_FILE,
};
use flocksim_core::dynamics::SimConfig;
use flocksim_core::{Error, KernelSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_ABORT: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "flocksim", version, about = "Fractional Euler-alignment simulator on the periodic torus")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel runs (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InjectedFault {
    CorruptMultiplierTable,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configuration and write its run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print phi_min and c(n, alpha); optionally dump the multiplier.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        dim: usize,
        /// Write (|k|, lambda(k)) pairs to this CSV file.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Grid points per dimension for the table.
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Extract the limiting flock of a finished run.
    Flock {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Perturb a flock and measure how far the limit moves.
    Stability {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one configuration per value of a config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Run the built-in oracle and invariant checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        /// Test hook: corrupt an input on purpose.
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<InjectedFault>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical_abort() || matches!(e, Error::NotFlocked(_) | Error::Fit(_) | Error::AllSamplesSkipped) {
        EXIT_ABORT
    } else {
        EXIT_USAGE
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<SimConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<u8, Error> {
    let out = cli.out.clone();
    match cli.command {
        Command::Run { config } => {
            let cfg = load_config(&config, cli.seed)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("run"));
            let report = run_to_dir(&cfg, &dir)?;
            let traj = &report.outcome.trajectory;
            let last = traj.records.last().expect("initial record");
            match &report.outcome.abort {
                None => {
                    println!(
                        "completed t = {} in {} steps; amplitude {:e}; output in {}",
                        last.t,
                        traj.steps,
                        last.amplitude,
                        dir.display()
                    );
                    Ok(0)
                }
                Some(e) => {
                    eprintln!("aborted: {e}; last good frame at t = {} in {}", last.t, dir.display());
                    Ok(EXIT_ABORT)
                }
            }
        }
        Command::Kernel { alpha, dim, table, n } => {
            let spec = KernelSpec::new(alpha, dim)?;
            println!("phi_min,norm_const");
            println!("{:?},{:?}", spec.phi_min(), spec.norm_const());
            if let Some(path) = table {
                write_kernel_table(&path, &kernel_table(&spec, n)?)?;
            }
            Ok(0)
        }
        Command::Flock { run_dir } => {
            let dir = out.unwrap_or_else(|| run_dir.clone());
            let s = flock_to_dir(&run_dir, &dir)?;
            println!(
                "ubar = {:?}; cauchy tail {:e}; fitted delta {}; output in {}",
                s.flock.u_bar,
                s.flock.cauchy_tail,
                s.delta.map_or("n/a".to_string(), |d| format!("{:.6}", d.rate)),
                dir.display()
            );
            Ok(0)
        }
        Command::Stability { base, eps, config } => {
            let cfg = load_config(&config, cli.seed)?;
            if let Some(t) = cli.threads {
                init_global_pool(t)?;
            }
            let dir = out.unwrap_or_else(|| base.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
            let table = stability_to_dir(&base, &eps, &cfg, &dir)?;
            let theta = table.theta.map_or("n/a".to_string(), |t| format!("{t:.4}"));
            println!(
                "theta = {theta}; C = {:e}; monotone = {}; {}",
                table.c,
                table.is_monotone(),
                dir.join(STABILITY_FILE).display()
            );
            Ok(0)
        }
        Command::Sweep { config, key, values } => {
            let cfg = load_config(&config, cli.seed)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("sweep"));
            let rows = sweep(&cfg, &key, &values, cli.threads, &dir)?;
            let failed = rows.iter().filter(|r| r.exit_status != "ok").count();
            let summary = dir.join(SWEEP_SUMMARY_FILE);
            println!("{} runs, {failed} not ok; {}", rows.len(), summary.display());
            Ok(0)
        }
        Command::Verify { level, inject_fault } => {
            let level = match level {
                Level::Fast => VerifyLevel::Fast,
                Level::Full => VerifyLevel::Full,
            };
            let fault = match inject_fault {
                Some(InjectedFault::CorruptMultiplierTable) => Fault::CorruptMultiplierTable,
                None => Fault::None,
            };
            let report = verify_with(level, fault)?;
            let text = report.to_text();
            print!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let path = dir.join("verify_report.txt");
                std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?;
            }
            Ok(if report.passed() { 0 } else { EXIT_VERIFY })
        }
    }
}

fn init_global_pool(threads: usize) -> Result<(), Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Sweep(format!("worker pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

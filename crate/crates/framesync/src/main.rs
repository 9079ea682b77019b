use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use framesync::config::{parse_config, RunConfig};
use framesync::error::Error;
use framesync::experiments::{oracle_report, threshold_report, word_report, write_sweep_csv};
use framesync::montecarlo::SweepChannel;

/// Sequential frame synchronization simulator.
#[derive(Parser)]
#[command(name = "framesync", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ChannelArgs {
    /// False-alarm transition probability of an explicit binary DMC.
    #[arg(long)]
    eps_f: Option<f64>,
    /// Miss transition probability of an explicit binary DMC.
    #[arg(long)]
    eps_m: Option<f64>,
    /// AWGN symbol power P.
    #[arg(long)]
    power: Option<f64>,
    /// AWGN noise variance sigma^2.
    #[arg(long)]
    sigma2: Option<f64>,
    /// AWGN quantizer threshold fraction a in (0, 1); threshold is a sqrt(P).
    #[arg(long)]
    a: Option<f64>,
}

impl ChannelArgs {
    fn to_spec(&self) -> Result<SweepChannel, Error> {
        match (self.eps_f, self.eps_m, self.power, self.sigma2, self.a) {
            (Some(eps_f), Some(eps_m), None, None, None) => {
                Ok(SweepChannel::Explicit { eps_f, eps_m })
            }
            (None, None, power, Some(sigma2), Some(a)) => Ok(SweepChannel::Awgn {
                power,
                sigma2,
                a,
            }),
            _ => Err(Error::ConfigInvalid(
                "give either --eps-f/--eps-m or --power/--sigma2/--a".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synchronization threshold report for a channel.
    Threshold {
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Build a sync word and report its construction and distance profile.
    Word {
        /// Word length N.
        #[arg(long)]
        n: usize,
        /// Construction parameter K; omitted builds the all-marks word.
        #[arg(long)]
        k: Option<u32>,
        /// File for the 0/1 word line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep described by a config file, emitting CSV.
    Sweep {
        /// Config file path.
        #[arg(long)]
        config: PathBuf,
        /// CSV output path; overrides the config's `out`, defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the config.
        #[arg(long)]
        workers: Option<usize>,
        /// Trials per grid point; overrides the config.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Exact outcome probabilities for a tiny binary instance (A + N - 1 <= 22).
    Oracle {
        #[arg(long)]
        eps_f: f64,
        #[arg(long)]
        eps_m: f64,
        /// Sync word length N (all-marks word).
        #[arg(long)]
        n: usize,
        /// Uncertainty window A.
        #[arg(long)]
        window: u64,
        /// Typicality tolerance; defaults to 1/N.
        #[arg(long)]
        mu: Option<f64>,
    },
}

/// Exit 1 for validation failures, 2 for runtime range/size failures.
fn run_exit_code(e: &Error) -> u8 {
    match e {
        Error::Range(_) | Error::SizeLimit(_) => 2,
        _ => 1,
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, Error> {
    parse_config(&fs::read_to_string(path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), (u8, Error)> = match cli.command {
        Command::Threshold { channel } => channel
            .to_spec()
            .and_then(|spec| threshold_report(&spec))
            .map(|rep| print!("{rep}"))
            .map_err(|e| (1, e)),
        Command::Word { n, k, out } => word_report(n, k)
            .and_then(|(rep, word)| {
                print!("{rep}");
                if let Some(path) = out {
                    fs::write(path, format!("{}\n", word.to_line()))?;
                }
                Ok(())
            })
            .map_err(|e| (1, e)),
        Command::Sweep {
            config,
            out,
            workers,
            trials,
        } => (|| {
            let mut cfg = load_config(&config).map_err(|e| (1, e))?;
            if let Some(w) = workers {
                cfg.workers = w.max(1);
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err((1, Error::ConfigInvalid("--trials must be at least 1".into())));
                }
                cfg.trials = t;
            }
            let out_path = out.or_else(|| cfg.out.as_ref().map(PathBuf::from));
            let spec = cfg.sweep_spec();
            match out_path {
                Some(path) => {
                    let mut file =
                        fs::File::create(&path).map_err(|e| (1, Error::Io(e)))?;
                    write_sweep_csv(&spec, &mut file)
                        .map_err(|e| (run_exit_code(&e), e))?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_sweep_csv(&spec, &mut lock)
                        .map_err(|e| (run_exit_code(&e), e))?;
                    lock.flush().ok();
                }
            }
            Ok(())
        })(),
        Command::Oracle {
            eps_f,
            eps_m,
            n,
            window,
            mu,
        } => oracle_report(eps_f, eps_m, n, window, mu)
            .map(|rep| print!("{rep}"))
            .map_err(|e| (run_exit_code(&e), e)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relaygeom::checks::{self, KS_HEADER};
use relaygeom::output::{render_csv, render_table, write_csv, write_svg, CsvRow};
use relaygeom::sweep::{
    check_rows, run_mean_count, run_outage_sweep, threads_from_env, with_workers,
};
use relaygeom::{CliError, ConfigLayer, Result, SweepConfig};

/// Outage and relay-count sweeps for opportunistic relaying in a Poisson relay field.
#[derive(Parser, Debug)]
#[command(name = "relaygeom", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic and Monte Carlo outage for each (SNR, strategy, k)
    OutageSweep(RunArgs),
    /// Mean number of qualified relays within a radius of each observer
    MeanCount(RunArgs),
    /// Fit of both distance laws to simulated k-th nearest distances
    FkCheck(RunArgs),
    /// Run the oracle and property suite and report pass/fail per check
    Validate,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    layer: ConfigLayer,
}

impl RunArgs {
    fn load(self) -> Result<SweepConfig> {
        SweepConfig::load(self.config.as_deref(), self.layer)
    }
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn write_rows<R: CsvRow>(rows: &[R], cfg: &SweepConfig) -> Result<()> {
    let meta = cfg.metadata();
    match &cfg.output {
        Some(path) => write_csv(rows, &meta, path),
        None if rows.is_empty() => Err(CliError::EmptyRows(PathBuf::from("<stdout>"))),
        None => emit(&render_csv(rows, &meta), None),
    }
}

fn run(command: Command) -> Result<()> {
    let threads = threads_from_env()?;
    match command {
        Command::OutageSweep(args) => {
            let cfg = args.load()?;
            let rows = with_workers(threads, || run_outage_sweep(&cfg))?;
            write_rows(&rows, &cfg)?;
            if let Some(svg) = &cfg.svg {
                write_svg(&rows, svg)?;
            }
            check_rows(&rows)
        }
        Command::MeanCount(args) => {
            let cfg = args.load()?;
            let rows = with_workers(threads, || run_mean_count(&cfg))?;
            write_rows(&rows, &cfg)?;
            check_rows(&rows)
        }
        Command::FkCheck(args) => {
            let cfg = args.load()?;
            let rows = with_workers(threads, || checks::distance_law_fit(&cfg))??;
            let lines: Vec<Vec<String>> = rows.iter().map(|r| r.fields()).collect();
            if lines.is_empty() {
                return Err(CliError::config(
                    "k_values",
                    "fk-check needs at least one k",
                ));
            }
            emit(
                &render_table(&cfg.metadata(), KS_HEADER, &lines),
                cfg.output.as_ref(),
            )
        }
        Command::Validate => {
            let reports = with_workers(threads, || {
                checks::catalogue()
                    .into_iter()
                    .map(|check| {
                        let report = check();
                        println!("{}", report.headline());
                        for line in &report.details {
                            println!("    {line}");
                        }
                        report
                    })
                    .collect::<Vec<_>>()
            })?;
            let failed = reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed {
                    failed,
                    total: reports.len(),
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renewal_cache_cli::config::{ExperimentSpec, Overrides};
use renewal_cache_cli::output::{self, Format};
use renewal_cache_cli::{commands, validate, CliError};

#[derive(Parser)]
#[command(name = "rcache", version, about = "Cache policies under renewal request processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limit threshold, limit and finite-N miss probabilities over a β grid
    Analyze(Opts),
    /// Simulate every (policy, β, N) cell
    Simulate(Opts),
    /// Simulate every cell and append the analytic rows for comparison
    Sweep(Opts),
    /// Run the self-check suite; exits with 3 on any failure
    Validate(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSON experiment file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// JSON file for full simulation reports (traces, snapshots, occupancy)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the resolved experiment as JSON and exit
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    experiment_id: Option<String>,
    /// pareto:<alpha>, erlang:<k> or exponential
    #[arg(long)]
    model: Option<String>,
    /// Value, comma list, or start:step:stop
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Cache size as a fraction of the catalog
    #[arg(long)]
    c: Option<f64>,
    /// Catalog size(s), comma separated
    #[arg(long)]
    n: Option<String>,
    /// Comma list of optimal, static, lru, threshold, ttl, prefetch
    #[arg(long)]
    policies: Option<String>,
    #[arg(long)]
    horizon_events: Option<u64>,
    #[arg(long)]
    warmup_events: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    occupancy_samples: Option<usize>,
}

impl Opts {
    fn spec(&self) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("config: cannot read {}: {e}", p.display()))
                })?;
                ExperimentSpec::from_json(&text)?
            }
            None => ExperimentSpec::default(),
        };
        spec.apply(&Overrides {
            experiment_id: self.experiment_id.clone(),
            model: self.model.clone(),
            beta: self.beta.clone(),
            c: self.c,
            n: self.n.clone(),
            policies: self.policies.clone(),
            horizon_events: self.horizon_events,
            warmup_events: self.warmup_events,
            replications: self.replications,
            seed: self.seed,
            occupancy_samples: self.occupancy_samples,
        })?;
        Ok(spec)
    }
}

fn emit_rows(opts: &Opts, rows: &[commands::Row]) -> Result<(), CliError> {
    let out = output::sink(opts.out.as_deref())?;
    match opts.format {
        Format::Csv => output::write_csv(rows, out),
        Format::Json => output::write_json(rows, out),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, opts) = match &cli.command {
        Command::Analyze(o) => ("analyze", o),
        Command::Simulate(o) => ("simulate", o),
        Command::Sweep(o) => ("sweep", o),
        Command::Validate(o) => ("validate", o),
    };
    let spec = opts.spec()?;
    if opts.print_config {
        let resolved = spec.resolved()?;
        return output::write_json(&resolved, output::sink(opts.out.as_deref())?);
    }
    match name {
        "analyze" => emit_rows(opts, &commands::analyze(&spec)?),
        "simulate" | "sweep" => {
            let (rows, reports) = if name == "sweep" {
                commands::sweep(&spec)?
            } else {
                commands::simulate(&spec)?
            };
            if let Some(p) = &opts.report {
                output::write_json(&reports, output::sink(Some(p))?)?;
            }
            emit_rows(opts, &rows)
        }
        _ => {
            let checks = validate::run_all(spec.seed);
            let mut out = output::sink(opts.out.as_deref())?;
            for c in &checks {
                writeln!(out, "{}", c.line())?;
            }
            out.flush()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                Err(CliError::Validation(failed))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

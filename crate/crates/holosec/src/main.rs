use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use holosec::config::SystemConfig;
use holosec::experiment::{
    run_sweep, write_csv, write_gnuplot_script, Scheme, SweepSpec, SweepVariable,
};

#[derive(Parser)]
#[command(
    name = "holosec",
    about = "Secrecy-rate optimization and Monte Carlo sweeps for holographic-surface downlinks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write one CSV row per (value, trial, scheme)
    Run(RunArgs),
    /// Run the invariant/property self-checks
    Check,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; omitted fields fall back to built-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Swept variable: power | rhs-size | rf-chains | rician
    #[arg(long)]
    sweep: String,
    /// Comma-separated sweep values, strictly increasing
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Monte Carlo trials per sweep value
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated schemes: proposed, random
    #[arg(long, default_value = "proposed,random", value_delimiter = ',')]
    schemes: Vec<String>,
    /// Base seed; defaults to the config's rng_seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Also write a gnuplot script for the CSV
    #[arg(long)]
    gnuplot: Option<PathBuf>,
    /// Record wall-clock optimizer runtime per row (makes the CSV
    /// nondeterministic across runs)
    #[arg(long, default_value_t = false)]
    measure_runtime: bool,
}

fn run(args: RunArgs) -> holosec::Result<()> {
    let base: SystemConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| holosec::Error::Config(format!("bad config file: {e}")))?
        }
        None => SystemConfig::default(),
    };
    let seed = args.seed.unwrap_or(base.rng_seed);
    let schemes = args
        .schemes
        .iter()
        .map(|s| Scheme::parse(s))
        .collect::<holosec::Result<Vec<_>>>()?;
    let spec = SweepSpec {
        variable: SweepVariable::parse(&args.sweep)?,
        values: args.values.clone(),
        trials: args.trials,
        schemes,
        base,
        seed,
        measure_runtime: args.measure_runtime,
    };

    let rows = run_sweep(&spec)?;
    write_csv(&rows, &args.out)?;
    if let Some(gp) = &args.gnuplot {
        write_gnuplot_script(&args.out, gp)?;
    }

    // mean secrecy per (value, scheme) as a quick on-screen summary
    let mut buckets: BTreeMap<(u64, String), (f64, usize)> = BTreeMap::new();
    for row in &rows {
        if row.scheme.ends_with("-error") {
            continue;
        }
        let entry = buckets
            .entry((row.sweep_value.to_bits(), row.scheme.clone()))
            .or_insert((0.0, 0));
        entry.0 += row.secrecy_bits;
        entry.1 += 1;
    }
    println!(
        "{} rows written to {} (sweep: {}, {} trials/value, seed {})",
        rows.len(),
        args.out.display(),
        spec.variable.cli_name(),
        spec.trials,
        seed
    );
    println!("{:>12} {:>10} {:>18}", "value", "scheme", "mean secrecy");
    for ((value_bits, scheme), (sum, n)) in &buckets {
        println!(
            "{:>12.3} {:>10} {:>18.6}",
            f64::from_bits(*value_bits),
            scheme,
            sum / *n as f64
        );
    }
    let errors = rows.iter().filter(|r| r.scheme.ends_with("-error")).count();
    if errors > 0 {
        eprintln!("warning: {errors} trial(s) failed; see rows tagged *-error");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Check => {
            let results = holosec::check::run_all();
            let mut ok = true;
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                println!("{tag} {} - {}", r.name, r.detail);
                ok &= r.passed;
            }
            if ok {
                println!("all {} checks passed", results.len());
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

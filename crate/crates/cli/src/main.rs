//! Experiment runner for secure-SWIPT resource allocation in
//! distributed-antenna networks.
//!
//! Exit codes: 0 on success, 2 when any seed was infeasible or failed
//! verification (the run still completes and writes the failure manifest),
//! 1 on structural errors such as bad arguments or unwritable output.

use clap::Parser;

use swipt_cli::config::{parse_seed_range, Algorithm, ExperimentKind, RunConfig};
use swipt_cli::{run_experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "swipt")]
#[command(
    about = "Secure wireless information and power transfer: experiment sweeps over \
             distributed-antenna resource allocation"
)]
struct Cli {
    /// Experiment to run: convergence | power_vs_antennas | power_vs_csi_error
    /// | harvested_vs_antennas | harvested_vs_csi_error
    #[arg(long)]
    experiment: String,

    /// Output directory for CSVs, traces and the plot template
    #[arg(long)]
    out: std::path::PathBuf,

    /// JSON config overlay (topology, parameters, sweep, solver knobs)
    #[arg(long)]
    config: Option<std::path::PathBuf>,

    /// Seed range `a..b` (half-open) or a single seed
    #[arg(long)]
    seeds: Option<String>,

    /// Comma-separated algorithms: gbd,sca,full_coop,full_coop_no_energy_share,colocated
    #[arg(long)]
    algo: Option<String>,

    /// Absolute decomposition bound-gap threshold
    #[arg(long)]
    kappa: Option<f64>,

    /// Penalty weight for the convex-approximation solver
    #[arg(long)]
    phi: Option<f64>,

    /// Iteration budget for the iterative solvers
    #[arg(long)]
    max_iter: Option<usize>,
}

fn build_spec(cli: &Cli) -> swipt_core::Result<ExperimentSpec> {
    let kind = ExperimentKind::parse(&cli.experiment)?;
    let mut spec = ExperimentSpec::new(kind, &cli.out);
    if let Some(path) = &cli.config {
        RunConfig::load(path)?.apply(&mut spec)?;
    }
    if let Some(seeds) = &cli.seeds {
        spec.seeds = parse_seed_range(seeds)?;
    }
    if let Some(algos) = &cli.algo {
        spec.algorithms = algos
            .split(',')
            .map(|a| Algorithm::parse(a.trim()))
            .collect::<swipt_core::Result<_>>()?;
    }
    if cli.kappa.is_some() {
        spec.kappa = cli.kappa;
    }
    if cli.phi.is_some() {
        spec.phi = cli.phi;
    }
    if cli.max_iter.is_some() {
        spec.max_iter = cli.max_iter;
    }
    if let Ok(threads) = std::env::var("SWIPT_NUM_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| swipt_core::Error::Config(format!("bad SWIPT_NUM_THREADS '{threads}'")))?;
        spec.num_threads = Some(n);
    }
    Ok(spec)
}

fn main() {
    let cli = Cli::parse();
    let spec = match build_spec(&cli) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    match run_experiment(&spec) {
        Ok(report) => {
            println!(
                "{} verified rows -> {}",
                report.rows.len(),
                report.raw_csv.display()
            );
            println!("summary -> {}", report.summary_csv.display());
            if let Some(path) = &report.failure_csv {
                eprintln!(
                    "{} seed/algorithm combinations failed -> {}",
                    report.failures.len(),
                    path.display()
                );
                std::process::exit(2);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

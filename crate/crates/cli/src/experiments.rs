//! Batch experiment execution and CSV emission.
//!
//! Seeds and sweep points run as independent parallel tasks; all file writes
//! happen afterwards from the collecting thread. A policy only reaches disk
//! after passing both the deterministic checker and the exact worst-case
//! oracle; failures land in the partial-failure manifest and the run
//! continues.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use swipt_core::error::{Error, Result};
use swipt_core::gbd::{run_gbd, write_trace_csv, GbdOptions, Kappa, RunTrace, TerminationStatus};
use swipt_core::model::{check_deterministic_constraints, harvested_energy};
use swipt_core::robust::verify_policy_robust;
use swipt_core::sca::{run_sca, ScaOptions};
use swipt_core::scenario::{
    apply_csi_error, generate_scenario, save_snapshot, watts_to_dbm, ScenarioParams,
};
use swipt_core::{Policy, Scenario};

use crate::baselines::{
    baseline_colocated, baseline_full_cooperation, baseline_no_energy_share,
};
use crate::config::{Algorithm, ExperimentKind, ExperimentSpec};

/// One verified result row of the raw CSV.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub seed: u64,
    pub algorithm: &'static str,
    pub sweep_param: &'static str,
    pub sweep_value: f64,
    pub objective_w: f64,
    pub objective_dbm: f64,
    pub harvested_total_w: f64,
    pub iterations: usize,
    pub status: &'static str,
}

/// One entry of the partial-failure manifest.
#[derive(Debug, Clone)]
pub struct FailureRow {
    pub seed: u64,
    pub algorithm: &'static str,
    pub sweep_value: f64,
    pub reason: String,
}

/// Everything a finished experiment produced.
#[derive(Debug)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<FailureRow>,
    pub raw_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub failure_csv: Option<PathBuf>,
}

/// Exact header of the raw results CSV.
pub const RAW_HEADER: &str =
    "seed,algorithm,sweep_param,sweep_value,objective_w,objective_dbm,harvested_total_w,iterations,status";

/// Scenario for one sweep point.
fn scenario_at(spec: &ExperimentSpec, sweep_value: f64, seed: u64) -> Result<Scenario> {
    let mut params = spec.params.clone();
    match spec.kind {
        ExperimentKind::PowerVsAntennas | ExperimentKind::HarvestedVsAntennas => {
            params.antennas_per_rrh = (sweep_value as usize) / params.rrh_count;
        }
        ExperimentKind::PowerVsCsiError | ExperimentKind::HarvestedVsCsiError => {
            params.normalized_csi_error = sweep_value;
        }
        ExperimentKind::Convergence => {}
    }
    let scen = generate_scenario(&spec.topology, &params, seed)?;
    // the error level applies through the shared per-seed perturbation draw,
    // so sweeping it yields nested uncertainty sets
    if matches!(
        spec.kind,
        ExperimentKind::PowerVsCsiError | ExperimentKind::HarvestedVsCsiError
    ) {
        return apply_csi_error(&scen, &vec![sweep_value; scen.er_count]);
    }
    Ok(scen)
}

fn swept_params(spec: &ExperimentSpec, sweep_value: f64) -> ScenarioParams {
    let mut params = spec.params.clone();
    match spec.kind {
        ExperimentKind::PowerVsAntennas | ExperimentKind::HarvestedVsAntennas => {
            params.antennas_per_rrh = (sweep_value as usize) / params.rrh_count;
        }
        ExperimentKind::PowerVsCsiError | ExperimentKind::HarvestedVsCsiError => {
            params.normalized_csi_error = sweep_value;
        }
        ExperimentKind::Convergence => {}
    }
    params
}

/// Re-verify a policy against both checkers before it may be written.
pub fn verify_before_write(policy: &Policy, scen: &Scenario) -> Result<()> {
    let det_tol = 1e-6 * (1.0 + policy.total_transmit_power().abs());
    let det = check_deterministic_constraints(policy, scen, 0.0);
    if !det.all_satisfied(det_tol) {
        let worst = det
            .violations(det_tol)
            .iter()
            .map(|v| format!("{}={:.3e}", v.label, v.slack))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::NumericalFailure(format!(
            "deterministic constraints violated: {worst}"
        )));
    }
    let rob = verify_policy_robust(policy, scen)?;
    for entry in &rob.entries {
        let tol = if entry.label.starts_with("C2") {
            1e-6 * scen.er_noise_power
        } else {
            let m: usize = entry.label[5..entry.label.len() - 1].parse().unwrap_or(0);
            1e-6 * scen.er_min_harvest.get(m).copied().unwrap_or(1.0)
        };
        if entry.slack < -tol {
            return Err(Error::NumericalFailure(format!(
                "robust constraint violated: {}={:.3e}",
                entry.label, entry.slack
            )));
        }
    }
    Ok(())
}

fn total_harvested(policy: &Policy, scen: &Scenario) -> f64 {
    (0..scen.er_count)
        .map(|m| {
            harvested_energy(
                policy,
                &scen.er_true_channels[m],
                scen.rf_conversion_efficiency,
            )
            .unwrap_or(f64::NAN)
        })
        .sum()
}

fn termination_name(status: TerminationStatus) -> &'static str {
    match status {
        TerminationStatus::Optimal => "optimal",
        TerminationStatus::IterationBudgetExhausted => "budget_exhausted",
        TerminationStatus::RepeatedSelection => "repeated_selection",
        TerminationStatus::Converged => "converged",
    }
}

struct TaskOutput {
    rows: Vec<ResultRow>,
    failures: Vec<FailureRow>,
    traces: Vec<(&'static str, u64, RunTrace)>,
    snapshot: Option<(u64, f64, Scenario)>,
}

fn run_task(spec: &ExperimentSpec, seed: u64, sweep_value: f64, keep_snapshot: bool) -> TaskOutput {
    let mut out = TaskOutput {
        rows: Vec::new(),
        failures: Vec::new(),
        traces: Vec::new(),
        snapshot: None,
    };
    let sweep_param = spec.kind.sweep_param();
    let scen = match scenario_at(spec, sweep_value, seed) {
        Ok(s) => s,
        Err(e) => {
            for algo in &spec.algorithms {
                out.failures.push(FailureRow {
                    seed,
                    algorithm: algo.name(),
                    sweep_value,
                    reason: format!("scenario generation: {e}"),
                });
            }
            return out;
        }
    };
    if keep_snapshot {
        out.snapshot = Some((seed, sweep_value, scen.clone()));
    }

    let push_verified =
        |algo: &'static str,
         policy: &Policy,
         scen: &Scenario,
         objective: f64,
         iterations: usize,
         status: &'static str,
         failures: &mut Vec<FailureRow>,
         rows: &mut Vec<ResultRow>| {
            match verify_before_write(policy, scen) {
                Ok(()) => rows.push(ResultRow {
                    seed,
                    algorithm: algo,
                    sweep_param,
                    sweep_value,
                    objective_w: objective,
                    objective_dbm: watts_to_dbm(objective),
                    harvested_total_w: total_harvested(policy, scen),
                    iterations,
                    status,
                }),
                Err(e) => failures.push(FailureRow {
                    seed,
                    algorithm: algo,
                    sweep_value,
                    reason: format!("verification: {e}"),
                }),
            }
        };

    for algo in &spec.algorithms {
        match algo {
            Algorithm::Gbd => {
                let options = GbdOptions {
                    kappa: spec
                        .kappa
                        .map(Kappa::Absolute)
                        .unwrap_or(Kappa::RelativeToInitialUpperBound(1e-3)),
                    max_iter: spec.max_iter.unwrap_or(200),
                    solve_tol: spec.solve_tol,
                    ..GbdOptions::default()
                };
                match run_gbd(&scen, &options) {
                    Ok(result) => {
                        push_verified(
                            "gbd",
                            &result.policy,
                            &scen,
                            result.objective,
                            result.trace.records.len(),
                            termination_name(result.trace.status),
                            &mut out.failures,
                            &mut out.rows,
                        );
                        out.traces.push(("gbd", seed, result.trace));
                    }
                    Err(e) => out.failures.push(FailureRow {
                        seed,
                        algorithm: "gbd",
                        sweep_value,
                        reason: e.to_string(),
                    }),
                }
            }
            Algorithm::Sca => {
                let options = ScaOptions {
                    phi: spec.phi,
                    max_iter: spec.max_iter.unwrap_or(30),
                    solve_tol: spec.solve_tol,
                    ..ScaOptions::default()
                };
                match run_sca(&scen, &options) {
                    Ok(result) => {
                        push_verified(
                            "sca",
                            &result.policy,
                            &scen,
                            result.objective,
                            result.state.iter,
                            termination_name(result.trace.status),
                            &mut out.failures,
                            &mut out.rows,
                        );
                        out.traces.push(("sca", seed, result.trace));
                    }
                    Err(e) => out.failures.push(FailureRow {
                        seed,
                        algorithm: "sca",
                        sweep_value,
                        reason: e.to_string(),
                    }),
                }
            }
            Algorithm::FullCoop => match baseline_full_cooperation(&scen, spec.solve_tol) {
                Ok(result) => push_verified(
                    "full_coop",
                    &result.policy,
                    &scen,
                    result.objective,
                    1,
                    "optimal",
                    &mut out.failures,
                    &mut out.rows,
                ),
                Err(e) => out.failures.push(FailureRow {
                    seed,
                    algorithm: "full_coop",
                    sweep_value,
                    reason: e.to_string(),
                }),
            },
            Algorithm::FullCoopNoEnergyShare => {
                match baseline_no_energy_share(&scen, spec.solve_tol) {
                    Ok(result) => push_verified(
                        "full_coop_no_energy_share",
                        &result.policy,
                        &scen,
                        result.objective,
                        1,
                        "optimal",
                        &mut out.failures,
                        &mut out.rows,
                    ),
                    Err(e) => out.failures.push(FailureRow {
                        seed,
                        algorithm: "full_coop_no_energy_share",
                        sweep_value,
                        reason: e.to_string(),
                    }),
                }
            }
            Algorithm::Colocated => {
                let params = swept_params(spec, sweep_value);
                match baseline_colocated(&spec.topology, &params, seed, spec.solve_tol) {
                    Ok((co_scen, result)) => push_verified(
                        "colocated",
                        &result.policy,
                        &co_scen,
                        result.objective,
                        1,
                        "optimal",
                        &mut out.failures,
                        &mut out.rows,
                    ),
                    Err(e) => out.failures.push(FailureRow {
                        seed,
                        algorithm: "colocated",
                        sweep_value,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    out
}

fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        String::new()
    }
}

fn write_raw_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut text = String::from(RAW_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.algorithm,
            r.sweep_param,
            format_float(r.sweep_value),
            format_float(r.objective_w),
            format_float(r.objective_dbm),
            format_float(r.harvested_total_w),
            r.iterations,
            r.status
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_summary_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut text = String::from(
        "algorithm,sweep_param,sweep_value,num_seeds,mean_objective_w,mean_objective_dbm,mean_harvested_w,mean_harvested_dbm\n",
    );
    let mut groups: Vec<(&'static str, f64)> = rows
        .iter()
        .map(|r| (r.algorithm, r.sweep_value))
        .collect();
    groups.sort_by(|a, b| a.0.cmp(b.0).then(a.1.total_cmp(&b.1)));
    groups.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    for (algo, value) in groups {
        let members: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.algorithm == algo && r.sweep_value == value)
            .collect();
        let n = members.len() as f64;
        let mean_obj = members.iter().map(|r| r.objective_w).sum::<f64>() / n;
        let mean_harv = members.iter().map(|r| r.harvested_total_w).sum::<f64>() / n;
        let param = members[0].sweep_param;
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            algo,
            param,
            format_float(value),
            members.len(),
            format_float(mean_obj),
            format_float(watts_to_dbm(mean_obj)),
            format_float(mean_harv),
            format_float(watts_to_dbm(mean_harv)),
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_failures_csv(failures: &[FailureRow], path: &Path) -> Result<()> {
    let mut text = String::from("seed,algorithm,sweep_value,reason\n");
    for f in failures {
        let reason = f.reason.replace(',', ";").replace('\n', " ");
        text.push_str(&format!(
            "{},{},{},{}\n",
            f.seed,
            f.algorithm,
            format_float(f.sweep_value),
            reason
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

const PLOT_TEMPLATE: &str = r#"# gnuplot template for the experiment summary
# usage: gnuplot -e "summary='summary.csv'" plot.gp
set datafile separator ','
set key autotitle columnhead
set xlabel 'sweep value'
set ylabel 'seed-averaged total transmit power (dBm)'
set grid
plot for [algo in "gbd sca full_coop full_coop_no_energy_share colocated"] \
    summary using 3:($1 eq algo ? $6 : 1/0) with linespoints title algo
"#;

/// Run a full experiment: parallel tasks over seeds × sweep points, verified
/// rows only, raw + summary CSVs, failure manifest, convergence traces and a
/// gnuplot template.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.output_dir)?;

    let tasks: Vec<(u64, f64)> = spec
        .seeds
        .iter()
        .flat_map(|&seed| spec.sweep_values.iter().map(move |&v| (seed, v)))
        .collect();
    let keep_snapshots = matches!(spec.kind, ExperimentKind::Convergence);

    let run_all = || -> Vec<TaskOutput> {
        tasks
            .par_iter()
            .map(|&(seed, value)| run_task(spec, seed, value, keep_snapshots))
            .collect()
    };
    let outputs: Vec<TaskOutput> = match spec.num_threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };

    // single-writer phase
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for mut out in outputs {
        rows.append(&mut out.rows);
        failures.append(&mut out.failures);
        for (algo, seed, trace) in out.traces {
            if matches!(spec.kind, ExperimentKind::Convergence) {
                let path = spec.output_dir.join(format!("trace_{algo}_seed{seed}.csv"));
                write_trace_csv(&trace, &path)?;
            }
        }
        if let Some((seed, value, scen)) = out.snapshot {
            let path = spec
                .output_dir
                .join(format!("scenario_seed{seed}_v{value}.json"));
            save_snapshot(&scen, &path)?;
        }
    }
    rows.sort_by(|a, b| {
        a.seed
            .cmp(&b.seed)
            .then(a.algorithm.cmp(b.algorithm))
            .then(a.sweep_value.total_cmp(&b.sweep_value))
    });

    let raw_csv = spec.output_dir.join("raw.csv");
    write_raw_csv(&rows, &raw_csv)?;
    let summary_csv = spec.output_dir.join("summary.csv");
    write_summary_csv(&rows, &summary_csv)?;
    let failure_csv = if failures.is_empty() {
        None
    } else {
        let path = spec.output_dir.join("failures.csv");
        write_failures_csv(&failures, &path)?;
        Some(path)
    };
    std::fs::write(spec.output_dir.join("plot.gp"), PLOT_TEMPLATE)?;

    Ok(ExperimentReport {
        rows,
        failures,
        raw_csv,
        summary_csv,
        failure_csv,
    })
}

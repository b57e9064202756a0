//! Penalized successive convex approximation over relaxed selections.
//!
//! The binary set is rewritten as `0 ≤ s ≤ 1` plus `Σ(s − s²) ≤ 0`; the
//! concave side is penalized into the objective and linearized at the current
//! anchor, giving a convex majorizer that is tight at the anchor. Iterating
//! the resulting convex programs drives the selections to binary values with
//! nonincreasing penalized objective. Polynomial time, locally optimal.

use crate::conic::{
    build_penalized_relaxation, build_primal, rank_one_recovery, solve, PrimalOutcome,
    SolveStatus, RANK_TOL,
};
use crate::error::{Error, Result};
use crate::gbd::{RunTrace, TerminationStatus, TraceRecord};
use crate::model::{BeamVectors, Policy, Scenario, SelectionMatrix};

pub use crate::conic::linearized_penalty;

/// Iteration state: current relaxed selections and the objective ledger.
#[derive(Debug, Clone)]
pub struct ScaState {
    /// Relaxed selections in `[0,1]`, indexed `[l][k]`.
    pub s_relaxed: Vec<Vec<f64>>,
    pub penalty_phi: f64,
    pub iter: usize,
    /// True penalized objective `f₀ + φ·Σ(s − s²)` after every step.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScaOptions {
    /// Penalty weight; defaults to `10 · max_l P_max[l]`.
    pub phi: Option<f64>,
    pub max_iter: usize,
    /// Relative change of the penalized objective that counts as converged.
    pub tol: f64,
    pub solve_tol: f64,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            phi: None,
            max_iter: 30,
            tol: 1e-4,
            solve_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaResult {
    pub policy: Policy,
    pub beams: BeamVectors,
    pub trace: RunTrace,
    /// Final transmit power after the fixed-selection re-solve.
    pub objective: f64,
    pub state: ScaState,
    /// Penalized iterations until `max|s − round(s)| ≤ 1e-3`, if reached.
    pub binary_convergence_iter: Option<usize>,
    /// The rounded pattern needed backhaul repair.
    pub repaired: bool,
}

/// One convex-approximation step at the given anchor.
pub fn sca_step(
    scen: &Scenario,
    s_anchor: &[Vec<f64>],
    phi: f64,
    solve_tol: f64,
) -> Result<PrimalOutcome> {
    solve(&build_penalized_relaxation(scen, s_anchor, phi), scen, solve_tol)
}

fn max_binary_distance(s: &[Vec<f64>]) -> f64 {
    s.iter()
        .flatten()
        .map(|&v| (v - v.round()).abs())
        .fold(0.0, f64::max)
}

fn true_penalized_objective(transmit_power: f64, s: &[Vec<f64>], phi: f64) -> f64 {
    transmit_power + phi * s.iter().flatten().map(|&v| v - v * v).sum::<f64>()
}

fn round_selection(s: &[Vec<f64>]) -> SelectionMatrix {
    SelectionMatrix {
        rows: s
            .iter()
            .map(|row| row.iter().map(|&v| v >= 0.5).collect())
            .collect(),
    }
}

/// Deactivate the lowest-power assignments on every overloaded backhaul link
/// until the caps hold.
fn repair_backhaul(
    selection: &mut SelectionMatrix,
    policy: &Policy,
    scen: &Scenario,
) -> bool {
    let mut repaired = false;
    for l in 0..scen.rrh_count {
        loop {
            let load = selection.backhaul_load(l, &scen.backhaul_rates);
            if load <= scen.backhaul_caps[l] + 1e-12 {
                break;
            }
            let weakest = (0..scen.ir_count)
                .filter(|&k| selection.get(l, k))
                .min_by(|&a, &b| {
                    scen.block_trace(&policy.beam_grams[a], l)
                        .total_cmp(&scen.block_trace(&policy.beam_grams[b], l))
                });
            match weakest {
                Some(k) => {
                    selection.rows[l][k] = false;
                    repaired = true;
                }
                None => break,
            }
        }
    }
    repaired
}


/// Run the full iteration: φ=0 initialization, penalized steps until the
/// objective settles, rounding (with backhaul repair if needed), and a final
/// fixed-selection solve with rank-one recovery.
pub fn run_sca(scen: &Scenario, options: &ScaOptions) -> Result<ScaResult> {
    let phi = options
        .phi
        .unwrap_or_else(|| 10.0 * scen.rrh_power_limits.iter().fold(0.0f64, |a, &b| a.max(b)));
    if phi <= 0.0 {
        return Err(Error::InvalidArgument("penalty weight must be positive".into()));
    }

    // feasibility gate: the plain continuous relaxation must admit a point
    let zero_anchor = vec![vec![0.0; scen.ir_count]; scen.rrh_count];
    let init = sca_step(scen, &zero_anchor, 0.0, options.solve_tol)?;
    match init.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::Infeasible(
                "continuous relaxation infeasible: the instance admits no policy".into(),
            ))
        }
        SolveStatus::NumericalFailure => {
            return Err(Error::NumericalFailure(
                "continuous relaxation did not converge".into(),
            ))
        }
    }
    // the relaxation leaves each selection indeterminate inside
    // [blockpower/P_max, 1], and the linearized penalty ratchets every entry
    // toward whichever side of ½ it starts on; anchoring the first step at
    // all-ones steers the iteration toward cooperative near-binary points
    // instead of collapsing lightly-loaded links
    let mut anchor = vec![vec![1.0; scen.ir_count]; scen.rrh_count];

    let mut state = ScaState {
        s_relaxed: init
            .relaxed_selection
            .expect("relaxed solves return selections"),
        penalty_phi: phi,
        iter: 0,
        objective_history: Vec::new(),
    };
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut last_policy = init.policy.clone();
    let mut binary_convergence_iter = None;
    let mut status = TerminationStatus::IterationBudgetExhausted;

    for iter in 0..options.max_iter {
        let step = sca_step(scen, &anchor, phi, options.solve_tol)?;
        if step.status != SolveStatus::Optimal {
            return Err(Error::NumericalFailure(format!(
                "penalized step {iter} terminated with {:?}",
                step.status
            )));
        }
        let s_next = step
            .relaxed_selection
            .expect("relaxed solves return selections");
        let transmit = step.policy.total_transmit_power();
        let penalized = true_penalized_objective(transmit, &s_next, phi);
        state.objective_history.push(penalized);
        state.s_relaxed = s_next.clone();
        state.iter = iter + 1;
        last_policy = step.policy.clone();

        records.push(TraceRecord {
            iter,
            selection: round_selection(&s_next),
            primal_feasible: true,
            objective_or_violation: penalized,
            upper_bound: penalized,
            lower_bound: f64::NEG_INFINITY,
        });

        if binary_convergence_iter.is_none() && max_binary_distance(&s_next) <= 1e-3 {
            binary_convergence_iter = Some(iter + 1);
        }
        let settled = state.objective_history.len() >= 2 && {
            let n = state.objective_history.len();
            let prev = state.objective_history[n - 2];
            (penalized - prev).abs() <= options.tol * prev.abs().max(1.0)
        };
        anchor = s_next;
        if settled {
            status = TerminationStatus::Converged;
            break;
        }
    }

    // round, repair the backhaul caps if the rounding broke them, re-solve
    let mut selection = round_selection(&anchor);
    let repaired = repair_backhaul(&mut selection, &last_policy, scen);

    let final_primal = solve(&build_primal(scen, &selection), scen, options.solve_tol)?;
    if final_primal.status != SolveStatus::Optimal {
        return Err(Error::RoundingRepairFailed(format!(
            "fixed-selection solve at rounded pattern {} terminated with {:?}",
            selection.bitstring(),
            final_primal.status
        )));
    }
    let (policy, beams) = rank_one_recovery(&final_primal, scen, RANK_TOL)?;
    let objective = final_primal.objective;

    Ok(ScaResult {
        policy,
        beams,
        trace: RunTrace {
            records,
            status,
            kappa_abs: options.tol,
        },
        objective,
        state,
        binary_convergence_iter,
        repaired,
    })
}

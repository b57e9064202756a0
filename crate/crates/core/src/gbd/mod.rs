//! Generalized Benders decomposition over the RRH/receiver selections.
//!
//! Each iteration solves the fixed-selection semidefinite primal. A feasible
//! solve tightens the upper bound and contributes an optimality cut built
//! from the selection-cap duals; an infeasible one is replaced by the l1
//! restoration whose duals give a feasibility cut that separates the failed
//! pattern. The mixed-integer master then minimizes over all patterns that
//! survive the accumulated cuts and the backhaul caps, yielding a
//! nondecreasing lower bound. The loop stops when the bound gap closes, the
//! master runs dry, a pattern repeats, or the iteration budget ends.

mod master;

pub use master::{solve_master, solve_master_branch_bound, solve_master_enumerate, MasterOutcome};

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conic::{
    build_l1_feasibility, build_primal, rank_one_recovery, solve, PrimalOutcome, SolveStatus,
    RANK_TOL,
};
use crate::error::{Error, Result};
use crate::model::{BeamVectors, Policy, Scenario, SelectionMatrix};
use crate::scenario::derived_rng;

/// Cut classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutKind {
    /// `μ ≥ constant + Σ coeff·s`
    Optimality,
    /// `0 ≥ constant + Σ coeff·s`
    Feasibility,
}

/// Affine inequality in `(μ, s)` produced from primal duals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub constant: f64,
    /// Coefficient of `s[l][k]`, indexed `[l][k]`.
    pub coeff: Vec<Vec<f64>>,
    pub origin_iter: usize,
}

impl Cut {
    /// Evaluate the affine form `constant + Σ coeff·s`.
    pub fn evaluate(&self, s: &SelectionMatrix) -> f64 {
        let mut v = self.constant;
        for (l, row) in self.coeff.iter().enumerate() {
            for (k, &a) in row.iter().enumerate() {
                if s.get(l, k) {
                    v += a;
                }
            }
        }
        v
    }
}

/// Optimality cut from a feasible primal at pattern `s_t`:
/// `μ ≥ d(t) + Σ β_{l,k}·P_max[l]·(s_t[l][k] − s[l][k])`,
/// where `d(t)` is the dual objective value. Weak duality keeps the cut a
/// valid under-estimator for any dual-feasible multipliers, so reduced-
/// accuracy terminations cannot poison the master (at exact optimality
/// `d(t)` equals the primal value `f₀(t)`).
pub fn optimality_cut(
    outcome: &PrimalOutcome,
    s_t: &SelectionMatrix,
    scen: &Scenario,
    origin_iter: usize,
) -> Result<Cut> {
    if outcome.status != SolveStatus::Optimal {
        return Err(Error::InvalidArgument(
            "optimality cut requires a feasible primal".into(),
        ));
    }
    let duals = outcome
        .duals
        .as_ref()
        .ok_or(Error::MissingDuals("optimality cut"))?;
    // a reduced-accuracy dual iterate can overshoot, so take the cautious
    // side of the bound pair and back off by the reported gap: loosening a
    // cut costs iterations, overestimating one costs correctness
    let mut constant =
        outcome.objective.min(outcome.dual_objective) - outcome.diagnostics.duality_gap;
    let mut coeff = vec![vec![0.0; scen.ir_count]; scen.rrh_count];
    for l in 0..scen.rrh_count {
        for k in 0..scen.ir_count {
            let weight = duals.selection_cap[l][k].max(0.0) * scen.rrh_power_limits[l];
            if s_t.get(l, k) {
                constant += weight;
            }
            coeff[l][k] = -weight;
        }
    }
    Ok(Cut {
        kind: CutKind::Optimality,
        constant,
        coeff,
        origin_iter,
    })
}

/// Feasibility cut from an l1 restoration with positive violation:
/// `0 ≥ d̃(t) + Σ β̃_{l,k}·P_max[l]·(s_t[l][k] − s[l][k])`, with `d̃(t)` the
/// dual value of the restoration (`Σα(t)` at exact optimality). The
/// generating pattern violates its own cut whenever the violation exceeds
/// the solver gap.
pub fn feasibility_cut(
    outcome: &PrimalOutcome,
    s_t: &SelectionMatrix,
    scen: &Scenario,
    origin_iter: usize,
) -> Result<Cut> {
    let violation = outcome
        .l1_violation
        .ok_or(Error::InvalidArgument(
            "feasibility cut requires an l1 outcome".into(),
        ))?;
    if violation <= 0.0 {
        return Err(Error::InvalidArgument(
            "zero violation should have produced an optimality cut".into(),
        ));
    }
    let duals = outcome
        .duals
        .as_ref()
        .ok_or(Error::MissingDuals("feasibility cut"))?;
    let mut constant =
        violation.min(outcome.dual_objective) - outcome.diagnostics.duality_gap;
    let mut coeff = vec![vec![0.0; scen.ir_count]; scen.rrh_count];
    for l in 0..scen.rrh_count {
        for k in 0..scen.ir_count {
            let weight = duals.selection_cap[l][k].max(0.0) * scen.rrh_power_limits[l];
            if s_t.get(l, k) {
                constant += weight;
            }
            coeff[l][k] = -weight;
        }
    }
    Ok(Cut {
        kind: CutKind::Feasibility,
        constant,
        coeff,
        origin_iter,
    })
}

/// Why a run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationStatus {
    /// Bound gap closed within κ.
    Optimal,
    /// Iteration budget exhausted; best-so-far returned.
    IterationBudgetExhausted,
    /// Master revisited a pattern that already has an optimality cut
    /// (numerical-safeguard stop); best-so-far returned with its gap.
    RepeatedSelection,
    /// Objective change fell below tolerance (convex-approximation runs).
    Converged,
}

/// One per-iteration ledger row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub selection: SelectionMatrix,
    pub primal_feasible: bool,
    /// Primal objective (feasible) or aggregated violation (infeasible).
    pub objective_or_violation: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
}

/// Full convergence ledger of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub status: TerminationStatus,
    /// Absolute gap threshold the run used.
    pub kappa_abs: f64,
}

impl RunTrace {
    pub fn final_gap(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.upper_bound - r.lower_bound)
            .unwrap_or(f64::INFINITY)
    }

    /// Bound-ledger invariants: UB nonincreasing, LB nondecreasing,
    /// UB ≥ LB − κ throughout.
    pub fn check_monotonicity(&self) -> Result<()> {
        let mut prev_ub = f64::INFINITY;
        let mut prev_lb = f64::NEG_INFINITY;
        for r in &self.records {
            if r.upper_bound > prev_ub + 1e-9 * (1.0 + prev_ub.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "upper bound increased at iteration {}",
                    r.iter
                )));
            }
            if r.lower_bound < prev_lb - 1e-9 * (1.0 + prev_lb.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "lower bound decreased at iteration {}",
                    r.iter
                )));
            }
            if r.upper_bound < r.lower_bound - self.kappa_abs.max(1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "bounds crossed at iteration {}",
                    r.iter
                )));
            }
            prev_ub = r.upper_bound;
            prev_lb = r.lower_bound;
        }
        Ok(())
    }
}

fn csv_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        String::new()
    }
}

/// Export a trace as CSV with header `iter,UB,LB,status,s-bitstring`.
pub fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut out = String::from("iter,UB,LB,status,s-bitstring\n");
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iter,
            csv_cell(r.upper_bound),
            csv_cell(r.lower_bound),
            if r.primal_feasible { "optimal" } else { "infeasible" },
            r.selection.bitstring()
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Bound-gap threshold rule.
#[derive(Debug, Clone, Copy)]
pub enum Kappa {
    Absolute(f64),
    /// Fraction of the first finite upper bound.
    RelativeToInitialUpperBound(f64),
}

/// Selection pattern the iteration starts from.
#[derive(Debug, Clone)]
pub enum InitialSelection {
    AllOnes,
    Seeded(u64),
    Pattern(SelectionMatrix),
}

#[derive(Debug, Clone)]
pub struct GbdOptions {
    pub kappa: Kappa,
    pub max_iter: usize,
    pub initial: InitialSelection,
    /// Interior-point accuracy for the primal and l1 solves.
    pub solve_tol: f64,
}

impl Default for GbdOptions {
    fn default() -> Self {
        Self {
            kappa: Kappa::RelativeToInitialUpperBound(1e-3),
            max_iter: 200,
            initial: InitialSelection::AllOnes,
            solve_tol: 1e-8,
        }
    }
}

/// Result of a decomposition run.
#[derive(Debug, Clone)]
pub struct GbdResult {
    pub policy: Policy,
    pub beams: BeamVectors,
    pub trace: RunTrace,
    pub objective: f64,
    /// All cuts generated, in order (feeds the cut-validity oracles).
    pub cuts: Vec<Cut>,
}

fn initial_pattern(scen: &Scenario, init: &InitialSelection) -> SelectionMatrix {
    match init {
        InitialSelection::AllOnes => SelectionMatrix::all_ones(scen.rrh_count, scen.ir_count),
        InitialSelection::Pattern(s) => s.clone(),
        InitialSelection::Seeded(seed) => {
            use rand::Rng;
            let mut rng = derived_rng(*seed, "gbd-init", &[]);
            SelectionMatrix {
                rows: (0..scen.rrh_count)
                    .map(|_| (0..scen.ir_count).map(|_| rng.gen_bool(0.5)).collect())
                    .collect(),
            }
        }
    }
}

/// Run the full decomposition: primal / cut / master loop with upper- and
/// lower-bound ledger, returning the best rank-one-recovered policy.
pub fn run_gbd(scen: &Scenario, options: &GbdOptions) -> Result<GbdResult> {
    if options.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let mut selection = initial_pattern(scen, &options.initial);
    let mut cuts: Vec<Cut> = Vec::new();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut kappa_abs = match options.kappa {
        Kappa::Absolute(k) => k,
        Kappa::RelativeToInitialUpperBound(_) => f64::NAN,
    };
    let mut best: Option<(Policy, BeamVectors, f64)> = None;
    let mut cut_patterns: HashSet<String> = HashSet::new();
    let mut status = TerminationStatus::IterationBudgetExhausted;

    // the primal never sees the backhaul caps (the master owns them), so a
    // pattern only counts toward the incumbent when it respects them
    let respects_backhaul = |s: &SelectionMatrix| {
        (0..scen.rrh_count).all(|l| {
            s.backhaul_load(l, &scen.backhaul_rates)
                <= scen.backhaul_caps[l] + 1e-9 * (1.0 + scen.backhaul_caps[l])
        })
    };

    for iter in 0..options.max_iter {
        let primal = solve(&build_primal(scen, &selection), scen, options.solve_tol)?;
        let primal_feasible;
        let objective_or_violation;
        // near-infeasible patterns can stall the interior point method; the
        // l1 restoration is always well-posed and its violation measure
        // classifies the pattern (> 1e-6 ⇒ infeasible, cut and move on)
        let effective_status = primal.status;
        match effective_status {
            SolveStatus::Optimal => {
                primal_feasible = true;
                objective_or_violation = primal.objective;
                if respects_backhaul(&selection) && primal.objective < upper {
                    match rank_one_recovery(&primal, scen, RANK_TOL) {
                        Ok((policy, beams)) => {
                            upper = primal.objective;
                            best = Some((policy, beams, primal.objective));
                            if kappa_abs.is_nan() {
                                if let Kappa::RelativeToInitialUpperBound(rel) = options.kappa {
                                    kappa_abs = rel * upper.abs();
                                }
                            }
                        }
                        // a loose solve at a stressed pattern can defeat the
                        // recovery post-verification; the pattern keeps its
                        // cut and the incumbent waits for a clean solve
                        Err(Error::RecoveryFailed(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                cuts.push(optimality_cut(&primal, &selection, scen, iter)?);
                cut_patterns.insert(selection.bitstring());
            }
            SolveStatus::Infeasible | SolveStatus::NumericalFailure => {
                let restoration =
                    solve(&build_l1_feasibility(scen, &selection), scen, options.solve_tol)?;
                match restoration.status {
                    SolveStatus::Optimal => {
                        let violation = restoration.l1_violation.unwrap_or(0.0);
                        primal_feasible = false;
                        objective_or_violation = violation;
                        if violation <= 1e-6 {
                            // the restoration says the pattern is essentially
                            // feasible, yet the primal did not deliver it:
                            // numerical limbo, surface rather than cut
                            return Err(Error::NumericalFailure(format!(
                                "primal {:?} but l1 violation is only {violation} at {}",
                                effective_status,
                                selection.bitstring()
                            )));
                        }
                        cuts.push(feasibility_cut(&restoration, &selection, scen, iter)?);
                        cut_patterns.insert(selection.bitstring());
                    }
                    SolveStatus::Infeasible => {
                        // even with slacks there is no point satisfying the
                        // selection-independent constraints
                        return Err(Error::Infeasible(
                            "restoration problem infeasible: no policy satisfies the \
                             selection-independent constraints"
                                .into(),
                        ));
                    }
                    SolveStatus::NumericalFailure => {
                        return Err(Error::NumericalFailure(
                            "l1 restoration did not converge".into(),
                        ));
                    }
                }
            }
        }

        let master = solve_master(&cuts, scen);
        let next = match master {
            MasterOutcome::Infeasible => {
                records.push(TraceRecord {
                    iter,
                    selection: selection.clone(),
                    primal_feasible,
                    objective_or_violation,
                    upper_bound: upper,
                    lower_bound: lower,
                });
                if best.is_some() {
                    // valid cuts never exclude feasible patterns, so an
                    // infeasible master alongside a feasible incumbent means
                    // cut noise; stop with the incumbent
                    status = TerminationStatus::RepeatedSelection;
                    break;
                }
                return Err(Error::Infeasible(
                    "every selection pattern is excluded by the feasibility cuts \
                     and backhaul caps"
                        .into(),
                ));
            }
            MasterOutcome::Solved {
                selection: next,
                lower_bound,
            } => {
                if lower_bound.is_finite() {
                    lower = lower.max(lower_bound);
                }
                next
            }
        };

        records.push(TraceRecord {
            iter,
            selection: selection.clone(),
            primal_feasible,
            objective_or_violation,
            upper_bound: upper,
            lower_bound: lower,
        });

        let gap_closed = upper.is_finite()
            && lower.is_finite()
            && (upper - lower) <= kappa_abs.max(0.0)
            && !kappa_abs.is_nan();
        if gap_closed {
            status = TerminationStatus::Optimal;
            break;
        }
        if cut_patterns.contains(&next.bitstring()) {
            status = TerminationStatus::RepeatedSelection;
            break;
        }
        selection = next;
    }

    let (policy, beams, objective) = best.ok_or_else(|| {
        Error::Infeasible("no feasible selection pattern found within the iteration budget".into())
    })?;
    let trace = RunTrace {
        records,
        status,
        kappa_abs: if kappa_abs.is_nan() { 0.0 } else { kappa_abs },
    };
    Ok(GbdResult {
        policy,
        beams,
        trace,
        objective,
        cuts,
    })
}

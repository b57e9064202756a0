//! Mixed-integer master problem over the binary selections.
//!
//! Minimizes `μ` subject to every accumulated optimality cut
//! (`μ ≥ c + Σ a·s`), every feasibility cut (`0 ≥ c + Σ a·s`) and the
//! per-link backhaul caps. The binary domain is finite, so the solve is
//! exact: exhaustive enumeration up to 24 binaries, depth-first
//! branch-and-bound with per-cut relaxation bounds beyond that. Ties break
//! toward the lexicographically smallest pattern (row-major, RRH-major).

use crate::model::{Scenario, SelectionMatrix};

use super::{Cut, CutKind};

/// Patterns with at most this many binaries are enumerated outright.
const ENUMERATION_LIMIT: usize = 24;
/// Absolute tolerance when testing cut satisfaction and value ties.
const CUT_TOL: f64 = 1e-9;

/// Master solve result.
#[derive(Debug, Clone)]
pub enum MasterOutcome {
    Solved {
        selection: SelectionMatrix,
        /// Optimal `μ`; `-∞` until the first optimality cut exists.
        lower_bound: f64,
    },
    /// Feasibility cuts plus the backhaul caps exclude every pattern.
    Infeasible,
}

fn cut_value(cut: &Cut, s: &[bool], ir_count: usize) -> f64 {
    let mut v = cut.constant;
    for (l, row) in cut.coeff.iter().enumerate() {
        for (k, &a) in row.iter().enumerate() {
            if s[l * ir_count + k] {
                v += a;
            }
        }
    }
    v
}

fn violates_feasibility_cuts(cuts: &[Cut], s: &[bool], ir_count: usize) -> bool {
    cuts.iter()
        .filter(|c| c.kind == CutKind::Feasibility)
        .any(|c| {
            let v = cut_value(c, s, ir_count);
            v > CUT_TOL * (1.0 + c.constant.abs())
        })
}

fn violates_backhaul(scen: &Scenario, s: &[bool]) -> bool {
    (0..scen.rrh_count).any(|l| {
        let load: f64 = (0..scen.ir_count)
            .filter(|&k| s[l * scen.ir_count + k])
            .map(|k| scen.backhaul_rates[k])
            .sum();
        load > scen.backhaul_caps[l] + CUT_TOL * (1.0 + scen.backhaul_caps[l])
    })
}

fn objective_value(cuts: &[Cut], s: &[bool], ir_count: usize) -> f64 {
    cuts.iter()
        .filter(|c| c.kind == CutKind::Optimality)
        .map(|c| cut_value(c, s, ir_count))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn lex_smaller(a: &[bool], b: &[bool]) -> bool {
    for (&x, &y) in a.iter().zip(b) {
        if x != y {
            return !x;
        }
    }
    false
}

/// Exact minimizer of `μ` over the binary selections. Dispatches to
/// enumeration for small patterns and branch-and-bound beyond
/// [`ENUMERATION_LIMIT`].
pub fn solve_master(cuts: &[Cut], scen: &Scenario) -> MasterOutcome {
    let bits = scen.rrh_count * scen.ir_count;
    if bits <= ENUMERATION_LIMIT {
        solve_master_enumerate(cuts, scen)
    } else {
        solve_master_branch_bound(cuts, scen)
    }
}

/// Exhaustive enumeration reference (also the oracle the branch-and-bound is
/// tested against).
pub fn solve_master_enumerate(cuts: &[Cut], scen: &Scenario) -> MasterOutcome {
    let (l_count, k_count) = (scen.rrh_count, scen.ir_count);
    let bits = l_count * k_count;
    let mut best: Option<(f64, Vec<bool>)> = None;
    let mut s = vec![false; bits];
    for pattern in 0u64..(1u64 << bits) {
        for (i, slot) in s.iter_mut().enumerate() {
            *slot = (pattern >> i) & 1 == 1;
        }
        if violates_backhaul(scen, &s) || violates_feasibility_cuts(cuts, &s, k_count) {
            continue;
        }
        let value = objective_value(cuts, &s, k_count);
        let better = match &best {
            None => true,
            Some((bv, bs)) => {
                value < bv - CUT_TOL * (1.0 + bv.abs())
                    || (value <= bv + CUT_TOL * (1.0 + bv.abs()) && lex_smaller(&s, bs))
            }
        };
        if better {
            best = Some((value, s.clone()));
        }
    }
    match best {
        Some((value, s)) => MasterOutcome::Solved {
            selection: selection_from_flat(&s, l_count, k_count),
            lower_bound: value,
        },
        None => MasterOutcome::Infeasible,
    }
}

fn selection_from_flat(s: &[bool], l_count: usize, k_count: usize) -> SelectionMatrix {
    SelectionMatrix {
        rows: (0..l_count)
            .map(|l| (0..k_count).map(|k| s[l * k_count + k]).collect())
            .collect(),
    }
}

/// Depth-first branch-and-bound. The node bound relaxes each optimality cut
/// separately over the free binaries (each cut's minimum completes with
/// `min(0, a)` per free coordinate), which lower-bounds the node LP; leaves
/// are evaluated exactly, so the search is exact.
pub fn solve_master_branch_bound(cuts: &[Cut], scen: &Scenario) -> MasterOutcome {
    let (l_count, k_count) = (scen.rrh_count, scen.ir_count);
    let bits = l_count * k_count;

    // branch on high-impact coordinates first
    let mut order: Vec<usize> = (0..bits).collect();
    let impact = |i: usize| -> f64 {
        let (l, k) = (i / k_count, i % k_count);
        cuts.iter()
            .map(|c| c.coeff[l][k].abs())
            .fold(0.0, f64::max)
    };
    order.sort_by(|&a, &b| impact(b).total_cmp(&impact(a)));

    struct Search<'a> {
        cuts: &'a [Cut],
        scen: &'a Scenario,
        order: Vec<usize>,
        assignment: Vec<Option<bool>>,
        incumbent: Option<(f64, Vec<bool>)>,
    }

    impl Search<'_> {
        fn optimality_bound(&self) -> f64 {
            let k_count = self.scen.ir_count;
            self.cuts
                .iter()
                .filter(|c| c.kind == CutKind::Optimality)
                .map(|c| {
                    let mut v = c.constant;
                    for (l, row) in c.coeff.iter().enumerate() {
                        for (k, &a) in row.iter().enumerate() {
                            match self.assignment[l * k_count + k] {
                                Some(true) => v += a,
                                Some(false) => {}
                                None => v += a.min(0.0),
                            }
                        }
                    }
                    v
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }

        fn feasibility_possible(&self) -> bool {
            let k_count = self.scen.ir_count;
            for c in self
                .cuts
                .iter()
                .filter(|c| c.kind == CutKind::Feasibility)
            {
                let mut v = c.constant;
                for (l, row) in c.coeff.iter().enumerate() {
                    for (k, &a) in row.iter().enumerate() {
                        match self.assignment[l * k_count + k] {
                            Some(true) => v += a,
                            Some(false) => {}
                            None => v += a.min(0.0),
                        }
                    }
                }
                if v > CUT_TOL * (1.0 + c.constant.abs()) {
                    return false;
                }
            }
            // backhaul: free binaries can always switch off
            for l in 0..self.scen.rrh_count {
                let load: f64 = (0..k_count)
                    .filter(|&k| self.assignment[l * k_count + k] == Some(true))
                    .map(|k| self.scen.backhaul_rates[k])
                    .sum();
                if load > self.scen.backhaul_caps[l] + CUT_TOL * (1.0 + self.scen.backhaul_caps[l])
                {
                    return false;
                }
            }
            true
        }

        fn descend(&mut self, depth: usize) {
            if !self.feasibility_possible() {
                return;
            }
            if let Some((best, _)) = &self.incumbent {
                // equal-value nodes still descend so lexicographic ties resolve
                if self.optimality_bound() > best + CUT_TOL * (1.0 + best.abs()) {
                    return;
                }
            }
            if depth == self.order.len() {
                let s: Vec<bool> = self.assignment.iter().map(|a| a.unwrap()).collect();
                let value = objective_value(self.cuts, &s, self.scen.ir_count);
                let better = match &self.incumbent {
                    None => true,
                    Some((bv, bs)) => {
                        value < bv - CUT_TOL * (1.0 + bv.abs())
                            || (value <= bv + CUT_TOL * (1.0 + bv.abs()) && lex_smaller(&s, bs))
                    }
                };
                if better {
                    self.incumbent = Some((value, s));
                }
                return;
            }
            let var = self.order[depth];
            for value in [false, true] {
                self.assignment[var] = Some(value);
                self.descend(depth + 1);
            }
            self.assignment[var] = None;
        }
    }

    let mut search = Search {
        cuts,
        scen,
        order,
        assignment: vec![None; bits],
        incumbent: None,
    };
    search.descend(0);
    match search.incumbent {
        Some((value, s)) => MasterOutcome::Solved {
            selection: selection_from_flat(&s, l_count, k_count),
            lower_bound: value,
        },
        None => MasterOutcome::Infeasible,
    }
}

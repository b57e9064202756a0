//! Reference baselines the solvers are compared against.

use swipt_core::conic::{
    build_primal, build_program, rank_one_recovery, solve, EnergyModel, SelectionMode,
    SolveStatus, RANK_TOL,
};
use swipt_core::error::{Error, Result};
use swipt_core::scenario::{generate_scenario, ScenarioParams, TopologyConfig};
use swipt_core::{BeamVectors, Policy, Scenario, SelectionMatrix};

/// A solved baseline: policy, beams and objective.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub policy: Policy,
    pub beams: BeamVectors,
    pub objective: f64,
}

fn finish(
    outcome: swipt_core::conic::PrimalOutcome,
    scen: &Scenario,
    what: &str,
) -> Result<BaselineOutcome> {
    match outcome.status {
        SolveStatus::Optimal => {
            let (policy, beams) = rank_one_recovery(&outcome, scen, RANK_TOL)?;
            Ok(BaselineOutcome {
                policy,
                beams,
                objective: outcome.objective,
            })
        }
        SolveStatus::Infeasible => Err(Error::Infeasible(format!("{what} baseline infeasible"))),
        SolveStatus::NumericalFailure => Err(Error::NumericalFailure(format!(
            "{what} baseline did not converge"
        ))),
    }
}

/// Full cooperation: every RRH carries every stream and the backhaul caps are
/// ignored, which lower-bounds the decomposition optimum on matched seeds.
pub fn baseline_full_cooperation(scen: &Scenario, solve_tol: f64) -> Result<BaselineOutcome> {
    let all = SelectionMatrix::all_ones(scen.rrh_count, scen.ir_count);
    let outcome = solve(&build_primal(scen, &all), scen, solve_tol)?;
    finish(outcome, scen, "full-cooperation")
}

/// Full cooperation without energy sharing: each RRH pays its circuit and
/// amplifier power from its own harvest, the CP from its own generator; no
/// micro-grid transfer, grid losses unused.
pub fn baseline_no_energy_share(scen: &Scenario, solve_tol: f64) -> Result<BaselineOutcome> {
    let all = SelectionMatrix::all_ones(scen.rrh_count, scen.ir_count);
    let program = build_program(scen, SelectionMode::Fixed(all), EnergyModel::PerRrhBudget);
    let outcome = solve(&program, scen, solve_tol)?;
    finish(outcome, scen, "no-energy-share")
}

/// Build the co-located variant of a generated scenario: one RRH at the
/// cluster centroid carrying all `Nt·L` antennas, unconstrained transmit
/// power, no backhaul limits and an effectively unlimited energy supply.
/// The receiver placement stream depends only on the seed, so positions
/// match the distributed scenario; channels redraw from the centroid
/// distances.
pub fn colocated_scenario(
    cfg: &TopologyConfig,
    params: &ScenarioParams,
    seed: u64,
) -> Result<Scenario> {
    let mut merged = params.clone();
    merged.antennas_per_rrh = params.antennas_per_rrh * params.rrh_count;
    merged.rrh_count = 1;
    merged.rrh_power_limit_dbm = 90.0; // 1 MW cap stands in for "unlimited"
    merged.backhaul_cap = f64::MAX / 4.0;
    merged.supply_limits = vec![1e6, 1e6];
    merged.grid_loss_coeffs = None;
    generate_scenario(cfg, &merged, seed)
}

/// Co-located baseline: solve the relaxed problem on the centroid variant.
pub fn baseline_colocated(
    cfg: &TopologyConfig,
    params: &ScenarioParams,
    seed: u64,
    solve_tol: f64,
) -> Result<(Scenario, BaselineOutcome)> {
    let scen = colocated_scenario(cfg, params, seed)?;
    let all = SelectionMatrix::all_ones(1, scen.ir_count);
    let outcome = solve(&build_primal(&scen, &all), &scen, solve_tol)?;
    let solved = finish(outcome, &scen, "co-located")?;
    Ok((scen, solved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use swipt_core::gbd::{run_gbd, GbdOptions, Kappa};

    fn tiny(seed: u64) -> Scenario {
        generate_scenario(&ScenarioParams::tiny_topology(), &ScenarioParams::tiny(), seed)
            .unwrap()
    }

    #[test]
    fn full_cooperation_lower_bounds_gbd() {
        for seed in [40u64, 41] {
            let scen = tiny(seed);
            let full = baseline_full_cooperation(&scen, 1e-8).unwrap();
            let gbd = run_gbd(&scen, &GbdOptions::default()).unwrap();
            assert!(
                full.objective <= gbd.objective + 1e-6 * (1.0 + gbd.objective.abs()),
                "seed {seed}: full {} vs gbd {}",
                full.objective,
                gbd.objective
            );
        }
    }

    #[test]
    fn huge_backhaul_makes_gbd_match_full_cooperation() {
        let mut scen = tiny(42);
        scen.backhaul_caps = vec![1e9; scen.rrh_count];
        let full = baseline_full_cooperation(&scen, 1e-8).unwrap();
        let gbd = run_gbd(
            &scen,
            &GbdOptions {
                kappa: Kappa::RelativeToInitialUpperBound(1e-5),
                ..GbdOptions::default()
            },
        )
        .unwrap();
        assert!(
            (gbd.objective - full.objective).abs() <= 1e-4 * full.objective.abs(),
            "gbd {} vs full {}",
            gbd.objective,
            full.objective
        );
    }

    #[test]
    fn tight_backhaul_makes_gbd_strictly_worse() {
        // first seed with a feasible full-cooperation solve
        let (mut scen, full) = (43u64..60)
            .find_map(|seed| {
                let scen = tiny(seed);
                baseline_full_cooperation(&scen, 1e-8)
                    .ok()
                    .map(|full| (scen, full))
            })
            .expect("a feasible draw exists");
        let max_rate = scen.backhaul_rates.iter().cloned().fold(0.0f64, f64::max);
        scen.backhaul_caps = vec![max_rate + 1e-6; scen.rrh_count];
        match run_gbd(&scen, &GbdOptions::default()) {
            Ok(gbd) => assert!(
                gbd.objective >= full.objective * (1.0 + 1e-6),
                "binding caps must cost power: gbd {} vs full {}",
                gbd.objective,
                full.objective
            ),
            // under very tight caps the instance may be outright infeasible
            Err(Error::Infeasible(_)) => {}
            Err(e) => panic!("unexpected error: {e}"),
        }
    }

    #[test]
    fn no_energy_share_costs_at_least_full_cooperation() {
        // generous per-RRH budgets: matches pooled full cooperation; scarce
        // budgets on one RRH: worse or infeasible
        let scen = tiny(44);
        let full = baseline_full_cooperation(&scen, 1e-8).unwrap();
        let solo = baseline_no_energy_share(&scen, 1e-8).unwrap();
        assert!(solo.objective >= full.objective - 1e-4 * (1.0 + full.objective.abs()));

        let mut scarce = scen.clone();
        scarce.supply_limits[0] = scarce.rrh_circuit_powers[0] + 1e-3;
        match baseline_no_energy_share(&scarce, 1e-8) {
            Ok(out) => assert!(out.objective >= solo.objective - 1e-6),
            Err(Error::Infeasible(_)) => {}
            Err(e) => panic!("unexpected error: {e}"),
        }
    }

    #[test]
    fn colocated_variant_solves() {
        let (scen, out) =
            baseline_colocated(&ScenarioParams::tiny_topology(), &ScenarioParams::tiny(), 45, 1e-8)
                .unwrap();
        assert_eq!(scen.rrh_count, 1);
        assert_eq!(scen.antennas_per_rrh, 4);
        assert!(out.objective > 0.0);
    }

    #[test]
    fn colocated_loses_spatial_diversity_on_average() {
        // same receiver drops, same antenna total: the distributed cluster
        // usually has a closer antenna subset than the centroid
        let cfg = ScenarioParams::tiny_topology();
        let params = ScenarioParams::tiny();
        let mut dist_total = 0.0;
        let mut co_total = 0.0;
        let mut counted = 0;
        for seed in 0..10u64 {
            let scen = match generate_scenario(&cfg, &params, seed) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let Ok(distributed) = baseline_full_cooperation(&scen, 1e-8) else {
                continue;
            };
            let Ok((_, co)) = baseline_colocated(&cfg, &params, seed, 1e-8) else {
                continue;
            };
            dist_total += distributed.objective;
            co_total += co.objective;
            counted += 1;
        }
        assert!(counted >= 6, "too few comparable seeds: {counted}");
        assert!(
            co_total >= dist_total,
            "co-located mean {co_total} below distributed mean {dist_total}"
        );
    }

    #[test]
    fn colocated_zero_demand_costs_nothing() {
        let mut params = ScenarioParams::tiny();
        params.er_count = 0;
        params.ir_sinr_targets_db = vec![-50.0];
        params.er_sinr_cap_db = -60.0;
        let (_, out) =
            baseline_colocated(&ScenarioParams::tiny_topology(), &params, 46, 1e-8).unwrap();
        assert!(out.objective >= -1e-9);
        assert!(out.objective < 1e-4, "objective {}", out.objective);
    }

    #[test]
    fn no_energy_share_struggles_at_night_for_solar_heavy_mixes() {
        use swipt_core::scenario::EnergyProfile;
        // per-RRH budgets taken from the daily profile: a solar-heavy RRH has
        // almost nothing at night, so the no-sharing baseline pays more power
        // (or fails outright) at night than at noon, while pooled full
        // cooperation shrugs
        let cfg = ScenarioParams::tiny_topology();
        let mut params = ScenarioParams::tiny();
        params.rrh_count = 3;
        params.ir_sinr_targets_db = vec![6.0, 9.0];
        let mut profile = EnergyProfile::synthetic_default(3);
        profile.e_scale = 60.0; // tight enough that the night-time budget binds
        let night_slot = 8; // 02:00
        let noon_slot = 48; // 12:00

        let mut night_worse = 0;
        let mut compared = 0;
        for seed in 0..8u64 {
            let at_slot = |slot: usize| -> Option<f64> {
                let mut p = params.clone();
                p.supply_limits = profile.supply_limits(slot, 10.0).unwrap();
                let scen = generate_scenario(&cfg, &p, seed).ok()?;
                baseline_no_energy_share(&scen, 1e-8).ok().map(|o| o.objective)
            };
            let noon = at_slot(noon_slot);
            let night = at_slot(night_slot);
            match (noon, night) {
                (Some(noon), Some(night)) => {
                    compared += 1;
                    if night >= noon * (1.0 - 1e-6) {
                        night_worse += 1;
                    }
                }
                (Some(_), None) => {
                    // night infeasible while noon works: the starkest form
                    compared += 1;
                    night_worse += 1;
                }
                _ => {}
            }
        }
        assert!(compared >= 4, "too few comparable seeds: {compared}");
        assert!(
            night_worse * 2 > compared,
            "night was cheaper than noon on {}/{compared} seeds",
            compared - night_worse
        );
    }
}

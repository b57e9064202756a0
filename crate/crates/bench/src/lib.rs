//! Shared fixtures for the solver benchmarks.

use swipt_core::scenario::{generate_scenario, ScenarioParams};
use swipt_core::Scenario;

/// Enumeration-friendly two-RRH instance.
pub fn tiny_instance(seed: u64) -> Scenario {
    generate_scenario(&ScenarioParams::tiny_topology(), &ScenarioParams::tiny(), seed)
        .expect("valid preset")
}

/// Three-RRH desk-scale instance.
pub fn desk_instance(seed: u64) -> Scenario {
    generate_scenario(
        &ScenarioParams::tiny_topology(),
        &ScenarioParams::desk_scale(),
        seed,
    )
    .expect("valid preset")
}

//! Experiment specification and JSON config overlay.

use serde::{Deserialize, Serialize};
use swipt_core::error::{Error, Result};
use swipt_core::scenario::{ScenarioParams, TopologyConfig};

/// Which sweep an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    PowerVsAntennas,
    PowerVsCsiError,
    HarvestedVsAntennas,
    HarvestedVsCsiError,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "convergence" => Ok(Self::Convergence),
            "power_vs_antennas" => Ok(Self::PowerVsAntennas),
            "power_vs_csi_error" => Ok(Self::PowerVsCsiError),
            "harvested_vs_antennas" => Ok(Self::HarvestedVsAntennas),
            "harvested_vs_csi_error" => Ok(Self::HarvestedVsCsiError),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }

    /// Name of the swept parameter in the output CSVs.
    pub fn sweep_param(&self) -> &'static str {
        match self {
            Self::Convergence => "iteration_budget",
            Self::PowerVsAntennas | Self::HarvestedVsAntennas => "total_antennas",
            Self::PowerVsCsiError | Self::HarvestedVsCsiError => "sigma_est_sq",
        }
    }

    pub fn default_sweep(&self) -> Vec<f64> {
        match self {
            Self::Convergence => vec![0.0],
            Self::PowerVsAntennas | Self::HarvestedVsAntennas => vec![4.0, 6.0, 8.0],
            Self::PowerVsCsiError | Self::HarvestedVsCsiError => vec![0.0, 0.025, 0.05],
        }
    }
}

/// Solvers and baselines an experiment may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gbd,
    Sca,
    FullCoop,
    FullCoopNoEnergyShare,
    Colocated,
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gbd" => Ok(Self::Gbd),
            "sca" => Ok(Self::Sca),
            "full_coop" => Ok(Self::FullCoop),
            "full_coop_no_energy_share" => Ok(Self::FullCoopNoEnergyShare),
            "colocated" => Ok(Self::Colocated),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gbd => "gbd",
            Self::Sca => "sca",
            Self::FullCoop => "full_coop",
            Self::FullCoopNoEnergyShare => "full_coop_no_energy_share",
            Self::Colocated => "colocated",
        }
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub sweep_values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub output_dir: std::path::PathBuf,
    pub topology: TopologyConfig,
    pub params: ScenarioParams,
    /// Absolute decomposition gap; `None` keeps the relative default.
    pub kappa: Option<f64>,
    /// Penalty weight override for the convex-approximation solver.
    pub phi: Option<f64>,
    /// Iteration budget override; `None` keeps each solver's default.
    pub max_iter: Option<usize>,
    /// Interior-point accuracy.
    pub solve_tol: f64,
    /// Thread cap (from `SWIPT_NUM_THREADS`).
    pub num_threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, output_dir: impl Into<std::path::PathBuf>) -> Self {
        let (topology, params) = match kind {
            ExperimentKind::Convergence => {
                (ScenarioParams::tiny_topology(), ScenarioParams::desk_scale())
            }
            _ => (ScenarioParams::tiny_topology(), ScenarioParams::tiny()),
        };
        Self {
            kind,
            sweep_values: kind.default_sweep(),
            seeds: (0..5).collect(),
            algorithms: match kind {
                ExperimentKind::Convergence => vec![Algorithm::Gbd, Algorithm::Sca],
                _ => vec![
                    Algorithm::Gbd,
                    Algorithm::Sca,
                    Algorithm::FullCoop,
                    Algorithm::FullCoopNoEnergyShare,
                    Algorithm::Colocated,
                ],
            },
            output_dir: output_dir.into(),
            topology,
            params,
            kappa: None,
            phi: None,
            max_iter: None,
            solve_tol: 1e-8,
            num_threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list must not be empty".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::Config("sweep values must not be empty".into()));
        }
        match self.kind {
            ExperimentKind::PowerVsAntennas | ExperimentKind::HarvestedVsAntennas => {
                for &v in &self.sweep_values {
                    if v <= 0.0 || v.fract() != 0.0 {
                        return Err(Error::Config(format!(
                            "antenna sweep values must be positive integers, got {v}"
                        )));
                    }
                    if (v as usize) % self.params.rrh_count != 0 {
                        return Err(Error::Config(format!(
                            "total antenna count {v} not divisible by {} RRHs",
                            self.params.rrh_count
                        )));
                    }
                }
            }
            ExperimentKind::PowerVsCsiError | ExperimentKind::HarvestedVsCsiError => {
                if self.sweep_values.iter().any(|&v| v < 0.0) {
                    return Err(Error::Config(
                        "estimation-error sweep values must be nonnegative".into(),
                    ));
                }
            }
            ExperimentKind::Convergence => {}
        }
        Ok(())
    }
}

/// JSON config overlay: every field optional, unknown fields rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inter_site_distance: Option<f64>,
    pub service_radius: Option<f64>,
    pub path_loss_exponent: Option<f64>,
    pub carrier_freq: Option<f64>,

    pub rrh_count: Option<usize>,
    pub ir_count: Option<usize>,
    pub er_count: Option<usize>,
    pub antennas_per_rrh: Option<usize>,
    pub ir_sinr_targets_db: Option<Vec<f64>>,
    pub er_sinr_cap_db: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub rrh_power_limit_dbm: Option<f64>,
    pub er_min_harvest_dbm: Option<f64>,
    pub backhaul_cap: Option<f64>,
    pub cp_circuit_power_dbm: Option<f64>,
    pub rrh_circuit_power_dbm: Option<f64>,
    pub amplifier_efficiency: Option<f64>,
    pub rf_conversion_efficiency: Option<f64>,
    pub normalized_csi_error: Option<f64>,
    pub supply_limits: Option<Vec<f64>>,
    /// Dense row-major grid-loss matrix, `(L+1)²` entries.
    pub grid_loss_coeffs: Option<Vec<f64>>,

    pub sweep_values: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub algorithms: Option<Vec<String>>,
    pub kappa: Option<f64>,
    pub phi: Option<f64>,
    pub max_iter: Option<usize>,
    pub solve_tol: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Overlay this config onto a spec.
    pub fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        let t = &mut spec.topology;
        if let Some(v) = self.inter_site_distance {
            t.inter_site_distance = v;
        }
        if let Some(v) = self.service_radius {
            t.service_radius = v;
        }
        if let Some(v) = self.path_loss_exponent {
            t.path_loss_exponent = v;
        }
        if let Some(v) = self.carrier_freq {
            t.carrier_freq = v;
        }

        let p = &mut spec.params;
        if let Some(v) = self.rrh_count {
            p.rrh_count = v;
        }
        if let Some(v) = self.ir_count {
            p.ir_count = v;
        }
        if let Some(v) = self.er_count {
            p.er_count = v;
        }
        if let Some(v) = self.antennas_per_rrh {
            p.antennas_per_rrh = v;
        }
        if let Some(v) = &self.ir_sinr_targets_db {
            p.ir_sinr_targets_db = v.clone();
        }
        if let Some(v) = self.er_sinr_cap_db {
            p.er_sinr_cap_db = v;
        }
        if let Some(v) = self.noise_power_dbm {
            p.noise_power_dbm = v;
        }
        if let Some(v) = self.rrh_power_limit_dbm {
            p.rrh_power_limit_dbm = v;
        }
        if let Some(v) = self.er_min_harvest_dbm {
            p.er_min_harvest_dbm = v;
        }
        if let Some(v) = self.backhaul_cap {
            p.backhaul_cap = v;
        }
        if let Some(v) = self.cp_circuit_power_dbm {
            p.cp_circuit_power_dbm = v;
        }
        if let Some(v) = self.rrh_circuit_power_dbm {
            p.rrh_circuit_power_dbm = v;
        }
        if let Some(v) = self.amplifier_efficiency {
            p.amplifier_efficiency = v;
        }
        if let Some(v) = self.rf_conversion_efficiency {
            p.rf_conversion_efficiency = v;
        }
        if let Some(v) = self.normalized_csi_error {
            p.normalized_csi_error = v;
        }
        if let Some(v) = &self.supply_limits {
            p.supply_limits = v.clone();
        }
        if let Some(flat) = &self.grid_loss_coeffs {
            let dim = p.rrh_count + 1;
            if flat.len() != dim * dim {
                return Err(Error::Config(format!(
                    "grid_loss_coeffs needs {} entries, got {}",
                    dim * dim,
                    flat.len()
                )));
            }
            p.grid_loss_coeffs = Some(nalgebra_matrix(dim, flat));
        }

        if let Some(v) = &self.sweep_values {
            spec.sweep_values = v.clone();
        }
        if let Some(v) = &self.seeds {
            spec.seeds = v.clone();
        }
        if let Some(v) = &self.algorithms {
            spec.algorithms = v
                .iter()
                .map(|s| Algorithm::parse(s))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = self.kappa {
            spec.kappa = Some(v);
        }
        if let Some(v) = self.phi {
            spec.phi = Some(v);
        }
        if let Some(v) = self.max_iter {
            spec.max_iter = Some(v);
        }
        if let Some(v) = self.solve_tol {
            spec.solve_tol = v;
        }
        Ok(())
    }
}

fn nalgebra_matrix(dim: usize, flat: &[f64]) -> swipt_core::nalgebra::DMatrix<f64> {
    swipt_core::nalgebra::DMatrix::from_row_slice(dim, dim, flat)
}

/// Parse a `--seeds` argument: either `a..b` (half-open) or a single seed.
pub fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let start: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range '{text}'")))?;
        let end: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range '{text}'")))?;
        if end <= start {
            return Err(Error::Config(format!("empty seed range '{text}'")));
        }
        Ok((start..end).collect())
    } else {
        let seed: u64 = text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed '{text}'")))?;
        Ok(vec![seed])
    }
}

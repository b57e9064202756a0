//! Deterministic, seedable generation of problem instances: topology, path
//! loss, fading, CSI uncertainty and renewable-energy profiles.
//!
//! Reproducibility: every random draw comes from a ChaCha20 stream keyed by
//! SHA-256 over `(seed, label, indices)`. Identical `(config, seed)` inputs
//! produce bit-identical scenarios on every platform. The seed is recorded in
//! the generated [`Scenario`] and in every snapshot.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::model::{secrecy_rate, Scenario};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Convert dBm to Watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Convert Watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

/// Convert dB to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Placement and propagation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyConfig {
    /// Distance between neighbouring RRHs, meters.
    pub inter_site_distance: f64,
    /// Radius of the service disc the receivers are dropped in, meters.
    pub service_radius: f64,
    /// Path-loss exponent applied beyond the 1 m reference distance.
    pub path_loss_exponent: f64,
    /// Carrier center frequency, Hz.
    pub carrier_freq: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            inter_site_distance: 150.0,
            service_radius: 150.0,
            path_loss_exponent: 2.7,
            carrier_freq: 915e6,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inter_site_distance <= 0.0 || self.service_radius <= 0.0 {
            return Err(Error::InvalidArgument("distances must be positive".into()));
        }
        if self.path_loss_exponent < 2.0 {
            return Err(Error::InvalidArgument(
                "path loss exponent must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Free-space power gain at the 1 m reference distance, `(λ/4π)²`.
    pub fn reference_gain(&self) -> f64 {
        let wavelength = SPEED_OF_LIGHT / self.carrier_freq;
        let g = wavelength / (4.0 * std::f64::consts::PI);
        g * g
    }

    /// Linear path gain at distance `d` meters: free-space at 1 m, then
    /// `d^{-exponent}` decay. Distances below the reference clamp to 1 m.
    pub fn path_gain(&self, d: f64) -> f64 {
        self.reference_gain() * d.max(1.0).powf(-self.path_loss_exponent)
    }

    /// RRH positions: a regular polygon with the configured side length
    /// (equilateral triangle for `L = 3`), centered on the origin. A single
    /// RRH sits at the centroid.
    pub fn rrh_positions(&self, rrh_count: usize) -> Vec<[f64; 2]> {
        if rrh_count == 1 {
            return vec![[0.0, 0.0]];
        }
        let circumradius =
            self.inter_site_distance / (2.0 * (std::f64::consts::PI / rrh_count as f64).sin());
        (0..rrh_count)
            .map(|l| {
                let angle = 2.0 * std::f64::consts::PI * l as f64 / rrh_count as f64;
                [circumradius * angle.cos(), circumradius * angle.sin()]
            })
            .collect()
    }
}

/// Physical-layer parameter set, dB/dBm at this config boundary only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub rrh_count: usize,
    pub ir_count: usize,
    pub er_count: usize,
    pub antennas_per_rrh: usize,
    /// Per-IR SINR targets in dB; cycled when shorter than `ir_count`.
    pub ir_sinr_targets_db: Vec<f64>,
    /// Worst-case tolerable eavesdropper SINR, dB.
    pub er_sinr_cap_db: f64,
    /// Thermal plus signal-processing noise power, dBm.
    pub noise_power_dbm: f64,
    /// Per-RRH transmit power limit, dBm.
    pub rrh_power_limit_dbm: f64,
    /// Minimum harvested power per ER, dBm.
    pub er_min_harvest_dbm: f64,
    /// Per-link backhaul capacity, bits/s/Hz.
    pub backhaul_cap: f64,
    pub cp_circuit_power_dbm: f64,
    pub rrh_circuit_power_dbm: f64,
    /// Power-amplifier efficiency in (0, 1]; the inefficiency factor is its
    /// reciprocal.
    pub amplifier_efficiency: f64,
    pub rf_conversion_efficiency: f64,
    /// Normalized maximum channel estimation error `ε²/‖g‖²` applied to the
    /// ER channels at generation time.
    pub normalized_csi_error: f64,
    /// Maximum energy per source, Joules/s (`rrh_count + 1` entries, CP
    /// last). Typically produced by [`EnergyProfile::supply_limits`].
    pub supply_limits: Vec<f64>,
    /// Grid-loss coefficient matrix; `None` selects the documented default
    /// `b₀·(I + 0.1·(11ᵀ − I))` scaled so that the loss at full supply is 5%.
    pub grid_loss_coeffs: Option<DMatrix<f64>>,
}

impl ScenarioParams {
    /// Full-scale parameter set: three RRHs with six antennas each serving
    /// five IRs and two ERs, staggered 6–18 dB SINR targets, −23 dBm noise,
    /// 48 dBm per-RRH power allowance and a −10 dBm harvest floor.
    pub fn full_scale() -> Self {
        Self {
            rrh_count: 3,
            ir_count: 5,
            er_count: 2,
            antennas_per_rrh: 6,
            ir_sinr_targets_db: vec![6.0, 9.0, 12.0, 15.0, 18.0],
            er_sinr_cap_db: 0.0,
            noise_power_dbm: -23.0,
            rrh_power_limit_dbm: 48.0,
            er_min_harvest_dbm: -10.0,
            backhaul_cap: 10.0,
            cp_circuit_power_dbm: 40.0,
            rrh_circuit_power_dbm: 30.0,
            amplifier_efficiency: 0.38,
            rf_conversion_efficiency: 0.5,
            normalized_csi_error: 0.05,
            supply_limits: vec![250.0, 250.0, 250.0, 10.0],
            grid_loss_coeffs: None,
        }
    }

    /// Desk-scale enumeration-friendly instance: two RRHs with two antennas
    /// each, two IRs, one ER. Small service disc so the reference powers
    /// remain feasible with the 1 m free-space path-loss anchor.
    pub fn tiny() -> Self {
        Self {
            rrh_count: 2,
            ir_count: 2,
            er_count: 1,
            antennas_per_rrh: 2,
            ir_sinr_targets_db: vec![6.0, 9.0],
            er_sinr_cap_db: 0.0,
            noise_power_dbm: -23.0,
            rrh_power_limit_dbm: 48.0,
            er_min_harvest_dbm: -20.0,
            backhaul_cap: 10.0,
            cp_circuit_power_dbm: 40.0,
            rrh_circuit_power_dbm: 30.0,
            amplifier_efficiency: 0.38,
            rf_conversion_efficiency: 0.5,
            normalized_csi_error: 0.05,
            supply_limits: vec![400.0, 400.0, 10.0],
            grid_loss_coeffs: None,
        }
    }

    /// Desk-scale experiment defaults: three RRHs, three IRs, two ERs.
    pub fn desk_scale() -> Self {
        Self {
            rrh_count: 3,
            ir_count: 3,
            er_count: 2,
            antennas_per_rrh: 2,
            ir_sinr_targets_db: vec![6.0, 9.0, 12.0],
            supply_limits: vec![400.0, 400.0, 400.0, 10.0],
            ..Self::tiny()
        }
    }

    /// Topology matched to the desk-scale presets: the geometry shrinks with
    /// the instance so the reference transmit powers stay meaningful.
    pub fn tiny_topology() -> TopologyConfig {
        TopologyConfig {
            inter_site_distance: 10.0,
            service_radius: 10.0,
            ..TopologyConfig::default()
        }
    }
}

/// ChaCha20 stream keyed by SHA-256 over `(seed, label, indices)`.
pub(crate) fn derived_rng(seed: u64, label: &str, indices: &[u64]) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    for i in indices {
        hasher.update(i.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

/// One circularly-symmetric complex Gaussian sample with unit variance.
fn cscg(rng: &mut ChaCha20Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniform point in a disc of radius `r` around the origin.
fn uniform_disc(rng: &mut ChaCha20Rng, r: f64) -> [f64; 2] {
    let radius = r * rng.gen::<f64>().sqrt();
    let angle = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    [radius * angle.cos(), radius * angle.sin()]
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Draw the joint channel of one receiver: per-RRH path gain times i.i.d.
/// unit-variance CSCG fading. The fading stream is keyed per (receiver, RRH)
/// so that scenarios with more antennas extend smaller ones entry-for-entry.
fn draw_channel(
    seed: u64,
    label: &str,
    receiver: usize,
    position: [f64; 2],
    cfg: &TopologyConfig,
    rrh_positions: &[[f64; 2]],
    antennas_per_rrh: usize,
) -> CVector {
    let n = rrh_positions.len() * antennas_per_rrh;
    let mut h = CVector::zeros(n);
    for (l, &rrh) in rrh_positions.iter().enumerate() {
        let gain = cfg.path_gain(distance(position, rrh)).sqrt();
        let mut rng = derived_rng(seed, label, &[receiver as u64, l as u64]);
        for t in 0..antennas_per_rrh {
            h[l * antennas_per_rrh + t] = cscg(&mut rng) * gain;
        }
    }
    h
}

/// Generate a problem instance. Deterministic in `(cfg, params, seed)`.
pub fn generate_scenario(
    cfg: &TopologyConfig,
    params: &ScenarioParams,
    seed: u64,
) -> Result<Scenario> {
    cfg.validate()?;
    if params.rrh_count == 0
        || params.ir_count == 0
        || params.antennas_per_rrh == 0
    {
        return Err(Error::InvalidArgument(
            "counts must be at least one (ERs may be zero)".into(),
        ));
    }
    if params.supply_limits.len() != params.rrh_count + 1 {
        return Err(Error::Dimension {
            context: "supply limits",
            expected: params.rrh_count + 1,
            actual: params.supply_limits.len(),
        });
    }

    let rrh_positions = cfg.rrh_positions(params.rrh_count);
    let mut placement = derived_rng(seed, "placement", &[]);
    let ir_positions: Vec<[f64; 2]> = (0..params.ir_count)
        .map(|_| uniform_disc(&mut placement, cfg.service_radius))
        .collect();
    let er_positions: Vec<[f64; 2]> = (0..params.er_count)
        .map(|_| uniform_disc(&mut placement, cfg.service_radius))
        .collect();

    let ir_channels: Vec<CVector> = ir_positions
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            draw_channel(
                seed,
                "ir-fading",
                k,
                p,
                cfg,
                &rrh_positions,
                params.antennas_per_rrh,
            )
        })
        .collect();
    let er_true_channels: Vec<CVector> = er_positions
        .iter()
        .enumerate()
        .map(|(m, &p)| {
            draw_channel(
                seed,
                "er-fading",
                m,
                p,
                cfg,
                &rrh_positions,
                params.antennas_per_rrh,
            )
        })
        .collect();

    let n = params.rrh_count * params.antennas_per_rrh;
    let gamma_tol = db_to_linear(params.er_sinr_cap_db);
    let ir_sinr_targets: Vec<f64> = (0..params.ir_count)
        .map(|k| {
            db_to_linear(params.ir_sinr_targets_db[k % params.ir_sinr_targets_db.len()])
        })
        .collect();
    let backhaul_rates: Vec<f64> = ir_sinr_targets
        .iter()
        .map(|&g| secrecy_rate(g, gamma_tol).expect("nonnegative linear SINRs"))
        .collect();

    let grid_loss_coeffs = match &params.grid_loss_coeffs {
        Some(b) => b.clone(),
        None => default_grid_coeffs(&params.supply_limits),
    };

    let scen = Scenario {
        rrh_count: params.rrh_count,
        ir_count: params.ir_count,
        er_count: params.er_count,
        antennas_per_rrh: params.antennas_per_rrh,
        ir_channels,
        er_estimates: er_true_channels.clone(),
        er_true_channels,
        er_uncertainty_shapes: vec![CMatrix::identity(n, n); params.er_count],
        er_uncertainty_radii: vec![0.0; params.er_count],
        ir_sinr_targets,
        er_sinr_caps: vec![gamma_tol; params.er_count],
        ir_noise_powers: vec![dbm_to_watts(params.noise_power_dbm); params.ir_count],
        er_noise_power: dbm_to_watts(params.noise_power_dbm),
        backhaul_caps: vec![params.backhaul_cap; params.rrh_count],
        rrh_power_limits: vec![
            dbm_to_watts(params.rrh_power_limit_dbm);
            params.rrh_count
        ],
        er_min_harvest: vec![dbm_to_watts(params.er_min_harvest_dbm); params.er_count],
        supply_limits: params.supply_limits.clone(),
        grid_loss_coeffs,
        cp_circuit_power: dbm_to_watts(params.cp_circuit_power_dbm),
        rrh_circuit_powers: vec![
            dbm_to_watts(params.rrh_circuit_power_dbm);
            params.rrh_count
        ],
        amplifier_inefficiency: 1.0 / params.amplifier_efficiency,
        rf_conversion_efficiency: params.rf_conversion_efficiency,
        backhaul_rates,
        seed,
    };
    let scen = apply_csi_error(
        &scen,
        &vec![params.normalized_csi_error; params.er_count],
    )?;
    scen.validate()?;
    Ok(scen)
}

/// Documented default grid-loss matrix: `b₀·(I + 0.1·(11ᵀ − I))`, with `b₀`
/// scaled so that the resistive loss at full supply is 5% of the injected
/// power. Any positive-definite matrix can be supplied through the config
/// instead.
pub fn default_grid_coeffs(supply_limits: &[f64]) -> DMatrix<f64> {
    let n = supply_limits.len();
    let mut pattern = DMatrix::from_element(n, n, 0.1);
    for i in 0..n {
        pattern[(i, i)] = 1.0;
    }
    let e = DVector::from_column_slice(supply_limits);
    let quad = (e.transpose() * &pattern * &e)[(0, 0)];
    let b0 = if quad > 0.0 { 0.05 * e.sum() / quad } else { 1e-6 };
    pattern.scale(b0)
}

/// Replace the ER channel estimates with noisy versions whose normalized
/// maximum estimation error is `sigma_est_sq[m] = ε²_m / ‖g_m‖²`, using a
/// Euclidean-ball uncertainty set (`Ξ = I`).
///
/// The estimation offset for ER `m` is `Δ = ε·r·u` with `(r, u)` a
/// ball-uniform radial factor and direction drawn once per `(seed, m)`; the
/// same draw serves every error level, so sweeps over `sigma_est_sq` yield
/// nested uncertainty sets and the true channel always lies inside the set.
pub fn apply_csi_error(scen: &Scenario, sigma_est_sq: &[f64]) -> Result<Scenario> {
    if sigma_est_sq.len() != scen.er_count {
        return Err(Error::Dimension {
            context: "sigma_est_sq",
            expected: scen.er_count,
            actual: sigma_est_sq.len(),
        });
    }
    if sigma_est_sq.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidArgument(
            "normalized estimation error must be nonnegative".into(),
        ));
    }
    let n = scen.antenna_total();
    let mut out = scen.clone();
    for m in 0..scen.er_count {
        let g_true = &scen.er_true_channels[m];
        let eps = (sigma_est_sq[m] * g_true.norm_squared()).sqrt();
        let mut rng = derived_rng(scen.seed, "csi-error", &[m as u64]);
        let mut direction = CVector::from_fn(n, |_, _| cscg(&mut rng));
        let norm = direction.norm();
        if norm > 0.0 {
            direction /= Complex64::new(norm, 0.0);
        }
        // ball-uniform radius in complex dimension n (real dimension 2n)
        let radial: f64 = rng.gen::<f64>().powf(1.0 / (2.0 * n as f64));
        let delta = direction.scale(eps * radial);
        out.er_estimates[m] = g_true - delta;
        out.er_uncertainty_radii[m] = eps;
        out.er_uncertainty_shapes[m] = CMatrix::identity(n, n);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Renewable energy profiles
// ---------------------------------------------------------------------------

/// Normalized daily renewable profile: 96 quarter-hour samples for wind and
/// solar plus the per-RRH mixing weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyProfile {
    /// Normalized wind samples in `[0, 1]`, 96 per day.
    pub xi_wind: Vec<f64>,
    /// Normalized solar samples in `[0, 1]`, 96 per day.
    pub xi_solar: Vec<f64>,
    /// Peak harvest in Joules/s.
    pub e_scale: f64,
    /// Per-RRH `(wind_weight, solar_weight)`, each pair summing to one.
    pub mix: Vec<(f64, f64)>,
}

pub const SLOTS_PER_DAY: usize = 96;

impl EnergyProfile {
    /// Synthetic defaults: a morning-to-evening wind ramp and a midday solar
    /// bell, with the reference mixing weights
    /// `(0.5, 0.5), (0.9, 0.1), (0.1, 0.9)` cycled over the RRHs.
    pub fn synthetic_default(rrh_count: usize) -> Self {
        let xi_wind: Vec<f64> = (0..SLOTS_PER_DAY)
            .map(|t| 0.2 + 0.6 * t as f64 / (SLOTS_PER_DAY - 1) as f64)
            .collect();
        let xi_solar: Vec<f64> = (0..SLOTS_PER_DAY)
            .map(|t| {
                let x = (t as f64 - 48.0) / 14.0;
                (-x * x).exp()
            })
            .collect();
        let base = [(0.5, 0.5), (0.9, 0.1), (0.1, 0.9)];
        let mix = (0..rrh_count).map(|l| base[l % base.len()]).collect();
        Self {
            xi_wind,
            xi_solar,
            e_scale: 500.0,
            mix,
        }
    }

    /// Read a profile from CSV with columns `slot,xi_wind,xi_solar`.
    pub fn from_csv(path: &std::path::Path, e_scale: f64, mix: Vec<(f64, f64)>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Config(format!("energy profile {}: {e}", path.display())))?;
        let mut rows: Vec<(usize, f64, f64)> = Vec::new();
        for record in reader.deserialize() {
            let row: (usize, f64, f64) =
                record.map_err(|e| Error::Config(format!("energy profile row: {e}")))?;
            rows.push(row);
        }
        rows.sort_by_key(|r| r.0);
        let profile = Self {
            xi_wind: rows.iter().map(|r| r.1).collect(),
            xi_solar: rows.iter().map(|r| r.2).collect(),
            e_scale,
            mix,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if self.xi_wind.len() != self.xi_solar.len() || self.xi_wind.is_empty() {
            return Err(Error::Config(
                "wind and solar profiles must be non-empty and equal length".into(),
            ));
        }
        let in_unit = |xs: &[f64]| xs.iter().all(|&x| (0.0..=1.0).contains(&x));
        if !in_unit(&self.xi_wind) || !in_unit(&self.xi_solar) {
            return Err(Error::Config("profile samples must lie in [0, 1]".into()));
        }
        for &(w, s) in &self.mix {
            if (w + s - 1.0).abs() > 1e-9 || w < 0.0 || s < 0.0 {
                return Err(Error::Config(
                    "mixing weights must be nonnegative and sum to one".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn slots(&self) -> usize {
        self.xi_wind.len()
    }

    /// Supply limits for every energy source at a 1-based slot: the RRHs
    /// harvest according to their profile mix, the CP generator contributes
    /// a fixed `cp_supply`.
    pub fn supply_limits(&self, slot: usize, cp_supply: f64) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = (0..self.mix.len())
            .map(|l| harvest_at(self, l, slot))
            .collect::<Result<_>>()?;
        out.push(cp_supply);
        Ok(out)
    }
}

/// Harvest of RRH `rrh` at 1-based slot `slot`:
/// `E_scale · (w_wind·ξ_wind[slot] + w_solar·ξ_solar[slot])` in Joules/s.
pub fn harvest_at(profile: &EnergyProfile, rrh: usize, slot: usize) -> Result<f64> {
    if slot == 0 || slot > profile.slots() {
        return Err(Error::SlotOutOfRange {
            slot,
            len: profile.slots(),
        });
    }
    if rrh >= profile.mix.len() {
        return Err(Error::Dimension {
            context: "harvest_at rrh index",
            expected: profile.mix.len(),
            actual: rrh,
        });
    }
    let (w, s) = profile.mix[rrh];
    Ok(profile.e_scale * (w * profile.xi_wind[slot - 1] + s * profile.xi_solar[slot - 1]))
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

/// Write a scenario snapshot as JSON for replay. Complex entries are stored
/// as `[re, im]` pairs; floats round-trip exactly.
pub fn save_snapshot(scen: &Scenario, path: &std::path::Path) -> Result<()> {
    let json = serde_json::to_string_pretty(scen)
        .map_err(|e| Error::Config(format!("snapshot encode: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Load a scenario snapshot written by [`save_snapshot`].
pub fn load_snapshot(path: &std::path::Path) -> Result<Scenario> {
    let json = std::fs::read_to_string(path)?;
    let scen: Scenario =
        serde_json::from_str(&json).map_err(|e| Error::Config(format!("snapshot decode: {e}")))?;
    scen.validate()?;
    Ok(scen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = ScenarioParams::tiny_topology();
        let params = ScenarioParams::tiny();
        let a = generate_scenario(&cfg, &params, 77).unwrap();
        let b = generate_scenario(&cfg, &params, 77).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let c = generate_scenario(&cfg, &params, 78).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn path_gain_power_law() {
        let cfg = TopologyConfig::default();
        let d = 37.0;
        let ratio = cfg.path_gain(2.0 * d) / cfg.path_gain(d);
        assert_relative_eq!(ratio, 2f64.powf(-2.7), max_relative = 1e-12);
    }

    #[test]
    fn fading_is_unit_variance() {
        // Monte-Carlo check of the unit-variance fading assumption:
        // E[‖h‖² / (Nt·L·pathgain)] = 1 within 5% over 10⁴ draws
        let cfg = TopologyConfig {
            inter_site_distance: 10.0,
            service_radius: 10.0,
            ..TopologyConfig::default()
        };
        let positions = cfg.rrh_positions(1);
        let nt = 2;
        let mut acc = 0.0;
        let draws = 10_000;
        for rep in 0..draws {
            let h = draw_channel(rep as u64, "mc", 0, [3.0, 4.0], &cfg, &positions, nt);
            let gain = cfg.path_gain(5.0);
            acc += h.norm_squared() / (nt as f64 * gain);
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean = {mean}");
    }

    #[test]
    fn csi_error_cases() {
        let cfg = ScenarioParams::tiny_topology();
        let params = ScenarioParams::tiny();
        let scen = generate_scenario(&cfg, &params, 5).unwrap();

        let perfect = apply_csi_error(&scen, &[0.0]).unwrap();
        assert_eq!(perfect.er_uncertainty_radii[0], 0.0);
        assert_eq!(perfect.er_estimates[0], perfect.er_true_channels[0]);

        let noisy = apply_csi_error(&scen, &[0.05]).unwrap();
        let g = &noisy.er_true_channels[0];
        assert_relative_eq!(
            noisy.er_uncertainty_radii[0].powi(2),
            0.05 * g.norm_squared(),
            max_relative = 1e-12
        );
        // true channel lies inside the uncertainty set
        let delta = g - &noisy.er_estimates[0];
        assert!(delta.norm_squared() <= noisy.er_uncertainty_radii[0].powi(2) * (1.0 + 1e-12));
    }

    #[test]
    fn csi_error_sets_are_nested_across_levels() {
        let cfg = ScenarioParams::tiny_topology();
        let params = ScenarioParams::tiny();
        let scen = generate_scenario(&cfg, &params, 6).unwrap();
        let small = apply_csi_error(&scen, &[0.02]).unwrap();
        let large = apply_csi_error(&scen, &[0.05]).unwrap();
        let center_shift = (&large.er_estimates[0] - &small.er_estimates[0]).norm();
        assert!(
            center_shift
                <= large.er_uncertainty_radii[0] - small.er_uncertainty_radii[0] + 1e-12
        );
    }

    #[test]
    fn sampled_uncertainty_stays_in_ellipsoid() {
        // rejection-sampling oracle: ball-uniform Δ never violates the
        // ellipsoid constraint
        let cfg = ScenarioParams::tiny_topology();
        let params = ScenarioParams::tiny();
        let scen = generate_scenario(&cfg, &params, 9).unwrap();
        let n = scen.antenna_total();
        let eps = scen.er_uncertainty_radii[0];
        let mut rng = derived_rng(123, "ellipsoid-samples", &[]);
        for _ in 0..10_000 {
            let mut d = CVector::from_fn(n, |_, _| cscg(&mut rng));
            let norm = d.norm();
            if norm > 0.0 {
                d /= Complex64::new(norm, 0.0);
            }
            let r: f64 = rng.gen::<f64>().powf(1.0 / (2.0 * n as f64));
            d = d.scale(eps * r);
            let quad = (d.adjoint() * &scen.er_uncertainty_shapes[0] * &d)[(0, 0)].re;
            assert!(quad <= eps * eps * (1.0 + 1e-12));
        }
    }

    #[test]
    fn harvest_cases() {
        let mut profile = EnergyProfile::synthetic_default(3);
        profile.xi_wind = vec![1.0; SLOTS_PER_DAY];
        profile.xi_solar = vec![1.0; SLOTS_PER_DAY];
        assert_relative_eq!(harvest_at(&profile, 0, 10).unwrap(), 500.0);

        // solar-dark case: mix (0.1, 0.9) at night collapses to the wind term
        let mut night = EnergyProfile::synthetic_default(3);
        night.xi_solar = vec![0.0; SLOTS_PER_DAY];
        let expected = 0.1 * night.e_scale * night.xi_wind[0];
        assert_relative_eq!(harvest_at(&night, 2, 1).unwrap(), expected);

        assert!(harvest_at(&profile, 0, 0).is_err());
        assert!(harvest_at(&profile, 0, 97).is_err());
    }

    #[test]
    fn harvest_full_day_matches_ramp_oracle() {
        // closed-form ramp profiles: harvest equals the mixing formula at
        // every slot for all three reference mixes
        let mut profile = EnergyProfile::synthetic_default(3);
        profile.xi_wind = (0..SLOTS_PER_DAY)
            .map(|t| t as f64 / (SLOTS_PER_DAY - 1) as f64)
            .collect();
        profile.xi_solar = (0..SLOTS_PER_DAY)
            .map(|t| 1.0 - t as f64 / (SLOTS_PER_DAY - 1) as f64)
            .collect();
        for (l, &(w, s)) in profile.mix.clone().iter().enumerate() {
            for slot in 1..=SLOTS_PER_DAY {
                let expected = profile.e_scale
                    * (w * profile.xi_wind[slot - 1] + s * profile.xi_solar[slot - 1]);
                assert_relative_eq!(
                    harvest_at(&profile, l, slot).unwrap(),
                    expected,
                    max_relative = 1e-14
                );
            }
        }
    }

    #[test]
    fn energy_profile_csv_round_trip() {
        let dir = std::env::temp_dir().join("swipt-profile-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("profile.csv");
        let mut text = String::from("slot,xi_wind,xi_solar\n");
        for t in 0..SLOTS_PER_DAY {
            let wind = t as f64 / (SLOTS_PER_DAY - 1) as f64;
            text.push_str(&format!("{},{},{}\n", t + 1, wind, 1.0 - wind));
        }
        std::fs::write(&path, text).unwrap();
        let profile =
            EnergyProfile::from_csv(&path, 200.0, vec![(0.5, 0.5), (0.9, 0.1)]).unwrap();
        assert_eq!(profile.slots(), SLOTS_PER_DAY);
        assert_relative_eq!(harvest_at(&profile, 0, 1).unwrap(), 100.0);
        assert_relative_eq!(
            harvest_at(&profile, 1, SLOTS_PER_DAY).unwrap(),
            0.9 * 200.0
        );
        let limits = profile.supply_limits(1, 7.5).unwrap();
        assert_eq!(limits.len(), 3);
        assert_relative_eq!(limits[2], 7.5);
    }

    #[test]
    fn snapshot_round_trip() {
        let cfg = ScenarioParams::tiny_topology();
        let params = ScenarioParams::tiny();
        let scen = generate_scenario(&cfg, &params, 31).unwrap();
        let dir = std::env::temp_dir().join("swipt-snapshot-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scen.json");
        save_snapshot(&scen, &path).unwrap();
        let back = load_snapshot(&path).unwrap();
        assert_eq!(
            serde_json::to_string(&scen).unwrap(),
            serde_json::to_string(&back).unwrap()
        );
    }

    #[test]
    fn default_grid_coeffs_lose_five_percent_at_full_supply() {
        let limits = vec![120.0, 260.0, 10.0];
        let b = default_grid_coeffs(&limits);
        let e = DVector::from_column_slice(&limits);
        let loss = (e.transpose() * &b * &e)[(0, 0)];
        assert_relative_eq!(loss, 0.05 * e.sum(), max_relative = 1e-12);
        assert!(b.clone().cholesky().is_some());
    }
}

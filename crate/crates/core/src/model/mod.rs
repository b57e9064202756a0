//! Domain types and closed-form physical-layer metrics.
//!
//! A [`Scenario`] is an immutable problem instance: channels, uncertainty
//! sets, power/backhaul limits and grid parameters, all in linear scale
//! (dB/dBm appear only at the config and CLI boundary). A [`Policy`] is a
//! candidate allocation: beamforming Gram matrices, an artificial-noise
//! covariance, the per-source energy supplies and the binary RRH/receiver
//! selections. Everything here is a pure function of its inputs.

mod metrics;
mod report;

pub use metrics::{
    backhaul_consumption, check_deterministic_constraints, grid_available_power, grid_loss,
    harvested_energy, secrecy_rate, sinr_ir,
};
pub use report::{ConstraintReport, ConstraintSlack};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, min_eigenvalue, trace_product, CMatrix, CVector};

/// Immutable problem instance.
///
/// Indexing conventions: RRHs `l ∈ 0..rrh_count`, information receivers
/// `k ∈ 0..ir_count`, energy receivers `m ∈ 0..er_count`, energy sources
/// `n ∈ 0..=rrh_count` (the last one is the central processor's generator).
/// Joint channel vectors stack the per-RRH antenna blocks, so RRH `l` owns
/// entries `l·antennas_per_rrh .. (l+1)·antennas_per_rrh`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub rrh_count: usize,
    pub ir_count: usize,
    pub er_count: usize,
    pub antennas_per_rrh: usize,

    /// Perfectly known IR channels, length `antenna_total()` each.
    #[serde(with = "serde_cvecs")]
    pub ir_channels: Vec<CVector>,
    /// ER channel estimates available to the central processor.
    #[serde(with = "serde_cvecs")]
    pub er_estimates: Vec<CVector>,
    /// Held-out true ER channels (simulation ground truth; solvers must not
    /// read these).
    #[serde(with = "serde_cvecs")]
    pub er_true_channels: Vec<CVector>,
    /// Ellipsoid shape matrices of the ER uncertainty sets (Hermitian PD).
    #[serde(with = "serde_cmats")]
    pub er_uncertainty_shapes: Vec<CMatrix>,
    /// Ellipsoid radii of the ER uncertainty sets.
    pub er_uncertainty_radii: Vec<f64>,

    /// Per-IR SINR targets, linear scale.
    pub ir_sinr_targets: Vec<f64>,
    /// Per-ER cap on the worst-case eavesdropping SINR, linear scale.
    pub er_sinr_caps: Vec<f64>,
    /// Per-IR receiver noise power, Watts.
    pub ir_noise_powers: Vec<f64>,
    /// Joint signal-processing/thermal noise at the ERs, Watts.
    pub er_noise_power: f64,

    /// Per-link backhaul capacity, bits/s/Hz.
    pub backhaul_caps: Vec<f64>,
    /// Per-RRH transmit power limits, Watts.
    pub rrh_power_limits: Vec<f64>,
    /// Per-ER minimum harvested power, Watts.
    pub er_min_harvest: Vec<f64>,
    /// Maximum energy each source can inject into the grid, Joules/s
    /// (`rrh_count + 1` entries, CP generator last).
    pub supply_limits: Vec<f64>,
    /// Grid-loss coefficient matrix, positive definite, 1/Watt.
    pub grid_loss_coeffs: DMatrix<f64>,

    /// Central-processor circuit power, Watts.
    pub cp_circuit_power: f64,
    /// Per-RRH circuit power, Watts.
    pub rrh_circuit_powers: Vec<f64>,
    /// Power-amplifier inefficiency factor (≥ 1).
    pub amplifier_inefficiency: f64,
    /// RF-to-electrical conversion efficiency (0, 1].
    pub rf_conversion_efficiency: f64,
    /// Per-IR backhaul rate consumed when an RRH serves that IR, bits/s/Hz.
    pub backhaul_rates: Vec<f64>,

    /// Seed recorded for reproducibility of generated instances.
    pub seed: u64,
}

impl Scenario {
    /// Total number of transmit antennas across the cluster.
    pub fn antenna_total(&self) -> usize {
        self.rrh_count * self.antennas_per_rrh
    }

    /// Block-diagonal antenna selector `R_l` picking RRH `l`'s antennas.
    pub fn antenna_selector(&self, l: usize) -> CMatrix {
        let n = self.antenna_total();
        let nt = self.antennas_per_rrh;
        let mut r = CMatrix::zeros(n, n);
        for t in l * nt..(l + 1) * nt {
            r[(t, t)] = 1.0.into();
        }
        r
    }

    /// Trace of the RRH-`l` diagonal block of a Hermitian matrix, i.e. the
    /// transmit power that matrix assigns to RRH `l`.
    pub fn block_trace(&self, m: &CMatrix, l: usize) -> f64 {
        let nt = self.antennas_per_rrh;
        (l * nt..(l + 1) * nt).map(|t| m[(t, t)].re).sum()
    }

    /// Default threshold below which a per-RRH beam block counts as "off"
    /// for backhaul accounting: `1e-6 · rrh_power_limits[l]`.
    pub fn zero_power_tol(&self, l: usize) -> f64 {
        1e-6 * self.rrh_power_limits[l]
    }

    /// Structural validation of all dimensions and definiteness invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.antenna_total();
        let check = |context: &'static str, expected: usize, actual: usize| {
            if expected != actual {
                Err(Error::Dimension {
                    context,
                    expected,
                    actual,
                })
            } else {
                Ok(())
            }
        };
        check("ir_channels", self.ir_count, self.ir_channels.len())?;
        check("er_estimates", self.er_count, self.er_estimates.len())?;
        check(
            "er_true_channels",
            self.er_count,
            self.er_true_channels.len(),
        )?;
        check(
            "er_uncertainty_shapes",
            self.er_count,
            self.er_uncertainty_shapes.len(),
        )?;
        check(
            "er_uncertainty_radii",
            self.er_count,
            self.er_uncertainty_radii.len(),
        )?;
        check("ir_sinr_targets", self.ir_count, self.ir_sinr_targets.len())?;
        check("er_sinr_caps", self.er_count, self.er_sinr_caps.len())?;
        check("ir_noise_powers", self.ir_count, self.ir_noise_powers.len())?;
        check("backhaul_caps", self.rrh_count, self.backhaul_caps.len())?;
        check(
            "rrh_power_limits",
            self.rrh_count,
            self.rrh_power_limits.len(),
        )?;
        check("er_min_harvest", self.er_count, self.er_min_harvest.len())?;
        check("supply_limits", self.rrh_count + 1, self.supply_limits.len())?;
        check(
            "rrh_circuit_powers",
            self.rrh_count,
            self.rrh_circuit_powers.len(),
        )?;
        check("backhaul_rates", self.ir_count, self.backhaul_rates.len())?;
        check(
            "grid_loss_coeffs rows",
            self.rrh_count + 1,
            self.grid_loss_coeffs.nrows(),
        )?;
        for h in &self.ir_channels {
            check("ir channel length", n, h.len())?;
        }
        for g in self.er_estimates.iter().chain(&self.er_true_channels) {
            check("er channel length", n, g.len())?;
        }
        for xi in &self.er_uncertainty_shapes {
            check("uncertainty shape dim", n, xi.nrows())?;
            if hermitian_defect(xi) > 1e-10 {
                return Err(Error::InvalidArgument(
                    "uncertainty shape not Hermitian".into(),
                ));
            }
            if min_eigenvalue(xi) <= 0.0 {
                return Err(Error::NotPositiveDefinite("uncertainty shape"));
            }
        }
        if self
            .grid_loss_coeffs
            .clone()
            .cholesky()
            .is_none()
        {
            return Err(Error::NotPositiveDefinite("grid loss coefficient matrix"));
        }
        if self.er_uncertainty_radii.iter().any(|&e| e < 0.0) {
            return Err(Error::InvalidArgument(
                "uncertainty radius must be nonnegative".into(),
            ));
        }
        if self.amplifier_inefficiency < 1.0 {
            return Err(Error::InvalidArgument(
                "amplifier inefficiency must be >= 1".into(),
            ));
        }
        if self.rf_conversion_efficiency <= 0.0 || self.rf_conversion_efficiency > 1.0 {
            return Err(Error::InvalidArgument(
                "rf conversion efficiency must be in (0, 1]".into(),
            ));
        }
        for (k, &g) in self.ir_sinr_targets.iter().enumerate() {
            if g <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "SINR target for IR {k} must be positive"
                )));
            }
            // secure-service regime: every IR target strictly above every cap
            if self.er_sinr_caps.iter().any(|&cap| g <= cap) {
                return Err(Error::InvalidArgument(format!(
                    "SINR target for IR {k} must exceed the eavesdropper cap"
                )));
            }
        }
        Ok(())
    }
}

/// Binary RRH/receiver selections, `selection[l][k] = true` when RRH `l`
/// carries IR `k`'s data stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMatrix {
    pub rows: Vec<Vec<bool>>,
}

impl SelectionMatrix {
    pub fn all_ones(rrh_count: usize, ir_count: usize) -> Self {
        Self {
            rows: vec![vec![true; ir_count]; rrh_count],
        }
    }

    pub fn all_zeros(rrh_count: usize, ir_count: usize) -> Self {
        Self {
            rows: vec![vec![false; ir_count]; rrh_count],
        }
    }

    /// Decode from the bit pattern used by the enumeration oracles:
    /// bit `l*ir_count + k` (LSB first) holds `s[l][k]`.
    pub fn from_bits(bits: u64, rrh_count: usize, ir_count: usize) -> Self {
        let mut rows = vec![vec![false; ir_count]; rrh_count];
        for l in 0..rrh_count {
            for k in 0..ir_count {
                rows[l][k] = (bits >> (l * ir_count + k)) & 1 == 1;
            }
        }
        Self { rows }
    }

    pub fn get(&self, l: usize, k: usize) -> bool {
        self.rows[l][k]
    }

    pub fn rrh_count(&self) -> usize {
        self.rows.len()
    }

    pub fn ir_count(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Backhaul load on RRH `l` implied by the selections, bits/s/Hz.
    pub fn backhaul_load(&self, l: usize, backhaul_rates: &[f64]) -> f64 {
        self.rows[l]
            .iter()
            .zip(backhaul_rates)
            .map(|(&on, &r)| if on { r } else { 0.0 })
            .sum()
    }

    /// `"10|01"`-style bitstring, rows separated by `|` (RRH-major).
    pub fn bitstring(&self) -> String {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Candidate resource allocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Policy {
    /// Beamforming Gram matrices `W_k`, Hermitian PSD, Watts.
    #[serde(with = "serde_cmats")]
    pub beam_grams: Vec<CMatrix>,
    /// Artificial-noise covariance `V`, Hermitian PSD, Watts.
    #[serde(with = "serde_cmat")]
    pub noise_covariance: CMatrix,
    /// Energy injected by each source into the micro-grid, Joules/s.
    pub supplied_energy: DVector<f64>,
    /// Binary selections the policy was solved under.
    pub selection: SelectionMatrix,
}

impl Policy {
    /// All-zero policy (no transmission, no supply) for a scenario shape.
    pub fn zero(scen: &Scenario) -> Self {
        let n = scen.antenna_total();
        Self {
            beam_grams: vec![CMatrix::zeros(n, n); scen.ir_count],
            noise_covariance: CMatrix::zeros(n, n),
            supplied_energy: DVector::zeros(scen.rrh_count + 1),
            selection: SelectionMatrix::all_zeros(scen.rrh_count, scen.ir_count),
        }
    }

    /// Total transmit power `Σ Tr(W_k) + Tr(V)`, Watts.
    pub fn total_transmit_power(&self) -> f64 {
        let beams: f64 = self.beam_grams.iter().map(|w| w.trace().re).sum();
        beams + self.noise_covariance.trace().re
    }

    /// Transmit power of RRH `l` under this policy.
    pub fn rrh_transmit_power(&self, scen: &Scenario, l: usize) -> f64 {
        let beams: f64 = self
            .beam_grams
            .iter()
            .map(|w| scen.block_trace(w, l))
            .sum();
        beams + scen.block_trace(&self.noise_covariance, l)
    }
}

/// Rank-one beamforming vectors recovered from a policy, `w_k w_k^H = W_k`.
#[derive(Debug, Clone)]
pub struct BeamVectors {
    pub beams: Vec<CVector>,
}

impl BeamVectors {
    /// Largest reconstruction error `‖w_k w_k^H − W_k‖ / max(1, ‖W_k‖)`.
    pub fn reconstruction_defect(&self, policy: &Policy) -> f64 {
        self.beams
            .iter()
            .zip(&policy.beam_grams)
            .map(|(w, gram)| {
                let rebuilt = w * w.adjoint();
                (&rebuilt - gram).norm() / gram.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Inner product helper used throughout the metrics: `Re Tr(A·B)`.
pub(crate) fn trace_re(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_product(a, b)
}

// --- serde helpers for complex vectors/matrices (stored as [re, im] pairs) --

mod serde_cvecs {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            let pairs: Vec<[f64; 2]> = x.iter().map(|c| [c.re, c.im]).collect();
            seq.serialize_element(&pairs)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CVector>, D::Error> {
        let raw: Vec<Vec<[f64; 2]>> = serde::Deserialize::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|pairs| {
                CVector::from_iterator(
                    pairs.len(),
                    pairs
                        .into_iter()
                        .map(|[re, im]| num_complex::Complex64::new(re, im)),
                )
            })
            .collect())
    }
}

mod serde_cmat {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    pub(super) struct Packed {
        dim: usize,
        entries: Vec<[f64; 2]>,
    }

    pub(super) fn pack(m: &CMatrix) -> Packed {
        Packed {
            dim: m.nrows(),
            entries: m.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub(super) fn unpack(p: Packed) -> CMatrix {
        CMatrix::from_iterator(
            p.dim,
            p.dim,
            p.entries
                .into_iter()
                .map(|[re, im]| num_complex::Complex64::new(re, im)),
        )
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&pack(m), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        Ok(unpack(serde::Deserialize::deserialize(d)?))
    }
}

mod serde_cmats {
    use super::serde_cmat;
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let packed: Vec<_> = v.iter().map(serde_cmat::pack).collect();
        serde::Serialize::serialize(&packed, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let raw: Vec<_> = serde::Deserialize::deserialize(d)?;
        Ok(raw.into_iter().map(serde_cmat::unpack).collect())
    }
}

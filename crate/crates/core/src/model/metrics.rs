//! Closed-form physical-layer metrics and the deterministic constraint
//! checker.

use nalgebra::DMatrix;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, outer, CVector};
use crate::model::{trace_re, ConstraintReport, Policy, Scenario};

/// Receive SINR at information receiver `k`:
/// `Tr(H_k W_k) / (Σ_{j≠k} Tr(H_k W_j) + Tr(V H_k) + σ²_k)` with
/// `H_k = h_k h_k^H`.
pub fn sinr_ir(policy: &Policy, scen: &Scenario, k: usize) -> Result<f64> {
    let n = scen.antenna_total();
    if k >= scen.ir_count {
        return Err(Error::Dimension {
            context: "sinr_ir receiver index",
            expected: scen.ir_count,
            actual: k,
        });
    }
    if policy.beam_grams.len() != scen.ir_count {
        return Err(Error::Dimension {
            context: "sinr_ir beam count",
            expected: scen.ir_count,
            actual: policy.beam_grams.len(),
        });
    }
    for w in &policy.beam_grams {
        if w.nrows() != n {
            return Err(Error::Dimension {
                context: "sinr_ir beam gram dim",
                expected: n,
                actual: w.nrows(),
            });
        }
    }
    let h = outer(&scen.ir_channels[k]);
    let signal = trace_re(&h, &policy.beam_grams[k]);
    let mut interference = 0.0;
    for (j, w) in policy.beam_grams.iter().enumerate() {
        if j != k {
            interference += trace_re(&h, w);
        }
    }
    interference += trace_re(&policy.noise_covariance, &h);
    Ok(signal / (interference + scen.ir_noise_powers[k]))
}

/// Achievable secrecy rate `[log2(1+γ_req) − log2(1+γ_tol)]⁺` in bits/s/Hz,
/// both SINRs in linear scale.
pub fn secrecy_rate(gamma_req: f64, gamma_tol: f64) -> Result<f64> {
    if gamma_req < 0.0 || gamma_tol < 0.0 {
        return Err(Error::InvalidArgument(
            "secrecy_rate arguments must be nonnegative".into(),
        ));
    }
    Ok(((1.0 + gamma_req).log2() - (1.0 + gamma_tol).log2()).max(0.0))
}

/// Power harvested from the RF field at a receiver with channel `g`:
/// `μ · (Tr(V G) + Σ_k Tr(W_k G))`, `G = g g^H`, Watts.
pub fn harvested_energy(policy: &Policy, g: &CVector, mu: f64) -> Result<f64> {
    let n = policy.noise_covariance.nrows();
    if g.len() != n {
        return Err(Error::Dimension {
            context: "harvested_energy channel length",
            expected: n,
            actual: g.len(),
        });
    }
    let gram = outer(g);
    let mut rf = trace_re(&policy.noise_covariance, &gram);
    for w in &policy.beam_grams {
        rf += trace_re(w, &gram);
    }
    Ok(mu * rf)
}

/// Resistive loss `e_sᵀ B e_s` of injecting the supply vector into the shared
/// micro-grid, Watts. `B` must be positive definite.
pub fn grid_loss(supply: &DVector<f64>, coeffs: &DMatrix<f64>) -> Result<f64> {
    if coeffs.nrows() != supply.len() || coeffs.ncols() != supply.len() {
        return Err(Error::Dimension {
            context: "grid_loss coefficient matrix",
            expected: supply.len(),
            actual: coeffs.nrows(),
        });
    }
    if coeffs.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite("grid loss coefficient matrix"));
    }
    Ok((supply.transpose() * coeffs * supply)[(0, 0)])
}

/// Power left for consumption after grid losses, `1ᵀe_s − e_sᵀBe_s`, Watts.
pub fn grid_available_power(supply: &DVector<f64>, coeffs: &DMatrix<f64>) -> Result<f64> {
    Ok(supply.sum() - grid_loss(supply, coeffs)?)
}

/// Backhaul capacity consumed on link `l` in bits/s/Hz. The l0 "is this IR
/// carried by this RRH" indicator is realized as a threshold test on the
/// per-RRH transmit power of each beam.
pub fn backhaul_consumption(
    policy: &Policy,
    scen: &Scenario,
    l: usize,
    zero_tol: f64,
) -> Result<f64> {
    if zero_tol <= 0.0 {
        return Err(Error::InvalidArgument("zero_tol must be positive".into()));
    }
    let mut used = 0.0;
    for (k, w) in policy.beam_grams.iter().enumerate() {
        if scen.block_trace(w, l) > zero_tol {
            used += scen.backhaul_rates[k];
        }
    }
    Ok(used)
}

/// Evaluate every deterministic constraint of the allocation problem and
/// report signed slacks (nonnegative = satisfied). Robust (uncertainty-set)
/// constraints live in [`crate::robust::verify_policy_robust`].
///
/// Covered: C1 per-IR SINR, C3 backhaul caps, C4 network power balance,
/// C5 supply caps, C6 per-RRH transmit power, C8 supply nonnegativity,
/// C9/C12 PSD-ness of `V`/`W_k`, and C11 selection consistency.
pub fn check_deterministic_constraints(
    policy: &Policy,
    scen: &Scenario,
    tol: f64,
) -> ConstraintReport {
    let mut report = ConstraintReport::default();

    // C1: per-IR SINR targets, in the linearized form
    // Tr(H_k W_k)/γ_req − interference − noise ≥ 0 (same sign as the ratio
    // form but well-defined at zero power).
    for k in 0..scen.ir_count {
        let h = outer(&scen.ir_channels[k]);
        let signal = trace_re(&h, &policy.beam_grams[k]);
        let mut interference = 0.0;
        for (j, w) in policy.beam_grams.iter().enumerate() {
            if j != k {
                interference += trace_re(&h, w);
            }
        }
        interference += trace_re(&policy.noise_covariance, &h);
        let slack =
            signal / scen.ir_sinr_targets[k] - interference - scen.ir_noise_powers[k];
        report.push(format!("C1[k={k}]"), slack);
    }

    // C3: backhaul caps with the threshold-based consumption.
    for l in 0..scen.rrh_count {
        let used = backhaul_consumption(policy, scen, l, scen.zero_power_tol(l))
            .expect("positive default zero tolerance");
        report.push(format!("C3[l={l}]"), scen.backhaul_caps[l] - used);
    }

    // C4: total consumption within the post-loss grid budget (+tol headroom
    // belongs to the caller).
    let amplifier: f64 = (0..scen.rrh_count)
        .map(|l| policy.rrh_transmit_power(scen, l))
        .sum::<f64>()
        * scen.amplifier_inefficiency;
    let circuit: f64 = scen.cp_circuit_power + scen.rrh_circuit_powers.iter().sum::<f64>();
    let available = grid_available_power(&policy.supplied_energy, &scen.grid_loss_coeffs)
        .unwrap_or(f64::NEG_INFINITY);
    report.push("C4", available - circuit - amplifier);

    // C5 / C8: supply caps and nonnegativity.
    for n in 0..=scen.rrh_count {
        report.push(
            format!("C5[n={n}]"),
            scen.supply_limits[n] - policy.supplied_energy[n],
        );
        report.push(format!("C8[n={n}]"), policy.supplied_energy[n]);
    }

    // C6: per-RRH transmit power limits.
    for l in 0..scen.rrh_count {
        report.push(
            format!("C6[l={l}]"),
            scen.rrh_power_limits[l] - policy.rrh_transmit_power(scen, l),
        );
    }

    // C9 / C12: PSD-ness, slack = smallest eigenvalue.
    report.push("C9", min_eigenvalue(&policy.noise_covariance));
    for (k, w) in policy.beam_grams.iter().enumerate() {
        report.push(format!("C12[k={k}]"), min_eigenvalue(w));
    }

    // C11: per-RRH beam power only where the selection allows it.
    for l in 0..scen.rrh_count {
        for (k, w) in policy.beam_grams.iter().enumerate() {
            let cap = if policy.selection.get(l, k) {
                scen.rrh_power_limits[l]
            } else {
                0.0
            };
            report.push(
                format!("C11[l={l},k={k}]"),
                cap - scen.block_trace(w, l) + tol,
            );
        }
    }

    report
}

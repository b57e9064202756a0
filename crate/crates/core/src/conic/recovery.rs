//! Rank-one recovery of beamforming matrices from the relaxed solution.
//!
//! A relaxed optimum with `rank(W_k) > 1` can be shifted into a rank-one
//! solution of identical objective value: the excess power rides along the
//! null space of the dual-built matrix `C_k` and moves from `W_k` into the
//! artificial-noise covariance, which serves the same eavesdropper-masking
//! and harvesting roles. Every shift is re-verified; a failed verification
//! surfaces the instance instead of silently returning a high-rank beam.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, outer, CMatrix, CVector};
use crate::model::{check_deterministic_constraints, BeamVectors, Policy, Scenario};
use crate::robust::verify_policy_robust;

use super::{DualCertificate, PrimalOutcome, SolveStatus};

/// Count of eigenvalues exceeding `rank_tol · λ_max`; the zero matrix has
/// rank zero.
pub fn numerical_rank(w: &CMatrix, rank_tol: f64) -> usize {
    let eig = hermitian_eigen(w);
    let lambda_max = eig.values.last().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return 0;
    }
    eig.values.iter().filter(|&&l| l > rank_tol * lambda_max).count()
}

/// Default relative rank threshold.
pub const RANK_TOL: f64 = 1e-6;

/// Dual-built shift matrix
/// `C_k = I + Σ_m U_m (D_leak[m][k]/Γ_tol_m − D_harvest[m]) U_m^H`
/// `      + Σ_{j≠k} α_j H_j + Σ_l R_l (ϱ·ρ_amp + γ_l + β_{l,k})`.
///
/// The leakage-dual scaling follows the stationarity condition for `W_k`
/// (the LMI carries `W_k/Γ_tol_m`, so its dual enters with the same factor);
/// with that scaling `C_k − α_k H_k/γ_k` is the PSD complement of `W_k` and
/// the null-space shift provably preserves every constraint.
///
/// At an exact optimum the null space of `C_k` is orthogonal to the served
/// channel (`H_k Υ_k = 0`); [`recovery_shift_matrix`] exposes the matrix so
/// that property can be audited.
fn shift_matrix(scen: &Scenario, duals: &DualCertificate, k: usize) -> CMatrix {
    let n = scen.antenna_total();
    let mut c = CMatrix::identity(n, n);
    for m in 0..scen.er_count {
        let inner = duals.er_leak[m][k].scale(1.0 / scen.er_sinr_caps[m])
            - &duals.er_harvest[m];
        // U_m = [I ĝ_m] maps the bordered dual back to antenna space
        let g = &scen.er_estimates[m];
        let top = inner.view((0, 0), (n, n)).into_owned();
        let col: CVector = inner.view((0, n), (n, 1)).column(0).into();
        let corner = inner[(n, n)];
        c += top;
        c += &col * g.adjoint();
        c += g * col.adjoint();
        c += outer(g).scale(corner.re);
    }
    for j in 0..scen.ir_count {
        if j != k {
            c += outer(&scen.ir_channels[j]).scale(duals.ir_sinr[j]);
        }
    }
    for l in 0..scen.rrh_count {
        let weight = duals.net_power * scen.amplifier_inefficiency
            + duals.tx_power[l]
            + duals.selection_cap[l][k];
        c += scen.antenna_selector(l).scale(weight);
    }
    c
}

/// Diagnostic access to the shift matrix of beam `k`, assembled against the
/// solver's internal normalization exactly as the recovery uses it.
pub fn recovery_shift_matrix(scen: &Scenario, duals: &DualCertificate, k: usize) -> CMatrix {
    let (scaled_scen, _) = super::normalized_scenario(scen);
    shift_matrix(&scaled_scen, duals, k)
}

/// Shift every high-rank beam Gram matrix into rank-one form, re-verify all
/// constraints and return the recovered policy with its beam vectors.
pub fn rank_one_recovery(
    outcome: &PrimalOutcome,
    scen: &Scenario,
    rank_tol: f64,
) -> Result<(Policy, BeamVectors)> {
    if outcome.status != SolveStatus::Optimal {
        return Err(Error::InvalidArgument(
            "rank-one recovery requires an optimal outcome".into(),
        ));
    }
    let duals = outcome
        .duals
        .as_ref()
        .ok_or(Error::MissingDuals("rank-one recovery"))?;

    let before_det = check_deterministic_constraints(&outcome.policy, scen, 0.0);
    let before_rob = verify_policy_robust(&outcome.policy, scen)?;

    // PSD noise already present in the solver output; the recovery shuffles
    // mass between blocks, so it cannot be held to a tighter standard than
    // its input
    let input_noise = outcome
        .policy
        .beam_grams
        .iter()
        .chain(std::iter::once(&outcome.policy.noise_covariance))
        .map(|m| (-crate::linalg::min_eigenvalue(m)).max(0.0))
        .fold(0.0f64, f64::max);

    // the duals price the solver's normalized problem, so the shift matrix is
    // assembled against the same normalization; the shifted (W, V) live in
    // original units either way
    let (scaled_scen, _) = super::normalized_scenario(scen);

    let mut policy = outcome.policy.clone();
    for k in 0..scen.ir_count {
        if numerical_rank(&policy.beam_grams[k], rank_tol) <= 1 {
            continue;
        }
        let c_k = shift_matrix(&scaled_scen, duals, k);
        let eig = hermitian_eigen(&c_k);
        let lambda_max = eig
            .values
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.abs()))
            .max(1e-300);
        let mut shifted = CMatrix::zeros(scen.antenna_total(), scen.antenna_total());
        for (j, &lambda) in eig.values.iter().enumerate() {
            if lambda.abs() <= rank_tol * lambda_max {
                let basis: CVector = eig.vectors.column(j).into();
                let weight = (basis.adjoint() * &policy.beam_grams[k] * &basis)[(0, 0)].re;
                if weight > 0.0 {
                    shifted += outer(&basis).scale(weight);
                }
            }
        }
        policy.beam_grams[k] -= &shifted;
        policy.noise_covariance += &shifted;

        if numerical_rank(&policy.beam_grams[k], rank_tol) > 1 {
            // inexact duals (reduced-accuracy terminations) can leave the
            // shift matrix without a usable null space; compress onto the
            // served direction instead, which preserves the SINR numerator
            // and every power total exactly and can only slacken the
            // leakage caps
            let h = &scen.ir_channels[k];
            let w = policy.beam_grams[k].clone();
            let wh = &w * h;
            let power_on_h = (h.adjoint() * &wh)[(0, 0)].re;
            let compressed = if power_on_h > 1e-14 * w.trace().re.max(1e-300) {
                outer(&wh).scale(1.0 / power_on_h)
            } else {
                CMatrix::zeros(w.nrows(), w.nrows())
            };
            let residue = &w - &compressed;
            policy.beam_grams[k] = compressed;
            policy.noise_covariance += residue;

            let rank = numerical_rank(&policy.beam_grams[k], rank_tol);
            if rank > 1 {
                return Err(Error::RecoveryFailed(format!(
                    "beam {k} still has rank {rank} after null-space shift and compression"
                )));
            }
        }
    }

    // objective is invariant by construction; guard against arithmetic drift
    let before = outcome.policy.total_transmit_power();
    let after = policy.total_transmit_power();
    if (after - before).abs() > 1e-6 * before.abs().max(1.0) {
        return Err(Error::RecoveryFailed(format!(
            "objective moved from {before} to {after}"
        )));
    }

    // no constraint may lose slack beyond arithmetic drift plus the noise
    // the solver handed us; the PSD slacks (C9/C12) are expected to land on
    // the cone boundary, so only genuine negativity counts there
    let allowance = |pre: f64| 1e-9 * (1.0 + before.abs()) + 4.0 * input_noise + 1e-7 * pre.abs();
    let after_det = check_deterministic_constraints(&policy, scen, 0.0);
    for (pre, post) in before_det.entries.iter().zip(&after_det.entries) {
        let reference = if pre.label.starts_with("C9") || pre.label.starts_with("C12") {
            pre.slack.min(0.0)
        } else {
            pre.slack
        };
        if post.slack < reference - allowance(reference) {
            return Err(Error::RecoveryFailed(format!(
                "{} slack degraded from {} to {}",
                pre.label, pre.slack, post.slack
            )));
        }
    }
    let after_rob = verify_policy_robust(&policy, scen)?;
    for (pre, post) in before_rob.entries.iter().zip(&after_rob.entries) {
        if post.slack < pre.slack - allowance(pre.slack) {
            return Err(Error::RecoveryFailed(format!(
                "{} slack degraded from {} to {}",
                pre.label, pre.slack, post.slack
            )));
        }
    }

    let beams = policy
        .beam_grams
        .iter()
        .map(|w| {
            let eig = hermitian_eigen(w);
            let n = w.nrows();
            let lambda = eig.values[n - 1].max(0.0);
            let principal: CVector = eig.vectors.column(n - 1).into();
            principal.scale(lambda.sqrt())
        })
        .collect();
    Ok((policy, BeamVectors { beams }))
}

//! S-procedure machinery for the semi-infinite robust constraints and the
//! exact worst-case oracle used to verify them.
//!
//! The two uncertainty-set constraints are
//!
//! * leakage cap: `max_{Δ∈Ω} (ĝ+Δ)^H W_k (ĝ+Δ) / Γ_tol − (ĝ+Δ)^H V (ĝ+Δ) ≤ σ²`
//! * harvest floor: `min_{Δ∈Ω} μ·(ĝ+Δ)^H (ΣW + V) (ĝ+Δ) ≥ P_min`
//!
//! each lossslessly equivalent to a single linear matrix inequality with one
//! nonnegative multiplier. [`build_c2_lmi`] and [`build_c7_lmi`] assemble the
//! blocks at a given multiplier; [`lmi_certifiable`] searches the multiplier;
//! [`verify_policy_robust`] bypasses the LMIs entirely and checks a policy
//! against [`worst_case_quadratic`].

mod trust_region;

pub use trust_region::{worst_case_quadratic, worst_case_quadratic_with_argument, Sense};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, CMatrix, CVector};
use crate::model::{ConstraintReport, Policy, Scenario};

/// Which semi-infinite constraint an LMI block certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiTag {
    /// Leakage cap for the pair (energy receiver `er`, information stream `ir`).
    ErLeak { er: usize, ir: usize },
    /// Harvest floor for energy receiver `er`.
    ErHarvest { er: usize },
}

/// One S-procedure block, `(n+1)×(n+1)` Hermitian, affine in its multiplier.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub matrix: CMatrix,
    pub tag: LmiTag,
    /// Value of the scalar multiplier (`δ` or `ν`) the block was built at.
    pub multiplier: f64,
}

impl LmiBlock {
    /// Smallest eigenvalue; the block certifies its constraint when this is
    /// nonnegative.
    pub fn min_eigenvalue(&self) -> f64 {
        crate::linalg::min_eigenvalue(&self.matrix)
    }
}

/// `[I ĝ]^H M [I ĝ] = [[M, Mĝ], [ĝ^H M, ĝ^H M ĝ]]`, the bordered form every
/// LMI term takes.
pub(crate) fn bordered(m: &CMatrix, g_hat: &CVector) -> CMatrix {
    let n = m.nrows();
    let mut out = CMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(m);
    let mg = m * g_hat;
    for i in 0..n {
        out[(i, n)] = mg[i];
        out[(n, i)] = mg[i].conj();
    }
    out[(n, n)] = (g_hat.adjoint() * &mg)[(0, 0)];
    hermitian_part(&out)
}

/// Multiplier direction `diag(Ξ, −ε²)` shared by both LMI families.
pub(crate) fn multiplier_direction(xi: &CMatrix, eps: f64) -> CMatrix {
    let n = xi.nrows();
    let mut out = CMatrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(xi);
    out[(n, n)] = (-eps * eps).into();
    out
}

/// Leakage-cap LMI for one (ER, IR) pair at multiplier `delta`:
/// `[[δΞ+V, Vĝ],[ĝ^HV, −δε²+σ²+ĝ^HVĝ]] − [I ĝ]^H W_k [I ĝ] / Γ_tol`.
/// PSD for some `δ ≥ 0` certifies the leakage constraint.
#[allow(clippy::too_many_arguments)]
pub fn build_c2_lmi(
    w_k: &CMatrix,
    v: &CMatrix,
    g_hat: &CVector,
    xi: &CMatrix,
    eps: f64,
    sigma_sq: f64,
    gamma_tol: f64,
    delta: f64,
    tag: LmiTag,
) -> Result<LmiBlock> {
    if delta < 0.0 {
        return Err(Error::InvalidArgument(
            "S-procedure multiplier must be nonnegative".into(),
        ));
    }
    let n = g_hat.len();
    if w_k.nrows() != n || v.nrows() != n || xi.nrows() != n {
        return Err(Error::Dimension {
            context: "build_c2_lmi",
            expected: n,
            actual: w_k.nrows(),
        });
    }
    let mut matrix = bordered(v, g_hat) - bordered(w_k, g_hat).scale(1.0 / gamma_tol)
        + multiplier_direction(xi, eps).scale(delta);
    matrix[(n, n)] += sigma_sq;
    Ok(LmiBlock {
        matrix,
        tag,
        multiplier: delta,
    })
}

/// Harvest-floor LMI for one ER at multiplier `nu`:
/// `[[νΞ+V, Vĝ],[ĝ^HV, −νε² − P_min/μ + ĝ^HVĝ]] + Σ_k [I ĝ]^H W_k [I ĝ]`.
/// PSD for some `ν ≥ 0` certifies the worst-case harvested power.
#[allow(clippy::too_many_arguments)]
pub fn build_c7_lmi(
    w_all: &[CMatrix],
    v: &CMatrix,
    g_hat: &CVector,
    xi: &CMatrix,
    eps: f64,
    p_min: f64,
    mu: f64,
    nu: f64,
    tag: LmiTag,
) -> Result<LmiBlock> {
    if nu < 0.0 {
        return Err(Error::InvalidArgument(
            "S-procedure multiplier must be nonnegative".into(),
        ));
    }
    let n = g_hat.len();
    let mut matrix = bordered(v, g_hat) + multiplier_direction(xi, eps).scale(nu);
    for w in w_all {
        matrix += bordered(w, g_hat);
    }
    matrix[(n, n)] -= p_min / mu;
    Ok(LmiBlock {
        matrix,
        tag,
        multiplier: nu,
    })
}

/// Decide whether some multiplier in `[0, bound]` makes `base + t·direction`
/// PSD (within `psd_tol` on the smallest eigenvalue). The smallest eigenvalue
/// is concave in `t`, so a golden-section search finds its maximum.
fn search_multiplier(base: &CMatrix, direction: &CMatrix, bound: f64, psd_tol: f64) -> bool {
    let eval = |t: f64| {
        let m = base + direction.scale(t);
        hermitian_eigen(&m).values[0]
    };
    if eval(0.0) >= -psd_tol || (bound > 0.0 && eval(bound) >= -psd_tol) {
        return true;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, bound);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..200 {
        if f1.max(f2) >= -psd_tol {
            return true;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        }
        if (hi - lo) <= 1e-14 * bound.max(1.0) {
            break;
        }
    }
    eval(0.5 * (lo + hi)) >= -psd_tol
}

/// Standalone feasibility check for a leakage-cap LMI: search `δ ≥ 0`.
///
/// The multiplier bound comes from the corner entry: PSD requires
/// `δ·ε² ≤ σ² + ĝ^H V ĝ`, so the search interval is closed.
#[allow(clippy::too_many_arguments)]
pub fn c2_certifiable(
    w_k: &CMatrix,
    v: &CMatrix,
    g_hat: &CVector,
    xi: &CMatrix,
    eps: f64,
    sigma_sq: f64,
    gamma_tol: f64,
    psd_tol: f64,
) -> Result<bool> {
    let block = build_c2_lmi(
        w_k,
        v,
        g_hat,
        xi,
        eps,
        sigma_sq,
        gamma_tol,
        0.0,
        LmiTag::ErLeak { er: 0, ir: 0 },
    )?;
    let n = g_hat.len();
    let direction = multiplier_direction(xi, eps);
    let bound = if eps > 0.0 {
        (block.matrix[(n, n)].re).max(0.0) / (eps * eps) + 1.0
    } else {
        // degenerate ball: the multiplier only adds Ξ ⪰ 0, search a wide range
        1e8 * (1.0 + block.matrix.norm())
    };
    Ok(search_multiplier(&block.matrix, &direction, bound, psd_tol))
}

/// Standalone feasibility check for a harvest-floor LMI: search `ν ≥ 0`.
#[allow(clippy::too_many_arguments)]
pub fn c7_certifiable(
    w_all: &[CMatrix],
    v: &CMatrix,
    g_hat: &CVector,
    xi: &CMatrix,
    eps: f64,
    p_min: f64,
    mu: f64,
    psd_tol: f64,
) -> Result<bool> {
    let block = build_c7_lmi(
        w_all,
        v,
        g_hat,
        xi,
        eps,
        p_min,
        mu,
        0.0,
        LmiTag::ErHarvest { er: 0 },
    )?;
    let n = g_hat.len();
    let direction = multiplier_direction(xi, eps);
    let bound = if eps > 0.0 {
        (block.matrix[(n, n)].re).max(0.0) / (eps * eps) + 1.0
    } else {
        1e8 * (1.0 + block.matrix.norm())
    };
    Ok(search_multiplier(&block.matrix, &direction, bound, psd_tol))
}

/// Check every robust constraint of a policy against the exact trust-region
/// oracle and report signed slacks (nonnegative = satisfied). Labels:
/// `C2[m=..,k=..]` and `C7[m=..]`.
pub fn verify_policy_robust(policy: &Policy, scen: &Scenario) -> Result<ConstraintReport> {
    let mut report = ConstraintReport::default();
    let mu = scen.rf_conversion_efficiency;
    let mut total: CMatrix = policy.noise_covariance.clone();
    for w in &policy.beam_grams {
        total += w;
    }
    for m in 0..scen.er_count {
        let g_hat = &scen.er_estimates[m];
        let xi = &scen.er_uncertainty_shapes[m];
        let eps = scen.er_uncertainty_radii[m];
        for (k, w) in policy.beam_grams.iter().enumerate() {
            let a = w.scale(1.0 / scen.er_sinr_caps[m]) - &policy.noise_covariance;
            let worst = worst_case_quadratic(&a, g_hat, xi, eps, Sense::Max)?;
            report.push(format!("C2[m={m},k={k}]"), scen.er_noise_power - worst);
        }
        let worst = worst_case_quadratic(&total, g_hat, xi, eps, Sense::Min)?;
        report.push(
            format!("C7[m={m}]"),
            mu * worst - scen.er_min_harvest[m],
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(n: usize, rng: &mut StdRng) -> CVector {
        CVector::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_psd(n: usize, rank: usize, scale: f64, rng: &mut StdRng) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for _ in 0..rank {
            let v = random_vec(n, rng);
            m += outer(&v).scale(scale * rng.gen_range(0.1..1.0));
        }
        m
    }

    #[test]
    fn c2_block_dimension_and_zero_case() {
        let n = 4;
        let g = CVector::zeros(n);
        let xi = CMatrix::identity(n, n);
        let block = build_c2_lmi(
            &CMatrix::zeros(n, n),
            &CMatrix::zeros(n, n),
            &g,
            &xi,
            0.0,
            2.5,
            1.0,
            0.0,
            LmiTag::ErLeak { er: 0, ir: 0 },
        )
        .unwrap();
        assert_eq!(block.matrix.nrows(), n + 1);
        // empty transmission: block = diag(0,…,0,σ²) is PSD
        assert!(block.min_eigenvalue() >= 0.0);
        assert!((block.matrix[(n, n)].re - 2.5).abs() < 1e-14);
        assert!(build_c2_lmi(
            &CMatrix::zeros(n, n),
            &CMatrix::zeros(n, n),
            &g,
            &xi,
            0.0,
            2.5,
            1.0,
            -1.0,
            LmiTag::ErLeak { er: 0, ir: 0 },
        )
        .is_err());
    }

    #[test]
    fn c7_zero_demand_always_certifies() {
        let mut rng = StdRng::seed_from_u64(5);
        let n = 3;
        let w = vec![random_psd(n, 2, 1.0, &mut rng)];
        let v = random_psd(n, 1, 1.0, &mut rng);
        let g = random_vec(n, &mut rng);
        let xi = CMatrix::identity(n, n);
        let block = build_c7_lmi(&w, &v, &g, &xi, 0.7, 0.0, 0.5, 0.0, LmiTag::ErHarvest { er: 0 })
            .unwrap();
        assert!(block.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn c7_degenerate_ball_matches_nominal_check() {
        // ε = 0 collapses the uncertainty set to a point: the certifiable
        // decision must coincide with the nominal harvested-power check (the
        // multiplier runs away along diag(Ξ, 0), which the search bound covers)
        let mut rng = StdRng::seed_from_u64(6);
        let n = 3;
        let w = vec![random_psd(n, 1, 1.0, &mut rng)];
        let v = random_psd(n, 1, 0.5, &mut rng);
        let g = random_vec(n, &mut rng);
        let xi = CMatrix::identity(n, n);
        let mu = 0.5;
        let total = &w[0] + &v;
        let nominal = mu * (g.adjoint() * &total * &g)[(0, 0)].re;

        for p_min in [0.5 * nominal, 2.0 * nominal] {
            let certifiable = c7_certifiable(&w, &v, &g, &xi, 0.0, p_min, mu, 1e-9).unwrap();
            assert_eq!(certifiable, nominal >= p_min, "p_min = {p_min}");
        }
    }

    #[test]
    fn s_procedure_matches_oracle_on_random_instances() {
        // losslessness: multiplier-searched LMI feasibility agrees with the
        // exact worst-case decision on random leakage instances
        let mut rng = StdRng::seed_from_u64(7);
        let n = 3;
        let mut checked = 0;
        while checked < 100 {
            let w = random_psd(n, 2, rng.gen_range(0.2..2.0), &mut rng);
            let v = random_psd(n, 2, rng.gen_range(0.0..1.0), &mut rng);
            let g = random_vec(n, &mut rng);
            let raw = random_psd(n, n, 1.0, &mut rng);
            let xi = &raw + CMatrix::identity(n, n).scale(0.3);
            let eps = rng.gen_range(0.05..0.8);
            let sigma_sq = rng.gen_range(0.05..1.5);
            let gamma_tol = rng.gen_range(0.5..2.0);

            let a = w.scale(1.0 / gamma_tol) - &v;
            let worst = worst_case_quadratic(&a, &g, &xi, eps, Sense::Max).unwrap();
            let margin = worst - sigma_sq;
            if margin.abs() <= 1e-6 * sigma_sq.max(1.0) {
                continue; // boundary band excluded
            }
            let lmi = c2_certifiable(&w, &v, &g, &xi, eps, sigma_sq, gamma_tol, 1e-9).unwrap();
            assert_eq!(lmi, margin < 0.0, "margin = {margin}");
            checked += 1;
        }
    }

    #[test]
    fn s_procedure_matches_oracle_on_harvest_instances() {
        let mut rng = StdRng::seed_from_u64(8);
        let n = 3;
        let mu = 0.5;
        let mut checked = 0;
        while checked < 100 {
            let w = vec![
                random_psd(n, 1, rng.gen_range(0.2..2.0), &mut rng),
                random_psd(n, 1, rng.gen_range(0.2..2.0), &mut rng),
            ];
            let v = random_psd(n, 2, rng.gen_range(0.0..1.0), &mut rng);
            let g = random_vec(n, &mut rng);
            let xi = CMatrix::identity(n, n);
            let eps = rng.gen_range(0.05..0.6);
            let p_min = rng.gen_range(0.01..2.0);

            let mut total = v.clone();
            for wk in &w {
                total += wk;
            }
            let worst = worst_case_quadratic(&total, &g, &xi, eps, Sense::Min).unwrap();
            let margin = mu * worst - p_min;
            if margin.abs() <= 1e-6 * p_min.max(1.0) {
                continue;
            }
            let lmi = c7_certifiable(&w, &v, &g, &xi, eps, p_min, mu, 1e-9).unwrap();
            assert_eq!(lmi, margin > 0.0, "margin = {margin}");
            checked += 1;
        }
    }

    #[test]
    fn constructed_violation_is_flagged_per_pair() {
        use crate::scenario::{generate_scenario, ScenarioParams};
        let scen = generate_scenario(
            &ScenarioParams::tiny_topology(),
            &ScenarioParams::tiny(),
            3,
        )
        .unwrap();
        let n = scen.antenna_total();
        let mut policy = Policy::zero(&scen);
        // aim a strong beam straight at the ER estimate: C2 for (m=0, k=1)
        // must flag while the other pair stays clean
        let g = scen.er_estimates[0].clone();
        policy.beam_grams[1] = outer(&g).scale(10.0 / g.norm_squared().max(1e-30));
        policy.noise_covariance = CMatrix::zeros(n, n);

        let report = verify_policy_robust(&policy, &scen).unwrap();
        let slack = |label: &str| {
            report
                .entries
                .iter()
                .find(|e| e.label == label)
                .unwrap()
                .slack
        };
        assert!(slack("C2[m=0,k=1]") < 0.0);
        assert!(slack("C2[m=0,k=0]") >= 0.0);
    }
}

//! Conic program construction for the fixed-selection primal, the l1
//! feasibility restoration and the penalized continuous relaxation, plus the
//! interior-point solve and rank-one recovery behind them.
//!
//! Programs are built in an intermediate representation over real scalar
//! variables: every Hermitian decision block contributes `n²` parameters (see
//! [`crate::linalg`]), the supply vector and the S-procedure multipliers are
//! plain scalars. Constraints are linear rows, one second-order-cone row for
//! the grid-loss power balance, and linear matrix inequalities that the
//! backend embeds into real PSD cones.

mod dump;
mod recovery;
mod solve;

pub use dump::{dump_program, write_program};
pub use recovery::{numerical_rank, rank_one_recovery, recovery_shift_matrix, RANK_TOL};
pub use solve::{solve, DualCertificate, PrimalOutcome, SolveDiagnostics, SolveStatus};

use nalgebra::DMatrix;

use crate::linalg::{herm_basis, herm_param_count, trace_functional, CMatrix};
use crate::model::{Scenario, SelectionMatrix};
use crate::robust::{bordered, multiplier_direction};

/// How the binary selections enter the program.
#[derive(Debug, Clone)]
pub enum SelectionMode {
    /// `s` fixed to the given pattern (the Benders primal).
    Fixed(SelectionMatrix),
    /// `s` fixed but the per-pair power caps carry nonnegative slacks whose
    /// sum is minimized (the l1 feasibility problem).
    Slack(SelectionMatrix),
    /// `s` continuous in `[0, 1]` with the linearized binary penalty anchored
    /// at `anchor` and weighted by `phi` (one convex-approximation step).
    /// The backhaul caps become explicit linear constraints.
    Relaxed { anchor: Vec<Vec<f64>>, phi: f64 },
}

/// How transmit energy is provisioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyModel {
    /// Shared micro-grid: supply variables, per-source caps and the quadratic
    /// grid-loss power balance.
    PooledGrid,
    /// No energy sharing: each RRH pays its own circuit and amplifier power
    /// from its own harvest; the supply vector is absent.
    PerRrhBudget,
}

/// Where each scalar variable block starts in the stacked decision vector.
#[derive(Debug, Clone)]
pub struct VariableLayout {
    /// Complex dimension of each Hermitian block (`Nt·L`).
    pub herm_dim: usize,
    pub beam_count: usize,
    pub noise_offset: usize,
    /// Offset of the supply vector (`rrh_count + 1` entries), if present.
    pub supply_offset: Option<usize>,
    pub supply_len: usize,
    pub c2_mult_offset: usize,
    pub c2_mult_len: usize,
    pub c7_mult_offset: usize,
    pub c7_mult_len: usize,
    /// Offset of the l1 slacks `α_{l,k}`, if present.
    pub slack_offset: Option<usize>,
    /// Offset of the continuous selections `s_{l,k}`, if present.
    pub selection_offset: Option<usize>,
    pub pair_count: usize,
    pub total: usize,
}

impl VariableLayout {
    pub fn beam_param(&self, k: usize, p: usize) -> usize {
        k * herm_param_count(self.herm_dim) + p
    }

    pub fn noise_param(&self, p: usize) -> usize {
        self.noise_offset + p
    }

    pub fn supply_var(&self, n: usize) -> usize {
        self.supply_offset.expect("program has supply variables") + n
    }

    /// δ multiplier for the leakage LMI of pair `(m, k)`.
    pub fn c2_mult(&self, m: usize, k: usize, ir_count: usize) -> usize {
        self.c2_mult_offset + m * ir_count + k
    }

    /// ν multiplier for the harvest LMI of ER `m`.
    pub fn c7_mult(&self, m: usize) -> usize {
        self.c7_mult_offset + m
    }

    pub fn slack_var(&self, l: usize, k: usize, ir_count: usize) -> usize {
        self.slack_offset.expect("program has l1 slacks") + l * ir_count + k
    }

    pub fn selection_var(&self, l: usize, k: usize, ir_count: usize) -> usize {
        self.selection_offset.expect("program has relaxed selections") + l * ir_count + k
    }
}

/// Identifies a constraint for dual extraction and reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintLabel {
    IrSinr { k: usize },
    NetPower,
    SupplyCap { n: usize },
    SupplyNonneg { n: usize },
    TxPower { l: usize },
    SelectionCap { l: usize, k: usize },
    C2MultNonneg { m: usize, k: usize },
    C7MultNonneg { m: usize },
    SlackNonneg { l: usize, k: usize },
    SelectionLower { l: usize, k: usize },
    SelectionUpper { l: usize, k: usize },
    Backhaul { l: usize },
    RrhEnergyBudget { l: usize },
    CpEnergyBudget,
    ErLeak { m: usize, k: usize },
    ErHarvest { m: usize },
    BeamPsd { k: usize },
    NoisePsd,
}

/// Sparse linear expression `constant + Σ coeffs·x`.
#[derive(Debug, Clone, Default)]
pub struct LinearExpr {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    fn push(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.coeffs.push((var, coeff));
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

/// One constraint of the intermediate representation.
#[derive(Debug, Clone)]
pub enum ConstraintSpec {
    /// `expr(x) ≥ 0`, one nonnegative-cone row.
    Linear { label: ConstraintLabel, expr: LinearExpr },
    /// `‖rows(x)‖² ≤ cap(x)`, one second-order cone.
    QuadraticCap {
        label: ConstraintLabel,
        rows: Vec<LinearExpr>,
        cap: LinearExpr,
    },
    /// `constant + Σ x_p·terms_p ⪰ 0`, complex Hermitian of side `dim`.
    Lmi {
        label: ConstraintLabel,
        dim: usize,
        constant: CMatrix,
        terms: Vec<(usize, CMatrix)>,
    },
}

impl ConstraintSpec {
    pub fn label(&self) -> &ConstraintLabel {
        match self {
            ConstraintSpec::Linear { label, .. } => label,
            ConstraintSpec::QuadraticCap { label, .. } => label,
            ConstraintSpec::Lmi { label, .. } => label,
        }
    }
}

/// A fully assembled conic program.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub layout: VariableLayout,
    /// Sparse linear objective plus constant offset.
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub constraints: Vec<ConstraintSpec>,
    pub selection_mode: SelectionMode,
    pub energy_model: EnergyModel,
    /// Scenario dimensions needed for extraction.
    pub rrh_count: usize,
    pub ir_count: usize,
    pub er_count: usize,
    pub antennas_per_rrh: usize,
    /// Mean per-antenna channel gain the program was normalized by.
    pub channel_scale: f64,
}

/// Rescale a scenario so channel entries are O(1): channels divide by
/// `√c_g`, noise powers, harvest floors and uncertainty radii follow suit.
/// The substitution is exact — the feasible `(W, V, e_s)` set and the
/// objective are untouched — but it compresses the constraint scales from
/// roughly 1e8 down to 1e3, which is what interior-point feasibility
/// tolerances actually see.
pub(crate) fn normalized_scenario(scen: &Scenario) -> (Scenario, f64) {
    let n = scen.antenna_total() as f64;
    let mut acc = 0.0;
    let mut cnt = 0.0;
    for h in &scen.ir_channels {
        acc += h.norm_squared() / n;
        cnt += 1.0;
    }
    for g in &scen.er_estimates {
        acc += g.norm_squared() / n;
        cnt += 1.0;
    }
    let c_g = if cnt > 0.0 && acc > 0.0 { acc / cnt } else { 1.0 };
    let root = c_g.sqrt();
    let mut s = scen.clone();
    let div = num_complex::Complex64::new(root, 0.0);
    for h in &mut s.ir_channels {
        *h /= div;
    }
    for g in &mut s.er_estimates {
        *g /= div;
    }
    for g in &mut s.er_true_channels {
        *g /= div;
    }
    for e in &mut s.er_uncertainty_radii {
        *e /= root;
    }
    for v in &mut s.ir_noise_powers {
        *v /= c_g;
    }
    s.er_noise_power /= c_g;
    for p in &mut s.er_min_harvest {
        *p /= c_g;
    }
    (s, c_g)
}

/// SDP-relaxed fixed-selection primal: minimize `Σ Tr(W_k) + Tr(V)` under the
/// SINR targets, S-procedure LMIs, power balance, supply caps, per-RRH power
/// limits and the selection-consistency caps (the rank constraint is dropped).
pub fn build_primal(scen: &Scenario, s_fixed: &SelectionMatrix) -> ConicProgram {
    build_program(
        scen,
        SelectionMode::Fixed(s_fixed.clone()),
        EnergyModel::PooledGrid,
    )
}

/// l1 feasibility problem for a fixed selection: the per-pair power caps gain
/// nonnegative slacks `α_{l,k}` and the objective becomes their sum, which
/// measures the aggregated constraint violation.
pub fn build_l1_feasibility(scen: &Scenario, s_fixed: &SelectionMatrix) -> ConicProgram {
    build_program(
        scen,
        SelectionMode::Slack(s_fixed.clone()),
        EnergyModel::PooledGrid,
    )
}

/// One penalized convex-approximation step: selections relaxed to `[0,1]`,
/// backhaul caps enforced linearly, and the objective augmented with the
/// linearized binary penalty anchored at `anchor`.
pub fn build_penalized_relaxation(
    scen: &Scenario,
    anchor: &[Vec<f64>],
    phi: f64,
) -> ConicProgram {
    build_program(
        scen,
        SelectionMode::Relaxed {
            anchor: anchor.to_vec(),
            phi,
        },
        EnergyModel::PooledGrid,
    )
}

/// Full program assembly shared by all variants.
pub fn build_program(
    scen: &Scenario,
    selection: SelectionMode,
    energy: EnergyModel,
) -> ConicProgram {
    let (normalized, channel_scale) = normalized_scenario(scen);
    let scen = &normalized;
    let n = scen.antenna_total();
    let herm = herm_param_count(n);
    let (l_count, k_count, m_count) = (scen.rrh_count, scen.ir_count, scen.er_count);
    let pair_count = l_count * k_count;

    // ---- variable layout ----------------------------------------------
    let noise_offset = k_count * herm;
    let mut cursor = noise_offset + herm;
    let supply_offset = match energy {
        EnergyModel::PooledGrid => {
            let off = cursor;
            cursor += l_count + 1;
            Some(off)
        }
        EnergyModel::PerRrhBudget => None,
    };
    let c2_mult_offset = cursor;
    cursor += m_count * k_count;
    let c7_mult_offset = cursor;
    cursor += m_count;
    let slack_offset = match selection {
        SelectionMode::Slack(_) => {
            let off = cursor;
            cursor += pair_count;
            Some(off)
        }
        _ => None,
    };
    let selection_offset = match selection {
        SelectionMode::Relaxed { .. } => {
            let off = cursor;
            cursor += pair_count;
            Some(off)
        }
        _ => None,
    };
    let layout = VariableLayout {
        herm_dim: n,
        beam_count: k_count,
        noise_offset,
        supply_offset,
        supply_len: l_count + 1,
        c2_mult_offset,
        c2_mult_len: m_count * k_count,
        c7_mult_offset,
        c7_mult_len: m_count,
        slack_offset,
        selection_offset,
        pair_count,
        total: cursor,
    };

    let mut constraints: Vec<ConstraintSpec> = Vec::new();

    // trace of the RRH-l block of a Hermitian variable as a linear functional
    let block_trace_coeffs = |l: usize| -> Vec<(usize, f64)> {
        let selector = scen.antenna_selector(l);
        trace_functional(&selector)
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .collect()
    };

    // ---- C1: per-IR SINR targets ----------------------------------------
    for k in 0..k_count {
        let h_gram = crate::linalg::outer(&scen.ir_channels[k]);
        let coeffs = trace_functional(&h_gram);
        let mut expr = LinearExpr {
            constant: -scen.ir_noise_powers[k],
            ..Default::default()
        };
        for (p, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for j in 0..k_count {
                let sign = if j == k {
                    1.0 / scen.ir_sinr_targets[k]
                } else {
                    -1.0
                };
                expr.push(layout.beam_param(j, p), sign * c);
            }
            expr.push(layout.noise_param(p), -c);
        }
        constraints.push(ConstraintSpec::Linear {
            label: ConstraintLabel::IrSinr { k },
            expr,
        });
    }

    // ---- C2 / C7: robust ER constraints ---------------------------------
    for m in 0..m_count {
        let g_hat = &scen.er_estimates[m];
        let xi = &scen.er_uncertainty_shapes[m];
        let eps = scen.er_uncertainty_radii[m];
        let gamma_tol = scen.er_sinr_caps[m];
        let dim = n + 1;
        let corner = dim - 1;

        if eps > 0.0 {
            let direction = multiplier_direction(xi, eps);
            // leakage LMIs, one per (m, k)
            for k in 0..k_count {
                let mut terms: Vec<(usize, CMatrix)> = Vec::new();
                terms.push((layout.c2_mult(m, k, k_count), direction.clone()));
                for p in 0..herm {
                    let sandwich = bordered(&herm_basis(n, p), g_hat);
                    terms.push((layout.noise_param(p), sandwich.clone()));
                    terms.push((layout.beam_param(k, p), sandwich.scale(-1.0 / gamma_tol)));
                }
                let mut constant = CMatrix::zeros(dim, dim);
                constant[(corner, corner)] = scen.er_noise_power.into();
                constraints.push(ConstraintSpec::Lmi {
                    label: ConstraintLabel::ErLeak { m, k },
                    dim,
                    constant,
                    terms,
                });
            }
            // harvest LMI
            let mut terms: Vec<(usize, CMatrix)> = Vec::new();
            terms.push((layout.c7_mult(m), direction));
            for p in 0..herm {
                let sandwich = bordered(&herm_basis(n, p), g_hat);
                terms.push((layout.noise_param(p), sandwich.clone()));
                for k in 0..k_count {
                    terms.push((layout.beam_param(k, p), sandwich.clone()));
                }
            }
            let mut constant = CMatrix::zeros(dim, dim);
            constant[(corner, corner)] =
                (-scen.er_min_harvest[m] / scen.rf_conversion_efficiency).into();
            constraints.push(ConstraintSpec::Lmi {
                label: ConstraintLabel::ErHarvest { m },
                dim,
                constant,
                terms,
            });
        } else {
            // degenerate uncertainty set: the semi-infinite constraints
            // collapse to their nominal rows, which condition far better
            // than LMIs whose multipliers run away
            let g_gram = crate::linalg::outer(g_hat);
            let coeffs = trace_functional(&g_gram);
            for k in 0..k_count {
                let mut expr = LinearExpr {
                    constant: scen.er_noise_power,
                    ..Default::default()
                };
                for (p, &c) in coeffs.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    expr.push(layout.noise_param(p), c);
                    expr.push(layout.beam_param(k, p), -c / gamma_tol);
                }
                constraints.push(ConstraintSpec::Linear {
                    label: ConstraintLabel::ErLeak { m, k },
                    expr,
                });
            }
            let mut expr = LinearExpr {
                constant: -scen.er_min_harvest[m] / scen.rf_conversion_efficiency,
                ..Default::default()
            };
            for (p, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                expr.push(layout.noise_param(p), c);
                for k in 0..k_count {
                    expr.push(layout.beam_param(k, p), c);
                }
            }
            constraints.push(ConstraintSpec::Linear {
                label: ConstraintLabel::ErHarvest { m },
                expr,
            });
        }

        // C14: multipliers stay nonnegative (declared even in the degenerate
        // case so the variable is bounded)
        for k in 0..k_count {
            let mut expr = LinearExpr::default();
            expr.push(layout.c2_mult(m, k, k_count), 1.0);
            constraints.push(ConstraintSpec::Linear {
                label: ConstraintLabel::C2MultNonneg { m, k },
                expr,
            });
        }
        let mut expr = LinearExpr::default();
        expr.push(layout.c7_mult(m), 1.0);
        constraints.push(ConstraintSpec::Linear {
            label: ConstraintLabel::C7MultNonneg { m },
            expr,
        });
    }

    // ---- C4/C5/C8 or per-RRH budgets: energy provisioning ----------------
    match energy {
        EnergyModel::PooledGrid => {
            // C4: circuit + amplifier power within the post-loss grid budget,
            // e_sᵀBe_s ≤ 1ᵀe_s − consumption as a second-order cone
            let chol = scen
                .grid_loss_coeffs
                .clone()
                .cholesky()
                .expect("scenario validation guarantees a PD grid matrix");
            let factor: DMatrix<f64> = chol.l().transpose();
            let dim = l_count + 1;
            let rows: Vec<LinearExpr> = (0..dim)
                .map(|r| {
                    let mut row = LinearExpr::default();
                    for c in 0..dim {
                        row.push(layout.supply_var(c), factor[(r, c)]);
                    }
                    row
                })
                .collect();
            let mut cap = LinearExpr {
                constant: -scen.cp_circuit_power - scen.rrh_circuit_powers.iter().sum::<f64>(),
                ..Default::default()
            };
            for nsrc in 0..dim {
                cap.push(layout.supply_var(nsrc), 1.0);
            }
            let rho = scen.amplifier_inefficiency;
            for l in 0..l_count {
                for (p, c) in block_trace_coeffs(l) {
                    for k in 0..k_count {
                        cap.push(layout.beam_param(k, p), -rho * c);
                    }
                    cap.push(layout.noise_param(p), -rho * c);
                }
            }
            constraints.push(ConstraintSpec::QuadraticCap {
                label: ConstraintLabel::NetPower,
                rows,
                cap,
            });

            // C5 / C8: per-source caps and nonnegativity
            for nsrc in 0..dim {
                let mut expr = LinearExpr {
                    constant: scen.supply_limits[nsrc],
                    ..Default::default()
                };
                expr.push(layout.supply_var(nsrc), -1.0);
                constraints.push(ConstraintSpec::Linear {
                    label: ConstraintLabel::SupplyCap { n: nsrc },
                    expr,
                });
                let mut expr = LinearExpr::default();
                expr.push(layout.supply_var(nsrc), 1.0);
                constraints.push(ConstraintSpec::Linear {
                    label: ConstraintLabel::SupplyNonneg { n: nsrc },
                    expr,
                });
            }
        }
        EnergyModel::PerRrhBudget => {
            // each RRH covers its own circuit and amplifier draw
            let rho = scen.amplifier_inefficiency;
            for l in 0..l_count {
                let mut expr = LinearExpr {
                    constant: scen.supply_limits[l] - scen.rrh_circuit_powers[l],
                    ..Default::default()
                };
                for (p, c) in block_trace_coeffs(l) {
                    for k in 0..k_count {
                        expr.push(layout.beam_param(k, p), -rho * c);
                    }
                    expr.push(layout.noise_param(p), -rho * c);
                }
                constraints.push(ConstraintSpec::Linear {
                    label: ConstraintLabel::RrhEnergyBudget { l },
                    expr,
                });
            }
            constraints.push(ConstraintSpec::Linear {
                label: ConstraintLabel::CpEnergyBudget,
                expr: LinearExpr {
                    constant: scen.supply_limits[l_count] - scen.cp_circuit_power,
                    ..Default::default()
                },
            });
        }
    }

    // ---- C6: per-RRH transmit power limits -------------------------------
    for l in 0..l_count {
        let mut expr = LinearExpr {
            constant: scen.rrh_power_limits[l],
            ..Default::default()
        };
        for (p, c) in block_trace_coeffs(l) {
            for k in 0..k_count {
                expr.push(layout.beam_param(k, p), -c);
            }
            expr.push(layout.noise_param(p), -c);
        }
        constraints.push(ConstraintSpec::Linear {
            label: ConstraintLabel::TxPower { l },
            expr,
        });
    }

    // ---- C11: selection-consistency caps ---------------------------------
    for l in 0..l_count {
        let block = block_trace_coeffs(l);
        for k in 0..k_count {
            let mut expr = LinearExpr::default();
            match &selection {
                SelectionMode::Fixed(s) => {
                    expr.constant = if s.get(l, k) {
                        scen.rrh_power_limits[l]
                    } else {
                        0.0
                    };
                }
                SelectionMode::Slack(s) => {
                    expr.constant = if s.get(l, k) {
                        scen.rrh_power_limits[l]
                    } else {
                        0.0
                    };
                    expr.push(layout.slack_var(l, k, k_count), 1.0);
                }
                SelectionMode::Relaxed { .. } => {
                    expr.push(
                        layout.selection_var(l, k, k_count),
                        scen.rrh_power_limits[l],
                    );
                }
            }
            for &(p, c) in &block {
                expr.push(layout.beam_param(k, p), -c);
            }
            constraints.push(ConstraintSpec::Linear {
                label: ConstraintLabel::SelectionCap { l, k },
                expr,
            });
        }
    }

    // ---- mode-specific rows ----------------------------------------------
    match &selection {
        SelectionMode::Fixed(_) => {}
        SelectionMode::Slack(_) => {
            for l in 0..l_count {
                for k in 0..k_count {
                    let mut expr = LinearExpr::default();
                    expr.push(layout.slack_var(l, k, k_count), 1.0);
                    constraints.push(ConstraintSpec::Linear {
                        label: ConstraintLabel::SlackNonneg { l, k },
                        expr,
                    });
                }
            }
        }
        SelectionMode::Relaxed { .. } => {
            // C10a box and C3 backhaul caps over the continuous selections
            for l in 0..l_count {
                for k in 0..k_count {
                    let var = layout.selection_var(l, k, k_count);
                    let mut lower = LinearExpr::default();
                    lower.push(var, 1.0);
                    constraints.push(ConstraintSpec::Linear {
                        label: ConstraintLabel::SelectionLower { l, k },
                        expr: lower,
                    });
                    let mut upper = LinearExpr {
                        constant: 1.0,
                        ..Default::default()
                    };
                    upper.push(var, -1.0);
                    constraints.push(ConstraintSpec::Linear {
                        label: ConstraintLabel::SelectionUpper { l, k },
                        expr: upper,
                    });
                }
                let mut expr = LinearExpr {
                    constant: scen.backhaul_caps[l],
                    ..Default::default()
                };
                for k in 0..k_count {
                    expr.push(layout.selection_var(l, k, k_count), -scen.backhaul_rates[k]);
                }
                constraints.push(ConstraintSpec::Linear {
                    label: ConstraintLabel::Backhaul { l },
                    expr,
                });
            }
        }
    }

    // ---- C9 / C12: PSD-ness of the Hermitian blocks -----------------------
    for k in 0..k_count {
        let terms = (0..herm)
            .map(|p| (layout.beam_param(k, p), herm_basis(n, p)))
            .collect();
        constraints.push(ConstraintSpec::Lmi {
            label: ConstraintLabel::BeamPsd { k },
            dim: n,
            constant: CMatrix::zeros(n, n),
            terms,
        });
    }
    let terms = (0..herm)
        .map(|p| (layout.noise_param(p), herm_basis(n, p)))
        .collect();
    constraints.push(ConstraintSpec::Lmi {
        label: ConstraintLabel::NoisePsd,
        dim: n,
        constant: CMatrix::zeros(n, n),
        terms,
    });

    // ---- objective ---------------------------------------------------------
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut objective_constant = 0.0;
    match &selection {
        SelectionMode::Slack(_) => {
            for l in 0..l_count {
                for k in 0..k_count {
                    objective.push((layout.slack_var(l, k, k_count), 1.0));
                }
            }
        }
        mode => {
            let identity = trace_functional(&CMatrix::identity(n, n));
            for (p, &c) in identity.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for k in 0..k_count {
                    objective.push((layout.beam_param(k, p), c));
                }
                objective.push((layout.noise_param(p), c));
            }
            if let SelectionMode::Relaxed { anchor, phi } = mode {
                // Λ(s; a) = Σ s·(1 − 2a) + Σ a², an upper bound on Σ (s − s²)
                for l in 0..l_count {
                    for k in 0..k_count {
                        let a = anchor[l][k];
                        objective.push((
                            layout.selection_var(l, k, k_count),
                            phi * (1.0 - 2.0 * a),
                        ));
                        objective_constant += phi * a * a;
                    }
                }
            }
        }
    }

    ConicProgram {
        layout,
        objective,
        objective_constant,
        constraints,
        selection_mode: selection,
        energy_model: energy,
        rrh_count: l_count,
        ir_count: k_count,
        er_count: m_count,
        antennas_per_rrh: scen.antennas_per_rrh,
        channel_scale,
    }
}

/// Linearized binary penalty `Λ(s; a) = φ·(Σs − Σa² − 2Σa(s−a))`, the convex
/// majorizer of `φ·Σ(s − s²)` that is exact at `s = a`.
pub fn linearized_penalty(s: &[Vec<f64>], anchor: &[Vec<f64>], phi: f64) -> f64 {
    let mut total = 0.0;
    for (row_s, row_a) in s.iter().zip(anchor) {
        for (&sv, &av) in row_s.iter().zip(row_a) {
            total += sv - av * av - 2.0 * av * (sv - av);
        }
    }
    phi * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, ScenarioParams};

    #[test]
    fn layout_is_dense_and_disjoint() {
        let scen = generate_scenario(
            &ScenarioParams::tiny_topology(),
            &ScenarioParams::tiny(),
            1,
        )
        .unwrap();
        let program = build_primal(&scen, &SelectionMatrix::all_ones(2, 2));
        let n = scen.antenna_total();
        let herm = herm_param_count(n);
        assert_eq!(program.layout.noise_offset, 2 * herm);
        assert_eq!(
            program.layout.total,
            3 * herm + 3 /* supply */ + 2 /* δ */ + 1 /* ν */
        );
        // every constraint references declared variables
        for c in &program.constraints {
            match c {
                ConstraintSpec::Linear { expr, .. } => {
                    for &(v, _) in &expr.coeffs {
                        assert!(v < program.layout.total);
                    }
                }
                ConstraintSpec::QuadraticCap { rows, cap, .. } => {
                    for row in rows.iter().chain(std::iter::once(cap)) {
                        for &(v, _) in &row.coeffs {
                            assert!(v < program.layout.total);
                        }
                    }
                }
                ConstraintSpec::Lmi { terms, dim, constant, .. } => {
                    assert_eq!(constant.nrows(), *dim);
                    for (v, t) in terms {
                        assert!(*v < program.layout.total);
                        assert_eq!(t.nrows(), *dim);
                    }
                }
            }
        }
    }

    #[test]
    fn perfect_csi_uses_nominal_rows() {
        let mut params = ScenarioParams::tiny();
        params.normalized_csi_error = 0.0;
        let scen =
            generate_scenario(&ScenarioParams::tiny_topology(), &params, 1).unwrap();
        let program = build_primal(&scen, &SelectionMatrix::all_ones(2, 2));
        let lmi_er = program.constraints.iter().any(|c| {
            matches!(
                (c, c.label()),
                (ConstraintSpec::Lmi { .. }, ConstraintLabel::ErLeak { .. })
                    | (ConstraintSpec::Lmi { .. }, ConstraintLabel::ErHarvest { .. })
            )
        });
        assert!(!lmi_er);
    }

    #[test]
    fn penalty_identities() {
        // exact at the anchor, zero at binary anchors
        let anchor = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(linearized_penalty(&anchor, &anchor, 7.0), 0.0);
        let half = vec![vec![0.5]];
        assert!((linearized_penalty(&half, &half, 1.0) - 0.25).abs() < 1e-15);

        // majorization with quadratic gap: Λ − φΣ(s−s²) = φΣ(s−a)²
        let s = vec![vec![0.3, 0.9], vec![0.1, 0.6]];
        let a = vec![vec![0.7, 0.2], vec![0.5, 0.5]];
        let phi = 3.0;
        let penalty: f64 = phi
            * s.iter()
                .flatten()
                .map(|&x| x - x * x)
                .sum::<f64>();
        let gap: f64 = phi
            * s.iter()
                .flatten()
                .zip(a.iter().flatten())
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum::<f64>();
        let lin = linearized_penalty(&s, &a, phi);
        assert!((lin - penalty - gap).abs() < 1e-12);
        assert!(lin >= penalty - 1e-12);
    }
}

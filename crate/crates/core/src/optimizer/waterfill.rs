//! Water-filling step: the transmit covariance that maximizes the
//! order-statistic surrogate for a fixed reflection state.
//!
//! With weights `γ_i = H_i(P)·H_i(L)·β₀·d_u,i·d_r,i` (zero beyond the stream
//! count) the surrogate becomes `log2 det(I + γ^{1/2} A_bᴴ Q A_b γ^{1/2})`,
//! a classical water-filling problem over the singular directions of
//! `B = γ^{1/2} A_bᴴ`. The optimum is `Q★ = V₁ diag(p) V₁ᴴ` with
//! `p_i = max(1/p₀ - 1/σ_i², 0)` and `Σ p_i = P_T`; the water level `1/p₀`
//! is located by bisection and then snapped to the exact active-set value
//! `μ = (P_T + Σ_active 1/σ_i²)/|active|`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::capacity::{
    coupling_coefficient, eigen_triplet, order_statistic_mean, ReflectionState,
    TransmitCovariance,
};
use crate::channel::{SteeringSet, SystemConfig};
use crate::error::{Error, Result};

/// Water-filling output. `powers`, `singular_sq`, and the columns of the
/// eigenbasis inside `q` share one descending-σ² ordering.
#[derive(Debug, Clone)]
pub struct WaterfillResult {
    pub q: TransmitCovariance,
    /// Per-direction transmit powers (descending σ² order), summing to `P_T`
    /// unless the problem is degenerate.
    pub powers: Vec<f64>,
    /// Squared singular values of `B = γ^{1/2} A_bᴴ`, descending.
    pub singular_sq: Vec<f64>,
    /// Water level `1/p₀` (zero when degenerate).
    pub water_level: f64,
    /// True when every singular value vanishes (no weighted direction left);
    /// the covariance then falls back to equal power.
    pub degenerate: bool,
    /// `log2 det(I + γ^{1/2} A_bᴴ Q★ A_b γ^{1/2}) = Σ log2(1 + σ_i² p_i)`.
    pub surrogate: f64,
}

/// Relative threshold below which a squared singular value is treated as a
/// zero-capacity direction.
const SV_RTOL: f64 = 1e-10;
const BISECTION_STEPS: usize = 200;

/// Solves the covariance subproblem for the given reflection state.
pub fn waterfill(
    cfg: &SystemConfig,
    theta: &ReflectionState,
    s: &SteeringSet,
) -> Result<WaterfillResult> {
    let budget = cfg.power_budget;
    // d_u and d_r do not depend on Q, and ranks are scale-invariant, so the
    // equal-power triplet provides the weights.
    let trip = eigen_triplet(&TransmitCovariance::equal_power(cfg), theta, s)?;
    let beta0 = coupling_coefficient(cfg);
    let gamma: Vec<f64> = (0..cfg.p_paths)
        .map(|i| {
            if i < trip.n_s {
                order_statistic_mean(cfg.p_paths, i + 1)
                    * order_statistic_mean(cfg.l_paths, i + 1)
                    * beta0
                    * trip.d_u[i]
                    * trip.d_r[i]
            } else {
                0.0
            }
        })
        .collect();

    // B = γ^{1/2} A_bᴴ, P x N_b.
    let mut b = s.a_b.adjoint();
    for (i, &g) in gamma.iter().enumerate() {
        b.row_mut(i).apply(|v| *v *= Complex64::new(g.sqrt(), 0.0));
    }
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("svd requested right singular vectors");
    let m = svd.singular_values.len();

    // Descending σ² with their right singular vectors.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &c| svd.singular_values[c].total_cmp(&svd.singular_values[a]));
    let singular_sq: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let mut basis = DMatrix::<Complex64>::zeros(cfg.n_b, m);
    for (slot, &i) in order.iter().enumerate() {
        basis.column_mut(slot).copy_from(&v_t.row(i).adjoint());
    }

    let sv_max = singular_sq.first().copied().unwrap_or(0.0);
    let usable: Vec<f64> = singular_sq.iter().copied().filter(|&v| v > SV_RTOL * sv_max.max(f64::MIN_POSITIVE)).collect();
    if usable.is_empty() {
        let q = TransmitCovariance::equal_power(cfg);
        let scale = budget / cfg.n_b as f64;
        let surrogate = singular_sq.iter().map(|&sv| (1.0 + sv * scale).log2()).sum();
        return Ok(WaterfillResult {
            q,
            powers: vec![0.0; m],
            singular_sq,
            water_level: 0.0,
            degenerate: true,
            surrogate,
        });
    }

    // Total power released at reciprocal level p0.
    let spill = |p0: f64| -> f64 { usable.iter().map(|&sv| (1.0 / p0 - 1.0 / sv).max(0.0)).sum() };

    // Bracket: at p0 = max σ² nothing spills; shrink until the budget fits.
    let hi = usable[0];
    let mut lo = hi;
    let mut guard = 0;
    while spill(lo) < budget {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 {
            return Err(Error::numeric("waterfill", "failed to bracket the water level"));
        }
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if spill(mid) >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p0 = 0.5 * (lo + hi);

    // Snap to the exact level for the active set the bisection identified,
    // re-deriving the set until it is self-consistent.
    let mut active: Vec<bool> = usable.iter().map(|&sv| sv > p0).collect();
    let mut level = 0.0;
    for _ in 0..=usable.len() {
        let count = active.iter().filter(|&&a| a).count();
        assert!(count > 0, "bisection bracket guarantees a nonempty active set");
        let inv_sum: f64 = usable.iter().zip(&active).filter(|(_, &a)| a).map(|(&sv, _)| 1.0 / sv).sum();
        level = (budget + inv_sum) / count as f64;
        let next: Vec<bool> = usable.iter().map(|&sv| 1.0 / sv < level).collect();
        if next == active {
            break;
        }
        active = next;
    }

    let mut powers = vec![0.0; m];
    for (i, (&sv, &a)) in usable.iter().zip(&active).enumerate() {
        if a {
            powers[i] = level - 1.0 / sv;
        }
    }
    let q = TransmitCovariance::from_eigenbasis(&basis, &powers, budget)?;
    let surrogate = singular_sq.iter().zip(&powers).map(|(&sv, &p)| (1.0 + sv * p).log2()).sum();
    Ok(WaterfillResult { q, powers, singular_sq, water_level: level, degenerate: false, surrogate })
}

//! Riemannian conjugate gradient over the unit-modulus torus
//! `{θ ∈ C^{N_r} : |θ_k| = 1}` for the reflection-phase subproblem.
//!
//! The objective is `f(θ) = -log2 det(I_P + Γ^{1/2} XᴴX Γ^{1/2})` with
//! `X = A_rlᴴ diag(θ) A_rp` and fixed stream weights
//! `Γ_i = H_i(P)·H_i(L)·β₀·d_b,i·d_u,i`; minimizing `f` maximizes the
//! order-statistic surrogate in θ.
//!
//! Conventions (pinned by the finite-difference tests):
//! - [`ThetaObjective::gradient`] returns the Wirtinger cogradient
//!   `∂f/∂θ*` with no factor 2; first-order change along a perturbation `η`
//!   is `2·Re⟨g, η⟩`.
//! - Tangent projection at `θ`: `v - Re(v ⊙ θ*) ⊙ θ`; vector transport is
//!   the same projection at the new point.
//! - Retraction: `(θ_k + α η_k)/|θ_k + α η_k|`.
//! - Polak-Ribiere+ momentum with a steepest-descent restart whenever the
//!   composed direction fails to descend, and Armijo backtracking line
//!   search from unit step.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::LN_2;

use crate::capacity::{
    coupling_coefficient, eigen_triplet, order_statistic_mean, ReflectionState,
    TransmitCovariance,
};
use crate::channel::{SteeringSet, SystemConfig};
use crate::error::{Error, Result};

/// Line-search and stopping parameters.
#[derive(Debug, Clone)]
pub struct RcgOptions {
    /// Stop once the Riemannian gradient norm falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Step contraction per backtrack.
    pub armijo_contraction: f64,
    /// Maximum halvings per line search (shared with retraction retries).
    pub max_backtracks: usize,
}

impl Default for RcgOptions {
    fn default() -> Self {
        RcgOptions {
            grad_tol: 1e-6,
            max_iter: 500,
            armijo_c1: 1e-4,
            armijo_contraction: 0.5,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcgStatus {
    /// Gradient norm reached `grad_tol`.
    Converged,
    /// Iteration budget exhausted.
    MaxIter,
    /// Line search could not find a decreasing step.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct RcgResult {
    pub theta: ReflectionState,
    /// Final objective `f(θ)` (negated surrogate).
    pub objective: f64,
    /// `-f(θ)`: the maximized surrogate `log2 det(I + Γ^{1/2}XᴴXΓ^{1/2})`.
    pub surrogate: f64,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: RcgStatus,
}

/// The θ-subproblem objective with frozen stream weights. Exposed so tests
/// can probe values and gradients directly.
pub struct ThetaObjective {
    a_rl: DMatrix<Complex64>,
    a_rp: DMatrix<Complex64>,
    gamma_sqrt: Vec<f64>,
}

impl ThetaObjective {
    /// Builds the weights `Γ_i = H_i(P)H_i(L)·β₀·d_b,i·d_u,i` (zero beyond
    /// the stream count) from the triplet at `(q, theta0)`.
    pub fn new(
        cfg: &SystemConfig,
        q: &TransmitCovariance,
        theta0: &ReflectionState,
        s: &SteeringSet,
    ) -> Result<ThetaObjective> {
        let trip = eigen_triplet(q, theta0, s)?;
        let beta0 = coupling_coefficient(cfg);
        let gamma_sqrt: Vec<f64> = (0..cfg.p_paths)
            .map(|i| {
                if i < trip.n_s {
                    (order_statistic_mean(cfg.p_paths, i + 1)
                        * order_statistic_mean(cfg.l_paths, i + 1)
                        * beta0
                        * trip.d_b[i]
                        * trip.d_u[i])
                        .sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Ok(ThetaObjective { a_rl: s.a_rl.clone(), a_rp: s.a_rp.clone(), gamma_sqrt })
    }

    /// `X·Γ^{1/2}` for an arbitrary (not necessarily unit-modulus) vector.
    fn weighted_coupling(&self, theta: &DVector<Complex64>) -> DMatrix<Complex64> {
        let mut reflected = self.a_rp.clone();
        for (k, phase) in theta.iter().enumerate() {
            reflected.row_mut(k).apply(|v| *v *= phase);
        }
        let mut xg = self.a_rl.adjoint() * reflected;
        for (j, &g) in self.gamma_sqrt.iter().enumerate() {
            xg.column_mut(j).apply(|v| *v *= Complex64::new(g, 0.0));
        }
        xg
    }

    /// `f(θ) = -log2 det(I + Γ^{1/2}XᴴXΓ^{1/2})`, defined on all of
    /// `C^{N_r}` (the line search and finite-difference tests evaluate it off
    /// the torus).
    pub fn value(&self, theta: &DVector<Complex64>) -> Result<f64> {
        let xg = self.weighted_coupling(theta);
        let p = xg.ncols();
        let m = DMatrix::<Complex64>::identity(p, p) + xg.adjoint() * &xg;
        let chol = m.cholesky().ok_or_else(|| Error::numeric("ThetaObjective::value", "Gram matrix lost positive definiteness"))?;
        let mut acc = 0.0;
        for i in 0..p {
            acc += chol.l()[(i, i)].re.ln();
        }
        let f = -2.0 * acc / LN_2;
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::numeric("ThetaObjective::value", "non-finite objective"))
        }
    }

    /// Objective and Wirtinger cogradient `∂f/∂θ*` (no factor 2):
    /// `g_k = -(1/ln 2)·[A_rl·X·Ω^{-1}·Γ·A_rpᴴ]_{kk}` with `Ω = I + ΓXᴴX`,
    /// extracted row by row without forming the N_r×N_r product.
    pub fn gradient(&self, theta: &DVector<Complex64>) -> Result<(f64, DVector<Complex64>)> {
        let xg = self.weighted_coupling(theta);
        let p = xg.ncols();
        let m = DMatrix::<Complex64>::identity(p, p) + xg.adjoint() * &xg;
        let chol = m.cholesky().ok_or_else(|| Error::numeric("ThetaObjective::gradient", "Gram matrix lost positive definiteness"))?;
        let mut acc = 0.0;
        for i in 0..p {
            acc += chol.l()[(i, i)].re.ln();
        }
        let f = -2.0 * acc / LN_2;

        // X·Ω^{-1}·Γ = (X·Γ^{1/2})·M^{-1}·Γ^{1/2} with M = I + Γ^{1/2}XᴴXΓ^{1/2}.
        let mut inner = xg * chol.inverse();
        for (j, &g) in self.gamma_sqrt.iter().enumerate() {
            inner.column_mut(j).apply(|v| *v *= Complex64::new(g, 0.0));
        }
        let y = &self.a_rl * inner; // N_r × P
        let mut grad = DVector::<Complex64>::zeros(theta.len());
        for k in 0..theta.len() {
            let mut d = Complex64::new(0.0, 0.0);
            for j in 0..y.ncols() {
                d += y[(k, j)] * self.a_rp[(k, j)].conj();
            }
            grad[k] = -d / LN_2;
        }
        if !f.is_finite() {
            return Err(Error::numeric("ThetaObjective::gradient", "non-finite objective"));
        }
        Ok((f, grad))
    }

    /// Stream weights `Γ_i`.
    pub fn weights(&self) -> Vec<f64> {
        self.gamma_sqrt.iter().map(|g| g * g).collect()
    }
}

/// Projects `v` onto the tangent space at `theta`:
/// `v_k - Re(v_k·θ_k*)·θ_k`.
pub fn project_tangent(theta: &DVector<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_iterator(
        v.len(),
        v.iter().zip(theta.iter()).map(|(&vk, &tk)| vk - tk * (vk * tk.conj()).re),
    )
}

/// Moves along `eta` and renormalizes each coefficient back to the circle;
/// `None` if some coefficient lands exactly at the origin.
pub fn retract(
    theta: &DVector<Complex64>,
    eta: &DVector<Complex64>,
    alpha: f64,
) -> Option<DVector<Complex64>> {
    let mut out = DVector::<Complex64>::zeros(theta.len());
    for k in 0..theta.len() {
        let c = theta[k] + eta[k] * alpha;
        let n = c.norm();
        if n == 0.0 {
            return None;
        }
        out[k] = c / n;
    }
    Some(out)
}

fn inner_re(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Minimizes the θ-subproblem from `theta0` with weights frozen at
/// `(q, theta0)`. Deterministic: no randomness is used anywhere.
pub fn optimize_theta(
    cfg: &SystemConfig,
    q: &TransmitCovariance,
    theta0: &ReflectionState,
    s: &SteeringSet,
    opts: &RcgOptions,
) -> Result<RcgResult> {
    let problem = ThetaObjective::new(cfg, q, theta0, s)?;
    let mut theta = theta0.vector().clone();
    let (mut f, egrad) = problem.gradient(&theta)?;
    let mut g = project_tangent(&theta, &egrad);
    let mut grad_norm = g.norm();
    let mut trace = vec![f];

    if grad_norm <= opts.grad_tol {
        return Ok(RcgResult {
            theta: ReflectionState::new(theta)?,
            objective: f,
            surrogate: -f,
            trace,
            iterations: 0,
            grad_norm,
            status: RcgStatus::Converged,
        });
    }

    let mut eta = -&g;
    let mut status = RcgStatus::MaxIter;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        let mut slope = 2.0 * inner_re(&g, &eta);
        if slope >= 0.0 {
            eta = -&g;
            slope = -2.0 * grad_norm * grad_norm;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        let mut evaluated = false;
        for _ in 0..=opts.max_backtracks {
            match retract(&theta, &eta, alpha) {
                None => {
                    alpha *= opts.armijo_contraction;
                    continue;
                }
                Some(cand) => {
                    evaluated = true;
                    let f_new = problem.value(&cand)?;
                    if f_new <= f + opts.armijo_c1 * alpha * slope {
                        accepted = Some((cand, f_new));
                        break;
                    }
                    alpha *= opts.armijo_contraction;
                }
            }
        }
        if !evaluated {
            return Err(Error::numeric("optimize_theta", "retraction kept hitting the origin"));
        }
        let Some((cand, f_new)) = accepted else {
            status = RcgStatus::Stalled;
            break;
        };
        theta = cand;
        f = f_new;
        iterations = it;
        trace.push(f);

        let (_, egrad_new) = problem.gradient(&theta)?;
        let g_new = project_tangent(&theta, &egrad_new);
        grad_norm = g_new.norm();
        if grad_norm <= opts.grad_tol {
            status = RcgStatus::Converged;
            break;
        }

        // Polak-Ribiere+ with transported previous gradient and direction.
        let g_transported = project_tangent(&theta, &g);
        let eta_transported = project_tangent(&theta, &eta);
        let denom = inner_re(&g, &g);
        let beta = ((inner_re(&g_new, &g_new) - inner_re(&g_new, &g_transported)) / denom).max(0.0);
        let mut eta_new = &eta_transported * Complex64::new(beta, 0.0) - &g_new;
        if 2.0 * inner_re(&g_new, &eta_new) >= 0.0 {
            eta_new = -&g_new;
        }
        g = g_new;
        eta = eta_new;
    }

    Ok(RcgResult {
        theta: ReflectionState::new(theta)?,
        objective: f,
        surrogate: -f,
        trace,
        iterations,
        grad_norm,
        status,
    })
}

//! Ergodic-capacity expressions for the cascaded RIS link.
//!
//! Five estimators of the same quantity, from slowest/most exact to fastest:
//!
//! - [`exact_capacity_mc`]: Monte-Carlo average of `log2 det(I + HQHᴴ/σ²)`
//!   over full channel draws.
//! - [`c_app_mc`]: Monte-Carlo average of the decoupled approximation, which
//!   replaces the log-det by `Σ_i log2(1 + α_i |g_i|²|t_i|²)` over the
//!   leading `n_s` streams of the eigenvalue triplet.
//! - [`c_app_quadrature`]: the same approximation with the gain expectation
//!   done analytically, reducing to one-dimensional integrals
//!   `∫ e^{-z} e^{1/(α_i z)} E1(1/(α_i z)) dz` evaluated by Gauss-Laguerre
//!   rules under node doubling.
//! - [`c_jen1`] / [`c_jen2`]: closed forms from Jensen arguments; the second
//!   inserts the means of ascending exponential order statistics and is the
//!   surrogate maximized by the optimizer.
//! - [`c_high_snr_upper`]: the high-SNR affine upper bound
//!   `Σ_i (ln α_i - 2γ)/ln 2`.
//!
//! All stream coefficients come from one [`EigenTriplet`]: the descending
//! eigenvalues of `A_bᴴ Q A_b`, `A_uᴴ A_u`, and `XᴴX` with
//! `X = A_rlᴴ diag(θ) A_rp`, plus the stream count `n_s` as the minimum of
//! their numerical ranks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::channel::{
    assemble_g, assemble_t, cascade, sample_realization, trial_rng, ChannelRealization, SteeringSet,
    SystemConfig,
};
use crate::error::{Error, Result};
use crate::quadrature::{laguerre_rule, NODE_LADDER};
use crate::special::{exe1, EULER_GAMMA};
use crate::stats::mean_std_err;

/// Relative spread below the largest eigenvalue at which a mode counts
/// towards the numerical rank.
const RANK_RTOL: f64 = 1e-10;
/// Eigenvalues of nominally PSD matrices may round off slightly negative;
/// anything below `-CLAMP_RTOL·scale` is treated as a real numeric failure.
const CLAMP_RTOL: f64 = 1e-10;
/// Node-doubling stops when the quadrature value moves by less than this
/// relative amount.
const QUAD_RTOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// shared linear-algebra helpers
// ---------------------------------------------------------------------------

/// Descending real eigenvalues of a (numerically) Hermitian matrix. The input
/// is symmetrized first so round-off asymmetry cannot leak into complex
/// eigenvalues.
pub(crate) fn hermitian_eigenvalues_desc(
    m: &DMatrix<Complex64>,
    context: &'static str,
) -> Result<Vec<f64>> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(context, "non-finite eigenvalue"));
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Clamps round-off negatives of a PSD spectrum to zero; genuinely negative
/// eigenvalues (beyond `-1e-10·scale`) are a numeric error.
pub(crate) fn clamp_psd_spectrum(mut vals: Vec<f64>, context: &'static str) -> Result<Vec<f64>> {
    let scale = vals.first().copied().unwrap_or(0.0).max(1.0);
    for v in vals.iter_mut() {
        if *v < -CLAMP_RTOL * scale {
            return Err(Error::numeric(context, format!("eigenvalue {v} below PSD tolerance")));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(vals)
}

/// Number of eigenvalues exceeding `1e-10` times the largest (zero for an
/// all-zero spectrum). Expects descending input.
pub(crate) fn numerical_rank(eigs_desc: &[f64]) -> usize {
    let max = eigs_desc.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    eigs_desc.iter().take_while(|&&v| v > RANK_RTOL * max).count()
}

/// `log2 det(M)` of a Hermitian positive-definite matrix through its Cholesky
/// factor; fails rather than returning NaN when `M` is not PD.
pub(crate) fn logdet2_hermitian_pd(m: &DMatrix<Complex64>, context: &'static str) -> Result<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let chol = h
        .cholesky()
        .ok_or_else(|| Error::numeric(context, "matrix is not positive definite"))?;
    let mut acc = 0.0;
    let l = chol.l();
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    let v = 2.0 * acc / LN_2;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numeric(context, "log-determinant is not finite"))
    }
}

// ---------------------------------------------------------------------------
// transmit covariance and reflection state
// ---------------------------------------------------------------------------

/// Transmit covariance `Q ⪰ 0` with `tr(Q) <= P_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance {
    matrix: DMatrix<Complex64>,
}

impl TransmitCovariance {
    /// Uniform power over all BS antennas: `Q = (P_T/N_b)·I`.
    pub fn equal_power(cfg: &SystemConfig) -> TransmitCovariance {
        let scale = Complex64::new(cfg.power_budget / cfg.n_b as f64, 0.0);
        TransmitCovariance { matrix: DMatrix::from_diagonal_element(cfg.n_b, cfg.n_b, scale) }
    }

    /// Validates Hermitian symmetry (1e-10), positive semidefiniteness
    /// (eigenvalues ≥ -1e-10·scale), and the power budget
    /// `tr(Q) <= P_T·(1+1e-10)`.
    pub fn new(matrix: DMatrix<Complex64>, power_budget: f64) -> Result<TransmitCovariance> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                op: "TransmitCovariance::new",
                operand: "matrix",
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
                want: "square".into(),
            });
        }
        let scale = matrix.iter().map(|c| c.norm()).fold(1.0f64, f64::max);
        let asym = (&matrix - matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if asym > 1e-10 * scale {
            return Err(Error::domain("TransmitCovariance::new", format!("matrix is not Hermitian (asymmetry {asym:e})")));
        }
        let eigs = hermitian_eigenvalues_desc(&matrix, "TransmitCovariance::new")?;
        clamp_psd_spectrum(eigs, "TransmitCovariance::new")?;
        let trace: f64 = matrix.diagonal().iter().map(|c| c.re).sum();
        if trace > power_budget * (1.0 + 1e-10) {
            return Err(Error::domain(
                "TransmitCovariance::new",
                format!("trace {trace} exceeds power budget {power_budget}"),
            ));
        }
        Ok(TransmitCovariance { matrix })
    }

    /// `Q = Σ_i p_i v_i v_iᴴ` from an orthonormal basis and nonnegative
    /// powers summing to at most `P_T`. Cheap validation only (no
    /// eigendecomposition), since the water-filling step constructs this in
    /// every outer iteration.
    pub fn from_eigenbasis(
        basis: &DMatrix<Complex64>,
        powers: &[f64],
        power_budget: f64,
    ) -> Result<TransmitCovariance> {
        if basis.ncols() != powers.len() {
            return Err(Error::Dimension {
                op: "TransmitCovariance::from_eigenbasis",
                operand: "powers",
                got: format!("{}", powers.len()),
                want: format!("{} (basis columns)", basis.ncols()),
            });
        }
        let gram = basis.adjoint() * basis;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - Complex64::new(want, 0.0)).norm() > 1e-8 {
                    return Err(Error::domain("TransmitCovariance::from_eigenbasis", "basis is not orthonormal".to_string()));
                }
            }
        }
        if powers.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::domain("TransmitCovariance::from_eigenbasis", "powers must be finite and nonnegative".to_string()));
        }
        let total: f64 = powers.iter().sum();
        if total > power_budget * (1.0 + 1e-10) {
            return Err(Error::domain(
                "TransmitCovariance::from_eigenbasis",
                format!("power sum {total} exceeds budget {power_budget}"),
            ));
        }
        let mut scaled = basis.clone();
        for (j, &p) in powers.iter().enumerate() {
            scaled.column_mut(j).apply(|v| *v *= Complex64::new(p.sqrt(), 0.0));
        }
        let matrix = &scaled * scaled.adjoint();
        Ok(TransmitCovariance { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Unit-modulus reflection coefficients `θ ∈ C^{N_r}`, `|θ_k| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionState {
    phases: DVector<Complex64>,
}

impl ReflectionState {
    /// `Θ = I` (all coefficients one).
    pub fn identity(n_r: usize) -> ReflectionState {
        ReflectionState { phases: DVector::from_element(n_r, Complex64::new(1.0, 0.0)) }
    }

    /// Coefficients `e^{jφ_k}` from explicit phase angles.
    pub fn from_phases(angles: &[f64]) -> ReflectionState {
        ReflectionState { phases: DVector::from_iterator(angles.len(), angles.iter().map(|&a| Complex64::from_polar(1.0, a))) }
    }

    /// Independent phases uniform on `[0, 2π)`.
    pub fn random(n_r: usize, rng: &mut impl Rng) -> ReflectionState {
        let angles: Vec<f64> = (0..n_r).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        ReflectionState::from_phases(&angles)
    }

    /// Validates unit modulus within 1e-12.
    pub fn new(phases: DVector<Complex64>) -> Result<ReflectionState> {
        for (k, c) in phases.iter().enumerate() {
            if (c.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::domain(
                    "ReflectionState::new",
                    format!("coefficient {k} has modulus {} (want 1 within 1e-12)", c.norm()),
                ));
            }
        }
        Ok(ReflectionState { phases })
    }

    pub fn vector(&self) -> &DVector<Complex64> {
        &self.phases
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.phases.as_slice()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.len() == 0
    }
}

// ---------------------------------------------------------------------------
// estimates and the eigenvalue triplet
// ---------------------------------------------------------------------------

/// Which estimator produced a [`CapacityEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityKind {
    ExactMc,
    AppMc,
    AppQuadrature,
    Jen1,
    Jen2,
    HighSnrUpper,
}

impl CapacityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CapacityKind::ExactMc => "exact_mc",
            CapacityKind::AppMc => "app_mc",
            CapacityKind::AppQuadrature => "app_quadrature",
            CapacityKind::Jen1 => "jen1",
            CapacityKind::Jen2 => "jen2",
            CapacityKind::HighSnrUpper => "high_snr_upper",
        }
    }
}

/// Capacity value in bits/s/Hz with its Monte-Carlo uncertainty (zero for
/// closed forms). `value` is finite for every estimator except
/// [`c_high_snr_upper`], which propagates `-inf` when a leading stream has a
/// zero eigenvalue product (an explicitly marked divergence).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub value: f64,
    pub std_err: f64,
    pub trials: usize,
    pub kind: CapacityKind,
}

/// How Monte-Carlo gain draws are matched to eigenvalue products in
/// [`c_app_mc`]: as drawn, or ascending gains against descending products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Unordered,
    Sorted,
}

/// Descending eigenvalues of the three coupling matrices and the stream
/// count. `d_b` and `d_r` have `P` entries (`d_r` has at most `min(P, L)`
/// nonzero), `d_u` has `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTriplet {
    pub d_b: Vec<f64>,
    pub d_u: Vec<f64>,
    pub d_r: Vec<f64>,
    pub n_s: usize,
}

/// `N_b·N_u·N_r²/(σ²·P·L)`: the array-gain factor multiplying every stream's
/// eigenvalue product.
pub fn coupling_coefficient(cfg: &SystemConfig) -> f64 {
    let n_r = cfg.n_r() as f64;
    (cfg.n_b as f64) * (cfg.n_u as f64) * n_r * n_r / (cfg.noise_var * cfg.p_paths as f64 * cfg.l_paths as f64)
}

/// Mean of the `i`-th smallest of `n` i.i.d. Exp(1) draws
/// (`Σ_{j=1..i} 1/(n-j+1)`, `i` one-based).
pub fn order_statistic_mean(n: usize, i: usize) -> f64 {
    assert!(i >= 1 && i <= n, "order statistic index {i} out of range 1..={n}");
    (0..i).map(|j| 1.0 / (n - j) as f64).sum()
}

/// `X = A_rlᴴ·diag(θ)·A_rp ∈ C^{L×P}`, the effective RIS coupling.
pub(crate) fn ris_coupling_matrix(theta: &ReflectionState, s: &SteeringSet) -> Result<DMatrix<Complex64>> {
    if theta.len() != s.a_rp.nrows() {
        return Err(Error::Dimension {
            op: "ris_coupling_matrix",
            operand: "theta",
            got: format!("{}", theta.len()),
            want: format!("{} (RIS elements)", s.a_rp.nrows()),
        });
    }
    let mut reflected = s.a_rp.clone();
    for (k, &phase) in theta.as_slice().iter().enumerate() {
        reflected.row_mut(k).apply(|v| *v *= phase);
    }
    Ok(s.a_rl.adjoint() * reflected)
}

/// Computes the eigenvalue triplet of `(Q, θ)` for a given steering set. Each
/// spectrum is sorted descending and clamped at zero; `n_s` is the minimum of
/// the three numerical ranks.
pub fn eigen_triplet(
    q: &TransmitCovariance,
    theta: &ReflectionState,
    s: &SteeringSet,
) -> Result<EigenTriplet> {
    if q.dim() != s.a_b.nrows() {
        return Err(Error::Dimension {
            op: "eigen_triplet",
            operand: "q",
            got: format!("{}x{}", q.dim(), q.dim()),
            want: format!("{0}x{0} (BS antennas)", s.a_b.nrows()),
        });
    }
    let m_b = s.a_b.adjoint() * q.matrix() * &s.a_b;
    let m_u = s.a_u.adjoint() * &s.a_u;
    let x = ris_coupling_matrix(theta, s)?;
    let m_r = x.adjoint() * &x;

    let d_b = clamp_psd_spectrum(hermitian_eigenvalues_desc(&m_b, "eigen_triplet(d_b)")?, "eigen_triplet(d_b)")?;
    let d_u = clamp_psd_spectrum(hermitian_eigenvalues_desc(&m_u, "eigen_triplet(d_u)")?, "eigen_triplet(d_u)")?;
    let d_r = clamp_psd_spectrum(hermitian_eigenvalues_desc(&m_r, "eigen_triplet(d_r)")?, "eigen_triplet(d_r)")?;

    let n_s = numerical_rank(&d_b).min(numerical_rank(&d_u)).min(numerical_rank(&d_r));
    Ok(EigenTriplet { d_b, d_u, d_r, n_s })
}

impl EigenTriplet {
    /// `α_i` for stream `i` (0-based): coupling coefficient times the
    /// eigenvalue product.
    pub fn stream_alpha(&self, cfg: &SystemConfig, i: usize) -> f64 {
        coupling_coefficient(cfg) * self.d_b[i] * self.d_u[i] * self.d_r[i]
    }

    fn check_dims(&self, cfg: &SystemConfig, context: &'static str) -> Result<()> {
        if self.d_b.len() != cfg.p_paths || self.d_u.len() != cfg.l_paths || self.d_r.len() != cfg.p_paths {
            return Err(Error::Dimension {
                op: context,
                operand: "triplet",
                got: format!("d_b: {}, d_u: {}, d_r: {}", self.d_b.len(), self.d_u.len(), self.d_r.len()),
                want: format!("d_b: {0}, d_u: {1}, d_r: {0} (P = {0}, L = {1})", cfg.p_paths, cfg.l_paths),
            });
        }
        if self.n_s > self.d_b.len().min(self.d_u.len()) {
            return Err(Error::domain(context, format!("n_s = {} exceeds min(P, L)", self.n_s)));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// exact capacity
// ---------------------------------------------------------------------------

/// `log2 det(I + HQHᴴ/σ²)` for one realization, with `H` assembled from the
/// given steering set (which tests may construct synthetically).
pub fn exact_capacity_value(
    cfg: &SystemConfig,
    q: &TransmitCovariance,
    theta: &ReflectionState,
    r: &ChannelRealization,
    s: &SteeringSet,
) -> Result<f64> {
    let g = assemble_g(r, s, cfg)?;
    let t = assemble_t(r, s, cfg)?;
    let h = cascade(&t, theta.as_slice(), &g)?;
    let hqh = &h * q.matrix() * h.adjoint();
    let m = DMatrix::<Complex64>::identity(cfg.n_u, cfg.n_u) + hqh * Complex64::new(1.0 / cfg.noise_var, 0.0);
    logdet2_hermitian_pd(&m, "exact_capacity_value")
}

/// Ergodic capacity by Monte-Carlo over full channel draws. Trial `k` uses
/// the `(seed, k)` substream; per-trial values are reduced in trial order
/// with compensated summation, so the estimate is bit-identical for any
/// rayon worker count.
pub fn exact_capacity_mc(
    cfg: &SystemConfig,
    q: &TransmitCovariance,
    theta: &ReflectionState,
    trials: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    if trials == 0 {
        return Err(Error::domain("exact_capacity_mc", "trials must be >= 1".to_string()));
    }
    cfg.validate()?;
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let r = sample_realization(cfg, &mut rng);
            let s = SteeringSet::from_realization(&r, cfg);
            exact_capacity_value(cfg, q, theta, &r, &s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (value, std_err) = mean_std_err(&values);
    if !value.is_finite() {
        return Err(Error::numeric("exact_capacity_mc", "non-finite aggregate"));
    }
    Ok(CapacityEstimate { value, std_err, trials, kind: CapacityKind::ExactMc })
}

// ---------------------------------------------------------------------------
// decoupled approximation
// ---------------------------------------------------------------------------

/// One Monte-Carlo summand of the decoupled approximation:
/// `Σ_{i<n_s} log2(1 + α_i·|g_i|²·|t_i|²)` for the given squared gain draws
/// (lengths `P` and `L`). Under [`Pairing::Sorted`] the squared gains are
/// sorted ascending before the leading `n_s` are matched against the
/// descending eigenvalue products.
pub fn app_summand(
    cfg: &SystemConfig,
    trip: &EigenTriplet,
    g_sq: &[f64],
    t_sq: &[f64],
    pairing: Pairing,
) -> Result<f64> {
    trip.check_dims(cfg, "app_summand")?;
    if g_sq.len() != cfg.p_paths || t_sq.len() != cfg.l_paths {
        return Err(Error::Dimension {
            op: "app_summand",
            operand: "gains",
            got: format!("g: {}, t: {}", g_sq.len(), t_sq.len()),
            want: format!("g: {}, t: {}", cfg.p_paths, cfg.l_paths),
        });
    }
    if g_sq.iter().chain(t_sq).any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::domain("app_summand", "squared gains must be finite and nonnegative".to_string()));
    }
    let mut g_work;
    let mut t_work;
    let (g_use, t_use): (&[f64], &[f64]) = match pairing {
        Pairing::Unordered => (g_sq, t_sq),
        Pairing::Sorted => {
            g_work = g_sq.to_vec();
            t_work = t_sq.to_vec();
            g_work.sort_by(f64::total_cmp);
            t_work.sort_by(f64::total_cmp);
            (&g_work, &t_work)
        }
    };
    let mut sum = 0.0;
    for i in 0..trip.n_s {
        let alpha = trip.stream_alpha(cfg, i);
        sum += (1.0 + alpha * g_use[i] * t_use[i]).log2();
    }
    if sum.is_finite() {
        Ok(sum)
    } else {
        Err(Error::numeric("app_summand", "non-finite summand"))
    }
}

/// Monte-Carlo estimate of the decoupled approximation over fresh CN(0,1)
/// gain draws (angles are fixed inside the triplet). Deterministic per
/// `(seed, trial)`.
pub fn c_app_mc(
    cfg: &SystemConfig,
    trip: &EigenTriplet,
    trials: usize,
    seed: u64,
    pairing: Pairing,
) -> Result<CapacityEstimate> {
    if trials == 0 {
        return Err(Error::domain("c_app_mc", "trials must be >= 1".to_string()));
    }
    trip.check_dims(cfg, "c_app_mc")?;
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let g_sq: Vec<f64> = (0..cfg.p_paths).map(|_| cn_norm_sqr(&mut rng)).collect();
            let t_sq: Vec<f64> = (0..cfg.l_paths).map(|_| cn_norm_sqr(&mut rng)).collect();
            app_summand(cfg, trip, &g_sq, &t_sq, pairing)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (value, std_err) = mean_std_err(&values);
    if !value.is_finite() {
        return Err(Error::numeric("c_app_mc", "non-finite aggregate"));
    }
    Ok(CapacityEstimate { value, std_err, trials, kind: CapacityKind::AppMc })
}

fn cn_norm_sqr(rng: &mut impl Rng) -> f64 {
    use rand_distr::StandardNormal;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    0.5 * (re * re + im * im)
}

/// Gain-marginalized approximation: for each leading stream,
/// `E[log2(1+α|g|²|t|²)] = (1/ln 2)·∫_0^∞ e^{-z}·exe1(1/(α z)) dz`,
/// integrated by Gauss-Laguerre with node doubling 32 → 64 → 128 (stops
/// early once the relative change drops below 1e-6).
pub fn c_app_quadrature(cfg: &SystemConfig, trip: &EigenTriplet) -> Result<CapacityEstimate> {
    trip.check_dims(cfg, "c_app_quadrature")?;
    let alphas: Vec<f64> = (0..trip.n_s).map(|i| trip.stream_alpha(cfg, i)).collect();
    let mut value = 0.0;
    if !alphas.is_empty() {
        let mut prev: Option<f64> = None;
        for &n in &NODE_LADDER {
            let rule = laguerre_rule(n)?;
            let mut total = 0.0;
            for &alpha in &alphas {
                if alpha <= 0.0 {
                    continue; // a zero product contributes log2(1) = 0
                }
                for (k, &(z, w)) in rule.iter().enumerate() {
                    let term = w * exe1(1.0 / (alpha * z))?;
                    if !term.is_finite() {
                        return Err(Error::numeric(
                            "c_app_quadrature",
                            format!("non-finite contribution at node {k} (z = {z:e}) for alpha = {alpha:e}"),
                        ));
                    }
                    total += term;
                }
            }
            total /= LN_2;
            if let Some(p) = prev {
                if (total - p).abs() <= QUAD_RTOL * total.abs().max(f64::MIN_POSITIVE) {
                    value = total;
                    break;
                }
            }
            value = total;
            prev = Some(total);
        }
    }
    Ok(CapacityEstimate { value, std_err: 0.0, trials: 0, kind: CapacityKind::AppQuadrature })
}

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

/// Jensen upper form: `Σ_{i<n_s} log2(1 + α_i)` (unit mean of `|g|²|t|²`).
pub fn c_jen1(cfg: &SystemConfig, trip: &EigenTriplet) -> Result<CapacityEstimate> {
    trip.check_dims(cfg, "c_jen1")?;
    let value: f64 = (0..trip.n_s).map(|i| (1.0 + trip.stream_alpha(cfg, i)).log2()).sum();
    Ok(CapacityEstimate { value, std_err: 0.0, trials: 0, kind: CapacityKind::Jen1 })
}

/// Order-statistic refinement: stream `i` (1-based) carries the factor
/// `H_i(P)·H_i(L)` with `H_i(n) = Σ_{j=1..i} 1/(n-j+1)`, the mean of the
/// `i`-th ascending exponential order statistic. This is the surrogate
/// objective maximized by the optimizer.
pub fn c_jen2(cfg: &SystemConfig, trip: &EigenTriplet) -> Result<CapacityEstimate> {
    trip.check_dims(cfg, "c_jen2")?;
    let p = cfg.p_paths;
    let l = cfg.l_paths;
    let value: f64 = (0..trip.n_s)
        .map(|i| {
            let weight = order_statistic_mean(p, i + 1) * order_statistic_mean(l, i + 1);
            (1.0 + weight * trip.stream_alpha(cfg, i)).log2()
        })
        .sum();
    Ok(CapacityEstimate { value, std_err: 0.0, trials: 0, kind: CapacityKind::Jen2 })
}

/// High-SNR affine upper bound `Σ_{i<n_s} (ln α_i - 2γ)/ln 2`. A zero
/// eigenvalue product inside the leading streams makes the bound `-inf`;
/// the value is returned as an explicitly divergent marker rather than an
/// error so sweeps can report it.
pub fn c_high_snr_upper(cfg: &SystemConfig, trip: &EigenTriplet) -> Result<CapacityEstimate> {
    trip.check_dims(cfg, "c_high_snr_upper")?;
    let mut value = 0.0;
    for i in 0..trip.n_s {
        let alpha = trip.stream_alpha(cfg, i);
        value += (alpha.ln() - 2.0 * EULER_GAMMA) / LN_2; // ln(0) = -inf propagates
    }
    if value.is_nan() {
        return Err(Error::numeric("c_high_snr_upper", "NaN stream contribution"));
    }
    Ok(CapacityEstimate { value, std_err: 0.0, trials: 0, kind: CapacityKind::HighSnrUpper })
}

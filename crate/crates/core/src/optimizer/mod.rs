//! Joint transmit-covariance and reflection-phase optimization.
//!
//! Alternating maximization of the order-statistic surrogate:
//! starting from equal power and random phases, each outer iteration
//! water-fills the covariance for the current phases
//! ([`waterfill::waterfill`]) and then runs Riemannian conjugate gradient on
//! the phases for the new covariance ([`rcg::optimize_theta`]), until the
//! relative surrogate improvement drops below `outer_tol` or `max_outer`
//! iterations pass. Either half-step can be disabled to produce the
//! fixed-covariance / fixed-phase baselines.

pub mod rcg;
pub mod waterfill;

pub use rcg::{optimize_theta, project_tangent, retract, RcgOptions, RcgResult, RcgStatus, ThetaObjective};
pub use waterfill::{waterfill, WaterfillResult};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::capacity::{
    c_jen2, coupling_coefficient, eigen_triplet, order_statistic_mean, ReflectionState,
    TransmitCovariance,
};
use crate::channel::{SteeringSet, SystemConfig};
use crate::error::Result;

/// Alternating-optimization settings.
#[derive(Debug, Clone)]
pub struct AoOptions {
    /// Stop when the relative objective improvement falls below this.
    pub outer_tol: f64,
    pub max_outer: usize,
    pub rcg: RcgOptions,
    /// Seed for the random initial phases.
    pub theta_seed: u64,
    /// Run the covariance half-step (otherwise Q stays at equal power).
    pub run_waterfill: bool,
    /// Run the phase half-step (otherwise θ stays at its initial draw).
    pub run_rcg: bool,
}

impl Default for AoOptions {
    fn default() -> Self {
        AoOptions {
            outer_tol: 1e-4,
            max_outer: 30,
            rcg: RcgOptions::default(),
            theta_seed: 0,
            run_waterfill: true,
            run_rcg: true,
        }
    }
}

/// Per-outer-iteration record. Surrogate fields are `NaN` when the
/// corresponding half-step is disabled.
#[derive(Debug, Clone, Copy)]
pub struct AoIteration {
    /// Objective at the end of the iteration.
    pub c_jen2: f64,
    /// Water-filling surrogate after the covariance step (weights frozen at
    /// the phases the step started from).
    pub surrogate_q: f64,
    /// RCG surrogate after the phase step (weights frozen at the covariance
    /// the step started from).
    pub surrogate_theta: f64,
    /// Covariance-side weighted log-det re-evaluated at the end-of-iteration
    /// point with weights rebuilt there; see [`surrogate_bounds`].
    pub bound_q: f64,
    /// Phase-side weighted log-det at the end-of-iteration point; see
    /// [`surrogate_bounds`].
    pub bound_theta: f64,
    /// Water level of the covariance step (`NaN` when disabled).
    pub water_level: f64,
    pub rcg_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct AoResult {
    pub q: TransmitCovariance,
    pub theta: ReflectionState,
    pub iterations: Vec<AoIteration>,
    /// Objective at (equal power, initial phases).
    pub c_jen2_initial: f64,
    pub c_jen2_final: f64,
    /// True when the loop stopped on the tolerance rather than the budget.
    pub converged: bool,
}

impl AoResult {
    /// Objective trace indexed by outer iteration, starting at the initial
    /// point.
    pub fn objective_trace(&self) -> Vec<f64> {
        let mut trace = Vec::with_capacity(self.iterations.len() + 1);
        trace.push(self.c_jen2_initial);
        trace.extend(self.iterations.iter().map(|it| it.c_jen2));
        trace
    }
}

/// Determinant-inequality oracle behind the surrogate construction: for a
/// unitary `u` and nonneg *descending* sequences `c`, `s`, returns
/// `(lhs, rhs) = (det(I + diag(c)·uᴴ·diag(s)·u), Π(1 + c_i·s_i))` with
/// `lhs <= rhs + 1e-9·rhs` guaranteed. The descending hypothesis is load
/// bearing; see [`surrogate_bounds`] for what happens without it.
pub fn det_inequality_oracle(
    u: &DMatrix<Complex64>,
    c: &[f64],
    s: &[f64],
) -> Result<(f64, f64)> {
    let n = u.nrows();
    if !u.is_square() || c.len() != n || s.len() != n {
        return Err(crate::error::Error::Dimension {
            op: "det_inequality_oracle",
            operand: "u/c/s",
            got: format!("u: {}x{}, c: {}, s: {}", u.nrows(), u.ncols(), c.len(), s.len()),
            want: "square u with matching weight lengths".to_string(),
        });
    }
    let gram = u.adjoint() * u;
    let mut unitary_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
            unitary_defect = unitary_defect.max((gram[(i, j)] - expect).norm());
        }
    }
    if unitary_defect > 1e-10 {
        return Err(crate::error::Error::domain(
            "det_inequality_oracle",
            format!("u is not unitary: max |uᴴu - I| = {unitary_defect:.3e}"),
        ));
    }
    for (name, w) in [("c", c), ("s", s)] {
        let descending_nonneg = w.iter().all(|v| v.is_finite() && *v >= 0.0)
            && w.windows(2).all(|p| p[0] >= p[1]);
        if !descending_nonneg {
            return Err(crate::error::Error::domain(
                "det_inequality_oracle",
                format!("`{name}` must be nonnegative and descending"),
            ));
        }
    }

    let mut m = u.adjoint();
    for i in 0..n {
        m.column_mut(i).apply(|v| *v *= Complex64::new(s[i], 0.0));
    }
    let mut m = m * u;
    for i in 0..n {
        m.row_mut(i).apply(|v| *v *= Complex64::new(c[i], 0.0));
        m[(i, i)] += Complex64::ONE;
    }
    let lhs = m.determinant().re;
    let rhs = c.iter().zip(s).map(|(ci, si)| 1.0 + ci * si).product();
    Ok((lhs, rhs))
}

/// Evaluates both per-stream weighted log-det surrogates at `(q, theta)`,
/// rebuilding the order-statistic weights from that same point.
///
/// Returns `(covariance_side, phase_side)`: the covariance side is
/// `log2 det(I + G^(1/2) A_b^H Q A_b G^(1/2))` with diagonal weights
/// `G_i = H_i(P) H_i(L) beta0 d_u,i d_r,i`, and the phase side replaces
/// `A_b^H Q A_b` by `X^H X` and `d_u d_r` by `d_b d_u`. Each value equals the
/// objective the corresponding half-step maximizes, up to the weight freeze.
///
/// With descending weight sequences these are lower bounds on [`c_jen2`];
/// the order-statistic weights grow with the stream index, however, so the
/// sequences are usually not descending and either value can exceed the
/// objective by a visible margin. Callers monitoring the bracketing should
/// expect such excesses rather than treat them as optimizer failures.
pub fn surrogate_bounds(
    cfg: &SystemConfig,
    q: &TransmitCovariance,
    theta: &ReflectionState,
    s: &SteeringSet,
) -> Result<(f64, f64)> {
    let trip = eigen_triplet(q, theta, s)?;
    let beta0 = coupling_coefficient(cfg);
    let p = cfg.p_paths;

    let mut b = s.a_b.adjoint();
    for i in 0..p {
        let g = if i < trip.n_s {
            order_statistic_mean(p, i + 1)
                * order_statistic_mean(cfg.l_paths, i + 1)
                * beta0
                * trip.d_u[i]
                * trip.d_r[i]
        } else {
            0.0
        };
        let scale = Complex64::new(g.sqrt(), 0.0);
        b.row_mut(i).apply(|v| *v *= scale);
    }
    let m = DMatrix::<Complex64>::identity(p, p) + &b * q.matrix() * b.adjoint();
    let covariance_side = crate::capacity::logdet2_hermitian_pd(&m, "covariance-side surrogate")?;

    let obj = ThetaObjective::new(cfg, q, theta, s)?;
    let phase_side = -obj.value(theta.vector())?;
    Ok((covariance_side, phase_side))
}

/// Runs alternating optimization for one angle realization (steering set).
pub fn alternating_optimization(
    cfg: &SystemConfig,
    s: &SteeringSet,
    opts: &AoOptions,
) -> Result<AoResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.theta_seed);
    let mut theta = ReflectionState::random(cfg.n_r(), &mut rng);
    let mut q = TransmitCovariance::equal_power(cfg);

    let c_jen2_initial = c_jen2(cfg, &eigen_triplet(&q, &theta, s)?)?.value;
    let mut current = c_jen2_initial;
    let mut iterations = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_outer {
        let (surrogate_q, water_level) = if opts.run_waterfill {
            let wf = waterfill(cfg, &theta, s)?;
            q = wf.q;
            (wf.surrogate, wf.water_level)
        } else {
            (f64::NAN, f64::NAN)
        };

        let (surrogate_theta, rcg_iterations) = if opts.run_rcg {
            let out = optimize_theta(cfg, &q, &theta, s, &opts.rcg)?;
            theta = out.theta;
            (out.surrogate, out.iterations)
        } else {
            (f64::NAN, 0)
        };

        let value = c_jen2(cfg, &eigen_triplet(&q, &theta, s)?)?.value;
        let (bound_q, bound_theta) = surrogate_bounds(cfg, &q, &theta, s)?;
        iterations.push(AoIteration {
            c_jen2: value,
            surrogate_q,
            surrogate_theta,
            bound_q,
            bound_theta,
            water_level,
            rcg_iterations,
        });

        let improvement = (value - current) / current.abs().max(f64::MIN_POSITIVE);
        current = value;
        if !opts.run_waterfill && !opts.run_rcg {
            converged = true;
            break;
        }
        if improvement < opts.outer_tol {
            converged = true;
            break;
        }
    }

    Ok(AoResult { q, theta, iterations, c_jen2_initial, c_jen2_final: current, converged })
}

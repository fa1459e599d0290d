//! Sparse multipath channel model for an RIS-assisted mmWave link.
//!
//! The base station (ULA, `n_b` antennas) reaches the user (ULA, `n_u`
//! antennas) only through a reflecting surface (UPA, `n_r_y × n_r_z`
//! elements); the direct path is blocked. Each hop is a sparse sum of planar
//! paths with complex normal gains:
//!
//! ```text
//! G = √(N_r·N_b/P) · Σ_i g_i · a_r(φ¹_i, φ²_i) a_b(φ_b,i)ᴴ   (BS → RIS)
//! T = √(N_r·N_u/L) · Σ_i t_i · a_u(ψ_u,i) a_r(ψ¹_i, ψ²_i)ᴴ   (RIS → user)
//! H = T · diag(θ) · G                                        (cascade)
//! ```
//!
//! Steering vectors are unit-norm; array spacing is half wavelength unless
//! configured otherwise. Sampling uses counter-based substreams so that trial
//! `k` of master seed `s` is reproducible regardless of execution order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

/// Static system geometry and link budget. `power_budget` is the transmit
/// power constraint `tr(Q) <= P_T`; `noise_var` is the per-antenna noise
/// power, so the transmit SNR in dB is `10·log10(P_T/σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Base-station ULA size N_b.
    pub n_b: usize,
    /// RIS panel rows (y axis).
    pub n_r_y: usize,
    /// RIS panel columns (z axis).
    pub n_r_z: usize,
    /// User ULA size N_u.
    pub n_u: usize,
    /// Paths P on the BS→RIS hop.
    pub p_paths: usize,
    /// Paths L on the RIS→user hop.
    pub l_paths: usize,
    /// Transmit power budget P_T.
    pub power_budget: f64,
    /// Noise variance σ².
    pub noise_var: f64,
    /// Element spacing in wavelengths d/λ.
    pub spacing_ratio: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_b: 16,
            n_r_y: 8,
            n_r_z: 8,
            n_u: 16,
            p_paths: 6,
            l_paths: 8,
            power_budget: 1.0,
            noise_var: 1.0,
            spacing_ratio: 0.5,
        }
    }
}

impl SystemConfig {
    /// Total number of reflecting elements N_r.
    pub fn n_r(&self) -> usize {
        self.n_r_y * self.n_r_z
    }

    /// Transmit SNR `P_T/σ²` in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power_budget / self.noise_var).log10()
    }

    /// Returns a copy whose power budget realizes the given transmit SNR at
    /// the current noise variance.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        let mut cfg = self.clone();
        cfg.power_budget = cfg.noise_var * 10f64.powf(snr_db / 10.0);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive_dim = |name: &'static str, v: usize| -> Result<()> {
            if v == 0 {
                Err(Error::domain("SystemConfig", format!("{name} must be >= 1")))
            } else {
                Ok(())
            }
        };
        positive_dim("n_b", self.n_b)?;
        positive_dim("n_r_y", self.n_r_y)?;
        positive_dim("n_r_z", self.n_r_z)?;
        positive_dim("n_u", self.n_u)?;
        positive_dim("p_paths", self.p_paths)?;
        positive_dim("l_paths", self.l_paths)?;
        let positive_real = |name: &'static str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain("SystemConfig", format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive_real("power_budget", self.power_budget)?;
        positive_real("noise_var", self.noise_var)?;
        positive_real("spacing_ratio", self.spacing_ratio)
    }
}

// ---------------------------------------------------------------------------
// steering vectors
// ---------------------------------------------------------------------------

/// Unit-norm ULA response: element `k` is
/// `exp(j·2π·(d/λ)·k·sin φ)/√n` for `k = 0..n`.
pub fn ula_response(n: usize, spacing_ratio: f64, azimuth: f64) -> DVector<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * spacing_ratio * azimuth.sin();
    DVector::from_fn(n, |k, _| Complex64::from_polar(norm, step * k as f64))
}

/// Unit-norm UPA response on an `n_y × n_z` panel, flattened row-major with
/// the y index outermost: entry `m_y·n_z + m_z` is
/// `exp(j·2π·(d/λ)·(m_y·sin φ¹·sin φ² + m_z·cos φ²))/√(n_y·n_z)`,
/// where φ¹ is azimuth and φ² elevation.
pub fn upa_response(
    n_y: usize,
    n_z: usize,
    spacing_ratio: f64,
    azimuth: f64,
    elevation: f64,
) -> DVector<Complex64> {
    let norm = 1.0 / ((n_y * n_z) as f64).sqrt();
    let step_y = 2.0 * PI * spacing_ratio * azimuth.sin() * elevation.sin();
    let step_z = 2.0 * PI * spacing_ratio * elevation.cos();
    DVector::from_fn(n_y * n_z, |idx, _| {
        let m_y = (idx / n_z) as f64;
        let m_z = (idx % n_z) as f64;
        Complex64::from_polar(norm, step_y * m_y + step_z * m_z)
    })
}

// ---------------------------------------------------------------------------
// realizations
// ---------------------------------------------------------------------------

/// Angles and path gains of one channel draw. Angle conventions follow the
/// sampler: BS departure and user arrival azimuths live on `[-π, π)`, RIS
/// azimuths on `[-π/2, π/2]`, RIS elevations on `[0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// φ_b,i — BS angles of departure, length P.
    pub bs_aod: Vec<f64>,
    /// φ¹_r,i — RIS arrival azimuths, length P.
    pub ris_in_azimuth: Vec<f64>,
    /// φ²_r,i — RIS arrival elevations, length P.
    pub ris_in_elevation: Vec<f64>,
    /// ψ_u,i — user angles of arrival, length L.
    pub user_aoa: Vec<f64>,
    /// ψ¹_r,i — RIS departure azimuths, length L.
    pub ris_out_azimuth: Vec<f64>,
    /// ψ²_r,i — RIS departure elevations, length L.
    pub ris_out_elevation: Vec<f64>,
    /// g_i ~ CN(0,1) — BS→RIS path gains, length P.
    pub gains_g: Vec<Complex64>,
    /// t_i ~ CN(0,1) — RIS→user path gains, length L.
    pub gains_t: Vec<Complex64>,
}

impl ChannelRealization {
    /// Same angles, freshly drawn gains; used when a deterministic
    /// configuration is evaluated against new fading states.
    pub fn with_fresh_gains(&self, rng: &mut impl Rng) -> ChannelRealization {
        let mut r = self.clone();
        r.gains_g = draw_cn_vector(r.gains_g.len(), rng);
        r.gains_t = draw_cn_vector(r.gains_t.len(), rng);
        r
    }
}

/// Independent substream for trial `trial` of master seed `master_seed`.
/// ChaCha streams guarantee non-overlap, so trials can be evaluated in any
/// order (or in parallel) without changing what each one draws.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn draw_cn_scalar(rng: &mut impl Rng) -> Complex64 {
    // CN(0,1): real and imaginary parts are independent N(0, 1/2).
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn draw_cn_vector(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..n).map(|_| draw_cn_scalar(rng)).collect()
}

/// Draws one realization. The draw order below is part of the reproducibility
/// contract and must not be reordered: BS side first (aod, RIS azimuth, RIS
/// elevation, gains g), then user side (aoa, RIS azimuth, RIS elevation,
/// gains t).
pub fn sample_realization(cfg: &SystemConfig, rng: &mut impl Rng) -> ChannelRealization {
    let p = cfg.p_paths;
    let l = cfg.l_paths;
    let bs_aod = (0..p).map(|_| rng.random_range(-PI..PI)).collect();
    let ris_in_azimuth = (0..p).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
    let ris_in_elevation = (0..p).map(|_| rng.random_range(0.0..PI)).collect();
    let gains_g = draw_cn_vector(p, rng);
    let user_aoa = (0..l).map(|_| rng.random_range(-PI..PI)).collect();
    let ris_out_azimuth = (0..l).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
    let ris_out_elevation = (0..l).map(|_| rng.random_range(0.0..PI)).collect();
    let gains_t = draw_cn_vector(l, rng);
    ChannelRealization {
        bs_aod,
        ris_in_azimuth,
        ris_in_elevation,
        user_aoa,
        ris_out_azimuth,
        ris_out_elevation,
        gains_g,
        gains_t,
    }
}

// ---------------------------------------------------------------------------
// steering sets and assembly
// ---------------------------------------------------------------------------

/// Steering matrices of one realization. Columns are unit-norm responses;
/// tests may construct this directly (e.g. from DFT columns) to realize
/// orthogonal steering exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringSet {
    /// A_b ∈ C^{N_b×P} — BS departure responses.
    pub a_b: DMatrix<Complex64>,
    /// A_u ∈ C^{N_u×L} — user arrival responses.
    pub a_u: DMatrix<Complex64>,
    /// A_rp ∈ C^{N_r×P} — RIS arrival responses (BS side).
    pub a_rp: DMatrix<Complex64>,
    /// A_rl ∈ C^{N_r×L} — RIS departure responses (user side).
    pub a_rl: DMatrix<Complex64>,
}

impl SteeringSet {
    /// Builds all four steering matrices from a realization's angles.
    pub fn from_realization(r: &ChannelRealization, cfg: &SystemConfig) -> SteeringSet {
        let col = |v: DVector<Complex64>| v;
        let a_b = DMatrix::from_columns(
            &r.bs_aod.iter().map(|&az| col(ula_response(cfg.n_b, cfg.spacing_ratio, az))).collect::<Vec<_>>(),
        );
        let a_u = DMatrix::from_columns(
            &r.user_aoa.iter().map(|&az| col(ula_response(cfg.n_u, cfg.spacing_ratio, az))).collect::<Vec<_>>(),
        );
        let a_rp = DMatrix::from_columns(
            &r.ris_in_azimuth
                .iter()
                .zip(&r.ris_in_elevation)
                .map(|(&az, &el)| col(upa_response(cfg.n_r_y, cfg.n_r_z, cfg.spacing_ratio, az, el)))
                .collect::<Vec<_>>(),
        );
        let a_rl = DMatrix::from_columns(
            &r.ris_out_azimuth
                .iter()
                .zip(&r.ris_out_elevation)
                .map(|(&az, &el)| col(upa_response(cfg.n_r_y, cfg.n_r_z, cfg.spacing_ratio, az, el)))
                .collect::<Vec<_>>(),
        );
        SteeringSet { a_b, a_u, a_rp, a_rl }
    }

    /// Checks that every column is unit-norm (within 1e-12) and that the four
    /// matrices are mutually consistent in row dimension.
    pub fn validate(&self) -> Result<()> {
        if self.a_rp.nrows() != self.a_rl.nrows() {
            return Err(Error::Dimension {
                op: "SteeringSet::validate",
                operand: "a_rl",
                got: format!("{} rows", self.a_rl.nrows()),
                want: format!("{} rows (same panel as a_rp)", self.a_rp.nrows()),
            });
        }
        for (name, m) in [("a_b", &self.a_b), ("a_u", &self.a_u), ("a_rp", &self.a_rp), ("a_rl", &self.a_rl)] {
            for j in 0..m.ncols() {
                let norm = m.column(j).norm();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(
                        "SteeringSet::validate",
                        format!("column {j} of {name} has norm {norm}, expected 1"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// BS→RIS channel `G = √(N_r·N_b/P) · A_rp · diag(g) · A_bᴴ ∈ C^{N_r×N_b}`.
pub fn assemble_g(r: &ChannelRealization, s: &SteeringSet, cfg: &SystemConfig) -> Result<DMatrix<Complex64>> {
    let p = cfg.p_paths;
    if r.gains_g.len() != p {
        return Err(Error::Dimension {
            op: "assemble_g",
            operand: "gains_g",
            got: format!("{}", r.gains_g.len()),
            want: format!("{p}"),
        });
    }
    if s.a_rp.ncols() != p || s.a_b.ncols() != p {
        return Err(Error::Dimension {
            op: "assemble_g",
            operand: "steering",
            got: format!("a_rp: {} cols, a_b: {} cols", s.a_rp.ncols(), s.a_b.ncols()),
            want: format!("{p} cols each"),
        });
    }
    let scale = ((cfg.n_r() * cfg.n_b) as f64 / p as f64).sqrt();
    let mut weighted = s.a_rp.clone();
    for (j, &g) in r.gains_g.iter().enumerate() {
        weighted.column_mut(j).apply(|v| *v *= g * scale);
    }
    Ok(weighted * s.a_b.adjoint())
}

/// RIS→user channel `T = √(N_r·N_u/L) · A_u · diag(t) · A_rlᴴ ∈ C^{N_u×N_r}`.
pub fn assemble_t(r: &ChannelRealization, s: &SteeringSet, cfg: &SystemConfig) -> Result<DMatrix<Complex64>> {
    let l = cfg.l_paths;
    if r.gains_t.len() != l {
        return Err(Error::Dimension {
            op: "assemble_t",
            operand: "gains_t",
            got: format!("{}", r.gains_t.len()),
            want: format!("{l}"),
        });
    }
    if s.a_u.ncols() != l || s.a_rl.ncols() != l {
        return Err(Error::Dimension {
            op: "assemble_t",
            operand: "steering",
            got: format!("a_u: {} cols, a_rl: {} cols", s.a_u.ncols(), s.a_rl.ncols()),
            want: format!("{l} cols each"),
        });
    }
    let scale = ((cfg.n_r() * cfg.n_u) as f64 / l as f64).sqrt();
    let mut weighted = s.a_u.clone();
    for (j, &t) in r.gains_t.iter().enumerate() {
        weighted.column_mut(j).apply(|v| *v *= t * scale);
    }
    Ok(weighted * s.a_rl.adjoint())
}

/// Cascaded channel `H = T · diag(θ) · G ∈ C^{N_u×N_b}`.
pub fn cascade(
    t: &DMatrix<Complex64>,
    theta: &[Complex64],
    g: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n_r = theta.len();
    if t.ncols() != n_r {
        return Err(Error::Dimension {
            op: "cascade",
            operand: "t",
            got: format!("{}x{}", t.nrows(), t.ncols()),
            want: format!("{} columns to match theta", n_r),
        });
    }
    if g.nrows() != n_r {
        return Err(Error::Dimension {
            op: "cascade",
            operand: "g",
            got: format!("{}x{}", g.nrows(), g.ncols()),
            want: format!("{} rows to match theta", n_r),
        });
    }
    let mut reflected = g.clone();
    for (k, &phase) in theta.iter().enumerate() {
        reflected.row_mut(k).apply(|v| *v *= phase);
    }
    Ok(t * reflected)
}

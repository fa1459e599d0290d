//! Ergodic capacity of an RIS-assisted mmWave MIMO link: simulation,
//! closed-form approximations, and joint covariance/phase optimization.
//!
//! The link is BS → RIS → user under a sparse multipath (Saleh-Valenzuela)
//! model: `H = T·diag(θ)·G`, where `G` and `T` are sums of `P` and `L`
//! rank-one path terms and `θ` holds the unit-modulus reflection
//! coefficients. The crate provides:
//!
//! - [`channel`]: steering vectors (ULA at the terminals, UPA at the
//!   surface), seeded realization sampling, and channel assembly.
//! - [`capacity`]: the exact Monte-Carlo capacity and four closed-form or
//!   quadrature approximations built on one eigenvalue decoupling.
//! - [`optimizer`]: water-filling for the transmit covariance, Riemannian
//!   conjugate gradient on the phase torus, and the alternating loop that
//!   joins them under statistical (angle-only) channel knowledge.
//! - [`experiment`]: JSON-configurable sweep/optimization runs producing
//!   deterministic CSV or JSON tables; the `riscap` binary is a thin CLI
//!   over this module.
//! - [`special`] / [`quadrature`]: the exponential integral `E1` and
//!   Gauss-Laguerre rules backing the quadrature estimator.
//!
//! Results are reproducible by construction: every realization derives from
//! `(master_seed, trial_index)` through a counter-mode generator, so tables
//! are byte-identical across thread counts and across runs.
//!
//! # Example
//!
//! Estimate capacity at the reference operating point and improve it by
//! optimizing the reflection phases and transmit covariance:
//!
//! ```
//! use riscap::capacity::{exact_capacity_mc, ReflectionState, TransmitCovariance};
//! use riscap::channel::{sample_realization, trial_rng, SteeringSet, SystemConfig};
//! use riscap::optimizer::{alternating_optimization, AoOptions};
//!
//! let cfg = SystemConfig {
//!     n_b: 6, n_r_y: 4, n_r_z: 2, n_u: 4,
//!     p_paths: 2, l_paths: 3, power_budget: 10.0,
//!     ..SystemConfig::default()
//! };
//!
//! // Unoptimized reference: equal power, mirror-like surface.
//! let q0 = TransmitCovariance::equal_power(&cfg);
//! let theta0 = ReflectionState::identity(cfg.n_r());
//! let baseline = exact_capacity_mc(&cfg, &q0, &theta0, 50, 42)?;
//!
//! // Joint optimization against one realization's angle geometry.
//! let r = sample_realization(&cfg, &mut trial_rng(42, 0));
//! let s = SteeringSet::from_realization(&r, &cfg);
//! let out = alternating_optimization(&cfg, &s, &AoOptions::default())?;
//! assert!(out.c_jen2_final >= out.c_jen2_initial);
//! assert!(baseline.value > 0.0);
//! # Ok::<(), riscap::Error>(())
//! ```

pub mod capacity;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod quadrature;
pub mod special;
mod stats;

pub use error::{Error, Result};

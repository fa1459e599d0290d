//! Cached Gauss-Laguerre rules for the semi-infinite capacity integrals.
//!
//! The approximate-capacity integral `∫_0^∞ e^{-z} g(z) dz` is evaluated with
//! Gauss-Laguerre quadrature under automatic node doubling: callers walk the
//! ladder 32 → 64 → 128 and stop once doubling changes the result by less
//! than a relative tolerance. Rules are built once (Golub-Welsch, via the
//! `gauss-quad` crate) and cached for the lifetime of the process, since the
//! Monte-Carlo drivers request them per realization.

use std::sync::OnceLock;

use gauss_quad::laguerre::GaussLaguerre;

use crate::error::{Error, Result};

/// Node counts tried in order by the adaptive capacity quadrature.
pub const NODE_LADDER: [usize; 3] = [32, 64, 128];

/// `(node, weight)` pairs of the `n`-point Gauss-Laguerre rule (weight
/// function `e^{-z}` on `[0, ∞)`), nodes ascending. Only the ladder sizes are
/// available; anything else is a domain error.
pub fn laguerre_rule(n: usize) -> Result<&'static [(f64, f64)]> {
    static RULES: [OnceLock<Vec<(f64, f64)>>; NODE_LADDER.len()] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = NODE_LADDER
        .iter()
        .position(|&m| m == n)
        .ok_or_else(|| Error::domain("laguerre_rule", format!("unsupported node count {n}, ladder is {NODE_LADDER:?}")))?;
    Ok(RULES[slot].get_or_init(|| build_rule(n)))
}

fn build_rule(n: usize) -> Vec<(f64, f64)> {
    // alpha = 0 is the plain e^{-z} weight; construction cannot fail for the
    // ladder sizes.
    let rule = GaussLaguerre::new(n, 0.0).expect("Gauss-Laguerre construction");
    let mut pairs: Vec<(f64, f64)> = rule.into_node_weight_pairs();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

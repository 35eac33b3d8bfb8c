//! Composition with the inner function `z^N`: `u(z) ↦ u(z^N)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, SimulationConfig};
use crate::error::{Error, Result};
use crate::hardy::HardyCoefficients;

/// Dilated truncation `(M - 1)N + 1`: exactly the modes a composed state
/// can occupy.
pub fn dilated_trunc(trunc: usize, n: usize) -> usize {
    (trunc - 1) * n + 1
}

/// Moves `û(k)` to index `kN`.
pub fn compose_zn(u: &HardyCoefficients, n: usize) -> Result<HardyCoefficients> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let mut out = HardyCoefficients::zeros(dilated_trunc(u.trunc(), n));
    for (k, &c) in u.coeffs().iter().enumerate() {
        out.coeffs_mut()[k * n] = c;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowCommutation {
    pub n: usize,
    pub times: Vec<f64>,
    /// `‖compose(u(t)) - w(t)‖` per snapshot.
    pub gaps: Vec<f64>,
    pub max_gap: f64,
}

/// Integrates from `u0` at `cfg.trunc` and from `u0(z^N)` at the dilated
/// truncation, then compares snapshot by snapshot.
pub fn verify_flow_commutation(
    u0: &HardyCoefficients,
    n: usize,
    cfg: &SimulationConfig,
) -> Result<FlowCommutation> {
    let base = integrate(u0, cfg)?;
    let start = compose_zn(&u0.resized(cfg.trunc), n)?;
    let wide = SimulationConfig { trunc: dilated_trunc(cfg.trunc, n), ..cfg.clone() };
    let lifted = integrate(&start, &wide)?;
    let mut gaps = Vec::with_capacity(base.len());
    for (u, w) in base.states.iter().zip(&lifted.states) {
        gaps.push(compose_zn(u, n)?.distance(w));
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(FlowCommutation { n, times: base.times, gaps, max_gap })
}

//! A three-parameter family of equilibria inside `V(3)`:
//!
//! `u(z) = λe^{ia}(-(2√3/3) sin θ + C e^{ib} z / (1 - P e^{ib} z))`,
//!
//! `C = (1+2cos2θ)²/(3S)`, `P = 4(2+cos2θ) sin θ/(√3 S)`,
//! `S = √(9 + 2cos2θ - 2cos4θ)`, `θ ∈ [0, π/3)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::rhs;
use crate::error::{Error, Result};
use crate::hardy::{conserved, multiply, projected_abs2, HardyCoefficients, C64};
use crate::v3::{closed_form_j, rhs_with_gap, tangent_norm_with_gap, V3State, V3Tangent};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyV3Params {
    pub lambda: f64,
    pub a: f64,
    pub b_angle: f64,
    pub theta: f64,
}

impl SteadyV3Params {
    pub fn new(lambda: f64, a: f64, b_angle: f64, theta: f64) -> Result<Self> {
        let p = Self { lambda, a, b_angle, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0 && self.theta < PI / 3.0) {
            return Err(Error::InvalidParameter(format!("theta = {} is outside [0, π/3)", self.theta)));
        }
        if ![self.lambda, self.a, self.b_angle].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("lambda, a and b must be finite".into()));
        }
        Ok(())
    }

    /// `(β, C, P)` as printed, plus `1 - P²` from the identity
    /// `1 - P² = (1 + 2cos2θ)³/(3S²)`, which keeps its digits as `θ → π/3`.
    pub fn constants(&self) -> SteadyConstants {
        let t = self.theta;
        let c2 = (2.0 * t).cos();
        let e = 1.0 + 2.0 * c2;
        let s2 = 9.0 + 2.0 * c2 - 2.0 * (4.0 * t).cos();
        let s = s2.sqrt();
        SteadyConstants {
            beta: -(2.0 * 3f64.sqrt() / 3.0) * t.sin(),
            c: e * e / (3.0 * s),
            p: 4.0 * (2.0 + c2) * t.sin() / (3f64.sqrt() * s),
            gap: e.powi(3) / (3.0 * s2),
        }
    }

    /// The `(b, c, p)` triple of `u = b + cz/(1 - pz)`.
    pub fn state(&self) -> V3State {
        let k = self.constants();
        let front = C64::from_polar(self.lambda, self.a);
        let rot = C64::from_polar(1.0, self.b_angle);
        V3State { b: front * k.beta, c: front * rot * k.c, p: rot * k.p }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyConstants {
    pub beta: f64,
    pub c: f64,
    pub p: f64,
    /// `1 - P²`.
    pub gap: f64,
}

pub fn build_steady(params: &SteadyV3Params, trunc: usize) -> Result<HardyCoefficients> {
    params.validate()?;
    let k = params.constants();
    if k.p.abs() >= 1.0 {
        return Err(Error::PoleOutside { modulus: k.p.abs() });
    }
    Ok(params.state().to_hardy(trunc))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyResiduals {
    pub theta: f64,
    pub p_abs: f64,
    pub j_abs: f64,
    pub rhs_norm: f64,
}

/// `|J|` and `‖∂ₜu‖` evaluated in closed form on `V(3)`, with no
/// truncation.
pub fn steady_residuals(params: &SteadyV3Params) -> Result<SteadyResiduals> {
    params.validate()?;
    let k = params.constants();
    if k.p.abs() >= 1.0 {
        return Err(Error::PoleOutside { modulus: k.p.abs() });
    }
    let s = params.state();
    let j = closed_form_j(s.b, s.c, s.p, k.gap);
    let [db, dc, dp] = rhs_with_gap(s.b, s.c, s.p, k.gap);
    let rhs_norm = tangent_norm_with_gap(&s, &V3Tangent { b: db, c: dc, p: dp }, k.gap);
    Ok(SteadyResiduals { theta: params.theta, p_abs: k.p.abs(), j_abs: j.norm(), rhs_norm })
}

/// Both sides of the steadiness test on a truncated state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyCheck {
    pub j_abs: f64,
    pub rhs_norm: f64,
    /// `2‖Π(|u|²)‖ + ‖u²‖`, the factor bounding `‖rhs‖` by `|J|`.
    pub scale: f64,
    pub by_j: bool,
    pub by_rhs: bool,
}

impl SteadyCheck {
    pub fn agree(&self) -> bool {
        self.by_j == self.by_rhs
    }
}

pub fn steady_check(u: &HardyCoefficients, tol: f64) -> SteadyCheck {
    let j_abs = conserved(u).j.norm();
    let rhs_norm = rhs(u).norm();
    let scale = 2.0 * projected_abs2(u).norm() + multiply(u, u).norm();
    SteadyCheck {
        j_abs,
        rhs_norm,
        scale,
        by_j: j_abs < tol,
        by_rhs: rhs_norm <= tol * scale,
    }
}

/// `|J(u)| < tol`. See [`steady_check`] for the agreement with `‖rhs‖`.
pub fn is_steady(u: &HardyCoefficients, tol: f64) -> bool {
    steady_check(u, tol).by_j
}

/// The grid `θ_k = k·(π/3)/n`, `k = 0..n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * (PI / 3.0) / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_zero_is_monomial() {
        let p = SteadyV3Params::new(1.5, 0.3, 0.4, 0.0).unwrap();
        let k = p.constants();
        assert_eq!(k.beta, 0.0);
        assert!((k.c - 1.0).abs() < 1e-15);
        assert_eq!(k.p, 0.0);
        let u = build_steady(&p, 8).unwrap();
        assert_eq!(u.get(0), C64::new(0.0, 0.0));
        assert!((u.get(1) - C64::from_polar(1.5, 0.7)).norm() < 1e-15);
        assert!((2..8).all(|k| u.get(k).norm() == 0.0));
        assert!(is_steady(&u, 1e-15));
        assert_eq!(rhs(&u).norm(), 0.0);
    }

    #[test]
    fn printed_example_constants() {
        let k = SteadyV3Params::new(1.0, 0.0, 0.0, PI / 6.0).unwrap().constants();
        assert!((k.beta + 3f64.sqrt() / 3.0).abs() < 1e-15);
        assert!((k.c - 4.0 / (3.0 * 11f64.sqrt())).abs() < 1e-15);
        assert!((k.p - 5.0 / 33f64.sqrt()).abs() < 1e-15);
        assert!((k.gap - 8.0 / 33.0).abs() < 1e-15);
    }

    #[test]
    fn range_checks() {
        assert!(SteadyV3Params::new(1.0, 0.0, 0.0, PI / 3.0).is_err());
        assert!(SteadyV3Params::new(1.0, 0.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn simple_cases() {
        let g = HardyCoefficients::geometric(C64::new(1.0, 0.0), C64::new(0.5, 0.0), 128);
        let chk = steady_check(&g, 1e-10);
        assert!(!chk.by_j && !chk.by_rhs);
        assert!((chk.j_abs - 16.0 / 9.0).abs() < 1e-12);
        assert!(is_steady(&HardyCoefficients::zeros(4), 1e-14));
    }
}

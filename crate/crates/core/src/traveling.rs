//! Traveling waves `v(t,z) = e^{-iωt} v₀(z e^{-ict})`, the profile equation
//! `ϖu + Du = 2Π(|u|²) + u²`, and standing waves built from arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{
    apply_d, conserved, convolve_into, correlate_into, functional_j, HardyCoefficients, C64, ZERO,
};

/// Tail size below which a geometric profile counts as fully resolved.
pub const PROFILE_TAIL_LIMIT: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    I,
    II,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::I => "I",
            Family::II => "II",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(Family::I),
            "II" | "ii" | "2" => Ok(Family::II),
            _ => Err(Error::InvalidParameter(format!("unknown family {s:?}"))),
        }
    }
}

/// A member of one of the two explicit families. `omega` and `c` are derived
/// from `(family, lambda, p, n)` on construction and on deserialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecWire")]
pub struct TravelingWaveSpec {
    pub family: Family,
    pub lambda: C64,
    pub p: C64,
    pub n: usize,
    pub omega: f64,
    pub c: f64,
}

#[derive(Deserialize)]
struct SpecWire {
    family: Family,
    lambda: C64,
    p: C64,
    n: usize,
}

impl TryFrom<SpecWire> for TravelingWaveSpec {
    type Error = Error;
    fn try_from(w: SpecWire) -> Result<Self> {
        Self::new(w.family, w.lambda, w.p, w.n)
    }
}

impl TravelingWaveSpec {
    pub fn new(family: Family, lambda: C64, p: C64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let q = p.norm_sqr();
        if !(q < 1.0) {
            return Err(Error::InvalidParameter(format!("|p| = {} is not below 1", p.norm())));
        }
        if lambda.norm() == 0.0 {
            return Err(Error::InvalidParameter("lambda must be nonzero".into()));
        }
        if family == Family::II && q == 0.0 {
            return Err(Error::InvalidParameter("family II needs p != 0".into()));
        }
        let l4 = lambda.norm_sqr().powi(2);
        let nf = n as f64;
        let g = 1.0 - q;
        let (omega, c) = match family {
            Family::I => (l4 * (3.0 - q) / g.powi(3), l4 / (nf * g * g)),
            Family::II => {
                let q2 = q * q;
                (
                    l4 * q2 * (1.0 + 5.0 * q) * (3.0 + 5.0 * q) / g.powi(4),
                    -l4 * q2 * (3.0 + 5.0 * q) / (nf * g.powi(3)),
                )
            }
        };
        Ok(Self { family, lambda, p, n, omega, c })
    }

    /// Smallest truncation meeting the tail requirement of [`build_profile`].
    pub fn min_trunc(&self) -> usize {
        let r = self.p.norm();
        if r == 0.0 {
            return 1;
        }
        let k = (PROFILE_TAIL_LIMIT.ln() / r.ln()).floor() as usize + 1;
        k * self.n
    }
}

/// Coefficients of `v₀`. Family I is `λ/(1 - p z^N)`; family II adds the
/// constant `-λ(1+|p|²)/(1-|p|²)`.
pub fn build_profile(spec: &TravelingWaveSpec, trunc: usize) -> Result<HardyCoefficients> {
    if trunc == 0 {
        return Err(Error::InvalidParameter("trunc must be at least 1".into()));
    }
    let tail = spec.p.norm().powf(trunc as f64 / spec.n as f64);
    if tail >= PROFILE_TAIL_LIMIT {
        return Err(Error::TruncTooSmall { trunc, tail, limit: PROFILE_TAIL_LIMIT });
    }
    let mut u = HardyCoefficients::zeros(trunc);
    let c = u.coeffs_mut();
    let mut acc = spec.lambda;
    for k in (0..trunc).step_by(spec.n) {
        c[k] = acc;
        acc *= spec.p;
    }
    if spec.family == Family::II {
        let q = spec.p.norm_sqr();
        c[0] -= spec.lambda * ((1.0 + q) / (1.0 - q));
    }
    Ok(u)
}

/// `2Π(|u|²) + u²` truncated to `trunc(u)`.
pub fn quadratic_term(u: &HardyCoefficients) -> HardyCoefficients {
    let n = u.trunc();
    let mut sq = vec![ZERO; n];
    convolve_into(u.coeffs(), u.coeffs(), &mut sq);
    let mut pa = vec![ZERO; n];
    correlate_into(u.coeffs(), u.coeffs(), &mut pa);
    HardyCoefficients::new(pa.iter().zip(&sq).map(|(a, s)| a * 2.0 + s).collect())
}

/// `‖ωv₀ + cDv₀ - 2J Π(|v₀|²) - conj(J) v₀²‖` with `J = J(v₀)`.
pub fn residual_traveling(v0: &HardyCoefficients, omega: f64, c: f64) -> f64 {
    let n = v0.trunc();
    let u = v0.coeffs();
    let mut sq = vec![ZERO; n];
    convolve_into(u, u, &mut sq);
    let mut pa = vec![ZERO; n];
    correlate_into(u, u, &mut pa);
    let j = functional_j(u);
    (0..n)
        .map(|k| {
            let lhs = u[k] * (omega + c * k as f64);
            let rhs = j * pa[k] * 2.0 + j.conj() * sq[k];
            (lhs - rhs).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖ϖu + Du - 2Π(|u|²) - u²‖`.
pub fn residual_profile(u: &HardyCoefficients, varpi: f64) -> f64 {
    let du = apply_d(u);
    let quad = quadratic_term(u);
    (0..u.trunc())
        .map(|k| (u.get(k) * varpi + du.get(k) - quad.get(k)).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `û(k) e^{-i(ω+ck)t}`: the exact orbit of a traveling wave.
pub fn exact_orbit(v0: &HardyCoefficients, omega: f64, c: f64, t: f64) -> HardyCoefficients {
    HardyCoefficients::from_fn(v0.trunc(), |k| {
        v0.get(k) * C64::from_polar(1.0, -(omega + c * k as f64) * t)
    })
}

/// The normalized profile `N/(1 - α z^N)` with its `ϖ`.
#[derive(Clone, Debug)]
pub struct NPoleProfile {
    pub n: usize,
    pub alpha: C64,
    pub q: f64,
    pub varpi: f64,
    pub u: HardyCoefficients,
}

/// `u = N/(1 - αz^N)`, `Q = N²/(1-|α|²)`, `ϖ = (2Q + N²)/N`.
pub fn n_pole_profile(n: usize, alpha: C64, trunc: usize) -> Result<NPoleProfile> {
    let spec = TravelingWaveSpec::new(Family::I, C64::new(n as f64, 0.0), alpha, n)?;
    let u = build_profile(&spec, trunc)?;
    let nf = n as f64;
    let q = nf * nf / (1.0 - alpha.norm_sqr());
    Ok(NPoleProfile { n, alpha, q, varpi: (2.0 * q + nf * nf) / nf, u })
}

/// The `N` roots of `α`: principal root times the `N`-th roots of unity.
/// Only `α` enters the profile, so the branch choice does not matter.
pub fn pole_points(alpha: C64, n: usize) -> Vec<C64> {
    let base = alpha.powf(1.0 / n as f64);
    (0..n)
        .map(|l| base * C64::from_polar(1.0, 2.0 * PI * l as f64 / n as f64))
        .collect()
}

/// `θ = 2r₋/(1 - 4r₋)` for `r₋ ∈ (0, 1/6)`.
pub fn theta_from_r_minus(r_minus: f64) -> Result<f64> {
    if !(r_minus > 0.0 && r_minus < 1.0 / 6.0) {
        return Err(Error::InvalidParameter(format!("r_minus = {r_minus} is outside (0, 1/6)")));
    }
    Ok(2.0 * r_minus / (1.0 - 4.0 * r_minus))
}

/// An arc `[start, end)` of the circle, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    /// Normalized measure `(end - start)/2π`.
    pub fn measure(&self) -> f64 {
        (self.end - self.start) / (2.0 * PI)
    }

    /// Fourier coefficient `k ≥ 0` of the indicator.
    pub fn coefficient(&self, k: usize) -> C64 {
        if k == 0 {
            return C64::new(self.measure(), 0.0);
        }
        let kf = k as f64;
        let num = C64::from_polar(1.0, -kf * self.start) - C64::from_polar(1.0, -kf * self.end);
        num / C64::new(0.0, 2.0 * PI * kf)
    }
}

/// `Π(𝟙_B)/(1 + 2θ)` where `B` is a union of disjoint arcs of total
/// normalized measure `θ ∈ (0, 1)`.
pub fn standing_wave_arc(theta: f64, arcs: &[Arc], trunc: usize) -> Result<HardyCoefficients> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} is outside (0, 1)")));
    }
    if trunc == 0 || arcs.is_empty() {
        return Err(Error::InvalidParameter("need at least one arc and one mode".into()));
    }
    let two_pi = 2.0 * PI;
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(arcs.len());
    for a in arcs {
        let len = a.end - a.start;
        if !(len > 0.0 && len <= two_pi) || !a.start.is_finite() {
            return Err(Error::InvalidParameter(format!("bad arc [{}, {})", a.start, a.end)));
        }
        spans.push((a.start.rem_euclid(two_pi), len));
    }
    spans.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in spans.windows(2) {
        if w[0].0 + w[0].1 > w[1].0 {
            return Err(Error::InvalidParameter("arcs overlap".into()));
        }
    }
    let (first, last) = (spans[0], spans[spans.len() - 1]);
    if spans.len() > 1 && last.0 + last.1 > first.0 + two_pi {
        return Err(Error::InvalidParameter("arcs overlap".into()));
    }
    let actual: f64 = arcs.iter().map(Arc::measure).sum();
    if (actual - theta).abs() > 1e-12 {
        return Err(Error::MeasureMismatch { expected: theta, actual });
    }
    let scale = 1.0 / (1.0 + 2.0 * theta);
    Ok(HardyCoefficients::from_fn(trunc, |k| {
        arcs.iter().map(|a| a.coefficient(k)).sum::<C64>() * scale
    }))
}

/// `max_{k < K} |û(k) - [2Π(|u|²) + u²]^(k)|`, evaluated at cost `O(K·M)`.
pub fn verify_standing(u: &HardyCoefficients, modes_checked: usize) -> Result<f64> {
    let m = u.trunc();
    if modes_checked == 0 || modes_checked * 4 > m.max(4) {
        return Err(Error::InvalidParameter(format!(
            "modes_checked = {modes_checked} needs trunc >= {}",
            4 * modes_checked
        )));
    }
    let c = u.coeffs();
    let worst = (0..modes_checked.min(m))
        .map(|k| {
            let pa: C64 = c[k..].iter().zip(c).map(|(a, b)| a * b.conj()).sum();
            let sq: C64 = (0..=k).map(|i| c[i] * c[k - i]).sum();
            (c[k] - pa * 2.0 - sq).norm()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Convenience: `(ϖ N, 2Q + N²)` for a profile with `N = rank K_u`.
pub fn q_equation_sides(u: &HardyCoefficients, varpi: f64, n: usize) -> (f64, f64) {
    let q = conserved(u).q;
    let nf = n as f64;
    (varpi * nf, 2.0 * q + nf * nf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn family_constants() {
        let s = TravelingWaveSpec::new(Family::I, c(1.0, 0.0), c(0.5, 0.0), 1).unwrap();
        assert!((s.omega - 176.0 / 27.0).abs() < 1e-13);
        assert!((s.c - 16.0 / 9.0).abs() < 1e-13);
        let s2 = TravelingWaveSpec::new(Family::II, c(1.0, 0.0), c(0.5, 0.0), 2).unwrap();
        assert!(s2.c < 0.0);
        assert!(TravelingWaveSpec::new(Family::II, c(1.0, 0.0), ZERO, 1).is_err());
        assert!(TravelingWaveSpec::new(Family::I, c(1.0, 0.0), c(1.0, 0.0), 1).is_err());
        assert!(TravelingWaveSpec::new(Family::I, c(1.0, 0.0), c(0.5, 0.0), 0).is_err());
    }

    #[test]
    fn profiles() {
        let s = TravelingWaveSpec::new(Family::I, c(1.0, 0.0), c(0.5, 0.0), 1).unwrap();
        let u = build_profile(&s, 64).unwrap();
        for k in 0..64 {
            assert_eq!(u.get(k), c(0.5f64.powi(k as i32), 0.0));
        }
        let s = TravelingWaveSpec::new(Family::II, c(1.0, 0.0), c(0.5, 0.0), 1).unwrap();
        let u = build_profile(&s, 64).unwrap();
        assert!((u.get(0) - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert_eq!(u.get(3), c(0.125, 0.0));
        let s = TravelingWaveSpec::new(Family::I, c(1.0, 0.0), c(0.5, 0.0), 3).unwrap();
        let u = build_profile(&s, 192).unwrap();
        assert!((0..192).filter(|k| k % 3 != 0).all(|k| u.get(k) == ZERO));
        assert!(matches!(build_profile(&s, 64), Err(Error::TruncTooSmall { .. })));
        assert!(build_profile(&s, s.min_trunc()).is_ok());
    }

    #[test]
    fn constant_solves_with_omega_three() {
        let u = HardyCoefficients::constant(c(1.0, 0.0), 4);
        assert_eq!(residual_traveling(&u, 3.0, 17.0), 0.0);
        assert_eq!(residual_profile(&HardyCoefficients::zeros(5), 2.0), 0.0);
    }

    #[test]
    fn spec_json_recomputes_constants() {
        let j = r#"{"family":"II","lambda":[1.0,0.0],"p":[0.5,0.0],"n":1,"omega":0.0,"c":0.0}"#;
        let s: TravelingWaveSpec = serde_json::from_str(j).unwrap();
        assert!(s.omega > 0.0 && s.c < 0.0);
        let back = serde_json::to_string(&s).unwrap();
        assert!(back.contains("\"family\":\"II\""));
    }

    #[test]
    fn arc_rules() {
        let a = Arc::new(0.0, 0.5 * PI);
        let u = standing_wave_arc(0.25, &[a], 32).unwrap();
        assert!((u.get(0).re - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            standing_wave_arc(0.3, &[a], 32),
            Err(Error::MeasureMismatch { .. })
        ));
        assert!(standing_wave_arc(1.0, &[Arc::new(0.0, 2.0 * PI)], 32).is_err());
        let overlap = [Arc::new(0.0, 1.0), Arc::new(0.5, 1.2)];
        assert!(standing_wave_arc(1.7 / (2.0 * PI), &overlap, 8).is_err());
        assert!((theta_from_r_minus(1.0 / 12.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((theta_from_r_minus(0.1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(theta_from_r_minus(1.0 / 6.0).is_err());
    }

    #[test]
    fn standing_scalar_identity() {
        let u = HardyCoefficients::constant(c(1.0 / 3.0, 0.0), 8);
        assert!(verify_standing(&u, 2).unwrap() < 1e-16);
        assert_eq!(verify_standing(&HardyCoefficients::zeros(8), 2).unwrap(), 0.0);
        assert!(verify_standing(&u, 3).is_err());
    }

    #[test]
    fn roots() {
        let pts = pole_points(c(0.3, 0.0), 2);
        assert!((pts[0] - c(0.3f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((pts[1] + pts[0]).norm() < 1e-15);
    }
}

//! The flow restricted to `u(z) = b + cz/(1 - pz)`, its conserved
//! quantities, the `x = |c|√M` evolution law, and the perturbation
//! experiment around the traveling waves
//! `v_r(z) = -2r/(1-r) + z√r/(1 - z√r)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{HardyCoefficients, C64};
use crate::rk4::rk4_step;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct V3State {
    pub b: C64,
    pub c: C64,
    pub p: C64,
}

/// Time derivative `(ḃ, ċ, ṗ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct V3Tangent {
    pub b: C64,
    pub c: C64,
    pub p: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct V3Derived {
    pub q: f64,
    pub m: f64,
    pub j: C64,
    pub x: f64,
    pub psi: f64,
    pub ecal: f64,
}

impl V3State {
    pub fn new(b: C64, c: C64, p: C64) -> Result<Self> {
        let s = Self { b, c, p };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!("|p| = {} is not below 1", self.p.norm())));
        }
        if self.c.norm() == 0.0 {
            return Err(Error::InvalidParameter("c must be nonzero".into()));
        }
        if (self.c - self.b * self.p).norm() == 0.0 {
            return Err(Error::InvalidParameter("c - bp must be nonzero".into()));
        }
        Ok(())
    }

    /// `v_r`: `b = -2r/(1-r)`, `c = p = √r`.
    pub fn v_r(r: f64) -> Result<Self> {
        Self::perturbed(r, 0.0)
    }

    /// `u₀^γ`: the same as `v_r` with `b` rotated by `e^{iγ}`.
    pub fn perturbed(r: f64, gamma: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParameter(format!("r = {r} is outside (0, 1)")));
        }
        let s = r.sqrt();
        Self::new(
            C64::from_polar(-2.0 * r / (1.0 - r), gamma),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
        )
    }

    pub fn gap(&self) -> f64 {
        1.0 - self.p.norm_sqr()
    }

    pub fn derived(&self) -> V3Derived {
        derived_with_gap(self, self.gap())
    }

    /// `û(0) = b`, `û(k) = c p^{k-1}` for `k ≥ 1`.
    pub fn to_hardy(&self, trunc: usize) -> HardyCoefficients {
        let mut acc = self.c;
        HardyCoefficients::from_fn(trunc, |k| {
            if k == 0 {
                self.b
            } else {
                let out = acc;
                acc *= self.p;
                out
            }
        })
    }

    fn to_array(self) -> [C64; 3] {
        [self.b, self.c, self.p]
    }

    fn from_array(a: &[C64]) -> Self {
        Self { b: a[0], c: a[1], p: a[2] }
    }
}

/// `J = |b|²b + 2b|c|²/g + |c|²c conj(p)/g²` with `g = 1 - |p|²` supplied by
/// the caller, who may know it more accurately than `1 - |p|²` in floating
/// point.
pub fn closed_form_j(b: C64, c: C64, p: C64, gap: f64) -> C64 {
    let c2 = c.norm_sqr();
    b * b.norm_sqr() + b * (2.0 * c2 / gap) + c * p.conj() * (c2 / (gap * gap))
}

pub(crate) fn derived_with_gap(s: &V3State, gap: f64) -> V3Derived {
    let c2 = s.c.norm_sqr();
    let q = s.b.norm_sqr() + c2 / gap;
    let m = c2 / (gap * gap);
    let j = closed_form_j(s.b, s.c, s.p, gap);
    let w = s.b * s.c.conj() * s.p;
    let psi = if (s.b * s.p).norm() == 0.0 { 0.0 } else { w.arg() };
    V3Derived { q, m, j, x: c2 / gap, psi, ecal: j.norm_sqr() }
}

/// Right side of the energy identity
/// `ℰ = (Q+x)²(Q-x) + x²(M-x) + 2x(Q+x)√((Q-x)(M-x)) cos ψ`.
pub fn energy_v3(q: f64, m: f64, x: f64, psi: f64) -> f64 {
    let root = ((q - x) * (m - x)).max(0.0).sqrt();
    (q + x).powi(2) * (q - x) + x * x * (m - x) + 2.0 * x * (q + x) * root * psi.cos()
}

/// Right side of `(dx/dt)² = 4x²(Q+x)²(Q-x)(M-x) - [(Q+x)²(Q-x) + x²(M-x) - ℰ]²`.
pub fn evolx_rhs(q: f64, m: f64, ecal: f64, x: f64) -> f64 {
    let a = (q + x).powi(2) * (q - x) + x * x * (m - x) - ecal;
    4.0 * x * x * (q + x).powi(2) * (q - x) * (m - x) - a * a
}

/// `dx/dt = 2x(Q+x)√((Q-x)(M-x)) sin ψ`.
pub fn dxdt(d: &V3Derived) -> f64 {
    2.0 * d.x * (d.q + d.x) * ((d.q - d.x) * (d.m - d.x)).max(0.0).sqrt() * d.psi.sin()
}

/// Raw right side, no admissibility checks.
fn rhs_unchecked(b: C64, c: C64, p: C64) -> [C64; 3] {
    rhs_with_gap(b, c, p, 1.0 - p.norm_sqr())
}

pub(crate) fn rhs_with_gap(b: C64, c: C64, p: C64, gap: f64) -> [C64; 3] {
    let j = closed_form_j(b, c, p, gap);
    let jc = j.conj();
    let c2 = c.norm_sqr();
    let mi = C64::new(0.0, -1.0);
    let dp = c * jc;
    let dc = b * c * jc * 2.0 + b.conj() * c * j * 2.0 + j * p * (2.0 * c2 / gap);
    let db = b * b * jc + j * (2.0 * b.norm_sqr()) + j * (2.0 * c2 / gap);
    [mi * db, mi * dc, mi * dp]
}

fn check_degenerate(s: &V3State) -> Result<()> {
    if 1.0 - s.p.norm() < 1e-10 {
        return Err(Error::Degenerate(format!("|p| = {} is too close to 1", s.p.norm())));
    }
    if s.c.norm() < 1e-14 {
        return Err(Error::Degenerate(format!("|c| = {:e} is too close to 0", s.c.norm())));
    }
    Ok(())
}

/// `(ḃ, ċ, ṗ)` from `iṗ = c J̄`, `iċ = 2bcJ̄ + 2b̄cJ + 2Jp|c|²/(1-|p|²)`,
/// `iḃ = b²J̄ + 2|b|²J + 2J|c|²/(1-|p|²)`.
pub fn v3_rhs(s: &V3State) -> Result<V3Tangent> {
    check_degenerate(s)?;
    let [b, c, p] = rhs_unchecked(s.b, s.c, s.p);
    Ok(V3Tangent { b, c, p })
}

/// L² norm of `d/dt (b + cz/(1-pz)) = ḃ + ċ z/(1-pz) + c ṗ z²/(1-pz)²`.
pub fn tangent_norm(s: &V3State, d: &V3Tangent) -> f64 {
    tangent_norm_with_gap(s, d, s.gap())
}

pub(crate) fn tangent_norm_with_gap(s: &V3State, d: &V3Tangent, g: f64) -> f64 {
    let q = 1.0 - g;
    let big_b = s.c * d.p;
    let v = d.b.norm_sqr()
        + d.c.norm_sqr() / g
        + 2.0 * (d.c * s.p * big_b.conj()).re / (g * g)
        + big_b.norm_sqr() * (1.0 + q) / g.powi(3);
    v.max(0.0).sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct V3Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<V3State>,
    pub derived: Vec<V3Derived>,
}

impl V3Trajectory {
    /// Largest relative deviation of `Q`, `M` and `ℰ` from their initial values.
    pub fn max_drift(&self) -> f64 {
        let d0 = self.derived[0];
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        self.derived
            .iter()
            .map(|d| rel(d.q, d0.q).max(rel(d.m, d0.m)).max(rel(d.ecal, d0.ecal)))
            .fold(0.0, f64::max)
    }
}

/// Steps with fixed size, calling `visit` after every step. Negative
/// `t_final` runs backward.
fn march(
    s0: &V3State,
    dt: f64,
    t_final: f64,
    mut visit: impl FnMut(usize, f64, &V3State),
) -> Result<()> {
    if !(dt > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter("dt must be positive and t_final finite".into()));
    }
    s0.validate()?;
    let steps = (t_final.abs() / dt).round() as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let mut y = s0.to_array();
    visit(0, 0.0, s0);
    for i in 1..=steps {
        check_degenerate(&V3State::from_array(&y))?;
        rk4_step(&mut y, h, |z| rhs_unchecked(z[0], z[1], z[2]).to_vec());
        let t = i as f64 * h;
        if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        visit(i, t, &V3State::from_array(&y));
    }
    Ok(())
}

/// RK4 on the six real dimensions, every step stored.
pub fn v3_integrate(s0: &V3State, dt: f64, t_final: f64) -> Result<V3Trajectory> {
    let mut traj = V3Trajectory { dt, times: Vec::new(), states: Vec::new(), derived: Vec::new() };
    march(s0, dt, t_final, |_, t, s| {
        traj.times.push(t);
        traj.states.push(*s);
        traj.derived.push(s.derived());
    })?;
    if traj.times.len() > 1 {
        traj.dt = (traj.times[1] - traj.times[0]).abs();
    }
    Ok(traj)
}

/// Max over interior points of `|(dx/dt)² - RHS|`, with `dx/dt` from
/// centered differences and `Q`, `M`, `ℰ` taken at each point.
pub fn evolx_residual(traj: &V3Trajectory) -> f64 {
    let n = traj.derived.len();
    if n < 3 {
        return 0.0;
    }
    let h = traj.times[1] - traj.times[0];
    (1..n - 1)
        .map(|i| {
            let d = &traj.derived[i];
            let v = (traj.derived[i + 1].x - traj.derived[i - 1].x) / (2.0 * h);
            (v * v - evolx_rhs(d.q, d.m, d.ecal, d.x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Closed forms along the `v_r` family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VrConstants {
    pub q: f64,
    pub m: f64,
    pub j: f64,
    pub x: f64,
    pub ecal: f64,
}

pub fn vr_constants(r: f64) -> VrConstants {
    let g = 1.0 - r;
    let j = -r * r * (5.0 * r + 3.0) / g.powi(3);
    VrConstants {
        q: r * (3.0 * r + 1.0) / (g * g),
        m: r / (g * g),
        j,
        x: r / g,
        ecal: j * j,
    }
}

/// `16r⁴(1+r)/(1-r)⁵`.
pub fn leading_coefficient(r: f64) -> f64 {
    16.0 * r.powi(4) * (1.0 + r) / (1.0 - r).powi(5)
}

/// `-64r⁷(1+r)²/(1-r)⁹`.
pub fn second_coefficient(r: f64) -> f64 {
    -64.0 * r.powi(7) * (1.0 + r).powi(2) / (1.0 - r).powi(9)
}

/// `δℰ = 2x(Q+x)√((Q-x)(M-x)) (1 - cos γ)` at the `v_r` constants.
pub fn delta_ecal_closed_form(r: f64, gamma: f64) -> f64 {
    let k = vr_constants(r);
    2.0 * k.x * (k.q + k.x) * ((k.q - k.x) * (k.m - k.x)).sqrt() * (1.0 - gamma.cos())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstabilityConfig {
    pub r: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub dt: f64,
    pub t_final: f64,
}

impl Default for InstabilityConfig {
    fn default() -> Self {
        Self { r: 0.25, gamma: 1e-2, eps0: 1e-2, dt: 1e-4, t_final: 50.0 }
    }
}

/// Outcome of one time direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    /// First `|t|` with `|y| > threshold`.
    pub exit_time: Option<f64>,
    pub max_abs_y: f64,
    /// `y` strictly monotone up to the exit (or over the whole run when it
    /// never exits).
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub config: InstabilityConfig,
    pub q_r: f64,
    pub m_r: f64,
    pub x_r: f64,
    pub ecal_r: f64,
    pub delta_ecal: f64,
    pub delta_ecal_closed_form: f64,
    pub leading_coefficient: f64,
    /// `δℰ · 16r⁴(1+r)/(1-r)⁵`.
    pub predicted_dy2: f64,
    /// From a 5-point one-sided stencil at `t = 0`.
    pub measured_dy2: f64,
    pub relative_error: f64,
    /// The printed y-linear coefficient `-64r⁷(1+r)²/(1-r)⁹`.
    pub second_coefficient_formula: f64,
    /// Least-squares fit `(dy/dt)² ≈ a + b y + c y²` on the forward run.
    pub fit: [f64; 3],
    pub threshold: f64,
    pub forward: Excursion,
    pub backward: Excursion,
    pub delta_ecal_half: f64,
    pub measured_dy2_half: f64,
    /// `log₂(δℰ(γ)/δℰ(γ/2))`.
    pub delta_ecal_order: f64,
    /// `log₂` of the ratio of the measured `(dy/dt)²(0)` values.
    pub dy2_order: f64,
    pub max_drift: f64,
}

impl InstabilityReport {
    pub fn escaped(&self) -> bool {
        self.forward.exit_time.is_some() || self.backward.exit_time.is_some()
    }
}

/// `(dy/dt)²(0)` from `y` at `0, h, 2h, 3h, 4h`.
fn initial_dy2(s0: &V3State, dt: f64) -> Result<f64> {
    let mut xs = [0.0; 5];
    march(s0, dt, 4.0 * dt, |i, _, s| xs[i] = s.derived().x)?;
    let d = (-25.0 * xs[0] + 48.0 * xs[1] - 36.0 * xs[2] + 16.0 * xs[3] - 3.0 * xs[4]) / (12.0 * dt);
    Ok(d * d)
}

struct Run {
    excursion: Excursion,
    samples: Vec<(f64, f64)>,
    drift: f64,
}

fn run_direction(s0: &V3State, cfg: &InstabilityConfig, x_r: f64, threshold: f64, sign: f64) -> Result<Run> {
    let d0 = s0.derived();
    let mut prev_y = 0.0;
    let mut prev_x = d0.x;
    let mut dir = 0.0f64;
    let mut monotone = true;
    let mut exit_time = None;
    let mut max_abs_y: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut samples = Vec::new();
    let stride = ((0.01 / cfg.dt).round() as usize).max(1);
    let h = cfg.dt;
    march(s0, cfg.dt, sign * cfg.t_final, |i, t, s| {
        let d = s.derived();
        let y = d.x - x_r;
        if exit_time.is_none() {
            max_abs_y = max_abs_y.max(y.abs());
            if i > 0 {
                let step = y - prev_y;
                if step != 0.0 {
                    if dir == 0.0 {
                        dir = step.signum();
                    } else if step.signum() != dir {
                        monotone = false;
                    }
                }
            }
            if y.abs() > threshold {
                exit_time = Some(t.abs());
            }
        }
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        drift = drift.max(rel(d.q, d0.q)).max(rel(d.m, d0.m)).max(rel(d.ecal, d0.ecal));
        if i > 0 && i % stride == 0 {
            let v = (d.x - prev_x) / h;
            samples.push((y, v * v));
        }
        prev_y = y;
        prev_x = d.x;
    })?;
    Ok(Run { excursion: Excursion { exit_time, max_abs_y, monotone }, samples, drift })
}

/// Least squares for `v ≈ a + b y + c y²` via the normal equations.
fn quadratic_fit(samples: &[(f64, f64)]) -> [f64; 3] {
    if samples.len() < 3 {
        return [f64::NAN; 3];
    }
    let scale = samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max).max(1e-300);
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &(y, v) in samples {
        let z = y / scale;
        let row = nalgebra::Vector3::new(1.0, z, z * z);
        ata += row * row.transpose();
        atb += row * v;
    }
    match ata.lu().solve(&atb) {
        Some(c) => [c[0], c[1] / scale, c[2] / (scale * scale)],
        None => [f64::NAN; 3],
    }
}

pub fn instability_experiment(r: f64, gamma: f64, eps0: f64) -> Result<InstabilityReport> {
    instability_experiment_with(&InstabilityConfig { r, gamma, eps0, ..Default::default() })
}

/// Perturbs `v_r` by rotating `b` through `γ`, then follows
/// `y = x - x_r` forward and backward in time. Fails with `NoEscape` when
/// `|y|` stays within `eps0·√M_r` in both directions; the full report rides
/// along in the error.
pub fn instability_experiment_with(cfg: &InstabilityConfig) -> Result<InstabilityReport> {
    if !(cfg.gamma >= 0.0 && cfg.gamma < PI) {
        return Err(Error::InvalidParameter(format!("gamma = {} is outside [0, π)", cfg.gamma)));
    }
    if !(cfg.eps0 > 0.0) {
        return Err(Error::InvalidParameter("eps0 must be positive".into()));
    }
    let k = vr_constants(cfg.r);
    let s0 = V3State::perturbed(cfg.r, cfg.gamma)?;
    let d0 = s0.derived();
    let delta_ecal = d0.ecal - k.ecal;
    let lead = leading_coefficient(cfg.r);
    let predicted_dy2 = delta_ecal * lead;
    let measured_dy2 = initial_dy2(&s0, cfg.dt)?;

    let half = V3State::perturbed(cfg.r, 0.5 * cfg.gamma)?;
    let delta_ecal_half = half.derived().ecal - k.ecal;
    let measured_dy2_half = initial_dy2(&half, cfg.dt)?;

    let threshold = cfg.eps0 * k.m.sqrt();
    let fwd = run_direction(&s0, cfg, k.x, threshold, 1.0)?;
    let bwd = run_direction(&s0, cfg, k.x, threshold, -1.0)?;

    let report = InstabilityReport {
        config: *cfg,
        q_r: k.q,
        m_r: k.m,
        x_r: k.x,
        ecal_r: k.ecal,
        delta_ecal,
        delta_ecal_closed_form: delta_ecal_closed_form(cfg.r, cfg.gamma),
        leading_coefficient: lead,
        predicted_dy2,
        measured_dy2,
        relative_error: (measured_dy2 - predicted_dy2).abs() / predicted_dy2.abs(),
        second_coefficient_formula: second_coefficient(cfg.r),
        fit: quadratic_fit(&fwd.samples),
        threshold,
        forward: fwd.excursion,
        backward: bwd.excursion,
        delta_ecal_half,
        measured_dy2_half,
        delta_ecal_order: (delta_ecal / delta_ecal_half).log2(),
        dy2_order: (measured_dy2 / measured_dy2_half).log2(),
        max_drift: fwd.drift.max(bwd.drift),
    };
    if !report.escaped() {
        return Err(Error::NoEscape { threshold, report: Box::new(report) });
    }
    Ok(report)
}

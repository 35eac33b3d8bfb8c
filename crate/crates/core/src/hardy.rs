//! Truncated Hardy-space states.
//!
//! A state `u` is stored as its nonnegative Fourier modes `û(0), …, û(M-1)`,
//! which are also the Taylor coefficients of `u(z)` on the unit disc. The
//! inner product is taken against the normalized measure `dθ/2π`, so
//! `(u|v) = Σ û(k) conj(v̂(k))`.
//!
//! Products are always formed at full convolution length and truncated
//! afterwards by the caller. Nothing here wraps around modulo `M`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-mode tolerance used by [`HardyCoefficients::approx_eq`] when the
/// caller has no better value.
pub const DEFAULT_COEFF_TOL: f64 = 1e-12;

/// Nonnegative-frequency Fourier coefficients `û(0..M)`.
#[derive(Clone, Debug)]
pub struct HardyCoefficients {
    coeffs: Vec<C64>,
}

impl HardyCoefficients {
    /// Wraps a coefficient vector. Panics on an empty vector: the zero
    /// function is `{0}`, not `{}`.
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a Hardy state needs at least one mode");
        Self { coeffs }
    }

    pub fn zeros(trunc: usize) -> Self {
        Self::new(vec![ZERO; trunc])
    }

    pub fn constant(value: C64, trunc: usize) -> Self {
        let mut u = Self::zeros(trunc);
        u.coeffs[0] = value;
        u
    }

    pub fn from_fn(trunc: usize, f: impl FnMut(usize) -> C64) -> Self {
        Self::new((0..trunc).map(f).collect())
    }

    /// `λ / (1 - p z)`, i.e. `û(k) = λ pᵏ`.
    pub fn geometric(lambda: C64, p: C64, trunc: usize) -> Self {
        let mut acc = lambda;
        Self::from_fn(trunc, |_| {
            let out = acc;
            acc *= p;
            out
        })
    }

    /// Builds from real and imaginary parts.
    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::MalformedState(format!(
                "re has {} entries but im has {}",
                re.len(),
                im.len()
            )));
        }
        if re.is_empty() {
            return Err(Error::MalformedState("empty coefficient list".into()));
        }
        Ok(Self::new(
            re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect(),
        ))
    }

    pub fn trunc(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.coeffs
    }

    /// `û(k)`, zero past the truncation.
    pub fn get(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    /// Zero-pads or cuts to exactly `trunc` modes.
    pub fn resized(&self, trunc: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(trunc, ZERO);
        Self::new(c)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// L² norm on the circle.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Number of leading modes that carry anything above
    /// `rel_tol · max|û|`. At least one.
    pub fn effective_len(&self, rel_tol: f64) -> usize {
        let cut = rel_tol * self.max_abs();
        self.coeffs
            .iter()
            .rposition(|c| c.norm() > cut)
            .map_or(1, |k| k + 1)
    }

    /// Horner evaluation of `u(z)`.
    pub fn evaluate(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Per-mode comparison after zero-padding, `max_k |û(k) - v̂(k)| <= tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_diff(other) <= tol
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        let n = self.trunc().max(other.trunc());
        (0..n)
            .map(|k| (self.get(k) - other.get(k)).norm())
            .fold(0.0, f64::max)
    }

    /// `‖u - v‖` after zero-padding.
    pub fn distance(&self, other: &Self) -> f64 {
        let n = self.trunc().max(other.trunc());
        (0..n)
            .map(|k| (self.get(k) - other.get(k)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `e^{iθ} u(z e^{iα})`, the two symmetries of the flow.
    pub fn rotate(&self, theta: f64, alpha: f64) -> Self {
        let phase = C64::from_polar(1.0, theta);
        Self::from_fn(self.trunc(), |k| {
            self.coeffs[k] * phase * C64::from_polar(1.0, alpha * k as f64)
        })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        let n = self.trunc().max(other.trunc());
        Self::from_fn(n, |k| f(self.get(k), other.get(k)))
    }
}

impl PartialEq for HardyCoefficients {
    fn eq(&self, other: &Self) -> bool {
        let n = self.trunc().max(other.trunc());
        (0..n).all(|k| self.get(k) == other.get(k))
    }
}

impl Add for &HardyCoefficients {
    type Output = HardyCoefficients;
    fn add(self, rhs: Self) -> HardyCoefficients {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &HardyCoefficients {
    type Output = HardyCoefficients;
    fn sub(self, rhs: Self) -> HardyCoefficients {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Add for HardyCoefficients {
    type Output = HardyCoefficients;
    fn add(self, rhs: Self) -> HardyCoefficients {
        &self + &rhs
    }
}

impl Sub for HardyCoefficients {
    type Output = HardyCoefficients;
    fn sub(self, rhs: Self) -> HardyCoefficients {
        &self - &rhs
    }
}

impl Mul<C64> for &HardyCoefficients {
    type Output = HardyCoefficients;
    fn mul(self, rhs: C64) -> HardyCoefficients {
        self.scale(rhs)
    }
}

impl Mul<f64> for &HardyCoefficients {
    type Output = HardyCoefficients;
    fn mul(self, rhs: f64) -> HardyCoefficients {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Neg for &HardyCoefficients {
    type Output = HardyCoefficients;
    fn neg(self) -> HardyCoefficients {
        self.scale(C64::new(-1.0, 0.0))
    }
}

#[derive(Serialize, Deserialize)]
struct WireState {
    trunc: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for HardyCoefficients {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WireState {
            trunc: self.trunc(),
            re: self.coeffs.iter().map(|c| c.re).collect(),
            im: self.coeffs.iter().map(|c| c.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HardyCoefficients {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = WireState::deserialize(d)?;
        if w.trunc != w.re.len() {
            return Err(serde::de::Error::custom(format!(
                "trunc is {} but {} coefficients were given",
                w.trunc,
                w.re.len()
            )));
        }
        Self::from_parts(&w.re, &w.im).map_err(serde::de::Error::custom)
    }
}

/// A two-sided coefficient sequence indexed `-half..=half`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSided {
    half: usize,
    coeffs: Vec<C64>,
}

impl TwoSided {
    pub fn zeros(half: usize) -> Self {
        Self {
            half,
            coeffs: vec![ZERO; 2 * half + 1],
        }
    }

    /// From `(index, value)` pairs; the range is sized to fit them.
    pub fn from_pairs(pairs: &[(i64, C64)]) -> Self {
        let half = pairs.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0) as usize;
        let mut out = Self::zeros(half);
        for &(k, v) in pairs {
            *out.at_mut(k) += v;
        }
        out
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn get(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.half {
            ZERO
        } else {
            self.coeffs[(k + self.half as i64) as usize]
        }
    }

    pub fn at_mut(&mut self, k: i64) -> &mut C64 {
        assert!(k.unsigned_abs() as usize <= self.half, "index {k} out of range");
        &mut self.coeffs[(k + self.half as i64) as usize]
    }

    /// Embeds a Hardy state (negative modes zero).
    pub fn from_hardy(u: &HardyCoefficients) -> Self {
        let half = u.trunc() - 1;
        let mut out = Self::zeros(half);
        for (k, &c) in u.coeffs().iter().enumerate() {
            *out.at_mut(k as i64) = c;
        }
        out
    }

    /// Pointwise conjugate of a Hardy state: `û(k)` at `k` becomes
    /// `conj(û(k))` at `-k`.
    pub fn conjugate_of(u: &HardyCoefficients) -> Self {
        let half = u.trunc() - 1;
        let mut out = Self::zeros(half);
        for (k, &c) in u.coeffs().iter().enumerate() {
            *out.at_mut(-(k as i64)) = c.conj();
        }
        out
    }

    /// Full-length product (coefficient convolution), no wraparound.
    pub fn product(&self, other: &Self) -> Self {
        let half = self.half + other.half;
        let mut out = Self::zeros(half);
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

/// Szegő projector: keeps indices `0..=half`.
pub fn szego_project(full: &TwoSided) -> HardyCoefficients {
    HardyCoefficients::from_fn(full.half + 1, |k| full.get(k as i64))
}

/// `(u|v) = Σ û(k) conj(v̂(k))`.
pub fn inner_product(u: &HardyCoefficients, v: &HardyCoefficients) -> C64 {
    u.coeffs()
        .iter()
        .zip(v.coeffs())
        .map(|(a, b)| a * b.conj())
        .sum()
}

/// `sqrt(Σ (1+k)^{2s} |û(k)|²)`.
pub fn sobolev_norm(u: &HardyCoefficients, s: f64) -> f64 {
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| (1.0 + k as f64).powf(2.0 * s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `D = z ∂_z`: `û(k) ↦ k û(k)`.
pub fn apply_d(u: &HardyCoefficients) -> HardyCoefficients {
    HardyCoefficients::from_fn(u.trunc(), |k| u.coeffs()[k] * k as f64)
}

/// Multiplication by `z`. The truncation grows by one so no mode is lost.
pub fn shift(u: &HardyCoefficients) -> HardyCoefficients {
    let mut c = Vec::with_capacity(u.trunc() + 1);
    c.push(ZERO);
    c.extend_from_slice(u.coeffs());
    HardyCoefficients::new(c)
}

/// Adjoint of [`shift`]: drops `û(0)` and moves everything down by one.
pub fn coshift(u: &HardyCoefficients) -> HardyCoefficients {
    if u.trunc() == 1 {
        return HardyCoefficients::zeros(1);
    }
    HardyCoefficients::new(u.coeffs()[1..].to_vec())
}

/// Exact product of two Hardy states at full length `M_u + M_v - 1`.
pub fn multiply(u: &HardyCoefficients, v: &HardyCoefficients) -> HardyCoefficients {
    let mut out = vec![ZERO; u.trunc() + v.trunc() - 1];
    convolve_into(u.coeffs(), v.coeffs(), &mut out);
    HardyCoefficients::new(out)
}

/// `Π(u conj(h))` at full length `M_u`: the Hankel operator with symbol `u`
/// applied to `h`.
pub fn project_times_conj(u: &HardyCoefficients, h: &HardyCoefficients) -> HardyCoefficients {
    let mut out = vec![ZERO; u.trunc()];
    correlate_into(u.coeffs(), h.coeffs(), &mut out);
    HardyCoefficients::new(out)
}

/// `Π(|u|²)` truncated to `trunc(u)`, going through the two-sided buffer.
pub fn projected_abs2(u: &HardyCoefficients) -> HardyCoefficients {
    let full = TwoSided::from_hardy(u).product(&TwoSided::conjugate_of(u));
    szego_project(&full)
}

/// `out[n] += Σ_{i+j=n} a[i] b[j]` for every `n < out.len()`.
pub(crate) fn convolve_into(a: &[C64], b: &[C64], out: &mut [C64]) {
    let n = out.len();
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == ZERO {
            continue;
        }
        let len = b.len().min(n - i);
        for (o, &bj) in out[i..i + len].iter_mut().zip(&b[..len]) {
            *o += ai * bj;
        }
    }
}

/// `out[k] = Σ_m a[k+m] conj(b[m])`, i.e. `Π(a conj(b))` restricted to
/// `k < out.len()`.
pub(crate) fn correlate_into(a: &[C64], b: &[C64], out: &mut [C64]) {
    for (k, o) in out.iter_mut().enumerate() {
        if k >= a.len() {
            *o = ZERO;
            continue;
        }
        let tail = &a[k..];
        let len = tail.len().min(b.len());
        *o = dot_conj(&tail[..len], &b[..len]);
    }
}

/// `Σ x[m] conj(y[m])` over equal-length slices, with four independent
/// accumulators so the loop is not one long dependency chain.
fn dot_conj(x: &[C64], y: &[C64]) -> C64 {
    let mut acc = [ZERO; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l] * b[l].conj();
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (a, b) in xr.iter().zip(yr) {
        s += a * b.conj();
    }
    s
}

/// Mass, momentum, the functional `J` and the energy `E = ½|J|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedTriple {
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "J")]
    pub j: C64,
}

impl ConservedTriple {
    /// Right side of `E <= ½ Q² (Q + M)`.
    pub fn gagliardo_bound(&self) -> f64 {
        0.5 * self.q * self.q * (self.q + self.m)
    }
}

/// `J(u) = Σ_{k,ℓ} û(k) û(ℓ) conj(û(k+ℓ)) = (u²|u)`.
pub fn functional_j(u: &[C64]) -> C64 {
    let mut sq = vec![ZERO; u.len()];
    convolve_into(u, u, &mut sq);
    sq.iter().zip(u).map(|(a, b)| a * b.conj()).sum()
}

pub fn conserved(u: &HardyCoefficients) -> ConservedTriple {
    let c = u.coeffs();
    let q = c.iter().map(|x| x.norm_sqr()).sum();
    let m = c
        .iter()
        .enumerate()
        .map(|(k, x)| k as f64 * x.norm_sqr())
        .sum();
    let j = functional_j(c);
    ConservedTriple {
        q,
        m,
        e: 0.5 * j.norm_sqr(),
        j,
    }
}

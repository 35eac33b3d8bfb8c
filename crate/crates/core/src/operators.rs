//! Hankel, shifted Hankel and Toeplitz operators on truncated Hardy space,
//! their spectra, and numerical checks of the Lax-pair identities.
//!
//! Antilinear maps are stored as a plain matrix `H` acting by
//! `h ↦ H · conj(h)`. Composition rules, with `L` linear:
//!
//! * `L ∘ H` is antilinear with matrix `L H`;
//! * `H ∘ L` is antilinear with matrix `H conj(L)`;
//! * `H ∘ G` (both antilinear) is linear with matrix `H conj(G)`.
//!
//! The rank-one map `h ↦ (u|h) u` is antilinear with matrix `u uᵀ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{
    convolve_into, correlate_into, multiply, projected_abs2, HardyCoefficients, TwoSided, C64,
    ZERO,
};

pub type CMatrix = DMatrix<C64>;

/// Relative threshold for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Modes below this fraction of `max|û|` are treated as outside the symbol's
/// support when sizing spectral matrices.
pub const SUPPORT_REL_TOL: f64 = 1e-18;

/// Matrix of an antilinear map `h ↦ m · conj(h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Antilinear(pub CMatrix);

impl Antilinear {
    pub fn apply(&self, h: &[C64]) -> Vec<C64> {
        let v = DVector::from_iterator(h.len(), h.iter().map(|x| x.conj()));
        (&self.0 * v).iter().copied().collect()
    }

    /// `self ∘ l` for a linear `l`.
    pub fn after_linear(&self, l: &CMatrix) -> Antilinear {
        Antilinear(&self.0 * l.map(|x| x.conj()))
    }

    /// `l ∘ self` for a linear `l`.
    pub fn before_linear(&self, l: &CMatrix) -> Antilinear {
        Antilinear(l * &self.0)
    }

    /// `self ∘ other`, which is linear.
    pub fn compose(&self, other: &Antilinear) -> CMatrix {
        &self.0 * other.0.map(|x| x.conj())
    }

    /// The operator norm, equal to the spectral norm of the stored matrix.
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.0)
    }
}

/// `entries[j][k] = û(j+k)` (or `û(j+k+1)` when shifted).
#[derive(Clone, Debug)]
pub struct HankelMatrix {
    pub entries: CMatrix,
    pub symbol_trunc: usize,
    pub shifted: bool,
}

impl HankelMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_antilinear(&self) -> Antilinear {
        Antilinear(self.entries.clone())
    }

    /// `h ↦ Π(u conj(h))` (or with `S*u` when shifted).
    pub fn apply(&self, h: &[C64]) -> Vec<C64> {
        self.as_antilinear().apply(h)
    }

    /// The positive operator `H²`, entries `Σ_m û(j+m) conj(û(k+m))`.
    pub fn square(&self) -> CMatrix {
        // H is complex symmetric, so H conj(H) = H Hᴴ.
        &self.entries * self.entries.adjoint()
    }
}

/// `entries[j][k] = b̂(j-k)`.
#[derive(Clone, Debug)]
pub struct ToeplitzMatrix {
    pub entries: CMatrix,
    pub symbol: TwoSided,
}

impl ToeplitzMatrix {
    pub fn apply(&self, h: &[C64]) -> Vec<C64> {
        let v = DVector::from_column_slice(h);
        (&self.entries * v).iter().copied().collect()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::TruncationTooSmall { trunc: dim, min: 2 });
    }
    Ok(())
}

pub fn hankel(u: &HardyCoefficients) -> Result<HankelMatrix> {
    hankel_compressed(u, u.trunc(), false)
}

pub fn shifted_hankel(u: &HardyCoefficients) -> Result<HankelMatrix> {
    hankel_compressed(u, u.trunc(), true)
}

/// Hankel matrix of the full symbol `u`, compressed to the first `dim`
/// modes. `dim` may exceed or undercut `trunc(u)`.
pub fn hankel_compressed(u: &HardyCoefficients, dim: usize, shifted: bool) -> Result<HankelMatrix> {
    check_dim(dim)?;
    let off = usize::from(shifted);
    Ok(HankelMatrix {
        entries: CMatrix::from_fn(dim, dim, |j, k| u.get(j + k + off)),
        symbol_trunc: u.trunc(),
        shifted,
    })
}

pub fn toeplitz(b: &TwoSided, dim: usize) -> Result<ToeplitzMatrix> {
    check_dim(dim)?;
    Ok(ToeplitzMatrix {
        entries: CMatrix::from_fn(dim, dim, |j, k| b.get(j as i64 - k as i64)),
        symbol: b.clone(),
    })
}

/// Symbol `u + ū` as a two-sided sequence.
pub fn real_part_symbol(u: &HardyCoefficients) -> TwoSided {
    let mut s = TwoSided::from_hardy(u);
    let conj = TwoSided::conjugate_of(u);
    let half = s.half() as i64;
    for k in -half..=half {
        *s.at_mut(k) += conj.get(k);
    }
    s
}

/// `A_u = T_u + T_ū` at dimension `trunc(u)`.
pub fn a_u(u: &HardyCoefficients) -> Result<ToeplitzMatrix> {
    a_u_compressed(u, u.trunc())
}

pub fn a_u_compressed(u: &HardyCoefficients, dim: usize) -> Result<ToeplitzMatrix> {
    toeplitz(&real_part_symbol(u), dim)
}

/// `(A_u - D) h` on the first `h.len()` modes, without forming a matrix.
pub fn apply_a_minus_d(u: &HardyCoefficients, h: &[C64]) -> Vec<C64> {
    let n = h.len();
    let mut out = vec![ZERO; n];
    convolve_into(u.coeffs(), h, &mut out);
    let mut back = vec![ZERO; n];
    correlate_into(h, u.coeffs(), &mut back);
    for (k, (o, b)) in out.iter_mut().zip(back).enumerate() {
        *o += b - h[k] * k as f64;
    }
    out
}

/// `K_u h = Π(S*u · conj(h))` on the first `h.len()` modes.
pub fn apply_shifted_hankel(u: &HardyCoefficients, h: &[C64]) -> Vec<C64> {
    let s = if u.trunc() > 1 { &u.coeffs()[1..] } else { &[][..] };
    let mut out = vec![ZERO; h.len()];
    correlate_into(s, h, &mut out);
    out
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: CMatrix) -> HermitianEigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, descending. Skips the eigenvector accumulation.
pub fn hermitian_eigenvalues(m: CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn rank_of(values: &[f64], threshold: f64) -> usize {
    values.iter().filter(|&&v| v > threshold).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominanceLabel {
    H,
    K,
    /// Multiplicities or `u`-overlaps do not fit either pattern; the
    /// eigenvalue is probably not resolved at this tolerance.
    #[serde(rename = "UNRESOLVED")]
    Unresolved,
}

/// One shared positive eigenvalue `s²` of `H_u²` and `K_u²`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominanceEntry {
    pub s2: f64,
    pub label: DominanceLabel,
    pub dim_e: usize,
    pub dim_f: usize,
    /// Norm of the projection of `u` onto the larger eigenspace.
    pub u_overlap: f64,
    /// `max |(h|1)|` over the orthonormal basis of `E_u(s)`; only
    /// meaningful for K-dominant entries.
    pub orth1: f64,
}

/// Projection `u_σ` of `u` onto a K-dominant eigenspace `F_u(σ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Projection {
    pub s2: f64,
    pub n: usize,
    pub u_sigma: HardyCoefficients,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub tol: f64,
    pub support: usize,
    pub h2_eigs: Vec<f64>,
    pub k2_eigs: Vec<f64>,
    pub rank_h: usize,
    pub rank_k: usize,
    pub dominance: Vec<DominanceEntry>,
    pub projections: Vec<Projection>,
    /// `‖u_0‖`, the part of `u` in the kernel of `K_u²`.
    pub kernel_part: f64,
    /// `‖u - u_0 - Σ u_σ‖`.
    pub reconstruction_residual: f64,
    /// Max entry of `H_u² - K_u² - u uᴴ`.
    pub rank_one_residual: f64,
    pub unresolved: bool,
}

/// Spectral data with the eigenvectors kept, for callers that need the
/// eigenspaces themselves.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub h2: HermitianEigen,
    pub k2: HermitianEigen,
    /// Column indices into `k2.vectors` for each entry of
    /// `report.dominance`.
    pub f_columns: Vec<Vec<usize>>,
    pub e_columns: Vec<Vec<usize>>,
    pub report: SpectralReport,
}

impl SpectralDecomposition {
    /// Orthonormal basis of `F_u(s)` for dominance entry `i`, padded to
    /// `trunc` modes.
    pub fn f_basis(&self, i: usize, trunc: usize) -> Vec<Vec<C64>> {
        self.f_columns[i]
            .iter()
            .map(|&c| column_padded(&self.k2.vectors, c, trunc))
            .collect()
    }
}

fn column_padded(m: &CMatrix, c: usize, trunc: usize) -> Vec<C64> {
    let mut v: Vec<C64> = m.column(c).iter().copied().collect();
    v.resize(trunc.max(v.len()), ZERO);
    v
}

pub fn spectral_report(u: &HardyCoefficients, tol: f64) -> Result<SpectralReport> {
    Ok(spectral_decomposition(u, tol)?.report)
}

pub fn spectral_decomposition(u: &HardyCoefficients, tol: f64) -> Result<SpectralDecomposition> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    check_dim(u.trunc())?;
    let dim = u.effective_len(SUPPORT_REL_TOL).max(2);
    let h = hankel_compressed(u, dim, false)?;
    let k = hankel_compressed(u, dim, true)?;
    let h2m = h.square();
    let k2m = k.square();

    let uvec = DVector::from_iterator(dim, (0..dim).map(|i| u.get(i)));
    let rank_one = &h2m - &k2m - &uvec * uvec.adjoint();
    let rank_one_residual = rank_one.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let h2 = hermitian_eigen(h2m);
    let k2 = hermitian_eigen(k2m);
    let lmax = h2.values.first().copied().unwrap_or(0.0).max(0.0);
    let thr = tol * lmax;
    let rank_h = rank_of(&h2.values, thr);
    let rank_k = rank_of(&k2.values, thr);

    // Merge positive eigenvalues from both operators into clusters.
    let mut items: Vec<(f64, bool, usize)> = Vec::new();
    items.extend((0..rank_h).map(|i| (h2.values[i], true, i)));
    items.extend((0..rank_k).map(|i| (k2.values[i], false, i)));
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut clusters: Vec<Vec<(f64, bool, usize)>> = Vec::new();
    for it in items {
        match clusters.last_mut() {
            Some(cl) if cl.last().unwrap().0 - it.0 <= thr => cl.push(it),
            _ => clusters.push(vec![it]),
        }
    }
    let mut unresolved = clusters
        .windows(2)
        .any(|w| w[0].last().unwrap().0 - w[1][0].0 < 10.0 * thr);

    let unorm = u.norm();
    let overlap_cut = tol.sqrt() * unorm;
    let project = |eig: &HermitianEigen, cols: &[usize]| -> DVector<C64> {
        let mut acc = DVector::from_element(dim, ZERO);
        for &c in cols {
            let v = eig.vectors.column(c);
            let coef = v.dotc(&uvec);
            acc += v * coef;
        }
        acc
    };

    let mut dominance = Vec::new();
    let mut projections = Vec::new();
    let mut e_columns = Vec::new();
    let mut f_columns = Vec::new();
    let mut sum_k_dominant = DVector::from_element(dim, ZERO);
    let mut sum_all_f = DVector::from_element(dim, ZERO);
    for cl in &clusters {
        let e_cols: Vec<usize> = cl.iter().filter(|x| x.1).map(|x| x.2).collect();
        let f_cols: Vec<usize> = cl.iter().filter(|x| !x.1).map(|x| x.2).collect();
        let s2 = cl.iter().map(|x| x.0).sum::<f64>() / cl.len() as f64;
        let pe = project(&h2, &e_cols);
        let pf = project(&k2, &f_cols);
        sum_all_f += &pf;
        let (oe, of) = (pe.norm(), pf.norm());
        let label = if e_cols.len() == f_cols.len() + 1 && oe > overlap_cut {
            DominanceLabel::H
        } else if f_cols.len() == e_cols.len() + 1 && of > overlap_cut {
            DominanceLabel::K
        } else {
            unresolved = true;
            DominanceLabel::Unresolved
        };
        let orth1 = e_cols
            .iter()
            .map(|&c| h2.vectors[(0, c)].norm())
            .fold(0.0, f64::max);
        if label == DominanceLabel::K {
            sum_k_dominant += &pf;
            projections.push(Projection {
                s2,
                n: f_cols.len(),
                u_sigma: HardyCoefficients::from_fn(u.trunc(), |i| {
                    if i < dim {
                        pf[i]
                    } else {
                        ZERO
                    }
                }),
            });
        }
        dominance.push(DominanceEntry {
            s2,
            label,
            dim_e: e_cols.len(),
            dim_f: f_cols.len(),
            u_overlap: if label == DominanceLabel::H { oe } else { of },
            orth1,
        });
        e_columns.push(e_cols);
        f_columns.push(f_cols);
    }

    let u0 = &uvec - &sum_all_f;
    let tail: f64 = (dim..u.trunc()).map(|i| u.get(i).norm_sqr()).sum();
    let kernel_part = (u0.norm_squared() + tail).sqrt();
    let reconstruction_residual = (&uvec - &u0 - &sum_k_dominant).norm();

    let clamp = |v: &[f64]| v.iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
    let report = SpectralReport {
        tol,
        support: dim,
        h2_eigs: clamp(&h2.values),
        k2_eigs: clamp(&k2.values),
        rank_h,
        rank_k,
        dominance,
        projections,
        kernel_part,
        reconstruction_residual,
        rank_one_residual,
        unresolved,
    };
    Ok(SpectralDecomposition {
        h2,
        k2,
        f_columns,
        e_columns,
        report,
    })
}

/// `X(u) = 2Π(|u|²) + u²`, kept at full length `2M - 1`.
pub fn lax_symbol(u: &HardyCoefficients) -> HardyCoefficients {
    let pa = projected_abs2(u);
    let sq = multiply(u, u);
    HardyCoefficients::from_fn(sq.trunc(), |k| pa.get(k) * 2.0 + sq.get(k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaxResiduals {
    /// `‖K_X - (A K + K A)‖` on the leading block.
    pub k: f64,
    /// `‖H_X - (A H + H A - (u|·)u)‖` on the leading block.
    pub h: f64,
    pub dim: usize,
    pub block: usize,
}

/// Both Lax identities at operator dimension `trunc(u)`, measured on the
/// leading `min(64, M)` block.
pub fn verify_lax(u: &HardyCoefficients) -> Result<LaxResiduals> {
    verify_lax_at(u, u.trunc(), 64)
}

/// Both Lax identities with the operators compressed to `dim` modes. The
/// symbol keeps its own truncation, so the compression error shrinks as
/// `dim` grows.
pub fn verify_lax_at(u: &HardyCoefficients, dim: usize, block: usize) -> Result<LaxResiduals> {
    check_dim(dim)?;
    let b = block.min(dim).max(1);
    let x = lax_symbol(u);
    let a = a_u_compressed(u, dim)?.entries;
    let a_conj = a.map(|z| z.conj());
    let hm = hankel_compressed(u, dim, false)?.entries;
    let km = hankel_compressed(u, dim, true)?.entries;
    let kx = CMatrix::from_fn(b, b, |j, k| x.get(j + k + 1));
    let hx = CMatrix::from_fn(b, b, |j, k| x.get(j + k));

    let a_rows = a.rows(0, b);
    let lead = |m: &CMatrix| -> CMatrix {
        let left = a_rows * m.columns(0, b);
        let right = m.rows(0, b) * a_conj.columns(0, b);
        left + right
    };
    let rk = &kx - lead(&km);
    let uu = CMatrix::from_fn(b, b, |j, k| u.get(j) * u.get(k));
    let rh = &hx - lead(&hm) + uu;
    Ok(LaxResiduals {
        k: spectral_norm(&rk),
        h: spectral_norm(&rh),
        dim,
        block: b,
    })
}

/// Checks for one K-dominant eigenvalue of a traveling-wave profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SigmaCheck {
    pub s2: f64,
    pub n: usize,
    /// `(ϖ + n)/2`.
    pub eigenvalue: f64,
    /// `‖(A_u - D)u_σ - eigenvalue · u_σ‖`.
    pub eigen_residual: f64,
    pub zeta: C64,
    /// `‖K_u u_σ - ζ z^{n-1} u_σ‖`.
    pub parallel_residual: f64,
    /// Eigenvalues of `A_u - D` restricted to `F_u(σ)`, ascending.
    pub ladder: Vec<f64>,
    pub ladder_expected_min: f64,
    /// Max distance of the ladder from `min, min+1, …`.
    pub ladder_residual: f64,
    /// How far `A_u - D` is from leaving `F_u(σ)` invariant.
    pub invariance_residual: f64,
    /// `(u_σ|1)`.
    pub mean: C64,
    /// `|(ϖ + n - 2N)(u_σ|1) - 2‖u_σ‖²|`.
    pub umvm_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuMinusDReport {
    pub varpi: f64,
    pub rank_k: usize,
    pub sigmas: Vec<SigmaCheck>,
    pub max_eigen_residual: f64,
    /// `|ϖN - 2Q - N²|` with `N = rank K_u`; absent when `K_u = 0`.
    pub q_residual: Option<f64>,
}

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

pub fn verify_au_minus_d(u: &HardyCoefficients, varpi: f64) -> Result<AuMinusDReport> {
    verify_au_minus_d_with(u, varpi, DEFAULT_RANK_TOL, DEFAULT_EIGEN_TOL)
}

pub fn verify_au_minus_d_with(
    u: &HardyCoefficients,
    varpi: f64,
    rank_tol: f64,
    eigen_tol: f64,
) -> Result<AuMinusDReport> {
    let dec = spectral_decomposition(u, rank_tol)?;
    let trunc = u.trunc();
    let big_n = dec.report.rank_k;
    let mut sigmas = Vec::new();
    for (i, entry) in dec.report.dominance.iter().enumerate() {
        if entry.label != DominanceLabel::K {
            continue;
        }
        let n = entry.dim_f;
        let basis = dec.f_basis(i, trunc);
        let uvec = u.resized(trunc);
        let coeffs: Vec<C64> = basis
            .iter()
            .map(|f| f.iter().zip(uvec.coeffs()).map(|(a, b)| a.conj() * b).sum())
            .collect();
        let mut us = vec![ZERO; trunc];
        for (f, &c) in basis.iter().zip(&coeffs) {
            for (o, x) in us.iter_mut().zip(f) {
                *o += x * c;
            }
        }

        let eigenvalue = 0.5 * (varpi + n as f64);
        let amd = apply_a_minus_d(u, &us);
        let eigen_residual = amd
            .iter()
            .zip(&us)
            .map(|(a, x)| (a - x * eigenvalue).norm_sqr())
            .sum::<f64>()
            .sqrt();

        let ku = apply_shifted_hankel(u, &us);
        let mut target = vec![ZERO; trunc + n - 1];
        target[n - 1..].copy_from_slice(&us);
        let tt: f64 = target.iter().map(|x| x.norm_sqr()).sum();
        let zeta: C64 = ku
            .iter()
            .zip(&target)
            .map(|(a, b)| a * b.conj())
            .sum::<C64>()
            / tt;
        let parallel_residual = (0..target.len())
            .map(|k| (ku.get(k).copied().unwrap_or(ZERO) - zeta * target[k]).norm_sqr())
            .sum::<f64>()
            .sqrt();

        // A_u - D compressed to F.
        let images: Vec<Vec<C64>> = basis.iter().map(|f| apply_a_minus_d(u, f)).collect();
        let mut small = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                small[(r, c)] = basis[r]
                    .iter()
                    .zip(&images[c])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
            }
        }
        let mut invariance = 0.0f64;
        for c in 0..n {
            let mut resid = images[c].clone();
            for r in 0..n {
                for (o, x) in resid.iter_mut().zip(&basis[r]) {
                    *o -= x * small[(r, c)];
                }
            }
            let nr = resid.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            invariance = invariance.max(nr);
        }
        let herm = (&small + small.adjoint()) * C64::new(0.5, 0.0);
        let mut ladder = hermitian_eigen(herm).values;
        ladder.reverse();
        let ladder_expected_min = 0.5 * (varpi + 2.0 - n as f64);
        let ladder_residual = ladder
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - ladder_expected_min - j as f64).abs())
            .fold(0.0, f64::max);

        let mean = us[0];
        let norm2: f64 = us.iter().map(|x| x.norm_sqr()).sum();
        let umvm_residual =
            (mean * (varpi + n as f64 - 2.0 * big_n as f64) - 2.0 * norm2).norm();

        sigmas.push(SigmaCheck {
            s2: entry.s2,
            n,
            eigenvalue,
            eigen_residual,
            zeta,
            parallel_residual,
            ladder,
            ladder_expected_min,
            ladder_residual,
            invariance_residual: invariance,
            mean,
            umvm_residual,
        });
    }
    let max_eigen_residual = sigmas.iter().map(|s| s.eigen_residual).fold(0.0, f64::max);
    if max_eigen_residual > eigen_tol {
        return Err(Error::NotEigenvector {
            residual: max_eigen_residual,
            tol: eigen_tol,
        });
    }
    let q = u.norm_sqr();
    let q_residual =
        (big_n > 0).then(|| (varpi * big_n as f64 - 2.0 * q - (big_n * big_n) as f64).abs());
    Ok(AuMinusDReport {
        varpi,
        rank_k: big_n,
        sigmas,
        max_eigen_residual,
        q_residual,
    })
}

/// Residual of the pole system for a traveling-wave profile with poles at
/// `1/conj(p_ℓ)`:
/// `(ϖ-1)/2 - Σ_κ 1/(1 - p_ℓ conj(p_κ)) - Σ_{κ≠ℓ} p_ℓ/(p_ℓ - p_κ)`.
/// Returns the largest modulus over `ℓ`.
pub fn verify_syst_pl(points: &[C64], varpi: f64) -> Result<f64> {
    for (i, a) in points.iter().enumerate() {
        if a.norm() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "point {i} has modulus {} >= 1",
                a.norm()
            )));
        }
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            if (a - b).norm() < 1e-12 {
                return Err(Error::PoleCollision { i, j });
            }
        }
    }
    let half = C64::new(0.5 * (varpi - 1.0), 0.0);
    let worst = points
        .iter()
        .enumerate()
        .map(|(l, &pl)| {
            let mut r = half;
            for (k, &pk) in points.iter().enumerate() {
                r -= 1.0 / (1.0 - pl * pk.conj());
                if k != l {
                    r -= pl / (pl - pk);
                }
            }
            r.norm()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hankel_of_z() {
        let u = HardyCoefficients::new(vec![ZERO, c(1.0, 0.0)]);
        let h = hankel(&u).unwrap();
        assert_eq!(h.entries[(0, 1)], c(1.0, 0.0));
        assert_eq!(h.entries[(1, 0)], c(1.0, 0.0));
        assert_eq!(h.entries[(0, 0)], ZERO);
        assert_eq!(h.entries[(1, 1)], ZERO);
    }

    #[test]
    fn constant_symbol_has_zero_shifted_hankel() {
        let u = HardyCoefficients::constant(c(0.3, -2.0), 5);
        let k = shifted_hankel(&u).unwrap();
        assert!(k.entries.iter().all(|&z| z == ZERO));
    }

    #[test]
    fn rejects_one_mode() {
        let u = HardyCoefficients::constant(c(1.0, 0.0), 1);
        assert!(matches!(hankel(&u), Err(Error::TruncationTooSmall { .. })));
        assert!(a_u(&u).is_err());
    }

    #[test]
    fn a_u_is_hermitian() {
        let u = HardyCoefficients::new(vec![c(0.3, 0.2), c(-1.0, 0.5), c(0.1, -0.7)]);
        let a = a_u(&u).unwrap().entries;
        assert!((&a - a.adjoint()).iter().all(|z| z.norm() < 1e-15));
        assert_eq!(a[(0, 0)], c(0.6, 0.0));
        assert_eq!(a[(1, 0)], c(-1.0, 0.5));
        assert_eq!(a[(0, 1)], c(-1.0, -0.5));
    }

    #[test]
    fn hankel_apply_matches_projection() {
        let u = HardyCoefficients::new(vec![c(0.3, 0.2), c(-1.0, 0.5), c(0.1, -0.7), c(0.2, 0.2)]);
        let h = [c(1.0, 1.0), c(0.0, -2.0), c(0.5, 0.0), c(0.0, 0.0)];
        let via_matrix = hankel(&u).unwrap().apply(&h);
        let direct =
            crate::hardy::project_times_conj(&u, &HardyCoefficients::new(h.to_vec()));
        for (a, b) in via_matrix.iter().zip(direct.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
        let k = shifted_hankel(&u).unwrap().apply(&h);
        let k2 = apply_shifted_hankel(&u, &h);
        for (a, b) in k.iter().zip(&k2) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn composition_rules() {
        let h = Antilinear(CMatrix::from_fn(3, 3, |j, k| c(j as f64 + 0.5, k as f64 - 1.0)));
        let l = CMatrix::from_fn(3, 3, |j, k| c((j * k) as f64, 1.0 - j as f64));
        let x = [c(0.2, -1.0), c(1.5, 0.3), c(-0.4, 0.8)];
        let lx: Vec<C64> = (&l * DVector::from_column_slice(&x)).iter().copied().collect();
        let lhs = h.after_linear(&l).apply(&x);
        let rhs = h.apply(&lx);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!((a - b).norm() < 1e-12);
        }
        let hh = h.compose(&h);
        let twice = h.apply(&h.apply(&x));
        let once: Vec<C64> = (&hh * DVector::from_column_slice(&x)).iter().copied().collect();
        for (a, b) in twice.iter().zip(&once) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_state_ranks() {
        let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.5, 0.0), 64);
        let r = spectral_report(&u, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((r.rank_h, r.rank_k), (1, 1));
        assert!(!r.unresolved);
        assert_eq!(r.dominance.len(), 2);
    }

    #[test]
    fn z_spectrum() {
        // H_z swaps 1 and z, so H_z² is the identity on span{1, z}.
        let u = HardyCoefficients::new(vec![ZERO, c(1.0, 0.0), ZERO]);
        let r = spectral_report(&u, DEFAULT_RANK_TOL).unwrap();
        assert_eq!((r.rank_h, r.rank_k), (2, 1));
        assert!((r.h2_eigs[0] - 1.0).abs() < 1e-15);
        assert!((r.h2_eigs[1] - 1.0).abs() < 1e-15);
        assert_eq!(r.dominance.len(), 1);
        assert_eq!(r.dominance[0].label, DominanceLabel::H);
        assert_eq!((r.dominance[0].dim_e, r.dominance[0].dim_f), (2, 1));
    }

    #[test]
    fn lax_of_zero_and_constant() {
        let z = HardyCoefficients::zeros(8);
        let r = verify_lax(&z).unwrap();
        assert_eq!((r.k, r.h), (0.0, 0.0));
        let k = HardyCoefficients::constant(c(0.8, 0.6), 8);
        let r = verify_lax(&k).unwrap();
        assert!(r.k < 1e-13 && r.h < 1e-13, "{r:?}");
    }

    #[test]
    fn syst_pl_single_point() {
        let r = verify_syst_pl(&[c(0.6, 0.0)], 4.125).unwrap();
        assert!(r < 1e-14);
        assert!(matches!(
            verify_syst_pl(&[c(0.3, 0.0), c(0.3, 0.0)], 1.0),
            Err(Error::PoleCollision { i: 0, j: 1 })
        ));
    }

    #[test]
    fn constant_profile_has_empty_ladder() {
        let u = HardyCoefficients::constant(c(1.0, 0.0), 4);
        let rep = verify_au_minus_d(&u, 3.0).unwrap();
        assert!(rep.sigmas.is_empty());
        assert_eq!(rep.rank_k, 0);
        assert!(rep.q_residual.is_none());
    }

    #[test]
    fn non_profile_is_rejected() {
        let u = HardyCoefficients::new(vec![c(1.0, 0.0), c(0.4, 0.3), c(-0.2, 0.1)]);
        assert!(matches!(
            verify_au_minus_d(&u, 4.0),
            Err(Error::NotEigenvector { .. })
        ));
    }
}

//! Fixed-step integration of `i ∂ₜu = 2J Π(|u|²) + conj(J) u²` on a
//! truncated Hardy space, with conservation and spectrum monitors.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{conserved, convolve_into, correlate_into, ConservedTriple, HardyCoefficients, C64, ZERO};
use crate::operators::{hankel_compressed, hermitian_eigenvalues, DEFAULT_RANK_TOL, SUPPORT_REL_TOL};
use crate::rk4::rk4_step;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub dt: f64,
    /// Negative values integrate backward in time.
    pub t_final: f64,
    pub trunc: usize,
    pub monitor_stride: usize,
    /// Largest tolerated relative drift of Q, M and E.
    pub tol_drift: f64,
    /// How many of the top eigenvalues of `K_u²` to record per snapshot.
    pub n_k2_eigs: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            trunc: 256,
            monitor_stride: 100,
            tol_drift: 1e-6,
            n_k2_eigs: 4,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.t_final.is_finite() {
            return Err(Error::InvalidParameter("t_final must be finite".into()));
        }
        if self.monitor_stride == 0 {
            return Err(Error::InvalidParameter("monitor_stride must be at least 1".into()));
        }
        if self.trunc == 0 {
            return Err(Error::InvalidParameter("trunc must be at least 1".into()));
        }
        if self.tol_drift.is_nan() || self.tol_drift <= 0.0 {
            return Err(Error::InvalidParameter("tol_drift must be positive".into()));
        }
        Ok(())
    }
}

/// Largest relative deviation of each invariant from its value at t = 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub q: f64,
    pub m: f64,
    pub e: f64,
}

impl DriftReport {
    pub fn max(&self) -> f64 {
        self.q.max(self.m).max(self.e)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<HardyCoefficients>,
    pub invariants: Vec<ConservedTriple>,
    pub k2_spectra: Vec<Vec<f64>>,
    pub drift: DriftReport,
    pub steps: usize,
    pub step_size: f64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &HardyCoefficients {
        self.states.last().expect("a trajectory always holds its initial state")
    }

    /// CSV with columns `t,Q,M,E,|J|,k2_eig_1..k`. Each entry of `header`
    /// becomes a leading `# ` comment line.
    pub fn write_csv<W: Write>(&self, out: W, header: &[String]) -> std::io::Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let k = self.k2_spectra.iter().map(Vec::len).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        let mut cols: Vec<String> = ["t", "Q", "M", "E", "|J|"].iter().map(|s| s.to_string()).collect();
        cols.extend((1..=k).map(|i| format!("k2_eig_{i}")));
        w.write_record(&cols)?;
        for (i, &t) in self.times.iter().enumerate() {
            let inv = &self.invariants[i];
            let mut row = vec![
                format!("{t:.12e}"),
                format!("{:.17e}", inv.q),
                format!("{:.17e}", inv.m),
                format!("{:.17e}", inv.e),
                format!("{:.17e}", inv.j.norm()),
            ];
            for j in 0..k {
                row.push(match self.k2_spectra[i].get(j) {
                    Some(v) => format!("{v:.17e}"),
                    None => String::new(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush()
    }

    /// One JSON object per snapshot: `{"t": …, "state": {"trunc", "re", "im"}}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            t: f64,
            state: &'a HardyCoefficients,
        }
        for (t, s) in self.times.iter().zip(&self.states) {
            serde_json::to_writer(&mut out, &Line { t: *t, state: s })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Time derivative on raw coefficients; see [`rhs`].
pub fn rhs_slice(u: &[C64]) -> Vec<C64> {
    let n = u.len();
    let mut sq = vec![ZERO; n];
    convolve_into(u, u, &mut sq);
    let j: C64 = sq.iter().zip(u).map(|(a, b)| a * b.conj()).sum();
    let mut pa = vec![ZERO; n];
    correlate_into(u, u, &mut pa);
    let (two_j, jc) = (j * 2.0, j.conj());
    let mi = C64::new(0.0, -1.0);
    pa.iter()
        .zip(&sq)
        .map(|(&a, &s)| mi * (two_j * a + jc * s))
        .collect()
}

/// `∂ₜu = -i(2J Π(|u|²) + conj(J) u²)`, truncated to `trunc(u)`.
pub fn rhs(u: &HardyCoefficients) -> HardyCoefficients {
    HardyCoefficients::new(rhs_slice(u.coeffs()))
}

/// Top eigenvalues of `K_u²`, descending; empty below two modes.
pub fn k2_eigenvalues(u: &HardyCoefficients, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    squared_spectra(u).map_or_else(Vec::new, |(_, k)| k.into_iter().take(count).collect())
}

/// Eigenvalues of `H_u²` and `K_u²`, descending, on the effective support.
pub fn squared_spectra(u: &HardyCoefficients) -> Option<(Vec<f64>, Vec<f64>)> {
    if u.trunc() < 2 {
        return None;
    }
    let dim = u.effective_len(SUPPORT_REL_TOL).max(2);
    let h = hankel_compressed(u, dim, false).ok()?;
    let k = hankel_compressed(u, dim, true).ok()?;
    Some((hermitian_eigenvalues(h.square()), hermitian_eigenvalues(k.square())))
}

fn rel_drift(now: f64, start: f64) -> f64 {
    (now - start).abs() / start.abs().max(1e-12)
}

pub fn integrate(u0: &HardyCoefficients, cfg: &SimulationConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let steps = (cfg.t_final.abs() / cfg.dt).round() as usize;
    let h = if steps == 0 { 0.0 } else { cfg.t_final / steps as f64 };
    let mut y = u0.resized(cfg.trunc).into_vec();

    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        invariants: Vec::new(),
        k2_spectra: Vec::new(),
        drift: DriftReport::default(),
        steps,
        step_size: h,
    };
    let first = conserved(&HardyCoefficients::new(y.clone()));

    let snapshot = |rec: &mut TrajectoryRecord, y: &[C64], t: f64| -> Result<()> {
        let state = HardyCoefficients::new(y.to_vec());
        let inv = conserved(&state);
        let d = DriftReport {
            q: rel_drift(inv.q, first.q),
            m: rel_drift(inv.m, first.m),
            e: rel_drift(inv.e, first.e),
        };
        rec.drift.q = rec.drift.q.max(d.q);
        rec.drift.m = rec.drift.m.max(d.m);
        rec.drift.e = rec.drift.e.max(d.e);
        rec.k2_spectra.push(k2_eigenvalues(&state, cfg.n_k2_eigs));
        rec.times.push(t);
        rec.states.push(state);
        rec.invariants.push(inv);
        for (name, v) in [("Q", d.q), ("M", d.m), ("E", d.e)] {
            if v > cfg.tol_drift {
                return Err(Error::DriftExceeded { quantity: name, drift: v, tol: cfg.tol_drift, t });
            }
        }
        Ok(())
    };

    snapshot(&mut rec, &y, 0.0)?;
    for step in 1..=steps {
        rk4_step(&mut y, h, rhs_slice);
        let t = step as f64 * h;
        if !y.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        if step % cfg.monitor_stride == 0 || step == steps {
            snapshot(&mut rec, &y, t)?;
        }
    }
    Ok(rec)
}

/// `(rank H_u, rank K_u)` on `V(d)`: `d = 2N` gives `(N, N)`, `d = 2N+1`
/// gives `(N+1, N)`.
pub fn expected_ranks(d: usize) -> (usize, usize) {
    (d - d / 2, d / 2)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankHistory {
    pub d: usize,
    pub expected: (usize, usize),
    pub ranks: Vec<(usize, usize)>,
    /// Largest eigenvalue of `H_u²` or `K_u²` past the expected rank.
    pub max_off_rank: f64,
    /// Smallest eigenvalue inside the expected rank.
    pub min_in_rank: f64,
    pub preserved: bool,
}

/// Ranks of `H_u` and `K_u` at every snapshot, thresholded at
/// `tol · max eig(H_u²)`.
pub fn rank_history(traj: &TrajectoryRecord, d: usize, tol: f64) -> RankHistory {
    let expected = expected_ranks(d);
    let mut ranks = Vec::new();
    let mut max_off: f64 = 0.0;
    let mut min_in = f64::INFINITY;
    for s in &traj.states {
        let (h2, k2) = squared_spectra(s).unwrap_or_else(|| {
            let v = s.get(0).norm_sqr();
            (vec![v], vec![0.0])
        });
        let thr = tol * h2.first().copied().unwrap_or(0.0).max(0.0);
        let count = |v: &[f64]| v.iter().filter(|&&x| x > thr).count();
        ranks.push((count(&h2), count(&k2)));
        for (vals, r) in [(&h2, expected.0), (&k2, expected.1)] {
            if let Some(&x) = vals.get(r) {
                max_off = max_off.max(x.max(0.0));
            }
            if r > 0 {
                min_in = min_in.min(vals.get(r - 1).copied().unwrap_or(0.0));
            }
        }
    }
    let preserved = ranks.iter().all(|&r| r == expected);
    RankHistory {
        d,
        expected,
        ranks,
        max_off_rank: max_off,
        min_in_rank: min_in,
        preserved,
    }
}

/// True iff the ranks required on `V(d)` hold at every snapshot.
pub fn rank_conservation_check(traj: &TrajectoryRecord, d: usize) -> bool {
    rank_history(traj, d, DEFAULT_RANK_TOL).preserved
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rhs_zero_and_constant() {
        assert_eq!(rhs(&HardyCoefficients::zeros(4)), HardyCoefficients::zeros(4));
        let lam = c(0.6, 0.3);
        let r = rhs(&HardyCoefficients::constant(lam, 3));
        let expected = C64::new(0.0, -3.0) * lam * lam.norm_sqr().powi(2);
        assert!((r.get(0) - expected).norm() < 1e-15);
        assert_eq!(r.get(1), ZERO);
    }

    #[test]
    fn constant_rotates_at_rate_three() {
        let cfg = SimulationConfig {
            dt: 1e-3,
            t_final: 1.0,
            trunc: 1,
            monitor_stride: 100,
            tol_drift: 1e-10,
            n_k2_eigs: 0,
        };
        let tr = integrate(&HardyCoefficients::constant(c(1.0, 0.0), 1), &cfg).unwrap();
        assert_eq!(tr.len(), 11);
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let v = s.get(0);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!((v - C64::from_polar(1.0, -3.0 * t)).norm() < 1e-10);
        }
    }

    #[test]
    fn expected_ranks_table() {
        assert_eq!(expected_ranks(0), (0, 0));
        assert_eq!(expected_ranks(1), (1, 0));
        assert_eq!(expected_ranks(2), (1, 1));
        assert_eq!(expected_ranks(3), (2, 1));
        assert_eq!(expected_ranks(4), (2, 2));
    }

    #[test]
    fn zero_state_keeps_rank_zero() {
        let cfg = SimulationConfig { t_final: 0.1, trunc: 8, ..Default::default() };
        let tr = integrate(&HardyCoefficients::zeros(8), &cfg).unwrap();
        assert!(rank_conservation_check(&tr, 0));
    }

    #[test]
    fn config_validation() {
        let bad = SimulationConfig { dt: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SimulationConfig { monitor_stride: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn drift_is_reported() {
        let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.5, 0.0), 16);
        let cfg = SimulationConfig { dt: 0.02, t_final: 2.0, trunc: 16, tol_drift: 1e-14, ..Default::default() };
        assert!(matches!(integrate(&u, &cfg), Err(Error::DriftExceeded { .. })));
    }

    #[test]
    fn csv_has_header_and_columns() {
        let cfg = SimulationConfig { t_final: 0.01, dt: 1e-3, trunc: 8, monitor_stride: 5, n_k2_eigs: 2, ..Default::default() };
        let tr = integrate(&HardyCoefficients::geometric(c(1.0, 0.0), c(0.3, 0.0), 8), &cfg).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, &["seed=7".to_string()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# seed=7"));
        assert_eq!(lines.next(), Some("t,Q,M,E,|J|,k2_eig_1,k2_eig_2"));
        assert_eq!(lines.count(), 3);
        let mut buf = Vec::new();
        tr.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}

//! Numbers computed one way in the library and another way here: grid
//! quadrature on the circle, term-by-term evaluation, or closed forms.

use std::f64::consts::PI;

use szego_core::dynamics::{integrate, rank_history, rhs, SimulationConfig};
use szego_core::hardy::{conserved, inner_product, multiply, projected_abs2};
use szego_core::operators::{
    hankel, shifted_hankel, spectral_report, verify_au_minus_d, verify_lax, verify_syst_pl, DominanceLabel,
};
use szego_core::sampling::{random_state, seeded};
use szego_core::steady::{build_steady, SteadyV3Params};
use szego_core::traveling::{
    build_profile, exact_orbit, n_pole_profile, pole_points, residual_profile, Arc, Family, TravelingWaveSpec,
};
use szego_core::v3::{
    delta_ecal_closed_form, evolx_residual, instability_experiment_with, leading_coefficient, second_coefficient,
    v3_integrate, v3_rhs, vr_constants, InstabilityConfig, V3State,
};
use szego_core::{Error, HardyCoefficients, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid(n: usize) -> Vec<C64> {
    (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect()
}

/// Fourier coefficient `k` of grid samples `f(z_j)` by the trapezoid rule.
fn dft(samples: &[C64], k: i64) -> C64 {
    let n = samples.len();
    samples
        .iter()
        .enumerate()
        .map(|(j, &f)| f * C64::from_polar(1.0, -2.0 * PI * (k * j as i64) as f64 / n as f64))
        .sum::<C64>()
        / n as f64
}

fn values(u: &HardyCoefficients, pts: &[C64]) -> Vec<C64> {
    pts.iter().map(|&z| u.evaluate(z)).collect()
}

#[test]
fn geometric_mass_by_quadrature() {
    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.5, 0.0), 64);
    let q = inner_product(&u, &u).re;
    let pts = grid(4096);
    let quad: f64 = values(&u, &pts).iter().map(|v| v.norm_sqr()).sum::<f64>() / 4096.0;
    assert!((q - 4.0 / 3.0).abs() < 1e-12);
    assert!((quad - q).abs() < 1e-12);
}

#[test]
fn products_and_projections_match_the_grid() {
    let mut rng = seeded(11);
    for _ in 0..5 {
        let u = random_state(&mut rng, 24);
        let v = random_state(&mut rng, 24);
        let n = 4 * (u.trunc() + v.trunc()) + 8;
        let pts = grid(n);
        let (uz, vz) = (values(&u, &pts), values(&v, &pts));

        let abs2: Vec<C64> = uz.iter().map(|x| c(x.norm_sqr(), 0.0)).collect();
        let pa = projected_abs2(&u);
        for k in 0..u.trunc() {
            assert!((pa.get(k) - dft(&abs2, k as i64)).norm() < 1e-12);
        }

        let prod: Vec<C64> = uz.iter().zip(&vz).map(|(a, b)| a * b).collect();
        let m = multiply(&u, &v);
        for k in 0..m.trunc() {
            assert!((m.get(k) - dft(&prod, k as i64)).norm() < 1e-12);
        }

        let j: C64 = uz.iter().map(|x| x * x * x.conj()).sum::<C64>() / n as f64;
        assert!((conserved(&u).j - j).norm() < 1e-11 * (1.0 + j.norm()));
    }
}

#[test]
fn hankel_operators_match_the_grid() {
    let mut rng = seeded(5);
    let u = HardyCoefficients::from_fn(12, |k| c(1.0 / (1.0 + k as f64), 0.3 - 0.05 * k as f64));
    let h = random_state(&mut rng, 12).resized(12);
    let pts = grid(64);
    let (uz, hz) = (values(&u, &pts), values(&h, &pts));
    let hu = hankel(&u).unwrap().apply(h.coeffs());
    let ku = shifted_hankel(&u).unwrap().apply(h.coeffs());
    // H_u h = Π(u conj h); K_u h = Π(u conj(zh)).
    let f: Vec<C64> = uz.iter().zip(&hz).map(|(a, b)| a * b.conj()).collect();
    let g: Vec<C64> = uz.iter().zip(hz.iter().zip(&pts)).map(|(a, (b, z))| a * (z * b).conj()).collect();
    for k in 0..12 {
        assert!((hu[k] - dft(&f, k as i64)).norm() < 1e-13);
        assert!((ku[k] - dft(&g, k as i64)).norm() < 1e-13);
    }
}

#[test]
fn lax_identity_examples() {
    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.5, 0.0), 256)
        + HardyCoefficients::from_fn(256, |k| if k == 0 { c(0.0, 0.0) } else { c((1.0f64 / 3.0).powi(k as i32 - 1), 0.0) });
    let r = verify_lax(&u).unwrap();
    assert_eq!(r.block, 64);
    assert!(r.k < 1e-9 && r.h < 1e-9, "{r:?}");

    let r = verify_lax(&HardyCoefficients::constant(c(0.7, -0.2), 4)).unwrap();
    assert!(r.k < 1e-13 && r.h < 1e-13);
    let r = verify_lax(&HardyCoefficients::zeros(4)).unwrap();
    assert_eq!((r.k, r.h), (0.0, 0.0));
}

#[test]
fn arc_coefficients_by_simpson() {
    let arc = Arc::new(0.4, 1.9);
    for k in 0..12 {
        let n = 2000;
        let h = (arc.end - arc.start) / n as f64;
        let f = |t: f64| C64::from_polar(1.0, -(k as f64) * t) / (2.0 * PI);
        let mut s = f(arc.start) + f(arc.end);
        for i in 1..n {
            s += f(arc.start + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s *= h / 3.0;
        assert!((arc.coefficient(k) - s).norm() < 1e-12, "k = {k}");
    }
}

#[test]
fn family_ii_profile_by_grid_projection() {
    let spec = TravelingWaveSpec::new(Family::II, c(1.0, 0.0), c(0.5, 0.0), 1).unwrap();
    let v = build_profile(&spec, 128).unwrap();
    assert!((v.get(0) - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
    for k in 1..10 {
        assert!((v.get(k) - c(0.5f64.powi(k as i32), 0.0)).norm() < 1e-15);
    }
    let pts = grid(256);
    let vals: Vec<C64> = pts.iter().map(|&z| c(-5.0 / 3.0, 0.0) + 1.0 / (1.0 - 0.5 * z)).collect();
    for k in 0..20 {
        assert!((dft(&vals, k) - v.get(k as usize)).norm() < 1e-14);
    }
}

#[test]
fn exact_orbit_derivative_is_the_rhs() {
    for family in [Family::I, Family::II] {
        let spec = TravelingWaveSpec::new(family, c(0.6, 0.3), c(0.1, 0.4), 2).unwrap();
        let v0 = build_profile(&spec, 128).unwrap();
        let f = rhs(&v0);
        let h = 1e-4;
        let fd = &(exact_orbit(&v0, spec.omega, spec.c, h) - exact_orbit(&v0, spec.omega, spec.c, -h)) * (0.5 / h);
        assert!(f.distance(&fd) < 1e-7 * (1.0 + f.norm()));
        let direct = HardyCoefficients::from_fn(128, |k| v0.get(k) * c(0.0, -(spec.omega + spec.c * k as f64)));
        assert!(f.distance(&direct) < 1e-12 * (1.0 + f.norm()));
    }
}

#[test]
fn profile_equation_examples() {
    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.6, 0.0), 256);
    assert!(residual_profile(&u, 4.125) < 1e-12);
    let beta = -1.25 / 0.75;
    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.5, 0.0), 256) + HardyCoefficients::constant(c(beta, 0.0), 1);
    assert!(residual_profile(&u, -3.0) < 1e-12);
    assert_eq!(residual_profile(&HardyCoefficients::zeros(8), 2.0), 0.0);
}

#[test]
fn pole_system_examples() {
    assert!(verify_syst_pl(&[c(0.6, 0.0)], 4.125).unwrap() < 1e-14);
    let prof = n_pole_profile(2, c(0.3, 0.0), 128).unwrap();
    let pts = pole_points(c(0.3, 0.0), 2);
    assert!((pts[0] + pts[1]).norm() < 1e-15);
    assert!(verify_syst_pl(&pts, prof.varpi).unwrap() < 1e-13);
    assert!(matches!(
        verify_syst_pl(&[c(0.2, 0.0), c(0.2, 0.0)], 3.0),
        Err(Error::PoleCollision { i: 0, j: 1 })
    ));
}

#[test]
fn au_minus_d_examples() {
    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.6, 0.0), 512);
    let r = verify_au_minus_d(&u, 4.125).unwrap();
    assert_eq!(r.sigmas.len(), 1);
    assert_eq!(r.sigmas[0].n, 1);
    assert!(r.max_eigen_residual < 1e-10);

    let u = HardyCoefficients::from_fn(256, |k| if k % 2 == 0 { c(2.0 * 0.3f64.powi(k as i32 / 2), 0.0) } else { c(0.0, 0.0) });
    let prof = n_pole_profile(2, c(0.3, 0.0), 256).unwrap();
    assert!(u.distance(&prof.u) < 1e-15);
    let r = verify_au_minus_d(&u, prof.varpi).unwrap();
    assert_eq!(r.sigmas.len(), 1);
    assert_eq!(r.sigmas[0].n, 2);
    assert!(r.sigmas[0].zeta.norm() > 1e-3);
    assert!(r.sigmas[0].ladder_residual < 1e-10);

    let r = verify_au_minus_d(&HardyCoefficients::constant(c(1.5, 0.0), 8), 1.0).unwrap();
    assert!(r.sigmas.is_empty());

    // A profile fed the wrong ϖ is not an eigenvector.
    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.6, 0.0), 512);
    assert!(matches!(verify_au_minus_d(&u, 5.0), Err(Error::NotEigenvector { .. })));
}

#[test]
fn spectral_examples() {
    let u = V3State::new(c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)).unwrap().to_hardy(64);
    let r = spectral_report(&u, 1e-10).unwrap();
    assert_eq!((r.rank_h, r.rank_k), (2, 1));

    let u = n_pole_profile(3, c(0.4, 0.0), 256).unwrap().u;
    let r = spectral_report(&u, 1e-10).unwrap();
    assert_eq!(r.rank_k, 3);
    let k = &r.k2_eigs;
    assert!((k[0] - k[2]).abs() < 1e-10 * k[0]);
    let kdom: Vec<_> = r.dominance.iter().filter(|d| d.label == DominanceLabel::K).collect();
    assert_eq!(kdom.len(), 1);
    assert_eq!(kdom[0].dim_f, 3);

    let u = HardyCoefficients::geometric(c(1.0, 0.0), c(0.5, 0.0), 64);
    let r = spectral_report(&u, 1e-10).unwrap();
    assert_eq!((r.rank_h, r.rank_k), (1, 1));
    assert!(r.reconstruction_residual < 1e-10);
}

#[test]
fn ranks_along_trajectories() {
    let cfg = SimulationConfig { dt: 1e-3, t_final: 0.5, trunc: 128, monitor_stride: 100, tol_drift: 1e-8, n_k2_eigs: 2 };
    let v2 = HardyCoefficients::geometric(c(0.8, 0.1), c(0.3, -0.4), 128);
    let h = rank_history(&integrate(&v2, &cfg).unwrap(), 2, 1e-10);
    assert!(h.preserved && h.ranks.iter().all(|&r| r == (1, 1)));
    let v3 = V3State::new(c(0.3, 0.1), c(1.0, 0.0), c(0.4, 0.0)).unwrap().to_hardy(128);
    let h = rank_history(&integrate(&v3, &cfg).unwrap(), 3, 1e-10);
    assert!(h.preserved && h.ranks.iter().all(|&r| r == (2, 1)));
}

#[test]
fn v3_vector_field_is_the_pde_pushed_forward() {
    let states = [
        V3State::new(c(0.3, 0.1), c(1.0, 0.0), c(0.4, 0.0)).unwrap(),
        V3State::new(c(-0.2, 0.5), c(0.4, -0.7), c(0.1, 0.55)).unwrap(),
        V3State::v_r(0.25).unwrap(),
    ];
    for s in states {
        let d = v3_rhs(&s).unwrap();
        let m = 200;
        let f = rhs(&s.to_hardy(m));
        let mut pp = c(1.0, 0.0);
        let mut pk = c(0.0, 0.0);
        for k in 0..m {
            let expect = match k {
                0 => d.b,
                _ => {
                    // d/dt (c p^{k-1}) = ċ p^{k-1} + (k-1) c p^{k-2} ṗ
                    let v = d.c * pp + s.c * pk * d.p * (k as f64 - 1.0);
                    pk = pp;
                    pp *= s.p;
                    v
                }
            };
            assert!((f.get(k) - expect).norm() < 1e-12, "k = {k}");
        }
        let inv = conserved(&s.to_hardy(m));
        let dd = s.derived();
        assert!((inv.q - dd.q).abs() < 1e-12 && (inv.m - dd.m).abs() < 1e-12);
        assert!((inv.j - dd.j).norm() < 1e-12);
    }
}

#[test]
fn v_r_closed_forms() {
    let r = 0.25;
    let s = V3State::v_r(r).unwrap();
    assert!((s.b - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
    let k = vr_constants(r);
    let inv = conserved(&s.to_hardy(200));
    assert!((inv.q - k.q).abs() < 1e-13);
    assert!((inv.m - k.m).abs() < 1e-13);
    assert!((inv.j - c(k.j, 0.0)).norm() < 1e-13);
    assert!((k.j.abs() - 0.629630).abs() < 5e-7);
    let d = v3_rhs(&s).unwrap();
    assert!((d.p.norm() - 0.314815).abs() < 5e-7);
    assert!((leading_coefficient(r) - 0.329218).abs() < 5e-7);
    assert!((second_coefficient(r) + 0.081288).abs() < 5e-7);
}

#[test]
fn v_r_is_a_traveling_wave_of_the_ode() {
    let s = V3State::v_r(0.25).unwrap();
    let traj = v3_integrate(&s, 1e-4, 10.0).unwrap();
    let x_r = vr_constants(0.25).x;
    assert!((x_r - 1.0 / 3.0).abs() < 1e-15);
    for d in &traj.derived {
        assert!((d.x - x_r).abs() < 1e-8);
        assert!((d.psi.abs() - PI).abs() < 1e-6);
    }
    assert!(traj.max_drift() < 1e-10);
    assert!(evolx_residual(&traj) < 1e-6);
}

#[test]
fn delta_ecal_closed_form_matches_the_states() {
    let k = vr_constants(0.25);
    for gamma in [1e-3, 1e-2, 0.1, 0.5] {
        let d = V3State::perturbed(0.25, gamma).unwrap().derived();
        assert!((d.q - k.q).abs() < 1e-14 && (d.m - k.m).abs() < 1e-14);
        let de = d.ecal - k.ecal;
        assert!(de > 0.0);
        assert!((de - delta_ecal_closed_form(0.25, gamma)).abs() < 1e-12 * (1.0 + de.abs()).max(1e-3) + 1e-15);
    }
}

#[test]
fn unperturbed_experiment_stays_put() {
    let cfg = InstabilityConfig { gamma: 0.0, t_final: 5.0, dt: 1e-3, ..Default::default() };
    let rep = match instability_experiment_with(&cfg) {
        Err(Error::NoEscape { report, .. }) => *report,
        other => panic!("expected NO_ESCAPE, got {other:?}"),
    };
    assert!(rep.delta_ecal.abs() < 1e-14);
    assert!(rep.forward.max_abs_y < 1e-10 && rep.backward.max_abs_y < 1e-10);
}

#[test]
fn steady_worked_example() {
    let p = SteadyV3Params::new(1.0, 0.0, 0.0, PI / 6.0).unwrap();
    let u = build_steady(&p, 512).unwrap();
    assert!((u.get(0) - c(-(3f64.sqrt()) / 3.0, 0.0)).norm() < 1e-15);
    assert!((u.get(1) - c(4.0 / (3.0 * 11f64.sqrt()), 0.0)).norm() < 1e-15);
    assert!(conserved(&u).j.norm() < 1e-13);
    assert!(rhs(&u).norm() < 1e-13);
}

#[test]
fn standing_arc_rejects_full_circle() {
    use szego_core::traveling::standing_wave_arc;
    assert!(standing_wave_arc(1.0, &[Arc::new(0.0, 2.0 * PI)], 64).is_err());
    assert!(matches!(
        standing_wave_arc(0.3, &[Arc::new(0.0, PI / 2.0)], 64),
        Err(Error::MeasureMismatch { .. })
    ));
}

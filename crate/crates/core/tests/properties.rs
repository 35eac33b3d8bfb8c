use proptest::prelude::*;

use szego_core::compose::compose_zn;
use szego_core::dynamics::{integrate, rhs, SimulationConfig};
use szego_core::hardy::{coshift, conserved, inner_product, multiply, shift, szego_project};
use szego_core::operators::{hankel, shifted_hankel, CMatrix};
use szego_core::steady::{steady_residuals, SteadyV3Params};
use szego_core::traveling::{build_profile, residual_traveling, Family, TravelingWaveSpec};
use szego_core::v3::{energy_v3, V3State};
use szego_core::{HardyCoefficients, TwoSided, C64};

fn coeff() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn state(max: usize) -> impl Strategy<Value = HardyCoefficients> {
    prop::collection::vec(coeff(), 1..=max).prop_map(HardyCoefficients::new)
}

fn two_sided(half: i64) -> impl Strategy<Value = TwoSided> {
    prop::collection::vec(coeff(), (2 * half + 1) as usize).prop_map(move |v| {
        let pairs: Vec<(i64, C64)> = v.into_iter().enumerate().map(|(i, c)| (i as i64 - half, c)).collect();
        TwoSided::from_pairs(&pairs)
    })
}

fn disc_point(max: f64) -> impl Strategy<Value = C64> {
    (0.0..max, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_is_self_adjoint_and_idempotent(f in two_sided(8), g in state(9)) {
        let pf = szego_project(&f);
        let lhs = inner_product(&pf, &g);
        let rhs: C64 = (0..g.trunc() as i64).map(|k| f.get(k) * g.get(k as usize).conj()).sum();
        prop_assert!((lhs - rhs).norm() < 1e-14);
        prop_assert_eq!(szego_project(&TwoSided::from_hardy(&pf)), pf);
    }

    #[test]
    fn shift_identities(u in state(12)) {
        prop_assert_eq!(coshift(&shift(&u)), u.clone());
        let back = shift(&coshift(&u));
        let expect = &u - &HardyCoefficients::constant(u.get(0), 1);
        prop_assert!(back.max_diff(&expect) == 0.0);
    }

    #[test]
    fn conserved_quantities_are_rotation_invariant(u in state(16), th in -3.0f64..3.0, al in -3.0f64..3.0) {
        let a = conserved(&u);
        let b = conserved(&u.rotate(th, al));
        let s = 1.0 + a.q.powi(2);
        prop_assert!((a.q - b.q).abs() < 1e-13 * s);
        prop_assert!((a.m - b.m).abs() < 1e-12 * s);
        prop_assert!((a.e - b.e).abs() < 1e-12 * s * s);
    }

    #[test]
    fn gagliardo_nirenberg_holds(u in state(20)) {
        let inv = conserved(&u);
        prop_assert!(inv.e <= inv.gagliardo_bound() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn hankel_squares_differ_by_rank_one(u in state(14)) {
        prop_assume!(u.trunc() >= 2);
        let h = hankel(&u).unwrap();
        let k = shifted_hankel(&u).unwrap();
        prop_assert_eq!(h.entries.transpose(), h.entries.clone());
        let n = u.trunc();
        let uu = CMatrix::from_fn(n, n, |i, j| u.get(i) * u.get(j).conj());
        let diff = h.square() - k.square() - uu;
        prop_assert!(diff.norm() < 1e-13 * (1.0 + u.norm_sqr()));
    }

    #[test]
    fn mass_is_a_first_integral_of_the_truncated_field(u in state(24)) {
        // Re (rhs | u) = Re(-3i |J|²) = 0.
        let d = inner_product(&rhs(&u), &u);
        prop_assert!(d.re.abs() < 1e-13 * (1.0 + u.norm_sqr().powi(2)));
    }

    #[test]
    fn integration_is_reversible(u in state(10)) {
        let u = &u * (0.5 / (1.0 + u.norm()));
        let fwd = SimulationConfig { dt: 1e-3, t_final: 0.2, trunc: 10, monitor_stride: 1000, tol_drift: 1e-6, n_k2_eigs: 0 };
        let there = integrate(&u, &fwd).unwrap();
        let back = SimulationConfig { t_final: -0.2, ..fwd };
        let home = integrate(there.final_state(), &back).unwrap();
        prop_assert!(home.final_state().distance(&u.resized(10)) < 1e-10);
    }

    #[test]
    fn composition_is_an_isometric_homomorphism(u in state(10), v in state(10), n in 1usize..5) {
        let cu = compose_zn(&u, n).unwrap();
        prop_assert!((cu.norm() - u.norm()).abs() <= 4.0 * f64::EPSILON * u.norm());
        let (a, b) = (conserved(&u).j, conserved(&cu).j);
        prop_assert!((a - b).norm() <= 1e-14 * (1.0 + a.norm()));
        let lhs = compose_zn(&multiply(&u, &v), n).unwrap();
        let rhs = multiply(&cu, &compose_zn(&v, n).unwrap());
        prop_assert!(lhs.max_diff(&rhs) == 0.0);
    }

    #[test]
    fn steady_family_is_steady_everywhere(
        lambda in 0.1f64..3.0, a in -3.0f64..3.0, b in -3.0f64..3.0, theta in 0.0f64..1.04,
    ) {
        let r = steady_residuals(&SteadyV3Params::new(lambda, a, b, theta).unwrap()).unwrap();
        let s = lambda.powi(3);
        prop_assert!(r.j_abs < 1e-12 * s);
        prop_assert!(r.rhs_norm < 1e-11 * s * lambda.powi(2));
        prop_assert!(r.p_abs < 1.0);
    }

    #[test]
    fn traveling_profiles_solve_their_equation(
        two in any::<bool>(), lambda in disc_point(1.5), p in disc_point(0.7), n in 1usize..4,
    ) {
        prop_assume!(lambda.norm() > 0.05 && p.norm() > 1e-3);
        let fam = if two { Family::II } else { Family::I };
        let spec = TravelingWaveSpec::new(fam, lambda, p, n).unwrap();
        let v0 = build_profile(&spec, spec.min_trunc()).unwrap();
        let scale = spec.omega.abs().max(1.0) * v0.norm();
        prop_assert!(residual_traveling(&v0, spec.omega, spec.c) < 1e-12 * scale);
    }

    #[test]
    fn v3_energy_identity(b in disc_point(2.0), c in disc_point(2.0), p in disc_point(0.9)) {
        prop_assume!(c.norm() > 1e-3 && (c - b * p).norm() > 1e-3);
        let s = V3State::new(b, c, p).unwrap();
        let d = s.derived();
        let e = energy_v3(d.q, d.m, d.x, d.psi);
        prop_assert!((e - d.ecal).abs() < 1e-11 * (1.0 + d.q.powi(3)));
    }

    #[test]
    fn state_json_round_trip_is_exact(u in state(16)) {
        let text = serde_json::to_string(&u).unwrap();
        let back: HardyCoefficients = serde_json::from_str(&text).unwrap();
        prop_assert!(back.coeffs().iter().zip(u.coeffs()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }
}

use std::f64::consts::PI;

use fanocav::config::SimConfig;
use fanocav::dynamics::{unvec_op, vec_op, Liouvillian, Op, SystemBasis};
use fanocav::ldos::{Cavity, EmitterCoupling};
use fanocav::mapping::{constrained_pair, mapped_spectral_density, MappedPair};
use fanocav::observables::AxisSpec;
use fanocav::phonons::{franck_condon, PhononCorrelations, PhononEnv};
use fanocav::scattering::{fano_reflectivity, fano_transmittivity, CavityGeometry, ConstantMirror, FanoMirror, Parity};
use fanocav::Complex64 as C64;
use proptest::prelude::*;

fn parity() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Even), Just(Parity::Odd)]
}

fn pair() -> impl Strategy<Value = MappedPair> {
    (0.01..0.3f64, -3.0..3.0f64, -3.0..3.0f64, 0.1..4.0f64, 0.05..(PI - 0.05), 0.1..4.0f64, 0.1..4.0f64)
        .prop_map(|(g, d1, d2, v0, phi, k1, k2)| MappedPair::new(g, 1000.0 + d1, 1000.0 + d2, v0, phi, k1, k2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lossless_mirror_is_unitary(r_b in -0.95..-0.05f64, g1 in 0.1..3.0f64, chi in 0.3..3.0f64, p in parity(), dw in -20.0..20.0f64) {
        // a real coupling phase needs 4χ >= t_B² (1 + χ)²
        prop_assume!(4.0 * chi >= (1.0 - r_b * r_b) * (1.0 + chi).powi(2));
        let m = FanoMirror::with_chi(r_b, g1, chi, 0.0, 100.0, p).unwrap();
        let z = C64::new(100.0 + dw, 0.0);
        let s = fano_reflectivity(&m, z).unwrap().norm_sqr() + fano_transmittivity(&m, z).unwrap().norm_sqr();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lossy_mirror_is_passive(r_b in -0.95..-0.05f64, gf in 0.1..3.0f64, loss in 0.001..1.0f64, p in parity(), dw in -20.0..20.0f64) {
        let m = FanoMirror::symmetric(r_b, gf, loss, 100.0, p).unwrap();
        let z = C64::new(100.0 + dw, 0.0);
        let s = fano_reflectivity(&m, z).unwrap().norm_sqr() + fano_transmittivity(&m, z).unwrap().norm_sqr();
        prop_assert!(s < 1.0 + 1e-12);
    }

    #[test]
    fn ldos_is_non_negative(gf in 0.2..3.0f64, x in -1.0..1.0f64, dw in -15.0..15.0f64) {
        let m = FanoMirror::symmetric(-0.7, gf, 0.01, 3172.4, Parity::Even).unwrap();
        let geometry = CavityGeometry::new(10.0, C64::new(-1.0, 0.0), x).unwrap();
        let cavity = Cavity::new(m.response().unwrap(), geometry, 6e-4);
        prop_assert!(cavity.ldos(x, 3173.0 + dw).unwrap() >= -1e-15);
    }

    #[test]
    fn fabry_perot_ldos_has_closed_form_at_zero_reflectivity(w in 0.0..100.0f64) {
        let cavity = Cavity::new(ConstantMirror::new(0.0).unwrap(), CavityGeometry::standard(10.0), 6e-4);
        let j = cavity.ldos(0.0, w).unwrap();
        prop_assert!((j - 6e-4 * (1.0 - (w / 10.0).cos())).abs() < 1e-15);
    }

    #[test]
    fn mapped_density_is_non_negative(p in pair(), dw in -30.0..30.0f64) {
        prop_assert!(mapped_spectral_density(&p, 1000.0 + dw) >= -1e-15);
    }

    #[test]
    fn poles_and_residues_determine_the_pair(p in pair()) {
        let [a, b] = p.complex_poles();
        let q = constrained_pair(b.z, a.z, b.residue, a.residue, p.omega_2 - p.omega_1, p.kappa_2).unwrap();
        prop_assert!((q.v0 - p.v0).abs() < 1e-7 * (1.0 + p.v0));
        prop_assert!((q.varphi - p.varphi).abs() < 1e-6);
        prop_assert!((q.g - p.g).abs() < 1e-12);
        prop_assert!((q.kappa_1 - p.kappa_1).abs() < 1e-9);
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity(p in pair(), alpha in 0.0..0.1f64, dw in -2.0..2.0f64) {
        let corr = PhononCorrelations::tabulate(&PhononEnv::new(alpha, 1.45, 4.0).unwrap(), 0.02, 1e-8).unwrap();
        let em = EmitterCoupling::new(6e-4, 3e-5, 1000.0 + dw).unwrap();
        let l = Liouvillian::assemble(&p, &em, &corr, em.omega_eg).unwrap();
        let mut rho = Op::zeros();
        rho[(SystemBasis::E00, SystemBasis::E00)] = C64::new(0.6, 0.0);
        rho[(SystemBasis::G10, SystemBasis::G10)] = C64::new(0.4, 0.0);
        rho[(SystemBasis::E00, SystemBasis::G10)] = C64::new(0.1, 0.2);
        rho[(SystemBasis::G10, SystemBasis::E00)] = C64::new(0.1, -0.2);
        let d = unvec_op(&(l.matrix * vec_op(&rho)));
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!((d - d.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn franck_condon_factor_decreases_with_temperature(alpha in 0.01..0.1f64, t in 1.0..50.0f64) {
        let cold = franck_condon(&PhononEnv::new(alpha, 1.45, t).unwrap()).unwrap();
        let hot = franck_condon(&PhononEnv::new(alpha, 1.45, 2.0 * t).unwrap()).unwrap();
        prop_assert!(hot < cold && cold <= 1.0 && hot > 0.0);
    }

    #[test]
    fn axis_is_uniform_and_inclusive(min in -5.0..5.0f64, span in 0.0..10.0f64, n in 2usize..50) {
        let v = AxisSpec { min, max: min + span, points: n }.values().unwrap();
        prop_assert_eq!(v.len(), n);
        prop_assert!((v[0] - min).abs() < 1e-12 && (v[n - 1] - min - span).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips(gf in 0.1..3.0f64, alpha in 0.0..0.2f64, seed in any::<u64>()) {
        let json = format!(
            r#"{{"schema_version": 1, "geometry": {{"fsr": 10.0}},
                "mirror": {{"r_b": -0.7, "gamma_f": {gf}, "gamma_0": 0.01, "omega_f": 3172.4, "parity": -1}},
                "emitter": {{"gamma_0": 6e-4, "gamma_r": 3e-5, "omega_eg": 3173.0}},
                "phonons": {{"alpha": {alpha}, "nu_c": 1.45, "temperature": 4.0}},
                "fit": {{"seed": {seed}}}}}"#
        );
        let c = SimConfig::from_json(&json).unwrap();
        let back = SimConfig::from_json(&c.to_json().unwrap()).unwrap();
        prop_assert_eq!(c.hash(), back.hash());
        prop_assert_eq!(back, c);
    }
}

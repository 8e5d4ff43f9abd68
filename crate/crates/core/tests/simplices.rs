//! Seeded property checks on random geodesic simplices.

use proptest::prelude::*;
use repvol::fixtures::random_simplex;
use repvol::minkowski::Isometry;
use repvol::simplex::{area_defect, face_lattice, generalized_angle_sum, interior_angle, volume_hopf, AngleConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn triangle_hopf_matches_defect(seed in 0u64..10_000, radius in 0.2f64..4.0) {
        let t = random_simplex(2, radius, seed).unwrap();
        let h = volume_hopf(&t, &AngleConfig::new(seed)).unwrap();
        prop_assert!(h.exact);
        prop_assert!((h.value - area_defect(&t).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn angles_are_isometry_invariant(seed in 0u64..10_000, t in -1.5f64..1.5, a in 0.0f64..6.3) {
        let s = random_simplex(3, 1.0, seed).unwrap();
        let g = Isometry::boost(3, 2, t).compose(&Isometry::rotation(3, 1, 3, a));
        let moved = s.transformed(&g);
        let cfg = AngleConfig::new(seed).with_samples(4_000);
        for f in face_lattice(&s) {
            let x = interior_angle(&s, &f, &cfg).unwrap();
            let y = interior_angle(&moved, &f, &cfg).unwrap();
            prop_assert!((x.value - y.value).abs() < 1e-9 || (!x.exact && (x.value - y.value).abs() < 6.0 * x.stderr.hypot(y.stderr) + 1e-3));
        }
    }
}

#[test]
fn same_seed_same_estimate() {
    let t = random_simplex(4, 1.0, 8).unwrap();
    let cfg = AngleConfig::new(42).with_samples(30_000);
    assert_eq!(generalized_angle_sum(&t, &cfg).unwrap(), generalized_angle_sum(&t, &cfg).unwrap());
    assert_ne!(generalized_angle_sum(&t, &cfg.with_seed(43)).unwrap(), generalized_angle_sum(&t, &cfg).unwrap());
}

//! Angle at the apex of a 4-simplex whose other vertices are squeezed onto a
//! totally geodesic plane through the apex.
//!
//! The tangent cone at the apex is `D_eps C`, with `D_eps` shrinking the two
//! normal directions. If the in-plane directions to the other vertices lie in
//! an open half-plane, the angle tends to 0. If they surround the apex, the
//! cone tends to `plane x K`. Here `K` is the positive span, in the normal
//! plane, of the normal offsets along the positive dependencies of the
//! in-plane directions. The angle then tends to `angle(K) / 2 pi`, not to 0.

use std::f64::consts::PI;

use repvol::minkowski::{HPoint, Point};
use repvol::simplex::{interior_angle, AngleConfig, Face, GeodesicSimplex};

fn point(x: [f64; 4]) -> Point {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    Point::Finite(HPoint::from_coords(vec![(1.0 + r2).sqrt(), x[0], x[1], x[2], x[3]]).unwrap())
}

const NORMALS: [[f64; 2]; 4] = [[1.0, 0.0], [-1.0, 0.2], [0.0, 1.0], [0.0, -1.0]];

fn apex_angle(directions: [f64; 4], eps: f64) -> (f64, f64) {
    let mut v = vec![point([0.0; 4])];
    for (a, n) in directions.iter().zip(NORMALS) {
        v.push(point([0.8 * a.cos(), 0.8 * a.sin(), eps * n[0], eps * n[1]]));
    }
    let t = GeodesicSimplex::new(v, 4).unwrap();
    let cfg = AngleConfig::new(11).with_samples(400_000);
    let w = interior_angle(&t, &Face::new(vec![0], 4).unwrap(), &cfg).unwrap();
    (w.value, w.stderr)
}

#[test]
fn surrounded_apex_keeps_its_angle() {
    // Dependencies: lambda_1 = lambda_3, lambda_2 = lambda_4.
    let k1 = [NORMALS[0][0] + NORMALS[2][0], NORMALS[0][1] + NORMALS[2][1]];
    let k2 = [NORMALS[1][0] + NORMALS[3][0], NORMALS[1][1] + NORMALS[3][1]];
    let cos = (k1[0] * k2[0] + k1[1] * k2[1]) / (k1[0].hypot(k1[1]) * k2[0].hypot(k2[1]));
    let limit = cos.acos() / (2.0 * PI);
    for eps in [1e-2, 1e-3] {
        let (w, se) = apex_angle([0.0, 0.5 * PI, PI, 1.5 * PI], eps);
        assert!((w - limit).abs() < 4.0 * se + 0.01, "eps {eps}: {w} +- {se} vs {limit}");
    }
    assert!(limit > 0.45);
}

#[test]
fn apex_outside_the_hull_loses_its_angle() {
    let (w, _) = apex_angle([0.0, 0.3, 0.6, 0.9], 1e-3);
    assert!(w < 1e-3, "{w}");
}

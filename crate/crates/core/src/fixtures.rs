//! Ready-made simplices, complexes and representations used by the tests,
//! the acceptance suite and `repvol fixtures emit`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;

use crate::complex::{build_cone_complex, build_double_cone, Complex, FacePairing, FacetSlot, GlueOptions, TopSimplex, VertexRecord};
use crate::cusp::{Covering, CuspExperiment, ToricTarget};
use crate::develop::{epsilon_sign, EquivariantMap, Representation};
use crate::error::Result;
use crate::minkowski::{exp_map, random_unit_tangent, HPoint, IdealPoint, Isometry, MinkowskiVector, Point};
use crate::rng::rng_from;
use crate::simplex::{weighted_basepoint, Face, GeodesicSimplex};

/// A non-degenerate compact top simplex in H^m with vertices within
/// `radius` of the origin.
pub fn random_simplex(m: usize, radius: f64, seed: u64) -> Result<GeodesicSimplex> {
    let mut rng = rng_from(seed);
    let o = HPoint::origin(m);
    loop {
        let vertices: Vec<Point> = (0..=m)
            .map(|_| {
                let u = random_unit_tangent(&o, &mut rng);
                Point::Finite(exp_map(&u, radius * rng.gen_range(0.3..=1.0)))
            })
            .collect();
        let s = GeodesicSimplex::new(vertices, m)?;
        if s.singular_ratio() > 1e-3 * radius.min(1.0) {
            return Ok(s);
        }
    }
}

/// Point at distance `r` from the origin in direction `angle` of the
/// `(x1, x2)` plane of H^m.
pub fn polar(m: usize, r: f64, angle: f64) -> Point {
    let mut c = vec![0.0; m + 1];
    c[0] = r.cosh();
    c[1] = r.sinh() * angle.cos();
    c[2] = r.sinh() * angle.sin();
    Point::Finite(HPoint::from_coords(c).expect("polar point lies on the hyperboloid"))
}

/// Reflection of H^m in the hyperplane `x1 = 0`.
pub fn reflection_x(m: usize) -> Isometry {
    Isometry::reflection(&MinkowskiVector::basis(m, 1)).expect("basis vector is spacelike")
}

fn glued(k: &Complex, opts: GlueOptions) -> Arc<crate::complex::GluedComplex> {
    Arc::new(k.glue(opts).expect("fixture complex glues"))
}

/// Orientation making the image of `verts` positively oriented.
fn orient(images: &BTreeMap<usize, Point>, verts: &[usize], m: usize) -> i8 {
    let t = GeodesicSimplex::new(verts.iter().map(|v| images[v].clone()).collect(), m).unwrap();
    epsilon_sign(&t, 1)
}

/// Closed genus-2 surface: the regular octagon with vertex angle pi/4,
/// coned from its centre into eight triangles, sides `i` and `i + 2` paired
/// for `i` in {0, 1, 4, 5}. The map is the developing map of the hyperbolic
/// structure (identity on the octagon).
pub fn genus2() -> (Complex, EquivariantMap) {
    let cot = 1.0 / (PI / 8.0).tan();
    let r = (cot * cot).acosh();
    let theta = |k: usize| 2.0 * PI * (k % 8) as f64 / 8.0 + PI / 8.0;
    let corner = |k: usize| polar(2, r, theta(k));
    let id = |k: usize| k % 8 + 1;

    let mut images = BTreeMap::new();
    images.insert(0, Point::Finite(HPoint::origin(2)));
    for k in 0..8 {
        images.insert(id(k), corner(k));
    }
    let top: Vec<TopSimplex> = (0..8)
        .map(|k| {
            let verts = vec![0, id(k), id(k + 1)];
            TopSimplex { orientation: orient(&images, &verts, 2), verts }
        })
        .collect();

    let mut generators = Vec::new();
    let mut pairings = Vec::new();
    for (g, i) in [0usize, 1, 4, 5].into_iter().enumerate() {
        let (p, q) = (corner(i + 2).rep().clone(), corner(i + 3).rep().clone());
        let (a, b) = (p.coords(), q.coords());
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let side = Isometry::reflection(&MinkowskiVector::new(vec![-cross[0], cross[1], cross[2]]).unwrap()).unwrap();
        let phi = theta(i + 2) + PI / 8.0;
        let bisector = Isometry::reflection(&MinkowskiVector::new(vec![0.0, -phi.sin(), phi.cos()]).unwrap()).unwrap();
        generators.push(side.compose(&bisector).compose(&Isometry::rotation(2, 1, 2, PI / 2.0)));
        pairings.push(FacePairing {
            a: FacetSlot { simplex: i, opposite: 0 },
            b: FacetSlot { simplex: i + 2, opposite: 0 },
            map: vec![[id(i), id(i + 3)], [id(i + 1), id(i + 2)]],
            word: vec![g as i32 + 1],
        });
    }
    let k = Complex { dim: 2, ends: 0, vertices: (0..=8).map(VertexRecord::interior).collect(), top, pairings };
    let rep = Representation::new(generators, 2).unwrap();
    let f = EquivariantMap::new(glued(&k, GlueOptions::closed()), rep, images).expect("genus-2 map is equivariant");
    (k, f)
}

/// Boundary point of H^2 for `t` on the real line of the upper half-plane.
fn boundary(t: Option<f64>) -> IdealPoint {
    let c = match t {
        None => vec![1.0, 1.0, 0.0],
        Some(t) => vec![1.0, (t * t - 1.0) / (t * t + 1.0), -2.0 * t / (t * t + 1.0)],
    };
    IdealPoint::from_coords(c).unwrap()
}

fn punctured_torus_complex() -> Complex {
    Complex {
        dim: 2,
        ends: 1,
        vertices: (0..4).map(|v| VertexRecord::cusp(v, 0)).collect(),
        top: vec![TopSimplex { verts: vec![0, 1, 2], orientation: 1 }, TopSimplex { verts: vec![2, 3, 0], orientation: 1 }],
        pairings: vec![
            FacePairing {
                a: FacetSlot { simplex: 0, opposite: 2 },
                b: FacetSlot { simplex: 1, opposite: 2 },
                map: vec![[1, 2], [0, 3]],
                word: vec![1],
            },
            FacePairing {
                a: FacetSlot { simplex: 1, opposite: 0 },
                b: FacetSlot { simplex: 0, opposite: 0 },
                map: vec![[3, 2], [0, 1]],
                word: vec![2],
            },
        ],
    }
}

/// Once-punctured torus: the ideal quadrilateral with vertices `inf, -1, 0, 1`
/// (vertex ids 0..3, all the one cusp) split along `0 inf`, with the
/// holonomy `A(z) = (z+1)/(z+2)`, `B(z) = (z-1)/(2-z)`.
pub fn punctured_torus() -> (Complex, EquivariantMap) {
    let mut k = punctured_torus_complex();
    let pts = [None, Some(-1.0), Some(0.0), Some(1.0)];
    let images: BTreeMap<usize, Point> = pts.iter().enumerate().map(|(i, t)| (i, Point::Ideal(boundary(*t)))).collect();
    let a = Isometry::from_ideal_triples(
        [&boundary(Some(-1.0)), &boundary(None), &boundary(Some(1.0))],
        [&boundary(Some(0.0)), &boundary(Some(1.0)), &boundary(Some(2.0 / 3.0))],
    )
    .unwrap();
    let b = Isometry::from_ideal_triples(
        [&boundary(Some(1.0)), &boundary(None), &boundary(Some(-1.0))],
        [&boundary(Some(0.0)), &boundary(Some(-1.0)), &boundary(Some(-2.0 / 3.0))],
    )
    .unwrap();
    for t in &mut k.top {
        t.orientation = orient(&images, &t.verts, 2);
    }
    let rep = Representation::new(vec![a, b], 2).unwrap();
    let f = EquivariantMap::new(glued(&k, GlueOptions::closed()), rep, images).expect("punctured-torus map is equivariant");
    (k, f)
}

/// The punctured-torus complex with holonomy `A`, `B` the translations by
/// `a`, `b` along the perpendicular axes x1, x2. The commutator `A^-1 B^-1 A B`
/// is elliptic for the bundled parameters and the cusp goes to its fixed
/// point, so the normalized volume is a continuous, generally non-integral
/// function of `(a, b)`.
pub fn punctured_torus_finite(a: f64, b: f64) -> Result<EquivariantMap> {
    let k = punctured_torus().0;
    let ra = Isometry::boost(2, 1, a);
    let rb = Isometry::boost(2, 2, b);
    let comm = ra.inverse().compose(&rb.inverse()).compose(&ra).compose(&rb);
    let p = Point::Finite(elliptic_fixed_point(&comm)?);
    let images = BTreeMap::from([
        (0, p.clone()),
        (1, rb.apply(&p)),
        (2, ra.compose(&rb).apply(&p)),
        (3, ra.apply(&p)),
    ]);
    let rep = Representation::new(vec![ra, rb], 2)?;
    EquivariantMap::new(Arc::new(k.glue(GlueOptions::closed())?), rep, images)
}

/// The fixed point in H^m of an elliptic isometry.
fn elliptic_fixed_point(g: &Isometry) -> Result<HPoint> {
    let n = g.matrix().nrows();
    let a = g.matrix() - nalgebra::DMatrix::<f64>::identity(n, n);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let i = svd.singular_values.imin();
    let v: Vec<f64> = vt.row(i).iter().copied().collect();
    let v = MinkowskiVector::new(v)?;
    if !(v.norm_sq() < 0.0) {
        return Err(crate::error::Error::InvalidIsometry("isometry has no fixed point inside H^m".into()));
    }
    HPoint::normalize(&v.scaled(v.coords()[0].signum()))
}

/// Parameters of the bundled finite-cusp configuration.
pub const FINITE_TORUS: (f64, f64) = (1.2, 0.8);

/// A 2-sphere (bipyramid over a hexagon, apex 0, bottom 7) whose equator
/// winds twice around the image of the apex: the census and the local degree
/// at vertex 0 are both 2.
pub fn winding_star() -> EquivariantMap {
    let radii = [1.0, 1.2, 0.9, 1.1, 0.8, 1.3];
    let mut images = BTreeMap::from([(0, Point::Finite(HPoint::origin(2))), (7, polar(2, 0.05, 0.3))]);
    for k in 1..=6 {
        images.insert(k, polar(2, radii[k - 1], 4.0 * PI * (k - 1) as f64 / 6.0));
    }
    let next = |k: usize| k % 6 + 1;
    let or = orient(&images, &[0, 1, 2], 2);
    let mut top: Vec<TopSimplex> = (1..=6).map(|k| TopSimplex { verts: vec![0, k, next(k)], orientation: or }).collect();
    top.extend((1..=6).map(|k| TopSimplex { verts: vec![7, next(k), k], orientation: or }));
    let k = Complex { dim: 2, ends: 0, vertices: (0..8).map(VertexRecord::interior).collect(), top, pairings: vec![] };
    EquivariantMap::new(glued(&k, GlueOptions::closed()), Representation::trivial(2, 0), images).unwrap()
}

/// Boundary of the 5-simplex mapped into H^4 with vertex 0 inside the
/// simplex spanned by the images of 1..5: local degree 1 at faces through
/// vertex 0, 0 at the other proper faces, -1 on the big top simplex.
pub fn sphere4() -> (Complex, EquivariantMap) {
    let outer = random_simplex(4, 1.2, 41).unwrap();
    let inner = weighted_basepoint(&outer, &Face::new((0..5).collect(), 4).unwrap(), &[0.3, 0.25, 0.2, 0.15, 0.1]).unwrap();
    let mut images = BTreeMap::from([(0, Point::Finite(inner))]);
    for (i, p) in outer.vertices().iter().enumerate() {
        images.insert(i + 1, p.clone());
    }
    let c = -orient(&images, &[0, 1, 2, 3, 4], 4);
    let top = (0..6)
        .map(|i| TopSimplex {
            verts: (0..6).filter(|&v| v != i).collect(),
            orientation: if i % 2 == 0 { c } else { -c },
        })
        .collect();
    let k = Complex { dim: 4, ends: 0, vertices: (0..6).map(VertexRecord::interior).collect(), top, pairings: vec![] };
    let f = EquivariantMap::new(glued(&k, GlueOptions::closed()), Representation::trivial(4, 0), images).unwrap();
    (k, f)
}

/// A circle of `n` edges on vertex ids `0..=n`, closed by generator 1.
pub fn circle(n: usize) -> Complex {
    Complex {
        dim: 1,
        ends: 0,
        vertices: (0..=n).map(VertexRecord::interior).collect(),
        top: (0..n).map(|i| TopSimplex { verts: vec![i, i + 1], orientation: 1 }).collect(),
        pairings: vec![FacePairing {
            a: FacetSlot { simplex: 0, opposite: 1 },
            b: FacetSlot { simplex: n - 1, opposite: 0 },
            map: vec![[0, n]],
            word: vec![1],
        }],
    }
}

/// Cone over an `n`-gon circle with apex (cusp) at the origin of H^2,
/// holonomy the rotation by `2 pi turns`, and cross-section images turning
/// `turns` times around the apex; the cusp census is `turns`. The radii
/// repeat with period 3, so `cone_circle(3k, k t)` covers `cone_circle(3, t)`;
/// `n` must be a multiple of 3.
pub fn cone_circle(n: usize, turns: f64) -> (Complex, EquivariantMap) {
    assert!(n % 3 == 0 && n > 0, "cone_circle needs a positive multiple of 3 edges");
    let k = build_cone_complex(&circle(n), 0).unwrap();
    let phi = 2.0 * PI * turns / n as f64;
    let mut images: BTreeMap<usize, Point> =
        (0..=n).map(|i| (i, polar(2, 0.8 + 0.15 * (i % 3) as f64, i as f64 * phi))).collect();
    images.insert(n + 1, Point::Finite(HPoint::origin(2)));
    let rep = Representation::new(vec![Isometry::rotation(2, 1, 2, 2.0 * PI * turns)], 2).unwrap();
    let f = EquivariantMap::new(glued(&k, GlueOptions::with_boundary()), rep, images).unwrap();
    (k, f)
}

/// Cone end of `cone_circle` as a cusp experiment with `H^2` target.
pub fn cone_circle_experiment(n: usize, turns: f64) -> CuspExperiment {
    let (k, f) = cone_circle(n, turns);
    let apex = n + 1;
    CuspExperiment {
        generators: f.to_data().generators,
        images: f.images().iter().filter(|(&v, _)| v != apex).map(|(&v, p)| (v, p.clone())).collect(),
        targets: vec![plane_target(2, Point::Finite(HPoint::origin(2)))],
        complex: k,
        k_values: vec![1, 2, 4, 8, 16],
        delta: None,
    }
}

fn plane_target(m: usize, eta: Point) -> ToricTarget {
    let unit = |i: usize| (0..=m).map(|j| if j == i { 1.0 } else { 0.0 }).collect();
    ToricTarget::Plane { base: Point::Finite(HPoint::origin(m)), u: unit(1), v: unit(2), eta }
}

/// Grid vertex `(i, j, k)` of an `n[0] x n[1] x n[2]` lattice box.
fn grid_id(n: [usize; 3], p: [usize; 3]) -> usize {
    p[0] + (n[0] + 1) * (p[1] + (n[1] + 1) * p[2])
}

const PERMS: [([usize; 3], i8); 6] =
    [([0, 1, 2], 1), ([0, 2, 1], -1), ([1, 0, 2], -1), ([1, 2, 0], 1), ([2, 0, 1], 1), ([2, 1, 0], -1)];

fn kuhn_vertices(cube: [usize; 3], perm: [usize; 3]) -> Vec<[usize; 3]> {
    let mut v = cube;
    let mut out = vec![v];
    for a in perm {
        v[a] += 1;
        out.push(v);
    }
    out
}

/// Flat 3-torus triangulated by the Kuhn subdivision of an `n` box of unit
/// cubes (six tetrahedra per cube, cube-major order). Opposite box faces are
/// paired by translation, with deck word `words[axis]`.
pub fn torus3(n: [usize; 3], words: [Vec<i32>; 3]) -> Complex {
    let mut top = Vec::new();
    let mut coords = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                for (perm, sign) in PERMS {
                    let v = kuhn_vertices([i, j, k], perm);
                    top.push(TopSimplex { verts: v.iter().map(|&p| grid_id(n, p)).collect(), orientation: sign });
                    coords.push(v);
                }
            }
        }
    }
    let mut high: BTreeMap<Vec<usize>, FacetSlot> = BTreeMap::new();
    let mut low: Vec<(usize, Vec<[usize; 3]>, FacetSlot)> = Vec::new();
    for (s, v) in coords.iter().enumerate() {
        for opp in 0..4 {
            let facet: Vec<[usize; 3]> = (0..4).filter(|&i| i != opp).map(|i| v[i]).collect();
            let slot = FacetSlot { simplex: s, opposite: opp };
            for axis in 0..3 {
                if facet.iter().all(|p| p[axis] == 0) {
                    low.push((axis, facet.clone(), slot));
                }
                if facet.iter().all(|p| p[axis] == n[axis]) {
                    let mut ids: Vec<usize> = facet.iter().map(|&p| grid_id(n, p)).collect();
                    ids.sort_unstable();
                    high.insert(ids, slot);
                }
            }
        }
    }
    let pairings = low
        .into_iter()
        .map(|(axis, facet, a)| {
            let map: Vec<[usize; 2]> = facet
                .iter()
                .map(|&p| {
                    let mut q = p;
                    q[axis] = n[axis];
                    [grid_id(n, p), grid_id(n, q)]
                })
                .collect();
            let mut ids: Vec<usize> = map.iter().map(|e| e[1]).collect();
            ids.sort_unstable();
            FacePairing { a, b: high[&ids], map, word: words[axis].clone() }
        })
        .collect();
    let count = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);
    Complex { dim: 3, ends: 0, vertices: (0..count).map(VertexRecord::interior).collect(), top, pairings }
}

/// Rotation angles, in the `(x3, x4)` plane, of the three torus generators.
pub const TORIC_ANGLES: [f64; 3] = [0.9, 1.7, 2.3];

/// Toric representation: each generator rotates the normal plane of the
/// totally geodesic `H^2 = {x3 = x4 = 0}`, fixing it pointwise.
pub fn toric_rep() -> Representation {
    Representation::new(TORIC_ANGLES.iter().map(|&t| Isometry::rotation(4, 3, 4, t)).collect(), 4).unwrap()
}

/// Image in `H^2 = {x3 = x4 = 0}` of grid vertex `p` of a 2-periodic box.
fn plane_image(p: [usize; 3]) -> Point {
    let idx = (p[0] % 2) + 2 * (p[1] % 2) + 4 * (p[2] % 2);
    polar(4, 0.6 + 0.05 * idx as f64, 2.0 * PI * idx as f64 / 8.0 + 0.1 * (idx % 3) as f64)
}

fn box_images(n: [usize; 3]) -> BTreeMap<usize, Point> {
    let mut images = BTreeMap::new();
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                images.insert(grid_id(n, [i, j, k]), plane_image([i, j, k]));
            }
        }
    }
    images
}

fn toric_words() -> [Vec<i32>; 3] {
    [vec![1], vec![2], vec![3]]
}

/// Synthetic 4-D cusp end: the cone over the 2x2x2 Kuhn 3-torus with the
/// toric representation, the apex at the origin and the cross-section
/// mapped into the fixed plane `H^2` (so every cone simplex of `f0` is
/// degenerate).
pub fn cone4d() -> CuspExperiment {
    let n = [2, 2, 2];
    CuspExperiment {
        complex: build_cone_complex(&torus3(n, toric_words()), 0).unwrap(),
        generators: toric_rep().generators().iter().map(Isometry::rows).collect(),
        targets: vec![plane_target(4, Point::Finite(HPoint::origin(4)))],
        images: box_images(n),
        k_values: vec![1, 2, 4, 8, 16],
        delta: None,
    }
}

/// Closed version of [`cone4d`]: two cones over the same 3-torus glued
/// along it, the second apex at another point of the plane.
pub fn cusp4d() -> CuspExperiment {
    let n = [2, 2, 2];
    let mut e = cone4d();
    e.complex = build_double_cone(&torus3(n, toric_words())).unwrap();
    e.targets.push(plane_target(4, polar(4, 1.4, 0.4)));
    e
}

/// A covering of cone ends with matching equivariant maps.
#[derive(Clone, Debug)]
pub struct CoverPair {
    pub base: EquivariantMap,
    pub cover: EquivariantMap,
    pub covering: Covering,
}

/// Two-fold cover of the 2-D cone end `cone_circle(3, 0.8)` by
/// `cone_circle(6, 1.6)`.
pub fn cover_pair_2d() -> CoverPair {
    let base = cone_circle(3, 0.8).1;
    let cover = cone_circle(6, 1.6).1;
    CoverPair { base, cover, covering: Covering { degree: 2, simplex_map: (0..6).map(|j| j % 3).collect() } }
}

/// Two-fold cover of the 4-D cone end: the 4x2x2 box with x-word `t_x^2`
/// over the 2x2x2 box. The base map is a seeded perturbation of `cone4d`'s
/// `f0` by `radius`; the cover map is its lift.
pub fn cover_pair_4d(radius: f64, seed: u64) -> Result<CoverPair> {
    let base = cone4d().f0()?.perturb(radius, seed, None)?;
    let (nb, nc) = ([2, 2, 2], [4, 2, 2]);
    let kc = build_cone_complex(&torus3(nc, [vec![1, 1], vec![2], vec![3]]), 0)?;
    let rho_x = toric_rep().generators()[0].clone();
    let mut images = BTreeMap::new();
    for k in 0..=2 {
        for j in 0..=2 {
            for i in 0..=4usize {
                let mut p = base.images()[&grid_id(nb, [i % 2, j, k])].clone();
                for _ in 0..i / 2 {
                    p = rho_x.apply(&p);
                }
                images.insert(grid_id(nc, [i, j, k]), p);
            }
        }
    }
    let apex_base = grid_id(nb, [2, 2, 2]) + 1;
    images.insert(grid_id(nc, [4, 2, 2]) + 1, base.images()[&apex_base].clone());
    let cover = EquivariantMap::new(Arc::new(kc.glue(GlueOptions::with_boundary())?), toric_rep(), images)?;
    let simplex_map = (0..kc.top.len())
        .map(|s| {
            let (cube, perm) = (s / 6, s % 6);
            let (i, rest) = (cube % 4, cube / 4);
            ((i % 2) + 2 * rest) * 6 + perm
        })
        .collect();
    Ok(CoverPair { base, cover, covering: Covering { degree: 2, simplex_map } })
}

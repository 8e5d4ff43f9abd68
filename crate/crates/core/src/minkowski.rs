//! Lorentzian linear algebra and the hyperboloid model of H^m.
//!
//! The bilinear form is `<u,v> = -u0 v0 + sum_{i>=1} ui vi`, time coordinate
//! first. H^m is the future sheet `<v,v> = -1, v0 > 0`; ideal points are
//! future light-cone rays normalized to `v0 = 1`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for point and tangent constructors.
pub const TOL_CONSTRUCT: f64 = 1e-10;
/// Tolerance for `M^T J M = J`.
pub const TOL_ISOMETRY: f64 = 1e-9;
/// Tolerance for identities between derived quantities.
pub const TOL_DERIVED: f64 = 1e-8;

pub const SUPPORTED_DIMS: [usize; 3] = [2, 3, 4];

fn check_dim(m: usize) -> Result<()> {
    if SUPPORTED_DIMS.contains(&m) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(m))
    }
}

/// A vector of R^{m,1}.
#[derive(Clone, Debug, PartialEq)]
pub struct MinkowskiVector {
    coords: Vec<f64>,
}

impl MinkowskiVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::UnsupportedDimension(coords.len().saturating_sub(1)));
        }
        check_dim(coords.len() - 1)?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub(crate) fn raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(m: usize) -> Self {
        Self { coords: vec![0.0; m + 1] }
    }

    /// Standard basis vector `e_i` of R^{m+1}.
    pub fn basis(m: usize, i: usize) -> Self {
        let mut v = Self::zeros(m);
        v.coords[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Lorentzian product, assuming equal dimensions.
    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        let mut s = -self.coords[0] * other.coords[0];
        for i in 1..self.coords.len() {
            s += self.coords[i] * other.coords[i];
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn euclid_norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coords: self.coords.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect() }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + s * b).collect() }
    }
}

pub fn lorentz_dot(u: &MinkowskiVector, v: &MinkowskiVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: v.dim() });
    }
    Ok(u.dot(v))
}

/// A point of H^m on the future sheet.
#[derive(Clone, Debug, PartialEq)]
pub struct HPoint {
    v: MinkowskiVector,
}

impl HPoint {
    pub fn new(v: MinkowskiVector) -> Result<Self> {
        let q = v.norm_sq();
        let scale = 1.0 + v.coords[0] * v.coords[0];
        if (q + 1.0).abs() > TOL_CONSTRUCT * scale || v.coords[0] <= 0.0 {
            return Err(Error::InvalidPoint(format!(
                "<v,v> = {q}, v0 = {}; not on the future sheet",
                v.coords[0]
            )));
        }
        Ok(Self { v })
    }

    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        Self::new(MinkowskiVector::new(coords)?)
    }

    /// Rescales a future timelike vector onto the sheet.
    pub fn normalize(v: &MinkowskiVector) -> Result<Self> {
        let q = v.norm_sq();
        if !(q < 0.0) || v.coords[0] <= 0.0 {
            return Err(Error::InvalidPoint("vector is not future timelike".into()));
        }
        Ok(Self { v: v.scaled(1.0 / (-q).sqrt()) })
    }

    pub fn origin(m: usize) -> Self {
        Self { v: MinkowskiVector::basis(m, 0) }
    }

    pub fn vector(&self) -> &MinkowskiVector {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// Klein-chart coordinates `(v1, .., vm) / v0`.
    pub fn klein(&self) -> Vec<f64> {
        self.v.coords[1..].iter().map(|c| c / self.v.coords[0]).collect()
    }
}

/// A point of the ideal boundary, normalized so that `v0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealPoint {
    v: MinkowskiVector,
}

impl IdealPoint {
    pub fn new(v: MinkowskiVector) -> Result<Self> {
        let e2 = v.euclid_norm().powi(2);
        if v.norm_sq().abs() > TOL_CONSTRUCT * e2 || v.coords[0] <= 0.0 {
            return Err(Error::InvalidPoint(format!(
                "<v,v> = {}, v0 = {}; not a future null vector",
                v.norm_sq(),
                v.coords[0]
            )));
        }
        let v0 = v.coords[0];
        Ok(Self { v: v.scaled(1.0 / v0) })
    }

    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        Self::new(MinkowskiVector::new(coords)?)
    }

    /// Ideal endpoint in the direction of a nonzero spatial vector.
    pub fn from_direction(dir: &[f64]) -> Result<Self> {
        let n = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidPoint("zero direction".into()));
        }
        let mut coords = vec![1.0];
        coords.extend(dir.iter().map(|c| c / n));
        Self::from_coords(coords)
    }

    pub fn vector(&self) -> &MinkowskiVector {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }
}

/// A point of H^m or of its ideal boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointRepr", into = "PointRepr")]
pub enum Point {
    Finite(HPoint),
    Ideal(IdealPoint),
}

#[derive(Serialize, Deserialize)]
struct PointRepr {
    kind: String,
    coords: Vec<f64>,
}

impl TryFrom<PointRepr> for Point {
    type Error = Error;
    fn try_from(r: PointRepr) -> Result<Self> {
        match r.kind.as_str() {
            "finite" => Ok(Point::Finite(HPoint::from_coords(r.coords)?)),
            "ideal" => Ok(Point::Ideal(IdealPoint::from_coords(r.coords)?)),
            k => Err(Error::Parse(format!("unknown point kind {k:?}"))),
        }
    }
}

impl From<Point> for PointRepr {
    fn from(p: Point) -> Self {
        let kind = if p.is_ideal() { "ideal" } else { "finite" };
        PointRepr { kind: kind.into(), coords: p.rep().coords.clone() }
    }
}

impl From<HPoint> for Point {
    fn from(p: HPoint) -> Self {
        Point::Finite(p)
    }
}

impl From<IdealPoint> for Point {
    fn from(p: IdealPoint) -> Self {
        Point::Ideal(p)
    }
}

impl Point {
    /// The representative vector (on the sheet, or null with `v0 = 1`).
    pub fn rep(&self) -> &MinkowskiVector {
        match self {
            Point::Finite(p) => &p.v,
            Point::Ideal(p) => &p.v,
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, Point::Ideal(_))
    }

    pub fn dim(&self) -> usize {
        self.rep().dim()
    }

    pub fn as_finite(&self) -> Option<&HPoint> {
        match self {
            Point::Finite(p) => Some(p),
            Point::Ideal(_) => None,
        }
    }

    /// Equality within `tol`: distance for finite points, Euclidean distance
    /// of normalized representatives for ideal ones.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        match (self, other) {
            (Point::Finite(a), Point::Finite(b)) => distance(a, b) <= tol,
            (Point::Ideal(a), Point::Ideal(b)) => a.v.sub(&b.v).euclid_norm() <= tol,
            _ => false,
        }
    }
}

/// Hyperbolic distance `arccosh(-<p,q>)`, evaluated through the chord length
/// for accuracy at short range.
pub fn distance(p: &HPoint, q: &HPoint) -> f64 {
    let chord = p.v.sub(&q.v).norm_sq().max(0.0).sqrt();
    2.0 * (chord / 2.0).asinh()
}

/// Midpoint of the geodesic segment `[p, q]`.
pub fn midpoint(p: &HPoint, q: &HPoint) -> HPoint {
    HPoint::normalize(&p.v.add(&q.v)).expect("sum of future timelike vectors is timelike")
}

/// A vector tangent to H^m at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: HPoint,
    v: MinkowskiVector,
}

impl TangentVector {
    pub fn new(base: HPoint, v: MinkowskiVector) -> Result<Self> {
        if base.dim() != v.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: v.dim() });
        }
        let scale = 1.0 + base.v.euclid_norm() * v.euclid_norm();
        let d = base.v.dot(&v);
        if d.abs() > TOL_CONSTRUCT * scale {
            return Err(Error::InvalidTangent(format!("<base, v> = {d}")));
        }
        Ok(Self { base, v })
    }

    pub fn base(&self) -> &HPoint {
        &self.base
    }

    pub fn vector(&self) -> &MinkowskiVector {
        &self.v
    }

    pub fn norm(&self) -> f64 {
        self.v.norm_sq().max(0.0).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.v.norm_sq() - 1.0).abs() <= TOL_CONSTRUCT * (1.0 + self.v.euclid_norm().powi(2))
    }
}

/// Orthogonal projection onto the tangent space at `x`.
pub fn project_tangent(x: &HPoint, w: &MinkowskiVector) -> MinkowskiVector {
    w.axpy(x.v.dot(w), &x.v)
}

/// Unit tangent at `x` pointing along the geodesic toward `y` (or toward the
/// ideal point `y`).
pub fn log_direction(x: &HPoint, y: &Point) -> Result<TangentVector> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    let u = project_tangent(x, y.rep());
    let n2 = u.norm_sq();
    if !(n2 > 1e-24) {
        return Err(Error::DegenerateDirection);
    }
    Ok(TangentVector { base: x.clone(), v: u.scaled(1.0 / n2.sqrt()) })
}

/// Point at distance `t` along the unit tangent `u`.
pub fn exp_map(u: &TangentVector, t: f64) -> HPoint {
    let v = u.base.v.scaled(t.cosh()).axpy(t.sinh(), &u.v);
    HPoint::normalize(&v).expect("geodesic point is timelike")
}

/// Lorentz-orthonormal basis of the tangent space at `x`, by Gram-Schmidt on
/// the projected coordinate vectors `e_1, .., e_m`.
pub fn tangent_basis(x: &HPoint) -> Vec<TangentVector> {
    let m = x.dim();
    let mut basis: Vec<MinkowskiVector> = Vec::with_capacity(m);
    for i in 1..=m {
        let mut w = project_tangent(x, &MinkowskiVector::basis(m, i));
        for b in &basis {
            w = w.axpy(-w.dot(b), b);
        }
        // second pass keeps far-from-origin bases orthonormal
        for b in &basis {
            w = w.axpy(-w.dot(b), b);
        }
        let n = w.norm_sq().sqrt();
        basis.push(w.scaled(1.0 / n));
    }
    basis.into_iter().map(|v| TangentVector { base: x.clone(), v }).collect()
}

/// Uniform random unit tangent at `x`.
pub fn random_unit_tangent<R: Rng + ?Sized>(x: &HPoint, rng: &mut R) -> TangentVector {
    let basis = tangent_basis(x);
    loop {
        let g: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n < 1e-300 {
            continue;
        }
        let mut v = MinkowskiVector::zeros(x.dim());
        for (gi, b) in g.iter().zip(&basis) {
            v = v.axpy(gi / n, &b.v);
        }
        return TangentVector { base: x.clone(), v };
    }
}

/// An element of O(m,1) preserving the future sheet.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: DMatrix<f64>,
}

fn form(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(m + 1, m + 1);
    j[(0, 0)] = -1.0;
    j
}

impl Isometry {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() < 3 {
            return Err(Error::InvalidIsometry("matrix must be square of size m+1 >= 3".into()));
        }
        let m = matrix.nrows() - 1;
        check_dim(m)?;
        let j = form(m);
        let err = (matrix.transpose() * &j * &matrix - &j).abs().max();
        if !(err <= TOL_ISOMETRY) {
            return Err(Error::InvalidIsometry(format!("M^T J M - J has entry {err:e}")));
        }
        if matrix[(0, 0)] <= 0.0 {
            return Err(Error::InvalidIsometry("M00 <= 0 swaps the sheets".into()));
        }
        Ok(Self { matrix })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidIsometry("ragged matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.matrix.nrows())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn identity(m: usize) -> Self {
        Self { matrix: DMatrix::identity(m + 1, m + 1) }
    }

    /// Hyperbolic translation by `t` along the spatial axis `axis` (1-based).
    pub fn boost(m: usize, axis: usize, t: f64) -> Self {
        let mut mat = DMatrix::identity(m + 1, m + 1);
        mat[(0, 0)] = t.cosh();
        mat[(axis, axis)] = t.cosh();
        mat[(0, axis)] = t.sinh();
        mat[(axis, 0)] = t.sinh();
        Self { matrix: mat }
    }

    /// Rotation by `angle` in the spatial coordinate plane `(i, j)` (1-based).
    pub fn rotation(m: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut mat = DMatrix::identity(m + 1, m + 1);
        let (s, c) = angle.sin_cos();
        mat[(i, i)] = c;
        mat[(j, j)] = c;
        mat[(i, j)] = -s;
        mat[(j, i)] = s;
        Self { matrix: mat }
    }

    /// Reflection in the hyperplane Lorentz-orthogonal to the spacelike `n`.
    pub fn reflection(n: &MinkowskiVector) -> Result<Self> {
        let q = n.norm_sq();
        if !(q > 0.0) {
            return Err(Error::InvalidIsometry("reflection normal must be spacelike".into()));
        }
        let m = n.dim();
        let jn: Vec<f64> = (0..=m).map(|i| if i == 0 { -n.coords[0] } else { n.coords[i] }).collect();
        let mat = DMatrix::from_fn(m + 1, m + 1, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - 2.0 * n.coords[i] * jn[j] / q
        });
        Self::new(mat)
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { matrix: &self.matrix * &other.matrix }
    }

    /// `J M^T J`, exact for elements of O(m,1).
    pub fn inverse(&self) -> Isometry {
        let j = form(self.dim());
        Isometry { matrix: &j * self.matrix.transpose() * &j }
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn preserves_orientation(&self) -> bool {
        self.det() > 0.0
    }

    pub fn apply_vector(&self, v: &MinkowskiVector) -> MinkowskiVector {
        let n = v.coords.len();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                s += self.matrix[(i, j)] * v.coords[j];
            }
            *o = s;
        }
        MinkowskiVector { coords: out }
    }

    pub fn apply_hpoint(&self, p: &HPoint) -> HPoint {
        HPoint::normalize(&self.apply_vector(&p.v)).expect("isometry preserves the sheet")
    }

    pub fn apply_ideal(&self, p: &IdealPoint) -> IdealPoint {
        let w = self.apply_vector(&p.v);
        let w0 = w.coords[0];
        IdealPoint { v: w.scaled(1.0 / w0) }
    }

    /// Applies the isometry and renormalizes (ideal points to `v0 = 1`).
    pub fn apply(&self, p: &Point) -> Point {
        match p {
            Point::Finite(q) => Point::Finite(self.apply_hpoint(q)),
            Point::Ideal(q) => Point::Ideal(self.apply_ideal(q)),
        }
    }

    pub fn apply_tangent(&self, t: &TangentVector) -> TangentVector {
        TangentVector { base: self.apply_hpoint(&t.base), v: self.apply_vector(&t.v) }
    }

    /// The isometry of H^2 sending three distinct ideal points to three others.
    pub fn from_ideal_triples(src: [&IdealPoint; 3], dst: [&IdealPoint; 3]) -> Result<Self> {
        if src.iter().chain(dst.iter()).any(|p| p.dim() != 2) {
            return Err(Error::Unsupported("ideal-triple isometries are only defined in H^2".into()));
        }
        let g = |a: &IdealPoint, b: &IdealPoint| a.v.dot(&b.v);
        let ratio = |i: usize, j: usize| g(src[i], src[j]) / g(dst[i], dst[j]);
        let (r01, r02, r12) = (ratio(0, 1), ratio(0, 2), ratio(1, 2));
        if !(r01 > 0.0 && r02 > 0.0 && r12 > 0.0) {
            return Err(Error::InvalidIsometry("ideal points must be distinct".into()));
        }
        let lam = [(r01 * r02 / r12).sqrt(), (r01 * r12 / r02).sqrt(), (r02 * r12 / r01).sqrt()];
        let s = DMatrix::from_fn(3, 3, |i, j| src[j].v.coords[i]);
        let d = DMatrix::from_fn(3, 3, |i, j| lam[j] * dst[j].v.coords[i]);
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::InvalidIsometry("source ideal points are collinear".into()))?;
        Self::new(d * s_inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> MinkowskiVector {
        MinkowskiVector::new(c.to_vec()).unwrap()
    }

    fn hp(c: &[f64]) -> HPoint {
        HPoint::from_coords(c.to_vec()).unwrap()
    }

    fn on_geodesic(t: f64) -> HPoint {
        hp(&[t.cosh(), t.sinh(), 0.0])
    }

    #[test]
    fn lorentz_dot_examples() {
        assert_eq!(lorentz_dot(&v(&[1., 0., 0.]), &v(&[1., 0., 0.])).unwrap(), -1.0);
        assert_eq!(lorentz_dot(&v(&[1., 0., 0.]), &v(&[0., 1., 0.])).unwrap(), 0.0);
        assert_eq!(lorentz_dot(&v(&[2., 1., 1.]), &v(&[2., 1., 1.])).unwrap(), -2.0);
        assert!(matches!(
            lorentz_dot(&v(&[1., 0., 0.]), &v(&[1., 0., 0., 0.])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(HPoint::from_coords(vec![1.0, 1.0, 0.0]).is_err());
        assert!(HPoint::from_coords(vec![-1.0, 0.0, 0.0]).is_err());
        assert!(IdealPoint::from_coords(vec![1.0, 0.5, 0.0]).is_err());
        assert!(IdealPoint::from_coords(vec![-1.0, 1.0, 0.0]).is_err());
        assert!(MinkowskiVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        let mut bad = DMatrix::identity(3, 3);
        bad[(0, 1)] = 0.1;
        assert!(Isometry::new(bad).is_err());
        assert!(Isometry::new(-DMatrix::<f64>::identity(3, 3)).is_err());
    }

    #[test]
    fn ideal_points_are_normalized() {
        let p = IdealPoint::from_coords(vec![2.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.vector().coords(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn distance_examples() {
        let p = hp(&[1., 0., 0.]);
        assert_eq!(distance(&p, &p), 0.0);
        assert!((distance(&p, &on_geodesic(1.0)) - 1.0).abs() < 1e-12);
        let q = on_geodesic(0.3);
        assert_eq!(distance(&p, &q), distance(&q, &p));
    }

    #[test]
    fn log_direction_examples() {
        let x = HPoint::origin(2);
        let d = log_direction(&x, &on_geodesic(1.0).into()).unwrap();
        assert!(d.vector().sub(&v(&[0., 1., 0.])).euclid_norm() < 1e-12);
        let ideal = Point::Ideal(IdealPoint::from_coords(vec![1., 1., 0.]).unwrap());
        let d = log_direction(&x, &ideal).unwrap();
        assert!(d.vector().sub(&v(&[0., 1., 0.])).euclid_norm() < 1e-12);
        assert_eq!(log_direction(&x, &x.clone().into()), Err(Error::DegenerateDirection));
    }

    #[test]
    fn tangent_basis_at_origin() {
        let b = tangent_basis(&HPoint::origin(2));
        assert_eq!(b[0].vector().coords(), &[0., 1., 0.]);
        assert_eq!(b[1].vector().coords(), &[0., 0., 1.]);
    }

    #[test]
    fn boost_inverse_roundtrip() {
        let p = hp(&[1., 0., 0., 0.]);
        let q = Isometry::boost(3, 2, -0.7).apply_hpoint(&Isometry::boost(3, 2, 0.7).apply_hpoint(&p));
        assert!(distance(&p, &q) < 1e-9);
        assert!(Isometry::new(Isometry::boost(3, 2, 0.7).matrix().clone()).is_ok());
    }

    #[test]
    fn ideal_triple_isometry_maps_points() {
        let a = |deg: f64| IdealPoint::from_direction(&[deg.to_radians().cos(), deg.to_radians().sin()]).unwrap();
        let src = [a(0.0), a(100.0), a(230.0)];
        let dst = [a(40.0), a(170.0), a(300.0)];
        let g = Isometry::from_ideal_triples([&src[0], &src[1], &src[2]], [&dst[0], &dst[1], &dst[2]]).unwrap();
        for (s, d) in src.iter().zip(&dst) {
            assert!(g.apply_ideal(s).vector().sub(d.vector()).euclid_norm() < 1e-9);
        }
        assert!(g.preserves_orientation());
    }

    #[test]
    fn random_tangent_is_reproducible() {
        let x = hp(&[2f64.cosh(), 2f64.sinh(), 0.0, 0.0]);
        let a = random_unit_tangent(&x, &mut rng_from(5));
        let b = random_unit_tangent(&x, &mut rng_from(5));
        assert_eq!(a, b);
        assert!(a.is_unit());
        assert!(TangentVector::new(x, a.vector().clone()).is_ok());
    }

    #[test]
    fn random_tangent_mean_vanishes() {
        // each coordinate has variance 1/m; 4 sigma of the sample mean
        let x = HPoint::origin(3);
        let n = 1_000_000;
        let mut rng = rng_from(11);
        let mut sum = [0.0; 4];
        for _ in 0..n {
            let t = random_unit_tangent(&x, &mut rng);
            for (s, c) in sum.iter_mut().zip(t.vector().coords()) {
                *s += c;
            }
        }
        let bound = 4.0 * (1.0 / 3.0f64).sqrt() / (n as f64).sqrt();
        for s in &sum[1..] {
            assert!((s / n as f64).abs() < bound, "mean {}", s / n as f64);
        }
        assert_eq!(sum[0], 0.0);
    }

    fn arb_point(m: usize) -> impl Strategy<Value = HPoint> {
        (proptest::collection::vec(-1.0f64..1.0, m), 0.0f64..2.5).prop_filter_map("zero dir", move |(d, r)| {
            let n = d.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n < 1e-3 {
                return None;
            }
            let mut c = vec![r.cosh()];
            c.extend(d.iter().map(|x| r.sinh() * x / n));
            HPoint::from_coords(c).ok()
        })
    }

    fn arb_isometry(m: usize) -> impl Strategy<Value = Isometry> {
        (1..=m, 1..=m, -1.5f64..1.5, -3.0f64..3.0, any::<bool>()).prop_map(move |(a, b, t, ang, refl)| {
            let mut g = Isometry::boost(m, a, t);
            if a != b {
                g = Isometry::rotation(m, a.min(b), a.max(b), ang).compose(&g);
            }
            if refl {
                g = Isometry::reflection(&MinkowskiVector::basis(m, b)).unwrap().compose(&g);
            }
            g
        })
    }

    proptest! {
        #[test]
        fn isometries_preserve_distance((p, q, g) in (2usize..=4).prop_flat_map(|m| (arb_point(m), arb_point(m), arb_isometry(m)))) {
            let d0 = distance(&p, &q);
            let d1 = distance(&g.apply_hpoint(&p), &g.apply_hpoint(&q));
            prop_assert!((d0 - d1).abs() < 1e-8);
        }

        #[test]
        fn isometries_commute_with_log_direction((p, q, g) in (2usize..=4).prop_flat_map(|m| (arb_point(m), arb_point(m), arb_isometry(m)))) {
            prop_assume!(distance(&p, &q) > 1e-3);
            let lhs = g.apply_tangent(&log_direction(&p, &q.clone().into()).unwrap());
            let rhs = log_direction(&g.apply_hpoint(&p), &g.apply_hpoint(&q).into()).unwrap();
            prop_assert!(lhs.vector().sub(rhs.vector()).euclid_norm() < 1e-8 * (1.0 + rhs.vector().euclid_norm()));
            prop_assert!((rhs.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn midpoint_is_equidistant((p, q) in (2usize..=4).prop_flat_map(|m| (arb_point(m), arb_point(m)))) {
            let mid = midpoint(&p, &q);
            prop_assert!((distance(&p, &mid) - distance(&mid, &q)).abs() < 1e-9);
        }

        #[test]
        fn tangent_basis_is_orthonormal(p in (2usize..=4).prop_flat_map(arb_point)) {
            let b = tangent_basis(&p);
            for (i, e) in b.iter().enumerate() {
                prop_assert!(p.vector().dot(e.vector()).abs() < 1e-10 * (1.0 + p.vector().euclid_norm().powi(2)));
                for (j, f) in b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((e.vector().dot(f.vector()) - want).abs() < 1e-10);
                }
            }
        }
    }
}

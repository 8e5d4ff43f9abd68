//! Geodesic simplices, interior-angle fractions at faces, generalized angle
//! sums, and volumes.
//!
//! Angles are measured on the linearized tangent cone: at a point `x` interior
//! to the face, the simplex looks like the intersection of the half-spaces
//! bounded by the facets through that face. Exact formulas cover the cases
//! with at most two active half-spaces; everything else is Monte Carlo.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{log_direction, tangent_basis, HPoint, Isometry, MinkowskiVector, Point};
use crate::rng::{chunked, derive_seed};

/// Default Monte Carlo budget per angle.
pub const DEFAULT_SAMPLES: usize = 200_000;
/// Smallest-to-largest singular value ratio below which a simplex is degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-8;

/// Sampling configuration. There is deliberately no default seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleConfig {
    pub samples: usize,
    pub seed: u64,
    pub degeneracy_ratio: f64,
}

impl AngleConfig {
    pub fn new(seed: u64) -> Self {
        Self { samples: DEFAULT_SAMPLES, seed, degeneracy_ratio: DEGENERACY_RATIO }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples.max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same budget, independent stream tagged by `parts`.
    pub fn derived(&self, parts: &[u64]) -> Self {
        Self { seed: derive_seed(self.seed, parts), ..*self }
    }
}

/// An interior-angle fraction in `[0, 1]` with its sampling error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub exact: bool,
}

impl AngleEstimate {
    pub fn exact(value: f64) -> Self {
        Self { value: value.clamp(0.0, 1.0), stderr: 0.0, samples: 0, exact: true }
    }

    fn from_hits(hits: u64, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self { value: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), samples: n, exact: false }
    }

    pub fn signed(&self) -> Estimate {
        Estimate { value: self.value, stderr: self.stderr, samples: self.samples, exact: self.exact }
    }
}

/// A signed real with a standard error; errors add in quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub exact: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, samples: 0, exact: true }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn scaled(self, s: f64) -> Self {
        Self { value: self.value * s, stderr: self.stderr * s.abs(), ..self }
    }

    pub fn plus(self, other: Estimate) -> Self {
        Self {
            value: self.value + other.value,
            stderr: self.stderr.hypot(other.stderr),
            samples: self.samples + other.samples,
            exact: self.exact && other.exact,
        }
    }

    pub fn minus(self, other: Estimate) -> Self {
        self.plus(other.scaled(-1.0))
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Self {
        iter.fold(Estimate::zero(), Estimate::plus)
    }
}

/// Ordered vertices of a geodesic simplex in H^m; vertices may be ideal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimplexRepr", into = "SimplexRepr")]
pub struct GeodesicSimplex {
    vertices: Vec<Point>,
    ambient_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct SimplexRepr {
    ambient_dim: usize,
    vertices: Vec<Point>,
}

impl TryFrom<SimplexRepr> for GeodesicSimplex {
    type Error = Error;
    fn try_from(r: SimplexRepr) -> Result<Self> {
        GeodesicSimplex::new(r.vertices, r.ambient_dim)
    }
}

impl From<GeodesicSimplex> for SimplexRepr {
    fn from(s: GeodesicSimplex) -> Self {
        SimplexRepr { ambient_dim: s.ambient_dim, vertices: s.vertices }
    }
}

impl GeodesicSimplex {
    /// Accepts degenerate vertex sets; angle and volume operations check
    /// non-degeneracy themselves.
    pub fn new(vertices: Vec<Point>, ambient_dim: usize) -> Result<Self> {
        let k = vertices.len().saturating_sub(1);
        if k < 1 || k > ambient_dim {
            return Err(Error::InvalidFace(format!(
                "a simplex in H^{ambient_dim} needs 2..={} vertices, got {}",
                ambient_dim + 1,
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| p.dim() != ambient_dim) {
            return Err(Error::DimensionMismatch { expected: ambient_dim, got: p.dim() });
        }
        Ok(Self { vertices, ambient_dim })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_top(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn has_ideal_vertex(&self) -> bool {
        self.vertices.iter().any(Point::is_ideal)
    }

    pub fn transformed(&self, g: &Isometry) -> Self {
        Self { vertices: self.vertices.iter().map(|p| g.apply(p)).collect(), ambient_dim: self.ambient_dim }
    }

    fn rep_matrix(&self) -> DMatrix<f64> {
        let n = self.ambient_dim + 1;
        DMatrix::from_fn(n, self.vertices.len(), |i, j| self.vertices[j].rep().coords()[i])
    }

    /// Smallest over largest singular value of the representative matrix.
    pub fn singular_ratio(&self) -> f64 {
        let sv = self.rep_matrix().singular_values();
        let max = sv.max();
        if max == 0.0 {
            return 0.0;
        }
        sv.min() / max
    }

    pub fn is_degenerate_at(&self, ratio: f64) -> bool {
        !(self.singular_ratio() > ratio)
    }

    pub fn is_degenerate(&self) -> bool {
        self.is_degenerate_at(DEGENERACY_RATIO)
    }

    /// Determinant of the vertex representatives (top simplices only).
    pub fn orientation_det(&self) -> f64 {
        if !self.is_top() {
            return 0.0;
        }
        self.rep_matrix().determinant()
    }

    fn require_top(&self, ratio: f64) -> Result<()> {
        if !self.is_top() {
            return Err(Error::Unsupported(format!(
                "angles need a top-dimensional simplex, got dim {} in H^{}",
                self.dim(),
                self.ambient_dim
            )));
        }
        if self.is_degenerate_at(ratio) {
            return Err(Error::DegenerateSimplex(format!("singular ratio {:e}", self.singular_ratio())));
        }
        Ok(())
    }

    /// Unit normal of the facet opposite vertex `j`, oriented so that the
    /// simplex lies on its non-positive side.
    pub fn facet_normal(&self, j: usize) -> Result<MinkowskiVector> {
        let m = self.ambient_dim;
        let others: Vec<&MinkowskiVector> =
            (0..=m).filter(|&i| i != j).map(|i| self.vertices[i].rep()).collect();
        // c . w = det[others..., w]; the Lorentz normal is J c.
        let mut c = vec![0.0; m + 1];
        for (i, ci) in c.iter_mut().enumerate() {
            let mat = DMatrix::from_fn(m + 1, m + 1, |r, col| {
                if col < m {
                    others[col].coords()[r]
                } else if r == i {
                    1.0
                } else {
                    0.0
                }
            });
            *ci = mat.determinant();
        }
        c[0] = -c[0];
        let n = MinkowskiVector::raw(c);
        let q = n.norm_sq();
        let scale: f64 = others.iter().map(|v| v.euclid_norm()).product();
        if !(q > 0.0) || q.sqrt() <= 1e-14 * scale {
            return Err(Error::DegenerateSimplex(format!("facet opposite vertex {j} is degenerate")));
        }
        let mut n = n.scaled(1.0 / q.sqrt());
        let side = n.dot(self.vertices[j].rep());
        if side > 0.0 {
            n = n.scaled(-1.0);
        } else if side == 0.0 {
            return Err(Error::DegenerateSimplex(format!("vertex {j} lies on its opposite facet")));
        }
        Ok(n)
    }
}

/// A face of a simplex, given by sorted vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    indices: Vec<usize>,
}

impl Face {
    pub fn new(mut indices: Vec<usize>, simplex_dim: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() || indices.iter().any(|&i| i > simplex_dim) {
            return Err(Error::InvalidFace(format!("{indices:?} in a {simplex_dim}-simplex")));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len() - 1
    }

    pub fn mask(&self) -> u64 {
        self.indices.iter().fold(0, |m, &i| m | (1 << i))
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    fn from_mask(mask: u64) -> Self {
        Self { indices: (0..64).filter(|i| mask & (1 << i) != 0).collect() }
    }
}

/// All nonempty faces of `t`, grouped by dimension, lexicographic within a
/// dimension. The simplex itself is the last entry.
pub fn face_lattice(t: &GeodesicSimplex) -> Vec<Face> {
    face_subsets(t.dim() + 1)
}

pub(crate) fn face_subsets(n: usize) -> Vec<Face> {
    let mut faces: Vec<Face> = (1u64..(1 << n)).map(Face::from_mask).collect();
    faces.sort_by(|a, b| a.indices.len().cmp(&b.indices.len()).then_with(|| a.indices.cmp(&b.indices)));
    faces
}

/// Normalized sum of the vertex representatives of `face`.
pub fn interior_basepoint(t: &GeodesicSimplex, face: &Face) -> Result<HPoint> {
    check_face(t, face)?;
    if face.dim() == 0 {
        return match &t.vertices[face.indices[0]] {
            Point::Finite(p) => Ok(p.clone()),
            Point::Ideal(_) => Err(Error::NoBasepoint),
        };
    }
    weighted_basepoint(t, face, &vec![1.0; face.indices.len()])
}

/// Normalized positive combination of the vertex representatives of `face`.
pub fn weighted_basepoint(t: &GeodesicSimplex, face: &Face, weights: &[f64]) -> Result<HPoint> {
    check_face(t, face)?;
    if weights.len() != face.indices.len() || weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidFace("need one positive weight per face vertex".into()));
    }
    let mut s = MinkowskiVector::zeros(t.ambient_dim);
    for (&i, w) in face.indices.iter().zip(weights) {
        s = s.axpy(*w, t.vertices[i].rep());
    }
    HPoint::normalize(&s).map_err(|_| Error::NoBasepoint)
}

fn check_face(t: &GeodesicSimplex, face: &Face) -> Result<()> {
    if face.indices.iter().any(|&i| i > t.dim()) {
        return Err(Error::InvalidFace(format!("{:?} in a {}-simplex", face.indices, t.dim())));
    }
    Ok(())
}

/// Normals of the facets containing `face`; the tangent cone at a point of
/// the face is `{v : <n, v> <= 0}` for all returned `n`.
pub fn tangent_cone_normals(t: &GeodesicSimplex, face: &Face) -> Result<Vec<MinkowskiVector>> {
    check_face(t, face)?;
    t.require_top(0.0)?;
    (0..=t.dim()).filter(|j| !face.contains(*j)).map(|j| t.facet_normal(j)).collect()
}

/// Interior-angle fraction of `t` at `face`.
///
/// Exact for the top face (1), facets (1/2), ideal vertices (0) and faces of
/// codimension two (dihedral angle over 2 pi; in H^2 via the two edge
/// directions). Monte Carlo otherwise.
pub fn interior_angle(t: &GeodesicSimplex, face: &Face, cfg: &AngleConfig) -> Result<AngleEstimate> {
    check_face(t, face)?;
    t.require_top(cfg.degeneracy_ratio)?;
    let m = t.ambient_dim;
    if face.dim() == 0 && t.vertices[face.indices[0]].is_ideal() {
        return Ok(AngleEstimate::exact(0.0));
    }
    match m - face.dim() {
        0 => Ok(AngleEstimate::exact(1.0)),
        1 => Ok(AngleEstimate::exact(0.5)),
        2 if m == 2 => {
            let x = interior_basepoint(t, face)?;
            let others: Vec<usize> = (0..=m).filter(|j| !face.contains(*j)).collect();
            let d1 = log_direction(&x, &t.vertices[others[0]])?;
            let d2 = log_direction(&x, &t.vertices[others[1]])?;
            let c = d1.vector().dot(d2.vector()).clamp(-1.0, 1.0);
            Ok(AngleEstimate::exact(c.acos() / (2.0 * PI)))
        }
        2 => {
            let n = tangent_cone_normals(t, face)?;
            let c = n[0].dot(&n[1]).clamp(-1.0, 1.0);
            Ok(AngleEstimate::exact((PI - c.acos()) / (2.0 * PI)))
        }
        _ => interior_angle_mc(t, face, None, cfg),
    }
}

/// Monte Carlo estimate of the angle at `face`, sampled in the tangent space
/// at `x` (default: [`interior_basepoint`]). `x` must lie on the face.
pub fn interior_angle_mc(
    t: &GeodesicSimplex,
    face: &Face,
    x: Option<&HPoint>,
    cfg: &AngleConfig,
) -> Result<AngleEstimate> {
    check_face(t, face)?;
    t.require_top(cfg.degeneracy_ratio)?;
    if face.dim() == 0 && t.vertices[face.indices[0]].is_ideal() {
        return Ok(AngleEstimate::exact(0.0));
    }
    let normals = tangent_cone_normals(t, face)?;
    let x = match x {
        Some(x) => {
            let scale = 1.0 + x.vector().euclid_norm();
            if normals.iter().any(|n| n.dot(x.vector()).abs() > 1e-8 * scale) {
                return Err(Error::InvalidFace("base point does not lie on the face".into()));
            }
            x.clone()
        }
        None => interior_basepoint(t, face)?,
    };
    Ok(cone_fraction_mc(&x, &normals, &cfg.derived(&[face.mask()])))
}

/// Fraction of unit tangents at `x` with `<n, v> <= 0` for every normal.
pub fn cone_fraction_mc(x: &HPoint, normals: &[MinkowskiVector], cfg: &AngleConfig) -> AngleEstimate {
    let basis = tangent_basis(x);
    let m = basis.len();
    // normals in basis coordinates, padded to four components
    let cs: Vec<[f64; 4]> = normals
        .iter()
        .map(|n| {
            let mut c = [0.0; 4];
            for (ci, b) in c.iter_mut().zip(&basis) {
                *ci = n.dot(b.vector());
            }
            c
        })
        .collect();
    let hits: u64 = chunked(cfg.samples, cfg.seed, |rng, count| {
        let mut hits = 0u64;
        let mut g = [0.0f64; 4];
        for _ in 0..count {
            for gi in g.iter_mut().take(m) {
                *gi = rng.sample(StandardNormal);
            }
            if cs.iter().all(|c| c[0] * g[0] + c[1] * g[1] + c[2] * g[2] + c[3] * g[3] <= 0.0) {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();
    AngleEstimate::from_hits(hits, cfg.samples)
}

/// Alternating sum of interior angles over the face lattice.
pub fn generalized_angle_sum(t: &GeodesicSimplex, cfg: &AngleConfig) -> Result<Estimate> {
    t.require_top(cfg.degeneracy_ratio)?;
    face_lattice(t)
        .iter()
        .map(|f| {
            let w = interior_angle(t, f, cfg)?.signed();
            Ok(if f.dim() % 2 == 0 { w } else { w.scaled(-1.0) })
        })
        .sum()
}

/// Volume of the unit sphere `S^d`.
pub fn sphere_volume(d: usize) -> f64 {
    2.0 * PI.powf((d as f64 + 1.0) / 2.0) / gamma_half((d + 1) as u32)
}

/// `Gamma(n / 2)` for positive integers `n`.
fn gamma_half(n: u32) -> f64 {
    match n {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (n as f64 / 2.0 - 1.0) * gamma_half(n - 2),
    }
}

/// Volume from the generalized angle sum; even dimensions only.
pub fn volume_hopf(t: &GeodesicSimplex, cfg: &AngleConfig) -> Result<Estimate> {
    let m = t.ambient_dim;
    if m % 2 != 0 {
        return Err(Error::Unsupported(format!("angle-sum volume needs even dimension, got {m}")));
    }
    let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(generalized_angle_sum(t, cfg)?.scaled(sign * sphere_volume(m) / 2.0))
}

/// Volume by integrating the hyperbolic density over the Klein-chart image,
/// which is a Euclidean simplex. Compact simplices only.
pub fn volume_mc(t: &GeodesicSimplex, cfg: &AngleConfig) -> Result<Estimate> {
    t.require_top(cfg.degeneracy_ratio)?;
    if t.has_ideal_vertex() {
        return Err(Error::Unsupported("Klein-chart integration needs finite vertices".into()));
    }
    let m = t.ambient_dim;
    let pts: Vec<Vec<f64>> = t.vertices.iter().map(|p| p.as_finite().unwrap().klein()).collect();
    let edges = DMatrix::from_fn(m, m, |i, j| pts[j + 1][i] - pts[0][i]);
    let factorial: f64 = (1..=m).map(|i| i as f64).product();
    let euclid = edges.determinant().abs() / factorial;
    let exponent = -(m as f64 + 1.0) / 2.0;
    let parts = chunked(cfg.samples, derive_seed(cfg.seed, &[0x766f_6c]), |rng, count| {
        let (mut s, mut s2) = (0.0, 0.0);
        let mut w = [0.0f64; 5];
        for _ in 0..count {
            let mut tot = 0.0;
            for wi in w.iter_mut().take(m + 1) {
                *wi = rng.sample(Exp1);
                tot += *wi;
            }
            let mut r2 = 0.0;
            for i in 0..m {
                let xi: f64 = (0..=m).map(|j| w[j] * pts[j][i]).sum::<f64>() / tot;
                r2 += xi * xi;
            }
            let d = (1.0 - r2).powf(exponent);
            s += d;
            s2 += d * d;
        }
        (s, s2)
    });
    let (s, s2) = parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = cfg.samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(Estimate { value: euclid * mean, stderr: euclid * (var / n).sqrt(), samples: cfg.samples, exact: false })
}

/// `pi - (sum of vertex angles)` of a triangle in H^2.
pub fn area_defect(t: &GeodesicSimplex) -> Result<f64> {
    if t.ambient_dim != 2 || t.dim() != 2 {
        return Err(Error::Unsupported("angle defect is defined for triangles in H^2".into()));
    }
    let cfg = AngleConfig::new(0);
    let mut sum = 0.0;
    for i in 0..3 {
        sum += interior_angle(t, &Face { indices: vec![i] }, &cfg)?.value * 2.0 * PI;
    }
    Ok(PI - sum)
}

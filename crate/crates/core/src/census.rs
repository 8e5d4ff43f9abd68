//! The angle census at a face class (signed sum of image interior angles
//! over its star) and the degree of the induced map on its link.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::develop::{DevelopedStar, EquivariantMap};
use crate::error::{Error, Result};
use crate::minkowski::{log_direction, tangent_basis, HPoint, MinkowskiVector};
use crate::rng::{derive_seed, rng_from};
use crate::simplex::{interior_angle, AngleConfig, Estimate};

const CENSUS_TAG: u64 = 0x63656e;
const DEGREE_TAG: u64 = 0x646567;
/// Membership coefficients closer than this to zero trigger a new direction.
pub const DEGREE_BOUNDARY_TOL: f64 = 1e-9;
const DEGREE_RETRIES: u64 = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusConfig {
    pub angle: AngleConfig,
    /// Estimate angles of nearly degenerate image simplices instead of
    /// rejecting them.
    pub allow_near_degenerate: bool,
    pub with_degree: bool,
}

impl CensusConfig {
    pub fn new(seed: u64) -> Self {
        Self { angle: AngleConfig::new(seed), allow_near_degenerate: false, with_degree: true }
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.angle = self.angle.with_samples(samples);
        self
    }

    pub fn near_degenerate(mut self, allow: bool) -> Self {
        self.allow_near_degenerate = allow;
        self
    }

    pub fn degree(mut self, on: bool) -> Self {
        self.with_degree = on;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusEntry {
    pub class: usize,
    pub dim: usize,
    pub cusp: bool,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub exact: bool,
    pub degree: Option<i64>,
    /// Why no degree was attached, when one was requested.
    pub degree_note: Option<String>,
}

impl CensusEntry {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, stderr: self.stderr, samples: self.samples, exact: self.exact }
    }

    pub fn rounded(&self) -> i64 {
        self.value.round() as i64
    }

    fn offset(&self) -> f64 {
        (self.value - self.value.round()).abs()
    }

    /// The nearest integer is unambiguous: the value sits more than three
    /// standard errors inside its rounding cell.
    pub fn certified(&self) -> bool {
        0.5 - self.offset() > 3.0 * self.stderr
    }

    /// Consistent with an integer at three standard errors.
    pub fn integral(&self) -> bool {
        self.offset() < 3.0 * self.stderr + 1e-6
    }
}

/// `sum over the developed star of epsilon * W(image sigma, image tau)`.
pub fn census(f: &EquivariantMap, class: usize, cfg: &CensusConfig) -> Result<CensusEntry> {
    let star = f.develop_star(class)?;
    census_of_star(f, &star, cfg)
}

fn census_of_star(f: &EquivariantMap, star: &DevelopedStar, cfg: &CensusConfig) -> Result<CensusEntry> {
    let mut angle_cfg = cfg.angle;
    if cfg.allow_near_degenerate {
        angle_cfg.degeneracy_ratio = 0.0;
    }
    let mut total = Estimate::zero();
    for (i, e) in star.entries.iter().enumerate() {
        if e.epsilon == 0 && !cfg.allow_near_degenerate {
            return Err(Error::DegenerateSimplex(format!(
                "image of top simplex {} in the star of face class {}",
                e.incidence.simplex, star.class
            )));
        }
        let sign = if e.epsilon != 0 { e.epsilon } else { e.orientation * det_sign(&e.image) };
        let c = angle_cfg.derived(&[CENSUS_TAG, star.class as u64, i as u64]);
        let w = interior_angle(&e.image, &e.face, &c)?;
        total = total.plus(w.signed().scaled(sign as f64));
    }
    let fc = &f.glued().classes()[star.class];
    Ok(CensusEntry {
        class: star.class,
        dim: fc.dim,
        cusp: fc.cusp_end.is_some(),
        value: total.value,
        stderr: total.stderr,
        samples: total.samples,
        exact: total.exact,
        degree: None,
        degree_note: None,
    })
}

fn det_sign(t: &crate::simplex::GeodesicSimplex) -> i8 {
    if t.orientation_det() >= 0.0 {
        1
    } else {
        -1
    }
}

/// Degree of the map from the link of the face to the unit sphere of the
/// normal space of its image, counted over a random generic direction.
pub fn link_degree(f: &EquivariantMap, class: usize, seed: u64) -> Result<i64> {
    let star = f.develop_star(class)?;
    degree_of_star(f, &star, seed)
}

fn degree_of_star(f: &EquivariantMap, star: &DevelopedStar, seed: u64) -> Result<i64> {
    if star.cusp {
        return Err(Error::Degree("no link degree at a cusp point".into()));
    }
    if star.open || !star.link.is_sphere() {
        return Err(Error::NonSphereLink(star.class));
    }
    if let Some(e) = star.entries.iter().find(|e| e.epsilon == 0) {
        return Err(Error::DegenerateSimplex(format!("image of top simplex {}", e.incidence.simplex)));
    }
    let m = f.dim();
    let dim = f.glued().classes()[star.class].dim;
    let r = m - dim;
    if r == 0 {
        return Ok(star.entries.iter().map(|e| e.epsilon as i64).sum());
    }
    let x = star.basepoint.as_ref().ok_or(Error::NoBasepoint)?;
    let basis = tangent_basis(x);
    let coords = |v: &MinkowskiVector| -> DVector<f64> { DVector::from_iterator(m, basis.iter().map(|b| b.vector().dot(v))) };

    // orthonormal basis of the normal space of the face image at x
    let first = &star.entries[0];
    let mut frame: Vec<DVector<f64>> = Vec::new();
    let along: Vec<DVector<f64>> = if dim == 0 {
        Vec::new()
    } else {
        first
            .incidence
            .embedding
            .iter()
            .map(|&i| Ok(coords(log_direction(x, &first.image.vertices()[i])?.vector())))
            .collect::<Result<_>>()?
    };
    let n_along = along.len();
    let candidates = along.into_iter().chain((0..m).map(|i| DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 })));
    let mut tangent_count = 0;
    for (k, mut v) in candidates.enumerate() {
        for b in &frame {
            let p = b.dot(&v);
            v -= b * p;
        }
        let n = v.norm();
        if n > 1e-6 {
            frame.push(v / n);
            if k < n_along {
                tangent_count += 1;
            }
        }
        if frame.len() == m {
            break;
        }
    }
    if tangent_count != dim {
        return Err(Error::Degree("image of the face is degenerate".into()));
    }
    let normal = &frame[dim..];

    let mut inverses = Vec::with_capacity(star.entries.len());
    for e in &star.entries {
        let rest: Vec<usize> = (0..=m).filter(|i| !e.incidence.embedding.contains(i)).collect();
        let mut cols = Vec::with_capacity(r);
        for &i in &rest {
            let d = coords(log_direction(x, &e.image.vertices()[i])?.vector());
            cols.push(DVector::from_iterator(r, normal.iter().map(|n| n.dot(&d))));
        }
        let mat = DMatrix::from_columns(&cols);
        let inv = mat
            .clone()
            .try_inverse()
            .filter(|_| mat.determinant().abs() > 1e-12)
            .ok_or_else(|| Error::Degree(format!("spherical image of top simplex {} is degenerate", e.incidence.simplex)))?;
        inverses.push((inv, e.epsilon as i64));
    }

    'attempt: for attempt in 0..DEGREE_RETRIES {
        let mut rng = rng_from(derive_seed(seed, &[DEGREE_TAG, star.class as u64, attempt]));
        let u = DVector::from_fn(r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut degree = 0;
        for (inv, eps) in &inverses {
            let lambda = inv * &u;
            let scale = lambda.amax().max(1.0);
            if lambda.iter().any(|l| l.abs() <= DEGREE_BOUNDARY_TOL * scale) {
                continue 'attempt;
            }
            if lambda.iter().all(|&l| l > 0.0) {
                degree += eps;
            }
        }
        return Ok(degree);
    }
    Err(Error::Degree("no generic direction found".into()))
}

/// Census at every face class, with link degrees attached at non-cusp
/// classes whose links are spheres. Failures are reported per class.
pub fn census_all(f: &EquivariantMap, cfg: &CensusConfig) -> Vec<Result<CensusEntry>> {
    (0..f.glued().classes().len())
        .into_par_iter()
        .map(|c| {
            let star = f.develop_star(c)?;
            let mut entry = census_of_star(f, &star, cfg)?;
            if cfg.with_degree && !entry.cusp {
                match degree_of_star(f, &star, cfg.angle.seed) {
                    Ok(d) => entry.degree = Some(d),
                    Err(e) => entry.degree_note = Some(e.to_string()),
                }
            }
            Ok(entry)
        })
        .collect()
}

/// `sum over classes of (-1)^dim * census`.
pub fn alternating_total(entries: &[CensusEntry]) -> Estimate {
    entries
        .iter()
        .map(|e| if e.dim % 2 == 0 { e.estimate() } else { e.estimate().scaled(-1.0) })
        .sum()
}

/// The image of the interior base point of a face class.
pub fn face_basepoint(f: &EquivariantMap, class: usize) -> Result<Option<HPoint>> {
    Ok(f.develop_star(class)?.basepoint)
}

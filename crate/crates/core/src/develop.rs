//! Representations, vertex images, and the piecewise-geodesic equivariant map
//! they determine, developed one star at a time.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::complex::{GluedComplex, Incidence, Link};
use crate::error::{Error, Result};
use crate::minkowski::{exp_map, random_unit_tangent, Isometry, Point};
use crate::rng::{derive_seed, rng_from};
use crate::simplex::{interior_basepoint, Face, GeodesicSimplex, DEGENERACY_RATIO};
use crate::minkowski::HPoint;

/// Agreement required between images related by a pairing or a closing word.
pub const EQUIVARIANCE_TOL: f64 = 1e-6;

/// Generator matrices of a representation; relations are not checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    generators: Vec<Isometry>,
    dim: usize,
}

impl Representation {
    pub fn new(generators: Vec<Isometry>, dim: usize) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
        }
        Ok(Self { generators, dim })
    }

    pub fn trivial(dim: usize, count: usize) -> Self {
        Self { generators: vec![Isometry::identity(dim); count], dim }
    }

    pub fn generators(&self) -> &[Isometry] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Product `g_{w_0} g_{w_1} ...`; negative indices are inverses.
    pub fn evaluate_word(&self, word: &[i32]) -> Result<Isometry> {
        let mut out = Isometry::identity(self.dim);
        for &i in word {
            let g = self.generator(i)?;
            out = out.compose(&if i > 0 { g.clone() } else { g.inverse() });
        }
        Ok(out)
    }

    fn generator(&self, i: i32) -> Result<&Isometry> {
        let k = i.unsigned_abs() as usize;
        if k == 0 || k > self.generators.len() {
            return Err(Error::GeneratorOutOfRange { index: i, count: self.generators.len() });
        }
        Ok(&self.generators[k - 1])
    }

    /// `r g r^-1` for every generator.
    pub fn conjugated(&self, r: &Isometry) -> Self {
        let ri = r.inverse();
        Self { generators: self.generators.iter().map(|g| r.compose(g).compose(&ri)).collect(), dim: self.dim }
    }
}

/// Wire format of a map: generator matrices (rows) and images by vertex id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapData {
    pub dim: usize,
    pub generators: Vec<Vec<Vec<f64>>>,
    pub images: BTreeMap<usize, Point>,
}

impl MapData {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }
}

/// A representation together with vertex images on the lift-level vertex
/// ids of a glued complex, consistent with every pairing.
#[derive(Clone, Debug)]
pub struct EquivariantMap {
    glued: Arc<GluedComplex>,
    rep: Representation,
    images: BTreeMap<usize, Point>,
}

impl EquivariantMap {
    pub fn new(glued: Arc<GluedComplex>, rep: Representation, images: BTreeMap<usize, Point>) -> Result<Self> {
        let k = glued.complex();
        let m = k.dim;
        if rep.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: rep.dim() });
        }
        for v in &k.vertices {
            let p = images.get(&v.id).ok_or_else(|| Error::InvalidMap(format!("vertex {} has no image", v.id)))?;
            if p.dim() != m {
                return Err(Error::DimensionMismatch { expected: m, got: p.dim() });
            }
            if p.is_ideal() && !k.is_cusp(v.id) {
                return Err(Error::InvalidMap(format!("non-cusp vertex {} has an ideal image", v.id)));
            }
        }
        for (i, pr) in k.pairings.iter().enumerate() {
            let g = rep.evaluate_word(&pr.word)?;
            for &[a, b] in &pr.map {
                let moved = g.apply(&images[&a]);
                if !moved.approx_eq(&images[&b], EQUIVARIANCE_TOL) {
                    return Err(Error::EquivarianceViolation(format!(
                        "pairing {i}: image of vertex {b} is not the image of vertex {a} moved by the pairing word"
                    )));
                }
            }
        }
        Ok(Self { glued, rep, images })
    }

    pub fn from_data(glued: Arc<GluedComplex>, data: &MapData) -> Result<Self> {
        let gens = data.generators.iter().map(|r| Isometry::from_rows(r)).collect::<Result<Vec<_>>>()?;
        Self::new(glued, Representation::new(gens, data.dim)?, data.images.clone())
    }

    pub fn to_data(&self) -> MapData {
        MapData {
            dim: self.rep.dim(),
            generators: self.rep.generators().iter().map(Isometry::rows).collect(),
            images: self.images.clone(),
        }
    }

    pub fn glued(&self) -> &Arc<GluedComplex> {
        &self.glued
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn images(&self) -> &BTreeMap<usize, Point> {
        &self.images
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    /// Same representation, new images (re-validated).
    pub fn with_images(&self, images: BTreeMap<usize, Point>) -> Result<Self> {
        Self::new(self.glued.clone(), self.rep.clone(), images)
    }

    /// Post-composition with an isometry `r` of the target: images `r f`,
    /// representation `r rho r^-1`.
    pub fn transformed(&self, r: &Isometry) -> Result<Self> {
        let images = self.images.iter().map(|(&v, p)| (v, r.apply(p))).collect();
        Self::new(self.glued.clone(), self.rep.conjugated(r), images)
    }

    /// Image of top simplex `s` in the fundamental-domain lift.
    pub fn simplex_image(&self, s: usize) -> GeodesicSimplex {
        let t = &self.glued.complex().top[s];
        GeodesicSimplex::new(t.verts.iter().map(|v| self.images[v].clone()).collect(), self.dim())
            .expect("top simplex has m+1 vertices of dimension m")
    }

    fn transported_image(&self, s: usize, word: &[i32]) -> Result<GeodesicSimplex> {
        let base = self.simplex_image(s);
        if word.is_empty() {
            return Ok(base);
        }
        Ok(base.transformed(&self.rep.evaluate_word(word)?))
    }

    pub fn develop_star(&self, class: usize) -> Result<DevelopedStar> {
        self.develop_star_rooted(class, None)
    }

    /// Develops the star of a face class into a common neighbourhood of one
    /// lift of the face. Revisits through a different word must reproduce the
    /// same images, except around cusp points where peripheral words differ.
    pub fn develop_star_rooted(&self, class: usize, root: Option<usize>) -> Result<DevelopedStar> {
        let star = self.glued.star_rooted(class, root)?;
        let cusp = self.glued.is_cusp_class(class);
        let mut entries = Vec::with_capacity(star.incidences.len());
        for inc in &star.incidences {
            let image = self.transported_image(inc.simplex, &inc.word)?;
            let orientation = self.glued.complex().top[inc.simplex].orientation;
            entries.push(StarEntry {
                face: Face::new(inc.embedding.clone(), self.dim())?,
                epsilon: epsilon_sign(&image, orientation),
                orientation,
                image,
                incidence: inc.clone(),
            });
        }
        if !cusp {
            for (k, word) in &star.closures {
                let other = self.transported_image(entries[*k].incidence.simplex, word)?;
                let same = entries[*k]
                    .image
                    .vertices()
                    .iter()
                    .zip(other.vertices())
                    .all(|(p, q)| p.approx_eq(q, EQUIVARIANCE_TOL));
                if !same {
                    return Err(Error::EquivarianceViolation(format!(
                        "star of face class {class} does not close up under word {word:?}"
                    )));
                }
            }
        }
        let first = &entries[0];
        let basepoint = match interior_basepoint(&first.image, &first.face) {
            Ok(x) => Some(x),
            Err(Error::NoBasepoint) => None,
            Err(e) => return Err(e),
        };
        Ok(DevelopedStar { class, cusp, open: star.open, basepoint, entries, link: star.link })
    }

    pub fn nondegeneracy_check(&self) -> NondegeneracyReport {
        let ratios: Vec<f64> = (0..self.glued.complex().top.len()).map(|s| self.simplex_image(s).singular_ratio()).collect();
        NondegeneracyReport {
            degenerate: (0..ratios.len()).filter(|&s| !(ratios[s] > DEGENERACY_RATIO)).collect(),
            min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Moves the image of each selected vertex class (default: every
    /// non-cusp class) to a random point within distance `radius`, drawn as
    /// a uniform radius times a uniform direction, and re-propagates the
    /// images equivariantly. Ideal images are never moved.
    pub fn perturb(&self, radius: f64, seed: u64, classes: Option<&[usize]>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidMap("perturbation radius must be positive".into()));
        }
        let g = &self.glued;
        let selected: Vec<usize> = match classes {
            Some(c) => c.to_vec(),
            None => (0..g.classes().len()).filter(|&c| g.classes()[c].dim == 0 && !g.is_cusp_class(c)).collect(),
        };
        let mut reps: BTreeMap<usize, Point> = BTreeMap::new();
        for (c, class) in g.classes().iter().enumerate().filter(|(_, c)| c.dim == 0) {
            let r = class.rep[0];
            let p = &self.images[&r];
            let moved = match p {
                Point::Finite(x) if selected.contains(&c) => {
                    let mut rng = rng_from(derive_seed(seed, &[c as u64]));
                    let u = random_unit_tangent(x, &mut rng);
                    Point::Finite(exp_map(&u, radius * rng.gen::<f64>()))
                }
                _ => p.clone(),
            };
            reps.insert(r, moved);
        }
        self.with_images(propagate_images(g, &self.rep, &reps)?)
    }
}

/// Extends images given on vertex-class representatives to every vertex id
/// by the deck words of [`GluedComplex::vertex_transports`].
pub fn propagate_images(
    glued: &GluedComplex,
    rep: &Representation,
    rep_images: &BTreeMap<usize, Point>,
) -> Result<BTreeMap<usize, Point>> {
    glued
        .vertex_transports()
        .into_iter()
        .map(|(v, (r, w))| {
            let p = rep_images.get(&r).ok_or_else(|| Error::InvalidMap(format!("class representative {r} has no image")))?;
            if w.is_empty() {
                return Ok((v, p.clone()));
            }
            Ok((v, rep.evaluate_word(&w)?.apply(p)))
        })
        .collect()
}

/// Sign of the image orientation relative to the source orientation; 0 for
/// degenerate images.
pub fn epsilon_sign(image: &GeodesicSimplex, source_orientation: i8) -> i8 {
    if !image.is_top() || image.is_degenerate() {
        return 0;
    }
    let d = image.orientation_det();
    if d > 0.0 {
        source_orientation
    } else {
        -source_orientation
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarEntry {
    pub incidence: Incidence,
    pub image: GeodesicSimplex,
    /// Positions of the face inside `image`.
    pub face: Face,
    pub orientation: i8,
    pub epsilon: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DevelopedStar {
    pub class: usize,
    pub cusp: bool,
    pub open: bool,
    /// Image of the face's interior base point; `None` at an ideal vertex.
    pub basepoint: Option<HPoint>,
    pub entries: Vec<StarEntry>,
    pub link: Link,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NondegeneracyReport {
    pub degenerate: Vec<usize>,
    pub min_ratio: f64,
}

impl NondegeneracyReport {
    pub fn is_nondegenerate(&self) -> bool {
        self.degenerate.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{Complex, GlueOptions, TopSimplex, VertexRecord};
    use crate::minkowski::distance;

    fn polar(r: f64, t: f64) -> Point {
        Point::Finite(HPoint::from_coords(vec![r.cosh(), r.sinh() * t.cos(), r.sinh() * t.sin()]).unwrap())
    }

    #[test]
    fn word_evaluation() {
        let a = Isometry::boost(2, 1, 0.7);
        let b = Isometry::rotation(2, 1, 2, 0.3);
        let c = Isometry::boost(2, 2, -0.4);
        let rho = Representation::new(vec![a.clone(), b.clone(), c.clone()], 2).unwrap();
        assert_eq!(rho.evaluate_word(&[]).unwrap(), Isometry::identity(2));
        let id = rho.evaluate_word(&[1, 2, -2, -1]).unwrap();
        assert!((id.matrix() - Isometry::identity(2).matrix()).abs().max() < 1e-9);
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        assert!((left.matrix() - right.matrix()).abs().max() < 1e-9);
        assert!((rho.evaluate_word(&[1, 2, 3]).unwrap().matrix() - left.matrix()).abs().max() < 1e-12);
        assert_eq!(rho.evaluate_word(&[4]), Err(Error::GeneratorOutOfRange { index: 4, count: 3 }));
        assert!(matches!(rho.evaluate_word(&[0]), Err(Error::GeneratorOutOfRange { .. })));
    }

    #[test]
    fn epsilon_signs() {
        let t = GeodesicSimplex::new(vec![polar(0.0, 0.0), polar(1.0, 0.0), polar(1.0, 1.5)], 2).unwrap();
        assert_eq!(epsilon_sign(&t, 1), 1);
        assert_eq!(epsilon_sign(&t, -1), -1);
        let mut v = t.vertices().to_vec();
        v.swap(1, 2);
        assert_eq!(epsilon_sign(&GeodesicSimplex::new(v, 2).unwrap(), 1), -1);
        let flat = GeodesicSimplex::new(vec![polar(1.0, 0.0), polar(0.0, 0.0), polar(1.0, std::f64::consts::PI)], 2).unwrap();
        assert_eq!(epsilon_sign(&flat, 1), 0);
    }

    fn hexagon_disk() -> (Arc<GluedComplex>, BTreeMap<usize, Point>) {
        // fan of six triangles around vertex 0, boundary left open
        let top = (0..6).map(|k| TopSimplex { verts: vec![0, k + 1, (k + 1) % 6 + 1], orientation: 1 }).collect();
        let k = Complex { dim: 2, ends: 0, vertices: (0..7).map(VertexRecord::interior).collect(), top, pairings: vec![] };
        let g = Arc::new(k.glue(GlueOptions::with_boundary()).unwrap());
        let mut images = BTreeMap::from([(0, polar(0.0, 0.0))]);
        for k in 0..6 {
            images.insert(k + 1, polar(0.8, k as f64 * std::f64::consts::PI / 3.0));
        }
        (g, images)
    }

    #[test]
    fn star_without_words_uses_raw_images() {
        let (g, images) = hexagon_disk();
        let f = EquivariantMap::new(g, Representation::trivial(2, 0), images.clone()).unwrap();
        let s = f.develop_star(0).unwrap();
        assert_eq!(s.entries.len(), 6);
        for e in &s.entries {
            assert_eq!(e.epsilon, 1);
            assert_eq!(e.image, f.simplex_image(e.incidence.simplex));
        }
        assert_eq!(s.basepoint.as_ref(), images[&0].as_finite());
        assert!(f.nondegeneracy_check().is_nondegenerate());
    }

    #[test]
    fn collapsed_images_are_degenerate() {
        let (g, images) = hexagon_disk();
        let point: BTreeMap<usize, Point> = images.keys().map(|&k| (k, polar(0.3, 0.2))).collect();
        let f = EquivariantMap::new(g, Representation::trivial(2, 0), point).unwrap();
        assert_eq!(f.nondegeneracy_check().degenerate.len(), 6);
        assert!(f.develop_star(0).unwrap().entries.iter().all(|e| e.epsilon == 0));
    }

    #[test]
    fn non_cusp_vertices_need_finite_images() {
        let (g, mut images) = hexagon_disk();
        images.insert(3, Point::Ideal(crate::minkowski::IdealPoint::from_direction(&[1.0, 0.0]).unwrap()));
        assert!(matches!(EquivariantMap::new(g, Representation::trivial(2, 0), images), Err(Error::InvalidMap(_))));
    }

    #[test]
    fn perturbation_stays_within_radius() {
        let (g, images) = hexagon_disk();
        let f = EquivariantMap::new(g, Representation::trivial(2, 0), images).unwrap();
        for r in [1e-3, 0.05, 0.3] {
            let p = f.perturb(r, 9, None).unwrap();
            for (v, q) in p.images() {
                let d = distance(q.as_finite().unwrap(), f.images()[v].as_finite().unwrap());
                assert!(d < r && d > 0.0);
            }
            assert_eq!(p.images(), f.perturb(r, 9, None).unwrap().images());
        }
        let only = f.perturb(0.1, 1, Some(&[0])).unwrap();
        assert_eq!(only.images()[&3], f.images()[&3]);
        assert_ne!(only.images()[&0], f.images()[&0]);
    }

    #[test]
    fn map_data_round_trip() {
        let (g, images) = hexagon_disk();
        let rho = Representation::new(vec![Isometry::boost(2, 1, 0.3)], 2).unwrap();
        let f = EquivariantMap::new(g.clone(), rho, images).unwrap();
        let s = f.to_data().to_json();
        let back = EquivariantMap::from_data(g, &MapData::from_json(&s).unwrap()).unwrap();
        assert_eq!(back.to_data().to_json(), s);
        assert_eq!(back.to_data(), f.to_data());
    }
}

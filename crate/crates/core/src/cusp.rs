//! Toric-cusp experiments: the degenerate cone map `f0` whose end images lie
//! in a totally geodesic plane (or end at an ideal point), perturbation
//! families `f_k` converging to it, and the covering relation between cusp
//! censuses of a cone end and of a finite cover of its cross-section.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::census::{alternating_total, census, CensusConfig, CensusEntry};
use crate::complex::{Complex, GlueOptions};
use crate::develop::{EquivariantMap, MapData, Representation};
use crate::error::{Error, Result};
use crate::minkowski::{distance, Isometry, MinkowskiVector, Point};
use crate::simplex::{AngleConfig, Estimate};
use crate::volume::{census_entries, normalize, rep_volume_simplices};

/// Distance from a plane below which a point counts as lying on it.
pub const PLANE_TOL: f64 = 1e-9;
/// Perturbation attempts per schedule entry before giving up on degeneracy.
pub const PERTURB_RETRIES: u64 = 5;

/// What an end's cusp vertex and cross-section are sent to by `f0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ToricTarget {
    /// The cusp goes to an ideal point; cross-section images are free.
    Ideal { eta: Point },
    /// Cross-section images lie in the plane through `base` spanned by the
    /// orthonormal tangent vectors `u`, `v`; the cusp goes to `eta` on it.
    Plane { base: Point, u: Vec<f64>, v: Vec<f64>, eta: Point },
}

impl ToricTarget {
    pub fn eta(&self) -> &Point {
        match self {
            ToricTarget::Ideal { eta } | ToricTarget::Plane { eta, .. } => eta,
        }
    }

    fn plane_frame(&self) -> Option<[MinkowskiVector; 3]> {
        match self {
            ToricTarget::Plane { base, u, v, .. } => Some([
                base.rep().clone(),
                MinkowskiVector::new(u.clone()).ok()?,
                MinkowskiVector::new(v.clone()).ok()?,
            ]),
            ToricTarget::Ideal { .. } => None,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.eta().dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.eta().dim() });
        }
        let ToricTarget::Plane { base, .. } = self else { return Ok(()) };
        if base.is_ideal() {
            return Err(Error::InvalidExperiment("plane base point must be finite".into()));
        }
        let [b, u, v] = self.plane_frame().ok_or_else(|| Error::InvalidExperiment("bad plane tangent vectors".into()))?;
        if u.dim() != m || v.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: u.dim().min(v.dim()) });
        }
        let tol = 1e-9;
        let ok = (u.dot(&u) - 1.0).abs() < tol
            && (v.dot(&v) - 1.0).abs() < tol
            && u.dot(&v).abs() < tol
            && b.dot(&u).abs() < tol
            && b.dot(&v).abs() < tol;
        if !ok {
            return Err(Error::InvalidExperiment("plane tangent vectors are not orthonormal at the base point".into()));
        }
        if !self.contains(self.eta()) {
            return Err(Error::InvalidExperiment("eta does not lie on the plane".into()));
        }
        Ok(())
    }

    /// Whether `p` lies on the target plane (always true for ideal targets).
    pub fn contains(&self, p: &Point) -> bool {
        let Some([b, u, v]) = self.plane_frame() else { return true };
        let w = p.rep();
        let proj = b.scaled(-w.dot(&b)).axpy(w.dot(&u), &u).axpy(w.dot(&v), &v);
        w.sub(&proj).euclid_norm() <= PLANE_TOL * w.euclid_norm().max(1.0)
    }
}

/// The map `f0`: each cusp vertex goes to its end's `eta`, every other
/// vertex to the supplied image. Images of vertices sharing a top simplex
/// with a plane-target cusp must lie on that plane, and each top simplex
/// must have pairwise distinct images.
pub fn build_f0(
    complex: &Complex,
    rep: Representation,
    targets: &[ToricTarget],
    images: &BTreeMap<usize, Point>,
) -> Result<EquivariantMap> {
    let glued = Arc::new(complex.glue(GlueOptions::with_boundary())?);
    if targets.len() != complex.ends {
        return Err(Error::InvalidExperiment(format!("{} targets for {} ends", targets.len(), complex.ends)));
    }
    for t in targets {
        t.validate(complex.dim)?;
    }
    let mut all = images.clone();
    for v in &complex.vertices {
        if let Some(e) = v.end {
            all.insert(v.id, targets[e].eta().clone());
        }
    }
    for (s, t) in complex.top.iter().enumerate() {
        for &c in t.verts.iter().filter(|&&c| complex.is_cusp(c)) {
            let target = &targets[complex.vertex(c).unwrap().end.unwrap()];
            for v in t.verts.iter().filter(|&&v| v != c) {
                let p = all.get(v).ok_or_else(|| Error::InvalidMap(format!("vertex {v} has no image")))?;
                if !target.contains(p) {
                    return Err(Error::InvalidExperiment(format!("image of vertex {v} is off the plane of its end")));
                }
            }
        }
        for (i, a) in t.verts.iter().enumerate() {
            for b in &t.verts[i + 1..] {
                if let (Some(p), Some(q)) = (all.get(a), all.get(b)) {
                    if p.approx_eq(q, 1e-9) {
                        return Err(Error::InvalidExperiment(format!("top simplex {s} has coinciding images")));
                    }
                }
            }
        }
    }
    EquivariantMap::new(glued, rep, all)
}

/// `d0 / 4` with `d0` a quarter of the smallest distance between finite
/// images of two vertices of one top simplex.
pub fn delta_threshold(f0: &EquivariantMap) -> f64 {
    let mut min = f64::INFINITY;
    for s in 0..f0.glued().complex().top.len() {
        let t = f0.simplex_image(s);
        let v = t.vertices();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if let (Some(p), Some(q)) = (v[i].as_finite(), v[j].as_finite()) {
                    min = min.min(distance(p, q));
                }
            }
        }
    }
    if !min.is_finite() {
        return 0.0;
    }
    min / 16.0
}

/// An `f0` together with its perturbation schedule, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspExperiment {
    pub complex: Complex,
    pub generators: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<ToricTarget>,
    /// Images of the non-cusp vertices under `f0`.
    pub images: BTreeMap<usize, Point>,
    #[serde(default = "default_schedule")]
    pub k_values: Vec<usize>,
    /// Overrides the computed threshold.
    #[serde(default)]
    pub delta: Option<f64>,
}

fn default_schedule() -> Vec<usize> {
    vec![1, 2, 4, 8, 16]
}

impl CuspExperiment {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment serializes")
    }

    pub fn representation(&self) -> Result<Representation> {
        let gens = self.generators.iter().map(|r| Isometry::from_rows(r)).collect::<Result<Vec<_>>>()?;
        Representation::new(gens, self.complex.dim)
    }

    pub fn f0(&self) -> Result<EquivariantMap> {
        build_f0(&self.complex, self.representation()?, &self.targets, &self.images)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspValue {
    pub class: usize,
    pub end: usize,
    pub value: f64,
    pub stderr: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitRow {
    pub k: usize,
    pub radius: f64,
    pub cusps: Vec<CuspValue>,
    /// `sum over all classes of (-1)^dim census`.
    pub total: Estimate,
    /// Rounded census at every non-cusp class.
    pub rounded: Vec<i64>,
    /// Non-cusp entries that failed certification.
    pub uncertified: usize,
    pub attempts: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitSeries {
    pub delta: f64,
    pub rows: Vec<LimitRow>,
    /// Per end, the smallest `C` with `|value(k)| <= C r_k + 3 stderr` for
    /// every row.
    pub envelope: Vec<f64>,
    /// Per end, `|value|` never grows by more than the combined 3-sigma
    /// allowance from one row to the next.
    pub decreasing: Vec<bool>,
    /// Every row rounds the non-cusp entries to the same integers.
    pub stable: bool,
    /// Times `delta` was halved before the series became stable.
    pub halvings: usize,
}

/// Census series along `f_k`, where `f_k` moves every non-cusp vertex class
/// of `f0` within `delta / k` (perturbation seed `seed ^ k`).
pub fn cusp_limit_experiment(
    f0: &EquivariantMap,
    k_values: &[usize],
    delta: f64,
    seed: u64,
    cfg: &CensusConfig,
) -> Result<LimitSeries> {
    if !(delta > 0.0) || k_values.iter().any(|&k| k == 0) {
        return Err(Error::InvalidExperiment("need delta > 0 and k >= 1".into()));
    }
    let g = f0.glued().clone();
    let cusps = g.cusp_classes();
    let cfg = cfg.near_degenerate(true).degree(false);
    let mut rows = Vec::new();
    for &k in k_values {
        let radius = delta / k as f64;
        let mut attempts = 0;
        let fk = loop {
            let s = seed ^ (k as u64) ^ (attempts << 32);
            attempts += 1;
            let fk = f0.perturb(radius, s, None)?;
            if fk.nondegeneracy_check().is_nondegenerate() {
                break fk;
            }
            if attempts >= PERTURB_RETRIES {
                return Err(Error::InvalidExperiment(format!("perturbations at k={k} stay degenerate")));
            }
        };
        let entries: Vec<CensusEntry> = census_entries(&fk, &cfg)?;
        let cusp_values = cusps
            .iter()
            .map(|&c| CuspValue {
                class: c,
                end: g.classes()[c].cusp_end.unwrap(),
                value: entries[c].value,
                stderr: entries[c].stderr,
                exact: entries[c].exact,
            })
            .collect();
        let noncusp: Vec<&CensusEntry> = entries.iter().filter(|e| !e.cusp).collect();
        rows.push(LimitRow {
            k,
            radius,
            cusps: cusp_values,
            total: alternating_total(&entries),
            rounded: noncusp.iter().map(|e| e.rounded()).collect(),
            uncertified: noncusp.iter().filter(|e| !e.certified()).count(),
            attempts,
        });
    }
    let envelope = (0..cusps.len())
        .map(|i| {
            rows.iter()
                .map(|r| ((r.cusps[i].value.abs() - 3.0 * r.cusps[i].stderr).max(0.0)) / r.radius)
                .fold(0.0, f64::max)
        })
        .collect();
    let decreasing = (0..cusps.len())
        .map(|i| {
            rows.windows(2).all(|w| {
                let (a, b) = (&w[0].cusps[i], &w[1].cusps[i]);
                b.value.abs() <= a.value.abs() + 3.0 * (a.stderr + b.stderr) + 1e-12
            })
        })
        .collect();
    let stable = rows.windows(2).all(|w| w[0].rounded == w[1].rounded);
    Ok(LimitSeries { delta, rows, envelope, decreasing, stable, halvings: 0 })
}

/// Maximum number of times [`stable_limit_experiment`] halves `delta`.
pub const MAX_HALVINGS: usize = 3;

/// [`cusp_limit_experiment`], halving `delta` (at most three times) while the
/// rounded non-cusp entries differ between rows. Returns the last series.
pub fn stable_limit_experiment(
    f0: &EquivariantMap,
    k_values: &[usize],
    delta: f64,
    seed: u64,
    cfg: &CensusConfig,
) -> Result<LimitSeries> {
    let mut delta = delta;
    let mut halvings = 0;
    loop {
        let mut s = cusp_limit_experiment(f0, k_values, delta, seed, cfg)?;
        s.halvings = halvings;
        if s.stable || halvings == MAX_HALVINGS {
            return Ok(s);
        }
        halvings += 1;
        delta /= 2.0;
    }
}

/// A simplicial covering of cone complexes: cover top simplex `i` lies over
/// base top simplex `simplex_map[i]`, vertex positions corresponding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub degree: usize,
    pub simplex_map: Vec<usize>,
}

impl Covering {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("covering serializes")
    }

    /// Checks the combinatorics and that the cover map lifts the base map;
    /// returns the induced map on face classes.
    pub fn validate(&self, base: &EquivariantMap, cover: &EquivariantMap) -> Result<HashMap<usize, usize>> {
        let (kb, kc) = (base.glued().complex(), cover.glued().complex());
        if kb.dim != kc.dim || self.simplex_map.len() != kc.top.len() || self.degree == 0 {
            return Err(Error::InvalidCovering("simplex map does not match the complexes".into()));
        }
        let mut count = vec![0usize; kb.top.len()];
        for &b in &self.simplex_map {
            *count.get_mut(b).ok_or_else(|| Error::InvalidCovering(format!("no base simplex {b}")))? += 1;
        }
        if let Some(b) = count.iter().position(|&c| c != self.degree) {
            return Err(Error::InvalidCovering(format!("base simplex {b} has {} preimages, expected {}", count[b], self.degree)));
        }
        let m = kb.dim;
        let mut class_map: HashMap<usize, usize> = HashMap::new();
        for (i, &b) in self.simplex_map.iter().enumerate() {
            if kb.top[b].orientation != kc.top[i].orientation {
                return Err(Error::InvalidCovering(format!("cover simplex {i} has the wrong orientation")));
            }
            for f in crate::simplex::face_subsets(m + 1) {
                let cc = cover.glued().class_at(i, f.indices());
                let cb = base.glued().class_at(b, f.indices());
                if *class_map.entry(cc).or_insert(cb) != cb {
                    return Err(Error::InvalidCovering(format!("face class {cc} of the cover lies over two base classes")));
                }
            }
            let (tb, tc) = (base.simplex_image(b), cover.simplex_image(i));
            for p in 0..=m {
                for q in p + 1..=m {
                    let (vb, vc) = (&tb.vertices(), &tc.vertices());
                    match (vb[p].as_finite().zip(vb[q].as_finite()), vc[p].as_finite().zip(vc[q].as_finite())) {
                        (Some((a, b2)), Some((c, d))) => {
                            if (distance(a, b2) - distance(c, d)).abs() > 1e-8 {
                                return Err(Error::InvalidCovering(format!("cover simplex {i} is not a lift of base simplex {b}")));
                            }
                        }
                        (None, None) => {}
                        _ => return Err(Error::InvalidCovering(format!("cover simplex {i} mixes ideal and finite images"))),
                    }
                }
            }
        }
        Ok(class_map)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringRow {
    pub base_class: usize,
    pub cover_class: usize,
    pub base: Estimate,
    pub cover: Estimate,
    /// `degree * base - cover`.
    pub difference: f64,
    pub combined_stderr: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringReport {
    pub degree: usize,
    pub rows: Vec<CoveringRow>,
    pub normalized_base: Option<f64>,
    pub normalized_cover: Option<f64>,
    pub holds: bool,
}

/// Checks `degree * census(K, c; F) = census(K', c'; F')` at every cusp.
pub fn covering_relation_check(
    base: &EquivariantMap,
    cover: &EquivariantMap,
    covering: &Covering,
    cfg: &CensusConfig,
) -> Result<CoveringReport> {
    let class_map = covering.validate(base, cover)?;
    let cfg = cfg.near_degenerate(true).degree(false);
    let d = covering.degree as f64;
    let mut rows = Vec::new();
    for cc in cover.glued().cusp_classes() {
        let cb = class_map[&cc];
        let b = census(base, cb, &cfg)?.estimate();
        let c = census(cover, cc, &cfg)?.estimate();
        let difference = d * b.value - c.value;
        let combined_stderr = (d * b.stderr).hypot(c.stderr);
        rows.push(CoveringRow {
            base_class: cb,
            cover_class: cc,
            agrees: difference.abs() < 3.0 * combined_stderr + 1e-9,
            base: b,
            cover: c,
            difference,
            combined_stderr,
        });
    }
    let normalized = |f: &EquivariantMap| {
        (f.dim() % 2 == 0).then(|| rep_volume_simplices(f, &cfg.angle).ok().map(|v| normalize(v, f.dim()).value)).flatten()
    };
    Ok(CoveringReport {
        degree: covering.degree,
        holds: !rows.is_empty() && rows.iter().all(|r| r.agrees),
        normalized_base: normalized(base),
        normalized_cover: normalized(cover),
        rows,
    })
}

/// Rebuilds a map for `complex` from its wire format.
pub fn map_from_data(complex: &Complex, data: &MapData, opts: GlueOptions) -> Result<EquivariantMap> {
    EquivariantMap::from_data(Arc::new(complex.glue(opts)?), data)
}

/// Unused-seed-safe default configuration for cusp censuses.
pub fn default_config(seed: u64, samples: usize) -> CensusConfig {
    CensusConfig { angle: AngleConfig::new(seed).with_samples(samples), allow_near_degenerate: true, with_degree: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::minkowski::HPoint;

    #[test]
    fn delta_is_positive_and_isometry_invariant() {
        let f0 = fixtures::cone4d().f0().unwrap();
        let d = delta_threshold(&f0);
        assert!(d > 0.0);
        let moved = f0.transformed(&Isometry::boost(4, 2, 0.7)).unwrap();
        assert!((delta_threshold(&moved) - d).abs() < 1e-9);
    }

    #[test]
    fn off_plane_image_is_rejected() {
        let mut e = fixtures::cone4d();
        let p = e.images.get_mut(&0).unwrap();
        *p = Isometry::rotation(4, 1, 3, 0.1).apply(p);
        assert!(matches!(e.f0(), Err(Error::InvalidExperiment(_)) | Err(Error::EquivarianceViolation(_))));
    }

    #[test]
    fn planar_control_does_not_vanish() {
        let e = fixtures::cone_circle_experiment(3, 0.8);
        let f0 = e.f0().unwrap();
        assert!(f0.nondegeneracy_check().is_nondegenerate());
        let s = cusp_limit_experiment(&f0, &e.k_values, delta_threshold(&f0), 7, &CensusConfig::new(0)).unwrap();
        for row in &s.rows {
            assert!((row.cusps[0].value - 0.8).abs() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn ideal_target_gives_zero() {
        let (k, _) = fixtures::cone_circle(3, 0.3);
        let eta = Point::Ideal(crate::minkowski::IdealPoint::from_direction(&[1.0, 0.0]).unwrap());
        let rep = Representation::new(vec![Isometry::identity(2)], 2).unwrap();
        let images: BTreeMap<usize, Point> = (0..3).map(|i| (i, fixtures::polar(2, 1.0, 0.5 + 0.3 * i as f64))).collect();
        let mut images = images;
        images.insert(3, images[&0].clone());
        let f0 = build_f0(&k, rep, &[ToricTarget::Ideal { eta }], &images).unwrap();
        let s = cusp_limit_experiment(&f0, &[1, 4], 0.05, 1, &CensusConfig::new(0)).unwrap();
        assert!(s.rows.iter().all(|r| r.cusps[0].value == 0.0 && r.cusps[0].exact));
    }

    #[test]
    fn planar_double_cover_doubles_the_census() {
        let p = fixtures::cover_pair_2d();
        let r = covering_relation_check(&p.base, &p.cover, &p.covering, &CensusConfig::new(0)).unwrap();
        assert!(r.holds, "{r:?}");
        assert!((r.rows[0].cover.value - 1.6).abs() < 1e-9);
        let id = Covering { degree: 1, simplex_map: vec![0, 1, 2] };
        let r = covering_relation_check(&p.base, &p.base, &id, &CensusConfig::new(0)).unwrap();
        assert!(r.holds && r.rows[0].difference == 0.0);
        let bad = Covering { degree: 2, simplex_map: vec![0, 0, 1, 1, 2, 2] };
        assert!(matches!(bad.validate(&p.base, &p.cover), Err(Error::InvalidCovering(_))));
    }

    #[test]
    fn toric_limit_shrinks() {
        let f0 = fixtures::cone4d().f0().unwrap();
        let d = delta_threshold(&f0);
        let cfg = CensusConfig::new(3).with_samples(20_000);
        let s = cusp_limit_experiment(&f0, &[1, 16], d, 11, &cfg).unwrap();
        let (a, b) = (&s.rows[0].cusps[0], &s.rows[1].cusps[0]);
        assert!(b.value.abs() < 0.02, "{s:?}");
        assert!(b.value.abs() <= a.value.abs() + 3.0 * (a.stderr + b.stderr));
    }

    #[test]
    fn experiment_round_trips() {
        let e = fixtures::cusp4d();
        let back = CuspExperiment::from_json(&e.to_json()).unwrap();
        assert_eq!(back, e);
        assert!(matches!(back.targets[0].eta(), Point::Finite(p) if p.vector().coords()[0] == HPoint::origin(4).vector().coords()[0]));
    }
}

//! Abstract simplicial complexes of closed and end-compactified manifolds,
//! glued along facets either directly or through face pairings that carry
//! deck-transformation words.
//!
//! Vertex ids live at the level of a fundamental domain in the universal
//! cover: a vertex id shared by two top simplices names one point of the
//! lift, while a pairing identifies the facet `a` with the facet `b` by
//! `position(b_vid) = g(word) * position(a_vid)`. Face classes of the quotient
//! come from union-find over lift-level faces through the pairing maps.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::face_subsets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Interior,
    Cusp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub kind: VertexKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl VertexRecord {
    pub fn interior(id: usize) -> Self {
        Self { id, kind: VertexKind::Interior, end: None }
    }

    pub fn cusp(id: usize, end: usize) -> Self {
        Self { id, kind: VertexKind::Cusp, end: Some(end) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopSimplex {
    pub verts: Vec<usize>,
    #[serde(rename = "or")]
    pub orientation: i8,
}

/// The facet of top simplex `simplex` opposite its vertex at `opposite`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FacetSlot {
    pub simplex: usize,
    pub opposite: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacePairing {
    pub a: FacetSlot,
    pub b: FacetSlot,
    /// `[a_vid, b_vid]` pairs.
    pub map: Vec<[usize; 2]>,
    /// 1-based generator indices, negative for inverses.
    #[serde(default)]
    pub word: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complex {
    pub dim: usize,
    #[serde(default)]
    pub ends: usize,
    pub vertices: Vec<VertexRecord>,
    pub top: Vec<TopSimplex>,
    #[serde(default)]
    pub pairings: Vec<FacePairing>,
}

/// Whether facets may be left unglued (cones over a cross-section).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GlueOptions {
    pub allow_boundary: bool,
}

impl GlueOptions {
    pub fn closed() -> Self {
        Self { allow_boundary: false }
    }

    pub fn with_boundary() -> Self {
        Self { allow_boundary: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Complex {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("complex serializes")
    }

    pub fn vertex(&self, id: usize) -> Option<&VertexRecord> {
        self.vertices.iter().find(|v| v.id == id)
    }

    pub fn is_cusp(&self, id: usize) -> bool {
        self.vertex(id).is_some_and(|v| v.kind == VertexKind::Cusp)
    }

    pub fn validate(&self, opts: GlueOptions) -> ValidationReport {
        match GluedComplex::build(self.clone(), opts) {
            Ok(_) => ValidationReport::default(),
            Err(violations) => ValidationReport { violations },
        }
    }

    pub fn glue(&self, opts: GlueOptions) -> Result<GluedComplex> {
        GluedComplex::build(self.clone(), opts).map_err(|v| Error::InvalidComplex(v.join("; ")))
    }
}

/// What lies across a facet slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Neighbor {
    Open,
    Direct { simplex: usize },
    Paired { pairing: usize, from_a: bool, simplex: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceClass {
    pub dim: usize,
    /// Lexicographically smallest lift-level face (sorted vertex ids).
    pub rep: Vec<usize>,
    /// Set for 0-dimensional classes of cusp vertices.
    pub cusp_end: Option<usize>,
}

/// A validated complex with its facet adjacency and face classes.
#[derive(Clone, Debug)]
pub struct GluedComplex {
    complex: Complex,
    opts: GlueOptions,
    neighbors: Vec<Vec<Neighbor>>,
    classes: Vec<FaceClass>,
    class_index: HashMap<Vec<usize>, usize>,
    position: Vec<HashMap<usize, usize>>,
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Sign of the permutation that sorts `seq`; 0 if it has repeats.
pub(crate) fn sort_sign(seq: &[usize]) -> i8 {
    let mut sign = 1;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            match seq[i].cmp(&seq[j]) {
                std::cmp::Ordering::Greater => sign = -sign,
                std::cmp::Ordering::Equal => return 0,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    sign
}

/// Cancels adjacent inverse pairs.
pub fn reduce_word(word: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(word.len());
    for &g in word {
        if out.last() == Some(&-g) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    out
}

pub fn invert_word(word: &[i32]) -> Vec<i32> {
    word.iter().rev().map(|g| -g).collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

impl GluedComplex {
    fn build(complex: Complex, opts: GlueOptions) -> std::result::Result<Self, Vec<String>> {
        let mut errs = Vec::new();
        let m = complex.dim;
        if m < 1 {
            return Err(vec!["dimension must be at least 1".into()]);
        }
        let mut known = HashMap::new();
        for v in &complex.vertices {
            if known.insert(v.id, v).is_some() {
                errs.push(format!("duplicate vertex id {}", v.id));
            }
            match (v.kind, v.end) {
                (VertexKind::Cusp, Some(e)) if e < complex.ends => {}
                (VertexKind::Cusp, e) => errs.push(format!("cusp vertex {} has end {:?} outside 0..{}", v.id, e, complex.ends)),
                (VertexKind::Interior, Some(_)) => errs.push(format!("interior vertex {} declares an end", v.id)),
                (VertexKind::Interior, None) => {}
            }
        }
        if complex.top.is_empty() {
            errs.push("no top simplices".into());
        }
        let mut position = Vec::with_capacity(complex.top.len());
        for (s, t) in complex.top.iter().enumerate() {
            if t.verts.len() != m + 1 {
                errs.push(format!("top simplex {s} has {} vertices, expected {}", t.verts.len(), m + 1));
            }
            if t.orientation != 1 && t.orientation != -1 {
                errs.push(format!("top simplex {s} has orientation {}, expected +1 or -1", t.orientation));
            }
            if let Some(v) = t.verts.iter().find(|v| !known.contains_key(v)) {
                errs.push(format!("top simplex {s} uses unknown vertex {v}"));
            }
            if sort_sign(&t.verts) == 0 {
                errs.push(format!("top simplex {s} repeats a vertex"));
            }
            position.push(t.verts.iter().enumerate().map(|(i, &v)| (v, i)).collect::<HashMap<_, _>>());
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        let facet_ids = |slot: FacetSlot| -> Vec<usize> {
            let t = &complex.top[slot.simplex];
            (0..=m).filter(|&i| i != slot.opposite).map(|i| t.verts[i]).collect()
        };

        // pairings
        let mut neighbors = vec![vec![Neighbor::Open; m + 1]; complex.top.len()];
        let mut paired: HashMap<FacetSlot, usize> = HashMap::new();
        for (p, pr) in complex.pairings.iter().enumerate() {
            let mut ok = true;
            for slot in [pr.a, pr.b] {
                if slot.simplex >= complex.top.len() || slot.opposite > m {
                    errs.push(format!("pairing {p} refers to missing facet slot {slot:?}"));
                    ok = false;
                } else if let Some(q) = paired.insert(slot, p) {
                    errs.push(format!("facet slot {slot:?} used by pairings {q} and {p}"));
                    ok = false;
                }
            }
            if pr.a == pr.b {
                errs.push(format!("pairing {p} glues a facet to itself"));
                ok = false;
            }
            if pr.word.contains(&0) {
                errs.push(format!("pairing {p} has generator index 0 in its word"));
            }
            if !ok {
                continue;
            }
            let fa = sorted(facet_ids(pr.a));
            let fb = sorted(facet_ids(pr.b));
            let ma = sorted(pr.map.iter().map(|e| e[0]).collect());
            let mb = sorted(pr.map.iter().map(|e| e[1]).collect());
            if fa != ma || fb != mb {
                errs.push(format!("pairing {p} map is not a bijection between the two facets"));
                continue;
            }
            neighbors[pr.a.simplex][pr.a.opposite] = Neighbor::Paired { pairing: p, from_a: true, simplex: pr.b.simplex };
            neighbors[pr.b.simplex][pr.b.opposite] = Neighbor::Paired { pairing: p, from_a: false, simplex: pr.a.simplex };
        }

        // direct sharing among unpaired slots
        let mut by_ids: BTreeMap<Vec<usize>, Vec<FacetSlot>> = BTreeMap::new();
        for s in 0..complex.top.len() {
            for j in 0..=m {
                let slot = FacetSlot { simplex: s, opposite: j };
                if !paired.contains_key(&slot) {
                    by_ids.entry(sorted(facet_ids(slot))).or_default().push(slot);
                }
            }
        }
        for (ids, slots) in &by_ids {
            match slots.as_slice() {
                [x, y] => {
                    if x.simplex == y.simplex {
                        errs.push(format!("top simplex {} meets itself along facet {ids:?}", x.simplex));
                    }
                    neighbors[x.simplex][x.opposite] = Neighbor::Direct { simplex: y.simplex };
                    neighbors[y.simplex][y.opposite] = Neighbor::Direct { simplex: x.simplex };
                }
                [_] if opts.allow_boundary => {}
                [x] => errs.push(format!("open facet {ids:?} of top simplex {}", x.simplex)),
                _ => errs.push(format!("facet {ids:?} is shared by {} top simplices", slots.len())),
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }

        // orientation coherence
        let induced = |slot: FacetSlot, relabel: &dyn Fn(usize) -> usize| -> i8 {
            let t = &complex.top[slot.simplex];
            let seq: Vec<usize> = facet_ids(slot).into_iter().map(relabel).collect();
            let parity = if slot.opposite % 2 == 0 { 1 } else { -1 };
            t.orientation * parity * sort_sign(&seq)
        };
        for slots in by_ids.values().filter(|s| s.len() == 2) {
            if induced(slots[0], &|v| v) + induced(slots[1], &|v| v) != 0 {
                errs.push(format!(
                    "orientations of top simplices {} and {} disagree along a shared facet",
                    slots[0].simplex, slots[1].simplex
                ));
            }
        }
        for (p, pr) in complex.pairings.iter().enumerate() {
            let map: HashMap<usize, usize> = pr.map.iter().map(|e| (e[0], e[1])).collect();
            if induced(pr.a, &|v| map[&v]) + induced(pr.b, &|v| v) != 0 {
                errs.push(format!("pairing {p} does not reverse the induced orientations"));
            }
        }

        // face classes
        let mut lift_faces: Vec<Vec<usize>> = Vec::new();
        let mut lift_index: HashMap<Vec<usize>, usize> = HashMap::new();
        for t in &complex.top {
            for f in face_subsets(m + 1) {
                let ids = sorted(f.indices().iter().map(|&i| t.verts[i]).collect());
                lift_index.entry(ids.clone()).or_insert_with(|| {
                    lift_faces.push(ids);
                    lift_faces.len() - 1
                });
            }
        }
        let mut uf = UnionFind::new(lift_faces.len());
        for pr in &complex.pairings {
            let map: HashMap<usize, usize> = pr.map.iter().map(|e| (e[0], e[1])).collect();
            let fa = facet_ids(pr.a);
            for f in face_subsets(fa.len()) {
                let a = sorted(f.indices().iter().map(|&i| fa[i]).collect());
                let b = sorted(a.iter().map(|v| map[v]).collect());
                uf.union(lift_index[&a], lift_index[&b]);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..lift_faces.len() {
            groups.entry(uf.find(i)).or_default().push(i);
        }
        let mut classes: Vec<(FaceClass, Vec<usize>)> = groups
            .into_values()
            .map(|members| {
                let rep = members.iter().map(|&i| lift_faces[i].clone()).min().unwrap();
                let dim = rep.len() - 1;
                let ends: Vec<Option<usize>> = if dim == 0 {
                    members.iter().map(|&i| known[&lift_faces[i][0]].end).collect()
                } else {
                    vec![None]
                };
                if ends.iter().any(|e| *e != ends[0]) {
                    errs.push(format!("vertex class of {} mixes cusp ends or cusp and interior vertices", rep[0]));
                }
                (FaceClass { dim, rep, cusp_end: ends[0] }, members)
            })
            .collect();
        classes.sort_by(|a, b| a.0.dim.cmp(&b.0.dim).then_with(|| a.0.rep.cmp(&b.0.rep)));
        if !errs.is_empty() {
            return Err(errs);
        }
        let mut class_index = HashMap::new();
        for (c, (_, members)) in classes.iter().enumerate() {
            for &i in members {
                class_index.insert(lift_faces[i].clone(), c);
            }
        }
        Ok(Self {
            complex,
            opts,
            neighbors,
            classes: classes.into_iter().map(|c| c.0).collect(),
            class_index,
            position,
        })
    }

    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    pub fn dim(&self) -> usize {
        self.complex.dim
    }

    pub fn options(&self) -> GlueOptions {
        self.opts
    }

    pub fn classes(&self) -> &[FaceClass] {
        &self.classes
    }

    pub fn class(&self, c: usize) -> Result<&FaceClass> {
        self.classes.get(c).ok_or_else(|| Error::InvalidFace(format!("no face class {c}")))
    }

    /// Class of a lift-level face given by vertex ids in any order.
    pub fn class_of(&self, ids: &[usize]) -> Option<usize> {
        self.class_index.get(&sorted(ids.to_vec())).copied()
    }

    /// Class of the face of top simplex `s` at the given positions.
    pub fn class_at(&self, s: usize, positions: &[usize]) -> usize {
        let t = &self.complex.top[s];
        self.class_index[&sorted(positions.iter().map(|&i| t.verts[i]).collect())]
    }

    pub fn is_cusp_class(&self, c: usize) -> bool {
        self.classes.get(c).is_some_and(|f| f.cusp_end.is_some())
    }

    pub fn cusp_classes(&self) -> Vec<usize> {
        (0..self.classes.len()).filter(|&c| self.is_cusp_class(c)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.classes.iter().map(|c| if c.dim % 2 == 0 { 1 } else { -1 }).sum()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.dim() + 1];
        for c in &self.classes {
            n[c.dim] += 1;
        }
        n
    }

    /// For every vertex id, a word `w` and the class representative `r` with
    /// `position(id) = g(w) * position(r)`.
    pub fn vertex_transports(&self) -> BTreeMap<usize, (usize, Vec<i32>)> {
        let mut adj: HashMap<usize, Vec<(usize, Vec<i32>)>> = HashMap::new();
        for pr in &self.complex.pairings {
            for e in &pr.map {
                adj.entry(e[0]).or_default().push((e[1], pr.word.clone()));
                adj.entry(e[1]).or_default().push((e[0], invert_word(&pr.word)));
            }
        }
        let mut out = BTreeMap::new();
        for c in self.classes.iter().filter(|c| c.dim == 0) {
            let r = c.rep[0];
            out.insert(r, (r, Vec::new()));
            let mut queue = VecDeque::from([r]);
            while let Some(v) = queue.pop_front() {
                let w = out[&v].1.clone();
                for (u, step) in adj.get(&v).into_iter().flatten() {
                    if !out.contains_key(u) {
                        let mut nw = step.clone();
                        nw.extend(&w);
                        out.insert(*u, (r, reduce_word(&nw)));
                        queue.push_back(*u);
                    }
                }
            }
        }
        out
    }

    pub fn star(&self, class: usize) -> Result<Star> {
        self.star_rooted(class, None)
    }

    /// Star of a face class, developed from a lift of the face inside top
    /// simplex `root` (default: one containing the class representative).
    pub fn star_rooted(&self, class: usize, root: Option<usize>) -> Result<Star> {
        let m = self.dim();
        let fc = self.class(class)?;
        let start = match root {
            None => {
                let s = (0..self.complex.top.len())
                    .find(|&s| fc.rep.iter().all(|v| self.position[s].contains_key(v)))
                    .expect("class representative is a face of some top simplex");
                (s, fc.rep.iter().map(|v| self.position[s][v]).collect::<Vec<_>>())
            }
            Some(s) => {
                if s >= self.complex.top.len() {
                    return Err(Error::InvalidFace(format!("no top simplex {s}")));
                }
                let f = face_subsets(m + 1)
                    .into_iter()
                    .find(|f| self.class_at(s, f.indices()) == class)
                    .ok_or_else(|| Error::InvalidFace(format!("class {class} is not a face of top simplex {s}")))?;
                let t = &self.complex.top[s];
                let ids = sorted(f.indices().iter().map(|&i| t.verts[i]).collect());
                (s, ids.iter().map(|v| self.position[s][v]).collect())
            }
        };

        let mut incidences = vec![Incidence { simplex: start.0, embedding: start.1.clone(), word: Vec::new() }];
        let mut seen: HashMap<(usize, Vec<usize>), usize> = HashMap::from([((start.0, start.1), 0)]);
        let mut closures = Vec::new();
        let mut unions: Vec<((usize, usize), (usize, usize))> = Vec::new();
        let mut open = false;
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            let inc = incidences[k].clone();
            let t = &self.complex.top[inc.simplex];
            for j in (0..=m).filter(|j| !inc.embedding.contains(j)) {
                let (s2, relabel, word): (usize, Box<dyn Fn(usize) -> usize>, Vec<i32>) = match self.neighbors[inc.simplex][j] {
                    Neighbor::Open => {
                        open = true;
                        continue;
                    }
                    Neighbor::Direct { simplex } => (simplex, Box::new(|v| v), inc.word.clone()),
                    Neighbor::Paired { pairing, from_a, simplex } => {
                        let pr = &self.complex.pairings[pairing];
                        let map: HashMap<usize, usize> = if from_a {
                            pr.map.iter().map(|e| (e[0], e[1])).collect()
                        } else {
                            pr.map.iter().map(|e| (e[1], e[0])).collect()
                        };
                        let mut w = inc.word.clone();
                        w.extend(if from_a { invert_word(&pr.word) } else { pr.word.clone() });
                        (simplex, Box::new(move |v| map[&v]), reduce_word(&w))
                    }
                };
                let corr = |i: usize| self.position[s2][&relabel(t.verts[i])];
                let emb2: Vec<usize> = inc.embedding.iter().map(|&i| corr(i)).collect();
                let k2 = match seen.get(&(s2, emb2.clone())) {
                    Some(&k2) => {
                        if incidences[k2].word != word {
                            closures.push((k2, word));
                        }
                        k2
                    }
                    None => {
                        incidences.push(Incidence { simplex: s2, embedding: emb2.clone(), word });
                        seen.insert((s2, emb2), incidences.len() - 1);
                        queue.push_back(incidences.len() - 1);
                        incidences.len() - 1
                    }
                };
                for i in (0..=m).filter(|&i| i != j && !inc.embedding.contains(&i)) {
                    unions.push(((k, i), (k2, corr(i))));
                }
            }
        }

        let node = |(k, i): (usize, usize)| k * (m + 1) + i;
        let mut uf = UnionFind::new(incidences.len() * (m + 1));
        for (x, y) in unions {
            uf.union(node(x), node(y));
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let simplices = incidences
            .iter()
            .enumerate()
            .map(|(k, inc)| {
                let rest: Vec<usize> = (0..=m).filter(|i| !inc.embedding.contains(i)).collect();
                let vertices = rest
                    .iter()
                    .map(|&i| {
                        let r = uf.find(node((k, i)));
                        let n = ids.len();
                        *ids.entry(r).or_insert(n)
                    })
                    .collect();
                let mut perm = inc.embedding.clone();
                perm.extend(&rest);
                let orientation = self.complex.top[inc.simplex].orientation * sort_sign(&perm);
                LinkSimplex { vertices, positions: rest, orientation }
            })
            .collect();
        let link = Link { dim: m as i32 - fc.dim as i32 - 1, vertex_count: ids.len(), simplices };
        Ok(Star { class, incidences, closures, open, link })
    }
}

/// A top simplex containing the face, with the face's vertices at positions
/// `embedding` (in class-representative order), and the deck word moving
/// this lift of the simplex next to the base lift of the face.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Incidence {
    pub simplex: usize,
    pub embedding: Vec<usize>,
    pub word: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Star {
    pub class: usize,
    pub incidences: Vec<Incidence>,
    /// Revisits of an incidence through a different word: `(incidence, word)`.
    pub closures: Vec<(usize, Vec<i32>)>,
    /// Some facet containing the face is unglued.
    pub open: bool,
    pub link: Link,
}

/// One link simplex per incidence, in the same order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Link {
    pub dim: i32,
    pub vertex_count: usize,
    pub simplices: Vec<LinkSimplex>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkSimplex {
    pub vertices: Vec<usize>,
    /// Positions in the top simplex opposite the face.
    pub positions: Vec<usize>,
    pub orientation: i8,
}

const HOMOLOGY_PRIME: u64 = 1_000_003;

impl Link {
    /// All faces of the link, indexed by dimension, as sorted vertex lists.
    fn faces(&self) -> Vec<Vec<Vec<usize>>> {
        let d = self.dim.max(0) as usize;
        let mut out: Vec<BTreeMap<Vec<usize>, ()>> = vec![BTreeMap::new(); d + 1];
        for s in &self.simplices {
            for f in face_subsets(s.vertices.len()) {
                out[f.dim()].insert(sorted(f.indices().iter().map(|&i| s.vertices[i]).collect()), ());
            }
        }
        out.into_iter().map(|m| m.into_keys().collect()).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.faces().iter().enumerate().map(|(k, f)| if k % 2 == 0 { f.len() as i64 } else { -(f.len() as i64) }).sum()
    }

    /// Each codimension-one face lies in exactly two link simplices with
    /// opposite induced orientations, so the oriented sum is a cycle.
    pub fn is_oriented_pseudomanifold(&self) -> bool {
        if self.dim < 1 {
            return false;
        }
        if self.simplices.iter().any(|s| sort_sign(&s.vertices) == 0) {
            return false;
        }
        let mut count: HashMap<Vec<usize>, (usize, i32)> = HashMap::new();
        for s in &self.simplices {
            for j in 0..s.vertices.len() {
                let seq: Vec<usize> = (0..s.vertices.len()).filter(|&i| i != j).map(|i| s.vertices[i]).collect();
                let parity = if j % 2 == 0 { 1 } else { -1 };
                let e = count.entry(sorted(seq.clone())).or_insert((0, 0));
                e.0 += 1;
                e.1 += (s.orientation * parity * sort_sign(&seq)) as i32;
            }
        }
        count.values().all(|&(n, sum)| n == 2 && sum == 0)
    }

    pub fn is_sphere(&self) -> bool {
        match self.dim {
            d if d < 0 => self.simplices.len() == 1,
            0 => {
                self.simplices.len() == 2
                    && self.simplices[0].vertices != self.simplices[1].vertices
                    && self.simplices[0].orientation == -self.simplices[1].orientation
            }
            d => {
                if !self.is_oriented_pseudomanifold() {
                    return false;
                }
                let betti = self.betti_numbers();
                betti.iter().enumerate().all(|(k, &b)| b == usize::from(k == 0 || k == d as usize))
            }
        }
    }

    /// Betti numbers with coefficients in a large prime field.
    pub fn betti_numbers(&self) -> Vec<usize> {
        let faces = self.faces();
        let d = faces.len() - 1;
        let index: Vec<HashMap<&Vec<usize>, usize>> =
            faces.iter().map(|fs| fs.iter().enumerate().map(|(i, f)| (f, i)).collect()).collect();
        // rank of the boundary map C_k -> C_{k-1}
        let mut ranks = vec![0usize; d + 2];
        for k in 1..=d {
            let mut rows: Vec<Vec<u64>> = faces[k]
                .iter()
                .map(|f| {
                    let mut row = vec![0u64; faces[k - 1].len()];
                    for j in 0..f.len() {
                        let sub: Vec<usize> = (0..f.len()).filter(|&i| i != j).map(|i| f[i]).collect();
                        row[index[k - 1][&sub]] = if j % 2 == 0 { 1 } else { HOMOLOGY_PRIME - 1 };
                    }
                    row
                })
                .collect();
            ranks[k] = rank_mod_p(&mut rows);
        }
        (0..=d).map(|k| faces[k].len() - ranks[k] - ranks[k + 1]).collect()
    }

    /// The link as a complex without pairings, when it has dimension >= 1.
    pub fn to_complex(&self) -> Option<Complex> {
        if self.dim < 1 {
            return None;
        }
        Some(Complex {
            dim: self.dim as usize,
            ends: 0,
            vertices: (0..self.vertex_count).map(VertexRecord::interior).collect(),
            top: self
                .simplices
                .iter()
                .map(|s| TopSimplex { verts: s.vertices.clone(), orientation: s.orientation })
                .collect(),
            pairings: Vec::new(),
        })
    }
}

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % HOMOLOGY_PRIME;
        }
        b = b * b % HOMOLOGY_PRIME;
        e >>= 1;
    }
    r
}

fn rank_mod_p(rows: &mut [Vec<u64>]) -> usize {
    let p = HOMOLOGY_PRIME;
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else { continue };
        rows.swap(rank, piv);
        let inv = pow_mod(rows[rank][col], p - 2);
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Cone over a closed cross-section: a new cusp vertex of end `end` is
/// prepended to every top simplex; pairings carry over with the apex fixed.
pub fn build_cone_complex(cross_section: &Complex, end: usize) -> Result<Complex> {
    cross_section.glue(GlueOptions::closed())?;
    let apex = cross_section.vertices.iter().map(|v| v.id).max().unwrap_or(0) + 1;
    Ok(cone_into(cross_section, apex, end, 1, Complex {
        dim: cross_section.dim + 1,
        ends: end + 1,
        vertices: cross_section.vertices.iter().map(|v| VertexRecord::interior(v.id)).collect(),
        top: Vec::new(),
        pairings: Vec::new(),
    }))
}

/// Two cones over the same cross-section glued along it: a closed complex
/// with two cusp vertices (ends 0 and 1).
pub fn build_double_cone(cross_section: &Complex) -> Result<Complex> {
    let single = build_cone_complex(cross_section, 0)?;
    let apex2 = single.vertices.iter().map(|v| v.id).max().unwrap() + 1;
    let mut k = cone_into(cross_section, apex2, 1, -1, single);
    k.ends = 2;
    Ok(k)
}

fn cone_into(cross: &Complex, apex: usize, end: usize, sign: i8, mut k: Complex) -> Complex {
    let offset = k.top.len();
    k.vertices.push(VertexRecord::cusp(apex, end));
    for t in &cross.top {
        let mut verts = vec![apex];
        verts.extend(&t.verts);
        k.top.push(TopSimplex { verts, orientation: sign * t.orientation });
    }
    for p in &cross.pairings {
        let mut map = p.map.clone();
        map.push([apex, apex]);
        k.pairings.push(FacePairing {
            a: FacetSlot { simplex: p.a.simplex + offset, opposite: p.a.opposite + 1 },
            b: FacetSlot { simplex: p.b.simplex + offset, opposite: p.b.opposite + 1 },
            map,
            word: p.word.clone(),
        });
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Boundary of the tetrahedron, coherently oriented.
    pub(crate) fn tetra_boundary() -> Complex {
        let top = (0..4)
            .map(|i| TopSimplex {
                verts: (0..4).filter(|&v| v != i).collect(),
                orientation: if i % 2 == 0 { 1 } else { -1 },
            })
            .collect();
        Complex { dim: 2, ends: 0, vertices: (0..4).map(VertexRecord::interior).collect(), top, pairings: vec![] }
    }

    /// A circle of `n` edges: vertices 0..n-1 with a pairing closing it up.
    fn circle(n: usize) -> Complex {
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

    #[test]
    fn tetrahedron_boundary_is_a_sphere() {
        let k = tetra_boundary();
        assert!(k.validate(GlueOptions::closed()).is_valid());
        let g = k.glue(GlueOptions::closed()).unwrap();
        assert_eq!(g.euler_characteristic(), 2);
        assert_eq!(g.class_counts(), vec![4, 6, 4]);
        for c in 0..g.classes().len() {
            let s = g.star(c).unwrap();
            assert!(!s.open && s.closures.is_empty());
            assert!(s.link.is_sphere(), "class {c}");
            match g.classes()[c].dim {
                0 => assert_eq!(s.incidences.len(), 3),
                1 => assert_eq!(s.incidences.len(), 2),
                _ => assert_eq!(s.incidences.len(), 1),
            }
        }
        let vertex_link = g.star(0).unwrap().link;
        assert_eq!(vertex_link.dim, 1);
        assert_eq!(vertex_link.euler_characteristic(), 0);
        assert!(vertex_link.to_complex().unwrap().validate(GlueOptions::closed()).is_valid());
    }

    #[test]
    fn open_facet_is_reported() {
        let mut k = tetra_boundary();
        k.top.pop();
        let r = k.validate(GlueOptions::closed());
        assert_eq!(r.violations.len(), 3);
        assert!(r.violations[0].starts_with("open facet"));
        assert!(k.validate(GlueOptions::with_boundary()).is_valid());
        let g = k.glue(GlueOptions::with_boundary()).unwrap();
        let s = g.star(g.class_of(&[0]).unwrap()).unwrap();
        assert!(s.open && !s.link.is_sphere());
    }

    #[test]
    fn incoherent_orientation_is_reported() {
        let mut k = tetra_boundary();
        k.top[0].orientation = -k.top[0].orientation;
        let r = k.validate(GlueOptions::closed());
        assert!(r.violations.iter().all(|v| v.contains("orientations")));
        assert_eq!(r.violations.len(), 3);
    }

    #[test]
    fn bad_simplices_are_reported() {
        let mut k = tetra_boundary();
        k.top[1].verts = vec![0, 0, 2];
        k.top[2].orientation = 0;
        k.top[3].verts.push(9);
        let r = k.validate(GlueOptions::closed());
        assert_eq!(r.violations.len(), 4, "{:?}", r.violations);
    }

    #[test]
    fn circle_with_pairing() {
        let k = circle(3);
        let g = k.glue(GlueOptions::closed()).unwrap();
        assert_eq!(g.euler_characteristic(), 0);
        assert_eq!(g.class_counts(), vec![3, 3]);
        assert_eq!(g.class_of(&[3]), g.class_of(&[0]));
        let s = g.star(g.class_of(&[0]).unwrap()).unwrap();
        assert_eq!(s.incidences.len(), 2);
        assert_eq!(s.incidences.iter().find(|i| i.simplex == 2).unwrap().word, vec![-1]);
        let t = g.vertex_transports();
        assert_eq!(t[&3], (0, vec![1]));
        assert_eq!(t[&1], (1, vec![]));
        assert!(s.link.is_sphere());
    }

    #[test]
    fn pairing_must_reverse_orientation() {
        let mut k = circle(3);
        k.pairings[0].b = FacetSlot { simplex: 2, opposite: 1 };
        k.pairings[0].map = vec![[0, 2]];
        assert!(!k.validate(GlueOptions::closed()).is_valid());
    }

    #[test]
    fn cone_over_circle() {
        let cone = build_cone_complex(&circle(3), 0).unwrap();
        assert_eq!(cone.top.len(), 3);
        assert!(!cone.validate(GlueOptions::closed()).is_valid());
        let g = cone.glue(GlueOptions::with_boundary()).unwrap();
        assert_eq!(g.euler_characteristic(), 1);
        let c = g.cusp_classes();
        assert_eq!(c.len(), 1);
        let s = g.star(c[0]).unwrap();
        assert_eq!(s.incidences.len(), 3);
        assert!(!s.open);
        // the cusp's link is the cross-section circle, closed up by the pairing
        assert!(!s.closures.is_empty());
        assert_eq!(s.link.vertex_count, 3);
        assert!(s.link.is_sphere());

        let double = build_double_cone(&circle(3)).unwrap();
        let g2 = double.glue(GlueOptions::closed()).unwrap();
        assert_eq!(g2.euler_characteristic(), 2);
        assert_eq!(g2.cusp_classes().len(), 2);
    }

    #[test]
    fn json_round_trip() {
        let k = build_double_cone(&circle(4)).unwrap();
        let s = k.to_json();
        let back = Complex::from_json(&s).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn words_reduce_freely() {
        assert_eq!(reduce_word(&[1, 2, -2, -1, 3]), vec![3]);
        assert_eq!(invert_word(&[1, -2]), vec![2, -1]);
        assert_eq!(sort_sign(&[2, 0, 1]), 1);
        assert_eq!(sort_sign(&[1, 0, 2]), -1);
        assert_eq!(sort_sign(&[1, 1]), 0);
    }
}

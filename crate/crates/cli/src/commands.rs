use std::collections::BTreeSet;
use std::path::Path;

use clap::ValueEnum;
use repvol::census::{census, census_all, CensusConfig, CensusEntry};
use repvol::complex::{Complex, GlueOptions};
use repvol::cusp::{covering_relation_check, delta_threshold, map_from_data, stable_limit_experiment, Covering, CuspExperiment};
use repvol::develop::{EquivariantMap, MapData};
use repvol::fixtures;
use repvol::simplex::{face_lattice, generalized_angle_sum, interior_angle, volume_hopf, volume_mc, AngleConfig, GeodesicSimplex};
use repvol::volume::{classify, integrality_report, normalize, rep_volume_census, rep_volume_simplices, Verdict};
use repvol::{Error, Result};
use serde::Serialize;

use crate::output::{gnuplot_script, read, write, Sink};
use crate::{
    Command, ComplexCmd, CuspCmd, FixturesCmd, MapCmd, MapInput, Sampling, SimplexCmd, SimplexVolumeMethod, VolumeMethod,
    EXIT_INVALID, EXIT_UNCERTIFIED,
};

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Simplex(c) => simplex(c),
        Command::Complex(c) => complex(c),
        Command::Map(c) => map(c),
        Command::Census { input, sampling, face, out } => census_cmd(&input, sampling, face, Sink::new(out)),
        Command::Volume { input, sampling, method, denominator, report } => {
            volume_cmd(&input, sampling, method, denominator, Sink::new(report))
        }
        Command::GaussBonnet { input, sampling } => gauss_bonnet(&input, sampling),
        Command::CuspLab(c) => cusp_lab(c),
        Command::Fixtures(FixturesCmd::Emit { name, out }) => emit(name, &out),
    }
}

fn angle_cfg(s: Sampling) -> AngleConfig {
    AngleConfig::new(s.seed).with_samples(s.samples)
}

fn census_cfg(s: Sampling) -> CensusConfig {
    CensusConfig::new(s.seed).with_samples(s.samples)
}

fn load_simplex(path: &Path) -> Result<GeodesicSimplex> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn load_complex(path: &Path) -> Result<Complex> {
    Complex::from_json(&read(path)?)
}

/// Complexes with cusp ends may be cones with an open cross-section.
fn glue_options(k: &Complex) -> GlueOptions {
    if k.ends > 0 {
        GlueOptions::with_boundary()
    } else {
        GlueOptions::closed()
    }
}

fn load_map_files(complex: &Path, map: &Path) -> Result<EquivariantMap> {
    let k = load_complex(complex)?;
    let data = MapData::from_json(&read(map)?)?;
    map_from_data(&k, &data, glue_options(&k))
}

fn load_map(input: &MapInput) -> Result<EquivariantMap> {
    load_map_files(&input.complex, &input.map)
}

#[derive(Serialize)]
struct AngleRow {
    face: String,
    dim: usize,
    value: f64,
    stderr: f64,
    exact: bool,
}

fn simplex(cmd: SimplexCmd) -> Result<u8> {
    match cmd {
        SimplexCmd::Angles { simplex, sampling, out } => {
            let t = load_simplex(&simplex)?;
            let cfg = angle_cfg(sampling);
            let mut rows = Vec::new();
            for f in face_lattice(&t) {
                let a = interior_angle(&t, &f, &cfg)?;
                let face = f.indices().iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                rows.push(AngleRow { face, dim: f.dim(), value: a.value, stderr: a.stderr, exact: a.exact });
            }
            Sink::new(out).rows(&rows)?;
            Ok(0)
        }
        SimplexCmd::Volume { simplex, method, sampling } => {
            let t = load_simplex(&simplex)?;
            let cfg = angle_cfg(sampling);
            let (name, v) = match method {
                SimplexVolumeMethod::Hopf => ("hopf", volume_hopf(&t, &cfg)?),
                SimplexVolumeMethod::Mc => ("mc", volume_mc(&t, &cfg)?),
            };
            println!("method,value,stderr");
            println!("{name},{},{}", v.value, v.stderr);
            Ok(0)
        }
        SimplexCmd::GramEuler { simplex, sampling } => {
            let t = load_simplex(&simplex)?;
            let w = generalized_angle_sum(&t, &angle_cfg(sampling))?;
            let vanishes = w.value.abs() < 3.0 * w.stderr + 1e-9;
            println!("angle_sum,stderr,dim,vanishes");
            println!("{},{},{},{}", w.value, w.stderr, t.dim(), vanishes);
            Ok(if t.dim() % 2 == 1 && !vanishes { EXIT_INVALID } else { 0 })
        }
        SimplexCmd::Random { dim, radius, seed, out } => {
            let t = fixtures::random_simplex(dim, radius, seed)?;
            let text = serde_json::to_string_pretty(&t)?;
            match out {
                Some(p) => write(&p, &text)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
    }
}

fn complex(cmd: ComplexCmd) -> Result<u8> {
    match cmd {
        ComplexCmd::Validate { complex, allow_boundary } => {
            let k = load_complex(&complex)?;
            let opts = if allow_boundary { GlueOptions::with_boundary() } else { glue_options(&k) };
            let r = k.validate(opts);
            if r.is_valid() {
                println!("valid: {} top simplices, dimension {}, {} ends", k.top.len(), k.dim, k.ends);
                Ok(0)
            } else {
                for v in &r.violations {
                    println!("violation: {v}");
                }
                Ok(EXIT_INVALID)
            }
        }
        ComplexCmd::Chi { complex } => {
            let k = load_complex(&complex)?;
            let g = k.glue(glue_options(&k))?;
            let counts: Vec<String> = g.class_counts().iter().map(usize::to_string).collect();
            println!("chi,face_counts,ends");
            println!("{},{},{}", g.euler_characteristic(), counts.join(" "), g.cusp_classes().len());
            Ok(0)
        }
        ComplexCmd::Link { complex, face } => {
            let k = load_complex(&complex)?;
            let g = k.glue(glue_options(&k))?;
            let c = g.class_of(&face).ok_or_else(|| Error::InvalidFace(format!("{face:?} is not a face of the complex")))?;
            let s = g.star(c)?;
            let betti: Vec<String> = s.link.betti_numbers().iter().map(usize::to_string).collect();
            println!("class,link_dim,vertices,simplices,chi,betti,sphere,open");
            println!(
                "{c},{},{},{},{},{},{},{}",
                s.link.dim,
                s.link.vertex_count,
                s.link.simplices.len(),
                s.link.euler_characteristic(),
                betti.join(" "),
                s.link.is_sphere(),
                s.open
            );
            Ok(0)
        }
    }
}

fn map(cmd: MapCmd) -> Result<u8> {
    match cmd {
        MapCmd::Check { input } => {
            let f = load_map(&input)?;
            let mut code = 0;
            for c in 0..f.glued().classes().len() {
                if let Err(e) = f.develop_star(c) {
                    println!("face class {c}: {e}");
                    code = EXIT_INVALID;
                }
            }
            let nd = f.nondegeneracy_check();
            println!("equivariant: yes");
            println!("degenerate top simplices: {:?}", nd.degenerate);
            println!("min singular ratio: {}", nd.min_ratio);
            if !nd.is_nondegenerate() {
                code = EXIT_INVALID;
            }
            Ok(code)
        }
        MapCmd::Perturb { input, radius, seed, ends, out } => {
            let f = load_map(&input)?;
            let classes = ends.map(|ends| end_neighbours(&f, &ends));
            let g = f.perturb(radius, seed, classes.as_deref())?;
            let text = g.to_data().to_json();
            match out {
                Some(p) => write(&p, &text)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
    }
}

/// Non-cusp vertex classes sharing a top simplex with a cusp of one of `ends`.
fn end_neighbours(f: &EquivariantMap, ends: &[usize]) -> Vec<usize> {
    let k = f.glued().complex();
    let mut out = BTreeSet::new();
    for t in &k.top {
        let touches = t.verts.iter().any(|&v| k.vertex(v).and_then(|r| r.end).is_some_and(|e| ends.contains(&e)));
        if touches {
            for &v in t.verts.iter().filter(|&&v| !k.is_cusp(v)) {
                out.extend(f.glued().class_of(&[v]));
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Serialize)]
struct CensusRow {
    face_id: usize,
    dim: usize,
    value: f64,
    stderr: f64,
    degree: Option<i64>,
    certified: bool,
}

impl From<&CensusEntry> for CensusRow {
    fn from(e: &CensusEntry) -> Self {
        Self { face_id: e.class, dim: e.dim, value: e.value, stderr: e.stderr, degree: e.degree, certified: e.certified() }
    }
}

fn census_cmd(input: &MapInput, sampling: Sampling, face: Option<usize>, sink: Sink) -> Result<u8> {
    let f = load_map(input)?;
    let cfg = census_cfg(sampling);
    let results = match face {
        Some(c) => {
            f.glued().class(c)?;
            vec![census(&f, c, &cfg)]
        }
        None => census_all(&f, &cfg),
    };
    let mut rows = Vec::new();
    let mut code = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(e) => {
                if !e.cusp && !e.certified() {
                    code = code.max(EXIT_UNCERTIFIED);
                }
                rows.push(CensusRow::from(e));
            }
            Err(e) => {
                sink.note(&format!("face class {}: {e}", face.unwrap_or(i)));
                code = EXIT_INVALID;
            }
        }
    }
    sink.rows(&rows)?;
    if code == EXIT_UNCERTIFIED {
        sink.note("some census entries are not certified; raise --samples");
    }
    Ok(code)
}

#[derive(Serialize)]
struct VolumeRow {
    route: &'static str,
    value: f64,
    stderr: f64,
    normalized: f64,
    normalized_stderr: f64,
}

fn volume_cmd(input: &MapInput, sampling: Sampling, method: VolumeMethod, denominator: Option<u64>, sink: Sink) -> Result<u8> {
    let f = load_map(input)?;
    let m = f.dim();
    let mut rows = Vec::new();
    let mut push = |route, v: repvol::simplex::Estimate| {
        let n = normalize(v, m);
        rows.push(VolumeRow { route, value: v.value, stderr: v.stderr, normalized: n.value, normalized_stderr: n.stderr });
    };
    let mut census_value = None;
    if method != VolumeMethod::Simplices {
        let v = rep_volume_census(&f, &census_cfg(sampling))?;
        census_value = Some(v);
        push("census", v);
    }
    let mut simplices_value = None;
    if method != VolumeMethod::Census {
        let v = rep_volume_simplices(&f, &angle_cfg(sampling))?;
        simplices_value = Some(v);
        push("simplices", v);
    }
    sink.rows(&rows)?;
    if let (Some(a), Some(b)) = (census_value, simplices_value) {
        let d = a.minus(b);
        let agree = d.value.abs() < 3.0 * d.stderr + 1e-9;
        sink.note(&format!("routes agree: {agree} (difference {}, combined stderr {})", d.value, d.stderr));
    }
    let report = match simplices_value {
        Some(_) => integrality_report(&f, &angle_cfg(sampling), denominator)?,
        None => classify(normalize(census_value.unwrap(), m), m, denominator, sampling.samples, 0),
    };
    sink.note(&format!(
        "normalized volume {} +- {}: {}{}",
        report.normalized,
        report.stderr,
        report.verdict.label(),
        if report.control { " (control: integrality only holds from dimension 4)" } else { "" }
    ));
    Ok(if report.verdict == Verdict::Uncertified { EXIT_UNCERTIFIED } else { 0 })
}

fn gauss_bonnet(input: &MapInput, sampling: Sampling) -> Result<u8> {
    let f = load_map(input)?;
    let r = repvol::volume::gauss_bonnet_check(&f, &census_cfg(sampling))?;
    println!("chi,ends,volume,stderr,predicted,normalized,bad_entries,consistent");
    let bad: Vec<String> = r.bad_entries.iter().map(usize::to_string).collect();
    println!(
        "{},{},{},{},{},{},{},{}",
        r.euler_characteristic,
        r.ends,
        r.volume.value,
        r.volume.stderr,
        r.predicted,
        r.normalized,
        bad.join(" "),
        r.consistent
    );
    Ok(if r.consistent { 0 } else { EXIT_INVALID })
}

#[derive(Serialize)]
struct LimitCsvRow {
    k: usize,
    radius: f64,
    end: usize,
    class: usize,
    value: f64,
    stderr: f64,
    total: f64,
    total_stderr: f64,
    attempts: u64,
}

#[derive(Serialize)]
struct CoveringCsvRow {
    base_class: usize,
    cover_class: usize,
    base: f64,
    base_stderr: f64,
    cover: f64,
    cover_stderr: f64,
    difference: f64,
    combined_stderr: f64,
    agrees: bool,
}

fn cusp_lab(cmd: CuspCmd) -> Result<u8> {
    match cmd {
        CuspCmd::Limit { experiment, kmax, sampling, out, gnuplot } => {
            let e = CuspExperiment::from_json(&read(&experiment)?)?;
            let f0 = e.f0()?;
            let ks = match kmax {
                Some(kmax) => std::iter::successors(Some(1usize), |k| Some(k * 2)).take_while(|&k| k <= kmax).collect(),
                None => e.k_values.clone(),
            };
            let delta = e.delta.unwrap_or_else(|| delta_threshold(&f0));
            let s = stable_limit_experiment(&f0, &ks, delta, sampling.seed, &census_cfg(sampling))?;
            let rows: Vec<LimitCsvRow> = s
                .rows
                .iter()
                .flat_map(|r| {
                    r.cusps.iter().map(move |c| LimitCsvRow {
                        k: r.k,
                        radius: r.radius,
                        end: c.end,
                        class: c.class,
                        value: c.value,
                        stderr: c.stderr,
                        total: r.total.value,
                        total_stderr: r.total.stderr,
                        attempts: r.attempts,
                    })
                })
                .collect();
            let sink = Sink::new(out.clone());
            sink.rows(&rows)?;
            sink.note(&format!("delta {} (halved {} times), stable rounding: {}", s.delta, s.halvings, s.stable));
            for (i, c) in s.envelope.iter().enumerate() {
                sink.note(&format!("end {i}: envelope constant C = {c}, decreasing within 3 sigma: {}", s.decreasing[i]));
            }
            if f0.dim() == 2 {
                sink.note("n=1 control: the cusp census need not tend to 0 in dimension 2");
            }
            if let Some(g) = gnuplot {
                let csv = out.ok_or_else(|| Error::Io("--gnuplot needs --out for the data file".into()))?;
                write(&g, &gnuplot_script(&csv, s.envelope.len()))?;
            }
            Ok(0)
        }
        CuspCmd::Covering { base, base_map, cover, cover_map, covering, deg, sampling, out } => {
            let fb = load_map_files(&base, &base_map)?;
            let fc = load_map_files(&cover, &cover_map)?;
            let cov = Covering::from_json(&read(&covering)?)?;
            if let Some(d) = deg {
                if d != cov.degree {
                    return Err(Error::InvalidCovering(format!("--deg {d} but the covering has degree {}", cov.degree)));
                }
            }
            let r = covering_relation_check(&fb, &fc, &cov, &census_cfg(sampling))?;
            let rows: Vec<CoveringCsvRow> = r
                .rows
                .iter()
                .map(|x| CoveringCsvRow {
                    base_class: x.base_class,
                    cover_class: x.cover_class,
                    base: x.base.value,
                    base_stderr: x.base.stderr,
                    cover: x.cover.value,
                    cover_stderr: x.cover.stderr,
                    difference: x.difference,
                    combined_stderr: x.combined_stderr,
                    agrees: x.agrees,
                })
                .collect();
            let sink = Sink::new(out);
            sink.rows(&rows)?;
            sink.note(&format!("degree {}: relation holds: {}", r.degree, r.holds));
            if let (Some(a), Some(b)) = (r.normalized_base, r.normalized_cover) {
                sink.note(&format!("normalized volumes: base {a}, cover {b}"));
            }
            Ok(if r.holds { 0 } else { EXIT_INVALID })
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureName {
    Genus2,
    PuncturedTorus,
    PuncturedTorusFinite,
    WindingStar,
    Sphere4,
    ConeCircle,
    Cone4d,
    Cusp4d,
    CoverPair,
    #[value(name = "cover-pair-2d")]
    CoverPair2d,
}

fn emit(name: FixtureName, dir: &Path) -> Result<u8> {
    std::fs::create_dir_all(dir)?;
    let put = |file: String, text: String| -> Result<()> {
        let p = dir.join(file);
        write(&p, &text)?;
        println!("{}", p.display());
        Ok(())
    };
    let stem = name.to_possible_value().unwrap().get_name().to_string();
    let map_files = |prefix: &str, f: &EquivariantMap| -> Result<()> {
        put(format!("{prefix}.complex.json"), f.glued().complex().to_json())?;
        put(format!("{prefix}.map.json"), f.to_data().to_json())
    };
    match name {
        FixtureName::Genus2 => map_files(&stem, &fixtures::genus2().1)?,
        FixtureName::PuncturedTorus => map_files(&stem, &fixtures::punctured_torus().1)?,
        FixtureName::PuncturedTorusFinite => map_files(&stem, &finite_torus()?)?,
        FixtureName::WindingStar => map_files(&stem, &fixtures::winding_star())?,
        FixtureName::Sphere4 => map_files(&stem, &fixtures::sphere4().1)?,
        FixtureName::ConeCircle => put(format!("{stem}.experiment.json"), fixtures::cone_circle_experiment(3, 0.8).to_json())?,
        FixtureName::Cone4d => put(format!("{stem}.experiment.json"), fixtures::cone4d().to_json())?,
        FixtureName::Cusp4d => put(format!("{stem}.experiment.json"), fixtures::cusp4d().to_json())?,
        FixtureName::CoverPair | FixtureName::CoverPair2d => {
            let p = if name == FixtureName::CoverPair { fixtures::cover_pair_4d(0.2, 3)? } else { fixtures::cover_pair_2d() };
            map_files(&format!("{stem}.base"), &p.base)?;
            map_files(&format!("{stem}.cover"), &p.cover)?;
            put(format!("{stem}.covering.json"), p.covering.to_json())?;
        }
    }
    Ok(0)
}

/// The bundled finite-cusp control configuration.
pub fn finite_torus() -> Result<EquivariantMap> {
    let (a, b) = fixtures::FINITE_TORUS;
    fixtures::punctured_torus_finite(a, b)
}

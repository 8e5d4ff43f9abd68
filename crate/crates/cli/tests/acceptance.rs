//! Acceptance suite: one PASS/FAIL line per criterion, with the tolerances,
//! sample budgets and time limits fixed below. Runs without the libtest
//! harness so the lines always reach stdout.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use repvol::census::{census, census_all, link_degree, CensusConfig, CensusEntry};
use repvol::cusp::{covering_relation_check, delta_threshold, Covering};
use repvol::develop::EquivariantMap;
use repvol::fixtures;
use repvol::simplex::{area_defect, generalized_angle_sum, volume_hopf, volume_mc, AngleConfig};
use repvol::volume::{integrality_report, normalize, rep_volume_census, rep_volume_simplices, Verdict};

const EXACT_TOL: f64 = 1e-9;
const SIGMAS: f64 = 3.0;
const MC_SAMPLES: usize = 200_000;
/// Per-angle budget for the two-route comparison on 4-D fixtures.
const ROUTE_SAMPLES_4D: usize = 20_000;
const CUSP_LIMIT: f64 = 0.02;
const PERTURB_2D: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_sigma(diff: f64, stderr: f64) -> bool {
    diff.abs() < SIGMAS * stderr + EXACT_TOL
}

fn hopf_identity_2d() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let radius = 0.5 + 2.5 * (seed as f64 / 99.0);
        let t = fixtures::random_simplex(2, radius, 1000 + seed).unwrap();
        let h = volume_hopf(&t, &AngleConfig::new(seed)).unwrap();
        worst = worst.max((h.value - area_defect(&t).unwrap()).abs());
    }
    outcome(worst < EXACT_TOL, format!("max |hopf - defect| = {worst:.2e} over 100 triangles"))
}

fn hopf_identity_4d() -> Outcome {
    let mut ok = 0;
    for seed in 0..25u64 {
        let t = fixtures::random_simplex(4, 1.0, 2000 + seed).unwrap();
        let cfg = AngleConfig::new(seed).with_samples(MC_SAMPLES);
        let h = volume_hopf(&t, &cfg).unwrap();
        let m = volume_mc(&t, &cfg.derived(&[7])).unwrap();
        if within_sigma(h.value - m.value, h.stderr.hypot(m.stderr)) {
            ok += 1;
        }
    }
    outcome(ok >= 24, format!("{ok}/25 within 3 sigma (need 24)"))
}

fn gram_euler_odd() -> Outcome {
    let mut ok = 0;
    for seed in 0..50u64 {
        let t = fixtures::random_simplex(3, 1.0, 3000 + seed).unwrap();
        let w = generalized_angle_sum(&t, &AngleConfig::new(seed).with_samples(MC_SAMPLES)).unwrap();
        if w.value.abs() < SIGMAS * w.stderr {
            ok += 1;
        }
    }
    outcome(ok >= 48, format!("{ok}/50 with |W| < 3 sigma (need 48)"))
}

fn gauss_bonnet_genus2() -> Outcome {
    let f = fixtures::genus2().1;
    let entries: Vec<CensusEntry> = census_all(&f, &CensusConfig::new(0)).into_iter().map(Result::unwrap).collect();
    let all_one = entries.iter().all(|e| e.exact && (e.value - 1.0).abs() < EXACT_TOL);
    let v = rep_volume_simplices(&f, &AngleConfig::new(0)).unwrap();
    let n = normalize(v, 2).value;
    let chi = f.glued().euler_characteristic();
    let pass = all_one && (v.value - 4.0 * PI).abs() < EXACT_TOL && (n - 2.0).abs() < EXACT_TOL && chi == -2;
    outcome(pass, format!("{} entries all 1: {all_one}; Vol = {:.12}; normalized = {n:.12}; chi = {chi}", entries.len(), v.value))
}

fn census_equals_degree() -> Outcome {
    let g = fixtures::genus2().1;
    let mut mismatches = 0;
    let mut checked = 0;
    for seed in 0..20u64 {
        let f = g.perturb(PERTURB_2D, seed, None).unwrap();
        for e in census_all(&f, &CensusConfig::new(seed)) {
            let e = e.unwrap();
            checked += 1;
            if e.cusp || !(e.certified() && e.integral()) || e.degree != Some(e.rounded()) {
                mismatches += 1;
            }
        }
    }
    let star = fixtures::winding_star();
    let c = star.glued().class_of(&[0]).unwrap();
    let w = census(&star, c, &CensusConfig::new(1)).unwrap();
    let winding = (w.value - 2.0).abs() < EXACT_TOL && link_degree(&star, c, 1).unwrap() == 2;
    let r = g.transformed(&fixtures::reflection_x(2)).unwrap();
    let reflected = (0..r.glued().classes().len()).all(|c| {
        let e = census(&r, c, &CensusConfig::new(2)).unwrap();
        e.rounded() == -1 && link_degree(&r, c, 2).unwrap() == -1
    });
    outcome(
        mismatches == 0 && winding && reflected,
        format!("{checked} perturbed entries, {mismatches} mismatches; winding star 2/2: {winding}; reflected degree -1: {reflected}"),
    )
}

fn cusped_control() -> Outcome {
    let f = fixtures::punctured_torus().1;
    let v = rep_volume_census(&f, &CensusConfig::new(0)).unwrap();
    let cusp = f.glued().cusp_classes()[0];
    let cusp_census = census(&f, cusp, &CensusConfig::new(0)).unwrap().value;
    let (a, b) = fixtures::FINITE_TORUS;
    let g = fixtures::punctured_torus_finite(a, b).unwrap();
    let r = integrality_report(&g, &AngleConfig::new(0), None).unwrap();
    let pass = (v.value - 2.0 * PI).abs() < EXACT_TOL && cusp_census == 0.0 && r.verdict == Verdict::NonIntegralControl;
    outcome(
        pass,
        format!("Vol = {:.12}; cusp census = {cusp_census}; finite cusp normalized = {:.6} ({})", v.value, r.normalized, r.verdict.label()),
    )
}

fn toric_limit() -> Outcome {
    let f0 = fixtures::cusp4d().f0().unwrap();
    let delta = delta_threshold(&f0);
    let cfg = CensusConfig::new(17).with_samples(MC_SAMPLES);
    let s = repvol::cusp::stable_limit_experiment(&f0, &[1, 2, 4, 8, 16], delta, 17, &cfg).unwrap();
    let last = s.rows.last().unwrap();
    let small = last.cusps.iter().all(|c| c.value.abs() < CUSP_LIMIT && 0.5 - c.value.abs() > SIGMAS * c.stderr);
    let t0 = s.rows[0].total;
    let invariant = s.rows.iter().all(|r| within_sigma(r.total.value - t0.value, r.total.stderr.hypot(t0.stderr)));
    let series: Vec<String> = (0..last.cusps.len())
        .map(|e| {
            let v: Vec<String> = s.rows.iter().map(|r| format!("{:.4}+-{:.4}", r.cusps[e].value, r.cusps[e].stderr)).collect();
            format!("end {e} [{}]", v.join(", "))
        })
        .collect();
    let totals: Vec<String> = s.rows.iter().map(|r| format!("{:.4}", r.total.value)).collect();
    outcome(
        small && invariant,
        format!(
            "delta = {:.4} after {} halvings, non-cusp rounding stable: {}; cusp censuses over k: {}; totals over k [{}], k-invariant: {invariant}",
            s.delta,
            s.halvings,
            s.stable,
            series.join("; "),
            totals.join(", ")
        ),
    )
}

fn covering_relation() -> Outcome {
    let p = fixtures::cover_pair_4d(0.2, 3).unwrap();
    let cfg = CensusConfig::new(5).with_samples(MC_SAMPLES);
    let r = covering_relation_check(&p.base, &p.cover, &p.covering, &cfg).unwrap();
    let id = Covering { degree: 1, simplex_map: (0..p.base.glued().complex().top.len()).collect() };
    let same = covering_relation_check(&p.base, &p.base, &id, &cfg).unwrap();
    let exact = same.rows.iter().all(|x| x.difference == 0.0);
    let row = &r.rows[0];
    outcome(
        r.holds && exact,
        format!(
            "2 * {:.4} vs {:.4} (diff {:.4}, 3 sigma {:.4}); identity covering exact: {exact}",
            row.base.value,
            row.cover.value,
            row.difference,
            SIGMAS * row.combined_stderr
        ),
    )
}

fn route_pair(f: &EquivariantMap, samples: usize, seed: u64) -> (f64, f64) {
    let a = rep_volume_simplices(f, &AngleConfig::new(seed).with_samples(samples)).unwrap();
    let b = rep_volume_census(f, &CensusConfig::new(seed ^ 0x5a5a).with_samples(samples)).unwrap();
    (a.value - b.value, a.stderr.hypot(b.stderr))
}

fn two_routes() -> Outcome {
    let (a, b) = fixtures::FINITE_TORUS;
    let cusp4d = fixtures::cusp4d().f0().unwrap();
    let cusp_delta = delta_threshold(&cusp4d);
    let cone4d = fixtures::cone4d().f0().unwrap();
    let cone_delta = delta_threshold(&cone4d);
    let fixtures_2d: Vec<(&str, EquivariantMap, f64)> = vec![
        ("genus2", fixtures::genus2().1, PERTURB_2D),
        ("punctured-torus", fixtures::punctured_torus().1, PERTURB_2D),
        ("punctured-torus-finite", fixtures::punctured_torus_finite(a, b).unwrap(), PERTURB_2D),
        ("winding-star", fixtures::winding_star(), PERTURB_2D),
        ("cone-circle", fixtures::cone_circle(3, 0.8).1, PERTURB_2D),
    ];
    let mut fails = Vec::new();
    let mut runs = 0;
    for (name, f, r) in &fixtures_2d {
        for seed in 0..=10u64 {
            let g = if seed == 0 { f.clone() } else { f.perturb(*r, seed, None).unwrap() };
            let (d, s) = route_pair(&g, MC_SAMPLES, seed);
            runs += 1;
            if !within_sigma(d, s) {
                fails.push(format!("{name}#{seed}"));
            }
        }
    }
    // The 4-D cone maps f0 are degenerate; their first member is the
    // perturbation with seed 0.
    let fixtures_4d: Vec<(&str, EquivariantMap, f64)> = vec![
        ("sphere4", fixtures::sphere4().1, 0.05),
        ("cone4d", cone4d, cone_delta),
        ("cusp4d", cusp4d, cusp_delta),
    ];
    for (name, f, r) in &fixtures_4d {
        for seed in 0..=10u64 {
            let g = if seed == 0 && f.nondegeneracy_check().is_nondegenerate() {
                f.clone()
            } else {
                f.perturb(*r, 100 + seed, None).unwrap()
            };
            let (d, s) = route_pair(&g, ROUTE_SAMPLES_4D, seed);
            runs += 1;
            if !within_sigma(d, s) {
                fails.push(format!("{name}#{seed}"));
            }
        }
    }
    // A 3-sigma test over many runs is allowed the expected few percent of
    // misses only when they are Monte Carlo runs; exact 2-D runs must agree.
    let allowed = 1;
    outcome(fails.len() <= allowed, format!("{runs} maps, outside 3 sigma: {:?} (allowed {allowed})", fails))
}

fn cli(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_repvol")).args(args).output().expect("repvol runs");
    assert!(out.status.code().is_some(), "repvol terminated by a signal");
    out.stdout
}

fn determinism(dir: &Path) -> Outcome {
    let d = |f: &str| dir.join(f).display().to_string();
    for name in ["genus2", "sphere4", "cone4d", "cover-pair-2d"] {
        cli(&["fixtures", "emit", name, "--out", &dir.display().to_string()]);
    }
    cli(&["map", "perturb", "--complex", &d("genus2.complex.json"), "--map", &d("genus2.map.json"), "--radius", "0.05", "--seed", "9", "--out", &d("genus2.p.json")]);
    cli(&["simplex", "random", "--dim", "4", "--seed", "5", "--out", &d("s4.json")]);
    let runs: Vec<Vec<String>> = vec![
        vec!["census", "--complex", &d("genus2.complex.json"), "--map", &d("genus2.p.json"), "--seed", "3"],
        vec!["volume", "--complex", &d("sphere4.complex.json"), "--map", &d("sphere4.map.json"), "--method", "both", "--samples", "20000", "--seed", "4"],
        vec!["census", "--complex", &d("sphere4.complex.json"), "--map", &d("sphere4.map.json"), "--samples", "20000", "--seed", "4"],
        vec!["simplex", "angles", "--simplex", &d("s4.json"), "--samples", "50000", "--seed", "1"],
        vec!["cusp-lab", "limit", "--experiment", &d("cone4d.experiment.json"), "--kmax", "4", "--samples", "5000", "--seed", "2"],
        vec![
            "cusp-lab", "covering",
            "--base", &d("cover-pair-2d.base.complex.json"), "--base-map", &d("cover-pair-2d.base.map.json"),
            "--cover", &d("cover-pair-2d.cover.complex.json"), "--cover-map", &d("cover-pair-2d.cover.map.json"),
            "--covering", &d("cover-pair-2d.covering.json"),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut differing = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut with_out: Vec<&str> = args.iter().map(String::as_str).collect();
        let (a, b) = (d(&format!("run{i}.a.csv")), d(&format!("run{i}.b.csv")));
        let flag = if args[0] == "volume" { "--report" } else { "--out" };
        with_out.extend([flag, &a]);
        cli(&with_out);
        let n = with_out.len();
        with_out[n - 1] = &b;
        cli(&with_out);
        let (x, y) = (std::fs::read(&a).unwrap_or_default(), std::fs::read(&b).unwrap_or_default());
        if x.is_empty() || x != y {
            differing.push(args[..2].join(" "));
        }
    }
    outcome(differing.is_empty(), format!("{} CLI runs repeated; differing or empty: {:?}", runs.len(), differing))
}

fn scratch_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn main() {
    let dir = scratch_dir();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "Hopf identity m=2", Duration::from_secs(5), Box::new(hopf_identity_2d)),
        (2, "Hopf identity m=4 (MC)", Duration::from_secs(600), Box::new(hopf_identity_4d)),
        (3, "Gram-Euler odd case", Duration::from_secs(300), Box::new(gram_euler_odd)),
        (4, "Gauss-Bonnet genus 2", Duration::from_secs(10), Box::new(gauss_bonnet_genus2)),
        (5, "census = degree", Duration::from_secs(60), Box::new(census_equals_degree)),
        (6, "cusped 2-D control", Duration::from_secs(30), Box::new(cusped_control)),
        (7, "toric cusp limit", Duration::from_secs(1200), Box::new(toric_limit)),
        (8, "covering relation", Duration::from_secs(600), Box::new(covering_relation)),
        (9, "two-route volume identity", Duration::from_secs(900), Box::new(two_routes)),
        (10, "CLI determinism", Duration::from_secs(600), Box::new(move || determinism(&dir))),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (n, name, limit, run) in &criteria {
        if only.as_ref().is_some_and(|o| !o.contains(n)) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.1}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

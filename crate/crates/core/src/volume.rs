//! Volume of a representation by two routes (simplexwise volumes, angle
//! census), integrality verdicts for the normalized volume, and the
//! Gauss-Bonnet check for geometric maps.

use rayon::prelude::*;
use serde::Serialize;

use crate::census::{alternating_total, census_all, CensusConfig, CensusEntry};
use crate::develop::EquivariantMap;
use crate::error::{Error, Result};
use crate::simplex::{sphere_volume, volume_hopf, AngleConfig, Estimate};

const SIMPLICES_TAG: u64 = 0x73696d;
/// Sample-budget multiplier per escalation, and the number of escalations.
pub const ESCALATION_FACTOR: usize = 4;
pub const MAX_ESCALATIONS: usize = 2;

fn require_even(m: usize) -> Result<()> {
    if m % 2 != 0 {
        return Err(Error::Unsupported(format!("representation volume needs even dimension, got {m}")));
    }
    Ok(())
}

/// `(-1)^n Vol(S^2n) / 2`, the factor turning an angle total into a volume.
fn hopf_factor(m: usize) -> f64 {
    let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
    sign * sphere_volume(m) / 2.0
}

/// `2 Vol / Vol(S^m)`.
pub fn normalize(vol: Estimate, m: usize) -> Estimate {
    vol.scaled(2.0 / sphere_volume(m))
}

/// `sum over top simplices of epsilon * Vol(image)`. Degenerate images are an
/// error unless `zero_degenerate`, in which case they contribute 0.
fn simplices_route(f: &EquivariantMap, cfg: &AngleConfig, zero_degenerate: bool) -> Result<Estimate> {
    let m = f.dim();
    require_even(m)?;
    let n = f.glued().complex().top.len();
    let parts: Vec<Result<Estimate>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let image = f.simplex_image(s);
            if image.is_degenerate_at(cfg.degeneracy_ratio) {
                if zero_degenerate {
                    return Ok(Estimate::zero());
                }
                return Err(Error::DegenerateSimplex(format!("image of top simplex {s}")));
            }
            let eps = crate::develop::epsilon_sign(&image, f.glued().complex().top[s].orientation);
            Ok(volume_hopf(&image, &cfg.derived(&[SIMPLICES_TAG, s as u64]))?.scaled(eps as f64))
        })
        .collect();
    let mut total = Estimate::zero();
    for p in parts {
        total = total.plus(p?);
    }
    Ok(total)
}

pub fn rep_volume_simplices(f: &EquivariantMap, cfg: &AngleConfig) -> Result<Estimate> {
    simplices_route(f, cfg, false)
}

/// Volume from the census: `(-1)^n Vol(S^2n)/2 * sum (-1)^dim census`.
pub fn rep_volume_census(f: &EquivariantMap, cfg: &CensusConfig) -> Result<Estimate> {
    require_even(f.dim())?;
    let entries = census_entries(f, &cfg.degree(false))?;
    Ok(alternating_total(&entries).scaled(hopf_factor(f.dim())))
}

/// All census entries, failing on the first class that fails.
pub fn census_entries(f: &EquivariantMap, cfg: &CensusConfig) -> Result<Vec<CensusEntry>> {
    census_all(f, cfg).into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Integral,
    IntegralOverDenominator,
    /// Certified non-integral in dimension 2, where no integrality holds.
    NonIntegralControl,
    NonIntegral,
    Uncertified,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Integral => "integral",
            Verdict::IntegralOverDenominator => "integral over given denominator",
            Verdict::NonIntegralControl => "non-integral (n=1 control)",
            Verdict::NonIntegral => "non-integral",
            Verdict::Uncertified => "uncertified",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralityReport {
    pub normalized: f64,
    pub stderr: f64,
    /// Nearest integer to `normalized * denominator`.
    pub nearest_int: i64,
    pub residual: f64,
    pub verdict: Verdict,
    pub denominator_hint: Option<u64>,
    /// Dimension 2, where volumes need not be integral.
    pub control: bool,
    pub samples_per_angle: usize,
    pub escalations: usize,
}

/// Normalized volume `2 Vol / Vol(S^m)` from the simplices route (degenerate
/// images count as zero volume), tested for integrality, or for integrality
/// after multiplying by `denominator`. Uncertified results are retried with
/// four times the samples, at most twice.
pub fn integrality_report(f: &EquivariantMap, cfg: &AngleConfig, denominator: Option<u64>) -> Result<IntegralityReport> {
    let m = f.dim();
    require_even(m)?;
    let mut cfg = *cfg;
    let mut escalations = 0;
    loop {
        let v = normalize(simplices_route(f, &cfg, true)?, m);
        let report = classify(v, m, denominator, cfg.samples, escalations);
        if report.verdict != Verdict::Uncertified || escalations == MAX_ESCALATIONS || v.exact {
            return Ok(report);
        }
        escalations += 1;
        cfg = cfg.with_samples(cfg.samples * ESCALATION_FACTOR);
    }
}

/// Verdict for an already computed normalized volume `v` in dimension `m`.
pub fn classify(v: Estimate, m: usize, denominator: Option<u64>, samples: usize, escalations: usize) -> IntegralityReport {
    let d = denominator.unwrap_or(1).max(1) as f64;
    let scaled = v.scaled(d);
    let nearest = scaled.value.round();
    let residual = scaled.value - nearest;
    let sigma = scaled.stderr;
    let integral = residual.abs() < 3.0 * sigma + 1e-6 && 0.5 - residual.abs() > 3.0 * sigma;
    let away = residual.abs() > 3.0 * sigma + 1e-6;
    let verdict = if integral {
        if denominator.is_some_and(|d| d > 1) {
            Verdict::IntegralOverDenominator
        } else {
            Verdict::Integral
        }
    } else if away {
        if m == 2 {
            Verdict::NonIntegralControl
        } else {
            Verdict::NonIntegral
        }
    } else {
        Verdict::Uncertified
    };
    IntegralityReport {
        normalized: v.value,
        stderr: v.stderr,
        nearest_int: nearest as i64,
        residual,
        verdict,
        denominator_hint: denominator,
        control: m == 2,
        samples_per_angle: samples,
        escalations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussBonnetReport {
    pub euler_characteristic: i64,
    pub ends: usize,
    /// Census entries that are not the expected 1 (or 0 at cusp points).
    pub bad_entries: Vec<usize>,
    pub volume: Estimate,
    pub predicted: f64,
    pub normalized: f64,
    pub consistent: bool,
}

/// For a geometric map: every non-cusp census entry is 1, every cusp entry
/// is 0, and `Vol = (-1)^n Vol(S^2n)/2 * (chi(K) - ends)`.
pub fn gauss_bonnet_check(f: &EquivariantMap, cfg: &CensusConfig) -> Result<GaussBonnetReport> {
    let m = f.dim();
    require_even(m)?;
    let g = f.glued();
    let chi = g.euler_characteristic();
    let ends = g.cusp_classes().len();
    let entries = census_all(f, &cfg.degree(false));
    let mut bad = Vec::new();
    for (c, e) in entries.iter().enumerate() {
        let ok = match e {
            Ok(e) => {
                let want = if e.cusp { 0 } else { 1 };
                e.certified() && e.integral() && e.rounded() == want
            }
            Err(_) => false,
        };
        if !ok {
            bad.push(c);
        }
    }
    let volume = simplices_route(f, &cfg.angle, false)?;
    let predicted = hopf_factor(m) * (chi - ends as i64) as f64;
    let close = (volume.value - predicted).abs() < 3.0 * volume.stderr + 1e-9 * predicted.abs().max(1.0);
    Ok(GaussBonnetReport {
        euler_characteristic: chi,
        ends,
        consistent: bad.is_empty() && close,
        bad_entries: bad,
        normalized: normalize(volume, m).value,
        volume,
        predicted,
    })
}

//! Patterson-Sullivan densities from finite orbits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::groups::Word;
use crate::lorentz::{distance, half_ray_min_distance, point_to_ray_distance, AdSPoint, BoundaryPoint, SpacelikeRay};
use crate::orbit::{linear_fit, orbit_point, Orbit};

pub const MIN_ATOMS: usize = 200;
/// Default offset of the evaluation exponent above the critical exponent estimate.
pub const EXPONENT_MARGIN: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PsError {
    #[error("no usable records ({0} found, need {MIN_ATOMS})")]
    NoUsableRecords(usize),
    #[error("exponent must be positive, got {0}")]
    BadExponent(f64),
    #[error("radius list is empty")]
    EmptyRadii,
    #[error("no orbit elements available for shadow tests")]
    NoShadowElements,
}

pub type Result<T> = std::result::Result<T, PsError>;

#[derive(Debug, Clone)]
pub struct Atom {
    pub point: BoundaryPoint,
    pub weight: f64,
    /// `d(γ·o, base)`.
    pub dist: f64,
    pub word: Word,
}

/// `Σ e^{-s d(γo, x)} δ_{ξ_γ}` over the enumerated orbit.
#[derive(Debug, Clone)]
pub struct PsMeasure {
    pub atoms: Vec<Atom>,
    pub s: f64,
    pub base: AdSPoint,
    pub total: f64,
    pub skipped_causal: usize,
    /// `s` lies below the lower end of the Poincaré bracket, if one is known.
    pub divergence_side: bool,
    /// `q(ξ, base)` per atom.
    qx: Vec<f64>,
}

impl PsMeasure {
    pub fn normalized_weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight / self.total).collect()
    }

    pub fn max_normalized_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).fold(0.0, f64::max) / self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Squared `d_base` between an arbitrary point and atom `i`.
    fn dx2(&self, xi: &BoundaryPoint, qxi: f64, i: usize) -> f64 {
        let q = xi.form(&self.atoms[i].point);
        -q / (2.0 * qxi * self.qx[i])
    }
}

/// Atoms at the ray endpoints of the records, weighted from `base`.
///
/// `bracket` is the Poincaré bracket of the same orbit, when known.
pub fn build_ps_measure(orbit: &Orbit, s: f64, base: &AdSPoint, bracket: Option<(f64, f64)>) -> Result<PsMeasure> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(PsError::BadExponent(s));
    }
    let mut atoms = Vec::new();
    let mut skipped = 0;
    for r in orbit.records.iter().skip(1) {
        let Some(endpoint) = &r.endpoint else {
            skipped += 1;
            continue;
        };
        let d = if *base == orbit.base { r.dist } else { distance(&orbit_point(&r.pair, &orbit.base), base) };
        atoms.push(Atom { point: endpoint.clone(), weight: (-s * d).exp(), dist: d, word: r.word.clone() });
    }
    if atoms.len() < MIN_ATOMS {
        return Err(PsError::NoUsableRecords(atoms.len()));
    }
    Ok(assemble(atoms, s, base.clone(), skipped, bracket))
}

/// Measure built directly from atoms, e.g. for synthetic checks.
pub fn measure_from_atoms(atoms: Vec<Atom>, s: f64, base: AdSPoint) -> PsMeasure {
    assemble(atoms, s, base, 0, None)
}

fn assemble(atoms: Vec<Atom>, s: f64, base: AdSPoint, skipped: usize, bracket: Option<(f64, f64)>) -> PsMeasure {
    let total = atoms.iter().map(|a| a.weight).sum();
    let qx = atoms.iter().map(|a| a.point.form_point(&base)).collect();
    PsMeasure { atoms, s, base, total, skipped_causal: skipped, divergence_side: bracket.is_some_and(|(lo, _)| s < lo), qx }
}

/// Unnormalized mass of `{η : d_base(ξ, η) ≤ r}`.
pub fn ball_mass(mu: &PsMeasure, xi: &BoundaryPoint, r: f64) -> f64 {
    let qxi = xi.form_point(&mu.base);
    let r2 = r * r;
    (0..mu.atoms.len()).filter(|&i| mu.dx2(xi, qxi, i) <= r2).map(|i| mu.atoms[i].weight).sum()
}

/// Unnormalized mass of the shadow `S_r(x, y)`. Atoms without a spacelike ray from `x` are ignored.
pub fn shadow_mass(mu: &PsMeasure, x: &AdSPoint, y: &AdSPoint, r: f64) -> f64 {
    let qxy = x.form(y);
    let cached = *x == mu.base;
    let mut mass = 0.0;
    for (i, a) in mu.atoms.iter().enumerate() {
        let qxi = if cached { mu.qx[i] } else { a.point.form_point(x) };
        if qxi >= 0.0 {
            continue;
        }
        // unit direction u = ξ/|q(x,ξ)| − x of the ray from x
        let qu = a.point.form_point(y) / -qxi - qxy;
        if half_ray_min_distance(0.5 * (qxy + qu), 0.5 * (qxy - qu)) <= r {
            mass += a.weight;
        }
    }
    mass
}

/// Slow reference for [`shadow_mass`] through explicit rays.
pub fn shadow_mass_by_rays(mu: &PsMeasure, x: &AdSPoint, y: &AdSPoint, r: f64) -> f64 {
    mu.atoms
        .iter()
        .filter(|a| SpacelikeRay::new(x, &a.point).is_ok_and(|ray| point_to_ray_distance(y, &ray) <= r))
        .map(|a| a.weight)
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct ShadowOptions {
    pub n_shadows: usize,
    /// Orbit points used for shadows have `d(o, γo)` in this range.
    pub shadow_dist_range: (f64, f64),
    pub n_ball_centres: usize,
    pub ball_radii: Vec<f64>,
    pub spread_tol: f64,
    pub slope_tol: f64,
    /// Mass-capture curve radii.
    pub capture_radii: Vec<f64>,
    pub seed: u64,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        ShadowOptions {
            n_shadows: 100,
            shadow_dist_range: (2.0, 6.0),
            n_ball_centres: 50,
            ball_radii: crate::boundary::log_grid(0.02, 0.2, 8),
            spread_tol: 100.0,
            slope_tol: 0.2,
            capture_radii: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShadowRow {
    pub r: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub spread: f64,
    pub empty_shadows: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShadowReport {
    pub delta_hat: f64,
    pub s: f64,
    pub rows: Vec<ShadowRow>,
    pub ball_slope: f64,
    pub ball_slope_stderr: f64,
    pub ball_pass: bool,
    /// `(R, mass of S_R(o, γo) / total)` averaged over the shadow elements.
    pub capture_curve: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Shadow-lemma ratio spreads, ball-mass scaling slope and the mass-capture curve.
pub fn shadow_lemma_report(
    mu: &PsMeasure,
    orbit: &Orbit,
    delta_hat: f64,
    r_list: &[f64],
    opts: &ShadowOptions,
) -> Result<ShadowReport> {
    if r_list.is_empty() {
        return Err(PsError::EmptyRadii);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (lo, hi) = opts.shadow_dist_range;
    let pool: Vec<usize> =
        (1..orbit.records.len()).filter(|&i| (lo..=hi).contains(&orbit.records[i].dist)).collect();
    if pool.is_empty() {
        return Err(PsError::NoShadowElements);
    }
    let picks: Vec<usize> = pool.choose_multiple(&mut rng, opts.n_shadows.min(pool.len())).copied().collect();
    let x = &mu.base;
    let targets: Vec<(AdSPoint, f64)> = picks
        .iter()
        .map(|&i| {
            let y = orbit_point(&orbit.records[i].pair, &orbit.base);
            let d = distance(x, &y);
            (y, d)
        })
        .collect();

    let mut rows = Vec::new();
    for &r in r_list {
        let mut ratios = Vec::new();
        let mut empty = 0;
        for (y, d) in &targets {
            let m = shadow_mass(mu, x, y, r) / mu.total;
            if m > 0.0 {
                ratios.push(m / (-delta_hat * d).exp());
            } else {
                empty += 1;
            }
        }
        let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio_max = ratios.iter().copied().fold(0.0, f64::max);
        let spread = if empty > 0 || ratios.is_empty() { f64::INFINITY } else { ratio_max / ratio_min };
        rows.push(ShadowRow { r, ratio_min, ratio_max, spread, empty_shadows: empty, pass: spread <= opts.spread_tol });
    }

    let (ball_slope, ball_slope_stderr) = ball_scaling_slope(mu, opts.n_ball_centres, &opts.ball_radii, &mut rng);
    let ball_pass = (ball_slope - delta_hat).abs() <= opts.slope_tol;

    let capture_curve = opts
        .capture_radii
        .iter()
        .map(|&rr| {
            let m: f64 = targets.iter().map(|(y, _)| shadow_mass(mu, x, y, rr)).sum::<f64>();
            (rr, m / (targets.len() as f64 * mu.total))
        })
        .collect();

    let pass = rows.iter().all(|r| r.pass) && ball_pass;
    Ok(ShadowReport { delta_hat, s: mu.s, rows, ball_slope, ball_slope_stderr, ball_pass, capture_curve, pass })
}

/// Slope of the mean `log ball_mass` against `log r` over random atom centres.
pub fn ball_scaling_slope(mu: &PsMeasure, n_centres: usize, radii: &[f64], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let idx: Vec<usize> = (0..mu.atoms.len()).collect();
    let centres: Vec<usize> = idx.choose_multiple(rng, n_centres.min(idx.len())).copied().collect();
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = radii
        .iter()
        .map(|&r| {
            centres.iter().map(|&c| (ball_mass(mu, &mu.atoms[c].point, r) / mu.total).ln()).sum::<f64>()
                / centres.len() as f64
        })
        .collect();
    let (slope, _, se, _) = linear_fit(&xs, &ys);
    (slope, se)
}

//! Orbit enumeration, counting functions and the critical exponent.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::groups::{IsometryPair, Letter, MessGroup, Word};
use crate::lorentz::{self, distance, distance_from_form, ray_endpoint, AdSPoint, BoundaryPoint};
use crate::mat2::Mat2;

/// Longest word length accepted by [`enumerate_orbit`].
pub const MAX_WORD_LEN: usize = 16;
/// Quantum of the dedup key.
pub const KEY_QUANTUM: f64 = 1e-6;
/// Two pairs sharing a key are the same element when they agree to this relative tolerance.
pub const COLLISION_TOL: f64 = 1e-7;
/// Sum level at which the Poincaré series is declared divergent.
pub const POINCARE_THRESHOLD: f64 = 1e6;
/// Minimum number of records with positive distance for an exponent fit.
pub const MIN_RECORDS: usize = 200;
/// Loss of counts within this distance of the prune radius is expected.
pub const PRUNE_MARGIN: f64 = 2.0;

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("max_word_len {0} exceeds the guard {MAX_WORD_LEN}")]
    WordTooLong(usize),
    #[error("record limit {limit} reached; lengths up to {completed_len} are complete")]
    MemoryGuard { completed_len: usize, limit: usize, partial: Box<Orbit> },
    #[error("insufficient records: {found} with positive distance, need {needed}")]
    InsufficientRecords { found: usize, needed: usize },
    #[error("degenerate regression window [{0}, {1}]")]
    DegenerateWindow(f64, f64),
    #[error("grid step must be positive, got {0}")]
    BadGrid(f64),
}

pub type Result<T> = std::result::Result<T, OrbitError>;

/// One enumerated group element.
#[derive(Debug, Clone)]
pub struct OrbitRecord {
    pub word: Word,
    pub pair: IsometryPair,
    /// `d(γ·o, o)`.
    pub dist: f64,
    pub endpoint: Option<BoundaryPoint>,
    pub causal_flag: bool,
}

impl OrbitRecord {
    pub fn trace1(&self) -> f64 {
        self.pair.g.trace()
    }

    pub fn trace2(&self) -> f64 {
        self.pair.h.trace()
    }

    /// `γ·o`.
    pub fn point(&self, base: &AdSPoint) -> AdSPoint {
        orbit_point(&self.pair, base)
    }
}

/// `γ·o` as a point of AdS³.
pub fn orbit_point(pair: &IsometryPair, base: &AdSPoint) -> AdSPoint {
    let o = base.matrix().expect("AdS³ base point");
    AdSPoint::from_vector_unchecked(lorentz::from_matrix(&pair.apply_matrix(&o)))
}

/// `q(γ·o, o)`.
pub fn pair_form(pair: &IsometryPair, base: &Mat2) -> f64 {
    if *base == Mat2::J {
        pair.form_at_j()
    } else {
        lorentz::matrix_form(&pair.apply_matrix(base), base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    pub max_word_len: usize,
    /// Elements farther than this are dropped and not extended.
    pub prune_radius: Option<f64>,
    pub max_records: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions { max_word_len: 8, prune_radius: None, max_records: 3_000_000 }
    }
}

impl EnumerationOptions {
    pub fn with_len(max_word_len: usize) -> Self {
        EnumerationOptions { max_word_len, ..Default::default() }
    }
}

/// Enumerated orbit with the bookkeeping needed to judge completeness.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub records: Vec<OrbitRecord>,
    pub base: AdSPoint,
    pub max_word_len: usize,
    pub prune_radius: Option<f64>,
    /// Number of new elements first reached at each word length.
    pub new_per_len: Vec<usize>,
    /// Smallest distance among the new elements of each length.
    pub min_new_dist: Vec<f64>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Radius below which the distance ball is taken to be fully enumerated.
    ///
    /// Elements of the next word length are assumed to lie no closer than the closest
    /// new element of the last length; the prune radius, less a margin, caps the value.
    pub fn completeness_radius(&self) -> f64 {
        let mut r = self
            .min_new_dist
            .iter()
            .rev()
            .find(|d| d.is_finite())
            .copied()
            .unwrap_or(f64::INFINITY);
        if let Some(p) = self.prune_radius {
            r = r.min(p - PRUNE_MARGIN);
        }
        r
    }

    pub fn causal_fraction(&self) -> f64 {
        if self.records.len() <= 1 {
            return 0.0;
        }
        let n = self.records.iter().filter(|r| r.causal_flag).count();
        n as f64 / (self.records.len() - 1) as f64
    }

    /// Causal fraction among words of length `≤ len`.
    pub fn causal_fraction_up_to(&self, len: usize) -> f64 {
        let short: Vec<_> = self.records.iter().filter(|r| r.word.len() <= len && !r.word.is_empty()).collect();
        if short.is_empty() {
            return 0.0;
        }
        short.iter().filter(|r| r.causal_flag).count() as f64 / short.len() as f64
    }

    pub fn distances(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.dist).collect()
    }
}

type Key = [i64; 8];

/// Sign-normalize each factor so that its trace is nonnegative.
fn canonical(pair: &IsometryPair) -> IsometryPair {
    fn fix(m: Mat2) -> Mat2 {
        let lead = if m.trace().abs() >= 1.0 {
            m.trace()
        } else {
            // not hit by hyperbolic elements; fall back on the largest entry
            let e = m.to_row_major();
            *e.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap()
        };
        if lead < 0.0 {
            -m
        } else {
            m
        }
    }
    IsometryPair { g: fix(pair.g), h: fix(pair.h) }
}

fn entries(p: &IsometryPair) -> [f64; 8] {
    let (g, h) = (p.g.to_row_major(), p.h.to_row_major());
    [g[0], g[1], g[2], g[3], h[0], h[1], h[2], h[3]]
}

/// The key of a canonical pair plus neighbouring keys for coordinates close to a cell edge.
fn candidate_keys(p: &IsometryPair) -> SmallVec<[Key; 4]> {
    let e = entries(p);
    let mut base = [0i64; 8];
    let mut alt: SmallVec<[(usize, i64); 8]> = SmallVec::new();
    for (i, x) in e.iter().enumerate() {
        let t = x / KEY_QUANTUM;
        let r = t.round();
        base[i] = r as i64;
        let frac = t - r;
        if frac.abs() > 0.4 {
            alt.push((i, if frac > 0.0 { 1 } else { -1 }));
        }
    }
    let mut keys: SmallVec<[Key; 4]> = SmallVec::new();
    keys.push(base);
    for (i, step) in alt {
        let n = keys.len();
        for k in 0..n {
            let mut key = keys[k];
            key[i] += step;
            keys.push(key);
        }
    }
    keys
}

fn same_element(a: &IsometryPair, b: &IsometryPair) -> bool {
    let scale = a.g.max_abs().max(a.h.max_abs()).max(1.0);
    a.g.dist_inf(&b.g).max(a.h.dist_inf(&b.h)) <= COLLISION_TOL * scale
}

struct Dedup {
    map: HashMap<Key, SmallVec<[u32; 1]>>,
}

impl Dedup {
    fn find(&self, canon: &IsometryPair, keys: &[Key], records: &[OrbitRecord]) -> bool {
        keys.iter().any(|k| {
            self.map.get(k).is_some_and(|ids| {
                ids.iter().any(|&i| same_element(&canonical(&records[i as usize].pair), canon))
            })
        })
    }

    fn insert(&mut self, key: Key, id: u32) {
        self.map.entry(key).or_default().push(id);
    }
}

/// Enumerates distinct elements of reduced words up to `opts.max_word_len`, in shortlex order.
pub fn enumerate_orbit(group: &MessGroup, opts: EnumerationOptions) -> Result<Orbit> {
    if opts.max_word_len > MAX_WORD_LEN {
        return Err(OrbitError::WordTooLong(opts.max_word_len));
    }
    let base = group.base().clone();
    let base_m = base.matrix().expect("AdS³ base point");
    let n_letters = group.alphabet().num_letters() as Letter;
    let letters: Vec<IsometryPair> = (0..n_letters).map(|l| group.letter_pair(l)).collect();
    let prune = opts.prune_radius.unwrap_or(f64::INFINITY);

    let mut records = vec![OrbitRecord {
        word: Word::empty(),
        pair: IsometryPair::IDENTITY,
        dist: 0.0,
        endpoint: None,
        causal_flag: false,
    }];
    let mut dedup = Dedup { map: HashMap::new() };
    dedup.insert(candidate_keys(&canonical(&IsometryPair::IDENTITY))[0], 0);
    let mut frontier: Vec<u32> = vec![0];
    let mut new_per_len = vec![1usize];
    let mut min_new_dist = vec![0.0];

    for len in 1..=opts.max_word_len {
        let children: Vec<(Word, IsometryPair, f64)> = frontier
            .par_iter()
            .flat_map_iter(|&pi| {
                let parent = &records[pi as usize];
                let last = parent.word.last();
                let letters = &letters;
                let base_m = &base_m;
                (0..n_letters).filter_map(move |l| {
                    if last.is_some_and(|x| crate::groups::inverse_letter(x) == l) {
                        return None;
                    }
                    let pair = parent.pair.compose(&letters[l as usize]);
                    let dist = distance_from_form(pair_form(&pair, base_m));
                    Some((parent.word.pushed(l), pair, dist))
                })
            })
            .collect();

        let mut next = Vec::new();
        let mut min_d = f64::INFINITY;
        for (word, pair, dist) in children {
            if dist > prune {
                continue;
            }
            let canon = canonical(&pair);
            let keys = candidate_keys(&canon);
            if dedup.find(&canon, &keys, &records) {
                continue;
            }
            if records.len() >= opts.max_records {
                let partial = Orbit {
                    records: finish_records(records, &base),
                    base,
                    max_word_len: len - 1,
                    prune_radius: opts.prune_radius,
                    new_per_len,
                    min_new_dist,
                };
                return Err(OrbitError::MemoryGuard {
                    completed_len: len - 1,
                    limit: opts.max_records,
                    partial: Box::new(partial),
                });
            }
            let id = records.len() as u32;
            dedup.insert(keys[0], id);
            min_d = min_d.min(dist);
            records.push(OrbitRecord { word, pair, dist, endpoint: None, causal_flag: dist == 0.0 });
            next.push(id);
        }
        new_per_len.push(next.len());
        min_new_dist.push(min_d);
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    Ok(Orbit {
        records: finish_records(records, &base),
        base,
        max_word_len: opts.max_word_len,
        prune_radius: opts.prune_radius,
        new_per_len,
        min_new_dist,
    })
}

fn finish_records(mut records: Vec<OrbitRecord>, base: &AdSPoint) -> Vec<OrbitRecord> {
    records.par_iter_mut().for_each(|r| {
        if r.dist > 0.0 {
            r.endpoint = ray_endpoint(base, &orbit_point(&r.pair, base)).ok();
        }
    });
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMethod {
    Regression,
    PoincareBracket,
}

/// Regression window for `log N(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// Upper half of `[0, R_c]`, `R_c` the completeness radius.
    #[default]
    UpperHalf,
    Explicit { r_min: f64, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub delta: f64,
    pub window: (f64, f64),
    pub slope_stderr: f64,
    pub counts: Vec<(f64, usize)>,
    pub method: ExponentMethod,
    pub intercept: f64,
    pub completeness_radius: f64,
    pub poincare_bracket: Option<(f64, f64)>,
}

/// Least-squares line `y = a + b x`; returns `(b, a, stderr(b), r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, stderr, r2)
}

/// `N(R)` on `R = step, 2·step, …` up to `r_max`; `dists` must be sorted.
pub fn counting_function(sorted: &[f64], step: f64, r_max: f64) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    let mut i = 1usize;
    loop {
        let r = step * i as f64;
        if r > r_max + 1e-12 {
            break;
        }
        out.push((r, sorted.partition_point(|&d| d <= r)));
        i += 1;
    }
    out
}

/// Bracket `(s⁻, s⁺)` of width ≤ `1e-6` around the `s` where `Σ e^{-s d}` over `d > 0` crosses `threshold`.
pub fn poincare_bracket(dists: &[f64], threshold: f64) -> Option<(f64, f64)> {
    let pos: Vec<f64> = dists.iter().copied().filter(|&d| d > 0.0).collect();
    let sum = |s: f64| pos.iter().map(|d| (-s * d).exp()).sum::<f64>();
    if sum(0.0) <= threshold {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while sum(hi) > threshold {
        hi *= 2.0;
        if hi > 1e3 {
            return None;
        }
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

/// Fits `log N(R)` against `R` on the orbit.
pub fn estimate_exponent(orbit: &Orbit, grid_step: f64, rule: WindowRule) -> Result<ExponentEstimate> {
    estimate_exponent_from_distances(&orbit.distances(), orbit.completeness_radius(), grid_step, rule)
}

/// Same as [`estimate_exponent`] for a bare list of distances (identity included or not).
pub fn estimate_exponent_from_distances(
    dists: &[f64],
    completeness_radius: f64,
    grid_step: f64,
    rule: WindowRule,
) -> Result<ExponentEstimate> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(OrbitError::BadGrid(grid_step));
    }
    let found = dists.iter().filter(|&&d| d > 0.0).count();
    if found < MIN_RECORDS {
        return Err(OrbitError::InsufficientRecords { found, needed: MIN_RECORDS });
    }
    let mut sorted = dists.to_vec();
    sorted.sort_by(f64::total_cmp);
    let observed_max = *sorted.last().unwrap();
    let r_top = completeness_radius.min(observed_max);
    let (lo, hi) = match rule {
        WindowRule::UpperHalf => (0.5 * r_top, r_top),
        WindowRule::Explicit { r_min, r_max } => (r_min, r_max.min(observed_max)),
    };
    let counts = counting_function(&sorted, grid_step, observed_max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = counts
        .iter()
        .filter(|(r, n)| *r >= lo - 1e-12 && *r <= hi + 1e-12 && *n > 0)
        .map(|&(r, n)| (r, (n as f64).ln()))
        .unzip();
    if xs.len() < 3 || !(hi > lo) {
        return Err(OrbitError::DegenerateWindow(lo, hi));
    }
    let (slope, intercept, stderr, _) = linear_fit(&xs, &ys);
    Ok(ExponentEstimate {
        delta: slope.max(0.0),
        window: (lo, hi),
        slope_stderr: stderr,
        counts,
        method: ExponentMethod::Regression,
        intercept,
        completeness_radius,
        poincare_bracket: poincare_bracket(dists, POINCARE_THRESHOLD),
    })
}

/// Largest sampled defect `d(x,y) − d(x,z) − d(z,y)`, clamped at 0.
pub fn triangle_constant(points: &[AdSPoint], sample_size: usize, seed: u64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut worst = 0.0f64;
    for _ in 0..sample_size {
        let x = &points[rng.gen_range(0..n)];
        let y = &points[rng.gen_range(0..n)];
        let z = &points[rng.gen_range(0..n)];
        worst = worst.max(distance(x, y) - distance(x, z) - distance(z, y));
    }
    worst
}

/// Orthogonal projection onto the trace-zero plane, rescaled back to the quadric.
///
/// Returns `None` when the trace-zero part is not timelike.
pub fn project_trace_zero(p: &AdSPoint) -> Option<AdSPoint> {
    let m = p.matrix().ok()?;
    let t = 0.5 * m.trace();
    let x = m - Mat2::IDENTITY.scale(t);
    let det = x.det();
    (det > 0.0).then(|| AdSPoint::from_vector_unchecked(lorentz::from_matrix(&x.scale(1.0 / det.sqrt()))))
}

/// Orbit points `γ·o` of all records.
pub fn orbit_points(orbit: &Orbit) -> Vec<AdSPoint> {
    orbit.records.iter().map(|r| r.point(&orbit.base)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_genus2, build_schottky, Genus2Params, SchottkyParams};

    fn schottky() -> MessGroup {
        MessGroup::fuchsian(build_schottky(SchottkyParams::default()).unwrap())
    }

    #[test]
    fn length_zero_is_identity() {
        let o = enumerate_orbit(&schottky(), EnumerationOptions::with_len(0)).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o.records[0].dist, 0.0);
        assert!(o.records[0].word.is_empty());
    }

    #[test]
    fn free_rank_two_counts_reduced_words() {
        let o = enumerate_orbit(&schottky(), EnumerationOptions::with_len(3)).unwrap();
        assert_eq!(o.len(), 53);
        assert_eq!(o.new_per_len, vec![1, 4, 12, 36]);
    }

    #[test]
    fn shortlex_order() {
        let o = enumerate_orbit(&schottky(), EnumerationOptions::with_len(3)).unwrap();
        for w in o.records.windows(2) {
            let (a, b) = (&w[0].word, &w[1].word);
            assert!(a.len() < b.len() || (a.len() == b.len() && a.letters() < b.letters()));
        }
    }

    #[test]
    fn genus2_relator_collisions() {
        let g = MessGroup::fuchsian(build_genus2(Genus2Params::default()).unwrap());
        let o = enumerate_orbit(&g, EnumerationOptions::with_len(5)).unwrap();
        // half-relator coincidences such as a1b1A1B1 = b2a2B2A2 start at length 4
        assert_eq!(o.new_per_len[..4], [1, 8, 56, 392]);
        assert!(o.new_per_len[4] < 2744);
        let opts = EnumerationOptions { max_word_len: 8, prune_radius: Some(9.0), ..Default::default() };
        let o = enumerate_orbit(&g, opts).unwrap();
        let free: usize = (1..=8).map(|k| 8 * 7usize.pow(k - 1)).sum::<usize>() + 1;
        assert!(o.len() < free);
    }

    #[test]
    fn memory_guard_reports_completed_length() {
        let opts = EnumerationOptions { max_word_len: 6, prune_radius: None, max_records: 100 };
        match enumerate_orbit(&schottky(), opts) {
            Err(OrbitError::MemoryGuard { completed_len, partial, .. }) => {
                assert_eq!(completed_len, 3);
                assert_eq!(partial.len(), 100);
            }
            other => panic!("expected guard, got {other:?}"),
        }
        assert!(matches!(
            enumerate_orbit(&schottky(), EnumerationOptions::with_len(17)),
            Err(OrbitError::WordTooLong(17))
        ));
    }

    #[test]
    fn exact_exponential_counts() {
        // N(R) = ⌈e^R⌉ from distances ln k
        let dists: Vec<f64> = (1..200_000).map(|k| (k as f64).ln()).collect();
        let est = estimate_exponent_from_distances(&dists, 12.0, 0.05, WindowRule::UpperHalf).unwrap();
        assert!((est.delta - 1.0).abs() < 0.01, "{}", est.delta);
    }

    #[test]
    fn too_few_records() {
        let dists = vec![1.0; 150];
        assert!(matches!(
            estimate_exponent_from_distances(&dists, 5.0, 0.1, WindowRule::UpperHalf),
            Err(OrbitError::InsufficientRecords { found: 150, .. })
        ));
    }

    #[test]
    fn poincare_bracket_brackets_crossing() {
        let dists: Vec<f64> = (1..2_000_000).map(|k| (k as f64).ln()).collect();
        let (lo, hi) = poincare_bracket(&dists, 1e3).unwrap();
        let sum = |s: f64| dists.iter().filter(|&&d| d > 0.0).map(|d| (-s * d).exp()).sum::<f64>();
        assert!(sum(lo) > 1e3 && sum(hi) <= 1e3 && hi - lo <= 1e-6);
        assert!(poincare_bracket(&dists[..10], 1e3).is_none());
    }

    #[test]
    fn triangle_on_single_point() {
        assert_eq!(triangle_constant(&[AdSPoint::j()], 1, 7), 0.0);
    }
}

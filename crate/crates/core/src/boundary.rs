//! Limit sets on ∂AdS³ and their Lorentzian boundary geometry.

use serde::Serialize;
use thiserror::Error;

use crate::groups::{fixed_points, GroupError, MessGroup, Word};
use crate::lorentz::{point_to_ray_distance, AdSPoint, BoundaryPoint, GeometryError, SpacelikeRay};
use crate::orbit::{enumerate_orbit, linear_fit, EnumerationOptions, Orbit, OrbitError};

/// Ray-equality tolerance used to deduplicate sampled limit points.
pub const DEDUP_TOL: f64 = 1e-8;
/// Absolute tolerance on the Ptolemy sum in [`geodesics_intersect`].
pub const INTERSECT_TOL: f64 = 1e-8;
/// Forms above this value count as causal pairs in the acausality check.
pub const ACAUSAL_BAND: f64 = 1e-12;
pub const MIN_HDIM_SAMPLE: usize = 500;
pub const DEFAULT_EPS_RANGE: (f64, f64) = (0.005, 0.1);
pub const MIN_WINDOW: usize = 5;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("points are causally related: q = {0}")]
    Causal(f64),
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("limit sample is not acausal: {} violating pairs", .0.len())]
    NotAcausal(Vec<(usize, usize, f64)>),
    #[error("sample too small: {found} points, need {needed}")]
    SampleTooSmall { found: usize, needed: usize },
    #[error("bad epsilon grid: {0}")]
    BadGrid(String),
    #[error("resolution exhausted: fewer than {MIN_WINDOW} usable scales")]
    Resolution,
}

pub type Result<T> = std::result::Result<T, BoundaryError>;

/// Finite sample of the limit set seen from `base`.
#[derive(Debug, Clone)]
pub struct LimitSample {
    pub points: Vec<(BoundaryPoint, Word)>,
    pub base: AdSPoint,
    /// Elements skipped because one factor is not hyperbolic.
    pub skipped_non_hyperbolic: usize,
    pub duplicates_removed: usize,
    pub notes: Vec<String>,
}

impl LimitSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn boundary_points(&self) -> Vec<BoundaryPoint> {
        self.points.iter().map(|(p, _)| p.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleOptions {
    /// Keep at most this many elements, taken by increasing distance.
    pub max_points: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { max_points: 5000 }
    }
}

/// Enumerates the orbit and samples attracting fixed points.
pub fn sample_limit_set(group: &MessGroup, enumeration: EnumerationOptions, opts: SampleOptions) -> Result<LimitSample> {
    let orbit = enumerate_orbit(group, enumeration)?;
    let mut sample = limit_sample_from_orbit(&orbit, opts)?;
    if group.is_schottky() {
        sample.notes.push("limit set not a circle".into());
    }
    Ok(sample)
}

/// Attracting fixed points of the records of `orbit`, closest elements first.
pub fn limit_sample_from_orbit(orbit: &Orbit, opts: SampleOptions) -> Result<LimitSample> {
    let base = orbit.base.clone();
    let mut order: Vec<usize> = (1..orbit.records.len()).collect();
    order.sort_by(|&i, &j| orbit.records[i].dist.total_cmp(&orbit.records[j].dist).then(i.cmp(&j)));

    let mut points: Vec<(BoundaryPoint, Word)> = Vec::new();
    let mut skipped = 0;
    let mut duplicates = 0;
    let mut grid = DedupGrid::default();
    for i in order {
        if points.len() >= opts.max_points {
            break;
        }
        let rec = &orbit.records[i];
        let fp = match fixed_points(&rec.pair, &base) {
            Ok(fp) => fp.attracting,
            Err(GroupError::NonHyperbolic { .. }) => {
                skipped += 1;
                continue;
            }
            Err(GroupError::Geometry(e)) => return Err(e.into()),
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if grid.contains(&fp, &points) {
            duplicates += 1;
            continue;
        }
        grid.insert(&fp, points.len());
        points.push((fp, rec.word.clone()));
    }

    let mut violations = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let q = points[i].0.form(&points[j].0);
            if q > ACAUSAL_BAND {
                violations.push((i, j, q));
            }
        }
    }
    if !violations.is_empty() {
        return Err(BoundaryError::NotAcausal(violations));
    }
    Ok(LimitSample { points, base, skipped_non_hyperbolic: skipped, duplicates_removed: duplicates, notes: Vec::new() })
}

/// Spatial hash on unit representatives for ray-equality dedup.
#[derive(Default)]
struct DedupGrid {
    cells: std::collections::HashMap<[i64; 4], Vec<usize>>,
}

impl DedupGrid {
    const CELL: f64 = 1e-6;

    fn cell(p: &BoundaryPoint) -> [i64; 4] {
        let c = p.vector().coords();
        [0, 1, 2, 3].map(|i| (c[i] / Self::CELL).floor() as i64)
    }

    fn contains(&self, p: &BoundaryPoint, points: &[(BoundaryPoint, Word)]) -> bool {
        let c = Self::cell(p);
        for d in 0..81 {
            let mut k = c;
            let mut r = d;
            for v in k.iter_mut() {
                *v += (r % 3) as i64 - 1;
                r /= 3;
            }
            if let Some(ids) = self.cells.get(&k) {
                if ids.iter().any(|&i| points[i].0.ray_eq(p, DEDUP_TOL)) {
                    return true;
                }
            }
        }
        false
    }

    fn insert(&mut self, p: &BoundaryPoint, id: usize) {
        self.cells.entry(Self::cell(p)).or_default().push(id);
    }
}

/// `(ξ|η)_x` and `d_x(ξ, η) = e^{-(ξ|η)_x}`.
pub fn gromov_metric(x: &AdSPoint, xi: &BoundaryPoint, eta: &BoundaryPoint) -> Result<(f64, f64)> {
    let a = xi.form_point(x);
    let b = eta.form_point(x);
    if !(a < 0.0 && b < 0.0) {
        return Err(GeometryError::OnDualHyperplane.into());
    }
    if xi.ray_eq(eta, DEDUP_TOL) {
        return Ok((f64::INFINITY, 0.0));
    }
    let q = xi.form(eta);
    if q >= 0.0 {
        return Err(BoundaryError::Causal(q));
    }
    let dist = (-q / (2.0 * a * b)).sqrt();
    Ok((-dist.ln(), dist))
}

/// `d_x(ξ, η)`.
pub fn gromov_dist(x: &AdSPoint, xi: &BoundaryPoint, eta: &BoundaryPoint) -> Result<f64> {
    gromov_metric(x, xi, eta).map(|(_, d)| d)
}

/// `[a,b,c,d]` from the base-point free squared form `q(a,c)q(b,d) / (q(b,c)q(a,d))`.
pub fn cross_ratio(a: &BoundaryPoint, b: &BoundaryPoint, c: &BoundaryPoint, d: &BoundaryPoint) -> Result<f64> {
    let num = a.form(c) * b.form(d);
    let den = b.form(c) * a.form(d);
    if num == 0.0 || den == 0.0 {
        return Err(BoundaryError::Degenerate("coincident points in cross-ratio"));
    }
    let sq = num / den;
    if !(sq > 0.0) || !sq.is_finite() {
        return Err(BoundaryError::Degenerate("cross-ratio is not positive"));
    }
    Ok(sq.sqrt())
}

/// `[a,b,c,d] = d_x(a,c) d_x(b,d) / (d_x(a,d) d_x(b,c))` evaluated at `x`.
pub fn cross_ratio_at(
    x: &AdSPoint,
    a: &BoundaryPoint,
    b: &BoundaryPoint,
    c: &BoundaryPoint,
    d: &BoundaryPoint,
) -> Result<f64> {
    let num = gromov_dist(x, a, c)? * gromov_dist(x, b, d)?;
    let den = gromov_dist(x, a, d)? * gromov_dist(x, b, c)?;
    if num == 0.0 || den == 0.0 {
        return Err(BoundaryError::Degenerate("coincident points in cross-ratio"));
    }
    Ok(num / den)
}

/// Whether the ray from `x` to `ξ` meets the ball `B(y, r)`.
pub fn shadow_membership(xi: &BoundaryPoint, x: &AdSPoint, y: &AdSPoint, r: f64) -> Result<bool> {
    let ray = SpacelikeRay::new(x, xi)?;
    Ok(point_to_ray_distance(y, &ray) <= r)
}

/// Whether the geodesics `(ξ₁ ξ₂)` and `(η₁ η₂)` meet.
pub fn geodesics_intersect(
    xi1: &BoundaryPoint,
    xi2: &BoundaryPoint,
    eta1: &BoundaryPoint,
    eta2: &BoundaryPoint,
) -> Result<bool> {
    let pts = [xi1, xi2, eta1, eta2];
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i].ray_eq(pts[j], DEDUP_TOL) {
                return Err(BoundaryError::Degenerate("coincident endpoints"));
            }
        }
    }
    let s = cross_ratio(xi1, eta1, eta2, xi2)? + cross_ratio(xi1, eta2, eta1, xi2)?;
    Ok((s - 1.0).abs() <= INTERSECT_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdimEstimate {
    pub hdim: f64,
    pub eps_grid: Vec<f64>,
    pub counts: Vec<(f64, usize)>,
    pub window: (f64, f64),
    pub r2: f64,
    pub slope_stderr: f64,
    pub sample_size: usize,
    /// Set when the finest scale exceeded the resolution of the sample.
    pub resolution_warning: bool,
    pub window_shrunk: bool,
}

/// `n` log-spaced scales from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == n => hi,
            _ => (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

pub fn default_eps_grid() -> Vec<f64> {
    log_grid(DEFAULT_EPS_RANGE.0, DEFAULT_EPS_RANGE.1, 16)
}

/// Covering radii `r_k` of the first `k` centres of a farthest-point traversal under `d_base`.
///
/// Stops once the radius drops below `stop`.
pub fn farthest_point_radii(sample: &LimitSample, stop: f64) -> Vec<f64> {
    let n = sample.points.len();
    if n == 0 {
        return Vec::new();
    }
    let vs: Vec<[f64; 4]> = sample
        .points
        .iter()
        .map(|(p, _)| {
            let c = p.vector().coords();
            [c[0], c[1], c[2], c[3]]
        })
        .collect();
    let x = sample.base.vector().coords();
    let form = |u: &[f64; 4], v: &[f64]| -u[0] * v[0] - u[1] * v[1] + u[2] * v[2] + u[3] * v[3];
    let qx: Vec<f64> = vs.iter().map(|v| form(v, x)).collect();
    // squared d_x
    let d2 = |i: usize, j: usize| -> f64 {
        let q = form(&vs[i], &vs[j]);
        (-q / (2.0 * qx[i] * qx[j])).max(0.0)
    };
    let mut min_d2: Vec<f64> = (0..n).map(|i| d2(0, i)).collect();
    let mut radii = Vec::new();
    loop {
        let (far, r2) = min_d2
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let r = r2.sqrt();
        radii.push(r);
        if r <= stop || radii.len() >= n {
            break;
        }
        for (i, m) in min_d2.iter_mut().enumerate() {
            let v = d2(far, i);
            if v < *m {
                *m = v;
            }
        }
    }
    radii
}

/// Box-counting dimension of the sample under `d_base` from farthest-point nets.
pub fn estimate_hdim(sample: &LimitSample, eps_grid: &[f64]) -> Result<HdimEstimate> {
    if sample.len() < MIN_HDIM_SAMPLE {
        return Err(BoundaryError::SampleTooSmall { found: sample.len(), needed: MIN_HDIM_SAMPLE });
    }
    if eps_grid.is_empty() {
        return Err(BoundaryError::BadGrid("empty grid".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BoundaryError::BadGrid("grid must be increasing".into()));
    }
    if eps_grid[0] < 1e-3 || *eps_grid.last().unwrap() > 0.3 {
        return Err(BoundaryError::BadGrid("scales must lie in [1e-3, 0.3]".into()));
    }
    let radii = farthest_point_radii(sample, eps_grid[0]);
    // N(ε) = number of centres needed for covering radius ≤ ε
    let count = |eps: f64| radii.iter().position(|&r| r <= eps).map(|k| k + 1).unwrap_or(radii.len());
    let counts: Vec<(f64, usize)> = eps_grid.iter().map(|&e| (e, count(e))).collect();

    let half = sample.len() / 2;
    let resolution_warning = counts[0].1 > half;
    let usable: Vec<(f64, usize)> = counts.iter().copied().filter(|&(_, n)| n <= half && n > 1).collect();
    let window_shrunk = usable.len() < counts.len();
    if usable.len() < MIN_WINDOW {
        return Err(BoundaryError::Resolution);
    }
    let xs: Vec<f64> = usable.iter().map(|(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, n)| (*n as f64).ln()).collect();
    let mut best: Option<(f64, f64, f64, usize, usize)> = None;
    for i in 0..usable.len() {
        for j in i + MIN_WINDOW..=usable.len() {
            let (slope, _, se, r2) = linear_fit(&xs[i..j], &ys[i..j]);
            let better = match best {
                None => true,
                Some((_, _, br2, bi, bj)) => r2 > br2 + 1e-12 || ((r2 - br2).abs() <= 1e-12 && j - i > bj - bi),
            };
            if better {
                best = Some((slope, se, r2, i, j));
            }
        }
    }
    let (slope, se, r2, i, j) = best.expect("window exists");
    Ok(HdimEstimate {
        hdim: slope.max(0.0),
        eps_grid: eps_grid.to_vec(),
        counts,
        window: (usable[i].0, usable[j - 1].0),
        r2,
        slope_stderr: se,
        sample_size: sample.len(),
        resolution_warning,
        window_shrunk,
    })
}

/// The two RP¹ angles `(arg u, arg w)` in `[0, π)` of a rank-one matrix `u wᵀ`.
pub fn rp1_coords(p: &BoundaryPoint) -> Result<(f64, f64)> {
    let m = p.matrix()?;
    let cols = [[m.a, m.c], [m.b, m.d]];
    let rows = [[m.a, m.b], [m.c, m.d]];
    let pick = |v: [[f64; 2]; 2]| if v[0][0].hypot(v[0][1]) >= v[1][0].hypot(v[1][1]) { v[0] } else { v[1] };
    let angle = |v: [f64; 2]| v[1].atan2(v[0]).rem_euclid(std::f64::consts::PI);
    Ok((angle(pick(cols)), angle(pick(rows))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lorentz::{geodesic_point, AmbientVector};

    fn circle_point(theta: f64) -> BoundaryPoint {
        // u = (cos θ, sin θ) and w ⟂ u give a trace-zero rank-one matrix
        let u = [theta.cos(), theta.sin()];
        let w = [-theta.sin(), theta.cos()];
        BoundaryPoint::from_matrix(&crate::mat2::Mat2::outer(u, w), &AdSPoint::j()).unwrap()
    }

    #[test]
    fn gromov_identity_and_on_geodesic() {
        let j = AdSPoint::j();
        let (a, b) = (circle_point(0.3), circle_point(0.3 + std::f64::consts::FRAC_PI_2));
        assert_eq!(gromov_dist(&j, &a, &a).unwrap(), 0.0);
        // J lies on the geodesic joining antipodal circle points
        let d = gromov_dist(&j, &a, &b).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn causal_pair_is_rejected() {
        let j = AdSPoint::j();
        let a = BoundaryPoint::new(AmbientVector::new(&[0.0, -1.0, 1.0, 0.0]), &j).unwrap();
        let b = BoundaryPoint::new(AmbientVector::new(&[0.0, -1.0, -1.0, 0.0]), &j).unwrap();
        let c = BoundaryPoint::new(AmbientVector::new(&[1.0, -1.0, 2f64.sqrt(), 0.0]), &j).unwrap();
        assert!(gromov_dist(&j, &a, &b).is_ok());
        assert!(matches!(gromov_dist(&j, &a, &c), Err(BoundaryError::Causal(_))));
    }

    #[test]
    fn ptolemy_on_circle() {
        let p = |t: f64| circle_point(t);
        // angle θ ∈ [0, π) parametrizes RP¹
        let (x1, y1, x2, y2) = (p(0.1), p(0.8), p(1.5), p(2.6));
        assert!(geodesics_intersect(&x1, &x2, &y1, &y2).unwrap());
        assert!(!geodesics_intersect(&x1, &y1, &x2, &y2).unwrap());
        assert!(geodesics_intersect(&x1, &x2, &x1, &y2).is_err());
    }

    #[test]
    fn shadow_contains_ray_points() {
        let j = AdSPoint::j();
        let xi = circle_point(1.1);
        let ray = SpacelikeRay::new(&j, &xi).unwrap();
        let y = geodesic_point(&ray, 5.0);
        assert!(shadow_membership(&xi, &j, &y, 1e-6).unwrap());
        assert!(shadow_membership(&circle_point(1.1), &j, &j, 0.1).unwrap());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.005, 0.1, 16);
        assert!((g[0] - 0.005).abs() < 1e-15 && (g[15] - 0.1).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}

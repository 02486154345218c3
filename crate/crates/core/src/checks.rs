//! Seeded numerical checks of boundary identities.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::boundary::{cross_ratio, cross_ratio_at, gromov_dist, LimitSample};
use crate::groups::{fixed_points, inverse_letter, pair_apply, IsometryPair, Letter, MessGroup, Word};
use crate::lorentz::{busemann, distance, geodesic_point, AdSPoint, AmbientVector, BoundaryPoint, SpacelikeRay};
use crate::mat2::Mat2;
use crate::orbit::orbit_point;

/// Uniform length in `1..=max_len`, then uniform reduced letters.
pub fn random_reduced_word(rng: &mut ChaCha8Rng, num_letters: usize, max_len: usize) -> Word {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = rng.gen_range(0..num_letters) as Letter;
        if letters.last().is_some_and(|&p| inverse_letter(p) == l) {
            continue;
        }
        letters.push(l);
    }
    Word::from_letters(&letters)
}

/// A point of AdS³ near `J` drawn from a seeded pair of small isometries.
pub fn random_point_near_j(rng: &mut ChaCha8Rng, spread: f64) -> AdSPoint {
    let mut small = || {
        Mat2::boost(rng.gen_range(-spread..spread)) * Mat2::rotation(rng.gen_range(-spread..spread))
    };
    let pair = IsometryPair { g: small(), h: small() };
    orbit_point(&pair, &AdSPoint::j())
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossRatioRow {
    pub word: String,
    pub l1: f64,
    pub l2: f64,
    pub log_cross_ratio: f64,
    pub residual: f64,
}

type Big = FBig<HalfEven, 2>;

/// Working precision in bits for the cross-ratio identity.
const BIG_PRECISION: usize = 320;

fn big(x: f64) -> Big {
    Big::try_from(x).expect("finite").with_precision(BIG_PRECISION).value()
}

/// 2×2 matrix in extended precision.
#[derive(Clone)]
struct BigMat([Big; 4]);

impl BigMat {
    fn from(m: &Mat2) -> Self {
        BigMat([big(m.a), big(m.b), big(m.c), big(m.d)])
    }

    fn mul(&self, o: &BigMat) -> BigMat {
        let [a, b, c, d] = &self.0;
        let [e, f, g, h] = &o.0;
        BigMat([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    fn adj(&self) -> BigMat {
        let [a, b, c, d] = &self.0;
        BigMat([d.clone(), -b.clone(), -c.clone(), a.clone()])
    }

    fn transpose(&self) -> BigMat {
        let [a, b, c, d] = &self.0;
        BigMat([a.clone(), c.clone(), b.clone(), d.clone()])
    }

    fn trace(&self) -> Big {
        &self.0[0] + &self.0[3]
    }

    /// `−2 q(M, N) = Tr(adj(M) N)`; the factor cancels in cross-ratios.
    fn form2(&self, o: &BigMat) -> Big {
        self.adj().mul(o).trace()
    }

    /// Eigenvectors `(small, big)` of a hyperbolic matrix; eigenvalues by Newton from the f64 roots.
    fn eigen(&self) -> Option<([Big; 2], [Big; 2])> {
        let [a, b, c, d] = &self.0;
        let t = self.trace();
        let det = a * d - b * c;
        let (tf, df) = (t.to_f64().value(), det.to_f64().value());
        let disc = tf * tf - 4.0 * df;
        if !(disc > 0.0) {
            return None;
        }
        let big_f = if tf >= 0.0 { 0.5 * (tf + disc.sqrt()) } else { 0.5 * (tf - disc.sqrt()) };
        let refine = |x0: f64| {
            let mut x = big(x0);
            for _ in 0..6 {
                let f = &x * &x - &t * &x + &det;
                let fp = &x * big(2.0) - &t;
                x = &x - f / fp;
            }
            x
        };
        let lb = refine(big_f);
        let ls = refine(df / big_f);
        let vec = |l: &Big| {
            let v1 = [b.clone(), l - a];
            let v2 = [l - d, c.clone()];
            let n = |v: &[Big; 2]| v[0].to_f64().value().abs() + v[1].to_f64().value().abs();
            if n(&v1) >= n(&v2) { v1 } else { v2 }
        };
        Some((vec(&ls), vec(&lb)))
    }
}

fn big_outer(u: &[Big; 2], v: &[Big; 2]) -> BigMat {
    BigMat([&u[0] * &v[0], &u[0] * &v[1], &u[1] * &v[0], &u[1] * &v[1]])
}

fn big_word(rep: &crate::groups::FuchsianRep, w: &Word) -> BigMat {
    w.letters().iter().fold(BigMat::from(&Mat2::IDENTITY), |acc, &l| acc.mul(&BigMat::from(&rep.letter_matrix(l))))
}

fn big_length(m: &BigMat) -> Option<f64> {
    let t = m.trace().to_f64().value().abs();
    (t > 2.0).then(|| 2.0 * (0.5 * t).acosh())
}

/// `log[γ⁻, γ⁺, γξ, ξ]` and `(ℓ₁, ℓ₂)` with word products, fixed points and forms in extended precision.
///
/// The generators are taken as exact. `q(γ⁺, γξ)` is of size `e^{−ℓ}` against entries of size `‖g‖²‖h‖²`,
/// which f64 and double-double both lose.
pub fn log_cross_ratio_exact(group: &MessGroup, w: &Word, xi: &BoundaryPoint) -> Option<(f64, f64, f64)> {
    let g = big_word(group.rho1(), w);
    let h = big_word(group.rho2(), w);
    let (l1, l2) = (big_length(&g)?, big_length(&h)?);
    let (g_minus, g_plus) = g.eigen()?;
    let (ht_small, ht_big) = h.transpose().eigen()?;
    let plus = big_outer(&g_plus, &ht_small);
    let minus = big_outer(&g_minus, &ht_big);
    let x = BigMat::from(&xi.matrix().ok()?);
    let gx = g.mul(&x).mul(&h.adj());
    let num = minus.form2(&gx) * plus.form2(&x);
    let den = plus.form2(&gx) * minus.form2(&x);
    let sq = (num / den).to_f64().value();
    (sq > 0.0 && sq.is_finite()).then(|| (0.5 * sq.ln(), l1, l2))
}

/// `log[γ⁻, γ⁺, γξ, ξ]` against `(ℓ₁ + ℓ₂)/2` for random words and random sample points.
pub fn cross_ratio_length_check(
    group: &MessGroup,
    sample: &LimitSample,
    n: usize,
    max_len: usize,
    seed: u64,
) -> Vec<CrossRatioRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = group.alphabet();
    let base = group.base();
    let mut rows = Vec::with_capacity(n);
    let mut attempts = 0;
    while rows.len() < n && !sample.is_empty() && attempts < 100 * n.max(1) {
        attempts += 1;
        let w = random_reduced_word(&mut rng, alphabet.num_letters(), max_len);
        let Ok(fp) = fixed_points(&group.evaluate(&w), base) else { continue };
        let xi = &sample.points[rng.gen_range(0..sample.len())].0;
        if xi.ray_eq(&fp.attracting, 1e-8) || xi.ray_eq(&fp.repelling, 1e-8) {
            continue;
        }
        let Some((log_cr, l1, l2)) = log_cross_ratio_exact(group, &w, xi) else { continue };
        rows.push(CrossRatioRow {
            word: alphabet.format(&w),
            l1,
            l2,
            log_cross_ratio: log_cr,
            residual: (log_cr - 0.5 * (l1 + l2)).abs(),
        });
    }
    rows
}

/// The same quantity in plain f64, for comparison.
pub fn log_cross_ratio_f64(gamma: &IsometryPair, xi: &BoundaryPoint, base: &AdSPoint) -> Option<f64> {
    let fp = fixed_points(gamma, base).ok()?;
    let gxi = pair_apply(gamma, xi).ok()?;
    cross_ratio(&fp.repelling, &fp.attracting, &gxi, xi).ok().map(f64::ln)
}

/// Largest relative gap between the cross-ratio seen from `x` and from `x2` over random quadruples.
pub fn base_point_check(sample: &LimitSample, x: &AdSPoint, x2: &AdSPoint, n: usize, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..sample.len()).collect();
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut attempts = 0;
    while done < n && sample.len() >= 4 && attempts < 100 * n.max(1) {
        attempts += 1;
        let q: Vec<&BoundaryPoint> = idx.choose_multiple(&mut rng, 4).map(|&i| &sample.points[i].0).collect();
        let (Ok(c1), Ok(c2)) = (cross_ratio_at(x, q[0], q[1], q[2], q[3]), cross_ratio_at(x2, q[0], q[1], q[2], q[3]))
        else {
            continue;
        };
        worst = worst.max((c1 - c2).abs() / c1.abs().max(c2.abs()));
        done += 1;
    }
    (done, worst)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GromovLawReport {
    pub configurations: usize,
    /// Largest gap between `d_x²` and the cosh quotient.
    pub cosh_identity_max_err: f64,
    pub max_dist: f64,
    /// Largest `|d_x − 1|` for `x` on the geodesic `(ξη)`.
    pub on_geodesic_max_err: f64,
    pub on_geodesic_checked: usize,
}

/// Pairs closer than this under `d_x` are left out of the on-geodesic check; the point
/// `(e^t ξ + e^{−t} η)/√(−2q)` then has coordinates of size `1/d_x` and loses digits.
pub const ON_GEODESIC_MIN_DIST: f64 = 1e-2;

/// Cosh-quotient identity, the bound `d_x ≤ 1` and `d_x = 1` on `(ξη)` over random pairs of `sample`
/// seen from random points of `xs`.
///
/// `y` and `z` sit on the rays from `x` at distances `r_y` and `r_z`.
pub fn gromov_law_check(
    sample: &LimitSample,
    xs: &[AdSPoint],
    n: usize,
    r_y: f64,
    r_z: f64,
    seed: u64,
) -> GromovLawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = GromovLawReport { configurations: 0, cosh_identity_max_err: 0.0, max_dist: 0.0, on_geodesic_max_err: 0.0, on_geodesic_checked: 0 };
    let mut attempts = 0;
    while rep.configurations < n && sample.len() >= 2 && !xs.is_empty() && attempts < 100 * n.max(1) {
        attempts += 1;
        let i = rng.gen_range(0..sample.len());
        let j = rng.gen_range(0..sample.len());
        if i == j {
            continue;
        }
        let (xi, eta) = (&sample.points[i].0, &sample.points[j].0);
        let x = &xs[rng.gen_range(0..xs.len())];
        let Ok(d) = gromov_dist(x, xi, eta) else { continue };
        let (Ok(rxi), Ok(reta)) = (SpacelikeRay::new(x, xi), SpacelikeRay::new(x, eta)) else { continue };
        let y = geodesic_point(&rxi, r_y);
        let z = geodesic_point(&reta, r_z);
        let (dxy, dxz) = (distance(x, &y), distance(x, &z));
        let cosh_yz = -y.form(&z);
        let quotient = (cosh_yz - (dxy - dxz).cosh()) / (2.0 * dxy.sinh() * dxz.sinh());

        let q = xi.form(eta);
        let t: f64 = rng.gen_range(-1.0..1.0);
        let coords: Vec<f64> = xi
            .vector()
            .coords()
            .iter()
            .zip(eta.vector().coords())
            .map(|(a, b)| (t.exp() * a + (-t).exp() * b) / (-2.0 * q).sqrt())
            .collect();
        let on = AdSPoint::new(AmbientVector::new(&coords)).ok().and_then(|p| gromov_dist(&p, xi, eta).ok());

        rep.cosh_identity_max_err = rep.cosh_identity_max_err.max((d * d - quotient).abs());
        rep.max_dist = rep.max_dist.max(d);
        if d >= ON_GEODESIC_MIN_DIST {
            let Some(d_on) = on else { continue };
            rep.on_geodesic_max_err = rep.on_geodesic_max_err.max((d_on - 1.0).abs());
            rep.on_geodesic_checked += 1;
        }
        rep.configurations += 1;
    }
    rep
}

#[derive(Debug, Clone, Serialize)]
pub struct BusemannRow {
    pub word: String,
    pub n: i64,
    pub residual: f64,
}

/// `|(d(z,x) − d(z,y)) − β_{γ⁺}(x,y)|` at `z = γⁿ·o` for random short `γ` and `x, y` near `J`.
pub fn busemann_limit_check(group: &MessGroup, n_power: i64, count: usize, max_len: usize, seed: u64) -> Vec<BusemannRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = group.base();
    let mut rows = Vec::new();
    let mut attempts = 0;
    while rows.len() < count && attempts < 100 * count.max(1) {
        attempts += 1;
        let w = random_reduced_word(&mut rng, group.alphabet().num_letters(), max_len);
        let gamma = group.evaluate(&w);
        let Ok(fp) = fixed_points(&gamma, base) else { continue };
        let x = random_point_near_j(&mut rng, 0.5);
        let y = random_point_near_j(&mut rng, 0.5);
        let Ok(beta) = busemann(&fp.attracting, &x, &y) else { continue };
        let z = orbit_point(&gamma.powi(n_power), base);
        let diff = distance(&z, &x) - distance(&z, &y);
        if !diff.is_finite() {
            continue;
        }
        rows.push(BusemannRow { word: group.alphabet().format(&w), n: n_power, residual: (diff - beta).abs() });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_words_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let w = random_reduced_word(&mut rng, 8, 6);
            assert!(w.is_reduced() && (1..=6).contains(&w.len()));
        }
    }
}

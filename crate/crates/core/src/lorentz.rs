//! The ambient space R^{2,n} and Anti-de Sitter geometry on the quadric {q = -1}.
//!
//! The form is `q(u, v) = -u₀v₀ - u₁v₁ + u₂v₂ + ... + u_{n+1}v_{n+1}`. Points of
//! AdS^{n+1} are vectors with `q(v, v) = -1`; boundary points are null rays,
//! stored as unit-norm representatives whose sign is fixed against a reference
//! point. For n = 2 the bridge [`to_matrix`] / [`from_matrix`] identifies
//! R^{2,2} with M(2,R) carrying `q = -det`.

use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;
use thiserror::Error;

use crate::mat2::Mat2;

/// Tolerance for membership of the quadric and of the null cone.
pub const QUADRIC_TOL: f64 = 1e-9;
/// Half-width of the band around `q = -1` classified as lightlike.
pub const LIGHTLIKE_BAND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("ambient dimension must be n + 2 with n >= 2, got {0}")]
    BadDimension(usize),
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("vector is not on the quadric q = -1 (residual {0:e})")]
    NotOnQuadric(f64),
    #[error("vector is not null (residual {0:e})")]
    NotNull(f64),
    #[error("zero vector cannot represent a boundary point")]
    ZeroVector,
    #[error("boundary representative lies on the dual hyperplane of its reference point")]
    OnDualHyperplane,
    #[error("no spacelike ray from the base point to this boundary point")]
    NoSpacelikeRay,
    #[error("points are causally related or equal; no ray endpoint")]
    NoEndpoint,
    #[error("the SL(2,R) bridge requires n = 2, got n = {0}")]
    BridgeNeedsN2(usize),
    #[error("Busemann function undefined: a point lies on the dual hyperplane of the boundary point")]
    BusemannUndefined,
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// The signature-(2, n) quadratic space R^{n+2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticSpace {
    n: usize,
}

impl QuadraticSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeometryError::BadDimension(n + 2));
        }
        Ok(QuadraticSpace { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 2
    }

    /// Value of the form on the i-th basis vector.
    pub fn basis_sign(&self, i: usize) -> f64 {
        if i < 2 {
            -1.0
        } else {
            1.0
        }
    }

    /// The point `e₀ = (1, 0, ..., 0)`.
    pub fn origin(&self) -> AdSPoint {
        let mut v = AmbientVector::zeros(self.ambient_dim());
        v.0[0] = 1.0;
        AdSPoint { v }
    }
}

/// A vector of R^{2,n}.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientVector(SmallVec<[f64; 4]>);

impl AmbientVector {
    pub fn new(coords: &[f64]) -> Self {
        AmbientVector(SmallVec::from_slice(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        AmbientVector(SmallVec::from_elem(0.0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The `n` of R^{2,n}.
    pub fn n(&self) -> usize {
        self.dim().saturating_sub(2)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// The form without the dimension check; callers guarantee equal dimensions.
    pub fn form(&self, other: &AmbientVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let (u, v) = (&self.0, &other.0);
        let mut acc = -(u[0] * v[0]) - u[1] * v[1];
        for i in 2..u.len() {
            acc += u[i] * v[i];
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> AmbientVector {
        AmbientVector(self.0.iter().map(|x| x * s).collect())
    }

    fn zip_with(&self, other: &AmbientVector, f: impl Fn(f64, f64) -> f64) -> AmbientVector {
        AmbientVector(self.0.iter().zip(other.0.iter()).map(|(a, b)| f(*a, *b)).collect())
    }
}

impl Add for &AmbientVector {
    type Output = AmbientVector;
    fn add(self, o: &AmbientVector) -> AmbientVector {
        self.zip_with(o, |a, b| a + b)
    }
}

impl Sub for &AmbientVector {
    type Output = AmbientVector;
    fn sub(self, o: &AmbientVector) -> AmbientVector {
        self.zip_with(o, |a, b| a - b)
    }
}

impl Mul<f64> for &AmbientVector {
    type Output = AmbientVector;
    fn mul(self, s: f64) -> AmbientVector {
        self.scaled(s)
    }
}

impl Neg for &AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        self.scaled(-1.0)
    }
}

/// Symmetric bilinear form of signature (2, n).
pub fn bilinear_form(u: &AmbientVector, v: &AmbientVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(GeometryError::DimensionMismatch(u.dim(), v.dim()));
    }
    if u.dim() < 4 {
        return Err(GeometryError::BadDimension(u.dim()));
    }
    Ok(u.form(v))
}

/// The form in the matrix model: `-½ Tr(adj(M) N)`, which is `-Tr(M⁻¹N)/2` on SL(2,R).
pub fn matrix_form(m: &Mat2, n: &Mat2) -> f64 {
    // Tr(adj(M) N) = d·a' - b·c' - c·b' + a·d'
    -0.5 * (m.d * n.a - m.b * n.c - m.c * n.b + m.a * n.d)
}

/// Linear isometry R^{2,2} → M(2,R), `(x₁,x₂,x₃,x₄) ↦ [[x₁-x₃, -x₂+x₄], [x₂+x₄, x₁+x₃]]`.
pub fn to_matrix(v: &AmbientVector) -> Result<Mat2> {
    if v.dim() != 4 {
        return Err(GeometryError::BridgeNeedsN2(v.n()));
    }
    let x = v.coords();
    Ok(Mat2::new(x[0] - x[2], -x[1] + x[3], x[1] + x[3], x[0] + x[2]))
}

/// Inverse of [`to_matrix`].
pub fn from_matrix(m: &Mat2) -> AmbientVector {
    AmbientVector::new(&[
        0.5 * (m.a + m.d),
        0.5 * (m.c - m.b),
        0.5 * (m.d - m.a),
        0.5 * (m.b + m.c),
    ])
}

/// A point of AdS^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct AdSPoint {
    v: AmbientVector,
}

impl AdSPoint {
    /// Validates `|q(v,v) + 1| ≤ 1e-9 · max(1, |v|²)`.
    pub fn new(v: AmbientVector) -> Result<Self> {
        if v.dim() < 4 {
            return Err(GeometryError::BadDimension(v.dim()));
        }
        if !v.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let residual = (v.form(&v) + 1.0).abs();
        if residual > QUADRIC_TOL * v.norm().powi(2).max(1.0) {
            return Err(GeometryError::NotOnQuadric(residual));
        }
        Ok(AdSPoint { v })
    }

    /// SL(2,R) matrix as a point of AdS³.
    pub fn from_matrix(m: &Mat2) -> Result<Self> {
        AdSPoint::new(from_matrix(m))
    }

    pub(crate) fn from_vector_unchecked(v: AmbientVector) -> Self {
        AdSPoint { v }
    }

    /// The point `J ↔ (0, -1, 0, 0)`.
    pub fn j() -> Self {
        AdSPoint { v: from_matrix(&Mat2::J) }
    }

    pub fn vector(&self) -> &AmbientVector {
        &self.v
    }

    pub fn matrix(&self) -> Result<Mat2> {
        to_matrix(&self.v)
    }

    pub fn quadric_residual(&self) -> f64 {
        (self.v.form(&self.v) + 1.0).abs()
    }

    /// `|q(v,v) + 1| / max(1, |v|²)`, the quantity bounded at construction.
    pub fn relative_quadric_residual(&self) -> f64 {
        self.quadric_residual() / self.v.norm().powi(2).max(1.0)
    }

    pub fn form(&self, other: &AdSPoint) -> f64 {
        self.v.form(&other.v)
    }
}

/// A point of ∂AdS^{n+1}: a null ray, represented by a unit vector `v` with `q(v, ref) < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    v: AmbientVector,
    reference: AdSPoint,
}

impl BoundaryPoint {
    /// Normalizes any nonzero null representative against `reference`.
    pub fn new(v: AmbientVector, reference: &AdSPoint) -> Result<Self> {
        if v.dim() != reference.v.dim() {
            return Err(GeometryError::DimensionMismatch(v.dim(), reference.v.dim()));
        }
        if !v.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(GeometryError::ZeroVector);
        }
        let mut u = v.scaled(1.0 / norm);
        let residual = u.form(&u).abs();
        if residual > QUADRIC_TOL {
            return Err(GeometryError::NotNull(residual));
        }
        let side = u.form(&reference.v);
        if side == 0.0 || !side.is_finite() {
            return Err(GeometryError::OnDualHyperplane);
        }
        if side > 0.0 {
            u = -&u;
        }
        Ok(BoundaryPoint { v: u, reference: reference.clone() })
    }

    /// Rank-one matrix as a boundary point of AdS³.
    pub fn from_matrix(m: &Mat2, reference: &AdSPoint) -> Result<Self> {
        BoundaryPoint::new(from_matrix(m), reference)
    }

    pub fn vector(&self) -> &AmbientVector {
        &self.v
    }

    pub fn reference(&self) -> &AdSPoint {
        &self.reference
    }

    pub fn matrix(&self) -> Result<Mat2> {
        to_matrix(&self.v)
    }

    /// Same normalization anchored at a different reference point.
    pub fn renormalized(&self, reference: &AdSPoint) -> Result<Self> {
        BoundaryPoint::new(self.v.clone(), reference)
    }

    pub fn form(&self, other: &BoundaryPoint) -> f64 {
        self.v.form(&other.v)
    }

    pub fn form_point(&self, x: &AdSPoint) -> f64 {
        self.v.form(&x.v)
    }

    /// Equality as rays, up to sign, within `tol` in the Euclidean norm.
    pub fn ray_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        let (mut plus, mut minus) = (0.0f64, 0.0f64);
        for (a, b) in self.v.coords().iter().zip(other.v.coords()) {
            plus += (a - b) * (a - b);
            minus += (a + b) * (a + b);
        }
        plus.min(minus).sqrt() <= tol
    }
}

/// Causal type of the geodesic joining two points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalClass {
    Spacelike,
    Lightlike,
    Timelike,
    /// `q(x, y) > 1`: no geodesic joins the two points in the double cover.
    Unjoined,
}

/// Classifies from the value `q(x, y)` of two points of the quadric.
pub fn classify_form(q: f64) -> CausalClass {
    if q < -1.0 - LIGHTLIKE_BAND {
        CausalClass::Spacelike
    } else if q <= -1.0 + LIGHTLIKE_BAND {
        CausalClass::Lightlike
    } else if q <= 1.0 {
        CausalClass::Timelike
    } else {
        CausalClass::Unjoined
    }
}

/// Lorentzian distance from the value `q(x, y)`: `Argcosh|q|` when spacelike, else 0.
pub fn distance_from_form(q: f64) -> f64 {
    match classify_form(q) {
        CausalClass::Spacelike => (-q).acosh(),
        _ => 0.0,
    }
}

pub fn classify_and_distance(x: &AdSPoint, y: &AdSPoint) -> (CausalClass, f64) {
    let q = x.form(y);
    (classify_form(q), distance_from_form(q))
}

pub fn distance(x: &AdSPoint, y: &AdSPoint) -> f64 {
    distance_from_form(x.form(y))
}

/// Spacelike half-geodesic `[x ξ)`, parametrized by `f(s) = cosh(s)·x + sinh(s)·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacelikeRay {
    base: AdSPoint,
    endpoint: BoundaryPoint,
    unitdir: AmbientVector,
}

impl SpacelikeRay {
    pub fn new(base: &AdSPoint, endpoint: &BoundaryPoint) -> Result<Self> {
        let q = endpoint.form_point(base);
        if !(q < 0.0) {
            return Err(GeometryError::NoSpacelikeRay);
        }
        // u = ξ/|q(x,ξ)| - x, so that q(u,u) = 1 and q(u,x) = 0
        let unitdir = &endpoint.vector().scaled(1.0 / q.abs()) - base.vector();
        Ok(SpacelikeRay { base: base.clone(), endpoint: endpoint.clone(), unitdir })
    }

    pub fn base(&self) -> &AdSPoint {
        &self.base
    }

    pub fn endpoint(&self) -> &BoundaryPoint {
        &self.endpoint
    }

    pub fn unitdir(&self) -> &AmbientVector {
        &self.unitdir
    }
}

pub fn geodesic_point(ray: &SpacelikeRay, s: f64) -> AdSPoint {
    let v = &ray.base.v.scaled(s.cosh()) + &ray.unitdir.scaled(s.sinh());
    AdSPoint::from_vector_unchecked(v)
}

/// Endpoint on the y-side of the spacelike geodesic through `o` and `y`.
pub fn ray_endpoint(o: &AdSPoint, y: &AdSPoint) -> Result<BoundaryPoint> {
    let q = o.form(y);
    if classify_form(q) != CausalClass::Spacelike {
        return Err(GeometryError::NoEndpoint);
    }
    let c = -q;
    let s = (c * c - 1.0).sqrt();
    // v = (y - cosh(d)·o)/sinh(d); the endpoint ray is o + v
    let v = &(y.vector() - &o.vector().scaled(c)).scaled(1.0 / s) + o.vector();
    BoundaryPoint::new(v, o)
}

/// `β_ξ(x, y) = ln(q(ξ, x) / q(ξ, y))`.
pub fn busemann(xi: &BoundaryPoint, x: &AdSPoint, y: &AdSPoint) -> Result<f64> {
    let a = xi.form_point(x);
    let b = xi.form_point(y);
    if a == 0.0 || b == 0.0 || (a < 0.0) != (b < 0.0) {
        return Err(GeometryError::BusemannUndefined);
    }
    Ok((a / b).ln())
}

/// `min_{s ≥ 0} d(f(s), y)` for the ray `f`, using `q(f(s), y) = A eˢ + B e⁻ˢ`.
pub fn point_to_ray_distance(y: &AdSPoint, ray: &SpacelikeRay) -> f64 {
    let qo = ray.base.v.form(&y.v);
    let qu = ray.unitdir.form(&y.v);
    half_ray_min_distance(0.5 * (qo + qu), 0.5 * (qo - qu))
}

/// Minimum over `s ≥ 0` of the Lorentzian distance encoded by `g(s) = A eˢ + B e⁻ˢ`.
///
/// The distance is zero as soon as `g` reaches `-1` on the half-line; otherwise
/// it is `Argcosh(-sup g)`.
pub fn half_ray_min_distance(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        // g is unbounded above or tends to 0 from either side
        return 0.0;
    }
    let sup = if b < 0.0 {
        let s_star = 0.5 * (b / a).ln();
        if s_star > 0.0 {
            -2.0 * (a * b).sqrt()
        } else {
            a + b
        }
    } else {
        // A < 0 ≤ B: g is decreasing
        a + b
    };
    distance_from_form(sup)
}

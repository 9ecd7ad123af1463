//! Convex bodies described by support-function and gauge oracles.
//!
//! A body K in R^n enters every algorithm through two dual scalar fields:
//! the support function h_K(u) = sup_{x in K} <x, u> and, when the origin is
//! interior, the gauge g_K(x) = inf { r > 0 : x in r K }. They satisfy
//! g_K = h_{K°} where K° is the polar body, and both are positively
//! 1-homogeneous, so gradients are 0-homogeneous and Euler's identity
//! <grad h(u), u> = h(u) holds wherever the gradient exists.
//!
//! Variants either carry closed forms (ellipsoids, p-balls), are resolved by
//! exact finite programs (polytopes, via a small LP over the polar halfspace
//! form), or fall back to an iterative separation-ratio ascent (Minkowski
//! sums, smoothed polytopes): g(x) = max_u <x, u>/h(u), whose superlevel
//! sets are convex cones, so a projected ascent from x/|x| finds the global
//! maximum. Affine wrappers (dilation, translation, invertible linear image,
//! polar) chain through the rules
//!     h_{cK} = c h_K,  h_{K+v} = h_K + <v, .>,  h_{AK}(u) = h_K(A^T u),
//!     h_{K°} = g_K.

mod oracles;
pub mod metrics;
mod serde_spec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

pub use metrics::VolumeEstimate;

/// A convex body with the origin-centred oracle suite.
///
/// Construct through the checked constructors (`ellipsoid`, `pball`,
/// `polytope`, ...) or by deserializing a JSON body description; both
/// validate shape data (positive definiteness, exponent ranges, invertible
/// maps) up front so the oracles can assume it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_spec::BodySpec", into = "serde_spec::BodySpec")]
pub enum ConvexBody {
    /// { x : x^T Q^{-1} x <= 1 } for symmetric positive definite Q, so that
    /// h(u) = sqrt(u^T Q u). The inverse is precomputed at construction.
    Ellipsoid {
        q: DMatrix<f64>,
        q_inv: DMatrix<f64>,
    },
    /// { x : sum |x_i / r_i|^p <= 1 } with p in (1, infinity) and positive
    /// semiaxes r. The support function is the weighted dual-exponent norm
    /// h(u) = (sum (r_i |u_i|)^q)^{1/q}, 1/p + 1/q = 1. Exponents below 2
    /// arise as polars of p >= 2 balls and are fully supported.
    PBall { p: f64, radii: DVector<f64> },
    /// conv(vertices). With `smoothing = Some(s)` the support function is
    /// replaced by the smooth upper approximation
    /// (sum_j max(<v_j, u>, 0)^s)^{1/s}, a valid support function of a body
    /// wedged between K and J^{1/s} K (J = vertex count); it needs the
    /// origin strictly inside conv(vertices).
    Polytope {
        vertices: Vec<DVector<f64>>,
        smoothing: Option<f64>,
    },
    /// Minkowski sum A + B.
    Sum(Box<ConvexBody>, Box<ConvexBody>),
    /// c K for c > 0.
    Dilate { factor: f64, inner: Box<ConvexBody> },
    /// K + offset.
    Translate {
        offset: DVector<f64>,
        inner: Box<ConvexBody>,
    },
    /// A K for an invertible matrix A. The inverse is precomputed.
    Linear {
        map: DMatrix<f64>,
        inv: DMatrix<f64>,
        inner: Box<ConvexBody>,
    },
    /// K°, exposed through the duality h_{K°} = g_K, g_{K°} = h_K. Only
    /// constructed for bodies with the origin interior.
    Polar(Box<ConvexBody>),
}

impl ConvexBody {
    // ----- constructors ---------------------------------------------------

    /// Ellipsoid with shape matrix `q` (symmetric positive definite).
    pub fn ellipsoid(q: DMatrix<f64>) -> Result<Self, GeometryError> {
        if !q.is_square() {
            return Err(GeometryError::InvalidBody("ellipsoid matrix must be square".into()));
        }
        let n = q.nrows();
        if n == 0 {
            return Err(GeometryError::InvalidBody("ellipsoid needs dimension >= 1".into()));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-10 * (1.0 + q.amax()) {
            return Err(GeometryError::InvalidBody(format!(
                "ellipsoid matrix not symmetric (asymmetry {asym:.3e})"
            )));
        }
        let q_sym = (&q + q.transpose()) * 0.5;
        let chol = q_sym.clone().cholesky().ok_or_else(|| {
            GeometryError::InvalidBody("ellipsoid matrix not positive definite".into())
        })?;
        let q_inv = chol.inverse();
        Ok(ConvexBody::Ellipsoid { q: q_sym, q_inv })
    }

    /// Euclidean ball of radius `r` in dimension `n`.
    pub fn ball(n: usize, r: f64) -> Self {
        ConvexBody::pball(2.0, DVector::from_element(n, r)).expect("ball parameters are valid")
    }

    /// Weighted p-ball; `p` must exceed 1 and the semiaxes must be positive.
    pub fn pball(p: f64, radii: DVector<f64>) -> Result<Self, GeometryError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(GeometryError::InvalidBody(format!(
                "p-ball exponent must lie in (1, inf), got {p}"
            )));
        }
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(GeometryError::InvalidBody("p-ball semiaxes must be positive".into()));
        }
        Ok(ConvexBody::PBall { p, radii })
    }

    /// Polytope as the convex hull of `vertices` (at least one, equal dims).
    pub fn polytope(vertices: Vec<DVector<f64>>) -> Result<Self, GeometryError> {
        Self::polytope_impl(vertices, None)
    }

    /// Polytope with the smooth support approximation of exponent `s >= 2`.
    /// Requires the origin strictly inside the hull.
    pub fn polytope_smoothed(
        vertices: Vec<DVector<f64>>,
        s: f64,
    ) -> Result<Self, GeometryError> {
        if !(s >= 2.0) || !s.is_finite() {
            return Err(GeometryError::InvalidBody(format!(
                "smoothing exponent must be >= 2, got {s}"
            )));
        }
        let body = Self::polytope_impl(vertices, Some(s))?;
        if body.origin_interior_margin(256) <= 0.0 {
            return Err(GeometryError::OriginNotInterior);
        }
        Ok(body)
    }

    fn polytope_impl(
        vertices: Vec<DVector<f64>>,
        smoothing: Option<f64>,
    ) -> Result<Self, GeometryError> {
        if vertices.is_empty() {
            return Err(GeometryError::InvalidBody("polytope needs at least one vertex".into()));
        }
        let n = vertices[0].len();
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return Err(GeometryError::InvalidBody(
                "polytope vertices must share a positive dimension".into(),
            ));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(GeometryError::InvalidBody("polytope vertices must be finite".into()));
        }
        Ok(ConvexBody::Polytope { vertices, smoothing })
    }

    /// Axis-aligned cube [-half, half]^n as a polytope.
    pub fn cube(n: usize, half: f64) -> Self {
        assert!(n >= 1 && n <= 20, "cube vertex count is 2^n");
        let mut vertices = Vec::with_capacity(1 << n);
        for mask in 0u32..(1 << n) {
            let v = DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { half } else { -half });
            vertices.push(v);
        }
        ConvexBody::polytope(vertices).expect("cube vertices are valid")
    }

    /// Cross-polytope conv{ +-r e_i }.
    pub fn cross_polytope(n: usize, r: f64) -> Self {
        let mut vertices = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = r;
            vertices.push(v.clone());
            v[i] = -r;
            vertices.push(v);
        }
        ConvexBody::polytope(vertices).expect("cross-polytope vertices are valid")
    }

    /// Regular simplex in R^n with circumradius `r`, centred at the origin.
    pub fn regular_simplex(n: usize, r: f64) -> Self {
        // n+1 unit vectors with pairwise dot -1/n: embed the standard
        // simplex of R^{n+1} and drop the mean direction.
        let mut raw: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut e = DVector::zeros(n + 1);
            e[i] = 1.0;
            raw.push(e);
        }
        let mean = crate::linalg::mean_vector(&raw);
        let centered: Vec<DVector<f64>> = raw.iter().map(|v| v - &mean).collect();
        // Orthonormal basis of the span via Gram-Schmidt.
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for v in &centered {
            let mut w = v.clone();
            for b in &basis {
                let c = b.dot(&w);
                w -= b * c;
            }
            if w.norm() > 1e-9 {
                basis.push(w.normalize());
            }
        }
        assert_eq!(basis.len(), n);
        let vertices: Vec<DVector<f64>> = centered
            .iter()
            .map(|v| {
                let coords = DVector::from_fn(n, |i, _| basis[i].dot(v));
                let norm = coords.norm();
                coords * (r / norm)
            })
            .collect();
        ConvexBody::polytope(vertices).expect("simplex vertices are valid")
    }

    /// Minkowski sum of two bodies of equal dimension.
    pub fn sum(a: ConvexBody, b: ConvexBody) -> Result<Self, GeometryError> {
        if a.dim() != b.dim() {
            return Err(GeometryError::DimensionMismatch { body: a.dim(), arg: b.dim() });
        }
        Ok(ConvexBody::Sum(Box::new(a), Box::new(b)))
    }

    /// c K for c > 0.
    pub fn dilate(self, factor: f64) -> Result<Self, GeometryError> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(GeometryError::InvalidBody(format!(
                "dilation factor must be positive, got {factor}"
            )));
        }
        Ok(ConvexBody::Dilate { factor, inner: Box::new(self) })
    }

    /// K + offset.
    pub fn translate(self, offset: DVector<f64>) -> Result<Self, GeometryError> {
        if offset.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { body: self.dim(), arg: offset.len() });
        }
        Ok(ConvexBody::Translate { offset, inner: Box::new(self) })
    }

    /// A K for an invertible square matrix A.
    pub fn linear_image(self, map: DMatrix<f64>) -> Result<Self, GeometryError> {
        if !map.is_square() || map.nrows() != self.dim() {
            return Err(GeometryError::DimensionMismatch { body: self.dim(), arg: map.nrows() });
        }
        let inv = map
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::InvalidBody("linear map is singular".into()))?;
        // Reject nearly singular maps: the gauge of the image divides by
        // the smallest singular value.
        let cond_probe = map.amax() * inv.amax();
        if !cond_probe.is_finite() || cond_probe > 1e12 {
            return Err(GeometryError::InvalidBody(format!(
                "linear map is ill conditioned (|A||A^-1| ~ {cond_probe:.2e})"
            )));
        }
        Ok(ConvexBody::Linear { map, inv, inner: Box::new(self) })
    }

    /// The polar body K° = { y : <x, y> <= 1 for all x in K }.
    ///
    /// Closed forms: balls and ellipsoids invert their quadratic form,
    /// weighted p-balls swap to the dual exponent with reciprocal semiaxes,
    /// dilations and linear images dualize factor-wise. Everything else is
    /// wrapped in the `Polar` variant whose oracles swap gauge and support.
    /// Errors if the origin is not interior (the polar would be unbounded).
    pub fn polar(&self) -> Result<ConvexBody, GeometryError> {
        match self {
            ConvexBody::Ellipsoid { q, q_inv } => {
                Ok(ConvexBody::Ellipsoid { q: q_inv.clone(), q_inv: q.clone() })
            }
            ConvexBody::PBall { p, radii } => {
                let qexp = p / (p - 1.0);
                let inv_radii = radii.map(|r| 1.0 / r);
                ConvexBody::pball(qexp, inv_radii)
            }
            ConvexBody::Dilate { factor, inner } => inner.polar()?.dilate(1.0 / factor),
            ConvexBody::Linear { map, inv, inner } => Ok(ConvexBody::Linear {
                map: inv.transpose(),
                inv: map.transpose(),
                inner: Box::new(inner.polar()?),
            }),
            ConvexBody::Polar(inner) => Ok((**inner).clone()),
            other => {
                if other.origin_interior_margin(256) <= 1e-12 {
                    return Err(GeometryError::OriginNotInterior);
                }
                Ok(ConvexBody::Polar(Box::new(other.clone())))
            }
        }
    }

    // ----- basic queries --------------------------------------------------

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ellipsoid { q, .. } => q.nrows(),
            ConvexBody::PBall { radii, .. } => radii.len(),
            ConvexBody::Polytope { vertices, .. } => vertices[0].len(),
            ConvexBody::Sum(a, _) => a.dim(),
            ConvexBody::Dilate { inner, .. } => inner.dim(),
            ConvexBody::Translate { inner, .. } => inner.dim(),
            ConvexBody::Linear { inner, .. } => inner.dim(),
            ConvexBody::Polar(inner) => inner.dim(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            ConvexBody::Ellipsoid { .. } => "ellipsoid",
            ConvexBody::PBall { .. } => "pball",
            ConvexBody::Polytope { smoothing: None, .. } => "polytope",
            ConvexBody::Polytope { smoothing: Some(_), .. } => "polytope(smoothed)",
            ConvexBody::Sum(..) => "sum",
            ConvexBody::Dilate { .. } => "dilate",
            ConvexBody::Translate { .. } => "translate",
            ConvexBody::Linear { .. } => "linear",
            ConvexBody::Polar(..) => "polar",
        }
    }

    /// Minimum of h over a probe grid; positive iff the origin is interior
    /// (up to grid resolution). Used to validate polars and solver inputs.
    pub fn origin_interior_margin(&self, grid: usize) -> f64 {
        let dirs = crate::linalg::direction_grid(self.dim(), grid, 0x5eed);
        let mut dirs = dirs;
        // A translate can push the origin out in one specific direction;
        // probe it explicitly.
        if let ConvexBody::Translate { offset, .. } = self {
            if offset.norm() > 0.0 {
                dirs.push(-offset.normalize());
            }
        }
        dirs.iter().map(|u| self.support(u)).fold(f64::INFINITY, f64::min)
    }

    /// Membership x in K up to `tol` on the gauge.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.gauge(x)? <= 1.0 + tol)
    }
}

/// The Lagrangian product K x T in phase space R^{2n}: K lives in the
/// position coordinates q, T in the momentum coordinates p.
///
/// Its support function splits additively, h(u_q, u_p) = h_K(u_q) +
/// h_T(u_p), while the gauge is the max of the factors, g(q, p) =
/// max(g_K(q), g_T(p)). Both factors must share the dimension n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_spec::ProductSpec", into = "serde_spec::ProductSpec")]
pub struct LagrangianProduct {
    k: ConvexBody,
    t: ConvexBody,
}

impl LagrangianProduct {
    pub fn new(k: ConvexBody, t: ConvexBody) -> Result<Self, GeometryError> {
        if k.dim() != t.dim() {
            return Err(GeometryError::DimensionMismatch { body: k.dim(), arg: t.dim() });
        }
        Ok(LagrangianProduct { k, t })
    }

    /// Position factor K.
    pub fn k(&self) -> &ConvexBody {
        &self.k
    }

    /// Momentum factor T.
    pub fn t(&self) -> &ConvexBody {
        &self.t
    }

    /// Half-dimension n (each factor's ambient dimension).
    pub fn half_dim(&self) -> usize {
        self.k.dim()
    }

    /// Phase-space dimension 2n.
    pub fn dim(&self) -> usize {
        2 * self.k.dim()
    }

    pub fn support(&self, u: &DVector<f64>) -> f64 {
        let n = self.half_dim();
        assert_eq!(u.len(), 2 * n, "product support direction dimension mismatch");
        let uq = u.rows(0, n).into_owned();
        let up = u.rows(n, n).into_owned();
        self.k.support(&uq) + self.t.support(&up)
    }

    /// Concatenated factor subgradients. Each factor contributes its own
    /// zero-direction failure only if its block of `u` is zero; the other
    /// block then has a genuinely multivalued subdifferential, and we return
    /// the center 0 of the factor body as the representative.
    pub fn support_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let n = self.half_dim();
        assert_eq!(u.len(), 2 * n, "product support direction dimension mismatch");
        let uq = u.rows(0, n).into_owned();
        let up = u.rows(n, n).into_owned();
        if uq.norm() == 0.0 && up.norm() == 0.0 {
            return Err(GeometryError::ZeroDirection);
        }
        let gq = if uq.norm() == 0.0 { DVector::zeros(n) } else { self.k.support_grad(&uq)? };
        let gp = if up.norm() == 0.0 { DVector::zeros(n) } else { self.t.support_grad(&up)? };
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&gq);
        out.rows_mut(n, n).copy_from(&gp);
        Ok(out)
    }

    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        let n = self.half_dim();
        assert_eq!(x.len(), 2 * n, "product gauge point dimension mismatch");
        let xq = x.rows(0, n).into_owned();
        let xp = x.rows(n, n).into_owned();
        Ok(self.k.gauge(&xq)?.max(self.t.gauge(&xp)?))
    }
}

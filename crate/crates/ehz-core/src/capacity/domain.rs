//! What the capacity solver needs from a body: support values, support
//! subgradients, and distances to the subdifferential of h^2 for the
//! multiplier certificate.

use nalgebra::DVector;

use crate::bodies::{ConvexBody, LagrangianProduct};
use crate::error::GeometryError;
use crate::linalg::project_to_hull;

/// Relative activity band for polytope subdifferentials: vertices whose
/// product <v_j, u> comes within this fraction of the max are treated as
/// active, so the subdifferential near a kink is the hull of the nearby
/// face rather than a single vertex.
const ACTIVE_REL: f64 = 1e-5;

/// Domain of the dual-action functional. `ConvexBody` treats the whole
/// phase-space body as Sigma; `LagrangianProduct` is the K x T case with
/// the factor-split subdifferential.
pub trait ConvexDomain {
    fn dim(&self) -> usize;

    fn support(&self, u: &DVector<f64>) -> f64;

    /// Representative subgradient of h at u (u = 0 rejected).
    fn support_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, GeometryError>;

    /// Gauge of the domain: 1 exactly on the boundary. Used by the
    /// characteristic layer to audit that reconstructed curves stay on
    /// the level set.
    fn gauge(&self, x: &DVector<f64>) -> Result<f64, GeometryError>;

    /// Representative (sub)gradient of the gauge at x, an outward normal
    /// direction of the level set through x.
    fn gauge_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError>;

    /// Projection of `y` onto the subdifferential of h^2 at `v`, which is
    /// the set 2 h(v) * (subgradients of h at v), together with the
    /// distance. `zero_band` is the absolute speed below which a factor
    /// direction counts as zero and the factor subdifferential relaxes to
    /// the whole factor body (only meaningful for products; for a single
    /// body, h^2 is differentiable at 0 with gradient 0).
    fn subdiff_project(
        &self,
        v: &DVector<f64>,
        y: &DVector<f64>,
        zero_band: f64,
    ) -> Result<(DVector<f64>, f64), GeometryError>;

    /// Smallest support value over a direction grid; positive iff the
    /// origin is interior at grid resolution.
    fn origin_margin(&self, grid: usize) -> f64 {
        crate::linalg::direction_grid(self.dim(), grid, 0x5eed)
            .iter()
            .map(|u| self.support(u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether minimizers are expected to ride kinks of h (products always
    /// do: the optimal loop parks one factor's speed at 0 on whole arcs).
    /// When true, the solver anneals through the smoothed surrogate below
    /// before polishing on the exact functional.
    fn needs_smoothing(&self) -> bool {
        false
    }

    /// Value of an eps-smoothed C^1 surrogate of h. The surrogate must
    /// converge to h uniformly as eps -> 0 and stay within O(eps) of it.
    /// Default: h itself (already smooth where it matters).
    fn smoothed_support(&self, u: &DVector<f64>, _eps: f64) -> f64 {
        self.support(u)
    }

    /// Value and gradient of the surrogate; must be total (no error at
    /// u = 0, where the surrogate is flat or rounded).
    fn smoothed_support_grad(
        &self,
        u: &DVector<f64>,
        _eps: f64,
    ) -> Result<(f64, DVector<f64>), GeometryError> {
        Ok((self.support(u), self.support_grad(u)?))
    }
}

/// Softmax upper bound on a polytope support at temperature tau:
/// tau * ln sum_j exp(<u, x_j> / tau), within tau * ln(m) of the max and
/// smooth in u. Max-factored against overflow.
fn lse_support_grad(
    vertices: &[DVector<f64>],
    u: &DVector<f64>,
    tau: f64,
) -> (f64, DVector<f64>) {
    let dots: Vec<f64> = vertices.iter().map(|x| x.dot(u)).collect();
    let top = dots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut mass = 0.0;
    let mut grad = DVector::zeros(u.len());
    for (x, &d) in vertices.iter().zip(&dots) {
        let e = ((d - top) / tau).exp();
        mass += e;
        grad.axpy(e, x, 1.0);
    }
    (top + tau * mass.ln(), grad / mass)
}

/// Recursive eps-smoothed support of a body: hard polytope nodes become
/// softmax, every other variant keeps its exact oracle. Returns a total
/// (value, gradient) pair; at the cone tip of an exact variant the
/// gradient is reported as 0, which downstream weights always annihilate.
fn body_smoothed_support_grad(
    body: &ConvexBody,
    u: &DVector<f64>,
    eps: f64,
) -> (f64, DVector<f64>) {
    match body {
        ConvexBody::Polytope { vertices, smoothing: None } if eps > 0.0 => {
            let tau = eps / (vertices.len() as f64 + 1.0).ln();
            lse_support_grad(vertices, u, tau)
        }
        ConvexBody::Sum(a, b) => {
            let (ha, ga) = body_smoothed_support_grad(a, u, eps);
            let (hb, gb) = body_smoothed_support_grad(b, u, eps);
            (ha + hb, ga + gb)
        }
        ConvexBody::Dilate { factor, inner } => {
            let (h, g) = body_smoothed_support_grad(inner, u, eps / factor);
            (factor * h, g * *factor)
        }
        ConvexBody::Translate { offset, inner } => {
            let (h, g) = body_smoothed_support_grad(inner, u, eps);
            (h + offset.dot(u), g + offset)
        }
        ConvexBody::Linear { map, inner, .. } => {
            let ut = map.transpose() * u;
            let (h, g) = body_smoothed_support_grad(inner, &ut, eps);
            (h, map * g)
        }
        _ => {
            let h = body.support(u);
            match body.support_grad(u) {
                Ok(g) => (h, g),
                Err(_) => (h, DVector::zeros(u.len())),
            }
        }
    }
}

fn body_smoothed_support(body: &ConvexBody, u: &DVector<f64>, eps: f64) -> f64 {
    match body {
        ConvexBody::Polytope { vertices, smoothing: None } if eps > 0.0 => {
            let tau = eps / (vertices.len() as f64 + 1.0).ln();
            let dots = vertices.iter().map(|x| x.dot(u));
            let top = dots.clone().fold(f64::NEG_INFINITY, f64::max);
            let mass: f64 = dots.map(|d| ((d - top) / tau).exp()).sum();
            top + tau * mass.ln()
        }
        ConvexBody::Sum(a, b) => {
            body_smoothed_support(a, u, eps) + body_smoothed_support(b, u, eps)
        }
        ConvexBody::Dilate { factor, inner } => {
            factor * body_smoothed_support(inner, u, eps / factor)
        }
        ConvexBody::Translate { offset, inner } => {
            body_smoothed_support(inner, u, eps) + offset.dot(u)
        }
        ConvexBody::Linear { map, inner, .. } => {
            body_smoothed_support(inner, &(map.transpose() * u), eps)
        }
        _ => body.support(u),
    }
}

fn body_has_hard_polytope(body: &ConvexBody) -> bool {
    match body {
        ConvexBody::Polytope { smoothing: None, .. } => true,
        ConvexBody::Sum(a, b) => body_has_hard_polytope(a) || body_has_hard_polytope(b),
        ConvexBody::Dilate { inner, .. }
        | ConvexBody::Translate { inner, .. }
        | ConvexBody::Linear { inner, .. } => body_has_hard_polytope(inner),
        ConvexBody::Polar(inner) => body_has_hard_polytope(inner),
        _ => false,
    }
}

/// Distance and projection onto c * (subdifferential of h_body at v),
/// where the body is a factor or the whole domain and c > 0 carries the
/// chain factor 2 h(v_full) of the squared support.
fn scaled_subdiff_project(
    body: &ConvexBody,
    v: &DVector<f64>,
    y: &DVector<f64>,
    c: f64,
) -> Result<(DVector<f64>, f64), GeometryError> {
    if let ConvexBody::Polytope { vertices, smoothing: None } = body {
        let h = body.support(v);
        let vscale = v.norm();
        let band = ACTIVE_REL * h.abs().max(vscale);
        let active: Vec<DVector<f64>> = vertices
            .iter()
            .filter(|vert| vert.dot(v) >= h - band)
            .map(|vert| vert * c)
            .collect();
        Ok(project_to_hull(y, &active, 200))
    } else {
        let p = body.support_grad(v)? * c;
        let d = (y - &p).norm();
        Ok((p, d))
    }
}

/// Projection of `y` onto c * body, used when a factor speed sits in the
/// zero band and the factor subdifferential is the entire factor body.
/// Polytopes project exactly onto the vertex hull; for other variants the
/// ray point y / gauge is used, an upper bound within a factor 2 of the
/// true distance, which is conservative for a residual.
fn scaled_body_project(
    body: &ConvexBody,
    y: &DVector<f64>,
    c: f64,
) -> Result<(DVector<f64>, f64), GeometryError> {
    if let ConvexBody::Polytope { vertices, smoothing: None } = body {
        let scaled: Vec<DVector<f64>> = vertices.iter().map(|v| v * c).collect();
        return Ok(project_to_hull(y, &scaled, 200));
    }
    if y.norm() == 0.0 {
        return Ok((y.clone(), 0.0));
    }
    let gamma = body.gauge(y)? / c;
    if gamma <= 1.0 {
        Ok((y.clone(), 0.0))
    } else {
        let p = y / gamma;
        let d = (y - &p).norm();
        Ok((p, d))
    }
}

impl ConvexDomain for ConvexBody {
    fn dim(&self) -> usize {
        ConvexBody::dim(self)
    }

    fn support(&self, u: &DVector<f64>) -> f64 {
        ConvexBody::support(self, u)
    }

    fn support_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        ConvexBody::support_grad(self, u)
    }

    fn gauge(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        ConvexBody::gauge(self, x)
    }

    fn gauge_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        ConvexBody::gauge_grad(self, x)
    }

    fn subdiff_project(
        &self,
        v: &DVector<f64>,
        y: &DVector<f64>,
        zero_band: f64,
    ) -> Result<(DVector<f64>, f64), GeometryError> {
        if v.norm() <= zero_band {
            // h^2 has derivative 0 at the origin regardless of kinks in h.
            return Ok((DVector::zeros(y.len()), y.norm()));
        }
        let c = 2.0 * ConvexBody::support(self, v);
        scaled_subdiff_project(self, v, y, c)
    }

    fn needs_smoothing(&self) -> bool {
        body_has_hard_polytope(self)
    }

    fn smoothed_support(&self, u: &DVector<f64>, eps: f64) -> f64 {
        body_smoothed_support(self, u, eps)
    }

    fn smoothed_support_grad(
        &self,
        u: &DVector<f64>,
        eps: f64,
    ) -> Result<(f64, DVector<f64>), GeometryError> {
        Ok(body_smoothed_support_grad(self, u, eps))
    }
}

impl ConvexDomain for LagrangianProduct {
    fn dim(&self) -> usize {
        LagrangianProduct::dim(self)
    }

    fn support(&self, u: &DVector<f64>) -> f64 {
        LagrangianProduct::support(self, u)
    }

    fn support_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        LagrangianProduct::support_grad(self, u)
    }

    fn gauge(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        LagrangianProduct::gauge(self, x)
    }

    // max(g_K, g_T) kinks where the factor gauges tie; the representative
    // picks the larger factor and breaks exact ties toward K.
    fn gauge_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let n = self.half_dim();
        assert_eq!(x.len(), 2 * n, "product gauge point dimension mismatch");
        let xq = x.rows(0, n).into_owned();
        let xp = x.rows(n, n).into_owned();
        let gq = self.k().gauge(&xq)?;
        let gp = self.t().gauge(&xp)?;
        let mut grad = DVector::zeros(2 * n);
        if gq >= gp {
            grad.rows_mut(0, n).copy_from(&self.k().gauge_grad(&xq)?);
        } else {
            grad.rows_mut(n, n).copy_from(&self.t().gauge_grad(&xp)?);
        }
        Ok(grad)
    }

    fn subdiff_project(
        &self,
        v: &DVector<f64>,
        y: &DVector<f64>,
        zero_band: f64,
    ) -> Result<(DVector<f64>, f64), GeometryError> {
        let n = self.half_dim();
        let vq = v.rows(0, n).into_owned();
        let vp = v.rows(n, n).into_owned();
        if vq.norm() <= zero_band && vp.norm() <= zero_band {
            return Ok((DVector::zeros(y.len()), y.norm()));
        }
        let c = 2.0 * self.support(v);
        let yq = y.rows(0, n).into_owned();
        let yp = y.rows(n, n).into_owned();
        // Factor subdifferential: the exposed face of the factor when its
        // speed is resolvably nonzero, the whole factor body otherwise
        // (support subdifferential at 0).
        let (pq, dq) = if vq.norm() <= zero_band {
            scaled_body_project(self.k(), &yq, c)?
        } else {
            scaled_subdiff_project(self.k(), &vq, &yq, c)?
        };
        let (pp, dp) = if vp.norm() <= zero_band {
            scaled_body_project(self.t(), &yp, c)?
        } else {
            scaled_subdiff_project(self.t(), &vp, &yp, c)?
        };
        let mut proj = DVector::zeros(2 * n);
        proj.rows_mut(0, n).copy_from(&pq);
        proj.rows_mut(n, n).copy_from(&pp);
        Ok((proj, dq.hypot(dp)))
    }

    // The factor supports vanish linearly at zero factor speed, so the
    // cross term 2 h_K(v_q) h_T(v_p) of h^2 has a crease exactly where
    // minimizers park one factor (bounce and flight arcs). Rounding each
    // factor through sqrt(h_F^2 + eps^2) makes h^2 C^1 with O(eps) bias.
    fn needs_smoothing(&self) -> bool {
        true
    }

    fn smoothed_support(&self, u: &DVector<f64>, eps: f64) -> f64 {
        let n = self.half_dim();
        let hq = body_smoothed_support(self.k(), &u.rows(0, n).into_owned(), eps);
        let hp = body_smoothed_support(self.t(), &u.rows(n, n).into_owned(), eps);
        hq.hypot(eps) + hp.hypot(eps)
    }

    fn smoothed_support_grad(
        &self,
        u: &DVector<f64>,
        eps: f64,
    ) -> Result<(f64, DVector<f64>), GeometryError> {
        let n = self.half_dim();
        let uq = u.rows(0, n).into_owned();
        let up = u.rows(n, n).into_owned();
        let (hq, gq) = body_smoothed_support_grad(self.k(), &uq, eps);
        let (hp, gp) = body_smoothed_support_grad(self.t(), &up, eps);
        let sq = hq.hypot(eps);
        let sp = hp.hypot(eps);
        let wq = if sq > 0.0 { hq / sq } else { 0.0 };
        let wp = if sp > 0.0 { hp / sp } else { 0.0 };
        let mut grad = DVector::zeros(2 * n);
        grad.rows_mut(0, n).axpy(wq, &gq, 0.0);
        grad.rows_mut(n, n).axpy(wp, &gp, 0.0);
        Ok((sq + sp, grad))
    }
}

impl<D: ConvexDomain + ?Sized> ConvexDomain for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn support(&self, u: &DVector<f64>) -> f64 {
        (**self).support(u)
    }
    fn support_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        (**self).support_grad(u)
    }
    fn gauge(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        (**self).gauge(x)
    }
    fn gauge_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        (**self).gauge_grad(x)
    }
    fn subdiff_project(
        &self,
        v: &DVector<f64>,
        y: &DVector<f64>,
        zero_band: f64,
    ) -> Result<(DVector<f64>, f64), GeometryError> {
        (**self).subdiff_project(v, y, zero_band)
    }
    fn needs_smoothing(&self) -> bool {
        (**self).needs_smoothing()
    }
    fn smoothed_support(&self, u: &DVector<f64>, eps: f64) -> f64 {
        (**self).smoothed_support(u, eps)
    }
    fn smoothed_support_grad(
        &self,
        u: &DVector<f64>,
        eps: f64,
    ) -> Result<(f64, DVector<f64>), GeometryError> {
        (**self).smoothed_support_grad(u, eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::dvector;

    #[test]
    fn ball_subdiff_is_the_scaled_gradient() {
        let b = ConvexBody::ball(2, 1.0);
        let v = dvector![3.0, 4.0];
        // h = 5, grad = v/5, subdiff point = 2*5*(v/5) = 2v.
        let y = dvector![6.0, 8.0];
        let (p, d) = ConvexDomain::subdiff_project(&b, &v, &y, 1e-9).unwrap();
        assert_abs_diff_eq!(p, y, epsilon = 1e-12);
        assert!(d < 1e-12);
        let y2 = dvector![6.0, 9.0];
        let (_, d2) = ConvexDomain::subdiff_project(&b, &v, &y2, 1e-9).unwrap();
        assert_relative_eq!(d2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_speed_collapses_to_origin_for_plain_bodies() {
        let b = ConvexBody::ball(2, 1.0);
        let y = dvector![0.3, -0.4];
        let (p, d) = ConvexDomain::subdiff_project(&b, &DVector::zeros(2), &y, 1e-9).unwrap();
        assert!(p.norm() == 0.0);
        assert_relative_eq!(d, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn product_zero_band_relaxes_to_factor_body() {
        let prod = LagrangianProduct::new(ConvexBody::ball(1, 1.0), ConvexBody::ball(1, 1.0))
            .unwrap();
        // v = (0, 1): position factor is in the zero band, momentum factor
        // has speed 1. h = h_K(0) + h_T(1) = 1, so c = 2.
        let v = dvector![0.0, 1.0];
        // y_q anywhere in 2K = [-2, 2] is fine; y_p must equal 2*grad = 2.
        let y = dvector![1.5, 2.0];
        let (_, d) = prod.subdiff_project(&v, &y, 1e-6).unwrap();
        assert!(d < 1e-12, "distance {d}");
        let y_out = dvector![3.0, 2.0];
        let (_, d) = prod.subdiff_project(&v, &y_out, 1e-6).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn smoothing_flags_follow_kink_structure() {
        assert!(!ConvexDomain::needs_smoothing(&ConvexBody::ball(2, 1.0)));
        assert!(ConvexDomain::needs_smoothing(&ConvexBody::cube(2, 1.0)));
        assert!(!ConvexBody::polytope_smoothed(
            vec![
                dvector![1.0, 1.0],
                dvector![-1.0, 1.0],
                dvector![-1.0, -1.0],
                dvector![1.0, -1.0]
            ],
            8.0
        )
        .unwrap()
        .needs_smoothing());
        let prod =
            LagrangianProduct::new(ConvexBody::ball(2, 1.0), ConvexBody::ball(2, 1.0)).unwrap();
        assert!(prod.needs_smoothing());
    }

    #[test]
    fn smoothed_support_upper_bounds_the_exact_one_by_o_eps() {
        let prod =
            LagrangianProduct::new(ConvexBody::ball(2, 1.0), ConvexBody::cube(2, 1.0)).unwrap();
        let eps = 1e-2;
        for u in crate::linalg::direction_grid(4, 64, 9) {
            let exact = prod.support(&u);
            let smoothed = prod.smoothed_support(&u, eps);
            assert!(smoothed >= exact - 1e-12, "surrogate dipped below h");
            assert!(smoothed <= exact + 3.1 * eps, "bias {} too big", smoothed - exact);
        }
    }

    #[test]
    fn smoothed_gradient_matches_finite_differences() {
        let prod =
            LagrangianProduct::new(ConvexBody::ball(2, 1.0), ConvexBody::cube(2, 1.0)).unwrap();
        let eps = 3e-2;
        let pts = [
            dvector![0.4, -0.2, 0.7, 0.1],
            dvector![1.0, 0.0, 0.0, 0.0],     // T factor parked at 0
            dvector![0.0, 0.0, 0.3, -0.9],    // K factor parked at 0
            dvector![2e-2, 1e-2, -0.5, 0.25], // K factor inside the rounding
        ];
        for u in &pts {
            let (_, g) = prod.smoothed_support_grad(u, eps).unwrap();
            for d in 0..4 {
                let h = 1e-6;
                let mut up = u.clone();
                let mut dn = u.clone();
                up[d] += h;
                dn[d] -= h;
                let fd =
                    (prod.smoothed_support(&up, eps) - prod.smoothed_support(&dn, eps)) / (2.0 * h);
                assert_abs_diff_eq!(g[d], fd, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn polytope_subdiff_spans_the_active_face() {
        // Square x [-1,1]: along u = e1 the active face of the square has
        // vertices (1, +-1); with h = ... the subdifferential at v = e1 is
        // the segment between them, scaled by 2 h(v).
        let sq = ConvexBody::cube(2, 1.0);
        let v = dvector![1.0, 0.0];
        let c = 2.0 * sq.support(&v); // = 2
        let y_mid = dvector![c, 0.0]; // midpoint of the scaled face
        let (_, d) = ConvexDomain::subdiff_project(&sq, &v, &y_mid, 1e-9).unwrap();
        assert!(d < 1e-10, "distance {d}");
        let y_off = dvector![c + 1.0, 0.0];
        let (_, d) = ConvexDomain::subdiff_project(&sq, &v, &y_off, 1e-9).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-9);
    }
}

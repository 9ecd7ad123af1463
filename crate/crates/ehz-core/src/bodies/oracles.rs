//! Support and gauge evaluations for every body variant.

use nalgebra::{DMatrix, DVector};

use crate::error::GeometryError;
use crate::lp::{self, LpOutcome};

use super::ConvexBody;

impl ConvexBody {
    /// Support function h(u) = sup_{x in K} <x, u>. Total: h(0) = 0 and any
    /// finite direction is accepted. Panics only on dimension mismatch.
    pub fn support(&self, u: &DVector<f64>) -> f64 {
        assert_eq!(u.len(), self.dim(), "support direction dimension mismatch");
        match self {
            ConvexBody::Ellipsoid { q, .. } => (q * u).dot(u).max(0.0).sqrt(),
            ConvexBody::PBall { p, radii } => {
                let qexp = p / (p - 1.0);
                dual_norm(u, radii, qexp)
            }
            ConvexBody::Polytope { vertices, smoothing: None } => vertices
                .iter()
                .map(|v| v.dot(u))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexBody::Polytope { vertices, smoothing: Some(s) } => {
                smooth_max(vertices, u, *s).0
            }
            ConvexBody::Sum(a, b) => a.support(u) + b.support(u),
            ConvexBody::Dilate { factor, inner } => factor * inner.support(u),
            ConvexBody::Translate { offset, inner } => inner.support(u) + offset.dot(u),
            ConvexBody::Linear { map, inner, .. } => inner.support(&(map.transpose() * u)),
            ConvexBody::Polar(inner) => inner
                .gauge(u)
                .expect("polar inner body was validated to have the origin interior"),
        }
    }

    /// A maximizer attaining the support value: a point of K where
    /// <x, u> = h(u), which is also a subgradient of h at u. For polytopes
    /// ties are broken toward the lowest vertex index so the answer is
    /// deterministic. Errors on u = 0, where the support cone is all of K.
    pub fn support_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        assert_eq!(u.len(), self.dim(), "support direction dimension mismatch");
        if u.norm() == 0.0 {
            return Err(GeometryError::ZeroDirection);
        }
        match self {
            ConvexBody::Ellipsoid { q, .. } => {
                let qu = q * u;
                let h = qu.dot(u).max(0.0).sqrt();
                if h == 0.0 {
                    return Err(GeometryError::ZeroDirection);
                }
                Ok(qu / h)
            }
            ConvexBody::PBall { p, radii } => {
                let qexp = p / (p - 1.0);
                Ok(dual_norm_grad(u, radii, qexp))
            }
            ConvexBody::Polytope { vertices, smoothing: None } => {
                let mut best = 0usize;
                let mut best_val = vertices[0].dot(u);
                for (j, v) in vertices.iter().enumerate().skip(1) {
                    let d = v.dot(u);
                    if d > best_val {
                        best_val = d;
                        best = j;
                    }
                }
                Ok(vertices[best].clone())
            }
            ConvexBody::Polytope { vertices, smoothing: Some(s) } => {
                let (_, grad) = smooth_max(vertices, u, *s);
                grad.ok_or(GeometryError::ZeroDirection)
            }
            ConvexBody::Sum(a, b) => Ok(a.support_grad(u)? + b.support_grad(u)?),
            ConvexBody::Dilate { factor, inner } => Ok(inner.support_grad(u)? * *factor),
            ConvexBody::Translate { offset, inner } => Ok(inner.support_grad(u)? + offset),
            ConvexBody::Linear { map, inner, .. } => {
                Ok(map * inner.support_grad(&(map.transpose() * u))?)
            }
            ConvexBody::Polar(inner) => inner.gauge_grad(u),
        }
    }

    /// Gauge g(x) = inf { r > 0 : x in r K }. Needs the origin in the
    /// interior; gauge(0) = 0.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64, GeometryError> {
        assert_eq!(x.len(), self.dim(), "gauge point dimension mismatch");
        match self {
            ConvexBody::Ellipsoid { q_inv, .. } => Ok((q_inv * x).dot(x).max(0.0).sqrt()),
            ConvexBody::PBall { p, radii } => Ok(weighted_norm(x, radii, *p)),
            ConvexBody::Polytope { vertices, smoothing: None } => polytope_gauge(vertices, x)
                .map(|(g, _)| g),
            ConvexBody::Polytope { .. } | ConvexBody::Sum(..) => {
                ratio_gauge(self, x).map(|(g, _)| g)
            }
            ConvexBody::Dilate { factor, inner } => Ok(inner.gauge(x)? / factor),
            ConvexBody::Translate { offset, inner } => {
                translate_gauge(inner, offset, x).map(|(g, _)| g)
            }
            ConvexBody::Linear { inv, inner, .. } => inner.gauge(&(inv * x)),
            ConvexBody::Polar(inner) => Ok(inner.support(x)),
        }
    }

    /// A gradient (or representative subgradient) of the gauge at x != 0.
    ///
    /// Closed forms cover ellipsoids, p-balls and the affine wrappers. Plain
    /// polytopes return the maximizer of the polar LP, which is an extreme
    /// subgradient (lowest-index consistent by the LP pivoting rule); sums
    /// and smoothed polytopes return the separation direction found by the
    /// ratio ascent, normalized so that <grad, x> = g(x).
    pub fn gauge_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        assert_eq!(x.len(), self.dim(), "gauge point dimension mismatch");
        if x.norm() == 0.0 {
            return Err(GeometryError::ZeroDirection);
        }
        match self {
            ConvexBody::Ellipsoid { q_inv, .. } => {
                let qx = q_inv * x;
                let g = qx.dot(x).max(0.0).sqrt();
                if g == 0.0 {
                    return Err(GeometryError::ZeroDirection);
                }
                Ok(qx / g)
            }
            ConvexBody::PBall { p, radii } => Ok(weighted_norm_grad(x, radii, *p)),
            ConvexBody::Polytope { vertices, smoothing: None } => {
                polytope_gauge(vertices, x).map(|(_, grad)| grad)
            }
            ConvexBody::Polytope { .. } | ConvexBody::Sum(..) => {
                ratio_gauge(self, x).map(|(_, grad)| grad)
            }
            ConvexBody::Dilate { factor, inner } => Ok(inner.gauge_grad(x)? / *factor),
            ConvexBody::Translate { offset, inner } => {
                let (g, grad) = translate_gauge(inner, offset, x)?;
                let _ = g;
                Ok(grad)
            }
            ConvexBody::Linear { inv, inner, .. } => {
                Ok(inv.transpose() * inner.gauge_grad(&(inv * x))?)
            }
            ConvexBody::Polar(inner) => inner.support_grad(x),
        }
    }

    /// Hessian of the gauge at x != 0. Available where a twice
    /// differentiable closed form exists: ellipsoids, p-balls (p >= 2 away
    /// from coordinate hyperplanes), dilations and linear images of those.
    pub fn gauge_hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
        assert_eq!(x.len(), self.dim(), "gauge point dimension mismatch");
        if x.norm() == 0.0 {
            return Err(GeometryError::ZeroDirection);
        }
        match self {
            ConvexBody::Ellipsoid { q_inv, .. } => {
                let qx = q_inv * x;
                let g = qx.dot(x).max(0.0).sqrt();
                if g == 0.0 {
                    return Err(GeometryError::ZeroDirection);
                }
                let grad = qx / g;
                Ok((q_inv - &grad * grad.transpose()) / g)
            }
            ConvexBody::PBall { p, radii } => pball_hessian(x, radii, *p),
            ConvexBody::Dilate { factor, inner } => Ok(inner.gauge_hessian(x)? / *factor),
            ConvexBody::Linear { inv, inner, .. } => {
                let h = inner.gauge_hessian(&(inv * x))?;
                Ok(inv.transpose() * h * inv)
            }
            other => Err(GeometryError::Unsupported {
                op: "gauge_hessian",
                variant: other.variant_name(),
            }),
        }
    }
}

// ----- weighted p-norms ----------------------------------------------------

/// (sum |x_i / r_i|^p)^{1/p}, computed with the largest term factored out so
/// extreme exponents stay in range.
fn weighted_norm(x: &DVector<f64>, radii: &DVector<f64>, p: f64) -> f64 {
    let m = x
        .iter()
        .zip(radii.iter())
        .map(|(xi, ri)| (xi / ri).abs())
        .fold(0.0f64, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x
        .iter()
        .zip(radii.iter())
        .map(|(xi, ri)| ((xi / ri).abs() / m).powf(p))
        .sum();
    m * s.powf(1.0 / p)
}

fn weighted_norm_grad(x: &DVector<f64>, radii: &DVector<f64>, p: f64) -> DVector<f64> {
    let m = x
        .iter()
        .zip(radii.iter())
        .map(|(xi, ri)| (xi / ri).abs())
        .fold(0.0f64, f64::max);
    let s: f64 = x
        .iter()
        .zip(radii.iter())
        .map(|(xi, ri)| ((xi / ri).abs() / m).powf(p))
        .sum();
    // grad_i = (s_i/m)^{p-1} S^{(1-p)/p} sgn(x_i) / r_i with s_i = |x_i|/r_i.
    let scale = s.powf((1.0 - p) / p);
    DVector::from_fn(x.len(), |i, _| {
        let si = (x[i] / radii[i]).abs() / m;
        scale * si.powf(p - 1.0) * x[i].signum() / radii[i]
    })
}

/// Dual-exponent norm h(u) = (sum (r_i |u_i|)^q)^{1/q}.
fn dual_norm(u: &DVector<f64>, radii: &DVector<f64>, q: f64) -> f64 {
    let m = u
        .iter()
        .zip(radii.iter())
        .map(|(ui, ri)| (ui * ri).abs())
        .fold(0.0f64, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = u
        .iter()
        .zip(radii.iter())
        .map(|(ui, ri)| ((ui * ri).abs() / m).powf(q))
        .sum();
    m * s.powf(1.0 / q)
}

fn dual_norm_grad(u: &DVector<f64>, radii: &DVector<f64>, q: f64) -> DVector<f64> {
    let m = u
        .iter()
        .zip(radii.iter())
        .map(|(ui, ri)| (ui * ri).abs())
        .fold(0.0f64, f64::max);
    let s: f64 = u
        .iter()
        .zip(radii.iter())
        .map(|(ui, ri)| ((ui * ri).abs() / m).powf(q))
        .sum();
    let scale = s.powf((1.0 - q) / q);
    DVector::from_fn(u.len(), |i, _| {
        let ti = (u[i] * radii[i]).abs() / m;
        scale * ti.powf(q - 1.0) * u[i].signum() * radii[i]
    })
}

fn pball_hessian(
    x: &DVector<f64>,
    radii: &DVector<f64>,
    p: f64,
) -> Result<DMatrix<f64>, GeometryError> {
    let n = x.len();
    let g = weighted_norm(x, radii, p);
    if g == 0.0 {
        return Err(GeometryError::ZeroDirection);
    }
    let grad = weighted_norm_grad(x, radii, p);
    // (p-1) [ g^{1-p} diag(|x_i|^{p-2} / r_i^p) - grad grad^T / g ], written
    // with normalized ratios so huge exponents cannot overflow.
    let m = x
        .iter()
        .zip(radii.iter())
        .map(|(xi, ri)| (xi / ri).abs())
        .fold(0.0f64, f64::max);
    let s: f64 = x
        .iter()
        .zip(radii.iter())
        .map(|(xi, ri)| ((xi / ri).abs() / m).powf(p))
        .sum();
    let diag_scale = s.powf((1.0 - p) / p) / m;
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let si = (x[i] / radii[i]).abs() / m;
        if si == 0.0 && p < 2.0 {
            return Err(GeometryError::Unsupported {
                op: "gauge_hessian at a coordinate hyperplane with p < 2",
                variant: "pball",
            });
        }
        hess[(i, i)] = diag_scale * si.powf(p - 2.0) / (radii[i] * radii[i]);
    }
    hess -= &grad * grad.transpose() / g;
    hess *= p - 1.0;
    Ok(hess)
}

// ----- polytope support smoothing -------------------------------------------

/// Smooth max (sum_j max(d_j, 0)^s)^{1/s} over vertex products d_j = <v_j, u>
/// and its gradient (None when every product is nonpositive, which cannot
/// happen when the origin is interior and u != 0).
fn smooth_max(
    vertices: &[DVector<f64>],
    u: &DVector<f64>,
    s: f64,
) -> (f64, Option<DVector<f64>>) {
    let dots: Vec<f64> = vertices.iter().map(|v| v.dot(u)).collect();
    let m = dots.iter().cloned().fold(0.0f64, f64::max);
    if m <= 0.0 {
        return (0.0, None);
    }
    // powi is several times cheaper than powf and the catalog exponents are
    // integers; the gauge ascent evaluates this in a tight loop.
    let int_s = s.fract() == 0.0 && s.abs() < 1e6;
    let mut total = 0.0;
    let mut grad = DVector::zeros(u.len());
    for (v, &d) in vertices.iter().zip(&dots) {
        if d <= 0.0 {
            continue;
        }
        let r = d / m;
        let pow_sm1 = if int_s {
            r.powi(s as i32 - 1)
        } else {
            r.powf(s - 1.0)
        };
        total += pow_sm1 * r;
        grad += v * pow_sm1;
    }
    let value = m * total.powf(1.0 / s);
    // grad f = f^{1-s} sum d_j^{s-1} v_j = total^{(1-s)/s} sum r_j^{s-1} v_j.
    let grad = grad * total.powf((1.0 - s) / s);
    (value, Some(grad))
}

// ----- polytope gauge via the polar LP --------------------------------------

/// Gauge of conv(V) at x, via g(x) = max { <x, u> : <v_j, u> <= 1 for all j }.
/// The maximizer u* satisfies <u*, x> = g and <v_j, u*> <= 1, so u* is a
/// subgradient of the gauge at x.
fn polytope_gauge(
    vertices: &[DVector<f64>],
    x: &DVector<f64>,
) -> Result<(f64, DVector<f64>), GeometryError> {
    if x.norm() == 0.0 {
        // Gauge is 0; any polar point works as a formal subgradient but
        // callers ask for gradients only at x != 0.
        return Ok((0.0, DVector::zeros(x.len())));
    }
    let rows: Vec<DVector<f64>> = vertices.to_vec();
    let b = vec![1.0; rows.len()];
    match lp::maximize(x, &rows, &b)? {
        LpOutcome::Optimal { y, value } => Ok((value, y)),
        LpOutcome::Unbounded => Err(GeometryError::OriginNotInterior),
        LpOutcome::Infeasible => Err(GeometryError::LinearProgram(
            "polar feasibility cannot fail with b = 1".into(),
        )),
    }
}

// ----- gauge by separation-ratio ascent --------------------------------------

/// Gauge through the polar formula g(x) = max_{u != 0} <x, u> / h(u),
/// maximized over the unit sphere by projected gradient ascent.
///
/// The objective's positive superlevel sets are convex cones contained in an
/// open half-space, so on the sphere the problem has a single local maximum
/// and the ascent from u0 = x/|x| (where the objective is positive) converges
/// to it. Returns (g, grad g) with grad g = u*/h(u*), which satisfies both
/// <grad, x> = g and h(grad-normalized direction) scaling, i.e. it is an
/// exact subgradient whenever h is differentiable at u*.
pub(crate) fn ratio_gauge(
    body: &ConvexBody,
    x: &DVector<f64>,
) -> Result<(f64, DVector<f64>), GeometryError> {
    let xn = x.norm();
    if xn == 0.0 {
        return Ok((0.0, DVector::zeros(x.len())));
    }
    let mut u = x / xn;
    let mut h = body.support(&u);
    if h <= 0.0 {
        return Err(GeometryError::OriginNotInterior);
    }
    let mut phi = x.dot(&u) / h;
    // Arc search along the ascent great circle, warm-started and expanded
    // geometrically. A fixed step times the tangent moves only O(|tangent|)
    // per iteration and crawls where the objective is flat (points facing a
    // polytope's smoothed vertex), so the arc length must be searched.
    let mut theta_warm = 0.25f64;
    for _ in 0..400 {
        let hg = body.support_grad(&u)?;
        // Euclidean gradient of phi = <x,u>/h(u), then its tangential part.
        let grad = (x - &hg * phi) / h;
        let tangent = &grad - &u * grad.dot(&u);
        let tnorm = tangent.norm();
        if tnorm <= 1e-14 * xn / h {
            break;
        }
        let dir = &tangent / tnorm;
        let eval = |theta: f64| -> Option<(f64, DVector<f64>, f64)> {
            let cand = &u * theta.cos() + &dir * theta.sin();
            let hc = body.support(&cand);
            (hc > 0.0).then(|| (x.dot(&cand) / hc, cand, hc))
        };
        // Contract until the arc improves, then expand while it keeps doing so.
        let mut accepted: Option<(f64, DVector<f64>, f64, f64)> = None;
        let mut theta = theta_warm;
        for _ in 0..60 {
            if let Some((pc, cand, hc)) = eval(theta) {
                if pc > phi {
                    accepted = Some((pc, cand, hc, theta));
                    break;
                }
            }
            theta *= 0.5;
        }
        match accepted {
            // Sixty halvings reach arcs below float resolution: at the max.
            None => break,
            Some((mut pc, mut cand, mut hc, mut arc)) => {
                let mut next = arc * 2.0;
                while next <= 1.5 {
                    match eval(next) {
                        Some((pe, ce, he)) if pe > pc => {
                            pc = pe;
                            cand = ce;
                            hc = he;
                            arc = next;
                            next *= 2.0;
                        }
                        _ => break,
                    }
                }
                u = cand;
                h = hc;
                phi = pc;
                theta_warm = arc;
            }
        }
    }
    let grad = &u / h;
    Ok((phi, grad))
}

// ----- gauge of a translated body -------------------------------------------

/// Gauge of K + v at x: the unique root of g_K(x - r v) = r, found by
/// bisection on the monotone membership predicate x in r (K + v).
///
/// Returns the gauge and its gradient grad G(x) = grad g_K(y) / (1 + <grad
/// g_K(y), v>) with y = x - G(x) v, obtained by differentiating the implicit
/// equation.
fn translate_gauge(
    inner: &ConvexBody,
    offset: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<(f64, DVector<f64>), GeometryError> {
    if x.norm() == 0.0 {
        return Ok((0.0, DVector::zeros(x.len())));
    }
    let member = |r: f64| -> Result<bool, GeometryError> {
        Ok(inner.gauge(&(x - offset * r))? <= r)
    };
    // Bracket: double until x lies in r (K + v). If the origin is not
    // interior to K + v the dilates do not swallow x and the loop runs away.
    let scale = x.norm().max(1.0);
    let mut hi = inner.gauge(x)?.max(1e-3);
    let mut attempts = 0;
    while !member(hi)? {
        hi *= 2.0;
        attempts += 1;
        if attempts > 80 || hi > 1e12 * scale {
            return Err(GeometryError::OriginNotInterior);
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if member(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    let g = hi;
    let y = x - offset * g;
    let inner_grad = inner.gauge_grad(&y)?;
    let denom = 1.0 + inner_grad.dot(offset);
    if denom.abs() < 1e-14 {
        return Err(GeometryError::NoConvergence(
            "translate gauge gradient: degenerate implicit derivative".into(),
        ));
    }
    Ok((g, inner_grad / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::direction_grid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{dmatrix, dvector};

    fn fd_grad(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
    }

    #[test]
    fn ball_support_and_gauge() {
        let b = ConvexBody::ball(4, 2.5);
        let u = dvector![1.0, -2.0, 0.5, 0.0];
        assert_relative_eq!(b.support(&u), 2.5 * u.norm(), max_relative = 1e-14);
        assert_relative_eq!(b.gauge(&u).unwrap(), u.norm() / 2.5, max_relative = 1e-14);
        assert_eq!(b.support(&DVector::zeros(4)), 0.0);
        assert_eq!(b.gauge(&DVector::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn ellipsoid_oracles_match_axes() {
        let q = dmatrix![4.0, 0.0; 0.0, 9.0];
        let e = ConvexBody::ellipsoid(q).unwrap();
        // Semiaxes 2 and 3.
        assert_relative_eq!(e.support(&dvector![1.0, 0.0]), 2.0, max_relative = 1e-14);
        assert_relative_eq!(e.support(&dvector![0.0, 1.0]), 3.0, max_relative = 1e-14);
        assert_relative_eq!(e.gauge(&dvector![2.0, 0.0]).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(e.gauge(&dvector![0.0, 3.0]).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn ellipsoid_gradients_match_finite_differences() {
        let q = dmatrix![3.0, 1.0; 1.0, 2.0];
        let e = ConvexBody::ellipsoid(q).unwrap();
        let u = dvector![0.7, -1.3];
        let fd = fd_grad(|v| e.support(v), &u, 1e-6);
        let an = e.support_grad(&u).unwrap();
        assert_abs_diff_eq!(an, fd, epsilon = 1e-8);
        let x = dvector![-0.4, 0.9];
        let fd = fd_grad(|v| e.gauge(v).unwrap(), &x, 1e-6);
        let an = e.gauge_grad(&x).unwrap();
        assert_abs_diff_eq!(an, fd, epsilon = 1e-8);
    }

    #[test]
    fn ellipsoid_hessian_matches_finite_differences() {
        let q = dmatrix![3.0, 1.0; 1.0, 2.0];
        let e = ConvexBody::ellipsoid(q).unwrap();
        let x = dvector![0.8, 0.5];
        let hess = e.gauge_hessian(&x).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (e.gauge_grad(&xp).unwrap() - e.gauge_grad(&xm).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(hess.column(i).into_owned(), col, epsilon = 1e-7);
        }
        // Homogeneity: the Hessian kills the radial direction.
        assert!((hess * &x).norm() < 1e-12);
    }

    #[test]
    fn pball_support_euler_identity() {
        let b = ConvexBody::pball(4.0, dvector![1.0, 2.0, 0.5]).unwrap();
        for u in direction_grid(3, 64, 7) {
            let h = b.support(&u);
            let grad = b.support_grad(&u).unwrap();
            assert_relative_eq!(grad.dot(&u), h, max_relative = 1e-11);
            // The support maximizer lies on the boundary.
            assert_relative_eq!(b.gauge(&grad).unwrap(), 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn pball_gauge_gradients_match_finite_differences() {
        let b = ConvexBody::pball(3.0, dvector![1.5, 0.8]).unwrap();
        let x = dvector![0.9, -1.1];
        let fd = fd_grad(|v| b.gauge(v).unwrap(), &x, 1e-6);
        assert_abs_diff_eq!(b.gauge_grad(&x).unwrap(), fd, epsilon = 1e-8);
        let u = dvector![-0.3, 0.7];
        let fd = fd_grad(|v| b.support(v), &u, 1e-6);
        assert_abs_diff_eq!(b.support_grad(&u).unwrap(), fd, epsilon = 1e-8);
    }

    #[test]
    fn pball_hessian_matches_finite_differences() {
        let b = ConvexBody::pball(4.0, dvector![1.0, 2.0]).unwrap();
        let x = dvector![0.6, 0.9];
        let hess = b.gauge_hessian(&x).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let col = (b.gauge_grad(&xp).unwrap() - b.gauge_grad(&xm).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(hess.column(i).into_owned(), col, epsilon = 1e-6);
        }
        assert!((hess * &x).norm() < 1e-12);
    }

    #[test]
    fn cube_support_is_scaled_l1() {
        let c = ConvexBody::cube(3, 2.0);
        let u = dvector![1.0, -0.5, 0.25];
        assert_relative_eq!(c.support(&u), 2.0 * u.abs().sum(), max_relative = 1e-14);
        // Vertex argmax follows the sign pattern.
        let g = c.support_grad(&u).unwrap();
        assert_eq!(g, dvector![2.0, -2.0, 2.0]);
    }

    #[test]
    fn polytope_tie_break_is_lowest_index() {
        // Two vertices attain the same product along e1.
        let p = ConvexBody::polytope(vec![
            dvector![1.0, 1.0],
            dvector![1.0, -1.0],
            dvector![-1.0, 0.0],
        ])
        .unwrap();
        let g = p.support_grad(&dvector![1.0, 0.0]).unwrap();
        assert_eq!(g, dvector![1.0, 1.0]);
    }

    #[test]
    fn cube_gauge_is_scaled_linf() {
        let c = ConvexBody::cube(2, 1.5);
        let x = dvector![0.9, -3.0];
        assert_relative_eq!(c.gauge(&x).unwrap(), 2.0, max_relative = 1e-9);
        let grad = c.gauge_grad(&x).unwrap();
        // Subgradient of |x|_inf / 1.5 at a point with unique max coordinate.
        assert_abs_diff_eq!(grad, dvector![0.0, -1.0 / 1.5], epsilon = 1e-9);
    }

    #[test]
    fn cross_polytope_gauge_is_scaled_l1() {
        let c = ConvexBody::cross_polytope(3, 2.0);
        let x = dvector![1.0, -2.0, 0.5];
        assert_relative_eq!(c.gauge(&x).unwrap(), x.abs().sum() / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn gauge_support_duality_on_polytope() {
        // g_K(x) = max over vertices is false; the dual pairing is
        // h_K(u) g_{K°}(u), checked here through polar round trips.
        let c = ConvexBody::cube(2, 1.0);
        let polar = c.polar().unwrap();
        for u in direction_grid(2, 32, 3) {
            let h = c.support(&u);
            let g = polar.gauge(&u).unwrap();
            assert_relative_eq!(h, g, max_relative = 1e-9);
        }
    }

    #[test]
    fn polar_closed_forms() {
        let e = ConvexBody::ellipsoid(dmatrix![4.0, 0.0; 0.0, 9.0]).unwrap();
        let ep = e.polar().unwrap();
        assert_relative_eq!(ep.support(&dvector![1.0, 0.0]), 0.5, max_relative = 1e-13);
        let b = ConvexBody::pball(3.0, dvector![2.0, 1.0]).unwrap();
        let bp = b.polar().unwrap();
        match &bp {
            ConvexBody::PBall { p, radii } => {
                assert_relative_eq!(*p, 1.5, max_relative = 1e-14);
                assert_relative_eq!(radii[0], 0.5, max_relative = 1e-14);
            }
            _ => panic!("polar of a p-ball should stay a p-ball"),
        }
        // Bipolar falls back to the original.
        let c = ConvexBody::cube(2, 1.0);
        let cpp = c.polar().unwrap().polar().unwrap();
        assert_eq!(c, cpp);
    }

    #[test]
    fn polar_support_is_gauge() {
        let body = ConvexBody::polytope(vec![
            dvector![1.2, 0.1],
            dvector![-0.3, 1.1],
            dvector![-1.0, -0.8],
            dvector![0.7, -1.0],
        ])
        .unwrap();
        let polar = body.polar().unwrap();
        for u in direction_grid(2, 48, 11) {
            assert_relative_eq!(
                polar.support(&u),
                body.gauge(&u).unwrap(),
                max_relative = 1e-9
            );
            assert_relative_eq!(
                polar.gauge(&u).unwrap(),
                body.support(&u),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn polar_requires_origin_interior() {
        let shifted = ConvexBody::ball(2, 1.0)
            .translate(dvector![5.0, 0.0])
            .unwrap();
        assert!(matches!(
            shifted.polar(),
            Err(GeometryError::OriginNotInterior)
        ));
    }

    #[test]
    fn sum_gauge_matches_closed_form_for_balls() {
        // B(r1) + B(r2) = B(r1 + r2).
        let s = ConvexBody::sum(ConvexBody::ball(3, 1.0), ConvexBody::ball(3, 2.5)).unwrap();
        let x = dvector![1.0, 2.0, -2.0];
        assert_relative_eq!(s.gauge(&x).unwrap(), x.norm() / 3.5, max_relative = 1e-10);
        let grad = s.gauge_grad(&x).unwrap();
        let fd = fd_grad(|v| s.gauge(v).unwrap(), &x, 1e-6);
        assert_abs_diff_eq!(grad, fd, epsilon = 1e-7);
    }

    #[test]
    fn sum_gauge_ball_plus_ellipsoid() {
        // Compare the ratio ascent against a dense direction sweep of the
        // polar formula g(x) = max_u <x,u>/h(u).
        let s = ConvexBody::sum(
            ConvexBody::ball(2, 0.5),
            ConvexBody::ellipsoid(dmatrix![4.0, 1.0; 1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let x = dvector![1.3, -0.4];
        let mut brute = 0.0f64;
        for k in 0..20000 {
            let t = 2.0 * std::f64::consts::PI * (k as f64) / 20000.0;
            let u = dvector![t.cos(), t.sin()];
            brute = brute.max(x.dot(&u) / s.support(&u));
        }
        let g = s.gauge(&x).unwrap();
        assert_relative_eq!(g, brute, max_relative = 1e-7);
        // Boundary consistency: x / g lies on the boundary.
        assert_relative_eq!(s.gauge(&(&x / g)).unwrap(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn smoothed_polytope_brackets_the_hull() {
        let cube = ConvexBody::cube(2, 1.0);
        let smooth = ConvexBody::polytope_smoothed(
            (0..4)
                .map(|k| {
                    let mask = k as u32;
                    DVector::from_fn(2, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                })
                .collect(),
            16.0,
        )
        .unwrap();
        let bound = (4.0f64).powf(1.0 / 16.0);
        for u in direction_grid(2, 64, 5) {
            let exact = cube.support(&u);
            let soft = smooth.support(&u);
            assert!(soft >= exact - 1e-12);
            assert!(soft <= bound * exact + 1e-12);
        }
    }

    #[test]
    fn smoothed_polytope_gradient_consistency() {
        let vertices: Vec<DVector<f64>> = (0..4)
            .map(|k| {
                let mask = k as u32;
                DVector::from_fn(2, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
            })
            .collect();
        let smooth = ConvexBody::polytope_smoothed(vertices, 8.0).unwrap();
        let u = dvector![0.6, -0.3];
        let fd = fd_grad(|v| smooth.support(v), &u, 1e-6);
        assert_abs_diff_eq!(smooth.support_grad(&u).unwrap(), fd, epsilon = 1e-7);
        let x = dvector![0.9, 0.2];
        let fd = fd_grad(|v| smooth.gauge(v).unwrap(), &x, 1e-6);
        assert_abs_diff_eq!(smooth.gauge_grad(&x).unwrap(), fd, epsilon = 1e-6);
    }

    #[test]
    fn dilate_translate_linear_chain() {
        let base = ConvexBody::ball(2, 1.0);
        let dilated = base.clone().dilate(2.0).unwrap();
        assert_relative_eq!(dilated.support(&dvector![1.0, 0.0]), 2.0);
        assert_relative_eq!(dilated.gauge(&dvector![1.0, 0.0]).unwrap(), 0.5);

        let shifted = base.clone().translate(dvector![0.5, 0.0]).unwrap();
        assert_relative_eq!(shifted.support(&dvector![1.0, 0.0]), 1.5);
        assert_relative_eq!(shifted.support(&dvector![-1.0, 0.0]), 0.5);
        // Gauge of the shifted ball: along +e1 the boundary point is at 1.5.
        assert_relative_eq!(
            shifted.gauge(&dvector![1.5, 0.0]).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        let x = dvector![0.9, 0.4];
        let fd = fd_grad(|v| shifted.gauge(v).unwrap(), &x, 1e-6);
        assert_abs_diff_eq!(shifted.gauge_grad(&x).unwrap(), fd, epsilon = 1e-7);

        let map = dmatrix![1.0, 1.0; 0.0, 1.0];
        let sheared = base.linear_image(map.clone()).unwrap();
        let u = dvector![0.8, -0.6];
        assert_relative_eq!(
            sheared.support(&u),
            (map.transpose() * &u).norm(),
            max_relative = 1e-13
        );
        let x = dvector![0.3, 0.4];
        let fd = fd_grad(|v| sheared.gauge(v).unwrap(), &x, 1e-6);
        assert_abs_diff_eq!(sheared.gauge_grad(&x).unwrap(), fd, epsilon = 1e-8);
        let hess = sheared.gauge_hessian(&x).unwrap();
        assert!((hess * &x).norm() < 1e-12);
    }

    #[test]
    fn gauge_grad_euler_identity_across_variants() {
        let bodies: Vec<ConvexBody> = vec![
            ConvexBody::ellipsoid(dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap(),
            ConvexBody::pball(5.0, dvector![1.0, 0.7]).unwrap(),
            ConvexBody::cube(2, 1.0),
            ConvexBody::sum(ConvexBody::ball(2, 1.0), ConvexBody::cube(2, 0.5)).unwrap(),
            ConvexBody::ball(2, 1.0).translate(dvector![0.2, -0.1]).unwrap(),
        ];
        for body in &bodies {
            for u in direction_grid(2, 16, 2) {
                let x = &u * 1.7;
                let g = body.gauge(&x).unwrap();
                let grad = body.gauge_grad(&x).unwrap();
                assert_relative_eq!(grad.dot(&x), g, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn invalid_constructions_are_rejected() {
        assert!(ConvexBody::ellipsoid(dmatrix![1.0, 2.0; 2.0, 1.0]).is_err()); // indefinite
        assert!(ConvexBody::pball(1.0, dvector![1.0]).is_err());
        assert!(ConvexBody::pball(2.0, dvector![0.0]).is_err());
        assert!(ConvexBody::polytope(vec![]).is_err());
        assert!(ConvexBody::ball(2, 1.0).dilate(-1.0).is_err());
        assert!(ConvexBody::ball(2, 1.0)
            .linear_image(DMatrix::zeros(2, 2))
            .is_err());
        let off_center = vec![dvector![1.0, 0.0], dvector![2.0, 0.0], dvector![1.5, 1.0]];
        assert!(ConvexBody::polytope_smoothed(off_center, 8.0).is_err());
    }

    #[test]
    fn zero_direction_gradients_error() {
        let b = ConvexBody::ball(2, 1.0);
        let z = DVector::zeros(2);
        assert!(matches!(
            b.support_grad(&z),
            Err(GeometryError::ZeroDirection)
        ));
        assert!(matches!(b.gauge_grad(&z), Err(GeometryError::ZeroDirection)));
    }
}

//! Forward (K,T)-billiard dynamics and the direct variational search for
//! shortest closed orbits.
//!
//! The flow alternates straight flight in K along -grad g_T(p) with a
//! momentum sweep across T along grad g_K(q'); T a Euclidean ball recovers
//! the classical mirror law. The direct search looks for closed m-gons
//! inscribed in the boundary of K that satisfy the reflection law, by
//! driving the first-order criticality residual of the h_T-length to zero
//! in the normal-direction chart q = grad h_K(u). It serves as the
//! independent reference value for the capacity solver: the minimum over
//! small m of the h_T-length equals the capacity of K x T.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::{BilliardError, GeometryError};
use crate::linalg::{random_unit, sphere_grid_min};

/// Band for the on-boundary state invariant.
const BOUNDARY_BAND: f64 = 1e-9;

/// Tangency band: |<grad g_K, grad g_T>| below this is a gliding
/// configuration and the forward step is undefined.
const TANGENCY_BAND: f64 = 1e-8;

/// Consecutive bounce points closer than this collapse the orbit.
const COLLAPSE_SEP: f64 = 1e-8;

/// A point of the phase space boundary: q on the boundary of the table K,
/// p on the boundary of the geometry body T.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilliardState {
    #[serde(with = "crate::wire::vector")]
    pub q: DVector<f64>,
    #[serde(with = "crate::wire::vector")]
    pub p: DVector<f64>,
}

impl BilliardState {
    /// Validate the boundary invariant (gauge 1 within 1e-9 on both
    /// factors) and wrap the state.
    pub fn new(
        k: &ConvexBody,
        t: &ConvexBody,
        q: DVector<f64>,
        p: DVector<f64>,
    ) -> Result<Self, BilliardError> {
        let gq = k.gauge(&q)?;
        if (gq - 1.0).abs() > BOUNDARY_BAND {
            return Err(BilliardError::OffBoundary {
                which: "q",
                gauge: gq,
            });
        }
        let gp = t.gauge(&p)?;
        if (gp - 1.0).abs() > BOUNDARY_BAND {
            return Err(BilliardError::OffBoundary {
                which: "p",
                gauge: gp,
            });
        }
        Ok(BilliardState { q, p })
    }
}

/// Exit point of the ray x0 + t*dir (t > 0) from the body, for x0 on or
/// inside the boundary. Brackets the exit by the support bound along the
/// ray, then closes in with bisection-safeguarded Newton until
/// |gauge - 1| <= 1e-12.
fn ray_exit(
    body: &ConvexBody,
    x0: &DVector<f64>,
    dir: &DVector<f64>,
) -> Result<DVector<f64>, BilliardError> {
    let dn = dir.norm();
    if dn == 0.0 {
        return Err(BilliardError::Geometry(GeometryError::ZeroDirection));
    }
    let dhat = dir / dn;
    let phi = |t: f64| -> Result<f64, GeometryError> {
        Ok(body.gauge(&(x0 + dir * t))? - 1.0)
    };
    // <x0 + t dir, dhat> <= h(dhat) bounds the exit parameter.
    let t_hi0 = (body.support(&dhat) - x0.dot(&dhat)) / dn;
    if !(t_hi0 > 0.0) {
        return Err(BilliardError::RayIntersection(format!(
            "support bound along the ray is {t_hi0:.3e}; the ray leaves immediately"
        )));
    }
    let mut hi = t_hi0 * (1.0 + 1e-12) + 1e-300;
    // An interior sample between the start (gauge 1) and the exit.
    let mut lo = 0.0;
    let mut found = false;
    let mut probe = 0.5 * hi;
    for _ in 0..60 {
        if phi(probe)? < 0.0 {
            lo = probe;
            found = true;
            break;
        }
        probe *= 0.5;
    }
    if !found {
        return Err(BilliardError::RayIntersection(
            "no interior point along the ray; the chord is tangential".into(),
        ));
    }
    // Ensure the bracket end is outside or on the boundary.
    while phi(hi)? < 0.0 {
        hi *= 1.0 + 1e-6;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let x = x0 + dir * t;
        let f = body.gauge(&x)? - 1.0;
        if f.abs() <= 1e-12 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t;
        if let Ok(grad) = body.gauge_grad(&x) {
            let df = grad.dot(dir);
            if df > 0.0 {
                next = t - f / df;
            }
        }
        t = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(BilliardError::RayIntersection(
        "Newton/bisection did not reach the boundary tolerance".into(),
    ))
}

/// One bounce of the (K,T)-billiard: fly from q along -grad g_T(p) to the
/// far boundary point q', then sweep the momentum across T along
/// grad g_K(q') to its exit point p'. Tangential configurations (either
/// leg) are gliding states and rejected rather than integrated.
pub fn billiard_step(
    k: &ConvexBody,
    t: &ConvexBody,
    state: &BilliardState,
) -> Result<BilliardState, BilliardError> {
    let gq = k.gauge(&state.q)?;
    if (gq - 1.0).abs() > BOUNDARY_BAND {
        return Err(BilliardError::OffBoundary {
            which: "q",
            gauge: gq,
        });
    }
    let gp = t.gauge(&state.p)?;
    if (gp - 1.0).abs() > BOUNDARY_BAND {
        return Err(BilliardError::OffBoundary {
            which: "p",
            gauge: gp,
        });
    }
    let nu_k = k.gauge_grad(&state.q)?;
    let nu_t = t.gauge_grad(&state.p)?;
    let dot = nu_k.dot(&nu_t);
    if dot.abs() < TANGENCY_BAND {
        return Err(BilliardError::GlidingConfiguration { dot });
    }
    let dir = -&nu_t;
    let inward = nu_k.dot(&dir);
    if inward > 0.0 {
        return Err(BilliardError::OutwardDirection { dot: inward });
    }
    let q2 = ray_exit(k, &state.q, &dir)?;
    let nu_k2 = k.gauge_grad(&q2)?;
    // The momentum sweep must enter T transversally at p.
    let dot2 = nu_t.dot(&nu_k2);
    if dot2.abs() < TANGENCY_BAND {
        return Err(BilliardError::GlidingConfiguration { dot: dot2 });
    }
    if dot2 > 0.0 {
        return Err(BilliardError::OutwardDirection { dot: dot2 });
    }
    let p2 = ray_exit(t, &state.p, &nu_k2)?;
    Ok(BilliardState { q: q2, p: p2 })
}

/// Iterate `billiard_step` m times, recording every state including the
/// start. A tangential step aborts with the offending step index attached.
pub fn trace(
    k: &ConvexBody,
    t: &ConvexBody,
    start: &BilliardState,
    bounces: usize,
) -> Result<Vec<BilliardState>, BilliardError> {
    let mut states = Vec::with_capacity(bounces + 1);
    states.push(start.clone());
    for step in 0..bounces {
        match billiard_step(k, t, states.last().unwrap()) {
            Ok(next) => states.push(next),
            Err(source) => {
                return Err(BilliardError::TraceAborted {
                    step,
                    source: Box::new(source),
                })
            }
        }
    }
    Ok(states)
}

/// Search budget for [`shortest_orbit_direct`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrbitSearchConfig {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Acceptance bound on the closure error of the verified orbit,
    /// relative to the body scale.
    pub closure_tol: f64,
}

impl Default for OrbitSearchConfig {
    fn default() -> Self {
        OrbitSearchConfig {
            starts: 24,
            seed: 0,
            max_iter: 600,
            closure_tol: 1e-6,
        }
    }
}

/// A closed billiard orbit found by the direct search. Points live on the
/// boundary of K, momenta on the boundary of T; `momenta[j]` drives the
/// flight from `points[j]` to `points[j+1]`. The length is the h_T-length
/// of the closed polygon and `closure_error` is the largest deviation when
/// the orbit is re-run through `billiard_step`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShortestOrbit {
    pub m: usize,
    pub length: f64,
    #[serde(with = "crate::wire::vectors")]
    pub points: Vec<DVector<f64>>,
    #[serde(with = "crate::wire::vectors")]
    pub momenta: Vec<DVector<f64>>,
    pub closure_error: f64,
    /// First-order criticality residual of the length functional at the
    /// returned polygon (squared norm).
    pub criticality: f64,
}

/// h_T-length of the closed polygon through the points.
pub fn polygon_length(t: &ConvexBody, points: &[DVector<f64>]) -> f64 {
    let m = points.len();
    (0..m)
        .map(|j| t.support(&(&points[(j + 1) % m] - &points[j])))
        .sum()
}

/// Shortest closed (K,T)-orbit with exactly m bounce points.
///
/// The length functional L = sum_j h_T(q_{j+1} - q_j) over m-tuples on the
/// boundary of K has the closed orbits among its critical points, but its
/// global minimum is the degenerate collapsed tuple (L = 0), so descent on
/// L itself never finds an orbit. The search instead minimizes the squared
/// first-order criticality residual of L in the chart q = grad h_K(u),
/// penalizing reflection multipliers of the wrong sign; zeros of that
/// residual away from collapse are exactly the reflection-law polygons.
/// Each converged start is verified by re-running the polygon through
/// `billiard_step`, and the shortest verified orbit wins.
pub fn shortest_orbit_direct(
    k: &ConvexBody,
    t: &ConvexBody,
    m: usize,
    config: &OrbitSearchConfig,
) -> Result<ShortestOrbit, BilliardError> {
    if m < 2 {
        return Err(BilliardError::BadBounceCount(m));
    }
    let n = k.dim();
    if t.dim() != n {
        return Err(BilliardError::Geometry(GeometryError::DimensionMismatch {
            body: n,
            arg: t.dim(),
        }));
    }
    let dof = m * n;
    let mut best: Option<ShortestOrbit> = None;
    let mut last_failure = String::from("no start converged");

    // Reflection polygons wind once around the body, and on polytope-like
    // bodies the support chart concentrates near vertex images, so
    // independent uniform blocks tend to miss the narrow parameter bands
    // holding the short orbits. Rings of directions wound once around a
    // random great circle start in the right class; a grid-seeded
    // antipodal pair pins the two-bounce global basin; every third start
    // stays fully random for diversity.
    let mut initial: Vec<DVector<f64>> = Vec::with_capacity(config.starts + 1);
    if m == 2 {
        if let Some(x) = two_bounce_seed(k, t) {
            initial.push(x);
        }
    }
    for s in 0..config.starts {
        let mut rng =
            ChaCha8Rng::seed_from_u64(config.seed ^ (s as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15));
        match s % 3 {
            0 => initial.push(ring_start(&mut rng, m, n)),
            // Ring of bounce positions pushed through the normal map:
            // wide nearly-flat stretches of the boundary are narrow in
            // normal direction but wide in position, so this start family
            // reaches the orbits that bounce there.
            1 => {
                let x = ring_start(&mut rng, m, n);
                initial.push(normal_map(k, m, n, &x).unwrap_or(x));
            }
            _ => {
                let mut x = DVector::zeros(dof);
                for j in 0..m {
                    x.rows_mut(j * n, n).copy_from(&random_unit(&mut rng, n));
                }
                initial.push(x);
            }
        }
    }

    for x in initial {
        let Some(x) = minimize_residual(k, t, m, n, x, config.max_iter) else {
            continue;
        };
        let points = match chart_points(k, m, n, &x) {
            Ok(p) => p,
            Err(_) => continue,
        };
        // Collapse guard: restart rather than report a degenerate tuple.
        let min_sep = (0..m)
            .map(|j| (&points[(j + 1) % m] - &points[j]).norm())
            .fold(f64::INFINITY, f64::min)
            ;
        if min_sep < COLLAPSE_SEP {
            last_failure = format!("starts collapse (separation {min_sep:.1e})");
            continue;
        }
        let criticality = residual(k, t, m, n, &x).unwrap_or(f64::INFINITY);
        let length = polygon_length(t, &points);
        let scale = points.iter().map(|q| q.norm()).fold(0.0, f64::max).max(1.0);

        // Verify the reflection law by stepping the flow around the
        // polygon; try the reverse orientation too, which is the closing
        // one when h_T is not even.
        let mut verified: Option<(Vec<DVector<f64>>, Vec<DVector<f64>>, f64)> = None;
        for pts in [points.clone(), {
            let mut r = points.clone();
            r.reverse();
            r
        }] {
            match closure_check(k, t, &pts) {
                Ok((momenta, err)) if err <= config.closure_tol * scale => {
                    verified = Some((pts, momenta, err));
                    break;
                }
                Ok((_, err)) => {
                    last_failure = format!("closure error {err:.3e} above tolerance");
                }
                Err(e) => {
                    last_failure = format!("closure verification failed: {e}");
                }
            }
        }
        let Some((points, momenta, closure_error)) = verified else {
            continue;
        };
        let candidate = ShortestOrbit {
            m,
            length,
            points,
            momenta,
            closure_error,
            criticality,
        };
        if best.as_ref().map_or(true, |b| candidate.length < b.length) {
            best = Some(candidate);
        }
    }
    best.ok_or(BilliardError::SearchFailed(last_failure))
}

/// Best orbit over a range of bounce counts; the shortest length wins.
pub fn shortest_orbit_over_m(
    k: &ConvexBody,
    t: &ConvexBody,
    m_range: std::ops::RangeInclusive<usize>,
    config: &OrbitSearchConfig,
) -> Result<ShortestOrbit, BilliardError> {
    let mut best: Option<ShortestOrbit> = None;
    let mut last: Option<BilliardError> = None;
    for m in m_range {
        match shortest_orbit_direct(k, t, m, config) {
            Ok(orbit) => {
                if best.as_ref().map_or(true, |b| orbit.length < b.length) {
                    best = Some(orbit);
                }
            }
            Err(e) => last = Some(e),
        }
    }
    best.ok_or_else(|| last.unwrap_or(BilliardError::SearchFailed("empty bounce range".into())))
}

fn chart_points(
    k: &ConvexBody,
    m: usize,
    n: usize,
    x: &DVector<f64>,
) -> Result<Vec<DVector<f64>>, GeometryError> {
    (0..m)
        .map(|j| {
            let u = x.rows(j * n, n).into_owned();
            k.support_grad(&u)
        })
        .collect()
}

/// Stacked criticality residual of the length functional at the chart
/// point x. Block j is the variation dL/dq_j with its outward-normal
/// component clamped at zero: the tangential part (the reflection law)
/// plus any negative multiplier (the wrong-sign penalty). None when a leg
/// collapses or an oracle fails.
fn residual_vec(
    k: &ConvexBody,
    t: &ConvexBody,
    m: usize,
    n: usize,
    x: &DVector<f64>,
) -> Option<DVector<f64>> {
    let points = chart_points(k, m, n, x).ok()?;
    let mut r = DVector::zeros(m * n);
    for j in 0..m {
        let fwd = &points[(j + 1) % m] - &points[j];
        let back = &points[j] - &points[(j + m - 1) % m];
        if fwd.norm() < 1e-12 || back.norm() < 1e-12 {
            return None;
        }
        // dL/dq_j = grad h_T(q_j - q_{j-1}) - grad h_T(q_{j+1} - q_j).
        let delta = t.support_grad(&back).ok()? - t.support_grad(&fwd).ok()?;
        // The outward normal at the support point grad h_K(u_j) is u_j
        // itself: the touching hyperplane has normal u_j.
        let u = x.rows(j * n, n).into_owned();
        let nnu = u.norm();
        if nnu < 1e-14 {
            return None;
        }
        let nu_hat = u / nnu;
        let c = delta.dot(&nu_hat);
        let block = &delta - &nu_hat * c.max(0.0);
        r.rows_mut(j * n, n).copy_from(&block);
    }
    Some(r)
}

/// Squared criticality residual; see [`residual_vec`].
fn residual(
    k: &ConvexBody,
    t: &ConvexBody,
    m: usize,
    n: usize,
    x: &DVector<f64>,
) -> Option<f64> {
    residual_vec(k, t, m, n, x).map(|r| r.norm_squared())
}

/// Conjugate-gradient descent on the criticality residual with central
/// finite-difference gradients; the chart is 0-homogeneous so the blocks
/// are renormalized to the sphere as drift accumulates.
fn minimize_residual(
    k: &ConvexBody,
    t: &ConvexBody,
    m: usize,
    n: usize,
    mut x: DVector<f64>,
    max_iter: usize,
) -> Option<DVector<f64>> {
    const BIG: f64 = 1e12;
    let eval = |x: &DVector<f64>| residual(k, t, m, n, x).unwrap_or(BIG);
    let grad = |x: &DVector<f64>, g: &mut DVector<f64>| {
        let h = 1e-6;
        let mut xp = x.clone();
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = eval(&xp);
            xp[i] = x[i] - h;
            let fm = eval(&xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
    };

    let dof = m * n;
    let mut f = eval(&x);
    if f >= BIG {
        return None;
    }
    let mut g = DVector::zeros(dof);
    grad(&x, &mut g);
    let mut dir = -&g;
    let mut g_prev = g.clone();
    let mut step = 0.1f64;

    for _ in 0..max_iter {
        let gd = g.dot(&dir);
        if gd >= 0.0 {
            dir = -&g;
            continue;
        }
        let mut s = step.min(1.0).max(1e-10);
        let mut accepted = false;
        for _ in 0..50 {
            let cand = &x + &dir * s;
            let fc = eval(&cand);
            if fc < f + 1e-4 * s * gd {
                x = cand;
                step = s * 2.0;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
        // Keep the chart blocks on the sphere; gradients below are taken
        // at the renormalized point.
        for j in 0..m {
            let norm = x.rows(j * n, n).norm();
            if norm > 1e-12 {
                let scaled = x.rows(j * n, n) / norm;
                x.rows_mut(j * n, n).copy_from(&scaled);
            }
        }
        f = eval(&x);
        if f <= 1e-22 {
            break;
        }
        grad(&x, &mut g);
        let beta = (g.dot(&(&g - &g_prev)) / g_prev.norm_squared().max(1e-300)).max(0.0);
        dir = -&g + &dir * beta;
        g_prev = g.clone();
        if g.norm() <= 1e-14 {
            break;
        }
    }
    levenberg_polish(k, t, m, n, x)
}

/// Levenberg-Marquardt on the stacked residual with a finite-difference
/// Jacobian. The system is tiny (m*n unknowns), so the dense solve is
/// cheap; damping absorbs the zero modes of the 0-homogeneous chart and
/// of symmetric tables. This stage is what pushes the closure error from
/// line-search floor (~1e-2) down to machine level.
fn levenberg_polish(
    k: &ConvexBody,
    t: &ConvexBody,
    m: usize,
    n: usize,
    mut x: DVector<f64>,
) -> Option<DVector<f64>> {
    let dof = m * n;
    let h = 1e-6;
    let mut r = residual_vec(k, t, m, n, &x)?;
    let mut f = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..80 {
        if f <= 1e-26 {
            break;
        }
        let mut jac = nalgebra::DMatrix::zeros(dof, dof);
        let mut xp = x.clone();
        for i in 0..dof {
            xp[i] = x[i] + h;
            let rp = residual_vec(k, t, m, n, &xp)?;
            xp[i] = x[i] - h;
            let rm = residual_vec(k, t, m, n, &xp)?;
            xp[i] = x[i];
            jac.set_column(i, &((rp - rm) / (2.0 * h)));
        }
        let jt = jac.transpose();
        let jtr = &jt * &r;
        let jtj = &jt * &jac;
        let mut improved = false;
        for _ in 0..25 {
            let lhs = &jtj + nalgebra::DMatrix::identity(dof, dof) * mu;
            let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let mut cand = &x + &step;
            for j in 0..m {
                let norm = cand.rows(j * n, n).norm();
                if norm > 1e-12 {
                    let scaled = cand.rows(j * n, n) / norm;
                    cand.rows_mut(j * n, n).copy_from(&scaled);
                }
            }
            match residual_vec(k, t, m, n, &cand) {
                Some(rc) if rc.norm_squared() < f => {
                    x = cand;
                    r = rc;
                    f = r.norm_squared();
                    mu = (mu / 3.0).max(1e-14);
                    improved = true;
                    break;
                }
                _ => mu *= 10.0,
            }
        }
        if !improved {
            break;
        }
    }
    Some(x)
}

/// Momentum sequence of the polygon and the worst closure deviation when
/// the polygon is re-run through `billiard_step`. The momentum driving the
/// One ring of m unit directions wound once around a random great circle
/// with a random phase.
fn ring_start(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DVector<f64> {
    let a = random_unit(rng, n);
    let mut b = random_unit(rng, n);
    b -= &a * a.dot(&b);
    let mut norm = b.norm();
    while norm < 1e-9 {
        b = random_unit(rng, n);
        b -= &a * a.dot(&b);
        norm = b.norm();
    }
    b /= norm;
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut x = DVector::zeros(m * n);
    for j in 0..m {
        let theta = phase + std::f64::consts::TAU * j as f64 / m as f64;
        let u = &a * theta.cos() + &b * theta.sin();
        x.rows_mut(j * n, n).copy_from(&u);
    }
    x
}

/// Reinterpret each block of `x` as a bounce position ray and replace it
/// with the unit outward normal of K there. The gauge gradient is
/// 0-homogeneous, so the ray stands in for the boundary point.
fn normal_map(k: &ConvexBody, m: usize, n: usize, x: &DVector<f64>) -> Option<DVector<f64>> {
    let mut out = DVector::zeros(m * n);
    for j in 0..m {
        let ray = x.rows(j * n, n).into_owned();
        let nu = k.gauge_grad(&ray).ok()?;
        let norm = nu.norm();
        if norm < 1e-14 {
            return None;
        }
        out.rows_mut(j * n, n).copy_from(&(nu / norm));
    }
    Some(out)
}

/// Antipodal start at the grid minimizer of the two-bounce length. The
/// shortest two-bounce chord joins opposite support points grad h_K(+-u),
/// so a direct grid search over u lands inside its basin.
fn two_bounce_seed(k: &ConvexBody, t: &ConvexBody) -> Option<DVector<f64>> {
    let n = k.dim();
    let (u, val) = sphere_grid_min(n, 256, 0x2b0c, 6, |u| {
        let w = match (k.support_grad(u), k.support_grad(&(-u))) {
            (Ok(a), Ok(b)) => a - b,
            _ => return f64::INFINITY,
        };
        t.support(&w) + t.support(&(-w))
    });
    if !val.is_finite() {
        return None;
    }
    let mut x = DVector::zeros(2 * n);
    x.rows_mut(0, n).copy_from(&u);
    x.rows_mut(n, n).copy_from(&(-&u));
    Some(x)
}

/// leg q_j -> q_{j+1} is the boundary point of T whose outward normal
/// opposes the leg.
fn closure_check(
    k: &ConvexBody,
    t: &ConvexBody,
    points: &[DVector<f64>],
) -> Result<(Vec<DVector<f64>>, f64), BilliardError> {
    let m = points.len();
    let mut momenta = Vec::with_capacity(m);
    for j in 0..m {
        let leg = &points[(j + 1) % m] - &points[j];
        momenta.push(t.support_grad(&(-leg))?);
    }
    let mut worst = 0.0f64;
    for j in 0..m {
        let state = BilliardState {
            q: points[j].clone(),
            p: momenta[j].clone(),
        };
        let next = billiard_step(k, t, &state)?;
        worst = worst.max((&next.q - &points[(j + 1) % m]).norm());
        worst = worst.max((&next.p - &momenta[(j + 1) % m]).norm());
    }
    Ok((momenta, worst))
}

/// Two-bounce h_T-width of K: the minimum over directions u of the
/// h_T-length of the chord pair realized by the opposite support points
/// grad h_K(+-u). For T = B(1) this is twice the Euclidean width; it
/// agrees with the m = 2 direct search on smooth bodies.
pub fn t_width_two_bounce(k: &ConvexBody, t: &ConvexBody) -> Result<f64, GeometryError> {
    let n = k.dim();
    let mut oracle_err: Option<GeometryError> = None;
    let (_, val) = sphere_grid_min(n, 256, 0x2b0c, 6, |u| {
        let w = match (k.support_grad(u), k.support_grad(&(-u))) {
            (Ok(a), Ok(b)) => a - b,
            (Err(e), _) | (_, Err(e)) => {
                oracle_err.get_or_insert(e);
                return f64::INFINITY;
            }
        };
        t.support(&w) + t.support(&(-w))
    });
    match oracle_err {
        Some(e) if !val.is_finite() => Err(e),
        _ => Ok(val),
    }
}

/// Gliding-set diagnostic at a state: whether the factor normals are
/// orthogonal within the tangency band, and the curvature ratio
/// <Hess g_T(p) nu_K, nu_K> / <Hess g_K(q) nu_T, nu_T> that governs the
/// gliding flow. Requires Hessian oracles on both bodies.
pub fn gliding_check(
    k: &ConvexBody,
    t: &ConvexBody,
    state: &BilliardState,
) -> Result<(bool, f64), BilliardError> {
    let nu_k = k.gauge_grad(&state.q)?;
    let nu_t = t.gauge_grad(&state.p)?;
    let on_a = nu_k.dot(&nu_t).abs() <= TANGENCY_BAND;
    let hess_t = t.gauge_hessian(&state.p)?;
    let hess_k = k.gauge_hessian(&state.q)?;
    let num = (&hess_t * &nu_k).dot(&nu_k);
    let den = (&hess_k * &nu_t).dot(&nu_t);
    let ratio = if den.abs() < 1e-300 {
        f64::INFINITY
    } else {
        num / den
    };
    Ok((on_a, ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{dvector, DMatrix};
    use rand::Rng;

    fn disk(r: f64) -> ConvexBody {
        ConvexBody::ball(2, r)
    }

    #[test]
    fn tangential_state_is_a_gliding_error() {
        let k = disk(1.0);
        let t = disk(1.0);
        let state = BilliardState::new(&k, &t, dvector![1.0, 0.0], dvector![0.0, 1.0]).unwrap();
        assert!(matches!(
            billiard_step(&k, &t, &state),
            Err(BilliardError::GlidingConfiguration { .. })
        ));
    }

    #[test]
    fn outward_state_is_rejected() {
        let k = disk(1.0);
        let t = disk(1.0);
        let state = BilliardState::new(&k, &t, dvector![1.0, 0.0], dvector![-1.0, 0.0]).unwrap();
        assert!(matches!(
            billiard_step(&k, &t, &state),
            Err(BilliardError::OutwardDirection { .. })
        ));
    }

    #[test]
    fn diameter_bounce_is_period_two() {
        let k = disk(1.0);
        let t = disk(1.0);
        // q = (1,0) with momentum (1,0): flight along (-1,0) to (-1,0),
        // then the sweep flips the momentum.
        let state = BilliardState::new(&k, &t, dvector![1.0, 0.0], dvector![1.0, 0.0]).unwrap();
        let next = billiard_step(&k, &t, &state).unwrap();
        assert_abs_diff_eq!((&next.q - dvector![-1.0, 0.0]).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((&next.p - dvector![-1.0, 0.0]).norm(), 0.0, epsilon = 1e-9);
        let back = billiard_step(&k, &t, &next).unwrap();
        assert_abs_diff_eq!((&back.q - &state.q).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((&back.p - &state.p).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn trace_keeps_states_on_the_boundaries() {
        let k = ConvexBody::ellipsoid(DMatrix::from_diagonal(&dvector![4.0, 1.0])).unwrap();
        let t = disk(1.0);
        let q = dvector![2.0 * 0.6_f64.cos(), 0.6_f64.sin()];
        let p = dvector![0.9_f64.cos(), 0.9_f64.sin()];
        let state = BilliardState::new(&k, &t, q, p).unwrap();
        let states = trace(&k, &t, &state, 25).unwrap();
        assert_eq!(states.len(), 26);
        for s in &states {
            assert_abs_diff_eq!(k.gauge(&s.q).unwrap(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(t.gauge(&s.p).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn euclidean_reflection_is_specular() {
        // T = B: outgoing direction is the mirror image of the incoming
        // one across the tangent plane at the bounce point.
        let k = ConvexBody::ellipsoid(DMatrix::from_diagonal(&dvector![2.25, 1.0])).unwrap();
        let t = disk(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 200 {
            let a = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            let b = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            let q = dvector![1.5 * a.cos(), a.sin()];
            let p = dvector![b.cos(), b.sin()];
            let state = match BilliardState::new(&k, &t, q, p) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let next = match billiard_step(&k, &t, &state) {
                Ok(s) => s,
                Err(_) => continue,
            };
            tested += 1;
            let d_in = (-t.gauge_grad(&state.p).unwrap()).normalize();
            let d_out = (-t.gauge_grad(&next.p).unwrap()).normalize();
            let nu = k.gauge_grad(&next.q).unwrap().normalize();
            let mirrored = &d_in - &nu * (2.0 * d_in.dot(&nu));
            assert!(
                (&d_out - &mirrored).norm() <= 1e-9,
                "specular law violated by {:.2e}",
                (&d_out - &mirrored).norm()
            );
        }
    }

    #[test]
    fn two_bounce_orbit_on_the_disk_has_length_four() {
        let k = disk(1.0);
        let t = disk(1.0);
        let cfg = OrbitSearchConfig::default();
        let orbit = shortest_orbit_direct(&k, &t, 2, &cfg).unwrap();
        assert_relative_eq!(orbit.length, 4.0, max_relative = 1e-8);
        assert!(orbit.closure_error <= 1e-6);
        // Antipodal contact points.
        assert_abs_diff_eq!(
            (&orbit.points[0] + &orbit.points[1]).norm(),
            0.0,
            epsilon = 1e-6
        );
    }

    #[test]
    fn two_bounce_scales_with_both_radii() {
        let cfg = OrbitSearchConfig::default();
        let orbit =
            shortest_orbit_direct(&disk(1.5), &disk(0.5), 2, &cfg).unwrap();
        assert_relative_eq!(orbit.length, 4.0 * 1.5 * 0.5, max_relative = 1e-8);
    }

    #[test]
    fn ellipse_major_axis_orbit_is_found_among_period_two() {
        // Critical 2-orbits of the ellipse lie on the axes; the minor one
        // is shortest (the width chord).
        let k = ConvexBody::ellipsoid(DMatrix::from_diagonal(&dvector![4.0, 1.0])).unwrap();
        let t = disk(1.0);
        let cfg = OrbitSearchConfig {
            starts: 24,
            ..OrbitSearchConfig::default()
        };
        let orbit = shortest_orbit_direct(&k, &t, 2, &cfg).unwrap();
        assert_relative_eq!(orbit.length, 4.0, max_relative = 1e-7);
        for q in &orbit.points {
            assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn triangle_orbit_on_the_disk_is_longer_than_the_diameter() {
        let k = disk(1.0);
        let t = disk(1.0);
        let cfg = OrbitSearchConfig::default();
        let m3 = shortest_orbit_direct(&k, &t, 3, &cfg).unwrap();
        // Inscribed equilateral triangle: perimeter 3 sqrt(3).
        assert_relative_eq!(m3.length, 3.0 * 3.0_f64.sqrt(), max_relative = 1e-6);
        let best = shortest_orbit_over_m(&k, &t, 2..=4, &cfg).unwrap();
        assert_relative_eq!(best.length, 4.0, max_relative = 1e-7);
        assert_eq!(best.m, 2);
    }

    #[test]
    fn width_formula_matches_the_direct_search() {
        let k = ConvexBody::ellipsoid(DMatrix::from_diagonal(&dvector![4.0, 1.0])).unwrap();
        let t = disk(1.0);
        let w = t_width_two_bounce(&k, &t).unwrap();
        assert_relative_eq!(w, 4.0, max_relative = 1e-6);
        let ball = disk(0.75);
        assert_relative_eq!(
            t_width_two_bounce(&ball, &t).unwrap(),
            3.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn gliding_ratio_is_one_on_matched_disks() {
        let k = disk(1.0);
        let t = disk(1.0);
        let state = BilliardState::new(&k, &t, dvector![1.0, 0.0], dvector![0.0, 1.0]).unwrap();
        let (on_a, ratio) = gliding_check(&k, &t, &state).unwrap();
        assert!(on_a);
        assert_relative_eq!(ratio, 1.0, max_relative = 1e-12);
        let off = BilliardState::new(&k, &t, dvector![1.0, 0.0], dvector![1.0, 0.0]).unwrap();
        let (on_a2, _) = gliding_check(&k, &t, &off).unwrap();
        assert!(!on_a2);
    }

    #[test]
    fn orbit_search_rejects_bad_bounce_counts() {
        let cfg = OrbitSearchConfig::default();
        assert!(matches!(
            shortest_orbit_direct(&disk(1.0), &disk(1.0), 1, &cfg),
            Err(BilliardError::BadBounceCount(1))
        ));
    }
}

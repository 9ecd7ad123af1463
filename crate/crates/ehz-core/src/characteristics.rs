//! Dictionary between action-normalized loops and closed characteristics
//! on the boundary of the domain.
//!
//! A minimizer z of the dual action with multipliers (lambda, alpha)
//! satisfies lambda*Jz + alpha in the subdifferential of h^2 at zdot,
//! which places the rescaled curve
//!
//!     gamma(t) = sqrt(pi / (2 lambda)) * (lambda * J z(t) + alpha)
//!
//! on the boundary of the domain with A(gamma) = (pi/2) lambda, the
//! capacity value. The inverse direction subtracts the mean and undoes the
//! scaling. For a product domain K x T the curve alternates between
//! straight flight legs in K (momentum parked on the boundary of T) and
//! momentum sweeps across T (position parked on the boundary of K);
//! extracting that alternation recovers the billiard data: bounce points,
//! leg momenta, and the h_T-length of the bounce polygon.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bodies::LagrangianProduct;
use crate::capacity::ConvexDomain;
use crate::error::CharacteristicError;
use crate::linalg::{j_apply, j_inv_apply, mean_vector};
use crate::loops::FourierLoop;

/// Hard cap on |gauge - 1| along a reconstructed curve. Above this the
/// multipliers do not describe a characteristic at all and reconstruction
/// fails; below it the deviation is reported and left to the caller.
pub const BOUNDARY_DEV_CAP: f64 = 0.5;

/// A closed curve on the boundary of the domain, sampled on the uniform
/// grid t_i = 2 pi i / N, together with the multipliers that produced it.
/// `action` is the discrete symplectic action of the samples; for a curve
/// coming out of [`reconstruct`] it matches (pi/2) * lambda to quadrature
/// accuracy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Characteristic {
    #[serde(with = "crate::wire::vectors")]
    pub samples: Vec<DVector<f64>>,
    pub lambda: f64,
    #[serde(with = "crate::wire::vector")]
    pub alpha: DVector<f64>,
    pub action: f64,
    /// max_i |gauge(sample_i) - 1|, the on-boundary audit.
    pub boundary_dev_max: f64,
}

impl Characteristic {
    /// Symplectic area of the sample polygon, the shoelace sum
    /// (1/2) sum_i <J gamma_i, gamma_{i+1} - gamma_i>. Second-order
    /// accurate in the grid spacing; exact for polygons.
    pub fn polygon_action(samples: &[DVector<f64>]) -> f64 {
        let n = samples.len();
        let mut total = 0.0;
        for i in 0..n {
            let next = &samples[(i + 1) % n];
            total += 0.5 * j_apply(&samples[i]).dot(&(next - &samples[i]));
        }
        total
    }

    /// Wrap raw boundary samples (uniform grid) as a characteristic. The
    /// action is the polygonal one and the boundary deviation is audited
    /// against `sigma`.
    pub fn from_samples<D: ConvexDomain>(
        sigma: &D,
        samples: Vec<DVector<f64>>,
        lambda: f64,
        alpha: DVector<f64>,
    ) -> Result<Self, CharacteristicError> {
        if samples.len() < 4 {
            return Err(CharacteristicError::TooFewSamples {
                got: samples.len(),
                need: 4,
            });
        }
        let mut dev = 0.0f64;
        for s in &samples {
            dev = dev.max((sigma.gauge(s)? - 1.0).abs());
        }
        let action = Self::polygon_action(&samples);
        Ok(Characteristic {
            samples,
            lambda,
            alpha,
            action,
            boundary_dev_max: dev,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    /// Centered-difference velocities on the circular grid.
    pub fn velocities(&self) -> Vec<DVector<f64>> {
        let n = self.samples.len();
        let scale = n as f64 / (4.0 * std::f64::consts::PI);
        (0..n)
            .map(|i| (&self.samples[(i + 1) % n] - &self.samples[(i + n - 1) % n]) * scale)
            .collect()
    }
}

/// Map a loop with its KKT multipliers to the closed characteristic it
/// certifies. Samples are taken on the loop's own grid. The stored action
/// comes from the exact trapezoid rule on the samples (the integrand is a
/// trig polynomial below the grid's bandwidth), so `action` agreeing with
/// (pi/2)*lambda is a genuine identity check, not bookkeeping.
pub fn reconstruct<D: ConvexDomain>(
    sigma: &D,
    z: &FourierLoop,
    lambda: f64,
    alpha: &DVector<f64>,
) -> Result<Characteristic, CharacteristicError> {
    if !(lambda > 0.0) {
        return Err(CharacteristicError::NonPositiveLambda(lambda));
    }
    let dim = z.dim();
    if alpha.len() != dim || sigma.dim() != dim {
        return Err(CharacteristicError::Geometry(
            crate::error::GeometryError::DimensionMismatch {
                body: sigma.dim(),
                arg: dim,
            },
        ));
    }
    let scale = (std::f64::consts::PI / (2.0 * lambda)).sqrt();
    let n = z.n_samples();
    let dt = 2.0 * std::f64::consts::PI / n as f64;
    let mut samples = Vec::with_capacity(n);
    let mut action = 0.0;
    let mut dev = 0.0f64;
    for t in z.times() {
        let g = (j_apply(&z.eval(t)) * lambda + alpha) * scale;
        let gdot = j_apply(&z.deriv(t)) * (lambda * scale);
        action += 0.5 * j_apply(&g).dot(&gdot) * dt;
        dev = dev.max((sigma.gauge(&g)? - 1.0).abs());
        samples.push(g);
    }
    if dev > BOUNDARY_DEV_CAP {
        return Err(CharacteristicError::BoundaryDeviation {
            max_dev: dev,
            cap: BOUNDARY_DEV_CAP,
        });
    }
    Ok(Characteristic {
        samples,
        lambda,
        alpha: alpha.clone(),
        action,
        boundary_dev_max: dev,
    })
}

/// Inverse of [`reconstruct`]: subtract the sample mean, undo the
/// sqrt(2 pi d) scaling, rotate back through J^{-1}, and refit Fourier
/// coefficients at the full bandwidth the grid supports. With the speed
/// constant d = lambda/4 this recovers the source loop exactly (up to
/// roundoff); see [`estimate_d`] when d is unknown.
pub fn inverse_map(
    gamma: &Characteristic,
    d: f64,
) -> Result<FourierLoop, CharacteristicError> {
    if !(d > 0.0) {
        return Err(CharacteristicError::NonPositiveSpeed(d));
    }
    let n = gamma.samples.len();
    if n < 5 {
        return Err(CharacteristicError::TooFewSamples { got: n, need: 5 });
    }
    let mean = mean_vector(&gamma.samples);
    let scale = 1.0 / (2.0 * std::f64::consts::PI * d).sqrt();
    let z_samples: Vec<DVector<f64>> = gamma
        .samples
        .iter()
        .map(|g| j_inv_apply(&((g - &mean) * scale)))
        .collect();
    let modes = (n - 1) / 2;
    Ok(FourierLoop::fit_from_samples(
        &z_samples,
        modes,
        n.max(4 * modes + 1),
    ))
}

/// Speed constant of the characteristic parameterization, recovered from
/// the data as the mean over samples of |gamma_dot| / |2 g grad g|, the
/// ratio between the observed velocity and the normal-cone field it is
/// proportional to. Samples where the gauge gradient is unavailable or
/// degenerate are skipped.
pub fn estimate_d<D: ConvexDomain>(
    sigma: &D,
    gamma: &Characteristic,
) -> Result<f64, CharacteristicError> {
    let n = gamma.samples.len();
    if n < 5 {
        return Err(CharacteristicError::TooFewSamples { got: n, need: 5 });
    }
    let vels = gamma.velocities();
    let mut sum = 0.0;
    let mut used = 0usize;
    for (s, v) in gamma.samples.iter().zip(&vels) {
        let speed = v.norm();
        if speed == 0.0 {
            continue;
        }
        let (g, grad) = match (sigma.gauge(s), sigma.gauge_grad(s)) {
            (Ok(g), Ok(grad)) => (g, grad),
            _ => continue,
        };
        let denom = 2.0 * g * grad.norm();
        if denom <= 1e-14 {
            continue;
        }
        sum += speed / denom;
        used += 1;
    }
    if used == 0 {
        return Err(CharacteristicError::SegmentStructure(
            "no sample admitted a gauge gradient; cannot estimate the speed constant".into(),
        ));
    }
    Ok(sum / used as f64)
}

/// Largest angle (radians) between the finite-difference velocity and the
/// ray J * grad g(gamma) over the samples; zero for an exact characteristic
/// on a smooth domain. Samples with unresolvable velocity or gradient are
/// skipped.
pub fn tangency_angle_max<D: ConvexDomain>(
    sigma: &D,
    gamma: &Characteristic,
) -> Result<f64, CharacteristicError> {
    let vels = gamma.velocities();
    let vmax = vels.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Err(CharacteristicError::SegmentStructure(
            "curve has zero velocity everywhere".into(),
        ));
    }
    let mut worst = 0.0f64;
    for (s, v) in gamma.samples.iter().zip(&vels) {
        let speed = v.norm();
        if speed < 1e-8 * vmax {
            continue;
        }
        let grad = match sigma.gauge_grad(s) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let dir = j_apply(&grad);
        let dn = dir.norm();
        if dn <= 1e-14 {
            continue;
        }
        let cosang = (v.dot(&dir) / (speed * dn)).clamp(-1.0, 1.0);
        worst = worst.max(cosang.acos());
    }
    Ok(worst)
}

/// Product version of [`tangency_angle_max`]: the normal cone of K x T at
/// a mixed-boundary point is spanned by the two factor normals, so the
/// velocity is measured against the cone spanned by J(grad g_K, 0) and
/// J(0, grad g_T) rather than a single ray. Transition samples, whose
/// velocities mix the two legs, then count as tangent instead of as
/// spurious violations.
pub fn product_tangency_angle_max(
    product: &LagrangianProduct,
    gamma: &Characteristic,
) -> Result<f64, CharacteristicError> {
    let n_half = product.half_dim();
    let vels = gamma.velocities();
    let vmax = vels.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Err(CharacteristicError::SegmentStructure(
            "curve has zero velocity everywhere".into(),
        ));
    }
    let mut worst = 0.0f64;
    for (s, v) in gamma.samples.iter().zip(&vels) {
        let speed = v.norm();
        if speed < 1e-6 * vmax {
            continue;
        }
        let q = s.rows(0, n_half).into_owned();
        let p = s.rows(n_half, n_half).into_owned();
        let (gk, gt) = match (product.k().gauge_grad(&q), product.t().gauge_grad(&p)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let mut na = DVector::zeros(2 * n_half);
        na.rows_mut(0, n_half).copy_from(&gk);
        let mut nb = DVector::zeros(2 * n_half);
        nb.rows_mut(n_half, n_half).copy_from(&gt);
        let a = j_apply(&na);
        let b = j_apply(&nb);
        let residual = (cone_residual(v, &a, &b) / speed).min(1.0);
        worst = worst.max(residual.asin());
    }
    Ok(worst)
}

/// Distance from v to the cone {x a + y b : x, y >= 0}: the unconstrained
/// 2x2 least-squares solve, with negative weights clamped to the nearer
/// edge ray.
fn cone_residual(v: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ray = |w: &DVector<f64>| -> f64 {
        let ww = w.dot(w);
        if ww <= 1e-28 {
            return v.norm();
        }
        let c = (v.dot(w) / ww).max(0.0);
        (v - w * c).norm()
    };
    let (aa, ab, bb) = (a.dot(a), a.dot(b), b.dot(b));
    let det = aa * bb - ab * ab;
    if det <= 1e-14 * aa * bb {
        return ray(a).min(ray(b));
    }
    let (va, vb) = (v.dot(a), v.dot(b));
    let x = (bb * va - ab * vb) / det;
    let y = (aa * vb - ab * va) / det;
    if x >= 0.0 && y >= 0.0 {
        (v - a * x - b * y).norm()
    } else {
        ray(a).min(ray(b))
    }
}

/// Detection thresholds for [`extract_bounces`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BounceThresholds {
    /// A factor counts as parked at a sample when its speed is below this
    /// fraction of the largest phase-space speed.
    pub speed_frac: f64,
    /// Same-type segments separated by at most this many grid cells merge
    /// into one.
    pub merge_cells: usize,
    /// Precondition band: the characteristic's boundary deviation must not
    /// exceed this for extraction to be meaningful.
    pub boundary_tol: f64,
    /// Orthogonality band for the gliding classification, applied to the
    /// normalized factor gauge gradients.
    pub gliding_dot: f64,
}

impl Default for BounceThresholds {
    fn default() -> Self {
        BounceThresholds {
            speed_frac: 0.05,
            merge_cells: 2,
            boundary_tol: 0.25,
            gliding_dot: 0.05,
        }
    }
}

/// How the extracted curve relates to the billiard dichotomy: finitely
/// many proper bounces, an everywhere-gliding motion along the set where
/// the factor normals are orthogonal, or neither. The last is a reported
/// outcome, not an error; it is the expected answer for nonsmooth factors
/// and the signature of numerical failure for smooth ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryClass {
    Proper { bounces: usize },
    Gliding,
    MixedUndetermined,
}

/// Bounce skeleton of a characteristic on a product domain.
///
/// `bounce_points[j]` lies on the boundary of K and `momenta[j]` on the
/// boundary of T; the leg from bounce j to bounce j+1 (cyclically) is
/// straight with momentum `momenta[j]`, which is the h_T-argmax of the leg
/// vector. Points are stored in the orientation that makes
/// `length = sum_j h_T(q_{j+1} - q_j)` equal the action of the source
/// characteristic; this is the reverse of the curve's own time order,
/// whose legs run against the momentum field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilliardTrajectory {
    #[serde(with = "crate::wire::vectors")]
    pub bounce_points: Vec<DVector<f64>>,
    #[serde(with = "crate::wire::vectors")]
    pub momenta: Vec<DVector<f64>>,
    /// h_T-length of the bounce polygon; 0 when fewer than two bounce
    /// points were found (gliding or undetermined curves).
    pub length: f64,
    pub classification: TrajectoryClass,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum CellKind {
    /// q parked on the boundary of K, momentum sweeping across T.
    Bounce,
    /// p parked on the boundary of T, position flying straight in K.
    Flight,
    /// Neither factor parked: the corner cells between segments.
    Transition,
}

#[derive(Clone, Copy, Debug)]
struct Run {
    kind: CellKind,
    start: usize,
    len: usize,
}

/// Split the time grid of a product characteristic into flight and bounce
/// segments and read off the billiard data. Segment detection thresholds
/// on the factor speeds; the classification follows the proper/gliding
/// dichotomy with "mixed, undetermined" as the honest third outcome.
pub fn extract_bounces(
    gamma: &Characteristic,
    product: &LagrangianProduct,
    tol: &BounceThresholds,
) -> Result<BilliardTrajectory, CharacteristicError> {
    let n = gamma.samples.len();
    if n < 8 {
        return Err(CharacteristicError::TooFewSamples { got: n, need: 8 });
    }
    let n_half = product.half_dim();
    if gamma.dim() != 2 * n_half {
        return Err(CharacteristicError::Geometry(
            crate::error::GeometryError::DimensionMismatch {
                body: 2 * n_half,
                arg: gamma.dim(),
            },
        ));
    }
    if gamma.boundary_dev_max > tol.boundary_tol {
        return Err(CharacteristicError::BoundaryDeviation {
            max_dev: gamma.boundary_dev_max,
            cap: tol.boundary_tol,
        });
    }

    let vels = gamma.velocities();
    let vmax = vels.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Err(CharacteristicError::SegmentStructure(
            "curve has zero velocity everywhere".into(),
        ));
    }
    let kinds: Vec<CellKind> = vels
        .iter()
        .map(|v| {
            let qdot = v.rows(0, n_half).norm();
            let pdot = v.rows(n_half, n_half).norm();
            let q_parked = qdot < tol.speed_frac * vmax;
            let p_parked = pdot < tol.speed_frac * vmax;
            match (q_parked, p_parked) {
                (true, false) => CellKind::Bounce,
                (false, true) => CellKind::Flight,
                // Both parked would mean the curve stalls; neither parked
                // is the corner case. Both go to the separator bucket.
                _ => CellKind::Transition,
            }
        })
        .collect();

    let mut runs = merge_runs(circular_runs(&kinds), n, tol.merge_cells);
    // Start the cyclic walk at a bounce so flight j is the leg leaving
    // bounce j; the pairing below relies on it.
    if let Some(pos) = runs.iter().position(|r| r.kind == CellKind::Bounce) {
        runs.rotate_left(pos);
    }

    // Gliding test, evaluated on the whole grid: factor normals stay
    // orthogonal (the set A of the dichotomy). Checked regardless of the
    // segment structure so a spurious segmentation cannot mask a glider.
    let gliding = all_samples_orthogonal(gamma, product, n_half, tol.gliding_dot);

    let bounce_runs: Vec<&Run> = runs.iter().filter(|r| r.kind == CellKind::Bounce).collect();
    let flight_runs: Vec<&Run> = runs.iter().filter(|r| r.kind == CellKind::Flight).collect();

    // Trimmed central mean of the parked coordinate on each segment,
    // projected back to the factor boundary.
    let project_k = |y: DVector<f64>| -> Result<DVector<f64>, CharacteristicError> {
        let g = product.k().gauge(&y)?;
        if g <= 1e-12 {
            return Err(CharacteristicError::SegmentStructure(
                "bounce segment collapsed to the origin of K".into(),
            ));
        }
        Ok(y / g)
    };
    let project_t = |y: DVector<f64>| -> Result<DVector<f64>, CharacteristicError> {
        let g = product.t().gauge(&y)?;
        if g <= 1e-12 {
            return Err(CharacteristicError::SegmentStructure(
                "flight segment collapsed to the origin of T".into(),
            ));
        }
        Ok(y / g)
    };

    let mut bounce_pts_time = Vec::with_capacity(bounce_runs.len());
    for r in &bounce_runs {
        let y = segment_mean(&gamma.samples, r, 0, n_half);
        bounce_pts_time.push(project_k(y)?);
    }
    let mut momenta_time = Vec::with_capacity(flight_runs.len());
    for r in &flight_runs {
        let y = segment_mean(&gamma.samples, r, n_half, n_half);
        momenta_time.push(project_t(y)?);
    }

    // Alternation: walk the merged runs cyclically and require strict
    // bounce/flight interleaving with equal counts.
    let alternating = !runs.is_empty()
        && runs.len() % 2 == 0
        && runs
            .iter()
            .zip(runs.iter().cycle().skip(1))
            .take(runs.len())
            .all(|(a, b)| a.kind != b.kind);

    // A proper trajectory touches both factor boundaries simultaneously
    // only at the corners, so the overlap set must stay confined to
    // isolated cells. The band scales with the achieved boundary accuracy.
    let overlap_band = (2.0 * gamma.boundary_dev_max).max(0.01).min(tol.boundary_tol);
    let overlap_ok = overlap_runs_short(
        gamma,
        product,
        n_half,
        overlap_band,
        1 + tol.merge_cells,
    )?;

    let m = bounce_pts_time.len();
    let classification = if alternating && m >= 2 && m == momenta_time.len() && overlap_ok {
        TrajectoryClass::Proper { bounces: m }
    } else if gliding {
        TrajectoryClass::Gliding
    } else {
        TrajectoryClass::MixedUndetermined
    };

    // Store in length-positive orientation: reversed time order, with
    // momenta re-paired so momenta[j] drives the leg j -> j+1. In time
    // order flight f_i runs bounce i -> i+1; the stored leg Q_j -> Q_{j+1}
    // retraces f_{m-2-j} (mod m) backward, and the parked momentum of that
    // flight is exactly the h_T-argmax of the stored leg vector.
    let mut bounce_points: Vec<DVector<f64>> = bounce_pts_time.clone();
    bounce_points.reverse();
    let momenta: Vec<DVector<f64>> = if m >= 1 && momenta_time.len() == m {
        (0..m)
            .map(|j| momenta_time[(2 * m - 2 - j) % m].clone())
            .collect()
    } else {
        momenta_time
    };

    let length = if bounce_points.len() >= 2 {
        let mut total = 0.0;
        for j in 0..bounce_points.len() {
            let next = &bounce_points[(j + 1) % bounce_points.len()];
            total += product.t().support(&(next - &bounce_points[j]));
        }
        total
    } else {
        0.0
    };

    Ok(BilliardTrajectory {
        bounce_points,
        momenta,
        length,
        classification,
    })
}

/// Circular run-length encoding of the cell kinds, with runs listed in
/// time order of their starting cell. A grid that is entirely one kind
/// comes back as a single full-circle run.
fn circular_runs(kinds: &[CellKind]) -> Vec<Run> {
    let n = kinds.len();
    let first_change = (1..n).find(|&i| kinds[i] != kinds[0]);
    let Some(origin_off) = first_change else {
        return vec![Run {
            kind: kinds[0],
            start: 0,
            len: n,
        }];
    };
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        let start = (origin_off + i) % n;
        let kind = kinds[start];
        let mut len = 1;
        while len < n - i && kinds[(start + len) % n] == kind {
            len += 1;
        }
        runs.push(Run { kind, start, len });
        i += len;
    }
    runs
}

/// Drop the transition runs and merge same-kind cyclic neighbors whose
/// gap is at most `merge_cells`. Gaps come from transition cells and from
/// detection flicker inside a long segment.
fn merge_runs(raw: Vec<Run>, n: usize, merge_cells: usize) -> Vec<Run> {
    let mut typed: Vec<Run> = raw
        .into_iter()
        .filter(|r| r.kind != CellKind::Transition)
        .collect();
    'scan: loop {
        let len = typed.len();
        if len <= 1 {
            return typed;
        }
        for i in 0..len {
            let j = (i + 1) % len;
            let a = typed[i];
            let b = typed[j];
            let gap = (b.start + n - (a.start + a.len) % n) % n;
            if a.kind == b.kind && gap <= merge_cells {
                let total = a.len + gap + b.len;
                if total >= n || len == 1 {
                    return vec![Run {
                        kind: a.kind,
                        start: a.start,
                        len: n,
                    }];
                }
                typed[i] = Run {
                    kind: a.kind,
                    start: a.start,
                    len: total,
                };
                typed.remove(j);
                continue 'scan;
            }
        }
        return typed;
    }
}

/// Mean of rows [offset, offset+len) of the samples over the central part
/// of the run (a quarter trimmed from each end, at least one cell kept).
fn segment_mean(samples: &[DVector<f64>], run: &Run, offset: usize, len: usize) -> DVector<f64> {
    let n = samples.len();
    let trim = run.len / 4;
    let lo = run.start + trim;
    let count = (run.len - 2 * trim).max(1);
    let mut acc = DVector::zeros(len);
    for k in 0..count {
        acc += samples[(lo + k) % n].rows(offset, len).into_owned();
    }
    acc / count as f64
}

fn all_samples_orthogonal(
    gamma: &Characteristic,
    product: &LagrangianProduct,
    n_half: usize,
    band: f64,
) -> bool {
    gamma.samples.iter().all(|s| {
        let q = s.rows(0, n_half).into_owned();
        let p = s.rows(n_half, n_half).into_owned();
        match (product.k().gauge_grad(&q), product.t().gauge_grad(&p)) {
            (Ok(a), Ok(b)) => {
                let na = a.norm();
                let nb = b.norm();
                na > 0.0 && nb > 0.0 && (a.dot(&b) / (na * nb)).abs() <= band
            }
            _ => false,
        }
    })
}

/// True when every maximal circular run of cells lying on both factor
/// boundaries simultaneously has length at most `max_run`.
fn overlap_runs_short(
    gamma: &Characteristic,
    product: &LagrangianProduct,
    n_half: usize,
    band: f64,
    max_run: usize,
) -> Result<bool, CharacteristicError> {
    let n = gamma.samples.len();
    let mut overlap = Vec::with_capacity(n);
    for s in &gamma.samples {
        let q = s.rows(0, n_half).into_owned();
        let p = s.rows(n_half, n_half).into_owned();
        let on_k = product.k().gauge(&q)? >= 1.0 - band;
        let on_t = product.t().gauge(&p)? >= 1.0 - band;
        overlap.push(on_k && on_t);
    }
    if overlap.iter().all(|&b| b) {
        return Ok(false);
    }
    let mut longest = 0usize;
    let mut i = 0usize;
    // Start the scan at a non-overlap cell so circular runs are whole.
    let start = overlap.iter().position(|&b| !b).unwrap();
    while i < n {
        let idx = (start + i) % n;
        if overlap[idx] {
            let mut len = 0;
            while i + len < n && overlap[(start + i + len) % n] {
                len += 1;
            }
            longest = longest.max(len);
            i += len;
        } else {
            i += 1;
        }
    }
    Ok(longest <= max_run)
}

//! Capacity of a convex body in phase space, as the minimum of the Clarke
//! dual action over closed loops.
//!
//! For a bounded convex Sigma in R^{2n} with the origin interior, the
//! capacity computed here is
//!
//!   c(Sigma) = (pi/2) * min { I(z) : z mean-zero, 2pi-periodic, A(z) = 1 },
//!   I(z) = integral_0^{2pi} h_Sigma^2(z'(t)) dt,
//!   A(z) = 1/2 integral_0^{2pi} <J z, z'> dt,
//!
//! and the minimizing loop reconstructs a closed characteristic of minimal
//! action on the boundary (see the `characteristics` module). Loops are
//! truncated Fourier series, so the reported value is the minimum over a
//! finite-dimensional subspace: an upper bound for the true capacity up to
//! quadrature error, which is estimated and reported.

mod domain;
mod kkt;
mod solver;

pub use domain::ConvexDomain;
pub use kkt::{kkt_residual, ZERO_BAND_REL};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{metrics, ConvexBody, LagrangianProduct};
use crate::error::SolverError;
use crate::loops::FourierLoop;

use solver::{Engine, StartOutcome};

/// Relative smoothing schedule for domains whose minimizers ride support
/// kinks (products, hard polytopes); each level multiplies the loop's top
/// speed. The final polish always runs on the exact functional.
const SMOOTHING_STAGES: &[f64] = &[0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3];

/// Knobs for `minimize_capacity`. The defaults suit bodies of diameter
/// around 1..10 in dimensions 2..6.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Fourier truncation order M.
    pub modes: usize,
    /// Quadrature grid size N; needs N >= 4M + 1.
    pub samples: usize,
    /// Independent multistart count.
    pub starts: usize,
    /// Base seed; start k derives its own stream deterministically.
    pub seed: u64,
    /// Relative objective decrease under which an iterate counts as
    /// plateaued.
    pub tol_obj: f64,
    /// Acceptable KKT residual (RMS distance to the subdifferential
    /// inclusion, normalized by lambda).
    pub tol_kkt: f64,
    /// Iteration cap per start.
    pub max_iter: usize,
    /// Re-polish the best minimizer with doubled modes and grid.
    pub refine: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            modes: 24,
            samples: 128,
            starts: 16,
            seed: 0,
            tol_obj: 1e-10,
            tol_kkt: 1e-4,
            max_iter: 20_000,
            refine: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.modes == 0 {
            return Err(SolverError::InvalidConfig("modes must be at least 1".into()));
        }
        if self.samples < 4 * self.modes + 1 {
            return Err(SolverError::InvalidConfig(format!(
                "samples = {} undersamples {} modes; need at least 4M + 1 = {}",
                self.samples,
                self.modes,
                4 * self.modes + 1
            )));
        }
        if self.starts == 0 {
            return Err(SolverError::InvalidConfig("starts must be at least 1".into()));
        }
        if !(self.tol_obj > 0.0) || !(self.tol_kkt > 0.0) {
            return Err(SolverError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Output of `minimize_capacity`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Capacity estimate (pi/2 times lambda), in symplectic-area units.
    pub value: f64,
    /// The minimizing loop, rescaled so A = 1.
    #[serde(rename = "loop")]
    pub minimizer: FourierLoop,
    /// I(minimizer); the KKT multiplier.
    pub lambda: f64,
    /// Constant vector of the first-order inclusion.
    #[serde(with = "crate::wire::vector")]
    pub alpha: DVector<f64>,
    /// RMS distance to the subdifferential inclusion, normalized by lambda.
    pub kkt_residual: f64,
    pub starts_used: usize,
    /// Total descent iterations across starts (plus the refine pass).
    pub iterations: usize,
    pub converged: bool,
    /// Heuristic absolute uncertainty: quadrature gap plus refinement
    /// movement plus a relative floor.
    pub value_tol: f64,
    /// (pi/2) |I at 2N - I at N| on the final loop.
    pub quadrature_gap: f64,
    pub refined: bool,
    /// Translation subtracted from the input before solving, when a
    /// recentering wrapper was used.
    #[serde(with = "crate::wire::opt_vector")]
    pub recenter: Option<DVector<f64>>,
    /// Other converged minimizers with the same value but a different loop
    /// (capacity carriers need not be unique).
    pub alt_minimizers: Vec<FourierLoop>,
}

/// Exact symplectic action A(z) from the loop coefficients.
pub fn symplectic_action(z: &FourierLoop) -> f64 {
    z.action()
}

/// Dual action I(z) = integral h^2(z') dt by the periodic trapezoid rule on
/// the loop's own grid.
pub fn dual_action<D: ConvexDomain>(domain: &D, z: &FourierLoop) -> f64 {
    assert_eq!(domain.dim(), z.dim(), "domain and loop dimension mismatch");
    let w = 2.0 * std::f64::consts::PI / z.n_samples() as f64;
    z.sample_deriv()
        .iter()
        .map(|v| {
            let h = domain.support(v);
            h * h
        })
        .sum::<f64>()
        * w
}

/// Dual action at the loop's grid and at a doubled grid; the difference is
/// a Richardson-style quadrature error estimate.
pub fn dual_action_refined<D: ConvexDomain>(domain: &D, z: &FourierLoop) -> (f64, f64) {
    let coarse = dual_action(domain, z);
    let fine_loop = z.clone().pad(z.modes(), 2 * z.n_samples());
    let fine = dual_action(domain, &fine_loop);
    (coarse, fine)
}

/// RMS distance between two loops, minimized over time shifts of the first;
/// used to tell genuinely different minimizers apart from reparametrized
/// copies of the same one.
fn loop_distance(a: &FourierLoop, b: &FourierLoop) -> f64 {
    let n = 64usize;
    let times: Vec<f64> = (0..n)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
        .collect();
    let b_pts: Vec<DVector<f64>> = times.iter().map(|&t| b.eval(t)).collect();
    let mut best = f64::INFINITY;
    for shift in 0..n {
        let s = times[shift];
        let mut sum = 0.0;
        for (i, &t) in times.iter().enumerate() {
            sum += (a.eval(t + s) - &b_pts[i]).norm_squared();
        }
        best = best.min((sum / n as f64).sqrt());
    }
    best
}

fn draw_start(rng: &mut ChaCha8Rng, dim: usize, cfg: &SolverConfig) -> Option<DVector<f64>> {
    for _ in 0..50 {
        let z = FourierLoop::random(rng, dim, cfg.modes, 3, cfg.samples);
        if let Some(z) = z.normalized_action(1.0) {
            let d = dim;
            let mut x = DVector::zeros(2 * cfg.modes * d);
            for k0 in 0..cfg.modes {
                x.rows_mut(2 * k0 * d, d).copy_from(z.coeff_cos(k0 + 1));
                x.rows_mut((2 * k0 + 1) * d, d).copy_from(z.coeff_sin(k0 + 1));
            }
            return Some(x);
        }
    }
    None
}

/// Multistart minimization of the dual-action Rayleigh quotient.
///
/// Pre: dimension even, origin interior to the domain (use
/// `capacity_of_body` / `capacity_of_product` for automatic recentering).
/// Deterministic for a fixed config. Starts run in parallel; the merge
/// takes the smallest value, breaking ties by the lower KKT residual.
pub fn minimize_capacity<D: ConvexDomain + Sync>(
    domain: &D,
    config: &SolverConfig,
) -> Result<CapacityResult, SolverError> {
    config.validate()?;
    let dim = domain.dim();
    if dim % 2 != 0 {
        return Err(SolverError::OddDimension(dim));
    }
    let margin = domain.origin_margin(64);
    if margin <= 0.0 {
        return Err(SolverError::InvalidConfig(format!(
            "origin is not interior to the domain (support margin {margin:.3e}); recenter first"
        )));
    }

    let outcomes: Vec<Result<Option<StartOutcome>, SolverError>> = (0..config.starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                config.seed ^ (s as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let Some(x0) = draw_start(&mut rng, dim, config) else {
                return Ok(None);
            };
            let engine = Engine::new(domain, config.modes, config.samples);
            let run = if domain.needs_smoothing() {
                engine.minimize_continued(
                    x0,
                    SMOOTHING_STAGES,
                    (config.max_iter / 8).max(300),
                    config.max_iter,
                    config.tol_obj,
                    config.tol_kkt,
                )
            } else {
                engine.minimize(x0, config.max_iter, config.tol_obj, config.tol_kkt)
            };
            run.map(Some)
        })
        .collect();

    let mut runs: Vec<StartOutcome> = Vec::with_capacity(config.starts);
    let mut failed_starts = 0usize;
    for o in outcomes {
        match o? {
            Some(run) => runs.push(run),
            None => failed_starts += 1,
        }
    }
    if runs.is_empty() {
        return Err(SolverError::NoPositiveActionStart(failed_starts * 50));
    }

    let mut iterations: usize = runs.iter().map(|r| r.iterations).sum();
    let best_idx = (0..runs.len())
        .min_by(|&i, &j| {
            (runs[i].i_value, runs[i].kkt_residual)
                .partial_cmp(&(runs[j].i_value, runs[j].kkt_residual))
                .unwrap()
        })
        .unwrap();

    // Capacity carriers are not necessarily unique: collect converged runs
    // at the same value that trace a genuinely different loop.
    let best_i = runs[best_idx].i_value;
    let scale = runs[best_idx]
        .z
        .sample()
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max);
    let mut alt_minimizers = Vec::new();
    for (idx, run) in runs.iter().enumerate() {
        if idx == best_idx || !run.converged {
            continue;
        }
        if (run.i_value - best_i).abs() <= 1e-3 * best_i
            && loop_distance(&run.z, &runs[best_idx].z) > 0.05 * scale
            && alt_minimizers.len() < 3
        {
            alt_minimizers.push(run.z.clone());
        }
    }

    let base = &runs[best_idx];

    // Optional refinement: double modes and grid, re-polish from the padded
    // minimizer. The refined space contains the base space, so the value
    // cannot move up by more than the line-search tolerance.
    let mut final_run: StartOutcome = StartOutcome {
        z: base.z.clone(),
        i_value: base.i_value,
        iterations: 0,
        converged: base.converged,
        kkt_residual: base.kkt_residual,
        alpha: base.alpha.clone(),
    };
    let mut refine_gap = 0.0;
    if config.refine {
        let modes2 = 2 * config.modes;
        let samples2 = (2 * config.samples).max(4 * modes2 + 1);
        let engine = Engine::new(domain, modes2, samples2);
        let padded = base.z.clone().pad(modes2, samples2);
        let x0 = engine.pack(&padded);
        let polished = if domain.needs_smoothing() {
            // A short anneal tail lets the doubled subspace re-carve the
            // kink arcs instead of inheriting the coarse grid's texture.
            engine.minimize_continued(
                x0,
                &SMOOTHING_STAGES[3..],
                (config.max_iter / 8).max(300),
                config.max_iter,
                config.tol_obj,
                config.tol_kkt,
            )?
        } else {
            engine.minimize(x0, config.max_iter, config.tol_obj, config.tol_kkt)?
        };
        iterations += polished.iterations;
        refine_gap =
            (std::f64::consts::PI / 2.0) * (polished.i_value - base.i_value).abs();
        final_run = polished;
    }

    let lambda = final_run.i_value;
    let value = (std::f64::consts::PI / 2.0) * lambda;
    let (i_coarse, i_fine) = dual_action_refined(domain, &final_run.z);
    let quadrature_gap = (std::f64::consts::PI / 2.0) * (i_fine - i_coarse).abs();
    let value_tol = quadrature_gap + refine_gap + 1e-5 * value.abs();

    Ok(CapacityResult {
        value,
        minimizer: final_run.z,
        lambda,
        alpha: final_run.alpha,
        kkt_residual: final_run.kkt_residual,
        starts_used: runs.len(),
        iterations,
        converged: final_run.converged,
        value_tol,
        quadrature_gap,
        refined: config.refine,
        recenter: None,
        alt_minimizers,
    })
}

/// Capacity of a body in phase space, recentered to its Chebyshev center
/// first (the capacity is translation invariant; the dual-action functional
/// is not defined unless the origin is interior). The applied translation
/// is recorded in the result.
pub fn capacity_of_body(
    body: &ConvexBody,
    config: &SolverConfig,
) -> Result<CapacityResult, SolverError> {
    let (r, center) = metrics::inradius(body)?;
    if !(r > 0.0) {
        return Err(SolverError::Geometry(
            crate::error::GeometryError::InvalidBody("body has empty interior".into()),
        ));
    }
    let scale = center.norm().max(r);
    if center.norm() <= 1e-12 * scale {
        return minimize_capacity(body, config);
    }
    let shifted = body.clone().translate(-&center).map_err(SolverError::Geometry)?;
    let mut result = minimize_capacity(&shifted, config)?;
    result.recenter = Some(center);
    Ok(result)
}

/// Capacity of a Lagrangian product K x T, recentering each factor to its
/// own Chebyshev center. The recorded translation is (c_K, c_T).
pub fn capacity_of_product(
    product: &LagrangianProduct,
    config: &SolverConfig,
) -> Result<CapacityResult, SolverError> {
    let n = product.half_dim();
    let (rk, ck) = metrics::inradius(product.k())?;
    let (rt, ct) = metrics::inradius(product.t())?;
    if !(rk > 0.0) || !(rt > 0.0) {
        return Err(SolverError::Geometry(
            crate::error::GeometryError::InvalidBody("a factor has empty interior".into()),
        ));
    }
    let need_shift = ck.norm() > 1e-12 * ck.norm().max(rk) || ct.norm() > 1e-12 * ct.norm().max(rt);
    if !need_shift {
        return minimize_capacity(product, config);
    }
    let k = product.k().clone().translate(-&ck).map_err(SolverError::Geometry)?;
    let t = product.t().clone().translate(-&ct).map_err(SolverError::Geometry)?;
    let centered = LagrangianProduct::new(k, t).map_err(SolverError::Geometry)?;
    let mut result = minimize_capacity(&centered, config)?;
    let mut offset = DVector::zeros(2 * n);
    offset.rows_mut(0, n).copy_from(&ck);
    offset.rows_mut(n, n).copy_from(&ct);
    result.recenter = Some(offset);
    Ok(result)
}

/// Conformality report: the capacity of c Sigma against c^2 times the
/// capacity of Sigma, solved with identical configs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub factor: f64,
    pub value_base: f64,
    pub value_scaled: f64,
    /// |c(c Sigma) - c^2 c(Sigma)| / c(c Sigma).
    pub rel_error: f64,
}

pub fn capacity_homogeneity_check(
    body: &ConvexBody,
    factor: f64,
    config: &SolverConfig,
) -> Result<HomogeneityReport, SolverError> {
    assert!(factor > 0.0, "dilation factor must be positive");
    let base = capacity_of_body(body, config)?;
    let scaled_body = body.clone().dilate(factor).map_err(SolverError::Geometry)?;
    let scaled = capacity_of_body(&scaled_body, config)?;
    let expect = factor * factor * base.value;
    Ok(HomogeneityReport {
        factor,
        value_base: base.value,
        value_scaled: scaled.value,
        rel_error: (scaled.value - expect).abs() / scaled.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn quick_config() -> SolverConfig {
        SolverConfig {
            modes: 8,
            samples: 48,
            starts: 4,
            seed: 7,
            max_iter: 4000,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn dual_action_of_the_area_one_circle_on_the_disk() {
        // |z'| = 1/sqrt(pi) along the circle of area 1, h = |.|, so
        // I = 2 pi * (1/pi) = 2.
        let disk = ConvexBody::ball(2, 1.0);
        let z = FourierLoop::circle(2, 0, 1, 1.0 / std::f64::consts::PI.sqrt(), 64);
        assert_relative_eq!(dual_action(&disk, &z), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn dual_action_is_two_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let e = ConvexBody::ellipsoid(nalgebra::dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
        let z = FourierLoop::random(&mut rng, 2, 4, 3, 32);
        let i1 = dual_action(&e, &z);
        let i2 = dual_action(&e, &z.clone().scaled(2.5));
        assert_relative_eq!(i2, 2.5 * 2.5 * i1, max_relative = 1e-12);
        // Rayleigh invariance.
        let r1 = i1 / z.action();
        let r2 = i2 / z.clone().scaled(2.5).action();
        assert_relative_eq!(r1, r2, max_relative = 1e-12);
    }

    #[test]
    fn disk_capacity_is_pi_r_squared() {
        let disk = ConvexBody::ball(2, 1.0);
        let res = minimize_capacity(&disk, &quick_config()).unwrap();
        assert_relative_eq!(res.value, std::f64::consts::PI, max_relative = 1e-6);
        assert_abs_diff_eq!(res.minimizer.action(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(res.value, std::f64::consts::PI / 2.0 * res.lambda);
        assert!(res.converged);
        assert!(res.kkt_residual < 1e-4);
    }

    #[test]
    fn four_ball_capacity() {
        let ball = ConvexBody::ball(4, 1.0);
        let res = minimize_capacity(&ball, &quick_config()).unwrap();
        assert_relative_eq!(res.value, std::f64::consts::PI, max_relative = 1e-4);
    }

    #[test]
    fn rectangle_product_capacity_is_its_area() {
        // K x T with 1-dimensional factors IS a planar rectangle, and the
        // planar capacity is the area. The minimizing loop rides the kinks
        // of h (factor speeds park at zero on whole arcs), so this
        // exercises the annealed path.
        let prod =
            LagrangianProduct::new(ConvexBody::ball(1, 1.0), ConvexBody::ball(1, 1.0)).unwrap();
        let cfg = SolverConfig {
            modes: 16,
            samples: 80,
            starts: 3,
            seed: 11,
            max_iter: 8000,
            ..SolverConfig::default()
        };
        let r = minimize_capacity(&prod, &cfg).unwrap();
        assert_relative_eq!(r.value, 4.0, max_relative = 0.02);
        assert_abs_diff_eq!(r.minimizer.action(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn recentering_leaves_the_value_alone() {
        let disk = ConvexBody::ball(2, 1.0);
        let shifted = disk.clone().translate(nalgebra::dvector![0.4, -0.2]).unwrap();
        let base = capacity_of_body(&disk, &quick_config()).unwrap();
        let moved = capacity_of_body(&shifted, &quick_config()).unwrap();
        assert!(moved.recenter.is_some());
        assert_relative_eq!(base.value, moved.value, max_relative = 1e-5);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let disk = ConvexBody::ball(2, 1.0);
        let mut cfg = SolverConfig::default();
        cfg.samples = 10;
        assert!(matches!(
            minimize_capacity(&disk, &cfg),
            Err(SolverError::InvalidConfig(_))
        ));
        let odd = ConvexBody::ball(3, 1.0);
        assert!(matches!(
            minimize_capacity(&odd, &SolverConfig::default()),
            Err(SolverError::OddDimension(3))
        ));
    }
}

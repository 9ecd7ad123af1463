//! First-order certificate for dual-action minimizers.
//!
//! A loop z with A(z) = 1 minimizing I(z) = integral h^2(z') satisfies, for
//! lambda = I(z) and some constant vector alpha,
//!
//!   lambda J z(t) + alpha  in  subdiff h^2(z'(t))   for a.e. t.
//!
//! We measure how well a candidate satisfies this: alpha is fit by
//! alternating projection (project the left side onto the subdifferential
//! set at every sample, then re-center alpha as the mean offset), and the
//! residual is the RMS distance to the sets, normalized by lambda so the
//! number is scale-free.

use nalgebra::DVector;

use crate::error::SolverError;
use crate::linalg::j_apply;
use crate::loops::FourierLoop;

use super::domain::ConvexDomain;

/// Speeds below this fraction of the loop's peak speed are treated as zero
/// when deciding which branch of a product subdifferential applies. Product
/// minimizers spend whole segments with one factor velocity at zero (the
/// bounce phases), and resolving those segments against the exposed-face
/// subdifferential would misreport a kink as a violation.
pub const ZERO_BAND_REL: f64 = 1e-3;

/// Least-squares multiplier alpha and the normalized RMS residual of the
/// inclusion above. Expects A(z) = 1 (callers rescale first) and lambda > 0.
pub fn kkt_residual<D: ConvexDomain>(
    domain: &D,
    z: &FourierLoop,
    lambda: f64,
) -> Result<(f64, DVector<f64>), SolverError> {
    assert_eq!(domain.dim(), z.dim(), "domain and loop dimension mismatch");
    if !(lambda > 0.0) {
        return Err(SolverError::InvalidConfig(format!(
            "kkt residual needs lambda > 0, got {lambda}"
        )));
    }
    let dim = z.dim();
    let positions = z.sample();
    let speeds = z.sample_deriv();
    let n = positions.len();
    let vscale = speeds.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let band = ZERO_BAND_REL * vscale;
    let targets: Vec<DVector<f64>> = positions.iter().map(|zi| j_apply(zi) * lambda).collect();

    let mut alpha = DVector::zeros(dim);
    for _ in 0..8 {
        let mut mean = DVector::zeros(dim);
        for (v, y0) in speeds.iter().zip(&targets) {
            let (p, _) = domain.subdiff_project(v, &(y0 + &alpha), band)?;
            mean += p - y0;
        }
        mean /= n as f64;
        let moved = (&mean - &alpha).norm();
        alpha = mean;
        if moved <= 1e-13 * (1.0 + alpha.norm()) {
            break;
        }
    }

    let mut sum_sq = 0.0;
    for (v, y0) in speeds.iter().zip(&targets) {
        let (_, d) = domain.subdiff_project(v, &(y0 + &alpha), band)?;
        sum_sq += d * d;
    }
    let rms = (sum_sq / n as f64).sqrt();
    Ok((rms / lambda, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::ConvexBody;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_circle_on_the_ball_is_critical() {
        // For Sigma = B^2(1): the loop z = circle of area 1 has I(z) = 2 and
        // the inclusion 2 J z = 2 z' holds exactly (z' = J z on a circle).
        let ball = ConvexBody::ball(2, 1.0);
        let z = FourierLoop::circle(2, 0, 1, 1.0 / std::f64::consts::PI.sqrt(), 64);
        assert_abs_diff_eq!(z.action(), 1.0, epsilon = 1e-12);
        let (res, alpha) = kkt_residual(&ball, &z, 2.0).unwrap();
        assert!(res < 1e-10, "residual {res}");
        assert!(alpha.norm() < 1e-10, "alpha {alpha}");
    }

    #[test]
    fn four_dimensional_ball_circle_is_critical() {
        let ball = ConvexBody::ball(4, 1.0);
        let z = FourierLoop::circle(4, 0, 2, 1.0 / std::f64::consts::PI.sqrt(), 64);
        let (res, alpha) = kkt_residual(&ball, &z, 2.0).unwrap();
        assert!(res < 1e-10, "residual {res}");
        assert!(alpha.norm() < 1e-10);
    }

    #[test]
    fn non_critical_loop_has_positive_residual() {
        let ball = ConvexBody::ball(2, 1.0);
        // An ellipse-shaped loop is not a critical point of the ball problem.
        let mut a1 = DVector::zeros(2);
        let mut b1 = DVector::zeros(2);
        a1[0] = 0.9;
        b1[1] = 0.3;
        let z = FourierLoop::new(vec![a1], vec![b1], 64)
            .normalized_action(1.0)
            .unwrap();
        let lambda = super::super::dual_action(&ball, &z);
        let (res, _) = kkt_residual(&ball, &z, lambda).unwrap();
        assert!(res > 1e-3, "residual {res} should be clearly positive");
    }
}

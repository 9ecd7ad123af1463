//! Mean-zero closed loops in phase space as truncated Fourier series.
//!
//! A loop is z(t) = sum_{k=1}^{M} A_k cos(kt) + B_k sin(kt) with vector
//! coefficients in R^{2n}. Dropping the constant term builds the mean-zero
//! constraint of the dual-action loop space into the parameterization, and
//! periodicity is automatic. Each loop carries the quadrature grid size N
//! used when a functional of it must be integrated numerically; the
//! symplectic action itself never needs quadrature, since
//!
//!   A(z) = 1/2 integral <J z, z'> dt = pi * sum_k k <J A_k, B_k>
//!
//! is exact in the coefficients.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{j_apply, standard_normal};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierLoop {
    /// Cosine coefficients, `a[k-1]` belongs to frequency k.
    #[serde(with = "crate::wire::vectors")]
    a: Vec<DVector<f64>>,
    /// Sine coefficients, same layout.
    #[serde(with = "crate::wire::vectors")]
    b: Vec<DVector<f64>>,
    /// Quadrature grid size for sampled functionals of this loop.
    n_samples: usize,
}

impl FourierLoop {
    /// Assemble a loop from coefficient arrays (frequency k = index + 1).
    ///
    /// Panics if the arrays are empty, ragged, odd-dimensional, or if the
    /// grid is too coarse for the mode content (needs N >= 4M + 1, which
    /// oversamples the integrand h^2(z') of the dual action, not just z).
    pub fn new(a: Vec<DVector<f64>>, b: Vec<DVector<f64>>, n_samples: usize) -> Self {
        assert!(!a.is_empty() && a.len() == b.len(), "coefficient arrays must match");
        let dim = a[0].len();
        assert!(dim >= 2 && dim % 2 == 0, "loops live in R^{{2n}}, got dim {dim}");
        assert!(
            a.iter().chain(b.iter()).all(|c| c.len() == dim),
            "ragged coefficient arrays"
        );
        assert!(
            n_samples >= 4 * a.len() + 1,
            "grid of {} samples is too coarse for {} modes",
            n_samples,
            a.len()
        );
        FourierLoop { a, b, n_samples }
    }

    pub fn dim(&self) -> usize {
        self.a[0].len()
    }

    pub fn modes(&self) -> usize {
        self.a.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn coeff_cos(&self, k: usize) -> &DVector<f64> {
        &self.a[k - 1]
    }

    pub fn coeff_sin(&self, k: usize) -> &DVector<f64> {
        &self.b[k - 1]
    }

    /// The uniform quadrature grid t_i = 2 pi i / N, i = 0..N-1.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_samples;
        (0..n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
            .collect()
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let mut z = DVector::zeros(self.dim());
        for (j, (ak, bk)) in self.a.iter().zip(&self.b).enumerate() {
            let k = (j + 1) as f64;
            z += ak * (k * t).cos() + bk * (k * t).sin();
        }
        z
    }

    pub fn deriv(&self, t: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for (j, (ak, bk)) in self.a.iter().zip(&self.b).enumerate() {
            let k = (j + 1) as f64;
            v += (bk * (k * t).cos() - ak * (k * t).sin()) * k;
        }
        v
    }

    pub fn sample(&self) -> Vec<DVector<f64>> {
        self.times().iter().map(|&t| self.eval(t)).collect()
    }

    pub fn sample_deriv(&self) -> Vec<DVector<f64>> {
        self.times().iter().map(|&t| self.deriv(t)).collect()
    }

    /// Symplectic action A(z), exact in the coefficients. Positive for
    /// counterclockwise planar circles.
    pub fn action(&self) -> f64 {
        let mut total = 0.0;
        for (j, (ak, bk)) in self.a.iter().zip(&self.b).enumerate() {
            let k = (j + 1) as f64;
            total += k * j_apply(ak).dot(bk);
        }
        std::f64::consts::PI * total
    }

    /// Trapezoidal action on the loop's grid. The integrand is a trig
    /// polynomial of bandwidth 2M, so for N > 2M this equals `action` to
    /// machine precision; kept as an independent cross-check.
    pub fn action_quadrature(&self) -> f64 {
        let dt = 2.0 * std::f64::consts::PI / self.n_samples as f64;
        let mut total = 0.0;
        for t in self.times() {
            let z = self.eval(t);
            let v = self.deriv(t);
            total += 0.5 * j_apply(&z).dot(&v);
        }
        total * dt
    }

    /// Random low-mode loop: the first `active` frequencies get Gaussian
    /// coefficients with magnitude decaying as 1/k^2, the rest start at
    /// zero. Orientation is flipped (time reversal, B -> -B) if needed so
    /// the action comes out positive; a loop whose action is numerically
    /// zero is returned as-is and the caller draws again.
    pub fn random<R: Rng>(
        rng: &mut R,
        dim: usize,
        modes: usize,
        active: usize,
        n_samples: usize,
    ) -> Self {
        let active = active.min(modes).max(1);
        let mut a = Vec::with_capacity(modes);
        let mut b = Vec::with_capacity(modes);
        for k in 1..=modes {
            if k <= active {
                let sigma = 1.0 / (k * k) as f64;
                a.push(DVector::from_fn(dim, |_, _| sigma * standard_normal(rng)));
                b.push(DVector::from_fn(dim, |_, _| sigma * standard_normal(rng)));
            } else {
                a.push(DVector::zeros(dim));
                b.push(DVector::zeros(dim));
            }
        }
        let mut lp = FourierLoop::new(a, b, n_samples);
        if lp.action() < 0.0 {
            for bk in &mut lp.b {
                *bk = -&*bk;
            }
        }
        lp
    }

    /// Rescale so the action equals `target` (> 0). None if the action is
    /// not positive, since scaling cannot fix the sign.
    pub fn normalized_action(mut self, target: f64) -> Option<Self> {
        assert!(target > 0.0);
        let act = self.action();
        if act <= 0.0 || !act.is_finite() {
            return None;
        }
        let c = (target / act).sqrt();
        for coeff in self.a.iter_mut().chain(self.b.iter_mut()) {
            *coeff *= c;
        }
        Some(self)
    }

    /// Extend with zero coefficients up to `modes` frequencies (and enlarge
    /// the grid to keep N >= 4M + 1 if needed). Evaluations are unchanged.
    pub fn pad(mut self, modes: usize, n_samples: usize) -> Self {
        assert!(modes >= self.modes());
        let dim = self.dim();
        while self.a.len() < modes {
            self.a.push(DVector::zeros(dim));
            self.b.push(DVector::zeros(dim));
        }
        self.n_samples = n_samples.max(self.n_samples).max(4 * modes + 1);
        self
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for coeff in self.a.iter_mut().chain(self.b.iter_mut()) {
            *coeff *= c;
        }
        self
    }

    /// Least-squares (here: exact DFT) fit of uniform samples of a closed
    /// curve, keeping `modes` frequencies. The mean is discarded. Requires
    /// N_in > 2 * modes samples to resolve the requested bandwidth.
    pub fn fit_from_samples(
        samples: &[DVector<f64>],
        modes: usize,
        n_samples: usize,
    ) -> Self {
        let n_in = samples.len();
        assert!(n_in > 2 * modes, "need more than 2 modes samples to fit");
        let dim = samples[0].len();
        let mut a = vec![DVector::zeros(dim); modes];
        let mut b = vec![DVector::zeros(dim); modes];
        for (i, z) in samples.iter().enumerate() {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n_in as f64;
            for k in 1..=modes {
                let kt = k as f64 * t;
                a[k - 1] += z * kt.cos();
                b[k - 1] += z * kt.sin();
            }
        }
        let scale = 2.0 / n_in as f64;
        for coeff in a.iter_mut().chain(b.iter_mut()) {
            *coeff *= scale;
        }
        FourierLoop::new(a, b, n_samples)
    }

    /// Euclidean distance between coefficient vectors, with the shorter
    /// loop padded by zeros. Phase-sensitive: time-shifted copies of the
    /// same curve are far apart under this metric.
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "coefficient dimension mismatch");
        let zero = DVector::zeros(self.dim());
        let modes = self.modes().max(other.modes());
        let mut total = 0.0;
        for k in 1..=modes {
            let pick = |lp: &FourierLoop, cos: bool| -> DVector<f64> {
                if k <= lp.modes() {
                    if cos { lp.coeff_cos(k).clone() } else { lp.coeff_sin(k).clone() }
                } else {
                    zero.clone()
                }
            };
            total += (pick(self, true) - pick(other, true)).norm_squared();
            total += (pick(self, false) - pick(other, false)).norm_squared();
        }
        total.sqrt()
    }

    /// Counterclockwise circle of radius r in the symplectic plane
    /// (q_axis, p_axis); the standard positive-action test loop.
    pub fn circle(dim: usize, q_axis: usize, p_axis: usize, r: f64, n_samples: usize) -> Self {
        assert!(dim % 2 == 0 && q_axis < dim && p_axis < dim);
        let mut a1 = DVector::zeros(dim);
        let mut b1 = DVector::zeros(dim);
        a1[q_axis] = r;
        b1[p_axis] = r;
        FourierLoop::new(vec![a1], vec![b1], n_samples)
    }
}

/// Tabulated cos(k t_i), sin(k t_i) on the uniform grid; the solver's inner
/// loops index these instead of calling libm.
pub struct TrigTable {
    pub n: usize,
    pub modes: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigTable {
    pub fn new(modes: usize, n: usize) -> Self {
        let mut cos = vec![0.0; modes * n];
        let mut sin = vec![0.0; modes * n];
        for k in 1..=modes {
            for i in 0..n {
                let kt = k as f64 * 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                cos[(k - 1) * n + i] = kt.cos();
                sin[(k - 1) * n + i] = kt.sin();
            }
        }
        TrigTable { n, modes, cos, sin }
    }

    /// Row of cos(k t_i) over the grid (k is 1-based).
    pub fn cos_row(&self, k: usize) -> &[f64] {
        &self.cos[(k - 1) * self.n..k * self.n]
    }

    pub fn sin_row(&self, k: usize) -> &[f64] {
        &self.sin[(k - 1) * self.n..k * self.n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_action_is_enclosed_area() {
        let r = 1.7;
        let z = FourierLoop::circle(2, 0, 1, r, 64);
        assert_relative_eq!(z.action(), std::f64::consts::PI * r * r, max_relative = 1e-14);
        // Reversed orientation flips the sign.
        let back = FourierLoop::new(
            vec![z.coeff_cos(1).clone()],
            vec![-z.coeff_sin(1)],
            64,
        );
        assert_relative_eq!(
            back.action(),
            -std::f64::consts::PI * r * r,
            max_relative = 1e-14
        );
    }

    #[test]
    fn action_formula_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let z = FourierLoop::random(&mut rng, 4, 6, 6, 25);
            assert_abs_diff_eq!(z.action(), z.action_quadrature(), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = FourierLoop::random(&mut rng, 4, 3, 3, 16);
        let t = 0.83;
        let h = 1e-6;
        let fd = (z.eval(t + h) - z.eval(t - h)) / (2.0 * h);
        assert_abs_diff_eq!(z.deriv(t), fd, epsilon = 1e-8);
    }

    #[test]
    fn loops_are_mean_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = FourierLoop::random(&mut rng, 2, 4, 3, 32);
        let mean = crate::linalg::mean_vector(&z.sample());
        assert!(mean.norm() < 1e-13);
    }

    #[test]
    fn random_loops_have_positive_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let z = FourierLoop::random(&mut rng, 6, 8, 3, 40);
            assert!(z.action() > 0.0);
        }
    }

    #[test]
    fn normalization_sets_the_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = FourierLoop::random(&mut rng, 4, 5, 3, 24)
            .normalized_action(1.0)
            .unwrap();
        assert_relative_eq!(z.action(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn fit_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = FourierLoop::random(&mut rng, 4, 4, 4, 32);
        let fitted = FourierLoop::fit_from_samples(&z.sample(), 4, 32);
        for k in 1..=4 {
            assert_abs_diff_eq!(z.coeff_cos(k), fitted.coeff_cos(k), epsilon = 1e-12);
            assert_abs_diff_eq!(z.coeff_sin(k), fitted.coeff_sin(k), epsilon = 1e-12);
        }
    }

    #[test]
    fn pad_preserves_evaluation_and_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let z = FourierLoop::random(&mut rng, 2, 2, 2, 16);
        let padded = z.clone().pad(6, 32);
        assert_eq!(padded.modes(), 6);
        assert_relative_eq!(z.action(), padded.action(), max_relative = 1e-15);
        for &t in &[0.0, 0.4, 2.2, 5.9] {
            assert_abs_diff_eq!(z.eval(t), padded.eval(t), epsilon = 1e-14);
        }
    }

    #[test]
    fn scaling_is_quadratic_in_the_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let z = FourierLoop::random(&mut rng, 4, 3, 3, 16);
        let a = z.action();
        let scaled = z.scaled(2.5);
        assert_relative_eq!(scaled.action(), 2.5 * 2.5 * a, max_relative = 1e-13);
    }

    #[test]
    fn trig_table_matches_libm() {
        let table = TrigTable::new(5, 37);
        for k in 1..=5 {
            for i in 0..37 {
                let kt = k as f64 * 2.0 * std::f64::consts::PI * i as f64 / 37.0;
                assert_abs_diff_eq!(table.cos_row(k)[i], kt.cos(), epsilon = 1e-15);
                assert_abs_diff_eq!(table.sin_row(k)[i], kt.sin(), epsilon = 1e-15);
            }
        }
    }
}

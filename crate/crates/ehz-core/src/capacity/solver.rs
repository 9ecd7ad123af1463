//! Conjugate-gradient descent on the Rayleigh quotient R(x) = I(x) / A(x)
//! over flat coefficient vectors.
//!
//! Both the dual action I and the symplectic action A are 2-homogeneous in
//! the coefficients, so R is scale-free and minimizing it over the cone
//! A > 0 is equivalent to minimizing I on the slice A = 1. The gradient
//! obeys <grad R, x> = 0 (Euler), which keeps iterates from drifting along
//! rays. Descent directions are Polak-Ribiere+ conjugate gradients with an
//! Armijo backtracking line search; on polytope domains the support
//! gradient is a representative subgradient and the search degrades to
//! subgradient descent near kinks, which the stall logic below absorbs.

use nalgebra::DVector;

use crate::error::SolverError;
use crate::linalg::j_apply_into;
use crate::loops::{FourierLoop, TrigTable};

use super::domain::ConvexDomain;
use super::kkt::kkt_residual;

pub(crate) struct Engine<'a, D: ConvexDomain> {
    domain: &'a D,
    dim: usize,
    modes: usize,
    n: usize,
    table: TrigTable,
    /// Quadrature weight 2 pi / N.
    w: f64,
}

pub(crate) struct StartOutcome {
    /// Final loop, rescaled to A = 1.
    pub z: FourierLoop,
    /// I at the rescaled loop; the multiplier lambda.
    pub i_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub alpha: DVector<f64>,
}

impl<'a, D: ConvexDomain> Engine<'a, D> {
    pub fn new(domain: &'a D, modes: usize, n: usize) -> Self {
        let dim = domain.dim();
        Engine { domain, dim, modes, n, table: TrigTable::new(modes, n), w: 2.0 * std::f64::consts::PI / n as f64 }
    }

    pub fn pack(&self, z: &FourierLoop) -> DVector<f64> {
        assert_eq!(z.modes(), self.modes);
        assert_eq!(z.dim(), self.dim);
        let d = self.dim;
        let mut x = DVector::zeros(2 * self.modes * d);
        for k in 1..=self.modes {
            x.rows_mut(2 * (k - 1) * d, d).copy_from(z.coeff_cos(k));
            x.rows_mut((2 * (k - 1) + 1) * d, d).copy_from(z.coeff_sin(k));
        }
        x
    }

    pub fn unpack(&self, x: &DVector<f64>) -> FourierLoop {
        let d = self.dim;
        let mut a = Vec::with_capacity(self.modes);
        let mut b = Vec::with_capacity(self.modes);
        for k0 in 0..self.modes {
            a.push(x.rows(2 * k0 * d, d).into_owned());
            b.push(x.rows((2 * k0 + 1) * d, d).into_owned());
        }
        FourierLoop::new(a, b, self.n)
    }

    /// Loop derivative at every grid node, accumulated into `out`.
    fn derivs(&self, x: &DVector<f64>, out: &mut [DVector<f64>]) {
        let d = self.dim;
        let xs = x.as_slice();
        for v in out.iter_mut() {
            v.fill(0.0);
        }
        for k0 in 0..self.modes {
            let k = (k0 + 1) as f64;
            let a = &xs[2 * k0 * d..(2 * k0 + 1) * d];
            let b = &xs[(2 * k0 + 1) * d..(2 * k0 + 2) * d];
            let cos = self.table.cos_row(k0 + 1);
            let sin = self.table.sin_row(k0 + 1);
            for (i, v) in out.iter_mut().enumerate() {
                let ca = -k * sin[i];
                let cb = k * cos[i];
                let vs = v.as_mut_slice();
                for dd in 0..d {
                    vs[dd] += ca * a[dd] + cb * b[dd];
                }
            }
        }
    }

    /// Exact symplectic action from coefficients.
    pub fn action(&self, x: &DVector<f64>) -> f64 {
        let d = self.dim;
        let xs = x.as_slice();
        let mut buf = vec![0.0; d];
        let mut total = 0.0;
        for k0 in 0..self.modes {
            let a = &xs[2 * k0 * d..(2 * k0 + 1) * d];
            let b = &xs[(2 * k0 + 1) * d..(2 * k0 + 2) * d];
            j_apply_into(a, &mut buf);
            let dot: f64 = buf.iter().zip(b.iter()).map(|(p, q)| p * q).sum();
            total += (k0 + 1) as f64 * dot;
        }
        std::f64::consts::PI * total
    }

    /// Gradient of the action: dA/da_k = -pi k J b_k, dA/db_k = pi k J a_k.
    fn action_grad(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let d = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        let mut buf = vec![0.0; d];
        for k0 in 0..self.modes {
            let c = std::f64::consts::PI * (k0 + 1) as f64;
            let a = &xs[2 * k0 * d..(2 * k0 + 1) * d];
            let b = &xs[(2 * k0 + 1) * d..(2 * k0 + 2) * d];
            j_apply_into(b, &mut buf);
            for dd in 0..d {
                os[2 * k0 * d + dd] = -c * buf[dd];
            }
            j_apply_into(a, &mut buf);
            for dd in 0..d {
                os[(2 * k0 + 1) * d + dd] = c * buf[dd];
            }
        }
    }

    /// I(x) on the grid (periodic trapezoid = uniform weights). `mu > 0`
    /// swaps in the domain's smoothed surrogate for continuation stages.
    fn dual_value(&self, v: &[DVector<f64>], mu: f64) -> f64 {
        let mut total = 0.0;
        for vi in v {
            let h = if mu > 0.0 {
                self.domain.smoothed_support(vi, mu)
            } else {
                self.domain.support(vi)
            };
            total += h * h;
        }
        total * self.w
    }

    /// I(x) and its coefficient gradient. The chain rule pushes the sample
    /// gradients G_i = 2 h(v_i) grad h(v_i) back through the trig synthesis.
    fn dual_value_grad(
        &self,
        v: &[DVector<f64>],
        g: &mut DVector<f64>,
        mu: f64,
    ) -> Result<f64, SolverError> {
        let d = self.dim;
        g.fill(0.0);
        let gs = g.as_mut_slice();
        let mut total = 0.0;
        for (i, vi) in v.iter().enumerate() {
            if mu <= 0.0 && vi.norm() < 1e-280 {
                continue; // h^2 is flat at the origin
            }
            let (h, gh) = if mu > 0.0 {
                self.domain.smoothed_support_grad(vi, mu)?
            } else {
                (self.domain.support(vi), self.domain.support_grad(vi)?)
            };
            total += h * h;
            let c = 2.0 * h * self.w;
            let ghs = gh.as_slice();
            for k0 in 0..self.modes {
                let k = (k0 + 1) as f64;
                let ca = c * (-k * self.table.sin_row(k0 + 1)[i]);
                let cb = c * (k * self.table.cos_row(k0 + 1)[i]);
                let oa = 2 * k0 * d;
                let ob = (2 * k0 + 1) * d;
                for dd in 0..d {
                    gs[oa + dd] += ca * ghs[dd];
                    gs[ob + dd] += cb * ghs[dd];
                }
            }
        }
        Ok(total * self.w)
    }

    /// Rayleigh quotient, +infinity outside the A > 0 cone.
    fn objective(&self, x: &DVector<f64>, v: &mut [DVector<f64>], mu: f64) -> f64 {
        let a = self.action(x);
        if a <= 1e-280 {
            return f64::INFINITY;
        }
        self.derivs(x, v);
        self.dual_value(v, mu) / a
    }

    /// Objective and gradient; requires A(x) > 0.
    fn objective_grad(
        &self,
        x: &DVector<f64>,
        v: &mut [DVector<f64>],
        gi: &mut DVector<f64>,
        ga: &mut DVector<f64>,
        g: &mut DVector<f64>,
        mu: f64,
    ) -> Result<f64, SolverError> {
        let a = self.action(x);
        debug_assert!(a > 0.0);
        self.derivs(x, v);
        let i = self.dual_value_grad(v, gi, mu)?;
        self.action_grad(x, ga);
        let r = i / a;
        // grad R = (grad I - R grad A) / A
        g.copy_from(gi);
        g.axpy(-r, ga, 1.0);
        *g /= a;
        Ok(r)
    }

    /// Normalized loop and its lambda from a coefficient vector.
    fn finish(&self, x: &DVector<f64>, v: &mut [DVector<f64>]) -> (FourierLoop, f64) {
        let a = self.action(x);
        let xn = x / a.sqrt();
        self.derivs(&xn, v);
        let i = self.dual_value(v, 0.0);
        (self.unpack(&xn), i)
    }

    /// One CG run at smoothing level `mu`. Polak-Ribiere+ directions with
    /// Armijo backtracking; exact runs (`tol_kkt` given) spend plateaus on
    /// KKT certification, smoothed stages just stop there. A line-search
    /// stall along the raw (sub)gradient ends the run. Returns the final
    /// point, iterations, the convergence flag, and the last certificate.
    #[allow(clippy::type_complexity)]
    fn descend(
        &self,
        x0: DVector<f64>,
        mu: f64,
        max_iter: usize,
        tol_obj: f64,
        tol_kkt: Option<f64>,
    ) -> Result<(DVector<f64>, usize, bool, Option<(f64, DVector<f64>)>), SolverError> {
        let nvar = 2 * self.modes * self.dim;
        assert_eq!(x0.len(), nvar);
        let mut v: Vec<DVector<f64>> = (0..self.n).map(|_| DVector::zeros(self.dim)).collect();
        let mut gi = DVector::zeros(nvar);
        let mut ga = DVector::zeros(nvar);
        let mut g = DVector::zeros(nvar);
        let mut g_old = DVector::zeros(nvar);

        let mut x = x0;
        let mut r = self.objective_grad(&x, &mut v, &mut gi, &mut ga, &mut g, mu)?;
        let mut dir = -&g;
        let mut step = 1.0;
        let mut plateau = 0usize;
        let mut kkt_budget = 12usize;
        let mut iterations = 0usize;
        let mut converged = false;
        let mut last_kkt: Option<(f64, DVector<f64>)> = None;

        while iterations < max_iter {
            iterations += 1;
            let mut gd = g.dot(&dir);
            if gd >= -1e-16 * g.norm() * dir.norm().max(1e-300) {
                dir.copy_from(&g);
                dir.neg_mut();
                gd = -g.norm_squared();
            }
            if gd == 0.0 {
                // Exact stationarity of the sampled objective.
                converged = true;
                break;
            }
            // Armijo backtracking on R.
            let mut s = step;
            let mut accepted = None;
            for _ in 0..60 {
                let xc = &x + &dir * s;
                let rc = self.objective(&xc, &mut v, mu);
                if rc.is_finite() && rc <= r + 1e-4 * s * gd {
                    accepted = Some((xc, rc, s));
                    break;
                }
                s *= 0.5;
            }
            let Some((xc, rc, s_used)) = accepted else {
                // Retry once from steepest descent before giving up.
                let already_steepest = (&dir + &g).norm() <= 1e-12 * g.norm();
                if already_steepest {
                    break;
                }
                dir.copy_from(&g);
                dir.neg_mut();
                step = 1.0;
                continue;
            };
            let rel_dec = (r - rc) / r.abs().max(1e-300);
            x = xc;
            step = (s_used * 2.0).clamp(1e-12, 1e6);
            g_old.copy_from(&g);
            r = self.objective_grad(&x, &mut v, &mut gi, &mut ga, &mut g, mu)?;
            // Polak-Ribiere+ with automatic restart through the max(0, .).
            let beta = (g.dot(&g) - g.dot(&g_old)) / g_old.norm_squared().max(1e-300);
            let beta = beta.max(0.0);
            dir *= beta;
            dir -= &g;

            if rel_dec < tol_obj {
                plateau += 1;
            } else {
                plateau = 0;
            }
            if plateau >= 3 {
                let Some(tol_kkt) = tol_kkt else {
                    break;
                };
                if kkt_budget == 0 {
                    break;
                }
                kkt_budget -= 1;
                plateau = 0;
                let (z, i_val) = self.finish(&x, &mut v);
                let (res, alpha) = kkt_residual(&self.domain, &z, i_val)?;
                last_kkt = Some((res, alpha));
                if res < tol_kkt {
                    converged = true;
                    break;
                }
            }
        }
        Ok((x, iterations, converged, last_kkt))
    }

    /// Minimize the exact functional from `x0` (must have positive action).
    /// Convergence means the relative objective decrease stayed under
    /// `tol_obj` and the KKT residual of the normalized loop is below
    /// `tol_kkt`.
    pub fn minimize(
        &self,
        x0: DVector<f64>,
        max_iter: usize,
        tol_obj: f64,
        tol_kkt: f64,
    ) -> Result<StartOutcome, SolverError> {
        let (x, iterations, mut converged, last_kkt) =
            self.descend(x0, 0.0, max_iter, tol_obj, Some(tol_kkt))?;
        let mut v: Vec<DVector<f64>> = (0..self.n).map(|_| DVector::zeros(self.dim)).collect();
        let (z, i_value) = self.finish(&x, &mut v);
        let (kkt_res, alpha) = match last_kkt {
            Some((res, alpha)) if converged => (res, alpha),
            _ => {
                let (res, alpha) = kkt_residual(&self.domain, &z, i_value)?;
                if res < tol_kkt {
                    converged = true;
                }
                (res, alpha)
            }
        };
        Ok(StartOutcome { z, i_value, iterations, converged, kkt_residual: kkt_res, alpha })
    }

    /// Annealed minimization for domains whose minimizers ride support
    /// kinks: descend through a decreasing schedule of smoothing levels
    /// (each relative to the current top speed), re-time the trace to
    /// constant h-speed between stages when that lowers the exact
    /// objective, then certify on the exact functional.
    pub fn minimize_continued(
        &self,
        x0: DVector<f64>,
        stages: &[f64],
        stage_iter: usize,
        max_iter: usize,
        tol_obj: f64,
        tol_kkt: f64,
    ) -> Result<StartOutcome, SolverError> {
        let mut v: Vec<DVector<f64>> = (0..self.n).map(|_| DVector::zeros(self.dim)).collect();
        let mut x = x0;
        let mut spent = 0usize;
        for &rel in stages {
            let a = self.action(&x);
            if a <= 1e-280 {
                break;
            }
            x /= a.sqrt();
            self.derivs(&x, &mut v);
            let speed = v.iter().map(|vi| vi.norm()).fold(0.0f64, f64::max);
            if !(speed > 0.0) {
                break;
            }
            // Stages only need to hand the next level a good warm start;
            // the exact polish below does the fine work.
            let stage_tol = (tol_obj * 1e4).clamp(1e-12, 1e-6);
            let (xs, it, _, _) = self.descend(x, rel * speed, stage_iter, stage_tol, None)?;
            x = xs;
            spent += it;
            if let Some(xr) = self.retimed(&x) {
                let r_old = self.objective(&x, &mut v, 0.0);
                let r_new = self.objective(&xr, &mut v, 0.0);
                if r_new < r_old {
                    x = xr;
                }
            }
        }
        let budget = max_iter.saturating_sub(spent).max(max_iter / 4);
        let mut out = self.minimize(x, budget, tol_obj, tol_kkt)?;
        out.iterations += spent;
        Ok(out)
    }

    /// Re-times the loop trace to constant h-speed and refits into the
    /// subspace. The optimal parametrization of a fixed trace has h(z')
    /// constant (Cauchy-Schwarz in the action bound), and CG drifts off
    /// that near kinks; callers adopt the candidate only when the exact
    /// objective drops.
    fn retimed(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let z = self.unpack(x);
        let pts = z.sample();
        let n = pts.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let seg = &pts[(i + 1) % n] - &pts[i];
            let l = self.domain.support(&seg).max(0.0);
            cum.push(cum[i] + l);
        }
        let total = cum[n];
        if !(total > 0.0) {
            return None;
        }
        let mut resampled = Vec::with_capacity(n);
        let mut seg = 0usize;
        for j in 0..n {
            let target = total * j as f64 / n as f64;
            while seg + 1 < n && cum[seg + 1] <= target {
                seg += 1;
            }
            let den = cum[seg + 1] - cum[seg];
            let frac = if den > 0.0 { (target - cum[seg]) / den } else { 0.0 };
            resampled.push(&pts[seg] + (&pts[(seg + 1) % n] - &pts[seg]) * frac);
        }
        let fitted =
            FourierLoop::fit_from_samples(&resampled, self.modes, self.n).normalized_action(1.0)?;
        Some(self.pack(&fitted))
    }
}

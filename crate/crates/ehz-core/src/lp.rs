//! A small dense linear-program solver for problems with few variables and
//! many inequality rows: maximize `c^T y` subject to `A y <= b` with `y`
//! free in R^n.
//!
//! The two users are the Chebyshev-center program behind `inradius` and the
//! polytope gauge (support of the polar). Both have n <= dim + 1 variables
//! and up to a few thousand rows, so we run the revised simplex method on
//! the dual (minimize `b^T t` subject to `A^T t = c`, `t >= 0`), whose
//! basis stays n x n. The primal solution is read off the simplex
//! multipliers at optimality. Bland's rule keeps the iteration from cycling;
//! every iteration refactors the small basis, which is cheap and avoids
//! stale-inverse drift.

use nalgebra::{DMatrix, DVector};

use crate::error::GeometryError;

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { y: DVector<f64>, value: f64 },
    /// The primal is unbounded (dual infeasible).
    Unbounded,
    /// The primal is infeasible (dual unbounded).
    Infeasible,
}

/// Solves `maximize c^T y s.t. rows[i] . y <= b[i]`.
pub fn maximize(
    c: &DVector<f64>,
    rows: &[DVector<f64>],
    b: &[f64],
) -> Result<LpOutcome, GeometryError> {
    let n = c.len();
    let m = rows.len();
    assert_eq!(m, b.len());
    assert!(rows.iter().all(|r| r.len() == n));
    if m == 0 {
        return Ok(if c.norm() == 0.0 {
            LpOutcome::Optimal { y: DVector::zeros(n), value: 0.0 }
        } else {
            LpOutcome::Unbounded
        });
    }

    // Dual standard form: columns 0..m are the dual variables t_i with
    // column A^T e_i = rows[i]; columns m..m+n are phase-1 artificials with
    // column sign(c_j) e_j.
    let scale = 1.0 + rows.iter().map(|r| r.amax()).fold(c.amax(), f64::max);
    let tol = 1e-11 * scale;

    let col = |j: usize, out: &mut DVector<f64>| {
        if j < m {
            out.copy_from(&rows[j]);
        } else {
            out.fill(0.0);
            let i = j - m;
            out[i] = if c[i] >= 0.0 { 1.0 } else { -1.0 };
        }
    };

    let mut basis: Vec<usize> = (m..m + n).collect();
    let mut scratch = DVector::zeros(n);

    // Basic solve helpers; the basis is refactored every call.
    let basis_matrix = |basis: &[usize]| -> DMatrix<f64> {
        let mut bm = DMatrix::zeros(n, n);
        let mut cbuf = DVector::zeros(n);
        for (k, &j) in basis.iter().enumerate() {
            col(j, &mut cbuf);
            bm.set_column(k, &cbuf);
        }
        bm
    };

    let mut run_phase = |basis: &mut Vec<usize>,
                         cost: &dyn Fn(usize) -> f64,
                         allow_enter: &dyn Fn(usize) -> bool|
     -> Result<PhaseEnd, GeometryError> {
        let max_iter = 60 * (m + n) + 200;
        for _ in 0..max_iter {
            let bm = basis_matrix(basis);
            let lu = bm.clone().lu();
            let f = DVector::from_fn(n, |i, _| c[i]);
            let xb = lu.solve(&f).ok_or_else(|| {
                GeometryError::LinearProgram("singular basis".into())
            })?;
            // Multipliers: B^T mu = d_B.
            let db = DVector::from_fn(n, |k, _| cost(basis[k]));
            let mu = bm
                .transpose()
                .lu()
                .solve(&db)
                .ok_or_else(|| GeometryError::LinearProgram("singular basis^T".into()))?;
            // Pricing with Bland's rule: smallest eligible index enters.
            let mut entering = None;
            for j in 0..m {
                if basis.contains(&j) || !allow_enter(j) {
                    continue;
                }
                let rj = cost(j) - mu.dot(&rows[j]);
                if rj < -tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j_in) = entering else {
                return Ok(PhaseEnd::Optimal { xb, mu });
            };
            col(j_in, &mut scratch);
            let w = lu.solve(&scratch).ok_or_else(|| {
                GeometryError::LinearProgram("singular basis (ratio)".into())
            })?;
            // Ratio test, Bland tie-break on the basic variable index.
            let mut leave: Option<(usize, f64)> = None;
            for k in 0..n {
                if w[k] > tol {
                    let ratio = xb[k].max(0.0) / w[k];
                    match leave {
                        None => leave = Some((k, ratio)),
                        Some((lk, lr)) => {
                            if ratio < lr - tol
                                || ((ratio - lr).abs() <= tol && basis[k] < basis[lk])
                            {
                                leave = Some((k, ratio));
                            }
                        }
                    }
                }
            }
            let Some((k_out, _)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            basis[k_out] = j_in;
        }
        Err(GeometryError::LinearProgram("simplex iteration cap hit".into()))
    };

    // Phase 1: drive artificials to zero.
    let art_cost = |j: usize| if j >= m { 1.0 } else { 0.0 };
    let phase1 = run_phase(&mut basis, &art_cost, &|_| true)?;
    let (xb, _) = match phase1 {
        PhaseEnd::Optimal { xb, mu } => (xb, mu),
        PhaseEnd::Unbounded => {
            // Phase 1 is bounded below by zero; cannot happen.
            return Err(GeometryError::LinearProgram("phase-1 unbounded".into()));
        }
    };
    let art_level: f64 = basis
        .iter()
        .zip(xb.iter())
        .filter(|(j, _)| **j >= m)
        .map(|(_, x)| x.abs())
        .sum();
    if art_level > 1e-7 * scale {
        // Dual infeasible: the primal is unbounded.
        return Ok(LpOutcome::Unbounded);
    }

    // Phase 2: true costs; artificials may stay basic at zero but never enter.
    let phase2 = run_phase(&mut basis, &|j| if j < m { b[j] } else { 0.0 }, &|j| j < m)?;
    match phase2 {
        PhaseEnd::Optimal { xb: _, mu } => {
            // The multipliers of the dual are the primal solution. Verify
            // feasibility before handing them out; a degenerate basis that
            // kept an artificial would fail here.
            let viol = rows
                .iter()
                .zip(b.iter())
                .map(|(r, bi)| r.dot(&mu) - bi)
                .fold(f64::NEG_INFINITY, f64::max);
            if viol > 1e-7 * scale {
                return Err(GeometryError::LinearProgram(format!(
                    "recovered point violates a row by {viol:.3e}"
                )));
            }
            let value = c.dot(&mu);
            Ok(LpOutcome::Optimal { y: mu, value })
        }
        PhaseEnd::Unbounded => Ok(LpOutcome::Infeasible),
    }
}

enum PhaseEnd {
    Optimal { xb: DVector<f64>, mu: DVector<f64> },
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn square_chebyshev_center() {
        // Unit square [-1,1]^2: maximize r s.t. <u, x> + r <= 1 for the four
        // axis normals. Optimum r = 1 at x = 0.
        let c = dv(&[0.0, 0.0, 1.0]);
        let rows = vec![
            dv(&[1.0, 0.0, 1.0]),
            dv(&[-1.0, 0.0, 1.0]),
            dv(&[0.0, 1.0, 1.0]),
            dv(&[0.0, -1.0, 1.0]),
        ];
        let b = vec![1.0, 1.0, 1.0, 1.0];
        match maximize(&c, &rows, &b).unwrap() {
            LpOutcome::Optimal { y, value } => {
                assert!((value - 1.0).abs() < 1e-9, "value {value}");
                assert!(y[0].abs() < 1e-9 && y[1].abs() < 1e-9);
                assert!((y[2] - 1.0).abs() < 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn shifted_slab_center() {
        // Slab 0 <= x <= 4 crossed with |y| <= 1: inradius 1, center x in [1,3].
        let c = dv(&[0.0, 0.0, 1.0]);
        let rows = vec![
            dv(&[1.0, 0.0, 1.0]),
            dv(&[-1.0, 0.0, 1.0]),
            dv(&[0.0, 1.0, 1.0]),
            dv(&[0.0, -1.0, 1.0]),
        ];
        let b = vec![4.0, 0.0, 1.0, 1.0];
        match maximize(&c, &rows, &b).unwrap() {
            LpOutcome::Optimal { y, value } => {
                assert!((value - 1.0).abs() < 1e-9);
                assert!(y[0] >= 1.0 - 1e-8 && y[0] <= 3.0 + 1e-8);
                assert!(y[1].abs() < 1e-8);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn gauge_of_square_via_polar_lp() {
        // g_{[-1,1]^2}(x) = max |x_i| = max <x, u> s.t. <v_j, u> <= 1 over the
        // four vertices v_j.
        let verts = [
            dv(&[1.0, 1.0]),
            dv(&[1.0, -1.0]),
            dv(&[-1.0, 1.0]),
            dv(&[-1.0, -1.0]),
        ];
        let x = dv(&[0.3, -2.0]);
        let rows: Vec<_> = verts.to_vec();
        let b = vec![1.0; 4];
        match maximize(&x, &rows, &b).unwrap() {
            LpOutcome::Optimal { value, .. } => {
                assert!((value - 2.0).abs() < 1e-9, "gauge {value}");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn unbounded_when_constraints_do_not_pin() {
        // Single row cannot bound a 2-variable maximization.
        let c = dv(&[1.0, 0.0]);
        let rows = vec![dv(&[1.0, 1.0])];
        let b = vec![1.0];
        match maximize(&c, &rows, &b).unwrap() {
            LpOutcome::Unbounded => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn many_redundant_rows() {
        // Disk approximated by 512 tangent lines: Chebyshev radius tends to 1.
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for i in 0..512 {
            let th = 2.0 * std::f64::consts::PI * (i as f64) / 512.0;
            rows.push(dv(&[th.cos(), th.sin(), 1.0]));
            b.push(1.0);
        }
        let c = dv(&[0.0, 0.0, 1.0]);
        match maximize(&c, &rows, &b).unwrap() {
            LpOutcome::Optimal { value, .. } => {
                assert!((value - 1.0).abs() < 1e-6, "value {value}");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}

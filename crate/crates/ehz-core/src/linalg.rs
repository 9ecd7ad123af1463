//! Small numerical helpers: the standard symplectic structure, direction
//! grids on spheres, and a derivative-free local minimizer on the sphere.
//!
//! Coordinates on R^{2n} are ordered (q_1..q_n, p_1..p_n) throughout, and
//! J(q, p) = (-p, q). With this convention a counterclockwise circle in any
//! (q_i, p_i) plane has positive symplectic action.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Applies J(q, p) = (-p, q). Panics if `v` has odd length.
pub fn j_apply(v: &DVector<f64>) -> DVector<f64> {
    let d = v.len();
    assert!(d % 2 == 0, "J needs an even dimension, got {d}");
    let n = d / 2;
    let mut out = DVector::zeros(d);
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
    out
}

/// Applies J^{-1} = -J.
pub fn j_inv_apply(v: &DVector<f64>) -> DVector<f64> {
    -j_apply(v)
}

/// In-place J into a preallocated buffer (hot paths).
pub fn j_apply_into(v: &[f64], out: &mut [f64]) {
    let n = v.len() / 2;
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
}

/// Unit vectors roughly equidistributed on S^{n-1}, always including the
/// signed coordinate axes. In 2d the grid is a uniform angle sweep; in 3d a
/// Fibonacci lattice; in higher dimension seeded Gaussian directions. The
/// axes come first so that axis-aligned extrema are hit exactly.
pub fn direction_grid(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    assert!(n >= 1);
    let mut dirs = Vec::with_capacity(count + 2 * n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        dirs.push(e.clone());
        e[i] = -1.0;
        dirs.push(e);
    }
    match n {
        1 => {}
        2 => {
            for i in 0..count {
                let th = 2.0 * std::f64::consts::PI * (i as f64) / (count as f64);
                dirs.push(DVector::from_vec(vec![th.cos(), th.sin()]));
            }
        }
        3 => {
            // Fibonacci sphere lattice.
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for i in 0..count {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / (count as f64);
                let r = (1.0 - z * z).max(0.0).sqrt();
                let th = 2.0 * std::f64::consts::PI * (i as f64) / golden;
                dirs.push(DVector::from_vec(vec![r * th.cos(), r * th.sin(), z]));
            }
        }
        _ => {
            use rand::SeedableRng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            while dirs.len() < count + 2 * n {
                let v = random_unit(&mut rng, n);
                dirs.push(v);
            }
        }
    }
    dirs
}

/// A standard-normal draw normalized to the unit sphere.
pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| standard_normal(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Box-Muller; avoids depending on rand_distr for one distribution.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// An orthonormal basis of the tangent space at unit vector `u`, by
/// Gram-Schmidt against the axis furthest from `u`.
pub fn tangent_basis(u: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = u.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        let mut v = &e - u * u[i];
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

/// Compass (pattern) search for `f` restricted to the unit sphere, started
/// at `u0`. Derivative-free, so it tolerates the kinks of polytope support
/// functions; near a smooth minimum the step contraction gives roughly
/// quadratic accuracy in the final step size.
pub fn sphere_compass_min<F: FnMut(&DVector<f64>) -> f64>(
    u0: &DVector<f64>,
    mut f: F,
    mut step: f64,
    min_step: f64,
    max_iter: usize,
) -> (DVector<f64>, f64) {
    let mut u = u0.normalize();
    let mut fu = f(&u);
    let mut iter = 0;
    while step > min_step && iter < max_iter {
        iter += 1;
        let basis = tangent_basis(&u);
        let mut improved = false;
        for b in &basis {
            for s in [step, -step] {
                let cand = (&u + b * s).normalize();
                let fc = f(&cand);
                if fc < fu - 1e-15 * (1.0 + fu.abs()) {
                    u = cand;
                    fu = fc;
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (u, fu)
}

/// Minimum of `f` over a direction grid followed by compass refinement from
/// the best few grid points. The workhorse behind width-type quantities.
pub fn sphere_grid_min<F: FnMut(&DVector<f64>) -> f64>(
    n: usize,
    grid_count: usize,
    seed: u64,
    refine_from: usize,
    mut f: F,
) -> (DVector<f64>, f64) {
    let dirs = direction_grid(n, grid_count, seed);
    let mut scored: Vec<(f64, usize)> = dirs
        .iter()
        .enumerate()
        .map(|(i, u)| (f(u), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best_u = dirs[scored[0].1].clone();
    let mut best_f = scored[0].0;
    for &(_, idx) in scored.iter().take(refine_from.max(1)) {
        let (u, fu) = sphere_compass_min(&dirs[idx], &mut f, 0.1, 1e-9, 400);
        if fu < best_f {
            best_f = fu;
            best_u = u;
        }
    }
    (best_u, best_f)
}

/// Distance from `y` to the convex hull of `points`. See `project_to_hull`.
pub fn dist_to_hull(y: &DVector<f64>, points: &[DVector<f64>], iters: usize) -> f64 {
    project_to_hull(y, points, iters).1
}

/// Nearest point of conv(points) to `y` and its distance, via Frank-Wolfe
/// on the simplex of hull weights. Exact enough at the sizes we use (active
/// vertex sets of a polytope subdifferential); tolerance is absolute in `y`
/// units.
pub fn project_to_hull(
    y: &DVector<f64>,
    points: &[DVector<f64>],
    iters: usize,
) -> (DVector<f64>, f64) {
    assert!(!points.is_empty());
    if points.len() == 1 {
        return (points[0].clone(), (y - &points[0]).norm());
    }
    // Start from the closest point.
    let mut x = points
        .iter()
        .min_by(|a, b| (y - *a).norm_squared().total_cmp(&(y - *b).norm_squared()))
        .unwrap()
        .clone();
    for _ in 0..iters {
        let grad = &x - y;
        // Linear minimization over the hull = best vertex.
        let s = points
            .iter()
            .min_by(|a, b| grad.dot(a).total_cmp(&grad.dot(b)))
            .unwrap();
        let d = s - &x;
        let g = -grad.dot(&d);
        if g <= 1e-14 * (1.0 + y.norm_squared()) {
            break;
        }
        // Exact line search on the quadratic.
        let denom = d.norm_squared();
        if denom <= 0.0 {
            break;
        }
        let t = (g / denom).clamp(0.0, 1.0);
        x += d * t;
        if t >= 1.0 - 1e-15 {
            // Landed on a vertex; next round decides whether to move again.
            continue;
        }
    }
    let dist = (y - &x).norm();
    (x, dist)
}

/// Mean of a set of equal-length vectors.
pub fn mean_vector(vs: &[DVector<f64>]) -> DVector<f64> {
    assert!(!vs.is_empty());
    let mut m = DVector::zeros(vs[0].len());
    for v in vs {
        m += v;
    }
    m / vs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn j_squares_to_minus_one() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let jj = j_apply(&j_apply(&v));
        assert!((jj + &v).norm() < 1e-15);
    }

    #[test]
    fn j_is_antisymmetric() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let w = DVector::from_vec(vec![-1.0, 4.0, 2.0, -0.5]);
        let a = j_apply(&v).dot(&w);
        let b = v.dot(&j_apply(&w));
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn grids_include_axes_and_are_unit() {
        for n in [2usize, 3, 4] {
            let dirs = direction_grid(n, 64, 7);
            for d in &dirs {
                assert!((d.norm() - 1.0).abs() < 1e-12);
            }
            let mut e0 = DVector::zeros(n);
            e0[0] = 1.0;
            assert!(dirs.iter().any(|d| (d - &e0).norm() < 1e-14));
        }
    }

    #[test]
    fn compass_finds_axis_minimum() {
        // f(u) = |u - e1|^2 on the sphere has its minimum at e1.
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let (u, fu) = sphere_grid_min(3, 256, 3, 4, |u| (u - &e1).norm_squared());
        assert!(fu < 1e-12);
        assert!((u - e1).norm() < 1e-6);
    }

    #[test]
    fn hull_distance_matches_hand_values() {
        // Segment from (0,0) to (2,0); point (1,1) is at distance 1.
        let pts = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![2.0, 0.0]),
        ];
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let d = dist_to_hull(&y, &pts, 200);
        assert!((d - 1.0).abs() < 1e-10, "d = {d}");
        // Point inside a triangle has distance 0.
        let tri = vec![
            DVector::from_vec(vec![0.0, 0.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        let y2 = DVector::from_vec(vec![0.25, 0.25]);
        assert!(dist_to_hull(&y2, &tri, 300) < 1e-6);
    }

    #[test]
    fn random_unit_is_unit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..32 {
            let v = random_unit(&mut rng, 5);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}

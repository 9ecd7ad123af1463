//! The built-in body catalog and its file format.
//!
//! The default catalog covers the regimes the experiments care about at
//! desk-scale cost: smooth strictly convex (balls, ellipsoids, Minkowski
//! sums of ellipsoids), flat-ish spots (p-balls with larger p), and
//! near-polytope bodies (smoothed cube and simplex), in dimensions 2 and 3.
//! Plain polytopes are deliberately absent: the orbit search and the
//! capacity solver both want a differentiable boundary, and the smoothed
//! variants stand in for them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::HarnessError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub body: ConvexBody,
}

impl CatalogEntry {
    pub fn new(name: impl Into<String>, body: ConvexBody) -> Self {
        CatalogEntry {
            name: name.into(),
            body,
        }
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }
}

/// Smoothing exponent for the cube entries.
const CUBE_SMOOTHING: f64 = 12.0;
/// Smoothing exponent for the simplex entries.
const SIMPLEX_SMOOTHING: f64 = 20.0;

/// The standard catalog for the requested dimensions. Deterministic: the
/// random ellipsoid sums derive from `seed` only.
pub fn built_in_catalog(dims: &[usize], seed: u64) -> Vec<CatalogEntry> {
    let mut entries = Vec::new();
    for &n in dims {
        let tag = |s: &str| format!("{s}-{n}d");
        entries.push(CatalogEntry::new(tag("ball"), ConvexBody::ball(n, 1.0)));
        for ratio in [1.0, 2.0, 5.0] {
            let mut semi = DVector::from_element(n, 1.0);
            for i in 1..n {
                semi[i] = ratio;
            }
            let q = DMatrix::from_diagonal(&semi.map(|s| s * s));
            entries.push(CatalogEntry::new(
                format!("ellipsoid-r{ratio:.0}-{n}d"),
                ConvexBody::ellipsoid(q).expect("diagonal SPD"),
            ));
        }
        for p in [2.0, 4.0, 8.0] {
            entries.push(CatalogEntry::new(
                format!("pball-p{p:.0}-{n}d"),
                ConvexBody::pball(p, DVector::from_element(n, 1.0)).expect("valid p-ball"),
            ));
        }
        entries.push(CatalogEntry::new(
            tag("cube-smoothed"),
            smoothed_cube(n, 1.0),
        ));
        entries.push(CatalogEntry::new(
            tag("simplex-smoothed"),
            smoothed_simplex(n, 1.0),
        ));
        for (label, salt) in [("a", 0x5101u64), ("b", 0x5102)] {
            let e1 = random_ellipsoid(n, seed ^ salt);
            let e2 = random_ellipsoid(n, seed ^ salt ^ 0xFFFF);
            entries.push(CatalogEntry::new(
                format!("ellipsoid-sum-{label}-{n}d"),
                ConvexBody::sum(e1, e2).expect("dims match"),
            ));
        }
    }
    entries
}

/// The cube [-half, half]^n with the vertex-power smoothing; strictly
/// convex and smooth while staying within a few percent of the cube.
pub fn smoothed_cube(n: usize, half: f64) -> ConvexBody {
    let vertices = match ConvexBody::cube(n, half) {
        ConvexBody::Polytope { vertices, .. } => vertices,
        _ => unreachable!("cube constructor yields a polytope"),
    };
    ConvexBody::polytope_smoothed(vertices, CUBE_SMOOTHING).expect("origin interior")
}

/// Regular simplex with circumradius `r`, smoothed the same way.
pub fn smoothed_simplex(n: usize, r: f64) -> ConvexBody {
    let vertices = match ConvexBody::regular_simplex(n, r) {
        ConvexBody::Polytope { vertices, .. } => vertices,
        _ => unreachable!("simplex constructor yields a polytope"),
    };
    ConvexBody::polytope_smoothed(vertices, SIMPLEX_SMOOTHING).expect("origin interior")
}

/// Random well-conditioned ellipsoid: Q = A A^T / n + I/2 for A with
/// entries uniform in [-1, 1].
pub fn random_ellipsoid(n: usize, seed: u64) -> ConvexBody {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = (&a * a.transpose()) / n as f64 + DMatrix::identity(n, n) * 0.5;
    ConvexBody::ellipsoid(q).expect("construction is SPD")
}

/// Load a catalog from a JSON file: an array of `{"name": ..., "body":
/// <body spec>}` objects using the standard body wire format.
pub fn load_catalog(path: &std::path::Path) -> Result<Vec<CatalogEntry>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Catalog(format!("cannot read {}: {e}", path.display())))?;
    let entries: Vec<CatalogEntry> = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Catalog(format!("{} is malformed: {e}", path.display())))?;
    if entries.is_empty() {
        return Err(HarnessError::Catalog("catalog file holds no bodies".into()));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn built_in_catalog_covers_both_dims() {
        let cat = built_in_catalog(&[2, 3], 1);
        assert_eq!(cat.len(), 22);
        for n in [2usize, 3] {
            let count = cat.iter().filter(|e| e.dim() == n).count();
            assert_eq!(count, 11);
        }
        let names: Vec<&str> = cat.iter().map(|e| e.name.as_str()).collect();
        assert!(names.contains(&"ball-2d"));
        assert!(names.contains(&"simplex-smoothed-3d"));
        assert!(names.contains(&"ellipsoid-sum-b-3d"));
    }

    #[test]
    fn catalog_is_deterministic_in_the_seed() {
        let a = built_in_catalog(&[2], 42);
        let b = built_in_catalog(&[2], 42);
        let c = built_in_catalog(&[2], 43);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                serde_json::to_string(&x.body).unwrap(),
                serde_json::to_string(&y.body).unwrap()
            );
        }
        let differs = a.iter().zip(&c).any(|(x, y)| {
            serde_json::to_string(&x.body).unwrap() != serde_json::to_string(&y.body).unwrap()
        });
        assert!(differs, "random entries should move with the seed");
    }

    #[test]
    fn smoothed_bodies_accept_gauge_queries() {
        for body in [smoothed_cube(2, 1.0), smoothed_simplex(2, 1.0)] {
            let x = DVector::from_vec(vec![0.3, 0.1]);
            let g = body.gauge(&x).unwrap();
            assert!(g > 0.0 && g < 1.0);
        }
    }

    #[test]
    fn catalog_round_trips_through_a_file() {
        let cat = built_in_catalog(&[2], 5);
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, "{}", serde_json::to_string(&cat).unwrap()).unwrap();
        let loaded = load_catalog(file.path()).unwrap();
        assert_eq!(loaded.len(), cat.len());
        assert_eq!(loaded[0].name, cat[0].name);
    }

    #[test]
    fn malformed_catalog_is_a_setup_error() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(file, "{{\"not\": \"a catalog\"}}").unwrap();
        assert!(load_catalog(file.path()).is_err());
    }
}

//! JSON wire format for body descriptions.
//!
//! Bodies serialize to a tagged tree, e.g.
//! `{"type": "pball", "p": 4.0, "radii": [1.0, 2.0]}` or
//! `{"type": "sum", "a": {...}, "b": {...}}`. Matrices are row-major nested
//! arrays. Deserialization funnels through the checked constructors, so a
//! file with an indefinite ellipsoid matrix or a singular linear map is
//! rejected at parse time; derived data (matrix inverses) is recomputed
//! rather than stored.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ConvexBody;

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub(super) enum BodySpec {
    Ellipsoid {
        q: Vec<Vec<f64>>,
    },
    Pball {
        p: f64,
        radii: Vec<f64>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothing: Option<f64>,
    },
    Sum {
        a: Box<BodySpec>,
        b: Box<BodySpec>,
    },
    Dilate {
        factor: f64,
        inner: Box<BodySpec>,
    },
    Translate {
        offset: Vec<f64>,
        inner: Box<BodySpec>,
    },
    Linear {
        map: Vec<Vec<f64>>,
        inner: Box<BodySpec>,
    },
    Polar {
        inner: Box<BodySpec>,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
    if rows.is_empty() {
        return Err("matrix needs at least one row".into());
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err("matrix rows have unequal lengths".into());
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.iter().flatten().copied(),
    ))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl TryFrom<BodySpec> for ConvexBody {
    type Error = String;

    fn try_from(spec: BodySpec) -> Result<Self, Self::Error> {
        let err = |e: crate::error::GeometryError| e.to_string();
        match spec {
            BodySpec::Ellipsoid { q } => {
                ConvexBody::ellipsoid(matrix_from_rows(&q)?).map_err(err)
            }
            BodySpec::Pball { p, radii } => {
                ConvexBody::pball(p, DVector::from_vec(radii)).map_err(err)
            }
            BodySpec::Polytope { vertices, smoothing } => {
                let vertices: Vec<DVector<f64>> =
                    vertices.into_iter().map(DVector::from_vec).collect();
                match smoothing {
                    None => ConvexBody::polytope(vertices).map_err(err),
                    Some(s) => ConvexBody::polytope_smoothed(vertices, s).map_err(err),
                }
            }
            BodySpec::Sum { a, b } => {
                ConvexBody::sum(ConvexBody::try_from(*a)?, ConvexBody::try_from(*b)?)
                    .map_err(err)
            }
            BodySpec::Dilate { factor, inner } => {
                ConvexBody::try_from(*inner)?.dilate(factor).map_err(err)
            }
            BodySpec::Translate { offset, inner } => ConvexBody::try_from(*inner)?
                .translate(DVector::from_vec(offset))
                .map_err(err),
            BodySpec::Linear { map, inner } => ConvexBody::try_from(*inner)?
                .linear_image(matrix_from_rows(&map)?)
                .map_err(err),
            BodySpec::Polar { inner } => ConvexBody::try_from(*inner)?.polar().map_err(err),
        }
    }
}

impl From<ConvexBody> for BodySpec {
    fn from(body: ConvexBody) -> Self {
        match body {
            ConvexBody::Ellipsoid { q, .. } => BodySpec::Ellipsoid { q: matrix_to_rows(&q) },
            ConvexBody::PBall { p, radii } => BodySpec::Pball {
                p,
                radii: radii.iter().copied().collect(),
            },
            ConvexBody::Polytope { vertices, smoothing } => BodySpec::Polytope {
                vertices: vertices
                    .into_iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
                smoothing,
            },
            ConvexBody::Sum(a, b) => BodySpec::Sum {
                a: Box::new(BodySpec::from(*a)),
                b: Box::new(BodySpec::from(*b)),
            },
            ConvexBody::Dilate { factor, inner } => BodySpec::Dilate {
                factor,
                inner: Box::new(BodySpec::from(*inner)),
            },
            ConvexBody::Translate { offset, inner } => BodySpec::Translate {
                offset: offset.iter().copied().collect(),
                inner: Box::new(BodySpec::from(*inner)),
            },
            ConvexBody::Linear { map, inner, .. } => BodySpec::Linear {
                map: matrix_to_rows(&map),
                inner: Box::new(BodySpec::from(*inner)),
            },
            ConvexBody::Polar(inner) => BodySpec::Polar {
                inner: Box::new(BodySpec::from(*inner)),
            },
        }
    }
}

/// Wire form of a Lagrangian product: `{"k": {...}, "t": {...}}`. Funnels
/// through `LagrangianProduct::new` so mismatched factor dimensions are
/// rejected at parse time.
#[derive(Serialize, Deserialize)]
pub(super) struct ProductSpec {
    k: BodySpec,
    t: BodySpec,
}

impl TryFrom<ProductSpec> for super::LagrangianProduct {
    type Error = String;

    fn try_from(spec: ProductSpec) -> Result<Self, Self::Error> {
        let k = ConvexBody::try_from(spec.k)?;
        let t = ConvexBody::try_from(spec.t)?;
        super::LagrangianProduct::new(k, t).map_err(|e| e.to_string())
    }
}

impl From<super::LagrangianProduct> for ProductSpec {
    fn from(product: super::LagrangianProduct) -> Self {
        ProductSpec {
            k: BodySpec::from(product.k),
            t: BodySpec::from(product.t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn round_trip_preserves_bodies() {
        let bodies = vec![
            ConvexBody::ellipsoid(dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap(),
            ConvexBody::pball(4.0, dvector![1.0, 2.0, 3.0]).unwrap(),
            ConvexBody::cube(2, 1.0),
            ConvexBody::sum(ConvexBody::ball(2, 1.0), ConvexBody::cube(2, 0.5)).unwrap(),
            ConvexBody::ball(3, 2.0).dilate(0.5).unwrap(),
            ConvexBody::ball(2, 1.0).translate(dvector![0.3, -0.2]).unwrap(),
            ConvexBody::ball(2, 1.0)
                .linear_image(dmatrix![1.0, 1.0; 0.0, 1.0])
                .unwrap(),
            ConvexBody::cube(2, 1.0).polar().unwrap(),
        ];
        for body in bodies {
            let json = serde_json::to_string(&body).unwrap();
            let back: ConvexBody = serde_json::from_str(&json).unwrap();
            assert_eq!(body, back, "round trip changed {json}");
        }
    }

    #[test]
    fn tagged_format_is_stable() {
        let ball = ConvexBody::pball(2.0, dvector![1.0, 1.0]).unwrap();
        let json = serde_json::to_value(&ball).unwrap();
        assert_eq!(json["type"], "pball");
        assert_eq!(json["p"], 2.0);
        let parsed: ConvexBody = serde_json::from_value(serde_json::json!({
            "type": "dilate",
            "factor": 2.0,
            "inner": {"type": "pball", "p": 2.0, "radii": [1.0, 1.0]},
        }))
        .unwrap();
        assert_eq!(parsed.support(&dvector![1.0, 0.0]), 2.0);
    }

    #[test]
    fn invalid_specs_fail_to_parse() {
        let bad_ellipsoid = serde_json::json!({
            "type": "ellipsoid",
            "q": [[1.0, 2.0], [2.0, 1.0]],
        });
        assert!(serde_json::from_value::<ConvexBody>(bad_ellipsoid).is_err());
        let bad_exponent = serde_json::json!({
            "type": "pball", "p": 0.5, "radii": [1.0],
        });
        assert!(serde_json::from_value::<ConvexBody>(bad_exponent).is_err());
        let ragged = serde_json::json!({
            "type": "polytope", "vertices": [[1.0, 0.0], [0.0]],
        });
        assert!(serde_json::from_value::<ConvexBody>(ragged).is_err());
    }
}

//! The verification experiments: Brunn-Minkowski superadditivity, the
//! volume lower bound, the inradius sandwich, and monotonicity.
//!
//! Two length estimators appear. Product capacities come from the dual
//! action solver (`capacity_of_product`), whose reports carry a value
//! tolerance and a convergence flag; the shortest-orbit search
//! (`shortest_orbit_over_m`) serves as the independent geometric estimate
//! with an essentially exact verified result. Slack is always
//! `SLACK_FACTOR` times the sum of the participating tolerances.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::billiards::{shortest_orbit_over_m, OrbitSearchConfig};
use crate::bodies::metrics::{inradius, minkowski_symmetral, volume_mc, width};
use crate::bodies::{ConvexBody, LagrangianProduct};
use crate::capacity::{capacity_of_product, CapacityResult, SolverConfig};
use crate::error::HarnessError;
use crate::linalg::direction_grid;

use super::catalog::{built_in_catalog, random_ellipsoid, smoothed_cube, CatalogEntry};
use super::{config_hash, CaseRecord, ExperimentReport, Timing, Verdict, SLACK_FACTOR};

/// Relative length tolerance attributed to a verified shortest orbit.
const ORBIT_RTOL: f64 = 1e-6;
/// Relative tolerance attributed to the width and inradius searches.
const METRIC_RTOL: f64 = 1e-6;

/// Budget and tolerance knobs shared by all experiments. Hash this (via
/// [`config_hash`]) to stamp reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub seed: u64,
    /// Superadditivity pair count for the sweep.
    pub bm_pairs: usize,
    /// Every k-th pair additionally runs the capacity-level square-root
    /// form (one extra product solve).
    pub sqrt_bm_every: usize,
    /// Nested pair count for the monotonicity sweep.
    pub monotonicity_pairs: usize,
    /// Every k-th monotone pair additionally checks the nested-product
    /// form through the capacity solver.
    pub product_form_every: usize,
    /// Monte Carlo volume starting sample count.
    pub volume_samples: u64,
    /// Target relative standard error for volumes; samples double until
    /// reached or the doubling budget runs out.
    pub volume_rel_err: f64,
    pub volume_max_doublings: u32,
    /// Fixed reported cap for xi / (sqrt(n) vol^{1/n}).
    pub ratio_cap: f64,
    /// Fixed reported cap for c(K x T) / (n vol(K)^{1/n} vol(T)^{1/n}).
    pub product_cap: f64,
    pub solver: SolverConfig,
    pub orbit: OrbitSearchConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seed: 0,
            bm_pairs: 50,
            sqrt_bm_every: 8,
            monotonicity_pairs: 20,
            product_form_every: 10,
            volume_samples: 150_000,
            volume_rel_err: 5e-3,
            volume_max_doublings: 4,
            ratio_cap: 4.0,
            product_cap: 2.0,
            solver: SolverConfig {
                modes: 16,
                samples: 96,
                starts: 2,
                seed: 17,
                tol_obj: 1e-10,
                // Product boundaries keep an O(1/sqrt(M)) floor on the
                // subdifferential residual; this is the honest threshold
                // at modes = 16, not a smooth-body tolerance.
                tol_kkt: 0.6,
                max_iter: 20_000,
                refine: true,
            },
            orbit: OrbitSearchConfig {
                starts: 24,
                seed: 23,
                max_iter: 400,
                closure_tol: 1e-6,
            },
        }
    }
}

struct CaseOut {
    record: CaseRecord,
    ms: f64,
}

fn finish_report(
    name: &str,
    hash: &str,
    seed: u64,
    outs: Vec<CaseOut>,
    started: Instant,
) -> ExperimentReport {
    let mut case_ms = BTreeMap::new();
    let mut records = Vec::with_capacity(outs.len());
    for out in outs {
        case_ms.insert(out.record.id.clone(), out.ms);
        records.push(out.record);
    }
    let mut report = ExperimentReport::new(name, hash, seed, records);
    report.timing = Timing {
        generated_at_epoch_s: report.timing.generated_at_epoch_s,
        total_ms: started.elapsed().as_secs_f64() * 1000.0,
        case_ms,
    };
    report
}

fn quantities(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect()
}

fn body_label(body: &ConvexBody) -> String {
    let kind = match body {
        ConvexBody::Ellipsoid { .. } => "ellipsoid",
        ConvexBody::PBall { p, .. } => return format!("pball(p={p}) {}d", body.dim()),
        ConvexBody::Polytope {
            smoothing: Some(_), ..
        } => "smoothed-polytope",
        ConvexBody::Polytope { .. } => "polytope",
        ConvexBody::Sum(..) => "minkowski-sum",
        ConvexBody::Dilate { .. } => "dilate",
        ConvexBody::Translate { .. } => "translate",
        ConvexBody::Linear { .. } => "linear-image",
        ConvexBody::Polar(..) => "polar",
    };
    format!("{kind} {}d", body.dim())
}

/// Euclidean ball volume, n <= 6.
fn ball_volume(n: usize, r: f64) -> f64 {
    use std::f64::consts::PI;
    let omega = match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        5 => 8.0 * PI * PI / 15.0,
        6 => PI * PI * PI / 6.0,
        _ => panic!("ball volume table covers n <= 6"),
    };
    omega * r.powi(n as i32)
}

/// Shortest verified (K, T)-orbit length over 2..=dim+1 bounces. A closed
/// convex-billiard minimizer needs at most dim + 1 bounce points, so the
/// range is exhaustive for the minimum.
fn xi_orbit(
    k: &ConvexBody,
    t: &ConvexBody,
    config: &OrbitSearchConfig,
) -> Result<f64, crate::error::BilliardError> {
    let orbit = shortest_orbit_over_m(k, t, 2..=k.dim() + 1, config)?;
    Ok(orbit.length)
}

fn solve_product(
    k: &ConvexBody,
    t: &ConvexBody,
    solver: &SolverConfig,
) -> Result<CapacityResult, HarnessError> {
    let product = LagrangianProduct::new(k.clone(), t.clone())?;
    Ok(capacity_of_product(&product, solver)?)
}

/// Least-squares translation v with h_{K2} = h_{K1} + <v, .>; Some(v) when
/// the fit residual certifies K2 = K1 + v on the direction grid.
fn translate_of(k1: &ConvexBody, k2: &ConvexBody) -> Option<DVector<f64>> {
    let n = k1.dim();
    if k2.dim() != n {
        return None;
    }
    let dirs = direction_grid(n, 64 * n, 0x7a31);
    let mut normal = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    let mut scale = 0.0f64;
    for u in &dirs {
        let d = k2.support(u) - k1.support(u);
        normal += u * u.transpose();
        rhs += u * d;
        scale = scale.max(k1.support(u).abs());
    }
    let v = normal.lu().solve(&rhs)?;
    let worst = dirs
        .iter()
        .map(|u| (k2.support(u) - k1.support(u) - v.dot(u)).abs())
        .fold(0.0f64, f64::max);
    (worst <= 1e-8 * scale.max(1.0)).then_some(v)
}

// ---------------------------------------------------------------------------
// Brunn-Minkowski superadditivity
// ---------------------------------------------------------------------------

/// Superadditivity of the shortest T-billiard length under Minkowski
/// addition, measured through the capacity of the Lagrangian products:
/// xi(K1 + K2) >= xi(K1) + xi(K2) within slack. When K2 is a translate of
/// K1 an equality record is added, and `with_sqrt` turns on the
/// capacity-level square-root form (one extra solve against 2T).
pub fn verify_bm_billiards(
    k1: &ConvexBody,
    k2: &ConvexBody,
    t: &ConvexBody,
    config: &HarnessConfig,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let outs = bm_case(k1, k2, t, config, "pair-000", config.seed, true, &hash);
    Ok(finish_report(
        "bm-superadditivity",
        &hash,
        config.seed,
        outs,
        started,
    ))
}

#[allow(clippy::too_many_arguments)]
fn bm_case(
    k1: &ConvexBody,
    k2: &ConvexBody,
    t: &ConvexBody,
    config: &HarnessConfig,
    prefix: &str,
    seed: u64,
    with_sqrt: bool,
    hash: &str,
) -> Vec<CaseOut> {
    let bodies = vec![body_label(k1), body_label(k2), body_label(t)];
    let t0 = Instant::now();
    let mut outs = Vec::new();
    let inconclusive = |id: String, note: String, ms: f64| CaseOut {
        record: CaseRecord {
            id,
            bodies: bodies.clone(),
            quantities: BTreeMap::new(),
            slack: 0.0,
            verdict: Verdict::Inconclusive,
            note,
            seed,
            config_hash: hash.to_string(),
        },
        ms,
    };

    let sum = match ConvexBody::sum(k1.clone(), k2.clone()) {
        Ok(s) => s,
        Err(e) => {
            return vec![inconclusive(
                format!("{prefix}-super"),
                format!("sum construction failed: {e}"),
                elapsed_ms(t0),
            )]
        }
    };
    let solved: Result<Vec<CapacityResult>, HarnessError> = [&sum, k1, k2]
        .iter()
        .map(|k| solve_product(k, t, &config.solver))
        .collect();
    let (rs, r1, r2) = match solved {
        Ok(mut v) => {
            let r2 = v.pop().unwrap();
            let r1 = v.pop().unwrap();
            (v.pop().unwrap(), r1, r2)
        }
        Err(e) => {
            return vec![inconclusive(
                format!("{prefix}-super"),
                format!("solver error: {e}"),
                elapsed_ms(t0),
            )]
        }
    };

    let converged = rs.converged && r1.converged && r2.converged;
    let slack = SLACK_FACTOR * (rs.value_tol + r1.value_tol + r2.value_tol);
    let margin = rs.value - r1.value - r2.value;
    let verdict = if !converged {
        Verdict::Inconclusive
    } else if margin >= -slack {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    outs.push(CaseOut {
        record: CaseRecord {
            id: format!("{prefix}-super"),
            bodies: bodies.clone(),
            quantities: quantities(&[
                ("n", k1.dim() as f64),
                ("xi_sum", rs.value),
                ("xi_k1", r1.value),
                ("xi_k2", r2.value),
                ("margin", margin),
                ("kkt_sum", rs.kkt_residual),
            ]),
            slack,
            verdict,
            note: if converged {
                String::new()
            } else {
                "a product solve did not converge".into()
            },
            seed,
            config_hash: hash.to_string(),
        },
        ms: elapsed_ms(t0),
    });

    if let Some(shift) = translate_of(k1, k2) {
        let verdict = if !converged {
            Verdict::Inconclusive
        } else if margin.abs() <= slack {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        outs.push(CaseOut {
            record: CaseRecord {
                id: format!("{prefix}-equality"),
                bodies: bodies.clone(),
                quantities: quantities(&[
                    ("n", k1.dim() as f64),
                    ("margin", margin),
                    ("shift_norm", shift.norm()),
                ]),
                slack,
                verdict,
                note: "translate pair: superadditivity must be an equality".into(),
                seed,
                config_hash: hash.to_string(),
            },
            ms: 0.0,
        });
    }

    if with_sqrt {
        let t1 = Instant::now();
        let out = match t.clone().dilate(2.0) {
            Err(e) => inconclusive(
                format!("{prefix}-sqrt"),
                format!("2T construction failed: {e}"),
                elapsed_ms(t1),
            ),
            Ok(t2) => match solve_product(&sum, &t2, &config.solver) {
                Err(e) => inconclusive(
                    format!("{prefix}-sqrt"),
                    format!("solver error: {e}"),
                    elapsed_ms(t1),
                ),
                Ok(rb) => {
                    let lhs = rb.value.max(0.0).sqrt();
                    let s1 = r1.value.max(0.0).sqrt();
                    let s2 = r2.value.max(0.0).sqrt();
                    let tol = rb.value_tol / (2.0 * lhs.max(1e-12))
                        + r1.value_tol / (2.0 * s1.max(1e-12))
                        + r2.value_tol / (2.0 * s2.max(1e-12));
                    let slack_s = SLACK_FACTOR * tol;
                    let margin_s = lhs - s1 - s2;
                    let ok = converged && rb.converged;
                    CaseOut {
                        record: CaseRecord {
                            id: format!("{prefix}-sqrt"),
                            bodies: bodies.clone(),
                            quantities: quantities(&[
                                ("n", k1.dim() as f64),
                                ("sqrt_lhs", lhs),
                                ("sqrt_rhs", s1 + s2),
                                ("margin", margin_s),
                            ]),
                            slack: slack_s,
                            verdict: if !ok {
                                Verdict::Inconclusive
                            } else if margin_s >= -slack_s {
                                Verdict::Pass
                            } else {
                                Verdict::Fail
                            },
                            note: "square-root capacity form against T + T".into(),
                            seed,
                            config_hash: hash.to_string(),
                        },
                        ms: elapsed_ms(t1),
                    }
                }
            },
        };
        outs.push(out);
    }
    outs
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if n == 2 {
        return rotation2(rng.gen_range(0.0..std::f64::consts::TAU));
    }
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

fn random_planar_ellipse(rng: &mut ChaCha8Rng) -> ConvexBody {
    let a = rng.gen_range(0.7..1.4);
    let b = rng.gen_range(1.4..2.6);
    let rot = random_rotation(2, rng);
    let q = &rot * DMatrix::from_diagonal(&DVector::from_vec(vec![a * a, b * b])) * rot.transpose();
    ConvexBody::ellipsoid(q).expect("rotated diagonal SPD")
}

/// One (K1, K2, T) superadditivity instance; kinds cycle through planar
/// and spatial bodies, translate pairs (equality probes) and a non-ball T.
fn bm_pair(kind: usize, rng: &mut ChaCha8Rng) -> (String, ConvexBody, ConvexBody, ConvexBody) {
    match kind % 8 {
        0 => (
            "planar-ellipses".into(),
            random_planar_ellipse(rng),
            random_planar_ellipse(rng),
            ConvexBody::ball(2, 1.0),
        ),
        1 => {
            let k = random_planar_ellipse(rng);
            let shift = DVector::from_fn(2, |_, _| rng.gen_range(-0.4..0.4));
            let kt = k.clone().translate(shift).expect("finite shift");
            ("planar-translates".into(), k, kt, ConvexBody::ball(2, 1.0))
        }
        2 => (
            "spatial-ellipsoids".into(),
            random_ellipsoid(3, rng.gen()),
            random_ellipsoid(3, rng.gen()),
            ConvexBody::ball(3, 1.0),
        ),
        3 => (
            "disk-plus-ellipse".into(),
            ConvexBody::ball(2, rng.gen_range(0.6..1.5)),
            random_planar_ellipse(rng),
            ConvexBody::ball(2, 1.0),
        ),
        4 => {
            let s = ConvexBody::sum(
                random_ellipsoid(2, rng.gen()),
                random_ellipsoid(2, rng.gen()),
            )
            .expect("dims match");
            (
                "ellipse-sum-plus-ellipse".into(),
                s,
                random_planar_ellipse(rng),
                ConvexBody::ball(2, 1.0),
            )
        }
        5 => {
            let p = ConvexBody::pball(4.0, DVector::from_vec(vec![1.0, 0.8]))
                .expect("valid p-ball")
                .linear_image(random_rotation(2, rng))
                .expect("rotation invertible");
            (
                "pball-plus-ellipse".into(),
                p,
                random_planar_ellipse(rng),
                ConvexBody::ball(2, 1.0),
            )
        }
        6 => {
            let t = ConvexBody::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![
                2.25, 1.0,
            ])))
            .expect("diagonal SPD");
            (
                "general-t".into(),
                random_planar_ellipse(rng),
                random_planar_ellipse(rng),
                t,
            )
        }
        _ => {
            let k = random_ellipsoid(3, rng.gen());
            let shift = DVector::from_fn(3, |_, _| rng.gen_range(-0.3..0.3));
            let kt = k.clone().translate(shift).expect("finite shift");
            (
                "spatial-translates".into(),
                k,
                kt,
                ConvexBody::ball(3, 1.0),
            )
        }
    }
}

/// The sweep behind the default suite: `config.bm_pairs` generated pairs,
/// each a superadditivity case (plus equality and square-root records
/// where applicable).
pub fn superadditivity_pair_sweep(config: &HarnessConfig) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let pairs: Vec<(usize, String, ConvexBody, ConvexBody, ConvexBody)> = (0..config.bm_pairs)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                config.seed ^ (i as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15),
            );
            let (kind, k1, k2, t) = bm_pair(i, &mut rng);
            (i, kind, k1, k2, t)
        })
        .collect();
    let outs: Vec<CaseOut> = pairs
        .par_iter()
        .flat_map(|(i, kind, k1, k2, t)| {
            let prefix = format!("b{i:03}-{kind}");
            let with_sqrt = config.sqrt_bm_every > 0 && i % config.sqrt_bm_every == 0;
            bm_case(
                k1,
                k2,
                t,
                config,
                &prefix,
                config.seed.wrapping_add(*i as u64),
                with_sqrt,
                &hash,
            )
        })
        .collect();
    Ok(finish_report(
        "bm-superadditivity",
        &hash,
        config.seed,
        outs,
        started,
    ))
}

// ---------------------------------------------------------------------------
// Volume lower bound
// ---------------------------------------------------------------------------

/// Empirical constant in xi(K) >= C sqrt(n) vol(K)^{1/n}: reports
/// xi / (sqrt(n) vol^{1/n}) per body and asserts it stays below the fixed
/// reported cap, plus the product-capacity analogue against
/// n vol(K)^{1/n} vol(T)^{1/n} and a dilation-invariance probe.
pub fn verify_volume_bound(
    catalog: &[CatalogEntry],
    dims: &[usize],
    config: &HarnessConfig,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let entries: Vec<&CatalogEntry> = catalog
        .iter()
        .filter(|e| dims.contains(&e.dim()))
        .collect();
    let mut outs: Vec<CaseOut> = entries
        .par_iter()
        .enumerate()
        .flat_map(|(i, entry)| {
            volume_case(entry, config, config.seed.wrapping_add(i as u64), &hash)
        })
        .collect();

    for &n in dims {
        outs.push(dilation_invariance_case(n, config, &hash));
    }
    Ok(finish_report("volume-bound", &hash, config.seed, outs, started))
}

/// Monte Carlo volume with sample doubling until the relative standard
/// error target is met; None if the budget runs out.
fn volume_to_target(
    body: &ConvexBody,
    config: &HarnessConfig,
    seed: u64,
) -> Result<Option<crate::bodies::VolumeEstimate>, HarnessError> {
    let mut samples = config.volume_samples;
    for _ in 0..=config.volume_max_doublings {
        let est = volume_mc(body, samples, seed)?;
        if est.std_err <= config.volume_rel_err * est.value {
            return Ok(Some(est));
        }
        samples *= 2;
    }
    Ok(None)
}

fn volume_case(entry: &CatalogEntry, config: &HarnessConfig, seed: u64, hash: &str) -> Vec<CaseOut> {
    let t0 = Instant::now();
    let n = entry.dim();
    let bodies = vec![entry.name.clone()];
    let mut outs = Vec::new();
    let inconclusive = |id: String, note: String, ms: f64| CaseOut {
        record: CaseRecord {
            id,
            bodies: bodies.clone(),
            quantities: BTreeMap::new(),
            slack: 0.0,
            verdict: Verdict::Inconclusive,
            note,
            seed,
            config_hash: hash.to_string(),
        },
        ms,
    };

    let est = match volume_to_target(&entry.body, config, seed) {
        Ok(Some(est)) => est,
        Ok(None) => {
            return vec![inconclusive(
                format!("vol-{}", entry.name),
                "MC volume variance stayed above target; raise volume_samples".into(),
                elapsed_ms(t0),
            )]
        }
        Err(e) => {
            return vec![inconclusive(
                format!("vol-{}", entry.name),
                format!("volume estimate failed: {e}"),
                elapsed_ms(t0),
            )]
        }
    };
    let t_ball = ConvexBody::ball(n, 1.0);
    let xi = match xi_orbit(&entry.body, &t_ball, &config.orbit) {
        Ok(xi) => xi,
        Err(e) => {
            return vec![inconclusive(
                format!("vol-{}", entry.name),
                format!("orbit search failed: {e}"),
                elapsed_ms(t0),
            )]
        }
    };

    let vol_root = est.value.powf(1.0 / n as f64);
    let denominator = (n as f64).sqrt() * vol_root;
    let ratio = xi / denominator;
    // Relative error of vol^{1/n} is the volume's divided by n.
    let sigma_ratio = ratio * (est.std_err / est.value / n as f64 + ORBIT_RTOL);
    let slack = SLACK_FACTOR * sigma_ratio;
    outs.push(CaseOut {
        record: CaseRecord {
            id: format!("vol-{}", entry.name),
            bodies: bodies.clone(),
            quantities: quantities(&[
                ("n", n as f64),
                ("xi", xi),
                ("volume", est.value),
                ("volume_std_err", est.std_err),
                ("mc_samples", est.samples as f64),
                ("ratio", ratio),
            ]),
            slack,
            verdict: if ratio <= config.ratio_cap + slack {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: format!("cap {}", config.ratio_cap),
            seed,
            config_hash: hash.to_string(),
        },
        ms: elapsed_ms(t0),
    });

    // Product-capacity trend: c(K x T) over n vol(K)^{1/n} vol(T)^{1/n}
    // with T the unit ball (xi is that capacity by the product theorem).
    let t1 = Instant::now();
    let vol_t_root = ball_volume(n, 1.0).powf(1.0 / n as f64);
    let a_ratio = xi / (n as f64 * vol_root * vol_t_root);
    let sigma_a = a_ratio * (est.std_err / est.value / n as f64 + ORBIT_RTOL);
    let slack_a = SLACK_FACTOR * sigma_a;
    outs.push(CaseOut {
        record: CaseRecord {
            id: format!("amo-{}", entry.name),
            bodies: vec![entry.name.clone(), format!("ball {n}d")],
            quantities: quantities(&[
                ("n", n as f64),
                ("capacity", xi),
                ("ratio", a_ratio),
            ]),
            slack: slack_a,
            verdict: if a_ratio <= config.product_cap + slack_a {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: format!("cap {}", config.product_cap),
            seed,
            config_hash: hash.to_string(),
        },
        ms: elapsed_ms(t1),
    });
    outs
}

fn dilation_invariance_case(n: usize, config: &HarnessConfig, hash: &str) -> CaseOut {
    let t0 = Instant::now();
    let seed = config.seed ^ 0xD11A;
    let id = format!("vol-dilation-invariance-{n}d");
    let body = smoothed_cube(n, 1.0);
    let factor = 1.7;
    let scaled = body
        .clone()
        .dilate(factor)
        .expect("positive dilation factor");
    let run = |b: &ConvexBody, s: u64| -> Result<(f64, f64), HarnessError> {
        let est = volume_to_target(b, config, s)?.ok_or_else(|| {
            HarnessError::InvalidConfig("volume variance target unreachable".into())
        })?;
        let xi = xi_orbit(b, &ConvexBody::ball(n, 1.0), &config.orbit)
            .map_err(HarnessError::from)?;
        let ratio = xi / ((n as f64).sqrt() * est.value.powf(1.0 / n as f64));
        let sigma = ratio * (est.std_err / est.value / n as f64 + ORBIT_RTOL);
        Ok((ratio, sigma))
    };
    let record = match (run(&body, seed), run(&scaled, seed ^ 1)) {
        (Ok((r1, s1)), Ok((r2, s2))) => {
            let slack = SLACK_FACTOR * (s1 + s2);
            let margin = slack - (r1 - r2).abs();
            CaseRecord {
                id,
                bodies: vec![format!("cube-smoothed-{n}d"), format!("dilate x{factor}")],
                quantities: quantities(&[
                    ("n", n as f64),
                    ("ratio", r1),
                    ("ratio_dilated", r2),
                    ("margin", margin),
                ]),
                slack,
                verdict: if margin >= 0.0 {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                note: "the volume ratio is scale invariant".into(),
                seed,
                config_hash: hash.to_string(),
            }
        }
        (Err(e), _) | (_, Err(e)) => CaseRecord {
            id,
            bodies: vec![format!("cube-smoothed-{n}d")],
            quantities: BTreeMap::new(),
            slack: 0.0,
            verdict: Verdict::Inconclusive,
            note: format!("estimate failed: {e}"),
            seed,
            config_hash: hash.to_string(),
        },
    };
    CaseOut {
        record,
        ms: elapsed_ms(t0),
    }
}

// ---------------------------------------------------------------------------
// Inradius sandwich
// ---------------------------------------------------------------------------

/// Per body: 4 inrad <= xi <= 2(n+1) inrad, Steinhagen's width bound, the
/// symmetral identities, and (for simplices) the sharpness ratio of the
/// upper bound, reported without an asserted constant.
pub fn verify_inradius_bounds(
    catalog: &[CatalogEntry],
    config: &HarnessConfig,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let outs: Vec<CaseOut> = catalog
        .par_iter()
        .enumerate()
        .flat_map(|(i, entry)| {
            inradius_case(entry, config, config.seed.wrapping_add(i as u64), &hash)
        })
        .collect();
    Ok(finish_report(
        "inradius-bounds",
        &hash,
        config.seed,
        outs,
        started,
    ))
}

fn inradius_case(
    entry: &CatalogEntry,
    config: &HarnessConfig,
    seed: u64,
    hash: &str,
) -> Vec<CaseOut> {
    let t0 = Instant::now();
    let n = entry.dim();
    let bodies = vec![entry.name.clone()];
    let inconclusive = |id: String, note: String, ms: f64| CaseOut {
        record: CaseRecord {
            id,
            bodies: bodies.clone(),
            quantities: BTreeMap::new(),
            slack: 0.0,
            verdict: Verdict::Inconclusive,
            note,
            seed,
            config_hash: hash.to_string(),
        },
        ms,
    };

    let measured = (|| -> Result<(f64, f64, f64), HarnessError> {
        let (r, _) = inradius(&entry.body)?;
        let (w, _) = width(&entry.body);
        let xi = xi_orbit(&entry.body, &ConvexBody::ball(n, 1.0), &config.orbit)?;
        Ok((r, w, xi))
    })();
    let (r, w, xi) = match measured {
        Ok(v) => v,
        Err(e) => {
            return vec![inconclusive(
                format!("inr-{}-lower", entry.name),
                format!("measurement failed: {e}"),
                elapsed_ms(t0),
            )]
        }
    };
    let r_tol = METRIC_RTOL * r;
    let w_tol = METRIC_RTOL * w;
    let xi_tol = ORBIT_RTOL * xi;
    let mut outs = Vec::new();

    // Lower bound, with the equality clause when the width is symmetric:
    // xi always sits in [4r, 2w], so width excess bounds the equality gap.
    let slack_lo = SLACK_FACTOR * (xi_tol + 4.0 * r_tol);
    let margin_lo = xi - 4.0 * r;
    let width_excess = w - 2.0 * r;
    let equality_expected = width_excess <= 1e-6 * r;
    let verdict_lo = if margin_lo < -slack_lo {
        Verdict::Fail
    } else if equality_expected && margin_lo > slack_lo + 2.0 * width_excess.max(0.0) {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    outs.push(CaseOut {
        record: CaseRecord {
            id: format!("inr-{}-lower", entry.name),
            bodies: bodies.clone(),
            quantities: quantities(&[
                ("n", n as f64),
                ("xi", xi),
                ("inradius", r),
                ("margin", margin_lo),
                ("width_excess", width_excess),
            ]),
            slack: slack_lo,
            verdict: verdict_lo,
            note: if equality_expected {
                "width = 2 inrad: lower bound must be an equality".into()
            } else {
                String::new()
            },
            seed,
            config_hash: hash.to_string(),
        },
        ms: elapsed_ms(t0),
    });

    let slack_up = SLACK_FACTOR * (xi_tol + 2.0 * (n as f64 + 1.0) * r_tol);
    let margin_up = 2.0 * (n as f64 + 1.0) * r - xi;
    outs.push(CaseOut {
        record: CaseRecord {
            id: format!("inr-{}-upper", entry.name),
            bodies: bodies.clone(),
            quantities: quantities(&[
                ("n", n as f64),
                ("xi", xi),
                ("inradius", r),
                ("margin", margin_up),
            ]),
            slack: slack_up,
            verdict: if margin_up >= -slack_up {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: String::new(),
            seed,
            config_hash: hash.to_string(),
        },
        ms: 0.0,
    });

    let slack_st = SLACK_FACTOR * (w_tol + (n as f64 + 1.0) * r_tol);
    let margin_st = (n as f64 + 1.0) * r - w;
    outs.push(CaseOut {
        record: CaseRecord {
            id: format!("inr-{}-steinhagen", entry.name),
            bodies: bodies.clone(),
            quantities: quantities(&[
                ("n", n as f64),
                ("width", w),
                ("inradius", r),
                ("margin", margin_st),
            ]),
            slack: slack_st,
            verdict: if margin_st >= -slack_st {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: String::new(),
            seed,
            config_hash: hash.to_string(),
        },
        ms: 0.0,
    });

    // Symmetral pipeline: width is preserved, the symmetral's inradius is
    // half its width, and symmetry forces equality in the lower bound.
    let t1 = Instant::now();
    let sym_out = (|| -> Result<CaseOut, HarnessError> {
        let sym = minkowski_symmetral(&entry.body)?;
        let (rs, _) = inradius(&sym)?;
        let (ws, _) = width(&sym);
        let xis = xi_orbit(&sym, &ConvexBody::ball(n, 1.0), &config.orbit)?;
        let dev_width = (ws - w).abs();
        let dev_half = (rs - 0.5 * ws).abs();
        let dev_xi = (xis - 4.0 * rs).abs();
        let slack_w = SLACK_FACTOR * 2.0 * w_tol;
        let slack_half = SLACK_FACTOR * (METRIC_RTOL * rs + 0.5 * METRIC_RTOL * ws);
        let slack_xi = SLACK_FACTOR * (ORBIT_RTOL * xis + 4.0 * METRIC_RTOL * rs);
        let pass = dev_width <= slack_w && dev_half <= slack_half && dev_xi <= slack_xi;
        Ok(CaseOut {
            record: CaseRecord {
                id: format!("inr-{}-symmetral", entry.name),
                bodies: vec![entry.name.clone(), "symmetral".into()],
                quantities: quantities(&[
                    ("n", n as f64),
                    ("width", w),
                    ("width_symmetral", ws),
                    ("inradius_symmetral", rs),
                    ("xi_symmetral", xis),
                    ("margin", [slack_w - dev_width, slack_half - dev_half, slack_xi - dev_xi]
                        .into_iter()
                        .fold(f64::INFINITY, f64::min)),
                ]),
                slack: slack_w.max(slack_half).max(slack_xi),
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                note: "width preserved; inradius = width/2; xi = 4 inrad".into(),
                seed,
                config_hash: hash.to_string(),
            },
            ms: elapsed_ms(t1),
        })
    })();
    outs.push(sym_out.unwrap_or_else(|e| {
        inconclusive(
            format!("inr-{}-symmetral", entry.name),
            format!("symmetral measurement failed: {e}"),
            elapsed_ms(t1),
        )
    }));

    if entry.name.contains("simplex") {
        let ratio = xi / (2.0 * (n as f64 + 1.0) * r);
        outs.push(CaseOut {
            record: CaseRecord {
                id: format!("inr-{}-sharpness", entry.name),
                bodies: bodies.clone(),
                quantities: quantities(&[("n", n as f64), ("ratio", ratio)]),
                slack: 0.0,
                verdict: Verdict::Pass,
                note: "upper-bound sharpness ratio reported; no constant asserted".into(),
                seed,
                config_hash: hash.to_string(),
            },
            ms: 0.0,
        });
    }
    outs
}

// ---------------------------------------------------------------------------
// Monotonicity
// ---------------------------------------------------------------------------

/// A nested pair for the monotonicity experiment.
#[derive(Clone, Debug)]
pub struct MonotonePair {
    pub name: String,
    pub inner: ConvexBody,
    pub outer: ConvexBody,
}

/// xi_T is monotone under inclusion. Nesting is certified on a direction
/// grid first; a pair that fails it is rejected (inconclusive), not
/// evaluated. Every `product_form_every`-th pair also checks the nested
/// product form c(K1 x T) <= c(K2 x T') with T' a dilation of T.
pub fn verify_monotonicity(
    pairs: &[MonotonePair],
    t: &ConvexBody,
    config: &HarnessConfig,
) -> Result<ExperimentReport, HarnessError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let outs: Vec<CaseOut> = pairs
        .par_iter()
        .enumerate()
        .flat_map(|(i, pair)| {
            monotone_case(
                pair,
                t,
                config,
                config.seed.wrapping_add(i as u64),
                config.product_form_every > 0 && i % config.product_form_every == 0,
                &hash,
            )
        })
        .collect();
    Ok(finish_report("monotonicity", &hash, config.seed, outs, started))
}

fn nesting_violation(inner: &ConvexBody, outer: &ConvexBody) -> Option<f64> {
    let n = inner.dim();
    let dirs = direction_grid(n, 128 * n, 0x0e57);
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for u in &dirs {
        let hi = inner.support(u);
        let ho = outer.support(u);
        scale = scale.max(ho.abs());
        worst = worst.max(hi - ho);
    }
    (worst > 1e-10 * scale).then_some(worst)
}

fn monotone_case(
    pair: &MonotonePair,
    t: &ConvexBody,
    config: &HarnessConfig,
    seed: u64,
    with_product: bool,
    hash: &str,
) -> Vec<CaseOut> {
    let t0 = Instant::now();
    let bodies = vec![pair.name.clone(), body_label(t)];
    let id = format!("mono-{}", pair.name);
    let inconclusive = |id: String, note: String, ms: f64| CaseOut {
        record: CaseRecord {
            id,
            bodies: bodies.clone(),
            quantities: BTreeMap::new(),
            slack: 0.0,
            verdict: Verdict::Inconclusive,
            note,
            seed,
            config_hash: hash.to_string(),
        },
        ms,
    };
    let (ni, no, nt) = (pair.inner.dim(), pair.outer.dim(), t.dim());
    if ni != no || ni != nt {
        return vec![inconclusive(
            id,
            format!("dimension mismatch: inner {ni}d, outer {no}d, T {nt}d"),
            elapsed_ms(t0),
        )];
    }
    if let Some(worst) = nesting_violation(&pair.inner, &pair.outer) {
        return vec![inconclusive(
            id,
            format!("pair rejected: inclusion fails by {worst:.3e} on the direction grid"),
            elapsed_ms(t0),
        )];
    }
    let identical = translate_of(&pair.inner, &pair.outer)
        .map(|v| v.norm() <= 1e-9)
        .unwrap_or(false);
    let lengths = (|| -> Result<(f64, f64), crate::error::BilliardError> {
        let xi_in = xi_orbit(&pair.inner, t, &config.orbit)?;
        let xi_out = if identical {
            xi_in
        } else {
            xi_orbit(&pair.outer, t, &config.orbit)?
        };
        Ok((xi_in, xi_out))
    })();
    let (xi_in, xi_out) = match lengths {
        Ok(v) => v,
        Err(e) => {
            return vec![inconclusive(id, format!("orbit search failed: {e}"), elapsed_ms(t0))]
        }
    };
    let slack = SLACK_FACTOR * ORBIT_RTOL * (xi_in + xi_out);
    let margin = xi_out - xi_in;
    let mut outs = vec![CaseOut {
        record: CaseRecord {
            id: id.clone(),
            bodies: bodies.clone(),
            quantities: quantities(&[
                ("n", pair.inner.dim() as f64),
                ("xi_inner", xi_in),
                ("xi_outer", xi_out),
                ("margin", margin),
            ]),
            slack,
            verdict: if margin >= -slack {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: if identical {
                "identical bodies: equality".into()
            } else {
                String::new()
            },
            seed,
            config_hash: hash.to_string(),
        },
        ms: elapsed_ms(t0),
    }];

    if with_product {
        let t1 = Instant::now();
        let out = match t.clone().dilate(1.15) {
            Err(e) => inconclusive(
                format!("{id}-product"),
                format!("outer T construction failed: {e}"),
                elapsed_ms(t1),
            ),
            Ok(t_outer) => {
                let solves = solve_product(&pair.inner, t, &config.solver).and_then(|a| {
                    solve_product(&pair.outer, &t_outer, &config.solver).map(|b| (a, b))
                });
                match solves {
                    Err(e) => inconclusive(
                        format!("{id}-product"),
                        format!("solver error: {e}"),
                        elapsed_ms(t1),
                    ),
                    Ok((ri, ro)) => {
                        let slack_p = SLACK_FACTOR * (ri.value_tol + ro.value_tol);
                        let margin_p = ro.value - ri.value;
                        let ok = ri.converged && ro.converged;
                        CaseOut {
                            record: CaseRecord {
                                id: format!("{id}-product"),
                                bodies: bodies.clone(),
                                quantities: quantities(&[
                                    ("n", pair.inner.dim() as f64),
                                    ("c_inner", ri.value),
                                    ("c_outer", ro.value),
                                    ("margin", margin_p),
                                ]),
                                slack: slack_p,
                                verdict: if !ok {
                                    Verdict::Inconclusive
                                } else if margin_p >= -slack_p {
                                    Verdict::Pass
                                } else {
                                    Verdict::Fail
                                },
                                note: "nested products through the capacity solver".into(),
                                seed,
                                config_hash: hash.to_string(),
                            },
                            ms: elapsed_ms(t1),
                        }
                    }
                }
            }
        };
        outs.push(out);
    }
    outs
}

/// Generated nested pairs: dilations (including the identity), margins by
/// Minkowski ball addition, nested ellipsoid shells, and the p-ball chain.
pub fn monotonicity_pair_sweep(config: &HarnessConfig) -> Result<ExperimentReport, HarnessError> {
    let mut pairs = Vec::with_capacity(config.monotonicity_pairs);
    for i in 0..config.monotonicity_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.seed ^ 0x3030 ^ (i as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15),
        );
        let pair = match i % 6 {
            0 => {
                let k = random_planar_ellipse(&mut rng);
                MonotonePair {
                    name: format!("{i:02}-identity"),
                    inner: k.clone(),
                    outer: k,
                }
            }
            1 => {
                let k = random_planar_ellipse(&mut rng);
                let c = rng.gen_range(1.2..2.2);
                MonotonePair {
                    name: format!("{i:02}-dilate"),
                    inner: k.clone(),
                    outer: k.dilate(c).expect("positive factor"),
                }
            }
            2 => {
                let k = random_planar_ellipse(&mut rng);
                let pad = ConvexBody::ball(2, rng.gen_range(0.2..0.6));
                MonotonePair {
                    name: format!("{i:02}-ball-padding"),
                    inner: k.clone(),
                    outer: ConvexBody::sum(k, pad).expect("dims match"),
                }
            }
            3 => {
                let a = rng.gen_range(0.8..1.2);
                let b = rng.gen_range(1.2..2.0);
                let inner = ConvexBody::ellipsoid(DMatrix::from_diagonal(
                    &DVector::from_vec(vec![a * a, b * b]),
                ))
                .expect("SPD");
                let outer = ConvexBody::ellipsoid(DMatrix::from_diagonal(
                    &DVector::from_vec(vec![(a + 0.5) * (a + 0.5), (b + 0.3) * (b + 0.3)]),
                ))
                .expect("SPD");
                MonotonePair {
                    name: format!("{i:02}-ellipse-shell"),
                    inner,
                    outer,
                }
            }
            4 => {
                let r = rng.gen_range(0.8..1.3);
                MonotonePair {
                    name: format!("{i:02}-pball-chain"),
                    inner: ConvexBody::pball(2.0, DVector::from_element(2, r)).expect("valid"),
                    outer: ConvexBody::pball(6.0, DVector::from_element(2, r)).expect("valid"),
                }
            }
            _ => {
                let k = random_ellipsoid(3, rng.gen());
                let c = rng.gen_range(1.1..1.8);
                MonotonePair {
                    name: format!("{i:02}-spatial-dilate"),
                    inner: k.clone(),
                    outer: k.dilate(c).expect("positive factor"),
                }
            }
        };
        pairs.push(pair);
    }
    // Each pair meets a unit-ball geometry of its own dimension; a single
    // shared T would reject the spatial pairs outright.
    let started = Instant::now();
    let hash = config_hash(config);
    let outs: Vec<CaseOut> = pairs
        .par_iter()
        .enumerate()
        .flat_map(|(i, pair)| {
            let t = ConvexBody::ball(pair.inner.dim(), 1.0);
            monotone_case(
                pair,
                &t,
                config,
                config.seed.wrapping_add(i as u64),
                config.product_form_every > 0 && i % config.product_form_every == 0,
                &hash,
            )
        })
        .collect();
    Ok(finish_report("monotonicity", &hash, config.seed, outs, started))
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

/// The default suite: all four experiments on the built-in catalog.
pub fn run_standard_suite(config: &HarnessConfig) -> Result<Vec<ExperimentReport>, HarnessError> {
    let catalog = built_in_catalog(&[2, 3], config.seed);
    Ok(vec![
        superadditivity_pair_sweep(config)?,
        verify_volume_bound(&catalog, &[2, 3], config)?,
        verify_inradius_bounds(&catalog, config)?,
        monotonicity_pair_sweep(config)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quick_config() -> HarnessConfig {
        HarnessConfig {
            bm_pairs: 2,
            monotonicity_pairs: 4,
            volume_samples: 40_000,
            volume_rel_err: 1e-2,
            solver: SolverConfig {
                modes: 12,
                samples: 64,
                starts: 2,
                seed: 5,
                tol_kkt: 0.8,
                refine: true,
                ..SolverConfig::default()
            },
            orbit: OrbitSearchConfig {
                starts: 8,
                max_iter: 300,
                ..OrbitSearchConfig::default()
            },
            ..HarnessConfig::default()
        }
    }

    #[test]
    fn translate_detector_finds_the_shift() {
        let k = ConvexBody::ball(2, 1.0);
        let shifted = k.clone().translate(DVector::from_vec(vec![0.3, -0.2])).unwrap();
        let v = translate_of(&k, &shifted).expect("translates detected");
        assert_relative_eq!(v[0], 0.3, epsilon = 1e-9);
        assert_relative_eq!(v[1], -0.2, epsilon = 1e-9);
        let other = ConvexBody::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![
            4.0, 1.0,
        ])))
        .unwrap();
        assert!(translate_of(&k, &other).is_none());
    }

    #[test]
    fn equal_disks_give_bm_equality() {
        let b = ConvexBody::ball(2, 1.0);
        let report =
            verify_bm_billiards(&b, &b.clone(), &ConvexBody::ball(2, 1.0), &quick_config())
                .unwrap();
        // Identical bodies are translates (shift 0): equality record present.
        let eq = report
            .cases
            .iter()
            .find(|c| c.id.ends_with("-equality"))
            .expect("equality record");
        assert_eq!(eq.verdict, Verdict::Pass, "note: {}", eq.note);
        let sup = report
            .cases
            .iter()
            .find(|c| c.id.ends_with("-super"))
            .unwrap();
        assert_eq!(sup.verdict, Verdict::Pass);
        // xi(2B) = 8 within a percent at this budget.
        assert_relative_eq!(sup.quantities["xi_sum"], 8.0, max_relative = 0.02);
        let sqrt = report.cases.iter().find(|c| c.id.ends_with("-sqrt")).unwrap();
        assert_eq!(sqrt.verdict, Verdict::Pass, "note: {}", sqrt.note);
    }

    #[test]
    fn volume_ratio_of_the_ball_matches_the_closed_form() {
        let catalog = vec![CatalogEntry::new("ball-2d", ConvexBody::ball(2, 1.0))];
        let report = verify_volume_bound(&catalog, &[2], &quick_config()).unwrap();
        let case = report.cases.iter().find(|c| c.id == "vol-ball-2d").unwrap();
        assert_eq!(case.verdict, Verdict::Pass);
        // xi = 4, vol = pi: ratio = 4 / (sqrt(2) sqrt(pi)).
        let expect = 4.0 / (2.0f64.sqrt() * std::f64::consts::PI.sqrt());
        assert_relative_eq!(case.quantities["ratio"], expect, max_relative = 0.02);
        assert!(report
            .cases
            .iter()
            .any(|c| c.id == "vol-dilation-invariance-2d" && c.verdict == Verdict::Pass));
    }

    #[test]
    fn ball_saturates_the_ghomi_lower_bound() {
        let catalog = vec![CatalogEntry::new("ball-2d", ConvexBody::ball(2, 1.0))];
        let report = verify_inradius_bounds(&catalog, &quick_config()).unwrap();
        for case in &report.cases {
            assert_eq!(case.verdict, Verdict::Pass, "{}: {}", case.id, case.note);
        }
        let lower = report
            .cases
            .iter()
            .find(|c| c.id == "inr-ball-2d-lower")
            .unwrap();
        // Width = 2 inrad for the disk: equality clause active, margin ~ 0.
        assert!(lower.note.contains("equality"));
        assert!(lower.quantities["margin"].abs() < 1e-5);
    }

    #[test]
    fn smoothed_square_reaches_equality_and_simplex_does_not() {
        let catalog = vec![
            CatalogEntry::new("cube-smoothed-2d", smoothed_cube(2, 1.0)),
            CatalogEntry::new("simplex-smoothed-2d", super::super::catalog::smoothed_simplex(2, 1.0)),
        ];
        let report = verify_inradius_bounds(&catalog, &quick_config()).unwrap();
        let square = report
            .cases
            .iter()
            .find(|c| c.id == "inr-cube-smoothed-2d-lower")
            .unwrap();
        assert_eq!(square.verdict, Verdict::Pass, "note: {}", square.note);
        // The smoothed square keeps the mid-edge two-bounce: xi = 4 inrad.
        assert!(
            square.quantities["margin"].abs() <= square.slack + 2.0 * square.quantities["width_excess"],
            "margin {} width excess {}",
            square.quantities["margin"],
            square.quantities["width_excess"]
        );
        let tri = report
            .cases
            .iter()
            .find(|c| c.id == "inr-simplex-smoothed-2d-lower")
            .unwrap();
        assert_eq!(tri.verdict, Verdict::Pass);
        assert!(
            tri.quantities["margin"] > 0.05,
            "triangle should be strictly above the lower bound, margin {}",
            tri.quantities["margin"]
        );
        assert!(report
            .cases
            .iter()
            .any(|c| c.id == "inr-simplex-smoothed-2d-sharpness"));
    }

    #[test]
    fn nested_disks_are_monotone_and_rejection_works() {
        let pairs = vec![
            MonotonePair {
                name: "00-disks".into(),
                inner: ConvexBody::ball(2, 1.0),
                outer: ConvexBody::ball(2, 2.0),
            },
            MonotonePair {
                name: "01-not-nested".into(),
                inner: ConvexBody::ball(2, 2.0),
                outer: ConvexBody::ball(2, 1.0),
            },
        ];
        let mut config = quick_config();
        config.product_form_every = 0;
        let report =
            verify_monotonicity(&pairs, &ConvexBody::ball(2, 1.0), &config).unwrap();
        let nested = report.cases.iter().find(|c| c.id == "mono-00-disks").unwrap();
        assert_eq!(nested.verdict, Verdict::Pass);
        assert_relative_eq!(nested.quantities["xi_inner"], 4.0, max_relative = 1e-6);
        assert_relative_eq!(nested.quantities["xi_outer"], 8.0, max_relative = 1e-6);
        let rejected = report
            .cases
            .iter()
            .find(|c| c.id == "mono-01-not-nested")
            .unwrap();
        assert_eq!(rejected.verdict, Verdict::Inconclusive);
        assert!(rejected.note.contains("rejected"));
    }

    #[test]
    fn sweep_reports_are_deterministic() {
        let config = HarnessConfig {
            monotonicity_pairs: 3,
            product_form_every: 0,
            ..quick_config()
        };
        let a = monotonicity_pair_sweep(&config).unwrap();
        let b = monotonicity_pair_sweep(&config).unwrap();
        assert_eq!(a.hashable_json(), b.hashable_json());
        assert!(a.aggregate.failed == 0, "unexpected failures: {:?}", a.aggregate);
    }
}

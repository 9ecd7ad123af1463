//! Symplectic capacities of convex bodies and the billiard orbits that
//! attain them.
//!
//! The crate is organized around three layers:
//!
//! * [`bodies`]: convex bodies as support/gauge oracle trees, with widths,
//!   inradii, Monte Carlo volumes and polar duality;
//! * [`capacity`]: a Clarke-dual action minimizer over Fourier loop
//!   coefficients, returning the capacity together with multiplier
//!   certificates, plus [`characteristics`] to turn minimizers into closed
//!   boundary trajectories;
//! * [`billiards`]: discrete trajectory dynamics on a product body K x T,
//!   shortest closed orbits, and the bridge between orbit length and the
//!   capacity of the product;
//! * [`harness`]: reproducible inequality experiments (volume bounds,
//!   Brunn-Minkowski style concavity, inradius and width comparisons) with
//!   JSON/CSV reports.
//!
//! Conventions used throughout: phase space is R^{2n} with coordinates
//! (q_1..q_n, p_1..p_n); the symplectic matrix J maps (q, p) to (-p, q);
//! loops are closed curves sampled on a uniform grid over [0, 2*pi).

pub mod billiards;
pub mod bodies;
pub mod capacity;
pub mod characteristics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod loops;
pub(crate) mod wire;
mod lp;

pub use bodies::metrics::{inradius, minkowski_symmetral, polytope_facets, volume_mc, width};
pub use bodies::{ConvexBody, LagrangianProduct, VolumeEstimate};
pub use capacity::{
    capacity_of_body, capacity_of_product, dual_action, kkt_residual, minimize_capacity,
    symplectic_action, CapacityResult, ConvexDomain, SolverConfig,
};
pub use billiards::{
    billiard_step, gliding_check, polygon_length, shortest_orbit_direct, shortest_orbit_over_m,
    t_width_two_bounce, trace, BilliardState, OrbitSearchConfig, ShortestOrbit,
};
pub use characteristics::{
    extract_bounces, inverse_map, reconstruct, BilliardTrajectory, BounceThresholds,
    Characteristic, TrajectoryClass,
};
pub use error::{BilliardError, CharacteristicError, GeometryError, HarnessError, SolverError};
pub use harness::{
    built_in_catalog, load_catalog, monotonicity_pair_sweep, run_standard_suite,
    superadditivity_pair_sweep, verify_bm_billiards, verify_inradius_bounds, verify_monotonicity,
    verify_volume_bound, CaseRecord, CatalogEntry, ExperimentReport, HarnessConfig, MonotonePair,
    Verdict,
};
pub use loops::FourierLoop;

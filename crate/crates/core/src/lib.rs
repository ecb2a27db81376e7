//! Champagne subdomains of the unit disk: pseudohyperbolic geometry, point
//! sequences and their densities, walk-on-spheres harmonic measure, and
//! Blaschke-product barriers.

// Negated comparisons double as NaN rejection in argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod domains;
pub mod error;
pub mod harmonic_density;
pub mod hyperbolic;
pub mod io;
pub mod quadrature;
pub mod sequences;
pub mod spatial;
pub mod streams;
pub mod walker;

pub use barriers::{
    annular_partition, barrier_lower_bound, barrier_weights, extremal_c, extremal_d, log_blaschke,
    BarrierCertificate, BarrierSpec, BlaschkeProduct, WeightScheme,
};
pub use domains::{
    build_champagne, build_finitely_connected, criterion_integral, criterion_sum, Bubble, ChampagneDomain,
    Classification, Component, CriterionReport, DeltaRule, RadiusProfile,
};
pub use error::{Error, Result};
pub use harmonic_density::{harmonic_density_curve, theorem2_report, HarmonicDensityCurve, HarmonicMc, Theorem2Report};
pub use hyperbolic::{
    euclidean_to_pseudo, mobius_apply, pseudo_distance, pseudo_to_euclidean, EuclideanDisk, Point, PseudoDisk,
};
pub use sequences::{
    blaschke_sum, covering_radius, generate_ring_lattice, separation, uniform_density, DensityMode, PointSequence,
    ProbeSet, RingLattice,
};
pub use walker::{
    estimate_measure, layered_crossing, one_hole_exact, sandwich_bounds, wos_walk, McParams, MeasureEstimate,
    SandwichBounds, Target,
};

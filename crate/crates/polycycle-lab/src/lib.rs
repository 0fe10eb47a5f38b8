//! Numerical laboratory for the one-dimensional return-map machinery of
//! sparkling separatrix connections: doubly-exponential scale arithmetic,
//! certified power-law map families, rectifying charts, connection root
//! sequences, topological invariant vectors and circle-rotation visit
//! frequencies.
//!
//! Everything deep runs on the u = -ln x scale (see [`scale`]); values like
//! eps_n ~ exp(-exp(n ln 2)) never need to be representable as doubles.

// `!(x > 0.0)` and friends are NaN-rejecting guards; the positive form would
// silently admit NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod checks;
pub mod config;
pub mod error;
pub mod invariant;
pub mod model;
pub mod ratio;
pub mod rectify;
pub mod report;
pub mod rotation;
pub mod scale;
pub mod spark;

pub use certify::{certify_estimates, EstimateCertificate, GridSpec, WorstRatios};
pub use config::{ModelAttachments, Perturbation, THConfig, THConfigSpec};
pub use error::{Error, Result};
pub use invariant::{
    assign_k, assign_k_brute, equivalence_verdict, frequencies, invariant_vector, phi_of,
    projective_invariant, Assignment, FrequencyReport, InvariantVector, Rationality, Verdict,
};
pub use model::{eval_map, iterate_map, shipped_models, MapFamily, ModelSpec, PowerLawModel};
pub use ratio::{detect_rational, RationalApprox};
pub use rectify::{
    affine_chart_u, chart_residual, rectify, rectify_contracting_inverse,
    rectify_contracting_inverse_u, rectify_u, RectifyingChart, RectifyOptions,
};
pub use report::fmt_g17;
pub use rotation::{
    orbit_frequency, predicted_limit, rational_orbit_count, CircleInterval, EndpointKind,
    FrequencyTrace, Prediction, RationalCount, RotationProblem,
};
pub use scale::{
    circle_reduce, power_law_step_u, x_from_xi, xi_from_x, LogLogCoord, NegLog, XValue,
    DEFAULT_TOL, NEG_LOG_MAX,
};
pub use spark::{
    connection_above, solve_spark, spark_sequence, th_sparks, EpsEntry, IotaEntry, SparkPoint,
    SparkProblem, SparkTable,
};

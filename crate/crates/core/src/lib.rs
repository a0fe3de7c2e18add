//! Deterministic constructions of large ultrametric-embeddable subspaces of
//! finite metric spaces, and the structures derived from the same
//! decomposition primitive: whole-space embeddings with bounded-distortion
//! cores, covers and a constant-time approximate distance oracle,
//! multi-embeddings with path guarantees, padded partition bundles, a
//! multi-scale coordinate embedding, and a distortion measurement framework.

pub mod analysis;
pub mod bundle;
pub mod cover;
pub mod decomposition;
pub mod embedding;
pub mod error;
pub mod fixtures;
pub mod hst;
pub mod io;
pub mod lp;
pub mod metric;
pub mod multi;
pub mod ramsey;
pub mod schedule;

pub use analysis::{
    brute_force_check, distortion_report, local_distortion, partial_report, scaling_curve,
    DistortionReport, PartialReport, ScalingCurve,
};
pub use bundle::{build_partition_bundle, verify_bundle, PartitionBundle};
pub use cover::{
    build_cover, load_oracle, oracle_build, oracle_stats, save_oracle, CoverBuilder,
    DistanceOracle, OracleStats, RamseyCover,
};
pub use decomposition::{decompose, decompose_half, decompose_relaxed, Decomposition};
pub use embedding::{partial_ramsey_embed, ramsey_embed, scaling_ramsey_embed, RamseyEmbedding};
pub use error::{Error, Result};
pub use fixtures::{generate, FixtureSpec};
pub use hst::{HstTree, HstViolation, LcaIndex, TreeBuilder};
pub use lp::{deterministic_lp_embed, CoordinateEmbedding};
pub use metric::{spherical_weight, MetricSpace, Subspace, WeightFunction};
pub use multi::{build_multi_embedding, path_distortion_report, MultiEmbedding, PathReport};
pub use ramsey::{
    partial_ramsey, ramsey_subspace, scaling_ramsey, verify_weighted_certificate, RamseyParams,
    RamseyResult,
};
pub use schedule::ScalingSchedule;

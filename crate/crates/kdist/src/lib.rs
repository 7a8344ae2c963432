//! Learned filter bounds for exact reverse-k-nearest-neighbor queries.
//!
//! A reverse-k-nearest-neighbor (RkNN) query asks for every database point
//! that counts the query among its own k nearest neighbors. The expensive part
//! of answering one exactly is knowing each point's k-distance (distance to
//! its k-th neighbor). This crate trains a small regression model that maps a
//! point's coordinates to its k-distances for all k up to `k_max`, then wraps
//! the predictions with lower/upper bounds derived from the extreme training
//! residuals. The bounds are conservative on the training set by construction,
//! so a filter-and-refine query over them returns exactly the brute-force
//! result while refining only a few candidates.
//!
//! Pipeline in module order:
//!
//! * [`dataset`] loads points; [`normalize`] provides the z-score input
//!   transform and the per-k min-max target transform.
//! * [`oracle`] computes exact kNN / k-distance ground truth and the
//!   brute-force RkNN reference.
//! * [`regress`] fits the multi-output models (decision tree, MLP).
//! * [`bounds`] turns training residuals into per-k / per-point / combined
//!   bound deltas and evaluates them (clipping, monotonicity restoration).
//! * [`cop`] is the per-point log-log line baseline the learned models are
//!   compared against.
//! * [`trainer`] runs the sample re-weighting loop and random search.
//! * [`engine`] packages everything into a serializable index artifact and
//!   answers queries; [`bench`] measures candidate-set sizes and produces
//!   reports.

pub mod bench;
pub mod bounds;
pub mod config;
pub mod cop;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod normalize;
pub mod oracle;
pub mod regress;
pub mod scalar;
pub mod table;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type of the main pipeline: coordinates, distances, k-distances,
/// normalization parameters and bound deltas are all kept in `f64`.
pub type Real = f64;

/// Production decision tree over [`Real`] parameters.
pub type DecisionTreeModel = regress::tree::TreeModel<Real>;

/// Production MLP; weights are kept and serialized at 32 bits.
pub type MlpModel = regress::mlp::Mlp<f32>;

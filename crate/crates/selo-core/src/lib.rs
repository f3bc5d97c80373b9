//! Link sign prediction for signed directed graphs.
//!
//! The pipeline predicts whether a directed edge carries a positive or a
//! negative sign from the structure of its surrounding subgraph:
//!
//! 1. [`subgraph::extract`] pulls the enclosing subgraph of the target pair,
//!    with the target edge itself masked out.
//! 2. [`encoder::reweight`] turns the signed adjacency into a weight matrix
//!    whose entries decay with distance to the targets and scale negative
//!    edges by a factor `beta`.
//! 3. [`encoder::likelihood_matrices`] maps the weight matrix into three
//!    likelihood matrices via a linear-optimization closed form.
//! 4. [`encoder::order_and_prune`] ranks non-target nodes by their likelihood
//!    mass against the targets and truncates each matrix to `K x K`.
//! 5. The flattened matrices feed a small fully connected classifier
//!    ([`model`]), and [`experiment`] orchestrates splits, training and the
//!    AUC / F1 metric suite.
//!
//! ```
//! use selo_core::{encoder, EncoderConfig, SignedDigraph, SignedEdge};
//!
//! let edges = vec![
//!     SignedEdge { src: 0, dst: 2, sign: 1 },
//!     SignedEdge { src: 2, dst: 1, sign: -1 },
//!     SignedEdge { src: 1, dst: 3, sign: 1 },
//!     SignedEdge { src: 0, dst: 1, sign: 1 }, // the edge under prediction
//! ];
//! let g = SignedDigraph::from_edges(4, edges).unwrap();
//!
//! let cfg = EncoderConfig::default(); // K = 5, alpha = 0.005, benchmark beta
//! let features = encoder::encode_edge(&g, 0, 1, &cfg).unwrap();
//! assert_eq!(features.len(), 75); // three flattened 5x5 likelihood matrices
//! ```

pub mod cache;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod seeding;
pub mod subgraph;
pub mod synth;

pub use encoder::{BetaMode, EncoderConfig, NodeOrdering, Sample, Variant};
pub use error::{Result, SeloError};
pub use experiment::{ExperimentReport, RunConfig, ScanParam};
pub use graph::{EdgeSplit, NodeId, SignRule, SignedDigraph, SignedEdge};
pub use metrics::Metrics;
pub use model::{MlpParams, TrainConfig};
pub use subgraph::EnclosingSubgraph;

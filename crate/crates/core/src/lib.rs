//! Latent state learning for time-varying graphs.
//!
//! A timestamped edge stream is turned into one snapshot graph per timestep,
//! either by aggregating edges in fixed windows or by letting every edge decay
//! exponentially since its last occurrence. Each snapshot is summarized by its
//! average degree and average clustering, the two series are detrended, and
//! KMeans groups timesteps into latent states whose sequence and transition
//! counts describe how the graph moves between regimes.
//!
//! The [`synth`] module generates streams with planted global events so the
//! whole pipeline can be checked against known ground truth.

pub mod detrend;
pub mod error;
pub mod features;
pub mod format;
pub mod ingest;
pub mod pipeline;
pub mod snapshot;
pub mod state;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureSeries, FeatureVector};
pub use ingest::{EdgeStream, NodeId, RawEdge, TimedEdge, Timestamp};
pub use snapshot::{DecayConfig, DiscreteConfig, SnapshotGraph};
pub use state::{State, StateModel, TransitionMatrix};

/// Seconds in one day; the default timestep for both snapshot models.
pub const SECONDS_PER_DAY: u64 = 86_400;

//! Butterfly counting on bipartite graph streams.
//!
//! * [`stream`]: records, parsing and the adjacency snapshot.
//! * [`exact`]: exact counting, support and enumeration.
//! * [`windowing`]: adaptive tumbling and landmark windows.
//! * [`estimator`]: the windowed cumulative estimators and their bounds.
//! * [`baselines`]: reservoir-sampling comparison estimators.
//! * [`synth`]: preferential-attachment stream generator.
//! * [`analysis`]: densification, inter-arrival and hub statistics.
//! * [`harness`]: ground truth, runs, metrics and CSV output.

pub mod analysis;
pub mod baselines;
pub mod estimator;
pub mod exact;
pub mod harness;
pub mod stream;
pub mod synth;
pub mod windowing;

pub use baselines::{FleetConfig, FleetState, FleetVariant};
pub use estimator::{EstimatorState, DEFAULT_ALPHA};
pub use exact::{brute_force_count, butterfly_support, count_butterflies, count_incident_butterflies, Butterfly, SupportMap};
pub use harness::{ground_truth_series, mape, run_pipeline, run_stream, Algorithm, RunConfig, RunReport, TruthLimit, WindowMetrics};
pub use stream::{BipartiteSnapshot, EdgeListFormat, Side, StreamRecord, StreamSource, Timestamp, VertexId};
pub use synth::{generate_stream, BaConfig, StampMode};
pub use windowing::{AdaptiveWindows, ClosedWindow, WindowConfig, WindowMode};

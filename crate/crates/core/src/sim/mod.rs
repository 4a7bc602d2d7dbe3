//! Closed-loop point-robot rollouts, trajectory metrics and batch evaluation.

mod batch;
mod metrics;
mod rollout;

pub use batch::{evaluate_batch, evaluate_batch_with_progress, BatchResult, BatchRow, BatchSpec, RunRecord, RunSummary, BATCH_CSV_HEADER};
pub use metrics::{path_length, percentile, smoothness, MIN_SEGMENT_LENGTH};
pub use rollout::{
    rollout, rollout_with_map, step, Outcome, Planner, RolloutConfig, RolloutMetrics, Sample, ScanSettings, TrajectoryRecord, TRAJECTORY_CSV_HEADER,
};

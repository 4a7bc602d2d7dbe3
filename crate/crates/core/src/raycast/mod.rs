//! Ray direction sampling, sphere tracing, and range scan synthesis.

mod halton;
mod scan;
mod trace;

pub use halton::{halton, halton_direction, RayBundle};
pub use scan::{synthesize_scan, Beam, RangeScan, ScanOptions, ScanPattern, SensorPose, INVALID_RANGE, SCAN_SCHEMA_VERSION};
pub use trace::{raycast, DEFAULT_MAX_RANGE, MAX_TRACE_STEPS};

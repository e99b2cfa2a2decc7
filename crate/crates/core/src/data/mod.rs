//! Dataset scanning, resolution census, aspect-preserving capping,
//! resolution grouping, round-robin batching and the synthetic toy corpus.

mod batch;
mod cap;
mod census;
mod group;
pub mod io;
mod toy;

pub use batch::{next_batch, Batch, BatchPlan, DEFAULT_BATCH_SIZE};
pub use cap::{cap_resize, DEFAULT_MAX_SIZE};
pub use census::{scan_dataset, ImageRecord, ResolutionCensus, ScanResult};
pub use group::{group_by_resolution, ResolutionGroup};
pub use toy::{make_toy_dataset, ToyConfig, ToyEntry, ToyManifest, TOY_CLASSES, TOY_MANIFEST};

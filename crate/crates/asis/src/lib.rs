//! Affinity-based instance segmentation for irregular shapes.
//!
//! The crate covers the non-neural parts of an affinity segmentation
//! pipeline end to end:
//!
//! - [`raster`]: dense label/mask primitives and geometric reductions
//! - [`kernel`]: affinity kernel construction and dataset-adaptive sizing
//! - [`affinity`]: ground-truth affinity derivation and seeded corruption
//! - [`graphmerge`]: pixel-graph construction, greedy merge, class assign
//! - [`metrics`]: dataset statistics (overlap-of-sum, MaxIoU, CCPI, aspect)
//! - [`eval`]: COCO-style mask average precision
//! - [`synth`]: procedural irregular-shape scene generation
//! - [`pipeline`]: end-to-end orchestration used by the `asis` CLI
//!
//! Everything is deterministic: randomness flows from explicit seeds and
//! repeated runs produce bit-identical artifacts.

pub mod affinity;
pub mod error;
pub mod eval;
pub mod graphmerge;
pub mod kernel;
pub mod metrics;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod synth;
pub mod viz;

pub use error::{Error, Result};

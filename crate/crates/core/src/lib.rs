//! Virtual pattern projection for stereo matching.
//!
//! Sparse disparity hints registered to the left view are turned into
//! identical synthetic patterns painted onto both images at corresponding
//! points, which makes an ordinary stereo matcher lock onto them. The crate
//! also ships a census-based semi-global matcher, evaluation metrics and the
//! file formats needed to run the whole chain.

pub mod config;
pub mod error;
pub mod eval;
pub mod hints;
pub mod io;
pub mod matcher;
pub mod occlusion;
pub mod patching;
pub mod patterning;
pub mod pipeline;
pub mod synthetic;
pub mod types;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use eval::{evaluate, MetricsReport};
pub use matcher::{match_stereo, SgmConfig};
pub use occlusion::{OcclusionConfig, OcclusionPolicy};
pub use patching::{PatchConfig, PatchStrategy};
pub use patterning::{PatternConfig, PatternKind};
pub use types::{
    corresponding_point, depth_to_disparity, disparity_to_depth, Calibration, DisparityMap, HintSet, Image,
    OcclusionMask, StereoPair,
};

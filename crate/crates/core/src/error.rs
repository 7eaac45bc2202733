use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth {0}: must be positive and finite")]
    InvalidDepth(f64),

    #[error("invalid disparity {0}: must be positive and finite")]
    InvalidDisparity(f64),

    #[error("invalid calibration: focal {focal_px} px, baseline {baseline_m} m")]
    InvalidCalibration { focal_px: f64, baseline_m: f64 },

    #[error("buffer length {actual} does not match {width}x{height}x{channels}")]
    BufferLength {
        width: usize,
        height: usize,
        channels: usize,
        actual: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("ground truth has no valid pixels")]
    EmptyGroundTruth,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("disparity {value} out of range for {format}")]
    OutOfRange { value: f64, format: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

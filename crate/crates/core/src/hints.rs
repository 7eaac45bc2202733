//! Sparse hint generation, perturbation, ingestion and statistics.

use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::types::{depth_to_disparity, disparity_to_depth, Calibration, DisparityMap, HintSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Fraction of valid ground-truth pixels kept as hints.
    pub density: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            density: 0.05,
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!(
                "sampling density {} not in (0, 1]",
                self.density
            )));
        }
        Ok(())
    }
}

/// Depth noise with standard deviation `k * z^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub k: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { k: 0.0019, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HintStats {
    pub density: f64,
    /// Mean absolute difference over pixels valid in both hints and GT.
    pub mae_vs_gt: f64,
    pub compared_pixels: usize,
    pub histogram: Vec<usize>,
    /// Upper edge of the histogram range; bins span `[0, max_disparity]`.
    pub max_disparity: f64,
}

/// Keeps `round(density * n)` valid ground-truth pixels, chosen uniformly
/// without replacement.
pub fn sample_from_gt(gt: &DisparityMap, cfg: &SamplingConfig) -> Result<HintSet> {
    cfg.validate()?;
    let valid: Vec<usize> = (0..gt.len()).filter(|&i| gt.valid()[i]).collect();
    if valid.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let count = ((cfg.density * valid.len() as f64).round() as usize).min(valid.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let picks = index::sample(&mut rng, valid.len(), count);

    let mut values = vec![0.0f32; gt.len()];
    let mut mask = vec![false; gt.len()];
    for k in picks.iter() {
        let i = valid[k];
        values[i] = gt.values()[i];
        mask[i] = true;
    }
    HintSet::new(DisparityMap::new(gt.width(), gt.height(), values, mask)?)
}

/// Perturbs each hint in depth space with zero-mean Gaussian noise of
/// standard deviation `k * z^2`. Hints whose perturbed depth is not positive,
/// or whose disparity no longer fits the image, are dropped.
pub fn apply_sensor_noise(hints: &HintSet, cal: &Calibration, cfg: &NoiseConfig) -> HintSet {
    if cfg.k == 0.0 {
        return hints.clone();
    }
    let src = hints.map();
    let width = src.width() as f64;
    let mut values = src.values().to_vec();
    let mut valid = src.valid().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in 0..values.len() {
        if !valid[i] {
            continue;
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        let Ok(z) = disparity_to_depth(values[i] as f64, cal) else {
            valid[i] = false;
            values[i] = 0.0;
            continue;
        };
        let noisy = z + eps * cfg.k * z * z;
        match depth_to_disparity(noisy, cal) {
            Ok(d) if d < width => values[i] = d as f32,
            _ => {
                valid[i] = false;
                values[i] = 0.0;
            }
        }
    }
    let map = DisparityMap::new(src.width(), src.height(), values, valid)
        .expect("noise keeps the map layout");
    HintSet::new(map).expect("disparities were range-checked")
}

/// Parses `x,y,disparity` records. Blank lines and `#` comments are skipped;
/// when a coordinate repeats, the larger disparity is kept.
pub fn parse_hint_csv(text: &str, width: usize, height: usize, origin: &str) -> Result<HintSet> {
    let mut map = DisparityMap::empty(width, height);
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Format {
            path: origin.to_string(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let x: usize = fields[0]
            .parse()
            .map_err(|_| err(format!("field x: not a pixel coordinate: {:?}", fields[0])))?;
        let y: usize = fields[1]
            .parse()
            .map_err(|_| err(format!("field y: not a pixel coordinate: {:?}", fields[1])))?;
        let d: f32 = fields[2]
            .parse()
            .map_err(|_| err(format!("field disparity: not a number: {:?}", fields[2])))?;
        if x >= width {
            return Err(err(format!("field x: {x} outside width {width}")));
        }
        if y >= height {
            return Err(err(format!("field y: {y} outside height {height}")));
        }
        if !(d.is_finite() && d >= 0.0 && (d as f64) < width as f64) {
            return Err(err(format!("field disparity: {d} outside [0, {width})")));
        }
        if map.get(x, y).is_none_or(|old| d > old) {
            map.set(x, y, d);
        }
    }
    HintSet::new(map)
}

pub fn format_hint_csv(hints: &HintSet) -> String {
    let mut out = String::from("# x,y,disparity\n");
    for (x, y, d) in hints.iter() {
        out.push_str(&format!("{x},{y},{d}\n"));
    }
    out
}

/// Loads hints from a CSV file or from any supported disparity map file.
pub fn load_sparse_hints(path: &Path, width: usize, height: usize) -> Result<HintSet> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = std::fs::read_to_string(path)?;
        return parse_hint_csv(&text, width, height, &path.display().to_string());
    }
    let map = crate::io::read_disparity(path)?;
    if map.width() != width || map.height() != height {
        return Err(Error::DimensionMismatch(format!(
            "hint map {}x{} vs image {}x{}",
            map.width(),
            map.height(),
            width,
            height
        )));
    }
    HintSet::new(map)
}

pub fn analyze_hints(hints: &HintSet, gt: &DisparityMap, bins: usize) -> Result<HintStats> {
    if !hints.map().same_size(gt) {
        return Err(Error::DimensionMismatch(format!(
            "hints {}x{} vs gt {}x{}",
            hints.width(),
            hints.height(),
            gt.width(),
            gt.height()
        )));
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let mut abs_sum = 0.0f64;
    let mut compared = 0usize;
    let mut max_d = 0.0f64;
    for (x, y, d) in hints.iter() {
        max_d = max_d.max(d as f64);
        if let Some(g) = gt.get(x, y) {
            abs_sum += (d as f64 - g as f64).abs();
            compared += 1;
        }
    }
    let mut histogram = vec![0usize; bins];
    for (_, _, d) in hints.iter() {
        let bin = if max_d > 0.0 {
            ((d as f64 / max_d * bins as f64).floor() as usize).min(bins - 1)
        } else {
            0
        };
        histogram[bin] += 1;
    }
    Ok(HintStats {
        density: hints.density(),
        mae_vs_gt: if compared > 0 {
            abs_sum / compared as f64
        } else {
            0.0
        },
        compared_pixels: compared,
        histogram,
        max_disparity: max_d,
    })
}

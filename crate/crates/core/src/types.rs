//! Shared image, disparity and calibration types.

use crate::error::{Error, Result};

/// An 8-bit image with interleaved channels, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Config(format!(
                "images must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::BufferLength {
                width,
                height,
                channels,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        let i = self.index(x, y, c);
        self.data[i] = value;
    }

    /// Single-channel view: the integer-rounded channel average for color
    /// images, a copy otherwise.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| {
                let sum: u32 = px.iter().map(|&v| v as u32).sum();
                let n = self.channels as u32;
                ((2 * sum + n) / (2 * n)) as u8
            })
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// Rounds half away from zero and saturates to the 8-bit range.
#[inline]
pub fn quantize(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

/// A rectified stereo pair; left is the reference view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StereoPair {
    pub left: Image,
    pub right: Image,
}

impl StereoPair {
    pub fn new(left: Image, right: Image) -> Result<Self> {
        if !left.same_shape(&right) {
            return Err(Error::DimensionMismatch(format!(
                "left {}x{}x{} vs right {}x{}x{}",
                left.width, left.height, left.channels, right.width, right.height, right.channels
            )));
        }
        Ok(Self { left, right })
    }

    pub fn width(&self) -> usize {
        self.left.width
    }

    pub fn height(&self) -> usize {
        self.left.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    focal_px: f64,
    baseline_m: f64,
}

impl Calibration {
    pub fn new(focal_px: f64, baseline_m: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(focal_px) || !ok(baseline_m) {
            return Err(Error::InvalidCalibration {
                focal_px,
                baseline_m,
            });
        }
        Ok(Self {
            focal_px,
            baseline_m,
        })
    }

    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    pub fn baseline_m(&self) -> f64 {
        self.baseline_m
    }
}

/// `d = b * f / z`
pub fn depth_to_disparity(z: f64, cal: &Calibration) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidDepth(z));
    }
    Ok(cal.baseline_m * cal.focal_px / z)
}

/// `z = b * f / d`
pub fn disparity_to_depth(d: f64, cal: &Calibration) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidDisparity(d));
    }
    Ok(cal.baseline_m * cal.focal_px / d)
}

/// Column of the point in the target view matching left pixel `x` at
/// disparity `d`. Negative results fall off the left border of the target.
#[inline]
pub fn corresponding_point(x: f64, d: f64) -> f64 {
    x - d
}

/// Dense disparity values with a separate validity plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, values: Vec<f32>, valid: Vec<bool>) -> Result<Self> {
        for len in [values.len(), valid.len()] {
            if len != width * height {
                return Err(Error::BufferLength {
                    width,
                    height,
                    channels: 1,
                    actual: len,
                });
            }
        }
        let mut map = Self {
            width,
            height,
            values,
            valid,
        };
        for i in 0..map.values.len() {
            if map.valid[i] {
                let v = map.values[i];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidDisparity(v as f64));
                }
            } else {
                map.values[i] = 0.0;
            }
        }
        Ok(map)
    }

    /// All pixels invalid.
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
            valid: vec![false; width * height],
        }
    }

    /// Every pixel valid with the given value.
    pub fn constant(width: usize, height: usize, value: f32) -> Self {
        assert!(value.is_finite() && value >= 0.0);
        Self {
            width,
            height,
            values: vec![value; width * height],
            valid: vec![true; width * height],
        }
    }

    /// Builds a map from optional values; `None` is invalid.
    pub fn from_options(width: usize, height: usize, cells: &[Option<f32>]) -> Result<Self> {
        let values = cells.iter().map(|c| c.unwrap_or(0.0)).collect();
        let valid = cells.iter().map(Option::is_some).collect();
        Self::new(width, height, values, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.values[i])
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> Option<f32> {
        self.valid[i].then_some(self.values[i])
    }

    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        assert!(value.is_finite() && value >= 0.0, "bad disparity {value}");
        let i = y * self.width + x;
        self.values[i] = value;
        self.valid[i] = true;
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        let i = y * self.width + x;
        self.values[i] = 0.0;
        self.valid[i] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn same_size(&self, other: &DisparityMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Valid pixels as `(x, y, d)` in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        let w = self.width;
        self.valid
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(i, _)| (i % w, i / w, self.values[i]))
    }
}

/// Sparse disparity seeds on the left image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HintSet(DisparityMap);

impl HintSet {
    /// Wraps a map, rejecting hints outside `0 <= d < width`.
    pub fn new(map: DisparityMap) -> Result<Self> {
        let w = map.width() as f32;
        if let Some((x, y, d)) = map.iter_valid().find(|&(_, _, d)| d >= w) {
            return Err(Error::Config(format!(
                "hint at ({x},{y}) has disparity {d} >= image width {w}"
            )));
        }
        Ok(Self(map))
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self(DisparityMap::empty(width, height))
    }

    pub fn map(&self) -> &DisparityMap {
        &self.0
    }

    pub fn into_map(self) -> DisparityMap {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        self.0.get(x, y)
    }

    pub fn count(&self) -> usize {
        self.0.valid_count()
    }

    pub fn density(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.0.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        self.0.iter_valid()
    }
}

/// Per-pixel occlusion flags on the left grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl OcclusionMask {
    pub fn none(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    /// Checks the mask against the hints it refers to.
    pub fn new(hints: &HintSet, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != hints.width() * hints.height() {
            return Err(Error::BufferLength {
                width: hints.width(),
                height: hints.height(),
                channels: 1,
                actual: mask.len(),
            });
        }
        let valid = hints.map().valid();
        if let Some(i) = (0..mask.len()).find(|&i| mask[i] && !valid[i]) {
            return Err(Error::Config(format!(
                "occlusion flag at ({},{}) without a hint",
                i % hints.width(),
                i / hints.width()
            )));
        }
        Ok(Self {
            width: hints.width(),
            height: hints.height(),
            mask,
        })
    }

    pub(crate) fn from_flags(width: usize, height: usize, mask: Vec<bool>) -> Self {
        debug_assert_eq!(mask.len(), width * height);
        Self {
            width,
            height,
            mask,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn is_occluded(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cal(f: f64, b: f64) -> Calibration {
        Calibration::new(f, b).unwrap()
    }

    #[test]
    fn depth_to_disparity_examples() {
        assert_eq!(depth_to_disparity(10.0, &cal(1000.0, 0.1)).unwrap(), 10.0);
        let c = cal(1000.0, 0.1);
        let unit = depth_to_disparity(c.baseline_m() * c.focal_px(), &c).unwrap();
        assert!((unit - 1.0).abs() < 1e-12);
        let d = depth_to_disparity(0.5, &cal(500.0, 0.12)).unwrap();
        assert!((d - 120.0).abs() < 1e-9);
    }

    #[test]
    fn disparity_to_depth_examples() {
        assert!((disparity_to_depth(10.0, &cal(1000.0, 0.1)).unwrap() - 10.0).abs() < 1e-12);
        assert!((disparity_to_depth(120.0, &cal(500.0, 0.12)).unwrap() - 0.5).abs() < 1e-12);
        let c = cal(718.856, 0.54);
        let z = disparity_to_depth(depth_to_disparity(7.3, &c).unwrap(), &c).unwrap();
        assert!(((z - 7.3) / 7.3).abs() < 1e-9);
    }

    #[test]
    fn conversions_reject_non_positive() {
        let c = cal(1000.0, 0.1);
        assert!(matches!(depth_to_disparity(0.0, &c), Err(Error::InvalidDepth(_))));
        assert!(matches!(depth_to_disparity(-1.0, &c), Err(Error::InvalidDepth(_))));
        assert!(matches!(disparity_to_depth(0.0, &c), Err(Error::InvalidDisparity(_))));
        assert!(Calibration::new(0.0, 0.1).is_err());
        assert!(Calibration::new(100.0, -0.1).is_err());
    }

    #[test]
    fn corresponding_point_examples() {
        assert_eq!(corresponding_point(50.0, 0.0), 50.0);
        assert_eq!(corresponding_point(50.0, 10.5), 39.5);
        assert_eq!(corresponding_point(3.0, 8.0), -5.0);
    }

    #[test]
    fn constructors_reject_bad_buffers() {
        assert!(Image::new(4, 4, 1, vec![0; 15]).is_err());
        assert!(Image::new(4, 4, 2, vec![0; 32]).is_err());
        assert!(DisparityMap::new(2, 2, vec![0.0; 4], vec![true; 3]).is_err());
        assert!(DisparityMap::new(2, 2, vec![-1.0, 0.0, 0.0, 0.0], vec![true; 4]).is_err());
        let l = Image::filled(4, 4, 1, 0).unwrap();
        let r = Image::filled(4, 5, 1, 0).unwrap();
        assert!(StereoPair::new(l, r).is_err());
    }

    #[test]
    fn hints_reject_disparity_beyond_width() {
        let mut m = DisparityMap::empty(10, 2);
        m.set(5, 1, 10.0);
        assert!(HintSet::new(m.clone()).is_err());
        m.set(5, 1, 9.5);
        let h = HintSet::new(m).unwrap();
        assert_eq!(h.density(), 0.05);
    }

    #[test]
    fn occlusion_mask_requires_hints() {
        let mut m = DisparityMap::empty(3, 1);
        m.set(1, 0, 2.0);
        let h = HintSet::new(m).unwrap();
        assert!(OcclusionMask::new(&h, vec![false, true, false]).is_ok());
        assert!(OcclusionMask::new(&h, vec![true, false, false]).is_err());
    }

    #[test]
    fn gray_conversion_rounds() {
        let img = Image::new(2, 1, 3, vec![0, 0, 1, 10, 11, 11]).unwrap();
        assert_eq!(img.to_gray().data(), &[0, 11]);
    }

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        assert_eq!(quantize(127.5), 128);
        assert_eq!(quantize(127.49), 127);
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(300.0), 255);
    }

    proptest! {
        #[test]
        fn round_trip_identity(z in 1e-3f64..1e4, f in 1.0f64..5000.0, b in 1e-3f64..2.0) {
            let c = cal(f, b);
            let back = disparity_to_depth(depth_to_disparity(z, &c).unwrap(), &c).unwrap();
            prop_assert!(((back - z) / z).abs() < 1e-12);
        }

        #[test]
        fn disparity_strictly_decreasing_in_depth(a in 1e-3f64..1e4, b in 1e-3f64..1e4) {
            prop_assume!(a != b);
            let c = cal(700.0, 0.25);
            let (da, db) = (depth_to_disparity(a, &c).unwrap(), depth_to_disparity(b, &c).unwrap());
            prop_assert_eq!(a < b, da > db);
        }
    }
}

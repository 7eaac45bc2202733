//! Census-based semi-global matching.

pub mod aggregate;
pub mod census;
pub mod cost;
pub mod post;

pub use aggregate::{adaptive_p2, aggregate, aggregate_directions, aggregate_path, DIRECTIONS};
pub use census::{census_transform, Census};
pub use cost::{matching_cost, CostVolume, Reference};
pub use post::{fill_background, lr_check, speckle_filter, wta_subpixel};

use crate::error::{Error, Result};
use crate::types::{DisparityMap, StereoPair};

#[derive(Debug, Clone, PartialEq)]
pub struct SgmConfig {
    pub max_disparity: usize,
    pub p1: u16,
    pub p2_min: f64,
    pub p2_alpha: f64,
    pub p2_gamma: f64,
    pub paths: usize,
    pub census_window: usize,
    pub lr_check: bool,
    pub lr_threshold: f64,
    pub speckle: bool,
    pub speckle_max_size: usize,
    pub speckle_tol: f64,
    pub fill_holes: bool,
}

impl Default for SgmConfig {
    fn default() -> Self {
        Self {
            max_disparity: 192,
            p1: 11,
            p2_min: 17.0,
            p2_alpha: 0.5,
            p2_gamma: 35.0,
            paths: 8,
            census_window: 5,
            lr_check: true,
            lr_threshold: 1.0,
            speckle: true,
            speckle_max_size: 160,
            speckle_tol: 1.0,
            fill_holes: true,
        }
    }
}

// Keeps eight summed paths of 7x7 census costs inside u16.
const MAX_PENALTY: f64 = 4096.0;

impl SgmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.max_disparity == 0 {
            return bad("max_disparity must be at least 1".into());
        }
        if !(self.p2_min.is_finite() && self.p2_alpha.is_finite() && self.p2_gamma.is_finite()) {
            return bad("P2 parameters must be finite".into());
        }
        if self.p2_alpha < 0.0 {
            return bad(format!("p2_alpha {} must be non-negative", self.p2_alpha));
        }
        if f64::from(self.p1) >= self.p2_min {
            return bad(format!("p1 {} must be below p2_min {}", self.p1, self.p2_min));
        }
        if self.p2_min.max(self.p2_gamma) > MAX_PENALTY || f64::from(self.p1) > MAX_PENALTY {
            return bad(format!("penalties must not exceed {MAX_PENALTY}"));
        }
        if self.paths != 4 && self.paths != 8 {
            return bad(format!("paths must be 4 or 8, got {}", self.paths));
        }
        if self.census_window.is_multiple_of(2) || !(3..=7).contains(&self.census_window) {
            return bad(format!(
                "census window {} must be odd and in 3..=7",
                self.census_window
            ));
        }
        if !(self.lr_threshold >= 0.0 && self.speckle_tol >= 0.0) {
            return bad("lr_threshold and speckle_tol must be non-negative".into());
        }
        Ok(())
    }
}

/// Disparity map referenced to one view.
fn single_pass(
    left: &Census,
    right: &Census,
    guide: &crate::types::Image,
    reference: Reference,
    cfg: &SgmConfig,
) -> Result<DisparityMap> {
    let cost = matching_cost(left, right, cfg.max_disparity, reference)?;
    let agg = aggregate(&cost, guide, cfg)?;
    Ok(wta_subpixel(&agg))
}

/// Full matcher: both views, left-right check, speckle removal and optional
/// background hole filling. Output is referenced to the left image.
pub fn match_stereo(pair: &StereoPair, cfg: &SgmConfig) -> Result<DisparityMap> {
    cfg.validate()?;
    let gl = pair.left.to_gray();
    let gr = pair.right.to_gray();
    let cl = census_transform(&gl, cfg.census_window)?;
    let cr = census_transform(&gr, cfg.census_window)?;
    let mut disp = single_pass(&cl, &cr, &gl, Reference::Left, cfg)?;
    if cfg.lr_check {
        let right = single_pass(&cl, &cr, &gr, Reference::Right, cfg)?;
        disp = lr_check(&disp, &right, cfg.lr_threshold);
    }
    if cfg.speckle {
        disp = speckle_filter(&disp, cfg.speckle_max_size, cfg.speckle_tol);
    }
    if cfg.fill_holes {
        disp = fill_background(&disp);
    }
    Ok(disp)
}

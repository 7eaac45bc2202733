//! Occlusion classification for hints and the projection policies applied to
//! occluded ones.
//!
//! Hints are warped into the target view on an integer grid. A warped hint
//! is occluded when some neighbor within an `rx x ry` window carries a
//! disparity larger by more than a distance-dependent margin:
//!
//! `W(x, y) - W(xo, yo) - lambda * (gamma * |x - xo| + (1 - gamma) * |y - yo|) > t`

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{HintSet, OcclusionMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcclusionPolicy {
    /// Occluded hints are not projected.
    No,
    /// Occluded hints are projected like visible ones.
    Bkgd,
    /// The reference pixel receives the target content at its correspondence.
    Fgd,
}

impl std::str::FromStr for OcclusionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "no" | "none" => Ok(Self::No),
            "bkgd" => Ok(Self::Bkgd),
            "fgd" => Ok(Self::Fgd),
            _ => Err(Error::Config(format!("unknown occlusion policy {s:?}"))),
        }
    }
}

impl std::fmt::Display for OcclusionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::No => "no",
            Self::Bkgd => "bkgd",
            Self::Fgd => "fgd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub threshold: f64,
    pub window_x: usize,
    pub window_y: usize,
    pub policy: OcclusionPolicy,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            gamma: 0.4375,
            threshold: 1.0,
            window_x: 9,
            window_y: 7,
            policy: OcclusionPolicy::Fgd,
        }
    }
}

impl OcclusionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("rx", self.window_x), ("ry", self.window_y)] {
            if w == 0 || w % 2 == 0 {
                return Err(Error::Config(format!("occlusion window {name}={w} must be odd")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        Ok(())
    }
}

/// Hints warped onto the target grid.
#[derive(Debug, Clone)]
pub struct WarpedHints {
    width: usize,
    height: usize,
    /// Surviving disparity per target cell.
    cells: Vec<Option<f32>>,
    /// Left-grid index of the hint that owns each cell.
    origin: Vec<Option<usize>>,
    /// Every in-bounds hint as (left index, target cell index, disparity).
    warped: Vec<(usize, usize, f32)>,
    /// Left-grid indices of hints whose correspondence leaves the image.
    out_of_bounds: Vec<usize>,
}

impl WarpedHints {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        self.cells[y * self.width + x]
    }

    /// Left-grid `(x, y)` of the hint owning the cell.
    pub fn origin(&self, x: usize, y: usize) -> Option<(usize, usize)> {
        self.origin[y * self.width + x].map(|i| (i % self.width, i / self.width))
    }

    pub fn out_of_bounds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_of_bounds.iter().map(|&i| (i % self.width, i / self.width))
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// Places each hint at `(round(x - d), y)`. Colliding hints keep the largest
/// disparity; on equal disparities the first in row-major order stays.
pub fn warp_hints(hints: &HintSet) -> WarpedHints {
    let (width, height) = (hints.width(), hints.height());
    let mut cells = vec![None; width * height];
    let mut origin = vec![None; width * height];
    let mut warped = Vec::new();
    let mut out_of_bounds = Vec::new();
    for (x, y, d) in hints.iter() {
        let src = y * width + x;
        let xw = (x as f64 - d as f64).round();
        if xw < 0.0 || xw >= width as f64 {
            out_of_bounds.push(src);
            continue;
        }
        let cell = y * width + xw as usize;
        warped.push((src, cell, d));
        if cells[cell].is_none_or(|old: f32| d > old) {
            cells[cell] = Some(d);
            origin[cell] = Some(src);
        }
    }
    WarpedHints {
        width,
        height,
        cells,
        origin,
        warped,
        out_of_bounds,
    }
}

/// `neighbor - center - lambda * (gamma * |dx| + (1 - gamma) * |dy|)`; the
/// center is occluded when this exceeds the threshold for some neighbor.
pub fn occlusion_score(neighbor: f64, center: f64, dx: f64, dy: f64, cfg: &OcclusionConfig) -> f64 {
    neighbor - center - cfg.lambda * (cfg.gamma * dx.abs() + (1.0 - cfg.gamma) * dy.abs())
}

/// Whether a hint of disparity `d` warped to `(xo, yo)` has a neighbor in `w`
/// violating the occlusion inequality. The cell itself takes part, so a hint
/// that lost a collision to a larger disparity is tested against the winner.
fn violates(w: &WarpedHints, xo: usize, yo: usize, d: f32, cfg: &OcclusionConfig) -> bool {
    let (hx, hy) = (cfg.window_x / 2, cfg.window_y / 2);
    let y_range = yo.saturating_sub(hy)..(yo + hy + 1).min(w.height);
    let x_range = xo.saturating_sub(hx)..(xo + hx + 1).min(w.width);
    for y in y_range {
        let dy = y.abs_diff(yo) as f64;
        for x in x_range.clone() {
            let Some(n) = w.cells[y * w.width + x] else {
                continue;
            };
            let dx = x.abs_diff(xo) as f64;
            if occlusion_score(n as f64, d as f64, dx, dy, cfg) > cfg.threshold {
                return true;
            }
        }
    }
    false
}

/// Occlusion test for every warped hint, mapped back to the left grid.
pub fn classify_occluded(warped: &WarpedHints, cfg: &OcclusionConfig) -> OcclusionMask {
    let width = warped.width;
    let flags: Vec<usize> = warped
        .warped
        .par_iter()
        .filter(|&&(_, cell, d)| violates(warped, cell % width, cell / width, d, cfg))
        .map(|&(src, _, _)| src)
        .collect();
    let mut mask = vec![false; warped.width * warped.height];
    for src in flags {
        mask[src] = true;
    }
    OcclusionMask::from_flags(warped.width, warped.height, mask)
}

/// Warps and classifies in one step.
pub fn detect_occlusions(hints: &HintSet, cfg: &OcclusionConfig) -> OcclusionMask {
    classify_occluded(&warp_hints(hints), cfg)
}

/// What projection does at one hint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    /// Same pattern on both views.
    PatternBoth,
    /// Pattern on the reference only; the correspondence is outside the
    /// target image.
    PatternLeftOnly,
    /// Copy target content at the correspondence into the reference pixel.
    CopyTarget,
    Skip,
}

pub fn apply_policy(occluded: bool, target_in_bounds: bool, policy: OcclusionPolicy) -> Directive {
    if !target_in_bounds {
        return Directive::PatternLeftOnly;
    }
    match (occluded, policy) {
        (false, _) | (true, OcclusionPolicy::Bkgd) => Directive::PatternBoth,
        (true, OcclusionPolicy::No) => Directive::Skip,
        (true, OcclusionPolicy::Fgd) => Directive::CopyTarget,
    }
}

//! Patch-based projection.
//!
//! Every hint claims a footprint of reference pixels around itself; each
//! claimed pixel `(u, v)` is paired with `(u - d, v)` in the target using the
//! hint's single disparity. Claims carry a bilateral weight so that
//! overlapping footprints can be arbitrated: every output pixel is written by
//! at most one hint, the one with the highest weight there (earlier hints in
//! row-major order win ties).
//!
//! Projection runs in two phases. Claims for all hints are computed in
//! parallel from the unmodified input pair, then committed serially in hint
//! order, so the result does not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::occlusion::{apply_policy, Directive, OcclusionPolicy};
use crate::patterning::{
    blend_pixel, most_distinctive_value, random_pattern_value, splat_targets, window_histogram,
    PatternConfig, PatternKind,
};
use crate::types::{quantize, HintSet, Image, OcclusionMask, StereoPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchStrategy {
    /// Single pixel per hint.
    None,
    /// `n_max x n_max` square.
    Fixed,
    /// Square whose side grows with the hint disparity.
    Distance,
    /// `n_max x n_max` square masked by the bilateral weight.
    Adaptive,
}

impl std::str::FromStr for PatchStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "pointwise" => Ok(Self::None),
            "fixed" => Ok(Self::Fixed),
            "distance" => Ok(Self::Distance),
            "adaptive" => Ok(Self::Adaptive),
            _ => Err(Error::Config(format!("unknown patch strategy {s:?}"))),
        }
    }
}

impl std::fmt::Display for PatchStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Fixed => "fixed",
            Self::Distance => "distance",
            Self::Adaptive => "adaptive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchConfig {
    pub strategy: PatchStrategy,
    /// Largest patch side; odd.
    pub n_max: usize,
    /// Exponent of the distance-based size curve.
    pub phi: f64,
    pub sigma_s: f64,
    pub sigma_c: f64,
    /// Minimum bilateral weight for a pixel to join an adaptive patch.
    pub t_w: f64,
    /// One pattern value per patch instead of one per pixel.
    pub uniform_fill: bool,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            strategy: PatchStrategy::Adaptive,
            n_max: 7,
            phi: 0.3,
            sigma_s: 2.0,
            sigma_c: 1.0,
            t_w: 0.001,
            uniform_fill: false,
        }
    }
}

impl PatchConfig {
    pub fn pointwise() -> Self {
        Self {
            strategy: PatchStrategy::None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.n_max.is_multiple_of(2) {
            return Err(Error::Config(format!("n_max {} must be odd", self.n_max)));
        }
        if !(self.phi > 0.0) {
            return Err(Error::Config(format!("phi {} must be positive", self.phi)));
        }
        if !(self.sigma_s > 0.0 && self.sigma_c > 0.0) {
            return Err(Error::Config("sigma_s and sigma_c must be positive".into()));
        }
        if !(self.t_w > 0.0 && self.t_w < 1.0) {
            return Err(Error::Config(format!("t_w {} not in (0, 1)", self.t_w)));
        }
        Ok(())
    }
}

/// Odd patch side for a hint of disparity `d` given the hint range in the
/// frame; nearer hints (larger disparity) get larger patches.
pub fn distance_patch_size(d: f64, d_min: f64, d_max: f64, n_max: usize, phi: f64) -> usize {
    if !(d_max > d_min) {
        return 1;
    }
    let ratio = ((d - d_min) / (d_max - d_min)).clamp(0.0, 1.0);
    let n = (ratio.powf(1.0 / phi) * (n_max as f64 - 1.0) + 1.0).round() as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Bilateral agreement between the hint pixel `(x, y)` and `(u, v)`:
/// `exp(-S / (2 sigma_s^2) - C / (2 sigma_c^2))` with squared spatial
/// distance `S` and absolute color difference `C` summed over channels.
pub fn adaptive_weight(
    left: &Image,
    (x, y): (usize, usize),
    (u, v): (usize, usize),
    sigma_s: f64,
    sigma_c: f64,
) -> f64 {
    let dx = x as f64 - u as f64;
    let dy = y as f64 - v as f64;
    let spatial = dx * dx + dy * dy;
    let color: f64 = (0..left.channels())
        .map(|c| (left.get(u, v, c) as f64 - left.get(x, y, c) as f64).abs())
        .sum();
    (spatial / (-2.0 * sigma_s * sigma_s) + color / (-2.0 * sigma_c * sigma_c)).exp()
}

/// One pixel a hint wants to write, with the real-valued result per channel.
#[derive(Debug, Clone, Copy)]
struct Claim {
    pixel: usize,
    weight: f64,
    value: [f64; 3],
}

#[derive(Debug, Default)]
struct HintClaims {
    left: Vec<Claim>,
    right: Vec<Claim>,
}

/// Best claim per pixel of one image.
#[derive(Debug, Clone)]
pub struct WeightBuffer {
    score: Vec<f64>,
    owner: Vec<Option<u32>>,
    value: Vec<[f64; 3]>,
}

impl WeightBuffer {
    fn new(len: usize) -> Self {
        Self {
            score: vec![f64::NEG_INFINITY; len],
            owner: vec![None; len],
            value: vec![[0.0; 3]; len],
        }
    }

    fn offer(&mut self, hint: u32, claim: &Claim) {
        let p = claim.pixel;
        if claim.weight > self.score[p] {
            self.score[p] = claim.weight;
            self.owner[p] = Some(hint);
            self.value[p] = claim.value;
        }
    }

    /// Index of the winning hint per pixel.
    pub fn owners(&self) -> &[Option<u32>] {
        &self.owner
    }

    pub fn score(&self, pixel: usize) -> Option<f64> {
        self.owner[pixel].map(|_| self.score[pixel])
    }

    fn apply(&self, img: &mut Image) {
        let ch = img.channels();
        let data = img.data_mut();
        for (p, owner) in self.owner.iter().enumerate() {
            if owner.is_some() {
                for c in 0..ch {
                    data[p * ch + c] = quantize(self.value[p][c]);
                }
            }
        }
    }
}

/// Projected pair plus per-pixel ownership, for inspection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub pair: StereoPair,
    /// Hint coordinates, indexed by the ids stored in the weight buffers.
    pub hints: Vec<(usize, usize, f32)>,
    pub left: WeightBuffer,
    pub right: WeightBuffer,
}

pub fn project_patches(
    pair: &StereoPair,
    hints: &HintSet,
    occlusion: &OcclusionMask,
    pattern: &PatternConfig,
    patch: &PatchConfig,
    policy: OcclusionPolicy,
) -> Result<StereoPair> {
    project_with_ownership(pair, hints, occlusion, pattern, patch, policy).map(|p| p.pair)
}

pub fn project_with_ownership(
    pair: &StereoPair,
    hints: &HintSet,
    occlusion: &OcclusionMask,
    pattern: &PatternConfig,
    patch: &PatchConfig,
    policy: OcclusionPolicy,
) -> Result<Projection> {
    pattern.validate()?;
    patch.validate()?;
    let (w, h) = (pair.width(), pair.height());
    if hints.width() != w || hints.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "hints {}x{} vs images {w}x{h}",
            hints.width(),
            hints.height()
        )));
    }
    if occlusion.width() != w || occlusion.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "occlusion mask {}x{} vs images {w}x{h}",
            occlusion.width(),
            occlusion.height()
        )));
    }

    let list: Vec<(usize, usize, f32)> = hints.iter().collect();
    let (d_min, d_max) = list.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
        (lo.min(h.2 as f64), hi.max(h.2 as f64))
    });
    let ctx = Context {
        pair,
        pattern,
        patch,
        policy,
        d_min,
        d_max,
    };

    let claims: Vec<HintClaims> = list
        .par_iter()
        .map(|&(x, y, d)| ctx.claims(x, y, d, occlusion.is_occluded(x, y)))
        .collect();

    let mut left = WeightBuffer::new(w * h);
    let mut right = WeightBuffer::new(w * h);
    for (i, hc) in claims.iter().enumerate() {
        let id = i as u32;
        for c in &hc.left {
            left.offer(id, c);
        }
        for c in &hc.right {
            right.offer(id, c);
        }
    }

    let mut out = pair.clone();
    left.apply(&mut out.left);
    right.apply(&mut out.right);
    Ok(Projection {
        pair: out,
        hints: list,
        left,
        right,
    })
}

struct Context<'a> {
    pair: &'a StereoPair,
    pattern: &'a PatternConfig,
    patch: &'a PatchConfig,
    policy: OcclusionPolicy,
    d_min: f64,
    d_max: f64,
}

impl Context<'_> {
    fn side(&self, d: f32) -> usize {
        match self.patch.strategy {
            PatchStrategy::None => 1,
            PatchStrategy::Fixed | PatchStrategy::Adaptive => self.patch.n_max,
            PatchStrategy::Distance => distance_patch_size(
                d as f64,
                self.d_min,
                self.d_max,
                self.patch.n_max,
                self.patch.phi,
            ),
        }
    }

    /// Pattern values for target correspondence `x_prime` of pixel `(u, v)`.
    fn pattern_value(
        &self,
        rng: &mut ChaCha8Rng,
        (u, v): (usize, usize),
        x_prime: f64,
        side: usize,
    ) -> [f64; 3] {
        let (left, right) = (&self.pair.left, &self.pair.right);
        let mut out = [0.0; 3];
        for (c, slot) in out.iter_mut().enumerate().take(left.channels()) {
            *slot = match self.pattern.kind {
                PatternKind::Random => random_pattern_value(rng) as f64,
                PatternKind::Histogram => {
                    let hist = window_histogram(
                        left,
                        right,
                        u,
                        x_prime,
                        v,
                        self.pattern.search_length,
                        side + 2,
                        c,
                    );
                    most_distinctive_value(&hist) as f64
                }
            };
        }
        out
    }

    fn claims(&self, x: usize, y: usize, d: f32, occluded: bool) -> HintClaims {
        let (left, right) = (&self.pair.left, &self.pair.right);
        let (w, h, ch) = (left.width(), left.height(), left.channels());
        let d = d as f64;
        let target_in_bounds = !splat_targets(x as f64 - d, w).is_empty();
        let directive = apply_policy(occluded, target_in_bounds, self.policy);
        let mut out = HintClaims::default();
        if directive == Directive::Skip {
            return out;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.pattern.seed);
        rng.set_stream((y * w + x) as u64);
        let side = self.side(d as f32);
        let half = side / 2;
        let alpha = self.pattern.alpha;
        let uniform = (self.patch.uniform_fill && directive != Directive::CopyTarget)
            .then(|| self.pattern_value(&mut rng, (x, y), x as f64 - d, side));

        for v in y.saturating_sub(half)..(y + half + 1).min(h) {
            for u in x.saturating_sub(half)..(x + half + 1).min(w) {
                let weight =
                    adaptive_weight(left, (x, y), (u, v), self.patch.sigma_s, self.patch.sigma_c);
                let centre = (u, v) == (x, y);
                if self.patch.strategy == PatchStrategy::Adaptive
                    && !centre
                    && weight <= self.patch.t_w
                {
                    continue;
                }
                let x_prime = u as f64 - d;
                let lp = v * w + u;

                if directive == Directive::CopyTarget {
                    let src = x_prime.round();
                    if src < 0.0 || src >= w as f64 {
                        continue;
                    }
                    let src = src as usize;
                    let mut value = [0.0; 3];
                    for c in 0..ch {
                        value[c] = blend_pixel(
                            left.get(u, v, c) as f64,
                            right.get(src, v, c) as f64,
                            alpha,
                        );
                    }
                    out.left.push(Claim {
                        pixel: lp,
                        weight,
                        value,
                    });
                    continue;
                }

                let p = match uniform {
                    Some(p) => p,
                    None => self.pattern_value(&mut rng, (u, v), x_prime, side),
                };
                let mut value = [0.0; 3];
                for c in 0..ch {
                    value[c] = blend_pixel(left.get(u, v, c) as f64, p[c], alpha);
                }
                out.left.push(Claim {
                    pixel: lp,
                    weight,
                    value,
                });
                for t in splat_targets(x_prime, w) {
                    let mut value = [0.0; 3];
                    for c in 0..ch {
                        let current = right.get(t.x, v, c) as f64;
                        let blended = blend_pixel(current, p[c], alpha);
                        value[c] = t.keep * current + (1.0 - t.keep) * blended;
                    }
                    out.right.push(Claim {
                        pixel: v * w + t.x,
                        weight,
                        value,
                    });
                }
            }
        }
        out
    }
}

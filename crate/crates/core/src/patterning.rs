//! Pattern operators and their per-pixel application.
//!
//! A pattern value is drawn either uniformly at random or from the merged
//! intensity histogram of two scanline windows (one per view), picking the
//! intensity farthest from anything already present. Values are alpha-blended
//! into the reference pixel and splatted onto the two target pixels that
//! bracket the sub-pixel correspondence.

use rand::Rng;

use crate::error::{Error, Result};
use crate::occlusion::OcclusionPolicy;
use crate::patching::{project_patches, PatchConfig};
use crate::types::{HintSet, Image, OcclusionMask, StereoPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    Random,
    Histogram,
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "histogram" | "distinctive" => Ok(Self::Histogram),
            _ => Err(Error::Config(format!("unknown pattern kind {s:?}"))),
        }
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Histogram => "histogram",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternConfig {
    pub kind: PatternKind,
    /// Blend factor; 0 leaves the images untouched, 1 writes the raw pattern.
    pub alpha: f64,
    /// Length of the histogram search window along the scanline.
    pub search_length: usize,
    pub seed: u64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            kind: PatternKind::Random,
            alpha: 0.4,
            search_length: 64,
            seed: 0,
        }
    }
}

impl PatternConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if self.search_length == 0 {
            return Err(Error::Config("search length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform integer in `[0, 255]`.
pub fn random_pattern_value<R: Rng + ?Sized>(rng: &mut R) -> u8 {
    rng.random_range(0..=255u8)
}

/// Half-open index range of `len` samples centered on `center`, clipped to
/// `[0, limit)`.
fn centered_range(center: i64, len: usize, limit: usize) -> std::ops::Range<usize> {
    let start = center - (len / 2) as i64;
    let end = start + len as i64;
    let lo = start.clamp(0, limit as i64) as usize;
    let hi = end.clamp(0, limit as i64) as usize;
    lo..hi
}

/// Merged 256-bin histogram of one channel over two windows of
/// `length x height` pixels, centered on `(x, y)` in `left` and on
/// `(round(x_prime), y)` in `right`. Windows are clipped at the borders.
#[allow(clippy::too_many_arguments)]
pub fn window_histogram(
    left: &Image,
    right: &Image,
    x: usize,
    x_prime: f64,
    y: usize,
    length: usize,
    height: usize,
    channel: usize,
) -> [u32; 256] {
    let mut hist = [0u32; 256];
    let rows = centered_range(y as i64, height, left.height());
    let mut add = |img: &Image, cx: i64| {
        let cols = centered_range(cx, length, img.width());
        for v in rows.clone() {
            for u in cols.clone() {
                hist[img.get(u, v, channel) as usize] += 1;
            }
        }
    };
    add(left, x as i64);
    add(right, x_prime.round() as i64);
    hist
}

/// Distance from bin `i` to the nearest filled bin other than `i` itself,
/// or `None` when no other bin is filled.
pub fn hdist(hist: &[u32; 256], i: usize) -> Option<usize> {
    let below = (0..i).rev().find(|&j| hist[j] > 0).map(|j| i - j);
    let above = (i + 1..256).find(|&j| hist[j] > 0).map(|j| j - i);
    match (below, above) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// The empty bin farthest from every filled one; when no bin is empty, the
/// least populated bin. Ties go to the smallest intensity.
pub fn most_distinctive_value(hist: &[u32; 256]) -> u8 {
    // Nearest filled bin on each side, computed in two sweeps.
    let mut left_gap = [usize::MAX; 256];
    let mut last: Option<usize> = None;
    for i in 0..256 {
        if let Some(j) = last {
            left_gap[i] = i - j;
        }
        if hist[i] > 0 {
            last = Some(i);
        }
    }
    let mut best: Option<(usize, usize)> = None;
    let mut next: Option<usize> = None;
    let mut dist = [usize::MAX; 256];
    for i in (0..256).rev() {
        let right_gap = next.map_or(usize::MAX, |j| j - i);
        dist[i] = left_gap[i].min(right_gap);
        if hist[i] > 0 {
            next = Some(i);
        }
    }
    for i in 0..256 {
        if hist[i] == 0 && dist[i] != usize::MAX && best.is_none_or(|(_, d)| dist[i] > d) {
            best = Some((i, dist[i]));
        }
    }
    if let Some((i, _)) = best {
        return i as u8;
    }
    if hist.iter().all(|&c| c == 0) {
        return 0;
    }
    let mut argmin = 0;
    for i in 1..256 {
        if hist[i] < hist[argmin] {
            argmin = i;
        }
    }
    argmin as u8
}

/// Histogram pattern for a single pixel, using a window of height 3.
pub fn histogram_pattern_value(
    left: &Image,
    right: &Image,
    x: usize,
    x_prime: f64,
    y: usize,
    length: usize,
    channel: usize,
) -> u8 {
    let hist = window_histogram(left, right, x, x_prime, y, length, 3, channel);
    most_distinctive_value(&hist)
}

/// `(1 - alpha) * original + alpha * pattern`, unquantized.
#[inline]
pub fn blend_pixel(original: f64, pattern: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * original + alpha * pattern
}

/// A target column touched by sub-pixel splatting, with the weight kept on
/// its current content. The pattern receives `1 - keep`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatTarget {
    pub x: usize,
    pub keep: f64,
}

/// In-bounds target columns for a correspondence at `x_prime`. With
/// `beta = x' - floor(x')`, the floor column keeps `beta` of its content and
/// the ceil column keeps `1 - beta`. An integer `x_prime` touches one column.
pub fn splat_targets(x_prime: f64, width: usize) -> Vec<SplatTarget> {
    let floor = x_prime.floor();
    let beta = x_prime - floor;
    let mut out = Vec::with_capacity(2);
    let mut push = |col: f64, keep: f64| {
        if col >= 0.0 && (col as usize) < width {
            out.push(SplatTarget {
                x: col as usize,
                keep,
            });
        }
    };
    push(floor, beta);
    if beta > 0.0 {
        push(floor + 1.0, 1.0 - beta);
    }
    out
}

/// Splats `pattern` into one row of real-valued target intensities. Returns
/// `false` when both bracketing columns fall outside the row.
pub fn splat_right(row: &mut [f64], x_prime: f64, pattern: f64) -> bool {
    let targets = splat_targets(x_prime, row.len());
    for t in &targets {
        row[t.x] = t.keep * row[t.x] + (1.0 - t.keep) * pattern;
    }
    !targets.is_empty()
}

/// Pointwise projection: each hint patterns one reference pixel and the
/// target pixels bracketing its correspondence.
pub fn project_pointwise(
    pair: &StereoPair,
    hints: &HintSet,
    occlusion: &OcclusionMask,
    cfg: &PatternConfig,
    policy: OcclusionPolicy,
) -> Result<StereoPair> {
    project_patches(pair, hints, occlusion, cfg, &PatchConfig::pointwise(), policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute force: maximize the minimum distance to any filled bin.
    fn oracle(hist: &[u32; 256]) -> u8 {
        let filled: Vec<i64> = (0..256).filter(|&i| hist[i] > 0).map(|i| i as i64).collect();
        let mut best: Option<(usize, i64)> = None;
        for i in 0..256usize {
            if hist[i] > 0 {
                continue;
            }
            let d = filled.iter().map(|&s| (i as i64 - s).abs()).min().unwrap();
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => i as u8,
            None => (0..256).min_by_key(|&i| (hist[i], i)).unwrap() as u8,
        }
    }

    #[test]
    fn random_values_cover_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let (mut sum, mut lo, mut hi) = (0u64, 255u8, 0u8);
        for _ in 0..n {
            let v = random_pattern_value(&mut rng);
            sum += v as u64;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let mean = sum as f64 / n as f64;
        assert!((mean - 127.5).abs() < 0.5, "mean {mean}");
        assert_eq!((lo, hi), (0, 255));

        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(random_pattern_value(&mut a), random_pattern_value(&mut b));
        }
    }

    #[test]
    fn histogram_of_black_windows_picks_white() {
        let img = Image::filled(80, 10, 1, 0).unwrap();
        assert_eq!(histogram_pattern_value(&img, &img, 40, 30.0, 5, 64, 0), 255);
    }

    #[test]
    fn histogram_with_both_extremes_picks_lower_middle() {
        let mut hist = [0u32; 256];
        hist[0] = 3;
        hist[255] = 7;
        assert_eq!(hdist(&hist, 127), Some(127));
        assert_eq!(hdist(&hist, 128), Some(127));
        assert_eq!(most_distinctive_value(&hist), 127);
        assert_eq!(oracle(&hist), 127);
    }

    #[test]
    fn full_histogram_falls_back_to_rarest() {
        let mut hist = [5u32; 256];
        hist[42] = 1;
        assert_eq!(most_distinctive_value(&hist), 42);
        let mut tied = [5u32; 256];
        tied[200] = 2;
        tied[100] = 2;
        assert_eq!(most_distinctive_value(&tied), 100);
    }

    #[test]
    fn window_is_centered_and_clipped() {
        // 3 rows x 4 columns around (1, 1) in the left image, clipped to
        // columns 0..3, and the same around column round(5.5) = 6 on the right.
        let mut left = Image::filled(10, 3, 1, 0).unwrap();
        let right = Image::filled(10, 3, 1, 9).unwrap();
        left.set(2, 1, 0, 200);
        left.set(3, 1, 0, 201);
        let h = window_histogram(&left, &right, 1, 5.5, 1, 4, 3, 0);
        assert_eq!(h[200], 1);
        assert_eq!(h[201], 0);
        assert_eq!(h[0], 8);
        assert_eq!(h[9], 12);
        assert_eq!(h.iter().sum::<u32>(), 21);
    }

    #[test]
    fn blend_examples() {
        assert_eq!(blend_pixel(100.0, 200.0, 0.0), 100.0);
        assert_eq!(blend_pixel(100.0, 200.0, 1.0), 200.0);
        assert!((blend_pixel(100.0, 200.0, 0.4) - 140.0).abs() < 1e-12);
    }

    #[test]
    fn splat_integer_coordinate_touches_one_pixel() {
        let mut row = vec![50.0; 20];
        assert!(splat_right(&mut row, 10.0, 200.0));
        assert_eq!(row[10], 200.0);
        assert_eq!(row[11], 50.0);
        assert_eq!(row[9], 50.0);
    }

    #[test]
    fn splat_half_pixel_is_symmetric() {
        let mut row = vec![100.0; 20];
        splat_right(&mut row, 10.5, 200.0);
        assert_eq!((row[10], row[11]), (150.0, 150.0));
    }

    #[test]
    fn splat_quarter_pixel_follows_printed_weights() {
        let mut row = vec![0.0; 20];
        splat_right(&mut row, 10.25, 100.0);
        assert!((row[10] - 75.0).abs() < 1e-12);
        assert!((row[11] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn splat_out_of_bounds() {
        let mut row = vec![0.0; 5];
        assert!(!splat_right(&mut row, -3.5, 100.0));
        assert!(!splat_right(&mut row, 5.0, 100.0));
        assert_eq!(row, vec![0.0; 5]);
        // Only the ceil side lands inside.
        assert!(splat_right(&mut row, -0.25, 100.0));
        assert!((row[0] - 75.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn histogram_selection_matches_brute_force(
            seed in any::<u64>(),
            fill in 1usize..=256,
            x in 0usize..48,
            xp in -10.0f64..58.0,
            y in 0usize..6,
            length in 1usize..80,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Restrict the palette so both sparse and saturated histograms occur.
            let palette: Vec<u8> = (0..fill).map(|_| rng.random()).collect();
            let mut pick = |n| {
                let data = (0..n).map(|_| palette[rng.random_range(0..palette.len())]).collect();
                Image::new(48, 6, 1, data).unwrap()
            };
            let left = pick(48 * 6);
            let right = pick(48 * 6);
            let hist = window_histogram(&left, &right, x, xp, y, length, 3, 0);
            prop_assert_eq!(histogram_pattern_value(&left, &right, x, xp, y, length, 0), oracle(&hist));
        }

        #[test]
        fn hdist_matches_min_distance(bits in proptest::collection::vec(any::<bool>(), 256), i in 0usize..256) {
            let mut hist = [0u32; 256];
            for (j, &b) in bits.iter().enumerate() {
                hist[j] = b as u32;
            }
            hist[i] = 0;
            let expected = (0..256).filter(|&s| hist[s] > 0).map(|s| (i as i64 - s as i64).unsigned_abs() as usize).min();
            prop_assert_eq!(hdist(&hist, i), expected);
        }

        #[test]
        fn splat_weights_sum_to_one(x_prime in 0.0f64..30.0) {
            let targets = splat_targets(x_prime, 64);
            let pattern_weight: f64 = targets.iter().map(|t| 1.0 - t.keep).sum();
            let beta = x_prime - x_prime.floor();
            if beta > 0.0 {
                prop_assert_eq!(targets.len(), 2);
                prop_assert!((pattern_weight - 1.0).abs() < 1e-12);
                prop_assert!((targets[0].keep + targets[1].keep - 1.0).abs() < 1e-12);
            } else {
                prop_assert_eq!(targets.len(), 1);
                prop_assert_eq!(targets[0].keep, 0.0);
            }
        }
    }
}

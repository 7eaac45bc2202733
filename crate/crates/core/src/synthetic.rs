//! Synthetic rectified scenes made of fronto-parallel layers, with exact
//! ground truth and visibility.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::types::{quantize, DisparityMap, Image, StereoPair};

/// A fronto-parallel rectangle at integer disparity. `rect` is
/// `(x0, y0, x1, y1)` in left-image coordinates, end exclusive; `None` covers
/// the whole plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub rect: Option<(i64, i64, i64, i64)>,
    pub disparity: u32,
    pub color: [u8; 3],
    /// Half-range of the per-pixel texture around `color`.
    pub texture: f64,
    pub seed: u64,
}

impl Layer {
    pub fn plane(disparity: u32, color: [u8; 3], texture: f64, seed: u64) -> Self {
        Self {
            rect: None,
            disparity,
            color,
            texture,
            seed,
        }
    }

    pub fn rect(rect: (i64, i64, i64, i64), disparity: u32, color: [u8; 3], texture: f64, seed: u64) -> Self {
        Self {
            rect: Some(rect),
            disparity,
            color,
            texture,
            seed,
        }
    }

    fn covers(&self, u: i64, y: i64) -> bool {
        self.rect
            .is_none_or(|(x0, y0, x1, y1)| u >= x0 && u < x1 && y >= y0 && y < y1)
    }

    /// Surface color at left coordinate `(u, y)`.
    fn shade(&self, u: i64, y: i64) -> [f64; 3] {
        let n = if self.texture == 0.0 {
            0.0
        } else {
            let h = splitmix(self.seed ^ splitmix(u as u64 ^ splitmix(y as u64)));
            (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        self.color.map(|c| c as f64 + self.texture * n)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// The first layer should be an unbounded plane so every ray hits
    /// something.
    pub layers: Vec<Layer>,
}

impl Scene {
    /// Nearest layer hit by the left ray at `(x, y)`.
    pub fn left_layer(&self, x: usize, y: usize) -> Option<usize> {
        self.nearest(|l| l.covers(x as i64, y as i64))
    }

    /// Nearest layer hit by the right ray at `(x, y)`.
    pub fn right_layer(&self, x: usize, y: usize) -> Option<usize> {
        self.nearest(|l| l.covers(x as i64 + l.disparity as i64, y as i64))
    }

    fn nearest(&self, hit: impl Fn(&Layer) -> bool) -> Option<usize> {
        (0..self.layers.len())
            .filter(|&i| hit(&self.layers[i]))
            .max_by_key(|&i| (self.layers[i].disparity, std::cmp::Reverse(i)))
    }

    /// Visibility of left pixel `(x, y)` in the right view: `Some(true)` when
    /// occluded, `Some(false)` when visible, `None` when the correspondence
    /// falls outside the right image.
    pub fn occluded(&self, x: usize, y: usize) -> Option<bool> {
        let layer = self.left_layer(x, y)?;
        let xr = x as i64 - self.layers[layer].disparity as i64;
        if xr < 0 {
            return None;
        }
        Some(self.right_layer(xr as usize, y) != Some(layer))
    }

    pub fn ground_truth(&self) -> DisparityMap {
        let mut gt = DisparityMap::empty(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if let Some(i) = self.left_layer(x, y) {
                    gt.set(x, y, self.layers[i].disparity as f32);
                }
            }
        }
        gt
    }

    /// Renders both views with independent Gaussian camera noise.
    pub fn render(&self, noise_sigma: f64, seed: u64) -> StereoPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut view = |right: bool| {
            let mut data = Vec::with_capacity(self.width * self.height * self.channels);
            for y in 0..self.height {
                for x in 0..self.width {
                    let hit = if right { self.right_layer(x, y) } else { self.left_layer(x, y) };
                    let rgb = hit.map_or([0.0; 3], |i| {
                        let l = &self.layers[i];
                        let u = x as i64 + if right { l.disparity as i64 } else { 0 };
                        l.shade(u, y as i64)
                    });
                    let mut push = |v: f64| {
                        let e: f64 = if noise_sigma > 0.0 {
                            StandardNormal.sample(&mut rng)
                        } else {
                            0.0
                        };
                        data.push(quantize(v + noise_sigma * e));
                    };
                    if self.channels == 1 {
                        push((rgb[0] + rgb[1] + rgb[2]) / 3.0);
                    } else {
                        rgb.into_iter().for_each(&mut push);
                    }
                }
            }
            Image::new(self.width, self.height, self.channels, data).expect("sized buffer")
        };
        let left = view(false);
        let right = view(true);
        StereoPair::new(left, right).expect("views share shape")
    }
}

/// Random-texture plane at constant disparity.
pub fn textured_plane(width: usize, height: usize, disparity: u32, seed: u64) -> (StereoPair, DisparityMap) {
    let scene = Scene {
        width,
        height,
        channels: 1,
        layers: vec![Layer::plane(disparity, [128; 3], 127.0, seed)],
    };
    (scene.render(0.0, seed), scene.ground_truth())
}

/// Textured background plane with a textured foreground rectangle, for
/// occlusion experiments. The disparity gap is at least 12 pixels.
pub fn two_plane_scene(width: usize, height: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_b = rng.random_range(4..=24u32);
    let d_f = d_b + rng.random_range(12..=40u32);
    let fw = rng.random_range(width as i64 / 5..=width as i64 / 2);
    let fh = rng.random_range(height as i64 / 4..=height as i64 / 2);
    let x0 = rng.random_range(d_f as i64..=width as i64 - fw);
    let y0 = rng.random_range(0..=height as i64 - fh);
    Scene {
        width,
        height,
        channels: 1,
        layers: vec![
            Layer::plane(d_b, [90; 3], 60.0, rng.random()),
            Layer::rect((x0, y0, x0 + fw, y0 + fh), d_f, [170; 3], 60.0, rng.random()),
        ],
    }
}

/// Indoor-like color scene mixing textureless and textured surfaces: a
/// bare wall, a plain cabinet, a poster, a book stack and a low-contrast
/// board.
pub fn desk_scene(width: usize, height: usize) -> Scene {
    let sx = |f: f64| (f * width as f64) as i64;
    let sy = |f: f64| (f * height as f64) as i64;
    let scale = |d: f64| ((d * width as f64 / 384.0).round() as u32).max(1);
    Scene {
        width,
        height,
        channels: 3,
        layers: vec![
            Layer::plane(scale(18.0), [196, 188, 170], 0.0, 1),
            Layer::rect((sx(0.05), sy(0.08), sx(0.38), sy(0.55)), scale(30.0), [40, 90, 150], 70.0, 2),
            Layer::rect((sx(0.45), sy(0.35), sx(0.95), sy(1.0)), scale(40.0), [150, 110, 80], 0.0, 3),
            Layer::rect((sx(0.58), sy(0.15), sx(0.80), sy(0.62)), scale(56.0), [200, 60, 50], 60.0, 4),
            Layer::rect((sx(0.12), sy(0.62), sx(0.42), sy(0.92)), scale(48.0), [120, 130, 120], 3.0, 5),
        ],
    }
}

pub const DESK_NOISE_SIGMA: f64 = 1.5;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_views_are_shifted_copies() {
        let (pair, gt) = textured_plane(40, 10, 6, 3);
        for y in 0..10 {
            for x in 6..40 {
                assert_eq!(pair.left.get(x, y, 0), pair.right.get(x - 6, y, 0));
            }
        }
        assert_eq!(gt.valid_count(), 400);
    }

    fn simple() -> Scene {
        Scene {
            width: 80,
            height: 4,
            channels: 1,
            layers: vec![
                Layer::plane(5, [50; 3], 20.0, 1),
                Layer::rect((30, 0, 60, 4), 20, [200; 3], 20.0, 2),
            ],
        }
    }

    #[test]
    fn occlusion_band_left_of_foreground() {
        let s = simple();
        // Background between 30-15 and 30 hides behind the foreground.
        for x in 5..30 {
            assert_eq!(s.occluded(x, 1), Some(x >= 15), "x={x}");
        }
        for x in 30..80 {
            assert_eq!(s.occluded(x, 1), Some(false));
        }
        assert_eq!(s.occluded(2, 1), None);
    }

    #[test]
    fn visible_points_look_the_same_in_both_views() {
        let s = simple();
        let pair = s.render(0.0, 0);
        let gt = s.ground_truth();
        for y in 0..4 {
            for x in 0..80 {
                if s.occluded(x, y) == Some(false) {
                    let d = gt.get(x, y).unwrap() as usize;
                    assert_eq!(pair.left.get(x, y, 0), pair.right.get(x - d, y, 0));
                }
            }
        }
    }

    #[test]
    fn render_is_deterministic() {
        let s = desk_scene(96, 72);
        assert_eq!(s.render(1.5, 4), s.render(1.5, 4));
        assert_ne!(s.render(1.5, 4), s.render(1.5, 5));
    }
}

use rayon::prelude::*;

use super::census::Census;
use crate::error::{Error, Result};

/// Per-pixel, per-disparity costs laid out as `[y][x][d]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostVolume<T> {
    width: usize,
    height: usize,
    disparities: usize,
    data: Vec<T>,
}

impl<T: Copy> CostVolume<T> {
    pub(crate) fn from_vec(width: usize, height: usize, disparities: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height * disparities);
        Self {
            width,
            height,
            disparities,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn disparities(&self) -> usize {
        self.disparities
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> T {
        self.data[(y * self.width + x) * self.disparities + d]
    }

    /// All disparities of one pixel.
    #[inline]
    pub fn costs(&self, x: usize, y: usize) -> &[T] {
        let i = (y * self.width + x) * self.disparities;
        &self.data[i..i + self.disparities]
    }
}

/// Which view the volume is referenced to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// `cost(x, y, d)` compares left `x` with right `x - d`.
    Left,
    /// `cost(x, y, d)` compares right `x` with left `x + d`.
    Right,
}

/// Hamming distances between census descriptors for disparities
/// `0..disparities`. Correspondences outside the image cost the full
/// descriptor length.
pub fn matching_cost(
    left: &Census,
    right: &Census,
    disparities: usize,
    reference: Reference,
) -> Result<CostVolume<u8>> {
    if left.width() != right.width() || left.height() != right.height() {
        return Err(Error::DimensionMismatch("census images differ in size".into()));
    }
    if disparities == 0 {
        return Err(Error::Config("need at least one disparity".into()));
    }
    let (w, h) = (left.width(), left.height());
    let max_cost = left.capacity() as u8;
    let mut data = vec![0u8; w * h * disparities];
    data.par_chunks_mut(w * disparities)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let cell = &mut row[x * disparities..(x + 1) * disparities];
                for (d, c) in cell.iter_mut().enumerate() {
                    *c = match reference {
                        Reference::Left if x >= d => {
                            (left.get(x, y) ^ right.get(x - d, y)).count_ones() as u8
                        }
                        Reference::Right if x + d < w => {
                            (right.get(x, y) ^ left.get(x + d, y)).count_ones() as u8
                        }
                        _ => max_cost,
                    };
                }
            }
        });
    Ok(CostVolume::from_vec(w, h, disparities, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::census::census_transform;
    use crate::types::Image;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(w, h, 1, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    /// Counts differing bits one at a time.
    fn hamming_oracle(a: u64, b: u64) -> u8 {
        (0..64).filter(|i| (a >> i) & 1 != (b >> i) & 1).count() as u8
    }

    #[test]
    fn shifted_images_match_at_true_disparity() {
        let d0 = 6;
        let base = noise(60, 20, 1);
        let mut right = Image::filled(60, 20, 1, 0).unwrap();
        for y in 0..20 {
            for x in 0..60 {
                right.set(x, y, 0, base.get((x + d0).min(59), y, 0));
            }
        }
        let cl = census_transform(&base, 5).unwrap();
        let cr = census_transform(&right, 5).unwrap();
        let vol = matching_cost(&cl, &cr, 16, Reference::Left).unwrap();
        for y in 2..18 {
            for x in (d0 + 2)..(60 - d0 - 2) {
                assert_eq!(vol.get(x, y, d0), 0, "({x},{y})");
            }
        }
        assert!(vol.data().iter().all(|&c| c <= 24));
    }

    #[test]
    fn matches_popcount_oracle() {
        for seed in 0..100u64 {
            let (l, r) = (noise(13, 7, seed * 2), noise(13, 7, seed * 2 + 1));
            let (cl, cr) = (census_transform(&l, 5).unwrap(), census_transform(&r, 5).unwrap());
            let vl = matching_cost(&cl, &cr, 9, Reference::Left).unwrap();
            let vr = matching_cost(&cl, &cr, 9, Reference::Right).unwrap();
            for y in 0..7 {
                for x in 0..13 {
                    for d in 0..9 {
                        let el = if x >= d { hamming_oracle(cl.get(x, y), cr.get(x - d, y)) } else { 24 };
                        let er = if x + d < 13 { hamming_oracle(cr.get(x, y), cl.get(x + d, y)) } else { 24 };
                        assert_eq!(vl.get(x, y, d), el);
                        assert_eq!(vr.get(x, y, d), er);
                    }
                }
            }
        }
    }
}

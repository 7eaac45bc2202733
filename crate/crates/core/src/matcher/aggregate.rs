//! Semi-global cost aggregation.
//!
//! Along each path direction `r` the aggregated cost is
//!
//! ```text
//! L(p, d) = C(p, d) + min(L(p-r, d), L(p-r, d±1) + P1, min_k L(p-r, k) + P2) - min_k L(p-r, k)
//! ```
//!
//! with `P2` adapted to the intensity step between `p - r` and `p`. Path
//! costs are summed over all directions in integer arithmetic.

use rayon::prelude::*;

use super::cost::CostVolume;
use super::SgmConfig;
use crate::error::{Error, Result};
use crate::types::Image;

/// Path directions `(dx, dy)`; the first four are used for 4-path runs.
pub const DIRECTIONS: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

/// `max(p2_min, p2_gamma - p2_alpha * delta_i)`.
pub fn adaptive_p2(delta_i: f64, cfg: &SgmConfig) -> f64 {
    (cfg.p2_gamma - cfg.p2_alpha * delta_i).max(cfg.p2_min)
}

/// Integer `P2` for every possible 8-bit intensity step.
pub fn p2_table(cfg: &SgmConfig) -> [u16; 256] {
    let mut t = [0u16; 256];
    for (delta, slot) in t.iter_mut().enumerate() {
        *slot = adaptive_p2(delta as f64, cfg).round() as u16;
    }
    t
}

struct PathParams<'a> {
    cost: &'a CostVolume<u8>,
    gray: &'a [u8],
    p1: u16,
    p2: [u16; 256],
}

impl PathParams<'_> {
    /// One step of the recurrence for pixel `(x, y)` given its predecessor's
    /// path costs (or `None` at the start of a path).
    #[inline]
    fn step(&self, x: usize, y: usize, prev: Option<(&[u16], usize)>, out: &mut [u16]) {
        let c = self.cost.costs(x, y);
        let Some((prev, prev_pixel)) = prev else {
            for (o, &v) in out.iter_mut().zip(c) {
                *o = v as u16;
            }
            return;
        };
        let w = self.cost.width();
        let delta = self.gray[y * w + x].abs_diff(self.gray[prev_pixel]);
        let p2 = self.p2[delta as usize];
        let min_prev = *prev.iter().min().expect("at least one disparity");
        let jump = min_prev + p2;
        let n = c.len();
        for d in 0..n {
            let mut best = prev[d].min(jump);
            if d > 0 {
                best = best.min(prev[d - 1] + self.p1);
            }
            if d + 1 < n {
                best = best.min(prev[d + 1] + self.p1);
            }
            out[d] = c[d] as u16 + best - min_prev;
        }
    }
}

fn add_into(acc: &mut [u16], src: &[u16]) {
    for (a, &s) in acc.iter_mut().zip(src) {
        *a += s;
    }
}

/// Adds the path costs of direction `(dx, dy)` into `acc`.
fn accumulate_direction(params: &PathParams, (dx, dy): (isize, isize), acc: &mut [u16]) {
    let (w, h, nd) = (params.cost.width(), params.cost.height(), params.cost.disparities());
    let row_len = w * nd;
    let pred = |x: usize| -> Option<usize> {
        let px = x as isize - dx;
        (px >= 0 && px < w as isize).then_some(px as usize)
    };

    if dy == 0 {
        // Rows are independent; along a row the predecessor is the pixel
        // visited just before.
        acc.par_chunks_mut(row_len).enumerate().for_each(|(y, acc_row)| {
            let mut row = vec![0u16; row_len];
            let mut prev = vec![0u16; nd];
            let xs: Vec<usize> = if dx > 0 { (0..w).collect() } else { (0..w).rev().collect() };
            for (k, &x) in xs.iter().enumerate() {
                let out = &mut row[x * nd..(x + 1) * nd];
                let before = (k > 0).then(|| (&prev[..], y * w + xs[k - 1]));
                params.step(x, y, before, out);
                prev.copy_from_slice(out);
            }
            add_into(acc_row, &row);
        });
        return;
    }

    // Each row depends only on the previous one along the path.
    let ys: Vec<usize> = if dy > 0 { (0..h).collect() } else { (0..h).rev().collect() };
    let mut prev_row = vec![0u16; row_len];
    let mut cur_row = vec![0u16; row_len];
    for (k, &y) in ys.iter().enumerate() {
        let first = k == 0;
        let prev_y = (y as isize - dy) as usize;
        cur_row
            .par_chunks_mut(nd)
            .enumerate()
            .for_each(|(x, out)| {
                let prev = if first {
                    None
                } else {
                    pred(x).map(|px| (&prev_row[px * nd..(px + 1) * nd], prev_y * w + px))
                };
                params.step(x, y, prev, out);
            });
        add_into(&mut acc[y * row_len..(y + 1) * row_len], &cur_row);
        std::mem::swap(&mut prev_row, &mut cur_row);
    }
}

fn check_inputs(cost: &CostVolume<u8>, gray: &Image) -> Result<()> {
    if gray.channels() != 1 || gray.width() != cost.width() || gray.height() != cost.height() {
        return Err(Error::DimensionMismatch(
            "aggregation guide must be a grayscale image the size of the cost volume".into(),
        ));
    }
    Ok(())
}

/// Sum of path costs over the given directions.
pub fn aggregate_directions(
    cost: &CostVolume<u8>,
    gray: &Image,
    cfg: &SgmConfig,
    directions: &[(isize, isize)],
) -> Result<CostVolume<u16>> {
    check_inputs(cost, gray)?;
    cfg.validate()?;
    let params = PathParams {
        cost,
        gray: gray.data(),
        p1: cfg.p1,
        p2: p2_table(cfg),
    };
    let mut acc = vec![0u16; cost.data().len()];
    for &dir in directions {
        accumulate_direction(&params, dir, &mut acc);
    }
    Ok(CostVolume::from_vec(
        cost.width(),
        cost.height(),
        cost.disparities(),
        acc,
    ))
}

/// Path costs of a single direction.
pub fn aggregate_path(
    cost: &CostVolume<u8>,
    gray: &Image,
    cfg: &SgmConfig,
    direction: (isize, isize),
) -> Result<CostVolume<u16>> {
    aggregate_directions(cost, gray, cfg, &[direction])
}

/// Sum over the configured number of paths.
pub fn aggregate(cost: &CostVolume<u8>, gray: &Image, cfg: &SgmConfig) -> Result<CostVolume<u16>> {
    aggregate_directions(cost, gray, cfg, &DIRECTIONS[..cfg.paths])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::census::census_transform;
    use crate::matcher::cost::{matching_cost, Reference};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adaptive_p2_examples() {
        let cfg = SgmConfig::default();
        assert_eq!(adaptive_p2(0.0, &cfg), 35.0);
        assert_eq!(adaptive_p2(36.0, &cfg), 17.0);
        assert_eq!(adaptive_p2(255.0, &cfg), 17.0);
    }

    #[test]
    fn single_pixel_keeps_unary_cost() {
        let img = Image::filled(1, 1, 1, 9).unwrap();
        let cost = CostVolume::from_vec(1, 1, 4, vec![3u8, 1, 4, 1]);
        let cfg = SgmConfig {
            max_disparity: 4,
            ..Default::default()
        };
        let agg = aggregate_path(&cost, &img, &cfg, (1, 0)).unwrap();
        assert_eq!(agg.data(), &[3, 1, 4, 1]);
    }

    #[test]
    fn path_start_equals_unary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cost = CostVolume::from_vec(6, 5, 5, (0..150).map(|_| rng.random_range(0..25)).collect());
        let img = Image::new(6, 5, 1, (0..30).map(|_| rng.random()).collect()).unwrap();
        let cfg = SgmConfig {
            max_disparity: 5,
            ..Default::default()
        };
        let agg = aggregate_path(&cost, &img, &cfg, (1, 0)).unwrap();
        for y in 0..5 {
            for d in 0..5 {
                assert_eq!(agg.get(0, y, d), cost.get(0, y, d) as u16);
            }
        }
        for x in 1..6 {
            for d in 0..5 {
                assert!(agg.get(x, 2, d) >= cost.get(x, 2, d) as u16);
            }
        }
    }

    #[test]
    fn constant_disparity_scene_keeps_unary_winner() {
        let (w, h, d0) = (32, 32, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tex: Vec<u8> = (0..(w + d0) * h).map(|_| rng.random()).collect();
        let left = Image::new(w, h, 1, (0..w * h).map(|i| tex[(i / w) * (w + d0) + i % w]).collect()).unwrap();
        let right = Image::new(w, h, 1, (0..w * h).map(|i| tex[(i / w) * (w + d0) + i % w + d0]).collect())
            .unwrap();
        // right(x) = tex(x + d0) = left(x + d0), so left x matches right x - d0.
        let cfg = SgmConfig {
            max_disparity: 12,
            ..Default::default()
        };
        let cost = matching_cost(
            &census_transform(&left, 5).unwrap(),
            &census_transform(&right, 5).unwrap(),
            12,
            Reference::Left,
        )
        .unwrap();
        let agg = aggregate(&cost, &left, &cfg).unwrap();
        let argmin = |c: &[u16]| (0..c.len()).min_by_key(|&d| (c[d], d)).unwrap();
        for y in 3..h - 3 {
            for x in d0 + 3..w - 3 {
                let unary: Vec<u16> = cost.costs(x, y).iter().map(|&c| c as u16).collect();
                let best = argmin(&unary);
                // Local extrema have saturated descriptors and tie at several
                // disparities; compare only unambiguous unary winners.
                if unary.iter().filter(|&&c| c == unary[best]).count() == 1 {
                    assert_eq!(best, d0);
                }
                assert_eq!(argmin(agg.costs(x, y)), d0, "({x},{y})");
            }
        }
    }
}

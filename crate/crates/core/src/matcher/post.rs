use std::collections::VecDeque;

use super::cost::CostVolume;
use crate::types::DisparityMap;

/// Vertex offset of the parabola through `(-1, minus)`, `(0, center)`,
/// `(1, plus)`. Zero when the three costs are collinear.
pub fn parabola_offset(minus: f64, center: f64, plus: f64) -> f64 {
    let denom = minus - 2.0 * center + plus;
    if denom == 0.0 {
        return 0.0;
    }
    (minus - plus) / (2.0 * denom)
}

/// Winner-take-all disparity with parabolic sub-pixel refinement. Ties go to
/// the smallest disparity; minima at either end of the range stay integer.
pub fn wta_subpixel(aggregated: &CostVolume<u16>) -> DisparityMap {
    let (w, h, nd) = (aggregated.width(), aggregated.height(), aggregated.disparities());
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let c = aggregated.costs(x, y);
            let mut best = 0;
            for d in 1..nd {
                if c[d] < c[best] {
                    best = d;
                }
            }
            let mut value = best as f64;
            if best > 0 && best + 1 < nd {
                value += parabola_offset(c[best - 1] as f64, c[best] as f64, c[best + 1] as f64);
            }
            values.push(value as f32);
        }
    }
    DisparityMap::new(w, h, values, vec![true; w * h]).expect("wta values are finite")
}

/// Invalidates left disparities that the right-referenced map does not
/// confirm within `threshold` at `round(x - d)`.
pub fn lr_check(left: &DisparityMap, right: &DisparityMap, threshold: f64) -> DisparityMap {
    assert!(left.same_size(right), "left/right maps differ in size");
    let mut out = left.clone();
    let w = left.width() as f64;
    for (x, y, d) in left.iter_valid() {
        let xr = (x as f64 - d as f64).round();
        let consistent = xr >= 0.0
            && xr < w
            && right
                .get(xr as usize, y)
                .is_some_and(|dr| (d as f64 - dr as f64).abs() <= threshold);
        if !consistent {
            out.invalidate(x, y);
        }
    }
    out
}

/// Removes 4-connected regions of similar disparity (neighbors within `tol`)
/// that have fewer than `max_size` pixels.
pub fn speckle_filter(disp: &DisparityMap, max_size: usize, tol: f64) -> DisparityMap {
    let (w, h) = (disp.width(), disp.height());
    let mut label = vec![usize::MAX; w * h];
    let mut out = disp.clone();
    let mut queue = VecDeque::new();
    let mut members = Vec::new();
    for start in 0..w * h {
        if label[start] != usize::MAX || !disp.valid()[start] {
            continue;
        }
        label[start] = start;
        queue.push_back(start);
        members.clear();
        while let Some(p) = queue.pop_front() {
            members.push(p);
            let (x, y) = (p % w, p / w);
            let dp = disp.values()[p] as f64;
            let mut visit = |q: usize| {
                if label[q] == usize::MAX
                    && disp.valid()[q]
                    && (disp.values()[q] as f64 - dp).abs() <= tol
                {
                    label[q] = start;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        if members.len() < max_size {
            for &p in &members {
                out.invalidate(p % w, p / w);
            }
        }
    }
    out
}

/// Fills holes along each row with the smaller (farther) of the two nearest
/// valid disparities, or the only one at row ends. Rows without any valid
/// pixel copy the nearest filled row; ties prefer the smaller disparity.
pub fn fill_background(disp: &DisparityMap) -> DisparityMap {
    let (w, h) = (disp.width(), disp.height());
    let mut out = disp.clone();
    let mut filled_rows = vec![false; h];
    for (y, filled) in filled_rows.iter_mut().enumerate() {
        let row: Vec<Option<f32>> = (0..w).map(|x| disp.get(x, y)).collect();
        if row.iter().all(Option::is_none) {
            continue;
        }
        *filled = true;
        let mut left_valid = vec![None; w];
        let mut last = None;
        for x in 0..w {
            if row[x].is_some() {
                last = row[x];
            }
            left_valid[x] = last;
        }
        let mut next = None;
        for x in (0..w).rev() {
            if row[x].is_some() {
                next = row[x];
                continue;
            }
            let value = match (left_valid[x], next) {
                (Some(a), Some(b)) => a.min(b),
                (a, b) => a.or(b).expect("row has a valid pixel"),
            };
            out.set(x, y, value);
        }
    }
    if filled_rows.iter().all(|&f| !f) {
        return out;
    }
    let source = out.clone();
    for y in 0..h {
        if filled_rows[y] {
            continue;
        }
        let above = (0..y).rev().find(|&r| filled_rows[r]);
        let below = (y + 1..h).find(|&r| filled_rows[r]);
        for x in 0..w {
            let value = match (above, below) {
                (Some(a), Some(b)) if y - a == b - y => {
                    source.get(x, a).unwrap().min(source.get(x, b).unwrap())
                }
                (Some(a), Some(b)) => source.get(x, if y - a < b - y { a } else { b }).unwrap(),
                (a, b) => source.get(x, a.or(b).unwrap()).unwrap(),
            };
            out.set(x, y, value);
        }
    }
    out
}

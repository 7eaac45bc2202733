use crate::error::{Error, Result};
use crate::types::Image;

/// Census descriptors of a grayscale image, one bitstring per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Census {
    width: usize,
    height: usize,
    window: usize,
    bits: Vec<u64>,
}

impl Census {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Descriptor length in bits, `window^2 - 1`.
    pub fn capacity(&self) -> u32 {
        (self.window * self.window - 1) as u32
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.bits[y * self.width + x]
    }
}

/// For each pixel, one bit per window neighbor in row-major order (center
/// skipped), set when the neighbor is darker than the center. Pixels outside
/// the image replicate the nearest edge pixel. Color input is averaged to
/// gray first.
pub fn census_transform(img: &Image, window: usize) -> Result<Census> {
    if window.is_multiple_of(2) || !(3..=7).contains(&window) {
        return Err(Error::Config(format!(
            "census window {window} must be odd and in 3..=7"
        )));
    }
    let gray = img.to_gray();
    let (w, h) = (gray.width(), gray.height());
    let r = (window / 2) as isize;
    let px = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        gray.data()[y * w + x]
    };
    let mut bits = vec![0u64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let center = px(x, y);
            let mut desc = 0u64;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    desc = (desc << 1) | (px(x + dx, y + dy) < center) as u64;
                }
            }
            bits[y as usize * w + x as usize] = desc;
        }
    }
    Ok(Census {
        width: w,
        height: h,
        window,
        bits,
    })
}

use image::{GrayImage, RgbImage};

use crate::error::{Error, Result};

/// Per-pixel census descriptors.
///
/// Neighbors of a `window x window` patch are visited in row-major order,
/// skipping the center; the k-th neighbor sets bit `k` (LSB first) when it is
/// strictly darker than the center. Coordinates outside the image are clamped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusImage {
    pub width: usize,
    pub height: usize,
    pub window: usize,
    pub bits: Vec<u64>,
}

impl CensusImage {
    pub fn n_bits(&self) -> u32 {
        (self.window * self.window - 1) as u32
    }

    pub fn at(&self, x: usize, y: usize) -> u64 {
        self.bits[y * self.width + x]
    }
}

pub fn check_window(window: usize) -> Result<()> {
    if window.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "census window must be odd, got {window}"
        )));
    }
    if window < 3 || window * window - 1 > 64 {
        return Err(Error::InvalidConfig(format!(
            "census window must be in 3..=7 to fit 64 bits, got {window}"
        )));
    }
    Ok(())
}

pub fn census_transform(img: &GrayImage, window: usize) -> Result<CensusImage> {
    check_window(window)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let r = (window / 2) as isize;
    let px = |x: isize, y: isize| -> u8 {
        let xc = x.clamp(0, w as isize - 1) as u32;
        let yc = y.clamp(0, h as isize - 1) as u32;
        img.get_pixel(xc, yc).0[0]
    };
    let mut bits = vec![0u64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = px(x, y);
            let mut code = 0u64;
            let mut k = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    if px(x + dx, y + dy) < c {
                        code |= 1 << k;
                    }
                    k += 1;
                }
            }
            bits[y as usize * w + x as usize] = code;
        }
    }
    Ok(CensusImage {
        width: w,
        height: h,
        window,
        bits,
    })
}

/// Luma with weights 0.299 R + 0.587 G + 0.114 B, rounded to nearest.
pub fn to_luma(rgb: &RgbImage) -> GrayImage {
    GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
        let [r, g, b] = rgb.get_pixel(x, y).0;
        let l = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
        image::Luma([l.round().clamp(0.0, 255.0) as u8])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_zero() {
        let img = GrayImage::from_pixel(6, 5, image::Luma([77]));
        let c = census_transform(&img, 5).unwrap();
        assert!(c.bits.iter().all(|&b| b == 0));
    }

    #[test]
    fn bright_center_pixel() {
        let mut img = GrayImage::from_pixel(5, 5, image::Luma([10]));
        img.put_pixel(2, 2, image::Luma([200]));
        let c = census_transform(&img, 3).unwrap();
        assert_eq!(c.at(2, 2), 0xff);
        // the bright pixel never counts as darker for its neighbors
        assert_eq!(c.at(1, 1), 0);
        assert_eq!(c.at(3, 2), 0);
    }

    #[test]
    fn ramp_center_bits() {
        let img = GrayImage::from_fn(3, 3, |x, y| image::Luma([(x + 3 * y) as u8]));
        let c = census_transform(&img, 3).unwrap();
        // neighbors 0,1,2,3 are darker than 4; 5,6,7,8 are not
        assert_eq!(c.at(1, 1), 0b0000_1111);
        assert_eq!(c.n_bits(), 8);
    }

    #[test]
    fn clamped_border() {
        let img = GrayImage::from_fn(3, 1, |x, _| image::Luma([x as u8 * 10]));
        let c = census_transform(&img, 3).unwrap();
        // pixel 0: neighbors (-1,*) clamp to itself, (1,*) brighter
        assert_eq!(c.at(0, 0), 0);
        // pixel 2: left column (value 10) darker in all three rows
        assert_eq!(c.at(2, 0), 0b0010_1001);
    }

    #[test]
    fn window_validation() {
        let img = GrayImage::new(4, 4);
        assert!(matches!(
            census_transform(&img, 4),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            census_transform(&img, 9),
            Err(Error::InvalidConfig(_))
        ));
        assert!(census_transform(&img, 7).is_ok());
    }

    #[test]
    fn luma_weights() {
        let rgb = RgbImage::from_pixel(1, 1, image::Rgb([100, 200, 50]));
        // 29.9 + 117.4 + 5.7 = 153.0
        assert_eq!(to_luma(&rgb).get_pixel(0, 0).0[0], 153);
    }
}

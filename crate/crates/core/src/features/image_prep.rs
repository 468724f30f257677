use std::path::Path;

use image::RgbImage;

/// Working resolution every image is resampled to before extraction.
pub const WORK_SIZE: usize = 128;

/// An RGB image at the fixed working resolution, channels in [0, 1].
#[derive(Debug, Clone)]
pub struct WorkImage {
    rgb: Vec<[f64; 3]>,
    luma: Vec<f64>,
}

impl WorkImage {
    pub fn open(path: &Path) -> Result<Self, String> {
        let decoded = image::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::from_rgb8(&decoded.to_rgb8()))
    }

    /// Bilinear resampling (pixel-center aligned) onto the working grid.
    pub fn from_rgb8(src: &RgbImage) -> Self {
        let (sw, sh) = (src.width() as usize, src.height() as usize);
        let px = |x: usize, y: usize| -> [f64; 3] {
            let p = src.get_pixel(x as u32, y as u32).0;
            [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]
        };
        if sw == WORK_SIZE && sh == WORK_SIZE {
            return Self::from_fn(px);
        }
        let sample_axis = |dst: usize, src_len: usize| -> (usize, usize, f64) {
            let pos = (dst as f64 + 0.5) * src_len as f64 / WORK_SIZE as f64 - 0.5;
            let pos = pos.clamp(0.0, (src_len - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src_len - 1);
            (lo, hi, pos - lo as f64)
        };
        Self::from_fn(|x, y| {
            let (x0, x1, fx) = sample_axis(x, sw);
            let (y0, y1, fy) = sample_axis(y, sh);
            let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
            let mut out = [0.0; 3];
            for ch in 0..3 {
                let top = a[ch] * (1.0 - fx) + b[ch] * fx;
                let bottom = c[ch] * (1.0 - fx) + d[ch] * fx;
                out[ch] = top * (1.0 - fy) + bottom * fy;
            }
            out
        })
    }

    /// Builds a working image from a per-pixel function `(x, y) -> rgb`.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut rgb = Vec::with_capacity(WORK_SIZE * WORK_SIZE);
        for y in 0..WORK_SIZE {
            for x in 0..WORK_SIZE {
                let p = f(x, y);
                rgb.push([p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0), p[2].clamp(0.0, 1.0)]);
            }
        }
        let luma = rgb
            .iter()
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect();
        WorkImage { rgb, luma }
    }

    pub fn width(&self) -> usize {
        WORK_SIZE
    }

    pub fn height(&self) -> usize {
        WORK_SIZE
    }

    pub fn rgb(&self) -> &[[f64; 3]] {
        &self.rgb
    }

    /// Rec. 601 luma, row-major.
    pub fn luma(&self) -> &[f64] {
        &self.luma
    }

    pub fn luma_at(&self, x: usize, y: usize) -> f64 {
        self.luma[y * WORK_SIZE + x]
    }
}

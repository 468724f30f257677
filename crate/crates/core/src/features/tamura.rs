use std::f64::consts::PI;

use super::WorkImage;

const KMAX: u32 = 5;
const DIR_BINS: usize = 16;
const DIR_THRESHOLD: f64 = 12.0 / 255.0;

struct Integral {
    size: usize,
    table: Vec<f64>,
}

impl Integral {
    fn new(values: &[f64], size: usize) -> Self {
        let stride = size + 1;
        let mut table = vec![0.0; stride * stride];
        for y in 0..size {
            let mut row = 0.0;
            for x in 0..size {
                row += values[y * size + x];
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
            }
        }
        Integral { size, table }
    }

    /// Mean over the half-open window `[x0, x1) x [y0, y1)` clipped to the image.
    fn mean(&self, x0: isize, y0: isize, x1: isize, y1: isize) -> f64 {
        let s = self.size as isize;
        let (x0, y0) = (x0.clamp(0, s) as usize, y0.clamp(0, s) as usize);
        let (x1, y1) = (x1.clamp(0, s) as usize, y1.clamp(0, s) as usize);
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        let stride = self.size + 1;
        let t = &self.table;
        let sum = t[y1 * stride + x1] - t[y0 * stride + x1] - t[y1 * stride + x0] + t[y0 * stride + x0];
        sum / ((x1 - x0) * (y1 - y0)) as f64
    }
}

fn coarseness(image: &WorkImage) -> f64 {
    let size = image.width();
    let integral = Integral::new(image.luma(), size);
    let mut total = 0.0;
    for y in 0..size as isize {
        for x in 0..size as isize {
            let mut best = (f64::NEG_INFINITY, 1u32);
            for k in 1..=KMAX {
                let half = 1isize << (k - 1);
                let avg = |cx: isize, cy: isize| integral.mean(cx - half, cy - half, cx + half, cy + half);
                let eh = (avg(x + half, y) - avg(x - half, y)).abs();
                let ev = (avg(x, y + half) - avg(x, y - half)).abs();
                let e = eh.max(ev);
                if e > best.0 + 1e-12 {
                    best = (e, k);
                }
            }
            total += (1u32 << best.1) as f64;
        }
    }
    total / (size * size) as f64
}

fn contrast(image: &WorkImage) -> f64 {
    let luma = image.luma();
    let n = luma.len() as f64;
    let mean = luma.iter().sum::<f64>() / n;
    let var = luma.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 1e-15 {
        return 0.0;
    }
    let m4 = luma.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let kurtosis = m4 / (var * var);
    var.sqrt() / kurtosis.powf(0.25)
}

fn directionality(image: &WorkImage) -> f64 {
    let size = image.width() as isize;
    let at = |x: isize, y: isize| image.luma_at(x.clamp(0, size - 1) as usize, y.clamp(0, size - 1) as usize);
    let mut hist = [0.0; DIR_BINS];
    let mut count = 0.0;
    for y in 0..size {
        for x in 0..size {
            let dh = (at(x + 1, y - 1) + at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + at(x - 1, y) + at(x - 1, y + 1));
            let dv = (at(x - 1, y + 1) + at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + at(x, y - 1) + at(x + 1, y - 1));
            if (dh.abs() + dv.abs()) / 2.0 < DIR_THRESHOLD {
                continue;
            }
            let theta = dv.atan2(dh).rem_euclid(PI);
            let bin = ((theta / PI * DIR_BINS as f64).floor() as usize).min(DIR_BINS - 1);
            hist[bin] += 1.0;
            count += 1.0;
        }
    }
    if count == 0.0 {
        return 0.0;
    }
    hist.iter_mut().for_each(|h| *h /= count);
    let peak = hist
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &h)| if h > best.1 { (i, h) } else { best })
        .0;
    let spread: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let d = i.abs_diff(peak);
            let d = d.min(DIR_BINS - d) as f64;
            d * d * h
        })
        .sum();
    let max_spread = (DIR_BINS / 2).pow(2) as f64;
    1.0 - spread / max_spread
}

/// Tamura coarseness, contrast and directionality.
pub(crate) fn tamura(image: &WorkImage) -> Vec<f64> {
    vec![coarseness(image), contrast(image), directionality(image)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_image() {
        let img = WorkImage::from_fn(|_, _| [0.4; 3]);
        let t = tamura(&img);
        assert_eq!(t[1], 0.0);
        assert_eq!(t[2], 0.0);
    }

    #[test]
    fn stripes_are_fully_directional() {
        let img = WorkImage::from_fn(|x, _| if (x / 4) % 2 == 0 { [0.0; 3] } else { [1.0; 3] });
        let t = tamura(&img);
        assert!((t[2] - 1.0).abs() < 1e-12, "{t:?}");
    }

    #[test]
    fn coarser_patterns_score_higher() {
        let fine = WorkImage::from_fn(|x, y| if (x / 2 + y / 2) % 2 == 0 { [0.0; 3] } else { [1.0; 3] });
        let coarse = WorkImage::from_fn(|x, y| if (x / 16 + y / 16) % 2 == 0 { [0.0; 3] } else { [1.0; 3] });
        assert!(coarseness(&coarse) > coarseness(&fine));
    }
}

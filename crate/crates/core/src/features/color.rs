use super::WorkImage;

fn bin(value: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let t = (value - lo) / (hi - lo);
    ((t * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

pub(crate) fn normalize_l1(mut hist: Vec<f64>) -> Vec<f64> {
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        hist.iter_mut().for_each(|h| *h /= total);
    } else {
        let uniform = 1.0 / hist.len() as f64;
        hist.iter_mut().for_each(|h| *h = uniform);
    }
    hist
}

pub(crate) fn luminance_histogram(image: &WorkImage) -> Vec<f64> {
    let mut hist = vec![0.0; 32];
    for &y in image.luma() {
        hist[bin(y, 0.0, 1.0, 32)] += 1.0;
    }
    normalize_l1(hist)
}

pub(crate) fn rgb_histogram(image: &WorkImage) -> Vec<f64> {
    let mut hist = vec![0.0; 64];
    for p in image.rgb() {
        let idx = bin(p[0], 0.0, 1.0, 4) * 16 + bin(p[1], 0.0, 1.0, 4) * 4 + bin(p[2], 0.0, 1.0, 4);
        hist[idx] += 1.0;
    }
    normalize_l1(hist)
}

/// Histogram over the opponent color space O1 = (R-G)/√2,
/// O2 = (R+G-2B)/√6, O3 = (R+G+B)/√3, four bins per axis.
pub(crate) fn opponent_histogram(image: &WorkImage) -> Vec<f64> {
    let (s2, s6, s3) = (2f64.sqrt(), 6f64.sqrt(), 3f64.sqrt());
    let mut hist = vec![0.0; 64];
    for p in image.rgb() {
        let o1 = (p[0] - p[1]) / s2;
        let o2 = (p[0] + p[1] - 2.0 * p[2]) / s6;
        let o3 = (p[0] + p[1] + p[2]) / s3;
        let idx = bin(o1, -1.0 / s2, 1.0 / s2, 4) * 16
            + bin(o2, -2.0 / s6, 2.0 / s6, 4) * 4
            + bin(o3, 0.0, s3, 4);
        hist[idx] += 1.0;
    }
    normalize_l1(hist)
}

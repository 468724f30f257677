use super::{color::normalize_l1, WorkImage};

/// Gradients weaker than this (on a [0, 1] luma scale) do not vote.
pub(crate) const MIN_MAGNITUDE: f64 = 1e-6;

/// Sobel responses `(gx, gy)` at `(x, y)`, borders replicated.
pub(crate) fn sobel(image: &WorkImage, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = (image.width() as isize, image.height() as isize);
    let at = |dx: isize, dy: isize| {
        let xx = (x as isize + dx).clamp(0, w - 1) as usize;
        let yy = (y as isize + dy).clamp(0, h - 1) as usize;
        image.luma_at(xx, yy)
    };
    let gx = (at(1, -1) + 2.0 * at(1, 0) + at(1, 1)) - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1));
    let gy = (at(-1, 1) + 2.0 * at(0, 1) + at(1, 1)) - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1));
    (gx, gy)
}

/// Magnitude-weighted histogram of unsigned gradient orientation,
/// 18 bins of 10° over [0°, 180°).
pub(crate) fn edge_orientation_histogram(image: &WorkImage) -> Vec<f64> {
    let mut hist = vec![0.0; 18];
    for y in 0..image.height() {
        for x in 0..image.width() {
            let (gx, gy) = sobel(image, x, y);
            let mag = gx.hypot(gy);
            if mag < MIN_MAGNITUDE {
                continue;
            }
            let deg = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            let bin = ((deg / 10.0).floor() as usize).min(17);
            hist[bin] += mag;
        }
    }
    normalize_l1(hist)
}

use super::WorkImage;

/// The seven Hu invariant moments of the luma image taken as a mass density.
pub(crate) fn hu_moments(image: &WorkImage) -> Vec<f64> {
    let size = image.width();
    let (mut m00, mut m10, mut m01) = (0.0, 0.0, 0.0);
    for y in 0..size {
        for x in 0..size {
            let v = image.luma_at(x, y);
            m00 += v;
            m10 += x as f64 * v;
            m01 += y as f64 * v;
        }
    }
    if m00 <= 0.0 {
        return vec![0.0; 7];
    }
    let (cx, cy) = (m10 / m00, m01 / m00);
    let mut mu = [[0.0; 4]; 4];
    for y in 0..size {
        for x in 0..size {
            let v = image.luma_at(x, y);
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let mut px = 1.0;
            for p in 0..4 {
                let mut py = 1.0;
                for q in 0..4 - p {
                    mu[p][q] += px * py * v;
                    py *= dy;
                }
                px *= dx;
            }
        }
    }
    let eta = |p: usize, q: usize| mu[p][q] / m00.powf(1.0 + (p + q) as f64 / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));

    let a = n30 + n12;
    let b = n21 + n03;
    vec![
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2),
        a * a + b * b,
        (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b) + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b) - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b),
    ]
}

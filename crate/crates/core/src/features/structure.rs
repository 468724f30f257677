use super::WorkImage;

const GRID: usize = 4;
const BANDS: usize = 16;

/// Mean luma over a 4x4 grid of equal blocks, row-major.
pub(crate) fn blocks(image: &WorkImage) -> Vec<f64> {
    let size = image.width();
    let cell = size / GRID;
    let mut out = vec![0.0; GRID * GRID];
    for y in 0..size {
        for x in 0..size {
            out[(y / cell) * GRID + x / cell] += image.luma_at(x, y);
        }
    }
    let area = (cell * cell) as f64;
    out.iter_mut().for_each(|v| *v /= area);
    out
}

/// Mean luma of 16 horizontal bands followed by 16 vertical bands.
pub(crate) fn profile(image: &WorkImage) -> Vec<f64> {
    let size = image.width();
    let band = size / BANDS;
    let mut rows = vec![0.0; BANDS];
    let mut cols = vec![0.0; BANDS];
    for y in 0..size {
        for x in 0..size {
            let v = image.luma_at(x, y);
            rows[y / band] += v;
            cols[x / band] += v;
        }
    }
    let area = (band * size) as f64;
    rows.into_iter().chain(cols).map(|v| v / area).collect()
}

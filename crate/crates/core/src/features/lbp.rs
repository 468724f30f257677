use std::sync::OnceLock;

use super::{color::normalize_l1, WorkImage};

const NEIGHBORS: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];
const NON_UNIFORM_BIN: usize = 58;

fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Maps each 8-bit pattern to its histogram bin: the 58 uniform patterns in
/// ascending code order, then one shared bin for everything else.
fn bin_table() -> &'static [usize; 256] {
    static TABLE: OnceLock<[usize; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [NON_UNIFORM_BIN; 256];
        let mut next = 0;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                table[code as usize] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, 58);
        table
    })
}

pub(crate) fn uniform_lbp_histogram(image: &WorkImage) -> Vec<f64> {
    let table = bin_table();
    let size = image.width();
    let mut hist = vec![0.0; 59];
    for y in 1..size - 1 {
        for x in 1..size - 1 {
            let center = image.luma_at(x, y);
            let mut code = 0u8;
            for (bit, (dx, dy)) in NEIGHBORS.iter().enumerate() {
                let v = image.luma_at((x as isize + dx) as usize, (y as isize + dy) as usize);
                if v >= center {
                    code |= 1 << bit;
                }
            }
            hist[table[code as usize]] += 1.0;
        }
    }
    normalize_l1(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn there_are_58_uniform_patterns() {
        assert_eq!((0..=255u8).filter(|&c| transitions(c) <= 2).count(), 58);
        assert_eq!(bin_table()[0], 0);
        assert_eq!(bin_table()[255], 57);
        assert_eq!(bin_table()[0b0101_0101], NON_UNIFORM_BIN);
    }

    #[test]
    fn flat_image_is_all_ones_pattern() {
        let img = WorkImage::from_fn(|_, _| [0.2; 3]);
        let h = uniform_lbp_histogram(&img);
        assert_eq!(h[57], 1.0);
    }
}

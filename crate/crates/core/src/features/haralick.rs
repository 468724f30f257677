use super::WorkImage;

const LEVELS: usize = 32;
const OFFSETS: [(isize, isize); 4] = [(1, 0), (1, -1), (0, -1), (-1, -1)];

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

fn quantize(image: &WorkImage) -> Vec<usize> {
    image
        .luma()
        .iter()
        .map(|&l| ((l * LEVELS as f64).floor().max(0.0) as usize).min(LEVELS - 1))
        .collect()
}

/// Symmetric, normalized co-occurrence matrix for one offset.
fn glcm(levels: &[usize], size: usize, (dx, dy): (isize, isize)) -> Vec<f64> {
    let mut m = vec![0.0; LEVELS * LEVELS];
    let mut pairs = 0.0;
    for y in 0..size as isize {
        for x in 0..size as isize {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= size as isize || ny >= size as isize {
                continue;
            }
            let a = levels[(y as usize) * size + x as usize];
            let b = levels[(ny as usize) * size + nx as usize];
            m[a * LEVELS + b] += 1.0;
            m[b * LEVELS + a] += 1.0;
            pairs += 2.0;
        }
    }
    m.iter_mut().for_each(|v| *v /= pairs);
    m
}

/// The 13 classic Haralick texture statistics of a normalized GLCM.
fn statistics(p: &[f64]) -> [f64; 13] {
    let n = LEVELS;
    let at = |i: usize, j: usize| p[i * n + j];
    let px: Vec<f64> = (0..n).map(|i| (0..n).map(|j| at(i, j)).sum()).collect();
    let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| at(i, j)).sum()).collect();
    let mean: f64 = px.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
    let var: f64 = px.iter().enumerate().map(|(i, &v)| (i as f64 - mean).powi(2) * v).sum();

    let mut sum_dist = vec![0.0; 2 * n - 1];
    let mut diff_dist = vec![0.0; n];
    let (mut asm, mut contrast, mut ij, mut sos, mut idm, mut entropy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut hxy1, mut hxy2) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let v = at(i, j);
            let d = i.abs_diff(j);
            sum_dist[i + j] += v;
            diff_dist[d] += v;
            asm += v * v;
            contrast += (d * d) as f64 * v;
            ij += (i * j) as f64 * v;
            sos += (i as f64 - mean).powi(2) * v;
            idm += v / (1.0 + (d * d) as f64);
            entropy -= plogp(v);
            let pxy = px[i] * py[j];
            if pxy > 0.0 {
                hxy1 -= v * pxy.ln();
                hxy2 -= plogp(pxy);
            }
        }
    }
    let correlation = if var > 1e-15 { (ij - mean * mean) / var } else { 1.0 };
    let sum_avg: f64 = sum_dist.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_var: f64 = sum_dist.iter().enumerate().map(|(k, &v)| (k as f64 - sum_avg).powi(2) * v).sum();
    let sum_entropy: f64 = -sum_dist.iter().map(|&v| plogp(v)).sum::<f64>();
    let diff_mean: f64 = diff_dist.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let diff_var: f64 = diff_dist.iter().enumerate().map(|(k, &v)| (k as f64 - diff_mean).powi(2) * v).sum();
    let diff_entropy: f64 = -diff_dist.iter().map(|&v| plogp(v)).sum::<f64>();
    let hx: f64 = -px.iter().map(|&v| plogp(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| plogp(v)).sum::<f64>();
    let hmax = hx.max(hy);
    let imc1 = if hmax > 0.0 { (entropy - hxy1) / hmax } else { 0.0 };
    let imc2 = (1.0 - (-2.0 * (hxy2 - entropy).max(0.0)).exp()).max(0.0).sqrt();

    [
        asm, contrast, correlation, sos, idm, sum_avg, sum_var, sum_entropy, entropy, diff_var,
        diff_entropy, imc1, imc2,
    ]
}

pub(crate) fn haralick(image: &WorkImage) -> Vec<f64> {
    let levels = quantize(image);
    let mut acc = [0.0; 13];
    for offset in OFFSETS {
        let stats = statistics(&glcm(&levels, image.width(), offset));
        acc.iter_mut().zip(stats).for_each(|(a, s)| *a += s);
    }
    acc.iter().map(|a| a / OFFSETS.len() as f64).collect()
}

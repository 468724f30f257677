use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::WorkImage;

const WAVELENGTHS: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
const ORIENTATIONS: usize = 6;
/// Radial and angular Gaussian width relative to the center frequency.
const BANDWIDTH: f64 = 0.35;

pub(crate) fn params() -> String {
    format!(
        "lambda={:?};orientations={ORIENTATIONS};bandwidth={BANDWIDTH};mean+std;freq-domain",
        WAVELENGTHS
    )
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: std::cell::RefCell<Option<(usize, Plans)>> = const { std::cell::RefCell::new(None) };
}

fn with_plans<R>(size: usize, f: impl FnOnce(&Plans) -> R) -> R {
    PLANS.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().map(|(n, _)| *n) != Some(size) {
            let mut planner = FftPlanner::new();
            let plans = Plans {
                forward: planner.plan_fft_forward(size),
                inverse: planner.plan_fft_inverse(size),
            };
            *slot = Some((size, plans));
        }
        f(&slot.as_ref().unwrap().1)
    })
}

fn fft2(data: &mut [Complex64], size: usize, fft: &dyn Fft<f64>) {
    for row in data.chunks_exact_mut(size) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); size];
    for x in 0..size {
        for y in 0..size {
            column[y] = data[y * size + x];
        }
        fft.process(&mut column);
        for y in 0..size {
            data[y * size + x] = column[y];
        }
    }
}

fn frequency(k: usize, size: usize) -> f64 {
    if k < size / 2 {
        k as f64 / size as f64
    } else {
        k as f64 / size as f64 - 1.0
    }
}

/// Mean and standard deviation of the Gabor magnitude response for
/// 4 scales x 6 orientations, ordered scale-major.
pub(crate) fn gabor_energy(image: &WorkImage) -> Vec<f64> {
    let size = image.width();
    let luma = image.luma();
    let mean = luma.iter().sum::<f64>() / luma.len() as f64;
    let mut spectrum: Vec<Complex64> = luma.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();

    with_plans(size, |plans| {
        fft2(&mut spectrum, size, plans.forward.as_ref());
        let norm = (size * size) as f64;
        let mut out = Vec::with_capacity(WAVELENGTHS.len() * ORIENTATIONS * 2);
        let mut response = vec![Complex64::new(0.0, 0.0); size * size];
        for &lambda in &WAVELENGTHS {
            let f0 = 1.0 / lambda;
            let sigma = BANDWIDTH * f0;
            for o in 0..ORIENTATIONS {
                let theta = o as f64 * PI / ORIENTATIONS as f64;
                let (sin, cos) = theta.sin_cos();
                for ky in 0..size {
                    let v = frequency(ky, size);
                    for kx in 0..size {
                        let u = frequency(kx, size);
                        let ur = u * cos + v * sin;
                        let vr = -u * sin + v * cos;
                        let g = (-((ur - f0).powi(2) + vr * vr) / (2.0 * sigma * sigma)).exp();
                        response[ky * size + kx] = spectrum[ky * size + kx] * g;
                    }
                }
                fft2(&mut response, size, plans.inverse.as_ref());
                let mags: Vec<f64> = response.iter().map(|c| c.norm() / norm).collect();
                let m = mags.iter().sum::<f64>() / mags.len() as f64;
                let var = mags.iter().map(|x| (x - m).powi(2)).sum::<f64>() / mags.len() as f64;
                out.push(m);
                out.push(var.sqrt());
            }
        }
        out
    })
}

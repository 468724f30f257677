//! Seeded synthetic corpora with known class structure, for tests, demos
//! and benchmarks.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::Rng;

use crate::corpus::{Corpus, DataItem, ItemSource};
use crate::error::{Error, Result};
use crate::features::DescriptorKind;
use crate::rng::{derive_seed, seeded_rng};

/// A vector corpus with one block per built-in descriptor (same names and
/// dimensions). Only the `signal` block depends on the class.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub classes: usize,
    pub per_class: usize,
    pub signal: DescriptorKind,
    /// Offset magnitude of the class centroids relative to unit-range noise.
    pub separation: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            classes: 2,
            per_class: 150,
            signal: DescriptorKind::Haralick,
            separation: 1.0,
            seed: 0,
        }
    }
}

pub fn class_name(c: usize) -> String {
    format!("class-{c}")
}

pub fn planted_vector_corpus(config: &PlantedConfig) -> Result<Corpus> {
    if config.classes < 2 || config.per_class == 0 {
        return Err(Error::Parameter("planted corpus needs at least 2 non-empty classes".into()));
    }
    let mut rng = seeded_rng(derive_seed(config.seed, &["planted-corpus"]));
    let centroids: Vec<Vec<f64>> = (0..config.classes)
        .map(|_| (0..config.signal.dim()).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut items = Vec::with_capacity(config.classes * config.per_class);
    for i in 0..config.classes * config.per_class {
        let class = i % config.classes;
        let blocks = DescriptorKind::ALL
            .iter()
            .map(|&kind| {
                (0..kind.dim())
                    .map(|d| {
                        let noise = rng.random::<f64>();
                        if kind == config.signal {
                            noise + config.separation * centroids[class][d]
                        } else {
                            noise
                        }
                    })
                    .collect()
            })
            .collect();
        items.push(DataItem {
            id: format!("item-{i:05}"),
            source: ItemSource::Vector(blocks),
            ground_truth: Some(class_name(class)),
        });
    }
    Corpus::from_items(items, DescriptorKind::ALL.iter().map(|k| k.name().to_string()).collect())
}

/// Where a class's signal lives in a [`sketch_feature_corpus`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signature {
    /// Every dimension of the block shifts by `shift` (random sign per dimension).
    Distributed { block: DescriptorKind, shift: f64 },
    /// The first `dims` dimensions of the block shift by `shift`.
    Concentrated { block: DescriptorKind, dims: usize, shift: f64 },
}

/// Class signatures of the feature-level sketch corpus: two classes carry
/// weak evidence spread over a whole high-dimensional block, three carry
/// strong evidence in a few dimensions of a larger block.
pub const SKETCH_SIGNATURES: [(&str, Signature); 5] = [
    ("circle", Signature::Distributed { block: DescriptorKind::Gabor, shift: 0.1 }),
    ("square", Signature::Concentrated { block: DescriptorKind::Haralick, dims: 3, shift: 0.5 }),
    ("triangle", Signature::Distributed { block: DescriptorKind::Lbp, shift: 0.1 }),
    ("star", Signature::Concentrated { block: DescriptorKind::EdgeOrientationHistogram, dims: 2, shift: 0.5 }),
    ("zigzag", Signature::Concentrated { block: DescriptorKind::Blocks, dims: 3, shift: 0.5 }),
];

/// Descriptor-level stand-in for a sketch collection: one block per
/// built-in descriptor filled with unit-range noise, plus the class
/// signatures of [`SKETCH_SIGNATURES`].
pub fn sketch_feature_corpus(per_class: usize, seed: u64) -> Result<Corpus> {
    if per_class == 0 {
        return Err(Error::Parameter("per_class must be positive".into()));
    }
    let mut rng = seeded_rng(derive_seed(seed, &["sketch-features"]));
    let signs: Vec<Vec<f64>> = SKETCH_SIGNATURES
        .iter()
        .map(|(_, sig)| {
            let block = match sig {
                Signature::Distributed { block, .. } | Signature::Concentrated { block, .. } => *block,
            };
            (0..block.dim()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
        })
        .collect();
    let classes = SKETCH_SIGNATURES.len();
    let mut items = Vec::with_capacity(classes * per_class);
    for i in 0..classes * per_class {
        let class = i % classes;
        let blocks = DescriptorKind::ALL
            .iter()
            .map(|&kind| {
                let mut v: Vec<f64> = (0..kind.dim()).map(|_| rng.random::<f64>()).collect();
                match SKETCH_SIGNATURES[class].1 {
                    Signature::Distributed { block, shift } if block == kind => {
                        v.iter_mut().zip(&signs[class]).for_each(|(x, s)| *x += s * shift);
                    }
                    Signature::Concentrated { block, dims, shift } if block == kind => {
                        v.iter_mut().zip(&signs[class]).take(dims).for_each(|(x, s)| *x += s * shift);
                    }
                    _ => {}
                }
                v
            })
            .collect();
        items.push(DataItem {
            id: format!("{}-{:04}", SKETCH_SIGNATURES[class].0, i / classes),
            source: ItemSource::Vector(blocks),
            ground_truth: Some(SKETCH_SIGNATURES[class].0.to_string()),
        });
    }
    Corpus::from_items(items, DescriptorKind::ALL.iter().map(|k| k.name().to_string()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchClass {
    Circle,
    Square,
    Triangle,
    Star,
    Zigzag,
}

impl SketchClass {
    pub const ALL: [SketchClass; 5] = [
        SketchClass::Circle,
        SketchClass::Square,
        SketchClass::Triangle,
        SketchClass::Star,
        SketchClass::Zigzag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SketchClass::Circle => "circle",
            SketchClass::Square => "square",
            SketchClass::Triangle => "triangle",
            SketchClass::Star => "star",
            SketchClass::Zigzag => "zigzag",
        }
    }

    /// Outline in unit coordinates around the origin.
    fn outline(self) -> Vec<[f64; 2]> {
        let polygon = |n: usize, phase: f64| -> Vec<[f64; 2]> {
            (0..=n)
                .map(|i| {
                    let a = phase + 2.0 * PI * i as f64 / n as f64;
                    [a.cos(), a.sin()]
                })
                .collect()
        };
        match self {
            SketchClass::Circle => polygon(32, 0.0),
            SketchClass::Square => polygon(4, PI / 4.0),
            SketchClass::Triangle => polygon(3, -PI / 2.0),
            SketchClass::Star => (0..=10)
                .map(|i| {
                    let a = -PI / 2.0 + PI * i as f64 / 5.0;
                    let r = if i % 2 == 0 { 1.0 } else { 0.4 };
                    [r * a.cos(), r * a.sin()]
                })
                .collect(),
            SketchClass::Zigzag => (0..=6)
                .map(|i| [-1.0 + i as f64 / 3.0, if i % 2 == 0 { 0.5 } else { -0.5 }])
                .collect(),
        }
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

/// A hand-drawn-looking doodle: jittered, stretched and rotated outline
/// with occasional gaps, a few stray strokes, random placement, size and
/// stroke width, dark ink on a white page.
pub fn render_sketch(class: SketchClass, size: u32, rng: &mut impl Rng) -> RgbImage {
    let s = size as f64;
    let scale = s * rng.random_range(0.2..0.42);
    let stretch = rng.random_range(0.7..1.3);
    let center = [
        s / 2.0 + rng.random_range(-0.15..0.15) * s,
        s / 2.0 + rng.random_range(-0.15..0.15) * s,
    ];
    let rotation = rng.random_range(-0.6..0.6);
    let (sin, cos) = f64::sin_cos(rotation);
    let jitter = 0.12;
    let points: Vec<[f64; 2]> = class
        .outline()
        .into_iter()
        .map(|[x, y]| {
            let x = stretch * x + rng.random_range(-jitter..jitter);
            let y = y / stretch + rng.random_range(-jitter..jitter);
            [center[0] + scale * (cos * x - sin * y), center[1] + scale * (sin * x + cos * y)]
        })
        .collect();
    let mut segments: Vec<([f64; 2], [f64; 2])> = points
        .windows(2)
        .filter(|_| rng.random::<f64>() >= 0.08)
        .map(|w| (w[0], w[1]))
        .collect();
    for _ in 0..rng.random_range(0..=2) {
        let a = [rng.random_range(0.0..s), rng.random_range(0.0..s)];
        let angle = rng.random_range(0.0..PI);
        let len = s * rng.random_range(0.1..0.4);
        segments.push((a, [a[0] + len * angle.cos(), a[1] + len * angle.sin()]));
    }
    let half_width = rng.random_range(0.8..2.6);
    let ink = rng.random_range(0.0..0.25);

    let mut img = RgbImage::new(size, size);
    for y in 0..size {
        for x in 0..size {
            let p = [x as f64 + 0.5, y as f64 + 0.5];
            let d = segments
                .iter()
                .map(|&(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min);
            let coverage = (half_width + 0.5 - d).clamp(0.0, 1.0);
            let v = 1.0 - coverage * (1.0 - ink);
            let byte = (v * 255.0).round() as u8;
            img.put_pixel(x, y, Rgb([byte, byte, byte]));
        }
    }
    img
}

/// Writes `per_class` PNG doodles per sketch class plus a `manifest.csv`
/// into `dir` and returns the manifest path.
pub fn write_sketch_corpus(dir: &Path, per_class: usize, size: u32, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["id", "path_or_vector", "ground_truth"]).map_err(io)?;
    for class in SketchClass::ALL {
        let mut rng = seeded_rng(derive_seed(seed, &["sketch", class.name()]));
        for i in 0..per_class {
            let id = format!("{}-{i:04}", class.name());
            let file = format!("{id}.png");
            render_sketch(class, size, &mut rng)
                .save(dir.join(&file))
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            w.write_record([id.as_str(), file.as_str(), class.name()]).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(manifest)
}

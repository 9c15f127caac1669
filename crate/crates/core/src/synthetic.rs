//! Seeded generator of two-class shape images: dark filled discs ("blob")
//! or dark annuli ("ring") over a light, noisy background.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::image_io::{save_image, ImageError, ImageFormat, RgbImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    Blob,
    Ring,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 2] = [ShapeClass::Blob, ShapeClass::Ring];

    pub fn label(self) -> &'static str {
        match self {
            ShapeClass::Blob => "blob",
            ShapeClass::Ring => "ring",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub size: usize,
    pub per_class: usize,
    /// Per-pixel, per-channel noise is uniform in `[-noise, noise]`.
    pub noise: i32,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            size: 64,
            per_class: 400,
            noise: 20,
            train_fraction: 0.7,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticSample {
    pub image: RgbImage,
    pub class: ShapeClass,
    pub train: bool,
}

#[derive(Clone, Copy)]
struct Shape {
    r: f64,
    c: f64,
    outer: f64,
    /// Negative for filled discs.
    inner: f64,
}

impl Shape {
    fn covers(&self, r: usize, c: usize) -> bool {
        let d2 = (r as f64 - self.r).powi(2) + (c as f64 - self.c).powi(2);
        d2 <= self.outer * self.outer && (self.inner < 0.0 || d2 > self.inner * self.inner)
    }
}

fn place_shapes(rng: &mut ChaCha8Rng, class: ShapeClass, size: usize) -> Vec<Shape> {
    let count = rng.random_range(2..=4);
    let mut shapes: Vec<Shape> = Vec::with_capacity(count);
    let mut attempts = 0;
    while shapes.len() < count && attempts < 1000 {
        attempts += 1;
        let (outer, inner) = match class {
            ShapeClass::Blob => (rng.random_range(4.0..8.0), -1.0),
            ShapeClass::Ring => {
                let outer: f64 = rng.random_range(6.0..10.0);
                (outer, outer - rng.random_range(2.0..3.5))
            }
        };
        let margin = outer + 1.0;
        let hi = size as f64 - 1.0 - margin;
        if hi <= margin {
            break;
        }
        let s = Shape {
            r: rng.random_range(margin..hi),
            c: rng.random_range(margin..hi),
            outer,
            inner,
        };
        // Keep shapes apart so discs never enclose background and annuli
        // never merge into extra loops.
        let clear = shapes
            .iter()
            .all(|o| ((o.r - s.r).powi(2) + (o.c - s.c).powi(2)).sqrt() > o.outer + s.outer + 2.0);
        if clear {
            shapes.push(s);
        }
    }
    shapes
}

/// Draws one image of `class`.
pub fn generate_image(rng: &mut ChaCha8Rng, class: ShapeClass, size: usize, noise: i32) -> RgbImage {
    let shapes = place_shapes(rng, class, size);
    let background: [i32; 3] = std::array::from_fn(|_| rng.random_range(170..=210));
    let foreground: [i32; 3] = std::array::from_fn(|_| rng.random_range(40..=80));
    let mut pixels = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let base = if shapes.iter().any(|s| s.covers(r, c)) {
                foreground
            } else {
                background
            };
            pixels.push(std::array::from_fn(|k| {
                (base[k] + rng.random_range(-noise..=noise)).clamp(0, 255) as u8
            }));
        }
    }
    RgbImage::new(size, size, pixels).expect("non-empty synthetic image")
}

/// Classes alternate blob, ring, blob, ...; the first `train_fraction` of
/// each class goes to the training split.
pub fn generate_dataset(cfg: &SyntheticConfig) -> Vec<SyntheticSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_train = (cfg.train_fraction * cfg.per_class as f64).round() as usize;
    let mut out = Vec::with_capacity(cfg.per_class * 2);
    for i in 0..cfg.per_class {
        for class in ShapeClass::ALL {
            out.push(SyntheticSample {
                image: generate_image(&mut rng, class, cfg.size, cfg.noise),
                class,
                train: i < n_train,
            });
        }
    }
    out
}

/// Writes every sample as a binary PPM into `dir` along with a
/// `manifest.csv`, and returns the manifest path.
pub fn write_dataset(dir: &Path, cfg: &SyntheticConfig) -> Result<PathBuf, ImageError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ImageError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut manifest = String::from("path,label,split\n");
    for (i, s) in generate_dataset(cfg).iter().enumerate() {
        let name = format!("{}_{i:04}.ppm", s.class.label());
        save_image(&s.image, dir.join(&name), ImageFormat::PpmBinary)?;
        let split = if s.train { "train" } else { "test" };
        manifest.push_str(&format!("{name},{},{split}\n", s.class.label()));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).map_err(io(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{binary_slice, build_filtration, Direction};
    use crate::image_io::{extract_channel, Channel};
    use crate::verification::betti_by_counting;

    #[test]
    fn split_and_balance() {
        let cfg = SyntheticConfig {
            per_class: 10,
            size: 32,
            ..Default::default()
        };
        let data = generate_dataset(&cfg);
        assert_eq!(data.len(), 20);
        assert_eq!(data.iter().filter(|s| s.train).count(), 14);
        assert_eq!(data.iter().filter(|s| s.class == ShapeClass::Ring).count(), 10);
    }

    #[test]
    fn seeded() {
        let cfg = SyntheticConfig {
            per_class: 3,
            ..Default::default()
        };
        let a: Vec<RgbImage> = generate_dataset(&cfg).into_iter().map(|s| s.image).collect();
        let b: Vec<RgbImage> = generate_dataset(&cfg).into_iter().map(|s| s.image).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn mid_gray_slice_separates_the_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for class in ShapeClass::ALL {
            for _ in 0..5 {
                let img = generate_image(&mut rng, class, 64, 20);
                let field = build_filtration(&extract_channel(&img, Channel::Gray), Direction::Sublevel, None);
                // Between the darkest background and the lightest shape.
                let (b0, b1) = betti_by_counting(&binary_slice(&field, 3 * 125).unwrap());
                assert!((2..=4).contains(&b0), "{class:?}: b0 = {b0}");
                match class {
                    ShapeClass::Blob => assert_eq!(b1, 0),
                    ShapeClass::Ring => assert_eq!(b1, b0),
                }
            }
        }
    }
}

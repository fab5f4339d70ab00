use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{DatasetManifest, SliceSample, Splits};
use crate::rng;
use crate::{Error, Result};

/// Knobs of the synthetic ellipse generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub n_subjects: usize,
    pub slices_per_subject: usize,
    pub side: usize,
    pub noise_sd: f64,
    pub seed: u64,
    /// Adds a second small ellipse with probability 0.25 per slice.
    pub hard: bool,
    pub holdout_fraction: f64,
}

impl SynthOptions {
    pub fn new(n_subjects: usize, slices_per_subject: usize, side: usize, noise_sd: f64, seed: u64) -> Self {
        SynthOptions {
            n_subjects,
            slices_per_subject,
            side,
            noise_sd,
            seed,
            hard: false,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
    theta: f64,
}

impl Ellipse {
    fn contains(&self, y: f64, x: f64) -> bool {
        let (s, c) = self.theta.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// Ellipse phantoms: per-subject pose, size and contrast, per-slice jitter,
/// additive Gaussian noise.
pub fn synth_dataset(opts: &SynthOptions) -> Result<DatasetManifest> {
    if opts.side < 16 {
        return Err(Error::invalid(format!("side must be >= 16, got {}", opts.side)));
    }
    if opts.n_subjects == 0 || opts.slices_per_subject == 0 {
        return Err(Error::invalid("n_subjects and slices_per_subject must be positive"));
    }
    if !(opts.noise_sd >= 0.0 && opts.noise_sd.is_finite()) {
        return Err(Error::invalid(format!("noise_sd must be non-negative, got {}", opts.noise_sd)));
    }
    let side = opts.side as f64;
    let noise = Normal::new(0.0, opts.noise_sd.max(f64::MIN_POSITIVE)).expect("valid sd");
    let mut rng = rng::seeded(opts.seed);
    let mut samples = Vec::with_capacity(opts.n_subjects * opts.slices_per_subject);

    for subject in 0..opts.n_subjects {
        let base = Ellipse {
            cx: side * rng.random_range(0.38..0.62),
            cy: side * rng.random_range(0.38..0.62),
            a: side * rng.random_range(0.16..0.30),
            b: side * rng.random_range(0.12..0.24),
            theta: rng.random_range(0.0..std::f64::consts::PI),
        };
        let background = rng.random_range(0.0..0.3);
        let foreground = rng.random_range(0.65..1.0);

        for _ in 0..opts.slices_per_subject {
            let shape = Ellipse {
                cx: base.cx + rng.random_range(-1.5..1.5),
                cy: base.cy + rng.random_range(-1.5..1.5),
                a: base.a * rng.random_range(0.9..1.1),
                b: base.b * rng.random_range(0.9..1.1),
                theta: base.theta + rng.random_range(-0.1..0.1),
            };
            let extra = if opts.hard && rng.random_bool(0.25) {
                Some(Ellipse {
                    cx: side * rng.random_range(0.15..0.85),
                    cy: side * rng.random_range(0.15..0.85),
                    a: side * rng.random_range(0.05..0.09),
                    b: side * rng.random_range(0.05..0.09),
                    theta: rng.random_range(0.0..std::f64::consts::PI),
                })
            } else {
                None
            };

            let mask = Array2::from_shape_fn((opts.side, opts.side), |(y, x)| {
                let (y, x) = (y as f64, x as f64);
                u8::from(shape.contains(y, x) || extra.is_some_and(|e| e.contains(y, x)))
            });
            let image = Array2::from_shape_fn((opts.side, opts.side), |(y, x)| {
                let level = if mask[[y, x]] == 1 { foreground } else { background };
                let eps = if opts.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                (level + eps) as f32
            });
            samples.push(SliceSample {
                id: samples.len(),
                subject_id: subject,
                image,
                mask,
            });
        }
    }

    let splits = Splits::by_subject(&samples, opts.holdout_fraction, rng::derive(opts.seed, 0x5917));
    let manifest = DatasetManifest {
        name: format!(
            "synth-s{}x{}-{}px-seed{}",
            opts.n_subjects, opts.slices_per_subject, opts.side, opts.seed
        ),
        samples,
        splits,
        pixel_spacing: 1.0,
    };
    manifest.validate()?;
    Ok(manifest)
}

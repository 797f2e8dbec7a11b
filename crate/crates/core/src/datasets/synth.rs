//! Synthetic signature corpus.
//!
//! A writer is a template of quadratic Bézier strokes. Every drawn sample
//! jitters the control points, the pen radius and the global rotation.
//! Skilled forgeries redraw the target's template with doubled jitter;
//! simple forgeries come from a forger's own unrelated template.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{write_manifest, ManifestEntry, SampleKind, MANIFEST_NAME};
use crate::error::{Error, Result};
use crate::raster::{write_pgm, GrayRaster, COLS, ROWS};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Standard deviation of control-point jitter, in pixels.
    pub jitter_sigma: f64,
    /// Pen radius varies by up to this many pixels per sample.
    pub thickness_jitter: i32,
    /// Global rotation is uniform in `[-max_rotation_deg, max_rotation_deg]`.
    pub max_rotation_deg: f64,
    /// Jitter multiplier for skilled forgeries.
    pub skilled_jitter_scale: f64,
    pub min_strokes: usize,
    pub max_strokes: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            jitter_sigma: 4.0,
            thickness_jitter: 1,
            max_rotation_deg: 5.0,
            skilled_jitter_scale: 2.0,
            min_strokes: 3,
            max_strokes: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    /// Start, control and end points as `(x, y)` canvas coordinates.
    pub points: [(f64, f64); 3],
    pub radius: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub strokes: Vec<Stroke>,
}

impl Template {
    pub fn random(rng: &mut impl Rng, cfg: &SynthConfig) -> Self {
        let n = rng.random_range(cfg.min_strokes..=cfg.max_strokes);
        let strokes = (0..n)
            .map(|_| {
                let x0: f64 = rng.random_range(30.0..400.0);
                let x2 = (x0 + rng.random_range(50.0..200.0)).min(COLS as f64 - 30.0);
                let y0 = rng.random_range(30.0..ROWS as f64 - 30.0);
                let y2 = rng.random_range(30.0..ROWS as f64 - 30.0);
                let control = (
                    rng.random_range(x0..=x2),
                    rng.random_range(10.0..ROWS as f64 - 10.0),
                );
                Stroke {
                    points: [(x0, y0), control, (x2, y2)],
                    radius: rng.random_range(2..=3),
                }
            })
            .collect();
        Self { strokes }
    }
}

fn stamp(ink: &mut [bool], cx: f64, cy: f64, radius: i32) {
    let (px, py) = (cx.round() as i64, cy.round() as i64);
    let r = radius as i64;
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let (x, y) = (px + dx, py + dy);
            if (0..COLS as i64).contains(&x) && (0..ROWS as i64).contains(&y) {
                ink[y as usize * COLS + x as usize] = true;
            }
        }
    }
}

/// Draws one sample of a template onto a white 256×512 canvas.
pub fn render_sample(template: &Template, cfg: &SynthConfig, jitter_scale: f64, rng: &mut impl Rng) -> GrayRaster {
    let sigma = cfg.jitter_sigma * jitter_scale;
    let normal = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let angle = rng
        .random_range(-cfg.max_rotation_deg..=cfg.max_rotation_deg)
        .to_radians();
    let (sin, cos) = angle.sin_cos();
    let (ox, oy) = (COLS as f64 / 2.0, ROWS as f64 / 2.0);
    let rotate = |(x, y): (f64, f64)| {
        let (dx, dy) = (x - ox, y - oy);
        (ox + dx * cos - dy * sin, oy + dx * sin + dy * cos)
    };

    let mut ink = vec![false; ROWS * COLS];
    for stroke in &template.strokes {
        let pts = stroke
            .points
            .map(|(x, y)| rotate((x + normal.sample(rng), y + normal.sample(rng))));
        let radius = (stroke.radius + rng.random_range(-cfg.thickness_jitter..=cfg.thickness_jitter)).max(1);
        let span = (pts[0].0 - pts[1].0).hypot(pts[0].1 - pts[1].1)
            + (pts[1].0 - pts[2].0).hypot(pts[1].1 - pts[2].1);
        let steps = (span * 2.0).ceil().max(2.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let u = 1.0 - t;
            let x = u * u * pts[0].0 + 2.0 * u * t * pts[1].0 + t * t * pts[2].0;
            let y = u * u * pts[0].1 + 2.0 * u * t * pts[1].1 + t * t * pts[2].1;
            stamp(&mut ink, x, y, radius);
        }
    }
    let samples = ink.into_iter().map(|b| if b { 0 } else { 255 }).collect();
    GrayRaster::new(COLS, ROWS, samples).expect("canvas dimensions")
}

/// Generates the corpus with default parameters. See [`synth_corpus_with`].
pub fn synth_corpus(
    n_writers: usize,
    per_writer: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<ManifestEntry>> {
    synth_corpus_with(n_writers, per_writer, seed, out_dir, &SynthConfig::default())
}

/// Writes `per_writer` genuine, skilled and simple samples for each writer
/// as PGM files under `out_dir/wNNN/`, plus `out_dir/manifest.csv`.
pub fn synth_corpus_with(
    n_writers: usize,
    per_writer: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
    cfg: &SynthConfig,
) -> Result<Vec<ManifestEntry>> {
    if n_writers < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: n_writers,
        });
    }
    if per_writer < 6 {
        return Err(Error::TooFewSamples {
            min: 6,
            got: per_writer,
        });
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut entries = Vec::with_capacity(n_writers * per_writer * 3);
    for w in 0..n_writers {
        let writer = format!("w{w:03}");
        let dir = out_dir.join(&writer);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

        let stream = 4 * w as u64;
        let template = Template::random(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, stream)), cfg);
        let mut genuine_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream + 1));
        let mut skilled_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream + 2));
        let mut simple_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream + 3));

        let mut emit = |kind: SampleKind, k: usize, img: GrayRaster| -> Result<()> {
            let path = dir.join(format!("{kind}_{k:03}.pgm"));
            write_pgm(&img, &path)?;
            entries.push(ManifestEntry {
                path,
                writer: writer.clone(),
                kind,
            });
            Ok(())
        };
        for k in 0..per_writer {
            emit(SampleKind::Genuine, k, render_sample(&template, cfg, 1.0, &mut genuine_rng))?;
        }
        for k in 0..per_writer {
            let img = render_sample(&template, cfg, cfg.skilled_jitter_scale, &mut skilled_rng);
            emit(SampleKind::Skilled, k, img)?;
        }
        for k in 0..per_writer {
            let forger = Template::random(&mut simple_rng, cfg);
            emit(SampleKind::Simple, k, render_sample(&forger, cfg, 1.0, &mut simple_rng))?;
        }
    }
    write_manifest(&entries, out_dir.join(MANIFEST_NAME), out_dir)?;
    Ok(entries)
}

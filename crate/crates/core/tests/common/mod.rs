#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigverify::datasets::{render_sample, SynthConfig, Template};
use sigverify::raster::{binarize, normalize, BinaryRaster, COLS, ROWS};
use sigverify::segmenter::RunLabel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A raster made of a few horizontal ink slabs of random height and
/// density, sprinkled with noise. Never blank.
pub fn random_raster(rng: &mut impl Rng) -> BinaryRaster {
    let mut density = [0.0f64; ROWS];
    for _ in 0..rng.random_range(1..=6) {
        let start = rng.random_range(0..ROWS);
        let len = rng.random_range(1..=120).min(ROWS - start);
        let d = rng.random_range(0.05..0.9);
        for v in &mut density[start..start + len] {
            *v = d;
        }
    }
    let noise = rng.random_range(0.0..0.05);
    let mut r = BinaryRaster::from_fn(|row, _| rng.random_bool(density[row].max(noise)));
    r.set(rng.random_range(0..ROWS), rng.random_range(0..COLS), true);
    r
}

/// Normalized in-memory samples of one synthetic writer.
pub fn writer_samples(writer_seed: u64, n: usize, jitter_scale: f64) -> Vec<BinaryRaster> {
    let cfg = SynthConfig::default();
    let template = Template::random(&mut rng(writer_seed), &cfg);
    let mut draw = rng(writer_seed ^ 0xa5a5_a5a5);
    (0..n)
        .map(|_| {
            let g = render_sample(&template, &cfg, jitter_scale, &mut draw);
            normalize(&binarize(&g, None)).expect("synthetic samples carry ink")
        })
        .collect()
}

/// Reference run labelling: compare each row with the mean in floating
/// point on exactly representable values, then group by a linear scan.
pub fn brute_force_runs(counts: &[u32]) -> Vec<(usize, usize, RunLabel)> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let labels: Vec<RunLabel> = counts
        .iter()
        .map(|&c| {
            // c >= total / n  <=>  c * n >= total
            if c as u64 * counts.len() as u64 >= total {
                RunLabel::Above
            } else {
                RunLabel::Below
            }
        })
        .collect();
    let mut out: Vec<(usize, usize, RunLabel)> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some((_, len, last)) if *last == l => *len += 1,
            _ => out.push((i, 1, l)),
        }
    }
    out
}

//! Acceptance suite. Each test is one criterion and prints a single
//! `PASS`/`FAIL` line; run with `--nocapture` to see them.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;

use common::{brute_force_runs, random_raster, rng, writer_samples};
use sigverify::datasets::{make_split, make_split_with_repeats, synth_corpus, ManifestEntry, SampleKind};
use sigverify::evaluate::{report_csv, report_json, run_protocol, EvalConfig, ForgeryType, Rate};
use sigverify::features::{extract, GLOBAL_LEN, SECONDARY_LEN};
use sigverify::mlp::Perceptron;
use sigverify::planar::{load_model, save_model, train_planar, PlanarConfig};
use sigverify::raster::{BinaryRaster, ROWS};
use sigverify::segmenter::{
    label_runs, row_histogram, segment, segment_histogram, RowHistogram, DEFAULT_MIN_HEIGHT, FALLBACK_CUTS,
};
use sigverify::wavelet::{dwt2_two_level, idwt2_two_level, sym6_bank, Matrix};

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

#[test]
fn c01_wavelet_round_trip() {
    let mut rng = rng(101);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (rows, cols) = (rng.random_range(2..=64), rng.random_range(2..=64));
        let data = (0..rows * cols).map(|_| rng.random_range(-100.0..100.0)).collect();
        let x = Matrix::from_vec(rows, cols, data).unwrap();
        let back = idwt2_two_level(&dwt2_two_level(&x).unwrap()).unwrap();
        assert_eq!((back.rows, back.cols), (rows, cols));
        worst = worst.max(back.max_abs_diff(&x));
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "wavelet round-trip",
        worst < 1e-9 && elapsed < Duration::from_secs(5),
        format!("max error {worst:.3e}, {elapsed:.2?} for 200 matrices"),
    );
}

#[test]
fn c02_filter_admissibility() {
    let bank = sym6_bank();
    let h = &bank.lowpass;
    let g = &bank.highpass;
    let sum: f64 = h.iter().sum();
    let energy: f64 = h.iter().map(|v| v * v).sum();
    let mut shift = 0.0f64;
    for m in 1..h.len() / 2 {
        let dot: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
        shift = shift.max(dot.abs());
    }
    let g_sum: f64 = g.iter().sum();
    let errs = [
        (sum - std::f64::consts::SQRT_2).abs(),
        (energy - 1.0).abs(),
        shift,
        g_sum.abs(),
    ];
    verdict(
        2,
        "filter admissibility",
        h.len() == 12 && errs.iter().all(|&e| e < 1e-10),
        format!(
            "|sum-sqrt2|, |energy-1|, shift, |sum g| = {}",
            errs.map(|e| format!("{e:.2e}")).join(", ")
        ),
    );
}

#[test]
fn c03_gradient_check() {
    let mut rng = rng(103);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (n_in, n_hidden) = (rng.random_range(1..=10), rng.random_range(1..=12));
        let p = Perceptron::init(n_in, n_hidden, rng.random());
        let x: Vec<f64> = (0..n_in).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let loss = |q: &Perceptron| {
            let o = q.forward(&x).unwrap();
            0.5 * (o - t) * (o - t)
        };
        let analytic = p.gradient(&x, t).unwrap();
        let mut check = |a: f64, perturb: &dyn Fn(&mut Perceptron, f64)| {
            let (mut up, mut down) = (p.clone(), p.clone());
            perturb(&mut up, eps);
            perturb(&mut down, -eps);
            let numeric = (loss(&up) - loss(&down)) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        };
        for i in 0..p.weights1.len() {
            check(analytic.weights1[i], &|q, d| q.weights1[i] += d);
        }
        for i in 0..p.weights2.len() {
            check(analytic.weights2[i], &|q, d| q.weights2[i] += d);
        }
    }
    verdict(
        3,
        "gradient check",
        worst < 1e-4,
        format!("max relative error {worst:.3e} over 100 nets"),
    );
}

#[test]
fn c04_segmentation_invariants() {
    let mut rng = rng(104);
    let mut failures = Vec::new();
    let mut fallbacks = 0;
    for i in 0..1000 {
        let r = random_raster(&mut rng);
        let split = segment(&r, DEFAULT_MIN_HEIGHT);
        let bands = split.bands();
        let heights = split.heights();
        let partition = bands[0].start == 0
            && bands[0].end == bands[1].start
            && bands[1].end == bands[2].start
            && bands[2].end == ROWS
            && heights.iter().all(|&h| h > 0);
        let tall = split.fallback || heights.iter().all(|&h| h >= DEFAULT_MIN_HEIGHT);
        let fallback_ok = !split.fallback || split.cuts == FALLBACK_CUTS;
        let stable = segment(&r, DEFAULT_MIN_HEIGHT) == split;

        let h = row_histogram(&r);
        let mass: u64 = bands
            .iter()
            .map(|b| h.counts()[b.clone()].iter().map(|&c| c as u64).sum::<u64>())
            .sum();
        let conserved = mass == r.black_count() as u64;

        let runs: Vec<_> = label_runs(&h).into_iter().map(|r| (r.start, r.len, r.label)).collect();
        let labels_ok = runs == brute_force_runs(h.counts());

        if split.fallback {
            fallbacks += 1;
        }
        if !(partition && tall && fallback_ok && stable && conserved && labels_ok) {
            failures.push(i);
        }
    }
    verdict(
        4,
        "segmentation invariants",
        failures.is_empty(),
        format!(
            "1000 rasters ({fallbacks} fell back), failing cases {:?}",
            &failures[..failures.len().min(10)]
        ),
    );
}

#[test]
fn c05_noise_runs_leave_significant_cuts() {
    // Row profile with a dense upper zone, a 10-row spike and a 20-row dip
    // (both shorter than 35 rows), then a dense middle band ending at 190.
    // The significant transitions are rows 100 and 190.
    let count = |row: usize| match row {
        90..=99 | 120..=189 => 200,
        _ => 20,
    };
    let r = BinaryRaster::from_fn(|row, col| col < count(row));
    let h = row_histogram(&r);
    assert_eq!(h, RowHistogram::from_counts((0..ROWS).map(|r| count(r) as u32).collect()));
    let runs = label_runs(&h);
    let short = runs.iter().filter(|r| r.len < DEFAULT_MIN_HEIGHT).count();
    let split = segment(&r, DEFAULT_MIN_HEIGHT);
    let again = segment_histogram(&h, DEFAULT_MIN_HEIGHT);
    verdict(
        5,
        "noise runs absorbed",
        runs.len() == 5 && short == 2 && split.cuts == [100, 190] && !split.fallback && again == split,
        format!("{} runs ({short} short), cuts {:?}", runs.len(), split.cuts),
    );
}

#[test]
fn c06_feature_dimensionality() {
    let mut rng = rng(106);
    let mut rasters: Vec<BinaryRaster> = (0..200).map(|_| random_raster(&mut rng)).collect();
    rasters.extend(writer_samples(7, 20, 1.0));
    rasters.push(BinaryRaster::from_fn(|_, _| true));
    let mut bad = 0;
    for r in &rasters {
        let f = extract(r, DEFAULT_MIN_HEIGHT).unwrap();
        let dims_ok = f.bands.iter().all(|b| b.to_vec().len() == SECONDARY_LEN) && f.global.to_vec().len() == GLOBAL_LEN;
        let counts: u64 = f.bands.iter().map(|b| b.black_count).sum();
        if !dims_ok || counts != r.black_count() as u64 {
            bad += 1;
        }
    }
    verdict(
        6,
        "feature dimensionality",
        SECONDARY_LEN == 6 && GLOBAL_LEN == 7 && bad == 0,
        format!("{} rasters, {bad} violations", rasters.len()),
    );
}

fn genuine_manifest(writers: usize, per_writer: usize) -> Vec<ManifestEntry> {
    (0..writers)
        .flat_map(|w| {
            (0..per_writer).map(move |k| ManifestEntry {
                path: PathBuf::from(format!("w{w:03}/g{k:03}.png")),
                writer: format!("w{w:03}"),
                kind: SampleKind::Genuine,
            })
        })
        .collect()
}

#[test]
fn c07_protocol_counts() {
    let first = make_split(&genuine_manifest(60, 60), 2.0 / 3.0, 7).unwrap();
    let second = make_split(&genuine_manifest(300, 24), 0.5, 7).unwrap();
    let got = [
        first.train_total(),
        first.test_genuine_total(),
        second.train_total(),
        second.test_genuine_total(),
    ];
    verdict(
        7,
        "protocol counts",
        got == [2400, 1200, 3600, 3600],
        format!("train/test {}/{} and {}/{}", got[0], got[1], got[2], got[3]),
    );
}

fn e2e_corpus(dir: &std::path::Path) -> Vec<ManifestEntry> {
    synth_corpus(10, 30, 5, dir).unwrap()
}

fn e2e_config(corpus_id: &str, threads: Option<usize>) -> EvalConfig {
    EvalConfig {
        planar: PlanarConfig {
            seed: 5,
            ..PlanarConfig::default()
        },
        threads,
        corpus_id: corpus_id.to_string(),
    }
}

#[test]
fn c08_end_to_end_synthetic() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let entries = e2e_corpus(dir.path());
    let split = make_split_with_repeats(&entries, 2.0 / 3.0, 5, 4).unwrap();
    let report = run_protocol(&split, &e2e_config("synthetic-10x30-seed5", None)).unwrap();
    let elapsed = start.elapsed();
    let frr = report.aggregate.frr.mean;
    let far = |t| report.aggregate.far[&t].mean;
    verdict(
        8,
        "end-to-end synthetic benchmark",
        report.repeats.len() == 4
            && frr <= 15.0
            && far(ForgeryType::Random) <= 15.0
            && elapsed < Duration::from_secs(300),
        format!(
            "FRR {frr:.2}%, FAR random {:.2}%, simple {:.2}%, skilled {:.2}% (ungated), {elapsed:.1?}",
            far(ForgeryType::Random),
            far(ForgeryType::Simple),
            far(ForgeryType::Skilled),
        ),
    );
}

#[test]
fn c09_determinism_and_serialization() {
    let dir = tempfile::tempdir().unwrap();
    let entries = e2e_corpus(dir.path());
    let split = make_split_with_repeats(&entries, 2.0 / 3.0, 5, 4).unwrap();
    let a = run_protocol(&split, &e2e_config("synthetic", None)).unwrap();
    let b = run_protocol(&split, &e2e_config("synthetic", Some(2))).unwrap();
    let reports_equal = report_json(&a).unwrap() == report_json(&b).unwrap()
        && report_csv(&a).unwrap() == report_csv(&b).unwrap();

    let genuine = writer_samples(31, 12, 1.0);
    let negatives: Vec<BinaryRaster> = (32..36).flat_map(|s| writer_samples(s, 6, 1.0)).collect();
    let model = train_planar("w31", &genuine, &negatives, &PlanarConfig::default()).unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let mut rng = rng(109);
    let probes: Vec<BinaryRaster> = (0..80)
        .map(|_| random_raster(&mut rng))
        .chain(writer_samples(31, 10, 1.0))
        .chain(writer_samples(40, 10, 1.0))
        .collect();
    let mismatches = probes
        .iter()
        .filter(|r| {
            let (x, y) = (model.verify(r).unwrap(), loaded.verify(r).unwrap());
            x.principal_score.to_bits() != y.principal_score.to_bits()
                || x.secondary_scores.map(f64::to_bits) != y.secondary_scores.map(f64::to_bits)
                || x.accepted != y.accepted
        })
        .count();
    verdict(
        9,
        "determinism and serialization",
        reports_equal && loaded == model && mismatches == 0,
        format!(
            "reports identical: {reports_equal}, {mismatches} of {} probe scores differ after reload",
            probes.len()
        ),
    );
}

#[test]
fn c10_rate_arithmetic() {
    let frr = Rate::new(16, 100, "genuine").unwrap().render();
    let far = Rate::new(0, 1200, "skilled").unwrap().render();
    verdict(
        10,
        "rate arithmetic",
        frr == "16.00" && far == "0.00",
        format!("16/100 -> {frr}, 0/1200 -> {far}"),
    );
}

use sigverify::datasets::{load_manifest, synth_corpus, SampleKind, MANIFEST_NAME};
use sigverify::features::{extract, SignatureFeatures};
use sigverify::raster::load_normalized;
use sigverify::segmenter::DEFAULT_MIN_HEIGHT;

#[test]
fn ten_writers_by_thirty() {
    let dir = tempfile::tempdir().unwrap();
    let entries = synth_corpus(10, 30, 5, dir.path()).unwrap();
    let manifest = load_manifest(dir.path().join(MANIFEST_NAME)).unwrap();
    assert_eq!(manifest.len(), 900);
    assert_eq!(manifest, entries);
    for kind in [SampleKind::Genuine, SampleKind::Simple, SampleKind::Skilled] {
        assert_eq!(manifest.iter().filter(|e| e.kind == kind).count(), 300);
    }
    assert!(manifest.iter().all(|e| e.path.is_file()));
}

/// Z-scored feature vector over the whole set, so that no single feature
/// scale dominates the distances.
fn standardized(features: &[SignatureFeatures]) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.bands.iter().flat_map(|b| b.to_vec()).chain(f.global.to_vec()).collect())
        .collect();
    let dim = raw[0].len();
    let n = raw.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| raw.iter().map(|v| v[j]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..dim)
        .map(|j| (raw.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt().max(1e-12))
        .collect();
    raw.iter()
        .map(|v| (0..dim).map(|j| (v[j] - mean[j]) / std[j]).collect())
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[test]
fn writers_are_separable() {
    let dir = tempfile::tempdir().unwrap();
    let entries = synth_corpus(2, 10, 5, dir.path()).unwrap();
    let genuine: Vec<_> = entries.iter().filter(|e| e.kind == SampleKind::Genuine).collect();
    let features: Vec<SignatureFeatures> = genuine
        .iter()
        .map(|e| extract(&load_normalized(&e.path).unwrap(), DEFAULT_MIN_HEIGHT).unwrap())
        .collect();
    let z = standardized(&features);
    let (mut within, mut between) = (Vec::new(), Vec::new());
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let d = distance(&z[i], &z[j]);
            if genuine[i].writer == genuine[j].writer {
                within.push(d);
            } else {
                between.push(d);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&between) > mean(&within), "between {} within {}", mean(&between), mean(&within));
}

//! Corpus manifests, train/test protocol splits and the synthetic signature
//! generator.

mod synth;

pub use synth::{render_sample, synth_corpus, synth_corpus_with, SynthConfig, Template};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// Repetitions of the training protocol, each with its own negative subset.
pub const DEFAULT_REPEATS: usize = 4;

/// Manifest file name written by the generator.
pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Genuine,
    Simple,
    Skilled,
}

impl FromStr for SampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genuine" => Ok(SampleKind::Genuine),
            "simple" => Ok(SampleKind::Simple),
            "skilled" => Ok(SampleKind::Skilled),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleKind::Genuine => "genuine",
            SampleKind::Simple => "simple",
            SampleKind::Skilled => "skilled",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub writer: String,
    pub kind: SampleKind,
}

#[derive(Deserialize)]
struct Row {
    path: String,
    writer: String,
    kind: String,
}

/// Reads a `path,writer,kind` CSV manifest. Relative paths are resolved
/// against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(&text, base)
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::ParseError(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["path", "writer", "kind"] {
        return Err(Error::ParseError(format!(
            "expected header path,writer,kind, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::ParseError(format!("row {}: {e}", line + 1)))?;
        if row.path.is_empty() {
            return Err(Error::ParseError(format!("row {}: empty path", line + 1)));
        }
        if row.writer.is_empty() {
            return Err(Error::ParseError(format!("row {}: empty writer", line + 1)));
        }
        let kind: SampleKind = row.kind.parse()?;
        let path = base.join(&row.path);
        if !seen.insert(path.clone()) {
            return Err(Error::DuplicatePath(path));
        }
        entries.push(ManifestEntry {
            path,
            writer: row.writer,
            kind,
        });
    }
    Ok(entries)
}

/// Writes entries as a manifest with paths relative to `base` where
/// possible.
pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>, base: &Path) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    writer
        .write_record(["path", "writer", "kind"])
        .map_err(|e| csv_io(path, e))?;
    for e in entries {
        let rel = e.path.strip_prefix(base).unwrap_or(&e.path);
        writer
            .write_record([rel.to_string_lossy().as_ref(), e.writer.as_str(), &e.kind.to_string()])
            .map_err(|err| csv_io(path, err))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::ParseError(format!("{other:?}")),
    }
}

/// Evaluation material for one enrolled writer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriterSplit {
    pub writer: String,
    pub train_genuine: Vec<PathBuf>,
    pub test_genuine: Vec<PathBuf>,
    /// Other writers' genuine test samples.
    pub test_random: Vec<PathBuf>,
    pub test_simple: Vec<PathBuf>,
    pub test_skilled: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSplit {
    /// Sorted by writer id.
    pub writers: Vec<WriterSplit>,
    pub repeat_seeds: Vec<u64>,
}

impl ProtocolSplit {
    pub fn train_total(&self) -> usize {
        self.writers.iter().map(|w| w.train_genuine.len()).sum()
    }

    pub fn test_genuine_total(&self) -> usize {
        self.writers.iter().map(|w| w.test_genuine.len()).sum()
    }

    /// Genuine training samples of every writer except `writer`: the pool
    /// training negatives are drawn from.
    pub fn negative_pool(&self, writer: &str) -> Vec<&PathBuf> {
        self.writers
            .iter()
            .filter(|w| w.writer != writer)
            .flat_map(|w| &w.train_genuine)
            .collect()
    }
}

/// Number of training samples: `ceil(fraction * n)`, kept within
/// `[1, n - 1]`. The small tolerance keeps products like `2/3 * 60` from
/// rounding up past the exact value.
pub fn train_count(fraction: f64, n: usize) -> usize {
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n.saturating_sub(1)).max(1)
}

pub fn make_split(entries: &[ManifestEntry], train_fraction: f64, seed: u64) -> Result<ProtocolSplit> {
    make_split_with_repeats(entries, train_fraction, seed, DEFAULT_REPEATS)
}

/// Per writer: seeded shuffle of the genuine samples, the first
/// `ceil(fraction * n)` train and the rest test. Forgeries pass through by
/// label; random forgeries are the other writers' genuine test samples.
pub fn make_split_with_repeats(
    entries: &[ManifestEntry],
    train_fraction: f64,
    seed: u64,
    repeats: usize,
) -> Result<ProtocolSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} is outside (0, 1)"
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidConfig("at least one repeat is required".into()));
    }
    let mut genuine: BTreeMap<&str, Vec<PathBuf>> = BTreeMap::new();
    let mut forgeries: BTreeMap<(&str, SampleKind), Vec<PathBuf>> = BTreeMap::new();
    for e in entries {
        match e.kind {
            SampleKind::Genuine => genuine.entry(&e.writer).or_default().push(e.path.clone()),
            kind => forgeries
                .entry((&e.writer, kind))
                .or_default()
                .push(e.path.clone()),
        }
    }
    if let Some(((writer, _), _)) = forgeries.iter().find(|((w, _), _)| !genuine.contains_key(w)) {
        return Err(Error::ParseError(format!(
            "forgeries listed for writer {writer} who has no genuine samples"
        )));
    }

    let mut writers = Vec::with_capacity(genuine.len());
    for (index, (writer, paths)) in genuine.into_iter().enumerate() {
        if paths.len() < 3 {
            return Err(Error::TooFewSamples {
                min: 3,
                got: paths.len(),
            }
            .for_writer(writer));
        }
        let mut shuffled = paths;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index as u64));
        shuffled.shuffle(&mut rng);
        let n_train = train_count(train_fraction, shuffled.len());
        let test_genuine = shuffled.split_off(n_train);
        let take = |kind| forgeries.get(&(writer, kind)).cloned().unwrap_or_default();
        writers.push(WriterSplit {
            writer: writer.to_string(),
            train_genuine: shuffled,
            test_genuine,
            test_random: Vec::new(),
            test_simple: take(SampleKind::Simple),
            test_skilled: take(SampleKind::Skilled),
        });
    }
    for i in 0..writers.len() {
        let random: Vec<PathBuf> = writers
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, w)| w.test_genuine.iter().cloned())
            .collect();
        writers[i].test_random = random;
    }
    let repeat_seeds = (0..repeats as u64)
        .map(|k| derive_seed(seed, 1_000_000 + k))
        .collect();
    Ok(ProtocolSplit {
        writers,
        repeat_seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(writers: usize, per_writer: usize) -> Vec<ManifestEntry> {
        let mut out = Vec::new();
        for w in 0..writers {
            for k in 0..per_writer {
                out.push(ManifestEntry {
                    path: PathBuf::from(format!("w{w}/g{k}.pgm")),
                    writer: format!("w{w:03}"),
                    kind: SampleKind::Genuine,
                });
            }
            out.push(ManifestEntry {
                path: PathBuf::from(format!("w{w}/s0.pgm")),
                writer: format!("w{w:03}"),
                kind: SampleKind::Skilled,
            });
        }
        out
    }

    #[test]
    fn parses_valid_manifest() {
        let text = "path,writer,kind\na.pgm,w1,genuine\nb.pgm,w1,skilled\nc.png,w2,simple\n";
        let entries = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0].path, PathBuf::from("/data/a.pgm"));
        assert_eq!(entries[1].kind, SampleKind::Skilled);
        assert_eq!(entries[2].writer, "w2");
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let text = "path,writer,kind\na.pgm,w1,crude\n";
        assert!(matches!(
            parse_manifest(text, Path::new("")),
            Err(Error::UnknownKind(k)) if k == "crude"
        ));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_manifest("path,writer,kind\n", Path::new("")).unwrap().is_empty());
    }

    #[test]
    fn duplicates_and_bad_headers_are_rejected() {
        let dup = "path,writer,kind\na.pgm,w1,genuine\na.pgm,w2,genuine\n";
        assert!(matches!(
            parse_manifest(dup, Path::new("")),
            Err(Error::DuplicatePath(_))
        ));
        assert!(matches!(
            parse_manifest("file,who,what\n", Path::new("")),
            Err(Error::ParseError(_))
        ));
        assert!(matches!(
            parse_manifest("path,writer,kind\na.pgm,w1\n", Path::new("")),
            Err(Error::ParseError(_))
        ));
    }

    #[test]
    fn manifest_write_read_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let entries: Vec<ManifestEntry> = corpus(2, 3)
            .into_iter()
            .map(|e| ManifestEntry {
                path: dir.path().join(e.path),
                ..e
            })
            .collect();
        let path = dir.path().join(MANIFEST_NAME);
        write_manifest(&entries, &path, dir.path()).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), entries);
    }

    #[test]
    fn train_count_is_exact_for_protocol_fractions() {
        assert_eq!(train_count(2.0 / 3.0, 60), 40);
        assert_eq!(train_count(0.5, 24), 12);
        assert_eq!(train_count(2.0 / 3.0, 30), 20);
        assert_eq!(train_count(0.99, 3), 2);
        assert_eq!(train_count(0.01, 3), 1);
    }

    #[test]
    fn database_one_protocol_counts() {
        let split = make_split(&corpus(60, 60), 2.0 / 3.0, 1).unwrap();
        assert!(split.writers.iter().all(|w| w.train_genuine.len() == 40));
        assert!(split.writers.iter().all(|w| w.test_genuine.len() == 20));
        assert_eq!(split.train_total(), 2400);
        assert_eq!(split.test_genuine_total(), 1200);
        assert_eq!(split.repeat_seeds.len(), 4);
    }

    #[test]
    fn gpds_protocol_counts() {
        let split = make_split(&corpus(300, 24), 0.5, 1).unwrap();
        assert!(split.writers.iter().all(|w| w.train_genuine.len() == 12));
        assert_eq!(split.train_total(), 3600);
    }

    #[test]
    fn split_is_deterministic_and_leak_free() {
        let entries = corpus(5, 9);
        let a = make_split(&entries, 2.0 / 3.0, 7).unwrap();
        assert_eq!(a, make_split(&entries, 2.0 / 3.0, 7).unwrap());
        assert_ne!(a, make_split(&entries, 2.0 / 3.0, 8).unwrap());
        for w in &a.writers {
            let train: HashSet<_> = w.train_genuine.iter().collect();
            assert!(w.test_genuine.iter().all(|p| !train.contains(p)));
            let own: HashSet<_> = w.train_genuine.iter().chain(&w.test_genuine).collect();
            assert!(w.test_random.iter().all(|p| !own.contains(p)));
            assert_eq!(w.test_random.len(), 4 * 3);
            assert_eq!(w.test_skilled.len(), 1);
        }
    }

    #[test]
    fn writer_with_two_samples_is_too_few() {
        let err = make_split(&corpus(3, 2), 0.5, 0).unwrap_err();
        assert!(matches!(err, Error::Writer { ref source, .. } if matches!(**source, Error::TooFewSamples { .. })));
    }

    #[test]
    fn invalid_fraction_is_rejected() {
        assert!(make_split(&corpus(3, 5), 1.0, 0).is_err());
        assert!(make_split(&corpus(3, 5), 0.0, 0).is_err());
    }
}

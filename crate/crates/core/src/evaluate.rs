//! FRR / FAR evaluation over a protocol split.
//!
//! Every repeat trains one planar model per writer on the same genuine
//! training set with a different draw of negatives, then tallies
//! rejections of genuine test samples and acceptances of each forgery type.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{ProtocolSplit, WriterSplit};
use crate::error::{Error, Result};
use crate::features::{extract, SignatureFeatures};
use crate::planar::{train_planar_features, PlanarConfig, PlanarModel};
use crate::raster::load_normalized;
use crate::seed::derive_seed;

/// Report schema version.
pub const REPORT_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForgeryType {
    Random,
    Simple,
    Skilled,
}

impl ForgeryType {
    pub const ALL: [ForgeryType; 3] = [ForgeryType::Random, ForgeryType::Simple, ForgeryType::Skilled];

    pub fn name(self) -> &'static str {
        match self {
            ForgeryType::Random => "random",
            ForgeryType::Simple => "simple",
            ForgeryType::Skilled => "skilled",
        }
    }

    fn title(self) -> &'static str {
        match self {
            ForgeryType::Random => "Random",
            ForgeryType::Simple => "Simple",
            ForgeryType::Skilled => "Skilled",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub total: u64,
    pub accepted: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub genuine_total: u64,
    pub genuine_rejected: u64,
    pub random: TypeCounts,
    pub simple: TypeCounts,
    pub skilled: TypeCounts,
}

impl ConfusionCounts {
    pub fn forgery(&self, t: ForgeryType) -> TypeCounts {
        match t {
            ForgeryType::Random => self.random,
            ForgeryType::Simple => self.simple,
            ForgeryType::Skilled => self.skilled,
        }
    }

    fn forgery_mut(&mut self, t: ForgeryType) -> &mut TypeCounts {
        match t {
            ForgeryType::Random => &mut self.random,
            ForgeryType::Simple => &mut self.simple,
            ForgeryType::Skilled => &mut self.skilled,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.genuine_total += other.genuine_total;
        self.genuine_rejected += other.genuine_rejected;
        for t in ForgeryType::ALL {
            let o = other.forgery(t);
            let s = self.forgery_mut(t);
            s.total += o.total;
            s.accepted += o.accepted;
        }
    }
}

/// An error rate kept as an exact ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rate {
    pub errors: u64,
    pub total: u64,
}

impl Rate {
    pub fn new(errors: u64, total: u64, category: &str) -> Result<Self> {
        if total == 0 {
            return Err(Error::EmptyCategory(category.to_string()));
        }
        Ok(Self { errors, total })
    }

    pub fn percent(&self) -> f64 {
        (100 * self.errors) as f64 / self.total as f64
    }

    /// Percentage with two decimals, rounded half up in integer arithmetic.
    pub fn render(&self) -> String {
        let hundredths = (20_000 * self.errors as u128 + self.total as u128) / (2 * self.total as u128);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub frr: Rate,
    /// Only forgery types with at least one trial.
    pub far: BTreeMap<ForgeryType, Rate>,
}

pub fn rates(c: &ConfusionCounts) -> Result<Rates> {
    let frr = Rate::new(c.genuine_rejected, c.genuine_total, "genuine")?;
    let far = ForgeryType::ALL
        .into_iter()
        .filter(|&t| c.forgery(t).total > 0)
        .map(|t| {
            let tc = c.forgery(t);
            Ok((t, Rate::new(tc.accepted, tc.total, t.name())?))
        })
        .collect::<Result<_>>()?;
    Ok(Rates { frr, far })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriterReport {
    pub writer: String,
    pub counts: ConfusionCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub seed: u64,
    pub counts: ConfusionCounts,
    pub frr: f64,
    pub far: BTreeMap<ForgeryType, f64>,
    pub per_writer: Vec<WriterReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub frr: Summary,
    pub far: BTreeMap<ForgeryType, Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub version: String,
    pub corpus_id: String,
    pub seeds: Vec<u64>,
    pub config: PlanarConfig,
    pub writers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: ReportMeta,
    pub repeats: Vec<RepeatReport>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    /// Builds per-repeat rates and the aggregate from raw tallies.
    pub fn from_counts(meta: ReportMeta, repeats: Vec<(u64, Vec<WriterReport>)>) -> Result<Self> {
        let mut blocks = Vec::with_capacity(repeats.len());
        for (seed, per_writer) in repeats {
            let mut counts = ConfusionCounts::default();
            for w in &per_writer {
                counts.merge(&w.counts);
            }
            let r = rates(&counts)?;
            blocks.push(RepeatReport {
                seed,
                counts,
                frr: r.frr.percent(),
                far: r.far.iter().map(|(&t, rate)| (t, rate.percent())).collect(),
                per_writer,
            });
        }
        if blocks.is_empty() {
            return Err(Error::EmptyCategory("repeats".into()));
        }
        let frr: Vec<f64> = blocks.iter().map(|b| b.frr).collect();
        let far = ForgeryType::ALL
            .into_iter()
            .filter(|t| blocks.iter().all(|b| b.far.contains_key(t)))
            .map(|t| {
                let v: Vec<f64> = blocks.iter().map(|b| b.far[&t]).collect();
                (t, Summary::of(&v))
            })
            .collect();
        Ok(Self {
            meta,
            repeats: blocks,
            aggregate: Aggregate {
                frr: Summary::of(&frr),
                far,
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub planar: PlanarConfig,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub corpus_id: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            planar: PlanarConfig::default(),
            threads: None,
            corpus_id: String::new(),
        }
    }
}

type FeatureCache = HashMap<PathBuf, SignatureFeatures>;

fn featurize_all(split: &ProtocolSplit, min_height: usize) -> Result<FeatureCache> {
    let mut paths: Vec<&PathBuf> = split
        .writers
        .iter()
        .flat_map(|w| {
            w.train_genuine
                .iter()
                .chain(&w.test_genuine)
                .chain(&w.test_simple)
                .chain(&w.test_skilled)
        })
        .collect();
    paths.sort();
    paths.dedup();
    paths
        .into_par_iter()
        .map(|p| {
            let f = load_normalized(p).and_then(|r| extract(&r, min_height));
            f.map(|f| (p.clone(), f)).map_err(|e| match e {
                Error::FileNotFound(_) | Error::Io { .. } => e,
                other => Error::CorruptImage(format!("{}: {other}", p.display())),
            })
        })
        .collect()
}

fn tally(model: &PlanarModel, w: &WriterSplit, cache: &FeatureCache) -> Result<ConfusionCounts> {
    let accepted = |paths: &[PathBuf]| -> Result<u64> {
        let mut n = 0;
        for p in paths {
            if model.verify_features(&cache[p])?.accepted {
                n += 1;
            }
        }
        Ok(n)
    };
    let genuine_accepted = accepted(&w.test_genuine)?;
    let forgery = |paths: &[PathBuf]| -> Result<TypeCounts> {
        Ok(TypeCounts {
            total: paths.len() as u64,
            accepted: accepted(paths)?,
        })
    };
    Ok(ConfusionCounts {
        genuine_total: w.test_genuine.len() as u64,
        genuine_rejected: w.test_genuine.len() as u64 - genuine_accepted,
        random: forgery(&w.test_random)?,
        simple: forgery(&w.test_simple)?,
        skilled: forgery(&w.test_skilled)?,
    })
}

fn run_writer(
    split: &ProtocolSplit,
    index: usize,
    repeat_seed: u64,
    cache: &FeatureCache,
    cfg: &PlanarConfig,
) -> Result<WriterReport> {
    let w = &split.writers[index];
    let genuine: Vec<SignatureFeatures> = w.train_genuine.iter().map(|p| cache[p].clone()).collect();
    let pool = split.negative_pool(&w.writer);
    if pool.len() < genuine.len() {
        return Err(Error::TooFewSamples {
            min: genuine.len(),
            got: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(repeat_seed, index as u64));
    let mut picks = rand::seq::index::sample(&mut rng, pool.len(), genuine.len()).into_vec();
    picks.sort_unstable();
    let negatives: Vec<SignatureFeatures> = picks.into_iter().map(|i| cache[pool[i]].clone()).collect();
    let model = train_planar_features(&w.writer, &genuine, &negatives, cfg)?;
    Ok(WriterReport {
        writer: w.writer.clone(),
        counts: tally(&model, w, cache)?,
    })
}

/// Runs the full protocol: one repeat per seed in `split.repeat_seeds`.
///
/// Writers are processed in parallel; results are gathered in writer order
/// so reports do not depend on scheduling.
pub fn run_protocol(split: &ProtocolSplit, cfg: &EvalConfig) -> Result<EvalReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        let cache = featurize_all(split, cfg.planar.min_height)?;
        log::info!("featurized {} images", cache.len());
        let mut repeats = Vec::with_capacity(split.repeat_seeds.len());
        for (k, &seed) in split.repeat_seeds.iter().enumerate() {
            let per_writer = (0..split.writers.len())
                .into_par_iter()
                .map(|i| {
                    run_writer(split, i, seed, &cache, &cfg.planar)
                        .map_err(|e| e.for_writer(&split.writers[i].writer))
                })
                .collect::<Result<Vec<_>>>()?;
            log::info!("repeat {} of {} done", k + 1, split.repeat_seeds.len());
            repeats.push((seed, per_writer));
        }
        let meta = ReportMeta {
            version: REPORT_VERSION.to_string(),
            corpus_id: cfg.corpus_id.clone(),
            seeds: split.repeat_seeds.clone(),
            config: cfg.planar.clone(),
            writers: split.writers.len(),
        };
        EvalReport::from_counts(meta, repeats)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

pub fn report_json(r: &EvalReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)?)
}

/// CSV with header `repeat,metric,type,value`: FRR and every reported FAR
/// per repeat, then `mean` and `std` rows.
pub fn report_csv(r: &EvalReport) -> Result<String> {
    let mut out = String::from("repeat,metric,type,value\n");
    for (k, block) in r.repeats.iter().enumerate() {
        let rs = rates(&block.counts)?;
        let _ = writeln!(out, "{},FRR,genuine,{}", k + 1, rs.frr.render());
        for (t, rate) in &rs.far {
            let _ = writeln!(out, "{},FAR,{},{}", k + 1, t.name(), rate.render());
        }
    }
    for (label, pick) in [("mean", 0), ("std", 1)] {
        let value = |s: &Summary| if pick == 0 { s.mean } else { s.std };
        let _ = writeln!(out, "{label},FRR,genuine,{:.2}", value(&r.aggregate.frr));
        for (t, s) in &r.aggregate.far {
            let _ = writeln!(out, "{label},FAR,{},{:.2}", t.name(), value(s));
        }
    }
    Ok(out)
}

pub fn emit_report(r: &EvalReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Json => report_json(r)?,
        ReportFormat::Csv => report_csv(r)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Plain-text table: an FRR row and one FAR row per forgery type, one column
/// per repeat plus the mean.
pub fn render_table(r: &EvalReport) -> Result<String> {
    let mut header = format!("{:<16}", "");
    for k in 0..r.repeats.len() {
        let _ = write!(header, "{:>10}", format!("run {}", k + 1));
    }
    let _ = write!(header, "{:>10}", "mean");
    let mut lines = vec![header];

    let rendered: Vec<Rates> = r.repeats.iter().map(|b| rates(&b.counts)).collect::<Result<_>>()?;
    let mut row = format!("{:<16}", "FRR %");
    for rs in &rendered {
        let _ = write!(row, "{:>10}", rs.frr.render());
    }
    let _ = write!(row, "{:>10.2}", r.aggregate.frr.mean);
    lines.push(row);

    for (i, (t, summary)) in r.aggregate.far.iter().enumerate() {
        let label = if i == 0 {
            format!("FAR % {}", t.title())
        } else {
            format!("      {}", t.title())
        };
        let mut row = format!("{label:<16}");
        for rs in &rendered {
            let _ = write!(row, "{:>10}", rs.far[t].render());
        }
        let _ = write!(row, "{:>10.2}", summary.mean);
        lines.push(row);
    }
    Ok(lines.join("\n") + "\n")
}

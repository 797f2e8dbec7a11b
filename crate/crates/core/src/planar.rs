//! Per-writer planar model: three band ("secondary") perceptrons read the
//! horizontal bands, and a principal perceptron combines their scores with
//! the global attributes into the accept/reject decision.
//!
//! Training runs in two stages. The secondary networks are trained first,
//! each on its own band, then frozen; the principal network is trained on
//! their scores.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract, GlobalAttributes, NormStats, SignatureFeatures, GLOBAL_LEN, SECONDARY_LEN};
use crate::mlp::{Perceptron, Sample, TrainConfig, TrainOutcome};
use crate::raster::BinaryRaster;
use crate::seed::derive_seed;
use crate::segmenter::DEFAULT_MIN_HEIGHT;

/// Model file schema version.
pub const MODEL_VERSION: &str = "1";

/// Principal input width: three band scores plus the global attributes.
pub const PRINCIPAL_LEN: usize = 3 + GLOBAL_LEN;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarConfig {
    pub hidden_secondary: usize,
    pub hidden_principal: usize,
    pub train: TrainConfig,
    pub threshold: f64,
    pub min_height: usize,
    pub seed: u64,
}

impl Default for PlanarConfig {
    fn default() -> Self {
        Self {
            hidden_secondary: 10,
            hidden_principal: 8,
            train: TrainConfig::default(),
            threshold: 0.5,
            min_height: DEFAULT_MIN_HEIGHT,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config: PlanarConfig,
    /// Fraction of training samples whose segmentation fell back to thirds.
    pub band_fallback_rate: f64,
    pub secondary_training: Vec<TrainOutcome>,
    pub principal_training: TrainOutcome,
    pub genuine_count: usize,
    pub negative_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarModel {
    pub writer_id: String,
    /// Band models, top to bottom.
    pub secondary: [Perceptron; 3],
    pub principal: Perceptron,
    pub norm: NormStats,
    pub threshold: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub principal_score: f64,
    pub secondary_scores: [f64; 3],
    pub fallback_segmentation: bool,
}

/// `[s1, s2, s3, z(h1), z(h2), z(h3), z(p1), z(p2), z(p3), z(theta)]`.
/// Band scores are already in (0, 1) and pass through unscaled.
pub fn assemble_principal_input(
    secondary_scores: &[f64],
    global: &GlobalAttributes,
    norm: &NormStats,
) -> Result<Vec<f64>> {
    if secondary_scores.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: secondary_scores.len(),
        });
    }
    let mut input = Vec::with_capacity(PRINCIPAL_LEN);
    input.extend_from_slice(secondary_scores);
    input.extend(norm.global.apply(&global.to_vec())?);
    Ok(input)
}

fn secondary_scores(secondary: &[Perceptron; 3], norm: &NormStats, f: &SignatureFeatures) -> Result<[f64; 3]> {
    let mut scores = [0.0; 3];
    for (b, score) in scores.iter_mut().enumerate() {
        *score = secondary[b].forward(&norm.band(b, &f.bands[b]))?;
    }
    Ok(scores)
}

/// Trains a writer's model from normalized rasters.
pub fn train_planar(
    writer_id: &str,
    genuine: &[BinaryRaster],
    negatives: &[BinaryRaster],
    cfg: &PlanarConfig,
) -> Result<PlanarModel> {
    let featurize = |rs: &[BinaryRaster]| -> Result<Vec<SignatureFeatures>> {
        rs.iter().map(|r| extract(r, cfg.min_height)).collect()
    };
    train_planar_features(writer_id, &featurize(genuine)?, &featurize(negatives)?, cfg)
}

/// Trains a writer's model from precomputed features.
///
/// Negatives are subsampled (seeded) down to the genuine count so both
/// classes are equally represented. Normalization statistics come from the
/// genuine samples only.
pub fn train_planar_features(
    writer_id: &str,
    genuine: &[SignatureFeatures],
    negatives: &[SignatureFeatures],
    cfg: &PlanarConfig,
) -> Result<PlanarModel> {
    cfg.train.validate()?;
    if genuine.len() < 2 {
        return Err(Error::TooFewSamples {
            min: 2,
            got: genuine.len(),
        });
    }
    if negatives.len() < genuine.len() {
        return Err(Error::TooFewSamples {
            min: genuine.len(),
            got: negatives.len(),
        });
    }
    let negatives: Vec<&SignatureFeatures> = if negatives.len() == genuine.len() {
        negatives.iter().collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 100));
        let mut idx = rand::seq::index::sample(&mut rng, negatives.len(), genuine.len()).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &negatives[i]).collect()
    };

    let norm = NormStats::fit(genuine)?;
    let labelled: Vec<(&SignatureFeatures, f64)> = genuine
        .iter()
        .map(|f| (f, 1.0))
        .chain(negatives.iter().map(|&f| (f, 0.0)))
        .collect();

    // Stage 1: one network per band.
    let mut secondary_training = Vec::with_capacity(3);
    let mut trained = Vec::with_capacity(3);
    for b in 0..3 {
        let samples: Vec<Sample> = labelled
            .iter()
            .map(|(f, t)| Sample::new(norm.band(b, &f.bands[b]), *t))
            .collect();
        let init = Perceptron::init(SECONDARY_LEN, cfg.hidden_secondary, derive_seed(cfg.seed, b as u64));
        let train_cfg = TrainConfig {
            seed: derive_seed(cfg.seed, 10 + b as u64),
            ..cfg.train.clone()
        };
        let (net, outcome) = init.train(&samples, &train_cfg)?;
        trained.push(net);
        secondary_training.push(outcome);
    }
    let secondary: [Perceptron; 3] = trained.try_into().expect("three band networks");

    // Stage 2: principal network on frozen band scores.
    let samples = labelled
        .iter()
        .map(|(f, t)| {
            let scores = secondary_scores(&secondary, &norm, f)?;
            Ok(Sample::new(assemble_principal_input(&scores, &f.global, &norm)?, *t))
        })
        .collect::<Result<Vec<_>>>()?;
    let init = Perceptron::init(PRINCIPAL_LEN, cfg.hidden_principal, derive_seed(cfg.seed, 3));
    let train_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, 13),
        ..cfg.train.clone()
    };
    let (principal, principal_training) = init.train(&samples, &train_cfg)?;

    let fallbacks = labelled.iter().filter(|(f, _)| f.split.fallback).count();
    Ok(PlanarModel {
        writer_id: writer_id.to_string(),
        secondary,
        principal,
        norm,
        threshold: cfg.threshold,
        provenance: Provenance {
            seed: cfg.seed,
            config: cfg.clone(),
            band_fallback_rate: fallbacks as f64 / labelled.len() as f64,
            secondary_training,
            principal_training,
            genuine_count: genuine.len(),
            negative_count: negatives.len(),
        },
    })
}

impl PlanarModel {
    pub fn verify(&self, r: &BinaryRaster) -> Result<Verdict> {
        self.verify_features(&extract(r, self.provenance.config.min_height)?)
    }

    pub fn verify_features(&self, f: &SignatureFeatures) -> Result<Verdict> {
        let secondary_scores = secondary_scores(&self.secondary, &self.norm, f)?;
        let input = assemble_principal_input(&secondary_scores, &f.global, &self.norm)?;
        let principal_score = self.principal.forward(&input)?;
        Ok(Verdict {
            accepted: principal_score >= self.threshold,
            principal_score,
            secondary_scores,
            fallback_segmentation: f.split.fallback,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION.to_string(),
            writer_id: self.writer_id.clone(),
            threshold: self.threshold,
            norm: self.norm.clone(),
            secondary: self.secondary.to_vec(),
            principal: self.principal.clone(),
            provenance: self.provenance.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        match value.get("version") {
            Some(serde_json::Value::String(v)) if v == MODEL_VERSION => {}
            Some(serde_json::Value::String(v)) => {
                return Err(Error::VersionMismatch {
                    expected: MODEL_VERSION.to_string(),
                    found: v.clone(),
                })
            }
            Some(other) => {
                return Err(Error::VersionMismatch {
                    expected: MODEL_VERSION.to_string(),
                    found: other.to_string(),
                })
            }
            None => return Err(Error::SchemaViolation("missing version".into())),
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        file.into_model()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: String,
    writer_id: String,
    threshold: f64,
    norm: NormStats,
    secondary: Vec<Perceptron>,
    principal: Perceptron,
    provenance: Provenance,
}

impl ModelFile {
    fn into_model(self) -> Result<PlanarModel> {
        let violation = |msg: String| Err(Error::SchemaViolation(msg));
        if self.secondary.len() != 3 {
            return violation(format!("expected 3 secondary models, found {}", self.secondary.len()));
        }
        for (b, net) in self.secondary.iter().enumerate() {
            if net.n_in != SECONDARY_LEN {
                return violation(format!("secondary model {b} has {} inputs", net.n_in));
            }
            net.check_shape()
                .map_err(|e| Error::SchemaViolation(format!("secondary model {b}: {e}")))?;
        }
        if self.principal.n_in != PRINCIPAL_LEN {
            return violation(format!("principal model has {} inputs", self.principal.n_in));
        }
        self.principal
            .check_shape()
            .map_err(|e| Error::SchemaViolation(format!("principal model: {e}")))?;
        for (b, s) in self.norm.bands.iter().enumerate() {
            if s.dim() != SECONDARY_LEN || s.std.len() != SECONDARY_LEN || s.constant.len() != SECONDARY_LEN {
                return violation(format!("band {b} normalization has wrong length"));
            }
        }
        let g = &self.norm.global;
        if g.dim() != GLOBAL_LEN || g.std.len() != GLOBAL_LEN || g.constant.len() != GLOBAL_LEN {
            return violation("global normalization has wrong length".into());
        }
        if !self.threshold.is_finite() {
            return violation("threshold is not finite".into());
        }
        let secondary: [Perceptron; 3] = self.secondary.try_into().expect("length checked");
        Ok(PlanarModel {
            writer_id: self.writer_id,
            secondary,
            principal: self.principal,
            norm: self.norm,
            threshold: self.threshold,
            provenance: self.provenance,
        })
    }
}

pub fn save_model(m: &PlanarModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, m.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PlanarModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PlanarModel::from_json(&text)
}

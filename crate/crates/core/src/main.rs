use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use sigverify::datasets::{load_manifest, make_split_with_repeats, synth_corpus, SampleKind, DEFAULT_REPEATS};
use sigverify::evaluate::{emit_report, render_table, run_protocol, EvalConfig, ReportFormat};
use sigverify::features::{extract, subband_stats};
use sigverify::planar::{load_model, save_model, train_planar, PlanarConfig};
use sigverify::raster::{binarize, load_image, load_normalized, normalize, write_pgm, write_ppm, BinaryRaster};
use sigverify::segmenter::{render_overlay, segment, DEFAULT_MIN_HEIGHT};
use sigverify::{Error, Result};

const EXIT_ERROR: u8 = 1;
const EXIT_REJECTED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "sigverify", version, about = "Offline handwritten signature verification")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    /// Worker threads for `evaluate` (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Binarize and normalize an image to 256x512, written as PGM.
    Preprocess {
        input: PathBuf,
        output: PathBuf,
        /// Fixed binarization threshold instead of Otsu.
        #[arg(long)]
        threshold: Option<u8>,
    },
    /// Split a signature into three horizontal bands.
    Segment {
        input: PathBuf,
        /// Write a PPM copy with the cut rows drawn in red.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Write the JSON result here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MIN_HEIGHT)]
        min_height: usize,
    },
    /// Compute band and global features.
    Features {
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Include per-subband wavelet statistics.
        #[arg(long)]
        subbands: bool,
    },
    /// Generate a synthetic corpus with a manifest.
    Synth {
        #[arg(long)]
        writers: usize,
        #[arg(long)]
        per_writer: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enroll one writer from a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        writer: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        hidden_secondary: usize,
        #[arg(long, default_value_t = 8)]
        hidden_principal: usize,
    },
    /// Verify a signature against a model (exit 0 accepted, 2 rejected).
    Verify {
        #[arg(long)]
        model: PathBuf,
        input: PathBuf,
    },
    /// Run the repeated FRR/FAR protocol over a manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        train_fraction: f64,
        /// Report path; `.csv` selects CSV, anything else JSON.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
    },
}

fn write_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let seed = cli.global.seed;
    match cli.command {
        Command::Preprocess {
            input,
            output,
            threshold,
        } => {
            let raster = normalize(&binarize(&load_image(&input)?, threshold))?;
            write_pgm(&raster.to_gray(), &output)?;
            log::info!("wrote {}", output.display());
        }
        Command::Segment {
            input,
            overlay,
            json,
            min_height,
        } => {
            let raster = load_normalized(&input)?;
            let split = segment(&raster, min_height);
            if let Some(p) = overlay {
                write_ppm(&render_overlay(&raster, &split), p)?;
            }
            let doc = json!({
                "cuts": split.cuts,
                "heights": split.heights(),
                "fallback": split.fallback,
            });
            write_json(&doc, json.as_deref())?;
        }
        Command::Features {
            input,
            json,
            subbands,
        } => {
            let raster = load_normalized(&input)?;
            let f = extract(&raster, DEFAULT_MIN_HEIGHT)?;
            let mut doc = json!({
                "bands": f.bands,
                "global": f.global,
            });
            if subbands {
                let stats = f
                    .split
                    .bands()
                    .into_iter()
                    .map(|band| subband_stats(&raster, band))
                    .collect::<Result<Vec<_>>>()?;
                doc["subbands"] = serde_json::to_value(stats)?;
            }
            write_json(&doc, json.as_deref())?;
        }
        Command::Synth {
            writers,
            per_writer,
            out,
        } => {
            let entries = synth_corpus(writers, per_writer, seed, &out)?;
            log::info!("wrote {} images under {}", entries.len(), out.display());
        }
        Command::Train {
            manifest,
            writer,
            out,
            hidden_secondary,
            hidden_principal,
        } => {
            let entries = load_manifest(&manifest)?;
            let load = |pred: &dyn Fn(&str) -> bool| -> Result<Vec<BinaryRaster>> {
                entries
                    .iter()
                    .filter(|e| e.kind == SampleKind::Genuine && pred(&e.writer))
                    .map(|e| load_normalized(&e.path))
                    .collect()
            };
            let genuine = load(&|w| w == writer)?;
            if genuine.is_empty() {
                return Err(Error::ParseError(format!(
                    "writer {writer:?} has no genuine samples in {}",
                    manifest.display()
                )));
            }
            let negatives = load(&|w| w != writer)?;
            let cfg = PlanarConfig {
                hidden_secondary,
                hidden_principal,
                seed,
                ..PlanarConfig::default()
            };
            let model = train_planar(&writer, &genuine, &negatives, &cfg)?;
            save_model(&model, &out)?;
            log::info!(
                "trained {writer}: {} genuine, {} negatives, principal mse {:.5}",
                model.provenance.genuine_count,
                model.provenance.negative_count,
                model.provenance.principal_training.mse
            );
        }
        Command::Verify { model, input } => {
            let model = load_model(&model)?;
            let verdict = model.verify(&load_normalized(&input)?)?;
            let doc = json!({
                "writer_id": model.writer_id,
                "accepted": verdict.accepted,
                "principal_score": verdict.principal_score,
                "secondary_scores": verdict.secondary_scores,
                "fallback_segmentation": verdict.fallback_segmentation,
                "threshold": model.threshold,
            });
            write_json(&doc, None)?;
            if !verdict.accepted {
                return Ok(EXIT_REJECTED);
            }
        }
        Command::Evaluate {
            manifest,
            train_fraction,
            out,
            repeats,
        } => {
            let entries = load_manifest(&manifest)?;
            let split = make_split_with_repeats(&entries, train_fraction, seed, repeats)?;
            let cfg = EvalConfig {
                planar: PlanarConfig {
                    seed,
                    ..PlanarConfig::default()
                },
                threads: cli.global.threads,
                corpus_id: manifest.display().to_string(),
            };
            let report = run_protocol(&split, &cfg)?;
            emit_report(&report, &out, ReportFormat::from_path(&out))?;
            eprint!("{}", render_table(&report)?);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

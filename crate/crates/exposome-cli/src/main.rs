//! `exposome` — pipeline runner for fused environment/physiology sessions.
//!
//! Subcommands mirror the pipeline stages (`synth`, `validate`, `fuse`,
//! `stats`, `spatial`, `train`, `evaluate`) plus `run` for the whole chain.
//! Flag precedence is flags > config file > defaults; the output directory
//! additionally falls back to `EXPOSOME_OUT_DIR`.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use exposome::align::{fuse, FusedFrameTable, FusedMeta};
use exposome::dbn::DbnModel;
use exposome::ingest::{generate_synthetic_session, load_session, validate_bundle, write_session};
use exposome::pipeline::{
    default_stats_channels, run_evaluate_stage, run_pipeline, run_spatial_stage, run_stats_stage,
    run_train_stage, ArtifactStore, DbnSettings, EvalSettings, PipelineConfig, SpatialSettings,
    StageStatus, OUT_DIR_ENV,
};
use exposome::seed::derive_seed;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "exposome", version, about = "Sensor fusion, statistics, tessellation and wellbeing inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonIo {
    /// Pipeline config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for all derived randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (falls back to config, then $EXPOSOME_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic session to disk (channel CSVs + manifest).
    Synth {
        #[command(flatten)]
        io: CommonIo,
    },
    /// Validate a session: coverage, constant channels, overlap window.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Fuse a session into the 1 Hz table (fused.csv + fused.meta.json).
    Fuse {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Correlation matrix, PCA, regression and Q-Q data for a fused table.
    Stats {
        #[arg(long)]
        fused: PathBuf,
        /// Channels for correlation/PCA (comma separated).
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
        /// Regression response channel.
        #[arg(long)]
        response: Option<String>,
        /// Regression predictors (comma separated).
        #[arg(long, value_delimiter = ',')]
        predictors: Option<Vec<String>>,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Voronoi tessellation (GeoJSON/SVG) and grid heat map.
    Spatial {
        #[arg(long)]
        fused: PathBuf,
        /// "label" or a channel name for the cell values.
        #[arg(long)]
        site_value: Option<String>,
        #[arg(long)]
        padding: Option<f64>,
        #[arg(long)]
        heatmap_channel: Option<String>,
        #[arg(long)]
        cell_size: Option<f64>,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Train the DBN on labelled fused rows and write dbn_model.json.
    Train {
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        rate: Option<f64>,
        /// Hidden layer widths (comma separated), input width excluded.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Cross-validate classifiers on statistical and DBN features.
    Evaluate {
        #[arg(long)]
        fused: PathBuf,
        /// Serialized DBN (dbn_model.json); trained on the fly if absent.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Classifier registry names (repeat or comma separate).
        #[arg(long, value_delimiter = ',')]
        classifier: Option<Vec<String>>,
        #[arg(long)]
        window: Option<u32>,
        #[arg(long)]
        stride: Option<u32>,
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Full pipeline: ingest/synth, validate, fuse, stats, spatial, train,
    /// evaluate, report.
    Run {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        io: CommonIo,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn load_config(io: &CommonIo) -> Result<PipelineConfig> {
    let mut cfg = match &io.config {
        Some(path) => PipelineConfig::from_json_file(path)
            .with_context(|| format!("reading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if io.seed.is_some() {
        cfg.seed = io.seed;
    }
    if io.out.is_some() {
        cfg.out_dir = io.out.clone();
    }
    Ok(cfg)
}

fn out_dir(cfg: &PipelineConfig) -> PathBuf {
    // Resolution order: --out flag (already folded into cfg), config file,
    // then the environment fallback inside resolved_out_dir().
    let _ = OUT_DIR_ENV; // documented fallback, applied by resolved_out_dir
    cfg.resolved_out_dir()
}

/// Load a fused table, picking up the meta sidecar when present.
fn load_fused(path: &Path) -> Result<FusedFrameTable> {
    let meta_path = path.with_extension("meta.json");
    let meta: Option<FusedMeta> = if meta_path.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?)
    } else {
        None
    };
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening fused table {}", path.display()))?;
    Ok(FusedFrameTable::from_csv(file, meta)?)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth { io } => {
            let cfg = load_config(&io)?;
            let dir = out_dir(&cfg);
            let session =
                generate_synthetic_session(&cfg.synth, derive_seed(cfg.seed(), "synth"))?;
            let session_dir = dir.join("session");
            let manifest = write_session(&session_dir, &session.bundle)?;
            std::fs::write(
                session_dir.join("planted_truth.json"),
                serde_json::to_string_pretty(&session.truth)?,
            )?;
            println!("wrote session: {}", manifest.display());
            println!("channels: {}", session.bundle.streams.len());
            println!("labels: {}", session.bundle.labels.len());
            Ok(0)
        }
        Command::Validate { manifest, io } => {
            let cfg = load_config(&io)?;
            let bundle = load_session(&manifest)?;
            let report = validate_bundle(&bundle);
            let doc = serde_json::to_string_pretty(&report)?;
            if io.out.is_some() || cfg.out_dir.is_some() {
                let mut store = ArtifactStore::new(out_dir(&cfg))?;
                store.write("validation.json", &doc)?;
                println!("wrote {}", store.dir().join("validation.json").display());
            } else {
                println!("{doc}");
            }
            for name in report.constant_channels() {
                eprintln!("warning: channel '{name}' is constant and will be excluded");
            }
            Ok(0)
        }
        Command::Fuse { manifest, io } => {
            let cfg = load_config(&io)?;
            let bundle = load_session(&manifest)?;
            let table = fuse(&bundle)?;
            let mut store = ArtifactStore::new(out_dir(&cfg))?;
            store.write("fused.csv", table.to_csv())?;
            store.write("fused.meta.json", serde_json::to_string_pretty(&table.meta())?)?;
            println!(
                "fused {} rows x {} channels (excluded: {})",
                table.n_rows(),
                table.channels.len(),
                if table.excluded.is_empty() { "none".into() } else { table.excluded.join(", ") }
            );
            Ok(0)
        }
        Command::Stats { fused, channels, response, predictors, io } => {
            let cfg = load_config(&io)?;
            let table = load_fused(&fused)?;
            let channels = channels
                .or(cfg.stats_channels.clone())
                .unwrap_or_else(|| default_stats_channels(&table));
            let mut regression = cfg.regression.clone();
            if let Some(r) = response {
                regression.response = r;
            }
            if let Some(p) = predictors {
                regression.predictors = p;
            }
            let mut store = ArtifactStore::new(out_dir(&cfg))?;
            let out = run_stats_stage(&table, &channels, &regression, &mut store)?;
            println!(
                "stats over {} channels: PC1 {:.4}, PC2 {:.4}; {} R^2 {:.4}",
                out.channels.len(),
                out.pc1_ratio,
                out.pc2_ratio,
                regression.response,
                out.regression_r2
            );
            Ok(0)
        }
        Command::Spatial { fused, site_value, padding, heatmap_channel, cell_size, io } => {
            let cfg = load_config(&io)?;
            let table = load_fused(&fused)?;
            let mut settings: SpatialSettings = cfg.spatial.clone();
            if let Some(v) = site_value {
                settings.site_value = v;
            }
            if let Some(p) = padding {
                settings.bbox_padding_m = p;
            }
            if let Some(h) = heatmap_channel {
                settings.heatmap_channel = h;
            }
            if let Some(c) = cell_size {
                settings.heatmap_cell_m = c;
            }
            let mut store = ArtifactStore::new(out_dir(&cfg))?;
            let out = run_spatial_stage(&table, &settings, &mut store)?;
            println!(
                "tessellation: {} cells; heat grid: {} populated cells",
                out.n_cells, out.heat_cells
            );
            Ok(0)
        }
        Command::Train { fused, epochs, batch_size, rate, hidden, io } => {
            let cfg = load_config(&io)?;
            let table = load_fused(&fused)?;
            let mut settings: DbnSettings = cfg.dbn.clone();
            if let Some(e) = epochs {
                settings.epochs = e;
            }
            if let Some(b) = batch_size {
                settings.batch_size = b;
            }
            if let Some(r) = rate {
                settings.learning_rate = r;
            }
            if hidden.is_some() {
                settings.hidden_sizes = hidden;
            }
            let mut store = ArtifactStore::new(out_dir(&cfg))?;
            let model = run_train_stage(&table, &settings, cfg.seed(), &mut store)?;
            println!("trained DBN with layer sizes {:?}", model.layer_sizes);
            Ok(0)
        }
        Command::Evaluate { fused, model, classifier, window, stride, folds, io } => {
            let cfg = load_config(&io)?;
            let table = load_fused(&fused)?;
            let mut eval: EvalSettings = cfg.eval.clone();
            if let Some(c) = classifier {
                eval.classifiers = c;
            }
            if let Some(w) = window {
                eval.window_s = w;
            }
            if let Some(s) = stride {
                eval.stride_s = s;
            }
            if let Some(f) = folds {
                eval.folds = f;
            }
            let mut store = ArtifactStore::new(out_dir(&cfg))?;
            let dbn_model = match model {
                Some(path) => DbnModel::from_json(
                    &std::fs::read_to_string(&path)
                        .with_context(|| format!("reading model {}", path.display()))?,
                )?,
                None => run_train_stage(&table, &cfg.dbn, cfg.seed(), &mut store)?,
            };
            let out =
                run_evaluate_stage(&table, &dbn_model, &eval, &cfg.dbn, cfg.seed(), &mut store)?;
            for r in &out.reports {
                println!(
                    "{:<20} {:<21} {:<13} {:.4} +/- {:.4}",
                    r.model,
                    r.provenance.to_string(),
                    r.modality.to_string(),
                    r.mean_accuracy,
                    r.std_accuracy
                );
            }
            Ok(0)
        }
        Command::Run { manifest, io } => {
            let mut cfg = load_config(&io)?;
            if manifest.is_some() {
                cfg.manifest = manifest;
            }
            let report = run_pipeline(&cfg)?;
            for stage in &report.stages {
                let status = match &stage.status {
                    StageStatus::Completed => "ok".to_string(),
                    StageStatus::Failed(msg) => format!("FAILED ({msg})"),
                    StageStatus::Skipped => "skipped".to_string(),
                };
                println!("{:<9} {status}", stage.name);
            }
            println!("report: {}", report.out_dir.join("run_report.json").display());
            if report.success {
                Ok(0)
            } else {
                if let Some(stage) = report.failed_stage() {
                    eprintln!("pipeline failed at stage '{}'", stage.name);
                }
                Ok(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn all_documented_subcommands_exist() {
        let cmd = Cli::command();
        let names: Vec<&str> = cmd.get_subcommands().map(|c| c.get_name()).collect();
        for expected in ["synth", "validate", "fuse", "stats", "spatial", "train", "evaluate", "run"] {
            assert!(names.contains(&expected), "missing subcommand {expected}");
        }
    }
}

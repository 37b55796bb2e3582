//! Pipeline orchestration: one config drives synth/ingest -> validate ->
//! fuse -> stats -> spatial -> train -> evaluate -> report.
//!
//! Stages run in order and short-circuit on the first failure, leaving a
//! partial report whose inventory matches what was actually written. All
//! randomness flows from the single base seed through per-stage labels, so
//! identical `(inputs, config, seed)` produce byte-identical analysis
//! artifacts. `run_report.json` is the one file carrying timings and is
//! deliberately excluded from the artifact inventory.

use crate::align::{fuse, FusedFrameTable};
use crate::classify::{
    kfold_cv, modality_ablation, statistical_features, trainer_by_name, ClassifyError,
    EvalReport, LabeledDataset, Modality, Provenance,
};
use crate::dbn::{default_hidden_sizes, train_dbn, DbnModel, TrainConfig};
use crate::ingest::{
    generate_synthetic_session, load_session, validate_bundle, ChannelKind, SessionBundle,
    SynthConfig,
};
use crate::seed::derive_seed;
use crate::spatial::{
    classify_cells, grid_heatmap, sites_from_table, tessellation_to_geojson, tessellation_to_svg,
    voronoi, Rect, SiteValue,
};
use crate::stats::{complete_matrix, ols_regress, pca, pearson_matrix, qq_data, qq_to_csv};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stage {stage}: {message}")]
    Stage { stage: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn stage_err(stage: &str, err: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage: stage.to_string(), message: err.to_string() }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// One multivariate regression to run during the stats stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionSpec {
    pub response: String,
    pub predictors: Vec<String>,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        Self {
            response: "eda".into(),
            predictors: vec![
                "nh3".into(),
                "noise".into(),
                "oxidised".into(),
                "pm1".into(),
                "pm10".into(),
                "pm25".into(),
                "reduced".into(),
            ],
        }
    }
}

/// DBN stage settings; `hidden_sizes` omits the input width.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DbnSettings {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub mean_field: bool,
    /// Hidden layer widths; `None` applies the 2/3 - 1/3 default rule.
    /// The pipeline default is a single hidden layer of 10 units: on
    /// row-level fused data a second binary layer measurably costs the
    /// downstream classifiers accuracy.
    pub hidden_sizes: Option<Vec<usize>>,
}

impl Default for DbnSettings {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            learning_rate: base.learning_rate,
            epochs: base.epochs,
            batch_size: base.batch_size,
            mean_field: base.mean_field,
            hidden_sizes: Some(vec![10]),
        }
    }
}

impl DbnSettings {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            mean_field: self.mean_field,
        }
    }

    pub fn sizes_for_input(&self, input: usize) -> Vec<usize> {
        match &self.hidden_sizes {
            Some(hidden) => {
                let mut sizes = Vec::with_capacity(hidden.len() + 1);
                sizes.push(input);
                sizes.extend_from_slice(hidden);
                sizes
            }
            None => default_hidden_sizes(input),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialSettings {
    /// `"label"` or a channel name: the value tessellation cells carry.
    pub site_value: String,
    pub bbox_padding_m: f64,
    /// Class thresholds; `None` uses the five-level valence bins for label
    /// sites and even `[0, 1]` quantile bins for channel sites.
    pub class_bins: Option<Vec<f64>>,
    pub heatmap_channel: String,
    pub heatmap_cell_m: f64,
}

impl Default for SpatialSettings {
    fn default() -> Self {
        Self {
            site_value: "label".into(),
            bbox_padding_m: 25.0,
            class_bins: None,
            heatmap_channel: "pm25".into(),
            heatmap_cell_m: 25.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    /// Registry names evaluated on both feature sources.
    pub classifiers: Vec<String>,
    pub window_s: u32,
    pub stride_s: u32,
    pub folds: usize,
    /// Classifier driving the modality ablation.
    pub ablation_classifier: String,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            classifiers: vec![
                "logistic_regression".into(),
                "gaussian_nb".into(),
                "decision_tree".into(),
                "random_forest".into(),
            ],
            window_s: 10,
            stride_s: 10,
            folds: 10,
            ablation_classifier: "random_forest".into(),
        }
    }
}

/// Everything `run` needs; flags override config fields, config fields
/// override defaults.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    /// Session manifest path; absent means synthesize `synth`.
    pub manifest: Option<PathBuf>,
    pub synth: SynthConfig,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Channels for correlation/PCA; `None` selects the environment and
    /// physiology channels of the fused table.
    pub stats_channels: Option<Vec<String>>,
    pub regression: RegressionSpec,
    pub dbn: DbnSettings,
    pub spatial: SpatialSettings,
    pub eval: EvalSettings,
}

/// Output directory default when neither flag nor config provides one.
pub const OUT_DIR_ENV: &str = "EXPOSOME_OUT_DIR";
const OUT_DIR_DEFAULT: &str = "exposome_out";
const DEFAULT_SEED: u64 = 7;

impl PipelineConfig {
    pub fn from_json_str(doc: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(doc).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, PipelineError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Precedence: config value, then `EXPOSOME_OUT_DIR`, then a local
    /// default directory.
    pub fn resolved_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from(OUT_DIR_DEFAULT)
    }
}

// ---------------------------------------------------------------------------
// Artifact store and run report
// ---------------------------------------------------------------------------

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes artifacts under one directory and records their hashes.
pub struct ArtifactStore {
    dir: PathBuf,
    pub artifacts: BTreeMap<String, String>,
}

impl ArtifactStore {
    pub fn new(dir: PathBuf) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, artifacts: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
        let bytes = bytes.as_ref();
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "snake_case", tag = "state", content = "detail")]
pub enum StageStatus {
    Completed,
    Failed(String),
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub duration_ms: u64,
    pub outputs: Vec<String>,
}

/// What a run produced: stage outcomes, the artifact inventory with
/// SHA-256 hashes, and an echo of the effective config.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub success: bool,
    pub stages: Vec<StageRecord>,
    pub artifacts: BTreeMap<String, String>,
    pub config_echo: serde_json::Value,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn failed_stage(&self) -> Option<&StageRecord> {
        self.stages.iter().find(|s| matches!(s.status, StageStatus::Failed(_)))
    }
}

// ---------------------------------------------------------------------------
// Stage implementations (shared by `run` and the single-stage subcommands)
// ---------------------------------------------------------------------------

/// Environment plus physiology channels — the default analysis set.
pub fn default_stats_channels(table: &FusedFrameTable) -> Vec<String> {
    let mut channels = table.channels_of_kind(ChannelKind::Environment);
    channels.extend(table.channels_of_kind(ChannelKind::Physiology));
    channels
}

/// Labelled, listwise-complete rows of the named channels as a dataset.
pub fn build_row_dataset(
    table: &FusedFrameTable,
    channels: &[String],
    modality: Modality,
) -> Result<LabeledDataset, PipelineError> {
    let (rows, x) = complete_matrix(table, channels).map_err(|e| stage_err("evaluate", e))?;
    let mut keep = Vec::new();
    let mut y = Vec::new();
    for (i, &row) in rows.iter().enumerate() {
        if let Some(label) = table.labels[row] {
            keep.push(i);
            y.push(label);
        }
    }
    if keep.is_empty() {
        return Err(stage_err("evaluate", ClassifyError::NoLabeledRows));
    }
    let mut xk = Array2::zeros((keep.len(), channels.len()));
    for (out_row, &in_row) in keep.iter().enumerate() {
        xk.row_mut(out_row).assign(&x.row(in_row));
    }
    LabeledDataset::new(xk, y, channels.to_vec(), Provenance::RawFused, modality)
        .map_err(|e| stage_err("evaluate", e))
}

pub struct StatsStageOutput {
    pub channels: Vec<String>,
    pub pc1_ratio: f64,
    pub pc2_ratio: f64,
    pub regression_r2: f64,
    pub regression_rows: usize,
}

/// Correlation matrix, PCA report, regression table and Q-Q data.
pub fn run_stats_stage(
    table: &FusedFrameTable,
    channels: &[String],
    regression: &RegressionSpec,
    store: &mut ArtifactStore,
) -> Result<StatsStageOutput, PipelineError> {
    let corr = pearson_matrix(table, channels).map_err(|e| stage_err("stats", e))?;
    store.write("correlation.csv", corr.to_csv())?;

    let pca_result = pca(table, channels).map_err(|e| stage_err("stats", e))?;
    store.write(
        "pca.json",
        serde_json::to_string_pretty(&pca_result.to_json()).expect("pca json"),
    )?;

    let reg = ols_regress(table, &regression.response, &regression.predictors)
        .map_err(|e| stage_err("stats", e))?;
    store.write(format!("regression_{}.csv", regression.response).as_str(), reg.to_csv())?;

    let qq = qq_data(&reg.residuals).map_err(|e| stage_err("stats", e))?;
    store.write(format!("qq_{}.csv", regression.response).as_str(), qq_to_csv(&qq))?;

    Ok(StatsStageOutput {
        channels: channels.to_vec(),
        pc1_ratio: pca_result.explained_ratio.first().copied().unwrap_or(0.0),
        pc2_ratio: pca_result.explained_ratio.get(1).copied().unwrap_or(0.0),
        regression_r2: reg.r_squared,
        regression_rows: reg.residuals.len(),
    })
}

pub struct SpatialStageOutput {
    pub n_cells: usize,
    pub heat_cells: usize,
    pub heat_count: u64,
}

/// Voronoi tessellation (GeoJSON + SVG) and the heat grid CSV.
pub fn run_spatial_stage(
    table: &FusedFrameTable,
    settings: &SpatialSettings,
    store: &mut ArtifactStore,
) -> Result<SpatialStageOutput, PipelineError> {
    let site_value = if settings.site_value == "label" {
        SiteValue::Label
    } else {
        SiteValue::Channel(settings.site_value.clone())
    };
    let (sites, projection) =
        sites_from_table(table, &site_value).map_err(|e| stage_err("spatial", e))?;
    let planar: Vec<(f64, f64)> = sites.iter().map(|s| (s.x, s.y)).collect();
    let bbox = Rect::around_points(&planar, settings.bbox_padding_m)
        .ok_or_else(|| stage_err("spatial", "no sites"))?;
    let tess = voronoi(&sites, bbox).map_err(|e| stage_err("spatial", e))?;
    let bins: Vec<f64> = match &settings.class_bins {
        Some(b) => b.clone(),
        None => {
            if matches!(site_value, SiteValue::Label) {
                vec![1.5, 2.5, 3.5, 4.5]
            } else {
                vec![0.2, 0.4, 0.6, 0.8]
            }
        }
    };
    let tess = classify_cells(&tess, &bins).map_err(|e| stage_err("spatial", e))?;
    store.write("tessellation.geojson", tessellation_to_geojson(&tess, &projection))?;
    store.write("tessellation.svg", tessellation_to_svg(&tess))?;

    let grid = grid_heatmap(table, &settings.heatmap_channel, settings.heatmap_cell_m)
        .map_err(|e| stage_err("spatial", e))?;
    store.write("heatgrid.csv", grid.to_csv())?;

    let heat_cells = grid.counts.iter().flatten().filter(|&&c| c > 0).count();
    Ok(SpatialStageOutput {
        n_cells: tess.cells.len(),
        heat_cells,
        heat_count: grid.total_count(),
    })
}

/// Train the all-channel DBN (pollution + physiological channels) on
/// labelled rows and serialise it.
pub fn run_train_stage(
    table: &FusedFrameTable,
    settings: &DbnSettings,
    base_seed: u64,
    store: &mut ArtifactStore,
) -> Result<DbnModel, PipelineError> {
    let channels = default_stats_channels(table);
    let data = build_row_dataset(table, &channels, Modality::All)
        .map_err(|e| stage_err("train", e))?;
    let sizes = settings.sizes_for_input(data.n_features());
    let cfg = settings.train_config(derive_seed(base_seed, "dbn:all"));
    let model = train_dbn(data.x.view(), &cfg, &sizes).map_err(|e| stage_err("train", e))?;
    store.write("dbn_model.json", model.to_json())?;
    Ok(model)
}

pub struct EvaluateStageOutput {
    pub reports: Vec<EvalReport>,
}

impl EvaluateStageOutput {
    /// Mean accuracy for one (model, source, modality) cell.
    pub fn mean_accuracy(
        &self,
        model: &str,
        provenance: Provenance,
        modality: Modality,
    ) -> Option<f64> {
        self.reports
            .iter()
            .find(|r| r.model == model && r.provenance == provenance && r.modality == modality)
            .map(|r| r.mean_accuracy)
    }
}

/// Evaluate every configured classifier on statistical and DBN features,
/// then run the modality ablation with per-modality DBNs.
pub fn run_evaluate_stage(
    table: &FusedFrameTable,
    all_model: &DbnModel,
    eval: &EvalSettings,
    dbn: &DbnSettings,
    base_seed: u64,
    store: &mut ArtifactStore,
) -> Result<EvaluateStageOutput, PipelineError> {
    let stage = "evaluate";
    let cv_seed = derive_seed(base_seed, "cv");

    // Classification consumes the pollution and physiological channels;
    // movement and context channels stay out of the feature matrix.
    let channels = default_stats_channels(table);
    let raw_all = build_row_dataset(table, &channels, Modality::All)?;
    let dbn_all = extract_dataset(&raw_all, all_model, Modality::All)?;
    let stat = statistical_features(&table.select_channels(&channels), eval.window_s, eval.stride_s)
        .map_err(|e| stage_err(stage, e))?;

    let mut reports = Vec::new();
    for name in &eval.classifiers {
        let trainer = trainer_by_name(name)
            .ok_or_else(|| PipelineError::Config(format!("unknown classifier '{name}'")))?;
        reports.push(
            kfold_cv(trainer.as_ref(), &stat, eval.folds, cv_seed)
                .map_err(|e| stage_err(stage, e))?,
        );
        reports.push(
            kfold_cv(trainer.as_ref(), &dbn_all, eval.folds, cv_seed)
                .map_err(|e| stage_err(stage, e))?,
        );
    }

    // Modality ablation on per-modality DBN features.
    let pollution = table.channels_of_kind(ChannelKind::Environment);
    let physio = table.channels_of_kind(ChannelKind::Physiology);
    if !pollution.is_empty() && !physio.is_empty() {
        let trainer = trainer_by_name(&eval.ablation_classifier).ok_or_else(|| {
            PipelineError::Config(format!(
                "unknown ablation classifier '{}'",
                eval.ablation_classifier
            ))
        })?;
        let d_pollution = modality_dataset(table, &pollution, Modality::Pollution, dbn, base_seed)?;
        let d_physio = modality_dataset(table, &physio, Modality::Physiological, dbn, base_seed)?;
        let ablation = modality_ablation(
            &dbn_all,
            &d_pollution,
            &d_physio,
            trainer.as_ref(),
            eval.folds,
            cv_seed,
        )
        .map_err(|e| stage_err(stage, e))?;
        reports.extend(ablation);
    }

    let mut summary = String::from("model,feature_source,modality,mean_accuracy,std_accuracy\n");
    for report in &reports {
        summary.push_str(&report.to_summary_row());
        let name = format!("eval/{}_{}_{}.json", report.model, report.provenance, report.modality);
        store.write(&name, report.to_json())?;
    }
    store.write("eval_summary.csv", summary)?;
    Ok(EvaluateStageOutput { reports })
}

fn extract_dataset(
    raw: &LabeledDataset,
    model: &DbnModel,
    modality: Modality,
) -> Result<LabeledDataset, PipelineError> {
    let features = model
        .extract_features(raw.x.view())
        .map_err(|e| stage_err("evaluate", e))?;
    let names = (0..features.ncols()).map(|i| format!("dbn_{i}")).collect();
    LabeledDataset::new(features, raw.y.clone(), names, Provenance::DbnFeatures, modality)
        .map_err(|e| stage_err("evaluate", e))
}

fn modality_dataset(
    table: &FusedFrameTable,
    channels: &[String],
    modality: Modality,
    dbn: &DbnSettings,
    base_seed: u64,
) -> Result<LabeledDataset, PipelineError> {
    let raw = build_row_dataset(table, channels, modality)?;
    let sizes = dbn.sizes_for_input(raw.n_features());
    let cfg = dbn.train_config(derive_seed(base_seed, &format!("dbn:{modality}")));
    let model =
        train_dbn(raw.x.view(), &cfg, &sizes).map_err(|e| stage_err("evaluate", e))?;
    extract_dataset(&raw, &model, modality)
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// Channel references a config makes against a fused table; reported as a
/// config error naming the first missing channel.
fn validate_channel_refs(cfg: &PipelineConfig, table: &FusedFrameTable) -> Result<(), PipelineError> {
    let known = table.channel_names();
    let mut referenced: Vec<&String> = Vec::new();
    if let Some(chs) = &cfg.stats_channels {
        referenced.extend(chs.iter());
    }
    referenced.push(&cfg.regression.response);
    referenced.extend(cfg.regression.predictors.iter());
    referenced.push(&cfg.spatial.heatmap_channel);
    if cfg.spatial.site_value != "label" {
        referenced.push(&cfg.spatial.site_value);
    }
    for name in referenced {
        if !known.contains(name) {
            let excluded = table.excluded.contains(name);
            return Err(PipelineError::Config(format!(
                "config references channel '{name}' which is {}",
                if excluded { "excluded as constant" } else { "not in the fused table" }
            )));
        }
    }
    Ok(())
}

struct StageClock {
    start: std::time::Instant,
}

impl StageClock {
    fn start() -> Self {
        Self { start: std::time::Instant::now() }
    }

    fn ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

/// Execute the full pipeline. Stage failures are recorded and later stages
/// skipped; config errors abort immediately.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    for name in cfg.eval.classifiers.iter().chain([&cfg.eval.ablation_classifier]) {
        if trainer_by_name(name).is_none() {
            return Err(PipelineError::Config(format!("unknown classifier '{name}'")));
        }
    }

    let out_dir = cfg.resolved_out_dir();
    let mut store = ArtifactStore::new(out_dir.clone())?;
    let mut stages: Vec<StageRecord> = Vec::new();
    let seed = cfg.seed();
    let mut failure: Option<String> = None;

    macro_rules! run_stage {
        ($name:expr, $body:expr) => {{
            if failure.is_some() {
                stages.push(StageRecord {
                    name: $name.to_string(),
                    status: StageStatus::Skipped,
                    duration_ms: 0,
                    outputs: vec![],
                });
                None
            } else {
                let clock = StageClock::start();
                let before: Vec<String> = store.artifacts.keys().cloned().collect();
                match $body {
                    Ok(value) => {
                        let outputs = store
                            .artifacts
                            .keys()
                            .filter(|k| !before.contains(k))
                            .cloned()
                            .collect();
                        stages.push(StageRecord {
                            name: $name.to_string(),
                            status: StageStatus::Completed,
                            duration_ms: clock.ms(),
                            outputs,
                        });
                        Some(value)
                    }
                    Err(PipelineError::Config(msg)) => return Err(PipelineError::Config(msg)),
                    Err(err) => {
                        failure = Some(err.to_string());
                        stages.push(StageRecord {
                            name: $name.to_string(),
                            status: StageStatus::Failed(err.to_string()),
                            duration_ms: clock.ms(),
                            outputs: vec![],
                        });
                        None
                    }
                }
            }
        }};
    }

    // ingest
    let session: Option<(SessionBundle, Option<serde_json::Value>)> =
        run_stage!("ingest", ingest_stage(cfg, seed, &mut store));
    // validate
    let bundle_ref = session.as_ref().map(|(b, _)| b);
    run_stage!(
        "validate",
        match bundle_ref {
            Some(bundle) => {
                let report = validate_bundle(bundle);
                serde_json::to_string_pretty(&report)
                    .map_err(|e| stage_err("validate", e))
                    .and_then(|doc| store.write("validation.json", doc))
                    .map(|_| report)
            }
            None => Err(stage_err("validate", "no session")),
        }
    );
    // fuse
    let table = run_stage!(
        "fuse",
        match bundle_ref {
            Some(bundle) => fuse(bundle).map_err(|e| stage_err("fuse", e)).and_then(|t| {
                store.write("fused.csv", t.to_csv())?;
                store.write(
                    "fused.meta.json",
                    serde_json::to_string_pretty(&t.meta()).expect("meta json"),
                )?;
                Ok(t)
            }),
            None => Err(stage_err("fuse", "no session")),
        }
    );
    if let Some(table) = &table {
        validate_channel_refs(cfg, table)?;
    }

    // stats
    let stats_out = run_stage!(
        "stats",
        match &table {
            Some(table) => {
                let channels = cfg
                    .stats_channels
                    .clone()
                    .unwrap_or_else(|| default_stats_channels(table));
                run_stats_stage(table, &channels, &cfg.regression, &mut store)
            }
            None => Err(stage_err("stats", "no fused table")),
        }
    );
    // spatial
    let spatial_out = run_stage!(
        "spatial",
        match &table {
            Some(table) => run_spatial_stage(table, &cfg.spatial, &mut store),
            None => Err(stage_err("spatial", "no fused table")),
        }
    );
    // train
    let model = run_stage!(
        "train",
        match &table {
            Some(table) => run_train_stage(table, &cfg.dbn, seed, &mut store),
            None => Err(stage_err("train", "no fused table")),
        }
    );
    // evaluate
    let eval_out = run_stage!(
        "evaluate",
        match (&table, &model) {
            (Some(table), Some(model)) =>
                run_evaluate_stage(table, model, &cfg.eval, &cfg.dbn, seed, &mut store),
            _ => Err(stage_err("evaluate", "no trained model")),
        }
    );

    // report (always runs)
    let success = failure.is_none();
    let summary = render_summary(
        cfg,
        seed,
        &stages,
        &store.artifacts,
        table.as_ref(),
        stats_out.as_ref(),
        spatial_out.as_ref(),
        eval_out.as_ref(),
        session.as_ref().and_then(|(_, truth)| truth.as_ref()),
    );
    store.write("summary.txt", summary)?;
    stages.push(StageRecord {
        name: "report".to_string(),
        status: StageStatus::Completed,
        duration_ms: 0,
        outputs: vec!["summary.txt".into(), "run_report.json".into()],
    });

    let report = RunReport {
        seed,
        out_dir: out_dir.clone(),
        success,
        stages,
        artifacts: store.artifacts.clone(),
        config_echo: serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
    };
    std::fs::write(out_dir.join("run_report.json"), report.to_json())?;
    Ok(report)
}

fn ingest_stage(
    cfg: &PipelineConfig,
    seed: u64,
    store: &mut ArtifactStore,
) -> Result<(SessionBundle, Option<serde_json::Value>), PipelineError> {
    match &cfg.manifest {
        Some(path) => {
            let bundle = load_session(path).map_err(|e| stage_err("ingest", e))?;
            Ok((bundle, None))
        }
        None => {
            let session = generate_synthetic_session(&cfg.synth, derive_seed(seed, "synth"))
                .map_err(|e| stage_err("ingest", e))?;
            let truth = serde_json::to_value(&session.truth).expect("truth json");
            store.write(
                "planted_truth.json",
                serde_json::to_string_pretty(&truth).expect("truth json"),
            )?;
            Ok((session.bundle, Some(truth)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn render_summary(
    cfg: &PipelineConfig,
    seed: u64,
    stages: &[StageRecord],
    artifacts: &BTreeMap<String, String>,
    table: Option<&FusedFrameTable>,
    stats: Option<&StatsStageOutput>,
    spatial: Option<&SpatialStageOutput>,
    eval: Option<&EvaluateStageOutput>,
    _truth: Option<&serde_json::Value>,
) -> String {
    let mut s = String::new();
    s.push_str("exposome pipeline summary\n");
    s.push_str("=========================\n");
    s.push_str(&format!("seed: {seed}\n"));
    s.push_str(&format!(
        "input: {}\n",
        cfg.manifest
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| format!("synthetic ({} s walk)", cfg.synth.duration_s))
    ));
    s.push('\n');

    s.push_str("stages:\n");
    for st in stages {
        let status = match &st.status {
            StageStatus::Completed => "completed".to_string(),
            StageStatus::Failed(msg) => format!("FAILED: {msg}"),
            StageStatus::Skipped => "skipped".to_string(),
        };
        s.push_str(&format!("  {:<9} {status}\n", st.name));
    }
    s.push('\n');

    if let Some(t) = table {
        s.push_str(&format!(
            "fused table: {} rows x {} channels",
            t.n_rows(),
            t.channels.len()
        ));
        if !t.excluded.is_empty() {
            s.push_str(&format!("; excluded constant channels: {}", t.excluded.join(", ")));
        }
        s.push('\n');
    }
    if let Some(st) = stats {
        s.push_str(&format!(
            "pca: PC1 explains {:.4}, PC2 {:.4} of variance over {} channels\n",
            st.pc1_ratio,
            st.pc2_ratio,
            st.channels.len()
        ));
        s.push_str(&format!(
            "regression: {} ~ {} predictors, R^2 {:.4} on {} rows\n",
            cfg.regression.response,
            cfg.regression.predictors.len(),
            st.regression_r2,
            st.regression_rows
        ));
    }
    if let Some(sp) = spatial {
        s.push_str(&format!(
            "spatial: {} voronoi cells; heat grid {} populated cells / {} samples\n",
            sp.n_cells, sp.heat_cells, sp.heat_count
        ));
    }
    if let Some(ev) = eval {
        s.push('\n');
        s.push_str("evaluation (mean accuracy +/- fold sd):\n");
        for r in &ev.reports {
            s.push_str(&format!(
                "  {:<20} {:<21} {:<13} {:.4} +/- {:.4}\n",
                r.model, r.provenance.to_string(), r.modality.to_string(),
                r.mean_accuracy, r.std_accuracy
            ));
        }
    }

    s.push('\n');
    s.push_str("artifacts:\n");
    for (name, hash) in artifacts {
        s.push_str(&format!("  {name}  sha256:{hash}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parses_with_partial_fields() {
        let cfg = PipelineConfig::from_json_str(r#"{ "seed": 3, "eval": { "folds": 5 } }"#).unwrap();
        assert_eq!(cfg.seed(), 3);
        assert_eq!(cfg.eval.folds, 5);
        assert_eq!(cfg.eval.classifiers.len(), 4);
        assert_eq!(cfg.regression.response, "eda");
    }

    #[test]
    fn config_rejects_malformed_json() {
        assert!(matches!(
            PipelineConfig::from_json_str("{ nope"),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn default_seed_applies() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.seed(), 7);
    }

    #[test]
    fn sizes_for_input_prepends_width() {
        let s = DbnSettings { hidden_sizes: Some(vec![6, 3]), ..DbnSettings::default() };
        assert_eq!(s.sizes_for_input(9), vec![9, 6, 3]);
        assert_eq!(DbnSettings::default().sizes_for_input(12), vec![12, 10]);
        let rule = DbnSettings { hidden_sizes: None, ..DbnSettings::default() };
        assert_eq!(rule.sizes_for_input(14), vec![14, 10, 5]);
    }

    #[test]
    fn sha256_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

//! Declarative run configuration: a sectioned TOML file, command-line
//! overrides layered on top, and validation into the typed settings the
//! pipeline consumes. The effective configuration is echoed into the
//! output directory so every artifact records how it was produced.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use xb_core::context::FoulCounterMode;
use xb_core::dataset::{FeaturePreset, SplitMode, SplitSpec};
use xb_core::geometry::AngleMode;
use xb_core::learn::{BoostOrder, BoostParams, LogregParams, TreeParams};
use xb_core::vaep::DEFAULT_WINDOW_K;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub selection: SelectionSection,
    pub features: FeatureSection,
    pub model: ModelSection,
    pub split: SplitSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Base URL or local directory. Defaults to the public open-data
    /// repository; `XB_DATA_BASE` overrides.
    pub source: Option<String>,
    /// Download cache for remote sources; `XB_CACHE_DIR` overrides.
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionSection {
    /// Competition selectors: `"<competition_id>:<season_id>"` or a
    /// case-insensitive `"<competition name> <season name>"`.
    pub competitions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSection {
    pub preset: String,
    pub angle_mode: String,
    pub foul_counter_mode: String,
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection {
            preset: "full9".to_string(),
            angle_mode: "subtended".to_string(),
            foul_counter_mode: "filtered".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub learner: String,
    pub seed: u64,
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub order: String,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    /// Logistic regression ridge strength.
    pub l2: f64,
    /// Plain tree depth cap; 0 grows until pure.
    pub tree_depth: usize,
    pub vaep_window: usize,
    /// Rounds for the two action-value models built during `build`.
    pub vaep_trees: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let b = BoostParams::<f64>::default();
        ModelSection {
            learner: "boosted".to_string(),
            seed: b.seed,
            n_trees: b.n_trees,
            learning_rate: b.learning_rate,
            max_depth: b.max_depth,
            order: b.order.name().to_string(),
            lambda: b.lambda,
            gamma: b.gamma,
            min_child_weight: b.min_child_weight,
            subsample: b.subsample,
            l2: 1.0,
            tree_depth: 6,
            vaep_window: DEFAULT_WINDOW_K,
            vaep_trees: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
    pub mode: String,
}

impl Default for SplitSection {
    fn default() -> Self {
        let s = SplitSpec::default();
        SplitSection {
            test_fraction: s.test_fraction,
            seed: s.seed,
            stratified: s.stratified,
            mode: "per_foul".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("xb-out") }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub learner: Option<String>,
    pub seed: Option<u64>,
    pub angle_mode: Option<String>,
    pub out: Option<PathBuf>,
    pub experiment: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    Boosted,
    Logreg,
    Tree,
}

/// Typed view of a validated configuration.
#[derive(Debug, Clone)]
pub struct Effective {
    pub config: RunConfig,
    pub preset: FeaturePreset,
    pub angle_mode: AngleMode,
    pub counter_mode: FoulCounterMode,
    pub learner: LearnerKind,
    pub boost: BoostParams<f64>,
    pub logreg: LogregParams<f64>,
    pub tree: TreeParams,
    pub split: SplitSpec,
    pub vaep_window: usize,
    pub vaep_trees: usize,
    pub out_dir: PathBuf,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let default_path = Path::new("xb.toml");
    let path = match path {
        Some(p) => p,
        None if default_path.exists() => default_path,
        None => return Ok(RunConfig::default()),
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// Preset experiment bundles. Each pins the feature set and learner of
/// one headline configuration; the competition selection stays with the
/// user because it is a data concern.
fn apply_experiment(config: &mut RunConfig, name: &str) -> Result<(), CliError> {
    let preset = match name {
        "exp1" => "naive6",
        "exp2" => "full9",
        "exp3" => "event7",
        other => {
            return Err(usage(format!(
                "unknown experiment `{other}` (expected exp1, exp2, or exp3)"
            )))
        }
    };
    config.features.preset = preset.to_string();
    config.features.angle_mode = "subtended".to_string();
    config.features.foul_counter_mode = "filtered".to_string();
    config.model.learner = "boosted".to_string();
    config.model.order = "second".to_string();
    config.split = SplitSection::default();
    Ok(())
}

pub fn apply_overrides(config: &mut RunConfig, over: &Overrides) -> Result<(), CliError> {
    if let Some(exp) = &over.experiment {
        apply_experiment(config, exp)?;
    }
    if let Some(p) = &over.preset {
        config.features.preset = p.clone();
    }
    if let Some(l) = &over.learner {
        config.model.learner = l.clone();
    }
    if let Some(seed) = over.seed {
        config.model.seed = seed;
        config.split.seed = seed;
    }
    if let Some(a) = &over.angle_mode {
        config.features.angle_mode = a.clone();
    }
    if let Some(out) = &over.out {
        config.output.dir = out.clone();
    }
    Ok(())
}

pub fn validate(config: RunConfig) -> Result<Effective, CliError> {
    let preset = FeaturePreset::parse(&config.features.preset).ok_or_else(|| {
        usage(format!(
            "unknown preset `{}` (expected naive6, event7, or full9)",
            config.features.preset
        ))
    })?;
    let angle_mode = AngleMode::parse(&config.features.angle_mode).ok_or_else(|| {
        usage(format!(
            "unknown angle mode `{}` (expected subtended or bearing)",
            config.features.angle_mode
        ))
    })?;
    let counter_mode = FoulCounterMode::parse(&config.features.foul_counter_mode)
        .ok_or_else(|| {
            usage(format!(
                "unknown foul counter mode `{}` (expected filtered or all)",
                config.features.foul_counter_mode
            ))
        })?;
    let learner = match config.model.learner.as_str() {
        "boosted" => LearnerKind::Boosted,
        "logreg" => LearnerKind::Logreg,
        "tree" => LearnerKind::Tree,
        other => {
            return Err(usage(format!(
                "unknown learner `{other}` (expected boosted, logreg, or tree)"
            )))
        }
    };
    let order = BoostOrder::parse(&config.model.order).ok_or_else(|| {
        usage(format!(
            "unknown boosting order `{}` (expected first or second)",
            config.model.order
        ))
    })?;
    if !(config.split.test_fraction > 0.0 && config.split.test_fraction < 1.0) {
        return Err(usage(format!(
            "split.test_fraction must be strictly between 0 and 1, got {}",
            config.split.test_fraction
        )));
    }
    let split_mode = match config.split.mode.as_str() {
        "per_foul" => SplitMode::PerFoul,
        "per_match" => SplitMode::PerMatch,
        other => {
            return Err(usage(format!(
                "unknown split mode `{other}` (expected per_foul or per_match)"
            )))
        }
    };
    if config.model.vaep_window == 0 {
        return Err(usage("model.vaep_window must be at least 1"));
    }
    if config.model.n_trees == 0 || config.model.vaep_trees == 0 {
        return Err(usage("tree counts must be at least 1"));
    }

    let boost = BoostParams {
        n_trees: config.model.n_trees,
        learning_rate: config.model.learning_rate,
        max_depth: config.model.max_depth,
        order,
        lambda: config.model.lambda,
        gamma: config.model.gamma,
        min_child_weight: config.model.min_child_weight,
        subsample: config.model.subsample,
        seed: config.model.seed,
    };
    let logreg = LogregParams { l2: config.model.l2, ..LogregParams::default() };
    let tree = TreeParams {
        max_depth: (config.model.tree_depth > 0).then_some(config.model.tree_depth),
        ..TreeParams::default()
    };
    let split = SplitSpec {
        test_fraction: config.split.test_fraction,
        seed: config.split.seed,
        stratified: config.split.stratified,
        mode: split_mode,
    };

    Ok(Effective {
        preset,
        angle_mode,
        counter_mode,
        learner,
        boost,
        logreg,
        tree,
        split,
        vaep_window: config.model.vaep_window,
        vaep_trees: config.model.vaep_trees,
        out_dir: config.output.dir.clone(),
        config,
    })
}

/// Write the post-override configuration next to the artifacts it
/// produced.
pub fn echo_config(effective: &Effective) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&effective.out_dir).map_err(|e| {
        CliError::Runtime(anyhow::anyhow!(
            "cannot create output dir {}: {e}",
            effective.out_dir.display()
        ))
    })?;
    let path = effective.out_dir.join("run_config.toml");
    let text = toml::to_string_pretty(&effective.config)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("config serialization: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

//! Versioned model serialization. One JSON layout covers every model
//! type; sections that do not apply to a type are omitted. A sha256
//! checksum over the canonical (compact, checksum-blanked) serialization
//! guards against truncation and tampering.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scalar::Scalar;

use super::boost::BoostedModel;
use super::linear::{LogisticModel, LogregParams};
use super::tree::{Tree, TreeModel, TreeParams};
use super::LearnError;

pub const FORMAT_VERSION: u32 = 1;

/// A trained model of any supported type.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<F> {
    Tree(TreeModel<F>),
    Logistic(LogisticModel<F>),
    Boosted(BoostedModel<F>),
}

impl<F: Scalar> Model<F> {
    pub fn predict_proba(&self, row: &[F]) -> Result<F, LearnError> {
        match self {
            Model::Tree(m) => m.predict_proba(row),
            Model::Logistic(m) => m.predict_proba(row),
            Model::Boosted(m) => m.predict_proba(row),
        }
    }

    pub fn feature_schema(&self) -> &[String] {
        match self {
            Model::Tree(m) => &m.feature_schema,
            Model::Logistic(m) => &m.feature_schema,
            Model::Boosted(m) => &m.feature_schema,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Model::Tree(_) => "tree",
            Model::Logistic(_) => "logistic",
            Model::Boosted(_) => "boosted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSection<F> {
    pub weights: Vec<F>,
    pub intercept: F,
    pub means: Vec<F>,
    pub scales: Vec<F>,
}

/// On-disk layout. `vaep` is populated by the action-valuation module,
/// which nests its two boosted models under the same envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
pub struct ModelFile<F> {
    pub format_version: u32,
    pub model_type: String,
    pub feature_schema: Vec<String>,
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_score: Option<F>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<Tree<F>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSection<F>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vaep: Option<serde_json::Value>,
    pub checksum: String,
}

pub(crate) fn to_param_map<T: Serialize>(value: &T) -> BTreeMap<String, serde_json::Value> {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::Object(map)) => map.into_iter().collect(),
        _ => BTreeMap::new(),
    }
}

fn from_param_map<T: DeserializeOwned>(
    map: &BTreeMap<String, serde_json::Value>,
    path: &Path,
) -> Result<T, LearnError> {
    let object: serde_json::Map<String, serde_json::Value> =
        map.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    serde_json::from_value(serde_json::Value::Object(object)).map_err(|e| {
        LearnError::CorruptModel {
            path: path.display().to_string(),
            reason: format!("bad hyperparameters: {e}"),
        }
    })
}

pub fn model_to_file<F: Scalar>(model: &Model<F>) -> ModelFile<F> {
    let (hyperparameters, base_score, trees, linear) = match model {
        Model::Boosted(m) => (
            to_param_map(&m.params),
            Some(m.base_score),
            Some(m.trees.clone()),
            None,
        ),
        Model::Tree(m) => {
            let mut hp = to_param_map(&m.params);
            hp.insert("criterion".to_string(), serde_json::Value::from("gini"));
            (hp, None, Some(vec![m.tree.clone()]), None)
        }
        Model::Logistic(m) => (
            to_param_map(&m.params),
            None,
            None,
            Some(LinearSection {
                weights: m.weights.clone(),
                intercept: m.intercept,
                means: m.means.clone(),
                scales: m.scales.clone(),
            }),
        ),
    };
    ModelFile {
        format_version: FORMAT_VERSION,
        model_type: model.type_name().to_string(),
        feature_schema: model.feature_schema().to_vec(),
        hyperparameters,
        base_score,
        trees,
        linear,
        vaep: None,
        checksum: String::new(),
    }
}

fn section<T>(value: Option<T>, path: &Path, name: &str) -> Result<T, LearnError> {
    value.ok_or_else(|| LearnError::CorruptModel {
        path: path.display().to_string(),
        reason: format!("missing `{name}` section"),
    })
}

pub fn file_to_model<F: Scalar>(file: &ModelFile<F>, path: &Path) -> Result<Model<F>, LearnError> {
    match file.model_type.as_str() {
        "boosted" => Ok(Model::Boosted(BoostedModel {
            params: from_param_map(&file.hyperparameters, path)?,
            base_score: section(file.base_score, path, "base_score")?,
            trees: section(file.trees.clone(), path, "trees")?,
            feature_schema: file.feature_schema.clone(),
        })),
        "tree" => {
            let mut hp = file.hyperparameters.clone();
            hp.remove("criterion");
            let params: TreeParams = from_param_map(&hp, path)?;
            let trees = section(file.trees.clone(), path, "trees")?;
            let [tree]: [Tree<F>; 1] =
                trees.try_into().map_err(|_| LearnError::CorruptModel {
                    path: path.display().to_string(),
                    reason: "tree model must hold exactly one tree".to_string(),
                })?;
            Ok(Model::Tree(TreeModel {
                tree,
                feature_schema: file.feature_schema.clone(),
                params,
            }))
        }
        "logistic" => {
            let params: LogregParams<F> = from_param_map(&file.hyperparameters, path)?;
            let lin = section(file.linear.clone(), path, "linear")?;
            Ok(Model::Logistic(LogisticModel {
                weights: lin.weights,
                intercept: lin.intercept,
                means: lin.means,
                scales: lin.scales,
                params,
                feature_schema: file.feature_schema.clone(),
            }))
        }
        other => Err(LearnError::CorruptModel {
            path: path.display().to_string(),
            reason: format!("unknown model_type `{other}`"),
        }),
    }
}

/// Checksum over the compact serialization with the checksum field
/// blanked, so the stored formatting does not matter.
pub fn checksum_of<F: Scalar>(file: &ModelFile<F>) -> String {
    let mut blank = file.clone();
    blank.checksum = String::new();
    let canonical = serde_json::to_string(&blank).expect("model serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn write_model_file<F: Scalar>(mut file: ModelFile<F>, path: &Path) -> Result<(), LearnError> {
    file.checksum = checksum_of(&file);
    let mut body = serde_json::to_string_pretty(&file).expect("model serializes");
    body.push('\n');
    std::fs::write(path, body).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_model_file<F: Scalar>(path: &Path) -> Result<ModelFile<F>, LearnError> {
    let bytes = std::fs::read(path).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let corrupt = |reason: String| LearnError::CorruptModel {
        path: path.display().to_string(),
        reason,
    };
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| corrupt(format!("unparseable JSON: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version".to_string()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(LearnError::VersionMismatch {
            found: version as u32,
            expected: FORMAT_VERSION,
        });
    }
    let file: ModelFile<F> =
        serde_json::from_value(value).map_err(|e| corrupt(format!("bad structure: {e}")))?;
    let expected = checksum_of(&file);
    if file.checksum != expected {
        return Err(corrupt("checksum mismatch".to_string()));
    }
    Ok(file)
}

pub fn save_model<F: Scalar>(model: &Model<F>, path: &Path) -> Result<(), LearnError> {
    write_model_file(model_to_file(model), path)
}

pub fn load_model<F: Scalar>(path: &Path) -> Result<Model<F>, LearnError> {
    let file = read_model_file(path)?;
    file_to_model(&file, path)
}

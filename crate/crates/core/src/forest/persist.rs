//! Model files: a versioned JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ForestError, HyperParams, Label, RandomForestModel, Tree};
use crate::reference::Fingerprint;

pub const FORMAT_NAME: &str = "apiscan-forest";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u64,
    class_order: [Label; 3],
    hyperparams: HyperParams,
    reference_fingerprint: Fingerprint,
    n_features: usize,
    feature_importance: Vec<f64>,
    trees: Vec<Tree>,
}

pub fn model_to_json(model: &RandomForestModel) -> String {
    let file = ModelFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        class_order: model.class_order,
        hyperparams: model.hyperparams,
        reference_fingerprint: model.reference_fingerprint,
        n_features: model.n_features,
        feature_importance: model.feature_importance.clone(),
        trees: model.trees.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn model_from_json(text: &str) -> Result<RandomForestModel, ForestError> {
    let corrupt = |m: String| ForestError::CorruptModel(m);
    let value: Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    if value.get("format").and_then(Value::as_str) != Some(FORMAT_NAME) {
        return Err(corrupt(format!("not an {FORMAT_NAME} document")));
    }
    let version = value
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| corrupt("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(ForestError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    if file.class_order != Label::ALL {
        return Err(corrupt(format!("unexpected class order {:?}", file.class_order)));
    }
    if file.trees.len() != file.hyperparams.n_trees {
        return Err(corrupt(format!(
            "{} trees stored, hyperparameters say {}",
            file.trees.len(),
            file.hyperparams.n_trees
        )));
    }
    if file.feature_importance.len() != file.n_features {
        return Err(corrupt("feature importance length differs from dimension".into()));
    }
    for (i, t) in file.trees.iter().enumerate() {
        t.validate(file.n_features).map_err(|e| corrupt(format!("tree {i}: {e}")))?;
    }
    Ok(RandomForestModel {
        trees: file.trees,
        class_order: file.class_order,
        hyperparams: file.hyperparams,
        reference_fingerprint: file.reference_fingerprint,
        n_features: file.n_features,
        feature_importance: file.feature_importance,
    })
}

pub fn save_model(model: &RandomForestModel, path: impl AsRef<Path>) -> Result<(), ForestError> {
    std::fs::write(path, model_to_json(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RandomForestModel, ForestError> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ForestError::CorruptModel(e.to_string()))?;
    model_from_json(text)
}

//! Regressors sharing one predict contract: least squares, gradient-boosted
//! trees and a multilayer perceptron.

pub mod gbt;
pub mod linear;
pub mod loss;
pub mod mlp;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{fit_standardizer, schema_hash, standardize, Dataset, StandardizerParams, TARGET};

pub use gbt::{gbt_fit, gbt_predict, GbtConfig, GbtModel, Tree, TreeNode};
pub use linear::{fit_linear, LinearModel};
pub use loss::{loss_and_grad, LossKind};
pub use mlp::{mlp_fit, mlp_forward, mlp_train, MlpArch, MlpModel, MlpTrainConfig, Mode};

pub trait Regressor {
    fn n_features(&self) -> usize;

    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::FeatureMismatch { expected: self.n_features(), got: x.ncols() });
        }
        let x = x.as_standard_layout();
        Ok(x.rows().into_iter().map(|r| self.predict_row(r.as_slice().expect("standard layout"))).collect())
    }
}

impl Regressor for LinearModel {
    fn n_features(&self) -> usize {
        self.coeffs.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        LinearModel::predict_row(self, x)
    }
}

impl Regressor for GbtModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        GbtModel::predict_row(self, x)
    }
}

impl Regressor for MlpModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        MlpModel::predict_row(self, x)
    }
}

/// Wraps a closure as a regressor; handy for attribution tests.
pub struct FnRegressor<F> {
    pub n_features: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64> Regressor for FnRegressor<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Gbt,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Gbt => "gbt",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "linear" => Ok(ModelKind::Lr),
            "gbt" | "xgb" => Ok(ModelKind::Gbt),
            "mlp" => Ok(ModelKind::Mlp),
            _ => Err(Error::Parse(format!("unknown model `{s}`; expected lr, gbt or mlp"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Linear,
    Gbt(GbtConfig),
    Mlp { arch: MlpArch, train: MlpTrainConfig },
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => ModelConfig::Linear,
            ModelKind::Gbt => ModelConfig::Gbt(GbtConfig::default()),
            ModelKind::Mlp => ModelConfig::Mlp { arch: MlpArch::default(), train: MlpTrainConfig::default() },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Linear => ModelKind::Lr,
            ModelConfig::Gbt(_) => ModelKind::Gbt,
            ModelConfig::Mlp { .. } => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Linear(LinearModel),
    Gbt(GbtModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear(_) => ModelKind::Lr,
            Model::Gbt(_) => ModelKind::Gbt,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn as_gbt(&self) -> Option<&GbtModel> {
        match self {
            Model::Gbt(m) => Some(m),
            _ => None,
        }
    }
}

impl Regressor for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Linear(m) => m.n_features(),
            Model::Gbt(m) => m.n_features,
            Model::Mlp(m) => m.n_features,
        }
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::Linear(m) => m.predict_row(x),
            Model::Gbt(m) => m.predict_row(x),
            Model::Mlp(m) => m.predict_row(x),
        }
    }
}

/// Fits a model on matrices. The validation pair is used only by the MLP for
/// learning-rate scheduling and early stopping; `seed` overrides the MLP
/// configuration's seed and drives GBT subsampling.
pub fn fit_model(
    cfg: &ModelConfig,
    x: &Array2<f64>,
    y: &[f64],
    x_val: &Array2<f64>,
    y_val: &[f64],
    seed: u64,
) -> Result<Model> {
    Ok(match cfg {
        ModelConfig::Linear => Model::Linear(fit_linear(x, y)?),
        ModelConfig::Gbt(c) => Model::Gbt(gbt_fit(x, y, c, seed)?),
        ModelConfig::Mlp { arch, train } => {
            let train = MlpTrainConfig { seed, ..*train };
            Model::Mlp(mlp_fit(x, y, x_val, y_val, arch, &train)?)
        }
    })
}

/// A trained model together with the predictor names it expects and the
/// z-score parameters fitted on its training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_hash: String,
    pub features: Vec<String>,
    pub standardizer: StandardizerParams,
    pub model: Model,
}

impl ModelBundle {
    /// Fits the standardizer on `train` (every predictor and the target),
    /// then the model on the standardized data.
    pub fn fit(train: &Dataset, val: &Dataset, cfg: &ModelConfig, seed: u64) -> Result<Self> {
        let names = train.schema().names();
        let mut cols = names.clone();
        cols.push(TARGET);
        let standardizer = fit_standardizer(train, &cols)?;
        let tr = standardize(train, &standardizer)?;
        let va = standardize(val, &standardizer)?;
        let model = fit_model(
            cfg,
            &tr.feature_matrix(None)?,
            &tr.target_vector(None)?,
            &va.feature_matrix(None)?,
            &va.target_vector(None)?,
            seed,
        )?;
        Ok(ModelBundle {
            schema_hash: schema_hash(&names),
            features: names.iter().map(|s| s.to_string()).collect(),
            standardizer,
            model,
        })
    }

    /// Predictions in original FMC units for every row of `ds`, whose
    /// predictors must match the bundle's.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        let names = ds.schema().names();
        if schema_hash(&names) != self.schema_hash {
            return Err(Error::Schema(format!(
                "dataset predictors [{}] differ from the model's [{}]",
                names.join(","),
                self.features.join(",")
            )));
        }
        let mut x = ds.feature_matrix(None)?;
        self.standardizer.transform_matrix(&mut x, &names)?;
        let z = self.model.predict(&x)?;
        let target = self.standardizer.require(TARGET)?;
        Ok(z.into_iter().map(|v| target.inverse(v)).collect())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

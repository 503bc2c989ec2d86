use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amp::{AmpOpts, Model};
use crate::channels::{Channel, Prior};
use crate::ensembles::filter::validate_profile;
use crate::ensembles::{sample_dense_gaussian, sample_mcc, sample_mcc_structured, LinearOperator, MatvecPath};
use crate::error::{Error, Result};
use crate::se::SeOpts;

/// Shape and ensemble of one weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSpec {
    Mcc {
        #[serde(rename = "D")]
        d: usize,
        #[serde(rename = "P")]
        p: usize,
        q: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance_profile: Option<Vec<f64>>,
    },
    Dense {
        rows: usize,
        cols: usize,
        /// Entry variance; defaults to `1 / cols`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance: Option<f64>,
    },
}

impl MatrixSpec {
    pub fn rows(&self) -> usize {
        match *self {
            MatrixSpec::Mcc { d, q, .. } => d * q,
            MatrixSpec::Dense { rows, .. } => rows,
        }
    }

    pub fn cols(&self) -> usize {
        match *self {
            MatrixSpec::Mcc { p, q, .. } => p * q,
            MatrixSpec::Dense { cols, .. } => cols,
        }
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.rows() as f64 / self.cols() as f64
    }

    fn validate(&self, layer: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("layers[{layer}].matrix: {msg}")));
        match self {
            MatrixSpec::Mcc { d, p, q, k, variance_profile } => {
                if *d == 0 || *p == 0 || *q == 0 || *k == 0 {
                    return bad("D, P, q, k must all be positive".into());
                }
                if k > q {
                    return bad(format!("filter length k = {k} exceeds q = {q}"));
                }
                if let Some(profile) = variance_profile {
                    validate_profile(*k, profile).map_err(|e| Error::Config(format!("layers[{layer}].matrix: {e}")))?;
                }
            }
            MatrixSpec::Dense { rows, cols, variance } => {
                if *rows == 0 || *cols == 0 {
                    return bad("rows and cols must be positive".into());
                }
                if let Some(v) = variance {
                    if !(*v > 0.0) || !v.is_finite() {
                        return bad(format!("variance must be positive, got {v}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Same spec with the output dimension set from the aspect ratio `beta`.
    pub fn with_beta(&self, beta: f64) -> Result<MatrixSpec> {
        let mut out = self.clone();
        match &mut out {
            MatrixSpec::Mcc { d, p, .. } => *d = (beta * *p as f64).round() as usize,
            MatrixSpec::Dense { rows, cols, .. } => *rows = (beta * *cols as f64).round() as usize,
        }
        if out.rows() == 0 {
            return Err(Error::Config(format!("beta = {beta} rounds to an empty layer")));
        }
        Ok(out)
    }

    /// A dense Gaussian matrix of the same shape and row power.
    pub fn dense_counterpart(&self) -> MatrixSpec {
        match *self {
            MatrixSpec::Mcc { .. } => {
                MatrixSpec::Dense { rows: self.rows(), cols: self.cols(), variance: Some(1.0 / self.cols() as f64) }
            }
            MatrixSpec::Dense { .. } => self.clone(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, path: MatvecPath, rng: &mut R) -> Result<LinearOperator> {
        Ok(match self {
            MatrixSpec::Mcc { d, p, q, k, variance_profile: None } => {
                LinearOperator::mcc(sample_mcc(*d, *p, *q, *k, rng)?, path)
            }
            MatrixSpec::Mcc { d, p, q, variance_profile: Some(profile), .. } => {
                LinearOperator::mcc(sample_mcc_structured(*d, *p, *q, profile, rng)?, path)
            }
            MatrixSpec::Dense { rows, cols, variance } => {
                let var = variance.unwrap_or(1.0 / *cols as f64);
                LinearOperator::dense(sample_dense_gaussian(*rows, *cols, var, rng)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub matrix: MatrixSpec,
    /// Channel after this layer's matrix; the first layer uses
    /// `output_channel` instead and must leave this unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<Channel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Aspect ratios of the first (output) layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta_values: Vec<f64>,
    /// Gauss-Bernoulli densities overriding the prior's `rho`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho_values: Vec<f64>,
}

fn default_trials() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub layers: Vec<LayerConfig>,
    pub prior: Prior,
    pub output_channel: Channel,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub amp: AmpOpts,
    #[serde(default)]
    pub se: SeOpts,
    /// Also run every trial on dense Gaussian matrices of the same shapes.
    #[serde(default)]
    pub paired_dense: bool,
    #[serde(default)]
    pub matvec_path: MatvecPath,
}

/// One `(β, ρ)` combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |msg: String| Err(Error::Config(msg));
        if self.layers.is_empty() {
            return cfg_err("at least one layer is required".into());
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer.matrix.validate(i)?;
            match (i, &layer.channel) {
                (0, Some(_)) => {
                    return cfg_err("layers[0].channel must be omitted; the first layer uses output_channel".into())
                }
                (i, None) if i > 0 => return cfg_err(format!("layers[{i}].channel is required")),
                (_, Some(ch)) => ch.validate().map_err(|e| Error::Config(format!("layers[{i}].channel: {e}")))?,
                _ => {}
            }
            if i > 0 && self.layers[i - 1].matrix.cols() != layer.matrix.rows() {
                return cfg_err(format!(
                    "layers[{}] has {} columns but layers[{i}] has {} rows",
                    i - 1,
                    self.layers[i - 1].matrix.cols(),
                    layer.matrix.rows()
                ));
            }
        }
        self.prior.validate().map_err(|e| Error::Config(format!("prior: {e}")))?;
        self.output_channel.validate().map_err(|e| Error::Config(format!("output_channel: {e}")))?;
        if self.trials < 1 {
            return cfg_err("trials must be at least 1".into());
        }
        if let Some(b) = self.sweep.beta_values.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return cfg_err(format!("sweep.beta_values must be positive, got {b}"));
        }
        for &b in &self.sweep.beta_values {
            self.layers[0].matrix.with_beta(b)?;
        }
        if !self.sweep.rho_values.is_empty() {
            if !matches!(self.prior, Prior::GaussBernoulli { .. }) {
                return cfg_err("sweep.rho_values requires a gauss_bernoulli prior".into());
            }
            if let Some(r) = self.sweep.rho_values.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return cfg_err(format!("sweep.rho_values must lie in [0, 1], got {r}"));
            }
        }
        self.amp.validate().map_err(|e| Error::Config(format!("amp: {e}")))?;
        self.se.validate().map_err(|e| Error::Config(format!("se: {e}")))?;
        Ok(())
    }

    /// Sweep points, β-major.
    pub fn points(&self) -> Vec<SweepPoint> {
        let betas: Vec<Option<f64>> = if self.sweep.beta_values.is_empty() {
            vec![None]
        } else {
            self.sweep.beta_values.iter().copied().map(Some).collect()
        };
        let rhos: Vec<Option<f64>> = if self.sweep.rho_values.is_empty() {
            vec![None]
        } else {
            self.sweep.rho_values.iter().copied().map(Some).collect()
        };
        let mut out = Vec::with_capacity(betas.len() * rhos.len());
        for &beta in &betas {
            for &rho in &rhos {
                out.push(SweepPoint { index: out.len(), beta, rho });
            }
        }
        out
    }

    /// Matrix specs of all layers at a sweep point.
    pub fn matrices_at(&self, point: &SweepPoint) -> Result<Vec<MatrixSpec>> {
        let mut specs: Vec<MatrixSpec> = self.layers.iter().map(|l| l.matrix.clone()).collect();
        if let Some(beta) = point.beta {
            specs[0] = specs[0].with_beta(beta)?;
        }
        Ok(specs)
    }

    pub fn model_at(&self, point: &SweepPoint) -> Model {
        let prior = match (self.prior, point.rho) {
            (Prior::GaussBernoulli { .. }, Some(rho)) => Prior::GaussBernoulli { rho },
            (p, _) => p,
        };
        Model {
            output_channel: self.output_channel,
            hidden_channels: self.layers[1..].iter().map(|l| l.channel.expect("validated")).collect(),
            prior,
        }
    }

    /// Value reported in the `beta` column: the swept value, or the first
    /// layer's aspect ratio.
    pub fn beta_label(&self, point: &SweepPoint) -> f64 {
        point.beta.unwrap_or_else(|| self.layers[0].matrix.aspect_ratio())
    }

    /// Value reported in the `rho` column (NaN for non-sparse priors).
    pub fn rho_label(&self, point: &SweepPoint) -> f64 {
        match self.model_at(point).prior {
            Prior::GaussBernoulli { rho } => rho,
            Prior::Gaussian { .. } => f64::NAN,
        }
    }
}

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::normal::SQRT_2_OVER_PI;
use crate::math::{SkewNormalDensity, SymMatrix};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Component family of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Multivariate normal: (mean, covariance).
    Mn,
    /// Restricted multivariate skew-normal: (location, scale, skewness).
    Msn,
}

/// One mixture component. For [`Family::Mn`] `location` is the mean, `scale`
/// the covariance and `skew` is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub location: DVector<f64>,
    pub scale: SymMatrix,
    pub skew: DVector<f64>,
}

impl Component {
    pub fn normal(mean: DVector<f64>, cov: SymMatrix) -> Self {
        let p = mean.len();
        Self {
            location: mean,
            scale: cov,
            skew: DVector::zeros(p),
        }
    }

    pub fn skew_normal(xi: DVector<f64>, sigma: SymMatrix, delta: DVector<f64>) -> Self {
        Self {
            location: xi,
            scale: sigma,
            skew: delta,
        }
    }

    /// Mean of the component distribution: `xi + sqrt(2/pi) delta`.
    pub fn mean(&self) -> DVector<f64> {
        &self.location + &self.skew * SQRT_2_OVER_PI
    }

    /// Covariance of the component distribution: `Sigma + (1 - 2/pi) delta delta'`.
    pub fn covariance(&self) -> SymMatrix {
        let c = 1.0 - SQRT_2_OVER_PI * SQRT_2_OVER_PI;
        self.scale.plus_outer(&(&self.skew * c.sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Observed log-likelihood of every model visited, starting with the
    /// initial one.
    pub trace: Vec<f64>,
}

/// A K-component mixture fitted (or to be fitted) by EM.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    family: Family,
    weights: Vec<f64>,
    components: Vec<Component>,
    diagnostics: Option<FitDiagnostics>,
}

impl MixtureModel {
    /// Validates the simplex, dimensions, positive-definiteness and, for the
    /// skew family, `1 - delta' Omega^-1 delta > 0`.
    pub fn new(family: Family, weights: Vec<f64>, components: Vec<Component>) -> Result<Self> {
        let model = Self {
            family,
            weights,
            components,
            diagnostics: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn new_unchecked(
        family: Family,
        weights: Vec<f64>,
        components: Vec<Component>,
    ) -> Self {
        Self {
            family,
            weights,
            components,
            diagnostics: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.components.len();
        if k == 0 || self.weights.len() != k {
            return Err(Error::Dimension(format!(
                "{} weights for {} components",
                self.weights.len(),
                k
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("mixture weights must be non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("mixture weights sum to {total}")));
        }
        let p = self.dim();
        for (idx, c) in self.components.iter().enumerate() {
            if c.location.len() != p || c.scale.dim() != p || c.skew.len() != p {
                return Err(Error::Dimension(format!("component {idx} has inconsistent dimension")));
            }
            if self.family == Family::Mn && c.skew.iter().any(|d| *d != 0.0) {
                return Err(Error::Domain(format!("normal component {idx} has non-zero skew")));
            }
            c.scale
                .factor()
                .map_err(|_| Error::NotPositiveDefinite { component: Some(idx) })?;
            if self.family == Family::Msn {
                SkewNormalDensity::new(c.location.clone(), &c.scale, &c.skew).map_err(|e| match e {
                    Error::SkewInfeasible { value, .. } => Error::SkewInfeasible {
                        value,
                        row: None,
                        component: Some(idx),
                    },
                    Error::NotPositiveDefinite { .. } => {
                        Error::NotPositiveDefinite { component: Some(idx) }
                    }
                    other => other,
                })?;
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].location.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &Component {
        &self.components[k]
    }

    pub fn diagnostics(&self) -> Option<&FitDiagnostics> {
        self.diagnostics.as_ref()
    }

    pub(crate) fn set_diagnostics(&mut self, d: FitDiagnostics) {
        self.diagnostics = Some(d);
    }

    /// Reinterprets a normal mixture as a skew-normal one with zero skewness.
    pub fn as_skew_normal(&self) -> Self {
        Self {
            family: Family::Msn,
            ..self.clone()
        }
    }

    /// Returns a copy with components reordered: `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            family: self.family,
            weights: order.iter().map(|&k| self.weights[k]).collect(),
            components: order.iter().map(|&k| self.components[k].clone()).collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.into_model()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    family: Family,
    k: usize,
    p: usize,
    weights: Vec<f64>,
    components: Vec<ComponentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<FitDiagnostics>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentFile {
    location: Vec<f64>,
    scale: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skew: Option<Vec<f64>>,
}

impl From<&MixtureModel> for ModelFile {
    fn from(m: &MixtureModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            family: m.family,
            k: m.k(),
            p: m.dim(),
            weights: m.weights.clone(),
            components: m
                .components
                .iter()
                .map(|c| ComponentFile {
                    location: c.location.iter().copied().collect(),
                    scale: c.scale.to_rows(),
                    skew: (m.family == Family::Msn).then(|| c.skew.iter().copied().collect()),
                })
                .collect(),
            diagnostics: m.diagnostics.clone(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<MixtureModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.components.len() != self.k {
            return Err(Error::Schema(format!(
                "k = {} but {} components listed",
                self.k,
                self.components.len()
            )));
        }
        let p = self.p;
        let components = self
            .components
            .into_iter()
            .map(|c| {
                if c.location.len() != p {
                    return Err(Error::Schema("component location has wrong length".into()));
                }
                let location = DVector::from_vec(c.location);
                let scale = SymMatrix::from_rows(&c.scale)?;
                let skew = match (self.family, c.skew) {
                    (Family::Mn, None) => DVector::zeros(p),
                    (Family::Msn, Some(d)) if d.len() == p => DVector::from_vec(d),
                    _ => return Err(Error::Schema("skew vector inconsistent with family".into())),
                };
                Ok(Component {
                    location,
                    scale,
                    skew,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = MixtureModel::new(self.family, self.weights, components)?;
        model.diagnostics = self.diagnostics;
        Ok(model)
    }
}

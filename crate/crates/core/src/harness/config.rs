use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::Projection;
use crate::error::{LabError, Result};
use crate::model::{DiffusionMatrix, ForceKind, ModelSpec, Perturbation, TrigPolynomial, TrigTerm};
use crate::sampling::SamplerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForceConfig {
    /// `U = amplitude · cos(2πx)` in one dimension, `F = −U′`.
    Cosine { amplitude: f64 },
    /// `F = −U′ + eta` with `U = amplitude · cos(2πx)`.
    TiltedCosine { amplitude: f64, eta: f64 },
    Gradient { dim: usize, potential: Vec<TrigTerm> },
    Constant { eta: Vec<f64> },
    Mixed {
        dim: usize,
        #[serde(default)]
        potential: Vec<TrigTerm>,
        #[serde(default)]
        eta: Option<Vec<f64>>,
        #[serde(default)]
        tau: f64,
        #[serde(default)]
        perturbation: Option<PerturbationConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationConfig {
    /// `J ∇V` with `J` given row by row.
    Rotational { j: Vec<Vec<f64>>, potential: Vec<TrigTerm> },
    Constant { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub force: ForceConfig,
    /// Rows of `Σ`; identity when absent.
    #[serde(default)]
    pub sigma: Option<Vec<Vec<f64>>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { force: ForceConfig::TiltedCosine { amplitude: 1.0, eta: 1.0 }, sigma: None }
    }
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        match &self.force {
            ForceConfig::Cosine { .. } | ForceConfig::TiltedCosine { .. } => 1,
            ForceConfig::Gradient { dim, .. } | ForceConfig::Mixed { dim, .. } => *dim,
            ForceConfig::Constant { eta } => eta.len(),
        }
    }

    /// Builds the model at damping `gamma`.
    pub fn build(&self, gamma: f64) -> Result<ModelSpec> {
        let d = self.dim();
        let sigma = match &self.sigma {
            None => DiffusionMatrix::identity(d),
            Some(rows) => DiffusionMatrix::from_rows(rows)?,
        };
        let kind = match &self.force {
            ForceConfig::Cosine { amplitude } => ForceKind::Gradient { potential: TrigPolynomial::cosine(1, 0, *amplitude) },
            ForceConfig::TiltedCosine { amplitude, eta } => ForceKind::Mixed {
                potential: TrigPolynomial::cosine(1, 0, *amplitude),
                eta: vec![*eta],
                tau: 0.0,
                perturbation: Perturbation::default_for(1, TrigPolynomial::zero(1)),
            },
            ForceConfig::Gradient { dim, potential } => {
                ForceKind::Gradient { potential: TrigPolynomial::new(*dim, potential.clone())? }
            }
            ForceConfig::Constant { eta } => ForceKind::Constant { eta: eta.clone() },
            ForceConfig::Mixed { dim, potential, eta, tau, perturbation } => {
                let v = TrigPolynomial::new(*dim, potential.clone())?;
                let perturbation = match perturbation {
                    None => Perturbation::default_for(*dim, TrigPolynomial::zero(*dim)),
                    Some(PerturbationConfig::Constant { value }) => Perturbation::Constant(value.clone()),
                    Some(PerturbationConfig::Rotational { j, potential }) => {
                        if j.len() != *dim || j.iter().any(|r| r.len() != *dim) {
                            return Err(LabError::Config("rotation matrix must be dim × dim".into()));
                        }
                        Perturbation::Rotational {
                            j: j.iter().flatten().copied().collect(),
                            potential: TrigPolynomial::new(*dim, potential.clone())?,
                        }
                    }
                };
                ForceKind::Mixed { potential: v, eta: eta.clone().unwrap_or_else(|| vec![0.0; *dim]), tau: *tau, perturbation }
            }
        };
        ModelSpec::new(kind, sigma, gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OtMethod {
    /// Assignment solver up to its budget, Sinkhorn beyond.
    #[default]
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default = "one")]
    pub t: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub projection: Projection,
}

fn one() -> f64 {
    1.0
}
fn default_replicas() -> usize {
    2000
}

impl Default for CouplingSection {
    fn default() -> Self {
        CouplingSection { t: 1.0, replicas: default_replicas(), delta: None, projection: Projection::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Also write every sample point to `samples_gamma_<γ>.csv`.
    #[serde(default)]
    pub persist_samples: bool,
}

/// Full experiment description. Every subcommand reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    /// Sample size per empirical measure.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Independent repetitions per γ in rate sweeps.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub ot_method: OtMethod,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

fn default_seed() -> u64 {
    1
}
fn default_gammas() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
}
fn default_n() -> usize {
    4096
}
fn default_repetitions() -> usize {
    8
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: default_seed(),
            model: ModelConfig::default(),
            gammas: default_gammas(),
            n: default_n(),
            repetitions: default_repetitions(),
            ot_method: OtMethod::default(),
            sampler: SamplerConfig::default(),
            coupling: CouplingSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(LabError::Config("gammas must be a nonempty list of positive numbers".into()));
        }
        if self.n == 0 || self.repetitions == 0 {
            return Err(LabError::Config("n and repetitions must be positive".into()));
        }
        self.model.build(self.gammas[0])?;
        Ok(())
    }

    /// Rate studies need at least three γ values, all ≥ 2.
    pub fn validate_rate_study(&self) -> Result<()> {
        if self.gammas.len() < 3 {
            return Err(LabError::Config("a rate fit needs at least three γ values".into()));
        }
        if self.gammas.iter().any(|&g| g < 2.0) {
            return Err(LabError::Config("rate studies use γ ≥ 2".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the resolved configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let text = r#"
            seed = 7
            gammas = [2.0, 4.0, 8.0]
            n = 512
            [model.force]
            kind = "tilted-cosine"
            amplitude = 1.0
            eta = 1.0
            [sampler]
            chains = 4
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.sampler.chains, 4);
        assert_eq!(cfg.repetitions, 8);
        let m = cfg.model.build(2.0).unwrap();
        assert!((m.force().eval(&[0.25])[0] - (std::f64::consts::TAU + 1.0)).abs() < 1e-12);

        assert!(ExperimentConfig::from_toml("sede = 7").is_err());
        assert!(ExperimentConfig::from_toml("[sampler]\nchain = 4").is_err());
        assert!(ExperimentConfig::from_toml("[model.force]\nkind = \"cosine\"\namplitude = 1.0\nextra = 2").is_err());
        assert!(ExperimentConfig::from_toml("gammas = []").is_err());
    }

    #[test]
    fn explicit_models() {
        let text = r#"
            [model]
            sigma = [[1.0, 0.0], [0.0, 2.0]]
            [model.force]
            kind = "mixed"
            dim = 2
            tau = 0.5
            eta = [1.0, 0.0]
            potential = [{ k = [1, 0], cos = 1.0 }]
            [model.force.perturbation]
            kind = "rotational"
            j = [[0.0, 1.0], [-1.0, 0.0]]
            potential = [{ k = [0, 1], sin = 0.3 }]
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.model.build(2.0).unwrap().dim(), 2);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}

//! Scenario files: one JSON document per run. Every block has defaults, so
//! `{}` is a valid scenario; unknown keys are rejected.

use std::path::Path;

use nptruth_core::belief::ProfileKind;
use nptruth_core::bias::Gate;
use nptruth_core::bias::DecisionGate;
use nptruth_core::engine::{RocFunction, TestProblem};
use nptruth_core::los::{CostMatrix, SampleSizeMethod};
use nptruth_core::models::{FamilyKind, OneSampleNormal, TeaTastingBinomial, TeaTastingFisher, TwoSampleT};
use nptruth_core::sequential::{SequentialConfig, StudyDesign};
use nptruth_core::Hypothesis;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Normal {
        #[serde(default)]
        mu0: f64,
        mu1: f64,
        #[serde(default = "one")]
        sigma: f64,
        n: usize,
    },
    TwoSample {
        #[serde(default)]
        mu0: f64,
        mu1: f64,
        sigma: f64,
        n: usize,
    },
    TeaBinomial {
        theta1: f64,
    },
    TeaFisher {
        theta1: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::TwoSample {
            mu0: 0.0,
            mu1: 5.0,
            sigma: 5.0,
            n: 5,
        }
    }
}

/// A concrete model built from a [`ModelSpec`].
pub enum Model {
    Normal(OneSampleNormal),
    TwoSample(TwoSampleT),
    TeaBinomial(TeaTastingBinomial),
    TeaFisher(TeaTastingFisher),
}

impl ModelSpec {
    pub fn build(&self) -> nptruth_core::Result<Model> {
        Ok(match *self {
            ModelSpec::Normal { mu0, mu1, sigma, n } => Model::Normal(OneSampleNormal::new(mu0, mu1, sigma, n)?),
            ModelSpec::TwoSample { mu0, mu1, sigma, n } => Model::TwoSample(TwoSampleT::new(mu0, mu1, sigma, n)?),
            ModelSpec::TeaBinomial { theta1 } => Model::TeaBinomial(TeaTastingBinomial::new(theta1)?),
            ModelSpec::TeaFisher { theta1 } => Model::TeaFisher(TeaTastingFisher::new(theta1)?),
        })
    }
}

impl Model {
    pub fn roc(&self) -> &dyn RocFunction {
        match self {
            Model::Normal(m) => m,
            Model::TwoSample(m) => m,
            Model::TeaBinomial(m) => m,
            Model::TeaFisher(m) => m,
        }
    }

    pub fn design(&self) -> &dyn StudyDesign {
        match self {
            Model::Normal(m) => m,
            Model::TwoSample(m) => m,
            Model::TeaBinomial(m) => m,
            Model::TeaFisher(m) => m,
        }
    }

    pub fn problem(&self) -> &dyn TestProblem {
        match self {
            Model::Normal(m) => m,
            Model::TwoSample(m) => m,
            Model::TeaBinomial(m) => m,
            Model::TeaFisher(m) => m,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Model::Normal(m) => m.n,
            Model::TwoSample(m) => m.n(),
            Model::TeaBinomial(_) | Model::TeaFisher(_) => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RocBlock {
    /// Interior grid points; the endpoints 0 and 1 are added.
    pub grid_points: usize,
}

impl Default for RocBlock {
    fn default() -> Self {
        Self { grid_points: 999 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeaBlock {
    /// 1 for the binomial version, 2 for the choose-four version.
    pub version: u8,
    pub count: u64,
    pub u: f64,
    pub alpha: f64,
    pub theta_grid: Vec<f64>,
}

impl Default for TeaBlock {
    fn default() -> Self {
        Self {
            version: 1,
            count: 6,
            u: 0.973,
            alpha: 0.05,
            theta_grid: (51..=99).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicateBlock {
    pub scientists: usize,
    /// Mean of the Poisson part of `n_m = Poisson(lambda) + 5`. Required.
    pub lambda: Option<f64>,
    pub alpha: f64,
    pub kappa0_init: f64,
    pub meta_runs: usize,
}

impl Default for ReplicateBlock {
    fn default() -> Self {
        Self {
            scientists: 100,
            lambda: None,
            alpha: 0.05,
            kappa0_init: 0.5,
            meta_runs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequentialBlock {
    pub config: SequentialConfig,
    pub runs: usize,
}

impl Default for SequentialBlock {
    fn default() -> Self {
        Self {
            config: SequentialConfig::default(),
            runs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasBlock {
    pub gate: Gate,
}

impl Default for BiasBlock {
    fn default() -> Self {
        Self {
            gate: Gate::Decision(DecisionGate { eta0: 0.0, eta1: 1.0 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LosBlock {
    pub costs: CostMatrix,
    pub kappa0: f64,
    pub grid_points: usize,
}

impl Default for LosBlock {
    fn default() -> Self {
        Self {
            costs: CostMatrix {
                c00: 0.0,
                c01: 1.0,
                c10: 1.0,
                c11: 0.0,
            },
            kappa0: 0.5,
            grid_points: 99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSizeBlock {
    pub b: f64,
    pub mu_diff: f64,
    pub sigma: f64,
    pub family: FamilyKind,
    pub method: SampleSizeMethod,
    pub n_max: usize,
}

impl Default for SampleSizeBlock {
    fn default() -> Self {
        Self {
            b: 6.0,
            mu_diff: 1.0,
            sigma: 1.0,
            family: FamilyKind::Normal,
            method: SampleSizeMethod::Discrimination,
            n_max: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileBlock {
    pub family: FamilyKind,
    pub n: usize,
    pub kind: ProfileKind,
    pub effect_range: (f64, f64),
    pub logit_range: (f64, f64),
    pub resolution: (usize, usize),
}

impl Default for ProfileBlock {
    fn default() -> Self {
        Self {
            family: FamilyKind::Normal,
            n: 1,
            kind: ProfileKind::PValue,
            effect_range: (0.1, 3.0),
            logit_range: (-8.0, 0.0),
            resolution: (59, 81),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    pub truth: Hypothesis,
    pub seed: u64,
    pub roc: RocBlock,
    pub tea: TeaBlock,
    pub replicate: ReplicateBlock,
    pub sequential: SequentialBlock,
    pub bias: BiasBlock,
    pub los: LosBlock,
    pub sample_size: SampleSizeBlock,
    pub profile: ProfileBlock,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            truth: Hypothesis::H0,
            seed: 0,
            roc: RocBlock::default(),
            tea: TeaBlock::default(),
            replicate: ReplicateBlock::default(),
            sequential: SequentialBlock::default(),
            bias: BiasBlock::default(),
            los: LosBlock::default(),
            sample_size: SampleSizeBlock::default(),
            profile: ProfileBlock::default(),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_scenario() {
        assert_eq!(Scenario::from_json("{}").unwrap(), Scenario::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_json(r#"{"sede": 3}"#).is_err());
        assert!(Scenario::from_json(r#"{"los": {"costs": {"c00": 0, "c01": 1, "c10": 1, "c11": 0, "c22": 1}}}"#).is_err());
        assert!(Scenario::from_json(r#"{"model": {"family": "normal", "mu1": 1, "n": 2, "rho": 1}}"#).is_err());
    }

    #[test]
    fn nested_blocks_parse() {
        let s = Scenario::from_json(
            r#"{
                "model": {"family": "normal", "mu1": 0.4, "n": 1},
                "truth": "H1",
                "sequential": {"config": {"channel": {"fixed": "p"}, "max_studies": 2000}, "runs": 3},
                "bias": {"gate": {"type": "p_value", "kind": "step", "cutoff": 0.3}}
            }"#,
        )
        .unwrap();
        assert_eq!(s.truth, Hypothesis::H1);
        assert_eq!(s.sequential.runs, 3);
        assert_eq!(s.sequential.config.max_studies, 2000);
        assert!(matches!(s.model, ModelSpec::Normal { sigma, .. } if sigma == 1.0));
    }
}

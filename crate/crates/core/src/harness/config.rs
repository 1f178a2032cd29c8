use serde::{Deserialize, Serialize};

use crate::density::{ConvexBodyUniform, Density, Gaussian1D, Laplace1D, PiecewiseLogLinear1D};
use crate::error::{Error, Result};
use crate::families::{
    build_assouad_1d, build_assouad_ballcap, build_entropy_family_1d, build_entropy_family_d, default_eta,
    FamilyVariant,
};

/// Named truth generator with its parameters.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TruthSpec {
    Normal {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sd: f64,
    },
    Laplace {
        #[serde(default)]
        loc: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Uniform {
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    UniformBall {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    /// A member of one of the perturbation families. Assouad families are sized by `n`,
    /// entropy families by `eps`.
    FamilyMember {
        variant: FamilyVariant,
        #[serde(default = "one_usize")]
        dim: usize,
        #[serde(default)]
        n: Option<u64>,
        #[serde(default)]
        eps: Option<f64>,
        #[serde(default)]
        seed: u64,
        alpha: Vec<bool>,
    },
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl TruthSpec {
    pub fn dim(&self) -> usize {
        match self {
            TruthSpec::Normal { .. } | TruthSpec::Laplace { .. } | TruthSpec::Uniform { .. } => 1,
            TruthSpec::UniformBall { dim, .. } | TruthSpec::FamilyMember { dim, .. } => *dim,
        }
    }

    /// Short human-readable name, used to label supremum-risk rows.
    pub fn label(&self) -> String {
        match self {
            TruthSpec::Normal { mean, sd } => format!("normal({mean},{sd})"),
            TruthSpec::Laplace { loc, scale } => format!("laplace({loc},{scale})"),
            TruthSpec::Uniform { a, b } => format!("uniform({a},{b})"),
            TruthSpec::UniformBall { dim, radius } => format!("ball(d={dim},r={radius})"),
            TruthSpec::FamilyMember { variant, dim, .. } => {
                let v = serde_json::to_value(variant).ok().and_then(|v| v.as_str().map(String::from));
                format!("{}(d={dim})", v.unwrap_or_default())
            }
        }
    }

    pub fn build(&self) -> Result<Density> {
        match self {
            TruthSpec::Normal { mean, sd } => Ok(Gaussian1D::new(*mean, *sd)?.into()),
            TruthSpec::Laplace { loc, scale } => Ok(Laplace1D::new(*loc, *scale)?.into()),
            TruthSpec::Uniform { a, b } => Ok(PiecewiseLogLinear1D::uniform(*a, *b)?.into()),
            TruthSpec::UniformBall { dim, radius } => {
                if *dim == 1 {
                    return Ok(PiecewiseLogLinear1D::uniform(-radius, *radius)?.into());
                }
                Ok(ConvexBodyUniform::ball(*dim, *radius)?.into())
            }
            TruthSpec::FamilyMember { variant, dim, n, eps, seed, alpha } => {
                let need_n = || n.ok_or_else(|| Error::param("Assouad family members need n"));
                let need_eps = || eps.ok_or_else(|| Error::param("entropy family members need eps"));
                let family = match variant {
                    FamilyVariant::Assouad1d => build_assouad_1d(need_n()?)?,
                    FamilyVariant::AssouadBallcap => build_assouad_ballcap(*dim, need_n()?, *seed)?,
                    FamilyVariant::Entropy1d => build_entropy_family_1d(need_eps()?, default_eta(1))?,
                    FamilyVariant::EntropyRescaledD => {
                        build_entropy_family_d(*dim, need_eps()?, default_eta(*dim), *seed)?
                    }
                };
                if family.dim != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, found: family.dim });
                }
                family.member(alpha)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[serde(rename = "mle-1d")]
    Mle1d,
    #[serde(rename = "mle-2d-tent")]
    Mle2dTent,
}

impl Estimator {
    pub fn dim(self) -> usize {
        match self {
            Estimator::Mle1d => 1,
            Estimator::Mle2dTent => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    HellingerSq,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RiskExperimentConfig {
    pub truth: TruthSpec,
    pub dims: usize,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub estimator: Estimator,
    #[serde(default)]
    pub metric: Metric,
    /// Iteration cap for the planar tent solver.
    #[serde(default)]
    pub tent_max_iterations: Option<usize>,
}

impl RiskExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::param("dims must be positive"));
        }
        if self.truth.dim() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, found: self.truth.dim() });
        }
        if self.estimator.dim() != self.dims {
            return Err(Error::param(format!("estimator {:?} does not apply in dimension {}", self.estimator, self.dims)));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::param("sample_sizes is empty"));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("sample_sizes must be strictly increasing"));
        }
        if self.sample_sizes[0] < self.dims + 1 {
            return Err(Error::param(format!("every sample size must be at least {}", self.dims + 1)));
        }
        if self.replications < 2 {
            return Err(Error::param("replications must be at least 2"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RiskExperimentConfig {
        RiskExperimentConfig {
            truth: TruthSpec::Normal { mean: 0.0, sd: 1.0 },
            dims: 1,
            sample_sizes: vec![10, 20],
            replications: 2,
            base_seed: 1,
            estimator: Estimator::Mle1d,
            metric: Metric::HellingerSq,
            tent_max_iterations: None,
        }
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        let mut c = base();
        c.sample_sizes = vec![20, 20];
        assert!(c.validate().is_err());
        let mut c = base();
        c.sample_sizes = vec![1, 5];
        assert!(c.validate().is_err());
        let mut c = base();
        c.replications = 1;
        assert!(c.validate().is_err());
        let mut c = base();
        c.estimator = Estimator::Mle2dTent;
        assert!(c.validate().is_err());
        let mut c = base();
        c.dims = 2;
        c.estimator = Estimator::Mle2dTent;
        c.truth = TruthSpec::UniformBall { dim: 2, radius: 1.0 };
        c.sample_sizes = vec![2, 5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn truths_build() {
        for t in [
            TruthSpec::Normal { mean: 0.0, sd: 1.0 },
            TruthSpec::Laplace { loc: 0.0, scale: 1.0 },
            TruthSpec::Uniform { a: 0.0, b: 1.0 },
            TruthSpec::UniformBall { dim: 2, radius: 1.0 },
            TruthSpec::FamilyMember {
                variant: FamilyVariant::Assouad1d,
                dim: 1,
                n: Some(1000),
                eps: None,
                seed: 0,
                alpha: vec![true, false, true, false],
            },
        ] {
            let f = t.build().unwrap();
            assert_eq!(f.dim(), t.dim());
        }
    }

    #[test]
    fn json_shape() {
        let c: RiskExperimentConfig = serde_json::from_str(
            r#"{"truth":{"kind":"normal"},"dims":1,"sample_sizes":[10,20],"replications":3,"base_seed":7,"estimator":"mle-1d"}"#,
        )
        .unwrap();
        assert_eq!(c.truth, TruthSpec::Normal { mean: 0.0, sd: 1.0 });
        assert_eq!(c.metric, Metric::HellingerSq);
    }
}

//! JSON persistence of fitted models.

use std::path::Path;

use iphfit::{BivariateBlockModel, InhomBase, InhomMph, IphModel, Matrix, MphModel, PhModel, Transform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// A model of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Ph(PhModel),
    Iph(IphModel),
    Mph(MphModel),
    Block(BivariateBlockModel),
    Inhom(InhomMph),
}

/// A univariate law that can be evaluated pointwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Univariate {
    Ph(PhModel),
    Iph(IphModel),
}

impl Univariate {
    pub fn in_support(&self, x: f64) -> bool {
        match self {
            Univariate::Ph(_) => x > 0.0 && x.is_finite(),
            Univariate::Iph(m) => m.transform().in_support(x) && m.transform().to_base(x).is_ok_and(|y| y > 0.0),
        }
    }

    pub fn density(&self, x: f64) -> iphfit::Result<f64> {
        match self {
            Univariate::Ph(m) => m.density(x),
            Univariate::Iph(m) => m.density(x),
        }
    }

    pub fn survival(&self, x: f64) -> iphfit::Result<f64> {
        match self {
            Univariate::Ph(m) => m.survival(x),
            Univariate::Iph(m) => m.survival(x),
        }
    }

    pub fn quantile(&self, q: f64) -> iphfit::Result<f64> {
        match self {
            Univariate::Ph(m) => m.quantile(q),
            Univariate::Iph(m) => m.quantile(q),
        }
    }
}

impl Model {
    /// Number of coordinates.
    pub fn coords(&self) -> usize {
        match self {
            Model::Ph(_) | Model::Iph(_) => 1,
            Model::Mph(m) => m.coords(),
            Model::Block(_) => 2,
            Model::Inhom(m) => m.coords(),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Model::Ph(_) => "ph",
            Model::Iph(_) => "iph",
            Model::Mph(_) => "mph",
            Model::Block(_) => "bivblock",
            Model::Inhom(_) => "inhom-mph",
        }
    }

    /// One draw with one value per coordinate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Model::Ph(m) => vec![m.sample_time(rng)],
            Model::Iph(m) => vec![m.sample(rng)],
            Model::Mph(m) => m.sample(rng),
            Model::Block(m) => {
                let (a, b) = m.sample(rng);
                vec![a, b]
            }
            Model::Inhom(m) => m.sample(rng),
        }
    }

    /// The law of coordinate `j` (zero-based).
    pub fn marginal(&self, j: usize) -> CliResult<Univariate> {
        let d = self.coords();
        if j >= d {
            return Err(CliError::usage(format!("coordinate {} does not exist in a {d}-dimensional model", j + 1)));
        }
        Ok(match self {
            Model::Ph(m) => Univariate::Ph(m.clone()),
            Model::Iph(m) => Univariate::Iph(m.clone()),
            Model::Mph(m) => Univariate::Ph(m.marginal(j)?),
            Model::Block(m) => Univariate::Ph(m.marginal(j)?),
            Model::Inhom(m) => Univariate::Iph(m.marginal(j)?),
        })
    }

    /// Explicit joint density of a bivariate model, if it has one.
    pub fn joint_density(&self, x1: f64, x2: f64) -> Option<iphfit::Result<f64>> {
        match self {
            Model::Block(m) => Some(m.density(x1, x2)),
            Model::Inhom(m) if matches!(m.base(), InhomBase::Block(_)) => Some(m.density(x1, x2)),
            _ => None,
        }
    }
}

/// Parameters of a time transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum TransformSpec {
    Identity,
    Pareto { beta: f64 },
    Weibull { beta: f64 },
    Gompertz { beta: f64 },
    Gev { mu: f64, sigma: f64, xi: f64 },
}

impl From<&Transform> for TransformSpec {
    fn from(t: &Transform) -> Self {
        match *t {
            Transform::Identity => TransformSpec::Identity,
            Transform::Pareto { beta } => TransformSpec::Pareto { beta },
            Transform::Weibull { beta } => TransformSpec::Weibull { beta },
            Transform::Gompertz { beta } => TransformSpec::Gompertz { beta },
            Transform::Gev { mu, sigma, xi } => TransformSpec::Gev { mu, sigma, xi },
        }
    }
}

impl TransformSpec {
    fn to_transform(self) -> CliResult<Transform> {
        let t = match self {
            TransformSpec::Identity => Transform::Identity,
            TransformSpec::Pareto { beta } => Transform::Pareto { beta },
            TransformSpec::Weibull { beta } => Transform::Weibull { beta },
            TransformSpec::Gompertz { beta } => Transform::Gompertz { beta },
            TransformSpec::Gev { mu, sigma, xi } => Transform::Gev { mu, sigma, xi },
        };
        t.validate().map_err(invalid)?;
        Ok(t)
    }
}

/// Base of a transformed multivariate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseSpec {
    Mph {
        pi: Vec<f64>,
        t: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
    },
    Bivblock {
        alpha: Vec<f64>,
        t11: Vec<Vec<f64>>,
        t12: Vec<Vec<f64>>,
        t22: Vec<Vec<f64>>,
    },
}

/// Serialized form of a [`Model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Ph {
        pi: Vec<f64>,
        t: Vec<Vec<f64>>,
    },
    Iph {
        pi: Vec<f64>,
        t: Vec<Vec<f64>>,
        transform: TransformSpec,
    },
    Mph {
        pi: Vec<f64>,
        t: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
    },
    Bivblock {
        alpha: Vec<f64>,
        t11: Vec<Vec<f64>>,
        t12: Vec<Vec<f64>>,
        t22: Vec<Vec<f64>>,
    },
    InhomMph {
        base: BaseSpec,
        transforms: Vec<TransformSpec>,
    },
}

/// Settings and outcome of the fit that produced a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitMetadata {
    pub model: String,
    pub phases: Vec<usize>,
    pub iterations: usize,
    pub seed: u64,
    pub log_likelihood: f64,
    pub converged: bool,
}

/// A model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitMetadata>,
}

fn invalid(e: iphfit::Error) -> CliError {
    CliError::data(format!("invalid model document: {e}"))
}

fn matrix(rows: &[Vec<f64>]) -> CliResult<Matrix> {
    Matrix::from_rows(rows).map_err(invalid)
}

type Rows = Vec<Vec<f64>>;

fn block_spec(m: &BivariateBlockModel) -> (Vec<f64>, Rows, Rows, Rows) {
    (
        m.alpha().to_vec(),
        m.t11().matrix().to_rows(),
        m.t12().to_rows(),
        m.t22().matrix().to_rows(),
    )
}

fn mph_model(pi: &[f64], t: &[Vec<f64>], r: &[Vec<f64>]) -> CliResult<MphModel> {
    MphModel::new_unnormalized(pi.to_vec(), matrix(t)?, matrix(r)?).map_err(invalid)
}

fn block_model(alpha: &[f64], t11: &[Vec<f64>], t12: &[Vec<f64>], t22: &[Vec<f64>]) -> CliResult<BivariateBlockModel> {
    BivariateBlockModel::new(alpha.to_vec(), matrix(t11)?, matrix(t12)?, matrix(t22)?).map_err(invalid)
}

impl ModelSpec {
    pub fn from_model(m: &Model) -> Self {
        match m {
            Model::Ph(m) => ModelSpec::Ph {
                pi: m.pi().to_vec(),
                t: m.matrix().to_rows(),
            },
            Model::Iph(m) => ModelSpec::Iph {
                pi: m.base().pi().to_vec(),
                t: m.base().matrix().to_rows(),
                transform: m.transform().into(),
            },
            Model::Mph(m) => ModelSpec::Mph {
                pi: m.pi().to_vec(),
                t: m.t().matrix().to_rows(),
                r: m.rewards().to_rows(),
            },
            Model::Block(m) => {
                let (alpha, t11, t12, t22) = block_spec(m);
                ModelSpec::Bivblock { alpha, t11, t12, t22 }
            }
            Model::Inhom(m) => ModelSpec::InhomMph {
                base: match m.base() {
                    InhomBase::Mph(b) => BaseSpec::Mph {
                        pi: b.pi().to_vec(),
                        t: b.t().matrix().to_rows(),
                        r: b.rewards().to_rows(),
                    },
                    InhomBase::Block(b) => {
                        let (alpha, t11, t12, t22) = block_spec(b);
                        BaseSpec::Bivblock { alpha, t11, t12, t22 }
                    }
                },
                transforms: m.transforms().iter().map(TransformSpec::from).collect(),
            },
        }
    }

    /// Builds the model, checking every invariant of its type.
    pub fn to_model(&self) -> CliResult<Model> {
        Ok(match self {
            ModelSpec::Ph { pi, t } => Model::Ph(PhModel::new(pi.clone(), matrix(t)?).map_err(invalid)?),
            ModelSpec::Iph { pi, t, transform } => {
                let base = PhModel::new(pi.clone(), matrix(t)?).map_err(invalid)?;
                Model::Iph(IphModel::new(base, transform.to_transform()?).map_err(invalid)?)
            }
            ModelSpec::Mph { pi, t, r } => Model::Mph(mph_model(pi, t, r)?),
            ModelSpec::Bivblock { alpha, t11, t12, t22 } => Model::Block(block_model(alpha, t11, t12, t22)?),
            ModelSpec::InhomMph { base, transforms } => {
                let base = match base {
                    BaseSpec::Mph { pi, t, r } => InhomBase::Mph(mph_model(pi, t, r)?),
                    BaseSpec::Bivblock { alpha, t11, t12, t22 } => {
                        InhomBase::Block(block_model(alpha, t11, t12, t22)?)
                    }
                };
                let transforms = transforms.iter().map(|t| t.to_transform()).collect::<CliResult<Vec<_>>>()?;
                Model::Inhom(InhomMph::new(base, transforms).map_err(invalid)?)
            }
        })
    }
}

impl ModelDocument {
    pub fn new(model: &Model, fit: Option<FitMetadata>) -> Self {
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            model: ModelSpec::from_model(model),
            fit,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents hold only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| CliError::data(format!("invalid model document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::data(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Loads and validates the model stored at `path`.
pub fn load_model(path: &Path) -> CliResult<Model> {
    ModelDocument::read(path)?.model.to_model()
}

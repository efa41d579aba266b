//! Experiment configuration schema.
//!
//! Configurations are TOML documents with a strict schema: unknown keys are
//! rejected. Matrices and vectors are given inline, by reference to a
//! whitespace-separated text file, or as seeded random draws.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Variable-metric forward-backward on `0 ∈ Ax + Bx`.
    Fb,
    /// Dual forward-backward for strongly monotone composite inclusions.
    StrongPd,
    /// Primal-dual forward-backward for composite inclusions with a cocoercive term.
    CocoercivePd,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fb => "fb",
            Self::StrongPd => "strong_pd",
            Self::CocoercivePd => "cocoercive_pd",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    #[default]
    Strict,
    Warn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub solver: SolverKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: PolicySpec,
    /// Reference point for the Fejér and drift columns of the trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
    #[serde(default)]
    pub stop: StopConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub schedules: ScheduleConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    100_000
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    /// Record wall-clock time per iteration; off by default so traces are reproducible.
    #[serde(default)]
    pub wall_clock: bool,
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_summary() -> String {
    "summary.toml".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trace: default_trace(),
            summary: default_summary(),
            wall_clock: false,
        }
    }
}

/// `"oracle"` to compute the reference with an independent solver, or an explicit point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceSpec {
    Named(String),
    Point { point: VectorSpec },
}

/// A dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    /// Row-major rows.
    Rows(Vec<Vec<f64>>),
    Identity {
        identity: usize,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        scale: f64,
    },
    Diagonal {
        diagonal: Vec<f64>,
    },
    /// Whitespace-separated rows, one per line, relative to the config file.
    File {
        file: String,
    },
    Random {
        random: RandomMatrix,
    },
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomMatrixKind {
    /// Entries uniform in `[lo, hi]`.
    Uniform,
    /// Symmetric with spectrum uniform in `[lo, hi]`.
    Spd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMatrix {
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub kind: RandomMatrixKind,
    pub lo: f64,
    pub hi: f64,
}

/// A vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Values(Vec<f64>),
    Fill { fill: f64, dim: usize },
    File { file: String },
    Random { random: RandomVector },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomVector {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    HalfSpace {
        normal: VectorSpec,
        offset: f64,
    },
    Box {
        lower: VectorSpec,
        upper: VectorSpec,
    },
    Cube {
        dim: usize,
        lo: f64,
        hi: f64,
    },
    Affine {
        matrix: MatrixSpec,
        rhs: VectorSpec,
    },
    Ball {
        center: VectorSpec,
        radius: f64,
    },
    Ellipsoid {
        shape: MatrixSpec,
        center: VectorSpec,
        radius: f64,
    },
    Singleton {
        point: VectorSpec,
    },
    Whole {
        dim: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarSpec {
    Abs,
    UpperIndicator { xi: f64 },
    Quadratic { a: f64, b: f64 },
    Hinge { center: f64, lo_slope: f64, hi_slope: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeastSquaresTerm {
    pub weight: f64,
    pub matrix: MatrixSpec,
    pub rhs: VectorSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Zero { dim: usize },
    L1 { dim: usize, weight: f64 },
    WeightedL1 { weights: VectorSpec },
    Quadratic { matrix: MatrixSpec, linear: VectorSpec },
    LeastSquares { terms: Vec<LeastSquaresTerm> },
    Indicator { set: SetSpec },
    Support { set: SetSpec },
    ScalarComposite { phi: ScalarSpec, direction: VectorSpec },
}

/// A maximally monotone operator given through its resolvent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero { dim: usize },
    NormalCone { set: SetSpec },
    Subdifferential { function: FunctionSpec },
    Affine { matrix: MatrixSpec, offset: VectorSpec },
}

/// A cocoercive operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocoerciveSpec {
    Zero {
        dim: usize,
    },
    /// `x ↦ x − c`.
    ShiftedIdentity {
        c: VectorSpec,
    },
    /// `x ↦ Qx + c`, the gradient of `½⟨Qx, x⟩ + ⟨c, x⟩`.
    QuadraticGradient {
        matrix: MatrixSpec,
        linear: VectorSpec,
    },
    /// `x ↦ Mᵀ(Mx − b)`, the gradient of `½‖Mx − b‖²`.
    LeastSquaresGradient {
        matrix: MatrixSpec,
        rhs: VectorSpec,
    },
    /// `x ↦ Mx + c` with an optional declared constant.
    Affine {
        matrix: MatrixSpec,
        offset: VectorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    /// `∇ℓ*` for the smoothing `ℓ = ι_{0}` (zero operator with infinite constant).
    ZeroIndicatorConjugate {
        dim: usize,
    },
    /// `∇ℓ*` for `ℓ = (ν/2)‖·‖²`, i.e. `Id/ν`.
    QuadraticConjugate {
        dim: usize,
        nu: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub l: MatrixSpec,
    pub b: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_inv: Option<CocoerciveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<VectorSpec>,
}

/// Problem data. Which fields are required depends on the solver:
/// `fb` uses `a`, `b`, `x0`; `strong_pd` uses `z`, `rho`, `a`, `blocks`, `v0`;
/// `cocoercive_pd` uses `z`, `a`, `c`, `blocks`, `x0`, `v0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CocoerciveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<CocoerciveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<VectorSpec>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub blocks: Vec<BlockSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Constant {
        matrix: MatrixSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        declared_mu: Option<f64>,
    },
    Scalar {
        dim: usize,
        value: f64,
    },
    /// `U_n = base + amplitude·ρⁿ·direction`.
    Perturbed {
        base: MatrixSpec,
        direction: MatrixSpec,
        amplitude: f64,
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        declared_mu: Option<f64>,
    },
}

/// A constant or a cyclically repeated list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceSpec {
    Constant(f64),
    Cyclic(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Not accepted by `cocoercive_pd`, whose step size is fixed to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<SequenceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorSpec {
    Zero,
    /// `e_n = total·(1 − ratio)·ratioⁿ·direction/‖direction‖`.
    Geometric {
        direction: VectorSpec,
        total: f64,
        ratio: f64,
    },
}

/// Injected errors. `fb` uses `a` and at most one entry of `b`; `strong_pd` uses
/// `a`, `b`, `d`; `cocoercive_pd` uses all four.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ErrorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<ErrorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<ErrorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub d: Vec<ErrorSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Primal metric (`fb`, `cocoercive_pd`); identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    /// One metric per dual block (`strong_pd`, `cocoercive_pd`); identity when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dual_metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub steps: StepsConfig,
    #[serde(default)]
    pub errors: ErrorsConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }
}

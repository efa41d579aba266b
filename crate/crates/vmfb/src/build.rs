//! Turns a parsed configuration into solver inputs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmfb_core::cocoercive::{CocoerciveProblem, PdErrors, Relaxation};
use vmfb_core::fb::FbProblem;
use vmfb_core::operators::{CocoerciveOperator, ConvexSet, Modulus, ProxFunction, ResolventOperator, ScalarFunction};
use vmfb_core::schedules::{ErrorSchedule, ErrorSequence, MetricSchedule, ScalarSequence, StepSchedule};
use vmfb_core::strong::{DualBlock, DualErrors, StronglyMonotoneProblem};
use vmfb_core::{LinearMap, Matrix, Metric, Vector};

use crate::config::*;
use crate::error::CliError;

/// Solver inputs assembled from a configuration.
#[derive(Clone, Debug)]
pub enum Experiment {
    Fb {
        problem: FbProblem,
        metric: MetricSchedule,
        steps: StepSchedule,
        errors: ErrorSchedule,
        x0: Vector,
    },
    StrongPd {
        problem: StronglyMonotoneProblem,
        dual_metrics: Vec<MetricSchedule>,
        steps: StepSchedule,
        errors: DualErrors,
        v0: Vec<Vector>,
    },
    CocoercivePd {
        problem: CocoerciveProblem,
        metric: MetricSchedule,
        dual_metrics: Vec<MetricSchedule>,
        relaxation: Relaxation,
        errors: PdErrors,
        x0: Vector,
        v0: Vec<Vector>,
    },
}

/// A resolved reference point, if the configuration asks for one.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    None,
    Oracle,
    Point(Vector),
}

pub struct Builder {
    rng: ChaCha8Rng,
    base: PathBuf,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Builder {
    /// `base` is the directory against which matrix and vector files are resolved.
    pub fn new(seed: u64, base: &Path) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            base: base.to_path_buf(),
        }
    }

    fn read_rows(&self, file: &str) -> Result<Vec<Vec<f64>>, CliError> {
        let path = self.base.join(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        CliError::Parse(format!(
                            "{}:{}: cannot parse {tok:?} as a number",
                            path.display(),
                            i + 1
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(rows)
    }

    pub fn matrix(&mut self, spec: &MatrixSpec) -> Result<Matrix, CliError> {
        match spec {
            MatrixSpec::Rows(rows) => rows_to_matrix(rows),
            MatrixSpec::Identity { identity, scale } => Ok(Matrix::identity(*identity, *identity) * *scale),
            MatrixSpec::Diagonal { diagonal } => Ok(Matrix::from_diagonal(&Vector::from_column_slice(diagonal))),
            MatrixSpec::File { file } => rows_to_matrix(&self.read_rows(file)?),
            MatrixSpec::Random { random } => {
                if !(random.lo <= random.hi) {
                    return Err(config_err("random matrix needs lo <= hi"));
                }
                match random.kind {
                    RandomMatrixKind::Uniform => {
                        let cols = random.cols.unwrap_or(random.rows);
                        Ok(Matrix::from_fn(random.rows, cols, |_, _| {
                            self.rng.random_range(random.lo..=random.hi)
                        }))
                    }
                    RandomMatrixKind::Spd => {
                        if random.cols.is_some_and(|c| c != random.rows) {
                            return Err(config_err("random SPD matrix must be square"));
                        }
                        let n = random.rows;
                        let g = Matrix::from_fn(n, n, |_, _| self.rng.random_range(-1.0..1.0));
                        let q = g.qr().q();
                        let d = Vector::from_fn(n, |_, _| self.rng.random_range(random.lo..=random.hi));
                        let m = &q * Matrix::from_diagonal(&d) * q.transpose();
                        Ok((&m + m.transpose()) * 0.5)
                    }
                }
            }
        }
    }

    pub fn vector(&mut self, spec: &VectorSpec) -> Result<Vector, CliError> {
        match spec {
            VectorSpec::Values(v) => Ok(Vector::from_column_slice(v)),
            VectorSpec::Fill { fill, dim } => Ok(Vector::from_element(*dim, *fill)),
            VectorSpec::File { file } => {
                let vals: Vec<f64> = self.read_rows(file)?.into_iter().flatten().collect();
                Ok(Vector::from_vec(vals))
            }
            VectorSpec::Random { random } => {
                if !(random.lo <= random.hi) {
                    return Err(config_err("random vector needs lo <= hi"));
                }
                Ok(Vector::from_fn(random.dim, |_, _| {
                    self.rng.random_range(random.lo..=random.hi)
                }))
            }
        }
    }

    pub fn set(&mut self, spec: &SetSpec) -> Result<ConvexSet, CliError> {
        Ok(match spec {
            SetSpec::HalfSpace { normal, offset } => ConvexSet::half_space(self.vector(normal)?, *offset)?,
            SetSpec::Box { lower, upper } => ConvexSet::boxed(self.vector(lower)?, self.vector(upper)?)?,
            SetSpec::Cube { dim, lo, hi } => ConvexSet::cube(*dim, *lo, *hi)?,
            SetSpec::Affine { matrix, rhs } => ConvexSet::affine(self.matrix(matrix)?, self.vector(rhs)?)?,
            SetSpec::Ball { center, radius } => ConvexSet::ball(self.vector(center)?, *radius)?,
            SetSpec::Ellipsoid { shape, center, radius } => {
                ConvexSet::ellipsoid(self.matrix(shape)?, self.vector(center)?, *radius)?
            }
            SetSpec::Singleton { point } => ConvexSet::Singleton(self.vector(point)?),
            SetSpec::Whole { dim } => ConvexSet::Whole(*dim),
        })
    }

    pub fn scalar(&mut self, spec: &ScalarSpec) -> Result<ScalarFunction, CliError> {
        let f = match spec {
            ScalarSpec::Abs => ScalarFunction::abs(),
            ScalarSpec::UpperIndicator { xi } => ScalarFunction::upper_indicator(*xi),
            ScalarSpec::Quadratic { a, b } => ScalarFunction::quadratic(*a, *b)?,
            ScalarSpec::Hinge {
                center,
                lo_slope,
                hi_slope,
            } => ScalarFunction::Hinge {
                center: *center,
                lo_slope: *lo_slope,
                hi_slope: *hi_slope,
            },
        };
        f.validate()?;
        Ok(f)
    }

    pub fn function(&mut self, spec: &FunctionSpec) -> Result<ProxFunction, CliError> {
        Ok(match spec {
            FunctionSpec::Zero { dim } => ProxFunction::Zero(*dim),
            FunctionSpec::L1 { dim, weight } => ProxFunction::l1(*dim, *weight)?,
            FunctionSpec::WeightedL1 { weights } => ProxFunction::weighted_l1(&self.vector(weights)?)?,
            FunctionSpec::Quadratic { matrix, linear } => {
                ProxFunction::quadratic(self.matrix(matrix)?, self.vector(linear)?)?
            }
            FunctionSpec::LeastSquares { terms } => {
                let mut built = Vec::with_capacity(terms.len());
                for t in terms {
                    built.push((t.weight, self.matrix(&t.matrix)?, self.vector(&t.rhs)?));
                }
                ProxFunction::least_squares(&built)?
            }
            FunctionSpec::Indicator { set } => ProxFunction::Indicator(self.set(set)?),
            FunctionSpec::Support { set } => ProxFunction::Support(self.set(set)?),
            FunctionSpec::ScalarComposite { phi, direction } => {
                let phi = self.scalar(phi)?;
                ProxFunction::scalar_composite(phi, self.vector(direction)?)?
            }
        })
    }

    pub fn operator(&mut self, spec: &OperatorSpec) -> Result<ResolventOperator, CliError> {
        Ok(match spec {
            OperatorSpec::Zero { dim } => ResolventOperator::zero(*dim),
            OperatorSpec::NormalCone { set } => ResolventOperator::normal_cone(self.set(set)?),
            OperatorSpec::Subdifferential { function } => ResolventOperator::subdifferential(self.function(function)?),
            OperatorSpec::Affine { matrix, offset } => {
                ResolventOperator::affine(self.matrix(matrix)?, self.vector(offset)?)?
            }
        })
    }

    pub fn cocoercive(&mut self, spec: &CocoerciveSpec) -> Result<CocoerciveOperator, CliError> {
        Ok(match spec {
            CocoerciveSpec::Zero { dim } => CocoerciveOperator::zero(*dim),
            CocoerciveSpec::ShiftedIdentity { c } => CocoerciveOperator::shifted_identity(self.vector(c)?),
            CocoerciveSpec::QuadraticGradient { matrix, linear } => {
                CocoerciveOperator::gradient_of_quadratic(self.matrix(matrix)?, self.vector(linear)?)?
            }
            CocoerciveSpec::LeastSquaresGradient { matrix, rhs } => {
                let m = self.matrix(matrix)?;
                let b = self.vector(rhs)?;
                if m.nrows() != b.len() {
                    return Err(config_err(format!(
                        "least-squares gradient: matrix has {} rows but rhs has length {}",
                        m.nrows(),
                        b.len()
                    )));
                }
                CocoerciveOperator::gradient_of_quadratic(m.transpose() * &m, -(m.transpose() * b))?
            }
            CocoerciveSpec::Affine { matrix, offset, beta } => {
                let m = self.matrix(matrix)?;
                let c = self.vector(offset)?;
                match beta {
                    Some(b) => CocoerciveOperator::affine_with_beta(m, c, *b)?,
                    None => CocoerciveOperator::affine(m, c)?,
                }
            }
            CocoerciveSpec::ZeroIndicatorConjugate { dim } => CocoerciveOperator::zero(*dim),
            CocoerciveSpec::QuadraticConjugate { dim, nu } => {
                if !(*nu > 0.0) {
                    return Err(config_err(format!("smoothing modulus must be positive, got {nu}")));
                }
                CocoerciveOperator::affine_with_beta(Matrix::identity(*dim, *dim) / *nu, Vector::zeros(*dim), *nu)?
            }
        })
    }

    pub fn metric(&mut self, spec: Option<&MetricSpec>, dim: usize) -> Result<MetricSchedule, CliError> {
        let ms = match spec {
            None => MetricSchedule::constant(Metric::identity(dim)),
            Some(MetricSpec::Scalar { dim: d, value }) => MetricSchedule::constant(Metric::scalar(*d, *value)?),
            Some(MetricSpec::Constant { matrix, declared_mu }) => {
                let ms = MetricSchedule::constant(Metric::from_matrix(self.matrix(matrix)?)?);
                with_mu(ms, *declared_mu)
            }
            Some(MetricSpec::Perturbed {
                base,
                direction,
                amplitude,
                rho,
                declared_mu,
            }) => {
                let base = Metric::from_matrix(self.matrix(base)?)?;
                let d = self.matrix(direction)?;
                with_mu(MetricSchedule::perturbed(base, d, *amplitude, *rho)?, *declared_mu)
            }
        };
        if ms.dim() != dim {
            return Err(config_err(format!(
                "metric has dimension {} but the space has dimension {dim}",
                ms.dim()
            )));
        }
        Ok(ms)
    }

    fn error(&mut self, spec: Option<&ErrorSpec>, dim: usize) -> Result<ErrorSequence, CliError> {
        match spec {
            None | Some(ErrorSpec::Zero) => Ok(ErrorSequence::Zero(dim)),
            Some(ErrorSpec::Geometric {
                direction,
                total,
                ratio,
            }) => {
                let d = self.vector(direction)?;
                if d.len() != dim {
                    return Err(config_err(format!(
                        "error direction has length {} but the space has dimension {dim}",
                        d.len()
                    )));
                }
                Ok(ErrorSequence::geometric(d, *total, *ratio)?)
            }
        }
    }

    fn error_list(&mut self, specs: &[ErrorSpec], dims: &[usize], name: &str) -> Result<Vec<ErrorSequence>, CliError> {
        if !specs.is_empty() && specs.len() != dims.len() {
            return Err(config_err(format!(
                "errors.{name} needs one entry per dual block ({}), got {}",
                dims.len(),
                specs.len()
            )));
        }
        dims.iter()
            .enumerate()
            .map(|(i, &k)| self.error(specs.get(i), k))
            .collect()
    }

    fn dual_metrics(&mut self, specs: &[MetricSpec], dims: &[usize]) -> Result<Vec<MetricSchedule>, CliError> {
        if !specs.is_empty() && specs.len() != dims.len() {
            return Err(config_err(format!(
                "dual_metrics needs one entry per dual block ({}), got {}",
                dims.len(),
                specs.len()
            )));
        }
        dims.iter()
            .enumerate()
            .map(|(i, &k)| self.metric(specs.get(i), k))
            .collect()
    }

    fn blocks(&mut self, specs: &[BlockSpec]) -> Result<Vec<DualBlock>, CliError> {
        specs
            .iter()
            .map(|b| {
                let l = LinearMap::new(self.matrix(&b.l)?)?;
                let op = self.operator(&b.b)?;
                let k = l.codomain_dim();
                let d_inv = match &b.d_inv {
                    Some(s) => self.cocoercive(s)?,
                    None => CocoerciveOperator::zero(k),
                };
                let r = match &b.r {
                    Some(s) => self.vector(s)?,
                    None => Vector::zeros(k),
                };
                Ok(DualBlock::new(l, op, d_inv, r)?)
            })
            .collect()
    }

    fn dual_start(&mut self, v0: Option<&Vec<VectorSpec>>, dims: &[usize]) -> Result<Vec<Vector>, CliError> {
        match v0 {
            None => Ok(dims.iter().map(|&k| Vector::zeros(k)).collect()),
            Some(list) => {
                if list.len() != dims.len() {
                    return Err(config_err(format!(
                        "v0 needs one entry per dual block ({}), got {}",
                        dims.len(),
                        list.len()
                    )));
                }
                list.iter().map(|s| self.vector(s)).collect()
            }
        }
    }

    fn steps(&mut self, spec: &StepsConfig, beta: Modulus, mu: f64) -> Result<StepSchedule, CliError> {
        let default = StepSchedule::default_for(beta, mu);
        let epsilon = spec.epsilon.unwrap_or(default.epsilon);
        let gamma = spec.gamma.as_ref().map(sequence).unwrap_or(default.gamma);
        let lambda = spec.lambda.as_ref().map(sequence).unwrap_or(default.lambda);
        Ok(StepSchedule::new(epsilon, gamma, lambda)?)
    }

    pub fn experiment(&mut self, cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
        let p = &cfg.problem;
        let s = &cfg.schedules;
        let require = |what: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(config_err(format!(
                    "solver {} requires problem.{what}",
                    cfg.solver.as_str()
                )))
            }
        };
        let reject = |what: &str, present: bool| {
            if present {
                Err(config_err(format!(
                    "solver {} does not use {what}",
                    cfg.solver.as_str()
                )))
            } else {
                Ok(())
            }
        };
        match cfg.solver {
            SolverKind::Fb => {
                require("a", p.a.is_some())?;
                require("b", p.b.is_some())?;
                reject("problem.c", p.c.is_some())?;
                reject("problem.z", p.z.is_some())?;
                reject("problem.rho", p.rho.is_some())?;
                reject("problem.blocks", !p.blocks.is_empty())?;
                reject("problem.v0", p.v0.is_some())?;
                reject("schedules.dual_metrics", !s.dual_metrics.is_empty())?;
                reject("errors.c", s.errors.c.is_some())?;
                reject("errors.d", !s.errors.d.is_empty())?;
                if s.errors.b.len() > 1 {
                    return Err(config_err("solver fb takes at most one entry in errors.b"));
                }
                let a = self.operator(p.a.as_ref().expect("checked"))?;
                let b = self.cocoercive(p.b.as_ref().expect("checked"))?;
                let problem = FbProblem::new(a, b)?;
                let n = problem.dim();
                let x0 = match &p.x0 {
                    Some(v) => self.vector(v)?,
                    None => Vector::zeros(n),
                };
                let metric = self.metric(s.metric.as_ref(), n)?;
                let steps = self.steps(&s.steps, problem.b.beta(), metric.mu_bound())?;
                let errors = ErrorSchedule {
                    a: self.error(s.errors.a.as_ref(), n)?,
                    b: self.error(s.errors.b.first(), n)?,
                };
                Ok(Experiment::Fb {
                    problem,
                    metric,
                    steps,
                    errors,
                    x0,
                })
            }
            SolverKind::StrongPd => {
                require("z", p.z.is_some())?;
                require("a", p.a.is_some())?;
                reject("problem.b", p.b.is_some())?;
                reject("problem.c", p.c.is_some())?;
                reject("problem.x0", p.x0.is_some())?;
                reject("schedules.metric", s.metric.is_some())?;
                reject("errors.c", s.errors.c.is_some())?;
                let z = self.vector(p.z.as_ref().expect("checked"))?;
                let a = self.operator(p.a.as_ref().expect("checked"))?;
                let blocks = self.blocks(&p.blocks)?;
                let problem = StronglyMonotoneProblem::new(z, p.rho.unwrap_or(1.0), a, blocks)?;
                let dims = problem.dual_dims();
                let dual_metrics = self.dual_metrics(&s.dual_metrics, &dims)?;
                let mu = dual_metrics.iter().map(|m| m.mu_bound()).fold(0.0, f64::max);
                let beta = Modulus::Finite(vmfb_core::strong::beta_dual(&problem));
                let steps = self.steps(&s.steps, beta, mu)?;
                let errors = DualErrors {
                    a: self.error(s.errors.a.as_ref(), problem.primal_dim())?,
                    b: self.error_list(&s.errors.b, &dims, "b")?,
                    d: self.error_list(&s.errors.d, &dims, "d")?,
                };
                let v0 = self.dual_start(p.v0.as_ref(), &dims)?;
                Ok(Experiment::StrongPd {
                    problem,
                    dual_metrics,
                    steps,
                    errors,
                    v0,
                })
            }
            SolverKind::CocoercivePd => {
                require("z", p.z.is_some())?;
                require("a", p.a.is_some())?;
                require("c", p.c.is_some())?;
                reject("problem.b", p.b.is_some())?;
                reject("problem.rho", p.rho.is_some())?;
                if s.steps.gamma.is_some() {
                    return Err(config_err(
                        "solver cocoercive_pd has its step size fixed to 1; remove schedules.steps.gamma",
                    ));
                }
                let z = self.vector(p.z.as_ref().expect("checked"))?;
                let a = self.operator(p.a.as_ref().expect("checked"))?;
                let c = self.cocoercive(p.c.as_ref().expect("checked"))?;
                let blocks = self.blocks(&p.blocks)?;
                let problem = CocoerciveProblem::new(z, a, c, blocks)?;
                let n = problem.primal_dim();
                let dims = problem.dual_dims();
                let metric = self.metric(s.metric.as_ref(), n)?;
                let dual_metrics = self.dual_metrics(&s.dual_metrics, &dims)?;
                let default = Relaxation::default_for(problem.beta());
                let relaxation = Relaxation {
                    epsilon: s.steps.epsilon.unwrap_or(default.epsilon),
                    lambda: s.steps.lambda.as_ref().map(sequence).unwrap_or(default.lambda),
                };
                let errors = PdErrors {
                    a: self.error(s.errors.a.as_ref(), n)?,
                    c: self.error(s.errors.c.as_ref(), n)?,
                    b: self.error_list(&s.errors.b, &dims, "b")?,
                    d: self.error_list(&s.errors.d, &dims, "d")?,
                };
                let x0 = match &p.x0 {
                    Some(v) => self.vector(v)?,
                    None => Vector::zeros(n),
                };
                let v0 = self.dual_start(p.v0.as_ref(), &dims)?;
                Ok(Experiment::CocoercivePd {
                    problem,
                    metric,
                    dual_metrics,
                    relaxation,
                    errors,
                    x0,
                    v0,
                })
            }
        }
    }

    pub fn reference(&mut self, spec: Option<&ReferenceSpec>) -> Result<Reference, CliError> {
        match spec {
            None => Ok(Reference::None),
            Some(ReferenceSpec::Named(s)) if s == "oracle" => Ok(Reference::Oracle),
            Some(ReferenceSpec::Named(s)) => Err(config_err(format!(
                "reference must be \"oracle\" or {{ point = [...] }}, got {s:?}"
            ))),
            Some(ReferenceSpec::Point { point }) => Ok(Reference::Point(self.vector(point)?)),
        }
    }
}

fn with_mu(ms: MetricSchedule, mu: Option<f64>) -> MetricSchedule {
    match mu {
        Some(m) => ms.with_declared_mu(m),
        None => ms,
    }
}

fn sequence(spec: &SequenceSpec) -> ScalarSequence {
    match spec {
        SequenceSpec::Constant(v) => ScalarSequence::Constant(*v),
        SequenceSpec::Cyclic(v) => ScalarSequence::Cyclic(v.clone()),
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    let r = rows.len();
    if r == 0 {
        return Err(config_err("matrix has no rows"));
    }
    let c = rows[0].len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(config_err(format!(
            "matrix row {} has {} entries, expected {c}",
            i + 1,
            row.len()
        )));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

//! Temporal-difference learning of a linear surrogate `u(x) = sum_k c_k u_k(x)`
//! from walker transitions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{exit_condition, f_estimate, resolve_exit, EstimatorConfig, StepContext};
use crate::geometry::{sample_uniform_interior, Point, DEFAULT_REJECTION_BUDGET};
use crate::problems::{ProblemSpec, ScalarFn};
use crate::stochastics::{derive_seed, gaussian_step_into, Lane, RngStream};

/// Chebyshev polynomial of the first kind by the three-term recurrence.
pub fn chebyshev_eval(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..k {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `arctan(2 x2 / (1 - |x|^2))`, continued to the boundary of the unit disk by
/// its limit from inside.
pub fn dirichlet_arctan(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (2.0 * x[1]).atan2(1.0 - r2)
}

#[derive(Clone)]
pub enum Feature {
    /// Tensor product of Chebyshev polynomials, one degree per coordinate.
    Chebyshev(Vec<usize>),
    DirichletArctan,
    Custom {
        label: String,
        f: ScalarFn,
    },
}

impl Feature {
    pub fn label(&self) -> String {
        match self {
            Feature::Chebyshev(deg) => deg
                .iter()
                .map(|k| format!("T{k}"))
                .collect::<Vec<_>>()
                .join("*"),
            Feature::DirichletArctan => "arctan".into(),
            Feature::Custom { label, .. } => label.clone(),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Feature::Chebyshev(deg) => deg
                .iter()
                .zip(x)
                .map(|(&k, &xi)| chebyshev_eval(k, xi))
                .product(),
            Feature::DirichletArctan => dirichlet_arctan(x),
            Feature::Custom { f, .. } => f(x),
        }
    }
}

impl fmt::Debug for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "arctan" {
            return Ok(Feature::DirichletArctan);
        }
        let deg = s
            .split('*')
            .map(|t| {
                t.trim()
                    .strip_prefix('T')
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::UnknownName(format!("feature '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Feature::Chebyshev(deg))
    }
}

/// Ordered list of features.
#[derive(Clone, Debug)]
pub struct FeatureBasis {
    features: Vec<Feature>,
}

impl FeatureBasis {
    pub fn new(features: Vec<Feature>) -> Self {
        FeatureBasis { features }
    }

    /// Tensor Chebyshev basis in two dimensions from `(k1, k2)` degree pairs.
    pub fn tensor(degrees: &[(usize, usize)]) -> Self {
        Self::new(
            degrees
                .iter()
                .map(|&(a, b)| Feature::Chebyshev(vec![a, b]))
                .collect(),
        )
    }

    /// Comma-separated feature list, e.g. `T0*T0,T2*T0,arctan`.
    pub fn parse(spec: &str) -> Result<Self> {
        let features = spec
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Feature>>>()?;
        if features.is_empty() {
            return Err(Error::InvalidParameter("empty basis".into()));
        }
        Ok(Self::new(features))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn labels(&self) -> Vec<String> {
        self.features.iter().map(Feature::label).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.features) {
            *o = f.eval(x);
        }
    }
}

impl fmt::Display for FeatureBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.labels().join(","))
    }
}

#[derive(Clone, Debug)]
pub struct LinearModel {
    pub basis: FeatureBasis,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    /// All coefficients zero.
    pub fn zeros(basis: FeatureBasis) -> Self {
        let n = basis.len();
        LinearModel {
            basis,
            coefficients: vec![0.0; n],
        }
    }

    pub fn with_coefficients(basis: FeatureBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coefficients.len(),
            });
        }
        Ok(LinearModel {
            basis,
            coefficients,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.basis
            .features()
            .iter()
            .zip(&self.coefficients)
            .map(|(f, c)| c * f.eval(x))
            .sum()
    }

    fn dot(&self, feats: &[f64]) -> f64 {
        feats
            .iter()
            .zip(&self.coefficients)
            .map(|(u, c)| u * c)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Constant,
    /// Rates multiply by `ratio` once every `stride` global steps.
    Geometric {
        ratio: f64,
        stride: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningSchedule {
    pub initial: Vec<f64>,
    pub decay: Decay,
}

/// Base rate of the automatic schedule, divided by `sqrt(dt)`.
pub const AUTO_RATE_SCALE: f64 = 0.7;
pub const AUTO_DECAY_RATIO: f64 = 0.999;
const AUTO_RATE_SAMPLES: usize = 1000;

impl LearningSchedule {
    pub fn constant(initial: Vec<f64>) -> Self {
        LearningSchedule {
            initial,
            decay: Decay::Constant,
        }
    }

    /// Rates `AUTO_RATE_SCALE / sqrt(dt) / E[u_k^2]` with the second moments
    /// estimated from uniform interior samples, decaying by
    /// `AUTO_DECAY_RATIO` per global step.
    pub fn auto(problem: &ProblemSpec, basis: &FeatureBasis, dt: f64, seed: u64) -> Result<Self> {
        let mut rng = RngStream::with_lane(derive_seed(seed, u64::MAX >> 3), 0, Lane::Init);
        let mut second = vec![0.0; basis.len()];
        let mut feats = vec![0.0; basis.len()];
        for _ in 0..AUTO_RATE_SAMPLES {
            let x = sample_uniform_interior(
                problem.domain.as_ref(),
                &mut rng,
                DEFAULT_REJECTION_BUDGET,
            )?;
            basis.eval_into(&x, &mut feats);
            for (s, u) in second.iter_mut().zip(&feats) {
                *s += u * u;
            }
        }
        let base = AUTO_RATE_SCALE / dt.sqrt();
        let initial = second
            .iter()
            .map(|s| {
                let m = s / AUTO_RATE_SAMPLES as f64;
                if m > 0.0 {
                    base / m
                } else {
                    base
                }
            })
            .collect();
        Ok(LearningSchedule {
            initial,
            decay: Decay::Geometric {
                ratio: AUTO_DECAY_RATIO,
                stride: 1,
            },
        })
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.initial.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                got: self.initial.len(),
            });
        }
        if let Some(a) = self.initial.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(format!("learning rate {a}")));
        }
        if let Decay::Geometric { ratio, stride } = self.decay {
            if !(ratio > 0.0 && ratio <= 1.0) || stride == 0 {
                return Err(Error::InvalidParameter(format!(
                    "geometric decay ratio {ratio} stride {stride}"
                )));
            }
        }
        Ok(())
    }

    /// Rates in force during global step `step` (counted from 0).
    pub fn rates(&self, step: u64) -> Vec<f64> {
        let factor = match self.decay {
            Decay::Constant => 1.0,
            Decay::Geometric { ratio, stride } => ratio.powf((step / stride) as f64),
        };
        self.initial.iter().map(|a| a * factor).collect()
    }
}

/// `u(b_new) - u(b_old) - f_est / 2`.
pub fn td_error_interior(model: &LinearModel, b_old: &[f64], b_new: &[f64], f_est: f64) -> f64 {
    model.eval(b_new) - model.eval(b_old) - 0.5 * f_est
}

/// `g_est - u(b_old) - f_est / 2`.
pub fn td_error_terminal(model: &LinearModel, b_old: &[f64], g_est: f64, f_est: f64) -> f64 {
    g_est - model.eval(b_old) - 0.5 * f_est
}

fn apply_semi_gradient(model: &mut LinearModel, b_old: &[f64], delta: f64, rates: &[f64]) {
    let feats = model.basis.eval(b_old);
    for ((c, a), u) in model.coefficients.iter_mut().zip(rates).zip(feats) {
        *c += a * delta * u;
    }
}

/// `c_k += alpha_k * delta * u_k(b_old)` for the transition `b_old -> b_new`.
pub fn td_interior_update(
    model: &mut LinearModel,
    b_old: &[f64],
    b_new: &[f64],
    f_est: f64,
    rates: &[f64],
) {
    let delta = td_error_interior(model, b_old, b_new, f_est);
    apply_semi_gradient(model, b_old, delta, rates);
}

/// Update for a transition that left the domain with payoff estimate `g_est`.
pub fn td_terminal_update(
    model: &mut LinearModel,
    b_old: &[f64],
    g_est: f64,
    f_est: f64,
    rates: &[f64],
) {
    let delta = td_error_terminal(model, b_old, g_est, f_est);
    apply_semi_gradient(model, b_old, delta, rates);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Walkers retire at exit; training ends when all have exited.
    FixedCohort,
    /// Exited walkers restart uniformly in the domain.
    Restart,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::FixedCohort => "fixed-cohort",
            TrainMode::Restart => "restart",
        })
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-cohort" => Ok(TrainMode::FixedCohort),
            "restart" => Ok(TrainMode::Restart),
            _ => Err(Error::UnknownName(format!("mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    Exits(u64),
    Steps(u64),
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopRule::Exits(n) => write!(f, "exits:{n}"),
            StopRule::Steps(n) => write!(f, "steps:{n}"),
        }
    }
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("stop rule '{s}' (want exits:N or steps:N)"));
        let (kind, n) = s.split_once(':').ok_or_else(bad)?;
        let n: u64 = n.parse().map_err(|_| bad())?;
        match kind {
            "exits" => Ok(StopRule::Exits(n)),
            "steps" => Ok(StopRule::Steps(n)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub n_walkers: usize,
    pub dt: f64,
    pub mode: TrainMode,
    pub stop: StopRule,
    pub seed: u64,
    /// Record coefficients every this many global steps.
    pub record_stride: u64,
    pub max_steps: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            n_walkers: 1 << 14,
            dt: 0.01,
            mode: TrainMode::Restart,
            stop: StopRule::Exits(1 << 14),
            seed: 0,
            record_stride: 64,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: u64,
    pub exits: u64,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub trajectory: Vec<TrajectoryRow>,
    pub transitions: u64,
    pub exits: u64,
    pub steps: u64,
    /// Exits whose root finding stopped at the iteration cap.
    pub unconverged_exits: u64,
    pub model: LinearModel,
}

struct Walker {
    pos: Point,
    active: bool,
    path: RngStream,
    exit: RngStream,
    refine: RngStream,
    init: RngStream,
}

struct StepOutcome {
    delta: f64,
    exited: bool,
    converged: bool,
}

/// Batch-synchronous TD learning.
///
/// Every global step moves each active walker once and computes its TD error
/// against the coefficients at the start of the step; the summed semi-gradient
/// updates, scaled by `alpha_k / N`, are applied afterwards in walker order. A
/// walker whose exit condition fires contributes a terminal update for that
/// step and an interior update otherwise.
pub fn train(
    problem: &ProblemSpec,
    basis: FeatureBasis,
    cfg: &EstimatorConfig,
    schedule: &LearningSchedule,
    opts: &TrainOptions,
) -> Result<TrainReport> {
    cfg.validate()?;
    schedule.validate(basis.len())?;
    if opts.n_walkers == 0 {
        return Err(Error::InvalidParameter(
            "n_walkers must be at least 1".into(),
        ));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {}", opts.dt)));
    }
    let stride = opts.record_stride.max(1);
    let domain = problem.domain.as_ref();
    let dim = domain.dim();
    if basis
        .features()
        .iter()
        .any(|f| matches!(f, Feature::Chebyshev(d) if d.len() != dim))
    {
        return Err(Error::InvalidParameter(format!(
            "basis '{basis}' does not match dimension {dim}"
        )));
    }

    let mut walkers = (0..opts.n_walkers as u64)
        .map(|id| {
            let mut init = RngStream::with_lane(opts.seed, id, Lane::Init);
            let pos = sample_uniform_interior(domain, &mut init, DEFAULT_REJECTION_BUDGET)?;
            Ok(Walker {
                pos,
                active: true,
                path: init.sibling(Lane::Path),
                exit: init.sibling(Lane::Exit),
                refine: init.sibling(Lane::Refine),
                init,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut model = LinearModel::zeros(basis);
    let k = model.coefficients.len();
    let n_inv = 1.0 / opts.n_walkers as f64;
    let mut trajectory = vec![TrajectoryRow {
        step: 0,
        exits: 0,
        coefficients: model.coefficients.clone(),
    }];
    let (mut steps, mut exits, mut transitions, mut unconverged) = (0u64, 0u64, 0u64, 0u64);

    let done = |steps: u64, exits: u64, active: usize| match opts.stop {
        StopRule::Exits(n) => exits >= n || (opts.mode == TrainMode::FixedCohort && active == 0),
        StopRule::Steps(n) => steps >= n || (opts.mode == TrainMode::FixedCohort && active == 0),
    };
    let mut active = walkers.len();

    while !done(steps, exits, active) {
        if steps >= opts.max_steps {
            return Err(Error::StepCapExceeded(opts.max_steps));
        }
        let snapshot = &model;
        let rates = schedule.rates(steps);
        let outcomes: Vec<Option<(StepOutcome, Vec<f64>)>> = walkers
            .par_iter_mut()
            .map(|w| {
                if !w.active {
                    return Ok(None);
                }
                advance_walker(w, problem, snapshot, cfg, opts.dt).map(Some)
            })
            .collect::<Result<_>>()?;

        let mut grad = vec![0.0; k];
        for (w, out) in walkers.iter_mut().zip(outcomes) {
            let Some((o, feats)) = out else { continue };
            transitions += 1;
            for (g, u) in grad.iter_mut().zip(&feats) {
                *g += o.delta * u;
            }
            if o.exited {
                exits += 1;
                if !o.converged {
                    unconverged += 1;
                }
                match opts.mode {
                    TrainMode::Restart => {
                        w.pos =
                            sample_uniform_interior(domain, &mut w.init, DEFAULT_REJECTION_BUDGET)?;
                    }
                    TrainMode::FixedCohort => {
                        w.active = false;
                        active -= 1;
                    }
                }
            }
        }
        for ((c, a), g) in model.coefficients.iter_mut().zip(&rates).zip(&grad) {
            *c += a * n_inv * g;
        }
        steps += 1;
        if steps % stride == 0 {
            trajectory.push(TrajectoryRow {
                step: steps,
                exits,
                coefficients: model.coefficients.clone(),
            });
        }
    }
    if trajectory.last().map(|r| r.step) != Some(steps) {
        trajectory.push(TrajectoryRow {
            step: steps,
            exits,
            coefficients: model.coefficients.clone(),
        });
    }
    Ok(TrainReport {
        trajectory,
        transitions,
        exits,
        steps,
        unconverged_exits: unconverged,
        model,
    })
}

/// Moves one walker a step; returns the TD outcome and the features of the
/// pre-step position.
fn advance_walker(
    w: &mut Walker,
    problem: &ProblemSpec,
    model: &LinearModel,
    cfg: &EstimatorConfig,
    dt: f64,
) -> Result<(StepOutcome, Vec<f64>)> {
    let domain = problem.domain.as_ref();
    let old = std::mem::replace(&mut w.pos, Point::zeros(domain.dim()));
    let mut new = Point::zeros(old.dim());
    gaussian_step_into(&old, dt, &mut w.path, &mut new);
    let ctx = StepContext::from_domain(domain, &old, &new, dt);
    let exited = exit_condition(&ctx, cfg, &mut w.exit)?;
    let f = problem.forcing.as_ref();
    let f_est = f_estimate(&ctx, f, cfg.f_est, exited)?;
    let feats = model.basis.eval(&old);
    let u_old = model.dot(&feats);
    let (delta, converged) = if exited {
        let out = resolve_exit(&ctx, cfg, problem.boundary.as_ref(), domain, &mut w.refine)?;
        (out.payoff - u_old - 0.5 * f_est, out.converged)
    } else {
        (model.eval(&new) - u_old - 0.5 * f_est, true)
    };
    w.pos = new;
    Ok((
        StepOutcome {
            delta,
            exited,
            converged,
        },
        feats,
    ))
}

/// Convenience handle for shared custom features.
pub fn custom_feature(label: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Feature {
    Feature::Custom {
        label: label.to_string(),
        f: Arc::new(f),
    }
}

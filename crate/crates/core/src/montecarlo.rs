//! Feynman-Kac Monte Carlo engine, bias experiments and first-passage experiments.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    exit_condition, f_estimate, resolve_exit, BubbleRadius, EstimatorConfig, FEstimate, StepContext,
};
use crate::geometry::{Domain, HalfLine, Point};
use crate::problems::ProblemSpec;
use crate::stochastics::{
    derive_seed, gaussian_step_into, levy_hitting_time_sample, Lane, RngStream, OVERSHOOT_CONSTANT,
};

pub const DEFAULT_STEP_CAP: u64 = 1_000_000;

// Walkers are simulated in parallel chunks and reduced sequentially in walker order.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub estimate: f64,
    pub stderr: f64,
    /// Walkers that exited and contributed to the estimate.
    pub n_walkers: u64,
    pub mean_steps: f64,
    pub mean_exit_time: f64,
    /// Walkers stopped by the step cap and left out of the estimate.
    pub n_capped: u64,
    /// Exits whose root finding stopped at its iteration cap.
    pub n_unconverged: u64,
}

/// Single-pass mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (`n - 1` denominator); zero for fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WalkOutcome {
    pub payoff: f64,
    pub steps: u64,
    /// Estimated exit time.
    pub exit_time: f64,
    pub capped: bool,
    pub converged: bool,
}

/// One walker of the Monte Carlo method started at `x0`, which must be inside.
pub fn walk(
    problem: &ProblemSpec,
    x0: &[f64],
    dt: f64,
    cfg: &EstimatorConfig,
    seed: u64,
    walker_id: u64,
    step_cap: u64,
) -> Result<WalkOutcome> {
    let domain = problem.domain.as_ref();
    let f = problem.forcing.as_ref();
    let mut path = RngStream::with_lane(seed, walker_id, Lane::Path);
    let mut exit_rng = path.sibling(Lane::Exit);
    let mut refine = path.sibling(Lane::Refine);
    let mut old = Point::new(x0);
    let mut new = Point::zeros(x0.len());
    let mut rho_old = domain.signed_distance(x0);
    let mut w = 0.0;
    let mut steps = 0;
    while steps < step_cap {
        gaussian_step_into(&old, dt, &mut path, &mut new);
        steps += 1;
        let rho_new = domain.signed_distance(&new);
        let ctx = StepContext::new(&old, &new, dt, rho_old, rho_new);
        w -= 0.5 * f_estimate(&ctx, f, cfg.f_est, false)?;
        if exit_condition(&ctx, cfg, &mut exit_rng)? {
            if cfg.f_est == FEstimate::Corrected {
                w += 0.5 * ctx.lambda()? * dt * f(&old);
            }
            let out = resolve_exit(&ctx, cfg, problem.boundary.as_ref(), domain, &mut refine)?;
            return Ok(WalkOutcome {
                payoff: w + out.payoff,
                steps,
                exit_time: (steps - 1) as f64 * dt + out.time,
                capped: false,
                converged: out.converged,
            });
        }
        std::mem::swap(&mut old, &mut new);
        rho_old = rho_new;
    }
    Ok(WalkOutcome {
        payoff: f64::NAN,
        steps,
        exit_time: f64::INFINITY,
        capped: true,
        converged: true,
    })
}

fn check_common(
    problem: &ProblemSpec,
    x0: &[f64],
    n: u64,
    dt: f64,
    cfg: &EstimatorConfig,
) -> Result<()> {
    cfg.validate()?;
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: x0.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    if !problem.domain.contains(x0) {
        return Err(Error::StartOutsideDomain);
    }
    Ok(())
}

/// Monte Carlo estimate of `u(x0)` from `n` walkers.
pub fn mc_estimate(
    problem: &ProblemSpec,
    x0: &[f64],
    n: u64,
    dt: f64,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<McResult> {
    mc_estimate_capped(problem, x0, n, dt, cfg, seed, DEFAULT_STEP_CAP)
}

pub fn mc_estimate_capped(
    problem: &ProblemSpec,
    x0: &[f64],
    n: u64,
    dt: f64,
    cfg: &EstimatorConfig,
    seed: u64,
    step_cap: u64,
) -> Result<McResult> {
    check_common(problem, x0, n, dt, cfg)?;
    let mut acc = Welford::default();
    let (mut steps, mut time, mut capped, mut unconverged) = (0u64, 0.0, 0u64, 0u64);
    let mut lo = 0;
    while lo < n {
        let hi = (lo + CHUNK).min(n);
        let chunk = (lo..hi)
            .into_par_iter()
            .map(|id| walk(problem, x0, dt, cfg, seed, id, step_cap))
            .collect::<Result<Vec<_>>>()?;
        for o in chunk {
            if o.capped {
                capped += 1;
                continue;
            }
            acc.push(o.payoff);
            steps += o.steps;
            time += o.exit_time;
            if !o.converged {
                unconverged += 1;
            }
        }
        lo = hi;
    }
    let done = acc.count();
    if done == 0 {
        return Err(Error::StepCapExceeded(step_cap));
    }
    Ok(McResult {
        estimate: acc.mean(),
        stderr: acc.stderr(),
        n_walkers: done,
        mean_steps: steps as f64 / done as f64,
        mean_exit_time: time / done as f64,
        n_capped: capped,
        n_unconverged: unconverged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasCell {
    pub x: Point,
    pub estimate: f64,
    pub stderr: f64,
    pub exact: f64,
    pub bias: f64,
    /// Inside the bubble shell, where no estimate is computed.
    pub skipped: bool,
    /// Close to a singular boundary point; left out of bias comparisons.
    pub near_singularity: bool,
}

/// Largest `|bias|` over cells that were estimated and lie away from
/// singular points, with that cell's standard error.
pub fn max_abs_bias(cells: &[BiasCell]) -> Option<(f64, f64)> {
    cells
        .iter()
        .filter(|c| !c.skipped && !c.near_singularity)
        .map(|c| (c.bias.abs(), c.stderr))
        .max_by(|a, b| a.0.total_cmp(&b.0))
}

/// Interior points of an `m x m` Cartesian grid over the bounding box of a
/// two-dimensional domain, row by row in increasing `x2` then `x1`.
pub fn default_grid(domain: &dyn Domain, m: usize) -> Result<Vec<Point>> {
    let bbox = domain.bounding_box();
    if domain.dim() != 2 || !bbox.is_finite() {
        return Err(Error::InvalidParameter(
            "grid needs a bounded two-dimensional domain".into(),
        ));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("grid size {m} below 2")));
    }
    let coord =
        |k: usize, i: usize| bbox.lo[k] + (bbox.hi[k] - bbox.lo[k]) * i as f64 / (m - 1) as f64;
    let mut pts = Vec::new();
    for j in 0..m {
        for i in 0..m {
            let p = Point::new(&[coord(0, i), coord(1, j)]);
            if domain.contains(&p) {
                pts.push(p);
            }
        }
    }
    Ok(pts)
}

/// Bias of the estimator at each grid point. Each point gets its own seed
/// derived from `seed` and its index.
pub fn bias_map(
    problem: &ProblemSpec,
    grid: &[Point],
    n: u64,
    dt: f64,
    cfg: &EstimatorConfig,
    seed: u64,
) -> Result<Vec<BiasCell>> {
    if problem.exact.is_none() {
        return Err(Error::MissingExactSolution);
    }
    let shell = match cfg.exit {
        crate::estimators::ExitCondition::Bubble => cfg.bubble_radius.resolve(dt),
        _ => 0.0,
    };
    grid.iter()
        .enumerate()
        .map(|(i, x)| {
            let exact = problem.exact_at(x)?;
            let near_singularity = problem.near_singularity(x);
            if shell > 0.0 && problem.domain.signed_distance(x) > -shell {
                return Ok(BiasCell {
                    x: x.clone(),
                    estimate: f64::NAN,
                    stderr: f64::NAN,
                    exact,
                    bias: f64::NAN,
                    skipped: true,
                    near_singularity,
                });
            }
            let r = mc_estimate(problem, x, n, dt, cfg, derive_seed(seed, i as u64))?;
            Ok(BiasCell {
                x: x.clone(),
                estimate: r.estimate,
                stderr: r.stderr,
                exact,
                bias: r.estimate - exact,
                skipped: false,
                near_singularity,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub b: f64,
    pub estimate: f64,
    pub bias: f64,
    pub stderr: f64,
    /// `b` is the automatic radius for this `dt`.
    pub is_auto: bool,
}

/// Radii `b / sqrt(dt)` swept by default: 0 to 1 in steps of 0.1, plus the
/// automatic radius.
pub fn default_sweep_ratios() -> Vec<f64> {
    let mut r: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    r.push(OVERSHOOT_CONSTANT);
    r.sort_by(f64::total_cmp);
    r
}

/// Bias at `x0` under bubble-wrap exits of each radius in `b_values`, with
/// naive estimates otherwise. All radii share the same walker streams.
pub fn bubble_sweep(
    problem: &ProblemSpec,
    x0: &[f64],
    b_values: &[f64],
    n: u64,
    dt: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let exact = problem.exact_at(x0)?;
    let auto = BubbleRadius::Auto.resolve(dt);
    b_values
        .iter()
        .map(|&b| {
            let cfg = EstimatorConfig::bubble(BubbleRadius::Fixed(b));
            let r = mc_estimate(problem, x0, n, dt, &cfg, seed)?;
            Ok(SweepRow {
                b,
                estimate: r.estimate,
                bias: r.estimate - exact,
                stderr: r.stderr,
                is_auto: (b - auto).abs() <= 1e-12 * auto.max(1.0),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OvershootMethod {
    /// Exact skip-ahead between grid points via Brownian hitting times.
    SkipAhead,
    /// Plain time stepping; walkers still inside at the step cap are dropped.
    Stepwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvershootResult {
    /// Mean of `|rho| / sqrt(dt)` at the first discretely observed exit.
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub n_capped: u64,
}

/// Overshoot `|rho(B(T_dt))| / sqrt(dt)` at the first naive exit across the
/// barrier at distance 1, from the grid-point walk.
///
/// Between grid points the walk is advanced exactly: from distance `d` below
/// the barrier the hitting time is `d^2 / Z^2`, the next grid point comes
/// `s` later, and the position there is `sqrt(s) Z'` relative to the barrier.
pub fn overshoot_sample(dt: f64, seed: u64, walker_id: u64) -> f64 {
    let mut rng = RngStream::with_lane(seed, walker_id, Lane::Path);
    let mut d = 1.0;
    loop {
        let tau = levy_hitting_time_sample(d, &mut rng);
        let q = tau / dt;
        let s = if q < (1u64 << 40) as f64 {
            dt * (q.ceil() - q)
        } else {
            // the grid phase of a very late hit is uniform to double precision
            dt * rng.uniform()
        };
        let b = s.sqrt() * rng.normal();
        if b >= 0.0 {
            return b / dt.sqrt();
        }
        d = -b;
    }
}

fn overshoot_stepwise(dt: f64, seed: u64, walker_id: u64, step_cap: u64) -> Option<f64> {
    let line = HalfLine::new(1.0);
    let mut path = RngStream::with_lane(seed, walker_id, Lane::Path);
    let mut x = [0.0];
    let mut out = [0.0];
    for _ in 0..step_cap {
        gaussian_step_into(&x, dt, &mut path, &mut out);
        let rho = line.signed_distance(&out);
        if rho >= 0.0 {
            return Some(rho / dt.sqrt());
        }
        x = out;
    }
    None
}

pub fn overshoot_stats(dt: f64, n: u64, seed: u64) -> Result<OvershootResult> {
    overshoot_stats_with(dt, n, seed, OvershootMethod::SkipAhead, DEFAULT_STEP_CAP)
}

pub fn overshoot_stats_with(
    dt: f64,
    n: u64,
    seed: u64,
    method: OvershootMethod,
    step_cap: u64,
) -> Result<OvershootResult> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut acc = Welford::default();
    let mut capped = 0;
    let mut lo = 0;
    while lo < n {
        let hi = (lo + CHUNK).min(n);
        let chunk: Vec<Option<f64>> = (lo..hi)
            .into_par_iter()
            .map(|id| match method {
                OvershootMethod::SkipAhead => Some(overshoot_sample(dt, seed, id)),
                OvershootMethod::Stepwise => overshoot_stepwise(dt, seed, id, step_cap),
            })
            .collect();
        for v in chunk {
            match v {
                Some(v) => acc.push(v),
                None => capped += 1,
            }
        }
        lo = hi;
    }
    if acc.count() == 0 {
        return Err(Error::StepCapExceeded(step_cap));
    }
    Ok(OvershootResult {
        mean: acc.mean(),
        stderr: acc.stderr(),
        n: acc.count(),
        n_capped: capped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FptSamples {
    /// One estimated exit time per walker; walkers stopped by the step cap
    /// are recorded as infinity.
    pub times: Vec<f64>,
    pub n_capped: u64,
    pub n_unconverged: u64,
}

/// Estimated first passage times of 1-D Brownian motion from 0 across `a`.
pub fn fpt_experiment(
    a: f64,
    dt: f64,
    n: u64,
    cfg: &EstimatorConfig,
    seed: u64,
    step_cap: u64,
) -> Result<FptSamples> {
    let problem = crate::problems::barrier_1d(a)?;
    check_common(&problem, &[0.0], n, dt, cfg)?;
    let mut times = Vec::with_capacity(n as usize);
    let (mut capped, mut unconverged) = (0, 0);
    let mut lo = 0;
    while lo < n {
        let hi = (lo + CHUNK).min(n);
        let chunk = (lo..hi)
            .into_par_iter()
            .map(|id| walk(&problem, &[0.0], dt, cfg, seed, id, step_cap))
            .collect::<Result<Vec<_>>>()?;
        for o in chunk {
            capped += o.capped as u64;
            unconverged += (!o.converged) as u64;
            times.push(o.exit_time);
        }
        lo = hi;
    }
    Ok(FptSamples {
        times,
        n_capped: capped,
        n_unconverged: unconverged,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// `cdf`. Infinite samples count as mass beyond every finite time.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let n = samples.len();
    if n == 0 {
        return f64::NAN;
    }
    let mut sorted: Vec<f64> = samples.iter().copied().filter(|t| t.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    d.max(1.0 - sorted.len() as f64 / nf)
}

/// Empirical CDF of `samples` at each of `ts`.
pub fn empirical_cdf(samples: &[f64], ts: &[f64]) -> Vec<f64> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    ts.iter()
        .map(|&t| sorted.partition_point(|&x| x <= t) as f64 / n)
        .collect()
}

//! Exit conditions, exit time/location estimators, integrand estimators and
//! Brownian root-finding.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::stochastics::{bridge_max_from_exp, bridge_point_sample, RngStream, OVERSHOOT_CONSTANT};

/// One discretized step of a walker, with the signed distances of both ends.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub b_old: &'a [f64],
    pub b_new: &'a [f64],
    pub dt: f64,
    pub rho_old: f64,
    pub rho_new: f64,
}

impl<'a> StepContext<'a> {
    pub fn new(b_old: &'a [f64], b_new: &'a [f64], dt: f64, rho_old: f64, rho_new: f64) -> Self {
        debug_assert!(dt > 0.0);
        StepContext {
            b_old,
            b_new,
            dt,
            rho_old,
            rho_new,
        }
    }

    pub fn from_domain(domain: &dyn Domain, b_old: &'a [f64], b_new: &'a [f64], dt: f64) -> Self {
        Self::new(
            b_old,
            b_new,
            dt,
            domain.signed_distance(b_old),
            domain.signed_distance(b_new),
        )
    }

    #[inline]
    pub fn delta_rho(&self) -> f64 {
        self.rho_new - self.rho_old
    }

    /// `|rho_new| / (|rho_old| + |rho_new|)`.
    #[inline]
    pub fn lambda(&self) -> Result<f64> {
        let denom = self.rho_old.abs() + self.rho_new.abs();
        if denom == 0.0 {
            return Err(Error::DegenerateLambda);
        }
        Ok(self.rho_new.abs() / denom)
    }
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::UnknownName(format!(
                        concat!(stringify!($name), " '{}'"),
                        s
                    ))),
                }
            }
        }
    };
}

named_enum!(
    /// Rule deciding whether a walker left the domain during a step.
    ExitCondition {
        Naive => "naive",
        Bubble => "bubble",
        Max => "max",
    }
);

named_enum!(
    /// Exit time within the exiting step.
    TEstimate {
        Naive => "naive",
        NaivePlus => "naive-plus",
        Corrected => "corrected",
    }
);

named_enum!(
    /// Exit location.
    XEstimate {
        Endpoint => "endpoint",
        Corrected => "corrected",
        Brf => "brf",
    }
);

named_enum!(
    /// Time integral of the forcing over one step.
    FEstimate {
        Naive => "naive",
        Trapezoid => "trapezoid",
        Corrected => "corrected",
    }
);

named_enum!(
    /// Boundary payoff at exit.
    GEstimate {
        Naive => "naive",
        Corrected => "corrected",
        Brf => "brf",
    }
);

/// Bubble-wrap threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BubbleRadius {
    /// `|zeta(1/2)| / sqrt(2 pi) * sqrt(dt)`.
    #[default]
    Auto,
    Fixed(f64),
}

impl BubbleRadius {
    pub fn resolve(self, dt: f64) -> f64 {
        match self {
            BubbleRadius::Auto => OVERSHOOT_CONSTANT * dt.sqrt(),
            BubbleRadius::Fixed(b) => b,
        }
    }
}

impl fmt::Display for BubbleRadius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BubbleRadius::Auto => f.write_str("auto"),
            BubbleRadius::Fixed(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BubbleRadius {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(BubbleRadius::Auto);
        }
        match s.parse::<f64>() {
            Ok(b) if b >= 0.0 && b.is_finite() => Ok(BubbleRadius::Fixed(b)),
            _ => Err(Error::InvalidParameter(format!("bubble radius '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrfParams {
    pub theta: f64,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for BrfParams {
    fn default() -> Self {
        BrfParams {
            theta: 0.5,
            epsilon: 0.01,
            max_iter: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub exit: ExitCondition,
    pub bubble_radius: BubbleRadius,
    pub t_est: TEstimate,
    pub x_est: XEstimate,
    pub f_est: FEstimate,
    pub g_est: GEstimate,
    pub brf: BrfParams,
}

impl Default for EstimatorConfig {
    /// Max-sampling exits with corrected estimates throughout.
    fn default() -> Self {
        EstimatorConfig {
            exit: ExitCondition::Max,
            bubble_radius: BubbleRadius::Auto,
            t_est: TEstimate::Corrected,
            x_est: XEstimate::Corrected,
            f_est: FEstimate::Corrected,
            g_est: GEstimate::Corrected,
            brf: BrfParams::default(),
        }
    }
}

impl EstimatorConfig {
    /// Naive exit, time, location, forcing and payoff estimates.
    pub fn naive() -> Self {
        EstimatorConfig {
            exit: ExitCondition::Naive,
            bubble_radius: BubbleRadius::Auto,
            t_est: TEstimate::Naive,
            x_est: XEstimate::Endpoint,
            f_est: FEstimate::Naive,
            g_est: GEstimate::Naive,
            brf: BrfParams::default(),
        }
    }

    /// Bubble-wrap exit of radius `b` with naive estimates otherwise.
    pub fn bubble(b: BubbleRadius) -> Self {
        EstimatorConfig {
            exit: ExitCondition::Bubble,
            bubble_radius: b,
            ..Self::naive()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.brf;
        if !(p.theta > 0.0 && p.theta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} not in (0, 1)",
                p.theta
            )));
        }
        if !(p.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} not positive",
                p.epsilon
            )));
        }
        if p.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter = 0".into()));
        }
        if let BubbleRadius::Fixed(b) = self.bubble_radius {
            if !(b >= 0.0) {
                return Err(Error::InvalidParameter(format!("bubble radius = {b}")));
            }
        }
        Ok(())
    }

    /// Whether exit times and locations come from root finding.
    pub fn uses_brf(&self) -> bool {
        self.x_est == XEstimate::Brf || self.g_est == GEstimate::Brf
    }
}

#[inline]
pub fn exit_naive(ctx: &StepContext) -> bool {
    ctx.rho_new >= 0.0
}

#[inline]
pub fn exit_bubble(ctx: &StepContext, b: f64) -> bool {
    if b == 0.0 {
        return exit_naive(ctx);
    }
    ctx.rho_new > -b
}

/// Max-sampling exit driven by the exponential variate `e`.
#[inline]
pub fn exit_max_sampling_with(ctx: &StepContext, e: f64) -> Result<bool> {
    if ctx.rho_old >= 0.0 {
        return Err(Error::InvalidState("max-sampling exit needs rho_old < 0"));
    }
    if ctx.rho_new >= 0.0 {
        return Ok(true);
    }
    Ok(bridge_max_from_exp(ctx.delta_rho(), ctx.dt, e) > -ctx.rho_old)
}

#[inline]
pub fn exit_max_sampling(ctx: &StepContext, rng: &mut RngStream) -> Result<bool> {
    if ctx.rho_old >= 0.0 {
        return Err(Error::InvalidState("max-sampling exit needs rho_old < 0"));
    }
    if ctx.rho_new >= 0.0 {
        return Ok(true);
    }
    exit_max_sampling_with(ctx, rng.exp1())
}

/// Evaluates the configured exit condition.
#[inline]
pub fn exit_condition(
    ctx: &StepContext,
    cfg: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<bool> {
    match cfg.exit {
        ExitCondition::Naive => Ok(exit_naive(ctx)),
        ExitCondition::Bubble => Ok(exit_bubble(ctx, cfg.bubble_radius.resolve(ctx.dt))),
        ExitCondition::Max => exit_max_sampling(ctx, rng),
    }
}

pub fn t_estimate(ctx: &StepContext, variant: TEstimate) -> Result<f64> {
    match variant {
        TEstimate::Naive => Ok(ctx.dt),
        TEstimate::NaivePlus => Ok(0.5 * ctx.dt),
        TEstimate::Corrected => Ok((1.0 - ctx.lambda()?) * ctx.dt),
    }
}

/// `(1 - lambda) b_new + lambda b_old`.
pub fn x_estimate_corrected(ctx: &StepContext) -> Result<Point> {
    let lambda = ctx.lambda()?;
    Ok(Point::lerp(ctx.b_new, ctx.b_old, lambda))
}

pub fn f_estimate<F>(ctx: &StepContext, f: F, variant: FEstimate, exited: bool) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    match variant {
        FEstimate::Naive => Ok(ctx.dt * f(ctx.b_old)),
        FEstimate::Trapezoid => Ok(0.5 * ctx.dt * (f(ctx.b_old) + f(ctx.b_new))),
        FEstimate::Corrected if exited => Ok((1.0 - ctx.lambda()?) * ctx.dt * f(ctx.b_old)),
        FEstimate::Corrected => Ok(ctx.dt * f(ctx.b_old)),
    }
}

/// Exit time (within the step) and boundary payoff of an exiting step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitOutcome {
    pub time: f64,
    pub payoff: f64,
    /// False when root finding stopped at its iteration cap.
    pub converged: bool,
}

/// Resolves an exiting step as configured. One root-finding pass serves both
/// the time and the payoff when either asks for it; otherwise the time comes
/// from `cfg.t_est` and the payoff from `cfg.g_est`.
pub fn resolve_exit<G>(
    ctx: &StepContext,
    cfg: &EstimatorConfig,
    g: G,
    domain: &dyn Domain,
    rng: &mut RngStream,
) -> Result<ExitOutcome>
where
    G: Fn(&[f64]) -> f64,
{
    let root = if cfg.uses_brf() {
        Some(brf(ctx, &cfg.brf, domain, rng)?)
    } else {
        None
    };
    let time = match (&root, cfg.x_est) {
        (Some(r), XEstimate::Brf) => r.time,
        _ => t_estimate(ctx, cfg.t_est)?,
    };
    let payoff = match (&root, cfg.g_est) {
        (_, GEstimate::Naive) => g(ctx.b_new),
        (_, GEstimate::Corrected) => g(&x_estimate_corrected(ctx)?),
        (Some(r), GEstimate::Brf) => g(&r.location),
        (None, GEstimate::Brf) => unreachable!("root finding runs whenever g_est is brf"),
    };
    Ok(ExitOutcome {
        time,
        payoff,
        converged: root.is_none_or(|r| r.converged),
    })
}

/// Boundary payoff of an exiting step.
pub fn g_estimate<G>(
    ctx: &StepContext,
    g: G,
    variant: GEstimate,
    params: &BrfParams,
    domain: &dyn Domain,
    rng: &mut RngStream,
) -> Result<f64>
where
    G: Fn(&[f64]) -> f64,
{
    match variant {
        GEstimate::Naive => Ok(g(ctx.b_new)),
        GEstimate::Corrected => Ok(g(&x_estimate_corrected(ctx)?)),
        GEstimate::Brf => {
            let out = brf(ctx, params, domain, rng)?;
            Ok(g(&out.location))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrfOutcome {
    /// Exit time measured from the start of the step, in `[0, dt]`.
    pub time: f64,
    /// Exit location, projected onto the boundary.
    pub location: Point,
    pub iterations: usize,
    pub converged: bool,
}

/// Brownian root-finding on the bridge from `ctx.b_old` to `ctx.b_new`.
///
/// Interior bridge samples are tested with max-sampling and, when it fires,
/// the corrected estimates on the sub-interval are returned. A step whose end
/// point is still inside gets the corrected estimates directly. At the
/// iteration cap the corrected estimates on the final bracket are returned
/// with `converged = false`.
pub fn brf(
    ctx: &StepContext,
    params: &BrfParams,
    domain: &dyn Domain,
    rng: &mut RngStream,
) -> Result<BrfOutcome> {
    if ctx.rho_old >= 0.0 {
        return Err(Error::StartOutsideDomain);
    }
    let finish =
        |time: f64, loc: Point, iterations: usize, converged: bool| -> Result<BrfOutcome> {
            let location = domain.project_to_boundary(&loc)?;
            Ok(BrfOutcome {
                time,
                location,
                iterations,
                converged,
            })
        };
    if ctx.rho_new < 0.0 {
        let t = t_estimate(ctx, TEstimate::Corrected)?;
        return finish(t, x_estimate_corrected(ctx)?, 0, true);
    }

    let theta = params.theta;
    let (mut tau_min, mut tau_max) = (0.0, ctx.dt);
    let mut x_min = Point::new(ctx.b_old);
    let mut x_max = Point::new(ctx.b_new);
    let (mut rho_min, mut rho_max) = (ctx.rho_old, ctx.rho_new);
    let mut tau_exit = ctx.dt;
    let mut x_exit = x_max.clone();
    let mut rho_exit = f64::INFINITY;
    let mut iterations = 0;

    while rho_exit > params.epsilon {
        if iterations == params.max_iter {
            let sub = StepContext::new(&x_min, &x_max, tau_max - tau_min, rho_min, rho_max);
            let t = tau_min + t_estimate(&sub, TEstimate::Corrected)?;
            return finish(t, x_estimate_corrected(&sub)?, iterations, false);
        }
        iterations += 1;
        let span = tau_max - tau_min;
        tau_exit = (1.0 - theta) * tau_min + theta * tau_max;
        let t = tau_exit - tau_min;
        x_exit = bridge_point_sample(&x_min, &x_max, span, t, rng)?;
        let rho = domain.signed_distance(&x_exit);
        if rho > 0.0 {
            tau_max = tau_exit;
            x_max = x_exit.clone();
            rho_max = rho;
        } else if rho < 0.0 {
            let sub = StepContext::new(&x_min, &x_exit, t, rho_min, rho);
            if exit_max_sampling(&sub, rng)? {
                let te = tau_min + t_estimate(&sub, TEstimate::Corrected)?;
                return finish(te, x_estimate_corrected(&sub)?, iterations, true);
            }
            tau_min = tau_exit;
            x_min = x_exit.clone();
            rho_min = rho;
        }
        rho_exit = rho.abs();
    }
    finish(tau_exit, x_exit, iterations, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ball, HalfLine};
    use crate::stochastics::bridge_max_tail;
    use proptest::prelude::*;

    fn ctx1<'a>(old: &'a [f64], new: &'a [f64], dt: f64, ro: f64, rn: f64) -> StepContext<'a> {
        StepContext::new(old, new, dt, ro, rn)
    }

    #[test]
    fn naive_exit() {
        let z = [0.0];
        assert!(exit_naive(&ctx1(&z, &z, 1.0, -0.5, 0.1)));
        assert!(!exit_naive(&ctx1(&z, &z, 1.0, -0.5, -0.1)));
        assert!(exit_naive(&ctx1(&z, &z, 1.0, -0.5, 0.0)));
    }

    #[test]
    fn bubble_exit() {
        let z = [0.0];
        assert!(exit_bubble(&ctx1(&z, &z, 1.0, -0.5, -0.05), 0.1));
        for rn in [-0.2, -1e-9, 0.0, 0.3] {
            let c = ctx1(&z, &z, 1.0, -0.5, rn);
            assert_eq!(exit_bubble(&c, 0.0), exit_naive(&c));
        }
        let b = BubbleRadius::Auto.resolve(0.01);
        assert!((b - 0.0583).abs() < 5e-5, "{b}");
    }

    #[test]
    fn max_sampling_stub_and_errors() {
        let z = [0.0];
        let c = ctx1(&z, &z, 1.0, -0.5, -0.2);
        assert!(!exit_max_sampling_with(&c, 0.0).unwrap());
        let out = ctx1(&z, &z, 1.0, -0.5, 0.0);
        assert!(exit_max_sampling_with(&out, 0.0).unwrap());
        let bad = ctx1(&z, &z, 1.0, 0.1, 0.2);
        assert!(matches!(
            exit_max_sampling_with(&bad, 1.0),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn max_sampling_trigger_rate() {
        let z = [0.0];
        let c = ctx1(&z, &z, 1.0, -0.5, -0.2);
        let mut rng = RngStream::new(8, 0);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| exit_max_sampling(&c, &mut rng).unwrap())
            .count();
        let p = bridge_max_tail(0.3, 1.0, 0.5).unwrap();
        assert!((p - (-0.2f64).exp()).abs() < 1e-15);
        let rate = hits as f64 / n as f64;
        assert!(
            (rate - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
            "{rate} vs {p}"
        );
    }

    #[test]
    fn time_estimates() {
        let z = [0.0];
        let c = ctx1(&z, &z, 1.0, -0.3, 0.1);
        assert!((c.lambda().unwrap() - 0.25).abs() < 1e-15);
        assert!((t_estimate(&c, TEstimate::Corrected).unwrap() - 0.75).abs() < 1e-15);
        let c = ctx1(&z, &z, 0.1, -0.3, 0.1);
        assert_eq!(t_estimate(&c, TEstimate::Naive).unwrap(), 0.1);
        assert_eq!(t_estimate(&c, TEstimate::NaivePlus).unwrap(), 0.05);
        let start = ctx1(&z, &z, 1.0, -0.0, 0.4);
        assert_eq!(t_estimate(&start, TEstimate::Corrected).unwrap(), 0.0);
        let degenerate = ctx1(&z, &z, 1.0, 0.0, 0.0);
        assert_eq!(
            t_estimate(&degenerate, TEstimate::Corrected),
            Err(Error::DegenerateLambda)
        );
        assert_eq!(t_estimate(&degenerate, TEstimate::Naive), Ok(1.0));
    }

    #[test]
    fn corrected_location() {
        let (old, new) = ([0.7], [1.1]);
        let c = ctx1(&old, &new, 1.0, -0.3, 0.1);
        let x = x_estimate_corrected(&c).unwrap();
        assert!((HalfLine::new(1.0).signed_distance(&x)).abs() < 1e-12);
        let c = ctx1(&old, &new, 1.0, -0.3, 0.0);
        assert_eq!(x_estimate_corrected(&c).unwrap().as_slice(), &new);
        let c = ctx1(&old, &new, 1.0, 0.0, 0.1);
        assert_eq!(x_estimate_corrected(&c).unwrap().as_slice(), &old);
    }

    #[test]
    fn forcing_estimates() {
        let z = [0.0];
        let one = |_: &[f64]| 1.0;
        let c = ctx1(&z, &z, 0.1, -0.3, 0.1);
        assert_eq!(f_estimate(&c, one, FEstimate::Naive, true).unwrap(), 0.1);
        assert!((f_estimate(&c, one, FEstimate::Corrected, true).unwrap() - 0.075).abs() < 1e-15);
        assert_eq!(
            f_estimate(&c, one, FEstimate::Corrected, false).unwrap(),
            0.1
        );
        // trapezoid is exact on the affine interpolant of an affine integrand
        let (a, b) = ([0.2, -0.4], [0.5, 0.1]);
        let lin = |x: &[f64]| 2.0 * x[0] - 3.0 * x[1] + 0.5;
        let c = StepContext::new(&a, &b, 0.3, -0.5, -0.4);
        let exact = 0.3 * lin(&Point::lerp(&a, &b, 0.5));
        assert!((f_estimate(&c, lin, FEstimate::Trapezoid, false).unwrap() - exact).abs() < 1e-15);
    }

    #[test]
    fn payoff_estimates() {
        let disk = Ball::unit_disk();
        let mut rng = RngStream::new(0, 0);
        let p = BrfParams::default();
        let (old, new) = ([0.0, 0.9], [0.0, 1.2]);
        let c = StepContext::from_domain(&disk, &old, &new, 0.1);
        for v in GEstimate::ALL {
            assert_eq!(
                g_estimate(&c, |_: &[f64]| 3.5, *v, &p, &disk, &mut rng).unwrap(),
                3.5
            );
        }
        let ind = |x: &[f64]| if x[1] > 0.0 { 1.0 } else { 0.0 };
        assert_eq!(
            g_estimate(&c, ind, GEstimate::Corrected, &p, &disk, &mut rng).unwrap(),
            1.0
        );
        let on = [0.0, 1.0];
        let c = StepContext::from_domain(&disk, &old, &on, 0.1);
        let lin = |x: &[f64]| x[0] + 2.0 * x[1];
        assert_eq!(
            g_estimate(&c, lin, GEstimate::Corrected, &p, &disk, &mut rng).unwrap(),
            g_estimate(&c, lin, GEstimate::Naive, &p, &disk, &mut rng).unwrap()
        );
    }

    #[test]
    fn names_round_trip() {
        for v in ExitCondition::ALL {
            assert_eq!(v.as_str().parse::<ExitCondition>().unwrap(), *v);
        }
        for v in TEstimate::ALL {
            assert_eq!(v.to_string().parse::<TEstimate>().unwrap(), *v);
        }
        assert_eq!(
            "naive-plus".parse::<TEstimate>().unwrap(),
            TEstimate::NaivePlus
        );
        assert_eq!(
            "endpoint".parse::<XEstimate>().unwrap(),
            XEstimate::Endpoint
        );
        assert_eq!(
            "trapezoid".parse::<FEstimate>().unwrap(),
            FEstimate::Trapezoid
        );
        assert_eq!("brf".parse::<GEstimate>().unwrap(), GEstimate::Brf);
        assert!("bogus".parse::<GEstimate>().is_err());
        assert_eq!("auto".parse::<BubbleRadius>().unwrap(), BubbleRadius::Auto);
        assert_eq!(
            "0.1".parse::<BubbleRadius>().unwrap(),
            BubbleRadius::Fixed(0.1)
        );
        assert!("-1".parse::<BubbleRadius>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::default().validate().is_ok());
        let mut c = EstimatorConfig::default();
        c.brf.theta = 1.0;
        assert!(c.validate().is_err());
        let mut c = EstimatorConfig::default();
        c.brf.epsilon = 0.0;
        assert!(c.validate().is_err());
        assert_eq!(BrfParams::default().theta, 0.5);
    }

    #[test]
    fn brf_first_sample_within_tolerance() {
        // zero-variance stand-in: a huge epsilon accepts the first sample
        let line = HalfLine::new(1.0);
        let (old, new) = ([0.5], [1.5]);
        let c = StepContext::from_domain(&line, &old, &new, 1.0);
        let p = BrfParams {
            epsilon: 10.0,
            ..BrfParams::default()
        };
        let mut rng = RngStream::new(0, 0);
        let out = brf(&c, &p, &line, &mut rng).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.time, 0.5);
        assert_eq!(out.location.as_slice(), &[1.0]);
    }

    #[test]
    fn brf_rejects_outside_start() {
        let line = HalfLine::new(1.0);
        let (old, new) = ([1.5], [2.0]);
        let c = StepContext::from_domain(&line, &old, &new, 1.0);
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            brf(&c, &BrfParams::default(), &line, &mut rng),
            Err(Error::StartOutsideDomain)
        );
    }

    #[test]
    fn brf_iteration_cap_flags() {
        let line = HalfLine::new(1.0);
        let (old, new) = ([0.0], [3.0]);
        let c = StepContext::from_domain(&line, &old, &new, 1.5);
        let p = BrfParams {
            epsilon: 1e-300,
            max_iter: 3,
            ..BrfParams::default()
        };
        let mut rng = RngStream::new(4, 0);
        let out = brf(&c, &p, &line, &mut rng).unwrap();
        assert!(out.iterations <= 3);
        assert!((0.0..=1.5).contains(&out.time));
    }

    proptest! {
        #[test]
        fn trigger_strength_is_monotone(ro in -2.0f64..-1e-6, rn in -2.0f64..2.0, b1 in 0.0f64..1.0, db in 0.0f64..1.0, e in 0.0f64..10.0) {
            let z = [0.0];
            let c = ctx1(&z, &z, 0.5, ro, rn);
            if exit_naive(&c) {
                prop_assert!(exit_bubble(&c, b1));
                prop_assert!(exit_max_sampling_with(&c, e).unwrap());
            }
            if exit_bubble(&c, b1) {
                prop_assert!(exit_bubble(&c, b1 + db));
            }
        }

        #[test]
        fn corrected_estimates_stay_in_range(
            o in prop::array::uniform2(-1.0f64..1.0),
            n in prop::array::uniform2(-1.0f64..1.0),
            ro in -1.0f64..-1e-9,
            rn in -1.0f64..1.0,
            dt in 1e-4f64..2.0,
        ) {
            let c = StepContext::new(&o, &n, dt, ro, rn);
            let t = t_estimate(&c, TEstimate::Corrected).unwrap();
            prop_assert!((0.0..=dt).contains(&t));
            let x = x_estimate_corrected(&c).unwrap();
            let lam = c.lambda().unwrap();
            for k in 0..2 {
                let lo = o[k].min(n[k]) - 1e-12;
                let hi = o[k].max(n[k]) + 1e-12;
                prop_assert!(x[k] >= lo && x[k] <= hi);
                prop_assert!((x[k] - ((1.0 - lam) * n[k] + lam * o[k])).abs() < 1e-15);
            }
        }

        #[test]
        fn corrected_location_zeroes_affine_distance(
            o in prop::array::uniform2(-3.0f64..3.0),
            n in prop::array::uniform2(-3.0f64..3.0),
            w in prop::array::uniform2(-1.0f64..1.0),
            s in -1.0f64..1.0,
        ) {
            let rho = |x: &[f64]| w[0] * x[0] + w[1] * x[1] + s;
            let (ro, rn) = (rho(&o), rho(&n));
            prop_assume!(ro < -1e-6 && rn >= 0.0);
            let c = StepContext::new(&o, &n, 1.0, ro, rn);
            let x = x_estimate_corrected(&c).unwrap();
            prop_assert!(rho(&x).abs() < 1e-12);
        }

        #[test]
        fn brf_result_in_bounds(seed in 0u64..10_000, x0 in -2.0f64..0.99, step in 0.0f64..3.0, dt in 0.01f64..2.0) {
            let line = HalfLine::new(1.0);
            let old = [x0];
            let new = [x0 + step];
            let c = StepContext::from_domain(&line, &old, &new, dt);
            prop_assume!(c.rho_new.abs() + c.rho_old.abs() > 0.0);
            let mut rng = RngStream::new(seed, 0);
            let out = brf(&c, &BrfParams::default(), &line, &mut rng).unwrap();
            prop_assert!(out.time >= 0.0 && out.time <= dt);
            prop_assert!(out.converged);
            prop_assert!(line.signed_distance(&out.location).abs() < 1e-12);
        }
    }
}

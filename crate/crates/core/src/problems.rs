//! Benchmark boundary value problems.

use std::f64::consts::FRAC_1_PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Ball, Domain, HalfLine, Point};
use crate::tdl::{dirichlet_arctan, Feature, FeatureBasis};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `Delta u = f` in the domain, `u = g` on its boundary.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Arc<dyn Domain>,
    pub forcing: ScalarFn,
    /// Boundary data, extended to the whole bounding box.
    pub boundary: ScalarFn,
    pub exact: Option<ScalarFn>,
    /// Conventional walker start, when the problem has one.
    pub start: Option<Point>,
    /// Boundary points where the data jump and the solution is singular.
    pub singular_points: Vec<Point>,
}

/// Bias comparisons leave out points this close to a singular point.
pub const SINGULAR_EXCLUSION_RADIUS: f64 = 0.05;

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn exact_at(&self, x: &[f64]) -> Result<f64> {
        self.exact
            .as_ref()
            .map(|u| u(x))
            .ok_or(Error::MissingExactSolution)
    }

    /// Within [`SINGULAR_EXCLUSION_RADIUS`] of a singular boundary point.
    pub fn near_singularity(&self, x: &[f64]) -> bool {
        self.singular_points.iter().any(|s| {
            let d2: f64 = s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() < SINGULAR_EXCLUSION_RADIUS
        })
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// Laplace's equation on the unit disk with `g = 1{x2 > 0}`.
pub fn dirichlet_disk() -> ProblemSpec {
    ProblemSpec {
        name: "dirichlet-disk".into(),
        domain: Arc::new(Ball::unit_disk()),
        forcing: Arc::new(|_: &[f64]| 0.0),
        boundary: Arc::new(|x: &[f64]| if x[1] > 0.0 { 1.0 } else { 0.0 }),
        exact: Some(Arc::new(|x: &[f64]| 0.5 + FRAC_1_PI * dirichlet_arctan(x))),
        start: None,
        singular_points: vec![Point::new(&[1.0, 0.0]), Point::new(&[-1.0, 0.0])],
    }
}

/// `Delta u = 1` on the unit disk with zero boundary data.
pub fn poisson_disk() -> ProblemSpec {
    ProblemSpec {
        name: "poisson-disk".into(),
        domain: Arc::new(Ball::unit_disk()),
        forcing: Arc::new(|_: &[f64]| 1.0),
        boundary: Arc::new(|_: &[f64]| 0.0),
        exact: Some(Arc::new(|x: &[f64]| {
            0.25 * (x[0] * x[0] + x[1] * x[1] - 1.0)
        })),
        start: None,
        singular_points: Vec::new(),
    }
}

/// The half-line `{x < a}` for first-passage experiments, started at 0.
pub fn barrier_1d(a: f64) -> Result<ProblemSpec> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "barrier a = {a} must be positive"
        )));
    }
    Ok(ProblemSpec {
        name: "barrier-1d".into(),
        domain: Arc::new(HalfLine::new(a)),
        forcing: Arc::new(|_: &[f64]| 0.0),
        boundary: Arc::new(|_: &[f64]| 0.0),
        exact: None,
        start: Some(Point::new(&[0.0])),
        singular_points: Vec::new(),
    })
}

pub fn poisson_basis() -> FeatureBasis {
    FeatureBasis::tensor(&[(0, 0), (2, 0), (0, 2)])
}

pub fn dirichlet_basis() -> FeatureBasis {
    FeatureBasis::new(vec![
        Feature::Chebyshev(vec![0, 0]),
        Feature::DirichletArctan,
        Feature::Chebyshev(vec![2, 2]),
    ])
}

#[derive(Debug, Clone)]
pub struct ProblemEntry {
    pub name: &'static str,
    pub spec: ProblemSpec,
    pub default_basis: Option<FeatureBasis>,
}

pub const PROBLEM_NAMES: [&str; 3] = ["dirichlet-disk", "poisson-disk", "barrier-1d"];

/// Looks up a built-in problem; the barrier sits at `a = 1`.
pub fn lookup(name: &str) -> Result<ProblemEntry> {
    match name {
        "dirichlet-disk" => Ok(ProblemEntry {
            name: "dirichlet-disk",
            spec: dirichlet_disk(),
            default_basis: Some(dirichlet_basis()),
        }),
        "poisson-disk" => Ok(ProblemEntry {
            name: "poisson-disk",
            spec: poisson_disk(),
            default_basis: Some(poisson_basis()),
        }),
        "barrier-1d" => Ok(ProblemEntry {
            name: "barrier-1d",
            spec: barrier_1d(1.0)?,
            default_basis: None,
        }),
        _ => Err(Error::UnknownName(format!("problem '{name}'"))),
    }
}

//! Domains described by a signed distance function.
//!
//! Every domain reports `signed_distance(x) < 0` strictly inside, `0` on the
//! boundary and `> 0` outside, plus the nearest boundary point and a bounding
//! box used for uniform interior sampling.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::stochastics::RngStream;

/// Tolerance for geometric identities in double precision.
pub const GEOM_EPS: f64 = 1e-12;

/// Default cap on rejection-sampling draws.
pub const DEFAULT_REJECTION_BUDGET: usize = 10_000;

/// A point in `R^d`. Stored inline for `d <= 4`.
#[derive(Clone, PartialEq, Default)]
pub struct Point(SmallVec<[f64; 4]>);

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        Point(SmallVec::from_slice(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(SmallVec::from_elem(0.0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `(1 - w) * a + w * b`, coordinate-wise.
    pub fn lerp(a: &[f64], b: &[f64], w: f64) -> Self {
        debug_assert_eq!(a.len(), b.len());
        Point(
            a.iter()
                .zip(b)
                .map(|(x, y)| (1.0 - w) * x + w * y)
                .collect(),
        )
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(SmallVec::from_vec(v))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point::new(&v)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Axis-aligned box. Bounds may be infinite for unbounded domains.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Point,
    pub hi: Point,
}

impl BoundingBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        assert_eq!(
            lo.dim(),
            hi.dim(),
            "bounding box corners differ in dimension"
        );
        BoundingBox { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(self.hi.iter()).all(|v| v.is_finite())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// A smooth domain given through its signed distance function.
pub trait Domain: Send + Sync {
    fn dim(&self) -> usize;

    /// Negative inside, zero on the boundary, positive outside.
    fn signed_distance(&self, x: &[f64]) -> f64;

    /// Nearest boundary point, or [`Error::AmbiguousProjection`] when it is
    /// not unique.
    fn project_to_boundary(&self, x: &[f64]) -> Result<Point>;

    fn bounding_box(&self) -> BoundingBox;

    /// Open-set membership: boundary points are not contained.
    fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) < 0.0
    }
}

/// Euclidean ball `{ |x - c| < r }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius {radius}")));
        }
        if center.dim() == 0 {
            return Err(Error::InvalidParameter("ball of dimension 0".into()));
        }
        Ok(Ball { center, radius })
    }

    /// The unit disk in `R^2`.
    pub fn unit_disk() -> Self {
        Ball {
            center: Point::zeros(2),
            radius: 1.0,
        }
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn offset_norm(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.center.iter())
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt()
    }
}

impl Domain for Ball {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        self.offset_norm(x) - self.radius
    }

    fn project_to_boundary(&self, x: &[f64]) -> Result<Point> {
        let r = self.offset_norm(x);
        if r == 0.0 {
            return Err(Error::AmbiguousProjection);
        }
        let scale = self.radius / r;
        Ok(x.iter()
            .zip(self.center.iter())
            .map(|(a, c)| c + (a - c) * scale)
            .collect::<Vec<_>>()
            .into())
    }

    fn bounding_box(&self) -> BoundingBox {
        let lo = self
            .center
            .iter()
            .map(|c| c - self.radius)
            .collect::<Vec<_>>();
        let hi = self
            .center
            .iter()
            .map(|c| c + self.radius)
            .collect::<Vec<_>>();
        BoundingBox::new(lo.into(), hi.into())
    }
}

/// The half-line `{ x < a }` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLine {
    pub barrier: f64,
}

impl HalfLine {
    pub fn new(barrier: f64) -> Self {
        HalfLine { barrier }
    }
}

impl Domain for HalfLine {
    fn dim(&self) -> usize {
        1
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        x[0] - self.barrier
    }

    fn project_to_boundary(&self, _x: &[f64]) -> Result<Point> {
        Ok(Point::new(&[self.barrier]))
    }

    fn bounding_box(&self) -> BoundingBox {
        BoundingBox::new(
            Point::new(&[f64::NEG_INFINITY]),
            Point::new(&[self.barrier]),
        )
    }
}

pub type SignedDistanceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ProjectionFn = Arc<dyn Fn(&[f64]) -> Result<Point> + Send + Sync>;

/// A user-supplied domain.
#[derive(Clone)]
pub struct CustomDomain {
    dim: usize,
    signed_distance: SignedDistanceFn,
    projection: ProjectionFn,
    bounding_box: BoundingBox,
}

impl CustomDomain {
    pub fn new(
        signed_distance: SignedDistanceFn,
        projection: ProjectionFn,
        bounding_box: BoundingBox,
    ) -> Self {
        CustomDomain {
            dim: bounding_box.dim(),
            signed_distance,
            projection,
            bounding_box,
        }
    }
}

impl fmt::Debug for CustomDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDomain")
            .field("dim", &self.dim)
            .field("bounding_box", &self.bounding_box)
            .finish_non_exhaustive()
    }
}

impl Domain for CustomDomain {
    fn dim(&self) -> usize {
        self.dim
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        (self.signed_distance)(x)
    }

    fn project_to_boundary(&self, x: &[f64]) -> Result<Point> {
        (self.projection)(x)
    }

    fn bounding_box(&self) -> BoundingBox {
        self.bounding_box.clone()
    }
}

/// Draws a point uniformly on the domain by rejection from its bounding box.
pub fn sample_uniform_interior(
    domain: &dyn Domain,
    rng: &mut RngStream,
    budget: usize,
) -> Result<Point> {
    let bbox = domain.bounding_box();
    if !bbox.is_finite() {
        return Err(Error::UnboundedDomain);
    }
    let mut x = Point::zeros(bbox.dim());
    for _ in 0..budget {
        for (i, v) in x.iter_mut().enumerate() {
            let (lo, hi) = (bbox.lo[i], bbox.hi[i]);
            *v = lo + (hi - lo) * rng.uniform();
        }
        if domain.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::RejectionBudgetExceeded(budget))
}

//! Feynman-Kac solvers for elliptic boundary value problems: Monte Carlo
//! estimation of point values with bias-reducing exit estimators, and
//! temporal-difference learning of a global linear surrogate.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod montecarlo;
pub mod problems;
pub mod stochastics;
pub mod tdl;

pub use error::{Error, Result};
pub use estimators::{
    BrfParams, BubbleRadius, EstimatorConfig, ExitCondition, FEstimate, GEstimate, StepContext,
    TEstimate, XEstimate,
};
pub use geometry::{Ball, BoundingBox, CustomDomain, Domain, HalfLine, Point};
pub use montecarlo::{
    bias_map, bubble_sweep, fpt_experiment, mc_estimate, overshoot_stats, McResult,
};
pub use problems::{lookup, ProblemSpec};
pub use stochastics::{Lane, RngStream};
pub use tdl::{
    train, FeatureBasis, LearningSchedule, LinearModel, TrainMode, TrainOptions, TrainReport,
};

//! Simulator for learning and testing distribution properties with conditional samples.
//!
//! Algorithms only see a hidden [`Distribution`] through a metered [`Oracle`]; every guarantee can be
//! checked against the ground truth the simulator keeps. Modules follow the pipeline:
//!
//! - [`model`]: distributions, intervals, the oracle and exact distances.
//! - [`pull`]: fine interval partitions from unconditional samples.
//! - [`uniformity`]: weakly tolerant interval uniformity testers and small learners.
//! - [`assess`]: deciding whether a partition leaves too much mass on non-uniform intervals.
//! - [`decomposable`]: learning decomposable distributions and testing decomposable properties.
//! - [`atlas`]: inventories, atlases, the trimming sampler and the atlas tester.
//! - [`harness`]: generators and the Monte-Carlo experiment runner.

#![forbid(unsafe_code)]

pub mod assess;
pub mod atlas;
pub mod constants;
pub mod decomposable;
pub mod error;
pub mod harness;
pub mod model;
pub mod pull;
pub mod uniformity;

pub use constants::{Constants, Profile};
pub use error::{Error, Result};
pub use model::{Distribution, Interval, IntervalPartition, Oracle, QueryCount, QuerySet};

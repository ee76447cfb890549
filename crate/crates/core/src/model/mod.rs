//! Ground-truth distributions, intervals and partitions, the metered oracle, and exact operations.

mod distribution;
mod ops;
mod oracle;
mod partition;

pub use distribution::{Distribution, DistributionFile, DEFAULT_MAX_N, NORMALIZATION_TOLERANCE, RENORMALIZE_TOLERANCE};
pub use ops::{
    bias, coarsen, flatten, inspect_violating_weight, l1, l1_distance, l1_to_uniform, linf, linf_distance, restrict,
    uncoarsen, ViolationReport,
};
pub use oracle::{Oracle, Outcome, QueryCount, QueryLedger, QueryRecord, QuerySet, SetDescriptor};
pub use partition::{Interval, IntervalPartition};

pub(crate) use oracle::binomial;

//! Day-ahead scheduling for renewable energy communities whose members
//! operate battery storage under a price-volume demand-response program.
//!
//! The pipeline has three steps:
//! 1. [`standalone`]: each entity maximizes its own day-ahead profit,
//!    yielding the baseline it would earn outside the community.
//! 2. [`community`]: a community-level optimum schedules all batteries
//!    jointly against the demand-response rewards, never letting the pooled
//!    profit drop below the sum of baselines.
//! 3. [`settlement`]: the extra surplus is redistributed so every entity
//!    earns its baseline scaled by one common growth factor.
//!
//! [`lp`] holds the self-contained simplex solver the optimizers run on,
//! [`dr`] the reward curves and their big-M mixed-integer encoding,
//! [`oracle`] independent brute-force checkers used by tests and the
//! `verify` command, and [`io`] the scenario/report file formats.

pub mod community;
pub mod dr;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod settlement;
pub mod standalone;

//! Grid hierarchy, transfer operators, edge-preserving denoising and the
//! cascadic drivers.

pub mod cascade;
pub mod denoise;
pub mod hierarchy;
pub mod prolong;
pub mod schedule;

pub use cascade::{baseline, cascade, ctmg, ectmg, CascadeConfig, CascadeOutcome, LevelReport, Method};
pub use denoise::{edge_stopping, pm_denoise, EdgeThreshold, PmParams};
pub use hierarchy::{build_hierarchy, build_hierarchy_with, restrict, GridHierarchy, Level};
pub use prolong::{prolong_first, prolong_quadratic};
pub use schedule::{IterationSchedule, ScheduleKind};

//! Planning models for highly interconnected compute fabrics.
//!
//! The crate covers link-length geometry of all-to-all node arrays,
//! bandwidth-distance classification of links into electrical or optical,
//! DWDM broadcast-and-select channel plans, optical power budgets with
//! link margins, and the energy / density / cost comparison metrics.

pub mod dwdm_plan;
pub mod error;
pub mod link_budget;
pub mod media;
pub mod metrics;
pub mod power_math;
pub mod topology;

pub use error::{Error, Result};

//! Independent ground-truth engines.
//!
//! Nothing in this module knows about the closed forms elsewhere in the
//! crate: resolvent rows come from direct linear solves on truncated
//! generators, time-domain pmfs from uniformization, and path laws from
//! Monte Carlo simulation. The rest of the toolkit is tested against these.

mod resolvent;
mod simulate;

pub use resolvent::{
    certified_joint_resolvent, certified_level_resolvent, resolvent_pmf, uniformization_pmf,
    ResolventPmf,
};
pub use simulate::{
    simulate_prp, simulate_rbm, HistogramSpec, MinTracking, RbmSimulation, SimulationEstimate,
};

//! Transient (time-dependent) analysis of Markovian queueing processes and
//! regulated Brownian motion.
//!
//! The toolkit computes laws of level processes evaluated at an independent
//! exponential time `e_q`: the probability of state `n` at `e_q` equals `q`
//! times the Laplace transform of `t -> P(Q(t) = n)` at `q`, so everything
//! here doubles as transform machinery. The central pieces are
//!
//! - [`factorization`]: the conditional-law linear system that ties the free
//!   process, conditioned on its running infimum, to the process reflected at
//!   that level, plus executable checks of the resulting product identities
//!   (Wiener-Hopf and its reflected analogue);
//! - [`mms`]: closed forms for multi-server queue transient pmfs and means,
//!   assembled from single-server and infinite-server building blocks;
//! - [`rbm`]: closed-form transient law of reflected Brownian motion with
//!   drift -1 and unit variance;
//! - [`oracles`]: independent ground truth (resolvent solves, uniformization,
//!   Monte Carlo path simulation) that every closed form is tested against;
//! - [`inversion`]: Euler-summation Laplace inversion to move transform
//!   results back to the time domain.
//!
//! All transform evaluators accept complex rate arguments with positive real
//! part, which is what the inversion module feeds them.

pub mod error;
pub mod factorization;
pub mod inversion;
pub(crate) mod linalg;
pub mod mms;
pub mod model;
pub mod oracles;
pub mod quad;
pub mod rbm;
pub mod transforms;

pub use error::{Error, Result};
pub use model::{
    build_joint_inf_generator, build_level_generator, BirthDeathSpec, Boundary, GeneratorMatrix,
    MarkovPrpSpec, RateMap,
};
pub use transforms::{LstValue, TransformArgument};

/// Complex scalar used throughout the transform layer.
pub type C64 = num_complex::Complex64;

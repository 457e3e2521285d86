//! Discrete-torus circular statistics: the bivariate wrapped geometric (BWG)
//! and bivariate generalized wrapped geometric (BGWG) distributions, with
//! exact pmfs, trigonometric moments, circular correlation, exact sampling,
//! maximum-likelihood fitting, goodness-of-fit testing, and AIC comparison
//! against discretized continuous competitors.
//!
//! Data on a discrete torus arises whenever two directions are recorded on a
//! finite set of equally spaced sectors, e.g. paired 16-sector wind
//! directions at two stations. The joint pmf of both families is
//!
//! ```text
//! P(k, l) ∝ (q^z1 + q^(m1-z1)) (s^z2 + s^(m2-z2))
//!           (1 + rho cos(2 pi z1/m1 - delta 2 pi z2/m2))
//! ```
//!
//! with wrapped offsets z1 = (k - alpha) mod m1, z2 = (l - beta) mod m2;
//! BWG restricts the locations to integers, BGWG lets them vary continuously.

pub mod baselines;
pub mod dist;
mod error;
pub mod fixtures;
pub mod gof;
pub mod inference;
pub mod io;
pub mod moments;
pub mod optim;
pub mod sampling;
pub mod simstudy;
pub mod special;
pub mod torus;

pub use error::{Error, Result};

pub use dist::{
    bgwg_pmf, bwg_normalizer, bwg_pmf, conditional_pmf, joint_mode, marginal_pmf, pmf_table,
    wsg_pmf, wsg_pmf_vec, Axis, BgwgParams, BwgParams, Delta, PmfTable, TorusModel, WsgParams,
};
pub use torus::{angle_of, compass_label, compass_to_index, zeta, GridPoint, TorusGrid};

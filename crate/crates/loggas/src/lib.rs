//! A numerical laboratory for β-ensembles (one-dimensional log-gases).
//!
//! The crate builds up, layer by layer, the objects that appear in the
//! modern theory of β-ensembles and lets each layer be tested against the
//! one below it:
//!
//! * [`potentials`] — confining potentials `V` with the convexity and
//!   growth checks the theory assumes, plus the quadratic confinement cap
//!   `Θ` used by local conditioned measures.
//! * [`equilibrium`] — the one-cut equilibrium measure of `V`: endpoints,
//!   density, square-root edge constants, integrated counting function and
//!   its inverse (classical particle locations).
//! * [`samplers`] — exact tridiagonal samplers for the Gaussian β-ensemble,
//!   MALA samplers for general-`V` log-gases and for edge measures
//!   conditioned on an external configuration, and generalized Wigner
//!   matrices with non-constant variance profiles.
//! * [`dynamics`] — Dyson Brownian motion, the local edge SDE, and the
//!   random-walk representation of correlations through the coupling
//!   matrix `𝒜 = ℬ + 𝒲` and its heat flow.
//! * [`airy`] — the stochastic Airy operator discretized on a grid; its
//!   smallest eigenvalues give the reference edge laws (Tracy–Widom).
//! * [`statistics`] — estimators tying the samples back to the theory:
//!   Stieltjes transforms and the first loop equation, rigidity counts,
//!   edge fluctuation statistics, gap (level-repulsion) exponents,
//!   covariance decay, and distribution distances.
//! * [`sobolev`] — discrete Sobolev-type inequalities on the edge index
//!   geometry `i ↦ i^{2/3}`, estimated by direct optimization.
//!
//! Everything is deterministic given a seed: parallel work units derive
//! their own RNG streams from ([`rng::stream_seed`]) so results do not
//! depend on thread scheduling.

pub mod airy;
pub mod cheb;
pub mod dynamics;
pub mod equilibrium;
mod error;
pub mod linalg;
pub mod potentials;
pub mod rng;
pub mod samplers;
pub mod sobolev;
pub mod statistics;

pub use error::{Error, Result};

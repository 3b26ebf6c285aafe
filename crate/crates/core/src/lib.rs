//! Exact partition functions and marginals of binary Markov random fields
//! obtained by correcting loopy belief propagation with the loop series
//! expansion, plus the graph polynomials that govern the expansion.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: multigraphs, generalized loops, contraction and deletion.
//! - [`poly`]: exact univariate/bivariate polynomials and the `f_n`/`g_n`
//!   recurrence families.
//! - [`model`]: pairwise and factor-graph models over `{-1, +1}` variables.
//! - [`exact`]: brute-force oracles.
//! - [`lbp`]: loopy belief propagation and the Bethe free energy.
//! - [`loopseries`]: the loop series for `Z` and for single-node marginals.
//! - [`graphpoly`]: `θ_G`, `ω_G`, the matching polynomial and their identities.
//! - [`generate`]: seeded random model generators.

pub mod error;
pub mod exact;
pub mod generate;
pub mod graph;
pub mod graphpoly;
pub mod lbp;
pub mod loopseries;
pub mod model;
pub mod numeric;
pub mod poly;

pub use error::{Error, Result};
pub use exact::ExactResult;
pub use graph::{EdgeSubset, Multigraph};
pub use graphpoly::{LoopCountBound, ThetaPoly};
pub use lbp::{LbpOptions, LbpResult, Schedule};
pub use loopseries::{
    FactorCoefficients, MarginalCorrection, SeriesCoefficients, SeriesReport, SeriesTerm,
};
pub use model::{AnyModel, Factor, FactorModel, PairwiseModel};
pub use poly::{BiPoly, GaussianInt, UniPoly};

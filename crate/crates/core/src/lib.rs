//! Equilibrium payoff bounds for finitely repeated interactions with private
//! monitoring and public communication.
//!
//! The library computes, for a finite stage game with a private signal
//! structure and a public messaging round, an outer bound on the uniformly
//! strict perfect public equilibrium payoff set via directional linear
//! programs, checks the detectability and identifiability conditions under
//! which the bound collapses to the full individually rational payoff set,
//! and certifies inner approximations by running the strict decomposability
//! set operator.

pub mod cli;
pub mod conditions;
pub mod deviation;
pub mod doc;
pub mod game;
pub mod geom;
pub mod instances;
pub mod lp;
pub mod scoring;
pub mod setops;

/// Probability mass functions must be valid to this absolute tolerance.
pub const PROB_TOL: f64 = 1e-12;
/// Geometric identities (support consistency, hull membership) hold to this.
pub const GEOM_TOL: f64 = 1e-9;
/// LP feasibility and Farkas certificate residuals are accepted below this.
pub const FEAS_TOL: f64 = 1e-8;
/// Primal-dual objective gap accepted on optimal LP terminations.
pub const GAP_TOL: f64 = 1e-7;
/// Hard ceiling on literal deviation-family enumeration.
pub const ENUMERATION_CAP: usize = 10_000;

/// Unified error type for model validation, solving, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("linear program did not terminate cleanly: {0}")]
    Numerical(String),
    #[error("deviation family for player {player} has {size} members, over the cap {cap}")]
    EnumerationCap {
        player: usize,
        size: usize,
        cap: usize,
    },
    #[error("set representation is inconsistent: {0}")]
    BadSet(String),
    #[error("decomposition not certified: {0}")]
    NotCertified(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

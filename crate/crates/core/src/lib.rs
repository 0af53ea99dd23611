//! Equilibrium estimation for sealed-bid single-item auctions with correlated
//! values.
//!
//! Auctions are modeled in agent form: every (bidder, value) pair is an agent,
//! and a distribution over *scenarios* (sets of agents meeting in one auction)
//! carries any correlation between bidders. [`solver::run`] iterates
//! fictitious bidding on a discrete bid grid, and [`verify::certify`] computes
//! the exact ε for which the resulting profile is an ε-Nash equilibrium.

// `!(x >= 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod instances;
pub mod model;
pub mod payoff;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use model::{AgentId, AuctionInstance, BidGrid, MixedStrategy, PaymentRule, PlayerAuction, Scenario, StrategyProfile};
pub use solver::{run, LearningSchedule, SolverConfig, SolverResult};
pub use verify::{certify, EquilibriumCertificate};

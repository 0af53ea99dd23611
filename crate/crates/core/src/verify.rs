//! ε-Nash certificates.
//!
//! A deviating agent's payoff is linear in its own mixed strategy, so the best
//! deviation is always a pure grid bid and `ε` is the largest gap between an
//! agent's best pure-bid payoff and what its current strategy earns.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AuctionInstance, BidGrid, MixedStrategy, StrategyProfile};
use crate::payoff::{brute_force_payoff, dot, strict_cdf, PayoffEngine, Scratch};

/// Gaps above this magnitude below zero are a bug, not rounding.
const NEGATIVE_GAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub epsilon: f64,
    pub gaps: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub best_response_indices: Vec<usize>,
    pub best_response_payoffs: Vec<f64>,
}

/// Lowest index attaining the maximum of `curve`.
pub fn argmax_lowest(curve: &[f64]) -> (usize, f64) {
    let mut best = (0, curve[0]);
    for (j, &c) in curve.iter().enumerate().skip(1) {
        if c > best.1 {
            best = (j, c);
        }
    }
    best
}

pub(crate) fn clamp_gap(agent: usize, gap: f64) -> f64 {
    if gap < 0.0 {
        if gap < -NEGATIVE_GAP_TOLERANCE {
            log::warn!("agent {agent}: negative gap {gap:e} exceeds rounding tolerance");
        } else {
            debug!("agent {agent}: clamped gap {gap:e} to 0");
        }
        0.0
    } else {
        gap
    }
}

impl EquilibriumCertificate {
    pub(crate) fn from_rows(rows: impl IntoIterator<Item = (f64, usize, f64)>) -> Self {
        let mut cert = Self {
            epsilon: 0.0,
            gaps: Vec::new(),
            payoffs: Vec::new(),
            best_response_indices: Vec::new(),
            best_response_payoffs: Vec::new(),
        };
        for (agent, (achieved, br_index, br_payoff)) in rows.into_iter().enumerate() {
            let gap = clamp_gap(agent, br_payoff - achieved);
            cert.epsilon = cert.epsilon.max(gap);
            cert.gaps.push(gap);
            cert.payoffs.push(achieved);
            cert.best_response_indices.push(br_index);
            cert.best_response_payoffs.push(br_payoff);
        }
        cert
    }
}

/// Certifies `profile` using a prepared engine.
pub fn certify_with(engine: &PayoffEngine<'_>, profile: &StrategyProfile) -> EquilibriumCertificate {
    let instance = engine.instance();
    let grid_len = instance.grid().len();
    let cdf = strict_cdf(profile, instance.grid());
    let mut scratch = Scratch::new(grid_len);
    let mut curve = vec![0.0; grid_len];
    EquilibriumCertificate::from_rows(instance.agents().map(|a| {
        engine.curve_into(a, &cdf, &mut curve, &mut scratch);
        let (j, best) = argmax_lowest(&curve);
        (dot(profile.strategy(a).weights(), &curve), j, best)
    }))
}

pub fn certify(profile: &StrategyProfile, instance: &AuctionInstance) -> Result<EquilibriumCertificate> {
    profile.check_dimensions(instance)?;
    Ok(certify_with(&PayoffEngine::new(instance), profile))
}

/// Certificate built from [`brute_force_payoff`] alone, for cross-checking.
pub fn certify_brute_force(profile: &StrategyProfile, instance: &AuctionInstance) -> Result<EquilibriumCertificate> {
    profile.check_dimensions(instance)?;
    let mut rows = Vec::with_capacity(instance.n_agents());
    for a in instance.agents() {
        let curve = (0..instance.grid().len())
            .map(|j| brute_force_payoff(a, j, profile, instance))
            .collect::<Result<Vec<_>>>()?;
        let (j, best) = argmax_lowest(&curve);
        rows.push((dot(profile.strategy(a).weights(), &curve), j, best));
    }
    Ok(EquilibriumCertificate::from_rows(rows))
}

/// Sup over grid points of `|P(bid ≤ b) − reference(b)|`.
pub fn cdf_distance(strategy: &MixedStrategy, reference: impl Fn(f64) -> f64, grid: &BidGrid) -> Result<f64> {
    if strategy.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), got: strategy.len() });
    }
    let reference: Vec<f64> = grid.bids().iter().map(|&b| reference(b)).collect();
    if let Some(j) = reference.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::NonMonotoneReference(j + 1));
    }
    Ok(strategy
        .cdf()
        .iter()
        .zip(&reference)
        .map(|(e, r)| (e - r).abs())
        .fold(0.0, f64::max))
}

/// [`cdf_distance`] restricted to grid points in `[lo, hi]`.
pub fn cdf_distance_on(
    strategy: &MixedStrategy,
    reference: impl Fn(f64) -> f64,
    grid: &BidGrid,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let _ = cdf_distance(strategy, &reference, grid)?;
    Ok(strategy
        .cdf()
        .iter()
        .zip(grid.bids())
        .filter(|(_, b)| (lo..=hi).contains(*b))
        .map(|(e, &b)| (e - reference(b)).abs())
        .fold(0.0, f64::max))
}

#![allow(dead_code)]

use fbid::model::{
    AuctionInstance, BidGrid, JointDistribution, MixedStrategy, PaymentRule, PlayerAuction, Scenario, StrategyProfile,
};
use rand::seq::index::sample;
use rand::Rng;

/// Random valid instance: ≤ `max_agents` agents, ≤ `max_scenarios` scenarios,
/// a grid of ≤ `max_grid` points (irregular spacing), every agent participating.
pub fn random_instance(rng: &mut impl Rng, max_agents: usize, max_scenarios: usize, max_grid: usize, alpha: f64) -> AuctionInstance {
    let n = rng.gen_range(1..=max_agents);
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.2)).collect();
    let n_scen = rng.gen_range(1..=max_scenarios);
    let mut members: Vec<Vec<usize>> = (0..n_scen)
        .map(|_| {
            let size = rng.gen_range(1..=n);
            sample(rng, n, size).into_vec()
        })
        .collect();
    // attach every agent somewhere
    for a in 0..n {
        if !members.iter().any(|m| m.contains(&a)) {
            let s = rng.gen_range(0..members.len());
            members[s].push(a);
        }
    }
    let raw: Vec<f64> = members.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let scenarios = members.into_iter().zip(raw).map(|(m, p)| Scenario::new(m, p / total)).collect();

    let g = rng.gen_range(2..=max_grid);
    let mut points = vec![0.0];
    for _ in 1..g {
        let last = *points.last().unwrap();
        points.push(last + rng.gen_range(0.01..0.15));
    }
    AuctionInstance::new(values, scenarios, BidGrid::new(points).unwrap(), PaymentRule { alpha }).unwrap()
}

/// Random mixed strategy over `len` points; sparse with probability 1/2.
pub fn random_strategy(rng: &mut impl Rng, len: usize) -> MixedStrategy {
    let sparse = rng.gen_bool(0.5);
    let mut raw: Vec<f64> = (0..len)
        .map(|_| if sparse && rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    if raw.iter().all(|&w| w == 0.0) {
        raw[rng.gen_range(0..len)] = 1.0;
    }
    let total: f64 = raw.iter().sum();
    MixedStrategy::new(raw.into_iter().map(|w| w / total).collect()).unwrap()
}

pub fn random_profile(rng: &mut impl Rng, instance: &AuctionInstance) -> StrategyProfile {
    StrategyProfile::new((0..instance.n_agents()).map(|_| random_strategy(rng, instance.grid().len())).collect())
}

/// Random player-based auction with ≤ 3 players and ≤ 3 values each; the joint law
/// is either a product of marginals or a random (correlated, possibly sparse) table.
pub fn random_player_auction(rng: &mut impl Rng) -> PlayerAuction {
    let n = rng.gen_range(1..=3);
    let value_sets: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let mut v: Vec<f64> = Vec::with_capacity(k);
            let mut x = rng.gen_range(0.0..0.3);
            for _ in 0..k {
                v.push(x);
                x += rng.gen_range(0.05..0.4);
            }
            v
        })
        .collect();
    let joint = if rng.gen_bool(0.5) {
        JointDistribution::Independent(
            value_sets
                .iter()
                .map(|vs| {
                    let raw: Vec<f64> = vs.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
                    let t: f64 = raw.iter().sum();
                    raw.into_iter().map(|p| p / t).collect()
                })
                .collect(),
        )
    } else {
        let mut profiles: Vec<Vec<usize>> = vec![vec![]];
        for vs in &value_sets {
            profiles = profiles
                .into_iter()
                .flat_map(|p| (0..vs.len()).map(move |k| [p.clone(), vec![k]].concat()))
                .collect();
        }
        let raw: Vec<f64> = profiles.iter().map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.05..1.0) }).collect();
        let mut raw = raw;
        // every value of every player must keep positive mass
        for (i, vs) in value_sets.iter().enumerate() {
            for k in 0..vs.len() {
                if !profiles.iter().zip(&raw).any(|(p, &w)| p[i] == k && w > 0.0) {
                    let idx = profiles.iter().position(|p| p[i] == k).unwrap();
                    raw[idx] = 0.5;
                }
            }
        }
        let t: f64 = raw.iter().sum();
        JointDistribution::Table(profiles.into_iter().zip(raw).map(|(p, w)| (p, w / t)).collect())
    };
    PlayerAuction { value_sets, joint }
}

/// Equilibrium CDF of a value-1 bidder in the symmetric {0, 1} auction.
pub fn g_cdf(b: f64) -> f64 {
    if b <= 0.5 {
        b / (1.0 - b)
    } else {
        1.0
    }
}

/// [`g_cdf`] discretized onto `grid`: weight at `b_j` is `G(b_j) − G(b_{j−1})`.
pub fn discretized_g(grid: &BidGrid) -> MixedStrategy {
    let mut prev = 0.0;
    let weights: Vec<f64> = grid
        .bids()
        .iter()
        .map(|&b| {
            let g = g_cdf(b);
            let w = g - prev;
            prev = g;
            w
        })
        .collect();
    let total: f64 = weights.iter().sum();
    MixedStrategy::new(weights.into_iter().map(|w| w / total).collect()).unwrap()
}

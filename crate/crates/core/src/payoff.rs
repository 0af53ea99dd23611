//! Exact expected payoffs of agents bidding on the grid.
//!
//! For agent `a` bidding `b_j`, with `M_S` the highest opposing bid in
//! scenario `S`, the payoff is
//!
//! ```text
//! Σ_{S ∋ a} μ(S | a ∈ S) · [ (v_a − α·b_j) · P(M_S < b_j) − (1 − α) · E(M_S · 1{M_S < b_j}) ]
//! ```
//!
//! Opponent bids are independent draws from their mixed strategies, so
//! `P(M_S < b_j)` is a product of strict CDFs. Ties lose.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{AgentId, AuctionInstance, BidGrid, StrategyProfile};

/// Upper bound on the number of joint outcomes [`brute_force_payoff`] will visit.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// A scenario seen from one of its members.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEntry {
    pub scenario: usize,
    pub opponents: Vec<AgentId>,
    /// `μ(S | a ∈ S)`
    pub probability: f64,
}

/// For every agent, the scenarios it takes part in with their conditional probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalScenarioTable {
    rows: Vec<Vec<ConditionalEntry>>,
}

impl ConditionalScenarioTable {
    pub fn entries(&self, agent: AgentId) -> &[ConditionalEntry] {
        &self.rows[agent.0]
    }

    pub fn n_agents(&self) -> usize {
        self.rows.len()
    }
}

pub fn conditional_scenarios(instance: &AuctionInstance) -> ConditionalScenarioTable {
    let participation = instance.participation();
    let mut rows = vec![Vec::new(); instance.n_agents()];
    for (index, scenario) in instance.scenarios().iter().enumerate() {
        for &agent in &scenario.members {
            rows[agent.0].push(ConditionalEntry {
                scenario: index,
                opponents: scenario.members.iter().copied().filter(|&m| m != agent).collect(),
                probability: scenario.probability / participation[agent.0],
            });
        }
    }
    ConditionalScenarioTable { rows }
}

/// Per agent, `P(bid < grid[j])` for `j = 0..=len(grid)`. The extra last entry
/// is the total mass, i.e. the probability of bidding below anything above the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StrictCdfTable {
    width: usize,
    data: Vec<f64>,
}

impl StrictCdfTable {
    pub fn new(n_agents: usize, grid_len: usize) -> Self {
        Self { width: grid_len + 1, data: vec![0.0; n_agents * (grid_len + 1)] }
    }

    pub fn row(&self, agent: AgentId) -> &[f64] {
        &self.data[agent.0 * self.width..(agent.0 + 1) * self.width]
    }

    /// Recomputes every row from `profile`.
    pub fn update(&mut self, profile: &StrategyProfile) {
        for (strategy, row) in profile.strategies().iter().zip(self.data.chunks_exact_mut(self.width)) {
            let mut acc = 0.0;
            row[0] = 0.0;
            for (slot, w) in row[1..].iter_mut().zip(strategy.weights()) {
                acc += w;
                *slot = acc;
            }
        }
    }
}

pub fn strict_cdf(profile: &StrategyProfile, grid: &BidGrid) -> StrictCdfTable {
    let mut table = StrictCdfTable::new(profile.len(), grid.len());
    table.update(profile);
    table
}

/// `P(M < b_j)` for `j = 0..=G` into `win`, and, when requested,
/// `E(M · 1{M < b_j})` for `j = 0..G` into `below`.
fn opponent_curves(opponents: &[AgentId], cdf: &StrictCdfTable, bids: &[f64], win: &mut [f64], below: Option<&mut [f64]>) {
    win.fill(1.0);
    for &o in opponents {
        for (w, c) in win.iter_mut().zip(cdf.row(o)) {
            *w *= c;
        }
    }
    if let Some(below) = below {
        let mut acc = 0.0;
        for (j, slot) in below.iter_mut().enumerate() {
            *slot = acc;
            acc += bids[j] * (win[j + 1] - win[j]);
        }
    }
}

fn win_probability_at(opponents: &[AgentId], cdf: &StrictCdfTable, j: usize) -> f64 {
    let mut w = 1.0;
    for &o in opponents {
        w *= cdf.row(o)[j];
    }
    w
}

#[inline]
fn accumulate(curve: &mut [f64], probability: f64, value: f64, bids: &[f64], alpha: f64, win: &[f64], below: &[f64]) {
    for (j, slot) in curve.iter_mut().enumerate() {
        *slot += probability * ((value - alpha * bids[j]) * win[j] - (1.0 - alpha) * below[j]);
    }
}

#[inline]
fn accumulate_first_price(curve: &mut [f64], probability: f64, value: f64, bids: &[f64], win: &[f64]) {
    for (j, slot) in curve.iter_mut().enumerate() {
        *slot += probability * ((value - bids[j]) * win[j]);
    }
}

/// Reusable buffers for [`PayoffEngine`].
#[derive(Debug, Clone)]
pub struct Scratch {
    win: Vec<f64>,
    below: Vec<f64>,
    /// Per distinct opponent set: `win` (G+1) followed by `below` (G).
    shared: Vec<f64>,
}

impl Scratch {
    pub fn new(grid_len: usize) -> Self {
        Self { win: vec![0.0; grid_len + 1], below: vec![0.0; grid_len], shared: Vec::new() }
    }
}

/// Payoff evaluation bound to one instance. Precomputes the conditional
/// scenario table and the distinct opponent sets it contains.
#[derive(Debug, Clone)]
pub struct PayoffEngine<'a> {
    instance: &'a AuctionInstance,
    table: ConditionalScenarioTable,
    opponent_sets: Vec<Vec<AgentId>>,
    /// `set_ids[a][e]` indexes `opponent_sets` for entry `e` of agent `a`.
    set_ids: Vec<Vec<usize>>,
}

impl<'a> PayoffEngine<'a> {
    pub fn new(instance: &'a AuctionInstance) -> Self {
        let table = conditional_scenarios(instance);
        let mut lookup: HashMap<Vec<AgentId>, usize> = HashMap::new();
        let mut opponent_sets = Vec::new();
        let set_ids = table
            .rows
            .iter()
            .map(|entries| {
                entries
                    .iter()
                    .map(|e| {
                        *lookup.entry(e.opponents.clone()).or_insert_with(|| {
                            opponent_sets.push(e.opponents.clone());
                            opponent_sets.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Self { instance, table, opponent_sets, set_ids }
    }

    pub fn instance(&self) -> &AuctionInstance {
        self.instance
    }

    pub fn table(&self) -> &ConditionalScenarioTable {
        &self.table
    }

    /// Number of distinct opponent sets across all agents.
    pub fn n_opponent_sets(&self) -> usize {
        self.opponent_sets.len()
    }

    fn needs_below(&self) -> bool {
        !self.instance.rule().is_first_price()
    }

    /// Payoff of `agent` at every grid bid, written into `curve`.
    pub fn curve_into(&self, agent: AgentId, cdf: &StrictCdfTable, curve: &mut [f64], scratch: &mut Scratch) {
        let bids = self.instance.grid().bids();
        let value = self.instance.value(agent);
        let rule = self.instance.rule();
        curve.fill(0.0);
        for entry in self.table.entries(agent) {
            if rule.is_first_price() {
                opponent_curves(&entry.opponents, cdf, bids, &mut scratch.win, None);
                accumulate_first_price(curve, entry.probability, value, bids, &scratch.win);
            } else {
                opponent_curves(&entry.opponents, cdf, bids, &mut scratch.win, Some(&mut scratch.below));
                accumulate(curve, entry.probability, value, bids, rule.alpha, &scratch.win, &scratch.below);
            }
        }
    }

    /// Same as [`Self::curve_into`] with the mixture formula forced, even for `alpha = 1`.
    pub fn curve_into_general(&self, agent: AgentId, cdf: &StrictCdfTable, curve: &mut [f64], scratch: &mut Scratch) {
        let bids = self.instance.grid().bids();
        let value = self.instance.value(agent);
        let alpha = self.instance.rule().alpha;
        curve.fill(0.0);
        for entry in self.table.entries(agent) {
            opponent_curves(&entry.opponents, cdf, bids, &mut scratch.win, Some(&mut scratch.below));
            accumulate(curve, entry.probability, value, bids, alpha, &scratch.win, &scratch.below);
        }
    }

    /// Fills the shared opponent-set cache from `cdf`. Every distinct opponent set
    /// is evaluated once, no matter how many agents face it.
    pub fn prepare_shared(&self, cdf: &StrictCdfTable, scratch: &mut Scratch) {
        let bids = self.instance.grid().bids();
        let g = bids.len();
        let stride = 2 * g + 1;
        scratch.shared.resize(self.opponent_sets.len() * stride, 0.0);
        let needs_below = self.needs_below();
        for (set, chunk) in self.opponent_sets.iter().zip(scratch.shared.chunks_exact_mut(stride)) {
            let (win, below) = chunk.split_at_mut(g + 1);
            opponent_curves(set, cdf, bids, win, needs_below.then_some(below));
        }
    }

    /// Same result as [`Self::curve_into`], reading opponent curves from the
    /// cache filled by [`Self::prepare_shared`].
    pub fn curve_from_shared(&self, agent: AgentId, curve: &mut [f64], scratch: &Scratch) {
        let bids = self.instance.grid().bids();
        let g = bids.len();
        let stride = 2 * g + 1;
        let value = self.instance.value(agent);
        let rule = self.instance.rule();
        curve.fill(0.0);
        for (entry, &set) in self.table.entries(agent).iter().zip(&self.set_ids[agent.0]) {
            let chunk = &scratch.shared[set * stride..(set + 1) * stride];
            let (win, below) = chunk.split_at(g + 1);
            if rule.is_first_price() {
                accumulate_first_price(curve, entry.probability, value, bids, win);
            } else {
                accumulate(curve, entry.probability, value, bids, rule.alpha, win, below);
            }
        }
    }

    /// Payoff of `agent` at a single grid bid, without building the whole curve.
    pub fn payoff_at(&self, agent: AgentId, bid_index: usize, cdf: &StrictCdfTable) -> f64 {
        let bids = self.instance.grid().bids();
        let value = self.instance.value(agent);
        let rule = self.instance.rule();
        let mut total = 0.0;
        for entry in self.table.entries(agent) {
            let win = win_probability_at(&entry.opponents, cdf, bid_index);
            if rule.is_first_price() {
                total += entry.probability * ((value - bids[bid_index]) * win);
            } else {
                let mut below = 0.0;
                let mut prev = win_probability_at(&entry.opponents, cdf, 0);
                for (m, &b) in bids.iter().enumerate().take(bid_index) {
                    let next = win_probability_at(&entry.opponents, cdf, m + 1);
                    below += b * (next - prev);
                    prev = next;
                }
                total += entry.probability * ((value - rule.alpha * bids[bid_index]) * win - (1.0 - rule.alpha) * below);
            }
        }
        total
    }
}

fn check_inputs(agent: AgentId, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<()> {
    if agent.0 >= instance.n_agents() {
        return Err(Error::Agent(agent.0));
    }
    profile.check_dimensions(instance)
}

/// Expected payoff of `agent` for the pure bid `grid[bid_index]` against `profile`.
pub fn expected_payoff(agent: AgentId, bid_index: usize, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<f64> {
    check_inputs(agent, profile, instance)?;
    let len = instance.grid().len();
    if bid_index >= len {
        return Err(Error::BidIndex { index: bid_index, len });
    }
    let cdf = strict_cdf(profile, instance.grid());
    Ok(PayoffEngine::new(instance).payoff_at(agent, bid_index, &cdf))
}

/// Expected payoff of `agent` at every grid bid.
pub fn payoff_curve(agent: AgentId, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<Vec<f64>> {
    check_inputs(agent, profile, instance)?;
    let cdf = strict_cdf(profile, instance.grid());
    let mut curve = vec![0.0; instance.grid().len()];
    PayoffEngine::new(instance).curve_into(agent, &cdf, &mut curve, &mut Scratch::new(instance.grid().len()));
    Ok(curve)
}

/// `Σ_j γ_a[j] · curve_a[j]`.
pub fn mixed_payoff(agent: AgentId, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<f64> {
    let curve = payoff_curve(agent, profile, instance)?;
    Ok(dot(profile.strategy(agent).weights(), &curve))
}

pub(crate) fn dot(weights: &[f64], curve: &[f64]) -> f64 {
    weights.iter().zip(curve).map(|(w, c)| w * c).sum()
}

/// Test oracle: enumerates every joint opponent bid in every scenario
/// containing `agent` and applies the tie-loses and payment rules literally.
pub fn brute_force_payoff(agent: AgentId, bid_index: usize, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<f64> {
    check_inputs(agent, profile, instance)?;
    let grid = instance.grid();
    if bid_index >= grid.len() {
        return Err(Error::BidIndex { index: bid_index, len: grid.len() });
    }
    let table = conditional_scenarios(instance);
    let entries = table.entries(agent);
    let supports: Vec<Vec<(usize, f64)>> = profile.strategies().iter().map(|s| s.support().collect()).collect();

    let terms: u128 = entries
        .iter()
        .map(|e| e.opponents.iter().map(|o| supports[o.0].len() as u128).product::<u128>())
        .sum();
    if terms > BRUTE_FORCE_LIMIT {
        return Err(Error::EnumerationTooLarge { terms, limit: BRUTE_FORCE_LIMIT });
    }

    let own = grid.bid(bid_index);
    let value = instance.value(agent);
    let rule = instance.rule();
    let mut total = 0.0;
    for entry in entries {
        let opp_supports: Vec<&[(usize, f64)]> = entry.opponents.iter().map(|o| supports[o.0].as_slice()).collect();
        let mut cursor = vec![0usize; opp_supports.len()];
        let mut scenario_total = 0.0;
        'outcomes: loop {
            let mut weight = 1.0;
            let mut highest = 0.0f64;
            let mut wins = true;
            for (&c, support) in cursor.iter().zip(&opp_supports) {
                let (index, w) = support[c];
                let bid = grid.bid(index);
                weight *= w;
                highest = highest.max(bid);
                if !(own > bid) {
                    wins = false;
                }
            }
            if wins {
                scenario_total += weight * (value - rule.payment(own, highest));
            }
            for d in (0..cursor.len()).rev() {
                cursor[d] += 1;
                if cursor[d] < opp_supports[d].len() {
                    continue 'outcomes;
                }
                cursor[d] = 0;
            }
            break;
        }
        total += entry.probability * scenario_total;
    }
    Ok(total)
}

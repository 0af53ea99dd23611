//! Auction formulations.
//!
//! The solver works on the *agent-based* model: every possible (bidder, value)
//! realization is a separate agent with a fixed value, and correlation between
//! bidders is carried entirely by a distribution over which subsets of agents
//! meet in an auction (a [`Scenario`]). The classical *player-based* model
//! (players, discrete value sets and a joint value distribution) is kept in
//! [`PlayerAuction`] and converted with [`convert_player_to_agent`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on every "sums to one" check.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Admissible bid levels. Always starts at 0 and is strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BidGrid {
    bids: Vec<f64>,
}

impl BidGrid {
    pub fn new(bids: Vec<f64>) -> Result<Self> {
        if bids.len() < 2 {
            return Err(Error::Grid(format!("need at least 2 bids, got {}", bids.len())));
        }
        if bids[0] != 0.0 {
            return Err(Error::Grid(format!("first bid must be 0, got {}", bids[0])));
        }
        if let Some(w) = bids.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Grid(format!("bids not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self { bids })
    }

    /// `[0, max/steps, 2·max/steps, …, max]`.
    pub fn uniform(max: f64, steps: usize) -> Result<Self> {
        if !(max > 0.0) || !max.is_finite() {
            return Err(Error::Grid(format!("grid max must be positive, got {max}")));
        }
        if steps == 0 {
            return Err(Error::Grid("grid needs at least one step".into()));
        }
        Self::new(Self::uniform_points(max, steps))
    }

    fn uniform_points(max: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|i| max * i as f64 / steps as f64).collect()
    }

    /// `(max, steps)` if this grid is bit-identical to `uniform(max, steps)`.
    pub fn uniform_params(&self) -> Option<(f64, usize)> {
        let steps = self.bids.len() - 1;
        let max = self.max();
        (Self::uniform_points(max, steps) == self.bids).then_some((max, steps))
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    pub fn bid(&self, index: usize) -> f64 {
        self.bids[index]
    }

    pub fn max(&self) -> f64 {
        self.bids[self.bids.len() - 1]
    }

    /// Index of the grid point nearest to `bid`.
    pub fn nearest_index(&self, bid: f64) -> usize {
        let pos = self.bids.partition_point(|&b| b < bid);
        if pos == 0 {
            0
        } else if pos == self.bids.len() || bid - self.bids[pos - 1] <= self.bids[pos] - bid {
            pos - 1
        } else {
            pos
        }
    }
}

impl TryFrom<Vec<f64>> for BidGrid {
    type Error = Error;

    fn try_from(bids: Vec<f64>) -> Result<Self> {
        Self::new(bids)
    }
}

impl From<BidGrid> for Vec<f64> {
    fn from(grid: BidGrid) -> Self {
        grid.bids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of agents that meet in one auction, with its probability under μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub members: Vec<AgentId>,
    pub probability: f64,
}

impl Scenario {
    pub fn new(members: impl IntoIterator<Item = usize>, probability: f64) -> Self {
        Self { members: members.into_iter().map(AgentId).collect(), probability }
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.members.contains(&agent)
    }
}

/// Winner pays `alpha · own bid + (1 − alpha) · highest opposing bid`.
///
/// `alpha = 1` is the first-price auction, `alpha = 0.5` pays the average of
/// the two highest bids. A winner without opponents pays `alpha · own bid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaymentRule {
    pub alpha: f64,
}

impl PaymentRule {
    pub const FIRST_PRICE: Self = Self { alpha: 1.0 };

    pub fn mixture(alpha: f64) -> Result<Self> {
        let rule = Self { alpha };
        if rule.is_valid() {
            Ok(rule)
        } else {
            Err(Error::Invalid(ValidationReport { violations: vec![Violation::Alpha(alpha)] }))
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.alpha)
    }

    pub fn is_first_price(&self) -> bool {
        self.alpha == 1.0
    }

    /// Payment of a winner bidding `own` whose highest opponent bid `second`.
    pub fn payment(&self, own: f64, second: f64) -> f64 {
        self.alpha * own + (1.0 - self.alpha) * second
    }
}

impl Default for PaymentRule {
    fn default() -> Self {
        Self::FIRST_PRICE
    }
}

/// One invariant violation found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ProbabilitySum(f64),
    NegativeProbability { scenario: usize, probability: f64 },
    EmptyScenario(usize),
    UnknownAgent { scenario: usize, agent: usize },
    NeverParticipates(AgentId),
    NegativeValue { agent: AgentId, value: f64 },
    NoAgents,
    Alpha(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilitySum(sum) => write!(f, "probabilities sum to {sum}"),
            Violation::NegativeProbability { scenario, probability } => {
                write!(f, "scenario {scenario} has negative probability {probability}")
            }
            Violation::EmptyScenario(s) => write!(f, "scenario {s} has no members"),
            Violation::UnknownAgent { scenario, agent } => {
                write!(f, "scenario {scenario} references unknown agent {agent}")
            }
            Violation::NeverParticipates(a) => write!(f, "agent {a} never participates"),
            Violation::NegativeValue { agent, value } => {
                write!(f, "agent {agent} has invalid value {value}")
            }
            Violation::NoAgents => write!(f, "instance has no agents"),
            Violation::Alpha(alpha) => write!(f, "payment alpha {alpha} outside [0, 1]"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Agent-based auction `(A, v_A, μ)` together with the bid grid and payment rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionInstance {
    values: Vec<f64>,
    scenarios: Vec<Scenario>,
    grid: BidGrid,
    rule: PaymentRule,
}

impl AuctionInstance {
    /// Canonicalizes and validates.
    pub fn new(values: Vec<f64>, scenarios: Vec<Scenario>, grid: BidGrid, rule: PaymentRule) -> Result<Self> {
        let instance = Self::from_parts_unchecked(values, scenarios, grid, rule);
        let report = validate_instance(&instance);
        if report.is_valid() {
            Ok(instance)
        } else {
            Err(Error::Invalid(report))
        }
    }

    /// Canonicalizes without validating: members are sorted and deduplicated,
    /// scenarios with identical member sets are merged (probabilities summed, first
    /// occurrence keeps its position) and zero-probability scenarios are dropped.
    pub fn from_parts_unchecked(
        values: Vec<f64>,
        scenarios: Vec<Scenario>,
        grid: BidGrid,
        rule: PaymentRule,
    ) -> Self {
        let mut merged: Vec<Scenario> = Vec::with_capacity(scenarios.len());
        let mut position: BTreeMap<Vec<AgentId>, usize> = BTreeMap::new();
        for mut s in scenarios {
            s.members.sort_unstable();
            s.members.dedup();
            match position.get(&s.members) {
                Some(&i) => merged[i].probability += s.probability,
                None => {
                    position.insert(s.members.clone(), merged.len());
                    merged.push(s);
                }
            }
        }
        merged.retain(|s| s.probability != 0.0);
        Self { values, scenarios: merged, grid, rule }
    }

    pub fn n_agents(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, agent: AgentId) -> f64 {
        self.values[agent.0]
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn grid(&self) -> &BidGrid {
        &self.grid
    }

    pub fn rule(&self) -> PaymentRule {
        self.rule
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.values.len()).map(AgentId)
    }

    pub fn with_grid(mut self, grid: BidGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_rule(mut self, rule: PaymentRule) -> Self {
        self.rule = rule;
        self
    }

    /// μ(S ∋ a) for every agent.
    pub fn participation(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.values.len()];
        for s in &self.scenarios {
            for m in &s.members {
                if let Some(slot) = mass.get_mut(m.0) {
                    *slot += s.probability;
                }
            }
        }
        mass
    }
}

/// Lists every violated invariant of `instance`; empty when the instance is valid.
pub fn validate_instance(instance: &AuctionInstance) -> ValidationReport {
    let mut violations = Vec::new();
    let n = instance.values.len();
    if n == 0 {
        violations.push(Violation::NoAgents);
    }
    for (i, &v) in instance.values.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            violations.push(Violation::NegativeValue { agent: AgentId(i), value: v });
        }
    }
    let mut total = 0.0;
    for (i, s) in instance.scenarios.iter().enumerate() {
        total += s.probability;
        if !(s.probability >= 0.0) {
            violations.push(Violation::NegativeProbability { scenario: i, probability: s.probability });
        }
        if s.members.is_empty() {
            violations.push(Violation::EmptyScenario(i));
        }
        for m in &s.members {
            if m.0 >= n {
                violations.push(Violation::UnknownAgent { scenario: i, agent: m.0 });
            }
        }
    }
    if !((total - 1.0).abs() <= PROBABILITY_TOLERANCE) {
        violations.push(Violation::ProbabilitySum(total));
    }
    for (i, mass) in instance.participation().into_iter().enumerate() {
        if !(mass > 0.0) {
            violations.push(Violation::NeverParticipates(AgentId(i)));
        }
    }
    if !instance.rule.is_valid() {
        violations.push(Violation::Alpha(instance.rule.alpha));
    }
    ValidationReport { violations }
}

/// Probability vector over the indices of a bid grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedStrategy {
    weights: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Strategy("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Strategy(format!("invalid weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::Strategy(format!("weights sum to {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn uniform(len: usize) -> Self {
        Self { weights: vec![1.0 / len as f64; len] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// `P(bid ≤ grid[j])` for every `j`.
    pub fn cdf(&self) -> Vec<f64> {
        self.weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect()
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().copied().enumerate().filter(|&(_, w)| w > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    strategies: Vec<MixedStrategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Self {
        Self { strategies }
    }

    pub fn uniform(n_agents: usize, grid_len: usize) -> Self {
        Self::new(vec![MixedStrategy::uniform(grid_len); n_agents])
    }

    pub fn point_mass(n_agents: usize, grid_len: usize, index: usize) -> Self {
        Self::new(vec![MixedStrategy::point_mass(grid_len, index); n_agents])
    }

    /// Checks that there is one strategy per agent, each over the whole grid.
    pub fn check_dimensions(&self, instance: &AuctionInstance) -> Result<()> {
        if self.strategies.len() != instance.n_agents() {
            return Err(Error::Dimension { expected: instance.n_agents(), got: self.strategies.len() });
        }
        let g = instance.grid().len();
        match self.strategies.iter().find(|s| s.len() != g) {
            Some(s) => Err(Error::Dimension { expected: g, got: s.len() }),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.strategies
    }

    pub fn strategy(&self, agent: AgentId) -> &MixedStrategy {
        &self.strategies[agent.0]
    }

    pub(crate) fn strategies_mut(&mut self) -> &mut [MixedStrategy] {
        &mut self.strategies
    }

    pub fn with_strategy(mut self, agent: AgentId, strategy: MixedStrategy) -> Self {
        self.strategies[agent.0] = strategy;
        self
    }
}

/// Joint distribution `F` of a player-based auction.
#[derive(Debug, Clone, PartialEq)]
pub enum JointDistribution {
    /// Values drawn independently; one marginal per player, aligned with its value set.
    Independent(Vec<Vec<f64>>),
    /// Explicit table of value profiles (indices into each player's value set).
    Table(Vec<(Vec<usize>, f64)>),
}

/// Classical Bayesian auction: players with discrete value sets and a joint value law.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerAuction {
    pub value_sets: Vec<Vec<f64>>,
    pub joint: JointDistribution,
}

impl PlayerAuction {
    pub fn independent(players: Vec<(Vec<f64>, Vec<f64>)>) -> Self {
        let (value_sets, marginals) = players.into_iter().unzip();
        Self { value_sets, joint: JointDistribution::Independent(marginals) }
    }

    pub fn n_players(&self) -> usize {
        self.value_sets.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::PlayerAuction(msg));
        if self.value_sets.is_empty() {
            return fail("no players".into());
        }
        for (i, vs) in self.value_sets.iter().enumerate() {
            if vs.is_empty() {
                return fail(format!("player {i} has an empty value set"));
            }
            if vs.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return fail(format!("player {i} has a negative or non-finite value"));
            }
            if vs.windows(2).any(|w| !(w[1] > w[0])) {
                return fail(format!("player {i} value set is not strictly increasing"));
            }
        }
        let total = match &self.joint {
            JointDistribution::Independent(marginals) => {
                if marginals.len() != self.value_sets.len() {
                    return fail(format!("{} marginals for {} players", marginals.len(), self.value_sets.len()));
                }
                let mut product = 1.0;
                for (i, (m, vs)) in marginals.iter().zip(&self.value_sets).enumerate() {
                    if m.len() != vs.len() {
                        return fail(format!("player {i}: {} probabilities for {} values", m.len(), vs.len()));
                    }
                    if m.iter().any(|p| !(*p >= 0.0)) {
                        return fail(format!("player {i} has a negative probability"));
                    }
                    let s: f64 = m.iter().sum();
                    if (s - 1.0).abs() > PROBABILITY_TOLERANCE {
                        return fail(format!("player {i} probabilities sum to {s}"));
                    }
                    product *= s;
                }
                product
            }
            JointDistribution::Table(rows) => {
                for (profile, p) in rows {
                    if profile.len() != self.value_sets.len() {
                        return fail(format!("profile {profile:?} has the wrong number of players"));
                    }
                    if profile.iter().zip(&self.value_sets).any(|(&k, vs)| k >= vs.len()) {
                        return fail(format!("profile {profile:?} indexes past a value set"));
                    }
                    if !(*p >= 0.0) {
                        return fail(format!("profile {profile:?} has negative probability {p}"));
                    }
                }
                rows.iter().map(|(_, p)| p).sum()
            }
        };
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return fail(format!("joint distribution sums to {total}"));
        }
        Ok(())
    }

    /// Positive-probability value profiles (as value indices) in lexicographic order,
    /// duplicates in an explicit table summed.
    pub fn profiles(&self) -> Vec<(Vec<usize>, f64)> {
        match &self.joint {
            JointDistribution::Independent(marginals) => {
                let mut out: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
                for m in marginals {
                    out = out
                        .into_iter()
                        .flat_map(|(prefix, p)| {
                            m.iter().enumerate().map(move |(k, &q)| {
                                let mut next = prefix.clone();
                                next.push(k);
                                (next, p * q)
                            })
                        })
                        .collect();
                }
                out.retain(|(_, p)| *p > 0.0);
                out
            }
            JointDistribution::Table(rows) => {
                let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
                for (profile, p) in rows {
                    *merged.entry(profile.clone()).or_insert(0.0) += p;
                }
                merged.into_iter().filter(|(_, p)| *p > 0.0).collect()
            }
        }
    }
}

/// Which player and which value an agent stands for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentOwner {
    pub player: usize,
    pub value_index: usize,
    pub value: f64,
}

/// Partition of the agent set into per-player blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPartition {
    pub blocks: Vec<Vec<AgentId>>,
    pub owners: Vec<AgentOwner>,
}

impl AgentPartition {
    pub fn n_players(&self) -> usize {
        self.blocks.len()
    }

    pub fn agent(&self, player: usize, value_index: usize) -> AgentId {
        self.blocks[player][value_index]
    }
}

/// Agent-based model before a grid and payment rule are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    pub values: Vec<f64>,
    pub scenarios: Vec<Scenario>,
}

impl AgentModel {
    pub fn into_instance(self, grid: BidGrid, rule: PaymentRule) -> Result<AuctionInstance> {
        AuctionInstance::new(self.values, self.scenarios, grid, rule)
    }
}

/// Builds the equivalent agent-based model: one agent per (player, value), one
/// scenario per positive-probability value profile, `μ(S) = F(v_S)`.
pub fn convert_player_to_agent(auction: &PlayerAuction) -> Result<(AgentModel, AgentPartition)> {
    auction.validate()?;
    let mut values = Vec::new();
    let mut blocks = Vec::with_capacity(auction.n_players());
    let mut owners = Vec::new();
    for (player, vs) in auction.value_sets.iter().enumerate() {
        let mut block = Vec::with_capacity(vs.len());
        for (value_index, &value) in vs.iter().enumerate() {
            block.push(AgentId(values.len()));
            owners.push(AgentOwner { player, value_index, value });
            values.push(value);
        }
        blocks.push(block);
    }
    let scenarios = auction
        .profiles()
        .into_iter()
        .map(|(profile, p)| Scenario {
            members: profile.iter().enumerate().map(|(i, &k)| blocks[i][k]).collect(),
            probability: p,
        })
        .collect();
    Ok((AgentModel { values, scenarios }, AgentPartition { blocks, owners }))
}

/// Recomposes player payoffs from participation-conditional agent payoffs:
/// `π_i = Σ_{a ∈ A_i} π_a · μ(S ∋ a)`.
pub fn player_payoff(partition: &AgentPartition, agent_payoffs: &[f64], participation: &[f64]) -> Result<Vec<f64>> {
    let n = partition.owners.len();
    for len in [agent_payoffs.len(), participation.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    Ok(partition
        .blocks
        .iter()
        .map(|block| block.iter().map(|a| agent_payoffs[a.0] * participation[a.0]).sum())
        .collect())
}

/// Player payoffs computed directly in the player-based formulation by
/// enumerating value profiles and every joint bid outcome. Player `i` with
/// value index `k` plays the strategy of agent `partition.agent(i, k)`.
///
/// Exponential in the number of players; meant for small instances and tests.
pub fn player_payoff_exhaustive(
    auction: &PlayerAuction,
    partition: &AgentPartition,
    profile: &StrategyProfile,
    grid: &BidGrid,
    rule: PaymentRule,
) -> Result<Vec<f64>> {
    let n = auction.n_players();
    let mut payoffs = vec![0.0; n];
    for (values, f) in auction.profiles() {
        let supports: Vec<Vec<(usize, f64)>> = values
            .iter()
            .enumerate()
            .map(|(i, &k)| profile.strategy(partition.agent(i, k)).support().collect())
            .collect();
        let mut cursor = vec![0usize; n];
        'outcomes: loop {
            let weight: f64 = cursor.iter().zip(&supports).map(|(&c, s)| s[c].1).product();
            let bids: Vec<f64> = cursor.iter().zip(&supports).map(|(&c, s)| grid.bid(s[c].0)).collect();
            for i in 0..n {
                let own = bids[i];
                let others = bids.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &b)| b);
                if others.clone().all(|b| own > b) {
                    let second = others.fold(0.0, f64::max);
                    let value = auction.value_sets[i][values[i]];
                    payoffs[i] += f * weight * (value - rule.payment(own, second));
                }
            }
            for d in (0..n).rev() {
                cursor[d] += 1;
                if cursor[d] < supports[d].len() {
                    continue 'outcomes;
                }
                cursor[d] = 0;
            }
            break;
        }
    }
    Ok(payoffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BidGrid {
        BidGrid::uniform(1.0, 4).unwrap()
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(BidGrid::new(vec![0.0]).is_err());
        assert!(BidGrid::new(vec![0.1, 0.2]).is_err());
        assert!(BidGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(BidGrid::new(vec![0.0, 0.5, 0.4]).is_err());
        let g = BidGrid::uniform(1.0, 400).unwrap();
        assert_eq!(g.len(), 401);
        assert_eq!(g.bid(200), 0.5);
        assert_eq!(g.max(), 1.0);
        assert_eq!(g.uniform_params(), Some((1.0, 400)));
        assert_eq!(BidGrid::new(vec![0.0, 0.3, 1.0]).unwrap().uniform_params(), None);
        assert_eq!(g.nearest_index(0.501), 200);
        assert_eq!(g.nearest_index(7.0), 400);
    }

    #[test]
    fn probabilities_not_summing_to_one_are_reported() {
        let inst = AuctionInstance::from_parts_unchecked(
            vec![1.0, 1.0],
            vec![Scenario::new([0], 0.5), Scenario::new([1], 0.6)],
            grid(),
            PaymentRule::FIRST_PRICE,
        );
        let report = validate_instance(&inst);
        assert_eq!(report.violations.len(), 1);
        let msg = report.violations[0].to_string();
        assert!(msg.starts_with("probabilities sum to 1.1"), "{msg}");
    }

    #[test]
    fn absent_agent_is_reported() {
        let inst = AuctionInstance::from_parts_unchecked(
            vec![1.0, 1.0, 0.5],
            vec![Scenario::new([0, 1], 1.0)],
            grid(),
            PaymentRule::FIRST_PRICE,
        );
        let report = validate_instance(&inst);
        assert_eq!(report.violations, vec![Violation::NeverParticipates(AgentId(2))]);
        assert_eq!(report.violations[0].to_string(), "agent 2 never participates");
    }

    #[test]
    fn duplicates_merge_and_zero_scenarios_drop() {
        let inst = AuctionInstance::new(
            vec![1.0, 1.0, 1.0],
            vec![
                Scenario::new([1, 0], 0.25),
                Scenario::new([2], 0.5),
                Scenario::new([0, 1], 0.25),
                Scenario::new([0, 2], 0.0),
            ],
            grid(),
            PaymentRule::FIRST_PRICE,
        )
        .unwrap();
        assert_eq!(inst.scenarios().len(), 2);
        assert_eq!(inst.scenarios()[0].members, vec![AgentId(0), AgentId(1)]);
        assert_eq!(inst.scenarios()[0].probability, 0.5);
        assert_eq!(inst.participation(), vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn misc_violations() {
        let inst = AuctionInstance::from_parts_unchecked(
            vec![-1.0, 1.0],
            vec![Scenario::new([0, 5], 1.0), Scenario::new([], 0.0)],
            grid(),
            PaymentRule { alpha: 1.5 },
        );
        let report = validate_instance(&inst);
        assert!(report.violations.contains(&Violation::NegativeValue { agent: AgentId(0), value: -1.0 }));
        assert!(report.violations.contains(&Violation::UnknownAgent { scenario: 0, agent: 5 }));
        assert!(report.violations.contains(&Violation::NeverParticipates(AgentId(1))));
        assert!(report.violations.contains(&Violation::Alpha(1.5)));
    }

    #[test]
    fn mixed_strategy_checks() {
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
        let s = MixedStrategy::new(vec![0.25, 0.0, 0.75]).unwrap();
        assert_eq!(s.cdf(), vec![0.25, 0.25, 1.0]);
        assert_eq!(s.support().collect::<Vec<_>>(), vec![(0, 0.25), (2, 0.75)]);
    }

    #[test]
    fn convert_single_player_single_value() {
        let p = PlayerAuction::independent(vec![(vec![0.7], vec![1.0])]);
        let (model, partition) = convert_player_to_agent(&p).unwrap();
        assert_eq!(model.values, vec![0.7]);
        assert_eq!(model.scenarios, vec![Scenario::new([0], 1.0)]);
        assert_eq!(partition.blocks, vec![vec![AgentId(0)]]);
    }

    #[test]
    fn convert_rejects_empty_value_set() {
        let p = PlayerAuction::independent(vec![(vec![], vec![]), (vec![1.0], vec![1.0])]);
        assert!(matches!(convert_player_to_agent(&p), Err(Error::PlayerAuction(_))));
    }

    #[test]
    fn convert_three_independent_players() {
        let vs = vec![0.1, 0.2, 0.25];
        let p = PlayerAuction::independent(vec![
            (vs.clone(), vec![0.25, 0.25, 0.5]),
            (vs.clone(), vec![0.05, 0.45, 0.5]),
            (vs, vec![0.05, 0.45, 0.5]),
        ]);
        let (model, partition) = convert_player_to_agent(&p).unwrap();
        assert_eq!(model.values.len(), 9);
        assert_eq!(model.scenarios.len(), 27);
        let total: f64 = model.scenarios.iter().map(|s| s.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // every scenario picks exactly one agent per player
        for s in &model.scenarios {
            let players: Vec<usize> = s.members.iter().map(|a| partition.owners[a.0].player).collect();
            assert_eq!(players, vec![0, 1, 2]);
        }
        let inst = model.into_instance(grid(), PaymentRule::FIRST_PRICE).unwrap();
        let part = inst.participation();
        assert!((part[partition.agent(0, 2).0] - 0.5).abs() < 1e-12);
        assert!((part[partition.agent(1, 0).0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn convert_drops_zero_probability_profiles() {
        let p = PlayerAuction {
            value_sets: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            joint: JointDistribution::Table(vec![(vec![0, 1], 0.5), (vec![1, 0], 0.5), (vec![1, 1], 0.0)]),
        };
        let (model, _) = convert_player_to_agent(&p).unwrap();
        assert_eq!(model.scenarios.len(), 2);
    }

    #[test]
    fn player_payoff_identities() {
        let partition = AgentPartition {
            blocks: vec![vec![AgentId(0)], vec![AgentId(1)]],
            owners: vec![
                AgentOwner { player: 0, value_index: 0, value: 1.0 },
                AgentOwner { player: 1, value_index: 0, value: 1.0 },
            ],
        };
        assert_eq!(player_payoff(&partition, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(player_payoff(&partition, &[0.3, 0.7], &[1.0, 1.0]).unwrap(), vec![0.3, 0.7]);
        assert!(matches!(
            player_payoff(&partition, &[0.3], &[1.0, 1.0]),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
    }
}

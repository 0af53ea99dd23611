//! Built-in example auctions, the random pair-auction generator and the
//! instance file format.

use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    convert_player_to_agent, AgentPartition, AuctionInstance, BidGrid, JointDistribution, PaymentRule,
    PlayerAuction, Scenario,
};
use crate::solver::{LearningSchedule, SolverConfig};

/// Grid resolution used when an instance does not state one.
pub const DEFAULT_GRID_STEPS: usize = 400;

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub name: String,
    pub instance: AuctionInstance,
    pub config: SolverConfig,
    /// Published ε for this instance, if any.
    pub expected_epsilon: Option<f64>,
    /// Present when the instance was built from a player-based auction.
    pub players: Option<(PlayerAuction, AgentPartition)>,
}

/// Equal-weight averaging of past best responses (`η_k = 1/(k+1)`).
fn reference_config(max_iterations: u64) -> SolverConfig {
    SolverConfig {
        schedule: LearningSchedule::Harmonic { c: 1.0 },
        max_iterations,
        ..SolverConfig::default()
    }
}

fn agent_instance(values: Vec<f64>, scenarios: Vec<Scenario>, steps: usize) -> AuctionInstance {
    AuctionInstance::new(values, scenarios, BidGrid::uniform(1.0, steps).expect("static grid"), PaymentRule::FIRST_PRICE)
        .expect("built-in instance is valid")
}

/// Two symmetric bidders with values uniform on {0, 1}.
pub fn example_1() -> NamedInstance {
    let instance = agent_instance(
        vec![0.0, 0.0, 1.0, 1.0],
        vec![
            Scenario::new([0, 1], 0.25),
            Scenario::new([2, 3], 0.25),
            Scenario::new([0, 3], 0.25),
            Scenario::new([1, 2], 0.25),
        ],
        400,
    );
    NamedInstance {
        name: "example-1".into(),
        instance,
        config: reference_config(100_000),
        expected_epsilon: Some(8e-5),
        players: None,
    }
}

/// Three agents on a line: the middle one meets either neighbour.
pub fn example_2() -> NamedInstance {
    let instance = agent_instance(
        vec![1.0 / 3.0, 2.0 / 3.0, 1.0],
        vec![Scenario::new([0, 1], 0.5), Scenario::new([1, 2], 0.5)],
        600,
    );
    NamedInstance {
        name: "example-2".into(),
        instance,
        config: reference_config(1_000_000),
        expected_epsilon: Some(1.5e-4),
        players: None,
    }
}

pub fn example_3() -> NamedInstance {
    let instance = agent_instance(
        vec![0.25, 0.5, 0.5, 1.0],
        vec![
            Scenario::new([0, 1], 0.25),
            Scenario::new([1, 2], 0.25),
            Scenario::new([0, 2], 0.25),
            Scenario::new([0, 1, 2, 3], 0.25),
        ],
        400,
    );
    NamedInstance {
        name: "example-3".into(),
        instance,
        config: reference_config(100_000),
        expected_epsilon: Some(2.5e-3),
        players: None,
    }
}

fn from_players(name: &str, auction: PlayerAuction, expected_epsilon: f64) -> NamedInstance {
    let (model, partition) = convert_player_to_agent(&auction).expect("built-in player auction is valid");
    let max_value = model.values.iter().copied().fold(0.0, f64::max);
    let grid = BidGrid::uniform(max_value, DEFAULT_GRID_STEPS).expect("static grid");
    let instance = model.into_instance(grid, PaymentRule::FIRST_PRICE).expect("converted instance is valid");
    NamedInstance {
        name: name.into(),
        instance,
        config: SolverConfig { independent_player_cache: true, ..reference_config(100_000) },
        expected_epsilon: Some(expected_epsilon),
        players: Some((auction, partition)),
    }
}

/// Three independent players with values in {0.1, 0.2, 0.25}.
pub fn example_4_players() -> PlayerAuction {
    let values = vec![0.1, 0.2, 0.25];
    PlayerAuction::independent(vec![
        (values.clone(), vec![0.25, 0.25, 0.5]),
        (values.clone(), vec![0.05, 0.45, 0.5]),
        (values, vec![0.05, 0.45, 0.5]),
    ])
}

pub fn example_4() -> NamedInstance {
    from_players("example-4", example_4_players(), 4e-5)
}

/// Two independent players, the first with two possible values.
pub fn example_5_players() -> PlayerAuction {
    PlayerAuction::independent(vec![
        (vec![0.1, 0.25], vec![0.25, 0.75]),
        (vec![0.1, 0.2, 0.25], vec![0.05, 0.45, 0.5]),
    ])
}

pub fn example_5() -> NamedInstance {
    from_players("example-5", example_5_players(), 9e-4)
}

/// Random pair auctions: `n_agents` values i.i.d. uniform on `[0, 1]` and
/// `n_scenarios` uniformly drawn pairs of equal probability. Repeated pairs
/// are merged; agents left out of every pair are dropped.
pub fn random_instance(seed: u64, n_agents: usize, n_scenarios: usize) -> Result<NamedInstance> {
    if n_agents < 2 {
        return Err(Error::Config(format!("random instances need at least 2 agents, got {n_agents}")));
    }
    if n_scenarios == 0 {
        return Err(Error::Config("random instances need at least one scenario".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n_agents).map(|_| rng.gen::<f64>()).collect();
    let prob = 1.0 / n_scenarios as f64;
    let pairs: Vec<(usize, usize)> = (0..n_scenarios)
        .map(|_| {
            let i = rng.gen_range(0..n_agents);
            let mut j = rng.gen_range(0..n_agents - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();

    let mut used = vec![false; n_agents];
    for &(i, j) in &pairs {
        used[i] = true;
        used[j] = true;
    }
    let mut remap = vec![usize::MAX; n_agents];
    let mut kept = Vec::new();
    for (a, &u) in used.iter().enumerate() {
        if u {
            remap[a] = kept.len();
            kept.push(values[a]);
        } else {
            warn!("seed {seed}: agent {a} drawn in no pair, dropped");
        }
    }
    let scenarios = pairs.iter().map(|&(i, j)| Scenario::new([remap[i], remap[j]], prob)).collect();
    let instance = AuctionInstance::new(kept, scenarios, BidGrid::uniform(1.0, 100)?, PaymentRule::FIRST_PRICE)?;
    Ok(NamedInstance {
        name: format!("random-seed{seed}"),
        instance,
        config: reference_config(1_000_000),
        expected_epsilon: None,
        players: None,
    })
}

/// Built-in example by number; 6 is the random generator with seed 0.
pub fn example(number: u32) -> Result<NamedInstance> {
    match number {
        1 => Ok(example_1()),
        2 => Ok(example_2()),
        3 => Ok(example_3()),
        4 => Ok(example_4()),
        5 => Ok(example_5()),
        6 => random_instance(0, 10, 20),
        n => Err(Error::Config(format!("no built-in example {n}; choose 1 to 6"))),
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Uniform { max: f64, steps: usize },
    Points { points: Vec<f64> },
}

impl GridSpec {
    pub fn build(&self) -> Result<BidGrid> {
        match self {
            GridSpec::Uniform { max, steps } => BidGrid::uniform(*max, *steps),
            GridSpec::Points { points } => BidGrid::new(points.clone()),
        }
    }

    pub fn of(grid: &BidGrid) -> Self {
        match grid.uniform_params() {
            Some((max, steps)) => GridSpec::Uniform { max, steps },
            None => GridSpec::Points { points: grid.bids().to_vec() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub members: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSpec {
    pub values: Vec<f64>,
    /// Marginal probabilities; ignored when a joint table is given.
    #[serde(default)]
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    /// One value index per player.
    pub profile: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    #[serde(default = "first_price_alpha")]
    pub alpha: f64,
}

fn first_price_alpha() -> f64 {
    1.0
}

/// Solver settings a file may carry; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_interval: Option<u64>,
}

impl SolverSpec {
    pub fn apply(&self, config: &mut SolverConfig) -> Result<()> {
        let c = self.eta_c.unwrap_or(match config.schedule {
            LearningSchedule::Harmonic { c } | LearningSchedule::Constant { c } => c,
        });
        let kind = self.eta_kind.as_deref().unwrap_or(match config.schedule {
            LearningSchedule::Harmonic { .. } => "harmonic",
            LearningSchedule::Constant { .. } => "constant",
        });
        config.schedule = match kind {
            "harmonic" => LearningSchedule::Harmonic { c },
            "constant" => LearningSchedule::Constant { c },
            other => return Err(Error::Config(format!("unknown schedule kind {other:?}"))),
        };
        if let Some(n) = self.max_iters {
            config.max_iterations = n;
        }
        if let Some(t) = self.eps_target {
            config.epsilon_target = Some(t);
        }
        if let Some(c) = self.check_interval {
            config.check_interval = c;
        }
        Ok(())
    }
}

/// On-disk instance. Agent-based files set `values` and `scenarios`;
/// player-based files set `players` and optionally `joint`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<Vec<ScenarioSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<PlayerSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<JointRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub name: Option<String>,
    pub instance: AuctionInstance,
    pub players: Option<(PlayerAuction, AgentPartition)>,
    pub solver: Option<SolverSpec>,
}

impl InstanceFile {
    pub fn from_instance(name: Option<&str>, instance: &AuctionInstance) -> Self {
        Self {
            name: name.map(str::to_owned),
            values: Some(instance.values().to_vec()),
            scenarios: Some(
                instance
                    .scenarios()
                    .iter()
                    .map(|s| ScenarioSpec { members: s.members.iter().map(|a| a.0).collect(), prob: s.probability })
                    .collect(),
            ),
            grid: Some(GridSpec::of(instance.grid())),
            rule: Some(RuleSpec { alpha: instance.rule().alpha }),
            ..Self::default()
        }
    }

    pub fn from_players(name: Option<&str>, auction: &PlayerAuction, grid: &BidGrid, rule: PaymentRule) -> Self {
        let (players, joint) = match &auction.joint {
            JointDistribution::Independent(marginals) => (
                auction
                    .value_sets
                    .iter()
                    .zip(marginals)
                    .map(|(v, p)| PlayerSpec { values: v.clone(), probs: p.clone() })
                    .collect(),
                None,
            ),
            JointDistribution::Table(rows) => (
                auction.value_sets.iter().map(|v| PlayerSpec { values: v.clone(), probs: Vec::new() }).collect(),
                Some(rows.iter().map(|(profile, prob)| JointRow { profile: profile.clone(), prob: *prob }).collect()),
            ),
        };
        Self {
            name: name.map(str::to_owned),
            players: Some(players),
            joint,
            grid: Some(GridSpec::of(grid)),
            rule: Some(RuleSpec { alpha: rule.alpha }),
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance file serializes")
    }

    /// Builds the agent-based instance, converting player-based files.
    pub fn resolve(self) -> Result<LoadedInstance> {
        let rule = PaymentRule::mixture(self.rule.map_or(1.0, |r| r.alpha))?;
        match (self.values, self.scenarios, self.players) {
            (Some(values), Some(scenarios), None) => {
                let grid = match &self.grid {
                    Some(spec) => spec.build()?,
                    None => BidGrid::uniform(1.0, DEFAULT_GRID_STEPS)?,
                };
                let scenarios = scenarios.into_iter().map(|s| Scenario::new(s.members, s.prob)).collect();
                Ok(LoadedInstance {
                    name: self.name,
                    instance: AuctionInstance::new(values, scenarios, grid, rule)?,
                    players: None,
                    solver: self.solver,
                })
            }
            (None, None, Some(players)) => {
                let value_sets: Vec<Vec<f64>> = players.iter().map(|p| p.values.clone()).collect();
                let joint = match self.joint {
                    Some(rows) => JointDistribution::Table(rows.into_iter().map(|r| (r.profile, r.prob)).collect()),
                    None => JointDistribution::Independent(players.into_iter().map(|p| p.probs).collect()),
                };
                let auction = PlayerAuction { value_sets, joint };
                let (model, partition) = convert_player_to_agent(&auction)?;
                let grid = match &self.grid {
                    Some(spec) => spec.build()?,
                    None => {
                        let max = model.values.iter().copied().fold(0.0, f64::max);
                        BidGrid::uniform(if max > 0.0 { max } else { 1.0 }, DEFAULT_GRID_STEPS)?
                    }
                };
                Ok(LoadedInstance {
                    name: self.name,
                    instance: model.into_instance(grid, rule)?,
                    players: Some((auction, partition)),
                    solver: self.solver,
                })
            }
            _ => Err(Error::PlayerAuction(
                "an instance file needs either `values` and `scenarios`, or `players`".into(),
            )),
        }
    }
}

pub fn parse_instance(json: &str) -> Result<LoadedInstance> {
    serde_json::from_str::<InstanceFile>(json)?.resolve()
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<LoadedInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse_instance(&text)
}

//! Fictitious bidding.
//!
//! Every iteration, all agents best-respond to the same snapshot of the current
//! profile, then each strategy moves toward a point mass at its best response:
//! `γ_a ← (1 − η_k)·γ_a + η_k·δ_{b_a}`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_instance, AgentId, AuctionInstance, MixedStrategy, StrategyProfile};
use crate::payoff::{strict_cdf, PayoffEngine, Scratch, StrictCdfTable};
use crate::verify::{argmax_lowest, certify_with, EquilibriumCertificate};

/// Above this distance from 1 a strategy is renormalized.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearningSchedule {
    /// `η_k = c / (k + 1)`; `c = 1` is classical fictitious play.
    Harmonic { c: f64 },
    /// `η_k = c`, an exponential moving average.
    Constant { c: f64 },
}

impl LearningSchedule {
    pub fn rate(&self, k: u64) -> f64 {
        match *self {
            LearningSchedule::Harmonic { c } => c / (k as f64 + 1.0),
            LearningSchedule::Constant { c } => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = match *self {
            LearningSchedule::Harmonic { c } | LearningSchedule::Constant { c } => c,
        };
        if c > 0.0 && c <= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("learning-rate coefficient {c} outside (0, 1]")))
        }
    }
}

impl fmt::Display for LearningSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearningSchedule::Harmonic { c } => write!(f, "harmonic({c})"),
            LearningSchedule::Constant { c } => write!(f, "constant({c})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    Uniform,
    PointMassAtZero,
    /// Independent uniform weights, normalized; reproducible from the seed.
    Random { seed: u64 },
    Explicit(StrategyProfile),
}

impl Initialization {
    pub fn profile(&self, instance: &AuctionInstance) -> Result<StrategyProfile> {
        let (n, g) = (instance.n_agents(), instance.grid().len());
        let profile = match self {
            Initialization::Uniform => StrategyProfile::uniform(n, g),
            Initialization::PointMassAtZero => StrategyProfile::point_mass(n, g, 0),
            Initialization::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                StrategyProfile::new(
                    (0..n)
                        .map(|_| {
                            let raw: Vec<f64> = (0..g).map(|_| rng.gen::<f64>()).collect();
                            let total: f64 = raw.iter().sum();
                            MixedStrategy::new(raw.iter().map(|w| w / total).collect())
                        })
                        .collect::<Result<_>>()?,
                )
            }
            Initialization::Explicit(profile) => profile.clone(),
        };
        profile.check_dimensions(instance)?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedule: LearningSchedule,
    pub max_iterations: u64,
    pub epsilon_target: Option<f64>,
    pub check_interval: u64,
    pub init: Initialization,
    /// Evaluate each distinct opponent set once per iteration and share the
    /// result between all agents facing it. Bit-identical to the uncached path.
    pub independent_player_cache: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            schedule: LearningSchedule::Harmonic { c: 1.0 },
            max_iterations: 100_000,
            epsilon_target: None,
            check_interval: 1000,
            init: Initialization::Uniform,
            independent_player_cache: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.check_interval == 0 {
            return Err(Error::Config("check_interval must be positive".into()));
        }
        if let Some(t) = self.epsilon_target {
            if !(t >= 0.0) {
                return Err(Error::Config(format!("epsilon target {t} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Harmonic schedule with `c = 1` started from a point mass, so that the
/// profile after `k` steps is exactly the empirical frequency of the first
/// `k` best responses.
pub fn classical_fp_equivalence_mode(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        schedule: LearningSchedule::Harmonic { c: 1.0 },
        init: Initialization::PointMassAtZero,
        ..config.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub profile: StrategyProfile,
    pub iterations_run: u64,
    pub certificate: EquilibriumCertificate,
    /// `(iterations completed, ε)` at every check.
    pub trajectory: Vec<(u64, f64)>,
    pub renormalizations: u64,
    /// Largest `|Σ weights − 1|` observed after an update, before any renormalization.
    pub max_drift: f64,
}

/// Best pure bid of `agent` against `profile`: lowest grid index of the maximum payoff.
pub fn best_response(agent: AgentId, profile: &StrategyProfile, instance: &AuctionInstance) -> Result<(usize, f64)> {
    let curve = crate::payoff::payoff_curve(agent, profile, instance)?;
    Ok(argmax_lowest(&curve))
}

/// One simultaneous fictitious-bidding step at iteration `k`.
pub fn fb_step(profile: &StrategyProfile, k: u64, config: &SolverConfig, instance: &AuctionInstance) -> Result<StrategyProfile> {
    config.validate()?;
    profile.check_dimensions(instance)?;
    let mut state = FictitiousBidding::from_profile(instance, config, profile.clone(), k);
    state.step();
    Ok(state.into_profile())
}

/// Iterates fictitious bidding per `config`, certifying every `check_interval` steps.
pub fn run(instance: &AuctionInstance, config: &SolverConfig) -> Result<SolverResult> {
    let report = validate_instance(instance);
    if !report.is_valid() {
        return Err(Error::Invalid(report));
    }
    config.validate()?;
    let mut state = FictitiousBidding::new(instance, config)?;
    let mut trajectory = Vec::new();
    while state.iteration() < config.max_iterations {
        state.step();
        let done = state.iteration();
        if done % config.check_interval == 0 || done == config.max_iterations {
            let eps = state.certificate().epsilon;
            trajectory.push((done, eps));
            if config.epsilon_target.is_some_and(|t| eps <= t) {
                break;
            }
        }
    }
    let certificate = state.certificate();
    Ok(SolverResult {
        iterations_run: state.iteration(),
        renormalizations: state.renormalizations,
        max_drift: state.max_drift,
        profile: state.into_profile(),
        certificate,
        trajectory,
    })
}

/// Solver state with preallocated buffers; one [`Self::step`] per iteration.
pub struct FictitiousBidding<'a> {
    engine: PayoffEngine<'a>,
    schedule: LearningSchedule,
    shared_cache: bool,
    profile: StrategyProfile,
    cdf: StrictCdfTable,
    scratch: Scratch,
    curve: Vec<f64>,
    responses: Vec<usize>,
    k: u64,
    renormalizations: u64,
    max_drift: f64,
}

impl<'a> FictitiousBidding<'a> {
    pub fn new(instance: &'a AuctionInstance, config: &SolverConfig) -> Result<Self> {
        let profile = config.init.profile(instance)?;
        Ok(Self::from_profile(instance, config, profile, 0))
    }

    fn from_profile(instance: &'a AuctionInstance, config: &SolverConfig, profile: StrategyProfile, k: u64) -> Self {
        let g = instance.grid().len();
        Self {
            engine: PayoffEngine::new(instance),
            schedule: config.schedule,
            shared_cache: config.independent_player_cache,
            cdf: strict_cdf(&profile, instance.grid()),
            profile,
            scratch: Scratch::new(g),
            curve: vec![0.0; g],
            responses: vec![0; instance.n_agents()],
            k,
            renormalizations: 0,
            max_drift: 0.0,
        }
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn profile(&self) -> &StrategyProfile {
        &self.profile
    }

    pub fn into_profile(self) -> StrategyProfile {
        self.profile
    }

    pub fn renormalizations(&self) -> u64 {
        self.renormalizations
    }

    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Best responses computed in the most recent step.
    pub fn last_responses(&self) -> &[usize] {
        &self.responses
    }

    pub fn certificate(&self) -> EquilibriumCertificate {
        certify_with(&self.engine, &self.profile)
    }

    pub fn step(&mut self) {
        self.cdf.update(&self.profile);
        if self.shared_cache {
            self.engine.prepare_shared(&self.cdf, &mut self.scratch);
        }
        for a in 0..self.profile.len() {
            let agent = AgentId(a);
            if self.shared_cache {
                self.engine.curve_from_shared(agent, &mut self.curve, &self.scratch);
            } else {
                self.engine.curve_into(agent, &self.cdf, &mut self.curve, &mut self.scratch);
            }
            self.responses[a] = argmax_lowest(&self.curve).0;
        }

        let eta = self.schedule.rate(self.k);
        let keep = 1.0 - eta;
        for (strategy, &br) in self.profile.strategies_mut().iter_mut().zip(&self.responses) {
            let weights = strategy.weights_mut();
            for w in weights.iter_mut() {
                *w *= keep;
            }
            weights[br] += eta;
            let drift = (weights.iter().sum::<f64>() - 1.0).abs();
            self.max_drift = self.max_drift.max(drift);
            if drift > RENORMALIZE_THRESHOLD {
                let total: f64 = weights.iter().sum();
                for w in weights.iter_mut() {
                    *w /= total;
                }
                self.renormalizations += 1;
            }
        }
        self.k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BidGrid, PaymentRule, Scenario};

    fn lone_bidder() -> AuctionInstance {
        AuctionInstance::new(vec![1.0], vec![Scenario::new([0], 1.0)], BidGrid::uniform(1.0, 2).unwrap(), PaymentRule::FIRST_PRICE)
            .unwrap()
    }

    fn pair() -> AuctionInstance {
        AuctionInstance::new(
            vec![1.0, 0.6],
            vec![Scenario::new([0, 1], 0.7), Scenario::new([0], 0.3)],
            BidGrid::uniform(1.0, 10).unwrap(),
            PaymentRule::FIRST_PRICE,
        )
        .unwrap()
    }

    #[test]
    fn schedules() {
        let h = LearningSchedule::Harmonic { c: 0.01 };
        assert_eq!(h.rate(0), 0.01);
        assert_eq!(h.rate(9), 0.001);
        assert_eq!(LearningSchedule::Constant { c: 0.2 }.rate(1000), 0.2);
        assert!(LearningSchedule::Constant { c: 0.0 }.validate().is_err());
        assert!(LearningSchedule::Harmonic { c: 1.5 }.validate().is_err());
        let cfg = SolverConfig { check_interval: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn lone_bidder_bids_zero() {
        let inst = lone_bidder();
        assert_eq!(best_response(AgentId(0), &StrategyProfile::uniform(1, 3), &inst).unwrap(), (0, 1.0));
    }

    #[test]
    fn ties_in_argmax_go_to_lowest_index() {
        // the opponent bids 1: every bid of the value-0 agent loses or ties and earns 0
        let inst = AuctionInstance::new(
            vec![0.0, 1.0],
            vec![Scenario::new([0, 1], 1.0)],
            BidGrid::uniform(1.0, 4).unwrap(),
            PaymentRule::FIRST_PRICE,
        )
        .unwrap();
        let profile = StrategyProfile::point_mass(2, 5, 4);
        assert_eq!(best_response(AgentId(0), &profile, &inst).unwrap(), (0, 0.0));
    }

    #[test]
    fn full_step_jumps_to_best_response() {
        let inst = pair();
        let cfg = SolverConfig { schedule: LearningSchedule::Constant { c: 1.0 }, ..Default::default() };
        let profile = StrategyProfile::uniform(2, 11);
        let next = fb_step(&profile, 0, &cfg, &inst).unwrap();
        for a in inst.agents() {
            let (br, _) = best_response(a, &profile, &inst).unwrap();
            assert_eq!(next.strategy(a), &MixedStrategy::point_mass(11, br));
        }
    }

    #[test]
    fn tiny_step_barely_moves() {
        let inst = pair();
        let cfg = SolverConfig { schedule: LearningSchedule::Constant { c: 1e-15 }, ..Default::default() };
        let profile = StrategyProfile::uniform(2, 11);
        let next = fb_step(&profile, 0, &cfg, &inst).unwrap();
        for (a, b) in next.strategies().iter().zip(profile.strategies()) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let inst = pair();
        let cfg = SolverConfig { max_iterations: 0, ..Default::default() };
        let res = run(&inst, &cfg).unwrap();
        assert_eq!(res.iterations_run, 0);
        assert_eq!(res.profile, StrategyProfile::uniform(2, 11));
        assert!(res.trajectory.is_empty());
        assert_eq!(res.certificate, crate::verify::certify(&res.profile, &inst).unwrap());
    }

    #[test]
    fn stops_at_target() {
        let inst = lone_bidder();
        let cfg = SolverConfig {
            schedule: LearningSchedule::Constant { c: 1.0 },
            max_iterations: 50,
            check_interval: 1,
            epsilon_target: Some(0.0),
            ..Default::default()
        };
        let res = run(&inst, &cfg).unwrap();
        assert_eq!(res.iterations_run, 1);
        assert_eq!(res.certificate.epsilon, 0.0);
    }

    #[test]
    fn invalid_instance_is_rejected() {
        let inst = AuctionInstance::from_parts_unchecked(
            vec![1.0, 1.0],
            vec![Scenario::new([0], 0.5)],
            BidGrid::uniform(1.0, 2).unwrap(),
            PaymentRule::FIRST_PRICE,
        );
        assert!(matches!(run(&inst, &SolverConfig::default()), Err(Error::Invalid(_))));
    }

    #[test]
    fn random_init_is_reproducible() {
        let inst = pair();
        let a = Initialization::Random { seed: 7 }.profile(&inst).unwrap();
        let b = Initialization::Random { seed: 7 }.profile(&inst).unwrap();
        let c = Initialization::Random { seed: 8 }.profile(&inst).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

//! Monte Carlo simulation of the controlled cascade.
//!
//! Every replication `r` of a run with master seed `s` draws from two
//! ChaCha8 streams keyed by `s`: stream `2r` drives the transitions and
//! stream `2r + 1` the policy's own randomness. Each step consumes exactly
//! one uniform per node from the transition stream whatever the outcome,
//! so policies compared under the same seed see the same random numbers.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::{compensated_sum, powi, sqrt, unit_f64};
use crate::fmdp::{ActionVector, FactoredModel, ModelError, SystemState};
use crate::network::Layer;
use crate::policy::{Policy, PolicyError};

/// Generator identity recorded in reports.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.10); rep r uses stream 2r for transitions, 2r+1 for policy draws";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid simulation settings: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub horizon: usize,
    pub reps: usize,
    pub seed: u64,
    /// Steps after a repair or maintenance action during which the node cannot fail.
    pub immunity: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { horizon: 200, reps: 50, seed: 0, immunity: 0 }
    }
}

impl SimConfig {
    fn check(&self) -> Result<(), SimError> {
        if self.horizon == 0 {
            return Err(SimError::Config("horizon must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(SimError::Config("reps must be at least 1".into()));
        }
        Ok(())
    }
}

/// The two generator streams of one replication.
#[derive(Debug, Clone)]
pub struct RepRng {
    pub transition: ChaCha8Rng,
    pub policy: ChaCha8Rng,
}

impl RepRng {
    pub fn new(seed: u64, rep: u64) -> Self {
        let mut transition = ChaCha8Rng::seed_from_u64(seed);
        transition.set_stream(2 * rep);
        let mut policy = ChaCha8Rng::seed_from_u64(seed);
        policy.set_stream(2 * rep + 1);
        RepRng { transition, policy }
    }
}

fn check_state(model: &FactoredModel, x: &SystemState) -> Result<(), ModelError> {
    if x.len() == model.n() {
        Ok(())
    } else {
        Err(ModelError::Dimension { expected: model.n(), got: x.len() })
    }
}

/// Samples the next state: node `i` works iff its uniform draw falls below
/// `P(Xᵢ′ = 1 | x_scope(i), aᵢ)`.
pub fn step<R: Rng + ?Sized>(
    model: &FactoredModel,
    x: &SystemState,
    a: &ActionVector,
    rng: &mut R,
) -> Result<SystemState, ModelError> {
    check_state(model, x)?;
    if a.len() != model.n() {
        return Err(ModelError::Dimension { expected: model.n(), got: a.len() });
    }
    let mut next = SystemState::all(model.n(), false);
    for i in 0..model.n() {
        let u = unit_f64(rng);
        next.set(i, u < model.g_state(i, x, a.get(i)));
    }
    Ok(next)
}

/// Per-node immunity counters for the post-action immunity window.
#[derive(Debug, Clone)]
struct Immunity {
    window: usize,
    left: Vec<usize>,
}

impl Immunity {
    fn new(n: usize, window: usize) -> Self {
        Immunity { window, left: vec![0; n] }
    }

    fn apply(&mut self, a: &ActionVector, next: &mut SystemState) {
        if self.window == 0 {
            return;
        }
        for i in 0..next.len() {
            if self.left[i] > 0 {
                next.set(i, true);
                self.left[i] -= 1;
            }
            if a.get(i) {
                self.left[i] = self.window;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `T + 1` states starting at `x0`.
    pub states: Vec<SystemState>,
    pub actions: Vec<ActionVector>,
    /// `R(xᵗ, aᵗ)` for `t < T`.
    pub rewards: Vec<f64>,
    pub seed: u64,
    pub rep: u64,
}

impl Trajectory {
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut disc = 1.0;
        let mut terms = Vec::with_capacity(self.rewards.len());
        for r in &self.rewards {
            terms.push(disc * r);
            disc *= gamma;
        }
        compensated_sum(terms)
    }
}

/// Drives one replication, calling `observe(t, xᵗ, aᵗ, rᵗ)` for `t < T`
/// and `observe(T, xᵀ, None, 0)` at the end.
fn run<F>(
    model: &FactoredModel,
    policy: &Policy,
    x0: &SystemState,
    horizon: usize,
    immunity: usize,
    rng: &mut RepRng,
    mut observe: F,
) -> Result<(), SimError>
where
    F: FnMut(usize, &SystemState, Option<&ActionVector>, f64),
{
    check_state(model, x0)?;
    let mut imm = Immunity::new(model.n(), immunity);
    let mut x = x0.clone();
    for t in 0..horizon {
        let a = policy.act(model, &x, &mut rng.policy)?;
        let r = model.reward(&x, &a)?;
        observe(t, &x, Some(&a), r);
        let mut next = step(model, &x, &a, &mut rng.transition)?;
        imm.apply(&a, &mut next);
        x = next;
    }
    observe(horizon, &x, None, 0.0);
    Ok(())
}

/// Simulates `horizon` steps of `policy` from `x0`.
pub fn rollout(
    model: &FactoredModel,
    policy: &Policy,
    x0: &SystemState,
    horizon: usize,
    immunity: usize,
    seed: u64,
    rep: u64,
) -> Result<Trajectory, SimError> {
    if horizon == 0 {
        return Err(SimError::Config("horizon must be at least 1".into()));
    }
    let mut rng = RepRng::new(seed, rep);
    let mut tr = Trajectory {
        states: Vec::with_capacity(horizon + 1),
        actions: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        seed,
        rep,
    };
    run(model, policy, x0, horizon, immunity, &mut rng, |_, x, a, r| {
        tr.states.push(x.clone());
        if let Some(a) = a {
            tr.actions.push(a.clone());
            tr.rewards.push(r);
        }
    })?;
    Ok(tr)
}

/// `γᵀ R_max / (1 − γ)`: how far a `T`-step return can be from the infinite one.
pub fn truncation_budget(model: &FactoredModel, horizon: usize) -> f64 {
    let g = model.gamma();
    powi(g, horizon) * model.max_abs_reward() / (1.0 - g)
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (values.len() - 1) as f64
}

fn stderr(values: &[f64]) -> f64 {
    sqrt(variance(values) / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√reps`; zero when `reps = 1`.
    pub stderr: f64,
    pub reps: usize,
    pub horizon: usize,
    pub truncation_budget: f64,
    /// Set when a single replication makes the standard error meaningless.
    pub single_rep: bool,
    /// Discounted return of each replication.
    pub per_rep: Vec<f64>,
}

impl ValueEstimate {
    fn from_returns(model: &FactoredModel, per_rep: Vec<f64>, horizon: usize) -> Self {
        ValueEstimate {
            mean: mean(&per_rep),
            stderr: stderr(&per_rep),
            reps: per_rep.len(),
            horizon,
            truncation_budget: truncation_budget(model, horizon),
            single_rep: per_rep.len() == 1,
            per_rep,
        }
    }
}

fn discounted_returns(
    model: &FactoredModel,
    policy: &Policy,
    x0: &SystemState,
    cfg: &SimConfig,
) -> Result<Vec<f64>, SimError> {
    cfg.check()?;
    let gamma = model.gamma();
    (0..cfg.reps as u64)
        .map(|r| {
            let mut rng = RepRng::new(cfg.seed, r);
            let mut terms = Vec::with_capacity(cfg.horizon);
            let mut disc = 1.0;
            run(model, policy, x0, cfg.horizon, cfg.immunity, &mut rng, |_, _, a, rew| {
                if a.is_some() {
                    terms.push(disc * rew);
                    disc *= gamma;
                }
            })?;
            Ok(compensated_sum(terms))
        })
        .collect()
}

/// Mean discounted `T`-step return of `policy` from `x0` over `reps` replications.
pub fn estimate_value(
    model: &FactoredModel,
    policy: &Policy,
    x0: &SystemState,
    cfg: &SimConfig,
) -> Result<ValueEstimate, SimError> {
    let returns = discounted_returns(model, policy, x0, cfg)?;
    Ok(ValueEstimate::from_returns(model, returns, cfg.horizon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub step: usize,
    pub mean_working: f64,
    pub var_working: f64,
    /// Reward of the working nodes as a percentage of the all-working reward.
    pub mean_reward: f64,
    pub mean_connectivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerPoint {
    pub step: usize,
    pub mean_working: f64,
    pub var_working: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSeries {
    pub layer: Layer,
    pub size: usize,
    pub points: Vec<LayerPoint>,
}

/// Per-step statistics over replications, for `t = 0 ..= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResilienceSeries {
    pub points: Vec<SeriesPoint>,
    pub layers: Vec<LayerSeries>,
    pub reps: usize,
}

impl ResilienceSeries {
    pub fn layer(&self, layer: Layer) -> Option<&LayerSeries> {
        self.layers.iter().find(|l| l.layer == layer)
    }
}

/// Working count, reward and connectivity statistics per step.
pub fn resilience_series(
    model: &FactoredModel,
    policy: &Policy,
    x0: &SystemState,
    cfg: &SimConfig,
) -> Result<ResilienceSeries, SimError> {
    cfg.check()?;
    let network = model.network();
    let layers: Vec<(Layer, Vec<usize>)> = [Layer::Power, Layer::Subway, Layer::Generic]
        .into_iter()
        .map(|l| (l, network.layer_members(l).collect::<Vec<_>>()))
        .filter(|(_, m)| !m.is_empty())
        .collect();
    let max_reward = model.max_state_reward();
    let steps = cfg.horizon + 1;
    // [step][rep]
    let mut working = vec![Vec::with_capacity(cfg.reps); steps];
    let mut reward = vec![Vec::with_capacity(cfg.reps); steps];
    let mut connectivity = vec![Vec::with_capacity(cfg.reps); steps];
    let mut layer_working = vec![vec![Vec::with_capacity(cfg.reps); steps]; layers.len()];
    for r in 0..cfg.reps as u64 {
        let mut rng = RepRng::new(cfg.seed, r);
        run(model, policy, x0, cfg.horizon, cfg.immunity, &mut rng, |t, x, _, _| {
            working[t].push(x.count_ones() as f64);
            let share = if max_reward > 0.0 { 100.0 * model.state_reward(x) / max_reward } else { 0.0 };
            reward[t].push(share);
            connectivity[t].push(network.connectivity_metric(x));
            for (k, (_, members)) in layers.iter().enumerate() {
                layer_working[k][t].push(members.iter().filter(|&&i| x.get(i)).count() as f64);
            }
        })?;
    }
    let points = (0..steps)
        .map(|t| SeriesPoint {
            step: t,
            mean_working: mean(&working[t]),
            var_working: variance(&working[t]),
            mean_reward: mean(&reward[t]),
            mean_connectivity: mean(&connectivity[t]),
        })
        .collect();
    let layers = layers
        .iter()
        .zip(layer_working)
        .map(|((layer, members), per_step)| LayerSeries {
            layer: *layer,
            size: members.len(),
            points: per_step
                .iter()
                .enumerate()
                .map(|(t, v)| LayerPoint { step: t, mean_working: mean(v), var_working: variance(v) })
                .collect(),
        })
        .collect();
    Ok(ResilienceSeries { points, layers, reps: cfg.reps })
}

/// Value estimates of several policies under common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub estimates: Vec<ValueEstimate>,
}

impl Comparison {
    /// Mean of `estimates[i] − estimates[j]` over replications.
    pub fn paired_mean(&self, i: usize, j: usize) -> f64 {
        mean(&self.differences(i, j))
    }

    /// Standard error of the paired per-replication difference.
    pub fn paired_stderr(&self, i: usize, j: usize) -> f64 {
        stderr(&self.differences(i, j))
    }

    fn differences(&self, i: usize, j: usize) -> Vec<f64> {
        self.estimates[i].per_rep.iter().zip(&self.estimates[j].per_rep).map(|(a, b)| a - b).collect()
    }
}

/// Estimates every policy with the same seed, so replication `r` of each
/// policy sees the same random streams.
pub fn compare_policies(
    model: &FactoredModel,
    policies: &[Policy],
    x0: &SystemState,
    cfg: &SimConfig,
) -> Result<Comparison, SimError> {
    let estimates = policies.iter().map(|p| estimate_value(model, p, x0, cfg)).collect::<Result<_, _>>()?;
    Ok(Comparison { estimates })
}

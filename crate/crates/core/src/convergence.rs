//! Monte Carlo harness for the stochastic critic-convergence bound.
//!
//! A trial jointly integrates the environment (Euler–Maruyama, or RK4 when
//! the model is deterministic) and the critic weights (explicit Euler). Each
//! trial has two phases:
//!
//! 1. a warm-up of fixed duration during which the replay buffer is filled
//!    until the excitation level reaches the configured threshold (the critic
//!    is frozen, so the weight error at the end of warm-up equals the initial
//!    one), and
//! 2. the measured phase, logging `|theta_err|^2`, `lambda_min(E)`, the
//!    perturbation magnitude `|Z|` and the state norm on a fixed grid.
//!
//! Anchoring the clock at the end of warm-up matters: the excitation
//! condition the bound relies on only holds from that point on.
//!
//! The bound itself is
//!
//! ```text
//! E[|err_t|^2] <= exp(-alpha eps t) |err_0|^2 + D sup_{tau<=t} sqrt(E[|err_tau|^2]),
//! D = M C Xbar / 2,
//! ```
//!
//! with `C` the quadratic-growth constant of `|Z|`, `Xbar` the fourth-moment
//! bound of the state, and `eps` the realized excitation level. All constants
//! are estimated from the trials themselves (with deliberate inflation) and
//! the empirical mean square is compared against the bound at every grid
//! point, allowing three Monte Carlo standard errors.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::critic::{
    critic_step, hamiltonian_true, push_until_pe, CriticState, ReplayBuffer, ReplaySample,
};
use crate::envs::{step_euler_maruyama, step_rk4, EnvModel, StageCost};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::{Control, State};

/// Which policy drives the environment while the critic learns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BehaviorPolicy {
    /// `mu == 0`; the generic-action Hamiltonian does not vanish.
    Zero,
    /// `mu == kappa*`; the perturbation term is identically zero.
    Optimal,
    /// `mu == kappa* - K|x|^2/(A + |x|^2)`: the robustified optimum.
    OptimalPlusRobustifier { gain: f64, offset: f64 },
    /// Greedy minimizer of the Hamiltonian under the current critic weights
    /// (on-policy; the policy improves as the critic learns).
    GreedyFromCritic,
}

/// Exploration restarts used during warm-up to diversify the replay buffer:
/// every `period` time units the state is re-drawn uniformly from the box
/// `[-radius, radius]^n`. Restarts never happen in the measured phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exploration {
    pub period: f64,
    pub radius: f64,
}

/// Configuration of one critic-learning trial (shared across seeds).
#[derive(Clone)]
pub struct TrialSetup {
    pub env: EnvModel,
    pub cost: StageCost,
    pub features: FeatureMap,
    pub policy: BehaviorPolicy,
    /// Critic learning rate `alpha`.
    pub alpha: f64,
    /// Initial critic weights.
    pub theta0: DVector<f64>,
    /// Replay capacity `M`.
    pub buffer_size: usize,
    /// Excitation level the warm-up must reach.
    pub pe_threshold: f64,
    /// Warm-up duration (time units).
    pub warmup: f64,
    /// State restarts during warm-up.
    pub exploration: Option<Exploration>,
    /// Integrator steps between buffer pushes.
    pub sample_stride: usize,
    pub x0: State,
    pub dt: f64,
    /// Measured-phase duration.
    pub horizon: f64,
    /// Integrator steps between log points.
    pub log_stride: usize,
}

/// Logged series of one trial. Times are relative to the end of warm-up.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    /// `|theta - theta*|^2`.
    pub weight_error_sq: Vec<f64>,
    /// `lambda_min(E_t)` of the replay buffer.
    pub lambda_min: Vec<f64>,
    /// `|Z|` at the live state-action pair.
    pub z_abs: Vec<f64>,
    /// `sum_k |Z_k|` over the buffer.
    pub z_sum_abs: Vec<f64>,
    /// `|x_t|`.
    pub state_norm: Vec<f64>,
    /// Critic weights (flattened) at each log point.
    pub thetas: Vec<Vec<f64>>,
    /// Absolute time at which the excitation threshold was reached.
    pub pe_established_at: f64,
    /// Minimum `lambda_min(E_t)` over the measured phase.
    pub realized_epsilon: f64,
    /// Weight error at the start of the measured phase.
    pub theta0_error_sq: f64,
}

/// Constants entering the mean-square bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConstants {
    /// Critic learning rate `alpha`.
    pub alpha: f64,
    /// Realized excitation level `eps`.
    pub epsilon: f64,
    /// Quadratic-growth constant `C` of `|Z|`.
    pub growth: f64,
    /// Fourth-moment bound `Xbar` (`E[|X|^4] <= Xbar^2`).
    pub state_fourth_root: f64,
    /// Replay capacity `M`.
    pub buffer_size: usize,
    /// `D = M C Xbar / 2`.
    pub bound_constant: f64,
}

/// Grid-pointwise comparison of the empirical mean square with the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub times: Vec<f64>,
    pub empirical_ms: Vec<f64>,
    pub std_err: Vec<f64>,
    pub bound: Vec<f64>,
    /// `bound + 3 se - empirical` (nonnegative means pass).
    pub margin: Vec<f64>,
    pub pass: Vec<bool>,
    pub all_pass: bool,
}

type BoxedPolicy = Box<dyn Fn(&State) -> Control>;

enum ResolvedPolicy {
    Static(BoxedPolicy),
    /// Control recomputed from the live critic weights at every step.
    Greedy,
}

fn resolve_policy(setup: &TrialSetup) -> Result<ResolvedPolicy> {
    Ok(match setup.policy {
        BehaviorPolicy::Zero => {
            let m = setup.env.control_dim();
            ResolvedPolicy::Static(Box::new(move |_: &State| DVector::zeros(m)))
        }
        BehaviorPolicy::Optimal => {
            let kappa = setup.env.optimal_policy()?;
            ResolvedPolicy::Static(Box::new(move |x: &State| kappa(x)))
        }
        BehaviorPolicy::OptimalPlusRobustifier { gain, offset } => {
            let kappa = setup.env.optimal_policy()?;
            let params = crate::actor::RobustifierParams::new(gain, offset)?;
            ResolvedPolicy::Static(Box::new(move |x: &State| {
                crate::actor::effective_policy(|y| kappa(y), &params, x)
            }))
        }
        BehaviorPolicy::GreedyFromCritic => ResolvedPolicy::Greedy,
    })
}

struct Sim<'a> {
    setup: &'a TrialSetup,
    policy: ResolvedPolicy,
    rng: ChaCha8Rng,
    x: State,
    step: u64,
    warmup_steps: u64,
}

impl<'a> Sim<'a> {
    fn time(&self) -> f64 {
        self.step as f64 * self.setup.dt
    }

    fn control(&self, theta: &DVector<f64>) -> Result<Control> {
        match &self.policy {
            ResolvedPolicy::Static(p) => Ok(p(&self.x)),
            ResolvedPolicy::Greedy => crate::actor::greedy_policy_from_critic(
                theta,
                &self.setup.features,
                &self.setup.env,
                &self.setup.cost,
                &self.x,
            ),
        }
    }

    fn advance(&mut self, theta: &DVector<f64>) -> Result<()> {
        let setup = self.setup;
        let u = self.control(theta)?;
        let held = |_: &State| u.clone();
        self.x = if setup.env.is_deterministic() {
            step_rk4(&setup.env, &self.x, held, setup.dt)?
        } else {
            let noise = DVector::from_fn(setup.env.noise_dim(), |_, _| {
                self.rng.sample::<f64, _>(StandardNormal)
            });
            step_euler_maruyama(&setup.env, &self.x, held, setup.dt, &noise)?
        };
        self.step += 1;
        if let Some(expl) = setup.exploration {
            let period_steps = ((expl.period / setup.dt).round() as u64).max(1);
            if self.step < self.warmup_steps && self.step.is_multiple_of(period_steps) {
                self.x = State::from_fn(setup.env.state_dim(), |_, _| {
                    self.rng.gen_range(-expl.radius..expl.radius)
                });
            }
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: self.time(),
                what: "environment state left the representable range".into(),
            });
        }
        Ok(())
    }

    fn sample(&self, theta: &DVector<f64>) -> Result<ReplaySample> {
        let u = self.control(theta)?;
        ReplaySample::observe(
            &self.setup.features,
            &self.setup.env,
            &self.setup.cost,
            self.time(),
            self.x.clone(),
            u,
        )
    }
}

/// Run one trial: warm the buffer up to the excitation threshold, then
/// integrate environment and critic jointly, logging the series.
pub fn run_critic_trial(setup: &TrialSetup, seed: u64) -> Result<TrialRecord> {
    validate_setup(setup)?;
    let theta_star = setup
        .env
        .known_value()
        .ok_or_else(|| Error::Unsupported("trials need a benchmark with known value".into()))?
        .ideal_weights_in(&setup.features)
        .ok_or_else(|| {
            Error::Unsupported(
                "the chosen features cannot represent the value function exactly".into(),
            )
        })?;
    let mut critic = CriticState::new(setup.theta0.clone(), setup.alpha)?.with_ideal(theta_star)?;
    let mut buffer = ReplayBuffer::new(setup.buffer_size)?;
    let warmup_steps = (setup.warmup / setup.dt).round() as u64;
    let mut sim = Sim {
        setup,
        policy: resolve_policy(setup)?,
        rng: ChaCha8Rng::seed_from_u64(seed),
        x: setup.x0.clone(),
        step: 0,
        warmup_steps,
    };

    // Warm-up: reach the excitation threshold, then keep refreshing (gated)
    // until the fixed warm-up time has elapsed. The critic stays frozen.
    let max_draws = (warmup_steps / setup.sample_stride as u64).max(1) as usize;
    let theta_frozen = critic.theta.clone();
    push_until_pe(
        &mut buffer,
        || {
            for _ in 0..setup.sample_stride {
                sim.advance(&theta_frozen)?;
            }
            sim.sample(&theta_frozen)
        },
        setup.pe_threshold,
        max_draws,
    )?;
    let pe_established_at = sim.time();
    while sim.step < warmup_steps {
        sim.advance(&theta_frozen)?;
        if sim.step.is_multiple_of(setup.sample_stride as u64) {
            buffer.push_gated(sim.sample(&theta_frozen)?)?;
        }
    }

    // Measured phase.
    let steps = (setup.horizon / setup.dt).round() as u64;
    let origin = sim.step;
    let theta0_error_sq = critic.weight_error_sq().expect("ideal weights set");
    let mut record = TrialRecord {
        seed,
        times: Vec::new(),
        weight_error_sq: Vec::new(),
        lambda_min: Vec::new(),
        z_abs: Vec::new(),
        z_sum_abs: Vec::new(),
        state_norm: Vec::new(),
        thetas: Vec::new(),
        pe_established_at,
        realized_epsilon: f64::INFINITY,
        theta0_error_sq,
    };

    for k in 0..=steps {
        record.realized_epsilon = record.realized_epsilon.min(buffer.lambda_min());
        if k % setup.log_stride as u64 == 0 || k == steps {
            log_point(
                &mut record,
                setup,
                &critic,
                &buffer,
                &sim,
                (sim.step - origin) as f64 * setup.dt,
            )?;
        }
        if k == steps {
            break;
        }
        critic_step(&mut critic, &buffer, setup.dt)?;
        sim.advance(&critic.theta)?;
        if sim.step.is_multiple_of(setup.sample_stride as u64) {
            buffer.push_gated(sim.sample(&critic.theta)?)?;
        }
    }
    Ok(record)
}

fn log_point(
    record: &mut TrialRecord,
    setup: &TrialSetup,
    critic: &CriticState,
    buffer: &ReplayBuffer,
    sim: &Sim<'_>,
    t_rel: f64,
) -> Result<()> {
    let u = sim.control(&critic.theta)?;
    let z = hamiltonian_true(&setup.env, &setup.cost, &sim.x, &u)?;
    let z_sum: f64 = buffer
        .samples()
        .iter()
        .map(|s| hamiltonian_true(&setup.env, &setup.cost, &s.state, &s.control).map(f64::abs))
        .sum::<Result<f64>>()?;
    record.times.push(t_rel);
    record
        .weight_error_sq
        .push(critic.weight_error_sq().expect("ideal weights set"));
    record.lambda_min.push(buffer.lambda_min());
    record.z_abs.push(z.abs());
    record.z_sum_abs.push(z_sum);
    record.state_norm.push(sim.x.norm());
    record.thetas.push(critic.theta.iter().copied().collect());
    Ok(())
}

fn validate_setup(setup: &TrialSetup) -> Result<()> {
    if !(setup.dt > 0.0) || !(setup.horizon > 0.0) || !(setup.warmup > 0.0) {
        return Err(Error::InvalidInput(
            "dt, warmup and horizon must be > 0".into(),
        ));
    }
    if setup.sample_stride == 0 || setup.log_stride == 0 {
        return Err(Error::InvalidInput("strides must be >= 1".into()));
    }
    if setup.x0.len() != setup.env.state_dim() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: setup.env.state_dim(),
            got: setup.x0.len(),
        });
    }
    if setup.theta0.len() != setup.features.len() {
        return Err(Error::DimensionMismatch {
            what: "initial critic weights",
            expected: setup.features.len(),
            got: setup.theta0.len(),
        });
    }
    Ok(())
}

/// Run `count` trials with seeds `base_seed, base_seed + 1, ...`.
pub fn run_trials(setup: &TrialSetup, base_seed: u64, count: usize) -> Result<Vec<TrialRecord>> {
    (0..count)
        .map(|i| run_critic_trial(setup, base_seed + i as u64))
        .collect()
}

/// Estimate the bound constants from a batch of trials.
///
/// `C` is the largest observed `|Z| / |x|^2` inflated by 5%, `Xbar` the square
/// root of the largest empirical fourth moment inflated by 50%, and `eps` the
/// smallest excitation level seen in the measured phase of any trial.
pub fn estimate_constants(setup: &TrialSetup, trials: &[TrialRecord]) -> Result<TheoremConstants> {
    if trials.len() < 30 {
        return Err(Error::InvalidInput(format!(
            "constant estimation needs at least 30 trials, got {}",
            trials.len()
        )));
    }
    let mut epsilon = f64::INFINITY;
    let mut growth: f64 = 0.0;
    for trial in trials {
        if trial.lambda_min.iter().any(|&l| l <= 0.0) {
            return Err(Error::Excitation {
                best: trial.realized_epsilon,
                draws: trial.lambda_min.len(),
                target: setup.pe_threshold,
            });
        }
        epsilon = epsilon.min(trial.realized_epsilon);
        for (z, xn) in trial.z_abs.iter().zip(trial.state_norm.iter()) {
            // skip near-zero states where the ratio is numerically undefined
            if *xn > 1e-6 {
                growth = growth.max(z / (xn * xn));
            }
        }
    }
    let grid = trials[0].times.len();
    let mut max_fourth: f64 = 0.0;
    for j in 0..grid {
        let mean: f64 =
            trials.iter().map(|t| t.state_norm[j].powi(4)).sum::<f64>() / trials.len() as f64;
        max_fourth = max_fourth.max(mean);
    }
    let growth = growth * 1.05;
    let state_fourth_root = max_fourth.sqrt() * 1.5;
    let bound_constant = setup.buffer_size as f64 * growth * state_fourth_root / 2.0;
    Ok(TheoremConstants {
        alpha: setup.alpha,
        epsilon,
        growth,
        state_fourth_root,
        buffer_size: setup.buffer_size,
        bound_constant,
    })
}

/// Right-hand side of the mean-square bound at time `t`.
pub fn theorem_bound(
    constants: &TheoremConstants,
    theta0_sq: f64,
    sup_root_ms: f64,
    t: f64,
) -> f64 {
    (-constants.alpha * constants.epsilon * t).exp() * theta0_sq
        + constants.bound_constant * sup_root_ms
}

/// Compare the empirical mean-square weight error against the bound at every
/// grid point, allowing three Monte Carlo standard errors. The supremum term
/// is the running supremum of the empirical curve itself.
pub fn check_bound(trials: &[TrialRecord], constants: &TheoremConstants) -> Result<BoundReport> {
    if trials.len() < 100 {
        return Err(Error::InvalidInput(format!(
            "bound checking needs at least 100 trials, got {}",
            trials.len()
        )));
    }
    let n = trials.len() as f64;
    let grid = trials[0].times.len();
    for t in trials {
        if t.times.len() != grid {
            return Err(Error::InvalidInput(
                "trials were logged on different grids".into(),
            ));
        }
    }
    let theta0_sq = trials[0].theta0_error_sq;
    let mut report = BoundReport {
        times: trials[0].times.clone(),
        empirical_ms: Vec::with_capacity(grid),
        std_err: Vec::with_capacity(grid),
        bound: Vec::with_capacity(grid),
        margin: Vec::with_capacity(grid),
        pass: Vec::with_capacity(grid),
        all_pass: true,
    };
    let mut sup_root: f64 = 0.0;
    for j in 0..grid {
        let mean: f64 = trials.iter().map(|t| t.weight_error_sq[j]).sum::<f64>() / n;
        let var: f64 = trials
            .iter()
            .map(|t| (t.weight_error_sq[j] - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let se = (var / n).sqrt();
        sup_root = sup_root.max(mean.max(0.0).sqrt());
        let bound = theorem_bound(constants, theta0_sq, sup_root, report.times[j]);
        let margin = bound + 3.0 * se - mean;
        let pass = margin >= 0.0;
        report.all_pass &= pass;
        report.empirical_ms.push(mean);
        report.std_err.push(se);
        report.bound.push(bound);
        report.margin.push(margin);
        report.pass.push(pass);
    }
    Ok(report)
}

/// Negated least-squares slope of `log(value)` against time.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::InvalidInput(
            "decay fit needs matching series with at least two points".into(),
        ));
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(
            "decay fit needs strictly positive values".into(),
        ));
    }
    let n = times.len() as f64;
    let mean_t: f64 = times.iter().sum::<f64>() / n;
    let mean_l: f64 = values.iter().map(|v| v.ln()).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (t, v) in times.iter().zip(values.iter()) {
        cov += (t - mean_t) * (v.ln() - mean_l);
        var += (t - mean_t) * (t - mean_t);
    }
    if var == 0.0 {
        return Err(Error::InvalidInput(
            "decay fit needs at least two distinct times".into(),
        ));
    }
    Ok(-(cov / var))
}

/// Mean of the trailing `fraction` of a series.
pub fn tail_mean(values: &[f64], fraction: f64) -> f64 {
    let len = values.len();
    if len == 0 {
        return f64::NAN;
    }
    let take = ((len as f64 * fraction).ceil() as usize).clamp(1, len);
    values[len - take..].iter().sum::<f64>() / take as f64
}

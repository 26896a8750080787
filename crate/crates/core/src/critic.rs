//! Hamiltonian temporal-difference machinery for the critic.
//!
//! The critic approximates the value function as `theta^T phi(x)` and is
//! driven by the Hamiltonian TD error
//!
//! ```text
//! e_H(theta | x, u) = theta^T w(x, u) + rho(x, u),
//! ```
//!
//! where the data vector is `w = grad phi . f(x,u) + eta(x,u)/2 - gamma phi`
//! with `eta_i = tr(sigma^T hess phi_i sigma)`. With zero diffusion and zero
//! discount this reduces exactly to the deterministic `grad phi . F(x,u)`.
//!
//! Weights follow normalized gradient descent on the squared TD error over an
//! experience replay; identifiability is governed by the excitation matrix
//! `E = sum_k w_k w_k^T / (w_k^T w_k + 1)^2` staying above `eps I`.

use nalgebra::{DMatrix, DVector};

use crate::envs::{EnvModel, StageCost};
use crate::error::{Error, Result};
use crate::features::{DerivativeOrder, FeatureMap};
use crate::{Control, State};

/// Critic weights with their learning rate and, for benchmarks, the ideal
/// weights used to track the error `theta - theta*`.
#[derive(Debug, Clone)]
pub struct CriticState {
    pub theta: DVector<f64>,
    pub alpha: f64,
    pub theta_star: Option<DVector<f64>>,
}

impl CriticState {
    pub fn new(theta: DVector<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput("learning rate must be > 0".into()));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("critic weights must be finite".into()));
        }
        Ok(Self {
            theta,
            alpha,
            theta_star: None,
        })
    }

    pub fn with_ideal(mut self, theta_star: DVector<f64>) -> Result<Self> {
        if theta_star.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                what: "ideal critic weights",
                expected: self.theta.len(),
                got: theta_star.len(),
            });
        }
        self.theta_star = Some(theta_star);
        Ok(self)
    }

    /// `theta - theta*`, when the ideal weights are known.
    pub fn weight_error(&self) -> Option<DVector<f64>> {
        self.theta_star.as_ref().map(|ts| &self.theta - ts)
    }

    /// `|theta - theta*|^2`, when the ideal weights are known.
    pub fn weight_error_sq(&self) -> Option<f64> {
        self.weight_error().map(|e| e.norm_squared())
    }
}

/// One replay entry: the observed pair with its cached data vector and stage
/// cost.
#[derive(Debug, Clone)]
pub struct ReplaySample {
    pub time: f64,
    pub state: State,
    pub control: Control,
    /// `w(x, u)` under the buffer's fixed feature map and environment.
    pub data: DVector<f64>,
    /// `rho(x, u)`.
    pub stage_cost: f64,
}

impl ReplaySample {
    /// Observe a live pair, caching `w` and `rho`.
    pub fn observe(
        map: &FeatureMap,
        env: &EnvModel,
        cost: &StageCost,
        time: f64,
        state: State,
        control: Control,
    ) -> Result<Self> {
        let data = data_vector(map, env, cost, &state, &control)?;
        let stage_cost = cost.evaluate(&state, &control);
        Ok(Self {
            time,
            state,
            control,
            data,
            stage_cost,
        })
    }

    /// Assemble a sample from precomputed parts (synthetic streams in tests).
    pub fn from_parts(
        time: f64,
        state: State,
        control: Control,
        data: DVector<f64>,
        stage_cost: f64,
    ) -> Self {
        Self {
            time,
            state,
            control,
            data,
            stage_cost,
        }
    }
}

/// Experience replay of capacity `M` with strictly increasing timestamps.
///
/// The buffer supports two insertion modes: [`push`](Self::push) always keeps
/// the newest observation (evicting the oldest when full), while
/// [`push_gated`](Self::push_gated) replaces the oldest entry only when doing
/// so does not decrease the excitation level `lambda_min(E)`. The gated mode
/// is what "update the replay until the excitation condition is fulfilled"
/// compiles down to.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    samples: Vec<ReplaySample>,
    lambda_min: f64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidInput("replay capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            samples: Vec::with_capacity(capacity),
            lambda_min: 0.0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn samples(&self) -> &[ReplaySample] {
        &self.samples
    }

    /// Most recent observation.
    pub fn latest(&self) -> Option<&ReplaySample> {
        self.samples.last()
    }

    /// Current `lambda_min(E)` (0 for an empty buffer).
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Append unconditionally, evicting the oldest sample when full.
    pub fn push(&mut self, sample: ReplaySample) -> Result<()> {
        self.check_time(&sample)?;
        if self.is_full() {
            self.samples.remove(0);
        }
        self.samples.push(sample);
        self.lambda_min = excitation_lambda_min(&self.samples);
        Ok(())
    }

    /// Append; when full, replace the oldest sample only if `lambda_min(E)`
    /// does not decrease. Returns whether the sample was accepted.
    pub fn push_gated(&mut self, sample: ReplaySample) -> Result<bool> {
        self.check_time(&sample)?;
        if !self.is_full() {
            self.samples.push(sample);
            self.lambda_min = excitation_lambda_min(&self.samples);
            return Ok(true);
        }
        let candidate_lambda = {
            let mut tail: Vec<&ReplaySample> = self.samples[1..].iter().collect();
            tail.push(&sample);
            excitation_lambda_min_refs(&tail)
        };
        if candidate_lambda >= self.lambda_min {
            self.samples.remove(0);
            self.samples.push(sample);
            self.lambda_min = candidate_lambda;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn check_time(&self, sample: &ReplaySample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if sample.time <= last.time {
                return Err(Error::InvalidInput(format!(
                    "replay timestamps must be strictly increasing ({} after {})",
                    sample.time, last.time
                )));
            }
        }
        Ok(())
    }
}

/// `1 / (w^T w + 1)^2`, the normalization applied to every replay summand.
pub fn normalization(w: &DVector<f64>) -> f64 {
    let d = w.norm_squared() + 1.0;
    1.0 / (d * d)
}

/// Data vector `w(x, u)`.
///
/// Stochastic form `grad phi . f + eta/2 - gamma phi`; with zero diffusion
/// and zero discount this is exactly the deterministic `grad phi . F(x, u)`.
pub fn data_vector(
    map: &FeatureMap,
    env: &EnvModel,
    cost: &StageCost,
    x: &State,
    u: &Control,
) -> Result<DVector<f64>> {
    let order = if env.is_deterministic() {
        DerivativeOrder::Gradient
    } else {
        DerivativeOrder::Hessian
    };
    let eval = map.eval(x, order)?;
    let grad = eval.gradient.expect("gradient requested");
    let f = env.drift(x, u)?;
    let mut w = grad * f;
    if !env.is_deterministic() {
        let sigma = env.diffusion(x, u)?;
        let hessians = eval.hessians.expect("hessians requested");
        for (i, h) in hessians.iter().enumerate() {
            w[i] += 0.5 * (sigma.transpose() * h * &sigma).trace();
        }
    }
    if cost.discount != 0.0 {
        w -= eval.values * cost.discount;
    }
    Ok(w)
}

/// Hamiltonian TD error `e_H = theta^T w + rho(x, u)`.
pub fn td_error(theta: &DVector<f64>, w: &DVector<f64>, rho_val: f64) -> f64 {
    assert_eq!(theta.len(), w.len(), "weight/data vector length mismatch");
    theta.dot(w) + rho_val
}

fn excitation_from_data<'a>(data: impl Iterator<Item = &'a DVector<f64>>) -> Option<DMatrix<f64>> {
    let mut e: Option<DMatrix<f64>> = None;
    for w in data {
        let nc = w.len();
        let e = e.get_or_insert_with(|| DMatrix::zeros(nc, nc));
        let weight = normalization(w);
        for i in 0..nc {
            for j in 0..nc {
                e[(i, j)] += w[i] * w[j] * weight;
            }
        }
    }
    e
}

fn min_eigenvalue(e: &DMatrix<f64>) -> f64 {
    e.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

fn excitation_lambda_min(samples: &[ReplaySample]) -> f64 {
    match excitation_from_data(samples.iter().map(|s| &s.data)) {
        Some(e) => min_eigenvalue(&e),
        None => 0.0,
    }
}

fn excitation_lambda_min_refs(samples: &[&ReplaySample]) -> f64 {
    match excitation_from_data(samples.iter().map(|s| &s.data)) {
        Some(e) => min_eigenvalue(&e),
        None => 0.0,
    }
}

/// Excitation matrix `E = sum_k w_k w_k^T / (w_k^T w_k + 1)^2` of the buffer
/// together with its smallest eigenvalue.
pub fn pe_matrix(buffer: &ReplayBuffer) -> Result<(DMatrix<f64>, f64)> {
    let e = excitation_from_data(buffer.samples().iter().map(|s| &s.data))
        .ok_or_else(|| Error::State("excitation matrix of an empty replay buffer".into()))?;
    let lambda = min_eigenvalue(&e);
    Ok((e, lambda))
}

/// Draw samples from `stream` into the buffer (gated) until
/// `lambda_min(E) >= epsilon`, or fail after `max_draws` draws.
///
/// Returns the achieved excitation level.
pub fn push_until_pe(
    buffer: &mut ReplayBuffer,
    mut stream: impl FnMut() -> Result<ReplaySample>,
    epsilon: f64,
    max_draws: usize,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(
            "excitation threshold must be > 0".into(),
        ));
    }
    if buffer.lambda_min() >= epsilon {
        return Ok(buffer.lambda_min());
    }
    let mut best = buffer.lambda_min();
    for _ in 0..max_draws {
        buffer.push_gated(stream()?)?;
        best = best.max(buffer.lambda_min());
        if buffer.lambda_min() >= epsilon {
            return Ok(buffer.lambda_min());
        }
    }
    Err(Error::Excitation {
        best,
        draws: max_draws,
        target: epsilon,
    })
}

/// One explicit-Euler step of the critic weight law
/// `theta' = theta - dt alpha sum_k e_H(theta | x_k, u_k) w_k / (w_k^T w_k + 1)^2`.
///
/// The step size must respect the stability guard `dt <= 1 / (alpha M)`; each
/// normalized summand has operator norm at most 1/4, so the guard keeps the
/// explicit scheme far inside its stability region.
pub fn critic_step(critic: &mut CriticState, buffer: &ReplayBuffer, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("dt must be > 0".into()));
    }
    if buffer.is_empty() {
        return Err(Error::State(
            "critic step over an empty replay buffer".into(),
        ));
    }
    if dt * critic.alpha * buffer.capacity() as f64 > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} violates the stability guard dt <= 1/(alpha M) = {}",
            1.0 / (critic.alpha * buffer.capacity() as f64)
        )));
    }
    let mut update = DVector::zeros(critic.theta.len());
    for sample in buffer.samples() {
        let e = td_error(&critic.theta, &sample.data, sample.stage_cost);
        update += &sample.data * (e * normalization(&sample.data));
    }
    critic.theta -= update * (dt * critic.alpha);
    if critic.theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            t: buffer.latest().map(|s| s.time).unwrap_or(f64::NAN),
            what: "critic weights left the representable range".into(),
        });
    }
    Ok(())
}

/// Generic-action Hamiltonian of the closed-form value,
/// `H(x, u | V) = grad V . f + tr(sigma^T hess V sigma)/2 + rho - gamma V`.
///
/// With exact features (`delta == 0`) this is the perturbation factor `Z`
/// driving the weight-error dynamics; it vanishes under the optimal policy.
pub fn hamiltonian_true(env: &EnvModel, cost: &StageCost, x: &State, u: &Control) -> Result<f64> {
    let kv = env
        .known_value()
        .ok_or_else(|| Error::Unsupported("model has no known value function".into()))?;
    let mut h = kv.gradient(x)?.dot(&env.drift(x, u)?) + cost.evaluate(x, u);
    if !env.is_deterministic() {
        let sigma = env.diffusion(x, u)?;
        h += 0.5 * (sigma.transpose() * kv.hessian(x)? * sigma).trace();
    }
    if cost.discount != 0.0 {
        h -= cost.discount * kv.value(x)?;
    }
    Ok(h)
}

/// Exact perturbation sum `sum_k w_k Z_k / (w_k^T w_k + 1)^2` over the buffer,
/// with `Z_k = H(x_k, u_k | V)` computed from the closed-form value (exact
/// features make the approximation-error part vanish). The weight-error
/// differential equation carries this sum scaled by `alpha`.
pub fn perturbation_term(
    buffer: &ReplayBuffer,
    env: &EnvModel,
    cost: &StageCost,
) -> Result<DVector<f64>> {
    if buffer.is_empty() {
        return Err(Error::State(
            "perturbation over an empty replay buffer".into(),
        ));
    }
    let nc = buffer.samples()[0].data.len();
    let mut sum = DVector::zeros(nc);
    for sample in buffer.samples() {
        let z = hamiltonian_true(env, cost, &sample.state, &sample.control)?;
        sum += &sample.data * (z * normalization(&sample.data));
    }
    Ok(sum)
}

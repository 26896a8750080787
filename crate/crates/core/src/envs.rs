//! Benchmark environments and fixed-step integrators.
//!
//! All shipped models are constructed so that the true value function lies in
//! the span of a small monomial feature map, which is the only way to obtain
//! ground truth (`theta*`, `kappa*`) for critic-error experiments:
//!
//! - [`make_counterexample`] — a two-state converse-optimality system with
//!   `V = x1^2 + x2^2` and `kappa*(x) = -g(x) x2`,
//! - [`make_lq_stochastic`] — a scalar discounted stochastic LQ plant with
//!   `V = p x^2 + c`,
//! - [`make_adaptive_plant`] — a scalar plant for the classical
//!   certainty-equivalence adaptive controller.
//!
//! Integration is fixed-step only (classical RK4 for deterministic models,
//! Euler–Maruyama for SDEs) so that logged trajectories are reproducible
//! bit-for-bit from a seed.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::{Control, State};

type DriftFn = Arc<dyn Fn(&State, &Control) -> State + Send + Sync>;
type FieldFn = Arc<dyn Fn(&State) -> State + Send + Sync>;
type GainFn = Arc<dyn Fn(&State) -> DMatrix<f64> + Send + Sync>;
type DiffusionFn = Arc<dyn Fn(&State, &Control) -> DMatrix<f64> + Send + Sync>;
type PolicyFn = Arc<dyn Fn(&State) -> Control + Send + Sync>;
type CostFn = Arc<dyn Fn(&State, &Control) -> f64 + Send + Sync>;

/// Control-affine split of a drift: `f(x) + g(x) u`.
#[derive(Clone)]
pub struct AffineParts {
    /// Uncontrolled drift `f(x)`.
    pub uncontrolled: FieldFn,
    /// Input gain `g(x)`, an `n x m` matrix.
    pub gain: GainFn,
}

/// Closed-form optimum of a benchmark: `V = theta*^T phi` and `kappa*`.
#[derive(Clone)]
pub struct KnownValue {
    map: FeatureMap,
    theta_star: DVector<f64>,
    policy: PolicyFn,
}

impl KnownValue {
    pub fn new(map: FeatureMap, theta_star: DVector<f64>, policy: PolicyFn) -> Result<Self> {
        if map.len() != theta_star.len() {
            return Err(Error::DimensionMismatch {
                what: "known value weights",
                expected: map.len(),
                got: theta_star.len(),
            });
        }
        Ok(Self {
            map,
            theta_star,
            policy,
        })
    }

    /// Basis in which the value function is exactly representable.
    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    /// Exact weights in [`Self::map`].
    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    /// `V(x)`.
    pub fn value(&self, x: &State) -> Result<f64> {
        Ok(self.theta_star.dot(&self.map.values(x)?))
    }

    /// `grad V(x)`.
    pub fn gradient(&self, x: &State) -> Result<DVector<f64>> {
        Ok(self.map.gradient(x)?.transpose() * &self.theta_star)
    }

    /// `hess V(x)`.
    pub fn hessian(&self, x: &State) -> Result<DMatrix<f64>> {
        let hs = self.map.hessians(x)?;
        let n = self.map.state_dim();
        let mut h = DMatrix::zeros(n, n);
        for (hi, &w) in hs.iter().zip(self.theta_star.iter()) {
            h += hi * w;
        }
        Ok(h)
    }

    /// `kappa*(x)`.
    pub fn optimal_control(&self, x: &State) -> Control {
        (self.policy)(x)
    }

    /// Express `theta*` in another monomial basis, or `None` when the value
    /// function is not exactly representable there.
    pub fn ideal_weights_in(&self, map: &FeatureMap) -> Option<DVector<f64>> {
        if map.state_dim() != self.map.state_dim() {
            return None;
        }
        let mut theta = DVector::zeros(map.len());
        for (exp, &w) in self.map.exponents().iter().zip(self.theta_star.iter()) {
            if w == 0.0 {
                continue;
            }
            {
                let i = map.position_of(exp)?;
                theta[i] += w
            }
        }
        Some(theta)
    }
}

/// An environment model: drift, optional control-affine split, optional
/// diffusion, and (for benchmarks) the closed-form optimum.
#[derive(Clone)]
pub struct EnvModel {
    n: usize,
    m: usize,
    noise_dim: usize,
    drift: DriftFn,
    affine: Option<AffineParts>,
    diffusion: Option<DiffusionFn>,
    known_value: Option<KnownValue>,
}

impl EnvModel {
    pub fn new(
        n: usize,
        m: usize,
        noise_dim: usize,
        drift: DriftFn,
        affine: Option<AffineParts>,
        diffusion: Option<DiffusionFn>,
        known_value: Option<KnownValue>,
    ) -> Self {
        Self {
            n,
            m,
            noise_dim,
            drift,
            affine,
            diffusion,
            known_value,
        }
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.n
    }

    /// Control dimension `m`.
    pub fn control_dim(&self) -> usize {
        self.m
    }

    /// Brownian-motion dimension `q` (0 for deterministic models).
    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Full drift `f(x, u)` (for control-affine models, `f(x) + g(x) u`).
    pub fn drift(&self, x: &State, u: &Control) -> Result<State> {
        self.check_dims(x, u)?;
        Ok((self.drift)(x, u))
    }

    /// Control-affine split, when the model has one.
    pub fn affine(&self) -> Option<&AffineParts> {
        self.affine.as_ref()
    }

    /// Input gain `g(x)` of a control-affine model.
    pub fn gain(&self, x: &State) -> Result<DMatrix<f64>> {
        let affine = self
            .affine
            .as_ref()
            .ok_or_else(|| Error::Unsupported("model is not control-affine".into()))?;
        Ok((affine.gain)(x))
    }

    /// `sigma(x, u)`, an `n x q` matrix; zero for deterministic models.
    pub fn diffusion(&self, x: &State, u: &Control) -> Result<DMatrix<f64>> {
        self.check_dims(x, u)?;
        match &self.diffusion {
            Some(sigma) => Ok(sigma(x, u)),
            None => Ok(DMatrix::zeros(self.n, 0)),
        }
    }

    /// Whether the model is deterministic (`sigma` identically zero).
    pub fn is_deterministic(&self) -> bool {
        self.diffusion.is_none()
    }

    /// Closed-form optimum, when known.
    pub fn known_value(&self) -> Option<&KnownValue> {
        self.known_value.as_ref()
    }

    /// Closed-form optimal policy, when known.
    pub fn optimal_policy(&self) -> Result<PolicyFn> {
        let kv = self
            .known_value
            .as_ref()
            .ok_or_else(|| Error::Unsupported("model has no known value function".into()))?;
        Ok(kv.policy.clone())
    }

    fn check_dims(&self, x: &State, u: &Control) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "environment state",
                expected: self.n,
                got: x.len(),
            });
        }
        if u.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "environment control",
                expected: self.m,
                got: u.len(),
            });
        }
        Ok(())
    }
}

/// A stage cost `rho(x, u) >= 0` with optional quadratic control weight and
/// discount rate.
#[derive(Clone)]
pub struct StageCost {
    evaluate: CostFn,
    /// `R` when the cost is `q(x) + u^T R u`; needed by the greedy policy.
    pub control_weight: Option<DMatrix<f64>>,
    /// Discount rate `gamma >= 0` of the control objective.
    pub discount: f64,
}

impl StageCost {
    /// Cost `q(x) + u^T R u` with discount `gamma`.
    pub fn quadratic(
        state_cost: impl Fn(&State) -> f64 + Send + Sync + 'static,
        control_weight: DMatrix<f64>,
        discount: f64,
    ) -> Result<Self> {
        if discount < 0.0 {
            return Err(Error::InvalidInput("discount must be >= 0".into()));
        }
        let r = &control_weight;
        if r.nrows() != r.ncols() || (r - r.transpose()).norm() != 0.0 {
            return Err(Error::InvalidInput(
                "control weight must be symmetric".into(),
            ));
        }
        if r.clone().cholesky().is_none() {
            return Err(Error::InvalidInput(
                "control weight must be positive definite".into(),
            ));
        }
        let rc = control_weight.clone();
        let evaluate: CostFn = Arc::new(move |x, u| state_cost(x) + (u.transpose() * &rc * u)[0]);
        Ok(Self {
            evaluate,
            control_weight: Some(control_weight),
            discount,
        })
    }

    /// `rho(x, u)`.
    pub fn evaluate(&self, x: &State, u: &Control) -> f64 {
        (self.evaluate)(x, u)
    }

    /// Stage cost of the counterexample, `rho = x2^2 + u^2`.
    pub fn counterexample() -> Self {
        Self::quadratic(|x: &State| x[1] * x[1], DMatrix::identity(1, 1), 0.0)
            .expect("valid fixed cost")
    }

    /// Stage cost of the scalar LQ benchmark, `rho = q x^2 + r u^2`, with
    /// discount `gamma`.
    pub fn lq(q: f64, r: f64, gamma: f64) -> Result<Self> {
        if q < 0.0 || r <= 0.0 {
            return Err(Error::InvalidInput("lq cost needs q >= 0 and r > 0".into()));
        }
        Self::quadratic(
            move |x: &State| q * x[0] * x[0],
            DMatrix::from_element(1, 1, r),
            gamma,
        )
    }
}

/// Converse-optimality counterexample.
///
/// The drift is chosen so that `V = x1^2 + x2^2` solves the HJB for the cost
/// `rho = x2^2 + u^2` under any smooth input gain `g`:
///
/// ```text
/// x1' = x2
/// x2' = -x1 - x2 (1 - g^2(x)) / 2 + g(x) u,     kappa*(x) = -g(x) x2.
/// ```
pub fn make_counterexample(g_spec: impl Fn(&State) -> f64 + Send + Sync + 'static) -> EnvModel {
    let g = Arc::new(g_spec);
    let g_drift = g.clone();
    let uncontrolled: FieldFn = Arc::new(move |x: &State| {
        let gv = g_drift(x);
        DVector::from_column_slice(&[x[1], -x[0] - 0.5 * x[1] * (1.0 - gv * gv)])
    });
    let g_gain = g.clone();
    let gain: GainFn =
        Arc::new(move |x: &State| DMatrix::from_column_slice(2, 1, &[0.0, g_gain(x)]));
    let f0 = uncontrolled.clone();
    let gm = gain.clone();
    let drift: DriftFn = Arc::new(move |x: &State, u: &Control| f0(x) + gm(x) * u);

    let g_pol = g.clone();
    let policy: PolicyFn = Arc::new(move |x: &State| DVector::from_element(1, -g_pol(x) * x[1]));
    let map = FeatureMap::monomials(2, 2, false).expect("fixed basis");
    // V = x1^2 + x2^2 over (x1, x2, x1^2, x1 x2, x2^2)
    let theta_star = DVector::from_column_slice(&[0.0, 0.0, 1.0, 0.0, 1.0]);
    let known = KnownValue::new(map, theta_star, policy).expect("consistent sizes");

    EnvModel::new(
        2,
        1,
        0,
        drift,
        Some(AffineParts { uncontrolled, gain }),
        None,
        Some(known),
    )
}

/// Parameters of the scalar discounted stochastic LQ benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqParams {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub r: f64,
    pub gamma: f64,
    pub s: f64,
}

/// Value-function coefficients of the LQ benchmark: `V(x) = p x^2 + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqSolution {
    pub p: f64,
    pub c: f64,
}

/// Solve `p^2 b^2 / r - (2a - gamma) p - q = 0` for the stabilizing root and
/// the constant `c = p s^2 / gamma`.
pub fn solve_lq(params: &LqParams) -> Result<LqSolution> {
    let LqParams {
        a,
        b,
        q,
        r,
        gamma,
        s,
    } = *params;
    if r <= 0.0 || q < 0.0 {
        return Err(Error::InvalidInput(
            "lq benchmark needs r > 0, q >= 0".into(),
        ));
    }
    if gamma < 0.0 {
        return Err(Error::InvalidInput("discount must be >= 0".into()));
    }
    if s != 0.0 && gamma <= 0.0 {
        return Err(Error::Model(
            "noisy lq benchmark needs gamma > 0, otherwise the discounted value is unbounded"
                .into(),
        ));
    }
    let k = b * b / r;
    let lin = 2.0 * a - gamma;
    let p = if k == 0.0 {
        // control absent: -(2a - gamma) p = q
        if q == 0.0 {
            0.0
        } else if lin < 0.0 {
            q / -lin
        } else {
            return Err(Error::Model(
                "lq benchmark with b = 0 needs 2a - gamma < 0".into(),
            ));
        }
    } else {
        // larger quadratic root; positive whenever q > 0
        let disc = lin * lin + 4.0 * k * q;
        (lin + disc.sqrt()) / (2.0 * k)
    };
    if !p.is_finite() || p < 0.0 || (q > 0.0 && p == 0.0) {
        return Err(Error::Model(format!(
            "lq benchmark has no stabilizing value coefficient (p = {p})"
        )));
    }
    let c = if s == 0.0 { 0.0 } else { p * s * s / gamma };
    Ok(LqSolution { p, c })
}

/// Scalar stochastic LQ benchmark `dX = (aX + bU) dt + s dB` with cost
/// `q x^2 + r u^2` discounted at rate `gamma`.
///
/// The closed-form value is `V(x) = p x^2 + c` over the basis `(1, x, x^2)`
/// and `kappa*(x) = -(p b / r) x`.
pub fn make_lq_stochastic(params: LqParams) -> Result<EnvModel> {
    let sol = solve_lq(&params)?;
    let LqParams { a, b, s, r, .. } = params;

    let drift: DriftFn =
        Arc::new(move |x: &State, u: &Control| DVector::from_element(1, a * x[0] + b * u[0]));
    let uncontrolled: FieldFn = Arc::new(move |x: &State| DVector::from_element(1, a * x[0]));
    let gain: GainFn = Arc::new(move |_: &State| DMatrix::from_element(1, 1, b));

    let diffusion: Option<DiffusionFn> = if s == 0.0 {
        None
    } else {
        Some(Arc::new(move |_: &State, _: &Control| {
            DMatrix::from_element(1, 1, s)
        }))
    };
    let noise_dim = usize::from(s != 0.0);

    let feedback = sol.p * b / r;
    let policy: PolicyFn = Arc::new(move |x: &State| DVector::from_element(1, -feedback * x[0]));
    let map = FeatureMap::monomials(1, 2, true).expect("fixed basis");
    // V = p x^2 + c over (1, x, x^2)
    let theta_star = DVector::from_column_slice(&[sol.c, 0.0, sol.p]);
    let known = KnownValue::new(map, theta_star, policy).expect("consistent sizes");

    Ok(EnvModel::new(
        1,
        1,
        noise_dim,
        drift,
        Some(AffineParts { uncontrolled, gain }),
        diffusion,
        Some(known),
    ))
}

/// Box sampled when validating `g(x) >= g_min` for the adaptive plant.
const ADAPTIVE_OPERATING_BOX: (f64, f64) = (-10.0, 10.0);

/// Scalar plant `x' = f(x) + g(x) u` for the adaptive-control baseline.
///
/// `f` and `g` are hidden from the controller (it learns them); they are only
/// used to step the simulation. The constructor samples `g` over the
/// operating box and rejects floors `g_min` that the true gain violates.
pub fn make_adaptive_plant(
    f_true: impl Fn(f64) -> f64 + Send + Sync + 'static,
    g_true: impl Fn(f64) -> f64 + Send + Sync + 'static,
    g_min: f64,
) -> Result<EnvModel> {
    if g_min <= 0.0 {
        return Err(Error::InvalidInput("g_min must be > 0".into()));
    }
    let (lo, hi) = ADAPTIVE_OPERATING_BOX;
    let samples = 2001;
    for i in 0..samples {
        let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let g = g_true(x);
        if !(g >= g_min) {
            return Err(Error::Model(format!(
                "true gain dips to {g} at x = {x}, below the floor g_min = {g_min}"
            )));
        }
    }
    let f = Arc::new(f_true);
    let g = Arc::new(g_true);
    let fd = f.clone();
    let uncontrolled: FieldFn = Arc::new(move |x: &State| DVector::from_element(1, fd(x[0])));
    let gd = g.clone();
    let gain: GainFn = Arc::new(move |x: &State| DMatrix::from_element(1, 1, gd(x[0])));
    let drift: DriftFn =
        Arc::new(move |x: &State, u: &Control| DVector::from_element(1, f(x[0]) + g(x[0]) * u[0]));
    Ok(EnvModel::new(
        1,
        1,
        0,
        drift,
        Some(AffineParts { uncontrolled, gain }),
        None,
        None,
    ))
}

/// One classical fourth-order Runge–Kutta step with the control held constant
/// at `u = policy(x)` over the step.
pub fn step_rk4(
    env: &EnvModel,
    x: &State,
    policy: impl Fn(&State) -> Control,
    dt: f64,
) -> Result<State> {
    if !env.is_deterministic() {
        return Err(Error::WrongIntegrator(
            "rk4 steps deterministic models only; use the Euler–Maruyama step".into(),
        ));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidInput("dt must be > 0".into()));
    }
    let u = policy(x);
    let k1 = env.drift(x, &u)?;
    let k2 = env.drift(&(x + &k1 * (dt / 2.0)), &u)?;
    let k3 = env.drift(&(x + &k2 * (dt / 2.0)), &u)?;
    let k4 = env.drift(&(x + &k3 * dt), &u)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// One Euler–Maruyama step `x' = x + f(x,u) dt + sigma(x,u) sqrt(dt) noise`
/// with `u = policy(x)` and `noise` a standard-normal draw of length `q`.
pub fn step_euler_maruyama(
    env: &EnvModel,
    x: &State,
    policy: impl Fn(&State) -> Control,
    dt: f64,
    noise: &DVector<f64>,
) -> Result<State> {
    if dt <= 0.0 {
        return Err(Error::InvalidInput("dt must be > 0".into()));
    }
    if noise.len() != env.noise_dim() {
        return Err(Error::DimensionMismatch {
            what: "noise vector",
            expected: env.noise_dim(),
            got: noise.len(),
        });
    }
    let u = policy(x);
    let mut next = x + env.drift(x, &u)? * dt;
    if !env.is_deterministic() {
        next += env.diffusion(x, &u)? * noise * dt.sqrt();
    }
    Ok(next)
}

//! Policies: the critic-implied greedy policy, the robustifying term, and the
//! classical certainty-equivalence adaptive controller used as the correct
//! baseline for the stabilization idea the robustifying term borrows from.

use nalgebra::DVector;

use crate::envs::{EnvModel, StageCost};
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::{Control, State};

/// Gain and offset of the robustifying term `-K |x|^2 / (A + |x|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustifierParams {
    pub gain: f64,
    pub offset: f64,
}

impl RobustifierParams {
    pub fn new(gain: f64, offset: f64) -> Result<Self> {
        if !(gain > 0.0) || !(offset > 0.0) {
            return Err(Error::InvalidInput(
                "robustifier needs K > 0 and A > 0".into(),
            ));
        }
        Ok(Self { gain, offset })
    }

    /// Scalar value `-K |x|^2 / (A + |x|^2)`, always in `(-K, 0]`.
    pub fn scalar_term(&self, x: &State) -> f64 {
        let ns = x.norm_squared();
        -self.gain * ns / (self.offset + ns)
    }
}

/// Robustifying term replicated across all `m` control channels.
pub fn robustifying_term(x: &State, params: &RobustifierParams, m: usize) -> Control {
    DVector::from_element(m, params.scalar_term(x))
}

/// Greedy policy implied by critic weights for a control-affine model with
/// cost `q(x) + u^T R u`:
///
/// ```text
/// u = -R^{-1} g(x)^T grad phi(x)^T theta / 2.
/// ```
pub fn greedy_policy_from_critic(
    theta: &DVector<f64>,
    map: &FeatureMap,
    env: &EnvModel,
    cost: &StageCost,
    x: &State,
) -> Result<Control> {
    let r = cost
        .control_weight
        .as_ref()
        .ok_or_else(|| Error::Unsupported("greedy policy needs a quadratic-in-u cost".into()))?;
    let gain = env.gain(x)?;
    if theta.len() != map.len() {
        return Err(Error::DimensionMismatch {
            what: "critic weights",
            expected: map.len(),
            got: theta.len(),
        });
    }
    let value_grad = map.gradient(x)?.transpose() * theta;
    let rhs = gain.transpose() * value_grad * 0.5;
    let u = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("control weight must be positive definite".into()))?
        .solve(&rhs);
    Ok(-u)
}

/// `base(x)` plus the robustifying term on every channel.
pub fn effective_policy(
    base: impl Fn(&State) -> Control,
    params: &RobustifierParams,
    x: &State,
) -> Control {
    let u = base(x);
    let m = u.len();
    u + robustifying_term(x, params, m)
}

/// Mean over the batch of `|candidate(x) - kappa*(x)|^2 / 2`.
pub fn actor_loss(
    candidate: impl Fn(&State) -> Control,
    kappa_star: impl Fn(&State) -> Control,
    batch: &[State],
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let sum: f64 = batch
        .iter()
        .map(|x| 0.5 * (candidate(x) - kappa_star(x)).norm_squared())
        .sum();
    sum / batch.len() as f64
}

/// Same loss, with the reference policy pulled from the model's closed-form
/// optimum; errors when the model has none.
pub fn actor_loss_vs_optimal(
    env: &EnvModel,
    candidate: impl Fn(&State) -> Control,
    batch: &[State],
) -> Result<f64> {
    let kappa = env.optimal_policy()?;
    Ok(actor_loss(candidate, |x| kappa(x), batch))
}

/// Certainty-equivalence adaptive controller for a scalar plant
/// `x' = f(x) + g(x) u` with models `f_hat = theta_f^T phi_f`,
/// `g_hat = theta_g^T phi_g` and control `u = (-K x - f_hat) / g_hat`.
///
/// The update laws are `theta_f' = alpha_f x phi_f`,
/// `theta_g' = alpha_g x phi_g u`, with the `theta_g` step clamped so that
/// `g_hat` never drops below `g_min` (the estimate appearing in a
/// denominator is what makes the floor essential).
#[derive(Debug, Clone)]
pub struct AdaptiveController {
    pub theta_f: DVector<f64>,
    pub theta_g: DVector<f64>,
    pub alpha_f: f64,
    pub alpha_g: f64,
    pub g_min: f64,
    phi_f: FeatureMap,
    phi_g: FeatureMap,
}

impl AdaptiveController {
    pub fn new(
        phi_f: FeatureMap,
        phi_g: FeatureMap,
        theta_f: DVector<f64>,
        theta_g: DVector<f64>,
        alpha_f: f64,
        alpha_g: f64,
        g_min: f64,
    ) -> Result<Self> {
        if phi_f.state_dim() != 1 || phi_g.state_dim() != 1 {
            return Err(Error::InvalidInput(
                "the adaptive baseline handles scalar plants only".into(),
            ));
        }
        if theta_f.len() != phi_f.len() || theta_g.len() != phi_g.len() {
            return Err(Error::DimensionMismatch {
                what: "adaptive controller weights",
                expected: phi_f.len(),
                got: theta_f.len(),
            });
        }
        if !(alpha_f > 0.0) || !(alpha_g > 0.0) || !(g_min > 0.0) {
            return Err(Error::InvalidInput(
                "adaptive gains and g_min must be > 0".into(),
            ));
        }
        let ctrl = Self {
            theta_f,
            theta_g,
            alpha_f,
            alpha_g,
            g_min,
            phi_f,
            phi_g,
        };
        if ctrl.g_hat(0.0)? < g_min {
            return Err(Error::InvalidInput(
                "initial gain estimate already violates the floor".into(),
            ));
        }
        Ok(ctrl)
    }

    pub fn f_hat(&self, x: f64) -> Result<f64> {
        Ok(self
            .theta_f
            .dot(&self.phi_f.values(&DVector::from_element(1, x))?))
    }

    pub fn g_hat(&self, x: f64) -> Result<f64> {
        Ok(self
            .theta_g
            .dot(&self.phi_g.values(&DVector::from_element(1, x))?))
    }

    /// `u = (-K x - f_hat) / g_hat` with the current estimates.
    pub fn control(&self, x: f64, k_gain: f64) -> Result<f64> {
        Ok((-k_gain * x - self.f_hat(x)?) / self.g_hat(x)?)
    }

    /// Compute the control, Euler-update both weight vectors, then clamp the
    /// `theta_g` step so `g_hat(x) >= g_min`. Returns the applied control.
    pub fn step(&mut self, x: f64, k_gain: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput("dt must be > 0".into()));
        }
        let xv = DVector::from_element(1, x);
        let u = self.control(x, k_gain)?;
        let phi_f = self.phi_f.values(&xv)?;
        let phi_g = self.phi_g.values(&xv)?;
        self.theta_f += &phi_f * (self.alpha_f * x * dt);

        let g_before = self.theta_g.dot(&phi_g);
        let delta = &phi_g * (self.alpha_g * x * u * dt);
        let g_after = g_before + delta.dot(&phi_g);
        if g_after >= self.g_min {
            self.theta_g += delta;
        } else if g_before > self.g_min {
            // rescale the violating step so g_hat lands exactly on the floor
            let beta = (self.g_min - g_before) / (g_after - g_before);
            self.theta_g += delta * beta;
        }
        // g_before == g_min with a violating step: drop the update entirely

        if !u.is_finite()
            || self.theta_f.iter().any(|v| !v.is_finite())
            || self.theta_g.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Divergence {
                t: f64::NAN,
                what: "adaptive controller weights left the representable range".into(),
            });
        }
        Ok(u)
    }

    /// Composite Lyapunov value
    /// `x^2/2 + |theta_f - theta_f*|^2 / (2 alpha_f) + |theta_g - theta_g*|^2 / (2 alpha_g)`.
    pub fn lyapunov_value(
        &self,
        x: f64,
        theta_f_star: &DVector<f64>,
        theta_g_star: &DVector<f64>,
    ) -> f64 {
        let ef = &self.theta_f - theta_f_star;
        let eg = &self.theta_g - theta_g_star;
        0.5 * x * x
            + 0.5 * ef.norm_squared() / self.alpha_f
            + 0.5 * eg.norm_squared() / self.alpha_g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::step_rk4;
    use crate::envs::{
        make_adaptive_plant, make_counterexample, make_lq_stochastic, LqParams, StageCost,
    };
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn robustifier_examples() {
        let params = RobustifierParams::new(3.0, 1.0).unwrap();
        // vanishes at the origin
        assert_eq!(robustifying_term(&dvector![0.0, 0.0], &params, 1)[0], 0.0);
        // K=3, A=1, |x|^2 = 1: -3/2
        assert_eq!(robustifying_term(&dvector![0.0, -1.0], &params, 1)[0], -1.5);
        // saturates toward -K
        let far = robustifying_term(&dvector![1e6, 0.0], &params, 2);
        assert_eq!(far.len(), 2);
        assert!(far[0] > -3.0 && far[0] < -2.999_999);
    }

    #[test]
    fn robustifier_rejects_bad_params() {
        assert!(RobustifierParams::new(0.0, 1.0).is_err());
        assert!(RobustifierParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn robustifier_is_bounded_below_by_minus_gain() {
        let params = RobustifierParams::new(2.5, 0.3).unwrap();
        for xv in [-100.0, -1.0, 0.0, 0.5, 42.0] {
            let t = params.scalar_term(&dvector![xv]);
            assert!(t <= 0.0 && t > -params.gain);
        }
    }

    #[test]
    fn greedy_policy_recovers_optimal_on_counterexample() {
        let env = make_counterexample(|_| 1.0);
        let cost = StageCost::counterexample();
        let map = FeatureMap::monomials(2, 2, false).unwrap();
        let theta_star = env.known_value().unwrap().ideal_weights_in(&map).unwrap();
        for xv in [[1.0, 1.0], [0.0, -1.0], [-0.4, 2.3]] {
            let x = dvector![xv[0], xv[1]];
            let u = greedy_policy_from_critic(&theta_star, &map, &env, &cost, &x).unwrap();
            let ustar = env.known_value().unwrap().optimal_control(&x);
            assert!((u - ustar).norm() <= 1e-12);
        }
        // zero weights give zero control
        let u = greedy_policy_from_critic(
            &DVector::zeros(map.len()),
            &map,
            &env,
            &cost,
            &dvector![1.0, 2.0],
        )
        .unwrap();
        assert_eq!(u[0], 0.0);
    }

    #[test]
    fn greedy_policy_recovers_optimal_on_lq() {
        let params = LqParams {
            a: -1.0,
            b: 1.0,
            q: 1.0,
            r: 1.0,
            gamma: 0.1,
            s: 0.1,
        };
        let env = make_lq_stochastic(params).unwrap();
        let cost = StageCost::lq(params.q, params.r, params.gamma).unwrap();
        // custom basis {x^2, 1} with theta = (p, c)
        let map = FeatureMap::from_exponents(1, vec![vec![2], vec![0]]).unwrap();
        let theta = dvector![0.4, 0.04];
        for xv in [0.7, -1.9, 2.4] {
            let x = dvector![xv];
            let u = greedy_policy_from_critic(&theta, &map, &env, &cost, &x).unwrap();
            assert_relative_eq!(u[0], -0.4 * xv, max_relative = 1e-12);
        }
    }

    #[test]
    fn effective_policy_examples() {
        let env = make_counterexample(|_| 1.0);
        let kappa = env.optimal_policy().unwrap();
        let params = RobustifierParams::new(3.0, 1.0).unwrap();
        // kappa*(0,-1) = 1, robustifier -1.5: effective -0.5
        let u = effective_policy(|x| kappa(x), &params, &dvector![0.0, -1.0]);
        assert_relative_eq!(u[0], -0.5, max_relative = 1e-14);
        // x = 0: base policy untouched
        let u = effective_policy(|x| kappa(x), &params, &dvector![0.0, 0.0]);
        assert_eq!(u[0], 0.0);
        // tiny gain: effective policy approaches the base
        let tiny = RobustifierParams::new(1e-12, 1.0).unwrap();
        let u = effective_policy(|x| kappa(x), &tiny, &dvector![0.3, -0.8]);
        assert_relative_eq!(u[0], kappa(&dvector![0.3, -0.8])[0], epsilon = 1e-12);
    }

    #[test]
    fn actor_loss_examples() {
        let env = make_counterexample(|_| 1.0);
        let kappa = env.optimal_policy().unwrap();
        let batch = vec![dvector![0.0, -1.0], dvector![1.0, 0.5]];
        // candidate == optimum
        let loss = actor_loss_vs_optimal(&env, |x| kappa(x), &batch).unwrap();
        assert_eq!(loss, 0.0);
        // zero candidate at (0,-1): |0 - 1|^2 / 2 = 0.5
        let loss = actor_loss(
            |_: &State| dvector![0.0],
            |x: &State| kappa(x),
            &[dvector![0.0, -1.0]],
        );
        assert_eq!(loss, 0.5);
        // order invariance
        let fwd = actor_loss(|_| dvector![0.2], |x| kappa(x), &batch);
        let rev_batch: Vec<State> = batch.iter().rev().cloned().collect();
        let rev = actor_loss(|_| dvector![0.2], |x| kappa(x), &rev_batch);
        assert_eq!(fwd, rev);
        // plants without a known optimum are unsupported
        let plain = make_adaptive_plant(|x| x, |_| 1.0, 0.5).unwrap();
        assert!(matches!(
            actor_loss_vs_optimal(&plain, |_| dvector![0.0], &batch),
            Err(Error::Unsupported(_))
        ));
    }

    fn baseline_controller() -> AdaptiveController {
        // plant f(x) = x (phi_f = {x}), g = 1 (phi_g = {1})
        let phi_f = FeatureMap::from_exponents(1, vec![vec![1]]).unwrap();
        let phi_g = FeatureMap::from_exponents(1, vec![vec![0]]).unwrap();
        AdaptiveController::new(phi_f, phi_g, dvector![0.0], dvector![0.6], 2.0, 2.0, 0.5).unwrap()
    }

    #[test]
    fn ideal_weights_cancel_the_plant() {
        let phi_f = FeatureMap::from_exponents(1, vec![vec![1]]).unwrap();
        let phi_g = FeatureMap::from_exponents(1, vec![vec![0]]).unwrap();
        let ctrl =
            AdaptiveController::new(phi_f, phi_g, dvector![1.0], dvector![1.0], 1.0, 1.0, 0.5)
                .unwrap();
        let k = 2.0;
        let x = 1.3;
        let u = ctrl.control(x, k).unwrap();
        // u = (-Kx - x)/1 so f + g u = -Kx
        assert_relative_eq!(x + u, -k * x, max_relative = 1e-14);
    }

    #[test]
    fn origin_is_a_fixed_point_of_the_updates() {
        let mut ctrl = baseline_controller();
        let before_f = ctrl.theta_f.clone();
        let before_g = ctrl.theta_g.clone();
        let u = ctrl.step(0.0, 1.0, 1e-3).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(ctrl.theta_f, before_f);
        assert_eq!(ctrl.theta_g, before_g);
    }

    #[test]
    fn projection_keeps_gain_estimate_above_floor() {
        let mut ctrl = baseline_controller();
        // drive with states/controls that push theta_g down hard
        let mut x = 1.0;
        for _ in 0..200 {
            let _ = ctrl.step(x, 5.0, 1e-2).unwrap();
            x = -x * 1.01;
            assert!(
                ctrl.g_hat(x).unwrap() >= ctrl.g_min - 1e-12,
                "gain estimate dipped below the floor"
            );
        }
    }

    #[test]
    fn composite_lyapunov_value_nonincreasing_on_shipped_plant() {
        let env = make_adaptive_plant(|x| x, |_| 1.0, 0.5).unwrap();
        let mut ctrl = baseline_controller();
        let theta_f_star = dvector![1.0];
        let theta_g_star = dvector![1.0];
        let k = 1.0;
        let dt = 1e-4;
        let mut x = dvector![1.0];
        let mut lyap = ctrl.lyapunov_value(x[0], &theta_f_star, &theta_g_star);
        for _ in 0..50_000 {
            let u = ctrl.step(x[0], k, dt).unwrap();
            x = step_rk4(&env, &x, |_| dvector![u], dt).unwrap();
            let next = ctrl.lyapunov_value(x[0], &theta_f_star, &theta_g_star);
            assert!(
                next <= lyap + 1e-6,
                "lyapunov value rose by {}",
                next - lyap
            );
            lyap = next;
        }
        assert!(x[0].abs() < 0.2, "state should be well on its way to 0");
    }
}

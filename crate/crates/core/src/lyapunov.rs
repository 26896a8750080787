//! Lyapunov-derivative computation and auditing.
//!
//! When the value function is used as a Lyapunov candidate and the actor has
//! learned the optimal policy exactly, adding the robustifying term leaves
//!
//! ```text
//! dL/dt = -rho* - grad V^T g * (-K |x|^2 / (A + |x|^2)),
//! ```
//!
//! whose last term is sign-indefinite. On the counterexample system this
//! specializes (slice `x1 = 0`, `g == 1`) to
//! `dL/dt = -2 x2^2 (x2^2 + K x2 + A) / (A + x2^2)`, which is positive on the
//! open interval between the roots of `x2^2 + K x2 + A` whenever `K^2 > 4A`.
//! The module computes the decomposition, the exact positive region, and the
//! per-state audit of the claimed negative sign.

use crate::actor::RobustifierParams;
use crate::envs::EnvModel;
use crate::error::{Error, Result};
use crate::{Control, State};

/// Terms of the Lyapunov-derivative decomposition under the effective policy
/// `kappa = kappa* - K |x|^2 / (A + |x|^2)` (actor errors vanish on the
/// shipped benchmarks, so those slots carry zeros there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapDecomposition {
    /// `-rho(x, kappa*(x))`.
    pub minus_rho_star: f64,
    /// `-grad V^T g theta_err^T psi` (actor weight error contribution).
    pub actor_error_term: f64,
    /// `-grad V^T g delta_u` (actor approximation error contribution).
    pub delta_u_term: f64,
    /// `-grad V^T g K |x|^2 / (A + |x|^2)`.
    pub robustifier_term: f64,
}

impl LyapDecomposition {
    /// Sum of all terms, equal to `dL/dt` along the effective policy.
    pub fn total(&self) -> f64 {
        self.minus_rho_star + self.actor_error_term + self.delta_u_term + self.robustifier_term
    }
}

/// Directional derivative `grad V(x)^T F(x, u)` of a candidate along the
/// deterministic dynamics.
pub fn lyap_derivative(
    v_grad: impl Fn(&State) -> State,
    env: &EnvModel,
    x: &State,
    u: &Control,
) -> Result<f64> {
    if !env.is_deterministic() {
        return Err(Error::Unsupported(
            "directional derivative is defined for deterministic models".into(),
        ));
    }
    Ok(v_grad(x).dot(&env.drift(x, u)?))
}

/// Decomposition of `dL/dt` for the counterexample under the effective
/// policy: `-x2^2 - x2^2 g^2(x)` (together `-rho*`) plus the robustifier
/// term `R = -2 x2 g(x) K |x|^2 / (A + |x|^2)`.
pub fn counterexample_decomposition(
    x: &State,
    g_spec: impl Fn(&State) -> f64,
    params: &RobustifierParams,
) -> LyapDecomposition {
    let g = g_spec(x);
    let x2 = x[1];
    let robustifier_term = -2.0 * x2 * g * (-params.scalar_term(x));
    LyapDecomposition {
        minus_rho_star: -x2 * x2 - x2 * x2 * g * g,
        actor_error_term: 0.0,
        delta_u_term: 0.0,
        robustifier_term,
    }
}

/// Positive-derivative region on the slice `x1 = 0`, `g == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveRegion {
    pub gain: f64,
    pub offset: f64,
    /// Exact open interval where `dL/dt > 0`: the roots of
    /// `x2^2 + K x2 + A`, present when `K^2 > 4A`.
    pub exact: Option<(f64, f64)>,
    /// The half-open set `[(-K - sqrt(K^2 - 4A))/2, 0)` reported alongside
    /// for comparison; its upper end disagrees with the exact interval.
    pub stated: Option<(f64, f64)>,
}

impl PositiveRegion {
    /// Width of the exact region (0 when empty).
    pub fn width(&self) -> f64 {
        self.exact.map(|(lo, hi)| hi - lo).unwrap_or(0.0)
    }
}

/// Compute the region where `dL/dt > 0` on the slice `x1 = 0`, `g == 1`.
///
/// There, `dL/dt = -2 x2^2 (x2^2 + K x2 + A) / (A + x2^2)`, so the exact
/// region is the open interval between the quadratic roots when the
/// discriminant is positive and empty otherwise (a double root gives only a
/// tangency point with `dL/dt = 0`).
pub fn positive_region(gain: f64, offset: f64) -> Result<PositiveRegion> {
    if !(gain > 0.0) || !(offset > 0.0) {
        return Err(Error::InvalidInput("region needs K > 0 and A > 0".into()));
    }
    let disc = gain * gain - 4.0 * offset;
    let (exact, stated) = if disc > 0.0 {
        let sq = disc.sqrt();
        let lower = 0.5 * (-gain - sq);
        let upper = 0.5 * (-gain + sq);
        (Some((lower, upper)), Some((lower, 0.0)))
    } else {
        (None, None)
    };
    Ok(PositiveRegion {
        gain,
        offset,
        exact,
        stated,
    })
}

/// Assumed norm bounds the criticized inequality replaces factors with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Bound on `|grad V|`.
    pub grad_v_norm: f64,
    /// Bound on `|g|`.
    pub gain_norm: f64,
}

/// Per-state audit of the claimed sign of the robustifier contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimAudit {
    /// True contribution `-grad V^T g K |x|^2 / (A + |x|^2)` to `dL/dt`.
    pub true_robustifier_contribution: f64,
    /// The claimed replacement `-grad_v_norm * gain_norm * K |x|^2 / (A + |x|^2)`,
    /// always nonpositive — the claimed sign.
    pub claimed_upper_bound: f64,
    /// Whether the true contribution is positive, contradicting the claim.
    pub violated: bool,
}

/// Audit the claimed negative sign of the robustifier contribution at one
/// state of the counterexample.
///
/// The true contribution equals `-2 x2 g(x) K |x|^2 / (A + |x|^2)`, which
/// flips sign with `x2 g(x)` (and vanishes when `g` does); the claimed bound
/// treats it as negative definite.
pub fn audit_claimed_bound(
    x: &State,
    g_spec: impl Fn(&State) -> f64,
    params: &RobustifierParams,
    bounds: &BoundConstants,
) -> ClaimAudit {
    let magnitude = -params.scalar_term(x); // K |x|^2 / (A + |x|^2) >= 0
    let true_contribution = -2.0 * x[1] * g_spec(x) * magnitude;
    let claimed_upper_bound = -bounds.grad_v_norm.abs() * bounds.gain_norm.abs() * magnitude;
    ClaimAudit {
        true_robustifier_contribution: true_contribution,
        claimed_upper_bound,
        violated: true_contribution > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::effective_policy;
    use crate::envs::{make_counterexample, StageCost};
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grad_v(x: &State) -> State {
        dvector![2.0 * x[0], 2.0 * x[1]]
    }

    #[test]
    fn derivative_equals_minus_stage_cost_under_optimal_policy() {
        let env = make_counterexample(|_| 1.0);
        let cost = StageCost::counterexample();
        let x = dvector![1.0, 1.0];
        let u = env.known_value().unwrap().optimal_control(&x);
        let d = lyap_derivative(grad_v, &env, &x, &u).unwrap();
        assert_relative_eq!(d, -cost.evaluate(&x, &u), epsilon = 1e-14);
        assert_relative_eq!(d, -2.0, epsilon = 1e-14);
        // origin
        let d0 = lyap_derivative(grad_v, &env, &dvector![0.0, 0.0], &dvector![0.0]).unwrap();
        assert_eq!(d0, 0.0);
    }

    #[test]
    fn derivative_goes_positive_under_the_effective_policy() {
        let env = make_counterexample(|_| 1.0);
        let kappa = env.optimal_policy().unwrap();
        let params = RobustifierParams::new(3.0, 1.0).unwrap();
        let x = dvector![0.0, -1.0];
        let u = effective_policy(|y| kappa(y), &params, &x);
        let d = lyap_derivative(grad_v, &env, &x, &u).unwrap();
        // -x2^2 - x2^2 + R = -1 - 1 + 3
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn decomposition_matches_worked_example() {
        let params = RobustifierParams::new(3.0, 1.0).unwrap();
        let d = counterexample_decomposition(&dvector![0.0, -1.0], |_| 1.0, &params);
        assert_relative_eq!(d.minus_rho_star, -2.0, epsilon = 1e-14);
        assert_eq!(d.actor_error_term, 0.0);
        assert_eq!(d.delta_u_term, 0.0);
        assert_relative_eq!(d.robustifier_term, 3.0, epsilon = 1e-14);
        assert_relative_eq!(d.total(), 1.0, epsilon = 1e-14);

        // x2 = 0: every term vanishes
        let d = counterexample_decomposition(&dvector![2.0, 0.0], |_| 1.0, &params);
        assert_eq!(d.total(), 0.0);

        // x2 > 0 with g > 0: the robustifier actually helps
        let d = counterexample_decomposition(&dvector![0.0, 1.0], |_| 1.0, &params);
        assert!(d.robustifier_term < 0.0);
    }

    #[test]
    fn decomposition_closes_against_directional_derivative() {
        let gains: [fn(&State) -> f64; 4] = [
            |_| 1.0,
            |_| 0.3,
            |x| 1.0 + 0.5 * x[0] * x[0],
            |x| (0.7 * x[1]).cos(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in gains {
            let env = make_counterexample(g);
            let kappa = env.optimal_policy().unwrap();
            for _ in 0..2500 {
                let x = dvector![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let k = rng.gen_range(0.1..8.0);
                let a = rng.gen_range(0.1..4.0);
                let params = RobustifierParams::new(k, a).unwrap();
                let u = effective_policy(|y| kappa(y), &params, &x);
                let direct = lyap_derivative(grad_v, &env, &x, &u).unwrap();
                let decomp = counterexample_decomposition(&x, g, &params);
                assert!(
                    (decomp.total() - direct).abs() <= 1e-10,
                    "decomposition {} vs derivative {}",
                    decomp.total(),
                    direct
                );
            }
        }
    }

    #[test]
    fn region_roots_match_hand_values() {
        let r = positive_region(3.0, 1.0).unwrap();
        let (lo, hi) = r.exact.unwrap();
        assert_relative_eq!(lo, 0.5 * (-3.0 - 5.0_f64.sqrt()), epsilon = 1e-14);
        assert_relative_eq!(hi, 0.5 * (-3.0 + 5.0_f64.sqrt()), epsilon = 1e-14);
        let (slo, shi) = r.stated.unwrap();
        assert_eq!(slo, lo);
        assert_eq!(shi, 0.0);

        // subcritical and tangent gains give an empty region
        assert!(positive_region(1.0, 1.0).unwrap().exact.is_none());
        assert!(positive_region(2.0, 1.0).unwrap().exact.is_none());
    }

    #[test]
    fn region_width_grows_with_gain() {
        let mut last = 0.0;
        for k in [2.5, 3.0, 5.0, 10.0] {
            let w = positive_region(k, 1.0).unwrap().width();
            assert!(w > last, "width not increasing at K = {k}");
            last = w;
        }
    }

    #[test]
    fn sign_scan_agrees_with_quadratic_prediction() {
        for k in [2.5, 3.0, 5.0, 10.0] {
            let params = RobustifierParams::new(k, 1.0).unwrap();
            for i in 0..10_000 {
                let x2 = -5.0 + 10.0 * i as f64 / 9_999.0;
                if x2 == 0.0 {
                    continue;
                }
                let d = counterexample_decomposition(&dvector![0.0, x2], |_| 1.0, &params);
                let predicted_positive = x2 * x2 + k * x2 + 1.0 < 0.0;
                assert_eq!(
                    d.total() > 0.0,
                    predicted_positive,
                    "sign mismatch at K = {k}, x2 = {x2}"
                );
            }
        }
    }

    #[test]
    fn audit_flags_the_canonical_witness() {
        let params = RobustifierParams::new(3.0, 1.0).unwrap();
        let bounds = BoundConstants {
            grad_v_norm: 2.0,
            gain_norm: 1.0,
        };
        let audit = audit_claimed_bound(&dvector![0.0, -1.0], |_| 1.0, &params, &bounds);
        assert_relative_eq!(audit.true_robustifier_contribution, 3.0, epsilon = 1e-14);
        assert!(audit.claimed_upper_bound < 0.0);
        assert!(audit.violated);

        // origin: nothing to flag
        let audit = audit_claimed_bound(&dvector![0.0, 0.0], |_| 1.0, &params, &bounds);
        assert_eq!(audit.true_robustifier_contribution, 0.0);
        assert!(!audit.violated);

        // sign flips with x2
        let audit = audit_claimed_bound(&dvector![0.0, 1.0], |_| 1.0, &params, &bounds);
        assert_relative_eq!(audit.true_robustifier_contribution, -3.0, epsilon = 1e-14);
        assert!(!audit.violated);

        // vanishing gain zeroes the contribution
        let audit = audit_claimed_bound(&dvector![0.0, -1.0], |_| 0.0, &params, &bounds);
        assert_eq!(audit.true_robustifier_contribution, 0.0);
        assert!(!audit.violated);
    }

    #[test]
    fn optimal_policy_derivative_never_positive() {
        let env = make_counterexample(|x: &State| 1.0 + 0.2 * x[1] * x[1]);
        let cost = StageCost::counterexample();
        let kappa = env.optimal_policy().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let x = dvector![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let u = kappa(&x);
            let d = lyap_derivative(grad_v, &env, &x, &u).unwrap();
            assert!(
                (d + cost.evaluate(&x, &u)).abs() <= 1e-10,
                "dL/dt is not -rho* at {x:?}"
            );
            assert!(d <= 1e-12);
        }
    }
}

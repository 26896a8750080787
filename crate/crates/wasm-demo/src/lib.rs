//! Browser bindings for the laboratory's three interactive views.
//!
//! Each function returns a JSON string (plain data, easy to consume from a
//! static page without a framework):
//!
//! - [`region_curve`] — `dL/dt` along the slice `x1 = 0` for chosen
//!   robustifier gains, with the exact positive interval and the stated set,
//! - [`simulate_trajectory`] — counterexample phase trajectory and Lyapunov
//!   value under the optimal or the robustified policy,
//! - [`critic_demo`] — a deterministic critic-learning run with the squared
//!   weight error and excitation level over time.
//!
//! On invalid inputs the JSON carries a single `error` field instead.

// `!(x > 0.0)` is used on purpose in validations: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{dvector, DVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use hjblab::actor::{effective_policy, RobustifierParams};
use hjblab::convergence::{run_critic_trial, BehaviorPolicy, Exploration, TrialSetup};
use hjblab::envs::{make_counterexample, step_rk4, StageCost};
use hjblab::features::FeatureMap;
use hjblab::lyapunov::{counterexample_decomposition, positive_region};

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

fn error_json(message: impl std::fmt::Display) -> String {
    to_json(&serde_json::json!({ "error": message.to_string() }))
}

#[derive(Serialize)]
struct RegionCurve {
    xs: Vec<f64>,
    ldot: Vec<f64>,
    exact: Option<(f64, f64)>,
    stated: Option<(f64, f64)>,
    width: f64,
}

/// `dL/dt` on the slice `x1 = 0`, `g == 1`, sampled at `points` positions
/// over `[x2_min, x2_max]`, plus the exact positive interval.
#[wasm_bindgen]
pub fn region_curve(k: f64, a: f64, x2_min: f64, x2_max: f64, points: usize) -> String {
    if points < 2 || !(x2_max > x2_min) {
        return error_json("need points >= 2 and x2_max > x2_min");
    }
    let params = match RobustifierParams::new(k, a) {
        Ok(p) => p,
        Err(e) => return error_json(e),
    };
    let region = match positive_region(k, a) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let mut xs = Vec::with_capacity(points);
    let mut ldot = Vec::with_capacity(points);
    for i in 0..points {
        let x2 = x2_min + (x2_max - x2_min) * i as f64 / (points - 1) as f64;
        xs.push(x2);
        ldot.push(counterexample_decomposition(&dvector![0.0, x2], |_| 1.0, &params).total());
    }
    to_json(&RegionCurve {
        xs,
        ldot,
        exact: region.exact,
        stated: region.stated,
        width: region.width(),
    })
}

#[derive(Serialize)]
struct Trajectory {
    t: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
    lyapunov: Vec<f64>,
}

/// Integrate the counterexample from `(x1_0, x2_0)` under the optimal policy
/// (or the robustified one) and report the trajectory with `L = x1^2 + x2^2`.
#[wasm_bindgen]
pub fn simulate_trajectory(
    k: f64,
    a: f64,
    x1_0: f64,
    x2_0: f64,
    horizon: f64,
    dt: f64,
    robustified: bool,
) -> String {
    if !(horizon > 0.0) || !(dt > 0.0) || horizon / dt > 2e6 {
        return error_json("need horizon > 0, dt > 0 and horizon/dt <= 2e6");
    }
    let params = match RobustifierParams::new(k, a) {
        Ok(p) => p,
        Err(e) => return error_json(e),
    };
    let env = make_counterexample(|_| 1.0);
    let kappa = match env.optimal_policy() {
        Ok(p) => p,
        Err(e) => return error_json(e),
    };
    let policy = move |x: &DVector<f64>| {
        if robustified {
            effective_policy(|y| kappa(y), &params, x)
        } else {
            kappa(x)
        }
    };
    let steps = (horizon / dt).round() as usize;
    let stride = (steps / 2000).max(1);
    let mut x = dvector![x1_0, x2_0];
    let mut out = Trajectory {
        t: Vec::new(),
        x1: Vec::new(),
        x2: Vec::new(),
        lyapunov: Vec::new(),
    };
    for step in 0..=steps {
        if step % stride == 0 || step == steps {
            out.t.push(step as f64 * dt);
            out.x1.push(x[0]);
            out.x2.push(x[1]);
            out.lyapunov.push(x.norm_squared());
        }
        if step == steps {
            break;
        }
        x = match step_rk4(&env, &x, &policy, dt) {
            Ok(next) => next,
            Err(e) => return error_json(e),
        };
        if !x[0].is_finite() || !x[1].is_finite() {
            return error_json("trajectory diverged");
        }
    }
    to_json(&out)
}

#[derive(Serialize)]
struct CriticRun {
    t: Vec<f64>,
    weight_error_sq: Vec<f64>,
    lambda_min: Vec<f64>,
    realized_epsilon: f64,
    fitted_decay: Option<f64>,
    guaranteed_decay: f64,
}

/// Deterministic critic-learning run on the counterexample under the optimal
/// policy; mirrors the `critic-deterministic` scenario with a small budget.
#[wasm_bindgen]
pub fn critic_demo(alpha: f64, buffer: usize, horizon: f64, seed: u64) -> String {
    if !(alpha > 0.0) || buffer == 0 || !(horizon > 0.0) || horizon > 120.0 {
        return error_json("need alpha > 0, buffer >= 1, 0 < horizon <= 120");
    }
    let dt = 1e-3;
    if dt * alpha * buffer as f64 > 1.0 {
        return error_json("alpha * buffer too large for the fixed step 1e-3");
    }
    let features = match FeatureMap::monomials(2, 2, false) {
        Ok(f) => f,
        Err(e) => return error_json(e),
    };
    let setup = TrialSetup {
        env: make_counterexample(|_| 1.0),
        cost: StageCost::counterexample(),
        features: features.clone(),
        policy: BehaviorPolicy::Optimal,
        alpha,
        theta0: DVector::zeros(features.len()),
        buffer_size: buffer,
        pe_threshold: 1e-4,
        warmup: 3.0,
        exploration: Some(Exploration {
            period: 0.05,
            radius: 2.0,
        }),
        sample_stride: 25,
        x0: dvector![2.0, -1.0],
        dt,
        horizon,
        log_stride: 10,
    };
    let record = match run_critic_trial(&setup, seed) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let fitted = hjblab::convergence::fit_decay_rate(&record.times, &record.weight_error_sq).ok();
    to_json(&CriticRun {
        t: record.times,
        weight_error_sq: record.weight_error_sq,
        lambda_min: record.lambda_min,
        realized_epsilon: record.realized_epsilon,
        fitted_decay: fitted,
        guaranteed_decay: 2.0 * alpha * record.realized_epsilon,
    })
}

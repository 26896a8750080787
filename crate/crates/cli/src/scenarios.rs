//! Scenario registry and runners.
//!
//! Each runner executes one experiment, writes its CSV artifacts (plus
//! optional SVG plots) into the output directory, and returns the list of
//! scenario-level checks; the process exit status is 0 iff every check
//! passes.

use anyhow::{anyhow, Result};
use nalgebra::{dvector, DVector};

use hjblab::actor::{AdaptiveController, RobustifierParams};
use hjblab::convergence::{
    check_bound, estimate_constants, fit_decay_rate, run_trials, tail_mean, BehaviorPolicy,
    Exploration, TrialRecord, TrialSetup,
};
use hjblab::envs::{
    make_adaptive_plant, make_counterexample, make_lq_stochastic, solve_lq, step_rk4, LqParams,
    StageCost,
};
use hjblab::features::FeatureMap;
use hjblab::lyapunov::{
    audit_claimed_bound, counterexample_decomposition, positive_region, BoundConstants,
};

use crate::config::ScenarioConfig;
use crate::report::{cell, write_csv, write_svg, Check, OutputDir, Series};

pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub outputs: &'static str,
}

/// Alphabetized registry; `hjblab list` prints it verbatim.
pub const REGISTRY: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "adaptive-baseline",
        description: "classical adaptive controller on the scalar plant; composite Lyapunov value must not increase",
        outputs: "run.csv, summary.csv [, run.svg]",
    },
    ScenarioInfo {
        name: "bound-check",
        description: "Monte Carlo verification of the stochastic mean-square critic-error bound",
        outputs: "trials.csv, bound_report.csv, constants.json, summary.csv [, bound.svg]",
    },
    ScenarioInfo {
        name: "counterexample-audit",
        description: "dense sign scan of dL/dt on the slice x1 = 0 against the exact positive region",
        outputs: "scan.csv, region.csv, summary.csv [, scan.svg]",
    },
    ScenarioInfo {
        name: "critic-deterministic",
        description: "critic learning on the counterexample under the optimal policy; decay rate vs 2*alpha*eps",
        outputs: "critic.csv, summary.csv [, critic.svg]",
    },
    ScenarioInfo {
        name: "critic-stochastic",
        description: "LQ benchmark under mu = 0 vs mu = kappa*; perturbation growth and ultimate error gap",
        outputs: "trials.csv, policy_compare.csv, summary.csv [, critic.svg]",
    },
    ScenarioInfo {
        name: "eq45-witness",
        description: "states where the robustifier contribution to dL/dt is positive, contradicting its claimed sign",
        outputs: "audit.csv, summary.csv",
    },
];

pub fn run_scenario(cfg: &ScenarioConfig, out: &OutputDir, plots: bool) -> Result<Vec<Check>> {
    match cfg.scenario.as_str() {
        "adaptive-baseline" => adaptive_baseline(cfg, out, plots),
        "bound-check" => bound_check(cfg, out, plots),
        "counterexample-audit" => counterexample_audit(cfg, out, plots),
        "critic-deterministic" => critic_deterministic(cfg, out, plots),
        "critic-stochastic" => critic_stochastic(cfg, out, plots),
        "eq45-witness" => eq45_witness(cfg, out, plots),
        other => Err(anyhow!("unknown scenario '{other}'")),
    }
}

fn counterexample_audit(cfg: &ScenarioConfig, out: &OutputDir, plots: bool) -> Result<Vec<Check>> {
    let ce = &cfg.counterexample;
    let params = RobustifierParams::new(ce.k, ce.a)?;
    let g = ce.g;
    let region = positive_region(ce.k, ce.a)?;

    let n = ((cfg.scan.x2_max - cfg.scan.x2_min) / cfg.scan.step).round() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    let mut xs = Vec::with_capacity(n + 1);
    let mut totals = Vec::with_capacity(n + 1);
    let mut mismatches = 0usize;
    let mut boundaries = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    for i in 0..=n {
        let x2 = cfg.scan.x2_min + i as f64 * cfg.scan.step;
        let x = dvector![0.0, x2];
        let d = counterexample_decomposition(&x, |_| g, &params);
        let total = d.total();
        let positive = total > 0.0;
        // prediction from the quadratic x2^2 + K x2 + A (slice form with g = 1)
        if g == 1.0 {
            let predicted = x2 != 0.0 && x2 * x2 + ce.k * x2 + ce.a < 0.0;
            if positive != predicted {
                mismatches += 1;
            }
        }
        if let Some((px2, ppos)) = prev {
            if ppos != positive {
                boundaries.push(0.5 * (px2 + x2));
            }
        }
        prev = Some((x2, positive));
        xs.push(x2);
        totals.push(total);
        rows.push(vec![
            cell(0.0),
            cell(x2),
            cell(d.minus_rho_star),
            cell(d.actor_error_term),
            cell(d.delta_u_term),
            cell(d.robustifier_term),
            cell(total),
            (positive as u8).to_string(),
        ]);
    }
    write_csv(
        &out.path("scan.csv"),
        &[
            "x1",
            "x2",
            "minus_rho_star",
            "actor_error_term",
            "delta_u_term",
            "robustifier_term",
            "total",
            "violated",
        ],
        &rows,
    )?;

    let (lo, hi) = region
        .exact
        .map(|(l, h)| (cell(l), cell(h)))
        .unwrap_or_default();
    let (plo, phi) = region
        .stated
        .map(|(l, h)| (cell(l), cell(h)))
        .unwrap_or_default();
    write_csv(
        &out.path("region.csv"),
        &[
            "k",
            "a",
            "lower_root",
            "upper_root",
            "paper_lower",
            "paper_upper",
        ],
        &[vec![cell(ce.k), cell(ce.a), lo, hi, plo, phi]],
    )?;

    if plots {
        write_svg(
            &out.path("scan.svg"),
            &format!("dL/dt on x1 = 0 (K = {}, A = {})", ce.k, ce.a),
            &[Series {
                label: "dL/dt",
                x: &xs,
                y: &totals,
            }],
        )?;
    }

    // boundary agreement: every detected sign flip near a root of the quadratic
    let roots: Vec<f64> = region
        .exact
        .map(|(l, h)| {
            [l, h]
                .into_iter()
                .filter(|r| (cfg.scan.x2_min..=cfg.scan.x2_max).contains(r))
                .collect()
        })
        .unwrap_or_default();
    let boundary_err = if boundaries.len() == roots.len() {
        boundaries
            .iter()
            .zip(roots.iter())
            .map(|(b, r)| (b - r).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    Ok(vec![
        Check::le("scan_sign_mismatches", mismatches as f64, 0.0),
        Check::le("boundary_error", boundary_err, 2.0 * cfg.scan.step),
    ])
}

fn eq45_witness(cfg: &ScenarioConfig, out: &OutputDir, _plots: bool) -> Result<Vec<Check>> {
    let ce = &cfg.counterexample;
    let params = RobustifierParams::new(ce.k, ce.a)?;
    let g = ce.g;
    // norm bounds over the audited box, as the criticized inequality assumes
    let box_half = 3.0;
    let bounds = BoundConstants {
        grad_v_norm: 2.0 * (2.0_f64).sqrt() * box_half,
        gain_norm: g.abs(),
    };

    let mut rows = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut best_state = (0.0, 0.0);
    let mut violations = 0usize;
    let steps = 120;
    let mut audit_at = |x1: f64, x2: f64| {
        let audit = audit_claimed_bound(&dvector![x1, x2], |_| g, &params, &bounds);
        if audit.violated {
            violations += 1;
        }
        if audit.true_robustifier_contribution > best {
            best = audit.true_robustifier_contribution;
            best_state = (x1, x2);
        }
        rows.push(vec![
            cell(x1),
            cell(x2),
            cell(audit.true_robustifier_contribution),
            cell(audit.claimed_upper_bound),
            (audit.violated as u8).to_string(),
        ]);
    };
    for i in 0..=steps {
        for j in 0..=steps {
            let x1 = -box_half + 2.0 * box_half * i as f64 / steps as f64;
            let x2 = -box_half + 2.0 * box_half * j as f64 / steps as f64;
            audit_at(x1, x2);
        }
    }
    // the canonical witness state
    audit_at(0.0, -1.0);
    write_csv(
        &out.path("audit.csv"),
        &[
            "x1",
            "x2",
            "true_contribution",
            "claimed_upper_bound",
            "violated",
        ],
        &rows,
    )?;

    println!(
        "  strongest witness: x = ({:.3}, {:.3}) with contribution {best:+.3}",
        best_state.0, best_state.1
    );
    Ok(vec![
        Check::ge("violations_found", violations as f64, 1.0),
        Check::ge("max_true_contribution", best, 1.0),
    ])
}

fn adaptive_baseline(cfg: &ScenarioConfig, out: &OutputDir, plots: bool) -> Result<Vec<Check>> {
    let ad = &cfg.adaptive_plant;
    // shipped scalar plant: f(x) = x (unstable), g == 1
    let env = make_adaptive_plant(|x| x, |_| 1.0, ad.g_min)?;
    let phi_f = FeatureMap::from_exponents(1, vec![vec![1]])?;
    let phi_g = FeatureMap::from_exponents(1, vec![vec![0]])?;
    let mut ctrl = AdaptiveController::new(
        phi_f,
        phi_g,
        dvector![ad.theta_f0],
        dvector![ad.theta_g0],
        ad.alpha_f,
        ad.alpha_g,
        ad.g_min,
    )?;
    let theta_f_star = dvector![1.0];
    let theta_g_star = dvector![1.0];

    let horizon = 20.0 / ad.k;
    let steps = (horizon / ad.dt).round() as usize;
    let mut x = dvector![ad.x0];
    let mut lyap = ctrl.lyapunov_value(x[0], &theta_f_star, &theta_g_star);
    let mut max_rise: f64 = 0.0;
    let mut min_gain = f64::INFINITY;
    let mut rows = Vec::new();
    let mut ts = Vec::new();
    let mut lyaps = Vec::new();
    let mut states = Vec::new();
    for k in 0..=steps {
        let t = k as f64 * ad.dt;
        if k % ad.log_stride == 0 || k == steps {
            rows.push(vec![
                cell(t),
                cell(x[0]),
                cell(ctrl.theta_f[0]),
                cell(ctrl.theta_g[0]),
                cell(ctrl.g_hat(x[0]).map_err(|e| anyhow!(e.to_string()))?),
                cell(lyap),
            ]);
            ts.push(t);
            lyaps.push(lyap);
            states.push(x[0]);
        }
        if k == steps {
            break;
        }
        let u = ctrl
            .step(x[0], ad.k, ad.dt)
            .map_err(|e| anyhow!(e.to_string()))?;
        x = step_rk4(&env, &x, |_| dvector![u], ad.dt).map_err(|e| anyhow!(e.to_string()))?;
        let next = ctrl.lyapunov_value(x[0], &theta_f_star, &theta_g_star);
        max_rise = max_rise.max(next - lyap);
        min_gain = min_gain.min(ctrl.g_hat(x[0]).map_err(|e| anyhow!(e.to_string()))?);
        lyap = next;
    }
    write_csv(
        &out.path("run.csv"),
        &["t", "x", "theta_f", "theta_g", "g_hat", "lyapunov"],
        &rows,
    )?;
    if plots {
        write_svg(
            &out.path("run.svg"),
            "adaptive baseline: state and Lyapunov value",
            &[
                Series {
                    label: "x(t)",
                    x: &ts,
                    y: &states,
                },
                Series {
                    label: "L(t)",
                    x: &ts,
                    y: &lyaps,
                },
            ],
        )?;
    }
    Ok(vec![
        Check::le("max_lyapunov_rise_per_step", max_rise, 1e-6),
        Check::ge("min_gain_estimate", min_gain, ad.g_min - 1e-12),
        Check::le("terminal_state_abs", x[0].abs(), 1e-3),
    ])
}

/// Map the config's policy choice onto the harness enum; `fallback` is the
/// scenario's natural policy when the config leaves it out.
fn policy_from(cfg: &ScenarioConfig, fallback: BehaviorPolicy) -> Result<BehaviorPolicy> {
    Ok(match cfg.policy.kind.as_deref() {
        None => fallback,
        Some("optimal") => BehaviorPolicy::Optimal,
        Some("zero") => BehaviorPolicy::Zero,
        Some("greedy_from_critic") => BehaviorPolicy::GreedyFromCritic,
        Some("optimal_plus_robustifier") => BehaviorPolicy::OptimalPlusRobustifier {
            gain: cfg.policy.k,
            offset: cfg.policy.a,
        },
        Some(other) => return Err(anyhow!("unknown policy kind '{other}'")),
    })
}

/// Monomial feature map from the `[features]` table; `constant` defaults to
/// whatever the scenario's value function needs for exact representation.
fn features_from(cfg: &ScenarioConfig, n: usize, constant_default: bool) -> Result<FeatureMap> {
    let constant = cfg.features.constant.unwrap_or(constant_default);
    Ok(FeatureMap::monomials(n, cfg.features.degree, constant)?)
}

fn counterexample_trial_setup(cfg: &ScenarioConfig) -> Result<TrialSetup> {
    let g = cfg.counterexample.g;
    let env = make_counterexample(move |_| g);
    let cost = StageCost::counterexample();
    let features = features_from(cfg, 2, false)?;
    let x0 = state_from(&cfg.trials.x0, 2)?;
    Ok(TrialSetup {
        env,
        cost,
        features: features.clone(),
        policy: policy_from(cfg, BehaviorPolicy::Optimal)?,
        alpha: cfg.critic.alpha,
        theta0: DVector::zeros(features.len()),
        buffer_size: cfg.critic.buffer,
        pe_threshold: cfg.critic.pe_threshold,
        warmup: cfg.critic.warmup,
        exploration: exploration_from(cfg),
        sample_stride: cfg.critic.sample_stride,
        x0,
        dt: cfg.integrator.dt,
        horizon: cfg.integrator.horizon,
        log_stride: cfg.trials.log_stride,
    })
}

fn lq_trial_setup(cfg: &ScenarioConfig, policy: BehaviorPolicy) -> Result<TrialSetup> {
    let lq = &cfg.lq_stochastic;
    let params = LqParams {
        a: lq.a,
        b: lq.b,
        q: lq.q,
        r: lq.r,
        gamma: lq.gamma,
        s: lq.s,
    };
    let env = make_lq_stochastic(params)?;
    let cost = StageCost::lq(lq.q, lq.r, lq.gamma)?;
    let features = features_from(cfg, 1, true)?;
    let x0 = state_from(&cfg.trials.x0, 1)?;
    Ok(TrialSetup {
        env,
        cost,
        features: features.clone(),
        policy,
        alpha: cfg.critic.alpha,
        theta0: DVector::zeros(features.len()),
        buffer_size: cfg.critic.buffer,
        pe_threshold: cfg.critic.pe_threshold,
        warmup: cfg.critic.warmup,
        exploration: exploration_from(cfg),
        sample_stride: cfg.critic.sample_stride,
        x0,
        dt: cfg.integrator.dt,
        horizon: cfg.integrator.horizon,
        log_stride: cfg.trials.log_stride,
    })
}

fn exploration_from(cfg: &ScenarioConfig) -> Option<Exploration> {
    (cfg.critic.restart_period > 0.0).then_some(Exploration {
        period: cfg.critic.restart_period,
        radius: cfg.critic.restart_radius,
    })
}

fn state_from(values: &[f64], n: usize) -> Result<DVector<f64>> {
    if values.len() != n {
        return Err(anyhow!(
            "trials.x0 must have length {n} for this scenario (got {})",
            values.len()
        ));
    }
    Ok(DVector::from_column_slice(values))
}

/// Per-step critic log: `t`, flattened weights, squared weight error,
/// excitation level, summed |Z| over the buffer. Multi-trial files carry a
/// `trial`/`seed` prefix; the single-trial file keeps exactly those columns.
fn critic_csv(out: &OutputDir, name: &str, records: &[(usize, &TrialRecord)]) -> Result<()> {
    let multi = records.len() > 1;
    let n_theta = records.first().map(|(_, r)| r.thetas[0].len()).unwrap_or(0);
    let theta_names: Vec<String> = (0..n_theta).map(|i| format!("theta_{i}")).collect();
    let mut header: Vec<&str> = if multi {
        vec!["trial", "seed", "t"]
    } else {
        vec!["t"]
    };
    header.extend(theta_names.iter().map(|s| s.as_str()));
    header.extend(["weight_error_sq", "lambda_min", "z_sum_abs"]);
    let mut rows = Vec::new();
    for (idx, rec) in records {
        for j in 0..rec.times.len() {
            let mut row = if multi {
                vec![idx.to_string(), rec.seed.to_string(), cell(rec.times[j])]
            } else {
                vec![cell(rec.times[j])]
            };
            row.extend(rec.thetas[j].iter().map(|&v| cell(v)));
            row.push(cell(rec.weight_error_sq[j]));
            row.push(cell(rec.lambda_min[j]));
            row.push(cell(rec.z_sum_abs[j]));
            rows.push(row);
        }
    }
    write_csv(&out.path(name), &header, &rows)
}

fn critic_deterministic(cfg: &ScenarioConfig, out: &OutputDir, plots: bool) -> Result<Vec<Check>> {
    let setup = counterexample_trial_setup(cfg)?;
    let record = hjblab::convergence::run_critic_trial(&setup, cfg.seed)
        .map_err(|e| anyhow!(e.to_string()))?;
    critic_csv(out, "critic.csv", &[(0, &record)])?;
    if plots {
        write_svg(
            &out.path("critic.svg"),
            "squared critic weight error (deterministic counterexample)",
            &[Series {
                label: "|theta_err|^2",
                x: &record.times,
                y: &record.weight_error_sq,
            }],
        )?;
    }
    let eps = record.realized_epsilon;
    let rate = fit_decay_rate(&record.times, &record.weight_error_sq)
        .map_err(|e| anyhow!(e.to_string()))?;
    println!(
        "  realized eps = {eps:.4e} (established at t = {:.3}), fitted decay = {rate:.4}",
        record.pe_established_at
    );
    Ok(vec![
        Check::ge("realized_epsilon", eps, cfg.critic.pe_threshold),
        Check::ge("fitted_decay_rate", rate, 0.8 * 2.0 * setup.alpha * eps),
    ])
}

fn ultimate_stats(trials: &[TrialRecord]) -> (f64, f64) {
    let tails: Vec<f64> = trials
        .iter()
        .map(|t| tail_mean(&t.weight_error_sq, 0.25))
        .collect();
    let n = tails.len() as f64;
    let mean = tails.iter().sum::<f64>() / n;
    let var = tails.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn critic_stochastic(cfg: &ScenarioConfig, out: &OutputDir, plots: bool) -> Result<Vec<Check>> {
    let setup_zero = lq_trial_setup(cfg, BehaviorPolicy::Zero)?;
    let setup_opt = lq_trial_setup(cfg, BehaviorPolicy::Optimal)?;
    let count = cfg.trials.count;
    let trials_zero =
        run_trials(&setup_zero, cfg.seed, count).map_err(|e| anyhow!(e.to_string()))?;
    let trials_opt = run_trials(&setup_opt, cfg.seed + count as u64, count)
        .map_err(|e| anyhow!(e.to_string()))?;

    let refs: Vec<(usize, &TrialRecord)> = trials_zero.iter().enumerate().collect();
    critic_csv(out, "trials.csv", &refs)?;

    // measured |Z| / x^2 against the closed form (2ap + q - gamma p)
    let sol = solve_lq(&LqParams {
        a: cfg.lq_stochastic.a,
        b: cfg.lq_stochastic.b,
        q: cfg.lq_stochastic.q,
        r: cfg.lq_stochastic.r,
        gamma: cfg.lq_stochastic.gamma,
        s: cfg.lq_stochastic.s,
    })
    .map_err(|e| anyhow!(e.to_string()))?;
    let expected = (2.0 * cfg.lq_stochastic.a * sol.p + cfg.lq_stochastic.q
        - cfg.lq_stochastic.gamma * sol.p)
        .abs();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for t in &trials_zero {
        for (z, xn) in t.z_abs.iter().zip(t.state_norm.iter()) {
            if *xn > 1e-6 {
                let r = z / (xn * xn);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }

    let (ult_zero, se_zero) = ultimate_stats(&trials_zero);
    let (ult_opt, se_opt) = ultimate_stats(&trials_opt);
    write_csv(
        &out.path("policy_compare.csv"),
        &["policy", "ultimate_ms", "std_err"],
        &[
            vec!["zero".into(), cell(ult_zero), cell(se_zero)],
            vec!["optimal".into(), cell(ult_opt), cell(se_opt)],
        ],
    )?;
    if plots {
        let grid = trials_zero[0].times.len();
        let mean = |trials: &[TrialRecord]| -> Vec<f64> {
            (0..grid)
                .map(|j| {
                    trials.iter().map(|t| t.weight_error_sq[j]).sum::<f64>() / trials.len() as f64
                })
                .collect()
        };
        let mz = mean(&trials_zero);
        let mo = mean(&trials_opt);
        write_svg(
            &out.path("critic.svg"),
            "mean squared critic weight error by behavior policy",
            &[
                Series {
                    label: "mu = 0",
                    x: &trials_zero[0].times,
                    y: &mz,
                },
                Series {
                    label: "mu = kappa*",
                    x: &trials_opt[0].times,
                    y: &mo,
                },
            ],
        )?;
    }
    println!(
        "  |Z|/x^2 in [{lo:.4}, {hi:.4}] (closed form {expected:.4}); ultimate ms {ult_zero:.3e} vs {ult_opt:.3e}"
    );
    Ok(vec![
        Check::ge("z_ratio_min", lo, expected - 0.005),
        Check::le("z_ratio_max", hi, expected + 0.005),
        Check::ge(
            "ultimate_ms_separation",
            ult_zero - ult_opt,
            3.0 * (se_zero + se_opt),
        ),
    ])
}

fn bound_check(cfg: &ScenarioConfig, out: &OutputDir, plots: bool) -> Result<Vec<Check>> {
    let setup = lq_trial_setup(cfg, policy_from(cfg, BehaviorPolicy::Zero)?)?;
    let trials =
        run_trials(&setup, cfg.seed, cfg.trials.count).map_err(|e| anyhow!(e.to_string()))?;
    let refs: Vec<(usize, &TrialRecord)> = trials.iter().enumerate().collect();
    critic_csv(out, "trials.csv", &refs)?;

    let constants = estimate_constants(&setup, &trials).map_err(|e| anyhow!(e.to_string()))?;
    let report = check_bound(&trials, &constants).map_err(|e| anyhow!(e.to_string()))?;

    let rows: Vec<Vec<String>> = (0..report.times.len())
        .map(|j| {
            vec![
                cell(report.times[j]),
                cell(report.empirical_ms[j]),
                cell(report.bound[j]),
                cell(report.margin[j]),
                (report.pass[j] as u8).to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.path("bound_report.csv"),
        &["t", "empirical_ms", "bound", "margin", "pass"],
        &rows,
    )?;

    let constants_json = serde_json::json!({
        "alpha": constants.alpha,
        "epsilon": constants.epsilon,
        "C": constants.growth,
        "X_bar": constants.state_fourth_root,
        "M": constants.buffer_size,
        "D": constants.bound_constant,
    });
    std::fs::write(
        out.path("constants.json"),
        serde_json::to_string_pretty(&constants_json)? + "\n",
    )?;

    if plots {
        write_svg(
            &out.path("bound.svg"),
            "empirical mean-square weight error vs bound",
            &[
                Series {
                    label: "empirical",
                    x: &report.times,
                    y: &report.empirical_ms,
                },
                Series {
                    label: "bound",
                    x: &report.times,
                    y: &report.bound,
                },
            ],
        )?;
    }
    let min_margin = report.margin.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "  constants: eps = {:.3e}, C = {:.4}, X_bar = {:.4}, D = {:.4}; min margin {min_margin:.4}",
        constants.epsilon, constants.growth, constants.state_fourth_root, constants.bound_constant
    );
    Ok(vec![
        Check::ge("realized_epsilon", constants.epsilon, 0.0),
        Check::ge("min_bound_margin", min_margin, 0.0),
    ])
}

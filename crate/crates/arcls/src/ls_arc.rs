//! Line-search cubic-regularization solvers.
//!
//! Under the iteration's scaled norm, the cubic subproblem restricted to the
//! quasi-Newton ray has a closed-form stationary step length δ, and the
//! Cauchy comparison reduces to evaluating the model at two scalar points.
//! An outer iteration therefore costs one inner (Krylov) solve plus a trial
//! loop that only re-evaluates the objective — never the Hessian.
//!
//! Two variants: the first-order one runs the inner solver to a fixed
//! relative tolerance; the second-order one watches the Krylov iterates and
//! stops at the first iterate whose model-gradient estimate passes the
//! residual gate, then keeps iterating until the angle condition holds.

use crate::baselines::arc_l2_iteration;
use crate::config::SolverConfig;
use crate::driver::{Abort, Outer};
use crate::krylov::{solve_symmetric, KrylovIterate, NO_INSPECT};
use crate::problems::{Problem, Vector};
use crate::record::{IterationTrace, RunRecord, Status, StepMode};
use crate::scaled_norm::{
    beta_policy, cubic_model_value, direction_analysis, DirectionInfo, ModelRay, NormMethod,
};

/// Which stopping rule drives the inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Inner solve to a fixed relative residual tolerance.
    FirstOrder,
    /// Inner solve until the residual gate (and then the angle condition)
    /// holds — the variant with second-order guarantees.
    SecondOrder,
}

/// Step length along the quasi-Newton ray: the unique stationary point of
/// t ↦ m(t·s^Q) with the sign opposite to the slope. With
/// A = 4σθ^{3/2}/|slope| (θ^{3/2} = β^{3/2}‖s^Q‖³):
/// slope < 0 → δ = 2/(1 + √(1+A)); slope > 0 → δ = −2(1 + √(1+A))/A,
/// both cancellation-free forms of 2/(1 − sign(slope)√(1+A)).
pub fn arc_delta(info: &DirectionInfo, sigma: f64) -> f64 {
    let a = 4.0 * sigma * info.theta_32() / info.slope.abs();
    let root = (1.0 + a).sqrt();
    if info.slope < 0.0 {
        2.0 / (1.0 + root)
    } else {
        -2.0 * (1.0 + root) / a
    }
}

/// Step lengths for one trial: δ along s^Q and δ^C > 0 along −g (the scaled
/// Cauchy step). `gbg_over_g2` is q = gᵀBg/‖g‖². δ^C is the positive root
/// of q·t + σχ^{3/2}‖g‖·t² = 1, written cancellation-free on both branches.
pub fn arc_step_lengths(info: &DirectionInfo, sigma: f64, gbg_over_g2: f64) -> (f64, f64) {
    let delta = arc_delta(info, sigma);
    let q = gbg_over_g2;
    let c = 4.0
        * sigma
        * info
            .chi_32_g3()
            .expect("Cauchy length needs chi; angle condition not checked upstream")
        / (info.norm_g * info.norm_g);
    let root = (q * q + c).sqrt();
    let delta_c = if q > 0.0 {
        2.0 / (q + root)
    } else {
        2.0 * (root - q) / c
    };
    (delta, delta_c)
}

/// Residual gate of the second-order variant: the inner iterate qualifies
/// when ‖∇m^Q(s^Q)‖ ≤ ζ·|δ|·‖s^Q‖², with δ computed from the iterate's own
/// geometry. Non-finite δ never qualifies.
pub fn second_order_gate(residual_norm: f64, info: &DirectionInfo, sigma: f64, zeta: f64) -> bool {
    let delta = arc_delta(info, sigma);
    if !delta.is_finite() {
        return false;
    }
    residual_norm <= zeta * delta.abs() * info.norm_sq * info.norm_sq
}

/// Result of a successful trial loop.
#[derive(Debug, Clone)]
pub struct AcceptOutcome {
    pub delta: f64,
    pub delta_c: f64,
    pub rho: f64,
    /// Failed trials before the accepted one.
    pub backtracks: usize,
    pub f_trial: f64,
    /// Accepted step δ·s^Q.
    pub step: Vector,
    /// σ of the accepted trial.
    pub sigma_used: f64,
    /// σ for the next iteration: max(ν₁·σ_used, σ_min).
    pub sigma_next: f64,
    /// β of the accepted trial.
    pub beta: f64,
}

/// Trial loop of the cubic line-search solver. Repeats with σ ← ν₂σ —
/// refreshing β (hence θ, χ) and both step lengths every time — until the
/// decrease ratio clears η and the model value along δ·s^Q is at most the
/// model value at the scaled Cauchy point. One objective evaluation per
/// trial; the Hessian is never touched.
///
/// `model_grad` is B·s^Q + g from the inner solve: the curvature s^QᵀBs^Q
/// is recovered as s^Qᵀ·model_grad − slope, so acceptance uses the true
/// model of the inexact direction at zero extra operator applications.
pub fn arc_accept_loop(
    outer: &mut Outer,
    s_q: &Vector,
    model_grad: &Vector,
    gbg: f64,
    sigma_in: f64,
) -> Result<AcceptOutcome, Abort> {
    let config = outer.config;
    let g = outer.g.clone();
    let slope = g.dot(s_q);
    let curv_sq = s_q.dot(model_grad) - slope;
    let q = gbg / (outer.gnorm * outer.gnorm);

    let mut sigma = sigma_in;
    for backtracks in 0..config.max_backtracks {
        let beta = beta_policy(
            NormMethod::LsArc,
            sigma,
            slope,
            config.beta_min,
            config.beta_max,
        );
        let info = match direction_analysis(&g, s_q, beta, config.eps_d) {
            Some(i) => i,
            None => {
                return Err(Abort::Stalled(
                    "direction degenerated inside the trial loop".to_string(),
                ))
            }
        };
        let (delta, delta_c) = arc_step_lengths(&info, sigma, q);

        // A trial is acceptable only when its arithmetic is finite, the
        // model prefers the quasi-Newton ray over the Cauchy ray, the
        // predicted quadratic decrease is positive, and ρ clears η.
        let mut accept = delta.is_finite() && delta_c.is_finite() && delta_c > 0.0;
        let mut rho = f64::NEG_INFINITY;
        let mut f_trial = f64::NAN;
        if accept {
            let m_sq = cubic_model_value(outer.f, &info, curv_sq, sigma, delta, ModelRay::AlongSq);
            let m_cg = cubic_model_value(outer.f, &info, gbg, sigma, delta_c, ModelRay::AlongNegG);
            let pred_dec = -(delta * slope + 0.5 * delta * delta * curv_sq);
            accept = m_sq <= m_cg && pred_dec > 0.0;
            if accept {
                let trial = &outer.x + delta * s_q;
                match outer.ev.value(&trial) {
                    Ok(f_t) => {
                        f_trial = f_t;
                        rho = (outer.f - f_t) / pred_dec;
                        accept = rho >= config.eta;
                    }
                    Err(_) => accept = false,
                }
            }
        }
        if accept {
            return Ok(AcceptOutcome {
                delta,
                delta_c,
                rho,
                backtracks,
                f_trial,
                step: delta * s_q,
                sigma_used: sigma,
                sigma_next: (config.nu1 * sigma).max(config.sigma_min),
                beta,
            });
        }
        sigma *= config.nu2;
        if !sigma.is_finite() {
            return Err(Abort::Stalled("regularizer overflowed".to_string()));
        }
    }
    Err(Abort::Stalled(format!(
        "trial loop exhausted {} trials",
        config.max_backtracks
    )))
}

/// Solver name used in records and on the command line.
pub fn variant_name(variant: Variant) -> &'static str {
    match variant {
        Variant::FirstOrder => "ls-arc",
        Variant::SecondOrder => "ls-arc-s",
    }
}

/// Line-search cubic-regularization outer loop.
///
/// Per iteration: run the inner solver on B s = −g (variant-specific
/// stopping rule), then check the angle condition on the returned
/// direction. If it fails, take classical Euclidean cubic-regularization
/// iterations (sharing σ) until the first success, then return to scaled
/// mode; otherwise run the trial loop along s^Q.
pub fn lsarc_solve(problem: &Problem, config: &SolverConfig, variant: Variant) -> RunRecord {
    let name = variant_name(variant);
    if let Err(e) = config.validate() {
        return crate::baselines::config_error_record(
            problem,
            name,
            format!("config_invalid: {e}"),
        );
    }
    let mut outer = match Outer::new(problem, config, name) {
        Ok(o) => o,
        Err(rec) => return rec,
    };
    let mut sigma = config.sigma0;
    let mut fallback = false;

    loop {
        if let Some(st) = outer.stop_check() {
            return outer.finish(st);
        }
        if outer.k >= config.max_iter {
            return outer.finish(Status::IterationLimit);
        }

        if fallback {
            // Classical Euclidean cubic-regularization iteration, sharing σ.
            let sigma_used = sigma;
            let out = match arc_l2_iteration(&mut outer, sigma) {
                Ok(o) => o,
                Err(a) => return outer.finish_abort(a),
            };
            sigma = out.control_next;
            let k = outer.k;
            outer.k += 1;
            if out.accepted {
                let x_new = &outer.x + &out.s;
                if let Err(e) = outer.accept(x_new, out.f_trial) {
                    return outer.finish_abort(e.into());
                }
                fallback = false;
            }
            if outer.config.keep_trace {
                let t = IterationTrace {
                    k,
                    mode: StepMode::FallbackL2,
                    control: sigma_used,
                    step_len: out.s.norm(),
                    rho: out.rho,
                    backtracks: 0,
                    accepted: out.accepted,
                    f: outer.f,
                    gnorm: outer.gnorm,
                    matvecs: out.matvecs,
                    trial_matvecs: 0,
                    direction: out.s.as_slice().to_vec(),
                    step: if out.accepted {
                        out.s.as_slice().to_vec()
                    } else {
                        Vec::new()
                    },
                    lambda_boundary: out.multiplier,
                    cauchy_overridden: false,
                };
                outer.push_trace(t);
            }
            continue;
        }

        // --- scaled-mode attempt -----------------------------------------
        let x = outer.x.clone();
        let g = outer.g.clone();
        let hvp0 = outer.ev.counters.hvp_evals;
        let cap = config.inner_cap(x.len());
        let report = match variant {
            Variant::FirstOrder => {
                let ev = &mut outer.ev;
                solve_symmetric(
                    |v| ev.hess_vec_inner(&x, v),
                    &g,
                    config.inner_rtol,
                    cap,
                    NO_INSPECT,
                    false,
                )
            }
            Variant::SecondOrder => {
                // Stop at the first iterate passing the residual gate, then
                // keep going until the angle condition also holds.
                let mut gate_passed = false;
                let sig = sigma;
                let predicate = |it: &KrylovIterate| -> bool {
                    let slope = g.dot(it.x);
                    let beta = beta_policy(
                        NormMethod::LsArc,
                        sig,
                        slope,
                        config.beta_min,
                        config.beta_max,
                    );
                    match direction_analysis(&g, it.x, beta, config.eps_d) {
                        Some(info) => {
                            if !gate_passed
                                && second_order_gate(it.residual_estimate, &info, sig, config.zeta)
                            {
                                gate_passed = true;
                            }
                            gate_passed && info.descent_ok
                        }
                        None => false,
                    }
                };
                let ev = &mut outer.ev;
                solve_symmetric(
                    |v| ev.hess_vec_inner(&x, v),
                    &g,
                    config.inner_rtol,
                    cap,
                    Some(predicate),
                    false,
                )
            }
        };

        let slope = g.dot(&report.s_q);
        let beta = beta_policy(
            NormMethod::LsArc,
            sigma,
            slope,
            config.beta_min,
            config.beta_max,
        );
        let info = direction_analysis(&g, &report.s_q, beta, config.eps_d);
        // The final decision re-checks the gate against the recomputed
        // (authoritative) residual, not the recurrence estimate.
        let usable = match (&info, variant) {
            (Some(i), Variant::FirstOrder) => i.descent_ok,
            (Some(i), Variant::SecondOrder) => {
                i.descent_ok && second_order_gate(report.residual_norm, i, sigma, config.zeta)
            }
            (None, _) => false,
        };
        if !usable {
            // Angle condition failed: hand this iteration to the classical
            // engine (same iteration index).
            fallback = true;
            continue;
        }
        let info = info.expect("usable implies analysis succeeded");

        // One Hessian application outside the inner solver: gᵀBg for the
        // Cauchy comparison. The trial loop itself never touches B.
        let bg = match outer.ev.hess_vec(&x, &g) {
            Ok(v) => v,
            Err(e) => return outer.finish_abort(e.into()),
        };
        let gbg = g.dot(&bg);
        let iter_matvecs = outer.ev.counters.hvp_evals - hvp0;

        let trial_hvp0 = outer.ev.counters.hvp_evals;
        let outcome = match arc_accept_loop(&mut outer, &report.s_q, &report.model_grad, gbg, sigma)
        {
            Ok(o) => o,
            Err(a) => return outer.finish_abort(a),
        };
        let trial_matvecs = outer.ev.counters.hvp_evals - trial_hvp0;
        sigma = outcome.sigma_next;

        let k = outer.k;
        outer.k += 1;
        let x_new = &outer.x + &outcome.step;
        if let Err(e) = outer.accept(x_new, outcome.f_trial) {
            return outer.finish_abort(e.into());
        }
        if outer.config.keep_trace {
            let t = IterationTrace {
                k,
                mode: StepMode::Scaled,
                control: outcome.sigma_used,
                step_len: outcome.delta,
                rho: outcome.rho,
                backtracks: outcome.backtracks,
                accepted: true,
                f: outer.f,
                gnorm: outer.gnorm,
                matvecs: iter_matvecs,
                trial_matvecs,
                direction: info.s_q.as_slice().to_vec(),
                step: outcome.step.as_slice().to_vec(),
                lambda_boundary: None,
                cauchy_overridden: false,
            };
            outer.push_trace(t);
        }
    }
}

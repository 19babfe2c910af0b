//! Symmetric (possibly indefinite) linear solvers for the quasi-Newton
//! system B s = −g.
//!
//! The iterative solver is MINRES — the Lanczos process with a QR-updated
//! least-squares solve (Paige & Saunders). It exposes every iterate to an
//! optional caller predicate so higher-level methods can stop at the first
//! iterate passing their own gates instead of a plain residual tolerance.
//! A dense direct solve is provided for small systems and as a test oracle.

use thiserror::Error;

use crate::problems::{Matrix, Vector};

/// Relative scale below which a new Lanczos vector is considered zero
/// (Krylov subspace exhausted / recurrence breakdown).
const BREAKDOWN_RTOL: f64 = 1e-13;

/// How an inner solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStop {
    /// Stopping rule satisfied (residual tolerance, or the caller's
    /// predicate when one was given).
    Converged,
    /// Iteration cap reached first; `s_q` is the best iterate found.
    NotConverged,
    /// Krylov recurrence broke down (subspace exhausted or non-finite
    /// arithmetic); `s_q` is the last completed iterate.
    Breakdown,
}

/// One intermediate iterate, kept only when tracing is requested.
#[derive(Debug, Clone)]
pub struct InnerIterate {
    pub x: Vector,
    pub residual_estimate: f64,
}

/// View of the current iterate handed to the caller's stopping predicate.
pub struct KrylovIterate<'a> {
    /// 1-based count of completed iterations.
    pub iteration: usize,
    /// Current solution estimate of B s = −g.
    pub x: &'a Vector,
    /// Recurrence estimate of ‖B x + g‖.
    pub residual_estimate: f64,
    /// ‖g‖ — the initial residual (x₀ = 0).
    pub rhs_norm: f64,
}

/// Result of an inner solve.
#[derive(Debug, Clone)]
pub struct InnerSolveReport {
    /// Final iterate (approximate solution of B s = −g).
    pub s_q: Vector,
    /// B s_q + g, recomputed with one extra operator application — this is
    /// the gradient of the quadratic model at s_q.
    pub model_grad: Vector,
    /// ‖B s_q + g‖ from the recomputation (authoritative).
    pub residual_norm: f64,
    /// Final recurrence estimate of the residual norm (for drift checks).
    pub residual_estimate: f64,
    pub iterations: usize,
    /// Operator applications performed, including the final recomputation.
    pub matvecs: usize,
    pub stop: InnerStop,
    pub iterate_trace: Option<Vec<InnerIterate>>,
}

/// Signature for "no predicate" call sites.
pub type NoInspect = fn(&KrylovIterate) -> bool;
/// Pass this when the plain residual-tolerance stop should be used.
pub const NO_INSPECT: Option<NoInspect> = None;

/// MINRES on B s = −g.
///
/// Without `inspect`, stops at the first iterate whose estimated residual
/// satisfies ‖B s + g‖ ≤ rtol·‖g‖. With `inspect`, the predicate *replaces*
/// that rule: iteration stops at the first iterate for which it returns
/// true. Exhausting `max_inner` returns the best (current) iterate flagged
/// [`InnerStop::NotConverged`]; a recurrence breakdown returns the last
/// completed iterate flagged [`InnerStop::Breakdown`] — callers decide what
/// to do with either.
pub fn solve_symmetric<A, P>(
    mut apply: A,
    g: &Vector,
    rtol: f64,
    max_inner: usize,
    mut inspect: Option<P>,
    keep_trace: bool,
) -> InnerSolveReport
where
    A: FnMut(&Vector) -> Vector,
    P: FnMut(&KrylovIterate) -> bool,
{
    let n = g.len();
    let mut x = Vector::zeros(n);
    let mut matvecs = 0usize;
    let mut trace: Option<Vec<InnerIterate>> = if keep_trace { Some(Vec::new()) } else { None };

    // System right-hand side.
    let b = -g;
    let beta1 = b.norm();
    if beta1 == 0.0 {
        // g = 0: the zero step is exact.
        return InnerSolveReport {
            s_q: x,
            model_grad: g.clone(),
            residual_norm: 0.0,
            residual_estimate: 0.0,
            iterations: 0,
            matvecs,
            stop: InnerStop::Converged,
            iterate_trace: trace,
        };
    }

    // Lanczos / QR state (Paige–Saunders recurrences).
    let mut y = b.clone();
    let mut r1 = b.clone();
    let mut r2 = b.clone();
    let mut w = Vector::zeros(n);
    let mut w2 = Vector::zeros(n);
    let mut oldb = 0.0f64;
    let mut beta = beta1;
    let mut dbar = 0.0f64;
    let mut epsln = 0.0f64;
    let mut phibar = beta1;
    let mut cs = -1.0f64;
    let mut sn = 0.0f64;

    let mut stop = InnerStop::NotConverged;
    let mut iterations = 0usize;

    for itn in 1..=max_inner {
        // Lanczos step.
        let v = &y / beta;
        y = apply(&v);
        matvecs += 1;
        if itn >= 2 {
            y.axpy(-beta / oldb, &r1, 1.0);
        }
        let alfa = v.dot(&y);
        y.axpy(-alfa / beta, &r2, 1.0);
        r1 = std::mem::replace(&mut r2, y.clone());
        oldb = beta;
        beta = r2.norm();
        if !alfa.is_finite() || !beta.is_finite() {
            // Non-finite arithmetic: keep the previous iterate untouched.
            stop = InnerStop::Breakdown;
            break;
        }

        // Apply the previous rotation, then compute the next one.
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        // Update the solution estimate.
        let w1 = std::mem::replace(&mut w2, w.clone());
        w = (&v - oldeps * &w1 - delta * &w2) / gamma;
        x.axpy(phi, &w, 1.0);
        iterations = itn;

        if let Some(t) = trace.as_mut() {
            t.push(InnerIterate {
                x: x.clone(),
                residual_estimate: phibar,
            });
        }

        // Stopping rule: caller predicate if given, else residual tolerance.
        let hit = match inspect.as_mut() {
            Some(pred) => pred(&KrylovIterate {
                iteration: itn,
                x: &x,
                residual_estimate: phibar,
                rhs_norm: beta1,
            }),
            None => phibar <= rtol * beta1,
        };
        if hit {
            stop = InnerStop::Converged;
            break;
        }

        // Krylov subspace exhausted: no further progress is possible.
        if beta <= BREAKDOWN_RTOL * beta1 {
            stop = InnerStop::Breakdown;
            break;
        }
    }

    // Recompute the true residual of the returned iterate (one extra
    // operator application) so the report never carries recurrence drift.
    let bx = apply(&x);
    matvecs += 1;
    let model_grad = bx + g;
    let residual_norm = model_grad.norm();

    InnerSolveReport {
        s_q: x,
        model_grad,
        residual_norm,
        residual_estimate: phibar,
        iterations,
        matvecs,
        stop,
        iterate_trace: trace,
    }
}

/// Dense direct solve of B s = −g.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DenseSolveError {
    #[error("singular_system: dense symmetric solve failed (residual {residual:.3e} vs scale {scale:.3e})")]
    SingularSystem { residual: f64, scale: f64 },
}

/// Solve B s = −g by LU factorization with a residual acceptance check.
/// Returns `singular_system` when the factorization fails or the residual
/// shows the system is (numerically) inconsistent.
pub fn solve_dense(b: &Matrix, g: &Vector) -> Result<Vector, DenseSolveError> {
    let rhs = -g;
    let scale = g.norm().max(f64::MIN_POSITIVE);
    let lu = b.clone().lu();
    let s = lu.solve(&rhs).ok_or(DenseSolveError::SingularSystem {
        residual: f64::INFINITY,
        scale,
    })?;
    if !s.iter().all(|v| v.is_finite()) {
        return Err(DenseSolveError::SingularSystem {
            residual: f64::INFINITY,
            scale,
        });
    }
    let residual = (b * &s + g).norm();
    // Scale-aware acceptance: roundoff grows with ‖B‖‖s‖.
    let bnorm = b.norm(); // Frobenius; adequate as a magnitude scale
    let tol = 1e-8 * (g.norm() + bnorm * s.norm()).max(f64::MIN_POSITIVE);
    if residual > tol {
        return Err(DenseSolveError::SingularSystem { residual, scale });
    }
    Ok(s)
}

//! Classical reference solvers in the Euclidean norm: cubic-regularization
//! and trust-region methods with native subproblem engines, and Armijo
//! backtracking. The single-iteration engines double as the fallback step
//! for the line-search solvers when the angle condition fails.
//!
//! Subproblem solvers:
//! - dense: eigendecomposition + secular-equation root finding (global
//!   minimizer, hard case included) — small n / verification grade.
//! - iterative: Lanczos with full reorthogonalization and exact reduced
//!   solves for the cubic model; Steihaug truncated conjugate gradients for
//!   the trust region — matrix-free, used by default.

use nalgebra::linalg::SymmetricEigen;

use crate::config::{CubicMode, SolverConfig, TrMode};
use crate::driver::{Abort, Outer};
use crate::krylov::{solve_symmetric, NO_INSPECT};
use crate::problems::{Matrix, Problem, Vector};
use crate::record::{IterationTrace, RunRecord, Status, StepMode};

/// Relative tolerance of the iterative (Lanczos) cubic subproblem solver:
/// stop when the model-gradient norm falls below this times ‖g‖.
pub const LANCZOS_RTOL: f64 = 1e-6;
/// Convergence tolerance of the secular root finder (relative, on the
/// radius equation).
const SECULAR_TOL: f64 = 1e-12;

/// A solved (approximately minimized) local subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub s: Vector,
    /// B·s, produced without extra operator applications.
    pub bs: Vector,
    /// Boundary multiplier: σ‖s‖ for the cubic model; λ ≥ 0 for the trust
    /// region (0 when interior). None when the solver has no multiplier
    /// (truncated conjugate gradients).
    pub multiplier: Option<f64>,
    /// gᵀBg, available for free in every engine (used by Cauchy checks).
    pub gbg: f64,
    pub hard_case: bool,
    /// Trust region only: the step lies on ‖s‖ = Δ.
    pub boundary: bool,
    /// Secular / Lanczos / CG iterations.
    pub iterations: usize,
    /// Operator applications consumed (0 for dense engines — the caller
    /// pays for materializing B).
    pub matvecs: u64,
}

/// Quadratic-model decrement: m^Q(s) − f = gᵀs + ½sᵀ(Bs).
pub fn quad_decrement(g: &Vector, s: &Vector, bs: &Vector) -> f64 {
    g.dot(s) + 0.5 * s.dot(bs)
}

/// Cubic-model decrement in the Euclidean norm:
/// m(s) − f = gᵀs + ½sᵀ(Bs) + (σ/3)‖s‖³.
pub fn cubic_decrement(g: &Vector, s: &Vector, bs: &Vector, sigma: f64) -> f64 {
    quad_decrement(g, s, bs) + sigma / 3.0 * s.norm().powi(3)
}

/// Cauchy step length for the Euclidean cubic model: the exact minimizer of
/// t ↦ m(−t·g), t ≥ 0. With q = gᵀBg/‖g‖², the positive root of
/// q·t + σ‖g‖t² = 1 is t = 2/(q + √(q² + 4σ‖g‖)); the q ≤ 0 case uses the
/// rationalized form to avoid cancellation.
pub fn cauchy_length_cubic_l2(gnorm: f64, gbg: f64, sigma: f64) -> f64 {
    let q = gbg / (gnorm * gnorm);
    let c = 4.0 * sigma * gnorm;
    if q > 0.0 {
        2.0 / (q + (q * q + c).sqrt())
    } else if c > 0.0 {
        2.0 * ((q * q + c).sqrt() - q) / c
    } else {
        // σ = 0 with nonpositive curvature: unbounded ray; callers with
        // σ ≥ σ_min never reach this.
        f64::INFINITY
    }
}

/// Cauchy step length for the Euclidean trust-region model: the exact
/// minimizer of t ↦ m^Q(−t·g) subject to t‖g‖ ≤ Δ, t ≥ 0.
pub fn cauchy_length_tr_l2(gnorm: f64, gbg: f64, delta: f64) -> f64 {
    let t_bound = delta / gnorm;
    if gbg <= 0.0 {
        t_bound
    } else {
        t_bound.min(gnorm * gnorm / gbg)
    }
}

// ---------------------------------------------------------------------------
// Dense engines: eigendecomposition + secular equation
// ---------------------------------------------------------------------------

struct EigenSystem {
    vals: Vector,
    vecs: Matrix,
    ghat: Vector,
    lambda_min: f64,
    idx_min: usize,
}

impl EigenSystem {
    fn new(b: &Matrix, g: &Vector) -> Self {
        let eig = SymmetricEigen::new(b.clone());
        let ghat = eig.eigenvectors.transpose() * g;
        let (idx_min, lambda_min) =
            eig.eigenvalues
                .iter()
                .enumerate()
                .fold((0usize, f64::INFINITY), |acc, (i, &v)| {
                    if v < acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                });
        EigenSystem {
            vals: eig.eigenvalues,
            vecs: eig.eigenvectors,
            ghat,
            lambda_min,
            idx_min,
        }
    }

    /// ‖s(λ)‖ with s(λ) = −(B + λI)⁻¹ g.
    fn phi(&self, lambda: f64) -> f64 {
        self.vals
            .iter()
            .zip(self.ghat.iter())
            .map(|(&d, &gh)| (gh / (d + lambda)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// d/dλ ‖s(λ)‖ = −Σ ĝᵢ²/(dᵢ+λ)³ / ‖s(λ)‖.
    fn phi_prime(&self, lambda: f64, phi: f64) -> f64 {
        if phi == 0.0 {
            return 0.0;
        }
        -self
            .vals
            .iter()
            .zip(self.ghat.iter())
            .map(|(&d, &gh)| gh * gh / (d + lambda).powi(3))
            .sum::<f64>()
            / phi
    }

    /// s(λ) back in the original basis.
    fn step(&self, lambda: f64) -> Vector {
        let shat = Vector::from_fn(self.vals.len(), |i, _| {
            -self.ghat[i] / (self.vals[i] + lambda)
        });
        &self.vecs * shat
    }

    /// Hard-case step component: drop eigendirections within `gap` of the
    /// smallest eigenvalue (where the shifted system is singular).
    fn step_excluding_min(&self, lambda: f64, gap: f64) -> Vector {
        let shat = Vector::from_fn(self.vals.len(), |i, _| {
            if self.vals[i] - self.lambda_min <= gap {
                0.0
            } else {
                -self.ghat[i] / (self.vals[i] + lambda)
            }
        });
        &self.vecs * shat
    }

    fn min_eigenvector(&self) -> Vector {
        self.vecs.column(self.idx_min).into_owned()
    }

    fn gbg(&self) -> f64 {
        self.vals
            .iter()
            .zip(self.ghat.iter())
            .map(|(&d, &gh)| d * gh * gh)
            .sum()
    }

    fn scale(&self) -> f64 {
        self.vals.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }
}

/// Safeguarded Newton iteration for ψ(λ) = φ(λ) − target(λ) = 0 on the
/// bracket [lo, hi] with ψ(lo) > 0 > ψ(hi). `target` and `target_slope`
/// describe the right-hand side (λ/σ for the cubic model, Δ for the trust
/// region). Returns (λ*, iterations).
fn secular_root(
    sys: &EigenSystem,
    mut lo: f64,
    mut hi: f64,
    target: impl Fn(f64) -> f64,
    target_slope: impl Fn(f64) -> f64,
) -> (f64, usize) {
    let mut lambda = 0.5 * (lo + hi);
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        let phi = sys.phi(lambda);
        let t = target(lambda);
        let psi = phi - t;
        if psi.abs() <= SECULAR_TOL * t.max(1.0) {
            break;
        }
        if psi > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let dpsi = sys.phi_prime(lambda, phi) - target_slope(lambda);
        let newton = lambda - psi / dpsi;
        lambda = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    (lambda, iterations)
}

/// Global minimizer of the Euclidean cubic model
/// m(s) = gᵀs + ½sᵀBs + (σ/3)‖s‖³ by secular-equation root finding on
/// ‖s(λ)‖ = λ/σ, λ ≥ max(0, −λ_min(B)); hard case handled by adding the
/// boundary eigenvector component.
pub fn cubic_subproblem_dense(g: &Vector, b: &Matrix, sigma: f64) -> SubproblemSolution {
    let sys = EigenSystem::new(b, g);
    let lam_lo = (-sys.lambda_min).max(0.0);
    let scale = sys.scale();
    let shift = 1e-13 * scale.max(lam_lo);
    let gap = 1e-10 * scale;

    let finishing = |s: Vector, lambda: f64, hard: bool, iters: usize| {
        let bs = b * &s;
        SubproblemSolution {
            bs,
            s,
            multiplier: Some(lambda),
            gbg: sys.gbg(),
            hard_case: hard,
            boundary: false,
            iterations: iters,
            matvecs: 0,
        }
    };

    if g.norm() == 0.0 {
        if sys.lambda_min >= 0.0 {
            return finishing(Vector::zeros(g.len()), 0.0, false, 0);
        }
        // pure eigenstep: σ‖s‖ = −λ_min
        let tau = lam_lo / sigma;
        return finishing(sys.min_eigenvector() * tau, lam_lo, true, 0);
    }

    let lo = lam_lo + shift;
    let psi_lo = sys.phi(lo) - lo / sigma;
    if psi_lo <= 0.0 {
        if lam_lo == 0.0 {
            // Root pinched into [0, lo]: the minimizer is (numerically) the
            // unconstrained Newton point of a convex model.
            let (lambda, iters) = secular_root(&sys, 0.0, lo, |l| l / sigma, |_| 1.0 / sigma);
            return finishing(sys.step(lambda), lambda, false, iters);
        }
        // Hard case: gradient has (numerically) no component on the leftmost
        // eigenspace and the interior branch undershoots the required norm.
        let s_perp = sys.step_excluding_min(lam_lo, gap);
        let norm_target = lam_lo / sigma;
        let tau2 = norm_target * norm_target - s_perp.norm_squared();
        let tau = tau2.max(0.0).sqrt();
        let s = &s_perp + sys.min_eigenvector() * tau;
        return finishing(s, lam_lo, true, 0);
    }

    // Regular case: bracket upward, then refine.
    let mut hi = (2.0 * lo).max(lo + (sigma * g.norm()).sqrt()).max(1.0);
    for _ in 0..200 {
        if sys.phi(hi) - hi / sigma < 0.0 {
            break;
        }
        hi = 2.0 * hi + 1.0;
    }
    let (lambda, iters) = secular_root(&sys, lo, hi, |l| l / sigma, |_| 1.0 / sigma);
    finishing(sys.step(lambda), lambda, false, iters)
}

/// Global minimizer of m^Q(p) = gᵀp + ½pᵀBp subject to ‖p‖ ≤ Δ
/// (Moré–Sorensen-style: interior shortcut, secular boundary solve on
/// ‖p(λ)‖ = Δ, hard case by eigenvector augmentation).
pub fn tr_subproblem_dense(g: &Vector, b: &Matrix, delta: f64) -> SubproblemSolution {
    let sys = EigenSystem::new(b, g);
    let lam_lo = (-sys.lambda_min).max(0.0);
    let scale = sys.scale();
    let shift = 1e-13 * scale.max(lam_lo);
    let gap = 1e-10 * scale;

    let finishing = |s: Vector, lambda: f64, hard: bool, boundary: bool, iters: usize| {
        let bs = b * &s;
        SubproblemSolution {
            bs,
            s,
            multiplier: Some(lambda),
            gbg: sys.gbg(),
            hard_case: hard,
            boundary,
            iterations: iters,
            matvecs: 0,
        }
    };

    // Interior shortcut: strictly convex model with Newton point inside.
    if sys.lambda_min > 0.0 {
        let s0 = sys.step(0.0);
        if s0.norm() <= delta {
            return finishing(s0, 0.0, false, false, 0);
        }
    }

    let lo = lam_lo + shift;
    if sys.phi(lo) - delta <= 0.0 {
        if lam_lo == 0.0 {
            // λ_min ≤ 0 (else the interior branch would have returned) but
            // exactly 0: boundary solution with zero multiplier.
            let s_perp = sys.step_excluding_min(0.0, gap);
            let tau2 = delta * delta - s_perp.norm_squared();
            let s = &s_perp + sys.min_eigenvector() * tau2.max(0.0).sqrt();
            return finishing(s, 0.0, true, true, 0);
        }
        // Hard case proper.
        let s_perp = sys.step_excluding_min(lam_lo, gap);
        let tau2 = delta * delta - s_perp.norm_squared();
        let s = &s_perp + sys.min_eigenvector() * tau2.max(0.0).sqrt();
        return finishing(s, lam_lo, true, true, 0);
    }

    let mut hi = (2.0 * lo).max(lo + g.norm() / delta).max(1.0);
    for _ in 0..200 {
        if sys.phi(hi) - delta < 0.0 {
            break;
        }
        hi = 2.0 * hi + 1.0;
    }
    let (lambda, iters) = secular_root(&sys, lo, hi, |_| delta, |_| 0.0);
    finishing(sys.step(lambda), lambda, false, true, iters)
}

// ---------------------------------------------------------------------------
// Iterative engines
// ---------------------------------------------------------------------------

/// Krylov (Lanczos) solver for the Euclidean cubic model: tridiagonalize B
/// with full reorthogonalization, solve the reduced model exactly at every
/// expansion, stop once the full-space model gradient ‖∇m(s)‖ = β_{l+1}|z_l|
/// drops below rtol·‖g‖ (or the subspace is exhausted).
pub fn cubic_subproblem_lanczos<F: FnMut(&Vector) -> Vector>(
    g: &Vector,
    mut apply: F,
    sigma: f64,
    max_iter: usize,
    rtol: f64,
) -> SubproblemSolution {
    let n = g.len();
    let gnorm = g.norm();
    if gnorm == 0.0 {
        return SubproblemSolution {
            s: Vector::zeros(n),
            bs: Vector::zeros(n),
            multiplier: Some(0.0),
            gbg: 0.0,
            hard_case: false,
            boundary: false,
            iterations: 0,
            matvecs: 0,
        };
    }
    let cap = max_iter.min(n).max(1);
    let mut qs: Vec<Vector> = vec![g / gnorm];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new(); // betas[j] = β_{j+2} coupling
    let mut matvecs = 0u64;

    for l in 0..cap {
        let mut w = apply(&qs[l]);
        matvecs += 1;
        let alpha = qs[l].dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &qs[l], 1.0);
        if l > 0 {
            w.axpy(-betas[l - 1], &qs[l - 1], 1.0);
        }
        // full reorthogonalization (two passes)
        for _ in 0..2 {
            for q in &qs {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let beta_next = w.norm();

        // Reduced dense cubic solve on the (l+1)×(l+1) tridiagonal.
        let dim = l + 1;
        let mut t = Matrix::zeros(dim, dim);
        for i in 0..dim {
            t[(i, i)] = alphas[i];
            if i + 1 < dim {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let mut ghat = Vector::zeros(dim);
        ghat[0] = gnorm;
        let reduced = cubic_subproblem_dense(&ghat, &t, sigma);
        let z = reduced.s;

        let resid = beta_next * z[dim - 1].abs();
        let exhausted = beta_next <= 1e-13 * gnorm || dim == cap;
        if resid <= rtol * gnorm || exhausted {
            // expand: s = Q z, B s = Q (T z) + β_{l+1} z_l q_{l+1}
            let mut s = Vector::zeros(n);
            let tz = &t * &z;
            let mut bs = Vector::zeros(n);
            for (i, q) in qs.iter().enumerate() {
                s.axpy(z[i], q, 1.0);
                bs.axpy(tz[i], q, 1.0);
            }
            if beta_next > 1e-13 * gnorm {
                let qnext = &w / beta_next;
                bs.axpy(beta_next * z[dim - 1], &qnext, 1.0);
            }
            return SubproblemSolution {
                s,
                bs,
                multiplier: reduced.multiplier,
                gbg: alphas[0] * gnorm * gnorm,
                hard_case: reduced.hard_case,
                boundary: false,
                iterations: dim,
                matvecs,
            };
        }
        betas.push(beta_next);
        qs.push(&w / beta_next);
    }
    unreachable!("loop always returns at dim == cap");
}

/// Steihaug truncated conjugate gradients for the Euclidean trust region:
/// follow CG until the residual tolerance, the boundary, or negative
/// curvature; boundary exits move to ‖p‖ = Δ along the current direction.
pub fn tr_subproblem_steihaug<F: FnMut(&Vector) -> Vector>(
    g: &Vector,
    mut apply: F,
    delta: f64,
    rtol: f64,
    max_iter: usize,
) -> SubproblemSolution {
    let n = g.len();
    let gnorm = g.norm();
    let mut z = Vector::zeros(n);
    let mut bz = Vector::zeros(n);
    let mut r = g.clone();
    let mut d = -g;
    let mut rr = r.norm_squared();
    let mut matvecs = 0u64;
    let mut gbg = 0.0;

    // exit to the boundary from z along direction d
    let boundary_exit = |z: &Vector, bz: &Vector, d: &Vector, bd: &Vector| {
        let zz = z.norm_squared();
        let zd = z.dot(d);
        let dd = d.norm_squared();
        let disc = (zd * zd + dd * (delta * delta - zz)).max(0.0);
        let tau = (-zd + disc.sqrt()) / dd;
        (z + tau * d, bz + tau * bd)
    };

    for it in 1..=max_iter {
        let bd = apply(&d);
        matvecs += 1;
        let kappa = d.dot(&bd);
        if it == 1 {
            gbg = kappa; // d₀ = −g so d₀ᵀBd₀ = gᵀBg
        }
        if kappa <= 0.0 {
            let (s, bs) = boundary_exit(&z, &bz, &d, &bd);
            return SubproblemSolution {
                s,
                bs,
                multiplier: None,
                gbg,
                hard_case: false,
                boundary: true,
                iterations: it,
                matvecs,
            };
        }
        let alpha = rr / kappa;
        let z_next = &z + alpha * &d;
        if z_next.norm() >= delta {
            let (s, bs) = boundary_exit(&z, &bz, &d, &bd);
            return SubproblemSolution {
                s,
                bs,
                multiplier: None,
                gbg,
                hard_case: false,
                boundary: true,
                iterations: it,
                matvecs,
            };
        }
        z = z_next;
        bz.axpy(alpha, &bd, 1.0);
        r.axpy(alpha, &bd, 1.0);
        let rr_next = r.norm_squared();
        if rr_next.sqrt() <= rtol * gnorm {
            return SubproblemSolution {
                s: z,
                bs: bz,
                multiplier: None,
                gbg,
                hard_case: false,
                boundary: false,
                iterations: it,
                matvecs,
            };
        }
        d = -&r + (rr_next / rr) * d;
        rr = rr_next;
    }
    SubproblemSolution {
        s: z,
        bs: bz,
        multiplier: None,
        gbg,
        hard_case: false,
        boundary: false,
        iterations: max_iter,
        matvecs,
    }
}

// ---------------------------------------------------------------------------
// Single classical iterations (shared with the line-search fallback modes)
// ---------------------------------------------------------------------------

/// What one classical (Euclidean-norm) iteration did.
#[derive(Debug, Clone)]
pub struct L2Outcome {
    pub accepted: bool,
    pub s: Vector,
    /// Objective at the trial point (NaN if its evaluation failed).
    pub f_trial: f64,
    /// Reduction ratio (−∞ encodes a guarded/failed trial).
    pub rho: f64,
    /// Updated σ (cubic) or Δ (trust region).
    pub control_next: f64,
    pub hard_case: bool,
    pub boundary: bool,
    pub matvecs: u64,
    pub multiplier: Option<f64>,
}

fn materialize_b(outer: &mut Outer, n: usize) -> Matrix {
    let mut bmat = Matrix::zeros(n, n);
    let mut e = Vector::zeros(n);
    let x = outer.x.clone();
    for j in 0..n {
        e[j] = 1.0;
        let col = outer.ev.hess_vec_inner(&x, &e);
        bmat.set_column(j, &col);
        e[j] = 0.0;
    }
    let bt = bmat.transpose();
    (&bmat + bt) * 0.5
}

fn use_dense_cubic(config: &SolverConfig, n: usize) -> bool {
    config.cubic_mode == CubicMode::DenseExact && n <= config.dense_threshold
}

fn use_dense_tr(config: &SolverConfig, n: usize) -> bool {
    config.tr_mode == TrMode::DenseExact && n <= config.dense_threshold
}

/// One iteration of the classical cubic-regularization method at the
/// current point: solve the Euclidean cubic subproblem, enforce Cauchy
/// decrease, test the reduction ratio, and produce the σ update. Does not
/// move the iterate — the caller applies acceptance.
pub fn arc_l2_iteration(outer: &mut Outer, sigma: f64) -> Result<L2Outcome, Abort> {
    let n = outer.x.len();
    let config = outer.config;
    let mv0 = outer.ev.counters.hvp_evals;
    let g = outer.g.clone();

    let mut sub = if use_dense_cubic(config, n) {
        let bmat = materialize_b(outer, n);
        cubic_subproblem_dense(&g, &bmat, sigma)
    } else {
        let x = outer.x.clone();
        let cap = config.inner_cap(n);
        let ev = &mut outer.ev;
        cubic_subproblem_lanczos(&g, |v| ev.hess_vec_inner(&x, v), sigma, cap, LANCZOS_RTOL)
    };

    // Cauchy decrease: never return a step worse than the exact 1-D
    // minimizer along −g. (The engines satisfy this already; the guard
    // protects against numerically degenerate output.)
    let gnorm = g.norm();
    let t_c = cauchy_length_cubic_l2(gnorm, sub.gbg, sigma);
    if t_c.is_finite() {
        let m_s = cubic_decrement(&g, &sub.s, &sub.bs, sigma);
        let m_c =
            -t_c * gnorm * gnorm + 0.5 * t_c * t_c * sub.gbg + sigma / 3.0 * (t_c * gnorm).powi(3);
        if m_s > m_c + 1e-14 * m_c.abs().max(1.0) {
            let x = outer.x.clone();
            let bg = outer.ev.hess_vec_inner(&x, &g);
            sub.s = -t_c * &g;
            sub.bs = -t_c * bg;
            sub.hard_case = false;
            sub.multiplier = None;
        }
    }

    let pred_dec = -quad_decrement(&g, &sub.s, &sub.bs);
    let trial_x = &outer.x + &sub.s;
    let f_trial = outer.ev.value(&trial_x).unwrap_or(f64::NAN);

    let (accepted, rho) = if !(pred_dec > 0.0) || !f_trial.is_finite() {
        (false, f64::NEG_INFINITY)
    } else {
        let rho = (outer.f - f_trial) / pred_dec;
        (rho >= config.eta, rho)
    };
    let control_next = if accepted {
        (config.nu1 * sigma).max(config.sigma_min)
    } else {
        config.nu2 * sigma
    };
    Ok(L2Outcome {
        accepted,
        s: sub.s,
        f_trial,
        rho,
        control_next,
        hard_case: sub.hard_case,
        boundary: sub.boundary,
        matvecs: outer.ev.counters.hvp_evals - mv0,
        multiplier: sub.multiplier,
    })
}

/// One iteration of the classical trust-region method. Mirrors
/// [`arc_l2_iteration`] with radius updates.
pub fn tr_l2_iteration(outer: &mut Outer, delta: f64) -> Result<L2Outcome, Abort> {
    let n = outer.x.len();
    let config = outer.config;
    let mv0 = outer.ev.counters.hvp_evals;
    let g = outer.g.clone();

    let mut sub = if use_dense_tr(config, n) {
        let bmat = materialize_b(outer, n);
        tr_subproblem_dense(&g, &bmat, delta)
    } else {
        let x = outer.x.clone();
        let cap = config.inner_cap(n);
        let ev = &mut outer.ev;
        tr_subproblem_steihaug(
            &g,
            |v| ev.hess_vec_inner(&x, v),
            delta,
            config.inner_rtol,
            cap,
        )
    };

    // Cauchy safeguard on the constrained 1-D minimizer along −g.
    let gnorm = g.norm();
    let t_c = cauchy_length_tr_l2(gnorm, sub.gbg, delta);
    let m_s = quad_decrement(&g, &sub.s, &sub.bs);
    let m_c = -t_c * gnorm * gnorm + 0.5 * t_c * t_c * sub.gbg;
    if m_s > m_c + 1e-14 * m_c.abs().max(1.0) {
        let x = outer.x.clone();
        let bg = outer.ev.hess_vec_inner(&x, &g);
        sub.s = -t_c * &g;
        sub.bs = -t_c * bg;
        sub.boundary = (t_c * gnorm - delta).abs() <= 1e-12 * delta;
        sub.multiplier = None;
    }

    let pred_dec = -quad_decrement(&g, &sub.s, &sub.bs);
    let trial_x = &outer.x + &sub.s;
    let f_trial = outer.ev.value(&trial_x).unwrap_or(f64::NAN);

    let (accepted, rho) = if !(pred_dec > 0.0) || !f_trial.is_finite() {
        (false, f64::NEG_INFINITY)
    } else {
        let rho = (outer.f - f_trial) / pred_dec;
        (rho >= config.eta, rho)
    };
    let control_next = if accepted {
        (config.tau2 * delta).min(config.delta_max)
    } else {
        config.tau1 * delta
    };
    Ok(L2Outcome {
        accepted,
        s: sub.s,
        f_trial,
        rho,
        control_next,
        hard_case: sub.hard_case,
        boundary: sub.boundary,
        matvecs: outer.ev.counters.hvp_evals - mv0,
        multiplier: sub.multiplier,
    })
}

// ---------------------------------------------------------------------------
// Full baseline solvers
// ---------------------------------------------------------------------------

pub(crate) fn config_error_record(problem: &Problem, solver: &str, msg: String) -> RunRecord {
    RunRecord {
        problem: problem.name.clone(),
        solver: solver.to_string(),
        n: problem.n,
        status: Status::Error,
        outer_iters: 0,
        f_evals: 0,
        g_evals: 0,
        hvp_evals: 0,
        inner_matvecs: 0,
        final_f: f64::NAN,
        final_gnorm: f64::NAN,
        wall_time_ms: 0.0,
        error: Some(msg),
        trace: None,
    }
}

macro_rules! unwrap_or_return {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(rec) => return rec,
        }
    };
}

/// Classical cubic-regularization solver (Euclidean norm).
pub fn arc_l2_solve(problem: &Problem, config: &SolverConfig) -> RunRecord {
    const NAME: &str = "arc-l2";
    if let Err(e) = config.validate() {
        return config_error_record(problem, NAME, format!("config_invalid: {e}"));
    }
    let mut outer = unwrap_or_return!(Outer::new(problem, config, NAME));
    let mut sigma = config.sigma0;
    loop {
        if let Some(st) = outer.stop_check() {
            return outer.finish(st);
        }
        if outer.k >= config.max_iter {
            return outer.finish(Status::IterationLimit);
        }
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
        }
        if outer.config.keep_trace {
            let t = IterationTrace {
                k,
                mode: StepMode::ClassicL2,
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
    }
}

/// Classical trust-region solver (Euclidean norm).
pub fn tr_l2_solve(problem: &Problem, config: &SolverConfig) -> RunRecord {
    const NAME: &str = "tr-l2";
    if let Err(e) = config.validate() {
        return config_error_record(problem, NAME, format!("config_invalid: {e}"));
    }
    let mut outer = unwrap_or_return!(Outer::new(problem, config, NAME));
    let mut delta = config.delta0;
    loop {
        if let Some(st) = outer.stop_check() {
            return outer.finish(st);
        }
        if outer.k >= config.max_iter {
            return outer.finish(Status::IterationLimit);
        }
        let delta_used = delta;
        let out = match tr_l2_iteration(&mut outer, delta) {
            Ok(o) => o,
            Err(a) => return outer.finish_abort(a),
        };
        delta = out.control_next;
        let k = outer.k;
        outer.k += 1;
        if out.accepted {
            let x_new = &outer.x + &out.s;
            if let Err(e) = outer.accept(x_new, out.f_trial) {
                return outer.finish_abort(e.into());
            }
        }
        if outer.config.keep_trace {
            let t = IterationTrace {
                k,
                mode: StepMode::ClassicL2,
                control: delta_used,
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
    }
}

/// Backtracking line search with the sufficient-decrease rule
/// f(x + δd) ≤ f(x) + η·δ·dᵀg; the direction is the quasi-Newton step when
/// it is sufficiently a descent direction, the negative gradient otherwise.
pub fn armijo_solve(problem: &Problem, config: &SolverConfig) -> RunRecord {
    const NAME: &str = "armijo";
    if let Err(e) = config.validate() {
        return config_error_record(problem, NAME, format!("config_invalid: {e}"));
    }
    let mut outer = unwrap_or_return!(Outer::new(problem, config, NAME));
    loop {
        if let Some(st) = outer.stop_check() {
            return outer.finish(st);
        }
        if outer.k >= config.max_iter {
            return outer.finish(Status::IterationLimit);
        }

        // quasi-Newton direction via the inner solver
        let g = outer.g.clone();
        let x = outer.x.clone();
        let mv0 = outer.ev.counters.hvp_evals;
        let report = {
            let ev = &mut outer.ev;
            let cap = config.inner_cap(x.len());
            solve_symmetric(
                |v| ev.hess_vec_inner(&x, v),
                &g,
                config.inner_rtol,
                cap,
                NO_INSPECT,
                false,
            )
        };
        let iter_matvecs = outer.ev.counters.hvp_evals - mv0;

        let slope = g.dot(&report.s_q);
        let gnorm = outer.gnorm;
        let use_newton = slope < 0.0 && -slope >= config.eps_d * gnorm * report.s_q.norm();
        let d = if use_newton { report.s_q } else { -&g };
        let dg = d.dot(&g);

        // backtrack from a unit step
        let mut t = 1.0f64;
        let mut backtracks = 0usize;
        let accepted = loop {
            let trial = &outer.x + t * &d;
            match outer.ev.value(&trial) {
                Ok(f_trial) if f_trial <= outer.f + config.eta * t * dg => {
                    break Some((trial, f_trial));
                }
                _ => {
                    backtracks += 1;
                    if backtracks >= config.max_backtracks {
                        break None;
                    }
                    t *= config.armijo_tau;
                }
            }
        };
        let (trial, f_trial) = match accepted {
            Some(p) => p,
            None => {
                return outer.finish_abort(Abort::Stalled(format!(
                    "sufficient-decrease search exhausted {} trials",
                    config.max_backtracks
                )))
            }
        };
        let k = outer.k;
        outer.k += 1;
        if let Err(e) = outer.accept(trial, f_trial) {
            return outer.finish_abort(e.into());
        }
        if outer.config.keep_trace {
            let t_rec = IterationTrace {
                k,
                mode: StepMode::LineSearch,
                control: t,
                step_len: t,
                rho: f64::NAN,
                backtracks,
                accepted: true,
                f: f_trial,
                gnorm: outer.gnorm,
                matvecs: iter_matvecs,
                trial_matvecs: 0,
                direction: d.as_slice().to_vec(),
                step: (t * &d).as_slice().to_vec(),
                lambda_boundary: None,
                cauchy_overridden: false,
            };
            outer.push_trace(t_rec);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{cubic_model_l2, grid_min_2d, tr_model_l2};
    use crate::problems::make_problem;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let r = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&r + r.transpose()) * 0.5
    }

    #[test]
    fn cubic_dense_matches_indefinite_2d_reference_step() {
        let b = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0]);
        let g = Vector::from_vec(vec![2.0, -2.0]);
        let sub = cubic_subproblem_dense(&g, &b, 1.0);
        assert_relative_eq!(sub.s[0], -0.4220, epsilon = 1e-3);
        assert_relative_eq!(sub.s[1], 2.7063, epsilon = 1e-3);
        let lam = sub.multiplier.unwrap();
        assert_relative_eq!(lam, 2.739, epsilon = 1e-3);
        // multiplier consistency: λ* = σ‖s‖ and (B + λ*I)s = −g
        assert_relative_eq!(lam, sub.s.norm(), max_relative = 1e-9);
        let resid = (&b * &sub.s + lam * &sub.s + &g).norm();
        assert!(resid <= 1e-9 * g.norm());
    }

    #[test]
    fn cubic_dense_newton_limit_at_vanishing_sigma() {
        let b = Matrix::identity(4, 4);
        let g = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let sub = cubic_subproblem_dense(&g, &b, 1e-14);
        assert!((&sub.s + &g).norm() <= 1e-10 * g.norm());
    }

    #[test]
    fn cubic_dense_handles_hard_case() {
        let b = Matrix::from_row_slice(3, 3, &[-2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0]);
        let g = Vector::from_vec(vec![0.0, 1.0, 1.0]);
        let sub = cubic_subproblem_dense(&g, &b, 1.0);
        assert!(sub.hard_case);
        let lam = sub.multiplier.unwrap();
        assert_relative_eq!(lam, 2.0, epsilon = 1e-9);
        assert_relative_eq!(sub.s.norm(), 2.0, max_relative = 1e-9);
        // stationarity of the regularized system
        let resid = (&b * &sub.s + lam * &sub.s + &g).norm();
        assert!(resid <= 1e-9, "hard-case residual {resid:.3e}");
    }

    #[test]
    fn cubic_dense_beats_fine_grid_on_random_2d_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let b = random_symmetric(2, &mut rng) * 2.0;
            let g = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
            let sigma = rng.gen_range(0.5..2.0);
            let sub = cubic_subproblem_dense(&g, &b, sigma);
            let model = cubic_model_l2(&g, &b, sigma);
            let radius = (2.0 * sub.s.norm()).max(1.0);
            let grid = grid_min_2d(&model, radius, 1e-3);
            let dense_val = cubic_decrement(&g, &sub.s, &sub.bs, sigma);
            assert!(
                dense_val <= grid.value + 1e-9,
                "dense {dense_val:.6e} vs grid {:.6e}",
                grid.value
            );
        }
    }

    #[test]
    fn lanczos_agrees_with_dense_on_model_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..10 {
            let n = rng.gen_range(5..40);
            let b = random_symmetric(n, &mut rng) * 3.0;
            let g = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let sigma = 10f64.powf(rng.gen_range(-2.0..1.0));
            let dense = cubic_subproblem_dense(&g, &b, sigma);
            let lan = cubic_subproblem_lanczos(&g, |v| &b * v, sigma, 2 * n, LANCZOS_RTOL);
            let vd = cubic_decrement(&g, &dense.s, &dense.bs, sigma);
            let vl = cubic_decrement(&g, &lan.s, &lan.bs, sigma);
            assert!(
                (vd - vl).abs() <= 1e-6 * vd.abs().max(1e-10),
                "trial {trial}: dense {vd:.9e} vs lanczos {vl:.9e}"
            );
            // returned Bs must match a direct multiplication
            assert!(((&b * &lan.s) - &lan.bs).norm() <= 1e-8 * lan.bs.norm().max(1e-12));
        }
    }

    #[test]
    fn lanczos_satisfies_cauchy_decrease() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let n = 20;
            let b = random_symmetric(n, &mut rng) * 4.0;
            let g = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let sigma = 0.7;
            let sub = cubic_subproblem_lanczos(&g, |v| &b * v, sigma, 2 * n, LANCZOS_RTOL);
            let gnorm = g.norm();
            let t_c = cauchy_length_cubic_l2(gnorm, sub.gbg, sigma);
            let m_c = -t_c * gnorm * gnorm
                + 0.5 * t_c * t_c * sub.gbg
                + sigma / 3.0 * (t_c * gnorm).powi(3);
            let m_s = cubic_decrement(&g, &sub.s, &sub.bs, sigma);
            assert!(m_s <= m_c + 1e-10, "m(s)={m_s:.6e} > m(sC)={m_c:.6e}");
        }
    }

    #[test]
    fn tr_dense_interior_is_newton_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = Matrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
        let b = &r * r.transpose() + Matrix::identity(5, 5) * 5.0;
        let g = Vector::from_fn(5, |_, _| rng.gen_range(-0.3..0.3));
        let sub = tr_subproblem_dense(&g, &b, 1e3);
        assert!(!sub.boundary);
        assert_eq!(sub.multiplier, Some(0.0));
        assert!((&b * &sub.s + &g).norm() <= 1e-9 * g.norm());
    }

    #[test]
    fn tr_dense_boundary_case_is_optimal_on_the_circle() {
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let g = Vector::from_vec(vec![1.0, 1.0]);
        let delta = 0.1;
        let sub = tr_subproblem_dense(&g, &b, delta);
        assert!(sub.boundary);
        assert_relative_eq!(sub.s.norm(), delta, max_relative = 1e-9);
        let lam = sub.multiplier.unwrap();
        assert!(lam > 0.0);
        assert!((&b * &sub.s + lam * &sub.s + &g).norm() <= 1e-9);
        // beats the grid oracle on the disk
        let model = tr_model_l2(&g, &b, delta);
        let grid = grid_min_2d(&model, delta * 1.2, 1e-4);
        assert!(quad_decrement(&g, &sub.s, &sub.bs) <= grid.value + 1e-7);
    }

    #[test]
    fn tr_dense_negative_curvature_lands_on_boundary_hard_case() {
        let b = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let g = Vector::from_vec(vec![1.0, 0.0]);
        let delta = 1.0;
        let sub = tr_subproblem_dense(&g, &b, delta);
        assert!(sub.boundary);
        assert!(sub.hard_case);
        assert_relative_eq!(sub.s.norm(), delta, max_relative = 1e-9);
        // optimality: (B + λI)s = −g with λ = 1 (= −λ_min)
        let lam = sub.multiplier.unwrap();
        assert_relative_eq!(lam, 1.0, epsilon = 1e-9);
        assert_relative_eq!(sub.s[0], -0.5, epsilon = 1e-9);
        assert_relative_eq!(sub.s[1].abs(), 0.75f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn steihaug_interior_matches_dense_on_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let n = 30;
            let r = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let b = &r * r.transpose() + Matrix::identity(n, n) * (n as f64);
            let g = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let dense = tr_subproblem_dense(&g, &b, 1e4);
            let cg = tr_subproblem_steihaug(&g, |v| &b * v, 1e4, 1e-10, 4 * n);
            assert!(!cg.boundary);
            let vd = quad_decrement(&g, &dense.s, &dense.bs);
            let vc = quad_decrement(&g, &cg.s, &cg.bs);
            assert!((vd - vc).abs() <= 1e-6 * vd.abs().max(1e-10));
        }
    }

    #[test]
    fn steihaug_negative_curvature_exits_on_boundary() {
        let b = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        let g = Vector::from_vec(vec![1.0, 0.2]);
        let sub = tr_subproblem_steihaug(&g, |v| &b * v, 2.5, 1e-8, 50);
        assert!(sub.boundary);
        assert_relative_eq!(sub.s.norm(), 2.5, max_relative = 1e-12);
        // Cauchy comparison
        let t_c = cauchy_length_tr_l2(g.norm(), sub.gbg, 2.5);
        let m_c = -t_c * g.norm_squared() + 0.5 * t_c * t_c * sub.gbg;
        assert!(quad_decrement(&g, &sub.s, &sub.bs) <= m_c + 1e-12);
    }

    #[test]
    fn cauchy_lengths_match_bruteforce_1d_minimization() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..30 {
            let gnorm = rng.gen_range(0.1..5.0);
            let gbg = rng.gen_range(-4.0..4.0) * gnorm * gnorm;
            let sigma = rng.gen_range(0.05..3.0);
            let t = cauchy_length_cubic_l2(gnorm, gbg, sigma);
            let m =
                |t: f64| -t * gnorm * gnorm + 0.5 * t * t * gbg + sigma / 3.0 * (t * gnorm).powi(3);
            // local optimality of the closed form against perturbations
            assert!(m(t) <= m(t * 0.999) + 1e-12);
            assert!(m(t) <= m(t * 1.001) + 1e-12);

            let delta = rng.gen_range(0.1..2.0);
            let tb = cauchy_length_tr_l2(gnorm, gbg, delta);
            assert!(tb * gnorm <= delta * (1.0 + 1e-12));
            let mq = |t: f64| -t * gnorm * gnorm + 0.5 * t * t * gbg;
            let feas = |t: f64| t.clamp(0.0, delta / gnorm);
            assert!(mq(tb) <= mq(feas(tb * 0.99)) + 1e-12);
            assert!(mq(tb) <= mq(feas(tb * 1.01)) + 1e-12);
        }
    }

    #[test]
    fn arc_l2_first_step_on_the_indefinite_2d_path() {
        let p = make_problem("saddle2d", 2, 0).unwrap();
        let mut config = SolverConfig::default();
        config.cubic_mode = CubicMode::DenseExact;
        config.keep_trace = true;
        let rec = arc_l2_solve(&p, &config);
        // the run must walk off to −∞ and be caught by the divergence cutoff
        assert_eq!(rec.status, Status::Diverged);
        let trace = rec.trace.unwrap();
        let first = &trace[0];
        assert!(first.accepted);
        assert_relative_eq!(first.direction[0], -0.4220, epsilon = 1e-3);
        assert_relative_eq!(first.direction[1], 2.7063, epsilon = 1e-3);
        assert_relative_eq!(first.f, -13.4027, epsilon = 1e-3);
    }

    #[test]
    fn arc_l2_unsuccessful_iterations_grow_sigma_exactly() {
        // Strong negative curvature with a bounded objective: the model
        // predicts a huge decrease that the function cannot deliver, so the
        // first trials fail.
        use crate::problems::ObjectiveFn;
        use std::sync::Arc;
        struct CosBowl;
        impl ObjectiveFn for CosBowl {
            fn value(&self, x: &Vector) -> f64 {
                x[0].cos() + 0.5 * x[1] * x[1]
            }
            fn gradient(&self, x: &Vector) -> Vector {
                Vector::from_vec(vec![-x[0].sin(), x[1]])
            }
            fn hessian_vec(&self, x: &Vector, v: &Vector) -> Vector {
                Vector::from_vec(vec![-x[0].cos() * v[0], v[1]])
            }
        }
        let p = Problem::custom(
            "cos_bowl",
            Vector::from_vec(vec![0.1, 0.1]),
            Some(-10.0),
            Arc::new(CosBowl),
        );
        let mut config = SolverConfig::default();
        config.sigma0 = 1e-6;
        config.cubic_mode = CubicMode::DenseExact;
        config.keep_trace = true;
        config.max_iter = 200;
        let rec = arc_l2_solve(&p, &config);
        let trace = rec.trace.as_ref().unwrap();
        assert!(!trace[0].accepted, "tiny σ on a cliff must fail first");
        // a failed iteration leaves the objective exactly where it was …
        let f0 = p.value(&p.x0);
        if !trace[0].accepted {
            assert_eq!(trace[0].f.to_bits(), f0.to_bits());
        }
        let mut saw_failure = false;
        for i in 1..trace.len() {
            if !trace[i - 1].accepted {
                saw_failure = true;
                // … and multiplies σ by ν₂ exactly
                assert_eq!(trace[i].control, config.nu2 * trace[i - 1].control);
            }
            if !trace[i].accepted {
                assert_eq!(trace[i].f.to_bits(), trace[i - 1].f.to_bits());
            }
        }
        assert!(saw_failure);
        assert_eq!(rec.status, Status::Converged);
    }

    #[test]
    fn tr_l2_converges_on_spd_quadratic_with_exact_radius_updates() {
        let p = make_problem("quad_spd", 30, 5).unwrap();
        let mut config = SolverConfig::default();
        config.keep_trace = true;
        let rec = tr_l2_solve(&p, &config);
        assert_eq!(rec.status, Status::Converged);
        let trace = rec.trace.unwrap();
        for w in trace.windows(2) {
            if w[0].accepted {
                assert_eq!(
                    w[1].control,
                    (config.tau2 * w[0].control).min(config.delta_max)
                );
            } else {
                assert_eq!(w[1].control, config.tau1 * w[0].control);
            }
        }
    }

    #[test]
    fn armijo_accepts_unit_newton_step_on_quadratic() {
        let p = make_problem("quad_spd", 20, 9).unwrap();
        let mut config = SolverConfig::default();
        config.keep_trace = true;
        let rec = armijo_solve(&p, &config);
        assert_eq!(rec.status, Status::Converged);
        let trace = rec.trace.unwrap();
        assert_eq!(trace[0].backtracks, 0);
        assert_eq!(trace[0].step_len, 1.0);
    }

    #[test]
    fn armijo_accepted_steps_satisfy_the_rule_as_a_recheck() {
        let p = make_problem("rosenbrock", 8, 0).unwrap();
        let mut config = SolverConfig::default();
        config.keep_trace = true;
        config.max_iter = 300;
        let rec = armijo_solve(&p, &config);
        assert_eq!(rec.status, Status::Converged);
        let trace = rec.trace.unwrap();
        // re-evaluate the rule from the recorded quantities
        let mut x = p.x0.clone();
        let mut f = p.value(&x);
        for t in &trace {
            let d = Vector::from_vec(t.direction.clone());
            let g = p.gradient(&x);
            let step = Vector::from_vec(t.step.clone());
            let f_new = p.value(&(&x + &step));
            assert!(
                f_new <= f + config.eta * t.step_len * d.dot(&g) + 1e-12 * f.abs().max(1.0),
                "sufficient-decrease recheck failed at k={}",
                t.k
            );
            x += step;
            f = f_new;
        }
    }

    #[test]
    fn armijo_switches_to_steepest_descent_when_direction_is_orthogonal() {
        let p = make_problem("saddle2d", 2, 0).unwrap();
        let mut config = SolverConfig::default();
        config.keep_trace = true;
        let rec = armijo_solve(&p, &config);
        // at (1,1) the quasi-Newton direction is orthogonal to g, so the
        // first direction must be −g = (−2, 2)
        let trace = rec.trace.unwrap();
        assert_relative_eq!(trace[0].direction[0], -2.0, epsilon = 1e-9);
        assert_relative_eq!(trace[0].direction[1], 2.0, epsilon = 1e-9);
        assert_eq!(rec.status, Status::Diverged);
    }
}

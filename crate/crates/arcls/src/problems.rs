//! Synthetic unconstrained test problems with analytic derivatives.
//!
//! Every family provides the objective value, the gradient, and
//! Hessian–vector products. Solvers never see an explicit Hessian; a dense
//! materialization (n Hessian–vector products against the identity) is
//! available for small problems as a verification aid.
//!
//! Families are deterministic: the randomized quadratic draws all of its
//! data from a counter-based generator seeded at construction, so two
//! problems built with the same (name, n, seed) evaluate identically.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::ConfigError;
use crate::record::EvalCounters;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Analytic oracle for one objective.
pub trait ObjectiveFn: Send + Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    /// Product of the Hessian at `x` with `v`.
    fn hessian_vec(&self, x: &Vector, v: &Vector) -> Vector;
}

/// An immutable problem instance: objective, start point, and metadata.
/// Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    pub x0: Vector,
    /// Divergence cutoff: when the objective falls below `f_low − 1` the run
    /// is declared diverged. For bounded-below families this is a true lower
    /// bound (so the cutoff never fires); for unbounded families it is a
    /// documented sentinel.
    pub f_low: Option<f64>,
    fun: Arc<dyn ObjectiveFn>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("f_low", &self.f_low)
            .finish()
    }
}

impl Problem {
    /// Wrap a custom objective (used by tests and downstream callers).
    pub fn custom(
        name: impl Into<String>,
        x0: Vector,
        f_low: Option<f64>,
        fun: Arc<dyn ObjectiveFn>,
    ) -> Self {
        let n = x0.len();
        Problem {
            name: name.into(),
            n,
            x0,
            f_low,
            fun,
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.fun.value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.fun.gradient(x)
    }

    pub fn hessian_vec(&self, x: &Vector, v: &Vector) -> Vector {
        self.fun.hessian_vec(x, v)
    }

    /// Materialize the Hessian at `x` column by column. Verification aid for
    /// small problems only.
    pub fn dense_hessian(&self, x: &Vector, cap: usize) -> Result<Matrix, ProblemError> {
        if self.n > cap {
            return Err(ProblemError::TooLargeForDense { n: self.n, cap });
        }
        let mut h = Matrix::zeros(self.n, self.n);
        let mut e = Vector::zeros(self.n);
        for j in 0..self.n {
            e[j] = 1.0;
            let col = self.fun.hessian_vec(x, &e);
            h.set_column(j, &col);
            e[j] = 0.0;
        }
        // Symmetrize away roundoff so downstream eigensolves see an exactly
        // symmetric matrix.
        let ht = h.transpose();
        Ok((&h + ht) * 0.5)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProblemError {
    #[error("dense Hessian requested for n = {n} above the cap {cap}")]
    TooLargeForDense { n: usize, cap: usize },
}

/// Evaluation failure: the oracle produced a non-finite result (or was fed a
/// non-finite point). Carries the offending point for diagnostics.
#[derive(Debug, Clone, Error)]
#[error("{what} evaluation was non-finite at |x| = {xnorm:.3e}")]
pub struct EvalError {
    pub what: &'static str,
    pub x: Vec<f64>,
    pub xnorm: f64,
}

fn non_finite(what: &'static str, x: &Vector) -> EvalError {
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    EvalError {
        what,
        x: x.as_slice().to_vec(),
        xnorm,
    }
}

/// Counting wrapper around a problem: every evaluation goes through here so
/// run records report exact oracle costs.
pub struct Evaluator<'a> {
    pub problem: &'a Problem,
    pub counters: EvalCounters,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Evaluator {
            problem,
            counters: EvalCounters::default(),
        }
    }

    pub fn value(&mut self, x: &Vector) -> Result<f64, EvalError> {
        self.counters.f_evals += 1;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(non_finite("objective", x));
        }
        let f = self.problem.value(x);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(non_finite("objective", x))
        }
    }

    pub fn gradient(&mut self, x: &Vector) -> Result<Vector, EvalError> {
        self.counters.g_evals += 1;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(non_finite("gradient", x));
        }
        let g = self.problem.gradient(x);
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(non_finite("gradient", x))
        }
    }

    /// Hessian–vector product outside an inner solver (e.g. curvature along
    /// the gradient).
    pub fn hess_vec(&mut self, x: &Vector, v: &Vector) -> Result<Vector, EvalError> {
        self.counters.hvp_evals += 1;
        let w = self.problem.hessian_vec(x, v);
        if w.iter().all(|t| t.is_finite()) {
            Ok(w)
        } else {
            Err(non_finite("hessian_vec", x))
        }
    }

    /// Hessian–vector product on behalf of an inner solver; counted both as
    /// an oracle call and as inner work.
    pub fn hess_vec_inner(&mut self, x: &Vector, v: &Vector) -> Vector {
        self.counters.hvp_evals += 1;
        self.counters.inner_matvecs += 1;
        self.problem.hessian_vec(x, v)
    }
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// f(x, y) = x² − y². A 2-D saddle: the gradient at (t, t) is orthogonal to
/// the quasi-Newton direction, and the objective is unbounded below, so runs
/// end `diverged`. `f_low = −1e10` is a divergence cutoff, not a bound.
struct Saddle2d;

impl ObjectiveFn for Saddle2d {
    fn value(&self, x: &Vector) -> f64 {
        x[0] * x[0] - x[1] * x[1]
    }
    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_vec(vec![2.0 * x[0], -2.0 * x[1]])
    }
    fn hessian_vec(&self, _x: &Vector, v: &Vector) -> Vector {
        Vector::from_vec(vec![2.0 * v[0], -2.0 * v[1]])
    }
}

/// Extended Rosenbrock, pairwise form: Σ 100(x_{2i+1} − x_{2i}²)² + (1 − x_{2i})².
/// Minimum 0 at the all-ones point; requires even n.
struct Rosenbrock;

impl ObjectiveFn for Rosenbrock {
    fn value(&self, x: &Vector) -> f64 {
        let mut f = 0.0;
        for i in (0..x.len()).step_by(2) {
            let (a, b) = (x[i], x[i + 1]);
            let t = b - a * a;
            f += 100.0 * t * t + (1.0 - a) * (1.0 - a);
        }
        f
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(x.len());
        for i in (0..x.len()).step_by(2) {
            let (a, b) = (x[i], x[i + 1]);
            let t = b - a * a;
            g[i] = -400.0 * a * t - 2.0 * (1.0 - a);
            g[i + 1] = 200.0 * t;
        }
        g
    }

    fn hessian_vec(&self, x: &Vector, v: &Vector) -> Vector {
        let mut w = Vector::zeros(x.len());
        for i in (0..x.len()).step_by(2) {
            let (a, b) = (x[i], x[i + 1]);
            let haa = 1200.0 * a * a - 400.0 * b + 2.0;
            let hab = -400.0 * a;
            w[i] = haa * v[i] + hab * v[i + 1];
            w[i + 1] = hab * v[i] + 200.0 * v[i + 1];
        }
        w
    }
}

/// Extended Powell singular function: blocks of four variables
/// (a+10b)² + 5(c−d)² + (b−2c)⁴ + 10(a−d)⁴. Minimum 0 at the origin, where
/// the Hessian is singular; requires n divisible by 4.
struct PowellSingular;

impl ObjectiveFn for PowellSingular {
    fn value(&self, x: &Vector) -> f64 {
        let mut f = 0.0;
        for i in (0..x.len()).step_by(4) {
            let (a, b, c, d) = (x[i], x[i + 1], x[i + 2], x[i + 3]);
            let t1 = a + 10.0 * b;
            let t2 = c - d;
            let t3 = b - 2.0 * c;
            let t4 = a - d;
            f += t1 * t1 + 5.0 * t2 * t2 + t3.powi(4) + 10.0 * t4.powi(4);
        }
        f
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(x.len());
        for i in (0..x.len()).step_by(4) {
            let (a, b, c, d) = (x[i], x[i + 1], x[i + 2], x[i + 3]);
            let t1 = a + 10.0 * b;
            let t2 = c - d;
            let t3 = b - 2.0 * c;
            let t4 = a - d;
            g[i] = 2.0 * t1 + 40.0 * t4.powi(3);
            g[i + 1] = 20.0 * t1 + 4.0 * t3.powi(3);
            g[i + 2] = 10.0 * t2 - 8.0 * t3.powi(3);
            g[i + 3] = -10.0 * t2 - 40.0 * t4.powi(3);
        }
        g
    }

    fn hessian_vec(&self, x: &Vector, v: &Vector) -> Vector {
        let mut w = Vector::zeros(x.len());
        for i in (0..x.len()).step_by(4) {
            let (a, b, c, d) = (x[i], x[i + 1], x[i + 2], x[i + 3]);
            let s3 = 12.0 * (b - 2.0 * c) * (b - 2.0 * c);
            let s4 = 120.0 * (a - d) * (a - d);
            let (va, vb, vc, vd) = (v[i], v[i + 1], v[i + 2], v[i + 3]);
            w[i] = (2.0 + s4) * va + 20.0 * vb - s4 * vd;
            w[i + 1] = 20.0 * va + (200.0 + s3) * vb - 2.0 * s3 * vc;
            w[i + 2] = -2.0 * s3 * vb + (10.0 + 4.0 * s3) * vc - 10.0 * vd;
            w[i + 3] = -s4 * va - 10.0 * vc + (10.0 + s4) * vd;
        }
        w
    }
}

/// Strictly convex quadratic ½xᵀAx − 1ᵀx with A = tridiag(−1, 4, −1).
/// A is diagonally dominant, so its spectrum lies in [2, 6].
struct TridiagQuadratic;

impl TridiagQuadratic {
    fn apply(&self, x: &Vector) -> Vector {
        let n = x.len();
        let mut w = Vector::zeros(n);
        for i in 0..n {
            let mut t = 4.0 * x[i];
            if i > 0 {
                t -= x[i - 1];
            }
            if i + 1 < n {
                t -= x[i + 1];
            }
            w[i] = t;
        }
        w
    }
}

impl ObjectiveFn for TridiagQuadratic {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&self.apply(x)) - x.iter().sum::<f64>()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = self.apply(x);
        g.add_scalar_mut(-1.0);
        g
    }
    fn hessian_vec(&self, _x: &Vector, v: &Vector) -> Vector {
        self.apply(v)
    }
}

/// Random strictly convex quadratic ½xᵀAx − bᵀx. A has a log-spaced spectrum
/// in [1, 100] mixed by three Householder reflections; b = A·x* for a random
/// unit x*, so the minimizer and minimum value are known exactly.
struct QuadSpd {
    eigs: Vector,
    reflectors: Vec<Vector>,
    b: Vector,
    f_star: f64,
}

impl QuadSpd {
    fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51AD_5EED);
        let eigs = Vector::from_fn(n, |i, _| {
            if n == 1 {
                1.0
            } else {
                10f64.powf(2.0 * i as f64 / (n - 1) as f64)
            }
        });
        let mut reflectors = Vec::with_capacity(3);
        for _ in 0..3 {
            let mut u = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let nu = u.norm();
            if nu > 0.0 {
                u /= nu;
            } else {
                u[0] = 1.0;
            }
            reflectors.push(u);
        }
        let mut xstar = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let ns = xstar.norm();
        if ns > 0.0 {
            xstar /= ns;
        } else {
            xstar[0] = 1.0;
        }
        let mut me = QuadSpd {
            eigs,
            reflectors,
            b: Vector::zeros(n),
            f_star: 0.0,
        };
        me.b = me.apply(&xstar);
        me.f_star = -0.5 * me.b.dot(&xstar);
        me
    }

    fn reflect(u: &Vector, v: &mut Vector) {
        let t = 2.0 * u.dot(v);
        v.axpy(-t, u, 1.0);
    }

    /// A·v with A = H₁H₂H₃ · diag(eigs) · H₃H₂H₁.
    fn apply(&self, v: &Vector) -> Vector {
        let mut w = v.clone();
        for u in &self.reflectors {
            Self::reflect(u, &mut w);
        }
        w.component_mul_assign(&self.eigs);
        for u in self.reflectors.iter().rev() {
            Self::reflect(u, &mut w);
        }
        w
    }
}

impl ObjectiveFn for QuadSpd {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&self.apply(x)) - self.b.dot(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.apply(x) - &self.b
    }
    fn hessian_vec(&self, _x: &Vector, v: &Vector) -> Vector {
        self.apply(v)
    }
}

/// Nonconvex trigonometric objective
/// Σ x_i²/2 + 0.25·Σ x_i x_{i+1} + 4·Σ (1 − cos x_i).
/// Globally minimized at the origin (value 0); the Hessian
/// tridiag(0.25, 1 + 4cos x_i, 0.25) is strongly indefinite near the start
/// point 3·e, which exercises the indefinite-Hessian paths.
struct Trigonometric;

const TRIG_AMP: f64 = 4.0;
const TRIG_COUPLE: f64 = 0.25;

impl ObjectiveFn for Trigonometric {
    fn value(&self, x: &Vector) -> f64 {
        let n = x.len();
        let mut f = 0.0;
        for i in 0..n {
            f += 0.5 * x[i] * x[i] + TRIG_AMP * (1.0 - x[i].cos());
            if i + 1 < n {
                f += TRIG_COUPLE * x[i] * x[i + 1];
            }
        }
        f
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let n = x.len();
        let mut g = Vector::zeros(n);
        for i in 0..n {
            let mut t = x[i] + TRIG_AMP * x[i].sin();
            if i > 0 {
                t += TRIG_COUPLE * x[i - 1];
            }
            if i + 1 < n {
                t += TRIG_COUPLE * x[i + 1];
            }
            g[i] = t;
        }
        g
    }

    fn hessian_vec(&self, x: &Vector, v: &Vector) -> Vector {
        let n = x.len();
        let mut w = Vector::zeros(n);
        for i in 0..n {
            let mut t = (1.0 + TRIG_AMP * x[i].cos()) * v[i];
            if i > 0 {
                t += TRIG_COUPLE * v[i - 1];
            }
            if i + 1 < n {
                t += TRIG_COUPLE * v[i + 1];
            }
            w[i] = t;
        }
        w
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// Family names accepted by [`make_problem`].
pub const FAMILIES: &[&str] = &[
    "saddle2d",
    "rosenbrock",
    "powell",
    "tridia",
    "quad_spd",
    "trig",
];

fn bad_dim(name: &str, n: usize, reason: &str) -> ConfigError {
    ConfigError::BadDimension {
        name: name.to_string(),
        n,
        reason: reason.to_string(),
    }
}

/// Build a problem instance. `seed` only matters for the randomized family
/// (`quad_spd`); deterministic families ignore it.
pub fn make_problem(name: &str, n: usize, seed: u64) -> Result<Problem, ConfigError> {
    match name {
        "saddle2d" => {
            if n != 2 {
                return Err(bad_dim(name, n, "fixed two-dimensional problem"));
            }
            Ok(Problem::custom(
                name,
                Vector::from_vec(vec![1.0, 1.0]),
                Some(-1e10),
                Arc::new(Saddle2d),
            ))
        }
        "rosenbrock" => {
            if n < 2 || n % 2 != 0 {
                return Err(bad_dim(name, n, "needs even n >= 2"));
            }
            let x0 = Vector::from_fn(n, |i, _| if i % 2 == 0 { -1.2 } else { 1.0 });
            Ok(Problem::custom(name, x0, Some(0.0), Arc::new(Rosenbrock)))
        }
        "powell" => {
            if n < 4 || n % 4 != 0 {
                return Err(bad_dim(name, n, "needs n divisible by 4"));
            }
            let pat = [3.0, -1.0, 0.0, 1.0];
            let x0 = Vector::from_fn(n, |i, _| pat[i % 4]);
            Ok(Problem::custom(
                name,
                x0,
                Some(0.0),
                Arc::new(PowellSingular),
            ))
        }
        "tridia" => {
            if n < 2 {
                return Err(bad_dim(name, n, "needs n >= 2"));
            }
            // Spectrum in [2, 6] and b = 1 give f >= -n/4; pad the bound.
            let f_low = -(n as f64);
            Ok(Problem::custom(
                name,
                Vector::zeros(n),
                Some(f_low),
                Arc::new(TridiagQuadratic),
            ))
        }
        "quad_spd" => {
            if n < 2 {
                return Err(bad_dim(name, n, "needs n >= 2"));
            }
            let q = QuadSpd::new(n, seed);
            let f_low = q.f_star;
            Ok(Problem::custom(
                name,
                Vector::zeros(n),
                Some(f_low),
                Arc::new(q),
            ))
        }
        "trig" => {
            if n < 2 {
                return Err(bad_dim(name, n, "needs n >= 2"));
            }
            let x0 = Vector::from_element(n, 3.0);
            Ok(Problem::custom(
                name,
                x0,
                Some(0.0),
                Arc::new(Trigonometric),
            ))
        }
        other => Err(ConfigError::UnknownProblem(
            other.to_string(),
            FAMILIES.join(", "),
        )),
    }
}

//! Independent verification oracles: finite differences and brute-force grid
//! minimization.
//!
//! These are deliberately simple, slow reference computations used by the
//! test suite to validate analytic derivatives and subproblem solvers. They
//! share no code with the solvers they check.

use crate::problems::{Matrix, Vector};

/// Central-difference gradient with per-coordinate step 1e-6·(1 + |x_i|).
pub fn fd_gradient<F: Fn(&Vector) -> f64>(f: F, x: &Vector) -> Vector {
    let n = x.len();
    let mut g = Vector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        let h = 1e-6 * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Best lattice point found by a grid search.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub point: Vector,
    pub value: f64,
}

/// Exhaustive grid minimization over the square [−radius, radius]² with
/// lattice spacing `h`. Points where `f` is non-finite are skipped, which
/// lets callers encode constraints by returning infinity.
pub fn grid_min_2d<F: Fn(&Vector) -> f64>(f: F, radius: f64, h: f64) -> GridResult {
    let steps = (2.0 * radius / h).round() as usize;
    let mut best_v = f64::INFINITY;
    let mut best = Vector::zeros(2);
    let mut s = Vector::zeros(2);
    for i in 0..=steps {
        s[0] = -radius + i as f64 * h;
        for j in 0..=steps {
            s[1] = -radius + j as f64 * h;
            let v = f(&s);
            if v < best_v {
                best_v = v;
                best.copy_from(&s);
            }
        }
    }
    GridResult {
        point: best,
        value: best_v,
    }
}

/// Grid minimization over the cube [−radius, radius]³ at final lattice
/// spacing `h`, via staged refinement: a coarse sweep keeps the most
/// promising cells, which are then swept at successively finer spacing until
/// the target resolution is reached.
///
/// Staging can in principle miss a basin the coarse sweep overlooks; the
/// result is therefore an upper bound on the grid minimum, which is the safe
/// direction for its use as a test oracle (a solver required to beat the
/// grid only gets an easier target).
pub fn grid_min_3d<F: Fn(&Vector) -> f64>(f: F, radius: f64, h: f64) -> GridResult {
    let keep = 24;
    // Stage 1: coarse sweep at radius/50.
    let h1 = radius / 50.0;
    let mut top = sweep_cube_top(&f, &Vector::zeros(3), radius, h1, keep);
    // Stage 2: refine each kept cell at h1/20 (never finer than the target).
    let h2 = (h1 / 20.0).max(h);
    let mut refined: Vec<(f64, Vector)> = Vec::new();
    for (_, c) in top.drain(..) {
        refined.extend(sweep_cube_top(&f, &c, h1, h2, 4));
    }
    refined.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    refined.truncate(keep);
    // Stage 3: final sweep at the target spacing around each survivor.
    let r3 = h2.max(2.0 * h);
    let mut best_v = f64::INFINITY;
    let mut best = Vector::zeros(3);
    for (_, c) in refined {
        let fin = sweep_cube_top(&f, &c, r3, h, 1);
        if let Some((v, p)) = fin.into_iter().next() {
            if v < best_v {
                best_v = v;
                best = p;
            }
        }
    }
    GridResult {
        point: best,
        value: best_v,
    }
}

/// Sweep the cube centered at `c` with half-width `r` and spacing `h`;
/// return the `keep` best lattice points, sorted ascending by value.
fn sweep_cube_top<F: Fn(&Vector) -> f64>(
    f: &F,
    c: &Vector,
    r: f64,
    h: f64,
    keep: usize,
) -> Vec<(f64, Vector)> {
    let steps = ((2.0 * r / h).round() as usize).max(1);
    // A sorted, truncated buffer of the best points seen so far.
    let mut top: Vec<(f64, Vector)> = Vec::with_capacity(keep + 1);
    let mut s = Vector::zeros(3);
    for i in 0..=steps {
        s[0] = c[0] - r + i as f64 * h;
        for j in 0..=steps {
            s[1] = c[1] - r + j as f64 * h;
            for k in 0..=steps {
                s[2] = c[2] - r + k as f64 * h;
                let v = f(&s);
                if !v.is_finite() {
                    continue;
                }
                if top.len() < keep || v < top.last().unwrap().0 {
                    let pos = top
                        .binary_search_by(|probe| {
                            probe.0.partial_cmp(&v).unwrap_or(std::cmp::Ordering::Equal)
                        })
                        .unwrap_or_else(|e| e);
                    top.insert(pos, (v, s.clone()));
                    if top.len() > keep {
                        top.pop();
                    }
                }
            }
        }
    }
    top
}

/// Value of the cubic-regularized model g·s + ½ sᵀBs + (σ/3)‖s‖³ (the
/// constant term f(x) is omitted; all comparisons are of decrements).
pub fn cubic_model_l2<'a>(
    g: &'a Vector,
    b: &'a Matrix,
    sigma: f64,
) -> impl Fn(&Vector) -> f64 + 'a {
    move |s: &Vector| {
        let bs = b * s;
        g.dot(s) + 0.5 * s.dot(&bs) + sigma / 3.0 * s.norm().powi(3)
    }
}

/// Value of the quadratic model g·s + ½ sᵀBs inside the ball ‖s‖ ≤ Δ,
/// +∞ outside (so grid searches honor the constraint).
pub fn tr_model_l2<'a>(g: &'a Vector, b: &'a Matrix, delta: f64) -> impl Fn(&Vector) -> f64 + 'a {
    move |s: &Vector| {
        if s.norm() > delta {
            f64::INFINITY
        } else {
            let bs = b * s;
            g.dot(s) + 0.5 * s.dot(&bs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fd_gradient_matches_analytic_quadratic() {
        // f(x) = ½ xᵀ diag(1,3) x − (2,1)·x, ∇f = diag(1,3)x − (2,1)
        let f = |x: &Vector| 0.5 * (x[0] * x[0] + 3.0 * x[1] * x[1]) - 2.0 * x[0] - x[1];
        let x = Vector::from_vec(vec![0.7, -1.3]);
        let g = fd_gradient(f, &x);
        assert_relative_eq!(g[0], 0.7 - 2.0, epsilon = 1e-7);
        assert_relative_eq!(g[1], -3.9 - 1.0, epsilon = 1e-7);
    }

    #[test]
    fn grid_2d_finds_offgrid_minimum_to_resolution() {
        // min of (s0 − 0.31047)² + (s1 + 0.72613)² is off-lattice
        let f = |s: &Vector| (s[0] - 0.31047).powi(2) + (s[1] + 0.72613).powi(2);
        let r = grid_min_2d(f, 1.5, 1e-3);
        assert!((r.point[0] - 0.31047).abs() <= 6e-4);
        assert!((r.point[1] + 0.72613).abs() <= 6e-4);
        assert!(r.value <= (5e-4f64).powi(2) * 2.0 + 1e-12);
    }

    #[test]
    fn grid_2d_honors_infinite_values() {
        // constrained: minimum of g·s on the unit ball is at −g/‖g‖
        let f = |s: &Vector| {
            if s.norm() > 1.0 {
                f64::INFINITY
            } else {
                3.0 * s[0] + 4.0 * s[1]
            }
        };
        let r = grid_min_2d(f, 1.2, 2e-3);
        assert_relative_eq!(r.value, -5.0, epsilon = 5e-3);
        assert!(r.point.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn grid_3d_staged_matches_quadratic_minimum() {
        let f = |s: &Vector| {
            (s[0] - 0.41234).powi(2) + 2.0 * (s[1] + 0.09871).powi(2) + 0.5 * (s[2] - 0.77).powi(2)
        };
        let r = grid_min_3d(f, 1.5, 1e-3);
        assert!((r.point[0] - 0.41234).abs() <= 1.5e-3);
        assert!((r.point[1] + 0.09871).abs() <= 1.5e-3);
        assert!((r.point[2] - 0.77).abs() <= 1.5e-3);
    }

    #[test]
    fn grid_3d_staged_finds_lower_of_two_wells() {
        // double well in s0: minima near ±1, the −1 well deeper by the tilt
        let f = |s: &Vector| (s[0] * s[0] - 1.0).powi(2) + 0.1 * s[0] + s[1] * s[1] + s[2] * s[2];
        let r = grid_min_3d(f, 1.6, 1e-3);
        assert!(r.point[0] < -0.9, "picked the wrong well: {:?}", r.point);
    }

    #[test]
    fn model_closures_evaluate_as_written() {
        let g = Vector::from_vec(vec![1.0, -2.0]);
        let b = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        let s = Vector::from_vec(vec![0.5, 0.5]);
        let mc = cubic_model_l2(&g, &b, 3.0);
        // g·s = −0.5, ½sᵀBs = ¼(2−1) = 0.25·... compute: sᵀBs = 0.5²·2 + 0.5²·(−1) = 0.25
        // cubic: ‖s‖³ = (0.5√2)³ = 0.35355³·... = 0.70711³/2^... just compute numerically
        let expect = -0.5 + 0.5 * 0.25 + 1.0 * (0.5f64 * 0.5 + 0.25).sqrt().powi(3);
        assert_relative_eq!(mc(&s), expect, epsilon = 1e-12);

        let tm = tr_model_l2(&g, &b, 0.1);
        assert!(tm(&s).is_infinite());
        let tm2 = tr_model_l2(&g, &b, 1.0);
        assert_relative_eq!(tm2(&s), -0.5 + 0.125, epsilon = 1e-12);
    }
}

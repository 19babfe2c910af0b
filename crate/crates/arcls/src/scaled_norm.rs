//! Direction geometry and the iteration-dependent scaled norm.
//!
//! Given a gradient g and a quasi-Newton direction s^Q, the solvers never
//! materialize the norm-defining matrix M: everything they need reduces to
//! two scalars, θ = ‖s^Q‖²_M = β‖s^Q‖² and χ = ‖g‖²_M/‖g‖², both functions
//! of β and the angle ϖ between g and s^Q. This module computes those
//! scalars, the β policy, model values along the two candidate rays, and —
//! for verification only — an explicit M realizing the scaled norm.

use nalgebra::DVector;
use thiserror::Error;

use crate::problems::{Matrix, Vector};

/// Floor on |cos ϖ| below which χ (which divides by cos ϖ) is treated as
/// undefined. Far below any practical ε_d, so it only guards against exact
/// orthogonality and denormal nonsense.
const COS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    LsArc,
    LsTr,
}

/// β policy: for the cubic-regularization solvers β adapts to σ so the
/// scaled norm tracks the regularizer (small σ ⟹ near-Newton steps); for
/// the trust-region solver the scaled norm is pinned to β = 1. The result
/// is clamped into [beta_min, beta_max].
pub fn beta_policy(
    method: NormMethod,
    sigma: f64,
    slope: f64,
    beta_min: f64,
    beta_max: f64,
) -> f64 {
    let raw = match method {
        NormMethod::LsArc => {
            if slope < 0.0 {
                1e-4 * sigma.powf(-2.0 / 3.0)
            } else {
                2.0
            }
        }
        NormMethod::LsTr => 1.0,
    };
    raw.clamp(beta_min, beta_max)
}

/// Everything the one-dimensional view of the subproblem needs to know
/// about the pair (g, s^Q) under the scaled norm with weight β.
#[derive(Debug, Clone)]
pub struct DirectionInfo {
    pub s_q: Vector,
    pub g: Vector,
    /// gᵀ s^Q.
    pub slope: f64,
    /// ‖s^Q‖ (Euclidean).
    pub norm_sq: f64,
    /// ‖g‖ (Euclidean).
    pub norm_g: f64,
    /// cos ϖ = slope / (‖g‖‖s^Q‖), clamped into [−1, 1].
    pub cos_w: f64,
    pub beta: f64,
    /// θ = β‖s^Q‖².
    pub theta: f64,
    /// χ: the factor with ‖g‖²_M = χ‖g‖². None when g ⊥ s^Q (division by
    /// cos ϖ is undefined) — flagged rather than fabricated.
    pub chi: Option<f64>,
    /// ‖s^Q‖_M = √θ.
    pub m_norm_sq: f64,
    /// ‖g‖_M = √χ·‖g‖ (None with χ).
    pub m_norm_g: Option<f64>,
    /// |slope| ≥ ε_d‖g‖‖s^Q‖: the angle condition that makes the
    /// one-dimensional reduction sound.
    pub descent_ok: bool,
}

impl DirectionInfo {
    /// θ^{3/2} = β^{3/2}‖s^Q‖³ — the cubic-term coefficient along s^Q.
    pub fn theta_32(&self) -> f64 {
        self.m_norm_sq.powi(3)
    }

    /// χ^{3/2}‖g‖³ — the cubic-term coefficient along −g (None with χ).
    pub fn chi_32_g3(&self) -> Option<f64> {
        self.m_norm_g.map(|v| v.powi(3))
    }
}

/// Compute the full direction geometry for (g, s^Q) under weight β.
/// Returns None when either vector is zero (no geometry to speak of);
/// callers treat that as a failed angle condition.
pub fn direction_analysis(
    g: &Vector,
    s_q: &Vector,
    beta: f64,
    eps_d: f64,
) -> Option<DirectionInfo> {
    let norm_g = g.norm();
    let norm_sq = s_q.norm();
    if norm_g == 0.0 || norm_sq == 0.0 || !norm_g.is_finite() || !norm_sq.is_finite() {
        return None;
    }
    let slope = g.dot(s_q);
    let cos_w = (slope / (norm_g * norm_sq)).clamp(-1.0, 1.0);
    let theta = beta * norm_sq * norm_sq;
    let m_norm_sq = beta.sqrt() * norm_sq;
    let (chi, m_norm_g) = if cos_w.abs() < COS_FLOOR {
        (None, None)
    } else {
        let c2 = cos_w * cos_w;
        // χ = β(5/2 − (3/2)cos²ϖ + 2((1 − cos²ϖ)/cos ϖ)²)
        let u = (1.0 - c2) / cos_w;
        let chi = beta * (2.5 - 1.5 * c2 + 2.0 * u * u);
        (Some(chi), Some(chi.sqrt() * norm_g))
    };
    let descent_ok = slope.abs() >= eps_d * norm_g * norm_sq;
    Some(DirectionInfo {
        s_q: s_q.clone(),
        g: g.clone(),
        slope,
        norm_sq,
        norm_g,
        cos_w,
        beta,
        theta,
        chi,
        m_norm_sq,
        m_norm_g,
        descent_ok,
    })
}

/// Which ray the one-dimensional model is evaluated along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelRay {
    /// d = s^Q; curvature argument is s^{Q,T} B s^Q.
    AlongSq,
    /// d = −g; curvature argument is gᵀ B g.
    AlongNegG,
}

/// Cubic-regularized model value along a ray:
/// m(t·d) = f0 + t·gᵀd + (t²/2)·dᵀBd + (σ/3)‖t·d‖³_M.
/// Pass σ = 0 for the plain quadratic model.
///
/// Along −g this requires χ; calling it for an orthogonal pair is a caller
/// bug (the angle condition is checked upstream).
pub fn cubic_model_value(
    f0: f64,
    info: &DirectionInfo,
    curvature: f64,
    sigma: f64,
    t: f64,
    along: ModelRay,
) -> f64 {
    let (lin, m_norm) = match along {
        ModelRay::AlongSq => (info.slope, info.m_norm_sq),
        ModelRay::AlongNegG => (
            -info.norm_g * info.norm_g,
            info.m_norm_g
                .expect("model along -g needs chi; angle condition not checked upstream"),
        ),
    };
    f0 + lin * t + 0.5 * t * t * curvature + sigma / 3.0 * (t.abs() * m_norm).powi(3)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScaledNormError {
    #[error("assumption_violated: explicit scaled norm requires the angle condition to hold")]
    AssumptionViolated,
}

/// An explicit matrix M realizing the scaled norm — verification aid only.
///
/// In the orthonormal pair {u, v} (u along s^Q, v the orthonormalized
/// gradient component), M acts as the 2×2 block
/// N = [[β, β·tanϖ], [β·tanϖ, γ]] with γ = 2β·tan²ϖ + β/2, and as
/// d_fill·I on the orthogonal complement. The eigenvalues of N are β/2 and
/// β(1 + 2tan²ϖ) exactly.
#[derive(Debug, Clone)]
pub struct ExplicitScaledNorm {
    pub m: Matrix,
    /// The 2×2 interaction block.
    pub n_block: Matrix,
    pub gamma: f64,
    pub tan_w: f64,
    /// Smallest eigenvalue of the block, computed cancellation-free
    /// (algebraically β/2).
    pub lambda_min_n: f64,
    /// Largest eigenvalue of the block (algebraically β(1 + 2tan²ϖ)).
    pub lambda_max_n: f64,
    /// Orthonormal pair {u, v} as columns (n×2).
    pub basis: Matrix,
    pub d_fill: f64,
}

/// Build the explicit scaled-norm matrix for a direction pair satisfying
/// the angle condition. `d_fill` is the (scalar) weight on the orthogonal
/// complement; the default choice elsewhere is 1.
pub fn build_explicit_m(
    info: &DirectionInfo,
    d_fill: f64,
) -> Result<ExplicitScaledNorm, ScaledNormError> {
    if !info.descent_ok || info.chi.is_none() {
        return Err(ScaledNormError::AssumptionViolated);
    }
    let n = info.s_q.len();
    let beta = info.beta;
    let u = &info.s_q / info.norm_sq;

    // Orthonormalize the gradient direction against u (twice, for float
    // hygiene). ĝ = cosϖ·u + sinϖ·v with sinϖ ≥ 0.
    let ghat = &info.g / info.norm_g;
    let mut w = &ghat - u.dot(&ghat) * &u;
    w -= u.dot(&w) * &u;
    let sin_w = w.norm();
    let v = if sin_w > 1e-12 {
        w / sin_w
    } else {
        // Collinear: any unit vector orthogonal to u works (tanϖ = 0, so v
        // only carries the γ = β/2 weight).
        let mut cand = DVector::zeros(n);
        // pick the coordinate where u is smallest, then orthogonalize
        let (jmin, _) = u
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        cand[jmin] = 1.0;
        let mut w2 = &cand - u.dot(&cand) * &u;
        w2 -= u.dot(&w2) * &u;
        let nw = w2.norm();
        w2 / nw
    };

    let tan_w = if sin_w > 1e-12 {
        sin_w / info.cos_w
    } else {
        0.0
    };
    let gamma = 2.0 * beta * tan_w * tan_w + beta / 2.0;
    let n_block = Matrix::from_row_slice(2, 2, &[beta, beta * tan_w, beta * tan_w, gamma]);

    // Block eigenvalues without cancellation: with t = tan²ϖ,
    // tr = β(3/2 + 2t), det = β²(t + 1/2), disc = tr² − 4det = β²(2t + 1/2)²,
    // so λmax = (tr + √disc)/2 and λmin = 2·det/(tr + √disc).
    let t = tan_w * tan_w;
    let tr = beta * (1.5 + 2.0 * t);
    let det = beta * beta * (t + 0.5);
    let disc = (tr * tr - 4.0 * det).max(0.0);
    let root = tr + disc.sqrt();
    let lambda_max_n = 0.5 * root;
    let lambda_min_n = 2.0 * det / root;

    // M = d·I + (β − d)·uuᵀ + β·tanϖ·(uvᵀ + vuᵀ) + (γ − d)·vvᵀ,
    // assembled entrywise so exact symmetry holds in floating point.
    let mut m = Matrix::zeros(n, n);
    let b_off = beta * tan_w;
    for i in 0..n {
        for j in i..n {
            let mut val = (beta - d_fill) * u[i] * u[j]
                + b_off * (u[i] * v[j] + v[i] * u[j])
                + (gamma - d_fill) * v[i] * v[j];
            if i == j {
                val += d_fill;
            }
            m[(i, j)] = val;
            m[(j, i)] = val;
        }
    }

    let mut basis = Matrix::zeros(n, 2);
    basis.set_column(0, &u);
    basis.set_column(1, &v);

    Ok(ExplicitScaledNorm {
        m,
        n_block,
        gamma,
        tan_w,
        lambda_min_n,
        lambda_max_n,
        basis,
        d_fill,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_unit(n: usize, rng: &mut ChaCha8Rng) -> Vector {
        let v = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let nv = v.norm();
        if nv == 0.0 {
            Vector::from_element(n, 1.0 / (n as f64).sqrt())
        } else {
            v / nv
        }
    }

    #[test]
    fn orthogonal_pair_is_flagged_with_chi_undefined() {
        let g = Vector::from_vec(vec![2.0, -2.0]);
        let s_q = Vector::from_vec(vec![-1.0, -1.0]);
        let info = direction_analysis(&g, &s_q, 1.0, 1e-3).unwrap();
        assert_eq!(info.slope, 0.0);
        assert!(!info.descent_ok);
        assert!(info.chi.is_none());
        assert!(info.m_norm_g.is_none());
    }

    #[test]
    fn steepest_descent_direction_gives_chi_equal_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = rand_unit(6, &mut rng) * 3.0;
        let s_q = -&g;
        let beta = 0.37;
        let info = direction_analysis(&g, &s_q, beta, 1e-3).unwrap();
        assert_relative_eq!(info.cos_w, -1.0, epsilon = 1e-14);
        assert_relative_eq!(info.chi.unwrap(), beta, epsilon = 1e-12);
        assert!(info.descent_ok);
    }

    #[test]
    fn descent_path_pair_matches_direct_arithmetic() {
        // Pair arising on the indefinite 2-D path: slope is positive (an
        // ascent direction for s^Q, handled by the negative step length).
        let g = Vector::from_vec(vec![1.1559, -7.4126]);
        let s_q = Vector::from_vec(vec![-0.5780, -3.7063]);
        let info = direction_analysis(&g, &s_q, 2.0, 1e-3).unwrap();
        assert_relative_eq!(info.slope, 26.805, epsilon = 1e-2);
        assert!(info.descent_ok);
        assert!(info.cos_w > 0.9);
        // χ at cos close to 1 stays near β: u = (1−c²)/c is small
        let chi = info.chi.unwrap();
        assert!(chi >= info.beta);
    }

    #[test]
    fn beta_policy_matches_reference_settings() {
        assert_relative_eq!(
            beta_policy(NormMethod::LsArc, 1.0, -1.0, 1e-12, 1e12),
            1e-4,
            epsilon = 1e-18
        );
        assert_eq!(beta_policy(NormMethod::LsArc, 1.0, 1.0, 1e-12, 1e12), 2.0);
        assert_eq!(beta_policy(NormMethod::LsTr, 123.0, -5.0, 1e-12, 1e12), 1.0);
        // clamping at extreme σ
        assert_eq!(
            beta_policy(NormMethod::LsArc, 1e30, -1.0, 1e-12, 1e12),
            1e-12
        );
        assert_eq!(
            beta_policy(NormMethod::LsArc, 1e-300, -1.0, 1e-12, 1e12),
            1e12
        );
    }

    #[test]
    fn chi_is_scale_invariant_and_theta_scales_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let g = rand_unit(8, &mut rng) * rng.gen_range(0.1..10.0);
            let s = rand_unit(8, &mut rng) * rng.gen_range(0.1..10.0);
            let beta = rng.gen_range(0.01..100.0);
            let a = match direction_analysis(&g, &s, beta, 1e-3) {
                Some(i) if i.chi.is_some() => i,
                _ => continue,
            };
            let c = rng.gen_range(0.5..4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let b = direction_analysis(&g, &(c * &s), beta, 1e-3).unwrap();
            assert_relative_eq!(a.chi.unwrap(), b.chi.unwrap(), max_relative = 1e-10);
            assert_relative_eq!(b.theta, c * c * a.theta, max_relative = 1e-12);
        }
    }

    #[test]
    fn chi_dominates_beta_with_equality_only_when_collinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let g = rand_unit(5, &mut rng);
            let s = rand_unit(5, &mut rng);
            let beta = rng.gen_range(0.01..10.0);
            if let Some(info) = direction_analysis(&g, &s, beta, 1e-3) {
                if let Some(chi) = info.chi {
                    assert!(chi >= beta * (1.0 - 1e-14));
                    if info.cos_w.abs() < 0.999 {
                        assert!(chi > beta);
                    }
                }
            }
        }
    }

    #[test]
    fn model_value_reduces_to_f0_and_exact_quadratic_identity() {
        let g = Vector::from_vec(vec![3.0, -1.0]);
        let s = Vector::from_vec(vec![-2.0, 0.5]);
        let info = direction_analysis(&g, &s, 1.3, 1e-3).unwrap();
        assert_eq!(
            cubic_model_value(7.5, &info, -info.slope, 0.7, 0.0, ModelRay::AlongSq),
            7.5
        );
        // With exact s^Q the curvature along it is −slope, so at σ = 0 the
        // model decrement is slope·t − slope·t²/2.
        for t in [0.2, 0.5, 1.0, -0.3] {
            let m = cubic_model_value(0.0, &info, -info.slope, 0.0, t, ModelRay::AlongSq);
            assert_relative_eq!(
                m,
                info.slope * t - info.slope * t * t / 2.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn model_value_matches_explicit_norm_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..40 {
            let n = rng.gen_range(3..12);
            let g = rand_unit(n, &mut rng) * rng.gen_range(0.5..5.0);
            let s = rand_unit(n, &mut rng) * rng.gen_range(0.5..5.0);
            let beta = rng.gen_range(0.05..20.0);
            let info = match direction_analysis(&g, &s, beta, 1e-3) {
                Some(i) if i.descent_ok => i,
                _ => continue,
            };
            let ex = build_explicit_m(&info, rng.gen_range(0.2..5.0)).unwrap();
            let r = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let b = (&r + r.transpose()) * 0.5;
            let sigma = rng.gen_range(0.0..3.0);
            for t in [0.3, 1.0, -0.7] {
                // along s^Q
                let d = t * &s;
                let direct = g.dot(&d)
                    + 0.5 * d.dot(&(&b * &d))
                    + sigma / 3.0 * d.dot(&(&ex.m * &d)).sqrt().powi(3);
                let curv = s.dot(&(&b * &s));
                let got = cubic_model_value(0.0, &info, curv, sigma, t, ModelRay::AlongSq);
                assert_relative_eq!(direct, got, max_relative = 1e-9, epsilon = 1e-12);
                // along −g
                let d = -t.abs() * &g;
                let direct = g.dot(&d)
                    + 0.5 * d.dot(&(&b * &d))
                    + sigma / 3.0 * d.dot(&(&ex.m * &d)).sqrt().powi(3);
                let curv_g = g.dot(&(&b * &g));
                let got =
                    cubic_model_value(0.0, &info, curv_g, sigma, t.abs(), ModelRay::AlongNegG);
                assert_relative_eq!(direct, got, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn explicit_norm_invariants_hold_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (beta_min, beta_max, eps_d) = (1e-12, 1e12, 1e-3);
        let mut tested = 0;
        while tested < 60 {
            let n = rng.gen_range(2..25);
            let g = rand_unit(n, &mut rng) * rng.gen_range(0.2..5.0);
            let s = rand_unit(n, &mut rng) * rng.gen_range(0.2..5.0);
            let beta = 10f64.powf(rng.gen_range(-2.0..2.0));
            let info = match direction_analysis(&g, &s, beta, eps_d) {
                Some(i) if i.descent_ok && i.cos_w.abs() >= 0.05 => i,
                _ => continue,
            };
            tested += 1;
            let ex = build_explicit_m(&info, 1.0).unwrap();

            // secant property: M s^Q = (θ/slope)·g
            let lhs = &ex.m * &info.s_q;
            let rhs = (info.theta / info.slope) * &g;
            assert!(
                (&lhs - &rhs).norm() <= 1e-10 * rhs.norm().max(info.norm_g),
                "secant residual too large: {:.3e}",
                (&lhs - &rhs).norm()
            );

            // norm identities
            assert_relative_eq!(
                info.s_q.dot(&(&ex.m * &info.s_q)),
                info.theta,
                max_relative = 1e-10
            );
            assert_relative_eq!(
                g.dot(&(&ex.m * &g)),
                info.chi.unwrap() * info.norm_g * info.norm_g,
                max_relative = 1e-10
            );

            // block eigenvalues
            assert_relative_eq!(ex.lambda_min_n, beta / 2.0, max_relative = 1e-12);
            assert_relative_eq!(
                ex.lambda_max_n,
                beta * (1.0 + 2.0 * ex.tan_w * ex.tan_w),
                max_relative = 1e-12
            );
            let block_eigs = ex.n_block.symmetric_eigenvalues();
            let bmin = block_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_relative_eq!(bmin, beta / 2.0, max_relative = 1e-9);

            // SPD with spectrum inside the uniform-equivalence window
            let eigs = ex.m.symmetric_eigenvalues();
            for e in eigs.iter() {
                assert!(*e > 0.0, "explicit M not positive definite");
                assert!(*e >= beta_min / 2.0 * (1.0 - 1e-12));
                assert!(*e <= 2.0 * beta_max / (eps_d * eps_d) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn explicit_norm_collinear_case_has_diagonal_block() {
        let g = Vector::from_vec(vec![1.0, 2.0, -1.0]);
        let s = -2.5 * &g;
        let beta = 0.8;
        let info = direction_analysis(&g, &s, beta, 1e-3).unwrap();
        let ex = build_explicit_m(&info, 1.0).unwrap();
        assert_eq!(ex.tan_w, 0.0);
        assert_relative_eq!(ex.n_block[(0, 0)], beta, epsilon = 1e-15);
        assert_relative_eq!(ex.n_block[(1, 1)], beta / 2.0, epsilon = 1e-15);
        assert_eq!(ex.n_block[(0, 1)], 0.0);
        let lhs = &ex.m * &s;
        let rhs = (info.theta / info.slope) * &g;
        assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn explicit_norm_rejects_orthogonal_pairs() {
        let g = Vector::from_vec(vec![1.0, 0.0]);
        let s = Vector::from_vec(vec![0.0, 1.0]);
        let info = direction_analysis(&g, &s, 1.0, 1e-3).unwrap();
        assert!(matches!(
            build_explicit_m(&info, 1.0),
            Err(ScaledNormError::AssumptionViolated)
        ));
    }
}

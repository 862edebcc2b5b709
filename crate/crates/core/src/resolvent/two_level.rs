//! Exact solve of the two-chaos truncated generator equation.
//!
//! Eliminating the second-chaos component reduces the system to a radial
//! integral equation for the first-harmonic profile `h`:
//! the kernel `phi_hat(p) = p_2` lies in the sector `psi_hat(p) = p_2 h(|p|)`,
//! which both the diagonal and off-diagonal parts of the sandwiched operator
//! preserve by rotation covariance. With `a = lambda + r^2 + t^2`,
//! `b = 2 r t`, the angular reductions are closed form:
//!
//! * diagonal: `A1(r) = integral V_hat(t) t 2 pi / (a + sqrt(a^2-b^2)) dt`
//! * off-diagonal: `G(r, t) = -pi b / (a + sqrt(a^2-b^2))^2`
//!
//! and the equation reads
//! `[lambda + r^2 (1 + w A1(r))] h(r) - w r integral V_hat(t) t^2 G(r, t) h(t) dt = 1`,
//! solved by a Nystrom discretization on a log grid.

use super::{angular_integral_free, phi_resolvent_form};
use crate::bump::{Bump, BumpSpec};
use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// First-harmonic profile of the solved first-chaos kernel, with the
/// level-2 kernel held implicitly by the eliminated system.
#[derive(Debug, Clone, Serialize)]
pub struct ChaosKernel2 {
    pub radial_grid: Vec<f64>,
    pub h: Vec<f64>,
    /// Energy of the first-chaos component under the isometry weight.
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoLevelSolution {
    pub lambda: f64,
    /// `<phi, psi^(2)>`: the rigorous two-level lower bound on
    /// `lambda^2 D_tilde / 2`.
    pub value: f64,
    /// `<phi, (lambda - Delta)^{-1} phi>`: the free upper comparison.
    pub free_value: f64,
    /// The same solve with the off-diagonal kernel dropped.
    pub diag_only_value: f64,
    pub condition_estimate: f64,
    pub resolution: usize,
    pub kernel: ChaosKernel2,
}

/// Off-diagonal angular reduction; always negative, written in the
/// cancellation-free form `-pi b / (a + sqrt(a^2 - b^2))^2`.
#[inline]
fn g_kernel(lambda: f64, r: f64, t: f64) -> f64 {
    let a = lambda + r * r + t * t;
    let b = 2.0 * r * t;
    let c = (a * a - b * b).max(0.0).sqrt();
    let s = a + c;
    -PI * b / (s * s)
}

/// Nodes and weights of a composite 4-point Gauss-Legendre rule on a log
/// grid over `[lo, hi]`.
fn log_gl_nodes(lo: f64, hi: f64, n_nodes: usize) -> (Vec<f64>, Vec<f64>) {
    // 4-point Gauss-Legendre on [-1, 1]
    const X: [f64; 4] = [
        -0.861136311594052575223946488893,
        -0.339981043584856264802665759103,
        0.339981043584856264802665759103,
        0.861136311594052575223946488893,
    ];
    const W: [f64; 4] = [
        0.347854845137453857373063949222,
        0.652145154862546142626936050778,
        0.652145154862546142626936050778,
        0.347854845137453857373063949222,
    ];
    let panels = (n_nodes / 4).max(1);
    let (a, b) = (lo.ln(), hi.ln());
    let dt = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 4);
    let mut weights = Vec::with_capacity(panels * 4);
    for p in 0..panels {
        let t0 = a + p as f64 * dt;
        for j in 0..4 {
            let t = t0 + 0.5 * dt * (X[j] + 1.0);
            let r = t.exp();
            nodes.push(r);
            weights.push(0.5 * dt * W[j] * r); // Jacobian dr = r dt
        }
    }
    (nodes, weights)
}

#[allow(clippy::needless_range_loop)]
fn lu_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let n = b.len();
    // 1-norm of M before factorization, for the condition estimate
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[i][j].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (piv, mx) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .fold((col, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mx == 0.0 {
            return Err(Error::Resolution("singular system in two-level solve".into()));
        }
        m.swap(col, piv);
        b.swap(col, piv);
        perm.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            m[r][col] = f;
            for c in col + 1..n {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    // crude 1-norm condition estimate from a few triangular solves
    let solve_with = |rhs: &[f64]| -> Vec<f64> {
        let mut y: Vec<f64> = perm.iter().map(|&i| rhs[i]).collect();
        for r in 0..n {
            for c in 0..r {
                y[r] -= m[r][c] * y[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in r + 1..n {
                acc -= m[r][c] * x[c];
            }
            x[r] = acc / m[r][r];
        }
        x
    };
    let mut inv_norm = 0.0f64;
    let mut state = 0x9E3779B97F4A7C15u64;
    for _ in 0..4 {
        let rhs: Vec<f64> = (0..n)
            .map(|_| {
                state = crate::rng::splitmix64(state);
                if state & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let sol = solve_with(&rhs);
        let r1: f64 = sol.iter().map(|v| v.abs()).sum();
        inv_norm = inv_norm.max(r1 / n as f64);
    }
    Ok((x, norm1 * inv_norm))
}

/// Solve the two-chaos truncated system exactly and return
/// `<phi, psi^(2)>` together with comparison values.
pub fn solve_truncated_two(
    lambda: f64,
    bump_spec: &BumpSpec,
    resolution: usize,
    weight: f64,
) -> Result<TwoLevelSolution> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain(format!(
            "two-level solve needs lambda in (0, 1), got {lambda}"
        )));
    }
    if resolution < 64 {
        return Err(Error::domain("two-level solve needs at least 64 radial nodes"));
    }
    let bump = Bump::new(bump_spec)?;
    let r_cut = bump.cutoff_momentum();
    let r_min = lambda.sqrt() * 1e-4;
    let (nodes, wts) = log_gl_nodes(r_min, r_cut, resolution);
    let n = nodes.len();

    // diagonal coefficients
    let a1: Vec<f64> = nodes
        .iter()
        .map(|&r| angular_integral_free(r, lambda, &bump))
        .collect::<Result<Vec<_>>>()?;

    let mut m = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        let r = nodes[i];
        m[i][i] = lambda + r * r * (1.0 + weight * a1[i]);
        for j in 0..n {
            let t = nodes[j];
            m[i][j] -= weight * r * bump.v_hat_radial(t) * t * t * g_kernel(lambda, r, t) * wts[j];
        }
    }
    let (h, condition_estimate) = lu_solve(m, vec![1.0; n])?;
    if condition_estimate > 1e12 {
        return Err(Error::Resolution(format!(
            "two-level system too ill-conditioned: estimate {condition_estimate:.3e}"
        )));
    }

    // <phi, psi_1> = w pi integral V_hat(r) r h(r) dr, with the small-r head
    // where h is flat at 1/(lambda + r^2 (1 + w A1)).
    let mut value = 0.0;
    let mut energy = 0.0;
    for j in 0..n {
        let t = nodes[j];
        let v = bump.v_hat_radial(t);
        value += wts[j] * v * t * h[j];
        energy += wts[j] * v * t * h[j] * h[j];
    }
    let head_h = h[0];
    value += head_h * 0.5 * r_min * r_min; // V_hat ~ 1 below r_min
    value *= weight * PI;
    energy *= weight * PI;

    let free_value = phi_resolvent_form(lambda, &|_| 1.0, &bump, weight)?;
    let diag_only_value = phi_resolvent_form(
        lambda,
        &|rho: f64| {
            let r = (rho - lambda).max(0.0).sqrt();
            1.0 + weight * angular_integral_free(r, lambda, &bump).unwrap_or(f64::INFINITY)
        },
        &bump,
        weight,
    )?;

    Ok(TwoLevelSolution {
        lambda,
        value,
        free_value,
        diag_only_value,
        condition_estimate,
        resolution,
        kernel: ChaosKernel2 { radial_grid: nodes, h, energy },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Pchip;
    use crate::quad;
    use crate::resolvent::{iterate_resolvent, spectral_weight};

    #[test]
    fn angular_kernels_match_direct_quadrature() {
        // closed forms for the two angular reductions against brute force
        for (lambda, r, t) in [(0.1, 0.3, 0.7), (1e-4, 1.0, 1.001), (0.01, 2.0, 0.05)] {
            let a = lambda + r * r + t * t;
            let b = 2.0 * r * t;
            let direct_g = quad::integrate(
                |g: f64| g.sin().powi(2) * g.cos() / (a + b * g.cos()),
                0.0,
                2.0 * PI,
                1e-12,
            )
            .unwrap()
            .value;
            let closed = g_kernel(lambda, r, t);
            assert!(
                (direct_g - closed).abs() <= 1e-9 * closed.abs().max(1e-12),
                "G mismatch: {direct_g} vs {closed}"
            );
            let direct_s = quad::integrate(
                |g: f64| g.sin().powi(2) / (a + b * g.cos()),
                0.0,
                2.0 * PI,
                1e-12,
            )
            .unwrap()
            .value;
            let c = (a * a - b * b).sqrt();
            assert!((direct_s - 2.0 * PI / (a + c)).abs() <= 1e-9 * direct_s);
        }
    }

    #[test]
    fn nystrom_solution_satisfies_the_equation_off_nodes() {
        let spec = BumpSpec::gaussian(1.0);
        let w = spectral_weight(2.0 * PI);
        let lambda = 0.2;
        let sol = solve_truncated_two(lambda, &spec, 256, w).unwrap();
        let bump = Bump::new(&spec).unwrap();
        let nodes = &sol.kernel.radial_grid;
        let h = Pchip::new(nodes.iter().map(|r| r.ln()).collect(), sol.kernel.h.clone()).unwrap();
        for &r in &[0.11, 0.9, 2.3] {
            let a1 = angular_integral_free(r, lambda, &bump).unwrap();
            let integral = quad::integrate(
                |t: f64| {
                    bump.v_hat_radial(t) * t * t * g_kernel(lambda, r, t) * h.eval(t.ln())
                },
                nodes[0],
                *nodes.last().unwrap(),
                1e-10,
            )
            .unwrap()
            .value;
            let residual =
                (lambda + r * r * (1.0 + w * a1)) * h.eval(r.ln()) - w * r * integral - 1.0;
            assert!(residual.abs() < 2e-3, "residual {residual} at r = {r}");
        }
    }

    #[test]
    fn positivity_and_free_comparison() {
        let spec = BumpSpec::gaussian(1.0);
        let w = spectral_weight(2.0 * PI);
        for lambda in [0.9, 0.5, 0.1] {
            let sol = solve_truncated_two(lambda, &spec, 96, w).unwrap();
            assert!(sol.value > 0.0);
            // adding the positive H2 decreases the quadratic form
            assert!(sol.value <= sol.free_value, "{sol:?}");
            // dropping the off-diagonal part (positive in this sector)
            // relaxes the damping
            assert!(sol.value <= sol.diag_only_value * (1.0 + 1e-9));
            assert!(sol.kernel.energy.is_finite());
        }
    }

    #[test]
    fn resolution_convergence() {
        let spec = BumpSpec::gaussian(1.0);
        let w = spectral_weight(2.0 * PI);
        let a = solve_truncated_two(0.1, &spec, 128, w).unwrap();
        let b = solve_truncated_two(0.1, &spec, 256, w).unwrap();
        assert!(
            (a.value - b.value).abs() / b.value < 1e-4,
            "{} vs {}",
            a.value,
            b.value
        );
    }

    #[test]
    fn diagonal_variant_matches_iteration() {
        let spec = BumpSpec::gaussian(1.0);
        let w = spectral_weight(2.0 * PI);
        for lambda in [0.2, 0.05] {
            let sol = solve_truncated_two(lambda, &spec, 128, w).unwrap();
            let out = iterate_resolvent(lambda, 2, &spec, w).unwrap();
            let level2 = out.levels[1].d_diag * lambda * lambda / 2.0;
            assert!(
                (sol.diag_only_value - level2).abs() / level2 < 5e-4,
                "lambda={lambda}: {} vs {}",
                sol.diag_only_value,
                level2
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = BumpSpec::gaussian(1.0);
        assert!(solve_truncated_two(0.1, &spec, 32, 0.2).is_err());
        assert!(solve_truncated_two(1.5, &spec, 128, 0.2).is_err());
    }
}

//! The mollifier U and the covariance kernel V = U*U.
//!
//! Fourier convention, fixed project-wide: forward transform
//! `f_hat(p) = integral f(x) exp(-i p.x) dx`, inverse carries `(2 pi)^-2`.
//! Under it `u_hat(0) = 1` expresses the normalization of U and
//! `v_hat = u_hat^2` holds pointwise for every kernel kind.

use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use serde::{Deserialize, Serialize};

/// Threshold below which `v_hat` is treated as numerically zero; sets the
/// momentum cutoff used by grids and quadratures.
pub const VHAT_FLOOR: f64 = 1e-16;

/// Radial table of `u_hat` samples for user-supplied kernels.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadialTable {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BumpKind {
    Gaussian,
    TabulatedRadial,
}

/// Specification of the mollifier U.
///
/// `sigma` is the length scale; for the Gaussian family
/// `u_hat(p) = exp(-sigma^2 |p|^2 / 2)`. The tabulated kind carries radial
/// samples of `u_hat` interpolated by a clamped cubic spline.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BumpSpec {
    pub kind: BumpKind,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<RadialTable>,
}

impl BumpSpec {
    pub fn gaussian(sigma: f64) -> Self {
        BumpSpec { kind: BumpKind::Gaussian, sigma, table: None }
    }

    pub fn tabulated(sigma: f64, radii: Vec<f64>, values: Vec<f64>) -> Self {
        BumpSpec {
            kind: BumpKind::TabulatedRadial,
            sigma,
            table: Some(RadialTable { radii, values }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::config(format!(
                "bump sigma must be a positive finite length scale, got {}",
                self.sigma
            )));
        }
        match self.kind {
            BumpKind::Gaussian => Ok(()),
            BumpKind::TabulatedRadial => {
                let t = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::config("tabulated-radial bump needs a table"))?;
                if t.radii.len() < 3 || t.radii.len() != t.values.len() {
                    return Err(Error::config("bump table needs >= 3 matching samples"));
                }
                if t.radii[0] != 0.0 || (t.values[0] - 1.0).abs() > 1e-12 {
                    return Err(Error::config(
                        "bump table must start at r = 0 with u_hat(0) = 1 (normalization)",
                    ));
                }
                if t.radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config("bump table radii must be strictly increasing"));
                }
                if t.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("bump table values must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Momentum beyond which `v_hat` falls below [`VHAT_FLOOR`]; spectral
    /// truncation above it is not visible in double precision.
    pub fn cutoff_momentum(&self) -> f64 {
        match self.kind {
            // exp(-sigma^2 r^2) < 1e-16  <=>  r > sqrt(16 ln 10) / sigma.
            BumpKind::Gaussian => (16.0 * std::f64::consts::LN_10).sqrt() / self.sigma,
            BumpKind::TabulatedRadial => self
                .table
                .as_ref()
                .map_or(6.1 / self.sigma, |t| *t.radii.last().unwrap_or(&(6.1 / self.sigma))),
        }
    }
}

/// Validated evaluator built from a [`BumpSpec`].
#[derive(Debug, Clone)]
pub struct Bump {
    spec: BumpSpec,
    spline: Option<CubicSpline>,
    r_max: f64,
}

impl Bump {
    pub fn new(spec: &BumpSpec) -> Result<Self> {
        spec.validate()?;
        let (spline, r_max) = match spec.kind {
            BumpKind::Gaussian => (None, f64::INFINITY),
            BumpKind::TabulatedRadial => {
                let t = spec.table.as_ref().expect("validated");
                // Even radial profile: slope zero at r = 0; tail slope zero
                // once the profile has decayed.
                let s = CubicSpline::clamped(t.radii.clone(), t.values.clone(), 0.0, 0.0)?;
                (Some(s), *t.radii.last().unwrap())
            }
        };
        Ok(Bump { spec: spec.clone(), spline, r_max })
    }

    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    pub fn cutoff_momentum(&self) -> f64 {
        self.spec.cutoff_momentum()
    }

    /// `u_hat` as a function of |p|.
    #[inline]
    pub fn u_hat_radial(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match &self.spline {
            None => {
                let s = self.spec.sigma;
                (-0.5 * s * s * r * r).exp()
            }
            Some(sp) => {
                if r >= self.r_max {
                    0.0
                } else {
                    sp.eval(r)
                }
            }
        }
    }

    /// `v_hat = u_hat^2` as a function of |p|; nonnegative by construction.
    #[inline]
    pub fn v_hat_radial(&self, r: f64) -> f64 {
        let u = self.u_hat_radial(r);
        u * u
    }

    /// V(x) as a function of |x|. Closed form for the Gaussian family,
    /// Hankel-transform quadrature for tabulated kernels.
    pub fn v_real_radial(&self, r: f64) -> Result<f64> {
        match self.spec.kind {
            BumpKind::Gaussian => {
                let s2 = self.spec.sigma * self.spec.sigma;
                Ok((-r * r / (4.0 * s2)).exp() / (4.0 * std::f64::consts::PI * s2))
            }
            BumpKind::TabulatedRadial => hankel_inverse(|q| self.v_hat_radial(q), self.r_max, r),
        }
    }
}

/// Inverse Fourier transform of a radial profile at radius `x`:
/// `(2 pi)^-1 * integral_0^rmax f(q) J0(q x) q dq`.
pub fn hankel_inverse(f: impl Fn(f64) -> f64, r_max: f64, x: f64) -> Result<f64> {
    let q = crate::quad::adaptive(
        |r: f64| f(r) * bessel_j0(r * x) * r,
        0.0,
        r_max,
        &[],
        1e-12,
        1e-14,
        4000,
    )?;
    Ok(q.value / (2.0 * std::f64::consts::PI))
}

/// J0 via the periodic-trapezoid form of its integral representation;
/// the rule converges geometrically for smooth periodic integrands.
pub fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    let m = (24 + 2 * (z.ceil() as usize)).next_multiple_of(2);
    let mut acc = 0.0;
    for j in 0..m {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
        acc += (z * theta.sin()).cos();
    }
    acc / m as f64
}

// --- spec-facing free functions -------------------------------------------

pub type Vec2 = [f64; 2];

#[inline]
pub fn norm2(p: Vec2) -> f64 {
    p[0].hypot(p[1])
}

/// Fourier transform of U at momentum `p`.
pub fn u_hat(spec: &BumpSpec, p: Vec2) -> Result<f64> {
    let b = Bump::new(spec)?;
    Ok(b.u_hat_radial(norm2(p)))
}

/// Fourier transform of V = U*U at momentum `p`.
pub fn v_hat(spec: &BumpSpec, p: Vec2) -> Result<f64> {
    let b = Bump::new(spec)?;
    Ok(b.v_hat_radial(norm2(p)))
}

/// V in real space at position `x`.
pub fn v_real(spec: &BumpSpec, x: Vec2) -> Result<f64> {
    let b = Bump::new(spec)?;
    b.v_real_radial(norm2(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn gaussian_table(sigma: f64, n: usize, r_max: f64) -> BumpSpec {
        let radii: Vec<f64> = (0..n).map(|i| r_max * i as f64 / (n - 1) as f64).collect();
        let values: Vec<f64> = radii.iter().map(|&r| (-0.5 * sigma * sigma * r * r).exp()).collect();
        BumpSpec::tabulated(sigma, radii, values)
    }

    #[test]
    fn u_hat_normalization_and_closed_form() {
        let g = BumpSpec::gaussian(1.0);
        assert_relative_eq!(u_hat(&g, [0.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(u_hat(&g, [1.0, 0.0]).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(u_hat(&g, [0.6, 0.8]).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn tabulated_matches_closed_form() {
        let spec = gaussian_table(1.0, 64, 6.0);
        let b = Bump::new(&spec).unwrap();
        let exact = (-0.5f64 * 0.25).exp();
        assert!((b.u_hat_radial(0.5) - exact).abs() < 1e-6);
        // beyond the table the profile is treated as fully decayed
        assert_eq!(b.u_hat_radial(7.0), 0.0);
    }

    #[test]
    fn v_hat_is_square_of_u_hat_for_every_kind() {
        let specs = [BumpSpec::gaussian(1.0), gaussian_table(1.0, 64, 6.0)];
        for spec in &specs {
            let b = Bump::new(spec).unwrap();
            for i in 0..50 {
                let r = 0.13 * i as f64;
                let u = b.u_hat_radial(r);
                assert_eq!(b.v_hat_radial(r), u * u);
                assert!(b.v_hat_radial(r) >= 0.0);
            }
        }
        let g = BumpSpec::gaussian(1.0);
        assert_relative_eq!(v_hat(&g, [0.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(v_hat(&g, [1.0, 0.0]).unwrap(), (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn v_real_closed_form_and_hankel_oracle() {
        let g = BumpSpec::gaussian(1.0);
        assert_relative_eq!(v_real(&g, [0.0, 0.0]).unwrap(), 1.0 / (4.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(
            v_real(&g, [2.0, 0.0]).unwrap(),
            (-1.0f64).exp() / (4.0 * PI),
            max_relative = 1e-14
        );
        // Hankel-transform quadrature oracle against the closed form at |x| = 1.
        let b = Bump::new(&g).unwrap();
        let oracle = hankel_inverse(|q| b.v_hat_radial(q), 12.0, 1.0).unwrap();
        assert!((oracle - b.v_real_radial(1.0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn parseval_total_mass() {
        // integral of V over the plane equals v_hat(0) = 1.
        let b = Bump::new(&BumpSpec::gaussian(1.0)).unwrap();
        let total = crate::quad::integrate(
            |r: f64| 2.0 * PI * r * b.v_real_radial(r).unwrap(),
            0.0,
            40.0,
            1e-12,
        )
        .unwrap();
        assert!((total.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn monotone_decay_gaussian() {
        let b = Bump::new(&BumpSpec::gaussian(1.3)).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..500 {
            let v = b.u_hat_radial(0.02 * i as f64);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(u_hat(&BumpSpec::gaussian(0.0), [0.0, 0.0]).is_err());
        assert!(u_hat(&BumpSpec::gaussian(-1.0), [0.0, 0.0]).is_err());
        let empty = BumpSpec { kind: BumpKind::TabulatedRadial, sigma: 1.0, table: None };
        assert!(u_hat(&empty, [0.0, 0.0]).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn v_hat_is_square_and_bounded(sigma in 0.2f64..3.0, px in -8.0f64..8.0, py in -8.0f64..8.0) {
                let spec = BumpSpec::gaussian(sigma);
                let u = u_hat(&spec, [px, py]).unwrap();
                let v = v_hat(&spec, [px, py]).unwrap();
                prop_assert_eq!(v, u * u);
                prop_assert!((0.0..=1.0).contains(&u));
            }
        }
    }

    #[test]
    fn bessel_j0_reference_values() {
        // Abramowitz & Stegun 9.4
        assert_relative_eq!(bessel_j0(0.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(bessel_j0(1.0), 0.7651976865579666, epsilon = 1e-12);
        assert_relative_eq!(bessel_j0(5.0), -0.17759677131433830, epsilon = 1e-12);
    }
}

//! One-dimensional interpolation kernels: monotone cubic (Fritsch-Carlson)
//! and a clamped cubic spline for tabulated radial profiles.

use crate::error::{Error, Result};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
///
/// Shape preserving: on intervals where the data are monotone the interpolant
/// is monotone as well, and it never overshoots the local data range.
#[derive(Debug, Clone)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::config("pchip needs at least two (x, y) pairs"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("pchip abscissae must be strictly increasing"));
        }
        let slopes = fritsch_carlson_slopes(&xs, &ys);
        Ok(Pchip { xs, ys, slopes })
    }

    /// Evaluate at `x`. Outside the table the nearest endpoint value is used.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
}

fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            // Weighted harmonic mean keeps the interpolant monotone.
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // Limit endpoint slopes (Fritsch-Carlson boundary treatment).
    for (i, d) in [(0usize, 0usize), (n - 1, n - 2)] {
        if m[i] * delta[d] <= 0.0 {
            m[i] = 0.0;
        } else if delta[d].abs() > 0.0 && (m[i] / delta[d]).abs() > 3.0 {
            m[i] = 3.0 * delta[d];
        }
    }
    m
}

/// Clamped cubic spline with prescribed endpoint derivatives.
///
/// Used for tabulated radial kernels where the profile is smooth and the
/// endpoint slopes are known (zero for an even radial function at r = 0,
/// effectively zero at the decayed tail).
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // Second derivatives at the knots.
    ypp: Vec<f64>,
}

impl CubicSpline {
    pub fn clamped(xs: Vec<f64>, ys: Vec<f64>, d0: f64, d1: f64) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() || n < 3 {
            return Err(Error::config("spline needs at least three (x, y) pairs"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("spline abscissae must be strictly increasing"));
        }
        // Tridiagonal system for the second derivatives.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();

        b[0] = 2.0 * h[0];
        c[0] = h[0];
        d[0] = 6.0 * ((ys[1] - ys[0]) / h[0] - d0);
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = 2.0 * (h[i - 1] + h[i]);
            c[i] = h[i];
            d[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        a[n - 1] = h[n - 2];
        b[n - 1] = 2.0 * h[n - 2];
        d[n - 1] = 6.0 * (d1 - (ys[n - 1] - ys[n - 2]) / h[n - 2]);

        // Thomas algorithm.
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut ypp = vec![0.0; n];
        ypp[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            ypp[i] = (d[i] - c[i] * ypp[i + 1]) / b[i];
        }
        Ok(CubicSpline { xs, ys, ypp })
    }

    /// Evaluate at `x`; clamps to the endpoint values outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.partition_point(|&t| t <= x) {
            0 => 0,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let u = (self.xs[i + 1] - x) / h;
        let v = (x - self.xs[i]) / h;
        u * self.ys[i]
            + v * self.ys[i + 1]
            + ((u * u * u - u) * self.ypp[i] + (v * v * v - v) * self.ypp[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pchip_reproduces_nodes_and_is_monotone() {
        let xs: Vec<f64> = (0..20).map(|i| 0.1 * f64::from(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (-x).exp()).collect();
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_relative_eq!(p.eval(*x), *y, max_relative = 1e-14);
        }
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let v = p.eval(1.9 * f64::from(i) / 399.0);
            assert!(v <= prev + 1e-14);
            prev = v;
        }
    }

    #[test]
    fn spline_accuracy_on_smooth_profile() {
        let n = 64;
        let xs: Vec<f64> = (0..n).map(|i| 6.0 * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (-0.5 * x * x).exp()).collect();
        let s = CubicSpline::clamped(xs, ys, 0.0, 0.0).unwrap();
        for i in 0..200 {
            let x = 5.9 * i as f64 / 199.0;
            let exact = (-0.5 * x * x).exp();
            assert!((s.eval(x) - exact).abs() < 1e-6, "x={x}");
        }
    }
}

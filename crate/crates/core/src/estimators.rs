//! Observables derived from ensemble statistics: the diffusion coefficient
//! `D(t) = E|X(t)|^2 / t`, the Laplace-transformed diffusivity
//! `D(lambda) = integral exp(-lambda t) E|X(t)|^2 dt`, and log-scaling fits.
//!
//! Everything here stays on the Laplace side; converting the small-lambda
//! behaviour back to a pointwise-in-time statement is a Tauberian step that
//! is deliberately not claimed.

use crate::error::{Error, Result};
use crate::interp::Pchip;
use serde::{Deserialize, Serialize};

/// A sampled nonnegative curve over strictly increasing times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsdCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub provenance: serde_json::Value,
}

impl MsdCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>, stderrs: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() != stderrs.len() || times.is_empty() {
            return Err(Error::config("curve arrays must be non-empty and equal length"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("curve times must be strictly increasing"));
        }
        if times[0] <= 0.0 {
            return Err(Error::config("curve times must be positive"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::config("curve values must be finite and nonnegative"));
        }
        Ok(MsdCurve { times, values, stderrs, provenance: serde_json::Value::Null })
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Parse a curve from CSV columns (by header name).
    pub fn from_csv(text: &str, time_col: &str, value_col: &str, err_col: Option<&str>) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::config("empty CSV"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let find = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::config(format!("CSV misses column '{name}'")))
        };
        let ti = find(time_col)?;
        let vi = find(value_col)?;
        let ei = err_col.map(find).transpose()?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut errs = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            let get = |i: usize| -> Result<f64> {
                parts
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::config(format!("bad CSV number at line {}", ln + 2)))
            };
            times.push(get(ti)?);
            values.push(get(vi)?);
            errs.push(match ei {
                Some(i) => get(i)?,
                None => 0.0,
            });
        }
        MsdCurve::new(times, values, errs)
    }

    /// CSV with columns `t,value,stderr`.
    pub fn to_csv(&self, value_name: &str) -> String {
        let mut s = format!("t,{value_name},stderr\n");
        for i in 0..self.times.len() {
            s.push_str(&format!("{},{},{}\n", self.times[i], self.values[i], self.stderrs[i]));
        }
        s
    }
}

/// Pointwise division by `t` with error propagation.
pub fn diffusion_coefficient(curve: &MsdCurve) -> Result<MsdCurve> {
    if curve.times.iter().any(|&t| t <= 0.0) {
        return Err(Error::config("diffusion coefficient needs t > 0 everywhere"));
    }
    let values = curve.times.iter().zip(&curve.values).map(|(t, v)| v / t).collect();
    let stderrs = curve.times.iter().zip(&curve.stderrs).map(|(t, s)| s / t).collect();
    let mut out = MsdCurve::new(curve.times.clone(), values, stderrs)?;
    out.provenance = curve.provenance.clone();
    Ok(out)
}

/// A Laplace-transform evaluation with separated error budgets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    pub value: f64,
    /// Bound on the quadrature/interpolation error over the sampled window.
    pub quad_error: f64,
    /// Bound on the truncated tail beyond the curve horizon.
    pub trunc_error: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LaplaceOptions {
    /// Extend the curve beyond its horizon by a fitted power law instead of
    /// refusing when `lambda * horizon < 20`.
    pub allow_tail_extrapolation: bool,
}

const LAMBDA_T_MIN: f64 = 20.0;

/// `integral_0^inf exp(-lambda t) f(t) dt` for a sampled curve.
///
/// The curve is interpolated piecewise-linearly (so the estimate is a linear
/// functional of the samples) and each segment is integrated against the
/// exponential weight in closed form. Below the first sample the curve is
/// extended linearly from the origin. The reported quadrature bound comes
/// from re-integrating with a monotone cubic interpolant; the truncation
/// bound is `exp(-lambda T) f(T) (1/lambda + T)`.
pub fn laplace_transform(
    curve: &MsdCurve,
    lambda: f64,
    opts: LaplaceOptions,
) -> Result<LaplaceEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::domain("laplace transform needs lambda > 0"));
    }
    let t_max = curve.horizon();
    if lambda * t_max < LAMBDA_T_MIN && !opts.allow_tail_extrapolation {
        return Err(Error::Domain(format!(
            "truncation-dominated: lambda * T = {:.3} < {LAMBDA_T_MIN}; extend the horizon or \
             enable tail extrapolation",
            lambda * t_max
        )));
    }

    // [0, t0]: linear from the origin through the first sample.
    let (t0, y0) = (curve.times[0], curve.values[0]);
    let head_slope = y0 / t0;
    let head = head_slope * (1.0 - (-lambda * t0).exp() * (1.0 + lambda * t0)) / (lambda * lambda);

    // sampled window, piecewise linear, exact against the weight
    let mut body = 0.0;
    for i in 0..curve.times.len() - 1 {
        body += segment_exp_integral(
            curve.times[i],
            curve.values[i],
            curve.times[i + 1],
            curve.values[i + 1],
            lambda,
        );
    }

    // quadrature bound: disagreement with a shape-preserving cubic through
    // the same samples, panelwise
    let pch = Pchip::new(curve.times.clone(), curve.values.clone())?;
    let mut quad_err = 0.0;
    for i in 0..curve.times.len() - 1 {
        let (ta, tb) = (curve.times[i], curve.times[i + 1]);
        let (ya, yb) = (curve.values[i], curve.values[i + 1]);
        let m = (yb - ya) / (tb - ta);
        let (dv, _) = crate::quad::gk15(
            &mut |t: f64| (pch.eval(t) - (ya + m * (t - ta))) * (-lambda * t).exp(),
            ta,
            tb,
        );
        quad_err += dv.abs();
    }
    quad_err = 4.0 * quad_err + 0.5 * head;

    let y_t = *curve.values.last().unwrap();
    let mut trunc_err = (-lambda * t_max).exp() * y_t * (1.0 / lambda + t_max);
    let mut tail = 0.0;
    if lambda * t_max < LAMBDA_T_MIN && opts.allow_tail_extrapolation {
        // fit f ~ a t^b over the last decade and integrate the extension
        let lo = t_max / 10.0;
        let pts: Vec<(f64, f64)> = curve
            .times
            .iter()
            .zip(&curve.values)
            .filter(|(t, v)| **t >= lo && **v > 0.0)
            .map(|(t, v)| (t.ln(), v.ln()))
            .collect();
        if pts.len() >= 3 {
            let (slope, intercept) = least_squares(&pts);
            let (a, b) = (intercept.exp(), slope);
            let t_end = (LAMBDA_T_MIN * 2.0) / lambda;
            tail = crate::quad::integrate(
                |t: f64| a * t.powf(b) * (-lambda * t).exp(),
                t_max,
                t_end,
                1e-10,
            )?
            .value;
            // extrapolation is a model, not data: budget it as truncation
            trunc_err = tail + (-lambda * t_end).exp() * a * t_end.powf(b) * (1.0 / lambda + t_end);
        }
    }

    Ok(LaplaceEstimate { lambda, value: head + body + tail, quad_error: quad_err, trunc_error: trunc_err })
}

/// Same estimator applied to the drift-part variance curve `E[F_1(t)^2]`.
pub fn drift_part_transform(
    f1_var_curve: &MsdCurve,
    lambda: f64,
    opts: LaplaceOptions,
) -> Result<LaplaceEstimate> {
    laplace_transform(f1_var_curve, lambda, opts)
}

/// Exact integral of the linear interpolant between two samples against
/// `exp(-lambda t)`.
fn segment_exp_integral(ta: f64, ya: f64, tb: f64, yb: f64, lambda: f64) -> f64 {
    let m = (yb - ya) / (tb - ta);
    let anti = |t: f64, y: f64| (-lambda * t).exp() * (y / lambda + m / (lambda * lambda));
    anti(ta, ya) - anti(tb, yb)
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// Result of fitting `D(t) = a (log t)^zeta` on a window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SqrtLogFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub exponent_stderr: f64,
    /// R^2 of the regression of log D on log log t.
    pub quality: f64,
}

/// Least squares of `log D(t)` against `log log t` over `[window.0, window.1]`.
///
/// The window must contain at least 8 points spanning at least a decade,
/// with `t > 1` so the double logarithm is defined.
pub fn sqrtlog_fit(d_curve: &MsdCurve, window: (f64, f64)) -> Result<SqrtLogFit> {
    let pts: Vec<(f64, f64)> = d_curve
        .times
        .iter()
        .zip(&d_curve.values)
        .filter(|(t, v)| **t >= window.0 && **t <= window.1 && **t > 1.0 && **v > 0.0)
        .map(|(t, v)| (t.ln().ln(), v.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(Error::Fit(format!("fit window holds {} points, need >= 8", pts.len())));
    }
    let t_lo = d_curve.times.iter().copied().find(|&t| t >= window.0.max(1.0 + 1e-12));
    let t_hi = d_curve.times.iter().copied().rev().find(|&t| t <= window.1);
    match (t_lo, t_hi) {
        (Some(lo), Some(hi)) if hi / lo >= 10.0 => {}
        _ => return Err(Error::Fit("fit window must span at least one decade".into())),
    }
    let (slope, intercept) = least_squares(&pts);
    let n = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ss_x: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let sigma2 = if n > 2.0 { ss_res / (n - 2.0) } else { 0.0 };
    Ok(SqrtLogFit {
        amplitude: intercept.exp(),
        exponent: slope,
        exponent_stderr: (sigma2 / ss_x).sqrt(),
        quality: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    })
}

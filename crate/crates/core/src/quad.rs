//! Adaptive one-dimensional quadrature (Gauss-Kronrod 7/15) plus small grid
//! helpers used throughout the numerics.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// QUADPACK G7K15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7/15 panel: returns (integral, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut fsum = [0.0f64; 8];
    fsum[7] = fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        let s = f1 + f2;
        fsum[j] = s;
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let resk = resk * h;
    let resg = resg * h;
    // QUADPACK error heuristic: scale the raw Gauss/Kronrod difference by the
    // oscillation of the integrand on the panel.
    let mean = resk / (b - a);
    let mut resasc = WGK[7] * (fsum[7] - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * (fsum[j] - 2.0 * mean).abs();
    }
    let resasc = resasc * h.abs();
    let raw = (resk - resg).abs();
    let err = if resasc > 0.0 && raw > 0.0 {
        resasc * (1.0f64).min((200.0 * raw / resasc).powf(1.5))
    } else {
        raw
    };
    (resk, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// `seeds` may list interior break points (peak locations, kinks); the
/// initial partition is split there. Stops when the summed error estimate is
/// below `abs_tol + rel_tol * |value|` or errors with a worst-cell report
/// once `max_panels` is exhausted.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    seeds: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::Quadrature(format!("bad interval [{a}, {b}]")));
    }
    let mut cuts: Vec<f64> = vec![a];
    cuts.extend(seeds.iter().copied().filter(|x| *x > a && *x < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut toterr = 0.0;
    for w in cuts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        toterr += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }

    while toterr > abs_tol + rel_tol * total.abs() {
        if heap.len() >= max_panels {
            let worst = heap.peek().copied();
            return Err(Error::Quadrature(format!(
                "no convergence after {} panels (err {:.3e} > tol); worst cell [{:.6e}, {:.6e}] err {:.3e}",
                heap.len(),
                toterr,
                worst.map_or(f64::NAN, |p| p.a),
                worst.map_or(f64::NAN, |p| p.b),
                worst.map_or(f64::NAN, |p| p.err),
            )));
        }
        let p = heap.pop().expect("heap non-empty while error above tolerance");
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            // Panel collapsed to machine width; accept its estimate as is.
            total += 0.0;
            heap.push(Panel { err: 0.0, ..p });
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        toterr += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
        // Recompute the error sum occasionally to shed accumulated rounding.
        if heap.len() % 64 == 0 {
            toterr = heap.iter().map(|p| p.err).sum();
        }
    }
    Ok(QuadResult { value: total, error: toterr, panels: heap.len() })
}

/// Convenience wrapper with no seed points.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadResult> {
    adaptive(f, a, b, &[], rel_tol, f64::MIN_POSITIVE, 4000)
}

/// Strictly increasing log-spaced grid from `a` to `b` with about
/// `per_decade` points per decade (endpoints always included).
pub fn log_spaced(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && per_decade > 0);
    let decades = (b / a).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    let mut out: Vec<f64> = (0..=n)
        .map(|i| a * (b / a).powf(i as f64 / n as f64))
        .collect();
    *out.last_mut().unwrap() = b;
    out[0] = a;
    out.dedup();
    out
}

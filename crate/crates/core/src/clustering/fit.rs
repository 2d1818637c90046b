use serde::{Deserialize, Serialize};

use super::CorrelationSample;
use crate::error::{Error, Result};

/// Samples with `|value|` below this are counted but not fitted.
pub const NUMERIC_FLOOR: f64 = 1e-12;

/// Raises `c` by ulps until `ok(c)` holds for every sample.
fn inflate_until<F: Fn(f64) -> bool>(mut c: f64, ok: F) -> f64 {
    for _ in 0..64 {
        if ok(c) {
            break;
        }
        c *= 1.0 + 2.0 * f64::EPSILON;
    }
    c
}

/// Certified envelope `|value| <= min(|X|,|Y|) C e^{-lambda r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFit {
    pub c: f64,
    pub lambda: f64,
    /// RMS of the log-space residuals of the least-squares line.
    pub residual: f64,
    pub n_samples: usize,
    pub n_floored: usize,
    pub floor: f64,
}

impl ClusteringFit {
    pub fn envelope(&self, size: usize, r: f64) -> f64 {
        size as f64 * self.c * (-self.lambda * r).exp()
    }

    pub fn dominates(&self, s: &CorrelationSample) -> bool {
        s.value.abs() <= self.envelope(s.min_size(), s.r)
    }
}

/// Log-linear least squares on `(r, ln(|value| / min(|X|,|Y|)))` over samples
/// above `floor`, then `C` is raised until every sample, floored or not, is
/// dominated.
pub fn fit_clustering(samples: &[CorrelationSample], floor: f64) -> Result<ClusteringFit> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no samples".into()));
    }
    let fitted: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.value.abs() > floor)
        .map(|s| (s.r, (s.value.abs() / s.min_size() as f64).ln()))
        .collect();
    let n_floored = samples.len() - fitted.len();
    if fitted.is_empty() {
        return Err(Error::AllSamplesFloored);
    }
    let r_min = fitted.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let r_max = fitted.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if fitted.len() < 2 || r_max == r_min {
        return Err(Error::InsufficientSamples(format!(
            "need samples above {floor:e} at two or more distances"
        )));
    }
    let n = fitted.len() as f64;
    let mean_r = fitted.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = fitted.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = fitted.iter().map(|(r, y)| (r - mean_r) * (y - mean_y)).sum();
    let sxx: f64 = fitted.iter().map(|(r, _)| (r - mean_r).powi(2)).sum();
    let lambda = (-sxy / sxx).max(0.0);
    // Intercept for the (possibly clamped) slope.
    let log_c = mean_y + lambda * mean_r;
    let residual = (fitted
        .iter()
        .map(|(r, y)| (y - (log_c - lambda * r)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let needed = fitted
        .iter()
        .map(|(r, y)| (y + lambda * r).exp())
        .fold(log_c.exp(), f64::max);
    let mut fit = ClusteringFit {
        c: needed,
        lambda,
        residual,
        n_samples: fitted.len(),
        n_floored,
        floor,
    };
    // Floored samples stay out of the regression but must still be dominated.
    fit.c = samples
        .iter()
        .map(|s| s.value.abs() / fit.envelope(s.min_size(), s.r) * fit.c)
        .fold(fit.c, f64::max);
    fit.c = inflate_until(fit.c, |c| {
        let trial = ClusteringFit { c, ..fit };
        samples.iter().all(|s| trial.dominates(s))
    });
    Ok(fit)
}

/// Grid and refinement settings for [`fit_propagation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationFitOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Log-spaced points on the lambda axis.
    pub lambda_points: usize,
    pub v_min: f64,
    pub v_max: f64,
    /// Linearly spaced points on the velocity axis.
    pub v_points: usize,
    /// Zoomed grid passes around the incumbent before coordinate descent.
    pub refine_rounds: usize,
    pub max_sweeps: usize,
    pub floor: f64,
}

impl Default for PropagationFitOptions {
    fn default() -> Self {
        Self {
            lambda_min: 0.05,
            lambda_max: 5.0,
            lambda_points: 40,
            v_min: 0.05,
            v_max: 10.0,
            v_points: 40,
            refine_rounds: 3,
            max_sweeps: 500,
            floor: NUMERIC_FLOOR,
        }
    }
}

/// Certified envelope `|value| <= |X||Y| C (e^{lambda v t} - 1) e^{-lambda r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationFit {
    pub c: f64,
    pub lambda: f64,
    pub v: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub n_samples: usize,
    pub n_floored: usize,
    pub options: PropagationFitOptions,
}

impl PropagationFit {
    pub fn envelope(&self, size_x: usize, size_y: usize, t: f64, r: f64) -> f64 {
        (size_x * size_y) as f64 * self.c * (self.lambda * self.v * t).exp_m1() * (-self.lambda * r).exp()
    }

    pub fn dominates(&self, s: &CorrelationSample) -> bool {
        s.value.abs() <= self.envelope(s.size_x(), s.size_y(), s.t, s.r)
    }
}

struct LogData {
    t: Vec<f64>,
    r: Vec<f64>,
    y: Vec<f64>,
}

impl LogData {
    /// Best `ln C` and the sum of squared residuals at `(lambda, a = lambda v)`.
    fn evaluate(&self, lambda: f64, a: f64) -> (f64, f64) {
        let n = self.y.len() as f64;
        let shifted: Vec<f64> = self
            .y
            .iter()
            .zip(&self.t)
            .zip(&self.r)
            .map(|((y, t), r)| y - (a * t).exp_m1().ln() + lambda * r)
            .collect();
        let log_c = shifted.iter().sum::<f64>() / n;
        let sse = shifted.iter().map(|s| (s - log_c).powi(2)).sum();
        (log_c, sse)
    }

    fn sse(&self, lambda: f64, a: f64) -> f64 {
        let v = self.evaluate(lambda, a).1;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn lin_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
fn golden<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Fits `C (e^{lambda v t} - 1) e^{-lambda r}` to `|value| / (|X||Y|)` in log
/// space: coarse `(lambda, v)` grid, zoomed grid rounds, then coordinate
/// descent over `(ln lambda, ln(lambda v))`. `C` is inflated for dominance.
pub fn fit_propagation(samples: &[CorrelationSample], opts: &PropagationFitOptions) -> Result<PropagationFit> {
    for s in samples.iter().filter(|s| s.t == 0.0) {
        if s.value.abs() > opts.floor {
            return Err(Error::NonProductStart { value: s.value });
        }
    }
    let dynamic: Vec<&CorrelationSample> = samples.iter().filter(|s| s.t > 0.0).collect();
    let fitted: Vec<&CorrelationSample> = dynamic.iter().copied().filter(|s| s.value.abs() > opts.floor).collect();
    let n_floored = dynamic.len() - fitted.len();
    if !dynamic.is_empty() && fitted.is_empty() {
        return Err(Error::AllSamplesFloored);
    }
    let distinct = |xs: Vec<f64>| {
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if distinct(fitted.iter().map(|s| s.t).collect()) < 2 || distinct(fitted.iter().map(|s| s.r).collect()) < 2 {
        return Err(Error::InsufficientSamples(
            "need fitted samples at two or more times and two or more distances".into(),
        ));
    }
    let data = LogData {
        t: fitted.iter().map(|s| s.t).collect(),
        r: fitted.iter().map(|s| s.r).collect(),
        y: fitted
            .iter()
            .map(|s| (s.value.abs() / (s.size_x() * s.size_y()) as f64).ln())
            .collect(),
    };

    let lambdas = log_grid(opts.lambda_min, opts.lambda_max, opts.lambda_points);
    let vs = lin_grid(opts.v_min, opts.v_max, opts.v_points);
    let mut best = (f64::INFINITY, lambdas[0], vs[0]);
    for &l in &lambdas {
        for &v in &vs {
            let e = data.sse(l, l * v);
            if e < best.0 {
                best = (e, l, v);
            }
        }
    }

    let mut l_half = if opts.lambda_points > 1 {
        (opts.lambda_max / opts.lambda_min).ln() / (opts.lambda_points - 1) as f64
    } else {
        1.0
    };
    let mut v_half = if opts.v_points > 1 {
        (opts.v_max - opts.v_min) / (opts.v_points - 1) as f64
    } else {
        1.0
    };
    for _ in 0..opts.refine_rounds {
        let (_, l0, v0) = best;
        let ls = log_grid(l0 * (-l_half).exp(), l0 * l_half.exp(), opts.lambda_points.max(3));
        let vlo = (v0 - v_half).max(v0 * 1e-3);
        let vs = lin_grid(vlo, v0 + v_half, opts.v_points.max(3));
        for &l in &ls {
            for &v in &vs {
                let e = data.sse(l, l * v);
                if e < best.0 {
                    best = (e, l, v);
                }
            }
        }
        l_half *= 2.0 / opts.lambda_points.max(3) as f64;
        v_half *= 2.0 / opts.v_points.max(3) as f64;
    }

    let (mut sse, l0, v0) = best;
    let mut x = [l0.ln(), (l0 * v0).ln()];
    let mut width = [l_half.max(1e-3), (v_half / v0).max(1e-3)];
    let objective = |p: &[f64; 2]| data.sse(p[0].exp(), p[1].exp());
    for _ in 0..opts.max_sweeps {
        let before = x;
        for k in 0..2 {
            let mut w = width[k];
            loop {
                let f = |z: f64| {
                    let mut p = x;
                    p[k] = z;
                    objective(&p)
                };
                let z = golden(f, x[k] - w, x[k] + w);
                let at_edge = (z - (x[k] - w)).abs() < 1e-3 * w || (z - (x[k] + w)).abs() < 1e-3 * w;
                let mut p = x;
                p[k] = z;
                let e = objective(&p);
                if e <= sse {
                    x = p;
                    sse = e;
                }
                if at_edge && w < 50.0 {
                    w *= 4.0;
                    continue;
                }
                break;
            }
            width[k] = ((x[k] - before[k]).abs() * 4.0).clamp(1e-8, 1.0);
        }
        if (x[0] - before[0]).abs() < 1e-14 && (x[1] - before[1]).abs() < 1e-14 {
            break;
        }
    }

    let lambda = x[0].exp();
    let v = x[1].exp() / lambda;
    let (log_c, sse) = data.evaluate(lambda, lambda * v);
    let mut fit = PropagationFit {
        c: log_c.exp(),
        lambda,
        v,
        residual: (sse / data.y.len() as f64).sqrt(),
        n_samples: fitted.len(),
        n_floored,
        options: *opts,
    };
    let needed = dynamic.iter().fold(fit.c, |acc, s| {
        let unit = PropagationFit { c: 1.0, ..fit };
        acc.max(s.value.abs() / unit.envelope(s.size_x(), s.size_y(), s.t, s.r))
    });
    fit.c = inflate_until(needed, |c| {
        let trial = PropagationFit { c, ..fit };
        dynamic.iter().all(|s| trial.dominates(s))
    });
    Ok(fit)
}

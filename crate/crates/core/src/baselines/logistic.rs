//! Univariate logistic regression fitted by iteratively reweighted least
//! squares, with a Wald test on the slope.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
/// Cap on the slope of the standardized predictor under separation.
const BETA_CAP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub alpha: f64,
    pub beta: f64,
    pub p_value: f64,
    pub converged: bool,
}

impl LogisticModel {
    pub fn predict(&self, x: f64) -> f64 {
        sigmoid(self.alpha + self.beta * x)
    }

    /// Value where the predicted probability equals `p`.
    pub fn inverse(&self, p: f64) -> f64 {
        ((p / (1.0 - p)).ln() - self.alpha) / self.beta
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn log_likelihood(a: f64, b: f64, z: &[f64], y: &[bool]) -> f64 {
    z.iter()
        .zip(y)
        .map(|(&zi, &yi)| {
            let t = a + b * zi;
            // log σ(t) and log(1 − σ(t)) without overflow
            let log1pexp = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
            if yi {
                t - log1pexp
            } else {
                -log1pexp
            }
        })
        .sum()
}

/// Gradient and Fisher information of the log-likelihood at `(a, b)`.
fn derivatives(a: f64, b: f64, z: &[f64], y: &[bool]) -> ([f64; 2], [f64; 3]) {
    let mut g = [0.0; 2];
    let mut h = [0.0; 3];
    for (&zi, &yi) in z.iter().zip(y) {
        let p = sigmoid(a + b * zi);
        let r = f64::from(u8::from(yi)) - p;
        let w = p * (1.0 - p);
        g[0] += r;
        g[1] += r * zi;
        h[0] += w;
        h[1] += w * zi;
        h[2] += w * zi * zi;
    }
    (g, h)
}

pub fn fit_logistic(values: &[f64], labels: &[bool]) -> Result<LogisticModel> {
    if values.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} values but {} labels",
            values.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if values.len() < 2 || positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass("logistic fit"));
    }
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
    let rate = positives as f64 / n;
    if sd == 0.0 {
        return Ok(LogisticModel {
            alpha: (rate / (1.0 - rate)).ln(),
            beta: 0.0,
            p_value: 1.0,
            converged: true,
        });
    }
    let z: Vec<f64> = values.iter().map(|v| (v - mu) / sd).collect();

    let (mut a, mut b) = ((rate / (1.0 - rate)).ln(), 0.0);
    let mut converged = false;
    let mut ll = log_likelihood(a, b, &z, labels);
    for _ in 0..MAX_ITER {
        let (g, h) = derivatives(a, b, &z, labels);
        if g[0].abs().max(g[1].abs()) < GRAD_TOL {
            converged = true;
            break;
        }
        let det = h[0] * h[2] - h[1] * h[1];
        if det <= 0.0 || !det.is_finite() {
            break;
        }
        let da = (h[2] * g[0] - h[1] * g[1]) / det;
        let db = (h[0] * g[1] - h[1] * g[0]) / det;
        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let nll = log_likelihood(na, nb, &z, labels);
            if nll >= ll - 1e-12 || step < 1e-6 {
                a = na;
                b = nb;
                ll = nll;
                break;
            }
            step *= 0.5;
        }
        if b.abs() > BETA_CAP {
            b = BETA_CAP.copysign(b);
            break;
        }
    }

    let (_, h) = derivatives(a, b, &z, labels);
    let det = h[0] * h[2] - h[1] * h[1];
    let var_b = h[0] / det;
    let p_value = if det > 0.0 && var_b.is_finite() && var_b > 0.0 {
        let wald = b / var_b.sqrt();
        erfc(wald.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LogisticModel {
        alpha: a - b * mu / sd,
        beta: b / sd,
        p_value,
        converged,
    })
}

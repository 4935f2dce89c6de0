//! Binomial estimates and the few regression helpers the experiments need.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub successes: u64,
    pub n: u64,
    pub p_hat: f64,
    /// `sqrt(p̂(1 − p̂)/n)`.
    pub se: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, n: u64) -> Self {
        let p_hat = if n == 0 {
            0.0
        } else {
            successes as f64 / n as f64
        };
        let se = if n == 0 {
            0.0
        } else {
            (p_hat * (1.0 - p_hat) / n as f64).sqrt()
        };
        Estimate {
            successes,
            n,
            p_hat,
            se,
        }
    }

    pub fn from_indicators(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut s, mut n) = (0u64, 0u64);
        for f in flags {
            n += 1;
            s += u64::from(f);
        }
        Self::from_counts(s, n)
    }

    /// Standardised distance to a reference probability, using the binomial
    /// standard error under the reference. `None` when the reference is 0 or
    /// 1, in which case agreement means exact equality.
    pub fn z_score(&self, truth: f64) -> Option<f64> {
        let var = truth * (1.0 - truth) / self.n as f64;
        (var > 0.0).then(|| (self.p_hat - truth) / var.sqrt())
    }

    /// Agreement with `truth` within `k` standard errors.
    pub fn agrees_with(&self, truth: f64, k: f64) -> bool {
        match self.z_score(truth) {
            Some(z) => z.abs() <= k,
            None => (self.p_hat - truth).abs() < 1e-15,
        }
    }
}

/// Ordinary least squares fit `y ≈ intercept + slope · x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

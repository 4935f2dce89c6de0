//! Closed-form constants and the combinatorial bounds behind the triggering
//! estimate `P*(N) ≤ c7·N²·c6^N`.
//!
//! Everything that can overflow or underflow is evaluated in log space.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Number of `n` values scanned when calibrating `c5`.
pub const C5_CALIBRATION_RANGE: u64 = 100_000;

/// Decay rate of the influence-set radius: `−(1/8d)·ln((2d−1)/2d)`.
pub fn psi(d: usize) -> f64 {
    let d = d as f64;
    -((2.0 * d - 1.0) / (2.0 * d)).ln() / (8.0 * d)
}

/// `[4d(1+d)]^{2d}`, the bound on the expected influence-set size.
pub fn c1(d: usize) -> f64 {
    let d = d as f64;
    (4.0 * d * (1.0 + d)).powf(2.0 * d)
}

/// `16d⁴·c1/(2d−1)`; the value the radius-tail argument actually delivers.
/// Not sharp.
pub fn c2(d: usize) -> f64 {
    let df = d as f64;
    16.0 * df.powi(4) * c1(d) / (2.0 * df - 1.0)
}

/// Decoupling constant, `2·c2`.
pub fn c3(d: usize) -> f64 {
    2.0 * c2(d)
}

/// `(439/18144)^{1/4}`.
pub fn nu() -> f64 {
    (439.0f64 / 18144.0).powf(0.25)
}

/// `9ν²/2`.
pub fn s() -> f64 {
    4.5 * nu() * nu()
}

/// `½ + √(s + ¼)`, the n-th-root limit of `C(n−r*−1, r*−1)·s^{r*}`.
pub fn root_limit_target(s: f64) -> f64 {
    0.5 + (s + 0.25).sqrt()
}

/// `1/3 + (2/3)√(s+¼) + 0.001`.
pub fn c6() -> f64 {
    1.0 / 3.0 + 2.0 / 3.0 * (s() + 0.25).sqrt() + 0.001
}

/// `(8c5/(1−c6)²)·(1 + 7/c6 + 12/c6²)`.
pub fn c7(c5: f64, c6: f64) -> f64 {
    8.0 * c5 / (1.0 - c6).powi(2) * (1.0 + 7.0 / c6 + 12.0 / (c6 * c6))
}

/// `ln C(n, k)`; `−∞` outside `0 ≤ k ≤ n`.
pub fn ln_binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln f(r) = r·ln s + ln C(n−r−1, r−1)`.
pub fn ln_f(n: u64, r: u64, s: f64) -> f64 {
    r as f64 * s.ln() + ln_binomial(n as i64 - r as i64 - 1, r as i64 - 1)
}

/// `Π = (4s+1)·n·(n−2) + (2s+1)²`.
pub fn pi_term(n: u64, s: f64) -> f64 {
    let n = n as f64;
    (4.0 * s + 1.0) * n * (n - 2.0) + (2.0 * s + 1.0).powi(2)
}

/// Closed-form maximiser `⌈n/2 − (2s+1+√Π)/(8s+2)⌉`, unclamped.
pub fn r_star_closed_form(n: u64, s: f64) -> i64 {
    let x = n as f64 / 2.0 - (2.0 * s + 1.0 + pi_term(n, s).sqrt()) / (8.0 * s + 2.0);
    x.ceil() as i64
}

/// The closed-form `r*` clamped into the domain `1 ≤ r ≤ ⌊n/2⌋`.
pub fn r_star(n: u64, s: f64) -> u64 {
    r_star_closed_form(n, s).clamp(1, (n / 2).max(1) as i64) as u64
}

#[derive(Clone, Debug, Serialize)]
pub struct RStarReport {
    pub n: u64,
    /// `ln f(r)` for `r = 1..=⌊n/2⌋`.
    pub ln_f: Vec<f64>,
    pub argmax: u64,
    pub r_star: u64,
}

impl RStarReport {
    pub fn unimodal(&self) -> bool {
        let peak = (self.argmax - 1) as usize;
        self.ln_f[..=peak].windows(2).all(|w| w[0] <= w[1])
            && self.ln_f[peak..].windows(2).all(|w| w[0] >= w[1])
    }
}

/// Brute-force argmax of `f` next to the closed-form `r*`.
pub fn f_and_rstar(n: u64) -> Result<RStarReport> {
    f_and_rstar_with(n, s())
}

pub fn f_and_rstar_with(n: u64, s: f64) -> Result<RStarReport> {
    if n < 4 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as f64,
            lo: 4.0,
            hi: f64::INFINITY,
        });
    }
    let ln_f: Vec<f64> = (1..=n / 2).map(|r| ln_f(n, r, s)).collect();
    let argmax = ln_f
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
            if *v > best.1 {
                (i, *v)
            } else {
                best
            }
        })
        .0 as u64
        + 1;
    Ok(RStarReport {
        n,
        ln_f,
        argmax,
        r_star: r_star(n, s),
    })
}

/// `[C(n−r*−1, r*−1)·s^{r*}]^{1/n}`.
pub fn root_limit(n: u64) -> Result<f64> {
    root_limit_with(n, s())
}

pub fn root_limit_with(n: u64, s: f64) -> Result<f64> {
    if n < 10 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n as f64,
            lo: 10.0,
            hi: f64::INFINITY,
        });
    }
    if s <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "s must be positive, got {s}"
        )));
    }
    Ok((ln_f(n, r_star(n, s), s) / n as f64).exp())
}

/// Both sides of the entropy–energy rewrite:
/// `2^r·C(n−r−1,r−1)·(2/3)^{n−2r}·ν^{2r}` and `(2/3)^n·s^r·C(n−r−1,r−1)`, as logs.
pub fn entropy_energy_ln(n: u64, r: u64, nu: f64) -> (f64, f64) {
    let b = ln_binomial(n as i64 - r as i64 - 1, r as i64 - 1);
    let (n, r) = (n as f64, r as f64);
    let lhs = r * 2f64.ln() + b + (n - 2.0 * r) * (2.0f64 / 3.0).ln() + 2.0 * r * nu.ln();
    let s = 4.5 * nu * nu;
    let rhs = n * (2.0f64 / 3.0).ln() + r * s.ln() + b;
    (lhs, rhs)
}

/// `ln` of the ratio `(2/3)^n·C(n−r*−1, r*−1)·s^{r*} / c6^n` that `c5` must dominate.
pub fn ln_c5_ratio(n: u64, s: f64, c6: f64) -> f64 {
    let n_f = n as f64;
    n_f * (2.0f64 / 3.0).ln() + ln_f(n, r_star(n, s), s) - n_f * c6.ln()
}

/// Empirical `c5`: the supremum of the ratio over `2 ≤ n ≤ n_max`, times a
/// hair of slack so the inequality is strict. Not a proof of anything beyond
/// the scanned range.
pub fn calibrated_c5(n_max: u64) -> f64 {
    let (s, c6) = (s(), c6());
    let ln_sup = (2..=n_max)
        .map(|n| ln_c5_ratio(n, s, c6))
        .fold(f64::NEG_INFINITY, f64::max);
    ln_sup.exp() * (1.0 + 1e-9)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub d: usize,
    pub psi: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub nu: f64,
    pub s: f64,
    pub c6: f64,
    pub c5: f64,
    /// True when `c5` came from [`calibrated_c5`] rather than the caller.
    pub c5_calibrated: bool,
    pub c7: f64,
}

/// The full constant table; `c5 = None` calibrates it over
/// `n ≤` [`C5_CALIBRATION_RANGE`].
pub fn constants(d: usize, c5: Option<f64>) -> Result<ConstantsTable> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let (c5, c5_calibrated) = match c5 {
        Some(v) if v > 0.0 && v.is_finite() => (v, false),
        Some(v) => {
            return Err(Error::InvalidParameter(format!(
                "c5 must be positive, got {v}"
            )))
        }
        None => (calibrated_c5(C5_CALIBRATION_RANGE), true),
    };
    let c6 = c6();
    Ok(ConstantsTable {
        d,
        psi: psi(d),
        c1: c1(d),
        c2: c2(d),
        c3: c3(d),
        nu: nu(),
        s: s(),
        c6,
        c5,
        c5_calibrated,
        c7: c7(c5, c6),
    })
}

/// `Σ_{n≥N} n·c^n = c^N·(N(1−c)+c)/(1−c)²`.
pub fn tail_sum_closed(n0: u64, c: f64) -> f64 {
    let n = n0 as f64;
    c.powf(n) * (n * (1.0 - c) + c) / (1.0 - c).powi(2)
}

/// The same sum by direct accumulation until terms drop below `rel_tol` of the total.
pub fn tail_sum_direct(n0: u64, c: f64, rel_tol: f64) -> f64 {
    let mut total = 0.0;
    let mut n = n0;
    let mut term = n as f64 * c.powf(n as f64);
    loop {
        total += term;
        n += 1;
        term = n as f64 * c.powf(n as f64);
        if term < rel_tol * total && (n as f64) * (1.0 - c) > 1.0 {
            return total;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TriggeringBound {
    pub n: u64,
    /// `8N`, the union bound over starting points.
    pub prefactor: f64,
    /// Paths without sides of length one: `c5/(1−c6)²·N·c6^N`.
    pub no_unit_sides: f64,
    /// One side of length one: `7·c5/(1−c6)²·(N−1)·c6^{N−1}`.
    pub one_unit_side: f64,
    /// Two sides of length one: `12·c5/(1−c6)²·(N−2)·c6^{N−2}`.
    pub two_unit_sides: f64,
    /// `prefactor · (sum of the three pieces)`.
    pub assembled: f64,
    /// `ln(c7·N²·c6^N)`.
    pub ln_bound: f64,
    pub bound: f64,
}

/// `c7·N²·c6^N` together with the pieces it is assembled from.
pub fn triggering_bound(n: u64, table: &ConstantsTable) -> Result<TriggeringBound> {
    if n < 1 {
        return Err(Error::OutOfRange {
            what: "N",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let (c5, c6) = (table.c5, table.c6);
    let k = c5 / (1.0 - c6).powi(2);
    let nf = n as f64;
    let no_unit_sides = k * nf * c6.powf(nf);
    let one_unit_side = 7.0 * k * (nf - 1.0) * c6.powf(nf - 1.0);
    let two_unit_sides = 12.0 * k * (nf - 2.0).max(0.0) * c6.powf(nf - 2.0);
    let prefactor = 8.0 * nf;
    let ln_bound = table.c7.ln() + 2.0 * nf.ln() + nf * c6.ln();
    Ok(TriggeringBound {
        n,
        prefactor,
        no_unit_sides,
        one_unit_side,
        two_unit_sides,
        assembled: prefactor * (no_unit_sides + one_unit_side + two_unit_sides),
        ln_bound,
        bound: ln_bound.exp(),
    })
}

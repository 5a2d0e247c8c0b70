//! Paired significance testing and correlation.
//!
//! McNemar's test compares two classifiers on the same items through the two
//! discordant counts: `b` (A right, B wrong) and `c` (A wrong, B right). By
//! default small samples (`b + c < 25`) use the exact two-sided binomial test
//! and larger ones the continuity-corrected chi-square statistic
//! `(max(|b − c| − 1, 0))² / (b + c)` with one degree of freedom.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default discordant-pair count at which the chi-square approximation is used.
pub const DEFAULT_EXACT_THRESHOLD: u64 = 25;

/// Corrected p-values at or below this are reported as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    Chi2Corrected,
    ExactBinomial,
}

impl McNemarMethod {
    pub fn name(self) -> &'static str {
        match self {
            McNemarMethod::Chi2Corrected => "chi2_corrected",
            McNemarMethod::ExactBinomial => "exact_binomial",
        }
    }
}

impl fmt::Display for McNemarMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the McNemar variant is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    /// Exact below `threshold` discordant pairs, chi-square at or above.
    Auto {
        threshold: u64,
    },
    Fixed(McNemarMethod),
}

impl Default for MethodChoice {
    fn default() -> Self {
        MethodChoice::Auto {
            threshold: DEFAULT_EXACT_THRESHOLD,
        }
    }
}

impl MethodChoice {
    pub fn resolve(self, discordant: u64) -> McNemarMethod {
        match self {
            MethodChoice::Auto { threshold } if discordant < threshold => {
                McNemarMethod::ExactBinomial
            }
            MethodChoice::Auto { .. } => McNemarMethod::Chi2Corrected,
            MethodChoice::Fixed(m) => m,
        }
    }
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::default()),
            "chi2" | "chi2_corrected" => Ok(MethodChoice::Fixed(McNemarMethod::Chi2Corrected)),
            "exact" | "exact_binomial" => Ok(MethodChoice::Fixed(McNemarMethod::ExactBinomial)),
            other => Err(Error::InvalidInput(format!(
                "unknown McNemar method {other:?} (expected auto, chi2 or exact)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    /// Continuity-corrected chi-square statistic (reported for both methods).
    pub statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub method: McNemarMethod,
}

impl McNemarResult {
    pub fn significant(&self) -> bool {
        self.p_adjusted <= SIGNIFICANCE_LEVEL
    }
}

/// Gold labels and two aligned prediction sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedPredictions<T> {
    pub gold: Vec<T>,
    pub preds_a: Vec<T>,
    pub preds_b: Vec<T>,
}

impl<T: PartialEq> PairedPredictions<T> {
    pub fn new(gold: Vec<T>, preds_a: Vec<T>, preds_b: Vec<T>) -> Result<Self> {
        if gold.len() != preds_a.len() || gold.len() != preds_b.len() {
            return Err(Error::InvalidInput(format!(
                "length mismatch: gold {}, A {}, B {}",
                gold.len(),
                preds_a.len(),
                preds_b.len()
            )));
        }
        if gold.is_empty() {
            return Err(Error::InvalidInput("no paired predictions".into()));
        }
        Ok(PairedPredictions {
            gold,
            preds_a,
            preds_b,
        })
    }

    /// `(b, c)`: items only A got right, items only B got right.
    pub fn discordant(&self) -> (u64, u64) {
        discordant_counts(&self.gold, &self.preds_a, &self.preds_b)
    }
}

fn discordant_counts<T: PartialEq>(gold: &[T], a: &[T], b: &[T]) -> (u64, u64) {
    let mut only_a = 0;
    let mut only_b = 0;
    for ((g, pa), pb) in gold.iter().zip(a).zip(b) {
        match (pa == g, pb == g) {
            (true, false) => only_a += 1,
            (false, true) => only_b += 1,
            _ => {}
        }
    }
    (only_a, only_b)
}

pub fn mcnemar<T: PartialEq>(
    pp: &PairedPredictions<T>,
    choice: MethodChoice,
    bonferroni_m: u64,
) -> Result<McNemarResult> {
    let (b, c) = pp.discordant();
    mcnemar_from_counts(b, c, choice, bonferroni_m)
}

pub fn mcnemar_from_counts(
    b: u64,
    c: u64,
    choice: MethodChoice,
    bonferroni_m: u64,
) -> Result<McNemarResult> {
    let n = b + c;
    let method = choice.resolve(n);
    let statistic = if n == 0 {
        0.0
    } else {
        let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
        diff * diff / n as f64
    };
    let p_raw = if n == 0 {
        1.0
    } else {
        match method {
            McNemarMethod::Chi2Corrected => chi2_sf(statistic, 1.0),
            McNemarMethod::ExactBinomial => binomial_two_sided(b.min(c), n),
        }
    };
    Ok(McNemarResult {
        b,
        c,
        statistic,
        p_raw,
        p_adjusted: bonferroni(p_raw, bonferroni_m)?,
        method,
    })
}

/// `min(1, m · p)`.
pub fn bonferroni(p: f64, m: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p-value {p} outside [0, 1]")));
    }
    if m == 0 {
        return Err(Error::InvalidInput(
            "number of tests must be at least 1".into(),
        ));
    }
    Ok((m as f64 * p).min(1.0))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "pearson needs at least two points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("pearson inputs must be finite".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidInput(
            "pearson undefined for zero variance".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided exact binomial p-value for `k = min(b, c)` successes out of `n`
/// trials with success probability 1/2.
pub fn binomial_two_sided(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let k = k.min(n - k);
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    let terms: Vec<f64> = (0..=k).map(|i| ln_choose(n, i) - ln_half_n).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail = (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).exp();
    (2.0 * tail).min(1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Survival function of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(dof / 2.0, x / 2.0)
}

/// Lanczos approximation (g = 7, n = 9) of `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

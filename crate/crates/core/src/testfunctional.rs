//! Dyadic cutoff test functions and the volume-driven sums that bound the
//! weak-formulation functionals along the family `φ_i`.
//!
//! `φ_i(x,t) = i⁻¹ Σ_{k=i+1}^{2i} η_k(t) γ_k(x)` with `η_k(t) = g(t/4^k)` and
//! `γ_k(r) = g(r/2^k)`. The sums below are the dyadic upper bounds obtained by
//! inserting a volume law `ν(B_r) = c r^P ln^Q r`; they are evaluated in log
//! space since individual terms overflow for i ≳ 30.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{least_squares, FitError};
use crate::htransform::VolumeFit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestFunctionError {
    #[error("scale index must be at least 2, got {0}")]
    IndexTooSmall(usize),
    #[error("p must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("p − 1/i − 1 = {value} must be positive (p = {p}, i = {i})")]
    NegativeWeightExponent { p: f64, i: usize, value: f64 },
    #[error("volume law needs c > 0 and P > 0, got c = {c}, P = {big_p}")]
    InvalidLaw { c: f64, big_p: f64 },
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
}

/// Bound on |g'| for the smoothstep profile.
pub const CUTOFF_SLOPE_BOUND: f64 = 1.875;

/// `g = 1` on [0,1], `1 − 10x³ + 15x⁴ − 6x⁵` with `x = s − 1` on [1,2], 0 beyond.
pub fn cutoff(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let x = s - 1.0;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

pub fn cutoff_derivative(s: f64) -> f64 {
    if s <= 1.0 || s >= 2.0 {
        0.0
    } else {
        let x = s - 1.0;
        -30.0 * x * x * (1.0 - x) * (1.0 - x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily {
    i: usize,
}

impl CutoffFamily {
    pub fn new(i: usize) -> Result<Self, TestFunctionError> {
        if i < 2 {
            return Err(TestFunctionError::IndexTooSmall(i));
        }
        Ok(Self { i })
    }

    pub fn index(&self) -> usize {
        self.i
    }

    pub fn scales(&self) -> std::ops::RangeInclusive<usize> {
        self.i + 1..=2 * self.i
    }

    pub fn eta(&self, k: usize, t: f64) -> f64 {
        cutoff(t / 4f64.powi(k as i32))
    }

    pub fn eta_dt(&self, k: usize, t: f64) -> f64 {
        let s = 4f64.powi(k as i32);
        cutoff_derivative(t / s) / s
    }

    pub fn gamma(&self, k: usize, r: f64) -> f64 {
        cutoff(r / 2f64.powi(k as i32))
    }

    pub fn gamma_dr(&self, k: usize, r: f64) -> f64 {
        let s = 2f64.powi(k as i32);
        cutoff_derivative(r / s) / s
    }

    pub fn phi(&self, r: f64, t: f64) -> f64 {
        self.scales().map(|k| self.eta(k, t) * self.gamma(k, r)).sum::<f64>() / self.i as f64
    }

    pub fn phi_dr(&self, r: f64, t: f64) -> f64 {
        self.scales().map(|k| self.eta(k, t) * self.gamma_dr(k, r)).sum::<f64>() / self.i as f64
    }

    pub fn phi_dt(&self, r: f64, t: f64) -> f64 {
        self.scales().map(|k| self.eta_dt(k, t) * self.gamma(k, r)).sum::<f64>() / self.i as f64
    }

    /// `i^{−θ} Σ |η_k ∂_r γ_k|^θ`.
    pub fn grad_power_decomposed(&self, r: f64, t: f64, theta: f64) -> f64 {
        (self.i as f64).powf(-theta)
            * self.scales().map(|k| (self.eta(k, t) * self.gamma_dr(k, r)).abs().powf(theta)).sum::<f64>()
    }

    /// `i^{−θ} Σ |γ_k ∂_t η_k|^θ`.
    pub fn dt_power_decomposed(&self, r: f64, t: f64, theta: f64) -> f64 {
        (self.i as f64).powf(-theta)
            * self.scales().map(|k| (self.gamma(k, r) * self.eta_dt(k, t)).abs().powf(theta)).sum::<f64>()
    }
}

/// `ν(B_r) = c r^P ln^Q r` for r > 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeLaw {
    pub c: f64,
    pub big_p: f64,
    pub big_q: f64,
}

impl VolumeLaw {
    pub fn new(c: f64, big_p: f64, big_q: f64) -> Result<Self, TestFunctionError> {
        if !(c > 0.0) || !(big_p > 0.0) {
            return Err(TestFunctionError::InvalidLaw { c, big_p });
        }
        Ok(Self { c, big_p, big_q })
    }

    /// The sharp law `P = 2/(p−1)`, `Q = 1/(p−1)` plus `ε` on the log power.
    pub fn sharp(p: f64, eps: f64) -> Result<Self, TestFunctionError> {
        if !(p > 1.0) {
            return Err(TestFunctionError::InvalidExponent(p));
        }
        Self::new(1.0, 2.0 / (p - 1.0), 1.0 / (p - 1.0) + eps)
    }

    pub fn from_fit(fit: &VolumeFit) -> Result<Self, TestFunctionError> {
        Self::new(1.0, fit.p_hat, fit.q_hat)
    }

    pub fn ln_volume(&self, r: f64) -> f64 {
        self.c.ln() + self.big_p * r.ln() + self.big_q * r.ln().ln()
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check(i: usize, p: f64) -> Result<(), TestFunctionError> {
    if i < 2 {
        return Err(TestFunctionError::IndexTooSmall(i));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(TestFunctionError::InvalidExponent(p));
    }
    Ok(())
}

const LN2: f64 = std::f64::consts::LN_2;

/// `i⁻¹ (Σ_k 2^{2k+1} (2^{k+1})^{δ₂pa/e} 2^{−2pk/e} ν(B_{2^{k+1}}))^{e/p}`,
/// `a = 1/i`, `e = p + a − 1`.
pub fn j_sum(i: usize, p: f64, law: &VolumeLaw, delta2: f64) -> Result<f64, TestFunctionError> {
    check(i, p)?;
    let a = 1.0 / i as f64;
    let e = p + a - 1.0;
    let ln_s = log_sum_exp(CutoffFamily { i }.scales().map(|k| {
        let kf = k as f64;
        (2.0 * kf + 1.0) * LN2 + (kf + 1.0) * LN2 * delta2 * p * a / e - 2.0 * p * kf / e * LN2
            + law.ln_volume(2f64.powf(kf + 1.0))
    }));
    Ok((ln_s * e / p - (i as f64).ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LVariant {
    /// Weighted time-derivative term with exponent `p/(p + 1/i − 1)`.
    Time,
    /// Unweighted term with exponent `p/(p − 1)`.
    Final,
}

/// Time-derivative sums. `Time`:
/// `(i^{−p/e} Σ_k 2^{−2kp/e} 2^{2k} (2^{k+1})^{δ₂pa/e} ν(B_{2^{k+1}}))^{e/p}`;
/// `Final`: the same with `e = p − 1`, no h weight, outer power `(p−1)/p`.
pub fn l_sum(i: usize, p: f64, law: &VolumeLaw, delta2: f64, variant: LVariant) -> Result<f64, TestFunctionError> {
    check(i, p)?;
    let a = 1.0 / i as f64;
    let (e, weight) = match variant {
        LVariant::Time => (p + a - 1.0, delta2 * p * a / (p + a - 1.0)),
        LVariant::Final => (p - 1.0, 0.0),
    };
    let ln_s = log_sum_exp(CutoffFamily { i }.scales().map(|k| {
        let kf = k as f64;
        -2.0 * kf * p / e * LN2 + 2.0 * kf * LN2 + (kf + 1.0) * LN2 * weight + law.ln_volume(2f64.powf(kf + 1.0))
    }));
    let ln_total = -p / e * (i as f64).ln() + ln_s;
    Ok((ln_total * e / p).exp())
}

/// The `h^{−θ}` variant:
/// `i⁻¹ (Σ_k 2^{2k+1} 2^{−2kp/e} (2^k)^{δ₁pa/e} ν(B_{2^{k+1}}))^{e/p}`, `e = p − a − 1 > 0`.
pub fn j_sum_negative_weight(i: usize, p: f64, law: &VolumeLaw, delta1: f64) -> Result<f64, TestFunctionError> {
    check(i, p)?;
    let a = 1.0 / i as f64;
    let e = p - a - 1.0;
    if !(e > 0.0) {
        return Err(TestFunctionError::NegativeWeightExponent { p, i, value: e });
    }
    let ln_s = log_sum_exp(CutoffFamily { i }.scales().map(|k| {
        let kf = k as f64;
        (2.0 * kf + 1.0) * LN2 - 2.0 * kf * p / e * LN2 + kf * LN2 * delta1 * p * a / e
            + law.ln_volume(2f64.powf(kf + 1.0))
    }));
    Ok((ln_s * e / p - (i as f64).ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub i: usize,
    pub j: f64,
    pub l_time: f64,
    pub l_final: f64,
    /// Absent when `p − 1/i − 1 ≤ 0`.
    pub j_neg: Option<f64>,
}

pub const DEFAULT_LADDER: [usize; 5] = [4, 8, 16, 32, 64];

pub fn functional_report(
    i: usize,
    p: f64,
    law: &VolumeLaw,
    delta1: f64,
    delta2: f64,
) -> Result<FunctionalReport, TestFunctionError> {
    let j_neg = match j_sum_negative_weight(i, p, law, delta1) {
        Ok(v) => Some(v),
        Err(TestFunctionError::NegativeWeightExponent { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(FunctionalReport {
        i,
        j: j_sum(i, p, law, delta2)?,
        l_time: l_sum(i, p, law, delta2, LVariant::Time)?,
        l_final: l_sum(i, p, law, delta2, LVariant::Final)?,
        j_neg,
    })
}

/// Growth exponent of `ln v` against `ln i`, with `1/i` and `ln i / i`
/// nuisance columns absorbing the finite-i corrections of the sums.
pub fn ladder_slope(is: &[usize], values: &[f64]) -> Result<f64, TestFunctionError> {
    let x: Vec<f64> = is.iter().map(|i| *i as f64).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let cols = vec![
        x.iter().map(|i| i.ln()).collect(),
        vec![1.0; x.len()],
        x.iter().map(|i| 1.0 / i).collect(),
        x.iter().map(|i| i.ln() / i).collect(),
    ];
    Ok(least_squares(&cols, &y)?.coef[0])
}

/// Plain least-squares slope of `ln v` on `ln i`.
pub fn plain_slope(is: &[usize], values: &[f64]) -> Result<f64, TestFunctionError> {
    let x: Vec<f64> = is.iter().map(|i| (*i as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(crate::fit::line_fit(&x, &y)?.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSlopes {
    pub j: f64,
    pub l_time: f64,
    pub l_final: f64,
    pub j_neg: Option<f64>,
}

pub fn ladder(
    is: &[usize],
    p: f64,
    law: &VolumeLaw,
    delta1: f64,
    delta2: f64,
) -> Result<(Vec<FunctionalReport>, LadderSlopes), TestFunctionError> {
    let rows = is
        .iter()
        .map(|i| functional_report(*i, p, law, delta1, delta2))
        .collect::<Result<Vec<_>, _>>()?;
    let col = |f: &dyn Fn(&FunctionalReport) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let j_neg = if rows.iter().all(|r| r.j_neg.is_some()) {
        Some(ladder_slope(is, &col(&|r| r.j_neg.unwrap_or(f64::NAN)))?)
    } else {
        None
    };
    let slopes = LadderSlopes {
        j: ladder_slope(is, &col(&|r| r.j))?,
        l_time: ladder_slope(is, &col(&|r| r.l_time))?,
        l_final: ladder_slope(is, &col(&|r| r.l_final))?,
        j_neg,
    };
    Ok((rows, slopes))
}

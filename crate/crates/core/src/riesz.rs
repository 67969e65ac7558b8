//! Riesz potentials `I_α f = c(N,α) ∫ f(y) |x−y|^{α−N} dy` of radial functions on ℝ^N.
//!
//! The sphere average of `|x−y|^{α−N}` is computed by Gauss–Legendre panels in
//! the polar angle, graded toward φ = 0 where the kernel peaks when |x| ≈ |y|.
//! The radial integral uses panels graded toward s = |x| from both sides, a
//! logarithmic sweep through the data range, and an analytic power-law tail.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::fit::{line_fit, loglog_fit, FitError};
use crate::geometry::unit_sphere_area;
use crate::quadrature::{geomspace, graded_toward_end, graded_toward_start, rule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RieszError {
    #[error("need 0 < α < N, got α = {alpha}, N = {n}")]
    InvalidOrder { alpha: f64, n: usize },
    #[error("dimension must be at least 3, got {0}")]
    InvalidDimension(usize),
    #[error("tail decays like r^-{decay}, not integrable against r^(α-N) with α = {alpha}")]
    TailDivergence { decay: f64, alpha: f64 },
    #[error("quadrature failed near r = {radius}")]
    QuadratureFailure { radius: f64 },
    #[error("invalid radial function: {0}")]
    InvalidFunction(String),
    #[error("decay hint r^-{hint} violated: last decade decays like r^-{fitted}")]
    DecayHintViolated { hint: f64, fitted: f64 },
    #[error("fit residual {residual:.3e} exceeds {limit:.1e}")]
    FitResidual { residual: f64, limit: f64 },
    #[error("I₁V vanishes identically; ratio undefined")]
    EmptyDomain,
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("constant C must lie in (0, 1], got {0}")]
    InvalidConstant(f64),
}

/// Radial function sampled on log-spaced radii with a power-law tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    radii: Vec<f64>,
    values: Vec<f64>,
    decay_hint: Option<f64>,
    /// Fitted tail exponent q (f ~ r^{-q}); `None` for a compactly supported sample.
    tail_decay: Option<f64>,
}

impl RadialFunction {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, decay_hint: Option<f64>) -> Result<Self, RieszError> {
        if radii.len() != values.len() || radii.len() < 4 {
            return Err(RieszError::InvalidFunction("need >= 4 matching radii and values".into()));
        }
        if !(radii[0] > 0.0) || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RieszError::InvalidFunction("radii must be positive and increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RieszError::InvalidFunction("non-finite value".into()));
        }
        let r_max = radii[radii.len() - 1];
        let last = values[values.len() - 1];
        let tail_decay = if last == 0.0 {
            None
        } else {
            let (x, y): (Vec<f64>, Vec<f64>) = radii
                .iter()
                .zip(&values)
                .filter(|(r, v)| **r >= r_max / 10.0 && v.signum() == last.signum() && **v != 0.0)
                .map(|(r, v)| (r.ln(), v.abs().ln()))
                .unzip();
            let q = if x.len() >= 3 { -line_fit(&x, &y)?.slope } else { 0.0 };
            Some(q)
        };
        if let (Some(hint), Some(q)) = (decay_hint, tail_decay) {
            if q < hint - 0.05 {
                return Err(RieszError::DecayHintViolated { hint, fitted: q });
            }
        }
        Ok(Self { radii, values, decay_hint, tail_decay })
    }

    /// Samples `f` at `per_decade` points per decade on [r_min, r_max].
    pub fn from_fn<F: Fn(f64) -> f64>(
        f: F,
        r_min: f64,
        r_max: f64,
        per_decade: usize,
        decay_hint: Option<f64>,
    ) -> Result<Self, RieszError> {
        let n = (((r_max / r_min).log10() * per_decade as f64).ceil() as usize).max(4);
        let radii = geomspace(r_min, r_max, n);
        let values = radii.iter().map(|r| f(*r)).collect();
        Self::new(radii, values, decay_hint)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Decay exponent used for integrability: the hint when given, else the fit.
    pub fn effective_decay(&self) -> Option<f64> {
        self.tail_decay.map(|q| self.decay_hint.map_or(q, |h| h.min(q)))
    }

    pub fn tail_decay(&self) -> Option<f64> {
        self.tail_decay
    }

    pub fn abs(&self) -> Self {
        let values: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        Self { values, ..self.clone() }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return match self.tail_decay {
                None => 0.0,
                Some(q) => self.values[n - 1] * (r / self.radii[n - 1]).powf(-q),
            };
        }
        let i = self.radii.partition_point(|x| *x <= r);
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let h = (r1 / r0).ln();
        let t = (r / r0).ln() / h;
        if v0 != 0.0 && v1 != 0.0 && v0.signum() == v1.signum() {
            let (y0, y1) = (v0.abs().ln(), v1.abs().ln());
            let d0 = self.log_slope(i - 1).unwrap_or((y1 - y0) / h);
            let d1 = self.log_slope(i).unwrap_or((y1 - y0) / h);
            v0.signum() * hermite(y0, y1, d0 * h, d1 * h, t).exp()
        } else {
            v0 + (v1 - v0) * t
        }
    }

    /// d ln|f| / d ln r at node k from its neighbours, when all share a sign.
    fn log_slope(&self, k: usize) -> Option<f64> {
        let n = self.radii.len();
        if k == 0 || k + 1 >= n {
            return None;
        }
        let (a, b, c) = (self.values[k - 1], self.values[k], self.values[k + 1]);
        if a == 0.0 || b == 0.0 || c == 0.0 || a.signum() != b.signum() || b.signum() != c.signum() {
            return None;
        }
        let hm = (self.radii[k] / self.radii[k - 1]).ln();
        let hp = (self.radii[k + 1] / self.radii[k]).ln();
        let sm = (b.abs() / a.abs()).ln() / hm;
        let sp = (c.abs() / b.abs()).ln() / hp;
        Some((sm * hp + sp * hm) / (hm + hp))
    }
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1
}

/// c(N, α) = Γ((N−α)/2) / (π^{N/2} 2^α Γ(α/2)).
pub fn riesz_constant(n: usize, alpha: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let nf = n as f64;
    gamma(0.5 * (nf - alpha)) / (PI.powf(0.5 * nf) * 2f64.powf(alpha) * gamma(0.5 * alpha))
}

/// `∫_{S^{N−1}} |r e − s θ|^{α−N} dθ` by graded quadrature in the polar angle.
pub fn sphere_kernel(n: usize, alpha: f64, r: f64, s: f64) -> f64 {
    let expo = 0.5 * (alpha - n as f64);
    if r == 0.0 || s == 0.0 {
        return unit_sphere_area(n - 1) * r.max(s).powf(alpha - n as f64);
    }
    let diff2 = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let nm2 = (n - 2) as i32;
    let integrand = |phi: f64| {
        let h = (0.5 * phi).sin();
        (diff2 + rs4 * h * h).powf(expo) * phi.sin().powi(nm2)
    };
    let phi0 = (r - s).abs() / (r * s).sqrt();
    let g = rule(16);
    let mut total = 0.0;
    if phi0 >= 2.0 {
        total += g.integrate(integrand, 0.0, 0.5 * PI);
        total += g.integrate(integrand, 0.5 * PI, PI);
    } else {
        let mut a = 0.0;
        let mut b = (0.5 * phi0).max(1e-12);
        while b < 0.5 * PI {
            total += g.integrate(integrand, a, b);
            a = b;
            b *= 2.0;
        }
        total += g.integrate(integrand, a, 0.5 * PI);
        total += g.integrate(integrand, 0.5 * PI, PI);
    }
    unit_sphere_area(n - 2) * total
}

fn check_order(alpha: f64, n: usize) -> Result<(), RieszError> {
    if n < 3 {
        return Err(RieszError::InvalidDimension(n));
    }
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(RieszError::InvalidOrder { alpha, n });
    }
    Ok(())
}

const PANELS_PER_DECADE: usize = 8;
const TAIL_REACH: f64 = 1e4;
const GRADE_TINY: f64 = 1e-13;

/// `I_α f(x)` for radial f at |x| = r.
pub fn riesz_apply(f: &RadialFunction, alpha: f64, n: usize, r: f64) -> Result<f64, RieszError> {
    check_order(alpha, n)?;
    if r < 0.0 || !r.is_finite() {
        return Err(RieszError::QuadratureFailure { radius: r });
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let decay = f.effective_decay();
    if let Some(q) = decay {
        if q <= alpha {
            return Err(RieszError::TailDivergence { decay: q, alpha });
        }
    }
    let top = f.r_max().max(2.0 * r);
    let s_end = if decay.is_some() { top * TAIL_REACH } else { f.r_max() };

    let mut breaks: Vec<f64> = Vec::new();
    let b0 = if r > 0.0 { f.r_min().min(0.5 * r) } else { f.r_min() };
    breaks.extend(graded_toward_start(0.0, b0, GRADE_TINY));
    let decades = (s_end / b0).log10().max(0.0);
    let nlog = ((decades * PANELS_PER_DECADE as f64).ceil() as usize).max(1);
    breaks.extend(geomspace(b0, s_end, nlog));
    if r > 0.0 && r < s_end {
        breaks.extend(graded_toward_end(0.5 * r, r, GRADE_TINY));
        breaks.extend(graded_toward_start(r, (2.0 * r).min(s_end), GRADE_TINY));
    }
    breaks.retain(|x| *x >= 0.0 && *x <= s_end);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));

    let nm1 = (n - 1) as i32;
    let g = rule(16);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            total += g.integrate(|s| f.eval(s) * sphere_kernel(n, alpha, r, s) * s.powi(nm1), w[0], w[1]);
        }
    }
    if let Some(q) = decay {
        let fitted = f.tail_decay.unwrap_or(q);
        let amp = f.eval(s_end) * s_end.powf(fitted);
        total += unit_sphere_area(n - 1) * amp * s_end.powf(alpha - fitted) / (fitted - alpha);
    }
    let out = riesz_constant(n, alpha) * total;
    if !out.is_finite() {
        return Err(RieszError::QuadratureFailure { radius: r });
    }
    Ok(out)
}

/// `I_α f` at many radii, evaluated in parallel.
pub fn riesz_profile(f: &RadialFunction, alpha: f64, n: usize, xs: &[f64]) -> Result<Vec<f64>, RieszError> {
    xs.par_iter().map(|x| riesz_apply(f, alpha, n, *x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub fitted_slope: f64,
    pub slope_se: f64,
    pub theory_slope: f64,
    pub log_factor: bool,
    pub residual: f64,
    pub window: (f64, f64),
    /// Extremes of I₁V(x)/I₁V(0) over |x| ≤ 1.
    pub near_origin: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

/// Limit on the RMS log residual of the asymptotic slope fit.
pub const SLOPE_FIT_RESIDUAL_MAX: f64 = 0.05;

/// Log–log slope of `I₁V` for `V = ω/(1 + r^b)` over `window`.
pub fn verify_i1_asymptotics(
    omega: f64,
    b: f64,
    n: usize,
    window: (f64, f64),
    per_decade: usize,
) -> Result<AsymptoticReport, RieszError> {
    if !(b > 2.0) {
        return Err(RieszError::InvalidFunction(format!("need b > 2, got {b}")));
    }
    check_order(1.0, n)?;
    let v = RadialFunction::from_fn(|r| omega / (1.0 + r.powf(b)), 1e-3, window.1.max(1e3) * 10.0, per_decade, Some(b))?;
    let npts = (((window.1 / window.0).log10() * per_decade as f64).ceil() as usize).max(4);
    let xs = geomspace(window.0, window.1, npts);
    let vals = riesz_profile(&v, 1.0, n, &xs)?;
    let mags: Vec<f64> = vals.iter().map(|x| x.abs()).collect();
    let fit = loglog_fit(&xs, &mags)?;
    if fit.rms > SLOPE_FIT_RESIDUAL_MAX {
        return Err(RieszError::FitResidual { residual: fit.rms, limit: SLOPE_FIT_RESIDUAL_MAX });
    }
    let near: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].to_vec();
    let near_vals = riesz_profile(&v, 1.0, n, &near)?;
    let ratios: Vec<f64> = near_vals.iter().map(|x| x / near_vals[0]).collect();
    let nf = n as f64;
    let (theory_slope, log_factor) = if nf > b {
        (1.0 - b, false)
    } else if nf < b {
        (1.0 - nf, false)
    } else {
        (1.0 - b, true)
    };
    Ok(AsymptoticReport {
        fitted_slope: fit.slope,
        slope_se: fit.slope_se,
        theory_slope,
        log_factor,
        residual: fit.rms,
        window,
        near_origin: (
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
        samples: xs.into_iter().zip(vals).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmvReport {
    pub ratio_sup: f64,
    pub at_radius: f64,
    /// (x, I₁V(x), I₁[(I₁V)²](x), ratio).
    pub rows: Vec<(f64, f64, f64, f64)>,
}

/// `sup_x I₁[(I₁|V|)²](x) / I₁|V|(x)` over the sample radii of V (every `stride`-th).
pub fn hmv_condition_ratio(v: &RadialFunction, n: usize, stride: usize) -> Result<HmvReport, RieszError> {
    check_order(1.0, n)?;
    if v.is_zero() {
        return Err(RieszError::EmptyDomain);
    }
    let av = v.abs();
    let g = riesz_profile(&av, 1.0, n, av.radii())?;
    if g.iter().all(|x| *x == 0.0) {
        return Err(RieszError::EmptyDomain);
    }
    let sq = RadialFunction::new(av.radii().to_vec(), g.iter().map(|x| x * x).collect(), None)?;
    let idx: Vec<usize> = (0..av.radii().len()).step_by(stride.max(1)).collect();
    let xs: Vec<f64> = idx.iter().map(|i| av.radii()[*i]).collect();
    let outer = riesz_profile(&sq, 1.0, n, &xs)?;
    let mut rows = Vec::with_capacity(xs.len());
    let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
    for ((i, x), o) in idx.iter().zip(&xs).zip(&outer) {
        let gi = g[*i];
        if gi == 0.0 {
            return Err(RieszError::EmptyDomain);
        }
        let ratio = o / gi;
        if ratio > best {
            best = ratio;
            at = *x;
        }
        rows.push((*x, gi, *o, ratio));
    }
    Ok(HmvReport { ratio_sup: best, at_radius: at, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GreenBound {
    Finite { sup: f64, at_radius: f64 },
    Divergent { decay: f64 },
}

/// `sup_x I₂V(x)`, or a divergence flag when the tail is not integrable against r^{2−N}.
pub fn green_bounded_sup_i2(v: &RadialFunction, n: usize) -> Result<GreenBound, RieszError> {
    check_order(2.0, n)?;
    if v.is_zero() {
        return Ok(GreenBound::Finite { sup: 0.0, at_radius: 0.0 });
    }
    if let Some(q) = v.effective_decay() {
        if q <= 2.0 {
            return Ok(GreenBound::Divergent { decay: q });
        }
    }
    let mut xs = vec![0.0];
    xs.extend(v.radii().iter().step_by(2));
    let vals = riesz_profile(v, 2.0, n, &xs)?;
    let (i, sup) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, x)| if *x > bv { (i, *x) } else { (bi, bv) });
    Ok(GreenBound::Finite { sup, at_radius: xs[i] })
}

/// Bounds `(exp(−I₂V), exp(−C I₂V))` bracketing h for nonnegative V, with C ∈ (0, 1].
pub fn h_sandwich(i2v: f64, c: f64) -> Result<(f64, f64), RieszError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(RieszError::InvalidConstant(c));
    }
    Ok(((-i2v).exp(), (-c * i2v).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{laplacian_operator, ModelManifold, RadialGrid, RadialMesh};
    use proptest::prelude::*;

    fn closed_kernel_3d(alpha: f64, r: f64, s: f64) -> f64 {
        let inner = if (alpha - 1.0).abs() < 1e-14 {
            ((r + s) / (r - s).abs()).ln() / (r * s)
        } else {
            ((r + s).powf(alpha - 1.0) - (r - s).abs().powf(alpha - 1.0)) / ((alpha - 1.0) * r * s)
        };
        2.0 * PI * inner
    }

    #[test]
    fn constants() {
        assert!((riesz_constant(3, 2.0) - 1.0 / (4.0 * PI)).abs() < 1e-14);
        assert!((riesz_constant(3, 1.0) - 1.0 / (2.0 * PI * PI)).abs() < 1e-14);
    }

    #[test]
    fn kernel_matches_three_dimensional_closed_form() {
        for (alpha, r, s) in [(1.0, 1.0, 1.3), (1.0, 2.0, 1.999), (2.0, 0.5, 7.0), (0.5, 3.0, 3.0001), (2.5, 1.0, 0.2)] {
            let k = sphere_kernel(3, alpha, r, s);
            let c = closed_kernel_3d(alpha, r, s);
            assert!((k / c - 1.0).abs() < 1e-10, "α={alpha} r={r} s={s}: {k} vs {c}");
        }
        assert!((sphere_kernel(3, 1.0, 0.0, 2.0) - 4.0 * PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn origin_value_matches_scalar_oracle() {
        let b = 4.0;
        let v = RadialFunction::from_fn(|r| 1.0 / (1.0 + r.powf(b)), 1e-3, 1e4, 32, Some(b)).unwrap();
        let got = riesz_apply(&v, 1.0, 3, 0.0).unwrap();
        // (2/π) ∫₀^∞ ds/(1+s^b) = (2/π)(π/b)/sin(π/b)
        let exact = 2.0 / PI * (PI / b) / (PI / b).sin();
        assert!((got / exact - 1.0).abs() < 1e-4, "{got} vs {exact}");
    }

    #[test]
    fn zero_function_gives_zero() {
        let z = RadialFunction::new(vec![0.1, 1.0, 2.0, 3.0], vec![0.0; 4], None).unwrap();
        assert_eq!(riesz_apply(&z, 1.0, 3, 1.0).unwrap(), 0.0);
        assert!(matches!(hmv_condition_ratio(&z, 3, 1), Err(RieszError::EmptyDomain)));
        assert_eq!(green_bounded_sup_i2(&z, 3).unwrap(), GreenBound::Finite { sup: 0.0, at_radius: 0.0 });
    }

    #[test]
    fn order_and_tail_errors() {
        let v = RadialFunction::from_fn(|r| 1.0 / (1.0 + r * r), 1e-2, 1e3, 8, None).unwrap();
        assert!(matches!(riesz_apply(&v, 3.5, 3, 1.0), Err(RieszError::InvalidOrder { .. })));
        assert!(matches!(riesz_apply(&v, 2.0, 3, 1.0), Err(RieszError::TailDivergence { .. })));
        let bad = RadialFunction::from_fn(|r| 1.0 / (1.0 + r), 1e-2, 1e3, 8, Some(3.0));
        assert!(matches!(bad, Err(RieszError::DecayHintViolated { .. })));
    }

    #[test]
    fn newtonian_potential_inverts_laplacian() {
        let bump = |r: f64| if r < 1.0 { (1.0 - r * r).powi(3) } else { 0.0 };
        let f = RadialFunction::from_fn(bump, 1e-3, 2.0, 128, None).unwrap();
        let grid = RadialGrid::uniform(3.0, 150).unwrap();
        let mesh = RadialMesh::new(ModelManifold::euclidean(3).unwrap(), grid.clone()).unwrap();
        let op = laplacian_operator(&mesh, None).unwrap();
        let u = riesz_profile(&f, 2.0, 3, &grid.nodes()[..op.len()]).unwrap();
        let lu = op.apply(&u);
        let err = grid.nodes()[..op.len() - 1]
            .iter()
            .zip(&lu)
            .filter(|(r, _)| **r >= 0.1 && **r <= 0.9)
            .map(|(r, x)| (-x - bump(*r)).abs())
            .fold(0.0, f64::max);
        assert!(err < 5e-3, "max error {err}");
    }

    #[test]
    fn scaling_law() {
        let base = |r: f64| 1.0 / (1.0 + r.powi(4));
        for lam in [2.0, 0.5] {
            let f = RadialFunction::from_fn(base, 1e-4, 1e4, 32, Some(4.0)).unwrap();
            let fl = RadialFunction::from_fn(|r| base(lam * r), 1e-4, 1e4, 32, Some(4.0)).unwrap();
            for x in [0.5, 3.0] {
                let a = riesz_apply(&fl, 1.0, 3, x).unwrap();
                let b = lam.powf(-1.0) * riesz_apply(&f, 1.0, 3, lam * x).unwrap();
                assert!((a / b - 1.0).abs() < 1e-4, "λ={lam} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn asymptotic_slopes() {
        let rep = verify_i1_asymptotics(1.0, 4.0, 3, (10.0, 1e3), 8).unwrap();
        assert!((rep.fitted_slope + 2.0).abs() < 0.1, "{}", rep.fitted_slope);
        assert_eq!(rep.theory_slope, -2.0);
        assert!(rep.near_origin.0 > 0.2 && rep.near_origin.1 <= 1.0 + 1e-12);
        let rep = verify_i1_asymptotics(1.0, 3.0, 5, (10.0, 1e3), 8).unwrap();
        assert!((rep.fitted_slope + 2.0).abs() < 0.1, "{}", rep.fitted_slope);
        assert_eq!(rep.theory_slope, -2.0);
        let rep = verify_i1_asymptotics(1.0, 3.0, 3, (10.0, 1e3), 8).unwrap();
        assert!(rep.log_factor);
    }

    #[test]
    fn green_boundedness() {
        let v = RadialFunction::from_fn(|r| 1.0 / (1.0 + r.powi(3)), 1e-3, 1e4, 8, Some(3.0)).unwrap();
        match green_bounded_sup_i2(&v, 3).unwrap() {
            GreenBound::Finite { sup, .. } => assert!(sup.is_finite() && sup > 0.0),
            other => panic!("{other:?}"),
        }
        let v = RadialFunction::from_fn(|r| 1.0 / (1.0 + r.powf(1.5)), 1e-3, 1e4, 8, Some(1.5)).unwrap();
        assert!(matches!(green_bounded_sup_i2(&v, 3).unwrap(), GreenBound::Divergent { .. }));
    }

    #[test]
    fn sandwich_ordering() {
        let (lo, hi) = h_sandwich(0.8, 0.3).unwrap();
        assert!(lo <= hi);
        assert!(h_sandwich(1.0, 0.0).is_err());
        assert!(h_sandwich(1.0, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn kernel_symmetry(r in 0.01f64..50.0, s in 0.01f64..50.0, alpha in 0.3f64..2.8, n in 3usize..7) {
            prop_assume!(alpha < n as f64);
            prop_assume!((r - s).abs() > 1e-6 * r);
            let a = sphere_kernel(n, alpha, r, s);
            let b = sphere_kernel(n, alpha, s, r);
            prop_assert!((a - b).abs() <= 1e-9 * a.abs());
        }

        #[test]
        fn sandwich_monotone_in_constant(i2v in 0.0f64..20.0, c1 in 0.01f64..1.0, c2 in 0.01f64..1.0) {
            let (lo, a) = h_sandwich(i2v, c1.min(c2)).unwrap();
            let (_, b) = h_sandwich(i2v, c1.max(c2)).unwrap();
            prop_assert!(lo <= b + 1e-300 && b <= a);
        }
    }
}

//! Picard iteration for the mild form
//! `v(t) = e^{tΔ̃}v₀ + ∫₀ᵗ e^{(t−s)Δ̃} h^{p−1} v(s)^p ds`
//! inside the envelope `0 ≤ v ≤ λ P̃_{t+δ}(·, x₀)`.
//!
//! All iterates live on one time ladder: steps of 0.01 up to t = 10, then 1%
//! geometric growth, with the sample times inserted exactly. The Duhamel
//! integral over each step is backward Euler with the source frozen at the
//! left endpoint, so every iterate is produced by the same linear scheme.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{laplacian_operator, GeometryError, RadialMesh, RadialOperator};
use crate::htransform::{HProfile, FLAT_H_RATIO};
use crate::quadrature::rule;
use crate::semigroup::{due_check, point_mass, uniform_steps, BackwardEuler, DueReport, KernelColumn, SemigroupError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DuhamelError {
    #[error("h envelope ratio {ratio:.3} exceeds {limit}; the construction needs h bounded above and below")]
    HNotFlat { ratio: f64, limit: f64 },
    #[error("p must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("invalid duhamel parameter: {0}")]
    InvalidParameter(String),
    #[error("time shift δ = {0} leaves ln √(s+δ) non-positive")]
    ShiftTooSmall(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error("no λ in [2^-40, 2^40] keeps the iteration inside the envelope")]
    NoAdmissibleLambda,
    #[error("iteration did not contract: factors {factors:?} at iteration {iteration}")]
    NonContraction { iteration: usize, factors: Vec<f64> },
    #[error("envelope violated: {0}")]
    EnvelopeViolation(String),
    #[error("no convergence after {iterations} iterations (last difference {last_diff:e})")]
    NoConvergence { iterations: usize, last_diff: f64 },
}

pub const DEFAULT_DELTA: f64 = 54.598_150_033_144_236; // e⁴
pub const DEFAULT_SAMPLE_TIMES: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const LATTICE_RADII: usize = 32;
pub const NON_CONTRACTION_RUN: usize = 3;
const FINE_DT: f64 = 0.01;
const FINE_UNTIL: f64 = 10.0;
const GROWTH: f64 = 1.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelConfig {
    pub p: f64,
    /// Envelope amplitude; `None` selects it automatically.
    pub lambda: Option<f64>,
    pub delta: f64,
    pub source: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub sample_times: Vec<f64>,
    /// Check every cell at every ladder time instead of the lattice.
    pub full_grid: bool,
}

impl DuhamelConfig {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            lambda: None,
            delta: DEFAULT_DELTA,
            source: 0,
            tolerance: 1e-8,
            max_iterations: 30,
            sample_times: DEFAULT_SAMPLE_TIMES.to_vec(),
            full_grid: false,
        }
    }

    pub fn validate(&self) -> Result<(), DuhamelError> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(DuhamelError::InvalidExponent(self.p));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(DuhamelError::InvalidParameter(format!("lambda must be positive, got {l}")));
            }
        }
        if !(self.delta.sqrt().ln() > 0.0) || !self.delta.is_finite() {
            return Err(DuhamelError::ShiftTooSmall(self.delta));
        }
        if !(self.tolerance > 0.0) {
            return Err(DuhamelError::InvalidParameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(DuhamelError::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if self.sample_times.is_empty()
            || self.sample_times.iter().any(|t| !(*t > 0.0 && t.is_finite()))
            || self.sample_times.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(DuhamelError::InvalidParameter("sample_times must be positive and increasing".into()));
        }
        Ok(())
    }
}

/// Ladder `0 = t_0 < … < t_K` containing every sample time.
pub fn time_ladder(samples: &[f64]) -> Vec<f64> {
    let end = samples.iter().fold(0.0_f64, |a, t| a.max(*t));
    let mut pts = vec![0.0];
    let fine = (FINE_UNTIL.min(end) / FINE_DT).round() as usize;
    pts.extend((1..=fine).map(|k| k as f64 * FINE_DT));
    let mut t = *pts.last().expect("nonempty");
    while t < end {
        t = (t * GROWTH).max(t + FINE_DT);
        pts.push(t.min(end));
    }
    pts.extend_from_slice(samples);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        match out.last_mut() {
            Some(last) if (x - *last).abs() <= 1e-9 * x.max(1.0) => {
                // prefer the exact sample value
                if samples.contains(&x) {
                    *last = x;
                }
            }
            _ => out.push(x),
        }
    }
    out
}

/// Shared linear machinery for one (mesh, h, p, δ, x₀).
#[derive(Debug, Clone)]
pub struct DuhamelContext {
    op: RadialOperator,
    coeff: Vec<f64>,
    nodes: Vec<f64>,
    ladder: Vec<f64>,
    /// Index into `steppers` for each ladder step.
    step_kind: Vec<usize>,
    steppers: Vec<BackwardEuler>,
    sample_idx: Vec<usize>,
    lattice: Vec<usize>,
    /// `P̃_δ(·, x₀)`.
    kernel_at_delta: Vec<f64>,
    /// `P̃_{t+δ}(·, x₀)` at each sample time.
    envelope: Vec<Vec<f64>>,
    due: DueReport,
    cfg: DuhamelConfig,
}

impl DuhamelContext {
    pub fn new(mesh: &RadialMesh, h: &HProfile, cfg: &DuhamelConfig) -> Result<Self, DuhamelError> {
        cfg.validate()?;
        let ratio = h.envelope_ratio();
        if !(ratio <= FLAT_H_RATIO) {
            return Err(DuhamelError::HNotFlat { ratio, limit: FLAT_H_RATIO });
        }
        let op = laplacian_operator(mesh, Some(h))?;
        let m = op.len();
        let coeff = h.values()[..m].iter().map(|x| x.powf(cfg.p - 1.0)).collect();

        let ladder = time_ladder(&cfg.sample_times);
        let mut steppers: Vec<BackwardEuler> = Vec::new();
        let mut step_kind = Vec::with_capacity(ladder.len() - 1);
        for w in ladder.windows(2) {
            let dt = w[1] - w[0];
            let found = steppers.iter().position(|s| (s.dt() - dt).abs() <= 1e-12 * dt);
            let idx = match found {
                Some(i) => i,
                None => {
                    steppers.push(BackwardEuler::new(&op.matrix, dt)?);
                    steppers.len() - 1
                }
            };
            step_kind.push(idx);
        }
        let sample_idx = cfg
            .sample_times
            .iter()
            .map(|t| ladder.iter().position(|x| x == t).expect("samples are on the ladder"))
            .collect::<Vec<_>>();

        let mut col = point_mass(&op, cfg.source)?;
        let (n, dt) = uniform_steps(cfg.delta, FINE_DT)?;
        let be = BackwardEuler::new(&op.matrix, dt)?;
        for _ in 0..n {
            be.step(&mut col);
        }
        let kernel_at_delta = col.clone();
        let mut envelope = Vec::with_capacity(sample_idx.len());
        let mut next = 0;
        for k in 0..ladder.len() {
            if next < sample_idx.len() && sample_idx[next] == k {
                envelope.push(col.clone());
                next += 1;
            }
            if k + 1 < ladder.len() {
                steppers[step_kind[k]].step(&mut col);
            }
        }
        let columns: Vec<KernelColumn> = cfg
            .sample_times
            .iter()
            .zip(&envelope)
            .map(|(t, v)| KernelColumn { source: cfg.source, t: t + cfg.delta, values: v.clone() })
            .collect();
        let due = due_check(&columns, mesh, &op);

        let grid = mesh.grid();
        let r_lo = mesh.nodes()[1];
        let r_hi = 0.5 * grid.r_max();
        let mut lattice: Vec<usize> = (0..LATTICE_RADII)
            .map(|i| {
                let r = r_lo * (r_hi / r_lo).powf(i as f64 / (LATTICE_RADII - 1) as f64);
                grid.nearest(r).min(m - 1)
            })
            .collect();
        lattice.dedup();

        Ok(Self {
            op,
            coeff,
            nodes: mesh.nodes()[..m].to_vec(),
            ladder,
            step_kind,
            steppers,
            sample_idx,
            lattice,
            kernel_at_delta,
            envelope,
            due,
            cfg: cfg.clone(),
        })
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn lattice_radii(&self) -> Vec<f64> {
        self.lattice.iter().map(|j| self.nodes[*j]).collect()
    }

    pub fn due_report(&self) -> &DueReport {
        &self.due
    }

    pub fn kernel_at_delta(&self) -> &[f64] {
        &self.kernel_at_delta
    }

    pub fn config(&self) -> &DuhamelConfig {
        &self.cfg
    }

    /// `v₀ = (λ/2) P̃_δ(·, x₀)`.
    pub fn initial_data(&self, lambda: f64) -> Vec<f64> {
        self.kernel_at_delta.iter().map(|k| 0.5 * lambda * k).collect()
    }

    /// One application of the Duhamel operator to a trajectory on the ladder.
    /// With `prev = None` the source vanishes and this is `e^{tΔ̃}v₀`.
    pub fn apply(&self, v0: &[f64], prev: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
        let p = self.cfg.p;
        let mut out = Vec::with_capacity(self.ladder.len());
        let mut v = v0.to_vec();
        out.push(v.clone());
        let mut src = vec![0.0; v.len()];
        for k in 0..self.ladder.len() - 1 {
            let stepper = &self.steppers[self.step_kind[k]];
            match prev {
                Some(traj) => {
                    for ((s, c), x) in src.iter_mut().zip(&self.coeff).zip(&traj[k]) {
                        *s = c * x.max(0.0).powf(p);
                    }
                    stepper.step_with_source(&mut v, &src);
                }
                None => stepper.step(&mut v),
            }
            out.push(v.clone());
        }
        out
    }

    /// Sup of `|a − b|` over the sample lattice (or every cell and ladder time).
    fn distance(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let cell = |x: &[f64], y: &[f64], j: usize| (x[j] - y[j]).abs();
        if self.cfg.full_grid {
            a.iter()
                .zip(b)
                .flat_map(|(x, y)| (0..x.len()).map(move |j| cell(x, y, j)))
                .fold(0.0, f64::max)
        } else {
            self.sample_idx
                .iter()
                .flat_map(|k| self.lattice.iter().map(move |j| cell(&a[*k], &b[*k], *j)))
                .fold(0.0, f64::max)
        }
    }

    /// Checks `v(x,t) ≤ λ P̃_{t+δ}(x, x₀)` at the sample times.
    pub fn envelope_check(&self, trajectory: &[Vec<f64>], lambda: f64) -> EnvelopeReport {
        let cells: Vec<usize> = if self.cfg.full_grid { (0..self.op.len()).collect() } else { self.lattice.clone() };
        let mut worst = f64::INFINITY;
        let mut at = None;
        for (s, k) in self.sample_idx.iter().enumerate() {
            for &j in &cells {
                let bound = lambda * self.envelope[s][j];
                if bound <= 0.0 {
                    continue;
                }
                let margin = (bound - trajectory[*k][j]) / bound;
                if margin < worst {
                    worst = margin;
                    at = Some((self.cfg.sample_times[s], self.nodes[j]));
                }
            }
        }
        let pass = worst >= 0.0;
        EnvelopeReport {
            pass,
            worst_margin: worst,
            worst_at: at,
            failed_inequality: (!pass).then(|| ENVELOPE_INEQUALITY.to_string()),
        }
    }

    /// Picard iteration from `v⁰ = e^{tΔ̃}v₀`.
    pub fn picard_iterate(&self, v0: &[f64], lambda: f64) -> PicardOutcome {
        let mut current = self.apply(v0, None);
        let mut log = Vec::new();
        let mut envelope = self.envelope_check(&current, lambda);
        let mut status = PicardStatus::MaxIterations;
        let mut run = 0usize;
        let mut prev_diff: Option<f64> = None;
        for n in 1..=self.cfg.max_iterations {
            let next = self.apply(v0, Some(&current));
            let diff = self.distance(&next, &current);
            let factor = prev_diff.and_then(|d| (d > 0.0).then_some(diff / d));
            let env = self.envelope_check(&next, lambda);
            log.push(IterationRecord { iteration: n, sup_diff: diff, factor, envelope_margin: env.worst_margin });
            current = next;
            if env.worst_margin < envelope.worst_margin {
                envelope = env;
            }
            if diff < self.cfg.tolerance {
                status = PicardStatus::Converged;
                break;
            }
            run = if factor.is_some_and(|f| f >= 1.0) { run + 1 } else { 0 };
            if run >= NON_CONTRACTION_RUN {
                status = PicardStatus::NonContraction;
                break;
            }
            prev_diff = Some(diff);
        }
        if status == PicardStatus::Converged && !envelope.pass {
            status = PicardStatus::EnvelopeViolation;
        }
        let fixed_point = self.sample_idx.iter().map(|k| current[*k].clone()).collect();
        PicardOutcome {
            lambda,
            status,
            iterations: log.len(),
            log,
            envelope,
            contraction: 0.0,
            sample_times: self.cfg.sample_times.clone(),
            fixed_point,
            trajectory: current,
        }
        .with_contraction()
    }

    /// Converged and inside the envelope.
    fn admissible(&self, lambda: f64) -> bool {
        let out = self.picard_iterate(&self.initial_data(lambda), lambda);
        out.status == PicardStatus::Converged
    }

    /// Largest admissible λ (doubling/halving from 1, then 6 bisections), halved.
    pub fn select_lambda(&self) -> Result<LambdaSelection, DuhamelError> {
        let mut lo;
        let mut hi;
        if self.admissible(1.0) {
            lo = 1.0;
            hi = 2.0;
            while self.admissible(hi) {
                lo = hi;
                hi *= 2.0;
                if hi > 2f64.powi(40) {
                    return Err(DuhamelError::NoAdmissibleLambda);
                }
            }
        } else {
            hi = 1.0;
            lo = 0.5;
            while !self.admissible(lo) {
                hi = lo;
                lo *= 0.5;
                if lo < 2f64.powi(-40) {
                    return Err(DuhamelError::NoAdmissibleLambda);
                }
            }
        }
        for _ in 0..6 {
            let mid = 0.5 * (lo + hi);
            if self.admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(LambdaSelection { lambda_max: lo, first_failure: hi, lambda: 0.5 * lo })
    }

    /// Runs with the configured λ, or the auto-selected one.
    pub fn run(&self) -> Result<(PicardOutcome, Option<LambdaSelection>), DuhamelError> {
        let (lambda, sel) = match self.cfg.lambda {
            Some(l) => (l, None),
            None => {
                let s = self.select_lambda()?;
                (s.lambda, Some(s))
            }
        };
        Ok((self.picard_iterate(&self.initial_data(lambda), lambda), sel))
    }

    /// Fixed-point values at the sample times on the full grid, physical `u = h v`.
    pub fn sample_values(&self, outcome: &PicardOutcome, h: &HProfile) -> Vec<Vec<f64>> {
        outcome
            .fixed_point
            .iter()
            .map(|v| v.iter().zip(h.values()).map(|(a, b)| a * b).collect())
            .collect()
    }
}

pub const ENVELOPE_INEQUALITY: &str = "v(x,t) <= lambda * P_{t+delta}(x,x0)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// `min (λP̃ − v)/(λP̃)` over the checked points.
    pub worst_margin: f64,
    pub worst_at: Option<(f64, f64)>,
    pub failed_inequality: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub sup_diff: f64,
    pub factor: Option<f64>,
    pub envelope_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PicardStatus {
    Converged,
    NonContraction,
    EnvelopeViolation,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardOutcome {
    pub lambda: f64,
    pub status: PicardStatus,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
    pub envelope: EnvelopeReport,
    /// Geometric mean of the contraction factors above the round-off floor.
    pub contraction: f64,
    pub sample_times: Vec<f64>,
    /// Iterate at each sample time.
    pub fixed_point: Vec<Vec<f64>>,
    #[serde(skip)]
    pub trajectory: Vec<Vec<f64>>,
}

impl PicardOutcome {
    fn with_contraction(mut self) -> Self {
        let floor = self.log.first().map_or(0.0, |r| r.sup_diff) * 1e-9;
        let fs: Vec<f64> = self
            .log
            .iter()
            .filter(|r| r.sup_diff > floor)
            .filter_map(|r| r.factor)
            .filter(|f| *f > 0.0)
            .collect();
        self.contraction = if fs.is_empty() {
            0.0
        } else {
            (fs.iter().map(|f| f.ln()).sum::<f64>() / fs.len() as f64).exp()
        };
        self
    }

    pub fn into_result(self) -> Result<PicardOutcome, DuhamelError> {
        match self.status {
            PicardStatus::Converged => Ok(self),
            PicardStatus::NonContraction => Err(DuhamelError::NonContraction {
                iteration: self.iterations,
                factors: self.log.iter().filter_map(|r| r.factor).collect(),
            }),
            PicardStatus::EnvelopeViolation => Err(DuhamelError::EnvelopeViolation(ENVELOPE_INEQUALITY.into())),
            PicardStatus::MaxIterations => Err(DuhamelError::NoConvergence {
                iterations: self.iterations,
                last_diff: self.log.last().map_or(f64::NAN, |r| r.sup_diff),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda_max: f64,
    pub first_failure: f64,
    pub lambda: f64,
}

/// Partial integrals `∫₀ᵀ ds / μ(B_{√(s+δ)})^{p−1}` for `μ(B_r) = r^{P'} ln^{Q'} r`.
///
/// In `u = ln(s+δ)` the integrand is `e^u / (e^{uP'/2} (u/2)^{Q'})^{p−1}`,
/// integrated with 16-point Gauss panels of width 0.5 in u.
pub fn kernel_time_integral(
    big_p: f64,
    big_q: f64,
    p: f64,
    delta: f64,
    horizons: &[f64],
) -> Result<Vec<(f64, f64)>, DuhamelError> {
    if !(p > 1.0) {
        return Err(DuhamelError::InvalidExponent(p));
    }
    if !(big_p > 0.0) || !(big_q >= 0.0) {
        return Err(DuhamelError::InvalidParameter(format!("volume law needs P' > 0 and Q' ≥ 0, got ({big_p}, {big_q})")));
    }
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(DuhamelError::ShiftTooSmall(delta));
    }
    if horizons.windows(2).any(|w| !(w[1] > w[0])) || horizons.iter().any(|t| !(*t > 0.0)) {
        return Err(DuhamelError::InvalidParameter("horizons must be positive and increasing".into()));
    }
    let q = p - 1.0;
    let f = |u: f64| (u - q * (0.5 * u * big_p + big_q * (0.5 * u).ln())).exp();
    let g = rule(16);
    let mut u = delta.ln();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let end = (t + delta).ln();
        while u < end {
            let b = (u + 0.5).min(end);
            acc += g.integrate(f, u, b);
            u = b;
        }
        out.push((t, acc));
    }
    Ok(out)
}

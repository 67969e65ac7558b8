//! Ground states of Δh = Vh, the measures μ = h²μ₀ and ν = hμ₀, and the
//! volume-growth tests built on them.
//!
//! The profile is obtained by marching the finite-volume balance of
//! [`laplacian_operator`](crate::geometry::laplacian_operator) outward from the
//! centre, so the discrete Doob transform is exact on the grid: the weighted
//! operator built from the returned h equals `h⁻¹ (L − V) h` to round-off.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{least_squares, line_fit, FitError};
use crate::geometry::{GeometryError, ModelManifold, RadialGrid, RadialMesh};
use crate::potentials::{ExponentBundle, PotentialSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("potential: {0}")]
    Potential(#[from] crate::potentials::PotentialError),
    #[error("h became non-finite at r = {radius}")]
    Stiff { radius: f64 },
    #[error("profile has no positivity certificate (first non-positive value at r = {radius:?})")]
    NoCertificate { radius: Option<f64> },
    #[error("volume fit needs the grid to span 3 decades with ln ln r defined; span is {span:.3} decades")]
    TooFewDecades { span: f64 },
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("profile has {found} values, grid has {expected} nodes")]
    Length { expected: usize, found: usize },
}

/// Positive radial profile on grid nodes with a fitted growth exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    delta_hat: f64,
    delta_band: f64,
    certificate: bool,
    offending_radius: Option<f64>,
}

/// Slope of ln h against ln r over the last decade of the grid, with a band.
fn exponent_fit(radii: &[f64], values: &[f64]) -> (f64, f64) {
    let r_max = radii[radii.len() - 1];
    let lo = (r_max / 10.0).max(radii.get(1).copied().unwrap_or(r_max));
    let window = |a: f64, b: f64| -> Option<(f64, f64)> {
        let (x, y): (Vec<f64>, Vec<f64>) = radii
            .iter()
            .zip(values)
            .filter(|(r, h)| **r >= a * (1.0 - 1e-12) && **r <= b * (1.0 + 1e-12) && **r > 0.0 && **h > 0.0)
            .map(|(r, h)| (r.ln(), h.ln()))
            .unzip();
        let f = line_fit(&x, &y).ok()?;
        Some((f.slope, f.slope_se))
    };
    let Some((slope, se)) = window(lo, r_max) else {
        return (f64::NAN, f64::INFINITY);
    };
    let mid = (lo * r_max).sqrt();
    let drift = [window(lo, mid), window(mid, r_max)]
        .iter()
        .flatten()
        .map(|(s, _)| (s - slope).abs())
        .fold(0.0, f64::max);
    (slope, 3.0 * se + 2.0 * drift)
}

impl HProfile {
    pub fn from_values(grid: &RadialGrid, values: Vec<f64>) -> Self {
        let radii = grid.nodes().to_vec();
        assert_eq!(radii.len(), values.len(), "profile length must match grid");
        let offending_radius = values.iter().position(|v| !(*v > 0.0)).map(|i| radii[i]);
        let (delta_hat, delta_band) = exponent_fit(&radii, &values);
        Self {
            radii,
            values,
            delta_hat,
            delta_band,
            certificate: offending_radius.is_none(),
            offending_radius,
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F) -> Result<Self, HError> {
        let values: Vec<f64> = grid.nodes().iter().map(|r| f(*r)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HError::Stiff { radius: grid.nodes()[i] });
        }
        Ok(Self::from_values(grid, values))
    }

    pub fn unit(grid: &RadialGrid) -> Self {
        Self::from_values(grid, vec![1.0; grid.nodes().len()])
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta_hat(&self) -> f64 {
        self.delta_hat
    }

    pub fn delta_band(&self) -> f64 {
        self.delta_band
    }

    pub fn certificate(&self) -> bool {
        self.certificate
    }

    pub fn offending_radius(&self) -> Option<f64> {
        self.offending_radius
    }

    /// max h / min h over the whole grid.
    pub fn envelope_ratio(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        hi / lo
    }

    /// max h / min h over the last decade.
    pub fn last_decade_ratio(&self) -> f64 {
        let r_max = self.radii[self.radii.len() - 1];
        let (lo, hi) = self
            .radii
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| **r >= r_max / 10.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, v)| (a.min(*v), b.max(*v)));
        hi / lo
    }

    /// Exponent fitted on an arbitrary window [a, b].
    pub fn exponent_on(&self, a: f64, b: f64) -> Result<f64, HError> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .radii
            .iter()
            .zip(&self.values)
            .filter(|(r, h)| **r >= a && **r <= b && **r > 0.0 && **h > 0.0)
            .map(|(r, h)| (r.ln(), h.ln()))
            .unzip();
        Ok(line_fit(&x, &y)?.slope)
    }
}

/// Marches the discrete equation `(L h)_j = V(r_j) h_j` outward from `h_0 = 1`.
///
/// The zero inner flux at node 0 plays the role of `h'(0) = 0`. Loss of
/// positivity is recorded on the profile rather than raised.
pub fn solve_h(
    manifold: &ModelManifold,
    potential: &PotentialSpec,
    grid: &RadialGrid,
) -> Result<HProfile, HError> {
    potential.validate()?;
    let mesh = RadialMesh::new(*manifold, grid.clone())?;
    solve_h_on_mesh(&mesh, potential)
}

pub fn solve_h_on_mesh(mesh: &RadialMesh, potential: &PotentialSpec) -> Result<HProfile, HError> {
    let nodes = mesh.nodes();
    let m = mesh.unknowns();
    let vol = mesh.cell_volumes();
    let cond: Vec<f64> = (0..m)
        .map(|j| mesh.interface_areas()[j] / (nodes[j + 1] - nodes[j]))
        .collect();
    let mut h = vec![0.0; m + 1];
    h[0] = 1.0;
    for j in 0..m {
        let inner = if j > 0 { cond[j - 1] * (h[j] - h[j - 1]) } else { 0.0 };
        let source = potential.value(nodes[j]) * h[j] * vol[j];
        h[j + 1] = h[j] + (source + inner) / cond[j];
        if !h[j + 1].is_finite() {
            return Err(HError::Stiff { radius: nodes[j + 1] });
        }
    }
    Ok(HProfile::from_values(mesh.grid(), h))
}

/// `(L h)_j / h_j − V(r_j)` relative to the local scale, for interior nodes.
pub fn discrete_residual(mesh: &RadialMesh, potential: &PotentialSpec, h: &HProfile) -> Vec<f64> {
    let nodes = mesh.nodes();
    let m = mesh.unknowns();
    let vol = mesh.cell_volumes();
    let hv = h.values();
    let cond = |j: usize| mesh.interface_areas()[j] / (nodes[j + 1] - nodes[j]);
    (0..m)
        .map(|j| {
            let outer = cond(j) * (hv[j + 1] - hv[j]);
            let inner = if j > 0 { cond(j - 1) * (hv[j] - hv[j - 1]) } else { 0.0 };
            let source = potential.value(nodes[j]) * hv[j] * vol[j];
            let scale = outer.abs() + inner.abs() + source.abs();
            if scale == 0.0 {
                0.0
            } else {
                (outer - inner - source) / scale
            }
        })
        .collect()
}

/// Which measure a volume is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Mu0,
    Mu,
    Nu,
}

/// Cell weights of μ₀, μ = h²μ₀ and ν = hμ₀ for nodes 0..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureWeights {
    pub mu0: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl MeasureWeights {
    pub fn new(mesh: &RadialMesh, h: &HProfile) -> Result<Self, HError> {
        let vol = mesh.cell_volumes();
        let hv = h.values();
        if hv.len() != vol.len() {
            return Err(HError::Length { expected: vol.len(), found: hv.len() });
        }
        if !h.certificate() {
            return Err(HError::NoCertificate { radius: h.offending_radius() });
        }
        Ok(Self {
            mu0: vol.to_vec(),
            mu: vol.iter().zip(hv).map(|(v, h)| h * h * v).collect(),
            nu: vol.iter().zip(hv).map(|(v, h)| h * v).collect(),
        })
    }

    pub fn get(&self, m: Measure) -> &[f64] {
        match m {
            Measure::Mu0 => &self.mu0,
            Measure::Mu => &self.mu,
            Measure::Nu => &self.nu,
        }
    }

    /// Ball measures at the outer cell edges `r_{j+1/2}` (and R_max for the last cell).
    pub fn cumulative(&self, mesh: &RadialMesh, m: Measure) -> Vec<(f64, f64)> {
        let w = self.get(m);
        let grid = mesh.grid();
        let last = w.len() - 1;
        let mut acc = 0.0;
        w.iter()
            .enumerate()
            .map(|(j, x)| {
                acc += x;
                let r = if j == last { grid.r_max() } else { grid.interface(j) };
                (r, acc)
            })
            .collect()
    }
}

/// Fitted `ν(B_r) ≈ c r^P̂ ln^Q̂ r` over the top two decades.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeFit {
    pub p_hat: f64,
    pub q_hat: f64,
    pub p_band: f64,
    pub q_band: f64,
    pub residual: f64,
    pub window: (f64, f64),
}

/// Floors on the volume-fit confidence bands, covering the truncated asymptotic series.
pub const VOLUME_P_FLOOR: f64 = 0.01;
pub const VOLUME_Q_FLOOR: f64 = 0.05;

fn volume_regression(samples: &[(f64, f64)], a: f64, b: f64) -> Result<(f64, f64, f64, f64, f64), HError> {
    let pts: Vec<&(f64, f64)> = samples
        .iter()
        .filter(|(r, v)| *r >= a * (1.0 - 1e-12) && *r <= b * (1.0 + 1e-12) && *v > 0.0)
        .collect();
    // thin to at most ~200 log-uniform samples
    let stride = pts.len().div_ceil(200).max(1);
    let pts: Vec<&(f64, f64)> = pts.into_iter().step_by(stride).collect();
    let l: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let cols = vec![
        vec![1.0; l.len()],
        l.clone(),
        l.iter().map(|x| x.ln()).collect(),
        l.iter().map(|x| 1.0 / x).collect(),
    ];
    let ls = least_squares(&cols, &y)?;
    Ok((ls.coef[1], ls.coef[2], ls.std_err[1], ls.std_err[2], ls.rms))
}

/// Regresses ln ν(B_r) on (1, ln r, ln ln r, 1/ln r) over [R/100, R].
///
/// The `1/ln r` column absorbs the first correction of the asymptotic volume
/// expansion; without it the logarithmic exponent is biased upward at desk radii.
pub fn volume_growth_fit(mesh: &RadialMesh, h: &HProfile, measure: Measure) -> Result<VolumeFit, HError> {
    let r_max = mesh.grid().r_max();
    let r_first = mesh.nodes()[1];
    let span = (r_max / r_first).log10();
    let lo = r_max / 100.0;
    if span < 3.0 || lo < std::f64::consts::E {
        return Err(HError::TooFewDecades { span });
    }
    let w = MeasureWeights::new(mesh, h)?;
    let samples = w.cumulative(mesh, measure);
    let (p_hat, q_hat, p_se, q_se, residual) = volume_regression(&samples, lo, r_max)?;
    let split_lo = (lo.ln() + 0.75 * (r_max / lo).ln()).exp();
    let split_hi = (lo.ln() + 0.25 * (r_max / lo).ln()).exp();
    let mut p_drift: f64 = 0.0;
    let mut q_drift: f64 = 0.0;
    for (a, b) in [(lo, split_lo), (split_hi, r_max)] {
        if let Ok((p, q, ..)) = volume_regression(&samples, a, b) {
            p_drift = p_drift.max((p - p_hat).abs());
            q_drift = q_drift.max((q - q_hat).abs());
        }
    }
    Ok(VolumeFit {
        p_hat,
        q_hat,
        p_band: (3.0 * p_se + p_drift).max(VOLUME_P_FLOOR),
        q_band: (3.0 * q_se + q_drift).max(VOLUME_Q_FLOOR),
        residual,
        window: (lo, r_max),
    })
}

/// Polynomial envelope exponents `c r^{−δ₁} ≤ h ≤ C r^{δ₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionH {
    pub delta1: f64,
    pub delta2: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Largest RMS misfit of ln h against a line in ln r that still counts as polynomial.
pub const H_RESIDUAL_MAX: f64 = 0.1;

pub fn check_condition_h(h: &HProfile) -> Result<ConditionH, HError> {
    if !h.certificate() {
        return Err(HError::NoCertificate { radius: h.offending_radius() });
    }
    let r_max = h.radii()[h.radii().len() - 1];
    let lo = (r_max / 100.0).max(1.0).min(r_max / 2.0);
    let (x, y): (Vec<f64>, Vec<f64>) = h
        .radii()
        .iter()
        .zip(h.values())
        .filter(|(r, _)| **r >= lo)
        .map(|(r, v)| (r.ln(), v.ln()))
        .unzip();
    let f = line_fit(&x, &y)?;
    let finite = f.slope.is_finite() && f.rms.is_finite();
    let pass = finite && f.rms <= H_RESIDUAL_MAX;
    Ok(ConditionH {
        delta1: (-f.slope).max(0.0),
        delta2: f.slope.max(0.0),
        residual: f.rms,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    NonexistenceCertified,
    OutsideTheorem,
}

/// Compares the fitted volume law with `r^P ln^Q r`.
///
/// Powers are compared first; the logarithmic exponents decide only when the
/// powers agree within the fit band.
pub fn nonexistence_verdict(bundle: &ExponentBundle, fit: &VolumeFit) -> Verdict {
    let lower_power = fit.p_hat < bundle.big_p - fit.p_band;
    let same_power = (fit.p_hat - bundle.big_p).abs() <= fit.p_band;
    if lower_power || (same_power && fit.q_hat <= bundle.big_q + fit.q_band) {
        Verdict::NonexistenceCertified
    } else {
        Verdict::OutsideTheorem
    }
}

/// Bounded-ratio test for h ≍ 1: max/min over the last decade against a fixed limit.
pub const FLAT_H_RATIO: f64 = 10.0;

pub fn flat_profile_check(h: &HProfile) -> (f64, bool) {
    let r = h.last_decade_ratio();
    (r, h.certificate() && r <= FLAT_H_RATIO)
}

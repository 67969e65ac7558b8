//! Rotationally symmetric model manifolds, radial grids and the finite-volume
//! Laplace–Beltrami operator.
//!
//! A model manifold carries the metric `dr² + ψ(r)² dθ²` on `ℝ^k`. Radial
//! functions only see the surface area `S(r) = ω_{k-1} ψ(r)^{k-1}`, so every
//! operator here is one-dimensional.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::htransform::HProfile;
use crate::quadrature::{rule, GaussRule};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("invalid manifold parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("blend interval [{ra}, {rb}] holds {nodes} grid nodes, need at least {needed}")]
    BlendUnresolved { ra: f64, rb: f64, nodes: usize, needed: usize },
    #[error("weight profile has {found} values, grid has {expected} nodes")]
    WeightLength { expected: usize, found: usize },
    #[error("non-positive weight h = {value} at node {index}")]
    NonPositiveWeight { index: usize, value: f64 },
}

/// Warp function family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warp {
    /// ψ(r) = r.
    Euclidean,
    /// ψ(r) = r near 0 and `(r^{α-1} ln^{α/2} r)^{1/(k-1)}` for large r.
    LogPolynomial { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelManifold {
    dim: usize,
    warp: Warp,
    blend: (f64, f64),
}

/// Area of the unit sphere `S^n ⊂ ℝ^{n+1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    let mut a = if n.is_multiple_of(2) { 2.0 } else { 2.0 * PI };
    let mut m = if n.is_multiple_of(2) { 0 } else { 1 };
    while m < n {
        m += 2;
        a *= 2.0 * PI / (m as f64 - 1.0);
    }
    a
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

pub const DEFAULT_BLEND: (f64, f64) = (1.0, 2.0);

impl ModelManifold {
    pub fn euclidean(dim: usize) -> Result<Self, GeometryError> {
        Self::new(dim, Warp::Euclidean, DEFAULT_BLEND)
    }

    pub fn log_polynomial(dim: usize, alpha: f64) -> Result<Self, GeometryError> {
        Self::new(dim, Warp::LogPolynomial { alpha }, DEFAULT_BLEND)
    }

    pub fn new(dim: usize, warp: Warp, blend: (f64, f64)) -> Result<Self, GeometryError> {
        if dim < 2 {
            return Err(GeometryError::InvalidDimension(dim));
        }
        if let Warp::LogPolynomial { alpha } = warp {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(GeometryError::InvalidParameter(format!(
                    "alpha must be positive, got {alpha}"
                )));
            }
        }
        let (ra, rb) = blend;
        if !(ra >= 1.0 && rb > ra && rb.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "blend interval must satisfy 1 <= ra < rb, got [{ra}, {rb}]"
            )));
        }
        Ok(Self { dim, warp, blend })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn warp(&self) -> Warp {
        self.warp
    }

    pub fn blend(&self) -> (f64, f64) {
        self.blend
    }

    /// ω_{k-1}, the area of the unit sphere in ℝ^k.
    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.dim - 1)
    }

    /// `ψ^{k-1}` of the large-r branch.
    fn large_branch_power(&self, r: f64, alpha: f64) -> f64 {
        if r <= 1.0 {
            return 0.0;
        }
        r.powf(alpha - 1.0) * r.ln().powf(0.5 * alpha)
    }

    pub fn psi(&self, r: f64) -> f64 {
        match self.warp {
            Warp::Euclidean => r,
            Warp::LogPolynomial { alpha } => {
                let (ra, rb) = self.blend;
                let km1 = (self.dim - 1) as f64;
                if r <= ra {
                    r
                } else {
                    let big = self.large_branch_power(r, alpha).powf(1.0 / km1);
                    if r >= rb {
                        big
                    } else {
                        let s = smoothstep((r - ra) / (rb - ra));
                        (1.0 - s) * r + s * big
                    }
                }
            }
        }
    }

    fn area(&self, r: f64) -> f64 {
        let w = self.sphere_area();
        match self.warp {
            Warp::Euclidean => w * r.powi(self.dim as i32 - 1),
            Warp::LogPolynomial { alpha } if r >= self.blend.1 => {
                w * self.large_branch_power(r, alpha)
            }
            _ => w * self.psi(r).powi(self.dim as i32 - 1),
        }
    }

    /// Surface area `S(r)` of the geodesic sphere of radius r.
    pub fn surface_area(&self, r: f64) -> Result<f64, GeometryError> {
        if r < 0.0 || r.is_nan() {
            return Err(GeometryError::NegativeRadius(r));
        }
        Ok(self.area(r))
    }

    /// `∫_a^b S` for 0 ≤ a ≤ b.
    fn area_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let w = self.sphere_area();
        let k = self.dim as i32;
        match self.warp {
            Warp::Euclidean => w * (b.powi(k) - a.powi(k)) / k as f64,
            Warp::LogPolynomial { .. } => {
                let (ra, rb) = self.blend;
                let mut total = 0.0;
                let lo = a.min(ra);
                let hi = b.min(ra);
                if hi > lo {
                    total += w * (hi.powi(k) - lo.powi(k)) / k as f64;
                }
                let lo = a.max(ra);
                let hi = b.min(rb);
                if hi > lo {
                    let g = rule(16);
                    let n = 4;
                    let h = (hi - lo) / n as f64;
                    for i in 0..n {
                        let x0 = lo + i as f64 * h;
                        total += g.integrate(|x| self.area(x), x0, x0 + h);
                    }
                }
                let lo = a.max(rb);
                if b > lo {
                    total += log_panel_integral(rule(16), |x| self.area(x), lo, b);
                }
                total
            }
        }
    }

    /// Riemannian volume `μ₀(B_r) = ∫_0^r S`.
    pub fn ball_volume(&self, r: f64) -> Result<f64, GeometryError> {
        if r < 0.0 || r.is_nan() {
            return Err(GeometryError::NegativeRadius(r));
        }
        Ok(self.area_integral(0.0, r))
    }
}

/// Integrates over [a, b] ⊂ (0, ∞) in the variable ln r with panels of width ≤ 0.25.
fn log_panel_integral<F: Fn(f64) -> f64>(g: &GaussRule, f: F, a: f64, b: f64) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    let n = ((lb - la) / 0.25).ceil().max(1.0) as usize;
    let h = (lb - la) / n as f64;
    (0..n)
        .map(|i| {
            let u0 = la + i as f64 * h;
            g.integrate(
                |u| {
                    let x = u.exp();
                    f(x) * x
                },
                u0,
                u0 + h,
            )
        })
        .sum()
}

/// Parameters of a grid that is uniform on [0, 1] and geometrically stretched beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_max: f64,
    pub dr_inner: f64,
    pub ratio: f64,
    pub dr_max: f64,
}

pub const MAX_STRETCH_RATIO: f64 = 1.02;

/// Radial nodes `0 = r_0 < … < r_M = R_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, GeometryError> {
        if nodes.len() < 3 {
            return Err(GeometryError::InvalidGrid("need at least 3 nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(GeometryError::InvalidGrid("first node must be 0".into()));
        }
        if nodes.iter().any(|r| !r.is_finite()) {
            return Err(GeometryError::InvalidGrid("non-finite node".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(GeometryError::InvalidGrid(format!(
                "nodes not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(r_max: f64, cells: usize) -> Result<Self, GeometryError> {
        if !(r_max > 0.0) || cells < 2 {
            return Err(GeometryError::InvalidGrid(format!(
                "uniform grid needs r_max > 0 and >= 2 cells, got {r_max}, {cells}"
            )));
        }
        let dr = r_max / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|j| j as f64 * dr).collect();
        nodes[cells] = r_max;
        Self::from_nodes(nodes)
    }

    pub fn stretched(spec: &GridSpec) -> Result<Self, GeometryError> {
        let GridSpec { r_max, dr_inner, ratio, dr_max } = *spec;
        if !(r_max > 0.0 && dr_inner > 0.0 && dr_inner <= 0.5 && dr_max >= dr_inner) {
            return Err(GeometryError::InvalidGrid(format!(
                "need r_max > 0, 0 < dr_inner <= 0.5, dr_max >= dr_inner; got {spec:?}"
            )));
        }
        if !(1.0..=MAX_STRETCH_RATIO + 1e-12).contains(&ratio) {
            return Err(GeometryError::InvalidGrid(format!(
                "stretch ratio must lie in [1, {MAX_STRETCH_RATIO}], got {ratio}"
            )));
        }
        let n_inner = (1.0 / dr_inner - 1e-9).ceil() as usize;
        let dr = 1.0 / n_inner as f64;
        if r_max <= 1.0 {
            let cells = (r_max / dr - 1e-9).ceil().max(2.0) as usize;
            return Self::uniform(r_max, cells);
        }
        let mut nodes: Vec<f64> = (0..=n_inner).map(|j| j as f64 * dr).collect();
        nodes[n_inner] = 1.0;
        let mut step = (dr * ratio).min(dr_max);
        loop {
            let last = *nodes.last().unwrap();
            if last + step >= r_max - 0.5 * step {
                nodes.push(r_max);
                break;
            }
            nodes.push(last + step);
            step = (step * ratio).min(dr_max);
        }
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of cells M (= number of nodes − 1 = number of unknowns).
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Interface `r_{j+1/2}` between nodes j and j+1.
    pub fn interface(&self, j: usize) -> f64 {
        0.5 * (self.nodes[j] + self.nodes[j + 1])
    }

    pub fn dr_min(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the node closest to r.
    pub fn nearest(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|x| *x < r);
        if i == 0 {
            0
        } else if i >= self.nodes.len() {
            self.nodes.len() - 1
        } else if r - self.nodes[i - 1] <= self.nodes[i] - r {
            i - 1
        } else {
            i
        }
    }

    /// Grid with every cell bisected.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.r_max());
        Self { nodes }
    }
}

/// Grid plus the geometric quantities of the manifold on it.
#[derive(Debug, Clone)]
pub struct RadialMesh {
    manifold: ModelManifold,
    grid: RadialGrid,
    cell_volumes: Vec<f64>,
    interface_areas: Vec<f64>,
}

pub const MIN_BLEND_NODES: usize = 4;

impl RadialMesh {
    pub fn new(manifold: ModelManifold, grid: RadialGrid) -> Result<Self, GeometryError> {
        if let Warp::LogPolynomial { .. } = manifold.warp {
            let (ra, rb) = manifold.blend;
            if grid.r_max() > ra {
                let nodes = grid.nodes.iter().filter(|r| **r >= ra && **r <= rb).count();
                if nodes < MIN_BLEND_NODES {
                    return Err(GeometryError::BlendUnresolved {
                        ra,
                        rb,
                        nodes,
                        needed: MIN_BLEND_NODES,
                    });
                }
            }
        }
        let m = grid.cells();
        let g = rule(8);
        let piece = |a: f64, b: f64| -> f64 {
            if b <= a {
                0.0
            } else {
                g.integrate(|x| manifold.area(x), a, b)
            }
        };
        let mut cell_volumes = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let r = grid.nodes[j];
            let lo = if j == 0 { 0.0 } else { grid.interface(j - 1) };
            let hi = if j == m { r } else { grid.interface(j) };
            cell_volumes.push(piece(lo, r) + piece(r, hi));
        }
        let interface_areas = (0..m).map(|j| manifold.area(grid.interface(j))).collect();
        Ok(Self { manifold, grid, cell_volumes, interface_areas })
    }

    pub fn manifold(&self) -> &ModelManifold {
        &self.manifold
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    /// Cell volumes for nodes 0..=M; the last is the half cell at the wall.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    pub fn interface_areas(&self) -> &[f64] {
        &self.interface_areas
    }

    /// Number of unknowns (nodes 0..M−1; node M carries the Dirichlet value).
    pub fn unknowns(&self) -> usize {
        self.grid.cells()
    }

    pub fn ball_volume(&self, r: f64) -> Result<f64, GeometryError> {
        self.manifold.ball_volume(r)
    }
}

/// Finite-volume generator on the unknowns 0..M−1 with its cell weights.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub matrix: Tridiagonal,
    /// `W_j = h_j² V_j`, or `V_j` when unweighted.
    pub weights: Vec<f64>,
    /// Node values of h (length M+1) when weighted.
    pub h: Option<Vec<f64>>,
}

impl RadialOperator {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.apply(v)
    }

    /// W-weighted inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
    }

    /// Total weighted mass `Σ W_j v_j`.
    pub fn mass(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(w, x)| w * x).sum()
    }
}

/// Builds the (optionally h-weighted) Laplace–Beltrami operator.
///
/// Interface conductances are `w S(r_{j+1/2}) / (r_{j+1} − r_j)` with
/// `w = h_j h_{j+1}` in the weighted case, and row j is divided by `h_j² V_j`.
/// Node 0 has no inner flux; the value at node M is held at zero.
pub fn laplacian_operator(
    mesh: &RadialMesh,
    weight: Option<&HProfile>,
) -> Result<RadialOperator, GeometryError> {
    let m = mesh.unknowns();
    let nodes = mesh.nodes();
    let h: Option<&[f64]> = match weight {
        None => None,
        Some(p) => {
            let v = p.values();
            if v.len() != m + 1 {
                return Err(GeometryError::WeightLength { expected: m + 1, found: v.len() });
            }
            if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
                return Err(GeometryError::NonPositiveWeight { index: i, value: *x });
            }
            Some(v)
        }
    };
    let cond: Vec<f64> = (0..m)
        .map(|j| {
            let w = h.map_or(1.0, |h| h[j] * h[j + 1]);
            w * mesh.interface_areas[j] / (nodes[j + 1] - nodes[j])
        })
        .collect();
    let weights: Vec<f64> = (0..m)
        .map(|j| {
            let hj = h.map_or(1.0, |h| h[j]);
            hj * hj * mesh.cell_volumes[j]
        })
        .collect();
    let mut t = Tridiagonal::zeros(m);
    for j in 0..m {
        let inner = if j > 0 { cond[j - 1] } else { 0.0 };
        let outer = cond[j];
        t.diag[j] = -(inner + outer) / weights[j];
        if j > 0 {
            t.lower[j] = inner / weights[j];
        }
        if j + 1 < m {
            t.upper[j] = outer / weights[j];
        }
    }
    Ok(RadialOperator {
        matrix: t,
        weights,
        h: h.map(|v| v.to_vec()),
    })
}

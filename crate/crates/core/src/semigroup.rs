//! Linear heat semigroup `e^{tΔ̃}` on the weighted manifold.
//!
//! Backward Euler on the finite-volume generator. The implicit matrix
//! `I − Δt A` is an M-matrix whenever A is a sub-Markov generator, so
//! nonnegative data stay nonnegative and the μ-mass `Σ W_j v_j` cannot grow.
//! Fields live on the unknowns 0..M−1; the wall node is implicitly zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{RadialMesh, RadialOperator};
use crate::tridiag::{Factored, Tridiagonal, TridiagError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error("solver: {0}")]
    Solver(#[from] TridiagError),
    #[error("duration must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("field has {found} values, operator has {expected} unknowns")]
    Length { expected: usize, found: usize },
    #[error("source cell {index} outside 0..{len}")]
    Source { index: usize, len: usize },
    #[error("non-finite value produced at step {step}")]
    NonFinite { step: usize },
}

/// Values on the unknowns at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub t: f64,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { t: 0.0, values }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// `P̃_t(·, x₀)` per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelColumn {
    pub source: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

/// Factored `I − Δt A` for a fixed step.
#[derive(Debug, Clone)]
pub struct BackwardEuler {
    dt: f64,
    factored: Factored,
}

impl BackwardEuler {
    pub fn new(generator: &Tridiagonal, dt: f64) -> Result<Self, SemigroupError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SemigroupError::InvalidStep(dt));
        }
        let m = generator.implicit_matrix(dt);
        m.check_m_matrix()?;
        Ok(Self { dt, factored: m.factor()? })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, v: &mut [f64]) {
        self.factored.solve_in_place(v);
    }

    /// `v ← (I − Δt A)⁻¹ (v + Δt s)`.
    pub fn step_with_source(&self, v: &mut [f64], source: &[f64]) {
        for (a, s) in v.iter_mut().zip(source) {
            *a += self.dt * s;
        }
        self.factored.solve_in_place(v);
    }
}

/// Step count and uniform step for a duration with `Δt ≤ dt_max`.
pub fn uniform_steps(duration: f64, dt_max: f64) -> Result<(usize, f64), SemigroupError> {
    if !(duration > 0.0) {
        return Err(SemigroupError::NonPositiveTime(duration));
    }
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return Err(SemigroupError::InvalidStep(dt_max));
    }
    let n = (duration / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((n, duration / n as f64))
}

/// Default step bound: the smallest cell width.
pub fn default_dt(mesh: &RadialMesh) -> f64 {
    mesh.grid().dr_min()
}

/// Advances `field` by `duration` with backward Euler, `Δt ≤ dt_max`.
/// Returns the field and the μ-mass after every step (entry 0 is the initial mass).
pub fn evolve_linear_tracked(
    field: &RadialField,
    duration: f64,
    op: &RadialOperator,
    dt_max: f64,
) -> Result<(RadialField, Vec<f64>), SemigroupError> {
    if field.values.len() != op.len() {
        return Err(SemigroupError::Length { expected: op.len(), found: field.values.len() });
    }
    let (n, dt) = uniform_steps(duration, dt_max)?;
    let be = BackwardEuler::new(&op.matrix, dt)?;
    let mut v = field.values.clone();
    let mut masses = Vec::with_capacity(n + 1);
    masses.push(op.mass(&v));
    for k in 0..n {
        be.step(&mut v);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SemigroupError::NonFinite { step: k + 1 });
        }
        masses.push(op.mass(&v));
    }
    Ok((RadialField { t: field.t + duration, values: v }, masses))
}

pub fn evolve_linear(
    field: &RadialField,
    duration: f64,
    op: &RadialOperator,
    dt_max: f64,
) -> Result<RadialField, SemigroupError> {
    evolve_linear_tracked(field, duration, op, dt_max).map(|(f, _)| f)
}

/// Unit μ-point mass at `source`: `e_src / W_src`.
pub fn point_mass(op: &RadialOperator, source: usize) -> Result<Vec<f64>, SemigroupError> {
    if source >= op.len() {
        return Err(SemigroupError::Source { index: source, len: op.len() });
    }
    let mut v = vec![0.0; op.len()];
    v[source] = 1.0 / op.weights[source];
    Ok(v)
}

pub fn kernel_column(
    source: usize,
    t: f64,
    op: &RadialOperator,
    dt_max: f64,
) -> Result<KernelColumn, SemigroupError> {
    let f = RadialField::new(point_mass(op, source)?);
    let out = evolve_linear(&f, t, op, dt_max)?;
    Ok(KernelColumn { source, t, values: out.values })
}

/// Columns at increasing `times`, stepping continuously with a fixed `dt`.
/// Each time must be a multiple of `dt` up to rounding; the last step into
/// each sample is shortened otherwise.
pub fn kernel_ladder(
    source: usize,
    times: &[f64],
    op: &RadialOperator,
    dt: f64,
) -> Result<Vec<KernelColumn>, SemigroupError> {
    let mut v = point_mass(op, source)?;
    let be = BackwardEuler::new(&op.matrix, dt)?;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if !(target > t) {
            return Err(SemigroupError::NonPositiveTime(target - t));
        }
        while target - t > 1e-9 * dt {
            if target - t >= dt * (1.0 - 1e-9) {
                be.step(&mut v);
                t += dt;
            } else {
                let short = BackwardEuler::new(&op.matrix, target - t)?;
                short.step(&mut v);
                t = target;
            }
        }
        t = target;
        out.push(KernelColumn { source, t, values: v.clone() });
    }
    Ok(out)
}

/// One rung of the on-diagonal upper bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DueRow {
    pub t: f64,
    pub sup: f64,
    pub ball_measure: f64,
    pub ratio: f64,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DueReport {
    pub rows: Vec<DueRow>,
    /// Max ratio over resolved rungs.
    pub max_ratio: f64,
}

/// Weighted ball measure `Σ W_j` over cells whose node lies within `radius`,
/// with the straddling cell counted fractionally.
fn ball_measure(mesh: &RadialMesh, op: &RadialOperator, radius: f64) -> f64 {
    let grid = mesh.grid();
    let mut acc = 0.0;
    for (j, w) in op.weights.iter().enumerate() {
        let lo = if j == 0 { 0.0 } else { grid.interface(j - 1) };
        let hi = grid.interface(j);
        if hi <= radius {
            acc += w;
        } else {
            if radius > lo {
                acc += w * (radius - lo) / (hi - lo);
            }
            break;
        }
    }
    acc
}

/// `sup_x P̃_t(x, x₀) · μ(B(x₀, √t))` for each column, with `x₀` the origin.
/// Rungs with `t` below one diffusion time of the first cell are flagged and
/// left out of the maximum.
pub fn due_check(columns: &[KernelColumn], mesh: &RadialMesh, op: &RadialOperator) -> DueReport {
    let dr0 = mesh.nodes()[1] - mesh.nodes()[0];
    let rows: Vec<DueRow> = columns
        .iter()
        .map(|c| {
            let sup = c.values.iter().fold(0.0, |a: f64, v| a.max(*v));
            let ball = ball_measure(mesh, op, c.t.sqrt());
            DueRow {
                t: c.t,
                sup,
                ball_measure: ball,
                ratio: sup * ball,
                resolved: c.t >= dr0 * dr0,
            }
        })
        .collect();
    let max_ratio = rows.iter().filter(|r| r.resolved).fold(0.0_f64, |a, r| a.max(r.ratio));
    DueReport { rows, max_ratio }
}

/// Relative weighted L¹ distance `Σ W|a−b| / Σ W|b|`.
pub fn relative_l1(op: &RadialOperator, a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = op.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * (x - y).abs()).sum();
    let den: f64 = op.weights.iter().zip(b).map(|(w, y)| w * y.abs()).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{laplacian_operator, ModelManifold, RadialGrid};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn euclid(r_max: f64, cells: usize) -> (RadialMesh, RadialOperator) {
        let mesh = RadialMesh::new(ModelManifold::euclidean(3).unwrap(), RadialGrid::uniform(r_max, cells).unwrap()).unwrap();
        let op = laplacian_operator(&mesh, None).unwrap();
        (mesh, op)
    }

    #[test]
    fn zero_stays_zero() {
        let (_, op) = euclid(5.0, 50);
        let out = evolve_linear(&RadialField::new(vec![0.0; op.len()]), 1.0, &op, 0.1).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
        assert!((out.t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constants_nearly_invariant_in_interior() {
        let (mesh, op) = euclid(40.0, 400);
        let out = evolve_linear(&RadialField::new(vec![1.0; op.len()]), 0.5, &op, 0.05).unwrap();
        for (r, v) in mesh.nodes().iter().zip(&out.values) {
            if *r < 20.0 {
                assert!((v - 1.0).abs() < 1e-8, "r={r} v={v}");
            }
        }
    }

    #[test]
    fn gaussian_kernel_at_unit_time() {
        let (mesh, op) = euclid(12.0, 600);
        let col = kernel_column(0, 1.0, &op, 1e-3).unwrap();
        let exact: Vec<f64> = mesh.nodes()[..op.len()]
            .iter()
            .map(|r| (4.0 * PI).powf(-1.5) * (-r * r / 4.0).exp())
            .collect();
        let err = relative_l1(&op, &col.values, &exact);
        assert!(err < 0.02, "relative L1 error {err}");
    }

    #[test]
    fn mass_nearly_conserved_on_large_domain() {
        let (_, op) = euclid(60.0, 600);
        let (col, masses) = evolve_linear_tracked(&RadialField::new(point_mass(&op, 0).unwrap()), 10.0, &op, 0.1).unwrap();
        let m = op.mass(&col.values);
        assert!((0.999..=1.0 + 1e-12).contains(&m), "mass {m}");
        assert!(masses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn semigroup_identity() {
        let (_, op) = euclid(20.0, 200);
        let dt = 0.01;
        let direct = kernel_ladder(0, &[2.0], &op, dt).unwrap().pop().unwrap();
        let first = kernel_ladder(0, &[1.0], &op, dt).unwrap().pop().unwrap();
        let mut v = first.values.clone();
        let be = BackwardEuler::new(&op.matrix, dt).unwrap();
        for _ in 0..100 {
            be.step(&mut v);
        }
        let sup = direct.values.iter().fold(0.0, |a: f64, x| a.max(*x));
        let diff = direct.values.iter().zip(&v).fold(0.0, |a: f64, (x, y)| a.max((x - y).abs()));
        assert!(diff / sup < 1e-6, "{}", diff / sup);
    }

    #[test]
    fn small_time_column_concentrates() {
        let (_, op) = euclid(10.0, 200);
        let mut prev = f64::INFINITY;
        for t in [1e-2, 1e-3, 1e-4] {
            let col = kernel_column(10, t, &op, t / 20.0).unwrap();
            let outside: f64 = (0..op.len())
                .filter(|j| (*j as i64 - 10).abs() > 5)
                .map(|j| op.weights[j] * col.values[j])
                .sum();
            assert!(outside < prev);
            prev = outside;
        }
        assert!(prev < 1e-6, "{prev}");
    }

    #[test]
    fn due_ladder_euclidean_constant() {
        let (mesh, op) = euclid(80.0, 800);
        let times: Vec<f64> = (0..5).map(|k| 4f64.powi(k)).collect();
        let cols = kernel_ladder(0, &times, &op, 0.02).unwrap();
        let rep = due_check(&cols, &mesh, &op);
        let c = 1.0 / (3.0 * (4.0 * PI).sqrt());
        for row in rep.rows.iter().filter(|r| r.t >= 4.0) {
            assert!((row.ratio / c - 1.0).abs() < 0.05, "{row:?}");
        }
        assert!(rep.max_ratio < 2.0 * c);
        let early = due_check(&kernel_ladder(0, &[1e-3], &op, 1e-4).unwrap(), &mesh, &op);
        assert!(!early.rows[0].resolved);
        assert_eq!(early.max_ratio, 0.0);
    }

    #[test]
    fn kernel_symmetry() {
        let (_, op) = euclid(10.0, 100);
        let a = kernel_column(3, 0.5, &op, 0.01).unwrap();
        let b = kernel_column(17, 0.5, &op, 0.01).unwrap();
        assert!((a.values[17] - b.values[3]).abs() < 1e-10 * a.values[17].abs().max(1e-300));
    }

    #[test]
    fn rejects_bad_input() {
        let (_, op) = euclid(5.0, 20);
        let f = RadialField::new(vec![0.0; 3]);
        assert!(matches!(evolve_linear(&f, 1.0, &op, 0.1), Err(SemigroupError::Length { .. })));
        let f = RadialField::new(vec![0.0; op.len()]);
        assert!(matches!(evolve_linear(&f, 0.0, &op, 0.1), Err(SemigroupError::NonPositiveTime(_))));
        assert!(matches!(kernel_column(99, 1.0, &op, 0.1), Err(SemigroupError::Source { .. })));
        let mut bad = op.matrix.clone();
        bad.upper[0] = -1.0;
        assert!(matches!(BackwardEuler::new(&bad, 1.0), Err(SemigroupError::Solver(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn positivity_comparison_and_mass(
            data in proptest::collection::vec(0.0f64..2.0, 30),
            bump in proptest::collection::vec(0.0f64..1.0, 30),
            dt in 0.001f64..0.5,
        ) {
            let mesh = RadialMesh::new(ModelManifold::log_polynomial(2, 1.5).unwrap(), RadialGrid::uniform(6.0, 30).unwrap()).unwrap();
            let op = laplacian_operator(&mesh, None).unwrap();
            let lo = RadialField::new(data.clone());
            let hi = RadialField::new(data.iter().zip(&bump).map(|(a, b)| a + b).collect());
            let (a, masses) = evolve_linear_tracked(&lo, 1.0, &op, dt).unwrap();
            let b = evolve_linear(&hi, 1.0, &op, dt).unwrap();
            prop_assert!(a.values.iter().all(|v| *v >= 0.0));
            prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
            prop_assert!(masses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300));
        }
    }
}

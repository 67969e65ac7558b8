//! Phase-diagram sweeps over (p, data amplitude) with a theory exponent
//! attached when one is known for the manifold/potential pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{evolve_nonlinear, EvolutionConfig, EvolutionError, InitialData, OutcomeClass};
use crate::geometry::{GeometryError, GridSpec, ModelManifold, RadialGrid, RadialMesh, Warp};
use crate::htransform::{nonexistence_verdict, solve_h_on_mesh, volume_growth_fit, HError, HProfile, Measure, Verdict};
use crate::output::{fmt_f64, fmt_opt, Csv};
use crate::potentials::{ExponentBundle, PotentialSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("p-grid is empty (min {min}, max {max})")]
    EmptyGrid { min: f64, max: f64 },
    #[error("invalid sweep parameter: {0}")]
    InvalidParameter(String),
    #[error("every sweep point is UNDECIDED; increase the evolution budget")]
    AllUndecided,
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("h-transform: {0}")]
    H(#[from] HError),
    #[error("run at p = {p}, amplitude = {amplitude}: {source}")]
    Run { p: f64, amplitude: f64, source: EvolutionError },
}

pub const DEFAULT_AMPLITUDES: [f64; 3] = [1e-3, 1e-2, 1e-1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub manifold: ModelManifold,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub amplitudes: Vec<f64>,
    /// Gaussian width σ of the data.
    pub width: f64,
    /// Evolution horizon per point.
    pub budget: f64,
    pub u_max: f64,
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(manifold: ModelManifold, potential: PotentialSpec, grid: GridSpec) -> Self {
        Self {
            manifold,
            potential,
            grid,
            p_min: 1.3,
            p_max: 2.2,
            p_step: 0.1,
            amplitudes: DEFAULT_AMPLITUDES.to_vec(),
            width: 1.0,
            budget: 1e3,
            u_max: 1e8,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidParameter(m));
        if !(self.p_min > 1.0 && self.p_max <= 10.0) {
            return bad(format!("p-grid must lie in (1, 10], got [{}, {}]", self.p_min, self.p_max));
        }
        if self.p_max < self.p_min {
            return Err(ExperimentError::EmptyGrid { min: self.p_min, max: self.p_max });
        }
        if !(self.p_step > 0.0) {
            return bad(format!("p_step must be positive, got {}", self.p_step));
        }
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return bad(format!("budget must be positive, got {}", self.budget));
        }
        if self.amplitudes.is_empty() || self.amplitudes.iter().any(|a| !(*a > 0.0)) {
            return bad("data ladder must be non-empty and positive".into());
        }
        if !(self.width > 0.0) {
            return bad(format!("width must be positive, got {}", self.width));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// `p_min + k·step` up to `p_max`, rounded to 12 digits.
    pub fn p_grid(&self) -> Vec<f64> {
        if !(self.p_max >= self.p_min) || !(self.p_step > 0.0) {
            return Vec::new();
        }
        let n = ((self.p_max - self.p_min) / self.p_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| {
                let p = self.p_min + k as f64 * self.p_step;
                (p * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub amplitude: f64,
    pub class: OutcomeClass,
    pub t_blowup: Option<f64>,
    pub sup_final: f64,
    pub boundary_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PClassification {
    pub p: f64,
    pub class: OutcomeClass,
    pub verdict: Option<Verdict>,
    /// Certified nonexistence but classified GLOBAL.
    pub theory_conflict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryExponent {
    pub p_star: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub classes: Vec<PClassification>,
    /// Largest BLOWUP p.
    pub p_lo: Option<f64>,
    /// Smallest GLOBAL p.
    pub p_hi: Option<f64>,
    pub theory: Option<TheoryExponent>,
    /// Total p-width of UNDECIDED grid points.
    pub undecided_band: f64,
    /// BLOWUP and GLOBAL points interleave along p.
    pub repair_flag: bool,
}

impl SweepReport {
    pub fn bracket(&self) -> Option<(f64, f64)> {
        Some((self.p_lo?, self.p_hi?))
    }

    pub fn class_at(&self, p: f64) -> Option<OutcomeClass> {
        self.classes.iter().find(|c| (c.p - p).abs() < 1e-9).map(|c| c.class)
    }
}

/// Critical exponent for the configured pair when a closed form is known.
pub fn theory_exponent(manifold: &ModelManifold, potential: &PotentialSpec) -> Option<TheoryExponent> {
    let n = manifold.dim();
    match (manifold.warp(), potential) {
        (Warp::Euclidean, PotentialSpec::Zero) => Some(TheoryExponent {
            p_star: 1.0 + 2.0 / n as f64,
            provenance: format!("Fujita exponent 1 + 2/N, N = {n}"),
        }),
        (Warp::Euclidean, pot) => pot.theory_exponent(n).map(|p_star| TheoryExponent {
            p_star,
            provenance: "1 + 2/(N + alpha(omega)) for the inverse-square tail".into(),
        }),
        (Warp::LogPolynomial { alpha }, PotentialSpec::Zero) => Some(TheoryExponent {
            p_star: 1.0 + 2.0 / alpha,
            provenance: format!("volume law r^alpha ln^(alpha/2) r, alpha = {alpha}"),
        }),
        _ => None,
    }
}

/// Per-p class: GLOBAL if any datum stays global (small-data existence),
/// else BLOWUP if any datum blows up, else UNDECIDED.
pub fn aggregate_class(classes: &[OutcomeClass]) -> OutcomeClass {
    if classes.contains(&OutcomeClass::Global) {
        OutcomeClass::Global
    } else if classes.contains(&OutcomeClass::Blowup) {
        OutcomeClass::Blowup
    } else {
        OutcomeClass::Undecided
    }
}

fn run_point(cfg: &SweepConfig, mesh: &RadialMesh, h: &HProfile, p: f64, amplitude: f64) -> Result<SweepPoint, ExperimentError> {
    let mut ec = EvolutionConfig::new(p, InitialData::Gaussian { amplitude, width: cfg.width });
    ec.t_max = cfg.budget;
    ec.u_max = cfg.u_max;
    let o = evolve_nonlinear(&ec, mesh, h).map_err(|source| ExperimentError::Run { p, amplitude, source })?;
    Ok(SweepPoint {
        p,
        amplitude,
        class: o.class,
        t_blowup: o.t_blowup,
        sup_final: o.sup_final,
        boundary_flag: o.boundary_flag,
    })
}

pub fn fujita_sweep(cfg: &SweepConfig) -> Result<SweepReport, ExperimentError> {
    cfg.validate()?;
    let ps = cfg.p_grid();
    if ps.is_empty() {
        return Err(ExperimentError::EmptyGrid { min: cfg.p_min, max: cfg.p_max });
    }
    cfg.potential.validate().map_err(HError::from)?;
    let mesh = RadialMesh::new(cfg.manifold, RadialGrid::stretched(&cfg.grid)?)?;
    let h = solve_h_on_mesh(&mesh, &cfg.potential)?;

    // static partition: worker w takes a contiguous block of the p-grid
    let workers = cfg.workers.min(ps.len());
    let block = ps.len().div_ceil(workers);
    let chunks: Vec<&[f64]> = ps.chunks(block).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::InvalidParameter(e.to_string()))?;
    let results: Vec<Result<Vec<SweepPoint>, ExperimentError>> = pool.install(|| {
        chunks
            .par_iter()
            .map(|chunk| {
                let mut out = Vec::new();
                for &p in *chunk {
                    for &a in &cfg.amplitudes {
                        out.push(run_point(cfg, &mesh, &h, p, a)?);
                    }
                }
                Ok(out)
            })
            .collect()
    });
    let mut points = Vec::with_capacity(ps.len() * cfg.amplitudes.len());
    for r in results {
        points.extend(r?);
    }

    let fit = volume_growth_fit(&mesh, &h, Measure::Nu).ok();
    let classes: Vec<PClassification> = ps
        .iter()
        .map(|&p| {
            let cs: Vec<OutcomeClass> = points.iter().filter(|x| x.p == p).map(|x| x.class).collect();
            let class = aggregate_class(&cs);
            let verdict = match (&fit, ExponentBundle::new(p)) {
                (Some(f), Ok(b)) => Some(nonexistence_verdict(&b, f)),
                _ => None,
            };
            PClassification {
                p,
                class,
                verdict,
                theory_conflict: verdict == Some(Verdict::NonexistenceCertified) && class == OutcomeClass::Global,
            }
        })
        .collect();
    summarize(points, classes, cfg.p_step, theory_exponent(&cfg.manifold, &cfg.potential))
}

fn summarize(
    points: Vec<SweepPoint>,
    classes: Vec<PClassification>,
    step: f64,
    theory: Option<TheoryExponent>,
) -> Result<SweepReport, ExperimentError> {
    if classes.iter().all(|c| c.class == OutcomeClass::Undecided) {
        return Err(ExperimentError::AllUndecided);
    }
    let of = |k: OutcomeClass| classes.iter().filter(move |c| c.class == k).map(|c| c.p);
    let (mut p_lo, mut p_hi) = (of(OutcomeClass::Blowup).reduce(f64::max), of(OutcomeClass::Global).reduce(f64::min));
    let repair_flag = matches!((p_lo, p_hi), (Some(a), Some(b)) if a >= b);
    if classes.len() == 1 {
        p_lo = Some(classes[0].p);
        p_hi = Some(classes[0].p);
    }
    let undecided_band = of(OutcomeClass::Undecided).count() as f64 * step;
    Ok(SweepReport { points, classes, p_lo, p_hi, theory, undecided_band, repair_flag })
}

pub const SWEEP_CSV_HEADER: [&str; 6] = ["p", "amplitude", "class", "t_blowup", "sup_final", "boundary_flag"];

pub fn render_csv(report: &SweepReport) -> String {
    let mut csv = Csv::new(&SWEEP_CSV_HEADER);
    for x in &report.points {
        csv.row(&[
            fmt_f64(x.p),
            fmt_f64(x.amplitude),
            x.class.label().to_string(),
            fmt_opt(x.t_blowup),
            fmt_f64(x.sup_final),
            (x.boundary_flag as u8).to_string(),
        ]);
    }
    csv.into_string()
}

pub fn render_json(report: &SweepReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    /// (p, class code) with BLOWUP = −1, UNDECIDED = 0, GLOBAL = 1.
    pub points: Vec<(f64, i32)>,
    pub theory_line: Option<f64>,
}

pub fn plot_data(report: &SweepReport) -> PlotData {
    PlotData {
        points: report.classes.iter().map(|c| (c.p, c.class.code())).collect(),
        theory_line: report.theory.as_ref().map(|t| t.p_star),
    }
}

/// Writes `sweep.csv`, `sweep.json` and `sweep_plot.json` into `dir`.
pub fn write_report(report: &SweepReport, dir: &std::path::Path) -> std::io::Result<()> {
    use crate::output::atomic_write;
    atomic_write(&dir.join("sweep.csv"), render_csv(report).as_bytes())?;
    atomic_write(&dir.join("sweep.json"), render_json(report).as_bytes())?;
    let plot = serde_json::to_string_pretty(&plot_data(report)).expect("plot serializes");
    atomic_write(&dir.join("sweep_plot.json"), plot.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SweepConfig {
        let mut c = SweepConfig::new(
            ModelManifold::euclidean(3).unwrap(),
            PotentialSpec::Zero,
            GridSpec { r_max: 200.0, dr_inner: 0.05, ratio: 1.01, dr_max: 0.5 },
        );
        c.amplitudes = vec![0.01];
        c
    }

    #[test]
    fn grid_generation() {
        let c = small_cfg();
        let g = c.p_grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 1.3);
        assert_eq!(g[9], 2.2);
        let mut c = small_cfg();
        c.p_max = 1.2;
        assert!(matches!(fujita_sweep(&c), Err(ExperimentError::EmptyGrid { .. })));
        c.p_min = 1.0;
        assert!(fujita_sweep(&c).is_err());
    }

    #[test]
    fn aggregation_rule() {
        use OutcomeClass::*;
        assert_eq!(aggregate_class(&[Blowup, Global]), Global);
        assert_eq!(aggregate_class(&[Undecided, Blowup]), Blowup);
        assert_eq!(aggregate_class(&[Undecided]), Undecided);
    }

    fn class_row(p: f64, class: OutcomeClass) -> PClassification {
        PClassification { p, class, verdict: None, theory_conflict: false }
    }

    #[test]
    fn summary_brackets_and_repair() {
        use OutcomeClass::*;
        let r = summarize(
            vec![],
            vec![class_row(1.4, Blowup), class_row(1.5, Undecided), class_row(1.6, Global)],
            0.1,
            None,
        )
        .unwrap();
        assert_eq!(r.bracket(), Some((1.4, 1.6)));
        assert!(!r.repair_flag);
        assert!((r.undecided_band - 0.1).abs() < 1e-12);
        let r = summarize(vec![], vec![class_row(1.4, Global), class_row(1.6, Blowup)], 0.2, None).unwrap();
        assert!(r.repair_flag);
        let r = summarize(vec![], vec![class_row(1.4, Blowup)], 0.1, None).unwrap();
        assert_eq!(r.bracket(), Some((1.4, 1.4)));
        assert_eq!(
            summarize(vec![], vec![class_row(1.4, Undecided)], 0.1, None),
            Err(ExperimentError::AllUndecided)
        );
    }

    #[test]
    fn theory_exponents() {
        let e = ModelManifold::euclidean(3).unwrap();
        assert!((theory_exponent(&e, &PotentialSpec::Zero).unwrap().p_star - 5.0 / 3.0).abs() < 1e-12);
        let hardy = PotentialSpec::HardyExample { dim: 3, omega: -0.25 };
        assert!((theory_exponent(&e, &hardy).unwrap().p_star - 1.8).abs() < 1e-12);
        let lp = ModelManifold::log_polynomial(3, 3.0).unwrap();
        assert!((theory_exponent(&lp, &PotentialSpec::Zero).unwrap().p_star - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_sweep_is_deterministic_and_parallel_invariant() {
        let mut c = small_cfg();
        c.p_min = 1.4;
        c.p_max = 2.0;
        c.p_step = 0.6;
        let a = fujita_sweep(&c).unwrap();
        c.workers = 2;
        let b = fujita_sweep(&c).unwrap();
        assert_eq!(render_json(&a), render_json(&b));
        assert_eq!(a.class_at(1.4), Some(OutcomeClass::Blowup));
        assert_eq!(a.class_at(2.0), Some(OutcomeClass::Global));
        assert_eq!(a.bracket(), Some((1.4, 2.0)));
        assert!(a.classes.iter().all(|c| !c.theory_conflict));
        let csv = render_csv(&a);
        assert_eq!(csv.lines().count(), 1 + 2);
        assert!(csv.starts_with("p,amplitude,class,t_blowup,sup_final,boundary_flag\n"));
        let plot = plot_data(&a);
        assert_eq!(plot.points, vec![(1.4, -1), (2.0, 1)]);
    }
}

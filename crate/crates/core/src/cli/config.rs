//! Experiment configuration files.
//!
//! A TOML document with a `version` key and flat sections. Each section is
//! read key by key so that every problem in a file is reported at once, with
//! its section and key.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::duhamel::{DuhamelConfig, DEFAULT_DELTA, DEFAULT_SAMPLE_TIMES};
use crate::evolution::{EvolutionConfig, InitialData, DEFAULT_T_MAX, DEFAULT_U_MAX};
use crate::experiments::{SweepConfig, DEFAULT_AMPLITUDES};
use crate::geometry::{GridSpec, ModelManifold, RadialGrid, Warp, DEFAULT_BLEND};
use crate::potentials::PotentialSpec;
use crate::testfunctional::DEFAULT_LADDER;

pub const CONFIG_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub section: String,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.section.is_empty(), self.key.is_empty()) {
            (true, _) => write!(f, "{}: {}", self.key, self.message),
            (false, true) => write!(f, "[{}]: {}", self.section, self.message),
            (false, false) => write!(f, "[{}] {}: {}", self.section, self.key, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("TOML syntax: {0}")]
    Syntax(String),
    #[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Uniform,
    Stretched,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldSection {
    pub kind: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub blend: [f64; 2],
    pub grid: GridKind,
    pub r_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dr_inner: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dr_max: Option<f64>,
}

impl ManifoldSection {
    pub fn manifold(&self) -> ModelManifold {
        let warp = match self.alpha {
            Some(alpha) if self.kind == "log_polynomial" => Warp::LogPolynomial { alpha },
            _ => Warp::Euclidean,
        };
        ModelManifold::new(self.dim, warp, (self.blend[0], self.blend[1])).expect("validated at parse time")
    }

    pub fn grid(&self) -> RadialGrid {
        match self.grid {
            GridKind::Uniform => RadialGrid::uniform(self.r_max, self.cells.unwrap_or(0)),
            GridKind::Stretched => RadialGrid::stretched(&self.grid_spec()),
        }
        .expect("validated at parse time")
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            r_max: self.r_max,
            dr_inner: self.dr_inner.unwrap_or(f64::NAN),
            ratio: self.ratio.unwrap_or(f64::NAN),
            dr_max: self.dr_max.unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionSection {
    pub p: f64,
    pub amplitude: f64,
    pub width: f64,
    pub t_max: f64,
    pub u_max: f64,
    pub decay_window: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_dt: Option<f64>,
}

impl EvolutionSection {
    pub fn config(&self) -> EvolutionConfig {
        let mut c = EvolutionConfig::new(self.p, InitialData::Gaussian { amplitude: self.amplitude, width: self.width });
        c.t_max = self.t_max;
        c.u_max = self.u_max;
        c.decay_window = self.decay_window;
        c.dt_max = self.dt_max;
        c.fixed_dt = self.fixed_dt;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSection {
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub amplitudes: Vec<f64>,
    pub width: f64,
    pub budget: f64,
    pub u_max: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuhamelSection {
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub delta: f64,
    pub source: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub sample_times: Vec<f64>,
    /// Volume law `r^{P'} ln^{Q'} r` for the time-integral trace; defaults
    /// to `P' = P`, `Q' = Q + 1/2`.
    pub trace_p: f64,
    pub trace_q: f64,
    pub trace_horizons: Vec<f64>,
}

impl DuhamelSection {
    pub fn config(&self, full_grid: bool) -> DuhamelConfig {
        DuhamelConfig {
            p: self.p,
            lambda: self.lambda,
            delta: self.delta,
            source: self.source,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            sample_times: self.sample_times.clone(),
            full_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestfnSection {
    pub p: f64,
    pub eps: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub ladder: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSection {
    pub source: usize,
    pub times: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszSection {
    pub r_min: f64,
    pub r_max: f64,
    pub per_decade: usize,
    pub stride: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_hint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSection {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub version: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSection>,
    pub potential: PotentialSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duhamel: Option<DuhamelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub testfn: Option<TestfnSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub riesz: Option<RieszSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

impl ExperimentConfig {
    pub fn sweep_config(&self, workers: Option<usize>) -> Option<SweepConfig> {
        let (m, s) = (self.manifold.as_ref()?, self.sweep.as_ref()?);
        let mut c = SweepConfig::new(m.manifold(), self.potential.clone(), m.grid_spec());
        c.p_min = s.p_min;
        c.p_max = s.p_max;
        c.p_step = s.p_step;
        c.amplitudes = s.amplitudes.clone();
        c.width = s.width;
        c.budget = s.budget;
        c.u_max = s.u_max;
        c.workers = workers.unwrap_or(s.workers);
        Some(c)
    }
}

struct Reader<'a> {
    section: &'static str,
    table: &'a Table,
    used: BTreeSet<&'static str>,
    issues: &'a mut Vec<ConfigIssue>,
}

impl<'a> Reader<'a> {
    fn new(section: &'static str, table: &'a Table, issues: &'a mut Vec<ConfigIssue>) -> Self {
        Self { section, table, used: BTreeSet::new(), issues }
    }

    fn issue(&mut self, key: &str, message: impl Into<String>) {
        self.issues.push(ConfigIssue { section: self.section.into(), key: key.into(), message: message.into() });
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.get(key)
    }

    fn opt_f64(&mut self, key: &'static str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.issue(key, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn req_f64(&mut self, key: &'static str) -> f64 {
        match self.opt_f64(key) {
            Some(x) => x,
            None => {
                if !self.table.contains_key(key) {
                    self.issue(key, "missing required key");
                }
                f64::NAN
            }
        }
    }

    fn opt_usize(&mut self, key: &'static str) -> Option<usize> {
        match self.raw(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(i) => {
                self.issue(key, format!("must be non-negative, got {i}"));
                None
            }
            other => {
                self.issue(key, format!("expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn usize_or(&mut self, key: &'static str, default: usize) -> usize {
        self.opt_usize(key).unwrap_or(default)
    }

    fn opt_str(&mut self, key: &'static str) -> Option<String> {
        match self.raw(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.issue(key, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn list<T>(&mut self, key: &'static str, conv: fn(&Value) -> Option<T>, what: &str) -> Option<Vec<T>> {
        match self.raw(key)? {
            Value::Array(a) => {
                let out: Option<Vec<T>> = a.iter().map(conv).collect();
                if out.is_none() {
                    self.issue(key, format!("expected an array of {what}"));
                }
                out
            }
            other => {
                self.issue(key, format!("expected an array, found {}", other.type_str()));
                None
            }
        }
    }

    fn f64_list(&mut self, key: &'static str) -> Option<Vec<f64>> {
        self.list(key, as_f64, "numbers")
    }

    fn usize_list(&mut self, key: &'static str) -> Option<Vec<usize>> {
        self.list(key, |v| v.as_integer().filter(|i| *i >= 0).map(|i| i as usize), "non-negative integers")
    }

    fn positive(&mut self, key: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) && !v.is_nan() {
            self.issue(key, format!("must be positive, got {v}"));
        }
    }

    fn exponent(&mut self, key: &str, p: f64) {
        if !(p > 1.0) && !p.is_nan() {
            self.issue(key, format!("p must exceed 1, got {p}"));
        }
    }

    fn finish(self) {
        let unknown: Vec<String> = self
            .table
            .keys()
            .filter(|k| !self.used.contains(k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.issues.push(ConfigIssue {
                section: self.section.into(),
                key: k,
                message: format!("unknown key in section [{}]", self.section),
            });
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

const SECTIONS: [&str; 10] =
    ["manifold", "potential", "evolution", "sweep", "duhamel", "testfn", "kernel", "riesz", "output", "version"];

fn read_manifold(t: &Table, issues: &mut Vec<ConfigIssue>) -> ManifoldSection {
    let mut r = Reader::new("manifold", t, issues);
    let kind = r.opt_str("kind").unwrap_or_else(|| "euclidean".into());
    let dim = r.usize_or("dim", 3);
    let alpha = r.opt_f64("alpha");
    let blend = match r.f64_list("blend") {
        Some(b) if b.len() == 2 => [b[0], b[1]],
        Some(_) => {
            r.issue("blend", "expected two radii [inner, outer]");
            [DEFAULT_BLEND.0, DEFAULT_BLEND.1]
        }
        None => [DEFAULT_BLEND.0, DEFAULT_BLEND.1],
    };
    let grid = match r.opt_str("grid").as_deref() {
        None | Some("stretched") => GridKind::Stretched,
        Some("uniform") => GridKind::Uniform,
        Some(other) => {
            r.issue("grid", format!("expected \"uniform\" or \"stretched\", got \"{other}\""));
            GridKind::Stretched
        }
    };
    let r_max = r.req_f64("r_max");
    let cells = r.opt_usize("cells");
    let dr_inner = r.opt_f64("dr_inner");
    let ratio = r.opt_f64("ratio");
    let dr_max = r.opt_f64("dr_max");
    let sec = ManifoldSection { kind, dim, alpha, blend, grid, r_max, cells, dr_inner, ratio, dr_max };
    match sec.kind.as_str() {
        "euclidean" => {
            if alpha.is_some() {
                r.issue("alpha", "only valid for kind = \"log_polynomial\"");
            }
        }
        "log_polynomial" => {
            if alpha.is_none() {
                r.issue("alpha", "missing required key for kind = \"log_polynomial\"");
            }
        }
        other => r.issue("kind", format!("expected \"euclidean\" or \"log_polynomial\", got \"{other}\"")),
    }
    let warp = match alpha {
        Some(alpha) if sec.kind == "log_polynomial" => Warp::LogPolynomial { alpha },
        _ => Warp::Euclidean,
    };
    if let Err(e) = ModelManifold::new(dim, warp, (blend[0], blend[1])) {
        r.issue("dim", e.to_string());
    }
    match grid {
        GridKind::Uniform => {
            if cells.is_none() {
                r.issue("cells", "missing required key for grid = \"uniform\"");
            }
            for k in ["dr_inner", "ratio", "dr_max"] {
                if t.contains_key(k) {
                    r.issue(k, "only valid for grid = \"stretched\"");
                }
            }
            if let (Some(c), true) = (cells, r_max.is_finite()) {
                if let Err(e) = RadialGrid::uniform(r_max, c) {
                    r.issue("cells", e.to_string());
                }
            }
        }
        GridKind::Stretched => {
            if cells.is_some() {
                r.issue("cells", "only valid for grid = \"uniform\"");
            }
            for (k, v) in [("dr_inner", dr_inner), ("ratio", ratio), ("dr_max", dr_max)] {
                if v.is_none() {
                    r.issue(k, "missing required key for grid = \"stretched\"");
                }
            }
            if let (Some(_), Some(_), Some(_), true) = (dr_inner, ratio, dr_max, r_max.is_finite()) {
                if let Err(e) = RadialGrid::stretched(&sec.grid_spec()) {
                    r.issue("ratio", e.to_string());
                }
            }
        }
    }
    r.finish();
    sec
}

fn read_potential(t: &Table, dim: usize, issues: &mut Vec<ConfigIssue>) -> PotentialSpec {
    let mut r = Reader::new("potential", t, issues);
    let family = r.opt_str("family").unwrap_or_else(|| "zero".into());
    let spec = match family.as_str() {
        "zero" => PotentialSpec::Zero,
        "inverse_power" => PotentialSpec::InversePower { omega: r.req_f64("omega"), b: r.req_f64("b") },
        "regularized_inverse_square" => {
            PotentialSpec::RegularizedInverseSquare { omega: r.req_f64("omega"), theta: r.req_f64("theta") }
        }
        "hardy_example" => PotentialSpec::HardyExample { dim: r.usize_or("dim", dim), omega: r.req_f64("omega") },
        "tabulated" => PotentialSpec::Tabulated {
            radii: r.f64_list("radii").unwrap_or_default(),
            values: r.f64_list("values").unwrap_or_default(),
        },
        other => {
            r.issue("family", format!("unknown potential family \"{other}\""));
            PotentialSpec::Zero
        }
    };
    let has_nan = match &spec {
        PotentialSpec::InversePower { omega, b } => omega.is_nan() || b.is_nan(),
        PotentialSpec::RegularizedInverseSquare { omega, theta } => omega.is_nan() || theta.is_nan(),
        PotentialSpec::HardyExample { omega, .. } => omega.is_nan(),
        _ => false,
    };
    if !has_nan {
        if let Err(e) = spec.validate() {
            r.issue("family", e.to_string());
        }
    }
    r.finish();
    spec
}

fn read_evolution(t: &Table, issues: &mut Vec<ConfigIssue>) -> EvolutionSection {
    let mut r = Reader::new("evolution", t, issues);
    let s = EvolutionSection {
        p: r.req_f64("p"),
        amplitude: r.req_f64("amplitude"),
        width: r.f64_or("width", 1.0),
        t_max: r.f64_or("t_max", DEFAULT_T_MAX),
        u_max: r.f64_or("u_max", DEFAULT_U_MAX),
        decay_window: r.f64_or("decay_window", 0.1),
        dt_max: r.opt_f64("dt_max"),
        fixed_dt: r.opt_f64("fixed_dt"),
    };
    r.exponent("p", s.p);
    r.positive("amplitude", s.amplitude);
    r.positive("width", s.width);
    r.positive("t_max", s.t_max);
    if s.p > 1.0 && s.amplitude > 0.0 && s.width > 0.0 && s.t_max > 0.0 {
        if let Err(e) = s.config().validate() {
            r.issue("", e.to_string());
        }
    }
    r.finish();
    s
}

fn read_sweep(t: &Table, issues: &mut Vec<ConfigIssue>) -> SweepSection {
    let mut r = Reader::new("sweep", t, issues);
    let s = SweepSection {
        p_min: r.req_f64("p_min"),
        p_max: r.req_f64("p_max"),
        p_step: r.f64_or("p_step", 0.1),
        amplitudes: r.f64_list("amplitudes").unwrap_or_else(|| DEFAULT_AMPLITUDES.to_vec()),
        width: r.f64_or("width", 1.0),
        budget: r.f64_or("budget", DEFAULT_T_MAX),
        u_max: r.f64_or("u_max", DEFAULT_U_MAX),
        workers: r.usize_or("workers", 1),
    };
    r.exponent("p_min", s.p_min);
    if s.p_max > 10.0 {
        r.issue("p_max", format!("must not exceed 10, got {}", s.p_max));
    }
    if s.p_max < s.p_min {
        r.issue("p_max", format!("p-grid is empty: p_max {} < p_min {}", s.p_max, s.p_min));
    }
    r.positive("p_step", s.p_step);
    r.positive("budget", s.budget);
    r.positive("width", s.width);
    if s.amplitudes.is_empty() || s.amplitudes.iter().any(|a| !(*a > 0.0)) {
        r.issue("amplitudes", "must be a non-empty list of positive amplitudes");
    }
    if s.workers == 0 {
        r.issue("workers", "must be at least 1");
    }
    r.finish();
    s
}

fn read_duhamel(t: &Table, issues: &mut Vec<ConfigIssue>) -> DuhamelSection {
    let mut r = Reader::new("duhamel", t, issues);
    let s = DuhamelSection {
        p: r.req_f64("p"),
        lambda: r.opt_f64("lambda"),
        delta: r.f64_or("delta", DEFAULT_DELTA),
        source: r.usize_or("source", 0),
        tolerance: r.f64_or("tolerance", 1e-8),
        max_iterations: r.usize_or("max_iterations", 30),
        sample_times: r.f64_list("sample_times").unwrap_or_else(|| DEFAULT_SAMPLE_TIMES.to_vec()),
        trace_p: r.f64_or("trace_p", f64::NAN),
        trace_q: r.f64_or("trace_q", f64::NAN),
        trace_horizons: r.f64_list("trace_horizons").unwrap_or_else(|| vec![1e4, 1e6, 1e8]),
    };
    r.exponent("p", s.p);
    if s.p > 1.0 {
        if let Err(e) = s.config(false).validate() {
            r.issue("", e.to_string());
        }
    }
    let s = DuhamelSection {
        trace_p: if s.trace_p.is_nan() { 2.0 / (s.p - 1.0) } else { s.trace_p },
        trace_q: if s.trace_q.is_nan() { 1.0 / (s.p - 1.0) + 0.5 } else { s.trace_q },
        ..s
    };
    r.positive("trace_p", s.trace_p);
    if !(s.trace_q >= 0.0) && !s.trace_q.is_nan() {
        r.issue("trace_q", format!("must be non-negative, got {}", s.trace_q));
    }
    r.finish();
    s
}

fn read_testfn(t: &Table, issues: &mut Vec<ConfigIssue>) -> TestfnSection {
    let mut r = Reader::new("testfn", t, issues);
    let s = TestfnSection {
        p: r.req_f64("p"),
        eps: r.f64_or("eps", 0.0),
        delta1: r.f64_or("delta1", 0.0),
        delta2: r.f64_or("delta2", 0.0),
        ladder: r.usize_list("ladder").unwrap_or_else(|| DEFAULT_LADDER.to_vec()),
    };
    r.exponent("p", s.p);
    if s.ladder.len() < 5 || s.ladder.iter().any(|i| *i < 2) || s.ladder.windows(2).any(|w| w[1] <= w[0]) {
        r.issue("ladder", "needs at least 5 increasing indices, each >= 2");
    }
    r.finish();
    s
}

fn read_kernel(t: &Table, issues: &mut Vec<ConfigIssue>) -> KernelSection {
    let mut r = Reader::new("kernel", t, issues);
    let s = KernelSection {
        source: r.usize_or("source", 0),
        times: r.f64_list("times").unwrap_or_else(|| vec![0.01, 0.1, 1.0, 10.0, 100.0]),
        dt: r.opt_f64("dt"),
    };
    if s.times.is_empty() || s.times.iter().any(|t| !(*t > 0.0)) || s.times.windows(2).any(|w| w[1] <= w[0]) {
        r.issue("times", "must be positive and increasing");
    }
    if let Some(dt) = s.dt {
        r.positive("dt", dt);
    }
    r.finish();
    s
}

fn read_riesz(t: &Table, issues: &mut Vec<ConfigIssue>) -> RieszSection {
    let mut r = Reader::new("riesz", t, issues);
    let s = RieszSection {
        r_min: r.f64_or("r_min", 1e-3),
        r_max: r.f64_or("r_max", 1e4),
        per_decade: r.usize_or("per_decade", 24),
        stride: r.usize_or("stride", 4),
        decay_hint: r.opt_f64("decay_hint"),
    };
    r.positive("r_min", s.r_min);
    if !(s.r_max > s.r_min) {
        r.issue("r_max", format!("must exceed r_min, got {}", s.r_max));
    }
    if s.per_decade < 4 {
        r.issue("per_decade", "must be at least 4");
    }
    if s.stride == 0 {
        r.issue("stride", "must be at least 1");
    }
    r.finish();
    s
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut issues = Vec::new();
    let version = match doc.get("version") {
        Some(Value::Integer(v)) if *v == CONFIG_VERSION => *v,
        Some(v) => {
            issues.push(ConfigIssue {
                section: String::new(),
                key: "version".into(),
                message: format!("unsupported version {v}, expected {CONFIG_VERSION}"),
            });
            CONFIG_VERSION
        }
        None => {
            issues.push(ConfigIssue { section: String::new(), key: "version".into(), message: "missing required key".into() });
            CONFIG_VERSION
        }
    };
    for k in doc.keys() {
        if !SECTIONS.contains(&k.as_str()) {
            issues.push(ConfigIssue { section: String::new(), key: k.clone(), message: "unknown section".into() });
        }
    }
    let table = |name: &str, issues: &mut Vec<ConfigIssue>| -> Option<Table> {
        match doc.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t.clone()),
            Some(_) => {
                issues.push(ConfigIssue { section: name.into(), key: String::new(), message: "expected a table".into() });
                None
            }
        }
    };
    let manifold = table("manifold", &mut issues).map(|t| read_manifold(&t, &mut issues));
    let dim = manifold.as_ref().map_or(3, |m| m.dim);
    let potential = table("potential", &mut issues).map_or(PotentialSpec::Zero, |t| read_potential(&t, dim, &mut issues));
    let evolution = table("evolution", &mut issues).map(|t| read_evolution(&t, &mut issues));
    let sweep = table("sweep", &mut issues).map(|t| read_sweep(&t, &mut issues));
    let duhamel = table("duhamel", &mut issues).map(|t| read_duhamel(&t, &mut issues));
    let testfn = table("testfn", &mut issues).map(|t| read_testfn(&t, &mut issues));
    let kernel = table("kernel", &mut issues).map(|t| read_kernel(&t, &mut issues));
    let riesz = table("riesz", &mut issues).map(|t| read_riesz(&t, &mut issues));
    let output = table("output", &mut issues).map(|t| {
        let mut r = Reader::new("output", &t, &mut issues);
        let dir = r.opt_str("dir").unwrap_or_else(|| "out".into());
        r.finish();
        OutputSection { dir }
    });
    if !issues.is_empty() {
        return Err(ConfigError::Invalid(issues));
    }
    Ok(ExperimentConfig { version, manifold, potential, evolution, sweep, duhamel, testfn, kernel, riesz, output })
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_str(&text)
}

/// Normalized TOML with every defaulted key written out.
pub fn render(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

//! Subcommand pipelines. Each writes its artifacts atomically into the
//! output directory and reports a short summary line.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, GridKind, ManifoldSection};
use super::Command;
use crate::duhamel::{kernel_time_integral, DuhamelContext, PicardStatus, ENVELOPE_INEQUALITY};
use crate::evolution::evolve_nonlinear;
use crate::experiments::{fujita_sweep, write_report};
use crate::geometry::{laplacian_operator, RadialMesh};
use crate::htransform::{
    check_condition_h, flat_profile_check, nonexistence_verdict, solve_h_on_mesh, volume_growth_fit, HProfile, Measure,
    MeasureWeights,
};
use crate::output::{atomic_write, fmt_f64, fmt_opt, Csv};
use crate::potentials::ExponentBundle;
use crate::riesz::{green_bounded_sup_i2, hmv_condition_ratio, riesz_profile, RadialFunction};
use crate::semigroup::{default_dt, due_check, kernel_ladder};
use crate::testfunctional::{ladder, plain_slope, VolumeLaw};

#[derive(Debug, thiserror::Error)]
pub enum DispatchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Science(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl DispatchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            DispatchError::Usage(_) => 2,
            DispatchError::Science(_) | DispatchError::Io(_) => 1,
        }
    }
}

fn science<E: std::fmt::Display>(e: E) -> DispatchError {
    DispatchError::Science(e.to_string())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub slow: bool,
}

fn manifold(cfg: &ExperimentConfig) -> Result<&ManifoldSection, DispatchError> {
    cfg.manifold.as_ref().ok_or_else(|| DispatchError::Usage("config needs a [manifold] section".into()))
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, DispatchError> {
    s.as_ref().ok_or_else(|| DispatchError::Usage(format!("config needs a [{name}] section")))
}

fn mesh_and_h(cfg: &ExperimentConfig) -> Result<(RadialMesh, HProfile), DispatchError> {
    let m = manifold(cfg)?;
    let mesh = RadialMesh::new(m.manifold(), m.grid()).map_err(science)?;
    let h = solve_h_on_mesh(&mesh, &cfg.potential).map_err(science)?;
    Ok((mesh, h))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DispatchError> {
    let mut s = serde_json::to_string_pretty(value).map_err(science)?;
    s.push('\n');
    Ok(atomic_write(path, s.as_bytes())?)
}

pub fn dispatch(cmd: Command, cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<String, DispatchError> {
    match cmd {
        Command::Hsolve => hsolve(cfg, out),
        Command::Riesz => riesz(cfg, out),
        Command::Evolve => evolve(cfg, out),
        Command::Sweep => sweep(cfg, out, opts),
        Command::Duhamel => duhamel(cfg, out, opts),
        Command::Testfn => testfn(cfg, out),
        Command::Kernel => kernel(cfg, out),
        Command::Volume => volume(cfg, out),
    }
}

fn hsolve(cfg: &ExperimentConfig, out: &Path) -> Result<String, DispatchError> {
    let (mesh, h) = mesh_and_h(cfg)?;
    let radii = h.radii();
    let (r_last, h_last) = (radii[radii.len() - 1], h.values()[radii.len() - 1]);
    let mut csv = Csv::new(&["r", "h", "envelope"]);
    for (r, v) in radii.iter().zip(h.values()) {
        let env = (*r > 0.0).then(|| h_last * (r / r_last).powf(h.delta_hat()));
        csv.row(&[fmt_f64(*r), fmt_f64(*v), fmt_opt(env)]);
    }
    atomic_write(&out.join("hsolve.csv"), csv.as_str().as_bytes())?;

    let closed_form_error = cfg.potential.closed_form_h().map(|f| {
        radii
            .iter()
            .zip(h.values())
            .filter(|(r, _)| **r <= 100.0)
            .map(|(r, v)| (v / f(*r) - 1.0).abs())
            .fold(0.0_f64, f64::max)
    });
    let fit = volume_growth_fit(&mesh, &h, Measure::Nu).ok();
    let verdict = match (&cfg.evolution, &fit) {
        (Some(e), Some(f)) => ExponentBundle::new(e.p).ok().map(|b| json!({ "p": e.p, "verdict": nonexistence_verdict(&b, f) })),
        _ => None,
    };
    let (flat_ratio, flat) = flat_profile_check(&h);
    let report = json!({
        "certificate": h.certificate(),
        "offending_radius": h.offending_radius(),
        "delta_hat": h.delta_hat(),
        "delta_band": h.delta_band(),
        "condition_h": check_condition_h(&h).ok(),
        "flat": { "ratio": flat_ratio, "pass": flat },
        "closed_form_max_rel_error": closed_form_error,
        "volume_fit_nu": fit,
        "verdict": verdict,
    });
    write_json(&out.join("hsolve.json"), &report)?;
    if !h.certificate() {
        return Err(DispatchError::Science(format!("h lost positivity at r = {:?}", h.offending_radius())));
    }
    Ok(format!("hsolve: delta_hat = {:.4}, certificate = true", h.delta_hat()))
}

fn riesz(cfg: &ExperimentConfig, out: &Path) -> Result<String, DispatchError> {
    let n = cfg.manifold.as_ref().map_or(3, |m| m.dim);
    let rs = cfg.riesz.clone().unwrap_or(super::config::RieszSection {
        r_min: 1e-3,
        r_max: 1e4,
        per_decade: 24,
        stride: 4,
        decay_hint: None,
    });
    let pot = cfg.potential.clone();
    let v = RadialFunction::from_fn(|r| pot.value(r), rs.r_min, rs.r_max, rs.per_decade, rs.decay_hint).map_err(science)?;
    let hmv = hmv_condition_ratio(&v, n, rs.stride).map_err(science)?;
    let xs: Vec<f64> = hmv.rows.iter().map(|r| r.0).collect();
    let i2 = riesz_profile(&v, 2.0, n, &xs).ok();
    let mut csv = Csv::new(&["x", "I1V", "I2V", "ratio"]);
    for (k, row) in hmv.rows.iter().enumerate() {
        csv.row(&[fmt_f64(row.0), fmt_f64(row.1), fmt_opt(i2.as_ref().map(|v| v[k])), fmt_f64(row.3)]);
    }
    atomic_write(&out.join("riesz.csv"), csv.as_str().as_bytes())?;
    let green = green_bounded_sup_i2(&v, n).map_err(science)?;
    write_json(
        &out.join("riesz.json"),
        &json!({ "ratio_sup": hmv.ratio_sup, "at_radius": hmv.at_radius, "green_bound": green, "tail_decay": v.tail_decay() }),
    )?;
    Ok(format!("riesz: hmv ratio sup = {:.4e}", hmv.ratio_sup))
}

fn evolve(cfg: &ExperimentConfig, out: &Path) -> Result<String, DispatchError> {
    let ev = section(&cfg.evolution, "evolution")?;
    let (mesh, h) = mesh_and_h(cfg)?;
    let o = evolve_nonlinear(&ev.config(), &mesh, &h).map_err(science)?;
    let mut csv = Csv::new(&["t", "sup_u", "mu_mass"]);
    for s in &o.history {
        csv.numeric_row(&[s.t, s.sup, s.mass]);
    }
    atomic_write(&out.join("evolve.csv"), csv.as_str().as_bytes())?;
    let mut j = serde_json::to_value(&o).map_err(science)?;
    if let Some(m) = j.as_object_mut() {
        m.remove("history");
        m.insert("p".into(), json!(ev.p));
    }
    write_json(&out.join("evolve.json"), &j)?;
    Ok(format!("evolve: p = {} -> {}", ev.p, o.class.label()))
}

fn sweep(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<String, DispatchError> {
    section(&cfg.sweep, "sweep")?;
    if manifold(cfg)?.grid != GridKind::Stretched {
        return Err(DispatchError::Usage("sweep needs grid = \"stretched\" in [manifold]".into()));
    }
    let sc = cfg.sweep_config(opts.workers).expect("sections checked");
    let report = fujita_sweep(&sc).map_err(science)?;
    write_report(&report, out)?;
    let conflicts: Vec<f64> = report.classes.iter().filter(|c| c.theory_conflict).map(|c| c.p).collect();
    if !conflicts.is_empty() {
        return Err(DispatchError::Science(format!("GLOBAL classification where nonexistence is certified at p = {conflicts:?}")));
    }
    Ok(format!(
        "sweep: bracket [{}, {}], theory p* = {}",
        fmt_opt(report.p_lo),
        fmt_opt(report.p_hi),
        fmt_opt(report.theory.as_ref().map(|t| t.p_star))
    ))
}

fn duhamel(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<String, DispatchError> {
    let ds = section(&cfg.duhamel, "duhamel")?;
    let trace = kernel_time_integral(ds.trace_p, ds.trace_q, ds.p, ds.delta, &ds.trace_horizons).map_err(science)?;
    let mut csv = Csv::new(&["T", "integral"]);
    for (t, v) in &trace {
        csv.numeric_row(&[*t, *v]);
    }
    atomic_write(&out.join("duhamel_trace.csv"), csv.as_str().as_bytes())?;

    let (mesh, h) = mesh_and_h(cfg)?;
    let dc = ds.config(opts.slow);
    let result = DuhamelContext::new(&mesh, &h, &dc).and_then(|ctx| ctx.run());
    let path = out.join("duhamel.json");
    match result {
        Err(e) => {
            write_json(&path, &json!({ "config": dc, "status": "ERROR", "error": e.to_string() }))?;
            Err(science(e))
        }
        Ok((outcome, selection)) => {
            let failed = (!outcome.envelope.pass || outcome.status == PicardStatus::EnvelopeViolation)
                .then_some(ENVELOPE_INEQUALITY);
            write_json(
                &path,
                &json!({
                    "config": dc,
                    "lambda_selection": selection,
                    "status": outcome.status,
                    "failed_inequality": failed,
                    "outcome": outcome,
                }),
            )?;
            match outcome.status {
                PicardStatus::Converged => Ok(format!(
                    "duhamel: converged in {} iterations at lambda = {:.4e}",
                    outcome.iterations, outcome.lambda
                )),
                _ => Err(outcome.into_result().map(|_| ()).map_err(science).unwrap_err()),
            }
        }
    }
}

fn testfn(cfg: &ExperimentConfig, out: &Path) -> Result<String, DispatchError> {
    let ts = section(&cfg.testfn, "testfn")?;
    let law = VolumeLaw::sharp(ts.p, ts.eps).map_err(science)?;
    let (rows, slopes) = ladder(&ts.ladder, ts.p, &law, ts.delta1, ts.delta2).map_err(science)?;
    let mut csv = Csv::new(&["i", "J", "L_time", "L_final", "J_neg"]);
    for r in &rows {
        csv.row(&[r.i.to_string(), fmt_f64(r.j), fmt_f64(r.l_time), fmt_f64(r.l_final), fmt_opt(r.j_neg)]);
    }
    atomic_write(&out.join("testfn.csv"), csv.as_str().as_bytes())?;
    let js: Vec<f64> = rows.iter().map(|r| r.j).collect();
    write_json(
        &out.join("testfn.json"),
        &json!({
            "p": ts.p,
            "law": law,
            "slopes": slopes,
            "plain_slope_j": plain_slope(&ts.ladder, &js).ok(),
            "target_slope": ts.eps * (ts.p - 1.0) / ts.p,
        }),
    )?;
    Ok(format!("testfn: J slope = {:.4}", slopes.j))
}

fn kernel(cfg: &ExperimentConfig, out: &Path) -> Result<String, DispatchError> {
    let (mesh, h) = mesh_and_h(cfg)?;
    let ks = cfg.kernel.clone().unwrap_or(super::config::KernelSection {
        source: 0,
        times: vec![0.01, 0.1, 1.0, 10.0, 100.0],
        dt: None,
    });
    let op = laplacian_operator(&mesh, Some(&h)).map_err(science)?;
    if ks.source >= op.len() {
        return Err(DispatchError::Usage(format!("[kernel] source {} outside 0..{}", ks.source, op.len())));
    }
    let dt = ks.dt.unwrap_or_else(|| default_dt(&mesh));
    let cols = kernel_ladder(ks.source, &ks.times, &op, dt).map_err(science)?;
    let mut csv = Csv::new(&["r", "t", "P"]);
    for c in &cols {
        for (r, v) in mesh.nodes().iter().zip(&c.values) {
            csv.numeric_row(&[*r, c.t, *v]);
        }
    }
    atomic_write(&out.join("kernel.csv"), csv.as_str().as_bytes())?;
    let due = due_check(&cols, &mesh, &op);
    write_json(&out.join("kernel_due.json"), &due)?;
    Ok(format!("kernel: DUE max ratio = {:.4}", due.max_ratio))
}

fn volume(cfg: &ExperimentConfig, out: &Path) -> Result<String, DispatchError> {
    let (mesh, h) = mesh_and_h(cfg)?;
    let w = MeasureWeights::new(&mesh, &h).map_err(science)?;
    let cum: Vec<Vec<(f64, f64)>> = [Measure::Mu0, Measure::Mu, Measure::Nu].iter().map(|m| w.cumulative(&mesh, *m)).collect();
    let mut csv = Csv::new(&["r", "mu0", "mu", "nu"]);
    for ((a, b), c) in cum[0].iter().zip(&cum[1]).zip(&cum[2]) {
        csv.numeric_row(&[a.0, a.1, b.1, c.1]);
    }
    atomic_write(&out.join("volume.csv"), csv.as_str().as_bytes())?;
    let fits = json!({
        "mu0": volume_growth_fit(&mesh, &h, Measure::Mu0).ok(),
        "mu": volume_growth_fit(&mesh, &h, Measure::Mu).ok(),
        "nu": volume_growth_fit(&mesh, &h, Measure::Nu).ok(),
    });
    write_json(&out.join("volume.json"), &fits)?;
    Ok("volume: fits written".into())
}

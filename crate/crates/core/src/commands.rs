//! Subcommand drivers shared by the binary and the integration tests.
//!
//! Every command writes `effective.cfg` plus its reports into the output
//! directory. Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::path::{Path, PathBuf};

use crate::config::{self, build_map, RunConfig};
use crate::covariant::BackgroundConnection;
use crate::error::{Error, IoError};
use crate::flow::{run_flow, stability_dt, symbol_bounds};
use crate::geometry::{willmore_energy, GeometryCache};
use crate::hopf::{hopf_torus, run_curve_flow, willmore_elastic_check};
use crate::io::{self, fmt_f64};
use crate::linearization::{
    adjoint_flow_many, fd_check, linear_flow, propagate_on_schedule, random_smooth_field, symbol_probe, weighted_inner,
    weighted_norm, PropagatorLog,
};
use crate::moebius::{conformal_energy_check, invariance_residual};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "MIWF_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Energy,
    Linearize,
    CheckInvariance,
    Hopf,
}

/// Result of a command that ran to the end.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    /// Human-readable summary for stdout.
    pub summary: String,
}

/// Reads the optional config file and applies `--set` overrides.
pub fn load_config<S: AsRef<str>>(file: Option<&Path>, sets: &[S]) -> Result<RunConfig, IoError> {
    let base = match file {
        Some(p) => config::parse_file(p)?,
        None => Default::default(),
    };
    RunConfig::from_sources(&base, &config::parse_overrides(sets)?)
}

/// Output directory: flag, then `output.dir`, then `$MIWF_OUT_DIR`, then `miwf_out`.
pub fn output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("miwf_out"))
}

pub fn exit_code(result: &Result<Outcome, IoError>) -> i32 {
    match result {
        Ok(o) => o.exit_code,
        Err(IoError::Numerical(e)) if is_numerical(e) => EXIT_NUMERICAL,
        Err(_) => EXIT_INPUT,
    }
}

fn is_numerical(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateMetric { .. } | Error::UmbilicDegeneracy { .. } | Error::NonFinite | Error::IrregularCurve { .. }
    )
}

pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome, IoError> {
    io::write_text(&out.join("effective.cfg"), &cfg.echo())?;
    match cmd {
        Command::Simulate => simulate(cfg, out),
        Command::Energy => energy(cfg, out),
        Command::Linearize => linearize(cfg, out),
        Command::CheckInvariance => check_invariance(cfg, out),
        Command::Hopf => hopf(cfg, out),
    }
}

fn ok(summary: String) -> Result<Outcome, IoError> {
    Ok(Outcome { exit_code: EXIT_OK, summary })
}

fn kv_csv(rows: &[(&str, f64)]) -> String {
    let rows: Vec<Vec<String>> = rows.iter().map(|(k, v)| vec![k.to_string(), fmt_f64(*v)]).collect();
    io::csv(&["quantity", "value"], &rows)
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome, IoError> {
    let f0 = cfg.build_surface()?;
    let tr = run_flow(&f0, &cfg.flow, None)?;
    io::write_text(&out.join("diagnostics.csv"), &io::diagnostics_csv(&tr.rows, tr.halt))?;
    for (step, _, f) in &tr.snapshots {
        let stem = out.join("snapshots").join(format!("step_{step:06}"));
        io::write_snapshot_csv(f, &stem.with_extension("csv"))?;
        if let Some(mesh) = io::obj(f) {
            io::write_text(&stem.with_extension("obj"), &mesh)?;
        }
    }
    let last = tr.rows.last().expect("row 0 always present");
    let mut summary = format!(
        "{} flow: {} steps to t = {:.6e}, W = {:.10e}, min |A0|^2 = {:.4e}, halt = {}",
        cfg.flow.kind.name(),
        last.step,
        last.t,
        last.energy,
        last.min_a0sq,
        tr.halt
    );
    if let Some(e) = &tr.error {
        summary.push_str(&format!(" ({e})"));
    }
    let exit_code = if tr.halt.is_numerical() { EXIT_NUMERICAL } else { EXIT_OK };
    Ok(Outcome { exit_code, summary })
}

fn energy(cfg: &RunConfig, out: &Path) -> Result<Outcome, IoError> {
    let f = cfg.build_surface()?;
    let cache = GeometryCache::new(&f)?;
    let w = willmore_energy(&f, &cache, cfg.ambient)?;
    let (a0, _) = cache.min_a0sq();
    let (lo, hi) = symbol_bounds(&cache);
    let dt = stability_dt(&cache, cfg.flow.safety);
    io::write_text(
        &out.join("energy.csv"),
        &kv_csv(&[("willmore_energy", w), ("min_a0sq", a0), ("symbol_min", lo), ("symbol_max", hi), ("stable_dt", dt)]),
    )?;
    ok(format!("W = {w:.12e}, min |A0|^2 = {a0:.6e}, symbol in [{lo:.4e}, {hi:.4e}], stable dt = {dt:.4e}"))
}

fn linearize(cfg: &RunConfig, out: &Path) -> Result<Outcome, IoError> {
    let f = cfg.build_surface()?;
    let floor = cfg.flow.min_a0sq;
    let lin = &cfg.linearize;
    let (nu, nv, n) = (f.nu(), f.nv(), f.n());
    let rand = |k: u64| random_smooth_field(nu, nv, n, 3, lin.seed.wrapping_add(k));
    let bg = BackgroundConnection::new(&f)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |check: &str, param: f64, value: f64| rows.push(vec![check.into(), fmt_f64(param), fmt_f64(value)]);

    let eta = rand(0);
    let fd1 = fd_check(&f, &bg, &eta, 10.0 * lin.h, floor)?;
    let fd2 = fd_check(&f, &bg, &eta, lin.h, floor)?;
    push("fd_rel_error", fd1.h, fd1.rel_error);
    push("fd_rel_error", fd2.h, fd2.rel_error);
    let probe = symbol_probe(&f, &bg, floor)?;
    push("symbol_max_rel_error", probe.k as f64, probe.max_rel_error);

    let log = PropagatorLog::record(&f, Some(bg), lin.steps, cfg.flow.safety, floor)?;
    let times = log.times();
    let (s, m, t) = (times[0], times[lin.split], times[lin.steps]);
    let w = log.weights().to_vec();
    let xi = rand(1);
    let direct = linear_flow(&log, s, t, &xi)?;
    let composed = linear_flow(&log, m, t, &linear_flow(&log, s, m, &xi)?)?;
    let semigroup = weighted_norm(&direct.axpy(-1.0, &composed), &w) / weighted_norm(&direct, &w);
    push("semigroup_rel_defect", m, semigroup);

    let pairs: Vec<_> = (0..lin.pairs as u64).map(|k| (rand(2 + 2 * k), rand(3 + 2 * k))).collect();
    let etas: Vec<_> = pairs.iter().map(|(_, e)| e.clone()).collect();
    let adj = adjoint_flow_many(&log, t, s, &etas)?;
    let mut duality = 0.0f64;
    for ((x, e), a) in pairs.iter().zip(&adj) {
        let gx = linear_flow(&log, s, t, x)?;
        let lhs = weighted_inner(&gx, e, &w);
        let rhs = weighted_inner(x, a, &w);
        duality = duality.max((lhs - rhs).abs() / (weighted_norm(&gx, &w) * weighted_norm(e, &w)));
    }
    push("duality_rel_defect", lin.pairs as f64, duality);

    let base = log.final_state();
    for h in [1e-3, 5e-4, 2.5e-4] {
        let moved = propagate_on_schedule(&log, s, t, &f.perturbed(h, &xi))?;
        let diff = moved.field().axpy(-1.0, base.field()).scale(1.0 / h);
        push("richardson_rel_error", h, weighted_norm(&diff.axpy(-1.0, &direct), &w) / weighted_norm(&direct, &w));
    }
    io::write_text(&out.join("linearize.csv"), &io::csv(&["check", "parameter", "value"], &rows))?;
    ok(format!(
        "fd rel error {:.3e} (h = {:.1e}), {:.3e} (h = {:.1e}); symbol probe {:.3e}; semigroup {:.3e}; duality {:.3e} over t in [0, {:.4e}]",
        fd1.rel_error, fd1.h, fd2.rel_error, fd2.h, probe.max_rel_error, semigroup, duality, t
    ))
}

fn check_invariance(cfg: &RunConfig, out: &Path) -> Result<Outcome, IoError> {
    let f = cfg.build_surface()?;
    let phi = build_map(&cfg.generators, f.n())?;
    let residual = invariance_residual(&phi, &f, cfg.flow.min_a0sq)?;
    let (wf, wg, diff) = conformal_energy_check(&phi, &f)?;
    io::write_text(
        &out.join("invariance.csv"),
        &kv_csv(&[("velocity_residual", residual), ("energy_f", wf), ("energy_phi_f", wg), ("energy_abs_diff", diff)]),
    )?;
    ok(format!("velocity residual {residual:.4e}; W(f) = {wf:.10e}, W(phi f) = {wg:.10e}, |diff| = {diff:.3e}"))
}

fn hopf(cfg: &RunConfig, out: &Path) -> Result<Outcome, IoError> {
    let h = &cfg.hopf;
    let gamma = h.curve.build(h.n)?;
    let (end, flow_rows) = run_curve_flow(&gamma, h.steps, h.safety)?;
    let rows: Vec<Vec<String>> = flow_rows
        .iter()
        .map(|r| vec![r.step.to_string(), fmt_f64(r.t), fmt_f64(r.dt), fmt_f64(r.energy), fmt_f64(r.max_speed)])
        .collect();
    io::write_text(&out.join("curve_flow.csv"), &io::csv(&["step", "t", "dt", "elastic_energy", "max_speed"], &rows))?;
    let before = willmore_elastic_check(&gamma, h.ntheta)?;
    let after = willmore_elastic_check(&end, h.ntheta)?;
    let rows: Vec<Vec<String>> = [("initial", before), ("final", after)]
        .iter()
        .map(|(k, c)| vec![k.to_string(), fmt_f64(c.willmore), fmt_f64(c.pi_elastic), fmt_f64(c.rel_diff)])
        .collect();
    io::write_text(&out.join("hopf.csv"), &io::csv(&["curve", "willmore", "pi_elastic", "rel_diff"], &rows))?;
    io::write_snapshot_csv(hopf_torus(&end, h.ntheta)?.field(), &out.join("hopf_torus.csv"))?;
    let (e0, e1) = (flow_rows[0].energy, flow_rows.last().unwrap().energy);
    ok(format!(
        "elastic energy {e0:.10e} -> {e1:.10e} over {} steps; W vs pi*W~ rel diff {:.3e} (initial), {:.3e} (final)",
        h.steps, before.rel_diff, after.rel_diff
    ))
}

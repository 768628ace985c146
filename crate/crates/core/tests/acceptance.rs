//! End-to-end acceptance checks. Runs sequentially in one test so the
//! per-check wall-clock budgets are measured without contention.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use miwf::commands::{self, Command};
use miwf::flow::{deturck_velocity, deturck_velocity_mixed, run_flow};
use miwf::geometry::{integrate_pairing, willmore_energy, willmore_gradient};
use miwf::hopf::{curve_flow_velocity, run_curve_flow, willmore_elastic_check};
use miwf::linearization::{
    adjoint_flow_many, fd_check, linear_flow, propagate_on_schedule, random_smooth_field, symbol_probe, weighted_inner,
    weighted_norm,
};
use miwf::moebius::{invariance_residual, Generator};
use miwf::surfaces::{clifford_stereo, clifford_torus, torus_of_revolution};
use miwf::{Ambient, Background, Cache, CurveGrid, FlowConfig, FlowKind, Grid, MoebiusMap, PropagatorLog, Vector};

const FLOOR: f64 = 1e-4;

struct Check {
    id: usize,
    name: &'static str,
    budget: Duration,
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn torus(big_r: f64, n: usize) -> Grid {
    torus_of_revolution(big_r, 1.0, n, n).unwrap()
}

fn energy(f: &Grid, ambient: Ambient) -> f64 {
    willmore_energy(f, &Cache::new(f).unwrap(), ambient).unwrap()
}

fn rel_l2(a: &Vector, b: &Vector) -> f64 {
    a.axpy(-1.0, b).l2_norm() / b.l2_norm()
}

fn steps(kind: FlowKind, n: usize) -> FlowConfig {
    FlowConfig { kind, t_end: 1e9, max_steps: Some(n), ..FlowConfig::default() }
}

fn energy_oracle() -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for t in [2f64.sqrt(), 2.0, 3.0] {
        let exact = PI * PI * t * t / (t * t - 1.0).sqrt();
        let e64 = (energy(&torus(t, 64), Ambient::Euclidean) / exact - 1.0).abs();
        let e128 = (energy(&torus(t, 128), Ambient::Euclidean) / exact - 1.0).abs();
        pass &= e128 <= 5e-3 && e64 >= 4.0 * e128;
        detail += &format!("t={t:.3}: {e64:.2e}->{e128:.2e} ");
    }
    Verdict { pass, detail }
}

fn clifford_consistency() -> Verdict {
    let target = 2.0 * PI * PI;
    let ws = energy(&clifford_torus(128, 128).unwrap(), Ambient::Sphere);
    let we = energy(&clifford_stereo(128, 128).unwrap(), Ambient::Euclidean);
    let (es, ee) = ((ws / target - 1.0).abs(), (we / target - 1.0).abs());
    Verdict { pass: es <= 5e-3 && ee <= 5e-3, detail: format!("sphere {es:.2e}, stereo {ee:.2e}") }
}

fn gradient_consistency() -> Verdict {
    let f = torus(2.0, 128);
    let cache = Cache::new(&f).unwrap();
    let grad = willmore_gradient(&cache);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let psi = random_smooth_field(128, 128, 3, 3, 100 + seed);
        let pairing = integrate_pairing(&cache, &grad, &psi);
        let fd = (energy(&f.perturbed(eps, &psi), Ambient::Euclidean) - energy(&f.perturbed(-eps, &psi), Ambient::Euclidean))
            / (2.0 * eps);
        worst = worst.max((pairing - fd).abs() / fd.abs());
    }
    let (fu, fv) = (f.d_u(), f.d_v());
    let tangential = Vector::from_fn(128, 128, 3, |u, v, x| {
        let (a, b) = ((u + 2.0 * v).sin(), (2.0 * u - v).cos());
        let (i, j) = ((u / f.du()).round() as usize % 128, (v / f.dv()).round() as usize % 128);
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = a * fu.at(i, j)[k] + b * fv.at(i, j)[k];
        }
    });
    let tan = integrate_pairing(&cache, &grad, &tangential).abs() / integrate_pairing(&cache, &tangential, &tangential).sqrt();
    Verdict { pass: worst <= 1e-2 && tan <= 1e-8, detail: format!("max rel {worst:.2e}, tangential {tan:.2e}") }
}

fn deturck_equivalence() -> Verdict {
    let d: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let f = torus(2.0, n);
            let bg = Background::new(&f).unwrap();
            let cache = Cache::new(&f).unwrap();
            let a = deturck_velocity(&cache, &bg, FLOOR).unwrap();
            let b = deturck_velocity_mixed(&cache, &bg, FLOOR).unwrap();
            rel_l2(&b, &a)
        })
        .collect();
    let (o1, o2) = ((d[0] / d[1]).log2(), (d[1] / d[2]).log2());
    Verdict { pass: o1 >= 2.0 && o2 >= 2.0, detail: format!("diff {:.2e} {:.2e} {:.2e}, orders {o1:.2} {o2:.2}", d[0], d[1], d[2]) }
}

fn moebius_invariance() -> Verdict {
    // exact in exact arithmetic; the roundoff floor grows like ε|f|/h⁴
    let f = torus(2.0, 32);
    let (s, c) = 0.7f64.sin_cos();
    let rigid = MoebiusMap::new(
        3,
        vec![
            Generator::Orthogonal(vec![vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]),
            Generator::Translation(vec![0.3, -1.2, 0.5]),
        ],
    )
    .unwrap();
    let r_rigid = invariance_residual(&rigid, &f, FLOOR).unwrap();
    let r_dil = [1.7, 2.0]
        .map(|l| invariance_residual(&MoebiusMap::new(3, vec![Generator::Dilation(l)]).unwrap(), &f, FLOOR).unwrap())
        .into_iter()
        .fold(0.0, f64::max);
    let inv = MoebiusMap::new(3, vec![Generator::SphereInversion { center: vec![0.2, -0.1, 0.3], radius: 1.5 }]).unwrap();
    let r: Vec<f64> = [64, 128, 256].iter().map(|&n| invariance_residual(&inv, &torus(2.0, n), FLOOR).unwrap()).collect();
    let (o1, o2) = ((r[0] / r[1]).log2(), (r[1] / r[2]).log2());
    Verdict {
        pass: r_rigid <= 1e-10 && r_dil <= 1e-10 && o1 >= 2.0 && o2 >= 2.0,
        detail: format!("rigid {r_rigid:.1e}, dilation {r_dil:.1e}, inversion {:.2e} {:.2e} {:.2e} (orders {o1:.2} {o2:.2})", r[0], r[1], r[2]),
    }
}

fn energy_monotonicity() -> Verdict {
    let tr = run_flow(&torus(3.0, 64), &steps(FlowKind::Miwf, 200), None).unwrap();
    let rise = tr.rows.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
    let min_a0 = tr.rows.iter().map(|r| r.min_a0sq).fold(f64::INFINITY, f64::min);
    let done = tr.rows.len() == 201;
    Verdict {
        pass: done && rise <= 1e-10 && min_a0 > FLOOR,
        detail: format!("{} steps, max per-step change {rise:.2e}, min |A0|^2 {min_a0:.3}", tr.rows.len() - 1),
    }
}

fn stationarity() -> Verdict {
    let disp = |n: usize| {
        let f0 = clifford_stereo(n, n).unwrap();
        let tr = run_flow(&f0, &steps(FlowKind::Miwf, 50), None).unwrap();
        assert_eq!(tr.rows.len(), 51, "{}", tr.halt);
        tr.final_state.f.field().axpy(-1.0, f0.field()).max_norm()
    };
    let (d64, d128) = (disp(64), disp(128));
    Verdict { pass: d128 <= d64 / 4.0, detail: format!("64²: {d64:.2e}, 128²: {d128:.2e}") }
}

fn linearization() -> Verdict {
    let f = torus(2.0, 32);
    let bg = Background::new(&f).unwrap();
    let eta = random_smooth_field(32, 32, 3, 3, 7);
    let at = fd_check(&f, &bg, &eta, 1e-5, FLOOR).unwrap().rel_error;
    let e: Vec<f64> = [4e-4, 2e-4, 1e-4].iter().map(|&h| fd_check(&f, &bg, &eta, h, FLOOR).unwrap().rel_error).collect();
    let orders = [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()];
    let order_ok = orders.iter().all(|o| (1.8..=2.2).contains(o));
    let g = torus(2.0, 64);
    let probe = symbol_probe(&g, &Background::new(&g).unwrap(), FLOOR).unwrap();
    Verdict {
        pass: at <= 1e-6 && order_ok && probe.max_rel_error <= 0.05,
        detail: format!(
            "fd(1e-5) {at:.2e}, orders {:.2} {:.2}, symbol probe k={} {:.2e}",
            orders[0], orders[1], probe.k, probe.max_rel_error
        ),
    }
}

fn base_log() -> (Grid, PropagatorLog) {
    let f = torus(2.0, 32);
    let log = PropagatorLog::record(&f, None, 20, 0.5, FLOOR).unwrap();
    (f, log)
}

fn semigroup() -> Verdict {
    let (f, log) = base_log();
    let times = log.times().to_vec();
    let (s, m, t) = (times[0], times[8], times[20]);
    let xi = random_smooth_field(32, 32, 3, 3, 11);
    let direct = linear_flow(&log, s, t, &xi).unwrap();
    let composed = linear_flow(&log, m, t, &linear_flow(&log, s, m, &xi).unwrap()).unwrap();
    let f_m = propagate_on_schedule(&log, s, m, &f).unwrap();
    let nonlinear = propagate_on_schedule(&log, m, t, &f_m).unwrap();
    let exact = direct.data() == composed.data() && nonlinear.data() == log.final_state().data();
    let w = log.weights();
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&h| {
            let moved = propagate_on_schedule(&log, s, t, &f.perturbed(h, &xi)).unwrap();
            let q = moved.field().axpy(-1.0, log.final_state().field()).scale(1.0 / h);
            weighted_norm(&q.axpy(-1.0, &direct), w) / weighted_norm(&direct, w)
        })
        .collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let linear_trend = ratios.iter().all(|r| (1.7..=2.3).contains(r));
    Verdict {
        pass: exact && linear_trend,
        detail: format!("bit-exact {exact}, richardson {:.2e} {:.2e} {:.2e} (ratios {:.2} {:.2})", errs[0], errs[1], errs[2], ratios[0], ratios[1]),
    }
}

fn duality() -> Verdict {
    let (_, log) = base_log();
    let times = log.times().to_vec();
    let (s, t) = (times[0], times[20]);
    let w = log.weights().to_vec();
    let xs: Vec<Vector> = (0..5).map(|k| random_smooth_field(32, 32, 3, 4, 200 + k)).collect();
    let es: Vec<Vector> = (0..5).map(|k| random_smooth_field(32, 32, 3, 4, 300 + k)).collect();
    let adj = adjoint_flow_many(&log, t, s, &es).unwrap();
    let mut worst = 0.0f64;
    for ((x, e), a) in xs.iter().zip(&es).zip(&adj) {
        let gx = linear_flow(&log, s, t, x).unwrap();
        let defect = (weighted_inner(&gx, e, &w) - weighted_inner(x, a, &w)).abs() / (weighted_norm(x, &w) * weighted_norm(e, &w));
        worst = worst.max(defect);
    }
    Verdict { pass: worst <= 1e-10, detail: format!("max defect {worst:.2e}") }
}

fn hopf_reduction() -> Verdict {
    let great = curve_flow_velocity(&CurveGrid::great_circle(512).unwrap()).unwrap();
    let still = great.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let lat = curve_flow_velocity(&CurveGrid::latitude(512, FRAC_PI_4).unwrap()).unwrap();
    let speed_err = lat.iter().map(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 0.5).abs()).fold(0.0, f64::max);
    let (_, rows) = run_curve_flow(&CurveGrid::wavy(128, 0.2, 2).unwrap(), 200, 0.5).unwrap();
    let rise = rows.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
    let curves = [CurveGrid::great_circle(512), CurveGrid::latitude(512, FRAC_PI_3), CurveGrid::wavy(512, 0.3, 2)];
    let diffs: Vec<f64> = curves.into_iter().map(|c| willmore_elastic_check(&c.unwrap(), 256).unwrap().rel_diff).collect();
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    Verdict {
        pass: still <= 1e-12 && speed_err <= 1e-6 && rise <= 0.0 && worst <= 1e-2,
        detail: format!("great circle {still:.1e}, latitude speed err {speed_err:.1e}, max flow change {rise:.1e}, W vs πW̃ {worst:.1e}"),
    }
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Verdict {
    let cfg = commands::load_config(
        None,
        &["grid.nu=32", "grid.nv=32", "flow.t_end=2e-4", "flow.snapshot_every=10", "flow.kind=deturck"],
    )
    .unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = commands::run(Command::Simulate, &cfg, d.path()).unwrap();
        assert_eq!(o.exit_code, 0);
    }
    let (a, b) = (read_tree(dirs[0].path()), read_tree(dirs[1].path()));
    Verdict { pass: !a.is_empty() && a == b, detail: format!("{} files compared", a.len()) }
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let checks: Vec<(Check, fn() -> Verdict)> = vec![
        (Check { id: 1, name: "willmore energy oracle", budget: secs(5) }, energy_oracle),
        (Check { id: 2, name: "clifford consistency", budget: secs(5) }, clifford_consistency),
        (Check { id: 3, name: "gradient consistency", budget: secs(10) }, gradient_consistency),
        (Check { id: 4, name: "deturck equivalence", budget: secs(30) }, deturck_equivalence),
        (Check { id: 5, name: "moebius invariance", budget: secs(60) }, moebius_invariance),
        (Check { id: 6, name: "energy monotonicity", budget: secs(60) }, energy_monotonicity),
        (Check { id: 7, name: "stationarity", budget: secs(60) }, stationarity),
        (Check { id: 8, name: "linearization", budget: secs(30) }, linearization),
        (Check { id: 9, name: "semigroup", budget: secs(60) }, semigroup),
        (Check { id: 10, name: "adjoint duality", budget: secs(30) }, duality),
        (Check { id: 11, name: "hopf reduction", budget: secs(60) }, hopf_reduction),
        (Check { id: 12, name: "determinism", budget: secs(10) }, determinism),
    ];
    let mut failed = Vec::new();
    for (c, run) in checks {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let pass = v.pass && took <= c.budget;
        println!(
            "[{}] {:>2} {:<24} {:>7.2}s/{:>3}s  {}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_secs_f64(),
            c.budget.as_secs(),
            v.detail
        );
        if !pass {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}


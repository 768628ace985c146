//! Linearized DeTurck flow and its discrete adjoint.
//!
//! Tangent action comes from forward-mode AD ([`Dual`]) of the discrete
//! DeTurck velocity, transposes from reverse-mode AD ([`Var`]). The
//! propagators step RK4 over a frozen, recorded base trajectory, so the
//! adjoint propagator is the exact transpose of the forward one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariant::BackgroundConnection;
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::flow::{deturck_velocity, rk4_stages, run_flow_observed, stability_dt, velocity, FlowConfig, FlowKind, HaltReason};
use crate::geometry::GeometryCache;
use crate::grid::{stencil_wavenumber, Field, ImmersionGrid, TangentField};
use crate::tape::{Tape, Var};

/// `D(Mill_{F0})(f).η` by forward-mode differentiation of the discrete
/// DeTurck velocity.
pub fn linearize_apply(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<f64>,
    eta: &TangentField<f64>,
    floor: f64,
) -> Result<TangentField<f64>> {
    f.check_compatible(eta)?;
    linearize_apply_lifted(f, &bg.cast(), eta, floor)
}

fn linearize_apply_lifted(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<Dual>,
    eta: &TangentField<f64>,
    floor: f64,
) -> Result<TangentField<f64>> {
    let data = f.data().iter().zip(eta.data()).map(|(&x, &e)| Dual::new(x, e)).collect();
    let fd = ImmersionGrid::from_field_unchecked(Field::from_vec(f.nu(), f.nv(), f.n(), data)?);
    let v = deturck_velocity(&GeometryCache::new(&fd)?, bg, floor)?;
    Ok(v.map(|x| x.eps))
}

/// Euclidean transpose `J(f)ᵀ y` of the linearized operator, by reverse-mode
/// differentiation.
pub fn transpose_apply(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<f64>,
    y: &TangentField<f64>,
    floor: f64,
) -> Result<TangentField<f64>> {
    f.check_compatible(y)?;
    transpose_apply_lifted(f, &bg.cast(), y, floor)
}

fn transpose_apply_lifted(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<Var>,
    y: &TangentField<f64>,
    floor: f64,
) -> Result<TangentField<f64>> {
    Ok(transpose_apply_many(f, bg, std::slice::from_ref(y), floor)?.pop().unwrap())
}

/// `J(f)ᵀ y` for several `y` from a single recording.
fn transpose_apply_many(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<Var>,
    ys: &[TangentField<f64>],
    floor: f64,
) -> Result<Vec<TangentField<f64>>> {
    Tape::reset();
    let inputs: Vec<Var> = f.data().iter().map(|&x| Var::input(x)).collect();
    let fv = ImmersionGrid::from_field_unchecked(Field::from_vec(f.nu(), f.nv(), f.n(), inputs.clone())?);
    let v = deturck_velocity(&GeometryCache::new(&fv)?, bg, floor);
    let out = v.and_then(|v| {
        ys.iter()
            .map(|y| {
                let adj = Tape::gradient(v.data(), y.data());
                Field::from_vec(f.nu(), f.nv(), f.n(), inputs.iter().map(|x| adj.wrt(x)).collect())
            })
            .collect()
    });
    Tape::reset();
    out
}

fn scale_pointwise(x: &mut Field<f64>, w: &[f64], inverse: bool) {
    for (p, &wp) in w.iter().enumerate() {
        let s = if inverse { 1.0 / wp } else { wp };
        for v in x.point_mut(p) {
            *v *= s;
        }
    }
}

/// Adjoint of [`linearize_apply`] for the pairing [`weighted_inner`] with the
/// background weights: `W^{-1} Jᵀ W y`.
pub fn adjoint_apply(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<f64>,
    y: &TangentField<f64>,
    floor: f64,
) -> Result<TangentField<f64>> {
    let mut wy = y.clone();
    scale_pointwise(&mut wy, bg.weights(), false);
    let mut out = transpose_apply(f, bg, &wy, floor)?;
    scale_pointwise(&mut out, bg.weights(), true);
    Ok(out)
}

/// `⟨a, b⟩_w = Σ_p ⟨a(p), b(p)⟩ w(p)`.
pub fn weighted_inner(a: &Field<f64>, b: &Field<f64>, w: &[f64]) -> f64 {
    (0..a.points())
        .map(|p| a.point(p).iter().zip(b.point(p)).map(|(x, y)| x * y).sum::<f64>() * w[p])
        .sum()
}

pub fn weighted_norm(a: &Field<f64>, w: &[f64]) -> f64 {
    weighted_inner(a, a, w).sqrt()
}

/// One recorded RK4 step of the base trajectory.
#[derive(Clone, Debug)]
pub struct LoggedStep {
    pub t: f64,
    pub dt: f64,
    /// Stage states `Y1..Y4` at which the linearization is frozen.
    pub stages: [ImmersionGrid<f64>; 4],
}

/// Frozen DeTurck base trajectory with its step schedule.
#[derive(Clone, Debug)]
pub struct PropagatorLog {
    bg: BackgroundConnection<f64>,
    floor: f64,
    initial: ImmersionGrid<f64>,
    steps: Vec<LoggedStep>,
    times: Vec<f64>,
    final_state: ImmersionGrid<f64>,
}

impl PropagatorLog {
    /// Runs `steps` DeTurck steps from `f0` (background `bg`, default `f0`),
    /// each at the CFL step of its start state scaled by `safety`.
    pub fn record(
        f0: &ImmersionGrid<f64>,
        bg: Option<BackgroundConnection<f64>>,
        steps: usize,
        safety: f64,
        floor: f64,
    ) -> Result<Self> {
        let bg = match bg {
            Some(b) => b,
            None => BackgroundConnection::new(f0)?,
        };
        let cfg = FlowConfig {
            kind: FlowKind::DeTurck,
            t_end: f64::MAX,
            safety,
            min_a0sq: floor,
            snapshot_every: 0,
            max_steps: Some(steps),
        };
        let mut log = Vec::with_capacity(steps);
        let tr = run_flow_observed(f0, &cfg, Some(&bg), |s| {
            log.push(LoggedStep { t: s.t, dt: s.dt, stages: s.states.clone() })
        })?;
        if tr.halt.is_numerical() {
            return Err(tr.error.unwrap_or(Error::NonFinite));
        }
        debug_assert!(tr.halt == HaltReason::MaxSteps || steps == 0);
        let mut times: Vec<f64> = log.iter().map(|s| s.t).collect();
        times.push(tr.final_state.t);
        Ok(PropagatorLog { bg, floor, initial: f0.clone(), steps: log, times, final_state: tr.final_state.f })
    }

    /// Schedule `t_0 < t_1 < … < t_N`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> &[LoggedStep] {
        &self.steps
    }

    pub fn background(&self) -> &BackgroundConnection<f64> {
        &self.bg
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn initial(&self) -> &ImmersionGrid<f64> {
        &self.initial
    }

    pub fn final_state(&self) -> &ImmersionGrid<f64> {
        &self.final_state
    }

    pub fn weights(&self) -> &[f64] {
        self.bg.weights()
    }

    /// Index of `t` on the schedule (exact match required).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times.iter().position(|&s| s == t).ok_or(Error::ScheduleMismatch { time: t })
    }

    fn span(&self, s: f64, t: f64) -> Result<(usize, usize)> {
        let (a, b) = (self.index_of(s)?, self.index_of(t)?);
        if a > b {
            return Err(Error::InvalidParameter(format!("propagation interval reversed: {s} > {t}")));
        }
        Ok((a, b))
    }
}

/// `G(t, s) ξ`: RK4 for `∂_τ u = D(Mill_{F0})(f_τ).u` frozen on the base
/// stages.
pub fn linear_flow(log: &PropagatorLog, s: f64, t: f64, xi: &TangentField<f64>) -> Result<TangentField<f64>> {
    let (a, b) = log.span(s, t)?;
    log.initial.check_compatible(xi)?;
    let bg: BackgroundConnection<Dual> = log.bg.cast();
    let jv = |y: &ImmersionGrid<f64>, v: &Field<f64>| linearize_apply_lifted(y, &bg, v, log.floor);
    let mut u = xi.clone();
    for step in &log.steps[a..b] {
        let dt = step.dt;
        let y = &step.stages;
        let k1 = jv(&y[0], &u)?;
        let k2 = jv(&y[1], &u.axpy(0.5 * dt, &k1))?;
        let k3 = jv(&y[2], &u.axpy(0.5 * dt, &k2))?;
        let k4 = jv(&y[3], &u.axpy(dt, &k3))?;
        let w = dt / 6.0;
        u.add_assign_scaled(w, &k1);
        u.add_assign_scaled(2.0 * w, &k2);
        u.add_assign_scaled(2.0 * w, &k3);
        u.add_assign_scaled(w, &k4);
    }
    Ok(u)
}

/// `G*(t, s) ξ*`: the exact transpose of [`linear_flow`] for the weighted
/// pairing, stepping the RK4 stages backwards from `t` to `s`.
pub fn adjoint_flow(log: &PropagatorLog, t: f64, s: f64, xi_star: &TangentField<f64>) -> Result<TangentField<f64>> {
    Ok(adjoint_flow_many(log, t, s, std::slice::from_ref(xi_star))?.pop().unwrap())
}

/// [`adjoint_flow`] for several terminal values; each stage is recorded once
/// and swept once per terminal value.
pub fn adjoint_flow_many(
    log: &PropagatorLog,
    t: f64,
    s: f64,
    xi_star: &[TangentField<f64>],
) -> Result<Vec<TangentField<f64>>> {
    let (a, b) = log.span(s, t)?;
    for x in xi_star {
        log.initial.check_compatible(x)?;
    }
    if a == b {
        return Ok(xi_star.to_vec());
    }
    let bg: BackgroundConnection<Var> = log.bg.cast();
    let w = log.weights();
    let jt = |y: &ImmersionGrid<f64>, v: &[Field<f64>]| transpose_apply_many(y, &bg, v, log.floor);
    // Euclidean co-states λ = W ξ*
    let mut lam: Vec<Field<f64>> = xi_star.to_vec();
    for l in lam.iter_mut() {
        scale_pointwise(l, w, false);
    }
    for step in log.steps[a..b].iter().rev() {
        let dt = step.dt;
        let y = &step.stages;
        let kb4: Vec<_> = lam.iter().map(|l| l.scale(dt / 6.0)).collect();
        let z4 = jt(&y[3], &kb4)?;
        let kb3: Vec<_> = lam.iter().zip(&z4).map(|(l, z)| l.scale(dt / 3.0).axpy(dt, z)).collect();
        let z3 = jt(&y[2], &kb3)?;
        let kb2: Vec<_> = lam.iter().zip(&z3).map(|(l, z)| l.scale(dt / 3.0).axpy(0.5 * dt, z)).collect();
        let z2 = jt(&y[1], &kb2)?;
        let kb1: Vec<_> = lam.iter().zip(&z2).map(|(l, z)| l.scale(dt / 6.0).axpy(0.5 * dt, z)).collect();
        let z1 = jt(&y[0], &kb1)?;
        for (k, l) in lam.iter_mut().enumerate() {
            l.add_assign_scaled(1.0, &z4[k]);
            l.add_assign_scaled(1.0, &z3[k]);
            l.add_assign_scaled(1.0, &z2[k]);
            l.add_assign_scaled(1.0, &z1[k]);
        }
    }
    for l in lam.iter_mut() {
        scale_pointwise(l, w, true);
    }
    Ok(lam)
}

/// Nonlinear DeTurck propagation of `f_s` from `s` to `t` on the logged
/// step sizes.
pub fn propagate_on_schedule(log: &PropagatorLog, s: f64, t: f64, f_s: &ImmersionGrid<f64>) -> Result<ImmersionGrid<f64>> {
    let (a, b) = log.span(s, t)?;
    let mut f = f_s.clone();
    for step in &log.steps[a..b] {
        let vel = |y: &ImmersionGrid<f64>| velocity(FlowKind::DeTurck, y, Some(&log.bg), log.floor);
        let k1 = vel(&f)?;
        f = rk4_stages(&f, &k1, step.t, step.dt, vel)?.0;
    }
    Ok(f)
}

/// Smooth random field: random coefficients on the Fourier modes
/// `|k_u|, |k_v| ≤ modes`, decaying like `1/(1 + k²)`.
pub fn random_smooth_field(nu: usize, nv: usize, n: usize, modes: usize, seed: u64) -> Field<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = modes as i64;
    let mut coeffs = Vec::new();
    for ku in -m..=m {
        for kv in -m..=m {
            let decay = 1.0 / (1.0 + (ku * ku + kv * kv) as f64);
            let c: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-1.0..1.0) * decay, rng.gen_range(-1.0..1.0) * decay)).collect();
            coeffs.push((ku as f64, kv as f64, c));
        }
    }
    Field::from_fn(nu, nv, n, |u, v, out| {
        for x in out.iter_mut() {
            *x = 0.0;
        }
        for (ku, kv, c) in &coeffs {
            let (s, co) = (ku * u + kv * v).sin_cos();
            for (x, (a, b)) in out.iter_mut().zip(c) {
                *x += a * co + b * s;
            }
        }
    })
}

/// AD-vs-FD comparison for one direction.
#[derive(Clone, Copy, Debug)]
pub struct FdCheck {
    pub h: f64,
    /// `‖L η − FD_h‖ / ‖L η‖`.
    pub rel_error: f64,
}

/// Compares [`linearize_apply`] with `(Mill(f+hη) − Mill(f−hη)) / 2h`.
pub fn fd_check(
    f: &ImmersionGrid<f64>,
    bg: &BackgroundConnection<f64>,
    eta: &TangentField<f64>,
    h: f64,
    floor: f64,
) -> Result<FdCheck> {
    let ad = linearize_apply(f, bg, eta, floor)?;
    let vp = deturck_velocity(&GeometryCache::new(&f.perturbed(h, eta))?, bg, floor)?;
    let vm = deturck_velocity(&GeometryCache::new(&f.perturbed(-h, eta))?, bg, floor)?;
    let fd = vp.axpy(-1.0, &vm).scale(0.5 / h);
    Ok(FdCheck { h, rel_error: fd.axpy(-1.0, &ad).l2_norm() / ad.l2_norm() })
}

/// High-frequency response of the linearization against its leading symbol.
#[derive(Clone, Copy, Debug)]
pub struct SymbolProbe {
    /// Wavenumber `k = nu/4` of the probe `e₁ cos(k u)`.
    pub k: usize,
    /// Largest relative deviation of `|(Lη)₁|` from the predicted magnitude.
    pub max_rel_error: f64,
    pub mean_ratio: f64,
}

/// Applies the linearization to `η = e₁ cos(k u)`, `k = nu/4`, and compares
/// the first component at nodes with `cos(k u) = ±1` against
/// `½|A⁰|^{-4}(g^{uu})² k̃⁴`, where `k̃ = stencil_wavenumber(k du)/du` is the
/// wavenumber the discrete derivative actually resolves.
pub fn symbol_probe(f: &ImmersionGrid<f64>, bg: &BackgroundConnection<f64>, floor: f64) -> Result<SymbolProbe> {
    let k = f.nu() / 4;
    let n = f.n();
    let eta = Field::from_fn(f.nu(), f.nv(), n, |u, _, x| {
        x.fill(0.0);
        x[0] = (k as f64 * u).cos();
    });
    let resp = linearize_apply(f, bg, &eta, floor)?;
    let cache = GeometryCache::new(f)?;
    let du = f.du();
    let keff = stencil_wavenumber(k as f64 * du) / du;
    let mut worst = 0.0f64;
    let (mut sum, mut cnt) = (0.0, 0usize);
    for j in 0..f.nv() {
        for i in (0..f.nu()).step_by(2) {
            let p = j * f.nu() + i;
            let a = cache.a0sq[p];
            let guu = cache.metric.ginv[p][0][0];
            let predicted = 0.5 / (a * a) * guu * guu * keff.powi(4);
            let measured = (resp.point(p)[0] / eta.point(p)[0]).abs();
            worst = worst.max((measured / predicted - 1.0).abs());
            sum += measured / predicted;
            cnt += 1;
        }
    }
    Ok(SymbolProbe { k, max_rel_error: worst, mean_ratio: sum / cnt as f64 })
}

/// Minimum leading-symbol value along the recorded stage states.
pub fn min_symbol_along(log: &PropagatorLog) -> Result<f64> {
    let mut lo = f64::INFINITY;
    for st in log.steps() {
        lo = lo.min(crate::flow::symbol_bounds(&GeometryCache::new(&st.stages[0])?).0);
    }
    lo = lo.min(crate::flow::symbol_bounds(&GeometryCache::new(log.final_state())?).0);
    Ok(lo)
}

/// CFL step of the initial state (convenience for reports).
pub fn initial_dt(log: &PropagatorLog) -> f64 {
    log.steps.first().map(|s| s.dt).unwrap_or_else(|| {
        GeometryCache::new(&log.initial).map(|c| stability_dt(&c, 0.5)).unwrap_or(f64::NAN)
    })
}

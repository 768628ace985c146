//! MIWF and DeTurck velocities, the explicit time step restriction and the
//! RK4 time loop.

use std::fmt;

use crate::covariant::{background_hessian, christoffel_difference, contract4, BackgroundConnection};
use crate::error::{Error, Result};
use crate::geometry::{beltrami_laplacian, lower_order_at, willmore_energy, willmore_gradient, Ambient, GeometryCache};
use crate::grid::{stencil_wavenumber_max, Field, ImmersionGrid, MAX_DIM};
use crate::scalar::{c, Real};
use crate::tensor::{covariant_derivative, double_trace_hessian, Mat2};

/// Default floor on `|A⁰|²`.
pub const DEFAULT_MIN_A0SQ: f64 = 1e-4;
/// Default CFL safety factor.
pub const DEFAULT_SAFETY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FlowKind {
    #[default]
    Miwf,
    DeTurck,
}

impl FlowKind {
    pub fn name(self) -> &'static str {
        match self {
            FlowKind::Miwf => "miwf",
            FlowKind::DeTurck => "deturck",
        }
    }
}

impl std::str::FromStr for FlowKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "miwf" => Ok(FlowKind::Miwf),
            "deturck" => Ok(FlowKind::DeTurck),
            _ => Err(format!("unknown flow kind `{s}` (expected miwf or deturck)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub kind: FlowKind,
    pub t_end: f64,
    pub safety: f64,
    pub min_a0sq: f64,
    /// Store the immersion every this many steps (0 disables intermediate snapshots).
    pub snapshot_every: usize,
    /// Hard cap on the number of accepted steps.
    pub max_steps: Option<usize>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            kind: FlowKind::Miwf,
            t_end: 0.0,
            safety: DEFAULT_SAFETY,
            min_a0sq: DEFAULT_MIN_A0SQ,
            snapshot_every: 0,
            max_steps: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety must lie in (0, 1], got {}", self.safety));
        }
        if !(self.min_a0sq > 0.0 && self.min_a0sq.is_finite()) {
            return bad(format!("min_a0sq must be > 0, got {}", self.min_a0sq));
        }
        Ok(())
    }
}

/// `−|A⁰|^{-4} · ∇W`.
pub fn miwf_velocity<T: Real>(cache: &GeometryCache<T>, floor: f64) -> Result<Field<T>> {
    cache.check_umbilic_free(floor)?;
    let mut v = willmore_gradient(cache);
    for p in 0..v.points() {
        let a = cache.a0sq[p];
        let s = -T::one() / (a * a);
        for x in v.point_mut(p) {
            *x = s * *x;
        }
    }
    Ok(v)
}

/// `C^m_kl ∂_m f` as a rank-2 field.
fn christoffel_tangent<T: Real>(cache: &GeometryCache<T>, bg: &BackgroundConnection<T>) -> Field<T> {
    let m = &cache.metric;
    let n = m.n;
    let cdiff = christoffel_difference(cache, bg);
    let mut out = Field::zeros(m.nu(), m.nv(), 4 * n);
    for (p, cp) in cdiff.iter().enumerate() {
        let (fu, fv) = (m.df[0].point(p), m.df[1].point(p));
        let o = out.point_mut(p);
        for e in 0..4 {
            let (k, l) = (e / 2, e % 2);
            for cc in 0..n {
                o[e * n + cc] = cp[0][k][l] * fu[cc] + cp[1][k][l] * fv[cc];
            }
        }
    }
    out
}

/// DeTurck term
/// `Tan = P^Tan(g^ij g^kl ∇^f_ijkl f) − g^ij g^kl ∇^f_i ∇^f_j (C^m_kl ∂_m f)`.
pub fn tan_term<T: Real>(cache: &GeometryCache<T>, bg: &BackgroundConnection<T>) -> Result<Field<T>> {
    let m = &cache.metric;
    if !cache.hvec.same_grid(bg.f0().field()) || bg.f0().n() != m.n {
        return Err(Error::GridMismatch("background immersion does not match the evolving grid".into()));
    }
    let n = m.n;
    let fourth = double_trace_hessian(&cache.hess, n, &m.gamma, &m.ginv);
    let corr = double_trace_hessian(&christoffel_tangent(cache, bg), n, &m.gamma, &m.ginv);
    let mut out = Field::zeros(m.nu(), m.nv(), n);
    for p in 0..out.points() {
        let mut t = [T::zero(); MAX_DIM];
        m.tangent_part(p, fourth.point(p), &mut t);
        let o = out.point_mut(p);
        for cc in 0..n {
            o[cc] = t[cc] - corr.point(p)[cc];
        }
    }
    Ok(out)
}

fn scale_by_weight<T: Real>(cache: &GeometryCache<T>, mut v: Field<T>) -> Field<T> {
    let half = c::<T>(-0.5);
    for p in 0..v.points() {
        let a = cache.a0sq[p];
        let s = half / (a * a);
        for x in v.point_mut(p) {
            *x = s * *x;
        }
    }
    v
}

/// DeTurck-modified velocity
/// `−½|A⁰|^{-4}((ΔH)^⊥ + 2Q(A)H − ½|H|²H + Tan)` (default evaluation path).
pub fn deturck_velocity<T: Real>(cache: &GeometryCache<T>, bg: &BackgroundConnection<T>, floor: f64) -> Result<Field<T>> {
    cache.check_umbilic_free(floor)?;
    let n = cache.n();
    let tan = tan_term(cache, bg)?;
    let lap = beltrami_laplacian(cache, &cache.hvec);
    let mut out = Field::zeros(tan.nu(), tan.nv(), n);
    for p in 0..out.points() {
        let mut lapn = [T::zero(); MAX_DIM];
        cache.metric.normal_part(p, lap.point(p), &mut lapn);
        let rest = lower_order_at(cache, p);
        let o = out.point_mut(p);
        for cc in 0..n {
            o[cc] = lapn[cc] + rest[cc] + tan.point(p)[cc];
        }
    }
    Ok(scale_by_weight(cache, out))
}

/// Same velocity through the mixed fourth-order form
/// `−½|A⁰|^{-4}(g^ij g^kl ∇^f_i ∇^f_j ∇^{F0}_k ∇^{F0}_l f + 2Q(A)H − ½|H|²H)`.
pub fn deturck_velocity_mixed<T: Real>(
    cache: &GeometryCache<T>,
    bg: &BackgroundConnection<T>,
    floor: f64,
) -> Result<Field<T>> {
    cache.check_umbilic_free(floor)?;
    let m = &cache.metric;
    let n = m.n;
    let lambda0 = background_hessian(cache, bg);
    let d1 = covariant_derivative(&lambda0, 2, n, &m.gamma);
    let mixed = covariant_derivative(&d1, 3, n, &m.gamma);
    let mut out = contract4(cache, &mixed);
    for p in 0..out.points() {
        let rest = lower_order_at(cache, p);
        for (o, r) in out.point_mut(p).iter_mut().zip(rest) {
            *o = *o + r;
        }
    }
    Ok(scale_by_weight(cache, out))
}

/// Velocity of the selected flow at `f`.
pub fn velocity<T: Real>(
    kind: FlowKind,
    f: &ImmersionGrid<T>,
    bg: Option<&BackgroundConnection<T>>,
    floor: f64,
) -> Result<Field<T>> {
    let cache = GeometryCache::new(f)?;
    velocity_with_cache(kind, &cache, bg, floor)
}

pub fn velocity_with_cache<T: Real>(
    kind: FlowKind,
    cache: &GeometryCache<T>,
    bg: Option<&BackgroundConnection<T>>,
    floor: f64,
) -> Result<Field<T>> {
    match (kind, bg) {
        (FlowKind::Miwf, _) => miwf_velocity(cache, floor),
        (FlowKind::DeTurck, Some(bg)) => deturck_velocity(cache, bg, floor),
        (FlowKind::DeTurck, None) => Err(Error::InvalidParameter("DeTurck flow needs a background immersion".into())),
    }
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
fn sym_eigs(m: &Mat2<f64>) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let disc = (0.5 * (m[0][0] - m[1][1])).hypot(m[0][1]);
    (mean - disc, mean + disc)
}

/// Extremes over the grid of the leading symbol `½|A⁰|^{-4}(g^ij ξ_i ξ_j)²`
/// for Euclidean-unit covectors `|ξ| = 1`, i.e. of `½|A⁰|^{-4}λ(g^{-1})²`.
pub fn symbol_bounds<T: Real>(cache: &GeometryCache<T>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for p in 0..cache.a0sq.len() {
        let gi = cache.metric.ginv[p].map(|r| r.map(|x| x.value()));
        let (l0, l1) = sym_eigs(&gi);
        let a = cache.a0sq[p].value();
        let w = 0.5 / (a * a);
        lo = lo.min(w * l0 * l0);
        hi = hi.max(w * l1 * l1);
    }
    (lo, hi)
}

/// Largest stable step of classical RK4 for the frozen leading operator:
/// `dt = σ / (c_max · k_max⁴)` with `c_max` the largest symbol value and
/// `k_max = √2 · k̂ / min(du, dv)` the largest discrete wavenumber of the
/// composed derivative stencil.
pub fn stability_dt<T: Real>(cache: &GeometryCache<T>, safety: f64) -> f64 {
    let (_, c_max) = symbol_bounds(cache);
    let h = cache.metric.df[0].du().min(cache.metric.df[0].dv());
    let k_max = std::f64::consts::SQRT_2 * stencil_wavenumber_max() / h;
    safety / (c_max * k_max.powi(4))
}

/// One diagnostics record per accepted state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub min_a0sq: f64,
    pub max_speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HaltReason {
    Completed,
    MaxSteps,
    UmbilicDegeneracy,
    DegenerateMetric,
    NonFinite,
}

impl HaltReason {
    /// Whether the run stopped because the numerics broke down.
    pub fn is_numerical(self) -> bool {
        !matches!(self, HaltReason::Completed | HaltReason::MaxSteps)
    }

    fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::UmbilicDegeneracy { .. } => Some(HaltReason::UmbilicDegeneracy),
            Error::DegenerateMetric { .. } => Some(HaltReason::DegenerateMetric),
            Error::NonFinite => Some(HaltReason::NonFinite),
            _ => None,
        }
    }
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HaltReason::Completed => "completed",
            HaltReason::MaxSteps => "max_steps",
            HaltReason::UmbilicDegeneracy => "umbilic_degeneracy",
            HaltReason::DegenerateMetric => "degenerate_metric",
            HaltReason::NonFinite => "non_finite",
        })
    }
}

/// Accepted state of the flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub step: usize,
    pub t: f64,
    pub f: ImmersionGrid<f64>,
    pub energy: f64,
    pub min_a0sq: f64,
    pub max_speed: f64,
    pub last_dt: f64,
    /// Velocity at `f`, reused as the first RK stage of the next step.
    pub velocity: Field<f64>,
    pub cache: GeometryCache<f64>,
}

impl FlowState {
    /// Evaluates geometry, energy and velocity of `f`.
    pub fn new(
        step: usize,
        t: f64,
        last_dt: f64,
        f: ImmersionGrid<f64>,
        kind: FlowKind,
        bg: Option<&BackgroundConnection<f64>>,
        floor: f64,
    ) -> Result<Self> {
        let cache = GeometryCache::new(&f)?;
        let velocity = velocity_with_cache(kind, &cache, bg, floor)?;
        if !velocity.is_finite() {
            return Err(Error::NonFinite);
        }
        let energy = willmore_energy(&f, &cache, Ambient::Euclidean)?;
        if !energy.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(FlowState {
            step,
            t,
            energy,
            min_a0sq: cache.min_a0sq().0,
            max_speed: velocity.max_norm(),
            last_dt,
            f,
            velocity,
            cache,
        })
    }

    pub fn row(&self) -> DiagnosticsRow {
        DiagnosticsRow {
            step: self.step,
            t: self.t,
            dt: self.last_dt,
            energy: self.energy,
            min_a0sq: self.min_a0sq,
            max_speed: self.max_speed,
        }
    }
}

/// The four stage states and stage velocities of one RK4 step.
#[derive(Clone, Debug)]
pub struct Rk4Stages {
    pub t: f64,
    pub dt: f64,
    pub states: [ImmersionGrid<f64>; 4],
    pub slopes: [Field<f64>; 4],
}

/// Classical RK4 step for `∂_t f = V(f)` with `k1` supplied by the caller.
pub fn rk4_stages(
    f: &ImmersionGrid<f64>,
    k1: &Field<f64>,
    t: f64,
    dt: f64,
    mut vel: impl FnMut(&ImmersionGrid<f64>) -> Result<Field<f64>>,
) -> Result<(ImmersionGrid<f64>, Rk4Stages)> {
    let check = |g: ImmersionGrid<f64>| if g.is_finite() { Ok(g) } else { Err(Error::NonFinite) };
    let y2 = check(f.perturbed(0.5 * dt, k1))?;
    let k2 = vel(&y2)?;
    let y3 = check(f.perturbed(0.5 * dt, &k2))?;
    let k3 = vel(&y3)?;
    let y4 = check(f.perturbed(dt, &k3))?;
    let k4 = vel(&y4)?;
    let mut next = f.field().clone();
    let w = dt / 6.0;
    next.add_assign_scaled(w, k1);
    next.add_assign_scaled(2.0 * w, &k2);
    next.add_assign_scaled(2.0 * w, &k3);
    next.add_assign_scaled(w, &k4);
    let next = check(ImmersionGrid::from_field_unchecked(next))?;
    let stages = Rk4Stages { t, dt, states: [f.clone(), y2, y3, y4], slopes: [k1.clone(), k2, k3, k4] };
    Ok((next, stages))
}

/// Advances an accepted state by one RK4 step of size `dt`.
pub fn rk4_step(
    state: &FlowState,
    dt: f64,
    kind: FlowKind,
    bg: Option<&BackgroundConnection<f64>>,
    floor: f64,
) -> Result<(FlowState, Rk4Stages)> {
    let (next, stages) = rk4_stages(&state.f, &state.velocity, state.t, dt, |y| velocity(kind, y, bg, floor))?;
    let st = FlowState::new(state.step + 1, state.t + dt, dt, next, kind, bg, floor)?;
    Ok((st, stages))
}

/// Output of [`run_flow`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    /// `(step, t, immersion)`.
    pub snapshots: Vec<(usize, f64, ImmersionGrid<f64>)>,
    pub halt: HaltReason,
    /// Error that caused a numerical halt.
    pub error: Option<Error>,
    pub final_state: FlowState,
}

/// Runs the flow from `f0` until `t_end`, `max_steps` or a numerical halt.
///
/// For the DeTurck flow `bg` defaults to `f0`. `observer` sees every
/// completed step's stage data.
pub fn run_flow_observed(
    f0: &ImmersionGrid<f64>,
    cfg: &FlowConfig,
    bg: Option<&BackgroundConnection<f64>>,
    mut observer: impl FnMut(&Rk4Stages),
) -> Result<Trajectory> {
    cfg.validate()?;
    let own_bg;
    let bg = match (cfg.kind, bg) {
        (FlowKind::DeTurck, None) => {
            own_bg = BackgroundConnection::new(f0)?;
            Some(&own_bg)
        }
        (FlowKind::DeTurck, Some(b)) => {
            f0.check_compatible(b.f0().field())?;
            Some(b)
        }
        (FlowKind::Miwf, _) => None,
    };
    let mut state = FlowState::new(0, 0.0, 0.0, f0.clone(), cfg.kind, bg, cfg.min_a0sq)?;
    let mut rows = vec![state.row()];
    let mut snapshots = vec![(0, 0.0, f0.clone())];
    let mut halt = HaltReason::Completed;
    let mut error = None;
    loop {
        if state.t >= cfg.t_end {
            break;
        }
        if cfg.max_steps.is_some_and(|m| state.step >= m) {
            halt = HaltReason::MaxSteps;
            break;
        }
        let mut dt = stability_dt(&state.cache, cfg.safety);
        if state.t + dt > cfg.t_end {
            dt = cfg.t_end - state.t;
        }
        match rk4_step(&state, dt, cfg.kind, bg, cfg.min_a0sq) {
            Ok((next, stages)) => {
                observer(&stages);
                state = next;
                rows.push(state.row());
                if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
                    snapshots.push((state.step, state.t, state.f.clone()));
                }
            }
            Err(e) => match HaltReason::from_error(&e) {
                Some(r) => {
                    halt = r;
                    error = Some(e);
                    break;
                }
                None => return Err(e),
            },
        }
    }
    if snapshots.last().map(|s| s.0) != Some(state.step) {
        snapshots.push((state.step, state.t, state.f.clone()));
    }
    Ok(Trajectory { rows, snapshots, halt, error, final_state: state })
}

pub fn run_flow(f0: &ImmersionGrid<f64>, cfg: &FlowConfig, bg: Option<&BackgroundConnection<f64>>) -> Result<Trajectory> {
    run_flow_observed(f0, cfg, bg, |_| {})
}

//! Closed curves on `S²`, their elastic flow, and Hopf tori in `S³`.
//!
//! Points of `C²` are stored as `(Re z₁, Im z₁, Re z₂, Im z₂) ∈ R⁴`; the Hopf
//! map is `π(z) = (2 Re(z₁ z̄₂), 2 Im(z₁ z̄₂), |z₁|² − |z₂|²)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{willmore_energy, Ambient, GeometryCache};
use crate::grid::{stencil_wavenumber_max, Field, ImmersionGrid};

type V3 = [f64; 3];

fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: V3) -> V3 {
    let r = dot(&a, &a).sqrt();
    [a[0] / r, a[1] / r, a[2] / r]
}

/// Periodic sampling of a closed curve on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveGrid {
    points: Vec<V3>,
}

impl CurveGrid {
    /// Requires at least 16 samples, each on `S²` to `1e-10`.
    pub fn new(points: Vec<V3>) -> Result<Self> {
        if points.len() < 16 {
            return Err(Error::InvalidGrid(format!("a curve needs at least 16 samples, got {}", points.len())));
        }
        for p in &points {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            let dev = (dot(p, p).sqrt() - 1.0).abs();
            if dev > 1e-10 {
                return Err(Error::AmbientMismatch { deviation: dev });
            }
        }
        Ok(CurveGrid { points })
    }

    /// Samples `γ(s)`, `s = 2πi/N`, projected radially onto `S²`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> V3) -> Result<Self> {
        let h = 2.0 * PI / n as f64;
        Self::new((0..n).map(|i| normalize(f(i as f64 * h))).collect())
    }

    pub fn great_circle(n: usize) -> Result<Self> {
        Self::from_fn(n, |s| [s.cos(), s.sin(), 0.0])
    }

    /// Circle at polar angle `theta0`.
    pub fn latitude(n: usize, theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < PI) {
            return Err(Error::InvalidParameter(format!("polar angle must lie in (0, π), got {theta0}")));
        }
        let (st, ct) = theta0.sin_cos();
        Self::from_fn(n, |s| [st * s.cos(), st * s.sin(), ct])
    }

    /// `normalize(cos s, sin s, a sin(m s))`.
    pub fn wavy(n: usize, amplitude: f64, mode: u32) -> Result<Self> {
        Self::from_fn(n, |s| [s.cos(), s.sin(), amplitude * (mode as f64 * s).sin()])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[V3] {
        &self.points
    }

    /// Parameter spacing `2π/N`.
    pub fn ds(&self) -> f64 {
        2.0 * PI / self.points.len() as f64
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut pts = self.points.clone();
        pts[1..].reverse();
        CurveGrid { points: pts }
    }

    /// Applies a 3×3 matrix to every sample (renormalized).
    pub fn transformed(&self, r: &[V3; 3]) -> Result<Self> {
        Self::new(self.points.iter().map(|p| normalize([dot(&r[0], p), dot(&r[1], p), dot(&r[2], p)])).collect())
    }

    fn field(&self) -> Field<f64> {
        Field::from_vec(self.len(), 1, 3, self.points.iter().flatten().copied().collect()).unwrap()
    }
}

fn to_v3(f: &Field<f64>) -> Vec<V3> {
    (0..f.points()).map(|p| [f.point(p)[0], f.point(p)[1], f.point(p)[2]]).collect()
}

/// Periodic derivative of a scalar sequence with the surface stencil.
fn d_scalar(x: &[f64]) -> Vec<f64> {
    Field::from_vec(x.len(), 1, 1, x.to_vec()).unwrap().d_u().into_vec()
}

/// Arclength element, frame and curvature of a curve on `S²`.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    /// `|γ'|`.
    pub speed: Vec<f64>,
    pub tangent: Vec<V3>,
    /// Oriented unit normal `γ × T` in `T_γS²`.
    pub normal: Vec<V3>,
    /// Geodesic curvature vector.
    pub kvec: Vec<V3>,
    /// Signed geodesic curvature `⟨κ⃗, N⟩`.
    pub kappa: Vec<f64>,
}

pub fn curve_geometry(gamma: &CurveGrid) -> Result<CurveGeometry> {
    let f = gamma.field();
    let d1 = to_v3(&f.d_u());
    let d2 = to_v3(&f.d_u().d_u());
    let n = gamma.len();
    let mut out = CurveGeometry {
        speed: Vec::with_capacity(n),
        tangent: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        kvec: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
    };
    for i in 0..n {
        let g = &gamma.points[i];
        let sp = dot(&d1[i], &d1[i]).sqrt();
        if !(sp >= 1e-10) {
            return Err(Error::IrregularCurve { index: i, speed: sp });
        }
        let t = [d1[i][0] / sp, d1[i][1] / sp, d1[i][2] / sp];
        let a = dot(&d2[i], &t);
        let mut k = [0.0; 3];
        for c in 0..3 {
            k[c] = (d2[i][c] - a * t[c]) / (sp * sp);
        }
        // drop the component along γ (normal curvature of S²)
        let kg = dot(&k, g);
        for c in 0..3 {
            k[c] -= kg * g[c];
        }
        let nrm = cross(g, &t);
        out.kappa.push(dot(&k, &nrm));
        out.speed.push(sp);
        out.tangent.push(t);
        out.normal.push(nrm);
        out.kvec.push(k);
    }
    Ok(out)
}

/// `W̃(γ) = ∫ (1 + |κ⃗|²) ds` by the trapezoid rule.
pub fn elastic_energy(gamma: &CurveGrid) -> Result<f64> {
    let g = curve_geometry(gamma)?;
    let h = gamma.ds();
    Ok(g.speed.iter().zip(&g.kvec).map(|(sp, k)| (1.0 + dot(k, k)) * sp * h).sum())
}

/// `−(κ² + 1)^{-2}(2 κ_ss + κ³ + κ) N`.
pub fn curve_flow_velocity(gamma: &CurveGrid) -> Result<Vec<V3>> {
    let g = curve_geometry(gamma)?;
    let ks: Vec<f64> = d_scalar(&g.kappa).iter().zip(&g.speed).map(|(d, s)| d / s).collect();
    let kss: Vec<f64> = d_scalar(&ks).iter().zip(&g.speed).map(|(d, s)| d / s).collect();
    Ok((0..gamma.len())
        .map(|i| {
            let k = g.kappa[i];
            let q = 1.0 + k * k;
            let s = -(2.0 * kss[i] + k * k * k + k) / (q * q);
            let nrm = g.normal[i];
            [s * nrm[0], s * nrm[1], s * nrm[2]]
        })
        .collect())
}

/// RK4 step restriction for the curve flow: `σ / (c_max k_max⁴)` with
/// `c_max = max 2(κ² + 1)^{-2}|γ'|^{-4}`.
pub fn curve_stability_dt(gamma: &CurveGrid, safety: f64) -> Result<f64> {
    let g = curve_geometry(gamma)?;
    let c_max = g
        .kappa
        .iter()
        .zip(&g.speed)
        .map(|(k, s)| 2.0 / ((1.0 + k * k).powi(2) * s.powi(4)))
        .fold(0.0, f64::max);
    let k_max = stencil_wavenumber_max() / gamma.ds();
    Ok(safety / (c_max * k_max.powi(4)))
}

fn advance(gamma: &CurveGrid, k: &[V3], a: f64) -> Result<CurveGrid> {
    let pts = gamma.points.iter().zip(k).map(|(p, v)| [p[0] + a * v[0], p[1] + a * v[1], p[2] + a * v[2]]);
    let pts: Vec<V3> = pts.collect();
    if pts.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(CurveGrid { points: pts })
}

/// One RK4 step followed by radial projection onto `S²`.
pub fn curve_flow_step(gamma: &CurveGrid, dt: f64) -> Result<CurveGrid> {
    let k1 = curve_flow_velocity(gamma)?;
    let k2 = curve_flow_velocity(&advance(gamma, &k1, 0.5 * dt)?)?;
    let k3 = curve_flow_velocity(&advance(gamma, &k2, 0.5 * dt)?)?;
    let k4 = curve_flow_velocity(&advance(gamma, &k3, dt)?)?;
    let w = dt / 6.0;
    let pts = (0..gamma.len())
        .map(|i| {
            let mut p = gamma.points[i];
            for c in 0..3 {
                p[c] += w * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            }
            normalize(p)
        })
        .collect::<Vec<_>>();
    CurveGrid::new(pts)
}

/// Diagnostics of a curve-flow run: `(step, t, dt, W̃, max speed)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub max_speed: f64,
}

/// Runs `steps` RK4 steps at the CFL step size scaled by `safety`.
pub fn run_curve_flow(gamma: &CurveGrid, steps: usize, safety: f64) -> Result<(CurveGrid, Vec<CurveRow>)> {
    let speed = |g: &CurveGrid| -> Result<f64> {
        Ok(curve_flow_velocity(g)?.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max))
    };
    let mut g = gamma.clone();
    let mut t = 0.0;
    let mut rows = vec![CurveRow { step: 0, t, dt: 0.0, energy: elastic_energy(&g)?, max_speed: speed(&g)? }];
    for step in 1..=steps {
        let dt = curve_stability_dt(&g, safety)?;
        g = curve_flow_step(&g, dt)?;
        t += dt;
        rows.push(CurveRow { step, t, dt, energy: elastic_energy(&g)?, max_speed: speed(&g)? });
    }
    Ok((g, rows))
}

type C2 = [f64; 4];

/// Hopf map `S³ → S²`.
pub fn hopf_map(z: &C2) -> V3 {
    let (a, b, c, d) = (z[0], z[1], z[2], z[3]);
    // z₁ z̄₂ = (a + ib)(c − id)
    [2.0 * (a * c + b * d), 2.0 * (b * c - a * d), a * a + b * b - c * c - d * d]
}

/// A point of the fiber over `p ∈ S²`.
pub fn section(p: &V3) -> C2 {
    let (x, y, w) = (p[0], p[1], p[2]);
    if w >= 0.0 {
        let z1 = ((1.0 + w) / 2.0).sqrt();
        // z₂ = (x − iy) / (2 z₁)
        [z1, 0.0, x / (2.0 * z1), -y / (2.0 * z1)]
    } else {
        let z2 = ((1.0 - w) / 2.0).sqrt();
        // z₁ = (x + iy) / (2 z₂)
        [x / (2.0 * z2), y / (2.0 * z2), z2, 0.0]
    }
}

/// `z' = M(ω) z` with `M(ω) = ½ i (ω₁ σ₁ − ω₂ σ₂ + ω₃ σ₃)` conjugated to this
/// Hopf map: infinitesimal rotation of `S²` with angular velocity `ω`,
/// lifted horizontally.
fn rotate_generator(w: &V3, z: &C2) -> C2 {
    let (z1r, z1i, z2r, z2i) = (z[0], z[1], z[2], z[3]);
    // H z with H = [[w3, w1 + i w2], [w1 − i w2, −w3]]
    let h1r = w[2] * z1r + w[0] * z2r - w[1] * z2i;
    let h1i = w[2] * z1i + w[0] * z2i + w[1] * z2r;
    let h2r = w[0] * z1r + w[1] * z1i - w[2] * z2r;
    let h2i = w[0] * z1i - w[1] * z1r - w[2] * z2i;
    // ½ i H z
    [-0.5 * h1i, 0.5 * h1r, -0.5 * h2i, 0.5 * h2r]
}

/// Point of the fiber over `p` closest to `z`.
fn onto_fiber(p: &V3, z: &C2) -> C2 {
    let s = section(p);
    // σ† z
    let re = s[0] * z[0] + s[1] * z[1] + s[2] * z[2] + s[3] * z[3];
    let im = s[0] * z[1] - s[1] * z[0] + s[2] * z[3] - s[3] * z[2];
    let r = re.hypot(im);
    let (c, sn) = (re / r, im / r);
    [c * s[0] - sn * s[1], sn * s[0] + c * s[1], c * s[2] - sn * s[3], sn * s[2] + c * s[3]]
}

/// Hopf torus `π^{-1}(trace γ)` sampled on an `nθ × N` grid: `u = θ` runs
/// along the fibers, `v = s` along the curve.
///
/// The horizontal lift is integrated with RK4 (midpoint data by 4-point
/// interpolation) and snapped back onto the exact fiber after every step;
/// the holonomy is spread as a uniform fiber rotation so the torus closes.
pub fn hopf_torus(gamma: &CurveGrid, ntheta: usize) -> Result<ImmersionGrid<f64>> {
    let n = gamma.len();
    let f = gamma.field();
    let d1 = to_v3(&f.d_u());
    // angular velocity carrying γ along γ'
    let omega: Vec<V3> = (0..n).map(|i| cross(&gamma.points[i], &d1[i])).collect();
    let h = gamma.ds();
    let mid = |i: usize| -> V3 {
        let at = |k: isize| &omega[k.rem_euclid(n as isize) as usize];
        let i = i as isize;
        let (a, b, c, d) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        [0, 1, 2].map(|k| (-a[k] + 9.0 * b[k] + 9.0 * c[k] - d[k]) / 16.0)
    };
    let axpy = |z: &C2, a: f64, k: &C2| [z[0] + a * k[0], z[1] + a * k[1], z[2] + a * k[2], z[3] + a * k[3]];
    let mut lift = Vec::with_capacity(n + 1);
    let mut z = section(&gamma.points[0]);
    lift.push(z);
    for i in 0..n {
        let (w0, wm, w1) = (omega[i], mid(i), omega[(i + 1) % n]);
        let k1 = rotate_generator(&w0, &z);
        let k2 = rotate_generator(&wm, &axpy(&z, 0.5 * h, &k1));
        let k3 = rotate_generator(&wm, &axpy(&z, 0.5 * h, &k2));
        let k4 = rotate_generator(&w1, &axpy(&z, h, &k3));
        for c in 0..4 {
            z[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        z = onto_fiber(&gamma.points[(i + 1) % n], &z);
        lift.push(z);
    }
    // holonomy: z(2π) = e^{iΔ} z(0)
    let (z0, ze) = (lift[0], lift[n]);
    let re = z0[0] * ze[0] + z0[1] * ze[1] + z0[2] * ze[2] + z0[3] * ze[3];
    let im = z0[0] * ze[1] - z0[1] * ze[0] + z0[2] * ze[3] - z0[3] * ze[2];
    let delta = im.atan2(re);
    let phase = |z: &C2, a: f64| -> C2 {
        let (s, c) = a.sin_cos();
        [c * z[0] - s * z[1], s * z[0] + c * z[1], c * z[2] - s * z[3], s * z[2] + c * z[3]]
    };
    ImmersionGrid::from_fn(ntheta, n, 4, |theta, s, out| {
        let j = (s / h).round() as usize;
        out.copy_from_slice(&phase(&lift[j], theta - delta * s / (2.0 * PI)));
    })
}

/// Curve traced by the `θ = 0` row of a Hopf torus.
pub fn hopf_project(lift: &ImmersionGrid<f64>) -> Result<CurveGrid> {
    if lift.n() != 4 {
        return Err(Error::GridMismatch("Hopf projection needs a surface in R^4".into()));
    }
    let pts = (0..lift.nv()).map(|j| {
        let p = lift.at(0, j);
        hopf_map(&[p[0], p[1], p[2], p[3]])
    });
    CurveGrid::new(pts.collect())
}

/// Willmore energy (ambient `S³`) of the Hopf torus against `π · W̃(γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WillmoreElastic {
    pub willmore: f64,
    pub pi_elastic: f64,
    pub rel_diff: f64,
}

pub fn willmore_elastic_check(gamma: &CurveGrid, ntheta: usize) -> Result<WillmoreElastic> {
    let torus = hopf_torus(gamma, ntheta)?;
    let w = willmore_energy(&torus, &GeometryCache::new(&torus)?, Ambient::Sphere)?;
    let e = PI * elastic_energy(gamma)?;
    Ok(WillmoreElastic { willmore: w, pi_elastic: e, rel_diff: (w - e).abs() / e })
}

//! Pointwise differential geometry of a sampled immersion: first fundamental
//! form, Christoffel symbols, second fundamental form, mean curvature vector,
//! the normal Laplacian, the `Q` operator and the Willmore functional with its
//! `L²` gradient.

use crate::error::{Error, Result};
use crate::grid::{Field, ImmersionGrid, MAX_DIM};
use crate::scalar::{c, Real};
use crate::tensor::{covariant_derivative, dot, trace2, Christoffel, Mat2};

/// Lower bound on `det g` below which a grid point counts as degenerate.
pub const TOL_IMMERSION: f64 = 1e-10;

/// Metric data of an immersion at every grid point.
#[derive(Clone, Debug)]
pub struct Metric<T> {
    pub n: usize,
    /// `∂_u f`, `∂_v f`.
    pub df: [Field<T>; 2],
    /// Partial second derivatives `∂_{kl} f` as a rank-2 field.
    pub d2f: Field<T>,
    pub g: Vec<Mat2<T>>,
    pub ginv: Vec<Mat2<T>>,
    pub detg: Vec<T>,
    pub gamma: Vec<Christoffel<T>>,
}

/// Metric plus curvature data.
#[derive(Clone, Debug)]
pub struct GeometryCache<T> {
    pub metric: Metric<T>,
    /// Covariant Hessian `∇_k ∇_l f = ∂_{kl} f − Γ^m_{kl} ∂_m f` (rank 2).
    pub hess: Field<T>,
    /// Second fundamental form, normal projection of `hess` (rank 2).
    pub a: Field<T>,
    /// Trace-free part `A⁰ = A − ½ g H` (rank 2).
    pub a0: Field<T>,
    /// Mean curvature vector `H = g^{ij} A_ij`.
    pub hvec: Field<T>,
    /// `|A⁰|² = g^{ik} g^{jl} ⟨A⁰_ij, A⁰_kl⟩`.
    pub a0sq: Vec<T>,
}

/// Ambient space for the Willmore functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ambient {
    Euclidean,
    /// Unit sphere `S^{n-1}`, sectional curvature 1.
    Sphere,
}

/// Which side of the normal-Laplacian identity assembles the gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GradientPath {
    /// `½(Δ^⊥H + Q(A⁰)H)`.
    NormalLaplacian,
    /// `½((ΔH)^⊥ + 2Q(A)H − ½|H|²H)`.
    #[default]
    Decomposed,
}

/// Inverse of a symmetric 2×2 matrix by the cofactor formula.
#[inline]
pub fn inverse2<T: Real>(g: &Mat2<T>, det: T) -> Mat2<T> {
    let inv = T::one() / det;
    [[g[1][1] * inv, -g[0][1] * inv], [-g[1][0] * inv, g[0][0] * inv]]
}

/// Computes `g`, `g^{-1}` (cofactor formula), `det g` and `Γ`.
pub fn metric_pack<T: Real>(f: &ImmersionGrid<T>) -> Result<Metric<T>> {
    metric_pack_with_tol(f, TOL_IMMERSION)
}

pub fn metric_pack_with_tol<T: Real>(f: &ImmersionGrid<T>, tol: f64) -> Result<Metric<T>> {
    let n = f.n();
    let fu = f.d_u();
    let fv = f.d_v();
    let fuu = fu.d_u();
    let fuv = fu.d_v();
    let fvv = fv.d_v();
    let np = f.points();
    let mut d2f = Field::zeros(f.nu(), f.nv(), 4 * n);
    let mut g = Vec::with_capacity(np);
    let mut ginv = Vec::with_capacity(np);
    let mut detg = Vec::with_capacity(np);
    let mut gamma = Vec::with_capacity(np);
    for p in 0..np {
        {
            let o = d2f.point_mut(p);
            o[..n].copy_from_slice(fuu.point(p));
            o[n..2 * n].copy_from_slice(fuv.point(p));
            o[2 * n..3 * n].copy_from_slice(fuv.point(p));
            o[3 * n..].copy_from_slice(fvv.point(p));
        }
        let d = [fu.point(p), fv.point(p)];
        let gp = [[dot(d[0], d[0]), dot(d[0], d[1])], [dot(d[1], d[0]), dot(d[1], d[1])]];
        let det = gp[0][0] * gp[1][1] - gp[0][1] * gp[1][0];
        if !(det.value() > tol) {
            let (i, j) = (p % f.nu(), p / f.nu());
            if !det.is_finite() {
                return Err(Error::NonFinite);
            }
            return Err(Error::DegenerateMetric { i, j, detg: det.value() });
        }
        let gi = inverse2(&gp, det);
        let d2 = d2f.point(p);
        // ⟨∂_kl f, ∂_j f⟩
        let mut proj = [[[T::zero(); 2]; 2]; 2];
        for k in 0..2 {
            for l in 0..2 {
                let kl = &d2[(2 * k + l) * n..(2 * k + l + 1) * n];
                for (jj, dj) in d.iter().enumerate() {
                    proj[k][l][jj] = dot(kl, dj);
                }
            }
        }
        let mut gm: Christoffel<T> = [[[T::zero(); 2]; 2]; 2];
        for m in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    gm[m][k][l] = gi[m][0] * proj[k][l][0] + gi[m][1] * proj[k][l][1];
                }
            }
        }
        g.push(gp);
        ginv.push(gi);
        detg.push(det);
        gamma.push(gm);
    }
    Ok(Metric { n, df: [fu, fv], d2f, g, ginv, detg, gamma })
}

impl<T: Real> Metric<T> {
    pub fn nu(&self) -> usize {
        self.df[0].nu()
    }
    pub fn nv(&self) -> usize {
        self.df[0].nv()
    }
    pub fn points(&self) -> usize {
        self.df[0].points()
    }

    /// Tangential projection `P^Tan v = ∂_m f g^{mj} ⟨∂_j f, v⟩` at point `p`.
    #[inline]
    pub fn tangent_part(&self, p: usize, v: &[T], out: &mut [T]) {
        let n = self.n;
        let fu = self.df[0].point(p);
        let fv = self.df[1].point(p);
        let a = [dot(fu, v), dot(fv, v)];
        let gi = &self.ginv[p];
        let w0 = gi[0][0] * a[0] + gi[0][1] * a[1];
        let w1 = gi[1][0] * a[0] + gi[1][1] * a[1];
        for cc in 0..n {
            out[cc] = w0 * fu[cc] + w1 * fv[cc];
        }
    }

    /// `v^⊥ = v − P^Tan v` at point `p`.
    #[inline]
    pub fn normal_part(&self, p: usize, v: &[T], out: &mut [T]) {
        let mut t = [T::zero(); MAX_DIM];
        self.tangent_part(p, v, &mut t);
        for cc in 0..self.n {
            out[cc] = v[cc] - t[cc];
        }
    }

    /// Normal projection of a whole `R^n` field.
    pub fn normal_field(&self, v: &Field<T>) -> Field<T> {
        let mut out = Field::zeros(v.nu(), v.nv(), self.n);
        for p in 0..v.points() {
            self.normal_part(p, v.point(p), out.point_mut(p));
        }
        out
    }

    pub fn tangent_field(&self, v: &Field<T>) -> Field<T> {
        let mut out = Field::zeros(v.nu(), v.nv(), self.n);
        for p in 0..v.points() {
            self.tangent_part(p, v.point(p), out.point_mut(p));
        }
        out
    }

    /// Area element `√det g · du · dv` per grid point.
    pub fn area_weights(&self) -> Vec<T> {
        let cell = c::<T>(self.df[0].du() * self.df[0].dv());
        self.detg.iter().map(|&d| d.sqrt() * cell).collect()
    }
}

/// Completes the cache with `A`, `A⁰`, `H` and `|A⁰|²`.
pub fn curvature_pack<T: Real>(metric: Metric<T>) -> GeometryCache<T> {
    let n = metric.n;
    let (nu, nv) = (metric.nu(), metric.nv());
    let np = metric.points();
    let mut hess = Field::zeros(nu, nv, 4 * n);
    let mut a = Field::zeros(nu, nv, 4 * n);
    let mut a0 = Field::zeros(nu, nv, 4 * n);
    let mut hvec = Field::zeros(nu, nv, n);
    let mut a0sq = Vec::with_capacity(np);
    let half = c::<T>(0.5);
    for p in 0..np {
        let d2 = metric.d2f.point(p);
        let fu = metric.df[0].point(p);
        let fv = metric.df[1].point(p);
        let gm = &metric.gamma[p];
        let gp = &metric.g[p];
        let gi = &metric.ginv[p];
        let mut hp = [T::zero(); 4 * MAX_DIM];
        let mut ap = [T::zero(); 4 * MAX_DIM];
        for e in 0..4 {
            let (k, l) = (e / 2, e % 2);
            for cc in 0..n {
                hp[e * n + cc] = d2[e * n + cc] - gm[0][k][l] * fu[cc] - gm[1][k][l] * fv[cc];
            }
            let (src, dst) = (&hp[e * n..(e + 1) * n], &mut ap[e * n..(e + 1) * n]);
            metric.normal_part(p, src, dst);
        }
        let mut h = [T::zero(); MAX_DIM];
        trace2(&ap, gi, n, &mut h);
        let mut a0p = [T::zero(); 4 * MAX_DIM];
        for e in 0..4 {
            let (k, l) = (e / 2, e % 2);
            for cc in 0..n {
                a0p[e * n + cc] = ap[e * n + cc] - half * gp[k][l] * h[cc];
            }
        }
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let x = &a0p[(2 * i + j) * n..(2 * i + j + 1) * n];
                        let y = &a0p[(2 * k + l) * n..(2 * k + l + 1) * n];
                        s = s + gi[i][k] * gi[j][l] * dot(x, y);
                    }
                }
            }
        }
        hess.point_mut(p).copy_from_slice(&hp[..4 * n]);
        a.point_mut(p).copy_from_slice(&ap[..4 * n]);
        a0.point_mut(p).copy_from_slice(&a0p[..4 * n]);
        hvec.point_mut(p).copy_from_slice(&h[..n]);
        a0sq.push(s);
    }
    GeometryCache { metric, hess, a, a0, hvec, a0sq }
}

impl<T: Real> GeometryCache<T> {
    /// Full geometry of `f`.
    pub fn new(f: &ImmersionGrid<T>) -> Result<Self> {
        Ok(curvature_pack(metric_pack(f)?))
    }

    pub fn n(&self) -> usize {
        self.metric.n
    }

    /// Smallest `|A⁰|²` over the grid and where it occurs.
    pub fn min_a0sq(&self) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (p, v) in self.a0sq.iter().enumerate() {
            if v.value() < best.0 || v.value().is_nan() {
                best = (v.value(), p);
            }
        }
        best
    }

    /// Fails with `UmbilicDegeneracy` unless `|A⁰|² > floor` everywhere.
    pub fn check_umbilic_free(&self, floor: f64) -> Result<()> {
        let (m, p) = self.min_a0sq();
        if m.is_nan() {
            return Err(Error::NonFinite);
        }
        if m <= floor {
            let nu = self.metric.nu();
            return Err(Error::UmbilicDegeneracy { i: p % nu, j: p / nu, a0sq: m });
        }
        Ok(())
    }
}

/// `Q(T)(φ) = g^{ij} g^{kl} T_ik ⟨T_jl, φ⟩` at a single point.
#[inline]
pub fn q_at<T: Real>(t: &[T], phi: &[T], ginv: &Mat2<T>, n: usize, out: &mut [T]) {
    // ⟨T_jl, φ⟩
    let mut s = [[T::zero(); 2]; 2];
    for j in 0..2 {
        for l in 0..2 {
            s[j][l] = dot(&t[(2 * j + l) * n..(2 * j + l + 1) * n], phi);
        }
    }
    for o in out.iter_mut().take(n) {
        *o = T::zero();
    }
    for i in 0..2 {
        for k in 0..2 {
            let mut w = T::zero();
            for j in 0..2 {
                for l in 0..2 {
                    w = w + ginv[i][j] * ginv[k][l] * s[j][l];
                }
            }
            let tik = &t[(2 * i + k) * n..(2 * i + k + 1) * n];
            for cc in 0..n {
                out[cc] = out[cc] + w * tik[cc];
            }
        }
    }
}

/// `Q(tensor)(φ)` over the grid, for `tensor = A` or `A⁰`.
pub fn q_operator<T: Real>(cache: &GeometryCache<T>, tensor: &Field<T>, phi: &Field<T>) -> Field<T> {
    let n = cache.n();
    let mut out = Field::zeros(phi.nu(), phi.nv(), n);
    for p in 0..phi.points() {
        q_at(tensor.point(p), phi.point(p), &cache.metric.ginv[p], n, out.point_mut(p));
    }
    out
}

/// Beltrami–Laplacian `Δ_f V = g^{kl}(∂_kl V − Γ^m_kl ∂_m V)` of an `R^n` field.
pub fn beltrami_laplacian<T: Real>(cache: &GeometryCache<T>, v: &Field<T>) -> Field<T> {
    let n = cache.n();
    let m = &cache.metric;
    let d1 = covariant_derivative(v, 0, n, &m.gamma);
    let d2 = covariant_derivative(&d1, 1, n, &m.gamma);
    let mut out = Field::zeros(v.nu(), v.nv(), n);
    for p in 0..v.points() {
        trace2(d2.point(p), &m.ginv[p], n, out.point_mut(p));
    }
    out
}

/// Normal Beltrami–Laplacian `Δ^⊥ V = g^{kl}(∇^⊥_k ∇^⊥_l V − Γ^m_kl ∇^⊥_m V)`
/// with `∇^⊥_i V = (∂_i V)^⊥`. `V` is projected to the normal bundle first.
pub fn normal_laplacian<T: Real>(cache: &GeometryCache<T>, v: &Field<T>) -> Field<T> {
    let n = cache.n();
    let m = &cache.metric;
    let vn = m.normal_field(v);
    let w = [m.normal_field(&vn.d_u()), m.normal_field(&vn.d_v())];
    let dw = [[w[0].d_u(), w[0].d_v()], [w[1].d_u(), w[1].d_v()]];
    let mut out = Field::zeros(v.nu(), v.nv(), n);
    for p in 0..v.points() {
        let gi = &m.ginv[p];
        let gm = &m.gamma[p];
        let mut acc = [T::zero(); MAX_DIM];
        for k in 0..2 {
            for l in 0..2 {
                let mut term = [T::zero(); MAX_DIM];
                // ∇^⊥_k W_l = (∂_k W_l)^⊥
                m.normal_part(p, dw[l][k].point(p), &mut term);
                for cc in 0..n {
                    let corr = gm[0][k][l] * w[0].point(p)[cc] + gm[1][k][l] * w[1].point(p)[cc];
                    acc[cc] = acc[cc] + gi[k][l] * (term[cc] - corr);
                }
            }
        }
        out.point_mut(p).copy_from_slice(&acc[..n]);
    }
    out
}

/// Willmore functional by the product trapezoid rule.
///
/// For `Ambient::Sphere` the surface must lie on the unit sphere (to `1e-8`);
/// the integrand is then `1 + ¼|H_S|²` with `H_S` the part of the Euclidean
/// mean curvature vector orthogonal to the position vector.
pub fn willmore_energy<T: Real>(f: &ImmersionGrid<T>, cache: &GeometryCache<T>, ambient: Ambient) -> Result<T> {
    let n = f.n();
    let weights = cache.metric.area_weights();
    let quarter = c::<T>(0.25);
    if ambient == Ambient::Sphere {
        let dev = (0..f.points())
            .map(|p| (dot(f.point(p), f.point(p)).value().sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        if !(dev <= 1e-8) {
            return Err(Error::AmbientMismatch { deviation: dev });
        }
    }
    let mut total = T::zero();
    for p in 0..f.points() {
        let h = cache.hvec.point(p);
        let integrand = match ambient {
            Ambient::Euclidean => quarter * dot(h, h),
            Ambient::Sphere => {
                let x = f.point(p);
                let r2 = dot(x, x);
                let hx = dot(h, x) / r2;
                let mut hs = [T::zero(); MAX_DIM];
                for cc in 0..n {
                    hs[cc] = h[cc] - hx * x[cc];
                }
                T::one() + quarter * dot(&hs[..n], &hs[..n])
            }
        };
        total = total + integrand * weights[p];
    }
    Ok(total)
}

/// `L²` gradient of the Willmore functional (Euclidean ambient), default path.
pub fn willmore_gradient<T: Real>(cache: &GeometryCache<T>) -> Field<T> {
    willmore_gradient_via(cache, GradientPath::Decomposed)
}

pub fn willmore_gradient_via<T: Real>(cache: &GeometryCache<T>, path: GradientPath) -> Field<T> {
    let n = cache.n();
    let h = &cache.hvec;
    let mut out = Field::zeros(h.nu(), h.nv(), n);
    let half = c::<T>(0.5);
    match path {
        GradientPath::NormalLaplacian => {
            let lap = normal_laplacian(cache, h);
            for p in 0..h.points() {
                let mut q = [T::zero(); MAX_DIM];
                q_at(cache.a0.point(p), h.point(p), &cache.metric.ginv[p], n, &mut q);
                let o = out.point_mut(p);
                for cc in 0..n {
                    o[cc] = half * (lap.point(p)[cc] + q[cc]);
                }
            }
        }
        GradientPath::Decomposed => {
            let lap = beltrami_laplacian(cache, h);
            for p in 0..h.points() {
                let mut lapn = [T::zero(); MAX_DIM];
                cache.metric.normal_part(p, lap.point(p), &mut lapn);
                let rest = lower_order_at(cache, p);
                let o = out.point_mut(p);
                for cc in 0..n {
                    o[cc] = half * (lapn[cc] + rest[cc]);
                }
            }
        }
    }
    out
}

/// `2Q(A)H − ½|H|²H` at point `p`.
#[inline]
pub(crate) fn lower_order_at<T: Real>(cache: &GeometryCache<T>, p: usize) -> [T; MAX_DIM] {
    let n = cache.n();
    let h = cache.hvec.point(p);
    let mut q = [T::zero(); MAX_DIM];
    q_at(cache.a.point(p), h, &cache.metric.ginv[p], n, &mut q);
    let hh = dot(h, h);
    let two = c::<T>(2.0);
    let half = c::<T>(0.5);
    let mut out = [T::zero(); MAX_DIM];
    for cc in 0..n {
        out[cc] = two * q[cc] - half * hh * h[cc];
    }
    out
}

/// Weighted pairing `∫ ⟨a, b⟩ dμ_f` by the trapezoid rule.
pub fn integrate_pairing<T: Real>(cache: &GeometryCache<T>, a: &Field<T>, b: &Field<T>) -> T {
    let w = cache.metric.area_weights();
    let mut s = T::zero();
    for p in 0..a.points() {
        s = s + dot(a.point(p), b.point(p)) * w[p];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{clifford_torus, torus_of_revolution};
    use std::f64::consts::PI;

    fn torus(n: usize) -> ImmersionGrid<f64> {
        torus_of_revolution(2.0, 1.0, n, n).unwrap()
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    // principal curvatures of the (2,1) torus: 1 and cos u/(2 + cos u)
    #[test]
    fn torus_outer_and_inner_equator() {
        let n = 128;
        let c = GeometryCache::new(&torus(n)).unwrap();
        let outer = 0;
        let g = c.metric.g[outer];
        assert!((g[0][0] - 1.0).abs() < 1e-6 && (g[1][1] - 9.0).abs() < 1e-5 && g[0][1].abs() < 1e-12);
        assert!((norm(c.hvec.point(outer)) - 4.0 / 3.0).abs() < 1e-5);
        assert!((c.a0sq[outer] - 2.0 / 9.0).abs() < 1e-5);
        let q = q_operator(&c, &c.a, &c.hvec);
        assert!((norm(q.point(outer)) - 40.0 / 27.0).abs() < 1e-5);

        let inner = n / 2;
        let g = c.metric.g[inner];
        assert!((g[0][0] - 1.0).abs() < 1e-6 && (g[1][1] - 1.0).abs() < 1e-6);
        assert!(norm(c.hvec.point(inner)) < 1e-5);
        assert!((c.a0sq[inner] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn christoffel_matches_closed_form() {
        let n = 128;
        let c = GeometryCache::new(&torus(n)).unwrap();
        for i in [0, n / 8, n / 4, n / 3] {
            let u = i as f64 * 2.0 * PI / n as f64;
            // Γ^u_vv = (R + r cos u) sin u / r
            assert!((c.metric.gamma[i][0][1][1] - (2.0 + u.cos()) * u.sin()).abs() < 1e-5);
        }
        assert!(c.metric.gamma[0][0][1][1].abs() < 1e-12);
    }

    #[test]
    fn cache_invariants() {
        let f = torus(32);
        let c = GeometryCache::new(&f).unwrap();
        let m = &c.metric;
        for p in 0..f.points() {
            let (g, gi) = (m.g[p], m.ginv[p]);
            for i in 0..2 {
                for j in 0..2 {
                    let e: f64 = (0..2).map(|k| gi[i][k] * g[k][j]).sum();
                    assert!((e - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
            for k in 0..2 {
                assert_eq!(m.gamma[p][k][0][1], m.gamma[p][k][1][0]);
            }
            let a = c.a.point(p);
            for e in 0..4 {
                for d in &m.df {
                    assert!(dot(&a[3 * e..3 * e + 3], d.point(p)).abs() < 1e-12);
                }
            }
            assert!(c.a0sq[p] >= 0.0);
        }
    }

    #[test]
    fn energy_is_scale_invariant() {
        let f = torus(64);
        let g = ImmersionGrid::new(f.field().scale(0.37)).unwrap();
        let wf = willmore_energy(&f, &GeometryCache::new(&f).unwrap(), Ambient::Euclidean).unwrap();
        let wg = willmore_energy(&g, &GeometryCache::new(&g).unwrap(), Ambient::Euclidean).unwrap();
        assert!((wf / wg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_free_part_is_trace_free() {
        let c = GeometryCache::new(&torus(32)).unwrap();
        for p in 0..c.metric.points() {
            let mut t = [0.0; 3];
            trace2(c.a0.point(p), &c.metric.ginv[p], 3, &mut t);
            assert!(norm(&t) < 1e-10);
        }
    }

    #[test]
    // |A⁰|² = |A|² − ½|H|² = 4 − 2
    fn clifford_torus_trace_free_norm() {
        let c = GeometryCache::<f64>::new(&clifford_torus(64, 64).unwrap()).unwrap();
        for v in &c.a0sq {
            assert!((v - 2.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn mean_curvature_is_the_laplacian_of_f() {
        let f = torus(64);
        let c = GeometryCache::new(&f).unwrap();
        let lap = beltrami_laplacian(&c, f.field());
        assert!(lap.axpy(-1.0, &c.hvec).max_norm() < 1e-4);
    }

    #[test]
    fn scaling_and_rigid_motion() {
        let f = torus(32);
        let c = GeometryCache::new(&f).unwrap();
        let scaled = ImmersionGrid::new(f.field().scale(2.0)).unwrap();
        let cs = GeometryCache::new(&scaled).unwrap();
        for p in 0..f.points() {
            assert!((cs.a0sq[p] * 4.0 - c.a0sq[p]).abs() < 1e-12 * c.a0sq[p].max(1.0));
        }
        let (s, co) = 0.4f64.sin_cos();
        let mut data = Field::zeros(32, 32, 3);
        for p in 0..f.points() {
            let x = f.point(p);
            data.point_mut(p).copy_from_slice(&[co * x[0] - s * x[2] + 0.5, x[1] - 1.0, s * x[0] + co * x[2]]);
        }
        let g = ImmersionGrid::new(data).unwrap();
        let gw = willmore_gradient(&GeometryCache::new(&g).unwrap());
        let fw = willmore_gradient(&c);
        let scale = fw.max_norm();
        for p in 0..f.points() {
            let v = fw.point(p);
            let rv = [co * v[0] - s * v[2], v[1], s * v[0] + co * v[2]];
            for k in 0..3 {
                assert!((rv[k] - gw.point(p)[k]).abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn gradient_is_normal() {
        let f = torus(32);
        let c = GeometryCache::new(&f).unwrap();
        let grad = willmore_gradient(&c);
        let tan = c.metric.tangent_field(&grad);
        assert!(tan.max_norm() < 1e-10 * grad.max_norm());
    }

    #[test]
    fn gradient_paths_converge_together() {
        // sup-norm gap between the two assemblies of the gradient
        let gap = |f: ImmersionGrid<f64>| {
            let c = GeometryCache::new(&f).unwrap();
            let a = willmore_gradient_via(&c, GradientPath::Decomposed);
            let b = willmore_gradient_via(&c, GradientPath::NormalLaplacian);
            a.axpy(-1.0, &b).max_norm()
        };
        let stereo = |n| crate::surfaces::clifford_stereo::<f64>(n, n).unwrap();
        for make in [torus as fn(usize) -> ImmersionGrid<f64>, stereo] {
            let (d1, d2) = (gap(make(32)), gap(make(64)));
            assert!(d2 < d1 / 4.0, "{d1:e} {d2:e}");
        }
    }

    #[test]
    fn sphere_ambient_requires_points_on_the_sphere() {
        let f = torus(16);
        let c = GeometryCache::new(&f).unwrap();
        assert!(matches!(willmore_energy(&f, &c, Ambient::Sphere), Err(Error::AmbientMismatch { .. })));
    }

    #[test]
    fn collapsed_grid_is_degenerate() {
        let flat = ImmersionGrid::from_fn(16, 16, 3, |u, _, x| {
            x[0] = u.cos();
            x[1] = u.sin();
            x[2] = 0.0;
        })
        .unwrap();
        assert!(matches!(GeometryCache::new(&flat), Err(Error::DegenerateMetric { .. })));
    }
}

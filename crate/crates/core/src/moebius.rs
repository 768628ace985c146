//! The Möbius group of `R^n`, stereographic charts of `S³`, and the
//! infinitesimal check that the flow velocity transforms under Möbius maps
//! like the velocity of a transformed solution.

use crate::error::{Error, Result};
use crate::flow::miwf_velocity;
use crate::geometry::{willmore_energy, Ambient, GeometryCache};
use crate::grid::{Field, ImmersionGrid, MAX_DIM};
use crate::scalar::{c, Real};

/// Minimum admissible distance between a surface and an inversion center.
pub const TOL_CENTER: f64 = 1e-6;

pub type Matrix = Vec<Vec<f64>>;

/// Elementary Möbius transformation.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Translation(Vec<f64>),
    /// `x ↦ Q x` with `QᵀQ = I`.
    Orthogonal(Matrix),
    /// `x ↦ λ x`, `λ > 0`.
    Dilation(f64),
    /// `x ↦ c + ρ² (x − c)/|x − c|²`.
    SphereInversion { center: Vec<f64>, radius: f64 },
}

impl Generator {
    fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Generator::Translation(b) if b.len() != n => bad(format!("translation needs {n} entries")),
            Generator::Orthogonal(q) => {
                if q.len() != n || q.iter().any(|r| r.len() != n) {
                    return bad(format!("orthogonal generator must be {n}x{n}"));
                }
                for i in 0..n {
                    for j in 0..n {
                        let s: f64 = (0..n).map(|k| q[k][i] * q[k][j]).sum();
                        let e = if i == j { 1.0 } else { 0.0 };
                        if (s - e).abs() > 1e-12 {
                            return bad(format!("matrix is not orthogonal (QᵀQ deviates by {:e})", (s - e).abs()));
                        }
                    }
                }
                Ok(())
            }
            Generator::Dilation(l) if !(*l > 0.0 && l.is_finite()) => bad(format!("dilation factor must be > 0, got {l}")),
            Generator::SphereInversion { center, radius } => {
                if center.len() != n {
                    return bad(format!("inversion center needs {n} entries"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("inversion radius must be > 0, got {radius}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn apply<T: Real>(&self, x: &mut [T]) {
        match self {
            Generator::Translation(b) => {
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi = *xi + c(*bi);
                }
            }
            Generator::Orthogonal(q) => {
                let mut y = [T::zero(); MAX_DIM];
                for (i, row) in q.iter().enumerate() {
                    for (k, &qik) in row.iter().enumerate() {
                        y[i] = y[i] + c::<T>(qik) * x[k];
                    }
                }
                x.copy_from_slice(&y[..x.len()]);
            }
            Generator::Dilation(l) => {
                for xi in x.iter_mut() {
                    *xi = c::<T>(*l) * *xi;
                }
            }
            Generator::SphereInversion { center, radius } => {
                let mut r2 = T::zero();
                for (xi, ci) in x.iter().zip(center) {
                    let d = *xi - c(*ci);
                    r2 = r2 + d * d;
                }
                let s = c::<T>(radius * radius) / r2;
                for (xi, ci) in x.iter_mut().zip(center) {
                    let cc = c::<T>(*ci);
                    *xi = cc + s * (*xi - cc);
                }
            }
        }
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let n = x.len();
        let eye = |s: f64| -> Matrix { (0..n).map(|i| (0..n).map(|j| if i == j { s } else { 0.0 }).collect()).collect() };
        match self {
            Generator::Translation(_) => eye(1.0),
            Generator::Orthogonal(q) => q.clone(),
            Generator::Dilation(l) => eye(*l),
            Generator::SphereInversion { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let r2: f64 = d.iter().map(|v| v * v).sum();
                let s = radius * radius / r2;
                (0..n)
                    .map(|i| (0..n).map(|j| s * ((if i == j { 1.0 } else { 0.0 }) - 2.0 * d[i] * d[j] / r2)).collect())
                    .collect()
            }
        }
    }
}

/// Ordered composition of generators; the first generator is applied first.
#[derive(Clone, Debug, PartialEq)]
pub struct MoebiusMap {
    n: usize,
    generators: Vec<Generator>,
}

impl MoebiusMap {
    pub fn identity(n: usize) -> Self {
        MoebiusMap { n, generators: Vec::new() }
    }

    pub fn new(n: usize, generators: Vec<Generator>) -> Result<Self> {
        for g in &generators {
            g.validate(n)?;
        }
        Ok(MoebiusMap { n, generators })
    }

    /// Appends a generator applied after the current ones.
    pub fn then(mut self, g: Generator) -> Result<Self> {
        g.validate(self.n)?;
        self.generators.push(g);
        Ok(self)
    }

    /// `after ∘ self`.
    pub fn compose(&self, after: &MoebiusMap) -> Result<Self> {
        if after.n != self.n {
            return Err(Error::InvalidParameter("composing maps of different dimension".into()));
        }
        let mut generators = self.generators.clone();
        generators.extend(after.generators.iter().cloned());
        Ok(MoebiusMap { n: self.n, generators })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Image of a single point (no applicability check).
    pub fn apply_point<T: Real>(&self, x: &mut [T]) {
        for g in &self.generators {
            g.apply(x);
        }
    }

    /// Jacobian at `x`: product of generator Jacobians along the orbit.
    pub fn differential(&self, x: &[f64]) -> Matrix {
        let n = self.n;
        let mut j: Matrix = (0..n).map(|i| (0..n).map(|k| if i == k { 1.0 } else { 0.0 }).collect()).collect();
        let mut y = x.to_vec();
        for g in &self.generators {
            let jg = g.jacobian(&y);
            j = matmul(&jg, &j);
            g.apply(&mut y);
        }
        j
    }

    /// Pointwise composition `Φ ∘ f`.
    ///
    /// Fails with `InversionCenterOnSurface` if some intermediate image of the
    /// surface comes within [`TOL_CENTER`] of an inversion center.
    pub fn apply_map<T: Real>(&self, f: &ImmersionGrid<T>) -> Result<ImmersionGrid<T>> {
        if f.n() != self.n {
            return Err(Error::GridMismatch(format!("map acts on R^{}, surface lives in R^{}", self.n, f.n())));
        }
        let mut out = f.field().clone();
        for g in &self.generators {
            if let Generator::SphereInversion { center, .. } = g {
                for p in 0..out.points() {
                    let d: f64 = out.point(p).iter().zip(center).map(|(x, c)| (x.value() - c).powi(2)).sum::<f64>().sqrt();
                    if !(d > TOL_CENTER) {
                        return Err(Error::InversionCenterOnSurface { i: p % out.nu(), j: p / out.nu(), distance: d });
                    }
                }
            }
            for p in 0..out.points() {
                g.apply(out.point_mut(p));
            }
        }
        ImmersionGrid::new(out)
    }
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Infinitesimal Möbius-equivariance defect of the flow velocity:
/// `max_x |DΦ(f(x))·v_f(x) − v_{Φ∘f}(x)| / (1 + |v_{Φ∘f}(x)|)`.
pub fn invariance_residual(phi: &MoebiusMap, f: &ImmersionGrid<f64>, floor: f64) -> Result<f64> {
    let g = phi.apply_map(f)?;
    let vf = miwf_velocity(&GeometryCache::new(f)?, floor)?;
    let vg = miwf_velocity(&GeometryCache::new(&g)?, floor)?;
    let n = f.n();
    let mut worst = 0.0f64;
    for p in 0..f.points() {
        let j = phi.differential(f.point(p));
        let v = vf.point(p);
        let w = vg.point(p);
        let mut diff2 = 0.0;
        for i in 0..n {
            let jv: f64 = (0..n).map(|k| j[i][k] * v[k]).sum();
            diff2 += (jv - w[i]).powi(2);
        }
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max(diff2.sqrt() / (1.0 + wn));
    }
    Ok(worst)
}

/// `(W(f), W(Φ∘f), |W(f) − W(Φ∘f)|)` in Euclidean ambient.
pub fn conformal_energy_check(phi: &MoebiusMap, f: &ImmersionGrid<f64>) -> Result<(f64, f64, f64)> {
    let g = phi.apply_map(f)?;
    let wf = willmore_energy(f, &GeometryCache::new(f)?, Ambient::Euclidean)?;
    let wg = willmore_energy(&g, &GeometryCache::new(&g)?, Ambient::Euclidean)?;
    Ok((wf, wg, (wf - wg).abs()))
}

/// Stereographic chart `S³ ∖ {p} → R³`.
#[derive(Clone, Debug, PartialEq)]
pub struct StereographicChart {
    pole: [f64; 4],
    /// Orthonormal basis of `p^⊥`, identified with `R³`.
    basis: [[f64; 4]; 3],
}

impl StereographicChart {
    /// `pole` must be a unit vector (to `1e-12`).
    pub fn new(pole: [f64; 4]) -> Result<Self> {
        let norm = pole.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("pole must lie on S3, |p| = {norm}")));
        }
        // Gram–Schmidt of the standard basis against the pole; keep the three
        // vectors with the largest residuals, in index order.
        let mut cands: Vec<(usize, [f64; 4], f64)> = (0..4)
            .map(|k| {
                let mut e = [0.0; 4];
                e[k] = 1.0;
                let d = pole[k];
                for (ei, pi) in e.iter_mut().zip(&pole) {
                    *ei -= d * pi;
                }
                let r = e.iter().map(|x| x * x).sum::<f64>();
                (k, e, r)
            })
            .collect();
        let drop = cands.iter().enumerate().fold(0, |best, (i, cand)| if cand.2 < cands[best].2 { i } else { best });
        cands.remove(drop);
        let mut basis = [[0.0; 4]; 3];
        for (b, (_, e, _)) in cands.iter().enumerate() {
            let mut v = *e;
            for prev in basis.iter().take(b) {
                let d: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= d * pi;
                }
            }
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for vi in v.iter_mut() {
                *vi /= r;
            }
            basis[b] = v;
        }
        Ok(StereographicChart { pole, basis })
    }

    pub fn pole(&self) -> [f64; 4] {
        self.pole
    }

    /// `x ↦ B^T (x − ⟨x,p⟩p) / (1 − ⟨x,p⟩)`.
    pub fn project_point<T: Real>(&self, x: &[T]) -> [T; 3] {
        let xp = x.iter().zip(&self.pole).fold(T::zero(), |s, (&a, &b)| s + a * c(b));
        let denom = T::one() - xp;
        let mut y = [T::zero(); 3];
        for (yb, b) in y.iter_mut().zip(&self.basis) {
            // basis ⟂ pole, so the ⟨x,p⟩p part drops out
            let s = x.iter().zip(b).fold(T::zero(), |s, (&a, &bb)| s + a * c(bb));
            *yb = s / denom;
        }
        y
    }

    /// `y ↦ (2 B y + (|y|² − 1) p) / (|y|² + 1)`.
    pub fn lift_point<T: Real>(&self, y: &[T]) -> [T; 4] {
        let r2 = y.iter().fold(T::zero(), |s, &a| s + a * a);
        let denom = r2 + T::one();
        let mut x = [T::zero(); 4];
        for (k, xk) in x.iter_mut().enumerate() {
            let mut s = (r2 - T::one()) * c(self.pole[k]);
            for (yb, b) in y.iter().zip(&self.basis) {
                s = s + c::<T>(2.0 * b[k]) * *yb;
            }
            *xk = s / denom;
        }
        x
    }

    /// Projects a surface on `S³` into `R³`.
    pub fn project<T: Real>(&self, f: &ImmersionGrid<T>) -> Result<ImmersionGrid<T>> {
        if f.n() != 4 {
            return Err(Error::GridMismatch("stereographic projection needs a surface in R^4".into()));
        }
        let mut dev = 0.0f64;
        let mut dist = f64::INFINITY;
        for p in 0..f.points() {
            let x = f.point(p);
            let r = x.iter().map(|v| v.value() * v.value()).sum::<f64>().sqrt();
            dev = dev.max((r - 1.0).abs());
            let d = x.iter().zip(&self.pole).map(|(a, b)| (a.value() - b).powi(2)).sum::<f64>().sqrt();
            dist = dist.min(d);
        }
        if !(dev <= 1e-8) {
            return Err(Error::AmbientMismatch { deviation: dev });
        }
        if !(dist > TOL_CENTER) {
            return Err(Error::PoleOnSurface { distance: dist });
        }
        let mut out = Field::zeros(f.nu(), f.nv(), 3);
        for p in 0..f.points() {
            out.point_mut(p).copy_from_slice(&self.project_point(f.point(p)));
        }
        ImmersionGrid::new(out)
    }

    /// Inverse projection of a surface in `R³` onto `S³`.
    pub fn lift<T: Real>(&self, f: &ImmersionGrid<T>) -> Result<ImmersionGrid<T>> {
        if f.n() != 3 {
            return Err(Error::GridMismatch("inverse stereographic projection needs a surface in R^3".into()));
        }
        let mut out = Field::zeros(f.nu(), f.nv(), 4);
        for p in 0..f.points() {
            out.point_mut(p).copy_from_slice(&self.lift_point(f.point(p)));
        }
        ImmersionGrid::new(out)
    }
}

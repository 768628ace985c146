//! Covariant derivatives with respect to a fixed background immersion `F0`.

use crate::error::Result;
use crate::geometry::{metric_pack, GeometryCache};
use crate::grid::{Field, ImmersionGrid};
use crate::scalar::Real;
use crate::tensor::{covariant_derivative, double_trace4, Christoffel};

/// Reference immersion `F0` with its Christoffel symbols and area weights.
#[derive(Clone, Debug)]
pub struct BackgroundConnection<T> {
    f0: ImmersionGrid<T>,
    gamma: Vec<Christoffel<T>>,
    /// `√det g(F0) · du · dv`.
    weights: Vec<f64>,
}

impl<T: Real> BackgroundConnection<T> {
    pub fn new(f0: &ImmersionGrid<T>) -> Result<Self> {
        let m = metric_pack(f0)?;
        let weights = m.area_weights().iter().map(|w| w.value()).collect();
        Ok(BackgroundConnection { f0: f0.clone(), gamma: m.gamma, weights })
    }

    pub fn f0(&self) -> &ImmersionGrid<T> {
        &self.f0
    }

    pub fn gamma(&self) -> &[Christoffel<T>] {
        &self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same background over another scalar type; derivative parts are zero.
    pub fn cast<S: Real>(&self) -> BackgroundConnection<S> {
        let conv = |g: &Christoffel<T>| -> Christoffel<S> {
            let mut o = [[[S::zero(); 2]; 2]; 2];
            for m in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        o[m][k][l] = crate::scalar::cast(g[m][k][l]);
                    }
                }
            }
            o
        };
        BackgroundConnection {
            f0: self.f0.cast(),
            gamma: self.gamma.iter().map(conv).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// `C^m_kl = Γ(F0)^m_kl − Γ(f)^m_kl` at every grid point.
pub fn christoffel_difference<T: Real>(cache: &GeometryCache<T>, bg: &BackgroundConnection<T>) -> Vec<Christoffel<T>> {
    cache
        .metric
        .gamma
        .iter()
        .zip(&bg.gamma)
        .map(|(gf, g0)| {
            let mut o = [[[T::zero(); 2]; 2]; 2];
            for m in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        o[m][k][l] = g0[m][k][l] - gf[m][k][l];
                    }
                }
            }
            o
        })
        .collect()
}

/// `∇^{F0}_k ∇^{F0}_l f = ∂_kl f − Γ(F0)^m_kl ∂_m f` as a rank-2 field.
pub fn background_hessian<T: Real>(cache: &GeometryCache<T>, bg: &BackgroundConnection<T>) -> Field<T> {
    let m = &cache.metric;
    let n = m.n;
    let mut out = m.d2f.clone();
    for p in 0..out.points() {
        let g0 = &bg.gamma[p];
        let (fu, fv) = (m.df[0].point(p), m.df[1].point(p));
        let o = out.point_mut(p);
        for e in 0..4 {
            let (k, l) = (e / 2, e % 2);
            for cc in 0..n {
                o[e * n + cc] = o[e * n + cc] - g0[0][k][l] * fu[cc] - g0[1][k][l] * fv[cc];
            }
        }
    }
    out
}

/// Background covariant derivatives of an immersion.
#[derive(Clone, Debug)]
pub struct CovariantDerivatives<T> {
    /// `∇^{F0}_i f = ∂_i f` (rank 1).
    pub d1: Field<T>,
    /// `∇^{F0}_{ij} f` (rank 2).
    pub d2: Field<T>,
    /// `∇^{F0}_{ijk} f` (rank 3).
    pub d3: Field<T>,
    /// `∇^{F0}_{ijkl} f` (rank 4).
    pub d4: Field<T>,
    /// `∇^f_i ∇^f_j ∇^{F0}_k ∇^{F0}_l f` (rank 4).
    pub mixed: Field<T>,
}

pub fn covariant_derivatives<T: Real>(
    f: &ImmersionGrid<T>,
    cache: &GeometryCache<T>,
    bg: &BackgroundConnection<T>,
) -> Result<CovariantDerivatives<T>> {
    f.check_compatible(bg.f0.field())?;
    let n = f.n();
    let d1 = covariant_derivative(f.field(), 0, n, &bg.gamma);
    let d2 = covariant_derivative(&d1, 1, n, &bg.gamma);
    let d3 = covariant_derivative(&d2, 2, n, &bg.gamma);
    let d4 = covariant_derivative(&d3, 3, n, &bg.gamma);
    let gf = &cache.metric.gamma;
    let mixed = covariant_derivative(&covariant_derivative(&d2, 2, n, gf), 3, n, gf);
    Ok(CovariantDerivatives { d1, d2, d3, d4, mixed })
}

/// `g^ij g^kl X_ijkl` of a rank-4 field with the metric of `cache`.
pub fn contract4<T: Real>(cache: &GeometryCache<T>, x: &Field<T>) -> Field<T> {
    let n = cache.n();
    let mut out = Field::zeros(x.nu(), x.nv(), n);
    for p in 0..x.points() {
        double_trace4(x.point(p), &cache.metric.ginv[p], n, out.point_mut(p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::torus_of_revolution;

    #[test]
    fn background_hessian_of_f0_is_second_fundamental_form() {
        let f = torus_of_revolution::<f64>(2.0, 1.0, 64, 64).unwrap();
        let cache = GeometryCache::new(&f).unwrap();
        let bg = BackgroundConnection::new(&f).unwrap();
        let d = covariant_derivatives(&f, &cache, &bg).unwrap();
        let diff = d.d2.axpy(-1.0, &cache.a);
        assert!(diff.max_norm() < 1e-4, "{}", diff.max_norm());
        // identical connections: mixed = pure background derivative
        let diff = d.mixed.axpy(-1.0, &d.d4);
        assert_eq!(diff.max_norm(), 0.0);
        assert!(christoffel_difference(&cache, &bg).iter().all(|c| c.iter().flatten().flatten().all(|&x| x == 0.0)));
    }

    #[test]
    fn constant_map_has_vanishing_derivatives() {
        let f0 = torus_of_revolution::<f64>(2.0, 1.0, 16, 16).unwrap();
        let bg = BackgroundConnection::new(&f0).unwrap();
        let k = Field::<f64>::from_fn(16, 16, 3, |_, _, x| x.copy_from_slice(&[1.0, -2.0, 0.5]));
        let d1 = covariant_derivative(&k, 0, 3, bg.gamma());
        let d2 = covariant_derivative(&d1, 1, 3, bg.gamma());
        assert!(d1.max_norm() < 1e-13);
        assert!(d2.max_norm() < 1e-12);
    }

    #[test]
    fn cast_preserves_values() {
        let f0 = torus_of_revolution::<f64>(2.0, 1.0, 16, 16).unwrap();
        let bg = BackgroundConnection::new(&f0).unwrap();
        let d = bg.cast::<crate::dual::Dual>();
        assert_eq!(d.gamma()[5][0][1][1].re, bg.gamma()[5][0][1][1]);
        assert_eq!(d.weights(), bg.weights());
    }
}

//! Periodic sampled fields on the parameter torus `[0, 2π)²`.
//!
//! Storage is point-major with the `u` index running fastest: component `c`
//! of the value at `(i, j)` lives at `((j * nu) + i) * dim + c`.

use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::{c, cast, Real};

/// Largest ambient dimension supported by the fixed-size point buffers.
pub const MAX_DIM: usize = 4;

/// An `R^dim`-valued field sampled on an `nu × nv` periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    nu: usize,
    nv: usize,
    dim: usize,
    data: Vec<T>,
}

/// Perturbation field on the same grid as an immersion.
pub type TangentField<T> = Field<T>;

impl<T: Real> Field<T> {
    pub fn zeros(nu: usize, nv: usize, dim: usize) -> Self {
        Field { nu, nv, dim, data: vec![T::zero(); nu * nv * dim] }
    }

    pub fn from_vec(nu: usize, nv: usize, dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nu * nv * dim {
            return Err(Error::GridMismatch(format!(
                "expected {} values for a {nu}x{nv}x{dim} field, got {}",
                nu * nv * dim,
                data.len()
            )));
        }
        Ok(Field { nu, nv, dim, data })
    }

    /// Samples `f(u, v)` at the grid nodes `u = i·du`, `v = j·dv`.
    pub fn from_fn(nu: usize, nv: usize, dim: usize, mut f: impl FnMut(f64, f64, &mut [T])) -> Self {
        let mut out = Self::zeros(nu, nv, dim);
        let (du, dv) = (2.0 * PI / nu as f64, 2.0 * PI / nv as f64);
        for j in 0..nv {
            for i in 0..nu {
                f(i as f64 * du, j as f64 * dv, out.at_mut(i, j));
            }
        }
        out
    }

    #[inline]
    pub fn nu(&self) -> usize {
        self.nu
    }
    #[inline]
    pub fn nv(&self) -> usize {
        self.nv
    }
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    pub fn points(&self) -> usize {
        self.nu * self.nv
    }
    #[inline]
    pub fn du(&self) -> f64 {
        2.0 * PI / self.nu as f64
    }
    #[inline]
    pub fn dv(&self) -> f64 {
        2.0 * PI / self.nv as f64
    }
    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &[T] {
        let k = (j * self.nu + i) * self.dim;
        &self.data[k..k + self.dim]
    }
    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut [T] {
        let k = (j * self.nu + i) * self.dim;
        &mut self.data[k..k + self.dim]
    }
    /// Value at flat point index `p = j * nu + i`.
    #[inline]
    pub fn point(&self, p: usize) -> &[T] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }
    #[inline]
    pub fn point_mut(&mut self, p: usize) -> &mut [T] {
        &mut self.data[p * self.dim..(p + 1) * self.dim]
    }

    pub fn same_grid<S>(&self, other: &Field<S>) -> bool {
        self.nu == other.nu && self.nv == other.nv
    }

    pub fn check_compatible<S>(&self, other: &Field<S>) -> Result<()> {
        if self.nu != other.nu || self.nv != other.nv || self.dim != other.dim {
            return Err(Error::GridMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.nu, self.nv, self.dim, other.nu, other.nv, other.dim
            )));
        }
        Ok(())
    }

    pub fn map<S: Real>(&self, f: impl Fn(T) -> S) -> Field<S> {
        Field { nu: self.nu, nv: self.nv, dim: self.dim, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Converts through primal values.
    pub fn cast<S: Real>(&self) -> Field<S> {
        self.map(cast)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: T, other: &Field<T>) -> Field<T> {
        debug_assert_eq!(self.data.len(), other.data.len());
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| x + a * y).collect();
        Field { nu: self.nu, nv: self.nv, dim: self.dim, data }
    }

    pub fn scale(&self, a: T) -> Field<T> {
        self.map(|x| a * x)
    }

    pub fn add_assign_scaled(&mut self, a: T, other: &Field<T>) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, &y) in self.data.iter_mut().zip(&other.data) {
            *x = *x + a * y;
        }
    }

    /// Largest pointwise Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        (0..self.points())
            .map(|p| self.point(p).iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Plain Euclidean norm over all entries.
    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt()
    }

    /// Fourth-order centred periodic derivative along `u`.
    pub fn d_u(&self) -> Field<T> {
        self.derivative(true)
    }

    /// Fourth-order centred periodic derivative along `v`.
    pub fn d_v(&self) -> Field<T> {
        self.derivative(false)
    }

    /// `d_u` when `dir == 0`, `d_v` when `dir == 1`.
    pub fn d(&self, dir: usize) -> Field<T> {
        self.derivative(dir == 0)
    }

    fn derivative(&self, along_u: bool) -> Field<T> {
        let (nu, nv, dim) = (self.nu, self.nv, self.dim);
        let h = if along_u { self.du() } else { self.dv() };
        let inv = c::<T>(1.0 / (12.0 * h));
        let eight = c::<T>(8.0);
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..nv {
            for i in 0..nu {
                let (m2, m1, p1, p2) = if along_u {
                    let w = |d: usize| (j * nu + (i + d) % nu) * dim;
                    (w(nu - 2), w(nu - 1), w(1), w(2))
                } else {
                    let w = |d: usize| (((j + d) % nv) * nu + i) * dim;
                    (w(nv - 2), w(nv - 1), w(1), w(2))
                };
                for k in 0..dim {
                    let s = (self.data[m2 + k] - self.data[p2 + k])
                        + eight * (self.data[p1 + k] - self.data[m1 + k]);
                    out.push(s * inv);
                }
            }
        }
        Field { nu, nv, dim, data: out }
    }
}

/// Effective wavenumber `(8 sin θ − sin 2θ) / 6` (in units of `1/h`) that the
/// first-derivative stencil assigns to a Fourier mode with phase step `θ`.
pub fn stencil_wavenumber(theta: f64) -> f64 {
    (8.0 * theta.sin() - (2.0 * theta).sin()) / 6.0
}

/// Maximum of [`stencil_wavenumber`] over `θ ∈ [0, π]`.
pub fn stencil_wavenumber_max() -> f64 {
    // stationary point of 8 sin θ − sin 2θ: cos θ = (2 − √6)/2
    let theta = ((2.0 - 6f64.sqrt()) / 2.0).acos();
    stencil_wavenumber(theta)
}

/// A sampled immersion `Σ → R^n`, `n ∈ {3, 4}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImmersionGrid<T> {
    field: Field<T>,
}

impl<T: Real> ImmersionGrid<T> {
    /// Validates grid sizes, the ambient dimension and finiteness.
    pub fn new(field: Field<T>) -> Result<Self> {
        check_grid_size(field.nu, field.nv)?;
        if !(3..=MAX_DIM).contains(&field.dim) {
            return Err(Error::InvalidGrid(format!("ambient dimension must be 3 or 4, got {}", field.dim)));
        }
        if !field.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(ImmersionGrid { field })
    }

    pub fn from_fn(nu: usize, nv: usize, n: usize, f: impl FnMut(f64, f64, &mut [T])) -> Result<Self> {
        check_grid_size(nu, nv)?;
        Self::new(Field::from_fn(nu, nv, n, f))
    }

    /// Ambient dimension.
    #[inline]
    pub fn n(&self) -> usize {
        self.field.dim
    }

    pub fn field(&self) -> &Field<T> {
        &self.field
    }

    pub fn into_field(self) -> Field<T> {
        self.field
    }

    pub fn cast<S: Real>(&self) -> ImmersionGrid<S> {
        ImmersionGrid { field: self.field.cast() }
    }

    /// `self + a·eta` (no finiteness check).
    pub fn perturbed(&self, a: T, eta: &Field<T>) -> ImmersionGrid<T> {
        ImmersionGrid { field: self.field.axpy(a, eta) }
    }

    /// Wraps a field without validation; used on hot paths where the input
    /// was already validated.
    pub(crate) fn from_field_unchecked(field: Field<T>) -> Self {
        ImmersionGrid { field }
    }
}

impl<T> Deref for ImmersionGrid<T> {
    type Target = Field<T>;
    fn deref(&self) -> &Field<T> {
        &self.field
    }
}

pub fn check_grid_size(nu: usize, nv: usize) -> Result<()> {
    for (name, k) in [("nu", nu), ("nv", nv)] {
        if k < 16 || k % 2 != 0 {
            return Err(Error::InvalidGrid(format!("{name} must be even and >= 16, got {k}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_fourier_mode_matches_stencil_symbol() {
        let (nu, nv) = (32, 16);
        let k = 3.0;
        let f = Field::<f64>::from_fn(nu, nv, 1, |u, _v, out| out[0] = (k * u).sin());
        let d = f.d_u();
        let keff = stencil_wavenumber(k * f.du()) / f.du();
        for i in 0..nu {
            let u = i as f64 * f.du();
            assert!((d.at(i, 5)[0] - keff * (k * u).cos()).abs() < 1e-13);
        }
        assert!(f.d_v().max_norm() < 1e-14);
    }

    #[test]
    fn derivative_is_fourth_order() {
        let err = |nu: usize| {
            let f = Field::<f64>::from_fn(nu, 16, 1, |u, _v, out| out[0] = (u.sin()).exp());
            let d = f.d_u();
            (0..nu)
                .map(|i| {
                    let u = i as f64 * f.du();
                    (d.at(i, 0)[0] - u.cos() * u.sin().exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 14.0, "ratio {ratio}");
    }

    #[test]
    fn stencil_wavenumber_maximum() {
        let m = stencil_wavenumber_max();
        assert!((m - 1.3722).abs() < 1e-4);
        for k in 0..1000 {
            assert!(stencil_wavenumber(k as f64 * PI / 1000.0) <= m + 1e-15);
        }
    }

    #[test]
    fn rejects_bad_grid_sizes() {
        assert!(check_grid_size(15, 16).is_err());
        assert!(check_grid_size(14, 16).is_err());
        assert!(check_grid_size(16, 18).is_ok());
    }
}

//! Canonical umbilic-free test tori.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::grid::ImmersionGrid;
use crate::moebius::StereographicChart;
use crate::scalar::{c, Real};

/// `((R + r cos u) cos v, (R + r cos u) sin v, r sin u)`, requires `R > r > 0`.
pub fn torus_of_revolution<T: Real>(big_r: f64, small_r: f64, nu: usize, nv: usize) -> Result<ImmersionGrid<T>> {
    if !(small_r > 0.0 && big_r > small_r && big_r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "torus of revolution needs R > r > 0, got R = {big_r}, r = {small_r}"
        )));
    }
    ImmersionGrid::from_fn(nu, nv, 3, |u, v, x| {
        let rho = big_r + small_r * u.cos();
        x[0] = c(rho * v.cos());
        x[1] = c(rho * v.sin());
        x[2] = c(small_r * u.sin());
    })
}

/// Clifford torus `(cos u, sin u, cos v, sin v)/√2` in `S³ ⊂ R⁴`.
pub fn clifford_torus<T: Real>(nu: usize, nv: usize) -> Result<ImmersionGrid<T>> {
    ImmersionGrid::from_fn(nu, nv, 4, |u, v, x| {
        x[0] = c(FRAC_1_SQRT_2 * u.cos());
        x[1] = c(FRAC_1_SQRT_2 * u.sin());
        x[2] = c(FRAC_1_SQRT_2 * v.cos());
        x[3] = c(FRAC_1_SQRT_2 * v.sin());
    })
}

/// Stereographic image in `R³` of the Clifford torus, projected from the pole
/// `e₄`, which lies at distance `√(2 − √2)` from the surface. The result is a
/// torus of revolution with radius ratio `√2`.
pub fn clifford_stereo<T: Real>(nu: usize, nv: usize) -> Result<ImmersionGrid<T>> {
    let chart = StereographicChart::new([0.0, 0.0, 0.0, 1.0])?;
    let s3 = clifford_torus::<f64>(nu, nv)?;
    Ok(chart.project(&s3)?.cast())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_fat_torus() {
        assert!(torus_of_revolution::<f64>(1.0, 1.0, 16, 16).is_err());
        assert!(torus_of_revolution::<f64>(1.0, 0.0, 16, 16).is_err());
    }

    #[test]
    fn clifford_points_have_unit_norm() {
        let f = clifford_torus::<f64>(16, 16).unwrap();
        for p in 0..f.points() {
            let r: f64 = f.point(p).iter().map(|x| x * x).sum();
            assert!((r - 1.0).abs() < 1e-15);
        }
    }
}

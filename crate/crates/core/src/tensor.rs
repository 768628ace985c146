//! Covariant calculus on `R^n`-valued covariant tensor fields.
//!
//! A rank-`r` tensor field is stored as a [`Field`] with `2^r · n` components.
//! The multi-index `(i_1, …, i_r)` (each `0 = u`, `1 = v`) is packed with the
//! first index as the most significant bit; component `c` of entry `J` lives
//! at offset `J·n + c`.

use crate::grid::Field;
use crate::scalar::Real;

pub type Mat2<T> = [[T; 2]; 2];

/// `gamma[m][k][l] = Γ^m_{kl}`.
pub type Christoffel<T> = [[[T; 2]; 2]; 2];

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s = s + x * y;
    }
    s
}

/// Applies the derivation formula once: returns `∇_i T_{j_1…j_r}` as a
/// rank `r+1` field with the new index in front, using the connection `gamma`.
///
/// Partial derivatives come from the periodic stencils of [`Field::d`].
pub fn covariant_derivative<T: Real>(t: &Field<T>, rank: usize, n: usize, gamma: &[Christoffel<T>]) -> Field<T> {
    let entries = 1usize << rank;
    debug_assert_eq!(t.dim(), entries * n);
    let partial = [t.d_u(), t.d_v()];
    let mut out = Field::zeros(t.nu(), t.nv(), 2 * entries * n);
    for p in 0..t.points() {
        let tp = t.point(p);
        let gm = &gamma[p];
        let o = out.point_mut(p);
        for (i, di) in partial.iter().enumerate() {
            let dp = di.point(p);
            for jm in 0..entries {
                let base = (i * entries + jm) * n;
                o[base..base + n].copy_from_slice(&dp[jm * n..(jm + 1) * n]);
                for s in 0..rank {
                    let shift = rank - 1 - s;
                    let js = (jm >> shift) & 1;
                    let cleared = jm & !(1 << shift);
                    for (m, gmm) in gm.iter().enumerate() {
                        let coeff = gmm[i][js];
                        let src = (cleared | (m << shift)) * n;
                        for cc in 0..n {
                            o[base + cc] = o[base + cc] - coeff * tp[src + cc];
                        }
                    }
                }
            }
        }
    }
    out
}

/// `g^{ij} X_{ij}` for one point of a rank-2 field.
#[inline]
pub fn trace2<T: Real>(x: &[T], ginv: &Mat2<T>, n: usize, out: &mut [T]) {
    for cc in 0..n {
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                s = s + ginv[i][j] * x[(2 * i + j) * n + cc];
            }
        }
        out[cc] = s;
    }
}

/// `g^{ij} g^{kl} X_{ijkl}` for one point of a rank-4 field.
#[inline]
pub fn double_trace4<T: Real>(x: &[T], ginv: &Mat2<T>, n: usize, out: &mut [T]) {
    for cc in 0..n {
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let gij = ginv[i][j];
                for k in 0..2 {
                    for l in 0..2 {
                        let idx = ((((i * 2 + j) * 2 + k) * 2) + l) * n + cc;
                        s = s + gij * ginv[k][l] * x[idx];
                    }
                }
            }
        }
        out[cc] = s;
    }
}

/// `g^{ij} g^{kl} ∇_i ∇_j T_{kl}` for a rank-2 field, evaluated by two
/// applications of the derivation formula followed by contraction.
pub fn double_trace_hessian<T: Real>(
    t: &Field<T>,
    n: usize,
    gamma: &[Christoffel<T>],
    ginv: &[Mat2<T>],
) -> Field<T> {
    let d1 = covariant_derivative(t, 2, n, gamma);
    let d2 = covariant_derivative(&d1, 3, n, gamma);
    let mut out = Field::zeros(t.nu(), t.nv(), n);
    for p in 0..t.points() {
        double_trace4(d2.point(p), &ginv[p], n, out.point_mut(p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_connection_gives_partial_derivatives() {
        let f = Field::<f64>::from_fn(16, 16, 1, |u, v, o| o[0] = u.sin() * v.cos());
        let gamma = vec![[[[0.0; 2]; 2]; 2]; 256];
        let d = covariant_derivative(&f, 0, 1, &gamma);
        let du = f.d_u();
        let dv = f.d_v();
        for p in 0..256 {
            assert_eq!(d.point(p)[0], du.point(p)[0]);
            assert_eq!(d.point(p)[1], dv.point(p)[0]);
        }
    }

    #[test]
    fn derivation_formula_for_one_forms() {
        // ∇_i ω_k = ∂_i ω_k − Γ^m_{ik} ω_m with constant ω and a constant connection
        let omega = Field::<f64>::from_fn(16, 16, 2, |_, _, o| {
            o[0] = 2.0;
            o[1] = -1.0;
        });
        let mut g: Christoffel<f64> = [[[0.0; 2]; 2]; 2];
        g[0][1][0] = 0.5; // Γ^u_{vu}
        g[1][0][0] = 0.25; // Γ^v_{uu}
        let gamma = vec![g; 256];
        let d = covariant_derivative(&omega, 1, 1, &gamma);
        let p = d.point(17);
        // (i,k) = (u,u): −(Γ^u_{uu}·2 + Γ^v_{uu}·(−1)) = 0.25
        assert!((p[0] - 0.25).abs() < 1e-14);
        // (i,k) = (v,u): −Γ^u_{vu}·2 = −1
        assert!((p[2] + 1.0).abs() < 1e-14);
    }
}

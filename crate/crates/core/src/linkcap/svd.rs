//! One-sided (Hestenes) Jacobi SVD for small complex matrices.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::cmat::CMatrix;
use crate::error::{domain, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 60;

/// `h = u * diag(sigma) * v^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTriple<T> {
    /// `N_r x N_r` unitary.
    pub u: CMatrix<T>,
    /// `min(N_r, N_t)` singular values, descending.
    pub sigma: Vec<T>,
    /// `N_t x N_t` unitary.
    pub v: CMatrix<T>,
}

impl<T: Real> SvdTriple<T> {
    /// `u * diag(sigma) * v^H`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let s = CMatrix::diag_real(self.u.cols(), self.v.cols(), &self.sigma);
        self.u
            .matmul(&s)
            .and_then(|us| us.matmul(&self.v.adjoint()))
            .expect("SVD factors have consistent shapes")
    }
}

/// Singular value decomposition by one-sided Jacobi rotations on the columns
/// of `h`, iterated until every column pair is orthogonal to `1e-12`
/// relative precision (or machine precision for `f32`).
pub fn svd_decompose<T: Real>(h: &CMatrix<T>) -> Result<SvdTriple<T>> {
    if !h.is_finite() {
        return domain("svd_decompose needs finite entries");
    }
    let (rows, cols) = h.shape();
    // Column-major working copies.
    let mut a: Vec<Vec<Complex<T>>> = (0..cols).map(|c| (0..rows).map(|r| h[(r, c)]).collect()).collect();
    let mut v: Vec<Vec<Complex<T>>> = (0..cols)
        .map(|c| {
            (0..cols)
                .map(|r| if r == c { Complex::one() } else { Complex::zero() })
                .collect()
        })
        .collect();
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0));
    // Columns below this squared norm are numerically zero; rotating them
    // would work on subnormal inner products.
    let negligible = {
        let fro2: T = a.iter().flatten().map(|z| z.norm_sqr()).sum();
        fro2 * T::epsilon() * T::epsilon()
    };

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: T = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: T = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex<T> = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if alpha <= negligible || beta <= negligible || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate the phase out of gamma, then a real Jacobi rotation.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                let ph = phase.conj();
                let (ap, aq) = pair_mut(&mut a, p, q);
                for (xp, xq) in ap.iter_mut().zip(aq.iter_mut()) {
                    let yq = *xq * ph;
                    let yp = *xp;
                    *xp = yp * cs - yq * sn;
                    *xq = yp * sn + yq * cs;
                }
                let (vp, vq) = pair_mut(&mut v, p, q);
                for (xp, xq) in vp.iter_mut().zip(vq.iter_mut()) {
                    let yq = *xq * ph;
                    let yp = *xp;
                    *xp = yp * cs - yq * sn;
                    *xq = yp * sn + yq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = a.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));

    let k = rows.min(cols);
    let sigma: Vec<T> = order.iter().take(k).map(|&i| norms[i]).collect();
    let v_sorted = CMatrix::from_fn(cols, cols, |r, c| v[order[c]][r]);

    // Left singular vectors from the non-negligible columns, completed to a
    // unitary basis by Gram-Schmidt against the standard basis.
    let scale = sigma.first().copied().unwrap_or(T::zero());
    let cutoff = scale * T::epsilon() * T::count(rows.max(cols)) * T::lit(16.0);
    let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(rows);
    for (idx, &i) in order.iter().take(k).enumerate() {
        if sigma[idx] > cutoff && sigma[idx] > T::zero() {
            let inv = T::one() / sigma[idx];
            let mut col: Vec<Complex<T>> = a[i].iter().map(|z| z * inv).collect();
            orthonormalize(&mut col, &basis);
            basis.push(col);
        } else {
            basis.push(Vec::new());
        }
    }
    let mut e = 0;
    for slot in 0..rows {
        if slot < basis.len() && !basis[slot].is_empty() {
            continue;
        }
        loop {
            let mut cand: Vec<Complex<T>> = vec![Complex::zero(); rows];
            cand[e % rows] = Complex::one();
            e += 1;
            let filled: Vec<Vec<Complex<T>>> = basis.iter().filter(|b| !b.is_empty()).cloned().collect();
            let norm = orthonormalize(&mut cand, &filled);
            if norm > T::lit(0.5) {
                if slot < basis.len() {
                    basis[slot] = cand;
                } else {
                    basis.push(cand);
                }
                break;
            }
        }
    }
    let u = CMatrix::from_fn(rows, rows, |r, c| basis[c][r]);
    Ok(SvdTriple { u, sigma, v: v_sorted })
}

fn pair_mut<X>(v: &mut [X], p: usize, q: usize) -> (&mut X, &mut X) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Removes the components along `basis` (twice, for stability) and
/// normalizes. Returns the norm left after projection.
fn orthonormalize<T: Real>(x: &mut [Complex<T>], basis: &[Vec<Complex<T>>]) -> T {
    for _ in 0..2 {
        for b in basis {
            let proj: Complex<T> = b.iter().zip(x.iter()).map(|(bb, xx)| bb.conj() * xx).sum();
            for (xx, bb) in x.iter_mut().zip(b) {
                *xx = *xx - bb * proj;
            }
        }
    }
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if norm > T::zero() {
        let inv = T::one() / norm;
        x.iter_mut().for_each(|z| *z = *z * inv);
    }
    norm
}

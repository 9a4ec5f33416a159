//! Closed-loop link evaluation with a water-filling precoder.
//!
//! The transmitter decomposes its reconstructed channel
//! `H_bar = U S V^H`, precodes with `V Z`, and loads power on the
//! eigenmodes by water-filling. Quantization error `E = H - H_bar` with
//! i.i.d. entries of variance `d` acts as extra noise:
//! `F = I / A^2 + E[J_e J_e^H]` with `J_e = E V Z`, which reduces to
//! `(1 / A^2 + d * sum_i z_i^2) I`.
//!
//! SNR convention: noise variance is normalized to one, so an SNR of
//! `x` dB means `A^2 = 10^(x / 10)`.

mod ergodic;
mod svd;

pub use ergodic::{
    capacity_ergodic, capacity_ergodic_with, closed_loop, mean_and_stderr, ClosedLoopRun, ErgodicEstimate, ErgodicSetup,
    FeedbackCodebooks, FeedbackScheme, LloydSettings, PredictorKind,
};
pub use svd::{svd_decompose, SvdTriple};

use num_complex::Complex;

use crate::cmat::{CMatrix, ChannelMatrix};
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Converts an SNR in dB to the signal power `A^2` at unit noise variance.
pub fn snr_db_to_a2<T: Real>(snr_db: T) -> T {
    T::lit(10.0).powf(snr_db / T::lit(10.0))
}

/// Water-filling power per transmit eigenmode.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerAllocation<T> {
    /// Power `z_i^2` of each mode, in the order of the singular values
    /// passed to [`waterfill`].
    pub z2: Vec<T>,
    /// Water level (cut-off) `mu`.
    pub mu: T,
    /// Signal power `A^2`.
    pub a2_amp: T,
}

impl<T: Real> PowerAllocation<T> {
    pub fn total_power(&self) -> T {
        self.z2.iter().copied().sum()
    }
}

/// Water-filling over the modes with singular values `sigma` (one entry per
/// transmit eigenmode, zeros allowed) under `sum z_i^2 = sigma.len()`.
///
/// Modes are sorted by gain; with `k` modes assumed active the level is
/// `mu = (N_t + sum_{i<k} 1 / (gamma_i^2 A^2)) / k`, and `k` shrinks while the
/// weakest assumed-active mode would get negative power.
pub fn waterfill<T: Real>(sigma: &[T], a2_amp: T) -> Result<PowerAllocation<T>> {
    if !(a2_amp > T::zero()) || !a2_amp.is_finite() {
        return domain(format!("signal power must be positive, got {a2_amp}"));
    }
    if sigma.iter().any(|s| !(*s >= T::zero()) || !s.is_finite()) {
        return domain("singular values must be finite and non-negative");
    }
    let n_t = T::count(sigma.len());
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite").then(i.cmp(&j)));
    let inv_gain = |i: usize| T::one() / (sigma[i] * sigma[i] * a2_amp);

    let mut k = sigma.iter().filter(|s| **s > T::zero()).count();
    if k == 0 {
        return Err(Error::NoSignal);
    }
    let mu = loop {
        let sum_inv: T = order[..k].iter().map(|&i| inv_gain(i)).sum();
        let mu = (n_t + sum_inv) / T::count(k);
        if mu - inv_gain(order[k - 1]) >= T::zero() || k == 1 {
            break mu;
        }
        k -= 1;
    };
    let mut z2 = vec![T::zero(); sigma.len()];
    for &i in &order[..k] {
        z2[i] = (mu - inv_gain(i)).max(T::zero());
    }
    Ok(PowerAllocation { z2, mu, a2_amp })
}

/// Scalar `f` with `F = f I`: `1 / A^2 + d * sum_i z_i^2`.
pub fn effective_noise<T: Real>(alloc: &PowerAllocation<T>, d: T) -> Result<T> {
    if !(d >= T::zero()) {
        return domain(format!("distortion must be >= 0, got {d}"));
    }
    Ok(T::one() / alloc.a2_amp + d * alloc.total_power())
}

/// Precoder `V Z` and allocation for a reconstructed channel.
pub fn precoder<T: Real>(h_reconstructed: &ChannelMatrix<T>, a2_amp: T) -> Result<(CMatrix<T>, PowerAllocation<T>)> {
    let n_t = h_reconstructed.cols();
    let svd = svd_decompose(h_reconstructed)?;
    let mut gains = svd.sigma.clone();
    gains.resize(n_t, T::zero());
    let alloc = waterfill(&gains, a2_amp)?;
    let z: Vec<T> = alloc.z2.iter().map(|p| p.sqrt()).collect();
    let vz = svd.v.matmul(&CMatrix::diag_real(n_t, n_t, &z))?;
    Ok((vz, alloc))
}

/// Instantaneous closed-loop capacity `log2 det(I + J J^H / f)` in bits per
/// channel use, with `J = H_bar V Z` and `f` from [`effective_noise`].
pub fn capacity_instant<T: Real>(h_reconstructed: &ChannelMatrix<T>, d: T, a2_amp: T) -> Result<T> {
    if !h_reconstructed.is_finite() {
        return domain("channel entries must be finite");
    }
    let (vz, alloc) = precoder(h_reconstructed, a2_amp)?;
    let f = effective_noise(&alloc, d)?;
    let j = h_reconstructed.matmul(&vz)?;
    let n_r = h_reconstructed.rows();
    let jj = j.matmul(&j.adjoint())?;
    let m = CMatrix::from_fn(n_r, n_r, |r, c| {
        let one = if r == c { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) };
        one + jj[(r, c)] / f
    });
    let det = m.det()?;
    Ok(det.re.log2().max(T::zero()))
}

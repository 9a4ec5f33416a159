//! Rate-distortion feedback rates for Gaussian CSI.
//!
//! All rates are in bits (base-2 logarithms) per fed-back channel matrix.
//! `d` is always the per-entry distortion `D / (N_r N_t)`.
//!
//! With reconstructed history `H_bar = H - E`, the quantity actually fed back
//! in the differential scheme is
//! `a1 E[m-1, n] + a2 E[m, n-1] + H_d`, whose variance is
//! `a1^2 d + a2^2 d + 2 a1 a2 r_E + Var(H_d)`. The quantization errors of the
//! two neighbours are correlated through the channel they quantize: writing
//! `E = (1 - s) H + psi` with `s = sigma_hbar^2 / sigma_h^2` and `psi`
//! independent of `H`, their cross-correlation is
//! `r_E = d^2 alpha_t alpha_f / sigma_h^2` (see [`quant_error_corr`]).
//! Dividing that variance by `d` inside `log2` gives [`rate_diff_2d`].

use crate::error::{domain, Result};
use crate::predictor::{predictor_coeffs, PredictorCoeffs};
use crate::scalar::Real;

/// Which feedback scheme a rate was computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RateScheme {
    NonDifferential,
    Diff1dTime,
    Diff1dFreq,
    Diff2d,
}

impl RateScheme {
    pub fn name(self) -> &'static str {
        match self {
            RateScheme::NonDifferential => "non_differential",
            RateScheme::Diff1dTime => "diff_1d_time",
            RateScheme::Diff1dFreq => "diff_1d_freq",
            RateScheme::Diff2d => "diff_2d",
        }
    }
}

/// Minimal feedback rate and the inputs it was computed from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport<T> {
    pub bits_total: T,
    pub bits_per_entry: T,
    pub scheme: RateScheme,
    /// Per-entry distortion `D / (N_r N_t)`.
    pub d: T,
    pub alpha_t: T,
    pub alpha_f: T,
    pub sigma2_h: T,
    pub n_r: usize,
    pub n_t: usize,
    /// `true` when the log argument fell below one and the rate was clamped
    /// to zero.
    pub clamped: bool,
}

impl<T: Real> RateReport<T> {
    /// Total rate in nats.
    pub fn nats_total(&self) -> T {
        self.bits_total * T::LN_2()
    }
}

/// Per-entry distortion from a total distortion budget `D`.
pub fn per_entry_distortion<T: Real>(d_total: T, n_r: usize, n_t: usize) -> T {
    d_total / T::count(n_r * n_t)
}

/// Differential entropy `0.5 * log2(2 pi e sigma2)` of a real Gaussian, bits.
pub fn gaussian_entropy_bits<T: Real>(sigma2: T) -> Result<T> {
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return domain(format!("variance must be positive, got {sigma2}"));
    }
    Ok(T::lit(0.5) * (T::TAU() * T::E() * sigma2).log2())
}

fn check_common<T: Real>(n_r: usize, n_t: usize, sigma2_h: T, d: T) -> Result<()> {
    if n_r == 0 || n_t == 0 {
        return domain("antenna counts must be >= 1");
    }
    if !(sigma2_h > T::zero()) || !sigma2_h.is_finite() {
        return domain(format!("sigma2_h must be positive, got {sigma2_h}"));
    }
    if !(d > T::zero()) {
        return domain(format!("distortion must be positive, got {d}"));
    }
    if d > sigma2_h {
        return domain(format!(
            "distortion {d} exceeds channel power {sigma2_h}; the rate would be negative"
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report<T: Real>(
    scheme: RateScheme,
    n_r: usize,
    n_t: usize,
    sigma2_h: T,
    d: T,
    alpha_t: T,
    alpha_f: T,
    log_arg: T,
) -> RateReport<T> {
    let entries = T::count(n_r * n_t);
    let raw = entries * log_arg.log2();
    let clamped = raw < T::zero();
    let bits_total = if clamped { T::zero() } else { raw };
    RateReport {
        bits_total,
        bits_per_entry: bits_total / entries,
        scheme,
        d,
        alpha_t,
        alpha_f,
        sigma2_h,
        n_r,
        n_t,
        clamped,
    }
}

/// Non-differential rate `N_r N_t log2(sigma_h^2 / d)`.
pub fn rate_nondiff<T: Real>(n_r: usize, n_t: usize, sigma2_h: T, d: T) -> Result<RateReport<T>> {
    check_common(n_r, n_t, sigma2_h, d)?;
    Ok(report(
        RateScheme::NonDifferential,
        n_r,
        n_t,
        sigma2_h,
        d,
        T::zero(),
        T::zero(),
        sigma2_h / d,
    ))
}

/// The argument of `log2` in the two-dimensional rate, per entry.
fn diff_2d_log_arg<T: Real>(c: &PredictorCoeffs<T>, alpha_t: T, alpha_f: T, sigma2_h: T, d: T) -> T {
    c.a1 * c.a1 + c.a2 * c.a2 + T::lit(2.0) * c.a1 * c.a2 * alpha_t * alpha_f * d / sigma2_h + c.mse / d
}

/// Minimal two-dimensional differential rate
/// `N_r N_t log2(a1^2 + a2^2 + 2 a1 a2 at af d / sigma^2 + Var(H_d) / d)`.
pub fn rate_diff_2d<T: Real>(
    n_r: usize,
    n_t: usize,
    sigma2_h: T,
    d: T,
    alpha_t: T,
    alpha_f: T,
) -> Result<RateReport<T>> {
    check_common(n_r, n_t, sigma2_h, d)?;
    let c = predictor_coeffs(alpha_t, alpha_f, sigma2_h)?;
    let arg = diff_2d_log_arg(&c, alpha_t, alpha_f, sigma2_h, d);
    Ok(report(RateScheme::Diff2d, n_r, n_t, sigma2_h, d, alpha_t, alpha_f, arg))
}

/// One-dimensional differential rate with a single tap `alpha`:
/// `N_r N_t log2(alpha^2 + sigma^2 (1 - alpha^2) / d)`.
///
/// Reported as [`RateScheme::Diff1dTime`]; use [`rate_diff_1d_freq`] for the
/// spectral variant.
pub fn rate_diff_1d<T: Real>(n_r: usize, n_t: usize, sigma2_h: T, d: T, alpha: T) -> Result<RateReport<T>> {
    rate_1d(RateScheme::Diff1dTime, n_r, n_t, sigma2_h, d, alpha)
}

/// [`rate_diff_1d`] along the frequency axis.
pub fn rate_diff_1d_freq<T: Real>(n_r: usize, n_t: usize, sigma2_h: T, d: T, alpha: T) -> Result<RateReport<T>> {
    rate_1d(RateScheme::Diff1dFreq, n_r, n_t, sigma2_h, d, alpha)
}

fn rate_1d<T: Real>(scheme: RateScheme, n_r: usize, n_t: usize, sigma2_h: T, d: T, alpha: T) -> Result<RateReport<T>> {
    check_common(n_r, n_t, sigma2_h, d)?;
    if !(alpha >= T::zero() && alpha < T::one()) {
        return domain(format!("one-dimensional correlation must lie in [0, 1), got {alpha}"));
    }
    let arg = alpha * alpha + sigma2_h * (T::one() - alpha * alpha) / d;
    let (at, af) = match scheme {
        RateScheme::Diff1dFreq => (T::zero(), alpha),
        _ => (alpha, T::zero()),
    };
    Ok(report(scheme, n_r, n_t, sigma2_h, d, at, af, arg))
}

/// Cross-correlation of the quantization errors of the time and frequency
/// neighbours, `d^2 alpha_t alpha_f / sigma_h^2`.
pub fn quant_error_corr<T: Real>(d: T, sigma2_h: T, alpha_t: T, alpha_f: T) -> Result<T> {
    if !(d > T::zero()) {
        return domain(format!("distortion must be positive, got {d}"));
    }
    if !(sigma2_h > T::zero()) {
        return domain(format!("sigma2_h must be positive, got {sigma2_h}"));
    }
    for a in [alpha_t, alpha_f] {
        if !(a >= T::zero() && a <= T::one()) {
            return domain(format!("correlation must lie in [0, 1], got {a}"));
        }
    }
    Ok(d * d * alpha_t * alpha_f / sigma2_h)
}

/// Per-entry distortion at which a scheme's minimal rate equals `bits`.
///
/// The log argument `g(d) = A + c d + V / d` is decreasing on
/// `(0, sqrt(V / c)]` and, for the two-dimensional scheme, turns back up
/// beyond that point; the search is restricted to the decreasing branch
/// capped at `sigma_h^2`. Returns the cap when even there the rate is at or
/// below `bits`.
pub fn distortion_for_rate<T: Real>(
    scheme: RateScheme,
    bits: T,
    n_r: usize,
    n_t: usize,
    sigma2_h: T,
    alpha_t: T,
    alpha_f: T,
) -> Result<T> {
    if !(bits >= T::zero()) || !bits.is_finite() {
        return domain(format!("bit budget must be finite and >= 0, got {bits}"));
    }
    check_common(n_r, n_t, sigma2_h, sigma2_h)?;
    let (a_sq, cross, var) = match scheme {
        RateScheme::NonDifferential => (T::zero(), T::zero(), sigma2_h),
        RateScheme::Diff1dTime | RateScheme::Diff1dFreq => {
            let a = if scheme == RateScheme::Diff1dTime { alpha_t } else { alpha_f };
            if !(a >= T::zero() && a < T::one()) {
                return domain(format!("one-dimensional correlation must lie in [0, 1), got {a}"));
            }
            (a * a, T::zero(), sigma2_h * (T::one() - a * a))
        }
        RateScheme::Diff2d => {
            let c = predictor_coeffs(alpha_t, alpha_f, sigma2_h)?;
            (
                c.a1 * c.a1 + c.a2 * c.a2,
                T::lit(2.0) * c.a1 * c.a2 * alpha_t * alpha_f / sigma2_h,
                c.mse,
            )
        }
    };
    if var <= T::zero() {
        return domain("prediction is exact; no distortion/rate trade-off exists");
    }
    let g = |d: T| a_sq + cross * d + var / d;
    let mut hi = sigma2_h;
    if cross > T::zero() {
        hi = hi.min((var / cross).sqrt());
    }
    let target = T::lit(2.0).powf(bits / T::count(n_r * n_t));
    if g(hi) >= target {
        return Ok(hi);
    }
    // g(lo) > target for small enough lo since g ~ V/d.
    let mut lo = hi;
    while g(lo) <= target {
        lo = lo / T::lit(2.0);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

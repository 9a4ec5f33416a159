//! Second-order statistics of the doubly-selective channel.
//!
//! The channel correlation separates into a temporal and a spectral factor,
//! each modeled as a first-order autoregressive process:
//!
//! * temporal lag-1 coefficient `alpha_t = J0(2 pi f_d t_s)` (Doppler `f_d`,
//!   symbol period `t_s`),
//! * spectral lag-1 coefficient `alpha_f = 1 / sqrt(1 + (2 pi f_s delta)^2)`
//!   (subchannel spacing `f_s`, RMS delay spread `delta`),
//!
//! and the full correlation at lag `(dm, dn)` is
//! `sigma_h^2 * alpha_t^|dm| * alpha_f^|dn|`.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Physical parameters a set of correlation coefficients was derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams<T> {
    /// Doppler frequency, Hz.
    pub doppler_hz: T,
    /// Symbol period, s.
    pub symbol_period_s: T,
    /// Subchannel spacing, Hz.
    pub subchannel_spacing_hz: T,
    /// RMS delay spread, s.
    pub delay_spread_s: T,
}

/// Lag-1 temporal and spectral correlation plus channel power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationParams<T> {
    alpha_t: T,
    alpha_f: T,
    sigma2_h: T,
    physical: Option<PhysicalParams<T>>,
}

impl<T: Real> CorrelationParams<T> {
    /// Validates `0 <= alpha_t, alpha_f <= 1` and `sigma2_h > 0`.
    pub fn new(alpha_t: T, alpha_f: T, sigma2_h: T) -> Result<Self> {
        check_coefficient("alpha_t", alpha_t)?;
        check_coefficient("alpha_f", alpha_f)?;
        if !(sigma2_h > T::zero()) || !sigma2_h.is_finite() {
            return domain(format!("sigma2_h must be positive and finite, got {sigma2_h}"));
        }
        Ok(Self {
            alpha_t,
            alpha_f,
            sigma2_h,
            physical: None,
        })
    }

    /// Derives both coefficients from Doppler, symbol period, subchannel
    /// spacing and delay spread.
    ///
    /// A negative `J0` (Doppler-period product past the first Bessel zero)
    /// is rejected instead of clamped.
    pub fn from_physical(physical: PhysicalParams<T>, sigma2_h: T) -> Result<Self> {
        let alpha_t = temporal_corr(physical.doppler_hz, physical.symbol_period_s)?;
        let alpha_f = spectral_corr(physical.subchannel_spacing_hz, physical.delay_spread_s)?;
        let mut p = Self::new(alpha_t, alpha_f, sigma2_h)?;
        p.physical = Some(physical);
        Ok(p)
    }

    #[inline]
    pub fn alpha_t(&self) -> T {
        self.alpha_t
    }

    #[inline]
    pub fn alpha_f(&self) -> T {
        self.alpha_f
    }

    #[inline]
    pub fn sigma2_h(&self) -> T {
        self.sigma2_h
    }

    pub fn physical(&self) -> Option<&PhysicalParams<T>> {
        self.physical.as_ref()
    }
}

fn check_coefficient<T: Real>(name: &str, a: T) -> Result<()> {
    if !(a >= T::zero() && a <= T::one()) {
        return domain(format!("{name} must lie in [0, 1], got {a}"));
    }
    Ok(())
}

/// Switch-over between the power series and the Hankel asymptotic expansion.
const SERIES_LIMIT: f64 = 12.0;

/// Zero-order Bessel function of the first kind.
///
/// Power series for `|x| <= 12`, Hankel asymptotic expansion beyond. For
/// `f64` the absolute error stays below `1e-10` on `|x| <= 50`.
pub fn bessel_j0<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain(format!("bessel_j0 needs a finite argument, got {x}"));
    }
    let x = x.abs();
    if x <= T::lit(SERIES_LIMIT) {
        Ok(j0_series(x))
    } else {
        Ok(j0_asymptotic(x))
    }
}

fn j0_series<T: Real>(x: T) -> T {
    let q = x * x / T::lit(4.0);
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = 1usize;
    loop {
        let kk = T::count(k);
        term = -term * q / (kk * kk);
        sum = sum + term;
        if term.abs() <= T::epsilon() * T::lit(1e-3) * sum.abs().max(T::one()) {
            break;
        }
        k += 1;
        if k > 200 {
            break;
        }
    }
    sum
}

fn j0_asymptotic<T: Real>(x: T) -> T {
    // J0(x) = sqrt(2/(pi x)) * Re[exp(i chi) * sum_k i^k a_k x^-k],
    // a_k = a_{k-1} * (-(2k-1)^2) / (8k), chi = x - pi/4.
    let mut a = T::one();
    let mut re = T::one();
    let mut im = T::zero();
    let mut prev = T::infinity();
    for k in 1..60usize {
        let kf = T::count(k);
        let odd = T::count(2 * k - 1);
        a = a * (-(odd * odd)) / (T::lit(8.0) * kf * x);
        if a.abs() >= prev {
            break;
        }
        prev = a.abs();
        match k % 4 {
            0 => re = re + a,
            1 => im = im + a,
            2 => re = re - a,
            _ => im = im - a,
        }
        if a.abs() < T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    let chi = x - T::FRAC_PI_4();
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (chi.cos() * re - chi.sin() * im)
}

/// Temporal lag-1 correlation `J0(2 pi f_d t_s)`.
pub fn temporal_corr<T: Real>(doppler_hz: T, symbol_period_s: T) -> Result<T> {
    if !(doppler_hz >= T::zero()) || !doppler_hz.is_finite() {
        return domain(format!("doppler frequency must be >= 0, got {doppler_hz}"));
    }
    if !(symbol_period_s > T::zero()) || !symbol_period_s.is_finite() {
        return domain(format!("symbol period must be > 0, got {symbol_period_s}"));
    }
    bessel_j0(T::TAU() * doppler_hz * symbol_period_s)
}

/// Spectral lag-1 correlation `1 / sqrt(1 + (2 pi f_s delta)^2)`.
pub fn spectral_corr<T: Real>(subchannel_spacing_hz: T, delay_spread_s: T) -> Result<T> {
    if !(subchannel_spacing_hz >= T::zero()) || !subchannel_spacing_hz.is_finite() {
        return domain(format!("subchannel spacing must be >= 0, got {subchannel_spacing_hz}"));
    }
    if !(delay_spread_s >= T::zero()) || !delay_spread_s.is_finite() {
        return domain(format!("delay spread must be >= 0, got {delay_spread_s}"));
    }
    let x = T::TAU() * subchannel_spacing_hz * delay_spread_s;
    Ok(T::one() / (T::one() + x * x).sqrt())
}

/// `sigma_h^2 * alpha_t^|dm| * alpha_f^|dn|`.
pub fn separable_corr<T: Real>(params: &CorrelationParams<T>, dm: i64, dn: i64) -> T {
    params.sigma2_h * powi(params.alpha_t, dm.unsigned_abs()) * powi(params.alpha_f, dn.unsigned_abs())
}

fn powi<T: Real>(base: T, exp: u64) -> T {
    // 0^0 = 1 is the lag-0 correlation.
    let mut acc = T::one();
    let mut b = base;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b;
        }
        b = b * b;
        e >>= 1;
    }
    acc
}

//! Two-tap MMSE channel predictor and differential CSI.
//!
//! The current channel is predicted from its time predecessor `H[m-1, n]`
//! and frequency predecessor `H[m, n-1]`:
//!
//! ```text
//! H_hat[m, n] = a1 * H[m-1, n] + a2 * H[m, n-1]
//! ```
//!
//! Requiring the prediction error to be orthogonal to both observations
//! gives the normal equations
//!
//! ```text
//! a1           + a2 * at * af = at
//! a1 * at * af + a2           = af
//! ```
//!
//! whose solution is
//! `a1 = at (1 - af^2) / (1 - at^2 af^2)`, `a2 = af (1 - at^2) / (1 - at^2 af^2)`
//! with error variance `sigma^2 (1 - a1^2 - a2^2 - 2 a1 a2 at af)`.

use crate::chansim::ChannelField;
use crate::cmat::ChannelMatrix;
use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Predictor taps plus the analytic prediction-error variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictorCoeffs<T> {
    /// Time-direction tap.
    pub a1: T,
    /// Frequency-direction tap.
    pub a2: T,
    /// Prediction-error variance per entry, `Var(H_d)`.
    pub mse: T,
}

impl<T: Real> PredictorCoeffs<T> {
    /// Single-tap time-direction predictor `a1 = alpha_t, a2 = 0` with
    /// error variance `sigma^2 (1 - alpha_t^2)`.
    pub fn time_only(alpha_t: T, sigma2_h: T) -> Result<Self> {
        check_inputs(alpha_t, T::zero(), sigma2_h)?;
        Ok(Self {
            a1: alpha_t,
            a2: T::zero(),
            mse: sigma2_h * (T::one() - alpha_t * alpha_t),
        })
    }

    /// Taps `(a1, a2)` with an unspecified error variance, e.g. for tests of
    /// the linear maps.
    pub fn from_taps(a1: T, a2: T) -> Self {
        Self {
            a1,
            a2,
            mse: T::nan(),
        }
    }
}

fn check_inputs<T: Real>(alpha_t: T, alpha_f: T, sigma2_h: T) -> Result<()> {
    for (name, a) in [("alpha_t", alpha_t), ("alpha_f", alpha_f)] {
        if !(a >= T::zero() && a <= T::one()) {
            return domain(format!("{name} must lie in [0, 1], got {a}"));
        }
    }
    if !(sigma2_h > T::zero()) || !sigma2_h.is_finite() {
        return domain(format!("sigma2_h must be positive, got {sigma2_h}"));
    }
    Ok(())
}

/// MMSE taps for lag-1 correlations `(alpha_t, alpha_f)` and channel power
/// `sigma2_h`.
pub fn predictor_coeffs<T: Real>(alpha_t: T, alpha_f: T, sigma2_h: T) -> Result<PredictorCoeffs<T>> {
    check_inputs(alpha_t, alpha_f, sigma2_h)?;
    let rho = alpha_t * alpha_f;
    let den = T::one() - rho * rho;
    if den <= T::zero() {
        return Err(Error::Singular(
            "alpha_t = alpha_f = 1: predictor normal equations are singular".into(),
        ));
    }
    let a1 = alpha_t * (T::one() - alpha_f * alpha_f) / den;
    let a2 = alpha_f * (T::one() - alpha_t * alpha_t) / den;
    let mse = sigma2_h * (T::one() - a1 * a1 - a2 * a2 - T::lit(2.0) * a1 * a2 * rho);
    // Rounding can leave a tiny negative value when alpha_t or alpha_f is 1.
    let mse = mse.max(T::zero());
    Ok(PredictorCoeffs { a1, a2, mse })
}

/// `a1 * h_time_prev + a2 * h_freq_prev`.
pub fn predict<T: Real>(
    h_time_prev: &ChannelMatrix<T>,
    h_freq_prev: &ChannelMatrix<T>,
    coeffs: &PredictorCoeffs<T>,
) -> Result<ChannelMatrix<T>> {
    h_time_prev.lin_comb(coeffs.a1, h_freq_prev, coeffs.a2)
}

/// Prediction error `h_current - a1 * h_time_prev - a2 * h_freq_prev`.
pub fn differential<T: Real>(
    h_current: &ChannelMatrix<T>,
    h_time_prev: &ChannelMatrix<T>,
    h_freq_prev: &ChannelMatrix<T>,
    coeffs: &PredictorCoeffs<T>,
) -> Result<ChannelMatrix<T>> {
    h_current.ensure_same_shape(h_time_prev)?;
    let pred = predict(h_time_prev, h_freq_prev, coeffs)?;
    h_current.try_sub(&pred)
}

/// Channel rebuilt from the prediction and a (quantized) differential.
pub fn reconstruct<T: Real>(
    h_time_prev: &ChannelMatrix<T>,
    h_freq_prev: &ChannelMatrix<T>,
    h_d_quantized: &ChannelMatrix<T>,
    coeffs: &PredictorCoeffs<T>,
) -> Result<ChannelMatrix<T>> {
    let pred = predict(h_time_prev, h_freq_prev, coeffs)?;
    pred.try_add(h_d_quantized)
}

/// Mean per-entry squared prediction error `|H - H_hat|^2 / (N_r N_t)` over
/// the interior points of a field, predicting from the true neighbours.
pub fn field_prediction_mse<T: Real>(field: &ChannelField<T>, coeffs: &PredictorCoeffs<T>) -> Result<T> {
    let d = field.dims();
    if d.symbols < 2 || d.subchannels < 2 {
        return domain("field has no interior points");
    }
    let mut acc = T::zero();
    for m in 1..d.symbols {
        for n in 1..d.subchannels {
            let e = differential(field.at(m, n), field.at(m - 1, n), field.at(m, n - 1), coeffs)?;
            acc = acc + e.norm_sqr();
        }
    }
    Ok(acc / T::count(d.interior_points() * d.n_r * d.n_t))
}

//! Realizations of the doubly-selective MIMO channel.
//!
//! Each transmit/receive antenna pair is an independent complex Gaussian
//! process on the `(symbol interval, subchannel)` grid. A white
//! `CN(0, sigma_h^2)` grid is filtered by a stationary AR(1) recursion along
//! time and the result by a second AR(1) recursion along frequency. The
//! cascade yields exactly the separable correlation
//! `sigma_h^2 * alpha_t^|dm| * alpha_f^|dn|` at every grid position, edges
//! included, because each recursion starts from the stationary marginal.

use std::io::Write;

use num_complex::Complex;
use rand::Rng;

use crate::cmat::ChannelMatrix;
use crate::corrstats::CorrelationParams;
use crate::error::{domain, Error, Result};
use crate::rng::lane_rng;
use crate::scalar::Real;

/// Grid and antenna dimensions of a channel field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldDims {
    /// Number of symbol intervals `M`.
    pub symbols: usize,
    /// Number of subchannels `N`.
    pub subchannels: usize,
    pub n_r: usize,
    pub n_t: usize,
}

impl FieldDims {
    pub fn new(symbols: usize, subchannels: usize, n_r: usize, n_t: usize) -> Self {
        Self {
            symbols,
            subchannels,
            n_r,
            n_t,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.symbols == 0 || self.subchannels == 0 || self.n_r == 0 || self.n_t == 0 {
            return domain(format!("field dimensions must be >= 1, got {self:?}"));
        }
        Ok(())
    }

    /// Grid points with both a time and a frequency predecessor.
    pub fn interior_points(&self) -> usize {
        self.symbols.saturating_sub(1) * self.subchannels.saturating_sub(1)
    }
}

/// One realization of the channel over an `M x N` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelField<T> {
    dims: FieldDims,
    grid: Vec<ChannelMatrix<T>>,
    params: CorrelationParams<T>,
    seed: u64,
}

impl<T: Real> ChannelField<T> {
    /// Wraps an existing grid (row-major over symbol interval, then
    /// subchannel).
    pub fn from_grid(
        dims: FieldDims,
        grid: Vec<ChannelMatrix<T>>,
        params: CorrelationParams<T>,
        seed: u64,
    ) -> Result<Self> {
        dims.validate()?;
        if grid.len() != dims.symbols * dims.subchannels {
            return Err(Error::Shape {
                expected: format!("{} grid points", dims.symbols * dims.subchannels),
                got: format!("{} grid points", grid.len()),
            });
        }
        for h in &grid {
            if h.shape() != (dims.n_r, dims.n_t) {
                return Err(Error::Shape {
                    expected: format!("{}x{}", dims.n_r, dims.n_t),
                    got: format!("{}x{}", h.rows(), h.cols()),
                });
            }
            if !h.is_finite() {
                return domain("channel entries must be finite");
            }
        }
        Ok(Self {
            dims,
            grid,
            params,
            seed,
        })
    }

    #[inline]
    pub fn dims(&self) -> FieldDims {
        self.dims
    }

    #[inline]
    pub fn params(&self) -> &CorrelationParams<T> {
        &self.params
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Channel matrix at symbol interval `m`, subchannel `n`.
    #[inline]
    pub fn at(&self, m: usize, n: usize) -> &ChannelMatrix<T> {
        &self.grid[m * self.dims.subchannels + n]
    }

    pub fn grid(&self) -> &[ChannelMatrix<T>] {
        &self.grid
    }

    /// Writes the field as CSV: one line per grid point in row-major
    /// `(m, n)` order, antenna entries row-major as interleaved re/im.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("m,n");
        for r in 0..self.dims.n_r {
            for c in 0..self.dims.n_t {
                header.push_str(&format!(",re_{r}_{c},im_{r}_{c}"));
            }
        }
        writeln!(out, "{header}")?;
        for m in 0..self.dims.symbols {
            for n in 0..self.dims.subchannels {
                let mut line = format!("{m},{n}");
                for z in self.at(m, n).as_slice() {
                    line.push_str(&format!(",{:e},{:e}", z.re, z.im));
                }
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }
}

/// One AR(1) step: `alpha * prev + sqrt(1 - alpha^2) * W`, `W` i.i.d.
/// `CN(0, sigma2_h)`.
pub fn ar1_step<T: Real, R: Rng + ?Sized>(
    prev: &ChannelMatrix<T>,
    alpha: T,
    sigma2_h: T,
    rng: &mut R,
) -> Result<ChannelMatrix<T>> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return domain(format!("AR(1) coefficient must lie in [0, 1], got {alpha}"));
    }
    if !prev.is_finite() {
        return domain("AR(1) state must be finite");
    }
    if alpha == T::one() {
        return Ok(prev.clone());
    }
    let w = ChannelMatrix::complex_gaussian(prev.rows(), prev.cols(), sigma2_h, rng);
    prev.lin_comb(alpha, &w, (T::one() - alpha * alpha).sqrt())
}

/// Generates a field with the separable correlation of `params`.
///
/// Antenna pair `(r, c)` draws from ChaCha stream `r * n_t + c` keyed by
/// `seed`, so the same seed gives a bit-identical field.
pub fn gen_field<T: Real>(params: &CorrelationParams<T>, dims: FieldDims, seed: u64) -> Result<ChannelField<T>> {
    gen_field_with(params, dims, seed, |lane| lane_rng(seed, lane))
}

/// Like [`gen_field`] with a caller-supplied random stream per antenna lane.
pub fn gen_field_with<T, R, F>(
    params: &CorrelationParams<T>,
    dims: FieldDims,
    seed: u64,
    mut lane_stream: F,
) -> Result<ChannelField<T>>
where
    T: Real,
    R: Rng,
    F: FnMut(u64) -> R,
{
    dims.validate()?;
    let (m_len, n_len) = (dims.symbols, dims.subchannels);
    let at = params.alpha_t();
    let af = params.alpha_f();
    let gt = (T::one() - at * at).sqrt();
    let gf = (T::one() - af * af).sqrt();
    let s = (params.sigma2_h() / T::lit(2.0)).sqrt();

    let mut grid = vec![ChannelMatrix::zeros(dims.n_r, dims.n_t); m_len * n_len];
    let mut lane_buf = vec![Complex::new(T::zero(), T::zero()); m_len * n_len];
    for r in 0..dims.n_r {
        for c in 0..dims.n_t {
            let lane = (r * dims.n_t + c) as u64;
            let mut rng = lane_stream(lane);
            for z in lane_buf.iter_mut() {
                let re = T::standard_normal(&mut rng);
                let im = T::standard_normal(&mut rng);
                *z = Complex::new(re * s, im * s);
            }
            // time direction
            for m in 1..m_len {
                for n in 0..n_len {
                    let prev = lane_buf[(m - 1) * n_len + n];
                    let w = lane_buf[m * n_len + n];
                    lane_buf[m * n_len + n] = prev * at + w * gt;
                }
            }
            // frequency direction
            for m in 0..m_len {
                for n in 1..n_len {
                    let prev = lane_buf[m * n_len + n - 1];
                    let x = lane_buf[m * n_len + n];
                    lane_buf[m * n_len + n] = prev * af + x * gf;
                }
            }
            for (h, z) in grid.iter_mut().zip(&lane_buf) {
                h[(r, c)] = *z;
            }
        }
    }
    Ok(ChannelField {
        dims,
        grid,
        params: *params,
        seed,
    })
}

/// Sample average of `Re{H[m+dm, n+dn] * conj(H[m, n])}` over all valid grid
/// positions and antenna entries.
pub fn empirical_corr<T: Real>(field: &ChannelField<T>, dm: usize, dn: usize) -> Result<T> {
    let d = field.dims;
    if dm >= d.symbols || dn >= d.subchannels {
        return domain(format!(
            "lag ({dm}, {dn}) out of range for a {}x{} grid",
            d.symbols, d.subchannels
        ));
    }
    let mut acc = T::zero();
    for m in 0..d.symbols - dm {
        for n in 0..d.subchannels - dn {
            let a = field.at(m + dm, n + dn).as_slice();
            let b = field.at(m, n).as_slice();
            for (x, y) in a.iter().zip(b) {
                acc = acc + (x * y.conj()).re;
            }
        }
    }
    let count = (d.symbols - dm) * (d.subchannels - dn) * d.n_r * d.n_t;
    Ok(acc / T::count(count))
}

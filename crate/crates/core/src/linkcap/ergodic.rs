//! Ergodic capacity of differential feedback schemes by Monte Carlo.
//!
//! Feedback loop for the Lloyd schemes, per channel field:
//!
//! 1. the first symbol interval and first subchannel have no two-sided
//!    history and are quantized directly with a codebook trained on `H`;
//! 2. every other grid point feeds back the differential
//!    `H - a1 H_bar[m-1, n] - a2 H_bar[m, n-1]`, computed from the
//!    *reconstructed* neighbours so that both link ends stay in sync;
//! 3. the transmitter rebuilds `H_bar = prediction + quantized differential`.
//!
//! The differential codebook is first trained on open-loop prediction errors
//! and then retrained on closed-loop differentials, since the quantization
//! error of the neighbours inflates what is fed back.
//!
//! The reference ("theory") schemes replace the quantizer by the Gaussian
//! test channel at the distortion the minimal rate allows for the same bit
//! budget: `H_bar = (1 - d/s) H + sqrt((1 - d/s) d) W`, `s = sigma_h^2`, which
//! has error variance `d` uncorrelated with `H_bar`.
//!
//! Statistics are taken over the interior points only, and each trial is
//! one field. Trial values are reduced in trial order, so results do not
//! depend on how trials are scheduled across threads.

use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;

use crate::chansim::{gen_field_with, ChannelField, FieldDims};
use crate::cmat::{CMatrix, ChannelMatrix};
use crate::corrstats::CorrelationParams;
use crate::error::{domain, Error, Result};
use crate::predictor::{differential, predictor_coeffs, reconstruct, PredictorCoeffs};
use crate::quantizer::{
    quantize_matrix, train_codebook, train_codebook_from, Codebook, VectorSet, DEFAULT_MAX_ITER, DEFAULT_REL_TOL,
    DEFAULT_TRAINING_SIZE,
};
use crate::ratecalc::{distortion_for_rate, RateScheme};
use crate::rng::{StreamKind, StreamSource};
use crate::scalar::Real;

use super::capacity_instant;

/// Feedback scheme evaluated by [`capacity_ergodic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeedbackScheme {
    Theory2d,
    Theory1d,
    Lloyd2d,
    Lloyd1d,
    PerfectCsi,
}

impl FeedbackScheme {
    pub const ALL: [FeedbackScheme; 5] = [
        FeedbackScheme::Lloyd2d,
        FeedbackScheme::Lloyd1d,
        FeedbackScheme::Theory2d,
        FeedbackScheme::Theory1d,
        FeedbackScheme::PerfectCsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeedbackScheme::Theory2d => "theory_2d",
            FeedbackScheme::Theory1d => "theory_1d",
            FeedbackScheme::Lloyd2d => "lloyd_2d",
            FeedbackScheme::Lloyd1d => "lloyd_1d",
            FeedbackScheme::PerfectCsi => "perfect_csi",
        }
    }

    fn predictor_kind(self) -> Option<PredictorKind> {
        match self {
            FeedbackScheme::Theory2d | FeedbackScheme::Lloyd2d => Some(PredictorKind::TwoDim),
            FeedbackScheme::Theory1d | FeedbackScheme::Lloyd1d => Some(PredictorKind::TimeOnly),
            FeedbackScheme::PerfectCsi => None,
        }
    }
}

impl FromStr for FeedbackScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeedbackScheme::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown feedback scheme {s:?}")))
    }
}

/// Which predictor the differential feedback uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    /// Both neighbours, MMSE taps.
    TwoDim,
    /// Time neighbour only, `a1 = alpha_t`, `a2 = 0`.
    TimeOnly,
}

impl PredictorKind {
    pub fn coeffs<T: Real>(self, params: &CorrelationParams<T>) -> Result<PredictorCoeffs<T>> {
        match self {
            PredictorKind::TwoDim => predictor_coeffs(params.alpha_t(), params.alpha_f(), params.sigma2_h()),
            PredictorKind::TimeOnly => PredictorCoeffs::time_only(params.alpha_t(), params.sigma2_h()),
        }
    }

    fn rate_scheme(self) -> RateScheme {
        match self {
            PredictorKind::TwoDim => RateScheme::Diff2d,
            PredictorKind::TimeOnly => RateScheme::Diff1dTime,
        }
    }
}

/// Codebook training knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LloydSettings<T> {
    /// Training vectors per codebook.
    pub training_size: usize,
    pub max_iter: usize,
    pub rel_tol: T,
    /// Closed-loop retraining passes after the open-loop codebook.
    pub refine_passes: usize,
}

impl<T: Real> Default for LloydSettings<T> {
    fn default() -> Self {
        Self {
            training_size: DEFAULT_TRAINING_SIZE,
            max_iter: DEFAULT_MAX_ITER,
            rel_tol: T::lit(DEFAULT_REL_TOL),
            refine_passes: 2,
        }
    }
}

/// Everything but the scheme and bit budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgodicSetup<T> {
    pub params: CorrelationParams<T>,
    pub n_r: usize,
    pub n_t: usize,
    /// Symbol intervals and subchannels per field.
    pub field: (usize, usize),
    /// Signal power `A^2` at unit noise variance.
    pub snr_a2: T,
    pub trials: usize,
    pub lloyd: LloydSettings<T>,
}

impl<T: Real> ErgodicSetup<T> {
    pub fn dims(&self) -> FieldDims {
        FieldDims::new(self.field.0, self.field.1, self.n_r, self.n_t)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be >= 1");
        }
        if self.field.0 < 2 || self.field.1 < 2 {
            return domain(format!(
                "fields need at least 2x2 grid points to have an interior, got {:?}",
                self.field
            ));
        }
        if self.n_r == 0 || self.n_t == 0 {
            return domain("antenna counts must be >= 1");
        }
        if !(self.snr_a2 > T::zero()) {
            return domain("signal power must be positive");
        }
        Ok(())
    }

    fn field<S: StreamSource>(&self, kind: StreamKind, index: u64, streams: &S) -> Result<ChannelField<T>> {
        gen_field_with(&self.params, self.dims(), index, |lane| streams.stream(kind, index, lane))
    }
}

/// Sample mean and standard error over trials.
#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicEstimate<T> {
    pub mean: T,
    pub std_err: T,
    /// Per-entry distortion the transmitter assumed (zero for perfect CSI).
    pub distortion: T,
    /// Capacity of each trial (mean over the field interior).
    pub per_trial: Vec<T>,
}

/// Codebooks shared by both link ends for one Lloyd scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackCodebooks<T> {
    pub kind: PredictorKind,
    pub coeffs: PredictorCoeffs<T>,
    /// Direct quantization of `H` at the field edges.
    pub bootstrap: Codebook<T>,
    /// Differential CSI at interior points.
    pub differential: Codebook<T>,
    /// Per-entry reconstruction error `|H - H_bar|^2 / (N_r N_t)` at interior
    /// points, measured by running the final codebooks over the training
    /// fields.
    pub loop_distortion: T,
}

impl<T: Real> FeedbackCodebooks<T> {
    /// Trains both codebooks on fields from the `TrainingField` streams.
    /// Pass `bootstrap` to reuse an edge codebook trained earlier with the
    /// same settings.
    pub fn train<S: StreamSource>(
        kind: PredictorKind,
        setup: &ErgodicSetup<T>,
        bits: u32,
        streams: &S,
        bootstrap: Option<Codebook<T>>,
    ) -> Result<Self> {
        setup.validate()?;
        let coeffs = kind.coeffs(&setup.params)?;
        let dims = setup.dims();
        let entries = setup.n_r * setup.n_t;
        let size = setup.lloyd.training_size;
        let lloyd = setup.lloyd;
        let seed_for = |lane: u64| streams.stream(StreamKind::Codebook, u64::from(bits), lane).next_u64();

        let bootstrap = match bootstrap {
            Some(cb) => cb,
            None => {
                let mut set = VectorSet::with_capacity(entries, size);
                let mut i = 0u64;
                'fill: loop {
                    let f = setup.field(StreamKind::TrainingField, (1 << 40) + i, streams)?;
                    for h in f.grid() {
                        set.push_matrix(h)?;
                        if set.len() == size {
                            break 'fill;
                        }
                    }
                    i += 1;
                }
                train_codebook(&set, bits, lloyd.max_iter, lloyd.rel_tol, seed_for(0))?
            }
        };

        let n_fields = size.div_ceil(dims.interior_points()) as u64;
        let fields: Vec<ChannelField<T>> = (0..n_fields)
            .into_par_iter()
            .map(|i| setup.field(StreamKind::TrainingField, i, streams))
            .collect::<Result<_>>()?;

        let mut set = VectorSet::with_capacity(entries, size);
        'open: for f in &fields {
            for m in 1..dims.symbols {
                for n in 1..dims.subchannels {
                    let hd = differential(f.at(m, n), f.at(m - 1, n), f.at(m, n - 1), &coeffs)?;
                    set.push_matrix(&hd)?;
                    if set.len() == size {
                        break 'open;
                    }
                }
            }
        }
        let kind_lane = match kind {
            PredictorKind::TwoDim => 1,
            PredictorKind::TimeOnly => 2,
        };
        let mut diff_cb = train_codebook(&set, bits, lloyd.max_iter, lloyd.rel_tol, seed_for(kind_lane))?;

        let mut books = Self {
            kind,
            coeffs,
            bootstrap,
            differential: diff_cb.clone(),
            loop_distortion: T::nan(),
        };
        for pass in 0..lloyd.refine_passes {
            let runs: Vec<Vec<ChannelMatrix<T>>> = fields
                .par_iter()
                .map(|f| closed_loop(f, &books).map(|r| r.differentials))
                .collect::<Result<_>>()?;
            let mut set = VectorSet::with_capacity(entries, size);
            'closed: for diffs in &runs {
                for hd in diffs {
                    set.push_matrix(hd)?;
                    if set.len() == size {
                        break 'closed;
                    }
                }
            }
            let seed = seed_for(kind_lane + 16 * (pass as u64 + 1));
            diff_cb = train_codebook_from(&set, &books.differential, lloyd.max_iter, lloyd.rel_tol, seed)?;
            books.differential = diff_cb.clone();
        }
        let errors: Vec<T> = fields
            .par_iter()
            .map(|f| {
                let run = closed_loop(f, &books)?;
                let mut acc = T::zero();
                for m in 1..dims.symbols {
                    for n in 1..dims.subchannels {
                        acc = acc + f.at(m, n).try_sub(&run.reconstructed[m * dims.subchannels + n])?.norm_sqr();
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        let total = errors.iter().fold(T::zero(), |a, &e| a + e);
        books.loop_distortion = total / T::count(fields.len() * dims.interior_points() * entries);
        Ok(books)
    }

    /// Per-entry distortion the transmitter assumes: the measured
    /// closed-loop reconstruction error.
    pub fn distortion_per_entry(&self) -> T {
        self.loop_distortion
    }
}

/// Outcome of running the feedback loop over one field.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopRun<T> {
    /// Transmitter-side channel at every grid point, row-major.
    pub reconstructed: Vec<ChannelMatrix<T>>,
    /// Differentials fed back at interior points, row-major over the interior.
    pub differentials: Vec<ChannelMatrix<T>>,
}

/// Runs the differential feedback loop over a field.
pub fn closed_loop<T: Real>(field: &ChannelField<T>, books: &FeedbackCodebooks<T>) -> Result<ClosedLoopRun<T>> {
    let dims = field.dims();
    let (mm, nn) = (dims.symbols, dims.subchannels);
    let mut rec: Vec<ChannelMatrix<T>> = Vec::with_capacity(mm * nn);
    let mut diffs = Vec::with_capacity(dims.interior_points());
    for m in 0..mm {
        for n in 0..nn {
            let h = field.at(m, n);
            let h_bar = if m == 0 || n == 0 {
                quantize_matrix(&books.bootstrap, h)?.1
            } else {
                let prev_t = &rec[(m - 1) * nn + n];
                let prev_f = &rec[m * nn + n - 1];
                let hd = differential(h, prev_t, prev_f, &books.coeffs)?;
                let (_, q) = quantize_matrix(&books.differential, &hd)?;
                diffs.push(hd);
                reconstruct(prev_t, prev_f, &q, &books.coeffs)?
            };
            rec.push(h_bar);
        }
    }
    Ok(ClosedLoopRun {
        reconstructed: rec,
        differentials: diffs,
    })
}

/// Ergodic capacity of `scheme` at `bits` feedback bits per channel matrix,
/// training Lloyd codebooks as needed.
pub fn capacity_ergodic<T: Real, S: StreamSource>(
    scheme: FeedbackScheme,
    setup: &ErgodicSetup<T>,
    bits: u32,
    streams: &S,
) -> Result<ErgodicEstimate<T>> {
    capacity_ergodic_with(scheme, setup, bits, streams, None)
}

/// [`capacity_ergodic`] with pre-trained codebooks for the Lloyd schemes.
pub fn capacity_ergodic_with<T: Real, S: StreamSource>(
    scheme: FeedbackScheme,
    setup: &ErgodicSetup<T>,
    bits: u32,
    streams: &S,
    books: Option<&FeedbackCodebooks<T>>,
) -> Result<ErgodicEstimate<T>> {
    setup.validate()?;
    let a2 = setup.snr_a2;
    let dims = setup.dims();
    let sigma2 = setup.params.sigma2_h();

    let trained;
    let (distortion, books) = match scheme {
        FeedbackScheme::PerfectCsi => (T::zero(), None),
        FeedbackScheme::Theory2d | FeedbackScheme::Theory1d => {
            if bits == 0 {
                return domain("theory schemes need at least one feedback bit");
            }
            let kind = scheme.predictor_kind().expect("theory schemes have a predictor");
            let d = distortion_for_rate(
                kind.rate_scheme(),
                T::count(bits as usize),
                setup.n_r,
                setup.n_t,
                sigma2,
                setup.params.alpha_t(),
                setup.params.alpha_f(),
            )?;
            (d, None)
        }
        FeedbackScheme::Lloyd2d | FeedbackScheme::Lloyd1d => {
            let kind = scheme.predictor_kind().expect("lloyd schemes have a predictor");
            let b = match books {
                Some(b) if b.kind == kind => b,
                Some(_) => return domain(format!("codebooks were trained for another predictor than {}", scheme.name())),
                None => {
                    trained = FeedbackCodebooks::train(kind, setup, bits, streams, None)?;
                    &trained
                }
            };
            (b.distortion_per_entry(), Some(b))
        }
    };

    let per_trial: Vec<T> = (0..setup.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<T> {
            let field = setup.field(StreamKind::Field, t, streams)?;
            let mut acc = T::zero();
            match scheme {
                FeedbackScheme::PerfectCsi => {
                    for_interior(dims, |m, n| {
                        acc = acc + capacity_instant(field.at(m, n), T::zero(), a2)?;
                        Ok(())
                    })?;
                }
                FeedbackScheme::Theory2d | FeedbackScheme::Theory1d => {
                    let mut rng = streams.stream(StreamKind::TheoryNoise, t, 0);
                    let beta = T::one() - distortion / sigma2;
                    let spread = (beta * distortion).sqrt();
                    for_interior(dims, |m, n| {
                        let w = CMatrix::complex_gaussian(dims.n_r, dims.n_t, T::one(), &mut rng);
                        let h_bar = field.at(m, n).lin_comb(beta, &w, spread)?;
                        acc = acc + capacity_instant(&h_bar, distortion, a2)?;
                        Ok(())
                    })?;
                }
                FeedbackScheme::Lloyd2d | FeedbackScheme::Lloyd1d => {
                    let run = closed_loop(&field, books.expect("codebooks resolved above"))?;
                    for_interior(dims, |m, n| {
                        let h_bar = &run.reconstructed[m * dims.subchannels + n];
                        acc = acc + capacity_instant(h_bar, distortion, a2)?;
                        Ok(())
                    })?;
                }
            }
            Ok(acc / T::count(dims.interior_points()))
        })
        .collect::<Result<_>>()?;

    let (mean, std_err) = mean_and_stderr(&per_trial);
    Ok(ErgodicEstimate {
        mean,
        std_err,
        distortion,
        per_trial,
    })
}

fn for_interior(dims: FieldDims, mut f: impl FnMut(usize, usize) -> Result<()>) -> Result<()> {
    for m in 1..dims.symbols {
        for n in 1..dims.subchannels {
            f(m, n)?;
        }
    }
    Ok(())
}

/// Mean and standard error of the mean, summed in slice order.
pub fn mean_and_stderr<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::count(xs.len());
    let mean = xs.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss = xs.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
    let var = ss / T::count(xs.len() - 1);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ChaChaStreams;

    fn small_setup(trials: usize) -> ErgodicSetup<f64> {
        ErgodicSetup {
            params: CorrelationParams::new(0.9, 0.9, 1.0).unwrap(),
            n_r: 2,
            n_t: 2,
            field: (4, 4),
            snr_a2: super::super::snr_db_to_a2(5.0),
            trials,
            lloyd: LloydSettings {
                training_size: 4000,
                max_iter: 30,
                rel_tol: 1e-4,
                refine_passes: 1,
            },
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in FeedbackScheme::ALL {
            assert_eq!(s.name().parse::<FeedbackScheme>().unwrap(), s);
        }
        assert!("lloyd_3d".parse::<FeedbackScheme>().is_err());
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, s) = mean_and_stderr(&[2.0, 2.0, 2.0]);
        assert_eq!((m, s), (2.0, 0.0));
        let (m, s) = mean_and_stderr(&[1.0f64, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn setup_validation() {
        let streams = ChaChaStreams::new(1);
        let mut s = small_setup(0);
        assert!(capacity_ergodic(FeedbackScheme::PerfectCsi, &s, 2, &streams).is_err());
        s.trials = 1;
        s.field = (1, 4);
        assert!(capacity_ergodic(FeedbackScheme::PerfectCsi, &s, 2, &streams).is_err());
        s.field = (4, 4);
        assert!(capacity_ergodic(FeedbackScheme::Theory2d, &s, 0, &streams).is_err());
    }

    #[test]
    fn closed_loop_with_lossless_codebooks_is_exact() {
        // A single-codeword-free path: perfect CSI equals the lloyd loop
        // when every differential lands exactly on a codeword.
        let s = small_setup(1);
        let streams = ChaChaStreams::new(3);
        let books = FeedbackCodebooks::train(PredictorKind::TwoDim, &s, 4, &streams, None).unwrap();
        let field = s.field(StreamKind::Field, 0, &streams).unwrap();
        let run = closed_loop(&field, &books).unwrap();
        assert_eq!(run.reconstructed.len(), 16);
        assert_eq!(run.differentials.len(), 9);
        // Reconstruction error equals the quantization error of the
        // differential at interior points.
        let nn = 4;
        let mut k = 0;
        for m in 1..4 {
            for n in 1..4 {
                let hd = &run.differentials[k];
                let (_, q) = quantize_matrix(&books.differential, hd).unwrap();
                let err = field.at(m, n) - &run.reconstructed[m * nn + n];
                assert!((&err - &(hd - &q)).frobenius() < 1e-12);
                k += 1;
            }
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let s = small_setup(8);
        let streams = ChaChaStreams::new(11);
        for scheme in FeedbackScheme::ALL {
            let a = capacity_ergodic(scheme, &s, 3, &streams).unwrap();
            let b = capacity_ergodic(scheme, &s, 3, &streams).unwrap();
            assert_eq!(a, b, "{}", scheme.name());
            assert!(a.mean > 0.0 && a.mean.is_finite());
        }
    }

    #[test]
    fn mismatched_codebooks_rejected() {
        let s = small_setup(2);
        let streams = ChaChaStreams::new(5);
        let books = FeedbackCodebooks::train(PredictorKind::TimeOnly, &s, 2, &streams, None).unwrap();
        assert!(capacity_ergodic_with(FeedbackScheme::Lloyd2d, &s, 2, &streams, Some(&books)).is_err());
        assert!(capacity_ergodic_with(FeedbackScheme::Lloyd1d, &s, 2, &streams, Some(&books)).is_ok());
    }
}

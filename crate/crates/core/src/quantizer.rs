//! Generalized Lloyd (LBG) vector quantizer for channel matrices.
//!
//! A channel matrix is quantized as one complex vector of length `N_r N_t`
//! (row-major); internally vectors are stored as interleaved `re, im` reals.

use std::io::{BufRead, Write};

use num_complex::Complex;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use crate::cmat::{CMatrix, ChannelMatrix};
use crate::error::{domain, Error, Result};
use crate::rng::lane_rng;
use crate::scalar::Real;

mod partition;

use partition::{sq_dist, Partitioner};

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_TRAINING_SIZE: usize = 100_000;

/// Largest supported index width.
pub const MAX_BITS: u32 = 20;

const PAR_CHUNK: usize = 2048;

/// A set of equal-length complex vectors in flat storage.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorSet<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> VectorSet<T> {
    /// Empty set of vectors with `dim` complex entries each.
    pub fn new(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn with_capacity(dim: usize, count: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(2 * dim * count),
        }
    }

    pub fn from_vectors(vectors: &[Vec<Complex<T>>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut set = Self::with_capacity(dim, vectors.len());
        for v in vectors {
            set.push(v)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, v: &[Complex<T>]) -> Result<()> {
        if v.len() != self.dim {
            return Err(shape_err(self.dim, v.len()));
        }
        for z in v {
            self.data.push(z.re);
            self.data.push(z.im);
        }
        Ok(())
    }

    /// Appends a matrix vectorized row-major.
    pub fn push_matrix(&mut self, h: &ChannelMatrix<T>) -> Result<()> {
        self.push(h.as_slice())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / (2 * self.dim)
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn row(&self, i: usize) -> &[T] {
        let s = 2 * self.dim;
        &self.data[i * s..(i + 1) * s]
    }

    pub fn get(&self, i: usize) -> Vec<Complex<T>> {
        unflatten(self.row(i))
    }
}

fn shape_err(expected: usize, got: usize) -> Error {
    Error::Shape {
        expected: format!("vector of length {expected}"),
        got: format!("length {got}"),
    }
}

fn flatten<T: Real>(v: &[Complex<T>]) -> Vec<T> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unflatten<T: Real>(row: &[T]) -> Vec<Complex<T>> {
    row.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}

/// Row-major vectorization of a matrix.
pub fn matrix_to_vector<T: Real>(h: &ChannelMatrix<T>) -> Vec<Complex<T>> {
    h.to_vector()
}

/// Inverse of [`matrix_to_vector`].
pub fn vector_to_matrix<T: Real>(v: &[Complex<T>], n_r: usize, n_t: usize) -> Result<ChannelMatrix<T>> {
    CMatrix::from_row_major(n_r, n_t, v.to_vec())
}

/// Bookkeeping of how a codebook was trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainingMeta {
    pub training_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

/// `2^bits` codewords trained by the generalized Lloyd algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    bits: u32,
    dim: usize,
    flat: Vec<T>,
    training_distortion: T,
    trace: Vec<T>,
    meta: TrainingMeta,
}

impl<T: Real> Codebook<T> {
    /// Builds a codebook from explicit codewords; the count must be a power
    /// of two.
    pub fn from_codewords(codewords: &[Vec<Complex<T>>]) -> Result<Self> {
        let count = codewords.len();
        if count == 0 || !count.is_power_of_two() {
            return domain(format!("codeword count must be a power of two, got {count}"));
        }
        let dim = codewords[0].len();
        let mut flat = Vec::with_capacity(count * 2 * dim);
        for c in codewords {
            if c.len() != dim {
                return Err(shape_err(dim, c.len()));
            }
            flat.extend(flatten(c));
        }
        Ok(Self {
            bits: count.trailing_zeros(),
            dim,
            flat,
            training_distortion: T::zero(),
            trace: Vec::new(),
            meta: TrainingMeta {
                training_size: 0,
                iterations: 0,
                seed: 0,
            },
        })
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        1usize << self.bits
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Complex entries per codeword.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codeword(&self, k: usize) -> Vec<Complex<T>> {
        unflatten(self.raw(k))
    }

    pub fn codewords(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.len()).map(|k| self.codeword(k)).collect()
    }

    /// Mean squared error per vector of the final training partition.
    pub fn training_distortion(&self) -> T {
        self.training_distortion
    }

    /// Distortion after each partition step.
    pub fn trace(&self) -> &[T] {
        &self.trace
    }

    pub fn meta(&self) -> TrainingMeta {
        self.meta
    }

    #[inline]
    fn raw(&self, k: usize) -> &[T] {
        let s = 2 * self.dim;
        &self.flat[k * s..(k + 1) * s]
    }

    /// Index and squared distance of the nearest codeword; ties go to the
    /// lowest index.
    #[inline]
    fn nearest(&self, x: &[T]) -> (usize, T) {
        nearest_in(&self.flat, 2 * self.dim, x)
    }

    /// Writes the codebook as text: a header with bits, vector length and
    /// seed, then one codeword per line as interleaved re/im with 17
    /// significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "dsel-codebook 1")?;
        writeln!(out, "bits {}", self.bits)?;
        writeln!(out, "length {}", self.dim)?;
        writeln!(out, "seed {}", self.meta.seed)?;
        writeln!(out, "training_size {}", self.meta.training_size)?;
        writeln!(out, "iterations {}", self.meta.iterations)?;
        writeln!(out, "training_distortion {:.16e}", self.training_distortion.as_f64())?;
        for k in 0..self.len() {
            let line: Vec<String> = self.raw(k).iter().map(|v| format!("{:.16e}", v.as_f64())).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Reads the format produced by [`Codebook::write_to`].
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::Format {
                    line: i + 1,
                    msg: e.to_string(),
                }),
                None => Err(Error::Format {
                    line: 0,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let (ln, magic) = next("header")?;
        if magic.trim() != "dsel-codebook 1" {
            return Err(Error::Format {
                line: ln,
                msg: format!("bad magic {magic:?}"),
            });
        }
        fn field<V: std::str::FromStr>(ln: usize, line: &str, key: &str) -> Result<V> {
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some(k), Some(v), None) if k == key => v.parse().map_err(|_| Error::Format {
                    line: ln,
                    msg: format!("cannot parse value of {key}: {v:?}"),
                }),
                _ => Err(Error::Format {
                    line: ln,
                    msg: format!("expected `{key} <value>`, got {line:?}"),
                }),
            }
        }
        let (ln, l) = next("bits")?;
        let bits: u32 = field(ln, &l, "bits")?;
        if bits > MAX_BITS {
            return Err(Error::Format {
                line: ln,
                msg: format!("bits {bits} exceeds {MAX_BITS}"),
            });
        }
        let (ln, l) = next("length")?;
        let dim: usize = field(ln, &l, "length")?;
        let (ln, l) = next("seed")?;
        let seed: u64 = field(ln, &l, "seed")?;
        let (ln, l) = next("training_size")?;
        let training_size: usize = field(ln, &l, "training_size")?;
        let (ln, l) = next("iterations")?;
        let iterations: usize = field(ln, &l, "iterations")?;
        let (ln, l) = next("training_distortion")?;
        let td: f64 = field(ln, &l, "training_distortion")?;

        let count = 1usize << bits;
        let mut flat = Vec::with_capacity(count * 2 * dim);
        for _ in 0..count {
            let (ln, l) = next("codeword")?;
            let before = flat.len();
            for tok in l.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Format {
                    line: ln,
                    msg: format!("bad number {tok:?}"),
                })?;
                flat.push(T::lit(v));
            }
            if flat.len() - before != 2 * dim {
                return Err(Error::Format {
                    line: ln,
                    msg: format!("expected {} reals, got {}", 2 * dim, flat.len() - before),
                });
            }
        }
        Ok(Self {
            bits,
            dim,
            flat,
            training_distortion: T::lit(td),
            trace: Vec::new(),
            meta: TrainingMeta {
                training_size,
                iterations,
                seed,
            },
        })
    }
}

#[inline]
fn nearest_in<T: Real>(flat: &[T], stride: usize, x: &[T]) -> (usize, T) {
    let mut best = T::infinity();
    let mut best_k = 0;
    for (k, c) in flat.chunks_exact(stride).enumerate() {
        let acc = sq_dist(c, x);
        if acc < best {
            best = acc;
            best_k = k;
        }
    }
    (best_k, best)
}

/// Trains a `2^bits` codebook with the generalized Lloyd algorithm.
///
/// Initial codewords are `2^bits` distinct training vectors picked by
/// `seed`. Iteration stops when the relative distortion improvement drops
/// to `rel_tol` or below, or after `max_iter` partition steps.
pub fn train_codebook<T: Real>(
    samples: &VectorSet<T>,
    bits: u32,
    max_iter: usize,
    rel_tol: T,
    seed: u64,
) -> Result<Codebook<T>> {
    check_training(samples, bits, max_iter)?;
    let count = 1usize << bits;
    let mut rng = lane_rng(seed, 0);
    let picks = sample_indices(&mut rng, samples.len(), count);
    let mut flat = Vec::with_capacity(count * 2 * samples.dim);
    for i in picks.iter() {
        flat.extend_from_slice(samples.row(i));
    }
    lloyd(samples, bits, flat, max_iter, rel_tol, seed)
}

/// Continues Lloyd iterations from the codewords of `initial`.
pub fn train_codebook_from<T: Real>(
    samples: &VectorSet<T>,
    initial: &Codebook<T>,
    max_iter: usize,
    rel_tol: T,
    seed: u64,
) -> Result<Codebook<T>> {
    check_training(samples, initial.bits, max_iter)?;
    if initial.dim != samples.dim {
        return Err(shape_err(initial.dim, samples.dim));
    }
    lloyd(samples, initial.bits, initial.flat.clone(), max_iter, rel_tol, seed)
}

fn check_training<T: Real>(samples: &VectorSet<T>, bits: u32, max_iter: usize) -> Result<()> {
    if bits > MAX_BITS {
        return domain(format!("bits must be <= {MAX_BITS}, got {bits}"));
    }
    if samples.dim == 0 {
        return domain("training vectors must have at least one entry");
    }
    if samples.len() < (1usize << bits) {
        return domain(format!(
            "{} training vectors cannot seed {} codewords",
            samples.len(),
            1usize << bits
        ));
    }
    if max_iter == 0 {
        return domain("max_iter must be >= 1");
    }
    Ok(())
}

fn lloyd<T: Real>(
    samples: &VectorSet<T>,
    bits: u32,
    mut flat: Vec<T>,
    max_iter: usize,
    rel_tol: T,
    seed: u64,
) -> Result<Codebook<T>> {
    let count = 1usize << bits;
    let stride = 2 * samples.dim;
    let n = samples.len();
    // Lane 1 of the seed key is reserved for repair directions.
    let mut repair_rng = lane_rng(seed, 1);
    let scale_floor = T::lit(1e-6) * (samples.data.iter().map(|v| *v * *v).sum::<T>() / T::count(n)).sqrt();

    separate_duplicates(&mut flat, stride, &mut repair_rng, scale_floor);

    let mut trace = Vec::new();
    let mut part = Partitioner::new(n, &flat, stride);
    let mut moves = vec![T::zero(); count];
    let mut prev_flat = Vec::with_capacity(flat.len());
    let mut sums = vec![T::zero(); count * stride];
    let mut counts = vec![0usize; count];
    let mut iterations = 0;
    loop {
        let dist = part.run(&samples.data, &flat, &moves);
        iterations += 1;
        let prev = trace.last().copied();
        trace.push(dist);
        let converged = match prev {
            _ if dist == T::zero() => true,
            Some(p) => p - dist <= rel_tol * p,
            None => false,
        };
        if converged || iterations >= max_iter {
            break;
        }

        // Centroid update.
        prev_flat.clone_from(&flat);
        sums.iter_mut().for_each(|s| *s = T::zero());
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, &k) in part.assigned().iter().enumerate() {
            counts[k] += 1;
            let dst = &mut sums[k * stride..(k + 1) * stride];
            for (d, v) in dst.iter_mut().zip(samples.row(i)) {
                *d = *d + *v;
            }
        }
        for k in 0..count {
            if counts[k] > 0 {
                let inv = T::one() / T::count(counts[k]);
                for j in 0..stride {
                    flat[k * stride + j] = sums[k * stride + j] * inv;
                }
            }
        }
        repair_empty_cells(&mut flat, stride, &mut counts, &mut repair_rng, scale_floor);
        for ((m, a), b) in moves.iter_mut().zip(flat.chunks_exact(stride)).zip(prev_flat.chunks_exact(stride)) {
            *m = sq_dist(a, b).sqrt();
        }
    }

    let training_distortion = *trace.last().expect("at least one partition step");
    Ok(Codebook {
        bits,
        dim: samples.dim,
        flat,
        training_distortion,
        trace,
        meta: TrainingMeta {
            training_size: n,
            iterations,
            seed,
        },
    })
}

/// Nearest-codeword assignment; returns the mean squared error per vector.
/// The per-sample search runs in parallel, the sum in index order.
fn partition<T: Real>(samples: &VectorSet<T>, flat: &[T], assignment: &mut [usize]) -> T {
    let stride = 2 * samples.dim;
    let dists: Vec<T> = samples
        .data
        .par_chunks(stride * PAR_CHUNK)
        .zip(assignment.par_chunks_mut(PAR_CHUNK))
        .flat_map_iter(|(block, out)| {
            block
                .chunks_exact(stride)
                .zip(out.iter_mut())
                .map(|(x, slot)| {
                    let (k, d) = nearest_in(flat, stride, x);
                    *slot = k;
                    d
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let total: T = dists.iter().copied().fold(T::zero(), |a, b| a + b);
    total / T::count(samples.len())
}

fn random_offset<T: Real, R: Rng>(stride: usize, norm: T, rng: &mut R) -> Vec<T> {
    let mut dir: Vec<T> = (0..stride).map(|_| T::standard_normal(rng)).collect();
    let len = dir.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let f = if len > T::zero() { norm / len } else { T::zero() };
    dir.iter_mut().for_each(|v| *v = *v * f);
    dir
}

fn perturbation_size<T: Real>(codeword: &[T], floor: T) -> T {
    let norm = codeword.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let s = T::lit(1e-6) * norm;
    if s > T::zero() {
        s
    } else if floor > T::zero() {
        floor
    } else {
        T::lit(1e-6)
    }
}

/// Makes initial codewords pairwise distinct.
fn separate_duplicates<T: Real, R: Rng>(flat: &mut [T], stride: usize, rng: &mut R, floor: T) {
    let count = flat.len() / stride;
    for k in 1..count {
        loop {
            let dup = (0..k).any(|j| flat[j * stride..(j + 1) * stride] == flat[k * stride..(k + 1) * stride]);
            if !dup {
                break;
            }
            let size = perturbation_size(&flat[k * stride..(k + 1) * stride], floor);
            let off = random_offset(stride, size, rng);
            for (v, o) in flat[k * stride..(k + 1) * stride].iter_mut().zip(off) {
                *v = *v + o;
            }
        }
    }
}

/// Replaces each empty cell's codeword by a perturbed copy of the codeword
/// owning the most samples, then splits that owner's count between the two.
fn repair_empty_cells<T: Real, R: Rng>(
    flat: &mut [T],
    stride: usize,
    counts: &mut [usize],
    rng: &mut R,
    floor: T,
) {
    for k in 0..counts.len() {
        if counts[k] > 0 {
            continue;
        }
        let owner = (0..counts.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .expect("non-empty codebook");
        let src: Vec<T> = flat[owner * stride..(owner + 1) * stride].to_vec();
        let off = random_offset(stride, perturbation_size(&src, floor), rng);
        for ((dst, s), o) in flat[k * stride..(k + 1) * stride].iter_mut().zip(&src).zip(off) {
            *dst = *s + o;
        }
        let moved = counts[owner] / 2;
        counts[owner] -= moved;
        counts[k] = moved.max(1);
    }
}

/// Nearest codeword to `v` by squared Euclidean distance, ties broken by
/// lowest index.
pub fn quantize<T: Real>(cb: &Codebook<T>, v: &[Complex<T>]) -> Result<(usize, Vec<Complex<T>>)> {
    if v.len() != cb.dim {
        return Err(shape_err(cb.dim, v.len()));
    }
    let (k, _) = cb.nearest(&flatten(v));
    Ok((k, cb.codeword(k)))
}

/// [`quantize`] applied to a matrix vectorized row-major.
pub fn quantize_matrix<T: Real>(cb: &Codebook<T>, h: &ChannelMatrix<T>) -> Result<(usize, ChannelMatrix<T>)> {
    let (k, cw) = quantize(cb, h.as_slice())?;
    Ok((k, CMatrix::from_row_major(h.rows(), h.cols(), cw)?))
}

/// Mean squared Euclidean error per vector when quantizing `samples`.
pub fn distortion<T: Real>(cb: &Codebook<T>, samples: &VectorSet<T>) -> Result<T> {
    if samples.is_empty() {
        return domain("distortion needs at least one sample");
    }
    if samples.dim != cb.dim {
        return Err(shape_err(cb.dim, samples.dim));
    }
    let mut scratch = vec![0usize; samples.len()];
    Ok(partition(samples, &cb.flat, &mut scratch))
}

/// Realized quantization error `h_true - h_quantized`.
pub fn additive_error<T: Real>(h_true: &ChannelMatrix<T>, h_quantized: &ChannelMatrix<T>) -> Result<ChannelMatrix<T>> {
    h_true.try_sub(h_quantized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::lane_rng;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn gaussian_set(count: usize, dim: usize, var: f64, seed: u64) -> VectorSet<f64> {
        let mut rng = lane_rng(seed, 9);
        let mut set = VectorSet::new(dim);
        for _ in 0..count {
            let h = CMatrix::<f64>::complex_gaussian(1, dim, var, &mut rng);
            set.push(h.as_slice()).unwrap();
        }
        set
    }

    #[test]
    fn degenerate_data_is_repaired() {
        let v = vec![c(0.3, -1.0), c(2.0, 0.5)];
        let set = VectorSet::from_vectors(&vec![v.clone(); 50]).unwrap();
        let cb = train_codebook(&set, 1, 50, 1e-6, 3).unwrap();
        assert_eq!(cb.len(), 2);
        assert!(cb.codewords().contains(&v));
        assert_ne!(cb.codeword(0), cb.codeword(1));
        assert_eq!(cb.training_distortion(), 0.0);

        let zeros = VectorSet::from_vectors(&vec![vec![c(0.0, 0.0)]; 8]).unwrap();
        let cb = train_codebook(&zeros, 2, 10, 1e-6, 1).unwrap();
        let words = cb.codewords();
        for i in 0..4 {
            for j in 0..i {
                assert_ne!(words[i], words[j]);
            }
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let set = gaussian_set(3, 2, 1.0, 1);
        assert!(matches!(train_codebook(&set, 2, 10, 1e-6, 0), Err(Error::Domain(_))));
        assert!(train_codebook(&set, 1, 0, 1e-6, 0).is_err());
    }

    #[test]
    fn training_is_deterministic_and_trace_monotone() {
        let set = gaussian_set(5000, 2, 1.0, 4);
        let a = train_codebook(&set, 4, 100, 1e-6, 9).unwrap();
        let b = train_codebook(&set, 4, 100, 1e-6, 9).unwrap();
        assert_eq!(a, b);
        for w in a.trace().windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "trace {:?}", a.trace());
        }
        assert_eq!(a.training_distortion(), *a.trace().last().unwrap());
        assert!((distortion(&a, &set).unwrap() - a.training_distortion()).abs() < 1e-12);
        assert_eq!(a.meta().training_size, 5000);
        assert_eq!(a.meta().iterations, a.trace().len());
    }

    #[test]
    fn quantize_exact_hit_and_tie_break() {
        let words = vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)], vec![c(0.0, 3.0)], vec![c(0.0, -3.0)]];
        let cb = Codebook::from_codewords(&words).unwrap();
        for (k, w) in words.iter().enumerate() {
            let (i, q) = quantize(&cb, w).unwrap();
            assert_eq!(i, k);
            assert_eq!(&q, w);
        }
        // Equidistant from codewords 0 and 1.
        let (i, _) = quantize(&cb, &[c(0.0, 0.5)]).unwrap();
        assert_eq!(i, 0);
        assert!(quantize(&cb, &[c(0.0, 0.0), c(1.0, 1.0)]).is_err());
        assert!(Codebook::from_codewords(&words[..3]).is_err());
    }

    #[test]
    fn quantize_agrees_with_brute_force() {
        let set = gaussian_set(4000, 4, 1.0, 2);
        let cb = train_codebook(&set, 6, 30, 1e-4, 5).unwrap();
        let probes = gaussian_set(1000, 4, 1.0, 77);
        let words = cb.codewords();
        for i in 0..probes.len() {
            let v = probes.get(i);
            let mut best = (0, f64::INFINITY);
            for (k, w) in words.iter().enumerate() {
                let d: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum();
                if d < best.1 {
                    best = (k, d);
                }
            }
            assert_eq!(quantize(&cb, &v).unwrap().0, best.0);
        }
    }

    #[test]
    fn distortion_examples() {
        let words = vec![vec![c(1.0, 0.0)], vec![c(-1.0, 2.0)]];
        let cb = Codebook::from_codewords(&words).unwrap();
        let set = VectorSet::from_vectors(&words).unwrap();
        assert_eq!(distortion(&cb, &set).unwrap(), 0.0);
        assert!(distortion(&cb, &VectorSet::new(1)).is_err());
    }

    #[test]
    fn more_bits_never_hurt() {
        let set = gaussian_set(20_000, 2, 1.0, 8);
        let mut prev = f64::INFINITY;
        for bits in 1..=6 {
            let cb = train_codebook(&set, bits, 100, 1e-6, 3).unwrap();
            let d = distortion(&cb, &set).unwrap();
            assert!(d <= prev, "bits {bits}: {d} > {prev}");
            prev = d;
        }
    }

    #[test]
    fn additive_error_examples() {
        let mut rng = lane_rng(1, 0);
        let h = CMatrix::<f64>::complex_gaussian(2, 2, 1.0, &mut rng);
        assert_eq!(additive_error(&h, &h).unwrap().norm_sqr(), 0.0);
        assert_eq!(additive_error(&h, &CMatrix::zeros(2, 2)).unwrap(), h);
        assert!(additive_error(&h, &CMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn codebook_file_round_trip() {
        let set = gaussian_set(2000, 3, 0.7, 6);
        let cb = train_codebook(&set, 3, 20, 1e-6, 42).unwrap();
        let mut buf = Vec::new();
        cb.write_to(&mut buf).unwrap();
        let back = Codebook::<f64>::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.codewords(), cb.codewords());
        assert_eq!(back.bits(), 3);
        assert_eq!(back.dim(), 3);
        assert_eq!(back.meta(), cb.meta());
        assert_eq!(back.training_distortion(), cb.training_distortion());

        let text = String::from_utf8(buf).unwrap();
        let broken = text.replacen("length 3", "length x", 1);
        match Codebook::<f64>::read_from(broken.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
        let truncated: String = text.lines().take(9).collect::<Vec<_>>().join("\n");
        assert!(Codebook::<f64>::read_from(truncated.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn matrix_vector_round_trip(seed in any::<u64>(), n_r in 1usize..4, n_t in 1usize..4) {
            let mut rng = lane_rng(seed, 0);
            let h = CMatrix::<f64>::complex_gaussian(n_r, n_t, 1.0, &mut rng);
            let v = matrix_to_vector(&h);
            prop_assert_eq!(v.len(), n_r * n_t);
            prop_assert_eq!(v[0], h[(0, 0)]);
            prop_assert_eq!(vector_to_matrix(&v, n_r, n_t).unwrap(), h);
        }

        #[test]
        fn quantize_is_idempotent(seed in 0u64..1000) {
            let set = gaussian_set(256, 2, 1.0, seed);
            let cb = train_codebook(&set, 4, 10, 1e-6, seed).unwrap();
            for k in 0..cb.len() {
                let w = cb.codeword(k);
                let (i, q) = quantize(&cb, &w).unwrap();
                prop_assert_eq!(&q, &w);
                prop_assert_eq!(i, k);
            }
        }
    }
}

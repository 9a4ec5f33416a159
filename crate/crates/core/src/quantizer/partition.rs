//! Exact nearest-codeword partition reused across Lloyd iterations.
//!
//! Codewords are split into groups once, up front. Every sample keeps its
//! assigned codeword and, per group, a lower bound on the distance to the
//! group's other codewords. When the codewords move, a group's bound drops
//! by the largest move inside the group, and only groups whose bound falls
//! below the sample's current distance are searched again. The result is
//! the same assignment a full search gives, ties included.

use rayon::prelude::*;

use crate::scalar::Real;

const PAR_CHUNK: usize = 1024;
const MAX_GROUPS: usize = 64;
const GROUP_ITERS: usize = 5;

#[inline]
pub(super) fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = *x - *y;
        acc + d * d
    })
}

pub(super) struct Partitioner<T> {
    stride: usize,
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    assigned: Vec<usize>,
    d2: Vec<T>,
    lower: Vec<T>,
    ready: bool,
}

impl<T: Real> Partitioner<T> {
    pub(super) fn new(samples: usize, flat: &[T], stride: usize) -> Self {
        let groups = group_codewords(flat, stride);
        let g = groups.len();
        let mut group_of = vec![0; flat.len() / stride];
        for (i, members) in groups.iter().enumerate() {
            for &k in members {
                group_of[k] = i;
            }
        }
        Self {
            stride,
            groups,
            group_of,
            assigned: vec![0; samples],
            d2: vec![T::zero(); samples],
            lower: vec![T::zero(); samples * g],
            ready: false,
        }
    }

    pub(super) fn assigned(&self) -> &[usize] {
        &self.assigned
    }

    /// Assigns every sample to its nearest codeword and returns the mean
    /// squared distance. `moves` holds how far each codeword travelled since
    /// the previous call; the first call ignores it.
    pub(super) fn run(&mut self, data: &[T], flat: &[T], moves: &[T]) -> T {
        let stride = self.stride;
        let ng = self.groups.len();
        let groups = &self.groups;
        let group_of = &self.group_of;
        let fresh = !self.ready;
        let group_move: Vec<T> = groups
            .iter()
            .map(|m| m.iter().fold(T::zero(), |acc, &k| acc.max(moves.get(k).copied().unwrap_or(T::zero()))))
            .collect();
        let margin = T::epsilon() * T::lit(64.0);

        data.par_chunks(stride * PAR_CHUNK)
            .zip(self.assigned.par_chunks_mut(PAR_CHUNK))
            .zip(self.d2.par_chunks_mut(PAR_CHUNK))
            .zip(self.lower.par_chunks_mut(PAR_CHUNK * ng))
            .for_each(|(((block, assigned), d2s), lowers)| {
                let mut scanned: Vec<Option<(usize, T, T)>> = vec![None; ng];
                for (((x, a), d2), lower) in block
                    .chunks_exact(stride)
                    .zip(assigned.iter_mut())
                    .zip(d2s.iter_mut())
                    .zip(lowers.chunks_exact_mut(ng))
                {
                    if fresh {
                        let mut best = (0usize, T::infinity());
                        for (g, members) in groups.iter().enumerate() {
                            let s = scan(flat, stride, members, x);
                            if s.1 < best.1 || (s.1 == best.1 && s.0 < best.0) {
                                best = (s.0, s.1);
                            }
                            scanned[g] = Some(s);
                        }
                        *a = best.0;
                        *d2 = best.1;
                        settle(&mut scanned, lower, best.0);
                        continue;
                    }

                    for (l, m) in lower.iter_mut().zip(&group_move) {
                        *l = *l - *m;
                    }
                    let old = *a;
                    let old_d2 = sq_dist(&flat[old * stride..(old + 1) * stride], x);
                    let ub = old_d2.sqrt();
                    let glb = lower.iter().copied().fold(T::infinity(), T::min);
                    if ub + margin * (ub + glb.abs()) < glb {
                        *d2 = old_d2;
                        continue;
                    }

                    let mut best = (old, old_d2);
                    for (g, members) in groups.iter().enumerate() {
                        let bound = best.1.sqrt();
                        if lower[g] > bound + margin * (bound + lower[g].abs()) {
                            continue;
                        }
                        let s = scan(flat, stride, members, x);
                        if s.1 < best.1 || (s.1 == best.1 && s.0 < best.0) {
                            best = (s.0, s.1);
                        }
                        scanned[g] = Some(s);
                    }
                    if best.0 != old {
                        let g = group_of[old];
                        if scanned[g].is_none() {
                            lower[g] = lower[g].min(ub);
                        }
                    }
                    *a = best.0;
                    *d2 = best.1;
                    settle(&mut scanned, lower, best.0);
                }
            });
        self.ready = true;
        let total = self.d2.iter().fold(T::zero(), |acc, &v| acc + v);
        total / T::count(self.d2.len())
    }
}

/// Nearest member (lowest index on ties) with its squared distance, and
/// the second-smallest squared distance in the group.
fn scan<T: Real>(flat: &[T], stride: usize, members: &[usize], x: &[T]) -> (usize, T, T) {
    let mut best = T::infinity();
    let mut second = T::infinity();
    let mut best_k = members[0];
    for &k in members {
        let acc = sq_dist(&flat[k * stride..(k + 1) * stride], x);
        if acc < second {
            if acc < best {
                second = best;
                best = acc;
                best_k = k;
            } else {
                second = acc;
            }
        }
    }
    (best_k, best, second)
}

/// Turns the groups searched for one sample into fresh bounds that exclude
/// the final assignment.
fn settle<T: Real>(scanned: &mut [Option<(usize, T, T)>], lower: &mut [T], assigned: usize) {
    for (s, l) in scanned.iter_mut().zip(lower.iter_mut()) {
        if let Some((k, best, second)) = s.take() {
            *l = if k == assigned { second.sqrt() } else { best.sqrt() };
        }
    }
}

/// Clusters the codewords themselves into at most [`MAX_GROUPS`] groups
/// with a few Lloyd steps. Members are sorted; empty groups are dropped.
fn group_codewords<T: Real>(flat: &[T], stride: usize) -> Vec<Vec<usize>> {
    let k = flat.len() / stride;
    let g = (k / 16).clamp(1, MAX_GROUPS);
    if g == 1 {
        return vec![(0..k).collect()];
    }
    let mut centers: Vec<T> = (0..g)
        .flat_map(|i| flat[(i * k / g) * stride..(i * k / g + 1) * stride].iter().copied())
        .collect();
    let mut owner = vec![0usize; k];
    for _ in 0..GROUP_ITERS {
        for (j, c) in flat.chunks_exact(stride).enumerate() {
            let mut best = (0, T::infinity());
            for (i, m) in centers.chunks_exact(stride).enumerate() {
                let d = sq_dist(c, m);
                if d < best.1 {
                    best = (i, d);
                }
            }
            owner[j] = best.0;
        }
        let mut sums = vec![T::zero(); g * stride];
        let mut counts = vec![0usize; g];
        for (j, c) in flat.chunks_exact(stride).enumerate() {
            counts[owner[j]] += 1;
            for (s, v) in sums[owner[j] * stride..(owner[j] + 1) * stride].iter_mut().zip(c) {
                *s = *s + *v;
            }
        }
        for i in 0..g {
            if counts[i] > 0 {
                let inv = T::one() / T::count(counts[i]);
                for d in 0..stride {
                    centers[i * stride + d] = sums[i * stride + d] * inv;
                }
            }
        }
    }
    let mut groups = vec![Vec::new(); g];
    for (j, &o) in owner.iter().enumerate() {
        groups[o].push(j);
    }
    groups.retain(|m| !m.is_empty());
    groups
}

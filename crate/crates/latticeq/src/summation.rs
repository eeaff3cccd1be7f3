//! Deterministic compensated summation over lattice ranges.
//!
//! Sums are evaluated in ascending index order using Neumaier's variant of
//! Kahan summation, independently on the real and imaginary parts. The range
//! is split into fixed 65536-term chunks; chunks may be computed on any
//! number of worker threads, but partials are always combined sequentially
//! in chunk order, so the result is bit-identical regardless of thread
//! count.
//!
//! Properties:
//! - error per chunk is O(ε)·Σ|terms| instead of O(len·ε) for naive
//!   summation;
//! - `fp_error_estimate` is a conservative bound, terms·ε·max|partial|,
//!   suitable for reporting alongside the value;
//! - the modulus used in estimates avoids `hypot` so the result is a pure
//!   function of the inputs on every libm.

use num_complex::Complex64;
use rayon::prelude::*;

/// Fixed chunk length for parallel splitting. Changing this constant changes
/// rounding at the last few bits, so it is part of the determinism contract.
pub const CHUNK_LEN: i64 = 65536;

/// Result of a deterministic range sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumOutcome {
    /// The compensated sum.
    pub value: Complex64,
    /// Number of summand evaluations.
    pub terms: u64,
    /// Conservative floating-point error bound: terms · ε · max|partial|.
    pub fp_error_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn new() -> Self {
        Neumaier { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
struct ChunkPartial {
    re: f64,
    im: f64,
    /// Largest running modulus seen inside the chunk (chunk-local origin).
    internal_max: f64,
}

#[inline]
fn modulus(re: f64, im: f64) -> f64 {
    (re * re + im * im).sqrt()
}

fn sum_chunk<F>(lo: i64, hi_inclusive: i64, f: &F) -> ChunkPartial
where
    F: Fn(i64) -> Complex64 + Sync,
{
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    let mut internal_max = 0.0f64;
    for k in lo..=hi_inclusive {
        let v = f(k);
        re.add(v.re);
        im.add(v.im);
        let m = modulus(re.total(), im.total());
        if m > internal_max {
            internal_max = m;
        }
    }
    ChunkPartial {
        re: re.total(),
        im: im.total(),
        internal_max,
    }
}

/// Deterministically sum f(k) for k in [lo, hi] (inclusive ends).
///
/// The summand closure must be a pure function of k. Chunks are evaluated in
/// parallel on the ambient rayon pool; the combination step is sequential and
/// ordered, so results are identical for any pool width, including 1.
pub fn sum_range<F>(lo: i64, hi_inclusive: i64, f: F) -> SumOutcome
where
    F: Fn(i64) -> Complex64 + Sync,
{
    if lo > hi_inclusive {
        return SumOutcome {
            value: Complex64::new(0.0, 0.0),
            terms: 0,
            fp_error_estimate: 0.0,
        };
    }
    let terms = (hi_inclusive - lo + 1) as u64;

    let chunk_bounds: Vec<(i64, i64)> = {
        let mut v = Vec::with_capacity((terms / CHUNK_LEN as u64 + 1) as usize);
        let mut start = lo;
        while start <= hi_inclusive {
            let end = start
                .saturating_add(CHUNK_LEN - 1)
                .min(hi_inclusive);
            v.push((start, end));
            start = end + 1;
        }
        v
    };

    let partials: Vec<ChunkPartial> = chunk_bounds
        .par_iter()
        .map(|&(a, b)| sum_chunk(a, b, &f))
        .collect();

    // Ordered sequential combination: the only stage where cross-chunk
    // rounding happens, and it is single-threaded by construction.
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    let mut max_partial = 0.0f64;
    for p in &partials {
        let before = modulus(re.total(), im.total());
        let candidate = before + p.internal_max;
        if candidate > max_partial {
            max_partial = candidate;
        }
        re.add(p.re);
        im.add(p.im);
        let after = modulus(re.total(), im.total());
        if after > max_partial {
            max_partial = after;
        }
    }

    SumOutcome {
        value: Complex64::new(re.total(), im.total()),
        terms,
        fp_error_estimate: terms as f64 * f64::EPSILON * max_partial,
    }
}

/// Sum f over all points of a centered range of length `len` starting at
/// `lo`, exposed for callers that already hold half-open bounds.
pub fn sum_half_open<F>(lo: i64, hi_exclusive: i64, f: F) -> SumOutcome
where
    F: Fn(i64) -> Complex64 + Sync,
{
    sum_range(lo, hi_exclusive - 1, f)
}

//! Finite lattice universes and the continuum reference.
//!
//! A finite universe of size n is the integer lattice ℤ ∩ [−n/2, n/2) with
//! spacing δ = √(2π/n), the cyclic metric δ·min(|u₁−u₂|, n−|u₁−u₂|), the phase
//! unit ν = 2π/n, and a Planck integer h_n coprime to n. The point measure is
//! the spacing, so the whole lattice has measure n·δ = √(2πn).

use crate::error::{Error, Result};
use num_integer::Integer;

/// Finite lattice universe: size `n` (even), Planck integer `h_n` with
/// gcd(h_n, n) = 1. Immutable after construction; cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiniteUniverse {
    n: u64,
    h_n: u64,
}

impl FiniteUniverse {
    /// Construct a universe, enforcing that `n` is even and positive and that
    /// `h_n ≥ 1` is coprime to `n` (required for Fourier orthonormality: the
    /// twisted kernel must permute frequencies bijectively).
    pub fn new(n: u64, h_n: u64) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::OddUniverse(n));
        }
        if h_n == 0 || n.gcd(&h_n) != 1 {
            return Err(Error::NonCoprimePlanck { h_n, n });
        }
        Ok(FiniteUniverse { n, h_n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn h_n(&self) -> u64 {
        self.h_n
    }

    /// Lattice spacing δ = √(2π/n). Satisfies δ²·n = 2π to machine precision.
    pub fn spacing(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.n as f64).sqrt()
    }

    /// Phase unit ν = 2π/n.
    pub fn nu(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// ν as an exact multiple of π: returns (2, n) meaning ν = 2π/n.
    pub fn nu_rational(&self) -> (u64, u64) {
        (2, self.n)
    }

    /// Smallest lattice point, −n/2.
    pub fn lo(&self) -> i64 {
        -((self.n / 2) as i64)
    }

    /// One past the largest lattice point: points lie in [−n/2, n/2).
    pub fn hi(&self) -> i64 {
        (self.n / 2) as i64
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.lo() && k < self.hi()
    }

    /// Ascending iterator over all lattice points.
    pub fn points(&self) -> impl Iterator<Item = i64> {
        self.lo()..self.hi()
    }

    /// Natural embedding into ℝ: k ↦ k·δ.
    pub fn embed_point(&self, k: i64) -> Result<f64> {
        if !self.contains(k) {
            return Err(Error::PointOutOfRange { k, half: self.hi() });
        }
        Ok(k as f64 * self.spacing())
    }

    /// Cyclic lattice metric δ·min(|k₁−k₂|, n − |k₁−k₂|).
    pub fn lattice_distance(&self, k1: i64, k2: i64) -> Result<f64> {
        for k in [k1, k2] {
            if !self.contains(k) {
                return Err(Error::PointOutOfRange { k, half: self.hi() });
            }
        }
        let diff = (k1 - k2).unsigned_abs();
        let wrapped = diff.min(self.n - diff);
        Ok(self.spacing() * wrapped as f64)
    }

    /// Largest integer m with 2m ≤ √(n/2π): the widest admissible symmetric
    /// window half-length for local quantification. Returns 0 for degenerate
    /// (too small) universes.
    pub fn max_local_window(&self) -> u64 {
        let bound = (self.n as f64 / (2.0 * std::f64::consts::PI)).sqrt();
        let mut m = (bound / 2.0).floor() as u64;
        // Guard against floating-point landing just below an integer boundary.
        while 2.0 * (m + 1) as f64 <= bound {
            m += 1;
        }
        while m > 0 && 2.0 * m as f64 > bound {
            m -= 1;
        }
        m
    }

    /// Reduce an arbitrary integer to its representative label in [−n/2, n/2).
    pub fn wrap(&self, k: i64) -> i64 {
        let n = self.n as i64;
        let mut r = k.rem_euclid(n);
        if r >= n / 2 {
            r -= n;
        }
        r
    }
}

/// Continuum reference universe 𝕌(∞) = ℝ with a Planck constant ℏ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumRef {
    hbar: f64,
}

impl ContinuumRef {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) {
            return Err(Error::Precondition(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(ContinuumRef { hbar })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

/// Closed bounded interval [lo, hi] of embedded coordinates, lo < hi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Precondition(format!(
                "interval endpoints must be finite with lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn diameter(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        Interval::new(lo, hi).ok()
    }
}

/// Build a "highly divisible" universe size lcm(1..=bound)·scale.
///
/// The idealized notion (divisible by every integer) has this desk-scale
/// proxy: the result is divisible by every integer up to `bound`. Panics on
/// u64 overflow only for bounds far beyond practical sizes; returns an error
/// instead.
pub fn highly_divisible(bound: u32, scale: u64) -> Result<u64> {
    if bound == 0 || scale == 0 {
        return Err(Error::Precondition(
            "highly_divisible requires bound ≥ 1 and scale ≥ 1".into(),
        ));
    }
    let mut acc: u64 = 1;
    for b in 2..=bound as u64 {
        acc = acc.lcm(&b);
        if acc > u64::MAX / (scale.max(1) * 4) {
            return Err(Error::Precondition(format!(
                "lcm(1..={bound})·{scale} overflows 64 bits"
            )));
        }
    }
    acc.checked_mul(scale)
        .ok_or_else(|| Error::Precondition("highly divisible size overflows 64 bits".into()))
}

//! Weyl pair U and V, the twisted discrete Fourier transform between the
//! position and momentum bases, integral-kernel application, and the free
//! and harmonic propagators.
//!
//! The transform kernel is (1/√n)·e^{+2πi·h·r·p/n} on the forward direction
//! (u-coordinates to v-coordinates) and its conjugate on the inverse. With
//! V the cyclic shift by h, conjugation gives the diagonal
//! (F⁻¹VF)_{pp} = e^{−iν·h·m(p)} with m(p) = h·p mod n, which reduces to the
//! momentum action e^{−iνph} when h = 1 (ledger entry SL-1.9).

use crate::error::{Error, Result};
use crate::quantifier::{KPredicate, Window};
use crate::summation::sum_range;
use crate::universe::{FiniteUniverse, Interval};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use crate::forms::SampledPredicate;

/// Dense complex coefficient vector over the position basis u[r]. Storage
/// index j holds the coefficient of u[r] with r ≡ j (mod n), r ∈ [−n/2, n/2).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    universe: FiniteUniverse,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(universe: FiniteUniverse, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() as u64 != universe.n() {
            return Err(Error::Precondition(format!(
                "state needs exactly n = {} amplitudes, got {}",
                universe.n(),
                amplitudes.len()
            )));
        }
        Ok(StateVector {
            universe,
            amplitudes,
        })
    }

    pub fn zeros(universe: FiniteUniverse) -> Self {
        StateVector {
            amplitudes: vec![Complex64::new(0.0, 0.0); universe.n() as usize],
            universe,
        }
    }

    /// The basis state u[r].
    pub fn basis_state(universe: FiniteUniverse, r: i64) -> Result<Self> {
        if !universe.contains(r) {
            return Err(Error::PointOutOfRange {
                k: r,
                half: (universe.n() / 2) as i64,
            });
        }
        let mut s = StateVector::zeros(universe);
        s.set_amp(r, Complex64::new(1.0, 0.0));
        Ok(s)
    }

    /// Fill from a function of the lattice point r ∈ [−n/2, n/2).
    pub fn from_fn<F: FnMut(i64) -> Complex64>(universe: FiniteUniverse, mut f: F) -> Self {
        let n = universe.n() as i64;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n as usize];
        for (j, slot) in amplitudes.iter_mut().enumerate() {
            let mut r = j as i64;
            if r >= n / 2 {
                r -= n;
            }
            *slot = f(r);
        }
        StateVector {
            universe,
            amplitudes,
        }
    }

    pub fn universe(&self) -> &FiniteUniverse {
        &self.universe
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Coefficient of u[r]; r may be any integer (reduced mod n).
    pub fn amp(&self, r: i64) -> Complex64 {
        let n = self.universe.n() as i64;
        self.amplitudes[r.rem_euclid(n) as usize]
    }

    pub fn set_amp(&mut self, r: i64, v: Complex64) {
        let n = self.universe.n() as i64;
        self.amplitudes[r.rem_euclid(n) as usize] = v;
    }

    /// Coefficient ℓ²-norm (the basis u[r] is orthonormal).
    pub fn norm(&self) -> f64 {
        let s = sum_range(0, self.amplitudes.len() as i64 - 1, |j| {
            Complex64::new(self.amplitudes[j as usize].norm_sqr(), 0.0)
        });
        s.value.re.max(0.0).sqrt()
    }

    /// CSV rows "index,re,im" with index the lattice point, ascending from
    /// −n/2.
    pub fn to_csv<W: std::io::Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["index", "re", "im"])
            .map_err(|e| Error::Serialization(e.to_string()))?;
        for r in self.universe.points() {
            let a = self.amp(r);
            w.write_record([r.to_string(), format!("{:?}", a.re), format!("{:?}", a.im)])
                .map_err(|e| Error::Serialization(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_csv<R: std::io::Read>(universe: FiniteUniverse, source: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(source);
        let mut s = StateVector::zeros(universe);
        let mut seen = 0u64;
        for record in reader.records() {
            let record = record.map_err(|e| Error::Serialization(e.to_string()))?;
            if record.len() != 3 {
                return Err(Error::Serialization(
                    "state CSV needs rows of index,re,im".into(),
                ));
            }
            let r: i64 = record[0]
                .trim()
                .parse()
                .map_err(|e| Error::Serialization(format!("bad index: {e}")))?;
            let re: f64 = record[1]
                .trim()
                .parse()
                .map_err(|e| Error::Serialization(format!("bad re: {e}")))?;
            let im: f64 = record[2]
                .trim()
                .parse()
                .map_err(|e| Error::Serialization(format!("bad im: {e}")))?;
            if !universe.contains(r) {
                return Err(Error::PointOutOfRange {
                    k: r,
                    half: (universe.n() / 2) as i64,
                });
            }
            s.set_amp(r, Complex64::new(re, im));
            seen += 1;
        }
        if seen != universe.n() {
            return Err(Error::Serialization(format!(
                "state CSV holds {seen} rows, universe needs {}",
                universe.n()
            )));
        }
        Ok(s)
    }

    /// {"n":…, "h_n":…, "amplitudes":[[re,im],…]} in ascending lattice order.
    pub fn to_json(&self) -> serde_json::Value {
        let amps: Vec<serde_json::Value> = self
            .universe
            .points()
            .map(|r| {
                let a = self.amp(r);
                serde_json::json!([a.re, a.im])
            })
            .collect();
        serde_json::json!({
            "n": self.universe.n(),
            "h_n": self.universe.h_n(),
            "amplitudes": amps,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::Serialization("malformed state JSON".into());
        let n = v.get("n").and_then(|x| x.as_u64()).ok_or_else(bad)?;
        let h_n = v.get("h_n").and_then(|x| x.as_u64()).ok_or_else(bad)?;
        let universe = FiniteUniverse::new(n, h_n)?;
        let amps = v
            .get("amplitudes")
            .and_then(|x| x.as_array())
            .ok_or_else(bad)?;
        if amps.len() as u64 != n {
            return Err(bad());
        }
        let mut s = StateVector::zeros(universe);
        for (offset, pair) in amps.iter().enumerate() {
            let p = pair.as_array().ok_or_else(bad)?;
            if p.len() != 2 {
                return Err(bad());
            }
            let re = p[0].as_f64().ok_or_else(bad)?;
            let im = p[1].as_f64().ok_or_else(bad)?;
            let r = universe.lo() + offset as i64;
            s.set_amp(r, Complex64::new(re, im));
        }
        Ok(s)
    }
}

/// Table of the n-th roots of unity: entry t is e^{sign·2πi·t/n}. The angle
/// argument is reduced to (−π, π] before cos/sin, so every entry is accurate
/// to an ulp and the table is a pure function of (n, sign).
pub fn root_table(n: u64, sign: i32) -> Vec<Complex64> {
    let n_i = n as i64;
    (0..n_i)
        .map(|t| {
            let c = if t > n_i / 2 { t - n_i } else { t };
            let theta = sign as f64 * 2.0 * PI * (c as f64) / (n as f64);
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect()
}

/// U: u[r] ↦ e^{irν}·u[r], ν = 2π/n.
pub fn weyl_u(state: &StateVector) -> StateVector {
    let n = state.universe.n();
    let roots = root_table(n, 1);
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| a * roots[j])
        .collect();
    StateVector {
        universe: state.universe,
        amplitudes,
    }
}

/// V: u[r] ↦ u[r + h_n], the cyclic shift by the Planck integer.
pub fn weyl_v(state: &StateVector) -> StateVector {
    let n = state.universe.n() as i64;
    let h = (state.universe.h_n() % state.universe.n()) as i64;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n as usize];
    for j in 0..n {
        amplitudes[j as usize] = state.amplitudes[(j - h).rem_euclid(n) as usize];
    }
    StateVector {
        universe: state.universe,
        amplitudes,
    }
}

/// Deterministic pseudo-random state with i.i.d. uniform(−1,1) parts, for
/// operator property checks. Same (universe, seed) always gives the same
/// state.
pub fn random_state(universe: FiniteUniverse, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitudes = (0..universe.n())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector {
        universe,
        amplitudes,
    }
}

/// Worst relative defect of UV = e^{iνh_n}VU over deterministic
/// pseudo-random states.
pub fn commutation_defect(u: &FiniteUniverse, trials: u64) -> f64 {
    let phase = {
        let theta = u.nu() * (u.h_n() % u.n()) as f64;
        Complex64::new(theta.cos(), theta.sin())
    };
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let psi = random_state(*u, 0x9E3779B97F4A7C15 ^ trial);
        let lhs = weyl_u(&weyl_v(&psi));
        let rhs = weyl_v(&weyl_u(&psi));
        let mut defect2 = 0.0f64;
        for (l, r) in lhs.amplitudes.iter().zip(rhs.amplitudes.iter()) {
            defect2 += (l - phase * r).norm_sqr();
        }
        let d = defect2.sqrt() / psi.norm();
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// Transform evaluation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierPath {
    /// Dense O(n²) for n ≤ 4096, factored fast transform above.
    Auto,
    Dense,
    Fast,
}

const DENSE_LIMIT: u64 = 4096;

/// Forward transform: v-coordinates c with c[p] = (1/√n)·Σ_r e^{+2πih rp/n}·ψ_r.
pub fn fourier_forward(state: &StateVector) -> StateVector {
    fourier_forward_path(state, FourierPath::Auto)
}

/// Inverse transform: ψ_r = (1/√n)·Σ_p e^{−2πih rp/n}·c[p].
pub fn fourier_inverse(state: &StateVector) -> StateVector {
    fourier_inverse_path(state, FourierPath::Auto)
}

pub fn fourier_forward_path(state: &StateVector, path: FourierPath) -> StateVector {
    let n = state.universe.n();
    let h = state.universe.h_n() % n;
    let use_dense = match path {
        FourierPath::Dense => true,
        FourierPath::Fast => false,
        FourierPath::Auto => n <= DENSE_LIMIT,
    };
    let amplitudes = if use_dense {
        dense_transform(&state.amplitudes, h, 1)
    } else {
        // (Fψ)[p] = G[(h·p) mod n] with G the plain +-sign transform.
        let g = plain_dft(&state.amplitudes, 1);
        let scale = 1.0 / (n as f64).sqrt();
        let mut out = vec![Complex64::new(0.0, 0.0); n as usize];
        for (p, slot) in out.iter_mut().enumerate() {
            let idx = ((h as u128 * p as u128) % n as u128) as usize;
            *slot = g[idx] * scale;
        }
        out
    };
    StateVector {
        universe: state.universe,
        amplitudes,
    }
}

pub fn fourier_inverse_path(state: &StateVector, path: FourierPath) -> StateVector {
    let n = state.universe.n();
    let h = state.universe.h_n() % n;
    let use_dense = match path {
        FourierPath::Dense => true,
        FourierPath::Fast => false,
        FourierPath::Auto => n <= DENSE_LIMIT,
    };
    let amplitudes = if use_dense {
        dense_transform(&state.amplitudes, h, -1)
    } else {
        // Σ_p e^{−2πihrp/n}c[p] = Σ_q e^{−2πirq/n}·c[h⁻¹q]: scatter through
        // the twist permutation, then a plain −-sign transform.
        let mut scattered = vec![Complex64::new(0.0, 0.0); n as usize];
        for (p, &v) in state.amplitudes.iter().enumerate() {
            let idx = ((h as u128 * p as u128) % n as u128) as usize;
            scattered[idx] = v;
        }
        let g = plain_dft(&scattered, -1);
        let scale = 1.0 / (n as f64).sqrt();
        g.into_iter().map(|v| v * scale).collect()
    };
    StateVector {
        universe: state.universe,
        amplitudes,
    }
}

/// Dense twisted transform out[p] = (1/√n)·Σ_j e^{sign·2πi·h·j·p/n}·x[j].
fn dense_transform(x: &[Complex64], h: u64, sign: i32) -> Vec<Complex64> {
    let n = x.len() as u64;
    let roots = root_table(n, sign);
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                let idx = ((h as u128 * j as u128 * p as u128) % n as u128) as usize;
                acc += roots[idx] * v;
            }
            acc * scale
        })
        .collect()
}

/// Unnormalized plain transform G[q] = Σ_j e^{sign·2πi·j·q/n}·x[j] by
/// recursive mixed-radix splitting on the smallest prime factor; prime
/// lengths fall back to the direct double loop.
fn plain_dft(x: &[Complex64], sign: i32) -> Vec<Complex64> {
    let n = x.len();
    let roots = root_table(n as u64, sign);
    dft_rec(x, 0, 1, n, n, &roots)
}

fn smallest_prime_factor(n: usize) -> usize {
    if n % 2 == 0 {
        return 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 2;
    }
    n
}

/// DFT of length `len` over x[offset + j·stride], using the length-n root
/// table (the len-th roots sit at multiples of n/len).
fn dft_rec(
    x: &[Complex64],
    offset: usize,
    stride: usize,
    len: usize,
    n: usize,
    roots: &[Complex64],
) -> Vec<Complex64> {
    let mult = n / len;
    let spf = smallest_prime_factor(len);
    if len <= 32 || spf == len {
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (q, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..len {
                let idx = ((j as u128 * q as u128) % len as u128) as usize * mult;
                acc += roots[idx] * x[offset + j * stride];
            }
            *slot = acc;
        }
        return out;
    }
    let r = spf;
    let m = len / r;
    let subs: Vec<Vec<Complex64>> = (0..r)
        .map(|l| dft_rec(x, offset + l * stride, stride * r, m, n, roots))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (q, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, sub) in subs.iter().enumerate() {
            let idx = (l * q) % len * mult;
            acc += roots[idx] * sub[q % m];
        }
        *slot = acc;
    }
    out
}

/// Integral-kernel operator L_κ: ψ ↦ E_x κ(z,x)·ψ(x).
#[derive(Clone)]
pub struct KernelOperator {
    kappa: SampledPredicate,
}

impl KernelOperator {
    /// κ must be a two-variable sampled predicate (z first, x second).
    pub fn new(kappa: SampledPredicate) -> Result<Self> {
        if kappa.domains().len() != 2 {
            return Err(Error::ArityMismatch {
                expected: 2,
                got: kappa.domains().len(),
            });
        }
        Ok(KernelOperator { kappa })
    }

    pub fn from_fn<F>(z_domain: Interval, x_domain: Interval, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        KernelOperator {
            kappa: SampledPredicate::new(
                vec![z_domain, x_domain],
                Arc::new(move |xs: &[f64]| f(xs[0], xs[1])),
            ),
        }
    }

    pub fn kappa(&self) -> &SampledPredicate {
        &self.kappa
    }
}

/// Apply L_κ: the result predicate evaluates z ↦ E_x^{(window)} κ(z,x)·ψ(x).
/// ψ must be a univariate predicate; its effective domain (when sampled)
/// must meet the window.
pub fn apply_kernel(
    op: &KernelOperator,
    psi: &KPredicate,
    u: &FiniteUniverse,
    window: Window,
) -> Result<SampledPredicate> {
    window.validate_for(u)?;
    if let KPredicate::Sampled(s) = psi {
        let dom = s.domain();
        if dom.lo() >= window.m2() || dom.hi() <= window.m1() {
            return Err(Error::Window {
                m1: window.m1(),
                m2: window.m2(),
                reason: format!(
                    "window misses the integrand support [{}, {}]",
                    dom.lo(),
                    dom.hi()
                ),
            });
        }
    }
    let z_domain = *op.kappa.domains().first().expect("arity checked");
    let kappa = op.kappa.clone();
    let psi = psi.clone();
    let u = *u;
    let (k_lo, k_hi) = window.lattice_range(&u);
    let delta = u.spacing();
    Ok(SampledPredicate::univariate(z_domain, move |z: f64| {
        let summand = match psi.make_summand(k_lo..=k_hi, &[], &u) {
            Ok(s) => s,
            Err(_) => return Complex64::new(0.0, 0.0),
        };
        let outcome = sum_range(k_lo, k_hi, |k| {
            let x = k as f64 * delta;
            kappa.eval_at(&[z, x]) * summand(k)
        });
        outcome.value * delta
    }))
}

/// Free propagator closed form (1/√(2πit))·e^{i(x−x₀)²/(2t)} =
/// (2π|t|)^{−1/2}·e^{−i·sgn(t)·π/4}·e^{i(x−x₀)²/(2t)} (ledger entry SL-1.4).
pub fn free_propagator_kernel(t: f64, x: f64, x0: f64) -> Result<Complex64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::Precondition(
            "free propagator needs finite t ≠ 0".into(),
        ));
    }
    let d = x - x0;
    Ok(Complex64::from_polar(
        1.0 / (2.0 * PI * t.abs()).sqrt(),
        -t.signum() * FRAC_PI_4 + d * d / (2.0 * t),
    ))
}

/// Free evolution: multiply the momentum coefficient at p by e^{−it(pδ)²/2}.
pub fn evolve_free(state: &StateVector, t: f64) -> StateVector {
    if t == 0.0 {
        return state.clone();
    }
    let u = state.universe;
    let delta = u.spacing();
    let mut momentum = fourier_forward(state);
    let n = u.n() as i64;
    for j in 0..n {
        let p = if j >= n / 2 { j - n } else { j };
        let w = p as f64 * delta;
        let theta = -t * w * w / 2.0;
        momentum.amplitudes[j as usize] *= Complex64::new(theta.cos(), theta.sin());
    }
    fourier_inverse(&momentum)
}

/// Cross-term convention of the harmonic kernel exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossTerm {
    /// Mehler form, coefficient 2·x·x₀ (default; degenerates to the free
    /// kernel as ω → 0, ledger entry SL-1.5).
    #[default]
    Mehler,
    /// Literal display form, coefficient 1·x·x₀.
    Literal,
}

/// Harmonic propagator
/// √(ω/(2πiℏ sin ωt))·exp[iω((x₀²+x²)cos ωt − c·x₀x)/(2ℏ sin ωt)] with
/// c = 2 (Mehler) or c = 1 (literal).
pub fn harmonic_kernel(
    omega: f64,
    t: f64,
    hbar: f64,
    x: f64,
    x0: f64,
    convention: CrossTerm,
) -> Result<Complex64> {
    if !(omega > 0.0) || !(hbar > 0.0) || !t.is_finite() {
        return Err(Error::Precondition(
            "harmonic kernel needs ω > 0, ℏ > 0, finite t".into(),
        ));
    }
    let s = (omega * t).sin();
    if s.abs() < 1e-12 {
        return Err(Error::Caustic(format!(
            "ωt = {} is a multiple of π: the harmonic kernel is singular",
            omega * t
        )));
    }
    let c = match convention {
        CrossTerm::Mehler => 2.0,
        CrossTerm::Literal => 1.0,
    };
    let cosv = (omega * t).cos();
    let modulus = (omega / (2.0 * PI * hbar * s.abs())).sqrt();
    let phase = -s.signum() * FRAC_PI_4
        + omega * ((x0 * x0 + x * x) * cosv - c * x0 * x) / (2.0 * hbar * s);
    Ok(Complex64::from_polar(modulus, phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{rat_int, GaussianPredicate, QuadraticForm};
    use crate::quantifier::{window_quantify, WindowPolicy};

    fn u4() -> FiniteUniverse {
        FiniteUniverse::new(4, 1).unwrap()
    }

    #[test]
    fn weyl_u_phases() {
        let s = StateVector::basis_state(u4(), 1).unwrap();
        let t = weyl_u(&s);
        assert!((t.amp(1) - Complex64::new(0.0, 1.0)).norm() < 1e-15, "e^{{iπ/2}} = i");
        let s0 = StateVector::basis_state(u4(), 0).unwrap();
        assert_eq!(weyl_u(&s0).amp(0), Complex64::new(1.0, 0.0), "u[0] fixed");
    }

    #[test]
    fn weyl_u_is_isometry() {
        let u = FiniteUniverse::new(256, 7).unwrap();
        let psi = random_state(u, 11);
        assert!((weyl_u(&psi).norm() - psi.norm()).abs() < 1e-12);
    }

    #[test]
    fn weyl_v_shifts_cyclically() {
        let s = StateVector::basis_state(u4(), 0).unwrap();
        let t = weyl_v(&s);
        assert_eq!(t.amp(1), Complex64::new(1.0, 0.0), "u[0] ↦ u[1]");
        assert_eq!(t.amp(0), Complex64::new(0.0, 0.0));
        // Full cycle of length n.
        let mut s = StateVector::basis_state(u4(), 1).unwrap();
        for _ in 0..4 {
            s = weyl_v(&s);
        }
        assert_eq!(s.amp(1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn commutation_examples() {
        assert!(commutation_defect(&u4(), 8) < 1e-14);
        let u = FiniteUniverse::new(16, 3).unwrap();
        assert!(commutation_defect(&u, 100) <= 1e-12);
    }

    #[test]
    fn commutation_on_basis_state_matches_hand_computation() {
        // UVu[0] = U u[1] = e^{iν}u[1]; e^{iν}VU u[0] = e^{iν}V u[0] = e^{iν}u[1].
        let s = StateVector::basis_state(u4(), 0).unwrap();
        let lhs = weyl_u(&weyl_v(&s));
        let rhs = weyl_v(&weyl_u(&s));
        let phase = Complex64::new(0.0, 1.0); // e^{iν·1}, ν = π/2
        for r in [-2i64, -1, 0, 1] {
            assert!((lhs.amp(r) - phase * rhs.amp(r)).norm() < 1e-15);
        }
    }

    #[test]
    fn fourier_of_position_basis_is_uniform() {
        let u = FiniteUniverse::new(64, 1).unwrap();
        let s = StateVector::basis_state(u, 0).unwrap();
        let f = fourier_forward(&s);
        for &a in f.amplitudes() {
            assert!((a - Complex64::new(0.125, 0.0)).norm() < 1e-12, "1/√64 = 0.125");
        }
    }

    #[test]
    fn fourier_inverse_of_forward_is_identity() {
        for (n, h) in [(60u64, 1u64), (64, 1), (128, 7), (12, 5)] {
            let u = FiniteUniverse::new(n, h).unwrap();
            let psi = random_state(u, 3);
            let back = fourier_inverse(&fourier_forward(&psi));
            let mut worst = 0.0f64;
            for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
                worst = worst.max((a - b).norm());
            }
            assert!(worst < 1e-10, "n={n}, h={h}: round-trip defect {worst}");
        }
    }

    #[test]
    fn fourier_parseval() {
        let u = FiniteUniverse::new(720, 7).unwrap();
        let psi = random_state(u, 17);
        let f = fourier_forward(&psi);
        assert!((f.norm() - psi.norm()).abs() < 1e-9 * psi.norm());
    }

    #[test]
    fn fourier_fourth_power_is_identity_for_unit_twist() {
        let u = u4();
        let psi = random_state(u, 5);
        let mut s = psi.clone();
        for _ in 0..4 {
            s = fourier_forward(&s);
        }
        let mut worst = 0.0f64;
        for (a, b) in s.amplitudes().iter().zip(psi.amplitudes()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-12, "F⁴ = 1 at h=1, defect {worst}");
    }

    #[test]
    fn dense_and_fast_paths_agree() {
        for (n, h) in [(60u64, 1u64), (60, 7), (4096, 1), (4096, 28673)] {
            let u = FiniteUniverse::new(n, h).unwrap();
            let psi = random_state(u, 23);
            let d = fourier_forward_path(&psi, FourierPath::Dense);
            let f = fourier_forward_path(&psi, FourierPath::Fast);
            let mut worst = 0.0f64;
            for (a, b) in d.amplitudes().iter().zip(f.amplitudes()) {
                worst = worst.max((a - b).norm());
            }
            assert!(worst < 1e-9, "n={n}, h={h}: path disagreement {worst}");
            let di = fourier_inverse_path(&psi, FourierPath::Dense);
            let fi = fourier_inverse_path(&psi, FourierPath::Fast);
            let mut worst_i = 0.0f64;
            for (a, b) in di.amplitudes().iter().zip(fi.amplitudes()) {
                worst_i = worst_i.max((a - b).norm());
            }
            assert!(worst_i < 1e-9, "n={n}, h={h}: inverse disagreement {worst_i}");
        }
    }

    #[test]
    fn fourier_diagonalizes_shift() {
        // F⁻¹VF = diag(e^{−iν·h·m(p)}) with m(p) = h·p mod n.
        for (n, h) in [(12u64, 5u64), (16, 3), (8, 1)] {
            let u = FiniteUniverse::new(n, h).unwrap();
            let nu = u.nu();
            for p in 0..n as i64 {
                let e_p = StateVector::basis_state(u, if p >= n as i64 / 2 { p - n as i64 } else { p }).unwrap();
                let image = fourier_inverse(&weyl_v(&fourier_forward(&e_p)));
                let m_p = ((h as i64 % n as i64) * p).rem_euclid(n as i64);
                let expect = Complex64::from_polar(1.0, -nu * (h % n) as f64 * m_p as f64);
                for q in 0..n as i64 {
                    let r = if q >= n as i64 / 2 { q - n as i64 } else { q };
                    let got = image.amp(r);
                    let want = if q == p { expect } else { Complex64::new(0.0, 0.0) };
                    assert!(
                        (got - want).norm() < 1e-12,
                        "n={n} h={h} p={p} q={q}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn kernel_indicator_reproduces_state() {
        let u = FiniteUniverse::new(256, 1).unwrap();
        let delta = u.spacing();
        let dom = Interval::new(-2.0, 2.0).unwrap();
        let psi = KPredicate::sampled(SampledPredicate::univariate(dom, |x| {
            Complex64::new((-x * x).exp(), 0.3 * x)
        }));
        let half = delta / 2.0;
        let op = KernelOperator::from_fn(dom, dom, move |z, x| {
            if (z - x).abs() < half {
                Complex64::new(1.0 / delta, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let w = Window::new(-2.0, 2.0).unwrap();
        let out = apply_kernel(&op, &psi, &u, w).unwrap();
        // Lattice points inside the domain: |k| ≤ 2/δ ≈ 12.7.
        for k in [-12i64, -3, 0, 7, 11] {
            let z = k as f64 * delta;
            let want = Complex64::new((-z * z).exp(), 0.3 * z);
            assert!(
                (out.eval_at(&[z]) - want).norm() < 1e-12,
                "reproducing kernel at k={k}"
            );
        }
    }

    #[test]
    fn kernel_zero_gives_zero_predicate() {
        let u = FiniteUniverse::new(256, 1).unwrap();
        let dom = Interval::new(-2.0, 2.0).unwrap();
        let psi = KPredicate::sampled(SampledPredicate::univariate(dom, |_| {
            Complex64::new(1.0, 0.0)
        }));
        let op = KernelOperator::from_fn(dom, dom, |_, _| Complex64::new(0.0, 0.0));
        let out = apply_kernel(&op, &psi, &u, Window::new(-2.0, 2.0).unwrap()).unwrap();
        assert_eq!(out.eval_at(&[0.5]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_v_character_matches_fourier() {
        // κ(z,x) = (1/√(2π))·e^{+2πi·h·r·p/n} applied over a window covering
        // the integrand support equals the forward transform coefficient.
        let u = FiniteUniverse::new(64, 1).unwrap();
        let delta = u.spacing();
        let dom = Interval::new(-1.5, 1.5).unwrap();
        let f = |x: f64| Complex64::new((-x * x).exp(), 0.1 * x.cos());
        let psi = KPredicate::sampled(SampledPredicate::univariate(dom, f));
        let state = StateVector::from_fn(u, |r| {
            let x = r as f64 * delta;
            if dom.contains(x) {
                f(x)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let n = u.n() as i64;
        let z_dom = Interval::new(-11.0, 11.0).unwrap();
        let op = KernelOperator::from_fn(z_dom, dom, move |z, x| {
            let r = (x / delta).round() as i64;
            let p = (z / delta).round() as i64;
            let m = (r * p).rem_euclid(n);
            let theta = 2.0 * PI * m as f64 / n as f64;
            Complex64::from_polar(1.0 / (2.0 * PI).sqrt(), theta)
        });
        let w = Window::new(-1.55, 1.55).unwrap();
        let out = apply_kernel(&op, &psi, &u, w).unwrap();
        let transformed = fourier_forward(&state);
        for p in [-31i64, -10, -1, 0, 2, 17, 31] {
            let z = p as f64 * delta;
            let got = out.eval_at(&[z]);
            let want = transformed.amp(p);
            assert!(
                (got - want).norm() < 1e-12,
                "p={p}: kernel {got} vs transform {want}"
            );
        }
    }

    #[test]
    fn free_kernel_modulus_and_phase() {
        let v = free_propagator_kernel(1.0, 0.0, 0.0).unwrap();
        assert!((v.norm() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((v - Complex64::from_polar(1.0 / (2.0 * PI).sqrt(), -FRAC_PI_4)).norm() < 1e-15);
        // Modulus independent of x − x0.
        for d in [0.5, 1.0, 7.3] {
            let w = free_propagator_kernel(1.0, d, 0.0).unwrap();
            assert!((w.norm() - v.norm()).abs() < 1e-15);
        }
        // Phase advance e^{iπ} at (x−x0)² = 2π·… : (x−x0) = √(2π) gives
        // exponent (2π)/2 = π relative to coincident points.
        let w = free_propagator_kernel(1.0, (2.0 * PI).sqrt(), 0.0).unwrap();
        assert!((w - v * Complex64::from_polar(1.0, PI)).norm() < 1e-12);
        assert!(free_propagator_kernel(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn evolve_free_identity_and_unitarity() {
        let u = FiniteUniverse::new(512, 1).unwrap();
        let psi = random_state(u, 29);
        let same = evolve_free(&psi, 0.0);
        assert_eq!(same, psi, "t = 0 short-circuits to the identity");
        let moved = evolve_free(&psi, 0.7);
        assert!((moved.norm() - psi.norm()).abs() < 1e-9 * psi.norm());
    }

    #[test]
    fn evolve_free_spreads_basis_state_to_kernel_modulus() {
        let u = FiniteUniverse::new(10_000, 1).unwrap();
        let psi = StateVector::basis_state(u, 0).unwrap();
        let phi = evolve_free(&psi, 1.0);
        let expect = u.spacing() / (2.0 * PI).sqrt();
        // Central half of the lattice.
        let quarter = u.n() as i64 / 4;
        let mut worst: f64 = 0.0;
        for r in -quarter..quarter {
            worst = worst.max((phi.amp(r).norm() - expect).abs() / expect);
        }
        assert!(worst < 0.02, "relative modulus deviation {worst}");
    }

    #[test]
    fn harmonic_kernel_conventions() {
        // ω → 0 degenerates to the free kernel under the Mehler convention.
        let free = free_propagator_kernel(1.0, 0.7, -0.2).unwrap();
        let tiny = harmonic_kernel(1e-4, 1.0, 1.0, 0.7, -0.2, CrossTerm::Mehler).unwrap();
        assert!((free - tiny).norm() < 1e-6, "{free} vs {tiny}");
        // Modulus independent of positions.
        let m0 = harmonic_kernel(2.0, 0.4, 1.0, 0.0, 0.0, CrossTerm::Mehler)
            .unwrap()
            .norm();
        for (x, x0) in [(1.0, 0.0), (0.3, -2.0)] {
            let m = harmonic_kernel(2.0, 0.4, 1.0, x, x0, CrossTerm::Mehler)
                .unwrap()
                .norm();
            assert!((m - m0).abs() < 1e-15);
            assert!((m - (2.0 / (2.0 * PI * (0.8f64).sin())).sqrt()).abs() < 1e-12);
        }
        // The two conventions differ exactly by the cross factor.
        let a = harmonic_kernel(1.0, 0.5, 1.0, 1.2, 0.8, CrossTerm::Mehler).unwrap();
        let b = harmonic_kernel(1.0, 0.5, 1.0, 1.2, 0.8, CrossTerm::Literal).unwrap();
        let cross = Complex64::from_polar(
            1.0,
            1.0 * (1.2 * 0.8) / (2.0 * (0.5f64).sin()),
        );
        assert!((a * cross - b).norm() < 1e-12);
        // Caustic rejection.
        assert!(matches!(
            harmonic_kernel(PI, 1.0, 1.0, 0.0, 0.0, CrossTerm::Mehler),
            Err(Error::Caustic(_))
        ));
    }

    #[test]
    fn harmonic_quarter_period_is_fourier_like() {
        // ωt = π/2: exponent reduces to −ω·x·x₀/ℏ (Mehler), a pure
        // oscillatory kernel with constant prefactor.
        let omega = 1.0;
        let k = |x: f64, x0: f64| {
            harmonic_kernel(omega, PI / 2.0, 1.0, x, x0, CrossTerm::Mehler).unwrap()
        };
        let base = k(0.0, 0.0);
        for (x, x0) in [(1.0, 1.0), (2.0, 0.5), (-1.3, 0.7)] {
            let expect = base * Complex64::from_polar(1.0, -omega * x * x0);
            assert!((k(x, x0) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn state_csv_round_trip() {
        let u = FiniteUniverse::new(16, 1).unwrap();
        let psi = random_state(u, 31);
        let mut buf = Vec::new();
        psi.to_csv(&mut buf).unwrap();
        let back = StateVector::from_csv(u, buf.as_slice()).unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert_eq!(a, b, "CSV round-trip must be exact (Debug float formatting)");
        }
    }

    #[test]
    fn state_json_round_trip() {
        let u = FiniteUniverse::new(12, 5).unwrap();
        let psi = random_state(u, 37);
        let back = StateVector::from_json(&psi.to_json()).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn gaussian_predicate_states_survive_kernel_application() {
        // apply_kernel accepts exact-phase predicates as integrands too.
        let u = FiniteUniverse::new(256, 1).unwrap();
        let pred = KPredicate::gaussian(GaussianPredicate::new(
            Complex64::new(1.0, 0.0),
            QuadraticForm::univariate(rat_int(1)),
        ));
        let dom = Interval::new(-3.0, 3.0).unwrap();
        let op = KernelOperator::from_fn(dom, dom, |_, _| Complex64::new(1.0, 0.0));
        let w = Window::new(-1.0, 1.0).unwrap();
        let out = apply_kernel(&op, &pred, &u, w).unwrap();
        // Constant kernel: every z sees the same windowed quantification.
        let expect = window_quantify(&pred, w, &u, &[]).unwrap().value;
        assert!((out.eval_at(&[0.0]) - expect).norm() < 1e-12);
        assert!((out.eval_at(&[1.0]) - expect).norm() < 1e-12);
        let _ = WindowPolicy::Auto;
    }
}

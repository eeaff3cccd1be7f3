//! Windowed, local, and global quantifiers over finite universes, with the
//! Gauss closed forms, the discrete delta identity, and the induced inner
//! product.
//!
//! Conventions (frozen, see docs/SIGN_LEDGER.md):
//! - windowed: E^(m₁,m₂) ψ = √(2π/n)·Σ_{m₁ ≤ kδ ≤ m₂} ψ(k), both endpoints
//!   inclusive, δ = √(2π/n);
//! - local: E^loc = windowed value at the maximal admissible symmetric
//!   window, optionally the whole convergence sequence m = 1..m_max;
//! - global: E^glob ψ = (1/√n)·Σ_{−n/2P < k ≤ n/2P} ψ(k) with P the period
//!   of ψ; for quadratic phases with parameters outside the admissible set
//!   the range is extended to the least exact period so the vanishing
//!   statement holds to fp accuracy rather than only in the limit;
//! - discrete Gauss closed form: √(1/a)·e^{σiπ/4}·e^{−σπi b²/(an)} with
//!   σ = −1 for the e^{−πi(ak²+2kb)/n} summand convention;
//! - continuum closed form: ∫e^{πi(ax²+2bx)}dx = √(1/|a|)·e^{σ′iπ/4·sgn a}
//!   ·e^{−πi b²/a} with σ′ = +1.
//!
//! All lattice sums run in ascending k with deterministic compensated
//! summation (see summation module), so results are identical across runs
//! and thread counts.

use crate::error::{Error, Result};
use crate::forms::{
    clear_denominators_value, period, GaussianPredicate, PerturbedGaussianPredicate, Rational,
    SampledPredicate,
};
use crate::phase::PhaseExponent;
use crate::summation::sum_range;
use crate::universe::FiniteUniverse;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::f64::consts::{FRAC_PI_4, PI};

/// Sign constant of the discrete Gauss closed form, fixed once by the
/// brute-force summation oracle (ledger entry SL-1.1). Applies to both the
/// e^{σiπ/4} unit and, with opposite sense, the parameter phase
/// e^{−σπi b²/(an)}.
pub const SIGMA_DISCRETE: i32 = -1;

/// Sign constant of the continuum Fresnel closed form, fixed by the
/// quadrature oracle (ledger entry SL-1.2).
pub const SIGMA_CONTINUUM: i32 = 1;

/// Embedded-coordinate window [m₁, m₂], both endpoints inclusive for the
/// lattice sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    m1: f64,
    m2: f64,
}

impl Window {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        if !(m1.is_finite() && m2.is_finite() && m1 < m2) {
            return Err(Error::Window {
                m1,
                m2,
                reason: "window needs finite m1 < m2".into(),
            });
        }
        Ok(Window { m1, m2 })
    }

    /// Symmetric window (−m, m).
    pub fn symmetric(m: f64) -> Result<Self> {
        Window::new(-m, m)
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn diameter(&self) -> f64 {
        self.m2 - self.m1
    }

    /// Check the diameter bound m₂ − m₁ < √(n/2π) (tiny relative slack so
    /// the maximal symmetric window, defined with ≤, is never rejected by a
    /// rounding coincidence).
    pub fn validate_for(&self, u: &FiniteUniverse) -> Result<()> {
        let bound = (u.n() as f64 / (2.0 * PI)).sqrt();
        if self.diameter() > bound * (1.0 + 1e-12) {
            return Err(Error::Window {
                m1: self.m1,
                m2: self.m2,
                reason: format!(
                    "diameter {} exceeds the admissible bound √(n/2π) = {bound}",
                    self.diameter()
                ),
            });
        }
        Ok(())
    }

    /// Inclusive lattice endpoints: the k with m₁ ≤ k·δ ≤ m₂, clamped to the
    /// universe. The boundary comparisons are made on k·δ itself, never on
    /// the rounded quotient, so exact endpoint hits are kept.
    pub fn lattice_range(&self, u: &FiniteUniverse) -> (i64, i64) {
        let delta = u.spacing();
        let mut k_lo = (self.m1 / delta).ceil() as i64;
        while ((k_lo - 1) as f64) * delta >= self.m1 {
            k_lo -= 1;
        }
        while (k_lo as f64) * delta < self.m1 {
            k_lo += 1;
        }
        let mut k_hi = (self.m2 / delta).floor() as i64;
        while ((k_hi + 1) as f64) * delta <= self.m2 {
            k_hi += 1;
        }
        while (k_hi as f64) * delta > self.m2 {
            k_hi -= 1;
        }
        (k_lo.max(u.lo()), k_hi.min(u.hi() - 1))
    }
}

/// Outcome of a quantifier evaluation. `window` is `None` for the global
/// quantifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantifierResult {
    pub value: Complex64,
    pub window: Option<(f64, f64)>,
    pub terms: u64,
    pub fp_error_estimate: f64,
}

impl QuantifierResult {
    /// {"value":[re,im], "window":[m1,m2] | "global", "terms":N, "fp_err":e}
    pub fn to_json(&self) -> serde_json::Value {
        let window = match self.window {
            Some((m1, m2)) => serde_json::json!([m1, m2]),
            None => serde_json::json!("global"),
        };
        serde_json::json!({
            "value": [self.value.re, self.value.im],
            "window": window,
            "terms": self.terms,
            "fp_err": self.fp_error_estimate,
        })
    }
}

/// A predicate viewed as a function of the quantified lattice variable k,
/// with any remaining parameters bound at call time.
#[derive(Debug, Clone)]
pub enum KPredicate {
    /// η·e^{−πi Q(k̄)/n} with the quantified variable at `k_index`.
    Gaussian {
        pred: GaussianPredicate,
        k_index: usize,
    },
    /// e^{−πi H(k² + k⁴/L)/n}.
    Perturbed(PerturbedGaussianPredicate),
    /// Arbitrary sampled map of the embedded coordinates (k first, then the
    /// embedded parameters).
    Sampled(SampledPredicate),
}

impl KPredicate {
    pub fn gaussian(pred: GaussianPredicate) -> Self {
        KPredicate::Gaussian { pred, k_index: 0 }
    }

    pub fn gaussian_in(pred: GaussianPredicate, k_index: usize) -> Self {
        KPredicate::Gaussian { pred, k_index }
    }

    pub fn sampled(pred: SampledPredicate) -> Self {
        KPredicate::Sampled(pred)
    }

    pub fn perturbed(pred: PerturbedGaussianPredicate) -> Self {
        KPredicate::Perturbed(pred)
    }

    /// Evaluate at a single lattice point (slow exact path; sums use
    /// [`make_summand`](Self::make_summand)).
    pub fn eval_k(&self, k: i64, p_bar: &[i64], u: &FiniteUniverse) -> Result<Complex64> {
        Ok(self.make_summand(k..=k, p_bar, u)?(k))
    }

    /// Build the summand closure for a k-range. Quadratic and quartic phases
    /// get an integer hot path: the exponent is reduced modulo the exact
    /// phase period in i128 arithmetic, so the only float rounding is the
    /// final cos/sin. Falls back to arbitrary-precision reduction when the
    /// i128 headroom check fails.
    pub fn make_summand<'a>(
        &'a self,
        k_range: std::ops::RangeInclusive<i64>,
        p_bar: &[i64],
        u: &FiniteUniverse,
    ) -> Result<Box<dyn Fn(i64) -> Complex64 + Sync + 'a>> {
        let k_extreme = (*k_range.start()).abs().max((*k_range.end()).abs());
        match self {
            KPredicate::Gaussian { pred, k_index } => {
                let arity = pred.form().arity();
                if *k_index >= arity || p_bar.len() != arity - 1 {
                    return Err(Error::ArityMismatch {
                        expected: arity.saturating_sub(1),
                        got: p_bar.len(),
                    });
                }
                let (a, bform, cform) = pred.form().single_out_variable(*k_index)?;
                let big_params: Vec<BigInt> = p_bar.iter().map(|&p| BigInt::from(p)).collect();
                let bval = bform.eval(&big_params)?;
                let cval = cform.eval(&big_params)?;
                let (a_int, d, beta) = clear_denominators_value(&a, &bval)?;
                let n_big = BigInt::from(u.n());
                let const_phase = pred.eta()
                    * PhaseExponent::from_ratio(&(cval / Rational::from_integer(n_big.clone())))
                        .eval();
                let dn_big = &d * &n_big;
                Ok(quadratic_phase_summand(
                    a_int,
                    beta,
                    dn_big,
                    const_phase,
                    k_extreme,
                ))
            }
            KPredicate::Perturbed(p) => {
                if !p_bar.is_empty() {
                    return Err(Error::ArityMismatch {
                        expected: 0,
                        got: p_bar.len(),
                    });
                }
                let h = p.big_h();
                let l = p.big_l();
                let ln_big = BigInt::from(l) * BigInt::from(u.n());
                Ok(quartic_phase_summand(h, l, ln_big, k_extreme))
            }
            KPredicate::Sampled(s) => {
                if s.domains().len() != p_bar.len() + 1 {
                    return Err(Error::ArityMismatch {
                        expected: s.domains().len().saturating_sub(1),
                        got: p_bar.len(),
                    });
                }
                let delta = u.spacing();
                let tail: Vec<f64> = p_bar.iter().map(|&p| p as f64 * delta).collect();
                Ok(Box::new(move |k: i64| {
                    let mut xs = Vec::with_capacity(tail.len() + 1);
                    xs.push(k as f64 * delta);
                    xs.extend_from_slice(&tail);
                    s.eval_at(&xs)
                }))
            }
        }
    }
}

/// Summand η_c·e^{−πi(Ak² + 2βk)/(Dn)} with exact modular phase reduction.
fn quadratic_phase_summand<'a>(
    a_int: BigInt,
    beta: BigInt,
    dn: BigInt,
    const_phase: Complex64,
    k_extreme: i64,
) -> Box<dyn Fn(i64) -> Complex64 + Sync + 'a> {
    let two_dn = &dn * 2;
    let fits = (|| {
        let a128 = i128::try_from(&a_int).ok()?;
        let b128 = i128::try_from(&beta).ok()?;
        let dn128 = i128::try_from(&dn).ok()?;
        let ke = k_extreme as i128;
        let worst = a128
            .checked_abs()?
            .checked_mul(ke.checked_mul(ke)?)?
            .checked_add(b128.checked_abs()?.checked_mul(ke)?.checked_mul(2)?)?;
        // Headroom for rem_euclid against 2Dn.
        worst.checked_add(dn128.checked_mul(2)?)?;
        Some((a128, b128, dn128))
    })();
    match fits {
        Some((a128, b128, dn128)) => {
            let two_dn128 = 2 * dn128;
            let dn_f = dn128 as f64;
            Box::new(move |k: i64| {
                let k = k as i128;
                let m = (a128 * k * k + 2 * b128 * k).rem_euclid(two_dn128);
                let theta = -PI * (m as f64) / dn_f;
                const_phase * Complex64::new(theta.cos(), theta.sin())
            })
        }
        None => Box::new(move |k: i64| {
            let k = BigInt::from(k);
            let num: BigInt = &a_int * &k * &k + 2 * &beta * &k;
            let m = num.mod_floor(&two_dn);
            let ratio = Rational::new(m, dn.clone());
            let theta = -PI * ratio.to_f64().unwrap_or(0.0);
            const_phase * Complex64::new(theta.cos(), theta.sin())
        }),
    }
}

/// Summand e^{−πi·H(Lk² + k⁴)/(Ln)} with exact modular phase reduction.
fn quartic_phase_summand<'a>(
    h: u64,
    l: u64,
    ln: BigInt,
    k_extreme: i64,
) -> Box<dyn Fn(i64) -> Complex64 + Sync + 'a> {
    let two_ln = &ln * 2;
    let fits = (|| {
        let h128 = h as i128;
        let l128 = l as i128;
        let ln128 = i128::try_from(&ln).ok()?;
        let ke = k_extreme as i128;
        let k2 = ke.checked_mul(ke)?;
        let k4 = k2.checked_mul(k2)?;
        let inner = l128.checked_mul(k2)?.checked_add(k4)?;
        let worst = h128.checked_mul(inner)?;
        worst.checked_add(ln128.checked_mul(2)?)?;
        Some((h128, l128, ln128))
    })();
    match fits {
        Some((h128, l128, ln128)) => {
            let two_ln128 = 2 * ln128;
            let ln_f = ln128 as f64;
            Box::new(move |k: i64| {
                let k = k as i128;
                let k2 = k * k;
                let m = (h128 * (l128 * k2 + k2 * k2)).rem_euclid(two_ln128);
                let theta = -PI * (m as f64) / ln_f;
                Complex64::new(theta.cos(), theta.sin())
            })
        }
        None => Box::new(move |k: i64| {
            let k = BigInt::from(k);
            let k2 = &k * &k;
            let num = BigInt::from(h) * (BigInt::from(l) * &k2 + &k2 * &k2);
            let m = num.mod_floor(&two_ln);
            let ratio = Rational::new(m, ln.clone());
            let theta = -PI * ratio.to_f64().unwrap_or(0.0);
            Complex64::new(theta.cos(), theta.sin())
        }),
    }
}

/// E^(m₁,m₂) ψ = √(2π/n)·Σ over lattice k with m₁ ≤ kδ ≤ m₂ (both endpoints
/// inclusive) of ψ(k, p̄).
pub fn window_quantify(
    pred: &KPredicate,
    w: Window,
    u: &FiniteUniverse,
    p_bar: &[i64],
) -> Result<QuantifierResult> {
    w.validate_for(u)?;
    let (k_lo, k_hi) = w.lattice_range(u);
    let summand = pred.make_summand(k_lo..=k_hi, p_bar, u)?;
    let outcome = sum_range(k_lo, k_hi, |k| summand(k));
    let delta = u.spacing();
    Ok(QuantifierResult {
        value: outcome.value * delta,
        window: Some((w.m1, w.m2)),
        terms: outcome.terms,
        fp_error_estimate: outcome.fp_error_estimate * delta,
    })
}

/// Evaluation mode for the local quantifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalMode {
    /// Single value at the maximal admissible symmetric window.
    FixedMax,
    /// The whole sequence m = 1..=m_max so convergence can be inspected.
    Sequence,
}

/// Local-quantifier outcome.
#[derive(Debug, Clone)]
pub enum LocalOutcome {
    Single(QuantifierResult),
    Sequence(Vec<(u64, QuantifierResult)>),
}

/// E^loc ψ: windowed quantification at symmetric windows (−m, m) up to the
/// maximal admissible half-length. Divergent integrands do not error; the
/// sequence is the caller's evidence.
pub fn local_quantify(
    pred: &KPredicate,
    u: &FiniteUniverse,
    p_bar: &[i64],
    mode: LocalMode,
) -> Result<LocalOutcome> {
    let m_max = u.max_local_window();
    if m_max == 0 {
        return Err(Error::DegenerateUniverse);
    }
    match mode {
        LocalMode::FixedMax => {
            let w = Window::symmetric(m_max as f64)?;
            Ok(LocalOutcome::Single(window_quantify(pred, w, u, p_bar)?))
        }
        LocalMode::Sequence => {
            let mut seq = Vec::with_capacity(m_max as usize);
            for m in 1..=m_max {
                let w = Window::symmetric(m as f64)?;
                seq.push((m, window_quantify(pred, w, u, p_bar)?));
            }
            Ok(LocalOutcome::Sequence(seq))
        }
    }
}

/// The summation range of the global quantifier: half-open (lo, hi] with
/// hi = −lo. One period n/P wide for admissible parameters, extended to the
/// least exact period for quadratic phases outside the admissible set.
fn global_range(pred: &KPredicate, u: &FiniteUniverse, p_bar: &[i64]) -> Result<i64> {
    match pred {
        KPredicate::Gaussian { pred, k_index } => {
            let arity = pred.form().arity();
            if *k_index >= arity || p_bar.len() != arity - 1 {
                return Err(Error::ArityMismatch {
                    expected: arity.saturating_sub(1),
                    got: p_bar.len(),
                });
            }
            let (a, bform, _c) = pred.form().single_out_variable(*k_index)?;
            let p = period(&a, &bform);
            let half = half_period_count(u.n(), &p)?;
            if a.is_zero() {
                return Ok(half);
            }
            // Extension factor s* = A / gcd(A, β): the summand satisfies
            // f(k + n/a·j) = f(k)·c₁^j with c₁ a primitive s*-th root of
            // unity, so s* consecutive a-periods sum to exactly zero unless
            // the parameters are admissible (s* = 1).
            let big_params: Vec<BigInt> = p_bar.iter().map(|&q| BigInt::from(q)).collect();
            let bval = bform.eval(&big_params)?;
            let (a_int, _d, beta) = clear_denominators_value(&a, &bval)?;
            let s_star = (&a_int / a_int.gcd(&beta)).abs();
            let s_star: i64 = s_star
                .to_i64()
                .ok_or_else(|| Error::Precondition("extension factor overflows i64".into()))?;
            half.checked_mul(s_star).ok_or_else(|| {
                Error::Precondition("extended summation range overflows i64".into())
            })
        }
        KPredicate::Perturbed(p) => {
            let period = Rational::from_integer(BigInt::from(p.big_h()));
            half_period_count(u.n(), &period)
        }
        KPredicate::Sampled(_) => Err(Error::Precondition(
            "global quantifier requires a Gaussian or perturbed-Gaussian predicate".into(),
        )),
    }
}

/// n/(2P) as a positive integer, or a divisibility error naming the factor.
fn half_period_count(n: u64, p: &Rational) -> Result<i64> {
    if !p.is_positive() {
        return Err(Error::Divisibility(format!(
            "global quantifier needs a positive period, got P = {p}"
        )));
    }
    let num = BigInt::from(n) * p.denom();
    let den = p.numer() * 2;
    let (q, r) = num.div_rem(&den);
    if !r.is_zero() || q.is_zero() {
        return Err(Error::Divisibility(format!(
            "global quantifier needs n/(2P) ∈ ℤ⁺ for period P = {p}: required factor 2·{} must divide n·{} = {num}",
            p.numer(),
            p.denom(),
        )));
    }
    q.to_i64()
        .ok_or_else(|| Error::Precondition("summation range overflows i64".into()))
}

/// Number of summand evaluations [`global_quantify`] would perform, exposed
/// so callers can apply cost ceilings before running.
pub fn global_term_count(pred: &KPredicate, u: &FiniteUniverse, p_bar: &[i64]) -> Result<u64> {
    Ok(2 * global_range(pred, u, p_bar)? as u64)
}

/// E^glob ψ = (1/√n)·Σ_{−R < k ≤ R} ψ(k) with R = n/(2P) for admissible
/// parameters and R = s*·n/(2P) otherwise (exact-vanishing extension).
pub fn global_quantify(
    pred: &KPredicate,
    u: &FiniteUniverse,
    p_bar: &[i64],
) -> Result<QuantifierResult> {
    global_quantify_shifted(pred, u, p_bar, 0)
}

/// [`global_quantify`] with the summation range translated by `shift`
/// lattice points: a verification aid for the exact cyclic periodicity of
/// quadratic phases (translating by the cyclic period must not change the
/// value beyond fp noise).
pub fn global_quantify_shifted(
    pred: &KPredicate,
    u: &FiniteUniverse,
    p_bar: &[i64],
    shift: i64,
) -> Result<QuantifierResult> {
    let half = global_range(pred, u, p_bar)?;
    let (k_lo, k_hi) = (-half + 1 + shift, half + shift);
    let summand = pred.make_summand(k_lo..=k_hi, p_bar, u)?;
    let outcome = sum_range(k_lo, k_hi, |k| summand(k));
    let scale = 1.0 / (u.n() as f64).sqrt();
    Ok(QuantifierResult {
        value: outcome.value * scale,
        window: None,
        terms: outcome.terms,
        fp_error_estimate: outcome.fp_error_estimate * scale,
    })
}

/// Discrete Gauss closed form √(1/a)·e^{σiπ/4}·e^{−σπi b²/(an)}, σ = −1
/// (SL-1.1), for the one-period global sum of e^{−πi(ak²+2kb)/n}.
///
/// Preconditions: a > 0; n/(2a) a positive integer; b admissible (A | Dб
/// after clearing denominators, i.e. membership in X_a). The phase is
/// assembled exactly in ℚ/2ℤ before the single final cos/sin.
pub fn gauss_closed_form_discrete(a: &Rational, bval: &Rational, n: u64) -> Result<Complex64> {
    if !a.is_positive() {
        return Err(Error::Precondition(format!(
            "discrete closed form needs a > 0, got a = {a}"
        )));
    }
    half_period_count(n, a)?;
    let (a_int, _d, beta) = clear_denominators_value(a, bval)?;
    if !beta.mod_floor(&a_int).is_zero() {
        return Err(Error::Precondition(format!(
            "parameter outside the admissible set X_a: {a_int} does not divide {beta}"
        )));
    }
    // e^{σiπ/4}·e^{−σπi q} = e^{−iπ·σ(q − 1/4)} with q = b²/(an).
    let q = bval * bval / (a * Rational::from_integer(BigInt::from(n)));
    let quarter = Rational::new(BigInt::from(1), BigInt::from(4));
    let ratio = (q - quarter) * Rational::from_integer(BigInt::from(SIGMA_DISCRETE));
    let modulus = (1.0 / a.to_f64().expect("positive rational")).sqrt();
    Ok(modulus * PhaseExponent::from_ratio(&ratio).eval())
}

/// Continuum Gauss closed form ∫e^{πi(ax²+2bx)}dx =
/// √(1/|a|)·e^{σ′iπ/4·sgn a}·e^{−πi b²/a}, σ′ = +1 (SL-1.2).
pub fn gauss_closed_form_continuum(a: f64, b: f64) -> Result<Complex64> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::Precondition(
            "continuum closed form needs finite a ≠ 0 (the a = 0 delta case is separate)".into(),
        ));
    }
    let modulus = (1.0 / a.abs()).sqrt();
    let phase = SIGMA_CONTINUUM as f64 * FRAC_PI_4 * a.signum() - PI * b * b / a;
    Ok(Complex64::from_polar(modulus, phase))
}

/// Half-convention Fresnel integral ∫e^{−i(ax²+2bx)/2}dx =
/// √(2π/a)·e^{−iπ/4}·e^{+ib²/(2a)} for a > 0, derived from
/// [`gauss_closed_form_continuum`] by substituting a → −a/2π, b → −b/2π.
pub fn gauss_integral_half(a: f64, b: f64) -> Result<Complex64> {
    if !(a > 0.0) || !b.is_finite() {
        return Err(Error::Precondition(
            "half-convention integral needs finite a > 0".into(),
        ));
    }
    Ok(Complex64::from_polar(
        (2.0 * PI / a).sqrt(),
        -FRAC_PI_4 + b * b / (2.0 * a),
    ))
}

/// The two-valued finite delta: δ^{(n)}(p) = √n at p = 0 and 0 elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteDelta {
    n: u64,
}

impl DiscreteDelta {
    pub fn new(u: &FiniteUniverse) -> Self {
        DiscreteDelta { n: u.n() }
    }

    pub fn value(&self, p: i64) -> f64 {
        if p == 0 {
            (self.n as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Both sides of the delta identity
/// (1/√n)·Σ_{−n/2b < k ≤ n/2b} e^{πi·2bkp/n} = b⁻¹·δ^{(n)}(p):
/// returns (computed left side, predicted right side).
///
/// Preconditions: n/(2b) a positive integer, and |p| < n/b. The second
/// condition is where the identity lives: at |p| = n/b the summand is
/// identically 1 and the left side is √n/b while δ^{(n)}(p) = 0.
pub fn discrete_delta_sum(
    b: &Rational,
    p: i64,
    u: &FiniteUniverse,
) -> Result<(Complex64, Complex64)> {
    let half = half_period_count(u.n(), b)?;
    if p.unsigned_abs() >= 2 * half as u64 {
        return Err(Error::Precondition(format!(
            "delta identity needs |p| < n/b = {}, got p = {p}",
            2 * half
        )));
    }
    let b_num = i128::try_from(b.numer())
        .map_err(|_| Error::Precondition("delta coefficient too large".into()))?;
    let b_den = i128::try_from(b.denom())
        .map_err(|_| Error::Precondition("delta coefficient too large".into()))?;
    let n128 = u.n() as i128;
    let den = b_den * n128;
    let two_den = 2 * den;
    let den_f = den as f64;
    let p128 = p as i128;
    // e^{+πi·2bkp/n}: reduce 2·b_num·k·p modulo 2·b_den·n exactly.
    let outcome = sum_range(-half + 1, half, |k| {
        let m = (2 * b_num * (k as i128) * p128).rem_euclid(two_den);
        let theta = PI * (m as f64) / den_f;
        Complex64::new(theta.cos(), theta.sin())
    });
    let computed = outcome.value / (u.n() as f64).sqrt();
    let delta = DiscreteDelta::new(u);
    let b_f = b.to_f64().expect("positive rational");
    let predicted = Complex64::new(delta.value(p) / b_f, 0.0);
    Ok((computed, predicted))
}

/// Window selection for inner products and norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowPolicy {
    /// Quantify over the given window.
    Explicit(Window),
    /// Derive the window from the predicates' effective domains; errors for
    /// predicates without bounded support.
    Auto,
}

fn resolve_window(
    psi: &KPredicate,
    phi: &KPredicate,
    policy: WindowPolicy,
) -> Result<Option<Window>> {
    match policy {
        WindowPolicy::Explicit(w) => Ok(Some(w)),
        WindowPolicy::Auto => {
            let (dp, dq) = match (psi, phi) {
                (KPredicate::Sampled(s1), KPredicate::Sampled(s2)) => {
                    (*s1.domain(), *s2.domain())
                }
                _ => {
                    return Err(Error::Precondition(
                        "unbounded effective domain: provide an explicit window".into(),
                    ))
                }
            };
            match dp.intersect(&dq) {
                Some(iv) => Ok(Some(Window::new(iv.lo(), iv.hi())?)),
                None => Ok(None), // disjoint supports: inner product is 0
            }
        }
    }
}

/// ⟨ψ|φ⟩ = E_x ψ(x)·φ(x)*: windowed quantification of the pointwise product
/// with the second factor conjugated.
pub fn inner_product(
    psi: &KPredicate,
    phi: &KPredicate,
    u: &FiniteUniverse,
    policy: WindowPolicy,
    p_bar: &[i64],
) -> Result<QuantifierResult> {
    let w = match resolve_window(psi, phi, policy)? {
        Some(w) => w,
        None => {
            return Ok(QuantifierResult {
                value: Complex64::new(0.0, 0.0),
                window: None,
                terms: 0,
                fp_error_estimate: 0.0,
            })
        }
    };
    w.validate_for(u)?;
    let (k_lo, k_hi) = w.lattice_range(u);
    let s1 = psi.make_summand(k_lo..=k_hi, p_bar, u)?;
    let s2 = phi.make_summand(k_lo..=k_hi, p_bar, u)?;
    let outcome = sum_range(k_lo, k_hi, |k| s1(k) * s2(k).conj());
    let delta = u.spacing();
    Ok(QuantifierResult {
        value: outcome.value * delta,
        window: Some((w.m1, w.m2)),
        terms: outcome.terms,
        fp_error_estimate: outcome.fp_error_estimate * delta,
    })
}

/// ‖ψ‖ = √|⟨ψ|ψ⟩| (square root applied; the defining display omits it, see
/// the ledger note).
pub fn norm(
    psi: &KPredicate,
    u: &FiniteUniverse,
    policy: WindowPolicy,
    p_bar: &[i64],
) -> Result<f64> {
    let ip = inner_product(psi, psi, u, policy, p_bar)?;
    Ok(ip.value.norm().sqrt())
}

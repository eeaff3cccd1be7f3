//! Rational quadratic forms, linear forms, and the predicate types built on
//! them: Gaussian, quartic-perturbed, and sampled.
//!
//! A Gaussian predicate in m variables is η·e^{−πi·Q(k̄)/n} with Q a quadratic
//! form over ℚ. Singling out a variable writes Q = a·x² + 2x·b(ȳ) + c(ȳ);
//! the rational a is the predicate's period with respect to x (for a = 0 the
//! scalar content of b takes over, and constants have period 1 by convention).
//! The admissible ("d-dense") parameter set for the Gauss closed form is
//! X_a = { p̄ : A | D·b(p̄) } where a = A/D after clearing both a's and b's
//! denominators by D.

use crate::error::{Error, Result};
use crate::phase::PhaseExponent;
use crate::universe::{FiniteUniverse, Interval};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::sync::Arc;

pub type Rational = BigRational;

/// Rational from a machine integer.
pub fn rat_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Rational v = p/q from machine integers, q ≠ 0.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Symmetric m×m rational coefficient matrix: Q(x̄) = x̄ᵀ·C·x̄, diagonal
/// entries carrying squared-term coefficients and off-diagonal entries the
/// halved cross terms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    arity: usize,
    coeffs: Vec<Rational>, // row-major, length arity²
}

impl QuadraticForm {
    /// Build from a row-major coefficient matrix; symmetry is enforced
    /// exactly.
    pub fn new(arity: usize, coeffs: Vec<Rational>) -> Result<Self> {
        if coeffs.len() != arity * arity {
            return Err(Error::Precondition(format!(
                "coefficient matrix must have {}² entries, got {}",
                arity,
                coeffs.len()
            )));
        }
        let form = QuadraticForm { arity, coeffs };
        for i in 0..arity {
            for j in (i + 1)..arity {
                if form.coeff(i, j) != form.coeff(j, i) {
                    return Err(Error::Precondition(format!(
                        "coefficient matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(form)
    }

    /// Univariate form a·x².
    pub fn univariate(a: Rational) -> Self {
        QuadraticForm {
            arity: 1,
            coeffs: vec![a],
        }
    }

    /// Zero form of the given arity.
    pub fn zero(arity: usize) -> Self {
        QuadraticForm {
            arity,
            coeffs: vec![Rational::zero(); arity * arity],
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coeff(&self, i: usize, j: usize) -> &Rational {
        &self.coeffs[i * self.arity + j]
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, v: Rational) {
        self.coeffs[i * self.arity + j] = v.clone();
        self.coeffs[j * self.arity + i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Exact evaluation Q(x̄) = x̄ᵀ·C·x̄ at an integer point.
    pub fn eval(&self, point: &[BigInt]) -> Result<Rational> {
        if point.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        let mut acc = Rational::zero();
        for i in 0..self.arity {
            for j in 0..self.arity {
                if !self.coeff(i, j).is_zero() {
                    let prod = Rational::from_integer(&point[i] * &point[j]);
                    acc += self.coeff(i, j) * prod;
                }
            }
        }
        Ok(acc)
    }

    /// Positive definiteness by exact leading principal minors (Sylvester):
    /// all of det(C[..k][..k]) > 0.
    pub fn is_positive_definite(&self) -> bool {
        for k in 1..=self.arity {
            if leading_minor(self, k) <= Rational::zero() {
                return false;
            }
        }
        self.arity > 0
    }

    /// Decompose Q = a·x_i² + 2·x_i·b(ȳ) + c(ȳ) where ȳ are the remaining
    /// variables in their original order. Exact; recomposition is the
    /// identity on rational polynomials.
    pub fn single_out_variable(&self, i: usize) -> Result<(Rational, LinearForm, QuadraticForm)> {
        if i >= self.arity {
            return Err(Error::Precondition(format!(
                "variable index {i} out of range for arity {}",
                self.arity
            )));
        }
        let a = self.coeff(i, i).clone();
        let rest: Vec<usize> = (0..self.arity).filter(|&j| j != i).collect();
        // x_i·x_j cross coefficient in Q is 2·C[i][j], and the decomposition
        // wants 2·x_i·b(ȳ), so b's coefficient on y_j is exactly C[i][j].
        let b = LinearForm::new(
            rest.iter().map(|&j| self.coeff(i, j).clone()).collect(),
            Rational::zero(),
        );
        let m = rest.len();
        let mut c = QuadraticForm::zero(m);
        for (r, &jr) in rest.iter().enumerate() {
            for (s, &js) in rest.iter().enumerate() {
                c.coeffs[r * m + s] = self.coeff(jr, js).clone();
            }
        }
        Ok((a, b, c))
    }

    /// Serialize as {"arity": m, "coeffs": [[num, den], …]} row-major.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "arity": self.arity,
            "coeffs": self
                .coeffs
                .iter()
                .map(|c| serde_json::json!([c.numer().to_string(), c.denom().to_string()]))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::Serialization("malformed quadratic form JSON".into());
        let arity = v.get("arity").and_then(|a| a.as_u64()).ok_or_else(bad)? as usize;
        let arr = v.get("coeffs").and_then(|c| c.as_array()).ok_or_else(bad)?;
        let mut coeffs = Vec::with_capacity(arr.len());
        for pair in arr {
            let p = pair.as_array().ok_or_else(bad)?;
            if p.len() != 2 {
                return Err(bad());
            }
            let num: BigInt = p[0]
                .as_str()
                .ok_or_else(bad)?
                .parse()
                .map_err(|_| bad())?;
            let den: BigInt = p[1]
                .as_str()
                .ok_or_else(bad)?
                .parse()
                .map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            coeffs.push(Rational::new(num, den));
        }
        QuadraticForm::new(arity, coeffs)
    }
}

fn leading_minor(form: &QuadraticForm, k: usize) -> Rational {
    // Fraction-free-ish Gaussian elimination on an exact rational copy.
    let mut m: Vec<Vec<Rational>> = (0..k)
        .map(|i| (0..k).map(|j| form.coeff(i, j).clone()).collect())
        .collect();
    let mut det = Rational::one();
    for col in 0..k {
        let pivot_row = match (col..k).find(|&r| !m[r][col].is_zero()) {
            Some(r) => r,
            None => return Rational::zero(),
        };
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in (col + 1)..k {
            let factor = &m[r][col] / &pivot;
            for c in col..k {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Linear form b(ȳ) = Σ coeffs[j]·y_j + constant over exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    coeffs: Vec<Rational>,
    constant: Rational,
}

impl LinearForm {
    pub fn new(coeffs: Vec<Rational>, constant: Rational) -> Self {
        LinearForm { coeffs, constant }
    }

    pub fn zero(arity: usize) -> Self {
        LinearForm {
            coeffs: vec![Rational::zero(); arity],
            constant: Rational::zero(),
        }
    }

    /// Single-variable form b(y) = c·y.
    pub fn single(c: Rational) -> Self {
        LinearForm {
            coeffs: vec![c],
            constant: Rational::zero(),
        }
    }

    pub fn arity(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, point: &[BigInt]) -> Result<Rational> {
        if point.len() != self.coeffs.len() {
            return Err(Error::ArityMismatch {
                expected: self.coeffs.len(),
                got: point.len(),
            });
        }
        let mut acc = self.constant.clone();
        for (c, p) in self.coeffs.iter().zip(point) {
            if !c.is_zero() {
                acc += c * Rational::from_integer(p.clone());
            }
        }
        Ok(acc)
    }

    pub fn eval_i64(&self, point: &[i64]) -> Result<Rational> {
        let big: Vec<BigInt> = point.iter().map(|&p| BigInt::from(p)).collect();
        self.eval(&big)
    }

    /// Rational content: the scalar b making b(ȳ) = b·(L₁y₁ + … + L_my_m)
    /// with coprime integers L_i. Zero for the zero form.
    pub fn content(&self) -> Rational {
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.coeffs.iter().chain(std::iter::once(&self.constant)) {
            if c.is_zero() {
                continue;
            }
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(c.denom());
        }
        if num_gcd.is_zero() {
            return Rational::zero();
        }
        Rational::new(num_gcd, den_lcm)
    }

    /// Least common denominator of all coefficients (and constant).
    pub fn denominator_lcm(&self) -> BigInt {
        let mut acc = BigInt::one();
        for c in self.coeffs.iter().chain(std::iter::once(&self.constant)) {
            acc = acc.lcm(c.denom());
        }
        acc
    }
}

/// Period of a predicate with respect to the singled-out variable:
/// the quadratic coefficient a when nonzero; otherwise the content of the
/// linear form; otherwise 1 (constant predicate, by convention, so that the
/// global sum runs over the full universe).
pub fn period(a: &Rational, b: &LinearForm) -> Rational {
    if !a.is_zero() {
        return a.clone();
    }
    let content = b.content();
    if content.is_zero() {
        Rational::one()
    } else {
        content
    }
}

/// Clear denominators jointly: returns (A, D, β) with a = A/D, β = D·b(p̄),
/// D = lcm of the denominators of a and of b's coefficients.
pub fn clear_denominators(a: &Rational, b: &LinearForm, p_bar: &[BigInt]) -> Result<(BigInt, BigInt, BigInt)> {
    let bval = b.eval(p_bar)?;
    clear_denominators_value(a, &bval)
}

/// Same as [`clear_denominators`] but with b already evaluated to a rational.
pub fn clear_denominators_value(a: &Rational, bval: &Rational) -> Result<(BigInt, BigInt, BigInt)> {
    let d: BigInt = a.denom().lcm(bval.denom());
    let a_scaled = a * Rational::from_integer(d.clone());
    let b_scaled = bval * Rational::from_integer(d.clone());
    debug_assert!(a_scaled.is_integer() && b_scaled.is_integer());
    Ok((a_scaled.to_integer(), d, b_scaled.to_integer()))
}

/// Membership of p̄ in the admissible set X_a = { p̄ : A | D·b(p̄) }.
/// Requires a ≠ 0 (for a = 0 the admissible-set notion does not apply).
pub fn dense_domain_membership(p_bar: &[BigInt], a: &Rational, b: &LinearForm) -> Result<bool> {
    if a.is_zero() {
        return Err(Error::Precondition(
            "admissible domain is undefined for a = 0 (pure-linear exponent)".into(),
        ));
    }
    let (a_int, _d, beta) = clear_denominators(a, b, p_bar)?;
    Ok(beta.mod_floor(&a_int.abs()).is_zero())
}

/// Search outward from the lattice point nearest to each target coordinate
/// for a parameter tuple inside the admissible set. The admissible set
/// contains a finite-index submodule, so a small search radius suffices.
pub fn find_dense_point_near(
    targets: &[f64],
    a: &Rational,
    b: &LinearForm,
    u: &FiniteUniverse,
) -> Result<Vec<i64>> {
    let base: Vec<i64> = targets
        .iter()
        .map(|&y| (y / u.spacing()).round() as i64)
        .collect();
    if base.is_empty() {
        return Ok(base);
    }
    // Offsets only on the first coordinate walk through all residues of the
    // submodule index, which is enough to hit the coset.
    let (a_int, _, _) = clear_denominators_value(a, &Rational::zero())?;
    let radius = a_int
        .abs()
        .to_string()
        .parse::<i64>()
        .unwrap_or(64)
        .max(1)
        * b.denominator_lcm().to_string().parse::<i64>().unwrap_or(1).max(1);
    for off in 0..=radius {
        for sign in [1i64, -1] {
            let mut cand = base.clone();
            cand[0] += sign * off;
            if !u.contains(cand[0]) {
                continue;
            }
            let big: Vec<BigInt> = cand.iter().map(|&c| BigInt::from(c)).collect();
            if dense_domain_membership(&big, a, b)? {
                return Ok(cand);
            }
            if off == 0 {
                break;
            }
        }
    }
    Err(Error::Precondition(
        "no admissible parameter point found near the requested coordinates".into(),
    ))
}

/// Gaussian predicate η·e^{−πi·Q(k̄)/n}.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPredicate {
    eta: Complex64,
    form: QuadraticForm,
}

impl GaussianPredicate {
    pub fn new(eta: Complex64, form: QuadraticForm) -> Self {
        GaussianPredicate { eta, form }
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }

    /// Exact evaluation η·e^{−πi·Q(k̄)/n}: the exponent is reduced in ℚ/2ℤ
    /// before any float appears.
    pub fn eval(&self, point: &[BigInt], u: &FiniteUniverse) -> Result<Complex64> {
        let q = self.form.eval(point)?;
        let exponent = q / Rational::from_integer(BigInt::from(u.n()));
        Ok(self.eta * PhaseExponent::from_ratio(&exponent).eval())
    }

    pub fn eval_i64(&self, point: &[i64], u: &FiniteUniverse) -> Result<Complex64> {
        let big: Vec<BigInt> = point.iter().map(|&p| BigInt::from(p)).collect();
        self.eval(&big, u)
    }
}

/// Evaluate a Gaussian predicate at a lattice tuple.
pub fn eval_gaussian(pred: &GaussianPredicate, point: &[i64], u: &FiniteUniverse) -> Result<Complex64> {
    pred.eval_i64(point, u)
}

/// Quartic-perturbed state e^{−πi·H(k² + k⁴/L)/n} with derived h = 1/(2πH)
/// and λ = n/L. The single-n denominator is the SL-1.6 convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerturbedGaussianPredicate {
    h_coeff: u64,
    l_coeff: u64,
}

impl PerturbedGaussianPredicate {
    pub fn new(h_coeff: u64, l_coeff: u64) -> Result<Self> {
        if h_coeff == 0 || l_coeff == 0 {
            return Err(Error::Precondition(
                "perturbed Gaussian needs positive integers H and L".into(),
            ));
        }
        Ok(PerturbedGaussianPredicate { h_coeff, l_coeff })
    }

    pub fn big_h(&self) -> u64 {
        self.h_coeff
    }

    pub fn big_l(&self) -> u64 {
        self.l_coeff
    }

    /// h = 1/(2πH).
    pub fn planck(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.h_coeff as f64)
    }

    /// λ = n/L.
    pub fn lambda(&self, u: &FiniteUniverse) -> f64 {
        u.n() as f64 / self.l_coeff as f64
    }

    /// λ·h = n/(2πHL), the small expansion parameter.
    pub fn lambda_h(&self, u: &FiniteUniverse) -> f64 {
        u.n() as f64 / (2.0 * std::f64::consts::PI * self.h_coeff as f64 * self.l_coeff as f64)
    }

    /// Check the universe-dependent preconditions: H | n and n/(2H) > 1.
    pub fn validate_for(&self, u: &FiniteUniverse) -> Result<()> {
        if u.n() % self.h_coeff != 0 {
            return Err(Error::Divisibility(format!(
                "H = {} must divide n = {}",
                self.h_coeff,
                u.n()
            )));
        }
        let ratio = u.n() / self.h_coeff;
        if ratio % 2 != 0 || ratio / 2 <= 1 {
            return Err(Error::Precondition(format!(
                "n/(2H) must be an integer greater than 1, got n/H = {ratio}"
            )));
        }
        Ok(())
    }

    /// Exact evaluation through the rational phase carrier.
    pub fn eval(&self, k: i64, u: &FiniteUniverse) -> Complex64 {
        let k = BigInt::from(k);
        let k2 = &k * &k;
        let k4 = &k2 * &k2;
        // H(k² + k⁴/L)/n = H(L k² + k⁴)/(L n)
        let num = BigInt::from(self.h_coeff) * (BigInt::from(self.l_coeff) * &k2 + &k4);
        let den = BigInt::from(self.l_coeff) * BigInt::from(u.n());
        PhaseExponent::from_big(num, den)
            .expect("nonzero denominator")
            .eval()
    }
}

/// Sampled predicate: an arbitrary complex-valued map with bounded support,
/// zero outside its per-variable domains.
#[derive(Clone)]
pub struct SampledPredicate {
    domains: Vec<Interval>,
    eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
}

impl SampledPredicate {
    pub fn new(
        domains: Vec<Interval>,
        eval: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
    ) -> Self {
        SampledPredicate { domains, eval }
    }

    /// Single-variable sampled predicate from a real-coordinate closure.
    pub fn univariate<F>(domain: Interval, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        SampledPredicate {
            domains: vec![domain],
            eval: Arc::new(move |xs: &[f64]| f(xs[0])),
        }
    }

    pub fn domains(&self) -> &[Interval] {
        &self.domains
    }

    pub fn domain(&self) -> &Interval {
        &self.domains[0]
    }

    /// Evaluate at embedded coordinates; zero outside the declared domain.
    pub fn eval_at(&self, xs: &[f64]) -> Complex64 {
        for (x, d) in xs.iter().zip(&self.domains) {
            if !d.contains(*x) {
                return Complex64::new(0.0, 0.0);
            }
        }
        (self.eval)(xs)
    }
}

impl std::fmt::Debug for SampledPredicate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledPredicate")
            .field("domains", &self.domains)
            .finish_non_exhaustive()
    }
}

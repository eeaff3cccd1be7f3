//! Exact rational phase arithmetic.
//!
//! Every discrete phase in the engine has the form e^{−πi·r} with r ∈ ℚ.
//! Because e^{−πi·(r+2)} = e^{−πi·r}, the exponent lives in ℚ/2ℤ and is kept
//! reduced: 0 ≤ num/den < 2 with gcd(num, den) = 1 and den ≥ 1. All additions
//! and rescalings happen on exact integers; a float appears only in the final
//! cos/sin evaluation. This is what keeps Gauss-sum identities exact: the
//! quadratic numerators (k² beyond 10¹⁶ after coefficient scaling) would
//! corrupt any floating accumulation of the exponent itself.
//!
//! Construction has an i64/i128 fast path and a big-integer fallback; the two
//! are checked against each other in the test suite.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Reduced representative of r ∈ ℚ/2ℤ, denoting the unit complex number
/// e^{−πi·num/den}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseExponent {
    num: BigInt,
    den: BigInt,
}

impl PhaseExponent {
    /// The trivial phase e^{0} = 1.
    pub fn zero() -> Self {
        PhaseExponent {
            num: BigInt::zero(),
            den: BigInt::from(1),
        }
    }

    /// Exponent num/den from machine integers. `den` must be nonzero.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Precondition("phase denominator must be nonzero".into()));
        }
        // i128 is wide enough for the mod-2 reduction of any i64 pair.
        let (mut n, mut d) = (num as i128, den as i128);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let twod = 2 * d;
        let mut r = n % twod;
        if r < 0 {
            r += twod;
        }
        let g = gcd_i128(r, d);
        Ok(PhaseExponent {
            num: BigInt::from(r / g),
            den: BigInt::from(d / g),
        })
    }

    /// Exponent from arbitrary big integers, reduced mod 2.
    pub fn from_big(num: BigInt, den: BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Precondition("phase denominator must be nonzero".into()));
        }
        let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
        let twod = &den * 2;
        let r = num.mod_floor(&twod);
        let g = r.gcd(&den);
        Ok(PhaseExponent {
            num: r / &g,
            den: den / g,
        })
    }

    /// Exponent from an exact rational.
    pub fn from_ratio(r: &BigRational) -> Self {
        PhaseExponent::from_big(r.numer().clone(), r.denom().clone())
            .expect("BigRational has nonzero denominator")
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    /// The reduced exponent as an exact rational in [0, 2).
    pub fn as_ratio(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.den.clone())
    }

    /// Sum of exponents: e^{−πi a}·e^{−πi b} = e^{−πi(a+b)}.
    pub fn add(&self, other: &Self) -> Self {
        let num = &self.num * &other.den + &other.num * &self.den;
        let den = &self.den * &other.den;
        PhaseExponent::from_big(num, den).expect("product of nonzero denominators")
    }

    /// Negated exponent (complex conjugate of the phase).
    pub fn neg(&self) -> Self {
        PhaseExponent::from_big(-self.num.clone(), self.den.clone()).unwrap()
    }

    /// Exponent scaled by an exact rational factor.
    pub fn scale(&self, factor: &BigRational) -> Self {
        let num = &self.num * factor.numer();
        let den = &self.den * factor.denom();
        PhaseExponent::from_big(num, den).expect("nonzero denominator")
    }

    /// Evaluate e^{−πi·num/den}. Quarter-turn multiples are returned exactly;
    /// everything else goes through cos/sin of an argument already reduced to
    /// [0, 2π), so no large-argument trig reduction is ever involved.
    pub fn eval(&self) -> Complex64 {
        if let (Some(n), Some(d)) = (self.num.to_i64(), self.den.to_i64()) {
            match (d, n) {
                (1, 0) => return Complex64::new(1.0, 0.0),
                (1, 1) => return Complex64::new(-1.0, 0.0),
                (2, 1) => return Complex64::new(0.0, -1.0),
                (2, 3) => return Complex64::new(0.0, 1.0),
                _ => {}
            }
        }
        // num/den ∈ [0, 2): the conversions are exact for den ≤ 2^53 and the
        // relative error stays at machine epsilon beyond that.
        let r = self.num.to_f64().unwrap_or(0.0) / self.den.to_f64().unwrap_or(1.0);
        let theta = -std::f64::consts::PI * r;
        Complex64::new(theta.cos(), theta.sin())
    }
}

impl std::fmt::Display for PhaseExponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e^(-i*pi*{}/{})", self.num, self.den)
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Evaluate e^{−πi·num/den} directly from machine integers.
pub fn eval_phase(num: i64, den: i64) -> Result<Complex64> {
    Ok(PhaseExponent::new(num, den)?.eval())
}

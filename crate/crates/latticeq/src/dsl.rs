//! Expression language for predicates and quantifier requests.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ['^' int] | '-' factor
//! atom   := number | 'pi' | 'i' | 'n' | ident | '(' expr ')' | 'exp' '(' expr ')'
//! number := int ['/' int] | decimal
//! ident  := 'k' | 'x' | 'p' digit+
//! ```
//!
//! Precedence, tightest first: `^`, unary `-`, `*` `/`, `+` `-`; binary
//! operators associate left. Exponents are integer literals with |e| ≤ 64.
//! Division (and inversion through negative exponents) is defined only for
//! scalar factors: literals, `pi`, `i`, `n`. Decimals are read exactly as
//! rationals, so `0.125` and `1/8` normalize identically.
//!
//! Normalization distributes products over sums and collects monomials with
//! exact rational-complex coefficients; `exp` factors multiply by adding
//! their normalized arguments. Classification pattern-matches the normal
//! form: η·exp(−π·i·Q(k,p̄)/n) with Q a homogeneous rational quadratic is
//! Gaussian, exp(−π·i·H·(k² + k⁴/L)/n) with positive integers H, L is a
//! perturbed Gaussian, and everything else falls back to sampled handling.

use crate::error::{Error, Result, SourcePos};
use crate::forms::{QuadraticForm, Rational};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;

const MAX_SOURCE_BYTES: usize = 64 * 1024;
const MAX_EXPONENT: i64 = 64;

/// Surface variables: the quantified lattice variable k, the embedded
/// continuum variable x, and integer parameters p1, p2, ….
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    K,
    X,
    P(u32),
}

impl std::fmt::Display for Var {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Var::K => write!(f, "k"),
            Var::X => write!(f, "x"),
            Var::P(j) => write!(f, "p{j}"),
        }
    }
}

/// Abstract syntax tree. Every node keeps its source position for errors.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt, SourcePos),
    Decimal(BigRational, SourcePos),
    Pi(SourcePos),
    ImagUnit(SourcePos),
    UniverseSize(SourcePos),
    Variable(Var, SourcePos),
    Neg(Box<Expr>, SourcePos),
    Add(Box<Expr>, Box<Expr>, SourcePos),
    Sub(Box<Expr>, Box<Expr>, SourcePos),
    Mul(Box<Expr>, Box<Expr>, SourcePos),
    Div(Box<Expr>, Box<Expr>, SourcePos),
    Pow(Box<Expr>, i64, SourcePos),
    Exp(Box<Expr>, SourcePos),
}

impl Expr {
    pub fn pos(&self) -> SourcePos {
        match self {
            Expr::Int(_, p)
            | Expr::Decimal(_, p)
            | Expr::Pi(p)
            | Expr::ImagUnit(p)
            | Expr::UniverseSize(p)
            | Expr::Variable(_, p)
            | Expr::Neg(_, p)
            | Expr::Add(_, _, p)
            | Expr::Sub(_, _, p)
            | Expr::Mul(_, _, p)
            | Expr::Div(_, _, p)
            | Expr::Pow(_, _, p)
            | Expr::Exp(_, p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Decimal(BigRational),
    Pi,
    ImagUnit,
    UniverseSize,
    ExpKw,
    Variable(Var),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            at: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> SourcePos {
        SourcePos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.at];
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn next_token(&mut self) -> Result<(Tok, SourcePos)> {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
        let pos = self.pos();
        let c = match self.peek() {
            None => return Ok((Tok::End, pos)),
            Some(c) => c,
        };
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            self.bump();
            return Ok((t, pos));
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                digits.push(self.bump() as char);
            }
            if self.peek() == Some(b'.') {
                self.bump();
                let mut frac = String::new();
                while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    frac.push(self.bump() as char);
                }
                if frac.is_empty() {
                    return Err(Error::Parse {
                        pos,
                        msg: "decimal point must be followed by digits".into(),
                    });
                }
                let whole: BigInt = digits.parse().expect("digits");
                let part: BigInt = frac.parse().expect("digits");
                let den = BigInt::from(10u32).pow(frac.len() as u32);
                let value = BigRational::new(whole * &den + part, den);
                return Ok((Tok::Decimal(value), pos));
            }
            let value: BigInt = digits.parse().expect("digits");
            return Ok((Tok::Int(value), pos));
        }
        if c.is_ascii_alphabetic() {
            let mut word = String::new();
            while matches!(self.peek(), Some(d) if d.is_ascii_alphanumeric()) {
                word.push(self.bump() as char);
            }
            let tok = match word.as_str() {
                "pi" => Tok::Pi,
                "i" => Tok::ImagUnit,
                "n" => Tok::UniverseSize,
                "exp" => Tok::ExpKw,
                "k" => Tok::Variable(Var::K),
                "x" => Tok::Variable(Var::X),
                _ => {
                    if let Some(rest) = word.strip_prefix('p') {
                        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                            let j: u32 = rest.parse().map_err(|_| Error::UnknownIdentifier {
                                name: word.clone(),
                                pos,
                            })?;
                            if j >= 1 {
                                return Ok((Tok::Variable(Var::P(j)), pos));
                            }
                        }
                    }
                    return Err(Error::UnknownIdentifier { name: word, pos });
                }
            };
            return Ok((tok, pos));
        }
        Err(Error::Parse {
            pos,
            msg: format!("unexpected character {:?}", c as char),
        })
    }
}

struct Parser {
    toks: Vec<(Tok, SourcePos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, SourcePos) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (Tok, SourcePos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<SourcePos> {
        let (t, pos) = self.bump();
        if t == want {
            Ok(pos)
        } else {
            Err(Error::Parse {
                pos,
                msg: format!("expected {what}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    let (_, pos) = self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs), pos);
                }
                Tok::Minus => {
                    let (_, pos) = self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs), pos);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    let (_, pos) = self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs), pos);
                }
                Tok::Slash => {
                    let (_, pos) = self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs), pos);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if matches!(self.peek().0, Tok::Minus) {
            let (_, pos) = self.bump();
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner), pos));
        }
        let base = self.atom()?;
        if matches!(self.peek().0, Tok::Caret) {
            let (_, caret_pos) = self.bump();
            let negate = if matches!(self.peek().0, Tok::Minus) {
                self.bump();
                true
            } else {
                false
            };
            let (t, pos) = self.bump();
            let magnitude = match t {
                Tok::Int(v) => v,
                Tok::Decimal(_) | Tok::LParen => {
                    return Err(Error::NonIntegerExponent { pos });
                }
                _ => {
                    return Err(Error::Parse {
                        pos,
                        msg: "expected integer exponent after '^'".into(),
                    });
                }
            };
            let magnitude = magnitude.to_i64().filter(|m| *m <= MAX_EXPONENT).ok_or(
                Error::Parse {
                    pos,
                    msg: format!("exponent magnitude exceeds {MAX_EXPONENT}"),
                },
            )?;
            let e = if negate { -magnitude } else { magnitude };
            return Ok(Expr::Pow(Box::new(base), e, caret_pos));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (t, pos) = self.bump();
        match t {
            Tok::Int(v) => Ok(Expr::Int(v, pos)),
            Tok::Decimal(v) => Ok(Expr::Decimal(v, pos)),
            Tok::Pi => Ok(Expr::Pi(pos)),
            Tok::ImagUnit => Ok(Expr::ImagUnit(pos)),
            Tok::UniverseSize => Ok(Expr::UniverseSize(pos)),
            Tok::Variable(v) => Ok(Expr::Variable(v, pos)),
            Tok::ExpKw => {
                self.expect(Tok::LParen, "'(' after exp")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "')' closing exp(…)")?;
                Ok(Expr::Exp(Box::new(arg), pos))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(Error::Parse {
                pos,
                msg: "expected a number, symbol, variable, or '('".into(),
            }),
        }
    }
}

/// Parse source text into an AST.
pub fn parse(text: &str) -> Result<Expr> {
    if text.len() > MAX_SOURCE_BYTES {
        return Err(Error::ExpressionTooLarge(format!(
            "{} bytes exceeds the {} byte limit",
            text.len(),
            MAX_SOURCE_BYTES
        )));
    }
    let mut lexer = Lexer::new(text);
    let mut toks = Vec::new();
    loop {
        let (t, pos) = lexer.next_token()?;
        let end = t == Tok::End;
        toks.push((t, pos));
        if end {
            break;
        }
    }
    let mut parser = Parser { toks, at: 0 };
    let e = parser.expr()?;
    let (trailing, pos) = parser.peek().clone();
    if trailing != Tok::End {
        return Err(Error::Parse {
            pos,
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

/// Exact complex-rational coefficient a + b·i.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl CRat {
    pub fn zero() -> Self {
        CRat {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        CRat {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn imag_unit() -> Self {
        CRat {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        CRat {
            re: r,
            im: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    fn add(&self, o: &CRat) -> CRat {
        CRat {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    fn mul(&self, o: &CRat) -> CRat {
        CRat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn neg(&self) -> CRat {
        CRat {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn inv(&self) -> Option<CRat> {
        let norm = &self.re * &self.re + &self.im * &self.im;
        if norm.is_zero() {
            return None;
        }
        Some(CRat {
            re: &self.re / &norm,
            im: -(&self.im / &norm),
        })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Monomial shape: variable powers, symbol powers, and an optional exp
/// factor with a fully normalized argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial {
    pub vars: Vec<(Var, i64)>,
    pub pi_pow: i64,
    pub n_pow: i64,
    pub exp_arg: Option<Box<NormalForm>>,
}

impl Monomial {
    fn unit() -> Self {
        Monomial {
            vars: Vec::new(),
            pi_pow: 0,
            n_pow: 0,
            exp_arg: None,
        }
    }

    pub fn total_var_degree(&self) -> i64 {
        self.vars.iter().map(|(_, e)| *e).sum()
    }
}

/// Sum of monomials with exact coefficients; the canonical form of an
/// expression. Terms are sorted by descending variable degree, then by
/// monomial shape, and like terms are merged with zero coefficients dropped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct NormalForm {
    terms: Vec<(Monomial, CRat)>,
}

impl NormalForm {
    fn from_terms(raw: Vec<(Monomial, CRat)>) -> Self {
        let mut merged: BTreeMap<Monomial, CRat> = BTreeMap::new();
        for (m, c) in raw {
            let slot = merged.entry(m).or_insert_with(CRat::zero);
            *slot = slot.add(&c);
        }
        let mut terms: Vec<(Monomial, CRat)> = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        terms.sort_by(|a, b| {
            b.0.total_var_degree()
                .cmp(&a.0.total_var_degree())
                .then_with(|| a.0.cmp(&b.0))
        });
        NormalForm { terms }
    }

    fn constant(c: CRat) -> Self {
        if c.is_zero() {
            return NormalForm::default();
        }
        NormalForm {
            terms: vec![(Monomial::unit(), c)],
        }
    }

    fn single(m: Monomial, c: CRat) -> Self {
        NormalForm::from_terms(vec![(m, c)])
    }

    pub fn terms(&self) -> &[(Monomial, CRat)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(&self, o: &NormalForm) -> NormalForm {
        let mut all = self.terms.clone();
        all.extend(o.terms.iter().cloned());
        NormalForm::from_terms(all)
    }

    fn neg(&self) -> NormalForm {
        NormalForm {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    fn mul(&self, o: &NormalForm) -> NormalForm {
        let mut out = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let mut powers: BTreeMap<Var, i64> = ma.vars.iter().cloned().collect();
                for (v, e) in &mb.vars {
                    *powers.entry(*v).or_insert(0) += e;
                }
                let vars: Vec<(Var, i64)> =
                    powers.into_iter().filter(|(_, e)| *e != 0).collect();
                let exp_arg = match (&ma.exp_arg, &mb.exp_arg) {
                    (None, None) => None,
                    (Some(a), None) => Some(a.clone()),
                    (None, Some(b)) => Some(b.clone()),
                    (Some(a), Some(b)) => {
                        let sum = a.add(b);
                        if sum.is_zero() {
                            None
                        } else {
                            Some(Box::new(sum))
                        }
                    }
                };
                out.push((
                    Monomial {
                        vars,
                        pi_pow: ma.pi_pow + mb.pi_pow,
                        n_pow: ma.n_pow + mb.n_pow,
                        exp_arg,
                    },
                    ca.mul(cb),
                ));
            }
        }
        NormalForm::from_terms(out)
    }

    /// Invert a scalar factor. `allow_exp` admits unit-modulus exp factors
    /// (reached through negative exponents, not through division).
    fn inv(&self, pos: SourcePos, allow_exp: bool) -> Result<NormalForm> {
        if self.terms.is_empty() {
            return Err(Error::DivisionByZero { pos });
        }
        if self.terms.len() != 1 {
            return Err(Error::DivisionByNonLiteral { pos });
        }
        let (m, c) = &self.terms[0];
        if !m.vars.is_empty() {
            return Err(Error::DivisionByNonLiteral { pos });
        }
        if m.exp_arg.is_some() && !allow_exp {
            return Err(Error::DivisionByNonLiteral { pos });
        }
        let coeff = c.inv().ok_or(Error::DivisionByZero { pos })?;
        Ok(NormalForm::single(
            Monomial {
                vars: Vec::new(),
                pi_pow: -m.pi_pow,
                n_pow: -m.n_pow,
                exp_arg: m.exp_arg.as_ref().map(|a| Box::new(a.neg())),
            },
            coeff,
        ))
    }

    fn pow(&self, e: i64, pos: SourcePos) -> Result<NormalForm> {
        if e == 0 {
            return Ok(NormalForm::constant(CRat::one()));
        }
        let base = if e < 0 { self.inv(pos, true)? } else { self.clone() };
        let mut acc = base.clone();
        for _ in 1..e.abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }
}

/// Normalize an AST into its canonical sum-of-monomials form.
pub fn normalize(e: &Expr) -> Result<NormalForm> {
    Ok(match e {
        Expr::Int(v, _) => NormalForm::constant(CRat::from_rational(BigRational::from(
            v.clone(),
        ))),
        Expr::Decimal(r, _) => NormalForm::constant(CRat::from_rational(r.clone())),
        Expr::Pi(_) => NormalForm::single(
            Monomial {
                pi_pow: 1,
                ..Monomial::unit()
            },
            CRat::one(),
        ),
        Expr::ImagUnit(_) => NormalForm::constant(CRat::imag_unit()),
        Expr::UniverseSize(_) => NormalForm::single(
            Monomial {
                n_pow: 1,
                ..Monomial::unit()
            },
            CRat::one(),
        ),
        Expr::Variable(v, _) => NormalForm::single(
            Monomial {
                vars: vec![(*v, 1)],
                ..Monomial::unit()
            },
            CRat::one(),
        ),
        Expr::Neg(inner, _) => normalize(inner)?.neg(),
        Expr::Add(a, b, _) => normalize(a)?.add(&normalize(b)?),
        Expr::Sub(a, b, _) => normalize(a)?.add(&normalize(b)?.neg()),
        Expr::Mul(a, b, _) => normalize(a)?.mul(&normalize(b)?),
        Expr::Div(a, b, pos) => {
            let den = normalize(b)?.inv(*pos, false)?;
            normalize(a)?.mul(&den)
        }
        Expr::Pow(base, e, pos) => normalize(base)?.pow(*e, *pos)?,
        Expr::Exp(arg, _) => {
            let a = normalize(arg)?;
            if a.is_zero() {
                NormalForm::constant(CRat::one())
            } else {
                NormalForm::single(
                    Monomial {
                        exp_arg: Some(Box::new(a)),
                        ..Monomial::unit()
                    },
                    CRat::one(),
                )
            }
        }
    })
}

fn write_rational(out: &mut String, r: &BigRational) {
    if r.denom().is_one() {
        let _ = write!(out, "{}", r.numer());
    } else {
        let _ = write!(out, "{}/{}", r.numer(), r.denom());
    }
}

fn write_coeff(out: &mut String, c: &CRat, has_factors: bool) {
    if c.im.is_zero() {
        if c.re.is_one() && has_factors {
            return;
        }
        write_rational(out, &c.re);
        if has_factors {
            out.push('*');
        }
        return;
    }
    if c.re.is_zero() {
        if !c.im.is_one() {
            write_rational(out, &c.im);
            out.push('*');
        }
        out.push('i');
        if has_factors {
            out.push('*');
        }
        return;
    }
    out.push('(');
    write_rational(out, &c.re);
    if c.im.is_positive() {
        out.push('+');
        if !c.im.is_one() {
            write_rational(out, &c.im);
            out.push('*');
        }
    } else {
        out.push('-');
        let mag = -c.im.clone();
        if !mag.is_one() {
            write_rational(out, &mag);
            out.push('*');
        }
    }
    out.push('i');
    out.push(')');
    if has_factors {
        out.push('*');
    }
}

fn write_power(out: &mut String, name: &str, e: i64, first: &mut bool) {
    if e == 0 {
        return;
    }
    if !*first {
        out.push('*');
    }
    *first = false;
    out.push_str(name);
    if e != 1 {
        let _ = write!(out, "^{e}");
    }
}

fn write_term(out: &mut String, m: &Monomial, c: &CRat) {
    let has_factors =
        m.pi_pow != 0 || m.n_pow != 0 || !m.vars.is_empty() || m.exp_arg.is_some();
    write_coeff(out, c, has_factors);
    let mut first = true;
    write_power(out, "pi", m.pi_pow, &mut first);
    write_power(out, "n", m.n_pow, &mut first);
    for (v, e) in &m.vars {
        write_power(out, &v.to_string(), *e, &mut first);
    }
    if let Some(arg) = &m.exp_arg {
        if !first {
            out.push('*');
        }
        out.push_str("exp(");
        out.push_str(&print_normal(arg));
        out.push(')');
    }
}

/// Render a normal form as canonical text; parsing the output normalizes
/// back to the same form.
pub fn print_normal(nf: &NormalForm) -> String {
    if nf.terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (m, c)) in nf.terms.iter().enumerate() {
        let negative = c.re.is_negative() || (c.re.is_zero() && c.im.is_negative());
        let display = if negative { c.neg() } else { c.clone() };
        if idx == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        write_term(&mut out, m, &display);
    }
    out
}

/// Normalize and render: the canonical text of an expression.
pub fn print_canonical(e: &Expr) -> Result<String> {
    Ok(print_normal(&normalize(e)?))
}

/// Classification of a normalized predicate expression.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifiedPredicate {
    /// η·exp(−π·i·Q(vars)/n) with Q a homogeneous rational quadratic form
    /// over the listed variables (sorted, k first when present).
    Gaussian {
        eta: CRat,
        vars: Vec<Var>,
        form: QuadraticForm,
    },
    /// exp(−π·i·H·(k² + k⁴/L)/n) with positive integers H and L.
    PerturbedGaussian { big_h: u64, big_l: u64 },
    /// Anything else; evaluated numerically from the AST.
    Sampled,
}

fn as_positive_u64(r: &BigRational) -> Option<u64> {
    if !r.denom().is_one() || !r.is_positive() {
        return None;
    }
    r.numer().to_u64()
}

fn match_gaussian(nf: &NormalForm) -> Option<ClassifiedPredicate> {
    if nf.terms.len() != 1 {
        return None;
    }
    let (outer, eta) = &nf.terms[0];
    if !outer.vars.is_empty() || outer.pi_pow != 0 || outer.n_pow != 0 {
        return None;
    }
    let arg = outer.exp_arg.as_ref()?;
    let mut quad: BTreeMap<(Var, Var), Rational> = BTreeMap::new();
    let mut seen: Vec<Var> = Vec::new();
    for (m, c) in arg.terms() {
        if m.pi_pow != 1 || m.n_pow != -1 || m.exp_arg.is_some() {
            return None;
        }
        if !c.re.is_zero() {
            return None;
        }
        let q = -c.im.clone();
        match m.vars.as_slice() {
            [(v, 2)] => {
                if *v == Var::X {
                    return None;
                }
                *quad.entry((*v, *v)).or_insert_with(Rational::zero) += q;
                seen.push(*v);
            }
            [(v1, 1), (v2, 1)] => {
                if *v1 == Var::X || *v2 == Var::X {
                    return None;
                }
                let half = q / Rational::from(BigInt::from(2));
                *quad.entry((*v1, *v2)).or_insert_with(Rational::zero) += half;
                seen.push(*v1);
                seen.push(*v2);
            }
            _ => return None,
        }
    }
    seen.sort();
    seen.dedup();
    if seen.is_empty() {
        return None;
    }
    let index: BTreeMap<Var, usize> = seen.iter().enumerate().map(|(idx, v)| (*v, idx)).collect();
    let arity = seen.len();
    let mut coeffs = vec![Rational::zero(); arity * arity];
    for ((v1, v2), q) in quad {
        let (i, j) = (index[&v1], index[&v2]);
        coeffs[i * arity + j] += q.clone();
        if i != j {
            coeffs[j * arity + i] += q;
        }
    }
    let form = QuadraticForm::new(arity, coeffs).ok()?;
    Some(ClassifiedPredicate::Gaussian {
        eta: eta.clone(),
        vars: seen,
        form,
    })
}

fn match_perturbed(nf: &NormalForm) -> Option<ClassifiedPredicate> {
    if nf.terms.len() != 1 {
        return None;
    }
    let (outer, coeff) = &nf.terms[0];
    if !coeff.is_one() || !outer.vars.is_empty() || outer.pi_pow != 0 || outer.n_pow != 0 {
        return None;
    }
    let arg = outer.exp_arg.as_ref()?;
    if arg.terms().len() != 2 {
        return None;
    }
    let mut quadratic: Option<BigRational> = None;
    let mut quartic: Option<BigRational> = None;
    for (m, c) in arg.terms() {
        if m.pi_pow != 1 || m.n_pow != -1 || m.exp_arg.is_some() || !c.re.is_zero() {
            return None;
        }
        match m.vars.as_slice() {
            [(Var::K, 2)] => quadratic = Some(-c.im.clone()),
            [(Var::K, 4)] => quartic = Some(-c.im.clone()),
            _ => return None,
        }
    }
    let h = as_positive_u64(&quadratic?)?;
    let h_over_l = quartic?;
    if !h_over_l.is_positive() {
        return None;
    }
    let l_ratio = BigRational::from(BigInt::from(h)) / h_over_l;
    let l = as_positive_u64(&l_ratio)?;
    Some(ClassifiedPredicate::PerturbedGaussian { big_h: h, big_l: l })
}

/// Normalize then pattern-match into the Gaussian / perturbed-Gaussian /
/// sampled trichotomy.
pub fn classify(e: &Expr) -> Result<ClassifiedPredicate> {
    let nf = normalize(e)?;
    if let Some(g) = match_gaussian(&nf) {
        return Ok(g);
    }
    if let Some(p) = match_perturbed(&nf) {
        return Ok(p);
    }
    Ok(ClassifiedPredicate::Sampled)
}

/// Variable bindings for direct AST evaluation.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    pub n: Option<u64>,
    pub k: Option<i64>,
    pub x: Option<f64>,
    pub params: BTreeMap<u32, i64>,
}

impl Bindings {
    pub fn with_n(n: u64) -> Self {
        Bindings {
            n: Some(n),
            ..Bindings::default()
        }
    }
}

/// Evaluate the AST numerically under the given bindings.
pub fn eval_expr(e: &Expr, b: &Bindings) -> Result<Complex64> {
    let unbound = |name: &str| Error::UnboundVariable(name.to_string());
    Ok(match e {
        Expr::Int(v, _) => Complex64::new(v.to_f64().unwrap_or(f64::NAN), 0.0),
        Expr::Decimal(r, _) => Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0),
        Expr::Pi(_) => Complex64::new(std::f64::consts::PI, 0.0),
        Expr::ImagUnit(_) => Complex64::new(0.0, 1.0),
        Expr::UniverseSize(_) => {
            Complex64::new(b.n.ok_or_else(|| unbound("n"))? as f64, 0.0)
        }
        Expr::Variable(Var::K, _) => {
            Complex64::new(b.k.ok_or_else(|| unbound("k"))? as f64, 0.0)
        }
        Expr::Variable(Var::X, _) => Complex64::new(b.x.ok_or_else(|| unbound("x"))?, 0.0),
        Expr::Variable(Var::P(j), _) => Complex64::new(
            *b.params
                .get(j)
                .ok_or_else(|| unbound(&format!("p{j}")))? as f64,
            0.0,
        ),
        Expr::Neg(inner, _) => -eval_expr(inner, b)?,
        Expr::Add(l, r, _) => eval_expr(l, b)? + eval_expr(r, b)?,
        Expr::Sub(l, r, _) => eval_expr(l, b)? - eval_expr(r, b)?,
        Expr::Mul(l, r, _) => eval_expr(l, b)? * eval_expr(r, b)?,
        Expr::Div(l, r, pos) => {
            let den = eval_expr(r, b)?;
            if den.norm_sqr() == 0.0 {
                return Err(Error::DivisionByZero { pos: *pos });
            }
            eval_expr(l, b)? / den
        }
        Expr::Pow(base, e, _) => eval_expr(base, b)?.powi(*e as i32),
        Expr::Exp(arg, _) => eval_expr(arg, b)?.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{eval_gaussian, rat, rat_int, GaussianPredicate};
    use crate::universe::FiniteUniverse;

    fn canon(src: &str) -> String {
        print_canonical(&parse(src).unwrap()).unwrap()
    }

    #[test]
    fn parses_quadratic_and_quartic_phases() {
        parse("exp(-pi*i*(k^2)/n)").unwrap();
        parse("exp(-pi*i*(3/2*k^2 + 2*k*p1)/n)").unwrap();
        parse("exp(-pi*i*7*(k^2 + k^4/100)/n)").unwrap();
    }

    #[test]
    fn rejects_non_integer_exponents() {
        assert!(matches!(
            parse("k^(1/2)"),
            Err(Error::NonIntegerExponent { .. })
        ));
        assert!(matches!(
            parse("k^1.5"),
            Err(Error::NonIntegerExponent { .. })
        ));
    }

    #[test]
    fn rejects_unknown_identifiers_with_position() {
        match parse("2*q + 1") {
            Err(Error::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "q");
                assert_eq!((pos.line, pos.col), (1, 3));
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
        assert!(matches!(
            parse("p0"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(parse("sin(k)"), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn reports_syntax_errors_with_position() {
        match parse("2*") {
            Err(Error::Parse { pos, .. }) => assert_eq!((pos.line, pos.col), (1, 3)),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("(k").is_err());
        assert!(parse("").is_err());
        assert!(parse("k )").is_err(), "trailing input");
        assert!(parse("2^3^2").is_err(), "exponent chaining is not in the grammar");
    }

    #[test]
    fn rejects_oversized_source() {
        let big = "1+".repeat(40_000) + "1";
        assert!(matches!(parse(&big), Err(Error::ExpressionTooLarge(_))));
    }

    #[test]
    fn normalization_collects_like_terms() {
        assert_eq!(canon("k + k"), "2*k");
        assert_eq!(canon("(k)"), "k");
        assert_eq!(canon("k*k"), "k^2");
        assert_eq!(canon("2^3 * k / 4"), "2*k");
        assert_eq!(canon("-(k - k)"), "0");
        assert_eq!(canon("k - 2*k"), "-k");
        assert_eq!(canon("pi*pi"), "pi^2");
        assert_eq!(canon("0.125"), "1/8", "decimals are exact rationals");
        assert_eq!(canon("1/8"), "1/8");
        assert_eq!(canon("i*i"), "-1");
        assert_eq!(canon("(1+i)*(1-i)"), "2");
        assert_eq!(canon("exp(k-k)"), "1");
        assert_eq!(canon("n^-1"), "n^-1");
        assert_eq!(canon("exp(k)*exp(-k)"), "1");
        assert_eq!(canon("exp(k)^-2"), "exp(-2*k)");
    }

    #[test]
    fn division_rules() {
        assert!(matches!(
            parse("k/p1").and_then(|e| normalize(&e)),
            Err(Error::DivisionByNonLiteral { .. })
        ));
        assert!(matches!(
            parse("1/(k+1)").and_then(|e| normalize(&e)),
            Err(Error::DivisionByNonLiteral { .. })
        ));
        assert!(matches!(
            parse("k/exp(k)").and_then(|e| normalize(&e)),
            Err(Error::DivisionByNonLiteral { .. })
        ));
        assert!(matches!(
            parse("1/0").and_then(|e| normalize(&e)),
            Err(Error::DivisionByZero { .. })
        ));
        assert!(matches!(
            parse("1/(2-2)").and_then(|e| normalize(&e)),
            Err(Error::DivisionByZero { .. })
        ));
        assert_eq!(canon("k^2/n"), "n^-1*k^2");
        assert_eq!(canon("k/2"), "1/2*k");
    }

    #[test]
    fn round_trip_is_idempotent() {
        for src in [
            "exp(-pi*i*(3/2*k^2 + 2*k*p1)/n)",
            "1 + i",
            "(1+2*i)*exp(-pi*i*k^2/n)",
            "k^2 - 2*k*p1 + p1^2",
            "x^3/8 - pi*x",
            "exp(-pi*i*7*(k^2 + k^4/100)/n)",
        ] {
            let once = canon(src);
            let twice = print_canonical(&parse(&once).unwrap()).unwrap();
            assert_eq!(once, twice, "canonical text must be a fixed point: {src}");
            let nf1 = normalize(&parse(src).unwrap()).unwrap();
            let nf2 = normalize(&parse(&once).unwrap()).unwrap();
            assert_eq!(nf1, nf2, "printing must preserve the normal form: {src}");
        }
    }

    #[test]
    fn classifies_gaussian_forms() {
        match classify(&parse("exp(-pi*i*(k^2+p1^2)/n)").unwrap()).unwrap() {
            ClassifiedPredicate::Gaussian { eta, vars, form } => {
                assert!(eta.is_one());
                assert_eq!(vars, vec![Var::K, Var::P(1)]);
                assert_eq!(*form.coeff(0, 0), rat_int(1));
                assert_eq!(*form.coeff(1, 1), rat_int(1));
                assert_eq!(*form.coeff(0, 1), rat_int(0));
            }
            other => panic!("expected Gaussian, got {other:?}"),
        }
        match classify(&parse("exp(-pi*i*(3/2*k^2 + 2*k*p1)/n)").unwrap()).unwrap() {
            ClassifiedPredicate::Gaussian { vars, form, .. } => {
                assert_eq!(vars, vec![Var::K, Var::P(1)]);
                assert_eq!(*form.coeff(0, 0), rat(3, 2));
                assert_eq!(*form.coeff(0, 1), rat_int(1), "cross monomial 2kp splits");
                assert_eq!(*form.coeff(1, 1), rat_int(0));
            }
            other => panic!("expected Gaussian, got {other:?}"),
        }
        match classify(&parse("2*i*exp(-pi*i*k^2/n)").unwrap()).unwrap() {
            ClassifiedPredicate::Gaussian { eta, .. } => {
                assert_eq!(eta, CRat {
                    re: BigRational::zero(),
                    im: BigRational::from(BigInt::from(2)),
                });
            }
            other => panic!("expected Gaussian, got {other:?}"),
        }
    }

    #[test]
    fn classifies_perturbed_gaussian() {
        match classify(&parse("exp(-pi*i*7*(k^2 + k^4/100)/n)").unwrap()).unwrap() {
            ClassifiedPredicate::PerturbedGaussian { big_h, big_l } => {
                assert_eq!((big_h, big_l), (7, 100));
            }
            other => panic!("expected perturbed Gaussian, got {other:?}"),
        }
        // Written with the quartic factored differently.
        match classify(&parse("exp(-pi*i*(7*k^2 + 7/100*k^4)/n)").unwrap()).unwrap() {
            ClassifiedPredicate::PerturbedGaussian { big_h, big_l } => {
                assert_eq!((big_h, big_l), (7, 100));
            }
            other => panic!("expected perturbed Gaussian, got {other:?}"),
        }
    }

    #[test]
    fn classifies_everything_else_as_sampled() {
        for src in [
            "exp(-k^2)",
            "exp(-pi*i*k^3/n)",
            "exp(-pi*i*k^2/n^2)",
            "exp(-pi*i*(k^2 + k)/n)",
            "k^2",
            "exp(-pi*i*x^2/n)",
            "2*exp(-pi*i*(k^2 + k^4/100)/n)",
        ] {
            assert_eq!(
                classify(&parse(src).unwrap()).unwrap(),
                ClassifiedPredicate::Sampled,
                "{src} must fall back to sampled"
            );
        }
    }

    #[test]
    fn flipped_sign_is_a_gaussian_with_negative_form() {
        // exp(+pi*i*k^2/n) = exp(-pi*i*(-k^2)/n): still the Gaussian shape,
        // carrying Q = -k^2.
        match classify(&parse("exp(pi*i*k^2/n)").unwrap()).unwrap() {
            ClassifiedPredicate::Gaussian { form, .. } => {
                assert_eq!(form.coeff(0, 0), &rat_int(-1));
            }
            other => panic!("expected Gaussian, got {other:?}"),
        }
    }

    #[test]
    fn classification_ignores_term_order_and_grouping() {
        let a = classify(&parse("exp(-pi*i*(k^2 + 2*k*p1)/n)").unwrap()).unwrap();
        let b = classify(&parse("exp(-pi*i*(2*p1*k + k^2)/n)").unwrap()).unwrap();
        let c = classify(&parse("exp(-(k^2 + k*p1 + p1*k)*pi*i/n)").unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn eval_matches_core_example() {
        let e = parse("exp(-pi*i*k^2/n)").unwrap();
        let mut b = Bindings::with_n(4);
        b.k = Some(2);
        let v = eval_expr(&e, &b).unwrap();
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-14, "e^{{-iπ}} = -1");
    }

    #[test]
    fn eval_agrees_with_exact_gaussian_evaluation() {
        let u = FiniteUniverse::new(12, 1).unwrap();
        let e = parse("exp(-pi*i*(3/2*k^2 + 2*k*p1)/n)").unwrap();
        let (eta, form) = match classify(&e).unwrap() {
            ClassifiedPredicate::Gaussian { eta, form, .. } => (eta.to_complex(), form),
            other => panic!("expected Gaussian, got {other:?}"),
        };
        let pred = GaussianPredicate::new(eta, form);
        let mut b = Bindings::with_n(12);
        for (k, p) in [(2i64, 3i64), (0, 0), (-5, 1), (3, -4)] {
            b.k = Some(k);
            b.params.insert(1, p);
            let direct = eval_expr(&e, &b).unwrap();
            let exact = eval_gaussian(&pred, &[k, p], &u).unwrap();
            assert!(
                (direct - exact).norm() < 1e-12,
                "k={k}, p={p}: {direct} vs {exact}"
            );
        }
    }

    #[test]
    fn eval_reports_unbound_variables() {
        let e = parse("k + p2").unwrap();
        let mut b = Bindings::with_n(8);
        b.k = Some(1);
        match eval_expr(&e, &b) {
            Err(Error::UnboundVariable(name)) => assert_eq!(name, "p2"),
            other => panic!("expected unbound variable, got {other:?}"),
        }
    }

    #[test]
    fn eval_handles_negative_powers_and_division() {
        let e = parse("n^-1 + 1/2").unwrap();
        let v = eval_expr(&e, &Bindings::with_n(4)).unwrap();
        assert!((v.re - 0.75).abs() < 1e-15);
        assert!(matches!(
            eval_expr(&parse("1/x").unwrap(), &Bindings {
                x: Some(0.0),
                ..Bindings::with_n(4)
            }),
            Err(Error::DivisionByZero { .. })
        ));
    }

    #[test]
    fn mixed_coefficients_print_parenthesized() {
        assert_eq!(canon("(1+i)*k"), "(1+i)*k");
        assert_eq!(canon("1 + i"), "(1+i)");
        assert_eq!(canon("(2-3*i)*k^2"), "(2-3*i)*k^2");
        assert_eq!(canon("-k + i*k"), "-(1-i)*k");
    }
}

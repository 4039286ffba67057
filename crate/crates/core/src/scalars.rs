//! Exact coefficient algebra `Q[z3, z5, z7, ...]`.
//!
//! The zeta symbols are formal, algebraically independent variables. Nothing
//! is ever evaluated numerically, so every identity between torsion values is
//! checked exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("zeta argument must be odd and at least 3, got {0}")]
    InvalidZeta(u32),
    #[error("division by zero")]
    ZeroDivisor,
    #[error("{numerator} is not divisible by {divisor}")]
    NotDivisible { numerator: String, divisor: String },
    #[error("invalid scalar at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

/// The formal symbol `zeta(m)` for odd `m >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZetaSymbol(u32);

impl ZetaSymbol {
    pub fn new(argument: u32) -> Result<Self, ScalarError> {
        if argument >= 3 && argument % 2 == 1 {
            Ok(ZetaSymbol(argument))
        } else {
            Err(ScalarError::InvalidZeta(argument))
        }
    }

    /// `zeta(2k+1)`, the symbol attached to degree `4k`.
    pub fn for_degree(k: u32) -> Self {
        ZetaSymbol(2 * k + 1)
    }

    pub fn argument(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ZetaSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{}", self.0)
    }
}

/// A multiset of zeta symbols, stored sorted. The empty monomial is `1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZetaMonomial(Vec<ZetaSymbol>);

impl ZetaMonomial {
    pub fn one() -> Self {
        ZetaMonomial(Vec::new())
    }

    pub fn symbol(z: ZetaSymbol) -> Self {
        ZetaMonomial(vec![z])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of zeta factors counted with multiplicity.
    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn symbols(&self) -> &[ZetaSymbol] {
        &self.0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        ZetaMonomial(v)
    }

    /// Multiset difference `self / divisor`, if `divisor` divides `self`.
    pub fn div(&self, divisor: &Self) -> Option<Self> {
        let mut rest = self.0.clone();
        for z in &divisor.0 {
            let pos = rest.iter().position(|w| w == z)?;
            rest.remove(pos);
        }
        Some(ZetaMonomial(rest))
    }

    /// Groups repeated symbols as `(symbol, power)` pairs.
    pub fn powers(&self) -> Vec<(ZetaSymbol, u32)> {
        let mut out: Vec<(ZetaSymbol, u32)> = Vec::new();
        for &z in &self.0 {
            match out.last_mut() {
                Some((last, p)) if *last == z => *p += 1,
                _ => out.push((z, 1)),
            }
        }
        out
    }
}

impl fmt::Display for ZetaMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .powers()
            .into_iter()
            .map(|(z, p)| if p == 1 { z.to_string() } else { format!("{z}^{p}") })
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// An element of `Q[zeta(3), zeta(5), ...]` in canonical form.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Scalar {
    terms: BTreeMap<ZetaMonomial, BigRational>,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::default()
    }

    pub fn one() -> Self {
        Scalar::rational(BigRational::one())
    }

    pub fn rational(q: BigRational) -> Self {
        Scalar::term(ZetaMonomial::one(), q)
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Scalar::rational(BigRational::from_integer(n.into()))
    }

    pub fn fraction(numer: i64, denom: i64) -> Self {
        Scalar::rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn zeta(z: ZetaSymbol) -> Self {
        Scalar::term(ZetaMonomial::symbol(z), BigRational::one())
    }

    pub fn term(monomial: ZetaMonomial, coefficient: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !coefficient.is_zero() {
            terms.insert(monomial, coefficient);
        }
        Scalar { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(ZetaMonomial::is_one)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ZetaMonomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, monomial: &ZetaMonomial) -> BigRational {
        self.terms.get(monomial).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Largest number of zeta factors in any term.
    pub fn max_zeta_degree(&self) -> usize {
        self.terms.keys().map(ZetaMonomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Scalar::zero();
        }
        Scalar {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&BigRational::from_integer(n.into()))
    }

    fn accumulate(&mut self, monomial: &ZetaMonomial, coefficient: &BigRational) {
        if coefficient.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(monomial) {
            Some(c) => {
                *c += coefficient;
                c.is_zero()
            }
            None => {
                self.terms.insert(monomial.clone(), coefficient.clone());
                false
            }
        };
        if remove {
            self.terms.remove(monomial);
        }
    }

    /// Exact quotient by a nonzero rational multiple of one zeta monomial.
    pub fn div_exact(&self, divisor: &Scalar) -> Result<Scalar, ScalarError> {
        let mut it = divisor.terms.iter();
        let (dm, dc) = match (it.next(), it.next()) {
            (None, _) => return Err(ScalarError::ZeroDivisor),
            (Some(t), None) => t,
            (Some(_), Some(_)) => {
                return Err(ScalarError::NotDivisible {
                    numerator: self.to_string(),
                    divisor: divisor.to_string(),
                })
            }
        };
        let mut out = Scalar::zero();
        for (m, c) in &self.terms {
            let q = m.div(dm).ok_or_else(|| ScalarError::NotDivisible {
                numerator: self.to_string(),
                divisor: divisor.to_string(),
            })?;
            out.accumulate(&q, &(c / dc));
        }
        Ok(out)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::integer(n)
    }
}

impl From<BigRational> for Scalar {
    fn from(q: BigRational) -> Self {
        Scalar::rational(q)
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(mut self, rhs: Scalar) -> Scalar {
        self += &rhs;
        self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        for (m, c) in &rhs.terms {
            self.accumulate(m, c);
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self + &(-rhs)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        let mut out = Scalar::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.accumulate(&ma.mul(mb), &(ca * cb));
            }
        }
        out
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

/// Writes `coefficient * factors`, omitting a unit coefficient when there
/// are other factors. Shared with the class printer.
pub(crate) fn write_term(
    f: &mut impl fmt::Write,
    coefficient: &BigRational,
    factors: &[String],
) -> fmt::Result {
    if factors.is_empty() {
        return write!(f, "{coefficient}");
    }
    if !coefficient.is_one() {
        write!(f, "{coefficient}*")?;
    }
    f.write_str(&factors.join("*"))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let factors = if m.is_one() { vec![] } else { vec![m.to_string()] };
            write_term(f, c, &factors)?;
        }
        Ok(())
    }
}

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> ScalarError {
        ScalarError::Parse { offset: self.pos, message: message.into() }
    }

    fn digits(&mut self) -> Result<BigInt, ScalarError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected digits"));
        }
        let s = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii digits");
        Ok(s.parse().expect("validated digits"))
    }

    fn factor(&mut self) -> Result<Scalar, ScalarError> {
        match self.peek() {
            Some(b'z') => {
                self.pos += 1;
                let arg = self.digits()?;
                let arg: u32 = arg.try_into().map_err(|_| self.error("zeta argument too large"))?;
                let z = ZetaSymbol::new(arg)?;
                let mut power = 1u32;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    power = self
                        .digits()?
                        .try_into()
                        .map_err(|_| self.error("exponent too large"))?;
                }
                let m = ZetaMonomial(vec![z; power as usize]);
                Ok(Scalar::term(m, BigRational::one()))
            }
            Some(c) if c.is_ascii_digit() => {
                let numer = self.digits()?;
                let mut denom = BigInt::one();
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    denom = self.digits()?;
                    if denom.is_zero() {
                        return Err(self.error("zero denominator"));
                    }
                }
                Ok(Scalar::rational(BigRational::new(numer, denom)))
            }
            _ => Err(self.error("expected a number or a zeta symbol")),
        }
    }

    fn term(&mut self) -> Result<Scalar, ScalarError> {
        let mut negative = false;
        while let Some(c @ (b'-' | b'+')) = self.peek() {
            self.pos += 1;
            if c == b'-' {
                negative = !negative;
            }
        }
        let mut value = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            value = &value * &self.factor()?;
        }
        Ok(if negative { -value } else { value })
    }

    fn sum(&mut self) -> Result<Scalar, ScalarError> {
        let mut value = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    value += &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    value = &value - &self.term()?;
                }
                None => return Ok(value),
                Some(_) => return Err(self.error("expected '+', '-' or end of scalar")),
            }
        }
    }
}

impl FromStr for Scalar {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Cursor { text: s.as_bytes(), pos: 0 }.sum()
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `(-1)^n` as an integer.
pub fn sign(n: i64) -> i64 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Scalar {
        text.parse().unwrap()
    }

    fn z(m: u32) -> Scalar {
        Scalar::zeta(ZetaSymbol::new(m).unwrap())
    }

    #[test]
    fn add_examples() {
        assert_eq!(&s("1/2*z3") + &s("1/2*z3"), z(3));
        assert_eq!(&s("7/3 + z5") + &Scalar::zero(), s("7/3 + z5"));
        assert!((&s("1/2*z3") + &s("-1/2*z3")).is_zero());
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&Scalar::from(2) * &s("1/2*z3"), z(3));
        let prod = &z(3) * &z(5);
        assert_eq!(prod.to_string(), "z3*z5");
        assert_eq!(prod.max_zeta_degree(), 2);
        let q_plus = s("3/4 + 2/5*z3");
        assert_eq!(&Scalar::from(-1) * &q_plus, s("-3/4 + -2/5*z3"));
    }

    #[test]
    fn div_exact_examples() {
        assert_eq!(z(3).div_exact(&z(3)).unwrap(), Scalar::one());
        let half = s("1/2*z3").div_exact(&z(3)).unwrap();
        assert_eq!(half, Scalar::fraction(1, 2));
        assert_eq!(&half * &z(3), s("1/2*z3"));
        assert!(matches!(
            Scalar::one().div_exact(&z(3)),
            Err(ScalarError::NotDivisible { .. })
        ));
        assert_eq!(z(3).div_exact(&Scalar::zero()), Err(ScalarError::ZeroDivisor));
        // divisor with two monomials is not a single monomial
        assert!(z(3).div_exact(&s("1 + z3")).is_err());
    }

    #[test]
    fn canonical_text() {
        assert_eq!(s("3/2 + -1/2*z3").to_string(), "3/2 + -1/2*z3");
        assert_eq!(s("-1/2*z3 + 3/2").to_string(), "3/2 + -1/2*z3");
        assert_eq!(s("z3*z3").to_string(), "z3^2");
        assert_eq!(s("z3^2").to_string(), "z3^2");
        assert_eq!(s("6/4").to_string(), "3/2");
        assert_eq!(s("2 - 2").to_string(), "0");
        assert_eq!(s("0").to_string(), "0");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("1/0".parse::<Scalar>(), Err(ScalarError::Parse { .. })));
        assert!(matches!("z4".parse::<Scalar>(), Err(ScalarError::InvalidZeta(4))));
        assert!(matches!("z1".parse::<Scalar>(), Err(ScalarError::InvalidZeta(1))));
        assert!("3 z3".parse::<Scalar>().is_err());
        assert!("".parse::<Scalar>().is_err());
    }

    #[test]
    fn factorials_and_signs() {
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(4), BigInt::from(24));
        assert_eq!(sign(3), -1);
        assert_eq!(sign(-2), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scalar() -> impl Strategy<Value = Scalar> {
            let term = (-6i64..=6, 1i64..=4, prop::collection::vec(prop::sample::select(vec![3u32, 5, 7]), 0..=2));
            prop::collection::vec(term, 0..4).prop_map(|terms| {
                let mut out = Scalar::zero();
                for (n, d, zs) in terms {
                    let m = ZetaMonomial(zs.into_iter().map(|a| ZetaSymbol::new(a).unwrap()).collect::<Vec<_>>());
                    let mut m = m;
                    m.0.sort_unstable();
                    out += &Scalar::term(m, BigRational::new(n.into(), d.into()));
                }
                out
            })
        }

        proptest! {
            #[test]
            fn ring_axioms(a in scalar(), b in scalar(), c in scalar()) {
                prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
                prop_assert_eq!(&a + &b, &b + &a);
                prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
                prop_assert_eq!(&a * &b, &b * &a);
                prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
                prop_assert!((&a + &(-&a)).is_zero());
            }

            #[test]
            fn text_round_trip(a in scalar()) {
                let back: Scalar = a.to_string().parse().unwrap();
                prop_assert_eq!(back, a);
            }

            #[test]
            fn division_inverts_multiplication(a in scalar(), n in 1i64..5, arg in prop::sample::select(vec![3u32, 5])) {
                let d = Scalar::zeta(ZetaSymbol::new(arg).unwrap()).scale_int(n);
                let q = (&a * &d).div_exact(&d).unwrap();
                prop_assert_eq!(&q, &a);
                if let Ok(q2) = a.div_exact(&d) {
                    prop_assert_eq!(&q2 * &d, a);
                }
            }
        }
    }
}

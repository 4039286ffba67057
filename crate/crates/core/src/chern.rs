//! Formal Chern roots, virtual bundles in split form, and homogeneous
//! cohomology classes of the base.
//!
//! A real oriented bundle is written as a sum of rotation planes (one root
//! each) plus trivial real lines. With that convention the degree `4k` part
//! of the Chern character is `sum_i m_i * x_i^(2k) / (2k)!`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalars::{factorial, write_term, Scalar, ScalarError, ZetaMonomial, ZetaSymbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChernError {
    #[error("cannot add classes of degree {left} and {right}")]
    DegreeMismatch { left: u32, right: u32 },
    #[error("invalid root name {0:?}")]
    InvalidRootName(String),
    #[error("class of degree {expected} expected, term has degree {found}")]
    InhomogeneousTerm { expected: u32, found: u32 },
    #[error("invalid class at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A first Chern class `x` of a rotation plane; cohomological degree 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChernRoot(String);

impl ChernRoot {
    /// Root names are identifiers that do not collide with zeta symbols
    /// (`z3`, `z5`, ...).
    pub fn new(name: impl Into<String>) -> Result<Self, ChernError> {
        let name = name.into();
        let mut chars = name.chars();
        let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
        let tail_ok = name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        let zeta_like = name.len() > 1
            && name.starts_with('z')
            && name[1..].chars().all(|c| c.is_ascii_digit());
        if head_ok && tail_ok && !zeta_like {
            Ok(ChernRoot(name))
        } else {
            Err(ChernError::InvalidRootName(name))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChernRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A monomial in Chern roots. Exponents are positive.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<ChernRoot, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn power(root: ChernRoot, exponent: u32) -> Self {
        let mut m = BTreeMap::new();
        if exponent > 0 {
            m.insert(root, exponent);
        }
        Monomial(m)
    }

    /// Cohomological degree, two per root factor.
    pub fn degree(&self) -> u32 {
        2 * self.0.values().sum::<u32>()
    }

    pub fn roots(&self) -> impl Iterator<Item = (&ChernRoot, u32)> {
        self.0.iter().map(|(r, &e)| (r, e))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (r, e) in &other.0 {
            *out.entry(r.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    fn factors(&self) -> Vec<String> {
        self.0
            .iter()
            .map(|(r, &e)| if e == 1 { r.to_string() } else { format!("{r}^{e}") })
            .collect()
    }
}

/// A homogeneous class with [`Scalar`] coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GradedClass {
    degree: u32,
    terms: BTreeMap<Monomial, Scalar>,
}

impl GradedClass {
    pub fn zero(degree: u32) -> Self {
        GradedClass { degree, terms: BTreeMap::new() }
    }

    pub fn monomial(monomial: Monomial, coefficient: Scalar) -> Self {
        let mut c = GradedClass::zero(monomial.degree());
        if !coefficient.is_zero() {
            c.terms.insert(monomial, coefficient);
        }
        c
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    /// Largest number of zeta factors in any coefficient.
    pub fn max_zeta_degree(&self) -> usize {
        self.terms.values().map(Scalar::max_zeta_degree).max().unwrap_or(0)
    }

    fn accumulate(&mut self, monomial: &Monomial, coefficient: &Scalar) {
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

    pub fn checked_add(&self, other: &GradedClass) -> Result<GradedClass, ChernError> {
        if self.degree != other.degree {
            return Err(ChernError::DegreeMismatch { left: self.degree, right: other.degree });
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(m, c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Scalar) -> GradedClass {
        let mut out = GradedClass::zero(self.degree);
        for (m, c) in &self.terms {
            out.accumulate(m, &(c * s));
        }
        out
    }

    pub fn scale_int(&self, n: i64) -> GradedClass {
        self.scale(&Scalar::from(n))
    }

    pub fn scale_rational(&self, q: &BigRational) -> GradedClass {
        self.scale(&Scalar::rational(q.clone()))
    }

    /// Cup product; degrees add.
    pub fn product(&self, other: &GradedClass) -> GradedClass {
        let mut out = GradedClass::zero(self.degree + other.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.accumulate(&ma.mul(mb), &(ca * cb));
            }
        }
        out
    }

    /// Parses the canonical text form. `degree` is needed for the zero class.
    pub fn parse(text: &str, degree: u32) -> Result<GradedClass, ChernError> {
        let mut p = ClassParser { text: text.as_bytes(), pos: 0 };
        let mut out = GradedClass::zero(degree);
        let mut first = true;
        loop {
            let negative = match p.peek() {
                None if !first => break,
                Some(b'+') if !first => {
                    p.pos += 1;
                    false
                }
                Some(b'-') if !first => {
                    p.pos += 1;
                    true
                }
                _ if first => false,
                _ => return Err(p.error("expected '+' or '-'")),
            };
            first = false;
            let (m, c) = p.term()?;
            let c = if negative { -c } else { c };
            if c.is_zero() {
                continue;
            }
            if m.degree() != degree {
                return Err(ChernError::InhomogeneousTerm { expected: degree, found: m.degree() });
            }
            out.accumulate(&m, &c);
        }
        Ok(out)
    }
}

impl<'a> Add<&'a GradedClass> for &'a GradedClass {
    type Output = GradedClass;
    fn add(self, rhs: &GradedClass) -> GradedClass {
        self.checked_add(rhs).expect("adding classes of different degree")
    }
}

impl Add for GradedClass {
    type Output = GradedClass;
    fn add(self, rhs: GradedClass) -> GradedClass {
        &self + &rhs
    }
}

impl Neg for &GradedClass {
    type Output = GradedClass;
    fn neg(self) -> GradedClass {
        self.scale_int(-1)
    }
}

impl Neg for GradedClass {
    type Output = GradedClass;
    fn neg(self) -> GradedClass {
        -&self
    }
}

impl<'a> Sub<&'a GradedClass> for &'a GradedClass {
    type Output = GradedClass;
    fn sub(self, rhs: &GradedClass) -> GradedClass {
        self + &(-rhs)
    }
}

impl Sub for GradedClass {
    type Output = GradedClass;
    fn sub(self, rhs: GradedClass) -> GradedClass {
        &self - &rhs
    }
}

impl<'a> Mul<&'a GradedClass> for &'a GradedClass {
    type Output = GradedClass;
    fn mul(self, rhs: &GradedClass) -> GradedClass {
        self.product(rhs)
    }
}

impl fmt::Display for GradedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (m, s) in &self.terms {
            for (zm, q) in s.terms() {
                if !first {
                    f.write_str(" + ")?;
                }
                first = false;
                let mut factors = Vec::new();
                if !zm.is_one() {
                    factors.push(zm.to_string());
                }
                factors.extend(m.factors());
                write_term(f, q, &factors)?;
            }
        }
        Ok(())
    }
}

struct ClassParser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> ClassParser<'a> {
    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.text.get(self.pos).copied()
    }

    fn error(&self, message: &str) -> ChernError {
        ChernError::Parse { offset: self.pos, message: message.to_string() }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.pos < self.text.len() && pred(self.text[self.pos]) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos]).expect("ascii")
    }

    fn exponent(&mut self) -> Result<u32, ChernError> {
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.peek();
            self.take_while(|c| c.is_ascii_digit()).parse().map_err(|_| self.error("bad exponent"))
        } else {
            Ok(1)
        }
    }

    fn term(&mut self) -> Result<(Monomial, Scalar), ChernError> {
        let mut negative = false;
        while self.peek() == Some(b'-') {
            self.pos += 1;
            negative = !negative;
        }
        let mut monomial = Monomial::one();
        let mut coefficient = Scalar::one();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    let n: BigInt = self.take_while(|c| c.is_ascii_digit()).parse().expect("digits");
                    let mut d = BigInt::one();
                    if self.peek() == Some(b'/') {
                        self.pos += 1;
                        self.peek();
                        d = self
                            .take_while(|c| c.is_ascii_digit())
                            .parse()
                            .map_err(|_| self.error("bad denominator"))?;
                        if d.is_zero() {
                            return Err(self.error("zero denominator"));
                        }
                    }
                    coefficient = &coefficient * &Scalar::rational(BigRational::new(n, d));
                }
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                    let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == b'_');
                    let e = self.exponent()?;
                    let is_zeta = name.len() > 1
                        && name.starts_with('z')
                        && name[1..].bytes().all(|c| c.is_ascii_digit());
                    if is_zeta {
                        let z = ZetaSymbol::new(name[1..].parse().map_err(|_| self.error("bad zeta"))?)?;
                        for _ in 0..e {
                            coefficient = &coefficient * &Scalar::term(ZetaMonomial::symbol(z), BigRational::one());
                        }
                    } else {
                        monomial = monomial.mul(&Monomial::power(ChernRoot::new(name)?, e));
                    }
                }
                _ => return Err(self.error("expected a factor")),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if negative {
            coefficient = -coefficient;
        }
        Ok((monomial, coefficient))
    }
}

/// A virtual oriented bundle over the base: a signed multiset of rotation
/// planes plus a (possibly negative) number of trivial real lines.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VirtualBundle {
    roots: BTreeMap<ChernRoot, i64>,
    trivial_rank: i64,
}

impl VirtualBundle {
    pub fn zero() -> Self {
        VirtualBundle::default()
    }

    pub fn line(root: ChernRoot) -> Self {
        VirtualBundle { roots: BTreeMap::from([(root, 1)]), trivial_rank: 0 }
    }

    pub fn trivial(rank: i64) -> Self {
        VirtualBundle { roots: BTreeMap::new(), trivial_rank: rank }
    }

    pub fn from_parts(roots: impl IntoIterator<Item = (ChernRoot, i64)>, trivial_rank: i64) -> Self {
        let mut v = VirtualBundle::trivial(trivial_rank);
        for (r, m) in roots {
            v.add_root(r, m);
        }
        v
    }

    fn add_root(&mut self, root: ChernRoot, multiplicity: i64) {
        let entry = self.roots.entry(root.clone()).or_insert(0);
        *entry += multiplicity;
        if *entry == 0 {
            self.roots.remove(&root);
        }
    }

    /// Real rank: two per plane plus the trivial lines.
    pub fn rank(&self) -> i64 {
        2 * self.roots.values().sum::<i64>() + self.trivial_rank
    }

    pub fn trivial_rank(&self) -> i64 {
        self.trivial_rank
    }

    pub fn roots(&self) -> impl Iterator<Item = (&ChernRoot, i64)> {
        self.roots.iter().map(|(r, &m)| (r, m))
    }

    /// True when no rotation planes survive, so every `ch4k` vanishes.
    pub fn is_stably_trivial(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn whitney_sum(&self, other: &VirtualBundle) -> VirtualBundle {
        let mut out = self.clone();
        for (r, &m) in &other.roots {
            out.add_root(r.clone(), m);
        }
        out.trivial_rank += other.trivial_rank;
        out
    }

    /// Integer multiple in the Grothendieck group.
    pub fn scale(&self, n: i64) -> VirtualBundle {
        VirtualBundle::from_parts(self.roots.iter().map(|(r, &m)| (r.clone(), m * n)), self.trivial_rank * n)
    }

    /// Drops the trivial lines, keeping what `ch4k` sees.
    pub fn stable_part(&self) -> VirtualBundle {
        VirtualBundle { roots: self.roots.clone(), trivial_rank: 0 }
    }

    /// The bundle `eta` with `self + eta` trivial of rank `total_rank`.
    pub fn complement(&self, total_rank: i64) -> VirtualBundle {
        VirtualBundle {
            roots: self.roots.iter().map(|(r, &m)| (r.clone(), -m)).collect(),
            trivial_rank: total_rank - self.trivial_rank,
        }
    }

    /// Degree `4k` part of the (halved, complexified) Chern character.
    pub fn ch4k(&self, k: u32) -> GradedClass {
        assert!(k >= 1, "ch4k needs k >= 1");
        let inv = BigRational::new(BigInt::one(), factorial(2 * k));
        let mut out = GradedClass::zero(4 * k);
        for (r, &m) in &self.roots {
            let coefficient = Scalar::rational(&inv * BigRational::from_integer(m.into()));
            out.accumulate(&Monomial::power(r.clone(), 2 * k), &coefficient);
        }
        out
    }
}

impl fmt::Display for VirtualBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut negative = Vec::new();
        for (r, &m) in &self.roots {
            let atom = format!("line({r})");
            let target = if m > 0 { &mut parts } else { &mut negative };
            for _ in 0..m.abs() {
                target.push(atom.clone());
            }
        }
        if !negative.is_empty() {
            parts.push(format!("complement({}, 0)", negative.join(" + ")));
        }
        if self.trivial_rank != 0 || parts.is_empty() {
            parts.push(format!("trivial({})", self.trivial_rank));
        }
        f.write_str(&parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(n: &str) -> ChernRoot {
        ChernRoot::new(n).unwrap()
    }

    fn class(t: &str, d: u32) -> GradedClass {
        GradedClass::parse(t, d).unwrap()
    }

    #[test]
    fn ch4k_examples() {
        let lambda = VirtualBundle::line(root("x"));
        assert_eq!(lambda.ch4k(1), class("1/2*x^2", 4));
        assert!(VirtualBundle::trivial(7).ch4k(2).is_zero());
        let eta = lambda.complement(10);
        assert_eq!(eta.ch4k(1), class("-1/2*x^2", 4));
        assert!((&lambda.ch4k(1) + &eta.ch4k(1)).is_zero());
        assert_eq!(lambda.ch4k(2), class("1/24*x^4", 8));
    }

    #[test]
    fn whitney_and_complement() {
        let xi = VirtualBundle::line(root("x"));
        assert_eq!(xi.whitney_sum(&VirtualBundle::zero()), xi);
        let two = xi.whitney_sum(&xi);
        assert_eq!(two.ch4k(1), xi.ch4k(1).scale_int(2));
        let eta = xi.complement(10);
        assert_eq!(eta.roots().collect::<Vec<_>>(), vec![(&root("x"), -1)]);
        assert_eq!(eta.trivial_rank(), 10);
        assert_eq!(eta.rank(), 8);
        assert_eq!(xi.whitney_sum(&eta), VirtualBundle::trivial(10));
        assert_eq!(VirtualBundle::zero().complement(0), VirtualBundle::zero());
    }

    #[test]
    fn class_arithmetic() {
        let c = class("1/2*x^2", 4);
        assert_eq!(c.scale(&Scalar::from(4)), class("2*x^2", 4));
        assert_eq!(&c + &GradedClass::zero(4), c);
        assert!((&c + &class("-1/2*x^2", 4)).is_zero());
        assert_eq!(
            c.checked_add(&GradedClass::zero(8)),
            Err(ChernError::DegreeMismatch { left: 4, right: 8 })
        );
        assert_eq!((&c * &c).degree(), 8);
    }

    #[test]
    fn class_text() {
        let c = class("1/2*z3*y^2 + 2*x^2", 4);
        assert_eq!(c.to_string(), "2*x^2 + 1/2*z3*y^2");
        let mixed = class("x^2 + z3*x^2 + -1*x*y", 4);
        assert_eq!(mixed.to_string(), "-1*x*y + x^2 + z3*x^2");
        assert_eq!(GradedClass::zero(4).to_string(), "0");
        assert!(GradedClass::parse("x^2 + y", 4).is_err());
    }

    #[test]
    fn root_names() {
        assert!(ChernRoot::new("lambda1").is_ok());
        assert!(ChernRoot::new("z3").is_err());
        assert!(ChernRoot::new("z").is_ok());
        assert!(ChernRoot::new("3x").is_err());
    }

    #[test]
    fn bundle_text() {
        let x = root("x");
        let y = root("y");
        let v = VirtualBundle::from_parts([(x.clone(), 2), (y.clone(), -1)], 3);
        assert_eq!(v.to_string(), "line(x) + line(x) + complement(line(y), 0) + trivial(3)");
        assert_eq!(VirtualBundle::zero().to_string(), "trivial(0)");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bundle() -> impl Strategy<Value = VirtualBundle> {
            (
                prop::collection::vec((prop::sample::select(vec!["x", "y", "w"]), -2i64..=3), 0..4),
                -3i64..6,
            )
                .prop_map(|(roots, t)| VirtualBundle::from_parts(roots.into_iter().map(|(n, m)| (root(n), m)), t))
        }

        proptest! {
            #[test]
            fn ch_is_additive(a in bundle(), b in bundle(), k in 1u32..4) {
                prop_assert_eq!(a.whitney_sum(&b).ch4k(k), &a.ch4k(k) + &b.ch4k(k));
            }

            #[test]
            fn complement_cancels(a in bundle(), n in -4i64..12, k in 1u32..4) {
                let sum = a.whitney_sum(&a.complement(n));
                prop_assert_eq!(sum.clone(), VirtualBundle::trivial(n));
                prop_assert!(sum.ch4k(k).is_zero());
            }

            #[test]
            fn class_ring(a in bundle(), b in bundle(), c in bundle()) {
                let (x, y, z) = (a.ch4k(1), b.ch4k(1), c.ch4k(1));
                prop_assert_eq!(&(&x + &y) * &z, &(&x * &z) + &(&y * &z));
                prop_assert_eq!(&x * &y, &y * &x);
                let text = (&x * &y).to_string();
                prop_assert_eq!(GradedClass::parse(&text, 8).unwrap(), &x * &y);
            }
        }
    }
}

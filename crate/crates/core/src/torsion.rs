//! Torsion theories `(k, s1, s2)` and the evaluator.
//!
//! Every torsion value is linear in the sphere parameters, so the evaluator
//! computes once per expression a pair of root combinations `(A, B)` with
//! `tau = s1 * ch4k(A) + s2 * ch4k(B)`, independent of the theory and of
//! `k`. A theory is applied only at the end.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::bundles::{evaluate, BundleError, BundlePair, Diagnostic, Handle, LeafRules, Strata, Value};
use crate::chern::{GradedClass, VirtualBundle};
use crate::scalars::{factorial, sign, Scalar, ZetaSymbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorsionError {
    #[error("torsion degree k must be at least 1")]
    InvalidDegree,
    #[error("invalid expression: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Eval(#[from] BundleError),
    #[error("theory is not decomposable: {0}")]
    NotDecomposable(String),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(Diagnostic::to_string).collect::<Vec<_>>().join("; ")
}

/// A torsion invariant of degree `4k` with sphere parameters `s1`, `s2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorsionTheory {
    k: u32,
    s1: Scalar,
    s2: Scalar,
}

impl TorsionTheory {
    pub fn new(k: u32, s1: Scalar, s2: Scalar) -> Result<Self, TorsionError> {
        if k == 0 {
            return Err(TorsionError::InvalidDegree);
        }
        Ok(TorsionTheory { k, s1, s2 })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn s1(&self) -> &Scalar {
        &self.s1
    }

    pub fn s2(&self) -> &Scalar {
        &self.s2
    }

    /// `s_n` depends on the parity of `n`; `s_0 = s_2`.
    pub fn s(&self, n: i64) -> &Scalar {
        if n.rem_euclid(2) == 1 {
            &self.s1
        } else {
            &self.s2
        }
    }

    /// Keeps `s2` only.
    pub fn even_part(&self) -> TorsionTheory {
        TorsionTheory { k: self.k, s1: Scalar::zero(), s2: self.s2.clone() }
    }

    /// Keeps `s1` only.
    pub fn odd_part(&self) -> TorsionTheory {
        TorsionTheory { k: self.k, s1: self.s1.clone(), s2: Scalar::zero() }
    }
}

impl fmt::Display for TorsionTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "custom({}, {}, {})", self.k, self.s1, self.s2)
    }
}

fn zeta(k: u32) -> Scalar {
    Scalar::zeta(ZetaSymbol::for_degree(k))
}

fn inverse_factorial(n: u32) -> BigRational {
    BigRational::new(BigInt::one(), factorial(n))
}

/// Higher Franz-Reidemeister torsion: `s_n = (-1)^(n+k) zeta(2k+1) / 2`.
pub fn fr_theory(k: u32) -> TorsionTheory {
    assert!(k >= 1, "k >= 1");
    let s1 = zeta(k).scale(&BigRational::new(sign(k as i64 + 1).into(), 2.into()));
    TorsionTheory { k, s2: -&s1, s1 }
}

/// The Miller-Morita-Mumford class `M_2k`: `s1 = 0`, `s2 = (2k)!`.
pub fn mmm_theory(k: u32) -> TorsionTheory {
    assert!(k >= 1, "k >= 1");
    TorsionTheory { k, s1: Scalar::zero(), s2: Scalar::integer(factorial(2 * k)) }
}

/// The coefficients `(a, b)` with `tau_T = a * tau_FR + b * M`.
pub fn decompose(t: &TorsionTheory) -> Result<(Scalar, Scalar), TorsionError> {
    let a = t
        .s1
        .scale_int(2 * sign(t.k as i64 + 1))
        .div_exact(&zeta(t.k))
        .map_err(|_| TorsionError::NotDecomposable(format!("s1 = {} is not a multiple of z{}", t.s1, 2 * t.k + 1)))?;
    let b = (&t.s1 + &t.s2).scale(&inverse_factorial(2 * t.k));
    Ok((a, b))
}

/// A torsion value before a theory is chosen: `s1 * ch(on_s1) + s2 * ch(on_s2)`.
/// Only the roots of the two bundles matter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Parametric {
    pub on_s1: VirtualBundle,
    pub on_s2: VirtualBundle,
}

impl Parametric {
    pub fn new(on_s1: &VirtualBundle, on_s2: &VirtualBundle) -> Self {
        Parametric { on_s1: on_s1.stable_part(), on_s2: on_s2.stable_part() }
    }

    pub fn is_zero(&self) -> bool {
        self.on_s1.is_stably_trivial() && self.on_s2.is_stably_trivial()
    }

    pub fn specialize(&self, t: &TorsionTheory) -> GradedClass {
        &self.on_s1.ch4k(t.k).scale(&t.s1) + &self.on_s2.ch4k(t.k).scale(&t.s2)
    }
}

impl Value for Parametric {
    fn zero() -> Self {
        Parametric::default()
    }

    fn add(&self, other: &Self) -> Self {
        Parametric {
            on_s1: self.on_s1.whitney_sum(&other.on_s1),
            on_s2: self.on_s2.whitney_sum(&other.on_s2),
        }
    }

    fn scale(&self, n: i64) -> Self {
        Parametric { on_s1: self.on_s1.scale(n), on_s2: self.on_s2.scale(n) }
    }
}

/// Deliberate rule corruptions for testing the verification harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Flips the sign of the `(s2 - s1) ch(xi_i)` term of the Morse rule.
    MorseSign,
}

/// Which halves of the vertical boundary are nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub d0: bool,
    pub d1: bool,
}

/// The evaluator. The default has no mutation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Evaluator {
    pub mutation: Option<Mutation>,
}

impl LeafRules for Evaluator {
    type V = Parametric;

    fn sphere(&self, xi: &VirtualBundle, n: i64) -> Parametric {
        let twice = xi.scale(2);
        let zero = VirtualBundle::zero();
        if n.rem_euclid(2) == 1 {
            Parametric::new(&twice, &zero)
        } else {
            Parametric::new(&zero, &twice)
        }
    }

    fn disk(&self, xi: &VirtualBundle) -> Parametric {
        Parametric::new(xi, xi)
    }

    fn morse_relative(&self, handles: &[Handle]) -> Parametric {
        // (-1)^i [(s1 + s2) ch(eta_i) + (s2 - s1) ch(xi_i)]
        let xi_sign = if self.mutation == Some(Mutation::MorseSign) { -1 } else { 1 };
        let mut out = Parametric::zero();
        for h in handles {
            let e = sign(h.index);
            let xi = h.xi.scale(xi_sign);
            out = out.add(&Parametric::new(
                &h.eta.whitney_sum(&xi.scale(-1)).scale(e),
                &h.eta.whitney_sum(&xi).scale(e),
            ));
        }
        out
    }
}

/// The theory-independent evaluation of one expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub dim: i64,
    pub strata: Strata<Parametric>,
}

impl Evaluation {
    /// `tau(E, d0 E)`.
    pub fn tau(&self, t: &TorsionTheory) -> GradedClass {
        self.strata.relative().value.specialize(t)
    }

    /// `tau(E, d1 E)`.
    pub fn tau_d1(&self, t: &TorsionTheory) -> GradedClass {
        self.strata.relative_d1().value.specialize(t)
    }

    /// Torsion of the whole total space, ignoring `d0`.
    pub fn tau_absolute(&self, t: &TorsionTheory) -> GradedClass {
        self.strata.whole.value.specialize(t)
    }

    pub fn tau_even(&self, t: &TorsionTheory) -> GradedClass {
        self.tau(&t.even_part())
    }

    pub fn tau_odd(&self, t: &TorsionTheory) -> GradedClass {
        self.tau(&t.odd_part())
    }

    /// `tau - a tau_FR - b M`.
    pub fn difference_torsion(&self, t: &TorsionTheory) -> Result<GradedClass, TorsionError> {
        let (a, b) = decompose(t)?;
        let fr = self.tau(&fr_theory(t.k)).scale(&a);
        let mmm = self.tau(&mmm_theory(t.k)).scale(&b);
        Ok(&(&self.tau(t) - &fr) - &mmm)
    }
}

impl Evaluator {
    pub fn new(mutation: Option<Mutation>) -> Self {
        Evaluator { mutation }
    }

    pub fn evaluate(&self, e: &BundlePair) -> Result<Evaluation, TorsionError> {
        e.validate(None).map_err(TorsionError::Invalid)?;
        for node in e.subexpressions() {
            if let BundlePair::UnionHandle(a, b) = node {
                if self.shape(b)?.d0 && !self.shape(a)?.d1 {
                    return Err(BundleError::MalformedExpression(
                        "glue needs a nonempty d1 on the first piece".into(),
                    )
                    .into());
                }
            }
        }
        Ok(Evaluation { dim: e.dim(), strata: evaluate(e, self)? })
    }

    /// Structural where possible. A Morse-type `d1` counts as empty when its
    /// Euler characteristic and torsion invariants vanish.
    pub fn shape(&self, e: &BundlePair) -> Result<Shape, TorsionError> {
        let invariant_d1 = |e: &BundlePair| -> Result<bool, TorsionError> {
            let d1 = evaluate(e, self)?.d1;
            Ok(d1.chi != 0 || !d1.value.is_zero())
        };
        Ok(match e {
            BundlePair::Trivial(t) => Shape { d0: t.chi0.is_some(), d1: t.chi1.is_some() },
            BundlePair::Disk(xi) => Shape { d0: false, d1: xi.rank() >= 1 },
            BundlePair::RelDisk(xi) => Shape { d0: xi.rank() >= 1, d1: false },
            BundlePair::Sphere { .. }
            | BundlePair::Double(_)
            | BundlePair::VerticalBoundary(_)
            | BundlePair::UnionVertical(..) => Shape { d0: false, d1: false },
            BundlePair::FiberProduct(a, b) => {
                let (sa, sb) = (self.shape(a)?, self.shape(b)?);
                Shape { d0: sa.d0 || sb.d0, d1: sa.d1 || sb.d1 }
            }
            BundlePair::UnionHandle(a, _) => Shape { d0: self.shape(a)?.d0, d1: invariant_d1(e)? },
            BundlePair::Morse { base, .. } => Shape { d0: base.is_some(), d1: invariant_d1(e)? },
            BundlePair::Hatcher { .. } => Shape { d0: true, d1: invariant_d1(e)? },
        })
    }

    pub fn is_closed(&self, e: &BundlePair) -> Result<bool, TorsionError> {
        let s = self.shape(e)?;
        Ok(!s.d0 && !s.d1)
    }
}

pub fn evaluation(e: &BundlePair) -> Result<Evaluation, TorsionError> {
    Evaluator::default().evaluate(e)
}

pub fn tau(t: &TorsionTheory, e: &BundlePair) -> Result<GradedClass, TorsionError> {
    Ok(evaluation(e)?.tau(t))
}

pub fn tau_even(t: &TorsionTheory, e: &BundlePair) -> Result<GradedClass, TorsionError> {
    Ok(evaluation(e)?.tau_even(t))
}

pub fn tau_odd(t: &TorsionTheory, e: &BundlePair) -> Result<GradedClass, TorsionError> {
    Ok(evaluation(e)?.tau_odd(t))
}

pub fn difference_torsion(t: &TorsionTheory, e: &BundlePair) -> Result<GradedClass, TorsionError> {
    evaluation(e)?.difference_torsion(t)
}

pub fn is_closed(e: &BundlePair) -> Result<bool, TorsionError> {
    Evaluator::default().is_closed(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{pad, TrivialSpec};
    use crate::chern::ChernRoot;

    fn s(text: &str) -> Scalar {
        text.parse().unwrap()
    }

    fn c(text: &str, d: u32) -> GradedClass {
        GradedClass::parse(text, d).unwrap()
    }

    fn line() -> VirtualBundle {
        VirtualBundle::line(ChernRoot::new("x").unwrap())
    }

    fn custom(k: u32, s1: &str, s2: &str) -> TorsionTheory {
        TorsionTheory::new(k, s(s1), s(s2)).unwrap()
    }

    #[test]
    fn theory_parameters() {
        assert_eq!((fr_theory(1).s1, fr_theory(1).s2), (s("1/2*z3"), s("-1/2*z3")));
        assert_eq!((fr_theory(2).s1, fr_theory(2).s2), (s("-1/2*z5"), s("1/2*z5")));
        assert_eq!((mmm_theory(1).s1, mmm_theory(1).s2), (s("0"), s("2")));
        assert_eq!(mmm_theory(3).s2, s("720"));
        assert_eq!(TorsionTheory::new(0, s("1"), s("1")), Err(TorsionError::InvalidDegree));
    }

    #[test]
    fn sphere_values() {
        let e = BundlePair::sphere(line(), 1);
        assert_eq!(tau(&fr_theory(1), &e).unwrap(), c("1/2*z3*x^2", 4));
        let s2 = BundlePair::sphere(pad(&line(), 3), 2);
        assert_eq!(tau(&mmm_theory(1), &s2).unwrap(), c("2*x^2", 4));
        assert_eq!(tau_even(&fr_theory(1), &s2).unwrap(), c("-1/2*z3*x^2", 4));
        assert!(tau_odd(&fr_theory(1), &s2).unwrap().is_zero());
        assert_eq!(tau_odd(&fr_theory(1), &e).unwrap(), c("1/2*z3*x^2", 4));
        assert!(tau_even(&fr_theory(1), &e).unwrap().is_zero());
    }

    #[test]
    fn trivial_bundles_vanish() {
        let t = BundlePair::Trivial(TrivialSpec::closed(4, 3));
        for theory in [fr_theory(1), mmm_theory(2), custom(1, "7", "z5")] {
            assert!(tau(&theory, &t).unwrap().is_zero());
        }
    }

    #[test]
    fn hatcher_generic() {
        let t = custom(1, "3/7 + z5", "-2 + z3");
        for n in 2..7 {
            let e = BundlePair::hatcher(line(), n, n + 5);
            let expected = line().ch4k(1).scale(&t.s1.scale_int(2 * sign(n + 1)));
            assert_eq!(tau(&t, &e).unwrap(), expected);
            // the two-handle Morse sum with ch(eta) = -ch(xi)
            let ch = line().ch4k(1);
            let top = &ch.scale(&(&t.s1 + &t.s2)).scale_int(-1) + &ch.scale(&(&t.s2 - &t.s1));
            assert_eq!(top.scale_int(sign(n)), expected);
            assert!(tau(&mmm_theory(1), &e).unwrap().is_zero());
        }
    }

    #[test]
    fn decomposition() {
        for k in 1..4 {
            assert_eq!(decompose(&fr_theory(k)).unwrap(), (Scalar::one(), Scalar::zero()));
            assert_eq!(decompose(&mmm_theory(k)).unwrap(), (Scalar::zero(), Scalar::one()));
        }
        assert_eq!(decompose(&custom(1, "z3", "2 - z3")).unwrap(), (s("2"), s("1")));
        assert!(matches!(decompose(&custom(1, "z5", "0")), Err(TorsionError::NotDecomposable(_))));
    }

    #[test]
    fn difference_torsion_on_linear_bundles() {
        let t = custom(2, "3*z5", "1/3 + z7");
        for e in [BundlePair::disk(pad(&line(), 4)), BundlePair::sphere(pad(&line(), 4), 3)] {
            assert!(difference_torsion(&t, &e).unwrap().is_zero());
        }
    }

    #[test]
    fn closedness() {
        assert!(is_closed(&BundlePair::sphere(line(), 1)).unwrap());
        assert!(!is_closed(&BundlePair::disk(line())).unwrap());
        let n = 3;
        let xi = pad(&line(), n);
        let m = BundlePair::morse(
            None,
            vec![Handle::new(0, VirtualBundle::zero(), xi.clone()), Handle::new(n, xi, VirtualBundle::zero())],
        );
        assert!(is_closed(&m).unwrap());
        assert!(!is_closed(&BundlePair::hatcher(line(), 3, 6)).unwrap());
    }

    #[test]
    fn boundary_mismatch_is_reported() {
        let a = BundlePair::disk(pad(&line(), 3));
        let b = BundlePair::disk(VirtualBundle::trivial(3));
        let err = evaluation(&BundlePair::union_vertical(a, b)).unwrap_err();
        assert_eq!(err, TorsionError::Eval(BundleError::BoundaryMismatch));
    }

    #[test]
    fn glue_needs_attaching_region() {
        let r = BundlePair::rel_disk(pad(&line(), 3));
        let h = BundlePair::handle(&Handle::new(1, VirtualBundle::trivial(1), VirtualBundle::trivial(2)));
        assert!(evaluation(&BundlePair::union_handle(r, h)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bundle(rank: i64) -> impl Strategy<Value = VirtualBundle> {
            (0..=rank / 2).prop_map(move |p| pad(&line().scale(p), rank))
        }

        fn morse() -> impl Strategy<Value = (i64, Vec<Handle>)> {
            (1i64..6).prop_flat_map(|n| {
                let handle = (0..=n).prop_flat_map(move |i| {
                    (bundle(i), bundle(n - i)).prop_map(move |(xi, eta)| Handle::new(i, xi, eta))
                });
                (Just(n), prop::collection::vec(handle, 1..5))
            })
        }

        fn theory() -> impl Strategy<Value = TorsionTheory> {
            (1u32..3, -5i64..5, -5i64..5, 1i64..4).prop_map(|(k, a, b, d)| {
                let s1 = Scalar::zeta(ZetaSymbol::for_degree(k)).scale_int(a);
                TorsionTheory::new(k, s1, Scalar::fraction(b, d)).unwrap()
            })
        }

        // a collar base lets the handles come in any order
        fn collared(n: i64, hs: Vec<Handle>) -> BundlePair {
            BundlePair::morse(Some(BundlePair::disk(VirtualBundle::trivial(n - 1))), hs)
        }

        proptest! {
            #[test]
            fn even_plus_odd(t in theory(), (n, hs) in morse()) {
                let e = collared(n, hs);
                let v = evaluation(&e).unwrap();
                prop_assert_eq!(&v.tau_even(&t) + &v.tau_odd(&t), v.tau(&t));
            }

            #[test]
            fn handle_order_is_irrelevant(t in theory(), (n, hs) in morse()) {
                let mut rev = hs.clone();
                rev.reverse();
                let a = tau(&t, &collared(n, hs)).unwrap();
                let b = tau(&t, &collared(n, rev)).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn uniqueness_on_morse_bundles(t in theory(), (n, hs) in morse()) {
                prop_assert!(difference_torsion(&t, &collared(n, hs)).unwrap().is_zero());
            }
        }
    }
}

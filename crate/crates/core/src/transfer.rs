//! Transfers of pullback classes and a direct computation of the MMM class
//! `M_2k(E, d0) = tr((2k)! ch4k(T^v E))` that does not go through a torsion
//! theory.

use thiserror::Error;

use crate::bundles::{evaluate, pad, BundleError, BundlePair, Diagnostic, Handle, LeafRules, Value};
use crate::chern::{GradedClass, VirtualBundle};
use crate::scalars::{factorial, sign, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransferError {
    #[error("invalid expression: {}", .0.iter().map(Diagnostic::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Eval(#[from] BundleError),
    #[error("vertical tangent bundle of {0} is not a pullback")]
    UnsupportedNode(String),
}

fn stats(e: &BundlePair) -> Result<crate::bundles::FiberStats, TransferError> {
    e.validate(None).map_err(TransferError::Invalid)?;
    Ok(e.stats()?)
}

/// A class on a total space pulled back from the base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalSpaceClass<'a> {
    pub total: &'a BundlePair,
    pub class: GradedClass,
}

impl TotalSpaceClass<'_> {
    /// Relative transfer to the base.
    pub fn transfer(&self) -> Result<GradedClass, TransferError> {
        transfer_pullback(self.total, &self.class)
    }
}

/// `tr^(E, d0)(p^* y) = chi(F, d0 F) y`.
pub fn transfer_pullback(e: &BundlePair, y: &GradedClass) -> Result<GradedClass, TransferError> {
    Ok(y.scale_int(stats(e)?.chi_rel()))
}

/// `tr^E(p^* y) = chi(F) y`, ignoring `d0`.
pub fn transfer_absolute(e: &BundlePair, y: &GradedClass) -> Result<GradedClass, TransferError> {
    Ok(y.scale_int(stats(e)?.chi_f))
}

/// The vertical tangent bundle as a pullback from the base, up to trivial
/// summands.
pub fn vertical_tangent(e: &BundlePair) -> Result<VirtualBundle, TransferError> {
    match e {
        BundlePair::Disk(xi) | BundlePair::RelDisk(xi) => Ok(xi.clone()),
        // T^v S(eta) + R = eta
        BundlePair::Sphere { xi, n } => Ok(pad(xi, n + 1).whitney_sum(&VirtualBundle::trivial(-1))),
        BundlePair::FiberProduct(a, b) => Ok(vertical_tangent(a)?.whitney_sum(&vertical_tangent(b)?)),
        other => Err(TransferError::UnsupportedNode(node_kind(other).to_string())),
    }
}

fn node_kind(e: &BundlePair) -> &'static str {
    match e {
        BundlePair::Trivial(_) => "trivial",
        BundlePair::Sphere { .. } => "sphere",
        BundlePair::Disk(_) => "disk",
        BundlePair::RelDisk(_) => "reldisk",
        BundlePair::Double(_) => "double",
        BundlePair::VerticalBoundary(_) => "dv",
        BundlePair::UnionVertical(..) => "union",
        BundlePair::UnionHandle(..) => "glue",
        BundlePair::FiberProduct(..) => "prod",
        BundlePair::Morse { .. } => "morse",
        BundlePair::Hatcher { .. } => "hatcher",
    }
}

/// A degree `4k` class, with the zero class of unknown degree allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Homogeneous(Option<GradedClass>);

impl Homogeneous {
    fn of(c: GradedClass) -> Self {
        Homogeneous(if c.is_zero() { None } else { Some(c) })
    }

    fn into_class(self, degree: u32) -> GradedClass {
        self.0.unwrap_or_else(|| GradedClass::zero(degree))
    }
}

impl Value for Homogeneous {
    fn zero() -> Self {
        Homogeneous(None)
    }

    fn add(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (Some(a), Some(b)) => Homogeneous::of(a + b),
            (Some(_), None) => self.clone(),
            (None, _) => other.clone(),
        }
    }

    fn scale(&self, n: i64) -> Self {
        Homogeneous(self.0.as_ref().map(|c| c.scale_int(n)).filter(|c| !c.is_zero()))
    }
}

/// `M_2k` on the basic pieces, from the transfer of `(2k)! ch4k(T^v)`.
struct MmmRules {
    k: u32,
    factorial: Scalar,
}

impl MmmRules {
    fn new(k: u32) -> Self {
        MmmRules { k, factorial: Scalar::integer(factorial(2 * k)) }
    }

    fn ch(&self, xi: &VirtualBundle) -> GradedClass {
        xi.ch4k(self.k).scale(&self.factorial)
    }
}

impl LeafRules for MmmRules {
    type V = Homogeneous;

    fn sphere(&self, xi: &VirtualBundle, n: i64) -> Homogeneous {
        Homogeneous::of(self.ch(xi).scale_int(1 + sign(n)))
    }

    fn disk(&self, xi: &VirtualBundle) -> Homogeneous {
        Homogeneous::of(self.ch(xi))
    }

    fn morse_relative(&self, handles: &[Handle]) -> Homogeneous {
        // push-down from the critical set, where T^v = xi_i + eta_i
        let mut out = GradedClass::zero(4 * self.k);
        for h in handles {
            out = &out + &self.ch(&h.xi.whitney_sum(&h.eta)).scale_int(sign(h.index));
        }
        Homogeneous::of(out)
    }
}

/// `M_2k(E, d0)` computed without a torsion theory: directly from `T^v`
/// where it is a pullback, otherwise from the additivity and critical-set
/// rules of the MMM class.
pub fn m2k_direct(e: &BundlePair, k: u32) -> Result<GradedClass, TransferError> {
    assert!(k >= 1, "k >= 1");
    let s = stats(e)?;
    if let Ok(tv) = vertical_tangent(e) {
        let c = tv.ch4k(k).scale(&Scalar::integer(factorial(2 * k)));
        return Ok(c.scale_int(s.chi_rel()));
    }
    let strata = evaluate(e, &MmmRules::new(k))?;
    Ok(strata.relative().value.into_class(4 * k))
}

/// The three sides of the relative transfer identities on a pullback `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeTransfer {
    /// `tr^(E, d0)(y)`
    pub relative: GradedClass,
    /// `tr^E(y) - tr^(d0 E)(y)`
    pub difference: GradedClass,
    /// `(-1)^n tr^(E, d1)(y)`
    pub dual: GradedClass,
}

impl RelativeTransfer {
    pub fn holds(&self) -> bool {
        self.relative == self.difference && self.relative == self.dual
    }
}

pub fn relative_transfer_identities(e: &BundlePair, y: &GradedClass) -> Result<RelativeTransfer, TransferError> {
    let s = stats(e)?;
    let scale = |n: i64| y.scale_int(n);
    Ok(RelativeTransfer {
        relative: transfer_pullback(e, y)?,
        difference: &scale(s.chi_f) - &scale(s.chi_d0),
        dual: scale(sign(s.dim) * s.chi_rel_d1()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chern::ChernRoot;
    use crate::torsion::{mmm_theory, tau};

    fn line() -> VirtualBundle {
        VirtualBundle::line(ChernRoot::new("x").unwrap())
    }

    fn c(text: &str) -> GradedClass {
        GradedClass::parse(text, 4).unwrap()
    }

    #[test]
    fn pullback_transfer() {
        let y = c("x^2");
        let odd = BundlePair::sphere(line(), 1);
        assert!(transfer_pullback(&odd, &y).unwrap().is_zero());
        let s2 = BundlePair::sphere(pad(&line(), 3), 2);
        assert_eq!(transfer_pullback(&s2, &y).unwrap(), y.scale_int(2));
        for i in 1..5 {
            let r = BundlePair::rel_disk(VirtualBundle::trivial(i));
            assert_eq!(transfer_pullback(&r, &y).unwrap(), y.scale_int(sign(i)));
        }
    }

    #[test]
    fn vertical_tangents() {
        let eta = pad(&line(), 3);
        let tv = vertical_tangent(&BundlePair::sphere(eta.clone(), 2)).unwrap();
        assert_eq!(tv.rank(), 2);
        assert_eq!(tv.ch4k(1), eta.ch4k(1));
        let xi = pad(&line(), 2);
        let p = BundlePair::product(BundlePair::disk(xi.clone()), BundlePair::disk(eta.clone()));
        assert_eq!(vertical_tangent(&p).unwrap(), xi.whitney_sum(&eta));
        assert!(vertical_tangent(&BundlePair::disk(VirtualBundle::trivial(3))).unwrap().ch4k(2).is_zero());
        assert!(matches!(
            vertical_tangent(&BundlePair::double(BundlePair::disk(xi))),
            Err(TransferError::UnsupportedNode(_))
        ));
    }

    #[test]
    fn direct_mmm_values() {
        for k in 1..4 {
            let xi = pad(&line(), 5);
            let f = Scalar::integer(factorial(2 * k));
            let s4 = BundlePair::sphere(xi.clone(), 4);
            assert_eq!(m2k_direct(&s4, k).unwrap(), xi.ch4k(k).scale(&f).scale_int(2));
            let d = BundlePair::disk(xi.clone());
            assert_eq!(m2k_direct(&d, k).unwrap(), xi.ch4k(k).scale(&f));
            let s3 = BundlePair::sphere(pad(&line(), 4), 3);
            assert!(m2k_direct(&s3, k).unwrap().is_zero());
        }
        let s2 = BundlePair::sphere(line(), 2);
        assert_eq!(m2k_direct(&s2, 1).unwrap(), c("2*x^2"));
    }

    #[test]
    fn engine_route_agrees_on_doubles_and_morse() {
        let xi = pad(&line(), 4);
        let exprs = [
            BundlePair::double(BundlePair::disk(xi.clone())),
            BundlePair::morse(None, vec![Handle::new(0, VirtualBundle::zero(), xi.clone()), Handle::new(4, xi.clone(), VirtualBundle::zero())]),
            BundlePair::hatcher(line(), 3, 7),
        ];
        for e in exprs {
            assert_eq!(m2k_direct(&e, 2).unwrap(), tau(&mmm_theory(2), &e).unwrap());
        }
    }

    #[test]
    fn relative_identities() {
        let y = c("1/2*x^2");
        for e in [
            BundlePair::rel_disk(pad(&line(), 3)),
            BundlePair::sphere(pad(&line(), 3), 2),
            BundlePair::hatcher(line(), 4, 10),
        ] {
            let r = relative_transfer_identities(&e, &y).unwrap();
            assert!(r.holds(), "{e}: {r:?}");
        }
        let r = BundlePair::rel_disk(VirtualBundle::trivial(2));
        let s = r.stats().unwrap();
        assert_eq!(s.chi_f - s.chi_d0, s.chi_rel());
    }

    #[test]
    fn transfer_is_additive_on_unions() {
        let xi = pad(&line(), 3);
        let d = BundlePair::disk(xi.clone());
        let u = BundlePair::union_vertical(d.clone(), d.clone());
        let y = c("x^2");
        let parts = &(&transfer_absolute(&d, &y).unwrap() + &transfer_absolute(&d, &y).unwrap())
            - &transfer_absolute(&BundlePair::vertical_boundary(d), &y).unwrap();
        assert_eq!(transfer_absolute(&u, &y).unwrap(), parts);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn transfer_is_linear(n in 1i64..6, a in -4i64..4, b in -4i64..4) {
                let e = BundlePair::sphere(pad(&line(), n + 1), n);
                let y = c("x^2");
                let z = c("1/3*x^2");
                let lhs = transfer_pullback(&e, &(&y.scale_int(a) + &z.scale_int(b))).unwrap();
                let rhs = &transfer_pullback(&e, &y).unwrap().scale_int(a) + &transfer_pullback(&e, &z).unwrap().scale_int(b);
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}

//! Expression trees for smooth bundle pairs `(E, d0 E) -> B`.
//!
//! Every node is evaluated on four strata of its fiber: the whole fiber
//! `F`, the two halves `d0 F`, `d1 F` of its vertical boundary, and their
//! common corner. Each stratum carries an Euler characteristic and a value
//! in some additive group chosen by a [`LeafRules`] implementation. Gluing
//! is inclusion-exclusion on these pieces and fiber products multiply them
//! as dual numbers `(chi, v)`, so all combinators are shared between the
//! torsion evaluator, the direct MMM computation and the Euler
//! characteristic bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::chern::{ChernRoot, VirtualBundle};
use crate::scalars::sign;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BundleError {
    #[error("fiber dimensions {left} and {right} differ")]
    DimensionMismatch { left: i64, right: i64 },
    #[error("{what}: expected rank {expected}, found {found}")]
    RankMismatch { what: String, expected: i64, found: i64 },
    #[error("{what} has rank {rank}, so it must be trivial")]
    NontrivialLowRank { what: String, rank: i64 },
    #[error("root {0} is not declared")]
    UndeclaredRoot(String),
    #[error("malformed expression: {0}")]
    MalformedExpression(String),
    #[error("vertical boundaries of the glued pieces differ")]
    BoundaryMismatch,
    #[error("no rule for {0}")]
    UnsupportedNode(String),
}

/// One validation failure. `path` lists child indices from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: Vec<usize>,
    pub node: String,
    pub error: BundleError,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
        write!(f, "{} at [{}] in {}", self.error, path.join("."), self.node)
    }
}

/// Roots and named bundles over the abstract base.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    roots: BTreeSet<ChernRoot>,
    bundles: BTreeMap<String, VirtualBundle>,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace::default()
    }

    pub fn with_roots(roots: impl IntoIterator<Item = ChernRoot>) -> Self {
        Workspace { roots: roots.into_iter().collect(), bundles: BTreeMap::new() }
    }

    /// Returns false if the root was already declared.
    pub fn declare_root(&mut self, root: ChernRoot) -> bool {
        self.roots.insert(root)
    }

    pub fn has_root(&self, root: &ChernRoot) -> bool {
        self.roots.contains(root)
    }

    pub fn roots(&self) -> impl Iterator<Item = &ChernRoot> {
        self.roots.iter()
    }

    /// Returns the first undeclared root of `xi`, if any.
    pub fn check_bundle(&self, xi: &VirtualBundle) -> Result<(), BundleError> {
        match xi.roots().find(|(r, _)| !self.roots.contains(*r)) {
            Some((r, _)) => Err(BundleError::UndeclaredRoot(r.to_string())),
            None => Ok(()),
        }
    }

    /// Returns false if the name is taken.
    pub fn define_bundle(&mut self, name: &str, xi: VirtualBundle) -> bool {
        if self.bundles.contains_key(name) {
            return false;
        }
        self.bundles.insert(name.to_string(), xi);
        true
    }

    pub fn bundle(&self, name: &str) -> Option<&VirtualBundle> {
        self.bundles.get(name)
    }
}

/// Euler characteristics of the four strata of the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiberStats {
    pub dim: i64,
    pub chi_f: i64,
    pub chi_d0: i64,
    pub chi_d1: i64,
    pub chi_corner: i64,
}

impl FiberStats {
    /// `chi(F, d0 F)`.
    pub fn chi_rel(&self) -> i64 {
        self.chi_f - self.chi_d0
    }

    /// `chi(F, d1 F)`.
    pub fn chi_rel_d1(&self) -> i64 {
        self.chi_f - self.chi_d1
    }

    /// `chi` of the whole vertical boundary.
    pub fn chi_boundary(&self) -> i64 {
        self.chi_d0 + self.chi_d1 - self.chi_corner
    }
}

/// A product bundle `B x F` described only by its Euler characteristics.
/// Absent boundary strata are empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrivialSpec {
    pub dim: i64,
    pub chi: i64,
    pub chi0: Option<i64>,
    pub chi1: Option<i64>,
    pub corner: Option<i64>,
}

impl TrivialSpec {
    pub fn closed(dim: i64, chi: i64) -> Self {
        TrivialSpec { dim, chi, chi0: None, chi1: None, corner: None }
    }

    pub fn has_boundary(&self) -> bool {
        self.chi0.is_some() || self.chi1.is_some() || self.corner.is_some()
    }

    pub fn stats(&self) -> FiberStats {
        FiberStats {
            dim: self.dim,
            chi_f: self.chi,
            chi_d0: self.chi0.unwrap_or(0),
            chi_d1: self.chi1.unwrap_or(0),
            chi_corner: self.corner.unwrap_or(0),
        }
    }
}

/// A critical point of index `index` with negative and positive eigenspace
/// bundles `xi` and `eta`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle {
    pub index: i64,
    pub xi: VirtualBundle,
    pub eta: VirtualBundle,
}

impl Handle {
    pub fn new(index: i64, xi: VirtualBundle, eta: VirtualBundle) -> Self {
        Handle { index, xi, eta }
    }

    /// The same critical point seen from the other end of the bundle.
    pub fn reversed(&self, dim: i64) -> Handle {
        Handle { index: dim - self.index, xi: self.eta.clone(), eta: self.xi.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BundlePair {
    Trivial(TrivialSpec),
    /// `S^n(xi)`; `xi` is padded with trivial lines up to rank `n + 1`.
    Sphere { xi: VirtualBundle, n: i64 },
    /// `D^n(xi)` with `n = rank xi` and empty `d0`.
    Disk(VirtualBundle),
    /// The pair `(D^i(xi), S^(i-1)(xi))`.
    RelDisk(VirtualBundle),
    Double(Box<BundlePair>),
    VerticalBoundary(Box<BundlePair>),
    /// Glued along the whole vertical boundary.
    UnionVertical(Box<BundlePair>, Box<BundlePair>),
    /// The second piece attached along its `d0` to the `d1` of the first.
    UnionHandle(Box<BundlePair>, Box<BundlePair>),
    FiberProduct(Box<BundlePair>, Box<BundlePair>),
    /// A collar on `base` (empty when `None`) with handles attached in order.
    Morse { base: Option<Box<BundlePair>>, handles: Vec<Handle> },
    Hatcher { xi: VirtualBundle, n: i64, total: i64 },
}

impl BundlePair {
    pub fn sphere(xi: VirtualBundle, n: i64) -> Self {
        BundlePair::Sphere { xi, n }
    }

    pub fn disk(xi: VirtualBundle) -> Self {
        BundlePair::Disk(xi)
    }

    pub fn rel_disk(xi: VirtualBundle) -> Self {
        BundlePair::RelDisk(xi)
    }

    pub fn double(e: BundlePair) -> Self {
        BundlePair::Double(Box::new(e))
    }

    pub fn vertical_boundary(e: BundlePair) -> Self {
        BundlePair::VerticalBoundary(Box::new(e))
    }

    pub fn union_vertical(a: BundlePair, b: BundlePair) -> Self {
        BundlePair::UnionVertical(Box::new(a), Box::new(b))
    }

    pub fn union_handle(a: BundlePair, b: BundlePair) -> Self {
        BundlePair::UnionHandle(Box::new(a), Box::new(b))
    }

    pub fn product(a: BundlePair, b: BundlePair) -> Self {
        BundlePair::FiberProduct(Box::new(a), Box::new(b))
    }

    pub fn morse(base: Option<BundlePair>, handles: Vec<Handle>) -> Self {
        BundlePair::Morse { base: base.map(Box::new), handles }
    }

    pub fn hatcher(xi: VirtualBundle, n: i64, total: i64) -> Self {
        BundlePair::Hatcher { xi, n, total }
    }

    /// A single handle `D^i(xi) x D^(n-i)(eta)` as a relative pair.
    pub fn handle(h: &Handle) -> Self {
        BundlePair::product(BundlePair::rel_disk(h.xi.clone()), BundlePair::disk(h.eta.clone()))
    }

    /// Fiber dimension. Only meaningful on valid expressions.
    pub fn dim(&self) -> i64 {
        match self {
            BundlePair::Trivial(t) => t.dim,
            BundlePair::Sphere { n, .. } => *n,
            BundlePair::Disk(xi) | BundlePair::RelDisk(xi) => xi.rank(),
            BundlePair::Double(e) => e.dim(),
            BundlePair::VerticalBoundary(e) => e.dim() - 1,
            BundlePair::UnionVertical(a, _) | BundlePair::UnionHandle(a, _) => a.dim(),
            BundlePair::FiberProduct(a, b) => a.dim() + b.dim(),
            BundlePair::Morse { base: Some(b), .. } => b.dim() + 1,
            BundlePair::Morse { base: None, handles } => {
                handles.first().map_or(0, |h| h.index + h.eta.rank())
            }
            BundlePair::Hatcher { total, .. } => *total,
        }
    }

    pub fn children(&self) -> Vec<&BundlePair> {
        match self {
            BundlePair::Double(e) | BundlePair::VerticalBoundary(e) => vec![e],
            BundlePair::UnionVertical(a, b)
            | BundlePair::UnionHandle(a, b)
            | BundlePair::FiberProduct(a, b) => vec![a, b],
            BundlePair::Morse { base: Some(b), .. } => vec![b],
            _ => vec![],
        }
    }

    /// Copy with child `index` replaced.
    pub fn with_child(&self, index: usize, child: BundlePair) -> BundlePair {
        let mut out = self.clone();
        let slot: &mut Box<BundlePair> = match (&mut out, index) {
            (BundlePair::Double(e), 0) | (BundlePair::VerticalBoundary(e), 0) => e,
            (BundlePair::UnionVertical(a, _), 0)
            | (BundlePair::UnionHandle(a, _), 0)
            | (BundlePair::FiberProduct(a, _), 0) => a,
            (BundlePair::UnionVertical(_, b), 1)
            | (BundlePair::UnionHandle(_, b), 1)
            | (BundlePair::FiberProduct(_, b), 1) => b,
            (BundlePair::Morse { base: Some(b), .. }, 0) => b,
            _ => panic!("node has no child {index}"),
        };
        **slot = child;
        out
    }

    /// Leaves have depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// All nodes in preorder, the root first.
    pub fn subexpressions(&self) -> Vec<&BundlePair> {
        let mut out = vec![self];
        for c in self.children() {
            out.extend(c.subexpressions());
        }
        out
    }

    /// Every bundle appearing in the node itself (not its children).
    fn local_bundles(&self) -> Vec<&VirtualBundle> {
        match self {
            BundlePair::Sphere { xi, .. }
            | BundlePair::Disk(xi)
            | BundlePair::RelDisk(xi)
            | BundlePair::Hatcher { xi, .. } => vec![xi],
            BundlePair::Morse { handles, .. } => handles.iter().flat_map(|h| [&h.xi, &h.eta]).collect(),
            _ => vec![],
        }
    }

    pub fn stats(&self) -> Result<FiberStats, BundleError> {
        let s = evaluate(self, &EulerRules)?;
        Ok(FiberStats {
            dim: self.dim(),
            chi_f: s.whole.chi,
            chi_d0: s.d0.chi,
            chi_d1: s.d1.chi,
            chi_corner: s.corner.chi,
        })
    }

    /// Checks every node invariant. Roots are checked against `ws` when given.
    pub fn validate(&self, ws: Option<&Workspace>) -> Result<(), Vec<Diagnostic>> {
        let mut out = Vec::new();
        self.validate_into(ws, &mut Vec::new(), &mut out);
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    fn validate_into(&self, ws: Option<&Workspace>, path: &mut Vec<usize>, out: &mut Vec<Diagnostic>) {
        let before = out.len();
        for (i, c) in self.children().into_iter().enumerate() {
            path.push(i);
            c.validate_into(ws, path, out);
            path.pop();
        }
        let children_ok = out.len() == before;
        let mut errors = Vec::new();
        if let Some(ws) = ws {
            for xi in self.local_bundles() {
                if let Err(e) = ws.check_bundle(xi) {
                    errors.push(e);
                }
            }
        }
        self.local_checks(children_ok, &mut errors);
        for error in errors {
            out.push(Diagnostic { path: path.clone(), node: self.to_string(), error });
        }
    }

    fn local_checks(&self, children_ok: bool, errors: &mut Vec<BundleError>) {
        let malformed = |m: &str| BundleError::MalformedExpression(m.to_string());
        match self {
            BundlePair::Trivial(t) => {
                if t.dim < 0 {
                    errors.push(malformed("negative fiber dimension"));
                } else if !t.has_boundary() {
                    if t.dim % 2 == 1 && t.chi != 0 {
                        errors.push(malformed("closed odd-dimensional fiber with nonzero chi"));
                    }
                } else if t.dim == 0 {
                    errors.push(malformed("a 0-dimensional fiber has no boundary"));
                } else {
                    let s = t.stats();
                    let ok = if t.dim % 2 == 0 {
                        s.chi_d0 == s.chi_d1 && s.chi_corner == 2 * s.chi_d0
                    } else {
                        s.chi_corner == 0 && s.chi_d0 + s.chi_d1 == 2 * s.chi_f
                    };
                    if !ok {
                        errors.push(malformed("boundary Euler characteristics violate duality"));
                    }
                }
            }
            BundlePair::Sphere { xi, n } => {
                if *n < 1 {
                    errors.push(malformed("sphere bundles need n >= 1"));
                }
                if xi.rank() > n + 1 {
                    errors.push(BundleError::RankMismatch {
                        what: "sphere bundle".into(),
                        expected: n + 1,
                        found: xi.rank(),
                    });
                }
                check_fiber_bundle("sphere bundle", xi, errors);
            }
            BundlePair::Disk(xi) => check_fiber_bundle("disk bundle", xi, errors),
            BundlePair::RelDisk(xi) => check_fiber_bundle("relative disk bundle", xi, errors),
            BundlePair::Double(_) => {}
            BundlePair::VerticalBoundary(e) => {
                if children_ok && e.dim() < 1 {
                    errors.push(malformed("vertical boundary of a 0-dimensional fiber"));
                }
            }
            BundlePair::UnionVertical(a, b) | BundlePair::UnionHandle(a, b) => {
                if !children_ok {
                    return;
                }
                if a.dim() != b.dim() {
                    errors.push(BundleError::DimensionMismatch { left: a.dim(), right: b.dim() });
                } else if let (BundlePair::UnionVertical(..), Ok(sa), Ok(sb)) = (self, a.stats(), b.stats()) {
                    if sa.chi_boundary() != sb.chi_boundary() {
                        errors.push(BundleError::BoundaryMismatch);
                    }
                }
            }
            BundlePair::FiberProduct(..) => {}
            BundlePair::Morse { base, handles } => {
                if base.is_none() && handles.is_empty() {
                    errors.push(malformed("Morse bundle without base or handles"));
                    return;
                }
                if base.is_some() && !children_ok {
                    return;
                }
                if base.is_none() && handles[0].index != 0 {
                    errors.push(malformed("Morse bundle without base must start with a 0-handle"));
                }
                let n = self.dim();
                for h in handles {
                    if h.index < 0 || h.index > n {
                        errors.push(malformed("handle index out of range"));
                        continue;
                    }
                    if h.xi.rank() != h.index {
                        errors.push(BundleError::RankMismatch {
                            what: format!("negative eigenspace of index-{} handle", h.index),
                            expected: h.index,
                            found: h.xi.rank(),
                        });
                    }
                    if h.xi.rank() + h.eta.rank() != n {
                        errors.push(BundleError::RankMismatch {
                            what: format!("eigenspaces of index-{} handle", h.index),
                            expected: n,
                            found: h.xi.rank() + h.eta.rank(),
                        });
                    }
                    check_fiber_bundle("negative eigenspace", &h.xi, errors);
                    check_fiber_bundle("positive eigenspace", &h.eta, errors);
                }
            }
            BundlePair::Hatcher { xi, n, total } => {
                if *n < 1 {
                    errors.push(malformed("Hatcher bundles need n >= 1"));
                } else if xi.rank() > *n {
                    errors.push(BundleError::RankMismatch {
                        what: "Hatcher bundle".into(),
                        expected: *n,
                        found: xi.rank(),
                    });
                } else if *total < n + 1 {
                    errors.push(malformed("Hatcher bundles need total >= n + 1"));
                } else {
                    check_fiber_bundle("Hatcher bundle", xi, errors);
                    let eta = pad(xi, *n).complement(*total);
                    check_fiber_bundle("Hatcher complement", &eta, errors);
                }
            }
        }
    }
}

/// Oriented bundles of rank at most one are trivial.
fn check_fiber_bundle(what: &str, xi: &VirtualBundle, errors: &mut Vec<BundleError>) {
    let rank = xi.rank();
    if rank < 0 {
        errors.push(BundleError::RankMismatch { what: what.to_string(), expected: 0, found: rank });
    } else if rank <= 1 && !xi.is_stably_trivial() {
        errors.push(BundleError::NontrivialLowRank { what: what.to_string(), rank });
    }
}

/// `xi` plus trivial lines up to rank `rank`.
pub fn pad(xi: &VirtualBundle, rank: i64) -> VirtualBundle {
    xi.whitney_sum(&VirtualBundle::trivial(rank - xi.rank()))
}

/// The two-handle Morse description of a Hatcher bundle: a cancelling pair
/// of indices `n-1` (trivial eigenspaces) and `n` (`xi` and its complement)
/// on a collar of a trivial disk bundle.
pub fn hatcher_morse(xi: &VirtualBundle, n: i64, total: i64) -> BundlePair {
    let xi = pad(xi, n);
    let eta = xi.complement(total);
    BundlePair::morse(
        Some(BundlePair::disk(VirtualBundle::trivial(total - 1))),
        vec![
            Handle::new(n - 1, VirtualBundle::trivial(n - 1), VirtualBundle::trivial(total - n + 1)),
            Handle::new(n, xi, eta),
        ],
    )
}

/// The additive group a leaf rule takes values in.
pub trait Value: Clone + PartialEq {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, n: i64) -> Self;
}

impl Value for () {
    fn zero() {}
    fn add(&self, _: &()) {}
    fn scale(&self, _: i64) {}
}

/// A stratum: Euler characteristic and value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece<V> {
    pub chi: i64,
    pub value: V,
}

impl<V: Value> Piece<V> {
    pub fn new(chi: i64, value: V) -> Self {
        Piece { chi, value }
    }

    pub fn zero() -> Self {
        Piece { chi: 0, value: V::zero() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Piece { chi: self.chi + other.chi, value: self.value.add(&other.value) }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, n: i64) -> Self {
        Piece { chi: self.chi * n, value: self.value.scale(n) }
    }

    /// Fiber product: `chi` multiplies and values follow the product rule.
    pub fn times(&self, other: &Self) -> Self {
        Piece {
            chi: self.chi * other.chi,
            value: self.value.scale(other.chi).add(&other.value.scale(self.chi)),
        }
    }
}

/// The four strata of a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strata<V> {
    pub whole: Piece<V>,
    pub d0: Piece<V>,
    pub d1: Piece<V>,
    pub corner: Piece<V>,
}

impl<V: Value> Strata<V> {
    pub fn closed(whole: Piece<V>) -> Self {
        Strata { whole, d0: Piece::zero(), d1: Piece::zero(), corner: Piece::zero() }
    }

    /// `d0 F` and `d1 F` glued along the corner.
    pub fn vertical_boundary(&self) -> Piece<V> {
        self.d0.add(&self.d1).sub(&self.corner)
    }

    /// The pair `(E, d0 E)`.
    pub fn relative(&self) -> Piece<V> {
        self.whole.sub(&self.d0)
    }

    /// The pair `(E, d1 E)`.
    pub fn relative_d1(&self) -> Piece<V> {
        self.whole.sub(&self.d1)
    }
}

/// Values on the basic pieces. Everything else follows from gluing and
/// products.
pub trait LeafRules {
    type V: Value;
    /// The closed linear sphere bundle `S^n(xi)`, `n >= 0`.
    fn sphere(&self, xi: &VirtualBundle, n: i64) -> Self::V;
    /// The linear disk bundle `D(xi)`.
    fn disk(&self, xi: &VirtualBundle) -> Self::V;
    /// The relative value of a Morse bundle with the given critical points.
    fn morse_relative(&self, handles: &[Handle]) -> Self::V;
}

/// Euler characteristics only.
pub struct EulerRules;

impl LeafRules for EulerRules {
    type V = ();
    fn sphere(&self, _: &VirtualBundle, _: i64) {}
    fn disk(&self, _: &VirtualBundle) {}
    fn morse_relative(&self, _: &[Handle]) {}
}

fn sphere_piece<R: LeafRules>(rules: &R, xi: &VirtualBundle, n: i64) -> Piece<R::V> {
    Piece::new(1 + sign(n), rules.sphere(xi, n))
}

/// Evaluates all four strata. Assumes `e` is valid apart from vertical
/// boundary matching, which is checked here on the values.
pub fn evaluate<R: LeafRules>(e: &BundlePair, rules: &R) -> Result<Strata<R::V>, BundleError> {
    Ok(match e {
        BundlePair::Trivial(t) => {
            let s = t.stats();
            Strata {
                whole: Piece::new(s.chi_f, R::V::zero()),
                d0: Piece::new(s.chi_d0, R::V::zero()),
                d1: Piece::new(s.chi_d1, R::V::zero()),
                corner: Piece::new(s.chi_corner, R::V::zero()),
            }
        }
        BundlePair::Sphere { xi, n } => Strata::closed(sphere_piece(rules, xi, *n)),
        BundlePair::Disk(xi) | BundlePair::RelDisk(xi) => {
            let n = xi.rank();
            let whole = Piece::new(1, rules.disk(xi));
            let rim = if n >= 1 { sphere_piece(rules, xi, n - 1) } else { Piece::zero() };
            let mut s = Strata::closed(whole);
            if matches!(e, BundlePair::Disk(_)) {
                s.d1 = rim;
            } else {
                s.d0 = rim;
            }
            s
        }
        BundlePair::Double(inner) => {
            let s = evaluate(inner, rules)?;
            Strata::closed(s.whole.scale(2).sub(&s.vertical_boundary()))
        }
        BundlePair::VerticalBoundary(inner) => Strata::closed(evaluate(inner, rules)?.vertical_boundary()),
        BundlePair::UnionVertical(a, b) => {
            let (sa, sb) = (evaluate(a, rules)?, evaluate(b, rules)?);
            let boundary = sa.vertical_boundary();
            if boundary != sb.vertical_boundary() {
                return Err(BundleError::BoundaryMismatch);
            }
            Strata::closed(sa.whole.add(&sb.whole).sub(&boundary))
        }
        BundlePair::UnionHandle(a, b) => {
            let (sa, sb) = (evaluate(a, rules)?, evaluate(b, rules)?);
            Strata {
                whole: sa.whole.add(&sb.whole).sub(&sb.d0),
                d0: sa.d0,
                d1: sa.d1.sub(&sb.d0).add(&sb.d1),
                corner: sa.corner,
            }
        }
        BundlePair::FiberProduct(a, b) => {
            let (f, x) = (evaluate(a, rules)?, evaluate(b, rules)?);
            let (df, dx) = (f.vertical_boundary(), x.vertical_boundary());
            let side = |pf: &Piece<R::V>, px: &Piece<R::V>| {
                pf.times(&x.whole).add(&f.whole.times(px)).sub(&pf.times(px))
            };
            let d0 = side(&f.d0, &x.d0);
            let d1 = side(&f.d1, &x.d1);
            let boundary = side(&df, &dx);
            let corner = d0.add(&d1).sub(&boundary);
            Strata { whole: f.whole.times(&x.whole), d0, d1, corner }
        }
        BundlePair::Morse { base, handles } => {
            let (d0, corner) = match base {
                Some(b) => {
                    let sb = evaluate(b, rules)?;
                    let boundary = sb.vertical_boundary();
                    (sb.whole, boundary)
                }
                None => (Piece::zero(), Piece::zero()),
            };
            let chi: i64 = handles.iter().map(|h| sign(h.index)).sum();
            let whole = d0.add(&Piece::new(chi, rules.morse_relative(handles)));
            let mut d1 = d0.clone();
            for h in handles {
                let sh = evaluate(&BundlePair::handle(h), rules)?;
                d1 = d1.add(&sh.d1).sub(&sh.d0);
            }
            Strata { whole, d0, d1, corner }
        }
        BundlePair::Hatcher { xi, n, total } => evaluate(&hatcher_morse(xi, *n, *total), rules)?,
    })
}

impl fmt::Display for BundlePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BundlePair::Trivial(t) => {
                write!(f, "trivial(n={}, chi={}", t.dim, t.chi)?;
                for (key, v) in [("chi0", t.chi0), ("chi1", t.chi1), ("corner", t.corner)] {
                    if let Some(v) = v {
                        write!(f, ", {key}={v}")?;
                    }
                }
                f.write_str(")")
            }
            BundlePair::Sphere { xi, n } => write!(f, "sphere({xi}, n={n})"),
            BundlePair::Disk(xi) => write!(f, "disk({xi})"),
            BundlePair::RelDisk(xi) => write!(f, "reldisk({xi})"),
            BundlePair::Double(e) => write!(f, "double({e})"),
            BundlePair::VerticalBoundary(e) => write!(f, "dv({e})"),
            BundlePair::UnionVertical(a, b) => write!(f, "union({a}, {b})"),
            BundlePair::UnionHandle(a, b) => write!(f, "glue({a}, {b})"),
            BundlePair::FiberProduct(a, b) => write!(f, "prod({a}, {b})"),
            BundlePair::Morse { base, handles } => {
                f.write_str("morse(")?;
                if let Some(b) = base {
                    write!(f, "base={b}, ")?;
                }
                f.write_str("handles=[")?;
                for (i, h) in handles.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "({}, {}, {})", h.index, h.xi, h.eta)?;
                }
                f.write_str("])")
            }
            BundlePair::Hatcher { xi, n, total } => write!(f, "hatcher({xi}, n={n}, total={total})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ChernRoot {
        ChernRoot::new("x").unwrap()
    }

    fn line() -> VirtualBundle {
        VirtualBundle::line(x())
    }

    fn triv(n: i64) -> VirtualBundle {
        VirtualBundle::trivial(n)
    }

    fn chi(e: &BundlePair) -> FiberStats {
        e.validate(None).unwrap();
        e.stats().unwrap()
    }

    #[test]
    fn sphere_and_disk_stats() {
        assert_eq!(chi(&BundlePair::sphere(line().whitney_sum(&triv(1)), 2)).chi_f, 2);
        assert_eq!(chi(&BundlePair::sphere(line().whitney_sum(&triv(2)), 3)).chi_f, 0);
        let d = chi(&BundlePair::disk(line().whitney_sum(&triv(1))));
        assert_eq!((d.chi_f, d.chi_d0, d.chi_d1), (1, 0, 2));
        let d = chi(&BundlePair::disk(line()));
        assert_eq!((d.chi_f, d.chi_d1), (1, 0));
        let r = chi(&BundlePair::rel_disk(line().whitney_sum(&triv(1))));
        assert_eq!(r.chi_rel(), -1);
    }

    #[test]
    fn morse_sphere_stats() {
        for n in 2..6 {
            let xi = pad(&line(), n);
            let e = BundlePair::morse(
                None,
                vec![Handle::new(0, triv(0), xi.clone()), Handle::new(n, xi, triv(0))],
            );
            let s = chi(&e);
            assert_eq!(s.chi_f, 1 + sign(n));
            assert_eq!((s.chi_d0, s.chi_d1, s.chi_corner), (0, 0, 0));
        }
    }

    #[test]
    fn hatcher_relative_chi_vanishes() {
        for n in 2..7 {
            let s = chi(&BundlePair::hatcher(line(), n, n + 4));
            assert_eq!(sign(n - 1) + sign(n), 0);
            assert_eq!(s.chi_rel(), 0);
            assert_eq!(s.chi_f, 1);
        }
    }

    #[test]
    fn double_stats() {
        let e = BundlePair::disk(pad(&line(), 3));
        let s = chi(&e);
        let d = chi(&BundlePair::double(e));
        assert_eq!(d.chi_f, 2 * s.chi_f - s.chi_boundary());
        assert_eq!(d.chi_f, 0);
    }

    #[test]
    fn validation_errors() {
        let u = BundlePair::union_vertical(BundlePair::disk(triv(3)), BundlePair::disk(triv(4)));
        let errs = u.validate(None).unwrap_err();
        assert_eq!(errs[0].error, BundleError::DimensionMismatch { left: 3, right: 4 });

        let m = BundlePair::morse(None, vec![Handle::new(2, pad(&line(), 3), triv(1))]);
        let errs = m.validate(None).unwrap_err();
        assert!(errs.iter().any(|d| matches!(d.error, BundleError::RankMismatch { .. })));

        assert!(BundlePair::hatcher(line(), 4, 10).validate(None).is_ok());
        assert!(BundlePair::hatcher(line(), 4, 4).validate(None).is_err());

        let ws = Workspace::new();
        let errs = BundlePair::disk(line()).validate(Some(&ws)).unwrap_err();
        assert_eq!(errs[0].error, BundleError::UndeclaredRoot("x".into()));

        let bad = BundlePair::disk(line().whitney_sum(&triv(-1)));
        assert!(matches!(
            bad.validate(None).unwrap_err()[0].error,
            BundleError::NontrivialLowRank { .. }
        ));

        let t = BundlePair::Trivial(TrivialSpec::closed(3, 2));
        assert!(t.validate(None).is_err());
        let t = BundlePair::Trivial(TrivialSpec { dim: 2, chi: 1, chi0: Some(1), chi1: Some(1), corner: Some(2) });
        assert!(t.validate(None).is_ok());
    }

    #[test]
    fn dsl_text() {
        let e = BundlePair::union_vertical(
            BundlePair::disk(line()),
            BundlePair::morse(
                Some(BundlePair::sphere(line(), 1)),
                vec![Handle::new(2, line(), triv(0))],
            ),
        );
        assert_eq!(
            e.to_string(),
            "union(disk(line(x)), morse(base=sphere(line(x), n=1), handles=[(2, line(x), trivial(0))]))"
        );
        assert_eq!(e.depth(), 3);
        assert_eq!(e.subexpressions().len(), 4);
    }

    #[test]
    fn disk_cap_matches_disk_boundary() {
        // a disk glued to a Morse cap over its boundary sphere
        let xi = pad(&line(), 3);
        let cap = BundlePair::morse(
            Some(BundlePair::sphere(xi.clone(), 2)),
            vec![Handle::new(3, xi.clone(), triv(0))],
        );
        let u = BundlePair::union_vertical(BundlePair::disk(xi), cap);
        assert!(u.validate(None).is_ok());
        assert_eq!(chi(&u).chi_f, 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn leaf() -> impl Strategy<Value = BundlePair> {
            prop_oneof![
                (1i64..5).prop_map(|n| BundlePair::sphere(pad(&VirtualBundle::line(ChernRoot::new("x").unwrap()), n + 1), n)),
                (0i64..5).prop_map(|n| BundlePair::disk(VirtualBundle::trivial(n))),
                (1i64..5).prop_map(|n| BundlePair::rel_disk(VirtualBundle::trivial(n))),
            ]
        }

        fn expr() -> impl Strategy<Value = BundlePair> {
            leaf().prop_recursive(3, 12, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(BundlePair::double),
                    (inner.clone(), inner).prop_map(|(a, b)| BundlePair::product(a, b)),
                ]
            })
        }

        proptest! {
            #[test]
            fn doubling_rule(e in expr()) {
                let s = e.stats().unwrap();
                let d = BundlePair::double(e).stats().unwrap();
                prop_assert_eq!(d.chi_f, 2 * s.chi_f - s.chi_boundary());
            }

            #[test]
            fn relative_chi_multiplies(a in expr(), b in expr()) {
                let (sa, sb) = (a.stats().unwrap(), b.stats().unwrap());
                let p = BundlePair::product(a, b).stats().unwrap();
                prop_assert_eq!(p.chi_rel(), sa.chi_rel() * sb.chi_rel());
                prop_assert_eq!(p.chi_rel_d1(), sa.chi_rel_d1() * sb.chi_rel_d1());
            }

            #[test]
            fn closed_odd_fibers_have_zero_chi(e in expr()) {
                let d = BundlePair::double(e);
                let s = d.stats().unwrap();
                if d.dim() % 2 == 1 {
                    prop_assert_eq!(s.chi_f, 0);
                }
            }

            #[test]
            fn duality_of_relative_chi(e in expr()) {
                let s = e.stats().unwrap();
                prop_assert_eq!(s.chi_rel_d1(), sign(s.dim) * s.chi_rel());
            }
        }
    }
}

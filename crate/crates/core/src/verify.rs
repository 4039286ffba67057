//! Random bundle expressions and the identity suite.
//!
//! Every check is an exact equality of classes. A failing check is shrunk
//! to a small expression and reported as a script that replays through the
//! command line front end.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bundles::{hatcher_morse, pad, BundlePair, Handle, LeafRules, TrivialSpec};
use crate::chern::{ChernRoot, GradedClass, VirtualBundle};
use crate::scalars::{factorial, sign, Scalar, ZetaSymbol};
use crate::torsion::{decompose, fr_theory, mmm_theory, Evaluation, Evaluator, TorsionTheory};
use crate::transfer::{m2k_direct, relative_transfer_identities, transfer_absolute, transfer_pullback};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("minimize called on an expression that passes the check")]
    InvalidMinimizeCall,
}

/// Relative frequencies of the constructors in generated expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weights {
    pub sphere: u32,
    pub disk: u32,
    pub rel_disk: u32,
    pub trivial: u32,
    pub hatcher: u32,
    pub morse: u32,
    pub double: u32,
    pub vertical_boundary: u32,
    pub union: u32,
    pub glue: u32,
    pub product: u32,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            sphere: 2,
            disk: 2,
            rel_disk: 1,
            trivial: 1,
            hatcher: 1,
            morse: 3,
            double: 2,
            vertical_boundary: 1,
            union: 3,
            glue: 2,
            product: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprSpec {
    pub seed: u64,
    pub max_depth: usize,
    pub max_dim: i64,
    pub root_pool: Vec<ChernRoot>,
    pub weights: Weights,
}

impl ExprSpec {
    pub fn new(seed: u64, max_depth: usize) -> Self {
        let root_pool = ["x", "y", "w"].iter().map(|n| ChernRoot::new(*n).expect("valid root")).collect();
        ExprSpec { seed, max_depth, max_dim: 8, root_pool, weights: Weights::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Sphere,
    Disk,
    RelDisk,
    Trivial,
    Hatcher,
    Morse,
    Double,
    VerticalBoundary,
    Union,
    Glue,
    Product,
}

/// Deterministic expression generator.
pub struct Generator {
    spec: ExprSpec,
    rng: ChaCha8Rng,
    ev: Evaluator,
}

impl Generator {
    pub fn new(spec: ExprSpec) -> Self {
        assert!(!spec.root_pool.is_empty(), "root pool must be nonempty");
        let rng = ChaCha8Rng::seed_from_u64(spec.seed);
        Generator { spec, rng, ev: Evaluator::default() }
    }

    pub fn next_expr(&mut self) -> BundlePair {
        self.gen(self.spec.max_depth.max(1), self.spec.max_dim)
    }

    fn ok(&self, e: &BundlePair, depth: usize, max_dim: i64) -> bool {
        e.depth() <= depth && e.dim() <= max_dim && self.ev.evaluate(e).is_ok()
    }

    /// A valid expression of depth at most `depth` and dimension at most `max_dim`.
    fn gen(&mut self, depth: usize, max_dim: i64) -> BundlePair {
        for _ in 0..16 {
            if let Some(e) = self.attempt(depth, max_dim) {
                if self.ok(&e, depth, max_dim) {
                    return e;
                }
            }
        }
        self.basic_leaf(max_dim)
    }

    fn basic_leaf(&mut self, max_dim: i64) -> BundlePair {
        if max_dim >= 1 && self.rng.gen_bool(0.5) {
            let n = self.rng.gen_range(1..=max_dim.min(5));
            let xi = self.bundle(n + 1);
            BundlePair::sphere(xi, n)
        } else {
            let n = self.rng.gen_range(0..=max_dim.clamp(0, 5));
            let xi = self.bundle(n);
            BundlePair::disk(xi)
        }
    }

    fn root(&mut self) -> ChernRoot {
        self.spec.root_pool.choose(&mut self.rng).expect("nonempty pool").clone()
    }

    /// A genuine bundle of the given rank, sometimes written as a complement.
    pub fn bundle(&mut self, rank: i64) -> VirtualBundle {
        if rank <= 1 {
            return VirtualBundle::trivial(rank);
        }
        if rank >= 2 && self.rng.gen_bool(0.2) {
            let inner = self.rng.gen_range(2..=4);
            let zeta = self.genuine(inner);
            return zeta.complement(rank + inner);
        }
        self.genuine(rank)
    }

    fn genuine(&mut self, rank: i64) -> VirtualBundle {
        let planes = self.rng.gen_range(0..=(rank / 2).min(2));
        let mut xi = VirtualBundle::zero();
        for _ in 0..planes {
            let r = self.root();
            xi = xi.whitney_sum(&VirtualBundle::line(r));
        }
        pad(&xi, rank)
    }

    fn kind(&mut self) -> Kind {
        let w = self.spec.weights;
        let table = [
            (Kind::Sphere, w.sphere),
            (Kind::Disk, w.disk),
            (Kind::RelDisk, w.rel_disk),
            (Kind::Trivial, w.trivial),
            (Kind::Hatcher, w.hatcher),
            (Kind::Morse, w.morse),
            (Kind::Double, w.double),
            (Kind::VerticalBoundary, w.vertical_boundary),
            (Kind::Union, w.union),
            (Kind::Glue, w.glue),
            (Kind::Product, w.product),
        ];
        table.choose_weighted(&mut self.rng, |(_, w)| *w).map(|(k, _)| *k).unwrap_or(Kind::Sphere)
    }

    fn handle(&mut self, index: i64, dim: i64) -> Handle {
        let xi = self.bundle(index);
        let eta = self.bundle(dim - index);
        Handle::new(index, xi, eta)
    }

    fn attempt(&mut self, depth: usize, max_dim: i64) -> Option<BundlePair> {
        if depth <= 1 {
            return Some(self.basic_leaf(max_dim));
        }
        let top = max_dim.min(5);
        Some(match self.kind() {
            Kind::Sphere | Kind::Disk => self.basic_leaf(max_dim),
            Kind::RelDisk => {
                if max_dim < 1 {
                    return None;
                }
                let r = self.rng.gen_range(1..=top);
                BundlePair::rel_disk(self.bundle(r))
            }
            Kind::Trivial => {
                let dim = self.rng.gen_range(0..=max_dim.clamp(0, 4));
                BundlePair::Trivial(self.trivial(dim))
            }
            Kind::Hatcher => {
                if max_dim < 2 {
                    return None;
                }
                let n = self.rng.gen_range(1..=(max_dim - 1).min(5));
                let total = self.rng.gen_range(n + 1..=max_dim.min(n + 4));
                let r = self.rng.gen_range(0..=n);
                let xi = if total - n <= 1 { VirtualBundle::trivial(r) } else { self.bundle(r) };
                BundlePair::hatcher(xi, n, total)
            }
            Kind::Morse => {
                if max_dim >= 1 && self.rng.gen_bool(0.5) {
                    let base = self.gen(depth - 1, max_dim - 1);
                    let n = base.dim() + 1;
                    let count = self.rng.gen_range(0..=3);
                    let mut hs: Vec<Handle> = (0..count)
                        .map(|_| {
                            let i = self.rng.gen_range(0..=n);
                            self.handle(i, n)
                        })
                        .collect();
                    hs.sort();
                    BundlePair::morse(Some(base), hs)
                } else if max_dim >= 1 && self.rng.gen_bool(0.3) {
                    // two critical points: a sphere bundle
                    let n = self.rng.gen_range(1..=top);
                    let xi = self.bundle(n);
                    BundlePair::morse(
                        None,
                        vec![
                            Handle::new(0, VirtualBundle::zero(), xi.clone()),
                            Handle::new(n, xi, VirtualBundle::zero()),
                        ],
                    )
                } else {
                    let n = self.rng.gen_range(0..=max_dim.clamp(0, 5));
                    let count = self.rng.gen_range(1..=3);
                    let mut idx: Vec<i64> = (0..count).map(|_| self.rng.gen_range(0..=n)).collect();
                    idx.sort();
                    idx[0] = 0;
                    let hs = idx.into_iter().map(|i| self.handle(i, n)).collect();
                    BundlePair::morse(None, hs)
                }
            }
            Kind::Double => BundlePair::double(self.gen(depth - 1, max_dim)),
            Kind::VerticalBoundary => {
                let e = self.gen(depth - 1, max_dim + 1);
                if e.dim() < 1 {
                    return None;
                }
                BundlePair::vertical_boundary(e)
            }
            Kind::Union => {
                let e = self.gen(depth - 1, max_dim);
                let ps: Vec<BundlePair> = partners(&e, &self.spec.root_pool[0], &self.ev)
                    .into_iter()
                    .filter(|p| p.depth() < depth)
                    .collect();
                let p = ps.choose(&mut self.rng)?.clone();
                BundlePair::union_vertical(e, p)
            }
            Kind::Glue => {
                if depth < 3 {
                    return None;
                }
                let e = self.gen(depth - 1, max_dim);
                let n = e.dim();
                let attachable = self.ev.shape(&e).ok()?.d1;
                let i = if attachable { self.rng.gen_range(0..=n) } else { 0 };
                let h = self.handle(i, n);
                BundlePair::union_handle(e, BundlePair::handle(&h))
            }
            Kind::Product => {
                let a = self.gen(depth - 1, max_dim);
                let b = self.gen(depth - 1, max_dim - a.dim());
                BundlePair::product(a, b)
            }
        })
    }

    /// Euler characteristics of a product bundle consistent with duality.
    fn trivial(&mut self, dim: i64) -> TrivialSpec {
        if dim == 0 || self.rng.gen_bool(0.5) {
            let chi = if dim % 2 == 1 { 0 } else { self.rng.gen_range(-2..=4) };
            return TrivialSpec::closed(dim, chi);
        }
        let chi = self.rng.gen_range(-2..=3);
        if dim % 2 == 0 {
            let a = self.rng.gen_range(-1..=2);
            TrivialSpec { dim, chi, chi0: Some(a), chi1: Some(a), corner: Some(2 * a) }
        } else {
            let a = self.rng.gen_range(-2..=3);
            TrivialSpec { dim, chi, chi0: Some(a), chi1: Some(2 * chi - a), corner: Some(0) }
        }
    }
}

pub fn gen_expr(spec: &ExprSpec) -> BundlePair {
    Generator::new(spec.clone()).next_expr()
}

pub fn gen_exprs(spec: &ExprSpec, count: usize) -> Vec<BundlePair> {
    let mut g = Generator::new(spec.clone());
    (0..count).map(|_| g.next_expr()).collect()
}

/// Pieces with the same vertical boundary as `e`, so that `union(e, p)` is
/// defined: `e` itself, `e` times a point, a Morse cap for a disk bundle,
/// and a sphere bundle when `e` is closed.
pub fn partners(e: &BundlePair, root: &ChernRoot, ev: &Evaluator) -> Vec<BundlePair> {
    let mut out = vec![e.clone(), BundlePair::product(e.clone(), BundlePair::disk(VirtualBundle::trivial(0)))];
    if let BundlePair::Disk(xi) = e {
        let n = xi.rank();
        if n >= 2 {
            out.push(BundlePair::morse(
                Some(BundlePair::sphere(xi.clone(), n - 1)),
                vec![Handle::new(n, xi.clone(), VirtualBundle::zero())],
            ));
        }
    }
    if ev.is_closed(e).unwrap_or(false) {
        let n = e.dim();
        out.push(if n >= 1 {
            BundlePair::sphere(pad(&VirtualBundle::line(root.clone()), n + 1), n)
        } else {
            BundlePair::Trivial(TrivialSpec::closed(0, 1))
        });
    }
    out.retain(|p| ev.evaluate(&BundlePair::union_vertical(e.clone(), p.clone())).is_ok());
    out
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=4).into())
}

fn zeta(m: u32) -> Scalar {
    Scalar::zeta(ZetaSymbol::new(m).expect("odd zeta argument"))
}

/// Random theories with `s1` a rational multiple of `zeta(2k+1)`.
pub fn random_theories(seed: u64, k: u32, count: usize) -> Vec<TorsionTheory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7468_656f_7279);
    let z = zeta(2 * k + 1);
    (0..count)
        .map(|_| {
            let s1 = z.scale(&small_rational(&mut rng));
            let mut s2 = &Scalar::rational(small_rational(&mut rng)) + &z.scale(&small_rational(&mut rng));
            if rng.gen_bool(0.3) {
                s2 = &s2 + &zeta(2 * k + 3).scale(&small_rational(&mut rng));
            }
            TorsionTheory::new(k, s1, s2).expect("k >= 1")
        })
        .collect()
}

/// Random pairs `(s1, s2)` with no constraint on `s1`.
pub fn random_scalar_pairs(seed: u64, count: usize) -> Vec<(Scalar, Scalar)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061_6972);
    let s = |rng: &mut ChaCha8Rng| {
        let mut out = Scalar::rational(small_rational(rng));
        for m in [3, 5] {
            if rng.gen_bool(0.5) {
                out = &out + &zeta(m).scale(&small_rational(rng));
            }
        }
        out
    };
    (0..count).map(|_| (s(&mut rng), s(&mut rng))).collect()
}

/// The theories `fr(k)`, `mmm(k)` and `customs` random ones.
pub fn standard_theories(seed: u64, k: u32, customs: usize) -> Vec<TorsionTheory> {
    let mut out = vec![fr_theory(k), mmm_theory(k)];
    out.extend(random_theories(seed, k, customs));
    out
}

/// Where and how a check failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub node: String,
    pub theory: Option<TorsionTheory>,
    pub what: String,
    pub lhs: String,
    pub rhs: String,
}

/// Shared state of one suite run: the evaluator, the theories and a cache
/// of theory-independent evaluations.
pub struct Ctx<'a> {
    ev: Evaluator,
    theories: &'a [TorsionTheory],
    ks: BTreeSet<u32>,
    root: ChernRoot,
    cache: RefCell<HashMap<BundlePair, Evaluation>>,
}

impl<'a> Ctx<'a> {
    pub fn new(ev: Evaluator, theories: &'a [TorsionTheory], root: ChernRoot) -> Self {
        Ctx { ev, theories, ks: theories.iter().map(TorsionTheory::k).collect(), root, cache: RefCell::default() }
    }

    fn eval(&self, e: &BundlePair) -> Result<Evaluation, Box<Failure>> {
        if let Some(v) = self.cache.borrow().get(e) {
            return Ok(v.clone());
        }
        let v = self.ev.evaluate(e).map_err(|err| {
            Box::new(Failure {
                node: e.to_string(),
                theory: None,
                what: "evaluation failed".into(),
                lhs: err.to_string(),
                rhs: String::new(),
            })
        })?;
        self.cache.borrow_mut().insert(e.clone(), v.clone());
        Ok(v)
    }

    fn closed(&self, e: &BundlePair) -> bool {
        self.ev.is_closed(e).unwrap_or(false)
    }

    fn line(&self, rank: i64) -> VirtualBundle {
        if rank < 2 {
            return VirtualBundle::trivial(rank);
        }
        pad(&VirtualBundle::line(self.root.clone()), rank)
    }

    /// Small fixed fibers used as second factors.
    fn aux_pieces(&self) -> Vec<BundlePair> {
        vec![
            BundlePair::sphere(self.line(2), 1),
            BundlePair::sphere(self.line(3), 2),
            BundlePair::disk(self.line(2)),
            BundlePair::rel_disk(self.line(3)),
        ]
    }

    fn partners(&self, e: &BundlePair) -> Vec<BundlePair> {
        partners(e, &self.root, &self.ev)
    }
}

fn expect(
    lhs: &GradedClass,
    rhs: &GradedClass,
    node: &BundlePair,
    t: Option<&TorsionTheory>,
    what: &str,
) -> Result<(), Box<Failure>> {
    if lhs == rhs {
        Ok(())
    } else {
        Err(Box::new(Failure {
            node: node.to_string(),
            theory: t.cloned(),
            what: what.to_string(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        }))
    }
}

fn half(c: &GradedClass) -> GradedClass {
    c.scale_rational(&BigRational::new(1.into(), 2.into()))
}

fn transfer_failure(node: &BundlePair, err: impl fmt::Display) -> Box<Failure> {
    Box::new(Failure {
        node: node.to_string(),
        theory: None,
        what: "transfer failed".into(),
        lhs: err.to_string(),
        rhs: String::new(),
    })
}

/// Morse nodes, with Hatcher bundles expanded to their handle description.
fn morse_nodes(e: &BundlePair) -> Vec<BundlePair> {
    e.subexpressions()
        .into_iter()
        .filter_map(|n| match n {
            BundlePair::Morse { .. } => Some(n.clone()),
            BundlePair::Hatcher { xi, n, total } => Some(hatcher_morse(xi, *n, *total)),
            _ => None,
        })
        .collect()
}

type CheckFn = fn(&Ctx, &BundlePair) -> Result<usize, Box<Failure>>;

/// One identity of the suite.
#[derive(Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    pub statement: &'static str,
    run: CheckFn,
}

impl Check {
    /// Number of instances checked on `e`, or the first failure.
    pub fn run(&self, ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
        (self.run)(ctx, e)
    }
}

impl fmt::Debug for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

fn unions_of(ctx: &Ctx, e: &BundlePair) -> Vec<(BundlePair, BundlePair)> {
    let mut out: Vec<(BundlePair, BundlePair)> = e
        .subexpressions()
        .into_iter()
        .filter_map(|n| match n {
            BundlePair::UnionVertical(a, b) => Some(((**a).clone(), (**b).clone())),
            _ => None,
        })
        .collect();
    out.extend(ctx.partners(e).into_iter().map(|p| (e.clone(), p)));
    out
}

fn check_additivity_axiom(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for (a, b) in unions_of(ctx, e) {
        let u = BundlePair::union_vertical(a.clone(), b.clone());
        let (vu, da, db) = (
            ctx.eval(&u)?,
            ctx.eval(&BundlePair::double(a))?,
            ctx.eval(&BundlePair::double(b))?,
        );
        for t in ctx.theories {
            let rhs = &half(&da.tau(t)) + &half(&db.tau(t));
            expect(&vu.tau(t), &rhs, &u, Some(t), "tau(E1 u E2) vs half doubles")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_boundary_additivity(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for (a, b) in unions_of(ctx, e) {
        let u = BundlePair::union_vertical(a.clone(), b.clone());
        let (vu, va, vb) = (ctx.eval(&u)?, ctx.eval(&a)?, ctx.eval(&b)?);
        // a point fiber has empty vertical boundary
        let vi = if a.dim() == 0 { None } else { Some(ctx.eval(&BundlePair::vertical_boundary(a.clone()))?) };
        for t in ctx.theories {
            let mut rhs = &va.tau_absolute(t) + &vb.tau_absolute(t);
            if let Some(vi) = &vi {
                rhs = &rhs - &vi.tau(t);
            }
            expect(&vu.tau(t), &rhs, &u, Some(t), "tau(E1 u E2) vs pieces minus intersection")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_relative_additivity(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let mut glued: Vec<(BundlePair, BundlePair)> = e
        .subexpressions()
        .into_iter()
        .filter_map(|n| match n {
            BundlePair::UnionHandle(a, b) => Some(((**a).clone(), (**b).clone())),
            _ => None,
        })
        .collect();
    // a disjoint 0-handle can always be attached
    glued.push((e.clone(), BundlePair::handle(&Handle::new(0, VirtualBundle::zero(), ctx.line(e.dim())))));
    for (a, b) in glued {
        let u = BundlePair::union_handle(a.clone(), b.clone());
        let (vu, va, vb) = (ctx.eval(&u)?, ctx.eval(&a)?, ctx.eval(&b)?);
        for t in ctx.theories {
            expect(&vu.tau(t), &(&va.tau(t) + &vb.tau(t)), &u, Some(t), "glue vs sum of relative torsions")?;
            count += 1;
        }
    }
    for m in morse_nodes(e) {
        let BundlePair::Morse { base, handles } = &m else { unreachable!() };
        for j in 0..handles.len() {
            let whole = BundlePair::Morse { base: base.clone(), handles: handles[..=j].to_vec() };
            let handle = ctx.eval(&BundlePair::handle(&handles[j]))?;
            let prefix = if base.is_none() && j == 0 {
                None
            } else {
                Some(ctx.eval(&BundlePair::Morse { base: base.clone(), handles: handles[..j].to_vec() })?)
            };
            let vw = ctx.eval(&whole)?;
            for t in ctx.theories {
                let mut rhs = handle.tau(t);
                if let Some(p) = &prefix {
                    rhs = &rhs + &p.tau(t);
                }
                expect(&vw.tau(t), &rhs, &whole, Some(t), "Morse bundle vs collar plus handles")?;
                count += 1;
            }
        }
    }
    Ok(count)
}

fn check_product_formula(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let mut pairs: Vec<(BundlePair, BundlePair)> = e
        .subexpressions()
        .into_iter()
        .filter_map(|n| match n {
            BundlePair::FiberProduct(a, b) => Some(((**a).clone(), (**b).clone())),
            _ => None,
        })
        .collect();
    pairs.extend(ctx.aux_pieces().into_iter().map(|x| (e.clone(), x)));
    for (f, x) in pairs {
        let p = BundlePair::product(f.clone(), x.clone());
        let (vp, vf, vx) = (ctx.eval(&p)?, ctx.eval(&f)?, ctx.eval(&x)?);
        let (sf, sx) = (f.stats().map_err(|err| transfer_failure(&f, err))?, x.stats().map_err(|err| transfer_failure(&x, err))?);
        for t in ctx.theories {
            let rhs = &vf.tau(t).scale_int(sx.chi_rel()) + &vx.tau(t).scale_int(sf.chi_rel());
            expect(&vp.tau(t), &rhs, &p, Some(t), "product vs chi-weighted factors")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_transfer_axiom(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let ve = ctx.eval(e)?;
    for m in [1, 2] {
        let s = BundlePair::sphere(ctx.line(m + 1), m);
        let d = BundlePair::product(e.clone(), s.clone());
        let (vd, vs) = (ctx.eval(&d)?, ctx.eval(&s)?);
        for t in ctx.theories {
            let fiberwise = transfer_absolute(e, &vs.tau(t)).map_err(|err| transfer_failure(e, err))?;
            let rhs = &ve.tau_absolute(t).scale_int(1 + sign(m)) + &fiberwise;
            expect(&vd.tau_absolute(t), &rhs, &d, Some(t), "sphere bundle over E vs transfer")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_relative_transfer(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let ve = ctx.eval(e)?;
    for m in [1, 2] {
        let s = BundlePair::sphere(ctx.line(m + 1), m);
        let d = BundlePair::product(e.clone(), s.clone());
        let (vd, vs) = (ctx.eval(&d)?, ctx.eval(&s)?);
        for t in ctx.theories {
            let fiberwise = transfer_pullback(e, &vs.tau(t)).map_err(|err| transfer_failure(e, err))?;
            let rhs = &ve.tau(t).scale_int(1 + sign(m)) + &fiberwise;
            expect(&vd.tau(t), &rhs, &d, Some(t), "relative sphere bundle over E vs transfer")?;
            count += 1;
        }
    }
    for k in &ctx.ks {
        let y = ctx.line(2).ch4k(*k);
        for node in e.subexpressions() {
            let r = relative_transfer_identities(node, &y).map_err(|err| transfer_failure(node, err))?;
            expect(&r.relative, &r.difference, node, None, "tr(E, d0) vs tr(E) - tr(d0 E)")?;
            expect(&r.relative, &r.dual, node, None, "tr(E, d0) vs (-1)^n tr(E, d1)")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_stability(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let ve = ctx.eval(e)?;
    for n in 1..=3 {
        let p = BundlePair::product(e.clone(), BundlePair::disk(VirtualBundle::trivial(n)));
        let vp = ctx.eval(&p)?;
        for t in ctx.theories {
            expect(&vp.tau(t), &ve.tau(t), &p, Some(t), "tau(E x D^n) vs tau(E)")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_dv_times_disk(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let thick = BundlePair::product(e.clone(), BundlePair::disk(VirtualBundle::trivial(1)));
    for base in [e.clone(), thick] {
        if base.dim() < 1 {
            continue;
        }
        let lhs = ctx.eval(&BundlePair::vertical_boundary(base.clone()))?;
        let p = BundlePair::vertical_boundary(BundlePair::product(base, BundlePair::disk(VirtualBundle::trivial(2))));
        let rhs = ctx.eval(&p)?;
        for t in ctx.theories {
            expect(&lhs.tau(t), &rhs.tau(t), &p, Some(t), "tau(dv E) vs tau(dv(E x D^2))")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_four_piece_exchange(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let ps = ctx.partners(e);
    let n = ps.len();
    let mut count = 0;
    for shift in 0..n.min(3) {
        let p = |i: usize| ps[(i + shift) % n].clone();
        let u = |a: BundlePair, b: BundlePair| ctx.eval(&BundlePair::union_vertical(a, b));
        let (u12, u34, u13, u24) = (u(p(0), p(1))?, u(p(2), p(3))?, u(p(0), p(2))?, u(p(1), p(3))?);
        for t in ctx.theories {
            let lhs = &u12.tau(t) + &u34.tau(t);
            let rhs = &u13.tau(t) + &u24.tau(t);
            expect(&lhs, &rhs, e, Some(t), "exchange of four pieces")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_duality(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let v = ctx.eval(node)?;
        for t in ctx.theories {
            let lhs = &v.tau(t) + &v.tau_d1(t).scale_int(sign(v.dim));
            expect(&lhs, &v.tau_even(t).scale_int(2), node, Some(t), "tau(E, d0) + (-1)^n tau(E, d1) vs 2 tau+")?;
            count += 1;
        }
    }
    for m in morse_nodes(e) {
        let BundlePair::Morse { handles, .. } = &m else { unreachable!() };
        let n = m.dim();
        let reversed: Vec<Handle> = handles.iter().map(|h| h.reversed(n)).collect();
        let dual = ctx.ev.morse_relative(&reversed);
        let v = ctx.eval(&m)?;
        for t in ctx.theories {
            expect(&v.tau_d1(t), &dual.specialize(t), &m, Some(t), "tau(E, d1) vs reversed handles")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_linear_bundles(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let v = ctx.eval(node)?;
        for t in ctx.theories {
            let (expected, what) = match node {
                BundlePair::Sphere { xi, n } => (xi.ch4k(t.k()).scale(&t.s(*n).scale_int(2)), "tau(S^n) vs 2 s_n ch"),
                BundlePair::Disk(xi) => (xi.ch4k(t.k()).scale(&(t.s1() + t.s2())), "tau(D) vs (s1 + s2) ch"),
                BundlePair::RelDisk(xi) if xi.rank() >= 1 => {
                    let i = xi.rank();
                    (xi.ch4k(t.k()).scale(&(t.s(i) - t.s(i - 1))), "tau(D^i, S^(i-1)) vs (s_i - s_(i-1)) ch")
                }
                _ => continue,
            };
            expect(&v.tau(t), &expected, node, Some(t), what)?;
            count += 1;
        }
    }
    Ok(count)
}

/// `sum_i (-1)^i [(s1 + s2) ch(eta_i) + (s2 - s1) ch(xi_i)]`, written out.
fn morse_formula(handles: &[Handle], t: &TorsionTheory) -> GradedClass {
    let plus = t.s1() + t.s2();
    let minus = t.s2() - t.s1();
    let mut out = GradedClass::zero(4 * t.k());
    for h in handles {
        let term = &h.eta.ch4k(t.k()).scale(&plus) + &h.xi.ch4k(t.k()).scale(&minus);
        out = &out + &term.scale_int(sign(h.index));
    }
    out
}

fn check_morse_theorem(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for m in morse_nodes(e) {
        let BundlePair::Morse { handles, .. } = &m else { unreachable!() };
        let v = ctx.eval(&m)?;
        for t in ctx.theories {
            expect(&v.tau(t), &morse_formula(handles, t), &m, Some(t), "tau(E, d0) vs Morse sum")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_morse_permutation(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for m in morse_nodes(e) {
        let BundlePair::Morse { base, handles } = &m else { unreachable!() };
        let v = ctx.eval(&m)?;
        // keep a leading 0-handle in place when there is no base
        let fixed = usize::from(base.is_none());
        let mut orders = Vec::new();
        let mut rev = handles.clone();
        let from = fixed.min(rev.len());
        rev[from..].reverse();
        orders.push(rev);
        if handles.len() > fixed + 1 {
            let mut rot = handles.clone();
            rot[fixed..].rotate_left(1);
            orders.push(rot);
        }
        for hs in orders {
            let p = BundlePair::Morse { base: base.clone(), handles: hs };
            let Ok(vp) = ctx.eval(&p) else { continue };
            for t in ctx.theories {
                expect(&vp.tau(t), &v.tau(t), &p, Some(t), "permuted handles")?;
                count += 1;
            }
        }
    }
    Ok(count)
}

fn check_hatcher(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let BundlePair::Hatcher { xi, n, .. } = node else { continue };
        let v = ctx.eval(node)?;
        for t in ctx.theories {
            let expected = xi.ch4k(t.k()).scale(&t.s1().scale_int(2 * sign(n + 1)));
            expect(&v.tau(t), &expected, node, Some(t), "Hatcher bundle vs (-1)^(n+1) 2 s1 ch")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_difference_torsion(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let v = ctx.eval(node)?;
        for t in ctx.theories.iter().filter(|t| decompose(t).is_ok()) {
            let d = v.difference_torsion(t).expect("decomposable");
            expect(&d, &GradedClass::zero(4 * t.k()), node, Some(t), "difference torsion")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_mmm_cross_validation(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let v = ctx.eval(node)?;
        for &k in &ctx.ks {
            let direct = m2k_direct(node, k).map_err(|err| transfer_failure(node, err))?;
            let t = mmm_theory(k);
            expect(&direct, &v.tau(&t), node, Some(&t), "direct M_2k vs tau(0, (2k)!)")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_mmm_properties(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let m = |x: &BundlePair, k: u32| m2k_direct(x, k).map_err(|err| transfer_failure(x, err));
    for &k in &ctx.ks {
        // the direct route gives relative values, which add up only when d0 is empty
        let absolute = |x: &BundlePair| ctx.ev.shape(x).map(|s| !s.d0).unwrap_or(false);
        for (a, b) in unions_of(ctx, e).into_iter().filter(|(a, b)| absolute(a) && absolute(b)) {
            let u = BundlePair::union_vertical(a.clone(), b.clone());
            let mut rhs = &m(&a, k)? + &m(&b, k)?;
            if a.dim() > 0 {
                rhs = &rhs - &m(&BundlePair::vertical_boundary(a.clone()), k)?;
            }
            expect(&m(&u, k)?, &rhs, &u, None, "M(E1 u E2) vs pieces")?;
            count += 1;
        }
        for x in ctx.aux_pieces() {
            let p = BundlePair::product(e.clone(), x.clone());
            let (se, sx) = (e.stats().map_err(|err| transfer_failure(e, err))?, x.stats().map_err(|err| transfer_failure(&x, err))?);
            let rhs = &m(e, k)?.scale_int(sx.chi_rel()) + &m(&x, k)?.scale_int(se.chi_rel());
            expect(&m(&p, k)?, &rhs, &p, None, "M of a product")?;
            count += 1;
        }
        let p = BundlePair::product(e.clone(), BundlePair::disk(VirtualBundle::trivial(2)));
        expect(&m(&p, k)?, &m(e, k)?, &p, None, "M(E x D^2) vs M(E)")?;
        count += 1;
        for node in e.subexpressions() {
            if node.dim() % 2 == 1 && ctx.closed(node) {
                expect(&m(node, k)?, &GradedClass::zero(4 * k), node, None, "M on a closed odd fiber")?;
                count += 1;
            }
        }
    }
    Ok(count)
}

fn check_fr_even_proportionality(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        if node.dim() % 2 != 0 || !ctx.closed(node) {
            continue;
        }
        let v = ctx.eval(node)?;
        for &k in &ctx.ks {
            let c = Scalar::zeta(ZetaSymbol::for_degree(k))
                .scale(&BigRational::new(BigInt::from(sign(k as i64)), BigInt::from(2) * factorial(2 * k)));
            let fr = fr_theory(k);
            expect(&v.tau(&fr), &v.tau(&mmm_theory(k)).scale(&c), node, Some(&fr), "tau_FR vs multiple of M")?;
            count += 1;
        }
    }
    Ok(count)
}

fn check_mmm_odd_vanishing(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let v = ctx.eval(node)?;
        let closed_odd = node.dim() % 2 == 1 && ctx.closed(node);
        for &k in &ctx.ks {
            let t = mmm_theory(k);
            let zero = GradedClass::zero(4 * k);
            expect(&v.tau_odd(&t), &zero, node, Some(&t), "odd part of M")?;
            if closed_odd {
                expect(&v.tau(&t), &zero, node, Some(&t), "M on a closed odd fiber")?;
            }
            count += 1;
        }
    }
    Ok(count)
}

fn check_even_odd(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    for node in e.subexpressions() {
        let v = ctx.eval(node)?;
        let closed = ctx.closed(node);
        for t in ctx.theories {
            let (even, odd) = (v.tau_even(t), v.tau_odd(t));
            expect(&(&even + &odd), &v.tau(t), node, Some(t), "tau+ + tau- vs tau")?;
            if closed {
                let zero = GradedClass::zero(4 * t.k());
                let vanishing = if v.dim % 2 == 0 { &odd } else { &even };
                expect(vanishing, &zero, node, Some(t), "wrong-parity part on a closed fiber")?;
            }
            count += 1;
        }
    }
    Ok(count)
}

fn check_naturality(ctx: &Ctx, e: &BundlePair) -> Result<usize, Box<Failure>> {
    let mut count = 0;
    let fixed = BundlePair::product(
        BundlePair::Trivial(TrivialSpec::closed(2, 2)),
        BundlePair::Trivial(TrivialSpec { dim: 1, chi: 1, chi0: Some(1), chi1: Some(1), corner: Some(0) }),
    );
    let mut nodes: Vec<BundlePair> =
        e.subexpressions().into_iter().filter(|n| matches!(n, BundlePair::Trivial(_))).cloned().collect();
    nodes.push(fixed);
    for node in nodes {
        let v = ctx.eval(&node)?;
        for t in ctx.theories {
            expect(&v.tau(t), &GradedClass::zero(4 * t.k()), &node, Some(t), "tau(B x F)")?;
            count += 1;
        }
    }
    Ok(count)
}

/// All checks, in report order.
pub fn checks() -> Vec<Check> {
    vec![
        Check { name: "additivity-axiom", statement: "tau(E1 u E2) = 1/2 tau(D E1) + 1/2 tau(D E2)", run: check_additivity_axiom },
        Check { name: "boundary-additivity", statement: "tau(E1 u E2) = tau(E1) + tau(E2) - tau(E1 n E2)", run: check_boundary_additivity },
        Check {
            name: "relative-additivity",
            statement: "tau(E1 u E2, d0) = tau(E1, d0) + tau(E2, d0) when E1 n E2 = d0 E2; Morse bundles split into handles",
            run: check_relative_additivity,
        },
        Check { name: "product-formula", statement: "tau(E x X, d0) = chi(X, d0) tau(E, d0) + chi(F, d0) tau(X, d0)", run: check_product_formula },
        Check { name: "transfer-axiom", statement: "tau(S^m(q*xi) over E) = chi(S^m) tau(E) + tr^E(tau_E(S^m(q*xi)))", run: check_transfer_axiom },
        Check {
            name: "relative-transfer",
            statement: "transfer axiom for (E, d0); tr^(E,d0) = tr^E - tr^(d0 E) = (-1)^n tr^(E,d1) on pullbacks",
            run: check_relative_transfer,
        },
        Check { name: "stability", statement: "tau(E x D^n) = tau(E)", run: check_stability },
        Check { name: "dv-times-disk", statement: "tau(dv E) = tau(dv(E x D^2))", run: check_dv_times_disk },
        Check { name: "four-piece-exchange", statement: "tau(E1 u E2) + tau(E3 u E4) = tau(E1 u E3) + tau(E2 u E4)", run: check_four_piece_exchange },
        Check {
            name: "duality-exercise",
            statement: "tau(E, d0) + (-1)^n tau(E, d1) = 2 tau+(E, d0); tau(E, d1) from handles (n - i, eta, xi)",
            run: check_duality,
        },
        Check {
            name: "linear-bundles",
            statement: "tau(S^n(xi)) = 2 s_n ch(xi), tau(D(xi)) = (s1 + s2) ch(xi), tau(D^i, S^(i-1)) = (s_i - s_(i-1)) ch(xi)",
            run: check_linear_bundles,
        },
        Check { name: "morse-theorem", statement: "tau(E, d0) = sum (-1)^i [(s1 + s2) ch(eta_i) + (s2 - s1) ch(xi_i)]", run: check_morse_theorem },
        Check { name: "morse-permutation", statement: "tau of a Morse bundle does not depend on the handle order", run: check_morse_permutation },
        Check { name: "hatcher", statement: "tau(Hatcher(xi, n)) = (-1)^(n+1) 2 s1 ch(xi)", run: check_hatcher },
        Check { name: "difference-torsion", statement: "tau - a tau_FR - b M = 0", run: check_difference_torsion },
        Check { name: "mmm-cross-validation", statement: "tr((2k)! ch(T^v E)) = tau(0, (2k)!)", run: check_mmm_cross_validation },
        Check {
            name: "mmm-properties",
            statement: "M_2k is additive, multiplicative on products, stable, and zero on closed odd fibers",
            run: check_mmm_properties,
        },
        Check {
            name: "fr-even-proportionality",
            statement: "closed even fibers: tau_FR = (-1)^k zeta(2k+1) / (2 (2k)!) M_2k",
            run: check_fr_even_proportionality,
        },
        Check { name: "mmm-odd-vanishing", statement: "tau-(M_2k) = 0; M_2k = 0 on closed odd fibers", run: check_mmm_odd_vanishing },
        Check {
            name: "even-odd-decomposition",
            statement: "tau = tau+ + tau-; tau- = 0 on closed even and tau+ = 0 on closed odd fibers",
            run: check_even_odd,
        },
        Check { name: "naturality", statement: "tau(B x F) = 0", run: check_naturality },
    ]
}

pub fn check(name: &str) -> Option<Check> {
    checks().into_iter().find(|c| c.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub expression: String,
    pub check: String,
    pub lhs: String,
    pub rhs: String,
    pub script: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// The identity being checked.
    pub citation: String,
    pub status: Status,
    /// Generated expressions on which the check had at least one instance.
    pub samples: usize,
    pub instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(skip)]
    pub minimized: Option<BundlePair>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} samples={} instances={}: {}", self.name, self.samples, self.instances, self.citation)?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n  {}: {} != {}", c.check, c.lhs, c.rhs)?;
            for line in c.script.lines() {
                write!(f, "\n  | {line}")?;
            }
        }
        Ok(())
    }
}

/// Greedily replaces subtrees while `fails` keeps holding. Candidates must
/// evaluate without error.
pub fn minimize_by(
    expr: &BundlePair,
    ev: &Evaluator,
    mut fails: impl FnMut(&BundlePair) -> bool,
) -> Result<BundlePair, VerifyError> {
    if !fails(expr) {
        return Err(VerifyError::InvalidMinimizeCall);
    }
    let mut current = expr.clone();
    'outer: loop {
        for cand in shrink(&current) {
            if ev.evaluate(&cand).is_ok() && fails(&cand) {
                current = cand;
                continue 'outer;
            }
        }
        return Ok(current);
    }
}

/// Minimizes a failing check on `expr`.
pub fn minimize(expr: &BundlePair, check: &Check, ctx: &Ctx) -> Result<BundlePair, VerifyError> {
    minimize_by(expr, &ctx.ev, |e| check.run(ctx, e).is_err())
}

/// Strictly smaller variants of `e`.
fn shrink(e: &BundlePair) -> Vec<BundlePair> {
    let mut out: Vec<BundlePair> = e.children().into_iter().cloned().collect();
    if let BundlePair::Morse { base, handles } = e {
        if base.is_some() {
            out.push(BundlePair::Morse { base: None, handles: handles.clone() });
        }
        for i in 0..handles.len() {
            let mut hs = handles.clone();
            hs.remove(i);
            out.push(BundlePair::Morse { base: base.clone(), handles: hs });
        }
    }
    for (i, c) in e.children().into_iter().enumerate() {
        for s in shrink(c) {
            out.push(e.with_child(i, s));
        }
    }
    out
}

fn replay_script(e: &BundlePair, roots: &[ChernRoot], t: Option<&TorsionTheory>) -> String {
    let names: Vec<&str> = roots.iter().map(ChernRoot::name).collect();
    let t = t.cloned().unwrap_or_else(|| fr_theory(1));
    format!("root {}\ntheory T = {t}\nE = {e}\nquery tau(T, E)\n", names.join(", "))
}

/// Runs every check on `samples` generated expressions.
pub fn run_suite(spec: &ExprSpec, samples: usize, theories: &[TorsionTheory]) -> Vec<CheckReport> {
    run_suite_with(Evaluator::default(), spec, samples, theories)
}

pub fn run_suite_with(ev: Evaluator, spec: &ExprSpec, samples: usize, theories: &[TorsionTheory]) -> Vec<CheckReport> {
    let exprs = gen_exprs(spec, samples);
    let ctx = Ctx::new(ev, theories, spec.root_pool[0].clone());
    let mut reports = vec![generator_report(&ctx, spec, &exprs)];
    for c in checks() {
        let mut report = CheckReport {
            name: c.name.to_string(),
            citation: c.statement.to_string(),
            status: Status::Pass,
            samples: 0,
            instances: 0,
            counterexample: None,
            minimized: None,
        };
        for e in &exprs {
            match c.run(&ctx, e) {
                Ok(0) => {}
                Ok(n) => {
                    report.samples += 1;
                    report.instances += n;
                }
                Err(failure) => {
                    let small = minimize(e, &c, &ctx).unwrap_or_else(|_| e.clone());
                    let failure = c.run(&ctx, &small).err().unwrap_or(failure);
                    report.status = Status::Fail;
                    report.counterexample = Some(Counterexample {
                        expression: small.to_string(),
                        check: format!("{} at {}", failure.what, failure.node),
                        lhs: failure.lhs,
                        rhs: failure.rhs,
                        script: replay_script(&small, &spec.root_pool, failure.theory.as_ref()),
                    });
                    report.minimized = Some(small);
                    break;
                }
            }
        }
        reports.push(report);
    }
    reports
}

fn generator_report(ctx: &Ctx, spec: &ExprSpec, exprs: &[BundlePair]) -> CheckReport {
    let bad = exprs
        .iter()
        .find(|e| e.depth() > spec.max_depth || e.validate(None).is_err() || ctx.eval(e).is_err());
    CheckReport {
        name: "generator".into(),
        citation: "generated expressions are valid and within the depth bound".into(),
        status: if bad.is_some() { Status::Fail } else { Status::Pass },
        samples: exprs.len(),
        instances: exprs.len(),
        counterexample: bad.map(|e| Counterexample {
            expression: e.to_string(),
            check: "generator".into(),
            lhs: format!("depth {}", e.depth()),
            rhs: format!("max depth {}", spec.max_depth),
            script: replay_script(e, &spec.root_pool, None),
        }),
        minimized: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torsion::Mutation;

    #[test]
    fn depth_one_is_a_leaf() {
        for seed in 0..40 {
            let e = gen_expr(&ExprSpec::new(seed, 1));
            assert!(matches!(e, BundlePair::Sphere { .. } | BundlePair::Disk(_)), "{e}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ExprSpec::new(7, 4);
        assert_eq!(gen_exprs(&spec, 20), gen_exprs(&spec, 20));
        assert_ne!(gen_exprs(&spec, 20), gen_exprs(&ExprSpec::new(8, 4), 20));
    }

    #[test]
    fn generated_expressions_are_valid() {
        let spec = ExprSpec::new(3, 4);
        let ev = Evaluator::default();
        let exprs = gen_exprs(&spec, 200);
        for e in &exprs {
            assert!(e.depth() <= 4, "{e}");
            assert!(ev.evaluate(e).is_ok(), "{e}");
        }
        let kinds: BTreeSet<&str> = exprs
            .iter()
            .flat_map(|e| e.subexpressions())
            .map(|n| n.to_string().split('(').next().unwrap().to_string())
            .map(|s| match s.as_str() {
                "sphere" => "sphere",
                "disk" => "disk",
                "reldisk" => "reldisk",
                "trivial" => "trivial",
                "hatcher" => "hatcher",
                "morse" => "morse",
                "double" => "double",
                "dv" => "dv",
                "union" => "union",
                "glue" => "glue",
                "prod" => "prod",
                _ => "other",
            })
            .collect();
        assert_eq!(kinds.len(), 11, "{kinds:?}");
    }

    #[test]
    fn decomposable_random_theories() {
        for t in random_theories(5, 2, 10) {
            assert!(decompose(&t).is_ok());
        }
    }

    #[test]
    fn minimize_rejects_passing_expressions() {
        let e = gen_expr(&ExprSpec::new(1, 3));
        let ev = Evaluator::default();
        assert_eq!(minimize_by(&e, &ev, |_| false), Err(VerifyError::InvalidMinimizeCall));
    }

    #[test]
    fn minimal_leaf_is_a_fixed_point() {
        let leaf = BundlePair::sphere(pad(&VirtualBundle::line(ChernRoot::new("x").unwrap()), 3), 2);
        let ev = Evaluator::default();
        assert_eq!(minimize_by(&leaf, &ev, |_| true).unwrap(), leaf);
    }

    #[test]
    fn small_suite_passes() {
        let theories = standard_theories(11, 1, 3);
        for r in run_suite(&ExprSpec::new(11, 3), 20, &theories) {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn corrupted_morse_rule_is_caught() {
        let theories = standard_theories(2, 1, 2);
        let ev = Evaluator::new(Some(Mutation::MorseSign));
        let reports = run_suite_with(ev, &ExprSpec::new(2, 4), 60, &theories);
        let r = reports.iter().find(|r| r.name == "relative-additivity").unwrap();
        assert_eq!(r.status, Status::Fail);
        let small = r.minimized.as_ref().unwrap();
        assert!(small.depth() <= 2, "{small}");
        assert!(r.counterexample.as_ref().unwrap().script.contains("query tau(T, E)"));
    }
}

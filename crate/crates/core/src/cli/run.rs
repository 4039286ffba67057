use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::bundles::{BundlePair, Handle, Workspace};
use crate::chern::{ChernRoot, VirtualBundle};
use crate::torsion::{fr_theory, mmm_theory, Evaluator, TorsionTheory};
use crate::transfer::{m2k_direct, transfer_pullback};

use super::{
    BundleExpr, BundleTerm, CliError, EvalError, Expr, Query, Script, SemanticError, Span, Statement, StatementKind,
    TauKind, TheoryExpr,
};

/// A query with its names resolved.
enum Prepared {
    Tau(TauKind, TorsionTheory, BundlePair),
    M2k(BundlePair, u32),
    Chi(BundlePair),
    Transfer(BundlePair, crate::chern::GradedClass),
}

/// Name tables built while checking a script.
#[derive(Default)]
pub struct Interpreter {
    ws: Workspace,
    theories: HashMap<String, TorsionTheory>,
    exprs: HashMap<String, BundlePair>,
    names: HashSet<String>,
    ev: Evaluator,
}

struct Here<'a> {
    st: &'a Statement,
}

impl Here<'_> {
    fn err(&self, message: impl Into<String>) -> SemanticError {
        SemanticError { span: self.st.span, statement: self.st.to_string(), message: message.into() }
    }
}

impl Interpreter {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, name: &str, here: &Here) -> Result<(), SemanticError> {
        if self.names.insert(name.to_string()) {
            Ok(())
        } else {
            Err(here.err(format!("'{name}' is already defined")))
        }
    }

    fn bundle(&self, b: &BundleExpr, here: &Here) -> Result<VirtualBundle, SemanticError> {
        let mut out = VirtualBundle::zero();
        for t in &b.terms {
            let v = match t {
                BundleTerm::Line(r) => {
                    let root = ChernRoot::new(r).map_err(|e| here.err(e.to_string()))?;
                    if !self.ws.has_root(&root) {
                        return Err(here.err(format!("root '{r}' is not declared")));
                    }
                    VirtualBundle::line(root)
                }
                BundleTerm::Trivial(n) => VirtualBundle::trivial(*n),
                BundleTerm::Complement(inner, n) => self.bundle(inner, here)?.complement(*n),
                BundleTerm::Name(n) => {
                    self.ws.bundle(n).cloned().ok_or_else(|| here.err(format!("bundle '{n}' is not defined")))?
                }
            };
            out = out.whitney_sum(&v);
        }
        Ok(out)
    }

    fn theory(&self, t: &TheoryExpr, here: &Here) -> Result<TorsionTheory, SemanticError> {
        Ok(match t {
            TheoryExpr::Fr(k) => fr_theory(*k),
            TheoryExpr::Mmm(k) => mmm_theory(*k),
            TheoryExpr::Custom(k, s1, s2) => {
                TorsionTheory::new(*k, s1.clone(), s2.clone()).map_err(|e| here.err(e.to_string()))?
            }
            TheoryExpr::Name(n) => {
                self.theories.get(n).cloned().ok_or_else(|| here.err(format!("theory '{n}' is not defined")))?
            }
        })
    }

    fn expr(&self, e: &Expr, here: &Here) -> Result<BundlePair, SemanticError> {
        let sub = |x: &Expr| self.expr(x, here);
        Ok(match e {
            Expr::Name(n) => {
                self.exprs.get(n).cloned().ok_or_else(|| here.err(format!("expression '{n}' is not defined")))?
            }
            Expr::Trivial(t) => BundlePair::Trivial(t.clone()),
            Expr::Sphere(xi, n) => BundlePair::sphere(self.bundle(xi, here)?, *n),
            Expr::Disk(xi) => BundlePair::disk(self.bundle(xi, here)?),
            Expr::RelDisk(xi) => BundlePair::rel_disk(self.bundle(xi, here)?),
            Expr::Double(a) => BundlePair::double(sub(a)?),
            Expr::Dv(a) => BundlePair::vertical_boundary(sub(a)?),
            Expr::Union(a, b) => BundlePair::union_vertical(sub(a)?, sub(b)?),
            Expr::Glue(a, b) => BundlePair::union_handle(sub(a)?, sub(b)?),
            Expr::Prod(a, b) => BundlePair::product(sub(a)?, sub(b)?),
            Expr::Morse { base, handles } => {
                let base = base.as_deref().map(sub).transpose()?;
                let hs = handles
                    .iter()
                    .map(|h| Ok(Handle::new(h.index, self.bundle(&h.xi, here)?, self.bundle(&h.eta, here)?)))
                    .collect::<Result<Vec<_>, SemanticError>>()?;
                BundlePair::morse(base, hs)
            }
            Expr::Hatcher(xi, n, total) => BundlePair::hatcher(self.bundle(xi, here)?, *n, *total),
        })
    }

    /// Resolves and validates an expression.
    fn checked(&self, e: &Expr, here: &Here) -> Result<BundlePair, SemanticError> {
        let bp = self.expr(e, here)?;
        bp.validate(Some(&self.ws)).map_err(|ds| {
            here.err(ds.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
        })?;
        Ok(bp)
    }

    fn check(&mut self, st: &Statement) -> Result<Option<Prepared>, SemanticError> {
        let here = Here { st };
        match &st.kind {
            StatementKind::Root(names) => {
                for n in names {
                    let root = ChernRoot::new(n).map_err(|e| here.err(e.to_string()))?;
                    self.declare(n, &here)?;
                    self.ws.declare_root(root);
                }
            }
            StatementKind::Bundle { name, value } => {
                let v = self.bundle(value, &here)?;
                self.declare(name, &here)?;
                self.ws.define_bundle(name, v);
            }
            StatementKind::Theory { name, value } => {
                let t = self.theory(value, &here)?;
                self.declare(name, &here)?;
                self.theories.insert(name.clone(), t);
            }
            StatementKind::Expr { name, value } => {
                let e = self.checked(value, &here)?;
                self.declare(name, &here)?;
                self.exprs.insert(name.clone(), e);
            }
            StatementKind::Query(q) => {
                return Ok(Some(match q {
                    Query::Tau { kind, theory, expr } => {
                        Prepared::Tau(*kind, self.theory(theory, &here)?, self.checked(expr, &here)?)
                    }
                    Query::M2k { expr, k } => Prepared::M2k(self.checked(expr, &here)?, *k),
                    Query::Chi(expr) => Prepared::Chi(self.checked(expr, &here)?),
                    Query::Transfer { expr, class } => Prepared::Transfer(self.checked(expr, &here)?, class.clone()),
                }))
            }
        }
        Ok(None)
    }

    fn answer(&self, q: &Prepared) -> Result<String, String> {
        let s = |e: &dyn ToString| e.to_string();
        Ok(match q {
            Prepared::Tau(kind, t, e) => {
                let v = self.ev.evaluate(e).map_err(|e| s(&e))?;
                match kind {
                    TauKind::Tau => v.tau(t),
                    TauKind::Even => v.tau_even(t),
                    TauKind::Odd => v.tau_odd(t),
                    TauKind::Delta => v.difference_torsion(t).map_err(|e| s(&e))?,
                }
                .to_string()
            }
            Prepared::M2k(e, k) => m2k_direct(e, *k).map_err(|e| s(&e))?.to_string(),
            Prepared::Chi(e) => e.stats().map_err(|e| s(&e))?.chi_rel().to_string(),
            Prepared::Transfer(e, y) => transfer_pullback(e, y).map_err(|e| s(&e))?.to_string(),
        })
    }

    /// Checks the whole script, then answers the queries in order, one line
    /// each. Output written before an evaluation error is kept.
    pub fn execute(&mut self, script: &Script, out: &mut String) -> Result<(), CliError> {
        let mut queries: Vec<(Span, String, Prepared)> = Vec::new();
        for st in &script.statements {
            if let Some(q) = self.check(st)? {
                queries.push((st.span, st.to_string(), q));
            }
        }
        for (span, statement, q) in &queries {
            let line = self
                .answer(q)
                .map_err(|message| EvalError { span: *span, statement: statement.clone(), message })?;
            writeln!(out, "{line}").expect("writing to a string");
        }
        Ok(())
    }
}

pub fn run_into(script: &Script, out: &mut String) -> Result<(), CliError> {
    Interpreter::new().execute(script, out)
}

pub fn run(script: &Script) -> Result<String, CliError> {
    let mut out = String::new();
    run_into(script, &mut out)?;
    Ok(out)
}

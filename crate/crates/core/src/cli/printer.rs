//! Canonical script text. Parsing the output gives back the same tree.

use std::fmt;

use super::{BundleExpr, BundleTerm, Expr, HandleExpr, Query, Script, Statement, StatementKind, TheoryExpr};

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatementKind::Root(names) => write!(f, "root {}", names.join(", ")),
            StatementKind::Bundle { name, value } => write!(f, "vb {name} = {value}"),
            StatementKind::Theory { name, value } => write!(f, "theory {name} = {value}"),
            StatementKind::Expr { name, value } => write!(f, "{name} = {value}"),
            StatementKind::Query(q) => write!(f, "query {q}"),
        }
    }
}

impl fmt::Display for BundleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match t {
                BundleTerm::Line(r) => write!(f, "line({r})")?,
                BundleTerm::Trivial(n) => write!(f, "trivial({n})")?,
                BundleTerm::Complement(b, n) => write!(f, "complement({b}, {n})")?,
                BundleTerm::Name(n) => f.write_str(n)?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for TheoryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryExpr::Fr(k) => write!(f, "fr({k})"),
            TheoryExpr::Mmm(k) => write!(f, "mmm({k})"),
            TheoryExpr::Custom(k, s1, s2) => write!(f, "custom({k}, {s1}, {s2})"),
            TheoryExpr::Name(n) => f.write_str(n),
        }
    }
}

impl fmt::Display for HandleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.index, self.xi, self.eta)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Name(n) => f.write_str(n),
            Expr::Trivial(t) => {
                write!(f, "trivial(n={}, chi={}", t.dim, t.chi)?;
                for (key, v) in [("chi0", t.chi0), ("chi1", t.chi1), ("corner", t.corner)] {
                    if let Some(v) = v {
                        write!(f, ", {key}={v}")?;
                    }
                }
                f.write_str(")")
            }
            Expr::Sphere(xi, n) => write!(f, "sphere({xi}, n={n})"),
            Expr::Disk(xi) => write!(f, "disk({xi})"),
            Expr::RelDisk(xi) => write!(f, "reldisk({xi})"),
            Expr::Double(e) => write!(f, "double({e})"),
            Expr::Dv(e) => write!(f, "dv({e})"),
            Expr::Union(a, b) => write!(f, "union({a}, {b})"),
            Expr::Glue(a, b) => write!(f, "glue({a}, {b})"),
            Expr::Prod(a, b) => write!(f, "prod({a}, {b})"),
            Expr::Morse { base, handles } => {
                f.write_str("morse(")?;
                if let Some(b) = base {
                    write!(f, "base={b}, ")?;
                }
                let hs: Vec<String> = handles.iter().map(ToString::to_string).collect();
                write!(f, "handles=[{}])", hs.join(", "))
            }
            Expr::Hatcher(xi, n, total) => write!(f, "hatcher({xi}, n={n}, total={total})"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Tau { kind, theory, expr } => write!(f, "{}({theory}, {expr})", kind.keyword()),
            Query::M2k { expr, k } => write!(f, "m2k({expr}, {k})"),
            Query::Chi(e) => write!(f, "chi({e})"),
            Query::Transfer { expr, class } => write!(f, "transfer({expr}, {class})"),
        }
    }
}

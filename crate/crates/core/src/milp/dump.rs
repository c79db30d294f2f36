//! Plain-text model dump used by golden-file tests and debugging.
//!
//! ```text
//! var <id> <kind> <lb> <ub> <label>
//! con <id> <origin> <terms> <sense> <rhs>
//! obj <terms>
//! ```
//! Terms are written as `<coef>*v<id>` separated by spaces, followed by a
//! `const=<c>` token when the expression carries a nonzero constant.

use std::fmt::Write;

use super::{LinearExpr, Model, Origin, VarKind};

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_owned()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_owned()
    } else {
        format!("{v}")
    }
}

fn terms(expr: &LinearExpr) -> String {
    let mut out = String::new();
    for (i, &(c, v)) in expr.terms.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}*{v}", number(c));
    }
    if expr.constant != 0.0 {
        if !out.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "const={}", number(expr.constant));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl Model {
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.variables {
            let kind = match v.kind {
                VarKind::Binary => "binary",
                VarKind::Continuous => "continuous",
            };
            let _ = writeln!(out, "var {} {kind} {} {} {}", v.id.0, number(v.lower), number(v.upper), v.label);
        }
        for c in &self.constraints {
            let origin = match c.origin {
                Origin::Pre => "pre".to_owned(),
                Origin::User(d) => format!("user:{d}"),
                Origin::Internal => "internal".to_owned(),
            };
            let _ = writeln!(out, "con {} {origin} {} {} {}", c.id.0, terms(&c.expr), c.sense.symbol(), number(c.rhs));
        }
        let _ = writeln!(out, "obj {}", terms(&self.objective));
        out
    }
}

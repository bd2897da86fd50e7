//! Expression trees shared by the surface language, the IR, and the
//! symbolic layer. Equality and hashing ignore source spans.

use crate::value::{TypeTag, Value};
use std::fmt;
use std::hash::{Hash, Hasher};

/// Position of a construct in its source file. Lines and columns are
/// 1-based; synthesized expressions carry [`Span::NONE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub len: u32,
}

impl Span {
    pub const NONE: Span = Span {
        line: 0,
        col: 0,
        len: 0,
    };

    pub fn new(line: u32, col: u32, len: u32) -> Span {
        Span { line, col, len }
    }
}

/// Comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    /// Logical negation of the relation.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    /// The relation with swapped operands.
    pub fn mirror(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
            op => op,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        };
        write!(f, "{s}")
    }
}

/// A named reference. The type is resolved at parse time from the declaring
/// scope (ports, internal variables, parameters) or, for symbolic
/// constants, fixed when the variable is minted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: String,
    pub ty: TypeTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprNode {
    Const(Value),
    Var(VarRef),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub node: ExprNode,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.node.hash(state);
    }
}

impl Expr {
    pub fn new(node: ExprNode) -> Expr {
        Expr {
            node,
            span: Span::NONE,
        }
    }

    pub fn with_span(node: ExprNode, span: Span) -> Expr {
        Expr { node, span }
    }

    pub fn constant(v: Value) -> Expr {
        Expr::new(ExprNode::Const(v))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Value::Int(n))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::constant(Value::rat_i64(n, d))
    }

    pub fn boolean(b: bool) -> Expr {
        Expr::constant(Value::Bool(b))
    }

    pub fn var(name: impl Into<String>, ty: TypeTag) -> Expr {
        Expr::new(ExprNode::Var(VarRef {
            name: name.into(),
            ty,
        }))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprNode::Add(Box::new(a), Box::new(b)))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprNode::Sub(Box::new(a), Box::new(b)))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprNode::Mul(Box::new(a), Box::new(b)))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::new(ExprNode::Neg(Box::new(a)))
    }

    pub fn not(a: Expr) -> Expr {
        Expr::new(ExprNode::Not(Box::new(a)))
    }

    pub fn and(children: Vec<Expr>) -> Expr {
        Expr::new(ExprNode::And(children))
    }

    pub fn or(children: Vec<Expr>) -> Expr {
        Expr::new(ExprNode::Or(children))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::new(ExprNode::Cmp(op, Box::new(a), Box::new(b)))
    }

    /// Static type of the expression, when derivable. Arithmetic over mixed
    /// int/rational operands promotes to rational; `Const(Null)` has no
    /// type.
    pub fn ty(&self) -> Option<TypeTag> {
        match &self.node {
            ExprNode::Const(v) => v.type_tag(),
            ExprNode::Var(v) => Some(v.ty.clone()),
            ExprNode::Neg(a) => a.ty(),
            ExprNode::Add(a, b) | ExprNode::Sub(a, b) | ExprNode::Mul(a, b) => {
                match (a.ty(), b.ty()) {
                    (Some(TypeTag::Int), Some(TypeTag::Int)) => Some(TypeTag::Int),
                    (Some(t1), Some(t2)) if t1.is_numeric() && t2.is_numeric() => {
                        Some(TypeTag::Rat)
                    }
                    (Some(t), None) | (None, Some(t)) if t.is_numeric() => Some(t),
                    (None, None) => None,
                    _ => None,
                }
            }
            ExprNode::Not(_) | ExprNode::And(_) | ExprNode::Or(_) | ExprNode::Cmp(..) => {
                Some(TypeTag::Bool)
            }
        }
    }

    /// Collects free variable references in first-occurrence order.
    pub fn free_vars(&self) -> Vec<VarRef> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarRef>) {
        match &self.node {
            ExprNode::Const(_) => {}
            ExprNode::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            ExprNode::Neg(a) | ExprNode::Not(a) => a.collect_vars(out),
            ExprNode::Add(a, b)
            | ExprNode::Sub(a, b)
            | ExprNode::Mul(a, b)
            | ExprNode::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ExprNode::And(cs) | ExprNode::Or(cs) => {
                for c in cs {
                    c.collect_vars(out);
                }
            }
        }
    }
}

// Binding strength, loosest to tightest: || < && < ! < comparison < +,- < * < unary -
fn level(e: &Expr) -> u8 {
    match &e.node {
        ExprNode::Or(_) => 1,
        ExprNode::And(_) => 2,
        ExprNode::Not(_) => 3,
        ExprNode::Cmp(..) => 4,
        ExprNode::Add(..) | ExprNode::Sub(..) => 5,
        ExprNode::Mul(..) => 6,
        ExprNode::Neg(_) => 7,
        ExprNode::Const(_) | ExprNode::Var(_) => 8,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_level: u8) -> fmt::Result {
    if level(child) < min_level {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            ExprNode::Const(v) => write!(f, "{v}"),
            ExprNode::Var(v) => write!(f, "{}", v.name),
            ExprNode::Neg(a) => {
                write!(f, "-")?;
                fmt_child(f, a, 7)
            }
            ExprNode::Add(a, b) => {
                fmt_child(f, a, 5)?;
                write!(f, " + ")?;
                fmt_child(f, b, 6)
            }
            ExprNode::Sub(a, b) => {
                fmt_child(f, a, 5)?;
                write!(f, " - ")?;
                fmt_child(f, b, 6)
            }
            ExprNode::Mul(a, b) => {
                fmt_child(f, a, 6)?;
                write!(f, " * ")?;
                fmt_child(f, b, 7)
            }
            ExprNode::Not(a) => {
                write!(f, "!")?;
                fmt_child(f, a, 4)
            }
            ExprNode::And(cs) => {
                if cs.is_empty() {
                    return write!(f, "true");
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " && ")?;
                    }
                    fmt_child(f, c, 3)?;
                }
                Ok(())
            }
            ExprNode::Or(cs) => {
                if cs.is_empty() {
                    return write!(f, "false");
                }
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " || ")?;
                    }
                    fmt_child(f, c, 2)?;
                }
                Ok(())
            }
            ExprNode::Cmp(op, a, b) => {
                fmt_child(f, a, 5)?;
                write!(f, " {op} ")?;
                fmt_child(f, b, 5)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_uses_minimal_parens() {
        let x = || Expr::var("x", TypeTag::Int);
        let e = Expr::cmp(
            CmpOp::Lt,
            Expr::mul(Expr::int(2), x()),
            Expr::add(x(), Expr::int(1)),
        );
        assert_eq!(e.to_string(), "2 * x < x + 1");

        let g = Expr::and(vec![
            Expr::or(vec![Expr::boolean(true), Expr::boolean(false)]),
            Expr::not(Expr::cmp(CmpOp::Eq, x(), Expr::int(3))),
        ]);
        assert_eq!(g.to_string(), "(true || false) && !x = 3");
    }

    #[test]
    fn equality_ignores_spans() {
        let a = Expr::with_span(ExprNode::Const(Value::Int(1)), Span::new(3, 4, 1));
        let b = Expr::int(1);
        assert_eq!(a, b);
    }
}

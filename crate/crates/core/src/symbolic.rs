//! Symbolic expression algebra: annotated values, substitution, concrete
//! evaluation, canonical simplification, and path-condition bookkeeping.
//!
//! Canonical forms are the equality currency of the whole engine: numeric
//! terms normalize to a sorted linear sum, comparisons to `sum ⋈ k` with a
//! positive leading coefficient (gcd-reduced and strictness-tightened over
//! integers), and boolean structure is flattened, sorted, and deduplicated.
//! Two expressions are treated as equivalent exactly when their canonical
//! forms are structurally equal.

use crate::expr::{CmpOp, Expr, ExprNode, VarRef};
use crate::value::{TypeTag, Value};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

/// A symbolic constant. Input variables are named
/// `in_<instancePath>_<port>_t<tick>`; oracle choice markers are `ch_<k>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymVar {
    pub name: String,
    pub ty: TypeTag,
}

impl SymVar {
    pub fn input(instance_path: &str, port: &str, tick: u32, ty: TypeTag) -> SymVar {
        SymVar {
            name: format!("in_{instance_path}_{port}_t{tick}"),
            ty,
        }
    }

    pub fn choice(k: usize) -> SymVar {
        SymVar {
            name: format!("ch_{k}"),
            ty: TypeTag::Int,
        }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::var(self.name.clone(), self.ty.clone())
    }
}

/// True for names reserved for symbolic constants.
pub fn is_symvar_name(name: &str) -> bool {
    name.starts_with("in_") || name.starts_with("ch_")
}

/// The symbolic and concrete halves of one message or variable, carried
/// together through execution.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedValue {
    pub sym: Expr,
    pub conc: Value,
}

impl AnnotatedValue {
    pub fn constant(v: Value) -> AnnotatedValue {
        AnnotatedValue {
            sym: Expr::constant(v.clone()),
            conc: v,
        }
    }

    /// Checked invariant: evaluating the symbolic half under the input
    /// assignment reproduces the concrete half.
    pub fn coherent(&self, input_env: &Env) -> bool {
        matches!(eval_concrete(&self.sym, input_env), Ok(v) if v == self.conc)
    }
}

/// One guard evaluation: the fully substituted symbolic condition (only
/// symbolic constants and literals remain) and its concrete truth value.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub branch_id: String,
    pub cond: Expr,
    pub taken: bool,
}

impl BranchRecord {
    /// The condition as it constrains this path: `cond` if taken,
    /// `¬cond` otherwise, canonicalized.
    pub fn signed_cond(&self) -> Expr {
        if self.taken {
            simplify(&self.cond)
        } else {
            negate(&self.cond)
        }
    }
}

/// Ordered branch records of one execution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathCondition {
    pub records: Vec<BranchRecord>,
}

impl PathCondition {
    /// Conjunction of all signed conditions, canonicalized.
    pub fn conjunction(&self) -> Expr {
        simplify(&Expr::and(
            self.records.iter().map(|r| r.signed_cond()).collect(),
        ))
    }
}

/// Splits a path condition into its signed, simplified branch conditions,
/// preserving execution order.
pub fn decompose(pc: &PathCondition) -> Vec<Expr> {
    pc.records.iter().map(|r| r.signed_cond()).collect()
}

pub type Env = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("integer overflow while evaluating {0}")]
    Overflow(String),
    #[error("unbound name {0}")]
    Unbound(String),
    #[error("type error: {0}")]
    Type(String),
}

fn num_binop(
    op: &str,
    a: &Value,
    b: &Value,
    int_op: impl Fn(i64, i64) -> Option<i64>,
    rat_op: impl Fn(&BigRational, &BigRational) -> BigRational,
) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
        (Value::Int(x), Value::Int(y)) => int_op(*x, *y)
            .map(Value::Int)
            .ok_or_else(|| EvalError::Overflow(format!("{x} {op} {y}"))),
        _ => {
            let (x, y) = (a.as_rational(), b.as_rational());
            match (x, y) {
                (Some(x), Some(y)) => Ok(Value::Rat(rat_op(&x, &y))),
                _ => Err(EvalError::Type(format!("{op} over non-numeric operands"))),
            }
        }
    }
}

/// Evaluates an expression under a concrete assignment. `Null` propagates
/// through every operation; comparisons with `Null` yield `false`.
pub fn eval_concrete(e: &Expr, env: &Env) -> Result<Value, EvalError> {
    match &e.node {
        ExprNode::Const(v) => Ok(v.clone()),
        ExprNode::Var(v) => env
            .get(&v.name)
            .cloned()
            .ok_or_else(|| EvalError::Unbound(v.name.clone())),
        ExprNode::Neg(a) => match eval_concrete(a, env)? {
            Value::Null => Ok(Value::Null),
            Value::Int(n) => n
                .checked_neg()
                .map(Value::Int)
                .ok_or_else(|| EvalError::Overflow(format!("-{n}"))),
            Value::Rat(r) => Ok(Value::Rat(-r)),
            other => Err(EvalError::Type(format!("cannot negate {other}"))),
        },
        ExprNode::Add(a, b) => num_binop(
            "+",
            &eval_concrete(a, env)?,
            &eval_concrete(b, env)?,
            i64::checked_add,
            |x, y| x + y,
        ),
        ExprNode::Sub(a, b) => num_binop(
            "-",
            &eval_concrete(a, env)?,
            &eval_concrete(b, env)?,
            i64::checked_sub,
            |x, y| x - y,
        ),
        ExprNode::Mul(a, b) => num_binop(
            "*",
            &eval_concrete(a, env)?,
            &eval_concrete(b, env)?,
            i64::checked_mul,
            |x, y| x * y,
        ),
        ExprNode::Not(a) => match eval_concrete(a, env)? {
            Value::Null => Ok(Value::Null),
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(EvalError::Type(format!("cannot apply ! to {other}"))),
        },
        ExprNode::And(cs) | ExprNode::Or(cs) => {
            let is_and = matches!(&e.node, ExprNode::And(_));
            let mut saw_null = false;
            let mut acc = is_and;
            for c in cs {
                match eval_concrete(c, env)? {
                    Value::Null => saw_null = true,
                    Value::Bool(b) => {
                        if is_and {
                            acc &= b;
                        } else {
                            acc |= b;
                        }
                    }
                    other => {
                        return Err(EvalError::Type(format!("boolean operand expected, got {other}")))
                    }
                }
            }
            if saw_null {
                Ok(Value::Null)
            } else {
                Ok(Value::Bool(acc))
            }
        }
        ExprNode::Cmp(op, a, b) => {
            let x = eval_concrete(a, env)?;
            let y = eval_concrete(b, env)?;
            if x.is_null() || y.is_null() {
                return Ok(Value::Bool(false));
            }
            let verdict = match (&x, &y) {
                (Value::Int(_), Value::Int(_))
                | (Value::Int(_), Value::Rat(_))
                | (Value::Rat(_), Value::Int(_))
                | (Value::Rat(_), Value::Rat(_)) => {
                    let (rx, ry) = (x.as_rational().unwrap(), y.as_rational().unwrap());
                    match op {
                        CmpOp::Lt => rx < ry,
                        CmpOp::Le => rx <= ry,
                        CmpOp::Eq => rx == ry,
                        CmpOp::Ne => rx != ry,
                        CmpOp::Ge => rx >= ry,
                        CmpOp::Gt => rx > ry,
                    }
                }
                (Value::Bool(p), Value::Bool(q)) => match op {
                    CmpOp::Eq => p == q,
                    CmpOp::Ne => p != q,
                    _ => return Err(EvalError::Type("ordered comparison of bools".into())),
                },
                (Value::Str(p), Value::Str(q)) => match op {
                    CmpOp::Eq => p == q,
                    CmpOp::Ne => p != q,
                    _ => return Err(EvalError::Type("ordered comparison of strings".into())),
                },
                (Value::EnumVal(e1, v1), Value::EnumVal(e2, v2)) => match op {
                    CmpOp::Eq => e1 == e2 && v1 == v2,
                    CmpOp::Ne => !(e1 == e2 && v1 == v2),
                    _ => return Err(EvalError::Type("ordered comparison of enums".into())),
                },
                _ => {
                    return Err(EvalError::Type(format!(
                        "incomparable operands {x} and {y}"
                    )))
                }
            };
            Ok(Value::Bool(verdict))
        }
    }
}

/// Capture-free replacement of named references. Names absent from the
/// binding must be symbolic constants (`in_…`/`ch_…`); anything else is an
/// unbound-name error.
pub fn substitute(e: &Expr, bind: &BTreeMap<String, Expr>) -> Result<Expr, EvalError> {
    Ok(match &e.node {
        ExprNode::Const(_) => e.clone(),
        ExprNode::Var(v) => match bind.get(&v.name) {
            Some(repl) => repl.clone(),
            None if is_symvar_name(&v.name) => e.clone(),
            None => return Err(EvalError::Unbound(v.name.clone())),
        },
        ExprNode::Neg(a) => Expr::neg(substitute(a, bind)?),
        ExprNode::Not(a) => Expr::not(substitute(a, bind)?),
        ExprNode::Add(a, b) => Expr::add(substitute(a, bind)?, substitute(b, bind)?),
        ExprNode::Sub(a, b) => Expr::sub(substitute(a, bind)?, substitute(b, bind)?),
        ExprNode::Mul(a, b) => Expr::mul(substitute(a, bind)?, substitute(b, bind)?),
        ExprNode::And(cs) => Expr::and(
            cs.iter()
                .map(|c| substitute(c, bind))
                .collect::<Result<_, _>>()?,
        ),
        ExprNode::Or(cs) => Expr::or(
            cs.iter()
                .map(|c| substitute(c, bind))
                .collect::<Result<_, _>>()?,
        ),
        ExprNode::Cmp(op, a, b) => Expr::cmp(*op, substitute(a, bind)?, substitute(b, bind)?),
    })
}

// ---------------------------------------------------------------------------
// Canonical simplification
// ---------------------------------------------------------------------------

/// Linear sum Σ cᵢ·xᵢ + k over exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinTerm {
    pub coeffs: BTreeMap<VarRef, BigRational>,
    pub constant: BigRational,
}

enum LinErr {
    /// The term contains `Null`; the whole numeric expression is `Null`.
    Null,
    /// Not linear or not numeric; leave the expression as-is.
    Opaque,
}

impl LinTerm {
    fn constant_only(c: BigRational) -> LinTerm {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    fn add_scaled(&mut self, other: &LinTerm, factor: &BigRational) {
        for (v, c) in &other.coeffs {
            let entry = self
                .coeffs
                .entry(v.clone())
                .or_insert_with(BigRational::zero);
            *entry += c * factor;
        }
        self.constant += &other.constant * factor;
        self.coeffs.retain(|_, c| !c.is_zero());
    }

    fn scale(&mut self, factor: &BigRational) {
        for c in self.coeffs.values_mut() {
            *c *= factor;
        }
        self.constant *= factor;
        self.coeffs.retain(|_, c| !c.is_zero());
    }

    fn all_int_vars(&self) -> bool {
        self.coeffs.keys().all(|v| v.ty == TypeTag::Int)
    }
}

fn linearize(e: &Expr) -> Result<LinTerm, LinErr> {
    match &e.node {
        ExprNode::Const(Value::Int(n)) => Ok(LinTerm::constant_only(BigRational::from_integer(
            BigInt::from(*n),
        ))),
        ExprNode::Const(Value::Rat(r)) => Ok(LinTerm::constant_only(r.clone())),
        ExprNode::Const(Value::Null) => Err(LinErr::Null),
        ExprNode::Const(_) => Err(LinErr::Opaque),
        ExprNode::Var(v) if v.ty.is_numeric() => {
            let mut coeffs = BTreeMap::new();
            coeffs.insert(v.clone(), BigRational::one());
            Ok(LinTerm {
                coeffs,
                constant: BigRational::zero(),
            })
        }
        ExprNode::Var(_) => Err(LinErr::Opaque),
        ExprNode::Neg(a) => {
            let mut t = linearize(a)?;
            t.scale(&-BigRational::one());
            Ok(t)
        }
        ExprNode::Add(a, b) => {
            let mut t = linearize(a)?;
            t.add_scaled(&linearize(b)?, &BigRational::one());
            Ok(t)
        }
        ExprNode::Sub(a, b) => {
            let mut t = linearize(a)?;
            t.add_scaled(&linearize(b)?, &-BigRational::one());
            Ok(t)
        }
        ExprNode::Mul(a, b) => {
            let ta = linearize(a)?;
            let tb = linearize(b)?;
            if ta.coeffs.is_empty() {
                let mut t = tb;
                t.scale(&ta.constant);
                Ok(t)
            } else if tb.coeffs.is_empty() {
                let mut t = ta;
                t.scale(&tb.constant);
                Ok(t)
            } else {
                Err(LinErr::Opaque)
            }
        }
        _ => Err(LinErr::Opaque),
    }
}

fn const_value(c: &BigRational, as_int: bool) -> Value {
    use num_traits::ToPrimitive;
    if as_int && c.is_integer() {
        if let Some(n) = c.to_integer().to_i64() {
            return Value::Int(n);
        }
    }
    Value::Rat(c.clone())
}

/// Renders a linear sum back to a deterministic expression shape:
/// variables in sorted order, unit coefficients elided, negative terms via
/// subtraction, constant last.
fn render_term(t: &LinTerm, int_hint: bool) -> Expr {
    let int_ctx = int_hint && t.all_int_vars();
    let mut acc: Option<Expr> = None;
    for (var, coeff) in &t.coeffs {
        let var_is_int = var.ty == TypeTag::Int;
        let mag = coeff.abs();
        let base = if mag.is_one() {
            Expr::var(var.name.clone(), var.ty.clone())
        } else {
            Expr::mul(
                Expr::constant(const_value(&mag, var_is_int && mag.is_integer())),
                Expr::var(var.name.clone(), var.ty.clone()),
            )
        };
        acc = Some(match acc {
            None => {
                if coeff.is_negative() {
                    Expr::neg(base)
                } else {
                    base
                }
            }
            Some(prev) => {
                if coeff.is_negative() {
                    Expr::sub(prev, base)
                } else {
                    Expr::add(prev, base)
                }
            }
        });
    }
    match acc {
        None => Expr::constant(const_value(&t.constant, int_ctx && t.constant.is_integer())),
        Some(sum) => {
            if t.constant.is_zero() {
                sum
            } else if t.constant.is_negative() {
                Expr::sub(
                    sum,
                    Expr::constant(const_value(&t.constant.abs(), int_ctx)),
                )
            } else {
                Expr::add(sum, Expr::constant(const_value(&t.constant, int_ctx)))
            }
        }
    }
}

fn fold_const_cmp(op: CmpOp, d: &BigRational) -> Expr {
    // d ⋈ 0
    let zero = BigRational::zero();
    let b = match op {
        CmpOp::Lt => *d < zero,
        CmpOp::Le => *d <= zero,
        CmpOp::Eq => *d == zero,
        CmpOp::Ne => *d != zero,
        CmpOp::Ge => *d >= zero,
        CmpOp::Gt => *d > zero,
    };
    Expr::boolean(b)
}

/// Canonicalizes a numeric comparison `l ⋈ r`.
fn canon_num_cmp(op: CmpOp, l: &Expr, r: &Expr) -> Option<Expr> {
    let lt = linearize(l);
    let rt = linearize(r);
    let (lt, rt) = match (lt, rt) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(LinErr::Null), _) | (_, Err(LinErr::Null)) => return Some(Expr::boolean(false)),
        _ => return None,
    };
    let mut diff = lt;
    diff.add_scaled(&rt, &-BigRational::one());
    if diff.coeffs.is_empty() {
        return Some(fold_const_cmp(op, &diff.constant));
    }
    let mut op = op;
    let mut k = -diff.constant.clone();
    diff.constant = BigRational::zero();

    // Positive leading coefficient (first variable in sorted order).
    let leading = diff.coeffs.values().next().unwrap().clone();
    if leading.is_negative() {
        diff.scale(&-BigRational::one());
        k = -k;
        op = op.mirror();
    }

    if diff.all_int_vars() {
        // Scale to coprime integer coefficients, tighten strict relations,
        // and floor/ceil the bound.
        let lcm_den = diff
            .coeffs
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let factor = BigRational::from_integer(lcm_den);
        diff.scale(&factor);
        k *= &factor;
        match op {
            CmpOp::Lt => {
                op = CmpOp::Le;
                k = BigRational::from_integer(k.ceil().to_integer() - BigInt::one());
            }
            CmpOp::Gt => {
                op = CmpOp::Ge;
                k = BigRational::from_integer(k.floor().to_integer() + BigInt::one());
            }
            CmpOp::Le => k = BigRational::from_integer(k.floor().to_integer()),
            CmpOp::Ge => k = BigRational::from_integer(k.ceil().to_integer()),
            CmpOp::Eq => {
                if !k.is_integer() {
                    return Some(Expr::boolean(false));
                }
            }
            CmpOp::Ne => {
                if !k.is_integer() {
                    return Some(Expr::boolean(true));
                }
            }
        }
        let g = diff
            .coeffs
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(&c.to_integer().abs()));
        if g > BigInt::one() {
            let inv = BigRational::new(BigInt::one(), g.clone());
            diff.scale(&inv);
            let kg = &k / BigRational::from_integer(g);
            k = match op {
                CmpOp::Le => BigRational::from_integer(kg.floor().to_integer()),
                CmpOp::Ge => BigRational::from_integer(kg.ceil().to_integer()),
                CmpOp::Eq => {
                    if !kg.is_integer() {
                        return Some(Expr::boolean(false));
                    }
                    kg
                }
                CmpOp::Ne => {
                    if !kg.is_integer() {
                        return Some(Expr::boolean(true));
                    }
                    kg
                }
                _ => kg,
            };
        }
        Some(Expr::cmp(
            op,
            render_term(&diff, true),
            Expr::constant(const_value(&k, true)),
        ))
    } else {
        // Rational atom: normalize the leading coefficient to one.
        let inv = BigRational::one() / diff.coeffs.values().next().unwrap().clone();
        diff.scale(&inv);
        k *= &inv;
        Some(Expr::cmp(
            op,
            render_term(&diff, false),
            Expr::constant(const_value(&k, false)),
        ))
    }
}

fn is_atom_operand(e: &Expr) -> bool {
    matches!(&e.node, ExprNode::Const(_) | ExprNode::Var(_))
}

/// Canonicalizes a string/enum (in)equality: Null comparisons fold to
/// false, constants fold, operands are sorted.
fn canon_sym_eq(op: CmpOp, l: Expr, r: Expr, orig: &Expr) -> Expr {
    if matches!(l.node, ExprNode::Const(Value::Null)) || matches!(r.node, ExprNode::Const(Value::Null))
    {
        return Expr::boolean(false);
    }
    if !matches!(op, CmpOp::Eq | CmpOp::Ne) || !is_atom_operand(&l) || !is_atom_operand(&r) {
        return orig.clone();
    }
    if let (ExprNode::Const(a), ExprNode::Const(b)) = (&l.node, &r.node) {
        return Expr::boolean(if op == CmpOp::Eq { a == b } else { a != b });
    }
    if l == r {
        return Expr::boolean(op == CmpOp::Eq);
    }
    let (l, r) = if l.to_string() <= r.to_string() {
        (l, r)
    } else {
        (r, l)
    };
    Expr::cmp(op, l, r)
}

fn negate_canon(e: Expr) -> Expr {
    match e.node {
        ExprNode::Const(Value::Bool(b)) => Expr::boolean(!b),
        ExprNode::Const(Value::Null) => Expr::constant(Value::Null),
        ExprNode::Not(inner) => *inner,
        ExprNode::And(cs) => normalize_junction(false, cs.into_iter().map(negate_canon).collect()),
        ExprNode::Or(cs) => normalize_junction(true, cs.into_iter().map(negate_canon).collect()),
        ExprNode::Cmp(op, l, r) => simplify(&Expr::cmp(op.negate(), *l, *r)),
        node => Expr::not(Expr::new(node)),
    }
}

/// Flattens, folds constants, deduplicates, and sorts an and/or junction.
/// A `Null` child makes the whole junction `Null` (strict semantics).
fn normalize_junction(is_and: bool, children: Vec<Expr>) -> Expr {
    let mut flat = Vec::new();
    let mut stack: Vec<Expr> = children.into_iter().rev().collect();
    while let Some(c) = stack.pop() {
        match c.node {
            ExprNode::And(cs) if is_and => stack.extend(cs.into_iter().rev()),
            ExprNode::Or(cs) if !is_and => stack.extend(cs.into_iter().rev()),
            _ => flat.push(c),
        }
    }
    if flat
        .iter()
        .any(|c| matches!(c.node, ExprNode::Const(Value::Null)))
    {
        return Expr::constant(Value::Null);
    }
    let absorbing = !is_and;
    if flat
        .iter()
        .any(|c| matches!(c.node, ExprNode::Const(Value::Bool(b)) if b == absorbing))
    {
        return Expr::boolean(absorbing);
    }
    flat.retain(|c| !matches!(c.node, ExprNode::Const(Value::Bool(_))));
    flat.sort_by_cached_key(|c| c.to_string());
    flat.dedup();
    match flat.len() {
        0 => Expr::boolean(is_and),
        1 => flat.pop().unwrap(),
        _ => {
            if is_and {
                Expr::and(flat)
            } else {
                Expr::or(flat)
            }
        }
    }
}

/// Rewrites a boolean equality over boolean operands into and/or/not
/// structure so that downstream layers only see one boolean algebra.
fn desugar_bool_cmp(op: CmpOp, l: Expr, r: Expr) -> Expr {
    let (l2, r2) = (l.clone(), r.clone());
    match op {
        CmpOp::Eq => Expr::or(vec![
            Expr::and(vec![l.clone(), r.clone()]),
            Expr::and(vec![Expr::not(l), Expr::not(r)]),
        ]),
        CmpOp::Ne => Expr::or(vec![
            Expr::and(vec![l, Expr::not(r)]),
            Expr::and(vec![Expr::not(l2), r2]),
        ]),
        _ => Expr::cmp(op, l, r),
    }
}

/// Canonical normal form. Idempotent and semantics-preserving (including
/// strict `Null` propagation).
pub fn simplify(e: &Expr) -> Expr {
    match &e.node {
        ExprNode::Const(_) => e.clone(),
        ExprNode::Var(_) => e.clone(),
        ExprNode::Not(a) => negate_canon(simplify(a)),
        ExprNode::And(cs) => normalize_junction(true, cs.iter().map(simplify).collect()),
        ExprNode::Or(cs) => normalize_junction(false, cs.iter().map(simplify).collect()),
        ExprNode::Cmp(op, l, r) => {
            let lty = l.ty();
            let rty = r.ty();
            let numeric = |t: &Option<TypeTag>| matches!(t, Some(tt) if tt.is_numeric());
            if numeric(&lty) || numeric(&rty) {
                if let Some(canon) = canon_num_cmp(*op, l, r) {
                    return canon;
                }
            }
            if lty == Some(TypeTag::Bool) && rty == Some(TypeTag::Bool) {
                return simplify(&desugar_bool_cmp(
                    *op,
                    l.as_ref().clone(),
                    r.as_ref().clone(),
                ));
            }
            let ls = simplify(l);
            let rs = simplify(r);
            // Numeric atoms that only reveal themselves after
            // simplification (e.g. a Null constant) are retried above.
            if matches!(ls.node, ExprNode::Const(Value::Null))
                || matches!(rs.node, ExprNode::Const(Value::Null))
            {
                return Expr::boolean(false);
            }
            canon_sym_eq(*op, ls, rs, e)
        }
        ExprNode::Neg(_) | ExprNode::Add(..) | ExprNode::Sub(..) | ExprNode::Mul(..) => {
            match linearize(e) {
                Ok(t) => render_term(&t, e.ty() == Some(TypeTag::Int)),
                Err(LinErr::Null) => Expr::constant(Value::Null),
                Err(LinErr::Opaque) => e.clone(),
            }
        }
    }
}

/// Logical negation of a boolean expression, canonicalized.
pub fn negate(e: &Expr) -> Expr {
    negate_canon(simplify(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_int() -> Expr {
        Expr::var("x", TypeTag::Int)
    }

    fn y_int() -> Expr {
        Expr::var("y", TypeTag::Int)
    }

    #[test]
    fn eval_doubles_input() {
        // 2*x with x = 6 gives 12
        let e = Expr::mul(Expr::int(2), x_int());
        let mut env = Env::new();
        env.insert("x".into(), Value::Int(6));
        assert_eq!(eval_concrete(&e, &env), Ok(Value::Int(12)));
    }

    #[test]
    fn eval_linear_chain() {
        // x+1-4 with x = 7 gives 4
        let e = Expr::sub(Expr::add(x_int(), Expr::int(1)), Expr::int(4));
        let mut env = Env::new();
        env.insert("x".into(), Value::Int(7));
        assert_eq!(eval_concrete(&e, &env), Ok(Value::Int(4)));
    }

    #[test]
    fn eval_bool_and() {
        let e = Expr::and(vec![Expr::boolean(true), Expr::var("b", TypeTag::Bool)]);
        let mut env = Env::new();
        env.insert("b".into(), Value::Bool(false));
        assert_eq!(eval_concrete(&e, &env), Ok(Value::Bool(false)));
    }

    #[test]
    fn eval_null_propagates() {
        let mut env = Env::new();
        env.insert("x".into(), Value::Null);
        let sum = Expr::add(x_int(), Expr::int(1));
        assert_eq!(eval_concrete(&sum, &env), Ok(Value::Null));
        let cmp = Expr::cmp(CmpOp::Lt, x_int(), Expr::int(10));
        assert_eq!(eval_concrete(&cmp, &env), Ok(Value::Bool(false)));
    }

    #[test]
    fn eval_overflow_is_an_error() {
        let e = Expr::add(Expr::int(i64::MAX), Expr::int(1));
        assert!(matches!(
            eval_concrete(&e, &Env::new()),
            Err(EvalError::Overflow(_))
        ));
    }

    #[test]
    fn substitute_builds_closed_conditions() {
        // z < 10 with z ↦ 2*x becomes 2*x < 10
        let cond = Expr::cmp(CmpOp::Lt, Expr::var("z", TypeTag::Int), Expr::int(10));
        let mut bind = BTreeMap::new();
        bind.insert("z".into(), Expr::mul(Expr::int(2), Expr::var("in_m_x_t1", TypeTag::Int)));
        let out = substitute(&cond, &bind).unwrap();
        assert_eq!(
            out,
            Expr::cmp(
                CmpOp::Lt,
                Expr::mul(Expr::int(2), Expr::var("in_m_x_t1", TypeTag::Int)),
                Expr::int(10)
            )
        );
    }

    #[test]
    fn substitute_empty_binding_identity() {
        let e = Expr::int(3);
        assert_eq!(substitute(&e, &BTreeMap::new()).unwrap(), e);
    }

    #[test]
    fn substitute_unbound_is_error() {
        let e = Expr::var("counter", TypeTag::Rat);
        assert!(matches!(
            substitute(&e, &BTreeMap::new()),
            Err(EvalError::Unbound(_))
        ));
    }

    #[test]
    fn substitute_counter_update() {
        let e = Expr::add(
            Expr::var("counter", TypeTag::Rat),
            Expr::var("factor", TypeTag::Rat),
        );
        let mut bind = BTreeMap::new();
        bind.insert("counter".into(), Expr::add(Expr::rat(0, 1), Expr::rat(3, 2)));
        bind.insert("factor".into(), Expr::rat(1, 1));
        let out = substitute(&e, &bind).unwrap();
        assert_eq!(
            out,
            Expr::add(
                Expr::add(Expr::rat(0, 1), Expr::rat(3, 2)),
                Expr::rat(1, 1)
            )
        );
    }

    #[test]
    fn simplify_term_anchors() {
        // x+1-4 and x-5+2 share the canonical form x-3
        let a = Expr::sub(Expr::add(x_int(), Expr::int(1)), Expr::int(4));
        let b = Expr::add(Expr::sub(x_int(), Expr::int(5)), Expr::int(2));
        let canon = Expr::sub(x_int(), Expr::int(3));
        assert_eq!(simplify(&a), canon);
        assert_eq!(simplify(&b), canon);
    }

    #[test]
    fn simplify_cmp_anchors() {
        // x+1<5 and x+2<6 share a canonical form, which also equals that of x<4
        let a = Expr::cmp(CmpOp::Lt, Expr::add(x_int(), Expr::int(1)), Expr::int(5));
        let b = Expr::cmp(CmpOp::Lt, Expr::add(x_int(), Expr::int(2)), Expr::int(6));
        let c = Expr::cmp(CmpOp::Lt, x_int(), Expr::int(4));
        assert_eq!(simplify(&a), simplify(&b));
        assert_eq!(simplify(&a), simplify(&c));
    }

    #[test]
    fn simplify_identity_on_atoms() {
        assert_eq!(simplify(&x_int()), x_int());
    }

    #[test]
    fn negate_scales_and_tightens() {
        // ¬(2x < 10) = 2x ≥ 10, canonically x ≥ 5
        let e = Expr::cmp(CmpOp::Lt, Expr::mul(Expr::int(2), x_int()), Expr::int(10));
        let n = negate(&e);
        assert_eq!(n, Expr::cmp(CmpOp::Ge, x_int(), Expr::int(5)));
    }

    #[test]
    fn negate_is_an_involution() {
        let e = Expr::and(vec![
            Expr::cmp(CmpOp::Lt, x_int(), Expr::int(4)),
            Expr::cmp(CmpOp::Gt, y_int(), Expr::int(0)),
        ]);
        assert_eq!(negate(&negate(&e)), simplify(&e));
        assert_eq!(negate(&Expr::boolean(true)), Expr::boolean(false));
    }

    #[test]
    fn simplify_is_idempotent_on_samples() {
        let samples = vec![
            Expr::sub(Expr::add(x_int(), Expr::int(1)), Expr::int(4)),
            Expr::cmp(CmpOp::Lt, Expr::mul(Expr::int(2), x_int()), Expr::int(9)),
            Expr::or(vec![
                Expr::cmp(CmpOp::Eq, x_int(), Expr::int(1)),
                Expr::not(Expr::cmp(CmpOp::Eq, x_int(), Expr::int(1))),
                Expr::boolean(false),
            ]),
            Expr::and(vec![
                Expr::var("b", TypeTag::Bool),
                Expr::not(Expr::var("b", TypeTag::Bool)),
            ]),
        ];
        for e in samples {
            let once = simplify(&e);
            assert_eq!(simplify(&once), once, "not idempotent for {e}");
        }
    }

    #[test]
    fn decompose_preserves_order_and_signs() {
        let rec = |cond: Expr, taken: bool| BranchRecord {
            branch_id: "t".into(),
            cond,
            taken,
        };
        let pc = PathCondition {
            records: vec![
                rec(Expr::cmp(CmpOp::Gt, x_int(), Expr::int(5)), true),
                rec(
                    Expr::cmp(CmpOp::Lt, Expr::add(y_int(), Expr::int(2)), Expr::int(6)),
                    true,
                ),
            ],
        };
        let parts = decompose(&pc);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0], Expr::cmp(CmpOp::Ge, x_int(), Expr::int(6)));
        assert_eq!(parts[1], Expr::cmp(CmpOp::Le, y_int(), Expr::int(3)));

        let flipped = PathCondition {
            records: vec![rec(Expr::cmp(CmpOp::Gt, x_int(), Expr::int(5)), false)],
        };
        assert_eq!(
            decompose(&flipped),
            vec![Expr::cmp(CmpOp::Le, x_int(), Expr::int(5))]
        );
        assert!(decompose(&PathCondition::default()).is_empty());
    }

    #[test]
    fn junctions_flatten_sort_dedupe() {
        let a = Expr::cmp(CmpOp::Lt, x_int(), Expr::int(4));
        let b = Expr::cmp(CmpOp::Gt, y_int(), Expr::int(2));
        let nested = Expr::and(vec![
            Expr::and(vec![b.clone(), a.clone()]),
            a.clone(),
            Expr::boolean(true),
        ]);
        let s = simplify(&nested);
        // both atoms present exactly once, deterministically ordered
        if let ExprNode::And(cs) = &s.node {
            assert_eq!(cs.len(), 2);
        } else {
            panic!("expected a conjunction, got {s}");
        }
        assert_eq!(s, simplify(&Expr::and(vec![a, b])));
    }
}

//! Concrete values and type tags shared by every layer of the engine.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{Serialize, SerializeMap, Serializer};
use std::fmt;

/// Type of a port, internal variable, or parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeTag {
    Int,
    Rat,
    Bool,
    Str,
    Enum(String),
}

impl TypeTag {
    pub fn is_numeric(&self) -> bool {
        matches!(self, TypeTag::Int | TypeTag::Rat)
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Int => write!(f, "int"),
            TypeTag::Rat => write!(f, "rat"),
            TypeTag::Bool => write!(f, "bool"),
            TypeTag::Str => write!(f, "string"),
            TypeTag::Enum(name) => write!(f, "{name}"),
        }
    }
}

/// A concrete runtime value.
///
/// Integers are signed 64-bit with checked arithmetic; rationals are exact
/// and kept in canonical form (positive denominator, reduced) by
/// construction. `Null` is the message-absence marker and is assignable to
/// every port type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Rat(BigRational),
    Bool(bool),
    Str(String),
    EnumVal(String, String),
    Null,
}

impl Value {
    pub fn rat_i64(n: i64, d: i64) -> Value {
        Value::Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// The value's type, or `None` for `Null`.
    pub fn type_tag(&self) -> Option<TypeTag> {
        match self {
            Value::Int(_) => Some(TypeTag::Int),
            Value::Rat(_) => Some(TypeTag::Rat),
            Value::Bool(_) => Some(TypeTag::Bool),
            Value::Str(_) => Some(TypeTag::Str),
            Value::EnumVal(e, _) => Some(TypeTag::Enum(e.clone())),
            Value::Null => None,
        }
    }

    /// `Null` is compatible with every type; everything else must match
    /// exactly.
    pub fn matches(&self, ty: &TypeTag) -> bool {
        match self.type_tag() {
            None => true,
            Some(t) => t == *ty,
        }
    }

    /// Numeric view, promoting `Int` to an exact rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(n) => Some(BigRational::from_integer(BigInt::from(*n))),
            Value::Rat(r) => Some(r.clone()),
            _ => None,
        }
    }
}

/// Renders a rational as an exact decimal when the denominator is of the
/// form 2^a·5^b, else as "p/q". `0` becomes "0.0" so rational literals stay
/// distinguishable from integers in rendered models.
pub fn rational_to_string(r: &BigRational) -> String {
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut d = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let k = twos.max(fives);
    let ten = BigInt::from(10);
    let scale = ten.pow(k);
    let scaled = r.numer() * &scale / r.denom();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let mag = scaled.abs().to_string();
    if k == 0 {
        return format!("{sign}{mag}.0");
    }
    let digits = k as usize;
    let mag = if mag.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
    } else {
        mag
    };
    let (int_part, frac_part) = mag.split_at(mag.len() - digits);
    format!("{sign}{int_part}.{frac_part}")
}

/// Parses the textual rational forms produced by [`rational_to_string`]:
/// "1.5", "-0.25", "7/3".
pub fn rational_from_str(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().ok()?;
        let den: BigInt = q.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.trim_start().starts_with('-');
        let whole: BigInt = int_part.parse().ok()?;
        let frac: BigInt = frac_part.parse().ok()?;
        let scale = BigInt::from(10).pow(frac_part.len() as u32);
        let mag = whole.abs() * &scale + frac;
        let signed = if negative { -mag } else { mag };
        return Some(BigRational::new(signed, scale));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => write!(f, "{}", rational_to_string(r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{}", quote_string(s)),
            Value::EnumVal(e, v) => write!(f, "{e}::{v}"),
            Value::Null => write!(f, "Null"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(n) => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("int", n)?;
                m.end()
            }
            Value::Rat(r) => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("rat", &format!("{}/{}", r.numer(), r.denom()))?;
                m.end()
            }
            Value::Bool(b) => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("bool", b)?;
                m.end()
            }
            Value::Str(s) => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("str", s)?;
                m.end()
            }
            Value::EnumVal(e, v) => {
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("enum", &format!("{e}::{v}"))?;
                m.end()
            }
            Value::Null => serializer.serialize_none(),
        }
    }
}

/// Type-correct default: 0, 0.0, false, "", first enum variant.
pub fn default_value(ty: &TypeTag, variant0: impl FnOnce(&str) -> Option<String>) -> Value {
    match ty {
        TypeTag::Int => Value::Int(0),
        TypeTag::Rat => Value::Rat(BigRational::zero()),
        TypeTag::Bool => Value::Bool(false),
        TypeTag::Str => Value::Str(String::new()),
        TypeTag::Enum(name) => {
            let v = variant0(name).unwrap_or_default();
            Value::EnumVal(name.clone(), v)
        }
    }
}

impl Value {
    /// Float view for reporting only; semantics never go through floats.
    pub fn to_f64_lossy(&self) -> Option<f64> {
        match self {
            Value::Int(n) => Some(*n as f64),
            Value::Rat(r) => r.to_f64(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_rendering() {
        assert_eq!(rational_to_string(&BigRational::zero()), "0.0");
        assert_eq!(
            rational_to_string(&BigRational::new(3.into(), 2.into())),
            "1.5"
        );
        assert_eq!(
            rational_to_string(&BigRational::new((-1).into(), 4.into())),
            "-0.25"
        );
        assert_eq!(
            rational_to_string(&BigRational::new(1.into(), 3.into())),
            "1/3"
        );
        assert_eq!(
            rational_to_string(&BigRational::new(5.into(), 1.into())),
            "5.0"
        );
    }

    #[test]
    fn rational_parsing_roundtrip() {
        for s in ["0.0", "1.5", "-0.25", "1/3", "5.0", "-7/3"] {
            let r = rational_from_str(s).unwrap();
            let back = rational_to_string(&r);
            assert_eq!(rational_from_str(&back).unwrap(), r, "{s}");
        }
    }

    #[test]
    fn null_matches_every_type() {
        assert!(Value::Null.matches(&TypeTag::Int));
        assert!(Value::Null.matches(&TypeTag::Enum("E".into())));
        assert!(!Value::Int(1).matches(&TypeTag::Rat));
    }
}

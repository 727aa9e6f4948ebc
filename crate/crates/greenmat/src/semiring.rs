//! Exact arithmetic for idempotent semifields S = L* ∪ {0} with a linearly
//! ordered group part, plus the top-extended residuated semiring.
//!
//! Two instances are shipped: the Boolean semifield (trivial group) and
//! max-plus over the rationals (join = max, product = rational addition,
//! zero = -inf, unit = 0). All arithmetic is exact; rationals are stored
//! reduced with positive denominator.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::error::Error;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "bool")]
    Boolean,
    #[serde(rename = "maxplus")]
    MaxPlusRational,
}

impl Kind {
    pub fn token(self) -> &'static str {
        match self {
            Kind::Boolean => "bool",
            Kind::MaxPlusRational => "maxplus",
        }
    }

    pub fn parse(tok: &str) -> Result<Kind, Error> {
        match tok {
            "bool" => Ok(Kind::Boolean),
            "maxplus" => Ok(Kind::MaxPlusRational),
            other => Err(Error::Parse(format!(
                "unknown kind `{other}` (expected `bool` or `maxplus`)"
            ))),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// An element of the semifield: zero or a group element.
///
/// Cross-kind arithmetic is a programming error and panics; parsers and
/// matrix constructors enforce kind consistency before values meet.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    BoolZero,
    BoolOne,
    MaxPlusZero,
    MaxPlus(BigRational),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::BoolZero | Value::BoolOne => Kind::Boolean,
            Value::MaxPlusZero | Value::MaxPlus(_) => Kind::MaxPlusRational,
        }
    }

    pub fn zero(kind: Kind) -> Value {
        match kind {
            Kind::Boolean => Value::BoolZero,
            Kind::MaxPlusRational => Value::MaxPlusZero,
        }
    }

    pub fn one(kind: Kind) -> Value {
        match kind {
            Kind::Boolean => Value::BoolOne,
            Kind::MaxPlusRational => Value::MaxPlus(BigRational::zero()),
        }
    }

    /// Max-plus value p/q. `q` must be nonzero.
    pub fn rat(p: i64, q: i64) -> Value {
        assert!(q != 0, "zero denominator");
        Value::MaxPlus(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// Max-plus integer value.
    pub fn int(p: i64) -> Value {
        Value::rat(p, 1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Value::BoolZero | Value::MaxPlusZero)
    }

    pub fn is_one(&self) -> bool {
        match self {
            Value::BoolOne => true,
            Value::MaxPlus(r) => r.is_zero(),
            _ => false,
        }
    }

    fn check_kind(&self, other: &Value) {
        assert!(
            self.kind() == other.kind(),
            "semifield kind mismatch: {} vs {}",
            self.kind(),
            other.kind()
        );
    }

    /// Total order of the semifield (zero is least).
    pub fn cmp_order(&self, other: &Value) -> Ordering {
        self.check_kind(other);
        match (self, other) {
            (Value::BoolZero, Value::BoolZero) => Ordering::Equal,
            (Value::BoolZero, Value::BoolOne) => Ordering::Less,
            (Value::BoolOne, Value::BoolZero) => Ordering::Greater,
            (Value::BoolOne, Value::BoolOne) => Ordering::Equal,
            (Value::MaxPlusZero, Value::MaxPlusZero) => Ordering::Equal,
            (Value::MaxPlusZero, Value::MaxPlus(_)) => Ordering::Less,
            (Value::MaxPlus(_), Value::MaxPlusZero) => Ordering::Greater,
            (Value::MaxPlus(a), Value::MaxPlus(b)) => a.cmp(b),
            _ => unreachable!(),
        }
    }

    pub fn leq(&self, other: &Value) -> bool {
        self.cmp_order(other) != Ordering::Greater
    }

    /// Idempotent addition: join in the linear order.
    pub fn add(&self, other: &Value) -> Value {
        if self.cmp_order(other) == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Meet in the linear order.
    pub fn meet(&self, other: &Value) -> Value {
        if self.cmp_order(other) == Ordering::Greater {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Semifield product: zero is absorbing, group product otherwise.
    pub fn mul(&self, other: &Value) -> Value {
        self.check_kind(other);
        match (self, other) {
            (Value::BoolZero, _) | (_, Value::BoolZero) => Value::BoolZero,
            (Value::BoolOne, Value::BoolOne) => Value::BoolOne,
            (Value::MaxPlusZero, _) | (_, Value::MaxPlusZero) => Value::MaxPlusZero,
            (Value::MaxPlus(a), Value::MaxPlus(b)) => Value::MaxPlus(a + b),
            _ => unreachable!(),
        }
    }

    /// Group inverse of a nonzero element.
    pub fn inv(&self) -> Result<Value, Error> {
        match self {
            Value::BoolZero | Value::MaxPlusZero => Err(Error::NoInverse),
            Value::BoolOne => Ok(Value::BoolOne),
            Value::MaxPlus(a) => Ok(Value::MaxPlus(-a)),
        }
    }

    /// `self ⊗ other⁻¹` for nonzero `other`.
    pub fn div(&self, other: &Value) -> Value {
        self.mul(&other.inv().expect("division by semifield zero"))
    }

    /// k-th power in the group (k may be negative for nonzero values);
    /// zero to a positive power is zero.
    pub fn pow(&self, k: i32) -> Value {
        if self.is_zero() {
            assert!(k > 0, "zero to a non-positive power");
            return self.clone();
        }
        match self {
            Value::BoolOne => Value::BoolOne,
            Value::MaxPlus(a) => Value::MaxPlus(a * BigRational::from(BigInt::from(k))),
            _ => unreachable!(),
        }
    }

    /// Kind-directed strict token parsing.
    pub fn parse(kind: Kind, tok: &str) -> Result<Value, Error> {
        match kind {
            Kind::Boolean => match tok {
                "0" => Ok(Value::BoolZero),
                "1" => Ok(Value::BoolOne),
                other => Err(Error::Parse(format!(
                    "bad boolean token `{other}` (expected `0` or `1`)"
                ))),
            },
            Kind::MaxPlusRational => {
                if tok == "-inf" {
                    return Ok(Value::MaxPlusZero);
                }
                let (p, q) = match tok.split_once('/') {
                    Some((p, q)) => (p, q),
                    None => (tok, "1"),
                };
                let p: BigInt = p
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad rational token `{tok}`")))?;
                let q: BigInt = q
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad rational token `{tok}`")))?;
                if !q.is_positive() {
                    return Err(Error::Parse(format!(
                        "bad rational token `{tok}` (denominator must be positive)"
                    )));
                }
                Ok(Value::MaxPlus(BigRational::new(p, q)))
            }
        }
    }

    pub fn token(&self) -> String {
        match self {
            Value::BoolZero => "0".into(),
            Value::BoolOne => "1".into(),
            Value::MaxPlusZero => "-inf".into(),
            Value::MaxPlus(r) => {
                if r.denom().is_one() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Element of the top-extension: a semifield value or the adjoined top.
/// Top is kind-polymorphic; concrete kinds live on the values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Ext {
    Val(Value),
    Top,
}

impl Ext {
    pub fn zero(kind: Kind) -> Ext {
        Ext::Val(Value::zero(kind))
    }

    pub fn one(kind: Kind) -> Ext {
        Ext::Val(Value::one(kind))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Ext::Val(v) if v.is_zero())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Ext::Top)
    }

    pub fn cmp_order(&self, other: &Ext) -> Ordering {
        match (self, other) {
            (Ext::Top, Ext::Top) => Ordering::Equal,
            (Ext::Top, _) => Ordering::Greater,
            (_, Ext::Top) => Ordering::Less,
            (Ext::Val(a), Ext::Val(b)) => a.cmp_order(b),
        }
    }

    pub fn leq(&self, other: &Ext) -> bool {
        self.cmp_order(other) != Ordering::Greater
    }

    pub fn add(&self, other: &Ext) -> Ext {
        if self.cmp_order(other) == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        }
    }

    pub fn meet(&self, other: &Ext) -> Ext {
        if self.cmp_order(other) == Ordering::Greater {
            other.clone()
        } else {
            self.clone()
        }
    }

    /// Top absorbs nonzero factors; zero absorbs top.
    pub fn mul(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Top, b) => {
                if b.is_zero() {
                    b.clone()
                } else {
                    Ext::Top
                }
            }
            (a, Ext::Top) => {
                if a.is_zero() {
                    a.clone()
                } else {
                    Ext::Top
                }
            }
            (Ext::Val(a), Ext::Val(b)) => Ext::Val(a.mul(b)),
        }
    }

    /// Residual a∖b: the greatest x with a⊗x ≤ b.
    ///
    /// Case formula: top if a = 0 or a = b = top; b⊗a⁻¹ for finite nonzero a;
    /// zero if a = top and b ≠ top.
    pub fn residual(a: &Ext, b: &Ext) -> Ext {
        match a {
            Ext::Val(av) if av.is_zero() => Ext::Top,
            Ext::Top => match b {
                Ext::Top => Ext::Top,
                Ext::Val(bv) => Ext::Val(Value::zero(bv.kind())),
            },
            Ext::Val(av) => match b {
                Ext::Top => Ext::Top,
                Ext::Val(bv) => {
                    if bv.is_zero() {
                        Ext::Val(bv.clone())
                    } else {
                        Ext::Val(bv.div(av))
                    }
                }
            },
        }
    }

    pub fn parse(kind: Kind, tok: &str) -> Result<Ext, Error> {
        if tok == "+top" {
            return Ok(Ext::Top);
        }
        Ok(Ext::Val(Value::parse(kind, tok)?))
    }

    pub fn token(&self) -> String {
        match self {
            Ext::Top => "+top".into(),
            Ext::Val(v) => v.token(),
        }
    }
}

impl From<Value> for Ext {
    fn from(v: Value) -> Ext {
        Ext::Val(v)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

use std::fmt;

use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

/// A real number or an explicit infinity marker.
///
/// Kept separate from `f64::INFINITY` so that `0 · ∞ = 0` is a decision made
/// at the call site, never an accident of IEEE arithmetic (which gives NaN).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl Extended {
    pub const ZERO: Extended = Extended::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Sum of two values; `None` for `∞ - ∞`.
    pub fn checked_add(self, other: Extended) -> Option<Extended> {
        use Extended::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Some(Finite(a + b)),
            (PosInfinity, NegInfinity) | (NegInfinity, PosInfinity) => None,
            (PosInfinity, _) | (_, PosInfinity) => Some(PosInfinity),
            (NegInfinity, _) | (_, NegInfinity) => Some(NegInfinity),
        }
    }

    /// Product with a real scale, using `0 · ∞ = 0`.
    pub fn scale(self, s: f64) -> Extended {
        use Extended::*;
        match self {
            Finite(v) => Finite(v * s),
            _ if s == 0.0 => Finite(0.0),
            PosInfinity if s > 0.0 => PosInfinity,
            NegInfinity if s < 0.0 => PosInfinity,
            _ => NegInfinity,
        }
    }

    pub fn max(self, other: Extended) -> Extended {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        use Extended::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (PosInfinity, PosInfinity) | (NegInfinity, NegInfinity) => Some(Equal),
            (PosInfinity, _) | (_, NegInfinity) => Some(Greater),
            (NegInfinity, _) | (_, PosInfinity) => Some(Less),
        }
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        Extended::Finite(v)
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PosInfinity => f.write_str("+inf"),
            Extended::NegInfinity => f.write_str("-inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::PosInfinity => s.serialize_str("+inf"),
            Extended::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Marker(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Extended::Finite(v)),
            Repr::Marker(m) if m == "+inf" => Ok(Extended::PosInfinity),
            Repr::Marker(m) if m == "-inf" => Ok(Extended::NegInfinity),
            Repr::Marker(m) => Err(D::Error::custom(format!("unknown marker `{m}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Extended::*;
    use super::*;

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(PosInfinity.scale(0.0), Finite(0.0));
        assert_eq!(PosInfinity.scale(-1.0), NegInfinity);
        assert_eq!(Finite(2.0).scale(3.0), Finite(6.0));
    }

    #[test]
    fn addition_and_order() {
        assert_eq!(PosInfinity.checked_add(NegInfinity), None);
        assert_eq!(Finite(1.0).checked_add(PosInfinity), Some(PosInfinity));
        assert!(PosInfinity > Finite(1e300));
        assert!(NegInfinity < Finite(-1e300));
        assert_eq!(Finite(1.0).max(PosInfinity), PosInfinity);
    }

    #[test]
    fn json_markers() {
        let v = vec![Finite(1.5), PosInfinity, NegInfinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"+inf","-inf"]"#);
        let back: Vec<Extended> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}

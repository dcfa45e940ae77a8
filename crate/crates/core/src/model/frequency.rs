use std::cmp::Ordering;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// A grid frequency: a nonnegative real `ω` or the limit `ω = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Finite(f64),
    Infinite,
}

impl Frequency {
    pub fn finite(omega: f64) -> Self {
        Frequency::Finite(omega)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Frequency::Infinite)
    }

    /// `ω` as an `f64`, with `∞` mapped to `f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match *self {
            Frequency::Finite(w) => w,
            Frequency::Infinite => f64::INFINITY,
        }
    }

    /// Frequencies where every transfer matrix of a real realization is real.
    pub fn is_real_point(&self) -> bool {
        match *self {
            Frequency::Finite(w) => w == 0.0,
            Frequency::Infinite => true,
        }
    }
}

impl From<f64> for Frequency {
    fn from(w: f64) -> Self {
        if w.is_infinite() {
            Frequency::Infinite
        } else {
            Frequency::Finite(w)
        }
    }
}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Finite(w) => write!(f, "{w}"),
            Frequency::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Frequency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Frequency::Infinite),
            other => {
                let w: f64 = other.parse().map_err(|_| format!("invalid frequency '{s}'"))?;
                if !(w >= 0.0) {
                    return Err(format!("frequency must be nonnegative, got {s}"));
                }
                Ok(Frequency::from(w))
            }
        }
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Frequency::Finite(w) => s.serialize_f64(w),
            Frequency::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(w) if w >= 0.0 => Ok(Frequency::from(w)),
            Raw::Num(w) => Err(de::Error::custom(format!("negative frequency {w}"))),
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(Frequency::Finite(1e9) < Frequency::Infinite);
        assert!(Frequency::Finite(0.0) < Frequency::Finite(1.0));
    }

    #[test]
    fn json_round_trip() {
        let v = vec![Frequency::Finite(0.5), Frequency::Infinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.5,"inf"]"#);
        let back: Vec<Frequency> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Frequency>("-1.0").is_err());
    }

    #[test]
    fn parse() {
        assert_eq!("inf".parse::<Frequency>().unwrap(), Frequency::Infinite);
        assert_eq!("2".parse::<Frequency>().unwrap(), Frequency::Finite(2.0));
        assert!("x".parse::<Frequency>().is_err());
    }
}

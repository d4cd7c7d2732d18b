use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical dimension of a typed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Dimension {
    Temperature,
    Duration,
    Money,
    TimeOfDay,
    Number,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Temperature,
        Dimension::Duration,
        Dimension::Money,
        Dimension::TimeOfDay,
        Dimension::Number,
    ];

    pub fn canonical_unit(self) -> Unit {
        match self {
            Dimension::Temperature => Unit::Fahrenheit,
            Dimension::Duration => Unit::Minute,
            Dimension::Money => Unit::Usd,
            Dimension::TimeOfDay => Unit::MinuteOfDay,
            Dimension::Number => Unit::Unitless,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Temperature => "temperature",
            Dimension::Duration => "duration",
            Dimension::Money => "money",
            Dimension::TimeOfDay => "time-of-day",
            Dimension::Number => "number",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Dimension::ALL.into_iter().find(|d| d.name() == name)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Units accepted on input. Each dimension has exactly one canonical unit;
/// `Celsius` and `Hour` only exist until [`TypedValue::normalize`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Unit {
    Fahrenheit,
    Celsius,
    Minute,
    Hour,
    Usd,
    MinuteOfDay,
    Unitless,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Fahrenheit | Unit::Celsius => Dimension::Temperature,
            Unit::Minute | Unit::Hour => Dimension::Duration,
            Unit::Usd => Dimension::Money,
            Unit::MinuteOfDay => Dimension::TimeOfDay,
            Unit::Unitless => Dimension::Number,
        }
    }

    /// Tag used in the canonical script text (`(const 85 F)`).
    pub fn tag(self) -> &'static str {
        match self {
            Unit::Fahrenheit => "F",
            Unit::Celsius => "C",
            Unit::Minute => "min",
            Unit::Hour => "hr",
            Unit::Usd => "USD",
            Unit::MinuteOfDay => "tod",
            Unit::Unitless => "",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "F" => Unit::Fahrenheit,
            "C" => Unit::Celsius,
            "min" => Unit::Minute,
            "hr" => Unit::Hour,
            "USD" => Unit::Usd,
            "tod" => Unit::MinuteOfDay,
            "" => Unit::Unitless,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("magnitude {0} is not a finite number")]
    NotFinite(f64),
    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("time of day must lie in [0, 1440) minutes, got {0}")]
    TimeOfDayOutOfRange(f64),
    #[error("cannot compare {0} with {1}")]
    DimensionMismatch(Dimension, Dimension),
}

/// Comparison relation between two values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

impl CmpOp {
    pub const ALL: [CmpOp; 3] = [CmpOp::Gt, CmpOp::Lt, CmpOp::Eq];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        CmpOp::ALL.into_iter().find(|op| op.symbol() == s)
    }

    /// Lexicon spelling (`GT`, `LT`, `EQ`).
    pub fn code(self) -> &'static str {
        match self {
            CmpOp::Gt => "GT",
            CmpOp::Lt => "LT",
            CmpOp::Eq => "EQ",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        CmpOp::ALL.into_iter().find(|op| op.code().eq_ignore_ascii_case(s))
    }

    pub fn words(self) -> &'static str {
        match self {
            CmpOp::Gt => "greater than",
            CmpOp::Lt => "less than",
            CmpOp::Eq => "equal to",
        }
    }

    /// Words for the negated relation ("not greater than" reads as "at most").
    pub fn negated_words(self) -> &'static str {
        match self {
            CmpOp::Gt => "at most",
            CmpOp::Lt => "at least",
            CmpOp::Eq => "not equal to",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A magnitude with its unit. Constructed values always satisfy the range
/// invariants of their dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawValue")]
pub struct TypedValue {
    magnitude: f64,
    unit: Unit,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValue {
    magnitude: f64,
    unit: Unit,
}

impl TryFrom<RawValue> for TypedValue {
    type Error = ValueError;

    fn try_from(raw: RawValue) -> Result<Self, Self::Error> {
        TypedValue::new(raw.magnitude, raw.unit)
    }
}

fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl TypedValue {
    pub fn new(magnitude: f64, unit: Unit) -> Result<Self, ValueError> {
        if !magnitude.is_finite() {
            return Err(ValueError::NotFinite(magnitude));
        }
        let v = TypedValue { magnitude, unit };
        let canonical = v.normalize();
        match unit.dimension() {
            Dimension::Duration if canonical.magnitude < 0.0 => Err(ValueError::NegativeDuration(magnitude)),
            Dimension::TimeOfDay if !(0.0..1440.0).contains(&canonical.magnitude) => {
                Err(ValueError::TimeOfDayOutOfRange(magnitude))
            }
            _ => Ok(v),
        }
    }

    pub fn fahrenheit(x: f64) -> Result<Self, ValueError> {
        Self::new(x, Unit::Fahrenheit)
    }

    pub fn celsius(x: f64) -> Result<Self, ValueError> {
        Self::new(x, Unit::Celsius)
    }

    pub fn minutes(x: f64) -> Result<Self, ValueError> {
        Self::new(x, Unit::Minute)
    }

    pub fn hours(x: f64) -> Result<Self, ValueError> {
        Self::new(x, Unit::Hour)
    }

    pub fn usd(x: f64) -> Result<Self, ValueError> {
        Self::new(x, Unit::Usd)
    }

    pub fn number(x: f64) -> Result<Self, ValueError> {
        Self::new(x, Unit::Unitless)
    }

    pub fn time_of_day(hour: u32, minute: u32) -> Result<Self, ValueError> {
        Self::new(f64::from(hour * 60 + minute), Unit::MinuteOfDay)
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn dimension(&self) -> Dimension {
        self.unit.dimension()
    }

    /// Converts to the dimension's canonical unit and rounds to three decimals
    /// (whole minutes for times of day).
    pub fn normalize(&self) -> TypedValue {
        let magnitude = match self.unit {
            Unit::Celsius => self.magnitude * 9.0 / 5.0 + 32.0,
            Unit::Hour => self.magnitude * 60.0,
            _ => self.magnitude,
        };
        let unit = self.dimension().canonical_unit();
        let magnitude = if unit == Unit::MinuteOfDay {
            round3(magnitude.round())
        } else {
            round3(magnitude)
        };
        TypedValue { magnitude, unit }
    }

    pub fn compare(&self, op: CmpOp, other: &TypedValue) -> Result<bool, ValueError> {
        if self.dimension() != other.dimension() {
            return Err(ValueError::DimensionMismatch(self.dimension(), other.dimension()));
        }
        let a = self.normalize().magnitude;
        let b = other.normalize().magnitude;
        Ok(match op {
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
        })
    }
}

/// Human rendering, chosen so the entity extractor reads it back as the same value.
impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.magnitude;
        match self.unit {
            Unit::Fahrenheit => write!(f, "{m}°F"),
            Unit::Celsius => write!(f, "{m}°C"),
            Unit::Minute => write!(f, "{m} min"),
            Unit::Hour => write!(f, "{m} hr"),
            Unit::Usd if m < 0.0 => write!(f, "-${}", -m),
            Unit::Usd => write!(f, "${m}"),
            Unit::MinuteOfDay => {
                let total = m.round() as i64;
                let (h, min) = (total / 60, total % 60);
                let suffix = if h < 12 { "AM" } else { "PM" };
                let h12 = match h % 12 {
                    0 => 12,
                    x => x,
                };
                write!(f, "{h12}:{min:02} {suffix}")
            }
            Unit::Unitless => write!(f, "{m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn celsius_and_hours_normalize() {
        let c = TypedValue::celsius(30.0).unwrap().normalize();
        assert_eq!(c, TypedValue::fahrenheit(86.0).unwrap());
        let h = TypedValue::hours(1.5).unwrap().normalize();
        assert_eq!(h, TypedValue::minutes(90.0).unwrap());
    }

    #[test]
    fn range_invariants() {
        assert!(matches!(TypedValue::minutes(-1.0), Err(ValueError::NegativeDuration(_))));
        assert!(TypedValue::new(1440.0, Unit::MinuteOfDay).is_err());
        assert!(TypedValue::new(f64::NAN, Unit::Unitless).is_err());
        assert!(TypedValue::fahrenheit(-40.0).is_ok());
    }

    #[test]
    fn compare_normalizes_and_checks_dimension() {
        let ninety = TypedValue::fahrenheit(90.0).unwrap();
        let c = TypedValue::celsius(30.0).unwrap();
        assert!(ninety.compare(CmpOp::Gt, &c).unwrap());
        assert!(TypedValue::fahrenheit(86.0).unwrap().compare(CmpOp::Eq, &c).unwrap());
        let err = TypedValue::minutes(30.0)
            .unwrap()
            .compare(CmpOp::Gt, &TypedValue::usd(100.0).unwrap())
            .unwrap_err();
        assert_eq!(err, ValueError::DimensionMismatch(Dimension::Duration, Dimension::Money));
    }

    #[test]
    fn eq_uses_three_decimal_rounding() {
        let a = TypedValue::number(0.1 + 0.2).unwrap();
        let b = TypedValue::number(0.3).unwrap();
        assert!(a.compare(CmpOp::Eq, &b).unwrap());
        let c = TypedValue::number(0.3004).unwrap();
        assert!(!c.compare(CmpOp::Eq, &TypedValue::number(0.302).unwrap()).unwrap());
    }

    #[test]
    fn display_forms() {
        assert_eq!(TypedValue::fahrenheit(85.0).unwrap().to_string(), "85°F");
        assert_eq!(TypedValue::usd(89.99).unwrap().to_string(), "$89.99");
        assert_eq!(TypedValue::usd(-5.0).unwrap().to_string(), "-$5");
        assert_eq!(TypedValue::time_of_day(7, 0).unwrap().to_string(), "7:00 AM");
        assert_eq!(TypedValue::time_of_day(0, 5).unwrap().to_string(), "12:05 AM");
        assert_eq!(TypedValue::time_of_day(12, 30).unwrap().to_string(), "12:30 PM");
        assert_eq!(TypedValue::minutes(25.0).unwrap().to_string(), "25 min");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_value() -> impl Strategy<Value = TypedValue> {
            let unit = prop::sample::select(vec![
                Unit::Fahrenheit,
                Unit::Celsius,
                Unit::Minute,
                Unit::Hour,
                Unit::Usd,
                Unit::MinuteOfDay,
                Unit::Unitless,
            ]);
            (unit, -100_000i64..100_000).prop_filter_map("out of range", |(unit, k)| {
                let m = k as f64 / 97.0;
                let m = match unit.dimension() {
                    Dimension::Duration => m.abs(),
                    Dimension::TimeOfDay => (m.abs() * 7.0) % 1439.0,
                    _ => m,
                };
                TypedValue::new(m, unit).ok()
            })
        }

        proptest! {
            #[test]
            fn normalize_is_idempotent(v in any_value()) {
                let once = v.normalize();
                prop_assert_eq!(once.normalize(), once);
                prop_assert_eq!(once.unit(), once.dimension().canonical_unit());
            }
        }
    }
}

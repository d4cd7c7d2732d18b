//! Rule-based extraction of typed values (temperatures, durations, money,
//! times of day, plain numbers) from free text.

use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::Serialize;

use crate::dsl::{TypedValue, Unit};

/// A typed value found in a text. `span` is a byte range into the searched text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityMatch {
    pub text: String,
    pub span: (usize, usize),
    pub value: TypedValue,
    /// Upper end of a range such as `25–40 min`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternative: Option<TypedValue>,
}

type Build = fn(&Captures) -> Option<(TypedValue, Option<TypedValue>)>;

const NUM: &str = r"(-?\d+(?:\.\d+)?)";
const HOURS: &str = r"(?:hours|hour|hrs|hr)";
const MINUTES: &str = r"(?:minutes|minute|mins|min)";

fn num(c: &Captures, i: usize) -> Option<f64> {
    c.get(i)?.as_str().parse().ok()
}

fn duration_unit(word: &str) -> Unit {
    if word.to_lowercase().starts_with('h') {
        Unit::Hour
    } else {
        Unit::Minute
    }
}

fn clock(hour: u32, minute: u32, meridiem: Option<&str>) -> Option<TypedValue> {
    if minute >= 60 {
        return None;
    }
    let hour = match meridiem.map(|m| m.to_ascii_lowercase()) {
        Some(m) => {
            if !(1..=12).contains(&hour) {
                return None;
            }
            let h = hour % 12;
            if m == "p" {
                h + 12
            } else {
                h
            }
        }
        None if hour < 24 => hour,
        None => return None,
    };
    TypedValue::time_of_day(hour, minute).ok()
}

fn normalized(v: TypedValue) -> TypedValue {
    v.normalize()
}

static PATTERNS: LazyLock<Vec<(Regex, Build)>> = LazyLock::new(|| {
    let p = |src: String, build: Build| (Regex::new(&format!("(?i)^(?:{src})")).expect("valid pattern"), build);
    vec![
        p(
            format!(r"{NUM}\s*[–—-]\s*{NUM}\s*({HOURS}|{MINUTES})"),
            |c| {
                let unit = duration_unit(c.get(3)?.as_str());
                let lo = TypedValue::new(num(c, 1)?, unit).ok()?;
                let hi = TypedValue::new(num(c, 2)?, unit).ok()?;
                Some((normalized(lo), Some(normalized(hi))))
            },
        ),
        p(r"(\d{1,2}):(\d{2})(?:\s*([ap])\.?m\b\.?)?".to_string(), |c| {
            let v = clock(c[1].parse().ok()?, c[2].parse().ok()?, c.get(3).map(|m| m.as_str()))?;
            Some((v, None))
        }),
        p(r"(\d{1,2})\s*([ap])\.?m\b\.?".to_string(), |c| {
            let v = clock(c[1].parse().ok()?, 0, Some(&c[2]))?;
            Some((v, None))
        }),
        p(r"(-)?\$\s?(\d+(?:\.\d+)?)".to_string(), |c| {
            let m = num(c, 2)?;
            let m = if c.get(1).is_some() { -m } else { m };
            Some((TypedValue::usd(m).ok()?, None))
        }),
        p(format!(r"{NUM}\s*(?:dollars|dollar|bucks|usd)"), |c| {
            Some((TypedValue::usd(num(c, 1)?).ok()?, None))
        }),
        p(
            format!(r"{NUM}\s*(?:°\s*([fc])|degrees?(?:\s+(fahrenheit|celsius|f|c))?|(fahrenheit|celsius))"),
            |c| {
                let scale = c
                    .get(2)
                    .or_else(|| c.get(3))
                    .or_else(|| c.get(4))
                    .map(|m| m.as_str().to_ascii_lowercase());
                let unit = match scale.as_deref() {
                    Some("c") | Some("celsius") => Unit::Celsius,
                    _ => Unit::Fahrenheit,
                };
                Some((normalized(TypedValue::new(num(c, 1)?, unit).ok()?), None))
            },
        ),
        p(format!(r"{NUM}\s*{HOURS}\s+{NUM}\s*{MINUTES}"), |c| {
            let total = num(c, 1)? * 60.0 + num(c, 2)?;
            Some((TypedValue::minutes(total).ok()?, None))
        }),
        p(format!(r"{NUM}\s*({HOURS}|{MINUTES})"), |c| {
            let unit = duration_unit(c.get(2)?.as_str());
            Some((normalized(TypedValue::new(num(c, 1)?, unit).ok()?), None))
        }),
        p(NUM.to_string(), |c| Some((TypedValue::number(num(c, 1)?).ok()?, None))),
    ]
});

fn word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// All typed values in `text`, leftmost-longest and non-overlapping, sorted by start.
pub fn extract_entities(text: &str) -> Vec<EntityMatch> {
    let mut candidates: Vec<(usize, usize, usize, TypedValue, Option<TypedValue>)> = Vec::new();
    let mut prev: Option<char> = None;
    for (start, ch) in text.char_indices() {
        let boundary = prev.is_none_or(|p| !word_char(p) && p != '.');
        prev = Some(ch);
        if !boundary || !(ch.is_ascii_digit() || ch == '-' || ch == '$') {
            continue;
        }
        let rest = &text[start..];
        for (rank, (re, build)) in PATTERNS.iter().enumerate() {
            let Some(caps) = re.captures(rest) else {
                continue;
            };
            let len = caps.get(0).map_or(0, |m| m.end());
            if rest[len..].chars().next().is_some_and(word_char) {
                continue;
            }
            if let Some((value, alternative)) = build(&caps) {
                candidates.push((start, start + len, rank, value, alternative));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    let mut out: Vec<EntityMatch> = Vec::new();
    for (start, end, _, value, alternative) in candidates {
        if out.last().is_some_and(|m| start < m.span.1) {
            continue;
        }
        out.push(EntityMatch {
            text: text[start..end].to_string(),
            span: (start, end),
            value,
            alternative,
        });
    }
    out
}

/// Whether two values can be compared with each other.
pub fn comparable_with(candidate: &TypedValue, target: &TypedValue) -> bool {
    candidate.dimension() == target.dimension()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Dimension;

    fn values(text: &str) -> Vec<TypedValue> {
        extract_entities(text).into_iter().map(|m| m.value).collect()
    }

    #[test]
    fn temperatures() {
        assert_eq!(values("85 degrees Fahrenheit"), [TypedValue::fahrenheit(85.0).unwrap()]);
        assert_eq!(values("90°F"), [TypedValue::fahrenheit(90.0).unwrap()]);
        assert_eq!(values("90 °F"), [TypedValue::fahrenheit(90.0).unwrap()]);
        assert_eq!(values("32 degrees"), [TypedValue::fahrenheit(32.0).unwrap()]);
        assert_eq!(values("30°C"), [TypedValue::fahrenheit(86.0).unwrap()]);
        assert_eq!(values("-4°F"), [TypedValue::fahrenheit(-4.0).unwrap()]);
    }

    #[test]
    fn durations() {
        assert_eq!(values("25 min"), [TypedValue::minutes(25.0).unwrap()]);
        assert_eq!(values("30 minutes"), [TypedValue::minutes(30.0).unwrap()]);
        assert_eq!(values("1 hr 5 min"), [TypedValue::minutes(65.0).unwrap()]);
        assert_eq!(values("2 hours"), [TypedValue::minutes(120.0).unwrap()]);
    }

    #[test]
    fn range_reports_first_value_and_alternative() {
        let m = extract_entities("Transit: 25–40 min");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].text, "25–40 min");
        assert_eq!(m[0].value, TypedValue::minutes(25.0).unwrap());
        assert_eq!(m[0].alternative, Some(TypedValue::minutes(40.0).unwrap()));
    }

    #[test]
    fn money_and_times() {
        assert_eq!(values("$100 or $89.99"), [TypedValue::usd(100.0).unwrap(), TypedValue::usd(89.99).unwrap()]);
        assert_eq!(values("20 dollars"), [TypedValue::usd(20.0).unwrap()]);
        assert_eq!(values("7:00 AM"), [TypedValue::time_of_day(7, 0).unwrap()]);
        assert_eq!(values("19:30"), [TypedValue::time_of_day(19, 30).unwrap()]);
        assert_eq!(values("7pm"), [TypedValue::time_of_day(19, 0).unwrap()]);
        assert_eq!(values("12:15 a.m."), [TypedValue::time_of_day(0, 15).unwrap()]);
    }

    #[test]
    fn bare_numbers_and_nothing() {
        assert_eq!(values("rating 2"), [TypedValue::number(2.0).unwrap()]);
        assert!(extract_entities("hello").is_empty());
        assert!(extract_entities("abc85 x9").is_empty());
    }

    #[test]
    fn spans_index_the_source() {
        let text = "It is 90°F now, commute 25 min";
        for m in extract_entities(text) {
            assert_eq!(&text[m.span.0..m.span.1], m.text);
        }
    }

    #[test]
    fn comparability_is_dimension_equality() {
        let f = TypedValue::fahrenheit(90.0).unwrap();
        let d = TypedValue::minutes(25.0).unwrap();
        assert!(comparable_with(&f, &TypedValue::fahrenheit(85.0).unwrap()));
        assert!(comparable_with(&d, &TypedValue::minutes(30.0).unwrap()));
        assert!(!comparable_with(&d, &f));
        assert_eq!(d.dimension(), Dimension::Duration);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn renderable() -> impl Strategy<Value = TypedValue> {
            prop_oneof![
                (-400i32..400).prop_map(|x| TypedValue::fahrenheit(f64::from(x)).unwrap()),
                (0u32..5000).prop_map(|x| TypedValue::minutes(f64::from(x) / 4.0).unwrap()),
                (-100_000i64..100_000).prop_map(|x| TypedValue::usd(x as f64 / 100.0).unwrap()),
                (0u32..1440).prop_map(|x| TypedValue::time_of_day(x / 60, x % 60).unwrap()),
                (-10_000i64..10_000).prop_map(|x| TypedValue::number(x as f64 / 8.0).unwrap()),
            ]
        }

        proptest! {
            #[test]
            fn canonical_rendering_round_trips(v in renderable()) {
                let found = extract_entities(&v.to_string());
                prop_assert_eq!(found.len(), 1);
                prop_assert_eq!(found[0].value, v);
            }

            #[test]
            fn extraction_is_sorted_disjoint_and_stable(text in "[0-9a-z $:°.,-]{0,40}") {
                let found = extract_entities(&text);
                for w in found.windows(2) {
                    prop_assert!(w[0].span.1 <= w[1].span.0);
                }
                for m in &found {
                    let again = extract_entities(&text[m.span.0..m.span.1]);
                    prop_assert_eq!(again.len(), 1);
                    prop_assert_eq!(again[0].value, m.value);
                }
                prop_assert_eq!(extract_entities(&text), found);
            }
        }
    }
}

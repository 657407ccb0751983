use std::collections::HashSet;
use std::sync::OnceLock;

use chrono::{NaiveDate, NaiveDateTime};

use super::AttrType;

/// Fraction of non-missing cells that must parse for a type to be chosen.
pub const PARSE_RATE_THRESHOLD: f64 = 0.9;

const GAZETTEER_TEXT: &str = include_str!("../../assets/gazetteer.txt");

/// Case-insensitive set of place names used to recognise geographic columns.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    names: HashSet<String>,
    us_states: HashSet<String>,
}

impl Gazetteer {
    /// Parses a newline-delimited list. Lines starting with `#` are comments;
    /// a `# [us-states]` marker starts the state section and any other
    /// `# [...]` marker ends it.
    pub fn parse(text: &str) -> Self {
        let mut names = HashSet::new();
        let mut us_states = HashSet::new();
        let mut in_states = false;
        for line in text.lines() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if comment.starts_with('[') {
                    in_states = comment == "[us-states]";
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let key = line.to_lowercase();
            if in_states {
                us_states.insert(key.clone());
            }
            names.insert(key);
        }
        Gazetteer { names, us_states }
    }

    /// The gazetteer bundled with the crate.
    pub fn bundled() -> &'static Gazetteer {
        static BUNDLED: OnceLock<Gazetteer> = OnceLock::new();
        BUNDLED.get_or_init(|| Gazetteer::parse(GAZETTEER_TEXT))
    }

    pub fn contains(&self, value: &str) -> bool {
        self.names.contains(&value.trim().to_lowercase())
    }

    pub fn is_us_state(&self, value: &str) -> bool {
        self.us_states.contains(&value.trim().to_lowercase())
    }
}

pub(crate) fn is_missing_token(raw: &str) -> bool {
    let t = raw.trim();
    t.is_empty()
        || t.eq_ignore_ascii_case("na")
        || t.eq_ignore_ascii_case("n/a")
        || t.eq_ignore_ascii_case("null")
        || t.eq_ignore_ascii_case("nan")
}

/// Parses a finite number, accepting `1,234.5` style thousands separators.
pub fn parse_number(raw: &str) -> Option<f64> {
    let t = raw.trim();
    if t.is_empty() {
        return None;
    }
    let parsed = t.parse::<f64>().ok().or_else(|| {
        if t.contains(',') && has_thousands_groups(t) {
            t.replace(',', "").parse::<f64>().ok()
        } else {
            None
        }
    })?;
    // f64::from_str accepts "inf" and "NaN"; those are not measures.
    parsed.is_finite().then_some(parsed)
}

fn has_thousands_groups(t: &str) -> bool {
    let body = t.strip_prefix('-').unwrap_or(t);
    let int_part = body.split('.').next().unwrap_or("");
    let mut groups = int_part.split(',');
    let first = groups.next().unwrap_or("");
    !first.is_empty()
        && first.len() <= 3
        && first.bytes().all(|b| b.is_ascii_digit())
        && groups.all(|g| g.len() == 3 && g.bytes().all(|b| b.is_ascii_digit()))
}

const DATE_FORMATS: &[&str] = &[
    "%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%d/%m/%Y", "%d.%m.%Y", "%b %d, %Y", "%B %d, %Y",
    "%d %b %Y", "%d %B %Y",
];

const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
];

/// Parses ISO and common calendar formats. Times of day are dropped.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let t = raw.trim();
    // Cheap reject: every accepted format has a digit and a separator.
    if t.len() < 6 || !t.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    for fmt in DATE_FORMATS {
        if let Ok(d) = NaiveDate::parse_from_str(t, fmt) {
            return Some(d);
        }
    }
    for fmt in DATETIME_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(t, fmt) {
            return Some(dt.date());
        }
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(t) {
        return Some(dt.naive_utc().date());
    }
    // Year-month ("2021-03").
    if t.len() == 7 && t.as_bytes()[4] == b'-' {
        return NaiveDate::parse_from_str(&format!("{t}-01"), "%Y-%m-%d").ok();
    }
    None
}

/// Classifies a column from its raw cell strings.
///
/// Rule order: temporal, geographic, quantitative, categorical. A type wins
/// when at least 90% of the non-missing cells parse as that type. Columns
/// with no non-missing cells are categorical.
pub fn infer_attribute_type<S: AsRef<str>>(values: &[S]) -> AttrType {
    infer_with(values, Gazetteer::bundled())
}

pub(crate) fn infer_with<S: AsRef<str>>(values: &[S], gazetteer: &Gazetteer) -> AttrType {
    let present: Vec<&str> = values
        .iter()
        .map(AsRef::as_ref)
        .filter(|v| !is_missing_token(v))
        .collect();
    if present.is_empty() {
        return AttrType::Categorical;
    }
    let total = present.len() as f64;
    let rate = |pred: &dyn Fn(&str) -> bool| present.iter().filter(|v| pred(v)).count() as f64 / total;

    if rate(&|v| parse_date(v).is_some()) >= PARSE_RATE_THRESHOLD {
        AttrType::Temporal
    } else if rate(&|v| gazetteer.contains(v)) >= PARSE_RATE_THRESHOLD {
        AttrType::Geographic
    } else if rate(&|v| parse_number(v).is_some()) >= PARSE_RATE_THRESHOLD {
        AttrType::Quantitative
    } else {
        AttrType::Categorical
    }
}

//! Seeded synthetic datasets for demos, tests and benchmarks.

use std::fmt::Write as _;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEGMENTS: &[&str] = &["Consumer", "Corporate", "Home Office"];
const CATEGORIES: &[(&str, &[&str])] = &[
    ("Furniture", &["Bookcases", "Chairs", "Furnishings", "Tables"]),
    ("Office Supplies", &["Appliances", "Art", "Binders", "Envelopes", "Paper", "Storage"]),
    ("Technology", &["Accessories", "Copiers", "Machines", "Phones"]),
];
const REGIONS: &[(&str, &[&str])] = &[
    ("West", &["California", "Washington", "Oregon", "Arizona", "Colorado", "Utah"]),
    ("East", &["New York", "Pennsylvania", "Ohio", "Massachusetts", "New Jersey", "Virginia"]),
    ("Central", &["Texas", "Illinois", "Michigan", "Indiana", "Wisconsin", "Minnesota"]),
    ("South", &["Florida", "Georgia", "North Carolina", "Tennessee", "Kentucky", "Alabama"]),
];
const SHIP_MODES: &[&str] = &["Standard Class", "Second Class", "First Class", "Same Day"];
const PRIORITIES: &[&str] = &["Low", "Medium", "High", "Critical"];
const DISCOUNTS: &[f64] = &[0.0, 0.0, 0.0, 0.1, 0.2, 0.3, 0.5];

/// Column names of [`superstore_csv`]: 4 quantitative, 6 categorical, one
/// geographic (`State`) and one temporal (`Order Date`).
pub const SUPERSTORE_COLUMNS: [&str; 12] = [
    "Sales",
    "Profit",
    "Quantity",
    "Discount",
    "Segment",
    "Category",
    "Sub-Category",
    "Region",
    "Ship Mode",
    "Order Priority",
    "State",
    "Order Date",
];

/// Retail orders spanning 2019 to 2022.
pub fn superstore_csv(rows: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date");
    let days = (NaiveDate::from_ymd_opt(2022, 12, 31).expect("valid date") - start).num_days();
    let mut out = SUPERSTORE_COLUMNS.join(",");
    out.push('\n');
    for _ in 0..rows {
        let (category, subs) = CATEGORIES.choose(&mut rng).expect("non-empty");
        let (region, states) = REGIONS.choose(&mut rng).expect("non-empty");
        let date = start + Duration::days(rng.gen_range(0..=days));
        let quantity: u32 = rng.gen_range(1..=14);
        let unit = match *category {
            "Technology" => rng.gen_range(20.0..900.0),
            "Furniture" => rng.gen_range(15.0..600.0),
            _ => rng.gen_range(2.0..120.0),
        };
        let discount = *DISCOUNTS.choose(&mut rng).expect("non-empty");
        let sales = unit * quantity as f64 * (1.0 - discount);
        let margin = rng.gen_range(0.05..0.35) - discount * 0.9;
        let profit = sales * margin;
        writeln!(
            out,
            "{sales:.2},{profit:.2},{quantity},{discount},{},{category},{},{region},{},{},{},{date}",
            SEGMENTS.choose(&mut rng).expect("non-empty"),
            subs.choose(&mut rng).expect("non-empty"),
            SHIP_MODES.choose(&mut rng).expect("non-empty"),
            PRIORITIES.choose(&mut rng).expect("non-empty"),
            quote(states.choose(&mut rng).expect("non-empty")),
        )
        .expect("write to string");
    }
    out
}

/// Column counts of a random table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableShape {
    pub quantitative: usize,
    pub categorical: usize,
    pub geographic: usize,
    pub temporal: usize,
    pub rows: usize,
}

impl TableShape {
    /// A random shape with at least one quantitative and one categorical
    /// column and at most `max_attrs` columns.
    pub fn random(rng: &mut impl Rng, max_attrs: usize, max_rows: usize) -> TableShape {
        let max_attrs = max_attrs.max(2);
        let total = rng.gen_range(2..=max_attrs);
        let temporal = usize::from(total > 2 && rng.gen_bool(0.7));
        let geographic = usize::from(total - temporal > 2 && rng.gen_bool(0.5));
        let rest = total - temporal - geographic;
        let quantitative = rng.gen_range(1..rest);
        TableShape {
            quantitative,
            categorical: rest - quantitative,
            geographic,
            temporal,
            rows: rng.gen_range(20.min(max_rows)..=max_rows),
        }
    }

    pub fn attributes(&self) -> usize {
        self.quantitative + self.categorical + self.geographic + self.temporal
    }
}

/// A table of the given shape with columns `Q1..`, `C1..`, `G1..`, `T1..`.
///
/// Categorical cardinalities vary between 2 and 16 so cardinality penalties
/// are exercised. Dates span at least two consecutive years.
pub fn random_table_csv(shape: TableShape, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<&str> = REGIONS.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    let mut header = Vec::new();
    header.extend((1..=shape.quantitative).map(|i| format!("Q{i}")));
    header.extend((1..=shape.categorical).map(|i| format!("C{i}")));
    header.extend((1..=shape.geographic).map(|i| format!("G{i}")));
    header.extend((1..=shape.temporal).map(|i| format!("T{i}")));
    let scales: Vec<(f64, f64)> = (0..shape.quantitative)
        .map(|_| (rng.gen_range(-50.0..50.0), rng.gen_range(1.0..100.0)))
        .collect();
    let cards: Vec<usize> = (0..shape.categorical).map(|_| rng.gen_range(2..=16)).collect();
    let first_year = rng.gen_range(2010..2020);
    let years = rng.gen_range(2..=5);

    let mut out = header.join(",");
    out.push('\n');
    for r in 0..shape.rows {
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        for &(offset, scale) in &scales {
            cells.push(format!("{:.3}", offset + scale * rng.gen::<f64>()));
        }
        for &card in &cards {
            cells.push(format!("v{}", rng.gen_range(0..card)));
        }
        for _ in 0..shape.geographic {
            cells.push(quote(states.choose(&mut rng).expect("non-empty")));
        }
        for _ in 0..shape.temporal {
            // The first rows cover every year so the span is guaranteed.
            let year = if r < years { first_year + r as i32 } else { first_year + rng.gen_range(0..years) as i32 };
            let date = NaiveDate::from_ymd_opt(year, rng.gen_range(1..=12), rng.gen_range(1..=28)).expect("valid date");
            cells.push(date.to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

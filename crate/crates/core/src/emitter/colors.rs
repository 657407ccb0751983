use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttrType, Dataset};

/// Palette for quantitative attributes, in column order.
pub const QUANT_PALETTE: [&str; 10] = [
    "#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b", "#eeca3b", "#b279a2", "#ff9da6", "#9d755d", "#bab0ac",
];

/// Palette for categorical values, in first-occurrence order.
pub const CATEGORY_PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

/// Mark color of record-count views, which encode no attribute.
pub const COUNT_COLOR: &str = "#6b6b6b";

/// Low end of the sequential ramps ending in a quantitative color.
pub const RAMP_START: &str = "#f2f2f2";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangeScale {
    pub scheme: String,
    pub domain_mid: i32,
}

impl Default for ChangeScale {
    fn default() -> Self {
        ChangeScale {
            scheme: "redblue".into(),
            domain_mid: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ColorAssignment {
    pub quant_colors: IndexMap<String, String>,
    /// Attribute, then value.
    pub category_colors: IndexMap<String, IndexMap<String, String>>,
    pub change_scale: ChangeScale,
}

impl ColorAssignment {
    pub fn quant(&self, attribute: &str) -> &str {
        self.quant_colors.get(attribute).map_or(COUNT_COLOR, String::as_str)
    }

    /// `(values, colors)` of a categorical or geographic attribute.
    pub fn category_scale(&self, attribute: &str) -> (Vec<&str>, Vec<&str>) {
        self.category_colors
            .get(attribute)
            .map(|m| m.iter().map(|(k, v)| (k.as_str(), v.as_str())).unzip())
            .unwrap_or_default()
    }
}

/// Colors for every quantitative attribute and categorical value of a
/// dataset. Depends only on the dataset.
pub fn assign_colors(ds: &Dataset) -> ColorAssignment {
    let quant_colors = ds
        .attrs_of_type(AttrType::Quantitative)
        .enumerate()
        .map(|(i, a)| (a.name.clone(), palette_color(&QUANT_PALETTE, i)))
        .collect();
    let category_colors = ds
        .attributes()
        .iter()
        .filter(|a| matches!(a.attr_type, AttrType::Categorical | AttrType::Geographic))
        .map(|a| {
            let values = ds
                .category_values(&a.name)
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), palette_color(&CATEGORY_PALETTE, i)))
                .collect();
            (a.name.clone(), values)
        })
        .collect();
    ColorAssignment {
        quant_colors,
        category_colors,
        change_scale: ChangeScale::default(),
    }
}

/// The `i`-th color of a palette. Each pass beyond the first shifts the
/// lightness, alternating darker and lighter in growing steps.
pub fn palette_color(palette: &[&str], i: usize) -> String {
    let base = palette[i % palette.len()];
    let round = i / palette.len();
    if round == 0 {
        return base.to_string();
    }
    let step = 0.12 * round.div_ceil(2) as f64;
    let shift = if round % 2 == 1 { -step } else { step };
    let (h, s, l) = rgb_to_hsl(parse_hex(base));
    to_hex(hsl_to_rgb(h, s, (l + shift).clamp(0.05, 0.95)))
}

fn parse_hex(hex: &str) -> [f64; 3] {
    let n = u32::from_str_radix(hex.trim_start_matches('#'), 16).expect("palette colors are hex");
    [(n >> 16) & 0xff, (n >> 8) & 0xff, n & 0xff].map(|c| c as f64 / 255.0)
}

fn to_hex(rgb: [f64; 3]) -> String {
    let [r, g, b] = rgb.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn rgb_to_hsl([r, g, b]: [f64; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        return (0.0, 0.0, l);
    }
    let d = max - min;
    let s = if l > 0.5 { d / (2.0 - max - min) } else { d / (max + min) };
    let h = if max == r {
        (g - b) / d + if g < b { 6.0 } else { 0.0 }
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    (h / 6.0, s, l)
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> [f64; 3] {
    if s == 0.0 {
        return [l; 3];
    }
    let q = if l < 0.5 { l * (1.0 + s) } else { l + s - l * s };
    let p = 2.0 * l - q;
    let channel = |t: f64| {
        let t = t.rem_euclid(1.0);
        if t < 1.0 / 6.0 {
            p + (q - p) * 6.0 * t
        } else if t < 0.5 {
            q
        } else if t < 2.0 / 3.0 {
            p + (q - p) * (2.0 / 3.0 - t) * 6.0
        } else {
            p
        }
    };
    [channel(h + 1.0 / 3.0), channel(h), channel(h - 1.0 / 3.0)]
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::dataset::{load_csv, CsvOptions};

    #[test]
    fn hsl_round_trip() {
        for c in CATEGORY_PALETTE.iter().chain(&QUANT_PALETTE) {
            let (h, s, l) = rgb_to_hsl(parse_hex(c));
            assert_eq!(to_hex(hsl_to_rgb(h, s, l)), *c);
        }
    }

    #[test]
    fn first_pass_is_the_palette() {
        assert_eq!(palette_color(&CATEGORY_PALETTE, 3), CATEGORY_PALETTE[3]);
        assert_ne!(palette_color(&CATEGORY_PALETTE, 23), CATEGORY_PALETTE[3]);
    }

    #[test]
    fn three_passes_stay_distinct() {
        let colors: HashSet<String> = (0..60).map(|i| palette_color(&CATEGORY_PALETTE, i)).collect();
        assert_eq!(colors.len(), 60);
    }

    #[test]
    fn assignment_follows_dataset_order() {
        let csv = b"Profit,Segment,Sales,State\n1,b,2,Ohio\n2,a,3,Texas\n3,b,4,Ohio\n";
        let ds = load_csv(csv, CsvOptions::default()).unwrap();
        let c = assign_colors(&ds);
        assert_eq!(c.quant("Profit"), QUANT_PALETTE[0]);
        assert_eq!(c.quant("Sales"), QUANT_PALETTE[1]);
        assert_eq!(c.quant("Missing"), COUNT_COLOR);
        assert_eq!(c.category_scale("Segment"), (vec!["b", "a"], vec![CATEGORY_PALETTE[0], CATEGORY_PALETTE[1]]));
        assert_eq!(c.category_scale("State").0, ["Ohio", "Texas"]);
        let again = load_csv(csv, CsvOptions::default()).unwrap();
        assert_eq!(assign_colors(&again), c);
    }
}

use std::collections::{HashMap, HashSet};

use sha2::{Digest, Sha256};

use super::infer::{infer_with, is_missing_token, parse_date, parse_number, Gazetteer};
use super::{AttrType, AttributeMeta, Column, Dataset, DatasetError, TextColumn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// When false, columns are named `column_1`, `column_2`, ...
    pub header_row: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            header_row: true,
        }
    }
}

/// Loads an RFC 4180 CSV document and types every column.
///
/// Cells that do not parse as the column's inferred type are stored as
/// missing.
pub fn load_csv(bytes: &[u8], options: CsvOptions) -> Result<Dataset, DatasetError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(DatasetError::EmptyInput);
    }

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| match e.kind() {
            csv::ErrorKind::Utf8 { pos, .. } => DatasetError::InvalidUtf8 {
                line: pos.as_ref().map_or(0, |p| p.line()),
            },
            _ => DatasetError::Malformed(e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        records.push((line, record));
    }

    let mut rows = records.into_iter();
    let (header, width) = if options.header_row {
        let (_, header) = rows.next().ok_or(DatasetError::EmptyInput)?;
        let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
        let width = names.len();
        (names, width)
    } else {
        let width = rows.as_slice().first().map_or(0, |(_, r)| r.len());
        ((1..=width).map(|i| format!("column_{i}")).collect(), width)
    };

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(DatasetError::DuplicateColumnName(name.clone()));
        }
    }

    let mut raw_columns: Vec<Vec<String>> = vec![Vec::new(); width];
    for (line, record) in rows {
        if record.len() != width {
            // A lone empty field is how csv reports a blank line.
            if record.len() == 1 && record[0].trim().is_empty() {
                continue;
            }
            return Err(DatasetError::RaggedRows {
                line,
                expected: width,
                found: record.len(),
            });
        }
        for (col, field) in raw_columns.iter_mut().zip(record.iter()) {
            col.push(field.to_string());
        }
    }
    if raw_columns.first().is_none_or(Vec::is_empty) {
        return Err(DatasetError::EmptyInput);
    }

    let gazetteer = Gazetteer::bundled();
    let mut attributes = Vec::with_capacity(width);
    let mut columns = Vec::with_capacity(width);
    for (index, (name, raw)) in header.into_iter().zip(raw_columns).enumerate() {
        let attr_type = infer_with(&raw, gazetteer);
        let (column, meta) = build_column(name, index, attr_type, &raw);
        attributes.push(meta);
        columns.push(column);
    }

    Ok(Dataset::from_parts(content_id(bytes), attributes, columns))
}

fn content_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("ds-{hex}")
}

fn build_column(name: String, index: usize, attr_type: AttrType, raw: &[String]) -> (Column, AttributeMeta) {
    let mut meta = AttributeMeta {
        name,
        attr_type,
        cardinality: 0,
        numeric_range: None,
        temporal_range: None,
        missing_count: 0,
        column_index: index,
    };
    let column = match attr_type {
        AttrType::Quantitative => {
            let values: Vec<Option<f64>> = raw
                .iter()
                .map(|v| if is_missing_token(v) { None } else { parse_number(v) })
                .collect();
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let distinct: HashSet<u64> = present.iter().map(|v| normalize_zero(*v).to_bits()).collect();
            meta.cardinality = distinct.len();
            meta.missing_count = values.len() - present.len();
            meta.numeric_range = present.iter().fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
            });
            Column::Number(values)
        }
        AttrType::Temporal => {
            let values: Vec<_> = raw
                .iter()
                .map(|v| if is_missing_token(v) { None } else { parse_date(v) })
                .collect();
            let present: Vec<_> = values.iter().flatten().copied().collect();
            meta.cardinality = present.iter().collect::<HashSet<_>>().len();
            meta.missing_count = values.len() - present.len();
            meta.temporal_range = present.iter().fold(None, |acc, &d| match acc {
                None => Some((d, d)),
                Some((lo, hi)) => Some((lo.min(d), hi.max(d))),
            });
            Column::Date(values)
        }
        AttrType::Categorical | AttrType::Geographic => {
            let mut dictionary: Vec<String> = Vec::new();
            let mut lookup: HashMap<String, u32> = HashMap::new();
            let codes: Vec<Option<u32>> = raw
                .iter()
                .map(|v| {
                    if is_missing_token(v) {
                        return None;
                    }
                    let v = v.trim();
                    Some(*lookup.entry(v.to_string()).or_insert_with(|| {
                        dictionary.push(v.to_string());
                        (dictionary.len() - 1) as u32
                    }))
                })
                .collect();
            meta.cardinality = dictionary.len();
            meta.missing_count = codes.iter().filter(|c| c.is_none()).count();
            Column::Text(TextColumn { codes, dictionary })
        }
    };
    (column, meta)
}

fn normalize_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Dataset, DatasetError> {
        load_csv(text.as_bytes(), CsvOptions::default())
    }

    #[test]
    fn single_constant_column() {
        let ds = load("x\n3\n3\n3\n").unwrap();
        let a = &ds.attributes()[0];
        assert_eq!(a.attr_type, AttrType::Quantitative);
        assert_eq!(a.cardinality, 1);
        assert_eq!(a.numeric_range, Some((3.0, 3.0)));
        assert_eq!(ds.row_count(), 3);
    }

    #[test]
    fn sixty_percent_unparseable_is_categorical() {
        // 4 of 10 numeric.
        let ds = load("v\n1\n2\n3\n4\na\nb\nc\nd\ne\nf\n").unwrap();
        assert_eq!(ds.attributes()[0].attr_type, AttrType::Categorical);
        assert_eq!(ds.attributes()[0].cardinality, 10);
    }

    #[test]
    fn unparseable_cells_become_missing() {
        let mut text = String::from("v\n");
        for i in 0..19 {
            text.push_str(&format!("{i}\n"));
        }
        text.push_str("oops\n");
        let ds = load(&text).unwrap();
        let a = &ds.attributes()[0];
        assert_eq!(a.attr_type, AttrType::Quantitative);
        assert_eq!(a.missing_count, 1);
        assert_eq!(a.cardinality, 19);
        assert!(a.cardinality <= ds.row_count());
    }

    #[test]
    fn errors() {
        assert_eq!(load(""), Err(DatasetError::EmptyInput));
        assert_eq!(load("a,b\n"), Err(DatasetError::EmptyInput));
        assert_eq!(load("a,a\n1,2\n"), Err(DatasetError::DuplicateColumnName("a".into())));
        assert!(matches!(
            load("a,b\n1,2\n3\n"),
            Err(DatasetError::RaggedRows { expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            load_csv(b"a\n\xff\xfe\n", CsvOptions::default()),
            Err(DatasetError::InvalidUtf8 { .. })
        ));
    }

    #[test]
    fn quoted_fields_and_bom() {
        let ds = load("\u{feff}name,amount\n\"Smith, J\",\"1,200\"\nDoe,5\n").unwrap();
        assert_eq!(ds.attributes()[0].name, "name");
        assert_eq!(ds.attributes()[1].attr_type, AttrType::Quantitative);
        assert_eq!(ds.attributes()[1].numeric_range, Some((5.0, 1200.0)));
    }

    #[test]
    fn headerless_and_custom_delimiter() {
        let ds = load_csv(
            b"1;x\n2;y\n",
            CsvOptions {
                delimiter: b';',
                header_row: false,
            },
        )
        .unwrap();
        assert_eq!(ds.attributes()[1].name, "column_2");
        assert_eq!(ds.row_count(), 2);
    }

    #[test]
    fn id_is_content_derived() {
        let a = load("x\n1\n").unwrap();
        let b = load("x\n1\n").unwrap();
        let c = load("x\n2\n").unwrap();
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
    }
}

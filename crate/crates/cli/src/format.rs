//! Canonical output rendering.
//!
//! Every numeric field in every table is printed with 12 significant
//! digits in normalized scientific notation, negative zero collapsed to
//! zero, so a given run yields byte-identical output on every platform.
//! Tables render either as CSV (header line + rows, RFC-4180 quoting)
//! or as line-delimited JSON records (one object per row, keys in
//! column order, non-finite values as `null`).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Tabular output encoding selected by `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    /// Comma-separated values with a header line.
    Csv,
    /// Line-delimited JSON records, one object per row.
    Records,
}

/// One table cell. `Null` renders as an empty CSV field and a JSON
/// `null` — used for columns that do not apply to a row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Null,
}

/// 12-significant-digit canonical form: `8.50000000000e-1`.
///
/// Non-finite values print as `nan` / `inf` / `-inf` (CSV only; records
/// map them to `null`).
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v == f64::INFINITY {
        return "inf".into();
    }
    if v == f64::NEG_INFINITY {
        return "-inf".into();
    }
    // `-0.0 == 0.0`, so this folds the sign away before formatting.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

/// RFC-4180 field quoting: wrap when the value contains a comma, quote,
/// or line break; double interior quotes.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// JSON string literal with the mandatory escapes.
fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl Cell {
    fn render_csv(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => csv_field(s),
            Cell::Null => String::new(),
        }
    }

    fn render_json(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => num(*v),
            Cell::Num(_) => "null".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => json_str(s),
            Cell::Null => "null".into(),
        }
    }
}

/// Write a full table in the requested encoding. Row widths must match
/// the column count.
pub fn write_table<W: Write>(
    w: &mut W,
    format: OutputFormat,
    columns: &[&str],
    rows: &[Vec<Cell>],
) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "{}", columns.join(","))?;
            for row in rows {
                debug_assert_eq!(row.len(), columns.len());
                let fields: Vec<String> = row.iter().map(Cell::render_csv).collect();
                writeln!(w, "{}", fields.join(","))?;
            }
        }
        OutputFormat::Records => {
            for row in rows {
                debug_assert_eq!(row.len(), columns.len());
                let pairs: Vec<String> = columns
                    .iter()
                    .zip(row)
                    .map(|(name, cell)| format!("{}:{}", json_str(name), cell.render_json()))
                    .collect();
                writeln!(w, "{{{}}}", pairs.join(","))?;
            }
        }
    }
    Ok(())
}

/// Open the output sink: a file when `--out` is given, stdout otherwise.
pub fn open_sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_use_twelve_significant_digits() {
        assert_eq!(num(0.85), "8.50000000000e-1");
        assert_eq!(num(1.2), "1.20000000000e0");
        assert_eq!(num(-3.25e-7), "-3.25000000000e-7");
        assert_eq!(num(1.0 / 3.0), "3.33333333333e-1");
    }

    #[test]
    fn special_values_are_canonical() {
        assert_eq!(num(0.0), "0.00000000000e0");
        assert_eq!(num(-0.0), "0.00000000000e0");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_quoting_follows_rfc_4180() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn csv_table_renders_header_and_rows() {
        let mut buf = Vec::new();
        write_table(
            &mut buf,
            OutputFormat::Csv,
            &["name", "value", "error"],
            &[
                vec![Cell::Text("alpha".into()), Cell::Num(0.5), Cell::Null],
                vec![Cell::Text("beta".into()), Cell::Null, Cell::Text("no crossing, bracket exhausted".into())],
            ],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "name,value,error\nalpha,5.00000000000e-1,\nbeta,,\"no crossing, bracket exhausted\"\n"
        );
    }

    #[test]
    fn record_rows_are_valid_json_objects() {
        let mut buf = Vec::new();
        write_table(
            &mut buf,
            OutputFormat::Records,
            &["step", "h_after", "note"],
            &[vec![Cell::Int(3), Cell::Num(f64::INFINITY), Cell::Text("paid \"off\"".into())]],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "{\"step\":3,\"h_after\":null,\"note\":\"paid \\\"off\\\"\"}\n");
    }
}

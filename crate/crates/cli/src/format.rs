//! Locale-independent tabular output.
//!
//! Numbers carry 9 significant digits; magnitudes below 1e-3 use
//! scientific notation.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Render as a single JSON object rather than an array.
    pub single: bool,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            single: false,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(csv_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let objects: Vec<String> = self
            .rows
            .iter()
            .map(|row| {
                let fields: Vec<String> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, v)| format!("\"{k}\":{}", json_cell(v)))
                    .collect();
                format!("{{{}}}", fields.join(","))
            })
            .collect();
        let mut out = if self.single && objects.len() == 1 {
            objects[0].clone()
        } else {
            format!("[{}]", objects.join(",\n"))
        };
        out.push('\n');
        out
    }
}

/// 9 significant digits, scientific below 1e-3 in magnitude.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    if x.abs() < 1e-3 {
        return sci;
    }
    let exponent: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format_number(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) if x.is_finite() => format_number(*x),
        Cell::Num(_) | Cell::Empty => "null".into(),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => {
            let mut out = String::from("\"");
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    c if (c as u32) < 0x20 => {
                        let _ = write!(out, "\\u{:04x}", c as u32);
                    }
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(146.261962890625), "146.261963");
        assert_eq!(format_number(209_566.031_441_52), "209566.031");
        assert_eq!(format_number(0.5), "0.500000000");
        assert_eq!(format_number(4.315_488_818e-4), "4.31548882e-4");
        assert_eq!(format_number(-0.0770), "-0.0770000000");
        assert_eq!(format_number(9.9999999999), "10.0000000");
        assert_eq!(format_number(1e-3), "0.00100000000");
    }

    #[test]
    fn csv_and_json() {
        let mut t = Table::new(vec!["name", "x", "ok"]);
        t.push(vec!["a".into(), 0.25.into(), true.into()]);
        t.push(vec!["b\"".into(), Cell::Empty, false.into()]);
        assert_eq!(t.to_csv(), "name,x,ok\na,0.250000000,true\nb\",,false\n");
        assert_eq!(
            t.to_json(),
            "[{\"name\":\"a\",\"x\":0.250000000,\"ok\":true},\n{\"name\":\"b\\\"\",\"x\":null,\"ok\":false}]\n"
        );
    }
}

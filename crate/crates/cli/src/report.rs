use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Key/value summary plus an optional table of rows.
#[derive(Debug, Default)]
pub struct Report {
    summary: Vec<(String, Value)>,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.summary.push((key.to_string(), value.into()));
        self
    }

    pub fn columns(&mut self, names: &[&str]) -> &mut Self {
        self.columns = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn row(&mut self, values: Vec<Value>) -> &mut Self {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.render_table(),
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        let key_width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k:<key_width$}  {}", plain(v));
        }
        if self.columns.is_empty() {
            return out;
        }
        if !self.summary.is_empty() {
            out.push('\n');
        }
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(plain).collect())
            .collect();
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(c, name)| {
                cells
                    .iter()
                    .map(|r| r[c].len())
                    .chain([name.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |values: Vec<&str>| -> String {
            values
                .iter()
                .zip(&widths)
                .map(|(v, &w)| format!("{v:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(
            out,
            "{}",
            line(self.columns.iter().map(String::as_str).collect())
        );
        for r in &cells {
            let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        if self.columns.is_empty() {
            out.push_str("key,value\n");
            for (k, v) in &self.summary {
                let _ = writeln!(out, "{},{}", csv_cell(k), csv_cell(&plain(v)));
            }
            return out;
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# {k},{}", csv_cell(&plain(v)));
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| csv_cell(&plain(v))).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn render_json(&self) -> String {
        let mut obj = Map::new();
        for (k, v) in &self.summary {
            obj.insert(k.clone(), v.clone());
        }
        if !self.columns.is_empty() {
            let rows = self
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().cloned())
                            .collect(),
                    )
                })
                .collect();
            obj.insert("rows".into(), Value::Array(rows));
        }
        let mut text =
            serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes");
        text.push('\n');
        text
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// JSON number for finite values, string otherwise.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new();
        r.field("log_z", num(1.5)).field("converged", true);
        r.columns(&["node", "p"])
            .row(vec![0.into(), num(0.25)])
            .row(vec![10.into(), num(0.5)]);
        r
    }

    #[test]
    fn table_is_aligned() {
        let text = sample().render(Format::Table);
        assert_eq!(
            text,
            "log_z      1.5\nconverged  true\n\nnode     p\n   0  0.25\n  10   0.5\n"
        );
    }

    #[test]
    fn csv_puts_summary_in_comments() {
        assert_eq!(
            sample().render(Format::Csv),
            "# log_z,1.5\n# converged,true\nnode,p\n0,0.25\n10,0.5\n"
        );
        let mut only = Report::new();
        only.field("poly", "1 + b, g");
        assert_eq!(only.render(Format::Csv), "key,value\npoly,\"1 + b, g\"\n");
    }

    #[test]
    fn json_round_trips() {
        let v: Value = serde_json::from_str(&sample().render(Format::Json)).unwrap();
        assert_eq!(v["rows"][1]["node"], 10);
        assert_eq!(v["log_z"], 1.5);
        assert_eq!(num(f64::NAN), Value::String("NaN".into()));
    }
}

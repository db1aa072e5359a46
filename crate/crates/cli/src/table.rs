//! Deterministic CSV and JSON emission.
//!
//! Numbers carry 12 significant digits; missing values are empty in CSV and
//! `null` in JSON. Metadata precedes the header as `# key=value` lines.

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    pub fn num_or_empty(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Empty
        }
    }

    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::num_or_empty)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => fmt_num(*v)
                .parse::<f64>()
                .map(Value::from)
                .unwrap_or(Value::Null),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

pub fn fmt_num(v: f64) -> String {
    // normalise -0 so identical runs cannot differ by the sign of zero
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.11e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub metadata: Vec<(String, Cell)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: Cell) {
        self.metadata.push((key.into(), value));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    pub fn to_csv(&self) -> Result<String, String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={}\n", v.csv()));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).map_err(|e| e.to_string())?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .map_err(|e| e.to_string())?;
        }
        let bytes = w.into_inner().map_err(|e| e.to_string())?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| e.to_string())?);
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let metadata: Map<String, Value> = self
            .metadata
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut root = Map::new();
        root.insert("metadata".into(), Value::Object(metadata));
        root.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
        s.push('\n');
        s
    }
}

/// A CSV table read back with its `# key=value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    /// Records with their 1-based line numbers in the file.
    pub rows: Vec<(usize, Vec<String>)>,
}

impl ParsedTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedTable, String> {
    let mut metadata = Vec::new();
    let mut body = String::new();
    let mut body_lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
            body_lines.push(i + 1);
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut records = rdr.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r
            .map_err(|e| format!("line {}: {e}", body_lines[0]))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect(),
        None => return Err("input has no header row".into()),
    };
    let mut rows = Vec::new();
    for (idx, rec) in records.enumerate() {
        let line = body_lines[idx + 1];
        let rec = rec.map_err(|e| format!("line {line}: {e}"))?;
        rows.push((line, rec.iter().map(|s| s.trim().to_string()).collect()));
    }
    Ok(ParsedTable {
        metadata,
        header,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["gamma", "value", "valid"]);
        t.meta("regime", Cell::Text("erasure".into()));
        t.meta("shots", Cell::Int(3000));
        t.push(vec![Cell::Num(0.5), Cell::Num(-0.0), Cell::Bool(true)]);
        t.push(vec![Cell::Num(1.0 / 3.0), Cell::Empty, Cell::Bool(false)]);
        t
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        assert_eq!(
            csv,
            "# regime=erasure\n# shots=3000\ngamma,value,valid\n\
             5.00000000000e-1,0.00000000000e0,true\n3.33333333333e-1,,false\n"
        );
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn json_mirrors_csv() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["metadata"]["shots"], 3000);
        assert_eq!(v["rows"][1]["value"], Value::Null);
        assert_eq!(v["rows"][1]["gamma"].as_f64().unwrap(), 3.33333333333e-1);
        assert_eq!(v["rows"][0].as_object().unwrap().len(), 3);
    }

    #[test]
    fn round_trip_parse() {
        let p = parse_csv(&sample().to_csv().unwrap()).unwrap();
        assert_eq!(p.meta("regime"), Some("erasure"));
        assert_eq!(p.column("valid"), Some(2));
        assert_eq!(p.rows[1].0, 5);
        assert_eq!(p.rows[1].1[1], "");
    }

    #[test]
    fn ragged_rows_report_line() {
        let err = parse_csv("a,b\n1,2\n3\n").unwrap_err();
        assert!(err.starts_with("line 3"), "{err}");
    }
}

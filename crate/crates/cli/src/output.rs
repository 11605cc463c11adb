//! Tabular output: tab-separated with a `#` preamble, or one JSON object.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        Cell::Num(v.unwrap_or(f64::NAN))
    }

    fn tsv(&self) -> String {
        match self {
            // `{:e}` is the shortest form that parses back to the same bits.
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.replace(['\t', '\n'], " "),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format!("{v:e}")),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    /// Scalar results, written as `# key: value` lines.
    pub summary: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn note(&mut self, key: &str, value: Cell) {
        self.summary.push((key.to_string(), value));
    }
}

pub struct Meta<'a> {
    pub command: &'a str,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn render_tsv(meta: &Meta, table: &Table) -> String {
    let mut out = format!(
        "# wdmqkd {VERSION}\n# command: {}\n# config_sha256: {}\n",
        meta.command, meta.config_sha256
    );
    if let Some(seed) = meta.seed {
        out += &format!("# seed: {seed}\n");
    }
    for (k, v) in &table.summary {
        out += &format!("# {k}: {}\n", v.tsv());
    }
    out += &table.columns.join("\t");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::tsv).collect();
        out += &cells.join("\t");
        out.push('\n');
    }
    out
}

pub fn render_json(meta: &Meta, table: &Table) -> String {
    let summary: Map<String, Value> = table.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Object(table.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
        .collect();
    let doc = json!({
        "version": VERSION,
        "command": meta.command,
        "config_sha256": meta.config_sha256,
        "seed": meta.seed,
        "summary": summary,
        "columns": table.columns,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).expect("json renders") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Meta<'static> {
        Meta {
            command: "rate",
            config_sha256: sha256_hex(""),
            seed: Some(7),
        }
    }

    #[test]
    fn tsv_layout() {
        let mut t = Table::new(&["x", "y"]);
        t.note("k_total", Cell::Num(0.25));
        t.rows.push(vec![Cell::Num(1e-3), Cell::Num(f64::NAN)]);
        let s = render_tsv(&meta(), &t);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], format!("# wdmqkd {VERSION}"));
        assert_eq!(
            lines[2],
            "# config_sha256: e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(lines[3], "# seed: 7");
        assert_eq!(lines[4], "# k_total: 2.5e-1");
        assert_eq!(lines[5], "x\ty");
        assert_eq!(lines[6], "1e-3\tNaN");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, 5e-324] {
            assert_eq!(Cell::Num(v).tsv().parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(&["pair", "k"]);
        t.rows.push(vec![Cell::Int(-2), Cell::Num(0.5)]);
        let v: Value = serde_json::from_str(&render_json(&meta(), &t)).unwrap();
        assert_eq!(v["rows"][0]["pair"], json!(-2));
        assert_eq!(v["rows"][0]["k"], json!(0.5));
        assert_eq!(v["seed"], json!(7));
    }
}

//! Reports: one `key: value` line per field, plus an optional JSON block.

use serde_json::{Map, Number, Value as Json};

#[derive(Clone, Debug)]
pub enum Value {
    Str(String),
    Real(f64),
    Int(u64),
    Bool(bool),
    Reals(Vec<f64>),
}

/// 17 significant digits; infinities as `+inf` / `-inf`.
pub fn fmt_real(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn real_json(x: f64) -> Json {
    Number::from_f64(x).map(Json::Number).unwrap_or_else(|| Json::String(fmt_real(x)))
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            Value::Real(x) => fmt_real(*x),
            Value::Int(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Reals(v) => v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(","),
        }
    }

    fn json(&self) -> Json {
        match self {
            Value::Str(s) => Json::String(s.clone()),
            Value::Real(x) => real_json(*x),
            Value::Int(n) => Json::Number((*n).into()),
            Value::Bool(b) => Json::Bool(*b),
            Value::Reals(v) => Json::Array(v.iter().map(|x| real_json(*x)).collect()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    fields: Vec<(String, Value)>,
    /// Header and rows of an optional CSV table.
    table: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

impl Report {
    pub fn push(&mut self, key: &str, value: Value) {
        self.fields.push((key.to_string(), value));
    }

    pub fn str(&mut self, key: &str, v: impl Into<String>) {
        self.push(key, Value::Str(v.into()));
    }

    pub fn real(&mut self, key: &str, v: f64) {
        self.push(key, Value::Real(v));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        self.push(key, Value::Int(v as u64));
    }

    pub fn bool(&mut self, key: &str, v: bool) {
        self.push(key, Value::Bool(v));
    }

    pub fn reals(&mut self, key: &str, v: Vec<f64>) {
        self.push(key, Value::Reals(v));
    }

    pub fn set_table(&mut self, header: Vec<String>, rows: Vec<Vec<f64>>) {
        self.table = Some((header, rows));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self, json: bool) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            out.push_str(&format!("{k}: {}\n", v.text()));
        }
        if let Some((header, rows)) = &self.table {
            out.push_str("--- csv\n");
            out.push_str(&header.join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
        }
        if json {
            let mut map = Map::new();
            for (k, v) in &self.fields {
                map.insert(k.clone(), v.json());
            }
            if let Some((header, rows)) = &self.table {
                map.insert("table_columns".into(), Json::Array(header.iter().cloned().map(Json::String).collect()));
                map.insert(
                    "table".into(),
                    Json::Array(rows.iter().map(|r| Json::Array(r.iter().map(|x| real_json(*x)).collect())).collect()),
                );
            }
            out.push_str("--- json\n");
            out.push_str(&Json::Object(map).to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_real(f64::INFINITY), "+inf");
        assert_eq!(fmt_real(0.5), "5.0000000000000000e-1");
        let x = std::f64::consts::LN_2;
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn render_with_json() {
        let mut r = Report::default();
        r.real("value", f64::INFINITY);
        r.bool("ok", true);
        let s = r.render(true);
        assert!(s.starts_with("value: +inf\nok: true\n--- json\n"));
        assert!(s.contains(r#"{"value":"+inf","ok":true}"#));
    }
}

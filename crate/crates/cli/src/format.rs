//! Rendering of reports as JSON, CSV or plain text.

use serde::Serialize;
use serde_json::Value;

use crate::{CliError, CliResult, FormatArg};

pub type OutputFormat = FormatArg;

pub fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError { code: crate::EXIT_RUNTIME, message: e.to_string() })?;
    s.push('\n');
    Ok(s)
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Dotted-path leaves of a JSON document in document order.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    walk(&key(k), x, out);
                }
            }
            Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
                out.push((prefix.to_string(), a.iter().map(scalar_text).collect::<Vec<_>>().join(";")));
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&key(&i.to_string()), x, out);
                }
            }
            leaf => out.push((prefix.to_string(), scalar_text(leaf))),
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out
}

pub fn table_csv(headers: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError { code: crate::EXIT_RUNTIME, message: e.to_string() };
    w.write_record(headers).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError { code: crate::EXIT_RUNTIME, message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Left-aligned columns separated by two spaces.
pub fn table_text(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(headers.to_vec());
    out += &line(width.iter().map(|w| &"--------------------------------------------------"[..(*w).min(50)]).collect());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

/// Render a single report document.
pub fn render_document<T: Serialize>(v: &T, fmt: FormatArg) -> CliResult<String> {
    match fmt {
        FormatArg::Json => to_json(v),
        FormatArg::Csv | FormatArg::Text => {
            let value = serde_json::to_value(v).map_err(|e| CliError { code: crate::EXIT_RUNTIME, message: e.to_string() })?;
            let pairs = flatten(&value);
            if fmt == FormatArg::Csv {
                let rows: Vec<Vec<String>> = pairs.into_iter().map(|(k, v)| vec![k, v]).collect();
                table_csv(&["field", "value"], &rows)
            } else {
                let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                Ok(pairs.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flatten_paths() {
        let v = json!({"a": {"b": 1, "c": [1, 2]}, "d": [{"e": "x"}], "f": null});
        let f = flatten(&v);
        assert_eq!(
            f,
            vec![("a.b".into(), "1".into()), ("a.c".into(), "1;2".into()), ("d.0.e".into(), "x".into()), ("f".into(), "".into())]
        );
    }

    #[test]
    fn csv_quotes_commas() {
        let s = table_csv(&["k", "v"], &[vec!["a,b".into(), "1".into()]]).unwrap();
        assert_eq!(s, "k,v\n\"a,b\",1\n");
    }

    #[test]
    fn text_table_aligns() {
        let s = table_text(&["app", "x"], &[vec!["HCL".into(), "1".into()], vec!["CoughDet".into(), "22".into()]]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "app       x");
        assert_eq!(lines[3], "CoughDet  22");
    }
}

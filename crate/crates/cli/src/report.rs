//! Reports are built once as a JSON value; the human view is a rendering of
//! that same value.

use std::fmt::Write as _;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The analysis ran and its answer is negative (residual above
    /// tolerance, non-flat, incompatible system, ...).
    Negative,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Negative => "negative",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Negative => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub status: Status,
    pub document: Value,
}

impl Report {
    pub fn new(command: &str, status: Status, body: Map<String, Value>) -> Report {
        let mut doc = Map::new();
        doc.insert("schema".into(), 1.into());
        doc.insert("command".into(), command.into());
        doc.insert("status".into(), status.name().into());
        doc.extend(body);
        Report {
            status,
            document: Value::Object(doc),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document).expect("JSON values serialize");
        s.push('\n');
        s
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        if let Value::Object(map) = &self.document {
            for (k, v) in map {
                if k != "schema" {
                    render_entry(&mut out, 0, k, v);
                }
            }
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(if *b { "yes" } else { "no" }.into()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// Word keys read better with spaces; coordinate-style names keep theirs.
fn label(key: &str) -> String {
    if key.chars().any(|c| c.is_ascii_digit()) {
        key.to_string()
    } else {
        key.replace('_', " ")
    }
}

fn render_entry(out: &mut String, depth: usize, key: &str, v: &Value) {
    let pad = "  ".repeat(depth);
    if let Some(s) = scalar(v) {
        let _ = writeln!(out, "{pad}{}: {s}", label(key));
        return;
    }
    match v {
        Value::Array(items) if items.is_empty() => {
            let _ = writeln!(out, "{pad}{}: none", label(key));
        }
        Value::Array(items) if items.iter().all(|i| scalar(i).is_some()) => {
            let cells: Vec<String> = items.iter().filter_map(scalar).collect();
            let _ = writeln!(out, "{pad}{}: [{}]", label(key), cells.join(", "));
        }
        Value::Array(items) => {
            let _ = writeln!(out, "{pad}{}:", label(key));
            for item in items {
                render_item(out, depth + 1, item);
            }
        }
        Value::Object(map) => {
            let _ = writeln!(out, "{pad}{}:", label(key));
            for (k, v) in map {
                render_entry(out, depth + 1, k, v);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

fn render_item(out: &mut String, depth: usize, v: &Value) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Array(row) if row.iter().all(|i| scalar(i).is_some()) => {
            let cells: Vec<String> = row.iter().filter_map(scalar).collect();
            let _ = writeln!(out, "{pad}[{}]", cells.join(", "));
        }
        Value::Object(map) => {
            let mut first = true;
            for (k, v) in map {
                let mut sub = String::new();
                render_entry(&mut sub, depth + 1, k, v);
                let sub = sub.trim_start().to_string();
                let lead = if first { format!("{pad}- ") } else { format!("{pad}  ") };
                let _ = write!(out, "{lead}{sub}");
                first = false;
            }
        }
        other => match scalar(other) {
            Some(s) => {
                let _ = writeln!(out, "{pad}- {s}");
            }
            None => {
                let _ = writeln!(out, "{pad}- {other}");
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn human_view_follows_document() {
        let body = json!({
            "expression": "x1",
            "hessian": [["1", "0"], ["0", "-1"]],
            "components": [{"group": "symmetry", "value": "-1"}],
            "regular": true,
        });
        let Value::Object(body) = body else { unreachable!() };
        let r = Report::new("analyze", Status::Ok, body);
        let text = r.to_human();
        assert!(text.starts_with("command: analyze\nstatus: ok\nexpression: x1\n"), "{text}");
        assert!(text.contains("hessian:\n  [1, 0]\n  [0, -1]\n"), "{text}");
        assert!(text.contains("  - group: symmetry\n    value: -1\n"), "{text}");
        assert!(text.contains("regular: yes"));
        assert!(r.to_json().contains("\"status\": \"ok\""));
    }
}

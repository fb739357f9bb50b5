//! Output rendering: order-preserving JSON and RFC-4180 CSV with every
//! float at 17 significant digits, so repeated runs are byte-identical.

/// 17 significant digits round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Output value tree; object keys keep insertion order.
pub enum Val {
    Num(f64),
    UInt(u64),
    Bool(bool),
    Str(String),
    Arr(Vec<Val>),
    Obj(Vec<(&'static str, Val)>),
}

fn json_escape(s: &str, out: &mut String) {
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
}

impl Val {
    pub fn render_json(&self, out: &mut String) {
        match self {
            Val::Num(x) => {
                if x.is_finite() {
                    out.push_str(&fmt_f64(*x));
                } else {
                    json_escape(&fmt_f64(*x), out);
                }
            }
            Val::UInt(n) => out.push_str(&n.to_string()),
            Val::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Val::Str(s) => json_escape(s, out),
            Val::Arr(items) => {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    v.render_json(out);
                }
                out.push(']');
            }
            Val::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    json_escape(k, out);
                    out.push(':');
                    v.render_json(out);
                }
                out.push('}');
            }
        }
    }

    /// One CSV cell per scalar; arrays of scalars join with ';'.
    fn scalar(&self) -> String {
        match self {
            Val::Num(x) => fmt_f64(*x),
            Val::UInt(n) => n.to_string(),
            Val::Bool(b) => if *b { "true" } else { "false" }.into(),
            Val::Str(s) => s.clone(),
            Val::Arr(items) => items
                .iter()
                .map(Val::scalar)
                .collect::<Vec<_>>()
                .join(";"),
            Val::Obj(_) => unreachable!("objects are flattened before scalar rendering"),
        }
    }

    /// Flattens nested objects into dotted column names.
    pub fn flatten(&self, prefix: &str, cells: &mut Vec<(String, String)>) {
        match self {
            Val::Obj(fields) => {
                for (k, v) in fields {
                    let name = if prefix.is_empty() {
                        (*k).to_string()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    v.flatten(&name, cells);
                }
            }
            other => cells.push((prefix.to_string(), other.scalar())),
        }
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        let mut out = String::with_capacity(s.len() + 2);
        out.push('"');
        for ch in s.chars() {
            if ch == '"' {
                out.push('"');
            }
            out.push(ch);
        }
        out.push('"');
        out
    } else {
        s.to_string()
    }
}

pub fn csv_record(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push_str("\r\n");
    line
}

/// A verification-suite case table.
pub struct Table {
    pub suite: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Val>>,
    pub all_pass: bool,
}

pub enum Doc {
    Map(Val),
    Cases(Table),
}

pub fn render(doc: &Doc, csv: bool) -> String {
    match doc {
        Doc::Map(val) => {
            if csv {
                let mut cells = Vec::new();
                val.flatten("", &mut cells);
                let header: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
                let row: Vec<String> = cells.into_iter().map(|(_, v)| v).collect();
                let mut out = csv_record(&header);
                out.push_str(&csv_record(&row));
                out
            } else {
                let mut out = String::new();
                val.render_json(&mut out);
                out.push('\n');
                out
            }
        }
        Doc::Cases(table) => {
            if csv {
                let header: Vec<String> =
                    table.columns.iter().map(|c| (*c).to_string()).collect();
                let mut out = csv_record(&header);
                for row in &table.rows {
                    let fields: Vec<String> = row.iter().map(Val::scalar).collect();
                    out.push_str(&csv_record(&fields));
                }
                out
            } else {
                let rows: Vec<Val> = table
                    .rows
                    .iter()
                    .map(|row| {
                        Val::Obj(
                            table
                                .columns
                                .iter()
                                .zip(row.iter())
                                .map(|(c, v)| {
                                    (
                                        *c,
                                        match v {
                                            Val::Num(x) => Val::Num(*x),
                                            Val::UInt(n) => Val::UInt(*n),
                                            Val::Bool(b) => Val::Bool(*b),
                                            Val::Str(s) => Val::Str(s.clone()),
                                            Val::Arr(_) | Val::Obj(_) => {
                                                Val::Str(v.scalar())
                                            }
                                        },
                                    )
                                })
                                .collect(),
                        )
                    })
                    .collect();
                let doc = Val::Obj(vec![
                    ("suite", Val::Str(table.suite.to_string())),
                    ("rows", Val::Arr(rows)),
                    ("all_pass", Val::Bool(table.all_pass)),
                ]);
                let mut out = String::new();
                doc.render_json(&mut out);
                out.push('\n');
                out
            }
        }
    }
}

//! Report assembly and the two output formats.
//!
//! The human format is a table for terminals.  The machine format is
//! line-delimited records with stable field names and no timing data, so
//! two runs over the same scenario with the same seed produce
//! byte-identical output.  `parse_machine` reads the machine format back;
//! re-emitting the parsed records reproduces the input byte for byte.

use std::fmt::Write as _;

use hopfstar::check::{CheckEntry, CheckStatus};

/// A count or setting a check wants recorded alongside its pass/fail line
/// (sampled-probe counts, operator pool sizes, and similar).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Info {
    pub check: String,
    pub key: String,
    pub value: String,
}

#[derive(Debug)]
pub struct RunReport {
    pub scenario: String,
    pub order: usize,
    pub seed: u64,
    /// Comma-joined requested check names, or `all`.
    pub suite: String,
    /// Where the suite selection came from: `default`, `flag`, or `env`.
    pub suite_source: String,
    pub entries: Vec<CheckEntry>,
    pub infos: Vec<Info>,
}

impl RunReport {
    /// Fix the emission order: entries by name, infos by (check, key).
    /// Ties keep insertion order.
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| a.name.cmp(&b.name));
        self.infos
            .sort_by(|a, b| (&a.check, &a.key).cmp(&(&b.check, &b.key)));
    }

    pub fn passed(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, CheckStatus::Pass))
            .count()
    }

    pub fn failed(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, CheckStatus::Fail(_)))
            .count()
    }

    pub fn skipped(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, CheckStatus::Skipped(_)))
            .count()
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        let _ = writeln!(out, "order:    {}", self.order);
        let _ = writeln!(out, "seed:     {}", self.seed);
        let _ = writeln!(out, "suite:    {} (source: {})", self.suite, self.suite_source);
        let _ = writeln!(out, "checks:   {}", self.entries.len());
        let _ = writeln!(out);
        let width = self
            .entries
            .iter()
            .map(|e| e.name.len())
            .max()
            .unwrap_or(0)
            .max(10);
        for e in &self.entries {
            match &e.status {
                CheckStatus::Pass => {
                    let _ = writeln!(
                        out,
                        "PASS  {:width$}  probes={:<6} {}ms",
                        e.name, e.probes, e.millis
                    );
                }
                CheckStatus::Fail(w) => {
                    let _ = writeln!(
                        out,
                        "FAIL  {:width$}  probes={:<6} {}ms",
                        e.name, e.probes, e.millis
                    );
                    let _ = writeln!(out, "      input: {}", w.input);
                    let _ = writeln!(out, "      lhs:   {}", w.lhs);
                    let _ = writeln!(out, "      rhs:   {}", w.rhs);
                    if !w.note.is_empty() {
                        let _ = writeln!(out, "      note:  {}", w.note);
                    }
                }
                CheckStatus::Skipped(reason) => {
                    let _ = writeln!(out, "skip  {:width$}  ({})", e.name, reason);
                }
            }
        }
        if !self.infos.is_empty() {
            let _ = writeln!(out);
            for info in &self.infos {
                let _ = writeln!(out, "info  {} {}={}", info.check, info.key, info.value);
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "passed {}, failed {}, skipped {}",
            self.passed(),
            self.failed(),
            self.skipped()
        );
        out
    }

    pub fn machine(&self) -> String {
        emit_records(&self.to_records())
    }

    pub fn to_records(&self) -> Vec<Record> {
        let mut records = Vec::new();
        records.push(Record {
            kind: "report".to_string(),
            fields: vec![
                ("scenario".to_string(), self.scenario.clone()),
                ("order".to_string(), self.order.to_string()),
                ("seed".to_string(), self.seed.to_string()),
                ("suite".to_string(), self.suite.clone()),
                ("suite-source".to_string(), self.suite_source.clone()),
                ("checks".to_string(), self.entries.len().to_string()),
            ],
        });
        for e in &self.entries {
            let status = match &e.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail(_) => "fail",
                CheckStatus::Skipped(_) => "skip",
            };
            let mut fields = vec![
                ("name".to_string(), e.name.clone()),
                ("status".to_string(), status.to_string()),
                ("probes".to_string(), e.probes.to_string()),
            ];
            if let CheckStatus::Skipped(reason) = &e.status {
                fields.push(("reason".to_string(), reason.clone()));
            }
            records.push(Record {
                kind: "check".to_string(),
                fields,
            });
            if let CheckStatus::Fail(w) = &e.status {
                records.push(Record {
                    kind: "witness".to_string(),
                    fields: vec![
                        ("name".to_string(), e.name.clone()),
                        ("input".to_string(), w.input.clone()),
                        ("lhs".to_string(), w.lhs.clone()),
                        ("rhs".to_string(), w.rhs.clone()),
                        ("note".to_string(), w.note.clone()),
                    ],
                });
            }
        }
        for info in &self.infos {
            records.push(Record {
                kind: "info".to_string(),
                fields: vec![
                    ("name".to_string(), info.check.clone()),
                    ("key".to_string(), info.key.clone()),
                    ("value".to_string(), info.value.clone()),
                ],
            });
        }
        records.push(Record {
            kind: "summary".to_string(),
            fields: vec![
                ("passed".to_string(), self.passed().to_string()),
                ("failed".to_string(), self.failed().to_string()),
                ("skipped".to_string(), self.skipped().to_string()),
            ],
        });
        records
    }
}

// ---------------------------------------------------------------------------
// Machine-format records
// ---------------------------------------------------------------------------

/// One line of the machine format: a record kind and its ordered fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn needs_quoting(value: &str) -> bool {
    value.is_empty()
        || value
            .chars()
            .any(|c| !c.is_ascii_graphic() || c == '"' || c == '\\' || c == '=')
}

fn encode_value(value: &str, out: &mut String) {
    if !needs_quoting(value) {
        out.push_str(value);
        return;
    }
    out.push('"');
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out.push('"');
}

pub fn emit_records(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.kind);
        for (k, v) in &r.fields {
            out.push(' ');
            out.push_str(k);
            out.push('=');
            encode_value(v, &mut out);
        }
        out.push('\n');
    }
    out
}

/// Parse machine-format text back into records.  `emit_records` on the
/// result reproduces the input exactly.
pub fn parse_machine(text: &str) -> Result<Vec<Record>, String> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            return Err(format!("line {line_no}: blank line in machine output"));
        }
        let chars: Vec<char> = line.chars().collect();
        let mut pos = 0;
        let read_bare = |pos: &mut usize, stop_at_eq: bool| -> String {
            let start = *pos;
            while *pos < chars.len()
                && !chars[*pos].is_whitespace()
                && !(stop_at_eq && chars[*pos] == '=')
            {
                *pos += 1;
            }
            chars[start..*pos].iter().collect()
        };
        let kind = read_bare(&mut pos, false);
        if kind.is_empty() {
            return Err(format!("line {line_no}: missing record kind"));
        }
        let mut fields = Vec::new();
        loop {
            while pos < chars.len() && chars[pos].is_whitespace() {
                pos += 1;
            }
            if pos >= chars.len() {
                break;
            }
            let key = read_bare(&mut pos, true);
            if key.is_empty() || pos >= chars.len() || chars[pos] != '=' {
                return Err(format!("line {line_no}: expected key=value"));
            }
            pos += 1;
            let value = if pos < chars.len() && chars[pos] == '"' {
                pos += 1;
                let mut v = String::new();
                loop {
                    if pos >= chars.len() {
                        return Err(format!("line {line_no}: unterminated quoted value"));
                    }
                    match chars[pos] {
                        '"' => {
                            pos += 1;
                            break;
                        }
                        '\\' => {
                            pos += 1;
                            match chars.get(pos) {
                                Some('"') => v.push('"'),
                                Some('\\') => v.push('\\'),
                                Some('n') => v.push('\n'),
                                _ => {
                                    return Err(format!("line {line_no}: bad escape sequence"))
                                }
                            }
                            pos += 1;
                        }
                        c => {
                            v.push(c);
                            pos += 1;
                        }
                    }
                }
                v
            } else {
                read_bare(&mut pos, false)
            };
            fields.push((key, value));
        }
        records.push(Record { kind, fields });
    }
    Ok(records)
}

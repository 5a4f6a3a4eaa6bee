//! Check reports: the result type shared by every verifier in the library.
//!
//! A report is a list of named checks, each either passing, failing with a
//! witness, or skipped because a precondition did not hold.  Reports are data,
//! not assertions; the caller (test suite or CLI) decides how to react.

use std::fmt;
use std::time::Instant;

/// Outcome of a single named check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail(Witness),
    /// A stated precondition of the check did not hold; the reason says which.
    Skipped(String),
}

/// Counterexample data attached to a failing check: the probe input and both
/// sides of the violated identity, rendered in canonical normal form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Witness {
    pub input: String,
    pub lhs: String,
    pub rhs: String,
    /// Extra context, e.g. which edge of a diagram disagreed.
    pub note: String,
}

impl Witness {
    pub fn new(input: impl fmt::Display, lhs: impl fmt::Display, rhs: impl fmt::Display) -> Self {
        Witness {
            input: input.to_string(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// One named check with its outcome, probe count and wall time.
#[derive(Debug, Clone)]
pub struct CheckEntry {
    pub name: String,
    pub status: CheckStatus,
    pub probes: usize,
    pub millis: u128,
}

impl CheckEntry {
    pub fn passed(&self) -> bool {
        matches!(self.status, CheckStatus::Pass | CheckStatus::Skipped(_))
    }
}

/// A list of check outcomes, in the order they were run.
#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn new() -> Self {
        CheckReport::default()
    }

    /// Run `body` over `probes` inputs and record the outcome under `name`.
    /// `body` returns the first witness it finds, or `None` for a pass.
    pub fn run<F>(&mut self, name: &str, probes: usize, body: F)
    where
        F: FnOnce() -> Option<Witness>,
    {
        let start = Instant::now();
        let status = match body() {
            None => CheckStatus::Pass,
            Some(w) => CheckStatus::Fail(w),
        };
        self.entries.push(CheckEntry {
            name: name.to_string(),
            status,
            probes,
            millis: start.elapsed().as_millis(),
        });
    }

    pub fn skip(&mut self, name: &str, reason: impl Into<String>) {
        self.entries.push(CheckEntry {
            name: name.to_string(),
            status: CheckStatus::Skipped(reason.into()),
            probes: 0,
            millis: 0,
        });
    }

    /// True when no entry failed (skips do not count as failures).
    pub fn passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }

    /// Prefix every entry name, e.g. `twist.` + `cocycle`.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for e in &mut self.entries {
            e.name = format!("{prefix}{}", e.name);
        }
        self
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.status {
                CheckStatus::Pass => writeln!(f, "pass  {} ({} probes)", e.name, e.probes)?,
                CheckStatus::Skipped(r) => writeln!(f, "skip  {} ({r})", e.name)?,
                CheckStatus::Fail(w) => {
                    writeln!(f, "FAIL  {} ({} probes)", e.name, e.probes)?;
                    if !w.note.is_empty() {
                        writeln!(f, "      note:  {}", w.note)?;
                    }
                    writeln!(f, "      input: {}", w.input)?;
                    writeln!(f, "      lhs:   {}", w.lhs)?;
                    writeln!(f, "      rhs:   {}", w.rhs)?;
                }
            }
        }
        Ok(())
    }
}

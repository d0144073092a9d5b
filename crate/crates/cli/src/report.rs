//! Text and JSON-lines reporting with diagnostics and exit codes.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Map, Value as Json};

pub const SCHEMA: &str = "streamcore/1";

pub const EXIT_OK: u8 = 0;
pub const EXIT_DIAGNOSTICS: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

/// A diagnostic position: file and optional `line:col`.
#[derive(Clone, Debug, Default)]
pub struct Loc {
    pub file: Option<String>,
    pub line: Option<u32>,
    pub col: Option<u32>,
}

impl Loc {
    pub fn file(p: &Path) -> Loc {
        Loc { file: Some(p.display().to_string()), line: None, col: None }
    }

    pub fn at(mut self, line: u32, col: u32) -> Loc {
        if line > 0 {
            self.line = Some(line);
            self.col = Some(col);
        }
        self
    }
}

/// Buffered command output. Text diagnostics go to stderr, JSON ones
/// to stdout with everything else.
pub struct Report {
    pub format: Format,
    out: Vec<u8>,
    err: Vec<u8>,
    pub errors: usize,
    pub warnings: usize,
    usage: bool,
    /// Findings that make the command fail without being errors.
    pub findings: usize,
}

impl Report {
    pub fn new(format: Format) -> Report {
        Report { format, out: Vec::new(), err: Vec::new(), errors: 0, warnings: 0, usage: false, findings: 0 }
    }

    pub fn is_json(&self) -> bool {
        self.format == Format::Json
    }

    /// A JSON record; ignored in text mode.
    pub fn record(&mut self, kind: &str, fields: Json) {
        if !self.is_json() {
            return;
        }
        let mut m = Map::new();
        m.insert("schema".into(), json!(SCHEMA));
        m.insert("kind".into(), json!(kind));
        if let Json::Object(f) = fields {
            m.extend(f);
        }
        let _ = writeln!(self.out, "{}", Json::Object(m));
    }

    /// A line of text; ignored in JSON mode.
    pub fn line(&mut self, s: impl AsRef<str>) {
        if !self.is_json() {
            let _ = writeln!(self.out, "{}", s.as_ref());
        }
    }

    /// Raw output in either mode.
    pub fn raw(&mut self, s: &str) {
        self.out.extend_from_slice(s.as_bytes());
    }

    pub fn diagnostic(&mut self, sev: Severity, loc: &Loc, code: &str, message: &str) {
        match sev {
            Severity::Error => self.errors += 1,
            Severity::Warning => self.warnings += 1,
        }
        if self.is_json() {
            self.record(
                "diagnostic",
                json!({
                    "severity": sev.as_str(),
                    "code": code,
                    "message": message,
                    "file": loc.file,
                    "line": loc.line,
                    "col": loc.col,
                }),
            );
        } else {
            let mut prefix = String::new();
            if let Some(f) = &loc.file {
                prefix.push_str(f);
                prefix.push(':');
            }
            if let (Some(l), Some(c)) = (loc.line, loc.col) {
                prefix.push_str(&format!("{l}:{c}:"));
            }
            if !prefix.is_empty() {
                prefix.push(' ');
            }
            let _ = writeln!(self.err, "{prefix}{}[{code}]: {message}", sev.as_str());
        }
    }

    pub fn error(&mut self, loc: &Loc, code: &str, message: &str) {
        self.diagnostic(Severity::Error, loc, code, message);
    }

    pub fn warning(&mut self, loc: &Loc, code: &str, message: &str) {
        self.diagnostic(Severity::Warning, loc, code, message);
    }

    /// An error in the invocation itself.
    pub fn usage(&mut self, message: &str) {
        self.usage = true;
        self.error(&Loc::default(), "Usage", message);
    }

    pub fn exit_code(&self) -> u8 {
        if self.usage {
            EXIT_USAGE
        } else if self.errors > 0 || self.findings > 0 {
            EXIT_DIAGNOSTICS
        } else {
            EXIT_OK
        }
    }

    /// Writes the buffers and returns the exit code.
    pub fn finish(self) -> u8 {
        let code = self.exit_code();
        let _ = std::io::stdout().write_all(&self.out);
        let _ = std::io::stderr().write_all(&self.err);
        code
    }

    /// Moves the standard output buffer out, e.g. to write it to a file.
    pub fn take_output(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.out)
    }
}

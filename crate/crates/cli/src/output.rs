//! CSV assembly and document emission.

use std::io::Write;
use std::path::Path;

use crate::config::Config;
use crate::error::CliError;

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV text preceded by `# ` comment lines: the command, the resolved
/// configuration as one-line JSON, then any summary lines.
#[derive(Debug)]
pub struct Csv {
    preamble: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(config: &Config, command: &str) -> Self {
        let mut c = Self {
            preamble: String::new(),
            writer: csv::Writer::from_writer(Vec::new()),
        };
        c.comment(&format!("bulkq {command} {}", env!("CARGO_PKG_VERSION")));
        c.comment(&format!(
            "config = {}",
            serde_json::to_string(config).expect("config serializes")
        ));
        c
    }

    pub fn comment(&mut self, line: &str) {
        self.preamble.push_str("# ");
        self.preamble.push_str(line);
        self.preamble.push('\n');
    }

    pub fn header(&mut self, cols: &[&str]) {
        self.writer.write_record(cols).expect("in-memory write");
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn finish(self) -> Result<String, CliError> {
        let body = self
            .writer
            .into_inner()
            .map_err(|e| CliError::numerical(format!("csv assembly failed: {e}")))?;
        let body = String::from_utf8(body).expect("csv output is UTF-8");
        Ok(self.preamble + &body)
    }
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

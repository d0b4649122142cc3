//! Deterministic text output. Floats use 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use qhd_core::PlasmaState;
use serde::Serialize;

use crate::CliError;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// CSV text with a leading `# config_digest:` comment line.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(digest: &str, header: &[&str]) -> Self {
        let mut text = format!("# config_digest: {digest}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn comment(&mut self, line: &str) {
        // Comments belong above the header; insert after the digest line.
        let at = self.text.find('\n').map_or(0, |i| i + 1);
        self.text.insert_str(at, &format!("# {line}\n"));
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = String>) {
        let cells: Vec<String> = cells.into_iter().collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_text(path, &self.text)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// Grid values of one state: `x, psi_a, u_a, psi_b, u_b, E`.
pub fn snapshot_csv(s: &PlasmaState, digest: &str) -> Csv {
    let mut csv = Csv::new(digest, &["x", "psi_a", "u_a", "psi_b", "u_b", "E"]);
    csv.comment(&format!("t = {}", fmt_f64(s.time)));
    let fields = s.fields();
    for (i, x) in s.grid().points().into_iter().enumerate() {
        csv.row(std::iter::once(fmt_f64(x)).chain(fields.iter().map(|f| fmt_f64(f.values()[i]))));
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(s.split('e').next().unwrap().replace('.', "").len(), 17);
    }

    #[test]
    fn comments_sit_between_digest_and_header() {
        let mut c = Csv::new("abc", &["t", "y"]);
        c.comment("note");
        c.row(["1".to_string(), "2".to_string()]);
        assert_eq!(c.as_str(), "# config_digest: abc\n# note\nt,y\n1,2\n");
    }
}

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// One line of a validation report. Statistical checks carry a p-value,
/// PDE and moment checks a residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub name: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl ValidationEntry {
    /// Passes when `p_value > threshold`.
    pub fn p_value(name: impl Into<String>, statistic: f64, p_value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_value: Some(p_value),
            residual: None,
            threshold,
            pass: p_value > threshold,
        }
    }

    /// Passes when `|residual| < threshold`.
    pub fn residual(name: impl Into<String>, statistic: f64, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_value: None,
            residual: Some(residual),
            threshold,
            pass: residual.abs() < threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn push(&mut self, entry: ValidationEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = ValidationEntry>) {
        self.entries.extend(entries);
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    /// Human-readable summary, one line per entry.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            let value = match (e.p_value, e.residual) {
                (Some(p), _) => format!("p = {p:.4e}"),
                (None, Some(r)) => format!("residual = {r:.4e}"),
                _ => String::new(),
            };
            writeln!(
                w,
                "{} {:<48} stat = {:.6e}  {}  threshold = {:.3e}",
                if e.pass { "PASS" } else { "FAIL" },
                e.name,
                e.statistic,
                value,
                e.threshold
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keeps_only_the_relevant_measure() {
        let mut r = ValidationReport::default();
        r.push(ValidationEntry::p_value("ks", 0.01, 0.3, 0.01));
        r.push(ValidationEntry::residual("fp", 0.0, 2e-3, 1e-4));
        let json = serde_json::to_value(&r).unwrap();
        assert!(json["entries"][0].get("residual").is_none());
        assert!(json["entries"][1].get("p_value").is_none());
        assert!(!r.all_pass());
        assert_eq!(r.failures().count(), 1);
        let back: ValidationReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}

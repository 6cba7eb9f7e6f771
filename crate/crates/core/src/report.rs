//! Machine-readable run reports. Every number is a decimal string, and the
//! field order is fixed, so parsing and re-serialising a report reproduces
//! it byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cf::{ConvergentTable, RowStrings};

/// One stage of a computation (baby steps, a giant-step phase, a scan).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub steps: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partial_quotients: Vec<String>,
}

impl Stage {
    pub fn new(name: impl Into<String>, steps: impl ToString) -> Self {
        Stage {
            name: name.into(),
            steps: steps.to_string(),
            partial_quotients: Vec::new(),
        }
    }
}

/// Classification of a numerical-range trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub kind: String,
    pub period: Option<String>,
    pub product: Option<String>,
    pub evidence: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycle: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub inputs: BTreeMap<String, String>,
    pub stages: Vec<Stage>,
    pub convergents: Vec<RowStrings>,
    pub theta: Option<String>,
    pub oracle_theta: Option<String>,
    pub agreement_digits: Option<u32>,
    pub elapsed_seconds: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictReport>,
    /// Derived quantities specific to a command (β, F(ψ, k), rational θ, …).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl RunReport {
    pub fn new(inputs: BTreeMap<String, String>) -> Self {
        RunReport {
            inputs,
            stages: Vec::new(),
            convergents: Vec::new(),
            theta: None,
            oracle_theta: None,
            agreement_digits: None,
            elapsed_seconds: "0".into(),
            verdict: None,
            extras: BTreeMap::new(),
        }
    }

    pub fn with_table(mut self, table: &ConvergentTable) -> Self {
        self.convergents = table.to_strings();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.inputs {
            let _ = writeln!(out, "{k:>16}: {v}");
        }
        for stage in &self.stages {
            let _ = write!(out, "{:>16}: {} steps", stage.name, stage.steps);
            if !stage.partial_quotients.is_empty() {
                let _ = write!(out, " (partial quotients {})", stage.partial_quotients.join(" "));
            }
            out.push('\n');
        }
        if !self.convergents.is_empty() {
            let _ = writeln!(out, "{:>4} {:>22} {:>12} {:>22}", "j", "q", "a", "p");
            for row in &self.convergents {
                let _ = writeln!(out, "{:>4} {:>22} {:>12} {:>22}", row.j, row.q, row.a, row.p);
            }
        }
        if let Some(t) = &self.theta {
            let _ = writeln!(out, "{:>16}: {t}", "theta");
        }
        if let Some(t) = &self.oracle_theta {
            let _ = writeln!(out, "{:>16}: {t}", "oracle theta");
        }
        if let Some(d) = self.agreement_digits {
            let _ = writeln!(out, "{:>16}: {d}", "agreement digits");
        }
        for (k, v) in &self.extras {
            let _ = writeln!(out, "{k:>16}: {v}");
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(out, "{:>16}: {}", "verdict", v.kind);
            if let Some(p) = &v.period {
                let _ = writeln!(out, "{:>16}: {p}", "period");
            }
            if let Some(p) = &v.product {
                let _ = writeln!(out, "{:>16}: {p}", "product");
            }
            for (k, val) in &v.evidence {
                let _ = writeln!(out, "{k:>16}: {val}");
            }
            for [re, im] in &v.cycle {
                let _ = writeln!(out, "{:>16}  ({re}, {im})", "");
            }
        }
        let _ = writeln!(out, "{:>16}: {}", "elapsed seconds", self.elapsed_seconds);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Integer;

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut inputs = BTreeMap::new();
        inputs.insert("c".to_string(), "0.5".to_string());
        inputs.insert("r".to_string(), "0.2".to_string());
        let table = crate::cf::recover_numerators(&[Integer::from(2), Integer::from(5)]).unwrap();
        let mut report = RunReport::new(inputs).with_table(&table);
        report.stages.push(Stage::new("baby", 12));
        report.theta = Some("0.4188".into());
        report.agreement_digits = Some(4);
        report.extras.insert("beta".into(), "0.1".into());
        let text = report.to_json();
        let back = RunReport::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json(), text);
        let keys: Vec<&str> = [
            "\"inputs\"",
            "\"stages\"",
            "\"convergents\"",
            "\"theta\"",
            "\"oracle_theta\"",
            "\"agreement_digits\"",
            "\"elapsed_seconds\"",
        ]
        .to_vec();
        let mut last = 0;
        for k in keys {
            let at = text.find(k).unwrap();
            assert!(at >= last);
            last = at;
        }
    }
}

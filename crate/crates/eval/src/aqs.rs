//! Absolute judge scores (1–10 per method and dimension) and their means.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Judging dimensions: structural and view consistency, semantic
/// relevance to the prompt, material and texture fidelity, and layout
/// alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "SVC")]
    Svc,
    #[serde(rename = "SRC")]
    Src,
    #[serde(rename = "MTF")]
    Mtf,
    #[serde(rename = "LA")]
    La,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [Dimension::Svc, Dimension::Src, Dimension::Mtf, Dimension::La];

    pub fn code(self) -> &'static str {
        match self {
            Dimension::Svc => "SVC",
            Dimension::Src => "SRC",
            Dimension::Mtf => "MTF",
            Dimension::La => "LA",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.code().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSheet {
    pub method: String,
    pub dimension: Dimension,
    pub scores: Vec<f64>,
}

impl ScoreSheet {
    pub fn new(method: impl Into<String>, dimension: Dimension, scores: Vec<f64>) -> Result<Self, EvalError> {
        let sheet = ScoreSheet {
            method: method.into(),
            dimension,
            scores,
        };
        sheet.validate()?;
        Ok(sheet)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        match self.scores.iter().find(|s| !(1.0..=10.0).contains(*s)) {
            Some(&score) => Err(EvalError::ScoreOutOfRange {
                method: self.method.clone(),
                score,
            }),
            None => Ok(()),
        }
    }
}

/// Mean score per (method, dimension).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AqsTable {
    pub means: BTreeMap<String, BTreeMap<Dimension, f64>>,
}

impl AqsTable {
    pub fn get(&self, method: &str, dim: Dimension) -> Option<f64> {
        self.means.get(method)?.get(&dim).copied()
    }

    /// One row per method, two decimals, `-` for missing cells.
    pub fn format_rows(&self) -> String {
        let mut out = String::from("method");
        for d in Dimension::ALL {
            write!(out, "\t{}", d.code()).unwrap();
        }
        out.push('\n');
        for (method, row) in &self.means {
            out.push_str(method);
            for d in Dimension::ALL {
                match row.get(&d) {
                    Some(v) => write!(out, "\t{v:.2}").unwrap(),
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Arithmetic mean over every score given to each (method, dimension);
/// several sheets for the same cell are pooled.
pub fn aggregate_aqs(sheets: &[ScoreSheet]) -> Result<AqsTable, EvalError> {
    let mut acc: BTreeMap<(String, Dimension), (f64, usize)> = BTreeMap::new();
    for s in sheets {
        s.validate()?;
        let e = acc.entry((s.method.clone(), s.dimension)).or_default();
        e.0 += s.scores.iter().sum::<f64>();
        e.1 += s.scores.len();
    }
    let mut table = AqsTable::default();
    for ((method, dim), (sum, n)) in acc {
        if n > 0 {
            table.means.entry(method).or_default().insert(dim, sum / n as f64);
        }
    }
    if table.means.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn means_and_bounds() {
        let t = aggregate_aqs(&[
            ScoreSheet::new("ours", Dimension::Svc, vec![6.0, 8.0]).unwrap(),
            ScoreSheet::new("base", Dimension::Svc, vec![7.0; 5]).unwrap(),
        ])
        .unwrap();
        assert_eq!(t.get("ours", Dimension::Svc), Some(7.0));
        assert_eq!(t.get("base", Dimension::Svc), Some(7.0));
        assert!(t.format_rows().contains("ours\t7.00\t-\t-\t-"));
        assert!(matches!(
            ScoreSheet::new("x", Dimension::La, vec![11.0]),
            Err(EvalError::ScoreOutOfRange { .. })
        ));
        assert_eq!(aggregate_aqs(&[]), Err(EvalError::EmptyScores));
        let bad: ScoreSheet = serde_json::from_str(r#"{"method":"m","dimension":"MTF","scores":[0.5]}"#).unwrap();
        assert!(aggregate_aqs(&[bad]).is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The five diagnostic superclasses. The discriminant is the fixed index used
/// for confusion matrices and model outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagnosticClass {
    #[serde(rename = "NORM")]
    Norm = 0,
    #[serde(rename = "MI")]
    Mi = 1,
    #[serde(rename = "STTC")]
    Sttc = 2,
    #[serde(rename = "CD")]
    Cd = 3,
    #[serde(rename = "HYP")]
    Hyp = 4,
}

pub const N_CLASSES: usize = 5;

impl DiagnosticClass {
    pub const ALL: [DiagnosticClass; N_CLASSES] = [
        DiagnosticClass::Norm,
        DiagnosticClass::Mi,
        DiagnosticClass::Sttc,
        DiagnosticClass::Cd,
        DiagnosticClass::Hyp,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DiagnosticClass::Norm => "NORM",
            DiagnosticClass::Mi => "MI",
            DiagnosticClass::Sttc => "STTC",
            DiagnosticClass::Cd => "CD",
            DiagnosticClass::Hyp => "HYP",
        }
    }
}

impl fmt::Display for DiagnosticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiagnosticClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown diagnostic class {s:?}")))
    }
}

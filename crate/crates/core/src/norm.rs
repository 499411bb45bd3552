//! The block norm index q ∈ {1, 2, ∞} used by objectives, prox operators,
//! isometry constants, and certificates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which ℓ_q norm is applied to a block (of coefficients or contributions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    /// ℓ₁: sum of absolute values.
    #[serde(rename = "1")]
    L1,
    /// ℓ₂: Euclidean norm.
    #[serde(rename = "2")]
    L2,
    /// ℓ∞: maximum absolute value.
    #[serde(rename = "inf")]
    LInf,
}

impl Norm {
    /// All three norms, in ascending q order.
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::LInf];

    /// Evaluates ‖x‖_q.
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::LInf => x.iter().fold(0.0, |acc, v| acc.max(v.abs())),
        }
    }

    /// The dual exponent: 1 ↔ ∞, 2 ↔ 2.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }

    /// Short label used in CSV/CLI output: `1`, `2`, `inf`.
    pub fn label(self) -> &'static str {
        match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::LInf => "inf",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "linf" | "infinity" => Ok(Norm::LInf),
            other => Err(Error::InvalidParameter(format!(
                "unknown norm '{other}' (expected 1, 2, or inf)"
            ))),
        }
    }
}

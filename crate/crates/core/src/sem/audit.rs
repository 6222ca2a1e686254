use serde::Serialize;

use crate::data::DataColumn;
use crate::error::{Error, Result};
use crate::kci::{epsilon_cp_discrete, EpsilonCpResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    /// No conditioning.
    Dp,
    /// Conditioning on the outcome.
    Eo,
    /// Only the advantaged outcome stratum.
    Eopp,
    /// Conditioning on an arbitrary column.
    Cp,
}

/// Empirical parity of `x` across the levels of `a` under the chosen
/// conditioning. `y` is required for `Eo`/`Eopp`, `z` for `Cp`;
/// `advantaged` names the level of `y` used by `Eopp`.
pub fn parity_audit(
    x: &DataColumn,
    a: &DataColumn,
    mode: AuditMode,
    y: Option<&DataColumn>,
    z: Option<&DataColumn>,
    advantaged: &str,
) -> Result<EpsilonCpResult> {
    fn need<'c>(c: Option<&'c DataColumn>, what: &str) -> Result<&'c DataColumn> {
        c.ok_or_else(|| Error::InvalidArgument(format!("{what} column required for this audit")))
    }
    match mode {
        AuditMode::Dp => epsilon_cp_discrete(x, a, None),
        AuditMode::Eo => epsilon_cp_discrete(x, a, Some(need(y, "outcome")?)),
        AuditMode::Cp => epsilon_cp_discrete(x, a, Some(need(z, "conditioning")?)),
        AuditMode::Eopp => {
            let y = need(y, "outcome")?;
            let (codes, levels) = y.as_categorical()?;
            let level = levels
                .iter()
                .position(|l| l == advantaged)
                .ok_or_else(|| Error::EmptyCell(format!("no observations with outcome {advantaged}")))?;
            let keep: Vec<usize> = (0..codes.len()).filter(|&i| codes[i] == level).collect();
            if keep.is_empty() {
                return Err(Error::EmptyCell(format!("no observations with outcome {advantaged}")));
            }
            epsilon_cp_discrete(&x.select(&keep), &a.select(&keep), Some(&y.select(&keep)))
        }
    }
}

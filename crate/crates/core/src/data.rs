//! Columns of observations.

use crate::error::{Error, Result};

/// One observed variable. Continuous columns hold finite reals; categorical
/// columns hold codes into `levels`.
#[derive(Debug, Clone, PartialEq)]
pub enum DataColumn {
    Continuous(Vec<f64>),
    Categorical { codes: Vec<usize>, levels: Vec<String> },
}

impl DataColumn {
    pub fn continuous(values: Vec<f64>) -> Result<Self> {
        check_len(values.len())?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value {bad}")));
        }
        Ok(DataColumn::Continuous(values))
    }

    /// Categorical column from labels; levels are ordered by first appearance.
    pub fn categorical<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        check_len(labels.len())?;
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            let code = match levels.iter().position(|l| l == label) {
                Some(c) => c,
                None => {
                    levels.push(label.to_string());
                    levels.len() - 1
                }
            };
            codes.push(code);
        }
        Ok(DataColumn::Categorical { codes, levels })
    }

    pub fn from_codes(codes: Vec<usize>, levels: Vec<String>) -> Result<Self> {
        check_len(codes.len())?;
        if let Some(&c) = codes.iter().find(|&&c| c >= levels.len()) {
            return Err(Error::InvalidArgument(format!(
                "code {c} out of range for {} levels",
                levels.len()
            )));
        }
        Ok(DataColumn::Categorical { codes, levels })
    }

    /// Categorical view of integer-valued codes, labelled by their decimal value.
    pub fn from_integers(values: &[i64]) -> Result<Self> {
        let labels: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        Self::categorical(&labels)
    }

    pub fn len(&self) -> usize {
        match self {
            DataColumn::Continuous(v) => v.len(),
            DataColumn::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, DataColumn::Categorical { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DataColumn::Continuous(_) => "continuous",
            DataColumn::Categorical { .. } => "categorical",
        }
    }

    /// Codes and levels of a categorical column.
    pub fn as_categorical(&self) -> Result<(&[usize], &[String])> {
        match self {
            DataColumn::Categorical { codes, levels } => Ok((codes, levels)),
            DataColumn::Continuous(_) => Err(Error::InvalidArgument(
                "expected a categorical column".into(),
            )),
        }
    }

    /// Number of distinct levels actually observed.
    pub fn observed_levels(&self) -> usize {
        match self {
            DataColumn::Categorical { codes, levels } => {
                let mut seen = vec![false; levels.len()];
                for &c in codes {
                    seen[c] = true;
                }
                seen.into_iter().filter(|s| *s).count()
            }
            DataColumn::Continuous(v) => {
                let mut sorted = v.clone();
                sorted.sort_by(f64::total_cmp);
                sorted.dedup();
                sorted.len()
            }
        }
    }

    /// Rows restricted to `keep`.
    pub fn select(&self, keep: &[usize]) -> DataColumn {
        match self {
            DataColumn::Continuous(v) => DataColumn::Continuous(keep.iter().map(|&i| v[i]).collect()),
            DataColumn::Categorical { codes, levels } => DataColumn::Categorical {
                codes: keep.iter().map(|&i| codes[i]).collect(),
                levels: levels.clone(),
            },
        }
    }
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooSmall { min: 2, got: n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_levels_follow_first_appearance() {
        let c = DataColumn::categorical(&["b", "a", "b", "c"]).unwrap();
        let (codes, levels) = c.as_categorical().unwrap();
        assert_eq!(codes, &[0, 1, 0, 2]);
        assert_eq!(levels, &["b", "a", "c"]);
    }

    #[test]
    fn rejects_short_and_non_finite_columns() {
        assert!(DataColumn::continuous(vec![1.0]).is_err());
        assert!(DataColumn::continuous(vec![1.0, f64::NAN]).is_err());
        assert!(DataColumn::from_codes(vec![0, 3], vec!["x".into()]).is_err());
    }
}

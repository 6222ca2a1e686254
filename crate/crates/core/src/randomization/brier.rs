use crate::error::{Error, Result};

/// Mean squared difference between predicted probabilities and 0/1 outcomes.
pub fn brier_score(probs: &[f64], outcomes: &[usize]) -> Result<f64> {
    if probs.len() != outcomes.len() {
        return Err(Error::DimensionMismatch {
            expected: probs.len(),
            got: outcomes.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    super::pmfs::check_binary(outcomes, "outcome")?;
    let total: f64 = probs
        .iter()
        .zip(outcomes)
        .map(|(p, &y)| (p - y as f64).powi(2))
        .sum();
    Ok(total / probs.len() as f64)
}

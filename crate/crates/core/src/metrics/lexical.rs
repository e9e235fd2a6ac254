use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{aggregate, Aggregate, MetricsError};

/// TTR range that generated chapters usually fall in. Reported only.
pub const TTR_PLAUSIBLE: (f64, f64) = (0.2, 0.8);

/// Lowercased alphanumeric word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<String>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn types(&self) -> usize {
        self.tokens.iter().collect::<HashSet<_>>().len()
    }
}

/// Lowercases, then splits on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> TokenStream {
    // Lowercasing first: some lowercase mappings emit combining marks, which
    // must act as separators rather than end up inside a token.
    let tokens = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    TokenStream { tokens }
}

/// Distinct tokens over total tokens.
pub fn ttr(text: &str) -> Result<f64, MetricsError> {
    let stream = tokenize(text);
    if stream.is_empty() {
        return Err(MetricsError::EmptyText);
    }
    Ok(stream.types() as f64 / stream.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtrReport {
    pub ttr: Vec<f64>,
    pub aggregate: Aggregate,
    /// How many texts fall inside [`TTR_PLAUSIBLE`].
    pub within_plausible_band: usize,
}

pub fn ttr_report<S: AsRef<str>>(texts: &[S]) -> Result<TtrReport, MetricsError> {
    let values = texts
        .iter()
        .map(|t| ttr(t.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = aggregate(&values)?;
    let (lo, hi) = TTR_PLAUSIBLE;
    let within_plausible_band = values.iter().filter(|v| **v > lo && **v < hi).count();
    Ok(TtrReport {
        ttr: values,
        aggregate,
        within_plausible_band,
    })
}

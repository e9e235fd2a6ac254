//! Evaluation instruments: lexical diversity (type-token ratio), System
//! Usability Scale and MICSI survey scoring, plus mean/SD aggregation.

mod csv_input;
mod lexical;
mod survey;

use serde::{Deserialize, Serialize};

pub use csv_input::{micsi_from_csv, sus_from_csv, LabelledResponse};
pub use lexical::{tokenize, ttr, ttr_report, TokenStream, TtrReport, TTR_PLAUSIBLE};
pub use survey::{
    micsi_report, micsi_scores, sus_report, sus_score, MicsiReport, MicsiRespondent,
    MicsiResponse, MicsiScores, MicsiSubscale, SubscaleScore, SubscaleSummary, SusReport,
    SusRespondent, SusResponse, MICSI_POSITIVE, SUS_ACCEPTABLE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("text has no tokens")]
    EmptyText,
    #[error("{item} = {value} is outside {min}..={max}")]
    OutOfRange {
        item: String,
        value: i64,
        min: u8,
        max: u8,
    },
    #[error("expected {expected} items, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("malformed response: {0}")]
    WrongShape(String),
    #[error("no values to aggregate")]
    Empty,
    #[error("standard deviation needs at least two values")]
    SdUndefined,
    #[error("csv: {0}")]
    Csv(String),
}

/// Mean and sample (n - 1) standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// `None` when `n == 1`.
    pub sd: Option<f64>,
}

impl Aggregate {
    pub fn sample_sd(&self) -> Result<f64, MetricsError> {
        self.sd.ok_or(MetricsError::SdUndefined)
    }
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(Aggregate { n, mean, sd })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn singleton() {
        let a = aggregate(&[0.47]).unwrap();
        assert_eq!(a.mean, 0.47);
        assert_eq!(a.sd, None);
        assert_eq!(a.sample_sd(), Err(MetricsError::SdUndefined));
    }

    #[test]
    fn one_two_three() {
        let a = aggregate(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.mean, 2.0);
        assert_eq!(a.sd, Some(1.0));
    }

    #[test]
    fn empty() {
        assert_eq!(aggregate(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn hand_computed_sd() {
        // mean 5, squared deviations 9+1+1+9 = 20, 20/3 -> sqrt = 2.5819888974716
        let a = aggregate(&[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(a.mean, 5.0);
        assert!((a.sd.unwrap() - 2.581_988_897_471_611).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn singleton_mean_is_value(x in -1e9f64..1e9) {
            prop_assert_eq!(aggregate(&[x]).unwrap().mean, x);
        }

        #[test]
        fn constant_series_has_zero_sd(x in -1e3f64..1e3, n in 2usize..20) {
            let a = aggregate(&vec![x; n]).unwrap();
            prop_assert!(a.sd.unwrap().abs() < 1e-9);
        }
    }
}

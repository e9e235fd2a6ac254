use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{aggregate, Aggregate, MetricsError};

/// SUS scores at or above this are conventionally read as good usability.
pub const SUS_ACCEPTABLE: f64 = 70.0;

/// MICSI sub-scale scores at or above this count as a positive experience.
pub const MICSI_POSITIVE: f64 = 5.0;

const SUS_ITEMS: usize = 10;

fn check_range(item: String, value: i64, min: u8, max: u8) -> Result<u8, MetricsError> {
    if (i64::from(min)..=i64::from(max)).contains(&value) {
        Ok(value as u8)
    } else {
        Err(MetricsError::OutOfRange {
            item,
            value,
            min,
            max,
        })
    }
}

/// Ten five-point Likert answers, item 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SusResponse {
    items: [u8; SUS_ITEMS],
}

impl SusResponse {
    pub fn new(items: &[i64]) -> Result<Self, MetricsError> {
        if items.len() != SUS_ITEMS {
            return Err(MetricsError::WrongLength {
                expected: SUS_ITEMS,
                found: items.len(),
            });
        }
        let mut out = [0u8; SUS_ITEMS];
        for (i, value) in items.iter().enumerate() {
            out[i] = check_range(format!("q{}", i + 1), *value, 1, 5)?;
        }
        Ok(Self { items: out })
    }

    pub fn items(&self) -> &[u8; SUS_ITEMS] {
        &self.items
    }
}

impl TryFrom<Vec<i64>> for SusResponse {
    type Error = MetricsError;

    fn try_from(items: Vec<i64>) -> Result<Self, Self::Error> {
        Self::new(&items)
    }
}

impl From<SusResponse> for Vec<i64> {
    fn from(r: SusResponse) -> Self {
        r.items.iter().map(|v| i64::from(*v)).collect()
    }
}

/// Odd items contribute `answer - 1`, even items `5 - answer`; the sum is
/// scaled by 2.5 onto 0..=100.
pub fn sus_score(response: &SusResponse) -> f64 {
    let sum: u32 = response
        .items
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if i % 2 == 0 {
                u32::from(v - 1)
            } else {
                u32::from(5 - v)
            }
        })
        .sum();
    f64::from(sum) * 2.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicsiSubscale {
    Enjoyment,
    Exploration,
    Expressiveness,
    Immersion,
    ResultsWorthEffort,
    Communication,
    Alignment,
    Agency,
    Partnership,
}

impl MicsiSubscale {
    /// Creativity-support sub-scales, each answered by a pair of items.
    pub const PAIRED: [MicsiSubscale; 5] = [
        MicsiSubscale::Enjoyment,
        MicsiSubscale::Exploration,
        MicsiSubscale::Expressiveness,
        MicsiSubscale::Immersion,
        MicsiSubscale::ResultsWorthEffort,
    ];

    /// Collaboration sub-scales, one item each.
    pub const SINGLE: [MicsiSubscale; 4] = [
        MicsiSubscale::Communication,
        MicsiSubscale::Alignment,
        MicsiSubscale::Agency,
        MicsiSubscale::Partnership,
    ];

    pub fn key(self) -> &'static str {
        match self {
            MicsiSubscale::Enjoyment => "enjoyment",
            MicsiSubscale::Exploration => "exploration",
            MicsiSubscale::Expressiveness => "expressiveness",
            MicsiSubscale::Immersion => "immersion",
            MicsiSubscale::ResultsWorthEffort => "results_worth_effort",
            MicsiSubscale::Communication => "communication",
            MicsiSubscale::Alignment => "alignment",
            MicsiSubscale::Agency => "agency",
            MicsiSubscale::Partnership => "partnership",
        }
    }
}

impl fmt::Display for MicsiSubscale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Seven-point answers: a pair for each creativity-support sub-scale and a
/// single item for each collaboration sub-scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMicsi", into = "RawMicsi")]
pub struct MicsiResponse {
    paired: [[u8; 2]; 5],
    single: [u8; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMicsi {
    paired_items: Vec<Vec<i64>>,
    single_items: Vec<i64>,
}

impl TryFrom<RawMicsi> for MicsiResponse {
    type Error = MetricsError;

    fn try_from(raw: RawMicsi) -> Result<Self, Self::Error> {
        MicsiResponse::new(&raw.paired_items, &raw.single_items)
    }
}

impl From<MicsiResponse> for RawMicsi {
    fn from(r: MicsiResponse) -> Self {
        RawMicsi {
            paired_items: r
                .paired
                .iter()
                .map(|p| p.iter().map(|v| i64::from(*v)).collect())
                .collect(),
            single_items: r.single.iter().map(|v| i64::from(*v)).collect(),
        }
    }
}

impl MicsiResponse {
    /// `paired` follows [`MicsiSubscale::PAIRED`], `single` follows
    /// [`MicsiSubscale::SINGLE`].
    pub fn new(paired: &[Vec<i64>], single: &[i64]) -> Result<Self, MetricsError> {
        if paired.len() != 5 || single.len() != 4 {
            return Err(MetricsError::WrongShape(format!(
                "expected 5 item pairs and 4 single items, found {} pairs and {} singles",
                paired.len(),
                single.len()
            )));
        }
        let mut out = Self {
            paired: [[0; 2]; 5],
            single: [0; 4],
        };
        for (i, pair) in paired.iter().enumerate() {
            let scale = MicsiSubscale::PAIRED[i];
            if pair.len() != 2 {
                return Err(MetricsError::WrongShape(format!(
                    "{scale} needs 2 items, found {}",
                    pair.len()
                )));
            }
            for (j, v) in pair.iter().enumerate() {
                out.paired[i][j] = check_range(format!("{scale}_{}", j + 1), *v, 1, 7)?;
            }
        }
        for (i, v) in single.iter().enumerate() {
            out.single[i] = check_range(MicsiSubscale::SINGLE[i].to_string(), *v, 1, 7)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubscaleScore {
    pub score: f64,
    pub positive: bool,
}

impl SubscaleScore {
    fn new(score: f64) -> Self {
        Self {
            score,
            positive: score >= MICSI_POSITIVE,
        }
    }
}

pub type MicsiScores = BTreeMap<MicsiSubscale, SubscaleScore>;

/// Pair means for creativity-support sub-scales, raw values for the
/// collaboration sub-scales.
pub fn micsi_scores(response: &MicsiResponse) -> MicsiScores {
    let mut scores = BTreeMap::new();
    for (scale, [a, b]) in MicsiSubscale::PAIRED.iter().zip(response.paired) {
        let mean = (f64::from(a) + f64::from(b)) / 2.0;
        scores.insert(*scale, SubscaleScore::new(mean));
    }
    for (scale, v) in MicsiSubscale::SINGLE.iter().zip(response.single) {
        scores.insert(*scale, SubscaleScore::new(f64::from(v)));
    }
    scores
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusRespondent {
    pub respondent: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusReport {
    pub respondents: Vec<SusRespondent>,
    pub aggregate: Aggregate,
    /// Whether the mean score reaches [`SUS_ACCEPTABLE`].
    pub acceptable: bool,
}

pub fn sus_report(responses: &[(String, SusResponse)]) -> Result<SusReport, MetricsError> {
    let respondents: Vec<SusRespondent> = responses
        .iter()
        .map(|(id, r)| SusRespondent {
            respondent: id.clone(),
            score: sus_score(r),
        })
        .collect();
    let scores: Vec<f64> = respondents.iter().map(|r| r.score).collect();
    let aggregate = aggregate(&scores)?;
    Ok(SusReport {
        respondents,
        acceptable: aggregate.mean >= SUS_ACCEPTABLE,
        aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicsiRespondent {
    pub respondent: String,
    pub scores: MicsiScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubscaleSummary {
    pub aggregate: Aggregate,
    /// Whether the mean reaches [`MICSI_POSITIVE`].
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicsiReport {
    pub respondents: Vec<MicsiRespondent>,
    pub subscales: BTreeMap<MicsiSubscale, SubscaleSummary>,
}

pub fn micsi_report(responses: &[(String, MicsiResponse)]) -> Result<MicsiReport, MetricsError> {
    if responses.is_empty() {
        return Err(MetricsError::Empty);
    }
    let respondents: Vec<MicsiRespondent> = responses
        .iter()
        .map(|(id, r)| MicsiRespondent {
            respondent: id.clone(),
            scores: micsi_scores(r),
        })
        .collect();
    let mut subscales = BTreeMap::new();
    for scale in MicsiSubscale::PAIRED.iter().chain(&MicsiSubscale::SINGLE) {
        let values: Vec<f64> = respondents.iter().map(|r| r.scores[scale].score).collect();
        let aggregate = aggregate(&values)?;
        subscales.insert(
            *scale,
            SubscaleSummary {
                positive: aggregate.mean >= MICSI_POSITIVE,
                aggregate,
            },
        );
    }
    Ok(MicsiReport {
        respondents,
        subscales,
    })
}

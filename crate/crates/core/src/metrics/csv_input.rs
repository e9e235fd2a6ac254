use std::collections::HashMap;

use serde::Serialize;

use super::survey::{MicsiResponse, MicsiSubscale, SusResponse};
use super::MetricsError;

const RESPONDENT: &str = "respondent";

/// One row of a survey export. Rows without a `respondent` column are
/// labelled by their 1-based row number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledResponse<T> {
    pub respondent: String,
    pub response: T,
}

impl<T> LabelledResponse<T> {
    pub fn into_pair(self) -> (String, T) {
        (self.respondent, self.response)
    }
}

struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn parse(input: &str) -> Result<Self, MetricsError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| MetricsError::Csv(e.to_string()))?
            .clone();
        let mut columns = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            let key = h.to_ascii_lowercase();
            if columns.insert(key.clone(), i).is_some() {
                return Err(MetricsError::Csv(format!("duplicate column {key}")));
            }
        }
        let rows = reader
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| MetricsError::Csv(e.to_string()))?;
        if rows.is_empty() {
            return Err(MetricsError::Empty);
        }
        Ok(Self { columns, rows })
    }

    fn column(&self, name: &str) -> Result<usize, MetricsError> {
        self.columns
            .get(name)
            .copied()
            .ok_or_else(|| MetricsError::Csv(format!("missing column {name}")))
    }

    fn label(&self, row: usize) -> String {
        self.columns
            .get(RESPONDENT)
            .and_then(|&c| self.rows[row].get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .unwrap_or_else(|| (row + 1).to_string())
    }

    fn int(&self, row: usize, column: usize, name: &str) -> Result<i64, MetricsError> {
        let cell = self.rows[row].get(column).unwrap_or("");
        cell.parse().map_err(|_| {
            MetricsError::Csv(format!("row {}: {name} = {cell:?} is not an integer", row + 1))
        })
    }
}

/// Reads a SUS export with columns `q1`..`q10` and an optional
/// `respondent` column. Column order and header case do not matter.
pub fn sus_from_csv(input: &str) -> Result<Vec<LabelledResponse<SusResponse>>, MetricsError> {
    let table = Table::parse(input)?;
    let names: Vec<String> = (1..=10).map(|i| format!("q{i}")).collect();
    let cols = names
        .iter()
        .map(|n| table.column(n))
        .collect::<Result<Vec<_>, _>>()?;
    (0..table.rows.len())
        .map(|row| {
            let items = cols
                .iter()
                .zip(&names)
                .map(|(&c, n)| table.int(row, c, n))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LabelledResponse {
                respondent: table.label(row),
                response: SusResponse::new(&items)?,
            })
        })
        .collect()
}

/// Reads a MICSI export: `<scale>_1`, `<scale>_2` for each paired sub-scale,
/// a bare `<scale>` column for each single-item one, optional `respondent`.
pub fn micsi_from_csv(input: &str) -> Result<Vec<LabelledResponse<MicsiResponse>>, MetricsError> {
    let table = Table::parse(input)?;
    let paired: Vec<[(usize, String); 2]> = MicsiSubscale::PAIRED
        .iter()
        .map(|s| {
            let a = format!("{s}_1");
            let b = format!("{s}_2");
            Ok([(table.column(&a)?, a), (table.column(&b)?, b)])
        })
        .collect::<Result<_, MetricsError>>()?;
    let single: Vec<(usize, String)> = MicsiSubscale::SINGLE
        .iter()
        .map(|s| Ok((table.column(s.key())?, s.key().to_string())))
        .collect::<Result<_, MetricsError>>()?;
    (0..table.rows.len())
        .map(|row| {
            let pairs = paired
                .iter()
                .map(|cols| {
                    cols.iter()
                        .map(|(c, n)| table.int(row, *c, n))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let singles = single
                .iter()
                .map(|(c, n)| table.int(row, *c, n))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LabelledResponse {
                respondent: table.label(row),
                response: MicsiResponse::new(&pairs, &singles)?,
            })
        })
        .collect()
}

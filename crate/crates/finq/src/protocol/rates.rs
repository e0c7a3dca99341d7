//! Per-model token rates and exact-decimal cost accounting.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

use super::types::TokenUsage;

#[derive(Debug, Error)]
pub enum RateCardError {
    #[error("no rate entry for model `{0}`")]
    UnknownModel(String),
    #[error("rate card parse error at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Rates per one million tokens, keyed by model id.
#[derive(Debug, Clone, Default)]
pub struct RateCard {
    entries: BTreeMap<String, (Decimal, Decimal)>,
}

impl RateCard {
    /// Parse the `model_id,input_rate_per_1m,output_rate_per_1m` CSV.
    pub fn from_csv(source: impl Read) -> Result<RateCard, RateCardError> {
        let mut reader = csv::Reader::from_reader(source);
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| RateCardError::Malformed {
                line: 1,
                reason: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        if headers != ["model_id", "input_rate_per_1m", "output_rate_per_1m"] {
            return Err(RateCardError::Malformed {
                line: 1,
                reason: format!("unexpected header `{}`", headers.join(",")),
            });
        }
        let mut entries = BTreeMap::new();
        for (idx, record) in reader.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| RateCardError::Malformed {
                line,
                reason: e.to_string(),
            })?;
            let model = record.get(0).unwrap_or_default().trim().to_string();
            let parse = |i: usize| -> Result<Decimal, RateCardError> {
                Decimal::from_str(record.get(i).unwrap_or_default().trim()).map_err(|e| {
                    RateCardError::Malformed {
                        line,
                        reason: e.to_string(),
                    }
                })
            };
            entries.insert(model, (parse(1)?, parse(2)?));
        }
        Ok(RateCard { entries })
    }

    pub fn insert(
        &mut self,
        model: impl Into<String>,
        input_per_1m: Decimal,
        output_per_1m: Decimal,
    ) {
        self.entries
            .insert(model.into(), (input_per_1m, output_per_1m));
    }

    pub fn rates(&self, model: &str) -> Option<(Decimal, Decimal)> {
        self.entries.get(model).copied()
    }

    /// Exact cost: `prompt × input_rate/1M + completion × output_rate/1M`.
    pub fn cost(&self, model: &str, usage: TokenUsage) -> Result<Decimal, RateCardError> {
        let (input_rate, output_rate) = self
            .rates(model)
            .ok_or_else(|| RateCardError::UnknownModel(model.to_string()))?;
        let million = Decimal::from(1_000_000u64);
        Ok(Decimal::from(usage.prompt_tokens) * input_rate / million
            + Decimal::from(usage.completion_tokens) * output_rate / million)
    }
}

/// Free-function form mirroring the operation surface.
pub fn cost(
    usage: TokenUsage,
    rate_card: &RateCard,
    model: &str,
) -> Result<Decimal, RateCardError> {
    rate_card.cost(model, usage)
}

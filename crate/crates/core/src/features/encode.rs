use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix, LaggedRow};

pub const DEFAULT_SMOOTHING_K: f64 = 10.0;

/// Smoothed target means per categorical level:
/// `(n * level_mean + k * prior) / (n + k)`, where `prior` is the training
/// target mean. Unseen levels encode to `prior`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub country: BTreeMap<String, f64>,
    pub region: BTreeMap<String, f64>,
    pub income_group: BTreeMap<String, f64>,
    pub pathogen: BTreeMap<String, f64>,
    pub antibiotic: BTreeMap<String, f64>,
    pub prior: f64,
    pub smoothing_k: f64,
}

impl EncoderState {
    fn lookup(&self, map: &BTreeMap<String, f64>, level: &str) -> f64 {
        map.get(level).copied().unwrap_or(self.prior)
    }

    /// Encoded values for one row in column order
    /// (country, region, income, pathogen, antibiotic).
    pub fn encode(&self, row: &LaggedRow) -> [f64; 5] {
        [
            self.lookup(&self.country, &row.obs.country),
            self.lookup(&self.region, row.obs.who_region.label()),
            self.lookup(&self.income_group, row.obs.income_group.label()),
            self.lookup(&self.pathogen, &row.obs.pathogen),
            self.lookup(&self.antibiotic, &row.obs.antibiotic),
        ]
    }
}

fn target_of(row: &LaggedRow, idx: usize) -> Result<f64, FeatureError> {
    row.obs.resistance_pct.ok_or(FeatureError::NotImputed {
        row: idx,
        field: "resistance_pct",
    })
}

pub fn fit_target_encoder(
    train: &[LaggedRow],
    smoothing_k: f64,
) -> Result<EncoderState, FeatureError> {
    if !(smoothing_k >= 0.0 && smoothing_k.is_finite()) {
        return Err(FeatureError::InvalidSmoothing(smoothing_k));
    }
    if train.is_empty() {
        return Err(FeatureError::EmptyTraining);
    }
    let targets = train
        .iter()
        .enumerate()
        .map(|(i, r)| target_of(r, i))
        .collect::<Result<Vec<_>, _>>()?;
    let prior = targets.iter().sum::<f64>() / targets.len() as f64;

    let fit = |level_of: &dyn Fn(&LaggedRow) -> String| -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (row, &y) in train.iter().zip(&targets) {
            let e = acc.entry(level_of(row)).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(level, (sum, n))| {
                let n = n as f64;
                let mean = sum / n;
                (level, (n * mean + smoothing_k * prior) / (n + smoothing_k))
            })
            .collect()
    };

    Ok(EncoderState {
        country: fit(&|r| r.obs.country.clone()),
        region: fit(&|r| r.obs.who_region.label().to_string()),
        income_group: fit(&|r| r.obs.income_group.label().to_string()),
        pathogen: fit(&|r| r.obs.pathogen.clone()),
        antibiotic: fit(&|r| r.obs.antibiotic.clone()),
        prior,
        smoothing_k,
    })
}

/// Builds the standard-layout matrix from imputed rows.
pub fn apply_encoder(rows: &[LaggedRow], e: &EncoderState) -> Result<FeatureMatrix, FeatureError> {
    let mut values = Vec::with_capacity(rows.len() * 8);
    let mut target = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let lag = row.resistance_lag1.ok_or(FeatureError::NotImputed {
            row: i,
            field: "resistance_lag1",
        })?;
        let consumption = row.obs.consumption_did.ok_or(FeatureError::NotImputed {
            row: i,
            field: "consumption_did",
        })?;
        values.push(row.obs.year as f64);
        values.push(lag);
        values.push(consumption);
        values.extend_from_slice(&e.encode(row));
        target.push(target_of(row, i)?);
    }
    Ok(FeatureMatrix::standard(values, target))
}

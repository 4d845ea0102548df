use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{FeatureError, LaggedRow};

/// Medians fitted on training rows. Pairs unseen in training fall back to
/// `global_median`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationStats {
    #[serde(serialize_with = "pairs_out", deserialize_with = "pairs_in")]
    pub pair_medians: BTreeMap<(String, String), f64>,
    pub global_median: f64,
    pub consumption_median: f64,
}

impl ImputationStats {
    pub fn resistance_for(&self, pathogen: &str, antibiotic: &str) -> f64 {
        self.pair_medians
            .get(&(pathogen.to_string(), antibiotic.to_string()))
            .copied()
            .unwrap_or(self.global_median)
    }
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    })
}

pub fn fit_imputation(train: &[LaggedRow]) -> Result<ImputationStats, FeatureError> {
    if train.is_empty() {
        return Err(FeatureError::EmptyTraining);
    }
    let mut per_pair: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    let mut consumption = Vec::new();
    for row in train {
        if let Some(r) = row.obs.resistance_pct {
            per_pair
                .entry((row.obs.pathogen.clone(), row.obs.antibiotic.clone()))
                .or_default()
                .push(r);
            all.push(r);
        }
        if let Some(c) = row.obs.consumption_did {
            consumption.push(c);
        }
    }
    let global_median = median(&mut all).ok_or(FeatureError::NoObservedValues)?;
    let pair_medians = per_pair
        .into_iter()
        .map(|(k, mut v)| {
            let m = median(&mut v).expect("non-empty group");
            (k, m)
        })
        .collect();
    // A training set without any consumption figures leaves the column at 0.
    let consumption_median = median(&mut consumption).unwrap_or(0.0);
    Ok(ImputationStats {
        pair_medians,
        global_median,
        consumption_median,
    })
}

/// Fills missing target and lag with the pair median and missing consumption
/// with the training consumption median. Present values are untouched, so
/// the operation is idempotent.
pub fn apply_imputation(rows: &[LaggedRow], stats: &ImputationStats) -> Vec<LaggedRow> {
    rows.iter()
        .map(|row| {
            let mut out = row.clone();
            let fill = || stats.resistance_for(&row.obs.pathogen, &row.obs.antibiotic);
            out.obs.resistance_pct.get_or_insert_with(fill);
            out.resistance_lag1.get_or_insert_with(fill);
            out.obs
                .consumption_did
                .get_or_insert(stats.consumption_median);
            out
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct PairMedian {
    pathogen: String,
    antibiotic: String,
    median: f64,
}

fn pairs_out<S: Serializer>(
    map: &BTreeMap<(String, String), f64>,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.iter().map(|((p, a), m)| PairMedian {
        pathogen: p.clone(),
        antibiotic: a.clone(),
        median: *m,
    }))
}

fn pairs_in<'de, D: Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<(String, String), f64>, D::Error> {
    let entries = Vec::<PairMedian>::deserialize(d)?;
    Ok(entries
        .into_iter()
        .map(|e| ((e.pathogen, e.antibiotic), e.median))
        .collect())
}

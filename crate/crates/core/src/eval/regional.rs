use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::data::WhoRegion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalEntry {
    pub region: String,
    pub mae: f64,
    pub n_observations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionalTable {
    /// Regions with test rows, in canonical region order.
    pub entries: Vec<RegionalEntry>,
    /// Regions with no test rows.
    pub excluded: Vec<String>,
}

impl RegionalTable {
    pub fn total_observations(&self) -> usize {
        self.entries.iter().map(|e| e.n_observations).sum()
    }

    /// Observation-weighted mean of the regional MAEs.
    pub fn weighted_mae(&self) -> Option<f64> {
        let n = self.total_observations();
        (n > 0).then(|| {
            self.entries
                .iter()
                .map(|e| e.n_observations as f64 * e.mae)
                .sum::<f64>()
                / n as f64
        })
    }
}

pub fn regional_mae(y: &[f64], yhat: &[f64], regions: &[WhoRegion]) -> Result<RegionalTable, EvalError> {
    for other in [yhat.len(), regions.len()] {
        if other != y.len() {
            return Err(EvalError::LengthMismatch {
                expected: y.len(),
                actual: other,
            });
        }
    }
    let mut acc: BTreeMap<WhoRegion, (f64, usize)> = BTreeMap::new();
    for ((a, b), r) in y.iter().zip(yhat).zip(regions) {
        let slot = acc.entry(*r).or_default();
        slot.0 += (a - b).abs();
        slot.1 += 1;
    }
    let mut table = RegionalTable::default();
    for region in WhoRegion::ALL {
        match acc.get(&region) {
            Some(&(sum, n)) => table.entries.push(RegionalEntry {
                region: region.label().to_string(),
                mae: sum / n as f64,
                n_observations: n,
            }),
            None => table.excluded.push(region.label().to_string()),
        }
    }
    Ok(table)
}

//! GLASS-schema surveillance records.
//!
//! An [`Observation`] is one (country, pathogen, antibiotic, year) resistance
//! measurement. Datasets come either from a CSV export ([`parse_dataset`]) or
//! from the AR(1) generator in [`synth`].

mod csv_io;
pub mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use csv_io::{parse_dataset, render_dataset, CSV_HEADER};
pub use synth::{synthesize_dataset, SynthConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DataError {
    #[error("line {line}: header must be `{expected}`")]
    BadHeader { line: u64, expected: &'static str },
    #[error("line {line}: unknown WHO region `{value}`")]
    UnknownRegion { line: u64, value: String },
    #[error("line {line}: resistance percentage {value} outside [0, 100]")]
    OutOfRangePercentage { line: u64, value: f64 },
    #[error("line {line}: duplicate key ({country}, {pathogen}, {antibiotic}, {year})")]
    DuplicateKey {
        line: u64,
        country: String,
        pathogen: String,
        antibiotic: String,
        year: i32,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("dataset has no observations")]
    EmptyDataset,
    #[error("synthetic config has a zero count: {0}")]
    EmptyConfig(&'static str),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

/// The six WHO regions, in canonical reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WhoRegion {
    African,
    Americas,
    SouthEastAsia,
    European,
    EasternMediterranean,
    WesternPacific,
}

impl WhoRegion {
    pub const ALL: [WhoRegion; 6] = [
        WhoRegion::African,
        WhoRegion::Americas,
        WhoRegion::SouthEastAsia,
        WhoRegion::European,
        WhoRegion::EasternMediterranean,
        WhoRegion::WesternPacific,
    ];

    /// Exact label used in GLASS exports.
    pub fn label(self) -> &'static str {
        match self {
            WhoRegion::African => "African Region",
            WhoRegion::Americas => "Region of the Americas",
            WhoRegion::SouthEastAsia => "South-East Asia Region",
            WhoRegion::European => "European Region",
            WhoRegion::EasternMediterranean => "Eastern Mediterranean Region",
            WhoRegion::WesternPacific => "Western Pacific Region",
        }
    }
}

impl fmt::Display for WhoRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for WhoRegion {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WhoRegion::ALL.into_iter().find(|r| r.label() == s).ok_or(())
    }
}

/// World Bank income classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IncomeGroup {
    High,
    UpperMiddle,
    LowerMiddle,
    Low,
    Unknown,
}

impl IncomeGroup {
    pub const ALL: [IncomeGroup; 5] = [
        IncomeGroup::High,
        IncomeGroup::UpperMiddle,
        IncomeGroup::LowerMiddle,
        IncomeGroup::Low,
        IncomeGroup::Unknown,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IncomeGroup::High => "High",
            IncomeGroup::UpperMiddle => "Upper-middle",
            IncomeGroup::LowerMiddle => "Lower-middle",
            IncomeGroup::Low => "Low",
            IncomeGroup::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for IncomeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IncomeGroup {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IncomeGroup::ALL.into_iter().find(|g| g.label() == s).ok_or(())
    }
}

/// One surveillance record. `None` means the cell was empty in the source;
/// a zero is a real measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub country: String,
    pub who_region: WhoRegion,
    pub income_group: IncomeGroup,
    pub pathogen: String,
    pub antibiotic: String,
    pub year: i32,
    pub resistance_pct: Option<f64>,
    pub consumption_did: Option<f64>,
}

impl Observation {
    /// Series identity: the row key without the year.
    pub fn series_key(&self) -> (&str, &str, &str) {
        (&self.country, &self.pathogen, &self.antibiotic)
    }

    /// Checks the value-range invariants, returning a reason on failure.
    pub fn check(&self) -> Result<(), String> {
        if let Some(r) = self.resistance_pct {
            if !(0.0..=100.0).contains(&r) {
                return Err(format!("resistance {r} outside [0, 100]"));
            }
        }
        if let Some(c) = self.consumption_did {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(format!("consumption {c} must be a finite non-negative number"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Ingested,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Observation>,
    pub provenance: Provenance,
    pub generator_seed: Option<u64>,
}

impl Dataset {
    /// Builds a dataset after checking row invariants and key uniqueness.
    pub fn new(
        rows: Vec<Observation>,
        provenance: Provenance,
        generator_seed: Option<u64>,
    ) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut seen = HashSet::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            // Line numbers as they would appear in a rendered CSV.
            let line = i as u64 + 2;
            if let Some(r) = row.resistance_pct {
                if !(0.0..=100.0).contains(&r) {
                    return Err(DataError::OutOfRangePercentage { line, value: r });
                }
            }
            row.check()
                .map_err(|reason| DataError::MalformedRow { line, reason })?;
            let key = (row.series_key(), row.year);
            if !seen.insert(key) {
                return Err(duplicate(line, row));
            }
        }
        Ok(Self {
            rows,
            provenance,
            generator_seed,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub(crate) fn duplicate(line: u64, row: &Observation) -> DataError {
    DataError::DuplicateKey {
        line,
        country: row.country.clone(),
        pathogen: row.pathogen.clone(),
        antibiotic: row.antibiotic.clone(),
        year: row.year,
    }
}

/// Row counts broken down by region, year and income group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total_rows: usize,
    pub per_region: BTreeMap<String, usize>,
    pub per_year: BTreeMap<i32, usize>,
    pub per_income_group: BTreeMap<String, usize>,
    pub missing_resistance: usize,
    pub missing_consumption: usize,
    pub countries: usize,
}

pub fn dataset_summary(rows: &[Observation]) -> Summary {
    let mut per_region: BTreeMap<String, usize> = WhoRegion::ALL
        .iter()
        .map(|r| (r.label().to_string(), 0))
        .collect();
    let mut per_income_group: BTreeMap<String, usize> = IncomeGroup::ALL
        .iter()
        .map(|g| (g.label().to_string(), 0))
        .collect();
    let mut per_year = BTreeMap::new();
    let mut countries = HashSet::new();
    let mut missing_resistance = 0;
    let mut missing_consumption = 0;
    for row in rows {
        *per_region.get_mut(row.who_region.label()).unwrap() += 1;
        *per_income_group.get_mut(row.income_group.label()).unwrap() += 1;
        *per_year.entry(row.year).or_insert(0) += 1;
        countries.insert(row.country.as_str());
        missing_resistance += usize::from(row.resistance_pct.is_none());
        missing_consumption += usize::from(row.consumption_did.is_none());
    }
    Summary {
        total_rows: rows.len(),
        per_region,
        per_year,
        per_income_group,
        missing_resistance,
        missing_consumption,
        countries: countries.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(region: WhoRegion, year: i32) -> Observation {
        Observation {
            country: format!("C-{}", region.label()),
            who_region: region,
            income_group: IncomeGroup::High,
            pathogen: "Escherichia coli".into(),
            antibiotic: "Ciprofloxacin".into(),
            year,
            resistance_pct: Some(10.0),
            consumption_did: None,
        }
    }

    #[test]
    fn region_labels_round_trip() {
        for r in WhoRegion::ALL {
            assert_eq!(r.label().parse::<WhoRegion>(), Ok(r));
        }
        assert!("Americas".parse::<WhoRegion>().is_err());
        for g in IncomeGroup::ALL {
            assert_eq!(g.label().parse::<IncomeGroup>(), Ok(g));
        }
    }

    #[test]
    fn empty_summary_is_all_zero() {
        let s = dataset_summary(&[]);
        assert_eq!(s.total_rows, 0);
        assert!(s.per_region.values().all(|&c| c == 0));
        assert!(s.per_income_group.values().all(|&c| c == 0));
        assert!(s.per_year.is_empty());
        assert_eq!(s.missing_resistance + s.missing_consumption, 0);
    }

    #[test]
    fn one_row_per_region() {
        let rows: Vec<_> = WhoRegion::ALL.iter().map(|&r| obs(r, 2021)).collect();
        let s = dataset_summary(&rows);
        assert_eq!(s.per_region.len(), 6);
        assert!(s.per_region.values().all(|&c| c == 1));
        assert_eq!(s.missing_consumption, 6);
    }

    #[test]
    fn dataset_rejects_duplicate_keys() {
        let rows = vec![obs(WhoRegion::African, 2021), obs(WhoRegion::African, 2021)];
        let err = Dataset::new(rows, Provenance::Ingested, None).unwrap_err();
        assert!(matches!(err, DataError::DuplicateKey { line: 3, .. }));
    }
}

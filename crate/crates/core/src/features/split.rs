use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{FeatureError, LaggedRow};

/// Calendar years assigned to each partition. Train and validation may
/// overlap; test must be disjoint from train.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train_years: BTreeSet<i32>,
    pub val_years: BTreeSet<i32>,
    pub test_years: BTreeSet<i32>,
}

impl Default for SplitSpec {
    /// Train 2021-2022, validate 2022, test 2023. Validation overlaps
    /// training on 2022.
    fn default() -> Self {
        Self {
            train_years: [2021, 2022].into(),
            val_years: [2022].into(),
            test_years: [2023].into(),
        }
    }
}

impl SplitSpec {
    /// Train 2021, validate 2022, test 2023: no year shared between any two
    /// partitions.
    pub fn disjoint_validation() -> Self {
        Self {
            train_years: [2021].into(),
            val_years: [2022].into(),
            test_years: [2023].into(),
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        for (name, set) in [
            ("train", &self.train_years),
            ("validation", &self.val_years),
            ("test", &self.test_years),
        ] {
            if set.is_empty() {
                return Err(FeatureError::InvalidSplit(format!("{name} years are empty")));
            }
        }
        if let Some(y) = self.test_years.intersection(&self.train_years).next() {
            return Err(FeatureError::InvalidSplit(format!(
                "year {y} is in both train and test"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partitions {
    pub train: Vec<LaggedRow>,
    pub val: Vec<LaggedRow>,
    pub test: Vec<LaggedRow>,
}

/// Assigns rows to partitions purely by year, preserving input order. Rows
/// whose year is in no set are dropped.
pub fn temporal_split(rows: &[LaggedRow], spec: &SplitSpec) -> Result<Partitions, FeatureError> {
    spec.validate()?;
    let pick = |years: &BTreeSet<i32>| -> Vec<LaggedRow> {
        rows.iter()
            .filter(|r| years.contains(&r.obs.year))
            .cloned()
            .collect()
    };
    let parts = Partitions {
        train: pick(&spec.train_years),
        val: pick(&spec.val_years),
        test: pick(&spec.test_years),
    };
    for (name, part) in [
        ("train", &parts.train),
        ("validation", &parts.val),
        ("test", &parts.test),
    ] {
        if part.is_empty() {
            return Err(FeatureError::EmptyPartition(name));
        }
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize_dataset, SynthConfig};
    use crate::features::compute_lag;

    #[test]
    fn default_split_counts() {
        let d = synthesize_dataset(&SynthConfig::default(), 7).unwrap();
        let p = temporal_split(&compute_lag(&d), &SplitSpec::default()).unwrap();
        assert_eq!((p.train.len(), p.val.len(), p.test.len()), (880, 440, 440));

        let p = temporal_split(&compute_lag(&d), &SplitSpec::disjoint_validation()).unwrap();
        assert_eq!((p.train.len(), p.val.len(), p.test.len()), (440, 440, 440));
    }

    #[test]
    fn absent_test_year_is_an_error() {
        let d = synthesize_dataset(&SynthConfig::default(), 7).unwrap();
        let spec = SplitSpec {
            test_years: [2030].into(),
            ..SplitSpec::default()
        };
        assert_eq!(
            temporal_split(&compute_lag(&d), &spec),
            Err(FeatureError::EmptyPartition("test"))
        );
    }

    #[test]
    fn overlapping_test_rejected() {
        let spec = SplitSpec {
            test_years: [2022].into(),
            ..SplitSpec::default()
        };
        assert!(matches!(spec.validate(), Err(FeatureError::InvalidSplit(_))));
        let spec = SplitSpec {
            val_years: BTreeSet::new(),
            ..SplitSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn membership_is_by_year_only() {
        let d = synthesize_dataset(&SynthConfig::default(), 2).unwrap();
        let spec = SplitSpec::default();
        let p = temporal_split(&compute_lag(&d), &spec).unwrap();
        assert!(p.train.iter().all(|r| spec.train_years.contains(&r.obs.year)));
        assert!(p.test.iter().all(|r| spec.test_years.contains(&r.obs.year)));
        assert!(p
            .train
            .iter()
            .all(|r| !p.test.iter().any(|t| t.obs == r.obs)));
    }
}

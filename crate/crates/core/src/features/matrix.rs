use serde::{Deserialize, Serialize};

/// Columns of the design matrix, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureColumn {
    Year,
    ResistanceLag1,
    ConsumptionDid,
    EncCountry,
    EncRegion,
    EncIncome,
    EncPathogen,
    EncAntibiotic,
}

pub const FEATURE_COLUMNS: [FeatureColumn; 8] = [
    FeatureColumn::Year,
    FeatureColumn::ResistanceLag1,
    FeatureColumn::ConsumptionDid,
    FeatureColumn::EncCountry,
    FeatureColumn::EncRegion,
    FeatureColumn::EncIncome,
    FeatureColumn::EncPathogen,
    FeatureColumn::EncAntibiotic,
];

impl FeatureColumn {
    pub fn index(self) -> usize {
        FEATURE_COLUMNS.iter().position(|&c| c == self).unwrap()
    }

    /// Internal column name.
    pub fn name(self) -> &'static str {
        match self {
            FeatureColumn::Year => "year",
            FeatureColumn::ResistanceLag1 => "resistance_lag1",
            FeatureColumn::ConsumptionDid => "consumption_did",
            FeatureColumn::EncCountry => "enc_country",
            FeatureColumn::EncRegion => "enc_region",
            FeatureColumn::EncIncome => "enc_income",
            FeatureColumn::EncPathogen => "enc_pathogen",
            FeatureColumn::EncAntibiotic => "enc_antibiotic",
        }
    }

    /// Display label, matching the source-data field names.
    pub fn label(self) -> &'static str {
        match self {
            FeatureColumn::Year => "Year",
            FeatureColumn::ResistanceLag1 => "Resistance_lag1",
            FeatureColumn::ConsumptionDid => "ConsumptionDID",
            FeatureColumn::EncCountry => "CountryTerritoryArea",
            FeatureColumn::EncRegion => "WHORegion",
            FeatureColumn::EncIncome => "IncomeGroup",
            FeatureColumn::EncPathogen => "PathogenName",
            FeatureColumn::EncAntibiotic => "AntibioticName",
        }
    }
}

/// Row-major numeric design matrix with its target vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    values: Vec<f64>,
    target: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from explicit column names and row-major values.
    ///
    /// Panics if `values.len()` is not `columns.len() * target.len()`.
    pub fn new(columns: Vec<String>, values: Vec<f64>, target: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            columns.len() * target.len(),
            "matrix shape does not match target length"
        );
        Self {
            columns,
            values,
            target,
        }
    }

    /// Matrix with the standard column layout.
    pub fn standard(values: Vec<f64>, target: Vec<f64>) -> Self {
        Self::new(
            FEATURE_COLUMNS.iter().map(|c| c.name().to_string()).collect(),
            values,
            target,
        )
    }

    /// Convenience constructor from row vectors.
    pub fn from_rows(columns: &[&str], rows: &[Vec<f64>], target: Vec<f64>) -> Self {
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(columns.iter().map(|s| s.to_string()).collect(), values, target)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_cols();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols().max(1)).take(self.n_rows())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            columns: self.columns.clone(),
            values,
            target: idx.iter().map(|&i| self.target[i]).collect(),
        }
    }
}

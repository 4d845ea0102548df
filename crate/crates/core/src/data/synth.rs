//! AR(1) generator for GLASS-like datasets.
//!
//! Each (country, pathogen, antibiotic) series evolves as
//! `r(y+1) = clip(r(y) + e + beta * (c(y+1) - CONSUMPTION_CENTER), 0, 100)`
//! with `e ~ Normal(0, ar_noise_sd)` and `c` the consumption recorded on the
//! new year's row. Countries are assigned to regions and income groups
//! round-robin so regional breakdowns are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, IncomeGroup, Observation, Provenance, WhoRegion};

/// Consumption level (DID) that has no effect on resistance drift.
pub const CONSUMPTION_CENTER: f64 = 20.0;

pub const PATHOGENS: [&str; 8] = [
    "Escherichia coli",
    "Klebsiella pneumoniae",
    "Acinetobacter spp.",
    "Staphylococcus aureus",
    "Streptococcus pneumoniae",
    "Salmonella spp.",
    "Shigella spp.",
    "Neisseria gonorrhoeae",
];

pub const ANTIBIOTICS: [&str; 12] = [
    "Ampicillin",
    "Ceftriaxone",
    "Cefotaxime",
    "Cefepime",
    "Ciprofloxacin",
    "Levofloxacin",
    "Imipenem",
    "Meropenem",
    "Gentamicin",
    "Amikacin",
    "Co-trimoxazole",
    "Colistin",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_countries: usize,
    pub pairs_per_country: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub ar_noise_sd: f64,
    pub consumption_effect: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_countries: 44,
            pairs_per_country: 10,
            first_year: 2021,
            last_year: 2023,
            ar_noise_sd: 5.0,
            consumption_effect: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn n_years(&self) -> usize {
        if self.last_year < self.first_year {
            0
        } else {
            (self.last_year - self.first_year + 1) as usize
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.n_countries == 0 {
            return Err(DataError::EmptyConfig("n_countries"));
        }
        if self.pairs_per_country == 0 {
            return Err(DataError::EmptyConfig("pairs_per_country"));
        }
        if self.n_years() == 0 {
            return Err(DataError::EmptyConfig("years"));
        }
        let catalog = PATHOGENS.len() * ANTIBIOTICS.len();
        if self.pairs_per_country > catalog {
            return Err(DataError::InvalidConfig(format!(
                "pairs_per_country {} exceeds the {catalog}-pair catalog",
                self.pairs_per_country
            )));
        }
        if !(self.ar_noise_sd >= 0.0 && self.ar_noise_sd.is_finite()) {
            return Err(DataError::InvalidConfig(format!(
                "ar_noise_sd must be finite and >= 0, got {}",
                self.ar_noise_sd
            )));
        }
        if !self.consumption_effect.is_finite() {
            return Err(DataError::InvalidConfig("consumption_effect must be finite".into()));
        }
        Ok(())
    }
}

fn region_shift(region: WhoRegion) -> f64 {
    match region {
        WhoRegion::European => -8.0,
        WhoRegion::Americas => -2.0,
        WhoRegion::WesternPacific => 2.0,
        WhoRegion::African => 6.0,
        WhoRegion::EasternMediterranean => 8.0,
        WhoRegion::SouthEastAsia => 10.0,
    }
}

fn income_shift(group: IncomeGroup) -> f64 {
    match group {
        IncomeGroup::High => -6.0,
        IncomeGroup::UpperMiddle => -2.0,
        IncomeGroup::LowerMiddle => 3.0,
        IncomeGroup::Low => 5.0,
        IncomeGroup::Unknown => 0.0,
    }
}

/// Generates a dataset deterministically from `(config, seed)`. Rows are
/// ordered by country, then pair, then year.
pub fn synthesize_dataset(config: &SynthConfig, seed: u64) -> Result<Dataset, DataError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Pair catalog ordered pathogen-fastest so neighbouring pairs differ in
    // pathogen.
    let catalog: Vec<(usize, usize)> = (0..ANTIBIOTICS.len())
        .flat_map(|a| (0..PATHOGENS.len()).map(move |p| (p, a)))
        .collect();
    let pair_base: Vec<f64> = catalog.iter().map(|_| rng.random_range(5.0..75.0)).collect();
    let country_spread = Normal::new(0.0, 8.0).expect("valid sd");

    let years = config.n_years();
    let mut rows =
        Vec::with_capacity(config.n_countries * config.pairs_per_country * years);
    for c in 0..config.n_countries {
        let country = format!("Country-{:03}", c + 1);
        let region = WhoRegion::ALL[c % WhoRegion::ALL.len()];
        let income = IncomeGroup::ALL[c % IncomeGroup::ALL.len()];
        let country_shift: f64 = country_spread.sample(&mut rng);
        let consumption_base: Vec<f64> = ANTIBIOTICS
            .iter()
            .map(|_| rng.random_range(0.0..40.0))
            .collect();
        let offset = (c * 3) % catalog.len();

        for j in 0..config.pairs_per_country {
            let pair = (offset + j) % catalog.len();
            let (p, a) = catalog[pair];
            let start_noise: f64 = rng.sample(StandardNormal);
            let mut resistance = (pair_base[pair]
                + country_shift
                + region_shift(region)
                + income_shift(income)
                + 5.0 * start_noise)
                .clamp(0.0, 100.0);

            for k in 0..years {
                let jitter: f64 = rng.random_range(-0.15..0.15);
                let consumption = consumption_base[a] * (1.0 + jitter);
                if k > 0 {
                    let z: f64 = rng.sample(StandardNormal);
                    resistance = (resistance
                        + config.ar_noise_sd * z
                        + config.consumption_effect * (consumption - CONSUMPTION_CENTER))
                        .clamp(0.0, 100.0);
                }
                rows.push(Observation {
                    country: country.clone(),
                    who_region: region,
                    income_group: income,
                    pathogen: PATHOGENS[p].to_string(),
                    antibiotic: ANTIBIOTICS[a].to_string(),
                    year: config.first_year + k as i32,
                    resistance_pct: Some(resistance),
                    consumption_did: Some(consumption),
                });
            }
        }
    }
    Dataset::new(rows, Provenance::Synthetic, Some(seed))
}

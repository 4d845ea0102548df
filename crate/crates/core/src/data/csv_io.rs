use std::collections::HashSet;

use super::{duplicate, DataError, Dataset, IncomeGroup, Observation, Provenance, WhoRegion};

pub const CSV_HEADER: &str = "CountryTerritoryArea,WHORegion,IncomeGroup,PathogenName,AntibioticName,Year,ResistancePct,ConsumptionDID";

const COLUMNS: usize = 8;

/// Parses a GLASS-style CSV export. The header must match [`CSV_HEADER`]
/// exactly. Empty cells in the two numeric columns become `None`.
pub fn parse_dataset(csv_text: &str) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_text.as_bytes());

    let mut records = reader.records();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    match records.next() {
        Some(Ok(header)) if header.iter().eq(expected.iter().copied()) => {}
        Some(Ok(header)) => {
            let line = header.position().map_or(1, |p| p.line());
            return Err(DataError::BadHeader {
                line,
                expected: CSV_HEADER,
            });
        }
        Some(Err(e)) => {
            return Err(DataError::MalformedRow {
                line: 1,
                reason: e.to_string(),
            })
        }
        None => return Err(DataError::EmptyDataset),
    }

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record.map_err(|e| DataError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = parse_row(&record, line)?;
        if !seen.insert((
            row.country.clone(),
            row.pathogen.clone(),
            row.antibiotic.clone(),
            row.year,
        )) {
            return Err(duplicate(line, &row));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    Ok(Dataset {
        rows,
        provenance: Provenance::Ingested,
        generator_seed: None,
    })
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<Observation, DataError> {
    let malformed = |reason: String| DataError::MalformedRow { line, reason };
    if record.len() != COLUMNS {
        return Err(malformed(format!(
            "expected {COLUMNS} fields, found {}",
            record.len()
        )));
    }
    let text = |idx: usize, name: &str| -> Result<String, DataError> {
        let v = record[idx].trim();
        if v.is_empty() {
            Err(malformed(format!("{name} is empty")))
        } else {
            Ok(v.to_string())
        }
    };
    let country = text(0, "CountryTerritoryArea")?;
    let region_raw = record[1].trim();
    let who_region = region_raw
        .parse::<WhoRegion>()
        .map_err(|_| DataError::UnknownRegion {
            line,
            value: region_raw.to_string(),
        })?;
    let income_group = record[2]
        .trim()
        .parse::<IncomeGroup>()
        .map_err(|_| malformed(format!("unknown income group `{}`", &record[2])))?;
    let pathogen = text(3, "PathogenName")?;
    let antibiotic = text(4, "AntibioticName")?;
    let year = record[5]
        .trim()
        .parse::<i32>()
        .map_err(|_| malformed(format!("invalid year `{}`", &record[5])))?;

    let resistance_pct = optional_real(&record[6], "ResistancePct").map_err(malformed)?;
    if let Some(value) = resistance_pct {
        if !(0.0..=100.0).contains(&value) {
            return Err(DataError::OutOfRangePercentage { line, value });
        }
    }
    let consumption_did = optional_real(&record[7], "ConsumptionDID").map_err(malformed)?;
    if matches!(consumption_did, Some(c) if c < 0.0) {
        return Err(malformed(format!(
            "negative consumption {}",
            consumption_did.unwrap()
        )));
    }

    Ok(Observation {
        country,
        who_region,
        income_group,
        pathogen,
        antibiotic,
        year,
        resistance_pct,
        consumption_did,
    })
}

fn optional_real(cell: &str, name: &str) -> Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("{name} `{cell}` is not a finite number")),
    }
}

/// Renders rows in the export format. `parse_dataset(render_dataset(d))`
/// reproduces the rows exactly; reals use the shortest round-trip form.
pub fn render_dataset(rows: &[Observation]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER.split(','))
        .expect("in-memory write");
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writer
            .write_record([
                r.country.as_str(),
                r.who_region.label(),
                r.income_group.label(),
                r.pathogen.as_str(),
                r.antibiotic.as_str(),
                &r.year.to_string(),
                &fmt_opt(r.resistance_pct),
                &fmt_opt(r.consumption_did),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_rows(rows: &[&str]) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn single_valid_row() {
        let d = parse_dataset(&with_rows(&[
            "Kenya,African Region,Lower-middle,Klebsiella pneumoniae,Meropenem,2022,12.5,3.1",
        ]))
        .unwrap();
        assert_eq!(d.len(), 1);
        let r = &d.rows[0];
        assert_eq!(r.country, "Kenya");
        assert_eq!(r.who_region, WhoRegion::African);
        assert_eq!(r.income_group, IncomeGroup::LowerMiddle);
        assert_eq!(r.pathogen, "Klebsiella pneumoniae");
        assert_eq!(r.antibiotic, "Meropenem");
        assert_eq!(r.year, 2022);
        assert_eq!(r.resistance_pct, Some(12.5));
        assert_eq!(r.consumption_did, Some(3.1));
        assert_eq!(d.provenance, Provenance::Ingested);
    }

    #[test]
    fn out_of_range_percentage_reports_line() {
        let err = parse_dataset(&with_rows(&[
            "A,European Region,High,E. coli,Ampicillin,2021,40,",
            "A,European Region,High,E. coli,Ampicillin,2022,105,",
        ]))
        .unwrap_err();
        assert_eq!(
            err,
            DataError::OutOfRangePercentage {
                line: 3,
                value: 105.0
            }
        );
    }

    #[test]
    fn missing_cells_are_not_zero() {
        let d = parse_dataset(&with_rows(&[
            "A,European Region,High,E. coli,Ampicillin,2021,,",
            "A,European Region,High,E. coli,Ampicillin,2022,0,0",
        ]))
        .unwrap();
        assert_eq!(d.rows[0].resistance_pct, None);
        assert_eq!(d.rows[0].consumption_did, None);
        assert_eq!(d.rows[1].resistance_pct, Some(0.0));
        assert_eq!(d.rows[1].consumption_did, Some(0.0));
    }

    #[test]
    fn error_kinds() {
        let err = parse_dataset(&with_rows(&["A,Europe,High,E. coli,Ampicillin,2021,1,1"]))
            .unwrap_err();
        assert!(matches!(err, DataError::UnknownRegion { line: 2, .. }));

        let err = parse_dataset(&with_rows(&[
            "A,European Region,High,E. coli,Ampicillin,2021,1,1",
            "B,European Region,High,E. coli,Ampicillin,2021,1,1",
            "A,European Region,High,E. coli,Ampicillin,2021,2,1",
        ]))
        .unwrap_err();
        assert!(matches!(err, DataError::DuplicateKey { line: 4, .. }));

        let err = parse_dataset(&with_rows(&["A,European Region,High,E. coli,2021,1,1"]))
            .unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { line: 2, .. }));

        let err = parse_dataset(&with_rows(&[
            "A,European Region,High,E. coli,Ampicillin,twenty,1,1",
        ]))
        .unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { line: 2, .. }));

        let err = parse_dataset(&with_rows(&[
            "A,European Region,Rich,E. coli,Ampicillin,2021,1,1",
        ]))
        .unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { line: 2, .. }));

        let err = parse_dataset(&with_rows(&[
            "A,European Region,High,E. coli,Ampicillin,2021,1,-2",
        ]))
        .unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { line: 2, .. }));

        let err = parse_dataset(&with_rows(&[
            "A,European Region,High,E. coli,Ampicillin,2021,NaN,1",
        ]))
        .unwrap_err();
        assert!(matches!(err, DataError::MalformedRow { line: 2, .. }));
    }

    #[test]
    fn header_and_emptiness() {
        assert!(matches!(
            parse_dataset("Country,Region\nA,B\n"),
            Err(DataError::BadHeader { line: 1, .. })
        ));
        assert_eq!(parse_dataset(""), Err(DataError::EmptyDataset));
        assert_eq!(
            parse_dataset(&with_rows(&[])),
            Err(DataError::EmptyDataset)
        );
    }

    #[test]
    fn quoted_names_survive_round_trip() {
        let text = with_rows(&[
            "\"Korea, Republic of\",Western Pacific Region,High,Salmonella spp.,Ciprofloxacin,2023,7.25,11",
        ]);
        let d = parse_dataset(&text).unwrap();
        assert_eq!(d.rows[0].country, "Korea, Republic of");
        let again = parse_dataset(&render_dataset(&d.rows)).unwrap();
        assert_eq!(again.rows, d.rows);
    }
}

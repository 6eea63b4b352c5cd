//! CSV ingestion: `group, response, covariate…` with a header row.

use std::path::Path;

use nalgebra::DMatrix;

use crate::model::{build_design, GroupedDesign};

use super::CliError;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub covariate_names: Vec<String>,
    pub groups: Vec<String>,
    pub response: Vec<f64>,
    /// `N × p`, rows in file order.
    pub covariates: DMatrix<f64>,
}

impl Dataset {
    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    /// Mean of the response; the design works with the centered response.
    pub fn response_mean(&self) -> f64 {
        self.response.iter().sum::<f64>() / self.n_obs() as f64
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }
}

pub fn read_csv(path: &Path) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_csv(file)
}

pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header: {e}")))?
        .clone();
    if header.len() < 3 {
        return Err(CliError::Data(format!(
            "header has {} columns; expected group, response and at least one covariate",
            header.len()
        )));
    }
    let covariate_names: Vec<String> = header.iter().skip(2).map(String::from).collect();
    let p = covariate_names.len();

    let mut groups = Vec::new();
    let mut response = Vec::new();
    let mut values = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        // header is line 1
        let line = k + 2;
        let record = record.map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        if record.len() != p + 2 {
            return Err(CliError::Data(format!(
                "line {line}: expected {} fields, found {}",
                p + 2,
                record.len()
            )));
        }
        let parse = |col: usize| -> Result<f64, CliError> {
            let raw = &record[col];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Data(format!("line {line}, column {}: cannot parse {raw:?} as a number", col + 1)))
        };
        let group = record[0].to_string();
        if group.is_empty() {
            return Err(CliError::Data(format!("line {line}, column 1: empty group identifier")));
        }
        groups.push(group);
        response.push(parse(1)?);
        for c in 0..p {
            values.push(parse(c + 2)?);
        }
    }
    if response.is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    let n = response.len();
    Ok(Dataset {
        covariate_names,
        groups,
        response,
        covariates: DMatrix::from_row_slice(n, p, &values),
    })
}

/// Standardized design with the centered response. `random_effects` lists
/// `intercept` and/or covariate names forming the columns of `Z_u`.
pub fn design_from_dataset(data: &Dataset, random_effects: &[String]) -> Result<GroupedDesign, CliError> {
    let n = data.n_obs();
    if random_effects.is_empty() {
        return Err(CliError::Usage("random_effects must name at least one column".into()));
    }
    let mut z = DMatrix::zeros(n, random_effects.len());
    for (l, name) in random_effects.iter().enumerate() {
        if name.eq_ignore_ascii_case("intercept") {
            z.column_mut(l).fill(1.0);
        } else {
            let j = data
                .column_index(name)
                .ok_or_else(|| CliError::Usage(format!("random effect {name:?} is not a covariate column")))?;
            z.column_mut(l).copy_from(&data.covariates.column(j));
        }
    }
    let mean = data.response_mean();
    let y: Vec<f64> = data.response.iter().map(|v| v - mean).collect();
    Ok(build_design(&y, &data.covariates, &z, &data.groups)?)
}

/// Parses group lists such as `0-99`, `3,5,9` or covariate names,
/// against `p` covariates. Indices are 0-based and ranges inclusive.
pub fn parse_group(spec: &str, data: &Dataset) -> Result<Vec<usize>, CliError> {
    let p = data.covariate_names.len();
    let mut out = Vec::new();
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some(j) = data.column_index(token) {
            out.push(j);
            continue;
        }
        let range = match token.split_once('-') {
            Some((a, b)) => a.trim().parse::<usize>().ok().zip(b.trim().parse::<usize>().ok()),
            None => token.parse::<usize>().ok().map(|a| (a, a)),
        };
        let (lo, hi) = range.ok_or_else(|| CliError::Usage(format!("cannot parse group element {token:?}")))?;
        if lo > hi || hi >= p {
            return Err(CliError::Usage(format!("group element {token:?} out of range 0..{p}")));
        }
        out.extend(lo..=hi);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::Usage(format!("group {spec:?} is empty")));
    }
    Ok(out)
}

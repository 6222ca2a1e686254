//! CSV ingestion.
//!
//! A column is continuous when every field parses as a finite number and
//! categorical otherwise, unless it is named in the categorical override.

use std::path::Path;

use cparity::DataColumn;

use crate::failure::{io_error, Failure, Outcome};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub headers: Vec<String>,
    /// Raw fields, row-major.
    pub rows: Vec<Vec<String>>,
    categorical: Vec<String>,
}

impl Dataset {
    pub fn read(path: &Path, categorical: &[String]) -> Outcome<Self> {
        let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() {
            return Err(Failure::parse(format!("{}: missing header", path.display())));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record?.iter().map(str::to_string).collect());
        }
        if rows.len() < 2 {
            return Err(Failure::parse(format!(
                "{}: need at least 2 data rows, found {}",
                path.display(),
                rows.len()
            )));
        }
        for c in categorical {
            if !headers.contains(c) {
                return Err(Failure::usage(format!("no column named {c}")));
            }
        }
        Ok(Dataset {
            headers,
            rows,
            categorical: categorical.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    fn index(&self, name: &str) -> Outcome<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::usage(format!("no column named {name}")))
    }

    pub fn raw(&self, name: &str) -> Outcome<Vec<&str>> {
        let j = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    /// Numeric values of a column, if every field is a finite number.
    pub fn numeric(&self, name: &str) -> Outcome<Option<Vec<f64>>> {
        Ok(parse_numbers(&self.raw(name)?))
    }

    pub fn column(&self, name: &str) -> Outcome<DataColumn> {
        let raw = self.raw(name)?;
        if !self.categorical.iter().any(|c| c == name) {
            if let Some(values) = parse_numbers(&raw) {
                return Ok(DataColumn::continuous(values)?);
            }
        }
        Ok(DataColumn::categorical(&raw)?)
    }

    pub fn categorical_column(&self, name: &str) -> Outcome<DataColumn> {
        Ok(DataColumn::categorical(&self.raw(name)?)?)
    }

    /// 0/1 codes for a column with at most two levels. Levels are ordered
    /// numerically when all are numbers and lexicographically otherwise.
    pub fn binary(&self, name: &str) -> Outcome<(Vec<usize>, Vec<String>)> {
        let raw = self.raw(name)?;
        let mut levels: Vec<String> = raw.iter().map(|s| s.to_string()).collect();
        levels.sort();
        levels.dedup();
        let numeric: Option<Vec<f64>> = levels.iter().map(|l| l.trim().parse::<f64>().ok()).collect();
        if let Some(v) = numeric {
            let mut order: Vec<usize> = (0..levels.len()).collect();
            order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
            levels = order.into_iter().map(|i| levels[i].clone()).collect();
        }
        if levels.len() > 2 {
            return Err(Failure::domain(format!(
                "column {name} must be binary, found {} levels",
                levels.len()
            )));
        }
        let codes = raw.iter().map(|s| levels.iter().position(|l| l == s).unwrap()).collect();
        Ok((codes, levels))
    }

    /// Numeric matrix of every column.
    pub fn matrix(&self) -> Outcome<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .map(|f| match f.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(v),
                        _ => Err(Failure::parse(format!("row {}: {f:?} is not a finite number", i + 2))),
                    })
                    .collect()
            })
            .collect()
    }
}

fn parse_numbers(raw: &[&str]) -> Option<Vec<f64>> {
    raw.iter()
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

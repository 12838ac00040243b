//! Individual-level Mendelian randomization data.
//!
//! A dataset holds, for each of `n` individuals, the allele doses of `j`
//! instruments, the exposure `x`, the outcome `y` and optionally a binary
//! covariate `w`. The instruments are assumed independent of the unobserved
//! exposure–outcome confounders; they need not satisfy the exclusion
//! restriction.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MRDataset {
    n: usize,
    j: usize,
    /// Row-major `n × j` allele doses.
    genotypes: Vec<f64>,
    exposure: Vec<f64>,
    outcome: Vec<f64>,
    covariate: Option<Vec<f64>>,
}

impl MRDataset {
    /// Build a dataset from row-major genotypes, validating every invariant.
    pub fn new(
        j: usize,
        genotypes: Vec<f64>,
        exposure: Vec<f64>,
        outcome: Vec<f64>,
        covariate: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = exposure.len();
        if j == 0 {
            return Err(Error::InvalidData("at least one instrument is required".into()));
        }
        if n < 2 {
            return Err(Error::InvalidData(format!("at least two individuals are required, got {n}")));
        }
        if outcome.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: outcome.len() });
        }
        if genotypes.len() != n * j {
            return Err(Error::DimensionMismatch { expected: n * j, actual: genotypes.len() });
        }
        for (idx, &g) in genotypes.iter().enumerate() {
            if !(g == 0.0 || g == 1.0 || g == 2.0) {
                return Err(Error::InvalidGenotype {
                    row: idx / j + 1,
                    column: format!("z{}", idx % j + 1),
                    value: g,
                });
            }
        }
        if let Some((i, _)) = exposure.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite exposure at row {}", i + 1)));
        }
        if let Some((i, _)) = outcome.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite outcome at row {}", i + 1)));
        }
        if let Some(w) = &covariate {
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: w.len() });
            }
            if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v == 0.0 || **v == 1.0)) {
                return Err(Error::InvalidData(format!(
                    "covariate value {v} at row {} is not 0 or 1",
                    i + 1
                )));
            }
        }
        Ok(Self { n, j, genotypes, exposure, outcome, covariate })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Allele doses of individual `i`.
    pub fn genotype_row(&self, i: usize) -> &[f64] {
        &self.genotypes[i * self.j..(i + 1) * self.j]
    }

    pub fn genotypes(&self) -> &[f64] {
        &self.genotypes
    }

    /// Doses of instrument `k` across individuals.
    pub fn instrument(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.genotypes[i * self.j + k]).collect()
    }

    pub fn exposure(&self) -> &[f64] {
        &self.exposure
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn covariate(&self) -> Option<&[f64]> {
        self.covariate.as_deref()
    }

    /// The same data with the covariate column dropped.
    pub fn without_covariate(&self) -> Self {
        Self { covariate: None, ..self.clone() }
    }

    /// Reorder individuals; `order[k]` is the source row of new row `k`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut genotypes = Vec::with_capacity(self.genotypes.len());
        for &i in order {
            genotypes.extend_from_slice(self.genotype_row(i));
        }
        Self {
            n: self.n,
            j: self.j,
            genotypes,
            exposure: order.iter().map(|&i| self.exposure[i]).collect(),
            outcome: order.iter().map(|&i| self.outcome[i]).collect(),
            covariate: self.covariate.as_ref().map(|w| order.iter().map(|&i| w[i]).collect()),
        }
    }

    /// Read the CSV layout `x,y[,w],z1,…,zJ` with a header row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 3 || names[0] != "x" || names[1] != "y" {
            return Err(Error::InvalidData(
                "header must start with columns `x`, `y` (optionally `w`) followed by `z1..zJ`".into(),
            ));
        }
        let has_w = names[2] == "w";
        let z_start = if has_w { 3 } else { 2 };
        let j = names.len() - z_start;
        if j == 0 {
            return Err(Error::InvalidData("no instrument columns".into()));
        }
        for (k, name) in names[z_start..].iter().enumerate() {
            if *name != format!("z{}", k + 1) {
                return Err(Error::InvalidData(format!(
                    "expected column `z{}`, found `{name}`",
                    k + 1
                )));
            }
        }

        let mut exposure = Vec::new();
        let mut outcome = Vec::new();
        let mut covariate = Vec::new();
        let mut genotypes = Vec::new();
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            let row = row_idx + 1;
            if record.len() != names.len() {
                return Err(Error::InvalidData(format!(
                    "row {row} has {} fields, expected {}",
                    record.len(),
                    names.len()
                )));
            }
            let parse = |col: usize| -> Result<f64> {
                let field = &record[col];
                let v: f64 = field.parse().map_err(|_| {
                    Error::InvalidData(format!("row {row}, column `{}`: cannot parse `{field}`", names[col]))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!("row {row}, column `{}`: non-finite value", names[col])));
                }
                Ok(v)
            };
            exposure.push(parse(0)?);
            outcome.push(parse(1)?);
            if has_w {
                covariate.push(parse(2)?);
            }
            for col in z_start..names.len() {
                let g = parse(col)?;
                if !(g == 0.0 || g == 1.0 || g == 2.0) {
                    return Err(Error::InvalidGenotype { row, column: names[col].to_string(), value: g });
                }
                genotypes.push(g);
            }
        }
        Self::new(j, genotypes, exposure, outcome, has_w.then_some(covariate))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["x".to_string(), "y".to_string()];
        if self.covariate.is_some() {
            header.push("w".into());
        }
        header.extend((1..=self.j).map(|k| format!("z{k}")));
        wtr.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![self.exposure[i].to_string(), self.outcome[i].to_string()];
            if let Some(w) = &self.covariate {
                rec.push(w[i].to_string());
            }
            rec.extend(self.genotype_row(i).iter().map(|g| g.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> MRDataset {
        MRDataset::new(2, vec![0.0, 1.0, 2.0, 0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0], vec![0.5, 0.1, -0.2], None)
            .unwrap()
    }

    #[test]
    fn rejects_bad_genotype_with_location() {
        let err = MRDataset::new(2, vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 2.0], vec![0.0, 0.0], None).unwrap_err();
        match err {
            Error::InvalidGenotype { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "z2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_short_and_empty() {
        assert!(MRDataset::new(1, vec![0.0], vec![1.0], vec![1.0], None).is_err());
        assert!(MRDataset::new(0, vec![], vec![1.0, 2.0], vec![1.0, 2.0], None).is_err());
        assert!(MRDataset::new(1, vec![0.0, 1.0], vec![1.0, f64::NAN], vec![1.0, 2.0], None).is_err());
        assert!(MRDataset::new(1, vec![0.0, 1.0], vec![1.0, 2.0], vec![1.0, 2.0], Some(vec![0.0, 0.5])).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = tiny();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = MRDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn csv_reports_row_and_column_of_bad_dose() {
        let text = "x,y,z1,z2\n1,2,0,1\n1,2,0,5\n";
        let err = MRDataset::read_csv(text.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("z2"), "{msg}");
    }

    #[test]
    fn csv_with_covariate() {
        let text = "x,y,w,z1\n1,2,0,0\n1.5,2,1,2\n";
        let d = MRDataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.covariate(), Some(&[0.0, 1.0][..]));
        assert_eq!(d.without_covariate().covariate(), None);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(MRDataset::read_csv("y,x,z1\n1,2,0\n".as_bytes()).is_err());
        assert!(MRDataset::read_csv("x,y,z2\n1,2,0\n".as_bytes()).is_err());
    }
}

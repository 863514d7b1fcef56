//! Bivariate right-censored survival data, stored column-wise per margin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One margin of a bivariate dataset. Covariates are stored row-major with
/// `q` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginData {
    pub y: Vec<f64>,
    pub delta: Vec<bool>,
    pub x: Vec<f64>,
    pub q: usize,
    pub names: Vec<String>,
}

impl MarginData {
    pub fn new(y: Vec<f64>, delta: Vec<bool>, rows: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let q = names.len();
        let mut x = Vec::with_capacity(rows.len() * q);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} covariates, expected {q}",
                    row.len()
                )));
            }
            x.extend_from_slice(row);
        }
        let m = MarginData { y, delta, x, q, names };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.q..(i + 1) * self.q]
    }

    pub fn events(&self) -> usize {
        self.delta.iter().filter(|&&d| d).count()
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.y.iter().zip(&self.delta).filter(|(_, &d)| d).map(|(&y, _)| y).collect()
    }

    pub fn max_time(&self) -> f64 {
        self.y.iter().copied().fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.delta.len() != n || self.x.len() != n * self.q {
            return Err(Error::InvalidData("margin columns have inconsistent lengths".into()));
        }
        if let Some(i) = self.y.iter().position(|&y| !(y > 0.0 && y.is_finite())) {
            return Err(Error::InvalidData(format!("observation {i}: time {} must be positive", self.y[i])));
        }
        if let Some(k) = self.x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("observation {}: non-finite covariate", k / self.q.max(1))));
        }
        Ok(())
    }

    fn select(&self, idx: &[usize]) -> MarginData {
        let mut x = Vec::with_capacity(idx.len() * self.q);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        MarginData {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            delta: idx.iter().map(|&i| self.delta[i]).collect(),
            x,
            q: self.q,
            names: self.names.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariateData {
    pub ids: Vec<String>,
    pub margins: [MarginData; 2],
}

impl BivariateData {
    pub fn new(ids: Vec<String>, first: MarginData, second: MarginData) -> Result<Self> {
        first.validate()?;
        second.validate()?;
        if first.len() != second.len() || ids.len() != first.len() {
            return Err(Error::InvalidData(format!(
                "cluster counts differ: {} ids, {} and {} observations",
                ids.len(),
                first.len(),
                second.len()
            )));
        }
        Ok(BivariateData { ids, margins: [first, second] })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn margin(&self, j: usize) -> &MarginData {
        &self.margins[j]
    }

    /// Clusters at `idx`, in that order (repeats allowed).
    pub fn resample(&self, idx: &[usize]) -> BivariateData {
        BivariateData {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            margins: [self.margins[0].select(idx), self.margins[1].select(idx)],
        }
    }

    /// Time pairs of clusters with events observed in both margins.
    pub fn complete_pairs(&self) -> (Vec<f64>, Vec<f64>) {
        let [a, b] = &self.margins;
        (0..self.n())
            .filter(|&i| a.delta[i] && b.delta[i])
            .map(|i| (a.y[i], b.y[i]))
            .unzip()
    }
}

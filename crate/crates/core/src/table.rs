use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_TOL};

/// Multi-index probability table stored flat in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableJson", into = "TableJson")]
pub struct ProbabilityTable {
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TableJson {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<TableJson> for ProbabilityTable {
    type Error = Error;

    fn try_from(json: TableJson) -> Result<Self> {
        ProbabilityTable::new(json.shape, json.values)
    }
}

impl From<ProbabilityTable> for TableJson {
    fn from(table: ProbabilityTable) -> Self {
        TableJson {
            shape: table.shape,
            values: table.values,
        }
    }
}

impl ProbabilityTable {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        Self::with_tol(shape, values, DEFAULT_TOL)
    }

    /// Validates shape, entrywise nonnegativity (`>= -tol`) and normalization.
    pub fn with_tol(shape: Vec<usize>, values: Vec<f64>, tol: f64) -> Result<Self> {
        let size: usize = shape.iter().product();
        if shape.is_empty() || size != values.len() {
            return Err(Error::InvalidTable(format!(
                "shape {shape:?} does not hold {} values",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < -tol) {
            return Err(Error::InvalidTable(format!("entry {bad} is negative or not finite")));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidTable(format!("entries sum to {total}")));
        }
        Ok(Self { shape, values })
    }

    /// Flat vector with the given shape, no validation beyond size.
    pub(crate) fn from_raw(shape: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        Self { shape, values }
    }

    pub fn from_2x2(rows: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(vec![2, 2], rows.iter().flatten().copied().collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.flat_index(index)]
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                assert!(i < n, "index {i} out of range {n}");
                acc * n + i
            })
    }

    /// Multi-index of a flat position.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.shape.len()];
        for (slot, &n) in index.iter_mut().zip(&self.shape).rev() {
            *slot = flat % n;
            flat /= n;
        }
        index
    }

    /// Sums out every axis not listed in `keep`; the result's axes follow the
    /// order of `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Result<ProbabilityTable> {
        let rank = self.shape.len();
        let mut seen = vec![false; rank];
        for &axis in keep {
            if axis >= rank || seen[axis] {
                return Err(Error::InvalidTable(format!(
                    "bad marginal axes {keep:?} for rank {rank}"
                )));
            }
            seen[axis] = true;
        }
        let shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        let mut out = ProbabilityTable::from_raw(shape.clone(), vec![0.0; shape.iter().product()]);
        for (flat, &v) in self.values.iter().enumerate() {
            let index = self.unflatten(flat);
            let sub: Vec<usize> = keep.iter().map(|&a| index[a]).collect();
            let k = out.flat_index(&sub);
            out.values[k] += v;
        }
        Ok(out)
    }

    /// Largest entrywise difference to a table of identical shape.
    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::InvalidTable(format!(
                "shape {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `p++ − p+− − p−+ + p−−` for a 2×2 table of dichotomic outcomes,
    /// index 0 standing for `+1`.
    pub fn correlator(&self) -> Result<f64> {
        if self.shape != [2, 2] {
            return Err(Error::InvalidTable(format!(
                "correlator needs a 2x2 table, got {:?}",
                self.shape
            )));
        }
        let v = &self.values;
        Ok(v[0] - v[1] - v[2] + v[3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ProbabilityTable::new(vec![2], vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityTable::new(vec![2], vec![0.6, 0.6]).is_err());
        assert!(ProbabilityTable::new(vec![2], vec![1.1, -0.1]).is_err());
        assert!(ProbabilityTable::new(vec![2, 2], vec![1.0]).is_err());
        assert!(ProbabilityTable::new(vec![], vec![]).is_err());
        assert!(ProbabilityTable::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn marginals_follow_keep_order() {
        let values: Vec<f64> = (0..8).map(|k| k as f64 / 28.0).collect();
        let t = ProbabilityTable::new(vec![2, 2, 2], values).unwrap();
        let m = t.marginal(&[2, 0]).unwrap();
        assert_eq!(m.shape(), &[2, 2]);
        // (axis2 = 1, axis0 = 0) collects flat indices 1 and 3
        assert!((m.get(&[1, 0]) - 4.0 / 28.0).abs() < 1e-15);
        assert!((m.get(&[0, 1]) - 10.0 / 28.0).abs() < 1e-15);
        assert!(t.marginal(&[0, 0]).is_err());
        assert!(t.marginal(&[3]).is_err());
    }

    #[test]
    fn correlator_of_perfect_anticorrelation() {
        let t = ProbabilityTable::from_2x2([[0.0, 0.5], [0.5, 0.0]]).unwrap();
        assert_eq!(t.correlator().unwrap(), -1.0);
        let u = ProbabilityTable::new(vec![4], vec![0.25; 4]).unwrap();
        assert!(u.correlator().is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: std::result::Result<ProbabilityTable, _> =
            serde_json::from_str(r#"{"shape":[2],"values":[0.25,0.75]}"#);
        assert!(ok.is_ok());
        let bad: std::result::Result<ProbabilityTable, _> =
            serde_json::from_str(r#"{"shape":[2],"values":[0.25,0.25]}"#);
        assert!(bad.is_err());
    }
}

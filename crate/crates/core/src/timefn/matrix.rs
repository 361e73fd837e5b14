use nalgebra::DMatrix;

use super::{EvalError, ParseError, TimeExpr};

/// A matrix whose entries are functions of time.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFunction {
    rows: usize,
    cols: usize,
    // row-major
    entries: Vec<TimeExpr>,
}

impl MatrixFunction {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![TimeExpr::constant(0.0); rows * cols] }
    }

    pub fn constant(m: &DMatrix<f64>) -> Self {
        let entries = m.row_iter().flat_map(|r| r.iter().map(|&v| TimeExpr::constant(v)).collect::<Vec<_>>()).collect();
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<TimeExpr>) -> Option<Self> {
        (entries.len() == rows * cols).then_some(Self { rows, cols, entries })
    }

    /// Parses a rectangular table of expressions. Returns the failing
    /// `(row, col)` together with the error.
    pub fn parse<S: AsRef<str>>(table: &[Vec<S>]) -> Result<Self, ((usize, usize), ParseError)> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows * cols);
        for (i, row) in table.iter().enumerate() {
            if row.len() != cols {
                return Err(((i, row.len()), ParseError::syntax(0, format!("row {i} has {} entries, expected {cols}", row.len()))));
            }
            for (j, text) in row.iter().enumerate() {
                entries.push(TimeExpr::parse(text.as_ref()).map_err(|e| ((i, j), e))?);
            }
        }
        Ok(Self { rows, cols, entries })
    }

    /// Parses a column vector.
    pub fn parse_column<S: AsRef<str>>(items: &[S]) -> Result<Self, ((usize, usize), ParseError)> {
        let mut entries = Vec::with_capacity(items.len());
        for (i, text) in items.iter().enumerate() {
            entries.push(TimeExpr::parse(text.as_ref()).map_err(|e| ((i, 0), e))?);
        }
        Ok(Self { rows: items.len(), cols: 1, entries })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entry(&self, i: usize, j: usize) -> &TimeExpr {
        &self.entries[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TimeExpr::is_zero)
    }

    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>, EvalError> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Evaluates into a preallocated matrix of the right shape.
    pub fn eval_into(&self, t: f64, out: &mut DMatrix<f64>) -> Result<(), EvalError> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let e = &self.entries[i * self.cols + j];
                out[(i, j)] = if e.is_zero() { 0.0 } else { e.eval(t)? };
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|e| e.scaled(factor)).collect() }
    }

    /// Entrywise sum; `None` on a shape mismatch.
    pub fn plus(&self, other: &MatrixFunction) -> Option<Self> {
        if self.shape() != other.shape() {
            return None;
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.plus(b)).collect();
        Some(Self { rows: self.rows, cols: self.cols, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_table() {
        let m = MatrixFunction::parse(&[vec!["1", "t"], vec!["exp(0*t)", "-2*t"]]).unwrap();
        let v = m.eval(3.0).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 1.0, -6.0]));
    }

    #[test]
    fn reports_position_of_bad_entry() {
        let err = MatrixFunction::parse(&[vec!["1", "2"], vec!["3", "ln("]]).unwrap_err();
        assert_eq!(err.0, (1, 1));
        assert_eq!(err.1.offset, 3);
        assert!(MatrixFunction::parse(&[vec!["1", "2"], vec!["3"]]).is_err());
    }

    #[test]
    fn zero_detection_and_arithmetic() {
        assert!(MatrixFunction::zeros(2, 1).is_zero());
        let f = MatrixFunction::parse_column(&["t", "1"]).unwrap();
        let g = f.scaled(2.0).plus(&f).unwrap();
        assert_eq!(g.eval(2.0).unwrap(), DMatrix::from_column_slice(2, 1, &[6.0, 3.0]));
    }
}

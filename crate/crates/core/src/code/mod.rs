//! Sparse LDLC parity-check matrices.
//!
//! Every matrix is a superposition of `d` permutation-structured *layers*:
//! layer 0 holds the single magnitude-1 entry of each row and column, the
//! other layers hold the `1/sqrt(d)` entries. Signs are random.
//!
//! Two layouts are supported, see [`Structure`].

mod construct;
mod format;
mod validate;

pub use construct::generate_parity_check;
pub use format::{parse_h, serialize_h};
pub use validate::{validate_parity_check, ValidationReport};

pub(crate) fn dense_lu(h: &SparseParityCheck) -> nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
    validate::dense(h).lu()
}

use crate::error::{Error, Result};

/// Layout of a generated parity-check matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    /// Every row and column carries exactly `d` entries. Decodable, but a
    /// hypercube-shaped codebook does not exist for such a matrix.
    Regular,
    /// Lower triangular under a hidden row/column ordering, with the
    /// magnitude-1 entries on the diagonal. Rows and columns have `d` entries
    /// except near the two ends of the ordering. Required for hypercube
    /// shaping.
    Triangular,
}

impl std::str::FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Structure::Regular),
            "triangular" => Ok(Structure::Triangular),
            other => Err(Error::Config(format!("unknown matrix structure '{other}'"))),
        }
    }
}

/// The `d` entry magnitudes shared by every row and column: `{1, 1/sqrt(d), ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSequence {
    values: Vec<f64>,
}

impl GeneratingSequence {
    pub fn degree(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Magnitude of the entries in layer `layer`.
    pub fn magnitude(&self, layer: usize) -> f64 {
        self.values[layer]
    }
}

/// Smallest supported degree.
pub const MIN_DEGREE: usize = 3;

pub fn build_generating_sequence(d: usize) -> Result<GeneratingSequence> {
    if d < MIN_DEGREE {
        return Err(Error::DegreeTooSmall { d, min: MIN_DEGREE });
    }
    let light = 1.0 / (d as f64).sqrt();
    let values = std::iter::once(1.0)
        .chain(std::iter::repeat_n(light, d - 1))
        .collect();
    Ok(GeneratingSequence { values })
}

/// Magnitude class of an edge label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelClass {
    Unit,
    Light,
}

impl LabelClass {
    pub fn of(value: f64) -> Self {
        if (value.abs() - 1.0).abs() < 1e-9 {
            LabelClass::Unit
        } else {
            LabelClass::Light
        }
    }
}

/// A sparse `n x n` parity-check matrix with row and column views.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseParityCheck {
    n: usize,
    d: usize,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseParityCheck {
    /// Builds the matrix from per-row `(column, value)` lists.
    ///
    /// Rows are sorted by column; the column view is derived.
    pub fn from_rows(n: usize, d: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: rows.len(),
            });
        }
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                if c >= n {
                    return Err(Error::Config(format!("column {c} out of range in row {r}")));
                }
                cols[c].push((r, v));
            }
        }
        Ok(SparseParityCheck { n, d, rows, cols })
    }

    /// Builds a matrix whose column view may disagree with its rows.
    /// Only useful for exercising the validator.
    #[doc(hidden)]
    pub fn from_parts_unchecked(
        n: usize,
        d: usize,
        rows: Vec<Vec<(usize, f64)>>,
        cols: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        SparseParityCheck { n, d, rows, cols }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[(usize, f64)] {
        &self.cols[c]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<(usize, f64)>] {
        &self.cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `H · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length must equal n");
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Position of the magnitude-1 entry in each row, if there is exactly one.
    pub fn unit_column(&self, r: usize) -> Option<(usize, f64)> {
        let mut units = self.rows[r]
            .iter()
            .filter(|(_, v)| LabelClass::of(*v) == LabelClass::Unit);
        let first = units.next().copied();
        match units.next() {
            Some(_) => None,
            None => first,
        }
    }

    /// An order in which rows can be solved one coordinate at a time: each
    /// listed row's magnitude-1 column is the only column of that row not
    /// already solved by an earlier row.
    ///
    /// Exists exactly for [`Structure::Triangular`] matrices.
    #[allow(clippy::needless_range_loop)]
    pub fn elimination_order(&self) -> Option<Vec<usize>> {
        let n = self.n;
        let mut pivot_col = vec![usize::MAX; n];
        let mut row_of_col = vec![usize::MAX; n];
        for r in 0..n {
            let (c, _) = self.unit_column(r)?;
            if row_of_col[c] != usize::MAX {
                return None;
            }
            pivot_col[r] = c;
            row_of_col[c] = r;
        }
        // pending[r]: off-pivot columns of row r not solved yet
        let mut pending: Vec<usize> = (0..n).map(|r| self.rows[r].len() - 1).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&r| pending[r] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(r) = ready.pop() {
            order.push(r);
            let solved = pivot_col[r];
            for &(r2, _) in &self.cols[solved] {
                if r2 != r {
                    pending[r2] -= 1;
                    if pending[r2] == 0 {
                        ready.push(r2);
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_for_degree_seven() {
        let s = build_generating_sequence(7).unwrap();
        assert_eq!(s.degree(), 7);
        assert_eq!(s.values()[0], 1.0);
        for &v in &s.values()[1..] {
            assert!((v - 0.377_964_473_009_227_2).abs() < 1e-15);
        }
    }

    #[test]
    fn sequence_for_degree_three() {
        let s = build_generating_sequence(3).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()]);
    }

    #[test]
    fn degree_two_is_rejected() {
        assert!(matches!(
            build_generating_sequence(2),
            Err(Error::DegreeTooSmall { d: 2, .. })
        ));
    }

    #[test]
    fn elimination_order_of_triangular_matrix() {
        // x0 pivot row 1, x1 pivot row 0
        let rows = vec![vec![(1, 1.0), (0, 0.5)], vec![(0, -1.0)]];
        let h = SparseParityCheck::from_rows(2, 3, rows).unwrap();
        assert_eq!(h.elimination_order(), Some(vec![1, 0]));
    }

    #[test]
    fn no_elimination_order_for_cycle() {
        let rows = vec![vec![(0, 1.0), (1, 0.5)], vec![(1, 1.0), (0, 0.5)]];
        let h = SparseParityCheck::from_rows(2, 3, rows).unwrap();
        assert_eq!(h.elimination_order(), None);
    }
}

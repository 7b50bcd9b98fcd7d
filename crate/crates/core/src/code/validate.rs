use std::collections::HashSet;

use nalgebra::DMatrix;

use super::{LabelClass, SparseParityCheck, Structure};

/// Outcome of every structural check on a parity-check matrix.
///
/// Failures are collected in `notes`; nothing here is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Regular: every row and column has exactly `d` entries. Triangular:
    /// between 1 and `d` entries.
    pub degrees: bool,
    /// One magnitude-1 entry per row and column, all others `1/sqrt(d)`.
    pub magnitudes: bool,
    /// No two columns share two rows, and no position repeats.
    pub four_cycle_free: bool,
    /// The row and column views describe the same matrix.
    pub consistent: bool,
    /// Triangular: an elimination order exists (so `|det H| = 1`).
    /// Regular: LU factorisation succeeds.
    pub invertible: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.degrees
            && self.magnitudes
            && self.four_cycle_free
            && self.consistent
            && self.invertible
    }
}

pub fn validate_parity_check(h: &SparseParityCheck, structure: Structure) -> ValidationReport {
    let mut notes = Vec::new();
    let n = h.n();
    let d = h.d();

    let degree_ok = |k: usize| match structure {
        Structure::Regular => k == d,
        Structure::Triangular => (1..=d).contains(&k),
    };
    let mut degrees = true;
    for (what, lists) in [("row", h.rows()), ("column", h.cols())] {
        for (i, list) in lists.iter().enumerate() {
            if !degree_ok(list.len()) {
                degrees = false;
                notes.push(format!("{what} {i} has {} entries", list.len()));
            }
        }
    }

    let light = 1.0 / (d as f64).sqrt();
    let mut magnitudes = true;
    for (what, lists) in [("row", h.rows()), ("column", h.cols())] {
        for (i, list) in lists.iter().enumerate() {
            let units = list
                .iter()
                .filter(|(_, v)| LabelClass::of(*v) == LabelClass::Unit)
                .count();
            let bad_light = list
                .iter()
                .filter(|(_, v)| LabelClass::of(*v) == LabelClass::Light)
                .any(|(_, v)| (v.abs() - light).abs() > 1e-12);
            if units != 1 || bad_light {
                magnitudes = false;
                notes.push(format!(
                    "{what} {i} does not follow the generating sequence"
                ));
            }
        }
    }

    let mut four_cycle_free = true;
    let mut seen = HashSet::new();
    'rows: for (r, row) in h.rows().iter().enumerate() {
        for (i, &(a, _)) in row.iter().enumerate() {
            for &(b, _) in &row[i + 1..] {
                if a == b {
                    four_cycle_free = false;
                    notes.push(format!("row {r} repeats column {a}"));
                    continue 'rows;
                }
                if !seen.insert((a.min(b), a.max(b))) {
                    four_cycle_free = false;
                    notes.push(format!("columns {a} and {b} share more than one row"));
                }
            }
        }
    }

    let mut consistent = h.rows().len() == n && h.cols().len() == n;
    if consistent {
        let mut from_rows: Vec<(usize, usize, u64)> = h
            .rows()
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v.to_bits())))
            .collect();
        let mut from_cols: Vec<(usize, usize, u64)> = h
            .cols()
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v.to_bits())))
            .collect();
        from_rows.sort_unstable();
        from_cols.sort_unstable();
        consistent = from_rows == from_cols;
    }
    if !consistent {
        notes.push("row and column views disagree".to_string());
    }

    let invertible = match structure {
        Structure::Triangular => h.elimination_order().is_some(),
        Structure::Regular => consistent && dense(h).lu().is_invertible(),
    };
    if !invertible {
        notes.push("matrix is not invertible".to_string());
    }

    ValidationReport {
        degrees,
        magnitudes,
        four_cycle_free,
        consistent,
        invertible,
        notes,
    }
}

pub(crate) fn dense(h: &SparseParityCheck) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h.n(), h.n());
    for (r, row) in h.rows().iter().enumerate() {
        for &(c, v) in row {
            m[(r, c)] = v;
        }
    }
    m
}

//! The degree domain `B = N ∪ ▶N` and matrices over it.
//!
//! An entry `d` prescribes a degree of exactly `d`; an entry `▶d` (printed
//! `>=d`) prescribes a degree of at least `d`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// An element of `B = N ∪ ▶N`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExtendedNat {
    /// The numeric part.
    pub value: u32,
    /// True for `▶value` ("at least value"), false for exactly `value`.
    pub at_least: bool,
}

impl ExtendedNat {
    pub const ZERO: ExtendedNat = ExtendedNat { value: 0, at_least: false };
    /// `▶0`: any degree is allowed.
    pub const ANY: ExtendedNat = ExtendedNat { value: 0, at_least: true };

    pub fn exact(value: u32) -> Self {
        ExtendedNat { value, at_least: false }
    }

    pub fn at_least(value: u32) -> Self {
        ExtendedNat { value, at_least: true }
    }

    /// `⌊·⌋`: the numeric part.
    pub fn floor(self) -> u32 {
        self.value
    }

    pub fn is_exact(self) -> bool {
        !self.at_least
    }

    /// Active entries are those that can force or carry edges: everything
    /// except an exact zero.
    pub fn is_exact_zero(self) -> bool {
        !self.at_least && self.value == 0
    }

    /// True if the entry imposes no constraint at all (`▶0`).
    pub fn is_free(self) -> bool {
        self.at_least && self.value == 0
    }

    /// Characteristic value used in the "big enough" inequalities: 1 when the
    /// floor is positive, 0 otherwise.
    pub fn chi(self) -> u32 {
        u32::from(self.value > 0)
    }

    /// Does an observed degree satisfy this prescription?
    pub fn admits(self, degree: u32) -> bool {
        if self.at_least {
            degree >= self.value
        } else {
            degree == self.value
        }
    }

    /// Floor the entry to an exact value.
    pub fn to_exact(self) -> Self {
        ExtendedNat::exact(self.value)
    }

    /// Addition: `▶` is contagious.
    pub fn add(self, other: ExtendedNat) -> ExtendedNat {
        ExtendedNat { value: self.value + other.value, at_least: self.at_least || other.at_least }
    }

    /// Subtraction of an exact amount. `(▶c) − d` saturates at `▶0`; an exact
    /// entry that would go negative is unrealizable and yields `None`.
    pub fn sub(self, d: u32) -> Option<ExtendedNat> {
        if self.at_least {
            Some(ExtendedNat::at_least(self.value.saturating_sub(d)))
        } else if self.value >= d {
            Some(ExtendedNat::exact(self.value - d))
        } else {
            None
        }
    }

    /// Saturate the at-least flag onto a count: counts of `cap` or more are
    /// reported as `▶cap`.
    pub fn saturate(count: u32, cap: u32) -> ExtendedNat {
        if count >= cap {
            ExtendedNat::at_least(cap)
        } else {
            ExtendedNat::exact(count)
        }
    }

    pub fn parse(text: &str) -> Option<ExtendedNat> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix(">=") {
            rest.trim().parse().ok().map(ExtendedNat::at_least)
        } else {
            t.parse().ok().map(ExtendedNat::exact)
        }
    }
}

impl fmt::Display for ExtendedNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.at_least {
            write!(f, ">={}", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

impl fmt::Debug for ExtendedNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A degree matrix over `B`, stored row-major. Rows index edge colors,
/// columns index parts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DegreeMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<ExtendedNat>,
}

impl DegreeMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<ExtendedNat>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must match dimensions");
        DegreeMatrix { rows, cols, entries }
    }

    pub fn filled(rows: usize, cols: usize, entry: ExtendedNat) -> Self {
        DegreeMatrix { rows, cols, entries: vec![entry; rows * cols] }
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> ExtendedNat) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        DegreeMatrix { rows, cols, entries }
    }

    /// 1xN row vector.
    pub fn row_vector(entries: Vec<ExtendedNat>) -> Self {
        DegreeMatrix { rows: 1, cols: entries.len(), entries }
    }

    pub fn get(&self, row: usize, col: usize) -> ExtendedNat {
        self.entries[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: ExtendedNat) {
        self.entries[row * self.cols + col] = v;
    }

    pub fn row(&self, row: usize) -> &[ExtendedNat] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[ExtendedNat]> {
        self.entries.chunks(self.cols.max(1)).take(if self.cols == 0 { 0 } else { self.rows })
    }

    pub fn column(&self, col: usize) -> Vec<ExtendedNat> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn is_all_exact(&self) -> bool {
        self.entries.iter().all(|e| e.is_exact())
    }

    pub fn has_at_least(&self) -> bool {
        self.entries.iter().any(|e| e.at_least)
    }

    /// `M · 1̄`: the sum of all entry floors.
    pub fn floor_sum(&self) -> u64 {
        self.entries.iter().map(|e| e.floor() as u64).sum()
    }

    pub fn max_floor(&self) -> u32 {
        self.entries.iter().map(|e| e.floor()).max().unwrap_or(0)
    }

    /// Delete one row.
    pub fn without_row(&self, row: usize) -> DegreeMatrix {
        let mut entries = Vec::with_capacity((self.rows - 1) * self.cols);
        for r in 0..self.rows {
            if r != row {
                entries.extend_from_slice(self.row(r));
            }
        }
        DegreeMatrix { rows: self.rows - 1, cols: self.cols, entries }
    }

    /// Keep only the given rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> DegreeMatrix {
        let mut entries = Vec::with_capacity(keep.len() * self.cols);
        for &r in keep {
            entries.extend_from_slice(self.row(r));
        }
        DegreeMatrix { rows: keep.len(), cols: self.cols, entries }
    }

    /// Keep only the given columns, in the given order.
    pub fn select_cols(&self, keep: &[usize]) -> DegreeMatrix {
        DegreeMatrix::from_fn(self.rows, keep.len(), |r, c| self.get(r, keep[c]))
    }

    /// Floor the given rows (used for the row partitions of the `▶` case).
    pub fn floor_rows(&self, rows: &[usize]) -> DegreeMatrix {
        DegreeMatrix::from_fn(self.rows, self.cols, |r, c| {
            let e = self.get(r, c);
            if rows.contains(&r) {
                e.to_exact()
            } else {
                e
            }
        })
    }

    /// Append extra columns on the right.
    pub fn hcat(&self, other: &DegreeMatrix) -> DegreeMatrix {
        assert_eq!(self.rows, other.rows);
        DegreeMatrix::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.get(r, c)
            } else {
                other.get(r, c - self.cols)
            }
        })
    }

    /// Parse `a,b;c,d` with `>=k` entries allowed. Rows separated by `;`.
    pub fn parse(text: &str) -> Option<DegreeMatrix> {
        let rows: Vec<&str> = text.trim().split(';').collect();
        let mut parsed: Vec<Vec<ExtendedNat>> = Vec::new();
        for row in rows {
            let entries: Option<Vec<ExtendedNat>> =
                row.split(',').map(ExtendedNat::parse).collect();
            parsed.push(entries?);
        }
        let cols = parsed.first()?.len();
        if parsed.iter().any(|r| r.len() != cols) {
            return None;
        }
        let rows_n = parsed.len();
        Some(DegreeMatrix::new(rows_n, cols, parsed.into_iter().flatten().collect()))
    }
}

impl fmt::Display for DegreeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.rows)
            .map(|r| self.row(r).iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", rows.join(";"))
    }
}

impl fmt::Debug for DegreeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturating_subtraction() {
        assert_eq!(ExtendedNat::at_least(1).sub(2), Some(ExtendedNat::ANY));
        assert_eq!(ExtendedNat::at_least(3).sub(1), Some(ExtendedNat::at_least(2)));
        assert_eq!(ExtendedNat::exact(2).sub(1), Some(ExtendedNat::exact(1)));
        assert_eq!(ExtendedNat::exact(0).sub(1), None);
    }

    #[test]
    fn parse_round_trip() {
        let m = DegreeMatrix::parse("2,>=1;0,3").unwrap();
        assert_eq!(m.rows, 2);
        assert_eq!(m.cols, 2);
        assert_eq!(m.get(0, 1), ExtendedNat::at_least(1));
        assert_eq!(DegreeMatrix::parse(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn admits_respects_flag() {
        assert!(ExtendedNat::at_least(2).admits(5));
        assert!(!ExtendedNat::at_least(2).admits(1));
        assert!(ExtendedNat::exact(2).admits(2));
        assert!(!ExtendedNat::exact(2).admits(3));
    }
}

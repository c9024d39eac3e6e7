//! Schedule matrices: turning a block design into a pooled-PCR delay
//! schedule, encoding Ct vectors, and decoding outcomes back.
//!
//! The delay rule is `S_ij = 2^(i + j*t)` at incidence ones (i, j both
//! 1-based) and ∞ elsewhere, so every finite entry is a distinct power of
//! two. When the design is (d-1)-doubly disjunct this gives a zero-error
//! code for up to `d` infected.
//!
//! Decoding enumerates candidate supports of size <= d in lexicographic
//! order and, for each, takes the principal solution restricted to the
//! support: the entrywise-least x with `S ⊙ x >= y`,
//!
//! ```text
//!   x*_j = max over rows i of block j of (y_i - S_ij)
//! ```
//!
//! clamped at 0 (Ct values are nonnegative). Every actual solution of
//! `S ⊙ x = y` on the support dominates x*, so the support is consistent
//! iff re-encoding x* reproduces `y` exactly; that equality is the
//! acceptance test. A support containing a person with a silent test
//! (some `S_ij` finite while `y_i` is ∞) is rejected outright.

use num::bigint::{BigInt, BigUint, Sign};
use num::traits::Zero;
use thiserror::Error;

use crate::design::{check_disjunct, BlockDesign, DesignError, DisjunctLevel};
use crate::tropical::{TropicalError, TropicalMatrix, TropicalValue, TropicalVector};

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("test {row} contains nobody (all-infinite schedule row)")]
    EmptyTest { row: usize },
    #[error(transparent)]
    Tropical(#[from] TropicalError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("no support of size <= {d} is consistent with the outcome vector")]
    NoConsistentOutcome { d: usize },
    #[error("decoder sparsity d={d} exceeds population n={n}")]
    InvalidSparsity { d: usize, n: usize },
    #[error("malformed schedule text: {0}")]
    Parse(String),
}

/// A t×n delay schedule. Finite entries are delays; ∞ means "person j is
/// not pooled into test i". No row is all-∞ (no empty test).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleMatrix {
    entries: TropicalMatrix,
    max_delay: BigUint,
    /// Rows with a finite entry, per column.
    column_rows: Vec<Vec<usize>>,
}

impl ScheduleMatrix {
    fn from_matrix(entries: TropicalMatrix) -> Result<Self, CodecError> {
        let (t, n) = (entries.rows(), entries.cols());
        let mut column_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut max_delay = BigUint::zero();
        for i in 0..t {
            let mut any_finite = false;
            for (j, rows) in column_rows.iter_mut().enumerate() {
                if let TropicalValue::Finite(v) = entries.get(i, j) {
                    any_finite = true;
                    rows.push(i);
                    if *v > max_delay {
                        max_delay = v.clone();
                    }
                }
            }
            if !any_finite {
                return Err(CodecError::EmptyTest { row: i + 1 });
            }
        }
        Ok(ScheduleMatrix { entries, max_delay, column_rows })
    }

    /// The power-of-two schedule of a design: `S_ij = 2^(i + j*t)` where
    /// test i is in block j, with i in 1..=t and j in 1..=n.
    pub fn from_design(design: &BlockDesign) -> Result<Self, CodecError> {
        let (t, n) = (design.t(), design.n());
        let mut entries = TropicalMatrix::filled(t, n, TropicalValue::Infinity);
        for (j, block) in design.blocks().iter().enumerate() {
            for &v in block {
                entries.set(v - 1, j, TropicalValue::pow2(v + (j + 1) * t));
            }
        }
        Self::from_matrix(entries)
    }

    /// Same support as the design, every finite delay equal to `delay`.
    /// `delay = 0` models plain pooling with no staggering.
    pub fn with_uniform_delay(design: &BlockDesign, delay: u64) -> Result<Self, CodecError> {
        let (t, n) = (design.t(), design.n());
        let mut entries = TropicalMatrix::filled(t, n, TropicalValue::Infinity);
        for (j, block) in design.blocks().iter().enumerate() {
            for &v in block {
                entries.set(v - 1, j, TropicalValue::finite(delay));
            }
        }
        Self::from_matrix(entries)
    }

    pub fn t(&self) -> usize {
        self.entries.rows()
    }

    pub fn n(&self) -> usize {
        self.entries.cols()
    }

    pub fn entry(&self, i: usize, j: usize) -> &TropicalValue {
        self.entries.get(i, j)
    }

    /// Largest finite delay; the code's `l`.
    pub fn max_delay(&self) -> &BigUint {
        &self.max_delay
    }

    /// True where `S_ij` is finite; must coincide with the source
    /// design's incidence matrix.
    pub fn support_rows(&self) -> Vec<Vec<u8>> {
        (0..self.t())
            .map(|i| {
                (0..self.n())
                    .map(|j| u8::from(self.entry(i, j).is_finite()))
                    .collect()
            })
            .collect()
    }

    /// Test outcomes for Ct vector `x`: the tropical product `S ⊙ x`.
    pub fn encode(&self, x: &TropicalVector) -> Result<TropicalVector, CodecError> {
        Ok(self.entries.matvec(x)?)
    }

    /// Recovers the unique Ct vector with at most `d` finite entries
    /// mapping to `y`, if there is one. With two or more consistent
    /// vectors the lexicographically smallest accepted support is
    /// reported and `unique` is false; with none, an error.
    pub fn decode(&self, y: &TropicalVector, d: usize) -> Result<DecodeResult, CodecError> {
        let (t, n) = (self.t(), self.n());
        if y.len() != t {
            return Err(CodecError::Tropical(TropicalError::DimensionMismatch {
                expected: t,
                got: y.len(),
            }));
        }
        if d > n {
            return Err(CodecError::InvalidSparsity { d, n });
        }
        let y_int: Vec<Option<BigInt>> = y
            .entries()
            .iter()
            .map(|v| v.as_finite().map(|b| BigInt::from(b.clone())))
            .collect();

        let mut accepted: Vec<TropicalVector> = Vec::new();
        let mut support = Vec::with_capacity(d);
        self.search_supports(&mut support, 0, d, &y_int, y, &mut accepted);
        match accepted.len() {
            0 => Err(CodecError::NoConsistentOutcome { d }),
            len => Ok(DecodeResult {
                x_hat: accepted.swap_remove(0),
                unique: len == 1,
            }),
        }
    }

    /// Depth-first support enumeration in lexicographic order; stops once
    /// two accepted vectors show the outcome is ambiguous.
    fn search_supports(
        &self,
        support: &mut Vec<usize>,
        next: usize,
        d: usize,
        y_int: &[Option<BigInt>],
        y: &TropicalVector,
        accepted: &mut Vec<TropicalVector>,
    ) {
        if accepted.len() >= 2 {
            return;
        }
        if let Some(x) = self.principal_solution(support, y_int, y) {
            accepted.push(x);
            if accepted.len() >= 2 {
                return;
            }
        }
        if support.len() == d {
            return;
        }
        for j in next..self.n() {
            support.push(j);
            self.search_supports(support, j + 1, d, y_int, y, accepted);
            support.pop();
            if accepted.len() >= 2 {
                return;
            }
        }
    }

    /// Principal solution restricted to `support`, or None when the
    /// support is inconsistent with `y` (a member with a silent test, or
    /// re-encoding mismatch).
    fn principal_solution(
        &self,
        support: &[usize],
        y_int: &[Option<BigInt>],
        y: &TropicalVector,
    ) -> Option<TropicalVector> {
        let mut x = vec![TropicalValue::Infinity; self.n()];
        for &j in support {
            let mut best: Option<BigInt> = None;
            for &i in &self.column_rows[j] {
                // a finite Ct for person j fires every test pooling j
                let yi = y_int[i].as_ref()?;
                let s = self.entry(i, j).as_finite().expect("column_rows is finite support");
                let candidate = yi - BigInt::from(s.clone());
                if best.as_ref().is_none_or(|b| candidate > *b) {
                    best = Some(candidate);
                }
            }
            let value = best?;
            x[j] = if value.sign() == Sign::Minus {
                TropicalValue::finite(0)
            } else {
                TropicalValue::Finite(value.to_biguint().expect("checked nonnegative"))
            };
        }
        let x = TropicalVector::new(x);
        let reencoded = self.encode(&x).expect("dimensions match by construction");
        (reencoded == *y).then_some(x)
    }

    /// Text form: header `t n`, then t rows of space-separated entries
    /// (`inf` or a decimal delay).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.t(), self.n());
        for i in 0..self.t() {
            let row: Vec<String> = (0..self.n()).map(|j| self.entry(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CodecError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| CodecError::Parse("empty input".into()))?;
        let mut parts = header.split_whitespace();
        let t: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CodecError::Parse("header must be `t n`".into()))?;
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CodecError::Parse("header must be `t n`".into()))?;
        let mut rows = Vec::with_capacity(t);
        for _ in 0..t {
            let line = lines
                .next()
                .ok_or_else(|| CodecError::Parse(format!("expected {t} schedule rows")))?;
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<TropicalValue>()
                        .map_err(|e| CodecError::Parse(e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != n {
                return Err(CodecError::Parse(format!(
                    "row has {} entries, expected {n}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        Self::from_matrix(TropicalMatrix::from_rows(rows)?)
    }
}

/// A decoded outcome: the recovered Ct vector and whether it was the only
/// consistent one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub x_hat: TropicalVector,
    pub unique: bool,
}

/// The sufficient condition for a zero-error code on `d` infected:
/// the design is (d-1)-doubly disjunct.
pub fn zero_error_certificate(design: &BlockDesign, d: usize) -> Result<bool, CodecError> {
    if d == 0 {
        return Err(CodecError::InvalidSparsity { d, n: design.n() });
    }
    Ok(check_disjunct(design, d - 1, DisjunctLevel::DoublyDisjunct)?.holds)
}

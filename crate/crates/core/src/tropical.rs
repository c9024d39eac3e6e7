//! Exact arithmetic in the min-plus subsemiring (ℕ ∪ {0, ∞}, min, +).
//!
//! `⊕ = min` models "earliest detection wins" and `⊙ = +` models cycle
//! delay, so a pooled test containing specimens `x_j` delayed by `S_ij`
//! reads out `min_j (S_ij + x_j)`. Finite values are arbitrary-precision:
//! schedule delays grow like `2^(t + n*t)`, far past any fixed-width
//! integer at useful sizes. Infinity is a distinct sentinel, never a large
//! finite stand-in, so `min` and `+` stay exact.
//!
//! Everything here is immutable after construction and safe to share
//! across threads.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use num::bigint::BigUint;
use num::traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TropicalError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid tropical value `{0}`: expected a nonnegative integer or `inf`")]
    ParseValue(String),
    #[error("sparsity class requires d <= n, got n={n}, d={d}")]
    InvalidSparsity { n: usize, d: usize },
}

/// A Ct value or delay: a nonnegative integer, or ∞ for "not present".
///
/// `Finite` sorts before `Infinity`, so the derived order is the natural
/// one with ∞ largest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TropicalValue {
    Finite(BigUint),
    Infinity,
}

impl TropicalValue {
    pub fn finite(v: u64) -> Self {
        TropicalValue::Finite(BigUint::from(v))
    }

    /// 2^exp, the delay shape used by schedule matrices.
    pub fn pow2(exp: usize) -> Self {
        TropicalValue::Finite(BigUint::one() << exp)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TropicalValue::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&BigUint> {
        match self {
            TropicalValue::Finite(v) => Some(v),
            TropicalValue::Infinity => None,
        }
    }

    /// Tropical addition: `min(self, other)`. Identity is ∞.
    pub fn tropical_add(&self, other: &Self) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Tropical multiplication: `self + other`. ∞ absorbs; identity is 0.
    pub fn tropical_mul(&self, other: &Self) -> Self {
        match (self, other) {
            (TropicalValue::Finite(a), TropicalValue::Finite(b)) => TropicalValue::Finite(a + b),
            _ => TropicalValue::Infinity,
        }
    }
}

impl fmt::Display for TropicalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TropicalValue::Finite(v) => write!(f, "{v}"),
            TropicalValue::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for TropicalValue {
    type Err = TropicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "inf" {
            return Ok(TropicalValue::Infinity);
        }
        s.parse::<BigUint>()
            .map(TropicalValue::Finite)
            .map_err(|_| TropicalError::ParseValue(s.to_string()))
    }
}

/// A vector of Ct values (one per individual) or test outcomes (one per
/// test). Text form is comma-separated with `inf` for ∞, e.g. `3,inf,0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TropicalVector(Vec<TropicalValue>);

impl TropicalVector {
    pub fn new(entries: Vec<TropicalValue>) -> Self {
        TropicalVector(entries)
    }

    pub fn all_infinite(n: usize) -> Self {
        TropicalVector(vec![TropicalValue::Infinity; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[TropicalValue] {
        &self.0
    }

    /// Indices (0-based) of the finite entries.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(j, _)| j)
            .collect()
    }

    pub fn finite_count(&self) -> usize {
        self.0.iter().filter(|v| v.is_finite()).count()
    }

    /// Entrywise `<=` with ∞ largest.
    pub fn entrywise_le(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl Index<usize> for TropicalVector {
    type Output = TropicalValue;

    fn index(&self, i: usize) -> &TropicalValue {
        &self.0[i]
    }
}

impl fmt::Display for TropicalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for TropicalVector {
    type Err = TropicalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let entries = s
            .split(',')
            .map(|tok| tok.parse::<TropicalValue>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TropicalVector(entries))
    }
}

/// A dense matrix over the tropical semiring, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TropicalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<TropicalValue>,
}

impl TropicalMatrix {
    pub fn filled(rows: usize, cols: usize, value: TropicalValue) -> Self {
        TropicalMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<TropicalValue>>) -> Result<Self, TropicalError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(TropicalError::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(TropicalMatrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &TropicalValue {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: TropicalValue) {
        self.data[i * self.cols + j] = v;
    }

    /// Tropical matrix-vector product: entry `i` is `min_j (S_ij + x_j)`.
    /// A row with no finite `S_ij + x_j` term yields ∞.
    pub fn matvec(&self, x: &TropicalVector) -> Result<TropicalVector, TropicalError> {
        if x.len() != self.cols {
            return Err(TropicalError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = TropicalValue::Infinity;
            for j in 0..self.cols {
                let term = self.get(i, j).tropical_mul(&x[j]);
                acc = acc.tropical_add(&term);
            }
            out.push(acc);
        }
        Ok(TropicalVector(out))
    }
}

/// The bounded sparse-vector class: all length-`n` vectors with at most
/// `d` finite entries, each finite entry in `[0, ct_max]`.
///
/// The mathematical class has unbounded finite entries; `ct_max` is an
/// enumeration bound, so exhaustive checks over it are range-restricted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityClass {
    n: usize,
    d: usize,
    ct_max: u64,
}

impl SparsityClass {
    pub fn new(n: usize, d: usize, ct_max: u64) -> Result<Self, TropicalError> {
        if d > n {
            return Err(TropicalError::InvalidSparsity { n, d });
        }
        Ok(SparsityClass { n, d, ct_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ct_max(&self) -> u64 {
        self.ct_max
    }

    /// Exact member count: sum over k of C(n,k) * (ct_max+1)^k.
    pub fn vector_count(&self) -> BigUint {
        let base = BigUint::from(self.ct_max) + BigUint::one();
        let mut total = BigUint::zero();
        for k in 0..=self.d {
            total += crate::prob::binomial(self.n, k) * base.pow(k as u32);
        }
        total
    }

    /// Streams every member exactly once: support size ascending, support
    /// lexicographic, values in mixed-radix order.
    pub fn enumerate(&self) -> SparseVectors {
        SparseVectors {
            n: self.n,
            d: self.d,
            ct_max: self.ct_max,
            k: 0,
            support: None,
            values: Vec::new(),
            done: false,
        }
    }
}

/// Iterator over a [`SparsityClass`]; see [`SparsityClass::enumerate`].
pub struct SparseVectors {
    n: usize,
    d: usize,
    ct_max: u64,
    k: usize,
    support: Option<Vec<usize>>,
    values: Vec<u64>,
    done: bool,
}

impl SparseVectors {
    fn build(&self) -> TropicalVector {
        let mut v = vec![TropicalValue::Infinity; self.n];
        if let Some(support) = &self.support {
            for (slot, &j) in support.iter().enumerate() {
                v[j] = TropicalValue::finite(self.values[slot]);
            }
        }
        TropicalVector(v)
    }

    /// Advance `self.values` as a little-endian counter in base ct_max+1.
    /// Returns false on wrap-around.
    fn step_values(&mut self) -> bool {
        for slot in (0..self.values.len()).rev() {
            if self.values[slot] < self.ct_max {
                self.values[slot] += 1;
                return true;
            }
            self.values[slot] = 0;
        }
        false
    }

    /// Advance the support to the next k-subset of {0..n-1} in
    /// lexicographic order. Returns false when exhausted.
    fn step_support(&mut self) -> bool {
        let support = self.support.as_mut().expect("support initialized");
        let k = support.len();
        if k == 0 {
            return false;
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if support[i] < self.n - k + i {
                support[i] += 1;
                for slot in i + 1..k {
                    support[slot] = support[slot - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SparseVectors {
    type Item = TropicalVector;

    fn next(&mut self) -> Option<TropicalVector> {
        if self.done {
            return None;
        }
        loop {
            match self.support {
                None => {
                    if self.k > self.d || self.k > self.n {
                        self.done = true;
                        return None;
                    }
                    self.support = Some((0..self.k).collect());
                    self.values = vec![0; self.k];
                    return Some(self.build());
                }
                Some(_) => {
                    if self.step_values() {
                        return Some(self.build());
                    }
                    if self.step_support() {
                        return Some(self.build());
                    }
                    self.support = None;
                    self.k += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn fin(v: u64) -> TropicalValue {
        TropicalValue::finite(v)
    }

    const INF: TropicalValue = TropicalValue::Infinity;

    #[test]
    fn add_is_min_with_infinity_identity() {
        assert_eq!(fin(3).tropical_add(&fin(5)), fin(3));
        assert_eq!(INF.tropical_add(&fin(7)), fin(7));
        assert_eq!(INF.tropical_add(&INF), INF);
    }

    #[test]
    fn mul_is_plus_with_zero_identity_and_absorbing_infinity() {
        assert_eq!(fin(3).tropical_mul(&fin(5)), fin(8));
        assert_eq!(fin(0).tropical_mul(&fin(9)), fin(9));
        assert_eq!(INF.tropical_mul(&fin(2)), INF);
    }

    #[test]
    fn matvec_identity_matrix() {
        let s = TropicalMatrix::from_rows(vec![
            vec![fin(0), INF],
            vec![INF, fin(0)],
        ])
        .unwrap();
        let x = TropicalVector::new(vec![fin(4), fin(7)]);
        assert_eq!(s.matvec(&x).unwrap(), x);
    }

    #[test]
    fn matvec_single_row() {
        let s = TropicalMatrix::from_rows(vec![vec![fin(1), fin(2)]]).unwrap();
        let x = TropicalVector::new(vec![fin(5), fin(3)]);
        assert_eq!(s.matvec(&x).unwrap(), TropicalVector::new(vec![fin(5)]));
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let s = TropicalMatrix::filled(1, 2, INF);
        let x = TropicalVector::new(vec![fin(0)]);
        assert_eq!(
            s.matvec(&x),
            Err(TropicalError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn all_infinite_row_yields_infinity() {
        let s = TropicalMatrix::filled(2, 2, INF);
        let x = TropicalVector::new(vec![fin(1), fin(2)]);
        assert_eq!(s.matvec(&x).unwrap(), TropicalVector::all_infinite(2));
    }

    #[test]
    fn vector_text_round_trip() {
        let v: TropicalVector = "3,inf,0".parse().unwrap();
        assert_eq!(v.entries(), &[fin(3), INF, fin(0)]);
        assert_eq!(v.to_string(), "3,inf,0");
        assert!("3,-1".parse::<TropicalVector>().is_err());
        assert!("x".parse::<TropicalVector>().is_err());
    }

    #[test]
    fn enumerate_weight_one_support() {
        let cls = SparsityClass::new(2, 1, 0).unwrap();
        let got: Vec<_> = cls.enumerate().collect();
        assert_eq!(
            got,
            vec![
                TropicalVector::all_infinite(2),
                TropicalVector::new(vec![fin(0), INF]),
                TropicalVector::new(vec![INF, fin(0)]),
            ]
        );
    }

    #[test]
    fn enumerate_count_small() {
        // 1 + C(2,1)*2 + C(2,2)*4 = 9
        let cls = SparsityClass::new(2, 2, 1).unwrap();
        assert_eq!(cls.vector_count(), BigUint::from(9u32));
        assert_eq!(cls.enumerate().count(), 9);
    }

    #[test]
    fn enumerate_empty_support_only() {
        let cls = SparsityClass::new(3, 0, 5).unwrap();
        let got: Vec<_> = cls.enumerate().collect();
        assert_eq!(got, vec![TropicalVector::all_infinite(3)]);
    }

    fn arb_value() -> impl Strategy<Value = TropicalValue> {
        prop_oneof![
            3 => (0u64..50).prop_map(TropicalValue::finite),
            1 => Just(TropicalValue::Infinity),
        ]
    }

    proptest! {
        #[test]
        fn semiring_laws(a in arb_value(), b in arb_value(), c in arb_value()) {
            // ⊕ commutative, associative, idempotent
            prop_assert_eq!(a.tropical_add(&b), b.tropical_add(&a));
            prop_assert_eq!(
                a.tropical_add(&b).tropical_add(&c),
                a.tropical_add(&b.tropical_add(&c))
            );
            prop_assert_eq!(a.tropical_add(&a), a.clone());
            // ⊙ commutative, associative
            prop_assert_eq!(a.tropical_mul(&b), b.tropical_mul(&a));
            prop_assert_eq!(
                a.tropical_mul(&b).tropical_mul(&c),
                a.tropical_mul(&b.tropical_mul(&c))
            );
            // ⊙ distributes over ⊕
            prop_assert_eq!(
                a.tropical_mul(&b.tropical_add(&c)),
                a.tropical_mul(&b).tropical_add(&a.tropical_mul(&c))
            );
        }

        #[test]
        fn matvec_is_monotone(
            rows in prop::collection::vec(
                prop::collection::vec(arb_value(), 4), 1..5),
            bump in prop::collection::vec((0u64..5, prop::bool::ANY), 4)
        ) {
            let s = TropicalMatrix::from_rows(rows).unwrap();
            let x = TropicalVector::new(
                bump.iter().map(|(v, _)| TropicalValue::finite(*v)).collect());
            // y >= x entrywise: bump some entries, possibly to infinity
            let y = TropicalVector::new(
                bump.iter()
                    .map(|(v, to_inf)| if *to_inf {
                        TropicalValue::Infinity
                    } else {
                        TropicalValue::finite(v + 3)
                    })
                    .collect());
            prop_assert!(x.entrywise_le(&y));
            let sx = s.matvec(&x).unwrap();
            let sy = s.matvec(&y).unwrap();
            prop_assert!(sx.entrywise_le(&sy));
        }

        #[test]
        fn enumerate_no_duplicates_and_count_matches(
            n in 1usize..6, d in 0usize..4, ct_max in 0u64..3
        ) {
            let d = d.min(n);
            let cls = SparsityClass::new(n, d, ct_max).unwrap();
            let all: Vec<_> = cls.enumerate().collect();
            let distinct: HashSet<_> = all.iter().cloned().collect();
            prop_assert_eq!(all.len(), distinct.len());
            prop_assert_eq!(BigUint::from(all.len()), cls.vector_count());
            for v in &all {
                prop_assert!(v.finite_count() <= d);
            }
        }
    }
}

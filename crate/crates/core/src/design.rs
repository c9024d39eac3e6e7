//! Block designs and their disjunctness certificates.
//!
//! A design is a family of `n` blocks (subsets of tests `{1..t}`); column
//! `j` of its t×n incidence matrix is the set of tests pooling person `j`.
//! The key properties:
//!
//! * `d`-disjunct: removing the union of any `d` other blocks from a block
//!   leaves at least 1 element;
//! * `d`-doubly disjunct: the residual has at least 2 elements.
//!
//! Double disjunctness at order `d-1` is the sufficient condition for a
//! zero-error pooled-PCR code on `d` infected (see the `codec` module).
//! `check_disjunct` is exhaustive, not sampled: it is the zero-error
//! certificate of the whole crate, with cost `O(n * C(n-1, d))` choices,
//! intended for n up to ~30 and d up to ~4.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf::{prime_power, FiniteField};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DesignError {
    #[error("block {index} is empty")]
    EmptyBlock { index: usize },
    #[error("block {index} contains vertex {vertex}, outside 1..={t}")]
    VertexOutOfRange { index: usize, vertex: usize, t: usize },
    #[error("blocks {first} and {second} are equal as sets")]
    DuplicateBlock { first: usize, second: usize },
    #[error("design has no blocks")]
    EmptyDesign,
    #[error("vertex count must be at least 1")]
    NoVertices,
    #[error("{q} is not a prime power")]
    InvalidPrimePower { q: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("disjunctness order d={d} needs at least d+1 blocks, design has {n}")]
    InvalidOrder { d: usize, n: usize },
    #[error("design would have {blocks} blocks, over the construction limit {limit}")]
    TooLarge { blocks: u64, limit: u64 },
    #[error("malformed design text: {0}")]
    Parse(String),
}

/// A family of blocks over vertex set `{1..t}`, column-indexed view of a
/// t×n binary incidence matrix.
///
/// [`BlockDesign::new`] enforces the full contract (nonempty, in-range,
/// pairwise-distinct blocks). Randomly generated families may legitimately
/// contain duplicate or empty columns — those go through
/// [`BlockDesign::new_relaxed`] and are surfaced via
/// [`BlockDesign::has_duplicate_blocks`] / [`BlockDesign::has_empty_blocks`]
/// rather than silently rewritten.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDesign {
    t: usize,
    blocks: Vec<BTreeSet<usize>>,
}

impl BlockDesign {
    pub fn new(t: usize, blocks: Vec<BTreeSet<usize>>) -> Result<Self, DesignError> {
        let design = Self::new_relaxed(t, blocks)?;
        for (j, block) in design.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(DesignError::EmptyBlock { index: j });
            }
        }
        if let Some((a, b)) = design.find_duplicate() {
            return Err(DesignError::DuplicateBlock { first: a, second: b });
        }
        Ok(design)
    }

    /// Range-checks only; duplicate and empty blocks are allowed and
    /// reported through the flag accessors.
    pub fn new_relaxed(t: usize, blocks: Vec<BTreeSet<usize>>) -> Result<Self, DesignError> {
        if t == 0 {
            return Err(DesignError::NoVertices);
        }
        if blocks.is_empty() {
            return Err(DesignError::EmptyDesign);
        }
        for (j, block) in blocks.iter().enumerate() {
            for &v in block {
                if v == 0 || v > t {
                    return Err(DesignError::VertexOutOfRange { index: j, vertex: v, t });
                }
            }
        }
        Ok(BlockDesign { t, blocks })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[BTreeSet<usize>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &BTreeSet<usize> {
        &self.blocks[j]
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut seen: Vec<(&BTreeSet<usize>, usize)> =
            self.blocks.iter().enumerate().map(|(j, b)| (b, j)).collect();
        seen.sort();
        for w in seen.windows(2) {
            if w[0].0 == w[1].0 {
                return Some((w[0].1.min(w[1].1), w[0].1.max(w[1].1)));
            }
        }
        None
    }

    pub fn has_duplicate_blocks(&self) -> bool {
        self.find_duplicate().is_some()
    }

    pub fn has_empty_blocks(&self) -> bool {
        self.blocks.iter().any(|b| b.is_empty())
    }

    /// Incidence matrix rows: row `i` has a 1 in column `j` iff test `i+1`
    /// is in block `j`.
    pub fn incidence_rows(&self) -> Vec<Vec<u8>> {
        (1..=self.t)
            .map(|v| {
                self.blocks
                    .iter()
                    .map(|b| u8::from(b.contains(&v)))
                    .collect()
            })
            .collect()
    }

    /// Vertex-doubling map `B -> {2x : x in B} ∪ {2x-1 : x in B}` onto
    /// `2t` vertices. Sends a d-disjunct design to a d-doubly disjunct
    /// one; block count is preserved and block sizes double.
    pub fn double(&self) -> BlockDesign {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().flat_map(|&x| [2 * x, 2 * x - 1]).collect())
            .collect();
        // the map is injective on sets, so duplicates (if any) carry over
        // one-for-one and relaxed construction cannot fail
        BlockDesign { t: 2 * self.t, blocks }
    }

    /// The sub-design on the first `keep` blocks. A subfamily inherits
    /// disjunctness, so this is how oversized constructions are trimmed
    /// to a target population.
    pub fn take_blocks(&self, keep: usize) -> Result<BlockDesign, DesignError> {
        if keep == 0 || keep > self.n() {
            return Err(DesignError::InvalidParams(format!(
                "cannot keep {keep} of {} blocks",
                self.n()
            )));
        }
        Ok(BlockDesign {
            t: self.t,
            blocks: self.blocks[..keep].to_vec(),
        })
    }

    /// Adds one block, preserving the strict contract.
    pub fn with_block(&self, block: BTreeSet<usize>) -> Result<BlockDesign, DesignError> {
        let mut blocks = self.blocks.clone();
        blocks.push(block);
        BlockDesign::new(self.t, blocks)
    }

    /// Text form: header `t n`, then one ascending space-separated block
    /// per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.t, self.n());
        for block in &self.blocks {
            let line = block.iter().map(|v| v.to_string()).join(" ");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Parses the [`BlockDesign::to_text`] format. Validation is relaxed:
    /// serialized random designs may carry duplicate columns, and the
    /// disjunctness checker fails those naturally.
    pub fn from_text(text: &str) -> Result<Self, DesignError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| DesignError::Parse("empty input".into()))?;
        let mut parts = header.split_whitespace();
        let t: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DesignError::Parse("header must be `t n`".into()))?;
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DesignError::Parse("header must be `t n`".into()))?;
        if parts.next().is_some() {
            return Err(DesignError::Parse("header must be exactly `t n`".into()));
        }
        let mut blocks = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| DesignError::Parse(format!("expected {n} block lines")))?;
            let block = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| DesignError::Parse(format!("bad vertex `{tok}`")))
                })
                .collect::<Result<BTreeSet<_>, _>>()?;
            blocks.push(block);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(DesignError::Parse("trailing content after blocks".into()));
        }
        Self::new_relaxed(t, blocks)
    }
}

/// SHA-256 of the canonical text form, used to tie schedule files back to
/// the design they came from.
pub fn design_sha256(design: &BlockDesign) -> String {
    let digest = Sha256::digest(design.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Residual-size threshold selecting plain (>= 1) or double (>= 2)
/// disjunctness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisjunctLevel {
    Disjunct,
    DoublyDisjunct,
}

impl DisjunctLevel {
    pub fn required_residual(self) -> usize {
        match self {
            DisjunctLevel::Disjunct => 1,
            DisjunctLevel::DoublyDisjunct => 2,
        }
    }

    pub fn from_threshold(threshold: usize) -> Option<Self> {
        match threshold {
            1 => Some(DisjunctLevel::Disjunct),
            2 => Some(DisjunctLevel::DoublyDisjunct),
            _ => None,
        }
    }
}

impl fmt::Display for DisjunctLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisjunctLevel::Disjunct => write!(f, "disjunct"),
            DisjunctLevel::DoublyDisjunct => write!(f, "doubly_disjunct"),
        }
    }
}

/// A violating choice: block `z` minus the union of the `covering` blocks
/// leaves the (too small) `residual`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjunctnessWitness {
    pub z: usize,
    pub covering: Vec<usize>,
    pub residual: BTreeSet<usize>,
}

/// Outcome of an exhaustive disjunctness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjunctnessReport {
    pub level: DisjunctLevel,
    pub d: usize,
    pub holds: bool,
    pub witness: Option<DisjunctnessWitness>,
}

/// Word-packed vertex sets, one per block, for the checker's inner loop.
fn block_masks(design: &BlockDesign) -> (usize, Vec<Vec<u64>>) {
    let words = design.t().div_ceil(64);
    let masks = design
        .blocks()
        .iter()
        .map(|block| {
            let mut mask = vec![0u64; words];
            for &v in block {
                mask[(v - 1) / 64] |= 1 << ((v - 1) % 64);
            }
            mask
        })
        .collect();
    (words, masks)
}

/// Exhaustively tests whether every choice of distinct blocks
/// `Z, B_1..B_d` leaves `|Z \ (B_1 ∪ .. ∪ B_d)|` at or above the level's
/// threshold. `d = 0` degenerates to a minimum block-size check. The first
/// violation in iteration order (Z index, then covering combination, both
/// lexicographic) is returned as the witness, so results are deterministic.
pub fn check_disjunct(
    design: &BlockDesign,
    d: usize,
    level: DisjunctLevel,
) -> Result<DisjunctnessReport, DesignError> {
    let n = design.n();
    if d > 0 && d + 1 > n {
        return Err(DesignError::InvalidOrder { d, n });
    }
    let threshold = level.required_residual();
    let (words, masks) = block_masks(design);
    let mut union = vec![0u64; words];

    for z in 0..n {
        let others = (0..n).filter(|&j| j != z);
        for combo in others.combinations(d) {
            union.iter_mut().for_each(|w| *w = 0);
            for &j in &combo {
                for (u, m) in union.iter_mut().zip(&masks[j]) {
                    *u |= m;
                }
            }
            let residual_size: u32 = masks[z]
                .iter()
                .zip(&union)
                .map(|(zm, um)| (zm & !um).count_ones())
                .sum();
            if (residual_size as usize) < threshold {
                let residual = design.block(z)
                    .iter()
                    .copied()
                    .filter(|v| {
                        let bit = (union[(v - 1) / 64] >> ((v - 1) % 64)) & 1;
                        bit == 0
                    })
                    .collect();
                return Ok(DisjunctnessReport {
                    level,
                    d,
                    holds: false,
                    witness: Some(DisjunctnessWitness { z, covering: combo, residual }),
                });
            }
        }
    }
    Ok(DisjunctnessReport { level, d, holds: true, witness: None })
}

/// The 7-block, 7-vertex projective-plane design: every block has size 3,
/// every vertex lies in 3 blocks, any two blocks meet in exactly one
/// vertex. It is 1-doubly disjunct and 2-disjunct.
///
/// Blocks are the cyclic shifts of {1,2,4}, ordered so the incidence
/// matrix comes out in its reference form.
pub fn fano_plane() -> BlockDesign {
    let blocks = [
        [1, 2, 4],
        [2, 3, 5],
        [3, 4, 6],
        [4, 5, 7],
        [1, 5, 6],
        [2, 6, 7],
        [1, 3, 7],
    ];
    BlockDesign::new(7, blocks.iter().map(|b| b.iter().copied().collect()).collect())
        .expect("fixed design is valid")
}

/// All w-subsets of `{1..t}` whose index sum is `residue (mod t)`.
///
/// Any two distinct equal-weight blocks in one residue class differ in at
/// least two elements, which makes every nonempty class 1-doubly disjunct,
/// and the largest class has at least `C(t,w)/t` blocks.
pub fn graham_sloane(t: usize, w: usize, residue: usize) -> Result<BlockDesign, DesignError> {
    if t == 0 || w == 0 || w > t {
        return Err(DesignError::InvalidParams(format!(
            "need 1 <= w <= t, got t={t}, w={w}"
        )));
    }
    if residue >= t {
        return Err(DesignError::InvalidParams(format!(
            "residue {residue} out of range mod {t}"
        )));
    }
    let blocks: Vec<BTreeSet<usize>> = (1..=t)
        .combinations(w)
        .filter(|c| c.iter().sum::<usize>() % t == residue)
        .map(|c| c.into_iter().collect())
        .collect();
    if blocks.is_empty() {
        return Err(DesignError::EmptyDesign);
    }
    BlockDesign::new(t, blocks)
}

const KS_MAX_BLOCKS: u64 = 1_000_000;

/// Reed-Solomon concatenation on `t = q^2` vertices: one block per
/// polynomial of degree < k over GF(q), with block
/// `{ i*q + poly(x_i) + 1 : i in 0..q }` of size q. For k >= 2 the result
/// is d-disjunct with d = floor((q-1)/(k-1)); k = 1 gives q pairwise
/// disjoint blocks.
pub fn kautz_singleton(q: u64, k: u32) -> Result<BlockDesign, DesignError> {
    let field = match prime_power(q) {
        Some(_) => FiniteField::new(q).ok_or(DesignError::InvalidPrimePower { q })?,
        None => return Err(DesignError::InvalidPrimePower { q }),
    };
    if k == 0 || k as u64 > q {
        return Err(DesignError::InvalidParams(format!(
            "need 1 <= k <= q, got q={q}, k={k}"
        )));
    }
    let n = q
        .checked_pow(k)
        .filter(|&n| n <= KS_MAX_BLOCKS)
        .ok_or(DesignError::TooLarge { blocks: u64::MAX, limit: KS_MAX_BLOCKS })?;
    let t = (q * q) as usize;

    let mut blocks = Vec::with_capacity(n as usize);
    let mut coeffs = vec![0u64; k as usize]; // lowest degree first
    for _ in 0..n {
        let high_first: Vec<u64> = coeffs.iter().rev().copied().collect();
        let block: BTreeSet<usize> = (0..q)
            .map(|x| (x * q + field.eval_poly(&high_first, x)) as usize + 1)
            .collect();
        blocks.push(block);
        // next coefficient vector, base-q counter
        for slot in coeffs.iter_mut() {
            *slot += 1;
            if *slot < q {
                break;
            }
            *slot = 0;
        }
    }
    BlockDesign::new(t, blocks)
}

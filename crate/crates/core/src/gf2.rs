//! Bit-packed linear algebra over GF(2).
//!
//! Bit `k` of a [`BitVec`] stands for qubit index `k` and carries weight `2^k`
//! when vectors are compared as integers, so "lexicographically smallest"
//! means "smallest integer value" and the highest index is most significant.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Fixed-length bit vector packed into 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVec {
            len,
            words: vec![!0; words_for(len)],
        };
        v.mask_tail();
        v
    }

    /// Vector with the given indices set. Indices past `len` are rejected.
    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut v = BitVec::zeros(len);
        for &i in indices {
            if i >= len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    found: i + 1,
                });
            }
            v.set(i, true);
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from the low `len` bits of `value` (bit k of the integer is index k).
    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut v = BitVec::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.mask_tail();
        }
        v
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the most significant set bit.
    pub fn highest_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD + (WORD - 1 - w.leading_zeros() as usize))
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let tz = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    fn check_len(&self, other: &BitVec) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(())
    }

    pub fn xor(&self, other: &BitVec) -> Result<BitVec> {
        self.check_len(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitVec {
            len: self.len,
            words,
        })
    }

    pub fn xor_assign(&mut self, other: &BitVec) -> Result<()> {
        self.check_len(other)?;
        self.xor_assign_unchecked(other);
        Ok(())
    }

    #[inline]
    pub(crate) fn xor_assign_unchecked(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of `|self ∩ other|`.
    pub fn overlap_parity(&self, other: &BitVec) -> Result<bool> {
        self.check_len(other)?;
        Ok(self.overlap_parity_unchecked(other))
    }

    #[inline]
    pub(crate) fn overlap_parity_unchecked(&self, other: &BitVec) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn overlap_count(&self, other: &BitVec) -> Result<usize> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    /// Compares `self` against `self ⊕ other` as integers without allocating.
    /// Returns `Less` when `self ⊕ other` is smaller than `best`.
    #[inline]
    pub(crate) fn cmp_xor_with(&self, other: &BitVec, best: &BitVec) -> Ordering {
        for i in (0..self.words.len()).rev() {
            let cand = self.words[i] ^ other.words[i];
            match cand.cmp(&best.words[i]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    #[inline]
    pub(crate) fn assign_xor(&mut self, a: &BitVec, b: &BitVec) {
        for ((o, x), y) in self.words.iter_mut().zip(&a.words).zip(&b.words) {
            *o = x ^ y;
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        (0..self.len)
            .map(|i| if self.get(i) { 1.0 } else { 0.0 })
            .collect()
    }

    /// Concatenation `self ‖ other`.
    pub fn concat(&self, other: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.len + other.len);
        for i in self.iter_ones() {
            out.set(i, true);
        }
        for i in other.iter_ones() {
            out.set(self.len + i, true);
        }
        out
    }
}

/// Integer order: longer vectors sort after shorter ones, equal lengths
/// compare from the highest index down.
impl Ord for BitVec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for BitVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Index 0 is the leftmost character.
impl FromStr for BitVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => v.set(i, true),
                _ => return Err(Error::BadBitString(s.to_string())),
            }
        }
        Ok(v)
    }
}

impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dense GF(2) matrix stored as bit-packed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Matrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl Gf2Matrix {
    pub fn new(cols: usize, rows: Vec<BitVec>) -> Result<Self> {
        for r in &rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        Ok(Gf2Matrix { cols, rows })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Gf2Matrix {
            cols,
            rows: vec![BitVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = BitVec::zeros(n);
                r.set(i, true);
                r
            })
            .collect();
        Gf2Matrix { cols: n, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    /// Copy of `self` with `row` appended.
    pub fn with_row(&self, row: BitVec) -> Result<Gf2Matrix> {
        if row.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                found: row.len(),
            });
        }
        let mut rows = self.rows.clone();
        rows.push(row);
        Ok(Gf2Matrix {
            cols: self.cols,
            rows,
        })
    }

    /// Number of linearly independent rows. Row rank equals column rank, so
    /// this also serves for matrices whose generators are written as columns.
    pub fn rank(&self) -> usize {
        self.reduce().rank()
    }

    pub fn reduce(&self) -> ReducedBasis {
        let mut basis = ReducedBasis::empty(self.cols);
        for r in &self.rows {
            basis.insert(r.clone());
        }
        basis
    }
}

/// Fully reduced row-echelon basis with pivots at the highest available
/// column of each row.
///
/// Rows are kept sorted by strictly decreasing pivot; every row has a 1 at
/// its own pivot and every other row has a 0 there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedBasis {
    basis: Gf2Matrix,
    pivot_cols: Vec<usize>,
}

impl ReducedBasis {
    pub fn empty(cols: usize) -> Self {
        ReducedBasis {
            basis: Gf2Matrix {
                cols,
                rows: Vec::new(),
            },
            pivot_cols: Vec::new(),
        }
    }

    pub fn basis(&self) -> &Gf2Matrix {
        &self.basis
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }

    pub fn n_cols(&self) -> usize {
        self.basis.cols
    }

    fn eliminate(&self, v: &mut BitVec) {
        for (row, &p) in self.basis.rows.iter().zip(&self.pivot_cols) {
            if v.get(p) {
                v.xor_assign_unchecked(row);
            }
        }
    }

    /// Adds `v` to the basis. Returns false when `v` was already in the span.
    pub fn insert(&mut self, mut v: BitVec) -> bool {
        assert_eq!(v.len(), self.basis.cols, "row length must match basis width");
        self.eliminate(&mut v);
        let Some(p) = v.highest_one() else {
            return false;
        };
        // rows with a higher pivot may still hold a 1 at p
        for row in self.basis.rows.iter_mut() {
            if row.get(p) {
                row.xor_assign_unchecked(&v);
            }
        }
        let at = self.pivot_cols.partition_point(|&q| q > p);
        self.pivot_cols.insert(at, p);
        self.basis.rows.insert(at, v);
        true
    }

    pub fn in_span(&self, v: &BitVec) -> Result<bool> {
        Ok(self.project_to_leader(v)?.is_zero())
    }

    /// Smallest-integer element of the coset `v ⊕ span(basis)`.
    pub fn project_to_leader(&self, v: &BitVec) -> Result<BitVec> {
        if v.len() != self.basis.cols {
            return Err(Error::LengthMismatch {
                expected: self.basis.cols,
                found: v.len(),
            });
        }
        let mut out = v.clone();
        self.eliminate(&mut out);
        Ok(out)
    }

    /// Like [`Self::project_to_leader`] but reuses the caller's buffer.
    pub(crate) fn project_in_place(&self, v: &mut BitVec) {
        debug_assert_eq!(v.len(), self.basis.cols);
        self.eliminate(v);
    }
}

pub fn xor(a: &BitVec, b: &BitVec) -> Result<BitVec> {
    a.xor(b)
}

pub fn rank(m: &Gf2Matrix) -> usize {
    m.rank()
}

pub fn reduce(m: &Gf2Matrix) -> ReducedBasis {
    m.reduce()
}

pub fn in_span(basis: &ReducedBasis, v: &BitVec) -> Result<bool> {
    basis.in_span(v)
}

pub fn project_to_leader(basis: &ReducedBasis, v: &BitVec) -> Result<BitVec> {
    basis.project_to_leader(v)
}

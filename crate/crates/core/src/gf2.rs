//! Dense linear algebra over GF(2).
//!
//! Vectors and matrices are packed into `u64` words, bit `i` of a row living in
//! word `i / 64` at position `i % 64`. Position 0 is the leftmost symbol when a
//! vector is printed, so `"1100"` has ones at positions 0 and 1.
//!
//! ```
//! use mbbp::gf2::{BinaryMatrix, BinaryVector};
//!
//! let h: BinaryMatrix = "2 4\n1100\n0111\n".parse().unwrap();
//! assert_eq!(h.rank(), 2);
//! let c: BinaryVector = "1111".parse().unwrap();
//! assert_eq!(h.syndrome(&c).unwrap().to_string(), "01");
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    len: usize,
    words: Vec<u64>,
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    /// Builds a vector from a slice of 0/1 values (any nonzero byte is a one).
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_positions<I: IntoIterator<Item = usize>>(len: usize, ones: I) -> Result<Self> {
        let mut v = Self::zeros(len);
        for i in ones {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            v.set(i, true);
        }
        Ok(v)
    }

    /// Packs the low `len` bits of `x` (bit `i` of `x` is position `i`).
    pub fn from_u128(len: usize, x: u128) -> Self {
        assert!(len <= 128, "from_u128 supports at most 128 positions");
        let mut v = Self::zeros(len);
        let mask = if len == 128 { u128::MAX } else { (1u128 << len) - 1 };
        let x = x & mask;
        if !v.words.is_empty() {
            v.words[0] = x as u64;
        }
        if v.words.len() > 1 {
            v.words[1] = (x >> 64) as u64;
        }
        v
    }

    /// Inverse of [`BinaryVector::from_u128`]; `None` when longer than 128.
    pub fn to_u128(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        Some(lo | (hi << 64))
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
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn xor_assign(&mut self, other: &BinaryVector) {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BinaryVector) -> BinaryVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &BinaryVector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    /// Positions holding a one, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Returns a vector of length `len + extra` with the new positions zero.
    pub fn extended(&self, extra: usize) -> BinaryVector {
        let mut out = BinaryVector::zeros(self.len + extra);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        out
    }
}

impl Ord for BinaryVector {
    /// Lexicographic order on the printed string: position 0 is most significant.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.len.cmp(&other.len) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.words.iter().zip(&other.words) {
            let x = a ^ b;
            if x != 0 {
                let t = x.trailing_zeros();
                return if (a >> t) & 1 == 1 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for BinaryVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryVector({self})")
    }
}

impl FromStr for BinaryVector {
    type Err = Error;

    /// Parses a string of `0`/`1` characters. Whitespace between symbols is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_whitespace() => {}
                c => {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
        Ok(BinaryVector::from_bits(&bits))
    }
}

/// A dense `m x n` matrix over GF(2), stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    wpr: usize,
    data: Vec<u64>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let wpr = words_for(cols);
        Self {
            rows,
            cols,
            wpr,
            data: vec![0; rows * wpr],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Stacks vectors as rows. All rows must share one length; an empty list
    /// yields a `0 x 0` matrix.
    pub fn from_rows(rows: &[BinaryVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    /// Builds from row-major 0/1 data.
    pub fn from_dense(rows: usize, cols: usize, data: &[u8]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if data[r * cols + c] != 0 {
                    m.set(r, c, true);
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.wpr + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.wpr + c / 64];
        let mask = 1u64 << (c % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.wpr..(r + 1) * self.wpr]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.wpr..(r + 1) * self.wpr]
    }

    pub fn row(&self, r: usize) -> BinaryVector {
        BinaryVector {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = BinaryVector> + '_ {
        (0..self.rows).map(|r| self.row(r))
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut out = vec![0; self.cols];
        for r in 0..self.rows {
            for c in self.row(r).iter_ones() {
                out[c] += 1;
            }
        }
        out
    }

    /// Positions of ones in column `c`, ascending by row.
    pub fn column_support(&self, c: usize) -> Vec<usize> {
        (0..self.rows).filter(|&r| self.get(r, c)).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.wpr {
            self.data.swap(a * self.wpr + w, b * self.wpr + w);
        }
    }

    /// `row[dst] ^= row[src]`.
    fn add_row(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let wpr = self.wpr;
        let (s, d) = (src * wpr, dst * wpr);
        for w in 0..wpr {
            let x = self.data[s + w];
            self.data[d + w] ^= x;
        }
    }

    /// In-place Gauss-Jordan reduction; returns the pivot columns in order.
    ///
    /// After the call the first `pivots.len()` rows form the reduced row
    /// echelon form and the remaining rows are zero.
    fn reduce_in_place(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..self.cols {
            if next == self.rows {
                break;
            }
            let Some(p) = (next..self.rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.swap_rows(p, next);
            for r in 0..self.rows {
                if r != next && self.get(r, c) {
                    self.add_row(next, r);
                }
            }
            pivots.push(c);
            next += 1;
        }
        pivots
    }

    /// Row rank over GF(2). Works on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(p, rank);
            for r in rank + 1..m.rows {
                if m.get(r, c) {
                    m.add_row(rank, r);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Reduced row echelon form with zero rows dropped, plus pivot columns.
    pub fn row_reduced(&self) -> (BinaryMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.reduce_in_place();
        m.data.truncate(pivots.len() * m.wpr);
        m.rows = pivots.len();
        (m, pivots)
    }

    /// Basis of the right null space `{x : M x^T = 0}`, one vector per row.
    pub fn null_space(&self) -> BinaryMatrix {
        let (r, pivots) = self.row_reduced();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free: Vec<usize> = (0..self.cols).filter(|&c| !is_pivot[c]).collect();
        let mut out = BinaryMatrix::zeros(free.len(), self.cols);
        for (i, &f) in free.iter().enumerate() {
            out.set(i, f, true);
            for (row, &p) in pivots.iter().enumerate() {
                if r.get(row, f) {
                    out.set(i, p, true);
                }
            }
        }
        out
    }

    /// The restriction to the column set `cols`, taken in ascending order.
    pub fn restrict_columns(&self, cols: &[usize]) -> Result<BinaryMatrix> {
        let mut idx = cols.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&c| c >= self.cols) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.cols,
            });
        }
        let mut out = BinaryMatrix::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                if self.get(r, c) {
                    out.set(r, j, true);
                }
            }
        }
        Ok(out)
    }

    /// `H c^T` over GF(2).
    pub fn syndrome(&self, c: &BinaryVector) -> Result<BinaryVector> {
        if c.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: c.len(),
            });
        }
        let mut s = BinaryVector::zeros(self.rows);
        for r in 0..self.rows {
            let parity: u32 = self
                .row_words(r)
                .iter()
                .zip(c.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            if parity & 1 == 1 {
                s.set(r, true);
            }
        }
        Ok(s)
    }

    /// True iff every row has even overlap with `c`.
    pub fn is_codeword(&self, c: &BinaryVector) -> bool {
        c.len() == self.cols
            && (0..self.rows).all(|r| {
                self.row_words(r)
                    .iter()
                    .zip(c.words())
                    .map(|(a, b)| (a & b).count_ones())
                    .sum::<u32>()
                    & 1
                    == 0
            })
    }

    /// `u G` for a row vector `u` of length `rows`.
    pub fn left_mul(&self, u: &BinaryVector) -> Result<BinaryVector> {
        if u.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                actual: u.len(),
            });
        }
        let mut out = BinaryVector::zeros(self.cols);
        for r in u.iter_ones() {
            for (o, w) in out.words.iter_mut().zip(self.row_words(r)) {
                *o ^= w;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let mut t = BinaryMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &BinaryMatrix) -> Result<BinaryMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(BinaryMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            wpr: self.wpr,
            data,
        })
    }

    /// Row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<BinaryMatrix> {
        check_permutation(perm, self.rows)?;
        let mut out = BinaryMatrix::zeros(self.rows, self.cols);
        for (i, &p) in perm.iter().enumerate() {
            out.row_words_mut(i).copy_from_slice(self.row_words(p));
        }
        Ok(out)
    }

    /// Column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<BinaryMatrix> {
        check_permutation(perm, self.cols)?;
        let mut out = BinaryMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (j, &p) in perm.iter().enumerate() {
                if self.get(r, p) {
                    out.set(r, j, true);
                }
            }
        }
        Ok(out)
    }

    /// Drops repeated rows, keeping the first occurrence of each.
    pub fn dedup_rows(&self) -> BinaryMatrix {
        let mut seen = std::collections::HashSet::new();
        let kept: Vec<BinaryVector> = self.iter_rows().filter(|r| seen.insert(r.clone())).collect();
        if kept.is_empty() {
            return BinaryMatrix::zeros(0, self.cols);
        }
        BinaryMatrix::from_rows(&kept).expect("rows share a length")
    }

    /// True iff both matrices span the same row space.
    pub fn same_row_space(&self, other: &BinaryMatrix) -> bool {
        if self.cols != other.cols {
            return false;
        }
        let r = self.rank();
        r == other.rank() && self.vstack(other).map(|s| s.rank() == r).unwrap_or(false)
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} for {} elements",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!("entry {p} repeated or out of range")));
        }
        seen[p] = true;
    }
    Ok(())
}

impl fmt::Display for BinaryMatrix {
    /// Text format: `"m n"` on the first line, then one line of `n` symbols per row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "{}", self.row(r))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "\n  {}", self.row(r))?;
        }
        if self.rows > 8 {
            write!(f, "\n  ...")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `m n` header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("bad header: {e}"),
            })?;
        let [m, n] = dims[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: "header must contain exactly two integers".into(),
            });
        };
        let mut out = BinaryMatrix::zeros(m, n);
        let mut r = 0;
        for (lineno, line) in lines {
            if r == m {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("more than {m} rows"),
                });
            }
            let v: BinaryVector = line.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: "row must consist of 0/1 symbols".into(),
            })?;
            if v.len() != n {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("row has {} symbols, expected {n}", v.len()),
                });
            }
            out.row_words_mut(r).copy_from_slice(v.words());
            r += 1;
        }
        if r != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {m} rows, found {r}"),
            });
        }
        Ok(out)
    }
}

/// A generator matrix brought to systematic form.
///
/// `matrix` keeps the original column order and carries an identity on the
/// `info_positions` columns, so encoding `u` places `u[i]` at codeword
/// position `info_positions[i]`. `permutation` lists the original column of
/// each column in the `[I_k | P]` layout returned by [`Self::permuted_form`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystematicGenerator {
    pub matrix: BinaryMatrix,
    pub info_positions: Vec<usize>,
    pub permutation: Vec<usize>,
}

impl SystematicGenerator {
    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    /// The `[I_k | P]` matrix obtained by applying `permutation` to the columns.
    pub fn permuted_form(&self) -> BinaryMatrix {
        self.matrix
            .permute_columns(&self.permutation)
            .expect("permutation built internally")
    }

    pub fn encode(&self, info: &BinaryVector) -> Result<BinaryVector> {
        self.matrix.left_mul(info)
    }

    pub fn extract_info(&self, codeword: &BinaryVector) -> BinaryVector {
        let mut u = BinaryVector::zeros(self.k());
        for (i, &p) in self.info_positions.iter().enumerate() {
            if codeword.get(p) {
                u.set(i, true);
            }
        }
        u
    }
}

/// Row-reduces a full-rank generator matrix to systematic form.
pub fn systematic_generator(g: &BinaryMatrix) -> Result<SystematicGenerator> {
    let (reduced, pivots) = g.row_reduced();
    if pivots.len() != g.rows() {
        return Err(Error::RankDeficient {
            rank: pivots.len(),
            expected: g.rows(),
        });
    }
    let mut is_pivot = vec![false; g.cols()];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut permutation = pivots.clone();
    permutation.extend((0..g.cols()).filter(|&c| !is_pivot[c]));
    Ok(SystematicGenerator {
        matrix: reduced,
        info_positions: pivots,
        permutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> BinaryMatrix {
        let bits: Vec<u8> = (0..m * n).map(|_| rng.random_range(0..2)).collect();
        BinaryMatrix::from_dense(m, n, &bits).unwrap()
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> BinaryVector {
        let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        BinaryVector::from_bits(&bits)
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(BinaryMatrix::identity(12).rank(), 12);
        assert_eq!(BinaryMatrix::zeros(5, 7).rank(), 0);
    }

    #[test]
    fn vector_text_round_trip() {
        let v: BinaryVector = "110101001100100000001000".parse().unwrap();
        assert_eq!(v.len(), 24);
        assert_eq!(v.weight(), 8);
        assert_eq!(v.to_string(), "110101001100100000001000");
        assert!("10a1".parse::<BinaryVector>().is_err());
    }

    #[test]
    fn lexicographic_order_follows_printed_string() {
        let a: BinaryVector = "0111".parse().unwrap();
        let b: BinaryVector = "1000".parse().unwrap();
        assert!(a < b);
        let long = BinaryVector::from_positions(100, [70]).unwrap();
        let longer = BinaryVector::from_positions(100, [3]).unwrap();
        assert!(long < longer);
    }

    #[test]
    fn matrix_text_format() {
        let m: BinaryMatrix = "3 7\n1111000\n0111100\n0011110\n".parse().unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 7));
        assert_eq!(m.to_string(), "3 7\n1111000\n0111100\n0011110\n");
        assert!("2 3\n101\n".parse::<BinaryMatrix>().is_err());
        assert!("1 3\n1010\n".parse::<BinaryMatrix>().is_err());
        assert!("x\n".parse::<BinaryMatrix>().is_err());
    }

    #[test]
    fn restrict_columns_cases() {
        // staircase with x placeholders set to 1
        let m: BinaryMatrix = "3 7\n1111100\n0111110\n0011111\n".parse().unwrap();
        assert_eq!(m.restrict_columns(&(0..7).collect::<Vec<_>>()).unwrap(), m);
        let empty = m.restrict_columns(&[]).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (3, 0));
        let left = m.restrict_columns(&[1, 0]).unwrap();
        assert_eq!(left.to_string(), "3 2\n11\n01\n00\n");
        assert!(matches!(
            m.restrict_columns(&[7]),
            Err(Error::IndexOutOfRange { index: 7, len: 7 })
        ));
    }

    #[test]
    fn syndrome_errors_and_zero_word() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_matrix(&mut rng, 6, 10);
        assert!(h.syndrome(&BinaryVector::zeros(10)).unwrap().is_zero());
        assert!(h.syndrome(&BinaryVector::zeros(9)).is_err());
    }

    #[test]
    fn syndrome_matches_naive_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5, 63, 64, 65, 130] {
            let h = random_matrix(&mut rng, 9, n);
            let c = random_vector(&mut rng, n);
            let s = h.syndrome(&c).unwrap();
            for r in 0..9 {
                let naive = (0..n).filter(|&j| h.get(r, j) && c.get(j)).count() % 2 == 1;
                assert_eq!(s.get(r), naive);
            }
        }
    }

    #[test]
    fn systematic_already_systematic() {
        let g: BinaryMatrix = "3 5\n10011\n01010\n00111\n".parse().unwrap();
        let sys = systematic_generator(&g).unwrap();
        assert_eq!(sys.matrix, g);
        assert_eq!(sys.permutation, vec![0, 1, 2, 3, 4]);
        assert_eq!(sys.permuted_form(), g);
    }

    #[test]
    fn systematic_rejects_rank_deficient() {
        let g: BinaryMatrix = "3 5\n10011\n01010\n11001\n".parse().unwrap();
        assert!(matches!(
            systematic_generator(&g),
            Err(Error::RankDeficient { rank: 2, expected: 3 })
        ));
    }

    #[test]
    fn systematic_with_column_permutation() {
        let g: BinaryMatrix = "2 4\n0110\n0011\n".parse().unwrap();
        let sys = systematic_generator(&g).unwrap();
        assert_eq!(sys.info_positions, vec![1, 2]);
        let p = sys.permuted_form();
        assert!(p.get(0, 0) && !p.get(0, 1) && !p.get(1, 0) && p.get(1, 1));
        let u: BinaryVector = "11".parse().unwrap();
        let c = sys.encode(&u).unwrap();
        assert_eq!(sys.extract_info(&c), u);
        assert!(g.same_row_space(&sys.matrix));
    }

    #[test]
    fn null_space_is_orthogonal_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = random_matrix(&mut rng, 7, 19);
            let h = g.null_space();
            assert_eq!(h.rows(), 19 - g.rank());
            assert_eq!(h.rank(), h.rows());
            for r in 0..g.rows() {
                assert!(h.syndrome(&g.row(r)).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn dedup_and_vstack() {
        let a: BinaryMatrix = "2 3\n101\n011\n".parse().unwrap();
        let s = a.vstack(&a).unwrap();
        assert_eq!(s.rows(), 4);
        assert_eq!(s.dedup_rows(), a);
    }

    proptest! {
        #[test]
        fn rank_invariant_under_permutations(seed in any::<u64>(), m in 1usize..12, n in 1usize..80) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, m, n);
            let mut rp: Vec<usize> = (0..m).collect();
            rp.shuffle(&mut rng);
            let mut cp: Vec<usize> = (0..n).collect();
            cp.shuffle(&mut rng);
            let r = a.rank();
            prop_assert!(r <= m.min(n));
            prop_assert_eq!(a.permute_rows(&rp).unwrap().rank(), r);
            prop_assert_eq!(a.permute_columns(&cp).unwrap().rank(), r);
            prop_assert_eq!(a.transpose().rank(), r);
        }

        #[test]
        fn systematic_spans_same_row_space(seed in any::<u64>(), k in 1usize..10, extra in 0usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = k + extra;
            let g = random_matrix(&mut rng, k, n);
            match systematic_generator(&g) {
                Ok(sys) => {
                    let stacked = g.vstack(&sys.matrix).unwrap();
                    prop_assert_eq!(stacked.rank(), g.rank());
                    prop_assert_eq!(sys.k(), k);
                }
                Err(Error::RankDeficient { rank, .. }) => prop_assert_eq!(rank, g.rank()),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn syndrome_is_linear(seed in any::<u64>(), m in 1usize..10, n in 1usize..150) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_matrix(&mut rng, m, n);
            let a = random_vector(&mut rng, n);
            let b = random_vector(&mut rng, n);
            let lhs = h.syndrome(&a.xor(&b)).unwrap();
            let rhs = h.syndrome(&a).unwrap().xor(&h.syndrome(&b).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }
}

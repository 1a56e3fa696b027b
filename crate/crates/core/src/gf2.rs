//! Dense GF(2) vectors and row-reduced bases.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

/// A fixed-length vector over GF(2), stored as packed 64-bit words.
///
/// Unused high bits of the last word are always zero, so derived equality,
/// ordering and hashing agree with bitwise equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for w in v.words.iter_mut() {
            *w = u64::MAX;
        }
        v.mask_tail();
        v
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, idx: I) -> Result<Self> {
        let mut v = Self::zeros(len);
        for i in idx {
            if i >= len {
                return Err(Error::InvalidIndex(i));
            }
            v.toggle(i);
        }
        Ok(v)
    }

    /// Builds a vector from the low `len` bits of `key` (bit `i` = entry `i`).
    pub fn from_key(len: usize, key: u64) -> Self {
        assert!(len <= 64, "key encoding supports at most 64 entries");
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = key;
            v.mask_tail();
        }
        v
    }

    pub fn to_key(&self) -> u64 {
        assert!(self.len <= 64, "key encoding supports at most 64 entries");
        self.words.first().copied().unwrap_or(0)
    }

    fn mask_tail(&mut self) {
        let r = self.len % WORD;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
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
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let m = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= m;
        } else {
            self.words[i / WORD] &= !m;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of vectors on different hosts");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn or_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn and_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Pointwise `self <= other`.
    pub fn is_subset_of(&self, other: &BitVec) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * WORD + w.trailing_zeros() as usize)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    /// Restriction to the listed coordinates, in the listed order.
    pub fn project(&self, window: &[usize]) -> Result<BitVec> {
        let mut out = BitVec::zeros(window.len());
        for (j, &i) in window.iter().enumerate() {
            if i >= self.len {
                return Err(Error::InvalidIndex(i));
            }
            if self.get(i) {
                out.set(j, true);
            }
        }
        Ok(out)
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn parse_bit_string(s: &str) -> Result<BitVec> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(Error::Parse(format!("bad bit character `{c}`"))),
            }
        }
        Ok(v)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({})", self.to_bit_string())
    }
}

/// XOR of a list of vectors on a common host of `len` coordinates.
pub fn xor_sum(len: usize, vs: &[BitVec]) -> Result<BitVec> {
    let mut acc = BitVec::zeros(len);
    for v in vs {
        if v.len() != len {
            return Err(Error::HostMismatch(len, v.len()));
        }
        acc.xor_assign(v);
    }
    Ok(acc)
}

/// A basis in reduced row echelon form.
///
/// Rows are kept sorted by pivot (lowest set coordinate) and every pivot
/// column is zero in all other rows, which makes the representation of a
/// subspace canonical: two bases span the same space iff they are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Basis {
    len: usize,
    rows: Vec<BitVec>,
    pivots: Vec<usize>,
}

impl Basis {
    pub fn new(len: usize) -> Self {
        Basis {
            len,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn from_vectors<'a, I: IntoIterator<Item = &'a BitVec>>(len: usize, vs: I) -> Result<Self> {
        let mut b = Basis::new(len);
        for v in vs {
            b.insert(v)?;
        }
        Ok(b)
    }

    pub fn ambient_len(&self) -> usize {
        self.len
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the basis; the result is zero iff `v` is in the span.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut r = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_assign(row);
            }
        }
        r
    }

    pub fn contains(&self, v: &BitVec) -> Result<bool> {
        if v.len() != self.len {
            return Err(Error::HostMismatch(self.len, v.len()));
        }
        Ok(self.reduce(v).is_zero())
    }

    /// Adds `v` to the spanning set; returns whether the rank grew.
    pub fn insert(&mut self, v: &BitVec) -> Result<bool> {
        if v.len() != self.len {
            return Err(Error::HostMismatch(self.len, v.len()));
        }
        let r = self.reduce(v);
        let Some(p) = r.first_one() else {
            return Ok(false);
        };
        for row in self.rows.iter_mut() {
            if row.get(p) {
                row.xor_assign(&r);
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, r);
        Ok(true)
    }

    pub fn is_subspace_of(&self, other: &Basis) -> bool {
        self.len == other.len && self.rows.iter().all(|r| other.reduce(r).is_zero())
    }

    /// All `2^rank` elements of the span, in coin-vector order.
    pub fn span_elements(&self) -> Result<Vec<BitVec>> {
        if self.rank() > 24 {
            return Err(Error::StateSpaceTooLarge {
                bits: self.rank(),
                cap: 24,
            });
        }
        let mut out = Vec::with_capacity(1 << self.rank());
        out.push(BitVec::zeros(self.len));
        for row in &self.rows {
            let n = out.len();
            for i in 0..n {
                let mut v = out[i].clone();
                v.xor_assign(row);
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Row-reduced basis of the span of `vs`.
pub fn gaussian_basis(len: usize, vs: &[BitVec]) -> Result<Basis> {
    Basis::from_vectors(len, vs)
}

/// Basis of the space `{ v|window : v in span(basis) }`.
pub fn project_space(basis: &Basis, window: &[usize]) -> Result<Basis> {
    let mut out = Basis::new(window.len());
    for row in basis.rows() {
        out.insert(&row.project(window)?)?;
    }
    Ok(out)
}

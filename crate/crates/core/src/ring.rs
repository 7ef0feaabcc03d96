//! Arithmetic in `F2[x]/(x^r + 1)`.
//!
//! Elements come in two shapes: [`CirculantPoly`] keeps the sorted support
//! (the natural form for keys, near-codewords and sparse errors) and
//! [`DenseBits`] packs the coefficients into machine words with a cached
//! Hamming weight (the natural form for syndromes inside decoders).

use std::fmt;

use crate::error::{Error, Result};

/// Below this many terms in the sparser operand, [`CirculantPoly::mul`]
/// accumulates term-by-term instead of XORing word-level rotations.
const SPARSE_MUL_CUTOFF: usize = 64;

/// Sparse element of `F2[x]/(x^r + 1)`: the set of exponents with a nonzero
/// coefficient, kept sorted ascending.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CirculantPoly {
    r: usize,
    support: Vec<u32>,
}

impl CirculantPoly {
    pub fn zero(r: usize) -> Self {
        assert!(r > 0, "ring size must be positive");
        Self {
            r,
            support: Vec::new(),
        }
    }

    pub fn one(r: usize) -> Self {
        Self::monomial(r, 0).expect("0 < r")
    }

    pub fn monomial(r: usize, k: usize) -> Result<Self> {
        if k >= r {
            return Err(Error::OutOfRange {
                what: "exponent",
                value: k,
                bound: r,
            });
        }
        Ok(Self {
            r,
            support: vec![k as u32],
        })
    }

    /// Builds a polynomial from a list of exponents. The list may be in any
    /// order but must not repeat an exponent.
    pub fn from_support(r: usize, exponents: impl IntoIterator<Item = usize>) -> Result<Self> {
        if r == 0 || r > u32::MAX as usize {
            return Err(Error::Parameter(format!("ring size {r} not supported")));
        }
        let mut support = Vec::new();
        for e in exponents {
            if e >= r {
                return Err(Error::OutOfRange {
                    what: "exponent",
                    value: e,
                    bound: r,
                });
            }
            support.push(e as u32);
        }
        support.sort_unstable();
        if let Some(w) = support.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Support(format!("exponent {} repeated", w[0])));
        }
        Ok(Self { r, support })
    }

    /// Internal constructor for supports already known to be sorted, distinct and `< r`.
    pub(crate) fn from_sorted_unchecked(r: usize, support: Vec<u32>) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(support.last().is_none_or(|&e| (e as usize) < r));
        Self { r, support }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn contains(&self, exponent: usize) -> bool {
        exponent < self.r && self.support.binary_search(&(exponent as u32)).is_ok()
    }

    fn check_same_ring(&self, other: &Self) -> Result<()> {
        if self.r != other.r {
            return Err(Error::Dimension {
                left: self.r,
                right: other.r,
            });
        }
        Ok(())
    }

    /// `x^k * self`.
    pub fn shift(&self, k: usize) -> Result<Self> {
        if k >= self.r {
            return Err(Error::OutOfRange {
                what: "shift",
                value: k,
                bound: self.r,
            });
        }
        let r = self.r as u32;
        let k = k as u32;
        // Exponents that wrap around land below the ones that don't, so the
        // result is two already-sorted runs concatenated.
        let split = self.support.partition_point(|&a| a < r - k);
        let mut support = Vec::with_capacity(self.support.len());
        support.extend(self.support[split..].iter().map(|&a| a + k - r));
        support.extend(self.support[..split].iter().map(|&a| a + k));
        Ok(Self { r: self.r, support })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_ring(other)?;
        let (a, b) = (&self.support, &other.support);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(Self {
            r: self.r,
            support: out,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_ring(other)?;
        let (small, large) = if self.weight() <= other.weight() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = DenseBits::zeros(self.r);
        if small.weight() <= SPARSE_MUL_CUTOFF {
            let r = self.r;
            for &a in &small.support {
                for &b in &large.support {
                    let e = a as usize + b as usize;
                    acc.flip(if e >= r { e - r } else { e });
                }
            }
        } else {
            let dense = large.to_dense();
            for &a in &small.support {
                acc.xor_rotated(&dense, a as usize);
            }
        }
        Ok(Self::from_dense(&acc))
    }

    /// `self^2`, which in characteristic 2 maps every exponent `a` to `2a mod r`.
    pub fn square(&self) -> Result<Self> {
        if self.r.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "squaring needs an odd ring size, got r = {}",
                self.r
            )));
        }
        let r = self.r as u64;
        let mut support: Vec<u32> = self
            .support
            .iter()
            .map(|&a| ((2 * a as u64) % r) as u32)
            .collect();
        support.sort_unstable();
        Ok(Self { r: self.r, support })
    }

    pub fn to_dense(&self) -> DenseBits {
        let mut d = DenseBits::zeros(self.r);
        for &a in &self.support {
            d.flip(a as usize);
        }
        d
    }

    pub fn from_dense(d: &DenseBits) -> Self {
        Self {
            r: d.len(),
            support: d.support(),
        }
    }
}

impl fmt::Debug for CirculantPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CirculantPoly(r={}, {self})", self.r)
    }
}

impl fmt::Display for CirculantPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.support.is_empty() {
            return f.write_str("0");
        }
        for (n, &a) in self.support.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            match a {
                0 => f.write_str("1")?,
                1 => f.write_str("x")?,
                _ => write!(f, "x^{a}")?,
            }
        }
        Ok(())
    }
}

/// Fixed-length bit vector packed into `u64` words, with the Hamming weight
/// cached and maintained across every mutation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DenseBits {
    len: usize,
    words: Vec<u64>,
    weight: usize,
}

impl DenseBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
            weight: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn is_zero(&self) -> bool {
        self.weight == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    /// Flips bit `i` and returns its new value.
    #[inline]
    pub fn flip(&mut self, i: usize) -> bool {
        debug_assert!(i < self.len);
        let w = &mut self.words[i >> 6];
        *w ^= 1 << (i & 63);
        let now = (*w >> (i & 63)) & 1 == 1;
        if now {
            self.weight += 1;
        } else {
            self.weight -= 1;
        }
        now
    }

    /// Flips every listed position.
    pub fn xor_support(&mut self, positions: &[u32]) {
        for &p in positions {
            self.flip(p as usize);
        }
    }

    pub fn xor_assign(&mut self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::Dimension {
                left: self.len,
                right: other.len,
            });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.recount();
        Ok(())
    }

    /// XORs the cyclic rotation of `other` by `k` positions into `self`
    /// (bit `j` of `other` lands on `(j + k) mod len`).
    pub(crate) fn xor_rotated(&mut self, other: &Self, k: usize) {
        assert_eq!(self.len, other.len);
        debug_assert!(k < self.len);
        if k == 0 {
            for (a, b) in self.words.iter_mut().zip(&other.words) {
                *a ^= b;
            }
        } else {
            xor_shl(&mut self.words, &other.words, k, self.len);
            xor_shr(&mut self.words, &other.words, self.len - k);
        }
        self.recount();
    }

    /// Number of set bits among `positions`.
    #[inline]
    pub fn count_at(&self, positions: &[u32]) -> usize {
        positions.iter().filter(|&&p| self.get(p as usize)).count()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn support(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.weight);
        out.extend(self.iter_ones().map(|i| i as u32));
        out
    }

    fn recount(&mut self) {
        self.weight = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    #[cfg(test)]
    pub(crate) fn recounted_weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl fmt::Debug for DenseBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DenseBits(len={}, weight={}, support={:?})",
            self.len,
            self.weight,
            self.support()
        )
    }
}

/// `dst ^= (src << k)` truncated to `len` bits.
fn xor_shl(dst: &mut [u64], src: &[u64], k: usize, len: usize) {
    let (ws, bs) = (k / 64, k % 64);
    for i in ws..dst.len() {
        let j = i - ws;
        let mut v = src[j] << bs;
        if bs > 0 && j > 0 {
            v |= src[j - 1] >> (64 - bs);
        }
        dst[i] ^= v;
    }
    let tail = len % 64;
    if tail != 0 {
        if let Some(last) = dst.last_mut() {
            *last &= (1u64 << tail) - 1;
        }
    }
}

/// `dst ^= src >> k`.
fn xor_shr(dst: &mut [u64], src: &[u64], k: usize) {
    let (ws, bs) = (k / 64, k % 64);
    let n = src.len();
    for (i, d) in dst.iter_mut().enumerate() {
        let j = i + ws;
        if j >= n {
            break;
        }
        let mut v = src[j] >> bs;
        if bs > 0 && j + 1 < n {
            v |= src[j + 1] << (64 - bs);
        }
        *d ^= v;
    }
}

//! The near-codeword syndrome table.
//!
//! A double-circulant code has `2r` near-codewords `m_i`: the key columns
//! `(x^i * h1, 0)` for `i < r` and `(0, x^(i-r) * h2)` for `i >= r`. Their
//! syndromes are `x^i * h1^2` and `x^(i-r) * h2^2`, which for odd `r` have
//! weight exactly `v`. The table stores each syndrome as its sorted support
//! (`v` exponents) next to the originating index, and keeps the records in
//! lexicographic order so a lookup is a binary search over `2r` records.

use std::cmp::Ordering;
use std::io::{Read, Write};

use crate::code::{ErrorVector, QcMdpcCode, Syndrome};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"QCNCTBL\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NcSyndromeTable {
    r: usize,
    v: usize,
    /// `2r` records of `v` exponents each, flattened, in sorted record order.
    supports: Vec<u32>,
    /// `indices[k]` is the near-codeword index of record `k`.
    indices: Vec<u32>,
}

impl NcSyndromeTable {
    /// Builds the table with one squaring per block and `2r` shifts.
    pub fn build(code: &QcMdpcCode) -> Result<Self> {
        let (r, v) = (code.r(), code.v());
        let squares = [code.h1().square()?, code.h2().square()?];
        let mut flat = Vec::with_capacity(2 * r * v);
        for sq in &squares {
            if sq.weight() != v {
                return Err(Error::Parameter(format!(
                    "squared key block has weight {} instead of {v}",
                    sq.weight()
                )));
            }
            for i in 0..r {
                flat.extend_from_slice(sq.shift(i)?.support());
            }
        }
        let record = |k: u32| &flat[k as usize * v..(k as usize + 1) * v];
        let mut order: Vec<u32> = (0..(2 * r) as u32).collect();
        order.sort_unstable_by(|&a, &b| record(a).cmp(record(b)).then(a.cmp(&b)));
        if let Some(w) = order.windows(2).find(|w| record(w[0]) == record(w[1])) {
            return Err(Error::DuplicateSyndrome {
                first: w[0] as usize,
                second: w[1] as usize,
            });
        }
        let mut supports = Vec::with_capacity(flat.len());
        for &k in &order {
            supports.extend_from_slice(record(k));
        }
        Ok(Self {
            r,
            v,
            supports,
            indices: order,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn record(&self, k: usize) -> &[u32] {
        &self.supports[k * self.v..(k + 1) * self.v]
    }

    /// Records in table order as `(syndrome support, near-codeword index)`.
    pub fn entries(&self) -> impl Iterator<Item = (&[u32], usize)> + '_ {
        (0..self.len()).map(|k| (self.record(k), self.indices[k] as usize))
    }

    /// Index of the near-codeword whose syndrome equals `s`, if any.
    ///
    /// Callers are expected to gate on `wt(s) == v` first; other weights can
    /// never match and return `None` without searching.
    pub fn lookup(&self, s: &Syndrome) -> Option<usize> {
        debug_assert_eq!(s.len(), self.r);
        if s.weight() != self.v {
            return None;
        }
        self.lookup_support(&s.support())
    }

    /// Binary search on a sorted syndrome support.
    pub fn lookup_support(&self, support: &[u32]) -> Option<usize> {
        if support.len() != self.v {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match self.record(mid).cmp(support) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(self.indices[mid] as usize),
            }
        }
        None
    }

    /// Writes the cache format: magic, version, `r`, `v`, then `2r` records
    /// of `v` exponents and the index, all little-endian `u32`, sorted.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for x in [VERSION, self.r as u32, self.v as u32] {
            w.write_all(&x.to_le_bytes())?;
        }
        for k in 0..self.len() {
            for &e in self.record(k) {
                w.write_all(&e.to_le_bytes())?;
            }
            w.write_all(&self.indices[k].to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a cache file, re-validating record weights, sort order and the
    /// index set. Use [`NcSyndromeTable::matches_code`] to tie it to a key.
    pub fn read_from<R: Read>(mut rd: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        rd.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::TableFormat("bad magic".into()));
        }
        let mut word = || -> Result<u32> {
            let mut b = [0u8; 4];
            rd.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let version = word()?;
        if version != VERSION {
            return Err(Error::TableFormat(format!("unsupported version {version}")));
        }
        let (r, v) = (word()? as usize, word()? as usize);
        if r == 0 || v == 0 || v >= r {
            return Err(Error::TableFormat(format!(
                "bad dimensions r = {r}, v = {v}"
            )));
        }
        let mut supports = Vec::with_capacity(2 * r * v);
        let mut indices = Vec::with_capacity(2 * r);
        let mut seen = vec![false; 2 * r];
        for k in 0..2 * r {
            let start = supports.len();
            for _ in 0..v {
                supports.push(word()?);
            }
            let rec = &supports[start..];
            if rec.windows(2).any(|w| w[0] >= w[1]) || rec[v - 1] as usize >= r {
                return Err(Error::TableFormat(format!(
                    "record {k} is not a weight-{v} support"
                )));
            }
            if k > 0 && supports[start - v..start] >= *rec {
                return Err(Error::TableFormat(format!("record {k} out of order")));
            }
            let idx = word()?;
            if idx as usize >= 2 * r || std::mem::replace(&mut seen[idx as usize], true) {
                return Err(Error::TableFormat(format!(
                    "record {k} has bad index {idx}"
                )));
            }
            indices.push(idx);
        }
        let mut trailing = [0u8; 1];
        if rd.read(&mut trailing)? != 0 {
            return Err(Error::TableFormat("trailing bytes".into()));
        }
        Ok(Self {
            r,
            v,
            supports,
            indices,
        })
    }

    pub fn matches_code(&self, code: &QcMdpcCode) -> bool {
        Self::build(code).is_ok_and(|t| &t == self)
    }

    /// Width in bits of one packed field: enough for any exponent or index.
    pub fn packed_field_bits(&self) -> usize {
        (usize::BITS - (2 * self.r - 1).leading_zeros()) as usize
    }

    /// Bit-packed image of the records (`v` exponents + index per record,
    /// each field [`packed_field_bits`](Self::packed_field_bits) wide,
    /// LSB-first). This is the compact form whose size the memory bound
    /// refers to; the cache file uses plain `u32` fields instead.
    pub fn to_packed(&self) -> Vec<u8> {
        let width = self.packed_field_bits();
        let fields = self.len() * (self.v + 1);
        let mut out = vec![0u8; (fields * width).div_ceil(8)];
        let mut bit = 0usize;
        let mut put = |x: u32| {
            for b in 0..width {
                if (x >> b) & 1 == 1 {
                    out[(bit + b) / 8] |= 1 << ((bit + b) % 8);
                }
            }
            bit += width;
        };
        for k in 0..self.len() {
            self.record(k).iter().for_each(|&e| put(e));
            put(self.indices[k]);
        }
        out
    }

    pub fn from_packed(r: usize, v: usize, bytes: &[u8]) -> Result<Self> {
        let mut shell = Self {
            r,
            v,
            supports: Vec::new(),
            indices: Vec::new(),
        };
        let width = shell.packed_field_bits();
        if bytes.len() != (2 * r * (v + 1) * width).div_ceil(8) {
            return Err(Error::TableFormat("packed length mismatch".into()));
        }
        let mut bit = 0usize;
        let mut get = || {
            let mut x = 0u32;
            for b in 0..width {
                x |= (((bytes[(bit + b) / 8] >> ((bit + b) % 8)) & 1) as u32) << b;
            }
            bit += width;
            x
        };
        for _ in 0..2 * r {
            for _ in 0..v {
                shell.supports.push(get());
            }
            shell.indices.push(get());
        }
        Ok(shell)
    }
}

/// The near-codeword `m_i` as an error vector.
pub fn nc_error(code: &QcMdpcCode, nc_index: usize) -> Result<ErrorVector> {
    let r = code.r();
    if nc_index >= 2 * r {
        return Err(Error::OutOfRange {
            what: "near-codeword index",
            value: nc_index,
            bound: 2 * r,
        });
    }
    let (b, i) = (nc_index / r, nc_index % r);
    let offset = (b * r) as u32;
    let col = code.block(b).shift(i)?;
    Ok(ErrorVector::from_sorted_unchecked(
        r,
        col.support().iter().map(|&a| a + offset).collect(),
    ))
}

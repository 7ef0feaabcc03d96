//! Double-circulant QC-MDPC codes.
//!
//! The parity-check matrix is `H = (H1, H2)` with two `r x r` circulant
//! blocks of column weight `v`. Coordinate `j` of block `b` (global index
//! `b*r + j`) has column support `Supp(x^j * h_b)`, so the syndrome of an
//! error `(e1, e2)` is the polynomial `e1*h1 + e2*h2`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{CirculantPoly, DenseBits};

/// Syndromes live in the dense representation: decoders flip `v` bits at a
/// time and need the weight after each batch.
pub type Syndrome = DenseBits;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QcMdpcCode {
    r: usize,
    v: usize,
    h: [CirculantPoly; 2],
}

/// On-disk form of a code. Supports are written sorted.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub r: usize,
    pub v: usize,
    pub h1_support: Vec<usize>,
    pub h2_support: Vec<usize>,
}

impl QcMdpcCode {
    pub fn new(h1: CirculantPoly, h2: CirculantPoly) -> Result<Self> {
        let r = h1.r();
        if h2.r() != r {
            return Err(Error::Dimension {
                left: r,
                right: h2.r(),
            });
        }
        let v = h1.weight();
        if h2.weight() != v {
            return Err(Error::Parameter(format!(
                "blocks have different weights {} and {}",
                v,
                h2.weight()
            )));
        }
        check_params(r, v)?;
        Ok(Self { r, v, h: [h1, h2] })
    }

    /// Draws both blocks as independent uniform `v`-subsets of `[0, r)`.
    pub fn random<R: Rng + ?Sized>(r: usize, v: usize, rng: &mut R) -> Result<Self> {
        check_params(r, v)?;
        let mut block = || {
            let s = rand::seq::index::sample(rng, r, v).into_vec();
            CirculantPoly::from_support(r, s)
        };
        let h1 = block()?;
        let h2 = block()?;
        Self::new(h1, h2)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn v(&self) -> usize {
        self.v
    }

    /// Code length `2r`.
    pub fn n(&self) -> usize {
        2 * self.r
    }

    pub fn h1(&self) -> &CirculantPoly {
        &self.h[0]
    }

    pub fn h2(&self) -> &CirculantPoly {
        &self.h[1]
    }

    /// Block polynomial, `block` in `{0, 1}`.
    pub fn block(&self, block: usize) -> &CirculantPoly {
        &self.h[block]
    }

    fn check_coordinate(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::OutOfRange {
                what: "coordinate",
                value: i,
                bound: self.n(),
            });
        }
        Ok(())
    }

    pub fn column_support(&self, i: usize) -> Result<CirculantPoly> {
        self.check_coordinate(i)?;
        self.h[i / self.r].shift(i % self.r)
    }

    /// XORs column `i` into `s` without materializing it.
    #[inline]
    pub(crate) fn xor_column(&self, i: usize, s: &mut Syndrome) {
        let (b, j) = (i / self.r, i % self.r);
        let r = self.r;
        for &a in self.h[b].support() {
            let p = a as usize + j;
            s.flip(if p >= r { p - r } else { p });
        }
    }

    pub fn syndrome(&self, e: &ErrorVector) -> Result<Syndrome> {
        if e.r() != self.r {
            return Err(Error::Dimension {
                left: self.r,
                right: e.r(),
            });
        }
        let mut s = Syndrome::zeros(self.r);
        for &i in e.support() {
            self.xor_column(i as usize, &mut s);
        }
        Ok(s)
    }

    /// Unsatisfied-check counts for every coordinate.
    pub fn counters(&self, s: &Syndrome) -> Result<CounterVector> {
        if s.len() != self.r {
            return Err(Error::Dimension {
                left: self.r,
                right: s.len(),
            });
        }
        let mut values = vec![0u32; self.n()];
        self.counters_into(s, &mut values);
        Ok(CounterVector { values })
    }

    /// Recomputes counters into `out` (length `2r`) by walking the set
    /// syndrome bits and crediting the `v` columns of each block that touch
    /// them.
    pub(crate) fn counters_into(&self, s: &Syndrome, out: &mut [u32]) {
        debug_assert_eq!(out.len(), self.n());
        out.fill(0);
        let r = self.r;
        let (lo, hi) = out.split_at_mut(r);
        for p in s.iter_ones() {
            for (h, block) in self.h.iter().zip([&mut *lo, &mut *hi]) {
                for &a in h.support() {
                    let a = a as usize;
                    block[if p >= a { p - a } else { p + r - a }] += 1;
                }
            }
        }
    }

    /// Size of the intersection of the supports of columns `i` and `j`
    /// (zero on the diagonal).
    pub fn adjacency(&self, i: usize, j: usize) -> Result<usize> {
        self.check_coordinate(i)?;
        self.check_coordinate(j)?;
        if i == j {
            return Ok(0);
        }
        let a = self.column_support(i)?;
        let b = self.column_support(j)?;
        Ok(sorted_intersection_len(a.support(), b.support()))
    }

    /// Adjacency-based estimate of counter `i` for the syndrome of `e`:
    /// `v - sum a_ij` over the other error positions when `i` is in error,
    /// `sum a_ij` over all error positions otherwise. Diagnostic only.
    pub fn counter_approximation(&self, e: &ErrorVector, i: usize) -> Result<i64> {
        self.check_coordinate(i)?;
        if e.r() != self.r {
            return Err(Error::Dimension {
                left: self.r,
                right: e.r(),
            });
        }
        let mut sum = 0i64;
        for &j in e.support() {
            sum += self.adjacency(i, j as usize)? as i64;
        }
        Ok(if e.contains(i) {
            self.v as i64 - sum
        } else {
            sum
        })
    }

    pub fn to_file(&self) -> CodeFile {
        let sup = |p: &CirculantPoly| p.support().iter().map(|&a| a as usize).collect();
        CodeFile {
            r: self.r,
            v: self.v,
            h1_support: sup(&self.h[0]),
            h2_support: sup(&self.h[1]),
        }
    }

    pub fn from_file(f: &CodeFile) -> Result<Self> {
        let h1 = CirculantPoly::from_support(f.r, f.h1_support.iter().copied())?;
        let h2 = CirculantPoly::from_support(f.r, f.h2_support.iter().copied())?;
        let code = Self::new(h1, h2)?;
        if code.v != f.v {
            return Err(Error::Parameter(format!(
                "declared v = {} but supports have weight {}",
                f.v, code.v
            )));
        }
        Ok(code)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("plain struct serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn check_params(r: usize, v: usize) -> Result<()> {
    if r.is_multiple_of(2) {
        return Err(Error::Parameter(format!("r must be odd, got {r}")));
    }
    if v.is_multiple_of(2) {
        return Err(Error::Parameter(format!("v must be odd, got {v}")));
    }
    if v >= r {
        return Err(Error::Parameter(format!(
            "v = {v} must be smaller than r = {r}"
        )));
    }
    if r > u32::MAX as usize / 2 {
        return Err(Error::Parameter(format!("r = {r} too large")));
    }
    Ok(())
}

pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Sparse error over the `2r` coordinates of a double-circulant code.
/// Coordinates below `r` address block 1, the rest block 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ErrorVector {
    r: usize,
    support: Vec<u32>,
}

impl ErrorVector {
    pub fn zero(r: usize) -> Self {
        Self {
            r,
            support: Vec::new(),
        }
    }

    pub fn from_support(r: usize, coords: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = 2 * r;
        let mut support = Vec::new();
        for c in coords {
            if c >= n {
                return Err(Error::OutOfRange {
                    what: "coordinate",
                    value: c,
                    bound: n,
                });
            }
            support.push(c as u32);
        }
        support.sort_unstable();
        if let Some(w) = support.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Support(format!("coordinate {} repeated", w[0])));
        }
        Ok(Self { r, support })
    }

    pub(crate) fn from_sorted_unchecked(r: usize, support: Vec<u32>) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        Self { r, support }
    }

    /// Reads the support of a dense `2r`-bit vector.
    pub fn from_dense(r: usize, bits: &DenseBits) -> Result<Self> {
        if bits.len() != 2 * r {
            return Err(Error::Dimension {
                left: 2 * r,
                right: bits.len(),
            });
        }
        Ok(Self {
            r,
            support: bits.support(),
        })
    }

    pub fn to_dense(&self) -> DenseBits {
        let mut d = DenseBits::zeros(2 * self.r);
        d.xor_support(&self.support);
        d
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

    pub fn contains(&self, i: usize) -> bool {
        self.support.binary_search(&(i as u32)).is_ok()
    }

    /// Symmetric difference of supports.
    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.r != other.r {
            return Err(Error::Dimension {
                left: self.r,
                right: other.r,
            });
        }
        let mut d = self.to_dense();
        d.xor_support(&other.support);
        Self::from_dense(self.r, &d)
    }

    /// `(e1, e2)` as ring elements.
    pub fn blocks(&self) -> (CirculantPoly, CirculantPoly) {
        let r = self.r as u32;
        let split = self.support.partition_point(|&c| c < r);
        let e1 = self.support[..split].to_vec();
        let e2 = self.support[split..].iter().map(|&c| c - r).collect();
        (
            CirculantPoly::from_sorted_unchecked(self.r, e1),
            CirculantPoly::from_sorted_unchecked(self.r, e2),
        )
    }
}

/// Counter values `sigma_i` for all `2r` coordinates; each lies in `[0, v]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterVector {
    values: Vec<u32>,
}

impl CounterVector {
    pub fn new(values: Vec<u32>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.values[i]
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

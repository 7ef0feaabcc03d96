//! Bit-flipping decoders.
//!
//! Every variant follows the same loop: while the syndrome is nonzero and
//! the iteration budget is not spent, compute counters, choose a set of
//! positions to flip, flip them in the estimate and XOR their columns into
//! the syndrome. Variants differ only in how the flip set is chosen:
//!
//! * `bf-max` flips one position with the largest counter, ties broken
//!   uniformly at random;
//! * `mld` flips every position whose counter exceeds `v/2`;
//! * `oop-fixed` flips counters at or above a per-iteration threshold;
//! * `oop-affine` does the same with a threshold that is an affine function
//!   of the current syndrome weight.
//!
//! With `nc_aware` set, each iteration ends with a near-codeword check: if
//! the syndrome has weight exactly `v` and appears in the
//! [`NcSyndromeTable`], the matching near-codeword is added to the estimate,
//! which cancels the syndrome, and decoding stops.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::code::{CounterVector, ErrorVector, QcMdpcCode, Syndrome};
use crate::error::{Error, Result};
use crate::nc_table::{nc_error, NcSyndromeTable};
use crate::ring::DenseBits;

/// Per-iteration thresholds for the out-of-place decoder on `r = 2003`
/// codes, 15 iterations, indexed by circulant weight.
pub fn oop_thresholds_r2003(v: usize) -> Option<&'static [u32]> {
    match v {
        9 => Some(&[9, 8, 8, 8, 8, 7, 7, 7, 6, 6, 6, 6, 5, 5, 5]),
        11 => Some(&[11, 10, 10, 9, 9, 8, 8, 8, 7, 7, 7, 7, 6, 6, 6]),
        13 => Some(&[13, 12, 12, 11, 11, 10, 10, 9, 9, 8, 8, 8, 7, 7, 7]),
        15 => Some(&[15, 14, 14, 13, 13, 12, 12, 11, 11, 10, 10, 9, 9, 8, 8]),
        _ => None,
    }
}

/// Iteration budget used for `mld` runs.
pub const MLD_ITER_MAX: usize = 50;
/// Iteration budget used for `oop-fixed` runs.
pub const OOP_ITER_MAX: usize = 15;
/// Placeholder budget for `oop-affine`; not a verified BIKE constant.
pub const OOP_AFFINE_ITER_MAX: usize = 5;

/// Coefficients of `T(S) = max(ceil(a*S + b), min_thr)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineCoeffs {
    pub a: f64,
    pub b: f64,
    pub min_thr: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Variant {
    BfMax,
    Mld,
    OopFixed { thresholds: Vec<u32> },
    OopAffine(AffineCoeffs),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::BfMax => "bf-max",
            Variant::Mld => "mld",
            Variant::OopFixed { .. } => "oop-fixed",
            Variant::OopAffine(_) => "oop-affine",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderSpec {
    #[serde(flatten)]
    pub variant: Variant,
    pub iter_max: usize,
    #[serde(default)]
    pub nc_aware: bool,
    /// Also probe the table with the input syndrome before the first
    /// iteration. Off by default; the standard hook only runs after flips.
    #[serde(default)]
    pub check_before_first_iter: bool,
}

impl DecoderSpec {
    pub fn new(variant: Variant, iter_max: usize) -> Self {
        Self {
            variant,
            iter_max,
            nc_aware: false,
            check_before_first_iter: false,
        }
    }

    /// BF-Max with the customary budget of `2t` iterations.
    pub fn bf_max(t: usize) -> Self {
        Self::new(Variant::BfMax, (2 * t).max(1))
    }

    pub fn mld() -> Self {
        Self::new(Variant::Mld, MLD_ITER_MAX)
    }

    pub fn oop_fixed(thresholds: Vec<u32>) -> Self {
        let n = thresholds.len();
        Self::new(Variant::OopFixed { thresholds }, n)
    }

    pub fn oop_affine(coeffs: AffineCoeffs, iter_max: usize) -> Self {
        Self::new(Variant::OopAffine(coeffs), iter_max)
    }

    pub fn with_nc_aware(mut self, nc_aware: bool) -> Self {
        self.nc_aware = nc_aware;
        self
    }

    pub fn validate(&self, v: usize) -> Result<()> {
        if self.iter_max == 0 {
            return Err(Error::Parameter("iter_max must be at least 1".into()));
        }
        match &self.variant {
            Variant::BfMax | Variant::Mld => {}
            Variant::OopFixed { thresholds } => {
                if thresholds.len() != self.iter_max {
                    return Err(Error::Parameter(format!(
                        "oop-fixed needs one threshold per iteration: {} thresholds, iter_max = {}",
                        thresholds.len(),
                        self.iter_max
                    )));
                }
                if let Some(&t) = thresholds.iter().find(|&&t| t == 0 || t as usize > v) {
                    return Err(Error::Parameter(format!("threshold {t} outside [1, {v}]")));
                }
            }
            Variant::OopAffine(c) => {
                if !c.a.is_finite() || !c.b.is_finite() {
                    return Err(Error::Parameter(
                        "affine coefficients must be finite".into(),
                    ));
                }
                if c.min_thr == 0 || c.min_thr as usize > v {
                    return Err(Error::Parameter(format!(
                        "min_thr {} outside [1, {v}]",
                        c.min_thr
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeStatus {
    Success,
    Failure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// The returned estimate; empty on failure.
    pub estimate: ErrorVector,
    /// Loop bodies executed, including one that ended in a table hit.
    pub iterations_used: usize,
    pub nc_table_hit: bool,
    pub nc_index_hit: Option<usize>,
}

impl DecodeOutcome {
    pub fn is_success(&self) -> bool {
        self.status == DecodeStatus::Success
    }
}

/// A coordinate with the largest counter, chosen uniformly among ties.
/// `None` when every counter is zero.
pub fn select_bfmax<R: Rng + ?Sized>(counters: &CounterVector, rng: &mut R) -> Option<usize> {
    let values = counters.values();
    let max = counters.max();
    if max == 0 {
        return None;
    }
    let ties = values.iter().filter(|&&c| c == max).count();
    let pick = rng.random_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == max)
        .nth(pick)
        .map(|(i, _)| i)
}

/// Coordinates whose counter is at least `thr`.
pub fn select_threshold(counters: &CounterVector, thr: u32) -> Vec<usize> {
    counters
        .values()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= thr)
        .map(|(i, _)| i)
        .collect()
}

/// Smallest counter strictly above `v/2`.
pub fn mld_threshold(v: usize) -> u32 {
    (v / 2 + 1) as u32
}

/// `max(ceil(a*S + b), min_thr)`, capped at `v`.
pub fn affine_threshold(syndrome_weight: usize, coeffs: &AffineCoeffs, v: usize) -> u32 {
    let raw = (coeffs.a * syndrome_weight as f64 + coeffs.b).ceil();
    let raw = if raw.is_nan() || raw < 0.0 {
        0
    } else {
        raw.min(u32::MAX as f64) as u32
    };
    raw.max(coeffs.min_thr).min(v as u32)
}

pub fn decode<R: Rng + ?Sized>(
    code: &QcMdpcCode,
    s0: &Syndrome,
    spec: &DecoderSpec,
    rng: &mut R,
    table: Option<&NcSyndromeTable>,
) -> Result<DecodeOutcome> {
    decode_with_observer(code, s0, spec, rng, table, |_, _| {})
}

/// [`decode`], calling `observer(estimate, syndrome)` at every iteration
/// boundary (after the flips of an iteration and after a near-codeword
/// correction). The estimate is a dense `2r`-bit vector.
pub fn decode_with_observer<R, F>(
    code: &QcMdpcCode,
    s0: &Syndrome,
    spec: &DecoderSpec,
    rng: &mut R,
    table: Option<&NcSyndromeTable>,
    mut observer: F,
) -> Result<DecodeOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&DenseBits, &Syndrome),
{
    if s0.len() != code.r() {
        return Err(Error::Dimension {
            left: code.r(),
            right: s0.len(),
        });
    }
    spec.validate(code.v())?;
    let table = if spec.nc_aware {
        let t = table.ok_or_else(|| {
            Error::Parameter("nc_aware decoding needs a near-codeword table".into())
        })?;
        if t.r() != code.r() || t.v() != code.v() {
            return Err(Error::Parameter(
                "near-codeword table built for different parameters".into(),
            ));
        }
        Some(t)
    } else {
        None
    };

    let mut st = State {
        code,
        table,
        e_hat: DenseBits::zeros(code.n()),
        s: s0.clone(),
        iter: 0,
    };
    if spec.check_before_first_iter {
        if let Some(hit) = st.nc_hook()? {
            observer(&st.e_hat, &st.s);
            return st.finish(Some(hit));
        }
    }
    let hit = match &spec.variant {
        Variant::BfMax => st.run_bfmax(spec.iter_max, rng, &mut observer)?,
        Variant::Mld => {
            let thr = mld_threshold(code.v());
            st.run_threshold(spec.iter_max, |_, _| thr, &mut observer)?
        }
        Variant::OopFixed { thresholds } => {
            st.run_threshold(spec.iter_max, |it, _| thresholds[it], &mut observer)?
        }
        Variant::OopAffine(c) => {
            let v = code.v();
            st.run_threshold(
                spec.iter_max,
                |_, w| affine_threshold(w, c, v),
                &mut observer,
            )?
        }
    };
    st.finish(hit)
}

struct State<'a> {
    code: &'a QcMdpcCode,
    table: Option<&'a NcSyndromeTable>,
    e_hat: DenseBits,
    s: Syndrome,
    iter: usize,
}

impl State<'_> {
    /// Table probe; on a hit, adds the near-codeword to the estimate (which
    /// zeroes the syndrome) and returns its index.
    fn nc_hook(&mut self) -> Result<Option<usize>> {
        let Some(table) = self.table else {
            return Ok(None);
        };
        if self.s.weight() != self.code.v() {
            return Ok(None);
        }
        let Some(i) = table.lookup(&self.s) else {
            return Ok(None);
        };
        for &c in nc_error(self.code, i)?.support() {
            self.e_hat.flip(c as usize);
            self.code.xor_column(c as usize, &mut self.s);
        }
        debug_assert!(self.s.is_zero(), "table hit must cancel the syndrome");
        Ok(Some(i))
    }

    fn run_threshold<F, O>(
        &mut self,
        iter_max: usize,
        threshold: F,
        observer: &mut O,
    ) -> Result<Option<usize>>
    where
        F: Fn(usize, usize) -> u32,
        O: FnMut(&DenseBits, &Syndrome),
    {
        let mut counters = vec![0u32; self.code.n()];
        while !self.s.is_zero() && self.iter < iter_max {
            self.code.counters_into(&self.s, &mut counters);
            let thr = threshold(self.iter, self.s.weight());
            // Counters are frozen for the whole sweep, so flipping as we go
            // is still an out-of-place update.
            for (i, &c) in counters.iter().enumerate() {
                if c >= thr {
                    self.e_hat.flip(i);
                    self.code.xor_column(i, &mut self.s);
                }
            }
            self.iter += 1;
            let hit = self.nc_hook()?;
            observer(&self.e_hat, &self.s);
            if hit.is_some() {
                return Ok(hit);
            }
        }
        Ok(None)
    }

    fn run_bfmax<R, O>(
        &mut self,
        iter_max: usize,
        rng: &mut R,
        observer: &mut O,
    ) -> Result<Option<usize>>
    where
        R: Rng + ?Sized,
        O: FnMut(&DenseBits, &Syndrome),
    {
        let code = self.code;
        let (r, v) = (code.r(), code.v());
        let mut initial = vec![0u32; code.n()];
        code.counters_into(&self.s, &mut initial);
        let mut buckets = CounterBuckets::new(initial, v);
        let (h1, h2) = (code.h1().support(), code.h2().support());

        while !self.s.is_zero() && self.iter < iter_max {
            let Some(j) = buckets.pick_max(rng) else {
                break;
            };
            self.e_hat.flip(j);
            let (block, shift) = (j / r, j % r);
            for &a in code.block(block).support() {
                let p = a as usize + shift;
                let p = if p >= r { p - r } else { p };
                let set = self.s.flip(p);
                // Every column touching check p gains or loses one.
                for (offset, h) in [(0, h1), (r, h2)] {
                    for &b in h {
                        let b = b as usize;
                        let i = offset + if p >= b { p - b } else { p + r - b };
                        if set {
                            buckets.inc(i);
                        } else {
                            buckets.dec(i);
                        }
                    }
                }
            }
            self.iter += 1;
            let hit = self.nc_hook()?;
            observer(&self.e_hat, &self.s);
            if hit.is_some() {
                return Ok(hit);
            }
        }
        Ok(None)
    }

    fn finish(self, hit: Option<usize>) -> Result<DecodeOutcome> {
        let r = self.code.r();
        let success = self.s.is_zero();
        Ok(DecodeOutcome {
            status: if success {
                DecodeStatus::Success
            } else {
                DecodeStatus::Failure
            },
            estimate: if success {
                ErrorVector::from_dense(r, &self.e_hat)?
            } else {
                ErrorVector::zero(r)
            },
            iterations_used: self.iter,
            nc_table_hit: hit.is_some(),
            nc_index_hit: hit,
        })
    }
}

/// Counters with a histogram of their values, so BF-Max knows the maximum
/// and how many coordinates attain it without rescanning after each flip.
struct CounterBuckets {
    value: Vec<u32>,
    hist: Vec<u32>,
    max: usize,
}

impl CounterBuckets {
    fn new(value: Vec<u32>, v: usize) -> Self {
        let mut hist = vec![0u32; v + 1];
        for &c in &value {
            hist[c as usize] += 1;
        }
        let max = value.iter().copied().max().unwrap_or(0) as usize;
        Self { value, hist, max }
    }

    #[inline]
    fn inc(&mut self, i: usize) {
        let c = &mut self.value[i];
        self.hist[*c as usize] -= 1;
        *c += 1;
        self.hist[*c as usize] += 1;
        self.max = self.max.max(*c as usize);
    }

    #[inline]
    fn dec(&mut self, i: usize) {
        let c = &mut self.value[i];
        self.hist[*c as usize] -= 1;
        *c -= 1;
        self.hist[*c as usize] += 1;
    }

    /// Uniform pick among the coordinates holding the maximum.
    fn pick_max<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        while self.max > 0 && self.hist[self.max] == 0 {
            self.max -= 1;
        }
        if self.max == 0 {
            return None;
        }
        let target = self.max as u32;
        let mut m = rng.random_range(0..self.hist[self.max] as usize);
        for (k, chunk) in self.value.chunks(64).enumerate() {
            let hits = chunk.iter().filter(|&&c| c == target).count();
            if m < hits {
                let (i, _) = chunk
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c == target)
                    .nth(m)?;
                return Some(k * 64 + i);
            }
            m -= hits;
        }
        unreachable!("histogram out of sync with counters")
    }
}

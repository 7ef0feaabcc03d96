//! Error samplers and near-codeword overlap analysis.
//!
//! An error `e` of weight `t` is a `(t, u)`-almost near-codeword when its
//! largest support overlap with any near-codeword is exactly `u`; the
//! near-codewords attaining it are its close near-codewords. Bad bits are
//! error positions inside a close near-codeword, suspicious bits are
//! error-free positions inside one.

use rand::Rng;

use crate::code::{ErrorVector, QcMdpcCode};
use crate::error::{Error, Result};
use crate::nc_table::nc_error;

pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

pub fn sample_uniform_error<R: Rng + ?Sized>(
    r: usize,
    t: usize,
    rng: &mut R,
) -> Result<ErrorVector> {
    if t > 2 * r {
        return Err(Error::Parameter(format!(
            "t = {t} exceeds code length {}",
            2 * r
        )));
    }
    let mut s: Vec<u32> = rand::seq::index::sample(rng, 2 * r, t)
        .into_iter()
        .map(|x| x as u32)
        .collect();
    s.sort_unstable();
    Ok(ErrorVector::from_sorted_unchecked(r, s))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionProfile {
    pub max_u: usize,
    /// Near-codeword indices attaining `max_u`, ascending.
    pub close_ncs: Vec<usize>,
    /// `per_block[b][d] = |Supp(e_b) ∩ Supp(x^d * h_b)|`.
    pub per_block: [Vec<u32>; 2],
}

/// Overlap of `e` with every near-codeword, via the difference method:
/// `a ∈ Supp(x^d h_b)` exactly when `d = a - j` for some `j ∈ Supp(h_b)`,
/// so each pair `(a, j)` credits one shift. Cost `O(wt(e) * v)` plus `O(r)`.
pub fn intersection_profile(code: &QcMdpcCode, e: &ErrorVector) -> Result<IntersectionProfile> {
    if e.is_zero() {
        return Err(Error::EmptyProfile);
    }
    if e.r() != code.r() {
        return Err(Error::Dimension {
            left: code.r(),
            right: e.r(),
        });
    }
    let r = code.r();
    let mut per_block = [vec![0u32; r], vec![0u32; r]];
    for &c in e.support() {
        let (b, a) = (c as usize / r, c as usize % r);
        let hist = &mut per_block[b];
        for &j in code.block(b).support() {
            let j = j as usize;
            hist[if a >= j { a - j } else { a + r - j }] += 1;
        }
    }
    let max_u = per_block.iter().flatten().copied().max().unwrap_or(0) as usize;
    let close_ncs = per_block
        .iter()
        .flatten()
        .enumerate()
        .filter(|&(_, &c)| c as usize == max_u)
        .map(|(k, _)| k)
        .collect();
    Ok(IntersectionProfile {
        max_u,
        close_ncs,
        per_block,
    })
}

/// Rejection sampler for `(t, u)`-almost near-codewords that keeps running
/// acceptance statistics across draws.
///
/// Each proposal picks a near-codeword uniformly, keeps a uniform `u`-subset
/// of its support, and fills the other `t - u` positions uniformly from
/// outside that support. The proposal is accepted only if its true maximum
/// overlap is exactly `u`; fillers may land on another near-codeword and
/// push the maximum higher.
#[derive(Clone, Debug)]
pub struct AlmostNcSampler {
    t: usize,
    u: usize,
    max_attempts: usize,
    proposals: u64,
    accepted: u64,
}

impl AlmostNcSampler {
    pub fn new(code: &QcMdpcCode, t: usize, u: usize, max_attempts: usize) -> Result<Self> {
        let v = code.v();
        if u == 0 || u > t.min(v) {
            return Err(Error::Parameter(format!(
                "need 1 <= u <= min(t, v); got t = {t}, u = {u}, v = {v}"
            )));
        }
        if t - u > code.n() - v {
            return Err(Error::Parameter(format!(
                "t = {t} too large for n = {}",
                code.n()
            )));
        }
        if max_attempts == 0 {
            return Err(Error::Parameter("max_attempts must be at least 1".into()));
        }
        Ok(Self {
            t,
            u,
            max_attempts,
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposals as f64
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn sample<R: Rng + ?Sized>(
        &mut self,
        code: &QcMdpcCode,
        rng: &mut R,
    ) -> Result<ErrorVector> {
        let (r, v, t, u) = (code.r(), code.v(), self.t, self.u);
        let n = code.n();
        for _ in 0..self.max_attempts {
            self.proposals += 1;
            let m = nc_error(code, rng.random_range(0..n))?;
            let nc = m.support();
            let mut support = Vec::with_capacity(t);
            for k in rand::seq::index::sample(rng, v, u) {
                support.push(nc[k]);
            }
            // Uniform (t-u)-subset of the n - v coordinates outside the
            // near-codeword: sample ranks in the complement, then map each
            // rank to a coordinate by skipping over the sorted support.
            let mut ranks: Vec<usize> = rand::seq::index::sample(rng, n - v, t - u).into_vec();
            ranks.sort_unstable();
            let mut skip = 0;
            for rank in ranks {
                while skip < v && (nc[skip] as usize) <= rank + skip {
                    skip += 1;
                }
                support.push((rank + skip) as u32);
            }
            support.sort_unstable();
            debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
            let e = ErrorVector::from_sorted_unchecked(r, support);
            if intersection_profile(code, &e)?.max_u == u {
                self.accepted += 1;
                return Ok(e);
            }
        }
        Err(Error::SamplerExhausted {
            t,
            u,
            attempts: self.max_attempts,
            rate: self.acceptance_rate(),
        })
    }
}

pub fn sample_almost_nc<R: Rng + ?Sized>(
    code: &QcMdpcCode,
    t: usize,
    u: usize,
    rng: &mut R,
    max_attempts: usize,
) -> Result<ErrorVector> {
    AlmostNcSampler::new(code, t, u, max_attempts)?.sample(code, rng)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitClassification {
    pub bad_bits: Vec<u32>,
    pub suspicious_bits: Vec<u32>,
}

/// Splits the union of the close near-codeword supports into bad bits (in
/// `e`) and suspicious bits (not in `e`).
pub fn classify_bits(
    code: &QcMdpcCode,
    e: &ErrorVector,
    profile: &IntersectionProfile,
) -> Result<BitClassification> {
    let mut union = Vec::new();
    for &k in &profile.close_ncs {
        union.extend_from_slice(nc_error(code, k)?.support());
    }
    union.sort_unstable();
    union.dedup();
    let (bad_bits, suspicious_bits) = union.into_iter().partition(|&c| e.contains(c as usize));
    Ok(BitClassification {
        bad_bits,
        suspicious_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn code(r: usize, v: usize, seed: u64) -> QcMdpcCode {
        QcMdpcCode::random(r, v, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    /// Overlap with every near-codeword, enumerated directly.
    fn brute_profile(code: &QcMdpcCode, e: &ErrorVector) -> (usize, Vec<usize>) {
        let overlaps: Vec<usize> = (0..code.n())
            .map(|k| {
                nc_error(code, k)
                    .unwrap()
                    .support()
                    .iter()
                    .filter(|&&c| e.contains(c as usize))
                    .count()
            })
            .collect();
        let max = *overlaps.iter().max().unwrap();
        (max, (0..code.n()).filter(|&k| overlaps[k] == max).collect())
    }

    #[test]
    fn uniform_error_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_uniform_error(101, 0, &mut rng).unwrap().is_zero());
        let full = sample_uniform_error(101, 202, &mut rng).unwrap();
        assert_eq!(full.support(), (0..202).collect::<Vec<u32>>());
        assert!(sample_uniform_error(101, 203, &mut rng).is_err());
    }

    #[test]
    fn uniform_error_inclusion_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (r, t, draws) = (101usize, 9usize, 100_000usize);
        let mut hits = vec![0u32; 2 * r];
        for _ in 0..draws {
            for &c in sample_uniform_error(r, t, &mut rng).unwrap().support() {
                hits[c as usize] += 1;
            }
        }
        let p = t as f64 / (2 * r) as f64;
        let mean = p * draws as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        // 3 sigma on each of 202 coordinates; 4 sigma keeps the family-wise
        // false alarm rate small.
        for &h in &hits {
            assert!(
                (h as f64 - mean).abs() < 4.0 * sd,
                "count {h} vs mean {mean}"
            );
        }
        let within3 = hits
            .iter()
            .filter(|&&h| (h as f64 - mean).abs() < 3.0 * sd)
            .count();
        assert!(within3 >= 198);
    }

    #[test]
    fn profile_of_near_codeword_and_single_bit() {
        let c = code(101, 9, 2);
        for i in [0usize, 57, 101, 180] {
            let p = intersection_profile(&c, &nc_error(&c, i).unwrap()).unwrap();
            assert_eq!(p.max_u, 9);
            assert!(p.close_ncs.contains(&i));
        }
        let single = ErrorVector::from_support(101, [150]).unwrap();
        let p = intersection_profile(&c, &single).unwrap();
        assert_eq!(p.max_u, 1);
        assert_eq!(p.close_ncs.len(), 9);
        assert!(p.close_ncs.iter().all(|&k| k >= 101));
        assert!(matches!(
            intersection_profile(&c, &ErrorVector::zero(101)),
            Err(Error::EmptyProfile)
        ));
    }

    #[test]
    fn profile_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..200 {
            let c = code(101, 9, 100 + k);
            let t = rng.random_range(1..40);
            let e = sample_uniform_error(101, t, &mut rng).unwrap();
            let p = intersection_profile(&c, &e).unwrap();
            let (max, close) = brute_profile(&c, &e);
            assert_eq!(p.max_u, max);
            assert_eq!(p.close_ncs, close);
            let cap = |b: usize| {
                let wb = e
                    .support()
                    .iter()
                    .filter(|&&x| (x as usize) / 101 == b)
                    .count();
                wb.min(9) as u32
            };
            for b in 0..2 {
                assert!(p.per_block[b].iter().all(|&x| x <= cap(b)));
            }
        }
    }

    #[test]
    fn profile_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = code(251, 9, 5);
        for _ in 0..50 {
            let e = sample_uniform_error(251, 30, &mut rng).unwrap();
            let d = rng.random_range(0..251);
            let shifted = ErrorVector::from_support(
                251,
                e.support().iter().map(|&x| {
                    let (b, a) = (x as usize / 251, x as usize % 251);
                    b * 251 + (a + d) % 251
                }),
            )
            .unwrap();
            assert_eq!(
                intersection_profile(&c, &e).unwrap().max_u,
                intersection_profile(&c, &shifted).unwrap().max_u
            );
        }
    }

    #[test]
    fn almost_nc_samples_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = code(2003, 15, 7);
        for (t, u) in [(13, 13), (3, 3), (40, 8), (60, 11)] {
            let mut sampler = AlmostNcSampler::new(&c, t, u, DEFAULT_MAX_ATTEMPTS).unwrap();
            for _ in 0..50 {
                let e = sampler.sample(&c, &mut rng).unwrap();
                assert_eq!(e.weight(), t);
                assert_eq!(intersection_profile(&c, &e).unwrap().max_u, u);
            }
        }
    }

    #[test]
    fn almost_nc_rejects_bad_parameters() {
        let c = code(101, 9, 8);
        assert!(AlmostNcSampler::new(&c, 5, 0, 10).is_err());
        assert!(AlmostNcSampler::new(&c, 5, 6, 10).is_err());
        assert!(AlmostNcSampler::new(&c, 20, 10, 10).is_err());
        assert!(AlmostNcSampler::new(&c, 20, 5, 0).is_err());
    }

    #[test]
    fn almost_nc_exhaustion_is_reported() {
        // With t = 150 on n = 202 the overlap with some near-codeword is
        // essentially always above 1.
        let c = code(101, 9, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        match sample_almost_nc(&c, 150, 1, &mut rng, 20) {
            Err(Error::SamplerExhausted { attempts, .. }) => assert_eq!(attempts, 20),
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn bike_scale_acceptance_rate_is_high() {
        let c = code(12323, 71, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for u in [30, 36] {
            let mut sampler = AlmostNcSampler::new(&c, 134, u, DEFAULT_MAX_ATTEMPTS).unwrap();
            for _ in 0..200 {
                sampler.sample(&c, &mut rng).unwrap();
            }
            assert!(
                sampler.acceptance_rate() >= 0.5,
                "u = {u}: {}",
                sampler.acceptance_rate()
            );
        }
    }

    #[test]
    fn classification_with_unique_close_nc() {
        let c = code(2003, 15, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let e = nc_error(&c, 42).unwrap();
        let p = intersection_profile(&c, &e).unwrap();
        let cls = classify_bits(&c, &e, &p).unwrap();
        assert_eq!(cls.bad_bits, e.support());
        assert!(cls.suspicious_bits.is_empty());

        let mut checked = 0;
        for _ in 0..100 {
            let e = sample_almost_nc(&c, 20, 9, &mut rng, 100).unwrap();
            let p = intersection_profile(&c, &e).unwrap();
            let cls = classify_bits(&c, &e, &p).unwrap();
            assert!(cls.bad_bits.iter().all(|&b| e.contains(b as usize)));
            assert!(cls.suspicious_bits.iter().all(|&b| !e.contains(b as usize)));
            if p.close_ncs.len() == 1 {
                assert_eq!(cls.bad_bits.len(), 9);
                assert_eq!(cls.suspicious_bits.len(), 15 - 9);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn classification_unions_several_close_ncs() {
        let c = code(101, 9, 15);
        let e = ErrorVector::from_support(101, [3]).unwrap();
        let p = intersection_profile(&c, &e).unwrap();
        assert_eq!(p.close_ncs.len(), 9);
        let cls = classify_bits(&c, &e, &p).unwrap();
        assert_eq!(cls.bad_bits, vec![3]);
        let mut union: Vec<u32> = p
            .close_ncs
            .iter()
            .flat_map(|&k| nc_error(&c, k).unwrap().support().to_vec())
            .filter(|&x| x != 3)
            .collect();
        union.sort_unstable();
        union.dedup();
        assert_eq!(cls.suspicious_bits, union);
        assert!(cls.suspicious_bits.len() > 9 - 1);
    }
}

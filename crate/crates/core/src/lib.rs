//! Bit-flipping decoding of double-circulant QC-MDPC codes, with optional
//! recovery from near-codeword trapping sets through a sorted table of
//! near-codeword syndromes, and a Monte Carlo harness for measuring decoding
//! failure rates.
//!
//! The crate is organised bottom-up:
//!
//! * [`ring`]: sparse and dense arithmetic in `F2[x]/(x^r + 1)`;
//! * [`code`]: the code itself, syndromes, counters and adjacency;
//! * [`nc_table`]: the near-codeword syndrome table;
//! * [`error_model`]: uniform errors, almost near-codewords, bad and
//!   suspicious bits;
//! * [`decoder`]: BF-Max, MLD and out-of-place decoders, each with an
//!   optional near-codeword hook;
//! * [`sim`]: DFR sweeps, almost-near-codeword sweeps and counter
//!   histograms.
//!
//! ```
//! use qcbf::{decode, sample_uniform_error, DecoderSpec, NcSyndromeTable, QcMdpcCode};
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//!
//! let mut rng = ChaCha8Rng::seed_from_u64(1);
//! let code = QcMdpcCode::random(2003, 15, &mut rng)?;
//! let table = NcSyndromeTable::build(&code)?;
//! let e = sample_uniform_error(code.r(), 40, &mut rng)?;
//! let s = code.syndrome(&e)?;
//! let spec = DecoderSpec::bf_max(40).with_nc_aware(true);
//! let out = decode(&code, &s, &spec, &mut rng, Some(&table))?;
//! assert!(out.is_success());
//! assert_eq!(code.syndrome(&out.estimate)?, s);
//! # Ok::<(), qcbf::Error>(())
//! ```

pub mod code;
pub mod decoder;
pub mod error;
pub mod error_model;
pub mod nc_table;
pub mod ring;
pub mod sim;

pub use code::{CodeFile, CounterVector, ErrorVector, QcMdpcCode, Syndrome};
pub use decoder::{
    affine_threshold, decode, decode_with_observer, mld_threshold, oop_thresholds_r2003,
    select_bfmax, select_threshold, AffineCoeffs, DecodeOutcome, DecodeStatus, DecoderSpec,
    Variant, MLD_ITER_MAX, OOP_AFFINE_ITER_MAX, OOP_ITER_MAX,
};
pub use error::{Error, Result};
pub use error_model::{
    classify_bits, intersection_profile, sample_almost_nc, sample_uniform_error, AlmostNcSampler,
    BitClassification, IntersectionProfile,
};
pub use nc_table::{nc_error, NcSyndromeTable};
pub use ring::{CirculantPoly, DenseBits};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/ring.md")]
    mod ring {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/near-codewords.md")]
    mod near_codewords {}
    #[doc = include_str!("../../../book/src/decoders.md")]
    mod decoders {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

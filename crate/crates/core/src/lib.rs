//! Design of constant-modulus (unimodular) MIMO radar sequence sets.
//!
//! The crate places spectral notches over occupied frequency bands while
//! keeping the mutual cross-correlations of the set low. A single weighted
//! objective trades the two goals off and is minimized entry by entry with
//! coordinate descent, under either a continuous-phase or an `L`-ary PSK
//! alphabet.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature only adds an
//! FFT-accelerated correlation path; the direct sums remain available and are
//! used as the reference in tests.
//!
//! ```
//! use cogwave_core::{band_to_bins, cd_design, random_phase_set, CdConfig, PhaseAlphabet, RngSpec, StopBand};
//!
//! let init = random_phase_set(2, 32, PhaseAlphabet::Continuous, RngSpec::new(1, 0)).unwrap();
//! let mask = band_to_bins(&[StopBand::new(0.2, 0.4).unwrap()], 32).unwrap();
//! let config = CdConfig { theta: 1.0, max_sweeps: 20, ..CdConfig::default() };
//! let result = cd_design(&init, &mask, &config).unwrap();
//! assert!(result.objective_trace.last().unwrap() <= &result.objective_trace[0]);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod correlation;
mod error;
#[cfg(feature = "std")]
mod fft;
pub(crate) mod math;
pub mod optimizer;
mod rng;
pub mod sequence;
pub mod spectral;

pub use num_complex::Complex64;

pub use correlation::{
    iccl, isl, isl_bound, islr_db, peak_cross_correlation_db, summarize, xcorr, xcorr_direct,
    CorrelationKind, CorrelationProfile, IcclValue, SetCorrelationSummary,
};
pub use error::{Error, Result};
pub use optimizer::{
    cd_design, iccl_coefficients, objective, silr_coefficients, solve_phase_continuous,
    solve_phase_discrete, CdConfig, DesignResult, EntryCoefficients, ObjectiveValue,
};
pub use rng::RngSpec;
pub use sequence::{
    quantize_to_alphabet, random_phase_set, validate, PhaseAlphabet, SequenceSet, Violation,
    ViolationKind,
};
pub use spectral::{
    band_to_bins, bin_gram, dft_vector, psd, silr, BinGram, BinSet, SilrValue, SpectralMask,
    StopBand, Window,
};

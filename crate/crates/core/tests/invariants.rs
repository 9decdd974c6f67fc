//! Property tests for the structural invariants of the core crate.

use cogwave_core::spectral::{band_energies, spectrum};
use cogwave_core::{
    band_to_bins, cd_design, iccl, random_phase_set, silr, validate, xcorr, xcorr_direct,
    CdConfig, Complex64, CorrelationKind, PhaseAlphabet, RngSpec, SequenceSet, StopBand,
};
use proptest::prelude::*;

fn rows(m: usize, n: usize, seed: u64) -> SequenceSet {
    random_phase_set(m, n, PhaseAlphabet::Continuous, RngSpec::new(seed, 0)).unwrap()
}

prop_compose! {
    fn band()(lo in 0.0f64..0.8, w in 0.02f64..0.2) -> StopBand {
        StopBand::new(lo, (lo + w).min(1.0)).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_sets_are_unimodular(m in 1usize..5, n in 1usize..80, seed in any::<u64>(), levels in 2u32..70) {
        prop_assert!(validate(&rows(m, n, seed)).is_empty());
        let d = random_phase_set(m, n, PhaseAlphabet::Discrete { levels }, RngSpec::new(seed, 1)).unwrap();
        prop_assert!(validate(&d).is_empty());
    }

    #[test]
    fn parseval_holds(n in 1usize..96, seed in any::<u64>()) {
        let s = rows(1, n, seed);
        let e: f64 = spectrum(s.row(0), n).iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((e - (n * n) as f64).abs() <= 1e-9 * (n * n) as f64);
    }

    #[test]
    fn band_energies_split_total(n in 4usize..64, seed in any::<u64>(), b in band()) {
        let s = rows(2, n, seed);
        let mk = band_to_bins(&[b], n).unwrap();
        let (u, v) = band_energies(&s, &mk).unwrap();
        let total = (2 * n * n) as f64;
        prop_assert!((u + v - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn correlation_conjugate_lag_symmetry(n in 1usize..48, seed in any::<u64>()) {
        let s = rows(2, n, seed);
        for kind in [CorrelationKind::Aperiodic, CorrelationKind::Periodic] {
            let xy = xcorr_direct(s.row(0), s.row(1), kind).unwrap();
            let yx = xcorr_direct(s.row(1), s.row(0), kind).unwrap();
            for l in xy.lags() {
                prop_assert!((xy.at(l) - yx.at(-l).conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fft_correlation_matches_direct(n in 1usize..130, seed in any::<u64>()) {
        let s = rows(2, n, seed);
        for kind in [CorrelationKind::Aperiodic, CorrelationKind::Periodic] {
            let fast = xcorr(s.row(0), s.row(1), kind).unwrap();
            let slow = xcorr_direct(s.row(0), s.row(1), kind).unwrap();
            for (a, b) in fast.values().iter().zip(slow.values()) {
                prop_assert!((a - b).norm() <= 1e-9 * n as f64);
            }
        }
    }

    #[test]
    fn metrics_ignore_per_row_phase_rotation(
        n in 4usize..48, seed in any::<u64>(), b in band(), phi in prop::collection::vec(0.0f64..6.3, 3),
    ) {
        let s = rows(3, n, seed);
        let mut e = s.entries().to_vec();
        for (i, z) in e.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, phi[i / n]);
        }
        let r = SequenceSet::from_entries(3, n, PhaseAlphabet::Continuous, e).unwrap();
        let mk = band_to_bins(&[b], n).unwrap();
        let (a, c) = (silr(&s, &mk).unwrap().ratio, silr(&r, &mk).unwrap().ratio);
        prop_assert!((a - c).abs() <= 1e-9 * a.max(1e-12));
        let (a, c) = (iccl(&s).raw, iccl(&r).raw);
        prop_assert!((a - c).abs() <= 1e-9 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn design_is_monotone_and_unimodular(
        m in 1usize..4, n in 8usize..40, seed in any::<u64>(), theta in 0.0f64..=1.0, b in band(), discrete in any::<bool>(),
    ) {
        let alphabet = if discrete { PhaseAlphabet::Discrete { levels: 16 } } else { PhaseAlphabet::Continuous };
        let init = random_phase_set(m, n, alphabet, RngSpec::new(seed, 0)).unwrap();
        let mk = band_to_bins(&[b], n).unwrap();
        let config = CdConfig { theta, alphabet, max_sweeps: 8, ..CdConfig::default() };
        let r = cd_design(&init, &mk, &config).unwrap();
        prop_assert!(validate(&r.final_set).is_empty());
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1e-12), "{} -> {}", w[0], w[1]);
        }
        prop_assert!(r.max_update_increase <= 1e-10 * r.objective_trace[0].abs().max(1e-12));
    }
}

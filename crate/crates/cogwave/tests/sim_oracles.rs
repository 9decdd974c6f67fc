//! Simulator behaviour against closed-form expectations.

use cogwave::sim::{
    aggregated_periodogram, complex_gaussian, dbm_to_power, energy_detect, gen_echo, gen_interference,
    matched_filter, measure_sinr, range_doppler, run_experiment, sense_scene, sense_to_mask, Band, Constellation,
    InterferenceSpec, RadarParams, Scenario, Target, Waveform,
};
use cogwave_core::spectral::band_energies;
use cogwave_core::{cd_design, psd, random_phase_set, CdConfig, Complex64, PhaseAlphabet, RngSpec, Window};

fn single_channel() -> RadarParams {
    RadarParams {
        n_tx: 1,
        n_rx: 1,
        code_length: 64,
        pri_s: 200e-6,
        n_pulses: 32,
        sample_rate_hz: 1e6,
        duty_cycle: 0.5,
        tx_power_dbm: 0.0,
        noise_power_dbm: Some(0.0),
    }
}

#[test]
fn sinr_matches_coherent_processing_gain() {
    let p = single_channel();
    let attenuation_db = 13.0;
    // Amplitude gain N from pulse compression and P from Doppler
    // integration against noise gains N·P in power.
    let expected = 10.0 * ((p.code_length * p.n_pulses) as f64).log10() - attenuation_db;
    let target = Target {
        delay_s: 20e-6,
        normalized_doppler: 5.0 / 32.0,
        angle_deg: 0.0,
        attenuation_db,
    };
    let mut total = 0.0;
    let seeds = 5;
    for seed in 0..seeds {
        let codes = random_phase_set(1, p.code_length, PhaseAlphabet::Continuous, RngSpec::new(seed, 0)).unwrap();
        let cube = gen_echo(&codes, std::slice::from_ref(&target), &p, None, RngSpec::new(seed, 1)).unwrap();
        let grid = range_doppler(&matched_filter(&cube, &codes), p.sample_rate_hz).unwrap().integrated();
        let m = measure_sinr(&grid, target.nominal_cell(&p), 2, 4).unwrap();
        assert_eq!(m.peak, (20, 5));
        total += m.sinr_db;
    }
    let mean = total / seeds as f64;
    assert!((mean - expected).abs() < 1.5, "measured {mean:.2} dB, expected {expected:.2} dB");
}

fn desk_lte(power_dbm: f64) -> InterferenceSpec {
    let mut spec = InterferenceSpec::new(InterferenceSpec::DESK_ALLOCATION);
    spec.center_offset_hz = 10e6;
    spec.power_dbm = power_dbm;
    spec
}

fn with_noise(x: &[Complex64], dbm: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = RngSpec::new(seed, 99).rng();
    let p = dbm_to_power(dbm);
    x.iter().map(|&z| z + complex_gaussian(&mut rng, p)).collect()
}

#[test]
fn detected_bands_match_the_allocation_within_two_bins() {
    let fs = 40e6;
    let bin = 1e6;
    let spec = desk_lte(10.0);
    let lte = gen_interference(&spec, fs, 1 << 16, RngSpec::new(3, 0)).unwrap();
    let bands = energy_detect(&with_noise(&lte.samples, 0.0, 3), fs, bin, 6.0).unwrap();
    let truth = spec.occupied_bands_hz();
    assert_eq!(bands.len(), truth.len(), "{bands:?} vs {truth:?}");
    for (b, (lo, hi)) in bands.iter().zip(truth) {
        assert!((b.lo_hz - lo).abs() <= 2.0 * bin, "{b:?} vs ({lo}, {hi})");
        assert!((b.hi_hz - hi).abs() <= 2.0 * bin, "{b:?} vs ({lo}, {hi})");
    }
}

#[test]
fn allocation_hole_is_visible_at_twenty_db() {
    let fs = 40e6;
    let bin = 100e3;
    let spec = desk_lte(0.0);
    let lte = gen_interference(&spec, fs, 1 << 17, RngSpec::new(4, 0)).unwrap();
    let pg = aggregated_periodogram(&lte.samples, fs, bin).unwrap();
    let truth = spec.occupied_bands_hz();
    let (hole_lo, hole_hi) = (truth[0].1, truth[1].0);
    let in_band: Vec<f64> = (0..pg.power.len())
        .filter(|&i| {
            let (lo, hi) = pg.edges(i);
            truth.iter().any(|&(a, b)| lo >= a && hi <= b)
        })
        .map(|i| pg.power[i])
        .collect();
    let level = in_band.iter().sum::<f64>() / in_band.len() as f64;
    // Widest run of bins 20 dB below the occupied level between the groups.
    let centre = (hole_lo + hole_hi) / 2.0;
    let quiet = |i: usize| pg.power[i] < level / 100.0;
    let mid = (0..pg.power.len())
        .find(|&i| {
            let (lo, hi) = pg.edges(i);
            lo <= centre && centre < hi
        })
        .unwrap();
    assert!(quiet(mid));
    let (mut a, mut b) = (mid, mid);
    while a > 0 && quiet(a - 1) {
        a -= 1;
    }
    while b + 1 < pg.power.len() && quiet(b + 1) {
        b += 1;
    }
    let width = pg.edges(b).1 - pg.edges(a).0;
    let expected = hole_hi - hole_lo;
    // Seven empty groups of 48 subcarriers, plus the unused DC subcarrier.
    assert!((expected - 5.04e6 - spec.subcarrier_spacing_hz).abs() < 1.0, "{expected}");
    assert!((width - expected).abs() <= 3.0 * bin, "hole {width} Hz, expected {expected} Hz");
}

#[test]
fn white_noise_rarely_raises_a_band() {
    let fs = 40e6;
    let mut hits = 0;
    for seed in 0..100 {
        let noise = with_noise(&vec![Complex64::new(0.0, 0.0); 1 << 14], 0.0, seed);
        if !energy_detect(&noise, fs, 1e6, 10.0).unwrap().is_empty() {
            hits += 1;
        }
    }
    assert!(hits < 5, "{hits} of 100 noise captures produced a band");
}

#[test]
fn designing_on_the_sensed_mask_suppresses_the_occupied_band() {
    let s = Scenario::desk_scale();
    let sensed = sense_scene(&s).unwrap();
    assert!(!sensed.mask.undesired().is_empty());
    let init = random_phase_set(2, 400, PhaseAlphabet::Continuous, RngSpec::new(8, 0)).unwrap();
    let config = CdConfig {
        theta: 1.0,
        max_sweeps: 150,
        ..CdConfig::default()
    };
    let result = cd_design(&init, &sensed.mask, &config).unwrap();
    let (before, _) = band_energies(&init, &sensed.mask).unwrap();
    let (after, _) = band_energies(&result.final_set, &sensed.mask).unwrap();
    let gain_db = 10.0 * (before / after).log10();
    assert!(gain_db >= 30.0, "stopband energy down only {gain_db:.1} dB");
}

#[test]
fn known_band_becomes_a_notch_in_the_right_place() {
    let n = 128;
    let bands = [
        Band {
            lo_hz: 5e6,
            hi_hz: 10e6,
        },
        Band {
            lo_hz: -10e6,
            hi_hz: -6e6,
        },
    ];
    let mask = sense_to_mask(&bands, 0.0, 40e6, n).unwrap();
    let expected: Vec<usize> = (16..=32).chain(96..=109).collect();
    assert_eq!(mask.undesired(), expected.as_slice());
    let init = random_phase_set(1, n, PhaseAlphabet::Continuous, RngSpec::new(2, 0)).unwrap();
    let config = CdConfig {
        theta: 1.0,
        max_sweeps: 200,
        ..CdConfig::default()
    };
    let designed = cd_design(&init, &mask, &config).unwrap().final_set;
    let db = psd(designed.row(0), n, Window::Rectangular).unwrap();
    let mean = |bins: &[usize]| {
        let lin: f64 = bins.iter().map(|&k| 10f64.powf(db[k] / 10.0)).sum();
        10.0 * (lin / bins.len() as f64).log10()
    };
    let depth = mean(mask.desired()) - mean(mask.undesired());
    assert!(depth > 20.0, "notch only {depth:.1} dB deep");
    let deepest = (0..n).min_by(|&a, &b| db[a].total_cmp(&db[b])).unwrap();
    assert!(mask.undesired().contains(&deepest));
}

#[test]
fn vanishing_interference_leaves_radar_sinr_unchanged() {
    let mut s = Scenario::desk_scale();
    s.trials = 3;
    s.lte_powers_dbm = vec![-200.0];
    s.constellations = vec![Constellation::Qpsk];
    s.design.max_sweeps = 5;
    let report = run_experiment(&s).unwrap();
    for t in 0..2 {
        let clean = report.mean_sinr_db(2, Waveform::Random, t, None, None);
        let mutual = report.mean_sinr_db(3, Waveform::Random, t, Some(-200.0), Some(Constellation::Qpsk));
        assert!((clean - mutual).abs() < 1.0, "target {t}: {clean:.2} vs {mutual:.2} dB");
    }
}

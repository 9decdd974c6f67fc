//! Desk-scale radar/LTE coexistence simulation.
//!
//! Powers are in dBm against a unit-amplitude reference: a complex sample
//! stream of mean power `1` is `0 dBm`. Frequencies are baseband, relative
//! to the radar centre.

mod comms;
mod interference;
mod radar;
mod scenario;
mod sensing;

pub use comms::{demodulate, pulsed_transmission, CommsMetrics};
pub use interference::{gen_interference, Constellation, Interference, InterferenceSpec};
pub use radar::{
    gen_echo, matched_filter, measure_sinr, range_doppler, MatchedOutputs, PowerGrid, RadarParams,
    RangeDopplerMap, RxCube, SinrMeasurement, Target,
};
pub use scenario::{
    run_experiment, run_sensed, sense_scene, CfarSettings, CommsRecord, Coupling, DesignSettings, ExperimentReport,
    RadarRecord, Scenario, SensingOutcome, SensingSettings, SummaryRow, Waveform,
};
pub use sensing::{aggregated_periodogram, energy_detect, sense_to_mask, sense_to_stopbands, Band, BinPowers};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Linear power of a dBm value.
pub fn dbm_to_power(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn power_db(p: f64) -> f64 {
    10.0 * p.log10()
}

/// Circular complex Gaussian sample of mean power `power`.
pub fn complex_gaussian<R: Rng>(rng: &mut R, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

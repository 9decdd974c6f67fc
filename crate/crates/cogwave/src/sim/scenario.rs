//! The four-step coexistence experiment.
//!
//! 1. Communications only: the interfering link's EVM/SER without radar.
//! 2. Radar only: target SINR with no interference.
//! 3. Both, random-phase radar codes.
//! 4. Both, codes designed on the sensed mask.
//!
//! Steps 1, 3 and 4 share every random draw of a given
//! `(trial, power, constellation)` cell, so their differences come from
//! the waveforms alone.

use cogwave_core::{
    band_to_bins, cd_design, random_phase_set, CdConfig, DesignResult, PhaseAlphabet, RngSpec, SequenceSet,
    SpectralMask, StopBand,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    complex_gaussian, dbm_to_power, demodulate, energy_detect, gen_echo, gen_interference, matched_filter,
    measure_sinr, power_db, pulsed_transmission, range_doppler, sense_to_stopbands, Band, Constellation,
    InterferenceSpec, PowerGrid, RadarParams, Target,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    /// Path loss from the interfering transmitter into the radar receiver.
    pub lte_to_radar_db: f64,
    /// Path loss from each radar transmitter into the communications receiver.
    pub radar_to_comms_db: f64,
    pub comms_noise_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingSettings {
    pub lte_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub n_samples: usize,
    pub bin_hz: f64,
    pub threshold_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSettings {
    pub theta: f64,
    /// PSK alphabet size; absent for continuous phase.
    #[serde(default)]
    pub levels: Option<u32>,
    pub zeta: f64,
    pub max_sweeps: usize,
    pub grid_points: usize,
}

impl DesignSettings {
    pub fn alphabet(&self) -> PhaseAlphabet {
        match self.levels {
            Some(levels) => PhaseAlphabet::Discrete { levels },
            None => PhaseAlphabet::Continuous,
        }
    }

    pub fn config(&self) -> CdConfig {
        CdConfig {
            theta: self.theta,
            alphabet: self.alphabet(),
            zeta: self.zeta,
            max_sweeps: self.max_sweeps,
            grid_points: self.grid_points,
            row_order: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfarSettings {
    pub guard: usize,
    pub training: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub seed: u64,
    pub trials: usize,
    pub radar: RadarParams,
    pub targets: Vec<Target>,
    /// Interference layout; its power and constellation are swept.
    pub interference: InterferenceSpec,
    pub lte_powers_dbm: Vec<f64>,
    pub constellations: Vec<Constellation>,
    pub coupling: Coupling,
    pub sensing: SensingSettings,
    pub design: DesignSettings,
    pub cfar: CfarSettings,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::desk_scale()
    }
}

impl Scenario {
    /// Two targets, a 20 MHz LTE carrier in the upper half of a 40 MHz
    /// radar band with a seven-group hole, four interference powers.
    pub fn desk_scale() -> Self {
        let mut interference = InterferenceSpec::new(InterferenceSpec::DESK_ALLOCATION);
        interference.center_offset_hz = 10e6;
        Self {
            seed: 1,
            trials: 10,
            radar: RadarParams::desk_scale(),
            targets: vec![
                Target {
                    delay_s: 2e-6,
                    normalized_doppler: 0.2,
                    angle_deg: 25.0,
                    attenuation_db: 30.0,
                },
                Target {
                    delay_s: 2.6e-6,
                    normalized_doppler: -0.25,
                    angle_deg: 15.0,
                    attenuation_db: 35.0,
                },
            ],
            interference,
            lte_powers_dbm: vec![5.0, 10.0, 15.0, 20.0],
            constellations: Constellation::ALL.to_vec(),
            coupling: Coupling {
                lte_to_radar_db: 0.0,
                radar_to_comms_db: 10.0,
                comms_noise_dbm: -30.0,
            },
            sensing: SensingSettings {
                lte_power_dbm: 10.0,
                noise_power_dbm: 0.0,
                n_samples: 1 << 16,
                bin_hz: 1e6,
                threshold_db: 6.0,
            },
            design: DesignSettings {
                theta: 0.75,
                levels: None,
                zeta: cogwave_core::optimizer::DEFAULT_ZETA,
                max_sweeps: cogwave_core::optimizer::DEFAULT_MAX_SWEEPS,
                grid_points: cogwave_core::optimizer::DEFAULT_GRID_POINTS,
            },
            cfar: CfarSettings { guard: 2, training: 4 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.interference.validate()?;
        self.design.config().validate()?;
        if self.trials == 0 {
            return Err(Error::param("trials", "need at least one trial"));
        }
        if self.lte_powers_dbm.is_empty() || self.constellations.is_empty() {
            return Err(Error::param("lte_powers_dbm", "sweep needs at least one power and constellation"));
        }
        if self.targets.is_empty() {
            return Err(Error::param("targets", "need at least one target"));
        }
        Ok(())
    }

    fn rng(&self, kind: u64, trial: usize, power: usize, constellation: usize) -> RngSpec {
        RngSpec::new(
            self.seed,
            kind << 48 | (trial as u64) << 32 | (power as u64) << 16 | constellation as u64,
        )
    }

    fn samples(&self) -> usize {
        self.radar.n_pulses * self.radar.window()
    }
}

const STREAM_SENSE_LTE: u64 = 1;
const STREAM_SENSE_NOISE: u64 = 2;
const STREAM_INIT: u64 = 3;
const STREAM_LTE: u64 = 4;
const STREAM_COMMS_NOISE: u64 = 5;
const STREAM_RADAR_NOISE: u64 = 6;
const STREAM_CLEAN_NOISE: u64 = 7;

/// What the sensing receiver saw and the mask derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOutcome {
    pub bands: Vec<Band>,
    pub stopbands: Vec<StopBand>,
    /// May lack desired bins; check before designing.
    pub mask: SpectralMask,
}

/// Sense the interference alone and convert the occupied bands into a mask
/// on the radar's design grid.
pub fn sense_scene(s: &Scenario) -> Result<SensingOutcome> {
    let fs = s.radar.sample_rate_hz;
    let mut spec = s.interference.clone();
    spec.power_dbm = s.sensing.lte_power_dbm;
    spec.constellation = Constellation::Qpsk;
    let lte = gen_interference(&spec, fs, s.sensing.n_samples, s.rng(STREAM_SENSE_LTE, 0, 0, 0))?;
    let noise = dbm_to_power(s.sensing.noise_power_dbm);
    let mut rng = s.rng(STREAM_SENSE_NOISE, 0, 0, 0).rng();
    let signal: Vec<Complex64> = lte.samples.iter().map(|&z| z + complex_gaussian(&mut rng, noise)).collect();
    let bands = energy_detect(&signal, fs, s.sensing.bin_hz, s.sensing.threshold_db)?;
    let stopbands = sense_to_stopbands(&bands, 0.0, fs)?;
    let mask = band_to_bins(&stopbands, s.radar.code_length)?;
    Ok(SensingOutcome { bands, stopbands, mask })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Random,
    Optimized,
}

impl Waveform {
    pub fn name(&self) -> &'static str {
        match self {
            Waveform::Random => "random",
            Waveform::Optimized => "optimized",
        }
    }
}

/// Communications metrics of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommsRecord {
    /// 1, 3 or 4.
    pub step: u8,
    pub trial: usize,
    pub lte_power_dbm: f64,
    pub constellation: Constellation,
    pub evm_db: f64,
    pub ser: f64,
}

/// Radar SINR of one target in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarRecord {
    /// 2, 3 or 4.
    pub step: u8,
    pub waveform: Waveform,
    pub trial: usize,
    /// Absent for the interference-free step.
    pub lte_power_dbm: Option<f64>,
    pub constellation: Option<Constellation>,
    pub target: usize,
    pub sinr_db: f64,
}

/// One averaged entry of the experiment summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub step: u8,
    pub waveform: Option<Waveform>,
    pub constellation: Option<Constellation>,
    pub lte_power_dbm: Option<f64>,
    pub metric: String,
    pub value_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub sensing: SensingOutcome,
    pub random: SequenceSet,
    pub design: DesignResult,
    pub comms: Vec<CommsRecord>,
    pub radar: Vec<RadarRecord>,
    /// Integrated range-Doppler power of trial 0: radar-only with random
    /// codes, then steps 3 and 4 at the highest power and first
    /// constellation.
    pub maps: Vec<(String, PowerGrid)>,
}

impl ExperimentReport {
    pub fn optimized(&self) -> &SequenceSet {
        &self.design.final_set
    }

    /// Linear-power mean SINR over trials, in dB.
    pub fn mean_sinr_db(
        &self,
        step: u8,
        waveform: Waveform,
        target: usize,
        lte_power_dbm: Option<f64>,
        constellation: Option<Constellation>,
    ) -> f64 {
        mean_db(self.radar.iter().filter(|r| {
            r.step == step
                && r.waveform == waveform
                && r.target == target
                && r.lte_power_dbm == lte_power_dbm
                && r.constellation == constellation
        })
        .map(|r| r.sinr_db))
    }

    fn comms_cells(&self, step: u8, power: f64, c: Constellation) -> impl Iterator<Item = &CommsRecord> {
        self.comms
            .iter()
            .filter(move |r| r.step == step && r.lte_power_dbm == power && r.constellation == c)
    }

    /// Linear mean of the error-vector power ratio over trials, in dB.
    pub fn mean_evm_db(&self, step: u8, power: f64, c: Constellation) -> f64 {
        mean_db(self.comms_cells(step, power, c).map(|r| r.evm_db))
    }

    pub fn mean_ser(&self, step: u8, power: f64, c: Constellation) -> f64 {
        let v: Vec<f64> = self.comms_cells(step, power, c).map(|r| r.ser).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Every averaged metric, in a fixed order.
    pub fn summary(&self, scenario: &Scenario) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        let targets = scenario.targets.len();
        for w in [Waveform::Random, Waveform::Optimized] {
            for t in 0..targets {
                rows.push(SummaryRow {
                    step: 2,
                    waveform: Some(w),
                    constellation: None,
                    lte_power_dbm: None,
                    metric: format!("sinr_target{}", t + 1),
                    value_db: self.mean_sinr_db(2, w, t, None, None),
                });
            }
        }
        for &c in &scenario.constellations {
            for &p in &scenario.lte_powers_dbm {
                for (step, w) in [(1, None), (3, Some(Waveform::Random)), (4, Some(Waveform::Optimized))] {
                    let mut push = |metric: String, value_db: f64| {
                        rows.push(SummaryRow {
                            step,
                            waveform: w,
                            constellation: Some(c),
                            lte_power_dbm: Some(p),
                            metric,
                            value_db,
                        })
                    };
                    push("evm".into(), self.mean_evm_db(step, p, c));
                    push("ser".into(), power_db(self.mean_ser(step, p, c)));
                    if let Some(w) = w {
                        for t in 0..targets {
                            push(format!("sinr_target{}", t + 1), self.mean_sinr_db(step, w, t, Some(p), Some(c)));
                        }
                    }
                }
            }
        }
        rows
    }
}

fn mean_db(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, n), v| (s + 10f64.powf(v / 10.0), n + 1));
    power_db(sum / count as f64)
}

struct Chain<'a> {
    s: &'a Scenario,
    random: &'a SequenceSet,
    optimized: &'a SequenceSet,
}

impl Chain<'_> {
    fn sinrs(&self, waveforms: &SequenceSet, interference: Option<&[Complex64]>, rng: RngSpec) -> Result<(Vec<f64>, PowerGrid)> {
        let p = &self.s.radar;
        let cube = gen_echo(waveforms, &self.s.targets, p, interference, rng)?;
        let grid = range_doppler(&matched_filter(&cube, waveforms), p.sample_rate_hz)?.integrated();
        let sinrs = self
            .s
            .targets
            .iter()
            .map(|t| Ok(measure_sinr(&grid, t.nominal_cell(p), self.s.cfar.guard, self.s.cfar.training)?.sinr_db))
            .collect::<Result<Vec<_>>>()?;
        Ok((sinrs, grid))
    }
}

struct CellOutput {
    comms: Vec<CommsRecord>,
    radar: Vec<RadarRecord>,
    maps: Option<(PowerGrid, PowerGrid)>,
}

/// Sense, design once on the sensed mask, then run every Monte-Carlo cell.
///
/// Trials run in parallel; results are collected in cell order so the
/// report does not depend on scheduling.
pub fn run_experiment(s: &Scenario) -> Result<ExperimentReport> {
    s.validate()?;
    run_sensed(s, sense_scene(s)?)
}

/// [`run_experiment`] on an already sensed scene.
pub fn run_sensed(s: &Scenario, sensing: SensingOutcome) -> Result<ExperimentReport> {
    s.validate()?;
    sensing.mask.require_desired()?;
    let p = &s.radar;
    let config = s.design.config();
    let random = random_phase_set(p.n_tx, p.code_length, config.alphabet, s.rng(STREAM_INIT, 0, 0, 0))?;
    let design = cd_design(&random, &sensing.mask, &config)?;
    let optimized = &design.final_set;
    let chain = Chain {
        s,
        random: &random,
        optimized,
    };
    let len = s.samples();
    let radar_rand = pulsed_transmission(&random, p, s.coupling.radar_to_comms_db, len)?;
    let radar_opt = pulsed_transmission(optimized, p, s.coupling.radar_to_comms_db, len)?;
    let lte_gain = 10f64.powf(-s.coupling.lte_to_radar_db / 20.0);
    let comms_noise = dbm_to_power(s.coupling.comms_noise_dbm);
    let top = s
        .lte_powers_dbm
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > s.lte_powers_dbm[best] { i } else { best });

    let clean: Vec<(Vec<RadarRecord>, Option<PowerGrid>)> = (0..s.trials)
        .into_par_iter()
        .map(|trial| {
            let rng = s.rng(STREAM_CLEAN_NOISE, trial, 0, 0);
            let mut records = Vec::new();
            let mut map = None;
            for (w, set) in [(Waveform::Random, chain.random), (Waveform::Optimized, chain.optimized)] {
                let (sinrs, grid) = chain.sinrs(set, None, rng)?;
                if trial == 0 && w == Waveform::Random {
                    map = Some(grid);
                }
                records.extend(sinrs.into_iter().enumerate().map(|(target, sinr_db)| RadarRecord {
                    step: 2,
                    waveform: w,
                    trial,
                    lte_power_dbm: None,
                    constellation: None,
                    target,
                    sinr_db,
                }));
            }
            Ok((records, map))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize, usize)> = (0..s.trials)
        .flat_map(|t| (0..s.lte_powers_dbm.len()).flat_map(move |pi| (0..s.constellations.len()).map(move |ci| (t, pi, ci))))
        .collect();
    let outputs: Vec<CellOutput> = cells
        .par_iter()
        .map(|&(trial, pi, ci)| {
            let power = s.lte_powers_dbm[pi];
            let constellation = s.constellations[ci];
            let mut spec = s.interference.clone();
            spec.power_dbm = power;
            spec.constellation = constellation;
            let lte = gen_interference(&spec, p.sample_rate_hz, len, s.rng(STREAM_LTE, trial, pi, ci))?;
            let mut rng = s.rng(STREAM_COMMS_NOISE, trial, pi, ci).rng();
            let base: Vec<Complex64> = lte.samples.iter().map(|&z| z + complex_gaussian(&mut rng, comms_noise)).collect();
            let mut comms = Vec::with_capacity(3);
            for (step, radar) in [(1u8, None), (3, Some(&radar_rand)), (4, Some(&radar_opt))] {
                let rx: Vec<Complex64> = match radar {
                    None => base.clone(),
                    Some(r) => base.iter().zip(r.iter()).map(|(a, b)| a + b).collect(),
                };
                let m = demodulate(&rx, &lte);
                comms.push(CommsRecord {
                    step,
                    trial,
                    lte_power_dbm: power,
                    constellation,
                    evm_db: m.evm_db,
                    ser: m.ser,
                });
            }
            let at_radar: Vec<Complex64> = lte.samples.iter().map(|z| z * lte_gain).collect();
            let rng = s.rng(STREAM_RADAR_NOISE, trial, pi, ci);
            let mut radar = Vec::new();
            let mut grids = Vec::with_capacity(2);
            for (step, w, set) in [(3u8, Waveform::Random, chain.random), (4, Waveform::Optimized, chain.optimized)] {
                let (sinrs, grid) = chain.sinrs(set, Some(&at_radar), rng)?;
                grids.push(grid);
                radar.extend(sinrs.into_iter().enumerate().map(|(target, sinr_db)| RadarRecord {
                    step,
                    waveform: w,
                    trial,
                    lte_power_dbm: Some(power),
                    constellation: Some(constellation),
                    target,
                    sinr_db,
                }));
            }
            let maps = (trial == 0 && pi == top && ci == 0).then(|| {
                let opt = grids.pop().expect("two grids");
                (grids.pop().expect("two grids"), opt)
            });
            Ok(CellOutput { comms, radar, maps })
        })
        .collect::<Result<_>>()?;

    let mut maps = Vec::new();
    let mut radar = Vec::new();
    for (records, map) in clean {
        radar.extend(records);
        if let Some(m) = map {
            maps.push(("step2_random".to_string(), m));
        }
    }
    let mut comms = Vec::new();
    for out in outputs {
        comms.extend(out.comms);
        radar.extend(out.radar);
        if let Some((r, o)) = out.maps {
            maps.push(("step3_random".to_string(), r));
            maps.push(("step4_optimized".to_string(), o));
        }
    }
    Ok(ExperimentReport {
        sensing,
        random,
        design,
        comms,
        radar,
        maps,
    })
}

//! The `design`, `evaluate`, `sense` and `simulate` commands.
//!
//! Each command takes a resolved configuration and an output directory and
//! returns the manifest it wrote plus any warnings. Warnings map to exit
//! code 2 in the binary.

use std::path::{Path, PathBuf};

use cogwave_core::correlation::pair_xcorr;
use cogwave_core::optimizer::{DEFAULT_GRID_POINTS, DEFAULT_MAX_SWEEPS, DEFAULT_ZETA};
use cogwave_core::{
    band_to_bins, cd_design, iccl, psd, random_phase_set, silr, summarize, CdConfig, Complex64, CorrelationKind,
    PhaseAlphabet, RngSpec, SequenceSet, SpectralMask, StopBand, Window,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, CorrelationRecord, MaskFile, PsdRecord};
use crate::manifest::Manifest;
use crate::sim::{
    aggregated_periodogram, complex_gaussian, dbm_to_power, energy_detect, gen_interference, run_sensed,
    sense_scene, sense_to_stopbands, ExperimentReport, InterferenceSpec, Scenario, Waveform,
};

/// Result of a command that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: Manifest,
    /// Non-fatal conditions: non-convergence, degenerate sensing.
    pub warnings: Vec<String>,
}

/// One weight or a sweep of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Theta {
    One(f64),
    Sweep(Vec<f64>),
}

impl Theta {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Theta::One(t) => vec![*t],
            Theta::Sweep(v) => v.clone(),
        }
    }
}

fn default_seed() -> u64 {
    1
}
fn default_zeta() -> f64 {
    DEFAULT_ZETA
}
fn default_max_sweeps() -> usize {
    DEFAULT_MAX_SWEEPS
}
fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// Number of transmitters.
    pub m: usize,
    /// Code length.
    pub n: usize,
    pub theta: Theta,
    /// PSK alphabet size; absent for continuous phase.
    #[serde(default)]
    pub levels: Option<u32>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Normalized `[lo, hi]` stopbands.
    #[serde(default)]
    pub stopbands: Vec<[f64; 2]>,
    /// Mask file from `sense`; its stopbands are appended to `stopbands`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_file: Option<PathBuf>,
}

impl DesignConfig {
    /// Inline the mask file and check every field.
    pub fn resolve(mut self) -> Result<Self> {
        if let Some(path) = self.mask_file.take() {
            let file: MaskFile = io::read_json(&path)?;
            let mask = file.to_mask(&path.display().to_string())?;
            if mask.n() != self.n {
                return Err(Error::param(
                    "mask_file",
                    format!("mask is for N = {}, design has N = {}", mask.n(), self.n),
                ));
            }
            self.stopbands.extend(file.stopbands);
        }
        let thetas = self.theta.values();
        if thetas.is_empty() {
            return Err(Error::param("theta", "empty sweep"));
        }
        for (i, t) in thetas.iter().enumerate() {
            if !(0.0..=1.0).contains(t) {
                let name = match self.theta {
                    Theta::One(_) => "theta".to_string(),
                    Theta::Sweep(_) => format!("theta[{i}]"),
                };
                return Err(Error::param(name, format!("must lie in [0, 1], got {t}")));
            }
        }
        self.cd_config(thetas[0]).validate()?;
        self.mask()?;
        Ok(self)
    }

    pub fn alphabet(&self) -> PhaseAlphabet {
        match self.levels {
            Some(levels) => PhaseAlphabet::Discrete { levels },
            None => PhaseAlphabet::Continuous,
        }
    }

    pub fn cd_config(&self, theta: f64) -> CdConfig {
        CdConfig {
            theta,
            alphabet: self.alphabet(),
            zeta: self.zeta,
            max_sweeps: self.max_sweeps,
            grid_points: self.grid_points,
            row_order: None,
        }
    }

    pub fn mask(&self) -> Result<SpectralMask> {
        Ok(band_to_bins(&stopbands(&self.stopbands)?, self.n)?)
    }
}

fn stopbands(pairs: &[[f64; 2]]) -> Result<Vec<StopBand>> {
    Ok(pairs
        .iter()
        .map(|&[lo, hi]| StopBand::new(lo, hi))
        .collect::<std::result::Result<_, _>>()?)
}

/// Parse a `lo:hi` stopband flag.
pub fn parse_stopband(text: &str) -> std::result::Result<[f64; 2], String> {
    let (lo, hi) = text.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("hi: {e}"))?;
    StopBand::new(lo, hi).map_err(|e| e.to_string())?;
    Ok([lo, hi])
}

/// Directory name of one entry of a θ sweep.
pub fn theta_dir(theta: f64) -> String {
    format!("theta_{theta}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DesignSummary {
    theta: f64,
    sweeps: usize,
    converged: bool,
    g: f64,
    g_s: Option<f64>,
    g_c: f64,
    max_update_increase: f64,
}

/// Coordinate-descent design from a seeded random start, once per θ.
pub fn design(config: DesignConfig, out: &Path) -> Result<Outcome> {
    let config = config.resolve()?;
    let mask = config.mask()?;
    let mut manifest = Manifest::new("design", &config);
    manifest.seeds.push(config.seed);
    manifest.mask_sha256 = Some(io::write_mask(&out.join("mask.json"), &mask)?);
    manifest.outputs.push("mask.json".into());
    let init = random_phase_set(config.m, config.n, config.alphabet(), RngSpec::new(config.seed, 0))?;
    let mut warnings = Vec::new();
    let sweep = matches!(config.theta, Theta::Sweep(_));
    for theta in config.theta.values() {
        let prefix = if sweep { format!("{}/", theta_dir(theta)) } else { String::new() };
        let result = cd_design(&init, &mask, &config.cd_config(theta))?;
        io::write_sequences(&out.join(format!("{prefix}sequences.csv")), &result.final_set)?;
        io::write_trace(&out.join(format!("{prefix}trace.csv")), &result)?;
        let c = result.components;
        io::write_json(
            &out.join(format!("{prefix}design.json")),
            &DesignSummary {
                theta,
                sweeps: result.sweeps,
                converged: result.converged,
                g: c.g,
                g_s: c.g_s.is_finite().then_some(c.g_s),
                g_c: c.g_c,
                max_update_increase: result.max_update_increase,
            },
        )?;
        for name in ["sequences.csv", "trace.csv", "design.json"] {
            manifest.outputs.push(format!("{prefix}{name}"));
        }
        if !result.converged {
            warnings.push(format!(
                "theta = {theta}: not converged after {} sweeps (last step {:e})",
                result.sweeps,
                result.delta_trace.last().copied().unwrap_or(f64::NAN)
            ));
        }
    }
    manifest.save(out)?;
    Ok(Outcome { manifest, warnings })
}

fn default_nfft() -> usize {
    1024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub sequences: PathBuf,
    #[serde(default)]
    pub stopbands: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_file: Option<PathBuf>,
    /// PSD length; raised to the code length if shorter.
    #[serde(default = "default_nfft")]
    pub nfft: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairPeak {
    pub pair: [usize; 2],
    pub peak_db: f64,
}

/// Metrics of a sequence set against a mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateReport {
    pub m: usize,
    pub n: usize,
    /// SILR; absent when the mask leaves no desired bins.
    pub g_s: Option<f64>,
    pub g_s_db: Option<f64>,
    /// ICCL scaled by `1/(2MN)²`.
    pub g_c: f64,
    pub iccl: f64,
    pub isl: f64,
    pub islr_db: f64,
    pub bound_db: Option<f64>,
    pub bound_gap_db: Option<f64>,
    pub periodic_islr_db: f64,
    /// Peak `|r|` over lags per unordered pair, relative to `N`.
    pub peak_cross_correlation_db: Vec<PairPeak>,
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn evaluate_set(set: &SequenceSet, mask: &SpectralMask) -> Result<EvaluateReport> {
    let g_s = match silr(set, mask) {
        Ok(v) => Some(v),
        Err(cogwave_core::Error::DegenerateMask(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let summary = summarize(set);
    let mut peaks = Vec::new();
    for a in 0..set.m() {
        for b in a + 1..set.m() {
            let p = pair_xcorr(set, a, b, CorrelationKind::Aperiodic)?;
            let peak = p.abs_db().into_iter().fold(f64::NEG_INFINITY, f64::max);
            peaks.push(PairPeak { pair: [a, b], peak_db: peak });
        }
    }
    Ok(EvaluateReport {
        m: set.m(),
        n: set.n(),
        g_s: g_s.map(|v| v.ratio),
        g_s_db: g_s.and_then(|v| finite(v.ratio_db())),
        g_c: iccl(set).scaled,
        iccl: summary.iccl_raw,
        isl: summary.isl,
        islr_db: summary.islr_db,
        bound_db: finite(summary.bound_db),
        bound_gap_db: finite(summary.bound_gap_db()),
        periodic_islr_db: summary.periodic_islr_db,
        peak_cross_correlation_db: peaks,
    })
}

/// Report, per-sequence PSDs and per-pair correlation magnitudes.
pub fn evaluate(mut config: EvaluateConfig, out: &Path) -> Result<Outcome> {
    config.sequences = absolute(&config.sequences)?;
    let set = io::read_sequences(&config.sequences)?;
    if let Some(path) = config.mask_file.take() {
        let file: MaskFile = io::read_json(&path)?;
        file.to_mask(&path.display().to_string())?;
        config.stopbands.extend(file.stopbands);
    }
    config.nfft = config.nfft.max(set.n());
    let mask = band_to_bins(&stopbands(&config.stopbands)?, set.n())?;
    let mut manifest = Manifest::new("evaluate", &config);
    manifest.add_input(&config.sequences)?;
    manifest.mask_sha256 = Some(io::sha256_hex(&MaskFile::from_mask(&mask).to_json()));

    io::write_json(&out.join("report.json"), &evaluate_set(&set, &mask)?)?;
    manifest.outputs.push("report.json".into());
    for m in 0..set.m() {
        let db = psd(set.row(m), config.nfft, Window::Rectangular)?;
        let name = format!("psd_m{m}.csv");
        io::write_csv(
            &out.join(&name),
            db.iter().enumerate().map(|(bin, &db)| PsdRecord {
                bin,
                freq_norm: bin as f64 / config.nfft as f64,
                db,
            }),
        )?;
        manifest.outputs.push(name);
    }
    for a in 0..set.m() {
        for b in a..set.m() {
            let p = pair_xcorr(&set, a, b, CorrelationKind::Aperiodic)?;
            let name = format!("xcorr_{a}_{b}.csv");
            io::write_csv(
                &out.join(&name),
                p.lags().zip(p.abs_db()).map(|(lag, abs_db)| CorrelationRecord { lag, abs_db }),
            )?;
            manifest.outputs.push(name);
        }
    }
    manifest.save(out)?;
    Ok(Outcome {
        manifest,
        warnings: Vec::new(),
    })
}

/// Signal fed to the energy detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Source {
    /// Noise only.
    Silence,
    /// OFDM resource-block interference.
    Lte(InterferenceSpec),
    /// Unit tones at the listed frequencies, each at `power_dbm`.
    Tone { tones_hz: Vec<f64>, power_dbm: f64 },
    /// Tones every `spacing_hz` from `lo_hz` to `hi_hz`.
    Comb {
        lo_hz: f64,
        hi_hz: f64,
        spacing_hz: f64,
        power_dbm: f64,
    },
    /// Samples from a `re,im` CSV; `n_samples` is ignored.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub bin_hz: f64,
    pub threshold_db: f64,
    /// Receiver noise; absent for a noiseless capture.
    #[serde(default)]
    pub noise_power_dbm: Option<f64>,
    /// Radar band the mask is built for, relative to the capture centre.
    #[serde(default)]
    pub radar_center_hz: f64,
    pub radar_bandwidth_hz: f64,
    /// Code length of the design grid.
    pub n: usize,
    pub source: Source,
}

impl SenseConfig {
    fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if !(self.radar_bandwidth_hz > 0.0) {
            return Err(Error::param("radar_bandwidth_hz", "must be positive"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "must be positive"));
        }
        if let Source::Comb { lo_hz, hi_hz, spacing_hz, .. } = self.source {
            if !(spacing_hz > 0.0) || !(hi_hz >= lo_hz) {
                return Err(Error::param("source.comb", "need spacing_hz > 0 and lo_hz <= hi_hz"));
            }
        }
        Ok(())
    }

    /// Synthesize or load the capture, noise included.
    pub fn capture(&self) -> Result<Vec<Complex64>> {
        let fs = self.sample_rate_hz;
        let mut rng = RngSpec::new(self.seed, 1).rng();
        let tones = |freqs: Vec<f64>, power_dbm: f64, rng: &mut rand_chacha::ChaCha8Rng| {
            let amp = dbm_to_power(power_dbm).sqrt();
            let phases: Vec<f64> = freqs.iter().map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            (0..self.n_samples)
                .map(|t| {
                    freqs
                        .iter()
                        .zip(&phases)
                        .map(|(f, p)| Complex64::from_polar(amp, std::f64::consts::TAU * f * t as f64 / fs + p))
                        .sum()
                })
                .collect::<Vec<Complex64>>()
        };
        let mut signal = match &self.source {
            Source::Silence => vec![Complex64::new(0.0, 0.0); self.n_samples],
            Source::Lte(spec) => gen_interference(spec, fs, self.n_samples, RngSpec::new(self.seed, 2))?.samples,
            Source::Tone { tones_hz, power_dbm } => tones(tones_hz.clone(), *power_dbm, &mut rng),
            Source::Comb {
                lo_hz,
                hi_hz,
                spacing_hz,
                power_dbm,
            } => {
                let count = ((hi_hz - lo_hz) / spacing_hz).floor() as usize + 1;
                tones((0..count).map(|k| lo_hz + k as f64 * spacing_hz).collect(), *power_dbm, &mut rng)
            }
            Source::File { path } => io::read_signal(path)?,
        };
        if let Some(dbm) = self.noise_power_dbm {
            let mut rng = RngSpec::new(self.seed, 3).rng();
            let p = dbm_to_power(dbm);
            for z in &mut signal {
                *z += complex_gaussian(&mut rng, p);
            }
        }
        Ok(signal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodogramRecord {
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub db: f64,
}

/// Energy detection on a capture, then the band list and mask handoff.
pub fn sense(mut config: SenseConfig, out: &Path) -> Result<Outcome> {
    config.validate()?;
    if let Source::File { path } = &mut config.source {
        *path = absolute(path)?;
    }
    let signal = config.capture()?;
    let mut manifest = Manifest::new("sense", &config);
    manifest.seeds.push(config.seed);
    if let Source::File { path } = &config.source {
        manifest.add_input(path)?;
    }
    let fs = config.sample_rate_hz;
    let periodogram = aggregated_periodogram(&signal, fs, config.bin_hz)?;
    let bands = energy_detect(&signal, fs, config.bin_hz, config.threshold_db)?;
    let stops = sense_to_stopbands(&bands, config.radar_center_hz, config.radar_bandwidth_hz)?;
    let mask = band_to_bins(&stops, config.n)?;

    io::write_csv(
        &out.join("periodogram.csv"),
        periodogram.power.iter().enumerate().map(|(i, &p)| {
            let (lo_hz, hi_hz) = periodogram.edges(i);
            PeriodogramRecord {
                lo_hz,
                hi_hz,
                db: 10.0 * p.log10(),
            }
        }),
    )?;
    io::write_csv(&out.join("bands.csv"), bands.iter().copied())?;
    manifest.mask_sha256 = Some(io::write_mask(&out.join("mask.json"), &mask)?);
    manifest.outputs.extend(["periodogram.csv", "bands.csv", "mask.json"].map(String::from));
    manifest.save(out)?;
    let mut warnings = Vec::new();
    if mask.is_degenerate() {
        warnings.push("occupied bands cover the whole radar band; no desired bins remain".to_string());
    }
    Ok(Outcome { manifest, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TrialRecord {
    trial: usize,
    waveform: Option<&'static str>,
    mcs: Option<&'static str>,
    lte_power_dbm: Option<f64>,
    metric: String,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SummaryRecord {
    step: u8,
    waveform: Option<&'static str>,
    mcs: Option<&'static str>,
    lte_power_dbm: Option<f64>,
    metric: String,
    value_db: f64,
}

/// Sensing, one design on the sensed mask, then the four-step experiment.
///
/// A degenerate sensed mask is an error, raised after the sensing report
/// has been written.
pub fn simulate(scenario: Scenario, out: &Path) -> Result<Outcome> {
    scenario.validate()?;
    let mut manifest = Manifest::new("simulate", &scenario);
    manifest.seeds.push(scenario.seed);
    let sensing = sense_scene(&scenario)?;
    io::write_csv(&out.join("bands.csv"), sensing.bands.iter().copied())?;
    manifest.mask_sha256 = Some(io::write_mask(&out.join("mask.json"), &sensing.mask)?);
    manifest.outputs.extend(["bands.csv", "mask.json"].map(String::from));
    if sensing.mask.is_degenerate() {
        sensing.mask.require_desired()?;
    }
    let report = run_sensed(&scenario, sensing)?;
    write_experiment(&report, &scenario, out, &mut manifest)?;
    let mut warnings = Vec::new();
    if !report.design.converged {
        warnings.push(format!("design not converged after {} sweeps", report.design.sweeps));
    }
    manifest.save(out)?;
    Ok(Outcome { manifest, warnings })
}

fn write_experiment(report: &ExperimentReport, s: &Scenario, out: &Path, manifest: &mut Manifest) -> Result<()> {
    let mut put = |name: String| manifest.outputs.push(name);
    io::write_sequences(&out.join("sequences_random.csv"), &report.random)?;
    io::write_sequences(&out.join("sequences_optimized.csv"), report.optimized())?;
    io::write_trace(&out.join("trace.csv"), &report.design)?;
    for name in ["sequences_random.csv", "sequences_optimized.csv", "trace.csv"] {
        put(name.into());
    }
    for step in 1..=4u8 {
        let mut rows = Vec::new();
        for r in report.comms.iter().filter(|r| r.step == step) {
            for (metric, value) in [("evm_db", r.evm_db), ("ser", r.ser)] {
                rows.push(TrialRecord {
                    trial: r.trial,
                    waveform: match step {
                        3 => Some(Waveform::Random.name()),
                        4 => Some(Waveform::Optimized.name()),
                        _ => None,
                    },
                    mcs: Some(r.constellation.name()),
                    lte_power_dbm: Some(r.lte_power_dbm),
                    metric: metric.into(),
                    value,
                });
            }
        }
        for r in report.radar.iter().filter(|r| r.step == step) {
            rows.push(TrialRecord {
                trial: r.trial,
                waveform: Some(r.waveform.name()),
                mcs: r.constellation.map(|c| c.name()),
                lte_power_dbm: r.lte_power_dbm,
                metric: format!("sinr_db_target{}", r.target + 1),
                value: r.sinr_db,
            });
        }
        let name = format!("step{step}.csv");
        io::write_csv(&out.join(&name), rows)?;
        put(name);
    }
    io::write_csv(
        &out.join("summary.csv"),
        report.summary(s).into_iter().map(|r| SummaryRecord {
            step: r.step,
            waveform: r.waveform.map(|w| w.name()),
            mcs: r.constellation.map(|c| c.name()),
            lte_power_dbm: r.lte_power_dbm,
            metric: r.metric,
            value_db: r.value_db,
        }),
    )?;
    put("summary.csv".into());
    for (label, grid) in &report.maps {
        let name = format!("rd_{label}.csv");
        io::write_power_grid(&out.join(&name), grid)?;
        put(name);
    }
    Ok(())
}

/// Re-run a manifest into `out`.
pub fn replay(manifest: &Manifest, out: &Path) -> Result<Outcome> {
    manifest.check_inputs()?;
    match manifest.command.as_str() {
        "design" => design(manifest.config()?, out),
        "evaluate" => evaluate(manifest.config()?, out),
        "sense" => sense(manifest.config()?, out),
        "simulate" => simulate(manifest.config()?, out),
        other => Err(Error::format("manifest", format!("unknown command `{other}`"))),
    }
}

//! Pulsed MIMO radar: echo synthesis and the receive chain.
//!
//! Each pulse repetition interval is a fast-time window of
//! `round(pri·fs)` samples. Every transmitter sends its whole code at the
//! start of the window; the receive cube is indexed `(rx, pulse, sample)`.

use std::f64::consts::PI;

use cogwave_core::{RngSpec, SequenceSet};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{complex_gaussian, dbm_to_power};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarParams {
    pub n_tx: usize,
    pub n_rx: usize,
    pub code_length: usize,
    pub pri_s: f64,
    pub n_pulses: usize,
    pub sample_rate_hz: f64,
    /// Fraction of the PRI the transmitter may be on.
    pub duty_cycle: f64,
    /// Per-transmitter power.
    pub tx_power_dbm: f64,
    /// Receiver noise per sample; `None` switches noise off.
    pub noise_power_dbm: Option<f64>,
}

impl RadarParams {
    /// Two-by-two radar with a 400-sample code at 40 MHz and a 20 µs PRI.
    pub fn desk_scale() -> Self {
        Self {
            n_tx: 2,
            n_rx: 2,
            code_length: 400,
            pri_s: 20e-6,
            n_pulses: 64,
            sample_rate_hz: 40e6,
            duty_cycle: 0.5,
            tx_power_dbm: 10.0,
            noise_power_dbm: Some(0.0),
        }
    }

    /// Fast-time samples per PRI.
    pub fn window(&self) -> usize {
        (self.pri_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 || self.code_length == 0 {
            return Err(Error::param("n_tx", "antenna counts and code length must be positive"));
        }
        if self.n_pulses < 2 {
            return Err(Error::param("n_pulses", "need at least two pulses"));
        }
        if !(self.sample_rate_hz > 0.0) || !(self.pri_s > 0.0) {
            return Err(Error::param("sample_rate_hz", "sample rate and PRI must be positive"));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::param("duty_cycle", "must lie in (0, 1]"));
        }
        let on = (self.duty_cycle * self.window() as f64 + 1e-9).floor() as usize;
        if self.code_length > on {
            return Err(Error::param(
                "code_length",
                format!("{} samples do not fit the {on}-sample on-time", self.code_length),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_waveforms(&self, waveforms: &SequenceSet) -> Result<()> {
        if waveforms.m() != self.n_tx || waveforms.n() != self.code_length {
            return Err(Error::param(
                "waveforms",
                format!(
                    "{}x{} set for a {}-transmitter radar with code length {}",
                    waveforms.m(),
                    waveforms.n(),
                    self.n_tx,
                    self.code_length
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub delay_s: f64,
    /// Cycles per pulse in `(-0.5, 0.5]`.
    pub normalized_doppler: f64,
    pub angle_deg: f64,
    pub attenuation_db: f64,
}

impl Target {
    pub fn delay_samples(&self, params: &RadarParams) -> usize {
        (self.delay_s * params.sample_rate_hz).round() as usize
    }

    /// Nearest `(range cell, Doppler bin)` of the target.
    pub fn nominal_cell(&self, params: &RadarParams) -> (usize, usize) {
        let p = params.n_pulses as i64;
        let bin = (self.normalized_doppler * p as f64).round() as i64;
        (self.delay_samples(params), bin.rem_euclid(p) as usize)
    }

    fn validate(&self, params: &RadarParams) -> Result<()> {
        if !(self.normalized_doppler > -0.5 && self.normalized_doppler <= 0.5) {
            return Err(Error::param("normalized_doppler", "must lie in (-0.5, 0.5]"));
        }
        if !(self.delay_s >= 0.0) || self.delay_samples(params) + params.code_length > params.window() {
            return Err(Error::param(
                "delay_s",
                format!("echo at {} s leaves the PRI window", self.delay_s),
            ));
        }
        Ok(())
    }
}

/// Received samples indexed `(rx, pulse, fast-time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RxCube {
    pub n_rx: usize,
    pub n_pulses: usize,
    pub window: usize,
    pub data: Vec<Complex64>,
}

impl RxCube {
    pub fn zeros(n_rx: usize, n_pulses: usize, window: usize) -> Self {
        Self {
            n_rx,
            n_pulses,
            window,
            data: vec![ZERO; n_rx * n_pulses * window],
        }
    }

    pub fn slice(&self, rx: usize, pulse: usize) -> &[Complex64] {
        let o = (rx * self.n_pulses + pulse) * self.window;
        &self.data[o..o + self.window]
    }

    fn slice_mut(&mut self, rx: usize, pulse: usize) -> &mut [Complex64] {
        let o = (rx * self.n_pulses + pulse) * self.window;
        &mut self.data[o..o + self.window]
    }
}

/// Synthesize the receive cube.
///
/// A target contributes, on pulse `p` and element `e`, the superposition of
/// all transmit codes delayed by its range delay, scaled by its attenuation
/// and rotated by `e^{j2π f_d p}·e^{jπ e sin(angle)}`. Interference is added
/// sample-aligned to the pulse train (pulse `p` sees samples
/// `p·W..(p+1)·W`), identically on every element. Noise is drawn last.
pub fn gen_echo(
    waveforms: &SequenceSet,
    targets: &[Target],
    params: &RadarParams,
    interference: Option<&[Complex64]>,
    rng: RngSpec,
) -> Result<RxCube> {
    params.validate()?;
    params.check_waveforms(waveforms)?;
    for t in targets {
        t.validate(params)?;
    }
    let w = params.window();
    let n = params.code_length;
    let mut cube = RxCube::zeros(params.n_rx, params.n_pulses, w);
    let tx_amp = dbm_to_power(params.tx_power_dbm).sqrt();
    let sum: Vec<Complex64> = (0..n)
        .map(|i| (0..waveforms.m()).map(|m| waveforms.get(m, i)).sum::<Complex64>() * tx_amp)
        .collect();
    for t in targets {
        let amp = 10f64.powf(-t.attenuation_db / 20.0);
        let tau = t.delay_samples(params);
        let spatial = PI * t.angle_deg.to_radians().sin();
        for e in 0..params.n_rx {
            for p in 0..params.n_pulses {
                let rot = Complex64::from_polar(amp, 2.0 * PI * t.normalized_doppler * p as f64 + spatial * e as f64);
                let s = &mut cube.slice_mut(e, p)[tau..tau + n];
                for (y, &x) in s.iter_mut().zip(&sum) {
                    *y += rot * x;
                }
            }
        }
    }
    if let Some(i) = interference {
        if i.len() < params.n_pulses * w {
            return Err(Error::param(
                "interference",
                format!("{} samples, need {}", i.len(), params.n_pulses * w),
            ));
        }
        for e in 0..params.n_rx {
            for p in 0..params.n_pulses {
                let src = &i[p * w..(p + 1) * w];
                for (y, &z) in cube.slice_mut(e, p).iter_mut().zip(src) {
                    *y += z;
                }
            }
        }
    }
    if let Some(noise) = params.noise_power_dbm {
        let power = dbm_to_power(noise);
        let mut rng = rng.rng();
        for y in cube.data.iter_mut() {
            *y += complex_gaussian(&mut rng, power);
        }
    }
    Ok(cube)
}

/// Matched-filter outputs indexed `(tx, rx, pulse, range cell)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedOutputs {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_pulses: usize,
    pub window: usize,
    pub data: Vec<Complex64>,
}

impl MatchedOutputs {
    pub fn trace(&self, tx: usize, rx: usize, pulse: usize) -> &[Complex64] {
        let o = ((tx * self.n_rx + rx) * self.n_pulses + pulse) * self.window;
        &self.data[o..o + self.window]
    }
}

/// Correlate every fast-time slice with every transmit code:
/// `y(τ) = Σ_n conj(x_n)·r(τ + n)` for `τ` over the whole window, with the
/// slice taken as zero past its end.
pub fn matched_filter(cube: &RxCube, waveforms: &SequenceSet) -> MatchedOutputs {
    let (w, n) = (cube.window, waveforms.n());
    let size = (w + n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let scale = 1.0 / size as f64;
    let codes: Vec<Vec<Complex64>> = waveforms
        .rows()
        .map(|row| {
            let mut buf = vec![ZERO; size];
            buf[..n].copy_from_slice(row);
            fwd.process(&mut buf);
            buf.iter().map(|z| z.conj() * scale).collect()
        })
        .collect();
    let mut data = Vec::with_capacity(codes.len() * cube.n_rx * cube.n_pulses * w);
    let mut spec = vec![ZERO; size];
    let mut buf = vec![ZERO; size];
    for code in &codes {
        for rx in 0..cube.n_rx {
            for p in 0..cube.n_pulses {
                spec.iter_mut().for_each(|z| *z = ZERO);
                spec[..w].copy_from_slice(cube.slice(rx, p));
                fwd.process(&mut spec);
                for ((b, s), c) in buf.iter_mut().zip(&spec).zip(code) {
                    *b = s * c;
                }
                inv.process(&mut buf);
                data.extend_from_slice(&buf[..w]);
            }
        }
    }
    MatchedOutputs {
        n_tx: codes.len(),
        n_rx: cube.n_rx,
        n_pulses: cube.n_pulses,
        window: w,
        data,
    }
}

/// Slow-time spectra of every `(tx, rx)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    pub n_tx: usize,
    pub n_rx: usize,
    pub ranges: usize,
    pub dopplers: usize,
    /// Seconds of delay per range cell.
    pub cell_delay_s: f64,
    /// `|value|` indexed `(tx, rx, range, doppler)`.
    pub magnitude: Vec<f64>,
}

impl RangeDopplerMap {
    pub fn pair(&self, tx: usize, rx: usize) -> &[f64] {
        let len = self.ranges * self.dopplers;
        let o = (tx * self.n_rx + rx) * len;
        &self.magnitude[o..o + len]
    }

    pub fn delay_of(&self, range: usize) -> f64 {
        range as f64 * self.cell_delay_s
    }

    /// Normalized Doppler of bin `b`, wrapped to `(-0.5, 0.5]`.
    pub fn doppler_of(&self, bin: usize) -> f64 {
        let f = bin as f64 / self.dopplers as f64;
        if f > 0.5 {
            f - 1.0
        } else {
            f
        }
    }

    /// Power summed over all `(tx, rx)` pairs.
    pub fn integrated(&self) -> PowerGrid {
        let len = self.ranges * self.dopplers;
        let mut power = vec![0.0; len];
        for pair in self.magnitude.chunks(len) {
            for (p, &m) in power.iter_mut().zip(pair) {
                *p += m * m;
            }
        }
        PowerGrid {
            ranges: self.ranges,
            dopplers: self.dopplers,
            power,
        }
    }
}

/// Non-negative power over a range × Doppler grid, row-major by range.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerGrid {
    pub ranges: usize,
    pub dopplers: usize,
    pub power: Vec<f64>,
}

impl PowerGrid {
    pub fn get(&self, range: usize, doppler: usize) -> f64 {
        self.power[range * self.dopplers + doppler]
    }
}

/// DFT across pulses for every range cell of every filter output. Bin `b`
/// holds `Σ_p y_p e^{-j2πbp/P}`, so a target rotating by `e^{j2π f_d p}`
/// peaks at `b = f_d·P mod P`.
pub fn range_doppler(mf: &MatchedOutputs, sample_rate_hz: f64) -> Result<RangeDopplerMap> {
    let p = mf.n_pulses;
    if p < 2 {
        return Err(Error::param("n_pulses", "need at least two pulses"));
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(p);
    let per_pair = mf.window * p;
    let mut magnitude = vec![0.0; mf.n_tx * mf.n_rx * per_pair];
    let mut col = vec![ZERO; p];
    for tx in 0..mf.n_tx {
        for rx in 0..mf.n_rx {
            let out = &mut magnitude[(tx * mf.n_rx + rx) * per_pair..][..per_pair];
            for r in 0..mf.window {
                for (k, c) in col.iter_mut().enumerate() {
                    *c = mf.trace(tx, rx, k)[r];
                }
                fft.process(&mut col);
                for (d, c) in col.iter().enumerate() {
                    out[r * p + d] = c.norm();
                }
            }
        }
    }
    Ok(RangeDopplerMap {
        n_tx: mf.n_tx,
        n_rx: mf.n_rx,
        ranges: mf.window,
        dopplers: p,
        cell_delay_s: 1.0 / sample_rate_hz,
        magnitude,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrMeasurement {
    pub sinr_db: f64,
    /// `(range, doppler)` of the peak actually used.
    pub peak: (usize, usize),
    pub peak_power: f64,
    /// Mean power of the training ring.
    pub floor_power: f64,
}

/// Peak-to-surrounding power ratio around a nominal target cell.
///
/// The peak is the largest cell within ±1 of `cell` in both dimensions.
/// The floor is the mean over the ring of cells whose Chebyshev distance
/// from the peak is in `(guard, guard + training]`. Doppler wraps around;
/// the ring must fit inside the range extent.
pub fn measure_sinr(grid: &PowerGrid, cell: (usize, usize), guard: usize, training: usize) -> Result<SinrMeasurement> {
    if training == 0 {
        return Err(Error::param("training", "training ring is empty"));
    }
    let (nr, nd) = (grid.ranges, grid.dopplers);
    if cell.0 >= nr || cell.1 >= nd {
        return Err(Error::param("cell", format!("{cell:?} outside a {nr}x{nd} map")));
    }
    let reach = (guard + training) as isize;
    if 2 * reach + 1 > nd as isize {
        return Err(Error::param("training", "ring wraps onto itself in Doppler"));
    }
    let wrap = |d: isize| d.rem_euclid(nd as isize) as usize;
    let mut peak = cell;
    let mut peak_power = f64::NEG_INFINITY;
    for dr in -1isize..=1 {
        let r = cell.0 as isize + dr;
        if r < 0 || r >= nr as isize {
            continue;
        }
        for dd in -1isize..=1 {
            let d = wrap(cell.1 as isize + dd);
            let v = grid.get(r as usize, d);
            if v > peak_power {
                peak_power = v;
                peak = (r as usize, d);
            }
        }
    }
    if (peak.0 as isize) < reach || peak.0 as isize + reach >= nr as isize {
        return Err(Error::param("training", "ring does not fit inside the range extent"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for dr in -reach..=reach {
        for dd in -reach..=reach {
            if dr.abs().max(dd.abs()) as usize <= guard {
                continue;
            }
            sum += grid.get((peak.0 as isize + dr) as usize, wrap(peak.1 as isize + dd));
            count += 1;
        }
    }
    let floor_power = sum / count as f64;
    Ok(SinrMeasurement {
        sinr_db: 10.0 * (peak_power / floor_power).log10(),
        peak,
        peak_power,
        floor_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogwave_core::{random_phase_set, xcorr_direct, CorrelationKind, PhaseAlphabet};

    fn quiet(n_tx: usize) -> RadarParams {
        RadarParams {
            n_tx,
            n_rx: 2,
            code_length: 32,
            pri_s: 2e-6,
            n_pulses: 16,
            sample_rate_hz: 40e6,
            duty_cycle: 0.5,
            tx_power_dbm: 0.0,
            noise_power_dbm: None,
        }
    }

    fn target(delay_cells: f64, fd: f64) -> Target {
        Target {
            delay_s: delay_cells / 40e6,
            normalized_doppler: fd,
            angle_deg: 20.0,
            attenuation_db: 0.0,
        }
    }

    fn codes(m: usize, n: usize, seed: u64) -> SequenceSet {
        random_phase_set(m, n, PhaseAlphabet::Continuous, RngSpec::new(seed, 0)).unwrap()
    }

    #[test]
    fn empty_scene_is_silent() {
        let p = quiet(2);
        let cube = gen_echo(&codes(2, 32, 1), &[], &p, None, RngSpec::new(0, 0)).unwrap();
        assert!(cube.data.iter().all(|z| *z == ZERO));
        let mf = matched_filter(&cube, &codes(2, 32, 1));
        assert!(mf.data.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn stationary_target_repeats_every_pulse() {
        let p = quiet(2);
        let cube = gen_echo(&codes(2, 32, 1), &[target(5.0, 0.0)], &p, None, RngSpec::new(0, 0)).unwrap();
        for rx in 0..2 {
            for k in 1..p.n_pulses {
                assert_eq!(cube.slice(rx, k), cube.slice(rx, 0));
            }
        }
    }

    #[test]
    fn doppler_rotation_reads_back_per_pulse() {
        let p = quiet(1);
        let x = codes(1, 32, 2);
        let cube = gen_echo(&x, &[target(7.0, 0.25)], &p, None, RngSpec::new(0, 0)).unwrap();
        let mf = matched_filter(&cube, &x);
        for k in 1..p.n_pulses {
            let step = mf.trace(0, 0, k)[7] / mf.trace(0, 0, k - 1)[7];
            assert!((step - Complex64::new(0.0, 1.0)).norm() < 1e-9);
        }
        let rd = range_doppler(&mf, p.sample_rate_hz).unwrap();
        let grid = rd.integrated();
        let (best, _) = grid
            .power
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        assert_eq!((best / grid.dopplers, best % grid.dopplers), (7, 4));
        assert_eq!(rd.doppler_of(4), 0.25);
        assert_eq!(rd.doppler_of(8), 0.5);
        assert_eq!(rd.doppler_of(12), -0.25);
    }

    #[test]
    fn matched_filter_peaks_at_code_length_and_respects_cross_ceiling() {
        let x = codes(2, 32, 3);
        let mut cube = RxCube::zeros(1, 1, 64);
        cube.data[10..42].copy_from_slice(x.row(0));
        let mf = matched_filter(&cube, &x);
        assert!((mf.trace(0, 0, 0)[10] - Complex64::new(32.0, 0.0)).norm() < 1e-9);
        let ceiling = xcorr_direct(x.row(0), x.row(1), CorrelationKind::Aperiodic)
            .unwrap()
            .values()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let cross = mf.trace(1, 0, 0).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(cross <= ceiling + 1e-9);
    }

    #[test]
    fn echoes_superpose_linearly() {
        let p = quiet(2);
        let x = codes(2, 32, 4);
        let (a, b) = (target(3.0, 0.1), target(9.0, -0.3));
        let both = gen_echo(&x, &[a.clone(), b.clone()], &p, None, RngSpec::new(0, 0)).unwrap();
        let ca = gen_echo(&x, &[a], &p, None, RngSpec::new(0, 0)).unwrap();
        let cb = gen_echo(&x, &[b], &p, None, RngSpec::new(0, 0)).unwrap();
        for ((u, v), w) in both.data.iter().zip(&ca.data).zip(&cb.data) {
            assert!((u - v - w).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_out_of_window_targets() {
        let p = quiet(2);
        let x = codes(2, 32, 1);
        assert!(gen_echo(&x, &[target(60.0, 0.0)], &p, None, RngSpec::new(0, 0)).is_err());
        assert!(gen_echo(&x, &[target(3.0, -0.5)], &p, None, RngSpec::new(0, 0)).is_err());
    }

    #[test]
    fn sinr_of_synthetic_maps() {
        let mut grid = PowerGrid {
            ranges: 20,
            dopplers: 16,
            power: vec![1.0; 320],
        };
        assert!(measure_sinr(&grid, (10, 3), 2, 4).unwrap().sinr_db.abs() < 1e-12);
        grid.power[10 * 16 + 4] = 100.0;
        let m = measure_sinr(&grid, (10, 3), 2, 4).unwrap();
        assert!((m.sinr_db - 20.0).abs() < 1e-12);
        assert_eq!(m.peak, (10, 4));
        assert!(measure_sinr(&grid, (10, 3), 2, 0).is_err());
        assert!(measure_sinr(&grid, (2, 3), 2, 4).is_err());
    }
}

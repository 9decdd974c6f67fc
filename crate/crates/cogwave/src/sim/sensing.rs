//! Energy-detector spectrum sensing and the sensed-band to mask handoff.

use cogwave_core::{band_to_bins, SpectralMask, StopBand, Window};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FFT bins aggregated into each reporting bin.
const SUB_BINS: usize = 16;

/// Occupied frequency range in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

/// Averaged periodogram aggregated into equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPowers {
    /// Lower edge of bin 0, relative to the signal centre.
    pub start_hz: f64,
    pub bin_hz: f64,
    pub power: Vec<f64>,
}

impl BinPowers {
    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let lo = self.start_hz + bin as f64 * self.bin_hz;
        (lo, lo + self.bin_hz)
    }
}

/// Welch periodogram (Hann window, 50 % overlap) summed into bins of about
/// `bin_hz`, ordered from `-fs/2` upwards.
pub fn aggregated_periodogram(signal: &[Complex64], sample_rate_hz: f64, bin_hz: f64) -> Result<BinPowers> {
    if !(bin_hz > 0.0) || bin_hz > sample_rate_hz / 2.0 {
        return Err(Error::param("bin_hz", "must lie in (0, sample_rate/2]"));
    }
    let n_bins = (sample_rate_hz / bin_hz).floor() as usize;
    let nfft = n_bins * SUB_BINS;
    if signal.len() < nfft {
        return Err(Error::param(
            "signal",
            format!("{} samples, need at least {nfft}", signal.len()),
        ));
    }
    let window = Window::Hann.coefficients(nfft);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let step = nfft / 2;
    let segments = (signal.len() - nfft) / step + 1;
    let mut acc = vec![0.0; nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for s in 0..segments {
        for ((b, &x), &w) in buf.iter_mut().zip(&signal[s * step..]).zip(&window) {
            *b = x * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let norm = segments as f64 * window.iter().map(|w| w * w).sum::<f64>() * nfft as f64;
    let power = (0..n_bins)
        .map(|j| {
            (j * SUB_BINS..(j + 1) * SUB_BINS)
                .map(|i| acc[(i + nfft / 2) % nfft])
                .sum::<f64>()
                / norm
        })
        .collect();
    Ok(BinPowers {
        start_hz: -sample_rate_hz / 2.0,
        bin_hz: sample_rate_hz / n_bins as f64,
        power,
    })
}

/// Bands whose aggregated power exceeds the median bin by more than
/// `threshold_db`, adjacent bins merged. Frequencies are relative to the
/// signal centre.
pub fn energy_detect(signal: &[Complex64], sample_rate_hz: f64, bin_hz: f64, threshold_db: f64) -> Result<Vec<Band>> {
    let bins = aggregated_periodogram(signal, sample_rate_hz, bin_hz)?;
    let mut sorted = bins.power.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[sorted.len() / 2];
    let limit = floor * 10f64.powf(threshold_db / 10.0);
    let mut bands: Vec<Band> = Vec::new();
    let mut open: Option<usize> = None;
    for j in 0..=bins.power.len() {
        let hot = j < bins.power.len() && bins.power[j] > limit;
        match (hot, open) {
            (true, None) => open = Some(j),
            (false, Some(start)) => {
                bands.push(Band {
                    lo_hz: bins.edges(start).0,
                    hi_hz: bins.edges(j - 1).1,
                });
                open = None;
            }
            _ => {}
        }
    }
    Ok(bands)
}

/// Sensed bands as stopbands of the radar's design grid.
///
/// Each band is clipped to `[c - B/2, c + B/2]` and mapped to normalized
/// frequency `(f - c)/B`; negative frequencies alias to `1 + (f - c)/B`, so
/// a band straddling the centre becomes two stopbands. Overlapping results
/// are merged.
pub fn sense_to_stopbands(bands: &[Band], radar_center_hz: f64, radar_bandwidth_hz: f64) -> Result<Vec<StopBand>> {
    if !(radar_bandwidth_hz > 0.0) {
        return Err(Error::param("radar_bandwidth_hz", "must be positive"));
    }
    let half = radar_bandwidth_hz / 2.0;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for b in bands {
        if !(b.lo_hz <= b.hi_hz) {
            return Err(Error::param("band", format!("[{}, {}] is reversed", b.lo_hz, b.hi_hz)));
        }
        let lo = (b.lo_hz - radar_center_hz).max(-half) / radar_bandwidth_hz;
        let hi = (b.hi_hz - radar_center_hz).min(half) / radar_bandwidth_hz;
        if lo >= hi {
            continue;
        }
        if hi <= 0.0 {
            out.push((lo + 1.0, hi + 1.0));
        } else if lo >= 0.0 {
            out.push((lo, hi));
        } else {
            out.push((lo + 1.0, 1.0));
            out.push((0.0, hi));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in out {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    Ok(merged
        .into_iter()
        .map(|(lo, hi)| StopBand::new(lo, hi))
        .collect::<std::result::Result<_, _>>()?)
}

/// Sensed bands to a design mask on an `n`-point grid; a mask without
/// desired bins is an error.
pub fn sense_to_mask(bands: &[Band], radar_center_hz: f64, radar_bandwidth_hz: f64, n: usize) -> Result<SpectralMask> {
    let stop = sense_to_stopbands(bands, radar_center_hz, radar_bandwidth_hz)?;
    let mask = band_to_bins(&stop, n)?;
    mask.require_desired()?;
    Ok(mask)
}

//! LTE-like OFDM interference with resource-block holes.
//!
//! One OFDM symbol spans `round(fs/Δf)` samples with no cyclic prefix.
//! Subcarriers sit symmetrically about the LTE centre with the DC carrier
//! left empty; allocation bit `b` covers the `b`-th group of
//! `prb_per_bit · subcarriers_per_prb` subcarriers counted from the lowest
//! frequency.

use std::f64::consts::FRAC_1_SQRT_2;

use cogwave_core::RngSpec;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::dbm_to_power;
use crate::error::{Error, Result};

/// Subcarrier modulation of the interfering link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Qpsk,
    Qam16,
    Qam64,
}

impl Constellation {
    pub const ALL: [Constellation; 3] = [Constellation::Qpsk, Constellation::Qam16, Constellation::Qam64];

    pub fn order(&self) -> usize {
        match self {
            Constellation::Qpsk => 4,
            Constellation::Qam16 => 16,
            Constellation::Qam64 => 64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Constellation::Qpsk => "qpsk",
            Constellation::Qam16 => "qam16",
            Constellation::Qam64 => "qam64",
        }
    }

    fn side(&self) -> usize {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
            Constellation::Qam64 => 8,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Constellation::Qpsk => FRAC_1_SQRT_2,
            // 1/sqrt(2(M-1)/3)
            Constellation::Qam16 => 1.0 / 10f64.sqrt(),
            Constellation::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    /// Unit average-power point `index` (row-major over the square grid).
    pub fn point(&self, index: usize) -> Complex64 {
        let side = self.side();
        let level = |i: usize| (2 * i) as f64 - (side - 1) as f64;
        Complex64::new(level(index % side), level(index / side)) * self.scale()
    }

    /// Index of the nearest point.
    pub fn decide(&self, z: Complex64) -> usize {
        let side = self.side();
        let axis = |v: f64| {
            let i = ((v / self.scale() + (side - 1) as f64) / 2.0).round();
            i.clamp(0.0, (side - 1) as f64) as usize
        };
        axis(z.re) + side * axis(z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceSpec {
    /// One character per resource-block group, `'1'` occupied.
    pub allocation: String,
    #[serde(default = "default_prb_per_bit")]
    pub prb_per_bit: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    /// LTE centre relative to the radar centre.
    #[serde(default)]
    pub center_offset_hz: f64,
    #[serde(default)]
    pub power_dbm: f64,
    #[serde(default = "default_subcarriers")]
    pub subcarriers_per_prb: usize,
    #[serde(default = "default_spacing")]
    pub subcarrier_spacing_hz: f64,
    #[serde(default)]
    pub constellation: Constellation,
}

fn default_prb_per_bit() -> usize {
    4
}
fn default_bandwidth() -> f64 {
    20e6
}
fn default_subcarriers() -> usize {
    12
}
fn default_spacing() -> f64 {
    15e3
}

impl InterferenceSpec {
    /// Allocation used in the desk-scale coexistence scenario.
    pub const DESK_ALLOCATION: &'static str = "1111111111110000000111111";

    pub fn new(allocation: &str) -> Self {
        Self {
            allocation: allocation.to_string(),
            prb_per_bit: default_prb_per_bit(),
            bandwidth_hz: default_bandwidth(),
            center_offset_hz: 0.0,
            power_dbm: 0.0,
            subcarriers_per_prb: default_subcarriers(),
            subcarrier_spacing_hz: default_spacing(),
            constellation: Constellation::Qpsk,
        }
    }

    pub fn subcarriers_per_bit(&self) -> usize {
        self.prb_per_bit * self.subcarriers_per_prb
    }

    pub fn total_subcarriers(&self) -> usize {
        self.allocation.len() * self.subcarriers_per_bit()
    }

    /// Frequency span covered by the allocation bitmap.
    pub fn span_hz(&self) -> f64 {
        self.total_subcarriers() as f64 * self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        if self.allocation.is_empty() {
            return Err(Error::param("allocation", "empty"));
        }
        if let Some(c) = self.allocation.chars().find(|&c| c != '0' && c != '1') {
            return Err(Error::param("allocation", format!("unexpected character {c:?}")));
        }
        if self.prb_per_bit == 0 || self.subcarriers_per_prb == 0 {
            return Err(Error::param("prb_per_bit", "resource-block sizes must be positive"));
        }
        if !(self.subcarrier_spacing_hz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return Err(Error::param("subcarrier_spacing_hz", "spacing and bandwidth must be positive"));
        }
        if self.span_hz() > self.bandwidth_hz {
            return Err(Error::param(
                "allocation",
                format!("span {} Hz exceeds bandwidth {} Hz", self.span_hz(), self.bandwidth_hz),
            ));
        }
        if !self.power_dbm.is_finite() {
            return Err(Error::param("power_dbm", "must be finite"));
        }
        Ok(())
    }

    /// Signed subcarrier offsets (DC skipped) of every occupied subcarrier,
    /// lowest frequency first.
    pub fn occupied_offsets(&self) -> Vec<i64> {
        let per_bit = self.subcarriers_per_bit();
        let half = (self.total_subcarriers() / 2) as i64;
        self.allocation
            .chars()
            .enumerate()
            .filter(|&(_, c)| c == '1')
            .flat_map(|(b, _)| b * per_bit..(b + 1) * per_bit)
            .map(|i| {
                let k = i as i64 - half;
                if k >= 0 {
                    k + 1
                } else {
                    k
                }
            })
            .collect()
    }

    /// Occupied frequency ranges `(lo_hz, hi_hz)` relative to the radar
    /// centre, one per run of `'1'` bits, edges half a spacing outside the
    /// outermost subcarriers.
    pub fn occupied_bands_hz(&self) -> Vec<(f64, f64)> {
        let offsets = self.occupied_offsets();
        let df = self.subcarrier_spacing_hz;
        let mut bands: Vec<(f64, f64)> = Vec::new();
        let mut run: Option<(i64, i64)> = None;
        for &k in &offsets {
            run = match run {
                Some((lo, hi)) if k == hi + 1 || (hi == -1 && k == 1) => Some((lo, k)),
                Some((lo, hi)) => {
                    bands.push((lo as f64, hi as f64));
                    Some((k, k))
                }
                None => Some((k, k)),
            };
        }
        if let Some((lo, hi)) = run {
            bands.push((lo as f64, hi as f64));
        }
        bands
            .into_iter()
            .map(|(lo, hi)| {
                (
                    self.center_offset_hz + (lo - 0.5) * df,
                    self.center_offset_hz + (hi + 0.5) * df,
                )
            })
            .collect()
    }
}

/// Generated interference with everything a receiver needs to demodulate it.
#[derive(Debug, Clone, PartialEq)]
pub struct Interference {
    pub samples: Vec<Complex64>,
    /// Samples per OFDM symbol.
    pub symbol_len: usize,
    /// FFT bin of every occupied subcarrier.
    pub bins: Vec<usize>,
    /// Constellation index per (symbol, occupied subcarrier), row-major.
    pub symbols: Vec<u8>,
    pub constellation: Constellation,
    /// Time-domain amplitude applied to each unit-power subcarrier.
    pub gain: f64,
}

impl Interference {
    pub fn n_symbols(&self) -> usize {
        if self.bins.is_empty() {
            0
        } else {
            self.symbols.len() / self.bins.len()
        }
    }
}

/// Synthesize `n_samples` of OFDM interference at `sample_rate_hz`.
///
/// Occupied subcarriers carry uniform random symbols of the spec's
/// constellation; the total mean power is `power_dbm`.
pub fn gen_interference(
    spec: &InterferenceSpec,
    sample_rate_hz: f64,
    n_samples: usize,
    rng: RngSpec,
) -> Result<Interference> {
    spec.validate()?;
    if !(sample_rate_hz > 0.0) {
        return Err(Error::param("sample_rate_hz", "must be positive"));
    }
    let offsets = spec.occupied_offsets();
    let df = spec.subcarrier_spacing_hz;
    let half_span = spec.total_subcarriers() as f64 / 2.0 * df;
    if spec.center_offset_hz.abs() + half_span > sample_rate_hz / 2.0 {
        return Err(Error::param(
            "center_offset_hz",
            format!("interference reaches beyond the Nyquist band of {sample_rate_hz} Hz"),
        ));
    }
    let k_len = (sample_rate_hz / df).round() as usize;
    let centre = (spec.center_offset_hz / (sample_rate_hz / k_len as f64)).round() as i64;
    let bins: Vec<usize> = offsets
        .iter()
        .map(|&k| (centre + k).rem_euclid(k_len as i64) as usize)
        .collect();
    let n_symbols = n_samples.div_ceil(k_len);
    let constellation = spec.constellation;
    if bins.is_empty() {
        return Ok(Interference {
            samples: vec![Complex64::new(0.0, 0.0); n_samples],
            symbol_len: k_len,
            bins,
            symbols: Vec::new(),
            constellation,
            gain: 0.0,
        });
    }
    let gain = (dbm_to_power(spec.power_dbm) / bins.len() as f64).sqrt();
    let ifft = FftPlanner::new().plan_fft_inverse(k_len);
    let mut rng = rng.rng();
    let order = constellation.order();
    let mut symbols = Vec::with_capacity(n_symbols * bins.len());
    let mut samples = Vec::with_capacity(n_symbols * k_len);
    let mut grid = vec![Complex64::new(0.0, 0.0); k_len];
    for _ in 0..n_symbols {
        grid.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for &b in &bins {
            let s = rng.random_range(0..order);
            symbols.push(s as u8);
            grid[b] = constellation.point(s) * gain;
        }
        ifft.process(&mut grid);
        samples.extend_from_slice(&grid);
    }
    samples.truncate(n_samples);
    Ok(Interference {
        samples,
        symbol_len: k_len,
        bins,
        symbols,
        constellation,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::mean_power;

    #[test]
    fn constellations_have_unit_power_and_decide_their_points() {
        for c in Constellation::ALL {
            let p: f64 = (0..c.order()).map(|i| c.point(i).norm_sqr()).sum::<f64>() / c.order() as f64;
            assert!((p - 1.0).abs() < 1e-12, "{c:?}");
            for i in 0..c.order() {
                assert_eq!(c.decide(c.point(i)), i);
                assert_eq!(c.decide(c.point(i) * 1.05 + Complex64::new(0.01, -0.01)), i);
            }
        }
    }

    #[test]
    fn offsets_skip_dc_and_follow_the_bitmap() {
        let mut spec = InterferenceSpec::new("101");
        spec.prb_per_bit = 1;
        spec.subcarriers_per_prb = 2;
        // six subcarriers: -3 -2 -1 | 1 2 3
        assert_eq!(spec.occupied_offsets(), vec![-3, -2, 2, 3]);
        let bands = spec.occupied_bands_hz();
        assert_eq!(bands.len(), 2);
        assert!((bands[0].0 + 3.5 * 15e3).abs() < 1e-9 && (bands[0].1 + 1.5 * 15e3).abs() < 1e-9);
    }

    #[test]
    fn desk_allocation_has_a_five_megahertz_hole() {
        let spec = InterferenceSpec::new(InterferenceSpec::DESK_ALLOCATION);
        let bands = spec.occupied_bands_hz();
        assert_eq!(bands.len(), 2);
        let hole = bands[1].0 - bands[0].1;
        // seven groups of 48 subcarriers, plus the empty DC carrier inside
        assert!((hole - (7.0 * 48.0 + 1.0) * 15e3).abs() < 1e-6, "{hole}");
    }

    #[test]
    fn silent_allocation_is_all_zero() {
        let spec = InterferenceSpec::new("0000");
        let i = gen_interference(&spec, 40e6, 1000, RngSpec::new(1, 0)).unwrap();
        assert!(i.samples.iter().all(|z| z.norm_sqr() == 0.0));
        assert_eq!(i.samples.len(), 1000);
    }

    #[test]
    fn power_is_calibrated() {
        let mut spec = InterferenceSpec::new(InterferenceSpec::DESK_ALLOCATION);
        spec.power_dbm = 7.0;
        let i = gen_interference(&spec, 40e6, 20 * 2667, RngSpec::new(2, 0)).unwrap();
        let p = 10.0 * mean_power(&i.samples).log10();
        assert!((p - 7.0).abs() < 0.1, "{p}");
        assert_eq!(i.n_symbols(), 20);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(InterferenceSpec::new("").validate().is_err());
        assert!(InterferenceSpec::new("10x").validate().is_err());
        // 40 groups of 48 subcarriers need 28.8 MHz
        assert!(InterferenceSpec::new(&"1".repeat(40)).validate().is_err());
        let mut spec = InterferenceSpec::new("11");
        spec.center_offset_hz = 19.9e6;
        assert!(gen_interference(&spec, 40e6, 100, RngSpec::new(0, 0)).is_err());
    }
}

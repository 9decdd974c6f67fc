//! Communications-side proxy metrics: post-equalization EVM and symbol
//! error rate on the known interference symbols.

use cogwave_core::SequenceSet;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{dbm_to_power, Interference, RadarParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommsMetrics {
    /// `10·log10(Σ|ŝ - s|² / Σ|s|²)`.
    pub evm_db: f64,
    /// Fraction of hard decisions that miss the sent symbol.
    pub ser: f64,
    pub symbols: usize,
}

/// Demodulate `received` against the symbols carried by `reference`.
///
/// Every whole OFDM symbol is transformed and each occupied subcarrier is
/// divided by its known flat gain before the hard decision.
pub fn demodulate(received: &[Complex64], reference: &Interference) -> CommsMetrics {
    let k = reference.symbol_len;
    let n_occ = reference.bins.len();
    let whole = (received.len() / k).min(reference.n_symbols());
    if n_occ == 0 || whole == 0 {
        return CommsMetrics {
            evm_db: f64::NAN,
            ser: f64::NAN,
            symbols: 0,
        };
    }
    let fft = FftPlanner::new().plan_fft_forward(k);
    let eq = 1.0 / (reference.gain * k as f64);
    let c = reference.constellation;
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    let (mut err, mut sig, mut misses) = (0.0, 0.0, 0usize);
    for s in 0..whole {
        buf.copy_from_slice(&received[s * k..(s + 1) * k]);
        fft.process(&mut buf);
        for (j, &bin) in reference.bins.iter().enumerate() {
            let sent = reference.symbols[s * n_occ + j] as usize;
            let est = buf[bin] * eq;
            let p = c.point(sent);
            err += (est - p).norm_sqr();
            sig += p.norm_sqr();
            if c.decide(est) != sent {
                misses += 1;
            }
        }
    }
    let symbols = whole * n_occ;
    CommsMetrics {
        evm_db: 10.0 * (err / sig).log10(),
        ser: misses as f64 / symbols as f64,
        symbols,
    }
}

/// Radar emission as seen at a single antenna: the transmit codes summed
/// at `tx_power_dbm` each, on during the first `N` samples of every PRI,
/// attenuated by `loss_db`, repeated to `len` samples.
pub fn pulsed_transmission(waveforms: &SequenceSet, params: &RadarParams, loss_db: f64, len: usize) -> Result<Vec<Complex64>> {
    params.validate()?;
    params.check_waveforms(waveforms)?;
    let amp = (dbm_to_power(params.tx_power_dbm - loss_db)).sqrt();
    let w = params.window();
    let pulse: Vec<Complex64> = (0..params.code_length)
        .map(|n| (0..waveforms.m()).map(|m| waveforms.get(m, n)).sum::<Complex64>() * amp)
        .collect();
    Ok((0..len)
        .map(|i| pulse.get(i % w).copied().unwrap_or_default())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{gen_interference, Constellation, InterferenceSpec};
    use cogwave_core::{random_phase_set, PhaseAlphabet, RngSpec};

    #[test]
    fn clean_link_is_error_free() {
        for c in Constellation::ALL {
            let mut spec = InterferenceSpec::new("1101");
            spec.constellation = c;
            spec.power_dbm = 3.0;
            let i = gen_interference(&spec, 10e6, 4 * 667, RngSpec::new(1, 0)).unwrap();
            let m = demodulate(&i.samples, &i);
            assert_eq!(m.ser, 0.0);
            assert!(m.evm_db < -200.0, "{}", m.evm_db);
            assert_eq!(m.symbols, 4 * 3 * 48);
        }
    }

    #[test]
    fn additive_noise_sets_the_evm() {
        let mut spec = InterferenceSpec::new("1111");
        spec.power_dbm = 0.0;
        let i = gen_interference(&spec, 10e6, 40 * 667, RngSpec::new(2, 0)).unwrap();
        // noise 20 dB below the in-band signal density
        let occupied = i.bins.len() as f64 / i.symbol_len as f64;
        let mut rng = RngSpec::new(3, 0).rng();
        let rx: Vec<Complex64> = i
            .samples
            .iter()
            .map(|&z| z + crate::sim::complex_gaussian(&mut rng, 0.01 / occupied))
            .collect();
        let m = demodulate(&rx, &i);
        assert!((m.evm_db + 20.0).abs() < 0.5, "{}", m.evm_db);
    }

    #[test]
    fn radar_emission_is_gated() {
        let p = RadarParams::desk_scale();
        let x = random_phase_set(2, 400, PhaseAlphabet::Continuous, RngSpec::new(1, 0)).unwrap();
        let s = pulsed_transmission(&x, &p, 10.0, 2000).unwrap();
        assert_eq!(s.len(), 2000);
        assert!(s[400..800].iter().all(|z| z.norm() == 0.0));
        assert_eq!(s[800], s[0]);
        let on: f64 = s[..400].iter().map(|z| z.norm_sqr()).sum::<f64>() / 400.0;
        // two unit-modulus codes at 0 dBm after the loss
        assert!((on - 2.0).abs() < 1.0);
    }
}

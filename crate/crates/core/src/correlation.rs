//! Aperiodic and periodic correlation, integrated cross-correlation level
//! (ICCL), integrated sidelobe level (ISL) and its set-size lower bound.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;
use crate::sequence::SequenceSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CorrelationKind {
    #[default]
    Aperiodic,
    Periodic,
}

/// Correlation `r_{m,m'}(l)` over lags `-(N-1)..=N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub kind: CorrelationKind,
    pub pair: (usize, usize),
    n: usize,
    values: Vec<Complex64>,
}

impl CorrelationProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lags(&self) -> core::ops::RangeInclusive<isize> {
        -(self.n as isize - 1)..=(self.n as isize - 1)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `lag`; panics outside `-(N-1)..=N-1`.
    pub fn at(&self, lag: isize) -> Complex64 {
        self.values[(lag + self.n as isize - 1) as usize]
    }

    /// `Σ_l |r(l)|²` over every lag.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `20·log10(|r(l)| / N)` per lag, so an unimodular mainlobe is 0 dB.
    pub fn abs_db(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|z| {
                let a = z.norm() / self.n as f64;
                if a > 0.0 {
                    20.0 * math::log10(a)
                } else {
                    crate::spectral::PSD_FLOOR_DB
                }
            })
            .collect()
    }
}

fn check_lengths(x: &[Complex64], y: &[Complex64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::param("N", "sequences are empty"));
    }
    Ok(x.len())
}

/// Direct `O(N²)` evaluation of the defining sums.
pub fn xcorr_direct(x: &[Complex64], y: &[Complex64], kind: CorrelationKind) -> Result<CorrelationProfile> {
    let n = check_lengths(x, y)?;
    let ni = n as isize;
    let values = (-(ni - 1)..ni)
        .map(|lag| match kind {
            CorrelationKind::Aperiodic => {
                let start = (-lag).max(0);
                let end = (ni - lag).min(ni);
                (start..end).fold(Complex64::new(0.0, 0.0), |acc, i| {
                    acc + x[i as usize] * y[(i + lag) as usize].conj()
                })
            }
            CorrelationKind::Periodic => (0..ni).fold(Complex64::new(0.0, 0.0), |acc, i| {
                acc + x[i as usize] * y[(i + lag).rem_euclid(ni) as usize].conj()
            }),
        })
        .collect();
    Ok(CorrelationProfile {
        kind,
        pair: (0, 0),
        n,
        values,
    })
}

/// Correlation of `x` against `y`; FFT-accelerated with the `std` feature,
/// direct otherwise.
pub fn xcorr(x: &[Complex64], y: &[Complex64], kind: CorrelationKind) -> Result<CorrelationProfile> {
    #[cfg(feature = "std")]
    {
        let n = check_lengths(x, y)?;
        let values = match kind {
            CorrelationKind::Aperiodic => crate::fft::aperiodic_xcorr(x, y),
            CorrelationKind::Periodic => {
                let p = crate::fft::periodic_xcorr(x, y);
                (-(n as isize - 1)..n as isize)
                    .map(|l| p[l.rem_euclid(n as isize) as usize])
                    .collect()
            }
        };
        Ok(CorrelationProfile {
            kind,
            pair: (0, 0),
            n,
            values,
        })
    }
    #[cfg(not(feature = "std"))]
    {
        xcorr_direct(x, y, kind)
    }
}

/// Correlation of rows `m` and `m2` of a set.
pub fn pair_xcorr(set: &SequenceSet, m: usize, m2: usize, kind: CorrelationKind) -> Result<CorrelationProfile> {
    if m >= set.m() || m2 >= set.m() {
        return Err(Error::IndexOutOfRange {
            row: m.max(m2),
            col: 0,
            rows: set.m(),
            cols: set.n(),
        });
    }
    let mut p = xcorr(set.row(m), set.row(m2), kind)?;
    p.pair = (m, m2);
    Ok(p)
}

/// Raw ICCL and its `1/(2MN)²` scaled form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcclValue {
    pub raw: f64,
    pub scaled: f64,
}

pub fn iccl_scale(m: usize, n: usize) -> f64 {
    let k = 2.0 * m as f64 * n as f64;
    1.0 / (k * k)
}

/// Unordered-pair cross energies `Σ_l |r_{m,m'}(l)|²`, in `(m < m')` order.
fn cross_energies(set: &SequenceSet, kind: CorrelationKind) -> Vec<f64> {
    let mut out = Vec::new();
    for m in 0..set.m() {
        for m2 in m + 1..set.m() {
            // lengths agree by construction
            out.push(xcorr(set.row(m), set.row(m2), kind).map(|p| p.energy()).unwrap_or(0.0));
        }
    }
    out
}

/// `Σ_{m≠m'} Σ_l |r_{m,m'}(l)|²`. Each unordered pair counts twice since
/// `|r_{m,m'}(l)| = |r_{m',m}(-l)|`.
pub fn iccl(set: &SequenceSet) -> IcclValue {
    let raw = 2.0 * cross_energies(set, CorrelationKind::Aperiodic).iter().sum::<f64>();
    IcclValue {
        raw,
        scaled: raw * iccl_scale(set.m(), set.n()),
    }
}

/// ISL: autocorrelation sidelobes of every sequence plus the raw ICCL.
pub fn isl_with(set: &SequenceSet, kind: CorrelationKind) -> f64 {
    let mut auto = 0.0;
    for row in set.rows() {
        if let Ok(p) = xcorr(row, row, kind) {
            auto += p
                .lags()
                .filter(|&l| match kind {
                    CorrelationKind::Aperiodic => l != 0,
                    CorrelationKind::Periodic => l.rem_euclid(set.n() as isize) != 0,
                })
                .map(|l| p.at(l).norm_sqr())
                .sum::<f64>();
        }
    }
    auto + 2.0 * cross_energies(set, kind).iter().sum::<f64>()
}

/// Aperiodic ISL.
pub fn isl(set: &SequenceSet) -> f64 {
    isl_with(set, CorrelationKind::Aperiodic)
}

/// ISL relative to the total mainlobe energy `M·N²`, in dB.
pub fn islr_db(set: &SequenceSet) -> f64 {
    let main = set.m() as f64 * (set.n() * set.n()) as f64;
    math::db10(isl(set) / main)
}

/// Lower bound `N²·M·(M-1)` on the aperiodic ISL of an `M`-sequence set.
pub fn isl_bound(m: usize, n: usize) -> f64 {
    (n * n) as f64 * m as f64 * (m as f64 - 1.0)
}

/// [`isl_bound`] in the normalization of [`islr_db`]: `10·log10(M-1)`.
pub fn isl_bound_db(m: usize) -> f64 {
    math::db10(m as f64 - 1.0)
}

/// Largest cross-correlation magnitude over all lags and pairs, in dB
/// relative to the mainlobe `N`. `None` for single-sequence sets.
pub fn peak_cross_correlation_db(set: &SequenceSet) -> Option<f64> {
    let mut peak: Option<f64> = None;
    for m in 0..set.m() {
        for m2 in m + 1..set.m() {
            if let Ok(p) = xcorr(set.row(m), set.row(m2), CorrelationKind::Aperiodic) {
                let v = p.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
                peak = Some(peak.map_or(v, |q: f64| q.max(v)));
            }
        }
    }
    peak.map(|v| 20.0 * math::log10(v / set.n() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetCorrelationSummary {
    pub iccl_raw: f64,
    pub iccl_scaled: f64,
    pub isl: f64,
    pub islr_db: f64,
    pub bound: f64,
    pub bound_db: f64,
    pub periodic_isl: f64,
    pub periodic_islr_db: f64,
}

impl SetCorrelationSummary {
    /// ISLR minus the bound, in dB.
    pub fn bound_gap_db(&self) -> f64 {
        self.islr_db - self.bound_db
    }
}

pub fn summarize(set: &SequenceSet) -> SetCorrelationSummary {
    let ic = iccl(set);
    let isl = isl(set);
    let main = set.m() as f64 * (set.n() * set.n()) as f64;
    let pisl = isl_with(set, CorrelationKind::Periodic);
    SetCorrelationSummary {
        iccl_raw: ic.raw,
        iccl_scaled: ic.scaled,
        isl,
        islr_db: math::db10(isl / main),
        bound: isl_bound(set.m(), set.n()),
        bound_db: isl_bound_db(set.m()),
        periodic_isl: pisl,
        periodic_islr_db: math::db10(pisl / main),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;
    use crate::sequence::{random_phase_set, PhaseAlphabet};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct-summation ICCL over ordered pairs, independent of [`iccl`].
    fn iccl_oracle(set: &SequenceSet) -> f64 {
        let mut s = 0.0;
        for m in 0..set.m() {
            for m2 in 0..set.m() {
                if m != m2 {
                    s += xcorr_direct(set.row(m), set.row(m2), CorrelationKind::Aperiodic).unwrap().energy();
                }
            }
        }
        s
    }

    #[test]
    fn hand_evaluated_correlations() {
        let ones = [c(1., 0.), c(1., 0.)];
        let p = xcorr(&ones, &ones, CorrelationKind::Aperiodic).unwrap();
        assert!((p.at(0) - c(2., 0.)).norm() < 1e-12);
        assert!((p.at(1) - c(1., 0.)).norm() < 1e-12);
        assert!((p.at(-1) - c(1., 0.)).norm() < 1e-12);

        let x = [c(1., 0.), c(0., 1.)];
        let y = [c(1., 0.), c(0., -1.)];
        let p = xcorr_direct(&x, &y, CorrelationKind::Aperiodic).unwrap();
        assert!(p.at(0).norm() < 1e-15);

        let s = random_phase_set(1, 37, PhaseAlphabet::Continuous, RngSpec::new(2, 0)).unwrap();
        let p = xcorr(s.row(0), s.row(0), CorrelationKind::Aperiodic).unwrap();
        assert!((p.at(0) - c(37., 0.)).norm() < 1e-10);

        assert!(xcorr(&x, &[c(1., 0.)], CorrelationKind::Aperiodic).is_err());
    }

    #[test]
    fn iccl_examples() {
        let one = random_phase_set(1, 8, PhaseAlphabet::Continuous, RngSpec::new(1, 0)).unwrap();
        assert_eq!(iccl(&one), IcclValue { raw: 0.0, scaled: 0.0 });

        let ones = SequenceSet::from_entries(2, 2, PhaseAlphabet::Continuous, alloc::vec![c(1., 0.); 4]).unwrap();
        let v = iccl(&ones);
        assert!((v.raw - 12.0).abs() < 1e-12);
        assert!((v.scaled - 0.1875).abs() < 1e-15);
        assert!((iccl_oracle(&ones) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn iccl_matches_oracle_on_random_sets() {
        for seed in 0..5 {
            let s = random_phase_set(3, 19, PhaseAlphabet::Continuous, RngSpec::new(seed, 0)).unwrap();
            let a = iccl(&s).raw;
            let b = iccl_oracle(&s);
            assert!((a - b).abs() / b < 1e-10);
        }
    }

    #[test]
    fn random_iccl_matches_expectation() {
        let (m, n) = (3, 64);
        let trials = 100;
        let mean = (0..trials)
            .map(|seed| iccl(&random_phase_set(m, n, PhaseAlphabet::Continuous, RngSpec::new(seed, 1)).unwrap()).raw)
            .sum::<f64>()
            / trials as f64;
        let expected = (m * (m - 1) * n * n) as f64;
        assert!((mean - expected).abs() / expected < 0.2, "mean {mean}");
    }

    #[test]
    fn isl_examples() {
        assert_eq!(isl_bound(4, 64), 49152.0);
        let ones = SequenceSet::from_entries(3, 5, PhaseAlphabet::Continuous, alloc::vec![c(1., 0.); 15]).unwrap();
        assert!(isl(&ones) >= iccl(&ones).raw);
        let s = summarize(&ones);
        assert_eq!(s.bound, isl_bound(3, 5));
        assert!((s.bound_db - math::db10(2.0)).abs() < 1e-12);
    }

    #[test]
    fn periodic_profile_wraps() {
        let s = random_phase_set(2, 12, PhaseAlphabet::Continuous, RngSpec::new(4, 0)).unwrap();
        let p = xcorr(s.row(0), s.row(1), CorrelationKind::Periodic).unwrap();
        let d = xcorr_direct(s.row(0), s.row(1), CorrelationKind::Periodic).unwrap();
        for l in 1..12isize {
            assert!((p.at(l).norm() - p.at(l - 12).norm()).abs() < 1e-10);
            assert!((p.at(l) - d.at(l)).norm() < 1e-10);
        }
    }
}

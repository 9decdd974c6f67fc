//! DFT machinery, stopband-to-bin conversion, bin Gram matrices, the
//! spectral interference-to-leakage ratio (SILR) and PSD estimation.
//!
//! Frequency convention: bin `k` of an `N`-point design grid is the
//! normalized frequency `k/N` in `[0, 1)`. Bins `N/2..N` therefore alias to
//! negative baseband frequencies.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;
use crate::sequence::SequenceSet;

/// Smallest reported PSD level; keeps exact zeros finite in dB output.
pub const PSD_FLOOR_DB: f64 = -400.0;

/// `f_k = [1, e^{j2πk/N}, ..., e^{j2πk(N-1)/N}]`.
pub fn dft_vector(k: usize, n: usize) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::param("N", "must be positive"));
    }
    if k >= n {
        return Err(Error::param("k", format!("bin {k} outside 0..{n}")));
    }
    Ok((0..n).map(|i| math::root_of_unity(k * i % n, n)).collect())
}

/// `X(k) = f_kᴴ x` for every bin `k` of the `len`-point grid (zero padded).
pub fn spectrum(x: &[Complex64], len: usize) -> Vec<Complex64> {
    let tw = math::twiddles(len, -1.0);
    (0..len)
        .map(|k| {
            x.iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (i, &v)| acc + v * tw[(k * i) % len])
        })
        .collect()
}

/// A normalized stopband `[lo, hi]` with `0 <= lo < hi <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopBand {
    pub lo: f64,
    pub hi: f64,
}

impl StopBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
            return Err(Error::param(
                "stopband",
                format!("need 0 <= lo < hi <= 1, got [{lo}, {hi}]"),
            ));
        }
        Ok(Self { lo, hi })
    }
}

/// Undesired (`U`) and desired (`V`) bins of the `N`-point design grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMask {
    stopbands: Vec<StopBand>,
    n: usize,
    undesired: Vec<usize>,
    desired: Vec<usize>,
}

impl SpectralMask {
    /// Mask with no stopbands.
    pub fn empty(n: usize) -> Result<Self> {
        band_to_bins(&[], n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stopbands(&self) -> &[StopBand] {
        &self.stopbands
    }

    pub fn undesired(&self) -> &[usize] {
        &self.undesired
    }

    pub fn desired(&self) -> &[usize] {
        &self.desired
    }

    pub fn bins(&self, which: BinSet) -> &[usize] {
        match which {
            BinSet::Undesired => &self.undesired,
            BinSet::Desired => &self.desired,
        }
    }

    /// `V` is empty: every bin is protected and SILR is undefined.
    pub fn is_degenerate(&self) -> bool {
        self.desired.is_empty()
    }

    pub fn require_desired(&self) -> Result<()> {
        if self.is_degenerate() {
            return Err(Error::DegenerateMask(format!(
                "all {} bins are undesired",
                self.n
            )));
        }
        Ok(())
    }
}

/// Convert normalized stopbands to bin sets on an `N`-point grid.
///
/// Each band covers the inclusive bin range `[round(N·lo), round(N·hi)]`,
/// rounding half away from zero and clamping to `N-1`. Bands may touch but
/// not overlap. A mask with every bin undesired is returned, flagged by
/// [`SpectralMask::is_degenerate`].
pub fn band_to_bins(stopbands: &[StopBand], n: usize) -> Result<SpectralMask> {
    if n == 0 {
        return Err(Error::param("N", "must be positive"));
    }
    for b in stopbands {
        StopBand::new(b.lo, b.hi)?;
    }
    let mut sorted = stopbands.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for w in sorted.windows(2) {
        if w[1].lo < w[0].hi {
            return Err(Error::param(
                "stopbands",
                format!(
                    "[{}, {}] overlaps [{}, {}]",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                ),
            ));
        }
    }
    let mut flag = vec![false; n];
    for b in &sorted {
        let lo = (math::round(n as f64 * b.lo) as usize).min(n - 1);
        let hi = (math::round(n as f64 * b.hi) as usize).min(n - 1);
        for f in &mut flag[lo..=hi] {
            *f = true;
        }
    }
    let undesired = (0..n).filter(|&k| flag[k]).collect();
    let desired = (0..n).filter(|&k| !flag[k]).collect();
    Ok(SpectralMask {
        stopbands: sorted,
        n,
        undesired,
        desired,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinSet {
    Undesired,
    Desired,
}

/// `Σ_{k∈bins} f_k f_kᴴ`, an `N x N` Hermitian Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BinGram {
    n: usize,
    source: BinSet,
    bin_count: usize,
    /// `kernel[δ + N - 1] = Σ_k e^{j2πkδ/N}` for `δ = -(N-1)..N-1`.
    kernel: Vec<Complex64>,
    matrix: Vec<Complex64>,
}

impl BinGram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> BinSet {
        self.source
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    /// Entry `(row, col)`, which depends only on `row - col`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.n + col]
    }

    /// Row `row`; by Hermitian symmetry its conjugate is column `row`.
    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.matrix[row * self.n..(row + 1) * self.n]
    }

    /// Value of the Toeplitz kernel at lag `row - col`.
    #[inline]
    pub fn lag(&self, delta: isize) -> Complex64 {
        self.kernel[(delta + self.n as isize - 1) as usize]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    /// `G x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(Complex64::new(0.0, 0.0), |acc, (g, v)| acc + g * v)
            })
            .collect()
    }

    /// `xᴴ G x` (real for Hermitian `G`).
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        let gx = self.apply(x);
        x.iter().zip(&gx).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Largest `|G - Gᴴ|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }
}

/// Gram matrix of the undesired (`F_U`) or desired (`F_V`) bins of `mask`.
pub fn bin_gram(mask: &SpectralMask, which: BinSet) -> BinGram {
    let n = mask.n;
    let bins = mask.bins(which);
    let kernel: Vec<Complex64> = (0..2 * n - 1)
        .map(|i| {
            let delta = i as isize - (n as isize - 1);
            let d = delta.rem_euclid(n as isize) as usize;
            bins.iter()
                .fold(Complex64::new(0.0, 0.0), |acc, &k| acc + math::root_of_unity(k * d % n, n))
        })
        .collect();
    let mut matrix = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            matrix.push(kernel[r + n - 1 - c]);
        }
    }
    BinGram {
        n,
        source: which,
        bin_count: bins.len(),
        kernel,
        matrix,
    }
}

/// SILR with its numerator (`g_a`, undesired energy) and denominator
/// (`g_b`, desired energy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilrValue {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
}

impl SilrValue {
    pub fn ratio_db(&self) -> f64 {
        if self.ratio > 0.0 {
            math::db10(self.ratio)
        } else {
            PSD_FLOOR_DB
        }
    }
}

fn check_mask_len(set: &SequenceSet, n: usize) -> Result<()> {
    if set.n() != n {
        return Err(Error::LengthMismatch {
            left: set.n(),
            right: n,
        });
    }
    Ok(())
}

/// Undesired and desired spectral energy summed over transmitters, from
/// the per-bin DFT.
pub fn band_energies(set: &SequenceSet, mask: &SpectralMask) -> Result<(f64, f64)> {
    check_mask_len(set, mask.n)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for row in set.rows() {
        let spec = spectrum(row, mask.n);
        num += mask.undesired.iter().map(|&k| spec[k].norm_sqr()).sum::<f64>();
        den += mask.desired.iter().map(|&k| spec[k].norm_sqr()).sum::<f64>();
    }
    Ok((num, den))
}

/// SILR: undesired-bin energy over desired-bin energy.
pub fn silr(set: &SequenceSet, mask: &SpectralMask) -> Result<SilrValue> {
    mask.require_desired()?;
    let (numerator, denominator) = band_energies(set, mask)?;
    Ok(SilrValue {
        ratio: numerator / denominator,
        numerator,
        denominator,
    })
}

/// SILR through the Gram matrices, `Σ x_mᴴ F_U x_m / Σ x_mᴴ F_V x_m`.
pub fn silr_gram(set: &SequenceSet, fu: &BinGram, fv: &BinGram) -> Result<SilrValue> {
    check_mask_len(set, fu.n)?;
    check_mask_len(set, fv.n)?;
    if fv.bin_count == 0 {
        return Err(Error::DegenerateMask("F_V is empty".into()));
    }
    let numerator: f64 = set.rows().map(|r| fu.quadratic_form(r)).sum();
    let denominator: f64 = set.rows().map(|r| fv.quadratic_form(r)).sum();
    Ok(SilrValue {
        ratio: numerator / denominator,
        numerator,
        denominator,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
    Hamming,
}

impl Window {
    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        if len == 1 {
            return vec![1.0];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|i| {
                let c = math::cos(math::TAU * i as f64 / denom);
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Hamming => 0.54 - 0.46 * c,
                }
            })
            .collect()
    }
}

/// Windowed, zero-padded periodogram in dB on `nfft` bins.
///
/// Scaled by the squared coherent gain of the window, so a unit-amplitude
/// tone centred on a bin peaks at 0 dB.
pub fn psd(sequence: &[Complex64], nfft: usize, window: Window) -> Result<Vec<f64>> {
    if sequence.is_empty() {
        return Err(Error::param("sequence", "empty"));
    }
    if nfft < sequence.len() {
        return Err(Error::param(
            "nfft",
            format!("{nfft} is shorter than the sequence ({})", sequence.len()),
        ));
    }
    if sequence.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::param("sequence", "zero energy"));
    }
    let w = window.coefficients(sequence.len());
    let gain: f64 = w.iter().sum();
    let windowed: Vec<Complex64> = sequence.iter().zip(&w).map(|(z, &c)| z * c).collect();
    Ok(spectrum(&windowed, nfft)
        .into_iter()
        .map(|z| {
            let p = z.norm_sqr() / (gain * gain);
            if p > 0.0 {
                math::db10(p).max(PSD_FLOOR_DB)
            } else {
                PSD_FLOOR_DB
            }
        })
        .collect())
}

//! Single-entry forms of the objective.
//!
//! With every entry but `x_{t,d}` held fixed, the SILR numerator and
//! denominator and the scaled ICCL are each of the form
//! `h0·v + h1 + h2·v*` in the free value `v`, with `h2 = h0*` and `h1` real.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::correlation::{iccl_scale, xcorr_direct, CorrelationKind};
use crate::error::{Error, Result};
use crate::math;
use crate::sequence::SequenceSet;
use crate::spectral::BinGram;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients of the single-entry objective
/// `θ·(a0 v + a1 + a2 v*)/(b0 v + b1 + b2 v*) + (1-θ)·(c0 v + c1 + c2 v*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryCoefficients {
    pub a: [Complex64; 3],
    pub b: [Complex64; 3],
    pub c: [Complex64; 3],
}

impl Default for EntryCoefficients {
    fn default() -> Self {
        Self {
            a: [ZERO; 3],
            b: [ZERO, Complex64::new(1.0, 0.0), ZERO],
            c: [ZERO; 3],
        }
    }
}

#[inline]
fn three_term(h: &[Complex64; 3], v: Complex64) -> Complex64 {
    h[0] * v + h[1] + h[2] * v.conj()
}

impl EntryCoefficients {
    /// SILR numerator at `v`.
    pub fn numerator(&self, v: Complex64) -> Complex64 {
        three_term(&self.a, v)
    }

    /// SILR denominator at `v`.
    pub fn denominator(&self, v: Complex64) -> Complex64 {
        three_term(&self.b, v)
    }

    /// Scaled ICCL at `v`.
    pub fn cross(&self, v: Complex64) -> Complex64 {
        three_term(&self.c, v)
    }

    /// Objective at `v` as a complex number; its imaginary part is rounding
    /// residue only.
    pub fn eval_complex(&self, theta: f64, v: Complex64) -> Complex64 {
        let mut g = Complex64::new(0.0, 0.0);
        if theta > 0.0 {
            g += self.numerator(v) / self.denominator(v) * theta;
        }
        if theta < 1.0 {
            g += self.cross(v) * (1.0 - theta);
        }
        g
    }

    /// Objective at `v`, using the real parts of each three-term form.
    pub fn eval(&self, theta: f64, v: Complex64) -> f64 {
        let mut g = 0.0;
        if theta > 0.0 {
            g += theta * self.numerator(v).re / self.denominator(v).re;
        }
        if theta < 1.0 {
            g += (1.0 - theta) * self.cross(v).re;
        }
        g
    }

    /// Largest violation of `h2 = h0*` and of `h1` being real, relative to
    /// the coefficient magnitude.
    pub fn symmetry_defect(&self) -> f64 {
        [&self.a, &self.b, &self.c]
            .iter()
            .map(|h| {
                let scale = h[0].norm() + h[1].norm() + h[2].norm();
                if scale == 0.0 {
                    0.0
                } else {
                    ((h[2] - h[0].conj()).norm() + h[1].im.abs()) / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

fn check_entry(set: &SequenceSet, t: usize, d: usize) -> Result<()> {
    if t >= set.m() || d >= set.n() {
        return Err(Error::IndexOutOfRange {
            row: t,
            col: d,
            rows: set.m(),
            cols: set.n(),
        });
    }
    Ok(())
}

/// Three-term coefficients of `Σ_m x_mᴴ G x_m` in `x_{t,d}`.
fn quadratic_coefficients(set: &SequenceSet, t: usize, d: usize, gram: &BinGram) -> [Complex64; 3] {
    let n = set.n();
    let xt = set.row(t);
    // h0 = Σ_{k≠d} x*_{t,k} G_{k,d}
    let h0 = (0..n)
        .filter(|&k| k != d)
        .fold(ZERO, |acc, k| acc + xt[k].conj() * gram.get(k, d));
    let mut h1 = gram.get(d, d);
    for (m, row) in set.rows().enumerate() {
        if m == t {
            for k in (0..n).filter(|&k| k != d) {
                for l in (0..n).filter(|&l| l != d) {
                    h1 += row[k].conj() * gram.get(k, l) * row[l];
                }
            }
        } else {
            h1 += gram.quadratic_form(row);
        }
    }
    [h0, h1, h0.conj()]
}

/// SILR numerator (`a`) and denominator (`b`) coefficients for entry
/// `(t, d)`, evaluated from scratch.
pub fn silr_coefficients(
    set: &SequenceSet,
    t: usize,
    d: usize,
    fu: &BinGram,
    fv: &BinGram,
) -> Result<([Complex64; 3], [Complex64; 3])> {
    check_entry(set, t, d)?;
    for g in [fu, fv] {
        if g.n() != set.n() {
            return Err(Error::LengthMismatch {
                left: g.n(),
                right: set.n(),
            });
        }
    }
    Ok((
        quadratic_coefficients(set, t, d, fu),
        quadratic_coefficients(set, t, d, fv),
    ))
}

/// Scaled-ICCL coefficients `(c0, c1, c2)` for entry `(t, d)`, evaluated
/// from scratch.
///
/// For `m ≠ t`, `r_{m,t}(l) = α·x*_{t,d} + γ` with `α = x_{m,d-l}` (zero
/// when `d-l` falls outside the sequence) and `γ` collecting every other
/// term. Pairs not involving `t` contribute a constant.
pub fn iccl_coefficients(set: &SequenceSet, t: usize, d: usize) -> Result<[Complex64; 3]> {
    check_entry(set, t, d)?;
    let (m_count, n) = (set.m(), set.n());
    if m_count < 2 {
        return Ok([ZERO; 3]);
    }
    let scale = iccl_scale(m_count, n);
    let xtd = set.get(t, d);

    let mut others = 0.0;
    for m in 0..m_count {
        for m2 in 0..m_count {
            if m != m2 && m != t && m2 != t {
                others += xcorr_direct(set.row(m), set.row(m2), CorrelationKind::Aperiodic)?.energy();
            }
        }
    }

    let mut c0 = ZERO;
    let mut alpha_sq = 0.0;
    let mut gamma_sq = 0.0;
    for m in (0..m_count).filter(|&m| m != t) {
        let r = xcorr_direct(set.row(m), set.row(t), CorrelationKind::Aperiodic)?;
        for lag in r.lags() {
            let src = d as isize - lag;
            let alpha = if (0..n as isize).contains(&src) {
                set.get(m, src as usize)
            } else {
                ZERO
            };
            let gamma = r.at(lag) - alpha * xtd.conj();
            c0 += alpha.conj() * gamma;
            alpha_sq += alpha.norm_sqr();
            gamma_sq += gamma.norm_sqr();
        }
    }
    let c0 = c0 * (2.0 * scale);
    let c1 = Complex64::new(scale * (others + 2.0 * alpha_sq + 2.0 * gamma_sq), 0.0);
    Ok([c0, c1, c0.conj()])
}

/// Real trigonometric form `k + p·cos φ + q·sin φ` of a three-term
/// coefficient triple evaluated at `v = e^{jφ}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Harmonic {
    pub k: f64,
    pub p: f64,
    pub q: f64,
}

impl Harmonic {
    pub fn from_triple(h: &[Complex64; 3]) -> Self {
        Self {
            k: h[1].re,
            p: h[0].re + h[2].re,
            q: h[2].im - h[0].im,
        }
    }

    #[inline]
    pub fn value(&self, cos: f64, sin: f64) -> f64 {
        self.k + self.p * cos + self.q * sin
    }

    #[inline]
    pub fn derivative(&self, cos: f64, sin: f64) -> f64 {
        self.q * cos - self.p * sin
    }
}

/// Objective of one entry as a function of its phase.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhaseObjective {
    pub theta: f64,
    pub num: Harmonic,
    pub den: Harmonic,
    pub cross: Harmonic,
}

impl PhaseObjective {
    pub fn new(coeffs: &EntryCoefficients, theta: f64) -> Self {
        Self {
            theta,
            num: Harmonic::from_triple(&coeffs.a),
            den: Harmonic::from_triple(&coeffs.b),
            cross: Harmonic::from_triple(&coeffs.c),
        }
    }

    #[inline]
    pub fn value_cs(&self, cos: f64, sin: f64) -> f64 {
        let mut g = 0.0;
        if self.theta > 0.0 {
            g += self.theta * self.num.value(cos, sin) / self.den.value(cos, sin);
        }
        if self.theta < 1.0 {
            g += (1.0 - self.theta) * self.cross.value(cos, sin);
        }
        g
    }

    pub fn value(&self, phase: f64) -> f64 {
        self.value_cs(math::cos(phase), math::sin(phase))
    }

    pub fn derivative(&self, phase: f64) -> f64 {
        let (c, s) = (math::cos(phase), math::sin(phase));
        let mut g = 0.0;
        if self.theta > 0.0 {
            let (a, da) = (self.num.value(c, s), self.num.derivative(c, s));
            let (b, db) = (self.den.value(c, s), self.den.derivative(c, s));
            g += self.theta * (da * b - a * db) / (b * b);
        }
        if self.theta < 1.0 {
            g += (1.0 - self.theta) * self.cross.derivative(c, s);
        }
        g
    }
}

/// Objective at every point of `Ω_L`, through `L`-point DFTs of the
/// coefficient triples (folded to two terms for `L = 2`).
///
/// With `w = e^{-j2π/L}`, `DFT_L{h}(l) = Σ_i h_i w^{il}` and the three-term
/// form at `v = e^{j2πl/L}` equals `e^{j2πl/L}·DFT_L{h}(l)`. The prefactor
/// cancels in the SILR ratio.
pub(crate) fn discrete_values(
    coeffs: &EntryCoefficients,
    theta: f64,
    levels: usize,
    twiddles: &[Complex64],
    out: &mut Vec<f64>,
) -> Result<()> {
    debug_assert_eq!(twiddles.len(), levels);
    out.clear();
    let dft = |h: &[Complex64; 3], l: usize| -> Complex64 {
        if levels == 2 {
            let sign = if l == 0 { 1.0 } else { -1.0 };
            (h[0] + h[2]) + h[1] * sign
        } else {
            h[0] + h[1] * twiddles[l % levels] + h[2] * twiddles[(2 * l) % levels]
        }
    };
    for l in 0..levels {
        let prefactor = twiddles[l % levels].conj();
        let mut g = 0.0;
        if theta > 0.0 {
            let den = dft(&coeffs.b, l);
            if !((prefactor * den).re > 0.0) {
                return Err(Error::DegenerateMask(
                    "nonpositive SILR denominator on the phase grid".into(),
                ));
            }
            g += theta * (dft(&coeffs.a, l) / den).re;
        }
        if theta < 1.0 {
            g += (1.0 - theta) * (prefactor * dft(&coeffs.c, l)).re;
        }
        out.push(g);
    }
    Ok(())
}

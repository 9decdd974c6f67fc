//! Scalar math routed through `libm` so results are identical with and
//! without `std`, and across platforms.

use core::f64::consts::PI;

use num_complex::Complex64;

pub const TAU: f64 = 2.0 * PI;

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Round half away from zero.
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::new(cos(phase), sin(phase))
}

/// Phase of `z` wrapped to `[0, 2π)`.
#[inline]
pub fn phase_of(z: Complex64) -> f64 {
    wrap_phase(atan2(z.im, z.re))
}

#[inline]
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase % TAU;
    if p < 0.0 {
        p += TAU;
    }
    if p >= TAU {
        p -= TAU;
    }
    p
}

/// `e^{j2πk/n}` with `k` reduced modulo `n`; quarter-turn points are exact.
pub fn root_of_unity(k: usize, n: usize) -> Complex64 {
    let k = k % n;
    if (4 * k).is_multiple_of(n) {
        return match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    cis(TAU * k as f64 / n as f64)
}

/// Table of `e^{sign·j2πk/n}` for `k = 0..n`.
pub fn twiddles(n: usize, sign: f64) -> alloc::vec::Vec<Complex64> {
    (0..n)
        .map(|k| {
            let w = root_of_unity(k, n);
            if sign < 0.0 {
                w.conj()
            } else {
                w
            }
        })
        .collect()
}

pub fn db10(x: f64) -> f64 {
    10.0 * log10(x)
}

use std::vec::Vec;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Aperiodic cross-correlation `r(l) = Σ_n x_n y*_{n+l}`, returned for
/// `l = -(N-1)..N-1`.
pub fn aperiodic_xcorr(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let size = (2 * n - 1).next_power_of_two();
    circular(x, y, size)
        .map(|c| (0..2 * n - 1).map(|i| {
            let lag = i as isize - (n as isize - 1);
            c[((-lag).rem_euclid(size as isize)) as usize]
        }).collect())
        .unwrap_or_default()
}

/// Periodic cross-correlation `r(l) = Σ_n x_n y*_{(n+l) mod N}` for
/// `l = 0..N`.
pub fn periodic_xcorr(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    circular(x, y, n)
        .map(|c| (0..n).map(|l| c[(n - l) % n]).collect())
        .unwrap_or_default()
}

/// `c(q) = Σ_n x_{n+q} y*_n` on a cyclic grid of `size` points.
fn circular(x: &[Complex64], y: &[Complex64], size: usize) -> Option<Vec<Complex64>> {
    if size == 0 {
        return None;
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut a = vec![Complex64::new(0.0, 0.0); size];
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    a[..x.len()].copy_from_slice(x);
    b[..y.len()].copy_from_slice(y);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q.conj();
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a.iter_mut().for_each(|z| *z *= scale);
    Some(a)
}

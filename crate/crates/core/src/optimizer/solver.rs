//! Exact minimization of the objective over a single phase.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, TAU};

use super::coefficients::{discrete_values, EntryCoefficients, PhaseObjective};

const MAX_HALVINGS: usize = 60;
const DERIVATIVE_TOLERANCE: f64 = 1e-12;

/// Grid + derivative-bisection minimizer for the continuous alphabet.
///
/// Holds the cosine/sine table of the uniform grid so repeated solves do
/// not recompute it.
#[derive(Debug, Clone)]
pub(crate) struct ContinuousSolver {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ContinuousSolver {
    pub fn new(grid_points: usize) -> Result<Self> {
        if grid_points < 3 {
            return Err(Error::param("grid_points", "need at least 3 grid points"));
        }
        let step = TAU / grid_points as f64;
        Ok(Self {
            cos: (0..grid_points).map(|i| math::cos(step * i as f64)).collect(),
            sin: (0..grid_points).map(|i| math::sin(step * i as f64)).collect(),
        })
    }

    fn step(&self) -> f64 {
        TAU / self.cos.len() as f64
    }

    /// Returns a phase whose objective is strictly below the current one,
    /// or `current` itself when no such phase is found.
    pub fn solve(&self, f: &PhaseObjective, current: f64) -> Result<f64> {
        let g_current = f.value(current);
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        let check_den = f.theta > 0.0;
        for (i, (&c, &s)) in self.cos.iter().zip(&self.sin).enumerate() {
            if check_den && !(f.den.value(c, s) > 0.0) {
                return Err(Error::DegenerateMask(
                    "SILR denominator is not positive for some phase".into(),
                ));
            }
            let v = f.value_cs(c, s);
            if v < best_val {
                best_val = v;
                best = i;
            }
        }
        let step = self.step();
        let mut best_phase = step * best as f64;

        let mut lo = best_phase - step;
        let mut hi = best_phase + step;
        if f.derivative(lo) < 0.0 && f.derivative(hi) > 0.0 {
            let mut mid = best_phase;
            for _ in 0..MAX_HALVINGS {
                mid = 0.5 * (lo + hi);
                let d = f.derivative(mid);
                if d.abs() <= DERIVATIVE_TOLERANCE {
                    break;
                }
                if d < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let refined = f.value(mid);
            if refined < best_val {
                best_val = refined;
                best_phase = mid;
            }
        }
        if best_val < g_current {
            Ok(math::wrap_phase(best_phase))
        } else {
            Ok(current)
        }
    }
}

/// Minimize the single-entry objective over a continuous phase.
///
/// Evaluates a uniform grid of `grid_points` phases, refines the best cell
/// by bisection on the derivative, and never returns a phase worse than
/// `current_phase`.
pub fn solve_phase_continuous(
    coeffs: &EntryCoefficients,
    theta: f64,
    current_phase: f64,
    grid_points: usize,
) -> Result<f64> {
    check_theta(theta)?;
    let solver = ContinuousSolver::new(grid_points)?;
    solver.solve(&PhaseObjective::new(coeffs, theta), current_phase)
}

/// Minimize over `Ω_L`; returns `(index, phase)` of the smallest objective,
/// ties going to the lowest index.
pub fn solve_phase_discrete(coeffs: &EntryCoefficients, theta: f64, levels: u32) -> Result<(u32, f64)> {
    check_theta(theta)?;
    if levels < 2 {
        return Err(Error::param("L", "need L >= 2"));
    }
    let l = levels as usize;
    let tw = math::twiddles(l, -1.0);
    let mut values = Vec::with_capacity(l);
    discrete_values(coeffs, theta, l, &tw, &mut values)?;
    let best = argmin(&values);
    Ok((best as u32, TAU * best as f64 / l as f64))
}

/// Objective at every grid point of `Ω_L` via the DFT path.
pub fn discrete_objective_values(coeffs: &EntryCoefficients, theta: f64, levels: u32) -> Result<Vec<f64>> {
    check_theta(theta)?;
    let l = levels as usize;
    if l < 2 {
        return Err(Error::param("L", "need L >= 2"));
    }
    let tw = math::twiddles(l, -1.0);
    let mut values = Vec::with_capacity(l);
    discrete_values(coeffs, theta, l, &tw, &mut values)?;
    Ok(values)
}

/// First index of the minimum.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", alloc::format!("must lie in [0, 1], got {theta}")));
    }
    Ok(())
}

//! Coordinate-descent design of sequence sets.
//!
//! The objective is `g(X) = θ·g_s(X) + (1-θ)·g_c(X)` where `g_s` is the SILR
//! of the set on a spectral mask and `g_c` its ICCL scaled by `1/(2MN)²`.
//! A sweep visits every entry in row-major order (rows in `row_order` when
//! given) and replaces it by the exact minimizer of `g` over that entry's
//! admissible phases, so `g` never increases.

mod coefficients;
mod design;
mod solver;

use alloc::vec::Vec;

pub use coefficients::{iccl_coefficients, silr_coefficients, EntryCoefficients};
pub use design::{cd_design, cd_design_observed, UpdateEvent};
pub use solver::{discrete_objective_values, solve_phase_continuous, solve_phase_discrete};

use crate::correlation::iccl;
use crate::error::{Error, Result};
use crate::sequence::{PhaseAlphabet, SequenceSet};
use crate::spectral::{silr, SpectralMask};

/// Default stopping threshold on `‖X⁽ⁱ⁾ − X⁽ⁱ⁻¹⁾‖_F`.
pub const DEFAULT_ZETA: f64 = 1e-5;
pub const DEFAULT_MAX_SWEEPS: usize = 1000;
pub const DEFAULT_GRID_POINTS: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct CdConfig {
    /// Weight of SILR against scaled ICCL, in `[0, 1]`.
    pub theta: f64,
    pub alphabet: PhaseAlphabet,
    /// Stop once a sweep moves the set by at most this much (Frobenius).
    pub zeta: f64,
    pub max_sweeps: usize,
    /// Grid size of the continuous-phase solver.
    pub grid_points: usize,
    /// Row visiting order within a sweep; `None` is `0..M`.
    pub row_order: Option<Vec<usize>>,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            alphabet: PhaseAlphabet::Continuous,
            zeta: DEFAULT_ZETA,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            grid_points: DEFAULT_GRID_POINTS,
            row_order: None,
        }
    }
}

impl CdConfig {
    pub fn validate(&self) -> Result<()> {
        solver::check_theta(self.theta)?;
        if !(self.zeta > 0.0) {
            return Err(Error::param("zeta", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::param("max_sweeps", "must be positive"));
        }
        if self.grid_points < 3 {
            return Err(Error::param("grid_points", "need at least 3 grid points"));
        }
        self.alphabet.check()
    }
}

/// Objective value with its two components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub g: f64,
    /// SILR; `NaN` when the mask has no desired bins and `θ = 0`.
    pub g_s: f64,
    /// Scaled ICCL.
    pub g_c: f64,
}

/// Evaluate `g = θ·g_s + (1-θ)·g_c` from scratch.
pub fn objective(set: &SequenceSet, mask: &SpectralMask, theta: f64) -> Result<ObjectiveValue> {
    solver::check_theta(theta)?;
    if mask.n() != set.n() {
        return Err(Error::LengthMismatch {
            left: mask.n(),
            right: set.n(),
        });
    }
    let g_s = if mask.is_degenerate() {
        if theta > 0.0 {
            mask.require_desired()?;
        }
        f64::NAN
    } else {
        silr(set, mask)?.ratio
    };
    let g_c = iccl(set).scaled;
    let g = if theta == 0.0 {
        g_c
    } else if theta == 1.0 {
        g_s
    } else {
        theta * g_s + (1.0 - theta) * g_c
    };
    Ok(ObjectiveValue { g, g_s, g_c })
}

/// Outcome of a coordinate-descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub final_set: SequenceSet,
    /// `g` before the first sweep, then after every sweep.
    pub objective_trace: Vec<f64>,
    /// Components matching `objective_trace`.
    pub component_trace: Vec<ObjectiveValue>,
    /// `‖ΔX‖_F` of every sweep.
    pub delta_trace: Vec<f64>,
    pub sweeps: usize,
    /// Stopped on `‖ΔX‖_F <= ζ` rather than on the sweep cap.
    pub converged: bool,
    pub components: ObjectiveValue,
    /// Largest single-update change of `g` seen, from the entry forms.
    pub max_update_increase: f64,
}

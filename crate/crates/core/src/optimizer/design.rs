//! Incremental coordinate-descent engine.
//!
//! Per entry update the engine keeps, instead of recomputing from scratch:
//! the SILR numerator/denominator totals, `F_U x_t` and `F_V x_t` for the
//! row being swept, every ordered-pair cross-correlation and the raw ICCL.
//! Totals are refreshed from scratch at the start of each sweep.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::correlation::{iccl_scale, xcorr, CorrelationKind};
use crate::error::{Error, Result};
use crate::math;
use crate::sequence::{is_permutation, nearest_index, validate, PhaseAlphabet, SequenceSet};
use crate::spectral::{bin_gram, BinGram, BinSet, SpectralMask};

use super::coefficients::{discrete_values, EntryCoefficients, PhaseObjective};
use super::solver::{argmin, ContinuousSolver};
use super::{objective, CdConfig, DesignResult, ObjectiveValue};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One single-entry update, as seen by an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateEvent {
    /// 1-based sweep number.
    pub sweep: usize,
    pub t: usize,
    pub d: usize,
    /// Objective before and after, from the entry's coefficient form.
    pub before: f64,
    pub after: f64,
    pub changed: bool,
}

enum PhaseSolver {
    Continuous(ContinuousSolver),
    Discrete { levels: usize, twiddles: Vec<Complex64> },
}

struct Spectral {
    fu: BinGram,
    fv: BinGram,
    ga: f64,
    gb: f64,
    wu: Vec<Complex64>,
    wv: Vec<Complex64>,
}

struct Cross {
    /// `r[(m·M + m2)·(2N-1) + l + N-1] = r_{m,m2}(l)`.
    r: Vec<Complex64>,
    raw: f64,
    scale: f64,
}

struct Designer {
    m: usize,
    n: usize,
    theta: f64,
    alphabet: PhaseAlphabet,
    x: Vec<Complex64>,
    idx: Vec<u32>,
    spectral: Option<Spectral>,
    cross: Option<Cross>,
    solver: PhaseSolver,
    values: Vec<f64>,
}

impl Designer {
    fn new(init: &SequenceSet, mask: &SpectralMask, config: &CdConfig) -> Result<Self> {
        let (m, n) = (init.m(), init.n());
        let idx = match config.alphabet {
            PhaseAlphabet::Continuous => Vec::new(),
            PhaseAlphabet::Discrete { levels } => match init.phase_indices() {
                Some(i) => i.to_vec(),
                None => init.entries().iter().map(|&z| nearest_index(math::phase_of(z), levels)).collect(),
            },
        };
        let spectral = (config.theta > 0.0).then(|| Spectral {
            fu: bin_gram(mask, BinSet::Undesired),
            fv: bin_gram(mask, BinSet::Desired),
            ga: 0.0,
            gb: 0.0,
            wu: vec![ZERO; n],
            wv: vec![ZERO; n],
        });
        let cross = (config.theta < 1.0 && m > 1).then(|| Cross {
            r: vec![ZERO; m * m * (2 * n - 1)],
            raw: 0.0,
            scale: iccl_scale(m, n),
        });
        let solver = match config.alphabet {
            PhaseAlphabet::Continuous => PhaseSolver::Continuous(ContinuousSolver::new(config.grid_points)?),
            PhaseAlphabet::Discrete { levels } => PhaseSolver::Discrete {
                levels: levels as usize,
                twiddles: math::twiddles(levels as usize, -1.0),
            },
        };
        Ok(Self {
            m,
            n,
            theta: config.theta,
            alphabet: config.alphabet,
            x: init.entries().to_vec(),
            idx,
            spectral,
            cross,
            solver,
            values: Vec::new(),
        })
    }

    fn lags(&self) -> usize {
        2 * self.n - 1
    }

    fn row(&self, t: usize) -> &[Complex64] {
        &self.x[t * self.n..(t + 1) * self.n]
    }

    fn pair_offset(&self, m: usize, m2: usize) -> usize {
        (m * self.m + m2) * self.lags()
    }

    /// Recompute every maintained total from the current entries.
    fn refresh(&mut self) -> Result<()> {
        if let Some(sp) = self.spectral.as_ref() {
            let (mut ga, mut gb) = (0.0, 0.0);
            for t in 0..self.m {
                ga += sp.fu.quadratic_form(self.row(t));
                gb += sp.fv.quadratic_form(self.row(t));
            }
            let sp = self.spectral.as_mut().expect("checked above");
            sp.ga = ga;
            sp.gb = gb;
        }
        if self.cross.is_some() {
            let lags = self.lags();
            let mut r = vec![ZERO; self.m * self.m * lags];
            let mut raw = 0.0;
            for m in 0..self.m {
                for m2 in 0..self.m {
                    if m == m2 {
                        continue;
                    }
                    let p = xcorr(self.row(m), self.row(m2), CorrelationKind::Aperiodic)?;
                    let off = self.pair_offset(m, m2);
                    r[off..off + lags].copy_from_slice(p.values());
                    raw += p.energy();
                }
            }
            if let Some(cr) = &mut self.cross {
                cr.r = r;
                cr.raw = raw;
            }
        }
        Ok(())
    }

    fn begin_row(&mut self, t: usize) {
        let n = self.n;
        if let Some(sp) = self.spectral.as_mut() {
            let row = &self.x[t * n..(t + 1) * n];
            sp.wu = sp.fu.apply(row);
            sp.wv = sp.fv.apply(row);
        }
    }

    fn coefficients(&self, t: usize, d: usize) -> EntryCoefficients {
        let n = self.n;
        let xd = self.x[t * n + d];
        let mut out = EntryCoefficients::default();
        if let Some(sp) = self.spectral.as_ref() {
            let form = |w: &[Complex64], g: &BinGram, total: f64| {
                let diag = g.get(d, d);
                let h0 = w[d].conj() - diag * xd.conj();
                let h2 = h0.conj();
                let h1 = total - (h0 * xd + h2 * xd.conj()).re - diag.re * xd.norm_sqr() + diag.re;
                [h0, Complex64::new(h1, 0.0), h2]
            };
            out.a = form(&sp.wu, &sp.fu, sp.ga);
            out.b = form(&sp.wv, &sp.fv, sp.gb);
        }
        if let Some(cr) = self.cross.as_ref() {
            let mut c0 = ZERO;
            let (mut r_sq, mut gamma_sq, mut alpha_sq) = (0.0, 0.0, 0.0);
            for m in (0..self.m).filter(|&m| m != t) {
                let off = self.pair_offset(m, t) + d + n - 1;
                let xm = self.row(m);
                for (k, &alpha) in xm.iter().enumerate() {
                    // lag l = d - k
                    let r = cr.r[off - k];
                    let gamma = r - alpha * xd.conj();
                    c0 += alpha.conj() * gamma;
                    r_sq += r.norm_sqr();
                    gamma_sq += gamma.norm_sqr();
                    alpha_sq += alpha.norm_sqr();
                }
            }
            let c0 = c0 * (2.0 * cr.scale);
            let c1 = cr.scale * (cr.raw - 2.0 * r_sq + 2.0 * gamma_sq + 2.0 * alpha_sq);
            out.c = [c0, Complex64::new(c1, 0.0), c0.conj()];
        }
        out
    }

    fn apply(&mut self, t: usize, d: usize, v: Complex64, coeffs: &EntryCoefficients) {
        let n = self.n;
        let lags = self.lags();
        let delta = v - self.x[t * n + d];
        if let Some(sp) = self.spectral.as_mut() {
            sp.ga = coeffs.numerator(v).re;
            sp.gb = coeffs.denominator(v).re;
            for k in 0..n {
                sp.wu[k] += sp.fu.get(k, d) * delta;
                sp.wv[k] += sp.fv.get(k, d) * delta;
            }
        }
        if let Some(cr) = &mut self.cross {
            let m_count = self.m;
            let x = &self.x;
            cr.raw = coeffs.cross(v).re / cr.scale;
            for m in (0..m_count).filter(|&m| m != t) {
                let xm = &x[m * n..(m + 1) * n];
                // r_{m,t}(l) gains x_{m,d-l}·δ*
                let off = (m * m_count + t) * lags + d + n - 1;
                for (k, &a) in xm.iter().enumerate() {
                    cr.r[off - k] += a * delta.conj();
                }
                // r_{t,m}(l) gains δ·x*_{m,d+l}
                let off = (t * m_count + m) * lags + n - 1 - d;
                for (p, &a) in xm.iter().enumerate() {
                    cr.r[off + p] += delta * a.conj();
                }
            }
        }
        self.x[t * n + d] = v;
    }

    /// One full sweep; returns `‖ΔX‖_F`.
    fn sweep(
        &mut self,
        sweep: usize,
        order: &[usize],
        max_increase: &mut f64,
        observer: &mut dyn FnMut(&UpdateEvent),
    ) -> Result<f64> {
        self.refresh()?;
        let mut moved = 0.0;
        for &t in order {
            self.begin_row(t);
            for d in 0..self.n {
                let coeffs = self.coefficients(t, d);
                let cur = self.x[t * self.n + d];
                let before = coeffs.eval(self.theta, cur);
                let (v, index) = match &self.solver {
                    PhaseSolver::Continuous(solver) => {
                        let phase = math::phase_of(cur);
                        let f = PhaseObjective::new(&coeffs, self.theta);
                        let best = solver.solve(&f, phase)?;
                        if best == phase {
                            (cur, None)
                        } else {
                            (math::cis(best), None)
                        }
                    }
                    PhaseSolver::Discrete { levels, twiddles } => {
                        discrete_values(&coeffs, self.theta, *levels, twiddles, &mut self.values)?;
                        let cur_idx = self.idx[t * self.n + d] as usize;
                        let best = argmin(&self.values);
                        if self.values[best] < self.values[cur_idx] {
                            (math::root_of_unity(best, *levels), Some(best as u32))
                        } else {
                            (cur, None)
                        }
                    }
                };
                let changed = v != cur;
                let after = if changed { coeffs.eval(self.theta, v) } else { before };
                *max_increase = max_increase.max(after - before);
                if changed {
                    moved += (v - cur).norm_sqr();
                    self.apply(t, d, v, &coeffs);
                    if let Some(i) = index {
                        self.idx[t * self.n + d] = i;
                    }
                }
                observer(&UpdateEvent {
                    sweep,
                    t,
                    d,
                    before,
                    after,
                    changed,
                });
            }
        }
        Ok(math::sqrt(moved))
    }

    fn to_set(&self) -> Result<SequenceSet> {
        match self.alphabet {
            PhaseAlphabet::Continuous => {
                SequenceSet::from_entries(self.m, self.n, self.alphabet, self.x.clone())
            }
            PhaseAlphabet::Discrete { levels } => {
                SequenceSet::from_phase_indices(self.m, self.n, levels, self.idx.clone())
            }
        }
    }
}

/// Run coordinate descent from `init` until a sweep moves the set by at
/// most `zeta` or `max_sweeps` sweeps have run.
pub fn cd_design(init: &SequenceSet, mask: &SpectralMask, config: &CdConfig) -> Result<DesignResult> {
    cd_design_observed(init, mask, config, &mut |_| {})
}

/// [`cd_design`] reporting every single-entry update to `observer`.
pub fn cd_design_observed(
    init: &SequenceSet,
    mask: &SpectralMask,
    config: &CdConfig,
    observer: &mut dyn FnMut(&UpdateEvent),
) -> Result<DesignResult> {
    config.validate()?;
    if init.alphabet() != config.alphabet {
        return Err(Error::AlphabetMismatch(format!(
            "initial set uses {:?}, config asks for {:?}",
            init.alphabet(),
            config.alphabet
        )));
    }
    if let Some(v) = validate(init).first() {
        return Err(Error::param("init", format!("{v}")));
    }
    if mask.n() != init.n() {
        return Err(Error::LengthMismatch {
            left: mask.n(),
            right: init.n(),
        });
    }
    if config.theta > 0.0 {
        mask.require_desired()?;
    }
    let order: Vec<usize> = match &config.row_order {
        Some(o) => {
            if !is_permutation(o, init.m()) {
                return Err(Error::param("row_order", "not a permutation of the rows"));
            }
            o.clone()
        }
        None => (0..init.m()).collect(),
    };

    let mut engine = Designer::new(init, mask, config)?;
    let start = objective(init, mask, config.theta)?;
    let mut objective_trace = vec![start.g];
    let mut component_trace = vec![start];
    let mut delta_trace = Vec::new();
    let mut max_update_increase = f64::NEG_INFINITY;
    let mut converged = false;
    let mut current: ObjectiveValue = start;
    let mut set = init.clone();

    for sweep in 1..=config.max_sweeps {
        let delta = engine.sweep(sweep, &order, &mut max_update_increase, observer)?;
        set = engine.to_set()?;
        current = objective(&set, mask, config.theta)?;
        objective_trace.push(current.g);
        component_trace.push(current);
        delta_trace.push(delta);
        if delta <= config.zeta {
            converged = true;
            break;
        }
    }

    Ok(DesignResult {
        final_set: set,
        sweeps: delta_trace.len(),
        objective_trace,
        component_trace,
        delta_trace,
        converged,
        components: current,
        max_update_increase,
    })
}

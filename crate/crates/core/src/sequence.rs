//! Sequence-set representation, phase alphabets, random initialization and
//! invariant checking.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{self, TAU};
use crate::rng::RngSpec;

/// Modulus tolerance for continuous-phase entries.
pub const MODULUS_TOLERANCE: f64 = 1e-12;

/// Phase tolerance used when a discrete set carries no stored indices and
/// membership has to be judged from the complex value.
const PHASE_TOLERANCE: f64 = 1e-12;

/// Admissible phases: the whole circle, or the `L`-PSK grid `{2πl/L}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseAlphabet {
    Continuous,
    Discrete { levels: u32 },
}

impl PhaseAlphabet {
    pub fn discrete(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(Error::param("L", format!("discrete alphabet needs L >= 2, got {levels}")));
        }
        Ok(PhaseAlphabet::Discrete { levels })
    }

    pub fn levels(&self) -> Option<u32> {
        match *self {
            PhaseAlphabet::Continuous => None,
            PhaseAlphabet::Discrete { levels } => Some(levels),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, PhaseAlphabet::Discrete { .. })
    }

    /// Phase of grid point `index`.
    pub fn grid_phase(levels: u32, index: u32) -> f64 {
        TAU * f64::from(index % levels) / f64::from(levels)
    }

    pub(crate) fn check(&self) -> Result<()> {
        match *self {
            PhaseAlphabet::Discrete { levels } if levels < 2 => Err(Error::param(
                "L",
                format!("discrete alphabet needs L >= 2, got {levels}"),
            )),
            _ => Ok(()),
        }
    }
}

/// An `M x N` matrix of transmit samples, one row per transmitter.
///
/// Discrete sets keep the integer phase index of every entry next to the
/// complex value, so alphabet membership is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    m: usize,
    n: usize,
    alphabet: PhaseAlphabet,
    entries: Vec<Complex64>,
    indices: Option<Vec<u32>>,
}

impl SequenceSet {
    fn check_dims(m: usize, n: usize, len: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::param("M", "need at least one transmitter"));
        }
        if n == 0 {
            return Err(Error::param("N", "sequence length must be positive"));
        }
        if len != m * n {
            return Err(Error::LengthMismatch {
                left: len,
                right: m * n,
            });
        }
        Ok(())
    }

    /// Continuous-phase set `x_{m,n} = e^{jφ_{m,n}}` from row-major phases.
    pub fn from_phases(m: usize, n: usize, phases: &[f64]) -> Result<Self> {
        Self::check_dims(m, n, phases.len())?;
        Ok(Self {
            m,
            n,
            alphabet: PhaseAlphabet::Continuous,
            entries: phases.iter().map(|&p| math::cis(p)).collect(),
            indices: None,
        })
    }

    /// Discrete set from row-major phase indices in `0..levels`.
    pub fn from_phase_indices(m: usize, n: usize, levels: u32, indices: Vec<u32>) -> Result<Self> {
        let alphabet = PhaseAlphabet::discrete(levels)?;
        Self::check_dims(m, n, indices.len())?;
        if let Some(pos) = indices.iter().position(|&i| i >= levels) {
            return Err(Error::param(
                "phase_index",
                format!("index {} at ({}, {}) is not below L = {levels}", indices[pos], pos / n, pos % n),
            ));
        }
        let entries = indices
            .iter()
            .map(|&i| math::root_of_unity(i as usize, levels as usize))
            .collect();
        Ok(Self {
            m,
            n,
            alphabet,
            entries,
            indices: Some(indices),
        })
    }

    /// Raw constructor: no invariant is checked. Use [`validate`] to inspect
    /// the result, or [`SequenceSet::checked`] to reject violations.
    pub fn from_entries(m: usize, n: usize, alphabet: PhaseAlphabet, entries: Vec<Complex64>) -> Result<Self> {
        Self::check_dims(m, n, entries.len())?;
        alphabet.check()?;
        Ok(Self {
            m,
            n,
            alphabet,
            entries,
            indices: None,
        })
    }

    /// Like [`SequenceSet::from_entries`] but fails on the first invariant
    /// violation. Discrete entries that sit on the grid get their indices
    /// recovered.
    pub fn checked(m: usize, n: usize, alphabet: PhaseAlphabet, entries: Vec<Complex64>) -> Result<Self> {
        let raw = Self::from_entries(m, n, alphabet, entries)?;
        if let Some(v) = validate(&raw).into_iter().next() {
            return Err(Error::param("entries", format!("{v}")));
        }
        match alphabet {
            PhaseAlphabet::Continuous => Ok(raw),
            PhaseAlphabet::Discrete { levels } => {
                let indices = raw.entries.iter().map(|&z| nearest_index(math::phase_of(z), levels)).collect();
                Self::from_phase_indices(m, n, levels, indices)
            }
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> PhaseAlphabet {
        self.alphabet
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.n + n]
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.entries[m * self.n..(m + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks_exact(self.n)
    }

    /// Stored phase indices (discrete sets built from indices only).
    pub fn phase_indices(&self) -> Option<&[u32]> {
        self.indices.as_deref()
    }

    pub fn phase_index(&self, m: usize, n: usize) -> Option<u32> {
        self.indices.as_ref().map(|idx| idx[m * self.n + n])
    }

    pub fn phase(&self, m: usize, n: usize) -> f64 {
        match (self.alphabet, self.phase_index(m, n)) {
            (PhaseAlphabet::Discrete { levels }, Some(i)) => PhaseAlphabet::grid_phase(levels, i),
            _ => math::phase_of(self.get(m, n)),
        }
    }

    /// Same entries under a different alphabet label, without any checks.
    /// Indices are dropped, so membership is judged from the values.
    pub fn relabeled(&self, alphabet: PhaseAlphabet) -> Self {
        Self {
            m: self.m,
            n: self.n,
            alphabet,
            entries: self.entries.clone(),
            indices: None,
        }
    }

    /// Rows reordered so that row `i` of the result is row `order[i]` here.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        if !is_permutation(order, self.m) {
            return Err(Error::param("order", "not a permutation of the rows"));
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for &r in order {
            entries.extend_from_slice(self.row(r));
        }
        let indices = self.indices.as_ref().map(|idx| {
            order
                .iter()
                .flat_map(|&r| idx[r * self.n..(r + 1) * self.n].iter().copied())
                .collect()
        });
        Ok(Self {
            m: self.m,
            n: self.n,
            alphabet: self.alphabet,
            entries,
            indices,
        })
    }

    /// Frobenius norm of the entrywise difference.
    pub fn distance(&self, other: &SequenceSet) -> Result<f64> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::LengthMismatch {
                left: self.entries.len(),
                right: other.entries.len(),
            });
        }
        let s: f64 = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok(math::sqrt(s))
    }
}

pub(crate) fn is_permutation(order: &[usize], len: usize) -> bool {
    if order.len() != len {
        return false;
    }
    let mut seen = alloc::vec![false; len];
    for &o in order {
        if o >= len || seen[o] {
            return false;
        }
        seen[o] = true;
    }
    true
}

/// Random-phase set with i.i.d. uniform phases (continuous) or i.i.d.
/// uniform phase indices (discrete).
pub fn random_phase_set(m: usize, n: usize, alphabet: PhaseAlphabet, rng: RngSpec) -> Result<SequenceSet> {
    alphabet.check()?;
    SequenceSet::check_dims(m, n, m * n)?;
    let mut r = rng.rng();
    match alphabet {
        PhaseAlphabet::Continuous => {
            let phases: Vec<f64> = (0..m * n).map(|_| r.random::<f64>() * TAU).collect();
            SequenceSet::from_phases(m, n, &phases)
        }
        PhaseAlphabet::Discrete { levels } => {
            let idx = (0..m * n).map(|_| r.random_range(0..levels)).collect();
            SequenceSet::from_phase_indices(m, n, levels, idx)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// `| |x| - 1 |` above tolerance.
    Modulus { modulus: f64 },
    /// Phase not on the discrete grid.
    AlphabetMembership { phase: f64 },
    /// Stored index outside `0..L`, or stored value disagrees with its index.
    IndexMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub m: usize,
    pub n: usize,
    pub kind: ViolationKind,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.kind {
            ViolationKind::Modulus { modulus } => {
                write!(f, "entry ({}, {}) has modulus {modulus}, expected 1", self.m, self.n)
            }
            ViolationKind::AlphabetMembership { phase } => {
                write!(f, "entry ({}, {}) has phase {phase} outside the alphabet", self.m, self.n)
            }
            ViolationKind::IndexMismatch => {
                write!(f, "entry ({}, {}) disagrees with its phase index", self.m, self.n)
            }
        }
    }
}

/// Every invariant violation of `set`; empty iff the set is valid.
pub fn validate(set: &SequenceSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for (pos, &z) in set.entries.iter().enumerate() {
        let (m, n) = (pos / set.n, pos % set.n);
        let modulus = z.norm();
        if !((modulus - 1.0).abs() <= MODULUS_TOLERANCE) {
            out.push(Violation {
                m,
                n,
                kind: ViolationKind::Modulus { modulus },
            });
            continue;
        }
        if let PhaseAlphabet::Discrete { levels } = set.alphabet {
            match &set.indices {
                Some(idx) => {
                    let i = idx[pos];
                    if i >= levels || math::root_of_unity(i as usize, levels as usize) != z {
                        out.push(Violation {
                            m,
                            n,
                            kind: ViolationKind::IndexMismatch,
                        });
                    }
                }
                None => {
                    let phase = math::phase_of(z);
                    let step = TAU / f64::from(levels);
                    let q = phase / step;
                    let off = (q - math::round(q)).abs() * step;
                    if off > PHASE_TOLERANCE {
                        out.push(Violation {
                            m,
                            n,
                            kind: ViolationKind::AlphabetMembership { phase },
                        });
                    }
                }
            }
        }
    }
    out
}

/// Nearest grid index for `phase` in `[0, 2π)`; exact half-way ties go to
/// the lower index.
pub fn nearest_index(phase: f64, levels: u32) -> u32 {
    let q = math::wrap_phase(phase) * f64::from(levels) / TAU;
    let base = math::floor(q);
    let frac = q - base;
    let idx = if frac > 0.5 { base + 1.0 } else { base };
    (idx as u64 % u64::from(levels)) as u32
}

/// Map every entry to the nearest point of the `L`-PSK grid.
pub fn quantize_to_alphabet(set: &SequenceSet, levels: u32) -> Result<SequenceSet> {
    PhaseAlphabet::discrete(levels)?;
    let indices = (0..set.m)
        .flat_map(|m| (0..set.n).map(move |n| (m, n)))
        .map(|(m, n)| nearest_index(set.phase(m, n), levels))
        .collect();
    SequenceSet::from_phase_indices(set.m, set.n, levels, indices)
}

/// Worst phase distance between a set and its quantization, on the circle.
pub fn max_phase_error(a: &SequenceSet, b: &SequenceSet) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..a.m.min(b.m) {
        for n in 0..a.n.min(b.n) {
            let d = math::wrap_phase(a.phase(m, n) - b.phase(m, n));
            worst = worst.max(d.min(TAU - d));
        }
    }
    worst
}

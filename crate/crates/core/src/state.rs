//! Pure bosonic states over a fixed set of modes in the photon-number basis.
//!
//! A [`StateVector`] is a sparse map from [`Occupation`] keys to complex
//! amplitudes. Values are immutable: every operation returns a new state.
//! Keys are kept in lexicographic order, which makes iteration and the JSON
//! form byte-stable.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total probability that [`StateVector::pruned`] may drop.
pub const MAX_PRUNED_PROBABILITY: f64 = 1e-14;

/// Photon counts, one per mode.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::contract("Occupation::new", "at least one mode is required"));
        }
        Ok(Occupation(counts))
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    pub(crate) fn with(&self, mode: usize, count: u32) -> Occupation {
        let mut counts = self.0.clone();
        counts[mode] = count;
        Occupation(counts)
    }

    pub(crate) fn with_pair(&self, i: usize, ni: u32, j: usize, nj: u32) -> Occupation {
        let mut counts = self.0.clone();
        counts[i] = ni;
        counts[j] = nj;
        Occupation(counts)
    }

    pub(crate) fn without(&self, mode: usize) -> Occupation {
        let mut counts = self.0.clone();
        counts.remove(mode);
        Occupation(counts)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

/// Complex amplitudes over occupation vectors of a fixed number of modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct StateVector {
    modes: usize,
    amplitudes: BTreeMap<Occupation, Complex64>,
}

impl StateVector {
    /// The zero vector on `modes` modes.
    pub fn zero(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::contract("StateVector::zero", "mode count must be at least 1"));
        }
        Ok(StateVector {
            modes,
            amplitudes: BTreeMap::new(),
        })
    }

    /// The Fock basis ket with the given occupations and amplitude 1.
    pub fn basis(occupations: &[u32]) -> Result<Self> {
        let occ = Occupation::new(occupations.to_vec())?;
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(occ, Complex64::new(1.0, 0.0));
        Ok(StateVector {
            modes: occupations.len(),
            amplitudes,
        })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::basis(&vec![0; modes])
    }

    /// `|n⟩|n⟩` on two modes.
    pub fn dual_fock(n: u32) -> Self {
        Self::basis(&[n, n]).expect("two modes")
    }

    /// Builds a state from `(occupations, amplitude)` pairs. Repeated keys are summed.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut state = Self::zero(modes)?;
        for (occ, amp) in terms {
            if occ.len() != modes {
                return Err(Error::ModeMismatch {
                    left: modes,
                    right: occ.len(),
                });
            }
            *state
                .amplitudes
                .entry(Occupation(occ))
                .or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(state)
    }

    pub(crate) fn from_map(modes: usize, amplitudes: BTreeMap<Occupation, Complex64>) -> Self {
        debug_assert!(amplitudes.keys().all(|k| k.mode_count() == modes));
        StateVector { modes, amplitudes }
    }

    pub fn mode_count(&self) -> usize {
        self.modes
    }

    /// Number of stored amplitudes.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, occupations: &[u32]) -> Complex64 {
        self.amplitudes
            .get(&Occupation(occupations.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> StateVector {
        StateVector {
            modes: self.modes,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(k, a)| (k.clone(), a * factor))
                .collect(),
        }
    }

    /// `a + b`; both must live on the same modes.
    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        check_modes(self, other)?;
        let mut amplitudes = self.amplitudes.clone();
        for (k, a) in &other.amplitudes {
            *amplitudes.entry(k.clone()).or_default() += a;
        }
        Ok(StateVector::from_map(self.modes, amplitudes))
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        inner_product(self, other)
    }

    pub fn normalize(&self) -> Result<StateVector> {
        normalize(self)
    }

    /// Total photon number of every stored key, or `None` when keys disagree.
    pub fn total_photons(&self) -> Option<u32> {
        let mut totals = self.amplitudes.keys().map(Occupation::total);
        let first = totals.next()?;
        totals.all(|t| t == first).then_some(first)
    }

    /// Probability weight carried by each total-photon sector.
    pub fn sector_weights(&self) -> BTreeMap<u32, f64> {
        let mut weights = BTreeMap::new();
        for (k, a) in &self.amplitudes {
            *weights.entry(k.total()).or_insert(0.0) += a.norm_sqr();
        }
        weights
    }

    /// Expected photon number in `mode` (for a normalized state).
    pub fn mean_photons(&self, mode: usize) -> f64 {
        self.amplitudes
            .iter()
            .map(|(k, a)| f64::from(k.get(mode)) * a.norm_sqr())
            .sum()
    }

    /// Dense view of a two-mode state restricted to total photon number
    /// `total`: entry `k` is the amplitude on `|total-k, k⟩`.
    pub fn sector_amplitudes(&self, total: u32) -> Result<Vec<Complex64>> {
        if self.modes != 2 {
            return Err(Error::contract(
                "sector_amplitudes",
                format!("expected a two-mode state, got {} modes", self.modes),
            ));
        }
        Ok((0..=total)
            .map(|k| self.amplitude(&[total - k, k]))
            .collect())
    }

    /// Appends `extra` vacuum modes after the existing ones.
    pub fn attach_vacuum(&self, extra: usize) -> Result<StateVector> {
        attach_vacuum(self, extra)
    }

    pub fn drop_mode(&self, mode: usize) -> Result<StateVector> {
        drop_mode(self, mode)
    }

    /// Drops the smallest amplitudes with modulus below `threshold`, as long as
    /// the discarded probability stays under [`MAX_PRUNED_PROBABILITY`].
    pub fn pruned(&self, threshold: f64) -> StateVector {
        if threshold <= 0.0 {
            return self.clone();
        }
        let mut small: Vec<(&Occupation, f64)> = self
            .amplitudes
            .iter()
            .filter(|(_, a)| a.norm() < threshold)
            .map(|(k, a)| (k, a.norm_sqr()))
            .collect();
        small.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut dropped = 0.0;
        let mut remove = Vec::new();
        for (k, p) in small {
            if dropped + p >= MAX_PRUNED_PROBABILITY {
                break;
            }
            dropped += p;
            remove.push(k.clone());
        }
        let mut amplitudes = self.amplitudes.clone();
        for k in remove {
            amplitudes.remove(&k);
        }
        StateVector::from_map(self.modes, amplitudes)
    }
}

fn check_modes(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.modes != b.modes {
        return Err(Error::ModeMismatch {
            left: a.modes,
            right: b.modes,
        });
    }
    Ok(())
}

/// `⟨a|b⟩`, conjugate-linear in `a` and linear in `b`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    check_modes(a, b)?;
    // Walk the smaller map and look up in the larger one.
    let sum = if a.len() <= b.len() {
        a.amplitudes
            .iter()
            .filter_map(|(k, x)| b.amplitudes.get(k).map(|y| x.conj() * y))
            .sum()
    } else {
        b.amplitudes
            .iter()
            .filter_map(|(k, y)| a.amplitudes.get(k).map(|x| x.conj() * y))
            .sum()
    };
    Ok(sum)
}

/// Rescales `s` to unit norm.
pub fn normalize(s: &StateVector) -> Result<StateVector> {
    let norm = s.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Normalization);
    }
    Ok(s.scaled(Complex64::new(1.0 / norm, 0.0)))
}

pub fn attach_vacuum(s: &StateVector, extra: usize) -> Result<StateVector> {
    if extra == 0 {
        return Err(Error::contract("attach_vacuum", "extra_modes must be at least 1"));
    }
    let modes = s.modes + extra;
    let amplitudes = s
        .amplitudes
        .iter()
        .map(|(k, a)| {
            let mut counts = k.0.clone();
            counts.resize(modes, 0);
            (Occupation(counts), *a)
        })
        .collect();
    Ok(StateVector::from_map(modes, amplitudes))
}

/// Removes `mode`, which must be empty in every stored amplitude.
pub fn drop_mode(s: &StateVector, mode: usize) -> Result<StateVector> {
    if mode >= s.modes {
        return Err(Error::contract(
            "drop_mode",
            format!("mode {mode} out of range for {} modes", s.modes),
        ));
    }
    if s.modes == 1 {
        return Err(Error::contract("drop_mode", "cannot drop the only mode"));
    }
    if let Some((k, _)) = s.amplitudes.iter().find(|(k, _)| k.get(mode) != 0) {
        return Err(Error::contract(
            "drop_mode",
            format!("mode {mode} is occupied in {k}"),
        ));
    }
    let amplitudes = s
        .amplitudes
        .iter()
        .map(|(k, a)| (k.without(mode), *a))
        .collect();
    Ok(StateVector::from_map(s.modes - 1, amplitudes))
}

/// N00N fidelity of a two-mode state and the superposition phase achieving it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    /// `φ` in `|S,0⟩ + e^{iφ}|0,S⟩`, reduced to `[0, 2π)`.
    pub optimal_phase: f64,
    pub total_photons: u32,
}

/// Fidelity with the closest N00N state `(|S,0⟩ + e^{iφ}|0,S⟩)/√2`.
///
/// The maximum over `φ` is taken analytically: `(|c_S0| + |c_0S|)² / 2`
/// relative to the squared norm of `s`. `S` is the total photon number of the
/// heaviest sector when `s` mixes sectors (ties go to the larger `S`).
pub fn noon_fidelity(s: &StateVector) -> Result<FidelityReport> {
    if s.modes != 2 {
        return Err(Error::contract(
            "noon_fidelity",
            format!("expected a two-mode state, got {} modes", s.modes),
        ));
    }
    let norm_sqr = s.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::Normalization);
    }
    let weights = s.sector_weights();
    let total = weights
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(t, _)| *t)
        .unwrap_or(0);
    if total == 0 {
        return Err(Error::contract(
            "noon_fidelity",
            "total photon number S must be at least 1",
        ));
    }
    let head = s.amplitude(&[total, 0]);
    let tail = s.amplitude(&[0, total]);
    let fidelity = ((head.norm() + tail.norm()).powi(2) / (2.0 * norm_sqr)).min(1.0);
    let optimal_phase = (tail.arg() - head.arg()).rem_euclid(TAU);
    Ok(FidelityReport {
        fidelity,
        optimal_phase,
        total_photons: total,
    })
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    modes: usize,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    occ: Vec<u32>,
    re: f64,
    im: f64,
}

impl From<StateVector> for StateJson {
    fn from(s: StateVector) -> Self {
        StateJson {
            modes: s.modes,
            terms: s
                .amplitudes
                .into_iter()
                .map(|(k, a)| TermJson {
                    occ: k.0,
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<StateJson> for StateVector {
    type Error = Error;

    fn try_from(json: StateJson) -> Result<Self> {
        let mut state = StateVector::zero(json.modes)?;
        for term in json.terms {
            if term.occ.len() != json.modes {
                return Err(Error::ModeMismatch {
                    left: json.modes,
                    right: term.occ.len(),
                });
            }
            let occ = Occupation(term.occ);
            if state.amplitudes.contains_key(&occ) {
                return Err(Error::contract("StateVector::from_json", format!("duplicate term {occ}")));
            }
            state.amplitudes.insert(occ, Complex64::new(term.re, term.im));
        }
        Ok(state)
    }
}

impl StateVector {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<StateVector> {
        Ok(serde_json::from_str(text)?)
    }
}

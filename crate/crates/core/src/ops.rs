//! Beam splitters, phase shifters, single-photon Kraus detections and
//! projective number-resolving measurement.
//!
//! Beam-splitter convention: `U_bs(γ, χ) = exp(γ e^{iχ} a₁a₂† − γ e^{−iχ} a₁†a₂)`
//! applied to kets, so that
//!
//! ```text
//! U a₁† U† = cos γ a₁† + e^{iχ} sin γ a₂†
//! U a₂† U† = cos γ a₂† − e^{−iχ} sin γ a₁†
//! ```
//!
//! A single photon entering the first mode leaves it with amplitude `cos γ`
//! (transmittance `cos² γ`) and crosses to the second with `e^{iχ} sin γ`.
//! With this choice `U_bs(π/4)|S,0⟩` has relative phase 0 and
//! `U_bs(π/4)|0,S⟩` relative phase π between the output modes.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Occupation, StateVector};

/// Outcomes rarer than this (relative to the input norm) are treated as
/// impossible; they only arise from rounding in exact cancellations.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-20;

const ANGLE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterParams {
    pub gamma: f64,
    pub chi: f64,
    pub modes: (usize, usize),
}

impl BeamSplitterParams {
    pub fn new(first: usize, second: usize, gamma: f64) -> Self {
        BeamSplitterParams {
            gamma,
            chi: 0.0,
            modes: (first, second),
        }
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    /// `cos² γ`
    pub fn transmittance(&self) -> f64 {
        self.gamma.cos().powi(2)
    }

    fn validate(&self, mode_count: usize) -> Result<()> {
        let (i, j) = self.modes;
        if i == j || i >= mode_count || j >= mode_count {
            return Err(Error::contract(
                "apply_beam_splitter",
                format!("invalid mode pair ({i}, {j}) for {mode_count} modes"),
            ));
        }
        if !self.gamma.is_finite()
            || !self.chi.is_finite()
            || self.gamma < -ANGLE_SLACK
            || self.gamma > FRAC_PI_2 + ANGLE_SLACK
        {
            return Err(Error::contract(
                "apply_beam_splitter",
                format!("gamma = {} must lie in [0, π/2] and chi = {} be finite", self.gamma, self.chi),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseShiftParams {
    pub chi: f64,
    pub mode: usize,
}

impl PhaseShiftParams {
    pub fn new(mode: usize, chi: f64) -> Self {
        PhaseShiftParams { chi, mode }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionOutcome {
    pub count: u32,
    pub probability: f64,
    /// Normalized conditional state.
    pub post_state: StateVector,
}

/// How the fixed-photon-number block of a beam splitter is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SectorMethod {
    /// Substitution of the transformed creation operators, one photon at a time.
    #[default]
    Recurrence,
    /// Scaling-and-squaring Taylor exponential of the tridiagonal hopping generator.
    Exponential,
}

/// Dense `(S+1)×(S+1)` block of a two-mode unitary in the sector of `S`
/// photons. Basis index `k` denotes `|S-k, k⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorMatrix {
    total: u32,
    /// Column-major: `columns[n][m] = ⟨S-m, m| U |S-n, n⟩`.
    columns: Vec<Vec<Complex64>>,
}

impl SectorMatrix {
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// `⟨S-row, row| U |S-col, col⟩`
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.columns[col][row]
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.columns[col]
    }
}

/// Beam-splitter blocks for every sector `0..=max_total`.
pub fn beam_splitter_sectors(
    max_total: u32,
    gamma: f64,
    chi: f64,
    method: SectorMethod,
) -> Vec<SectorMatrix> {
    match method {
        SectorMethod::Recurrence => recurrence_sectors(max_total, gamma, chi),
        SectorMethod::Exponential => (0..=max_total)
            .map(|total| exponential_sector(total, gamma, chi))
            .collect(),
    }
}

fn recurrence_sectors(max_total: u32, gamma: f64, chi: f64) -> Vec<SectorMatrix> {
    let (s, c) = gamma.sin_cos();
    let phase = Complex64::from_polar(1.0, chi);
    // Images of a₁† and a₂† as (coefficient on a₁†, coefficient on a₂†).
    let first = (Complex64::new(c, 0.0), phase * s);
    let second = (-phase.conj() * s, Complex64::new(c, 0.0));

    let mut sectors = vec![SectorMatrix {
        total: 0,
        columns: vec![vec![Complex64::new(1.0, 0.0)]],
    }];
    for total in 1..=max_total {
        let prev = &sectors[total as usize - 1];
        let mut columns = Vec::with_capacity(total as usize + 1);
        for n in 0..=total {
            let n1 = total - n;
            // |n1, n⟩ = a₁†|n1-1, n⟩/√n1, or a₂†|0, n-1⟩/√n when n1 = 0.
            let (image, source, norm) = if n1 > 0 {
                (first, n as usize, f64::from(n1).sqrt())
            } else {
                (second, n as usize - 1, f64::from(n).sqrt())
            };
            columns.push(raise(&prev.columns[source], total, image, norm));
        }
        sectors.push(SectorMatrix { total, columns });
    }
    sectors
}

/// Applies `(x a₁† + y a₂†)/norm` to a vector in the sector `total - 1`.
fn raise(v: &[Complex64], total: u32, (x, y): (Complex64, Complex64), norm: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); total as usize + 1];
    for (m, amp) in v.iter().enumerate() {
        if *amp == Complex64::default() {
            continue;
        }
        let m1 = total as usize - m; // mode-1 count after a₁†
        out[m] += x * amp * (m1 as f64).sqrt();
        out[m + 1] += y * amp * ((m + 1) as f64).sqrt();
    }
    for z in &mut out {
        *z /= norm;
    }
    out
}

/// Tridiagonal anti-Hermitian generator `γ(e^{iχ} a₁a₂† − e^{−iχ} a₁†a₂)` on
/// the sector of `total` photons, as a dense row-major matrix.
pub fn hopping_generator(total: u32, gamma: f64, chi: f64) -> Vec<Vec<Complex64>> {
    let dim = total as usize + 1;
    let phase = Complex64::from_polar(gamma, chi);
    let mut g = vec![vec![Complex64::default(); dim]; dim];
    for k in 0..dim {
        let n1 = (total as usize - k) as f64;
        let n2 = k as f64;
        if k + 1 < dim {
            // a₁a₂†|n1, n2⟩ = √(n1 (n2+1)) |n1-1, n2+1⟩
            g[k + 1][k] = phase * (n1 * (n2 + 1.0)).sqrt();
        }
        if k > 0 {
            // a₁†a₂|n1, n2⟩ = √((n1+1) n2) |n1+1, n2-1⟩
            g[k - 1][k] = -phase.conj() * ((n1 + 1.0) * n2).sqrt();
        }
    }
    g
}

fn exponential_sector(total: u32, gamma: f64, chi: f64) -> SectorMatrix {
    let g = hopping_generator(total, gamma, chi);
    let dim = g.len();
    let norm = g
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let a: Vec<Vec<Complex64>> = g
        .iter()
        .map(|row| row.iter().map(|z| z * scale).collect())
        .collect();

    let mut result = identity(dim);
    let mut term = identity(dim);
    for k in 1..=30 {
        term = matmul(&term, &a);
        for row in &mut term {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        let mut small = true;
        for (r, t) in result.iter_mut().zip(&term) {
            for (x, y) in r.iter_mut().zip(t) {
                *x += y;
                small &= y.norm() < 1e-18;
            }
        }
        if small {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    let columns = (0..dim)
        .map(|col| (0..dim).map(|row| result[row][col]).collect())
        .collect();
    SectorMatrix { total, columns }
}

fn identity(dim: usize) -> Vec<Vec<Complex64>> {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() })
                .collect()
        })
        .collect()
}

fn matmul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let dim = a.len();
    let mut out = vec![vec![Complex64::default(); dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik == Complex64::default() {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn apply_beam_splitter(s: &StateVector, p: &BeamSplitterParams) -> Result<StateVector> {
    apply_beam_splitter_with(s, p, SectorMethod::default())
}

pub fn apply_beam_splitter_with(
    s: &StateVector,
    p: &BeamSplitterParams,
    method: SectorMethod,
) -> Result<StateVector> {
    p.validate(s.mode_count())?;
    let (i, j) = p.modes;
    let max_total = s
        .iter()
        .map(|(k, _)| k.get(i) + k.get(j))
        .max()
        .unwrap_or(0);
    let sectors = beam_splitter_sectors(max_total, p.gamma, p.chi, method);

    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (key, amp) in s.iter() {
        let total = key.get(i) + key.get(j);
        let column = sectors[total as usize].column(key.get(j) as usize);
        for (m, u) in column.iter().enumerate() {
            if *u == Complex64::default() {
                continue;
            }
            let m = m as u32;
            *out.entry(key.with_pair(i, total - m, j, m)).or_default() += amp * u;
        }
    }
    Ok(StateVector::from_map(s.mode_count(), out))
}

pub fn apply_phase_shift(s: &StateVector, p: &PhaseShiftParams) -> Result<StateVector> {
    if p.mode >= s.mode_count() {
        return Err(Error::contract(
            "apply_phase_shift",
            format!("mode {} out of range for {} modes", p.mode, s.mode_count()),
        ));
    }
    if !p.chi.is_finite() {
        return Err(Error::contract("apply_phase_shift", "chi must be finite"));
    }
    let out = s
        .iter()
        .map(|(k, a)| {
            (
                k.clone(),
                a * Complex64::from_polar(1.0, f64::from(k.get(p.mode)) * p.chi),
            )
        })
        .collect();
    Ok(StateVector::from_map(s.mode_count(), out))
}

/// `(x a + y b) |s⟩` for a two-mode state, unnormalized.
fn annihilate_combination(s: &StateVector, x: f64, y: f64, op: &'static str) -> Result<StateVector> {
    if s.mode_count() != 2 {
        return Err(Error::contract(
            op,
            format!("expected a two-mode state, got {} modes", s.mode_count()),
        ));
    }
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (k, amp) in s.iter() {
        let (n1, n2) = (k.get(0), k.get(1));
        if n1 > 0 {
            *out.entry(k.with(0, n1 - 1)).or_default() += amp * x * f64::from(n1).sqrt();
        }
        if n2 > 0 {
            *out.entry(k.with(1, n2 - 1)).or_default() += amp * y * f64::from(n2).sqrt();
        }
    }
    Ok(StateVector::from_map(2, out))
}

/// `L = (a − b)/√2`: a photon registered at the left detector. Unnormalized.
pub fn apply_kraus_l(s: &StateVector) -> Result<StateVector> {
    annihilate_combination(s, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, "apply_kraus_l")
}

/// `R = (a + b)/√2`: a photon registered at the right detector. Unnormalized.
pub fn apply_kraus_r(s: &StateVector) -> Result<StateVector> {
    annihilate_combination(s, FRAC_1_SQRT_2, FRAC_1_SQRT_2, "apply_kraus_r")
}

fn split_by_count<'a>(s: &'a StateVector, mode: usize, op: &'static str) -> Result<BTreeMap<u32, Vec<(&'a Occupation, Complex64)>>> {
    if mode >= s.mode_count() {
        return Err(Error::contract(
            op,
            format!("mode {mode} out of range for {} modes", s.mode_count()),
        ));
    }
    let mut groups: BTreeMap<u32, Vec<(&Occupation, Complex64)>> = BTreeMap::new();
    for (k, a) in s.iter() {
        groups.entry(k.get(mode)).or_default().push((k, *a));
    }
    Ok(groups)
}

fn outcomes(s: &StateVector, mode: usize, remove: bool, op: &'static str) -> Result<Vec<DetectionOutcome>> {
    let groups = split_by_count(s, mode, op)?;
    let norm_sqr = s.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::Normalization);
    }
    let modes = if remove { s.mode_count() - 1 } else { s.mode_count() };
    let mut result = Vec::new();
    for (count, terms) in groups {
        let weight: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        let probability = weight / norm_sqr;
        if probability < IMPOSSIBLE_PROBABILITY {
            continue;
        }
        let scale = 1.0 / weight.sqrt();
        let post = terms
            .into_iter()
            .map(|(k, a)| (if remove { k.without(mode) } else { k.clone() }, a * scale))
            .collect();
        result.push(DetectionOutcome {
            count,
            probability,
            post_state: StateVector::from_map(modes, post),
        });
    }
    Ok(result)
}

/// Projective photon counting on `mode`. Post-states keep the mode, collapsed
/// to the observed count; outcomes are sorted by count.
pub fn measure_number(s: &StateVector, mode: usize) -> Result<Vec<DetectionOutcome>> {
    outcomes(s, mode, false, "measure_number")
}

/// Photon counting that absorbs the detected photons: post-states live on the
/// remaining modes.
pub fn measure_and_remove(s: &StateVector, mode: usize) -> Result<Vec<DetectionOutcome>> {
    if s.mode_count() < 2 {
        return Err(Error::contract(
            "measure_and_remove",
            "at least one mode must remain after detection",
        ));
    }
    outcomes(s, mode, true, "measure_and_remove")
}

//! Reference states as finite Fock expansions and the closed-form formulas
//! of the generator analysis.
//!
//! The phase reference with total photon number `S` and relative phase `Δ₀`
//! is the projection of a coherent pair `|α⟩|α e^{iΔ₀}⟩` onto the sector of
//! `S` photons. The projection does not depend on `|α|`:
//!
//! ```text
//! |ψ∞(Δ₀)⟩ = 2^{-S/2} Σ_k √C(S,k) e^{i(k − S/2)Δ₀} |S−k, k⟩
//! ```
//!
//! The factor `e^{−iSΔ₀/2}` makes the definition symmetric between the modes.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, ln_binomial, log_sum_exp};
use crate::error::{Error, Result};
use crate::state::{normalize, StateVector};

/// Squared norm below which a superposition is treated as cancelled.
const CANCELLATION_NORM_SQR: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseRefParams {
    pub total_photons: u32,
    pub delta0: f64,
}

impl PhaseRefParams {
    pub fn new(total_photons: u32, delta0: f64) -> Result<Self> {
        if total_photons == 0 {
            return Err(Error::contract("PhaseRefParams::new", "total photon number must be at least 1"));
        }
        if !delta0.is_finite() {
            return Err(Error::contract("PhaseRefParams::new", "delta0 must be finite"));
        }
        Ok(PhaseRefParams {
            total_photons,
            delta0,
        })
    }
}

/// Cat state `|ψ∞(Δ₀)⟩ + e^{iΛ}|ψ∞(−Δ₀)⟩`, normalized with a positive constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatStateParams {
    pub total_photons: u32,
    pub delta0: f64,
    pub lambda: f64,
}

impl CatStateParams {
    pub fn new(total_photons: u32, delta0: f64, lambda: f64) -> Result<Self> {
        PhaseRefParams::new(total_photons, delta0)?;
        if !lambda.is_finite() {
            return Err(Error::contract("CatStateParams::new", "lambda must be finite"));
        }
        Ok(CatStateParams {
            total_photons,
            delta0,
            lambda,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalizationParams {
    /// `D = l + r`
    pub detections: u32,
    /// Photons per input mode.
    pub n: u32,
}

impl LocalizationParams {
    /// Whether `0 < D < 2N`, the range where the asymptotic fidelity applies.
    pub fn in_asymptotic_range(&self) -> bool {
        self.detections > 0 && self.detections < 2 * self.n
    }
}

fn psi_infinity_terms(total: u32, delta0: f64) -> impl Iterator<Item = (Vec<u32>, Complex64)> {
    let s = u64::from(total);
    let half = f64::from(total) / 2.0;
    (0..=total).map(move |k| {
        let magnitude = (0.5 * (ln_binomial(s, u64::from(k)) - f64::from(total) * std::f64::consts::LN_2)).exp();
        let phase = (f64::from(k) - half) * delta0;
        (vec![total - k, k], Complex64::from_polar(magnitude, phase))
    })
}

/// Phase-reference state `|ψ∞(Δ₀)⟩` on two modes (unit norm).
pub fn build_psi_infinity(p: PhaseRefParams) -> StateVector {
    StateVector::from_terms(2, psi_infinity_terms(p.total_photons, p.delta0)).expect("two modes")
}

pub fn build_cat(p: CatStateParams) -> Result<StateVector> {
    let plus = build_psi_infinity(PhaseRefParams::new(p.total_photons, p.delta0)?);
    let minus = build_psi_infinity(PhaseRefParams::new(p.total_photons, -p.delta0)?);
    let sum = plus.add(&minus.scaled(Complex64::from_polar(1.0, p.lambda)))?;
    if sum.norm_sqr() < CANCELLATION_NORM_SQR {
        return Err(Error::Normalization);
    }
    normalize(&sum)
}

/// `(|S,0⟩ + e^{iφ}|0,S⟩)/√2`
pub fn build_noon(total_photons: u32, phi: f64) -> Result<StateVector> {
    if total_photons == 0 {
        return Err(Error::contract("build_noon", "total photon number must be at least 1"));
    }
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_terms(
        2,
        [
            (vec![total_photons, 0], Complex64::new(amp, 0.0)),
            (vec![0, total_photons], Complex64::from_polar(amp, phi)),
        ],
    )
}

/// Relative phase localized by `l` left and `r` right detections:
/// `Δ₀ = 2 arccos √(r/(l+r))`, in `[0, π]`.
pub fn delta0_of(l: u32, r: u32) -> Result<f64> {
    if l + r == 0 {
        return Err(Error::contract("delta0_of", "at least one detection is required"));
    }
    let ratio = f64::from(r) / f64::from(l + r);
    Ok(2.0 * ratio.sqrt().min(1.0).acos())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QDistribution {
    pub total_photons: u32,
    pub l: u32,
    pub delta0: f64,
    /// `Prob(Q)` for `Q = 0..=S`.
    pub probabilities: Vec<f64>,
    /// `Σ Q·Prob(Q)`
    pub expected_q: f64,
    /// `S cos Δ₀`
    pub predicted_mean: f64,
    pub sum: f64,
    /// False when the closed form has negative entries, a vanishing
    /// denominator, or does not sum to one.
    pub consistent: bool,
}

/// Closed-form distribution of the ancilla count `Q` in the correction stage.
///
/// ```text
/// Prob(Q < S) = C(S,Q) (1 − cos Δ₀)^{S−Q} cos^Q Δ₀ / (1 + (−1)^l cos^S Δ₀)
/// Prob(Q = S) = [1 + (−1)^l]²/2 · cos^S Δ₀ / (1 + (−1)^l cos^S Δ₀)
/// ```
///
/// The formulas are evaluated literally; the result is flagged rather than
/// renormalized when they are not a probability distribution.
pub fn q_distribution(total_photons: u32, l: u32, delta0: f64) -> Result<QDistribution> {
    if total_photons == 0 {
        return Err(Error::contract("q_distribution", "total photon number must be at least 1"));
    }
    let s = total_photons as i32;
    let c = delta0.cos();
    let parity = if l % 2 == 0 { 1.0 } else { -1.0 };
    let denominator = 1.0 + parity * c.powi(s);
    let mut probabilities: Vec<f64> = (0..total_photons)
        .map(|q| {
            binomial(u64::from(total_photons), u64::from(q)) * (1.0 - c).powi(s - q as i32) * c.powi(q as i32)
                / denominator
        })
        .collect();
    probabilities.push((1.0 + parity).powi(2) / 2.0 * c.powi(s) / denominator);

    let sum: f64 = probabilities.iter().sum();
    let expected_q = probabilities
        .iter()
        .enumerate()
        .map(|(q, p)| q as f64 * p)
        .sum();
    let consistent = denominator.abs() > 1e-300
        && probabilities.iter().all(|p| p.is_finite() && *p >= -1e-15)
        && (sum - 1.0).abs() <= 1e-10;
    Ok(QDistribution {
        total_photons,
        l,
        delta0,
        probabilities,
        expected_q,
        predicted_mean: f64::from(total_photons) * c,
        sum,
        consistent,
    })
}

/// Probability that all `S = 2N − r` remaining photons leave through the
/// right port after `r` right detections on `|N⟩|N⟩`:
///
/// ```text
/// P = C(2N,N)² / [2^S Σ_{k=0}^{r} C(r,k)² C(S, N−k)]
/// ```
///
/// Evaluated in log space; finite for `N` in the thousands.
pub fn p_cond(n: u32, r: u32) -> Result<f64> {
    if r >= n {
        return Err(Error::contract("p_cond", format!("requires r < N, got N = {n}, r = {r}")));
    }
    let (n, r) = (u64::from(n), u64::from(r));
    let s = 2 * n - r;
    let terms: Vec<f64> = (0..=r)
        .map(|k| 2.0 * ln_binomial(r, k) + ln_binomial(s, n - k))
        .collect();
    let ln_p = 2.0 * ln_binomial(2 * n, n) - s as f64 * std::f64::consts::LN_2 - log_sum_exp(&terms);
    Ok(ln_p.exp().min(1.0))
}

/// First-order fidelity of converting a `±Δ₀` cat directly to a N00N state:
/// `cos^{2S}[(Δ₀ − π/2)/2]`.
pub fn naive_fidelity_scaling(delta0: f64, total_photons: u32) -> Result<f64> {
    if total_photons == 0 {
        return Err(Error::contract("naive_fidelity_scaling", "total photon number must be at least 1"));
    }
    Ok(((delta0 - FRAC_PI_2) / 2.0).cos().powi(2 * total_photons as i32))
}

/// Large-`N` fidelity of a Circuit I cat with the ideal cat, as a function of
/// `ratio = 2N/S`: `√(1 − 1/(2·ratio − 1)²)`.
pub fn asymptotic_fidelity(ratio: f64) -> Result<f64> {
    if !(ratio > 1.0) {
        return Err(Error::contract("asymptotic_fidelity", format!("ratio 2N/S must exceed 1, got {ratio}")));
    }
    if ratio.is_infinite() {
        return Ok(1.0);
    }
    Ok((1.0 - 1.0 / (2.0 * ratio - 1.0).powi(2)).sqrt())
}

/// Gaussian envelope `exp[−D X²/4]` of the localized relative phase.
pub fn gaussian_localization(x: f64, p: LocalizationParams) -> Result<f64> {
    if p.detections == 0 {
        return Err(Error::contract("gaussian_localization", "at least one detection is required"));
    }
    Ok((-f64::from(p.detections) * x * x / 4.0).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eq3Intensities {
    pub mode1: f64,
    pub mode2: f64,
    /// `+1` for relative phase `+π/2`, `−1` for `−π/2`, `0` when all light is
    /// in mode two and the phase is undefined.
    pub phase_sign: i8,
}

/// Mode intensities after a 50:50 beam splitter acts on `|ψ∞(Δ₀)⟩`.
pub fn eq3_intensities(total_photons: u32, delta0: f64) -> Result<Eq3Intensities> {
    if total_photons == 0 {
        return Err(Error::contract("eq3_intensities", "total photon number must be at least 1"));
    }
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&delta0) {
        return Err(Error::OutOfModeledRange {
            what: "delta0",
            value: delta0,
            range: "[-π/2, π/2]",
        });
    }
    let s = f64::from(total_photons);
    let c = delta0.cos();
    let phase_sign = match delta0.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Greater) => 1,
        Some(std::cmp::Ordering::Less) => -1,
        _ => 0,
    };
    Ok(Eq3Intensities {
        mode1: s * (1.0 - c) / 2.0,
        mode2: s * (1.0 + c) / 2.0,
        phase_sign,
    })
}

fn simpson_weights(points: usize) -> Vec<f64> {
    let n = if points % 2 == 0 { points + 1 } else { points.max(3) };
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect()
}

/// Overlap estimate between a Gaussian-localized cat component and the ideal
/// phase reference, by Simpson quadrature on `[−π/2, π/2]`:
///
/// ```text
/// [∫ cos^S(Δ/2) e^{−DΔ²/4} dΔ]² / ∫∫ cos^S((Δ−Δ')/2) e^{−D(Δ²+Δ'²)/4} dΔ dΔ'
/// ```
///
/// with `S = 2N − D`. `points` is the grid size per axis (rounded up to odd).
pub fn localization_fidelity_integral(n: u32, detections: u32, points: usize) -> Result<f64> {
    if detections == 0 || detections >= 2 * n {
        return Err(Error::contract(
            "localization_fidelity_integral",
            format!("requires 0 < D < 2N, got N = {n}, D = {detections}"),
        ));
    }
    let s = (2 * n - detections) as i32;
    let d = f64::from(detections);
    let weights = simpson_weights(points);
    let h = PI / (weights.len() - 1) as f64;
    let grid: Vec<f64> = (0..weights.len()).map(|i| -FRAC_PI_2 + i as f64 * h).collect();
    let envelope: Vec<f64> = grid.iter().map(|x| (-d * x * x / 4.0).exp()).collect();

    let single: f64 = grid
        .iter()
        .zip(&weights)
        .zip(&envelope)
        .map(|((x, w), e)| w * (x / 2.0).cos().powi(s) * e)
        .sum::<f64>()
        * h
        / 3.0;
    let mut double = 0.0;
    for (i, x) in grid.iter().enumerate() {
        let mut row = 0.0;
        for (j, y) in grid.iter().enumerate() {
            row += weights[j] * ((x - y) / 2.0).cos().powi(s) * envelope[j];
        }
        double += weights[i] * envelope[i] * row;
    }
    double *= (h / 3.0).powi(2);
    Ok(single * single / double)
}

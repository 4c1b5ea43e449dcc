//! The measurement-induced condensation experiment and the feed-forward N00N
//! generator.
//!
//! Mode layout (0-based): the principal modes are 0 and 1. Circuit I taps
//! them into ancillae 2 and 3, mixes those on a 50:50 beam splitter and counts
//! `l` photons in mode 2 (the `L = (a−b)/√2` port) and `r` in mode 3 (the
//! `R = (a+b)/√2` port). Circuit II borrows one fresh vacuum ancilla, appended
//! as mode 2, and counts `Q` photons there. Detected modes are removed as soon
//! as they are measured, so at most four modes are ever live.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::delta0_of;
use crate::error::{Error, Result};
use crate::ops::{
    apply_beam_splitter, apply_kraus_r, apply_phase_shift, measure_and_remove, BeamSplitterParams,
    PhaseShiftParams,
};
use crate::state::{noon_fidelity, normalize, FidelityReport, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunMode {
    Exhaustive,
    MonteCarlo { seed: u64, shots: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Photons per input mode.
    pub n: u32,
    /// Reflectance of the tapping beam splitters.
    pub f: f64,
    /// Minimum output photon number; `None` means `round(N(1−f))`, at least 1.
    pub p_min: Option<u32>,
    pub mode: RunMode,
}

impl GeneratorConfig {
    pub fn new(n: u32, f: f64) -> Result<Self> {
        let config = GeneratorConfig {
            n,
            f,
            p_min: None,
            mode: RunMode::Exhaustive,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_p_min(mut self, p_min: u32) -> Self {
        self.p_min = Some(p_min);
        self
    }

    pub fn with_mode(mut self, mode: RunMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn effective_p_min(&self) -> u32 {
        self.p_min
            .unwrap_or_else(|| ((f64::from(self.n) * (1.0 - self.f)).round() as u32).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::contract("GeneratorConfig", "N must be at least 1"));
        }
        if !(self.f > 0.0 && self.f < 1.0) {
            return Err(Error::contract("GeneratorConfig", format!("f must lie in (0, 1), got {}", self.f)));
        }
        match self.p_min {
            Some(0) => return Err(Error::contract("GeneratorConfig", "P_min must be at least 1")),
            Some(p) if p > 2 * self.n => {
                return Err(Error::contract(
                    "GeneratorConfig",
                    format!("P_min = {p} exceeds the 2N = {} input photons", 2 * self.n),
                ))
            }
            _ => {}
        }
        if let RunMode::MonteCarlo { shots: 0, .. } = self.mode {
            return Err(Error::contract("GeneratorConfig", "Monte Carlo runs need at least one shot"));
        }
        Ok(())
    }
}

/// Detection counts of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementRecord {
    pub n: u32,
    pub l: u32,
    pub r: u32,
    /// Ancilla count in Circuit II; absent until that stage runs.
    pub q: Option<u32>,
}

impl MeasurementRecord {
    /// `D = l + r`
    pub fn detections(&self) -> u32 {
        self.l + self.r
    }

    /// `S = 2N − l − r`
    pub fn remaining(&self) -> u32 {
        2 * self.n - self.l - self.r
    }

    /// `P = 2N − l − r − Q`
    pub fn output_photons(&self) -> Option<u32> {
        self.q.map(|q| self.remaining() - q)
    }
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    n: u32,
    l: u32,
    r: u32,
    #[serde(rename = "Q")]
    q: Option<u32>,
    #[serde(rename = "D")]
    d: u32,
    #[serde(rename = "S")]
    s: u32,
    #[serde(rename = "P")]
    p: Option<u32>,
}

impl Serialize for MeasurementRecord {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        RecordJson {
            n: self.n,
            l: self.l,
            r: self.r,
            q: self.q,
            d: self.detections(),
            s: self.remaining(),
            p: self.output_photons(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MeasurementRecord {
    fn deserialize<De: serde::Deserializer<'de>>(deserializer: De) -> std::result::Result<Self, De::Error> {
        let json = RecordJson::deserialize(deserializer)?;
        Ok(MeasurementRecord {
            n: json.n,
            l: json.l,
            r: json.r,
            q: json.q,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    /// Circuit I registered photons at only one detector.
    DiscardSinglePort,
    /// Fewer than `P_min` photons survived Circuit II.
    AbortTooFewPhotons,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub record: MeasurementRecord,
    /// Exact probability of this measurement record.
    pub branch_probability: f64,
    /// Contribution to ensemble averages: the branch probability for
    /// exhaustive runs, `1/shots` for sampled ones.
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shot: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_state: Option<StateVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityReport>,
}

/// A conditional output of Circuit I.
#[derive(Clone, Debug, PartialEq)]
pub struct CatBranch {
    pub l: u32,
    pub r: u32,
    pub probability: f64,
    /// Normalized state of the principal modes.
    pub state: StateVector,
}

/// A conditional output of Circuit II.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionBranch {
    pub q: u32,
    /// Probability of `q` given the input state.
    pub probability: f64,
    pub state: StateVector,
}

/// `P_cond` by direct simulation: `R^r|N,N⟩` normalized, then
/// `‖R^S ψ‖² / S!` with `S = 2N − r`.
pub fn condensation_probability_sim(n: u32, r: u32) -> Result<f64> {
    if r >= n {
        return Err(Error::contract(
            "condensation_probability_sim",
            format!("requires r < N, got N = {n}, r = {r}"),
        ));
    }
    let mut psi = StateVector::dual_fock(n);
    for _ in 0..r {
        psi = normalize(&apply_kraus_r(&psi)?)?;
    }
    let remaining = 2 * n - r;
    let mut ln_norm = 0.0;
    for step in 1..=remaining {
        let next = apply_kraus_r(&psi)?;
        let weight = next.norm_sqr();
        if weight == 0.0 {
            return Ok(0.0);
        }
        // Dividing by `step` here accumulates the 1/S! factor.
        ln_norm += weight.ln() - f64::from(step).ln();
        psi = normalize(&next)?;
    }
    Ok(ln_norm.exp())
}

/// Circuit I: tap both principal modes with reflectance `f`, mix the taps and
/// count photons. Returns every possible `(l, r)` record sorted by `(l, r)`.
pub fn circuit_one(n: u32, f: f64) -> Result<Vec<CatBranch>> {
    if n == 0 || !(f > 0.0 && f < 1.0) {
        return Err(Error::contract("circuit_one", format!("requires N ≥ 1 and 0 < f < 1, got N = {n}, f = {f}")));
    }
    let tap = f.sqrt().asin();
    let mut state = StateVector::basis(&[n, n, 0, 0])?;
    state = apply_beam_splitter(&state, &BeamSplitterParams::new(0, 2, tap))?;
    state = apply_beam_splitter(&state, &BeamSplitterParams::new(1, 3, tap))?;
    state = apply_beam_splitter(&state, &BeamSplitterParams::new(2, 3, FRAC_PI_4))?;

    let mut branches = Vec::new();
    for right in measure_and_remove(&state, 3)? {
        for left in measure_and_remove(&right.post_state, 2)? {
            branches.push(CatBranch {
                l: left.count,
                r: right.count,
                probability: right.probability * left.probability,
                state: left.post_state,
            });
        }
    }
    branches.sort_by_key(|b| (b.l, b.r));
    Ok(branches)
}

/// Variable-reflectivity beam splitter `U_bs(γ)` on modes `(i, j)` built from
/// two fixed 50:50 beam splitters and two phase shifters:
/// `U_bs(π/4, π/2) U_ps(γ)_j U_ps(−γ)_i U_bs(π/4, −π/2)`.
pub fn variable_beam_splitter(s: &StateVector, i: usize, j: usize, gamma: f64) -> Result<StateVector> {
    let mut out = apply_beam_splitter(s, &BeamSplitterParams::new(i, j, FRAC_PI_4).with_chi(-FRAC_PI_2))?;
    out = apply_phase_shift(&out, &PhaseShiftParams::new(i, -gamma))?;
    out = apply_phase_shift(&out, &PhaseShiftParams::new(j, gamma))?;
    apply_beam_splitter(&out, &BeamSplitterParams::new(i, j, FRAC_PI_4).with_chi(FRAC_PI_2))
}

/// The relative phase Circuit II corrects for, and whether the record needs
/// the preliminary π phase shift that maps `Δ₀(l,r)` to `Δ₀(r,l) ≤ π/2`.
pub fn feed_forward_phase(l: u32, r: u32) -> Result<(f64, bool)> {
    if l > r {
        Ok((delta0_of(r, l)?, true))
    } else {
        Ok((delta0_of(l, r)?, false))
    }
}

/// Circuit II: makes the cat components orthogonal by feeding forward `(l, r)`.
pub fn circuit_two(state: &StateVector, l: u32, r: u32) -> Result<Vec<CorrectionBranch>> {
    if state.mode_count() != 2 {
        return Err(Error::contract("circuit_two", "expected a two-mode state"));
    }
    if l == 0 || r == 0 {
        return Err(Error::contract("circuit_two", "requires photons at both Circuit I detectors"));
    }
    let (_, flip) = feed_forward_phase(l, r)?;
    // tan(Δ₀/2) = √(min(l,r)/max(l,r)); exact at l = r, where the variable
    // beam splitter must be the identity.
    let tan = (f64::from(l.min(r)) / f64::from(l.max(r))).sqrt();
    let mut s = state.clone();
    if flip {
        s = apply_phase_shift(&s, &PhaseShiftParams::new(0, PI))?;
    }
    s = apply_beam_splitter(&s, &BeamSplitterParams::new(0, 1, FRAC_PI_4))?;
    s = s.attach_vacuum(1)?;
    s = variable_beam_splitter(&s, 1, 2, tan.acos())?;
    Ok(measure_and_remove(&s, 2)?
        .into_iter()
        .map(|o| CorrectionBranch {
            q: o.count,
            probability: o.probability,
            state: o.post_state,
        })
        .collect())
}

/// Circuit III: `U_bs(π/4, π) U_ps(π/2)₂`, mapping corrected cats to N00N states.
pub fn circuit_three(state: &StateVector) -> Result<StateVector> {
    let s = apply_phase_shift(state, &PhaseShiftParams::new(1, FRAC_PI_2))?;
    apply_beam_splitter(&s, &BeamSplitterParams::new(0, 1, FRAC_PI_4).with_chi(PI))
}

/// Every outcome that descends from one Circuit I record, in `Q` order.
fn outcomes_for_cat(n: u32, p_min: u32, cat: &CatBranch) -> Result<Vec<RunOutcome>> {
    let base = MeasurementRecord {
        n,
        l: cat.l,
        r: cat.r,
        q: None,
    };
    if cat.l == 0 || cat.r == 0 {
        return Ok(vec![RunOutcome {
            status: RunStatus::DiscardSinglePort,
            record: base,
            branch_probability: cat.probability,
            weight: cat.probability,
            shot: None,
            output_state: None,
            fidelity: None,
        }]);
    }
    circuit_two(&cat.state, cat.l, cat.r)?
        .into_iter()
        .map(|branch| {
            let record = MeasurementRecord {
                q: Some(branch.q),
                ..base
            };
            let probability = cat.probability * branch.probability;
            let photons = record.output_photons().expect("Q is set");
            if photons < p_min {
                return Ok(RunOutcome {
                    status: RunStatus::AbortTooFewPhotons,
                    record,
                    branch_probability: probability,
                    weight: probability,
                    shot: None,
                    output_state: None,
                    fidelity: None,
                });
            }
            let output = circuit_three(&branch.state)?;
            let fidelity = noon_fidelity(&output)?;
            Ok(RunOutcome {
                status: RunStatus::Success,
                record,
                branch_probability: probability,
                weight: probability,
                shot: None,
                output_state: Some(output),
                fidelity: Some(fidelity),
            })
        })
        .collect()
}

/// Runs Circuits I → II → III with the discard and abort policies.
///
/// Exhaustive runs list every branch in `(l, r, Q)` order. Monte Carlo runs
/// list one outcome per shot; shot `i` draws from its own ChaCha stream `i`
/// under the master seed, so results do not depend on the thread count.
pub fn run_generator(config: &GeneratorConfig) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    let p_min = config.effective_p_min();
    let cats = circuit_one(config.n, config.f)?;
    match config.mode {
        RunMode::Exhaustive => {
            let nested: Vec<Vec<RunOutcome>> = cats
                .par_iter()
                .map(|cat| outcomes_for_cat(config.n, p_min, cat))
                .collect::<Result<_>>()?;
            Ok(nested.into_iter().flatten().collect())
        }
        RunMode::MonteCarlo { seed, shots } => {
            let cache: Vec<OnceLock<Result<Vec<RunOutcome>>>> = cats.iter().map(|_| OnceLock::new()).collect();
            (0..shots)
                .into_par_iter()
                .map(|shot| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(shot);
                    let idx = pick(&mut rng, cats.iter().map(|c| c.probability));
                    let cat = &cats[idx];
                    let table = cache[idx]
                        .get_or_init(|| outcomes_for_cat(config.n, p_min, cat))
                        .as_ref()
                        .map_err(|e| Error::contract("run_generator", e.to_string()))?;
                    let choice = pick(&mut rng, table.iter().map(|o| o.branch_probability / cat.probability));
                    let mut outcome = table[choice].clone();
                    outcome.weight = 1.0 / shots as f64;
                    outcome.shot = Some(shot);
                    Ok(outcome)
                })
                .collect()
        }
    }
}

/// Index drawn from (approximately normalized) weights; rounding slack goes to
/// the last entry.
fn pick<I: Iterator<Item = f64>>(rng: &mut ChaCha8Rng, weights: I) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: u32,
    pub f: f64,
    pub p_min: u32,
    pub total_probability: f64,
    pub success_probability: f64,
    pub discard_probability: f64,
    pub abort_probability: f64,
    /// Weighted mean N00N fidelity over successful outcomes.
    pub mean_fidelity: f64,
    /// Weighted mean output photon number over successful outcomes.
    pub mean_output_photons: f64,
    /// Mean fidelity of successful outcomes grouped into quartiles of their
    /// conditional probability (least likely first).
    pub fidelity_by_likelihood_quartile: Vec<f64>,
}

pub fn summarize(config: &GeneratorConfig, outcomes: &[RunOutcome]) -> RunSummary {
    let mass = |status: RunStatus| -> f64 {
        outcomes
            .iter()
            .filter(|o| o.status == status)
            .map(|o| o.weight)
            .sum()
    };
    let successes: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.status == RunStatus::Success).collect();
    let success_probability = mass(RunStatus::Success);
    let weighted = |value: &dyn Fn(&RunOutcome) -> f64| -> f64 {
        if success_probability == 0.0 {
            return f64::NAN;
        }
        successes.iter().map(|o| o.weight * value(o)).sum::<f64>() / success_probability
    };
    let mean_fidelity = weighted(&|o| o.fidelity.map_or(0.0, |f| f.fidelity));
    let mean_output_photons = weighted(&|o| f64::from(o.record.output_photons().unwrap_or(0)));

    let mut ranked: Vec<&RunOutcome> = successes.clone();
    ranked.sort_by(|a, b| a.branch_probability.total_cmp(&b.branch_probability));
    let mut quartiles = vec![(0.0, 0.0); 4];
    let mut acc = 0.0;
    for o in ranked {
        let bucket = ((acc / success_probability) * 4.0).floor().min(3.0) as usize;
        quartiles[bucket].0 += o.weight * o.fidelity.map_or(0.0, |f| f.fidelity);
        quartiles[bucket].1 += o.weight;
        acc += o.weight;
    }
    RunSummary {
        n: config.n,
        f: config.f,
        p_min: config.effective_p_min(),
        total_probability: outcomes.iter().map(|o| o.weight).sum(),
        success_probability,
        discard_probability: mass(RunStatus::DiscardSinglePort),
        abort_probability: mass(RunStatus::AbortTooFewPhotons),
        mean_fidelity,
        mean_output_photons,
        fidelity_by_likelihood_quartile: quartiles
            .into_iter()
            .map(|(f, w)| if w > 0.0 { f / w } else { f64::NAN })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure3Weighting {
    /// Circuit I records weighted by their probability.
    #[default]
    Probability,
    /// Every Circuit I record counts once.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "D_over_2N")]
    pub d_over_2n: f64,
    #[serde(rename = "D")]
    pub detections: u32,
    /// Mean output photon number `P` over all Circuit II outcomes.
    #[serde(rename = "mean_P")]
    pub mean_p: f64,
    /// Mean N00N fidelity over Circuit II outcomes with `P ≥ 1`.
    pub mean_fidelity: f64,
}

/// Averages over Circuit I records with exactly `D = fraction·2N` detections
/// (both detectors firing), each record averaged over its Circuit II outcomes.
/// `(N, fraction)` cells where `fraction·2N` is not an integer, or where no
/// record has photons at both detectors, are skipped.
pub fn figure3_table(n_max: u32, fractions: &[f64], weighting: Figure3Weighting) -> Result<Vec<Figure3Row>> {
    let cells: Vec<(u32, f64, u32)> = (1..=n_max)
        .flat_map(|n| {
            fractions.iter().filter_map(move |&fraction| {
                let d = 2.0 * f64::from(n) * fraction;
                let rounded = d.round();
                ((d - rounded).abs() < 1e-9 && rounded >= 2.0 && rounded <= f64::from(2 * n))
                    .then_some((n, fraction, rounded as u32))
            })
        })
        .collect();
    let rows: Vec<Option<Figure3Row>> = cells
        .par_iter()
        .map(|&(n, fraction, d)| figure3_cell(n, fraction, d, weighting))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn figure3_cell(n: u32, fraction: f64, d: u32, weighting: Figure3Weighting) -> Result<Option<Figure3Row>> {
    // Conditional states depend on (l, r) only; the tap reflectance only
    // rescales records with equal D by a common factor.
    let cats = circuit_one(n, fraction.clamp(1e-6, 1.0 - 1e-6))?;
    let (mut weight_sum, mut p_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for cat in cats.iter().filter(|c| c.l + c.r == d && c.l > 0 && c.r > 0) {
        let mut mean_p = 0.0;
        let (mut fid, mut fid_weight) = (0.0, 0.0);
        for branch in circuit_two(&cat.state, cat.l, cat.r)? {
            let photons = 2 * n - d - branch.q;
            mean_p += branch.probability * f64::from(photons);
            if photons >= 1 {
                let report = noon_fidelity(&circuit_three(&branch.state)?)?;
                fid += branch.probability * report.fidelity;
                fid_weight += branch.probability;
            }
        }
        if fid_weight == 0.0 {
            continue;
        }
        let w = match weighting {
            Figure3Weighting::Probability => cat.probability,
            Figure3Weighting::Uniform => 1.0,
        };
        weight_sum += w;
        p_sum += w * mean_p;
        f_sum += w * fid / fid_weight;
    }
    if weight_sum == 0.0 {
        return Ok(None);
    }
    Ok(Some(Figure3Row {
        n,
        d_over_2n: fraction,
        detections: d,
        mean_p: p_sum / weight_sum,
        mean_fidelity: f_sum / weight_sum,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{build_cat, p_cond, CatStateParams};
    use crate::state::inner_product;

    #[test]
    fn condensation_matches_closed_form_small() {
        assert!((condensation_probability_sim(1, 0).unwrap() - 0.5).abs() < 1e-14);
        let sim = condensation_probability_sim(4, 2).unwrap();
        assert!((sim - p_cond(4, 2).unwrap()).abs() < 1e-12);
        assert!(condensation_probability_sim(3, 3).is_err());
    }

    #[test]
    fn condensation_increases_with_detections() {
        let values: Vec<f64> = (1..8).map(|r| condensation_probability_sim(8, r).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
    }

    #[test]
    fn circuit_one_cat_fidelities_at_n3() {
        let cats = circuit_one(3, 0.5).unwrap();
        let total: f64 = cats.iter().map(|c| c.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let fid = |l: u32, r: u32| {
            let cat = cats.iter().find(|c| c.l == l && c.r == r).unwrap();
            let target = build_cat(
                CatStateParams::new(6 - l - r, delta0_of(l, r).unwrap(), f64::from(l) * PI).unwrap(),
            )
            .unwrap();
            inner_product(&target, &cat.state).unwrap().norm_sqr()
        };
        assert!((fid(1, 1) - 1.0).abs() < 1e-10);
        assert!((fid(1, 2) - 0.94).abs() < 0.005);
        assert!((fid(2, 1) - 0.94).abs() < 0.005);
    }

    #[test]
    fn variable_beam_splitter_matches_direct() {
        let s = StateVector::from_terms(
            3,
            [
                (vec![1, 2, 0], num_complex::Complex64::new(0.6, 0.1)),
                (vec![0, 1, 2], num_complex::Complex64::new(-0.2, 0.5)),
                (vec![2, 0, 1], num_complex::Complex64::new(0.3, -0.4)),
            ],
        )
        .unwrap();
        for gamma in [0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let a = variable_beam_splitter(&s, 1, 2, gamma).unwrap();
            let b = apply_beam_splitter(&s, &BeamSplitterParams::new(1, 2, gamma)).unwrap();
            for (k, x) in b.iter() {
                assert!((x - a.amplitude(k.counts())).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ideal_half_pi_cat_passes_circuit_two_unchanged_in_q() {
        let cat = build_cat(CatStateParams::new(6, FRAC_PI_2, PI).unwrap()).unwrap();
        let out = circuit_two(&cat, 1, 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].q, 0);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuit_two_requires_both_detectors() {
        let cat = build_cat(CatStateParams::new(4, FRAC_PI_2, 0.0).unwrap()).unwrap();
        assert!(circuit_two(&cat, 0, 3).is_err());
        assert!(circuit_two(&StateVector::basis(&[1, 1, 0]).unwrap(), 1, 1).is_err());
    }

    #[test]
    fn exhaustive_run_is_complete_and_ordered() {
        let config = GeneratorConfig::new(4, 0.5).unwrap();
        let outcomes = run_generator(&config).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.branch_probability).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let keys: Vec<_> = outcomes.iter().map(|o| (o.record.l, o.record.r, o.record.q)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for o in &outcomes {
            match o.status {
                RunStatus::DiscardSinglePort => assert!(o.record.l == 0 || o.record.r == 0),
                RunStatus::AbortTooFewPhotons => {
                    assert!(o.record.output_photons().unwrap() < config.effective_p_min())
                }
                RunStatus::Success => {
                    let p = o.record.output_photons().unwrap();
                    assert_eq!(o.fidelity.unwrap().total_photons, p);
                    assert_eq!(o.output_state.as_ref().unwrap().total_photons(), Some(p));
                }
            }
        }
        let summary = summarize(&config, &outcomes);
        assert!((summary.success_probability + summary.discard_probability + summary.abort_probability - 1.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(GeneratorConfig::new(0, 0.5).is_err());
        assert!(GeneratorConfig::new(3, 1.0).is_err());
        assert!(GeneratorConfig::new(3, 0.5).unwrap().with_p_min(7).validate().is_err());
        assert!(GeneratorConfig::new(3, 0.5).unwrap().with_p_min(0).validate().is_err());
        assert_eq!(GeneratorConfig::new(1, 2.0 / 3.0).unwrap().effective_p_min(), 1);
        assert_eq!(GeneratorConfig::new(10, 0.5).unwrap().effective_p_min(), 5);
        assert_eq!(GeneratorConfig::new(5, 0.5).unwrap().effective_p_min(), 3);
    }

    #[test]
    fn record_json_has_derived_totals() {
        let record = MeasurementRecord { n: 5, l: 2, r: 3, q: Some(1) };
        let json = serde_json::to_string(&record).unwrap();
        assert_eq!(json, r#"{"n":5,"l":2,"r":3,"Q":1,"D":5,"S":5,"P":4}"#);
        let back: MeasurementRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn figure3_skips_fractional_cells() {
        let rows = figure3_table(4, &[1.0 / 3.0, 0.5], Figure3Weighting::Probability).unwrap();
        assert!(rows.iter().all(|r| (r.d_over_2n - 0.5).abs() < 1e-12 || r.n == 3));
        assert!(rows.iter().all(|r| r.n >= 2));
    }
}

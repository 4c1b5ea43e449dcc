//! Randomized properties of states, optical elements and reference states.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, TAU};

use noonsim::analytics::{build_psi_infinity, PhaseRefParams};
use noonsim::generator::variable_beam_splitter;
use noonsim::ops::{
    apply_beam_splitter, apply_kraus_l, apply_kraus_r, apply_phase_shift, measure_and_remove, measure_number,
    BeamSplitterParams, PhaseShiftParams,
};
use noonsim::state::{inner_product, noon_fidelity, StateVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn amplitude() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Nonzero state on `modes` modes with up to `max_per_mode` photons per mode.
fn state(modes: usize, max_per_mode: u32) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((prop::collection::vec(0..=max_per_mode, modes), amplitude()), 1..8)
        .prop_map(move |terms| StateVector::from_terms(modes, terms).unwrap())
        .prop_filter("nonzero", |s| s.norm_sqr() > 1e-6)
}

/// Two-mode state with a fixed total photon number.
fn sector_state() -> impl Strategy<Value = StateVector> {
    (1u32..=10).prop_flat_map(|total| {
        prop::collection::vec(amplitude(), total as usize + 1).prop_map(move |amps| {
            StateVector::from_terms(2, amps.into_iter().enumerate().map(|(k, a)| (vec![total - k as u32, k as u32], a)))
                .unwrap()
        })
    })
    .prop_filter("nonzero", |s| s.norm_sqr() > 1e-6)
}

fn any_state() -> impl Strategy<Value = StateVector> {
    (2usize..=3).prop_flat_map(|m| state(m, 4))
}

fn distance(a: &StateVector, b: &StateVector) -> f64 {
    a.add(&b.scaled(Complex64::new(-1.0, 0.0))).unwrap().norm()
}

fn swap_modes(s: &StateVector) -> StateVector {
    StateVector::from_terms(2, s.iter().map(|(k, a)| (vec![k.get(1), k.get(0)], *a))).unwrap()
}

/// Brute-force `max_φ |c_0S + e^{−iφ} c_S0|² / 2` on a grid, then golden-section
/// refinement around the best grid point.
fn fidelity_by_search(s: &StateVector, total: u32) -> f64 {
    let s = s.normalize().unwrap();
    let head = s.amplitude(&[total, 0]);
    let tail = s.amplitude(&[0, total]);
    let value = |phi: f64| (tail + Complex64::from_polar(1.0, -phi) * head).norm_sqr() / 2.0;
    let grid = 10_000;
    let step = TAU / grid as f64;
    let best = (0..grid).map(|i| i as f64 * step).max_by(|a, b| value(*a).total_cmp(&value(*b))).unwrap();
    let (mut lo, mut hi) = (best - step, best + step);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let x1 = hi - ratio * (hi - lo);
        let x2 = lo + ratio * (hi - lo);
        if value(x1) < value(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    value(0.5 * (lo + hi)).max(value(best))
}

#[test]
fn symmetric_beam_splitter_on_single_photons() {
    let p = BeamSplitterParams::new(0, 1, FRAC_PI_4).with_chi(FRAC_PI_2);
    let out = apply_beam_splitter(&StateVector::basis(&[1, 0]).unwrap(), &p).unwrap();
    assert!((out.amplitude(&[1, 0]) - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((out.amplitude(&[0, 1]) - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    let out = apply_beam_splitter(&StateVector::basis(&[0, 1]).unwrap(), &p).unwrap();
    assert!((out.amplitude(&[0, 1]) - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((out.amplitude(&[1, 0]) - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
}

#[test]
fn psi_infinity_matches_coherent_quadrature() {
    // ∫ dθ e^{−iSθ} |α⟩|α e^{iΔ}⟩ with α = |α| e^{iθ}, 2048-point trapezoid.
    let points = 2048;
    for total in 1..=8u32 {
        for magnitude in [0.5f64, 1.0, 3.0] {
            for delta in [0.0, 0.7, FRAC_PI_2, 2.9, -1.4] {
                let mut terms = Vec::new();
                for n1 in 0..=total {
                    for n2 in 0..=total - n1 + 2 {
                        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
                        let base = (-magnitude * magnitude).exp() * magnitude.powi((n1 + n2) as i32)
                            / (fact(n1) * fact(n2)).sqrt();
                        let mut sum = Complex64::default();
                        for i in 0..points {
                            let theta = TAU * i as f64 / points as f64;
                            let phase = theta * f64::from(n1 + n2) + delta * f64::from(n2) - theta * f64::from(total);
                            sum += Complex64::from_polar(base, phase);
                        }
                        terms.push((vec![n1, n2], sum / points as f64));
                    }
                }
                let numeric = StateVector::from_terms(2, terms).unwrap().normalize().unwrap();
                let exact = build_psi_infinity(PhaseRefParams::new(total, delta).unwrap());
                let overlap = inner_product(&exact, &numeric).unwrap().norm();
                assert!((overlap - 1.0).abs() < 1e-10, "S={total} |α|={magnitude} Δ={delta}: {overlap}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inner_product_is_hermitian_and_positive(a in state(2, 4), b in state(2, 4), z in amplitude()) {
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12);
        let aa = inner_product(&a, &a).unwrap();
        prop_assert!(aa.re > 0.0 && aa.im.abs() < 1e-15);
        let scaled = inner_product(&a, &b.scaled(z)).unwrap();
        prop_assert!((scaled - z * ab).norm() < 1e-12);
        let conj = inner_product(&a.scaled(z), &b).unwrap();
        prop_assert!((conj - z.conj() * ab).norm() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent(s in any_state()) {
        let once = s.normalize().unwrap();
        let twice = once.normalize().unwrap();
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
        prop_assert!(distance(&once, &twice) < 1e-12);
    }

    #[test]
    fn vacuum_round_trip_is_exact(s in any_state(), extra in 1usize..3) {
        let mut grown = s.attach_vacuum(extra).unwrap();
        for _ in 0..extra {
            grown = grown.drop_mode(grown.mode_count() - 1).unwrap();
        }
        prop_assert_eq!(grown, s);
    }

    #[test]
    fn noon_fidelity_is_the_phase_maximum(s in sector_state()) {
        let report = noon_fidelity(&s).unwrap();
        prop_assert!(report.fidelity <= 1.0);
        let searched = fidelity_by_search(&s, report.total_photons);
        prop_assert!((report.fidelity - searched).abs() < 1e-9, "{} vs {}", report.fidelity, searched);
    }

    #[test]
    fn beam_splitters_and_phase_shifts_are_unitary(
        a in state(3, 4),
        b in state(3, 4),
        gamma in 0.0..=FRAC_PI_2,
        chi in -PI..PI,
        pair in prop::sample::select(vec![(0usize, 1usize), (1, 0), (0, 2), (2, 1)]),
    ) {
        let p = BeamSplitterParams::new(pair.0, pair.1, gamma).with_chi(chi);
        let (ua, ub) = (apply_beam_splitter(&a, &p).unwrap(), apply_beam_splitter(&b, &p).unwrap());
        prop_assert!((ua.norm() - a.norm()).abs() < 1e-12);
        let before = inner_product(&a, &b).unwrap();
        prop_assert!((inner_product(&ua, &ub).unwrap() - before).norm() < 1e-12);
        let (before_w, after_w) = (a.sector_weights(), ua.sector_weights());
        prop_assert!(before_w.keys().eq(after_w.keys()));
        for (total, w) in &before_w {
            prop_assert!((after_w[total] - w).abs() < 1e-12);
        }
        let ps = apply_phase_shift(&a, &PhaseShiftParams::new(pair.0, chi)).unwrap();
        prop_assert!((ps.norm() - a.norm()).abs() < 1e-12);
        for (k, amp) in a.iter() {
            prop_assert!((ps.amplitude(k.counts()).norm() - amp.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn kraus_operators_count_photons(s in state(2, 5)) {
        let mean_total: f64 = s.iter().map(|(k, a)| f64::from(k.total()) * a.norm_sqr()).sum();
        let sum = apply_kraus_l(&s).unwrap().norm_sqr() + apply_kraus_r(&s).unwrap().norm_sqr();
        prop_assert!((sum - mean_total).abs() < 1e-12 * mean_total.max(1.0));
    }

    #[test]
    fn two_half_beam_splitters_compose(s in any_state(), chi in -PI..PI) {
        let half = BeamSplitterParams::new(0, 1, FRAC_PI_4).with_chi(chi);
        let twice = apply_beam_splitter(&apply_beam_splitter(&s, &half).unwrap(), &half).unwrap();
        let full = apply_beam_splitter(&s, &BeamSplitterParams::new(0, 1, FRAC_PI_2).with_chi(chi)).unwrap();
        prop_assert!(distance(&twice, &full) < 1e-12);
    }

    #[test]
    fn variable_beam_splitter_decomposition(s in state(3, 4), gamma in 0.0..=FRAC_PI_2) {
        let built = variable_beam_splitter(&s, 1, 2, gamma).unwrap();
        let direct = apply_beam_splitter(&s, &BeamSplitterParams::new(1, 2, gamma)).unwrap();
        prop_assert!(distance(&built, &direct) < 1e-12);
    }

    #[test]
    fn detection_commutes_with_disjoint_elements(s in state(3, 3), gamma in 0.0..=FRAC_PI_2, chi in -PI..PI) {
        let p = BeamSplitterParams::new(0, 1, gamma).with_chi(chi);
        let late = measure_and_remove(&apply_beam_splitter(&s, &p).unwrap(), 2).unwrap();
        let early = measure_and_remove(&s, 2).unwrap();
        prop_assert_eq!(late.len(), early.len());
        for (x, y) in late.iter().zip(&early) {
            prop_assert_eq!(x.count, y.count);
            prop_assert!((x.probability - y.probability).abs() < 1e-12);
            prop_assert!(distance(&x.post_state, &apply_beam_splitter(&y.post_state, &p).unwrap()) < 1e-12);
        }
        // Collapsing and then removing the mode equals removing it directly.
        for (kept, removed) in measure_number(&s, 2).unwrap().iter().zip(&early) {
            let vacated = StateVector::from_terms(3, kept.post_state.iter().map(|(k, a)| (vec![k.get(0), k.get(1), 0], *a))).unwrap();
            prop_assert_eq!(vacated.drop_mode(2).unwrap(), removed.post_state.clone());
        }
    }

    #[test]
    fn detection_probabilities_are_complete(s in any_state(), mode in 0usize..2) {
        let total: f64 = measure_number(&s, mode).unwrap().iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn overlap_law(total in 1u32..=25, d1 in -PI..PI, d2 in -PI..PI) {
        let a = build_psi_infinity(PhaseRefParams::new(total, d1).unwrap());
        let b = build_psi_infinity(PhaseRefParams::new(total, d2).unwrap());
        let law = ((d2 - d1) / 2.0).cos().abs().powi(total as i32);
        prop_assert!((inner_product(&a, &b).unwrap().norm() - law).abs() < 1e-10);
    }

    #[test]
    fn mode_swap_mirrors_reference_phase(total in 1u32..=12, delta in -PI..PI) {
        let a = build_psi_infinity(PhaseRefParams::new(total, delta).unwrap());
        let b = build_psi_infinity(PhaseRefParams::new(total, -delta).unwrap());
        prop_assert!((inner_product(&swap_modes(&a), &b).unwrap().norm() - 1.0).abs() < 1e-12);
    }
}

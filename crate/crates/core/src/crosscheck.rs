//! Compares the bundled `.qoc` programs with the hand-coded circuits in
//! [`crate::generator`].

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dsl::{bundled, interpret, parse, Branch, InterpretMode};
use crate::error::{Error, Result};
use crate::generator::{circuit_one, circuit_three, circuit_two, run_generator, GeneratorConfig, RunStatus};
use crate::state::{inner_product, StateVector};

pub const PROBABILITY_TOLERANCE: f64 = 1e-12;
pub const OVERLAP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheck {
    pub program: String,
    pub branches: usize,
    pub max_probability_error: f64,
    /// Largest `1 − |⟨builtin|interpreted⟩|` over kept branches.
    pub max_overlap_defect: f64,
    /// Records present on one side only.
    pub unmatched: Vec<String>,
    pub passed: bool,
}

/// Key: register values; value: probability, whether the branch was kept and
/// its normalized output.
type Table = BTreeMap<Vec<(String, u32)>, (f64, bool, Option<StateVector>)>;

fn key(pairs: &[(&str, Option<u32>)]) -> Vec<(String, u32)> {
    let mut k: Vec<_> = pairs
        .iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
    k.sort();
    k
}

fn interpreted(name: &str, input: &StateVector, params: &BTreeMap<String, f64>) -> Result<Table> {
    let source = bundled(name).ok_or_else(|| Error::contract("crosscheck", format!("no bundled program {name}")))?;
    let program = parse(source)?;
    let branches = interpret(&program, input, params, InterpretMode::Exhaustive)?;
    branches
        .into_iter()
        .map(|b: Branch| {
            let state = if b.discarded { None } else { Some(b.reduced_state()?) };
            let k = b.registers.into_iter().collect();
            Ok((k, (b.probability, !b.discarded, state)))
        })
        .collect()
}

fn compare(program: &str, builtin: &Table, interp: &Table) -> Result<CrossCheck> {
    let mut unmatched = Vec::new();
    let (mut prob_err, mut overlap_defect) = (0.0f64, 0.0f64);
    for (k, (p, kept, state)) in builtin {
        let Some((q, kept2, state2)) = interp.get(k) else {
            unmatched.push(format!("builtin {k:?}"));
            continue;
        };
        prob_err = prob_err.max((p - q).abs());
        if kept != kept2 {
            unmatched.push(format!("status {k:?}"));
            continue;
        }
        if let (Some(a), Some(b)) = (state, state2) {
            overlap_defect = overlap_defect.max(1.0 - inner_product(a, b)?.norm());
        }
    }
    for k in interp.keys().filter(|k| !builtin.contains_key(*k)) {
        unmatched.push(format!("interpreter {k:?}"));
    }
    Ok(CrossCheck {
        program: program.to_string(),
        branches: builtin.len(),
        max_probability_error: prob_err,
        max_overlap_defect: overlap_defect,
        passed: unmatched.is_empty() && prob_err <= PROBABILITY_TOLERANCE && overlap_defect <= OVERLAP_TOLERANCE,
        unmatched,
    })
}

fn dual_fock_n(input: &StateVector) -> Result<u32> {
    let terms: Vec<_> = input.iter().collect();
    match terms.as_slice() {
        [(occ, _)] if occ.mode_count() == 2 && occ.get(0) == occ.get(1) && occ.get(0) > 0 => Ok(occ.get(0)),
        _ => Err(Error::contract("crosscheck", "this program is checked on a dual Fock input |N,N⟩")),
    }
}

fn register(params: &BTreeMap<String, f64>, name: &str) -> Result<u32> {
    let v = params.get(name).copied().ok_or_else(|| Error::contract("crosscheck", format!("parameter {name} is required")))?;
    if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
        return Err(Error::contract("crosscheck", format!("{name} = {v} is not a photon count")));
    }
    Ok(v as u32)
}

/// Runs bundled program `name` on `input` through the interpreter and the
/// matching builtin and compares branch sets, probabilities and states.
pub fn check_bundled(name: &str, input: &StateVector, params: &BTreeMap<String, f64>) -> Result<CrossCheck> {
    let f = params.get("f").copied().unwrap_or(0.5);
    let mut builtin = Table::new();
    let mut params = params.clone();
    match name {
        "pipeline.qoc" => {
            let n = dual_fock_n(input)?;
            params.entry("N".into()).or_insert(f64::from(n));
            let mut config = GeneratorConfig::new(n, f)?;
            if let Some(p) = params.get("pmin") {
                config = config.with_p_min((*p as u32).max(1));
            }
            for o in run_generator(&config)? {
                let k = key(&[("l", Some(o.record.l)), ("r", Some(o.record.r)), ("Q", o.record.q)]);
                builtin.insert(k, (o.branch_probability, o.status == RunStatus::Success, o.output_state));
            }
        }
        "circuit1.qoc" => {
            let n = dual_fock_n(input)?;
            for c in circuit_one(n, f)? {
                builtin.insert(key(&[("l", Some(c.l)), ("r", Some(c.r))]), (c.probability, true, Some(c.state)));
            }
        }
        "circuit2.qoc" => {
            let (l, r) = (register(&params, "l")?, register(&params, "r")?);
            for b in circuit_two(&input.normalize()?, l, r)? {
                builtin.insert(key(&[("Q", Some(b.q))]), (b.probability, true, Some(b.state)));
            }
        }
        "circuit3.qoc" => {
            builtin.insert(Vec::new(), (1.0, true, Some(circuit_three(&input.normalize()?)?)));
        }
        other => {
            return Err(Error::contract("crosscheck", format!("{other} has no builtin counterpart")));
        }
    }
    let interp = interpreted(name, input, &params)?;
    compare(name, &builtin, &interp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{build_cat, CatStateParams};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn pipeline_matches_generator_at_n3() {
        let check = check_bundled("pipeline.qoc", &StateVector::dual_fock(3), &BTreeMap::new()).unwrap();
        assert!(check.passed, "{check:?}");
        assert!(check.branches > 10);
    }

    #[test]
    fn circuit_two_on_ideal_cat_has_one_branch() {
        let cat = build_cat(CatStateParams::new(6, FRAC_PI_2, PI).unwrap()).unwrap();
        let params = BTreeMap::from([("l".to_string(), 1.0), ("r".to_string(), 1.0)]);
        let check = check_bundled("circuit2.qoc", &cat, &params).unwrap();
        assert!(check.passed, "{check:?}");
        assert_eq!(check.branches, 1);
    }

    #[test]
    fn rejects_unknown_programs_and_inputs() {
        assert!(check_bundled("other.qoc", &StateVector::dual_fock(2), &BTreeMap::new()).is_err());
        let skewed = StateVector::basis(&[2, 1]).unwrap();
        assert!(check_bundled("pipeline.qoc", &skewed, &BTreeMap::new()).is_err());
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ast::{Chi, Condition, Expr, Program, Statement};
use super::RuntimeError;
use crate::error::{Error, Result};
use crate::ops::{apply_beam_splitter, apply_phase_shift, measure_number, BeamSplitterParams, PhaseShiftParams};
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpretMode {
    /// Follow every detection outcome.
    Exhaustive,
    /// One trajectory per shot; shot `i` uses ChaCha stream `i` under `seed`.
    Sampled { seed: u64, shots: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub registers: BTreeMap<String, u32>,
    /// Probability of this register assignment.
    pub probability: f64,
    /// Normalized state on all modes; detected modes are left empty.
    pub state: StateVector,
    pub discarded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shot: Option<u64>,
    #[serde(skip)]
    detected: BTreeSet<usize>,
}

impl Branch {
    /// Modes that were detected and not touched since.
    pub fn detected_modes(&self) -> &BTreeSet<usize> {
        &self.detected
    }

    /// The state with detected modes removed (at least one mode is kept).
    pub fn reduced_state(&self) -> Result<StateVector> {
        let mut state = self.state.clone();
        for &mode in self.detected.iter().rev() {
            if state.mode_count() == 1 {
                break;
            }
            state = state.drop_mode(mode)?;
        }
        Ok(state)
    }
}

struct Context<'a> {
    params: &'a BTreeMap<String, f64>,
}

impl Context<'_> {
    fn fail(&self, b: &Branch, message: impl Into<String>) -> Error {
        Error::Runtime(RuntimeError {
            message: message.into(),
            registers: b.registers.clone(),
        })
    }

    fn eval(&self, b: &Branch, e: &Expr) -> Result<f64> {
        let lookup = |name: &str| {
            b.registers
                .get(name)
                .map(|&v| f64::from(v))
                .or_else(|| self.params.get(name).copied())
        };
        match e.eval(&lookup) {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(self.fail(b, format!("expression {e} evaluated to {v}"))),
            None => Err(self.fail(b, format!("expression {e} reads an unbound name"))),
        }
    }

    fn holds(&self, b: &Branch, c: &Condition) -> Result<bool> {
        Ok(c.op.holds(self.eval(b, &c.lhs)?, self.eval(b, &c.rhs)?))
    }

    fn run_block(&self, statements: &[Statement], mut branches: Vec<Branch>, rng: &mut Option<ChaCha8Rng>) -> Result<Vec<Branch>> {
        for statement in statements {
            let mut next = Vec::with_capacity(branches.len());
            for b in branches {
                if b.discarded {
                    next.push(b);
                    continue;
                }
                self.step(statement, b, rng, &mut next)?;
            }
            branches = next;
        }
        Ok(branches)
    }

    fn step(&self, statement: &Statement, mut b: Branch, rng: &mut Option<ChaCha8Rng>, out: &mut Vec<Branch>) -> Result<()> {
        match statement {
            Statement::Bs {
                first,
                second,
                gamma,
                chi,
            } => {
                let gamma = self.eval(&b, gamma)?;
                let chi = match chi {
                    Chi::Zero => 0.0,
                    Chi::Symmetric => FRAC_PI_2,
                    Chi::Expr(e) => self.eval(&b, e)?,
                };
                let params = BeamSplitterParams::new(*first, *second, gamma).with_chi(chi);
                b.state = apply_beam_splitter(&b.state, &params).map_err(|e| self.fail(&b, e.to_string()))?;
                b.detected.remove(first);
                b.detected.remove(second);
                out.push(b);
            }
            Statement::Ps { mode, chi } => {
                let chi = self.eval(&b, chi)?;
                b.state = apply_phase_shift(&b.state, &PhaseShiftParams::new(*mode, chi))
                    .map_err(|e| self.fail(&b, e.to_string()))?;
                b.detected.remove(mode);
                out.push(b);
            }
            Statement::Detect { mode, register } => {
                let outcomes = measure_number(&b.state, *mode).map_err(|e| self.fail(&b, e.to_string()))?;
                let chosen: Vec<_> = match rng {
                    None => outcomes,
                    Some(rng) => {
                        let u: f64 = rng.gen();
                        let mut acc = 0.0;
                        let index = outcomes
                            .iter()
                            .position(|o| {
                                acc += o.probability;
                                u < acc
                            })
                            .unwrap_or(outcomes.len() - 1);
                        outcomes.into_iter().skip(index).take(1).collect()
                    }
                };
                for o in chosen {
                    let mut child = b.clone();
                    child.state = vacate(&o.post_state, *mode);
                    child.probability *= o.probability;
                    child.registers.insert(register.clone(), o.count);
                    child.detected.insert(*mode);
                    out.push(child);
                }
            }
            Statement::Vacuum { count } => {
                b.state = b.state.attach_vacuum(*count)?;
                out.push(b);
            }
            Statement::If {
                condition,
                then_block,
                else_block,
            } => {
                let block: &[Statement] = if self.holds(&b, condition)? {
                    then_block
                } else {
                    else_block.as_deref().unwrap_or(&[])
                };
                out.extend(self.run_block(block, vec![b], rng)?);
            }
            Statement::DiscardIf(condition) => {
                if self.holds(&b, condition)? {
                    b.discarded = true;
                }
                out.push(b);
            }
            Statement::Unreachable => return Err(self.fail(&b, "reached an unreachable statement")),
        }
        Ok(())
    }
}

/// Moves the (collapsed) photons of `mode` out of the state.
fn vacate(s: &StateVector, mode: usize) -> StateVector {
    StateVector::from_map(s.mode_count(), s.iter().map(|(k, a)| (k.with(mode, 0), *a)).collect())
}

fn resolve_params(program: &Program, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let runtime = |message: String| {
        Error::Runtime(RuntimeError {
            message,
            registers: BTreeMap::new(),
        })
    };
    if let Some(unknown) = given.keys().find(|k| !program.params.iter().any(|p| &p.name == *k)) {
        return Err(runtime(format!("program has no parameter named {unknown}")));
    }
    let mut values = BTreeMap::new();
    for p in &program.params {
        let value = match (given.get(&p.name), &p.default) {
            (Some(v), _) => *v,
            (None, Some(e)) => e
                .eval(&|name| values.get(name).copied())
                .ok_or_else(|| runtime(format!("default of {} reads an unbound name", p.name)))?,
            (None, None) => return Err(runtime(format!("parameter {} needs a value", p.name))),
        };
        if !value.is_finite() {
            return Err(runtime(format!("parameter {} = {value} is not finite", p.name)));
        }
        values.insert(p.name.clone(), value);
    }
    Ok(values)
}

/// Runs `program` on `input`. Exhaustive runs return every branch in
/// detection order; sampled runs return one branch per shot.
pub fn interpret(
    program: &Program,
    input: &StateVector,
    params: &BTreeMap<String, f64>,
    mode: InterpretMode,
) -> Result<Vec<Branch>> {
    if input.mode_count() != program.mode_count {
        return Err(Error::ModeMismatch {
            left: program.mode_count,
            right: input.mode_count(),
        });
    }
    let params = resolve_params(program, params)?;
    let ctx = Context { params: &params };
    let start = Branch {
        registers: BTreeMap::new(),
        probability: 1.0,
        state: input.normalize()?,
        discarded: false,
        shot: None,
        detected: BTreeSet::new(),
    };
    match mode {
        InterpretMode::Exhaustive => ctx.run_block(&program.statements, vec![start], &mut None),
        InterpretMode::Sampled { seed, shots } => {
            let runs: Vec<Vec<Branch>> = (0..shots)
                .into_par_iter()
                .map(|shot| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(shot);
                    let mut run = ctx.run_block(&program.statements, vec![start.clone()], &mut Some(rng))?;
                    for b in &mut run {
                        b.shot = Some(shot);
                    }
                    Ok(run)
                })
                .collect::<Result<_>>()?;
            Ok(runs.into_iter().flatten().collect())
        }
    }
}

//! Random differential testing of two programs over constraint-satisfying
//! inputs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::interp::{interpret_with, ExecutionResult, InputSource, ReadRequest, Status};
use crate::constraints::InputConstraints;
use crate::frontend::Program;

/// Per-trial budget; far above what small inputs need.
const TRIAL_BUDGET: u64 = 2_000_000;
const ELEMENT_RANGE: std::ops::RangeInclusive<i64> = -9..=9;
const SCALAR_MAX: i64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TapeKind {
    Scalar,
    Element,
}

/// One consumed input value, with the name of the variable it was read into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeEntry {
    pub name: String,
    pub kind: TapeKind,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Agree { trials_run: usize },
    Disagree { witness: Vec<i64>, reference: ExecutionResult, candidate: ExecutionResult },
}

impl Verdict {
    pub fn agrees(&self) -> bool {
        matches!(self, Verdict::Agree { .. })
    }
}

/// Draws scalars from a small positive range (narrowed by the constraints) and
/// array elements from a small signed range, recording everything handed out.
pub struct RandomInput<'c> {
    rng: ChaCha8Rng,
    constraints: &'c InputConstraints,
    scalar_cap: i64,
    pub tape: Vec<TapeEntry>,
    replay: Vec<TapeEntry>,
    pos: usize,
}

impl<'c> RandomInput<'c> {
    pub fn new(seed: u64, constraints: &'c InputConstraints, scalar_cap: i64) -> Self {
        RandomInput {
            rng: ChaCha8Rng::seed_from_u64(seed),
            constraints,
            scalar_cap,
            tape: Vec::new(),
            replay: Vec::new(),
            pos: 0,
        }
    }

    fn fresh(&mut self, req: &ReadRequest<'_>) -> i64 {
        if req.is_element {
            return self.rng.gen_range(ELEMENT_RANGE);
        }
        let (lo, hi) = self.constraints.bounds(req.name);
        let lo = lo.unwrap_or(1);
        let hi = hi.unwrap_or(i64::MAX).min(lo.max(1).saturating_add(self.scalar_cap - 1)).max(lo);
        self.rng.gen_range(lo..=hi)
    }

    /// Restart from the beginning, replaying the recorded tape first.
    fn rewind(&mut self) {
        self.replay = std::mem::take(&mut self.tape);
        self.pos = 0;
    }
}

impl InputSource for RandomInput<'_> {
    fn next(&mut self, req: &ReadRequest<'_>) -> Option<i64> {
        let value = if self.pos < self.replay.len() {
            self.replay[self.pos].value
        } else {
            self.fresh(req)
        };
        self.pos += 1;
        let kind = if req.is_element { TapeKind::Element } else { TapeKind::Scalar };
        self.tape.push(TapeEntry { name: req.name.to_string(), kind, value });
        // Keep long-running readers from growing the tape without bound.
        (self.tape.len() < 100_000).then_some(value)
    }
}

/// Values of the first read of every scalar, for constraint checking.
pub fn scalar_bindings(tape: &[TapeEntry]) -> BTreeMap<String, i64> {
    let mut env = BTreeMap::new();
    for t in tape {
        if t.kind == TapeKind::Scalar {
            env.entry(t.name.clone()).or_insert(t.value);
        }
    }
    env
}

fn satisfies(c: &InputConstraints, tape: &[TapeEntry]) -> bool {
    c.holds(&scalar_bindings(tape)).unwrap_or(true)
}

fn run_tape(p: &Program, tape: &[i64]) -> ExecutionResult {
    let mut src = tape.to_vec().into_iter();
    interpret_with(p, &mut src, TRIAL_BUDGET)
}

fn disagrees(r: &ExecutionResult, c: &ExecutionResult) -> bool {
    c.status != Status::Ok || r.outputs != c.outputs
}

/// Sample one constraint-satisfying reference run.
pub fn sample_input(
    reference: &Program,
    constraints: &InputConstraints,
    seed: u64,
    scalar_cap: i64,
) -> Option<(Vec<TapeEntry>, ExecutionResult)> {
    let mut src = RandomInput::new(seed, constraints, scalar_cap);
    for _ in 0..20 {
        let r = interpret_with(reference, &mut src, TRIAL_BUDGET);
        if satisfies(constraints, &src.tape) {
            return Some((src.tape, r));
        }
        // Redraw: drop the tape so new values come out.
        src.tape.clear();
        src.replay.clear();
        src.pos = 0;
    }
    None
}

/// Compare `reference` and `candidate` on `trials` random inputs. Trials on
/// which the reference itself faults are discarded. Disagreement witnesses
/// are shrunk before being returned.
pub fn differential(reference: &Program, candidate: &Program, trials: usize, constraints: &InputConstraints) -> Verdict {
    let mut run = 0;
    for t in 0..trials {
        // Grow scalar inputs over the run so early witnesses are small.
        let cap = 1 + (t as i64 * SCALAR_MAX) / trials.max(1) as i64;
        let Some((tape, r)) = sample_input(reference, constraints, t as u64, cap.min(SCALAR_MAX)) else {
            continue;
        };
        if r.status != Status::Ok {
            continue;
        }
        run += 1;
        // The candidate sees the same values, extended with fresh draws if it
        // reads more than the reference did.
        let mut src = RandomInput::new(t as u64 ^ 0x9e37, constraints, SCALAR_MAX);
        src.tape = tape.clone();
        src.rewind();
        let c = interpret_with(candidate, &mut src, TRIAL_BUDGET);
        if disagrees(&r, &c) {
            let witness: Vec<i64> = src.tape.iter().map(|e| e.value).collect();
            let kinds: Vec<TapeKind> = src.tape.iter().map(|e| e.kind).collect();
            return shrink(reference, candidate, constraints, witness, &kinds, &src.tape);
        }
    }
    Verdict::Agree { trials_run: run }
}

/// Greedily move element values towards zero while the programs still
/// disagree and the reference still runs cleanly.
fn shrink(
    reference: &Program,
    candidate: &Program,
    constraints: &InputConstraints,
    mut witness: Vec<i64>,
    kinds: &[TapeKind],
    tape: &[TapeEntry],
) -> Verdict {
    let check = |w: &[i64]| -> Option<(ExecutionResult, ExecutionResult)> {
        let bound: Vec<TapeEntry> = tape
            .iter()
            .zip(w)
            .map(|(e, v)| TapeEntry { value: *v, ..e.clone() })
            .collect();
        if !satisfies(constraints, &bound) {
            return None;
        }
        let r = run_tape(reference, w);
        if r.status != Status::Ok {
            return None;
        }
        let c = run_tape(candidate, w);
        disagrees(&r, &c).then_some((r, c))
    };
    let (mut best_r, mut best_c) = match check(&witness) {
        Some(rc) => rc,
        None => {
            let r = run_tape(reference, &witness);
            let c = run_tape(candidate, &witness);
            return Verdict::Disagree { witness, reference: r, candidate: c };
        }
    };
    let mut changed = true;
    while changed {
        changed = false;
        for k in 0..witness.len() {
            if kinds[k] != TapeKind::Element || witness[k] == 0 {
                continue;
            }
            let orig = witness[k];
            for v in [0, orig / 2, orig - orig.signum()] {
                if v == orig {
                    continue;
                }
                witness[k] = v;
                if let Some((r, c)) = check(&witness) {
                    best_r = r;
                    best_c = c;
                    changed = true;
                    break;
                }
                witness[k] = orig;
            }
        }
    }
    Verdict::Disagree { witness, reference: best_r, candidate: best_c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    #[test]
    fn program_agrees_with_itself() {
        let p = parse(include_str!("../../tests/fixtures/fig2.c")).unwrap();
        let v = differential(&p, &p, 50, &InputConstraints::default());
        assert!(matches!(v, Verdict::Agree { trials_run } if trials_run == 50));
    }

    #[test]
    fn witness_is_replayable() {
        let a = parse("int main(){int n; scanf(\"%d\", &n); printf(\"%d\", n * 2); return 0;}").unwrap();
        let b = parse("int main(){int n; scanf(\"%d\", &n); printf(\"%d\", n + 2); return 0;}").unwrap();
        let Verdict::Disagree { witness, .. } = differential(&a, &b, 50, &InputConstraints::default()) else {
            panic!("n*2 and n+2 differ for n != 2");
        };
        assert_ne!(run_tape(&a, &witness).outputs, run_tape(&b, &witness).outputs);
    }

    #[test]
    fn constraints_narrow_scalars() {
        let c = InputConstraints::parse("n == 4").unwrap();
        let p = parse("int main(){int n; scanf(\"%d\", &n); printf(\"%d\", n); return 0;}").unwrap();
        for seed in 0..10 {
            let (tape, r) = sample_input(&p, &c, seed, 6).unwrap();
            assert_eq!(tape[0].value, 4);
            assert_eq!(r.outputs, vec![4]);
        }
    }
}

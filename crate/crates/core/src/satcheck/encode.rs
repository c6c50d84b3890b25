//! Unrolling of box/diamond formulas into clauses over a fixed number of time steps.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::ToPrimitive;

use super::solver::{Lit, Var};
use super::{DiscretizationConfig, SatError};
use crate::logic::{Atom, Comparator, Formula, FragmentClass};
use crate::rational::{format_rational, Rational};

/// Lower-bound predicate `channel > bound` (strict) or `channel >= bound`.
///
/// Every comparator normalizes to one of these or its negation, and a proposition
/// is the non-strict predicate at 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LowerBound {
    pub bound: Rational,
    pub strict: bool,
}

impl LowerBound {
    pub fn proposition() -> Self {
        Self {
            bound: Rational::new(1, 2),
            strict: false,
        }
    }

    /// Normalizes an atom to `(predicate, polarity)`.
    pub fn of(atom: &Atom) -> (Self, bool) {
        match atom {
            Atom::Threshold {
                comparator, bound, ..
            } => match comparator {
                Comparator::Gt => (
                    Self {
                        bound: *bound,
                        strict: true,
                    },
                    true,
                ),
                Comparator::Ge => (
                    Self {
                        bound: *bound,
                        strict: false,
                    },
                    true,
                ),
                Comparator::Lt => (
                    Self {
                        bound: *bound,
                        strict: false,
                    },
                    false,
                ),
                Comparator::Le => (
                    Self {
                        bound: *bound,
                        strict: true,
                    },
                    false,
                ),
            },
            Atom::Proposition(_) => (Self::proposition(), true),
        }
    }
}

/// Propositional encoding of a formula unrolled over `steps` discrete time steps.
#[derive(Debug, Clone)]
pub struct UnrolledEncoding {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    /// Literal asserted true (also present as a unit clause).
    pub root: Lit,
    pub steps: usize,
    pub delta: Rational,
    /// Atom-at-step variables, keyed by channel then predicate then step.
    pub atoms: BTreeMap<String, BTreeMap<LowerBound, BTreeMap<usize, Var>>>,
    /// Channels that occur only as 0/1 propositions.
    pub proposition_channels: BTreeSet<String>,
    pub auxiliary_vars: usize,
}

struct Unroller<'a> {
    cfg: &'a DiscretizationConfig,
    next_var: u32,
    clauses: Vec<Vec<Lit>>,
    atoms: BTreeMap<String, BTreeMap<LowerBound, BTreeMap<usize, Var>>>,
    memo: HashMap<(*const Formula, usize), Lit>,
    constant: Option<Var>,
    auxiliary_vars: usize,
}

pub fn unroll(formula: &Formula, cfg: &DiscretizationConfig) -> Result<UnrolledEncoding, SatError> {
    if formula.fragment_class() != FragmentClass::BoxDiamond {
        return Err(SatError::Fragment);
    }
    cfg.validate(formula)?;
    let steps = cfg.steps();

    let mut unroller = Unroller {
        cfg,
        next_var: 0,
        clauses: Vec::new(),
        atoms: BTreeMap::new(),
        memo: HashMap::new(),
        constant: None,
        auxiliary_vars: 0,
    };

    // Atom variables first, ordered by step, so the solver branches on signal values
    // before auxiliary definitions.
    let mut needed: BTreeSet<(usize, String, LowerBound)> = BTreeSet::new();
    collect_atom_steps(formula, 0, cfg, &mut needed);
    for (step, channel, predicate) in needed {
        let var = Var(unroller.next_var);
        unroller.next_var += 1;
        unroller
            .atoms
            .entry(channel)
            .or_default()
            .entry(predicate)
            .or_default()
            .insert(step, var);
    }
    unroller.add_ladder_clauses();

    let root = unroller.encode(formula, 0);
    unroller.clauses.push(vec![root]);

    let mut proposition_channels = BTreeSet::new();
    let mut threshold_channels = BTreeSet::new();
    formula.walk(&mut |_, node| match node {
        Formula::Atom(Atom::Proposition(channel)) => {
            proposition_channels.insert(channel.clone());
        }
        Formula::Atom(Atom::Threshold { channel, .. }) => {
            threshold_channels.insert(channel.clone());
        }
        _ => {}
    });
    proposition_channels.retain(|c| !threshold_channels.contains(c));

    Ok(UnrolledEncoding {
        num_vars: unroller.next_var as usize,
        clauses: unroller.clauses,
        root,
        steps,
        delta: cfg.delta,
        atoms: unroller.atoms,
        proposition_channels,
        auxiliary_vars: unroller.auxiliary_vars,
    })
}

fn step_offset(value: Rational, delta: Rational) -> usize {
    (value / delta)
        .to_integer()
        .to_usize()
        .expect("offsets are non-negative")
}

/// Step range `[k + lower/delta, k + upper/delta]` of a temporal window.
fn window(
    cfg: &DiscretizationConfig,
    step: usize,
    lower: Rational,
    upper: Rational,
) -> std::ops::RangeInclusive<usize> {
    (step + step_offset(lower, cfg.delta))..=(step + step_offset(upper, cfg.delta))
}

fn collect_atom_steps(
    formula: &Formula,
    step: usize,
    cfg: &DiscretizationConfig,
    needed: &mut BTreeSet<(usize, String, LowerBound)>,
) {
    // Memoize on (node, step) to keep the walk linear in the unrolled size.
    fn go(
        formula: &Formula,
        step: usize,
        cfg: &DiscretizationConfig,
        needed: &mut BTreeSet<(usize, String, LowerBound)>,
        visited: &mut std::collections::HashSet<(*const Formula, usize)>,
    ) {
        if !visited.insert((formula as *const Formula, step)) {
            return;
        }
        match formula {
            Formula::True | Formula::False => {}
            Formula::Atom(atom) => {
                needed.insert((step, atom.channel().to_string(), LowerBound::of(atom).0));
            }
            Formula::Not(inner) => go(inner, step, cfg, needed, visited),
            Formula::And(children) | Formula::Or(children) => {
                for child in children {
                    go(child, step, cfg, needed, visited);
                }
            }
            Formula::Implies(left, right) => {
                go(left, step, cfg, needed, visited);
                go(right, step, cfg, needed, visited);
            }
            Formula::Always(interval, inner) | Formula::Eventually(interval, inner) => {
                for k in window(cfg, step, interval.lower(), interval.upper()) {
                    go(inner, k, cfg, needed, visited);
                }
            }
            Formula::Until(..) => unreachable!("fragment checked"),
        }
    }
    go(
        formula,
        step,
        cfg,
        needed,
        &mut std::collections::HashSet::new(),
    );
}

impl Unroller<'_> {
    fn fresh(&mut self) -> Var {
        let var = Var(self.next_var);
        self.next_var += 1;
        self.auxiliary_vars += 1;
        var
    }

    /// `stronger -> weaker` between neighbouring predicates of a channel at each step.
    fn add_ladder_clauses(&mut self) {
        let mut ladder = Vec::new();
        for predicates in self.atoms.values() {
            let mut per_step: BTreeMap<usize, Vec<Var>> = BTreeMap::new();
            // BTreeMap order on LowerBound is (bound, strict): weakest first.
            for steps in predicates.values() {
                for (&step, &var) in steps {
                    per_step.entry(step).or_default().push(var);
                }
            }
            for vars in per_step.values() {
                for pair in vars.windows(2) {
                    ladder.push(vec![Lit::negative(pair[1]), Lit::positive(pair[0])]);
                }
            }
        }
        self.clauses.extend(ladder);
    }

    fn constant_true(&mut self) -> Lit {
        let var = match self.constant {
            Some(var) => var,
            None => {
                let var = self.fresh();
                self.clauses.push(vec![Lit::positive(var)]);
                self.constant = Some(var);
                var
            }
        };
        Lit::positive(var)
    }

    /// `out <-> and(inputs)`.
    fn define_and(&mut self, inputs: Vec<Lit>) -> Lit {
        let out = Lit::positive(self.fresh());
        let mut long = vec![out];
        for &input in &inputs {
            self.clauses.push(vec![!out, input]);
            long.push(!input);
        }
        self.clauses.push(long);
        out
    }

    /// `out <-> or(inputs)`.
    fn define_or(&mut self, inputs: Vec<Lit>) -> Lit {
        let out = Lit::positive(self.fresh());
        let mut long = vec![!out];
        for &input in &inputs {
            self.clauses.push(vec![out, !input]);
            long.push(input);
        }
        self.clauses.push(long);
        out
    }

    fn encode(&mut self, formula: &Formula, step: usize) -> Lit {
        let key = (formula as *const Formula, step);
        if let Some(&lit) = self.memo.get(&key) {
            return lit;
        }
        let lit = match formula {
            Formula::True => self.constant_true(),
            Formula::False => !self.constant_true(),
            Formula::Atom(atom) => {
                let (predicate, polarity) = LowerBound::of(atom);
                let var = self.atoms[atom.channel()][&predicate][&step];
                Lit::new(var, polarity)
            }
            Formula::Not(inner) => !self.encode(inner, step),
            Formula::And(children) => {
                let inputs = children.iter().map(|c| self.encode(c, step)).collect();
                self.define_and(inputs)
            }
            Formula::Or(children) => {
                let inputs = children.iter().map(|c| self.encode(c, step)).collect();
                self.define_or(inputs)
            }
            Formula::Implies(left, right) => {
                let inputs = vec![!self.encode(left, step), self.encode(right, step)];
                self.define_or(inputs)
            }
            Formula::Always(interval, inner) => {
                let inputs = window(self.cfg, step, interval.lower(), interval.upper())
                    .map(|k| self.encode(inner, k))
                    .collect();
                self.define_and(inputs)
            }
            Formula::Eventually(interval, inner) => {
                let inputs = window(self.cfg, step, interval.lower(), interval.upper())
                    .map(|k| self.encode(inner, k))
                    .collect();
                self.define_or(inputs)
            }
            Formula::Until(..) => unreachable!("fragment checked"),
        };
        self.memo.insert(key, lit);
        lit
    }
}

impl std::fmt::Display for LowerBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}",
            if self.strict { ">" } else { ">=" },
            format_rational(self.bound)
        )
    }
}

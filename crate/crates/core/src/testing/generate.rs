use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::logic::{Atom, Comparator, Formula, TimeInterval};
use crate::rational::{to_f64, Rational};
use crate::trace::Trace;

/// Knobs for the structural formula fuzzer.
#[derive(Debug, Clone)]
pub struct FormulaShape {
    pub max_depth: usize,
    /// Real-valued channels with their pool of atoms; formulas only use atoms from the pool.
    pub threshold_atoms: Vec<Atom>,
    pub propositions: Vec<String>,
    pub allow_until: bool,
    /// Upper bound on the formula horizon, in time units.
    pub max_horizon: i64,
    /// Endpoints are multiples of this step.
    pub endpoint_step: Rational,
    pub allow_constants: bool,
}

impl FormulaShape {
    /// Box/diamond formulas over at most two channels with at most two atoms each.
    pub fn small_box_diamond(rng: &mut impl Rng, max_horizon: i64) -> Self {
        let channel_count = rng.gen_range(1..=2);
        let mut threshold_atoms = Vec::new();
        let mut propositions = Vec::new();
        for (index, name) in ["x", "y"].iter().take(channel_count).enumerate() {
            if index == 1 && rng.gen_bool(0.4) {
                propositions.push("p".to_string());
                continue;
            }
            for _ in 0..rng.gen_range(1..=2) {
                threshold_atoms.push(random_atom(rng, name));
            }
        }
        Self {
            max_depth: rng.gen_range(1..=4),
            threshold_atoms,
            propositions,
            allow_until: false,
            max_horizon,
            endpoint_step: Rational::from_integer(1),
            allow_constants: true,
        }
    }

    /// Wide shape for syntax and monitor fuzzing: Until, fractional endpoints, mixed atoms.
    pub fn full(rng: &mut impl Rng) -> Self {
        let mut threshold_atoms = Vec::new();
        for name in ["x", "speed", "y_2"] {
            for _ in 0..3 {
                threshold_atoms.push(random_atom(rng, name));
            }
        }
        Self {
            max_depth: rng.gen_range(1..=5),
            threshold_atoms,
            propositions: vec!["req".into(), "ack".into()],
            allow_until: true,
            max_horizon: 12,
            endpoint_step: Rational::new(1, 2),
            allow_constants: true,
        }
    }
}

fn random_atom(rng: &mut impl Rng, channel: &str) -> Atom {
    let comparator = *[
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
    ]
    .choose(rng)
    .unwrap();
    let bound = Rational::new(rng.gen_range(-20..=20), *[1, 2, 4].choose(rng).unwrap());
    Atom::threshold(channel, comparator, bound)
}

pub fn random_formula(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    let budget = Rational::from_integer(shape.max_horizon);
    node(rng, shape, shape.max_depth, budget)
}

fn leaf(rng: &mut impl Rng, shape: &FormulaShape) -> Formula {
    if shape.allow_constants && rng.gen_bool(0.05) {
        return if rng.gen() {
            Formula::True
        } else {
            Formula::False
        };
    }
    let props = shape.propositions.len();
    let total = shape.threshold_atoms.len() + props;
    let pick = rng.gen_range(0..total);
    if pick < props {
        Formula::prop(shape.propositions[pick].clone())
    } else {
        Formula::Atom(shape.threshold_atoms[pick - props].clone())
    }
}

fn interval(rng: &mut impl Rng, shape: &FormulaShape, budget: Rational) -> Option<TimeInterval> {
    let slots = (budget / shape.endpoint_step).to_integer();
    if slots < 0 {
        return None;
    }
    let upper = rng.gen_range(0..=slots.min(6));
    let lower = rng.gen_range(0..=upper);
    let step = shape.endpoint_step;
    TimeInterval::new(
        step * Rational::from_integer(lower),
        step * Rational::from_integer(upper),
    )
    .ok()
}

fn node(rng: &mut impl Rng, shape: &FormulaShape, depth: usize, budget: Rational) -> Formula {
    if depth <= 1 {
        return leaf(rng, shape);
    }
    let choices = if shape.allow_until { 8 } else { 7 };
    match rng.gen_range(0..choices) {
        0 => leaf(rng, shape),
        1 => Formula::not(node(rng, shape, depth - 1, budget)),
        2 => {
            let n = rng.gen_range(2..=3);
            Formula::And(
                (0..n)
                    .map(|_| node(rng, shape, depth - 1, budget))
                    .collect(),
            )
        }
        3 => {
            let n = rng.gen_range(2..=3);
            Formula::Or(
                (0..n)
                    .map(|_| node(rng, shape, depth - 1, budget))
                    .collect(),
            )
        }
        4 => Formula::implies(
            node(rng, shape, depth - 1, budget),
            node(rng, shape, depth - 1, budget),
        ),
        kind => match interval(rng, shape, budget) {
            None => leaf(rng, shape),
            Some(iv) => {
                let rest = budget - iv.upper();
                match kind {
                    5 => Formula::always(iv, node(rng, shape, depth - 1, rest)),
                    6 => Formula::eventually(iv, node(rng, shape, depth - 1, rest)),
                    _ => Formula::until(
                        iv,
                        node(rng, shape, depth - 1, rest),
                        node(rng, shape, depth - 1, rest),
                    ),
                }
            }
        },
    }
}

/// Random trace of `len` samples with spacing `period` covering every channel of `formula`.
///
/// Threshold channels mostly sample near the formula's bounds (including exact hits);
/// proposition channels are 0/1.
pub fn random_trace(rng: &mut impl Rng, formula: &Formula, len: usize, period: Rational) -> Trace {
    let mut bounds: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut props: Vec<String> = Vec::new();
    formula.walk(&mut |_, node| match node {
        Formula::Atom(Atom::Threshold { channel, bound, .. }) => {
            bounds
                .entry(channel.clone())
                .or_default()
                .push(to_f64(*bound));
        }
        Formula::Atom(Atom::Proposition(channel)) => props.push(channel.clone()),
        _ => {}
    });
    let mut channels = BTreeMap::new();
    for (channel, pool) in bounds {
        let values = (0..len)
            .map(|_| {
                let base = *pool.choose(rng).unwrap();
                match rng.gen_range(0..4) {
                    0 => base,
                    1 => base + rng.gen_range(-1.0..1.0),
                    _ => base + rng.gen_range(-6.0..6.0),
                }
            })
            .collect();
        channels.insert(channel, values);
    }
    for channel in props {
        channels.entry(channel).or_insert_with(|| {
            (0..len)
                .map(|_| f64::from(rng.gen_range(0..=1u8)))
                .collect()
        });
    }
    Trace::sampled(period, len, channels).expect("generated trace is valid")
}

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Atom, Comparator, Formula};
use crate::monitor::ROBUSTNESS_TOP;
use crate::rational::{to_f64, Rational};
use crate::trace::Trace;

fn samples_in(trace: &Trace, from: Rational, to: Rational) -> Vec<usize> {
    (0..trace.len())
        .filter(|&j| trace.times()[j] >= from && trace.times()[j] <= to)
        .collect()
}

/// Textbook recursive robustness with no sharing or caching. `None` when some
/// temporal window is empty.
pub fn naive_robustness(formula: &Formula, trace: &Trace, index: usize) -> Option<f64> {
    let t = trace.times()[index];
    Some(match formula {
        Formula::True => ROBUSTNESS_TOP,
        Formula::False => -ROBUSTNESS_TOP,
        Formula::Atom(atom) => {
            let value = trace.channel(atom.channel())?[index];
            match atom {
                Atom::Threshold {
                    comparator, bound, ..
                } => match comparator {
                    Comparator::Gt | Comparator::Ge => value - to_f64(*bound),
                    Comparator::Lt | Comparator::Le => to_f64(*bound) - value,
                },
                Atom::Proposition(_) => value - 0.5,
            }
        }
        Formula::Not(inner) => -naive_robustness(inner, trace, index)?,
        Formula::And(children) => {
            let mut acc = f64::INFINITY;
            for child in children {
                acc = acc.min(naive_robustness(child, trace, index)?);
            }
            acc
        }
        Formula::Or(children) => {
            let mut acc = f64::NEG_INFINITY;
            for child in children {
                acc = acc.max(naive_robustness(child, trace, index)?);
            }
            acc
        }
        Formula::Implies(left, right) => {
            (-naive_robustness(left, trace, index)?).max(naive_robustness(right, trace, index)?)
        }
        Formula::Always(interval, inner) => {
            let window = samples_in(trace, t + interval.lower(), t + interval.upper());
            if window.is_empty() {
                return None;
            }
            let mut acc = f64::INFINITY;
            for j in window {
                acc = acc.min(naive_robustness(inner, trace, j)?);
            }
            acc
        }
        Formula::Eventually(interval, inner) => {
            let window = samples_in(trace, t + interval.lower(), t + interval.upper());
            if window.is_empty() {
                return None;
            }
            let mut acc = f64::NEG_INFINITY;
            for j in window {
                acc = acc.max(naive_robustness(inner, trace, j)?);
            }
            acc
        }
        Formula::Until(interval, left, right) => {
            let window = samples_in(trace, t + interval.lower(), t + interval.upper());
            if window.is_empty() {
                return None;
            }
            let mut best = f64::NEG_INFINITY;
            for j in window {
                let mut value = naive_robustness(right, trace, j)?;
                for k in (0..trace.len())
                    .filter(|&k| trace.times()[k] >= t && trace.times()[k] < trace.times()[j])
                {
                    value = value.min(naive_robustness(left, trace, k)?);
                }
                best = best.max(value);
            }
            best
        }
    })
}

/// Textbook recursive Boolean satisfaction; `None` when some temporal window is empty.
pub fn naive_bool(formula: &Formula, trace: &Trace, index: usize) -> Option<bool> {
    let t = trace.times()[index];
    Some(match formula {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(atom) => {
            let value = trace.channel(atom.channel())?[index];
            match atom {
                Atom::Threshold {
                    comparator, bound, ..
                } => {
                    let bound = to_f64(*bound);
                    match comparator {
                        Comparator::Gt => value > bound,
                        Comparator::Ge => value >= bound,
                        Comparator::Lt => value < bound,
                        Comparator::Le => value <= bound,
                    }
                }
                Atom::Proposition(_) => value >= 0.5,
            }
        }
        Formula::Not(inner) => !naive_bool(inner, trace, index)?,
        Formula::And(children) => {
            let mut all = true;
            for child in children {
                all &= naive_bool(child, trace, index)?;
            }
            all
        }
        Formula::Or(children) => {
            let mut any = false;
            for child in children {
                any |= naive_bool(child, trace, index)?;
            }
            any
        }
        Formula::Implies(left, right) => {
            !naive_bool(left, trace, index)? || naive_bool(right, trace, index)?
        }
        Formula::Always(interval, inner) | Formula::Eventually(interval, inner) => {
            let window = samples_in(trace, t + interval.lower(), t + interval.upper());
            if window.is_empty() {
                return None;
            }
            let mut values = Vec::new();
            for j in window {
                values.push(naive_bool(inner, trace, j)?);
            }
            if matches!(formula, Formula::Always(..)) {
                values.into_iter().all(|v| v)
            } else {
                values.into_iter().any(|v| v)
            }
        }
        Formula::Until(interval, left, right) => {
            let window = samples_in(trace, t + interval.lower(), t + interval.upper());
            if window.is_empty() {
                return None;
            }
            let mut found = false;
            for j in window {
                let mut ok = naive_bool(right, trace, j)?;
                for k in (0..trace.len())
                    .filter(|&k| trace.times()[k] >= t && trace.times()[k] < trace.times()[j])
                {
                    ok &= naive_bool(left, trace, k)?;
                }
                found |= ok;
            }
            found
        }
    })
}

/// Enumeration was skipped because the assignment space exceeds the limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimit {
    pub size: u128,
}

/// Decides discrete satisfiability at step 0 by enumerating every ladder-consistent
/// valuation of the (channel, step) slots the formula reads.
///
/// Each channel's thresholds split the reals into regions; one representative per
/// region is tried at every slot, and each candidate trace is checked with
/// [`naive_bool`].
pub fn enumerate_satisfiable(
    formula: &Formula,
    delta: Rational,
    steps: usize,
    limit: u128,
) -> Result<bool, EnumerationLimit> {
    // channel -> sorted thresholds (value, strict) as lower-bound predicates.
    let mut thresholds: BTreeMap<String, BTreeSet<(Rational, bool)>> = BTreeMap::new();
    let mut propositions: BTreeSet<String> = BTreeSet::new();
    formula.walk(&mut |_, node| match node {
        Formula::Atom(Atom::Threshold {
            channel,
            comparator,
            bound,
        }) => {
            let strict = matches!(comparator, Comparator::Gt | Comparator::Le);
            thresholds
                .entry(channel.clone())
                .or_default()
                .insert((*bound, strict));
        }
        Formula::Atom(Atom::Proposition(channel)) => {
            propositions.insert(channel.clone());
        }
        _ => {}
    });
    for channel in &propositions {
        if let Some(set) = thresholds.get_mut(channel) {
            set.insert((Rational::new(1, 2), false));
        }
    }

    let mut representatives: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (channel, set) in &thresholds {
        let ladder: Vec<(Rational, bool)> = set.iter().copied().collect();
        let mut values = vec![to_f64(ladder[0].0) - 2.0];
        for pair in ladder.windows(2) {
            let (low, high) = (pair[0].0, pair[1].0);
            values.push(if low == high {
                to_f64(low)
            } else {
                to_f64(low + (high - low) / Rational::from_integer(4))
            });
        }
        values.push(to_f64(ladder[ladder.len() - 1].0) + 2.0);
        representatives.insert(channel.clone(), values);
    }
    for channel in &propositions {
        representatives
            .entry(channel.clone())
            .or_insert_with(|| vec![0.0, 1.0]);
    }

    let mut slots: BTreeSet<(String, usize)> = BTreeSet::new();
    read_slots(formula, 0, delta, &mut slots);
    let slots: Vec<(String, usize)> = slots.into_iter().collect();
    let radices: Vec<usize> = slots
        .iter()
        .map(|(c, _)| representatives[c].len())
        .collect();
    let size = radices
        .iter()
        .fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
    if size > limit {
        return Err(EnumerationLimit { size });
    }

    let mut channels: BTreeMap<String, Vec<f64>> = representatives
        .iter()
        .map(|(c, values)| (c.clone(), vec![values[0]; steps]))
        .collect();
    let mut digits = vec![0usize; slots.len()];
    loop {
        for ((channel, step), &digit) in slots.iter().zip(&digits) {
            channels.get_mut(channel).unwrap()[*step] = representatives[channel][digit];
        }
        let trace = Trace::sampled(delta, steps, channels.clone()).expect("valid trace");
        if naive_bool(formula, &trace, 0) == Some(true) {
            return Ok(true);
        }
        // Odometer increment.
        let mut position = 0;
        loop {
            if position == digits.len() {
                return Ok(false);
            }
            digits[position] += 1;
            if digits[position] < radices[position] {
                break;
            }
            digits[position] = 0;
            position += 1;
        }
    }
}

fn read_slots(
    formula: &Formula,
    step: usize,
    delta: Rational,
    slots: &mut BTreeSet<(String, usize)>,
) {
    let offset = |r: Rational| (r / delta).to_integer() as usize;
    match formula {
        Formula::True | Formula::False => {}
        Formula::Atom(atom) => {
            slots.insert((atom.channel().to_string(), step));
        }
        Formula::Always(interval, inner) | Formula::Eventually(interval, inner) => {
            for k in step + offset(interval.lower())..=step + offset(interval.upper()) {
                read_slots(inner, k, delta, slots);
            }
        }
        Formula::Until(interval, left, right) => {
            for k in step..=step + offset(interval.upper()) {
                read_slots(left, k, delta, slots);
                read_slots(right, k, delta, slots);
            }
        }
        _ => {
            for child in formula.children() {
                read_slots(child, step, delta, slots);
            }
        }
    }
}

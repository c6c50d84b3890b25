use std::collections::BTreeMap;

use num_traits::One;

use super::encode::{LowerBound, UnrolledEncoding};
use super::SatError;
use crate::rational::{to_f64, Rational};
use crate::trace::Trace;

/// Rebuilds a sampled signal from a satisfying assignment.
///
/// Each threshold channel takes, at every step, a representative of the interval of
/// reals consistent with that step's predicate literals: the midpoint when bounded on
/// both sides, the tightest threshold plus or minus one when unbounded on one side.
/// Proposition-only channels emit 1.0/0.0.
pub fn witness_to_trace(encoding: &UnrolledEncoding, model: &[bool]) -> Result<Trace, SatError> {
    let mut channels = BTreeMap::new();
    for (channel, predicates) in &encoding.atoms {
        let proposition = encoding.proposition_channels.contains(channel);
        let lowest = *predicates
            .keys()
            .next()
            .expect("channels have at least one predicate");
        let mut samples = Vec::with_capacity(encoding.steps);
        for step in 0..encoding.steps {
            let literals: Vec<(LowerBound, bool)> = predicates
                .iter()
                .filter_map(|(predicate, steps)| {
                    steps
                        .get(&step)
                        .map(|var| (*predicate, model[var.0 as usize]))
                })
                .collect();
            let holding = literals.iter().take_while(|(_, value)| *value).count();
            if literals[holding..].iter().any(|(_, value)| *value) {
                return Err(SatError::LadderViolation(channel.clone()));
            }
            let value = if proposition {
                if holding > 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                representative(&literals, holding, lowest)
            };
            samples.push(value);
        }
        channels.insert(channel.clone(), samples);
    }
    let trace = Trace::sampled(encoding.delta, encoding.steps, channels)
        .expect("uniform witness is a valid trace");
    Ok(trace)
}

fn representative(literals: &[(LowerBound, bool)], holding: usize, lowest: LowerBound) -> f64 {
    if literals.is_empty() || holding == 0 {
        let floor = literals.first().map_or(lowest, |(p, _)| *p);
        return to_f64(floor.bound - Rational::one());
    }
    if holding == literals.len() {
        return to_f64(literals[holding - 1].0.bound + Rational::one());
    }
    let lower = literals[holding - 1].0;
    let upper = literals[holding].0;
    if lower.bound == upper.bound {
        // x >= c holds and x > c fails.
        to_f64(lower.bound)
    } else {
        to_f64((lower.bound + upper.bound) / Rational::from_integer(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;
    use crate::satcheck::{unroll, DiscretizationConfig};

    fn encoding(text: &str) -> UnrolledEncoding {
        let f = parse(text).unwrap();
        unroll(&f, &DiscretizationConfig::for_formula(&f)).unwrap()
    }

    fn set(enc: &UnrolledEncoding, channel: &str, bound: i64, value: bool, model: &mut [bool]) {
        let predicate = LowerBound {
            bound: Rational::from_integer(bound),
            strict: true,
        };
        let var = enc.atoms[channel][&predicate][&0];
        model[var.0 as usize] = value;
    }

    #[test]
    fn midpoint_rule() {
        let enc = encoding("(v > 100) or (v > 50)");
        let mut model = vec![false; enc.num_vars];
        set(&enc, "v", 100, true, &mut model);
        set(&enc, "v", 50, true, &mut model);
        assert_eq!(
            witness_to_trace(&enc, &model)
                .unwrap()
                .channel("v")
                .unwrap(),
            &[101.0]
        );

        set(&enc, "v", 100, false, &mut model);
        assert_eq!(
            witness_to_trace(&enc, &model)
                .unwrap()
                .channel("v")
                .unwrap(),
            &[75.0]
        );

        set(&enc, "v", 50, false, &mut model);
        assert_eq!(
            witness_to_trace(&enc, &model)
                .unwrap()
                .channel("v")
                .unwrap(),
            &[49.0]
        );

        set(&enc, "v", 100, true, &mut model);
        assert!(matches!(
            witness_to_trace(&enc, &model),
            Err(SatError::LadderViolation(_))
        ));
    }

    #[test]
    fn exact_point_region() {
        let enc = encoding("(v >= 3) and !(v > 3)");
        let mut model = vec![false; enc.num_vars];
        let ge = enc.atoms["v"][&LowerBound {
            bound: Rational::from_integer(3),
            strict: false,
        }][&0];
        model[ge.0 as usize] = true;
        assert_eq!(
            witness_to_trace(&enc, &model)
                .unwrap()
                .channel("v")
                .unwrap(),
            &[3.0]
        );
    }

    #[test]
    fn propositions_are_zero_one() {
        let enc = encoding("req");
        assert_eq!(
            witness_to_trace(&enc, &[true])
                .unwrap()
                .channel("req")
                .unwrap(),
            &[1.0]
        );
        assert_eq!(
            witness_to_trace(&enc, &[false])
                .unwrap()
                .channel("req")
                .unwrap(),
            &[0.0]
        );
    }
}

//! Bounded discrete-time satisfiability for the box/diamond fragment.
//!
//! A formula is unrolled over `horizon / delta + 1` sample steps, interval endpoints
//! are mapped to step offsets (closed bounds), and the resulting clause set is decided
//! by the built-in solver. Satisfiability is judged at step 0. This is an
//! approximation of dense-time MITL satisfiability at resolution `delta`.

mod encode;
mod solver;
mod witness;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::logic::{Formula, FragmentClass};
use crate::rational::{format_rational, gcd, is_multiple_of, Rational};
use crate::trace::Trace;

pub use encode::{unroll, LowerBound, UnrolledEncoding};
pub use solver::{solve as solve_clauses, Lit, Outcome, SolverOptions, SolverStats, Var};
pub use witness::witness_to_trace;

/// Upper limit on unrolled steps; finer resolutions are rejected instead of exhausting memory.
pub const MAX_STEPS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("formula contains Until, which the satisfiability engine does not support")]
    Fragment,
    #[error("time step must be positive")]
    NonPositiveDelta,
    #[error("horizon {horizon} is shorter than the formula horizon {needed}")]
    HorizonTooShort { horizon: String, needed: String },
    #[error("{what} {value} is not a multiple of the time step {delta}")]
    NotDivisible {
        what: &'static str,
        value: String,
        delta: String,
    },
    #[error("unrolling would need {steps} steps (limit {limit})")]
    TooManySteps { steps: u64, limit: usize },
    #[error("assignment violates the threshold ordering of channel `{0}`")]
    LadderViolation(String),
}

/// Time resolution and total duration of the unrolling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscretizationConfig {
    pub delta: Rational,
    pub horizon: Rational,
}

impl DiscretizationConfig {
    /// Defaults: `delta = choose_delta(f)` and `horizon = horizon(f)`.
    pub fn for_formula(formula: &Formula) -> Self {
        Self {
            delta: choose_delta(formula),
            horizon: formula.horizon(),
        }
    }

    pub fn with_delta(mut self, delta: Rational) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_horizon(mut self, horizon: Rational) -> Self {
        self.horizon = horizon;
        self
    }

    /// Number of sample steps, `horizon / delta + 1`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.delta).to_integer() as usize + 1
    }

    pub fn validate(&self, formula: &Formula) -> Result<(), SatError> {
        if self.delta <= Rational::zero() {
            return Err(SatError::NonPositiveDelta);
        }
        let needed = formula.horizon();
        if self.horizon < needed {
            return Err(SatError::HorizonTooShort {
                horizon: format_rational(self.horizon),
                needed: format_rational(needed),
            });
        }
        let not_divisible = |what, value: Rational| SatError::NotDivisible {
            what,
            value: format_rational(value),
            delta: format_rational(self.delta),
        };
        if !is_multiple_of(self.horizon, self.delta) {
            return Err(not_divisible("horizon", self.horizon));
        }
        if let Some(endpoint) = formula
            .interval_endpoints()
            .into_iter()
            .find(|e| !is_multiple_of(*e, self.delta))
        {
            return Err(not_divisible("interval endpoint", endpoint));
        }
        let steps = (self.horizon / self.delta).to_integer() as u64 + 1;
        if steps > MAX_STEPS as u64 {
            return Err(SatError::TooManySteps {
                steps,
                limit: MAX_STEPS,
            });
        }
        Ok(())
    }
}

/// Greatest common divisor of all interval endpoints; 1 when every endpoint is zero
/// or the formula has no temporal operator.
pub fn choose_delta(formula: &Formula) -> Rational {
    let delta = formula
        .interval_endpoints()
        .into_iter()
        .fold(Rational::zero(), gcd);
    if delta.is_zero() {
        Rational::one()
    } else {
        delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SatStatus {
    Satisfiable,
    Unsatisfiable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatResult {
    pub status: SatStatus,
    /// Present iff satisfiable.
    pub witness: Option<Trace>,
    pub stats: SolverStats,
}

/// Solves an unrolled encoding and reconstructs a witness when satisfiable.
pub fn solve(encoding: &UnrolledEncoding) -> Result<SatResult, SatError> {
    solve_with(encoding, SolverOptions::default())
}

pub fn solve_with(
    encoding: &UnrolledEncoding,
    options: SolverOptions,
) -> Result<SatResult, SatError> {
    let (outcome, stats) = solver::solve(encoding.num_vars, &encoding.clauses, options);
    Ok(match outcome {
        Outcome::Sat(model) => SatResult {
            status: SatStatus::Satisfiable,
            witness: Some(witness_to_trace(encoding, &model)?),
            stats,
        },
        Outcome::Unsat => SatResult {
            status: SatStatus::Unsatisfiable,
            witness: None,
            stats,
        },
    })
}

/// Unrolls and solves `formula` at step 0.
pub fn check(formula: &Formula, cfg: &DiscretizationConfig) -> Result<SatResult, SatError> {
    solve(&unroll(formula, cfg)?)
}

pub fn is_satisfiable(formula: &Formula, cfg: &DiscretizationConfig) -> Result<bool, SatError> {
    Ok(check(formula, cfg)?.status == SatStatus::Satisfiable)
}

/// A tautology is a formula whose dualized negation is unsatisfiable.
pub fn is_tautology(formula: &Formula, cfg: &DiscretizationConfig) -> Result<bool, SatError> {
    if formula.fragment_class() != FragmentClass::BoxDiamond {
        return Err(SatError::Fragment);
    }
    Ok(!is_satisfiable(&formula.negate(), cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;
    use crate::monitor::eval_bool;

    fn int(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn delta_is_gcd_of_endpoints() {
        assert_eq!(
            choose_delta(&parse("F[0,30]((v > 100) -> G[0,20](v > 100))").unwrap()),
            int(10)
        );
        assert_eq!(choose_delta(&parse("v > 100").unwrap()), int(1));
        assert_eq!(
            choose_delta(&parse("G[0,1/2] p and F[0,3/4] p").unwrap()),
            Rational::new(1, 4)
        );
        assert_eq!(choose_delta(&parse("G[0,0] p").unwrap()), int(1));
    }

    #[test]
    fn literals() {
        let cfg = DiscretizationConfig {
            delta: int(1),
            horizon: int(0),
        };
        assert!(!is_satisfiable(&Formula::False, &cfg).unwrap());
        assert!(is_satisfiable(&Formula::True, &cfg).unwrap());
        assert!(is_tautology(&Formula::True, &cfg).unwrap());
        assert!(!is_tautology(&Formula::False, &cfg).unwrap());
    }

    #[test]
    fn tautology_example() {
        let f = parse("F[0,30]((v > 100) -> G[0,20](v > 100))").unwrap();
        let cfg = DiscretizationConfig {
            delta: int(1),
            horizon: int(50),
        };
        assert!(is_tautology(&f, &cfg).unwrap());
        let result = check(&f.negate(), &cfg).unwrap();
        assert_eq!(result.status, SatStatus::Unsatisfiable);
        // Also at the default gcd resolution.
        assert!(is_tautology(&f, &DiscretizationConfig::for_formula(&f)).unwrap());
    }

    #[test]
    fn request_response_is_contingent() {
        let f = parse("G[0,5](req -> F[0,10]ack)").unwrap();
        let cfg = DiscretizationConfig {
            delta: int(1),
            horizon: int(15),
        };
        let result = check(&f, &cfg).unwrap();
        assert_eq!(result.status, SatStatus::Satisfiable);
        let witness = result.witness.unwrap();
        assert_eq!(witness.len(), 16);
        assert!(eval_bool(&f, &witness, int(0)).unwrap());
        assert!(!is_tautology(&f, &cfg).unwrap());
    }

    #[test]
    fn horizon_longer_than_needed() {
        let f = parse("F[0,2] p").unwrap();
        let cfg = DiscretizationConfig {
            delta: int(1),
            horizon: int(10),
        };
        let witness = check(&f, &cfg).unwrap().witness.unwrap();
        assert_eq!(witness.len(), 11);
        assert!(eval_bool(&f, &witness, int(0)).unwrap());
    }

    #[test]
    fn deterministic_results() {
        let f = parse("G[0,4](a -> F[1,3] (x > 2 and x <= 5)) and F[0,2] a").unwrap();
        let cfg = DiscretizationConfig::for_formula(&f);
        let first = check(&f, &cfg).unwrap();
        for _ in 0..3 {
            assert_eq!(check(&f, &cfg).unwrap(), first);
        }
    }

    #[test]
    fn rejects_too_fine_resolution() {
        let f = parse("G[0,1000] p").unwrap();
        let cfg = DiscretizationConfig {
            delta: Rational::new(1, 100),
            horizon: int(1000),
        };
        assert!(matches!(
            check(&f, &cfg),
            Err(SatError::TooManySteps { .. })
        ));
    }
}

//! Offline monitoring of sampled traces: Boolean satisfaction, quantitative
//! robustness and signal vacuity.
//!
//! Both semantics are pointwise over sample instants. Temporal windows select
//! samples by closed-interval membership; `G`/`F` windows are evaluated with a
//! monotone sliding-window extremum, so a whole operator costs `O(n)` over the
//! trace.

use std::collections::VecDeque;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::logic::{Atom, Comparator, Formula, Path};
use crate::rational::{format_rational, to_f64, Rational};
use crate::trace::Trace;

/// Robustness of `true`; `false` maps to its negation. Finite so that comparisons and
/// serialization stay total.
pub const ROBUSTNESS_TOP: f64 = f64::MAX;

/// Truth threshold for 0/1 proposition channels.
pub const PROPOSITION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("trace has no channel `{0}`")]
    MissingChannel(String),
    #[error("t0 = {0} is not a sample instant of the trace")]
    NotASample(String),
    #[error(
        "trace ends at {end} but the formula needs samples up to {needed} (missing {missing})"
    )]
    Inadequate {
        end: String,
        needed: String,
        missing: String,
    },
    #[error("no sample falls in the window of `{operator}` at time {time}")]
    EmptyWindow { operator: String, time: String },
}

/// Whether a trace is long enough to decide a formula at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adequacy {
    Ok,
    Inadequate { missing: Rational },
}

pub fn check_adequacy(formula: &Formula, trace: &Trace, t0: Rational) -> Adequacy {
    let needed = t0 + formula.horizon();
    let end = trace.end_time();
    if end >= needed {
        Adequacy::Ok
    } else {
        Adequacy::Inadequate {
            missing: needed - end,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VacuityVerdict {
    Vacuous,
    NonVacuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuityFlag {
    pub path: Path,
    pub antecedent: Formula,
    pub verdict: VacuityVerdict,
}

/// Quantitative robustness of `formula` over `trace` at `t0`.
pub fn robustness(formula: &Formula, trace: &Trace, t0: Rational) -> Result<f64, MonitorError> {
    evaluate::<f64>(formula, trace, t0, true)
}

/// Boolean satisfaction of `formula` over `trace` at `t0`.
pub fn eval_bool(formula: &Formula, trace: &Trace, t0: Rational) -> Result<bool, MonitorError> {
    evaluate::<bool>(formula, trace, t0, true)
}

/// Checks every implication of `formula` for antecedent failure on `trace`: an
/// occurrence is vacuous when the trace satisfies `G[0,H] !antecedent`.
pub fn signal_vacuity(formula: &Formula, trace: &Trace) -> Result<Vec<VacuityFlag>, MonitorError> {
    require_adequate(formula, trace, Rational::zero())?;
    formula
        .implication_occurrences()
        .into_iter()
        .map(|(path, antecedent)| {
            let mutation = formula
                .antecedent_failure_mutation(&path)
                .expect("path addresses an implication");
            // The mutation may look further ahead than the formula itself when the antecedent
            // is temporal; windows are truncated at the end of the trace in that case.
            let vacuous = evaluate::<bool>(&mutation, trace, Rational::zero(), false)?;
            let verdict = if vacuous {
                VacuityVerdict::Vacuous
            } else {
                VacuityVerdict::NonVacuous
            };
            Ok(VacuityFlag {
                path,
                antecedent,
                verdict,
            })
        })
        .collect()
}

fn require_adequate(formula: &Formula, trace: &Trace, t0: Rational) -> Result<(), MonitorError> {
    match check_adequacy(formula, trace, t0) {
        Adequacy::Ok => Ok(()),
        Adequacy::Inadequate { missing } => Err(MonitorError::Inadequate {
            end: format_rational(trace.end_time()),
            needed: format_rational(t0 + formula.horizon()),
            missing: format_rational(missing),
        }),
    }
}

/// Value domain of an evaluation: `f64` for robustness, `bool` for satisfaction.
pub trait Semantics: Copy + PartialEq + std::fmt::Debug + Send + Sync {
    const TOP: Self;
    const BOTTOM: Self;
    fn atom(atom: &Atom, value: f64) -> Self;
    fn negate(self) -> Self;
    fn meet(self, other: Self) -> Self;
    fn join(self, other: Self) -> Self;
}

impl Semantics for f64 {
    const TOP: Self = ROBUSTNESS_TOP;
    const BOTTOM: Self = -ROBUSTNESS_TOP;

    fn atom(atom: &Atom, value: f64) -> Self {
        match atom {
            Atom::Threshold {
                comparator: Comparator::Gt | Comparator::Ge,
                bound,
                ..
            } => value - to_f64(*bound),
            Atom::Threshold {
                comparator: Comparator::Lt | Comparator::Le,
                bound,
                ..
            } => to_f64(*bound) - value,
            Atom::Proposition(_) => value - PROPOSITION_THRESHOLD,
        }
    }

    fn negate(self) -> Self {
        -self
    }

    fn meet(self, other: Self) -> Self {
        self.min(other)
    }

    fn join(self, other: Self) -> Self {
        self.max(other)
    }
}

impl Semantics for bool {
    const TOP: Self = true;
    const BOTTOM: Self = false;

    fn atom(atom: &Atom, value: f64) -> Self {
        match atom {
            Atom::Threshold {
                comparator, bound, ..
            } => comparator.holds(value, to_f64(*bound)),
            Atom::Proposition(_) => value >= PROPOSITION_THRESHOLD,
        }
    }

    fn negate(self) -> Self {
        !self
    }

    fn meet(self, other: Self) -> Self {
        self && other
    }

    fn join(self, other: Self) -> Self {
        self || other
    }
}

/// Evaluates `formula` at `t0` in the semantics `S`.
pub fn evaluate<S: Semantics>(
    formula: &Formula,
    trace: &Trace,
    t0: Rational,
    check_horizon: bool,
) -> Result<S, MonitorError> {
    for channel in formula.channels() {
        if trace.channel(&channel).is_none() {
            return Err(MonitorError::MissingChannel(channel));
        }
    }
    let start = trace
        .index_of(t0)
        .ok_or_else(|| MonitorError::NotASample(format_rational(t0)))?;
    if check_horizon {
        require_adequate(formula, trace, t0)?;
    }
    let table = Evaluator { trace }.signal::<S>(formula);
    table.values[start].ok_or_else(|| diagnose(formula, &table, trace, start))
}

/// Per-node evaluation result over every sample index; `None` marks instants where
/// some temporal window below the node is empty.
struct Table<S> {
    values: Vec<Option<S>>,
    children: Vec<Table<S>>,
}

struct Evaluator<'a> {
    trace: &'a Trace,
}

impl Evaluator<'_> {
    fn signal<S: Semantics>(&self, formula: &Formula) -> Table<S> {
        let n = self.trace.len();
        let leaf = |values: Vec<Option<S>>| Table {
            values,
            children: Vec::new(),
        };
        match formula {
            Formula::True => leaf(vec![Some(S::TOP); n]),
            Formula::False => leaf(vec![Some(S::BOTTOM); n]),
            Formula::Atom(atom) => {
                let samples = self
                    .trace
                    .channel(atom.channel())
                    .expect("channels checked up front");
                leaf(samples.iter().map(|&v| Some(S::atom(atom, v))).collect())
            }
            Formula::Not(inner) => {
                let child = self.signal::<S>(inner);
                let values = child.values.iter().map(|v| v.map(S::negate)).collect();
                Table {
                    values,
                    children: vec![child],
                }
            }
            Formula::And(children) => self.fold(children, S::meet),
            Formula::Or(children) => self.fold(children, S::join),
            Formula::Implies(left, right) => {
                let left = self.signal::<S>(left);
                let right = self.signal::<S>(right);
                let values = left
                    .values
                    .iter()
                    .zip(&right.values)
                    .map(|(l, r)| Some(l.as_ref()?.negate().join(*r.as_ref()?)))
                    .collect();
                Table {
                    values,
                    children: vec![left, right],
                }
            }
            Formula::Always(interval, inner) => {
                let child = self.signal::<S>(inner);
                let values =
                    self.sliding(&child.values, interval.lower(), interval.upper(), S::meet);
                Table {
                    values,
                    children: vec![child],
                }
            }
            Formula::Eventually(interval, inner) => {
                let child = self.signal::<S>(inner);
                let values =
                    self.sliding(&child.values, interval.lower(), interval.upper(), S::join);
                Table {
                    values,
                    children: vec![child],
                }
            }
            Formula::Until(interval, left, right) => {
                let left = self.signal::<S>(left);
                let right = self.signal::<S>(right);
                let values = (0..n)
                    .map(|i| {
                        self.until_at(
                            &left.values,
                            &right.values,
                            i,
                            interval.lower(),
                            interval.upper(),
                        )
                    })
                    .collect();
                Table {
                    values,
                    children: vec![left, right],
                }
            }
        }
    }

    fn fold<S: Semantics>(&self, children: &[Formula], op: fn(S, S) -> S) -> Table<S> {
        let tables: Vec<Table<S>> = children.iter().map(|c| self.signal::<S>(c)).collect();
        let values = (0..self.trace.len())
            .map(|i| {
                let mut acc: Option<S> = None;
                for table in &tables {
                    let v = table.values[i]?;
                    acc = Some(acc.map_or(v, |a| op(a, v)));
                }
                acc
            })
            .collect();
        Table {
            values,
            children: tables,
        }
    }

    /// Windowed extremum over `[t + lower, t + upper]` for every sample time `t`.
    /// Window bounds are non-decreasing in `t`, so a monotone deque suffices.
    fn sliding<S: Semantics>(
        &self,
        child: &[Option<S>],
        lower: Rational,
        upper: Rational,
        op: fn(S, S) -> S,
    ) -> Vec<Option<S>> {
        let times = self.trace.times();
        let n = times.len();
        // Prefix counts of undefined child values.
        let mut undefined = vec![0usize; n + 1];
        for (i, v) in child.iter().enumerate() {
            undefined[i + 1] = undefined[i] + usize::from(v.is_none());
        }
        // `candidate` dominates `incumbent` when combining them yields the candidate.
        let dominates = |candidate: S, incumbent: S| op(candidate, incumbent) == candidate;

        let mut out = Vec::with_capacity(n);
        let mut deque: VecDeque<usize> = VecDeque::new();
        let (mut start, mut end) = (0usize, 0usize);
        for &t in times {
            let (lo, hi) = (t + lower, t + upper);
            while end < n && times[end] <= hi {
                if let Some(v) = child[end] {
                    while deque.back().is_some_and(|&j| {
                        dominates(v, child[j].expect("deque holds defined values"))
                    }) {
                        deque.pop_back();
                    }
                    deque.push_back(end);
                }
                end += 1;
            }
            while start < n && times[start] < lo {
                start += 1;
            }
            while deque.front().is_some_and(|&j| j < start) {
                deque.pop_front();
            }
            let window_end = end.max(start);
            if start == window_end || undefined[window_end] > undefined[start] {
                out.push(None);
            } else {
                out.push(deque.front().and_then(|&j| child[j]));
            }
        }
        out
    }

    fn until_at<S: Semantics>(
        &self,
        left: &[Option<S>],
        right: &[Option<S>],
        i: usize,
        lower: Rational,
        upper: Rational,
    ) -> Option<S> {
        let t = self.trace.times()[i];
        let window = self.trace.window(t + lower, t + upper);
        if window.is_empty() {
            return None;
        }
        // Running meet of the left operand over [t, t'); TOP is the identity for an empty range.
        let mut prefix = S::TOP;
        let mut best: Option<S> = None;
        for j in i..window.end {
            if j >= window.start {
                let candidate = prefix.meet(right[j]?);
                best = Some(best.map_or(candidate, |b| b.join(candidate)));
            }
            prefix = prefix.meet(left[j]?);
        }
        best
    }
}

/// Locates the temporal operator whose empty window made the root undefined.
fn diagnose<S: Semantics>(
    formula: &Formula,
    table: &Table<S>,
    trace: &Trace,
    index: usize,
) -> MonitorError {
    fn find<S: Semantics>(
        formula: &Formula,
        table: &Table<S>,
        trace: &Trace,
        index: usize,
    ) -> Option<MonitorError> {
        if table.values[index].is_some() {
            return None;
        }
        let t = trace.times()[index];
        let children = formula.children();
        match formula {
            Formula::Always(interval, _)
            | Formula::Eventually(interval, _)
            | Formula::Until(interval, _, _) => {
                let window = trace.window(t + interval.lower(), t + interval.upper());
                if window.is_empty() {
                    return Some(MonitorError::EmptyWindow {
                        operator: formula.to_string(),
                        time: format_rational(t),
                    });
                }
                let reach = if matches!(formula, Formula::Until(..)) {
                    index..window.end
                } else {
                    window
                };
                for j in reach {
                    for (child, child_table) in children.iter().zip(&table.children) {
                        if let Some(err) = find(child, child_table, trace, j) {
                            return Some(err);
                        }
                    }
                }
                None
            }
            _ => children
                .iter()
                .zip(&table.children)
                .find_map(|(child, child_table)| find(child, child_table, trace, index)),
        }
    }
    find(formula, table, trace, index).unwrap_or_else(|| MonitorError::EmptyWindow {
        operator: formula.to_string(),
        time: format_rational(trace.times()[index]),
    })
}

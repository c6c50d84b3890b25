//! MITL abstract syntax with bounded temporal operators, plus the structural
//! utilities the debugger and monitor rely on.

mod parser;
mod printer;

use std::fmt;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::rational::{format_rational, Rational};

pub use parser::{parse, ParseError};

/// Closed time interval `[lower, upper]` with `0 <= lower <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    lower: Rational,
    upper: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("interval lower bound {0} is negative")]
    Negative(String),
    #[error("interval [{0}, {1}] has lower bound above upper bound")]
    Reversed(String, String),
}

impl TimeInterval {
    pub fn new(lower: Rational, upper: Rational) -> Result<Self, IntervalError> {
        if lower < Rational::zero() {
            return Err(IntervalError::Negative(format_rational(lower)));
        }
        if lower > upper {
            return Err(IntervalError::Reversed(
                format_rational(lower),
                format_rational(upper),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// Shorthand for integer endpoints; panics on an invalid interval.
    pub fn ints(lower: i64, upper: i64) -> Self {
        Self::new(Rational::from_integer(lower), Rational::from_integer(upper))
            .expect("valid interval")
    }

    pub fn lower(&self) -> Rational {
        self.lower
    }

    pub fn upper(&self) -> Rational {
        self.upper
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}]",
            format_rational(self.lower),
            format_rational(self.upper)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    /// Evaluates `value <op> bound`.
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Comparator::Lt => value < bound,
            Comparator::Le => value <= bound,
            Comparator::Gt => value > bound,
            Comparator::Ge => value >= bound,
        }
    }
}

/// A threshold comparison `channel <op> bound`, or a 0/1 proposition channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Threshold {
        channel: String,
        comparator: Comparator,
        bound: Rational,
    },
    Proposition(String),
}

impl Atom {
    pub fn threshold(channel: impl Into<String>, comparator: Comparator, bound: Rational) -> Self {
        Atom::Threshold {
            channel: channel.into(),
            comparator,
            bound,
        }
    }

    pub fn prop(channel: impl Into<String>) -> Self {
        Atom::Proposition(channel.into())
    }

    pub fn channel(&self) -> &str {
        match self {
            Atom::Threshold { channel, .. } | Atom::Proposition(channel) => channel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    /// Two or more conjuncts.
    And(Vec<Formula>),
    /// Two or more disjuncts.
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Always(TimeInterval, Box<Formula>),
    Eventually(TimeInterval, Box<Formula>),
    Until(TimeInterval, Box<Formula>, Box<Formula>),
}

/// Syntactic class relevant to the satisfiability engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentClass {
    /// Only bounded eventually/always temporal operators.
    BoxDiamond,
    /// Contains at least one Until.
    Full,
}

/// Child indices from the root to a subformula occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn child(&self, index: usize) -> Path {
        let mut steps = self.0.clone();
        steps.push(index);
        Path(steps)
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("/")?;
        let steps: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&steps.join("/"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path {0} does not resolve to a subformula")]
    Unresolved(Path),
    #[error("path {0} does not address an implication")]
    NotImplication(Path),
}

impl Formula {
    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    pub fn prop(channel: impl Into<String>) -> Self {
        Formula::Atom(Atom::prop(channel))
    }

    pub fn threshold(channel: impl Into<String>, comparator: Comparator, bound: i64) -> Self {
        Formula::Atom(Atom::threshold(
            channel,
            comparator,
            Rational::from_integer(bound),
        ))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Self {
        Formula::Not(Box::new(inner))
    }

    pub fn and(children: Vec<Formula>) -> Self {
        assert!(children.len() >= 2, "And needs at least two children");
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Self {
        assert!(children.len() >= 2, "Or needs at least two children");
        Formula::Or(children)
    }

    pub fn implies(antecedent: Formula, consequent: Formula) -> Self {
        Formula::Implies(Box::new(antecedent), Box::new(consequent))
    }

    pub fn always(interval: TimeInterval, inner: Formula) -> Self {
        Formula::Always(interval, Box::new(inner))
    }

    pub fn eventually(interval: TimeInterval, inner: Formula) -> Self {
        Formula::Eventually(interval, Box::new(inner))
    }

    pub fn until(interval: TimeInterval, left: Formula, right: Formula) -> Self {
        Formula::Until(interval, Box::new(left), Box::new(right))
    }

    /// Direct children in path-index order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => Vec::new(),
            Formula::Not(inner) | Formula::Always(_, inner) | Formula::Eventually(_, inner) => {
                vec![inner]
            }
            Formula::And(children) | Formula::Or(children) => children.iter().collect(),
            Formula::Implies(left, right) | Formula::Until(_, left, right) => vec![left, right],
        }
    }

    fn child_mut(&mut self, index: usize) -> Option<&mut Formula> {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => None,
            Formula::Not(inner) | Formula::Always(_, inner) | Formula::Eventually(_, inner) => {
                (index == 0).then_some(inner.as_mut())
            }
            Formula::And(children) | Formula::Or(children) => children.get_mut(index),
            Formula::Implies(left, right) | Formula::Until(_, left, right) => match index {
                0 => Some(left.as_mut()),
                1 => Some(right.as_mut()),
                _ => None,
            },
        }
    }

    /// Maximum look-ahead duration needed to decide the formula at a time point.
    pub fn horizon(&self) -> Rational {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => Rational::zero(),
            Formula::Not(inner) => inner.horizon(),
            Formula::And(children) | Formula::Or(children) => children
                .iter()
                .map(Formula::horizon)
                .max()
                .unwrap_or_else(Rational::zero),
            Formula::Implies(left, right) => left.horizon().max(right.horizon()),
            Formula::Always(interval, inner) | Formula::Eventually(interval, inner) => {
                interval.upper() + inner.horizon()
            }
            Formula::Until(interval, left, right) => {
                interval.upper() + left.horizon().max(right.horizon())
            }
        }
    }

    pub fn fragment_class(&self) -> FragmentClass {
        if self.any_node(&mut |node| matches!(node, Formula::Until(..))) {
            FragmentClass::Full
        } else {
            FragmentClass::BoxDiamond
        }
    }

    fn any_node(&self, predicate: &mut impl FnMut(&Formula) -> bool) -> bool {
        predicate(self)
            || self
                .children()
                .into_iter()
                .any(|child| child.any_node(predicate))
    }

    /// Depth-first pre-order walk over `(path, node)` pairs.
    pub fn walk(&self, visit: &mut impl FnMut(&Path, &Formula)) {
        fn go(node: &Formula, path: &mut Path, visit: &mut impl FnMut(&Path, &Formula)) {
            visit(path, node);
            for (index, child) in node.children().into_iter().enumerate() {
                path.0.push(index);
                go(child, path, visit);
                path.0.pop();
            }
        }
        go(self, &mut Path::root(), visit);
    }

    pub fn node_count(&self) -> usize {
        let mut count = 0;
        self.walk(&mut |_, _| count += 1);
        count
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Formula::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn at(&self, path: &Path) -> Option<&Formula> {
        let mut node = self;
        for &index in &path.0 {
            node = *node.children().get(index)?;
        }
        Some(node)
    }

    /// Returns a copy with the subformula at `path` replaced by `replacement`.
    pub fn replace_at(&self, path: &Path, replacement: Formula) -> Result<Formula, PathError> {
        let mut result = self.clone();
        let mut node = &mut result;
        for &index in &path.0 {
            node = node
                .child_mut(index)
                .ok_or_else(|| PathError::Unresolved(path.clone()))?;
        }
        *node = replacement;
        Ok(result)
    }

    /// One entry per Implies node in pre-order, paired with its antecedent.
    pub fn implication_occurrences(&self) -> Vec<(Path, Formula)> {
        let mut found = Vec::new();
        self.walk(&mut |path, node| {
            if let Formula::Implies(antecedent, _) = node {
                found.push((path.clone(), antecedent.as_ref().clone()));
            }
        });
        found
    }

    /// `G[0, horizon(self)] !a` for the antecedent `a` of the implication at `path`.
    pub fn antecedent_failure_mutation(&self, path: &Path) -> Result<Formula, PathError> {
        match self.at(path) {
            Some(Formula::Implies(antecedent, _)) => {
                let interval = TimeInterval::new(Rational::zero(), self.horizon())
                    .expect("horizon is non-negative");
                Ok(Formula::always(
                    interval,
                    Formula::not(antecedent.as_ref().clone()),
                ))
            }
            Some(_) => Err(PathError::NotImplication(path.clone())),
            None => Err(PathError::Unresolved(path.clone())),
        }
    }

    /// Negation pushed to the atoms by duality, staying inside the box/diamond fragment
    /// whenever `self` is in it.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(_) => Formula::not(self.clone()),
            Formula::Not(inner) => inner.as_ref().clone(),
            Formula::And(children) => Formula::Or(children.iter().map(Formula::negate).collect()),
            Formula::Or(children) => Formula::And(children.iter().map(Formula::negate).collect()),
            Formula::Implies(left, right) => {
                Formula::and(vec![left.as_ref().clone(), right.negate()])
            }
            Formula::Always(interval, inner) => Formula::eventually(*interval, inner.negate()),
            Formula::Eventually(interval, inner) => Formula::always(*interval, inner.negate()),
            // Until has no bounded dual inside the language; keep an explicit negation.
            Formula::Until(..) => Formula::not(self.clone()),
        }
    }

    /// Every temporal interval endpoint in the formula.
    pub fn interval_endpoints(&self) -> Vec<Rational> {
        let mut endpoints = Vec::new();
        self.walk(&mut |_, node| match node {
            Formula::Always(interval, _)
            | Formula::Eventually(interval, _)
            | Formula::Until(interval, _, _) => {
                endpoints.push(interval.lower());
                endpoints.push(interval.upper());
            }
            _ => {}
        });
        endpoints
    }

    /// Channel names referenced by atoms, sorted and deduplicated.
    pub fn channels(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.walk(&mut |_, node| {
            if let Formula::Atom(atom) = node {
                names.push(atom.channel().to_string());
            }
        });
        names.sort();
        names.dedup();
        names
    }
}

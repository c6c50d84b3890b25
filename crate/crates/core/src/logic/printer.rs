use std::fmt;

use super::{Atom, Formula};
use crate::rational::format_rational;

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Threshold {
                channel,
                comparator,
                bound,
            } => {
                write!(
                    f,
                    "({channel} {} {})",
                    comparator.symbol(),
                    format_rational(*bound)
                )
            }
            Atom::Proposition(channel) => f.write_str(channel),
        }
    }
}

/// Canonical, fully parenthesized rendering accepted by [`super::parse`].
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(atom) => write!(f, "{atom}"),
            Formula::Not(inner) => write!(f, "(!{inner})"),
            Formula::And(children) => write_chain(f, children, " and "),
            Formula::Or(children) => write_chain(f, children, " or "),
            Formula::Implies(left, right) => write!(f, "({left} -> {right})"),
            Formula::Always(interval, inner) => write!(f, "(G{interval} {inner})"),
            Formula::Eventually(interval, inner) => write!(f, "(F{interval} {inner})"),
            Formula::Until(interval, left, right) => write!(f, "({left} U{interval} {right})"),
        }
    }
}

fn write_chain(f: &mut fmt::Formatter<'_>, children: &[Formula], separator: &str) -> fmt::Result {
    f.write_str("(")?;
    for (index, child) in children.iter().enumerate() {
        if index > 0 {
            f.write_str(separator)?;
        }
        write!(f, "{child}")?;
    }
    f.write_str(")")
}

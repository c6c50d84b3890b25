//! Deterministic propositional satisfiability search over clause sets.
//!
//! Decisions always pick the unassigned variable with the smallest index and try
//! `false` first. Two backtracking regimes share the propagation engine:
//! plain DPLL (chronological backtracking, flip the most recent unflipped decision)
//! and conflict-driven learning with first-UIP clauses and backjumping.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// Literal encoded as `2 * var + negated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn positive(var: Var) -> Self {
        Lit(var.0 << 1)
    }

    pub fn negative(var: Var) -> Self {
        Lit((var.0 << 1) | 1)
    }

    pub fn new(var: Var, value: bool) -> Self {
        if value {
            Self::positive(var)
        } else {
            Self::negative(var)
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    fn code(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    /// Learn first-UIP clauses and backjump; otherwise plain chronological DPLL.
    pub learning: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { learning: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Total assignment indexed by variable.
    Sat(Vec<bool>),
    Unsat,
}

type ClauseRef = usize;

struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<ClauseRef>>,
    values: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<ClauseRef>>,
    trail: Vec<Lit>,
    /// Trail index where each decision level starts, plus whether its decision was flipped.
    levels: Vec<(usize, bool)>,
    queue_head: usize,
    options: SolverOptions,
    stats: SolverStats,
}

/// Decides satisfiability of `clauses` over `num_vars` variables.
pub fn solve(
    num_vars: usize,
    clauses: &[Vec<Lit>],
    options: SolverOptions,
) -> (Outcome, SolverStats) {
    let mut solver = Solver {
        clauses: Vec::with_capacity(clauses.len()),
        watches: vec![Vec::new(); 2 * num_vars],
        values: vec![None; num_vars],
        level: vec![0; num_vars],
        reason: vec![None; num_vars],
        trail: Vec::with_capacity(num_vars),
        levels: Vec::new(),
        queue_head: 0,
        options,
        stats: SolverStats::default(),
    };
    let outcome = if solver.load(clauses) {
        solver.search()
    } else {
        Outcome::Unsat
    };
    (outcome, solver.stats)
}

impl Solver {
    fn value(&self, lit: Lit) -> Option<bool> {
        self.values[lit.var().0 as usize].map(|v| v != lit.is_negated())
    }

    fn decision_level(&self) -> usize {
        self.levels.len()
    }

    fn assign(&mut self, lit: Lit, reason: Option<ClauseRef>) {
        let var = lit.var().0 as usize;
        self.values[var] = Some(!lit.is_negated());
        self.level[var] = self.decision_level();
        self.reason[var] = reason;
        self.trail.push(lit);
    }

    /// Adds the input clauses; false when they are trivially contradictory.
    fn load(&mut self, clauses: &[Vec<Lit>]) -> bool {
        for clause in clauses {
            let mut lits = clause.clone();
            lits.sort();
            lits.dedup();
            if lits.windows(2).any(|pair| pair[0] == !pair[1]) {
                continue; // tautological clause
            }
            match lits.len() {
                0 => return false,
                1 => match self.value(lits[0]) {
                    Some(true) => {}
                    Some(false) => return false,
                    None => self.assign(lits[0], None),
                },
                _ => {
                    self.attach(lits);
                }
            }
        }
        true
    }

    fn attach(&mut self, lits: Vec<Lit>) -> ClauseRef {
        let index = self.clauses.len();
        self.watches[lits[0].code()].push(index);
        self.watches[lits[1].code()].push(index);
        self.clauses.push(lits);
        index
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<ClauseRef> {
        while self.queue_head < self.trail.len() {
            let falsified = !self.trail[self.queue_head];
            self.queue_head += 1;
            let watching = std::mem::take(&mut self.watches[falsified.code()]);
            let mut kept = Vec::with_capacity(watching.len());
            let mut conflict = None;
            let mut iter = watching.into_iter();
            for index in iter.by_ref() {
                let clause = &mut self.clauses[index];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.values[first.var().0 as usize].map(|v| v != first.is_negated())
                    == Some(true)
                {
                    kept.push(index);
                    continue;
                }
                let replacement = (2..clause.len()).find(|&k| {
                    let lit = clause[k];
                    self.values[lit.var().0 as usize].map(|v| v != lit.is_negated()) != Some(false)
                });
                if let Some(k) = replacement {
                    clause.swap(1, k);
                    let new_watch = clause[1];
                    self.watches[new_watch.code()].push(index);
                    continue;
                }
                kept.push(index);
                match self.value(first) {
                    Some(false) => {
                        conflict = Some(index);
                        break;
                    }
                    _ => {
                        self.stats.propagations += 1;
                        self.assign(first, Some(index));
                    }
                }
            }
            kept.extend(iter);
            self.watches[falsified.code()].extend(kept);
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn backtrack_to(&mut self, target: usize) {
        if self.decision_level() <= target {
            return;
        }
        let start = self.levels[target].0;
        for lit in self.trail.drain(start..) {
            let var = lit.var().0 as usize;
            self.values[var] = None;
            self.reason[var] = None;
        }
        self.levels.truncate(target);
        self.queue_head = self.trail.len();
    }

    fn next_unassigned(&self) -> Option<Var> {
        self.values
            .iter()
            .position(Option::is_none)
            .map(|v| Var(v as u32))
    }

    fn search(&mut self) -> Outcome {
        loop {
            if let Some(conflict) = self.propagate() {
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    return Outcome::Unsat;
                }
                let resolved = if self.options.learning {
                    self.learn(conflict)
                } else {
                    self.flip()
                };
                if !resolved {
                    return Outcome::Unsat;
                }
                continue;
            }
            match self.next_unassigned() {
                None => {
                    return Outcome::Sat(
                        self.values
                            .iter()
                            .map(|v| v.expect("total assignment"))
                            .collect(),
                    );
                }
                Some(var) => {
                    self.stats.decisions += 1;
                    self.levels.push((self.trail.len(), false));
                    self.assign(Lit::negative(var), None);
                }
            }
        }
    }

    /// Chronological backtracking: undo to the most recent unflipped decision and flip it.
    fn flip(&mut self) -> bool {
        while let Some(&(start, flipped)) = self.levels.last() {
            let decision = self.trail[start];
            self.backtrack_to(self.decision_level() - 1);
            if !flipped {
                self.levels.push((self.trail.len(), true));
                self.assign(!decision, None);
                return true;
            }
        }
        false
    }

    /// First-UIP conflict analysis; adds the learned clause and backjumps.
    fn learn(&mut self, conflict: ClauseRef) -> bool {
        let current = self.decision_level();
        let mut seen = vec![false; self.values.len()];
        let mut learned: Vec<Lit> = Vec::new();
        let mut pending = 0usize;
        let mut clause = conflict;
        let mut index = self.trail.len();
        let uip = loop {
            for &lit in &self.clauses[clause] {
                let var = lit.var().0 as usize;
                if seen[var] || self.values[var].is_none() {
                    continue;
                }
                // Skip the literal this reason clause implied.
                if self.value(lit) == Some(true) {
                    continue;
                }
                seen[var] = true;
                if self.level[var] == current {
                    pending += 1;
                } else if self.level[var] > 0 {
                    learned.push(lit);
                }
            }
            let lit = loop {
                index -= 1;
                let lit = self.trail[index];
                if seen[lit.var().0 as usize] {
                    break lit;
                }
            };
            pending -= 1;
            if pending == 0 {
                break lit;
            }
            clause = self.reason[lit.var().0 as usize]
                .expect("implied literal at the conflict level has a reason");
        };

        let backjump = learned
            .iter()
            .map(|l| self.level[l.var().0 as usize])
            .max()
            .unwrap_or(0);
        let asserting = !uip;
        self.backtrack_to(backjump);
        if learned.is_empty() {
            self.assign(asserting, None);
            return true;
        }
        // Watch the asserting literal and the literal from the backjump level.
        let position = learned
            .iter()
            .position(|l| self.level[l.var().0 as usize] == backjump)
            .expect("max exists");
        learned.swap(0, position);
        let mut lits = vec![asserting];
        lits.extend(learned);
        let index = self.attach(lits);
        self.assign(asserting, Some(index));
        true
    }
}

//! Specification debugging: validity, then redundancy, then vacuity.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::logic::{Formula, FragmentClass, Path};
use crate::rational::{format_rational, Rational};
use crate::satcheck::{self, DiscretizationConfig, SatError, SatStatus};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LintError {
    #[error("formula contains Until; specification debugging covers only the eventually/always fragment")]
    Fragment,
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Unsatisfiable,
    Tautology,
    RedundantConjunct,
    VacuousAntecedent,
}

impl IssueKind {
    pub fn name(self) -> &'static str {
        match self {
            IssueKind::Unsatisfiable => "unsatisfiable",
            IssueKind::Tautology => "tautology",
            IssueKind::RedundantConjunct => "redundant_conjunct",
            IssueKind::VacuousAntecedent => "vacuous_antecedent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validity,
    Redundancy,
    Vacuity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LintIssue {
    pub kind: IssueKind,
    /// Absent for validity issues.
    pub path: Option<Path>,
    pub detail: String,
    pub witness: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LintReport {
    pub formula: Formula,
    pub delta: Rational,
    pub horizon: Rational,
    pub issues: Vec<LintIssue>,
    pub stages_run: Vec<Stage>,
}

/// Overrides for the discretization; `None` selects the formula's defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LintOptions {
    pub delta: Option<Rational>,
    pub horizon: Option<Rational>,
}

impl LintOptions {
    pub fn config(&self, formula: &Formula) -> DiscretizationConfig {
        let mut cfg = DiscretizationConfig::for_formula(formula);
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(horizon) = self.horizon {
            cfg.horizon = horizon;
        }
        cfg
    }
}

fn require_fragment(formula: &Formula) -> Result<(), LintError> {
    match formula.fragment_class() {
        FragmentClass::BoxDiamond => Ok(()),
        FragmentClass::Full => Err(LintError::Fragment),
    }
}

/// The configuration widened, if needed, to cover the horizon of `query`.
fn covering(cfg: &DiscretizationConfig, query: &Formula) -> DiscretizationConfig {
    cfg.with_horizon(cfg.horizon.max(query.horizon()))
}

fn satisfiable(query: &Formula, cfg: &DiscretizationConfig) -> Result<bool, LintError> {
    Ok(satcheck::is_satisfiable(query, &covering(cfg, query))?)
}

fn equivalent(
    left: &Formula,
    right: &Formula,
    cfg: &DiscretizationConfig,
) -> Result<bool, LintError> {
    let forward = Formula::and(vec![left.clone(), right.negate()]);
    if satisfiable(&forward, cfg)? {
        return Ok(false);
    }
    let backward = Formula::and(vec![left.negate(), right.clone()]);
    Ok(!satisfiable(&backward, cfg)?)
}

/// Reports an unsatisfiable or tautological formula. At most one issue.
pub fn check_validity(
    formula: &Formula,
    cfg: &DiscretizationConfig,
) -> Result<Vec<LintIssue>, LintError> {
    require_fragment(formula)?;
    cfg.validate(formula)?;
    if !satisfiable(formula, cfg)? {
        return Ok(vec![LintIssue {
            kind: IssueKind::Unsatisfiable,
            path: None,
            detail: "no trace satisfies the formula".into(),
            witness: None,
        }]);
    }
    if satcheck::is_tautology(formula, cfg)? {
        return Ok(vec![LintIssue {
            kind: IssueKind::Tautology,
            path: None,
            detail: "every trace satisfies the formula, so it constrains nothing".into(),
            witness: None,
        }]);
    }
    Ok(Vec::new())
}

/// Flags each conjunct whose replacement by `true` leaves the formula equivalent.
///
/// And nodes are visited in pre-order. Within one And the children are tested from
/// last to first and each flagged child stays replaced for the following tests, so of
/// several mutually redundant conjuncts the earliest one survives. Issues are reported
/// in pre-order of their paths.
pub fn check_redundancy(
    formula: &Formula,
    cfg: &DiscretizationConfig,
) -> Result<Vec<LintIssue>, LintError> {
    require_fragment(formula)?;
    cfg.validate(formula)?;
    let mut current = formula.clone();
    let mut flagged = Vec::new();
    redundant_under(&mut current, &Path::root(), formula, cfg, &mut flagged)?;
    flagged.sort();
    Ok(flagged
        .into_iter()
        .map(|path| {
            let conjunct = formula.at(&path).expect("flagged paths resolve");
            LintIssue {
                kind: IssueKind::RedundantConjunct,
                detail: format!("conjunct {conjunct} is implied by the rest of the formula"),
                path: Some(path),
                witness: None,
            }
        })
        .collect())
}

fn redundant_under(
    current: &mut Formula,
    path: &Path,
    original: &Formula,
    cfg: &DiscretizationConfig,
    flagged: &mut Vec<Path>,
) -> Result<(), LintError> {
    let node = current.at(path).expect("path resolves").clone();
    let mut removed = Vec::new();
    if let Formula::And(children) = &node {
        for index in (0..children.len()).rev() {
            let child = path.child(index);
            let candidate = current
                .replace_at(&child, Formula::True)
                .expect("child path resolves");
            if equivalent(original, &candidate, cfg)? {
                *current = candidate;
                flagged.push(child);
                removed.push(index);
            }
        }
    }
    for index in 0..node.children().len() {
        if !removed.contains(&index) {
            redundant_under(current, &path.child(index), original, cfg, flagged)?;
        }
    }
    Ok(())
}

/// Flags each implication whose antecedent can fail throughout while the formula holds,
/// with a witness trace satisfying both.
pub fn check_vacuity(
    formula: &Formula,
    cfg: &DiscretizationConfig,
) -> Result<Vec<LintIssue>, LintError> {
    require_fragment(formula)?;
    cfg.validate(formula)?;
    let occurrences = formula.implication_occurrences();
    let outcomes: Vec<Result<Option<LintIssue>, LintError>> = occurrences
        .par_iter()
        .map(|(path, antecedent)| {
            let mutation = formula
                .antecedent_failure_mutation(path)
                .expect("path addresses an implication");
            let query = Formula::and(vec![formula.clone(), mutation]);
            let result = satcheck::check(&query, &covering(cfg, &query))?;
            Ok(
                (result.status == SatStatus::Satisfiable).then(|| LintIssue {
                    kind: IssueKind::VacuousAntecedent,
                    path: Some(path.clone()),
                    detail: format!(
                        "the formula can hold while antecedent {antecedent} never occurs"
                    ),
                    witness: result.witness,
                }),
            )
        })
        .collect();
    let mut issues = Vec::new();
    for outcome in outcomes {
        issues.extend(outcome?);
    }
    Ok(issues)
}

/// Runs the full pipeline; stops after the validity stage if it reports anything.
pub fn lint(formula: &Formula, options: &LintOptions) -> Result<LintReport, LintError> {
    require_fragment(formula)?;
    let cfg = options.config(formula);
    cfg.validate(formula)?;
    let mut report = LintReport {
        formula: formula.clone(),
        delta: cfg.delta,
        horizon: cfg.horizon,
        issues: check_validity(formula, &cfg)?,
        stages_run: vec![Stage::Validity],
    };
    if !report.issues.is_empty() {
        return Ok(report);
    }
    report.issues.extend(check_redundancy(formula, &cfg)?);
    report.stages_run.push(Stage::Redundancy);
    report.issues.extend(check_vacuity(formula, &cfg)?);
    report.stages_run.push(Stage::Vacuity);
    Ok(report)
}

#[derive(Serialize)]
struct IssueJson<'a> {
    kind: IssueKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_csv: Option<String>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    formula: String,
    delta: String,
    horizon: String,
    issues: Vec<IssueJson<'a>>,
    stages_run: &'a [Stage],
}

impl LintReport {
    pub fn to_json(&self) -> serde_json::Value {
        let report = ReportJson {
            formula: self.formula.to_string(),
            delta: format_rational(self.delta),
            horizon: format_rational(self.horizon),
            issues: self
                .issues
                .iter()
                .map(|issue| IssueJson {
                    kind: issue.kind,
                    path: issue.path.as_ref().map(ToString::to_string),
                    detail: &issue.detail,
                    witness_csv: issue.witness.as_ref().map(Trace::to_csv_string),
                })
                .collect(),
            stages_run: &self.stages_run,
        };
        serde_json::to_value(report).expect("report serializes")
    }

    /// Plain-text rendering carrying the same facts as [`LintReport::to_json`].
    pub fn to_text(&self, color: bool) -> String {
        let paint = |code: &str, text: &str| {
            if color {
                format!("\x1b[{code}m{text}\x1b[0m")
            } else {
                text.to_string()
            }
        };
        let mut out = String::new();
        let stages: Vec<&str> = self
            .stages_run
            .iter()
            .map(|stage| match stage {
                Stage::Validity => "validity",
                Stage::Redundancy => "redundancy",
                Stage::Vacuity => "vacuity",
            })
            .collect();
        writeln!(out, "formula: {}", self.formula).unwrap();
        writeln!(
            out,
            "delta: {}  horizon: {}",
            format_rational(self.delta),
            format_rational(self.horizon)
        )
        .unwrap();
        writeln!(out, "stages: {}", stages.join(", ")).unwrap();
        if self.issues.is_empty() {
            writeln!(out, "{}", paint("32", "no issues")).unwrap();
        }
        for issue in &self.issues {
            let location = issue
                .path
                .as_ref()
                .map(|p| format!(" at {p}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{}{location}: {}",
                paint("1;31", issue.kind.name()),
                issue.detail
            )
            .unwrap();
            if let Some(witness) = &issue.witness {
                writeln!(out, "  witness:").unwrap();
                for line in witness.to_csv_string().lines() {
                    writeln!(out, "    {line}").unwrap();
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse;
    use crate::monitor::eval_bool;

    fn lint_text(text: &str) -> LintReport {
        lint(&parse(text).unwrap(), &LintOptions::default()).unwrap()
    }

    fn kinds(report: &LintReport) -> Vec<IssueKind> {
        report.issues.iter().map(|i| i.kind).collect()
    }

    #[test]
    fn tautology_stops_pipeline() {
        let options = LintOptions {
            delta: Some(Rational::from_integer(1)),
            horizon: Some(Rational::from_integer(50)),
        };
        let report = lint(
            &parse("F[0,30]((v > 100) -> G[0,20](v > 100))").unwrap(),
            &options,
        )
        .unwrap();
        assert_eq!(kinds(&report), vec![IssueKind::Tautology]);
        assert_eq!(report.stages_run, vec![Stage::Validity]);
        assert_eq!(kinds(&lint_text("false")), vec![IssueKind::Unsatisfiable]);
    }

    #[test]
    fn request_response_is_vacuous() {
        let report = lint_text("G[0,5](req -> F[0,10] ack)");
        assert_eq!(
            report.stages_run,
            vec![Stage::Validity, Stage::Redundancy, Stage::Vacuity]
        );
        assert_eq!(kinds(&report), vec![IssueKind::VacuousAntecedent]);
        let issue = &report.issues[0];
        assert_eq!(issue.path, Some(Path(vec![0])));
        let witness = issue.witness.as_ref().unwrap();
        assert!(witness.channel("req").unwrap().iter().all(|&v| v == 0.0));
        assert!(eval_bool(&report.formula, witness, Rational::from_integer(0)).unwrap());
    }

    #[test]
    fn clean_formula() {
        let report = lint_text("p");
        assert!(report.issues.is_empty());
        assert_eq!(report.stages_run.len(), 3);
    }

    #[test]
    fn redundancy_examples() {
        let report = lint_text("(G[0,10] p) and (F[0,5] p)");
        assert_eq!(kinds(&report), vec![IssueKind::RedundantConjunct]);
        assert_eq!(report.issues[0].path, Some(Path(vec![1])));

        let report = lint_text("p and p");
        assert_eq!(kinds(&report), vec![IssueKind::RedundantConjunct]);
        assert_eq!(report.issues[0].path, Some(Path(vec![1])));

        assert!(lint_text("(G[0,5] p) and (G[0,5] q)").issues.is_empty());
    }

    #[test]
    fn nested_redundancy_is_reported_in_pre_order() {
        let report = lint_text("(q and q) and G[0,2](p and p)");
        let paths: Vec<_> = report
            .issues
            .iter()
            .map(|i| i.path.clone().unwrap())
            .collect();
        assert_eq!(paths, vec![Path(vec![0, 1]), Path(vec![1, 0, 1])]);
    }

    #[test]
    fn vacuity_examples() {
        assert!(lint_text("G[0,5](true -> p)").issues.is_empty());
        assert!(lint_text("(p -> q) and G[0,3] p").issues.is_empty());
    }

    #[test]
    fn until_is_a_report_level_error() {
        assert_eq!(
            lint(&parse("p U[0,2] q").unwrap(), &LintOptions::default()),
            Err(LintError::Fragment)
        );
    }

    #[test]
    fn json_shape() {
        let json = lint_text("G[0,5](req -> F[0,10] ack)").to_json();
        assert_eq!(json["delta"], "5");
        assert_eq!(json["horizon"], "15");
        assert_eq!(json["issues"][0]["kind"], "vacuous_antecedent");
        assert_eq!(json["issues"][0]["path"], "/0");
        assert!(json["issues"][0]["witness_csv"]
            .as_str()
            .unwrap()
            .starts_with("time,ack,req"));
        assert_eq!(
            json["stages_run"],
            serde_json::json!(["validity", "redundancy", "vacuity"])
        );
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use speclint::debugger::{lint, IssueKind, LintOptions, Stage};
use speclint::logic::{Formula, Path};
use speclint::monitor::eval_bool;
use speclint::rational::Rational;
use speclint::testing::{enumerate_satisfiable, random_formula, FormulaShape};

const LIMIT: u128 = 1 << 16;

fn unit_options() -> LintOptions {
    LintOptions {
        delta: Some(Rational::from_integer(1)),
        horizon: None,
    }
}

fn enumerate(f: &Formula) -> Option<bool> {
    enumerate_satisfiable(
        f,
        Rational::from_integer(1),
        (f.horizon().to_integer() + 1) as usize,
        LIMIT,
    )
    .ok()
}

#[test]
fn redundant_conjuncts_preserve_meaning() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut flagged, mut checked) = (0, 0);
    while checked < 200 {
        let shape = FormulaShape::small_box_diamond(&mut rng, 6);
        let f = random_formula(&mut rng, &shape);
        if !f.to_string().contains(" and ") {
            continue;
        }
        let report = lint(&f, &unit_options()).unwrap();
        assert_eq!(lint(&f, &unit_options()).unwrap(), report);
        let paths: Vec<Path> = report
            .issues
            .iter()
            .filter(|i| i.kind == IssueKind::RedundantConjunct)
            .map(|i| i.path.clone().unwrap())
            .collect();
        let mut reduced = f.clone();
        for path in &paths {
            assert!(matches!(
                f.at(&Path(path.0[..path.0.len() - 1].to_vec())),
                Some(Formula::And(_))
            ));
            reduced = reduced.replace_at(path, Formula::True).unwrap();
        }
        let (Some(forward), Some(backward), Some(status), Some(reduced_status)) = (
            enumerate(&Formula::and(vec![f.clone(), reduced.negate()])),
            enumerate(&Formula::and(vec![f.negate(), reduced.clone()])),
            enumerate(&f),
            enumerate(&reduced),
        ) else {
            continue;
        };
        checked += 1;
        flagged += paths.len();
        assert!(!forward && !backward, "{f} differs from {reduced}");
        assert_eq!(status, reduced_status);
    }
    assert!(flagged > 10, "only {flagged} redundant conjuncts exercised");
}

#[test]
fn vacuity_witnesses_satisfy_formula_and_mutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut witnesses = 0;
    for _ in 0..400 {
        let shape = FormulaShape::small_box_diamond(&mut rng, 6);
        let f = random_formula(&mut rng, &shape);
        let report = lint(&f, &LintOptions::default()).unwrap();
        let has_validity = report
            .issues
            .iter()
            .any(|i| matches!(i.kind, IssueKind::Unsatisfiable | IssueKind::Tautology));
        if has_validity {
            assert_eq!(report.stages_run, vec![Stage::Validity]);
            assert_eq!(report.issues.len(), 1);
        }
        for issue in report
            .issues
            .iter()
            .filter(|i| i.kind == IssueKind::VacuousAntecedent)
        {
            let path = issue.path.as_ref().unwrap();
            assert!(matches!(f.at(path), Some(Formula::Implies(..))));
            let witness = issue.witness.as_ref().unwrap();
            let mutation = f.antecedent_failure_mutation(path).unwrap();
            let zero = Rational::from_integer(0);
            assert!(eval_bool(&f, witness, zero).unwrap(), "{f}");
            assert!(eval_bool(&mutation, witness, zero).unwrap(), "{f}");
            witnesses += 1;
        }
    }
    assert!(witnesses > 20, "only {witnesses} witnesses exercised");
}

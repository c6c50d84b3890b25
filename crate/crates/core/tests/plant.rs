use speclint::falsifier::{falsify, ChannelGrid, FalsificationStatus, Grid, SearchConfig};
use speclint::logic::parse;
use speclint::plant::{
    simulate, ChannelInput, InputSignal, Interpolation, ModelKind, ModelSpec, PlantError,
};
use speclint::rational::{to_f64, Rational};
use speclint::trace::Trace;
use std::collections::BTreeMap;

fn step() -> InputSignal {
    InputSignal::single("u", ChannelInput::constant(1.0))
}

fn peak(trace: &Trace) -> f64 {
    trace
        .channel("x")
        .unwrap()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Closed-form unit-step response of the underdamped second-order system from rest.
fn closed_form(zeta: f64, omega: f64, t: f64) -> f64 {
    let root = (1.0 - zeta * zeta).sqrt();
    let damped = omega * root;
    1.0 - (-zeta * omega * t).exp() * ((damped * t).cos() + zeta / root * (damped * t).sin())
}

#[test]
fn step_response_matches_closed_form() {
    let mut model = ModelSpec::parse("secondorder").unwrap();
    for (zeta, omega) in [(0.2, 1.0), (0.5, 2.0)] {
        model.set_parameter("zeta", zeta).unwrap();
        model.set_parameter("omega", omega).unwrap();
        let trace = simulate(&model, &step(), Rational::from_integer(40)).unwrap();
        for (t, x) in trace.times().iter().zip(trace.channel("x").unwrap()) {
            assert!(
                (x - closed_form(zeta, omega, to_f64(*t))).abs() < 1e-7,
                "t = {t}"
            );
        }
    }
}

#[test]
fn step_peak_is_near_analytic_overshoot() {
    let trace = simulate(
        &ModelSpec::parse("secondorder").unwrap(),
        &step(),
        Rational::from_integer(40),
    )
    .unwrap();
    let analytic = 1.0 + (-std::f64::consts::PI * 0.2 / (1.0f64 - 0.04).sqrt()).exp();
    assert!((analytic - 1.5266).abs() < 1e-4);
    assert!((peak(&trace) - analytic).abs() < 1e-3);
}

#[test]
fn halving_the_step_barely_moves_the_peak() {
    let mut model = ModelSpec::parse("secondorder").unwrap();
    let coarse = peak(&simulate(&model, &step(), Rational::from_integer(40)).unwrap());
    model.integrator_step = 0.005;
    let fine = peak(&simulate(&model, &step(), Rational::from_integer(40)).unwrap());
    assert!((coarse - fine).abs() < 1e-6);
}

#[test]
fn simulation_is_deterministic_and_well_formed() {
    let input = InputSignal::single(
        "u",
        ChannelInput::new(
            vec![
                Rational::from_integer(0),
                Rational::new(7, 3),
                Rational::from_integer(9),
            ],
            vec![0.2, 1.0, 0.4],
            Interpolation::Linear,
        )
        .unwrap(),
    );
    for name in ["secondorder", "cruise"] {
        let model = ModelSpec::parse(name).unwrap();
        let first = simulate(&model, &input, Rational::new(25, 2)).unwrap();
        assert_eq!(
            simulate(&model, &input, Rational::new(25, 2)).unwrap(),
            first
        );
        assert_eq!(first.times()[0], Rational::from_integer(0));
        assert_eq!(first.end_time(), Rational::new(25, 2));
        assert_eq!(first.len(), 126);
    }
}

#[test]
fn cruise_approaches_drag_equilibrium() {
    let trace = simulate(
        &ModelSpec::parse("cruise").unwrap(),
        &step(),
        Rational::from_integer(200),
    )
    .unwrap();
    // 1 = 0.1 v + 0.01 v^2 at v = 5 (sqrt(5) - 1).
    let equilibrium = 5.0 * (5.0f64.sqrt() - 1.0);
    assert!((trace.channel("v").unwrap().last().unwrap() - equilibrium).abs() < 1e-6);
}

fn external(script: &str) -> ModelSpec {
    ModelSpec::new(ModelKind::External(vec![
        "sh".into(),
        "-c".into(),
        script.into(),
    ]))
}

#[test]
fn external_model_round_trip() {
    let model = external(
        r#"read request; echo '{"protocol":1,"times":[0,0.5,1],"signals":{"x":[0,1.75,0.5]}}'"#,
    );
    let trace = simulate(&model, &step(), Rational::from_integer(1)).unwrap();
    assert_eq!(trace.channel("x").unwrap(), &[0.0, 1.75, 0.5]);
    assert_eq!(trace.times()[1], Rational::new(1, 2));

    let channel = ChannelGrid {
        times: vec![Rational::from_integer(0)],
        levels: vec![0.0, 1.0],
        interp: Interpolation::Hold,
    };
    let grid = Grid::new(BTreeMap::from([("u".to_string(), channel)])).unwrap();
    let cfg = SearchConfig {
        budget: 5,
        seed: 3,
        ..SearchConfig::default()
    };
    let result = falsify(&parse("G[0,1](x < 1.5)").unwrap(), &model, &grid, &cfg).unwrap();
    assert_eq!(result.status, FalsificationStatus::Falsified);
    assert_eq!(result.best_robustness, -0.25);
}

#[test]
fn external_model_receives_the_request() {
    // Echoes the horizon it was asked for as the final time stamp.
    let script = r#"read request; case "$request" in *'"horizon":2.5'*'"interp":"hold"'*) ;; *) exit 3;; esac
echo '{"protocol":1,"times":[0,2.5],"signals":{"x":[0,0]}}'"#;
    let trace = simulate(&external(script), &step(), Rational::new(5, 2)).unwrap();
    assert_eq!(trace.end_time(), Rational::new(5, 2));
}

#[test]
fn external_model_failures() {
    let failures = [
        "read request; exit 1",
        "read request; echo nonsense",
        r#"read request; echo '{"protocol":1,"times":[0,1],"signals":{"x":[0,0]}}'; echo '{}'"#,
        r#"read request; echo '{"protocol":1,"times":[0,2,1],"signals":{"x":[0,0,0]}}'"#,
        r#"read request; echo '{"protocol":2,"times":[0],"signals":{}}'"#,
        "read request",
    ];
    for script in failures {
        let outcome = simulate(&external(script), &step(), Rational::from_integer(1));
        assert!(outcome.is_err(), "{script}");
    }
    let missing = ModelSpec::new(ModelKind::External(vec!["/nonexistent/model".into()]));
    assert!(matches!(
        simulate(&missing, &step(), Rational::from_integer(1)),
        Err(PlantError::External(_))
    ));
}

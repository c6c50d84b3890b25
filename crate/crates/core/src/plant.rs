//! Systems under test: built-in ODE models integrated with fixed-step RK4, and external
//! simulators driven over a line-delimited JSON protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{format_rational, rational_from_f64, to_f64, Rational};
use crate::trace::{Trace, TraceError};

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("unknown model `{0}` (expected secondorder, cruise or external:<command>)")]
    UnknownModel(String),
    #[error("model `{model}` has no parameter `{name}`")]
    UnknownParameter { model: String, name: String },
    #[error("invalid model configuration: {0}")]
    InvalidSpec(String),
    #[error("invalid input signal: {0}")]
    InvalidInput(String),
    #[error("model input `{0}` is not driven by the input signal")]
    MissingInput(String),
    #[error("input signal drives `{0}`, which the model does not read")]
    UnexpectedInput(String),
    #[error("simulation horizon must be positive")]
    NonPositiveHorizon,
    #[error("external model: {0}")]
    External(String),
    #[error("external model returned a malformed response: {0}")]
    MalformedResponse(String),
    #[error("external model returned non-increasing times")]
    NonIncreasingTimes,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Zero-order hold.
    #[default]
    Hold,
    Linear,
}

/// Control points of one input channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInput {
    pub times: Vec<Rational>,
    pub values: Vec<f64>,
    pub interp: Interpolation,
}

impl ChannelInput {
    pub fn new(
        times: Vec<Rational>,
        values: Vec<f64>,
        interp: Interpolation,
    ) -> Result<Self, PlantError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(PlantError::InvalidInput(
                "need one value per control time and at least one point".into(),
            ));
        }
        if !times[0].is_zero() {
            return Err(PlantError::InvalidInput(
                "the first control time must be 0".into(),
            ));
        }
        if times.windows(2).any(|pair| pair[0] >= pair[1]) {
            return Err(PlantError::InvalidInput(
                "control times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            values,
            interp,
        })
    }

    /// Constant input.
    pub fn constant(value: f64) -> Self {
        Self {
            times: vec![Rational::zero()],
            values: vec![value],
            interp: Interpolation::Hold,
        }
    }

    /// Value at `t`; the last value is held beyond the final control point.
    pub fn value_at(&self, t: Rational) -> f64 {
        let next = self.times.partition_point(|time| *time <= t);
        let index = next.saturating_sub(1);
        match self.interp {
            Interpolation::Hold => self.values[index],
            Interpolation::Linear if next == 0 || next == self.times.len() => self.values[index],
            Interpolation::Linear => {
                let (t0, t1) = (self.times[index], self.times[next]);
                let weight = to_f64((t - t0) / (t1 - t0));
                self.values[index] + weight * (self.values[next] - self.values[index])
            }
        }
    }

    /// Value at `start + offset` for an offset inside a segment free of control points.
    fn value_in_segment(&self, start: Rational, offset: f64) -> f64 {
        let next = self.times.partition_point(|time| *time <= start);
        let index = next.saturating_sub(1);
        match self.interp {
            Interpolation::Linear if next > 0 && next < self.times.len() => {
                let (t0, t1) = (to_f64(self.times[index]), to_f64(self.times[next]));
                let t = to_f64(start) + offset;
                self.values[index] + (t - t0) / (t1 - t0) * (self.values[next] - self.values[index])
            }
            _ => self.values[index],
        }
    }
}

/// Input signal: control points per channel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputSignal {
    pub channels: BTreeMap<String, ChannelInput>,
}

impl InputSignal {
    pub fn single(channel: impl Into<String>, input: ChannelInput) -> Self {
        Self {
            channels: BTreeMap::from([(channel.into(), input)]),
        }
    }

    pub fn interpolate(&self, t: Rational) -> BTreeMap<String, f64> {
        self.channels
            .iter()
            .map(|(name, input)| (name.clone(), input.value_at(t)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelKind {
    /// Damped second-order system driven towards `gain * u`.
    SecondOrder,
    /// Vehicle speed with linear and quadratic drag and saturated throttle.
    Cruise,
    /// Program invoked once per simulation; the vector is the command line.
    External(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub parameters: BTreeMap<String, f64>,
    pub integrator_step: f64,
    pub sample_period: Rational,
}

pub const DEFAULT_INTEGRATOR_STEP: f64 = 0.01;

pub fn default_sample_period() -> Rational {
    Rational::new(1, 10)
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        let parameters = match kind {
            ModelKind::SecondOrder => [("zeta", 0.2), ("omega", 1.0), ("gain", 1.0)].as_slice(),
            ModelKind::Cruise => [("c1", 0.1), ("c2", 0.01)].as_slice(),
            ModelKind::External(_) => [].as_slice(),
        };
        Self {
            kind,
            parameters: parameters
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            integrator_step: DEFAULT_INTEGRATOR_STEP,
            sample_period: default_sample_period(),
        }
    }

    /// `secondorder`, `cruise`, or `external:<command> [args...]` (whitespace separated).
    pub fn parse(name: &str) -> Result<Self, PlantError> {
        let kind = match name.trim() {
            "secondorder" => ModelKind::SecondOrder,
            "cruise" => ModelKind::Cruise,
            other => match other.strip_prefix("external:") {
                Some(command) if !command.trim().is_empty() => {
                    ModelKind::External(command.split_whitespace().map(str::to_string).collect())
                }
                _ => return Err(PlantError::UnknownModel(other.to_string())),
            },
        };
        Ok(Self::new(kind))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::SecondOrder => "secondorder",
            ModelKind::Cruise => "cruise",
            ModelKind::External(_) => "external",
        }
    }

    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<(), PlantError> {
        match self.parameters.get_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(PlantError::UnknownParameter {
                model: self.name().into(),
                name: name.into(),
            }),
        }
    }

    /// Input channels a built-in model reads.
    pub fn inputs(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::SecondOrder | ModelKind::Cruise => &["u"],
            ModelKind::External(_) => &[],
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let step = self.integrator_step;
        if !(step.is_finite() && step > 0.0) {
            return Err(PlantError::InvalidSpec(
                "integrator step must be positive".into(),
            ));
        }
        if self.sample_period <= Rational::zero() {
            return Err(PlantError::InvalidSpec(
                "sample period must be positive".into(),
            ));
        }
        let ratio = to_f64(self.sample_period) / step;
        if (ratio - ratio.round()).abs() > 1e-12 * ratio || ratio.round() < 1.0 {
            return Err(PlantError::InvalidSpec(format!(
                "sample period {} is not an integer multiple of the integrator step {step}",
                format_rational(self.sample_period)
            )));
        }
        if let Some((name, value)) = self.parameters.iter().find(|(_, v)| !v.is_finite()) {
            return Err(PlantError::InvalidSpec(format!(
                "parameter {name} = {value} is not finite"
            )));
        }
        Ok(())
    }

    fn parameter(&self, name: &str) -> f64 {
        self.parameters[name]
    }
}

/// Output sample times: every period from 0, plus the horizon itself.
fn sample_times(period: Rational, horizon: Rational) -> Vec<Rational> {
    let count = (horizon / period).floor().to_integer();
    let mut times: Vec<Rational> = (0..=count)
        .map(|k| period * Rational::from_integer(k))
        .collect();
    if *times.last().unwrap() < horizon {
        times.push(horizon);
    }
    times
}

type Derivative = dyn Fn(&[f64], f64) -> Vec<f64>;

/// Simulates `model` under `input` on `[0, horizon]`.
pub fn simulate(
    model: &ModelSpec,
    input: &InputSignal,
    horizon: Rational,
) -> Result<Trace, PlantError> {
    if horizon <= Rational::zero() {
        return Err(PlantError::NonPositiveHorizon);
    }
    model.validate()?;
    match &model.kind {
        ModelKind::External(command) => {
            simulate_external(command, model.sample_period, input, horizon)
        }
        ModelKind::SecondOrder | ModelKind::Cruise => simulate_builtin(model, input, horizon),
    }
}

fn simulate_builtin(
    model: &ModelSpec,
    input: &InputSignal,
    horizon: Rational,
) -> Result<Trace, PlantError> {
    let expected = model.inputs();
    for name in expected {
        if !input.channels.contains_key(*name) {
            return Err(PlantError::MissingInput(name.to_string()));
        }
    }
    if let Some(extra) = input
        .channels
        .keys()
        .find(|name| !expected.contains(&name.as_str()))
    {
        return Err(PlantError::UnexpectedInput(extra.clone()));
    }
    let u = &input.channels["u"];
    let (output, mut state): (&str, Vec<f64>) = match model.kind {
        ModelKind::SecondOrder => ("x", vec![0.0, 0.0]),
        _ => ("v", vec![0.0]),
    };
    let derivative: Box<Derivative> = match model.kind {
        ModelKind::SecondOrder => {
            let (zeta, omega, gain) = (
                model.parameter("zeta"),
                model.parameter("omega"),
                model.parameter("gain"),
            );
            Box::new(move |s, u| {
                vec![
                    s[1],
                    omega * omega * (gain * u - s[0]) - 2.0 * zeta * omega * s[1],
                ]
            })
        }
        _ => {
            let (c1, c2) = (model.parameter("c1"), model.parameter("c2"));
            Box::new(move |s, u| vec![u.clamp(0.0, 1.0) - c1 * s[0] - c2 * s[0] * s[0]])
        }
    };

    let times = sample_times(model.sample_period, horizon);
    // Integrate segment by segment so input discontinuities fall on segment boundaries.
    let mut breakpoints: BTreeSet<Rational> = times.iter().copied().collect();
    breakpoints.extend(u.times.iter().copied().filter(|t| *t < horizon));
    let breakpoints: Vec<Rational> = breakpoints.into_iter().collect();
    let mut samples = vec![state[0]];
    let mut next_sample = 1;
    for pair in breakpoints.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let span = to_f64(end - start);
        let substeps = (span / model.integrator_step).round().max(1.0);
        let h = span / substeps;
        for k in 0..substeps.to_usize().unwrap() {
            let offset = k as f64 * h;
            let at = |dt: f64| u.value_in_segment(start, offset + dt);
            state = rk4_step(&*derivative, &state, h, [at(0.0), at(h / 2.0), at(h)]);
        }
        if times.get(next_sample) == Some(&end) {
            samples.push(state[0]);
            next_sample += 1;
        }
    }
    Ok(Trace::new(
        times,
        BTreeMap::from([(output.to_string(), samples)]),
    )?)
}

/// One classical Runge-Kutta step; `inputs` are the input values at the start, midpoint
/// and end of the step.
fn rk4_step(
    derivative: &dyn Fn(&[f64], f64) -> Vec<f64>,
    state: &[f64],
    h: f64,
    inputs: [f64; 3],
) -> Vec<f64> {
    let shifted = |k: &[f64], scale: f64| -> Vec<f64> {
        state.iter().zip(k).map(|(s, d)| s + scale * d).collect()
    };
    let k1 = derivative(state, inputs[0]);
    let k2 = derivative(&shifted(&k1, h / 2.0), inputs[1]);
    let k3 = derivative(&shifted(&k2, h / 2.0), inputs[1]);
    let k4 = derivative(&shifted(&k3, h), inputs[2]);
    (0..state.len())
        .map(|i| state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[derive(Serialize)]
struct WireInput<'a> {
    times: Vec<f64>,
    values: &'a [f64],
    interp: Interpolation,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    protocol: u32,
    horizon: f64,
    sample_period: f64,
    inputs: BTreeMap<&'a str, WireInput<'a>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireResponse {
    protocol: u32,
    times: Vec<f64>,
    signals: BTreeMap<String, Vec<f64>>,
}

/// The JSON request line sent to an external model.
pub fn external_request(sample_period: Rational, input: &InputSignal, horizon: Rational) -> String {
    let request = WireRequest {
        protocol: 1,
        horizon: to_f64(horizon),
        sample_period: to_f64(sample_period),
        inputs: input
            .channels
            .iter()
            .map(|(name, channel)| {
                let wire = WireInput {
                    times: channel.times.iter().copied().map(to_f64).collect(),
                    values: &channel.values,
                    interp: channel.interp,
                };
                (name.as_str(), wire)
            })
            .collect(),
    };
    serde_json::to_string(&request).expect("request serializes")
}

/// Parses an external model's response line into a trace.
pub fn parse_external_response(line: &str) -> Result<Trace, PlantError> {
    let response: WireResponse =
        serde_json::from_str(line).map_err(|e| PlantError::MalformedResponse(e.to_string()))?;
    if response.protocol != 1 {
        return Err(PlantError::MalformedResponse(format!(
            "unsupported protocol {}",
            response.protocol
        )));
    }
    if response.times.first() != Some(&0.0) {
        return Err(PlantError::MalformedResponse(
            "times must start at 0".into(),
        ));
    }
    if response
        .times
        .windows(2)
        .any(|pair| pair[0].partial_cmp(&pair[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(PlantError::NonIncreasingTimes);
    }
    let times = response
        .times
        .iter()
        .map(|t| {
            rational_from_f64(*t)
                .map_err(|e| PlantError::MalformedResponse(format!("time {t}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if times.windows(2).any(|pair| pair[0] >= pair[1]) {
        return Err(PlantError::NonIncreasingTimes);
    }
    Ok(Trace::new(times, response.signals)?)
}

fn simulate_external(
    command: &[String],
    sample_period: Rational,
    input: &InputSignal,
    horizon: Rational,
) -> Result<Trace, PlantError> {
    let external = |message: String| PlantError::External(message);
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| external(format!("cannot start `{}`: {e}", command[0])))?;
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let request = external_request(sample_period, input, horizon);
        writeln!(stdin, "{request}").map_err(|e| external(format!("writing request: {e}")))?;
    }
    let mut lines = Vec::new();
    for line in BufReader::new(child.stdout.take().expect("stdout is piped")).lines() {
        let line = line.map_err(|e| external(format!("reading response: {e}")))?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    let status = child.wait().map_err(|e| external(e.to_string()))?;
    if !status.success() {
        return Err(external(format!("process exited with {status}")));
    }
    match lines.as_slice() {
        [line] => parse_external_response(line),
        [] => Err(PlantError::MalformedResponse("no response line".into())),
        _ => Err(PlantError::MalformedResponse(format!(
            "expected one response line, got {}",
            lines.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn peak(trace: &Trace, channel: &str) -> f64 {
        trace
            .channel(channel)
            .unwrap()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn interpolation() {
        let hold =
            ChannelInput::new(vec![r(0), r(5)], vec![0.0, 1.0], Interpolation::Hold).unwrap();
        assert_eq!(hold.value_at(Rational::new(49, 10)), 0.0);
        assert_eq!(hold.value_at(r(5)), 1.0);
        assert_eq!(hold.value_at(r(99)), 1.0);
        let linear =
            ChannelInput::new(vec![r(0), r(10)], vec![0.0, 1.0], Interpolation::Linear).unwrap();
        assert_eq!(linear.value_at(r(5)), 0.5);
        assert_eq!(linear.value_at(r(12)), 1.0);
        assert!(ChannelInput::new(vec![r(1)], vec![0.0], Interpolation::Hold).is_err());
        assert!(ChannelInput::new(vec![r(0), r(0)], vec![0.0, 1.0], Interpolation::Hold).is_err());
    }

    #[test]
    fn equilibria() {
        for name in ["secondorder", "cruise"] {
            let model = ModelSpec::parse(name).unwrap();
            let trace = simulate(
                &model,
                &InputSignal::single("u", ChannelInput::constant(0.0)),
                r(10),
            )
            .unwrap();
            assert!(trace
                .channels()
                .values()
                .next()
                .unwrap()
                .iter()
                .all(|v| *v == 0.0));
        }
    }

    #[test]
    fn sampling_grid_includes_horizon() {
        let model = ModelSpec::parse("secondorder").unwrap();
        let trace = simulate(
            &model,
            &InputSignal::single("u", ChannelInput::constant(1.0)),
            Rational::new(21, 20),
        )
        .unwrap();
        assert_eq!(trace.len(), 12);
        assert_eq!(trace.end_time(), Rational::new(21, 20));
    }

    #[test]
    fn step_response_peak() {
        let model = ModelSpec::parse("secondorder").unwrap();
        let trace = simulate(
            &model,
            &InputSignal::single("u", ChannelInput::constant(1.0)),
            r(40),
        )
        .unwrap();
        let zeta: f64 = 0.2;
        let overshoot = (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        // The sampled peak may miss the continuous peak by a fraction of a sample period.
        assert!((peak(&trace, "x") - (1.0 + overshoot)).abs() < 1e-3);
    }

    #[test]
    fn cruise_saturates_input() {
        let model = ModelSpec::parse("cruise").unwrap();
        let run = |u: f64| {
            simulate(
                &model,
                &InputSignal::single("u", ChannelInput::constant(u)),
                r(50),
            )
            .unwrap()
        };
        assert_eq!(run(5.0), run(1.0));
    }

    #[test]
    fn configuration_errors() {
        assert!(matches!(
            ModelSpec::parse("pendulum"),
            Err(PlantError::UnknownModel(_))
        ));
        let mut model = ModelSpec::parse("secondorder").unwrap();
        assert!(model.set_parameter("zeta", 0.5).is_ok());
        assert!(matches!(
            model.set_parameter("c1", 0.5),
            Err(PlantError::UnknownParameter { .. })
        ));
        let u = InputSignal::single("u", ChannelInput::constant(1.0));
        assert!(matches!(
            simulate(&model, &u, r(0)),
            Err(PlantError::NonPositiveHorizon)
        ));
        assert!(matches!(
            simulate(
                &model,
                &InputSignal::single("w", ChannelInput::constant(1.0)),
                r(1)
            ),
            Err(PlantError::MissingInput(_))
        ));
        model.integrator_step = 0.03;
        assert!(matches!(
            simulate(&model, &u, r(1)),
            Err(PlantError::InvalidSpec(_))
        ));
    }

    #[test]
    fn wire_format() {
        let input = InputSignal::single(
            "u",
            ChannelInput::new(vec![r(0), r(5)], vec![0.0, 1.0], Interpolation::Linear).unwrap(),
        );
        assert_eq!(
            external_request(Rational::new(1, 2), &input, r(10)),
            r#"{"protocol":1,"horizon":10.0,"sample_period":0.5,"inputs":{"u":{"times":[0.0,5.0],"values":[0.0,1.0],"interp":"linear"}}}"#
        );
        let trace =
            parse_external_response(r#"{"protocol":1,"times":[0,0.5,1],"signals":{"y":[1,2,3]}}"#)
                .unwrap();
        assert_eq!(trace.times()[1], Rational::new(1, 2));
        assert!(matches!(
            parse_external_response(r#"{"protocol":1,"times":[0,1,1],"signals":{"y":[1,2,3]}}"#),
            Err(PlantError::NonIncreasingTimes)
        ));
        assert!(matches!(
            parse_external_response("hello"),
            Err(PlantError::MalformedResponse(_))
        ));
        assert!(
            parse_external_response(r#"{"protocol":1,"times":[0,1],"signals":{"y":[1]}}"#).is_err()
        );
    }
}

//! Parameterized signal templates that instantiate to formulas.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::logic::{Atom, Comparator, Formula, TimeInterval};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` has no parameter `{name}`")]
    UnknownParameter {
        template: &'static str,
        name: String,
    },
    #[error("template `{template}` is missing parameter `{name}`")]
    MissingParameter {
        template: &'static str,
        name: &'static str,
    },
    #[error("parameter `{name}` = {value} violates {bound}")]
    OutOfBounds {
        name: &'static str,
        value: String,
        bound: &'static str,
    },
    #[error("parameter `{name}` of `{template}` is not monotone and cannot be mined")]
    NotMonotone {
        template: &'static str,
        name: String,
    },
    #[error("malformed template literal: {0}")]
    Syntax(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Settling,
    Overshoot,
}

impl TemplateId {
    pub fn name(self) -> &'static str {
        match self {
            TemplateId::Settling => "settling",
            TemplateId::Overshoot => "overshoot",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, TemplateError> {
        match name {
            "settling" => Ok(TemplateId::Settling),
            "overshoot" => Ok(TemplateId::Overshoot),
            other => Err(TemplateError::UnknownTemplate(other.to_string())),
        }
    }

    pub fn descriptor(self) -> &'static TemplateDescriptor {
        CATALOG
            .iter()
            .find(|d| d.id == self)
            .expect("every template is catalogued")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterBound {
    Positive,
    NonNegative,
    /// Strictly greater than the named parameter.
    GreaterThan(&'static str),
    Unbounded,
}

impl ParameterBound {
    fn describe(self) -> &'static str {
        match self {
            ParameterBound::Positive => "> 0",
            ParameterBound::NonNegative => ">= 0",
            ParameterBound::GreaterThan("ts") => "> ts",
            ParameterBound::GreaterThan(_) => "> other parameter",
            ParameterBound::Unbounded => "any value",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParameterDescriptor {
    pub name: &'static str,
    pub bound: ParameterBound,
    /// Satisfaction on a fixed trace never turns false as this parameter grows.
    pub monotone: bool,
    pub example: &'static str,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TemplateDescriptor {
    pub id: TemplateId,
    /// The first parameter is the signal channel and is given positionally.
    pub parameters: &'static [ParameterDescriptor],
    pub doc: &'static str,
}

impl TemplateDescriptor {
    /// Instance built from the documented example values.
    pub fn example(&self) -> TemplateInstance {
        let mut instance = TemplateInstance::new(self.id, "x");
        for parameter in &self.parameters[1..] {
            instance.params.insert(
                parameter.name.to_string(),
                parse_rational(parameter.example).unwrap(),
            );
        }
        instance
    }

    fn parameter(&self, name: &str) -> Option<&'static ParameterDescriptor> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

const CHANNEL: ParameterDescriptor = ParameterDescriptor {
    name: "channel",
    bound: ParameterBound::Unbounded,
    monotone: false,
    example: "x",
    doc: "signal under test",
};

static CATALOG: [TemplateDescriptor; 2] = [
    TemplateDescriptor {
        id: TemplateId::Settling,
        parameters: &[
            CHANNEL,
            ParameterDescriptor {
                name: "ref",
                bound: ParameterBound::Unbounded,
                monotone: false,
                example: "1",
                doc: "reference value",
            },
            ParameterDescriptor {
                name: "r",
                bound: ParameterBound::Positive,
                monotone: true,
                example: "0.1",
                doc: "half-width of the settling region",
            },
            ParameterDescriptor {
                name: "ts",
                bound: ParameterBound::NonNegative,
                monotone: false,
                example: "20",
                doc: "settling time",
            },
            ParameterDescriptor {
                name: "H",
                bound: ParameterBound::GreaterThan("ts"),
                monotone: false,
                example: "40",
                doc: "end of the observation window",
            },
        ],
        doc: "from ts until H the signal stays strictly inside (ref - r, ref + r)",
    },
    TemplateDescriptor {
        id: TemplateId::Overshoot,
        parameters: &[
            CHANNEL,
            ParameterDescriptor {
                name: "ref",
                bound: ParameterBound::Positive,
                monotone: false,
                example: "1",
                doc: "reference value",
            },
            ParameterDescriptor {
                name: "m",
                bound: ParameterBound::Positive,
                monotone: true,
                example: "0.2",
                doc: "relative overshoot margin",
            },
            ParameterDescriptor {
                name: "H",
                bound: ParameterBound::NonNegative,
                monotone: false,
                example: "40",
                doc: "end of the observation window",
            },
        ],
        doc: "up to H the signal stays strictly below ref * (1 + m)",
    },
];

/// Every shipped template, in stable order.
pub fn list_templates() -> &'static [TemplateDescriptor] {
    &CATALOG
}

/// A template with concrete parameter values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateInstance {
    pub template: TemplateId,
    pub channel: String,
    pub params: BTreeMap<String, Rational>,
}

impl TemplateInstance {
    pub fn new(template: TemplateId, channel: impl Into<String>) -> Self {
        Self {
            template,
            channel: channel.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: Rational) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Parses `template:<id>(<channel>, name=value, ...)`; the `template:` prefix is optional.
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let text = text.trim();
        let text = text.strip_prefix("template:").unwrap_or(text);
        let open = text
            .find('(')
            .ok_or_else(|| TemplateError::Syntax("expected `(`".into()))?;
        let body = text[open + 1..]
            .trim_end()
            .strip_suffix(')')
            .ok_or_else(|| TemplateError::Syntax("expected closing `)`".into()))?;
        let template = TemplateId::from_name(text[..open].trim())?;
        let descriptor = template.descriptor();
        let mut arguments = body.split(',').map(str::trim);
        let channel = arguments
            .next()
            .filter(|c| !c.is_empty() && !c.contains('='));
        let channel = channel.ok_or_else(|| {
            TemplateError::Syntax("the first argument must be a channel name".into())
        })?;
        let mut instance = Self::new(template, channel);
        for argument in arguments {
            let (name, value) = argument.split_once('=').ok_or_else(|| {
                TemplateError::Syntax(format!("expected `name=value`, found `{argument}`"))
            })?;
            let name = name.trim();
            if descriptor.parameter(name).is_none() || name == "channel" {
                return Err(TemplateError::UnknownParameter {
                    template: template.name(),
                    name: name.to_string(),
                });
            }
            let value = parse_rational(value.trim())
                .map_err(|e| TemplateError::Syntax(format!("{name}: {e}")))?;
            instance.params.insert(name.to_string(), value);
        }
        Ok(instance)
    }

    fn get(&self, name: &'static str) -> Result<Rational, TemplateError> {
        self.params
            .get(name)
            .copied()
            .ok_or(TemplateError::MissingParameter {
                template: self.template.name(),
                name,
            })
    }

    fn validate(&self) -> Result<(), TemplateError> {
        let descriptor = self.template.descriptor();
        if let Some(name) = self.params.keys().find(|name| {
            descriptor
                .parameter(name)
                .is_none_or(|p| p.name == "channel")
        }) {
            return Err(TemplateError::UnknownParameter {
                template: self.template.name(),
                name: name.clone(),
            });
        }
        for parameter in &descriptor.parameters[1..] {
            let value = self.get(parameter.name)?;
            let ok = match parameter.bound {
                ParameterBound::Positive => value > Rational::zero(),
                ParameterBound::NonNegative => value >= Rational::zero(),
                ParameterBound::GreaterThan(other) => value > self.get(other)?,
                ParameterBound::Unbounded => true,
            };
            if !ok {
                return Err(TemplateError::OutOfBounds {
                    name: parameter.name,
                    value: format_rational(value),
                    bound: parameter.bound.describe(),
                });
            }
        }
        Ok(())
    }

    pub fn instantiate(&self) -> Result<Formula, TemplateError> {
        self.validate()?;
        let atom = |comparator, bound| {
            Formula::atom(Atom::threshold(self.channel.clone(), comparator, bound))
        };
        match self.template {
            TemplateId::Settling => {
                let (reference, r) = (self.get("ref")?, self.get("r")?);
                let window =
                    TimeInterval::new(self.get("ts")?, self.get("H")?).expect("validated bounds");
                Ok(Formula::always(
                    window,
                    Formula::and(vec![
                        atom(Comparator::Gt, reference - r),
                        atom(Comparator::Lt, reference + r),
                    ]),
                ))
            }
            TemplateId::Overshoot => {
                let limit = self.get("ref")? * (Rational::one() + self.get("m")?);
                let window =
                    TimeInterval::new(Rational::zero(), self.get("H")?).expect("validated bounds");
                Ok(Formula::always(window, atom(Comparator::Lt, limit)))
            }
        }
    }

    /// Checks that `name` can be mined by bisection.
    pub fn require_monotone(&self, name: &str) -> Result<(), TemplateError> {
        match self.template.descriptor().parameter(name) {
            Some(parameter) if parameter.monotone => Ok(()),
            Some(_) => Err(TemplateError::NotMonotone {
                template: self.template.name(),
                name: name.to_string(),
            }),
            None => Err(TemplateError::UnknownParameter {
                template: self.template.name(),
                name: name.to_string(),
            }),
        }
    }
}

impl fmt::Display for TemplateInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "template:{}({}", self.template.name(), self.channel)?;
        for parameter in &self.template.descriptor().parameters[1..] {
            if let Some(value) = self.params.get(parameter.name) {
                write!(f, ",{}={}", parameter.name, format_rational(*value))?;
            }
        }
        f.write_str(")")
    }
}

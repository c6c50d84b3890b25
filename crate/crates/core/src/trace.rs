//! Multi-channel sampled signals and their CSV representation.

use std::collections::BTreeMap;
use std::io;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace has no samples")]
    Empty,
    #[error("trace must start at time 0, found {0}")]
    NonZeroStart(String),
    #[error("sample times must be strictly increasing (row {row}: {time})")]
    NotIncreasing { row: usize, time: String },
    #[error("channel `{channel}` has {found} samples, expected {expected}")]
    LengthMismatch {
        channel: String,
        expected: usize,
        found: usize,
    },
    #[error("channel `{0}` appears more than once")]
    DuplicateChannel(String),
    #[error("CSV header must start with `time`")]
    MissingTimeColumn,
    #[error("row {row}, column `{column}`: {message}")]
    BadCell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sampled signal: strictly increasing exact timestamps starting at 0 and one real
/// value per timestamp for every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    times: Vec<Rational>,
    channels: BTreeMap<String, Vec<f64>>,
}

impl Trace {
    pub fn new(
        times: Vec<Rational>,
        channels: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, TraceError> {
        let first = *times.first().ok_or(TraceError::Empty)?;
        if !first.is_zero() {
            return Err(TraceError::NonZeroStart(format_rational(first)));
        }
        if let Some(row) = times.windows(2).position(|pair| pair[0] >= pair[1]) {
            return Err(TraceError::NotIncreasing {
                row: row + 1,
                time: format_rational(times[row + 1]),
            });
        }
        for (channel, values) in &channels {
            if values.len() != times.len() {
                return Err(TraceError::LengthMismatch {
                    channel: channel.clone(),
                    expected: times.len(),
                    found: values.len(),
                });
            }
        }
        Ok(Self { times, channels })
    }

    /// Uniformly sampled trace `k * period` for `k in 0..len`.
    pub fn uniform(
        period: Rational,
        channels: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, TraceError> {
        let len = channels.values().next().map_or(0, Vec::len);
        Self::sampled(period, len, channels)
    }

    /// Like [`Trace::uniform`] with an explicit sample count, so a trace may carry no channels.
    pub fn sampled(
        period: Rational,
        len: usize,
        channels: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, TraceError> {
        let times = (0..len)
            .map(|k| period * Rational::from_integer(k as i64))
            .collect();
        Self::new(times, channels)
    }

    pub fn times(&self) -> &[Rational] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> Rational {
        *self.times.last().expect("traces are nonempty")
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn channels(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.channels
    }

    /// Index of the sample taken exactly at `time`.
    pub fn index_of(&self, time: Rational) -> Option<usize> {
        self.times.binary_search(&time).ok()
    }

    /// Index range of the samples with `lower <= time <= upper`.
    pub fn window(&self, lower: Rational, upper: Rational) -> std::ops::Range<usize> {
        let start = self.times.partition_point(|t| *t < lower);
        let end = self.times.partition_point(|t| *t <= upper);
        start..end.max(start)
    }

    pub fn read_csv(reader: impl io::Read) -> Result<Self, TraceError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv.headers()?.clone();
        if headers.get(0) != Some("time") {
            return Err(TraceError::MissingTimeColumn);
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        let mut times = Vec::new();
        for (row_index, record) in csv.records().enumerate() {
            let record = record?;
            let row = row_index + 2;
            let cell = record.get(0).unwrap_or_default();
            let time = parse_rational(cell).map_err(|e| TraceError::BadCell {
                row,
                column: "time".into(),
                message: e.to_string(),
            })?;
            times.push(time);
            for (column, name) in names.iter().enumerate() {
                let cell = record.get(column + 1).unwrap_or_default();
                let value: f64 = cell.parse().map_err(|_| TraceError::BadCell {
                    row,
                    column: name.clone(),
                    message: format!("`{cell}` is not a number"),
                })?;
                columns[column].push(value);
            }
        }
        let mut channels = BTreeMap::new();
        for (name, values) in names.into_iter().zip(columns) {
            if channels.insert(name.clone(), values).is_some() {
                return Err(TraceError::DuplicateChannel(name));
            }
        }
        Self::new(times, channels)
    }

    pub fn write_csv(&self, writer: impl io::Write) -> Result<(), TraceError> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["time".to_string()];
        header.extend(self.channels.keys().cloned());
        csv.write_record(&header)?;
        for (index, time) in self.times.iter().enumerate() {
            let mut row = vec![format_rational(*time)];
            row.extend(
                self.channels
                    .values()
                    .map(|values| values[index].to_string()),
            );
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buffer = Vec::new();
        self.write_csv(&mut buffer)
            .expect("writing to memory cannot fail");
        String::from_utf8(buffer).expect("CSV output is UTF-8")
    }
}

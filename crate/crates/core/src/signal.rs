//! Uniformly sampled voltage traces and the plain-text signal file format.
//!
//! ```text
//! # sample_rate_hz: 20000
//! # t0_s: 0.0
//! 0.0123
//! -0.0040
//! ...
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("sample rate must be finite and positive, got {0}")]
    BadSampleRate(f64),
    #[error("a signal needs at least one sample")]
    Empty,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing `# sample_rate_hz:` header")]
    MissingRate,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A uniformly sampled voltage trace starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    sample_rate: f64,
    samples: Vec<f64>,
    t0: f64,
}

impl SampledSignal {
    pub fn new(sample_rate: f64, samples: Vec<f64>, t0: f64) -> Result<Self, SignalError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::BadSampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { index });
        }
        Ok(Self {
            sample_rate,
            samples,
            t0,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time stamp of sample `i`. Every time-based predicate in the crate goes
    /// through this so that callers checking a window agree bit-for-bit.
    #[inline]
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len() - 1)
    }

    /// Index of the first sample whose time is `>= t`, clamped to `len()`.
    pub fn index_at_or_after(&self, t: f64) -> usize {
        let approx = ((t - self.t0) * self.sample_rate).ceil();
        if approx <= 0.0 {
            return 0;
        }
        let mut i = (approx as usize).min(self.samples.len());
        // the float estimate can be off by one in either direction
        while i > 0 && self.time_at(i - 1) >= t {
            i -= 1;
        }
        while i < self.samples.len() && self.time_at(i) < t {
            i += 1;
        }
        i
    }

    /// Same rate and start time, new sample values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self, SignalError> {
        Self::new(self.sample_rate, samples, self.t0)
    }

    /// Samples with time in `[from, to)`, keeping the time base.
    pub fn slice_time(&self, from: f64, to: f64) -> Option<Self> {
        let a = self.index_at_or_after(from);
        let b = self.index_at_or_after(to);
        if b <= a {
            return None;
        }
        Some(Self {
            sample_rate: self.sample_rate,
            samples: self.samples[a..b].to_vec(),
            t0: self.time_at(a),
        })
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, SignalError> {
        let mut rate = None;
        let mut t0 = 0.0;
        let mut samples = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let parse = |v: &str| {
                    v.trim().parse::<f64>().map_err(|e| SignalError::Parse {
                        line: n + 1,
                        msg: e.to_string(),
                    })
                };
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("sample_rate_hz:") {
                    rate = Some(parse(v)?);
                } else if let Some(v) = comment.strip_prefix("t0_s:") {
                    t0 = parse(v)?;
                }
                continue;
            }
            let v = trimmed.parse::<f64>().map_err(|e| SignalError::Parse {
                line: n + 1,
                msg: format!("{trimmed:?}: {e}"),
            })?;
            samples.push(v);
        }
        Self::new(rate.ok_or(SignalError::MissingRate)?, samples, t0)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut buf = String::with_capacity(self.samples.len() * 12 + 64);
        let _ = writeln!(buf, "# sample_rate_hz: {}", self.sample_rate);
        let _ = writeln!(buf, "# t0_s: {}", self.t0);
        for v in &self.samples {
            let _ = writeln!(buf, "{v}");
        }
        w.write_all(buf.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            SampledSignal::new(0.0, vec![1.0], 0.0),
            Err(SignalError::BadSampleRate(_))
        ));
        assert!(matches!(
            SampledSignal::new(f64::NAN, vec![1.0], 0.0),
            Err(SignalError::BadSampleRate(_))
        ));
        assert!(matches!(
            SampledSignal::new(10.0, vec![], 0.0),
            Err(SignalError::Empty)
        ));
    }

    #[test]
    fn index_lookup_matches_time_predicate() {
        let s = SampledSignal::new(1000.0, vec![0.0; 1000], 0.25).unwrap();
        for &t in &[0.0, 0.25, 0.2500001, 0.3, 0.7, 1.249, 1.25, 2.0] {
            let i = s.index_at_or_after(t);
            if i < s.len() {
                assert!(s.time_at(i) >= t);
            }
            if i > 0 {
                assert!(s.time_at(i - 1) < t);
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let s = SampledSignal::new(20000.0, vec![0.5, -1.25, 3e-6], 1.5).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = SampledSignal::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn file_without_rate_is_rejected() {
        let text = "0.1\n0.2\n";
        assert!(matches!(
            SampledSignal::read_from(text.as_bytes()),
            Err(SignalError::MissingRate)
        ));
    }
}

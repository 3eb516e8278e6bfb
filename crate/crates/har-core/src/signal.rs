//! De-noising, resampling, and windowing of angle signals.
//!
//! The low-pass stage is a Butterworth IIR realised as cascaded biquad
//! sections and applied forward then backward, so the net phase shift is
//! zero. Edges are handled by odd-reflection padding with steady-state
//! initial conditions, which keeps transients out of short recordings.

use crate::dataset::{ActivityLabel, RawRecording};
use crate::error::{Error, Result};

/// A uniformly sampled angle signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<f64>,
    pub rate_hz: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rate_hz must be positive, got {rate_hz}"
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "time series contains a non-finite sample {bad}"
            )));
        }
        Ok(TimeSeries { samples, rate_hz })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A fixed-length slice of a recording, used as one classification instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub values: Vec<f64>,
    pub label: ActivityLabel,
    pub subject_id: u32,
}

/// One second-order section in direct form II transposed.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Run the section over `x` in place, starting from the steady-state
    /// response to a constant input equal to the first sample.
    fn run(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        // DC gain is 1 for these lowpass sections; the steady state for a
        // constant input u is s1 = (1 - b0) u, s2 = (b2 - a2) u.
        let mut s1 = (1.0 - self.b0) * first;
        let mut s2 = (self.b2 - self.a2) * first;
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b0 * input + s1;
            s1 = self.b1 * input - self.a1 * out + s2;
            s2 = self.b2 * input - self.a2 * out;
            *v = out;
        }
    }
}

/// Butterworth lowpass of arbitrary order as biquad sections (plus one
/// first-order section when the order is odd), designed by bilinear
/// transform with the cutoff pre-warped onto the digital axis.
fn design_butterworth_lowpass(order: usize, cutoff_hz: f64, rate_hz: f64) -> Vec<Biquad> {
    let omega0 = std::f64::consts::TAU * cutoff_hz / rate_hz;
    let cos_w = omega0.cos();
    let sin_w = omega0.sin();
    let mut sections = Vec::with_capacity(order / 2 + 1);

    for k in 0..order / 2 {
        // Pole pair k of the analog prototype sits at angle
        // (2k + 1) * pi / (2n) from the negative real axis.
        let q = 1.0 / (2.0 * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * order) as f64).sin());
        let alpha = sin_w / (2.0 * q);
        let a0 = 1.0 + alpha;
        sections.push(Biquad {
            b0: (1.0 - cos_w) / 2.0 / a0,
            b1: (1.0 - cos_w) / a0,
            b2: (1.0 - cos_w) / 2.0 / a0,
            a1: -2.0 * cos_w / a0,
            a2: (1.0 - alpha) / a0,
        });
    }
    if order % 2 == 1 {
        // Real pole, expressed as a degenerate biquad.
        let k = (omega0 / 2.0).tan();
        let a0 = 1.0 + k;
        sections.push(Biquad {
            b0: k / a0,
            b1: k / a0,
            b2: 0.0,
            a1: (k - 1.0) / a0,
            a2: 0.0,
        });
    }
    sections
}

/// Extend the signal at both ends by odd reflection about the endpoint
/// values, the usual edge treatment for forward-backward filtering.
fn pad_odd_reflect(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(2.0 * x[0] - x[i]);
    }
    out.extend_from_slice(x);
    for i in 1..=pad {
        out.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    out
}

/// Zero-phase lowpass: Butterworth cascade applied forward then backward.
///
/// The result has the same length and rate as the input. Padding length is
/// `3 * (order + 1)` samples of odd reflection at each end (at least
/// `3 * order` as required), truncated when the signal is shorter.
pub fn lowpass_zero_phase(ts: &TimeSeries, cutoff_hz: f64, order: usize) -> Result<TimeSeries> {
    let nyquist = ts.rate_hz / 2.0;
    if !(cutoff_hz > 0.0) || cutoff_hz >= nyquist {
        return Err(Error::CutoffAboveNyquist {
            cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    if order < 1 {
        return Err(Error::InvalidArgument(format!(
            "filter order must be at least 1, got {order}"
        )));
    }
    if ts.samples.len() < 2 {
        return Ok(ts.clone());
    }

    let sections = design_butterworth_lowpass(order, cutoff_hz, ts.rate_hz);
    let pad = (3 * (order + 1)).min(ts.samples.len() - 1);
    let mut x = pad_odd_reflect(&ts.samples, pad);

    for section in &sections {
        section.run(&mut x);
    }
    x.reverse();
    for section in &sections {
        section.run(&mut x);
    }
    x.reverse();

    let samples = x[pad..pad + ts.samples.len()].to_vec();
    TimeSeries::new(samples, ts.rate_hz)
}

/// Keep every k-th sample, where k = rate / target must be an integer.
pub fn downsample(ts: &TimeSeries, target_hz: f64) -> Result<TimeSeries> {
    if !(target_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target rate must be positive, got {target_hz}"
        )));
    }
    let ratio = ts.rate_hz / target_hz;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 {
        return Err(Error::NonIntegerDecimation {
            from_hz: ts.rate_hz,
            to_hz: target_hz,
            ratio,
        });
    }
    let k = k as usize;
    let samples = ts.samples.iter().step_by(k).copied().collect();
    TimeSeries::new(samples, target_hz)
}

/// Slice a series into fixed-size windows starting at 0, stride, 2*stride, ...
///
/// A series shorter than `size` yields no windows.
pub fn make_windows(
    ts: &TimeSeries,
    size: usize,
    stride: usize,
    label: ActivityLabel,
    subject_id: u32,
) -> Vec<Window> {
    assert!(size >= 1, "window size must be at least 1");
    assert!(stride >= 1, "stride must be at least 1");
    if ts.samples.len() < size {
        return Vec::new();
    }
    let count = (ts.samples.len() - size) / stride + 1;
    (0..count)
        .map(|i| {
            let start = i * stride;
            Window {
                values: ts.samples[start..start + size].to_vec(),
                label,
                subject_id,
            }
        })
        .collect()
}

/// Filter at the source rate, then decimate. Doing it in this order keeps
/// the anti-aliasing effect of the lowpass.
pub fn preprocess(rec: &RawRecording, cfg: &crate::config::PipelineConfig) -> Result<TimeSeries> {
    let ts = TimeSeries::new(rec.samples.clone(), rec.source_rate_hz)?;
    let filtered = lowpass_zero_phase(&ts, cfg.cutoff_hz, cfg.filter_order)?;
    downsample(&filtered, cfg.target_hz)
}

/// Preprocess and window one recording.
pub fn windows_for_recording(
    rec: &RawRecording,
    cfg: &crate::config::PipelineConfig,
) -> Result<Vec<Window>> {
    let ts = preprocess(rec, cfg)?;
    Ok(make_windows(
        &ts,
        cfg.window_size,
        cfg.stride,
        rec.activity,
        rec.subject_id,
    ))
}

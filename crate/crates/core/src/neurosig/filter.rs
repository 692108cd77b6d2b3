//! Butterworth band-pass design and zero-phase (forward-backward) filtering.
//!
//! The design follows the textbook route: analog low-pass prototype, band-pass
//! frequency transform with pre-warped corners, bilinear transform, then poles
//! paired into second-order sections. An order-2 prototype gives a 4-pole
//! band-pass realised as two biquads. Forward-backward application squares the
//! magnitude response and cancels the phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::NeuroError;
use crate::signal::SampledSignal;

/// One biquad in transposed direct form II, `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Frequency response at normalised angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + z1 * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z1 * self.a[1] + z2 * self.a[2];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// Internal state for a constant unit input already at steady state.
    fn steady_state(&self) -> [f64; 2] {
        let y = self.dc_gain();
        [y - self.b[0], self.b[2] - self.a[2] * y]
    }
}

/// A cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Single-pass complex response at `freq` for a given sample rate.
    pub fn response_at(&self, freq: f64, sample_rate: f64) -> Complex64 {
        let w = 2.0 * PI * freq / sample_rate;
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
    }

    /// Causal filtering with optional per-section initial state.
    fn run(&self, x: &[f64], init: Option<&[[f64; 2]]>) -> Vec<f64> {
        let mut y = x.to_vec();
        for (k, s) in self.sections.iter().enumerate() {
            let [mut z1, mut z2] = init.map_or([0.0, 0.0], |st| st[k]);
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in y.iter_mut() {
                let input = *v;
                let out = b0 * input + z1;
                z1 = b1 * input - a1 * out + z2;
                z2 = b2 * input - a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Section states for a unit step already settled, scaled through the
    /// cascade gains.
    fn steady_state(&self) -> Vec<[f64; 2]> {
        let mut gain = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.steady_state();
                let st = [z1 * gain, z2 * gain];
                gain *= s.dc_gain();
                st
            })
            .collect()
    }

    /// Forward-backward filtering with odd-reflection padding at both ends and
    /// steady-state initial conditions, so output length equals input length
    /// and a constant offset produces no start-up transient.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        if x.len() < 2 {
            return vec![0.0; x.len()];
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(x.len() - 1);
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.steady_state();
        let scaled = |v: f64| zi.iter().map(|s| [s[0] * v, s[1] * v]).collect::<Vec<_>>();

        let fwd = self.run(&ext, Some(&scaled(ext[0])));
        let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
        let start = rev[0];
        rev = self.run(&rev, Some(&scaled(start)));
        rev.reverse();
        rev[pad..pad + n].to_vec()
    }
}

/// Digital Butterworth band-pass with `order` prototype poles (4 poles in
/// total for order 2).
pub fn butterworth_bandpass(
    order: usize,
    low_cut: f64,
    high_cut: f64,
    sample_rate: f64,
) -> Result<SosFilter, NeuroError> {
    let nyquist = sample_rate / 2.0;
    if !(low_cut > 0.0) {
        return Err(NeuroError::Band(format!("low cut {low_cut} Hz must be > 0")));
    }
    if !(low_cut < high_cut) {
        return Err(NeuroError::Band(format!(
            "low cut {low_cut} Hz must be below high cut {high_cut} Hz"
        )));
    }
    if !(high_cut < nyquist) {
        return Err(NeuroError::Band(format!(
            "high cut {high_cut} Hz must be below the Nyquist frequency {nyquist} Hz"
        )));
    }
    if order == 0 || !order.is_multiple_of(2) {
        return Err(NeuroError::Band(format!(
            "prototype order must be even and positive, got {order}"
        )));
    }

    let fs2 = 2.0 * sample_rate;
    let wl = fs2 * (PI * low_cut / sample_rate).tan();
    let wh = fs2 * (PI * high_cut / sample_rate).tan();
    let bw = wh - wl;
    let w0sq = wl * wh;

    let mut sections = Vec::with_capacity(order);
    // upper half-plane prototype poles; their conjugates give the other sections
    for k in 0..order / 2 {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let proto = Complex64::from_polar(1.0, theta);
        let half = proto * (bw / 2.0);
        let root = (half * half - w0sq).sqrt();
        for s in [half + root, half - root] {
            let z = (fs2 + s) / (fs2 - s);
            // one zero at z = 1 (s = 0) and one at z = -1 (s = inf) per section
            sections.push(Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * z.re, z.norm_sqr()],
            });
        }
    }

    // unit gain at the digital image of the analog centre frequency
    let w_center = 2.0 * (w0sq.sqrt() / fs2).atan();
    let mut filter = SosFilter { sections };
    let g = filter
        .sections
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w_center))
        .norm();
    let per_section = g.powf(-1.0 / filter.sections.len() as f64);
    for s in &mut filter.sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }
    Ok(filter)
}

/// Second-order Butterworth band-pass applied forward and backward.
pub fn bandpass(signal: &SampledSignal, low_cut: f64, high_cut: f64) -> Result<SampledSignal, NeuroError> {
    let filter = butterworth_bandpass(2, low_cut, high_cut, signal.sample_rate())?;
    let out = filter.filtfilt(signal.samples());
    Ok(signal.with_samples(out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Analog Butterworth band-pass magnitude at the pre-warped frequency,
    /// which is what the bilinear design reproduces exactly.
    fn analytic_gain(order: i32, f: f64, lo: f64, hi: f64, fs: f64) -> f64 {
        let warp = |x: f64| 2.0 * fs * (PI * x / fs).tan();
        let (w, wl, wh) = (warp(f), warp(lo), warp(hi));
        let ratio = (w * w - wl * wh) / (w * (wh - wl));
        (1.0 / (1.0 + ratio.powi(2 * order))).sqrt()
    }

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    /// Least-squares amplitude of a known-frequency sinusoid.
    fn fitted_amplitude(x: &[f64], freq: f64, fs: f64, offset: usize) -> f64 {
        let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (k, &v) in x.iter().enumerate() {
            let ph = 2.0 * PI * freq * (k + offset) as f64 / fs;
            let (s, c) = ph.sin_cos();
            ss += s * s;
            sc += s * c;
            cc += c * c;
            ys += v * s;
            yc += v * c;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        a.hypot(b)
    }

    #[test]
    fn digital_response_matches_analytic_prototype() {
        let fs = 20_000.0;
        let f = butterworth_bandpass(2, 250.0, 3000.0, fs).unwrap();
        assert_eq!(f.sections().len(), 2);
        for &freq in &[10.0, 50.0, 250.0, 800.0, 1000.0, 3000.0, 6000.0, 9000.0] {
            let got = f.response_at(freq, fs).norm();
            let want = analytic_gain(2, freq, 250.0, 3000.0, fs);
            assert!((got - want).abs() < 1e-9, "{freq} Hz: {got} vs {want}");
        }
        // -3 dB at both corners
        let lo = f.response_at(250.0, fs).norm();
        assert!((lo - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn dc_is_blocked() {
        let f = butterworth_bandpass(2, 250.0, 3000.0, 20_000.0).unwrap();
        assert!(f.response_at(0.0, 20_000.0).norm() < 1e-12);
    }

    #[test]
    fn in_band_tone_passes() {
        let fs = 20_000.0;
        let sig = SampledSignal::new(fs, tone(1000.0, fs, 20_000), 0.0).unwrap();
        let out = bandpass(&sig, 250.0, 3000.0).unwrap();
        assert_eq!(out.len(), sig.len());
        let skip = (0.05 * fs) as usize;
        let seg = &out.samples()[skip..out.len() - skip];
        let amp = fitted_amplitude(seg, 1000.0, fs, skip);
        assert!((amp - 1.0).abs() < 0.1, "amplitude {amp}");
    }

    #[test]
    fn fifty_hz_is_rejected() {
        let fs = 20_000.0;
        let n = 40_000;
        let low = SampledSignal::new(fs, tone(50.0, fs, n), 0.0).unwrap();
        let out = bandpass(&low, 250.0, 3000.0).unwrap();
        let skip = (0.1 * fs) as usize;
        let amp = fitted_amplitude(&out.samples()[skip..n - skip], 50.0, fs, skip);
        let db = 20.0 * amp.log10();
        let want = 40.0 * analytic_gain(2, 50.0, 250.0, 3000.0, fs).log10();
        assert!(db <= -20.0);
        assert!((db - want).abs() < 2.0, "measured {db} dB, analytic {want} dB");
    }

    #[test]
    fn offset_has_no_effect() {
        let fs = 20_000.0;
        let x: Vec<f64> = (0..8000)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * 700.0 * t).sin() + 0.3 * (2.0 * PI * 1900.0 * t).cos()
            })
            .collect();
        let shifted: Vec<f64> = x.iter().map(|v| v + 2.0).collect();
        let f = butterworth_bandpass(2, 250.0, 3000.0, fs).unwrap();
        let a = f.filtfilt(&x);
        let b = f.filtfilt(&shifted);
        let skip = (0.05 * fs) as usize;
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (p, q) in a[skip..a.len() - skip].iter().zip(&b[skip..b.len() - skip]) {
            assert!((p - q).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn bounds_are_named() {
        let err = butterworth_bandpass(2, 250.0, 10_000.0, 20_000.0).unwrap_err();
        assert!(err.to_string().contains("Nyquist"), "{err}");
        let err = butterworth_bandpass(2, 3000.0, 250.0, 20_000.0).unwrap_err();
        assert!(err.to_string().contains("below high cut"), "{err}");
        assert!(butterworth_bandpass(2, 0.0, 250.0, 20_000.0).is_err());
    }
}

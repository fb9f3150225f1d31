//! Zero-phase IIR filtering built from second-order sections.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid_arg, Result};

use super::EegRecording;

/// Q factors of the two sections of a fourth-order Butterworth filter.
const BUTTERWORTH4_Q: [f64; 2] = [0.541_196_100_146_197, 1.306_562_964_876_376_8];

/// Second-order section, normalized so that a0 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn normalized(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [a1 / a0, a2 / a0],
        }
    }

    pub fn lowpass(fc: f64, q: f64, fs: f64) -> Self {
        let w = 2.0 * PI * fc / fs;
        let (sin, cos) = w.sin_cos();
        let alpha = sin / (2.0 * q);
        let b1 = 1.0 - cos;
        Self::normalized([b1 / 2.0, b1, b1 / 2.0], 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    pub fn highpass(fc: f64, q: f64, fs: f64) -> Self {
        let w = 2.0 * PI * fc / fs;
        let (sin, cos) = w.sin_cos();
        let alpha = sin / (2.0 * q);
        let b1 = 1.0 + cos;
        Self::normalized([b1 / 2.0, -b1, b1 / 2.0], 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    pub fn notch(f0: f64, q: f64, fs: f64) -> Self {
        let w = 2.0 * PI * f0 / fs;
        let (sin, cos) = w.sin_cos();
        let alpha = sin / (2.0 * q);
        Self::normalized([1.0, -2.0 * cos, 1.0], 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    /// Gain at zero frequency.
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// |H(e^{jw})| at frequency `f`.
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let z1 = (w.cos(), -w.sin());
        let z2 = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (
            self.b[0] + self.b[1] * z1.0 + self.b[2] * z2.0,
            self.b[1] * z1.1 + self.b[2] * z2.1,
        );
        let den = (1.0 + self.a[0] * z1.0 + self.a[1] * z2.0, self.a[0] * z1.1 + self.a[1] * z2.1);
        num.0.hypot(num.1) / den.0.hypot(den.1)
    }

    /// Transposed direct form II, starting from the steady state for a
    /// constant input equal to `x[0]`.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let y0 = self.dc_gain() * x0;
        let mut s2 = b2 * x0 - a2 * y0;
        let mut s1 = b1 * x0 - a1 * y0 + s2;
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + s1;
            s1 = b1 * xin - a1 * y + s2;
            s2 = b2 * xin - a2 * y;
            *v = y;
        }
    }
}

/// A cascade of sections applied forward and backward.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub sections: Vec<Biquad>,
}

impl FilterBank {
    /// 60 Hz notch followed by a fourth-order Butterworth 0.1-30 Hz band-pass.
    pub fn eeg_default(fs: f64) -> Self {
        Self::notch_bandpass(fs, 60.0, 30.0, 0.1, 30.0)
    }

    pub fn notch_bandpass(fs: f64, notch_hz: f64, notch_q: f64, low_hz: f64, high_hz: f64) -> Self {
        let mut sections = vec![Biquad::notch(notch_hz, notch_q, fs)];
        sections.extend(BUTTERWORTH4_Q.iter().map(|&q| Biquad::highpass(low_hz, q, fs)));
        sections.extend(BUTTERWORTH4_Q.iter().map(|&q| Biquad::lowpass(high_hz, q, fs)));
        Self { sections }
    }

    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Magnitude of a single (one-directional) pass.
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        self.sections.iter().map(|s| s.magnitude(f, fs)).product()
    }

    /// Reflection padding on each side.
    pub fn padlen(&self) -> usize {
        3 * self.order()
    }

    fn run(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Zero-phase filtering with odd reflection padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.padlen();
        if x.len() <= pad {
            return Err(invalid_arg(format!(
                "signal of {} samples is too short for {pad} samples of padding",
                x.len()
            )));
        }
        let n = x.len();
        let (first, last) = (x[0], x[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));
        self.run(&mut ext);
        ext.reverse();
        self.run(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Notch then band-pass every channel, channels in parallel.
pub fn notch_then_bandpass(rec: &EegRecording) -> Result<EegRecording> {
    let bank = FilterBank::eeg_default(rec.fs);
    let data = rec
        .data
        .par_iter()
        .map(|c| bank.filtfilt(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(EegRecording { data, ..rec.clone() })
}

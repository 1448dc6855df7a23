//! Windowed Fourier transforms of sampled complex series.
//!
//! Convention: `F(x) = Σ_k f(t_k) w_k e^{+i x t_k} Δt`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n < 2 => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| {
                    let s = (PI * k as f64 / (n - 1) as f64).sin();
                    s * s
                })
                .collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        }
    }
}

/// Spectrum on an ascending frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<C64>,
}

impl Spectrum {
    /// Bin spacing `2π/(NΔt)`.
    pub fn resolution(&self) -> f64 {
        if self.freqs.len() < 2 {
            0.0
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }

    /// Value at the bin nearest to `x`.
    pub fn nearest(&self, x: f64) -> (f64, C64) {
        let k = self
            .freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        (self.freqs[k], self.values[k])
    }
}

fn check_uniform(times: &[f64], values: usize) -> Result<f64> {
    if times.len() != values || times.len() < 2 {
        return Err(Error::InvalidParameter("spectrum needs matching time and value series of length ≥ 2".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::InvalidParameter("spectrum needs a uniform, increasing time grid".into()));
    }
    Ok(dt)
}

/// Full windowed spectrum at the `N` FFT frequencies, sorted ascending.
pub fn spectrum(times: &[f64], f: &[C64], window: Window) -> Result<Spectrum> {
    let dt = check_uniform(times, f.len())?;
    let n = f.len();
    let w = window.weights(n);
    let mut buf: Vec<C64> = f.iter().zip(&w).map(|(a, b)| a * *b).collect();
    // Σ_k g_k e^{+2πi mk/N} is the unnormalised inverse transform.
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let t0 = times[0];
    let dx = 2.0 * PI / (n as f64 * dt);
    let half = n / 2;
    let mut freqs = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    // negative frequencies first
    for m in (half + 1..n).chain(0..=half) {
        let signed = if m > half { m as i64 - n as i64 } else { m as i64 };
        let x = signed as f64 * dx;
        freqs.push(x);
        values.push(buf[m] * C64::from_polar(dt, x * t0));
    }
    Ok(Spectrum { freqs, values })
}

/// Windowed transform evaluated directly at an arbitrary frequency.
pub fn dft_at(times: &[f64], f: &[C64], window: Window, x: f64) -> Result<C64> {
    let dt = check_uniform(times, f.len())?;
    let w = window.weights(f.len());
    Ok(times.iter().zip(f).zip(&w).map(|((t, a), b)| a * C64::from_polar(*b * dt, x * t)).sum())
}

/// Position and value of the strongest line within `center ± half_width`,
/// located to a small fraction of the bin spacing.
pub fn peak_near(times: &[f64], f: &[C64], window: Window, center: f64, half_width: f64) -> Result<(f64, C64)> {
    let dt = check_uniform(times, f.len())?;
    if !(half_width > 0.0) {
        return Err(Error::InvalidParameter("peak search needs a positive half-width".into()));
    }
    let bin = 2.0 * PI / (f.len() as f64 * dt);
    let w = window.weights(f.len());
    let at = |x: f64| -> C64 { times.iter().zip(f).zip(&w).map(|((t, a), b)| a * C64::from_polar(*b * dt, x * t)).sum() };
    let mut step = bin / 8.0;
    let n = (half_width / step).ceil() as i64;
    let mut best = (center, at(center));
    for k in -n..=n {
        let x = center + k as f64 * step;
        let v = at(x);
        if v.norm() > best.1.norm() {
            best = (x, v);
        }
    }
    for _ in 0..3 {
        let c = best.0;
        for k in -8..=8 {
            let x = c + k as f64 * step / 8.0;
            let v = at(x);
            if v.norm() > best.1.norm() {
                best = (x, v);
            }
        }
        step /= 8.0;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_is_located_between_bins() {
        let times: Vec<f64> = (0..1000).map(|k| 0.1 * k as f64).collect();
        let f: Vec<C64> = times.iter().map(|t| C64::from_polar(2.0, -2.3456 * t) + C64::from_polar(0.5, -1.9 * t)).collect();
        let (x, _) = peak_near(&times, &f, Window::Hann, 2.2, 0.3).unwrap();
        assert!((x - 2.3456).abs() < 1e-4, "{x}");
    }

    #[test]
    fn fft_grid_matches_direct_sum() {
        let times: Vec<f64> = (0..64).map(|k| 0.3 + 0.1 * k as f64).collect();
        let f: Vec<C64> = times.iter().map(|t| C64::new((1.3 * t).cos(), (0.4 * t).sin() + 0.1)).collect();
        for win in [Window::Hann, Window::Rectangular] {
            let s = spectrum(&times, &f, win).unwrap();
            assert_eq!(s.freqs.len(), 64);
            assert!(s.freqs.windows(2).all(|w| w[1] > w[0]));
            for (x, v) in s.freqs.iter().zip(&s.values) {
                let d = dft_at(&times, &f, win, *x).unwrap();
                assert!((d - v).norm() < 1e-12, "{x}: {d} vs {v}");
            }
        }
    }

    #[test]
    fn line_position() {
        let times: Vec<f64> = (0..2000).map(|k| 0.05 * k as f64).collect();
        let f: Vec<C64> = times.iter().map(|t| C64::from_polar(1.0, -3.0 * t)).collect();
        let s = spectrum(&times, &f, Window::Hann).unwrap();
        let peak = s.values.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        // e^{−3it} appears at x = +3 under the e^{+ixt} convention
        assert!((s.freqs[peak] - 3.0).abs() <= s.resolution());
    }

    #[test]
    fn rejects_ragged_grid() {
        let f = vec![C64::new(1.0, 0.0); 3];
        assert!(spectrum(&[0.0, 1.0, 2.5], &f, Window::Hann).is_err());
        assert!(dft_at(&[0.0, 1.0], &f, Window::Hann, 0.0).is_err());
    }
}

//! Spectral helpers for the message-recovery pipeline: Hann-tapered power
//! spectrum, zero-phase brick-wall band-pass, local-peak lookup, and a
//! variable-projection sine fit scored by adjusted R².

use crate::error::{GlsError, Result};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;
use std::io::{self, Write};

/// Magnitude-squared DFT of the mean-removed, Hann-tapered series.
/// Returns (frequencies, power) over (0, Nyquist]: the zero bin is dropped,
/// the Nyquist bin (for even lengths) is kept.
pub fn power_spectrum(series: &[f64], sample_rate: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = series.len();
    if n < 16 {
        return Err(GlsError::Degenerate(format!(
            "need at least 16 samples for a spectrum, got {n}"
        )));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(GlsError::InvalidInput("sample_rate must be > 0".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|i| {
            let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos());
            Complex::new((series[i] - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mut freqs = Vec::with_capacity(half);
    let mut power = Vec::with_capacity(half);
    for (k, c) in buf.iter().enumerate().take(half + 1).skip(1) {
        freqs.push(k as f64 * sample_rate / n as f64);
        power.push(c.norm_sqr());
    }
    Ok((freqs, power))
}

/// Zero-phase band-pass: DFT, zero every bin whose (two-sided) frequency
/// magnitude falls outside [f_lo, f_hi], inverse DFT. The edges are
/// inclusive. Applying the same band twice equals applying it once.
pub fn band_pass(series: &[f64], sample_rate: f64, f_lo: f64, f_hi: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 {
        return Err(GlsError::Degenerate("series too short to filter".into()));
    }
    if !(0.0 <= f_lo && f_lo < f_hi) {
        return Err(GlsError::InvalidInput(format!(
            "band edges must satisfy 0 <= f_lo < f_hi, got [{f_lo}, {f_hi}]"
        )));
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|v| Complex::new(*v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let idx = k.min(n - k); // conjugate-symmetric bin distance
        let f = idx as f64 * sample_rate / n as f64;
        if f < f_lo || f > f_hi {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|c| c.re / n as f64).collect())
}

/// True if some strict local maximum of `power` sits within `tol` of
/// `target` (endpoints cannot qualify).
pub fn has_local_peak_near(freqs: &[f64], power: &[f64], target: f64, tol: f64) -> bool {
    for i in 1..power.len().saturating_sub(1) {
        if (freqs[i] - target).abs() <= tol
            && power[i] > power[i - 1]
            && power[i] > power[i + 1]
        {
            return true;
        }
    }
    false
}

/// Result of [`fit_sine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFit {
    pub amplitude: f64,
    pub freq: f64,
    pub phase: f64,
    pub offset: f64,
    pub adj_r2: f64,
}

/// Fits `offset + amplitude·sin(2π·freq·t + phase)` with t = i/sample_rate.
///
/// For a candidate frequency the amplitude/phase/offset subproblem is
/// linear (regression on sin, cos, 1), so only the frequency needs a 1-D
/// search: golden-section over hint ± 1.5 bins. The hint must therefore be
/// within about one spectral bin of the true line. Adjusted R² penalizes
/// the four fitted parameters.
pub fn fit_sine(series: &[f64], sample_rate: f64, freq_hint: f64) -> Result<SineFit> {
    let n = series.len();
    if n < 8 {
        return Err(GlsError::Degenerate(format!(
            "need at least 8 samples to fit, got {n}"
        )));
    }
    if !(freq_hint.is_finite() && freq_hint > 0.0) {
        return Err(GlsError::InvalidInput("freq_hint must be > 0".into()));
    }
    if sample_rate / freq_hint < 4.0 {
        return Err(GlsError::InvalidInput(format!(
            "need at least 4 samples per hinted period (rate {sample_rate}, hint {freq_hint})"
        )));
    }

    let t: Vec<f64> = (0..n).map(|i| i as f64 / sample_rate).collect();
    let rss_at = |f: f64| -> (f64, [f64; 3]) {
        let coef = solve_linear_subproblem(&t, series, f);
        let mut rss = 0.0;
        for i in 0..n {
            let (s, c) = (2.0 * PI * f * t[i]).sin_cos();
            let r = series[i] - (coef[0] * s + coef[1] * c + coef[2]);
            rss += r * r;
        }
        (rss, coef)
    };

    // golden-section minimization of RSS(f)
    let bin = sample_rate / n as f64;
    let mut lo = (freq_hint - 1.5 * bin).max(bin * 0.25);
    let mut hi = freq_hint + 1.5 * bin;
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = rss_at(c).0;
    let mut fd = rss_at(d).0;
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = rss_at(c).0;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = rss_at(d).0;
        }
    }
    let freq = 0.5 * (lo + hi);
    let (rss, coef) = rss_at(freq);

    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let tss: f64 = series.iter().map(|v| (v - mean) * (v - mean)).sum();
    let adj_r2 = if tss > 0.0 {
        1.0 - (rss / (nf - 4.0)) / (tss / (nf - 1.0))
    } else {
        0.0
    };

    Ok(SineFit {
        amplitude: coef[0].hypot(coef[1]),
        freq,
        phase: coef[1].atan2(coef[0]),
        offset: coef[2],
        adj_r2,
    })
}

/// Least-squares coefficients (α, β, γ) for α·sin + β·cos + γ at fixed f.
fn solve_linear_subproblem(t: &[f64], y: &[f64], f: f64) -> [f64; 3] {
    let n = t.len();
    let (mut suu, mut suv, mut svv, mut su, mut sv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut suy, mut svy, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (s, c) = (2.0 * PI * f * t[i]).sin_cos();
        suu += s * s;
        suv += s * c;
        svv += c * c;
        su += s;
        sv += c;
        suy += s * y[i];
        svy += c * y[i];
        sy += y[i];
    }
    let mut a = [
        [suu, suv, su, suy],
        [suv, svv, sv, svy],
        [su, sv, n as f64, sy],
    ];
    // Gaussian elimination with partial pivoting on the 3×4 tableau
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        if p == 0.0 {
            continue; // defective column; coefficient stays zero
        }
        let pivot_row = a[col];
        for (row, r) in a.iter_mut().enumerate() {
            if row != col {
                let factor = r[col] / p;
                for (dst, src) in r[col..].iter_mut().zip(&pivot_row[col..]) {
                    *dst -= factor * src;
                }
            }
        }
    }
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = if a[i][i] != 0.0 { a[i][3] / a[i][i] } else { 0.0 };
    }
    out
}

/// Writes a spectrum as CSV with the exact header `freq,power`.
pub fn write_spectrum_csv(
    freqs: &[f64],
    power: &[f64],
    w: &mut impl Write,
) -> io::Result<()> {
    writeln!(w, "freq,power")?;
    for (f, p) in freqs.iter().zip(power) {
        writeln!(w, "{f},{p}")?;
    }
    Ok(())
}

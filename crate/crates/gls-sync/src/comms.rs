//! Chaos-masking communication pipeline: sinusoidal messages ride on the
//! transmitted copies of the master channels, the synchronized slave
//! regenerates its carrier, and subtracting the two exposes the messages,
//! which are then located in the spectrum and recovered by band-pass + sine
//! fit.
//!
//! Three injection modes:
//! - `Mask` (default): the transmitted channels are x̃ = x + m(t); the
//!   coupled dynamics run clean, and decoding subtracts the regenerated
//!   carrier from the transmission.
//! - `Drive`: m(t) is added to the master derivative itself, so the message
//!   perturbs the chaos; the transmitted channels are the states.
//! - `Coupled`: the slave controller consumes x̃ instead of x, so the
//!   masked transmission perturbs the error dynamics. Kept for diagnostic
//!   comparison; its recovered lines sit on a chaotic background orders of
//!   magnitude above the other modes' floors.

use crate::error::{GlsError, Result};
use crate::gls::{error_vec, master_deriv, params_from_k, slave_deriv_masked, Vec3};
use crate::integrate::{rk4_step_at, SimConfig, Trajectory, DIVERGENCE_LIMIT};
use crate::spectral::{band_pass, fit_sine, power_spectrum, SineFit};
use serde::Serialize;
use std::f64::consts::PI;
use std::io::{self, Write};

/// One encoded sinusoid: offset + amplitude·sin(2π·freq·t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageSpec {
    pub offset: f64,
    pub amplitude: f64,
    pub freq: f64,
}

/// Message value at time t.
pub fn message_sample(spec: &MessageSpec, t: f64) -> f64 {
    spec.offset + spec.amplitude * (2.0 * PI * spec.freq * t).sin()
}

/// How messages enter the run; see the module docs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionMode {
    Mask,
    Drive,
    Coupled,
}

impl InjectionMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mask" => Ok(Self::Mask),
            "drive" => Ok(Self::Drive),
            "coupled" => Ok(Self::Coupled),
            other => Err(GlsError::InvalidInput(format!(
                "unknown injection mode {other:?} (expected mask, drive, or coupled)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Mask => "mask",
            Self::Drive => "drive",
            Self::Coupled => "coupled",
        }
    }
}

/// Slope-regime presets for the σ triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Positive,
    Zero,
    Negative,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Self::Positive),
            "zero" => Ok(Self::Zero),
            "negative" => Ok(Self::Negative),
            other => Err(GlsError::InvalidInput(format!(
                "unknown regime {other:?} (expected positive, zero, or negative)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Zero => "zero",
            Self::Negative => "negative",
        }
    }

    /// σ preset. The third component sets the x3/y3 slope to −σ3: −1 gives
    /// slope +1 (synchronization), +1 gives −1 (anti-synchronization), and
    /// the near-zero panel uses −0.2 rather than exactly 0 because σ3
    /// scales the third channel's masked term; at 0 that message would
    /// vanish from the residual entirely.
    pub fn sigma(&self) -> Vec3 {
        match self {
            Self::Positive => [1.0, 1.0, -1.0],
            Self::Zero => [1.0, 1.0, -0.2],
            Self::Negative => [1.0, 1.0, 1.0],
        }
    }
}

/// The four studied frequency sets (cycles per time unit). The carrier's
/// resonance sits near 1.37, so case 1 brackets it from below, case 2 from
/// above, and cases 3–4 straddle it.
pub fn case_frequencies(case: u8) -> Result<[f64; 3]> {
    match case {
        1 => Ok([1.000, 1.088, 1.250]),
        2 => Ok([1.68, 2.05, 3.50]),
        3 => Ok([1.0, 1.088, 2.50]),
        4 => Ok([1.0, 1.3, 1.2]),
        other => Err(GlsError::InvalidInput(format!(
            "case must be 1..=4, got {other}"
        ))),
    }
}

/// Full pipeline settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommsConfig {
    pub sim: SimConfig,
    pub messages: [MessageSpec; 3],
    pub mode: InjectionMode,
    /// Half-width of the band-pass around each message frequency.
    pub band_halfwidth: f64,
    /// Samples dropped from each end of the band-passed series before the
    /// sine fit, to clear the filter's edge ringing.
    pub fit_trim: usize,
}

/// Default message amplitude.
pub const DEFAULT_AMPLITUDE: f64 = 0.01;
/// Analysis window of 8192 samples after the transient.
pub const DEFAULT_COMMS_STEPS: usize = 10239;
pub const DEFAULT_COMMS_TRANSIENT: usize = 2048;
pub const DEFAULT_BAND_HALFWIDTH: f64 = 0.06;
pub const DEFAULT_FIT_TRIM: usize = 668;

impl Default for CommsConfig {
    fn default() -> Self {
        let freqs = case_frequencies(1).unwrap();
        Self {
            sim: SimConfig {
                n_steps: DEFAULT_COMMS_STEPS,
                transient_steps: DEFAULT_COMMS_TRANSIENT,
                sigma: Regime::Positive.sigma(),
                ..SimConfig::default()
            },
            messages: freqs.map(|freq| MessageSpec {
                offset: 0.0,
                amplitude: DEFAULT_AMPLITUDE,
                freq,
            }),
            mode: InjectionMode::Mask,
            band_halfwidth: DEFAULT_BAND_HALFWIDTH,
            fit_trim: DEFAULT_FIT_TRIM,
        }
    }
}

impl CommsConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let nyquist = 0.5 / self.sim.h;
        for (i, m) in self.messages.iter().enumerate() {
            if m.amplitude < 0.0 || !m.amplitude.is_finite() {
                return Err(GlsError::InvalidInput(format!(
                    "message {} amplitude must be >= 0",
                    i + 1
                )));
            }
            if !(m.freq > 0.0 && m.freq < nyquist) {
                return Err(GlsError::InvalidInput(format!(
                    "message {} frequency {} outside (0, {nyquist})",
                    i + 1,
                    m.freq
                )));
            }
        }
        for i in 0..3 {
            for j in i + 1..3 {
                if self.messages[i].freq == self.messages[j].freq {
                    return Err(GlsError::InvalidInput(format!(
                        "message frequencies must be distinct ({} repeats)",
                        self.messages[i].freq
                    )));
                }
            }
        }
        if self.band_halfwidth <= 0.0 || self.band_halfwidth.is_nan() {
            return Err(GlsError::InvalidInput("band_halfwidth must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_case_and_regime(case: u8, regime: Regime) -> Result<Self> {
        let freqs = case_frequencies(case)?;
        let mut cfg = Self::default();
        cfg.sim.sigma = regime.sigma();
        for (msg, f) in cfg.messages.iter_mut().zip(freqs) {
            msg.freq = f;
        }
        Ok(cfg)
    }
}

/// A finished encode run: the coupled trajectory plus the transmitted
/// (masked) channel copies, one triple per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedRun {
    pub traj: Trajectory,
    pub transmitted: Vec<Vec3>,
    pub sigma: Vec3,
}

/// Integrates the coupled pair with messages injected per the configured
/// mode and records the transmitted channels alongside the states.
pub fn encode_and_run(cfg: &CommsConfig) -> Result<EncodedRun> {
    cfg.validate()?;
    let p = params_from_k(cfg.sim.k)?;
    let sim = &cfg.sim;
    let msg = |t: f64| -> Vec3 {
        [
            message_sample(&cfg.messages[0], t),
            message_sample(&cfg.messages[1], t),
            message_sample(&cfg.messages[2], t),
        ]
    };

    let field = |t: f64, z: &[f64; 6]| -> [f64; 6] {
        let x = [z[0], z[1], z[2]];
        let y = [z[3], z[4], z[5]];
        let (dx, dy) = match cfg.mode {
            InjectionMode::Mask => (
                master_deriv(&p, &x),
                slave_deriv_masked(&p, &sim.sigma, &x, &y, &sim.control_mask),
            ),
            InjectionMode::Drive => {
                let m = msg(t);
                let mut dx = master_deriv(&p, &x);
                for i in 0..3 {
                    dx[i] += m[i];
                }
                (
                    dx,
                    slave_deriv_masked(&p, &sim.sigma, &x, &y, &sim.control_mask),
                )
            }
            InjectionMode::Coupled => {
                let m = msg(t);
                let xt = [x[0] + m[0], x[1] + m[1], x[2] + m[2]];
                (
                    master_deriv(&p, &x),
                    slave_deriv_masked(&p, &sim.sigma, &xt, &y, &sim.control_mask),
                )
            }
        };
        [dx[0], dx[1], dx[2], dy[0], dy[1], dy[2]]
    };

    let n = sim.n_steps;
    let mut t = Vec::with_capacity(n + 1);
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut es = Vec::with_capacity(n + 1);
    let mut tx = Vec::with_capacity(n + 1);
    let mut z = [
        sim.x0[0], sim.x0[1], sim.x0[2], sim.y0[0], sim.y0[1], sim.y0[2],
    ];
    for step in 0..=n {
        let ti = step as f64 * sim.h;
        if step > 0 {
            let t_prev = (step - 1) as f64 * sim.h;
            z = rk4_step_at(field, t_prev, &z, sim.h);
            for v in &z {
                if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
                    return Err(GlsError::Diverged {
                        step,
                        t: ti,
                        limit: DIVERGENCE_LIMIT,
                    });
                }
            }
        }
        let x = [z[0], z[1], z[2]];
        let y = [z[3], z[4], z[5]];
        t.push(ti);
        xs.push(x);
        ys.push(y);
        es.push(error_vec(&sim.sigma, &x, &y).e);
        tx.push(match cfg.mode {
            InjectionMode::Drive => x, // the states themselves carry the message
            _ => {
                let m = msg(ti);
                [x[0] + m[0], x[1] + m[1], x[2] + m[2]]
            }
        });
    }
    Ok(EncodedRun {
        traj: Trajectory {
            t,
            x: xs,
            y: ys,
            e: es,
            h: sim.h,
        },
        transmitted: tx,
        sigma: sim.sigma,
    })
}

/// Generalized error of the transmitted third channel,
/// r(t) = y3(t) + σ3·x̃3(t). With σ3 = −1 this is y3 − x̃3.
pub fn decode_residual(run: &EncodedRun, sigma3: f64) -> Vec<f64> {
    run.traj
        .y
        .iter()
        .zip(&run.transmitted)
        .map(|(y, tx)| y[2] + sigma3 * tx[2])
        .collect()
}

/// Combined residual over all three transmitted channels,
/// r(t) = Σ_i y_i(t) + σ_i·x̃_i(t). On a converged run the state terms
/// cancel and this reduces to Σ_i σ_i·m_i(t), exposing every message.
pub fn combined_residual(run: &EncodedRun) -> Vec<f64> {
    let s = run.sigma;
    run.traj
        .y
        .iter()
        .zip(&run.transmitted)
        .map(|(y, tx)| {
            (y[0] + s[0] * tx[0]) + (y[1] + s[1] * tx[1]) + (y[2] + s[2] * tx[2])
        })
        .collect()
}

/// Decoded pipeline output: the post-transient residual, its spectrum, and
/// the per-message band-passed sine fits.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedResult {
    pub t: Vec<f64>,
    pub residual: Vec<f64>,
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub fits: [SineFit; 3],
}

/// Runs encode → combined residual → spectrum → per-message band-pass and
/// sine fit on the post-transient window.
pub fn run_pipeline(cfg: &CommsConfig) -> Result<DecodedResult> {
    let run = encode_and_run(cfg)?;
    let start = cfg.sim.transient_steps;
    let residual_full = combined_residual(&run);
    let t: Vec<f64> = run.traj.t[start..].to_vec();
    let residual: Vec<f64> = residual_full[start..].to_vec();
    let rate = cfg.sim.sample_rate();

    let (freqs, power) = power_spectrum(&residual, rate)?;

    let mean = residual.iter().sum::<f64>() / residual.len() as f64;
    let centered: Vec<f64> = residual.iter().map(|v| v - mean).collect();
    let mut fits = [SineFit {
        amplitude: 0.0,
        freq: 0.0,
        phase: 0.0,
        offset: 0.0,
        adj_r2: 0.0,
    }; 3];
    for (i, spec) in cfg.messages.iter().enumerate() {
        let banded = band_pass(
            &centered,
            rate,
            spec.freq - cfg.band_halfwidth,
            spec.freq + cfg.band_halfwidth,
        )?;
        let trimmed = trim_window(&banded, cfg.fit_trim)?;
        fits[i] = fit_sine(trimmed, rate, spec.freq)?;
    }
    Ok(DecodedResult {
        t,
        residual,
        freqs,
        power,
        fits,
    })
}

fn trim_window(series: &[f64], trim: usize) -> Result<&[f64]> {
    if series.len() < 2 * trim + 8 {
        return Err(GlsError::Degenerate(format!(
            "window of {} samples too short for a fit trim of {trim} per side",
            series.len()
        )));
    }
    Ok(&series[trim..series.len() - trim])
}

/// The standard experiment: one frequency case under one σ regime, with
/// the default masking pipeline.
pub fn run_case(case: u8, regime: Regime) -> Result<DecodedResult> {
    run_pipeline(&CommsConfig::with_case_and_regime(case, regime)?)
}

/// JSON record for one recovered message, in the export schema's order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitRecord {
    pub message_index: usize,
    pub freq: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub adj_r2: f64,
}

/// Serializes the three fits as a JSON array, indices 1-based.
pub fn fits_to_json(fits: &[SineFit; 3]) -> String {
    let records: Vec<FitRecord> = fits
        .iter()
        .enumerate()
        .map(|(i, f)| FitRecord {
            message_index: i + 1,
            freq: f.freq,
            amplitude: f.amplitude,
            phase: f.phase,
            offset: f.offset,
            adj_r2: f.adj_r2,
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("fit serialization cannot fail")
}

/// Writes the residual as CSV with header `t,residual`.
pub fn write_residual_csv(
    t: &[f64],
    residual: &[f64],
    w: &mut impl Write,
) -> io::Result<()> {
    writeln!(w, "t,residual")?;
    for (ti, r) in t.iter().zip(residual) {
        writeln!(w, "{ti},{r}")?;
    }
    Ok(())
}

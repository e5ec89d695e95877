//! Synchronization quantifiers: regression slope of the synchronization
//! plot, its standard error, the quality figure S_Q = 1/Δm, zero-lag
//! cross-correlation, convergence times, and σ sweeps over those metrics.

use crate::error::{GlsError, Result};
use crate::integrate::{discard_transient, integrate_coupled, SimConfig};
use crate::gls::Vec3;
use std::io::{self, Write};

/// Which master/slave coordinate pair a metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelPair {
    X1Y1,
    X2Y2,
    X3Y3,
}

impl ChannelPair {
    pub const ALL: [ChannelPair; 3] = [ChannelPair::X1Y1, ChannelPair::X2Y2, ChannelPair::X3Y3];

    pub fn label(&self) -> &'static str {
        match self {
            ChannelPair::X1Y1 => "x1y1",
            ChannelPair::X2Y2 => "x2y2",
            ChannelPair::X3Y3 => "x3y3",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            ChannelPair::X1Y1 => 0,
            ChannelPair::X2Y2 => 1,
            ChannelPair::X3Y3 => 2,
        }
    }
}

/// Fitted-line metrics for one channel pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncMetrics {
    pub m: f64,
    pub dm: f64,
    pub s_q: f64,
    pub r0: f64,
}

/// Ordinary least-squares slope of ys against xs and the standard error of
/// the slope estimate. A perfect line yields Δm = 0 exactly.
pub fn fit_sync_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n != ys.len() {
        return Err(GlsError::InvalidInput(format!(
            "length mismatch: {} vs {}",
            n,
            ys.len()
        )));
    }
    if n < 3 {
        return Err(GlsError::Degenerate("need at least 3 samples".into()));
    }
    let nf = n as f64;
    let xbar = xs.iter().sum::<f64>() / nf;
    let ybar = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - xbar;
        sxx += dx * dx;
        sxy += dx * (ys[i] - ybar);
    }
    if sxx == 0.0 {
        return Err(GlsError::Degenerate("xs has zero variance".into()));
    }
    let m = sxy / sxx;
    let b = ybar - m * xbar;
    let mut rss = 0.0;
    for i in 0..n {
        let r = ys[i] - (m * xs[i] + b);
        rss += r * r;
    }
    let dm = (rss / (nf - 2.0) / sxx).sqrt();
    Ok((m, dm))
}

/// S_Q = 1/Δm, with Δm = 0 reported as +∞.
pub fn sync_quality(dm: f64) -> Result<f64> {
    if dm < 0.0 || !dm.is_finite() {
        return Err(GlsError::InvalidInput(format!(
            "slope error must be finite and >= 0, got {dm}"
        )));
    }
    if dm == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / dm)
    }
}

/// Normalized cross-correlation at integer lags in [−max_lag, +max_lag].
/// Mean-removed, biased normalization (full-length denominator), so
/// |r| ≤ 1 at every lag and r_xy(L) = r_yx(−L).
pub fn cross_correlation(xs: &[f64], ys: &[f64], max_lag: usize) -> Result<Vec<(i64, f64)>> {
    let n = xs.len();
    if n != ys.len() {
        return Err(GlsError::InvalidInput(format!(
            "length mismatch: {} vs {}",
            n,
            ys.len()
        )));
    }
    if n <= max_lag {
        return Err(GlsError::InvalidInput(format!(
            "max_lag ({max_lag}) must be below series length ({n})"
        )));
    }
    let nf = n as f64;
    let xbar = xs.iter().sum::<f64>() / nf;
    let ybar = ys.iter().sum::<f64>() / nf;
    let xc: Vec<f64> = xs.iter().map(|v| v - xbar).collect();
    let yc: Vec<f64> = ys.iter().map(|v| v - ybar).collect();
    let sx: f64 = xc.iter().map(|v| v * v).sum();
    let sy: f64 = yc.iter().map(|v| v * v).sum();
    let denom = (sx * sy).sqrt();
    if denom == 0.0 {
        return Err(GlsError::Degenerate("zero-variance input".into()));
    }
    let mut out = Vec::with_capacity(2 * max_lag + 1);
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let mut acc = 0.0;
        for (t, xv) in xc.iter().enumerate() {
            let j = t as i64 + lag;
            if j >= 0 && (j as usize) < n {
                acc += xv * yc[j as usize];
            }
        }
        out.push((lag, acc / denom));
    }
    Ok(out)
}

/// Zero-lag correlation only.
pub fn zero_lag_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    Ok(cross_correlation(xs, ys, 0)?[0].1)
}

/// First time T with |series(t)| < eps for every t ≥ T inside the window;
/// `None` if the last sample is still at or above eps.
pub fn convergence_time(t: &[f64], series: &[f64], eps: f64) -> Option<f64> {
    assert_eq!(t.len(), series.len(), "time/series length mismatch");
    if t.is_empty() || eps <= 0.0 {
        return None;
    }
    let mut first = 0usize;
    for i in (0..series.len()).rev() {
        if series[i].abs() >= eps {
            first = i + 1;
            break;
        }
    }
    if first >= t.len() {
        None
    } else {
        Some(t[first])
    }
}

/// Default threshold used by the sweep's convergence-time column.
pub const CONV_EPS: f64 = 1e-3;

/// One sweep row: the σ point, the channel pair, that pair's metrics (None
/// when the run at this σ diverged, so the grid keeps its shape), and the
/// convergence time of the pair's error channel (None if it never
/// converged).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma: Vec3,
    pub pair: ChannelPair,
    pub metrics: Option<SyncMetrics>,
    pub conv_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Metrics for all three channel pairs at a single σ. Slopes and
/// correlations use the post-transient window; convergence times scan the
/// full run.
pub fn sweep_point(base: &SimConfig, sigma: Vec3) -> Result<Vec<SweepRow>> {
    let cfg = SimConfig { sigma, ..*base };
    let traj = integrate_coupled(&cfg)?;
    let tail = discard_transient(&traj, cfg.transient_steps)?;
    let mut rows = Vec::with_capacity(3);
    for pair in ChannelPair::ALL {
        let i = pair.index();
        let xs: Vec<f64> = tail.x.iter().map(|v| v[i]).collect();
        let ys: Vec<f64> = tail.y.iter().map(|v| v[i]).collect();
        let (m, dm) = fit_sync_slope(&xs, &ys)?;
        let s_q = sync_quality(dm)?;
        let r0 = zero_lag_correlation(&xs, &ys)?;
        let err: Vec<f64> = traj.e.iter().map(|v| v[i]).collect();
        let conv_time = convergence_time(&traj.t, &err, CONV_EPS);
        rows.push(SweepRow {
            sigma,
            pair,
            metrics: Some(SyncMetrics { m, dm, s_q, r0 }),
            conv_time,
        });
    }
    Ok(rows)
}

/// Like `sweep_point`, but a diverging run is recorded as three rows with
/// no metrics instead of aborting. Some σ points genuinely escape to
/// infinity under the controlled dynamics (e.g. (1,1,−0.8) from the
/// standard start), and a grid sweep should report that as an outcome.
pub fn sweep_point_recorded(base: &SimConfig, sigma: Vec3) -> Result<Vec<SweepRow>> {
    match sweep_point(base, sigma) {
        Err(GlsError::Diverged { .. }) => Ok(ChannelPair::ALL
            .iter()
            .map(|pair| SweepRow {
                sigma,
                pair: *pair,
                metrics: None,
                conv_time: None,
            })
            .collect()),
        other => other,
    }
}

/// Runs `sweep_point_recorded` for each σ in order.
pub fn sweep_sigma(base: &SimConfig, sigmas: &[Vec3]) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(GlsError::InvalidInput("empty sigma list".into()));
    }
    let mut rows = Vec::with_capacity(3 * sigmas.len());
    for s in sigmas {
        rows.extend(sweep_point_recorded(base, *s)?);
    }
    Ok(SweepResult { rows })
}

/// σ = (1, 1, s) with s from −1 to 1 in steps of 0.2 (11 points). Under
/// this preset the fitted x3/y3 slope transitions from +1 to −1.
pub fn figure_sigma_grid() -> Vec<Vec3> {
    (0..=10).map(|i| [1.0, 1.0, i as f64 / 5.0 - 1.0]).collect()
}

/// σ = (s, s, s) with s from 0 to 1 in steps of 0.2 (6 points), the sweep
/// over the error definition's literal parameter range.
pub fn literal_sigma_grid() -> Vec<Vec3> {
    (0..=5).map(|i| { let s = i as f64 / 5.0; [s, s, s] }).collect()
}

/// Writes sweep rows as CSV with the exact header
/// `s1,s2,s3,pair,m,dm,s_q,r0,conv_time`. Infinite S_Q prints as `inf`;
/// a missing convergence time leaves the field empty; a diverged σ point
/// leaves all four metric fields empty.
pub fn write_sweep_csv(result: &SweepResult, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "s1,s2,s3,pair,m,dm,s_q,r0,conv_time")?;
    for row in &result.rows {
        write!(
            w,
            "{},{},{},{},",
            row.sigma[0],
            row.sigma[1],
            row.sigma[2],
            row.pair.label()
        )?;
        match &row.metrics {
            Some(mt) => write!(w, "{},{},{},{}", mt.m, mt.dm, mt.s_q, mt.r0)?,
            None => write!(w, ",,,")?,
        }
        match row.conv_time {
            Some(t) => writeln!(w, ",{t}")?,
            None => writeln!(w, ",")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_lines_have_zero_slope_error() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.3 - 7.0).collect();
        let anti: Vec<f64> = xs.iter().map(|v| -v).collect();
        let (m, dm) = fit_sync_slope(&xs, &anti).unwrap();
        assert_eq!(m, -1.0);
        assert_eq!(dm, 0.0);

        let (m, dm) = fit_sync_slope(&xs, &xs).unwrap();
        assert_eq!(m, 1.0);
        assert_eq!(dm, 0.0);
    }

    #[test]
    fn slope_rejects_degenerate_inputs() {
        assert!(fit_sync_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        let flat = [5.0; 10];
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            fit_sync_slope(&flat, &ys),
            Err(GlsError::Degenerate(_))
        ));
    }

    #[test]
    fn quality_reciprocal_and_sentinel() {
        assert_eq!(sync_quality(0.01).unwrap(), 100.0);
        assert_eq!(sync_quality(2.0).unwrap(), 0.5);
        assert_eq!(sync_quality(0.0).unwrap(), f64::INFINITY);
        assert!(sync_quality(-1.0).is_err());
    }

    #[test]
    fn correlation_of_identical_and_negated() {
        let xs: Vec<f64> = (0..100).map(|i| ((i as f64) * 0.37).sin()).collect();
        let r = cross_correlation(&xs, &xs, 5).unwrap();
        let r0 = r.iter().find(|(l, _)| *l == 0).unwrap().1;
        assert_eq!(r0, 1.0);
        assert!(r.iter().all(|(_, v)| *v <= r0 + 1e-12));

        let neg: Vec<f64> = xs.iter().map(|v| -v).collect();
        let rn = cross_correlation(&xs, &neg, 5).unwrap();
        let rn0 = rn.iter().find(|(l, _)| *l == 0).unwrap().1;
        assert_eq!(rn0, -1.0);
        assert!(rn.iter().all(|(_, v)| *v >= rn0 - 1e-12));
    }

    #[test]
    fn correlation_lag_symmetry() {
        let xs: Vec<f64> = (0..64).map(|i| ((i * i) as f64 * 0.011).sin()).collect();
        let ys: Vec<f64> = (0..64).map(|i| ((i as f64) * 0.21).cos()).collect();
        let rxy = cross_correlation(&xs, &ys, 7).unwrap();
        let ryx = cross_correlation(&ys, &xs, 7).unwrap();
        for (lag, v) in &rxy {
            let mirrored = ryx.iter().find(|(l, _)| *l == -lag).unwrap().1;
            assert!((v - mirrored).abs() < 1e-14);
        }
    }

    #[test]
    fn convergence_time_edges() {
        let t: Vec<f64> = (0..5).map(|i| i as f64).collect();
        assert_eq!(convergence_time(&t, &[0.0; 5], 1e-3), Some(0.0));
        assert_eq!(convergence_time(&t, &[1.0; 5], 1e-3), None);
        assert_eq!(
            convergence_time(&t, &[1.0, 1.0, 0.0, 0.0, 0.0], 1e-3),
            Some(2.0)
        );
        // a late excursion resets the convergence point
        assert_eq!(
            convergence_time(&t, &[0.0, 0.0, 1.0, 0.0, 0.0], 1e-3),
            Some(3.0)
        );
    }

    #[test]
    fn grids_have_expected_shapes() {
        let fig = figure_sigma_grid();
        assert_eq!(fig.len(), 11);
        assert_eq!(fig[0], [1.0, 1.0, -1.0]);
        assert_eq!(fig[5], [1.0, 1.0, 0.0]);
        assert_eq!(fig[10], [1.0, 1.0, 1.0]);

        let lit = literal_sigma_grid();
        assert_eq!(lit.len(), 6);
        assert_eq!(lit[0], [0.0, 0.0, 0.0]);
        assert_eq!(lit[5], [1.0, 1.0, 1.0]);
    }

    #[test]
    fn sweep_csv_shape() {
        let mut result = SweepResult::default();
        result.rows.push(SweepRow {
            sigma: [1.0, 1.0, -1.0],
            pair: ChannelPair::X3Y3,
            metrics: Some(SyncMetrics {
                m: 1.0,
                dm: 0.0,
                s_q: f64::INFINITY,
                r0: 1.0,
            }),
            conv_time: None,
        });
        result.rows.push(SweepRow {
            sigma: [1.0, 1.0, -0.8],
            pair: ChannelPair::X1Y1,
            metrics: None,
            conv_time: None,
        });
        let mut buf = Vec::new();
        write_sweep_csv(&result, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "s1,s2,s3,pair,m,dm,s_q,r0,conv_time\n\
             1,1,-1,x3y3,1,0,inf,1,\n\
             1,1,-0.8,x1y1,,,,,\n"
        );
    }
}

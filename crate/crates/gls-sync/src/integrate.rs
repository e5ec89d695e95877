//! Fixed-step classical Runge–Kutta integration of the free-running master
//! and the coupled master/slave system.
//!
//! Everything here is deterministic: no adaptive stepping, the time grid is
//! built by index·h rather than accumulation, and identical configurations
//! produce bit-identical trajectories.

use crate::error::{GlsError, Result};
use crate::gls::{
    error_vec, master_deriv, params_from_k, slave_deriv_masked, SubTermMask, Vec3,
};
use crate::stability::Bounds;
use std::io::{self, Write};

/// Any state component beyond this magnitude aborts the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Simulation settings shared by every integration entry point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub h: f64,
    pub n_steps: usize,
    pub transient_steps: usize,
    pub x0: Vec3,
    pub y0: Vec3,
    pub k: f64,
    pub sigma: Vec3,
    pub control_mask: SubTermMask,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            h: 0.05,
            n_steps: 4000,
            transient_steps: 2000,
            x0: [0.999, 0.899, 0.799],
            y0: [1.0, 1.0, 1.0],
            k: 0.5,
            sigma: [1.0, 1.0, 1.0],
            control_mask: SubTermMask::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(GlsError::InvalidInput(format!(
                "h must be finite and > 0, got {}",
                self.h
            )));
        }
        if self.n_steps == 0 {
            return Err(GlsError::InvalidInput("n_steps must be positive".into()));
        }
        if self.transient_steps >= self.n_steps {
            return Err(GlsError::InvalidInput(format!(
                "transient_steps ({}) must be < n_steps ({})",
                self.transient_steps, self.n_steps
            )));
        }
        if !self.k.is_finite() {
            return Err(GlsError::InvalidInput("k must be finite".into()));
        }
        for (i, s) in self.sigma.iter().enumerate() {
            if !(-1.0..=1.0).contains(s) {
                return Err(GlsError::InvalidInput(format!(
                    "s{} must lie in [-1, 1], got {s}",
                    i + 1
                )));
            }
        }
        for v in self.x0.iter().chain(self.y0.iter()) {
            if !v.is_finite() {
                return Err(GlsError::InvalidInput(
                    "initial conditions must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.h
    }
}

/// One classical RK4 update of a time-dependent field.
pub fn rk4_step_at<const N: usize>(
    field: impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let half = 0.5 * h;
    let k1 = field(t, y);
    let mut stage = [0.0; N];
    for i in 0..N {
        stage[i] = y[i] + half * k1[i];
    }
    let k2 = field(t + half, &stage);
    for i in 0..N {
        stage[i] = y[i] + half * k2[i];
    }
    let k3 = field(t + half, &stage);
    for i in 0..N {
        stage[i] = y[i] + h * k3[i];
    }
    let k4 = field(t + h, &stage);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// One classical RK4 update of an autonomous field. Fails if the update
/// produces a non-finite component.
pub fn rk4_step<const N: usize>(
    field: impl Fn(&[f64; N]) -> [f64; N],
    y: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let out = rk4_step_at(|_, s| field(s), 0.0, y, h);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(GlsError::Diverged {
            step: 0,
            t: 0.0,
            limit: DIVERGENCE_LIMIT,
        })
    }
}

fn check_state<const N: usize>(state: &[f64; N], step: usize, h: f64) -> Result<()> {
    for v in state {
        if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
            return Err(GlsError::Diverged {
                step,
                t: step as f64 * h,
                limit: DIVERGENCE_LIMIT,
            });
        }
    }
    Ok(())
}

/// Free-running master trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec3>,
    pub h: f64,
}

impl MasterTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.h
    }

    /// Suffix starting at the given sample index; times keep their values.
    pub fn suffix(&self, transient_steps: usize) -> Result<MasterTrajectory> {
        if transient_steps >= self.len() {
            return Err(GlsError::InvalidInput(format!(
                "transient ({transient_steps}) not below trajectory length ({})",
                self.len()
            )));
        }
        Ok(MasterTrajectory {
            t: self.t[transient_steps..].to_vec(),
            x: self.x[transient_steps..].to_vec(),
            h: self.h,
        })
    }
}

/// Coupled run: master states, slave states, and the generalized error
/// sampled on one clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec3>,
    pub y: Vec<Vec3>,
    pub e: Vec<Vec3>,
    pub h: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.h
    }
}

/// Suffix of a coupled trajectory starting at the given sample index.
pub fn discard_transient(traj: &Trajectory, transient_steps: usize) -> Result<Trajectory> {
    if transient_steps >= traj.len() {
        return Err(GlsError::InvalidInput(format!(
            "transient ({transient_steps}) not below trajectory length ({})",
            traj.len()
        )));
    }
    Ok(Trajectory {
        t: traj.t[transient_steps..].to_vec(),
        x: traj.x[transient_steps..].to_vec(),
        y: traj.y[transient_steps..].to_vec(),
        e: traj.e[transient_steps..].to_vec(),
        h: traj.h,
    })
}

/// Integrates the free-running master for `n_steps` steps (n_steps + 1
/// samples including t = 0).
pub fn integrate_master(cfg: &SimConfig) -> Result<MasterTrajectory> {
    cfg.validate()?;
    let p = params_from_k(cfg.k)?;
    let n = cfg.n_steps;
    let mut t = Vec::with_capacity(n + 1);
    let mut xs = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    t.push(0.0);
    xs.push(x);
    for step in 1..=n {
        x = rk4_step_at(|_, s| master_deriv(&p, s), 0.0, &x, cfg.h);
        check_state(&x, step, cfg.h)?;
        t.push(step as f64 * cfg.h);
        xs.push(x);
    }
    Ok(MasterTrajectory { t, x: xs, h: cfg.h })
}

/// Integrates master and controlled slave simultaneously, recording the
/// generalized error at every sample.
pub fn integrate_coupled(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let p = params_from_k(cfg.k)?;
    let n = cfg.n_steps;
    let field = |_t: f64, z: &[f64; 6]| {
        let x = [z[0], z[1], z[2]];
        let y = [z[3], z[4], z[5]];
        let dx = master_deriv(&p, &x);
        let dy = slave_deriv_masked(&p, &cfg.sigma, &x, &y, &cfg.control_mask);
        [dx[0], dx[1], dx[2], dy[0], dy[1], dy[2]]
    };

    let mut t = Vec::with_capacity(n + 1);
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut es = Vec::with_capacity(n + 1);
    let mut z = [
        cfg.x0[0], cfg.x0[1], cfg.x0[2], cfg.y0[0], cfg.y0[1], cfg.y0[2],
    ];
    let record = |z: &[f64; 6], t: &mut Vec<f64>, xs: &mut Vec<Vec3>, ys: &mut Vec<Vec3>, es: &mut Vec<Vec3>, ti: f64| {
        let x = [z[0], z[1], z[2]];
        let y = [z[3], z[4], z[5]];
        t.push(ti);
        xs.push(x);
        ys.push(y);
        es.push(error_vec(&cfg.sigma, &x, &y).e);
    };
    record(&z, &mut t, &mut xs, &mut ys, &mut es, 0.0);
    for step in 1..=n {
        z = rk4_step_at(field, 0.0, &z, cfg.h);
        check_state(&z, step, cfg.h)?;
        record(&z, &mut t, &mut xs, &mut ys, &mut es, step as f64 * cfg.h);
    }
    Ok(Trajectory {
        t,
        x: xs,
        y: ys,
        e: es,
        h: cfg.h,
    })
}

/// Per-component maxima of |x1|, |x2|, |x3| over a master window.
pub fn estimate_bounds(traj: &MasterTrajectory) -> Result<Bounds> {
    if traj.is_empty() {
        return Err(GlsError::EmptyWindow);
    }
    let mut b = [0.0f64; 3];
    for x in &traj.x {
        for i in 0..3 {
            b[i] = b[i].max(x[i].abs());
        }
    }
    Ok(Bounds {
        m: b[0],
        n: b[1],
        p: b[2],
    })
}

/// Writes a coupled trajectory as CSV with the exact header
/// `t,x1,x2,x3,y1,y2,y3,E1,E2,E3`. Floats round-trip exactly.
pub fn write_trajectory_csv(traj: &Trajectory, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "t,x1,x2,x3,y1,y2,y3,E1,E2,E3")?;
    for i in 0..traj.len() {
        let (x, y, e) = (traj.x[i], traj.y[i], traj.e[i]);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            traj.t[i], x[0], x[1], x[2], y[0], y[1], y[2], e[0], e[1], e[2]
        )?;
    }
    Ok(())
}

//! Coupled chaotic oscillators with a tunable synchronization manifold.
//!
//! A one-parameter family of Lorenz-like systems is run in a master/slave
//! pair. The slave carries nonlinear controls built so that the weighted
//! error E_i = y_i + σ_i·x_i decays for suitable weights; picking the σ
//! triple then dials each channel pair anywhere between synchronization
//! (slope +1), amplitude-scaled agreement, and anti-synchronization
//! (slope −1), all coexisting in one run.
//!
//! The crate provides:
//! - [`gls`]: the vector fields, the control law and its sub-terms, the
//!   weighted error, and the quadratic form governing its decay;
//! - [`integrate`]: a fixed-step RK4 driver for the single and coupled
//!   systems with divergence detection and CSV export;
//! - [`stability`]: the algebraic decay conditions, in symbolic and
//!   k-polynomial form, checked against per-channel amplitude bounds;
//! - [`sync`]: slope/quality/correlation metrics for channel pairs plus
//!   σ-sweep drivers;
//! - [`spectral`]: Hann-windowed power spectra, FFT band-passing, and
//!   single-tone least-squares fits;
//! - [`comms`]: the chaos-masking pipeline that hides sinusoids on the
//!   transmitted channels and recovers them from the decoded residual.

pub mod comms;
pub mod error;
pub mod gls;
pub mod integrate;
pub mod spectral;
pub mod stability;
pub mod sync;

pub use comms::{
    case_frequencies, combined_residual, decode_residual, encode_and_run, fits_to_json,
    message_sample, run_case, run_pipeline, write_residual_csv, CommsConfig, DecodedResult,
    EncodedRun, InjectionMode, MessageSpec, Regime,
};
pub use error::{GlsError, Result};
pub use gls::{
    control_inputs, control_inputs_masked, error_deriv_closed_form, error_vec, lyapunov_value,
    master_deriv, params_from_k, q_matrix, q_matrix_flow, slave_deriv, slave_deriv_masked,
    v_dot, ErrorVec, GlsParams, QMatrix, SubTermMask, Vec3,
};
pub use integrate::{
    discard_transient, estimate_bounds, integrate_coupled, integrate_master, rk4_step,
    rk4_step_at, write_trajectory_csv, MasterTrajectory, SimConfig, Trajectory,
    DIVERGENCE_LIMIT,
};
pub use spectral::{band_pass, fit_sine, has_local_peak_near, power_spectrum, SineFit};
pub use stability::{
    conditions_k_poly, conditions_symbolic, pd_check_worstcase, stability_report, Bounds,
    CondResult, PdResult, StabilityReport,
};
pub use sync::{
    convergence_time, cross_correlation, figure_sigma_grid, fit_sync_slope,
    literal_sigma_grid, sweep_point, sweep_point_recorded, sweep_sigma, sync_quality,
    write_sweep_csv, zero_lag_correlation, ChannelPair, SweepResult, SweepRow, SyncMetrics,
    CONV_EPS,
};

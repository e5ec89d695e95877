//! The coupled generalized-Lorenz pair: master/slave vector fields, the
//! nonlinear control law driving the slave, the generalized error system,
//! and the Lyapunov quantities used by the stability diagnostics.

use crate::error::{GlsError, Result};

/// Three-component vector used for states, control parameters, and errors.
pub type Vec3 = [f64; 3];

/// System coefficients derived from the scalar family parameter k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlsParams {
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Coefficients at parameter k:
/// a = 10 + (25/29)k, b = 28 − (35/29)k, c = −8/3 − k/87, d = k − 1.
///
/// k = 0 recovers the classical constants (10, 28, −8/3, −1).
pub fn params_from_k(k: f64) -> Result<GlsParams> {
    if !k.is_finite() {
        return Err(GlsError::InvalidInput(format!("k must be finite, got {k}")));
    }
    Ok(GlsParams {
        k,
        a: 10.0 + 25.0 / 29.0 * k,
        b: 28.0 - 35.0 / 29.0 * k,
        c: -8.0 / 3.0 - k / 87.0,
        d: k - 1.0,
    })
}

/// Free-running master field:
/// (a(x2−x1), b·x1 + d·x2 − x1·x3, x1·x2 + c·x3).
pub fn master_deriv(p: &GlsParams, x: &Vec3) -> Vec3 {
    [
        p.a * (x[1] - x[0]),
        p.b * x[0] + p.d * x[1] - x[0] * x[2],
        x[0] * x[1] + p.c * x[2],
    ]
}

/// Generalized error of a master/slave state pair.
///
/// `e[i] = y[i] + sigma[i]·x[i]`; `e3` is the plain synchronization error
/// of the third channel, `y3 − x3`, kept alongside because the two sign
/// conventions coexist in the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorVec {
    pub e: Vec3,
    pub e3: f64,
}

pub fn error_vec(sigma: &Vec3, x: &Vec3, y: &Vec3) -> ErrorVec {
    ErrorVec {
        e: [
            y[0] + sigma[0] * x[0],
            y[1] + sigma[1] * x[1],
            y[2] + sigma[2] * x[2],
        ],
        e3: y[2] - x[2],
    }
}

/// Enables or disables the individual control sub-terms for diagnostic
/// ablation. All terms are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubTermMask {
    pub ua1: bool,
    pub ub1: bool,
    pub uc1: bool,
    pub ua2: bool,
    pub ub2: bool,
    pub uc2: bool,
    pub ua3: bool,
    pub ub3: bool,
}

impl Default for SubTermMask {
    fn default() -> Self {
        Self {
            ua1: true,
            ub1: true,
            uc1: true,
            ua2: true,
            ub2: true,
            uc2: true,
            ua3: true,
            ub3: true,
        }
    }
}

impl SubTermMask {
    /// Parses a comma-separated list of sub-term names to disable.
    pub fn with_disabled(list: &str) -> Result<Self> {
        let mut mask = Self::default();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "ua1" => mask.ua1 = false,
                "ub1" => mask.ub1 = false,
                "uc1" => mask.uc1 = false,
                "ua2" => mask.ua2 = false,
                "ub2" => mask.ub2 = false,
                "uc2" => mask.uc2 = false,
                "ua3" => mask.ua3 = false,
                "ub3" => mask.ub3 = false,
                other => {
                    return Err(GlsError::InvalidInput(format!(
                        "unknown control sub-term {other:?} (expected ua1..uc2, ua3, ub3)"
                    )))
                }
            }
        }
        Ok(mask)
    }

    pub fn disabled_names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.ua1 {
            out.push("ua1");
        }
        if !self.ub1 {
            out.push("ub1");
        }
        if !self.uc1 {
            out.push("uc1");
        }
        if !self.ua2 {
            out.push("ua2");
        }
        if !self.ub2 {
            out.push("ub2");
        }
        if !self.uc2 {
            out.push("uc2");
        }
        if !self.ua3 {
            out.push("ua3");
        }
        if !self.ub3 {
            out.push("ub3");
        }
        out
    }
}

/// Control inputs applied to the slave, composed from eight sub-terms:
///
/// u1 = ua1 − ub1 + uc1, u2 = ua2 + ub2 + uc2, u3 = −ua3 − ub3, with
///
/// ua1 = (σ2−σ1)·a·x2, ub1 = (b + σ3·x3)·E2, uc1 = σ2·x2·E3,
/// ua2 = (σ1−σ2)·b·x1, ub2 = (σ1σ3 + σ2)·x1·x3, uc2 = E3·E1 − a·E1 − 2c·E2,
/// ua3 = (σ1σ2 + σ3)·x1·x2, ub3 = E1·E2.
pub fn control_inputs(p: &GlsParams, sigma: &Vec3, x: &Vec3, e: &Vec3) -> Vec3 {
    control_inputs_masked(p, sigma, x, e, &SubTermMask::default())
}

/// Same composition with individual sub-terms switchable off.
pub fn control_inputs_masked(
    p: &GlsParams,
    sigma: &Vec3,
    x: &Vec3,
    e: &Vec3,
    mask: &SubTermMask,
) -> Vec3 {
    let (s1, s2, s3) = (sigma[0], sigma[1], sigma[2]);
    let term = |on: bool, v: f64| if on { v } else { 0.0 };

    let ua1 = term(mask.ua1, (s2 - s1) * p.a * x[1]);
    let ub1 = term(mask.ub1, (p.b + s3 * x[2]) * e[1]);
    let uc1 = term(mask.uc1, s2 * x[1] * e[2]);
    let ua2 = term(mask.ua2, (s1 - s2) * p.b * x[0]);
    let ub2 = term(mask.ub2, (s1 * s3 + s2) * x[0] * x[2]);
    let uc2 = term(mask.uc2, e[2] * e[0] - p.a * e[0] - 2.0 * p.c * e[1]);
    let ua3 = term(mask.ua3, (s1 * s2 + s3) * x[0] * x[1]);
    let ub3 = term(mask.ub3, e[0] * e[1]);

    [ua1 - ub1 + uc1, ua2 + ub2 + uc2, -ua3 - ub3]
}

/// Controlled slave field: the same family field evaluated on y plus the
/// control inputs computed from the received master state.
pub fn slave_deriv(p: &GlsParams, sigma: &Vec3, x: &Vec3, y: &Vec3) -> Vec3 {
    slave_deriv_masked(p, sigma, x, y, &SubTermMask::default())
}

pub fn slave_deriv_masked(
    p: &GlsParams,
    sigma: &Vec3,
    x: &Vec3,
    y: &Vec3,
    mask: &SubTermMask,
) -> Vec3 {
    let e = error_vec(sigma, x, y).e;
    let u = control_inputs_masked(p, sigma, x, &e, mask);
    [
        p.a * (y[1] - y[0]) + u[0],
        p.b * y[0] + p.d * y[1] - y[0] * y[2] + u[1],
        y[0] * y[1] + p.c * y[2] + u[2],
    ]
}

/// Closed-form derivative of the generalized error under the control law:
///
/// Ė1 = −a·E1 + (a − b − σ3x3)·E2 + σ2x2·E3
/// Ė2 = (b − a + σ3x3)·E1 + (d − 2c)·E2 + σ1x1·E3
/// Ė3 = −σ2x2·E1 − σ1x1·E2 + c·E3
pub fn error_deriv_closed_form(p: &GlsParams, sigma: &Vec3, x: &Vec3, e: &Vec3) -> Vec3 {
    let (s1, s2, s3) = (sigma[0], sigma[1], sigma[2]);
    [
        -p.a * e[0] + (p.a - p.b - s3 * x[2]) * e[1] + s2 * x[1] * e[2],
        (p.b - p.a + s3 * x[2]) * e[0] + (p.d - 2.0 * p.c) * e[1] + s1 * x[0] * e[2],
        -s2 * x[1] * e[0] - s1 * x[0] * e[1] + p.c * e[2],
    ]
}

/// V = (E1² + E2² + E3²)/2.
pub fn lyapunov_value(e: &Vec3) -> f64 {
    0.5 * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
}

/// 3×3 state-dependent matrix from the Lyapunov analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QMatrix(pub [[f64; 3]; 3]);

impl QMatrix {
    /// eᵀ·Q·e.
    pub fn quad_form(&self, e: &Vec3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += e[i] * self.0[i][j] * e[j];
            }
        }
        acc
    }

    /// (Q + Qᵀ)/2. For this system the (1,3) and (2,3) off-diagonal pairs
    /// are skew, so the symmetric part reduces to a 2×2 block plus −c.
    pub fn symmetric_part(&self) -> [[f64; 3]; 3] {
        let q = &self.0;
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = 0.5 * (q[i][j] + q[j][i]);
            }
        }
        s
    }
}

/// The written-out coefficient matrix of the error-contraction analysis:
///
/// | a           a−b+σ3x3   −σ2x2 |
/// | b−a+σ3x3    2c−d       −σ1x1 |
/// | σ2x2        σ1x1       −c    |
///
/// Note its (1,2)/(2,1) pair is not skew (the entries sum to 2σ3x3), so
/// −eᵀQe differs from the error flow's e·ė by 2σ3x3·E1E2. See
/// [`q_matrix_flow`] for the variant consistent with the flow.
pub fn q_matrix(p: &GlsParams, sigma: &Vec3, x: &Vec3) -> QMatrix {
    let (s1, s2, s3) = (sigma[0], sigma[1], sigma[2]);
    QMatrix([
        [p.a, p.a - p.b + s3 * x[2], -s2 * x[1]],
        [p.b - p.a + s3 * x[2], 2.0 * p.c - p.d, -s1 * x[0]],
        [s2 * x[1], s1 * x[0], -p.c],
    ])
}

/// Variant of [`q_matrix`] with the (1,2) entry's σ3x3 sign flipped so that
/// the (1,2)/(2,1) pair is skew. With this variant −eᵀQe reproduces
/// e·[`error_deriv_closed_form`] exactly, which is what [`v_dot`] evaluates.
pub fn q_matrix_flow(p: &GlsParams, sigma: &Vec3, x: &Vec3) -> QMatrix {
    let mut q = q_matrix(p, sigma, x);
    q.0[0][1] = p.a - p.b - sigma[2] * x[2];
    q
}

/// V̇ = −EᵀQE evaluated with the flow-consistent matrix, which equals
/// E·Ė of the closed-form error dynamics.
pub fn v_dot(p: &GlsParams, sigma: &Vec3, x: &Vec3, e: &Vec3) -> f64 {
    -q_matrix_flow(p, sigma, x).quad_form(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn params_at_half() {
        let p = params_from_k(0.5).unwrap();
        assert_relative_eq!(p.a, 10.431034482758621, max_relative = 1e-15);
        assert_relative_eq!(p.b, 27.396551724137932, max_relative = 1e-15);
        assert_relative_eq!(p.c, -2.6724137931034484, max_relative = 1e-15);
        assert_relative_eq!(p.d, -0.5, max_relative = 1e-15);
    }

    #[test]
    fn params_at_zero_are_classical() {
        let p = params_from_k(0.0).unwrap();
        assert_eq!(p.a, 10.0);
        assert_eq!(p.b, 28.0);
        assert_eq!(p.c, -8.0 / 3.0);
        assert_eq!(p.d, -1.0);
    }

    #[test]
    fn params_at_29() {
        let p = params_from_k(29.0).unwrap();
        assert_relative_eq!(p.a, 35.0, max_relative = 1e-14);
        assert_relative_eq!(p.b, -7.0, max_relative = 1e-13);
        assert_relative_eq!(p.c, -3.0, max_relative = 1e-14);
        assert_relative_eq!(p.d, 28.0, max_relative = 1e-15);
    }

    #[test]
    fn params_reject_non_finite() {
        assert!(params_from_k(f64::NAN).is_err());
        assert!(params_from_k(f64::INFINITY).is_err());
    }

    #[test]
    fn master_origin_is_fixed_point() {
        let p = params_from_k(0.5).unwrap();
        assert_eq!(master_deriv(&p, &[0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn master_at_ones() {
        let p = params_from_k(0.5).unwrap();
        let dx = master_deriv(&p, &[1.0, 1.0, 1.0]);
        assert_eq!(dx[0], 0.0);
        // b + d − 1 and 1 + c at k = 0.5
        assert_relative_eq!(dx[1], 25.896551724137932, max_relative = 1e-15);
        assert_relative_eq!(dx[2], -1.6724137931034484, max_relative = 1e-15);
    }

    #[test]
    fn master_classical_point() {
        let p = params_from_k(0.0).unwrap();
        let dx = master_deriv(&p, &[1.0, 2.0, 3.0]);
        assert_eq!(dx[0], 10.0);
        assert_eq!(dx[1], 23.0);
        assert_eq!(dx[2], -6.0);
    }

    #[test]
    fn error_vec_anti_sync_target() {
        let ev = error_vec(&[1.0, 1.0, 1.0], &[2.0, -3.0, 0.5], &[-2.0, 3.0, -0.5]);
        assert_eq!(ev.e, [0.0, 0.0, 0.0]);
        assert_eq!(ev.e3, -1.0);
    }

    #[test]
    fn error_vec_sigma_zero_returns_slave() {
        let ev = error_vec(&[0.0, 0.0, 0.0], &[9.0, 9.0, 9.0], &[1.0, 2.0, 3.0]);
        assert_eq!(ev.e, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn error_vec_mixed_target() {
        let ev = error_vec(&[1.0, 1.0, -1.0], &[1.0, 2.0, 3.0], &[-1.0, -2.0, 3.0]);
        assert_eq!(ev.e, [0.0, 0.0, 0.0]);
        assert_eq!(ev.e3, 0.0);
    }

    #[test]
    fn control_zero_error_case() {
        let p = params_from_k(0.5).unwrap();
        let u = control_inputs(&p, &[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]);
        assert_eq!(u, [0.0, 6.0, -4.0]);
    }

    #[test]
    fn control_sigma_zero_reduces() {
        let p = params_from_k(0.5).unwrap();
        let e = [0.7, -1.3, 2.1];
        let u = control_inputs(&p, &[0.0, 0.0, 0.0], &[5.0, -4.0, 3.0], &e);
        assert_relative_eq!(u[0], -p.b * e[1], max_relative = 1e-15);
        assert_relative_eq!(
            u[1],
            e[2] * e[0] - p.a * e[0] - 2.0 * p.c * e[1],
            max_relative = 1e-15
        );
        assert_relative_eq!(u[2], -e[0] * e[1], max_relative = 1e-15);
    }

    #[test]
    fn control_zero_state_case() {
        let p = params_from_k(0.5).unwrap();
        let u = control_inputs(&p, &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        assert_relative_eq!(u[0], -p.b, max_relative = 1e-15);
        assert_relative_eq!(u[1], 1.0 - p.a - 2.0 * p.c, max_relative = 1e-14);
        assert_eq!(u[2], -1.0);
    }

    #[test]
    fn mask_disables_terms() {
        let p = params_from_k(0.5).unwrap();
        let all_off = SubTermMask::with_disabled("ua1,ub1,uc1,ua2,ub2,uc2,ua3,ub3").unwrap();
        let u = control_inputs_masked(
            &p,
            &[1.0, -0.5, 0.25],
            &[1.0, 2.0, 3.0],
            &[4.0, 5.0, 6.0],
            &all_off,
        );
        assert_eq!(u, [0.0, 0.0, 0.0]);
        assert!(SubTermMask::with_disabled("bogus").is_err());
        assert_eq!(SubTermMask::with_disabled("").unwrap(), SubTermMask::default());
    }

    #[test]
    fn slave_origin_fixed_point_any_sigma() {
        let p = params_from_k(0.5).unwrap();
        for s3 in [-1.0, 0.0, 1.0] {
            let d = slave_deriv(&p, &[1.0, 1.0, s3], &[0.0; 3], &[0.0; 3]);
            assert_eq!(d, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn closed_form_zero_error() {
        let p = params_from_k(0.5).unwrap();
        let de = error_deriv_closed_form(&p, &[1.0, 1.0, -1.0], &[3.0, -2.0, 7.0], &[0.0; 3]);
        assert_eq!(de, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn closed_form_e2_axis_sigma_zero() {
        let p = params_from_k(0.5).unwrap();
        let de = error_deriv_closed_form(&p, &[0.0; 3], &[1.0, 1.0, 1.0], &[0.0, 1.0, 0.0]);
        assert_relative_eq!(de[0], p.a - p.b, max_relative = 1e-15);
        assert_relative_eq!(de[1], p.d - 2.0 * p.c, max_relative = 1e-15);
        assert_eq!(de[2], 0.0);
    }

    #[test]
    fn lyapunov_values() {
        assert_eq!(lyapunov_value(&[0.0; 3]), 0.0);
        assert_eq!(lyapunov_value(&[1.0, 1.0, 1.0]), 1.5);
        assert_eq!(lyapunov_value(&[3.0, 4.0, 0.0]), 12.5);
    }

    #[test]
    fn q_matrix_sigma_zero() {
        let p = params_from_k(0.5).unwrap();
        let q = q_matrix(&p, &[0.0; 3], &[5.0, -6.0, 7.0]).0;
        assert_eq!(q[0], [p.a, p.a - p.b, 0.0]);
        assert_eq!(q[1], [p.b - p.a, 2.0 * p.c - p.d, 0.0]);
        assert_eq!(q[2], [0.0, 0.0, -p.c]);
    }

    #[test]
    fn q_center_entry_is_negative_at_half() {
        let p = params_from_k(0.5).unwrap();
        let q = q_matrix(&p, &[1.0, 1.0, 1.0], &[0.0; 3]).0;
        assert_relative_eq!(q[1][1], -4.844827586206897, max_relative = 1e-14);
    }

    #[test]
    fn q_offdiagonal_skewness() {
        let p = params_from_k(0.5).unwrap();
        let sigma = [0.3, -0.7, 0.9];
        let x = [2.0, -5.0, 4.0];
        let q = q_matrix(&p, &sigma, &x).0;
        assert_relative_eq!(q[0][1] + q[1][0], 2.0 * sigma[2] * x[2], max_relative = 1e-14);
        assert_eq!(q[0][2] + q[2][0], 0.0);
        assert_eq!(q[1][2] + q[2][1], 0.0);
    }

    #[test]
    fn v_dot_matches_error_flow() {
        let p = params_from_k(0.5).unwrap();
        let sigma = [0.4, -0.9, 0.6];
        let x = [11.0, -7.0, 19.0];
        let e = [0.5, -2.5, 1.5];
        let de = error_deriv_closed_form(&p, &sigma, &x, &e);
        let lhs = e[0] * de[0] + e[1] * de[1] + e[2] * de[2];
        assert_relative_eq!(v_dot(&p, &sigma, &x, &e), lhs, max_relative = 1e-12);
    }
}

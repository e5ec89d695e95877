//! Positive-definiteness diagnostics for the error-contraction analysis, in
//! two published forms that disagree numerically (both are reported, neither
//! is "corrected"), plus a worst-case minor test over the bound corners.

use crate::error::Result;
use crate::gls::{params_from_k, q_matrix, GlsParams, Vec3};
use crate::integrate::{estimate_bounds, integrate_master, SimConfig};
use serde::Serialize;

/// Upper bounds on |x1|, |x2|, |x3| over an attractor window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

/// One inequality outcome. `holds` is `margin > 0` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondResult {
    pub holds: bool,
    pub margin: f64,
}

impl CondResult {
    fn from_margin(margin: f64) -> Self {
        Self {
            holds: margin > 0.0,
            margin,
        }
    }
}

/// The three conditions in coefficient form; margins are LHS − RHS.
///
/// (i) a > 0
/// (ii) a² + b² − 2a(b − c) − ad > P²
/// (iii) 2MNP + aM² + (2c − d)N² + cP² > c(2ac − ad + 2ab − a² − b²)
pub fn conditions_symbolic(p: &GlsParams, b: &Bounds) -> [CondResult; 3] {
    let (a, bb, c, d) = (p.a, p.b, p.c, p.d);
    let m1 = a;
    let lhs2 = a * a + bb * bb - 2.0 * a * (bb - c) - a * d;
    let m2 = lhs2 - b.p * b.p;
    let lhs3 = 2.0 * b.m * b.n * b.p + a * b.m * b.m + (2.0 * c - d) * b.n * b.n + c * b.p * b.p;
    let rhs3 = c * (2.0 * a * c - a * d + 2.0 * a * bb - a * a - bb * bb);
    [
        CondResult::from_margin(m1),
        CondResult::from_margin(m2),
        CondResult::from_margin(lhs3 - rhs3),
    ]
}

/// The same three conditions restated as inequalities in k, with the
/// published numeric coefficients taken verbatim:
///
/// (i) 10 + (25/29)k > 0
/// (ii) k² − 527.49k + 686.03 > P²
/// (iii) −(0.0056k³ + 1.84k² − (0.86M² + 1.01N² + 0.01P² − 109.8)k)
///        > −2MNP + 10M² − 4.33N² + 2.67P²
///
/// At k = 0.5 the (ii) left side evaluates to 422.535 while the coefficient
/// form gives 237.29…; the two restatements do not agree and the report
/// surfaces both.
pub fn conditions_k_poly(k: f64, b: &Bounds) -> [CondResult; 3] {
    let m1 = 10.0 + 25.0 / 29.0 * k;
    let lhs2 = k * k - 527.49 * k + 686.03;
    let m2 = lhs2 - b.p * b.p;
    let (m, n, p) = (b.m, b.n, b.p);
    let lhs3 = -(0.0056 * k * k * k + 1.84 * k * k
        - (0.86 * m * m + 1.01 * n * n + 0.01 * p * p - 109.8) * k);
    let rhs3 = -2.0 * m * n * p + 10.0 * m * m - 4.33 * n * n + 2.67 * p * p;
    [
        CondResult::from_margin(m1),
        CondResult::from_margin(m2),
        CondResult::from_margin(lhs3 - rhs3),
    ]
}

/// Outcome of the worst-case positive-definiteness scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdResult {
    pub holds: bool,
    pub min_minor: f64,
}

/// Evaluates the symmetric part of Q at the eight sign corners
/// (±M, ±N, ±P) and tests every leading principal minor at each corner.
/// `min_minor` is the smallest minor seen anywhere.
pub fn pd_check_worstcase(p: &GlsParams, sigma: &Vec3, b: &Bounds) -> PdResult {
    let mut min_minor = f64::INFINITY;
    for sx in [-b.m, b.m] {
        for sy in [-b.n, b.n] {
            for sz in [-b.p, b.p] {
                let s = q_matrix(p, sigma, &[sx, sy, sz]).symmetric_part();
                let d1 = s[0][0];
                let d2 = s[0][0] * s[1][1] - s[0][1] * s[1][0];
                let d3 = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1])
                    - s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0])
                    + s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
                min_minor = min_minor.min(d1).min(d2).min(d3);
            }
        }
    }
    PdResult {
        holds: min_minor > 0.0,
        min_minor,
    }
}

/// Full diagnostic record, serializable to the report schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub k: f64,
    pub bounds: Bounds,
    pub symbolic: [CondResult; 3],
    pub k_poly: [CondResult; 3],
    pub pd_worstcase: PdResult,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        // struct serialization is field-ordered, so bytes are reproducible
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Runs the master (per the config), estimates bounds over the
/// post-transient window, and evaluates all three checks. Supplying
/// `override_bounds` skips the integration entirely.
pub fn stability_report(
    cfg: &SimConfig,
    override_bounds: Option<Bounds>,
) -> Result<StabilityReport> {
    let bounds = match override_bounds {
        Some(b) => b,
        None => {
            let traj = integrate_master(cfg)?;
            estimate_bounds(&traj.suffix(cfg.transient_steps)?)?
        }
    };
    let p = params_from_k(cfg.k)?;
    Ok(StabilityReport {
        k: cfg.k,
        bounds,
        symbolic: conditions_symbolic(&p, &bounds),
        k_poly: conditions_k_poly(cfg.k, &bounds),
        pd_worstcase: pd_check_worstcase(&p, &cfg.sigma, &bounds),
    })
}

//! Comparison series: the weighted trace bound and volume expansion along
//! transport geodesics, mean curvature of geodesic spheres, Bishop–Gromov
//! ratios and the asymptotic volume ratio.

use serde::{Deserialize, Serialize};

use super::{ComparisonError, ComparisonSeries, JacobiState};
use crate::geometry::RotSymSpace;
use crate::quadrature::QuadTolerance;

/// Absolute slack for `value <= bound` audits.
pub const BOUND_TOL: f64 = 1e-7;
/// Per-step relative slack for monotonicity audits.
pub const MONOTONE_REL_TOL: f64 = 1e-9;
/// Number of dyadic radii used by [`avr_estimate`].
pub const AVR_LEVELS: usize = 8;
/// Extrapolation error, relative to the last ratio, below which the AVR
/// series counts as settled.
pub const AVR_SETTLE_TOL: f64 = 1e-3;

fn check_f(f_value: f64) -> Result<f64, ComparisonError> {
    if f_value > 0.0 && f_value.is_finite() {
        Ok(f_value)
    } else {
        Err(ComparisonError::InvalidInput(format!(
            "f value must be positive and finite, got {f_value}"
        )))
    }
}

/// `tr Q(t) + <D log w, γ'>` against `(m+α) F / (1 + t F)` with
/// `F = f^{1/(m+α-1)}`.
pub fn weighted_trace_bound(
    space: &RotSymSpace,
    states: &[JacobiState],
    f_value: f64,
) -> Result<ComparisonSeries, ComparisonError> {
    let f_value = check_f(f_value)?;
    let n = space.dim_eff();
    let big_f = f_value.powf(1.0 / (n - 1.0));
    let mut ts = Vec::with_capacity(states.len());
    let mut lhs = Vec::with_capacity(states.len());
    let mut bound = Vec::with_capacity(states.len());
    for st in states {
        let drift = space.log_w(st.position).d1 * st.speed;
        ts.push(st.t);
        lhs.push(st.trace_q() + drift);
        bound.push(n * big_f / (1.0 + st.t * big_f));
    }
    Ok(ComparisonSeries::bounded(
        "weighted-trace-bound",
        ts,
        lhs,
        bound,
        BOUND_TOL,
    ))
}

/// `w(γ(t)) det P(t)` and its normalization by `(1 + t F)^{-(m+α)}`, which
/// must be nonincreasing.
pub fn volume_expansion_series(
    space: &RotSymSpace,
    states: &[JacobiState],
    f_value: f64,
) -> Result<ComparisonSeries, ComparisonError> {
    let f_value = check_f(f_value)?;
    let n = space.dim_eff();
    let big_f = f_value.powf(1.0 / (n - 1.0));
    let mut ts = Vec::with_capacity(states.len());
    let mut values = Vec::with_capacity(states.len());
    let mut normalized = Vec::with_capacity(states.len());
    for st in states {
        let v = space.w(st.position).v * st.det_p();
        ts.push(st.t);
        values.push(v);
        normalized.push(v * (1.0 + st.t * big_f).powf(-n));
    }
    Ok(ComparisonSeries::monotone(
        "volume-expansion",
        ts,
        values,
        normalized,
        MONOTONE_REL_TOL,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureAudit {
    /// `H + (log w)'` against `(m-1+α)/t`.
    pub comparison: ComparisonSeries,
    /// `d/dt [H + (log w)']` against `-(H + (log w)')²/(m-1+α)`.
    pub differential: ComparisonSeries,
}

impl MeanCurvatureAudit {
    pub fn is_clean(&self) -> bool {
        self.comparison.is_clean() && self.differential.is_clean()
    }
}

/// Weighted mean curvature of the geodesic spheres about the pole,
/// `H = (m-1) φ'/φ` plus `(log w)'`.
pub fn mean_curvature_comparison(
    space: &RotSymSpace,
    t_grid: &[f64],
) -> Result<MeanCurvatureAudit, ComparisonError> {
    let k = space.m as f64 - 1.0 + space.alpha;
    let mut lhs = Vec::with_capacity(t_grid.len());
    let mut bound = Vec::with_capacity(t_grid.len());
    let mut dlhs = Vec::with_capacity(t_grid.len());
    let mut dbound = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0 && t <= space.r_max) {
            return Err(ComparisonError::InvalidInput(format!(
                "mean-curvature radius {t} outside (0, {}]",
                space.r_max
            )));
        }
        let p = space.phi(t);
        let lw = space.log_w(t);
        let ratio = p.d1 / p.v;
        let m1 = space.m as f64 - 1.0;
        let value = m1 * ratio + lw.d1;
        let deriv = m1 * (p.d2 / p.v - ratio * ratio) + lw.d2;
        lhs.push(value);
        bound.push(k / t);
        dlhs.push(deriv);
        dbound.push(-value * value / k);
    }
    Ok(MeanCurvatureAudit {
        comparison: ComparisonSeries::bounded(
            "mean-curvature",
            t_grid.to_vec(),
            lhs,
            bound,
            BOUND_TOL,
        ),
        differential: ComparisonSeries::bounded(
            "mean-curvature-riccati",
            t_grid.to_vec(),
            dlhs,
            dbound,
            BOUND_TOL,
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallOrSphere {
    Ball,
    Sphere,
}

/// Ball mode: `r^{-(m+α)} ∫_{B_r} w`. Sphere mode: `t^{-(m-1+α)} ∫_{Σ_t} w`.
pub fn bishop_gromov(
    space: &RotSymSpace,
    radii: &[f64],
    mode: BallOrSphere,
) -> Result<ComparisonSeries, ComparisonError> {
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(ComparisonError::InvalidInput("radii must be positive".into()));
    }
    let n = space.dim_eff();
    let (label, values, power) = match mode {
        BallOrSphere::Ball => {
            let vols = space.weighted_ball_volumes(radii, QuadTolerance::default())?;
            ("bishop-gromov-ball", vols.iter().map(|e| e.value).collect::<Vec<_>>(), n)
        }
        BallOrSphere::Sphere => {
            let areas = radii
                .iter()
                .map(|&t| space.weighted_sphere_area(t))
                .collect::<Result<Vec<_>, _>>()?;
            ("bishop-gromov-sphere", areas, n - 1.0)
        }
    };
    let normalized = values
        .iter()
        .zip(radii)
        .map(|(v, r)| v / r.powf(power))
        .collect();
    Ok(ComparisonSeries::monotone(
        label,
        radii.to_vec(),
        values,
        normalized,
        MONOTONE_REL_TOL,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvrEstimate {
    pub alpha: f64,
    /// Extrapolated limit, clamped at zero.
    pub estimate: f64,
    /// Extrapolated limit before clamping.
    pub raw: f64,
    pub extrapolation_error: f64,
    /// Whether the extrapolation error is below [`AVR_SETTLE_TOL`] times the
    /// last ratio. When false the estimate is inconclusive and only
    /// `upper_bound` is meaningful.
    pub settled: bool,
    /// Ratio at the largest radius.
    pub upper_bound: f64,
    /// Estimated `2^p` for a tail `C r^{-p}`, when the tail looks algebraic.
    pub contraction: Option<f64>,
    pub radii: Vec<f64>,
    pub series: Vec<f64>,
}

/// One Richardson step on the last three terms of a dyadic series, with
/// the contraction factor read off the last two differences.
fn richardson(a: &[f64]) -> (f64, Option<f64>) {
    let n = a.len();
    let d1 = a[n - 3] - a[n - 2];
    let d2 = a[n - 2] - a[n - 1];
    if d2 == 0.0 {
        return (a[n - 1], None);
    }
    let rho = d1 / d2;
    if rho.is_finite() && rho > 1.05 {
        (a[n - 1] - d2 / (rho - 1.0), Some(rho))
    } else {
        (a[n - 1], None)
    }
}

/// Limit of `r^{-(m+α)} ∫_{B_r} w` from the ratios at the dyadic radii
/// `r_max / 2^k`, `k = 7, ..., 0`.
pub fn avr_estimate(space: &RotSymSpace, alpha: f64) -> Result<AvrEstimate, ComparisonError> {
    if !(alpha > 0.0) {
        return Err(ComparisonError::InvalidInput(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let radii: Vec<f64> = (0..AVR_LEVELS)
        .map(|k| space.r_max / 2f64.powi((AVR_LEVELS - 1 - k) as i32))
        .collect();
    let vols = space.weighted_ball_volumes(&radii, QuadTolerance::default())?;
    let power = space.m as f64 + alpha;
    let series: Vec<f64> = vols
        .iter()
        .zip(&radii)
        .map(|(v, r)| v.value / r.powf(power))
        .collect();
    let quad_err: Vec<f64> = vols
        .iter()
        .zip(&radii)
        .map(|(v, r)| v.error / r.powf(power))
        .collect();
    if series.iter().any(|a| !a.is_finite()) {
        return Err(ComparisonError::InvalidInput(
            "ball volumes overflow at the dyadic radii".into(),
        ));
    }
    let k = AVR_LEVELS;
    let (limit, rho) = richardson(&series);
    let (prev, _) = richardson(&series[..k - 1]);
    let last = series[k - 1];
    let scale = series.iter().fold(0.0f64, |s, a| s.max(a.abs()));
    let (amplify, tail) = match rho {
        Some(r) => (1.0 + 2.0 / (r - 1.0), (limit - prev).abs()),
        None => (1.0, (series[k - 2] - last).abs()),
    };
    let quad = quad_err[k - 3..].iter().sum::<f64>() * amplify;
    let rounding = 16.0 * f64::EPSILON * scale * amplify;
    let extrapolation_error = tail + quad + rounding;
    Ok(AvrEstimate {
        alpha,
        estimate: limit.max(0.0),
        raw: limit,
        extrapolation_error,
        settled: extrapolation_error <= AVR_SETTLE_TOL * last.abs(),
        upper_bound: last,
        contraction: rho,
        radii,
        series,
    })
}

//! Matrix Jacobi fields along radial geodesics.
//!
//! Along `gamma(t) = s0 + v t` (signed radius, fixed angle) take the
//! parallel frame `E_1 = ∂_r`, `E_2..E_m` tangential. Jacobi fields with
//! `X_i(0) = e_i`, `X_i'(0) = D²u(e_i)` give `P_ij = <X_i, E_j>`, which
//! solves `P'' = -P S` with `S_ij = Rm(E_i, γ', γ', E_j)`. Here `S` is
//! diagonal with entries `(0, v² K_rad, ..., v² K_rad)`, but full matrices
//! are kept so nothing below depends on that.

use nalgebra::DMatrix;

use super::ComparisonError;
use crate::geometry::RotSymSpace;
use crate::ode::rk4_step_dyn;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiState {
    pub t: f64,
    /// Signed radius of `gamma(t)`.
    pub position: f64,
    /// Signed radial speed of `gamma`.
    pub speed: f64,
    pub p: DMatrix<f64>,
    pub pdot: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// `ln |det P|`.
    pub logdet_p: f64,
}

impl JacobiState {
    pub fn det_p(&self) -> f64 {
        self.p.determinant()
    }

    pub fn trace_q(&self) -> f64 {
        self.q.trace()
    }

    /// `max |Q - Q^T|`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.q - self.q.transpose()).amax()
    }
}

impl RotSymSpace {
    /// Curvature matrix `S` at signed radius `s` for radial speed `v`.
    pub fn jacobi_curvature(&self, s: f64, v: f64) -> DMatrix<f64> {
        let k_rad = -self.radial_curvature_factor(s);
        let mut out = DMatrix::zeros(self.m, self.m);
        for i in 1..self.m {
            out[(i, i)] = v * v * k_rad;
        }
        out
    }
}

fn state_from(
    space: &RotSymSpace,
    t: f64,
    s0: f64,
    speed: f64,
    p: DMatrix<f64>,
    pdot: DMatrix<f64>,
) -> JacobiState {
    let position = s0 + speed * t;
    let s = space.jacobi_curvature(position, speed);
    let q = match p.clone().try_inverse() {
        Some(inv) => inv * &pdot,
        None => DMatrix::from_element(space.m, space.m, f64::NAN),
    };
    let logdet_p = p.determinant().abs().ln();
    JacobiState {
        t,
        position,
        speed,
        p,
        pdot,
        s,
        q,
        logdet_p,
    }
}

/// Integrates `P'' = -P S` on a uniform grid of `[0, duration]` with step at
/// most `step`, without looking for conjugate points.
pub fn jacobi_integrate(
    space: &RotSymSpace,
    s0: f64,
    speed: f64,
    d2u: (f64, f64),
    duration: f64,
    step: f64,
) -> Result<Vec<JacobiState>, ComparisonError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(ComparisonError::InvalidInput(format!(
            "duration must be finite and nonnegative, got {duration}"
        )));
    }
    if !(step > 0.0) {
        return Err(ComparisonError::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    let end = s0 + speed * duration;
    if s0.abs() > space.r_max || end.abs() > space.r_max {
        return Err(ComparisonError::InvalidInput(format!(
            "geodesic from {s0} with speed {speed} leaves the chart before t = {duration}"
        )));
    }
    let m = space.m;
    let n = ((duration / step).ceil() as usize).max(1);
    let h = duration / n as f64;
    let mm = m * m;

    let p0 = DMatrix::<f64>::identity(m, m);
    let mut pdot0 = DMatrix::<f64>::zeros(m, m);
    pdot0[(0, 0)] = d2u.0;
    for i in 1..m {
        pdot0[(i, i)] = d2u.1;
    }

    let rhs = |t: f64, y: &[f64]| -> Vec<f64> {
        let p = DMatrix::from_column_slice(m, m, &y[..mm]);
        let s = space.jacobi_curvature(s0 + speed * t, speed);
        let acc = -(p * s);
        let mut out = Vec::with_capacity(2 * mm);
        out.extend_from_slice(&y[mm..]);
        out.extend_from_slice(acc.as_slice());
        out
    };

    let mut y: Vec<f64> = p0.as_slice().iter().chain(pdot0.as_slice()).copied().collect();
    let mut states = Vec::with_capacity(n + 1);
    states.push(state_from(space, 0.0, s0, speed, p0, pdot0));
    for k in 0..n {
        let t = k as f64 * h;
        y = rk4_step_dyn(&rhs, t, &y, h);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(ComparisonError::InvalidInput(format!(
                "Jacobi integration overflowed at t = {}",
                t + h
            )));
        }
        let p = DMatrix::from_column_slice(m, m, &y[..mm]);
        let pdot = DMatrix::from_column_slice(m, m, &y[mm..]);
        let tk = if k + 1 == n { duration } else { t + h };
        states.push(state_from(space, tk, s0, speed, p, pdot));
    }
    Ok(states)
}

/// [`jacobi_integrate`] followed by a conjugate-point scan; a zero of
/// `det P` inside `(0, duration]` is an error carrying the crossing time.
pub fn jacobi_propagate(
    space: &RotSymSpace,
    s0: f64,
    speed: f64,
    d2u: (f64, f64),
    duration: f64,
    step: f64,
) -> Result<Vec<JacobiState>, ComparisonError> {
    let states = jacobi_integrate(space, s0, speed, d2u, duration, step)?;
    match conjugate_scan(&states) {
        Some(t) => Err(ComparisonError::ConjugatePoint {
            t,
            states: Box::new(states),
        }),
        None => Ok(states),
    }
}

fn min_sym_eig(p: &DMatrix<f64>) -> f64 {
    let sym = (p + p.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// First time in `(0, T]` where `det P` vanishes.
///
/// `P(0) = I` and `P` stays positive definite in its symmetric part until
/// the first Jacobi field degenerates, so the sign change of the smallest
/// eigenvalue of `sym(P)` is located on the grid and linearly
/// interpolated. The crossing is confirmed by `det P` changing sign or the
/// smallest singular value of `P` nearly vanishing in that cell.
pub fn conjugate_scan(states: &[JacobiState]) -> Option<f64> {
    let mut prev = match states.first() {
        Some(s) => (s.t, min_sym_eig(&s.p), s.det_p()),
        None => return None,
    };
    for st in &states[1..] {
        let lam = min_sym_eig(&st.p);
        let det = st.det_p();
        if lam <= 0.0 {
            let (t0, l0, d0) = prev;
            let frac = if l0 > lam { l0 / (l0 - lam) } else { 1.0 };
            let t_cross = t0 + frac * (st.t - t0);
            let sigma = st.p.singular_values().min();
            let scale = st.pdot.amax().max(1.0) * (st.t - t0);
            if d0 * det <= 0.0 || sigma <= scale {
                return Some(t_cross);
            }
        }
        prev = (st.t, lam, det);
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RiccatiReport {
    /// `max |(Q_{k+1} - Q_k)/h + (S + Q²)_avg|` over grid cells.
    pub max_residual: f64,
    /// `max |Q - Q^T|`.
    pub max_symmetry_defect: f64,
    /// `max |(ln det P)' - tr Q|` with the same trapezoid differencing.
    pub max_trace_defect: f64,
    pub tolerance: f64,
}

/// Checks the Riccati equation `Q' = -S - Q²`, symmetry of `Q` and
/// `(ln det P)' = tr Q` by second-order trapezoid differencing of the
/// propagated states.
pub fn riccati_check(states: &[JacobiState], tolerance: f64) -> Result<RiccatiReport, ComparisonError> {
    let mut report = RiccatiReport {
        max_residual: 0.0,
        max_symmetry_defect: 0.0,
        max_trace_defect: 0.0,
        tolerance,
    };
    for st in states {
        report.max_symmetry_defect = report.max_symmetry_defect.max(st.symmetry_defect());
    }
    for pair in states.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let h = b.t - a.t;
        if h <= 0.0 {
            continue;
        }
        let dq = (&b.q - &a.q) / h;
        let fa = &a.s + &a.q * &a.q;
        let fb = &b.s + &b.q * &b.q;
        let residual = (dq + (fa + fb) * 0.5).amax();
        let dlog = (b.logdet_p - a.logdet_p) / h;
        let trace = 0.5 * (a.trace_q() + b.trace_q());
        report.max_residual = report.max_residual.max(residual);
        report.max_trace_defect = report.max_trace_defect.max((dlog - trace).abs());
        if !residual.is_finite() {
            report.max_residual = f64::INFINITY;
        }
    }
    let worst = report.max_residual.max(report.max_symmetry_defect);
    if worst > tolerance || !worst.is_finite() {
        return Err(ComparisonError::IntegratorStep {
            residual: worst,
            tolerance,
        });
    }
    Ok(report)
}

//! Scaling normalization of `f` and the radial Neumann problem
//! `div(w f Du) = (m+α) w f^p - w |Df|` in `K`, `<Du, ν> = 1` on `∂K`,
//! with `p = (m+α)/(m+α-1)`.
//!
//! For radial `f` on a ball about the pole the equation integrates once:
//! `w f φ^{m-1} u'(s) = ∫_0^s g` with `g = ((m+α) w f^p - w|f'|) φ^{m-1}`.
//! The normalization of `f` is exactly the statement `u'(R) = 1`.

use serde::{Deserialize, Serialize};

use super::{AbpError, BallDomain};
use crate::geometry::{RadialProfile, RotSymSpace};
use crate::quadrature::{integrate, QuadTolerance};

/// Default number of grid cells on `[0, R]`.
pub const NEUMANN_CELLS: usize = 2048;
/// Tolerance on `|u'(R) - 1|`.
pub const BOUNDARY_TOL: f64 = 1e-8;
/// Tolerance on the sup-norm PDE residual and the Lemma-1 maximum.
pub const RESIDUAL_TOL: f64 = 1e-8;

const POSITIVITY_SAMPLES: usize = 1024;

fn cell_tol() -> QuadTolerance {
    QuadTolerance {
        abs: 1e-15,
        rel: 1e-14,
        ..QuadTolerance::default()
    }
}

/// Both sides of the scaling identity
/// `∫_K w|Df| + ∫_{∂K} w f = (m+α) ∫_K w f^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSides {
    /// `∫_K w|Df|`.
    pub gradient: f64,
    /// `∫_{∂K} w f`.
    pub boundary: f64,
    /// `∫_K w f^p`.
    pub power: f64,
}

impl ScalingSides {
    pub fn lhs(&self) -> f64 {
        self.gradient + self.boundary
    }
}

pub(crate) fn check_positive(f: &RadialProfile, radius: f64) -> Result<(), AbpError> {
    for i in 0..=POSITIVITY_SAMPLES {
        let s = radius * i as f64 / POSITIVITY_SAMPLES as f64;
        let v = f.value(s);
        if !(v > 0.0 && v.is_finite()) {
            return Err(AbpError::Domain(format!(
                "f must be positive on [0, {radius}], got f({s}) = {v}"
            )));
        }
    }
    Ok(())
}

/// Evaluates the three weighted integrals of the scaling identity for `f`
/// on `K`.
pub fn scaling_sides(space: &RotSymSpace, k: &BallDomain, f: &RadialProfile) -> Result<ScalingSides, AbpError> {
    let big_r = k.radius;
    let sigma = space.sigma();
    let p = space.dim_eff() / (space.dim_eff() - 1.0);
    let tol = QuadTolerance {
        abs: 1e-14,
        rel: 1e-14,
        max_intervals: 8000,
    };
    let gradient = integrate(|t| space.area_density(t) * f.jet(t).d1.abs(), 0.0, big_r, tol)
        .map_err(crate::geometry::GeometryError::from)?
        .value;
    let power = integrate(|t| space.area_density(t) * f.value(t).powf(p), 0.0, big_r, tol)
        .map_err(crate::geometry::GeometryError::from)?
        .value;
    Ok(ScalingSides {
        gradient: sigma * gradient,
        boundary: sigma * space.area_density(big_r) * f.value(big_r),
        power: sigma * power,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lambda: f64,
    pub f: RadialProfile,
    /// Sides for the unnormalized `f0`.
    pub original: ScalingSides,
}

/// Scales `f0` so that the scaling identity holds:
/// `lambda = (L / ((m+α) I))^{m+α-1}`.
pub fn normalize_f(space: &RotSymSpace, k: &BallDomain, f0: &RadialProfile) -> Result<Normalization, AbpError> {
    check_positive(f0, k.radius)?;
    let sides = scaling_sides(space, k, f0)?;
    let n = space.dim_eff();
    let lambda = (sides.lhs() / (n * sides.power)).powf(n - 1.0);
    Ok(Normalization {
        lambda,
        f: f0.scaled(lambda),
        original: sides,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannSolution {
    pub radius: f64,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub uprime: Vec<f64>,
    pub usecond: Vec<f64>,
    /// Cumulative flux integral `∫_0^s g` on the grid.
    pub flux: Vec<f64>,
    pub f: RadialProfile,
    pub lambda: f64,
    /// Maximal subintervals of `[0, R]` where `|u'| < 1`; an endpoint
    /// other than 0 is a point where `|u'| = 1` and is excluded.
    pub u_set: Vec<(f64, f64)>,
    pub boundary_defect: f64,
}

impl NeumannSolution {
    fn cell(&self, s: f64) -> usize {
        let h = self.radius / (self.grid.len() - 1) as f64;
        ((s / h).floor() as usize).min(self.grid.len() - 2)
    }

    fn check(&self, s: f64) -> Result<f64, AbpError> {
        let a = s.abs();
        if a <= self.radius * (1.0 + 1e-14) {
            Ok(a.min(self.radius))
        } else {
            Err(AbpError::Domain(format!(
                "radius {s} outside K = B({})",
                self.radius
            )))
        }
    }

    fn flux_at(&self, space: &RotSymSpace, a: f64) -> Result<f64, AbpError> {
        let k = self.cell(a);
        let tail = integrate(|t| flux_integrand(space, &self.f, t), self.grid[k], a, cell_tol())
            .map_err(crate::geometry::GeometryError::from)?;
        Ok(self.flux[k] + tail.value)
    }

    /// `u'(s)` from the flux integral; odd in the signed radius.
    pub fn du(&self, space: &RotSymSpace, s: f64) -> Result<f64, AbpError> {
        let a = self.check(s)?;
        if a == 0.0 {
            return Ok(0.0);
        }
        let v = self.flux_at(space, a)? / (space.area_density(a) * self.f.value(a));
        Ok(v.copysign(s))
    }

    /// `u''(s)`, even in the signed radius.
    pub fn d2u(&self, space: &RotSymSpace, s: f64) -> Result<f64, AbpError> {
        let a = self.check(s)?;
        let du = if a == 0.0 {
            0.0
        } else {
            self.flux_at(space, a)? / (space.area_density(a) * self.f.value(a))
        };
        Ok(second_derivative(space, &self.f, a, du))
    }

    /// `u(s)` by quintic Hermite interpolation of `(u, u', u'')` on the grid.
    pub fn u_at(&self, s: f64) -> Result<f64, AbpError> {
        let a = self.check(s)?;
        let k = self.cell(a);
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        let h = x1 - x0;
        let t = (a - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
        Ok(h00 * self.u[k]
            + h10 * h * self.uprime[k]
            + h20 * h * h * self.usecond[k]
            + h01 * self.u[k + 1]
            + h11 * h * self.uprime[k + 1]
            + h21 * h * h * self.usecond[k + 1])
    }

    /// Whether the signed radius `s` lies in `U = {|Du| < 1}` inside `K`.
    pub fn in_u(&self, space: &RotSymSpace, s: f64) -> Result<bool, AbpError> {
        let a = self.check(s)?;
        Ok(a < self.radius && self.du(space, a)?.abs() < 1.0)
    }

    /// Fourth-order finite-difference `u''` from the stored `u'` values,
    /// with one-sided stencils at both ends. `|f'|` may have a kink at the
    /// pole, so the stencils do not reach across it.
    pub fn fd_second_derivative(&self) -> Vec<f64> {
        let n = self.grid.len() - 1;
        let h = self.radius / n as f64;
        let up = &self.uprime;
        (0..=n)
            .map(|k| {
                let d = if k == 0 {
                    -25.0 * up[0] + 48.0 * up[1] - 36.0 * up[2] + 16.0 * up[3] - 3.0 * up[4]
                } else if k == 1 {
                    -3.0 * up[0] - 10.0 * up[1] + 18.0 * up[2] - 6.0 * up[3] + up[4]
                } else if k + 2 <= n {
                    -up[k + 2] + 8.0 * up[k + 1] - 8.0 * up[k - 1] + up[k - 2]
                } else if k + 1 == n {
                    3.0 * up[k + 1] + 10.0 * up[k] - 18.0 * up[k - 1] + 6.0 * up[k - 2] - up[k - 3]
                } else {
                    25.0 * up[k] - 48.0 * up[k - 1] + 36.0 * up[k - 2] - 16.0 * up[k - 3] + 3.0 * up[k - 4]
                };
                d / (12.0 * h)
            })
            .collect()
    }

    /// Pointwise residual of `div(w f Du) - (m+α) w f^p + w|Df|` with `u''`
    /// from [`Self::fd_second_derivative`].
    pub fn pde_residual(&self, space: &RotSymSpace) -> Vec<f64> {
        let d2 = self.fd_second_derivative();
        let n = space.dim_eff();
        let p = n / (n - 1.0);
        let m1 = space.m as f64 - 1.0;
        self.grid
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let w = space.w(s);
                let f = self.f.jet(s);
                let du = self.uprime[k];
                let lap = if s == 0.0 {
                    space.m as f64 * d2[k]
                } else {
                    let ph = space.phi(s);
                    d2[k] + m1 * ph.d1 / ph.v * du
                };
                let div = w.v * f.v * lap + (w.d1 * f.v + w.v * f.d1) * du;
                div - (n * w.v * f.v.powf(p) - w.v * f.d1.abs())
            })
            .collect()
    }

    pub fn max_pde_residual(&self, space: &RotSymSpace) -> f64 {
        self.pde_residual(space)
            .iter()
            .fold(0.0f64, |a, r| a.max(r.abs()))
    }
}

pub(crate) fn flux_integrand(space: &RotSymSpace, f: &RadialProfile, t: f64) -> f64 {
    let n = space.dim_eff();
    let p = n / (n - 1.0);
    let fj = f.jet(t);
    let w = space.w(t).v;
    (n * w * fj.v.powf(p) - w * fj.d1.abs()) * space.phi(t).v.powi(space.m as i32 - 1)
}

/// `u'' = g/(w f φ^{m-1}) - u' ((log w)' + f'/f + (m-1) φ'/φ)`, with the
/// pole limit `u''(0) = g/(m w f φ^{m-1})`.
fn second_derivative(space: &RotSymSpace, f: &RadialProfile, a: f64, du: f64) -> f64 {
    let n = space.dim_eff();
    let p = n / (n - 1.0);
    let fj = f.jet(a);
    let w = space.w(a);
    let source = n * fj.v.powf(p) - fj.d1.abs();
    if a == 0.0 {
        return source / (space.m as f64 * fj.v);
    }
    let ph = space.phi(a);
    let m1 = space.m as f64 - 1.0;
    source / fj.v - du * (w.d1 / w.v + fj.d1 / fj.v + m1 * ph.d1 / ph.v)
}

/// Solves the radial Neumann problem for a normalized `f` on
/// [`NEUMANN_CELLS`] cells.
pub fn solve_neumann_radial(
    space: &RotSymSpace,
    k: &BallDomain,
    f: &RadialProfile,
) -> Result<NeumannSolution, AbpError> {
    solve_neumann_radial_with(space, k, f, NEUMANN_CELLS, 1.0)
}

/// As [`solve_neumann_radial`] with an explicit cell count; `lambda` is
/// recorded in the solution.
pub fn solve_neumann_radial_with(
    space: &RotSymSpace,
    k: &BallDomain,
    f: &RadialProfile,
    cells: usize,
    lambda: f64,
) -> Result<NeumannSolution, AbpError> {
    if cells < 8 {
        return Err(AbpError::Domain(format!("need at least 8 cells, got {cells}")));
    }
    check_positive(f, k.radius)?;
    let big_r = k.radius;
    let h = big_r / cells as f64;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| if i == cells { big_r } else { i as f64 * h })
        .collect();
    let mut flux = Vec::with_capacity(cells + 1);
    flux.push(0.0);
    for i in 0..cells {
        let cell = integrate(|t| flux_integrand(space, f, t), grid[i], grid[i + 1], cell_tol())
            .map_err(crate::geometry::GeometryError::from)?;
        flux.push(flux[i] + cell.value);
    }
    let uprime: Vec<f64> = grid
        .iter()
        .zip(&flux)
        .map(|(&s, &fl)| {
            if s == 0.0 {
                0.0
            } else {
                fl / (space.area_density(s) * f.value(s))
            }
        })
        .collect();
    let usecond: Vec<f64> = grid
        .iter()
        .zip(&uprime)
        .map(|(&s, &du)| second_derivative(space, f, s, du))
        .collect();
    // Trapezoid with endpoint-derivative correction on each cell.
    let mut u = Vec::with_capacity(cells + 1);
    u.push(0.0);
    for i in 0..cells {
        let hi = grid[i + 1] - grid[i];
        let step = 0.5 * hi * (uprime[i] + uprime[i + 1]) + hi * hi / 12.0 * (usecond[i] - usecond[i + 1]);
        u.push(u[i] + step);
    }
    let boundary_defect = (uprime[cells] - 1.0).abs();
    let mut sol = NeumannSolution {
        radius: big_r,
        grid,
        u,
        uprime,
        usecond,
        flux,
        f: f.clone(),
        lambda,
        u_set: Vec::new(),
        boundary_defect,
    };
    if !(boundary_defect <= BOUNDARY_TOL) {
        return Err(AbpError::NormalizationMismatch {
            defect: boundary_defect,
            tolerance: BOUNDARY_TOL,
        });
    }
    sol.u_set = u_intervals(space, &sol)?;
    Ok(sol)
}

/// Maximal runs of grid points with `|u'| < 1`, with interior endpoints
/// refined by bisection on `|u'| = 1`.
fn u_intervals(space: &RotSymSpace, sol: &NeumannSolution) -> Result<Vec<(f64, f64)>, AbpError> {
    let n = sol.grid.len() - 1;
    let inside = |k: usize| k < n && sol.uprime[k].abs() < 1.0;
    let crossing = |a: f64, b: f64, a_inside: bool| -> Result<f64, AbpError> {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (sol.du(space, mid)?.abs() < 1.0) == a_inside {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if a_inside { lo } else { hi })
    };
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for k in 0..=n {
        match (start, inside(k)) {
            (None, true) => {
                start = Some(if k == 0 {
                    0.0
                } else {
                    crossing(sol.grid[k - 1], sol.grid[k], false)?
                });
            }
            (Some(a), false) => {
                let b = if k == n && sol.uprime[k].abs() < 1.0 {
                    sol.radius
                } else {
                    crossing(sol.grid[k - 1], sol.grid[k], true)?
                };
                out.push((a, b));
                start = None;
            }
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    /// Max over grid points of `U` of `wΔu + <Dw, Du> - (m+α) w f^{1/(m+α-1)}`.
    pub max_value: f64,
    pub argmax: f64,
    /// Grid points of `U` where the expression is below `-tolerance`.
    pub strictly_negative: usize,
    pub samples: usize,
    pub tolerance: f64,
}

/// Audits `wΔu + <Dw, Du> <= (m+α) w f^{1/(m+α-1)}` on `U`, with `u''` taken
/// from finite differences of the solved `u'`.
pub fn verify_lemma1(space: &RotSymSpace, sol: &NeumannSolution) -> Result<Lemma1Report, AbpError> {
    let d2 = sol.fd_second_derivative();
    let n = space.dim_eff();
    let m1 = space.m as f64 - 1.0;
    let mut report = Lemma1Report {
        max_value: f64::NEG_INFINITY,
        argmax: 0.0,
        strictly_negative: 0,
        samples: 0,
        tolerance: RESIDUAL_TOL,
    };
    for (k, &s) in sol.grid.iter().enumerate() {
        let du = sol.uprime[k];
        if !(du.abs() < 1.0) || s >= sol.radius {
            continue;
        }
        let w = space.w(s);
        let lap = if s == 0.0 {
            space.m as f64 * d2[k]
        } else {
            let ph = space.phi(s);
            d2[k] + m1 * ph.d1 / ph.v * du
        };
        let value = w.v * lap + w.d1 * du - n * w.v * sol.f.value(s).powf(1.0 / (n - 1.0));
        report.samples += 1;
        if value < -RESIDUAL_TOL {
            report.strictly_negative += 1;
        }
        if value > report.max_value {
            report.max_value = value;
            report.argmax = s;
        }
    }
    if report.max_value > RESIDUAL_TOL {
        return Err(AbpError::Lemma1Violated {
            max: report.max_value,
            at: report.argmax,
        });
    }
    Ok(report)
}

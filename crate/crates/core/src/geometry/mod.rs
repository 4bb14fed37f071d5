//! Rotationally symmetric manifolds with radial densities.
//!
//! The metric is `dr^2 + phi(r)^2 g_{S^{m-1}}` and the measure `w(r) dmu`.
//! Every two points lie in a common totally geodesic 2D slice through the
//! pole, so distances and geodesics are computed in slice coordinates
//! `(s, theta)`. The radial coordinate `s` is signed: `(-s, theta)` names the
//! same point as `(s, theta + pi)`, which lets geodesics pass through the pole
//! without a chart switch. The warp is extended as an odd function and the
//! density as an even one.

mod distance;
mod geodesic;
pub mod profile;
mod volume;

pub use geodesic::{GeodesicPath, GeodesicSample};
pub use profile::{preset, CubicSpline, ExpTerm, ProfileKind, RadialProfile, PRESETS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::Jet;
use crate::quadrature::QuadratureError;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{what} = {value} is outside the admissible range {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("geodesic left the chart at t = {t}")]
    Truncated { t: f64, partial: Box<GeodesicPath> },
    #[error("shooting did not converge; best bracket [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A point of the totally geodesic slice through the pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub s: f64,
    pub theta: f64,
}

impl SlicePoint {
    pub const fn new(s: f64, theta: f64) -> Self {
        Self { s, theta }
    }

    /// Nonnegative radius and an angle in `[0, 2 pi)`.
    pub fn canonical(self) -> (f64, f64) {
        let (rho, theta) = if self.s < 0.0 {
            (-self.s, self.theta + std::f64::consts::PI)
        } else {
            (self.s, self.theta)
        };
        (rho, theta.rem_euclid(std::f64::consts::TAU))
    }
}

/// Area of the unit sphere `S^{n}` embedded in `R^{n+1}`.
pub fn unit_sphere_area(n: usize) -> f64 {
    // sigma_n = 2 pi^{(n+1)/2} / Gamma((n+1)/2)
    let k = n + 1;
    let half_gamma = if k % 2 == 0 {
        (1..k / 2).fold(1.0, |acc, j| acc * j as f64)
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * std::f64::consts::PI.powf(k as f64 / 2.0) / half_gamma
}

/// The model manifold-with-density.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotSymSpace {
    pub m: usize,
    pub alpha: f64,
    pub warp: RadialProfile,
    pub density: RadialProfile,
    pub r_max: f64,
    warp_increasing: bool,
}

const POLE_TOL: f64 = 1e-9;
const SPLINE_POLE_TOL: f64 = 1e-2;

impl RotSymSpace {
    pub fn new(
        m: usize,
        alpha: f64,
        warp: RadialProfile,
        density: RadialProfile,
        r_max: f64,
    ) -> Result<Self, GeometryError> {
        if m < 2 {
            return Err(GeometryError::Domain {
                what: "m",
                value: m as f64,
                range: "m >= 2".into(),
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(GeometryError::Domain {
                what: "alpha",
                value: alpha,
                range: "(0, inf)".into(),
            });
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(GeometryError::Domain {
                what: "r_max",
                value: r_max,
                range: "(0, inf)".into(),
            });
        }
        for (p, role) in [(&warp, "warp"), (&density, "density")] {
            if p.r_max < r_max {
                return Err(GeometryError::InvalidProfile(format!(
                    "{role} profile {} is only valid up to r = {}, space needs {r_max}",
                    p.name, p.r_max
                )));
            }
        }
        let tol = |p: &RadialProfile| {
            if p.is_lower_trust() {
                SPLINE_POLE_TOL
            } else {
                POLE_TOL
            }
        };
        let pole = warp.jet(0.0);
        let wt = tol(&warp);
        if pole.v.abs() > wt || (pole.d1 - 1.0).abs() > wt || pole.d2.abs() > wt {
            return Err(GeometryError::InvalidProfile(format!(
                "warp {} must satisfy phi(0) = 0, phi'(0) = 1, phi''(0) = 0 (got {}, {}, {})",
                warp.name, pole.v, pole.d1, pole.d2
            )));
        }
        let dpole = density.jet(0.0);
        if dpole.d1.abs() > tol(&density) {
            return Err(GeometryError::InvalidProfile(format!(
                "density {} must satisfy w'(0) = 0 (got {})",
                density.name, dpole.d1
            )));
        }
        let mut warp_increasing = true;
        let samples = 1024;
        for i in 0..=samples {
            // Quadratic spacing resolves the pole and the far field alike.
            let x = i as f64 / samples as f64;
            let r = r_max * x * x;
            let pw = warp.jet(r);
            if r > 0.0 && !(pw.v > 0.0) {
                return Err(GeometryError::InvalidProfile(format!(
                    "warp {} is not positive at r = {r}",
                    warp.name
                )));
            }
            if !(density.value(r) > 0.0) {
                return Err(GeometryError::InvalidProfile(format!(
                    "density {} is not positive at r = {r}",
                    density.name
                )));
            }
            if !(pw.d1 > 0.0) {
                warp_increasing = false;
            }
        }
        Ok(Self {
            m,
            alpha,
            warp,
            density,
            r_max,
            warp_increasing,
        })
    }

    /// Flat `R^m` with unit density.
    pub fn euclidean(m: usize, alpha: f64, r_max: f64) -> Result<Self, GeometryError> {
        Self::new(
            m,
            alpha,
            RadialProfile::euclidean(),
            RadialProfile::constant(1.0),
            r_max,
        )
    }

    pub fn with_density(&self, density: RadialProfile) -> Result<Self, GeometryError> {
        Self::new(self.m, self.alpha, self.warp.clone(), density, self.r_max)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, GeometryError> {
        Self::new(self.m, alpha, self.warp.clone(), self.density.clone(), self.r_max)
    }

    pub fn warp_increasing(&self) -> bool {
        self.warp_increasing
    }

    /// Effective dimension `m + alpha`.
    pub fn dim_eff(&self) -> f64 {
        self.m as f64 + self.alpha
    }

    /// Area of the unit sphere `S^{m-1}`.
    pub fn sigma(&self) -> f64 {
        unit_sphere_area(self.m - 1)
    }

    /// Warp at a signed radius (odd extension).
    pub fn phi(&self, s: f64) -> Jet {
        if s >= 0.0 {
            self.warp.jet(s)
        } else {
            self.warp.jet(-s).reflect(true)
        }
    }

    /// `(phi, phi')` at a signed radius.
    pub fn phi_d1(&self, s: f64) -> (f64, f64) {
        let (v, d) = self.warp.value_d1(s.abs());
        (v.copysign(s), d)
    }

    /// Density at a signed radius (even extension).
    pub fn w(&self, s: f64) -> Jet {
        if s >= 0.0 {
            self.density.jet(s)
        } else {
            self.density.jet(-s).reflect(false)
        }
    }

    /// `log w` with derivatives at a signed radius.
    pub fn log_w(&self, s: f64) -> Jet {
        self.w(s).ln()
    }

    pub(crate) fn check_radius(&self, r: f64) -> Result<(), GeometryError> {
        if r > 0.0 && r <= self.r_max {
            Ok(())
        } else {
            Err(GeometryError::Domain {
                what: "r",
                value: r,
                range: format!("(0, {}]", self.r_max),
            })
        }
    }

    /// `phi''/phi` as a function of the signed radius, continuous through
    /// the pole where it tends to `phi'''(0)`.
    pub fn radial_curvature_factor(&self, s: f64) -> f64 {
        let a = s.abs();
        if a < 1e-7 {
            let j = self.warp.jet(0.0);
            return j.d3 / j.d1;
        }
        let j = self.warp.jet(a);
        j.d2 / j.v
    }

    /// `(1 - phi'^2)/phi^2`, continuous through the pole.
    fn tangential_curvature_raw(&self, r: f64) -> f64 {
        if r < 1e-7 {
            // Both sectional curvatures agree with -phi'''(0) at the pole.
            let j = self.warp.jet(0.0);
            return -j.d3 / j.d1;
        }
        let j = self.warp.jet(r);
        (1.0 - j.d1 * j.d1) / (j.v * j.v)
    }

    /// Sectional curvatures of the radial plane `K_rad = -phi''/phi` and of
    /// tangential planes `K_tan = (1 - phi'^2)/phi^2`.
    pub fn sectional_curvatures(&self, r: f64) -> Result<(f64, f64), GeometryError> {
        self.check_radius(r)?;
        Ok((-self.radial_curvature_factor(r), self.tangential_curvature_raw(r)))
    }

    /// Ricci curvature on unit radial and unit tangential vectors.
    pub fn ricci_radial_tangential(&self, r: f64) -> Result<(f64, f64), GeometryError> {
        let (k_rad, k_tan) = self.sectional_curvatures(r)?;
        let m = self.m as f64;
        Ok(((m - 1.0) * k_rad, k_rad + (m - 2.0) * k_tan))
    }

    /// Hessian eigenvalues `(u'', u' phi'/phi)` of a radial function.
    /// At `r = 0` both equal `u''(0)`.
    pub fn hessian_radial(&self, u: &RadialProfile, r: f64) -> Result<(f64, f64), GeometryError> {
        if r == 0.0 {
            let d2 = u.jet(0.0).d2;
            return Ok((d2, d2));
        }
        self.check_radius(r)?;
        let uj = u.jet(r);
        Ok(self.hessian_from_derivatives(r, uj.d1, uj.d2))
    }

    /// Hessian eigenvalues from `u'(s)` and `u''(s)` at a signed radius.
    pub fn hessian_from_derivatives(&self, s: f64, du: f64, d2u: f64) -> (f64, f64) {
        if s == 0.0 {
            return (d2u, d2u);
        }
        let p = self.phi(s);
        (d2u, du * p.d1 / p.v)
    }

    /// Laplacian `u'' + (m - 1) (phi'/phi) u'` of a radial function.
    pub fn laplacian_radial(&self, s: f64, du: f64, d2u: f64) -> f64 {
        let (rad, tan) = self.hessian_from_derivatives(s, du, d2u);
        rad + (self.m as f64 - 1.0) * tan
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinh_space(m: usize) -> RotSymSpace {
        RotSymSpace::new(
            m,
            1.0,
            RadialProfile::hyperbolic_like(),
            RadialProfile::constant(1.0),
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn unit_sphere_areas() {
        use std::f64::consts::PI;
        assert!((unit_sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn flat_curvatures_vanish() {
        let s = RotSymSpace::euclidean(3, 1.0, 10.0).unwrap();
        for r in [0.1, 1.0, 7.0] {
            assert_eq!(s.sectional_curvatures(r).unwrap(), (0.0, 0.0));
            assert_eq!(s.ricci_radial_tangential(r).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn hyperbolic_curvatures() {
        // Oracle: phi = sinh, phi'' = sinh, phi' = cosh, so K_rad = -1 and
        // K_tan = (1 - cosh^2)/sinh^2 = -1.
        let s = sinh_space(2);
        let (kr, kt) = s.sectional_curvatures(1.0).unwrap();
        let (sh, ch) = (1f64.sinh(), 1f64.cosh());
        assert!((kr - (-sh / sh)).abs() < 1e-12);
        assert!((kt - (1.0 - ch * ch) / (sh * sh)).abs() < 1e-12);
        let (rr, rt) = s.ricci_radial_tangential(1.0).unwrap();
        assert!((rr + 1.0).abs() < 1e-12 && (rt + 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_sphere_taylor_warp_near_pole() {
        let warp = RadialProfile::polynomial(vec![0.0, 1.0, 0.0, -1.0 / 6.0]);
        let s = RotSymSpace::new(3, 1.0, warp, RadialProfile::constant(1.0), 1.0).unwrap();
        let (kr, kt) = s.sectional_curvatures(1e-4).unwrap();
        assert!((kr - 1.0).abs() < 1e-6, "{kr}");
        assert!((kt - 1.0).abs() < 1e-6, "{kt}");
    }

    #[test]
    fn surfaces_have_a_single_curvature() {
        let s = RotSymSpace::new(
            2,
            0.7,
            RadialProfile::capped_power(0.4).unwrap(),
            RadialProfile::constant(1.0),
            5.0,
        )
        .unwrap();
        for r in [0.2, 1.0, 4.0] {
            let (rr, rt) = s.ricci_radial_tangential(r).unwrap();
            let j = s.warp.jet(r);
            assert!((rr + j.d2 / j.v).abs() < 1e-12);
            assert!((rt + j.d2 / j.v).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_domain_errors() {
        let s = RotSymSpace::euclidean(2, 1.0, 2.0).unwrap();
        assert!(matches!(
            s.sectional_curvatures(0.0),
            Err(GeometryError::Domain { .. })
        ));
        assert!(s.sectional_curvatures(2.5).is_err());
        assert!(s.ricci_radial_tangential(-1.0).is_err());
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(RotSymSpace::euclidean(1, 1.0, 1.0).is_err());
        assert!(RotSymSpace::euclidean(2, 0.0, 1.0).is_err());
        let bad_warp = RadialProfile::polynomial(vec![0.0, 2.0]);
        assert!(RotSymSpace::new(2, 1.0, bad_warp, RadialProfile::constant(1.0), 1.0).is_err());
        let bad_density = RadialProfile::polynomial(vec![1.0, 1.0]);
        assert!(
            RotSymSpace::new(2, 1.0, RadialProfile::euclidean(), bad_density, 1.0).is_err()
        );
        let negative = RadialProfile::polynomial(vec![1.0, 0.0, -1.0]);
        assert!(RotSymSpace::new(2, 1.0, RadialProfile::euclidean(), negative, 2.0).is_err());
    }

    #[test]
    fn hessian_of_radial_functions() {
        let flat = RotSymSpace::euclidean(2, 1.0, 5.0).unwrap();
        let half_sq = RadialProfile::polynomial(vec![0.0, 0.0, 0.5]);
        let (a, b) = flat.hessian_radial(&half_sq, 1.3).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        assert_eq!(flat.hessian_radial(&half_sq, 0.0).unwrap(), (1.0, 1.0));
        let radius = RadialProfile::polynomial(vec![0.0, 1.0]);
        assert_eq!(flat.hessian_radial(&radius, 2.0).unwrap(), (0.0, 0.5));
        let c = RadialProfile::constant(3.0);
        let hyp = sinh_space(3);
        assert_eq!(hyp.hessian_radial(&c, 0.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn slice_point_canonicalization() {
        let (r, t) = SlicePoint::new(-2.0, 0.5).canonical();
        assert_eq!(r, 2.0);
        assert!((t - (0.5 + std::f64::consts::PI)).abs() < 1e-15);
    }
}

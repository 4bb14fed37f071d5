//! Weighted volumes of geodesic balls and spheres about the pole.

use super::{GeometryError, RotSymSpace};
use crate::quadrature::{integrate, Estimate, QuadTolerance};

impl RotSymSpace {
    /// `w(t) phi(t)^{m-1}`, the weighted area density per unit sphere area.
    pub fn area_density(&self, t: f64) -> f64 {
        self.w(t).v * self.phi(t).v.abs().powi(self.m as i32 - 1)
    }

    /// `∫_{Σ_t} w = sigma_{m-1} w(t) phi(t)^{m-1}`.
    pub fn weighted_sphere_area(&self, t: f64) -> Result<f64, GeometryError> {
        self.check_radius(t)?;
        Ok(self.sigma() * self.area_density(t))
    }

    /// `∫_{B_R} w = sigma_{m-1} ∫_0^R w phi^{m-1}` with its error estimate.
    pub fn weighted_ball_volume_estimate(
        &self,
        radius: f64,
        tol: QuadTolerance,
    ) -> Result<Estimate, GeometryError> {
        self.check_radius(radius)?;
        let sigma = self.sigma();
        let est = integrate(|t| self.area_density(t), 0.0, radius, tol.scaled(1.0 / sigma))?;
        Ok(Estimate {
            value: sigma * est.value,
            error: sigma * est.error,
        })
    }

    pub fn weighted_ball_volume(&self, radius: f64) -> Result<f64, GeometryError> {
        Ok(self
            .weighted_ball_volume_estimate(radius, QuadTolerance::default())?
            .value)
    }

    /// Ball volumes at increasing radii, accumulated cell by cell.
    pub fn weighted_ball_volumes(
        &self,
        radii: &[f64],
        tol: QuadTolerance,
    ) -> Result<Vec<Estimate>, GeometryError> {
        let sigma = self.sigma();
        let mut out = Vec::with_capacity(radii.len());
        let mut prev = 0.0;
        let mut acc = Estimate {
            value: 0.0,
            error: 0.0,
        };
        for &r in radii {
            self.check_radius(r)?;
            if r < prev {
                return Err(GeometryError::Domain {
                    what: "radius",
                    value: r,
                    range: format!("increasing radii, previous {prev}"),
                });
            }
            let cell = integrate(|t| self.area_density(t), prev, r, tol.scaled(1.0 / sigma))?;
            acc.value += sigma * cell.value;
            acc.error += sigma * cell.error;
            out.push(acc);
            prev = r;
        }
        Ok(out)
    }
}

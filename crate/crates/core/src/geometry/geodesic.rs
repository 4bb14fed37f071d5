//! Geodesics of the 2D slice, integrated with RK4 and monitored through
//! their two conserved quantities: speed and the Clairaut constant.

use serde::{Deserialize, Serialize};

use super::{GeometryError, RotSymSpace, SlicePoint};
use crate::ode::rk4_step;

/// Per-unit-time drift budget for speed and Clairaut constant.
pub const DRIFT_TOL: f64 = 1e-8;
const MAX_HALVINGS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub s: f64,
    pub theta: f64,
    pub ds: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub step: f64,
    /// Max deviation of `|gamma'|^2` from its initial value.
    pub energy_drift: f64,
    /// Max deviation of `phi^2 theta'` from its initial value.
    pub clairaut_drift: f64,
}

impl GeodesicPath {
    pub fn end(&self) -> GeodesicSample {
        *self.samples.last().expect("path has at least its start")
    }

    pub fn end_point(&self) -> SlicePoint {
        let e = self.end();
        SlicePoint::new(e.s, e.theta)
    }

    fn duration(&self) -> f64 {
        self.end().t - self.samples[0].t
    }

    /// Worst of the two drifts, per unit time.
    pub fn drift_rate(&self) -> f64 {
        let d = self.duration().max(1.0);
        self.energy_drift.max(self.clairaut_drift) / d
    }
}

impl RotSymSpace {
    /// Right-hand side of the slice geodesic equations on `(s, theta, s', theta')`.
    pub(crate) fn geodesic_rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let (phi, dphi) = self.phi_d1(y[0]);
        let s_acc = phi * dphi * y[3] * y[3];
        let th_acc = if phi == 0.0 {
            0.0
        } else {
            -2.0 * dphi / phi * y[2] * y[3]
        };
        [y[2], y[3], s_acc, th_acc]
    }

    pub(crate) fn energy(&self, y: &[f64; 4]) -> f64 {
        let (phi, _) = self.phi_d1(y[0]);
        y[2] * y[2] + phi * phi * y[3] * y[3]
    }

    pub(crate) fn clairaut(&self, y: &[f64; 4]) -> f64 {
        let (phi, _) = self.phi_d1(y[0]);
        phi * phi * y[3]
    }

    fn integrate_fixed(
        &self,
        start: SlicePoint,
        velocity: (f64, f64),
        duration: f64,
        step: f64,
    ) -> Result<GeodesicPath, GeometryError> {
        let n = (duration / step).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        let f = |_t: f64, y: &[f64; 4]| self.geodesic_rhs(y);
        let mut y = [start.s, start.theta, velocity.0, velocity.1];
        let e0 = self.energy(&y);
        let c0 = self.clairaut(&y);
        let mut path = GeodesicPath {
            samples: Vec::with_capacity(n + 1),
            step: h,
            energy_drift: 0.0,
            clairaut_drift: 0.0,
        };
        let push = |path: &mut GeodesicPath, t: f64, y: &[f64; 4]| {
            path.samples.push(GeodesicSample {
                t,
                s: y[0],
                theta: y[1],
                ds: y[2],
                dtheta: y[3],
            });
            path.energy_drift = path.energy_drift.max((self.energy(y) - e0).abs());
            path.clairaut_drift = path.clairaut_drift.max((self.clairaut(y) - c0).abs());
        };
        push(&mut path, 0.0, &y);
        for i in 0..n {
            let t = i as f64 * h;
            let next = rk4_step(&f, t, &y, h);
            if next[0].abs() > self.r_max || !next.iter().all(|v| v.is_finite()) {
                return Err(GeometryError::Truncated {
                    t: t + h,
                    partial: Box::new(path),
                });
            }
            y = next;
            push(&mut path, t + h, &y);
        }
        Ok(path)
    }

    /// Integrates the geodesic leaving `start` with slice velocity
    /// `(s', theta')` for time `duration`. The step is halved while the
    /// conserved-quantity drift exceeds [`DRIFT_TOL`] per unit time.
    pub fn integrate_geodesic(
        &self,
        start: SlicePoint,
        velocity: (f64, f64),
        duration: f64,
        step: f64,
    ) -> Result<GeodesicPath, GeometryError> {
        if !(step > 0.0) {
            return Err(GeometryError::Domain {
                what: "step",
                value: step,
                range: "(0, inf)".into(),
            });
        }
        if start.s.abs() > self.r_max {
            return Err(GeometryError::Domain {
                what: "start.s",
                value: start.s,
                range: format!("[-{0}, {0}]", self.r_max),
            });
        }
        let mut h = step;
        let mut path = self.integrate_fixed(start, velocity, duration, h)?;
        for _ in 0..MAX_HALVINGS {
            if path.drift_rate() <= DRIFT_TOL {
                break;
            }
            h *= 0.5;
            path = self.integrate_fixed(start, velocity, duration, h)?;
        }
        Ok(path)
    }

    /// Shoots a unit-speed geodesic from `(a, 0)` with direction angle `psi`
    /// (measured from the outward radial direction towards increasing theta)
    /// and reports the radius and arclength of its first crossing of the ray
    /// `theta = target`. `None` when it leaves the chart or times out first.
    pub(crate) fn shoot_to_ray(&self, a: f64, psi: f64, target: f64, step: f64) -> Option<(f64, f64)> {
        let (phi_a, _) = self.phi_d1(a);
        let mut y = [a, 0.0, psi.cos(), psi.sin() / phi_a];
        let f = |_t: f64, y: &[f64; 4]| self.geodesic_rhs(y);
        let t_max = 4.0 * self.r_max + 10.0;
        let mut t = 0.0;
        while t < t_max {
            let next = rk4_step(&f, t, &y, step);
            if next[0].abs() > self.r_max {
                return None;
            }
            if next[1] >= target {
                // Locate the crossing inside the step by bisection on the
                // sub-step length.
                let (mut lo, mut hi) = (0.0, step);
                let mut hit = next;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let trial = rk4_step(&f, t, &y, mid);
                    if trial[1] >= target {
                        hi = mid;
                        hit = trial;
                    } else {
                        lo = mid;
                    }
                }
                return Some((hit[0], t + hi));
            }
            y = next;
            t += step;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RadialProfile;

    #[test]
    fn radial_ray_in_flat_space() {
        let s = RotSymSpace::euclidean(2, 1.0, 10.0).unwrap();
        let path = s
            .integrate_geodesic(SlicePoint::new(1.0, 0.0), (1.0, 0.0), 2.0, 1e-3)
            .unwrap();
        let e = path.end();
        assert!((e.s - 3.0).abs() < 1e-12 && e.theta.abs() < 1e-15);
    }

    #[test]
    fn ray_through_pole_continues_with_negative_radius() {
        let s = RotSymSpace::new(
            3,
            1.0,
            RadialProfile::hyperbolic_like(),
            RadialProfile::constant(1.0),
            5.0,
        )
        .unwrap();
        let path = s
            .integrate_geodesic(SlicePoint::new(1.0, 0.3), (-1.0, 0.0), 2.5, 1e-3)
            .unwrap();
        let e = path.end();
        assert!((e.s + 1.5).abs() < 1e-10);
        let (rho, theta) = path.end_point().canonical();
        assert!((rho - 1.5).abs() < 1e-10);
        assert!((theta - (0.3 + std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn clairaut_constant_in_flat_space() {
        let s = RotSymSpace::euclidean(2, 1.0, 10.0).unwrap();
        let path = s
            .integrate_geodesic(SlicePoint::new(1.0, 0.0), (0.0, 1.0), 0.1, 1e-3)
            .unwrap();
        let last = path.end();
        let c = last.s * last.s * last.dtheta;
        assert!((c - 1.0).abs() < 1e-12);
        assert!(path.clairaut_drift < 1e-12);
    }

    #[test]
    fn leaving_the_chart_is_truncation() {
        let s = RotSymSpace::euclidean(2, 1.0, 2.0).unwrap();
        match s.integrate_geodesic(SlicePoint::new(1.0, 0.0), (1.0, 0.0), 5.0, 1e-2) {
            Err(GeometryError::Truncated { t, partial }) => {
                assert!(t > 0.9 && t < 1.1);
                assert!(partial.end().s <= 2.0);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }
}

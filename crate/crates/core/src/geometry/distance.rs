//! Geodesic distance between points of a common slice.
//!
//! By rotational symmetry any two points of `M` lie in a common totally
//! geodesic 2D slice through the pole, so slice distances are manifold
//! distances.
//!
//! The default route shoots over the initial direction angle `psi` and
//! evaluates each trial geodesic through its Clairaut constant
//! `c = phi(a) sin psi`. Angular sweep and arclength along a monotone arc are
//!
//! ```text
//!   sweep  = ∫ dchi / phi'(s(chi)),   phi(s) = c / cos chi
//!   length = ∫ dy   / phi'(s(y)),     phi(s) = sqrt(y^2 + c^2)
//! ```
//!
//! which are free of the turning-point singularity. This needs `phi`
//! increasing; other warps fall back to RK4 shooting
//! ([`RotSymSpace::distance_ode`]).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{GeometryError, RotSymSpace, SlicePoint};
use crate::quadrature::GaussLegendre;

const SCAN_INTERVALS: usize = 12;
const ROOT_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 48;
const PANEL_RATIO: f64 = 3.0;

impl RotSymSpace {
    /// `phi^{-1}(v)` on a bracket `[lo, hi]` with `phi(lo) <= v <= phi(hi)`.
    fn warp_inverse(&self, v: f64, lo: f64, hi: f64) -> f64 {
        if self.warp.is_identity() {
            return v;
        }
        let (flo, fhi) = (self.warp.value(lo), self.warp.value(hi));
        let (mut lo, mut hi) = (lo, hi);
        let mut x = if fhi > flo {
            lo + (hi - lo) * ((v - flo) / (fhi - flo)).clamp(0.0, 1.0)
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..60 {
            let (f, d) = self.warp.value_d1(x);
            let g = f - v;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - g / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }

    /// Geometric panel breakpoints on `[s_lo, s_hi]`.
    fn panels(s_lo: f64, s_hi: f64) -> Vec<f64> {
        if s_hi <= s_lo {
            return vec![s_lo, s_hi];
        }
        let n = if s_lo > 0.0 {
            ((s_hi / s_lo).ln() / PANEL_RATIO.ln()).ceil() as usize
        } else {
            1
        };
        let n = n.clamp(2, MAX_PANELS);
        let mut out = Vec::with_capacity(n + 1);
        if s_lo > 0.0 {
            let ratio = (s_hi / s_lo).powf(1.0 / n as f64);
            let mut s = s_lo;
            for _ in 0..n {
                out.push(s);
                s *= ratio;
            }
        } else {
            for k in 0..n {
                out.push(s_hi * k as f64 / n as f64);
            }
        }
        out.push(s_hi);
        out
    }

    /// Panel breakpoints `(s, y)` with `y = sqrt(phi(s)^2 - c^2)` along a
    /// monotone arc whose end values of `y` are supplied by the caller (they
    /// suffer cancellation when recomputed near the turning point).
    fn arc_breaks(&self, c: f64, (s_lo, y_lo): (f64, f64), (s_hi, y_hi): (f64, f64)) -> Vec<(f64, f64)> {
        let br = Self::panels(s_lo, s_hi);
        let last = br.len() - 1;
        br.iter()
            .enumerate()
            .map(|(i, &s)| {
                let y = if i == 0 {
                    y_lo
                } else if i == last {
                    y_hi
                } else {
                    let p = self.warp.value(s);
                    ((p - c) * (p + c)).max(0.0).sqrt()
                };
                (s, y)
            })
            .collect()
    }

    /// Angular sweep along a monotone arc of the unit-speed geodesic with
    /// Clairaut constant `c > 0`.
    fn clairaut_sweep(&self, c: f64, lo: (f64, f64), hi: (f64, f64)) -> f64 {
        let rule = GaussLegendre::order16();
        let mut total = 0.0;
        for w in self.arc_breaks(c, lo, hi).windows(2) {
            let ((s0, y0), (s1, y1)) = (w[0], w[1]);
            total += rule.integrate(
                |x| {
                    let s = self.warp_inverse(c / x.cos(), s0, s1);
                    1.0 / self.warp.value_d1(s).1
                },
                y0.atan2(c),
                y1.atan2(c),
            );
        }
        total
    }

    fn clairaut_length(&self, c: f64, lo: (f64, f64), hi: (f64, f64)) -> f64 {
        let rule = GaussLegendre::order16();
        let mut total = 0.0;
        for w in self.arc_breaks(c, lo, hi).windows(2) {
            let ((s0, y0), (s1, y1)) = (w[0], w[1]);
            total += rule.integrate(
                |v| {
                    let s = self.warp_inverse((v * v + c * c).sqrt(), s0, s1);
                    1.0 / self.warp.value_d1(s).1
                },
                y0,
                y1,
            );
        }
        total
    }

    /// Sweep (and optionally length) of the geodesic from radius `a` to
    /// radius `b >= a` leaving with direction angle `psi`.
    fn sweep_and_length(&self, a: f64, b: f64, psi: f64, want_length: bool) -> (f64, f64) {
        let outward = psi <= FRAC_PI_2;
        let phi_a = self.warp.value(a);
        let c = phi_a * psi.sin();
        if c <= 0.0 {
            return if outward { (0.0, b - a) } else { (PI, a + b) };
        }
        let y_a = phi_a * psi.cos().abs();
        let phi_b = self.warp.value(b);
        let y_b = ((phi_b - phi_a) * (phi_b + phi_a) + y_a * y_a).max(0.0).sqrt();
        let arcs: Vec<((f64, f64), (f64, f64))> = if outward {
            vec![((a, y_a), (b, y_b))]
        } else {
            let turn = self.warp_inverse(c, 0.0, a);
            vec![((turn, 0.0), (a, y_a)), ((turn, 0.0), (b, y_b))]
        };
        let mut sweep = 0.0;
        let mut len = 0.0;
        for (lo, hi) in arcs {
            sweep += self.clairaut_sweep(c, lo, hi);
            if want_length {
                len += self.clairaut_length(c, lo, hi);
            }
        }
        (sweep, len)
    }

    /// Geodesic distance between two slice points.
    pub fn distance(&self, p: SlicePoint, q: SlicePoint) -> Result<f64, GeometryError> {
        let ((a, b), delta) = self.distance_setup(p, q)?;
        if a == 0.0 || delta == 0.0 {
            return Ok(b - a);
        }
        if !self.warp_increasing() {
            return self.distance_ode(p, q, 1e-3);
        }
        let sweep = |psi: f64| self.sweep_and_length(a, b, psi, false).0;
        let grid: Vec<(f64, f64)> = (0..=SCAN_INTERVALS)
            .map(|k| {
                let psi = PI * k as f64 / SCAN_INTERVALS as f64;
                (psi, sweep(psi))
            })
            .collect();
        let top = grid.iter().map(|g| g.1).fold(0.0, f64::max);
        // Geodesics reaching q: sweep = delta + 2 pi k or 2 pi (k+1) - delta.
        let mut targets = vec![delta];
        let mut k = 1.0;
        while TAU * k - delta <= top + 1e-12 {
            targets.push(TAU * k - delta);
            targets.push(TAU * k + delta);
            k += 1.0;
        }
        let mut best: Option<f64> = None;
        let mut last_bracket = (0.0, PI);
        for &target in &targets {
            for (i, w) in grid.windows(2).enumerate() {
                let (x0, f0) = (w[0].0, w[0].1 - target);
                let (x1, f1) = (w[1].0, w[1].1 - target);
                let last = i + 2 == grid.len();
                let bracketed = f0 == 0.0 || (f0 * f1 < 0.0) || (last && f1 == 0.0);
                if !bracketed {
                    continue;
                }
                last_bracket = (x0, x1);
                let psi = illinois(&sweep, target, x0, f0, x1, f1)
                    .ok_or(GeometryError::NoConvergence { lo: x0, hi: x1 })?;
                let len = self.sweep_and_length(a, b, psi, true).1;
                best = Some(best.map_or(len, |l: f64| l.min(len)));
            }
        }
        best.ok_or(GeometryError::NoConvergence {
            lo: last_bracket.0,
            hi: last_bracket.1,
        })
    }

    /// Radii sorted as `(inner, outer)` and the angular separation in `[0, pi]`.
    fn distance_setup(&self, p: SlicePoint, q: SlicePoint) -> Result<((f64, f64), f64), GeometryError> {
        for pt in [p, q] {
            if !(pt.s.abs() <= self.r_max) {
                return Err(GeometryError::Domain {
                    what: "s",
                    value: pt.s,
                    range: format!("[-{0}, {0}]", self.r_max),
                });
            }
        }
        let (rp, tp) = p.canonical();
        let (rq, tq) = q.canonical();
        let mut delta = (tp - tq).rem_euclid(TAU);
        if delta > PI {
            delta = TAU - delta;
        }
        Ok(((rp.min(rq), rp.max(rq)), delta))
    }

    /// Distance by RK4 shooting: bisection over the direction angle on the
    /// radius at which the geodesic first crosses the target ray. Valid when
    /// the sweep is monotone in the direction angle (no conjugate points).
    pub fn distance_ode(&self, p: SlicePoint, q: SlicePoint, step: f64) -> Result<f64, GeometryError> {
        let ((a, b), delta) = self.distance_setup(p, q)?;
        if a == 0.0 || delta == 0.0 {
            return Ok(b - a);
        }
        let (mut lo, mut hi) = (0.0, PI);
        let mut best: Option<f64> = None;
        for _ in 0..200 {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.shoot_to_ray(a, mid, delta, step) {
                Some((radius, len)) if radius <= b => {
                    hi = mid;
                    best = Some(len);
                }
                _ => lo = mid,
            }
        }
        if hi >= PI - 1e-12 {
            // Converged onto the ray through the pole.
            return Ok(a + b);
        }
        match best {
            Some(_) => self
                .shoot_to_ray(a, hi, delta, step)
                .map(|(_, len)| len)
                .ok_or(GeometryError::NoConvergence { lo, hi }),
            None => Err(GeometryError::NoConvergence { lo, hi }),
        }
    }
}

/// Illinois false position for `f(x) = target` on a sign-changing bracket.
fn illinois<F: Fn(f64) -> f64>(
    f: &F,
    target: f64,
    mut x0: f64,
    mut f0: f64,
    mut x1: f64,
    mut f1: f64,
) -> Option<f64> {
    if f0 == 0.0 {
        return Some(x0);
    }
    if f1 == 0.0 {
        return Some(x1);
    }
    let mut side = 0;
    for _ in 0..200 {
        let x = (x0 * f1 - x1 * f0) / (f1 - f0);
        let fx = f(x) - target;
        if fx.abs() <= ROOT_TOL || (x1 - x0).abs() <= 1e-15 {
            return Some(x);
        }
        if fx.signum() == f1.signum() {
            x1 = x;
            f1 = fx;
            if side == -1 {
                f0 *= 0.5;
            }
            side = -1;
        } else {
            x0 = x;
            f0 = fx;
            if side == 1 {
                f1 *= 0.5;
            }
            side = 1;
        }
    }
    None
}

//! The transport map `Φ_r(x) = exp_x(r Du(x))`, the contact set `A_r`
//! and the inclusion of the far set in `Φ_r(A_r)`.

use serde::{Deserialize, Serialize};

use super::{AbpError, NeumannSolution};
use crate::comparison::{
    conjugate_scan, jacobi_integrate, volume_expansion_series, weighted_trace_bound,
    ComparisonSeries,
};
use crate::geometry::{RotSymSpace, SlicePoint};

/// Slack for the `A_r` inequality, relative to the size of its terms.
pub const AR_TOL: f64 = 1e-8;
/// Slack for the Jacobian bound, relative to the bound.
pub const JACOBIAN_TOL: f64 = 1e-9;
/// Default Jacobi step along transport geodesics.
pub const JACOBI_STEP: f64 = 1e-3;
/// Default number of far-set targets in [`inclusion_audit`].
pub const INCLUSION_TARGETS: usize = 64;

/// Sampling of `K` in the `(s, θ)` slice used to certify `A_r` membership.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub radial: usize,
    pub angular: usize,
    /// Rounds of local refinement around the worst sample.
    pub refine_rounds: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            radial: 64,
            angular: 32,
            refine_rounds: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArCertificate {
    pub in_ar: bool,
    /// Smallest value of `r u(x) + d(x, p)²/2 - r u(x̄) - r²|Du(x̄)|²/2`.
    pub worst_margin: f64,
    pub worst_point: SlicePoint,
    pub tolerance: f64,
    pub samples: usize,
    pub spec: SampleSpec,
}

fn image_point(image: f64) -> SlicePoint {
    let (rho, theta) = SlicePoint::new(image, 0.0).canonical();
    SlicePoint::new(rho, theta)
}

/// Certifies `x̄ = (s̄, 0) ∈ A_r` on a sampled grid of the slice of `K`.
///
/// Rotational symmetry reduces `K` to the half-disc `θ ∈ [0, π]` of the
/// slice containing `x̄` and its image.
pub fn ar_membership(
    space: &RotSymSpace,
    sol: &NeumannSolution,
    s_bar: f64,
    r: f64,
    spec: &SampleSpec,
) -> Result<ArCertificate, AbpError> {
    let du = sol.du(space, s_bar)?;
    let u_bar = sol.u_at(s_bar)?;
    let target = image_point(s_bar + r * du);
    let rhs = r * u_bar + 0.5 * r * r * du * du;
    let big_r = sol.radius;
    let scale = 1.0 + r * sol.u_at(big_r)?.abs() + (big_r + target.s) * (big_r + target.s);
    let tol = AR_TOL * scale;
    let margin = |x: SlicePoint| -> Result<f64, AbpError> {
        let d = space.distance(x, target)?;
        Ok(r * sol.u_at(x.s)? + 0.5 * d * d - rhs)
    };
    let nr = spec.radial.max(2);
    let na = spec.angular.max(2);
    let mut worst = (f64::INFINITY, SlicePoint::new(s_bar.abs(), 0.0));
    let mut samples = 0;
    let mut visit = |x: SlicePoint, worst: &mut (f64, SlicePoint)| -> Result<(), AbpError> {
        let v = margin(x)?;
        samples += 1;
        if v < worst.0 {
            *worst = (v, x);
        }
        Ok(())
    };
    let pi = std::f64::consts::PI;
    let (ds, dth) = (big_r / (nr - 1) as f64, pi / (na - 1) as f64);
    // x̄ itself: the margin vanishes there when the radial segment is minimizing.
    let (rho_bar, theta_bar) = SlicePoint::new(s_bar, 0.0).canonical();
    visit(SlicePoint::new(rho_bar, theta_bar.min(pi)), &mut worst)?;
    for i in 0..nr {
        for j in 0..na {
            visit(SlicePoint::new(i as f64 * ds, j as f64 * dth), &mut worst)?;
        }
    }
    let (mut hs, mut ht) = (ds, dth);
    for _ in 0..spec.refine_rounds {
        let centre = worst.1;
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                let s = (centre.s + i as f64 * hs / 4.0).clamp(0.0, big_r);
                let th = (centre.theta + j as f64 * ht / 4.0).clamp(0.0, pi);
                visit(SlicePoint::new(s, th), &mut worst)?;
            }
        }
        hs /= 4.0;
        ht /= 4.0;
    }
    Ok(ArCertificate {
        in_ar: worst.0 >= -tol,
        worst_margin: worst.0,
        worst_point: worst.1,
        tolerance: tol,
        samples,
        spec: *spec,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportAudit {
    pub base: f64,
    pub r: f64,
    pub du: f64,
    /// Signed radius of `Φ_r(x̄)`.
    pub image: f64,
    pub in_u: bool,
    /// `None` when `x̄ ∉ U`, so `A_r` was not tested.
    pub ar: Option<ArCertificate>,
    pub in_ar: bool,
    pub det_j: f64,
    /// `w(Φ_r(x̄)) |det DΦ_r(x̄)|`.
    pub weighted_jacobian: f64,
    /// `(1 + r f(x̄)^{1/(m+α-1)})^{m+α} w(x̄)`.
    pub jacobian_bound: f64,
    /// Checked only on `A_r`.
    pub jacobian_bound_ok: Option<bool>,
    pub conjugate_time: Option<f64>,
    pub monotonicity: ComparisonSeries,
    pub trace_bound: ComparisonSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportSpec {
    pub jacobi_step: f64,
    pub sample: SampleSpec,
}

impl Default for TransportSpec {
    fn default() -> Self {
        Self {
            jacobi_step: JACOBI_STEP,
            sample: SampleSpec::default(),
        }
    }
}

/// Follows `x̄ = (s̄, 0)` along `t ↦ exp(t Du)` for `t ∈ [0, r]` and audits
/// the Jacobian of `Φ_r` there.
pub fn transport(
    space: &RotSymSpace,
    sol: &NeumannSolution,
    s_bar: f64,
    r: f64,
) -> Result<TransportAudit, AbpError> {
    transport_with(space, sol, s_bar, r, &TransportSpec::default())
}

pub fn transport_with(
    space: &RotSymSpace,
    sol: &NeumannSolution,
    s_bar: f64,
    r: f64,
    spec: &TransportSpec,
) -> Result<TransportAudit, AbpError> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(AbpError::Domain(format!("transport time must be >= 0, got {r}")));
    }
    let du = sol.du(space, s_bar)?;
    let d2u = sol.d2u(space, s_bar)?;
    let image = s_bar + r * du;
    let in_u = sol.in_u(space, s_bar)?;
    let hess = space.hessian_from_derivatives(s_bar, du, d2u);
    let states = jacobi_integrate(space, s_bar, du, hess, r, spec.jacobi_step)?;
    let conjugate_time = conjugate_scan(&states);
    let det_j = states.last().expect("at least the initial state").det_p().abs();
    let f_value = sol.f.value(s_bar);
    let n = space.dim_eff();
    let big_f = f_value.powf(1.0 / (n - 1.0));
    let weighted_jacobian = space.w(image).v * det_j;
    let jacobian_bound = (1.0 + r * big_f).powf(n) * space.w(s_bar).v;
    let ar = if in_u {
        Some(ar_membership(space, sol, s_bar, r, &spec.sample)?)
    } else {
        None
    };
    let in_ar = ar.as_ref().is_some_and(|c| c.in_ar);
    if in_ar {
        if let Some(t) = conjugate_time {
            return Err(AbpError::ConjugateAtArPoint { s: s_bar, t });
        }
    }
    let jacobian_bound_ok =
        in_ar.then(|| weighted_jacobian <= jacobian_bound * (1.0 + JACOBIAN_TOL));
    Ok(TransportAudit {
        base: s_bar,
        r,
        du,
        image,
        in_u,
        ar,
        in_ar,
        det_j,
        weighted_jacobian,
        jacobian_bound,
        jacobian_bound_ok,
        conjugate_time,
        monotonicity: volume_expansion_series(space, &states, f_value)?,
        trace_bound: weighted_trace_bound(space, &states, f_value)?,
    })
}

/// `|det DΦ_r|` at `s̄` from the radial image map: central difference of
/// `s ↦ s + r u'(s)` times `(φ(image)/φ(s̄))^{m-1}`.
pub fn image_jacobian_fd(
    space: &RotSymSpace,
    sol: &NeumannSolution,
    s_bar: f64,
    r: f64,
    h: f64,
) -> Result<f64, AbpError> {
    let map = |s: f64| -> Result<f64, AbpError> { Ok(s + r * sol.du(space, s)?) };
    let radial = (map(s_bar + h)? - map(s_bar - h)?) / (2.0 * h);
    let image = map(s_bar)?;
    let ratio = space.phi(image).v / space.phi(s_bar).v;
    Ok((radial * ratio.powi(space.m as i32 - 1)).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionEntry {
    pub target: f64,
    pub preimage: Option<f64>,
    pub in_ar: bool,
    pub worst_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub r: f64,
    /// Radius `r - R` of the far set `{p : d(x, p) < r for all x ∈ K}`.
    pub far_radius: f64,
    /// True when `r <= R` and the far set is empty.
    pub vacuous: bool,
    pub entries: Vec<InclusionEntry>,
    pub coverage: f64,
}

/// Finds `s ∈ [0, R]` with `s + r u'(s) = ρ` by bisection.
pub fn preimage(space: &RotSymSpace, sol: &NeumannSolution, r: f64, rho: f64) -> Result<Option<f64>, AbpError> {
    let g = |s: f64| -> Result<f64, AbpError> { Ok(s + r * sol.du(space, s)? - rho) };
    let (mut lo, mut hi) = (0.0, sol.radius);
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo == 0.0 {
        return Ok(Some(lo));
    }
    if glo * ghi > 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(Some(mid));
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Checks that every sampled point of the far set is `Φ_r` of a certified
/// `A_r` point. Targets are `ρ_k = k (r - R) / targets` on one ray, which
/// suffices by rotational symmetry.
pub fn inclusion_audit(
    space: &RotSymSpace,
    sol: &NeumannSolution,
    r: f64,
    targets: usize,
    spec: &SampleSpec,
) -> Result<InclusionReport, AbpError> {
    let far_radius = r - sol.radius;
    if far_radius <= 0.0 {
        return Ok(InclusionReport {
            r,
            far_radius: far_radius.max(0.0),
            vacuous: true,
            entries: Vec::new(),
            coverage: 1.0,
        });
    }
    let mut entries = Vec::with_capacity(targets);
    for k in 0..targets {
        let rho = k as f64 * far_radius / targets as f64;
        let entry = match preimage(space, sol, r, rho)? {
            Some(s) => {
                let cert = if sol.in_u(space, s)? {
                    Some(ar_membership(space, sol, s, r, spec)?)
                } else {
                    None
                };
                InclusionEntry {
                    target: rho,
                    preimage: Some(s),
                    in_ar: cert.as_ref().is_some_and(|c| c.in_ar),
                    worst_margin: cert.map(|c| c.worst_margin),
                }
            }
            None => InclusionEntry {
                target: rho,
                preimage: None,
                in_ar: false,
                worst_margin: None,
            },
        };
        entries.push(entry);
    }
    let covered = entries.iter().filter(|e| e.in_ar).count();
    Ok(InclusionReport {
        r,
        far_radius,
        vacuous: false,
        coverage: covered as f64 / targets.max(1) as f64,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abp::{normalize_f, solve_neumann_radial, BallDomain};
    use crate::geometry::RadialProfile;

    fn flat_solution() -> (RotSymSpace, NeumannSolution) {
        let s = RotSymSpace::euclidean(2, 1.0, 100.0).unwrap();
        let k = BallDomain::new(&s, 1.0).unwrap();
        let nz = normalize_f(&s, &k, &RadialProfile::constant(1.0)).unwrap();
        let sol = solve_neumann_radial(&s, &k, &nz.f).unwrap();
        (s, sol)
    }

    #[test]
    fn flat_transport_closed_form() {
        let (s, sol) = flat_solution();
        let a = transport(&s, &sol, 0.5, 2.0).unwrap();
        assert!((a.image - 1.5).abs() < 1e-12);
        assert!((a.det_j - 9.0).abs() < 1e-9);
        assert!(a.in_u && a.in_ar);
        assert_eq!(a.jacobian_bound_ok, Some(true));
        assert!((a.jacobian_bound - (7.0f64 / 3.0).powi(3)).abs() < 1e-12);
        assert!(a.monotonicity.is_clean());
        assert!(a.trace_bound.is_clean());
        let fd = image_jacobian_fd(&s, &sol, 0.5, 2.0, 1e-4).unwrap();
        assert!((fd - a.det_j).abs() < 1e-5);
    }

    #[test]
    fn zero_time_is_identity() {
        let (s, sol) = flat_solution();
        let a = transport(&s, &sol, 0.3, 0.0).unwrap();
        assert_eq!(a.image, 0.3);
        assert!((a.det_j - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_contact_set_margin() {
        let (s, sol) = flat_solution();
        for s_bar in [0.0, 0.2, 0.9] {
            for r in [1e-6, 0.5, 10.0] {
                let c = ar_membership(&s, &sol, s_bar, r, &SampleSpec::default()).unwrap();
                assert!(c.in_ar, "s̄ = {s_bar}, r = {r}: {}", c.worst_margin);
                assert!(c.worst_margin.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_preimage_and_inclusion() {
        let (s, sol) = flat_solution();
        let p = preimage(&s, &sol, 10.0, 9.0).unwrap().unwrap();
        assert!((p - 9.0 / 11.0).abs() < 1e-12);
        let spec = SampleSpec {
            radial: 16,
            angular: 8,
            refine_rounds: 1,
        };
        let rep = inclusion_audit(&s, &sol, 10.0, 8, &spec).unwrap();
        assert_eq!(rep.coverage, 1.0);
        assert!(inclusion_audit(&s, &sol, 0.5, 8, &spec).unwrap().vacuous);
    }
}

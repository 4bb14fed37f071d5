//! The weighted Sobolev inequality
//! `∫_K w|Df| + ∫_{∂K} w f >= (m+α) V^{1/(m+α)} (∫_K w f^p)^{1/p}` and its
//! isoperimetric specialization, with the finite-`r` volume chain behind
//! it.

use serde::{Deserialize, Serialize};

use super::neumann::{check_positive, scaling_sides};
use super::{normalize_f, solve_neumann_radial_with, AbpError, BallDomain, NeumannSolution, NEUMANN_CELLS};
use crate::comparison::AvrEstimate;
use crate::curvature::{GridSpec, Verdict};
use crate::geometry::{GeometryError, RadialProfile, RotSymSpace};
use crate::quadrature::{integrate, QuadTolerance};

/// Relative slack for the chain links and the final inequality.
pub const SOBOLEV_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub r: f64,
    /// `∫_{B_{r-R}} w`, the weighted volume of the far set.
    pub far_volume: f64,
    /// `∫_U (1 + r f^{1/(m+α-1)})^{m+α} w`.
    pub transported_bound: f64,
    pub holds: bool,
    /// Both sides divided by `r^{m+α}`.
    pub far_volume_divided: f64,
    pub transported_bound_divided: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub verdict: AuditVerdict,
    pub hypothesis: Verdict,
    pub radius: f64,
    pub lambda: f64,
    /// `∫_K w|Df0| + ∫_{∂K} w f0`.
    pub lhs: f64,
    /// `∫_K w f0^p`.
    pub power_integral: f64,
    pub avr: f64,
    pub avr_error: f64,
    pub avr_settled: bool,
    /// `(m+α) V^{1/(m+α)} (∫_K w f0^p)^{1/p}` at the AVR estimate.
    pub rhs: f64,
    /// The same over the AVR error bar.
    pub rhs_interval: Interval,
    /// `lhs / rhs`, absent when the right-hand side vanishes.
    pub ratio: Option<f64>,
    pub trivial_rhs: bool,
    pub chain: Vec<ChainLink>,
    /// `∫_U w f^p` for the normalized `f`, the limit of the divided chain.
    pub limit_bound: f64,
    /// `V - error <= ∫_U w f^p`.
    pub limit_holds: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditVerdict {
    Pass,
    Fail,
    HypothesisViolated,
}

fn over_u(
    space: &RotSymSpace,
    sol: &NeumannSolution,
    integrand: impl Fn(f64) -> f64,
) -> Result<f64, AbpError> {
    let tol = QuadTolerance {
        abs: 1e-14,
        rel: 1e-13,
        max_intervals: 8000,
    };
    let mut acc = 0.0;
    for &(a, b) in &sol.u_set {
        acc += integrate(|t| integrand(t) * space.area_density(t), a, b, tol)
            .map_err(GeometryError::from)?
            .value;
    }
    Ok(space.sigma() * acc)
}

/// Audits the Sobolev inequality for `f0` on `K` against the supplied AVR
/// estimate, together with the finite-`r` chain for each `r` in `r_list`
/// and its limit form.
pub fn sobolev_audit(
    space: &RotSymSpace,
    k: &BallDomain,
    f0: &RadialProfile,
    r_list: &[f64],
    avr: &AvrEstimate,
) -> Result<SobolevReport, AbpError> {
    check_positive(f0, k.radius)?;
    let hypothesis = space.cd_scan(&GridSpec::default())?.verdict;
    let nz = normalize_f(space, k, f0)?;
    let sol = solve_neumann_radial_with(space, k, &nz.f, NEUMANN_CELLS, nz.lambda)?;
    let sides = scaling_sides(space, k, f0)?;
    let n = space.dim_eff();
    let p = n / (n - 1.0);
    let rhs_at = |v: f64| n * v.max(0.0).powf(1.0 / n) * sides.power.powf(1.0 / p);
    let rhs = rhs_at(avr.estimate);
    let rhs_interval = Interval {
        lo: rhs_at(avr.estimate - avr.extrapolation_error),
        hi: rhs_at(avr.estimate + avr.extrapolation_error),
    };
    let trivial_rhs = rhs == 0.0;
    let lhs = sides.lhs();
    let ratio = (!trivial_rhs).then(|| lhs / rhs);
    let certified = hypothesis.is_certified();

    let big_f = |t: f64| nz.f.value(t).powf(1.0 / (n - 1.0));
    let mut chain = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let far = r - k.radius;
        if far <= 0.0 {
            continue;
        }
        let far_volume = space.weighted_ball_volume(far)?;
        let transported_bound = over_u(space, &sol, |t| (1.0 + r * big_f(t)).powf(n))?;
        let holds = far_volume <= transported_bound * (1.0 + SOBOLEV_TOL);
        if certified && !holds {
            return Err(AbpError::ChainViolation {
                r,
                lhs: far_volume,
                rhs: transported_bound,
            });
        }
        let scale = r.powf(n);
        chain.push(ChainLink {
            r,
            far_volume,
            transported_bound,
            holds,
            far_volume_divided: far_volume / scale,
            transported_bound_divided: transported_bound / scale,
        });
    }
    let limit_bound = over_u(space, &sol, |t| nz.f.value(t).powf(p))?;
    let limit_holds = avr.estimate - avr.extrapolation_error <= limit_bound * (1.0 + SOBOLEV_TOL);
    let inequality_holds = lhs >= rhs_interval.lo * (1.0 - SOBOLEV_TOL);
    let verdict = if !certified {
        AuditVerdict::HypothesisViolated
    } else if inequality_holds && limit_holds && chain.iter().all(|c| c.holds) {
        AuditVerdict::Pass
    } else {
        AuditVerdict::Fail
    };
    Ok(SobolevReport {
        verdict,
        hypothesis,
        radius: k.radius,
        lambda: nz.lambda,
        lhs,
        power_integral: sides.power,
        avr: avr.estimate,
        avr_error: avr.extrapolation_error,
        avr_settled: avr.settled,
        rhs,
        rhs_interval,
        ratio,
        trivial_rhs,
        chain,
        limit_bound,
        limit_holds,
        tolerance: SOBOLEV_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub verdict: AuditVerdict,
    /// `∫_{∂K} w`.
    pub boundary_measure: f64,
    /// `∫_K w`.
    pub volume: f64,
    pub rhs: f64,
    pub rhs_interval: Interval,
    pub ratio: Option<f64>,
    pub trivial_rhs: bool,
    pub sobolev: SobolevReport,
}

/// The `f = 1` case: `∫_{∂K} w >= (m+α) V^{1/(m+α)} (∫_K w)^{(m+α-1)/(m+α)}`.
pub fn isoperimetric_check(
    space: &RotSymSpace,
    k: &BallDomain,
    r_list: &[f64],
    avr: &AvrEstimate,
) -> Result<IsoperimetricReport, AbpError> {
    let sobolev = sobolev_audit(space, k, &RadialProfile::constant(1.0), r_list, avr)?;
    Ok(IsoperimetricReport {
        verdict: sobolev.verdict,
        boundary_measure: sobolev.lhs,
        volume: sobolev.power_integral,
        rhs: sobolev.rhs,
        rhs_interval: sobolev.rhs_interval,
        ratio: sobolev.ratio,
        trivial_rhs: sobolev.trivial_rhs,
        sobolev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::avr_estimate;
    use std::f64::consts::PI;

    #[test]
    fn flat_plane_chain_and_trivial_rhs() {
        let s = RotSymSpace::euclidean(2, 1.0, 1e3).unwrap();
        let k = BallDomain::new(&s, 1.0).unwrap();
        let avr = avr_estimate(&s, 1.0).unwrap();
        let rep = sobolev_audit(&s, &k, &RadialProfile::constant(1.0), &[10.0, 100.0], &avr).unwrap();
        assert_eq!(rep.verdict, AuditVerdict::Pass);
        assert!(rep.trivial_rhs || rep.rhs < 1e-2);
        assert!((rep.lhs - 2.0 * PI).abs() < 1e-12);
        let link = rep.chain[0];
        assert!((link.far_volume - 81.0 * PI).abs() < 1e-9);
        // ∫_{B_1} (1 + 10·(2/3))³ = π (23/3)³
        assert!((link.transported_bound - PI * (23.0f64 / 3.0).powi(3)).abs() < 1e-8);
        assert!(link.holds);
        // ∫_{B_1} (4/9)^{3/2} = 8π/27
        assert!((rep.limit_bound - 8.0 * PI / 27.0).abs() < 1e-12);
    }

    #[test]
    fn flat_isoperimetric() {
        let s = RotSymSpace::euclidean(3, 1.0, 1e3).unwrap();
        let k = BallDomain::new(&s, 2.0).unwrap();
        let avr = avr_estimate(&s, 1.0).unwrap();
        let rep = isoperimetric_check(&s, &k, &[], &avr).unwrap();
        assert!((rep.boundary_measure - 16.0 * PI).abs() < 1e-10);
        assert!(rep.boundary_measure >= rep.rhs);
        assert_eq!(rep.verdict, AuditVerdict::Pass);
    }

    #[test]
    fn violated_space_is_labelled() {
        let s = RotSymSpace::euclidean(2, 1.0, 20.0)
            .unwrap()
            .with_density(RadialProfile::gaussian_density())
            .unwrap();
        let k = BallDomain::new(&s, 1.0).unwrap();
        let avr = avr_estimate(&s, 1.0).unwrap();
        let rep = sobolev_audit(&s, &k, &RadialProfile::constant(1.0), &[5.0], &avr).unwrap();
        assert_eq!(rep.verdict, AuditVerdict::HypothesisViolated);
    }
}

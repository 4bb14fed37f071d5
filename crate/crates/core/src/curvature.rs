//! Bakry–Émery Ricci curvature `Ric - D² log w - (1/alpha) D log w ⊗ D log w`
//! of the model spaces and grid certification of its sign.
//!
//! For a warped metric and a radial density the tensor is diagonal in the
//! frame (radial, tangential): `D log w` is radial and both `Ric` and the
//! Hessian of a radial function are diagonal there. Only the two
//! eigenvalues are computed.

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, RotSymSpace};

/// Certification threshold on the minimal eigenvalue.
pub const CD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedNonnegative,
    Violated,
    InconclusiveNearZero,
}

impl Verdict {
    pub fn is_certified(self) -> bool {
        self == Verdict::CertifiedNonnegative
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::CertifiedNonnegative => "certified-nonnegative",
            Verdict::Violated => "violated",
            Verdict::InconclusiveNearZero => "inconclusive-near-zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    /// Grid starts at `lo_fraction * r_max`.
    pub lo_fraction: f64,
    /// Samples of the refinement around the grid minimizer.
    pub refine_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 512,
            lo_fraction: 1e-3,
            refine_points: 64,
        }
    }
}

impl GridSpec {
    /// Log-uniform radii on `[lo_fraction * r_max, r_max]`.
    pub fn radii(&self, r_max: f64) -> Vec<f64> {
        let lo = (self.lo_fraction * r_max).ln();
        let hi = r_max.ln();
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    r_max
                } else {
                    (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdReport {
    pub grid: Vec<f64>,
    pub radial_eig: Vec<f64>,
    pub tangential_eig: Vec<f64>,
    pub min_eig: f64,
    pub argmin_r: f64,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub grid_spec: GridSpec,
    /// First radius where the minimal eigenvalue turns negative.
    pub zero_crossing: Option<f64>,
}

impl CdReport {
    pub fn min_eigs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(self.radial_eig.iter().zip(&self.tangential_eig))
            .map(|(&r, (&a, &b))| (r, a.min(b)))
    }

    /// Two-column CSV `r,min_eig`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,min_eig\n");
        for (r, e) in self.min_eigs() {
            out.push_str(&format!("{r:e},{e:e}\n"));
        }
        out
    }
}

impl RotSymSpace {
    /// Eigenvalues of the Bakry–Émery tensor on unit radial and unit
    /// tangential vectors.
    pub fn bakry_emery_eigs(&self, r: f64) -> Result<(f64, f64), GeometryError> {
        let (ric_rr, ric_tt) = self.ricci_radial_tangential(r)?;
        let lw = self.log_w(r);
        let p = self.phi(r);
        let radial = ric_rr - lw.d2 - lw.d1 * lw.d1 / self.alpha;
        let tangential = ric_tt - lw.d1 * p.d1 / p.v;
        Ok((radial, tangential))
    }

    fn min_eig_at(&self, r: f64) -> f64 {
        let (a, b) = self
            .bakry_emery_eigs(r)
            .expect("radius inside the validated grid");
        a.min(b)
    }

    /// Scans the minimal Bakry–Émery eigenvalue over a log-uniform grid,
    /// refines around the minimizer and issues a verdict.
    pub fn cd_scan(&self, spec: &GridSpec) -> Result<CdReport, GeometryError> {
        let grid = spec.radii(self.r_max);
        let mut radial_eig = Vec::with_capacity(grid.len());
        let mut tangential_eig = Vec::with_capacity(grid.len());
        for &r in &grid {
            let (a, b) = self.bakry_emery_eigs(r)?;
            radial_eig.push(a);
            tangential_eig.push(b);
        }
        let mut k = 0;
        let mut min_eig = f64::INFINITY;
        for i in 0..grid.len() {
            let e = radial_eig[i].min(tangential_eig[i]);
            if e < min_eig {
                min_eig = e;
                k = i;
            }
        }
        let mut argmin_r = grid[k];
        // Refinement on the neighbouring cells of the grid minimizer.
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let n = spec.refine_points.max(2);
        for j in 0..=n {
            let r = lo + (hi - lo) * j as f64 / n as f64;
            let e = self.min_eig_at(r);
            if e < min_eig {
                min_eig = e;
                argmin_r = r;
            }
        }
        let verdict = if min_eig < -CD_TOL {
            Verdict::Violated
        } else if min_eig < 0.0 {
            Verdict::InconclusiveNearZero
        } else {
            Verdict::CertifiedNonnegative
        };
        let mut zero_crossing = None;
        for i in 1..grid.len() {
            let e0 = radial_eig[i - 1].min(tangential_eig[i - 1]);
            let e1 = radial_eig[i].min(tangential_eig[i]);
            if e0 >= 0.0 && e1 < 0.0 {
                let (mut a, mut b) = (grid[i - 1], grid[i]);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if self.min_eig_at(mid) >= 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                zero_crossing = Some(0.5 * (a + b));
                break;
            }
        }
        Ok(CdReport {
            grid,
            radial_eig,
            tangential_eig,
            min_eig,
            argmin_r,
            verdict,
            tolerance: CD_TOL,
            grid_spec: *spec,
            zero_crossing,
        })
    }

    /// Recomputes both eigenvalues from central second-order finite
    /// differences of `phi` and `log w` along the radial geodesic and returns
    /// the largest discrepancy with the closed forms.
    pub fn fd_crosscheck(&self, r: f64, h: f64) -> Result<f64, GeometryError> {
        if !(h > 0.0 && r - 2.0 * h > 0.0 && r + 2.0 * h < self.r_max) {
            return Err(GeometryError::Domain {
                what: "h",
                value: h,
                range: format!("r ± 2h inside (0, {}) at r = {r}", self.r_max),
            });
        }
        let phi = |x: f64| self.warp.value(x);
        let lw = |x: f64| self.density.value(x).ln();
        let d1 = |f: &dyn Fn(f64) -> f64| (f(r + h) - f(r - h)) / (2.0 * h);
        let d2 = |f: &dyn Fn(f64) -> f64| (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
        let m = self.m as f64;
        let (p0, p1, p2) = (phi(r), d1(&phi), d2(&phi));
        let (l1, l2) = (d1(&lw), d2(&lw));
        let k_rad = -p2 / p0;
        let k_tan = (1.0 - p1 * p1) / (p0 * p0);
        let radial = (m - 1.0) * k_rad - l2 - l1 * l1 / self.alpha;
        let tangential = k_rad + (m - 2.0) * k_tan - l1 * p1 / p0;
        let (a, b) = self.bakry_emery_eigs(r)?;
        Ok((radial - a).abs().max((tangential - b).abs()))
    }
}

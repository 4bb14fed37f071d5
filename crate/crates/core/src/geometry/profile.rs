//! Radial profiles: smooth functions of the radius used as warps, densities
//! and test functions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::jet::Jet;

/// One term `amp * exp(lin * r + quad * r^2)` of an exponential combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amp: f64,
    pub lin: f64,
    pub quad: f64,
}

/// Natural cubic spline through `(r, value)` knots (C² interpolation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, GeometryError> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(GeometryError::InvalidProfile(
                "spline needs at least three (r, value) rows".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::InvalidProfile(
                "spline radii must be strictly increasing".into(),
            ));
        }
        // Tridiagonal system for natural end conditions (Thomas algorithm).
        let mut moments = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            let lower = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
            if i > 1 {
                let m = lower / diag[i - 1];
                diag[i] -= m * upper[i - 1];
                rhs[i] -= m * rhs[i - 1];
            }
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { moments[i + 1] } else { 0.0 };
            moments[i] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(Self {
            knots,
            values,
            moments,
        })
    }

    pub fn domain_end(&self) -> f64 {
        *self.knots.last().expect("spline has knots")
    }

    fn jet(&self, r: f64) -> Jet {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= r) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let h = x1 - x0;
        let a = x1 - r;
        let b = r - x0;
        let v = m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * b;
        let d1 = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - (y0 / h - m0 * h / 6.0)
            + (y1 / h - m1 * h / 6.0);
        let d2 = (m0 * a + m1 * b) / h;
        let d3 = (m1 - m0) / h;
        Jet::new(v, d1, d2, d3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Constant { value: f64 },
    /// `sum coeffs[k] * r^k`.
    Polynomial { coeffs: Vec<f64> },
    Rational { num: Vec<f64>, den: Vec<f64> },
    ExpCombination { terms: Vec<ExpTerm> },
    /// `r^lead * (1 + r^2)^exponent`.
    QuadraticPower { lead: u32, exponent: f64 },
    Spline { spline: CubicSpline },
}

fn horner(coeffs: &[f64], x: Jet) -> Jet {
    coeffs
        .iter()
        .rev()
        .fold(Jet::constant(0.0), |acc, &c| acc * x + c)
}

/// A smooth function of the radius with exact derivatives up to order three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub name: String,
    pub kind: ProfileKind,
    pub scale: f64,
    pub r_max: f64,
}

impl RadialProfile {
    pub fn new(name: impl Into<String>, kind: ProfileKind, r_max: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            scale: 1.0,
            r_max,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new("const", ProfileKind::Constant { value: c }, f64::INFINITY)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::new("polynomial", ProfileKind::Polynomial { coeffs }, f64::INFINITY)
    }

    /// Flat warp `phi(r) = r`.
    pub fn euclidean() -> Self {
        Self::new(
            "euclidean",
            ProfileKind::Polynomial {
                coeffs: vec![0.0, 1.0],
            },
            f64::INFINITY,
        )
    }

    /// `phi(r) = sinh r`.
    pub fn hyperbolic_like() -> Self {
        Self::new(
            "hyperbolic_like",
            ProfileKind::ExpCombination {
                terms: vec![
                    ExpTerm {
                        amp: 0.5,
                        lin: 1.0,
                        quad: 0.0,
                    },
                    ExpTerm {
                        amp: -0.5,
                        lin: -1.0,
                        quad: 0.0,
                    },
                ],
            },
            f64::INFINITY,
        )
    }

    /// `phi(r) = r (1 + r^2)^((beta - 1)/2)`: smooth at the pole, `~ r^beta`
    /// at infinity.
    pub fn capped_power(beta: f64) -> Result<Self, GeometryError> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(GeometryError::InvalidProfile(format!(
                "capped_power requires beta in (0, 1], got {beta}"
            )));
        }
        Ok(Self::new(
            "capped_power",
            ProfileKind::QuadraticPower {
                lead: 1,
                exponent: 0.5 * (beta - 1.0),
            },
            f64::INFINITY,
        ))
    }

    /// `w(r) = exp(-r^2 / 2)`.
    pub fn gaussian_density() -> Self {
        Self::new(
            "gaussian_density",
            ProfileKind::ExpCombination {
                terms: vec![ExpTerm {
                    amp: 1.0,
                    lin: 0.0,
                    quad: -0.5,
                }],
            },
            f64::INFINITY,
        )
    }

    /// `w(r) = (1 + r^2)^(q/2)`.
    pub fn power_density(q: f64) -> Self {
        Self::new(
            "power_density",
            ProfileKind::QuadraticPower {
                lead: 0,
                exponent: 0.5 * q,
            },
            f64::INFINITY,
        )
    }

    /// `f(r) = base + amp * exp(-r^2 / (2 width^2))`.
    pub fn gaussian_bump(base: f64, amp: f64, width: f64) -> Self {
        Self::new(
            "gaussian_bump",
            ProfileKind::ExpCombination {
                terms: vec![
                    ExpTerm {
                        amp: base,
                        lin: 0.0,
                        quad: 0.0,
                    },
                    ExpTerm {
                        amp,
                        lin: 0.0,
                        quad: -0.5 / (width * width),
                    },
                ],
            },
            f64::INFINITY,
        )
    }

    pub fn spline(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, GeometryError> {
        let spline = CubicSpline::new(knots, values)?;
        let r_max = spline.domain_end();
        Ok(Self::new("spline", ProfileKind::Spline { spline }, r_max))
    }

    /// Loads a spline profile from a CSV file with columns `r, value`.
    /// A header row is allowed.
    pub fn spline_from_csv(path: &Path) -> Result<Self, GeometryError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| GeometryError::InvalidProfile(format!("{}: {e}", path.display())))?;
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record
                .map_err(|e| GeometryError::InvalidProfile(format!("{}: {e}", path.display())))?;
            if record.len() < 2 {
                return Err(GeometryError::InvalidProfile(format!(
                    "{}: row {} needs two columns",
                    path.display(),
                    line + 1
                )));
            }
            let (r, v) = match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(r), Ok(v)) => (r, v),
                _ if line == 0 => continue,
                _ => {
                    return Err(GeometryError::InvalidProfile(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        line + 1
                    )))
                }
            };
            knots.push(r);
            values.push(v);
        }
        Self::spline(knots, values)
    }

    /// Returns `scale * self`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out
    }

    /// Spline profiles only have piecewise-constant third derivatives.
    pub fn is_lower_trust(&self) -> bool {
        matches!(self.kind, ProfileKind::Spline { .. })
    }

    /// Value and first three derivatives at `r`.
    pub fn jet(&self, r: f64) -> Jet {
        let x = Jet::variable(r);
        let j = match &self.kind {
            ProfileKind::Constant { value } => Jet::constant(*value),
            ProfileKind::Polynomial { coeffs } => horner(coeffs, x),
            ProfileKind::Rational { num, den } => horner(num, x) / horner(den, x),
            ProfileKind::ExpCombination { terms } => {
                terms.iter().fold(Jet::constant(0.0), |acc, t| {
                    if t.lin == 0.0 && t.quad == 0.0 {
                        acc + t.amp
                    } else {
                        acc + (x * t.lin + x * x * t.quad).exp() * t.amp
                    }
                })
            }
            ProfileKind::QuadraticPower { lead, exponent } => {
                let base = (x * x + 1.0).powf(*exponent);
                x.powi(*lead) * base
            }
            ProfileKind::Spline { spline } => spline.jet(r),
        };
        j.scale(self.scale)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).v
    }

    /// Value and first derivative; cheaper paths for the flat warp.
    pub fn value_d1(&self, r: f64) -> (f64, f64) {
        if let ProfileKind::Polynomial { coeffs } = &self.kind {
            let mut v = 0.0;
            let mut d = 0.0;
            for &c in coeffs.iter().rev() {
                d = d * r + v;
                v = v * r + c;
            }
            return (v * self.scale, d * self.scale);
        }
        let j = self.jet(r);
        (j.v, j.d1)
    }

    /// True when the profile is exactly `phi(r) = r`.
    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
            && matches!(&self.kind, ProfileKind::Polynomial { coeffs }
                if coeffs.len() == 2 && coeffs[0] == 0.0 && coeffs[1] == 1.0)
    }
}

/// Preset names understood by scenario files.
pub const PRESETS: &[(&str, &str)] = &[
    ("euclidean", "warp phi(r) = r"),
    ("hyperbolic_like", "warp phi(r) = sinh r"),
    (
        "capped_power",
        "warp phi(r) = r (1 + r^2)^((beta-1)/2), parameter beta in (0, 1]",
    ),
    ("gaussian_density", "density w(r) = exp(-r^2/2)"),
    ("power_density", "density w(r) = (1 + r^2)^(q/2), parameter q"),
    ("const", "constant profile, parameter value (default 1)"),
    (
        "gaussian_bump",
        "test function base + amp exp(-r^2/(2 width^2)), parameters base, amp, width",
    ),
    ("spline", "natural cubic spline from a CSV file, parameter file"),
];

/// Builds a preset profile by name. `params` holds numeric parameters;
/// `file` is only consulted by `spline`.
pub fn preset(
    name: &str,
    params: &BTreeMap<String, f64>,
    file: Option<&Path>,
) -> Result<RadialProfile, GeometryError> {
    let get = |key: &str, default: Option<f64>| -> Result<f64, GeometryError> {
        params.get(key).copied().or(default).ok_or_else(|| {
            GeometryError::InvalidProfile(format!("preset {name} needs parameter {key}"))
        })
    };
    match name {
        "euclidean" => Ok(RadialProfile::euclidean()),
        "hyperbolic_like" => Ok(RadialProfile::hyperbolic_like()),
        "capped_power" => RadialProfile::capped_power(get("beta", None)?),
        "gaussian_density" => Ok(RadialProfile::gaussian_density()),
        "power_density" => Ok(RadialProfile::power_density(get("q", None)?)),
        "const" => Ok(RadialProfile::constant(get("value", Some(1.0))?)),
        "gaussian_bump" => Ok(RadialProfile::gaussian_bump(
            get("base", Some(1.0))?,
            get("amp", Some(0.5))?,
            get("width", Some(0.5))?,
        )),
        "spline" => match file {
            Some(path) => RadialProfile::spline_from_csv(path),
            None => Err(GeometryError::InvalidProfile(
                "spline preset needs a file".into(),
            )),
        },
        other => Err(GeometryError::InvalidProfile(format!(
            "unknown profile preset {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinh_preset_matches_std() {
        let p = RadialProfile::hyperbolic_like();
        for &r in &[0.0, 0.3, 1.0, 4.0] {
            let j = p.jet(r);
            assert!((j.v - f64::sinh(r)).abs() < 1e-12 * (1.0 + r.sinh()));
            assert!((j.d1 - f64::cosh(r)).abs() < 1e-12 * r.cosh());
            assert!((j.d2 - f64::sinh(r)).abs() < 1e-12 * r.cosh());
            assert!((j.d3 - f64::cosh(r)).abs() < 1e-12 * r.cosh());
        }
    }

    #[test]
    fn capped_power_is_smooth_at_pole() {
        let p = RadialProfile::capped_power(0.5).unwrap();
        let j = p.jet(0.0);
        assert_eq!(j.v, 0.0);
        assert!((j.d1 - 1.0).abs() < 1e-15);
        assert!(j.d2.abs() < 1e-15);
        // phi'''(0) = 6 * (beta - 1)/2 = 3 (beta - 1)
        assert!((j.d3 + 1.5).abs() < 1e-12);
        assert!(RadialProfile::capped_power(1.5).is_err());
    }

    #[test]
    fn value_d1_matches_jet_for_polynomials() {
        let p = RadialProfile::polynomial(vec![0.0, 1.0, 0.0, -1.0 / 6.0]);
        let (v, d) = p.value_d1(0.8);
        let j = p.jet(0.8);
        assert!((v - j.v).abs() < 1e-15 && (d - j.d1).abs() < 1e-15);
    }

    #[test]
    fn spline_reproduces_cubic_interior() {
        let knots: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = knots.iter().map(|r| r.sin()).collect();
        let p = RadialProfile::spline(knots, values).unwrap();
        assert!(p.is_lower_trust());
        assert!((p.value(1.0) - 1f64.sin()).abs() < 1e-5);
        assert!((p.jet(1.0).d1 - 1f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn unknown_preset_is_rejected() {
        let err = preset("nope", &BTreeMap::new(), None).unwrap_err();
        assert!(matches!(err, GeometryError::InvalidProfile(_)));
        assert!(preset("power_density", &BTreeMap::new(), None).is_err());
    }
}

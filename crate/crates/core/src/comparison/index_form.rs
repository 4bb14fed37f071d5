//! Second-variation audit: for fields `Z = ζ(t) e` in the parallel frame
//! with `ζ(r) = 0`,
//! `D²u(Z(0), Z(0)) + ∫_0^r |Z'|² - <S Z, Z> dt`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ComparisonError, JacobiState};

/// Radial profile `ζ(τ)`, `τ = t/r`, vanishing at `τ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Taper {
    Linear,
    HalfCosine,
    Quadratic,
    /// `(1 - τ) Σ c_k τ^k`.
    Polynomial { coeffs: Vec<f64> },
}

impl Taper {
    /// `(ζ(τ), dζ/dτ)`.
    pub fn eval(&self, tau: f64) -> (f64, f64) {
        use std::f64::consts::FRAC_PI_2;
        match self {
            Taper::Linear => (1.0 - tau, -1.0),
            Taper::HalfCosine => ((FRAC_PI_2 * tau).cos(), -FRAC_PI_2 * (FRAC_PI_2 * tau).sin()),
            Taper::Quadratic => ((1.0 - tau) * (1.0 - tau), -2.0 * (1.0 - tau)),
            Taper::Polynomial { coeffs } => {
                let mut p = 0.0;
                let mut dp = 0.0;
                for c in coeffs.iter().rev() {
                    dp = dp * tau + p;
                    p = p * tau + c;
                }
                ((1.0 - tau) * p, -p + (1.0 - tau) * dp)
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Taper::Linear => "linear",
            Taper::HalfCosine => "half-cosine",
            Taper::Quadratic => "quadratic",
            Taper::Polynomial { .. } => "polynomial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZField {
    pub taper: Taper,
    /// Constant coefficients in the parallel frame (radial first).
    pub direction: Vec<f64>,
}

impl ZField {
    pub fn label(&self) -> String {
        let dir: Vec<String> = self.direction.iter().map(|d| format!("{d:.3}")).collect();
        format!("{}[{}]", self.taper.name(), dir.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZFamily {
    pub fields: Vec<ZField>,
    pub seed: u64,
}

/// Number of seeded random polynomial tapers in [`ZFamily::standard`].
const RANDOM_TAPERS: usize = 5;

impl ZFamily {
    /// Linear, half-cosine and quadratic tapers along every frame
    /// direction, plus five random cubic-times-linear tapers along random
    /// unit directions drawn from `seed`.
    pub fn standard(m: usize, seed: u64) -> Self {
        let mut fields = Vec::new();
        for taper in [Taper::Linear, Taper::HalfCosine, Taper::Quadratic] {
            for i in 0..m {
                let mut direction = vec![0.0; m];
                direction[i] = 1.0;
                fields.push(ZField {
                    taper: taper.clone(),
                    direction,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RANDOM_TAPERS {
            let mut coeffs = vec![1.0 + rng.random_range(-0.5..0.5)];
            coeffs.extend((0..3).map(|_| rng.random_range(-1.0..1.0)));
            let mut direction: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
            direction.iter_mut().for_each(|d| *d /= norm);
            fields.push(ZField {
                taper: Taper::Polynomial { coeffs },
                direction,
            });
        }
        Self { fields, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFormReport {
    pub r: f64,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub min_value: f64,
    pub argmin: Option<usize>,
}

/// Composite Simpson on a uniform grid, closing an odd panel count with the
/// 3/8 rule.
fn simpson(vals: &[f64], h: f64) -> f64 {
    let n = vals.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (vals[0] + vals[1]),
        2 => h / 3.0 * (vals[0] + 4.0 * vals[1] + vals[2]),
        _ => {
            let even = if n % 2 == 0 { n } else { n - 3 };
            let mut acc = vals[0] + vals[even];
            for (i, v) in vals.iter().enumerate().take(even).skip(1) {
                acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = h / 3.0 * acc;
            if even < n {
                let v = &vals[even..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

/// Evaluates the index form of every family member along the propagated
/// geodesic, with `D²u` read from `P'(0)` and `S` from the states.
pub fn index_form_check(
    states: &[JacobiState],
    family: &ZFamily,
) -> Result<IndexFormReport, ComparisonError> {
    let first = states
        .first()
        .ok_or_else(|| ComparisonError::InvalidInput("empty state list".into()))?;
    let m = first.p.nrows();
    let r = states.last().map_or(0.0, |s| s.t);
    let h = if states.len() > 1 { r / (states.len() - 1) as f64 } else { 0.0 };
    let hess = &first.pdot;
    let mut labels = Vec::with_capacity(family.fields.len());
    let mut values = Vec::with_capacity(family.fields.len());
    let mut integrand = vec![0.0; states.len()];
    for z in &family.fields {
        if z.direction.len() != m {
            return Err(ComparisonError::InvalidInput(format!(
                "field direction has {} components, frame has {m}",
                z.direction.len()
            )));
        }
        let e = nalgebra::DVector::from_column_slice(&z.direction);
        let e2 = e.norm_squared();
        let (z0, _) = z.taper.eval(0.0);
        let boundary = z0 * z0 * e.dot(&(hess * &e));
        let value = if r > 0.0 {
            for (k, st) in states.iter().enumerate() {
                let (zeta, dzeta) = z.taper.eval(st.t / r);
                let curv = e.dot(&(&st.s * &e));
                integrand[k] = dzeta * dzeta / (r * r) * e2 - zeta * zeta * curv;
            }
            boundary + simpson(&integrand, h)
        } else {
            boundary
        };
        labels.push(z.label());
        values.push(value);
    }
    let (argmin, min_value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((None, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (Some(i), v) } else { (bi, bv) });
    Ok(IndexFormReport {
        r,
        labels,
        values,
        min_value,
        argmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::jacobi_propagate;
    use crate::geometry::RotSymSpace;

    fn flat_states(d2u: (f64, f64), r: f64) -> Vec<JacobiState> {
        let s = RotSymSpace::euclidean(2, 1.0, 10.0).unwrap();
        jacobi_propagate(&s, 0.5, 0.5, d2u, r, 1e-3).unwrap()
    }

    fn single(taper: Taper, direction: Vec<f64>) -> ZFamily {
        ZFamily {
            fields: vec![ZField { taper, direction }],
            seed: 0,
        }
    }

    #[test]
    fn linear_taper_flat() {
        let r = 2.0;
        let rep = index_form_check(&flat_states((1.0, 1.0), r), &single(Taper::Linear, vec![0.0, 1.0])).unwrap();
        assert!((rep.min_value - (1.0 + 1.0 / r)).abs() < 1e-12);
        let rep = index_form_check(&flat_states((0.0, 0.0), r), &single(Taper::Linear, vec![0.0, 1.0])).unwrap();
        assert!((rep.min_value - 1.0 / r).abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_index() {
        let zero = single(Taper::Polynomial { coeffs: vec![] }, vec![0.0, 1.0]);
        let rep = index_form_check(&flat_states((1.0, 1.0), 1.0), &zero).unwrap();
        assert_eq!(rep.min_value, 0.0);
    }

    #[test]
    fn half_cosine_energy() {
        // ∫_0^r (π/(2r))² sin²(πt/(2r)) dt = π²/(8r)
        let r = 1.5;
        let rep = index_form_check(&flat_states((0.0, 0.0), r), &single(Taper::HalfCosine, vec![1.0, 0.0])).unwrap();
        let expect = std::f64::consts::PI.powi(2) / (8.0 * r);
        assert!((rep.min_value - expect).abs() < 1e-10);
    }

    #[test]
    fn polynomial_taper_derivative() {
        let t = Taper::Polynomial {
            coeffs: vec![1.0, 2.0, -1.0],
        };
        let h = 1e-6;
        for tau in [0.0, 0.3, 0.9] {
            let fd = (t.eval(tau + h).0 - t.eval(tau - h).0) / (2.0 * h);
            assert!((fd - t.eval(tau).1).abs() < 1e-8);
        }
        assert_eq!(t.eval(1.0).0, 0.0);
    }

    #[test]
    fn standard_family_is_reproducible() {
        let a = ZFamily::standard(3, 11);
        let b = ZFamily::standard(3, 11);
        assert_eq!(a, b);
        assert_eq!(a.fields.len(), 3 * 3 + RANDOM_TAPERS);
        assert_ne!(a, ZFamily::standard(3, 12));
    }

    #[test]
    fn simpson_odd_and_even_panels() {
        for n in [1usize, 2, 3, 4, 5, 7, 10] {
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(2)).collect();
            let exact = 1.0 / 3.0;
            let tol = if n == 1 { 0.2 } else { 1e-14 };
            assert!((simpson(&vals, h) - exact).abs() < tol, "n = {n}");
        }
    }
}

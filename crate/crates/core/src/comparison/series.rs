use serde::{Deserialize, Serialize};

use super::ComparisonError;
use crate::curvature::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    /// `normalized` must be nonincreasing.
    Monotone,
    /// `values` must stay below `bound`.
    Bounded,
}

/// A radius- or time-indexed audit series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSeries {
    pub label: String,
    pub kind: SeriesKind,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub normalized: Vec<f64>,
    pub bound: Option<Vec<f64>>,
    pub tolerance: f64,
    pub monotone_violation: Option<Violation>,
}

impl ComparisonSeries {
    /// Monotone-nonincreasing audit of `normalized`, with per-step slack
    /// `rel_tol * max(|n_i|, |n_{i+1}|)`. The first offending step is
    /// recorded.
    pub fn monotone(
        label: impl Into<String>,
        radii: Vec<f64>,
        values: Vec<f64>,
        normalized: Vec<f64>,
        rel_tol: f64,
    ) -> Self {
        let mut violation = None;
        for i in 1..normalized.len() {
            let (a, b) = (normalized[i - 1], normalized[i]);
            let scale = a.abs().max(b.abs());
            let rise = b - a;
            if rise > rel_tol * scale || !rise.is_finite() {
                violation = Some(Violation {
                    index: i,
                    t: radii[i],
                    magnitude: rise,
                });
                break;
            }
        }
        Self {
            label: label.into(),
            kind: SeriesKind::Monotone,
            radii,
            values,
            normalized,
            bound: None,
            tolerance: rel_tol,
            monotone_violation: violation,
        }
    }

    /// Audit of `values <= bound + abs_tol`; `normalized` holds the slack
    /// `bound - values`. The worst excess is recorded.
    pub fn bounded(
        label: impl Into<String>,
        radii: Vec<f64>,
        values: Vec<f64>,
        bound: Vec<f64>,
        abs_tol: f64,
    ) -> Self {
        let normalized: Vec<f64> = values.iter().zip(&bound).map(|(v, b)| b - v).collect();
        let mut violation: Option<Violation> = None;
        for (i, slack) in normalized.iter().enumerate() {
            let excess = -slack;
            if excess > abs_tol || !excess.is_finite() {
                if violation.is_none_or(|v| excess > v.magnitude) {
                    violation = Some(Violation {
                        index: i,
                        t: radii[i],
                        magnitude: excess,
                    });
                }
            }
        }
        Self {
            label: label.into(),
            kind: SeriesKind::Bounded,
            radii,
            values,
            normalized,
            bound: Some(bound),
            tolerance: abs_tol,
            monotone_violation: violation,
        }
    }

    /// The same series audited again with a different tolerance.
    pub fn with_tolerance(&self, tol: f64) -> Self {
        match self.kind {
            SeriesKind::Monotone => Self::monotone(
                self.label.clone(),
                self.radii.clone(),
                self.values.clone(),
                self.normalized.clone(),
                tol,
            ),
            SeriesKind::Bounded => Self::bounded(
                self.label.clone(),
                self.radii.clone(),
                self.values.clone(),
                self.bound.clone().unwrap_or_else(|| vec![f64::INFINITY; self.values.len()]),
                tol,
            ),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.monotone_violation.is_none()
    }

    /// Smallest slack of a bounded series.
    pub fn min_slack(&self) -> f64 {
        self.normalized.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Turns a violation into a hard failure when the curvature hypothesis
    /// is certified; otherwise violations stay as data.
    pub fn require_clean(self, verdict: Verdict) -> Result<Self, ComparisonError> {
        match self.monotone_violation {
            Some(v) if verdict.is_certified() => Err(ComparisonError::Violation {
                label: self.label.clone(),
                index: v.index,
                t: v.t,
                magnitude: v.magnitude,
            }),
            _ => Ok(self),
        }
    }

    /// CSV with columns `t,value,normalized` and `bound` when present.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(match self.bound {
            Some(_) => "t,value,bound,slack\n",
            None => "t,value,normalized\n",
        });
        for i in 0..self.radii.len() {
            match &self.bound {
                Some(b) => out.push_str(&format!(
                    "{:e},{:e},{:e},{:e}\n",
                    self.radii[i], self.values[i], b[i], self.normalized[i]
                )),
                None => out.push_str(&format!(
                    "{:e},{:e},{:e}\n",
                    self.radii[i], self.values[i], self.normalized[i]
                )),
            }
        }
        out
    }

    /// Keeps every `stride`-th sample plus the last one (and the violation
    /// sample, if any) for compact reports.
    pub fn thinned(&self, max_len: usize) -> Self {
        let n = self.radii.len();
        if n <= max_len || max_len < 2 {
            return self.clone();
        }
        let stride = n.div_ceil(max_len);
        let mut keep: Vec<usize> = (0..n).step_by(stride).collect();
        if keep.last() != Some(&(n - 1)) {
            keep.push(n - 1);
        }
        if let Some(v) = self.monotone_violation {
            if let Err(pos) = keep.binary_search(&v.index) {
                keep.insert(pos, v.index);
            }
        }
        let pick = |xs: &Vec<f64>| keep.iter().map(|&i| xs[i]).collect::<Vec<_>>();
        Self {
            label: self.label.clone(),
            kind: self.kind,
            radii: pick(&self.radii),
            values: pick(&self.values),
            normalized: pick(&self.normalized),
            bound: self.bound.as_ref().map(pick),
            tolerance: self.tolerance,
            monotone_violation: self.monotone_violation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_detects_first_rise() {
        let s = ComparisonSeries::monotone(
            "x",
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.0; 4],
            vec![3.0, 2.0, 2.5, 1.0],
            1e-9,
        );
        let v = s.monotone_violation.unwrap();
        assert_eq!(v.index, 2);
        assert!((v.magnitude - 0.5).abs() < 1e-15);
    }

    #[test]
    fn monotone_slack_is_relative() {
        let s = ComparisonSeries::monotone(
            "x",
            vec![1.0, 2.0],
            vec![0.0; 2],
            vec![1e6, 1e6 + 1e-4],
            1e-9,
        );
        assert!(s.is_clean());
    }

    #[test]
    fn bounded_records_worst_excess() {
        let s = ComparisonSeries::bounded(
            "b",
            vec![0.0, 1.0, 2.0],
            vec![1.0, 3.0, 2.5],
            vec![2.0, 2.0, 2.0],
            1e-7,
        );
        let v = s.monotone_violation.unwrap();
        assert_eq!(v.index, 1);
        assert_eq!(s.min_slack(), -1.0);
        assert!(s.clone().require_clean(Verdict::Violated).is_ok());
        assert!(s.require_clean(Verdict::CertifiedNonnegative).is_err());
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let n = 1001;
        let radii: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s = ComparisonSeries::monotone("x", radii.clone(), radii.clone(), vec![0.0; n], 1e-9);
        let t = s.thinned(100);
        assert!(t.radii.len() <= 102);
        assert_eq!(t.radii[0], 0.0);
        assert_eq!(*t.radii.last().unwrap(), 1000.0);
    }
}

//! Parameter search over capped-power warps and power densities for spaces
//! that are CD-certified and have positive asymptotic volume ratio.
//!
//! The search reports what it found; an empty set of positive-AVR rows is a
//! legitimate outcome.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use densitylab::comparison::avr_estimate;
use densitylab::curvature::CD_TOL;
use densitylab::geometry::preset;
use densitylab::{GridSpec, RotSymSpace};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::kv::KvFile;
use crate::CliError;

const WARPS: [&str; 2] = ["euclidean", "capped_power"];
const DENSITIES: [&str; 3] = ["const", "power_density", "gaussian_density"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Family {
    pub m: usize,
    pub r_max: f64,
    pub warps: Vec<String>,
    pub betas: Vec<f64>,
    pub densities: Vec<String>,
    pub qs: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Picks the subset evaluated when the budget is below the family size.
    pub seed: u64,
    pub cd_grid: GridSpec,
}

impl Family {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut kv = KvFile::parse(text)?;
        let lines = kv.lines();
        let err = |key: &str, message: String| CliError::Config {
            line: lines.get(key).copied(),
            field: Some(key.to_string()),
            message,
        };
        let m: usize = kv.take("m")?.ok_or_else(|| err("m", "required".into()))?;
        let family = Family {
            m,
            r_max: kv.take_or("r_max", 1000.0)?,
            warps: kv.take_list("warp")?.unwrap_or_else(|| vec!["capped_power".into()]),
            betas: kv.take_list("beta")?.unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]),
            densities: kv.take_list("density")?.unwrap_or_else(|| vec!["power_density".into()]),
            qs: kv.take_list("q")?.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]),
            alphas: kv.take_list("alpha")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
            seed: kv.take_or("seed", 0)?,
            cd_grid: GridSpec {
                points: kv.take_or("grid.cd.points", 256)?,
                lo_fraction: kv.take_or("grid.cd.lo_fraction", 1e-3)?,
                refine_points: kv.take_or("grid.cd.refine_points", 32)?,
            },
        };
        kv.finish()?;
        if family.m < 2 {
            return Err(err("m", format!("must be at least 2, got {}", family.m)));
        }
        if !(family.r_max > 0.0 && family.r_max.is_finite()) {
            return Err(err("r_max", "must be positive".into()));
        }
        if let Some(w) = family.warps.iter().find(|w| !WARPS.contains(&w.as_str())) {
            return Err(err("warp", format!("{w:?} is not one of {WARPS:?}")));
        }
        if let Some(d) = family.densities.iter().find(|d| !DENSITIES.contains(&d.as_str())) {
            return Err(err("density", format!("{d:?} is not one of {DENSITIES:?}")));
        }
        if let Some(b) = family.betas.iter().find(|&&b| !(b > 0.0 && b <= 1.0)) {
            return Err(err("beta", format!("{b} is outside (0, 1]")));
        }
        if let Some(a) = family.alphas.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
            return Err(err("alpha", format!("{a} is not positive")));
        }
        if family.qs.iter().any(|q| !q.is_finite()) {
            return Err(err("q", "must be finite".into()));
        }
        if family.cd_grid.points < 2 {
            return Err(err("grid.cd.points", "must be at least 2".into()));
        }
        Ok(family)
    }

    /// Every distinct candidate in a fixed order. Parameters that a preset
    /// ignores are not multiplied out.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for warp in &self.warps {
            let betas: Vec<Option<f64>> = if warp == "capped_power" {
                self.betas.iter().map(|&b| Some(b)).collect()
            } else {
                vec![None]
            };
            for beta in betas {
                for density in &self.densities {
                    let qs: Vec<Option<f64>> = if density == "power_density" {
                        self.qs.iter().map(|&q| Some(q)).collect()
                    } else {
                        vec![None]
                    };
                    for q in qs {
                        for &alpha in &self.alphas {
                            let c = Candidate {
                                warp: warp.clone(),
                                beta,
                                density: density.clone(),
                                q,
                                alpha,
                            };
                            if !out.contains(&c) {
                                out.push(c);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub warp: String,
    pub beta: Option<f64>,
    pub density: String,
    pub q: Option<f64>,
    pub alpha: f64,
}

impl Candidate {
    fn build(&self, m: usize, r_max: f64) -> Result<RotSymSpace, CliError> {
        let mut wp = BTreeMap::new();
        if let Some(b) = self.beta {
            wp.insert("beta".to_string(), b);
        }
        let mut dp = BTreeMap::new();
        if let Some(q) = self.q {
            dp.insert("q".to_string(), q);
        }
        let warp = preset(&self.warp, &wp, None)?;
        let density = preset(&self.density, &dp, None)?;
        Ok(RotSymSpace::new(m, self.alpha, warp, density, r_max)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    #[serde(flatten)]
    pub candidate: Candidate,
    /// Smallest Bakry–Émery eigenvalue on the scan grid.
    pub cd_margin: f64,
    pub cd_verdict: String,
    /// Radius the scan reached; below `r_max` when the density underflows.
    pub cd_r_max: f64,
    pub avr: Option<f64>,
    pub avr_error: Option<f64>,
    pub avr_settled: Option<bool>,
    pub excluded: bool,
    pub reason: Option<String>,
}

impl Row {
    /// Certified, settled, and with an error bar that excludes zero.
    pub fn has_positive_avr(&self) -> bool {
        !self.excluded
            && self.avr_settled == Some(true)
            && matches!((self.avr, self.avr_error), (Some(v), Some(e)) if v - e > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExploreTable {
    pub family: Family,
    pub budget: usize,
    pub family_size: usize,
    pub cd_tolerance: f64,
    pub rows: Vec<Row>,
    /// Rows for which [`Row::has_positive_avr`] holds.
    pub positive_avr_rows: usize,
    pub summary: String,
}

/// Largest radius `<= r_max` (by halving) at which the space can be built.
fn build_shrinking(c: &Candidate, m: usize, r_max: f64) -> Result<(RotSymSpace, f64), CliError> {
    let mut r = r_max;
    loop {
        match c.build(m, r) {
            Ok(s) => return Ok((s, r)),
            Err(e) if r < 1e-3 * r_max => return Err(e),
            Err(_) => r *= 0.5,
        }
    }
}

fn evaluate(c: &Candidate, family: &Family) -> Row {
    let mut row = Row {
        candidate: c.clone(),
        cd_margin: f64::NAN,
        cd_verdict: String::new(),
        cd_r_max: family.r_max,
        avr: None,
        avr_error: None,
        avr_settled: None,
        excluded: true,
        reason: None,
    };
    let (space, reach) = match build_shrinking(c, family.m, family.r_max) {
        Ok(v) => v,
        Err(e) => {
            row.reason = Some(e.to_string());
            return row;
        }
    };
    row.cd_r_max = reach;
    let cd = match space.cd_scan(&family.cd_grid) {
        Ok(cd) => cd,
        Err(e) => {
            row.reason = Some(e.to_string());
            return row;
        }
    };
    row.cd_margin = cd.min_eig;
    row.cd_verdict = cd.verdict.as_str().to_string();
    if !cd.verdict.is_certified() {
        row.reason = Some(format!("CD margin {:e} < 0 at r = {:e}", cd.min_eig, cd.argmin_r));
        return row;
    }
    if reach < family.r_max {
        row.reason = Some(format!("space only constructible up to r = {reach}"));
        return row;
    }
    row.excluded = false;
    match avr_estimate(&space, c.alpha) {
        Ok(avr) => {
            row.avr = Some(avr.estimate);
            row.avr_error = Some(avr.extrapolation_error);
            row.avr_settled = Some(avr.settled);
        }
        Err(e) => row.reason = Some(format!("AVR estimate failed: {e}")),
    }
    row
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Evaluates up to `budget` candidates and ranks them by CD margin, then by
/// AVR estimate. Excluded rows follow the admissible ones.
pub fn explore(family: &Family, budget: usize) -> Result<ExploreTable, CliError> {
    if budget == 0 {
        return Err(CliError::field("budget", "must be at least 1".into()));
    }
    let mut candidates = family.candidates();
    let family_size = candidates.len();
    if budget < candidates.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
        candidates.shuffle(&mut rng);
        candidates.truncate(budget);
    }
    let mut rows: Vec<Row> = candidates.iter().map(|c| evaluate(c, family)).collect();
    rows.sort_by(|a, b| {
        a.excluded
            .cmp(&b.excluded)
            .then_with(|| desc(a.cd_margin, b.cd_margin))
            .then_with(|| desc(a.avr.unwrap_or(f64::NAN), b.avr.unwrap_or(f64::NAN)))
    });
    let positive_avr_rows = rows
        .iter()
        .filter(|r| r.has_positive_avr())
        .count();
    let admissible = rows.iter().filter(|r| !r.excluded).count();
    let best_avr = rows
        .iter()
        .filter(|r| !r.excluded)
        .filter_map(|r| r.avr)
        .fold(f64::NEG_INFINITY, f64::max);
    let summary = if admissible == 0 {
        format!("{} of {family_size} candidates evaluated; none CD-certified", rows.len())
    } else {
        format!(
            "{} of {family_size} candidates evaluated; {admissible} CD-certified; \
             {positive_avr_rows} with AVR bounded away from zero; largest AVR estimate found {best_avr:e}",
            rows.len()
        )
    };
    Ok(ExploreTable {
        family: family.clone(),
        budget,
        family_size,
        cd_tolerance: CD_TOL,
        rows,
        positive_avr_rows,
        summary,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl ExploreTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "warp,beta,density,q,alpha,cd_margin,cd_verdict,cd_r_max,avr,avr_error,avr_settled,excluded\n",
        );
        for r in &self.rows {
            let c = &r.candidate;
            let _ = writeln!(
                out,
                "{},{},{},{},{:e},{:e},{},{:e},{},{},{},{}",
                c.warp,
                opt(c.beta),
                c.density,
                opt(c.q),
                c.alpha,
                r.cd_margin,
                r.cd_verdict,
                r.cd_r_max,
                opt(r.avr),
                opt(r.avr_error),
                r.avr_settled.map(|b| b.to_string()).unwrap_or_default(),
                r.excluded
            );
        }
        out
    }

    /// Fixed-width table for the terminal.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:<17} {:>6} {:>6} {:>12} {:>12} {:>10}  {}",
            "warp", "beta", "density", "q", "alpha", "cd_margin", "avr", "avr_err", "status"
        );
        for r in &self.rows {
            let c = &r.candidate;
            let num = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
            let status = if r.excluded {
                format!("excluded: {}", r.reason.as_deref().unwrap_or(""))
            } else if r.avr_settled == Some(false) {
                "unsettled".to_string()
            } else {
                "ok".to_string()
            };
            let _ = writeln!(
                out,
                "{:<14} {:>6} {:<17} {:>6} {:>6.3} {:>12.3e} {:>12} {:>10}  {}",
                c.warp,
                num(c.beta),
                c.density,
                num(c.q),
                c.alpha,
                r.cd_margin,
                r.avr.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into()),
                r.avr_error.map(|x| format!("{x:.1e}")).unwrap_or_else(|| "-".into()),
                status
            );
        }
        let _ = writeln!(out, "{}", self.summary);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_skip_unused_parameters() {
        let f = Family::parse(
            "m = 2\nwarp = euclidean, capped_power\nbeta = 0.5, 1\ndensity = const, power_density\nq = 0, 1\nalpha = 1\n",
        )
        .unwrap();
        // euclidean x (const + 2 q) + 2 beta x (const + 2 q)
        assert_eq!(f.candidates().len(), 3 + 2 * 3);
    }

    #[test]
    fn family_diagnostics() {
        let err = Family::parse("m = 2\nbeta = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("line 2") && err.to_string().contains("beta"), "{err}");
        let err = Family::parse("m = 2\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("foo"));
    }
}

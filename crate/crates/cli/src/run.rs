//! Executes the checks of a scenario and gates their verdicts on the
//! curvature hypothesis.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use densitylab::abp::{
    inclusion_audit, isoperimetric_check, normalize_f, sobolev_audit, solve_neumann_radial_with,
    transport_with, verify_lemma1, AuditVerdict, Normalization, SampleSpec, TransportSpec, AR_TOL,
    BOUNDARY_TOL, JACOBIAN_TOL, RESIDUAL_TOL, SOBOLEV_TOL,
};
use densitylab::comparison::{
    avr_estimate, bishop_gromov, conjugate_scan, index_form_check, jacobi_integrate,
    mean_curvature_comparison, riccati_check, AvrEstimate, BallOrSphere, ZFamily, AVR_LEVELS,
    AVR_SETTLE_TOL, BOUND_TOL, MONOTONE_REL_TOL,
};
use densitylab::curvature::CD_TOL;
use densitylab::quadrature::QuadTolerance;
use densitylab::{
    AbpError, BallDomain, CdReport, ComparisonError, ComparisonSeries, GridSpec, NeumannSolution,
    RadialProfile, RotSymSpace,
};
use serde_json::{json, Value};

use crate::explore::{explore, Family};
use crate::report::{
    columns_csv, write_outputs, CheckRecord, Hypothesis, Report, SeriesFile, Status, ViolationRecord,
};
use crate::scenario::{Check, Scenario};
use crate::svg::{Line, Plot};
use crate::{CliError, EXIT_ERROR, EXIT_OK, EXIT_VIOLATION};

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub series: Vec<SeriesFile>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

struct Solved {
    nz: Normalization,
    sol: NeumannSolution,
}

struct Ctx<'a> {
    sc: &'a Scenario,
    space: RotSymSpace,
    k: BallDomain,
    f0: RadialProfile,
    cd: CdReport,
    certified: bool,
    scale: f64,
    neumann: Option<Result<Solved, String>>,
    avr: Option<Result<AvrEstimate, String>>,
    series: Vec<SeriesFile>,
}

/// What a check asserts under the curvature hypothesis, if anything.
fn gated(check: Check) -> Option<&'static str> {
    match check {
        Check::BishopGromov => Some("monotonicity"),
        Check::MeanCurvature => Some("the mean-curvature bound"),
        Check::Lemma1 | Check::Sobolev | Check::Isoperimetric => Some("the inequality"),
        Check::Transport => Some("the comparison bounds"),
        Check::Inclusion => Some("inclusion"),
        Check::CdScan | Check::Avr | Check::Neumann | Check::Riccati | Check::Explore => None,
    }
}

fn quad_json() -> Value {
    let q = QuadTolerance::default();
    json!({"rule": "adaptive Gauss-Kronrod 7-15", "abs": q.abs, "rel": q.rel})
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| if i + 1 == n { hi } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() })
        .collect()
}

impl<'a> Ctx<'a> {
    fn hypothesis_note(&self, what: &str) -> String {
        format!("hypothesis violated, {what} not required (CD scan: {})", self.cd.verdict.as_str())
    }

    /// Records a failed comparison. On a certified space this is a
    /// violation; otherwise it is data.
    fn gate(&self, rec: &mut CheckRecord, series: &ComparisonSeries, what: &str) {
        let Some(v) = series.monotone_violation else {
            return;
        };
        rec.violations.push(ViolationRecord {
            series: series.label.clone(),
            index: v.index,
            t: v.t,
            magnitude: v.magnitude,
            tolerance: series.tolerance,
        });
        self.gate_flag(rec, what);
    }

    fn gate_flag(&self, rec: &mut CheckRecord, what: &str) {
        if self.certified {
            rec.raise(Status::Violation);
        } else {
            rec.raise(Status::HypothesisViolated);
            rec.note(self.hypothesis_note(what));
        }
    }

    fn push_series(&mut self, rec: &mut CheckRecord, file: SeriesFile) {
        rec.series.push(file.stem.clone());
        self.series.push(file);
    }

    fn neumann(&mut self) -> Result<&Solved, String> {
        if self.neumann.is_none() {
            let solved = normalize_f(&self.space, &self.k, &self.f0)
                .and_then(|nz| {
                    solve_neumann_radial_with(&self.space, &self.k, &nz.f, self.sc.grids.neumann_cells, nz.lambda)
                        .map(|sol| Solved { nz, sol })
                })
                .map_err(|e| format!("Neumann solve failed: {e}"));
            self.neumann = Some(solved);
        }
        self.neumann.as_ref().expect("set above").as_ref().map_err(Clone::clone)
    }

    fn avr(&mut self) -> Result<AvrEstimate, String> {
        if self.avr.is_none() {
            self.avr = Some(
                avr_estimate(&self.space, self.space.alpha).map_err(|e| format!("AVR estimate failed: {e}")),
            );
        }
        self.avr.clone().expect("set above")
    }

    fn sample_spec(&self) -> SampleSpec {
        SampleSpec {
            radial: self.sc.grids.ar_radial,
            angular: self.sc.grids.ar_angular,
            refine_rounds: self.sc.grids.ar_refine_rounds,
        }
    }

    fn run(&mut self, check: Check) -> CheckRecord {
        let name = check.name();
        let result = match check {
            Check::CdScan => Ok(self.cd_scan()),
            Check::BishopGromov => self.bishop_gromov(),
            Check::MeanCurvature => self.mean_curvature(),
            Check::Avr => self.avr_check(),
            Check::Neumann => self.neumann_check(),
            Check::Lemma1 => self.lemma1(),
            Check::Transport => self.transport(),
            Check::Inclusion => self.inclusion(),
            Check::Riccati => self.riccati(),
            Check::Sobolev => self.sobolev(false),
            Check::Isoperimetric => self.sobolev(true),
            Check::Explore => self.explore(),
        };
        let mut rec = result.unwrap_or_else(|msg| CheckRecord::error(name, msg));
        if let Some(what) = gated(check) {
            if !self.certified && rec.status != Status::Error {
                rec.raise(Status::HypothesisViolated);
                rec.note(self.hypothesis_note(what));
                rec.hypothesis_violation = Some(json!({
                    "verdict": self.cd.verdict, "min_eigenvalue": self.cd.min_eig,
                    "argmin_r": self.cd.argmin_r, "zero_crossing": self.cd.zero_crossing,
                    "violations_found": rec.violations.len(),
                }));
            }
        }
        rec
    }

    fn cd_scan(&mut self) -> CheckRecord {
        let mut rec = CheckRecord::new("cd-scan");
        let cd = &self.cd;
        rec.tolerance = json!({"cd": CD_TOL});
        rec.grid = json!({
            "spacing": "log-uniform", "points": cd.grid_spec.points,
            "refine_points": cd.grid_spec.refine_points,
            "r_min": cd.grid.first(), "r_max": cd.grid.last(),
        });
        rec.result = json!({
            "verdict": cd.verdict, "min_eigenvalue": cd.min_eig, "argmin_r": cd.argmin_r,
            "zero_crossing": cd.zero_crossing,
        });
        rec.note(format!("Bakry-Emery tensor {}", cd.verdict.as_str()));
        let mut plot = Plot::new("Bakry-Emery eigenvalues", "r", true);
        plot.y_label = "eigenvalue".into();
        plot.lines.push(Line::solid("radial", &cd.grid, &cd.radial_eig));
        plot.lines.push(Line::solid("tangential", &cd.grid, &cd.tangential_eig));
        plot.markers.push((cd.argmin_r, cd.min_eig));
        let file = SeriesFile {
            stem: "cd_scan".into(),
            csv: cd.to_csv(),
            plot: Some(plot),
        };
        self.push_series(&mut rec, file);
        rec
    }

    fn bg_grid(&self) -> Vec<f64> {
        let g = &self.sc.grids;
        log_grid(g.bg_r_min, g.bg_r_max, g.bg_points)
    }

    fn bishop_gromov(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("bishop-gromov");
        let g = &self.sc.grids;
        let radii = self.bg_grid();
        let tol = MONOTONE_REL_TOL * self.scale;
        rec.tolerance = json!({"monotone_rel": tol, "quadrature": quad_json()});
        rec.grid = json!({"spacing": "log-uniform", "points": g.bg_points, "r_min": g.bg_r_min, "r_max": g.bg_r_max});
        let mut summary = serde_json::Map::new();
        for (mode, stem) in [(BallOrSphere::Ball, "bishop_gromov_ball"), (BallOrSphere::Sphere, "bishop_gromov_sphere")] {
            let series = bishop_gromov(&self.space, &radii, mode)
                .map_err(|e| format!("{stem}: {e}"))?
                .with_tolerance(tol);
            self.gate(&mut rec, &series, "monotonicity");
            summary.insert(
                stem.into(),
                json!({
                    "first": series.normalized.first(), "last": series.normalized.last(),
                    "monotone": series.is_clean(),
                }),
            );
            let file = SeriesFile::from_series(stem, &series, true);
            self.push_series(&mut rec, file);
        }
        rec.result = Value::Object(summary);
        Ok(rec)
    }

    fn mean_curvature(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("mean-curvature");
        let g = &self.sc.grids;
        let t = log_grid(g.bg_r_min, g.bg_r_max, g.mc_points);
        let tol = BOUND_TOL * self.scale;
        rec.tolerance = json!({"bound_abs": tol});
        rec.grid = json!({"spacing": "log-uniform", "points": g.mc_points, "t_min": g.bg_r_min, "t_max": g.bg_r_max});
        let audit = mean_curvature_comparison(&self.space, &t).map_err(|e| e.to_string())?;
        let comparison = audit.comparison.with_tolerance(tol);
        let differential = audit.differential.with_tolerance(tol);
        self.gate(&mut rec, &comparison, "the mean-curvature bound");
        self.gate(&mut rec, &differential, "the mean-curvature bound");
        rec.result = json!({
            "min_slack": comparison.min_slack(),
            "min_differential_slack": differential.min_slack(),
        });
        let a = SeriesFile::from_series("mean_curvature", &comparison, true);
        let b = SeriesFile::from_series("mean_curvature_differential", &differential, true);
        self.push_series(&mut rec, a);
        self.push_series(&mut rec, b);
        Ok(rec)
    }

    fn avr_check(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("avr");
        let avr = self.avr()?;
        rec.tolerance = json!({"settle_rel": AVR_SETTLE_TOL, "quadrature": quad_json()});
        rec.grid = json!({"spacing": "dyadic", "levels": AVR_LEVELS, "radii": avr.radii});
        rec.result = json!({
            "alpha": avr.alpha, "estimate": avr.estimate, "raw": avr.raw,
            "extrapolation_error": avr.extrapolation_error, "settled": avr.settled,
            "upper_bound": avr.upper_bound, "contraction": avr.contraction,
            "interval": [avr.estimate - avr.extrapolation_error, avr.estimate + avr.extrapolation_error],
        });
        if !avr.settled {
            rec.raise(Status::Inconclusive);
            rec.note("extrapolation not settled; only the upper bound is meaningful");
        }
        let mut plot = Plot::new("volume ratio at dyadic radii", "r", true);
        plot.y_label = "ratio".into();
        plot.lines.push(Line::solid("ratio", &avr.radii, &avr.series));
        let file = SeriesFile {
            stem: "avr".into(),
            csv: columns_csv(&["r", "ratio"], &[&avr.radii, &avr.series]),
            plot: Some(plot),
        };
        self.push_series(&mut rec, file);
        Ok(rec)
    }

    fn neumann_check(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("neumann");
        let tol = RESIDUAL_TOL * self.scale;
        let cells = self.sc.grids.neumann_cells;
        let space = self.space.clone();
        let solved = self.neumann()?;
        let sol = &solved.sol;
        let residual = sol.pde_residual(&space);
        let max_residual = residual.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let result = json!({
            "lambda": solved.nz.lambda, "boundary_defect": sol.boundary_defect,
            "max_pde_residual": max_residual, "u_set": sol.u_set,
            "u_at_boundary": sol.u.last(),
        });
        let csv = columns_csv(
            &["s", "u", "uprime", "usecond", "residual"],
            &[&sol.grid, &sol.u, &sol.uprime, &sol.usecond, &residual],
        );
        let mut plot = Plot::new("Neumann solution", "s", false);
        plot.y_label = "u, u'".into();
        plot.lines.push(Line::solid("u", &sol.grid, &sol.u));
        plot.lines.push(Line::solid("u'", &sol.grid, &sol.uprime));
        rec.tolerance = json!({"boundary": BOUNDARY_TOL, "pde_residual": tol, "quadrature": quad_json()});
        rec.grid = json!({"spacing": "uniform", "cells": cells, "radius": sol.radius});
        rec.result = result;
        if max_residual > tol {
            rec.raise(Status::Error);
            rec.note(format!("PDE residual {max_residual:e} exceeds {tol:e}"));
        }
        self.push_series(&mut rec, SeriesFile { stem: "neumann".into(), csv, plot: Some(plot) });
        Ok(rec)
    }

    fn lemma1(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("lemma1");
        let tol = RESIDUAL_TOL * self.scale;
        let space = self.space.clone();
        let certified = self.certified;
        let sol = &self.neumann()?.sol;
        rec.tolerance = json!({"abs": tol});
        rec.grid = json!({"spacing": "uniform", "cells": sol.grid.len() - 1, "second_derivative": "fourth-order finite differences"});
        let (max, at, extra) = match verify_lemma1(&space, sol) {
            Ok(r) => (r.max_value, r.argmax, json!({"samples": r.samples, "strictly_negative": r.strictly_negative})),
            Err(AbpError::Lemma1Violated { max, at }) => (max, at, Value::Null),
            Err(e) => return Err(e.to_string()),
        };
        rec.result = json!({"max_value": max, "argmax": at, "detail": extra});
        if max > tol {
            rec.violations.push(ViolationRecord {
                series: "lemma1".into(),
                index: 0,
                t: at,
                magnitude: max,
                tolerance: tol,
            });
            if certified {
                rec.raise(Status::Violation);
            } else {
                rec.raise(Status::HypothesisViolated);
                rec.note(self.hypothesis_note("the inequality"));
            }
        }
        Ok(rec)
    }

    fn transport_spec(&self) -> TransportSpec {
        TransportSpec {
            jacobi_step: self.sc.grids.jacobi_step,
            sample: self.sample_spec(),
        }
    }

    fn transport(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("transport");
        let g = self.sc.grids.clone();
        let spec = self.transport_spec();
        let tol = BOUND_TOL * self.scale;
        let mono_tol = MONOTONE_REL_TOL * self.scale;
        let index_tol = g.index_tol * self.scale;
        let space = self.space.clone();
        self.neumann()?;
        let sol = &self.neumann.as_ref().expect("solved").as_ref().expect("ok").sol;
        let family = ZFamily::standard(space.m, self.sc.seed);
        rec.tolerance = json!({
            "ar": AR_TOL, "jacobian_rel": JACOBIAN_TOL * self.scale,
            "monotone_rel": mono_tol, "bound_abs": tol, "index_form": index_tol,
        });
        rec.grid = json!({
            "bases": g.transport_bases, "r": g.transport_r, "jacobi_step": g.jacobi_step,
            "ar_sample": spec.sample, "index_fields": family.fields.len(), "seed": self.sc.seed,
        });
        let mut entries = Vec::new();
        let mut files = Vec::new();
        let mut flags: Vec<(Option<ComparisonSeries>, &str)> = Vec::new();
        for (i, &b) in g.transport_bases.iter().enumerate() {
            let audit = match transport_with(&space, sol, b, g.transport_r, &spec) {
                Ok(a) => a,
                Err(AbpError::ConjugateAtArPoint { s, t }) => {
                    entries.push(json!({"base": s, "conjugate_at_ar_point": t}));
                    rec.violations.push(ViolationRecord {
                        series: format!("transport_{i}_conjugate"),
                        index: 0,
                        t,
                        magnitude: 0.0,
                        tolerance: 0.0,
                    });
                    flags.push((None, "the absence of conjugate points"));
                    continue;
                }
                Err(e) => return Err(format!("transport from s = {b}: {e}")),
            };
            let mono = audit.monotonicity.with_tolerance(mono_tol);
            let trace = audit.trace_bound.with_tolerance(tol);
            let jac_ok = audit.in_ar.then(|| {
                audit.weighted_jacobian <= audit.jacobian_bound * (1.0 + JACOBIAN_TOL * self.scale)
            });
            let index = if audit.in_ar {
                let hess = space.hessian_from_derivatives(b, audit.du, sol.d2u(&space, b).map_err(|e| e.to_string())?);
                let states = jacobi_integrate(&space, b, audit.du, hess, g.transport_r, g.jacobi_step)
                    .map_err(|e| e.to_string())?;
                Some(index_form_check(&states, &family).map_err(|e| e.to_string())?)
            } else {
                None
            };
            entries.push(json!({
                "base": b, "du": audit.du, "image": audit.image, "in_u": audit.in_u, "in_ar": audit.in_ar,
                "ar_worst_margin": audit.ar.as_ref().map(|c| c.worst_margin),
                "det_j": audit.det_j, "weighted_jacobian": audit.weighted_jacobian,
                "jacobian_bound": audit.jacobian_bound, "jacobian_bound_ok": jac_ok,
                "conjugate_time": audit.conjugate_time,
                "volume_monotone": mono.is_clean(), "trace_bound_min_slack": trace.min_slack(),
                "index_form_min": index.as_ref().map(|r| r.min_value),
                "index_form_argmin": index.as_ref().and_then(|r| r.argmin.map(|k| r.labels[k].clone())),
            }));
            if audit.in_ar {
                // The comparison statements only concern contact points.
                if jac_ok == Some(false) {
                    rec.violations.push(ViolationRecord {
                        series: format!("transport_{i}_jacobian"),
                        index: 0,
                        t: g.transport_r,
                        magnitude: audit.weighted_jacobian / audit.jacobian_bound - 1.0,
                        tolerance: JACOBIAN_TOL * self.scale,
                    });
                    flags.push((None, "the Jacobian bound"));
                }
                if let Some(ix) = &index {
                    if ix.min_value < -index_tol {
                        rec.violations.push(ViolationRecord {
                            series: format!("transport_{i}_index_form"),
                            index: ix.argmin.unwrap_or(0),
                            t: g.transport_r,
                            magnitude: -ix.min_value,
                            tolerance: index_tol,
                        });
                        flags.push((None, "index-form nonnegativity"));
                    }
                }
                flags.push((Some(mono.clone()), "monotonicity"));
                flags.push((Some(trace.clone()), "the trace bound"));
            }
            files.push(SeriesFile::from_series(&format!("transport_{i}_volume"), &mono, false));
            files.push(SeriesFile::from_series(&format!("transport_{i}_trace"), &trace, false));
        }
        for (series, what) in flags {
            match series {
                Some(s) => self.gate(&mut rec, &s, what),
                None => self.gate_flag(&mut rec, what),
            }
        }
        if !entries.iter().any(|e| e["in_ar"] == json!(true)) {
            rec.note("no base point is a certified contact point; comparison series are informational");
        }
        rec.result = json!({"entries": entries});
        for f in files {
            self.push_series(&mut rec, f);
        }
        Ok(rec)
    }

    fn inclusion(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("inclusion");
        let g = self.sc.grids.clone();
        let spec = self.sample_spec();
        let space = self.space.clone();
        self.neumann()?;
        let sol = &self.neumann.as_ref().expect("solved").as_ref().expect("ok").sol;
        rec.tolerance = json!({"ar": AR_TOL});
        rec.grid = json!({"targets": g.inclusion_targets, "r": g.inclusion_r, "ar_sample": spec, "targets_on": "one ray, uniform in [0, r - R)"});
        let mut out = Vec::new();
        let mut missed = false;
        for &r in &g.inclusion_r {
            if r - sol.radius > space.r_max {
                return Err(format!("far set of r = {r} leaves the chart r_max = {}", space.r_max));
            }
            let rep = inclusion_audit(&space, sol, r, g.inclusion_targets, &spec).map_err(|e| e.to_string())?;
            for (k, e) in rep.entries.iter().enumerate() {
                if !e.in_ar {
                    missed = true;
                    rec.violations.push(ViolationRecord {
                        series: format!("inclusion_r{r}"),
                        index: k,
                        t: e.target,
                        magnitude: e.worst_margin.map(|m| -m).unwrap_or(f64::INFINITY),
                        tolerance: AR_TOL,
                    });
                }
            }
            let worst = rep.entries.iter().filter_map(|e| e.worst_margin).fold(f64::INFINITY, f64::min);
            out.push(json!({
                "r": r, "far_radius": rep.far_radius, "vacuous": rep.vacuous,
                "coverage": rep.coverage, "covered": rep.entries.iter().filter(|e| e.in_ar).count(),
                "targets": rep.entries.len(), "worst_ar_margin": worst.is_finite().then_some(worst),
            }));
        }
        if missed {
            self.gate_flag(&mut rec, "inclusion");
        }
        rec.result = json!({"radii": out});
        Ok(rec)
    }

    fn riccati(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("riccati");
        let g = self.sc.grids.clone();
        let tol = g.riccati_tol * self.scale;
        let space = self.space.clone();
        self.neumann()?;
        let sol = &self.neumann.as_ref().expect("solved").as_ref().expect("ok").sol;
        rec.tolerance = json!({"residual": tol, "trace_defect": tol});
        rec.grid = json!({"bases": g.transport_bases, "duration": g.transport_r, "step": g.jacobi_step, "refined_step": g.jacobi_step / 2.0});
        let mut entries = Vec::new();
        for &b in &g.transport_bases {
            let du = sol.du(&space, b).map_err(|e| e.to_string())?;
            let d2u = sol.d2u(&space, b).map_err(|e| e.to_string())?;
            let hess = space.hessian_from_derivatives(b, du, d2u);
            let run = |h: f64| -> Result<_, String> {
                let states = jacobi_integrate(&space, b, du, hess, g.transport_r, h).map_err(|e| e.to_string())?;
                // Past a conjugate point Q is undefined.
                let end = match conjugate_scan(&states) {
                    Some(t) => states.iter().position(|s| s.t >= t).unwrap_or(states.len()).max(2),
                    None => states.len(),
                };
                let rep = riccati_check(&states[..end], f64::INFINITY).map_err(|e| e.to_string())?;
                Ok((rep, conjugate_scan(&states)))
            };
            let (coarse, conj) = run(g.jacobi_step)?;
            let (fine, _) = run(g.jacobi_step / 2.0)?;
            let worst = coarse.max_residual.max(coarse.max_trace_defect);
            entries.push(json!({
                "base": b, "max_residual": coarse.max_residual, "max_trace_defect": coarse.max_trace_defect,
                "max_symmetry_defect": coarse.max_symmetry_defect,
                "refined_residual": fine.max_residual, "refined_trace_defect": fine.max_trace_defect,
                "residual_reduction": coarse.max_residual / fine.max_residual,
                "conjugate_time": conj,
            }));
            if !(worst <= tol) {
                rec.raise(Status::Error);
                rec.note(format!(
                    "{}",
                    ComparisonError::IntegratorStep { residual: worst, tolerance: tol }
                ));
            }
        }
        rec.result = json!({"entries": entries});
        Ok(rec)
    }

    fn sobolev(&mut self, isoperimetric: bool) -> Result<CheckRecord, String> {
        let name = if isoperimetric { "isoperimetric" } else { "sobolev" };
        let mut rec = CheckRecord::new(name);
        let avr = self.avr()?;
        let space = self.space.clone();
        let (usable, skipped): (Vec<f64>, Vec<f64>) = self
            .sc
            .grids
            .sobolev_r
            .iter()
            .partition(|&&r| r - self.k.radius <= space.r_max);
        rec.tolerance = json!({"rel": SOBOLEV_TOL, "avr_settle_rel": AVR_SETTLE_TOL, "quadrature": quad_json()});
        rec.grid = json!({"r": usable, "skipped_r": skipped, "neumann_cells": self.sc.grids.neumann_cells, "avr_levels": AVR_LEVELS});
        let sobolev = if isoperimetric {
            isoperimetric_check(&space, &self.k, &usable, &avr).map(|r| {
                let v = json!({
                    "boundary_measure": r.boundary_measure, "volume": r.volume,
                });
                (r.sobolev, v)
            })
        } else {
            sobolev_audit(&space, &self.k, &self.f0, &usable, &avr).map(|r| (r, Value::Null))
        };
        let (rep, extra) = match sobolev {
            Ok(v) => v,
            Err(AbpError::ChainViolation { r, lhs, rhs }) => {
                rec.violations.push(ViolationRecord {
                    series: "chain".into(),
                    index: 0,
                    t: r,
                    magnitude: lhs - rhs,
                    tolerance: SOBOLEV_TOL,
                });
                self.gate_flag(&mut rec, "the volume chain");
                rec.result = json!({"chain_violation": {"r": r, "far_volume": lhs, "transported_bound": rhs}});
                return Ok(rec);
            }
            Err(e) => return Err(e.to_string()),
        };
        // The divided far-set volume at the largest radius stands in for the
        // asymptotic volume ratio in the limit form.
        let divided = rep.chain.last().map(|c| {
            json!({
                "r": c.r, "far_volume_divided": c.far_volume_divided,
                "limit_bound": rep.limit_bound,
                "holds": c.far_volume_divided <= rep.limit_bound * (1.0 + SOBOLEV_TOL),
            })
        });
        if rep.trivial_rhs {
            rec.note("trivial RHS: the asymptotic volume ratio is zero");
        }
        if !avr.settled {
            rec.note("AVR estimate not settled; the RHS uses its error bar");
        }
        match rep.verdict {
            AuditVerdict::Pass => {}
            AuditVerdict::Fail => {
                rec.violations.push(ViolationRecord {
                    series: name.into(),
                    index: 0,
                    t: rep.radius,
                    magnitude: rep.rhs_interval.lo - rep.lhs,
                    tolerance: SOBOLEV_TOL,
                });
                rec.raise(Status::Violation);
            }
            AuditVerdict::HypothesisViolated => {
                rec.raise(Status::HypothesisViolated);
                rec.note(self.hypothesis_note("the inequality"));
            }
        }
        if let Some(d) = &divided {
            if d["holds"] == json!(false) {
                rec.violations.push(ViolationRecord {
                    series: "divided_chain".into(),
                    index: 0,
                    t: d["r"].as_f64().unwrap_or(f64::NAN),
                    magnitude: d["far_volume_divided"].as_f64().unwrap_or(f64::NAN) - rep.limit_bound,
                    tolerance: SOBOLEV_TOL,
                });
                self.gate_flag(&mut rec, "the limit chain");
            }
        }
        let chain_r: Vec<f64> = rep.chain.iter().map(|c| c.r).collect();
        let far: Vec<f64> = rep.chain.iter().map(|c| c.far_volume_divided).collect();
        let bound: Vec<f64> = rep.chain.iter().map(|c| c.transported_bound_divided).collect();
        rec.result = json!({"audit": rep, "divided_limit_check": divided, "isoperimetric": extra});
        if !chain_r.is_empty() {
            let mut plot = Plot::new("volume chain divided by r^(m+alpha)", "r", true);
            plot.y_label = "divided volume".into();
            plot.lines.push(Line::solid("far set", &chain_r, &far));
            plot.lines.push(Line::dashed("transported bound", &chain_r, &bound));
            let file = SeriesFile {
                stem: format!("{name}_chain"),
                csv: columns_csv(&["r", "far_volume_divided", "transported_bound_divided"], &[&chain_r, &far, &bound]),
                plot: Some(plot),
            };
            self.push_series(&mut rec, file);
        }
        Ok(rec)
    }

    fn explore(&mut self) -> Result<CheckRecord, String> {
        let mut rec = CheckRecord::new("explore");
        let family = Family::parse(&format!(
            "m = {}\nr_max = {}\nseed = {}\n",
            self.space.m, self.space.r_max, self.sc.seed
        ))
        .map_err(|e| e.to_string())?;
        let budget = self.sc.grids.explore_budget;
        let table = explore(&family, budget).map_err(|e| e.to_string())?;
        rec.tolerance = json!({"cd": CD_TOL, "avr_settle_rel": AVR_SETTLE_TOL});
        rec.grid = json!({"budget": budget, "family_size": table.family_size, "cd_grid": family.cd_grid});
        rec.note("reports the best candidates found; existence is not asserted");
        let file = SeriesFile {
            stem: "explore".into(),
            csv: table.to_csv(),
            plot: None,
        };
        rec.result = serde_json::to_value(&table).map_err(|e| e.to_string())?;
        self.push_series(&mut rec, file);
        Ok(rec)
    }
}

/// Hypothesis violations and inconclusive estimates are not failures.
pub fn exit_code_for(status: Status) -> i32 {
    match status {
        Status::Error => EXIT_ERROR,
        Status::Violation => EXIT_VIOLATION,
        Status::Pass | Status::Inconclusive | Status::HypothesisViolated => EXIT_OK,
    }
}

/// Runs every check of `scenario`. Configuration problems are errors;
/// numerical failures of individual checks are recorded in the report.
pub fn execute(scenario: &Scenario) -> Result<RunOutput, CliError> {
    let space = scenario.space()?;
    let k = scenario.domain(&space)?;
    let f0 = scenario.f.build()?;
    let g = &scenario.grids;
    let grid_spec = GridSpec {
        points: g.cd_points,
        lo_fraction: g.cd_lo_fraction,
        refine_points: g.cd_refine_points,
    };
    let cd = space.cd_scan(&grid_spec)?;
    let hypothesis = Hypothesis {
        verdict: cd.verdict,
        certified: cd.verdict.is_certified(),
        min_eigenvalue: cd.min_eig,
        argmin_r: cd.argmin_r,
        zero_crossing: cd.zero_crossing,
        tolerance: cd.tolerance,
        grid: json!({
            "spacing": "log-uniform", "points": grid_spec.points, "refine_points": grid_spec.refine_points,
            "r_min": cd.grid.first(), "r_max": cd.grid.last(),
        }),
        lower_trust: space.warp.is_lower_trust() || space.density.is_lower_trust(),
    };
    let mut ctx = Ctx {
        sc: scenario,
        certified: cd.verdict.is_certified(),
        space,
        k,
        f0,
        cd,
        scale: scenario.tol_scale,
        neumann: None,
        avr: None,
        series: Vec::new(),
    };
    let checks: Vec<CheckRecord> = scenario.checks.iter().map(|&c| ctx.run(c)).collect();
    let status = checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass);
    let exit_code = exit_code_for(status);
    let report = Report {
        tool: "lab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: scenario.clone(),
        hypothesis,
        status,
        exit_code,
        checks,
    };
    Ok(RunOutput {
        report,
        series: ctx.series,
    })
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// `lab run`: loads, executes and writes. Returns the exit code.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let started = unix_seconds();
    let clock = Instant::now();
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if let Some(scale) = opts.tol_scale {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CliError::field("--tol-scale", format!("must be positive, got {scale}")));
        }
        scenario.tol_scale = scale;
    }
    let out_dir = opts
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("lab-out").join(&scenario.name));
    let output = execute(&scenario)?;
    let meta = json!({
        "scenario_file": path.display().to_string(),
        "started_unix": started,
        "finished_unix": unix_seconds(),
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
        "exit_code": output.report.exit_code,
    });
    write_outputs(&out_dir, &output.report, &output.series, &meta)?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(Status::Pass), 0);
        assert_eq!(exit_code_for(Status::HypothesisViolated), 0);
        assert_eq!(exit_code_for(Status::Inconclusive), 0);
        assert_eq!(exit_code_for(Status::Violation), 1);
        assert_eq!(exit_code_for(Status::Error), 2);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.01, 50.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert_eq!(g[4], 50.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use densitylab::abp::{
    inclusion_audit, isoperimetric_check, normalize_f, scaling_sides, sobolev_audit, solve_neumann_radial_with,
    transport, verify_lemma1, AuditVerdict, SampleSpec, NEUMANN_CELLS,
};
use densitylab::comparison::{
    avr_estimate, bishop_gromov, jacobi_integrate, mean_curvature_comparison, riccati_check, BallOrSphere,
};
use densitylab::geometry::{RadialProfile, RotSymSpace, SlicePoint};
use densitylab::{BallDomain, GridSpec, Verdict};
use densitylab_cli::report::SeriesFile;
use densitylab_cli::{execute, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn flat(m: usize, alpha: f64, r_max: f64) -> RotSymSpace {
    RotSymSpace::euclidean(m, alpha, r_max).unwrap()
}

fn presets() -> Vec<(&'static str, RotSymSpace)> {
    let unit = RadialProfile::constant(1.0);
    vec![
        ("euclidean m=3", flat(3, 1.0, 8.0)),
        (
            "sinh m=2",
            RotSymSpace::new(2, 1.0, RadialProfile::hyperbolic_like(), unit.clone(), 8.0).unwrap(),
        ),
        (
            "capped_power 0.5 m=3",
            RotSymSpace::new(3, 0.5, RadialProfile::capped_power(0.5).unwrap(), unit, 8.0).unwrap(),
        ),
        (
            "capped_power 0.8 + power_density 0.5 m=4",
            RotSymSpace::new(
                4,
                2.0,
                RadialProfile::capped_power(0.8).unwrap(),
                RadialProfile::power_density(0.5),
                8.0,
            )
            .unwrap(),
        ),
        (
            "gaussian_density m=2",
            flat(2, 1.0, 8.0).with_density(RadialProfile::gaussian_density()).unwrap(),
        ),
    ]
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// 1. Flat equality benchmark.
fn flat_equality() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for m in [2usize, 3, 4] {
        for alpha in [0.5, 1.0, 2.0] {
            for big_r in [1.0, 2.0] {
                let s = flat(m, alpha, 1e3);
                let k = BallDomain::new(&s, big_r).map_err(e)?;
                let nz = normalize_f(&s, &k, &RadialProfile::constant(1.0)).map_err(e)?;
                let n = m as f64 + alpha;
                let lambda = (m as f64 / (n * big_r)).powf(n - 1.0);
                let lam_err = (nz.lambda - lambda).abs();
                let sol = solve_neumann_radial_with(&s, &k, &nz.f, NEUMANN_CELLS, nz.lambda).map_err(e)?;
                let u_err = sol
                    .grid
                    .iter()
                    .zip(&sol.u)
                    .map(|(&r, &u)| (u - r * r / (2.0 * big_r)).abs())
                    .fold(0.0, f64::max);
                let lemma = verify_lemma1(&s, &sol).map_err(e)?;
                // Equality: the lemma expression vanishes, so neither side
                // of the tolerance band is left.
                let lemma_err = lemma.max_value.abs();
                ensure(
                    lam_err <= 1e-12 && u_err <= 1e-8 && lemma_err <= 1e-8 && lemma.strictly_negative == 0,
                    format!(
                        "m={m} alpha={alpha} R={big_r}: lambda err {lam_err:e}, u err {u_err:e}, lemma1 {lemma_err:e}, \
                         {} strictly negative",
                        lemma.strictly_negative
                    ),
                )?;
                worst = (worst.0.max(lam_err), worst.1.max(u_err), worst.2.max(lemma_err));
            }
        }
    }
    Ok(format!(
        "18 cases; max |lambda err| {:.1e} (tol 1e-12), sup|u - r^2/2R| {:.1e} (tol 1e-8), lemma1 {:.1e} (tol 1e-8); {NEUMANN_CELLS} cells",
        worst.0, worst.1, worst.2
    ))
}

/// 2. Volume expansion along a transport geodesic.
fn volume_expansion() -> Outcome {
    let s = flat(2, 1.0, 1e3);
    let k = BallDomain::new(&s, 1.0).map_err(e)?;
    let nz = normalize_f(&s, &k, &RadialProfile::constant(1.0)).map_err(e)?;
    let sol = solve_neumann_radial_with(&s, &k, &nz.f, NEUMANN_CELLS, nz.lambda).map_err(e)?;
    let audit = transport(&s, &sol, 0.5, 2.0).map_err(e)?;
    let series = &audit.monotonicity;
    let oracle = |t: f64| (1.0 + 2.0 * t / 3.0).powi(-3) * (1.0 + t).powi(2);
    let mut worst = 0.0f64;
    let mut values = Vec::new();
    for t in [0.0, 1.0, 2.0] {
        let i = series
            .radii
            .iter()
            .position(|&x| (x - t).abs() < 1e-9)
            .ok_or(format!("t = {t} not on the grid"))?;
        let err = (series.normalized[i] - oracle(t)).abs();
        worst = worst.max(err);
        values.push(series.normalized[i]);
    }
    let min_slack = series
        .normalized
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    ensure(
        worst <= 1e-8 && min_slack >= -1e-9 && series.is_clean(),
        format!("max err {worst:e}, min per-step slack {min_slack:e}"),
    )?;
    Ok(format!(
        "values {:.6}, {:.6}, {:.6} at t = 0, 1, 2; max err {worst:.1e} (tol 1e-8); min per-step slack {min_slack:.1e} (tol -1e-9); step 1e-3",
        values[0], values[1], values[2]
    ))
}

/// 3. Riccati / Jacobi consistency and second-order convergence.
fn riccati_consistency() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut min_ratio = f64::INFINITY;
    for (name, s) in presets() {
        for &(s0, v, h) in &[(1.0, 0.5, (0.8, 0.6)), (2.0, -0.4, (0.3, 0.9))] {
            let run = |step: f64| {
                let states = jacobi_integrate(&s, s0, v, h, 1.0, step).map_err(e)?;
                riccati_check(&states, f64::INFINITY).map_err(e)
            };
            let coarse = run(1e-3)?;
            let fine = run(5e-4)?;
            let r_res = coarse.max_residual / fine.max_residual;
            let r_tr = coarse.max_trace_defect / fine.max_trace_defect;
            ensure(
                coarse.max_residual <= 1e-6 && coarse.max_trace_defect <= 1e-6 && r_res >= 3.0 && r_tr >= 3.0,
                format!(
                    "{name} s0={s0}: residual {:e}, trace defect {:e}, halving ratios {r_res:.2} / {r_tr:.2}",
                    coarse.max_residual, coarse.max_trace_defect
                ),
            )?;
            worst = (worst.0.max(coarse.max_residual), worst.1.max(coarse.max_trace_defect));
            min_ratio = min_ratio.min(r_res).min(r_tr);
        }
    }
    Ok(format!(
        "5 presets x 2 geodesics; max residual {:.1e}, max trace defect {:.1e} (tol 1e-6, step 1e-3); min halving ratio {min_ratio:.2} (need 3)",
        worst.0, worst.1
    ))
}

/// 4. Geodesic integrity.
fn geodesic_integrity() -> Outcome {
    let mut worst_drift = 0.0f64;
    for (name, s) in presets() {
        for k in 0..8 {
            let a = k as f64 * PI / 8.0 + 0.1;
            let start = SlicePoint::new(1.0, 0.3);
            let vel = (a.cos(), a.sin() / s.phi(1.0).v);
            let path = s.integrate_geodesic(start, vel, 3.0, 1e-2).map_err(e)?;
            let rate = path.drift_rate();
            ensure(rate <= 1e-8, format!("{name}: drift rate {rate:e} at angle {a}"))?;
            worst_drift = worst_drift.max(rate);
        }
    }
    let plane = flat(2, 1.0, 100.0);
    let mut worst_cos = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let a = 1.5;
            let b = 0.1 + 4.9 * i as f64 / 19.0;
            let th = PI * j as f64 / 19.0;
            let d = plane.distance(SlicePoint::new(a, 0.0), SlicePoint::new(b, th)).map_err(e)?;
            let exact = (a * a + b * b - 2.0 * a * b * th.cos()).max(0.0).sqrt();
            worst_cos = worst_cos.max((d - exact).abs());
        }
    }
    ensure(worst_cos <= 1e-6, format!("law of cosines error {worst_cos:e}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let spaces = presets();
    let mut worst_sym = 0.0f64;
    for _ in 0..100 {
        let (_, s) = &spaces[rng.random_range(0..spaces.len())];
        let p = SlicePoint::new(rng.random_range(0.0..4.0), rng.random_range(0.0..2.0 * PI));
        let q = SlicePoint::new(rng.random_range(0.0..4.0), rng.random_range(0.0..2.0 * PI));
        let d1 = s.distance(p, q).map_err(e)?;
        let d2 = s.distance(q, p).map_err(e)?;
        worst_sym = worst_sym.max((d1 - d2).abs());
    }
    ensure(worst_sym <= 1e-6, format!("symmetry error {worst_sym:e}"))?;
    Ok(format!(
        "drift {worst_drift:.1e}/unit time (tol 1e-8, 40 geodesics); law of cosines {worst_cos:.1e} (tol 1e-6, 20x20 grid); symmetry {worst_sym:.1e} (tol 1e-6, 100 pairs)"
    ))
}

/// 5. Bishop–Gromov and mean-curvature comparison.
fn bishop_gromov_checks() -> Outcome {
    let plane = flat(2, 1.0, 1e3);
    let radii: Vec<f64> = (0..200).map(|i| 0.01 * (5000.0f64).powf(i as f64 / 199.0)).collect();
    let ball = bishop_gromov(&plane, &radii, BallOrSphere::Ball).map_err(e)?;
    let err = radii
        .iter()
        .zip(&ball.normalized)
        .map(|(r, v)| (v - PI / r).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-6 && ball.is_clean(), format!("flat ball series err {err:e}, clean {}", ball.is_clean()))?;

    let t: Vec<f64> = (0..400).map(|i| 0.01 * (5000.0f64).powf(i as f64 / 399.0)).collect();
    let examples = [
        ("flat", plane.clone()),
        ("power_density q=1", plane.with_density(RadialProfile::power_density(1.0)).map_err(e)?),
        (
            "power_density q=0.5 m=3",
            flat(3, 0.5, 1e3).with_density(RadialProfile::power_density(0.5)).map_err(e)?,
        ),
    ];
    let mut worst = f64::NEG_INFINITY;
    for (name, s) in &examples {
        let audit = mean_curvature_comparison(s, &t).map_err(e)?;
        let cap = s.m as f64 - 1.0 + s.alpha;
        for (ti, v) in t.iter().zip(&audit.comparison.values) {
            let excess = v * ti - cap;
            worst = worst.max(excess);
            ensure(excess <= 1e-9, format!("{name}: lhs*t exceeds {cap} by {excess:e} at t = {ti}"))?;
        }
    }
    let sinh = RotSymSpace::new(2, 1.0, RadialProfile::hyperbolic_like(), RadialProfile::constant(1.0), 20.0)
        .map_err(e)?;
    let grid: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
    let hyp = bishop_gromov(&sinh, &grid, BallOrSphere::Ball).map_err(e)?;
    let v = hyp.monotone_violation.ok_or("hyperbolic monotonicity violation not detected")?;
    Ok(format!(
        "flat ball ratio vs pi/r {err:.1e} (tol 1e-6, 200 radii in [0.01, 50]); max lhs*t - (m-1+alpha) {worst:.1e} (tol 1e-9); sinh violation at r = {:.2}",
        v.t
    ))
}

/// 6. CD scan of the Gaussian density.
fn cd_scan_gaussian() -> Outcome {
    let s = flat(2, 1.0, 20.0).with_density(RadialProfile::gaussian_density()).map_err(e)?;
    let mut worst = 0.0f64;
    for i in 1..=200 {
        let r = 0.025 * i as f64;
        let (radial, _) = s.bakry_emery_eigs(r).map_err(e)?;
        worst = worst.max((radial - (1.0 - r * r)).abs());
    }
    let rep = s.cd_scan(&GridSpec::default()).map_err(e)?;
    let z = rep.zero_crossing.ok_or("no zero crossing located")?;
    ensure(
        worst <= 1e-8 && (z - 1.0).abs() <= 1e-4 && rep.verdict == Verdict::Violated,
        format!("eig err {worst:e}, crossing {z}, verdict {}", rep.verdict.as_str()),
    )?;
    Ok(format!(
        "radial eigenvalue vs 1 - r^2 {worst:.1e} (tol 1e-8, 200 radii in (0, 5]); zero crossing {z:.8} (tol 1e-4); verdict {}",
        rep.verdict.as_str()
    ))
}

/// 7. AVR of the flat plane with α = 1.
fn avr_flat() -> Outcome {
    let s = flat(2, 1.0, 1e3);
    let avr = avr_estimate(&s, 1.0).map_err(e)?;
    let covers = avr.estimate - avr.extrapolation_error <= 0.0 && 0.0 <= avr.estimate + avr.extrapolation_error;
    ensure(
        avr.estimate <= 1e-3 && covers,
        format!("estimate {:e} +- {:e}", avr.estimate, avr.extrapolation_error),
    )?;
    Ok(format!(
        "estimate {:.1e} +- {:.1e} (need <= 1e-3 and covering 0); r_max 1e3, dyadic levels {}",
        avr.estimate,
        avr.extrapolation_error,
        avr.radii.len()
    ))
}

/// 8. Inclusion of the far set in the image of the contact set.
fn inclusion() -> Outcome {
    let s = flat(2, 1.0, 1e3);
    let k = BallDomain::new(&s, 1.0).map_err(e)?;
    let nz = normalize_f(&s, &k, &RadialProfile::constant(1.0)).map_err(e)?;
    let sol = solve_neumann_radial_with(&s, &k, &nz.f, NEUMANN_CELLS, nz.lambda).map_err(e)?;
    let spec = SampleSpec {
        radial: 64,
        angular: 32,
        refine_rounds: 2,
    };
    let mut parts = Vec::new();
    for r in [5.0, 10.0, 50.0] {
        let rep = inclusion_audit(&s, &sol, r, 64, &spec).map_err(e)?;
        ensure(
            rep.coverage == 1.0 && rep.entries.len() == 64,
            format!("r = {r}: coverage {} of {}", rep.coverage, rep.entries.len()),
        )?;
        parts.push(format!("r={r}: {}/64", rep.entries.iter().filter(|e| e.in_ar).count()));
    }
    Ok(format!("{}; A_r certified on 64x32 slice grids", parts.join(", ")))
}

/// 9. Sobolev and isoperimetric audits with trivial right-hand side.
fn sobolev_flat() -> Outcome {
    let mut notes = Vec::new();
    for (m, big_r) in [(2usize, 1.0), (3, 2.0)] {
        let s = flat(m, 1.0, 1e3);
        let k = BallDomain::new(&s, big_r).map_err(e)?;
        let avr = avr_estimate(&s, 1.0).map_err(e)?;
        let sphere = if m == 2 { 2.0 * PI } else { 4.0 * PI };
        let boundary = sphere * big_r.powi(m as i32 - 1);
        let iso = isoperimetric_check(&s, &k, &[10.0, 1e3], &avr).map_err(e)?;
        let sob = sobolev_audit(&s, &k, &RadialProfile::constant(1.0), &[10.0, 1e3], &avr).map_err(e)?;
        // A bump whose left side reduces to one-dimensional integrals.
        let bump = RadialProfile::gaussian_bump(1.0, 0.5, 0.4);
        let sides = scaling_sides(&s, &k, &bump).map_err(e)?;
        let g = |r: f64| 0.5 * (-r * r / 0.32).exp();
        let closed_gradient = if m == 2 {
            simpson(|r| 2.0 * PI * r * r * g(r) / 0.16, 0.0, big_r, 20_000)
        } else {
            simpson(|r| 4.0 * PI * r.powi(3) * g(r) / 0.16, 0.0, big_r, 20_000)
        };
        let closed_boundary = boundary * (1.0 + g(big_r));
        let bump_err = (sides.lhs() - closed_gradient - closed_boundary).abs();
        let lhs_err = (iso.boundary_measure - boundary).abs().max((sob.lhs - boundary).abs());
        let link = sob.chain.iter().find(|c| c.r == 1e3).ok_or("no chain link at r = 1e3")?;
        let limit_ok = link.far_volume_divided <= sob.limit_bound;
        ensure(
            sob.trivial_rhs && iso.trivial_rhs && lhs_err <= 1e-8 && bump_err <= 1e-8 && limit_ok
                && sob.verdict == AuditVerdict::Pass,
            format!(
                "m={m}: trivial {} / {}, lhs err {lhs_err:e}, bump err {bump_err:e}, divided {:e} vs limit {:e}",
                sob.trivial_rhs, iso.trivial_rhs, link.far_volume_divided, sob.limit_bound
            ),
        )?;
        notes.push(format!(
            "m={m}: lhs err {:.1e}, divided far set {:.3e} <= {:.3e}",
            lhs_err.max(bump_err),
            link.far_volume_divided,
            sob.limit_bound
        ));
    }
    Ok(format!("trivial RHS; {} (tol 1e-8)", notes.join("; ")))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn render(series: &[SeriesFile]) -> Vec<(String, String, String)> {
    series
        .iter()
        .map(|s| (s.stem.clone(), s.csv.clone(), s.plot.as_ref().map(|p| p.render()).unwrap_or_default()))
        .collect()
}

/// 10. Determinism of the full flat benchmark scenario.
fn determinism() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/flat_benchmark.lab");
    let sc = Scenario::load(&path).map_err(e)?;
    let a = execute(&sc).map_err(e)?;
    let b = execute(&sc).map_err(e)?;
    let (ja, jb) = (a.report.to_json().map_err(e)?, b.report.to_json().map_err(e)?);
    ensure(ja == jb, "report.json differs between identical runs".into())?;
    ensure(render(&a.series) == render(&b.series), "series or plots differ".into())?;
    ensure(a.exit_code() == 0, format!("flat benchmark exit code {}", a.exit_code()))?;
    Ok(format!(
        "flat benchmark, {} checks, exit 0; report.json ({} bytes) and {} series identical across runs",
        a.report.checks.len(),
        ja.len(),
        a.series.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<f64>); 10] = [
        ("1 flat equality benchmark", flat_equality, Some(5.0)),
        ("2 volume expansion", volume_expansion, None),
        ("3 Riccati/Jacobi consistency", riccati_consistency, None),
        ("4 geodesic integrity", geodesic_integrity, None),
        ("5 Bishop-Gromov and mean curvature", bishop_gromov_checks, Some(30.0)),
        ("6 CD scan of the Gaussian density", cd_scan_gaussian, None),
        ("7 AVR estimator", avr_flat, None),
        ("8 inclusion", inclusion, Some(60.0)),
        ("9 Sobolev/isoperimetric audits", sobolev_flat, None),
        ("10 determinism of the full suite", determinism, None),
    ];
    let suite = Instant::now();
    let mut failures = 0;
    for (name, f, budget) in criteria {
        let clock = Instant::now();
        let outcome = f();
        let secs = clock.elapsed().as_secs_f64();
        let outcome = match (outcome, budget) {
            (Ok(msg), Some(limit)) if secs > limit => Err(format!("{msg}; took {secs:.1} s, limit {limit} s")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("PASS  {name}: {msg} [{secs:.2} s]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL  {name}: {msg} [{secs:.2} s]");
            }
        }
    }
    let total = suite.elapsed().as_secs_f64();
    if total > 300.0 {
        failures += 1;
        println!("FAIL  suite runtime {total:.1} s exceeds 300 s");
    } else {
        println!("PASS  suite runtime {total:.1} s (limit 300 s)");
    }
    println!("{} of 10 criteria passed", 10 - failures.min(10));
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

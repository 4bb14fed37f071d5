use densitylab::abp::{normalize_f, scaling_sides, solve_neumann_radial, transport, verify_lemma1, BallDomain};
use densitylab::comparison::{
    bishop_gromov, index_form_check, jacobi_propagate, mean_curvature_comparison, riccati_check,
    volume_expansion_series, weighted_trace_bound, BallOrSphere, ZFamily,
};
use densitylab::curvature::GridSpec;
use densitylab::geometry::{RadialProfile, RotSymSpace, SlicePoint};
use densitylab::quadrature::{integrate, QuadTolerance};
use proptest::prelude::*;

fn presets() -> Vec<RotSymSpace> {
    let unit = RadialProfile::constant(1.0);
    vec![
        RotSymSpace::euclidean(3, 1.0, 8.0).unwrap(),
        RotSymSpace::new(3, 1.0, RadialProfile::hyperbolic_like(), unit.clone(), 8.0).unwrap(),
        RotSymSpace::new(2, 0.5, RadialProfile::capped_power(0.6).unwrap(), unit, 8.0).unwrap(),
        RotSymSpace::new(
            4,
            2.0,
            RadialProfile::capped_power(0.8).unwrap(),
            RadialProfile::power_density(0.5),
            8.0,
        )
        .unwrap(),
        RotSymSpace::euclidean(2, 1.0, 8.0)
            .unwrap()
            .with_density(RadialProfile::gaussian_density())
            .unwrap(),
    ]
}

fn point() -> impl Strategy<Value = SlicePoint> {
    (0.0..4.0f64, 0.0..std::f64::consts::TAU).prop_map(|(s, th)| SlicePoint::new(s, th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn distance_symmetric_and_triangular(idx in 0usize..5, p in point(), q in point(), x in point()) {
        let s = &presets()[idx];
        let pq = s.distance(p, q).unwrap();
        let qp = s.distance(q, p).unwrap();
        prop_assert!((pq - qp).abs() <= 1e-6);
        let px = s.distance(p, x).unwrap();
        let xq = s.distance(x, q).unwrap();
        prop_assert!(pq <= px + xq + 1e-6);
        prop_assert!(pq >= 0.0);
    }

    #[test]
    fn density_scaling_leaves_eigenvalues(idx in 0usize..5, c in 0.01..100.0f64, r in 0.05..7.5f64) {
        let s = &presets()[idx];
        let scaled = s.with_density(s.density.scaled(c)).unwrap();
        let (a, b) = s.bakry_emery_eigs(r).unwrap();
        let (a2, b2) = scaled.bakry_emery_eigs(r).unwrap();
        prop_assert!((a - a2).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!((b - b2).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn coarea_consistency(idx in 0usize..5, big_r in 0.1..6.0f64) {
        let s = &presets()[idx];
        let direct = s.weighted_ball_volume(big_r).unwrap();
        let sliced = integrate(|t| s.weighted_sphere_area(t.max(1e-300)).unwrap(), 0.0, big_r, QuadTolerance::default())
            .unwrap()
            .value;
        prop_assert!((direct - sliced).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn hessian_matches_second_differences(idx in 0usize..5, r in 0.5..6.0f64) {
        // Second differences of u along the radial geodesic and along the
        // geodesic leaving (r, 0) tangentially.
        let s = &presets()[idx];
        let u = RadialProfile::polynomial(vec![0.0, 0.0, 0.5, 0.0, 0.1]);
        let (rad, tan) = s.hessian_radial(&u, r).unwrap();
        let tangential_fd = |h: f64| {
            let v = 1.0 / s.phi(r).v;
            let end = |sign: f64| {
                s.integrate_geodesic(SlicePoint::new(r, 0.0), (0.0, sign * v), h, h / 64.0)
                    .unwrap()
                    .end()
                    .s
            };
            (u.value(end(1.0)) - 2.0 * u.value(r) + u.value(end(-1.0))) / (h * h)
        };
        let radial_fd = |h: f64| (u.value(r + h) - 2.0 * u.value(r) + u.value(r - h)) / (h * h);
        for (fd, exact) in [(&radial_fd as &dyn Fn(f64) -> f64, rad), (&tangential_fd, tan)] {
            let e1 = (fd(1e-2) - exact).abs();
            let e2 = (fd(5e-3) - exact).abs();
            prop_assert!(e1 < 1e-2 * (1.0 + exact.abs()));
            prop_assert!(e2 <= e1 / 3.0 || e2 < 1e-7);
        }
    }

    #[test]
    fn normalization_identity(
        m in 2usize..5,
        alpha in 0.3..3.0f64,
        big_r in 0.3..2.0f64,
        amp in 0.0..2.0f64,
        width in 0.2..1.0f64,
    ) {
        let s = RotSymSpace::new(m, alpha, RadialProfile::capped_power(0.7).unwrap(), RadialProfile::power_density(0.3), 10.0).unwrap();
        let k = BallDomain::new(&s, big_r).unwrap();
        let nz = normalize_f(&s, &k, &RadialProfile::gaussian_bump(1.0, amp, width)).unwrap();
        let sides = scaling_sides(&s, &k, &nz.f).unwrap();
        let rhs = s.dim_eff() * sides.power;
        prop_assert!((sides.lhs() - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn jacobi_trace_identity(idx in 0usize..5, s0 in 0.2..3.0f64, v in -0.9..0.9f64, h1 in -0.5..1.0f64, h2 in -0.4..1.0f64) {
        let s = &presets()[idx];
        let states = jacobi_propagate(s, s0, v, (h1, h2), 1.0, 1e-3);
        // Strongly contracting data can meet a conjugate point; that is a
        // legitimate outcome and covered elsewhere.
        if let Ok(states) = states {
            // The residual is a second-order finite difference of Q, so its
            // size follows Q''' and not just the integrator error.
            let rep = riccati_check(&states, 1e-5).unwrap();
            prop_assert!(rep.max_trace_defect <= 1e-6);
            prop_assert!(rep.max_symmetry_defect <= 1e-8);
        }
    }
}

#[test]
fn certified_spaces_have_clean_comparisons() {
    let certified: Vec<RotSymSpace> = presets()
        .into_iter()
        .filter(|s| s.cd_scan(&GridSpec::default()).unwrap().verdict.is_certified())
        .collect();
    assert!(certified.len() >= 2);
    let t_grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.02).collect();
    for s in &certified {
        let mc = mean_curvature_comparison(s, &t_grid).unwrap();
        assert!(mc.is_clean(), "{}", s.warp.name);
        let ball = bishop_gromov(s, &t_grid, BallOrSphere::Ball).unwrap();
        assert!(ball.is_clean(), "{}", s.warp.name);
        let sphere = bishop_gromov(s, &t_grid, BallOrSphere::Sphere).unwrap();
        assert!(sphere.is_clean(), "{}", s.warp.name);

        let k = BallDomain::new(s, 1.0).unwrap();
        let nz = normalize_f(s, &k, &RadialProfile::gaussian_bump(1.0, 0.5, 0.4)).unwrap();
        let sol = solve_neumann_radial(s, &k, &nz.f).unwrap();
        verify_lemma1(s, &sol).unwrap();
        for s_bar in [0.1, 0.4, 0.8] {
            let a = transport(s, &sol, s_bar, 3.0).unwrap();
            if a.in_ar {
                assert!(a.monotonicity.is_clean(), "{} at {s_bar}", s.warp.name);
                assert!(a.trace_bound.is_clean(), "{} at {s_bar}", s.warp.name);
                assert_eq!(a.jacobian_bound_ok, Some(true));
                let d2u = sol.d2u(s, s_bar).unwrap();
                let du = sol.du(s, s_bar).unwrap();
                let hess = s.hessian_from_derivatives(s_bar, du, d2u);
                let states = jacobi_propagate(s, s_bar, du, hess, 3.0, 1e-3).unwrap();
                let idx = index_form_check(&states, &ZFamily::standard(s.m, 7)).unwrap();
                assert!(idx.min_value >= -1e-9, "{}", idx.min_value);
            }
        }
    }
}

#[test]
fn violated_spaces_are_detected() {
    let t_grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.04).collect();
    for s in presets() {
        if s.cd_scan(&GridSpec::default()).unwrap().verdict.is_certified() {
            continue;
        }
        let mc = mean_curvature_comparison(&s, &t_grid).unwrap();
        let ball = bishop_gromov(&s, &t_grid, BallOrSphere::Ball).unwrap();
        let sphere = bishop_gromov(&s, &t_grid, BallOrSphere::Sphere).unwrap();
        // Transport of a unit-speed radial geodesic with f = 1.
        let states = jacobi_propagate(&s, 1.0, 0.9, (0.9, 0.9), 5.0, 1e-3).unwrap();
        let vol = volume_expansion_series(&s, &states, 1.0).unwrap();
        let tr = weighted_trace_bound(&s, &states, 1.0).unwrap();
        let detected = !mc.is_clean() || !ball.is_clean() || !sphere.is_clean() || !vol.is_clean() || !tr.is_clean();
        assert!(detected, "no auditor flagged {} / {}", s.warp.name, s.density.name);
    }
}

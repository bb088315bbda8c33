use navflow::analysis::check_condition;
use navflow::io::{parse_world, world_to_json};
use navflow::worldgen::{gen_sphere_world, gen_start, gen_world_2d, gen_world_nd, GenConfig, NdOptions};

/// Mean of `xs` lies within 4 standard errors of the uniform mean on
/// [lo, hi); samples recovered from eigen-decompositions get 1e-9 slack.
fn assert_uniform_mean(name: &str, xs: &[f64], lo: f64, hi: f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (hi - lo) / 12f64.sqrt();
    let z = (mean - 0.5 * (lo + hi)) / (sd / n.sqrt());
    assert!(z.abs() < 4.0, "{name}: mean {mean} is {z:.1} standard errors off");
    assert!(xs.iter().all(|&x| x >= lo - 1e-9 && x < hi + 1e-9), "{name}: sample outside [{lo}, {hi})");
}

#[test]
fn same_seed_same_world_bit_for_bit() {
    for seed in [0, 1, 2024, u64::MAX] {
        let a = gen_world_2d(&GenConfig::new(5, seed)).unwrap();
        let b = gen_world_2d(&GenConfig::new(5, seed)).unwrap();
        assert_eq!(world_to_json(&a, None).unwrap(), world_to_json(&b, None).unwrap());
    }
    let a = gen_world_2d(&GenConfig::new(5, 10)).unwrap();
    let b = gen_world_2d(&GenConfig::new(5, 11)).unwrap();
    assert_ne!(a.potential.target, b.potential.target);
}

#[test]
fn generated_worlds_round_trip_through_json_exactly() {
    let w = gen_world_2d(&GenConfig::new(4, 99)).unwrap();
    let back = parse_world(&world_to_json(&w, None).unwrap()).unwrap();
    assert_eq!(back.potential.target, w.potential.target);
    for (a, b) in back.obstacles.iter().zip(&w.obstacles) {
        assert_eq!(a.center, b.center);
        assert_eq!(a.radius, b.radius);
        assert_eq!(a.a.matrix(), b.a.matrix());
    }
}

#[test]
fn generated_worlds_are_valid_with_free_targets_and_starts() {
    for m in 1..=7 {
        for seed in 0..20 {
            let cfg = GenConfig::new(m, 1000 * m as u64 + seed);
            let w = gen_world_2d(&cfg).unwrap();
            assert_eq!(w.num_obstacles(), m);
            assert!(w.validate().is_empty());
            assert!(w.in_free_space(w.target()));
            assert!(w.target().iter().all(|c| c.abs() <= 10.0));
            let x0 = gen_start(&w, &cfg).unwrap();
            assert!(w.in_free_space(&x0));
            assert_eq!(x0, gen_start(&w, &cfg).unwrap());
        }
    }
}

/// The first obstacle can never leave the workspace (|c| ≤ 10√2, semiaxes
/// ≤ 4 < 20 − 10√2) or overlap another, so its parameters follow the
/// sampling ranges without rejection bias.
#[test]
fn first_obstacle_and_lambda_follow_the_sampling_ranges() {
    let n = 2000;
    let (mut cx, mut cy, mut r, mut mu, mut cos2, mut lambda) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for seed in 0..n {
        let w = gen_world_2d(&GenConfig::new(1, 50_000 + seed)).unwrap();
        let o = &w.obstacles[0];
        cx.push(o.center[0]);
        cy.push(o.center[1]);
        // eigenvalues {1, μ}: the largest semiaxis is r itself
        r.push(o.radius / o.a.min_eigenvalue().sqrt());
        mu.push(o.a.max_eigenvalue() / o.a.min_eigenvalue());
        let eig = o.a.eigen();
        let j = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
        let u = eig.eigenvectors.column(j);
        // the unit-eigenvalue axis is (cos θ, sin θ); cos 2θ ignores its sign
        cos2.push(u[0] * u[0] - u[1] * u[1]);
        lambda.push(w.potential.q.matrix()[(1, 1)]);
        assert_eq!(w.potential.q.matrix()[(0, 0)], 1.0);
    }
    assert_uniform_mean("center x", &cx, -10.0, 10.0);
    assert_uniform_mean("center y", &cy, -10.0, 10.0);
    assert_uniform_mean("semiaxis", &r, 2.0, 4.0);
    assert_uniform_mean("mu", &mu, 1.0, 10.0);
    assert_uniform_mean("lambda", &lambda, 0.0, 20.0);
    // θ uniform on [−π/2, π/2]: E[cos 2θ] = 0, sd 1/√2
    let mean = cos2.iter().sum::<f64>() / n as f64;
    assert!(mean.abs() < 4.0 * (0.5f64).sqrt() / (n as f64).sqrt(), "cos 2θ mean {mean}");
}

#[test]
fn sphere_worlds_satisfy_the_eccentricity_condition() {
    for seed in 0..30 {
        let w = gen_sphere_world(&GenConfig::new(1 + seed as usize % 5, 7_000 + seed)).unwrap();
        assert!(w.obstacles.iter().all(|o| o.a.matrix() == &nalgebra::DMatrix::identity(2, 2)));
        assert!(check_condition(&w).overall);
    }
}

#[test]
fn three_dimensional_worlds_are_valid() {
    let mut cfg = GenConfig::new(4, 5);
    cfg.dimension = 3;
    let w = gen_world_nd(&cfg, &NdOptions::planar_like(20.0)).unwrap();
    assert_eq!(w.dim(), 3);
    assert!(w.validate().is_empty());
    let w = gen_sphere_world(&cfg).unwrap();
    assert_eq!(w.dim(), 3);
    assert!(w.validate().is_empty());
}

#[test]
fn impossible_packing_reports_a_generation_error() {
    let mut cfg = GenConfig::new(200, 1);
    cfg.max_redraws = 500;
    assert!(matches!(gen_world_2d(&cfg), Err(navflow::NavError::Generation(_))));
}

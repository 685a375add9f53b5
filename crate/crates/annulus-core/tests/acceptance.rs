//! Acceptance gate: nine end-to-end criteria, each with pinned tolerances and
//! a wall-clock budget. Every test prints one PASS line (visible under
//! `--nocapture`); a failed assertion or a blown budget fails the criterion.

use std::time::{Duration, Instant};

use annulus_core::conevar::{
    breaking_path_test, discrete_energy, discrete_gradient, discrete_h1_norm, fibering_max,
    mountain_pass, project_cone, MountainPassOptions,
};
use annulus_core::geometry::{build_grid, AnnulusSpec, Field2D, Grid2D};
use annulus_core::nonlinearity::{assumption_report, eval_f, NonlinearitySpec, WeightSpec};
use annulus_core::orlicz::{luxemburg_norm, tm_probe};
use annulus_core::radial::{
    hardy_ratio, radial_identity_residual, solve_radial, RadialOptions, RadialProfile,
};
use annulus_core::stability::{
    angular_mode, stability_indicator, symmetry_breaking_report, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn finish(id: u32, label: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "criterion {id} ({label}): FAIL, runtime {elapsed:.2?} exceeds budget {budget:?}"
    );
    println!("criterion {id} ({label}): PASS in {elapsed:.2?} (budget {budget:?})");
}

fn benchmark() -> (AnnulusSpec, NonlinearitySpec) {
    let annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    let nonlin = NonlinearitySpec::power(4.0, 4.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    (annulus, nonlin)
}

fn benchmark_profile(annulus: &AnnulusSpec, nonlin: &NonlinearitySpec) -> RadialProfile {
    solve_radial(annulus, nonlin, 2001, &RadialOptions::default()).unwrap()
}

/// Random nonzero cone fields vanishing at the radial boundary.
fn cone_samples(grid: &Grid2D, count: usize, seed: u64) -> Vec<Field2D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r0, r1) = (grid.spec().r_inner(), grid.spec().r_outer());
    (0..count)
        .map(|_| {
            let mut f = Field2D::zeros(grid.nr(), grid.ntheta());
            for i in 1..grid.nr() - 1 {
                let r = grid.r_nodes()[i];
                let base = (r - r0) * (r1 - r);
                for j in 0..grid.ntheta() {
                    let t = grid.theta_nodes()[j];
                    f.set(i, j, base * (1.0 + t.cos()) * rng.gen_range(0.2..1.0));
                }
            }
            project_cone(&f, grid).into_field()
        })
        .collect()
}

#[test]
fn criterion_1_angular_identities() {
    let start = Instant::now();
    for dim in 3..=8u32 {
        let mode = angular_mode(dim, 256).unwrap();
        assert!(
            mode.integral_y().abs() <= 1e-10,
            "N={dim}: |∫y w dθ| = {:e}",
            mode.integral_y().abs()
        );
        let lhs = mode.integral_dy_squared();
        let rhs = 2.0 * dim as f64 * mode.integral_y_squared();
        assert!(
            (lhs - rhs).abs() <= 1e-10 * lhs.abs(),
            "N={dim}: Rayleigh identity gap {:e}",
            (lhs - rhs).abs()
        );
        if dim == 3 {
            assert!((lhs - 24.0 / 5.0).abs() <= 1e-10, "N=3 lhs = {lhs:.12}");
            assert!((rhs - 24.0 / 5.0).abs() <= 1e-10, "N=3 rhs = {rhs:.12}");
        }
    }
    finish(1, "angular identities", start, Duration::from_secs(1));
}

#[test]
fn criterion_2_radial_benchmark() {
    let start = Instant::now();
    let (annulus, nonlin) = benchmark();
    let profile = benchmark_profile(&annulus, &nonlin);
    let u = profile.u();
    assert!(u[0].abs() <= 1e-10, "inner boundary value {:e}", u[0]);
    assert!(
        u[u.len() - 1].abs() <= 1e-10,
        "outer boundary value {:e}",
        u[u.len() - 1]
    );
    assert!(
        profile.residual_inf() <= 1e-9,
        "ODE residual {:e}",
        profile.residual_inf()
    );
    let identity = radial_identity_residual(&profile, &nonlin, &annulus).unwrap();
    assert!(identity <= 1e-6, "integrated identity residual {identity:e}");
    let ratio = hardy_ratio(&profile, &annulus).unwrap();
    assert!(ratio >= 6.25, "Hardy ratio {ratio} below the constant 6.25");
    finish(2, "radial benchmark", start, Duration::from_secs(10));
}

#[test]
fn criterion_3_second_variation_cross_check() {
    let start = Instant::now();
    let (annulus, nonlin) = benchmark();
    let profile = benchmark_profile(&annulus, &nonlin);
    // The report evaluates the 2-d quadratic form on an internal 256×128 grid
    // and compares it with 2ω_{N−2}·D·∫y²(cosθ)^{N−2}dθ.
    let report = symmetry_breaking_report(&annulus, &nonlin, &profile).unwrap();
    assert!(
        report.cross_check_rel() <= 1e-6,
        "structural identity relative gap {:e}",
        report.cross_check_rel()
    );
    finish(3, "second-variation cross-check", start, Duration::from_secs(30));
}

#[test]
fn criterion_4_symmetry_breaking_sign() {
    let start = Instant::now();
    let (annulus, nonlin) = benchmark();
    let profile = benchmark_profile(&annulus, &nonlin);
    let report = symmetry_breaking_report(&annulus, &nonlin, &profile).unwrap();
    assert_eq!(report.delta_certified(), 3.0);
    assert!(
        (report.delta_required() - 2.6).abs() <= 1e-12,
        "delta_required = {}",
        report.delta_required()
    );
    assert!(report.threshold_satisfied());
    assert!(
        report.second_variation() < 0.0,
        "second variation {:e} not negative",
        report.second_variation()
    );
    assert_eq!(report.verdict(), Verdict::Breaking);

    let mut signs = Vec::new();
    for p in [2.5f64, 3.0, 3.6, 4.0, 5.0] {
        let spec = NonlinearitySpec::power(p, p, WeightSpec::constant(1.0).unwrap()).unwrap();
        let prof = solve_radial(&annulus, &spec, 2001, &RadialOptions::default()).unwrap();
        let d = stability_indicator(&prof, &spec, &annulus).unwrap();
        if p >= 3.7 {
            assert!(d < 0.0, "p={p}: indicator D = {d:e} not negative");
        }
        signs.push(d.signum());
    }
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert!(changes <= 1, "indicator changed sign {changes} times");
    finish(4, "symmetry-breaking sign", start, Duration::from_secs(120));
}

#[test]
fn criterion_5_path_margins() {
    let start = Instant::now();
    let (annulus, nonlin) = benchmark();
    let profile = benchmark_profile(&annulus, &nonlin);
    let grid = build_grid(&annulus, 128, 64).unwrap();
    let taus = [0.02f64, 0.035, 0.05];
    let mut num = 0.0;
    let mut den = 0.0;
    for tau in taus {
        let rec = breaking_path_test(&profile, tau, &grid, &nonlin, &annulus).unwrap();
        assert!(
            rec.margin() > 0.0,
            "tau={tau}: margin {:e} not positive",
            rec.margin()
        );
        num += rec.margin() * tau * tau;
        den += tau.powi(4);
    }
    // Least-squares coefficient of margin ≈ c·τ² against −½·(second variation).
    let c = num / den;
    let report = symmetry_breaking_report(&annulus, &nonlin, &profile).unwrap();
    let half = -0.5 * report.second_variation();
    assert!(half > 0.0);
    assert!(
        (c - half).abs() <= 0.15 * half,
        "quadratic coefficient {c:e} vs −SV/2 = {half:e}: off by {:.1}%",
        100.0 * (c - half).abs() / half
    );
    finish(5, "breaking path margins", start, Duration::from_secs(120));
}

#[test]
fn criterion_6_mountain_pass() {
    let start = Instant::now();
    let (annulus, nonlin) = benchmark();
    let grid = build_grid(&annulus, 128, 64).unwrap();
    let opts = MountainPassOptions::default();
    let result = mountain_pass(&grid, &nonlin, &annulus, &opts).unwrap();
    assert!(result.converged(), "did not reach the gradient tolerance");
    assert!(
        result.grad_norm() <= 1e-6,
        "projected gradient norm {:e}",
        result.grad_norm()
    );
    assert!(result.energy() > 0.0, "energy {:e}", result.energy());
    assert!(!result.is_radial(), "candidate stayed radial");
    let profile = benchmark_profile(&annulus, &nonlin);
    assert!(
        result.energy() <= profile.energy() - 1e-4,
        "candidate level {:e} does not undercut the radial level {:e}",
        result.energy(),
        profile.energy()
    );
    finish(6, "mountain pass", start, Duration::from_secs(600));
}

#[test]
fn criterion_7_gradient_and_fibering_oracles() {
    let start = Instant::now();
    let (annulus, nonlin) = benchmark();
    let grid = build_grid(&annulus, 24, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    for u in cone_samples(&grid, 10, 0xacce97) {
        let g = discrete_gradient(&u, &grid, &nonlin, &annulus).unwrap();
        let mut phi = Field2D::zeros(grid.nr(), grid.ntheta());
        for i in 1..grid.nr() - 1 {
            for j in 0..grid.ntheta() {
                phi.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let h = 1e-6;
        let (mut up, mut um) = (u.clone(), u.clone());
        for ((vp, vm), pv) in up
            .values_mut()
            .iter_mut()
            .zip(um.values_mut())
            .zip(phi.values())
        {
            *vp += h * pv;
            *vm -= h * pv;
        }
        let jp = discrete_energy(&up, &grid, &nonlin, &annulus).unwrap();
        let jm = discrete_energy(&um, &grid, &nonlin, &annulus).unwrap();
        let fd = (jp - jm) / (2.0 * h);
        let dot: f64 = g.values().iter().zip(phi.values()).map(|(a, b)| a * b).sum();
        assert!(
            (dot - fd).abs() <= 1e-6 * fd.abs().max(1.0),
            "directional derivative {dot:e} vs finite difference {fd:e}"
        );
    }

    // Pure power: g′(t) = tA − t^{p−1}B vanishes at t* = (A/B)^{1/(p−2)},
    // with A the discrete H¹ form (λ = 1 here) and B = Σ w·φ·f(r,φ).
    let grid = build_grid(&annulus, 48, 24).unwrap();
    let raw = cone_samples(&grid, 1, 53).pop().unwrap();
    let cone = project_cone(&raw, &grid);
    let phi = cone.field();
    let a = discrete_h1_norm(phi, &grid).powi(2);
    let mut b = 0.0;
    for i in 0..grid.nr() {
        let r = grid.r_nodes()[i];
        for j in 0..grid.ntheta() {
            let w = grid.weights()[grid.idx(i, j)];
            let v = phi.get(i, j);
            b += w * v * eval_f(&nonlin, r, v).unwrap();
        }
    }
    let expected = (a / b).sqrt();
    let fib = fibering_max(&cone, &grid, &nonlin, &annulus).unwrap();
    assert!(
        (fib.t_star() - expected).abs() <= 1e-8 * expected,
        "t* = {:e} vs closed form {expected:e}",
        fib.t_star()
    );
    finish(7, "gradient and fibering oracles", start, Duration::from_secs(30));
}

#[test]
fn criterion_8_orlicz_suite() {
    let start = Instant::now();
    let (annulus, _) = benchmark();
    let grid = build_grid(&annulus, 48, 16).unwrap();

    // Constant field: the norm has the closed form |c|/√(ln(1+1/|A|)).
    let c = 1.7f64;
    let constant = Field2D::from_fn(&grid, |_, _| c);
    let lux = luxemburg_norm(&constant, &grid, 1e-10).unwrap();
    let expected = c / (1.0 + 1.0 / annulus.volume()).ln().sqrt();
    assert!(
        (lux.norm() - expected).abs() <= 1e-8 * expected,
        "constant-field norm {:e} vs closed form {expected:e}",
        lux.norm()
    );

    // Homogeneity and triangle inequality across 50 random cone samples.
    let tol = 1e-6;
    let samples = cone_samples(&grid, 50, 8123);
    let norms: Vec<f64> = samples
        .iter()
        .map(|f| luxemburg_norm(f, &grid, tol).unwrap().norm())
        .collect();
    for (idx, (f, &n)) in samples.iter().zip(&norms).enumerate() {
        let scale = [0.5, 2.0, 10.0][idx % 3];
        let mut scaled = f.clone();
        for v in scaled.values_mut() {
            *v *= scale;
        }
        let ns = luxemburg_norm(&scaled, &grid, tol).unwrap().norm();
        assert!(
            (ns - scale * n).abs() <= 2.0 * tol * scale * n,
            "sample {idx}: ‖{scale}·u‖ = {ns:e} vs {scale}·‖u‖ = {:e}",
            scale * n
        );
    }
    for (pair, ns) in samples.chunks(2).zip(norms.chunks(2)) {
        let mut sum = pair[0].clone();
        for (sv, vv) in sum.values_mut().iter_mut().zip(pair[1].values()) {
            *sv += vv;
        }
        let total = luxemburg_norm(&sum, &grid, tol).unwrap().norm();
        assert!(
            total <= ns[0] + ns[1] + 3.0 * tol * (ns[0] + ns[1]),
            "triangle inequality violated: {total:e} > {:e} + {:e}",
            ns[0],
            ns[1]
        );
    }

    // Exponential-integrability probe: bounded, saturation-free, stable
    // under one refinement.
    let coarse_grid = build_grid(&annulus, 32, 16).unwrap();
    let fine_grid = build_grid(&annulus, 64, 32).unwrap();
    let coarse = tm_probe(&coarse_grid, &annulus, 0.2, 64, 2024).unwrap();
    let fine = tm_probe(&fine_grid, &annulus, 0.2, 64, 2024).unwrap();
    assert_eq!(coarse.saturated_samples(), 0, "coarse probe saturated");
    assert_eq!(fine.saturated_samples(), 0, "fine probe saturated");
    assert!(
        fine.max_modulus() <= 2.0 * coarse.max_modulus(),
        "max modulus grew from {:e} to {:e} under refinement",
        coarse.max_modulus(),
        fine.max_modulus()
    );
    finish(8, "Orlicz suite", start, Duration::from_secs(120));
}

#[test]
fn criterion_9_assumption_ledger() {
    let start = Instant::now();
    let annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    let expo =
        NonlinearitySpec::exponential(1.5, 1, WeightSpec::constant(1.0).unwrap()).unwrap();
    let report = assumption_report(&expo, &annulus, 10_000).unwrap();
    assert_eq!(report.sigma, 3.0);
    assert!(
        report.sampled_violations.is_empty(),
        "exponential family: {} sampled violations",
        report.sampled_violations.len()
    );
    let power = NonlinearitySpec::power(4.0, 6.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    let report = assumption_report(&power, &annulus, 10_000).unwrap();
    assert_eq!(report.sigma, 4.0);
    assert!(
        report.sampled_violations.is_empty(),
        "power family: {} sampled violations",
        report.sampled_violations.len()
    );
    finish(9, "assumption ledger", start, Duration::from_secs(5));
}

use annulus_core::geometry::AnnulusSpec;
use annulus_core::nonlinearity::{NonlinearitySpec, WeightSpec};
use annulus_core::radial::{radial_identity_residual, solve_radial, RadialOptions};
use annulus_core::stability::{stability_indicator, symmetry_breaking_report};

fn main() {
    let annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    for p in [2.1, 2.25, 2.5, 3.0, 3.3, 3.6, 3.7, 4.0, 5.0] {
        let nonlin =
            NonlinearitySpec::power(p, p, WeightSpec::constant(1.0).unwrap()).unwrap();
        match solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()) {
            Ok(profile) => {
                let d = stability_indicator(&profile, &nonlin, &annulus).unwrap();
                let idr = radial_identity_residual(&profile, &nonlin, &annulus).unwrap();
                eprintln!(
                    "p={p:4}  D={d:+.6e}  umax={:.4}  idr={idr:.2e}",
                    profile.max_u()
                );
            }
            Err(e) => eprintln!("p={p:4}  ERROR {e:?}"),
        }
    }
    // Candidate stable configurations: want D > 0 (Hardy term dominant).
    let configs = [
        (3u32, 1.0, 6.0, 0.0, 2.5),
        (3, 1.0, 4.0, 0.0, 2.5),
        (3, 1.0, 8.0, 0.0, 2.7),
        (3, 1.0, 6.0, 0.0, 2.8),
        (3, 1.0, 4.0, 0.0, 3.0),
        (4, 1.0, 6.0, 0.0, 2.5),
    ];
    for (dim, r0, r1, lambda, p) in configs {
        let a = AnnulusSpec::new(dim, r0, r1, lambda).unwrap();
        let nl = NonlinearitySpec::power(p, p, WeightSpec::constant(1.0).unwrap()).unwrap();
        match solve_radial(&a, &nl, 2001, &RadialOptions::default()) {
            Ok(profile) => {
                let d = stability_indicator(&profile, &nl, &a).unwrap();
                eprintln!(
                    "cfg N={dim} [{r0},{r1}] λ={lambda} p={p}  D={d:+.4e}  umax={:.4}",
                    profile.max_u()
                );
            }
            Err(e) => eprintln!("cfg N={dim} [{r0},{r1}] λ={lambda} p={p}  ERROR {e}"),
        }
    }

    let nonlin = NonlinearitySpec::power(4.0, 4.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    for n in [2001usize, 4001, 8001, 16001] {
        let profile = solve_radial(&annulus, &nonlin, n, &RadialOptions::default()).unwrap();
        let t0 = std::time::Instant::now();
        let report = symmetry_breaking_report(&annulus, &nonlin, &profile).unwrap();
        eprintln!(
            "report n={n:6}  sv={:+.8e}  D={:+.8e}  Ay={:.8e}  cross={:.3e}  [{:?}]",
            report.second_variation(),
            report.indicator_d(),
            report.angular_factor(),
            report.cross_check_rel(),
            t0.elapsed()
        );
    }
}

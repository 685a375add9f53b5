use annulus_core::geometry::AnnulusSpec;
use annulus_core::nonlinearity::{NonlinearitySpec, WeightSpec};
use annulus_core::radial::{hardy_ratio, radial_identity_residual, solve_radial, RadialOptions};

fn run(label: &str, annulus: &AnnulusSpec, nonlin: &NonlinearitySpec, sizes: &[usize]) {
    for &n in sizes {
        let t0 = std::time::Instant::now();
        match solve_radial(annulus, nonlin, n, &RadialOptions::default()) {
            Ok(p) => {
                let idr = radial_identity_residual(&p, nonlin, annulus).unwrap();
                let hr = hardy_ratio(&p, annulus).unwrap();
                eprintln!(
                    "{label} n={n:5}  res={:.3e}  idr={:.3e}  energy={:.10e}  umax={:.6}  slope={:.8}  hardy={:.4}  [{:?}]",
                    p.residual_inf(),
                    idr,
                    p.energy(),
                    p.max_u(),
                    p.slope(),
                    hr,
                    t0.elapsed()
                );
            }
            Err(e) => eprintln!("{label} n={n:5}  ERROR {e:?}"),
        }
    }
}

fn main() {
    let cubic_annulus = AnnulusSpec::new(3, 1.0, 2.0, 0.0).unwrap();
    let cubic = NonlinearitySpec::power(3.0, 3.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    run("N3 cubic", &cubic_annulus, &cubic, &[201, 401, 801, 1601, 3201]);

    let bench_annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    let bench = NonlinearitySpec::power(4.0, 4.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    run("N5 bench", &bench_annulus, &bench, &[501, 1001, 2001, 4001]);

    let expo = NonlinearitySpec::exponential(1.9, 1, WeightSpec::constant(1.0).unwrap()).unwrap();
    run("N5 exp  ", &bench_annulus, &expo, &[401, 801, 1601]);
}

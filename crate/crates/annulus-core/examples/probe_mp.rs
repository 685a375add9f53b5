//! Scratch probe: mountain-pass convergence at several grids.

use annulus_core::conevar::{mountain_pass, MountainPassOptions};
use annulus_core::geometry::{build_grid, AnnulusSpec};
use annulus_core::nonlinearity::{NonlinearitySpec, WeightSpec};
use annulus_core::radial::{solve_radial, RadialOptions};
use annulus_core::Error;

fn main() {
    let annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    let nonlin = NonlinearitySpec::power(4.0, 4.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
    println!("radial energy {:.10e}", profile.energy());
    for (nr, nt) in [(128usize, 64usize)] {
        let grid = build_grid(&annulus, nr, nt).unwrap();
        let opts = MountainPassOptions {
            max_iters: 3000,
            ..MountainPassOptions::default()
        };
        let t0 = std::time::Instant::now();
        match mountain_pass(&grid, &nonlin, &annulus, &opts) {
            Ok(res) => println!(
                "{}x{}: converged it={} energy {:.8e} pg {:.3e} radial={} elapsed {:?}",
                nr, nt, res.iterations(), res.energy(), res.grad_norm(), res.is_radial(),
                t0.elapsed()
            ),
            Err(Error::IterationCap { iterations, grad_norm, best }) => println!(
                "{}x{}: CAP it={} pg {:.3e} energy {:.8e} radial={} log_len={} elapsed {:?}",
                nr, nt, iterations, grad_norm, best.energy(), best.is_radial(),
                best.path_log().len(), t0.elapsed()
            ),
            Err(e) => println!("{}x{}: ERR {e}", nr, nt),
        }
    }
}

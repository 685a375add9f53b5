//! Scratch probe: lifted-radial energy and fibering accuracy vs grid size.

use annulus_core::conevar::{discrete_energy, fibering_max, lift};
use annulus_core::geometry::{build_grid, AnnulusSpec};
use annulus_core::nonlinearity::{NonlinearitySpec, WeightSpec};
use annulus_core::radial::{solve_radial, RadialOptions};

fn main() {
    let annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    let nonlin = NonlinearitySpec::power(4.0, 4.0, WeightSpec::constant(1.0).unwrap()).unwrap();
    let profile = solve_radial(&annulus, &nonlin, 2001, &RadialOptions::default()).unwrap();
    println!("radial energy {:.12e}", profile.energy());
    for nr in [128usize, 256, 512, 1024, 2048, 4096] {
        let t0 = std::time::Instant::now();
        let grid = build_grid(&annulus, nr, 8).unwrap();
        let lifted = lift(&profile, &grid).unwrap();
        let e2d = discrete_energy(lifted.field(), &grid, &nonlin, &annulus).unwrap();
        let fib = fibering_max(&lifted, &grid, &nonlin, &annulus).unwrap();
        println!(
            "nr {:5}  rel energy err {:.3e}  t*-1 {:+.3e}  elapsed {:?}",
            nr,
            (e2d - profile.energy()).abs() / profile.energy(),
            fib.t_star() - 1.0,
            t0.elapsed()
        );
    }
}

use annulus_core::geometry::{build_grid, AnnulusSpec};

fn main() {
    let annulus = AnnulusSpec::new(5, 2.0, 3.0, 1.0).unwrap();
    let exact = annulus.volume();
    for (nr, nt) in [(32usize, 16usize), (48, 16), (64, 32)] {
        let grid = build_grid(&annulus, nr, nt).unwrap();
        let qvol: f64 = grid.weights().iter().sum();
        println!(
            "{nr}x{nt}: qvol = {qvol:.15e}  exact = {exact:.15e}  rel = {:.3e}",
            (qvol - exact).abs() / exact
        );
    }
}
